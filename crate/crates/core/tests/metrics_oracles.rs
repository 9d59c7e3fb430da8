mod common;

use std::sync::Arc;

use cover_core::metrics::{
    kernel_weights, quantize_direction, CoverageGrids, SphericalGaussianKernel, TransAccumulator, ViewAccumulator,
    VisiblePrimitive,
};
use cover_core::raster::{NormMode, WeightRow};
use cover_core::sphere::DirectionGrid;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_row(rng: &mut ChaCha8Rng, p: usize) -> WeightRow {
    let k = rng.gen_range(1..=p);
    let mut idx: Vec<usize> = (0..p).collect();
    for i in (1..p).rev() {
        idx.swap(i, rng.gen_range(0..=i));
    }
    let mut idx = idx[..k].to_vec();
    idx.sort_unstable();
    let pairs: Vec<(usize, f64)> = idx.into_iter().map(|i| (i, rng.gen_range(0.01..1.0))).collect();
    WeightRow::from_pairs(&pairs).normalized(NormMode::UnitL2).unwrap().0
}

fn dense_rows(rows: &[WeightRow], p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), p, |r, c| rows[r].to_dense(p)[c])
}

#[test]
fn trans_score_bounds_dense_product_and_is_tight_for_one_hot() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = 7;
    let rows: Vec<WeightRow> = (0..25).map(|_| random_row(&mut rng, p)).collect();
    let mut acc = TransAccumulator::new(p);
    rows.iter().for_each(|r| acc.update(r).unwrap());
    let dense = dense_rows(&rows, p);
    for c in 0..p {
        assert!((acc.col_sq_norms[c].sqrt() - dense.column(c).norm()).abs() < 1e-12);
    }
    for _ in 0..50 {
        let w = random_row(&mut rng, p);
        let ww = (&dense * w.to_dense(p)).norm();
        assert!(acc.score(&w).unwrap() >= ww - 1e-12);
    }
    for c in 0..p {
        let e = WeightRow::from_pairs(&[(c, 1.0)]);
        let ww = (&dense * e.to_dense(p)).norm();
        assert!((acc.score(&e).unwrap() - ww).abs() < 1e-12);
    }
}

#[test]
fn view_score_matches_dense_lifted_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let grid = DirectionGrid::icosphere(1);
    let kernel = SphericalGaussianKernel::new(4.0).unwrap();
    let p = 5;
    let l = grid.len();
    let mut acc = ViewAccumulator::new(p, l);
    let mut lifted: Vec<DVector<f64>> = Vec::new();
    let beta_for = |rng: &mut ChaCha8Rng, row: &WeightRow| -> Vec<Vec<f64>> {
        row.indices.iter().map(|_| kernel.weights(&grid, &common::random_direction(rng))).collect()
    };
    for _ in 0..30 {
        let row = random_row(&mut rng, p);
        let betas = beta_for(&mut rng, &row);
        acc.update(&row, &betas).unwrap();
        let mut v = DVector::zeros(p * l);
        for ((i, w), beta) in row.iter().zip(&betas) {
            for (k, b) in beta.iter().enumerate() {
                v[i * l + k] = w * b;
            }
        }
        lifted.push(v);
    }
    let wt = DMatrix::from_fn(lifted.len(), p * l, |r, c| lifted[r][c]);
    for _ in 0..20 {
        let row = random_row(&mut rng, p);
        let betas = beta_for(&mut rng, &row);
        let oracle: f64 = row
            .iter()
            .zip(&betas)
            .map(|((i, w), beta)| w * beta.iter().enumerate().map(|(k, b)| b * wt.column(i * l + k).norm()).sum::<f64>())
            .sum();
        assert!((acc.score(&row, &betas).unwrap() - oracle).abs() < 1e-9);
    }
}

#[test]
fn kernel_peak_is_the_quantized_patch() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let kernel = SphericalGaussianKernel::default();
    for grid in [DirectionGrid::icosphere(2), DirectionGrid::fibonacci(100), DirectionGrid::octahedral()] {
        for _ in 0..200 {
            let d = common::random_direction(&mut rng);
            let w = kernel_weights(&kernel, &grid, &d).unwrap();
            let argmax = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b]).then(b.cmp(&a))).unwrap();
            let q = quantize_direction(&grid, &d).unwrap();
            assert!(argmax == q || (w[argmax] - w[q]).abs() < 1e-12);
        }
    }
}

#[test]
fn observing_raises_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let p = 4;
    let mut acc = TransAccumulator::new(p);
    for _ in 0..10 {
        let row = random_row(&mut rng, p);
        let before = acc.score(&row).unwrap();
        acc.update(&row).unwrap();
        assert!(acc.score(&row).unwrap() > before);
    }
    let grid = Arc::new(DirectionGrid::icosphere(2));
    let mut cov = CoverageGrids::new(1, grid);
    let d = common::random_direction(&mut rng);
    let before = cov.coverage(0, &d);
    assert_eq!(before, 0.0);
    cov.observe(&[VisiblePrimitive { index: 0, direction: d, pixels: 3 }]).unwrap();
    assert!(cov.coverage(0, &d) > before);
}

proptest! {
    #[test]
    fn accumulation_order_does_not_matter(seed in any::<u64>(), n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = 6;
        let rows: Vec<WeightRow> = (0..n).map(|_| random_row(&mut rng, p)).collect();
        let mut fwd = TransAccumulator::new(p);
        let mut rev = TransAccumulator::new(p);
        rows.iter().for_each(|r| fwd.update(r).unwrap());
        rows.iter().rev().for_each(|r| rev.update(r).unwrap());
        for (a, b) in fwd.col_sq_norms.iter().zip(&rev.col_sq_norms) {
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
        let grid = Arc::new(DirectionGrid::icosphere(1));
        let vis: Vec<VisiblePrimitive> = (0..n)
            .map(|_| VisiblePrimitive { index: rng.gen_range(0..p), direction: common::random_direction(&mut rng), pixels: 1 })
            .collect();
        let mut a = CoverageGrids::new(p, grid.clone());
        let mut b = CoverageGrids::new(p, grid);
        vis.iter().for_each(|v| a.observe(std::slice::from_ref(v)).unwrap());
        vis.iter().rev().for_each(|v| b.observe(std::slice::from_ref(v)).unwrap());
        prop_assert_eq!(a.seen(), b.seen());
    }

    #[test]
    fn coverage_never_decreases(seed in any::<u64>(), n in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Arc::new(DirectionGrid::icosphere(2));
        let mut cov = CoverageGrids::new(2, grid);
        let probes: Vec<_> = (0..10).map(|_| common::random_direction(&mut rng)).collect();
        let mut last: Vec<f64> = probes.iter().map(|d| cov.coverage(0, d)).collect();
        for _ in 0..n {
            let v = VisiblePrimitive { index: rng.gen_range(0..2), direction: common::random_direction(&mut rng), pixels: 1 };
            cov.observe(&[v]).unwrap();
            let now: Vec<f64> = probes.iter().map(|d| cov.coverage(0, d)).collect();
            for (x, y) in now.iter().zip(&last) {
                prop_assert!(x >= y);
                prop_assert!((0.0..=1.0).contains(x));
            }
            last = now;
        }
    }
}
