mod common;

use common::{gauss_jordan_inverse, jacobi_eigen, lu_det, lu_log_abs_det, random_pd, random_unit};
use cover_core::fisher::{
    cauchy_schwarz_gap, exact_fig_ranking, exact_fig_scores, fig, fig_two_determinants, linear_objective, log_det_gram,
    min_norm_one_hot, quadratic_objective, rayleigh_extremes, GramMatrix,
};
use cover_core::raster::{NormMode, WeightMatrix};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

#[test]
fn log_det_matches_elimination_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let w = DMatrix::from_fn(50, 6, |_, _| rng.gen_range(0.0..1.0));
        let g = GramMatrix::from_design(&w);
        let expected = lu_det(g.matrix()).ln();
        let got = log_det_gram(&g).unwrap();
        assert!((got - expected).abs() <= 1e-8 * expected.abs().max(1.0), "{got} vs {expected}");
    }
}

#[test]
fn fig_matches_elimination_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let g = random_pd(&mut rng, 8);
        let w = random_unit(&mut rng, 8);
        let oracle = lu_log_abs_det(&(&g + &w * w.transpose())) - lu_log_abs_det(&g);
        let gram = GramMatrix::new(g).unwrap();
        let lemma = fig(&w, &gram).unwrap();
        let direct = fig_two_determinants(&w, &gram).unwrap();
        assert!((lemma - oracle).abs() <= 1e-8 * oracle.abs().max(1.0));
        assert!((lemma - direct).abs() <= 1e-8 * direct.abs().max(1.0));
    }
}

#[test]
fn rayleigh_directions_match_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..9 {
        let g = random_pd(&mut rng, n);
        let (values, vectors) = jacobi_eigen(&g);
        let r = rayleigh_extremes(&GramMatrix::new(g.clone()).unwrap()).unwrap();
        assert!(r.min_direction.dot(&vectors[0]).abs() > 1.0 - 1e-8);
        assert!(r.max_inverse_direction.dot(&vectors[0]).abs() > 1.0 - 1e-8);
        assert!((r.min_quadratic - values[0]).abs() < 1e-9 * values[n - 1]);
        let inv = gauss_jordan_inverse(&g);
        let q = r.max_inverse_direction.dot(&(&inv * &r.max_inverse_direction));
        assert!((r.max_inverse_quadratic - q).abs() < 1e-8 * q);
        assert!((r.max_inverse_quadratic - 1.0 / r.min_quadratic).abs() < 1e-8 * r.max_inverse_quadratic);
    }
}

#[test]
fn cauchy_schwarz_is_tight_at_jacobi_eigenvectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_pd(&mut rng, 6);
    let (_, vectors) = jacobi_eigen(&g);
    let gram = GramMatrix::new(g).unwrap();
    for v in &vectors {
        let c = cauchy_schwarz_gap(v, &gram).unwrap();
        assert!(c.gap.abs() <= 1e-8, "{c:?}");
    }
}

#[test]
fn one_hot_beats_dirichlet_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let dense = DMatrix::from_fn(30, 5, |_, _| rng.gen_range(0.0..1.0) * rng.gen_range(0.0..1.0));
        let w = WeightMatrix::from_dense(&dense, NormMode::Raw);
        let best = min_norm_one_hot(&w).unwrap();
        let oracle_norms: Vec<f64> = dense.column_iter().map(|c| c.norm()).collect();
        let oracle_min = oracle_norms.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((best.objective - oracle_min).abs() < 1e-12);
        let dir = Dirichlet::new(&[1.0; 5]).unwrap();
        for _ in 0..10_000 {
            let x: Vec<f64> = dir.sample(&mut rng);
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: Vec<f64> = x.iter().map(|v| v / n).collect();
            let dense_q = (&dense * DVector::from_vec(u.clone())).norm();
            assert!(dense_q >= best.objective - 1e-9);
            assert!((quadratic_objective(&w, &u) - dense_q).abs() < 1e-9);
            assert!(linear_objective(&w, &u) >= best.objective - 1e-9);
        }
    }
}

/// Three primitives. Training rows observe 0 and 1 heavily; candidate A
/// repeats those rows, candidate B observes primitive 2.
#[test]
fn fresh_primitive_ranks_first_by_direct_fig() {
    let train_dense = DMatrix::from_row_slice(
        6,
        3,
        &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.8, 0.6, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.6, 0.8, 0.0],
    );
    let a_dense = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.8, 0.6, 0.0]);
    let b_dense = DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 1.0, 0.0, 0.6, 0.8]);
    let ridge = 1e-6;
    let train = WeightMatrix::from_dense(&train_dense, NormMode::UnitL2);
    let a = WeightMatrix::from_dense(&a_dense, NormMode::UnitL2);
    let b = WeightMatrix::from_dense(&b_dense, NormMode::UnitL2);

    let g = train_dense.transpose() * &train_dense + DMatrix::identity(3, 3) * ridge;
    let direct = |cand: &DMatrix<f64>| {
        let ld = lu_log_abs_det(&g);
        cand.row_iter()
            .map(|r| {
                let w = r.transpose();
                lu_log_abs_det(&(&g + &w * w.transpose())) - ld
            })
            .sum::<f64>()
            / cand.nrows() as f64
    };
    let scores = exact_fig_scores(&train, &[a.clone(), b.clone()], ridge).unwrap();
    assert!((scores[0] - direct(&a_dense)).abs() < 1e-8);
    assert!((scores[1] - direct(&b_dense)).abs() < 1e-6 * direct(&b_dense));
    assert_eq!(exact_fig_ranking(&train, &[a.clone(), b.clone()], ridge).unwrap(), vec![1, 0]);
    assert_eq!(exact_fig_ranking(&train, &[b, a], ridge).unwrap(), vec![0, 1]);
}

fn pd_strategy() -> impl Strategy<Value = (DMatrix<f64>, DVector<f64>)> {
    (2usize..=20, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_pd(&mut rng, n), random_unit(&mut rng, n))
    })
}

proptest! {
    #[test]
    fn fig_is_non_negative((g, w) in pd_strategy()) {
        let gram = GramMatrix::new(g).unwrap();
        prop_assert!(fig(&w, &gram).unwrap() >= 0.0);
        prop_assert!(cauchy_schwarz_gap(&w, &gram).unwrap().gap >= -1e-10);
    }

    #[test]
    fn gram_accumulation_is_associative(rows in 1usize..40, cols in 1usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dense = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(0.0..1.0));
        let batch = GramMatrix::from_design(&dense);
        let mut seq = GramMatrix::zeros(cols);
        for r in dense.row_iter() {
            seq.add_dense(&r.transpose());
        }
        let sparse = GramMatrix::from_rows(&WeightMatrix::from_dense(&dense, NormMode::Raw));
        let scale = batch.matrix().amax().max(1.0);
        prop_assert!((seq.matrix() - batch.matrix()).amax() <= 1e-8 * scale);
        prop_assert!((sparse.matrix() - batch.matrix()).amax() <= 1e-8 * scale);
    }
}
