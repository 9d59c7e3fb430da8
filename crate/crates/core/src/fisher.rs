//! Dense Fisher-information oracles for small problems.
//!
//! With `W` the stacked observation rows and `G = WᵀW`, the Fisher
//! information of the colour regression is `log|G|`, and adding one unit
//! row `w` gains `log(1 + wᵀG⁻¹w)`. These routines evaluate that quantity
//! exactly, together with the identities that connect it to the tractable
//! column-norm metrics in [`crate::metrics`].

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::raster::{WeightMatrix, WeightRow};

/// Default ridge added before the Gram matrix reaches full rank.
pub const DEFAULT_RIDGE: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    g: DMatrix<f64>,
}

impl GramMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { g: DMatrix::zeros(n, n) }
    }

    /// Wraps `g`, checking symmetry.
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::DimensionMismatch {
                expected: g.nrows(),
                got: g.ncols(),
            });
        }
        let scale = g.amax().max(1.0);
        if (&g - g.transpose()).amax() > SYMMETRY_TOL * scale {
            return Err(Error::Precondition("Gram matrix is not symmetric".into()));
        }
        Ok(Self { g })
    }

    /// `WᵀW` of a dense design matrix.
    pub fn from_design(w: &DMatrix<f64>) -> Self {
        Self { g: w.transpose() * w }
    }

    pub fn from_rows(w: &WeightMatrix) -> Self {
        let mut g = Self::zeros(w.n_primitives);
        for row in &w.rows {
            g.add_row(row);
        }
        g
    }

    /// Rank-one update `G += wwᵀ` with a sparse row.
    pub fn add_row(&mut self, row: &WeightRow) {
        for (a, wa) in row.iter() {
            for (b, wb) in row.iter() {
                self.g[(a, b)] += wa * wb;
            }
        }
    }

    pub fn add_dense(&mut self, w: &DVector<f64>) {
        self.g.ger(1.0, w, w, 1.0);
    }

    pub fn with_ridge(&self, ridge: f64) -> Self {
        let n = self.dim();
        Self {
            g: &self.g + DMatrix::identity(n, n) * ridge,
        }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.g.clone()).ok_or(Error::RankDeficient)
    }

    /// Comma-separated dump for debugging.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for r in 0..self.dim() {
            let line: Vec<String> = (0..self.dim()).map(|c| format!("{}", self.g[(r, c)])).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// `log|G|` through a Cholesky factorization.
pub fn log_det_gram(g: &GramMatrix) -> Result<f64> {
    let chol = g.cholesky()?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Fisher information gain `log(1 + wᵀG⁻¹w)` of one new row.
pub fn fig(w: &DVector<f64>, g: &GramMatrix) -> Result<f64> {
    check_len(w.len(), g.dim())?;
    let chol = g.cholesky()?;
    Ok(chol.solve(w).dot(w).ln_1p())
}

/// FIG as the difference of two log-determinants, `log|G + wwᵀ| - log|G|`.
pub fn fig_two_determinants(w: &DVector<f64>, g: &GramMatrix) -> Result<f64> {
    check_len(w.len(), g.dim())?;
    let mut updated = g.clone();
    updated.add_dense(w);
    Ok(log_det_gram(&updated)? - log_det_gram(g)?)
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Constraint set a candidate row is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowConstraint {
    /// Unit norm, non-negative entries.
    UnitNonNegative,
    /// Unit norm, any sign.
    Unit,
}

/// A candidate observation row that satisfies its constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRow {
    w: DVector<f64>,
    constraint: RowConstraint,
}

impl CandidateRow {
    pub fn new(w: DVector<f64>, constraint: RowConstraint) -> Result<Self> {
        if (w.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!("candidate row norm {} is not 1", w.norm())));
        }
        if constraint == RowConstraint::UnitNonNegative && w.iter().any(|&v| v < 0.0) {
            return Err(Error::Precondition("candidate row has negative entries".into()));
        }
        Ok(Self { w, constraint })
    }

    /// Normalizes `w` onto the unit sphere.
    pub fn normalized(w: DVector<f64>, constraint: RowConstraint) -> Result<Self> {
        let n = w.norm();
        if !(n > 0.0) {
            return Err(Error::Degenerate("zero vector cannot be normalized".into()));
        }
        Self::new(w / n, constraint)
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn constraint(&self) -> RowConstraint {
        self.constraint
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayleighExtremes {
    /// `argmin_{|w|=1} wᵀGw`.
    pub min_direction: DVector<f64>,
    pub min_quadratic: f64,
    /// `argmax_{|w|=1} wᵀG⁻¹w`.
    pub max_inverse_direction: DVector<f64>,
    pub max_inverse_quadratic: f64,
}

/// Extremal unit directions of `wᵀGw` and `wᵀG⁻¹w`. Both are the
/// eigenvector of the smallest eigenvalue of `G`.
pub fn rayleigh_extremes(g: &GramMatrix) -> Result<RayleighExtremes> {
    let chol = g.cholesky()?;
    let eig = SymmetricEigen::new(g.matrix().clone());
    let imin = argmin(eig.eigenvalues.as_slice());
    let min_direction = eig.eigenvectors.column(imin).into_owned();
    let min_quadratic = min_direction.dot(&(g.matrix() * &min_direction));

    let inverse = chol.inverse();
    let inv_eig = SymmetricEigen::new(0.5 * (&inverse + inverse.transpose()));
    let imax = argmax(inv_eig.eigenvalues.as_slice());
    let max_inverse_direction = inv_eig.eigenvectors.column(imax).into_owned();
    let max_inverse_quadratic = chol.solve(&max_inverse_direction).dot(&max_inverse_direction);
    Ok(RayleighExtremes {
        min_direction,
        min_quadratic,
        max_inverse_direction,
        max_inverse_quadratic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchySchwarzGap {
    /// `wᵀG⁻¹w`
    pub lhs: f64,
    /// `1 / (wᵀGw)`
    pub rhs: f64,
    pub gap: f64,
}

/// Compares `wᵀG⁻¹w` with its lower bound `1/(wᵀGw)` for a unit `w`.
pub fn cauchy_schwarz_gap(w: &DVector<f64>, g: &GramMatrix) -> Result<CauchySchwarzGap> {
    check_len(w.len(), g.dim())?;
    if (w.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition("w must be unit norm".into()));
    }
    let chol = g.cholesky()?;
    let lhs = chol.solve(w).dot(w);
    let rhs = 1.0 / w.dot(&(g.matrix() * w));
    Ok(CauchySchwarzGap { lhs, rhs, gap: lhs - rhs })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneHotMinimizer {
    pub index: usize,
    /// Norm of the selected column; the minimum of both `|Ww|` and
    /// `Σ w_i |W_:,i|` over non-negative unit `w`.
    pub objective: f64,
}

/// Column of minimum Euclidean norm; lowest index on ties.
pub fn min_norm_one_hot(w: &WeightMatrix) -> Result<OneHotMinimizer> {
    if w.rows.iter().any(|r| r.weights.iter().any(|&v| v < 0.0)) {
        return Err(Error::Precondition("weight matrix must be non-negative".into()));
    }
    let norms = w.column_sq_norms();
    if norms.iter().all(|&n| n == 0.0) {
        return Err(Error::Degenerate("all columns are zero".into()));
    }
    let index = argmin(&norms);
    Ok(OneHotMinimizer {
        index,
        objective: norms[index].sqrt(),
    })
}

/// `|Ww|₂` for a dense `w`.
pub fn quadratic_objective(w_mat: &WeightMatrix, w: &[f64]) -> f64 {
    w_mat.rows.iter().map(|r| r.dot(w).powi(2)).sum::<f64>().sqrt()
}

/// `Σ_i w_i |W_:,i|₂` for a dense `w`.
pub fn linear_objective(w_mat: &WeightMatrix, w: &[f64]) -> f64 {
    w_mat
        .column_sq_norms()
        .iter()
        .zip(w)
        .map(|(n, wi)| wi * n.sqrt())
        .sum()
}

/// Mean FIG of each candidate's rows against the ridge-regularized Gram of
/// `train`.
pub fn exact_fig_scores(train: &WeightMatrix, candidates: &[WeightMatrix], ridge: f64) -> Result<Vec<f64>> {
    if ridge < 0.0 {
        return Err(Error::Precondition("ridge must be non-negative".into()));
    }
    let g = GramMatrix::from_rows(train).with_ridge(ridge);
    let scorer = FigScorer::new(&g)?;
    candidates
        .iter()
        .map(|c| {
            if c.n_primitives != train.n_primitives {
                return Err(Error::DimensionMismatch {
                    expected: train.n_primitives,
                    got: c.n_primitives,
                });
            }
            Ok(scorer.mean_fig(&c.rows))
        })
        .collect()
}

/// Candidate indices ordered by mean FIG, highest first; ties by index.
pub fn exact_fig_ranking(train: &WeightMatrix, candidates: &[WeightMatrix], ridge: f64) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(Error::Precondition("no candidates to rank".into()));
    }
    let scores = exact_fig_scores(train, candidates, ridge)?;
    Ok(rank_descending(&scores))
}

/// Indices sorted by decreasing score, lowest index first on ties.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Evaluates FIG for many sparse rows against one Gram matrix.
#[derive(Debug, Clone)]
pub struct FigScorer {
    inverse: DMatrix<f64>,
}

impl FigScorer {
    pub fn new(g: &GramMatrix) -> Result<Self> {
        let inverse = g.cholesky()?.inverse();
        Ok(Self { inverse })
    }

    pub fn fig_row(&self, row: &WeightRow) -> f64 {
        let mut q = 0.0;
        for (a, wa) in row.iter() {
            for (b, wb) in row.iter() {
                q += wa * wb * self.inverse[(a, b)];
            }
        }
        q.max(0.0).ln_1p()
    }

    /// Mean FIG over `rows`; zero for an empty set.
    pub fn mean_fig(&self, rows: &[WeightRow]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        rows.iter().map(|r| self.fig_row(r)).sum::<f64>() / rows.len() as f64
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn log_det_examples() {
        assert_relative_eq!(log_det_gram(&GramMatrix::new(DMatrix::identity(3, 3)).unwrap()).unwrap(), 0.0);
        let g = GramMatrix::new(dmatrix![2.0, 0.0; 0.0, 2.0]).unwrap();
        assert_relative_eq!(log_det_gram(&g).unwrap(), 2.0 * 2f64.ln(), epsilon = 1e-12);
        let singular = GramMatrix::new(dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap();
        assert!(matches!(log_det_gram(&singular), Err(Error::RankDeficient)));
    }

    #[test]
    fn fig_examples() {
        let g = GramMatrix::new(DMatrix::identity(4, 4)).unwrap();
        let w = DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5]);
        assert_relative_eq!(fig(&w, &g).unwrap(), 2f64.ln(), epsilon = 1e-12);
        assert_eq!(fig(&DVector::zeros(4), &g).unwrap(), 0.0);
        assert!(fig(&DVector::zeros(3), &g).is_err());
    }

    #[test]
    fn rayleigh_diagonal() {
        let g = GramMatrix::new(dmatrix![1.0, 0.0; 0.0, 4.0]).unwrap();
        let r = rayleigh_extremes(&g).unwrap();
        assert_relative_eq!(r.min_direction[0].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.max_inverse_direction[0].abs(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.min_quadratic, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.max_inverse_quadratic, 1.0, epsilon = 1e-12);

        let id = GramMatrix::new(DMatrix::identity(3, 3)).unwrap();
        let r = rayleigh_extremes(&id).unwrap();
        assert_relative_eq!(r.min_quadratic, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.max_inverse_quadratic, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cauchy_schwarz_diagonal_case() {
        let g = GramMatrix::new(dmatrix![1.0, 0.0; 0.0, 100.0]).unwrap();
        let s = 0.5f64.sqrt();
        let w = DVector::from_vec(vec![s, s]);
        let c = cauchy_schwarz_gap(&w, &g).unwrap();
        assert_relative_eq!(c.lhs, 0.505, epsilon = 1e-12);
        assert_relative_eq!(c.rhs, 1.0 / 50.5, epsilon = 1e-12);
        assert!(c.gap > 0.0);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert!(cauchy_schwarz_gap(&e1, &g).unwrap().gap.abs() < 1e-12);
    }

    #[test]
    fn one_hot_examples() {
        let w = WeightMatrix::from_dense(&dmatrix![1.0, 0.0; 0.0, 2.0], crate::raster::NormMode::Raw);
        let r = min_norm_one_hot(&w).unwrap();
        assert_eq!(r.index, 0);
        assert_relative_eq!(r.objective, 1.0);
        let eq = WeightMatrix::from_dense(&dmatrix![1.0, 1.0; 2.0, 2.0], crate::raster::NormMode::Raw);
        assert_eq!(min_norm_one_hot(&eq).unwrap().index, 0);
        let zero = WeightMatrix::from_dense(&DMatrix::zeros(2, 3), crate::raster::NormMode::Raw);
        assert!(matches!(min_norm_one_hot(&zero), Err(Error::Degenerate(_))));
    }

    #[test]
    fn single_candidate_ranking() {
        let train = WeightMatrix::from_dense(&dmatrix![1.0, 0.0], crate::raster::NormMode::UnitL2);
        let cand = WeightMatrix::from_dense(&dmatrix![0.0, 1.0], crate::raster::NormMode::UnitL2);
        assert_eq!(exact_fig_ranking(&train, &[cand], 1e-6).unwrap(), vec![0]);
        assert!(exact_fig_ranking(&train, &[], 1e-6).is_err());
    }

    #[test]
    fn sequential_gram_matches_batch() {
        let dense = dmatrix![0.2, 0.0, 0.7; 0.1, 0.5, 0.0; 0.0, 0.3, 0.3; 0.9, 0.1, 0.2];
        let rows = WeightMatrix::from_dense(&dense, crate::raster::NormMode::Raw);
        let seq = GramMatrix::from_rows(&rows);
        let batch = GramMatrix::from_design(&dense);
        assert!((seq.matrix() - batch.matrix()).amax() < 1e-12);
    }
}
