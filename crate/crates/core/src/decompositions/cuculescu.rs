//! Cuculescu projections of a predictable increasing positive sequence.

use serde::Serialize;

use crate::algebra::{eig_hermitian, Filtration, Operator, C64};
use crate::error::{NclabError, Result};
use crate::tolerance;

#[derive(Clone, Debug, Serialize)]
pub struct CuculescuTrajectory {
    /// The threshold `lambda^2`.
    pub threshold_sq: f64,
    /// Starting level `n`.
    pub start: usize,
    /// `projections[j]` is `q_{n+j}`; `q_n` is the starting projection.
    #[serde(skip)]
    pub projections: Vec<Operator>,
    /// `tau(e - q_k)` along the trajectory.
    pub deficits: Vec<f64>,
}

impl CuculescuTrajectory {
    /// `q_k` for `k >= n`; levels past the end repeat the last projection.
    pub fn at(&self, k: usize) -> &Operator {
        assert!(k >= self.start, "level {k} precedes the start {}", self.start);
        let j = (k - self.start).min(self.projections.len() - 1);
        &self.projections[j]
    }

    /// The meet of all `q_k`, which is the last projection since they decrease.
    pub fn terminal(&self) -> &Operator {
        self.projections.last().expect("trajectory is never empty")
    }
}

/// Orthonormal basis of the range of a projection.
pub(crate) fn range_basis(q: &Operator) -> Vec<Vec<C64>> {
    let e = crate::algebra::eigen::eig_hermitian_unchecked(&q.hermitian_part());
    (0..q.dim()).filter(|&i| e.values[i] > 0.5).map(|i| e.vector(i)).collect()
}

/// `sum_j w_j w_j*` for the given vectors.
pub(crate) fn projection_onto(d: usize, vectors: &[Vec<C64>]) -> Operator {
    Operator::from_fn(d, |i, j| vectors.iter().map(|v| v[i] * v[j].conj()).sum())
}

/// `q_n = e`, `q_k = q_{k-1} chi_[0, lambda^2](q_{k-1} s_k^2 q_{k-1})` for `k > n`.
///
/// `squares[k - 1]` holds `s_k^2`, which must lie in `M_{k-1}` for `k > n`.
pub fn cuculescu(squares: &[Operator], e: &Operator, n: usize, lambda: f64, f: &Filtration) -> Result<CuculescuTrajectory> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(NclabError::InvalidParameter(format!("threshold must be positive, got {lambda}")));
    }
    if squares.len() != f.levels() {
        return Err(NclabError::DimensionMismatch { expected: f.levels(), got: squares.len() });
    }
    f.check_level(n)?;
    let dev = e.projection_deviation();
    if dev > tolerance::ATOM {
        return Err(NclabError::NotProjection { deviation: dev });
    }
    f.require_in_level(n, e, tolerance::ATOM)?;
    for k in n + 1..=f.levels() {
        let s = &squares[k - 1];
        if s.hermitian_deviation() > tolerance::HERMITIAN * s.max_abs().max(1.0) {
            return Err(NclabError::NotHermitian { deviation: s.hermitian_deviation() });
        }
        f.require_in_level(k - 1, s, tolerance::IDENTITY).map_err(|_| {
            NclabError::InvalidParameter(format!("sequence is not predictable at level {k}"))
        })?;
    }
    Ok(cuculescu_unchecked(squares, e, n, lambda * lambda))
}

pub(crate) fn cuculescu_unchecked(squares: &[Operator], e: &Operator, n: usize, threshold_sq: f64) -> CuculescuTrajectory {
    let d = e.dim();
    let te = e.tau().re;
    let mut projections = vec![e.clone()];
    let mut deficits = vec![0.0];
    let mut basis = range_basis(e);
    for s in &squares[n..] {
        if basis.is_empty() {
            projections.push(Operator::zeros(d));
            deficits.push(te);
            continue;
        }
        let r = basis.len();
        let sv: Vec<Vec<C64>> = basis.iter().map(|v| s.apply(v)).collect();
        let compressed = Operator::from_fn(r, |i, j| basis[i].iter().zip(&sv[j]).map(|(a, b)| a.conj() * b).sum());
        let eig = eig_hermitian(&compressed.hermitian_part()).expect("compression is Hermitian");
        let scale = eig.values.iter().fold(0.0_f64, |m, &l| m.max(l.abs()));
        let limit = threshold_sq + tolerance::GUARD_BAND * scale;
        let mut kept = Vec::new();
        for (i, &l) in eig.values.iter().enumerate() {
            if l <= limit {
                let w = eig.vector(i);
                let v: Vec<C64> = (0..d).map(|row| (0..r).map(|c| basis[c][row] * w[c]).sum()).collect();
                kept.push(v);
            }
        }
        basis = kept;
        let q = projection_onto(d, &basis);
        deficits.push(te - q.tau().re);
        projections.push(q);
    }
    CuculescuTrajectory { threshold_sq, start: n, projections, deficits }
}
