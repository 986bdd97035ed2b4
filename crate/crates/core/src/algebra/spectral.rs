//! Spectral calculus: projections, functions of Hermitian operators, supports,
//! meets and polar decomposition.

use super::eigen::{eig_hermitian, eig_hermitian_unchecked, gram_root, rank_cutoff, svd, Eigen};
use super::operator::{Operator, C64};
use crate::error::{NclabError, Result};
use crate::tolerance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn guard(values: &[f64]) -> f64 {
    tolerance::GUARD_BAND * values.iter().fold(0.0_f64, |m, &l| m.max(l.abs()))
}

/// Whether `l` lies in `[lo, hi)` once values within `g` of a boundary are
/// pushed into the lower bucket.
fn in_interval(l: f64, lo: f64, hi: f64, g: f64) -> bool {
    let above_lo = lo == f64::NEG_INFINITY || l > lo + g;
    let below_hi = hi == f64::INFINITY || l <= hi + g;
    above_lo && below_hi
}

/// `chi_[lo, hi)(x)` for Hermitian `x`.
pub fn spectral_projection(x: &Operator, lo: f64, hi: f64) -> Result<Operator> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(NclabError::InvalidParameter(format!("empty interval [{lo}, {hi})")));
    }
    let e = eig_hermitian(x)?;
    let g = guard(&e.values);
    Ok(e.projection_where(|l| in_interval(l, lo, hi, g)))
}

/// Geometric slices `chi_[base^k, base^{k+1})(b)` of a positive operator,
/// for each `k` whose slice is nonzero. Eigenvalues below the rank cutoff
/// belong to the kernel and to no slice.
pub fn geometric_slices(b: &Operator, base: f64) -> Result<Vec<(i32, Operator)>> {
    Ok(geometric_slice_frames(b, base)?.into_iter().map(|(k, w)| (k, w.matmul(&w.adjoint()))).collect())
}

/// Like [`geometric_slices`], but each slice is given by a frame `W` whose
/// columns are its eigenvectors (other columns zero), so the slice is `W W*`.
/// `(x W) W*` has its right support inside the slice up to rounding relative
/// to `||x W||`, where `x (W W*)` is only accurate relative to `||x||`.
pub fn geometric_slice_frames(b: &Operator, base: f64) -> Result<Vec<(i32, Operator)>> {
    if !(base > 1.0) {
        return Err(NclabError::InvalidParameter(format!("slice base must exceed 1, got {base}")));
    }
    let e = eig_hermitian(b)?;
    let g = guard(&e.values);
    let cut = rank_cutoff(&e.values.iter().map(|l| l.max(0.0)).collect::<Vec<_>>());
    let lb = base.ln();
    let mut buckets: Vec<(i32, Vec<usize>)> = Vec::new();
    for (i, &l) in e.values.iter().enumerate() {
        if l <= cut {
            continue;
        }
        let k0 = (l.ln() / lb).floor() as i32;
        let k = [k0 - 1, k0, k0 + 1]
            .into_iter()
            .find(|&k| in_interval(l, base.powi(k), base.powi(k + 1), g))
            .unwrap_or(k0);
        match buckets.iter_mut().find(|(kk, _)| *kk == k) {
            Some((_, idx)) => idx.push(i),
            None => buckets.push((k, vec![i])),
        }
    }
    buckets.sort_by_key(|(k, _)| *k);
    let zero = C64::new(0.0, 0.0);
    Ok(buckets
        .into_iter()
        .map(|(k, idx)| (k, Operator::from_fn(b.dim(), |i, j| if idx.contains(&j) { e.vectors.get(i, j) } else { zero })))
        .collect())
}

/// Spectral projections of `x` onto clusters of eigenvalues closer than
/// `rel_tol * max|eigenvalue|`, ordered by decreasing eigenvalue. Clustering
/// keeps the projections inside any subalgebra containing `x` even when
/// eigenvalues are degenerate.
pub fn eigenspace_projections(x: &Operator, rel_tol: f64) -> Result<Vec<Operator>> {
    let e = eig_hermitian(x)?;
    let scale = e.values.iter().fold(0.0_f64, |m, &l| m.max(l.abs())).max(f64::MIN_POSITIVE);
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=e.values.len() {
        if i == e.values.len() || e.values[i - 1] - e.values[i] > rel_tol * scale {
            groups.push((start, i));
            start = i;
        }
    }
    Ok(groups
        .into_iter()
        .map(|(a, b)| {
            let mut k = 0;
            e.reconstruct_with(|_| {
                let w = if k >= a && k < b { 1.0 } else { 0.0 };
                k += 1;
                w
            })
        })
        .collect())
}

/// `phi(x)` for Hermitian `x`; fails if `phi` is not finite on the spectrum.
pub fn matrix_function(x: &Operator, phi: impl Fn(f64) -> f64) -> Result<Operator> {
    let e = eig_hermitian(x)?;
    for &l in &e.values {
        if !phi(l).is_finite() {
            return Err(NclabError::UndefinedFunction { eigenvalue: l });
        }
    }
    Ok(e.reconstruct_with(phi))
}

/// Spectrum of a positive operator viewed through its square root or
/// directly, with small eigenvalues treated as kernel.
#[derive(Clone, Debug)]
pub struct PositiveSpectrum {
    eig: Eigen,
    values: Vec<f64>,
    cutoff: f64,
}

impl PositiveSpectrum {
    /// Spectrum of a positive `x`; negative round-off is clamped to zero.
    pub fn of(x: &Operator) -> Result<Self> {
        let eig = eig_hermitian(x)?;
        Ok(Self::from_eigen(eig, false))
    }

    /// Spectrum of `y^{1/2}` for a positive `y`. The kernel cutoff is taken
    /// relative to the largest eigenvalue of the root.
    pub fn of_root(y: &Operator) -> Result<Self> {
        let eig = eig_hermitian(y)?;
        Ok(Self::from_eigen(eig, true))
    }

    /// Like [`PositiveSpectrum::of_root`] for an input already known to be Hermitian.
    pub fn of_root_unchecked(y: &Operator) -> Self {
        Self::from_eigen(eig_hermitian_unchecked(&y.hermitian_part()), true)
    }

    /// Spectrum of `(sum_k F_k* F_k)^{1/2}` from the factors `F_k`, computed
    /// from singular values of the stacked factors.
    pub fn of_factors(factors: &[Operator]) -> Self {
        let d = factors[0].dim();
        let columns = (0..d).map(|j| factors.iter().flat_map(|f| f.column(j)).collect()).collect();
        let (values, vectors) = gram_root(columns);
        let eig = Eigen { values: values.iter().map(|s| s * s).collect(), vectors };
        let cutoff = rank_cutoff(&values);
        Self { eig, values, cutoff }
    }

    fn from_eigen(eig: Eigen, root: bool) -> Self {
        let values: Vec<f64> =
            eig.values.iter().map(|&l| if root { l.max(0.0).sqrt() } else { l.max(0.0) }).collect();
        let cutoff = rank_cutoff(&values);
        Self { eig, values, cutoff }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Moore-Penrose power: eigenvalues at or below the cutoff map to zero.
    pub fn power(&self, s: f64) -> Operator {
        let mut i = 0;
        let (vals, cut) = (&self.values, self.cutoff);
        self.eig.reconstruct_with(|_| {
            let v = vals[i];
            i += 1;
            if v > cut {
                if s == 0.0 {
                    1.0
                } else {
                    v.powf(s)
                }
            } else {
                0.0
            }
        })
    }

    pub fn support(&self) -> Operator {
        self.power(0.0)
    }

    /// `sum_i v_i^p` over the nonzero part of the spectrum.
    pub fn power_sum(&self, p: f64) -> f64 {
        self.values.iter().filter(|&&v| v > self.cutoff).map(|v| v.powf(p)).sum()
    }
}

/// `x^s` for positive `x` with the Moore-Penrose convention on the kernel.
pub fn pseudo_power(x: &Operator, s: f64) -> Result<Operator> {
    Ok(PositiveSpectrum::of(x)?.power(s))
}

/// `x^{1/2}` for positive `x`.
pub fn sqrt_positive(x: &Operator) -> Result<Operator> {
    pseudo_power(x, 0.5)
}

/// `|x| = (x* x)^{1/2}`.
pub fn modulus(x: &Operator) -> Operator {
    let s = svd(x);
    let d = x.dim();
    Operator::from_fn(d, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for (k, &sig) in s.sigma.iter().enumerate() {
            acc += s.v.get(i, k) * s.v.get(j, k).conj() * sig;
        }
        acc
    })
}

/// Right support `r(x)` (least `e` with `x e = x`) or left support `l(x)`.
pub fn support_projection(x: &Operator, side: Side) -> Operator {
    let s = svd(x);
    let cut = rank_cutoff(&s.sigma);
    let frame = match side {
        Side::Right => &s.v,
        Side::Left => &s.u,
    };
    let keep: Vec<usize> = (0..x.dim()).filter(|&k| s.sigma[k] > cut).collect();
    Operator::from_fn(x.dim(), |i, j| keep.iter().map(|&k| frame.get(i, k) * frame.get(j, k).conj()).sum())
}

fn require_projection(e: &Operator) -> Result<()> {
    let deviation = e.projection_deviation();
    if deviation > tolerance::HERMITIAN * 10.0 {
        return Err(NclabError::NotProjection { deviation });
    }
    Ok(())
}

/// Projection onto `range(q) ∩ range(pi)`.
pub fn projection_meet(q: &Operator, pi: &Operator) -> Result<Operator> {
    require_projection(q)?;
    require_projection(pi)?;
    let sum = (q + pi).hermitian_part();
    let e = eig_hermitian_unchecked(&sum);
    Ok(e.projection_where(|l| l > 2.0 - tolerance::MEET))
}

/// Polar decomposition `x = u |x|` with `u* u = r(x)`.
#[derive(Clone, Debug)]
pub struct Polar {
    pub unitary: Operator,
    pub modulus: Operator,
}

pub fn polar_decomposition(x: &Operator) -> Polar {
    let s = svd(x);
    let d = x.dim();
    let cut = rank_cutoff(&s.sigma);
    let keep: Vec<usize> = (0..d).filter(|&k| s.sigma[k] > cut).collect();
    let unitary = Operator::from_fn(d, |i, j| keep.iter().map(|&k| s.u.get(i, k) * s.v.get(j, k).conj()).sum());
    let modulus = Operator::from_fn(d, |i, j| {
        (0..d).map(|k| s.v.get(i, k) * s.v.get(j, k).conj() * s.sigma[k]).sum()
    });
    Polar { unitary, modulus }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Operator {
        Operator::from_real_diag(v)
    }

    fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn spectral_projection_examples() {
        let x = diag(&[1.0, 0.0]);
        assert!(close(&spectral_projection(&x, 0.5, f64::INFINITY).unwrap(), &diag(&[1.0, 0.0]), 1e-15));
        assert!(close(&spectral_projection(&x, f64::NEG_INFINITY, 0.5).unwrap(), &diag(&[0.0, 1.0]), 1e-15));
        let y = diag(&[0.5, 1.5, 3.0]);
        assert!(close(&spectral_projection(&y, 1.0, 2.0).unwrap(), &diag(&[0.0, 1.0, 0.0]), 1e-15));
    }

    #[test]
    fn boundary_eigenvalues_fall_into_lower_bucket() {
        let x = diag(&[2.0, 1.0 + 1e-14]);
        let low = spectral_projection(&x, 0.0, 1.0).unwrap();
        assert!(close(&low, &diag(&[0.0, 1.0]), 1e-15));
        let high = spectral_projection(&x, 1.0, 4.0).unwrap();
        assert!(close(&high, &diag(&[1.0, 0.0]), 1e-15));
    }

    #[test]
    fn matrix_function_examples() {
        let r = matrix_function(&diag(&[4.0, 9.0]), f64::sqrt).unwrap();
        assert!(close(&r, &diag(&[2.0, 3.0]), 1e-14));
        let a = matrix_function(&diag(&[-2.0, 5.0]), f64::abs).unwrap();
        assert!(close(&a, &diag(&[2.0, 5.0]), 1e-14));
        let err = matrix_function(&diag(&[4.0, 0.0]), |t| 1.0 / t).unwrap_err();
        assert!(matches!(err, NclabError::UndefinedFunction { .. }));
    }

    #[test]
    fn pseudo_inverse_on_kernel() {
        let p = pseudo_power(&diag(&[4.0, 0.0]), -1.0).unwrap();
        assert!(close(&p, &diag(&[0.25, 0.0]), 1e-15));
    }

    #[test]
    fn support_examples() {
        assert!(support_projection(&Operator::zeros(3), Side::Right).is_zero(0.0));
        let e = diag(&[1.0, 0.0, 1.0]);
        assert!(close(&support_projection(&e, Side::Right), &e, 1e-14));
        let mut col = Operator::zeros(3);
        col.set(0, 1, C64::new(2.0, 0.0));
        col.set(2, 1, C64::new(0.0, -1.0));
        assert!(close(&support_projection(&col, Side::Right), &diag(&[0.0, 1.0, 0.0]), 1e-14));
    }

    #[test]
    fn meet_examples() {
        let q = diag(&[1.0, 1.0, 0.0]);
        let pi = diag(&[0.0, 1.0, 1.0]);
        assert!(close(&projection_meet(&q, &pi).unwrap(), &diag(&[0.0, 1.0, 0.0]), 1e-14));
        assert!(close(&projection_meet(&q, &q).unwrap(), &q, 1e-14));
        assert!(close(&projection_meet(&q, &Operator::identity(3)).unwrap(), &q, 1e-14));
        assert!(matches!(projection_meet(&diag(&[2.0, 0.0, 0.0]), &q), Err(NclabError::NotProjection { .. })));
    }

    #[test]
    fn polar_examples() {
        let p = polar_decomposition(&diag(&[-3.0, 2.0]));
        assert!(close(&p.unitary, &diag(&[-1.0, 1.0]), 1e-14));
        assert!(close(&p.modulus, &diag(&[3.0, 2.0]), 1e-14));
        let pos = diag(&[2.0, 0.0, 1.0]);
        let p = polar_decomposition(&pos);
        assert!(close(&p.unitary, &diag(&[1.0, 0.0, 1.0]), 1e-14));
        assert!(close(&p.modulus, &pos, 1e-14));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = Operator::from_fn(2, |i, j| C64::new(if i == 1 && j == 0 { -h } else { h }, 0.0));
        let p = polar_decomposition(&u);
        assert!(close(&p.unitary, &u, 1e-14));
        assert!(close(&p.modulus, &Operator::identity(2), 1e-14));
    }

    #[test]
    fn slices_cover_support() {
        let b = diag(&[0.0, 1.0, 1.2, 3.0, 1e-20]);
        let slices = geometric_slices(&b, 1.5).unwrap();
        let mut total = Operator::zeros(5);
        for (_, s) in &slices {
            total += s;
        }
        assert!(close(&total, &diag(&[0.0, 1.0, 1.0, 1.0, 0.0]), 1e-14));
        let ks: Vec<i32> = slices.iter().map(|(k, _)| *k).collect();
        assert_eq!(ks, vec![-1, 0, 2]);
    }
}
