//! Cyclic Jacobi eigensolver for Hermitian matrices and one-sided Jacobi SVD.
//!
//! Both routines sweep pairs in a fixed row-major order, so results are
//! bit-for-bit reproducible for a given input.

use super::operator::{Operator, C64};
use crate::error::{NclabError, Result};
use crate::tolerance;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `x = sum_i values[i] v_i v_i*`, values descending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: Operator,
}

impl Eigen {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// `sum_i phi(values[i]) v_i v_i*`.
    pub fn reconstruct_with(&self, mut phi: impl FnMut(f64) -> f64) -> Operator {
        let d = self.values.len();
        let weights: Vec<f64> = self.values.iter().map(|&l| phi(l)).collect();
        let v = &self.vectors;
        Operator::from_fn(d, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for (k, &w) in weights.iter().enumerate() {
                if w != 0.0 {
                    acc += v.get(i, k) * v.get(j, k).conj() * w;
                }
            }
            acc
        })
    }

    /// Projection onto the span of the eigenvectors selected by `keep`.
    pub fn projection_where(&self, mut keep: impl FnMut(f64) -> bool) -> Operator {
        self.reconstruct_with(|l| if keep(l) { 1.0 } else { 0.0 })
    }
}

/// Singular value decomposition `x = sum_j sigma_j u_j v_j*`, sigma descending.
///
/// Columns of `u` belonging to zero singular values are zero.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Operator,
    pub sigma: Vec<f64>,
    pub v: Operator,
}

impl Svd {
    /// Number of singular values above `tolerance::RANK * sigma_max`.
    pub fn rank(&self) -> usize {
        let cut = rank_cutoff(&self.sigma);
        self.sigma.iter().filter(|&&s| s > cut).count()
    }
}

pub(crate) fn rank_cutoff(sigma: &[f64]) -> f64 {
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        f64::INFINITY
    } else {
        tolerance::RANK * smax
    }
}

/// Checked eigen-decomposition of a Hermitian operator.
pub fn eig_hermitian(x: &Operator) -> Result<Eigen> {
    let deviation = x.hermitian_deviation();
    if deviation > tolerance::HERMITIAN * x.max_abs().max(1.0) {
        return Err(NclabError::NotHermitian { deviation });
    }
    Ok(eig_hermitian_unchecked(&x.hermitian_part()))
}

/// Jacobi eigen-decomposition; the input is assumed exactly Hermitian.
pub fn eig_hermitian_unchecked(x: &Operator) -> Eigen {
    let d = x.dim();
    let mut a = x.clone();
    let mut v = Operator::identity(d);
    let scale = x.frobenius();
    if d > 1 && scale > 0.0 {
        let target = tolerance::JACOBI_OFF * scale;
        let mut polished = false;
        for _ in 0..MAX_SWEEPS {
            let converged = off_diagonal(&a) <= target;
            if converged && polished {
                break;
            }
            if converged {
                polished = true;
            }
            sweep(&mut a, &mut v);
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    let diag: Vec<f64> = (0..d).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = Operator::from_fn(d, |r, c| v.get(r, order[c]));
    Eigen { values, vectors }
}

fn off_diagonal(a: &Operator) -> f64 {
    let d = a.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += a.get(i, j).norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn sweep(a: &mut Operator, v: &mut Operator) {
    let d = a.dim();
    for p in 0..d - 1 {
        for q in p + 1..d {
            let apq = a.get(p, q);
            let mag = apq.norm();
            if mag == 0.0 {
                continue;
            }
            let app = a.get(p, p).re;
            let aqq = a.get(q, q).re;
            if mag < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                a.set(p, q, C64::new(0.0, 0.0));
                a.set(q, p, C64::new(0.0, 0.0));
                continue;
            }
            let phase = apq / mag;
            let theta = (aqq - app) / (2.0 * mag);
            let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            let pc = phase.conj();
            // A <- A V
            for k in 0..d {
                let x = a.get(k, p);
                let y = a.get(k, q);
                a.set(k, p, x * c - y * pc * s);
                a.set(k, q, x * s + y * pc * c);
            }
            // A <- V* A
            for k in 0..d {
                let x = a.get(p, k);
                let y = a.get(q, k);
                a.set(p, k, x * c - y * phase * s);
                a.set(q, k, x * s + y * phase * c);
            }
            a.set(p, q, C64::new(0.0, 0.0));
            a.set(q, p, C64::new(0.0, 0.0));
            a.set(p, p, C64::new(a.get(p, p).re, 0.0));
            a.set(q, q, C64::new(a.get(q, q).re, 0.0));
            for k in 0..d {
                let x = v.get(k, p);
                let y = v.get(k, q);
                v.set(k, p, x * c - y * pc * s);
                v.set(k, q, x * s + y * pc * c);
            }
        }
    }
}

/// One-sided (Hestenes) Jacobi SVD. Small singular values are resolved to
/// high relative accuracy, which matters for supports and negative powers.
pub fn svd(x: &Operator) -> Svd {
    let d = x.dim();
    let mut a = x.clone();
    let mut v = Operator::identity(d);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..d.saturating_sub(1) {
            for j in i + 1..d {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, C64::new(0.0, 0.0));
                for k in 0..d {
                    let ai = a.get(k, i);
                    let aj = a.get(k, j);
                    alpha += ai.norm_sqr();
                    beta += aj.norm_sqr();
                    gamma += ai.conj() * aj;
                }
                let mag = gamma.norm();
                if mag == 0.0 || mag <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / mag;
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let pc = phase.conj();
                for k in 0..d {
                    let xi = a.get(k, i);
                    let xj = a.get(k, j);
                    a.set(k, i, xi * c - xj * pc * s);
                    a.set(k, j, xi * s + xj * pc * c);
                    let vi = v.get(k, i);
                    let vj = v.get(k, j);
                    v.set(k, i, vi * c - vj * pc * s);
                    v.set(k, j, vi * s + vj * pc * c);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..d).map(|j| (0..d).map(|k| a.get(k, j).norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = Operator::from_fn(d, |r, c| {
        let s = norms[order[c]];
        if s > 0.0 {
            a.get(r, order[c]) / s
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let v = Operator::from_fn(d, |r, c| v.get(r, order[c]));
    Svd { u, sigma, v }
}

/// Singular values and right singular vectors of the tall matrix whose
/// columns are `columns`: `(sigma, v)` with `A* A = v diag(sigma^2) v*`,
/// sigma descending. Small singular values carry absolute error of order
/// `eps ||A||`, unlike square roots of eigenvalues of `A* A`.
pub fn gram_root(mut columns: Vec<Vec<C64>>) -> (Vec<f64>, Operator) {
    let d = columns.len();
    let mut v = Operator::identity(d.max(1));
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..d.saturating_sub(1) {
            for j in i + 1..d {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, C64::new(0.0, 0.0));
                for (ai, aj) in columns[i].iter().zip(&columns[j]) {
                    alpha += ai.norm_sqr();
                    beta += aj.norm_sqr();
                    gamma += ai.conj() * aj;
                }
                let mag = gamma.norm();
                if mag == 0.0 || mag <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / mag;
                let zeta = (beta - alpha) / (2.0 * mag);
                let t = if zeta == 0.0 { 1.0 } else { zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt()) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let pc = phase.conj();
                let (left, right) = columns.split_at_mut(j);
                for (xi, xj) in left[i].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*xi, *xj);
                    *xi = a * c - b * pc * s;
                    *xj = a * s + b * pc * c;
                }
                for k in 0..d {
                    let vi = v.get(k, i);
                    let vj = v.get(k, j);
                    v.set(k, i, vi * c - vj * pc * s);
                    v.set(k, j, vi * s + vj * pc * c);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let sigma = order.iter().map(|&j| norms[j]).collect();
    (sigma, Operator::from_fn(d.max(1), |r, c| v.get(r, order[c])))
}

/// Singular values only, descending.
pub fn singular_values(x: &Operator) -> Vec<f64> {
    svd(x).sigma
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(d: usize, seed: u64) -> Operator {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        Operator::from_fn(d, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn gram_root_of_stacked_blocks() {
        let (a, b) = (sample(4, 3), sample(4, 4));
        let columns: Vec<Vec<C64>> = (0..4).map(|j| (0..8).map(|r| if r < 4 { a.get(r, j) } else { b.get(r - 4, j) }).collect()).collect();
        let (sigma, v) = gram_root(columns);
        let gram = &a.adjoint().matmul(&a) + &b.adjoint().matmul(&b);
        let back = Eigen { values: sigma.iter().map(|s| s * s).collect(), vectors: v }.reconstruct_with(|l| l);
        assert!((&back - &gram).max_abs() < 1e-12);
        let exact = eig_hermitian(&gram).unwrap().values;
        for (s, l) in sigma.iter().zip(exact) {
            assert!((s * s - l).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_root_resolves_tiny_singular_values() {
        let x = Operator::from_real_diag(&[1.0, 1e-12, 0.0]);
        let u = eig_hermitian_unchecked(&hermitian(3, 9)).vectors;
        let y = u.matmul(&x).matmul(&u.adjoint());
        let (sigma, _) = gram_root((0..3).map(|j| y.column(j)).collect());
        assert!((sigma[1] - 1e-12).abs() < 1e-15, "{sigma:?}");
        assert!(sigma[2] < 1e-15, "{sigma:?}");
    }

    fn hermitian(d: usize, seed: u64) -> Operator {
        sample(d, seed).hermitian_part()
    }

    #[test]
    fn identity_eigenvalues_are_one() {
        let e = eig_hermitian(&Operator::identity(4)).unwrap();
        assert!(e.values.iter().all(|&l| (l - 1.0).abs() < 1e-15));
    }

    #[test]
    fn diagonal_eigenpairs() {
        let e = eig_hermitian(&Operator::from_real_diag(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert!((e.vectors.get(1, 0).norm() - 1.0).abs() < 1e-15);
        assert!((e.vectors.get(0, 1).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let x = Operator::from_fn(2, |i, j| C64::new((i + 2 * j) as f64, 0.0));
        assert!(matches!(eig_hermitian(&x), Err(NclabError::NotHermitian { .. })));
    }

    /// Real roots of the characteristic polynomial of a Hermitian 3x3 matrix
    /// via the trigonometric cubic formula.
    fn cubic_roots(h: &Operator) -> Vec<f64> {
        let g = |i, j| h.get(i, j);
        let tr = (g(0, 0) + g(1, 1) + g(2, 2)).re;
        let minors = (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0) + g(0, 0) * g(2, 2) - g(0, 2) * g(2, 0)
            + g(1, 1) * g(2, 2)
            - g(1, 2) * g(2, 1))
        .re;
        let det = (g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
            - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0)))
        .re;
        // t^3 - tr t^2 + minors t - det, shifted t = s + tr/3
        let shift = tr / 3.0;
        let pp = minors - tr * tr / 3.0;
        let qq = -2.0 * tr.powi(3) / 27.0 + tr * minors / 3.0 - det;
        let m = 2.0 * (-pp / 3.0).sqrt();
        let arg = (3.0 * qq / (pp * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut roots: Vec<f64> = (0..3)
            .map(|k| shift + m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .collect();
        roots.sort_by(|a, b| b.total_cmp(a));
        roots
    }

    #[test]
    fn matches_characteristic_polynomial_roots() {
        for seed in 0..50 {
            let h = hermitian(3, seed);
            let e = eig_hermitian(&h).unwrap();
            let roots = cubic_roots(&h);
            for (l, r) in e.values.iter().zip(&roots) {
                assert!((l - r).abs() < 1e-9, "seed {seed}: {l} vs {r}");
            }
        }
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        for d in [1, 2, 5, 16, 32] {
            let h = hermitian(d, d as u64);
            let e = eig_hermitian(&h).unwrap();
            let back = e.reconstruct_with(|l| l);
            assert!((&back - &h).norm2() <= tolerance::EIG * h.norm2());
            let gram = e.vectors.adjoint().matmul(&e.vectors);
            assert!((&gram - &Operator::identity(d)).max_abs() <= tolerance::EIG);
        }
    }

    #[test]
    fn svd_reconstructs_general_operators() {
        for d in [1, 3, 8, 24] {
            let x = sample(d, 100 + d as u64);
            let s = svd(&x);
            let sig = Operator::from_real_diag(&s.sigma);
            let back = s.u.matmul(&sig).matmul(&s.v.adjoint());
            assert!((&back - &x).norm2() <= 1e-12 * x.norm2());
            let gram = s.v.adjoint().matmul(&s.v);
            assert!((&gram - &Operator::identity(d)).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn svd_resolves_tiny_singular_values() {
        let x = Operator::from_real_diag(&[1.0, 1e-14, 0.0]);
        let s = svd(&x);
        assert_eq!(s.sigma, vec![1.0, 1e-14, 0.0]);
        assert_eq!(s.rank(), 1);
    }
}
