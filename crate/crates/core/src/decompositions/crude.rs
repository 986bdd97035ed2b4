//! Slicing a factorized atom `y b` into `(p,2)` column atoms along the
//! geometric spectral slices of `|b|`.

use super::{Decomposition, DecompositionMethod};
use crate::algebra::{geometric_slice_frames, polar_decomposition, Filtration, Operator};
use crate::atoms::{check_p2c_atom, conjugate_index};
use crate::error::{NclabError, Result};
use crate::functionals::lp_norm;
use crate::tolerance;

/// Relative size below which a slice `y b e_k` counts as empty.
const EMPTY_SLICE: f64 = 1e-12;

/// `y b = sum lambda_k a_k` with `e_k = chi_[beta^k, beta^{k+1})(|b|)`,
/// `lambda_k = ||y b e_k||_2 tau(e_k)^{1/q}` and
/// `a_k = tau(e_k)^{-1/q} y b e_k / ||y b e_k||_2`.
///
/// The bound compares `(sum lambda_k^p)^{1/p}` with `beta ||y||_2 ||b||_q`.
pub fn crude_to_atoms(y: &Operator, b: &Operator, n: usize, p: f64, beta: f64, f: &Filtration) -> Result<Decomposition> {
    if !(p > 0.0 && p < 2.0) {
        return Err(NclabError::InvalidParameter(format!("p must lie in (0, 2), got {p}")));
    }
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(NclabError::InvalidParameter(format!("slice base must exceed 1, got {beta}")));
    }
    if y.dim() != f.dim() || b.dim() != f.dim() {
        return Err(NclabError::DimensionMismatch { expected: f.dim(), got: y.dim().max(b.dim()) });
    }
    f.check_level(n)?;
    f.require_in_level(n, b, tolerance::ATOM * b.max_abs().max(1.0))?;
    let q = conjugate_index(p);
    let d = f.dim();
    let polar = polar_decomposition(b);
    let rotated = y.matmul(&polar.unitary);
    let modulus = polar.modulus.hermitian_part();
    let full = rotated.matmul(&modulus);
    let scale = full.norm2();

    let mut out = Decomposition::empty(DecompositionMethod::CrudeSlice, p, d);
    let mut covered = Operator::zeros(d);
    let mut residual = Operator::zeros(d);
    let mut sum_p = 0.0;
    let mut skipped = 0usize;
    for (_, frame) in geometric_slice_frames(&modulus, beta)? {
        let e = frame.matmul(&frame.adjoint());
        covered += &e;
        let piece = full.matmul(&frame).matmul(&frame.adjoint());
        let size = piece.norm2();
        let t = e.tau().re;
        if size <= EMPTY_SLICE * scale || t <= 0.0 {
            residual += &piece;
            skipped += 1;
            continue;
        }
        let coefficient = size * t.powf(1.0 / q);
        let atom = piece.scale(1.0 / coefficient);
        out.certificates.push(check_p2c_atom(&atom, n, &e, p, f)?);
        sum_p += coefficient.powf(p);
        out.coefficients.push(coefficient);
        out.atoms.push(atom);
    }
    // The kernel of |b| carries only rounding.
    residual += &full.matmul(&(&Operator::identity(d) - &covered));
    residual += &(&y.matmul(b) - &full);
    out.residual = residual;
    let y2 = y.norm2();
    let bq = lp_norm(b, q)?;
    out.bound_lhs = sum_p.powf(1.0 / p);
    out.bound_rhs = beta * y2 * bq;
    out.extra("y_l2", y2);
    out.extra("b_lq", bq);
    out.extra("skipped_slices", skipped as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::C64;
    use crate::random;

    fn crude_pair(f: &Filtration, n: usize, p: f64, seed: u64) -> (Operator, Operator) {
        let mut rng = random::rng(seed);
        let g = random::gaussian(&mut rng, f.dim());
        let y = &g - &f.expect(n, &g);
        let y = y.scale(1.0 / y.norm2());
        let b = random::in_level(&mut rng, f, n);
        let b = b.scale(1.0 / lp_norm(&b, conjugate_index(p)).unwrap());
        (y, b)
    }

    #[test]
    fn scalar_multiple_of_projection_gives_one_slice() {
        let f = Filtration::tensor_dyadic(2).unwrap();
        let e = Operator::kron(&Operator::from_real_diag(&[1.0, 0.0]), &Operator::identity(2));
        let b = e.scale(1.2);
        let mut rng = random::rng(4);
        let g = random::gaussian(&mut rng, 4);
        let y = &g - &f.expect(1, &g);
        let out = crude_to_atoms(&y, &b, 1, 1.0, 1.5, &f).unwrap();
        assert_eq!(out.atoms.len(), 1);
        assert!(out.reconstruction_error(&y.matmul(&b)) < 1e-12);
        assert!(out.residual.norm2() < 1e-12);
    }

    #[test]
    fn slices_are_atoms_and_obey_the_bound() {
        for (family, seed) in [(Filtration::tensor_dyadic(3).unwrap(), 1), (Filtration::block_dyadic(3).unwrap(), 2)] {
            for &p in &[0.5, 1.0, 1.5] {
                for &beta in &[1.05, 1.5, 2.0] {
                    let (y, b) = crude_pair(&family, 2, p, seed);
                    let out = crude_to_atoms(&y, &b, 2, p, beta, &family).unwrap();
                    assert!(out.all_certificates_valid());
                    assert!(out.bound_lhs <= out.bound_rhs + 1e-8, "{} > {}", out.bound_lhs, out.bound_rhs);
                    let a = y.matmul(&b);
                    assert!(out.reconstruction_error(&a) <= 1e-9 * a.norm2());
                    assert!(out.residual.norm2() <= 1e-9 * a.norm2());
                }
            }
        }
    }

    #[test]
    fn complex_phase_in_b_is_absorbed() {
        let f = Filtration::block_dyadic(2).unwrap();
        let (y, b) = crude_pair(&f, 1, 1.0, 9);
        let rotated = b.scale_c(C64::new(0.0, 1.0));
        let out = crude_to_atoms(&y, &rotated, 1, 1.0, 1.5, &f).unwrap();
        assert!(out.reconstruction_error(&y.matmul(&rotated)) < 1e-10);
    }

    #[test]
    fn rejects_bad_base() {
        let f = Filtration::tensor_dyadic(2).unwrap();
        let z = Operator::zeros(4);
        assert!(crude_to_atoms(&z, &z, 1, 1.0, 1.0, &f).is_err());
        assert!(crude_to_atoms(&z, &z, 1, 2.0, 1.5, &f).is_err());
    }
}
