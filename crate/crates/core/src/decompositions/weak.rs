//! `x = x_1 + sum lambda_k a_k` with `(p,2)` column atoms: the algebraic
//! decomposition, each pair normalized into a factorized atom, then sliced.

use super::algebraic::corrected_constant;
use super::{algebraic_decomposition, crude_to_atoms, Decomposition, DecompositionMethod};
use crate::algebra::Martingale;
use crate::atoms::conjugate_index;
use crate::error::Result;
use crate::functionals::lp_norm;

/// With `m = max(1, p)` the bound is
/// `||x_1||_p^m + sum lambda_k^m <= (sqrt(2/p) beta ||x||_{h_p^c})^m`;
/// `corrected_rhs` uses `sqrt(1 + 2/p)` in place of `sqrt(2/p)`.
pub fn weak_atomic_decomposition(mart: &Martingale, p: f64, beta: f64) -> Result<Decomposition> {
    let f = mart.filtration();
    let d = mart.dim();
    let q = conjugate_index(p);
    let alg = algebraic_decomposition(mart, p)?;
    let mut out = Decomposition::empty(DecompositionMethod::WeakAtomic, p, d);
    out.x1 = alg.x1.clone();
    let lambda = alg.lambda;
    if lambda == 0.0 {
        out.residual = alg.y_part();
    }
    let mut pair_weights = Vec::new();
    for (k, (y, b)) in alg.normalized.iter().enumerate() {
        let level = k + 1;
        let (ny, nb) = (y.norm2(), lp_norm(b, q)?);
        if lambda == 0.0 || ny == 0.0 || nb == 0.0 {
            out.residual += &y.matmul(b).scale(lambda);
            continue;
        }
        let weight = lambda * ny * nb;
        pair_weights.push(weight);
        let sliced = crude_to_atoms(&y.scale(1.0 / ny), &b.scale(1.0 / nb), level, p, beta, f)?;
        out.residual += &sliced.residual.scale(weight);
        for ((c, a), cert) in sliced.coefficients.into_iter().zip(sliced.atoms).zip(sliced.certificates) {
            out.coefficients.push(weight * c);
            out.atoms.push(a);
            out.certificates.push(cert);
        }
    }
    let power = p.max(1.0);
    let x1_norm = lp_norm(&alg.x1, p)?;
    out.bound_lhs = x1_norm.powf(power) + out.coefficients.iter().map(|c| c.powf(power)).sum::<f64>();
    out.bound_rhs = ((2.0 / p).sqrt() * alg.hardy * beta).powf(power);
    out.extra("lambda", lambda);
    out.extra("hardy_norm", alg.hardy);
    out.extra("pair_weight_sum", pair_weights.iter().sum());
    out.extra("corrected_rhs", (corrected_constant(p) * alg.hardy * beta).powf(power));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Filtration;
    use crate::random;

    #[test]
    fn atoms_are_valid_and_bound_holds() {
        let mut rng = random::rng(21);
        for f in [Filtration::tensor_dyadic(3).unwrap(), Filtration::block_dyadic(3).unwrap()] {
            for &p in &[0.5, 1.0, 1.5] {
                let x = random::gaussian(&mut rng, f.dim());
                let m = Martingale::from_operator(f.clone(), &x).unwrap();
                let out = weak_atomic_decomposition(&m, p, 1.2).unwrap();
                assert!(out.all_certificates_valid());
                if p < 1.0 {
                    assert!(out.bound_lhs <= out.bound_rhs + 1e-8, "{} > {}", out.bound_lhs, out.bound_rhs);
                }
                assert!(out.bound_lhs <= out.extras["corrected_rhs"] + 1e-8);
                assert!(out.reconstruction_error(&x) <= 1e-8 * x.norm2().max(1.0));
                assert!(out.residual.norm2() <= 1e-8 * x.norm2());
            }
        }
    }

    #[test]
    fn level_one_input_has_no_atoms() {
        let f = Filtration::tensor_dyadic(2).unwrap();
        let mut rng = random::rng(2);
        let x = random::in_level(&mut rng, &f, 1);
        let m = Martingale::from_operator(f, &x).unwrap();
        let out = weak_atomic_decomposition(&m, 1.0, 1.5).unwrap();
        assert!(out.coefficients.iter().all(|&c| c < 1e-6));
        assert!(out.reconstruction_error(&x) < 1e-10);
    }
}
