//! `x = x_1 + sum_l alpha_l beta_l` with `x_1 = E_1(x)`, built from the
//! conditioned square functions `s_n = s_{c,n}(x)`.

use super::{Decomposition, DecompositionMethod};
use crate::algebra::{matrix_function, Martingale, Operator, PositiveSpectrum};
use crate::atoms::{check_algebraic_atom, AtomCertificate};
use crate::error::{NclabError, Result};
use crate::functionals::{lp_norm, square_spectrum, SquareKind};

#[derive(Clone, Debug)]
pub struct AlgebraicDecomposition {
    pub p: f64,
    pub x1: Operator,
    /// `alpha_l` for `l = 1, ..., N - 1`; `E_l(alpha_l) = 0`.
    pub alphas: Vec<Operator>,
    /// `beta_l ∈ M_l`.
    pub betas: Vec<Operator>,
    /// `sqrt(2/p) (h^p - ||x_1||_p^p)^{1/2} h^{p/q}` with `h = ||x||_{h_p^c}`.
    pub lambda: f64,
    pub hardy: f64,
    /// `lambda^{-1} (alpha_l, beta_l)` split into `(y_l, b_l)` with
    /// `sum ||y_l||_2^2 <= 1` and `||(sum |b_l|^2)^{1/2}||_q <= 1`.
    pub normalized: Vec<(Operator, Operator)>,
    pub certificate: AtomCertificate,
}

impl AlgebraicDecomposition {
    /// `sum_l alpha_l beta_l`.
    pub fn y_part(&self) -> Operator {
        let d = self.x1.dim();
        self.alphas.iter().zip(&self.betas).fold(Operator::zeros(d), |acc, (a, b)| acc + a.matmul(b))
    }

    /// `sum_l ||alpha_l||_2^2`.
    pub fn alpha_energy(&self) -> f64 {
        self.alphas.iter().map(|a| a.norm2().powi(2)).sum()
    }

    /// `||x_1||_p + lambda`, to be compared with `sqrt(2/p) h`.
    pub fn estimate(&self) -> Result<(f64, f64)> {
        Ok((lp_norm(&self.x1, self.p)? + self.lambda, (2.0 / self.p).sqrt() * self.hardy))
    }

    pub fn into_decomposition(self) -> Result<Decomposition> {
        let d = self.x1.dim();
        let p = self.p;
        let (lhs, rhs) = self.estimate()?;
        let energy = self.alpha_energy();
        let x1_p = crate::functionals::lp_norm_pow(&self.x1, p)?;
        let y = self.y_part();
        let mut out = Decomposition::empty(DecompositionMethod::Algebraic, p, d);
        out.x1 = self.x1;
        if self.lambda > 0.0 {
            out.coefficients.push(self.lambda);
            out.atoms.push(y.scale(1.0 / self.lambda));
            out.certificates.push(self.certificate);
        } else {
            out.residual = y;
        }
        out.bound_lhs = lhs;
        out.bound_rhs = rhs;
        out.extra("alpha_energy", energy);
        out.extra("alpha_energy_bound", (2.0 / p) * (self.hardy.powf(p) - x1_p).max(0.0));
        out.extra("hardy_norm", self.hardy);
        out.extra("corrected_rhs", corrected_constant(p) * self.hardy);
        Ok(out)
    }
}

/// `sqrt(1 + 2/p)`: the maximum of `t + sqrt(2/p) (1 - t^2)^{1/2}` on `[0, 1]`,
/// which bounds `(||x_1||_p + lambda) / h` for every `p`. The sharper
/// `sqrt(2/p)` fails for `p >= 1` whenever `||x_1||_p` is a small nonzero
/// fraction of `h`.
pub fn corrected_constant(p: f64) -> f64 {
    (1.0 + 2.0 / p).sqrt()
}

/// `alpha_1 = (sum_{n>=2} dx_n s_n^{p-2}) s_2^{1-p/2}`, `beta_1 = s_2^{1-p/2}`,
/// `alpha_l = (sum_{n>=l+1} dx_n s_n^{p-2}) beta_l`,
/// `beta_l = (s_{l+1}^{2-p} - s_l^{2-p})^{1/2}` for `l >= 2`.
/// Negative powers are Moore-Penrose pseudo-powers.
pub fn algebraic_decomposition(m: &Martingale, p: f64) -> Result<AlgebraicDecomposition> {
    if !(p > 0.0 && p < 2.0) {
        return Err(NclabError::InvalidParameter(format!("p must lie in (0, 2), got {p}")));
    }
    let f = m.filtration();
    let levels = m.levels();
    let d = m.dim();
    let q = crate::atoms::conjugate_index(p);
    let x1 = m.diff(1).clone();

    // spectra[n - 1] is the spectrum of s_n.
    let spectra: Vec<PositiveSpectrum> = (1..=levels)
        .map(|n| square_spectrum(m, SquareKind::ConditionedColumn, Some(n)))
        .collect();
    let hardy = crate::functionals::schatten_from_values(spectra[levels - 1].values(), p, d);
    let grow: Vec<Operator> = spectra.iter().map(|s| s.power(2.0 - p)).collect();

    // s_n^{p-2} = s_n^{p/2-1} s_n^{p/2-1}, and s_n^{p/2-1} beta_l is a contraction for
    // n > l, so neither factor carries the size of s_n^{p-2} on a near kernel.
    let halves: Vec<Operator> = spectra.iter().map(|s| s.power(p / 2.0 - 1.0)).collect();
    let left: Vec<Operator> = (1..=levels).map(|n| m.diff(n).matmul(&halves[n - 1])).collect();

    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    for l in 1..levels {
        let beta = if l == 1 {
            spectra[1].power(1.0 - p / 2.0)
        } else {
            // Positive up to rounding because t -> t^{1 - p/2} is operator monotone.
            // The root is continuous at zero, so small eigenvalues are kept rather
            // than cut to the kernel.
            let increment = (&grow[l] - &grow[l - 1]).hermitian_part();
            matrix_function(&increment, |t| t.max(0.0).sqrt())?
        };
        let alpha = ((l + 1)..=levels)
            .fold(Operator::zeros(d), |acc, n| acc + left[n - 1].matmul(&halves[n - 1].matmul(&beta)));
        alphas.push(alpha);
        betas.push(beta);
    }

    let x1_p = crate::functionals::lp_norm_pow(&x1, p)?;
    let gap = (hardy.powf(p) - x1_p).max(0.0);
    let amplitude = (2.0 / p).sqrt() * gap.sqrt();
    let column = if hardy > 0.0 { hardy.powf(p / q) } else { 0.0 };
    let lambda = amplitude * column;
    let normalized: Vec<(Operator, Operator)> = alphas
        .iter()
        .zip(&betas)
        .map(|(a, b)| {
            if lambda > 0.0 {
                (a.scale(1.0 / amplitude), b.scale(1.0 / column))
            } else {
                (Operator::zeros(d), Operator::zeros(d))
            }
        })
        .collect();
    let certificate = check_algebraic_atom(&normalized, p, f)?;
    Ok(AlgebraicDecomposition { p, x1, alphas, betas, lambda, hardy, normalized, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Filtration;
    use crate::functionals::{hardy_norm, HardyKind};
    use crate::random;

    fn families() -> Vec<Filtration> {
        vec![
            Filtration::tensor_dyadic(3).unwrap(),
            Filtration::block_dyadic(3).unwrap(),
            Filtration::balanced_commutative(3).unwrap(),
        ]
    }

    #[test]
    fn reconstruction_and_estimates() {
        let mut rng = random::rng(11);
        for f in families() {
            for _ in 0..5 {
                let x = random::gaussian(&mut rng, f.dim());
                let x = if f.is_commutative() { f.expect(f.levels(), &x) } else { x };
                let m = Martingale::from_operator(f.clone(), &x).unwrap();
                for &p in &[0.5, 0.75, 1.0, 1.5] {
                    let dec = algebraic_decomposition(&m, p).unwrap();
                    assert!((&dec.x1 - &f.expect(1, &x)).max_abs() == 0.0);
                    let y = dec.y_part();
                    assert!((&(&dec.x1 + &y) - &x).norm2() <= 1e-8 * x.norm2());
                    assert!(f.expect(1, &y).norm2() <= 1e-9 * x.norm2().max(1.0));
                    let (lhs, rhs) = dec.estimate().unwrap();
                    if p < 1.0 {
                        assert!(lhs <= rhs + 1e-8, "{lhs} > {rhs} at p = {p}");
                    }
                    assert!(lhs <= corrected_constant(p) * dec.hardy + 1e-8);
                    let bound = (2.0 / p) * (dec.hardy.powf(p) - crate::functionals::lp_norm_pow(&dec.x1, p).unwrap());
                    assert!(dec.alpha_energy() <= bound + 1e-8 * bound.max(1.0));
                    assert!(dec.certificate.valid, "{:?}", dec.certificate);
                    let h = hardy_norm(&m, HardyKind::ConditionedColumn, p).unwrap();
                    assert!((h - dec.hardy).abs() <= 1e-10 * h.max(1.0));
                }
            }
        }
    }

    /// Two levels on four points: `x_1 = t`, `dx_2 = +-u` gives
    /// `||x_1||_1 + lambda = t + sqrt(2 sqrt(t^2 + u^2) (sqrt(t^2 + u^2) - t))`.
    #[test]
    fn estimate_with_sqrt_two_over_p_fails_at_p_one() {
        let f = Filtration::balanced_commutative(2).unwrap();
        let x = Operator::from_real_diag(&[1.4, -0.2, 1.4, -0.2]);
        let m = Martingale::from_operator(f, &x).unwrap();
        let dec = algebraic_decomposition(&m, 1.0).unwrap();
        let (t, u) = (0.6_f64, 0.8_f64);
        let h = (t * t + u * u).sqrt();
        assert!((dec.hardy - h).abs() < 1e-12);
        let lambda = (2.0 * h * (h - t)).sqrt();
        assert!((dec.lambda - lambda).abs() < 1e-12);
        let (lhs, rhs) = dec.estimate().unwrap();
        assert!(lhs > rhs + 0.05, "{lhs} vs {rhs}");
        assert!(lhs <= corrected_constant(1.0) * h);
    }

    #[test]
    fn level_one_operator_is_its_own_mean() {
        let f = Filtration::tensor_dyadic(2).unwrap();
        let mut rng = random::rng(5);
        let x = random::in_level(&mut rng, &f, 1);
        let m = Martingale::from_operator(f.clone(), &x).unwrap();
        let dec = algebraic_decomposition(&m, 1.0).unwrap();
        assert!(dec.lambda.abs() < 1e-7);
        assert!(dec.y_part().norm2() < 1e-12);
        assert!((&dec.x1 - &x).max_abs() < 1e-14);
    }

    #[test]
    fn rejects_p_out_of_range() {
        let f = Filtration::tensor_dyadic(2).unwrap();
        let m = Martingale::from_operator(f, &Operator::identity(4)).unwrap();
        assert!(algebraic_decomposition(&m, 2.0).is_err());
        assert!(algebraic_decomposition(&m, 0.0).is_err());
    }
}
