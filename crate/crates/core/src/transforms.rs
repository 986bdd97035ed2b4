//! Fractional integrals, the constants `zeta_n`, regularity of filtrations,
//! and the comparison of `h_p^c` with `H_p^c` on regular filtrations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::eigen::eig_hermitian_unchecked;
use crate::algebra::{Filtration, Martingale, Operator, PositiveSpectrum, C64};
use crate::atoms::{check_crude_atom, conjugate_index, AtomCertificate};
use crate::error::{NclabError, Result};
use crate::functionals::{hardy_norm, lp_norm, HardyKind};
use crate::random;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaMethod {
    /// Closed form or search that met its upper bound.
    ExactSmallDim,
    /// Alternating maximization; `zeta_n` may be overestimated.
    SampledLowerBound,
    Configured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaProfile {
    /// `values[n - 1] = zeta_n`; `None` when the difference space is trivial.
    pub values: Vec<Option<f64>>,
    pub method: ZetaMethod,
}

impl ZetaProfile {
    pub fn configured(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&z| !(z > 0.0 && z <= 1.0)) {
            return Err(NclabError::InvalidParameter("configured zeta values must lie in (0, 1]".into()));
        }
        Ok(Self { values: values.into_iter().map(Some).collect(), method: ZetaMethod::Configured })
    }

    /// `zeta_k`, 1-indexed.
    pub fn get(&self, k: usize) -> Option<f64> {
        self.values.get(k.checked_sub(1)?).copied().flatten()
    }
}

/// `D_n = E_n - E_{n-1}` with `E_0 = 0`, the trace-orthogonal projection onto
/// the level-`n` difference space.
pub fn difference_projection(f: &Filtration, n: usize, x: &Operator) -> Operator {
    let top = f.expect(n, x);
    if n == 1 {
        top
    } else {
        &top - &f.expect(n - 1, x)
    }
}

/// Number of alternating-maximization restarts per level.
const ZETA_RESTARTS: usize = 32;
const ZETA_SWEEPS: usize = 50;

/// `zeta_n = 1 / sup_{x ∈ D_n} (||x||_inf / ||x||_2)^2`.
///
/// Commutative filtrations use the closed form `1 / (d max_i P_ii)` with `P`
/// the projection onto `D_n`. Otherwise `sup ||x||_inf^2 / ||x||_2^2 =
/// d sup_{u,v} ||D_n(u v*)||_F^2` is maximized alternately in `u` and `v`.
pub fn zeta_profile(f: &Filtration, seed: u64) -> ZetaProfile {
    let d = f.dim();
    let levels = f.levels();
    if f.is_commutative() {
        let values = (1..=levels)
            .map(|n| {
                let diag = commutative_difference_diagonal(f, n);
                let top = diag.iter().cloned().fold(0.0, f64::max);
                (top > 1e-12).then(|| 1.0 / (d as f64 * top))
            })
            .collect();
        return ZetaProfile { values, method: ZetaMethod::ExactSmallDim };
    }
    let mut exact = true;
    let mut values = Vec::with_capacity(levels);
    for n in 1..=levels {
        let mut rng = random::stream(seed, n as u64);
        let mut best: f64 = 0.0;
        for _ in 0..ZETA_RESTARTS {
            best = best.max(alternating_ratio_sq(f, n, &mut rng));
            if best >= d as f64 * (1.0 - 1e-12) {
                break;
            }
        }
        if best <= 1e-12 {
            values.push(None);
            continue;
        }
        // d is the largest possible ratio, attained by rank-one elements.
        if best < d as f64 * (1.0 - 1e-9) {
            exact = false;
        }
        values.push(Some((1.0 / best).min(1.0)));
    }
    let method = if exact { ZetaMethod::ExactSmallDim } else { ZetaMethod::SampledLowerBound };
    ZetaProfile { values, method }
}

/// Diagonal of the projection onto `D_n` for a commutative filtration:
/// `1/|B_n(i)| - 1/|B_{n-1}(i)|`.
fn commutative_difference_diagonal(f: &Filtration, n: usize) -> Vec<f64> {
    let d = f.dim();
    let block_size = |level: usize| -> Vec<f64> {
        let mut size = vec![0.0; d];
        for block in f.blocks(level).expect("commutative filtration has blocks") {
            for &i in block {
                size[i] = block.len() as f64;
            }
        }
        size
    };
    let fine = block_size(n);
    if n == 1 {
        return fine.iter().map(|s| 1.0 / s).collect();
    }
    let coarse = block_size(n - 1);
    fine.iter().zip(&coarse).map(|(a, b)| 1.0 / a - 1.0 / b).collect()
}

/// Gram matrix `G_ij = <D_n(e_i w*), D_n(e_j w*)>_F` of `u -> D_n(u w*)`.
fn gram(f: &Filtration, n: usize, w: &[C64]) -> Operator {
    let d = f.dim();
    let images: Vec<Operator> = (0..d)
        .map(|j| {
            let mut e = vec![C64::new(0.0, 0.0); d];
            e[j] = C64::new(1.0, 0.0);
            difference_projection(f, n, &Operator::outer(&e, w))
        })
        .collect();
    Operator::from_fn(d, |i, j| images[i].data().iter().zip(images[j].data()).map(|(a, b)| a.conj() * b).sum())
}

fn alternating_ratio_sq(f: &Filtration, n: usize, rng: &mut impl Rng) -> f64 {
    let d = f.dim();
    let mut v = random::unit_vector(rng, d);
    let mut value: f64 = 0.0;
    for _ in 0..ZETA_SWEEPS {
        let g = eig_hermitian_unchecked(&gram(f, n, &v));
        let u = g.vector(0);
        // D_n commutes with the adjoint, so the roles of u and v swap.
        let h = eig_hermitian_unchecked(&gram(f, n, &u));
        let next = h.values[0].max(0.0);
        v = h.vector(0);
        let improved = next > value * (1.0 + 1e-13);
        value = value.max(next);
        if !improved {
            break;
        }
    }
    d as f64 * value
}

/// `(I^alpha x)_n = sum_{k <= n} zeta_k^alpha dx_k`.
pub fn fractional_integral(m: &Martingale, alpha: f64, zeta: &ZetaProfile) -> Result<Martingale> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(NclabError::InvalidParameter(format!("order must be positive, got {alpha}")));
    }
    let mut missing = None;
    let out = m.map_diffs(|k, dx| match zeta.get(k) {
        Some(z) => dx.scale(z.powf(alpha)),
        None if dx.max_abs() == 0.0 => dx.clone(),
        None => {
            missing = Some(k);
            dx.clone()
        }
    });
    match missing {
        Some(k) => Err(NclabError::InvalidParameter(format!("no zeta value for level {k}"))),
        None => Ok(out),
    }
}

/// Per-level `(zeta_k^{alpha q} ||dx_k||_q^q, ||dx_k||_p^q)` with `alpha q = (q - p)/p`.
pub fn diagonal_inequality(m: &Martingale, p: f64, q: f64, zeta: &ZetaProfile) -> Result<Vec<(f64, f64)>> {
    if !(p > 0.0 && q > p) {
        return Err(NclabError::InvalidParameter(format!("need 0 < p < q, got p = {p}, q = {q}")));
    }
    let mut rows = Vec::new();
    for k in 1..=m.levels() {
        let dx = m.diff(k);
        let Some(z) = zeta.get(k) else { continue };
        let lhs = z.powf((q - p) / p) * lp_norm(dx, q)?.powf(q);
        let rhs = lp_norm(dx, p)?.powf(q);
        rows.push((lhs, rhs));
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Exhaustive over the finite set of extreme positive elements.
    Exact,
    /// Lower bound on the minimal constant, re-verified on fresh samples.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Smallest `C` found with `E_n(x) <= C E_{n-1}(x)` for `n >= 2`.
    pub constant: f64,
    pub certified: Certification,
    /// `per_level[n - 2]` for `n = 2..=N`.
    pub per_level: Vec<f64>,
    /// Fresh samples re-checked at `constant`, and the worst
    /// `lambda_min(C E_{n-1}(x) - E_n(x)) / ||E_n(x)||` among them.
    pub verified_samples: usize,
    pub worst_verification: f64,
}

/// Minimal regularity constant over `n = 2..=N`. Commutative filtrations use
/// the exact block ratio `max |B_{n-1}| / |B_n|`; otherwise `budget` random
/// rank-one elements are refined by ascent, and the result is re-verified on
/// `budget` fresh positive samples.
pub fn regularity_constant(f: &Filtration, budget: usize, seed: u64) -> RegularityReport {
    let levels = f.levels();
    let d = f.dim();
    if levels == 1 {
        return RegularityReport {
            constant: 1.0,
            certified: Certification::Exact,
            per_level: Vec::new(),
            verified_samples: 0,
            worst_verification: 0.0,
        };
    }
    if f.is_commutative() {
        let per_level: Vec<f64> = (2..=levels)
            .map(|n| {
                let fine = f.blocks(n).unwrap();
                let coarse = f.blocks(n - 1).unwrap();
                fine.iter()
                    .map(|b| {
                        let parent = coarse.iter().find(|c| c.contains(&b[0])).unwrap();
                        parent.len() as f64 / b.len() as f64
                    })
                    .fold(1.0, f64::max)
            })
            .collect();
        let constant = per_level.iter().cloned().fold(1.0, f64::max);
        return RegularityReport {
            constant,
            certified: Certification::Exact,
            per_level,
            verified_samples: 0,
            worst_verification: 0.0,
        };
    }
    let mut rng = random::stream(seed, 0);
    let mut per_level = Vec::new();
    for n in 2..=levels {
        let mut best: f64 = 1.0;
        for _ in 0..budget.max(1) {
            let mut v = random::unit_vector(&mut rng, d);
            for _ in 0..20 {
                let x = Operator::outer(&v, &v);
                let y = f.expect(n, &x);
                let a = f.expect(n - 1, &x);
                let inv_root = PositiveSpectrum::of(&a.hermitian_part()).expect("Hermitian").power(-0.5);
                let core = inv_root.matmul(&y).matmul(&inv_root).hermitian_part();
                let eig = eig_hermitian_unchecked(&core);
                let c = eig.values[0];
                let improved = c > best * (1.0 + 1e-12);
                best = best.max(c);
                if !improved {
                    break;
                }
                // Move toward the maximizing direction of y relative to a.
                let w = inv_root.apply(&eig.vector(0));
                let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm == 0.0 {
                    break;
                }
                v = w.iter().map(|z| z / norm).collect();
            }
        }
        per_level.push(best);
    }
    let constant = per_level.iter().cloned().fold(1.0, f64::max);
    let mut fresh = random::stream(seed, 1);
    let mut worst = f64::INFINITY;
    for i in 0..budget {
        let x = if i % 2 == 0 {
            let v = random::unit_vector(&mut fresh, d);
            Operator::outer(&v, &v)
        } else {
            random::positive(&mut fresh, d)
        };
        for n in 2..=levels {
            let y = f.expect(n, &x);
            let a = f.expect(n - 1, &x);
            let gap = (&a.scale(constant) - &y).hermitian_part();
            let low = eig_hermitian_unchecked(&gap).values[d - 1];
            worst = worst.min(low / crate::functionals::op_norm(&y).max(1e-300));
        }
    }
    RegularityReport {
        constant,
        certified: Certification::Sampled,
        per_level,
        verified_samples: budget,
        worst_verification: if budget == 0 { 0.0 } else { worst },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegHardyCheck {
    pub h_norm: f64,
    pub big_h_norm: f64,
    /// `max(sqrt(p/2), sqrt(1/C)) ||x||_{H_p^c}`, to be at most `h_norm`.
    pub lower_bound: f64,
    /// `C^{1/p - 1/2} (2/p)^{1/p} ||x||_{H_p^c}`, to be at least `h_norm`.
    pub upper_bound: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl RegHardyCheck {
    /// `||x||_{h_p^c} / ||x||_{H_p^c}`.
    pub fn ratio(&self) -> f64 {
        if self.big_h_norm == 0.0 {
            1.0
        } else {
            self.h_norm / self.big_h_norm
        }
    }
}

/// Both inequalities of the `h_p^c` / `H_p^c` equivalence on a
/// `C`-regular filtration, each within `tol` relative to `max(1, rhs)`.
pub fn reg_hardy_check(m: &Martingale, p: f64, c: f64, tol: f64) -> Result<RegHardyCheck> {
    if !(p > 0.0 && p < 2.0) {
        return Err(NclabError::InvalidParameter(format!("p must lie in (0, 2), got {p}")));
    }
    if !(c >= 1.0) {
        return Err(NclabError::InvalidParameter(format!("regularity constant must be at least 1, got {c}")));
    }
    let h = hardy_norm(m, HardyKind::ConditionedColumn, p)?;
    let big = hardy_norm(m, HardyKind::Column, p)?;
    let lower_bound = (p / 2.0).sqrt().max((1.0 / c).sqrt()) * big;
    let upper_bound = c.powf(1.0 / p - 0.5) * (2.0 / p).powf(1.0 / p) * big;
    Ok(RegHardyCheck {
        h_norm: h,
        big_h_norm: big,
        lower_bound,
        upper_bound,
        lower_ok: lower_bound - h <= tol * h.max(1.0),
        upper_ok: h - upper_bound <= tol * upper_bound.max(1.0),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FractionalReport {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    /// `||I^alpha x||_{h_q^c} / ||x||_{h_p^c}` per trial.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Worst `(rhs - lhs) / max(1, rhs)` of the per-difference inequality.
    pub diagonal_margin: f64,
    pub crude: Option<CrudeTransferReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrudeTransferReport {
    pub gamma: f64,
    /// Largest observed `||I^gamma y||_r / ||y||_2` over the trials' `y`.
    pub c_gamma: f64,
    pub certificates: Vec<AtomCertificate>,
}

/// Random-trial estimate of `||I^alpha: h_p^c -> h_q^c||` with
/// `alpha = 1/p - 1/q`, the per-difference inequality on the same trials,
/// and, when `alpha < 1/2`, the transfer of crude `p`-atoms to crude
/// `q`-atoms with the empirical constant `C_alpha`.
pub fn fractional_boundedness(f: &Filtration, p: f64, q: f64, trials: usize, seed: u64, zeta: &ZetaProfile) -> Result<FractionalReport> {
    if !(p > 0.0 && p <= 1.0 && q > p && q < 2.0) {
        return Err(NclabError::InvalidParameter(format!("need 0 < p <= 1 and p < q < 2, got p = {p}, q = {q}")));
    }
    let alpha = 1.0 / p - 1.0 / q;
    let d = f.dim();
    let mut rng = random::stream(seed, 0);
    let mut ratios = Vec::with_capacity(trials);
    let mut diagonal_margin = f64::INFINITY;
    for _ in 0..trials {
        let x = f.expect(f.levels(), &random::gaussian(&mut rng, d));
        let m = Martingale::from_operator_unchecked(f.clone(), &x);
        let image = fractional_integral(&m, alpha, zeta)?;
        let denom = hardy_norm(&m, HardyKind::ConditionedColumn, p)?;
        if denom > 0.0 {
            ratios.push(hardy_norm(&image, HardyKind::ConditionedColumn, q)? / denom);
        }
        for (lhs, rhs) in diagonal_inequality(&m, p, q, zeta)? {
            diagonal_margin = diagonal_margin.min((rhs - lhs) / rhs.max(1.0));
        }
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let crude = if alpha < 0.5 && f.levels() >= 2 { Some(crude_transfer(f, p, q, trials, seed, zeta)?) } else { None };
    Ok(FractionalReport { p, q, alpha, ratios, max_ratio, diagonal_margin, crude })
}

/// `a = y b` with `E_n(y) = 0`, `||y||_2 = 1`, `b >= 0` in `M_n`,
/// `||b||_{r_0} = 1`, is mapped to `y' = C^{-1} (I^gamma y) b^{gamma r_0}`,
/// `b' = b^{1 - gamma r_0}`, which should be a crude `p_1`-atom.
fn crude_transfer(f: &Filtration, p0: f64, p1: f64, trials: usize, seed: u64, zeta: &ZetaProfile) -> Result<CrudeTransferReport> {
    let gamma = 1.0 / p0 - 1.0 / p1;
    let r = 1.0 / (0.5 - gamma);
    let r0 = conjugate_index(p0);
    let d = f.dim();
    let mut rng = random::stream(seed, 1);
    let mut pairs = Vec::with_capacity(trials);
    let mut c_gamma: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.gen_range(1..f.levels());
        let g = random::gaussian(&mut rng, d);
        let y = &g - &f.expect(n, &g);
        let y = y.scale(1.0 / y.norm2());
        let b = random::positive_in_level(&mut rng, f, n);
        let b = b.scale(1.0 / lp_norm(&b, r0)?);
        let iy = fractional_integral(&Martingale::from_operator_unchecked(f.clone(), &y), gamma, zeta)?.terminal();
        c_gamma = c_gamma.max(lp_norm(&iy, r)?);
        pairs.push((n, iy, b));
    }
    let mut certificates = Vec::with_capacity(trials);
    for (n, iy, b) in pairs {
        let spectrum = PositiveSpectrum::of(&b)?;
        let y_hat = iy.scale(1.0 / c_gamma).matmul(&spectrum.power(gamma * r0));
        let b_hat = spectrum.power(1.0 - gamma * r0);
        certificates.push(check_crude_atom(&y_hat, &b_hat, n, p1, f)?);
    }
    Ok(CrudeTransferReport { gamma, c_gamma, certificates })
}
