//! Noncommutative `L_p` norms, square functions, Hardy norms and the
//! column Lipschitz functional.

use serde::{Deserialize, Serialize};

use crate::algebra::eigen::rank_cutoff;
use crate::algebra::{eigenspace_projections, singular_values, Filtration, Martingale, Operator, PositiveSpectrum};
use crate::error::{NclabError, Result};
use crate::random;

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p <= 0.0 {
        return Err(NclabError::InvalidParameter(format!("exponent must be positive, got {p}")));
    }
    Ok(())
}

/// `(sum_i v_i^p / d)^{1/p}` over values above the rank cutoff; `p = inf`
/// gives the maximum.
pub fn schatten_from_values(values: &[f64], p: f64, d: usize) -> f64 {
    let vmax = values.iter().cloned().fold(0.0, f64::max);
    if vmax == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return vmax;
    }
    let cut = rank_cutoff(values);
    // Factor out the maximum so tiny p cannot underflow.
    let sum: f64 = values.iter().filter(|&&v| v > cut).map(|&v| (v / vmax).powf(p)).sum();
    vmax * (sum / d as f64).powf(1.0 / p)
}

/// `||x||_p = tau(|x|^p)^{1/p}`; `p = f64::INFINITY` gives the operator norm.
pub fn lp_norm(x: &Operator, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(schatten_from_values(&singular_values(x), p, x.dim()))
}

/// `||x||_p^p`.
pub fn lp_norm_pow(x: &Operator, p: f64) -> Result<f64> {
    Ok(lp_norm(x, p)?.powf(p))
}

/// Operator norm `||x||_inf`.
pub fn op_norm(x: &Operator) -> f64 {
    singular_values(x).first().copied().unwrap_or(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SquareKind {
    /// `S_c(x)^2 = sum |dx_k|^2`.
    #[serde(rename = "S_c")]
    Column,
    /// `S_r(x)^2 = sum |dx_k*|^2`.
    #[serde(rename = "S_r")]
    Row,
    /// `s_c(x)^2 = sum E_{k-1} |dx_k|^2`.
    #[serde(rename = "s_c")]
    ConditionedColumn,
    /// `s_r(x)^2 = sum E_{k-1} |dx_k*|^2`.
    #[serde(rename = "s_r")]
    ConditionedRow,
}

/// Squared square function up to level `upto` (all levels when `None`).
/// Conditioning uses `E_0 = E_1`.
pub fn square_function_sq(m: &Martingale, kind: SquareKind, upto: Option<usize>) -> Operator {
    let f = m.filtration();
    let n = upto.unwrap_or(m.levels()).min(m.levels());
    let mut acc = Operator::zeros(m.dim());
    for k in 1..=n {
        let dx = m.diff(k);
        let term = match kind {
            SquareKind::Column | SquareKind::ConditionedColumn => dx.abs_sq(),
            SquareKind::Row | SquareKind::ConditionedRow => dx.abs_sq_row(),
        };
        let term = match kind {
            SquareKind::ConditionedColumn | SquareKind::ConditionedRow => f.expect((k - 1).max(1), &term),
            _ => term,
        };
        acc += &term;
    }
    acc.hermitian_part()
}

/// Spectrum of the square function itself (the root of [`square_function_sq`]),
/// from singular values of the stacked difference factors.
pub fn square_spectrum(m: &Martingale, kind: SquareKind, upto: Option<usize>) -> PositiveSpectrum {
    let f = m.filtration();
    let n = upto.unwrap_or(m.levels()).min(m.levels());
    if n == 0 {
        return PositiveSpectrum::of_factors(&[Operator::zeros(m.dim())]);
    }
    let factors: Vec<Operator> = (1..=n)
        .map(|k| {
            let dx = m.diff(k).clone();
            match kind {
                SquareKind::Column => dx,
                SquareKind::Row => dx.adjoint(),
                SquareKind::ConditionedColumn => f.conditioned_factor((k - 1).max(1), &dx),
                SquareKind::ConditionedRow => f.conditioned_factor((k - 1).max(1), &dx.adjoint()),
            }
        })
        .collect();
    PositiveSpectrum::of_factors(&factors)
}

pub fn square_function(m: &Martingale, kind: SquareKind, upto: Option<usize>) -> Operator {
    square_spectrum(m, kind, upto).power(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HardyKind {
    /// `||s_c(x)||_p`.
    #[serde(rename = "h_c")]
    ConditionedColumn,
    /// `||s_r(x)||_p`.
    #[serde(rename = "h_r")]
    ConditionedRow,
    /// `(sum ||dx_k||_p^p)^{1/p}`.
    #[serde(rename = "h_d")]
    Diagonal,
    /// `||S_c(x)||_p`.
    #[serde(rename = "H_c")]
    Column,
    /// `||S_r(x)||_p`.
    #[serde(rename = "H_r")]
    Row,
}

impl HardyKind {
    pub const ALL: [HardyKind; 5] =
        [HardyKind::ConditionedColumn, HardyKind::ConditionedRow, HardyKind::Diagonal, HardyKind::Column, HardyKind::Row];

    pub fn id(self) -> &'static str {
        match self {
            HardyKind::ConditionedColumn => "h_c",
            HardyKind::ConditionedRow => "h_r",
            HardyKind::Diagonal => "h_d",
            HardyKind::Column => "H_c",
            HardyKind::Row => "H_r",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| NclabError::InvalidParameter(format!("unknown Hardy norm `{s}`")))
    }

    fn square(self) -> Option<SquareKind> {
        match self {
            HardyKind::ConditionedColumn => Some(SquareKind::ConditionedColumn),
            HardyKind::ConditionedRow => Some(SquareKind::ConditionedRow),
            HardyKind::Column => Some(SquareKind::Column),
            HardyKind::Row => Some(SquareKind::Row),
            HardyKind::Diagonal => None,
        }
    }
}

/// Hardy (quasi)norm of kind `kind`; `p` may be infinite.
pub fn hardy_norm(m: &Martingale, kind: HardyKind, p: f64) -> Result<f64> {
    check_p(p)?;
    match kind.square() {
        Some(sq) => Ok(schatten_from_values(square_spectrum(m, sq, None).values(), p, m.dim())),
        None => {
            let norms = m.diffs().iter().map(|dx| lp_norm(dx, p)).collect::<Result<Vec<_>>>()?;
            if p.is_infinite() {
                Ok(norms.into_iter().fold(0.0, f64::max))
            } else {
                Ok(norms.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p))
            }
        }
    }
}

/// `||x||_{h_p^c}` of an element of the ambient algebra.
pub fn hardy_c_of(f: &Filtration, x: &Operator, p: f64) -> Result<f64> {
    hardy_norm(&Martingale::from_operator_unchecked(f.clone(), x), HardyKind::ConditionedColumn, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    RestrictedSearch,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::RestrictedSearch => "restricted-search",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub kind: String,
    pub p: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub method: Method,
}

impl NormReport {
    pub fn exact(kind: &str, p: f64, value: f64) -> Self {
        Self { value, kind: kind.to_string(), p: Some(p), beta: None, gamma: None, method: Method::Exact }
    }
}

/// Largest number of block unions enumerated exactly.
const MAX_ENUMERATION: usize = 1 << 16;
/// Random projections drawn per level in the restricted search.
pub const RANDOM_PROJECTIONS: usize = 200;

/// Column Lipschitz functional
/// `max(||x_1||_inf, sup_n sup_{e ∈ P(M_n)} ||(x - x_n) e||_{h_gamma^c} / tau(e)^{beta + 1/gamma})`.
///
/// Exact on the commutative family (all unions of level blocks); otherwise
/// a lower bound over spectral projections of probes and random projections.
pub fn lipschitz_norm(x: &Operator, f: &Filtration, beta: f64, gamma: f64) -> Result<NormReport> {
    lipschitz_norm_seeded(x, f, beta, gamma, 0)
}

pub fn lipschitz_norm_seeded(x: &Operator, f: &Filtration, beta: f64, gamma: f64, seed: u64) -> Result<NormReport> {
    if gamma.is_nan() || gamma < 1.0 {
        return Err(NclabError::InvalidParameter(format!("gamma must be at least 1, got {gamma}")));
    }
    if beta.is_nan() || beta < 0.0 {
        return Err(NclabError::InvalidParameter(format!("beta must be nonnegative, got {beta}")));
    }
    let m = Martingale::from_operator_unchecked(f.clone(), x);
    let mut value = op_norm(m.diff(1));
    let mut method = Method::Exact;
    let exponent = beta + 1.0 / gamma;
    for n in 1..f.levels() {
        let tail = &m.terminal() - &m.partial(n);
        if tail.is_zero(0.0) {
            continue;
        }
        let (projections, exact) = level_projections(f, n, &m, seed)?;
        if !exact {
            method = Method::RestrictedSearch;
        }
        for e in projections {
            let t = e.tau().re;
            if t <= 1e-12 {
                continue;
            }
            let local = tail.matmul(&e);
            let h = hardy_c_of(f, &local, gamma)?;
            value = value.max(h / t.powf(exponent));
        }
    }
    let kind = if gamma == 2.0 && beta == 0.0 { "bmo_c" } else { "lambda_c" };
    Ok(NormReport { value, kind: kind.into(), p: None, beta: Some(beta), gamma: Some(gamma), method })
}

/// Candidate projections of `M_n` and whether they exhaust the lattice
/// for the supremum (commutative family with few blocks).
fn level_projections(f: &Filtration, n: usize, m: &Martingale, seed: u64) -> Result<(Vec<Operator>, bool)> {
    if let (true, Some(blocks)) = (f.is_commutative(), f.blocks(n)) {
        let count = blocks.len();
        if count < 64 && (1usize << count) <= MAX_ENUMERATION {
            let mut out = Vec::with_capacity((1 << count) - 1);
            for mask in 1usize..(1 << count) {
                let mut diag = vec![0.0; f.dim()];
                for (b, block) in blocks.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        for &i in block {
                            diag[i] = 1.0;
                        }
                    }
                }
                out.push(Operator::from_real_diag(&diag));
            }
            return Ok((out, true));
        }
    }
    // Probes are quadratic in x, so their eigenspaces do not change when x is
    // rescaled by a complex number.
    let mut probes = Vec::new();
    let x = m.terminal();
    probes.push(f.expect(n, &(&x - &m.partial(n)).abs_sq()));
    probes.push(f.expect(n, &x.abs_sq()));
    probes.push(f.expect(n, &x.abs_sq_row()));
    for k in n + 1..=m.levels() {
        probes.push(f.expect(n, &m.diff(k).abs_sq()));
    }
    let mut rng = random::stream(seed, n as u64);
    let mut out = Vec::new();
    for probe in &probes {
        push_spectral_family(&mut out, &probe.hermitian_part())?;
    }
    for _ in 0..RANDOM_PROJECTIONS {
        let h = random::hermitian_in_level(&mut rng, f, n);
        let clusters = eigenspace_projections(&h, 1e-8)?;
        // top-k eigenspaces for a random k
        let k = 1 + (rand::Rng::gen_range(&mut rng, 0..clusters.len().max(1)));
        let mut e = Operator::zeros(f.dim());
        for c in clusters.iter().take(k) {
            e += c;
        }
        out.push(e);
    }
    out.retain(|e| f.subalgebra_deviation(n, e) <= 1e-8);
    Ok((out, false))
}

/// Each eigenspace of `h` and each union of its top eigenspaces.
fn push_spectral_family(out: &mut Vec<Operator>, h: &Operator) -> Result<()> {
    let clusters = eigenspace_projections(h, 1e-8)?;
    let mut acc = Operator::zeros(h.dim());
    for c in &clusters {
        out.push(c.clone());
        acc += c;
        out.push(acc.clone());
    }
    Ok(())
}
