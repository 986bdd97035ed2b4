//! Validity checks for atoms. Each check returns a certificate listing every
//! condition as a signed margin; a certificate is valid when no margin is
//! below `-tolerance::ATOM`.

use serde::{Deserialize, Serialize};

use crate::algebra::{sqrt_positive, Filtration, Martingale, Operator};
use crate::error::{NclabError, Result};
use crate::functionals::{hardy_c_of, hardy_norm, lp_norm, lp_norm_pow, HardyKind};
use crate::tolerance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    /// `(p,2)` column atom.
    P2c,
    /// `(p,2)` row atom, checked through the adjoint.
    P2r,
    /// Factorized atom `a = y b`.
    Crude,
    /// `x = sum y_n b_n`.
    Algebraic,
    /// `(p,q)` column atom, `q` finite.
    Pq,
    /// `(p,inf)` column atom.
    PInfty,
}

/// One inequality `lhs <= rhs`; `margin = (rhs - lhs) / max(1, rhs)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub condition: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Margin {
    pub fn new(condition: &str, lhs: f64, rhs: f64) -> Self {
        let margin = if rhs.is_infinite() { 1.0 } else { (rhs - lhs) / rhs.max(1.0) };
        Self { condition: condition.to_string(), lhs, rhs, margin }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomCertificate {
    pub species: Species,
    pub level: Option<usize>,
    pub p: f64,
    /// `None` stands for `q = inf`.
    pub q: Option<f64>,
    /// `tau(e)` for species carrying a projection.
    pub trace_e: Option<f64>,
    pub margins: Vec<Margin>,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_id: Option<String>,
}

impl AtomCertificate {
    fn finish(species: Species, level: Option<usize>, p: f64, q: Option<f64>, trace_e: Option<f64>, margins: Vec<Margin>) -> Self {
        let valid = margins.iter().all(|m| m.margin >= -tolerance::ATOM && m.margin.is_finite());
        Self { species, level, p, q, trace_e, margins, valid, instance_id: None }
    }

    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn with_instance(mut self, id: impl Into<String>) -> Self {
        self.instance_id = Some(id.into());
        self
    }
}

/// Conjugate index `1/q = 1/p - 1/2`.
pub fn conjugate_index(p: f64) -> f64 {
    2.0 * p / (2.0 - p)
}

fn check_small_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 2.0) {
        return Err(NclabError::InvalidParameter(format!("p must lie in (0, 2), got {p}")));
    }
    Ok(())
}

fn relative(part: f64, whole: f64) -> f64 {
    if whole == 0.0 {
        0.0
    } else {
        part / whole
    }
}

/// Fails unless `e` is a projection of `M_n`.
fn require_level_projection(e: &Operator, n: usize, f: &Filtration) -> Result<()> {
    let deviation = e.projection_deviation();
    if deviation > tolerance::ATOM {
        return Err(NclabError::NotProjection { deviation });
    }
    f.require_in_level(n, e, tolerance::ATOM)
}

fn mean_zero_margin(a: &Operator, n: usize, f: &Filtration) -> Margin {
    Margin::new("conditional mean vanishes", relative(f.expect(n, a).norm2(), a.norm2()), 0.0)
}

fn support_margin(a: &Operator, e: &Operator) -> Margin {
    let outside = (a - &a.matmul(e)).norm2();
    Margin::new("right support below e", relative(outside, a.norm2()), 0.0)
}

/// `E_n(a) = 0`, `r(a) <= e`, `||a||_2 <= tau(e)^{1/2 - 1/p}`.
pub fn check_p2c_atom(a: &Operator, n: usize, e: &Operator, p: f64, f: &Filtration) -> Result<AtomCertificate> {
    check_small_p(p)?;
    require_level_projection(e, n, f)?;
    let t = e.tau().re;
    let bound = if t > 0.0 { t.powf(0.5 - 1.0 / p) } else { 0.0 };
    let margins = vec![
        mean_zero_margin(a, n, f),
        support_margin(a, e),
        Margin::new("L2 size", a.norm2(), bound),
    ];
    Ok(AtomCertificate::finish(Species::P2c, Some(n), p, Some(2.0), Some(t), margins))
}

/// Row version: `a*` is a column atom.
pub fn check_p2r_atom(a: &Operator, n: usize, e: &Operator, p: f64, f: &Filtration) -> Result<AtomCertificate> {
    let mut c = check_p2c_atom(&a.adjoint(), n, e, p, f)?;
    c.species = Species::P2r;
    Ok(c)
}

/// `||y||_2 <= 1`, `E_n(y) = 0`, `b ∈ M_n`, `||b||_q <= 1`.
pub fn check_crude_atom(y: &Operator, b: &Operator, n: usize, p: f64, f: &Filtration) -> Result<AtomCertificate> {
    check_small_p(p)?;
    f.require_in_level(n, b, tolerance::ATOM)?;
    let q = conjugate_index(p);
    let margins = vec![
        Margin::new("L2 size of y", y.norm2(), 1.0),
        mean_zero_margin(y, n, f),
        Margin::new("Lq size of b", lp_norm(b, q)?, 1.0),
    ];
    Ok(AtomCertificate::finish(Species::Crude, Some(n), p, Some(q), None, margins))
}

/// Parts `(y_n, b_n)` for `n = 1, 2, ...`: `E_n(y_n) = 0`, `b_n ∈ M_n`,
/// `sum ||y_n||_2^2 <= 1`, `||(sum |b_n|^2)^{1/2}||_q <= 1`.
pub fn check_algebraic_atom(parts: &[(Operator, Operator)], p: f64, f: &Filtration) -> Result<AtomCertificate> {
    check_small_p(p)?;
    if parts.len() > f.levels() {
        return Err(NclabError::DimensionMismatch { expected: f.levels(), got: parts.len() });
    }
    let q = conjugate_index(p);
    let mut margins = Vec::new();
    let mut energy = 0.0;
    let mut column = Operator::zeros(f.dim());
    let mut worst_mean: f64 = 0.0;
    let mut worst_level: f64 = 0.0;
    for (k, (y, b)) in parts.iter().enumerate() {
        let n = k + 1;
        worst_mean = worst_mean.max(relative(f.expect(n, y).norm2(), y.norm2()));
        worst_level = worst_level.max(relative(f.subalgebra_deviation(n, b), b.norm2()));
        energy += y.norm2().powi(2);
        column += &b.abs_sq();
    }
    margins.push(Margin::new("conditional means vanish", worst_mean, 0.0));
    margins.push(Margin::new("b_n adapted", worst_level, 0.0));
    margins.push(Margin::new("square-summable y", energy, 1.0));
    let col = sqrt_positive(&column.hermitian_part())?;
    margins.push(Margin::new("column Lq size of b", lp_norm(&col, q)?, 1.0));
    Ok(AtomCertificate::finish(Species::Algebraic, None, p, Some(q), None, margins))
}

/// `E_n(a) = 0`, `r(a) <= e`, `||a||_{h_q^c} <= tau(e)^{1/q - 1/p}`; `q` may be infinite.
pub fn check_pq_atom(a: &Operator, n: usize, e: &Operator, p: f64, q: f64, f: &Filtration) -> Result<AtomCertificate> {
    check_small_p(p)?;
    if q.is_nan() || q <= p.max(1.0) {
        return Err(NclabError::InvalidParameter(format!("q must exceed max(p, 1) = {}, got {q}", p.max(1.0))));
    }
    require_level_projection(e, n, f)?;
    let t = e.tau().re;
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    let bound = if t > 0.0 { t.powf(inv_q - 1.0 / p) } else { 0.0 };
    let margins = vec![
        mean_zero_margin(a, n, f),
        support_margin(a, e),
        Margin::new("conditioned square size", hardy_c_of(f, a, q)?, bound),
    ];
    let (species, qq) = if q.is_infinite() { (Species::PInfty, None) } else { (Species::Pq, Some(q)) };
    Ok(AtomCertificate::finish(species, Some(n), p, qq, Some(t), margins))
}

/// Both sides of the algebraic-atom estimate
/// `max(||x||_{H_p^c}, ||x||_{h_p^c}) <= (||x_1||_p^p + sum ||a_n||_2^2)^{1/2}
///  * ||(|x_1|^{2-p} + sum |b_n|^2)^{1/2}||_q`
/// for `x = x_1 + sum a_n b_n`.
pub fn lemma_alg_bound(x1: &Operator, parts: &[(Operator, Operator)], p: f64, f: &Filtration) -> Result<(f64, f64)> {
    check_small_p(p)?;
    let q = conjugate_index(p);
    let mut x = x1.clone();
    let mut energy = lp_norm_pow(x1, p)?;
    let mut column = crate::algebra::pseudo_power(&crate::algebra::modulus(x1), 2.0 - p)?;
    for (a, b) in parts {
        x += &a.matmul(b);
        energy += a.norm2().powi(2);
        column += &b.abs_sq();
    }
    let m = Martingale::from_operator_unchecked(f.clone(), &x);
    let lhs = hardy_norm(&m, HardyKind::Column, p)?.max(hardy_norm(&m, HardyKind::ConditionedColumn, p)?);
    let rhs = energy.sqrt() * lp_norm(&sqrt_positive(&column.hermitian_part())?, q)?;
    Ok((lhs, rhs))
}
