//! The suite registry. Each suite turns one [`Case`] into checks
//! `lhs <= rhs`; identity-type suites use `lhs = error`, `rhs = tolerance`
//! and a zero margin tolerance.

use rand::Rng;
use serde_json::json;

use super::{Case, Check, DEFAULT_EPS};
use crate::algebra::eigen::eig_hermitian_unchecked;
use crate::algebra::{
    geometric_slices, matrix_function, projection_meet, pseudo_power, sqrt_positive, support_projection, FamilyKind,
    Filtration, Martingale, Operator, Side,
};
use crate::atoms::{check_algebraic_atom, check_crude_atom, check_p2c_atom, check_pq_atom, conjugate_index, lemma_alg_bound};
use crate::decompositions::{
    algebraic_decomposition, crude_to_atoms, cuculescu, p_infty_decomposition, weak_atomic_decomposition, PInftyOptions,
};
use crate::error::{NclabError, Result};
use crate::functionals::{hardy_c_of, hardy_norm, lp_norm, op_norm, square_function_sq, HardyKind, SquareKind};
use crate::random;
use crate::tolerance;
use crate::transforms::{
    diagonal_inequality, difference_projection, fractional_boundedness, fractional_integral, reg_hardy_check,
    regularity_constant, zeta_profile,
};

pub struct Suite {
    pub name: &'static str,
    pub summary: &'static str,
    /// Invariant ids from [`INVARIANTS`] this suite is responsible for.
    pub covers: &'static [&'static str],
    /// Rows pass when `margin >= -eps`.
    pub eps: f64,
    pub default_trials: usize,
    pub families: fn() -> &'static [FamilyKind],
    /// Depths cycled over case indices.
    pub levels: fn(FamilyKind) -> &'static [usize],
    pub run: fn(&Case) -> Result<Vec<Check>>,
}

/// Every module invariant, each owned by exactly one suite.
pub const INVARIANTS: &[&str] = &[
    "algebra_core/trace-preservation",
    "algebra_core/tower",
    "algebra_core/spectral-partition",
    "algebra_core/meet-diagonal",
    "algebra_core/pseudo-power-additivity",
    "functionals/rev-triangle",
    "functionals/com-l2",
    "functionals/mart-2",
    "functionals/direct-sum",
    "functionals/h2-equals-l2",
    "atoms/lemma-alg",
    "atoms/crude-norms",
    "atoms/inclusions",
    "decompositions/reconstruction",
    "decompositions/uniqueness",
    "decompositions/cuculescu-oracle",
    "decompositions/step2-bookkeeping",
    "decompositions/orthogonality",
    "transforms/semigroup",
    "transforms/diag",
    "transforms/reg-hardy",
    "harness/replay",
    "harness/coverage",
];

/// The exponent grid of the main inequalities.
pub const P_GRID: [f64; 4] = [0.5, 0.75, 1.0, 1.5];

fn all_families() -> &'static [FamilyKind] {
    &FamilyKind::ALL
}

fn commutative_only() -> &'static [FamilyKind] {
    &[FamilyKind::CommutativePartition]
}

fn small(_: FamilyKind) -> &'static [usize] {
    &[2, 3]
}

fn medium(_: FamilyKind) -> &'static [usize] {
    &[2, 3, 4]
}

fn up_to_32(_: FamilyKind) -> &'static [usize] {
    &[2, 3, 4, 5]
}

fn oracle_depths(_: FamilyKind) -> &'static [usize] {
    &[2, 3, 4]
}

fn one_depth(_: FamilyKind) -> &'static [usize] {
    &[2]
}

macro_rules! suite {
    ($name:expr, $summary:expr, $covers:expr, $eps:expr, $trials:expr, $families:expr, $levels:expr, $run:expr) => {
        Suite {
            name: $name,
            summary: $summary,
            covers: $covers,
            eps: $eps,
            default_trials: $trials,
            families: $families,
            levels: $levels,
            run: $run,
        }
    };
}

pub static SUITES: &[Suite] = &[
    suite!("trace", "tau(E_n x) = tau(x)", &["algebra_core/trace-preservation"], 0.0, 100, all_families, medium, trace),
    suite!("tower", "E_m E_n = E_min(m,n)", &["algebra_core/tower"], 0.0, 100, all_families, medium, tower),
    suite!(
        "spectral-partition",
        "geometric slices sum to the support projection",
        &["algebra_core/spectral-partition"],
        0.0,
        100,
        all_families,
        small,
        spectral_partition
    ),
    suite!("meet", "meet of commuting diagonal projections, exhaustive for d <= 8", &["algebra_core/meet-diagonal"], 0.0, 8, commutative_only, one_depth, meet),
    suite!(
        "pseudo-power",
        "x^s phi_t(x) = x^(s+t) on the support",
        &["algebra_core/pseudo-power-additivity"],
        0.0,
        100,
        all_families,
        small,
        pseudo_power_additivity
    ),
    suite!("rev-triangle", "||a||_r + ||b||_r <= ||a+b||_r for r < 1", &["functionals/rev-triangle"], DEFAULT_EPS, 250, all_families, small, rev_triangle),
    suite!("com-l2", "(sum ||a_n||_p^2)^(1/2) <= ||(sum |a_n|^2)^(1/2)||_p", &["functionals/com-l2"], DEFAULT_EPS, 250, all_families, small, com_l2),
    suite!("mart-2", "tau(a^(p-2)(a^2-b^2)) <= (2/p) tau(a^p-b^p)", &["functionals/mart-2"], DEFAULT_EPS, 250, all_families, small, mart_2),
    suite!("direct-sum", "both halves of h_p^c = L_p(M_1) + h_p^0", &["functionals/direct-sum"], DEFAULT_EPS, 100, all_families, medium, direct_sum),
    suite!("h2-l2", "||x||_(H_2^c) = ||x||_2", &["functionals/h2-equals-l2"], 0.0, 100, all_families, medium, h2_l2),
    suite!("best-constant", "||x||_p <= sqrt(2/p) ||x||_(h_p^c)", &[], DEFAULT_EPS, 200, all_families, medium, best_constant),
    suite!("lemma-alg", "algebraic atom estimate", &["atoms/lemma-alg"], 1e-7, 250, all_families, small, lemma_alg),
    suite!("crude-norms", "crude atoms lie in the unit balls of h_p^c and H_p^c", &["atoms/crude-norms"], DEFAULT_EPS, 100, all_families, small, crude_norms),
    suite!("inclusions", "implications between atom species", &["atoms/inclusions"], 0.0, 100, all_families, small, inclusions),
    suite!("reconstruction", "every decomposition reconstructs its input", &["decompositions/reconstruction"], 0.0, 50, all_families, small, reconstruction),
    suite!("uniqueness", "x_1 = E_1(x) and E_1(y) = 0", &["decompositions/uniqueness"], 0.0, 100, all_families, medium, uniqueness),
    suite!("theorem-main", "||x_1||_p + lambda <= sqrt(2/p) ||x||_(h_p^c) and the alpha energy bound", &[], DEFAULT_EPS, 100, all_families, up_to_32, theorem_main),
    suite!("crude", "slices of crude atoms: valid atoms and (sum lambda^p)^(1/p) <= beta", &[], DEFAULT_EPS, 100, all_families, small, crude),
    suite!("weak", "weak atomic decomposition bound", &[], DEFAULT_EPS, 50, all_families, small, weak),
    suite!("atom-1", "sum lambda_l <= sqrt(2) beta ||x||_(h_1^c)", &[], DEFAULT_EPS, 50, all_families, small, atom_1),
    suite!("cuculescu", "Cuculescu trajectory invariants", &[], tolerance::IDENTITY, 100, all_families, small, cuculescu_invariants),
    suite!(
        "cuculescu-oracle",
        "agreement with scalar stopping times on diagonal instances",
        &["decompositions/cuculescu-oracle"],
        0.0,
        200,
        commutative_only,
        oracle_depths,
        cuculescu_oracle
    ),
    suite!("pinfty", "(p,inf) decomposition of (p,2) atoms", &[], 1e-6, 20, all_families, small, pinfty),
    suite!(
        "step2",
        "disjointness, partition, trace and energy bounds of the first split",
        &["decompositions/step2-bookkeeping", "decompositions/orthogonality"],
        DEFAULT_EPS,
        20,
        all_families,
        small,
        step2
    ),
    suite!("semigroup", "I^a I^b = I^(a+b)", &["transforms/semigroup"], 0.0, 50, all_families, small, semigroup),
    suite!("diag", "zeta_k^(alpha q) ||dx_k||_q^q <= ||dx_k||_p^q", &["transforms/diag"], DEFAULT_EPS, 250, all_families, small, diag),
    suite!("infty-2", "||x||_inf <= zeta_n^(-1/2) ||x||_2 on D_n", &[], DEFAULT_EPS, 250, all_families, small, infty_2),
    suite!("reg-hardy", "h_p^c and H_p^c are equivalent on regular filtrations", &["transforms/reg-hardy"], DEFAULT_EPS, 100, all_families, small, reg_hardy),
    suite!("regularity", "E_n(x) <= C E_(n-1)(x) at the reported C", &[], tolerance::IDENTITY, 10, all_families, small, regularity),
    suite!("fractional", "crude atoms transferred by I^gamma stay crude atoms", &[], DEFAULT_EPS, 10, all_families, small, fractional),
    suite!("replay", "rows re-execute bit for bit from their serialized form", &["harness/replay"], 0.0, 20, all_families, small, replay_rows),
    suite!("coverage", "every invariant belongs to exactly one suite", &["harness/coverage"], 0.0, 1, commutative_only, one_depth, coverage),
];

pub fn find_suite(name: &str) -> Result<&'static Suite> {
    SUITES.iter().find(|s| s.name == name).ok_or_else(|| NclabError::UnknownSuite(name.to_string()))
}

/// Invariants owned by no suite, and those owned by more than one.
pub fn coverage_gaps() -> (Vec<&'static str>, Vec<&'static str>) {
    let mut missing = Vec::new();
    let mut duplicated = Vec::new();
    for id in INVARIANTS {
        match SUITES.iter().filter(|s| s.covers.contains(id)).count() {
            0 => missing.push(*id),
            1 => {}
            _ => duplicated.push(*id),
        }
    }
    for s in SUITES {
        for id in s.covers {
            if !INVARIANTS.contains(id) && !missing.contains(id) {
                missing.push(id);
            }
        }
    }
    (missing, duplicated)
}

// Builders shared by the suites.

fn identity_check(params: serde_json::Value, error: f64, tol: f64) -> Check {
    Check::new(None, None, params, error, tol)
}

/// Indicator of a failed implication `premise => conclusion`.
fn implication(premise: bool, conclusion: bool) -> f64 {
    if premise && !conclusion {
        1.0
    } else {
        0.0
    }
}

/// `U diag(values) U*` for a random unitary `U`.
fn with_spectrum(rng: &mut impl Rng, values: &[f64]) -> Operator {
    let d = values.len();
    let u = eig_hermitian_unchecked(&random::hermitian(rng, d)).vectors;
    Operator::from_fn(d, |i, j| (0..d).map(|k| u.get(i, k) * u.get(j, k).conj() * values[k]).sum())
}

/// A positive operator of random rank with eigenvalues spread over
/// several orders of magnitude.
fn ranked_positive(rng: &mut impl Rng, d: usize) -> Operator {
    let rank = rng.gen_range(1..=d);
    let values: Vec<f64> = (0..d).map(|k| if k < rank { 10f64.powf(rng.gen_range(-2.0..2.0)) } else { 0.0 }).collect();
    with_spectrum(rng, &values).hermitian_part()
}

/// `(y, b, n)` with `E_n(y) = 0`, `||y||_2 = 1`, `b ∈ M_n`, `||b||_q = 1`.
fn crude_data(case: &Case, rng: &mut impl Rng, p: f64) -> Result<(Operator, Operator, usize)> {
    let f = &case.filtration;
    let n = rng.gen_range(1..f.levels());
    let y = random::mean_zero_after(rng, f, n);
    let b = random::in_level(rng, f, n);
    let b = b.scale(1.0 / lp_norm(&b, conjugate_index(p))?);
    Ok((y, b, n))
}

/// A random `(p,2)` column atom at a random level below the top.
fn p2c_data(case: &Case, rng: &mut impl Rng, p: f64) -> (Operator, Operator, usize) {
    let n = rng.gen_range(1..case.filtration.levels());
    let (a, e) = random::p2c_atom(rng, &case.filtration, n, p);
    (a, e, n)
}

fn conditioned_squares(m: &Martingale) -> Vec<Operator> {
    (1..=m.levels()).map(|k| square_function_sq(m, SquareKind::ConditionedColumn, Some(k))).collect()
}

// algebra_core

fn trace(case: &Case) -> Result<Vec<Check>> {
    let x = case.martingale()?.terminal();
    let t = x.tau();
    let scale = x.norm2().max(f64::MIN_POSITIVE);
    Ok((1..=case.levels)
        .map(|n| identity_check(json!({ "n": n }), (case.filtration.expect(n, &x).tau() - t).norm(), 1e-10 * scale))
        .collect())
}

fn tower(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let x = random::gaussian(&mut rng, case.dim());
    let mut out = Vec::new();
    for m in 1..=case.levels {
        for n in 1..=case.levels {
            let err = (&f.expect(m, &f.expect(n, &x)) - &f.expect(m.min(n), &x)).norm2();
            out.push(identity_check(json!({ "m": m, "n": n }), err, tolerance::IDENTITY * x.norm2()));
        }
    }
    Ok(out)
}

fn spectral_partition(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let b = ranked_positive(&mut rng, case.dim());
    let support = support_projection(&b, Side::Right);
    let mut out = Vec::new();
    for base in [1.5, 2.0, std::f64::consts::E] {
        let total = geometric_slices(&b, base)?.into_iter().fold(Operator::zeros(b.dim()), |acc, (_, e)| acc + e);
        out.push(identity_check(json!({ "base": base }), (&total - &support).max_abs(), tolerance::IDENTITY));
    }
    Ok(out)
}

fn meet(case: &Case) -> Result<Vec<Check>> {
    let d = 1 + (case.index % 8) as usize;
    let diag = |mask: usize| Operator::from_real_diag(&(0..d).map(|i| (mask >> i & 1) as f64).collect::<Vec<_>>());
    let mut worst: f64 = 0.0;
    for a in 0..1usize << d {
        let qa = diag(a);
        for b in 0..1usize << d {
            let got = projection_meet(&qa, &diag(b))?;
            worst = worst.max((&got - &diag(a & b)).max_abs());
        }
    }
    Ok(vec![identity_check(json!({ "dim": d, "pairs": 1usize << (2 * d) }), worst, tolerance::IDENTITY)])
}

fn pseudo_power_additivity(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let x = ranked_positive(&mut rng, case.dim());
    let s: f64 = rng.gen_range(-1.5..1.5);
    let t: f64 = rng.gen_range(0.1..1.5);
    let lhs = pseudo_power(&x, s)?.matmul(&matrix_function(&x, |v| v.max(0.0).powf(t))?);
    let rhs = pseudo_power(&x, s + t)?;
    let err = (&lhs - &rhs).norm2();
    Ok(vec![identity_check(json!({ "s": s, "t": t }), err, tolerance::IDENTITY * rhs.norm2().max(1.0))])
}

// functionals

fn rev_triangle(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let d = case.dim();
    let a = random::positive(&mut rng, d);
    let zero_b = case.index.is_multiple_of(10);
    let b = if zero_b { Operator::zeros(d) } else { random::positive(&mut rng, d) };
    let sum = &a + &b;
    [0.3, 0.5, 0.7, 0.9]
        .into_iter()
        .map(|r| {
            let lhs = lp_norm(&a, r)? + lp_norm(&b, r)?;
            Ok(Check::new(Some(r), None, json!({ "zero_b": zero_b }), lhs, lp_norm(&sum, r)?))
        })
        .collect()
}

fn com_l2(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let count = 1 + (case.index % 4) as usize;
    let parts: Vec<Operator> = (0..count).map(|_| random::gaussian(&mut rng, case.dim())).collect();
    let column = sqrt_positive(&parts.iter().fold(Operator::zeros(case.dim()), |acc, a| acc + a.abs_sq()).hermitian_part())?;
    [0.5, 1.0, 1.5, 2.0]
        .into_iter()
        .map(|p| {
            let lhs = parts.iter().map(|a| lp_norm(a, p).map(|v| v * v)).sum::<Result<f64>>()?.sqrt();
            Ok(Check::new(Some(p), None, json!({ "terms": count }), lhs, lp_norm(&column, p)?))
        })
        .collect()
}

fn mart_2(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let d = case.dim();
    let values: Vec<f64> = (0..d).map(|_| rng.gen_range(0.2..5.0)).collect();
    let a = with_spectrum(&mut rng, &values).hermitian_part();
    let kind = case.index % 10;
    let b = match kind {
        0 => a.clone(),
        1 => Operator::zeros(d),
        _ => {
            let c = random::positive(&mut rng, d);
            let c = c.scale(1.0 / op_norm(&c));
            sqrt_positive(&a.matmul(&c).matmul(&a).hermitian_part())?
        }
    };
    let a2 = a.abs_sq();
    let b2 = b.abs_sq();
    [0.5, 1.0, 1.5, 1.9]
        .into_iter()
        .map(|p| {
            let lhs = pseudo_power(&a, p - 2.0)?.matmul(&(&a2 - &b2)).tau().re;
            let rhs = (2.0 / p) * (&pseudo_power(&a, p)? - &pseudo_power(&b, p)?).tau().re;
            Ok(Check::new(Some(p), None, json!({ "kind": kind }), lhs, rhs))
        })
        .collect()
}

fn direct_sum(case: &Case) -> Result<Vec<Check>> {
    let m = case.martingale()?;
    let tail = m.map_diffs(|k, dx| if k == 1 { Operator::zeros(dx.dim()) } else { dx.clone() });
    let mut out = Vec::new();
    for p in P_GRID {
        let h = hardy_norm(&m, HardyKind::ConditionedColumn, p)?;
        out.push(Check::new(Some(p), None, json!({ "part": "tail" }), hardy_norm(&tail, HardyKind::ConditionedColumn, p)?, h));
        out.push(Check::new(Some(p), None, json!({ "part": "mean" }), lp_norm(m.diff(1), p)?, h));
    }
    Ok(out)
}

fn h2_l2(case: &Case) -> Result<Vec<Check>> {
    let m = case.martingale()?.map_diffs(|k, dx| if k == 1 { Operator::zeros(dx.dim()) } else { dx.clone() });
    let x = m.terminal();
    let err = (hardy_norm(&m, HardyKind::Column, 2.0)? - x.norm2()).abs();
    Ok(vec![identity_check(json!({}), err, tolerance::IDENTITY * x.norm2().max(1.0))])
}

fn best_constant(case: &Case) -> Result<Vec<Check>> {
    let m = case.martingale()?;
    let x = m.terminal();
    P_GRID
        .into_iter()
        .map(|p| {
            let h = hardy_norm(&m, HardyKind::ConditionedColumn, p)?;
            Ok(Check::new(Some(p), None, json!({ "generator": case.generator().name() }), lp_norm(&x, p)?, (2.0 / p).sqrt() * h))
        })
        .collect()
}

// atoms

fn lemma_alg(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let mut out = Vec::new();
    for p in [0.5, 1.0, 1.5] {
        let x1 = random::in_level(&mut rng, f, 1).scale(rng.gen_range(0.0..1.0));
        let parts: Vec<(Operator, Operator)> = (1..f.levels())
            .map(|n| {
                let y = random::mean_zero_after(&mut rng, f, n).scale(rng.gen_range(0.0..1.0));
                let b = random::in_level(&mut rng, f, n).scale(rng.gen_range(0.0..1.0));
                (y, b)
            })
            .collect();
        let (lhs, rhs) = lemma_alg_bound(&x1, &parts, p, f)?;
        out.push(Check::new(Some(p), None, json!({ "source": "random" }), lhs, rhs));
        let m = case.martingale()?;
        let dec = algebraic_decomposition(&m, p)?;
        let (lhs, rhs) = lemma_alg_bound(&dec.x1, &dec.normalized, p, f)?;
        out.push(Check::new(Some(p), None, json!({ "source": "algebraic_decomposition" }), lhs, rhs));
    }
    Ok(out)
}

fn crude_norms(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let mut out = Vec::new();
    for p in [0.5, 1.0, 1.5] {
        let (y, b, n) = crude_data(case, &mut rng, p)?;
        let (y, b) = (y.scale(rng.gen_range(0.5..1.0)), b.scale(rng.gen_range(0.5..1.0)));
        let cert = check_crude_atom(&y, &b, n, p, f)?;
        let a = y.matmul(&b);
        let m = Martingale::from_operator(f.clone(), &a)?;
        let params = |norm: &str| json!({ "norm": norm, "valid": cert.valid, "n": n });
        let bound = if cert.valid { 1.0 } else { f64::INFINITY };
        out.push(Check::new(Some(p), None, params("h_c"), hardy_norm(&m, HardyKind::ConditionedColumn, p)?, bound));
        out.push(Check::new(Some(p), None, params("H_c"), hardy_norm(&m, HardyKind::Column, p)?, bound));
        out.push(Check::new(Some(p), None, json!({ "norm": "certificate", "n": n }), implication(true, cert.valid), 0.0));
    }
    Ok(out)
}

fn inclusions(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let mut out = Vec::new();
    for p in [0.5, 1.0, 1.5] {
        let (a, e, n) = p2c_data(case, &mut rng, p);
        let t = e.tau().re;
        let p2c = check_p2c_atom(&a, n, &e, p, f)?.valid;
        let c = t.powf(-1.0 / conjugate_index(p));
        let (y, b) = (a.scale(1.0 / c), e.scale(c));
        let crude = check_crude_atom(&y, &b, n, p, f)?.valid;
        let mut parts = vec![(Operator::zeros(f.dim()), Operator::zeros(f.dim())); n - 1];
        parts.push((y, b));
        let algebraic = check_algebraic_atom(&parts, p, f)?.valid;
        let top = hardy_c_of(f, &a, f64::INFINITY)?;
        let shrink = if top > 0.0 { (t.powf(-1.0 / p) / top).min(1.0) } else { 1.0 };
        let g = a.scale(shrink);
        let q_mid = if p < 1.0 { 1.5 } else { 4.0 };
        let infty = check_pq_atom(&g, n, &e, p, f64::INFINITY, f)?.valid;
        let mid = check_pq_atom(&g, n, &e, p, q_mid, f)?.valid;
        let two = check_pq_atom(&g, n, &e, p, 2.0, f)?.valid;
        let g_p2c = check_p2c_atom(&g, n, &e, p, f)?.valid;
        for (name, premise, conclusion) in [
            ("p2c=>crude", p2c, crude),
            ("crude=>algebraic", crude, algebraic),
            ("pinfty=>pq", infty, mid),
            ("pq=>p2", mid, two),
            ("p2=>p2c", two, g_p2c),
        ] {
            out.push(Check::new(Some(p), None, json!({ "implication": name, "premise": premise, "n": n }), implication(premise, conclusion), 0.0));
        }
    }
    Ok(out)
}

// decompositions

fn reconstruction(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let m = case.martingale()?;
    let x = m.terminal();
    let tol = |x: &Operator| 1e-8 * x.norm2().max(1.0);
    let p = P_GRID[(case.index % 4) as usize];
    let mut out = Vec::new();
    let alg = algebraic_decomposition(&m, p)?.into_decomposition()?;
    out.push(Check::new(Some(p), None, json!({ "method": "algebraic" }), alg.reconstruction_error(&x), tol(&x)));
    let weak = weak_atomic_decomposition(&m, p, 1.5)?;
    out.push(Check::new(Some(p), None, json!({ "method": "weak_atomic", "beta": 1.5 }), weak.reconstruction_error(&x), tol(&x)));
    let (y, b, n) = crude_data(case, &mut rng, p)?;
    let a = y.matmul(&b);
    let crude = crude_to_atoms(&y, &b, n, p, 1.5, f)?;
    out.push(Check::new(Some(p), None, json!({ "method": "crude_slice", "beta": 1.5 }), crude.reconstruction_error(&a), tol(&a)));
    let p_small = if case.index.is_multiple_of(2) { 0.5 } else { 1.0 };
    let (a, e, n) = p2c_data(case, &mut rng, p_small);
    let pin = p_infty_decomposition(&a, &e, n, p_small, PInftyOptions::defaults(p_small, &a), f)?;
    out.push(Check::new(Some(p_small), None, json!({ "method": "p_infty" }), pin.reconstruction_error(&a), tol(&a)));
    Ok(out)
}

fn uniqueness(case: &Case) -> Result<Vec<Check>> {
    let m = case.martingale()?;
    let x = m.terminal();
    let f = &case.filtration;
    let mut out = Vec::new();
    for p in P_GRID {
        let dec = algebraic_decomposition(&m, p)?;
        let tol = tolerance::IDENTITY * x.norm2().max(1.0);
        out.push(Check::new(Some(p), None, json!({ "part": "x1" }), (&dec.x1 - &f.expect(1, &x)).norm2(), tol));
        let y_mean = f.expect(1, &dec.y_part()).norm2();
        out.push(Check::new(Some(p), None, json!({ "part": "y" }), y_mean, tol));
    }
    Ok(out)
}

fn theorem_main(case: &Case) -> Result<Vec<Check>> {
    let m = case.martingale()?;
    let mut out = Vec::new();
    for p in P_GRID {
        let dec = algebraic_decomposition(&m, p)?;
        let (lhs, rhs) = dec.estimate()?;
        out.push(Check::new(Some(p), None, json!({ "bound": "l1-estimate" }), lhs, rhs));
        let energy_bound = (2.0 / p) * (dec.hardy.powf(p) - crate::functionals::lp_norm_pow(&dec.x1, p)?).max(0.0);
        out.push(Check::new(Some(p), None, json!({ "bound": "alpha-energy" }), dec.alpha_energy(), energy_bound));
        out.push(Check::new(Some(p), None, json!({ "bound": "algebraic-atom" }), implication(true, dec.certificate.valid), 0.0));
    }
    Ok(out)
}

fn crude(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let mut out = Vec::new();
    for p in [0.5, 1.0, 1.5] {
        let (y, b, n) = crude_data(case, &mut rng, p)?;
        for beta in [1.05, 1.5, 2.0] {
            let dec = crude_to_atoms(&y, &b, n, p, beta, f)?;
            let invalid = dec.certificates.iter().filter(|c| !c.valid).count() as f64;
            out.push(Check::new(Some(p), None, json!({ "beta": beta, "bound": "coefficients" }), dec.bound_lhs, dec.bound_rhs));
            out.push(Check::new(Some(p), None, json!({ "beta": beta, "bound": "invalid-atoms" }), invalid, 0.0));
        }
    }
    Ok(out)
}

fn weak(case: &Case) -> Result<Vec<Check>> {
    let m = case.martingale()?;
    let mut out = Vec::new();
    for p in [0.5, 1.0, 1.5] {
        let dec = weak_atomic_decomposition(&m, p, 1.5)?;
        let invalid = dec.certificates.iter().filter(|c| !c.valid).count() as f64;
        out.push(Check::new(Some(p), None, json!({ "beta": 1.5, "bound": "coefficients" }), dec.bound_lhs, dec.bound_rhs));
        out.push(Check::new(Some(p), None, json!({ "beta": 1.5, "bound": "invalid-atoms" }), invalid, 0.0));
    }
    Ok(out)
}

fn atom_1(case: &Case) -> Result<Vec<Check>> {
    let m = case.martingale()?;
    let h = hardy_norm(&m, HardyKind::ConditionedColumn, 1.0)?;
    let mut out = Vec::new();
    for beta in [1.05, 1.5] {
        let dec = weak_atomic_decomposition(&m, 1.0, beta)?;
        let sum: f64 = dec.coefficients.iter().sum();
        let ratio = if h > 0.0 { sum / h } else { 0.0 };
        out.push(Check::new(Some(1.0), None, json!({ "beta": beta }), ratio, 2f64.sqrt() * beta));
    }
    Ok(out)
}

fn cuculescu_invariants(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let (a, e, n) = p2c_data(case, &mut rng, 1.0);
    let b = a.scale(e.tau().re);
    let m = Martingale::from_operator_unchecked(f.clone(), &b);
    let squares = conditioned_squares(&m);
    let top = op_norm(&squares[f.levels() - 1]).sqrt();
    let lambda = top * rng.gen_range(0.2..1.2);
    if lambda <= 0.0 {
        return Ok(Vec::new());
    }
    let t = cuculescu(&squares, &e, n, lambda, f)?;
    let params = |name: &str| json!({ "invariant": name, "n": n, "lambda": lambda });
    let mut out = vec![identity_check(params("start"), (t.at(n) - &e).max_abs(), tolerance::IDENTITY)];
    let (mut decreasing, mut adapted, mut truncated): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in n + 1..=f.levels() {
        let q = t.at(k);
        decreasing = decreasing.max((&q.matmul(t.at(k - 1)) - q).max_abs());
        adapted = adapted.max(f.subalgebra_deviation(k - 1, q));
        let compressed = q.matmul(&squares[k - 1]).matmul(q);
        truncated = truncated.max(op_norm(&compressed) - lambda * lambda);
    }
    out.push(identity_check(params("decreasing"), decreasing, tolerance::IDENTITY));
    out.push(identity_check(params("adapted"), adapted, tolerance::IDENTITY));
    out.push(Check::new(None, None, params("truncated"), truncated / (lambda * lambda), 0.0));
    let deficit = (&e - t.terminal()).tau().re;
    out.push(Check::new(None, None, params("deficit"), deficit, b.norm2().powi(2) / (lambda * lambda)));
    Ok(out)
}

/// Scalar stopping times: `q_k(i) = q_{k-1}(i) [s_k^2(i) <= lambda^2 + guard]`,
/// with the guard relative to the largest `s_k^2` on the current support.
pub fn scalar_stopping(squares: &[Vec<f64>], start: &[bool], n: usize, threshold_sq: f64) -> Vec<Vec<bool>> {
    let mut out = vec![start.to_vec()];
    for s in &squares[n..] {
        let prev = out.last().unwrap();
        let scale = prev.iter().zip(s).filter(|(q, _)| **q).map(|(_, v)| v.abs()).fold(0.0, f64::max);
        let limit = threshold_sq + tolerance::GUARD_BAND * scale;
        out.push(prev.iter().zip(s).map(|(&q, &v)| q && v <= limit).collect());
    }
    out
}

fn cuculescu_oracle(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let d = case.dim();
    let m = case.martingale()?;
    let squares = conditioned_squares(&m);
    let diag: Vec<Vec<f64>> = squares.iter().map(|s| s.diagonal().iter().map(|z| z.re).collect()).collect();
    let n = rng.gen_range(1..f.levels());
    let blocks = f.blocks(n).expect("commutative family");
    let mut start = vec![false; d];
    for block in blocks {
        if rng.gen_bool(0.7) {
            for &i in block {
                start[i] = true;
            }
        }
    }
    // Thresholds at observed values exercise the closed end of [0, lambda^2].
    let all: Vec<f64> = diag[n..].iter().flatten().copied().collect();
    let threshold_sq = if case.index.is_multiple_of(3) && !all.is_empty() {
        all[rng.gen_range(0..all.len())]
    } else {
        all.iter().cloned().fold(0.0, f64::max) * rng.gen_range(0.05..1.0)
    };
    if threshold_sq <= 0.0 {
        return Ok(Vec::new());
    }
    let e = Operator::from_real_diag(&start.iter().map(|&b| b as u8 as f64).collect::<Vec<_>>());
    let t = cuculescu(&squares, &e, n, threshold_sq.sqrt(), f)?;
    let expected = scalar_stopping(&diag, &start, n, t.threshold_sq);
    let mut mismatches = 0usize;
    for (j, q) in t.projections.iter().enumerate() {
        for i in 0..d {
            for k in 0..d {
                let want = if i == k && expected[j][i] { 1.0 } else { 0.0 };
                let got = (q.get(i, k).norm() * 1e9).round() / 1e9;
                if got != want {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(vec![Check::new(None, None, json!({ "n": n, "threshold_sq": threshold_sq, "dim": d }), mismatches as f64, 0.0)])
}

fn pinfty(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let mut out = Vec::new();
    for p in [0.5, 1.0] {
        let (a, e, n) = p2c_data(case, &mut rng, p);
        let options = PInftyOptions::defaults(p, &a);
        let dec = p_infty_decomposition(&a, &e, n, p, options, f)?;
        let invalid = dec.certificates.iter().filter(|c| !c.valid).count() as f64;
        let params = |bound: &str| json!({ "bound": bound, "n": n, "lambda": options.lambda, "depth": options.depth });
        out.push(Check::new(Some(p), Some(f64::INFINITY), params("coefficients"), dec.bound_lhs, dec.bound_rhs));
        out.push(Check::new(Some(p), Some(f64::INFINITY), params("residual"), dec.extras["residual_lp"], 1e-6 * lp_norm(&a, p)?));
        out.push(Check::new(Some(p), Some(f64::INFINITY), params("invalid-atoms"), invalid, 0.0));
    }
    Ok(out)
}

fn step2(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let mut out = Vec::new();
    for p in [0.5, 1.0] {
        let (a, e, n) = p2c_data(case, &mut rng, p);
        let dec = p_infty_decomposition(&a, &e, n, p, PInftyOptions::defaults(p, &a), f)?;
        let x = &dec.extras;
        out.push(Check::new(Some(p), None, json!({ "check": "disjoint" }), x["step2_overlap"], 0.0));
        out.push(Check::new(Some(p), None, json!({ "check": "partition" }), x["step2_partition_error"], 0.0));
        out.push(Check::new(Some(p), None, json!({ "check": "trace" }), -x["step2_trace_margin"], 0.0));
        out.push(Check::new(Some(p), None, json!({ "check": "energy" }), -x["step2_energy_margin"], 0.0));
    }
    Ok(out)
}

// transforms

fn semigroup(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let m = case.martingale()?;
    let zeta = zeta_profile(&case.filtration, case.seed);
    let (a, b): (f64, f64) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
    let twice = fractional_integral(&fractional_integral(&m, a, &zeta)?, b, &zeta)?;
    let once = fractional_integral(&m, a + b, &zeta)?;
    let err = twice.diffs().iter().zip(once.diffs()).map(|(u, v)| (u - v).norm2()).fold(0.0, f64::max);
    Ok(vec![identity_check(json!({ "alpha": a, "beta": b }), err, 1e-13 * m.terminal().norm2().max(1.0))])
}

fn diag(case: &Case) -> Result<Vec<Check>> {
    let m = case.martingale()?;
    let zeta = zeta_profile(&case.filtration, case.seed);
    let mut out = Vec::new();
    for (p, q) in [(0.5, 1.0), (0.5, 1.5), (0.75, 1.25), (1.0, 1.5), (1.0, 1.9)] {
        for (k, (lhs, rhs)) in diagonal_inequality(&m, p, q, &zeta)?.into_iter().enumerate() {
            out.push(Check::new(Some(p), Some(q), json!({ "k": k + 1 }), lhs, rhs));
        }
    }
    Ok(out)
}

fn infty_2(case: &Case) -> Result<Vec<Check>> {
    let mut rng = case.rng();
    let f = &case.filtration;
    let zeta = zeta_profile(f, case.seed);
    let mut out = Vec::new();
    for n in 1..=f.levels() {
        let Some(z) = zeta.get(n) else { continue };
        out.push(Check::new(None, None, json!({ "n": n, "check": "range" }), z, 1.0));
        let x = difference_projection(f, n, &random::in_level(&mut rng, f, f.levels()));
        out.push(Check::new(None, None, json!({ "n": n, "check": "bound", "method": zeta.method }), op_norm(&x), z.powf(-0.5) * x.norm2()));
    }
    Ok(out)
}

fn reg_hardy(case: &Case) -> Result<Vec<Check>> {
    let m = case.martingale()?;
    let report = regularity_constant(&case.filtration, 32, case.seed);
    let mut out = Vec::new();
    for p in [0.5, 1.0, 1.5] {
        let r = reg_hardy_check(&m, p, report.constant, 0.0)?;
        let params = |side: &str| json!({ "side": side, "C": report.constant, "certified": report.certified });
        out.push(Check::new(Some(p), None, params("lower"), r.lower_bound, r.h_norm));
        out.push(Check::new(Some(p), None, params("upper"), r.h_norm, r.upper_bound));
    }
    Ok(out)
}

fn regularity(case: &Case) -> Result<Vec<Check>> {
    let report = regularity_constant(&case.filtration, 200, case.seed.wrapping_add(case.index));
    let mut out =
        vec![Check::new(None, None, json!({ "C": report.constant, "samples": report.verified_samples }), -report.worst_verification, 0.0)];
    if let Some(exact) = block_ratio(&case.filtration) {
        out.push(identity_check(json!({ "C": report.constant, "oracle": exact }), (report.constant - exact).abs(), 0.0));
    }
    Ok(out)
}

/// `max |parent| / |child|` over consecutive levels of a partition family.
fn block_ratio(f: &Filtration) -> Option<f64> {
    if !f.is_commutative() {
        return None;
    }
    let mut best: f64 = 1.0;
    for n in 2..=f.levels() {
        let coarse = f.blocks(n - 1)?;
        for child in f.blocks(n)? {
            let parent = coarse.iter().find(|c| c.contains(&child[0]))?;
            best = best.max(parent.len() as f64 / child.len() as f64);
        }
    }
    Some(best)
}

fn fractional(case: &Case) -> Result<Vec<Check>> {
    let f = &case.filtration;
    let zeta = zeta_profile(f, case.seed);
    let seed = case.seed.wrapping_mul(1_000_003).wrapping_add(case.index);
    let mut out = Vec::new();
    for (p, q) in [(0.5, 1.2), (1.0, 1.5), (1.0, 1.9)] {
        let r = fractional_boundedness(f, p, q, 8, seed, &zeta)?;
        out.push(Check::new(Some(p), Some(q), json!({ "check": "diag" }), -r.diagonal_margin, 0.0));
        if let Some(c) = r.crude {
            let invalid = c.certificates.iter().filter(|c| !c.valid).count() as f64;
            out.push(Check::new(Some(p), Some(q), json!({ "check": "crude-transfer", "c_gamma": c.c_gamma }), invalid, 0.0));
        }
    }
    Ok(out)
}

// harness

fn replay_rows(case: &Case) -> Result<Vec<Check>> {
    let target = find_suite("best-constant")?;
    let rows = super::evaluate(target, &case.reference());
    let mut worst: f64 = 0.0;
    for row in &rows {
        let text = serde_json::to_string(row)?;
        let back: super::Row = serde_json::from_str(&text)?;
        let outcome = super::replay(&back)?;
        worst = worst.max(implication(true, outcome.identical));
    }
    Ok(vec![Check::new(None, None, json!({ "replayed": rows.len() }), worst, 0.0)])
}

fn coverage(case: &Case) -> Result<Vec<Check>> {
    if case.index != 0 {
        return Ok(Vec::new());
    }
    let (missing, duplicated) = coverage_gaps();
    Ok(vec![Check::new(None, None, json!({ "missing": missing, "duplicated": duplicated }), (missing.len() + duplicated.len()) as f64, 0.0)])
}
