//! Decomposition of a `(p,2)` column atom into `(p,inf)` column atoms by
//! repeated double Cuculescu truncation.

use rayon::prelude::*;

use super::cuculescu::cuculescu_unchecked;
use super::{Decomposition, DecompositionMethod};
use crate::algebra::{eigen::eig_hermitian_unchecked, projection_meet, Filtration, Martingale, Operator};
use crate::atoms::{check_p2c_atom, check_pq_atom};
use crate::error::{NclabError, Result};
use crate::functionals::lp_norm;

/// `lambda = 6^{1/(2-p)}`, so that `lambda^{2-p} = 1.5 * 4`.
pub fn default_lambda(p: f64) -> f64 {
    6.0_f64.powf(1.0 / (2.0 - p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PInftyOptions {
    pub lambda: f64,
    /// Number of truncation generations.
    pub depth: usize,
    /// Stop once the pending remainder has `L_p` norm below this.
    pub tol: f64,
}

impl PInftyOptions {
    /// Default `lambda`, depth 12 and `tol = 1e-7 ||a||_2`.
    pub fn defaults(p: f64, a: &Operator) -> Self {
        Self { lambda: default_lambda(p), depth: 12, tol: 1e-7 * a.norm2() }
    }
}

/// Pending piece `b'` with right support under the projection `e' ∈ M_level`
/// and `E_level(b') = 0`.
struct Node {
    level: usize,
    projection: Operator,
    piece: Operator,
}

/// Bookkeeping of one truncation step.
struct Split {
    /// `g = sum_{k>n} db_k q_k pi_{k-1}`.
    g: Operator,
    children: Vec<Node>,
    /// `max_{i != j} ||e_i e_j||`.
    overlap: f64,
    /// `||sum_i e_i - (e - q ∧ pi)||_max`.
    partition_error: f64,
    /// `sum_i tau(e_i)` against `2 ||b||_2^2 / threshold^2`.
    trace: (f64, f64),
    /// `sum_i ||b_i||_2^2` against `4 ||b||_2^2`.
    energy: (f64, f64),
}

/// Reprojects a numerically near-projection difference of projections.
fn clean_projection(x: &Operator) -> Operator {
    let e = eig_hermitian_unchecked(&x.hermitian_part());
    e.projection_where(|l| l > 0.5)
}

fn conditioned_squares(diffs: &[Operator], weights: Option<&[Operator]>, n: usize, f: &Filtration) -> Vec<Operator> {
    let d = f.dim();
    let mut out = vec![Operator::zeros(d); f.levels()];
    let mut acc = Operator::zeros(d);
    for k in n + 1..=f.levels() {
        let dx = match weights {
            Some(w) => diffs[k - 1].matmul(&w[k - 1]),
            None => diffs[k - 1].clone(),
        };
        acc += &f.expect(k - 1, &dx.abs_sq());
        out[k - 1] = acc.hermitian_part();
    }
    out
}

fn split(node: &Node, threshold: f64, f: &Filtration) -> Result<Split> {
    let (b, e, n) = (&node.piece, &node.projection, node.level);
    let levels = f.levels();
    let d = f.dim();
    let diffs = Martingale::from_operator_unchecked(f.clone(), b).diffs().to_vec();
    let sq = threshold * threshold;

    let first = cuculescu_unchecked(&conditioned_squares(&diffs, None, n, f), e, n, sq);
    // weights[k - 1] = q_k for k > n.
    let mut weights = vec![Operator::zeros(d); levels];
    for k in n + 1..=levels {
        weights[k - 1] = first.at(k).clone();
    }
    let second = cuculescu_unchecked(&conditioned_squares(&diffs, Some(&weights), n, f), e, n, sq);

    let mut g = Operator::zeros(d);
    for k in n + 1..=levels {
        g += &diffs[k - 1].matmul(first.at(k)).matmul(second.at(k - 1));
    }

    // meets[i - n] = q_i ∧ pi_{i-1} for i = n..=N+1, with pi_{n-1} = e.
    let mut meets = vec![e.clone()];
    for i in n + 1..=levels + 1 {
        let q = first.at(i.min(levels));
        let pi = second.at((i - 1).min(levels));
        meets.push(projection_meet(q, pi)?);
    }
    let pieces: Vec<Operator> = (n..=levels).map(|i| clean_projection(&(&meets[i - n] - &meets[i + 1 - n]))).collect();

    let mut overlap: f64 = 0.0;
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            overlap = overlap.max(pieces[i].matmul(&pieces[j]).max_abs());
        }
    }
    let union = pieces.iter().fold(Operator::zeros(d), |acc, e| acc + e.clone());
    let partition_error = (&union - &(e - meets.last().unwrap())).max_abs();

    let mut children = Vec::new();
    let mut energy = 0.0;
    for (offset, piece_projection) in pieces.iter().enumerate() {
        let i = n + offset;
        if i >= levels || piece_projection.tau().re == 0.0 {
            continue;
        }
        let mut child = Operator::zeros(d);
        for k in i + 1..=levels {
            let defect = e - &first.at(k).matmul(second.at(k - 1));
            child += &diffs[k - 1].matmul(&defect);
        }
        let child = child.matmul(piece_projection);
        energy += child.norm2().powi(2);
        children.push(Node { level: i, projection: piece_projection.clone(), piece: child });
    }
    let b2 = b.norm2().powi(2);
    Ok(Split {
        g,
        children,
        overlap,
        partition_error,
        trace: (union.tau().re, 2.0 * b2 / sq),
        energy: (energy, 4.0 * b2),
    })
}

/// Worst margin `(rhs - lhs) / max(1, rhs)` over reported pairs.
fn worst(acc: &mut f64, (lhs, rhs): (f64, f64)) {
    *acc = acc.min((rhs - lhs) / rhs.max(1.0));
}

/// `a = sum lambda_k a_k + residual` with `(p,inf)` column atoms `a_k`.
///
/// Generation `k` truncates every pending piece at `lambda^{k+1}`; an atom
/// from a piece with projection `e'` carries the coefficient
/// `tau(e)^{-1/p} sqrt(3) lambda^{k+1} tau(e')^{1/p}`. The bound compares
/// `sum lambda_k^p` with `3^{p/2} (lambda^2 - 2 lambda^p) / (lambda^{2-p} - 4)`.
pub fn p_infty_decomposition(
    a: &Operator,
    e: &Operator,
    n: usize,
    p: f64,
    options: PInftyOptions,
    f: &Filtration,
) -> Result<Decomposition> {
    let PInftyOptions { lambda, depth, tol } = options;
    if !(p > 0.0 && p < 2.0) {
        return Err(NclabError::InvalidParameter(format!("p must lie in (0, 2), got {p}")));
    }
    if !lambda.is_finite() || !(lambda.powf(2.0 - p) > 4.0) {
        return Err(NclabError::InvalidParameter(format!("lambda^(2-p) must exceed 4, got lambda = {lambda}")));
    }
    if depth == 0 || !(tol >= 0.0) {
        return Err(NclabError::InvalidParameter("depth must be positive and tol nonnegative".into()));
    }
    let input = check_p2c_atom(a, n, e, p, f)?;
    if !input.valid {
        return Err(NclabError::InvalidAtom(format!("input is not a (p,2) column atom: {:?}", input.margins)));
    }
    let d = f.dim();
    let t = e.tau().re;
    let scale = t.powf(1.0 / p);
    let b = a.scale(scale);
    let b2 = b.norm2();
    let mut out = Decomposition::empty(DecompositionMethod::PInfty, p, d);
    let prune = 1e-14 * b2;

    let mut pending = vec![Node { level: n, projection: e.clone(), piece: b }];
    let mut residual_b = Operator::zeros(d);
    let (mut overlap, mut partition_error): (f64, f64) = (0.0, 0.0);
    let (mut trace_margin, mut energy_margin) = (f64::INFINITY, f64::INFINITY);
    let mut generations = 0usize;
    let mut envelope_margin = f64::INFINITY;
    let mut holder_margin = f64::INFINITY;
    let mut sum_p = 0.0;
    for k in 0..depth {
        if pending.is_empty() {
            break;
        }
        generations = k + 1;
        let threshold = lambda.powi(k as i32 + 1);
        let splits: Vec<Result<(Node, Split)>> =
            pending.into_par_iter().map(|node| split(&node, threshold, f).map(|s| (node, s))).collect();
        let mut next = Vec::new();
        for item in splits {
            let (node, s) = item?;
            overlap = overlap.max(s.overlap);
            partition_error = partition_error.max(s.partition_error);
            worst(&mut trace_margin, s.trace);
            worst(&mut energy_margin, s.energy);
            let te = node.projection.tau().re;
            if s.g.norm2() > prune && te > 0.0 {
                let weight = 3.0_f64.sqrt() * threshold * te.powf(1.0 / p);
                let atom = s.g.scale(1.0 / weight);
                out.certificates.push(check_pq_atom(&atom, node.level, &node.projection, p, f64::INFINITY, f)?);
                out.atoms.push(atom);
                let coefficient = weight / scale;
                sum_p += coefficient.powf(p);
                out.coefficients.push(coefficient);
            } else {
                residual_b += &s.g;
            }
            for child in s.children {
                if child.piece.norm2() > prune {
                    next.push(child);
                } else {
                    residual_b += &child.piece;
                }
            }
        }
        // Remainder after generation k, against the decay envelope.
        let remainder = next.iter().fold(Operator::zeros(d), |acc, c| acc + c.piece.clone());
        let remainder_p = lp_norm(&remainder, p)?;
        let separate: f64 = next.iter().map(|c| lp_norm(&c.piece, p).map(|v| v.powf(p))).sum::<Result<f64>>()?;
        let envelope = 2.0_f64.powf(1.0 / p + 0.5)
            * lambda.powf(1.0 - 2.0 / p)
            * (4.0_f64.powf(1.0 / p) * lambda.powf(1.0 - 2.0 / p)).powi(k as i32)
            * b2.powf(2.0 / p);
        worst(&mut holder_margin, (separate.powf(1.0 / p), envelope));
        worst(&mut envelope_margin, (remainder_p, envelope));
        pending = next;
        if remainder_p / scale < tol {
            break;
        }
    }
    for node in pending {
        residual_b += &node.piece;
    }
    out.residual = residual_b.scale(1.0 / scale);
    out.bound_lhs = sum_p;
    out.bound_rhs = 3.0_f64.powf(p / 2.0) * (lambda * lambda - 2.0 * lambda.powf(p)) / (lambda.powf(2.0 - p) - 4.0);
    out.extra("lambda", lambda);
    out.extra("generations", generations as f64);
    out.extra("residual_lp", lp_norm(&out.residual, p)?);
    out.extra("step2_overlap", overlap);
    out.extra("step2_partition_error", partition_error);
    out.extra("step2_trace_margin", trace_margin);
    out.extra("step2_energy_margin", energy_margin);
    out.extra("step4_separate_margin", holder_margin);
    out.extra("step4_envelope_margin", envelope_margin);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{hardy_c_of, square_function_sq, SquareKind};
    use crate::random;

    fn random_atom(f: &Filtration, n: usize, p: f64, seed: u64) -> (Operator, Operator) {
        random::p2c_atom(&mut random::rng(seed), f, n, p)
    }

    #[test]
    fn decomposes_random_atoms() {
        for (f, seed) in [(Filtration::tensor_dyadic(3).unwrap(), 1), (Filtration::block_dyadic(4).unwrap(), 2)] {
            for &p in &[0.5, 1.0] {
                for trial in 0..3 {
                    let (a, e) = random_atom(&f, 1, p, seed * 10 + trial);
                    let out = p_infty_decomposition(&a, &e, 1, p, PInftyOptions::defaults(p, &a), &f).unwrap();
                    assert!(out.all_certificates_valid());
                    assert!(out.bound_lhs <= out.bound_rhs + 1e-6);
                    assert!(out.reconstruction_error(&a) <= 1e-8 * a.norm2().max(1.0));
                    assert!(lp_norm(&out.residual, p).unwrap() <= 1e-6 * lp_norm(&a, p).unwrap());
                    assert!(out.extras["step2_overlap"] < 1e-8);
                    assert!(out.extras["step2_partition_error"] < 1e-8);
                    assert!(out.extras["step2_trace_margin"] >= -1e-8);
                    assert!(out.extras["step2_energy_margin"] >= -1e-8);
                    assert!(out.extras["step4_envelope_margin"] >= -1e-8);
                }
            }
        }
    }

    #[test]
    fn small_atom_is_a_single_piece() {
        let f = Filtration::tensor_dyadic(2).unwrap();
        let (a, e) = random_atom(&f, 1, 1.0, 3);
        let b = a.scale(e.tau().re);
        let m = Martingale::from_operator_unchecked(f.clone(), &b);
        let top = crate::functionals::op_norm(&square_function_sq(&m, SquareKind::ConditionedColumn, None)).sqrt();
        let out = p_infty_decomposition(&a, &e, 1, 1.0, PInftyOptions { lambda: top.max(4.5), depth: 12, tol: 0.0 }, &f)
            .unwrap();
        assert_eq!(out.atoms.len(), 1);
        assert_eq!(out.extras["generations"], 1.0);
        assert!(out.residual.norm2() < 1e-12);
        assert!(hardy_c_of(&f, &out.atoms[0], f64::INFINITY).unwrap() <= 1.0 + 1e-8);
    }

    #[test]
    fn rejects_small_lambda_and_non_atoms() {
        let f = Filtration::tensor_dyadic(2).unwrap();
        let (a, e) = random_atom(&f, 1, 1.0, 4);
        let bad = PInftyOptions { lambda: 4.0, depth: 3, tol: 0.0 };
        assert!(p_infty_decomposition(&a, &e, 1, 1.0, bad, &f).is_err());
        let big = a.scale(10.0);
        assert!(p_infty_decomposition(&big, &e, 1, 1.0, PInftyOptions::defaults(1.0, &big), &f).is_err());
    }
}
