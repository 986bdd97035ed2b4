//! Numerical search for near-extremal instances of the best-constant
//! inequality `||x||_p <= sqrt(2/p) ||x||_(h_p^c)` on the classical family.

use rand::Rng;

use crate::algebra::{Filtration, Martingale, Operator};
use crate::error::{NclabError, Result};
use crate::random;

use super::generate::MAX_LEVELS;

#[derive(Clone, Debug)]
pub struct ProbeResult {
    pub id: String,
    pub p: f64,
    /// Best ratio found at the deepest level.
    pub ratio: f64,
    /// The constant the ratio is bounded by.
    pub constant: f64,
    pub witness: Martingale,
    /// `(depth, best ratio)` for every searched depth.
    pub per_depth: Vec<(usize, f64)>,
    pub evaluations: usize,
}

/// Ratio functional of a real diagonal element for one filtration: the
/// blocks of every level are cached so each evaluation is `O(N d)`.
struct DiagonalRatio {
    d: usize,
    levels: Vec<Vec<Vec<usize>>>,
    p: f64,
}

impl DiagonalRatio {
    fn new(f: &Filtration, p: f64) -> Self {
        let levels = (1..=f.levels()).map(|n| f.blocks(n).expect("commutative family").clone()).collect();
        Self { d: f.dim(), levels, p }
    }

    fn average(&self, level: usize, x: &[f64]) -> Vec<f64> {
        if level == 0 {
            return vec![0.0; self.d];
        }
        let mut out = vec![0.0; self.d];
        for block in &self.levels[level - 1] {
            let mean = block.iter().map(|&i| x[i]).sum::<f64>() / block.len() as f64;
            for &i in block {
                out[i] = mean;
            }
        }
        out
    }

    /// `||x||_p / ||s_c(x)||_p`, zero for `x = 0`.
    fn eval(&self, x: &[f64]) -> f64 {
        let top = self.levels.len();
        let mut s2 = vec![0.0; self.d];
        let mut prev = vec![0.0; self.d];
        for k in 1..=top {
            let cur = self.average(k, x);
            let sq: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| (a - b) * (a - b)).collect();
            for (s, v) in s2.iter_mut().zip(self.average((k - 1).max(1), &sq)) {
                *s += v;
            }
            prev = cur;
        }
        let p = self.p;
        let norm = |v: &mut dyn Iterator<Item = f64>| (v.map(|t| t.powf(p)).sum::<f64>() / self.d as f64).powf(1.0 / p);
        let h = norm(&mut s2.iter().map(|v| v.max(0.0).sqrt()));
        if h == 0.0 {
            return 0.0;
        }
        norm(&mut prev.iter().map(|v| v.abs())) / h
    }
}

/// Coordinate ascent with step halving from `x`, spending at most `budget`
/// evaluations. Returns the best point, its ratio and the evaluations used.
fn ascend(r: &DiagonalRatio, mut x: Vec<f64>, budget: usize) -> (Vec<f64>, f64, usize) {
    let mut best = r.eval(&x);
    let mut used = 1;
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-3);
    let mut step = 0.5 * scale;
    while used < budget && step > 1e-10 * scale {
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                if used >= budget {
                    break;
                }
                let old = x[i];
                x[i] = old + sign * step;
                let v = r.eval(&x);
                used += 1;
                if v > best {
                    best = v;
                    improved = true;
                    break;
                }
                x[i] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, best, used)
}

/// Searches the balanced classical family at depths `2..=max_levels`. Each
/// depth starts from the previous witness embedded one level deeper (which
/// keeps its ratio) and from random points, so the best ratio found is
/// non-decreasing in depth. `budget` is the evaluation budget per depth.
pub fn sharpness_probe(id: &str, p: f64, budget: usize, seed: u64, max_levels: usize) -> Result<ProbeResult> {
    if id != "best-constant" {
        return Err(NclabError::UnknownSuite(format!("no ratio functional for `{id}`")));
    }
    if budget == 0 {
        return Err(NclabError::InvalidParameter("search budget must be positive".into()));
    }
    if !(p > 0.0 && p < 2.0) {
        return Err(NclabError::InvalidParameter(format!("exponent {p} outside (0, 2)")));
    }
    if !(2..=MAX_LEVELS).contains(&max_levels) {
        return Err(NclabError::InvalidParameter(format!("depth {max_levels} outside 2..={MAX_LEVELS}")));
    }
    let mut rng = random::rng(seed);
    let mut warm: Option<Vec<f64>> = None;
    let mut per_depth = Vec::new();
    let mut evaluations = 0;
    let mut last = (Filtration::balanced_commutative(2)?, Vec::new(), 0.0);
    for levels in 2..=max_levels {
        let f = Filtration::balanced_commutative(levels)?;
        let r = DiagonalRatio::new(&f, p);
        let d = f.dim();
        let restarts = 4;
        let share = (budget / (restarts + 1)).max(1);
        let mut starts: Vec<Vec<f64>> = (0..restarts).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        if let Some(prev) = &warm {
            starts.insert(0, (0..d).map(|i| prev[i >> 1]).collect());
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in starts {
            let (x, v, used) = ascend(&r, s, share);
            evaluations += used;
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((x, v));
            }
        }
        let (x, v) = best.expect("at least one start");
        per_depth.push((levels, v));
        warm = Some(x.clone());
        last = (f, x, v);
    }
    let (f, x, ratio) = last;
    let witness = Martingale::from_operator(f, &Operator::from_real_diag(&x))?;
    Ok(ProbeResult { id: id.to_string(), p, ratio, constant: (2.0 / p).sqrt(), witness, per_depth, evaluations })
}
