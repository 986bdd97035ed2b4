//! Finite martingales given by their difference sequence.

use super::filtration::Filtration;
use super::operator::Operator;
use crate::error::{NclabError, Result};
use crate::tolerance;

#[derive(Clone, Debug)]
pub struct Martingale {
    filtration: Filtration,
    diffs: Vec<Operator>,
}

impl Martingale {
    /// Validates adaptedness and the martingale property of each difference.
    pub fn from_diffs(filtration: Filtration, diffs: Vec<Operator>) -> Result<Self> {
        if diffs.len() != filtration.levels() {
            return Err(NclabError::InvalidMartingale(format!(
                "expected {} differences, got {}",
                filtration.levels(),
                diffs.len()
            )));
        }
        let scale = diffs.iter().map(|d| d.norm2()).fold(1.0, f64::max);
        for (k, dx) in diffs.iter().enumerate() {
            let n = k + 1;
            if dx.dim() != filtration.dim() {
                return Err(NclabError::DimensionMismatch { expected: filtration.dim(), got: dx.dim() });
            }
            let dev = filtration.subalgebra_deviation(n, dx);
            if dev > tolerance::IDENTITY * scale {
                return Err(NclabError::InvalidMartingale(format!(
                    "difference {n} is not in M_{n} (deviation {dev:.3e})"
                )));
            }
            if n >= 2 {
                let mean = filtration.expect(n - 1, dx).norm2();
                if mean > tolerance::IDENTITY * scale {
                    return Err(NclabError::InvalidMartingale(format!(
                        "difference {n} has nonzero conditional mean {mean:.3e}"
                    )));
                }
            }
        }
        Ok(Self { filtration, diffs })
    }

    /// The martingale `x_n = E_n(x)` of an element `x ∈ M_N`.
    pub fn from_operator(filtration: Filtration, x: &Operator) -> Result<Self> {
        filtration.require_in_level(filtration.levels(), x, tolerance::IDENTITY)?;
        Ok(Self::from_operator_unchecked(filtration, x))
    }

    pub(crate) fn from_operator_unchecked(filtration: Filtration, x: &Operator) -> Self {
        let n = filtration.levels();
        let partials: Vec<Operator> = (1..=n).map(|k| filtration.expect(k, x)).collect();
        let mut diffs = Vec::with_capacity(n);
        for k in 0..n {
            diffs.push(if k == 0 { partials[0].clone() } else { &partials[k] - &partials[k - 1] });
        }
        Self { filtration, diffs }
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn levels(&self) -> usize {
        self.diffs.len()
    }

    pub fn dim(&self) -> usize {
        self.filtration.dim()
    }

    pub fn diffs(&self) -> &[Operator] {
        &self.diffs
    }

    /// `dx_n`, 1-indexed.
    pub fn diff(&self, n: usize) -> &Operator {
        &self.diffs[n - 1]
    }

    /// `x_n = sum_{k <= n} dx_k`; `x_0 = 0`.
    pub fn partial(&self, n: usize) -> Operator {
        let mut acc = Operator::zeros(self.dim());
        for dx in &self.diffs[..n.min(self.diffs.len())] {
            acc += dx;
        }
        acc
    }

    /// The terminal element `x = x_N`.
    pub fn terminal(&self) -> Operator {
        self.partial(self.levels())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { filtration: self.filtration.clone(), diffs: self.diffs.iter().map(|d| d.scale(c)).collect() }
    }

    /// Applies `f(n, dx_n)` to every difference, keeping the filtration.
    pub fn map_diffs(&self, mut f: impl FnMut(usize, &Operator) -> Operator) -> Self {
        let diffs = self.diffs.iter().enumerate().map(|(k, d)| f(k + 1, d)).collect();
        Self { filtration: self.filtration.clone(), diffs }
    }
}
