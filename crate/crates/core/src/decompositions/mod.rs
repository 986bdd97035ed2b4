//! Constructive decompositions into atoms, each returned with its
//! certificates, residual and the inequality it must satisfy.

pub mod algebraic;
pub mod crude;
pub mod cuculescu;
pub mod pinfty;
pub mod weak;

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::Operator;
use crate::atoms::AtomCertificate;
use crate::error::NclabError;

pub use algebraic::{algebraic_decomposition, AlgebraicDecomposition};
pub use crude::crude_to_atoms;
pub use cuculescu::{cuculescu, CuculescuTrajectory};
pub use pinfty::{default_lambda, p_infty_decomposition, PInftyOptions};
pub use weak::weak_atomic_decomposition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionMethod {
    CrudeSlice,
    Algebraic,
    WeakAtomic,
    PInfty,
}

impl FromStr for DecompositionMethod {
    type Err = NclabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "crude" | "crude_slice" => Ok(Self::CrudeSlice),
            "algebraic" => Ok(Self::Algebraic),
            "weak" | "weak_atomic" => Ok(Self::WeakAtomic),
            "pinfty" | "p_infty" => Ok(Self::PInfty),
            other => Err(NclabError::InvalidParameter(format!("unknown decomposition method {other:?}"))),
        }
    }
}

/// `x = x_1 + sum coefficients[k] * atoms[k] + residual`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub method: DecompositionMethod,
    pub p: f64,
    pub x1: Operator,
    /// Nonnegative by construction.
    pub coefficients: Vec<f64>,
    pub atoms: Vec<Operator>,
    pub certificates: Vec<AtomCertificate>,
    pub residual: Operator,
    pub bound_lhs: f64,
    pub bound_rhs: f64,
    /// Further named quantities checked or reported by the method.
    pub extras: BTreeMap<String, f64>,
}

impl Decomposition {
    pub(crate) fn empty(method: DecompositionMethod, p: f64, d: usize) -> Self {
        Self {
            method,
            p,
            x1: Operator::zeros(d),
            coefficients: Vec::new(),
            atoms: Vec::new(),
            certificates: Vec::new(),
            residual: Operator::zeros(d),
            bound_lhs: 0.0,
            bound_rhs: 0.0,
            extras: BTreeMap::new(),
        }
    }

    /// `x_1 + sum lambda_k a_k`, without the residual.
    pub fn atomic_part(&self) -> Operator {
        let mut acc = self.x1.clone();
        for (c, a) in self.coefficients.iter().zip(&self.atoms) {
            acc += &a.scale(*c);
        }
        acc
    }

    /// `||x - x_1 - sum lambda_k a_k - residual||_2`.
    pub fn reconstruction_error(&self, x: &Operator) -> f64 {
        (&(x - &self.atomic_part()) - &self.residual).norm2()
    }

    pub fn all_certificates_valid(&self) -> bool {
        self.certificates.iter().all(|c| c.valid)
    }

    /// `(rhs - lhs) / max(1, rhs)`.
    pub fn bound_margin(&self) -> f64 {
        crate::atoms::Margin::new("bound", self.bound_lhs, self.bound_rhs).margin
    }

    pub(crate) fn extra(&mut self, name: &str, value: f64) {
        self.extras.insert(name.to_string(), value);
    }
}
