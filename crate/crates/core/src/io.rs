//! JSON forms of operators, martingale instances and decompositions.
//! Operator entries are written with 17 significant digits.

use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::algebra::{Family, Filtration, Martingale, Operator};
use crate::atoms::AtomCertificate;
use crate::decompositions::{
    algebraic_decomposition, crude_to_atoms, p_infty_decomposition, weak_atomic_decomposition, Decomposition,
    DecompositionMethod, PInftyOptions,
};
use crate::error::{NclabError, Result};
use crate::functionals::lp_norm;

/// A float written as `{:.16e}`, which round-trips every finite `f64`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(serde::ser::Error::custom(format!("non-finite number {}", self.0)));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

/// Serde for `f64` fields that may be non-finite: finite values are numbers,
/// others the strings `"inf"`, `"-inf"` and `"NaN"`.
pub mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Number(v)
        } else if v.is_nan() {
            Repr::Text("NaN".into())
        } else if v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Text("-inf".into())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
                "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                "NaN" | "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("invalid number `{other}`"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.map(to_repr).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(from_repr).transpose()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub re: Vec<Vec<Sig17>>,
    pub im: Vec<Vec<Sig17>>,
}

impl From<&Operator> for OperatorJson {
    fn from(x: &Operator) -> Self {
        let wrap = |rows: Vec<Vec<f64>>| rows.into_iter().map(|r| r.into_iter().map(Sig17).collect()).collect();
        Self { re: wrap(x.real_rows()), im: wrap(x.imag_rows()) }
    }
}

impl OperatorJson {
    pub fn to_operator(&self) -> Result<Operator> {
        let unwrap = |rows: &[Vec<Sig17>]| -> Vec<Vec<f64>> { rows.iter().map(|r| r.iter().map(|v| v.0).collect()).collect() };
        Operator::from_parts(&unwrap(&self.re), &unwrap(&self.im))
    }
}

/// Data of a single atom attached to an instance: `(y, b)` for a crude atom,
/// `e` for a `(p,2)` atom whose operator is the instance's terminal value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub level: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<OperatorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<OperatorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<OperatorJson>,
}

/// `{"dim", "family", "N" | "partitions", "diffs": [{"re", "im"}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub dim: usize,
    #[serde(flatten)]
    pub family: Family,
    pub diffs: Vec<OperatorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<AtomJson>,
}

impl InstanceJson {
    pub fn from_martingale(m: &Martingale) -> Self {
        Self {
            id: None,
            dim: m.dim(),
            family: m.filtration().family().clone(),
            diffs: m.diffs().iter().map(OperatorJson::from).collect(),
            atom: None,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn filtration(&self) -> Result<Filtration> {
        Filtration::new(self.dim, self.family.clone())
    }

    /// Validates the filtration and every difference.
    pub fn to_martingale(&self) -> Result<Martingale> {
        let f = self.filtration()?;
        let diffs = self.diffs.iter().map(OperatorJson::to_operator).collect::<Result<Vec<_>>>()?;
        Martingale::from_diffs(f, diffs)
    }
}

pub fn read_instance(path: &Path) -> Result<InstanceJson> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionJson {
    pub method: DecompositionMethod,
    pub p: f64,
    pub x1: OperatorJson,
    pub coefficients: Vec<Sig17>,
    pub atoms: Vec<OperatorJson>,
    pub certificates: Vec<AtomCertificate>,
    pub all_certificates_valid: bool,
    pub bound_lhs: f64,
    pub bound_rhs: f64,
    pub bound_margin: f64,
    pub residual: OperatorJson,
    pub residual_l2: f64,
    pub residual_lp: f64,
    pub reconstruction_error: f64,
    pub extras: std::collections::BTreeMap<String, f64>,
}

impl DecompositionJson {
    /// `input` is the decomposed operator, used for the reconstruction error.
    pub fn new(dec: &Decomposition, input: &Operator) -> Result<Self> {
        Ok(Self {
            method: dec.method,
            p: dec.p,
            x1: OperatorJson::from(&dec.x1),
            coefficients: dec.coefficients.iter().copied().map(Sig17).collect(),
            atoms: dec.atoms.iter().map(OperatorJson::from).collect(),
            certificates: dec.certificates.clone(),
            all_certificates_valid: dec.all_certificates_valid(),
            bound_lhs: dec.bound_lhs,
            bound_rhs: dec.bound_rhs,
            bound_margin: dec.bound_margin(),
            residual: OperatorJson::from(&dec.residual),
            residual_l2: dec.residual.norm2(),
            residual_lp: lp_norm(&dec.residual, dec.p)?,
            reconstruction_error: dec.reconstruction_error(input),
            extras: dec.extras.clone(),
        })
    }
}

/// Parses a family name with its size: a tensor or block depth, or a
/// balanced commutative depth.
pub fn family_by_name(name: &str, levels: usize) -> Result<Filtration> {
    match crate::algebra::FamilyKind::parse(name)? {
        crate::algebra::FamilyKind::TensorDyadic => Filtration::tensor_dyadic(levels),
        crate::algebra::FamilyKind::BlockPinching => Filtration::block_dyadic(levels),
        crate::algebra::FamilyKind::CommutativePartition => Filtration::balanced_commutative(levels),
    }
}

pub fn require_atom(inst: &InstanceJson) -> Result<&AtomJson> {
    inst.atom.as_ref().ok_or_else(|| NclabError::InvalidParameter("instance has no \"atom\" object".into()))
}

#[derive(Clone, Copy, Debug)]
pub struct DecomposeOptions {
    pub method: DecompositionMethod,
    pub p: f64,
    /// Slicing base of the crude and weak methods.
    pub beta: f64,
    /// Overrides of the `(p,inf)` defaults.
    pub lambda: Option<f64>,
    pub depth: Option<usize>,
    pub tol: Option<f64>,
}

impl DecomposeOptions {
    pub fn new(method: DecompositionMethod, p: f64) -> Self {
        Self { method, p, beta: 1.5, lambda: None, depth: None, tol: None }
    }
}

fn atom_field(x: &Option<OperatorJson>, name: &str) -> Result<Operator> {
    x.as_ref().ok_or_else(|| NclabError::InvalidParameter(format!("atom object lacks \"{name}\"")))?.to_operator()
}

/// Decomposes an instance; returns the decomposition and the decomposed
/// operator. The algebraic and weak methods decompose the terminal value,
/// the crude method `y b` from the atom object, and the `(p,inf)` method the
/// terminal value as a `(p,2)` atom under the atom object's `e`.
pub fn decompose_instance(inst: &InstanceJson, o: &DecomposeOptions) -> Result<(Decomposition, Operator)> {
    let m = inst.to_martingale()?;
    let f = m.filtration();
    Ok(match o.method {
        DecompositionMethod::Algebraic => (algebraic_decomposition(&m, o.p)?.into_decomposition()?, m.terminal()),
        DecompositionMethod::WeakAtomic => (weak_atomic_decomposition(&m, o.p, o.beta)?, m.terminal()),
        DecompositionMethod::CrudeSlice => {
            let atom = require_atom(inst)?;
            let (y, b) = (atom_field(&atom.y, "y")?, atom_field(&atom.b, "b")?);
            let a = y.matmul(&b);
            (crude_to_atoms(&y, &b, atom.level, o.p, o.beta, f)?, a)
        }
        DecompositionMethod::PInfty => {
            let atom = require_atom(inst)?;
            let e = atom_field(&atom.e, "e")?;
            let a = m.terminal();
            let mut options = PInftyOptions::defaults(o.p, &a);
            options.lambda = o.lambda.unwrap_or(options.lambda);
            options.depth = o.depth.unwrap_or(options.depth);
            options.tol = o.tol.unwrap_or(options.tol);
            (p_infty_decomposition(&a, &e, atom.level, o.p, options, f)?, a)
        }
    })
}
