//! Parameter sweeps over the fractional, regular-Hardy and `zeta` quantities.

use std::io::Write;

use serde::Serialize;
use serde_json::json;

use super::generate::{generate, standard_filtration, Generator};
use crate::algebra::FamilyKind;
use crate::error::{NclabError, Result};
use crate::transforms::{fractional_boundedness, reg_hardy_check, regularity_constant, zeta_profile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Fractional,
    RegHardy,
    Zeta,
}

impl SweepKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fractional" => Ok(Self::Fractional),
            "reghardy" | "reg-hardy" => Ok(Self::RegHardy),
            "zeta" => Ok(Self::Zeta),
            other => Err(NclabError::UnknownSuite(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Fractional => "fractional",
            Self::RegHardy => "reghardy",
            Self::Zeta => "zeta",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub families: Vec<FamilyKind>,
    pub levels: usize,
    pub ps: Vec<f64>,
    pub qs: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub suite: String,
    pub instance_id: String,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub param_json: String,
    pub value: f64,
}

fn row(kind: SweepKind, id: String, p: Option<f64>, q: Option<f64>, params: serde_json::Value, value: f64) -> SweepRow {
    SweepRow { suite: kind.name().to_string(), instance_id: id, p, q, param_json: params.to_string(), value }
}

/// Rows of a sweep:
/// `zeta` gives one row per level,
/// `reghardy` gives `h_p^c / H_p^c` per instance and `p` with the sampled `C`,
/// `fractional` gives `||I^alpha x||_(h_q^c) / ||x||_(h_p^c)` per trial and `(p, q)`.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &family in &config.families {
        let f = standard_filtration(family, config.levels)?;
        let base = format!("{}/N{}", family.name(), config.levels);
        let zeta = zeta_profile(&f, config.seed);
        match config.kind {
            SweepKind::Zeta => {
                for (k, v) in zeta.values.iter().enumerate() {
                    if let Some(v) = v {
                        rows.push(row(config.kind, base.clone(), None, None, json!({ "n": k + 1, "method": zeta.method }), *v));
                    }
                }
            }
            SweepKind::RegHardy => {
                let reg = regularity_constant(&f, 32, config.seed);
                for index in 0..config.trials as u64 {
                    let g = Generator::ALL[(index % Generator::ALL.len() as u64) as usize];
                    let m = generate(&f, g, config.seed, index)?;
                    let id = super::generate::instance_id(family, config.levels, g, config.seed, index);
                    for &p in &config.ps {
                        let r = reg_hardy_check(&m, p, reg.constant, 0.0)?;
                        let params = json!({
                            "C": reg.constant,
                            "certified": reg.certified,
                            "lower_ok": r.lower_ok,
                            "upper_ok": r.upper_ok,
                        });
                        rows.push(row(config.kind, id.clone(), Some(p), None, params, r.ratio()));
                    }
                }
            }
            SweepKind::Fractional => {
                for &p in &config.ps {
                    for &q in &config.qs {
                        let r = fractional_boundedness(&f, p, q, config.trials, config.seed, &zeta)?;
                        for (t, v) in r.ratios.iter().enumerate() {
                            let params = json!({ "alpha": r.alpha, "trial": t, "diagonal_margin": r.diagonal_margin });
                            rows.push(row(config.kind, format!("{base}/seed{}/{t}", config.seed), Some(p), Some(q), params, *v));
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Columns: suite, instance_id, p, q, param_json, value.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
