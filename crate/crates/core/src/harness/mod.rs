//! Verification suites over seeded random instances, report emission,
//! replay of single rows, and sharpness probing.

pub mod generate;
pub mod probe;
pub mod suites;
pub mod sweep;

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{FamilyKind, Filtration};
use crate::error::{NclabError, Result};
use crate::io::lenient_f64;
use crate::random::{self, Rng64};

pub use generate::{generate, generate_instances, Generator, Instance, InstanceBatch};
pub use probe::{sharpness_probe, ProbeResult};
pub use suites::{find_suite, Suite, INVARIANTS, SUITES};

/// Default margin tolerance: `1e-8` on margins normalized by `max(1, rhs)`.
pub const DEFAULT_EPS: f64 = 1e-8;

/// One evaluated inequality `lhs <= rhs` before it becomes a row.
#[derive(Clone, Debug)]
pub struct Check {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub params: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
}

impl Check {
    pub fn new(p: Option<f64>, q: Option<f64>, params: serde_json::Value, lhs: f64, rhs: f64) -> Self {
        Self { p, q, params, lhs, rhs }
    }
}

/// Everything needed to rebuild the input of one suite evaluation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRef {
    pub family: FamilyKind,
    pub levels: usize,
    pub seed: u64,
    pub index: u64,
}

/// The input of one suite evaluation.
pub struct Case {
    pub family: FamilyKind,
    pub levels: usize,
    pub seed: u64,
    pub index: u64,
    pub filtration: Filtration,
}

impl Case {
    pub fn new(r: &CaseRef) -> Result<Self> {
        let filtration = generate::standard_filtration(r.family, r.levels)?;
        Ok(Self { family: r.family, levels: r.levels, seed: r.seed, index: r.index, filtration })
    }

    pub fn reference(&self) -> CaseRef {
        CaseRef { family: self.family, levels: self.levels, seed: self.seed, index: self.index }
    }

    /// The generator used by [`Case::martingale`], cycling with the index.
    pub fn generator(&self) -> Generator {
        Generator::ALL[(self.index % Generator::ALL.len() as u64) as usize]
    }

    pub fn martingale(&self) -> Result<crate::algebra::Martingale> {
        generate(&self.filtration, self.generator(), self.seed, self.index)
    }

    /// Auxiliary stream for suite-specific draws, disjoint from the instance stream.
    pub fn rng(&self) -> Rng64 {
        random::stream(self.seed, 2 * self.index + 1)
    }

    pub fn instance_id(&self) -> String {
        generate::instance_id(self.family, self.levels, self.generator(), self.seed, self.index)
    }

    pub fn dim(&self) -> usize {
        self.filtration.dim()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub suite: String,
    pub instance_id: String,
    #[serde(with = "lenient_f64::option")]
    pub p: Option<f64>,
    #[serde(with = "lenient_f64::option")]
    pub q: Option<f64>,
    pub param_json: String,
    #[serde(with = "lenient_f64")]
    pub lhs: f64,
    #[serde(with = "lenient_f64")]
    pub rhs: f64,
    #[serde(with = "lenient_f64")]
    pub margin: f64,
    pub pass: bool,
    pub case: CaseRef,
}

/// `(rhs - lhs) / max(1, |rhs|)`; non-finite values give `-inf`.
pub fn margin(lhs: f64, rhs: f64) -> f64 {
    let m = (rhs - lhs) / rhs.abs().max(1.0);
    if m.is_nan() || (lhs.is_infinite() && lhs > 0.0) {
        f64::NEG_INFINITY
    } else {
        m
    }
}

fn make_row(suite: &Suite, case: &Case, check: Check) -> Row {
    let m = margin(check.lhs, check.rhs);
    Row {
        suite: suite.name.to_string(),
        instance_id: case.instance_id(),
        p: check.p,
        q: check.q,
        param_json: check.params.to_string(),
        lhs: check.lhs,
        rhs: check.rhs,
        margin: m,
        pass: m >= -suite.eps,
        case: case.reference(),
    }
}

fn error_row(suite: &Suite, case: &Case, err: &NclabError) -> Row {
    make_row(suite, case, Check::new(None, None, serde_json::json!({ "error": err.to_string() }), f64::INFINITY, 0.0))
}

/// All rows of one suite on one case. An error becomes a failing row.
pub fn evaluate(suite: &Suite, r: &CaseRef) -> Vec<Row> {
    let case = match Case::new(r) {
        Ok(c) => c,
        Err(e) => {
            let f = Filtration::tensor_dyadic(1).expect("depth one");
            let stub = Case { family: r.family, levels: r.levels, seed: r.seed, index: r.index, filtration: f };
            return vec![error_row(suite, &stub, &e)];
        }
    };
    match (suite.run)(&case) {
        Ok(checks) => checks.into_iter().map(|c| make_row(suite, &case, c)).collect(),
        Err(e) => vec![error_row(suite, &case, &e)],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub rows: usize,
    pub passed: usize,
    pub failed: usize,
    #[serde(with = "lenient_f64")]
    pub min_margin: f64,
    /// Largest `lhs / rhs` over rows with `rhs > 0`.
    #[serde(with = "lenient_f64")]
    pub max_ratio: f64,
}

impl Aggregate {
    pub fn of<'a>(rows: impl IntoIterator<Item = &'a Row>) -> Self {
        let mut agg = Aggregate { rows: 0, passed: 0, failed: 0, min_margin: f64::INFINITY, max_ratio: 0.0 };
        for r in rows {
            agg.rows += 1;
            if r.pass {
                agg.passed += 1;
            } else {
                agg.failed += 1;
            }
            agg.min_margin = agg.min_margin.min(r.margin);
            if r.rhs > 0.0 && r.lhs.is_finite() {
                agg.max_ratio = agg.max_ratio.max(r.lhs / r.rhs);
            }
        }
        agg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub suites: Vec<String>,
    pub families: Vec<FamilyKind>,
    /// Cases per family; `None` uses each suite's default.
    pub trials: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: RunConfig,
    pub versions: BTreeMap<String, String>,
    pub aggregate: Aggregate,
    pub per_suite: BTreeMap<String, Aggregate>,
    pub rows: Vec<Row>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// Recomputes the aggregates from the rows.
    pub fn recomputed(&self) -> (Aggregate, BTreeMap<String, Aggregate>) {
        let mut per: BTreeMap<String, Vec<&Row>> = BTreeMap::new();
        for r in &self.rows {
            per.entry(r.suite.clone()).or_default().push(r);
        }
        (Aggregate::of(&self.rows), per.into_iter().map(|(k, v)| (k, Aggregate::of(v))).collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows_csv(&self.rows, w)
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    suite: &'a str,
    instance_id: &'a str,
    p: Option<f64>,
    q: Option<f64>,
    param_json: &'a str,
    lhs: f64,
    rhs: f64,
    margin: f64,
    pass: bool,
}

/// Columns: suite, instance_id, p, q, param_json, lhs, rhs, margin, pass.
pub fn write_rows_csv<W: Write>(rows: &[Row], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(CsvRow {
            suite: &r.suite,
            instance_id: &r.instance_id,
            p: r.p,
            q: r.q,
            param_json: &r.param_json,
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.margin,
            pass: r.pass,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Depth of case `index` for a suite: its depth list cycled by index.
fn case_levels(suite: &Suite, family: FamilyKind, index: u64) -> usize {
    let choices = (suite.levels)(family);
    choices[(index % choices.len() as u64) as usize]
}

/// Runs every suite in `config` on every family; cases are evaluated in
/// parallel and rows kept in (suite, family, index) order.
pub fn run(config: &RunConfig) -> Result<SuiteReport> {
    let suites = config.suites.iter().map(|s| find_suite(s)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for suite in suites {
        let trials = config.trials.unwrap_or(suite.default_trials);
        let cases: Vec<CaseRef> = config
            .families
            .iter()
            .filter(|f| (suite.families)().contains(f))
            .flat_map(|&family| {
                (0..trials as u64).map(move |index| CaseRef {
                    family,
                    levels: case_levels(suite, family, index),
                    seed: config.seed,
                    index,
                })
            })
            .collect();
        let chunk: Vec<Vec<Row>> = cases.par_iter().map(|c| evaluate(suite, c)).collect();
        rows.extend(chunk.into_iter().flatten());
    }
    let mut report = SuiteReport {
        config: config.clone(),
        versions: BTreeMap::from([("nclab".to_string(), env!("CARGO_PKG_VERSION").to_string())]),
        aggregate: Aggregate::of(&[]),
        per_suite: BTreeMap::new(),
        rows,
    };
    let (agg, per) = report.recomputed();
    report.aggregate = agg;
    report.per_suite = per;
    Ok(report)
}

/// A suite run on the given families, all suites when `names` is `["all"]`.
pub fn verify(names: &[String], families: &[FamilyKind], trials: Option<usize>, seed: u64) -> Result<SuiteReport> {
    let suites = if names.iter().any(|n| n == "all") {
        SUITES.iter().map(|s| s.name.to_string()).collect()
    } else {
        names.to_vec()
    };
    run(&RunConfig { suites, families: families.to_vec(), trials, seed })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplayOutcome {
    pub original: Row,
    pub replayed: Option<Row>,
    /// `lhs`, `rhs` and `pass` reproduced bit for bit.
    pub identical: bool,
}

/// Re-evaluates the case behind `row` and finds the row with the same
/// parameters.
pub fn replay(row: &Row) -> Result<ReplayOutcome> {
    let suite = find_suite(&row.suite)?;
    let fresh = evaluate(suite, &row.case);
    let replayed = fresh.into_iter().find(|r| r.param_json == row.param_json && r.p == row.p && r.q == row.q);
    let identical = replayed.as_ref().is_some_and(|r| {
        r.lhs.to_bits() == row.lhs.to_bits() && r.rhs.to_bits() == row.rhs.to_bits() && r.pass == row.pass
    });
    Ok(ReplayOutcome { original: row.clone(), replayed, identical })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins_and_pass() {
        assert_eq!(margin(1.0, 1.0), 0.0);
        assert_eq!(margin(f64::NAN, 1.0), f64::NEG_INFINITY);
        assert!((margin(3.0, 2.0) + 0.5).abs() < 1e-15);
        assert!((margin(0.5, 0.25) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn aggregates_match_rows() {
        let config =
            RunConfig { suites: vec!["rev-triangle".into(), "best-constant".into()], families: FamilyKind::ALL.to_vec(), trials: Some(3), seed: 5 };
        let report = run(&config).unwrap();
        let (agg, per) = report.recomputed();
        assert_eq!(agg, report.aggregate);
        assert_eq!(per, report.per_suite);
        assert!(report.all_passed());
        let again = run(&config).unwrap();
        assert_eq!(report.rows, again.rows);
    }

    #[test]
    fn rows_replay_identically() {
        let report = verify(&["com-l2".into()], &[FamilyKind::BlockPinching], Some(2), 3).unwrap();
        for row in &report.rows {
            let text = serde_json::to_string(row).unwrap();
            let back: Row = serde_json::from_str(&text).unwrap();
            assert!(replay(&back).unwrap().identical);
        }
    }

    #[test]
    fn csv_has_documented_columns() {
        let report = verify(&["rev-triangle".into()], &[FamilyKind::TensorDyadic], Some(1), 0).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("suite,instance_id,p,q,param_json,lhs,rhs,margin,pass\n"));
        assert_eq!(text.lines().count(), report.rows.len() + 1);
    }

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(verify(&["nope".into()], &[FamilyKind::TensorDyadic], Some(1), 0).is_err());
    }
}
