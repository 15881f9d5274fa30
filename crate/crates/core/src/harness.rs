//! Mechanism dispatch, declared approximation bounds and bench reports.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{audit_transcript, AuctionError, Instance, Outcome, Transcript};
use crate::format::instance_hash;
use crate::monotone::{run_iterative_pruning, MonotonePhaseRecord};
use crate::nonmonotone::{run_simultaneous_iterative_pruning, DualPhaseRecord, DEFAULT_EXACT_CAP};
use crate::oracles::{ratio_report, OptSource};
use crate::posted::{run_symmetric_posted_price, PostedPriceState};
use crate::subadditive::{run_subadditive_clock, UniformPhaseRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    IterativePruning,
    Simultaneous,
    Subadditive,
    PostedPrice,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [
        Mechanism::IterativePruning,
        Mechanism::Simultaneous,
        Mechanism::Subadditive,
        Mechanism::PostedPrice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::IterativePruning => crate::monotone::MECHANISM_NAME,
            Mechanism::Simultaneous => crate::nonmonotone::MECHANISM_NAME,
            Mechanism::Subadditive => crate::subadditive::MECHANISM_NAME,
            Mechanism::PostedPrice => crate::posted::MECHANISM_NAME,
        }
    }

    /// Approximation factor the mechanism is guaranteed to meet on `n` bidders.
    /// `None` when the bound is undefined (the subadditive bound needs `n ≥ 3`).
    pub fn declared_bound(self, n: usize) -> Option<f64> {
        let nf = n as f64;
        match self {
            Mechanism::IterativePruning => Some(4.75),
            Mechanism::Simultaneous => Some(64.0),
            Mechanism::Subadditive => {
                let ll = nf.log2().log2();
                (n >= 3 && ll > 0.0).then(|| 40.0 * nf.log2() / ll)
            }
            Mechanism::PostedPrice => (n >= 2).then(|| 2.0 * nf.ln() + 1.0),
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|m| m.name()).collect();
                format!("unknown mechanism `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    /// Ground sets up to this size use exact unconstrained maximization.
    pub exact_submax_cap: usize,
}

impl Default for MechanismConfig {
    fn default() -> Self {
        Self {
            exact_submax_cap: DEFAULT_EXACT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseRecords {
    Monotone(Vec<MonotonePhaseRecord>),
    Dual(Vec<DualPhaseRecord>),
    Uniform(Vec<UniformPhaseRecord>),
    Posted(PostedPriceState),
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub mechanism: Mechanism,
    pub outcome: Outcome,
    pub transcript: Transcript,
    /// Index of the last phase.
    pub phases: usize,
    pub value_queries: u64,
    pub records: PhaseRecords,
}

pub fn run_mechanism(
    mechanism: Mechanism,
    instance: &Instance,
    config: &MechanismConfig,
) -> Result<RunSummary, AuctionError> {
    let before = instance.oracle().query_count();
    let (outcome, transcript, phases, records) = match mechanism {
        Mechanism::IterativePruning => {
            let run = run_iterative_pruning(instance)?;
            let t = run.t_hat();
            (run.outcome, run.transcript, t, PhaseRecords::Monotone(run.phases))
        }
        Mechanism::Simultaneous => {
            let run = run_simultaneous_iterative_pruning(instance, config.exact_submax_cap)?;
            let t = run.t_hat();
            (run.outcome, run.transcript, t, PhaseRecords::Dual(run.phases))
        }
        Mechanism::Subadditive => {
            let run = run_subadditive_clock(instance)?;
            let t = run.t_final();
            (run.outcome, run.transcript, t, PhaseRecords::Uniform(run.phases))
        }
        Mechanism::PostedPrice => {
            let run = run_symmetric_posted_price(instance)?;
            (run.outcome, run.transcript, 1, PhaseRecords::Posted(run.state))
        }
    };
    Ok(RunSummary {
        mechanism,
        outcome,
        transcript,
        phases,
        value_queries: instance.oracle().query_count() - before,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub family: String,
    pub instance: String,
    pub mechanism: Mechanism,
    pub n: usize,
    pub value: Option<f64>,
    pub opt: Option<f64>,
    pub opt_source: Option<OptSource>,
    pub ratio: Option<f64>,
    pub bound: Option<f64>,
    pub payment: Option<f64>,
    pub value_queries: Option<u64>,
    pub phases: Option<usize>,
    pub audit_violations: Option<usize>,
    pub within_bound: bool,
    /// Why the row has no ratio.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchAggregate {
    pub mechanism: Mechanism,
    pub family: String,
    pub rows: usize,
    pub skipped: usize,
    pub max_ratio: Option<f64>,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub tolerance: f64,
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<BenchAggregate>,
}

impl BenchReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.within_bound).count()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Tab-separated rows followed by `#aggregate` lines.
    pub fn to_text(&self) -> String {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), crate::format::fmt_f64);
        let mut out = String::new();
        out.push_str("# name\tinstance\tmechanism\tn\tvalue\topt\tratio\tbound\tpayment\tqueries\tphases\taudit\tstatus\n");
        for r in &self.rows {
            let status = match (&r.skipped, r.within_bound) {
                (Some(why), _) => format!("skipped: {why}"),
                (None, true) => "ok".to_string(),
                (None, false) => "VIOLATION".to_string(),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.name,
                r.instance,
                r.mechanism,
                r.n,
                opt(r.value),
                opt(r.opt),
                opt(r.ratio),
                opt(r.bound),
                opt(r.payment),
                r.value_queries.map_or("-".into(), |q| q.to_string()),
                r.phases.map_or("-".into(), |p| p.to_string()),
                r.audit_violations.map_or("-".into(), |a| a.to_string()),
                status
            );
        }
        for a in &self.aggregates {
            let _ = writeln!(
                out,
                "#aggregate\t{}\t{}\trows={}\tskipped={}\tmax_ratio={}\tviolations={}",
                a.mechanism,
                a.family,
                a.rows,
                a.skipped,
                opt(a.max_ratio),
                a.violations
            );
        }
        out
    }
}

fn bench_row(
    name: &str,
    instance: &Instance,
    mechanism: Mechanism,
    config: &MechanismConfig,
    tolerance: f64,
) -> BenchRow {
    let mut row = BenchRow {
        name: name.to_string(),
        family: instance
            .metadata
            .generator
            .clone()
            .unwrap_or_else(|| "unlabeled".to_string()),
        instance: instance_hash(instance),
        mechanism,
        n: instance.len(),
        value: None,
        opt: None,
        opt_source: None,
        ratio: None,
        bound: mechanism.declared_bound(instance.len()),
        payment: None,
        value_queries: None,
        phases: None,
        audit_violations: None,
        within_bound: true,
        skipped: None,
    };
    let run = match run_mechanism(mechanism, instance, config) {
        Ok(run) => run,
        Err(e) => {
            row.skipped = Some(e.to_string());
            return row;
        }
    };
    let audit = audit_transcript(&run.transcript, instance, &run.outcome);
    row.value = Some(run.outcome.value);
    row.payment = Some(run.outcome.total_payment);
    row.value_queries = Some(run.value_queries);
    row.phases = Some(run.phases);
    row.audit_violations = Some(audit.violations.len());
    match ratio_report(instance, &run.outcome) {
        Ok(report) => {
            row.opt = Some(report.opt);
            row.opt_source = Some(report.source);
            row.ratio = Some(report.ratio);
            if let Some(bound) = row.bound {
                row.within_bound = report.ratio <= bound + tolerance;
            }
        }
        Err(e) => row.skipped = Some(e.to_string()),
    }
    row
}

/// Run `mechanism` on every named instance, in parallel, preserving input order.
pub fn bench(
    instances: &[(String, Instance)],
    mechanism: Mechanism,
    config: &MechanismConfig,
    tolerance: f64,
) -> BenchReport {
    let rows: Vec<BenchRow> = instances
        .par_iter()
        .map(|(name, inst)| bench_row(name, inst, mechanism, config, tolerance))
        .collect();
    let mut groups: BTreeMap<(Mechanism, String), BenchAggregate> = BTreeMap::new();
    for r in &rows {
        let agg = groups
            .entry((r.mechanism, r.family.clone()))
            .or_insert_with(|| BenchAggregate {
                mechanism: r.mechanism,
                family: r.family.clone(),
                rows: 0,
                skipped: 0,
                max_ratio: None,
                violations: 0,
            });
        agg.rows += 1;
        if r.skipped.is_some() {
            agg.skipped += 1;
        }
        if let Some(ratio) = r.ratio {
            agg.max_ratio = Some(agg.max_ratio.map_or(ratio, |m: f64| m.max(ratio)));
        }
        if !r.within_bound {
            agg.violations += 1;
        }
    }
    BenchReport {
        tolerance,
        rows,
        aggregates: groups.into_values().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{generate, RandomFamily, RandomSpec};

    #[test]
    fn names_parse() {
        for m in Mechanism::ALL {
            assert_eq!(m.name().parse::<Mechanism>().unwrap(), m);
        }
        assert!("greedy".parse::<Mechanism>().is_err());
    }

    #[test]
    fn declared_bounds() {
        assert_eq!(Mechanism::IterativePruning.declared_bound(10), Some(4.75));
        assert_eq!(Mechanism::Simultaneous.declared_bound(10), Some(64.0));
        let b = Mechanism::Subadditive.declared_bound(16).unwrap();
        assert!((b - 80.0).abs() < 1e-12);
        assert_eq!(Mechanism::Subadditive.declared_bound(2), None);
        let p = Mechanism::PostedPrice.declared_bound(8).unwrap();
        assert!((p - (2.0 * 8f64.ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn bench_aggregate_matches_rows() {
        let instances: Vec<(String, Instance)> = (0..6)
            .map(|s| (format!("c{s}"), generate(RandomFamily::Coverage, RandomSpec::new(6, s)).unwrap()))
            .collect();
        let report = bench(&instances, Mechanism::IterativePruning, &MechanismConfig::default(), 1e-6);
        assert_eq!(report.rows.len(), 6);
        let max = report.rows.iter().filter_map(|r| r.ratio).fold(f64::MIN, f64::max);
        assert_eq!(report.aggregates[0].max_ratio, Some(max));
        assert!(report.passed());
    }

    #[test]
    fn empty_bench_passes() {
        let report = bench(&[], Mechanism::Simultaneous, &MechanismConfig::default(), 1e-6);
        assert!(report.rows.is_empty() && report.passed());
    }
}
