//! Experiment runner: single runs, Monte Carlo sweeps, the forgery table,
//! message and qubit accounting, and the statevector cross-check.
//!
//! Trial `t` of an experiment runs with seed `base_seed + t`. Trials run on
//! the rayon pool but results are collected in trial order, so identical
//! specs give identical reports.

mod accounting;
mod forgery;
mod oracle;
mod output;
mod run;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::Strategy;
use crate::protocol::{evaluate_dba, DbaVerdict, Decision};
use crate::registers::ProtocolConfig;
use crate::trace::EventKind;
use crate::{Error, Result};

pub use accounting::{
    message_accounting, qubit_accounting, MessageAccounting, QubitAccounting, RoundAccount,
    WIRE_BITS_PER_SYMBOL,
};
pub use forgery::{
    binomial, controlled_forgery_trial, forgery_probability_exact, forgery_probability_monte_carlo,
    unconditioned_forgery_trial, ForgeryEstimate,
};
pub use oracle::{oracle_equivalence, register_properties, OracleReport, PropertyReport};
pub use output::{write_report, Format, Tabular};
pub use run::{replay, simulate, simulate_with, SimOptions};
pub use stats::{chi_square_two_sample, wilson_interval, ChiSquare, Estimate};

/// Who plays which strategy, and the commander's order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub order: bool,
    #[serde(default = "honest")]
    pub commander: Strategy,
    /// One entry per lieutenant.
    pub lieutenants: Vec<Strategy>,
    /// Traitorous lieutenants see each other's registers and messages.
    #[serde(default)]
    pub collusion: bool,
}

fn honest() -> Strategy {
    Strategy::Honest
}

/// Corruption rate used by the catalog's garbage-sending commanders.
pub const CATALOG_CORRUPTION_RATE: f64 = 0.5;

impl Scenario {
    pub fn all_loyal(n: usize, order: bool) -> Self {
        Scenario {
            name: "all_loyal".into(),
            order,
            commander: Strategy::Honest,
            lieutenants: vec![Strategy::Honest; n.saturating_sub(1)],
            collusion: false,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_commander(mut self, strategy: Strategy) -> Self {
        self.commander = strategy;
        self
    }

    pub fn with_lieutenant(mut self, i: usize, strategy: Strategy) -> Self {
        self.lieutenants[i] = strategy;
        self
    }

    pub fn with_collusion(mut self, collusion: bool) -> Self {
        self.collusion = collusion;
        self
    }

    pub fn commander_loyal(&self) -> bool {
        self.commander.is_honest()
    }

    pub fn loyal_lieutenants(&self) -> BTreeSet<usize> {
        (0..self.lieutenants.len())
            .filter(|&i| self.lieutenants[i].is_honest())
            .collect()
    }

    pub fn traitors(&self) -> BTreeSet<usize> {
        (0..self.lieutenants.len())
            .filter(|&i| !self.lieutenants[i].is_honest())
            .collect()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let width = n - 1;
        if self.lieutenants.len() != width {
            return Err(Error::Config(format!(
                "scenario {} lists {} lieutenants, expected {width}",
                self.name,
                self.lieutenants.len()
            )));
        }
        if !self.commander.fits_commander() {
            return Err(Error::Config(format!(
                "{} cannot play the commander",
                self.commander.name()
            )));
        }
        self.commander.validate(width)?;
        for s in &self.lieutenants {
            if !s.fits_lieutenant() {
                return Err(Error::Config(format!(
                    "{} cannot play a lieutenant",
                    s.name()
                )));
            }
            s.validate(width)?;
        }
        Ok(())
    }

    /// Reads a scenario from a JSON file.
    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Traitorous lieutenant strategies the catalog tries in every slot.
fn lieutenant_traitors(order: bool) -> Vec<(String, Strategy)> {
    vec![
        (
            "forger".into(),
            Strategy::RandomFillForger { target_order: None },
        ),
        (
            "liar_flip".into(),
            Strategy::DecisionLiar {
                claimed: Decision::from_order(!order),
            },
        ),
        (
            "liar_abort".into(),
            Strategy::DecisionLiar {
                claimed: Decision::Abort,
            },
        ),
        ("silent".into(), Strategy::SilentTraitor),
    ]
}

fn commander_traitors(width: usize, order: bool) -> Vec<(String, Strategy)> {
    let orders = (0..width).map(|i| (i, (i % 2 == 0) != order)).collect();
    let half = (0..width.div_ceil(2)).collect();
    vec![
        (
            "equivocating".into(),
            Strategy::EquivocatingCommander { orders },
        ),
        (
            "garbage".into(),
            Strategy::GarbageVectorCommander {
                corruption_rate: CATALOG_CORRUPTION_RATE,
            },
        ),
        (
            "mixed".into(),
            Strategy::MixedCommander {
                consistent: half,
                corruption_rate: CATALOG_CORRUPTION_RATE,
            },
        ),
        ("silent".into(), Strategy::SilentTraitor),
    ]
}

/// The fixed scenario list for `n` generals: everyone loyal; a loyal
/// commander with one traitor in each slot for each lieutenant strategy; a
/// traitorous commander with loyal lieutenants; and, for `n ≥ 4`, a
/// traitorous commander together with a traitor in the last slot.
pub fn catalog(n: usize) -> Vec<Scenario> {
    let width = n - 1;
    let order = true;
    let mut out = vec![Scenario::all_loyal(n, order)];
    for (name, s) in lieutenant_traitors(order) {
        for slot in 0..width {
            out.push(
                Scenario::all_loyal(n, order)
                    .with_lieutenant(slot, s.clone())
                    .named(format!("loyal_commander+{name}@LT{slot}")),
            );
        }
    }
    for (name, c) in commander_traitors(width, order) {
        out.push(
            Scenario::all_loyal(n, order)
                .with_commander(c)
                .named(format!("{name}_commander")),
        );
    }
    if n >= 4 {
        for (cname, c) in commander_traitors(width, order) {
            for (lname, s) in lieutenant_traitors(order) {
                out.push(
                    Scenario::all_loyal(n, order)
                        .with_commander(c.clone())
                        .with_lieutenant(width - 1, s)
                        .named(format!("{cname}_commander+{lname}@LT{}", width - 1)),
                );
            }
        }
    }
    out
}

/// A scenario by catalog name, or `equivocation`, the two-lieutenant
/// split used in the divergence demonstration.
pub fn scenario_by_name(name: &str, n: usize) -> Result<Scenario> {
    if name == "equivocation" {
        let orders = (0..n - 1).map(|i| (i, i % 2 == 1)).collect();
        return Ok(Scenario::all_loyal(n, true)
            .with_commander(Strategy::EquivocatingCommander { orders })
            .named("equivocation"));
    }
    catalog(n)
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Config(format!("no scenario named {name:?} for n = {n}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub config: ProtocolConfig,
    pub scenario: Scenario,
    pub trials: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl ExperimentSpec {
    pub fn new(config: ProtocolConfig, scenario: Scenario, trials: u64, base_seed: u64) -> Self {
        ExperimentSpec {
            config,
            scenario,
            trials,
            base_seed,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.config.validate()?;
        self.scenario.validate(self.config.n)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// One trial of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<DbaVerdict>,
    pub forgery_passes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finals: Option<BTreeMap<usize, Decision>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub trials: u64,
    pub errors: u64,
    pub consistency: u64,
    pub validity: u64,
    pub order_followed: u64,
    pub all_loyal_agreement: u64,
    /// Trials with at least one forgery pass.
    pub forgery_trials: u64,
    pub forgery_passes: u64,
    /// Validity failures in trials without a forgery pass.
    pub unexplained_validity_failures: u64,
    /// Check failures keyed by failing condition.
    pub check_failures: BTreeMap<String, u64>,
    /// Final decisions of loyal lieutenants.
    pub finals: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub scenario: String,
    pub n: usize,
    pub m: usize,
    pub counts: Counts,
    pub estimates: Vec<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub summary: StatsSummary,
    pub trials: Vec<TrialResult>,
}

fn run_trial(spec: &ExperimentSpec, trial: u64) -> (TrialResult, BTreeMap<String, u64>) {
    let seed = spec.base_seed.wrapping_add(trial);
    let config = spec.config.with_seed(seed);
    let mut failures = BTreeMap::new();
    let result = simulate(&config, &spec.scenario, trial).and_then(|outcome| {
        for r in outcome.trace.of_kind(EventKind::Check) {
            if let Some(label) = r.result.as_deref().and_then(|s| s.strip_prefix("fail:")) {
                *failures.entry(label.to_owned()).or_insert(0) += 1;
            }
        }
        let loyal = spec.scenario.loyal_lieutenants();
        let verdict = evaluate_dba(
            &outcome,
            &loyal,
            spec.scenario.commander_loyal(),
            spec.scenario.order,
        )?;
        let finals = outcome
            .finals()
            .into_iter()
            .filter(|(i, _)| loyal.contains(i))
            .collect();
        Ok((verdict, outcome.forgery_passes, finals))
    });
    let record = match result {
        Ok((verdict, forgery_passes, finals)) => TrialResult {
            trial,
            seed,
            verdict: Some(verdict),
            forgery_passes,
            finals: Some(finals),
            error: None,
        },
        Err(e) => TrialResult {
            trial,
            seed,
            verdict: None,
            forgery_passes: 0,
            finals: None,
            error: Some(e.to_string()),
        },
    };
    (record, failures)
}

/// Runs every trial of `spec` and aggregates the verdicts.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let results: Vec<_> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, t))
        .collect();
    let mut counts = Counts {
        trials: spec.trials,
        ..Counts::default()
    };
    let mut trials = Vec::with_capacity(results.len());
    let mut everyone_loyal = false;
    for (record, failures) in results {
        for (k, v) in failures {
            *counts.check_failures.entry(k).or_insert(0) += v;
        }
        match &record.verdict {
            None => counts.errors += 1,
            Some(v) => {
                counts.consistency += u64::from(v.consistency);
                counts.validity += u64::from(v.validity);
                counts.order_followed += u64::from(v.order_followed);
                if let Some(agree) = v.all_loyal_agreement {
                    everyone_loyal = true;
                    counts.all_loyal_agreement += u64::from(agree);
                }
                let forged = record.forgery_passes > 0;
                counts.forgery_trials += u64::from(forged);
                counts.forgery_passes += record.forgery_passes as u64;
                counts.unexplained_validity_failures += u64::from(!v.validity && !forged);
            }
        }
        for d in record.finals.iter().flat_map(|f| f.values()) {
            *counts.finals.entry(d.to_string()).or_insert(0) += 1;
        }
        trials.push(record);
    }
    let n = spec.trials;
    let mut estimates = vec![
        Estimate::new("consistency", counts.consistency, n, None),
        Estimate::new("validity", counts.validity, n, None),
        Estimate::new("order_followed", counts.order_followed, n, None),
        Estimate::new("forgery_trial", counts.forgery_trials, n, None),
    ];
    if everyone_loyal {
        estimates.push(Estimate::new(
            "all_loyal_agreement",
            counts.all_loyal_agreement,
            n,
            Some(1.0),
        ));
    }
    Ok(ExperimentReport {
        summary: StatsSummary {
            scenario: spec.scenario.name.clone(),
            n: spec.config.n,
            m: spec.config.m,
            counts,
            estimates,
        },
        spec: spec.clone(),
        trials,
    })
}

/// Runs every scenario in `scenarios` for every `(n, m)` in the grid.
pub fn sweep(
    ns: &[usize],
    ms: &[usize],
    scenarios: impl Fn(usize) -> Result<Vec<Scenario>>,
    template: &ProtocolConfig,
    trials: u64,
    base_seed: u64,
) -> Result<Vec<StatsSummary>> {
    let mut out = Vec::new();
    for &n in ns {
        for &m in ms {
            let config = ProtocolConfig { n, m, ..*template };
            config.validate()?;
            for scenario in scenarios(n)? {
                let spec = ExperimentSpec::new(config, scenario, trials, base_seed);
                out.push(run_experiment(&spec)?.summary);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_sizes() {
        // 1 all-loyal + 4 strategies per slot + 4 commander strategies
        assert_eq!(catalog(3).len(), 1 + 4 * 2 + 4);
        // plus 4 × 4 traitor-commander pairs
        assert_eq!(catalog(4).len(), 1 + 4 * 3 + 4 + 16);
        for n in 3..7 {
            let names: BTreeSet<_> = catalog(n).iter().map(|s| s.name.clone()).collect();
            assert_eq!(names.len(), catalog(n).len());
            for s in catalog(n) {
                s.validate(n).unwrap();
            }
        }
    }

    #[test]
    fn scenario_lookup() {
        let s = scenario_by_name("equivocation", 3).unwrap();
        assert_eq!(
            s.commander,
            Strategy::EquivocatingCommander {
                orders: BTreeMap::from([(0, false), (1, true)])
            }
        );
        assert!(scenario_by_name("garbage_commander", 5).is_ok());
        assert!(scenario_by_name("nope", 3).is_err());
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::all_loyal(4, true).validate(5).is_err());
        let bad = Scenario::all_loyal(3, true)
            .with_lieutenant(0, Strategy::SilentTraitor)
            .with_commander(Strategy::RandomFillForger { target_order: None });
        assert!(bad.validate(3).is_err());
        let spec = ExperimentSpec::new(
            ProtocolConfig::new(3, 8, 0).unwrap(),
            Scenario::all_loyal(3, true),
            0,
            0,
        );
        assert!(spec.validate().is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{
            "config": {"n": 3, "m": 8, "seed": 0, "tolerance": {"z": 4.0, "sd_max": 0}},
            "scenario": {"name": "x", "order": false, "lieutenants": [{"kind": "honest"}, {"kind": "silent_traitor"}]},
            "trials": 5
        }"#;
        let spec: ExperimentSpec = serde_json::from_str(json).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.scenario.commander, Strategy::Honest);
        assert_eq!(spec.scenario.traitors(), BTreeSet::from([1]));
        let again: ExperimentSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn experiment_is_reproducible() {
        let config = ProtocolConfig::new(4, 16, 0).unwrap();
        let spec = ExperimentSpec::new(
            config,
            scenario_by_name("garbage_commander", 4).unwrap(),
            40,
            9,
        );
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.trials[3].seed, 12);
    }

    #[test]
    fn all_loyal_experiment() {
        let spec = ExperimentSpec::new(
            ProtocolConfig::new(3, 32, 0).unwrap(),
            Scenario::all_loyal(3, false),
            50,
            0,
        );
        let report = run_experiment(&spec).unwrap();
        let c = &report.summary.counts;
        assert_eq!(
            (c.consistency, c.validity, c.all_loyal_agreement, c.errors),
            (50, 50, 50, 0)
        );
        assert_eq!(c.finals.get("0"), Some(&100));
    }
}
