//! Scripted threat scenarios and performance measurements over the
//! simulated stack.
//!
//! Every scenario records a per-trial log; the summary statistics in a
//! [`ScenarioReport`] are a pure function of that log (see
//! [`ScenarioReport::is_consistent`]). All randomness comes from a seeded
//! ChaCha stream and the seed is embedded in the report.

mod bench;
mod scenarios;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fingerprint::Digest;
use crate::ledger::{Gas, Wei};
use crate::serde_util;

pub use bench::{run_perf_bench, BenchConfig};
pub use scenarios::{
    run_replay_scenario, run_spoof_scenario, run_tamper_scenario, MutationModel, ScenarioError,
};

pub const DEFAULT_SEED: u64 = 0x5EED_F1A3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialOutcome {
    /// Tampered image, verification returned false.
    Detected,
    /// Tampered image accepted. Must never happen.
    FalseAccept,
    /// Unmodified image verified true.
    Match,
    /// Admission refused by the ledger.
    Rejected,
    /// Included but reverted by the contract.
    Reverted,
    /// Included and succeeded.
    Confirmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub outcome: TrialOutcome,
    /// Control-arm trials are logged but excluded from `trials`.
    #[serde(default)]
    pub control: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitter: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_ms: Option<u64>,
    /// Blocks sealed between submission and inclusion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deferred_blocks: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas_used: Option<Gas>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_wei")]
    pub fee_wei: Option<Wei>,
}

impl TrialRecord {
    pub fn new(index: u64, outcome: TrialOutcome) -> Self {
        TrialRecord {
            index,
            outcome,
            control: false,
            detail: None,
            submitter: None,
            submitted_ms: None,
            final_ms: None,
            deferred_blocks: None,
            gas_used: None,
            fee_wei: None,
        }
    }

    pub fn control(mut self) -> Self {
        self.control = true;
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    pub fn latency_ms(&self) -> Option<u64> {
        Some(self.final_ms? - self.submitted_ms?)
    }
}

mod opt_wei {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<u128>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(w) => s.serialize_str(&w.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u128>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "crate::serde_util::wei")] u128);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

/// Statistics derived from a trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: u64,
    pub detections: u64,
    pub rejections: u64,
    pub reverts: u64,
    pub false_accepts: u64,
    pub controls: u64,
    pub latency_samples: u64,
    pub mean_latency_s: Option<f64>,
    pub p50_latency_s: Option<f64>,
    pub p95_latency_s: Option<f64>,
    pub max_latency_s: Option<f64>,
    /// Sum over submitters of receipts per minute spent waiting on them.
    pub throughput_tx_per_min: Option<f64>,
    pub mean_gas: Option<f64>,
    #[serde(with = "serde_util::wei")]
    pub total_fee_wei: Wei,
    pub deferred_txs: u64,
}

fn percentile(sorted: &[u64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1] as f64 / 1000.0
}

impl Summary {
    pub fn from_trials(log: &[TrialRecord]) -> Summary {
        let counted = || log.iter().filter(|t| !t.control);
        let count = |o: TrialOutcome| counted().filter(|t| t.outcome == o).count() as u64;
        let mut latencies: Vec<u64> = log.iter().filter_map(TrialRecord::latency_ms).collect();
        latencies.sort_unstable();
        let n = latencies.len();
        let mean_latency_s =
            (n > 0).then(|| latencies.iter().map(|&l| l as f64).sum::<f64>() / n as f64 / 1000.0);

        let mut per_submitter: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
        for t in log {
            if let (Some(s), Some(l)) = (t.submitter, t.latency_ms()) {
                let e = per_submitter.entry(s).or_default();
                e.0 += 1;
                e.1 += l;
            }
        }
        let throughput_tx_per_min = (!per_submitter.is_empty()).then(|| {
            per_submitter
                .values()
                .filter(|(_, busy)| *busy > 0)
                .map(|&(count, busy)| count as f64 * 60_000.0 / busy as f64)
                .sum()
        });

        let gas: Vec<Gas> = counted().filter_map(|t| t.gas_used).collect();
        let mean_gas = (!gas.is_empty())
            .then(|| gas.iter().map(|&g| g as f64).sum::<f64>() / gas.len() as f64);

        Summary {
            trials: counted().count() as u64,
            detections: count(TrialOutcome::Detected),
            rejections: count(TrialOutcome::Rejected),
            reverts: count(TrialOutcome::Reverted),
            false_accepts: count(TrialOutcome::FalseAccept),
            controls: log.iter().filter(|t| t.control).count() as u64,
            latency_samples: n as u64,
            mean_latency_s,
            p50_latency_s: (n > 0).then(|| percentile(&latencies, 0.50)),
            p95_latency_s: (n > 0).then(|| percentile(&latencies, 0.95)),
            max_latency_s: latencies.last().map(|&l| l as f64 / 1000.0),
            throughput_tx_per_min,
            mean_gas,
            total_fee_wei: log.iter().filter_map(|t| t.fee_wei).sum(),
            deferred_txs: log
                .iter()
                .filter(|t| t.deferred_blocks.is_some_and(|d| d > 0))
                .count() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub profile: String,
    /// How the numbers should be read.
    pub interpretation: Vec<String>,
    pub summary: Summary,
    /// Contract storage hash before and after the adversarial phase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_hash_before: Option<Digest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_hash_after: Option<Digest>,
    /// Submission-to-last-receipt throughput including client think time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_throughput_tx_per_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_latency_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_throughput_tx_per_min: Option<f64>,
    pub trial_log: Vec<TrialRecord>,
}

impl ScenarioReport {
    pub fn new(scenario: &str, seed: u64, profile: &str, trial_log: Vec<TrialRecord>) -> Self {
        ScenarioReport {
            scenario: scenario.to_string(),
            seed,
            profile: profile.to_string(),
            interpretation: Vec::new(),
            summary: Summary::from_trials(&trial_log),
            state_hash_before: None,
            state_hash_after: None,
            wall_throughput_tx_per_min: None,
            analytic_latency_s: None,
            analytic_throughput_tx_per_min: None,
            trial_log,
        }
    }

    /// The stored summary equals one recomputed from the trial log and the
    /// counters respect `detections + false_accepts <= trials`.
    pub fn is_consistent(&self) -> bool {
        let s = &self.summary;
        Summary::from_trials(&self.trial_log) == *s && s.detections + s.false_accepts <= s.trials
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Short human-readable summary.
    pub fn headline(&self) -> String {
        let s = &self.summary;
        let mut out = format!(
            "{}: trials={} detections={} rejections={} reverts={} false_accepts={}",
            self.scenario, s.trials, s.detections, s.rejections, s.reverts, s.false_accepts
        );
        if let Some(l) = s.mean_latency_s {
            out.push_str(&format!(" mean_latency={l:.3}s"));
        }
        if let Some(t) = s.throughput_tx_per_min {
            out.push_str(&format!(" throughput={t:.2}tx/min"));
        }
        if let Some(g) = s.mean_gas {
            out.push_str(&format!(" mean_gas={g:.0}"));
        }
        out
    }
}
