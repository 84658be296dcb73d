//! Run the threat scenarios and the performance bench under the
//! `sepolia-paper` profile and print one headline per report.

use firmchain::harness::{
    run_perf_bench, run_replay_scenario, run_spoof_scenario, run_tamper_scenario, BenchConfig,
    MutationModel, DEFAULT_SEED,
};
use firmchain::ledger::CalibrationProfile;

fn main() -> anyhow::Result<()> {
    let profile = CalibrationProfile::sepolia_paper();
    for model in MutationModel::ALL {
        println!(
            "{}",
            run_tamper_scenario(200, model, &profile, DEFAULT_SEED)?.headline()
        );
    }
    println!(
        "{}",
        run_replay_scenario(100, &profile, DEFAULT_SEED)?.headline()
    );
    println!(
        "{}",
        run_spoof_scenario(100, &profile, DEFAULT_SEED)?.headline()
    );
    for submitters in 1..=3 {
        let cfg = BenchConfig {
            submitters,
            ..BenchConfig::default()
        };
        let r = run_perf_bench(&cfg, &profile);
        println!(
            "{} (analytic {:.1}s, {:.2}tx/min)",
            r.headline(),
            r.analytic_latency_s.unwrap_or_default(),
            r.analytic_throughput_tx_per_min.unwrap_or_default()
        );
    }
    Ok(())
}
