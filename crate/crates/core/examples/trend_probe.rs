//! Sweep NMSE and per-antenna SNR over (M, N, SNR) and check the headline
//! trends: more antennas give lower NMSE at a fixed pilot length, longer
//! pilots never hurt, and the beamforming gap to the perfect-knowledge
//! bound shrinks with the antenna count.
//!
//! Runs a reduced setup by default; env knobs scale it up (the desk-scale
//! setting is USERS=2600 EPOCHS=200 WIDTH=512):
//! USERS, EPOCHS, WIDTH, DROPOUT, LR, BATCH, SEED, PATHS, SEP, GAINS,
//! and the axes MS / NS / SNRS as comma lists.

use onebit_mimo::channel::{AoaGrid, GainModel};
use onebit_mimo::estimator::{Precision, TrainingConfig};
use onebit_mimo::evaluation::{run_sweep, DatasetSpec, EstimatorKind, ExperimentPlan, ScenarioSpec};
use onebit_mimo::quantize::NoiseSpec;

fn env_or<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn env_list<T: std::str::FromStr>(key: &str, default: &str) -> Vec<T>
where
    T::Err: std::fmt::Debug,
{
    std::env::var(key)
        .unwrap_or_else(|_| default.to_string())
        .split(',')
        .map(|s| s.trim().parse().expect("numeric list"))
        .collect()
}

fn main() {
    let users: usize = env_or("USERS", 600);
    let epochs: usize = env_or("EPOCHS", 40);
    let width: usize = env_or("WIDTH", 256);
    let dropout: f64 = env_or("DROPOUT", 0.1);
    let lr: f64 = env_or("LR", 5e-4);
    let batch: usize = env_or("BATCH", 64);
    let seed: u64 = env_or("SEED", 42);
    let paths: usize = env_or("PATHS", 1);
    let sep: f64 = env_or("SEP", 0.999 * std::f64::consts::PI / users as f64);
    let gain_mode: String = env_or("GAINS", "unit_modulus".to_string());
    let antenna_counts: Vec<usize> = env_list("MS", "2,8,32,64");
    let pilot_lengths: Vec<usize> = env_list("NS", "2,5,10");
    let snr_dbs: Vec<f64> = env_list("SNRS", "0,10");

    let plan = ExperimentPlan {
        antenna_counts,
        pilot_lengths,
        snr_points: snr_dbs.iter().map(|&s| NoiseSpec::fixed(s, seed)).collect(),
        dataset: DatasetSpec::Scenario(ScenarioSpec {
            num_users: users,
            num_paths: paths,
            aoa_grid: AoaGrid::Even { min_separation: sep },
            gain_model: match gain_mode.as_str() {
                "unit" => GainModel::Unit,
                "gaussian" => GainModel::ComplexGaussian,
                _ => GainModel::UnitModulus,
            },
            seed,
            element_spacing: 0.5,
        }),
        trainer: TrainingConfig {
            epochs,
            batch_size: batch,
            learning_rate: lr,
            dropout_rate: dropout,
            hidden_width: width,
            seed,
            precision: Precision::F32,
            train_fraction: 0.7,
            ..TrainingConfig::default()
        },
        estimators: vec![EstimatorKind::Mlp],
        rho_db: 0.0,
        pilot_power: 1.0,
        output_dir: None,
    };

    let started = std::time::Instant::now();
    let report = run_sweep(&plan).expect("sweep");
    println!(
        "users={users} epochs={epochs} width={width} dropout={dropout} lr={lr} \
         gains={gain_mode} ({:.1}s total)\n",
        started.elapsed().as_secs_f64()
    );
    println!("{}", report.to_csv());

    for snr in snr_dbs.iter().map(|&s| NoiseSpec::fixed(s, seed).label()) {
        let (Some(lo), Some(hi)) = (
            report.find(2, 10, &snr, "mlp"),
            report.find(64, 10, &snr, "mlp"),
        ) else {
            continue;
        };
        println!(
            "M-trend at N=10, {snr}: nmse(M=2)={:.4} nmse(M=64)={:.4} -> {}",
            lo.test_nmse,
            hi.test_nmse,
            if hi.test_nmse < lo.test_nmse { "ok" } else { "violated" }
        );
        for m in [2usize, 8, 32, 64] {
            let (Some(short), Some(long)) =
                (report.find(m, 2, &snr, "mlp"), report.find(m, 10, &snr, "mlp"))
            else {
                continue;
            };
            println!(
                "N-trend at M={m}, {snr}: nmse(N=2)={:.4} nmse(N=10)={:.4} -> {}",
                short.test_nmse,
                long.test_nmse,
                if long.test_nmse <= short.test_nmse + 0.01 { "ok" } else { "violated" }
            );
        }
    }

    let gap = |m: usize| {
        report
            .find(m, 10, "0dB", "mlp")
            .map(|r| r.upper_bound_db - r.mean_snr_per_antenna_db)
    };
    if let (Some(narrow), Some(wide)) = (gap(2), gap(64)) {
        println!("\nbound gap at N=10, 0dB: {narrow:.3} dB at M=2, {wide:.3} dB at M=64");
    }
}
