//! Subcommand implementations.
//!
//! Every command drops its artifacts under the configured output directory
//! together with `run_manifest.json` (tool version, command, config
//! snapshot), so a run is reproducible from the manifest alone.

use std::fs;
use std::path::PathBuf;

use serde_json::json;

use onebit_mimo::channel::generate_scenario;
use onebit_mimo::dataset::{load_channels, load_measurements, save_channels, save_measurements};
use onebit_mimo::estimator::{
    train, MlpEstimator, SupervisedDataset, TrainingConfig,
};
use onebit_mimo::evaluation::{
    from_db, nmse_metric, per_antenna_snr, run_sweep, to_db, upper_bound_snr, DatasetSpec,
    ExperimentPlan, ScenarioSpec,
};
use onebit_mimo::pilot::{
    compute_alpha, corollary1_length, design_pilot, distinguishability_report, min_pilot_length,
};
use onebit_mimo::quantize::{simulate_measurement, NoiseSpec, QuantizedMeasurement};
use onebit_mimo::seed::derive_seed;
use onebit_mimo::{Error, Result};

use crate::config::{WorkbenchConfig, STREAM_NOISE, STREAM_SNR_POINT_BASE};

fn out_path(config: &WorkbenchConfig, name: &str) -> PathBuf {
    config.output.dir.join(name)
}

fn ensure_output_dir(config: &WorkbenchConfig) -> Result<()> {
    fs::create_dir_all(&config.output.dir)?;
    Ok(())
}

fn write_run_manifest(config: &WorkbenchConfig, command: &str) -> Result<()> {
    let manifest = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "master_seed": config.master_seed,
        "config": serde_json::to_value(config)?,
    });
    fs::write(
        out_path(config, "run_manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Simulate one measurement per user with seeds split from the noise spec.
fn simulate_dataset(
    set: &onebit_mimo::channel::ChannelSet,
    pilot: &onebit_mimo::pilot::PilotSequence,
    noise: &NoiseSpec,
) -> Result<Vec<QuantizedMeasurement>> {
    let model = noise.bind(set, pilot.power())?;
    set.channels()
        .iter()
        .enumerate()
        .map(|(u, h)| simulate_measurement(h, pilot, &model.with_seed(noise.for_user(u).seed)))
        .collect()
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

pub fn cmd_generate(config: &WorkbenchConfig) -> Result<()> {
    let scenario = config.scenario()?.to_config(config.master_seed)?;
    let pilot_cfg = config.pilot()?;
    let pilot = design_pilot(pilot_cfg.length, pilot_cfg.power)?;
    let noise = NoiseSpec {
        mode: config.noise_mode(),
        seed: derive_seed(config.master_seed, STREAM_NOISE),
    };
    noise.validate()?;

    let set = generate_scenario(&scenario)?;
    let measurements = simulate_dataset(&set, &pilot, &noise)?;

    ensure_output_dir(config)?;
    save_channels(&set, &out_path(config, "channels.json"))?;
    save_measurements(&measurements, &pilot, &noise, &out_path(config, "measurements.json"))?;
    write_run_manifest(config, "generate")?;

    println!(
        "generated {} channels: M={}, L={}, N={}, noise={}",
        set.len(),
        set.geometry().num_antennas(),
        set.num_paths(),
        pilot.len(),
        noise.label()
    );
    if set.len() >= 2 {
        let alpha = compute_alpha(&set)?;
        if alpha.is_degenerate() {
            println!(
                "alpha = 0 (degenerate pair {:?}): no pilot length separates this set",
                alpha.critical_pair
            );
        } else {
            println!(
                "alpha = {:.6} rad, guaranteed pilot length {}",
                alpha.alpha,
                min_pilot_length(alpha.alpha)?
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

pub fn cmd_analyze(config: &WorkbenchConfig) -> Result<()> {
    let set = load_channels(&out_path(config, "channels.json"))?;
    let power = config.pilot.as_ref().map(|p| p.power).unwrap_or(1.0);
    let (pilot_lengths, pair_cap) = config
        .analysis
        .as_ref()
        .map(|a| (a.pilot_lengths.clone(), a.max_reported_pairs))
        .unwrap_or((Vec::new(), onebit_mimo::pilot::DEFAULT_MAX_REPORTED_PAIRS));

    let alpha = compute_alpha(&set)?;
    let min_len = if alpha.is_degenerate() {
        None
    } else {
        Some(min_pilot_length(alpha.alpha)?)
    };
    let m = set.geometry().num_antennas();
    let corollary = match (set.num_paths(), set.min_aoa_separation()) {
        (1, Some(sep)) if m >= 2 => Some(corollary1_length(m, sep)?),
        _ => None,
    };

    println!(
        "alpha = {:.6} rad{}",
        alpha.alpha,
        if alpha.is_degenerate() {
            format!(" (degenerate pair {:?})", alpha.critical_pair)
        } else {
            String::new()
        }
    );
    if let Some(n) = min_len {
        println!("guaranteed pilot length: {n}");
    }
    if let Some(n) = corollary {
        println!("closed-form single-path length: {n}");
    }

    let mut reports = Vec::new();
    for &n in &pilot_lengths {
        let report = distinguishability_report(&set, &design_pilot(n, power)?)?;
        println!(
            "N={n}: {}/{} pairs distinguishable, {:.1}% of channels uniquely identified",
            report.pairs_distinguishable,
            report.pairs_total,
            100.0 * report.channels_uniquely_identified_fraction
        );
        reports.push(report.to_json(pair_cap));
    }

    ensure_output_dir(config)?;
    let doc = json!({
        "alpha": alpha.alpha,
        "critical_pair": alpha.critical_pair,
        "degenerate": alpha.is_degenerate(),
        "min_pilot_length": min_len,
        "corollary1_length": corollary,
        "distinguishability": reports,
    });
    fs::write(
        out_path(config, "analysis.json"),
        serde_json::to_string_pretty(&doc)?,
    )?;
    write_run_manifest(config, "analyze")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

fn load_training_inputs(
    config: &WorkbenchConfig,
) -> Result<(
    onebit_mimo::channel::ChannelSet,
    Vec<QuantizedMeasurement>,
    TrainingConfig,
    SupervisedDataset,
)> {
    let set = load_channels(&out_path(config, "channels.json"))?;
    let (measurements, _pilot, _noise) = load_measurements(&out_path(config, "measurements.json"))?;
    if measurements.len() != set.len() {
        return Err(Error::Domain(format!(
            "{} measurements for {} channels",
            measurements.len(),
            set.len()
        )));
    }
    let trainer = config.training();
    trainer.validate()?;
    let dataset = SupervisedDataset::from_pairs(
        &measurements,
        set.channels(),
        trainer.train_fraction,
        trainer.seed,
    )?;
    Ok((set, measurements, trainer, dataset))
}

pub fn cmd_train(config: &WorkbenchConfig) -> Result<()> {
    let (set, measurements, trainer, dataset) = load_training_inputs(config)?;
    let (m, n) = (
        set.geometry().num_antennas(),
        measurements[0].pilot_len(),
    );
    let mut model = MlpEstimator::new(
        m,
        n,
        trainer.hidden_width,
        trainer.dropout_rate,
        trainer.precision,
        derive_seed(trainer.seed, 2),
    )?;
    let history = train(&mut model, &dataset, &trainer)?;

    ensure_output_dir(config)?;
    model.save(&out_path(config, "model.json"))?;
    history.write_csv(&out_path(config, "loss_history.csv"))?;
    write_run_manifest(config, "train")?;

    println!(
        "trained {} epochs on {} samples (batch {}, lr {}, width {})",
        trainer.epochs,
        dataset.train_indices().len(),
        trainer.batch_size,
        trainer.learning_rate,
        trainer.hidden_width
    );
    println!(
        "final train NMSE {:.6}, test NMSE {:.6}",
        history.final_train_nmse().unwrap_or(f64::NAN),
        history.final_test_nmse().unwrap_or(f64::NAN)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

pub fn cmd_eval(config: &WorkbenchConfig) -> Result<()> {
    let (set, measurements, _trainer, dataset) = load_training_inputs(config)?;
    let model = MlpEstimator::load(&out_path(config, "model.json"))?;

    // No test split means the dataset was a memorization run; evaluate on
    // the training rows then.
    let (eval_idx, split_name) = if dataset.test_indices().is_empty() {
        (dataset.train_indices().to_vec(), "train")
    } else {
        (dataset.test_indices().to_vec(), "test")
    };
    let ys: Vec<QuantizedMeasurement> = eval_idx.iter().map(|&i| measurements[i].clone()).collect();
    let estimates = model.predict_channels(&ys)?;

    let rho = from_db(config.eval.as_ref().map(|e| e.rho_db).unwrap_or(0.0));
    let mut nmse_sum = 0.0;
    let mut snr_sum = 0.0;
    let mut bound_sum = 0.0;
    let mut beamformable = 0usize;
    for (&i, estimate) in eval_idx.iter().zip(&estimates) {
        let truth = &set.channels()[i];
        nmse_sum += nmse_metric(truth, estimate)?;
        bound_sum += upper_bound_snr(truth, rho)?;
        if !estimate.is_zero() {
            snr_sum += per_antenna_snr(truth, estimate, rho)?;
            beamformable += 1;
        }
    }
    let count = eval_idx.len() as f64;
    let nmse = nmse_sum / count;
    let bound_db = to_db(bound_sum / count);
    let snr_db = if beamformable > 0 {
        Some(to_db(snr_sum / beamformable as f64))
    } else {
        None
    };

    println!("evaluated {} {} samples", eval_idx.len(), split_name);
    println!("test NMSE {nmse:.6}");
    match snr_db {
        Some(s) => println!("per-antenna SNR {s:.3} dB (upper bound {bound_db:.3} dB)"),
        None => println!(
            "per-antenna SNR undefined (all estimates zero); upper bound {bound_db:.3} dB"
        ),
    }

    ensure_output_dir(config)?;
    let doc = json!({
        "split": split_name,
        "eval_size": eval_idx.len(),
        "test_nmse": nmse,
        "mean_snr_per_antenna_db": snr_db,
        "upper_bound_db": bound_db,
        "rho_db": config.eval.as_ref().map(|e| e.rho_db).unwrap_or(0.0),
    });
    fs::write(
        out_path(config, "eval.json"),
        serde_json::to_string_pretty(&doc)?,
    )?;
    write_run_manifest(config, "eval")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

pub fn cmd_sweep(config: &WorkbenchConfig) -> Result<()> {
    let sweep = config.sweep()?;
    let pilot_power = config.pilot.as_ref().map(|p| p.power).unwrap_or(1.0);
    let dataset = match &sweep.channels {
        Some(path) => DatasetSpec::Files {
            channels: path.clone(),
        },
        None => {
            let s = config.scenario()?;
            DatasetSpec::Scenario(ScenarioSpec {
                num_users: s.num_users,
                num_paths: s.num_paths,
                aoa_grid: s.aoa_grid.clone(),
                gain_model: s.gain_model,
                seed: derive_seed(config.master_seed, crate::config::STREAM_SCENARIO),
                element_spacing: s.element_spacing,
            })
        }
    };
    let plan = ExperimentPlan {
        antenna_counts: sweep.antenna_counts.clone(),
        pilot_lengths: sweep.pilot_lengths.clone(),
        snr_points: sweep
            .snr_points
            .iter()
            .enumerate()
            .map(|(i, &mode)| NoiseSpec {
                mode,
                seed: derive_seed(config.master_seed, STREAM_SNR_POINT_BASE + i as u64),
            })
            .collect(),
        dataset,
        trainer: config.training(),
        estimators: sweep.estimators.clone(),
        rho_db: sweep.rho_db,
        pilot_power,
        output_dir: Some(config.output.dir.clone()),
    };

    let report = run_sweep(&plan)?;

    ensure_output_dir(config)?;
    report.write_csv(&out_path(config, "report.csv"))?;
    fs::write(out_path(config, "report.json"), report.to_json()?)?;
    fs::write(out_path(config, "fig2.csv"), report.fig2_csv())?;
    fs::write(out_path(config, "fig3.csv"), report.fig3_csv())?;
    write_run_manifest(config, "sweep")?;

    let failed = report.records.iter().filter(|r| !r.is_ok()).count();
    println!(
        "swept {} cells ({} failed); reports under {}",
        report.records.len(),
        failed,
        config.output.dir.display()
    );
    for r in report.records.iter().filter(|r| !r.is_ok()) {
        println!("  failed M={} N={} {}: {}", r.m, r.n, r.snr, r.status);
    }
    Ok(())
}

