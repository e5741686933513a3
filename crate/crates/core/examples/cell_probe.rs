//! Train one (M, N, SNR) cell and print the per-epoch loss curve plus the
//! final beamforming gap. Useful for tuning a sweep configuration.
//!
//! Env knobs: M, N, SNR_DB, USERS, EPOCHS, WIDTH, DROPOUT, LR, BATCH, SEED,
//! PATHS, GAINS (unit | gaussian | unit_modulus).

use onebit_mimo::channel::{generate_scenario, AoaGrid, ArrayGeometry, GainModel, ScenarioConfig};
use onebit_mimo::estimator::{train, MlpEstimator, Precision, SupervisedDataset, TrainingConfig};
use onebit_mimo::evaluation::{from_db, per_antenna_snr, to_db, upper_bound_snr};
use onebit_mimo::quantize::{simulate_measurement, NoiseSpec, QuantizedMeasurement};
use onebit_mimo::seed::derive_seed;

fn env_or<T: std::str::FromStr>(key: &str, default: T) -> T {
    std::env::var(key)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let m: usize = env_or("M", 64);
    let n: usize = env_or("N", 10);
    let snr_db: f64 = env_or("SNR_DB", 0.0);
    let users: usize = env_or("USERS", 1200);
    let epochs: usize = env_or("EPOCHS", 40);
    let width: usize = env_or("WIDTH", 512);
    let dropout: f64 = env_or("DROPOUT", 0.0);
    let lr: f64 = env_or("LR", 1e-3);
    let batch: usize = env_or("BATCH", 128);
    let seed: u64 = env_or("SEED", 42);
    let paths: usize = env_or("PATHS", 1);
    let gain_mode: String = env_or("GAINS", "unit".to_string());

    let scenario = ScenarioConfig {
        geometry: ArrayGeometry::ula(m).unwrap(),
        num_users: users,
        num_paths: paths,
        aoa_grid: AoaGrid::Even {
            min_separation: 0.999 * std::f64::consts::PI / users as f64,
        },
        gain_model: match gain_mode.as_str() {
            "unit" => GainModel::Unit,
            "gaussian" => GainModel::ComplexGaussian,
            _ => GainModel::UnitModulus,
        },
        seed,
    };
    let set = generate_scenario(&scenario).unwrap();
    let pilot = onebit_mimo::pilot::design_pilot(n, 1.0).unwrap();
    let spec = NoiseSpec::fixed(snr_db, seed);
    let model = spec.bind(&set, pilot.power()).unwrap();
    let measurements: Vec<QuantizedMeasurement> = set
        .channels()
        .iter()
        .enumerate()
        .map(|(u, h)| {
            simulate_measurement(h, &pilot, &model.with_seed(derive_seed(seed, u as u64))).unwrap()
        })
        .collect();
    let dataset = SupervisedDataset::from_pairs(&measurements, set.channels(), 0.7, seed).unwrap();

    let config = TrainingConfig {
        epochs,
        batch_size: batch,
        learning_rate: lr,
        dropout_rate: dropout,
        hidden_width: width,
        seed,
        precision: Precision::F32,
        train_fraction: 0.7,
        ..TrainingConfig::default()
    };
    let mut mlp =
        MlpEstimator::new(m, n, width, dropout, Precision::F32, derive_seed(seed, 2)).unwrap();
    let started = std::time::Instant::now();
    let history = train(&mut mlp, &dataset, &config).unwrap();
    for e in &history.epochs {
        if e.epoch % 5 == 0 || e.epoch + 1 == epochs {
            println!(
                "epoch {:3}  train {:.4}  test {:.4}",
                e.epoch, e.train_nmse, e.test_nmse
            );
        }
    }
    let rho = from_db(0.0);
    let test_meas: Vec<QuantizedMeasurement> = dataset
        .test_indices()
        .iter()
        .map(|&i| measurements[i].clone())
        .collect();
    let estimates = mlp.predict_channels(&test_meas).unwrap();
    let mut snr_sum = 0.0;
    let mut bound_sum = 0.0;
    for (&i, est) in dataset.test_indices().iter().zip(&estimates) {
        let truth = &set.channels()[i];
        snr_sum += per_antenna_snr(truth, est, rho).unwrap();
        bound_sum += upper_bound_snr(truth, rho).unwrap();
    }
    let count = dataset.test_indices().len() as f64;
    let gap = to_db(bound_sum / count) - to_db(snr_sum / count);
    println!(
        "M={m} N={n} snr={snr_db}dB users={users} width={width} lr={lr} dropout={dropout} gains={gain_mode}: \
         final test NMSE {:.4}, SNR gap {:.3} dB ({:.1}s)",
        history.final_test_nmse().unwrap(),
        gap,
        started.elapsed().as_secs_f64()
    );
}
