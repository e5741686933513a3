//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use onebit_mimo::channel::{
    generate_scenario, AoaGrid, ArrayGeometry, ChannelSet, GainModel, ScenarioConfig,
};
use onebit_mimo::estimator::{
    gradient_check_max_rel_error, nearest_neighbor_estimate, Precision, TrainingConfig,
};
use onebit_mimo::evaluation::{
    run_sweep, DatasetSpec, EstimatorKind, ExperimentPlan, ScenarioSpec, SweepReport,
};
use onebit_mimo::pilot::{
    compute_alpha, corollary1_length, design_pilot, distinguishability_report, min_pilot_length,
};
use onebit_mimo::quantize::{noiseless_signature, NoiseSpec, QuantizedMeasurement};
use onebit_mimo::seed::derive_seed;

fn conclude(criterion: &str, pass: bool, detail: &str) {
    println!(
        "acceptance criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------------------
// 1. Pilot-length formula reproduction
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_pilot_length_formula() {
    let hundred_antennas = min_pilot_length(0.2476).unwrap();
    let two_antennas = min_pilot_length(3.07e-5).unwrap();
    let pass = hundred_antennas == 7 && (two_antennas == 51166 || two_antennas == 51167);
    conclude(
        "1 (pilot-length formula)",
        pass,
        &format!("alpha 0.2476 -> {hundred_antennas}, alpha 3.07e-5 -> {two_antennas}"),
    );
}

// ---------------------------------------------------------------------------
// 2. Closed-form / mapping-angle equivalence
// ---------------------------------------------------------------------------

/// Unit-gain single-path ULA set holding the extremal AoA pair {0, δφ}.
fn extremal_pair_set(m: usize, delta_phi: f64) -> ChannelSet {
    generate_scenario(&ScenarioConfig {
        geometry: ArrayGeometry::ula(m).unwrap(),
        num_users: 2,
        num_paths: 1,
        aoa_grid: AoaGrid::Explicit(vec![0.0, delta_phi]),
        gain_model: GainModel::Unit,
        seed: 0,
    })
    .unwrap()
}

#[test]
fn criterion_2_corollary_oracle_equivalence() {
    let mut checked = 0usize;
    for m in 2..=64usize {
        for k in 1..=20usize {
            let delta_phi = k as f64 * 0.05;
            let set = extremal_pair_set(m, delta_phi);
            let alpha = compute_alpha(&set).unwrap();
            let via_alpha = min_pilot_length(alpha.alpha).unwrap();
            let closed_form = corollary1_length(m, delta_phi).unwrap();
            assert_eq!(
                closed_form, via_alpha,
                "closed form {closed_form} != mapping-angle length {via_alpha} \
                 at M={m}, delta_phi={delta_phi}"
            );
            checked += 1;
        }
    }
    conclude(
        "2 (closed-form equivalence)",
        checked == 63 * 20,
        &format!("exact agreement on all {checked} grid points"),
    );
}

// ---------------------------------------------------------------------------
// 3. Guaranteed-length soundness sweep
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_guaranteed_length_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE97);
    let mut trials = 0usize;
    let mut attempts = 0usize;
    let mut short_failures = 0usize;
    while trials < 100 {
        attempts += 1;
        assert!(attempts < 1000, "trial construction kept rejecting");

        let users = rng.random_range(4..=64);
        let m = rng.random_range(2..=32);
        let paths = if rng.random_range(0.0..1.0) < 0.5 { 1 } else { 3 };
        // Half the trials cluster their users to force long pilots.
        let (lo, width) = if rng.random_range(0.0..1.0) < 0.5 {
            (rng.random_range(0.0..2.0), rng.random_range(0.05..0.4))
        } else {
            (0.0, PI - 1e-9)
        };
        let angles: Vec<f64> = (0..users)
            .map(|_| lo + rng.random_range(0.0..width))
            .collect();
        let set = match generate_scenario(&ScenarioConfig {
            geometry: ArrayGeometry::ula(m).unwrap(),
            num_users: users,
            num_paths: paths,
            aoa_grid: AoaGrid::Explicit(angles),
            gain_model: if paths == 1 {
                GainModel::Unit
            } else {
                GainModel::ComplexGaussian
            },
            seed: derive_seed(0xACCE97, attempts as u64),
        }) {
            Ok(set) => set,
            Err(_) => continue,
        };

        let alpha = compute_alpha(&set).unwrap();
        if alpha.is_degenerate() {
            continue;
        }
        let needed = min_pilot_length(alpha.alpha).unwrap();
        if needed > 4000 {
            continue;
        }

        let full = distinguishability_report(&set, &design_pilot(needed, 1.0).unwrap()).unwrap();
        assert!(
            full.all_distinguishable(),
            "trial {trials}: designed pilot of guaranteed length {needed} left \
             {} of {} pairs merged (alpha {})",
            full.pairs_total - full.pairs_distinguishable,
            full.pairs_total,
            alpha.alpha
        );

        let short = needed.div_ceil(4).max(1);
        if short < needed {
            let report =
                distinguishability_report(&set, &design_pilot(short, 1.0).unwrap()).unwrap();
            if !report.all_distinguishable() {
                short_failures += 1;
            }
        }
        trials += 1;
    }
    conclude(
        "3 (guaranteed-length soundness)",
        short_failures >= 1,
        &format!(
            "100 trials all fully distinguishable at the guaranteed length; \
             quarter-length pilots failed {short_failures} times (non-vacuous)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. More antennas need fewer pilots
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_more_antennas_fewer_pilots() {
    let mut lengths = Vec::new();
    for m in 2..=64usize {
        let set = generate_scenario(&ScenarioConfig {
            geometry: ArrayGeometry::ula(m).unwrap(),
            num_users: 8,
            num_paths: 1,
            aoa_grid: AoaGrid::Even {
                min_separation: 0.1,
            },
            gain_model: GainModel::Unit,
            seed: 0,
        })
        .unwrap();
        let alpha = compute_alpha(&set).unwrap();
        lengths.push(min_pilot_length(alpha.alpha).unwrap());
    }
    let non_increasing = lengths.windows(2).all(|w| w[1] <= w[0]);
    let strictly_somewhere = lengths.windows(2).any(|w| w[1] < w[0]);
    conclude(
        "4 (more antennas, fewer pilots)",
        non_increasing && strictly_somewhere,
        &format!(
            "guaranteed length falls from {} at M=2 to {} at M=64",
            lengths[0],
            lengths[lengths.len() - 1]
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Gradient correctness
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_gradient_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x96AD);
    let mut worst_overall = 0.0f64;
    for net in 0..10u64 {
        let sizes = [
            rng.random_range(2..=8),
            rng.random_range(2..=32),
            rng.random_range(2..=32),
            rng.random_range(2..=6),
        ];
        let batch = rng.random_range(1..=4);
        let worst = gradient_check_max_rel_error(sizes, batch, derive_seed(0x96AD, net));
        worst_overall = worst_overall.max(worst);
        assert!(
            worst < 1e-4,
            "network {net} ({sizes:?}): max relative gradient error {worst}"
        );
    }
    conclude(
        "5 (gradient correctness)",
        worst_overall < 1e-4,
        &format!("10 networks, every weight and bias checked; worst relative error {worst_overall:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// 6. Retrieval oracle reaches exact zero
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_oracle_end_to_end_zero() {
    let set = generate_scenario(&ScenarioConfig {
        geometry: ArrayGeometry::ula(6).unwrap(),
        num_users: 24,
        num_paths: 1,
        aoa_grid: AoaGrid::Even {
            min_separation: 0.11,
        },
        gain_model: GainModel::Unit,
        seed: 5,
    })
    .unwrap();
    let alpha = compute_alpha(&set).unwrap();
    let pilot = design_pilot(min_pilot_length(alpha.alpha).unwrap(), 1.0).unwrap();

    let store: Vec<(QuantizedMeasurement, onebit_mimo::channel::ChannelVector)> = set
        .channels()
        .iter()
        .map(|h| (noiseless_signature(h, &pilot).unwrap(), h.clone()))
        .collect();

    let mut nmse_sum = 0.0f64;
    for (signature, truth) in &store {
        let estimate = nearest_neighbor_estimate(&store, signature).unwrap();
        assert_eq!(estimate.entries(), truth.entries(), "retrieval must be exact");
        let err: f64 = truth
            .entries()
            .iter()
            .zip(estimate.entries())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        nmse_sum += err / truth.energy();
    }
    conclude(
        "6 (retrieval oracle zero)",
        nmse_sum == 0.0,
        &format!(
            "noiseless pipeline with N={} pilot retrieves all {} channels exactly",
            pilot.len(),
            set.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// 7-9. Desk-scale sweep: trends, bound, determinism
// ---------------------------------------------------------------------------

fn desk_plan() -> ExperimentPlan {
    ExperimentPlan {
        antenna_counts: vec![2, 8, 32, 64],
        pilot_lengths: vec![2, 5, 10],
        snr_points: vec![NoiseSpec::fixed(0.0, 42), NoiseSpec::fixed(10.0, 42)],
        dataset: DatasetSpec::Scenario(ScenarioSpec {
            num_users: 2600,
            num_paths: 1,
            aoa_grid: AoaGrid::Even {
                min_separation: 0.999 * PI / 2600.0,
            },
            gain_model: GainModel::UnitModulus,
            seed: 42,
            element_spacing: 0.5,
        }),
        trainer: TrainingConfig {
            epochs: 200,
            batch_size: 64,
            learning_rate: 5e-4,
            dropout_rate: 0.1,
            hidden_width: 512,
            seed: 42,
            precision: Precision::F32,
            train_fraction: 0.7,
            ..TrainingConfig::default()
        },
        estimators: vec![EstimatorKind::Mlp],
        rho_db: 0.0,
        pilot_power: 1.0,
        output_dir: None,
    }
}

static DESK_SWEEP: OnceLock<SweepReport> = OnceLock::new();

fn desk_sweep() -> &'static SweepReport {
    DESK_SWEEP.get_or_init(|| run_sweep(&desk_plan()).expect("desk-scale sweep runs"))
}

fn cell_nmse(report: &SweepReport, m: usize, n: usize, snr: &str) -> f64 {
    let r = report
        .find(m, n, snr, "mlp")
        .unwrap_or_else(|| panic!("missing cell M={m} N={n} {snr}"));
    assert!(r.is_ok(), "cell M={m} N={n} {snr} failed: {}", r.status);
    r.test_nmse
}

#[test]
fn criterion_7_desk_scale_trends() {
    let report = desk_sweep();
    let mut detail = Vec::new();
    let mut pass = true;

    for snr in ["0dB", "10dB"] {
        for n in [2usize, 5, 10] {
            let lo = cell_nmse(report, 2, n, snr);
            let hi = cell_nmse(report, 64, n, snr);
            if !(hi < lo) {
                pass = false;
                detail.push(format!("M-trend broken at N={n} {snr}: {hi:.4} !< {lo:.4}"));
            }
        }
        for m in [2usize, 8, 32, 64] {
            let short = cell_nmse(report, m, 2, snr);
            let long = cell_nmse(report, m, 10, snr);
            if !(long <= short + 0.01) {
                pass = false;
                detail.push(format!(
                    "N-trend broken at M={m} {snr}: {long:.4} > {short:.4} + 0.01"
                ));
            }
        }
    }
    let summary = if pass {
        format!(
            "NMSE falls from M=2 to M=64 in all 6 series and never grows from \
             N=2 to N=10 beyond slack; e.g. 0dB N=10: {:.3} -> {:.3}",
            cell_nmse(report, 2, 10, "0dB"),
            cell_nmse(report, 64, 10, "0dB")
        )
    } else {
        detail.join("; ")
    };
    conclude("7 (desk-scale NMSE trends)", pass, &summary);
}

#[test]
fn criterion_8_per_antenna_snr_bound_and_gap() {
    let report = desk_sweep();
    let mut pass = true;
    let mut detail = Vec::new();

    for r in report.records.iter().filter(|r| r.is_ok()) {
        // dB-domain slack equivalent to 1e-12 relative in linear units
        if r.mean_snr_per_antenna_db > r.upper_bound_db + 5e-12 {
            pass = false;
            detail.push(format!(
                "bound violated at M={} N={} {}: {} > {}",
                r.m, r.n, r.snr, r.mean_snr_per_antenna_db, r.upper_bound_db
            ));
        }
    }

    let gap = |m: usize| {
        let r = report.find(m, 10, "0dB", "mlp").expect("cell exists");
        r.upper_bound_db - r.mean_snr_per_antenna_db
    };
    let gap_wide = gap(64);
    let gap_narrow = gap(2);
    if !(gap_wide < gap_narrow) {
        pass = false;
        detail.push(format!(
            "gap did not shrink: M=64 gap {gap_wide:.3} dB !< M=2 gap {gap_narrow:.3} dB"
        ));
    }
    let summary = if pass {
        format!(
            "every cell respects the Cauchy-Schwarz bound; bound gap shrinks \
             from {gap_narrow:.3} dB (M=2) to {gap_wide:.3} dB (M=64) at N=10, 0dB"
        )
    } else {
        detail.join("; ")
    };
    conclude("8 (per-antenna SNR bound)", pass, &summary);
}

#[test]
fn criterion_9_sweep_determinism() {
    let first = desk_sweep();
    let second = run_sweep(&desk_plan()).expect("repeat sweep runs");
    let pass = first.to_csv() == second.to_csv()
        && first.fig2_csv() == second.fig2_csv()
        && first.fig3_csv() == second.fig3_csv();
    conclude(
        "9 (sweep determinism)",
        pass,
        "re-running the plan reproduces the report and plot data byte-identically",
    );
}
