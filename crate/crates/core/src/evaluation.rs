//! Figures of merit and the (M, N, SNR) sweep driver.
//!
//! Two metrics: the channel NMSE `‖h − ĥ‖²/‖h‖²` and the downlink
//! per-antenna SNR under conjugate beamforming, `(ρ/M)·|ĥᴴh|²/‖ĥ‖²`, whose
//! Cauchy–Schwarz ceiling `ρ‖h‖²/M` is attained with exact channel
//! knowledge.
//!
//! A sweep evaluates every `(M, N, SNR, estimator)` cell on a shared user
//! population: channels are re-synthesized per antenna count from the same
//! scenario seed (file-backed sets are truncated instead), the pilot follows
//! the even-sampling construction at the requested length, measurements get
//! per-user derived noise seeds, and the train/test split is identical in
//! every cell. The network keeps one structure across cells; only its input
//! and output widths follow (M, N). Cells run independently (in parallel
//! when a rayon pool is available) and the report is keyed and sorted by
//! cell coordinates, so a sweep is reproducible byte-for-byte from its plan.
//! Failed cells are annotated and skipped, not fatal.
//!
//! Dataset-level metrics average per-user values over the test split; plans
//! with `train_fraction = 1` have no test split and report train-split
//! metrics instead (useful for retrieval-oracle checks). Per-antenna SNR is
//! averaged in linear units, then converted to dB. Cell wall times appear
//! only in the JSON report; the CSV is byte-stable across reruns.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    generate_scenario, AoaGrid, ArrayGeometry, ChannelSet, ChannelVector, GainModel,
    ScenarioConfig,
};
use crate::dataset::load_channels;
use crate::estimator::{
    nearest_neighbor_estimate, train, MlpEstimator, SupervisedDataset, TrainingConfig,
};
use crate::pilot::design_pilot;
use crate::quantize::{simulate_measurement, NoiseSpec, QuantizedMeasurement};
use crate::seed::derive_seed;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `‖h − ĥ‖² / ‖h‖²` for one channel.
pub fn nmse_metric(truth: &ChannelVector, estimate: &ChannelVector) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::domain(format!(
            "channel lengths differ: {} vs {}",
            truth.len(),
            estimate.len()
        )));
    }
    let norm = truth.energy();
    if norm == 0.0 {
        return Err(Error::domain("NMSE is undefined for a zero true channel"));
    }
    let err: f64 = truth
        .entries()
        .iter()
        .zip(estimate.entries())
        .map(|(h, e)| (h - e).norm_sqr())
        .sum();
    Ok(err / norm)
}

/// Downlink receive SNR per transmit antenna under the conjugate beamformer
/// built from `estimate`: `(ρ/M)·|ĥᴴh|²/‖ĥ‖²` with `ρ` linear.
pub fn per_antenna_snr(truth: &ChannelVector, estimate: &ChannelVector, rho: f64) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::domain(format!(
            "channel lengths differ: {} vs {}",
            truth.len(),
            estimate.len()
        )));
    }
    let est_norm = estimate.energy();
    if est_norm == 0.0 {
        return Err(Error::domain(
            "beamformer is undefined for a zero channel estimate",
        ));
    }
    let inner: Complex64 = estimate
        .entries()
        .iter()
        .zip(truth.entries())
        .map(|(e, h)| e.conj() * h)
        .sum();
    let m = truth.len() as f64;
    Ok(rho / m * inner.norm_sqr() / est_norm)
}

/// Per-antenna SNR with exact channel knowledge: `ρ‖h‖²/M`.
pub fn upper_bound_snr(truth: &ChannelVector, rho: f64) -> Result<f64> {
    if truth.is_empty() || truth.energy() == 0.0 {
        return Err(Error::domain("bound is undefined for a zero channel"));
    }
    Ok(rho * truth.energy() / truth.len() as f64)
}

// ---------------------------------------------------------------------------
// Experiment plan
// ---------------------------------------------------------------------------

/// Scenario parameters without an antenna count; each sweep cell synthesizes
/// the same users at its own M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub num_users: usize,
    pub num_paths: usize,
    pub aoa_grid: AoaGrid,
    pub gain_model: GainModel,
    pub seed: u64,
    #[serde(default = "default_spacing")]
    pub element_spacing: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl ScenarioSpec {
    pub fn at_antennas(&self, m: usize) -> Result<ScenarioConfig> {
        Ok(ScenarioConfig {
            geometry: ArrayGeometry::new(m, self.element_spacing)?,
            num_users: self.num_users,
            num_paths: self.num_paths,
            aoa_grid: self.aoa_grid.clone(),
            gain_model: self.gain_model,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSpec {
    Scenario(ScenarioSpec),
    /// Channel dataset manifest on disk; sliced to each cell's M.
    Files { channels: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Mlp,
    NearestNeighbor,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Mlp => "mlp",
            EstimatorKind::NearestNeighbor => "nearest_neighbor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub antenna_counts: Vec<usize>,
    pub pilot_lengths: Vec<usize>,
    pub snr_points: Vec<NoiseSpec>,
    pub dataset: DatasetSpec,
    pub trainer: TrainingConfig,
    pub estimators: Vec<EstimatorKind>,
    /// ρ of the per-antenna SNR metric, in dB.
    pub rho_db: f64,
    pub pilot_power: f64,
    /// Where the CLI drops reports; unused by [`run_sweep`] itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.antenna_counts.is_empty()
            || self.pilot_lengths.is_empty()
            || self.snr_points.is_empty()
        {
            return Err(Error::config("sweep axes must be non-empty"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("sweep needs at least one estimator"));
        }
        if !(self.pilot_power > 0.0) {
            return Err(Error::config(format!(
                "pilot power must be positive, got {}",
                self.pilot_power
            )));
        }
        for spec in &self.snr_points {
            spec.validate()?;
        }
        self.trainer.validate()
    }
}

// ---------------------------------------------------------------------------
// Sweep report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub m: usize,
    pub n: usize,
    pub snr: String,
    pub estimator: String,
    pub test_nmse: f64,
    pub mean_snr_per_antenna_db: f64,
    pub upper_bound_db: f64,
    pub train_size: usize,
    pub test_size: usize,
    /// "ok" or the failure reason; metrics are NaN on failure.
    pub status: String,
    /// Seconds spent on the cell; excluded from the deterministic CSV.
    pub wall_time_s: f64,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepReport {
    pub records: Vec<SweepRecord>,
}

impl SweepReport {
    pub fn find(&self, m: usize, n: usize, snr: &str, estimator: &str) -> Option<&SweepRecord> {
        self.records
            .iter()
            .find(|r| r.m == m && r.n == n && r.snr == snr && r.estimator == estimator)
    }

    /// Deterministic per-cell CSV (wall times omitted so reruns are
    /// byte-identical).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "m,n,snr,estimator,test_nmse,mean_snr_per_antenna_db,upper_bound_db,\
             train_size,test_size,status\n",
        );
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.m,
                r.n,
                r.snr,
                r.estimator,
                r.test_nmse,
                r.mean_snr_per_antenna_db,
                r.upper_bound_db,
                r.train_size,
                r.test_size,
                r.status
            ));
        }
        out
    }

    /// Full records, wall times included.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plot data: NMSE versus M, one column per (estimator, N, SNR) series.
    pub fn fig2_csv(&self) -> String {
        self.pivot_csv(|r| r.test_nmse, false)
    }

    /// Plot data: per-antenna SNR versus M, one column per series plus the
    /// perfect-knowledge upper bound.
    pub fn fig3_csv(&self) -> String {
        self.pivot_csv(|r| r.mean_snr_per_antenna_db, true)
    }

    fn pivot_csv(&self, value: impl Fn(&SweepRecord) -> f64, with_bound: bool) -> String {
        let ok: Vec<&SweepRecord> = self.records.iter().filter(|r| r.is_ok()).collect();
        let mut ms: Vec<usize> = ok.iter().map(|r| r.m).collect();
        ms.sort_unstable();
        ms.dedup();
        let mut series: Vec<(String, String, usize)> = ok
            .iter()
            .map(|r| (r.estimator.clone(), r.snr.clone(), r.n))
            .collect();
        series.sort();
        series.dedup();

        let mut out = String::from("m");
        if with_bound {
            out.push_str(",upper_bound_db");
        }
        for (est, snr, n) in &series {
            out.push_str(&format!(",{est}_N{n}_{snr}"));
        }
        out.push('\n');
        for &m in &ms {
            out.push_str(&m.to_string());
            if with_bound {
                let bound = ok
                    .iter()
                    .find(|r| r.m == m)
                    .map(|r| r.upper_bound_db)
                    .unwrap_or(f64::NAN);
                out.push_str(&format!(",{bound}"));
            }
            for (est, snr, n) in &series {
                match ok
                    .iter()
                    .find(|r| r.m == m && r.n == *n && &r.snr == snr && &r.estimator == est)
                {
                    Some(r) => out.push_str(&format!(",{}", value(r))),
                    None => out.push_str(","),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Sweep execution
// ---------------------------------------------------------------------------

struct Cell {
    mi: usize,
    ni: usize,
    si: usize,
    m: usize,
    n: usize,
    snr: NoiseSpec,
}

/// Run every cell of the plan. Deterministic given the plan; cells run in
/// parallel and are reassembled in plan order.
pub fn run_sweep(plan: &ExperimentPlan) -> Result<SweepReport> {
    plan.validate()?;

    // File-backed channels are loaded once and sliced per cell.
    let file_set = match &plan.dataset {
        DatasetSpec::Files { channels } => Some(load_channels(channels)?),
        DatasetSpec::Scenario(_) => None,
    };

    let mut cells = Vec::new();
    for (mi, &m) in plan.antenna_counts.iter().enumerate() {
        for (ni, &n) in plan.pilot_lengths.iter().enumerate() {
            for (si, &snr) in plan.snr_points.iter().enumerate() {
                cells.push(Cell {
                    mi,
                    ni,
                    si,
                    m,
                    n,
                    snr,
                });
            }
        }
    }

    let n_axis = plan.pilot_lengths.len();
    let s_axis = plan.snr_points.len();
    let mut keyed: Vec<((usize, usize, usize, usize), SweepRecord)> = cells
        .par_iter()
        .flat_map_iter(|cell| {
            let cell_id = ((cell.mi * n_axis + cell.ni) * s_axis + cell.si) as u64;
            let records = run_cell(plan, cell, cell_id, file_set.as_ref());
            records
                .into_iter()
                .enumerate()
                .map(move |(ei, r)| ((cell.mi, cell.ni, cell.si, ei), r))
        })
        .collect();
    keyed.sort_by_key(|(k, _)| *k);
    Ok(SweepReport {
        records: keyed.into_iter().map(|(_, r)| r).collect(),
    })
}

fn run_cell(
    plan: &ExperimentPlan,
    cell: &Cell,
    cell_id: u64,
    file_set: Option<&ChannelSet>,
) -> Vec<SweepRecord> {
    let base = |est: &EstimatorKind| SweepRecord {
        m: cell.m,
        n: cell.n,
        snr: cell.snr.label(),
        estimator: est.name().to_string(),
        test_nmse: f64::NAN,
        mean_snr_per_antenna_db: f64::NAN,
        upper_bound_db: f64::NAN,
        train_size: 0,
        test_size: 0,
        status: "ok".to_string(),
        wall_time_s: 0.0,
    };

    match run_cell_inner(plan, cell, cell_id, file_set) {
        Ok(records) => records,
        Err(e) => plan
            .estimators
            .iter()
            .map(|est| {
                let mut r = base(est);
                r.status = e.to_string();
                r
            })
            .collect(),
    }
}

fn run_cell_inner(
    plan: &ExperimentPlan,
    cell: &Cell,
    cell_id: u64,
    file_set: Option<&ChannelSet>,
) -> Result<Vec<SweepRecord>> {
    let set = match (&plan.dataset, file_set) {
        (DatasetSpec::Scenario(spec), _) => generate_scenario(&spec.at_antennas(cell.m)?)?,
        (DatasetSpec::Files { .. }, Some(full)) => slice_set(full, cell.m)?,
        (DatasetSpec::Files { .. }, None) => unreachable!("file set loaded in run_sweep"),
    };

    let pilot = design_pilot(cell.n, plan.pilot_power)?;
    let model = cell.snr.bind(&set, pilot.power())?;
    let cell_seed = derive_seed(cell.snr.seed, cell_id);
    let measurements: Vec<QuantizedMeasurement> = set
        .channels()
        .iter()
        .enumerate()
        .map(|(user, h)| {
            simulate_measurement(
                h,
                &pilot,
                &model.with_seed(derive_seed(cell_seed, user as u64)),
            )
        })
        .collect::<Result<_>>()?;

    let dataset = SupervisedDataset::from_pairs(
        &measurements,
        set.channels(),
        plan.trainer.train_fraction,
        plan.trainer.seed,
    )?;
    // Plans without a test split are evaluated on their training rows.
    let eval_idx: Vec<usize> = if dataset.test_indices().is_empty() {
        dataset.train_indices().to_vec()
    } else {
        dataset.test_indices().to_vec()
    };
    let eval_truth: Vec<&ChannelVector> = eval_idx.iter().map(|&i| &set.channels()[i]).collect();
    let eval_meas: Vec<QuantizedMeasurement> =
        eval_idx.iter().map(|&i| measurements[i].clone()).collect();
    let rho = from_db(plan.rho_db);

    let mut records = Vec::with_capacity(plan.estimators.len());
    for est in &plan.estimators {
        let started = Instant::now();
        let estimates: Vec<ChannelVector> = match est {
            EstimatorKind::Mlp => {
                let mut mlp = MlpEstimator::new(
                    cell.m,
                    cell.n,
                    plan.trainer.hidden_width,
                    plan.trainer.dropout_rate,
                    plan.trainer.precision,
                    derive_seed(plan.trainer.seed, 2),
                )?;
                train(&mut mlp, &dataset, &plan.trainer)?;
                mlp.predict_channels(&eval_meas)?
            }
            EstimatorKind::NearestNeighbor => {
                let store: Vec<(QuantizedMeasurement, ChannelVector)> = dataset
                    .train_indices()
                    .iter()
                    .map(|&i| (measurements[i].clone(), set.channels()[i].clone()))
                    .collect();
                eval_meas
                    .iter()
                    .map(|y| nearest_neighbor_estimate(&store, y))
                    .collect::<Result<_>>()?
            }
        };

        let mut nmse_sum = 0.0;
        let mut snr_sum = 0.0;
        let mut bound_sum = 0.0;
        for (truth, estimate) in eval_truth.iter().zip(&estimates) {
            nmse_sum += nmse_metric(truth, estimate)?;
            snr_sum += per_antenna_snr(truth, estimate, rho)?;
            bound_sum += upper_bound_snr(truth, rho)?;
        }
        let count = eval_truth.len() as f64;
        records.push(SweepRecord {
            m: cell.m,
            n: cell.n,
            snr: cell.snr.label(),
            estimator: est.name().to_string(),
            test_nmse: nmse_sum / count,
            mean_snr_per_antenna_db: to_db(snr_sum / count),
            upper_bound_db: to_db(bound_sum / count),
            train_size: dataset.train_indices().len(),
            test_size: dataset.test_indices().len(),
            status: "ok".to_string(),
            wall_time_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok(records)
}

/// First-M-antennas slice of a file-backed set.
fn slice_set(full: &ChannelSet, m: usize) -> Result<ChannelSet> {
    let full_m = full.geometry().num_antennas();
    if m > full_m {
        return Err(Error::config(format!(
            "cell needs {m} antennas but the dataset holds {full_m}"
        )));
    }
    let geometry = ArrayGeometry::new(m, full.geometry().element_spacing())?;
    let channels = full.channels().iter().map(|ch| ch.truncated(m)).collect();
    let mut set = ChannelSet::new(geometry, channels, full.seed(), full.num_paths())?;
    set.set_min_aoa_separation(full.min_aoa_separation());
    Ok(set)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
