//! Seeded simulation experiments: a Gaussian dimension sweep and a
//! Galton-style random-walk trajectory study, with an analytic moment
//! oracle for the latter.
//!
//! Every experiment is deterministic given its config: each (experiment,
//! point, particle) combination draws from its own RNG substream, so cells
//! are reproducible independently of evaluation order. The random-walk
//! horizons are nested: one simulation is run at the largest horizon and
//! shorter horizons read prefixes of it.

use std::time::Instant;

use serde::Serialize;

use crate::error::{McvError, Result};
use crate::linalg::Matrix;
use crate::metrics::{
    corrected_metrics, cv_univariate, g2, g2_pairwise_with_moments, g_inf_with_moments, gamma_az,
    gamma_reyment, gamma_vanvalen, gamma_vn, gini_univariate, gq_with_moments,
    t_coefficient_with_moments, MetricId,
};
use crate::moments::{estimate_moments, Convention, DataSet, MomentSummary};
use crate::rng::{NormalStream, Rng};
use crate::whitening::zca_cor_whitening;

/// Relative ridge added to the random-walk plug-in covariance diagonal
/// before inversion; the 100-particle covariance at large horizons is
/// nearly singular.
pub const GALTON_RIDGE_REL: f64 = 1e-8;

/// The available experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    GaussianConstantMean,
    GaussianUniformMean,
    Galton,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [
        Experiment::GaussianConstantMean,
        Experiment::GaussianUniformMean,
        Experiment::Galton,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::GaussianConstantMean => "gaussian_constant_mean",
            Experiment::GaussianUniformMean => "gaussian_uniform_mean",
            Experiment::Galton => "galton",
        }
    }

    fn is_gaussian(&self) -> bool {
        matches!(
            self,
            Experiment::GaussianConstantMean | Experiment::GaussianUniformMean
        )
    }

    /// Substream tag keeping the experiments' draws disjoint.
    fn tag(&self) -> u64 {
        match self {
            Experiment::GaussianConstantMean => 1,
            Experiment::GaussianUniformMean => 2,
            Experiment::Galton => 3,
        }
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Experiment {
    type Err = McvError;

    fn from_str(s: &str) -> Result<Experiment> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| McvError::InvalidInput(format!("unknown experiment `{s}`")))
    }
}

impl Serialize for Experiment {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// Default metric set of the published sweep figures.
pub fn default_metrics() -> Vec<MetricId> {
    vec![
        MetricId::GammaVn,
        MetricId::GammaR,
        MetricId::GammaVv,
        MetricId::GammaAz,
        MetricId::G2,
    ]
}

/// Default sweep points: dimensions 10, 15, ..., 50 for the Gaussian
/// experiments; horizons 10, 15, ..., 90 for the random walk.
pub fn default_points(experiment: Experiment) -> Vec<usize> {
    let hi = if experiment.is_gaussian() { 50 } else { 90 };
    (10..=hi).step_by(5).collect()
}

/// Full description of one experiment run.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// Dimensions (Gaussian) or horizons (random walk), strictly increasing.
    pub points: Vec<usize>,
    /// Samples per cell (Gaussian) or particles (random walk).
    pub sample_count: usize,
    pub metrics: Vec<MetricId>,
    /// Gaussian uniform-mean sweep: when true, the mean vector at each
    /// dimension is a prefix of one master draw instead of an independent
    /// draw per dimension.
    pub nested_means: bool,
    /// Random walk: when true, the start position is included as the first
    /// trajectory column; by default columns are positions after steps
    /// 1..T.
    pub include_start: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            seed,
            points: default_points(experiment),
            sample_count: if experiment.is_gaussian() { 500 } else { 100 },
            metrics: default_metrics(),
            nested_means: false,
            include_start: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(McvError::InvalidInput("no sweep points requested".into()));
        }
        if !self.points.windows(2).all(|w| w[0] < w[1]) {
            return Err(McvError::InvalidInput(
                "sweep points must be strictly increasing".into(),
            ));
        }
        if self.points[0] == 0 {
            return Err(McvError::InvalidInput(
                "sweep points must be positive".into(),
            ));
        }
        if self.sample_count < 2 {
            return Err(McvError::InvalidInput(
                "sample_count must be at least 2".into(),
            ));
        }
        if self.metrics.is_empty() {
            return Err(McvError::InvalidInput("no metrics requested".into()));
        }
        if self.experiment == Experiment::Galton && *self.points.last().unwrap() < 2 {
            return Err(McvError::InvalidInput(
                "random-walk experiment needs a horizon of at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// One computed value of the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentCell {
    /// Dimension or horizon.
    pub x: usize,
    pub metric_id: MetricId,
    pub value: f64,
    /// Diagonal ridge added before covariance inversion (0 when none).
    pub ridge: f64,
    /// Wall-clock time spent on the (point, metric) cell, milliseconds.
    pub wall_ms: f64,
}

/// Result of a full sweep: config echo plus one cell per
/// (point, metric) pair.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub cells: Vec<ExperimentCell>,
}

impl ExperimentResult {
    /// The value at a (point, metric) cell.
    pub fn value(&self, x: usize, metric_id: MetricId) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.x == x && c.metric_id == metric_id)
            .map(|c| c.value)
    }
}

/// Evaluates one metric against a dataset with an explicitly supplied
/// (possibly ridged) moment summary.
fn metric_from_moments(id: MetricId, data: &DataSet, ms: &MomentSummary) -> Result<f64> {
    let value = match id {
        MetricId::Cv => {
            if ms.dim() != 1 {
                return Err(McvError::InvalidInput(
                    "cv is univariate; request it only for one-dimensional sweeps".into(),
                ));
            }
            cv_univariate(ms.mean()[0], ms.sd(0))?
        }
        MetricId::Gini => {
            if data.n_vars() != 1 {
                return Err(McvError::InvalidInput(
                    "gini is univariate; request it only for one-dimensional sweeps".into(),
                ));
            }
            gini_univariate(&data.column(0))?
        }
        MetricId::GammaVn => gamma_vn(ms)?.value,
        MetricId::GammaR => gamma_reyment(ms)?.value,
        MetricId::GammaVv => gamma_vanvalen(ms)?.value,
        MetricId::GammaAz => gamma_az(ms)?.value,
        MetricId::G2 => g2(ms)?.value,
        MetricId::SqrtnGammaR => corrected_metrics(ms)?.0.value,
        MetricId::SqrtnGammaAz => corrected_metrics(ms)?.1.value,
        MetricId::G2Pairwise => g2_pairwise_with_moments(data, ms)?.value,
        MetricId::TCoeff => t_coefficient_with_moments(data, ms)?.value,
        MetricId::Gq => {
            let t = zca_cor_whitening(ms)?;
            gq_with_moments(data, 2.0, &t, ms.mean())?.value
        }
        MetricId::GInf => {
            let t = zca_cor_whitening(ms)?;
            g_inf_with_moments(data, &t, ms.mean())?.value
        }
    };
    Ok(value)
}

fn finish_cells(config: ExperimentConfig, cells: Vec<ExperimentCell>) -> Result<ExperimentResult> {
    for cell in &cells {
        if !cell.value.is_finite() {
            return Err(McvError::InvalidInput(format!(
                "non-finite value in cell x={}, metric {}",
                cell.x, cell.metric_id
            )));
        }
    }
    Ok(ExperimentResult {
        seed: config.seed,
        config,
        cells,
    })
}

/// Gaussian dimension sweep: for each dimension n, draw `sample_count`
/// points from N(m, 2 I_n) with m either the constant vector 2 or one
/// seeded uniform[1, 2] draw per coordinate (fixed once per dimension),
/// then evaluate the requested metrics from plug-in population moments.
pub fn simulate_gaussian(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    if !config.experiment.is_gaussian() {
        return Err(McvError::InvalidInput(
            "simulate_gaussian requires a Gaussian experiment".into(),
        ));
    }
    let tag = config.experiment.tag();
    let n_max = *config.points.last().unwrap();
    // Master mean draw for the nested-means option.
    let master_means: Vec<f64> = {
        let mut rng = Rng::substream(config.seed, &[tag, 0, 1]);
        (0..n_max).map(|_| rng.uniform(1.0, 2.0)).collect()
    };
    let mut cells = Vec::with_capacity(config.points.len() * config.metrics.len());
    for &n in &config.points {
        let mean: Vec<f64> = match config.experiment {
            Experiment::GaussianConstantMean => vec![2.0; n],
            Experiment::GaussianUniformMean => {
                if config.nested_means {
                    master_means[..n].to_vec()
                } else {
                    let mut rng = Rng::substream(config.seed, &[tag, n as u64, 1]);
                    (0..n).map(|_| rng.uniform(1.0, 2.0)).collect()
                }
            }
            Experiment::Galton => unreachable!(),
        };
        let mut stream = NormalStream::from_rng(Rng::substream(config.seed, &[tag, n as u64, 2]));
        let sd = 2f64.sqrt();
        let rows: Vec<Vec<f64>> = (0..config.sample_count)
            .map(|_| mean.iter().map(|m| m + sd * stream.next()).collect())
            .collect();
        let names = (0..n).map(|j| format!("x{j}")).collect();
        let data = DataSet::new(names, &rows)?;
        let ms = estimate_moments(&data, Convention::Population)?;
        for &metric_id in &config.metrics {
            let start = Instant::now();
            let value = metric_from_moments(metric_id, &data, &ms)?;
            cells.push(ExperimentCell {
                x: n,
                metric_id,
                value,
                ridge: 0.0,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
    finish_cells(config.clone(), cells)
}

/// Simulates `particles` random-walk trajectories to horizon `t_max`:
/// start x0 ~ uniform[1, 2], then unit steps left or right with equal
/// probability. Columns are positions after steps 1..t_max, with the start
/// prepended when `include_start` is set. Each particle has its own RNG
/// substream.
pub fn galton_trajectories(
    seed: u64,
    particles: usize,
    t_max: usize,
    include_start: bool,
) -> Result<DataSet> {
    if particles < 2 || t_max < 1 {
        return Err(McvError::InvalidInput(
            "need at least 2 particles and a horizon of at least 1".into(),
        ));
    }
    let tag = Experiment::Galton.tag();
    let width = t_max + usize::from(include_start);
    let mut rows = Vec::with_capacity(particles);
    for p in 0..particles {
        let mut rng = Rng::substream(seed, &[tag, p as u64]);
        let mut pos = rng.uniform(1.0, 2.0);
        let mut row = Vec::with_capacity(width);
        if include_start {
            row.push(pos);
        }
        for _ in 0..t_max {
            pos += rng.sign();
            row.push(pos);
        }
        rows.push(row);
    }
    let names = (0..width)
        .map(|j| {
            if include_start {
                format!("t{j}")
            } else {
                format!("t{}", j + 1)
            }
        })
        .collect();
    DataSet::new(names, &rows)
}

/// Prefix of trajectory columns for horizon `t`.
fn horizon_prefix(full: &DataSet, t: usize, include_start: bool) -> Result<DataSet> {
    let width = t + usize::from(include_start);
    let names: Vec<String> = full.names()[..width].to_vec();
    let rows: Vec<Vec<f64>> = (0..full.n_obs())
        .map(|i| full.row(i)[..width].to_vec())
        .collect();
    DataSet::new(names, &rows)
}

/// Random-walk trajectory sweep: one simulation at the largest horizon;
/// each requested horizon T evaluates the metrics on the first T trajectory
/// columns. A diagonal ridge of `1e-8 * trace / T` stabilizes the plug-in
/// covariance, which is nearly singular when the horizon approaches the
/// particle count; the ridge is recorded per cell.
pub fn simulate_galton(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    if config.experiment != Experiment::Galton {
        return Err(McvError::InvalidInput(
            "simulate_galton requires the galton experiment".into(),
        ));
    }
    let t_max = *config.points.last().unwrap();
    let full = galton_trajectories(
        config.seed,
        config.sample_count,
        t_max,
        config.include_start,
    )?;
    let mut cells = Vec::with_capacity(config.points.len() * config.metrics.len());
    for &t in &config.points {
        let data = horizon_prefix(&full, t, config.include_start)?;
        let raw = estimate_moments(&data, Convention::Population)?;
        let n = raw.dim();
        let ridge = GALTON_RIDGE_REL * raw.cov().trace() / n as f64;
        let mut cov = raw.cov().clone();
        cov.add_diag(ridge);
        let ms = MomentSummary::new(raw.mean().to_vec(), cov, Convention::Population)?;
        for &metric_id in &config.metrics {
            let start = Instant::now();
            let value = metric_from_moments(metric_id, &data, &ms)?;
            cells.push(ExperimentCell {
                x: t,
                metric_id,
                value,
                ridge,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
    finish_cells(config.clone(), cells)
}

/// Runs the experiment named by the config.
pub fn simulate(config: &ExperimentConfig) -> Result<ExperimentResult> {
    match config.experiment {
        Experiment::GaussianConstantMean | Experiment::GaussianUniformMean => {
            simulate_gaussian(config)
        }
        Experiment::Galton => simulate_galton(config),
    }
}

/// Analytic moments of the random-walk trajectory vector: the uniform[1, 2]
/// start contributes mean 1.5 and variance 1/12 to every entry, and each
/// fair +/-1 step adds unit variance, so Cov(X_s, X_t) = 1/12 + min(s, t).
pub fn galton_analytic_moments(t: usize) -> Result<MomentSummary> {
    if t < 1 {
        return Err(McvError::InvalidInput("horizon must be at least 1".into()));
    }
    let mean = vec![1.5; t];
    let mut cov = Matrix::zeros(t, t);
    for s in 0..t {
        for u in 0..t {
            cov[(s, u)] = 1.0 / 12.0 + (s.min(u) + 1) as f64;
        }
    }
    MomentSummary::new(mean, cov, Convention::Analytic)
}
