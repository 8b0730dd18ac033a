//! Dispersion metrics: univariate CV and Gini, the classical multivariate
//! CVs, the normalized multivariate Gini index and its q-norm and pairwise
//! relatives, and the influence function of the normalized index.
//!
//! Moment-level metrics consume a `MomentSummary`; data-level metrics
//! consume a `DataSet` and use plug-in population moments internally, since
//! their defining double sums integrate against the empirical measure.
//! Every metric returns a `MetricReport` carrying the value, the dimension,
//! and the convention actually used.

use serde::{Serialize, Serializer};

use crate::error::{McvError, Result};
use crate::linalg::{cholesky, dot};
use crate::moments::{estimate_moments, weighted_moments, Convention, DataSet, MomentSummary};
use crate::whitening::{apply_whitening, zca_cor_whitening, WhiteningTransform};

/// Quadratic forms at or below this are treated as a zero mean form.
const ZERO_FORM_TOL: f64 = 1e-14;

/// Identifier of a dispersion metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricId {
    Cv,
    Gini,
    GammaVn,
    GammaR,
    GammaVv,
    GammaAz,
    G2,
    G2Pairwise,
    Gq,
    GInf,
    TCoeff,
    SqrtnGammaR,
    SqrtnGammaAz,
}

impl MetricId {
    pub const ALL: [MetricId; 13] = [
        MetricId::Cv,
        MetricId::Gini,
        MetricId::GammaVn,
        MetricId::GammaR,
        MetricId::GammaVv,
        MetricId::GammaAz,
        MetricId::G2,
        MetricId::G2Pairwise,
        MetricId::Gq,
        MetricId::GInf,
        MetricId::TCoeff,
        MetricId::SqrtnGammaR,
        MetricId::SqrtnGammaAz,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricId::Cv => "cv",
            MetricId::Gini => "gini",
            MetricId::GammaVn => "gamma_vn",
            MetricId::GammaR => "gamma_r",
            MetricId::GammaVv => "gamma_vv",
            MetricId::GammaAz => "gamma_az",
            MetricId::G2 => "g2",
            MetricId::G2Pairwise => "g2_pairwise",
            MetricId::Gq => "gq",
            MetricId::GInf => "g_inf",
            MetricId::TCoeff => "t_coeff",
            MetricId::SqrtnGammaR => "sqrtn_gamma_r",
            MetricId::SqrtnGammaAz => "sqrtn_gamma_az",
        }
    }

    /// True for metrics defined on datasets rather than moment summaries.
    pub fn is_data_level(&self) -> bool {
        matches!(
            self,
            MetricId::Gini
                | MetricId::G2Pairwise
                | MetricId::Gq
                | MetricId::GInf
                | MetricId::TCoeff
        )
    }
}

impl std::fmt::Display for MetricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricId {
    type Err = McvError;

    fn from_str(s: &str) -> Result<MetricId> {
        MetricId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| McvError::InvalidInput(format!("unknown metric id `{s}`")))
    }
}

impl Serialize for MetricId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// Scalar output of a dispersion metric.
#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub metric_id: MetricId,
    pub value: f64,
    pub n: usize,
    pub convention: Convention,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Set when a Gini-type metric saw negative inputs; the 0-1 reading of
    /// the index assumes nonnegative support.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub negative_support: bool,
}

impl MetricReport {
    fn new(metric_id: MetricId, value: f64, n: usize, convention: Convention) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(McvError::InvalidInput(format!(
                "metric {metric_id} produced invalid value {value}"
            )));
        }
        Ok(MetricReport {
            metric_id,
            value,
            n,
            convention,
            q: None,
            negative_support: false,
        })
    }
}

/// Univariate coefficient of variation `sigma / |m|`.
pub fn cv_univariate(m: f64, sigma: f64) -> Result<f64> {
    if m == 0.0 {
        return Err(McvError::ZeroMean);
    }
    Ok(sigma / m.abs())
}

/// Empirical univariate Gini index
/// `(1/(2|m|)) * (1/N^2) * sum_{i,j} |x_i - x_j|`.
///
/// Input order is irrelevant: the values are sorted internally and the
/// double sum evaluated in O(N log N) through the prefix-sum identity
/// `sum_{i,j} |x_i - x_j| = 2 * sum_k (2k - N - 1) x_(k)` over the ascending
/// order statistics (k counted from 1).
pub fn gini_univariate(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(McvError::InvalidInput("empty value list".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(McvError::ZeroMean);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mut weighted = 0.0;
    for (k, x) in sorted.iter().enumerate() {
        weighted += (2.0 * (k + 1) as f64 - n - 1.0) * x;
    }
    Ok((2.0 * weighted) / (2.0 * mean.abs() * n * n))
}

/// Quadratic form `m^T S^{-1} m` via a Cholesky solve, rejecting values at
/// numerical zero.
fn mean_form(ms: &MomentSummary) -> Result<f64> {
    let fact = cholesky(ms.cov())?;
    let y = fact.solve(ms.mean());
    let q = dot(ms.mean(), &y);
    if q <= ZERO_FORM_TOL {
        return Err(McvError::ZeroMeanForm);
    }
    Ok(q)
}

fn require_nonzero_mean(ms: &MomentSummary) -> Result<f64> {
    let mtm = dot(ms.mean(), ms.mean());
    if mtm <= 0.0 {
        return Err(McvError::ZeroMean);
    }
    Ok(mtm)
}

/// Voinov-Nikulin coefficient `1 / sqrt(m^T S^{-1} m)`.
pub fn gamma_vn(ms: &MomentSummary) -> Result<MetricReport> {
    let q = mean_form(ms)?;
    MetricReport::new(MetricId::GammaVn, 1.0 / q.sqrt(), ms.dim(), ms.convention())
}

/// Reyment coefficient `sqrt(det(S)^{1/n} / m^T m)`, with the determinant
/// taken in log space from the Cholesky diagonal.
pub fn gamma_reyment(ms: &MomentSummary) -> Result<MetricReport> {
    let mtm = require_nonzero_mean(ms)?;
    let fact = cholesky(ms.cov())?;
    let n = ms.dim() as f64;
    let det_root = (fact.log_det() / n).exp();
    MetricReport::new(
        MetricId::GammaR,
        (det_root / mtm).sqrt(),
        ms.dim(),
        ms.convention(),
    )
}

/// Van Valen coefficient `sqrt(tr(S) / m^T m)`.
pub fn gamma_vanvalen(ms: &MomentSummary) -> Result<MetricReport> {
    let mtm = require_nonzero_mean(ms)?;
    MetricReport::new(
        MetricId::GammaVv,
        (ms.cov().trace() / mtm).sqrt(),
        ms.dim(),
        ms.convention(),
    )
}

/// Albert-Zhang coefficient `sqrt(m^T S m / (m^T m)^2)`.
pub fn gamma_az(ms: &MomentSummary) -> Result<MetricReport> {
    let mtm = require_nonzero_mean(ms)?;
    let msm = dot(&ms.cov().matvec(ms.mean()), ms.mean());
    MetricReport::new(
        MetricId::GammaAz,
        (msm / (mtm * mtm)).sqrt(),
        ms.dim(),
        ms.convention(),
    )
}

/// Normalized multivariate Gini index in closed form,
/// `sqrt(n / (m^T S^{-1} m))`.
pub fn g2(ms: &MomentSummary) -> Result<MetricReport> {
    let q = mean_form(ms)?;
    let n = ms.dim() as f64;
    MetricReport::new(MetricId::G2, (n / q).sqrt(), ms.dim(), ms.convention())
}

/// Dimension-corrected Reyment and Albert-Zhang coefficients,
/// `sqrt(n) * gamma_r` and `sqrt(n) * gamma_az`.
pub fn corrected_metrics(ms: &MomentSummary) -> Result<(MetricReport, MetricReport)> {
    let root_n = (ms.dim() as f64).sqrt();
    let r = gamma_reyment(ms)?;
    let az = gamma_az(ms)?;
    Ok((
        MetricReport::new(
            MetricId::SqrtnGammaR,
            root_n * r.value,
            ms.dim(),
            ms.convention(),
        )?,
        MetricReport::new(
            MetricId::SqrtnGammaAz,
            root_n * az.value,
            ms.dim(),
            ms.convention(),
        )?,
    ))
}

fn plug_in_moments(data: &DataSet) -> Result<MomentSummary> {
    estimate_moments(data, Convention::Population)
}

fn require_two_observations(data: &DataSet) -> Result<()> {
    if data.n_obs() < 2 {
        return Err(McvError::InvalidInput(
            "pairwise metrics need at least 2 observations".into(),
        ));
    }
    Ok(())
}

/// Rows of the dataset mapped through the Cholesky whitener of the summary
/// covariance, so squared Euclidean distances between rows are Mahalanobis
/// distances under that covariance.
fn mahalanobis_rows(data: &DataSet, ms: &MomentSummary) -> Result<Vec<Vec<f64>>> {
    let fact = cholesky(ms.cov())?;
    let w = fact.inverse_lower();
    Ok((0..data.n_obs()).map(|i| w.matvec(data.row(i))).collect())
}

/// Pairwise form of the normalized multivariate Gini index, evaluated under
/// explicitly supplied moments (quadratic form and Mahalanobis metric).
pub fn g2_pairwise_with_moments(data: &DataSet, ms: &MomentSummary) -> Result<MetricReport> {
    require_two_observations(data)?;
    let q = mean_form(ms)?;
    let rows = mahalanobis_rows(data, ms)?;
    let n_obs = data.n_obs();
    let mut sum = 0.0;
    for i in 0..n_obs {
        for j in (i + 1)..n_obs {
            let d: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sum += 2.0 * d;
        }
    }
    let mean_sq = sum / (n_obs * n_obs) as f64;
    MetricReport::new(
        MetricId::G2Pairwise,
        (mean_sq / (2.0 * q)).sqrt(),
        ms.dim(),
        ms.convention(),
    )
}

/// Pairwise normalized Gini index from the O(N^2 n) double sum over plug-in
/// population moments.
pub fn g2_pairwise(data: &DataSet) -> Result<MetricReport> {
    let ms = plug_in_moments(data)?;
    g2_pairwise_with_moments(data, &ms)
}

/// Algebraically equal trace form of `g2_pairwise`,
/// `sqrt(tr(S^{-1} S_hat) / (m^T S^{-1} m))`, in O(N n^2).
pub fn g2_pairwise_trace(data: &DataSet) -> Result<MetricReport> {
    let ms = plug_in_moments(data)?;
    let q = mean_form(&ms)?;
    let fact = cholesky(ms.cov())?;
    // tr(S^{-1} S_hat) with S = S_hat: still computed, not assumed n.
    let n = ms.dim();
    let mut trace = 0.0;
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| ms.cov()[(i, j)]).collect();
        trace += fact.solve(&col)[j];
    }
    MetricReport::new(
        MetricId::G2Pairwise,
        (trace / q).sqrt(),
        n,
        Convention::Population,
    )
}

/// Stable `L_q` norm.
fn lq_norm(v: &[f64], q: f64) -> f64 {
    let peak = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let sum: f64 = v.iter().map(|x| (x.abs() / peak).powf(q)).sum();
    peak * sum.powf(1.0 / q)
}

/// q-norm Gini index under explicitly supplied whitening and mean.
pub fn gq_with_moments(
    data: &DataSet,
    q: f64,
    t: &WhiteningTransform,
    mean: &[f64],
) -> Result<MetricReport> {
    require_two_observations(data)?;
    if q < 1.0 {
        return Err(McvError::InvalidInput(format!("q must be >= 1, got {q}")));
    }
    let wm = t.apply_vec(mean)?;
    let norm_wm = lq_norm(&wm, q);
    if norm_wm <= ZERO_FORM_TOL {
        return Err(McvError::ZeroMeanForm);
    }
    let white = apply_whitening(t, data)?;
    let n_obs = data.n_obs();
    // Normalizing each whitened difference by ||W m||_q first keeps the
    // q-th powers in range even at large q.
    let mut sum = 0.0;
    for i in 0..n_obs {
        let ri = white.row(i);
        for j in (i + 1)..n_obs {
            let rj = white.row(j);
            let term: f64 = ri
                .iter()
                .zip(rj)
                .map(|(a, b)| ((a - b).abs() / norm_wm).powf(q))
                .sum();
            sum += 2.0 * term;
        }
    }
    let value = (sum / (2.0 * (n_obs * n_obs) as f64)).powf(1.0 / q);
    let mut report = MetricReport::new(MetricId::Gq, value, data.n_vars(), Convention::Population)?;
    report.q = Some(q);
    Ok(report)
}

/// q-norm Gini index
/// `( (1/(2 ||W m||_q^q)) * (1/N^2) * sum_{i,j} ||W(x_i - x_j)||_q^q )^{1/q}`
/// with `W` the ZCA-cor whitener of the plug-in population moments.
pub fn gq(data: &DataSet, q: f64) -> Result<MetricReport> {
    let ms = plug_in_moments(data)?;
    let t = zca_cor_whitening(&ms)?;
    gq_with_moments(data, q, &t, ms.mean())
}

/// Limit of the q-norm family under explicitly supplied whitening and mean.
pub fn g_inf_with_moments(
    data: &DataSet,
    t: &WhiteningTransform,
    mean: &[f64],
) -> Result<MetricReport> {
    require_two_observations(data)?;
    let wm = t.apply_vec(mean)?;
    let denom = wm.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if denom <= ZERO_FORM_TOL {
        return Err(McvError::ZeroMeanForm);
    }
    let white = apply_whitening(t, data)?;
    let mut max_range = 0.0f64;
    for j in 0..white.n_vars() {
        let col = white.column(j);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in col {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        max_range = max_range.max(hi - lo);
    }
    MetricReport::new(
        MetricId::GInf,
        max_range / denom,
        data.n_vars(),
        Convention::Population,
    )
}

/// `max_i range(X_i^*) / ||W m||_inf` over ZCA-cor whitened columns: the
/// q -> infinity limit of the q-norm Gini family.
pub fn g_inf(data: &DataSet) -> Result<MetricReport> {
    let ms = plug_in_moments(data)?;
    let t = zca_cor_whitening(&ms)?;
    g_inf_with_moments(data, &t, ms.mean())
}

/// Mahalanobis-distance inequality coefficient under explicitly supplied
/// moments: `sqrt(1/(2 m^T S^{-1} m)) * (1/N^2) * sum_{i,j} sqrt(d_ij)`,
/// with the square root outside the double sum.
pub fn t_coefficient_with_moments(data: &DataSet, ms: &MomentSummary) -> Result<MetricReport> {
    require_two_observations(data)?;
    let q = mean_form(ms)?;
    let rows = mahalanobis_rows(data, ms)?;
    let n_obs = data.n_obs();
    let mut sum = 0.0;
    for i in 0..n_obs {
        for j in (i + 1)..n_obs {
            let d: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sum += 2.0 * d.sqrt();
        }
    }
    let value = (1.0 / (2.0 * q)).sqrt() * sum / (n_obs * n_obs) as f64;
    MetricReport::new(MetricId::TCoeff, value, ms.dim(), ms.convention())
}

/// Mahalanobis-distance inequality coefficient over plug-in population
/// moments.
pub fn t_coefficient(data: &DataSet) -> Result<MetricReport> {
    let ms = plug_in_moments(data)?;
    t_coefficient_with_moments(data, &ms)
}

/// Influence function of the normalized multivariate Gini index, evaluated
/// from its published closed form:
/// `sqrt(n)/(2 (m^T S^{-1} m)^{3/2}) * ((m^T S^{-1} m)^2 - 2 m^T S^{-1} (x - m))`.
pub fn influence_g2(x: &[f64], ms: &MomentSummary) -> Result<f64> {
    if x.len() != ms.dim() {
        return Err(McvError::DimensionMismatch {
            expected: ms.dim(),
            got: x.len(),
        });
    }
    let q = mean_form(ms)?;
    let fact = cholesky(ms.cov())?;
    let sinv_m = fact.solve(ms.mean());
    let centered: Vec<f64> = x.iter().zip(ms.mean()).map(|(xi, mi)| xi - mi).collect();
    let cross = dot(&sinv_m, &centered);
    let n = ms.dim() as f64;
    Ok(n.sqrt() / (2.0 * q.powf(1.5)) * (q * q - 2.0 * cross))
}

/// Pair of finite-difference influence estimates at contamination sizes
/// `eps` and `eps/2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FdInfluence {
    pub eps: f64,
    pub at_eps: f64,
    pub at_half_eps: f64,
}

impl FdInfluence {
    /// Relative gap between the two estimates; small values indicate the
    /// difference quotient has stabilized.
    pub fn convergence_gap(&self) -> f64 {
        (self.at_eps - self.at_half_eps).abs() / self.at_half_eps.abs().max(1e-300)
    }
}

/// Finite-difference oracle for the influence of the normalized index:
/// `(G2(mu_eps) - G2(mu)) / eps`, where `mu_eps` reweights the empirical
/// measure by `1 - eps` and puts mass `eps` at `x`. Returns estimates at
/// `eps` and `eps/2`.
pub fn influence_fd(x: &[f64], data: &DataSet, eps: f64) -> Result<FdInfluence> {
    if !(eps > 0.0 && eps < 0.1) {
        return Err(McvError::InvalidInput(format!(
            "eps must lie in (0, 0.1), got {eps}"
        )));
    }
    let base = g2(&plug_in_moments(data)?)?.value;
    let contaminated = data.append_row(x)?;
    let n_obs = data.n_obs();
    let estimate = |e: f64| -> Result<f64> {
        let mut weights = vec![(1.0 - e) / n_obs as f64; n_obs];
        weights.push(e);
        let ms = weighted_moments(&contaminated, &weights)?;
        Ok((g2(&ms)?.value - base) / e)
    };
    Ok(FdInfluence {
        eps,
        at_eps: estimate(eps)?,
        at_half_eps: estimate(eps / 2.0)?,
    })
}

fn univariate_column(data: &DataSet) -> Result<Vec<f64>> {
    if data.n_vars() != 1 {
        return Err(McvError::InvalidInput(format!(
            "metric is univariate but the dataset has {} variables",
            data.n_vars()
        )));
    }
    Ok(data.column(0))
}

/// Evaluates a metric on a dataset.
///
/// Moment-level metrics estimate a summary under `convention` first.
/// Data-level metrics use plug-in population moments, as their definitions
/// require, regardless of `convention`. `q` applies to the q-norm family
/// only and defaults to 2.
pub fn evaluate(
    id: MetricId,
    data: &DataSet,
    convention: Convention,
    q: Option<f64>,
) -> Result<MetricReport> {
    match id {
        MetricId::Cv => {
            let values = univariate_column(data)?;
            let ms = estimate_moments(data, convention)?;
            let value = cv_univariate(ms.mean()[0], ms.sd(0))?;
            let mut report = MetricReport::new(MetricId::Cv, value, 1, convention)?;
            report.negative_support = values.iter().any(|v| *v < 0.0);
            Ok(report)
        }
        MetricId::Gini => {
            let values = univariate_column(data)?;
            let value = gini_univariate(&values)?;
            let mut report = MetricReport::new(MetricId::Gini, value, 1, Convention::Population)?;
            report.negative_support = values.iter().any(|v| *v < 0.0);
            Ok(report)
        }
        MetricId::GammaVn => gamma_vn(&estimate_moments(data, convention)?),
        MetricId::GammaR => gamma_reyment(&estimate_moments(data, convention)?),
        MetricId::GammaVv => gamma_vanvalen(&estimate_moments(data, convention)?),
        MetricId::GammaAz => gamma_az(&estimate_moments(data, convention)?),
        MetricId::G2 => g2(&estimate_moments(data, convention)?),
        MetricId::G2Pairwise => g2_pairwise(data),
        MetricId::Gq => gq(data, q.unwrap_or(2.0)),
        MetricId::GInf => g_inf(data),
        MetricId::TCoeff => t_coefficient(data),
        MetricId::SqrtnGammaR => Ok(corrected_metrics(&estimate_moments(data, convention)?)?.0),
        MetricId::SqrtnGammaAz => Ok(corrected_metrics(&estimate_moments(data, convention)?)?.1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::moments::{coupling_moments, estimate_moments};
    use crate::rng::{NormalStream, Rng};
    use proptest::prelude::*;

    fn summary(mean: Vec<f64>, cov: &[Vec<f64>]) -> MomentSummary {
        MomentSummary::new(mean, Matrix::from_rows(cov).unwrap(), Convention::Analytic).unwrap()
    }

    fn instance_31() -> MomentSummary {
        summary(vec![3.0, 3.0], &[vec![1.0, 1.0], vec![1.0, 2.0]])
    }

    fn random_dataset(n_vars: usize, n_obs: usize, seed: u64) -> DataSet {
        let mut s = NormalStream::new(seed);
        let rows: Vec<Vec<f64>> = (0..n_obs)
            .map(|_| {
                (0..n_vars)
                    .map(|j| 2.0 + 0.5 * (j as f64) + s.next())
                    .collect()
            })
            .collect();
        let names = (0..n_vars).map(|j| format!("x{j}")).collect();
        DataSet::new(names, &rows).unwrap()
    }

    #[test]
    fn cv_univariate_examples() {
        let v = cv_univariate(2.0, 2f64.sqrt()).unwrap();
        assert!((v - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let w = cv_univariate(-2.0, 2f64.sqrt()).unwrap();
        assert!((w - v).abs() == 0.0);
        assert!(matches!(cv_univariate(0.0, 1.0), Err(McvError::ZeroMean)));
        // Uniform[1, 2]: mean 3/2, sd 1/sqrt(12); CV = 2/(3*sqrt(12)) wired
        // through the sampled-mean form used in the location experiment.
        let v = cv_univariate(1.5, 2f64.sqrt()).unwrap();
        assert!((v - 0.9428090415820634).abs() < 1e-12);
    }

    #[test]
    fn gini_equal_values_is_zero() {
        assert_eq!(gini_univariate(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn gini_two_point_is_half() {
        assert!((gini_univariate(&[0.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gini_prefix_sum_matches_brute_force() {
        let mut rng = Rng::new(314);
        for _ in 0..20 {
            let n = 2 + (rng.next_u64() % 30) as usize;
            let values: Vec<f64> = (0..n).map(|_| rng.uniform(0.5, 10.0)).collect();
            let fast = gini_univariate(&values).unwrap();
            let mean = values.iter().sum::<f64>() / n as f64;
            let mut double = 0.0;
            for a in &values {
                for b in &values {
                    double += (a - b).abs();
                }
            }
            let slow = double / (2.0 * mean.abs() * (n * n) as f64);
            assert!((fast - slow).abs() < 1e-12 * (1.0 + slow));
        }
    }

    #[test]
    fn gini_gaussian_sample_matches_closed_form() {
        // For independent normals, E|X - Y| = 2 sigma / sqrt(pi), so the
        // Gini index tends to sigma / (m sqrt(pi)).
        let m = 3.0;
        let sigma = 1.0;
        let mut s = NormalStream::new(2024);
        let values: Vec<f64> = (0..200_000).map(|_| m + sigma * s.next()).collect();
        let g = gini_univariate(&values).unwrap();
        let expect = sigma / (m * std::f64::consts::PI.sqrt());
        assert!((g - expect).abs() < 0.004, "got {g}, expected {expect}");
    }

    #[test]
    fn gamma_vn_examples() {
        let univ = summary(vec![2.0], &[vec![2.0]]);
        assert!((gamma_vn(&univ).unwrap().value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        // m^T S^{-1} m = 9 here, so the value is exactly 1/3.
        assert!((gamma_vn(&instance_31()).unwrap().value - 1.0 / 3.0).abs() < 1e-12);

        for n in 1..=6usize {
            let ms = summary(vec![2.0; n], &diag_rows(n, 2.0));
            let expect = 1.0 / (2.0 * n as f64).sqrt();
            assert!((gamma_vn(&ms).unwrap().value - expect).abs() < 1e-12);
        }
    }

    fn diag_rows(n: usize, v: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { v } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn gamma_vn_rejects_zero_mean_form() {
        let ms = summary(vec![0.0, 0.0], &diag_rows(2, 1.0));
        assert!(matches!(gamma_vn(&ms), Err(McvError::ZeroMeanForm)));
    }

    #[test]
    fn gamma_reyment_examples() {
        assert!(
            (gamma_reyment(&instance_31()).unwrap().value - (1.0 / 18.0f64).sqrt()).abs() < 1e-12
        );
        let y = summary(vec![4.0, 1.0], &[vec![1.0, 1.0], vec![1.0, 2.0]]);
        assert!((gamma_reyment(&y).unwrap().value - (1.0 / 17.0f64).sqrt()).abs() < 1e-12);
        let id = summary(vec![1.0, 1.0], &diag_rows(2, 1.0));
        assert!(
            (gamma_reyment(&id).unwrap().value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12
        );
    }

    #[test]
    fn gamma_vanvalen_examples() {
        let a = summary(vec![2.0, 1.0], &diag_rows(2, 1.0));
        assert!((gamma_vanvalen(&a).unwrap().value - (2.0f64 / 5.0).sqrt()).abs() < 1e-12);
        let b = summary(vec![4.0, 1.0], &[vec![4.0, 0.0], vec![0.0, 1.0]]);
        assert!((gamma_vanvalen(&b).unwrap().value - (5.0f64 / 17.0).sqrt()).abs() < 1e-12);
        for n in 1..=5usize {
            let ms = summary(vec![2.0; n], &diag_rows(n, 2.0));
            assert!(
                (gamma_vanvalen(&ms).unwrap().value - std::f64::consts::FRAC_1_SQRT_2).abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn gamma_az_examples() {
        let univ = summary(vec![-2.0], &[vec![2.0]]);
        assert!((gamma_az(&univ).unwrap().value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let a = summary(vec![1.0, 1.0], &diag_rows(2, 1.0));
        assert!((gamma_az(&a).unwrap().value - 0.5f64.sqrt()).abs() < 1e-12);
        let b = summary(vec![2.0, 1.0], &[vec![4.0, 0.0], vec![0.0, 1.0]]);
        assert!((gamma_az(&b).unwrap().value - (17.0f64 / 25.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn g2_examples() {
        let univ = summary(vec![2.0], &[vec![2.0]]);
        assert!((g2(&univ).unwrap().value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        for n in 1..=6usize {
            let ms = summary(vec![2.0; n], &diag_rows(n, 2.0));
            assert!((g2(&ms).unwrap().value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!((g2(&instance_31()).unwrap().value - (2.0f64 / 9.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn univariate_coherence_across_metrics() {
        // In dimension 1 every registered multivariate CV collapses to
        // sigma/|m|.
        let ms = summary(vec![2.0], &[vec![2.0]]);
        let expect = std::f64::consts::FRAC_1_SQRT_2;
        for v in [
            gamma_vn(&ms).unwrap().value,
            gamma_reyment(&ms).unwrap().value,
            gamma_vanvalen(&ms).unwrap().value,
            gamma_az(&ms).unwrap().value,
            g2(&ms).unwrap().value,
        ] {
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn corrected_metrics_examples() {
        let univ = summary(vec![2.0], &[vec![2.0]]);
        let (r, az) = corrected_metrics(&univ).unwrap();
        assert!((r.value - gamma_reyment(&univ).unwrap().value).abs() < 1e-15);
        assert!((az.value - gamma_az(&univ).unwrap().value).abs() < 1e-15);
        for n in 2..=5usize {
            let ms = summary(vec![2.0; n], &diag_rows(n, 2.0));
            let (r, az) = corrected_metrics(&ms).unwrap();
            assert!(
                (r.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12,
                "n={n}"
            );
            assert!(
                (az.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12,
                "n={n}"
            );
        }
    }

    #[test]
    fn g2_pairwise_matches_closed_form_identity() {
        for seed in 0..5u64 {
            for &n in &[1usize, 2, 4] {
                let data = random_dataset(n, 40, 100 + seed * 13 + n as u64);
                let pair = g2_pairwise(&data).unwrap().value;
                let closed = g2(&estimate_moments(&data, Convention::Population).unwrap())
                    .unwrap()
                    .value;
                assert!(
                    (pair - closed).abs() <= 1e-10 * (1.0 + closed),
                    "n={n} seed={seed}: {pair} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn g2_pairwise_trace_form_agrees_with_double_sum() {
        let data = random_dataset(3, 60, 7);
        let a = g2_pairwise(&data).unwrap().value;
        let b = g2_pairwise_trace(&data).unwrap().value;
        assert!((a - b).abs() < 1e-11 * (1.0 + a));
    }

    #[test]
    fn g2_pairwise_two_point_univariate_is_cv() {
        let data = DataSet::new(vec!["x".into()], &[vec![1.0], vec![3.0]]).unwrap();
        // Population moments: m = 2, sigma = 1, so the value is 1/2.
        assert!((g2_pairwise(&data).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn g2_pairwise_cloning_at_moment_level() {
        let data = random_dataset(2, 30, 99);
        let ms = estimate_moments(&data, Convention::Population).unwrap();
        let base = g2_pairwise_with_moments(&data, &ms).unwrap().value;
        let coupled = coupling_moments(&ms, &ms).unwrap();
        let doubled = data.duplicate_columns();
        let cloned = g2_pairwise_with_moments(&doubled, &coupled).unwrap().value;
        assert!((cloned - base).abs() < 1e-12 * (1.0 + base));
    }

    #[test]
    fn gq_at_two_matches_g2_pairwise() {
        for seed in [11u64, 12, 13] {
            let data = random_dataset(3, 50, seed);
            let a = gq(&data, 2.0).unwrap().value;
            let b = g2_pairwise(&data).unwrap().value;
            assert!((a - b).abs() < 1e-9 * (1.0 + b), "{a} vs {b}");
        }
    }

    #[test]
    fn gq_at_one_univariate_is_gini() {
        let values = vec![1.0, 2.0, 4.0, 4.5, 7.0];
        let rows: Vec<Vec<f64>> = values.iter().map(|v| vec![*v]).collect();
        let data = DataSet::new(vec!["x".into()], &rows).unwrap();
        let a = gq(&data, 1.0).unwrap().value;
        let b = gini_univariate(&values).unwrap();
        assert!((a - b).abs() < 1e-12 * (1.0 + b));
    }

    #[test]
    fn gq_rejects_constant_data() {
        let data = DataSet::new(vec!["x".into()], &[vec![2.0], vec![2.0]]).unwrap();
        assert!(matches!(
            gq(&data, 2.0),
            Err(McvError::DegenerateColumn { .. })
        ));
    }

    #[test]
    fn g_inf_univariate_two_point() {
        let data = DataSet::new(vec!["x".into()], &[vec![0.0], vec![2.0]]).unwrap();
        // m = 1, population sigma = 1: whitened range 2, whitened mean 1.
        assert!((g_inf(&data).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn g_inf_takes_dominant_whitened_column() {
        // Two independent whitened columns; the second has the wider range.
        let rows = vec![
            vec![1.0, 10.0],
            vec![2.0, 2.0],
            vec![3.0, 18.0],
            vec![2.0, 10.0],
        ];
        let data = DataSet::new(vec!["a".into(), "b".into()], &rows).unwrap();
        let ms = estimate_moments(&data, Convention::Population).unwrap();
        let t = zca_cor_whitening(&ms).unwrap();
        let white = apply_whitening(&t, &data).unwrap();
        let mut ranges = Vec::new();
        for j in 0..2 {
            let col = white.column(j);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            ranges.push(hi - lo);
        }
        let wm = t.apply_vec(ms.mean()).unwrap();
        let denom = wm.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let expect = ranges.iter().cloned().fold(0.0f64, f64::max) / denom;
        assert!((g_inf(&data).unwrap().value - expect).abs() < 1e-12);
    }

    #[test]
    fn gq_family_approaches_g_inf() {
        let data = random_dataset(2, 60, 40);
        let target = g_inf(&data).unwrap().value;
        let mut prev_gap = f64::INFINITY;
        for q in [2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
            let gap = (gq(&data, q).unwrap().value - target).abs();
            assert!(gap <= prev_gap + 1e-6, "q={q}: {gap} vs {prev_gap}");
            prev_gap = gap;
        }
    }

    #[test]
    fn t_coefficient_never_exceeds_g2_pairwise() {
        for seed in [5u64, 6, 7, 8] {
            let data = random_dataset(3, 40, seed);
            let t = t_coefficient(&data).unwrap().value;
            let g = g2_pairwise(&data).unwrap().value;
            assert!(t <= g * (1.0 + 1e-9), "{t} vs {g}");
        }
    }

    #[test]
    fn t_coefficient_two_point_ratio() {
        // Two equally weighted points: half the pair mass sits on the
        // diagonal (distance zero), so Jensen is strict and the ratio to the
        // pairwise index is exactly 1/sqrt(2), not 1.
        let data = DataSet::new(vec!["x".into()], &[vec![1.0], vec![3.0]]).unwrap();
        let t = t_coefficient(&data).unwrap().value;
        let g = g2_pairwise(&data).unwrap().value;
        assert!((t / g - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn t_coefficient_gaussian_bracket() {
        let m = 2.0;
        let mut s = NormalStream::new(77);
        let rows: Vec<Vec<f64>> = (0..10_000).map(|_| vec![m + s.next()]).collect();
        let data = DataSet::new(vec!["x".into()], &rows).unwrap();
        let t = t_coefficient(&data).unwrap().value;
        let ms = estimate_moments(&data, Convention::Population).unwrap();
        let cv = cv_univariate(ms.mean()[0], ms.sd(0)).unwrap();
        assert!(t < cv, "{t} vs cv {cv}");
        assert!(t > 0.5 * cv, "{t} vs cv {cv}");
    }

    #[test]
    fn influence_formula_at_the_mean() {
        let ms = instance_31();
        let v = influence_g2(&[3.0, 3.0], &ms).unwrap();
        // Quadratic form is 9, so the value is sqrt(2) * 9^{1/2} / 2.
        let expect = 2.0f64.sqrt() * 3.0 / 2.0;
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn influence_formula_is_affine_in_x() {
        let ms = instance_31();
        let x1 = [4.0, 2.0];
        let x2 = [1.0, 5.5];
        let mid = [(x1[0] + x2[0]) / 2.0, (x1[1] + x2[1]) / 2.0];
        let lhs = influence_g2(&x1, &ms).unwrap() + influence_g2(&x2, &ms).unwrap()
            - 2.0 * influence_g2(&mid, &ms).unwrap();
        assert!(lhs.abs() < 1e-10);
    }

    #[test]
    fn influence_fd_stabilizes_at_symmetric_mean() {
        // Mirror pairs around (3, 3) keep the contaminated mean fixed when
        // x is the center, so the difference quotient settles quickly.
        let mut rows = Vec::new();
        let mut s = NormalStream::new(55);
        for _ in 0..40 {
            let d = [s.next(), s.next()];
            rows.push(vec![3.0 + d[0], 3.0 + d[1]]);
            rows.push(vec![3.0 - d[0], 3.0 - d[1]]);
        }
        let data = DataSet::new(vec!["a".into(), "b".into()], &rows).unwrap();
        let fd = influence_fd(&[3.0, 3.0], &data, 0.01).unwrap();
        assert!(
            (fd.at_eps - fd.at_half_eps).abs() <= 0.01 * fd.at_half_eps.abs(),
            "{:?}",
            fd
        );
    }

    #[test]
    fn influence_fd_reports_both_estimates_and_handles_duplicates() {
        let data = random_dataset(2, 25, 31);
        let x = data.row(3).to_vec();
        let fd = influence_fd(&x, &data, 0.05).unwrap();
        assert!(fd.at_eps.is_finite() && fd.at_half_eps.is_finite());
        assert_eq!(fd.eps, 0.05);
        assert!(influence_fd(&x, &data, 0.5).is_err());
    }

    #[test]
    fn influence_fd_comparison_with_formula_is_reported_not_asserted() {
        // The closed form and the difference quotient are both computed on
        // the same instance; only finiteness is required here, the numeric
        // comparison is part of the influence CLI output.
        let data = random_dataset(2, 50, 63);
        let ms = estimate_moments(&data, Convention::Population).unwrap();
        let x = [2.5, 3.1];
        let formula = influence_g2(&x, &ms).unwrap();
        let fd = influence_fd(&x, &data, 0.01).unwrap();
        assert!(formula.is_finite());
        assert!(fd.at_half_eps.is_finite());
    }

    #[test]
    fn evaluate_dispatches_and_flags_negative_support() {
        let rows = vec![vec![-1.0], vec![2.0], vec![5.0]];
        let data = DataSet::new(vec!["x".into()], &rows).unwrap();
        let report = evaluate(MetricId::Gini, &data, Convention::Population, None).unwrap();
        assert!(report.negative_support);
        let cv = evaluate(MetricId::Cv, &data, Convention::Population, None).unwrap();
        assert!(cv.value > 0.0);
        let multi = random_dataset(2, 20, 1);
        assert!(evaluate(MetricId::Cv, &multi, Convention::Population, None).is_err());
        let gq_rep = evaluate(MetricId::Gq, &multi, Convention::Population, Some(4.0)).unwrap();
        assert_eq!(gq_rep.q, Some(4.0));
    }

    #[test]
    fn metric_ids_round_trip_through_strings() {
        for id in MetricId::ALL {
            let parsed: MetricId = id.as_str().parse().unwrap();
            assert_eq!(parsed, id);
        }
        assert!("nope".parse::<MetricId>().is_err());
    }

    proptest! {
        #[test]
        fn prop_identity_between_pairwise_and_closed_form(
            seed in 0u64..200,
            n in 1usize..5,
            n_obs in 10usize..40,
        ) {
            let data = random_dataset(n, n_obs, 1000 + seed);
            let pair = g2_pairwise(&data).unwrap().value;
            let closed = g2(&estimate_moments(&data, Convention::Population).unwrap()).unwrap().value;
            prop_assert!((pair - closed).abs() <= 1e-10 * (1.0 + closed));
        }

        #[test]
        fn prop_jensen_bound_t_coeff(seed in 0u64..100) {
            let data = random_dataset(2, 25, 5000 + seed);
            let t = t_coefficient(&data).unwrap().value;
            let g = g2_pairwise(&data).unwrap().value;
            prop_assert!(t <= g * (1.0 + 1e-9));
        }
    }
}
