//! Short-horizon temperature forecasting.
//!
//! [`MlrPredictor`] fits one autoregressive multiple linear regression per
//! horizon `k`:
//!
//! ```text
//! T_i(t + k) ~ b0 + b1*T_i(t) + b2*T_i(t - 1) + ... + bw*T_i(t - w + 1)
//! ```
//!
//! By default the coefficients are shared by every module (pooled), which
//! multiplies the training rows by `N`. The least-squares problem is solved
//! with a small ridge term through an SVD of the augmented design matrix,
//! so collinear lags on flat or linear traces stay well defined.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermal::TemperatureField;

/// Anything that can forecast future temperature fields.
/// Passes of the iterated ridge solve; 1 is plain ridge.
const RIDGE_PASSES: usize = 8;

pub trait Forecaster {
    /// Feed the field measured at `field.time`.
    fn observe(&mut self, field: &TemperatureField) -> Result<()>;

    /// Fields for `now + k*step` for `k = 1..=horizon`.
    fn forecast(&self, now: f64, horizon: usize) -> Result<Vec<TemperatureField>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// One coefficient vector per horizon shared by all modules.
    Pooled,
    /// One coefficient vector per horizon per module.
    PerModule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    /// Number of lagged samples used as features.
    pub window: usize,
    /// Number of seconds ahead to forecast.
    pub horizon: usize,
    /// Number of past fields retained for training.
    pub history: usize,
    pub pooling: Pooling,
    pub ridge: f64,
    /// Refit after this many new observations. Defaults to `horizon + 1`.
    pub refit_every: Option<usize>,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            window: 5,
            horizon: 2,
            history: 60,
            pooling: Pooling::Pooled,
            ridge: 1e-8,
            refit_every: None,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let fail = |f: &str, m: String| Err(Error::config(format!("{prefix}.{f}"), m));
        if self.window < 1 {
            return fail("window", "must be >= 1".into());
        }
        if self.horizon < 1 {
            return fail("horizon", "must be >= 1".into());
        }
        if self.history < self.window + self.horizon + 1 {
            return fail(
                "history",
                format!(
                    "must be >= window + horizon + 1 = {}",
                    self.window + self.horizon + 1
                ),
            );
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return fail("ridge", "must be finite and >= 0".into());
        }
        if self.refit_every == Some(0) {
            return fail("refit_every", "must be >= 1".into());
        }
        Ok(())
    }

    pub fn refit_period(&self) -> usize {
        self.refit_every.unwrap_or(self.horizon + 1)
    }

    /// Fields needed before fitting: two base times for the longest
    /// horizon, otherwise time dynamics and per-module offsets are confounded.
    fn min_rows(&self) -> usize {
        self.window + self.horizon + 1
    }
}

/// Sliding history plus fitted coefficients.
#[derive(Debug, Clone)]
pub struct MlrPredictor {
    config: PredictorConfig,
    history: VecDeque<TemperatureField>,
    /// `[horizon - 1][model]`, each of length `window + 1` (intercept first).
    coefficients: Option<Vec<Vec<DVector<f64>>>>,
    since_fit: usize,
}

impl MlrPredictor {
    pub fn new(config: PredictorConfig) -> Result<Self> {
        config.validate("predictor")?;
        Ok(MlrPredictor {
            history: VecDeque::with_capacity(config.history),
            config,
            coefficients: None,
            since_fit: 0,
        })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    pub fn is_fitted(&self) -> bool {
        self.coefficients.is_some()
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Total number of fitted coefficients, zero when unfitted.
    pub fn coefficient_count(&self) -> usize {
        self.coefficients
            .as_ref()
            .map_or(0, |h| h.iter().flatten().map(|b| b.len()).sum())
    }

    /// Coefficients for horizon `k` (1-based), pooled model or module `module`.
    pub fn coefficients(&self, k: usize, module: usize) -> Option<&[f64]> {
        let per_h = self.coefficients.as_ref()?.get(k.checked_sub(1)?)?;
        let b = if per_h.len() == 1 {
            &per_h[0]
        } else {
            per_h.get(module)?
        };
        Some(b.as_slice())
    }

    /// Refits every horizon from the current history. Returns `false` and
    /// leaves the model unfitted when there are too few rows.
    pub fn fit(&mut self) -> bool {
        if self.history.len() < self.config.min_rows() {
            self.coefficients = None;
            return false;
        }
        let n_modules = self.history[0].len();
        let w = self.config.window;
        let models: Vec<Vec<usize>> = match self.config.pooling {
            Pooling::Pooled => vec![(0..n_modules).collect()],
            Pooling::PerModule => (0..n_modules).map(|i| vec![i]).collect(),
        };
        let coefficients = (1..=self.config.horizon)
            .map(|k| {
                models
                    .iter()
                    .map(|modules| self.solve(modules, k, w))
                    .collect()
            })
            .collect();
        self.coefficients = Some(coefficients);
        self.since_fit = 0;
        true
    }

    /// Regularised least squares on centred lag columns. The intercept
    /// comes back from the means and is not penalised.
    ///
    /// The ridge term is applied as iterated Tikhonov: `RIDGE_PASSES` ridge
    /// solves, each on the residual of the previous one. An eigen direction
    /// of `X^T X` with eigenvalue `e` ends with filter factor
    /// `1 - (lambda / (e + lambda))^k`, so well-determined directions lose
    /// `eps^k` instead of `eps`. Directions at rounding level are dropped.
    fn solve(&self, modules: &[usize], k: usize, w: usize) -> DVector<f64> {
        let len = self.history.len();
        let bases = (w - 1)..(len - k);
        let n_rows = bases.len() * modules.len();
        let mut x = DMatrix::<f64>::zeros(n_rows, w);
        let mut y = DVector::<f64>::zeros(n_rows);
        let mut row = 0;
        for t in bases {
            for &i in modules {
                for lag in 0..w {
                    x[(row, lag)] = self.history[t - lag].hot_side_temps[i];
                }
                y[row] = self.history[t + k].hot_side_temps[i];
                row += 1;
            }
        }
        let rows = n_rows as f64;
        let y_mean = y.sum() / rows;
        y.add_scalar_mut(-y_mean);
        let mut means = DVector::<f64>::zeros(w);
        for c in 0..w {
            let mut col = x.column_mut(c);
            means[c] = col.sum() / rows;
            col.add_scalar_mut(-means[c]);
        }

        // The Gram matrix is only w x w. Its symmetric eigensolver stays
        // accurate when lag columns are exactly collinear, where the SVD of
        // the tall matrix was seen to misreport the leading singular value.
        let eig = SymmetricEigen::new(x.tr_mul(&x));
        let e_max = eig.eigenvalues.max().max(0.0);
        let cutoff = f64::EPSILON * e_max * n_rows.max(w) as f64;
        let lambda = self.config.ridge;
        let mut beta = DVector::<f64>::zeros(w);
        for _ in 0..RIDGE_PASSES {
            // Residual taken from X itself, so each pass also refines away
            // the rounding of the Gram matrix.
            let g = x.tr_mul(&(&y - &x * &beta));
            for (j, &e) in eig.eigenvalues.iter().enumerate() {
                if e <= cutoff {
                    continue;
                }
                let v = eig.eigenvectors.column(j);
                beta.axpy(v.dot(&g) / (e + lambda), &v, 1.0);
            }
        }
        let mut coef = DVector::<f64>::zeros(w + 1);
        coef[0] = y_mean - beta.dot(&means);
        coef.rows_mut(1, w).copy_from(&beta);
        coef
    }

    fn persistence(&self, now: f64, horizon: usize) -> Result<Vec<TemperatureField>> {
        let last = self
            .history
            .back()
            .ok_or_else(|| Error::domain("predictor has no history"))?;
        let step = self.step();
        Ok((1..=horizon)
            .map(|k| TemperatureField {
                time: now + k as f64 * step,
                ..last.clone()
            })
            .collect())
    }

    fn step(&self) -> f64 {
        let n = self.history.len();
        if n >= 2 {
            let dt = self.history[n - 1].time - self.history[n - 2].time;
            if dt > 0.0 {
                return dt;
            }
        }
        1.0
    }
}

impl Forecaster for MlrPredictor {
    fn observe(&mut self, field: &TemperatureField) -> Result<()> {
        if let Some(first) = self.history.front() {
            if first.len() != field.len() {
                return Err(Error::domain(format!(
                    "field has {} modules, predictor history has {}",
                    field.len(),
                    first.len()
                )));
            }
        }
        if self.history.len() == self.config.history {
            self.history.pop_front();
        }
        self.history.push_back(field.clone());
        self.since_fit += 1;
        if self.history.len() >= self.config.min_rows()
            && (!self.is_fitted() || self.since_fit >= self.config.refit_period())
        {
            self.fit();
        }
        Ok(())
    }

    fn forecast(&self, now: f64, horizon: usize) -> Result<Vec<TemperatureField>> {
        let Some(coefficients) = &self.coefficients else {
            return self.persistence(now, horizon);
        };
        let last = self.history.back().expect("fitted predictor has history");
        let w = self.config.window;
        let len = self.history.len();
        let step = self.step();
        let ambient = last.ambient_temp;
        (1..=horizon)
            .map(|k| {
                // horizons past the fitted range reuse the longest model
                let per_h = &coefficients[k.min(coefficients.len()) - 1];
                let temps = (0..last.len())
                    .map(|i| {
                        let b = if per_h.len() == 1 {
                            &per_h[0]
                        } else {
                            &per_h[i]
                        };
                        let value = b[0]
                            + (0..w)
                                .map(|lag| {
                                    b[lag + 1] * self.history[len - 1 - lag].hot_side_temps[i]
                                })
                                .sum::<f64>();
                        if value.is_finite() {
                            value.max(ambient)
                        } else {
                            last.hot_side_temps[i]
                        }
                    })
                    .collect();
                Ok(TemperatureField {
                    time: now + k as f64 * step,
                    hot_side_temps: temps,
                    ambient_temp: ambient,
                })
            })
            .collect()
    }
}

/// Repeats the most recent field.
#[derive(Debug, Clone, Default)]
pub struct Persistence {
    last: Option<TemperatureField>,
    step: f64,
}

impl Forecaster for Persistence {
    fn observe(&mut self, field: &TemperatureField) -> Result<()> {
        if let Some(prev) = &self.last {
            self.step = field.time - prev.time;
        }
        self.last = Some(field.clone());
        Ok(())
    }

    fn forecast(&self, now: f64, horizon: usize) -> Result<Vec<TemperatureField>> {
        let last = self
            .last
            .as_ref()
            .ok_or_else(|| Error::domain("no history"))?;
        let step = if self.step > 0.0 { self.step } else { 1.0 };
        Ok((1..=horizon)
            .map(|k| TemperatureField {
                time: now + k as f64 * step,
                ..last.clone()
            })
            .collect())
    }
}

/// Replays the true future. Used to separate forecasting error from
/// decision logic in tests and ablations.
#[derive(Debug, Clone)]
pub struct PerfectForesight {
    fields: Vec<TemperatureField>,
}

impl PerfectForesight {
    pub fn new(fields: Vec<TemperatureField>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::domain("perfect foresight needs at least one field"));
        }
        Ok(PerfectForesight { fields })
    }
}

impl Forecaster for PerfectForesight {
    fn observe(&mut self, _field: &TemperatureField) -> Result<()> {
        Ok(())
    }

    fn forecast(&self, now: f64, horizon: usize) -> Result<Vec<TemperatureField>> {
        let idx = self.fields.partition_point(|f| f.time <= now + 1e-9);
        Ok((0..horizon)
            .map(|k| {
                let f = self
                    .fields
                    .get(idx + k)
                    .unwrap_or(&self.fields[self.fields.len() - 1]);
                f.clone()
            })
            .collect())
    }
}

/// Mean absolute percentage error in percent.
pub fn mape(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    Ok(ape_stats(actual, forecast)?.0)
}

/// `(MAPE, worst APE)`, both in percent.
fn ape_stats(actual: &[f64], forecast: &[f64]) -> Result<(f64, f64)> {
    if actual.len() != forecast.len() {
        return Err(Error::domain(format!(
            "{} actual values but {} forecasts",
            actual.len(),
            forecast.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::domain("MAPE needs at least one sample"));
    }
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    for (a, f) in actual.iter().zip(forecast) {
        if *a == 0.0 {
            return Err(Error::domain(
                "MAPE is undefined for an actual value of zero",
            ));
        }
        let ape = 100.0 * ((a - f) / a).abs();
        sum += ape;
        worst = worst.max(ape);
    }
    Ok((sum / actual.len() as f64, worst))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapeReport {
    /// MAPE (percent) for horizons `1..=t_p`.
    pub per_horizon: Vec<f64>,
    /// Number of (actual, forecast) pairs scored per horizon.
    pub n: usize,
    /// Largest single absolute percentage error over all horizons.
    pub worst: f64,
}

/// Walk-forward evaluation: after each observation, forecast ahead and
/// score the forecasts against the fields that actually follow. Only
/// forecasts made after the first fit are scored.
pub fn backtest(fields: &[TemperatureField], config: &PredictorConfig) -> Result<MapeReport> {
    let mut predictor = MlrPredictor::new(config.clone())?;
    let h = config.horizon;
    let mut actual: Vec<Vec<f64>> = vec![Vec::new(); h];
    let mut forecast: Vec<Vec<f64>> = vec![Vec::new(); h];
    for (t, field) in fields.iter().enumerate() {
        predictor.observe(field)?;
        if !predictor.is_fitted() {
            continue;
        }
        let ahead = predictor.forecast(field.time, h)?;
        for (k, predicted) in ahead.iter().enumerate() {
            if let Some(truth) = fields.get(t + k + 1) {
                actual[k].extend_from_slice(&truth.hot_side_temps);
                forecast[k].extend_from_slice(&predicted.hot_side_temps);
            }
        }
    }
    if actual[h - 1].is_empty() {
        return Err(Error::domain("trace too short to score any forecast"));
    }
    let mut per_horizon = Vec::with_capacity(h);
    let mut worst: f64 = 0.0;
    for k in 0..h {
        let (m, w) = ape_stats(&actual[k], &forecast[k])?;
        per_horizon.push(m);
        worst = worst.max(w);
    }
    Ok(MapeReport {
        per_horizon,
        n: actual[h - 1].len(),
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn field(t: f64, temps: Vec<f64>) -> TemperatureField {
        TemperatureField::new(t, temps, 20.0).unwrap()
    }

    fn linear_fields(n: usize, len: usize) -> Vec<TemperatureField> {
        (0..len)
            .map(|t| {
                let temps = (0..n)
                    .map(|i| 60.0 - i as f64 + (0.3 + 0.01 * i as f64) * t as f64)
                    .collect();
                field(t as f64, temps)
            })
            .collect()
    }

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            mape(&[100.0, 200.0], &[99.0, 202.0]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(mape(&[50.0], &[0.0]).unwrap(), 100.0, epsilon = 1e-12);
        assert!(mape(&[0.0], &[1.0]).is_err());
        assert!(mape(&[], &[]).is_err());
        assert!(mape(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(PredictorConfig::default().validate("p").is_ok());
        let bad = PredictorConfig {
            history: 7,
            ..Default::default()
        };
        assert!(bad.validate("p").is_err());
        let bad = PredictorConfig {
            window: 0,
            ..Default::default()
        };
        assert!(bad.validate("p").is_err());
    }

    #[test]
    fn persistence_before_fit() {
        let mut p = MlrPredictor::new(PredictorConfig::default()).unwrap();
        assert!(p.forecast(0.0, 2).is_err());
        let f = field(0.0, vec![80.0, 70.0]);
        p.observe(&f).unwrap();
        assert!(!p.is_fitted());
        let out = p.forecast(0.0, 2).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.iter().all(|g| g.hot_side_temps == f.hot_side_temps));
        assert_eq!(out[1].time, 2.0);
    }

    #[test]
    fn size_mismatch_rejected() {
        let mut p = MlrPredictor::new(PredictorConfig::default()).unwrap();
        p.observe(&field(0.0, vec![80.0, 70.0])).unwrap();
        assert!(p.observe(&field(1.0, vec![80.0])).is_err());
    }

    #[test]
    fn history_is_bounded() {
        let cfg = PredictorConfig {
            history: 10,
            ..Default::default()
        };
        let mut p = MlrPredictor::new(cfg).unwrap();
        for f in linear_fields(3, 25) {
            p.observe(&f).unwrap();
        }
        assert_eq!(p.history_len(), 10);
        assert!(p.is_fitted());
        assert_eq!(p.coefficient_count(), 2 * 6);
    }

    #[test]
    fn linear_trace_is_continued_exactly() {
        let fields = linear_fields(4, 40);
        let mut p = MlrPredictor::new(PredictorConfig::default()).unwrap();
        for f in &fields[..30] {
            p.observe(f).unwrap();
        }
        let ahead = p.forecast(29.0, 2).unwrap();
        for (k, g) in ahead.iter().enumerate() {
            for (a, b) in g.hot_side_temps.iter().zip(&fields[30 + k].hot_side_temps) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn constant_trace_predicts_constant() {
        let mut p = MlrPredictor::new(PredictorConfig::default()).unwrap();
        for t in 0..20 {
            p.observe(&field(t as f64, vec![75.0, 60.0, 45.0])).unwrap();
        }
        assert!(p.is_fitted());
        for g in p.forecast(19.0, 2).unwrap() {
            for (a, b) in g.hot_side_temps.iter().zip([75.0, 60.0, 45.0]) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn per_module_mode_fits_each_module() {
        let cfg = PredictorConfig {
            pooling: Pooling::PerModule,
            history: 30,
            ..Default::default()
        };
        let fields = linear_fields(3, 40);
        let mut p = MlrPredictor::new(cfg).unwrap();
        for f in &fields[..30] {
            p.observe(f).unwrap();
        }
        assert_eq!(p.coefficient_count(), 2 * 3 * 6);
        let ahead = p.forecast(29.0, 1).unwrap();
        for (a, b) in ahead[0]
            .hot_side_temps
            .iter()
            .zip(&fields[30].hot_side_temps)
        {
            assert_abs_diff_eq!(a, b, epsilon = 1e-5);
        }
    }

    #[test]
    fn forecasts_are_clamped_to_ambient() {
        // steep decline would extrapolate below the 20 degC ambient
        let mut p = MlrPredictor::new(PredictorConfig {
            window: 2,
            ..Default::default()
        })
        .unwrap();
        for t in 0..10 {
            p.observe(&field(
                t as f64,
                vec![20.0 + 9.0 * (9 - t) as f64 / 9.0 * 4.0],
            ))
            .unwrap();
        }
        let ahead = p.forecast(9.0, 2).unwrap();
        assert!(ahead.iter().all(|g| g.hot_side_temps[0] == 20.0));
    }

    #[test]
    fn identical_inputs_give_identical_coefficients() {
        let fields = linear_fields(5, 30);
        let mut a = MlrPredictor::new(PredictorConfig::default()).unwrap();
        let mut b = MlrPredictor::new(PredictorConfig::default()).unwrap();
        for f in &fields {
            a.observe(f).unwrap();
            b.observe(f).unwrap();
        }
        assert_eq!(a.coefficients(1, 0), b.coefficients(1, 0));
        assert_eq!(a.coefficients(2, 0), b.coefficients(2, 0));
    }

    #[test]
    fn backtest_on_linear_trace_is_zero() {
        let report = backtest(&linear_fields(6, 50), &PredictorConfig::default()).unwrap();
        assert_eq!(report.per_horizon.len(), 2);
        assert!(report.per_horizon.iter().all(|m| *m < 1e-6), "{report:?}");
        assert!(report.n > 0);
    }

    #[test]
    fn perfect_foresight_replays_future() {
        let fields = linear_fields(2, 10);
        let p = PerfectForesight::new(fields.clone()).unwrap();
        let ahead = p.forecast(3.0, 2).unwrap();
        assert_eq!(ahead[0], fields[4]);
        assert_eq!(ahead[1], fields[5]);
        let tail = p.forecast(9.0, 2).unwrap();
        assert_eq!(tail[1], fields[9]);
    }
}
