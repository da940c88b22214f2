//! One-step and iterated forecasting, RMSE scoring and rolling block evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::RandomForestModel;
use crate::timeseries::WindSeries;

/// Anything that maps a window of recent samples to the next sample.
pub trait Forecaster: Sync {
    fn window_len(&self) -> usize;
    fn predict_next(&self, window: &[f64]) -> Result<f64>;
}

impl Forecaster for RandomForestModel {
    fn window_len(&self) -> usize {
        self.m()
    }

    fn predict_next(&self, window: &[f64]) -> Result<f64> {
        self.predict(window)
    }
}

/// Repeats the last observed value.
#[derive(Debug, Clone, Copy)]
pub struct Persistence {
    pub window_len: usize,
}

impl Forecaster for Persistence {
    fn window_len(&self) -> usize {
        self.window_len
    }

    fn predict_next(&self, window: &[f64]) -> Result<f64> {
        window.last().copied().ok_or_else(|| Error::invalid("empty window"))
    }
}

fn check_window(model: &impl Forecaster, window: &[f64]) -> Result<()> {
    if window.len() != model.window_len() {
        return Err(Error::WindowLength {
            expected: model.window_len(),
            got: window.len(),
        });
    }
    Ok(())
}

pub fn predict_one_step(model: &impl Forecaster, window: &[f64]) -> Result<f64> {
    check_window(model, window)?;
    model.predict_next(window)
}

/// Iterated forecast: each prediction is appended to the window and the
/// oldest entry dropped before the next step.
pub fn predict_horizon(model: &impl Forecaster, window: &[f64], steps: usize) -> Result<Vec<f64>> {
    check_window(model, window)?;
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    let m = window.len();
    let mut buf = Vec::with_capacity(m + steps);
    buf.extend_from_slice(window);
    for k in 0..steps {
        let next = model.predict_next(&buf[k..k + m])?;
        buf.push(next);
    }
    Ok(buf.split_off(m))
}

pub fn persistence_forecast(window: &[f64], steps: usize) -> Result<Vec<f64>> {
    let last = *window.last().ok_or_else(|| Error::invalid("empty window"))?;
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    Ok(vec![last; steps])
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::invalid("rmse of an empty sample"));
    }
    if let Some(i) = actual.iter().chain(predicted).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let sse: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok((sse / actual.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendLine {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least-squares line through `(x, y)` points.
pub fn trend_fit(points: &[(f64, f64)]) -> Result<TrendLine> {
    if points.len() < 2 {
        return Err(Error::invalid("trend fit needs at least two points"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("trend fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    Ok(TrendLine {
        slope,
        intercept: my - slope * mx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub first_test_index: usize,
    pub stride: usize,
    pub horizon_steps: usize,
    pub block_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockResult {
    pub block_index: usize,
    pub test_start_index: usize,
    pub horizon_steps: usize,
    /// RMSE of the final-step forecasts in the block.
    pub rmse: f64,
    pub n_forecasts: usize,
    /// RMSE at each intermediate step `1..=horizon_steps`.
    pub step_rmse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub windows: Vec<BlockResult>,
    pub average_rmse: f64,
    /// `None` with a single block.
    pub trend: Option<TrendLine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalSummary {
    pub average_rmse: f64,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub n_blocks: usize,
    pub horizon_steps: usize,
}

/// Rolling block evaluation. Block `b` covers samples
/// `[s_b, s_b + block_len)` with `s_b = first_test_index + b * stride`; every
/// origin `o` in the block whose final target `o + horizon - 1` also falls in
/// the block is forecast from the recorded samples `[o - m, o)`. Only blocks
/// that fit entirely inside the series are scored.
pub fn rolling_evaluate(model: &impl Forecaster, series: &WindSeries, options: &EvalOptions) -> Result<EvalReport> {
    let m = model.window_len();
    let EvalOptions {
        first_test_index,
        stride,
        horizon_steps: h,
        block_len,
    } = *options;
    if first_test_index < m {
        return Err(Error::invalid(format!(
            "first_test_index {first_test_index} precedes the first full window (m = {m})"
        )));
    }
    if stride == 0 || h == 0 {
        return Err(Error::invalid("stride and horizon_steps must be at least 1"));
    }
    if block_len < h {
        return Err(Error::invalid(format!(
            "block_len {block_len} is shorter than the horizon {h}"
        )));
    }
    let n = series.len();
    if first_test_index + block_len > n {
        return Err(Error::InsufficientData {
            needed: first_test_index + block_len,
            available: n,
        });
    }
    let n_blocks = (n - first_test_index - block_len) / stride + 1;
    let values = series.values();

    let windows: Vec<BlockResult> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let start = first_test_index + b * stride;
            let origins = start..=start + block_len - h;
            let count = block_len - h + 1;
            let mut finals = Vec::with_capacity(count);
            let mut sse = vec![0.0; h];
            for o in origins {
                let path = predict_horizon(model, &values[o - m..o], h)?;
                for (k, p) in path.iter().enumerate() {
                    let e = values[o + k] - p;
                    sse[k] += e * e;
                }
                finals.push(path[h - 1]);
            }
            let actual = &values[start + h - 1..start + block_len];
            Ok(BlockResult {
                block_index: b,
                test_start_index: start,
                horizon_steps: h,
                rmse: rmse(actual, &finals)?,
                n_forecasts: count,
                step_rmse: sse.iter().map(|s| (s / count as f64).sqrt()).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let average_rmse = windows.iter().map(|w| w.rmse).sum::<f64>() / windows.len() as f64;
    let trend = if windows.len() >= 2 {
        let points: Vec<(f64, f64)> = windows.iter().map(|w| (w.block_index as f64, w.rmse)).collect();
        Some(trend_fit(&points)?)
    } else {
        None
    };
    Ok(EvalReport {
        windows,
        average_rmse,
        trend,
    })
}

impl EvalReport {
    pub fn summary(&self) -> EvalSummary {
        EvalSummary {
            average_rmse: self.average_rmse,
            slope: self.trend.map(|t| t.slope),
            intercept: self.trend.map(|t| t.intercept),
            n_blocks: self.windows.len(),
            horizon_steps: self.windows.first().map_or(0, |w| w.horizon_steps),
        }
    }

    /// `block_index,test_start_index,horizon_steps,rmse`
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "block_index,test_start_index,horizon_steps,rmse")?;
        for w in &self.windows {
            writeln!(out, "{},{},{},{}", w.block_index, w.test_start_index, w.horizon_steps, w.rmse)?;
        }
        out.flush()
    }

    /// `block_index,step,rmse` for every intermediate step.
    pub fn write_step_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "block_index,step,rmse")?;
        for w in &self.windows {
            for (k, r) in w.step_rmse.iter().enumerate() {
                writeln!(out, "{},{},{}", w.block_index, k + 1, r)?;
            }
        }
        out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Constant(f64, usize);

    impl Forecaster for Constant {
        fn window_len(&self) -> usize {
            self.1
        }
        fn predict_next(&self, _: &[f64]) -> Result<f64> {
            Ok(self.0)
        }
    }

    /// Predicts the mean of the window.
    struct WindowMean(usize);

    impl Forecaster for WindowMean {
        fn window_len(&self) -> usize {
            self.0
        }
        fn predict_next(&self, w: &[f64]) -> Result<f64> {
            Ok(w.iter().sum::<f64>() / w.len() as f64)
        }
    }

    #[test]
    fn one_step_delegates() {
        assert_eq!(predict_one_step(&Constant(4.0, 3), &[1.0, 2.0, 3.0]).unwrap(), 4.0);
        assert!(matches!(
            predict_one_step(&Constant(4.0, 3), &[1.0]),
            Err(Error::WindowLength { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn horizon_feeds_back_predictions() {
        let path = predict_horizon(&WindowMean(2), &[1.0, 3.0], 3).unwrap();
        // [1,3] -> 2 ; [3,2] -> 2.5 ; [2,2.5] -> 2.25
        assert_eq!(path, vec![2.0, 2.5, 2.25]);
        assert_eq!(predict_horizon(&Constant(7.0, 2), &[0.0, 0.0], 4).unwrap(), vec![7.0; 4]);
        assert_eq!(
            predict_horizon(&WindowMean(2), &[1.0, 3.0], 1).unwrap(),
            vec![predict_one_step(&WindowMean(2), &[1.0, 3.0]).unwrap()]
        );
        assert!(predict_horizon(&WindowMean(2), &[1.0, 3.0], 0).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 3.535_533_905_932_737_6).abs() < 1e-15);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn trend_examples() {
        let pts: Vec<(f64, f64)> = (0..6).map(|x| (x as f64, 2.0 * x as f64 + 1.0)).collect();
        let t = trend_fit(&pts).unwrap();
        assert!((t.slope - 2.0).abs() < 1e-12 && (t.intercept - 1.0).abs() < 1e-12);
        let flat = trend_fit(&[(0.0, 1.5), (1.0, 1.5), (2.0, 1.5)]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert!(trend_fit(&[(1.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(trend_fit(&[(1.0, 2.0)]).is_err());
    }

    #[test]
    fn persistence_examples() {
        assert_eq!(persistence_forecast(&[1.0, 4.2], 3).unwrap(), vec![4.2; 3]);
        assert_eq!(persistence_forecast(&[9.0, 5.0], 1).unwrap(), vec![5.0]);
        assert!(persistence_forecast(&[], 1).is_err());
        let series = WindSeries::from_values(vec![3.0; 50]).unwrap();
        for h in 1..5 {
            let r = rolling_evaluate(
                &Persistence { window_len: 4 },
                &series,
                &EvalOptions { first_test_index: 4, stride: 10, horizon_steps: h, block_len: 10 },
            )
            .unwrap();
            assert!(r.windows.iter().all(|w| w.rmse == 0.0));
        }
    }

    #[test]
    fn single_block_by_hand() {
        // series 0..10, window-mean model with m = 2, horizon 1, block [4, 8)
        let series = WindSeries::from_values((0..10).map(f64::from).collect()).unwrap();
        let r = rolling_evaluate(
            &WindowMean(2),
            &series,
            &EvalOptions { first_test_index: 4, stride: 100, horizon_steps: 1, block_len: 4 },
        )
        .unwrap();
        // forecasts for targets 4..7 are means of (t-2, t-1) = t - 1.5: every error 1.5
        assert_eq!(r.windows.len(), 1);
        assert_eq!(r.windows[0].n_forecasts, 4);
        assert_eq!(r.windows[0].rmse, 1.5);
        assert_eq!(r.average_rmse, 1.5);
        assert!(r.trend.is_none());
    }

    #[test]
    fn horizon_two_block_by_hand() {
        let series = WindSeries::from_values((0..12).map(f64::from).collect()).unwrap();
        let r = rolling_evaluate(
            &WindowMean(2),
            &series,
            &EvalOptions { first_test_index: 2, stride: 4, horizon_steps: 2, block_len: 4 },
        )
        .unwrap();
        // origin o: window (o-2, o-1) -> o-1.5, then (o-1, o-1.5) -> o-1.25 vs actual o+1: error 2.25
        assert_eq!(r.windows.len(), 2);
        for w in &r.windows {
            assert_eq!(w.n_forecasts, 3);
            assert_eq!(w.rmse, 2.25);
            assert_eq!(w.step_rmse, vec![1.5, 2.25]);
        }
        let t = r.trend.unwrap();
        assert_eq!(t.slope, 0.0);
    }

    #[test]
    fn evaluation_errors() {
        let series = WindSeries::from_values(vec![1.0; 20]).unwrap();
        let model = Constant(1.0, 4);
        let opts = |first, stride, h, block| EvalOptions { first_test_index: first, stride, horizon_steps: h, block_len: block };
        assert!(rolling_evaluate(&model, &series, &opts(2, 5, 1, 5)).is_err());
        assert!(rolling_evaluate(&model, &series, &opts(4, 0, 1, 5)).is_err());
        assert!(rolling_evaluate(&model, &series, &opts(4, 5, 6, 5)).is_err());
        assert!(rolling_evaluate(&model, &series, &opts(16, 5, 1, 5)).is_err());
        assert!(rolling_evaluate(&model, &series, &opts(15, 5, 1, 5)).is_ok());
    }

    proptest! {
        #[test]
        fn horizon_prefix_consistency(w in prop::collection::vec(0.0f64..20.0, 3), a in 1usize..6, b in 1usize..6) {
            let model = WindowMean(3);
            let long = predict_horizon(&model, &w, a + b).unwrap();
            let short = predict_horizon(&model, &w, a).unwrap();
            prop_assert_eq!(&long[..a], &short[..]);
        }

        #[test]
        fn report_average_is_mean_of_blocks(vals in prop::collection::vec(0.0f64..25.0, 40..120), h in 1usize..4, stride in 3usize..15) {
            let series = WindSeries::from_values(vals).unwrap();
            let r = rolling_evaluate(&WindowMean(3), &series, &EvalOptions { first_test_index: 3, stride, horizon_steps: h, block_len: 8 }).unwrap();
            let mean = r.windows.iter().map(|w| w.rmse).sum::<f64>() / r.windows.len() as f64;
            prop_assert_eq!(r.average_rmse, mean);
            prop_assert!(r.windows.iter().all(|w| w.n_forecasts >= 1));
        }
    }
}
