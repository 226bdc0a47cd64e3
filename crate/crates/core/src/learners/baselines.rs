//! The forecasting baseline: continue the pre-event series with an
//! autoregressive model and difference the implied line against the
//! before fit.
//!
//! Per episode, an AR(p) with drift (intercept plus deterministic time
//! trend) is fit by least squares on the raw history block. The order is
//! chosen by AIC over `0..=max_order`, with all candidates scored on a
//! common sample (the rows available to the largest order) and the winner
//! refit on its full sample. Candidates whose lag polynomial is
//! non-stationary are rejected: an explosive fit on nine points says more
//! about the window than the series, and its forecasts are unbounded.
//! Forecasts roll forward through the buffer to the end of the window; a
//! line fit over the after grid minus the before fit gives the predicted
//! deltas.
//!
//! Mean and no-change baselines are simple enough to live in the model
//! dispatch directly.

use nalgebra::DMatrix;

use super::LearnError;
use crate::exec;
use crate::rdd;

#[derive(Clone, Debug, PartialEq)]
pub struct ArFit {
    pub order: usize,
    pub intercept: f64,
    pub trend: f64,
    pub coeffs: Vec<f64>,
}

/// Spectral radius of the AR companion matrix must stay inside the unit
/// circle.
fn is_stationary(coeffs: &[f64]) -> bool {
    let p = coeffs.len();
    if p == 0 {
        return true;
    }
    let mut companion = DMatrix::zeros(p, p);
    for (j, &c) in coeffs.iter().enumerate() {
        companion[(0, j)] = c;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .all(|ev| ev.norm() < 1.0 - 1e-6)
}

/// Least-squares AR(p) with drift on `series[start..]`, where `times[t]` is
/// the time coordinate of `series[t]`. Returns `(fit, rss, n_rows)`.
fn fit_ar_fixed(
    series: &[f64],
    times: &[f64],
    p: usize,
    start: usize,
) -> Option<(ArFit, f64, usize)> {
    let n = series.len();
    if start < p || n <= start {
        return None;
    }
    let rows = n - start;
    let cols = p + 2;
    if rows < cols {
        return None;
    }
    let design = DMatrix::from_fn(rows, cols, |r, c| match c {
        0 => 1.0,
        1 => times[start + r],
        lag => series[start + r - (lag - 1)],
    });
    let response = DMatrix::from_fn(rows, 1, |r, _| series[start + r]);
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * &response;
    let solution = gram.lu().solve(&rhs)?;
    if solution.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let residual = &design * &solution - &response;
    let rss = residual.norm_squared().max(0.0);
    let fit = ArFit {
        order: p,
        intercept: solution[(0, 0)],
        trend: solution[(1, 0)],
        coeffs: (2..cols).map(|c| solution[(c, 0)]).collect(),
    };
    is_stationary(&fit.coeffs).then_some((fit, rss, rows))
}

/// AIC order selection over `0..=max_order` with stationarity screening;
/// candidates share the sample of the largest order and ties go to the
/// smaller order.
pub fn fit_ar_aic(series: &[f64], times: &[f64], max_order: usize) -> Result<ArFit, LearnError> {
    let n = series.len();
    if n < 3 || times.len() != n {
        return Err(LearnError::ArFit(format!(
            "need at least 3 history points with matching times, got {n}"
        )));
    }
    // largest order with room for its parameters plus one residual dof
    let feasible_max = (0..=max_order)
        .rev()
        .find(|&q| n >= q + q + 3)
        .unwrap_or(0);

    let mut best: Option<(f64, usize)> = None;
    for p in 0..=feasible_max {
        let Some((_, rss, rows)) = fit_ar_fixed(series, times, p, feasible_max) else {
            continue;
        };
        let m = rows as f64;
        // variance floor: below numerical precision all fits tie, letting
        // the parameter penalty pick the smallest adequate order
        let sigma2 = (rss / m).max(1e-12);
        let aic = m * sigma2.ln() + 2.0 * (p as f64 + 2.0);
        let better = match best {
            None => true,
            Some((best_aic, _)) => aic < best_aic,
        };
        if better {
            best = Some((aic, p));
        }
    }
    let (_, order) = best
        .ok_or_else(|| LearnError::ArFit("no stationary autoregressive fit".to_owned()))?;

    let (fit, _, _) = fit_ar_fixed(series, times, order, order)
        .or_else(|| fit_ar_fixed(series, times, order, feasible_max))
        .ok_or_else(|| LearnError::ArFit("refit failed".to_owned()))?;
    Ok(fit)
}

/// Roll the AR recursion forward from the end of `history` onto
/// `future_times`.
pub fn forecast(fit: &ArFit, history: &[f64], future_times: &[f64]) -> Vec<f64> {
    let mut extended = history.to_vec();
    let mut out = Vec::with_capacity(future_times.len());
    for &t in future_times {
        let mut next = fit.intercept + fit.trend * t;
        for (lag, coeff) in fit.coeffs.iter().enumerate() {
            let idx = extended.len() - 1 - lag;
            next += coeff * extended[idx];
        }
        extended.push(next);
        out.push(next);
    }
    out
}

/// Per-row forecasting-baseline predictions over the raw feature matrix.
pub fn forecast_predict(
    x: &DMatrix<f64>,
    block_offset: usize,
    block_len: usize,
    history_offsets: &[i64],
    after_offsets: &[i64],
    max_ar_order: usize,
) -> Result<DMatrix<f64>, LearnError> {
    if history_offsets.len() != block_len || block_offset + block_len > x.ncols() {
        return Err(LearnError::MissingHistoryBlock);
    }
    let last_before = *history_offsets
        .last()
        .ok_or(LearnError::MissingHistoryBlock)?;
    let last_after = *after_offsets.last().ok_or(LearnError::MissingHistoryBlock)?;
    let future_times: Vec<f64> = ((last_before + 1)..=last_after).map(|t| t as f64).collect();

    let indices: Vec<usize> = (0..x.nrows()).collect();
    let rows = exec::map_items(&indices, |&i| -> Result<[f64; 2], LearnError> {
        let history: Vec<f64> = (0..block_len).map(|j| x[(i, block_offset + j)]).collect();
        let times: Vec<f64> = history_offsets.iter().map(|&t| t as f64).collect();
        let points: Vec<(f64, f64)> = times.iter().copied().zip(history.iter().copied()).collect();
        let before_fit =
            rdd::fit_segment(&points).map_err(|e| LearnError::ArFit(e.to_string()))?;

        let ar = fit_ar_aic(&history, &times, max_ar_order)?;
        let future = forecast(&ar, &history, &future_times);
        let line_points: Vec<(f64, f64)> = after_offsets
            .iter()
            .map(|&t| {
                let idx = (t - last_before - 1) as usize;
                (t as f64, future[idx])
            })
            .collect();
        let forecast_fit =
            rdd::fit_segment(&line_points).map_err(|e| LearnError::ArFit(e.to_string()))?;
        Ok([
            forecast_fit.beta0 - before_fit.beta0,
            forecast_fit.beta1 - before_fit.beta1,
        ])
    });

    let mut out = DMatrix::zeros(x.nrows(), 2);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        out[(i, 0)] = row[0];
        out[(i, 1)] = row[1];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offsets(range: std::ops::RangeInclusive<i64>) -> Vec<f64> {
        range.map(|t| t as f64).collect()
    }

    #[test]
    fn flat_series_selects_order_zero_and_forecasts_the_level() {
        let series = vec![2.5; 9];
        let times = offsets(-9..=-1);
        let fit = fit_ar_aic(&series, &times, 3).unwrap();
        assert_eq!(fit.order, 0);
        let future = forecast(&fit, &series, &offsets(0..=9));
        assert!(future.iter().all(|v| (v - 2.5).abs() < 1e-9), "{future:?}");
    }

    #[test]
    fn exact_linear_series_continues_its_line() {
        let times = offsets(-9..=-1);
        let series: Vec<f64> = times.iter().map(|t| 0.4 * t + 2.0).collect();
        let fit = fit_ar_aic(&series, &times, 3).unwrap();
        assert_eq!(fit.order, 0);
        let future = forecast(&fit, &series, &offsets(0..=9));
        for (t, v) in (0..=9).zip(&future) {
            let expected = 0.4 * t as f64 + 2.0;
            assert!((v - expected).abs() < 1e-9, "t={t}: {v} vs {expected}");
        }
    }

    #[test]
    fn ar1_reversion_is_identified_on_detrended_noise() {
        // stationary AR(1) around a level, long enough to pin the order
        let mut series = vec![0.9];
        let mut state = 0.9f64;
        for i in 0..14 {
            // deterministic pseudo-noise
            let z = ((i * 37 + 11) % 17) as f64 / 17.0 - 0.5;
            state = 0.6 * state + z;
            series.push(state);
        }
        let times: Vec<f64> = (0..series.len()).map(|t| t as f64).collect();
        let fit = fit_ar_aic(&series, &times, 3).unwrap();
        assert!(fit.order >= 1, "picked order {}", fit.order);
        assert!(is_stationary(&fit.coeffs));
    }

    #[test]
    fn explosive_candidates_are_rejected() {
        assert!(is_stationary(&[0.8]));
        assert!(is_stationary(&[]));
        assert!(!is_stationary(&[1.05]));
        assert!(!is_stationary(&[0.9, 0.3]));
        assert!(is_stationary(&[0.5, -0.4]));
    }

    #[test]
    fn flat_history_rows_predict_zero_deltas() {
        let history_offsets: Vec<i64> = (-9..=-1).collect();
        let after_offsets: Vec<i64> = (1..=9).collect();
        let x = DMatrix::from_fn(3, 9, |_, _| 1.25);
        let pred = forecast_predict(&x, 0, 9, &history_offsets, &after_offsets, 3).unwrap();
        for v in pred.iter() {
            assert!(v.abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn trending_history_predicts_near_zero_deltas() {
        let history_offsets: Vec<i64> = (-9..=-1).collect();
        let after_offsets: Vec<i64> = (1..=9).collect();
        let x = DMatrix::from_fn(1, 9, |_, j| 0.4 * (j as f64 - 9.0) + 2.0);
        let pred = forecast_predict(&x, 0, 9, &history_offsets, &after_offsets, 3).unwrap();
        assert!(pred[(0, 0)].abs() < 1e-9, "delta0 {}", pred[(0, 0)]);
        assert!(pred[(0, 1)].abs() < 1e-9, "delta1 {}", pred[(0, 1)]);
    }
}
