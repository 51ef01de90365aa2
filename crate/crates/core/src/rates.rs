//! Decay-exponent estimation and decay-shape checks on energy traces.
//!
//! Every fit works in the coordinates `(log(1 + t), log E)`, matching the
//! `1 + t` origin shift of the multiplier weights.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::EnergyTrace;
use crate::multipliers::{coercivity_ratio, MultiplierParams};

/// Minimum number of subsamples a fit accepts.
pub const MIN_FIT_SAMPLES: usize = 8;

/// Number of log-spaced target points a fit draws from the window.
pub const FIT_TARGETS: usize = 96;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("window [{lo}, {hi}] is invalid: need 1 <= t_lo < t_hi")]
    BadWindow { lo: f64, hi: f64 },
    #[error("window [{lo}, {hi}] is outside the trace span [{first}, {last}]")]
    OutsideTrace {
        lo: f64,
        hi: f64,
        first: f64,
        last: f64,
    },
    #[error("energy {value} at t = {t} is not strictly positive; shrink the window")]
    NonPositive { t: f64, value: f64 },
    #[error("only {found} samples in the window, need at least {MIN_FIT_SAMPLES}")]
    TooFewSamples { found: usize },
}

/// Least-squares line through subsampled points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub alpha: f64,
    pub log_intercept: f64,
    pub rms_residual: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `-slope` of `log E` against `log(1 + t)`.
    pub alpha: f64,
    pub log_intercept: f64,
    pub window: [f64; 2],
    pub rms_residual: f64,
    pub sample_count: usize,
    /// Same fit restricted to local maxima of `E`; `None` when the window
    /// holds fewer than [`MIN_FIT_SAMPLES`] maxima.
    pub envelope: Option<LineFit>,
}

fn least_squares(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = points
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    LineFit {
        alpha: -slope,
        log_intercept: intercept,
        rms_residual: (ss / n).sqrt(),
        sample_count: points.len(),
    }
}

/// Picks up to `targets` indices whose `log(1 + t)` is closest to equally
/// spaced targets. `ts` must be sorted; the result is sorted and unique.
fn log_spaced_indices(ts: &[f64], targets: usize) -> Vec<usize> {
    if ts.is_empty() {
        return Vec::new();
    }
    let a = (1.0 + ts[0]).ln();
    let b = (1.0 + ts[ts.len() - 1]).ln();
    let mut out: Vec<usize> = Vec::with_capacity(targets);
    let mut cursor = 0;
    for k in 0..targets {
        let goal = if targets > 1 {
            a + (b - a) * k as f64 / (targets - 1) as f64
        } else {
            a
        };
        while cursor + 1 < ts.len() && (1.0 + ts[cursor + 1]).ln() <= goal {
            cursor += 1;
        }
        let pick = if cursor + 1 < ts.len()
            && ((1.0 + ts[cursor + 1]).ln() - goal).abs() < (goal - (1.0 + ts[cursor]).ln()).abs()
        {
            cursor + 1
        } else {
            cursor
        };
        if out.last() != Some(&pick) {
            out.push(pick);
        }
    }
    out
}

fn fit_points(ts: &[f64], es: &[f64]) -> Result<LineFit, RateError> {
    let idx = log_spaced_indices(ts, FIT_TARGETS);
    if idx.len() < MIN_FIT_SAMPLES {
        return Err(RateError::TooFewSamples { found: idx.len() });
    }
    let pts: Vec<(f64, f64)> = idx
        .iter()
        .map(|&i| ((1.0 + ts[i]).ln(), es[i].ln()))
        .collect();
    Ok(least_squares(&pts))
}

/// Fits `E(t) ~ C (1 + t)^(-alpha)` on `[t_lo, t_hi]` over raw `(t, E)`
/// columns sorted by `t`.
pub fn fit_decay_rate_series(ts: &[f64], es: &[f64], window: [f64; 2]) -> Result<RateFit, RateError> {
    let [lo, hi] = window;
    if !(lo >= 1.0 && hi > lo) {
        return Err(RateError::BadWindow { lo, hi });
    }
    let (first, last) = match (ts.first(), ts.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(RateError::TooFewSamples { found: 0 }),
    };
    let slack = 1e-9 * hi.max(1.0);
    if lo < first - slack || hi > last + slack {
        return Err(RateError::OutsideTrace { lo, hi, first, last });
    }
    let start = ts.partition_point(|&t| t < lo - slack);
    let end = ts.partition_point(|&t| t <= hi + slack);
    let (wt, we) = (&ts[start..end], &es[start..end]);
    if let Some(i) = we.iter().position(|&e| !(e > 0.0)) {
        return Err(RateError::NonPositive { t: wt[i], value: we[i] });
    }
    let plain = fit_points(wt, we)?;

    let mut mt = Vec::new();
    let mut me = Vec::new();
    for i in 1..we.len().saturating_sub(1) {
        if we[i] >= we[i - 1] && we[i] >= we[i + 1] && (we[i] > we[i - 1] || we[i] > we[i + 1]) {
            mt.push(wt[i]);
            me.push(we[i]);
        }
    }
    let envelope = fit_points(&mt, &me).ok();

    Ok(RateFit {
        alpha: plain.alpha,
        log_intercept: plain.log_intercept,
        window,
        rms_residual: plain.rms_residual,
        sample_count: plain.sample_count,
        envelope,
    })
}

pub fn fit_decay_rate(trace: &EnergyTrace, window: [f64; 2]) -> Result<RateFit, RateError> {
    let ts: Vec<f64> = trace.samples.iter().map(|s| s.t).collect();
    let es: Vec<f64> = trace.samples.iter().map(|s| s.energy).collect();
    fit_decay_rate_series(&ts, &es, window)
}

/// Behaviour of `E(t) (1 + t)^exponent` over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEnergyBound {
    pub exponent: f64,
    pub window: [f64; 2],
    pub sup: f64,
    pub sup_t: f64,
    /// Value at the first sample of the window.
    pub first: f64,
    pub last: f64,
    /// `last / first`.
    pub trend_ratio: f64,
    /// `sup / first`.
    pub sup_ratio: f64,
}

/// Scans `E (1 + t)^exponent` over the samples inside `window`. An empty
/// window yields NaN fields.
pub fn bounded_weighted_energy(trace: &EnergyTrace, exponent: f64, window: [f64; 2]) -> WeightedEnergyBound {
    let vals: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.t >= window[0] - 1e-9 && s.t <= window[1] + 1e-9)
        .map(|s| (s.t, s.energy * (1.0 + s.t).powf(exponent)))
        .collect();
    let first = vals.first().map_or(f64::NAN, |v| v.1);
    let last = vals.last().map_or(f64::NAN, |v| v.1);
    let (sup_t, sup) = vals
        .iter()
        .copied()
        .fold((f64::NAN, f64::NAN), |acc, v| if acc.1.is_nan() || v.1 > acc.1 { v } else { acc });
    WeightedEnergyBound {
        exponent,
        window,
        sup,
        sup_t,
        first,
        last,
        trend_ratio: last / first,
        sup_ratio: sup / first,
    }
}

/// Ingredients of the empirical constant `C` in
/// `f X² - C g X - C <= 0`, `X = sqrt(E)`.
///
/// Over `t >= t_start`, `lyap_combo <= C16`, `||u|| <= U` and the
/// combination is coercive with ratio `c`, that is
/// `lyap_combo >= c f E - g ||u|| ||u_t||`. Then
/// `c f X² - sqrt(2) U g X <= C16`, so `C = max(C16, sqrt(2) U) / c`
/// satisfies the quadratic inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticConstant {
    pub t_start: f64,
    pub combo_sup: f64,
    pub u_sup: f64,
    pub coercivity: f64,
    pub c_est: f64,
}

/// Estimates `C` from the trace. `t_start` is raised to the time where the
/// coercivity ratio reaches 1/2.
pub fn estimate_quadratic_constant(
    trace: &EnergyTrace,
    params: &MultiplierParams,
    l2: f64,
    t_start: f64,
) -> QuadraticConstant {
    let t_start = t_start.max(crate::multipliers::coercivity_half_time(params, l2));
    let mut combo_sup = 0.0f64;
    let mut u_sup = 0.0f64;
    for s in trace.samples.iter().filter(|s| s.t >= t_start) {
        combo_sup = combo_sup.max(s.lyap_combo);
        u_sup = u_sup.max(s.u_l2.sqrt());
    }
    let coercivity = coercivity_ratio(params, l2, t_start);
    QuadraticConstant {
        t_start,
        combo_sup,
        u_sup,
        coercivity,
        c_est: combo_sup.max(std::f64::consts::SQRT_2 * u_sup) / coercivity,
    }
}

/// Largest root of `f X² - C g X - C = 0`.
pub fn quadratic_root(c: f64, f: f64, g: f64) -> f64 {
    (c * g + (c * c * g * g + 4.0 * c * f).sqrt()) / (2.0 * f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticBoundReport {
    pub pass: bool,
    pub c_est: f64,
    pub t_start: f64,
    pub samples_checked: usize,
    /// Smallest `bound - sqrt(E)`.
    pub min_margin: f64,
    pub worst_t: f64,
}

/// Checks `sqrt(E) <= [C g + sqrt(C² g² + 4 C f)] / (2 f)` at every sample
/// with `t >= t_start`.
pub fn quadratic_bound_check(
    trace: &EnergyTrace,
    params: &MultiplierParams,
    c_est: f64,
    t_start: f64,
) -> QuadraticBoundReport {
    let mut report = QuadraticBoundReport {
        pass: true,
        c_est,
        t_start,
        samples_checked: 0,
        min_margin: f64::INFINITY,
        worst_t: f64::NAN,
    };
    for s in trace.samples.iter().filter(|s| s.t >= t_start) {
        let bound = quadratic_root(c_est, params.f(s.t), params.g(s.t));
        let x = s.energy.max(0.0).sqrt();
        let margin = bound - x;
        report.samples_checked += 1;
        if margin < report.min_margin {
            report.min_margin = margin;
            report.worst_t = s.t;
        }
        if !(x <= bound * (1.0 + 1e-12)) {
            report.pass = false;
        }
    }
    report
}
