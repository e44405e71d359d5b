use serde::{Deserialize, Serialize};

use super::series::ErrorSeries;
use crate::error::{Error, Result};

/// Exponential fit y ≈ A·e^{−rate·t} of a decaying channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    /// Fitted time window [t₀, t₁].
    pub window: (f64, f64),
    /// RMS residual of the line in log space.
    pub residual: f64,
    /// Level below which samples were treated as floor and ignored.
    pub floor: f64,
    pub samples: usize,
}

/// Least-squares slope and intercept of y over x.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Fits the decay rate of `channel` between the end of the transient (the
/// sample after the global maximum) and the floor, the first sample at or
/// below `floor_factor` times the terminal value. A channel that never
/// rises `floor_factor` above its terminal value has no floor and is fitted
/// to the end.
pub fn fit_decay(series: &ErrorSeries, channel: &str, floor_factor: f64) -> Result<DecayFit> {
    fit_decay_samples(series.time(), series.channel(channel)?, floor_factor)
}

pub fn fit_decay_samples(t: &[f64], y: &[f64], floor_factor: f64) -> Result<DecayFit> {
    if !(floor_factor >= 1.0) {
        return Err(Error::Domain(format!(
            "floor factor {floor_factor} must be >= 1"
        )));
    }
    let n = t.len().min(y.len());
    if n == 0 {
        return Err(Error::Empty("decay fit of an empty series".into()));
    }
    let imax = (0..n).fold(0, |best, i| if y[i] > y[best] { i } else { best });
    let start = (imax + 1).min(n - 1);
    let terminal = y[n - 1];
    let floor = floor_factor * terminal;
    let has_floor = y[imax] >= floor && terminal > 0.0 && floor_factor > 1.0;
    let mut end = n;
    for i in start..n {
        if y[i] <= 0.0 || (has_floor && y[i] <= floor) {
            end = i;
            break;
        }
    }
    if end < start + 5 {
        return Err(Error::Precondition(format!(
            "decay window has {} samples, need at least 5",
            end.saturating_sub(start)
        )));
    }
    let x = &t[start..end];
    let ly: Vec<f64> = y[start..end].iter().map(|v| v.ln()).collect();
    let (slope, icpt) = line_fit(x, &ly);
    let rss: f64 = x
        .iter()
        .zip(&ly)
        .map(|(&a, &b)| (b - (icpt + slope * a)).powi(2))
        .sum();
    Ok(DecayFit {
        rate: -slope,
        window: (x[0], x[x.len() - 1]),
        residual: (rss / x.len() as f64).sqrt(),
        floor: if has_floor { floor } else { 0.0 },
        samples: x.len(),
    })
}

/// Outcome of the sliding-window decay test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowedDecay {
    /// Largest (least negative) log-slope over the checked windows.
    pub worst_slope: f64,
    pub windows: usize,
    /// Time at which the floor was reached, if it was.
    pub floor_time: Option<f64>,
    pub pass: bool,
}

/// Checks that every window of `width` consecutive samples, from the end of
/// the transient until the first sample at or below `floor`, has a
/// log-slope of at most `−min_rate`.
pub fn windowed_decay_check(
    t: &[f64],
    y: &[f64],
    width: usize,
    min_rate: f64,
    floor: f64,
) -> Result<WindowedDecay> {
    if width < 2 {
        return Err(Error::Domain(
            "decay window needs at least 2 samples".into(),
        ));
    }
    let n = t.len().min(y.len());
    if n == 0 {
        return Err(Error::Empty("decay check of an empty series".into()));
    }
    let imax = (0..n).fold(0, |best, i| if y[i] > y[best] { i } else { best });
    let mut end = n;
    let mut floor_time = None;
    for i in imax..n {
        if y[i] <= floor.max(0.0) {
            end = i;
            floor_time = Some(t[i]);
            break;
        }
    }
    let mut worst = f64::NEG_INFINITY;
    let mut windows = 0;
    let mut s = imax;
    while s + width <= end {
        let ly: Vec<f64> = y[s..s + width].iter().map(|v| v.ln()).collect();
        let (slope, _) = line_fit(&t[s..s + width], &ly);
        worst = worst.max(slope);
        windows += 1;
        s += 1;
    }
    Ok(WindowedDecay {
        worst_slope: worst,
        windows,
        floor_time,
        pass: windows > 0 && worst <= -min_rate,
    })
}

/// Decay diagnostics of the error energy of a twin experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayAssessment {
    pub alpha: f64,
    pub initial: f64,
    pub terminal: f64,
    pub terminal_ratio: f64,
    pub fit: Option<DecayFit>,
    pub windowed: Option<WindowedDecay>,
    /// Floor below which the windowed check stops: ten times the double
    /// precision round-off level of the initial error energy.
    pub floor: f64,
    /// Required ratio terminal / initial.
    pub required_ratio: f64,
    /// Whether the windowed slopes and the fitted rate must reach 0.9·α.
    pub rate_required: bool,
    pub pass: bool,
}

impl DecayAssessment {
    pub fn of(
        series: &ErrorSeries,
        alpha: f64,
        rate_required: bool,
        required_ratio: f64,
    ) -> Result<Self> {
        let e = series.channel("err_energy")?;
        let (initial, terminal) = (e[0], e[e.len() - 1]);
        let ratio = if initial == 0.0 {
            0.0
        } else {
            terminal / initial
        };
        let floor = 10.0 * f64::EPSILON * initial;
        let fit = fit_decay(series, "err_energy", 10.0).ok();
        let windowed = windowed_decay_check(series.time(), e, 5, 0.9 * alpha, floor).ok();
        let rate_ok = !rate_required
            || initial == 0.0
            || (windowed.as_ref().is_some_and(|w| w.pass)
                && fit.as_ref().is_some_and(|f| f.rate >= 0.9 * alpha));
        let monotone = e.iter().all(|&x| x <= initial);
        Ok(Self {
            alpha,
            initial,
            terminal,
            terminal_ratio: ratio,
            fit,
            windowed,
            floor,
            required_ratio,
            rate_required,
            pass: ratio <= required_ratio && rate_ok && monotone,
        })
    }
}
