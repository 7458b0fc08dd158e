//! Checks of the averaged closed-loop behavior: the sign condition for
//! gradient ascent, the planar ascent law `d/dt c(p̄) = −γ ω⊥,0 ω⊥,1 sin φ ‖∇c‖`
//! with a fitted `γ`, helix-axis alignment in 3D and the on/off steering
//! response.
//!
//! `φ` is always the band-pass phase at the swimming frequency `ω`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{concentration, gradient, FieldSpec};
use crate::geometry::Vec3;
use crate::kinematics::SwimmerParams;
use crate::signaling::{harmonic_fit, quasi_steady_trend_fit, transfer_gain_phase, wrap_angle, FilterParams, FitError};
use crate::sim::{Trajectory, TrajectoryRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentReport {
    /// `ω⊥,0 · ω⊥,1 · sin φ`
    pub condition_value: f64,
    pub is_ascent: bool,
    pub gamma_fit: Option<f64>,
    /// Relative RMS error of the per-period fit.
    pub residual: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("trajectory is not planar: {0}")]
    NonPlanar(String),
    #[error("post-transient window spans {periods:.1} periods, need {required}")]
    TooShort { periods: f64, required: f64 },
    #[error("no gradient signal to regress against")]
    NoSignal,
    #[error(transparent)]
    Fit(#[from] FitError),
}

pub fn ascent_condition(swimmer: &SwimmerParams, filter: &FilterParams) -> AscentReport {
    let (_, phi) = transfer_gain_phase(filter, swimmer.omega());
    let condition_value = swimmer.omega_perp_0 * swimmer.omega_perp_1 * phi.sin();
    AscentReport {
        condition_value,
        is_ascent: condition_value < 0.0,
        gamma_fit: None,
        residual: None,
    }
}

/// Start of the quasi-steady regime: `max(20 σ₁, 20 μ, 10 periods)`.
pub fn transient_cutoff(swimmer: &SwimmerParams, filter: &FilterParams) -> f64 {
    (20.0 * filter.sigma1).max(20.0 * filter.mu).max(10.0 * swimmer.period())
}

/// Linear interpolation of the averaged position at time `t`.
fn p_bar_at(rows: &[TrajectoryRow], t: f64) -> Option<Vec3> {
    let idx = rows.partition_point(|r| r.t < t);
    if idx == 0 {
        return rows.first().filter(|r| r.t == t).map(|r| r.p_bar);
    }
    let hi = rows.get(idx)?;
    let lo = &rows[idx - 1];
    let w = (t - lo.t) / (hi.t - lo.t);
    Some(lo.p_bar + (hi.p_bar - lo.p_bar) * w)
}

/// Least-squares slope of `c(p̄(t))` over rows with `t ≥ from`.
pub fn stimulus_trend(traj: &Trajectory, field: &FieldSpec, from: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = traj
        .rows
        .iter()
        .filter(|r| r.t >= from)
        .map(|r| (r.t, concentration(field, &r.p_bar)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mc = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mc)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Some(sxy / sxx)
}

const MIN_FIT_PERIODS: f64 = 50.0;

/// Fits `γ` of the planar ascent law from per-period increments of
/// `c(p̄)` after the transient cutoff.
pub fn fit_gamma(
    traj: &Trajectory,
    field: &FieldSpec,
    swimmer: &SwimmerParams,
    filter: &FilterParams,
) -> Result<AscentReport, AnalysisError> {
    if !swimmer.is_planar() {
        return Err(AnalysisError::NonPlanar(
            "omega_par_0 and omega_par_1 must both be zero".into(),
        ));
    }
    if let Some(first) = traj.rows.first() {
        let drift = traj
            .rows
            .iter()
            .map(|r| (r.p.z - first.p.z).abs())
            .fold(0.0, f64::max);
        if drift > 1e-9 * (1.0 + first.p.norm()) {
            return Err(AnalysisError::NonPlanar(format!("z drifts by {drift:.3e}")));
        }
    }
    let mut report = ascent_condition(swimmer, filter);
    let period = swimmer.period();
    let cutoff = transient_cutoff(swimmer, filter);
    let span = traj.t_end() - cutoff;
    let periods = span / period;
    if !(periods >= MIN_FIT_PERIODS) {
        return Err(AnalysisError::TooShort {
            periods: periods.max(0.0),
            required: MIN_FIT_PERIODS,
        });
    }
    let n_windows = periods.floor() as usize;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut pairs = Vec::with_capacity(n_windows);
    for k in 0..n_windows {
        let t0 = cutoff + k as f64 * period;
        let (Some(a), Some(b), Some(mid)) = (
            p_bar_at(&traj.rows, t0),
            p_bar_at(&traj.rows, t0 + period),
            p_bar_at(&traj.rows, t0 + 0.5 * period),
        ) else {
            continue;
        };
        let y = (concentration(field, &b) - concentration(field, &a)) / period;
        let x = -report.condition_value * gradient(field, &mid).norm();
        sxy += x * y;
        sxx += x * x;
        pairs.push((x, y));
    }
    if !(sxx > 0.0) {
        return Err(AnalysisError::NoSignal);
    }
    let gamma = sxy / sxx;
    let ss_res: f64 = pairs.iter().map(|(x, y)| (y - gamma * x).powi(2)).sum();
    let ss_y: f64 = pairs.iter().map(|(_, y)| y * y).sum();
    report.gamma_fit = Some(gamma);
    report.residual = Some(if ss_y > 0.0 { (ss_res / ss_y).sqrt() } else { 0.0 });
    Ok(report)
}

/// Direction of net progression along the helix axis in body coordinates.
/// For planar tunings this is the spin axis itself.
pub fn progression_axis(swimmer: &SwimmerParams) -> Vec3 {
    if swimmer.omega_par_0 < 0.0 {
        -swimmer.axis()
    } else {
        swimmer.axis()
    }
}

/// Angle between the helix axis (in the fixed frame) and the gradient at the
/// averaged position, per row. Rows with zero gradient are omitted.
pub fn alignment_angle_series(traj: &Trajectory, field: &FieldSpec, swimmer: &SwimmerParams) -> Vec<(f64, f64)> {
    let axis = progression_axis(swimmer);
    traj.rows
        .iter()
        .filter_map(|row| {
            let g = gradient(field, &row.p_bar);
            let norm = g.norm();
            if norm == 0.0 {
                return None;
            }
            let a = row.r_bar * axis;
            let cos = (a.dot(&g) / (a.norm() * norm)).clamp(-1.0, 1.0);
            Some((row.t, cos.acos()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSummary {
    pub rows: usize,
    pub median_first: f64,
    pub median_last: f64,
    pub improved: bool,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median angle over the first and last `fraction` of the series.
pub fn alignment_trend(series: &[(f64, f64)], fraction: f64) -> Option<AlignmentSummary> {
    let k = ((series.len() as f64) * fraction).floor() as usize;
    if k == 0 {
        return None;
    }
    let first = median(series[..k].iter().map(|s| s.1).collect());
    let last = median(series[series.len() - k..].iter().map(|s| s.1).collect());
    Some(AlignmentSummary {
        rows: series.len(),
        median_first: first,
        median_last: last,
        improved: last < first,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnOffReport {
    pub periods_decreasing: usize,
    pub periods_increasing: usize,
    pub amplitude_decreasing: f64,
    pub amplitude_increasing: f64,
    /// `amplitude_decreasing / amplitude_increasing`
    pub ratio: f64,
}

/// Harmonic amplitude of η per swimming period, split by whether the
/// period-mean stimulus fell or rose relative to the previous period.
/// Periods touching the arrival region, where the stimulus is clamped, are
/// skipped.
pub fn on_off_response(
    traj: &Trajectory,
    field: &FieldSpec,
    swimmer: &SwimmerParams,
    from: f64,
) -> Option<OnOffReport> {
    let period = swimmer.period();
    let w = swimmer.omega();
    let source = field.source();
    let clamp = field.clamp_radius();
    let n_windows = ((traj.t_end() - from) / period).floor().max(0.0) as usize;
    let mut prev_mean: Option<f64> = None;
    let (mut dec, mut inc) = (Vec::new(), Vec::new());
    for k in 0..n_windows {
        let t0 = from + k as f64 * period;
        let rows: Vec<&TrajectoryRow> = traj
            .rows
            .iter()
            .filter(|r| r.t >= t0 && r.t < t0 + period)
            .collect();
        if rows.len() < 8 || rows.iter().any(|r| (r.p - source).norm() <= clamp) {
            prev_mean = None;
            continue;
        }
        let mean_s = rows.iter().map(|r| r.s).sum::<f64>() / rows.len() as f64;
        let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
        let etas: Vec<f64> = rows.iter().map(|r| r.eta).collect();
        let amp = harmonic_fit(&times, &etas, w).ok()?.amplitude;
        if let Some(prev) = prev_mean {
            if mean_s < prev {
                dec.push(amp);
            } else {
                inc.push(amp);
            }
        }
        prev_mean = Some(mean_s);
    }
    if dec.is_empty() || inc.is_empty() {
        return None;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a_dec, a_inc) = (mean(&dec), mean(&inc));
    Some(OnOffReport {
        periods_decreasing: dec.len(),
        periods_increasing: inc.len(),
        amplitude_decreasing: a_dec,
        amplitude_increasing: a_inc,
        ratio: a_dec / a_inc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiSteadyReport {
    /// Constant part of η (the ρ₁-type bias).
    pub bias: f64,
    /// Harmonic amplitude of η at the swimming frequency (ρ₂-type content).
    pub amplitude: f64,
    pub phase: f64,
    pub stimulus_phase: f64,
    /// Phase of η minus phase of the stimulus oscillation, wrapped.
    pub phase_lag: f64,
    /// Band-pass phase predicted at the swimming frequency.
    pub predicted_phase: f64,
}

/// Harmonic fits of η and of the stimulus over the post-transient rows.
pub fn quasi_steady_report(
    traj: &Trajectory,
    swimmer: &SwimmerParams,
    filter: &FilterParams,
) -> Result<QuasiSteadyReport, AnalysisError> {
    let cutoff = transient_cutoff(swimmer, filter);
    let rows: Vec<&TrajectoryRow> = traj.rows.iter().filter(|r| r.t >= cutoff).collect();
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let etas: Vec<f64> = rows.iter().map(|r| r.eta).collect();
    let stim: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let w = swimmer.omega();
    // the stimulus rides on the ascent ramp; a trend term keeps it out of the harmonic
    let (eta_fit, _) = quasi_steady_trend_fit(&times, &etas, w)?;
    let (s_fit, _) = quasi_steady_trend_fit(&times, &stim, w)?;
    Ok(QuasiSteadyReport {
        bias: eta_fit.bias,
        amplitude: eta_fit.amplitude,
        phase: eta_fit.phase,
        stimulus_phase: s_fit.phase,
        phase_lag: wrap_angle(eta_fit.phase - s_fit.phase),
        predicted_phase: transfer_gain_phase(filter, w).1,
    })
}
