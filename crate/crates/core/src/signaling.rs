//! Signaling pathway model: a two-stage lag chain whose difference is a
//! band-pass filter, followed by an adaptive output gain that normalizes the
//! mean square of the feedback signal.
//!
//! ```text
//! σ₁ ζ̇₁ = ζ₂ − ζ₁      σ₂ ζ̇₂ = s − ζ₂      ζ = ζ₂ − ζ₁
//! μ ρ̇ = ρ (1 − (ρζ)²)  η = ρζ
//! ```

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{require_finite, require_positive, ParamError};
use crate::ode::rk4_step;

pub const DEFAULT_RHO_MAX: f64 = 1e6;

fn default_rho_max() -> f64 {
    DEFAULT_RHO_MAX
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterParams {
    /// Relaxation time constant.
    pub sigma1: f64,
    /// Stimulation time constant, `≤ sigma1`.
    pub sigma2: f64,
    /// Adaptation time constant.
    pub mu: f64,
    /// Ceiling on the adaptive gain. Without it ρ grows without bound when
    /// the stimulus is constant.
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
}

impl FilterParams {
    /// `σ₁ = 2/ω`, `σ₂ = 1/ω`, `μ = 1/(3ω)`.
    pub fn fig2(omega: f64) -> Self {
        Self {
            sigma1: 2.0 / omega,
            sigma2: 1.0 / omega,
            mu: 1.0 / (3.0 * omega),
            rho_max: DEFAULT_RHO_MAX,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        require_positive("sigma1", self.sigma1)?;
        require_positive("sigma2", self.sigma2)?;
        require_positive("mu", self.mu)?;
        require_finite("rho_max", self.rho_max)?;
        if self.sigma2 > self.sigma1 {
            return Err(ParamError::new(
                "sigma2",
                format!("must not exceed sigma1 ({} > {})", self.sigma2, self.sigma1),
            ));
        }
        if self.rho_max < 1.0 {
            return Err(ParamError::new("rho_max", format!("must be >= 1, got {}", self.rho_max)));
        }
        Ok(())
    }
}

/// `zeta1` relaxation, `zeta2` stimulation, `rho` adaptive gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub zeta1: f64,
    pub zeta2: f64,
    pub rho: f64,
}

impl FilterState {
    pub fn new(zeta1: f64, zeta2: f64, rho: f64) -> Self {
        Self { zeta1, zeta2, rho }
    }

    /// Band-pass output `ζ = ζ₂ − ζ₁`.
    #[inline]
    pub fn zeta(&self) -> f64 {
        self.zeta2 - self.zeta1
    }

    pub fn is_valid(&self, params: &FilterParams) -> bool {
        self.zeta1.is_finite() && self.zeta2.is_finite() && self.rho > 0.0 && self.rho <= params.rho_max
    }
}

/// Time derivative of a [`FilterState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterRates {
    pub d_zeta1: f64,
    pub d_zeta2: f64,
    pub d_rho: f64,
}

#[inline]
pub fn filter_derivative(state: &FilterState, params: &FilterParams, s: f64) -> FilterRates {
    let zeta = state.zeta();
    let eta = state.rho * zeta;
    let mut d_rho = state.rho * (1.0 - eta * eta) / params.mu;
    if state.rho >= params.rho_max {
        d_rho = d_rho.min(0.0);
    }
    FilterRates {
        d_zeta1: zeta / params.sigma1,
        d_zeta2: (s - state.zeta2) / params.sigma2,
        d_rho,
    }
}

/// Feedback signal `η = ρ (ζ₂ − ζ₁)`.
#[inline]
pub fn filter_output(state: &FilterState) -> f64 {
    state.rho * state.zeta()
}

/// Gain and phase of the linear band-pass part `ζ/s` at angular frequency
/// `freq`; transfer function `σ₁ j f / ((1 + σ₁ j f)(1 + σ₂ j f))`.
pub fn transfer_gain_phase(params: &FilterParams, freq: f64) -> (f64, f64) {
    let a = params.sigma1 * freq;
    let b = params.sigma2 * freq;
    let gain = a / ((1.0 + a * a) * (1.0 + b * b)).sqrt();
    let phase = FRAC_PI_2 - a.atan() - b.atan();
    (gain, phase)
}

/// Drives the filter open-loop with stimulus `s(t)` for `n_steps` RK4 steps,
/// calling `observe(t, state)` after every step. Returns the final state.
pub fn drive_filter<S, O>(
    params: &FilterParams,
    start: FilterState,
    stimulus: S,
    t0: f64,
    dt: f64,
    n_steps: usize,
    mut observe: O,
) -> FilterState
where
    S: Fn(f64) -> f64,
    O: FnMut(f64, &FilterState),
{
    let mut rhs = |t: f64, y: &[f64; 3]| {
        let r = filter_derivative(&FilterState::new(y[0], y[1], y[2]), params, stimulus(t));
        [r.d_zeta1, r.d_zeta2, r.d_rho]
    };
    let mut y = [start.zeta1, start.zeta2, start.rho];
    for k in 0..n_steps {
        let t = t0 + k as f64 * dt;
        y = rk4_step(&mut rhs, t, &y, dt);
        y[2] = y[2].min(params.rho_max);
        observe(t0 + (k + 1) as f64 * dt, &FilterState::new(y[0], y[1], y[2]));
    }
    FilterState::new(y[0], y[1], y[2])
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("series spans {periods:.2} periods, need at least {required}")]
    TooShort { periods: f64, required: f64 },
    #[error("series has {per_period:.1} samples per period, need at least {required}")]
    TooSparse { per_period: f64, required: f64 },
    #[error("times and values differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
    #[error("frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
    #[error("least-squares system is singular")]
    Singular,
}

/// `bias + amplitude · cos(freq·t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    pub bias: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl HarmonicFit {
    pub fn eval(&self, freq: f64, t: f64) -> f64 {
        self.bias + self.amplitude * (freq * t + self.phase).cos()
    }
}

/// Least-squares fit of one harmonic plus offset, with no coverage checks.
pub fn harmonic_fit(times: &[f64], values: &[f64], freq: f64) -> Result<HarmonicFit, FitError> {
    let t0 = check_series(times, values, freq)?;
    let coef = least_squares(times, values, |t| {
        let (s, c) = (freq * (t - t0)).sin_cos();
        SVector::<f64, 3>::new(1.0, c, s)
    })?;
    Ok(to_harmonic(coef[0], coef[1], coef[2], freq, t0))
}

/// Harmonic plus offset plus linear trend. The returned fit's bias is the
/// value of the offset-and-trend part at the first sample; the second value
/// is the trend slope per unit time.
pub fn harmonic_trend_fit(times: &[f64], values: &[f64], freq: f64) -> Result<(HarmonicFit, f64), FitError> {
    let t0 = check_series(times, values, freq)?;
    let span = times.last().map_or(1.0, |t| (t - t0).max(f64::MIN_POSITIVE));
    let coef = least_squares(times, values, |t| {
        let (s, c) = (freq * (t - t0)).sin_cos();
        SVector::<f64, 4>::new(1.0, c, s, (t - t0) / span)
    })?;
    Ok((to_harmonic(coef[0], coef[1], coef[2], freq, t0), coef[3] / span))
}

fn check_series(times: &[f64], values: &[f64], freq: f64) -> Result<f64, FitError> {
    if times.len() != values.len() {
        return Err(FitError::LengthMismatch {
            times: times.len(),
            values: values.len(),
        });
    }
    if !(freq > 0.0 && freq.is_finite()) {
        return Err(FitError::BadFrequency(freq));
    }
    // the time origin moves to the first sample for conditioning
    Ok(times.first().copied().unwrap_or(0.0))
}

fn least_squares<const N: usize, B>(times: &[f64], values: &[f64], basis: B) -> Result<SVector<f64, N>, FitError>
where
    B: Fn(f64) -> SVector<f64, N>,
{
    let mut normal = SMatrix::<f64, N, N>::zeros();
    let mut rhs = SVector::<f64, N>::zeros();
    for (&t, &y) in times.iter().zip(values) {
        let row = basis(t);
        normal += row * row.transpose();
        rhs += row * y;
    }
    Ok(normal.cholesky().ok_or(FitError::Singular)?.solve(&rhs))
}

fn to_harmonic(bias: f64, a: f64, b: f64, freq: f64, t0: f64) -> HarmonicFit {
    // a cos x + b sin x = A cos(x + ψ) with A cos ψ = a, A sin ψ = −b
    let amplitude = a.hypot(b);
    let phase = if amplitude <= 1e-12 * bias.abs().max(1.0) {
        0.0
    } else {
        wrap_angle(f64::atan2(-b, a) - freq * t0)
    };
    HarmonicFit {
        bias,
        amplitude,
        phase,
    }
}

fn check_coverage(times: &[f64], freq: f64) -> Result<(), FitError> {
    if !(freq > 0.0 && freq.is_finite()) {
        return Err(FitError::BadFrequency(freq));
    }
    let period = TAU / freq;
    let span = match (times.first(), times.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    let periods = span / period;
    if periods < 5.0 * (1.0 - 1e-9) {
        return Err(FitError::TooShort {
            periods,
            required: 5.0,
        });
    }
    let per_period = times.len().saturating_sub(1) as f64 / periods;
    if per_period < 32.0 * (1.0 - 1e-9) {
        return Err(FitError::TooSparse {
            per_period,
            required: 32.0,
        });
    }
    Ok(())
}

/// Quasi-steady harmonic content of a feedback series: requires at least
/// five periods at 32 samples per period.
pub fn quasi_steady_fit(times: &[f64], values: &[f64], freq: f64) -> Result<HarmonicFit, FitError> {
    check_coverage(times, freq)?;
    harmonic_fit(times, values, freq)
}

/// [`quasi_steady_fit`] with a linear trend absorbed, for series riding on
/// a ramp (the stimulus of a climbing swimmer).
pub fn quasi_steady_trend_fit(times: &[f64], values: &[f64], freq: f64) -> Result<(HarmonicFit, f64), FitError> {
    check_coverage(times, freq)?;
    harmonic_trend_fit(times, values, freq)
}

/// Maps an angle to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > std::f64::consts::PI {
        y - TAU
    } else {
        y
    }
}
