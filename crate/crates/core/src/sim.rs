//! Closed-loop integration of the swimmer pose and the signaling pathway in
//! one 15-dimensional state: position (3), rotation matrix (9), ζ₁, ζ₂, ρ.
//!
//! Fixed-step RK4 over the joint right-hand side. The stimulus is sampled at
//! the body origin; an additive noise offset, if enabled, is drawn once per
//! step and held over the RK4 stages.

use log::warn;
use thiserror::Error;

use crate::error::{require_positive, ParamError};
use crate::field::{concentration, FieldSpec, NoiseSource, NoiseSpec};
use crate::geometry::{hat, orthonormality_error, orthonormalize, Mat3, Vec3};
use crate::kinematics::{averaged_frame, Pose, SwimmerParams};
use crate::ode::rk4_step;
use crate::signaling::{filter_derivative, filter_output, FilterParams, FilterState};

pub const STATE_DIM: usize = 15;
type Flat = [f64; STATE_DIM];

/// Validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub swimmer: SwimmerParams,
    pub filter: FilterParams,
    pub field: FieldSpec,
    pub noise: NoiseSpec,
    pub dt: f64,
    pub t_end: f64,
    pub initial_pose: Pose,
    pub initial_filter: FilterState,
    pub record_stride: usize,
    pub renorm_stride: usize,
    /// Noise stream id; sweep points use their grid index.
    pub noise_stream: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        self.swimmer.validate().map_err(|e| e.within("swimmer"))?;
        self.filter.validate().map_err(|e| e.within("filter"))?;
        self.field.validate().map_err(|e| e.within("field"))?;
        self.noise.validate().map_err(|e| e.within("noise"))?;
        require_positive("sim.dt", self.dt)?;
        require_positive("sim.t_end", self.t_end)?;
        if self.t_end < self.dt {
            return Err(ParamError::new("sim.t_end", "must be at least dt"));
        }
        if self.record_stride == 0 {
            return Err(ParamError::new("sim.record_stride", "must be >= 1"));
        }
        if self.renorm_stride == 0 {
            return Err(ParamError::new("sim.renorm_stride", "must be >= 1"));
        }
        if self.initial_pose.p.iter().any(|x| !x.is_finite()) {
            return Err(ParamError::new("init.p", "must be finite"));
        }
        let ortho = orthonormality_error(&self.initial_pose.r);
        if !(ortho <= 1e-9) || self.initial_pose.r.determinant() <= 0.0 {
            return Err(ParamError::new(
                "init.R",
                format!("must be a rotation matrix (‖RᵀR − I‖ = {ortho:.3e})"),
            ));
        }
        let f = &self.initial_filter;
        if !(f.zeta1.is_finite() && f.zeta2.is_finite()) {
            return Err(ParamError::new("init.zeta1", "must be finite"));
        }
        if !(f.rho > 0.0 && f.rho <= self.filter.rho_max) {
            return Err(ParamError::new("init.rho", format!("must lie in (0, rho_max], got {}", f.rho)));
        }
        Ok(())
    }

    /// Warns when the step resolves fewer than 50 points per swimming period.
    pub fn check_resolution(&self) -> bool {
        let limit = self.swimmer.period() / 50.0;
        if self.dt > limit {
            warn!("dt = {} exceeds period/50 = {limit}; accuracy will suffer", self.dt);
            false
        } else {
            true
        }
    }

    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt + 1e-9).floor() as u64
    }

    pub fn expected_rows(&self) -> usize {
        (self.n_steps() / self.record_stride as u64) as usize + 1
    }
}

/// Integrator state between steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub step: u64,
    pub pose: Pose,
    pub filter: FilterState,
    /// Additive stimulus offset held over the next step.
    pub noise: f64,
}

impl SimState {
    pub fn t(&self, dt: f64) -> f64 {
        self.step as f64 * dt
    }

    fn pack(&self) -> Flat {
        let mut y = [0.0; STATE_DIM];
        y[..3].copy_from_slice(self.pose.p.as_slice());
        y[3..12].copy_from_slice(self.pose.r.as_slice());
        y[12] = self.filter.zeta1;
        y[13] = self.filter.zeta2;
        y[14] = self.filter.rho;
        y
    }

    fn unpack(step: u64, noise: f64, y: &Flat) -> Self {
        Self {
            step,
            pose: Pose::new(Vec3::from_column_slice(&y[..3]), Mat3::from_column_slice(&y[3..12])),
            filter: FilterState::new(y[12], y[13], y[14]),
            noise,
        }
    }

    fn is_finite(&self) -> bool {
        self.pose.p.iter().chain(self.pose.r.iter()).all(|x| x.is_finite())
            && self.filter.zeta1.is_finite()
            && self.filter.zeta2.is_finite()
            && self.filter.rho.is_finite()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("state became non-finite at step {step}")]
    NonFinite { step: u64 },
    #[error("adaptive gain left (0, rho_max] at step {step}: rho = {rho}")]
    GainOutOfRange { step: u64, rho: f64 },
    #[error("rotation repair failed at step {step}: {reason}")]
    Rotation { step: u64, reason: String },
}

#[inline]
fn rhs(config: &SimConfig, noise: f64, y: &Flat) -> Flat {
    let p = Vec3::new(y[0], y[1], y[2]);
    let r = Mat3::from_column_slice(&y[3..12]);
    let filter = FilterState::new(y[12], y[13], y[14]);
    let eta = filter_output(&filter);
    let sw = &config.swimmer;
    let omega = Vec3::new(
        sw.omega_par_0 + sw.omega_par_1 * eta,
        0.0,
        sw.omega_perp_0 + sw.omega_perp_1 * eta,
    );
    // R·(v, 0, 0) is the first column scaled
    let dp = r.column(0) * sw.v;
    let dr = r * hat(&omega);
    let s = concentration(&config.field, &p) + noise;
    let fd = filter_derivative(&filter, &config.filter, s);
    let mut out = [0.0; STATE_DIM];
    out[..3].copy_from_slice(dp.as_slice());
    out[3..12].copy_from_slice(dr.as_slice());
    out[12] = fd.d_zeta1;
    out[13] = fd.d_zeta2;
    out[14] = fd.d_rho;
    out
}

/// Advances one `dt`. Rotation repair runs when the new step index is a
/// multiple of `renorm_stride`; ρ is capped at `rho_max`.
pub fn step(state: &SimState, config: &SimConfig) -> Result<SimState, StepError> {
    let y = state.pack();
    let noise = state.noise;
    let mut f = |_t: f64, y: &Flat| rhs(config, noise, y);
    let y = rk4_step(&mut f, state.t(config.dt), &y, config.dt);
    let next_step = state.step + 1;
    let mut next = SimState::unpack(next_step, noise, &y);
    if !next.is_finite() {
        return Err(StepError::NonFinite { step: next_step });
    }
    if next.filter.rho <= 0.0 {
        return Err(StepError::GainOutOfRange {
            step: next_step,
            rho: next.filter.rho,
        });
    }
    next.filter.rho = next.filter.rho.min(config.filter.rho_max);
    if next_step % config.renorm_stride as u64 == 0 {
        next.pose.r = orthonormalize(&next.pose.r).map_err(|e| StepError::Rotation {
            step: next_step,
            reason: e.to_string(),
        })?;
    }
    Ok(next)
}

/// One recorded sample of the closed loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub p: Vec3,
    pub r: Mat3,
    /// Stimulus seen by the filter, noise included.
    pub s: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub rho: f64,
    pub eta: f64,
    pub p_bar: Vec3,
    pub r_bar: Mat3,
}

impl TrajectoryRow {
    pub fn from_state(state: &SimState, config: &SimConfig) -> Self {
        let t = state.t(config.dt);
        let avg = averaged_frame(&state.pose, t, &config.swimmer);
        Self {
            t,
            p: state.pose.p,
            r: state.pose.r,
            s: concentration(&config.field, &state.pose.p) + state.noise,
            zeta1: state.filter.zeta1,
            zeta2: state.filter.zeta2,
            rho: state.filter.rho,
            eta: filter_output(&state.filter),
            p_bar: avg.p_bar,
            r_bar: avg.r_bar,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t)
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

/// A run stopped on a numerical failure; `partial` holds every row recorded
/// before it.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{cause} (last good row {last_row})")]
pub struct SimAbort {
    pub cause: StepError,
    pub last_row: usize,
    pub partial: Trajectory,
}

/// Step-by-step driver owning the noise stream.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    config: &'a SimConfig,
    state: SimState,
    noise: NoiseSource,
}

impl<'a> Simulator<'a> {
    pub fn new(config: &'a SimConfig) -> Self {
        let mut noise = NoiseSource::new(config.noise, config.noise_stream);
        let state = SimState {
            step: 0,
            pose: config.initial_pose,
            filter: config.initial_filter,
            noise: noise.draw(),
        };
        Self { config, state, noise }
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn advance(&mut self) -> Result<&SimState, StepError> {
        let mut next = step(&self.state, self.config)?;
        next.noise = self.noise.draw();
        self.state = next;
        Ok(&self.state)
    }
}

/// Integrates `config` to `t_end`, recording every `record_stride` steps.
pub fn run(config: &SimConfig) -> Result<Trajectory, SimAbort> {
    config.check_resolution();
    let mut sim = Simulator::new(config);
    let mut traj = Trajectory {
        rows: Vec::with_capacity(config.expected_rows()),
    };
    traj.rows.push(TrajectoryRow::from_state(sim.state(), config));
    let stride = config.record_stride as u64;
    for _ in 0..config.n_steps() {
        match sim.advance() {
            Ok(state) => {
                if state.step % stride == 0 {
                    let row = TrajectoryRow::from_state(state, config);
                    traj.rows.push(row);
                }
            }
            Err(cause) => {
                return Err(SimAbort {
                    cause,
                    last_row: traj.rows.len() - 1,
                    partial: traj,
                })
            }
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArrivalMetrics {
    pub hit: bool,
    pub t_hit: f64,
    pub min_dist: f64,
    pub final_c: f64,
}

/// Success means some recorded row lies within `clamp_radius` of the source.
pub fn arrival_metrics(traj: &Trajectory, field: &FieldSpec) -> ArrivalMetrics {
    let source = field.source();
    let radius = field.clamp_radius();
    let mut min_dist = f64::INFINITY;
    let mut t_hit = None;
    for row in &traj.rows {
        let d = (row.p - source).norm();
        min_dist = min_dist.min(d);
        if t_hit.is_none() && d <= radius {
            t_hit = Some(row.t);
        }
    }
    let final_c = traj.rows.last().map_or(0.0, |r| concentration(field, &r.p));
    ArrivalMetrics {
        hit: t_hit.is_some(),
        t_hit: t_hit.unwrap_or_else(|| traj.t_end()),
        min_dist,
        final_c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rot_exp;
    use crate::kinematics::{helix_invariants, periodic_offset};

    fn uniform_config(dt: f64, t_end: f64) -> SimConfig {
        let swimmer = SwimmerParams::fig2(1.0);
        let level = 2.0;
        SimConfig {
            swimmer,
            filter: FilterParams::fig2(swimmer.omega()),
            field: FieldSpec::uniform(level),
            noise: NoiseSpec::none(),
            dt,
            t_end,
            initial_pose: Pose::new(Vec3::new(0.5, -0.3, 0.2), rot_exp(&Vec3::new(0.3, 0.2, -0.9))),
            initial_filter: FilterState::new(level, level, 1.0),
            record_stride: 1,
            renorm_stride: 1_000_000,
            noise_stream: 0,
        }
    }

    /// Exact unforced helix through the initial pose.
    fn helix_position(config: &SimConfig, t: f64) -> Vec3 {
        let sw = &config.swimmer;
        let pose = config.initial_pose;
        let v_bar = helix_invariants(sw).v_bar;
        let eps = sw.eps();
        pose.p + pose.r * (v_bar * t + eps * (periodic_offset(sw, sw.omega() * t) - periodic_offset(sw, 0.0)))
    }

    fn one_period_error(n_per_period: usize) -> f64 {
        let period = SwimmerParams::fig2(1.0).period();
        let cfg = uniform_config(period / n_per_period as f64, period);
        let traj = run(&cfg).unwrap();
        let last = traj.rows.last().unwrap();
        (last.p - helix_position(&cfg, last.t)).norm()
    }

    #[test]
    fn zero_velocity_zero_stimulus_is_fixed_point() {
        let mut cfg = uniform_config(1e-3, 1.0);
        cfg.field = FieldSpec::uniform(0.0);
        cfg.initial_filter = FilterState::new(0.0, 0.0, 1.0);
        // rho sits at its ceiling, so adaptation cannot move it either
        cfg.filter.rho_max = 1.0;
        cfg.swimmer = SwimmerParams {
            v: 0.0,
            omega_par_0: 0.0,
            omega_perp_0: 0.0,
            omega_par_1: 0.0,
            omega_perp_1: 0.0,
        };
        let start = Simulator::new(&cfg).state;
        let next = step(&start, &cfg).unwrap();
        assert_eq!(next.filter, start.filter);
        assert_eq!(next.pose, start.pose);
    }

    #[test]
    fn uniform_field_follows_exact_helix() {
        let cfg = uniform_config(1e-4, SwimmerParams::fig2(1.0).period());
        let traj = run(&cfg).unwrap();
        let worst = traj
            .rows
            .iter()
            .map(|r| (r.p - helix_position(&cfg, r.t)).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "worst {worst}");
        // zeta stays at zero, so eta does too
        assert!(traj.rows.iter().all(|r| r.eta == 0.0));
    }

    #[test]
    fn order_four_convergence() {
        let ratio = one_period_error(200) / one_period_error(400);
        assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn row_count_and_monotone_time() {
        let mut cfg = uniform_config(0.01, 1.0);
        cfg.record_stride = 3;
        let traj = run(&cfg).unwrap();
        assert_eq!(traj.len(), (1.0f64 / (0.01 * 3.0)).floor() as usize + 1);
        assert_eq!(traj.len(), cfg.expected_rows());
        assert!(traj.rows.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn rho_is_capped() {
        let mut cfg = uniform_config(0.002, 3.0);
        cfg.filter.rho_max = 50.0;
        let traj = run(&cfg).unwrap();
        let last = traj.rows.last().unwrap();
        assert_eq!(last.rho, 50.0);
        assert!(traj.rows.iter().all(|r| r.rho > 0.0 && r.rho <= 50.0));
    }

    #[test]
    fn non_finite_state_aborts_with_partial_rows() {
        let mut cfg = uniform_config(0.01, 1.0);
        cfg.field = FieldSpec::linear(Vec3::x(), 1.0, 5.0);
        cfg.initial_filter = FilterState::new(0.0, 5.0, 1.0);
        // a ridiculous step on the adaptation makes rho blow through zero
        cfg.filter.mu = 1e-9;
        let err = run(&cfg).unwrap_err();
        assert_eq!(err.last_row, err.partial.len() - 1);
        assert!(matches!(
            err.cause,
            StepError::NonFinite { .. } | StepError::GainOutOfRange { .. }
        ));
    }

    #[test]
    fn validation_names_keys() {
        let mut cfg = uniform_config(0.0, 1.0);
        assert_eq!(cfg.validate().unwrap_err().name, "sim.dt");
        cfg.dt = 0.01;
        cfg.filter.sigma2 = 10.0;
        assert_eq!(cfg.validate().unwrap_err().name, "filter.sigma2");
        cfg.filter.sigma2 = 0.01;
        cfg.initial_pose.r *= 1.1;
        assert_eq!(cfg.validate().unwrap_err().name, "init.R");
    }

    #[test]
    fn arrival_at_source() {
        let mut traj = Trajectory::default();
        let cfg = uniform_config(0.01, 0.02);
        let mut st = Simulator::new(&cfg).state;
        st.pose.p = Vec3::zeros();
        traj.rows.push(TrajectoryRow::from_state(&st, &cfg));
        let field = FieldSpec::radial(1.0, 0.01);
        let m = arrival_metrics(&traj, &field);
        assert!(m.hit);
        assert_eq!(m.t_hit, 0.0);
        assert_eq!(m.min_dist, 0.0);
    }

    #[test]
    fn uniform_helix_never_arrives() {
        let cfg = uniform_config(0.005, 5.0);
        let traj = run(&cfg).unwrap();
        let field = FieldSpec::radial(1.0, 0.01).with_source(Vec3::new(-30.0, 40.0, 10.0));
        let m = arrival_metrics(&traj, &field);
        assert!(!m.hit);
        assert_eq!(m.t_hit, traj.t_end());
    }
}
