//! JSON run configuration. Unknown keys are rejected at every level, and
//! [`RunConfig::to_canonical_json`] defines the byte form used for digests
//! and round trips.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::error::ParamError;
use crate::field::{concentration, FieldSpec, NoiseSpec};
use crate::geometry::{Mat3, Vec3};
use crate::kinematics::{Pose, SwimmerParams};
use crate::averaging::transient_cutoff;
use crate::signaling::{FilterParams, FilterState, DEFAULT_RHO_MAX};
use crate::sim::SimConfig;

fn default_stride() -> usize {
    1
}
fn default_renorm() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    /// Integration step; `period/200` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_renorm")]
    pub renorm_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSettings {
    pub p: [f64; 3],
    /// Row-major body-to-fixed rotation.
    #[serde(rename = "R")]
    pub r: [[f64; 3]; 3],
    pub zeta1: f64,
    pub zeta2: f64,
    pub rho: f64,
}

impl InitSettings {
    pub fn rotation(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.r[i][j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub swimmer: SwimmerParams,
    pub filter: FilterParams,
    pub field: FieldSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub sim: SimSettings,
    pub init: InitSettings,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] ParamError),
    #[error("unknown parameter path `{0}`")]
    UnknownPath(String),
    #[error("parameter `{0}` is not numeric")]
    NotNumeric(String),
    #[error("override of `{path}` does not fit the schema: {reason}")]
    BadOverride { path: String, reason: String },
}

impl RunConfig {
    /// Sea urchin sperm swimming and filter constants, in
    /// units of the length scale `l0` (200 µm by default in the bundled
    /// config). The arrival radius is `0.2 l0`, about one egg radius.
    pub fn fig2(l0: f64) -> Self {
        let swimmer = SwimmerParams::fig2(l0);
        let field = FieldSpec::radial(l0, 0.2 * l0);
        let p0 = [-l0, -l0, -3.5 * l0];
        let c0 = concentration(&field, &Vec3::from(p0));
        Self {
            swimmer,
            filter: FilterParams::fig2(swimmer.omega()),
            field,
            noise: NoiseSpec::none(),
            sim: SimSettings {
                dt: None,
                t_end: 60.0,
                record_stride: 2,
                renorm_stride: default_renorm(),
            },
            init: InitSettings {
                p: p0,
                r: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                zeta1: 0.75 * c0,
                zeta2: 1.25 * c0,
                rho: 1.0,
            },
        }
    }

    /// Planar counterpart of the `fig2` tuning for the ascent law: the same
    /// `ω⊥` constants and filter ratios re-evaluated at the planar
    /// frequency, slow adaptation (`μ = 3` periods) and a unit-slope linear
    /// field along `+x` (one concentration unit per `l0`). The run spans the
    /// transient cutoff plus 60 periods.
    pub fn planar_reference(l0: f64) -> Self {
        let swimmer = SwimmerParams {
            omega_par_0: 0.0,
            omega_par_1: 0.0,
            ..SwimmerParams::fig2(l0)
        };
        let w = swimmer.omega();
        let filter = FilterParams {
            sigma1: 2.0 / w,
            sigma2: 1.0 / w,
            mu: 3.0 * swimmer.period(),
            rho_max: DEFAULT_RHO_MAX,
        };
        let c0 = 1000.0;
        let mut field = FieldSpec::linear(Vec3::x(), 1.0 / l0, c0);
        field.l0 = l0;
        Self {
            swimmer,
            filter,
            field,
            noise: NoiseSpec::none(),
            sim: SimSettings {
                dt: None,
                t_end: transient_cutoff(&swimmer, &filter) + 60.0 * swimmer.period(),
                record_stride: 1,
                renorm_stride: default_renorm(),
            },
            init: InitSettings {
                p: [0.0; 3],
                r: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                zeta1: c0,
                zeta2: c0,
                rho: 1.0,
            },
        }
    }

    /// Drops the axial spin and its gain; filter constants are left as they
    /// are, so the band-pass phase is re-evaluated at the planar frequency.
    pub fn planar(mut self) -> Self {
        self.swimmer.omega_par_0 = 0.0;
        self.swimmer.omega_par_1 = 0.0;
        self
    }

    pub fn flip_omega_perp_1(mut self) -> Self {
        self.swimmer.omega_perp_1 = -self.swimmer.omega_perp_1;
        self
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.to_sim_config()?;
        Ok(cfg)
    }

    /// Pretty-printed JSON with a trailing newline; struct order fixes the
    /// key order.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn dt(&self) -> f64 {
        self.sim.dt.unwrap_or_else(|| self.swimmer.period() / 200.0)
    }

    pub fn to_sim_config(&self) -> Result<SimConfig, ParamError> {
        self.swimmer.validate().map_err(|e| e.within("swimmer"))?;
        let cfg = SimConfig {
            swimmer: self.swimmer,
            filter: self.filter,
            field: self.field,
            noise: self.noise,
            dt: self.dt(),
            t_end: self.sim.t_end,
            initial_pose: Pose::new(Vec3::from(self.init.p), self.init.rotation()),
            initial_filter: FilterState::new(self.init.zeta1, self.init.zeta2, self.init.rho),
            record_stride: self.sim.record_stride,
            renorm_stride: self.sim.renorm_stride,
            noise_stream: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Returns a copy with the numeric leaf at dotted `path` (array elements
    /// by index, e.g. `init.p.2`) set to `value`.
    pub fn with_override(&self, path: &str, value: f64) -> Result<Self, ConfigError> {
        let mut tree = serde_json::to_value(self)?;
        set_numeric_leaf(&mut tree, path, value)?;
        serde_json::from_value(tree).map_err(|e| ConfigError::BadOverride {
            path: path.into(),
            reason: e.to_string(),
        })
    }
}

fn set_numeric_leaf(tree: &mut Value, path: &str, value: f64) -> Result<(), ConfigError> {
    let unknown = || ConfigError::UnknownPath(path.to_string());
    let mut node = tree;
    for key in path.split('.') {
        node = match node {
            // absent optional keys (e.g. sim.dt) are inserted; deserialization
            // rejects anything the schema does not know
            Value::Object(map) => map.entry(key).or_insert(Value::Null),
            Value::Array(items) => {
                let idx: usize = key.parse().map_err(|_| unknown())?;
                items.get_mut(idx).ok_or_else(unknown)?
            }
            _ => return Err(unknown()),
        };
    }
    let float = || {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| ConfigError::NotNumeric(path.into()))
    };
    *node = match node {
        // integer leaves (strides, seed) stay integers so they still parse
        Value::Number(n) if !n.is_f64() && value.fract() == 0.0 => Value::from(value as i64),
        Value::Number(_) | Value::Null => float()?,
        _ => return Err(ConfigError::NotNumeric(path.into())),
    };
    Ok(())
}
