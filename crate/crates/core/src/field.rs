//! Analytic chemoattractant fields with exact gradients, and additive
//! stimulus noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, ParamError};
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldVariant {
    /// `l0 / max(‖p − source‖, clamp_radius)`
    RadialInverse,
    /// `max(0, c0 + slope · direction·(p − source))`
    Linear,
    /// `c0 · exp(−‖p − source‖² / (2 width²))`
    Gaussian,
    /// `c0` everywhere
    Uniform,
}

fn default_l0() -> f64 {
    200.0
}
fn default_direction() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}
fn default_one() -> f64 {
    1.0
}

/// Concentration field. Not every key applies to every variant; `source`
/// and `clamp_radius` always define the arrival region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub variant: FieldVariant,
    #[serde(default)]
    pub source: [f64; 3],
    /// Characteristic length; strength of the radial field.
    #[serde(default = "default_l0")]
    pub l0: f64,
    /// Arrival radius, and singularity guard of the radial field.
    /// Defaults to `0.01 * l0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp_radius: Option<f64>,
    #[serde(default = "default_direction")]
    pub direction: [f64; 3],
    /// Linear: concentration per unit length.
    #[serde(default = "default_one")]
    pub slope: f64,
    /// Linear offset, gaussian peak, uniform level.
    #[serde(default = "default_one")]
    pub c0: f64,
    #[serde(default = "default_one")]
    pub width: f64,
}

impl FieldSpec {
    fn base(variant: FieldVariant) -> Self {
        Self {
            variant,
            source: [0.0; 3],
            l0: default_l0(),
            clamp_radius: None,
            direction: default_direction(),
            slope: 1.0,
            c0: 1.0,
            width: 1.0,
        }
    }

    pub fn radial(l0: f64, clamp_radius: f64) -> Self {
        Self {
            l0,
            clamp_radius: Some(clamp_radius),
            ..Self::base(FieldVariant::RadialInverse)
        }
    }

    pub fn linear(direction: Vec3, slope: f64, c0: f64) -> Self {
        Self {
            l0: 1.0,
            direction: direction.into(),
            slope,
            c0,
            ..Self::base(FieldVariant::Linear)
        }
    }

    pub fn gaussian(peak: f64, width: f64) -> Self {
        Self {
            l0: 1.0,
            c0: peak,
            width,
            ..Self::base(FieldVariant::Gaussian)
        }
    }

    pub fn uniform(level: f64) -> Self {
        Self {
            l0: 1.0,
            c0: level,
            ..Self::base(FieldVariant::Uniform)
        }
    }

    pub fn with_source(mut self, source: Vec3) -> Self {
        self.source = source.into();
        self
    }

    pub fn source(&self) -> Vec3 {
        Vec3::from(self.source)
    }

    pub fn direction(&self) -> Vec3 {
        Vec3::from(self.direction)
    }

    pub fn clamp_radius(&self) -> f64 {
        self.clamp_radius.unwrap_or(0.01 * self.l0)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (k, x) in self.source.iter().enumerate() {
            require_finite(&format!("source[{k}]"), *x)?;
        }
        require_positive("l0", self.l0)?;
        require_positive("clamp_radius", self.clamp_radius())?;
        match self.variant {
            FieldVariant::Linear => {
                require_finite("slope", self.slope)?;
                require_finite("c0", self.c0)?;
                let norm = self.direction().norm();
                if !((norm - 1.0).abs() <= 1e-12) {
                    return Err(ParamError::new(
                        "direction",
                        format!("must be a unit vector, norm is {norm}"),
                    ));
                }
            }
            FieldVariant::Gaussian => {
                require_positive("c0", self.c0)?;
                require_positive("width", self.width)?;
            }
            FieldVariant::Uniform => {
                require_finite("c0", self.c0)?;
                if self.c0 < 0.0 {
                    return Err(ParamError::new("c0", "must be >= 0"));
                }
            }
            FieldVariant::RadialInverse => {}
        }
        Ok(())
    }
}

#[inline]
pub fn concentration(field: &FieldSpec, p: &Vec3) -> f64 {
    let d = p - field.source();
    match field.variant {
        FieldVariant::RadialInverse => field.l0 / d.norm().max(field.clamp_radius()),
        FieldVariant::Linear => (field.c0 + field.slope * field.direction().dot(&d)).max(0.0),
        FieldVariant::Gaussian => field.c0 * (-d.norm_squared() / (2.0 * field.width * field.width)).exp(),
        FieldVariant::Uniform => field.c0,
    }
}

pub fn gradient(field: &FieldSpec, p: &Vec3) -> Vec3 {
    let d = p - field.source();
    match field.variant {
        FieldVariant::RadialInverse => {
            let r = d.norm();
            if r <= field.clamp_radius() {
                Vec3::zeros()
            } else {
                d * (-field.l0 / (r * r * r))
            }
        }
        FieldVariant::Linear => {
            if field.c0 + field.slope * field.direction().dot(&d) > 0.0 {
                field.direction() * field.slope
            } else {
                Vec3::zeros()
            }
        }
        FieldVariant::Gaussian => {
            let w2 = field.width * field.width;
            d * (-concentration(field, p) / w2)
        }
        FieldVariant::Uniform => Vec3::zeros(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    None,
    AdditiveGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default)]
    pub std: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn gaussian(std: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::AdditiveGaussian,
            std,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        require_finite("std", self.std)?;
        if self.std < 0.0 {
            return Err(ParamError::new("std", format!("must be >= 0, got {}", self.std)));
        }
        Ok(())
    }

    fn is_active(&self) -> bool {
        self.kind == NoiseKind::AdditiveGaussian && self.std > 0.0
    }
}

/// Per-run noise generator. `stream` selects an independent ChaCha stream
/// for the same seed, so sweep points never share draws.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    spec: NoiseSpec,
    rng: ChaCha8Rng,
    draws: u64,
}

impl NoiseSource {
    pub fn new(spec: NoiseSpec, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(stream);
        Self { spec, rng, draws: 0 }
    }

    /// Next additive offset; zero without drawing when noise is off.
    pub fn draw(&mut self) -> f64 {
        if !self.spec.is_active() {
            return 0.0;
        }
        self.draws += 1;
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.spec.std * z
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// `s = c(p) + noise`, advancing the noise source.
pub fn sample_stimulus(field: &FieldSpec, noise: &mut NoiseSource, p: &Vec3) -> f64 {
    concentration(field, p) + noise.draw()
}
