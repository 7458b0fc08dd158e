use thiserror::Error;

/// A parameter failed validation. `name` is the dotted config key.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid parameter `{name}`: {reason}")]
pub struct ParamError {
    pub name: String,
    pub reason: String,
}

impl ParamError {
    pub fn new(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// Prefixes the key with a section name, e.g. `sigma1` -> `filter.sigma1`.
    pub fn within(mut self, section: &str) -> Self {
        self.name = format!("{section}.{}", self.name);
        self
    }
}

pub(crate) fn require_finite(name: &str, x: f64) -> Result<(), ParamError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ParamError::new(name, format!("must be finite, got {x}")))
    }
}

pub(crate) fn require_positive(name: &str, x: f64) -> Result<(), ParamError> {
    require_finite(name, x)?;
    if x > 0.0 {
        Ok(())
    } else {
        Err(ParamError::new(name, format!("must be > 0, got {x}")))
    }
}
