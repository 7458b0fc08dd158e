//! Parameter grids and share-nothing parallel execution with results
//! returned in grid order.

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path of a numeric config leaf, e.g. `filter.sigma1`.
    pub path: String,
    pub values: Vec<f64>,
}

/// Cartesian grid over the listed axes; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameters: Vec<SweepAxis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub values: Vec<f64>,
    pub config: RunConfig,
}

impl SweepSpec {
    pub fn len(&self) -> usize {
        if self.parameters.is_empty() {
            return 0;
        }
        self.parameters.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Expands the grid against `base`; fails on the first path the config
    /// schema does not accept.
    pub fn expand(&self, base: &RunConfig) -> Result<Vec<GridPoint>, ConfigError> {
        let mut points = Vec::with_capacity(self.len());
        for index in 0..self.len() {
            let mut rem = index;
            let mut values = vec![0.0; self.parameters.len()];
            for (k, axis) in self.parameters.iter().enumerate().rev() {
                values[k] = axis.values[rem % axis.values.len()];
                rem /= axis.values.len();
            }
            let mut config = *base;
            for (axis, &v) in self.parameters.iter().zip(&values) {
                config = config.with_override(&axis.path, v)?;
            }
            config.to_sim_config()?;
            points.push(GridPoint { index, values, config });
        }
        Ok(points)
    }
}

/// Maps `f` over `items` on `parallelism` worker threads. Output order
/// matches input order whatever the completion order.
pub fn par_map_ordered<T, R, F>(items: &[T], parallelism: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if parallelism <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .expect("thread pool");
    pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect())
}
