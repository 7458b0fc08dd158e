//! Shared fixtures for the benchmarks.

use helixseek_core::{RunConfig, SimConfig};

/// fig2 simulation (l0 = 200) shortened to `t_end` seconds.
pub fn fig2_sim(t_end: f64) -> SimConfig {
    let mut cfg = RunConfig::fig2(200.0);
    cfg.sim.t_end = t_end;
    cfg.to_sim_config().expect("valid fig2 config")
}
