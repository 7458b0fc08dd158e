//! Static two-panel projection (xy, xz) of a 3D path.

use std::fmt::Write;

use helixseek_core::sim::ArrivalMetrics;
use helixseek_core::{FieldSpec, Trajectory};

const PANEL: f64 = 360.0;
const MARGIN: f64 = 30.0;
const MAX_POINTS: usize = 4000;

struct Bounds {
    lo: [f64; 2],
    span: f64,
}

impl Bounds {
    fn of(points: &[[f64; 2]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12) * 1.05;
        let pad = |k: usize| (span - (hi[k] - lo[k])) / 2.0;
        Self {
            lo: [lo[0] - pad(0), lo[1] - pad(1)],
            span,
        }
    }

    /// Maps to panel pixels; the vertical axis points up.
    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let x = (p[0] - self.lo[0]) / self.span * PANEL;
        let y = PANEL - (p[1] - self.lo[1]) / self.span * PANEL;
        (x, y)
    }
}

fn panel(out: &mut String, x0: f64, title: &str, path: &[[f64; 2]], source: [f64; 2], radius: f64) {
    let mut all = path.to_vec();
    all.push(source);
    let b = Bounds::of(&all);
    let _ = writeln!(out, r#"<g transform="translate({x0},{MARGIN})">"#);
    let _ = writeln!(
        out,
        r##"<rect width="{PANEL}" height="{PANEL}" fill="none" stroke="#888"/><text x="4" y="-8" font-size="13">{title}</text>"##
    );
    let mut pts = String::new();
    let step = path.len().div_ceil(MAX_POINTS).max(1);
    for p in path.iter().step_by(step).chain(path.last()) {
        let (x, y) = b.map(*p);
        let _ = write!(pts, "{x:.2},{y:.2} ");
    }
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="0.8" points="{}"/>"##,
        pts.trim_end()
    );
    let (sx, sy) = b.map(source);
    let r = (radius / b.span * PANEL).max(2.0);
    let _ = writeln!(
        out,
        r##"<circle cx="{sx:.2}" cy="{sy:.2}" r="{r:.2}" fill="#d9822b" fill-opacity="0.5" stroke="#a0521b"/>"##
    );
    if let Some(first) = path.first() {
        let (x, y) = b.map(*first);
        let _ = writeln!(out, r##"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="#2a9d3f"/>"##);
    }
    out.push_str("</g>\n");
}

pub fn render(traj: &Trajectory, field: &FieldSpec, metrics: &ArrivalMetrics, caption: &str) -> String {
    let xy: Vec<[f64; 2]> = traj.rows.iter().map(|r| [r.p.x, r.p.y]).collect();
    let xz: Vec<[f64; 2]> = traj.rows.iter().map(|r| [r.p.x, r.p.z]).collect();
    let s = field.source();
    let width = 2.0 * PANEL + 3.0 * MARGIN;
    let height = PANEL + 2.0 * MARGIN + 24.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    panel(&mut out, MARGIN, "x-y", &xy, [s.x, s.y], field.clamp_radius());
    panel(&mut out, 2.0 * MARGIN + PANEL, "x-z", &xz, [s.x, s.z], field.clamp_radius());
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{:.0}" font-size="12">{caption}: hit={} t_hit={:.3} s min_dist={:.4}</text>"#,
        height - 10.0,
        metrics.hit,
        metrics.t_hit,
        metrics.min_dist
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use helixseek_core::sim::{arrival_metrics, run};
    use helixseek_core::RunConfig;

    #[test]
    fn renders_two_polylines() {
        let mut cfg = RunConfig::fig2(1.0);
        cfg.sim.t_end = 1.0;
        let traj = run(&cfg.to_sim_config().unwrap()).unwrap();
        let m = arrival_metrics(&traj, &cfg.field);
        let svg = render(&traj, &cfg.field, &m, "test");
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn bounds_map_into_panel() {
        let b = Bounds::of(&[[0.0, 0.0], [2.0, 1.0]]);
        for p in [[0.0, 0.0], [2.0, 1.0], [1.0, 0.5]] {
            let (x, y) = b.map(p);
            assert!((0.0..=PANEL).contains(&x) && (0.0..=PANEL).contains(&y));
        }
    }
}
