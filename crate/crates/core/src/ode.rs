//! Classic fixed-step fourth-order Runge–Kutta over flat state arrays.

/// One RK4 step of `dy/dt = f(t, y)` from `(t, y)` with step `h`.
#[inline]
pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates `n_steps` steps of size `h` starting at `t0`; time is
/// recomputed as `t0 + k*h` each step so it does not accumulate rounding.
pub fn rk4_integrate<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], h: f64, n_steps: usize) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut y = y0;
    for k in 0..n_steps {
        y = rk4_step(&mut f, t0 + k as f64 * h, &y, h);
    }
    y
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}
