//! Brute-force numerical oracles, independent of the library's integrator.
//!
//! Everything here is fixed-step classical RK4 plus plain bisection, so
//! agreement with the adaptive dense-output machinery is meaningful.

#![allow(dead_code)]

/// Classical RK4 with a fixed number of steps; returns the final state.
pub fn rk4<F>(f: &F, t0: f64, y0: &[f64], t1: f64, steps: usize) -> Vec<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let mut y = y0.to_vec();
    let dim = y.len();
    let h = (t1 - t0) / steps as f64;
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        f(t, &y, &mut k1);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * h * k1[j];
        }
        f(t + 0.5 * h, &tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * h * k2[j];
        }
        f(t + 0.5 * h, &tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = y[j] + h * k3[j];
        }
        f(t + h, &tmp, &mut k4);
        for j in 0..dim {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y
}

/// RK4 that lands exactly on each grid time, with `substeps` steps per
/// interval; returns the state at every grid time (including the first).
pub fn rk4_grid<F>(f: &F, t0: f64, y0: &[f64], grid: &[f64], substeps: usize) -> Vec<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let mut out = Vec::with_capacity(grid.len() + 1);
    let mut y = y0.to_vec();
    let mut t = t0;
    out.push(y.clone());
    for &tg in grid {
        y = rk4(f, t, &y, tg, substeps);
        t = tg;
        out.push(y.clone());
    }
    out
}

/// Plain bisection for a scalar root; `fa` is `f(a)`. The bracket must change
/// sign.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64, iters: usize) -> f64 {
    let mut sa = fa.signum();
    for _ in 0..iters {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == sa {
            a = mid;
            sa = fm.signum();
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Nonlinearities of the radial Dirichlet problems, oracle-side.
#[derive(Clone, Copy, Debug)]
pub enum Nonlinearity {
    ExpU,
    ExpNegU,
    OnePlusUPow(f64),
    MemsPow(f64),
}

impl Nonlinearity {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::ExpU => u.exp(),
            Nonlinearity::ExpNegU => (-u).exp(),
            Nonlinearity::OnePlusUPow(p) => (1.0 + u).powf(p),
            Nonlinearity::MemsPow(p) => (1.0 - u).powf(-p),
        }
    }
}

/// Integrates the radial problem
/// `u'' + ((n-1)/r) u' + lambda r^alpha f(u) = 0` outward from the center
/// with `u(0) = u0`, landing exactly on each grid radius. Starts at
/// `r = 1e-4` from the regular series. Returns `u` at the grid radii (which
/// must be >= 1e-4 and increasing).
pub fn shoot_from_center(
    nl: Nonlinearity,
    n: f64,
    alpha: f64,
    lambda: f64,
    u0: f64,
    grid: &[f64],
    substeps: usize,
) -> Vec<f64> {
    let r0: f64 = 1e-4;
    let c = -lambda * nl.eval(u0) / ((alpha + 2.0) * (alpha + n));
    let y0 = [
        u0 + c * r0.powf(alpha + 2.0),
        c * (alpha + 2.0) * r0.powf(alpha + 1.0),
    ];
    let f = move |r: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -(n - 1.0) / r * y[1] - lambda * r.powf(alpha) * nl.eval(y[0]);
    };
    rk4_grid(&f, r0, &y0, grid, substeps)
        .into_iter()
        .skip(1)
        .map(|y| y[0])
        .collect()
}

/// Boundary value `u(1)` of the center shot.
pub fn boundary_value(nl: Nonlinearity, n: f64, alpha: f64, lambda: f64, u0: f64) -> f64 {
    shoot_from_center(nl, n, alpha, lambda, u0, &[1.0], 4000)[0]
}

/// Solves `u(1; lambda) = 0` for `lambda` at fixed center value `u0` by
/// bisection over `(lo, hi)`; the solution is unique because `u(1)` is
/// strictly decreasing in `lambda` for these nonlinearities.
pub fn lambda_for_center_value(
    nl: Nonlinearity,
    n: f64,
    alpha: f64,
    u0: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let f = |lambda: f64| boundary_value(nl, n, alpha, lambda, u0);
    let fa = f(lo);
    assert!(
        fa > 0.0 && f(hi) < 0.0,
        "lambda bracket ({lo}, {hi}) does not straddle the solution at u0 = {u0}"
    );
    bisect(f, lo, hi, fa, 60)
}
