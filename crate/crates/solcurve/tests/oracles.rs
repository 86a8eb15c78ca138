//! Checks of the traced curves against computations that share nothing with
//! the library's integrator: fixed-step RK4 of the generating equations,
//! closed-form solutions, boundary-value shooting by plain bisection, and a
//! few pinned reference numbers.

mod support;

use solcurve::curve::{check_inequality_44, trace};
use solcurve::ivp::Termination;
use solcurve::problems::ProblemSpec;
use support::{bisect, boundary_value, lambda_for_center_value, rk4, rk4_grid, Nonlinearity};

// Leading series coefficient of the generating solution at the origin,
// with f(w(0)) = 1 for every family used here.
fn series_coefficient(n: f64, alpha: f64) -> f64 {
    1.0 / ((alpha + 2.0) * (alpha + n))
}

// Log-spaced grid from a to b.
fn log_grid(a: f64, b: f64, points: usize) -> Vec<f64> {
    (1..=points)
        .map(|k| a * (b / a).powf(k as f64 / points as f64))
        .collect()
}

#[test]
fn gelfand_trace_matches_fixed_step_integration() {
    let n = 3.0;
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -(n - 1.0) / t * y[1] - y[0].exp();
    };
    let t0 = 1e-3;
    let c = series_coefficient(n, 0.0);
    let y0 = [-c * t0 * t0, -2.0 * c * t0];
    let grid = log_grid(t0, 1e4, 70);
    let states = rk4_grid(&rhs, t0, &y0, &grid, 3000);

    let spec = ProblemSpec::gelfand_exp(n, 0.0).unwrap();
    let curve = trace(&spec, 1e4, 100).unwrap();
    for (t, state) in grid.iter().zip(states.iter().skip(1)) {
        let w_ref = state[0];
        let w = curve.w(*t);
        assert!(
            (w - w_ref).abs() < 1e-6 * w_ref.abs().max(1.0),
            "w({t}) = {w} vs fixed-step {w_ref}"
        );
    }
}

#[test]
fn critical_power_solution_matches_closed_form() {
    // At p = (n+2)/(n-2), n = 3, the generating solution is exactly
    // (1 + t^2/3)^(-1/2): positive for all t, so the curve never ends.
    let spec = ProblemSpec::power_plus_one(3.0, 0.0, 5.0).unwrap();
    let curve = trace(&spec, 50.0, 200).unwrap();
    assert_eq!(curve.termination(), Termination::ReachedEnd);
    for p in curve.points() {
        let w_ref = (1.0 + p.t * p.t / 3.0).powf(-0.5);
        let w = curve.w(p.t);
        assert!(
            (w - w_ref).abs() < 1e-8 * w_ref,
            "w({}) = {w} vs closed form {w_ref}",
            p.t
        );
    }
}

#[test]
fn power_root_position_and_fold() {
    let n = 3.0;
    let p = 3.0;
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -(n - 1.0) / t * y[1] - y[0].powf(p);
    };
    let t0 = 1e-3;
    let c = series_coefficient(n, 0.0);
    let y0 = [1.0 - c * t0 * t0, -2.0 * c * t0];
    // One pass to just before the root, then bisect the endpoint.
    let at6 = rk4(&rhs, t0, &y0, 6.0, 120_000);
    assert!(at6[0] > 0.0);
    let w_at = |t1: f64| rk4(&rhs, 6.0, &at6, t1, 20_000)[0];
    let root = bisect(&w_at, 6.0, 7.5, w_at(6.0), 55);
    assert!(
        (root - 6.896848619284).abs() < 1e-6,
        "first root of w at t = {root}"
    );

    let spec = ProblemSpec::power_plus_one(n, 0.0, p).unwrap();
    let curve = trace(&spec, 1e3, 100).unwrap();
    assert!(
        (curve.t_end() - root).abs() < 1e-6,
        "curve ends at {} vs root {root}",
        curve.t_end()
    );
    assert_eq!(curve.turns().len(), 1);
    let fold = &curve.turns()[0];
    assert!(
        (fold.lambda - 1.3699255055).abs() < 1e-6,
        "fold at lambda = {}",
        fold.lambda
    );
    // The fold must be a genuine solution of the boundary value problem.
    let residual = boundary_value(Nonlinearity::OnePlusUPow(p), n, 0.0, fold.lambda, fold.u0);
    assert!(residual.abs() < 1e-6, "u(1) at the fold: {residual:e}");
}

#[test]
fn gelfand_folds_match_bvp_shooting() {
    let spec = ProblemSpec::gelfand_exp(3.0, 0.0).unwrap();
    let curve = trace(&spec, 1e3, 100).unwrap();
    let folds = curve.turns();
    assert!(
        (folds[0].lambda - 3.3219921185).abs() < 1e-7,
        "first fold at lambda = {}",
        folds[0].lambda
    );
    for fold in folds.iter().take(2) {
        let residual = boundary_value(Nonlinearity::ExpU, 3.0, 0.0, fold.lambda, fold.u0);
        assert!(
            residual.abs() < 1e-6,
            "u(1) at the fold (t = {}): {residual:e}",
            fold.t
        );
    }
}

#[test]
fn lambda_of_u0_scan_matches_curve() {
    let spec = ProblemSpec::gelfand_exp(3.0, 0.0).unwrap();
    let curve = trace(&spec, 1e3, 100).unwrap();

    // The curve is a graph over u0; invert u0 -> t through the traced state.
    let t_for_u0 = |u0: f64| {
        let g = |t: f64| -curve.w(t) - u0;
        bisect(&g, 1e-6, 1e3, g(1e-6), 70)
    };
    for u0 in [1.0, 3.0, 6.0] {
        let reference = lambda_for_center_value(Nonlinearity::ExpU, 3.0, 0.0, u0, 0.02, 3.4);
        let t = t_for_u0(u0);
        let (lambda, _) = spec.curve_point(t, curve.w(t)).unwrap();
        assert!(
            (lambda / reference - 1.0).abs() < 1e-6,
            "lambda at u0 = {u0}: {lambda} vs shooting {reference}"
        );
    }

    // Fold count over u0 in (0, 12]: direction changes of the scanned
    // lambda(u0) must match the curve's turning points in the same range.
    let scan: Vec<f64> = (1..=40)
        .map(|k| {
            let u0 = 0.3 * k as f64;
            lambda_for_center_value(Nonlinearity::ExpU, 3.0, 0.0, u0, 0.02, 3.4)
        })
        .collect();
    let mut scan_folds = 0;
    for window in scan.windows(3) {
        if (window[1] - window[0]).signum() != (window[2] - window[1]).signum() {
            scan_folds += 1;
        }
    }
    let curve_folds = curve.turns().iter().filter(|tp| tp.u0 < 12.0).count();
    assert_eq!(scan_folds, curve_folds, "fold count over u0 in (0, 12]");
}

#[test]
fn slope_inequality_from_independent_integration() {
    let n = 10.0;
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -(n - 1.0) / t * y[1] - y[0].exp();
    };
    let t0 = 1e-3;
    let c = series_coefficient(n, 0.0);
    let y0 = [-c * t0 * t0, -2.0 * c * t0];
    let t_check = (2.0 * n - 4.0).sqrt();
    let state = rk4(&rhs, t0, &y0, t_check, 200_000);
    let lhs_ref = (t_check * state[1] + 2.0) / state[0];
    assert!((lhs_ref - (-1.7232420512)).abs() < 1e-8, "lhs = {lhs_ref}");

    let r = check_inequality_44(n).unwrap();
    assert!((r.lhs - lhs_ref).abs() < 1e-9);
    assert_eq!(r.rhs, -4.0);
}

#[test]
fn mems_fold_and_limit_values() {
    let spec = ProblemSpec::mems(2.0, 0.2, 2.0).unwrap();
    let curve = trace(&spec, 1e4, 200).unwrap();
    let fold = &curve.turns()[0];
    assert!(
        (fold.lambda - 0.9549674142).abs() < 1e-7,
        "pull-in fold at lambda = {}",
        fold.lambda
    );
    assert!((fold.u0 - 0.4443).abs() < 1e-3, "pull-in fold at u0 = {}", fold.u0);
    let residual = boundary_value(Nonlinearity::MemsPow(2.0), 2.0, 0.2, fold.lambda, fold.u0);
    assert!(residual.abs() < 1e-6, "u(1) at the pull-in fold: {residual:e}");

    let last = curve.points().last().unwrap();
    assert!(
        (last.lambda - 0.53743790).abs() < 2e-7,
        "lambda at t = 1e4: {}",
        last.lambda
    );
}
