//! Two-sided shooting for the one-dimensional Henon problem
//!
//! ```text
//! u'' + lambda |x|^alpha u^p = 0,   u(-1) = u(1) = 0,   u > 0 on (-1, 1).
//! ```
//!
//! The weight `|x|^alpha` is even but not translation invariant, so positive
//! solutions need not be symmetric. Scaling again reduces everything to one
//! unscaled equation: if `z'' + |x|^alpha z^p = 0`, then
//! `u(x) = kappa z(eta x)` solves the problem with
//! `lambda = eta^(alpha+2) kappa^(1-p)`, and Dirichlet boundary values at
//! `x = -1, 1` mean zeros of `z` at `-eta, eta`.
//!
//! A positive solution has one interior maximum, say at `xi >= 0`. Shooting
//! from `z(xi) = 1`, `z'(xi) = 0` to the first root on each side gives
//! `a(xi) > xi` and `b(xi) < xi`; the zeros sit symmetrically exactly when
//! the mismatch `a(xi) + b(xi)` vanishes. `xi = 0` always does it (the
//! symmetric solution); a nontrivial root `xi0` is a broken symmetry and
//! yields two asymmetric solutions, `u(x)` and `u(-x)`.

use crate::ivp::{
    integrate, CrossingDirection, EventAction, EventSpec, OdeSystem, Termination, Trajectory,
};
use crate::problems::{ProblemFamily, ProblemSpec};
use crate::{Error, Result};

/// Scan window `(lo, hi]` for maximum locations of asymmetric candidates.
pub const DEFAULT_SCAN_WINDOW: (f64, f64) = (1e-3, 5.0);
/// Grid points of the mismatch scan.
pub const DEFAULT_SCAN_POINTS: usize = 120;
// First shot window; grown by doubling until the root is inside.
const INITIAL_SPAN: f64 = 5.0;
const MAX_SPAN: f64 = 640.0;
// A reconstruction refuses maximum locations whose mismatch exceeds this.
const ROOT_MISMATCH_TOL: f64 = 1e-7;

/// Tolerances and scan shape for the shooting method.
#[derive(Clone, Copy, Debug)]
pub struct HenonOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub scan_window: (f64, f64),
    pub scan_points: usize,
}

impl Default for HenonOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            scan_window: DEFAULT_SCAN_WINDOW,
            scan_points: DEFAULT_SCAN_POINTS,
        }
    }
}

// Odd extension of u^p; keeps the right-hand side finite if a trial step
// overshoots a root.
fn odd_pow(z: f64, p: f64) -> f64 {
    z.signum() * z.abs().powf(p)
}

/// One two-sided shot of the unscaled equation from an interior maximum.
pub struct TwoSidedShot {
    pub xi: f64,
    /// First root to the right of the maximum.
    pub right_root: f64,
    /// First root to the left (signed; negative once the shot crosses 0).
    pub left_root: f64,
    /// `right_root + left_root`; zero for Dirichlet-compatible shots.
    pub mismatch: f64,
    right: Trajectory,
    left: Trajectory,
}

impl TwoSidedShot {
    /// The unscaled profile `z(x)` on `[left_root, right_root]`.
    pub fn z(&self, x: f64) -> f64 {
        if x >= self.xi {
            self.right.eval(x.min(self.right.t_end()))[0]
        } else {
            let tau = (self.xi - x).min(self.left.t_end());
            self.left.eval(tau)[0]
        }
    }

    /// `z'(x)`.
    pub fn z_prime(&self, x: f64) -> f64 {
        if x >= self.xi {
            self.right.eval(x.min(self.right.t_end()))[1]
        } else {
            let tau = (self.xi - x).min(self.left.t_end());
            -self.left.eval(tau)[1]
        }
    }
}

fn require_henon(spec: &ProblemSpec) -> Result<(f64, f64)> {
    if spec.family() != ProblemFamily::Henon {
        return Err(Error::UnsupportedFamily(spec.family()));
    }
    Ok((spec.alpha(), spec.p().expect("henon specs carry p")))
}

// Integrates z'' = -|x|^alpha z^p one-sided until the first root, growing
// the window until the root is inside it.
fn shot_to_root(sys: &OdeSystem, opts: &HenonOptions) -> Result<Trajectory> {
    let events = [EventSpec::new(
        |_x, y: &[f64]| y[0],
        CrossingDirection::Down,
        EventAction::Stop,
    )];
    let mut span = INITIAL_SPAN;
    loop {
        let (traj, _) = integrate(
            sys,
            0.0,
            &[1.0, 0.0],
            span,
            opts.rel_tol,
            opts.abs_tol,
            &events,
        )?;
        if traj.termination == Termination::EventStop {
            return Ok(traj);
        }
        span *= 2.0;
        if span > MAX_SPAN {
            return Err(Error::NoRootFound(span / 2.0));
        }
    }
}

/// Shoots both ways from a maximum at `xi >= 0` and reports the first roots
/// and their mismatch.
pub fn shoot_two_sided(spec: &ProblemSpec, xi: f64, opts: &HenonOptions) -> Result<TwoSidedShot> {
    let (alpha, p) = require_henon(spec)?;
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::PreconditionViolated(format!(
            "the maximum location must satisfy xi >= 0, got {xi}"
        )));
    }
    // Both sides in a rightward variable: the right side in x - xi, the left
    // side in xi - x.
    let right_sys = OdeSystem::new(2, move |s: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -(xi + s).abs().powf(alpha) * odd_pow(y[0], p);
    });
    let left_sys = OdeSystem::new(2, move |s: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -(xi - s).abs().powf(alpha) * odd_pow(y[0], p);
    });
    let right = shot_to_root(&right_sys, opts)?;
    let left = shot_to_root(&left_sys, opts)?;
    let right_root = xi + right.t_end();
    let left_root = xi - left.t_end();
    Ok(TwoSidedShot {
        xi,
        right_root,
        left_root,
        mismatch: right_root + left_root,
        right,
        left,
    })
}

/// A mismatch scan over maximum locations, with the sign-change roots
/// refined by bisection.
pub struct SymmetryBreakingScan {
    /// Shots at the grid points, in order of `xi`.
    pub shots: Vec<TwoSidedShot>,
    /// Refined nontrivial roots of the mismatch inside the window.
    pub roots: Vec<f64>,
}

/// Scans the mismatch over `opts.scan_window` and refines every sign change.
///
/// The trivial root at `xi = 0` is outside the window by construction; an
/// empty `roots` means every positive solution is the symmetric one.
pub fn symmetry_breaking_scan(
    spec: &ProblemSpec,
    opts: &HenonOptions,
) -> Result<SymmetryBreakingScan> {
    require_henon(spec)?;
    let (lo, hi) = opts.scan_window;
    if !(hi > lo) || !(lo > 0.0) || opts.scan_points < 2 {
        return Err(Error::PreconditionViolated(format!(
            "mismatch scan needs 0 < lo < hi and at least two points, got ({lo:e}, {hi:e}) with {}",
            opts.scan_points
        )));
    }
    let mut shots = Vec::with_capacity(opts.scan_points);
    for k in 0..opts.scan_points {
        let xi = lo + (hi - lo) * k as f64 / (opts.scan_points - 1) as f64;
        shots.push(shoot_two_sided(spec, xi, opts)?);
    }
    let mut roots = Vec::new();
    for pair in shots.windows(2) {
        let (s0, s1) = (&pair[0], &pair[1]);
        if s0.mismatch == 0.0 {
            roots.push(s0.xi);
            continue;
        }
        if s0.mismatch.signum() == s1.mismatch.signum() {
            continue;
        }
        let (mut a, mut b) = (s0.xi, s1.xi);
        let mut fa = s0.mismatch;
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            let fm = shoot_two_sided(spec, mid, opts)?.mismatch;
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    if shots.last().map(|s| s.mismatch) == Some(0.0) {
        roots.push(hi);
    }
    Ok(SymmetryBreakingScan { shots, roots })
}

/// A Dirichlet solution of the Henon problem, normalized to `lambda = 1`.
pub struct HenonSolution {
    /// Always 1; the scaling orbit makes any other value a rescaling.
    pub lambda: f64,
    /// Location of the maximum in `(-1, 1)`.
    pub max_location: f64,
    /// Value of the solution at its maximum.
    pub height: f64,
    /// Zero of the unscaled profile; the rescaling factor between `x` and
    /// the shooting variable.
    pub eta: f64,
    mirrored: bool,
    shot: TwoSidedShot,
    alpha: f64,
    p: f64,
}

/// Builds the `lambda = 1` solution whose maximum sits at `xi` in shooting
/// coordinates; `xi` must be a root of the mismatch (0 gives the symmetric
/// solution). `mirrored` reflects the profile through the origin.
pub fn reconstruct_solution(
    spec: &ProblemSpec,
    xi: f64,
    mirrored: bool,
    opts: &HenonOptions,
) -> Result<HenonSolution> {
    let (alpha, p) = require_henon(spec)?;
    let shot = shoot_two_sided(spec, xi, opts)?;
    let scale = shot.right_root.max(1.0);
    if shot.mismatch.abs() > ROOT_MISMATCH_TOL * scale {
        return Err(Error::InvalidRoot {
            xi,
            residual: shot.mismatch.abs(),
        });
    }
    let eta = shot.right_root;
    let height = eta.powf((alpha + 2.0) / (p - 1.0));
    let sign = if mirrored { -1.0 } else { 1.0 };
    Ok(HenonSolution {
        lambda: 1.0,
        max_location: sign * xi / eta,
        height,
        eta,
        mirrored,
        shot,
        alpha,
        p,
    })
}

impl HenonSolution {
    /// `u(x)` on `[-1, 1]`.
    pub fn u(&self, x: f64) -> f64 {
        let arg = if self.mirrored { -x } else { x };
        self.height * self.shot.z(self.eta * arg)
    }

    /// `u'(x)`.
    pub fn u_prime(&self, x: f64) -> f64 {
        let arg = if self.mirrored { -x } else { x };
        let sign = if self.mirrored { -1.0 } else { 1.0 };
        sign * self.height * self.eta * self.shot.z_prime(self.eta * arg)
    }

    /// Integrates the problem afresh from `x = -1` with this solution's
    /// boundary slope and returns `|u(1)|`, the end-to-end error of the
    /// boundary value problem.
    pub fn bvp_residual(&self, opts: &HenonOptions) -> Result<f64> {
        let (alpha, p) = (self.alpha, self.p);
        let sys = OdeSystem::new(2, move |x: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -x.abs().powf(alpha) * odd_pow(y[0], p);
        });
        let (traj, _) = integrate(
            &sys,
            -1.0,
            &[0.0, self.u_prime(-1.0)],
            1.0,
            opts.rel_tol,
            opts.abs_tol,
            &[],
        )?;
        Ok(traj.last().1[0].abs())
    }
}


    #[test]
    fn known_symmetry_breaking_window() {
        let spec = ProblemSpec::henon(2.0, 3.0).unwrap();
        let scan = symmetry_breaking_scan(&spec, &options()).unwrap();
        assert_eq!(scan.roots.len(), 1, "roots: {:?}", scan.roots);
        let xi0 = scan.roots[0];
        assert!(xi0 > 1e-3 && xi0 < 5.0);
        let refined = shoot_two_sided(&spec, xi0, &options()).unwrap();
        assert!(refined.mismatch.abs() < 1e-9, "mismatch {:e}", refined.mismatch);
    }

    #[test]
    fn subcritical_case_keeps_symmetry() {
        let spec = ProblemSpec::henon(2.0, 2.0).unwrap();
        let scan = symmetry_breaking_scan(&spec, &options()).unwrap();
        assert!(scan.roots.is_empty(), "roots: {:?}", scan.roots);
    }

    #[test]
    fn reconstructed_solutions_satisfy_the_bvp() {
        let spec = ProblemSpec::henon(2.0, 3.0).unwrap();
        let scan = symmetry_breaking_scan(&spec, &options()).unwrap();
        let xi0 = scan.roots[0];

        let symmetric = reconstruct_solution(&spec, 0.0, false, &options()).unwrap();
        let asymmetric = reconstruct_solution(&spec, xi0, false, &options()).unwrap();
        let mirrored = reconstruct_solution(&spec, xi0, true, &options()).unwrap();

        for sol in [&symmetric, &asymmetric, &mirrored] {
            assert_eq!(sol.lambda, 1.0);
            assert!(sol.u(-1.0).abs() < 1e-9);
            assert!(sol.u(1.0).abs() < 1e-9);
            assert!(sol.height > 0.0);
            let residual = sol.bvp_residual(&options()).unwrap();
            assert!(residual < 1e-7, "residual {residual:e}");
        }
        assert_eq!(symmetric.max_location, 0.0);
        assert!(asymmetric.max_location > 0.0);
        assert_eq!(mirrored.max_location, -asymmetric.max_location);
        for k in 0..=20 {
            let x = -1.0 + 2.0 * k as f64 / 20.0;
            assert!(
                (mirrored.u(x) - asymmetric.u(-x)).abs() < 1e-12,
                "mirror mismatch at x = {x}"
            );
        }
        // The asymmetric pair is genuinely different from the symmetric one.
        assert!((asymmetric.eta - symmetric.eta).abs() > 1e-3);
    }

    #[test]
    fn root_location_stable_under_tolerance_halving() {
        let spec = ProblemSpec::henon(2.0, 3.0).unwrap();
        let coarse = HenonOptions {
            scan_points: 40,
            ..options()
        };
        let fine = HenonOptions {
            rel_tol: coarse.rel_tol / 2.0,
            abs_tol: coarse.abs_tol / 2.0,
            scan_points: 40,
            ..options()
        };
        let a = symmetry_breaking_scan(&spec, &coarse).unwrap().roots;
        let b = symmetry_breaking_scan(&spec, &fine).unwrap().roots;
        assert_eq!(a.len(), 1);
        assert_eq!(b.len(), 1);
        assert!((a[0] - b[0]).abs() < 1e-8, "{} vs {}", a[0], b[0]);
    }

    #[test]
    fn non_henon_specs_are_rejected() {
        let spec = ProblemSpec::gelfand_exp(3.0, 0.0).unwrap();
        assert!(matches!(
            shoot_two_sided(&spec, 1.0, &options()),
            Err(Error::UnsupportedFamily(_))
        ));
        let spec = ProblemSpec::henon(2.0, 3.0).unwrap();
        assert!(matches!(
            reconstruct_solution(&spec, 2.0, false, &options()),
            Err(Error::InvalidRoot { .. })
        ));
    }
}
