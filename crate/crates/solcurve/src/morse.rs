//! Radial profiles, the linearized equation, and Morse indices along the
//! curve.
//!
//! Every point `t_b` of the traced curve is a Dirichlet solution
//! `u(r) = U(w(t_b r), w(t_b))` on the unit ball, with `U` the family's
//! rescaling map. The Morse index of that solution is the number of interior
//! zeros of the solution `z` of the linearized equation
//!
//! ```text
//! z'' + ((n-1)/r) z' + lambda r^alpha f'(u(r)) z = 0,   z(0) = 1, z'(0) = 0,
//! ```
//!
//! and pulling the linearization back to the generating variable
//! `rho = t_b r` removes `t_b` from it entirely: for every family the
//! coefficient becomes `m lambda(rho) / rho^2` with a constant multiplier
//! `m` (1 for the exponential family, -1 for its negative counterpart, `p`
//! for both power families). One integration of this universal equation
//! alongside the generating solution therefore ranks the whole curve: the
//! index at `t_b` is the number of zeros of `z` in `(0, t_b)`, and the zeros
//! of `z` are exactly the turning points. Past the guided handoff the pair
//! `(z, z')` is integrated in `s = ln rho`, where its decay matches the
//! deviation's and purely relative error control keeps the zero positions
//! meaningful at any depth.
//!
//! At a turning point the linearized equation has the explicit solution
//! `r u'(r) + kappa (const - u-term)` generated by the scaling symmetry of
//! the self-similar family; [`RadialSolution::scaling_eigenfunction`]
//! evaluates it, normalized to 1 at the center, for comparison against the
//! integrated `z`.

use crate::curve::{self, SolutionCurve};
use crate::ivp::{
    self, integrate, CrossingDirection, EventAction, EventSpec, OdeSystem, SeriesStart,
    Trajectory,
};
use crate::problems::{ProblemFamily, ProblemSpec};
use crate::{Error, Result};

/// The linearized pair `(z, z')` is abandoned once `|z|` exceeds this; only
/// the blow-down family ever grows that far.
pub const Z_CAP: f64 = 1e100;

/// One Dirichlet solution, reconstructed from the curve point at `t_b`.
pub struct RadialSolution<'a> {
    curve: &'a SolutionCurve,
    t_b: f64,
    lambda: f64,
    u0: f64,
    w_b: f64,
}

/// Rescales the generating solution at `t_b` into the Dirichlet solution
/// `u(r)` on the unit ball with `u(1) = 0`.
pub fn reconstruct(curve: &SolutionCurve, t_b: f64) -> Result<RadialSolution<'_>> {
    if !(t_b > 0.0) || t_b > curve.t_end() * (1.0 + 1e-12) {
        return Err(Error::PreconditionViolated(format!(
            "t_b = {t_b:e} lies outside the traced window (0, {:e}]",
            curve.t_end()
        )));
    }
    let w_b = curve.w(t_b);
    let (lambda, u0) = curve.spec().curve_point(t_b, w_b)?;
    Ok(RadialSolution {
        curve,
        t_b,
        lambda,
        u0,
        w_b,
    })
}

impl RadialSolution<'_> {
    pub fn t_b(&self) -> f64 {
        self.t_b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    /// `u(r)` for `r` in `[0, 1]`.
    pub fn u(&self, r: f64) -> f64 {
        let w = self.curve.w(self.t_b * r);
        match self.curve.spec().family() {
            ProblemFamily::GelfandExp | ProblemFamily::GelfandExpNeg => w - self.w_b,
            ProblemFamily::PowerPlusOne => w / self.w_b - 1.0,
            ProblemFamily::Mems => 1.0 - w / self.w_b,
            ProblemFamily::Henon => unreachable!("reconstruction is radial"),
        }
    }

    /// `u'(r)`.
    pub fn u_prime(&self, r: f64) -> f64 {
        let (_, wp) = self.curve.state(self.t_b * r);
        match self.curve.spec().family() {
            ProblemFamily::GelfandExp | ProblemFamily::GelfandExpNeg => self.t_b * wp,
            ProblemFamily::PowerPlusOne => self.t_b * wp / self.w_b,
            ProblemFamily::Mems => -self.t_b * wp / self.w_b,
            ProblemFamily::Henon => unreachable!("reconstruction is radial"),
        }
    }

    /// The scaling-symmetry solution of the linearized equation at this
    /// curve point, normalized to 1 at the center.
    ///
    /// For every `t_b` it solves the linearized equation exactly; at turning
    /// points it additionally vanishes at `r = 1` and is therefore the
    /// eigenfunction of the zero eigenvalue.
    pub fn scaling_eigenfunction(&self, r: f64) -> f64 {
        let spec = self.curve.spec();
        let a2 = spec.alpha() + 2.0;
        let ru = r * self.u_prime(r);
        match spec.family() {
            ProblemFamily::GelfandExp => (ru + a2) / a2,
            ProblemFamily::GelfandExpNeg => (ru - a2) / -a2,
            ProblemFamily::PowerPlusOne => {
                let kappa = a2 / (spec.p().expect("power family") - 1.0);
                (ru + kappa * (1.0 + self.u(r))) / (kappa * (1.0 + self.u0))
            }
            ProblemFamily::Mems => {
                let kappa = a2 / (spec.p().expect("power family") + 1.0);
                (ru + kappa * (1.0 - self.u(r))) / (kappa * (1.0 - self.u0))
            }
            ProblemFamily::Henon => unreachable!("reconstruction is radial"),
        }
    }
}

/// The universal linearized solution along a traced curve: its zeros in the
/// generating variable rank every point of the curve by Morse index.
pub struct MorseLadder {
    zeros: Vec<f64>,
    head: Trajectory,
    tail: Option<Trajectory>,
    series: SeriesStart,
    covered_to: f64,
}

impl MorseLadder {
    /// Zeros of the linearized solution, in the generating variable. They
    /// coincide with the turning points of the curve.
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    /// Upper end of the window the ladder covers; queries beyond it are not
    /// meaningful.
    pub fn covered_to(&self) -> f64 {
        self.covered_to
    }

    /// Morse index of the solution at `t_b`: the number of zeros of the
    /// linearized solution below `t_b`.
    pub fn index_at(&self, t_b: f64) -> usize {
        self.zeros.partition_point(|&z| z < t_b)
    }

    /// The linearized solution `z` at generating abscissa `rho`, with
    /// `z -> 1` at the origin. `z(t_b * r)` is the linearized solution of
    /// the Dirichlet problem at `t_b`, normalized to 1 at the center.
    pub fn z(&self, rho: f64) -> f64 {
        if rho < self.head.t_start() {
            return self.series.value(rho);
        }
        if rho <= self.head.t_end() {
            return self.head.eval(rho)[2];
        }
        match &self.tail {
            Some(tail) => {
                let s = rho.ln().clamp(tail.t_start(), tail.t_end());
                tail.eval(s)[2]
            }
            None => self.head.eval(self.head.t_end())[2],
        }
    }
}

// Multiplier m in the pulled-back linearized coefficient m lambda / rho^2.
fn linearized_multiplier(spec: &ProblemSpec) -> f64 {
    match spec.family() {
        ProblemFamily::GelfandExp => 1.0,
        ProblemFamily::GelfandExpNeg => -1.0,
        ProblemFamily::PowerPlusOne | ProblemFamily::Mems => spec.p().expect("power family"),
        ProblemFamily::Henon => unreachable!("the ladder is built after the radial check"),
    }
}

/// Integrates the universal linearized equation over the window of `curve`.
pub fn morse_ladder(curve: &SolutionCurve) -> Result<MorseLadder> {
    let spec = *curve.spec();
    let (generating, _) = spec.generating_system()?;
    let m = linearized_multiplier(&spec);
    let n = spec.n();
    let alpha = spec.alpha();
    let p = spec.p().unwrap_or(f64::NAN);
    let family = spec.family();

    let density = move |w: f64| -> f64 {
        match family {
            ProblemFamily::GelfandExp => w.exp(),
            ProblemFamily::GelfandExpNeg => (-w).exp(),
            ProblemFamily::PowerPlusOne => w.powf(p - 1.0),
            ProblemFamily::Mems => w.powf(-(p + 1.0)),
            ProblemFamily::Henon => unreachable!("the ladder is built after the radial check"),
        }
    };

    let mut head_sys = OdeSystem::new(4, move |t: f64, y: &[f64], dy: &mut [f64]| {
        let (gen_y, z_y) = y.split_at(2);
        let (gen_dy, z_dy) = dy.split_at_mut(2);
        (generating.rhs)(t, gen_y, gen_dy);
        z_dy[0] = z_y[1];
        z_dy[1] = -(n - 1.0) / t * z_y[1] - m * t.powf(alpha) * density(gen_y[0]) * z_y[0];
    })
    .singular_origin();
    head_sys.blow_up_abs = generating.blow_up_abs;

    let (_, gen_series) = spec.generating_system()?;
    let z_series = SeriesStart {
        n,
        alpha,
        origin_value: 1.0,
        origin_rhs: m,
    };

    let t_start = curve.trajectory().t_start();
    let handoff = curve.handoff();
    let head_end = match handoff {
        Some((t_h, _)) => t_h,
        None => curve.t_end(),
    };

    let [w0, wp0] = gen_series.state_at(t_start);
    let [z0, zp0] = z_series.state_at(t_start);
    let events = vec![
        EventSpec::new(
            |_t, y: &[f64]| y[2],
            CrossingDirection::Any,
            EventAction::Record,
        ),
        EventSpec::new(
            |_t, y: &[f64]| y[2].abs() - Z_CAP,
            CrossingDirection::Up,
            EventAction::Stop,
        ),
    ];
    let (head, head_records) = integrate(
        &head_sys,
        t_start,
        &[w0, wp0, z0, zp0],
        head_end,
        ivp::DEFAULT_REL_TOL,
        ivp::DEFAULT_ABS_TOL,
        &events,
    )?;
    let mut zeros: Vec<f64> = head_records
        .iter()
        .filter(|r| r.event_index == 0)
        .map(|r| r.t)
        .collect();
    let head_stopped = head_records.last().map(|r| r.event_index) == Some(1);
    let mut covered_to = head.t_end();

    let mut tail = None;
    if let Some((t_h, frame)) = handoff {
        if !head_stopped && curve.t_end() > t_h {
            let frame_sys = frame.system();
            let tail_sys = OdeSystem::new(4, move |s: f64, y: &[f64], dy: &mut [f64]| {
                let (v_y, z_y) = y.split_at(2);
                let (v_dy, z_dy) = dy.split_at_mut(2);
                (frame_sys.rhs)(s, v_y, v_dy);
                z_dy[0] = z_y[1];
                z_dy[1] = -(n - 2.0) * z_y[1] - m * frame.lambda(v_y[0]) * z_y[0];
            });
            let (_, h_state) = head.last();
            let [v_h, vdot_h] = frame.state_from(t_h, h_state[0], h_state[1]);
            let y0 = [v_h, vdot_h, h_state[2], t_h * h_state[3]];
            let tail_events = vec![
                EventSpec::new(
                    |_s, y: &[f64]| y[2],
                    CrossingDirection::Any,
                    EventAction::Record,
                ),
                EventSpec::new(
                    |_s, y: &[f64]| y[2].abs() - Z_CAP,
                    CrossingDirection::Up,
                    EventAction::Stop,
                ),
            ];
            let (tail_traj, tail_records) = integrate(
                &tail_sys,
                t_h.ln(),
                &y0,
                curve.t_end().ln(),
                ivp::DEFAULT_REL_TOL,
                curve::TAIL_ABS_TOL,
                &tail_events,
            )?;
            zeros.extend(
                tail_records
                    .iter()
                    .filter(|r| r.event_index == 0)
                    .map(|r| r.t.exp()),
            );
            covered_to = tail_traj.t_end().exp();
            tail = Some(tail_traj);
        }
    }

    Ok(MorseLadder {
        zeros,
        head,
        tail,
        series: z_series,
        covered_to,
    })
}

/// The Morse index on one arc of the curve between consecutive turning
/// points (or window ends).
#[derive(Clone, Copy, Debug)]
pub struct MorseArc {
    pub t_lo: f64,
    pub t_hi: f64,
    pub index: usize,
}

/// Splits the curve at its turning points and reports the Morse index of
/// each arc, verified to be constant across `probes_per_arc` interior
/// probes.
pub fn morse_profile(curve: &SolutionCurve, probes_per_arc: usize) -> Result<Vec<MorseArc>> {
    if probes_per_arc == 0 {
        return Err(Error::PreconditionViolated(
            "at least one probe per arc is required".into(),
        ));
    }
    let ladder = morse_ladder(curve)?;
    let mut bounds = vec![curve.trajectory().t_start()];
    bounds.extend(curve.turns().iter().map(|tp| tp.t));
    bounds.push(curve.t_end());

    let mut arcs = Vec::new();
    for pair in bounds.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let mut index = None;
        for k in 0..probes_per_arc {
            let t = lo * (hi / lo).powf((k as f64 + 0.5) / probes_per_arc as f64);
            if t > ladder.covered_to() {
                return Err(Error::Numerical(format!(
                    "linearized solution left the representable range at {:e}, before the probe at {t:e}",
                    ladder.covered_to()
                )));
            }
            let probe_index = ladder.index_at(t);
            match index {
                None => index = Some(probe_index),
                Some(seen) if seen != probe_index => {
                    return Err(Error::Numerical(format!(
                        "zero count changes between turning points {lo:e} and {hi:e}"
                    )));
                }
                Some(_) => {}
            }
        }
        arcs.push(MorseArc {
            t_lo: lo,
            t_hi: hi,
            index: index.expect("probes_per_arc >= 1"),
        });
    }
    Ok(arcs)
}
