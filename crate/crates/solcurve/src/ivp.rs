//! Adaptive Runge-Kutta integration with dense output and event location.
//!
//! The stepper is a Dormand-Prince 5(4) pair with the classical free
//! 4th-order interpolant. Every accepted step is stored as a polynomial
//! segment, so a [`Trajectory`] can be evaluated anywhere in its window after
//! the integration has finished. Indicator sign changes are detected by
//! scanning the dense output inside each accepted step and refined by
//! bisection. Systems with a regular singular point at the origin are started
//! from a two-term series expansion rather than from t = 0.

use crate::{Error, Result};

/// Default relative tolerance for adaptive steps.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Default absolute tolerance for adaptive steps.
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
/// Default first abscissa for systems with a singular origin.
pub const DEFAULT_T_START: f64 = 1e-6;

/// Relative width at which a bracketed sign change stops shrinking.
pub const EVENT_REFINE_REL: f64 = 1e-12;

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 10.0;
const MAX_STEPS: usize = 20_000_000;
const EVENT_SCAN_POINTS: usize = 8;
const EVENT_REFINE_MAX_ITER: usize = 200;

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Weights of the free 4th-order interpolant.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Right-hand side of a first-order system y' = f(t, y).
pub type Rhs = Box<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// A first-order ODE system together with the structural facts the stepper
/// needs: its dimension, whether the origin is a regular singular point, and
/// an optional magnitude cap past which integration stops as a blow-up.
pub struct OdeSystem {
    pub dimension: usize,
    pub rhs: Rhs,
    pub singular_origin: bool,
    pub blow_up_abs: Option<f64>,
}

impl OdeSystem {
    pub fn new(
        dimension: usize,
        rhs: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dimension,
            rhs: Box::new(rhs),
            singular_origin: false,
            blow_up_abs: None,
        }
    }

    /// Marks the origin t = 0 as a regular singular point; integration must
    /// then start at some t > 0 (see [`SeriesStart`]).
    pub fn singular_origin(mut self) -> Self {
        self.singular_origin = true;
        self
    }

    /// Stops integration with [`Termination::BlowUp`] once |y[0]| exceeds
    /// `cap` at an accepted step.
    pub fn with_blow_up(mut self, cap: f64) -> Self {
        self.blow_up_abs = Some(cap);
        self
    }

    fn eval(&self, t: f64, y: &[f64], dydt: &mut [f64]) {
        (self.rhs)(t, y, dydt);
    }
}

/// Which sign changes of an event indicator are reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossingDirection {
    Any,
    /// Negative to positive.
    Up,
    /// Positive to negative.
    Down,
}

/// What happens when an event fires.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventAction {
    Record,
    /// Record, then truncate the trajectory at the event time.
    Stop,
}

/// A scalar indicator whose sign changes along the trajectory are located.
pub struct EventSpec {
    pub indicator: Box<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>,
    pub direction: CrossingDirection,
    pub action: EventAction,
    /// Sign changes where the indicator stays below this magnitude on both
    /// sides of the bracket are discarded as noise.
    pub noise_floor: f64,
}

impl EventSpec {
    pub fn new(
        indicator: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        direction: CrossingDirection,
        action: EventAction,
    ) -> Self {
        Self {
            indicator: Box::new(indicator),
            direction,
            action,
            noise_floor: 0.0,
        }
    }

    pub fn with_noise_floor(mut self, floor: f64) -> Self {
        self.noise_floor = floor;
        self
    }
}

/// A refined event: which spec fired, where, the interpolated state there,
/// and whether the indicator was rising (negative to positive) at the root.
#[derive(Clone, Debug)]
pub struct EventRecord {
    pub event_index: usize,
    pub t: f64,
    pub state: Vec<f64>,
    pub rising: bool,
}

/// Why an integration ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    ReachedEnd,
    EventStop,
    BlowUp,
}

// One accepted step: interpolant coefficients over [t0, t1]. `h` is the step
// the coefficients were built with; after a Stop truncation t1 < t0 + h while
// the polynomial parameterization keeps using h.
#[derive(Debug)]
struct Segment {
    t0: f64,
    t1: f64,
    h: f64,
    cont: Box<[f64]>,
}

/// The dense solution of one integration: node states at every accepted step
/// plus an order-4 interpolant between them.
///
/// Evaluation at a node time returns the stored node state bit-for-bit; the
/// interpolant is only used strictly between nodes.
#[derive(Debug)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    segments: Vec<Segment>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Node times of the accepted steps, in increasing order.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// State at the `i`-th node.
    pub fn node_state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    /// Final time and state.
    pub fn last(&self) -> (f64, &[f64]) {
        (self.t_end(), self.node_state(self.times.len() - 1))
    }

    /// Segment intervals `(t0, t1)`; they tile `[t_start, t_end]`.
    pub fn segment_bounds(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.segments.iter().map(|s| (s.t0, s.t1))
    }

    /// Evaluates the dense solution into `out`.
    ///
    /// Panics if `t` lies outside `[t_start, t_end]`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        assert!(
            t >= self.t_start() && t <= self.t_end(),
            "dense evaluation at t = {t:e} outside [{:e}, {:e}]",
            self.t_start(),
            self.t_end()
        );
        if let Ok(i) = self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            out.copy_from_slice(self.node_state(i));
            return;
        }
        let idx = self.segments.partition_point(|s| s.t1 < t);
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        let theta = (t - seg.t0) / seg.h;
        let theta1 = 1.0 - theta;
        for i in 0..self.dim {
            let c = |k: usize| seg.cont[k * self.dim + i];
            out[i] = c(0) + theta * (c(1) + theta1 * (c(2) + theta * (c(3) + theta1 * c(4))));
        }
    }

    /// Evaluates the dense solution, allocating the output.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    /// Evaluates one component of the dense solution.
    pub fn value(&self, t: f64, component: usize) -> f64 {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out[component]
    }
}

/// Two-term series for w'' + ((n-1)/t) w' + t^alpha G(w) = 0 near the regular
/// singular origin: w(t) = w(0) + c t^(alpha+2) with
/// c = -G(w(0)) / ((alpha+2)(alpha+n)).
#[derive(Clone, Copy, Debug)]
pub struct SeriesStart {
    pub n: f64,
    pub alpha: f64,
    pub origin_value: f64,
    /// G(w(0)), the non-singular factor of the forcing at the origin.
    pub origin_rhs: f64,
}

impl SeriesStart {
    fn coefficient(&self) -> f64 {
        -self.origin_rhs / ((self.alpha + 2.0) * (self.alpha + self.n))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.origin_value + self.coefficient() * t.powf(self.alpha + 2.0)
    }

    pub fn slope(&self, t: f64) -> f64 {
        self.coefficient() * (self.alpha + 2.0) * t.powf(self.alpha + 1.0)
    }

    /// `(w, w')` at `t`, the state handed to [`integrate`].
    pub fn state_at(&self, t: f64) -> [f64; 2] {
        [self.value(t), self.slope(t)]
    }
}

struct StepWork {
    k: [Vec<f64>; 7],
    y_new: Vec<f64>,
    y_stage: Vec<f64>,
    err_vec: Vec<f64>,
}

impl StepWork {
    fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            y_new: vec![0.0; dim],
            y_stage: vec![0.0; dim],
            err_vec: vec![0.0; dim],
        }
    }
}

/// Integrates `sys` from `(t0, y0)` to `t_max`, locating `events` on the way.
///
/// Sign changes of every event indicator are bracketed on the dense output of
/// each accepted step and refined to relative accuracy [`EVENT_REFINE_REL`].
/// A `Stop` event truncates the trajectory at the event time. Step-size
/// underflow is reported as [`Termination::BlowUp`] with the last accepted
/// state kept, as is an exceeded `blow_up_abs` cap.
pub fn integrate(
    sys: &OdeSystem,
    t0: f64,
    y0: &[f64],
    t_max: f64,
    rel_tol: f64,
    abs_tol: f64,
    events: &[EventSpec],
) -> Result<(Trajectory, Vec<EventRecord>)> {
    let dim = sys.dimension;
    if y0.len() != dim {
        return Err(Error::PreconditionViolated(format!(
            "initial state has length {}, system dimension is {dim}",
            y0.len()
        )));
    }
    if !(t_max > t0) || !t0.is_finite() || !t_max.is_finite() {
        return Err(Error::PreconditionViolated(format!(
            "integration window [{t0:e}, {t_max:e}] is empty or not finite"
        )));
    }
    if sys.singular_origin && t0 <= 0.0 {
        return Err(Error::PreconditionViolated(
            "the origin is singular; start at some t > 0 from a series expansion".into(),
        ));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0 && abs_tol > 0.0 && abs_tol < 1.0) {
        return Err(Error::PreconditionViolated(format!(
            "tolerances must lie in (0, 1); got rel {rel_tol:e}, abs {abs_tol:e}"
        )));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState(t0));
    }

    let mut work = StepWork::new(dim);
    let mut t = t0;
    let mut y = y0.to_vec();
    sys.eval(t, &y, &mut work.k[0]);
    if work.k[0].iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState(t0));
    }

    let mut traj = Trajectory {
        dim,
        times: vec![t0],
        states: y0.to_vec(),
        segments: Vec::new(),
        termination: Termination::ReachedEnd,
    };
    let mut records: Vec<EventRecord> = Vec::new();
    // Last node point with a nonzero indicator value, per event.
    let mut event_ref: Vec<Option<(f64, f64)>> = events
        .iter()
        .map(|ev| {
            let g = (ev.indicator)(t0, y0);
            (g != 0.0).then_some((t0, g))
        })
        .collect();

    let mut h = initial_step(sys, t, &y, &work.k[0], rel_tol, abs_tol, t_max - t0);
    if sys.singular_origin {
        h = h.min(0.5 * t0);
    }
    let mut rejected_last = false;

    for step in 0.. {
        if step >= MAX_STEPS {
            return Err(Error::StepLimitExceeded(t));
        }
        if h < f64::EPSILON * 16.0 * t.abs().max(1.0) {
            traj.termination = Termination::BlowUp;
            break;
        }
        let reaches_end = t + h >= t_max;
        if reaches_end {
            h = t_max - t;
        }

        let err = attempt_step(sys, t, &y, h, rel_tol, abs_tol, &mut work);
        if !(err <= 1.0) {
            // Rejected (or non-finite, which reads as err = inf).
            let scale = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).max(MIN_SCALE)
            } else {
                MIN_SCALE
            };
            h *= scale.min(1.0);
            rejected_last = true;
            continue;
        }

        let t_new = if reaches_end { t_max } else { t + h };
        let seg = build_segment(t, t_new, h, &y, &work, dim);
        traj.segments.push(seg);
        traj.times.push(t_new);
        traj.states.extend_from_slice(&work.y_new);

        let stop =
            scan_events(sys, events, &mut event_ref, &mut records, &mut traj, t, t_new)?;
        if stop {
            traj.termination = Termination::EventStop;
            break;
        }
        if let Some(cap) = sys.blow_up_abs {
            if work.y_new[0].abs() > cap {
                traj.termination = Termination::BlowUp;
                break;
            }
        }

        t = t_new;
        y.copy_from_slice(&work.y_new);
        let (k_first, k_rest) = work.k.split_at_mut(1);
        k_first[0].copy_from_slice(&k_rest[5]);
        if reaches_end {
            traj.termination = Termination::ReachedEnd;
            break;
        }

        let mut scale = (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE);
        if rejected_last {
            scale = scale.min(1.0);
        }
        rejected_last = false;
        h *= scale;
    }

    Ok((traj, records))
}

// One trial step from (t, y) with step h. Stages land in `work`; the return
// value is the weighted RMS error estimate (infinite when non-finite values
// appear, which rejects the step).
fn attempt_step(
    sys: &OdeSystem,
    t: f64,
    y: &[f64],
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
    work: &mut StepWork,
) -> f64 {
    let dim = sys.dimension;
    macro_rules! stage {
        ($ki:expr, $c:expr, $($aj:expr => $kj:expr),+) => {{
            for i in 0..dim {
                let mut acc = 0.0;
                $(acc += $aj * work.k[$kj][i];)+
                work.y_stage[i] = y[i] + h * acc;
            }
            let (head, tail) = work.k.split_at_mut($ki);
            sys.eval(t + $c * h, &work.y_stage, &mut tail[0]);
            let _ = head;
        }};
    }
    stage!(1, C2, A21 => 0);
    stage!(2, C3, A31 => 0, A32 => 1);
    stage!(3, C4, A41 => 0, A42 => 1, A43 => 2);
    stage!(4, C5, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
    stage!(5, 1.0, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
    for i in 0..dim {
        work.y_new[i] = y[i]
            + h * (A71 * work.k[0][i]
                + A73 * work.k[2][i]
                + A74 * work.k[3][i]
                + A75 * work.k[4][i]
                + A76 * work.k[5][i]);
    }
    {
        let (head, tail) = work.k.split_at_mut(6);
        let _ = head;
        sys.eval(t + h, &work.y_new, &mut tail[0]);
    }
    for i in 0..dim {
        work.err_vec[i] = h
            * (E1 * work.k[0][i]
                + E3 * work.k[2][i]
                + E4 * work.k[3][i]
                + E5 * work.k[4][i]
                + E6 * work.k[5][i]
                + E7 * work.k[6][i]);
    }

    let mut sum = 0.0;
    for i in 0..dim {
        if !work.y_new[i].is_finite() || !work.err_vec[i].is_finite() {
            return f64::INFINITY;
        }
        let sc = abs_tol + rel_tol * y[i].abs().max(work.y_new[i].abs());
        let r = work.err_vec[i] / sc;
        sum += r * r;
    }
    (sum / dim as f64).sqrt()
}

fn build_segment(t: f64, t1: f64, h: f64, y: &[f64], work: &StepWork, dim: usize) -> Segment {
    let mut cont = vec![0.0; 5 * dim].into_boxed_slice();
    for i in 0..dim {
        let ydiff = work.y_new[i] - y[i];
        let bspl = h * work.k[0][i] - ydiff;
        cont[i] = y[i];
        cont[dim + i] = ydiff;
        cont[2 * dim + i] = bspl;
        cont[3 * dim + i] = ydiff - h * work.k[6][i] - bspl;
        cont[4 * dim + i] = h
            * (D1 * work.k[0][i]
                + D3 * work.k[2][i]
                + D4 * work.k[3][i]
                + D5 * work.k[4][i]
                + D6 * work.k[5][i]
                + D7 * work.k[6][i]);
    }
    Segment {
        t0: t,
        t1,
        h,
        cont,
    }
}

// Scans all event indicators over the newly accepted segment [ta, tb],
// appends refined records in time order, and truncates the trajectory at the
// first Stop event. Returns whether a Stop fired.
fn scan_events(
    sys: &OdeSystem,
    events: &[EventSpec],
    event_ref: &mut [Option<(f64, f64)>],
    records: &mut Vec<EventRecord>,
    traj: &mut Trajectory,
    ta: f64,
    tb: f64,
) -> Result<bool> {
    if events.is_empty() {
        return Ok(false);
    }
    let dim = sys.dimension;
    let mut found: Vec<(f64, usize, bool)> = Vec::new();
    let mut state = vec![0.0; dim];
    for (idx, ev) in events.iter().enumerate() {
        for j in 1..=EVENT_SCAN_POINTS {
            let tj = if j == EVENT_SCAN_POINTS {
                tb
            } else {
                ta + (tb - ta) * j as f64 / EVENT_SCAN_POINTS as f64
            };
            traj.eval_into(tj, &mut state);
            let gj = (ev.indicator)(tj, &state);
            let Some((tr, gr)) = event_ref[idx] else {
                event_ref[idx] = (gj != 0.0).then_some((tj, gj));
                continue;
            };
            if gj == 0.0 {
                let rising = gr < 0.0;
                if gr.abs() >= ev.noise_floor && direction_matches(ev.direction, rising) {
                    found.push((tj, idx, rising));
                }
                continue;
            }
            if gr.signum() != gj.signum() && gr.abs().max(gj.abs()) >= ev.noise_floor {
                let root = bisect(
                    |t| {
                        let mut s = vec![0.0; dim];
                        traj.eval_into(t, &mut s);
                        (ev.indicator)(t, &s)
                    },
                    tr.max(ta),
                    tj,
                    gr,
                );
                let rising = gr < 0.0;
                if direction_matches(ev.direction, rising) {
                    found.push((root, idx, rising));
                }
            }
            event_ref[idx] = Some((tj, gj));
        }
    }
    found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    for (t_event, idx, rising) in found {
        traj.eval_into(t_event, &mut state);
        records.push(EventRecord {
            event_index: idx,
            t: t_event,
            state: state.clone(),
            rising,
        });
        if events[idx].action == EventAction::Stop {
            truncate_at(traj, t_event, &state);
            return Ok(true);
        }
    }
    Ok(false)
}

fn direction_matches(dir: CrossingDirection, rising: bool) -> bool {
    match dir {
        CrossingDirection::Any => true,
        CrossingDirection::Up => rising,
        CrossingDirection::Down => !rising,
    }
}

fn truncate_at(traj: &mut Trajectory, t_event: f64, state: &[f64]) {
    let dim = traj.dim;
    let seg = traj.segments.last_mut().unwrap();
    seg.t1 = t_event;
    traj.times.pop();
    traj.states.truncate(traj.states.len() - dim);
    traj.times.push(t_event);
    traj.states.extend_from_slice(state);
}

// Bisection to relative width EVENT_REFINE_REL; ga is the indicator at a.
fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, ga: f64) -> f64 {
    let mut sign_a = ga.signum();
    for _ in 0..EVENT_REFINE_MAX_ITER {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= EVENT_REFINE_REL * mid.abs().max(1.0) {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if gm.signum() == sign_a {
            a = mid;
            sign_a = gm.signum();
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Refines a sign change of `indicator` inside `bracket` on the dense output
/// of an existing trajectory.
pub fn refine_root(
    traj: &Trajectory,
    indicator: impl Fn(f64, &[f64]) -> f64,
    bracket: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = bracket;
    if !(lo < hi) || lo < traj.t_start() || hi > traj.t_end() {
        return Err(Error::PreconditionViolated(format!(
            "bracket [{lo:e}, {hi:e}] does not lie inside the trajectory window"
        )));
    }
    let g = |t: f64| indicator(t, &traj.eval(t));
    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    Ok(bisect(g, lo, hi, g_lo))
}

fn wrms(v: &[f64], y_scale: &[f64], rel_tol: f64, abs_tol: f64) -> f64 {
    let mut sum = 0.0;
    for (vi, yi) in v.iter().zip(y_scale) {
        let sc = abs_tol + rel_tol * yi.abs();
        let r = vi / sc;
        sum += r * r;
    }
    (sum / v.len() as f64).sqrt()
}

fn initial_step(
    sys: &OdeSystem,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    span: f64,
) -> f64 {
    let d0 = wrms(y0, y0, rel_tol, abs_tol);
    let d1 = wrms(f0, y0, rel_tol, abs_tol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);

    let mut y1 = vec![0.0; y0.len()];
    let mut f1 = vec![0.0; y0.len()];
    for i in 0..y0.len() {
        y1[i] = y0[i] + h0 * f0[i];
    }
    sys.eval(t0 + h0, &y1, &mut f1);
    for i in 0..y0.len() {
        f1[i] -= f0[i];
    }
    let d2 = wrms(&f1, y0, rel_tol, abs_tol) / h0;
    let h1 = if !d2.is_finite() || d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}
