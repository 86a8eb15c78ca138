//! The problem families and their closed-form structure.
//!
//! Each family is the radial Dirichlet problem
//! `u'' + ((n-1)/r) u' + lambda r^alpha f(u) = 0` on the unit ball with
//! `f(u)` one of `e^u`, `e^-u`, `(1+u)^p`, `1/(1-u)^p`. All of its radial
//! solutions are rescalings of one generating solution `w(t)`, so the module
//! exposes, per family: the generating system with its series start at the
//! singular origin, the map from `(t, w)` to a point `(lambda, u(0))` of the
//! solution curve, the turn indicator whose sign is the sign of
//! `d lambda / dt`, the guiding solution `w0`, and the Euler equation roots
//! that decide between infinitely many turns and an eventually monotone
//! curve.

use crate::ivp::{OdeSystem, SeriesStart};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which nonlinearity `f(u)` the problem uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemFamily {
    /// `f(u) = e^u`.
    GelfandExp,
    /// `f(u) = e^-u`.
    GelfandExpNeg,
    /// `f(u) = (1+u)^p`.
    PowerPlusOne,
    /// `f(u) = 1/(1-u)^p`, solutions confined to `0 < u < 1`.
    Mems,
    /// One-dimensional `z'' + lambda |x|^alpha z^p = 0` on `(-1, 1)`.
    Henon,
}

impl std::fmt::Display for ProblemFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ProblemFamily::GelfandExp => "gelfand-exp",
            ProblemFamily::GelfandExpNeg => "gelfand-exp-neg",
            ProblemFamily::PowerPlusOne => "power-plus-one",
            ProblemFamily::Mems => "mems",
            ProblemFamily::Henon => "henon",
        };
        f.write_str(name)
    }
}

/// Asymptotic shape of the solution curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// The curve oscillates around `lambda*` with infinitely many turns.
    InfinitelyManyTurns,
    /// The curve has at most two turns and is eventually monotone.
    AtMostTwoTurns,
}

/// The guiding solution `w0` that the generating solution approaches.
#[derive(Clone, Copy, Debug)]
pub enum GuidingSolution {
    /// `w0(t) = offset - slope * ln t`.
    LogLinear { offset: f64, slope: f64 },
    /// `w0(t) = coefficient * t^exponent`.
    PowerLaw { coefficient: f64, exponent: f64 },
}

impl GuidingSolution {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            GuidingSolution::LogLinear { offset, slope } => offset - slope * t.ln(),
            GuidingSolution::PowerLaw {
                coefficient,
                exponent,
            } => coefficient * t.powf(exponent),
        }
    }

    pub fn slope(&self, t: f64) -> f64 {
        match *self {
            GuidingSolution::LogLinear { slope, .. } => -slope / t,
            GuidingSolution::PowerLaw {
                coefficient,
                exponent,
            } => coefficient * exponent * t.powf(exponent - 1.0),
        }
    }
}

/// Roots of the Euler equation of the linearization around the guiding
/// solution. A conjugate pair (`oscillatory`) means the generating solution
/// winds around `w0` forever; real roots mean it stays on one side.
#[derive(Clone, Copy, Debug)]
pub struct EulerRoots {
    pub plus: Complex64,
    pub minus: Complex64,
}

impl EulerRoots {
    pub fn oscillatory(&self) -> bool {
        self.plus.im != 0.0
    }

    // Char. polynomial r^2 + (n-2) r + q with q the Euler coefficient.
    fn from_char(n: f64, q: f64) -> Self {
        let disc = (n - 2.0) * (n - 2.0) - 4.0 * q;
        let re = -(n - 2.0) / 2.0;
        if disc < 0.0 {
            let im = (-disc).sqrt() / 2.0;
            EulerRoots {
                plus: Complex64::new(re, im),
                minus: Complex64::new(re, -im),
            }
        } else {
            let s = disc.sqrt() / 2.0;
            EulerRoots {
                plus: Complex64::new(re + s, 0.0),
                minus: Complex64::new(re - s, 0.0),
            }
        }
    }
}

/// A validated problem instance: family plus `(n, alpha)` and, for the power
/// families, the exponent `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProblemSpec {
    family: ProblemFamily,
    n: f64,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
}

impl ProblemSpec {
    pub fn gelfand_exp(n: f64, alpha: f64) -> Result<Self> {
        Self::validate_base(n, alpha)?;
        Ok(Self {
            family: ProblemFamily::GelfandExp,
            n,
            alpha,
            p: None,
        })
    }

    pub fn gelfand_exp_neg(n: f64, alpha: f64) -> Result<Self> {
        Self::validate_base(n, alpha)?;
        Ok(Self {
            family: ProblemFamily::GelfandExpNeg,
            n,
            alpha,
            p: None,
        })
    }

    pub fn power_plus_one(n: f64, alpha: f64, p: f64) -> Result<Self> {
        Self::validate_base(n, alpha)?;
        Self::validate_p(p)?;
        Ok(Self {
            family: ProblemFamily::PowerPlusOne,
            n,
            alpha,
            p: Some(p),
        })
    }

    pub fn mems(n: f64, alpha: f64, p: f64) -> Result<Self> {
        Self::validate_base(n, alpha)?;
        Self::validate_p(p)?;
        Ok(Self {
            family: ProblemFamily::Mems,
            n,
            alpha,
            p: Some(p),
        })
    }

    pub fn henon(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::DomainError(format!(
                "the henon family needs alpha > 0, got {alpha}"
            )));
        }
        Self::validate_p(p)?;
        Ok(Self {
            family: ProblemFamily::Henon,
            n: 1.0,
            alpha,
            p: Some(p),
        })
    }

    /// Builds a spec from loose values, e.g. parsed CLI flags.
    pub fn new(family: ProblemFamily, n: f64, alpha: f64, p: Option<f64>) -> Result<Self> {
        let need_p = || {
            p.ok_or_else(|| {
                Error::DomainError(format!("the {family} family needs the exponent p"))
            })
        };
        match family {
            ProblemFamily::GelfandExp => Self::gelfand_exp(n, alpha),
            ProblemFamily::GelfandExpNeg => Self::gelfand_exp_neg(n, alpha),
            ProblemFamily::PowerPlusOne => Self::power_plus_one(n, alpha, need_p()?),
            ProblemFamily::Mems => Self::mems(n, alpha, need_p()?),
            ProblemFamily::Henon => Self::henon(alpha, need_p()?),
        }
    }

    fn validate_base(n: f64, alpha: f64) -> Result<()> {
        if !(n >= 1.0) || !n.is_finite() {
            return Err(Error::DomainError(format!("dimension n must be >= 1, got {n}")));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::DomainError(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(())
    }

    fn validate_p(p: f64) -> Result<()> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::DomainError(format!("exponent p must be > 1, got {p}")));
        }
        Ok(())
    }

    pub fn family(&self) -> ProblemFamily {
        self.family
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }

    fn p_unwrap(&self) -> f64 {
        self.p.expect("power families always carry p")
    }

    fn require_radial(&self) -> Result<()> {
        if self.family == ProblemFamily::Henon {
            return Err(Error::UnsupportedFamily(self.family));
        }
        Ok(())
    }

    /// The generating initial value problem, as a first-order system in
    /// `(w, w')`, together with its series start at the origin.
    ///
    /// GelfandExp and GelfandExpNeg generate from `w(0) = 0`; PowerPlusOne
    /// and MEMS from `w(0) = 1`. GelfandExpNeg blows down at finite t, so its
    /// system carries a |w| cap past which integration reports BlowUp.
    pub fn generating_system(&self) -> Result<(OdeSystem, SeriesStart)> {
        self.require_radial()?;
        let n = self.n;
        let alpha = self.alpha;
        let (sys, origin_value, origin_rhs) = match self.family {
            ProblemFamily::GelfandExp => {
                let sys = OdeSystem::new(2, move |t, y, dydt| {
                    dydt[0] = y[1];
                    dydt[1] = -(n - 1.0) / t * y[1] - pow_alpha(t, alpha) * y[0].exp();
                });
                (sys, 0.0, 1.0)
            }
            ProblemFamily::GelfandExpNeg => {
                let sys = OdeSystem::new(2, move |t, y, dydt| {
                    dydt[0] = y[1];
                    dydt[1] = -(n - 1.0) / t * y[1] - pow_alpha(t, alpha) * (-y[0]).exp();
                })
                .with_blow_up(700.0);
                (sys, 0.0, 1.0)
            }
            ProblemFamily::PowerPlusOne => {
                let p = self.p_unwrap();
                // Odd extension of w^p; the trace stops at the first root of w,
                // so the extension is only seen by trial stages.
                let sys = OdeSystem::new(2, move |t, y, dydt| {
                    dydt[0] = y[1];
                    dydt[1] =
                        -(n - 1.0) / t * y[1] - pow_alpha(t, alpha) * odd_pow(y[0], p);
                });
                (sys, 1.0, 1.0)
            }
            ProblemFamily::Mems => {
                let p = self.p_unwrap();
                let sys = OdeSystem::new(2, move |t, y, dydt| {
                    dydt[0] = y[1];
                    dydt[1] = -(n - 1.0) / t * y[1] + pow_alpha(t, alpha) / y[0].powf(p);
                });
                (sys, 1.0, -1.0)
            }
            ProblemFamily::Henon => unreachable!(),
        };
        let series = SeriesStart {
            n,
            alpha,
            origin_value,
            origin_rhs,
        };
        Ok((sys.singular_origin(), series))
    }

    /// Maps a generating state `(t, w)` to the curve point `(lambda, u(0))`.
    pub fn curve_point(&self, t: f64, w: f64) -> Result<(f64, f64)> {
        self.require_radial()?;
        if !(t > 0.0) {
            return Err(Error::DomainError(format!("curve parameter t must be > 0, got {t:e}")));
        }
        let ta2 = t.powf(self.alpha + 2.0);
        match self.family {
            ProblemFamily::GelfandExp => Ok((ta2 * w.exp(), -w)),
            ProblemFamily::GelfandExpNeg => Ok((ta2 * (-w).exp(), -w)),
            ProblemFamily::PowerPlusOne => {
                if !(w > 0.0) {
                    return Err(Error::DomainError(format!(
                        "curve point needs w > 0 for {}, got w = {w:e}",
                        self.family
                    )));
                }
                Ok((ta2 * w.powf(self.p_unwrap() - 1.0), 1.0 / w - 1.0))
            }
            ProblemFamily::Mems => {
                if !(w > 0.0) {
                    return Err(Error::DomainError(format!(
                        "curve point needs w > 0 for {}, got w = {w:e}",
                        self.family
                    )));
                }
                Ok((ta2 / w.powf(self.p_unwrap() + 1.0), 1.0 - 1.0 / w))
            }
            ProblemFamily::Henon => unreachable!(),
        }
    }

    /// Sign of `d lambda / dt` at the generating state `(t, w, w')`, up to a
    /// positive factor. Turning points of the solution curve are exactly its
    /// zeros.
    pub fn turn_indicator(&self, t: f64, w: f64, wp: f64) -> Result<f64> {
        self.require_radial()?;
        let a2 = self.alpha + 2.0;
        match self.family {
            ProblemFamily::GelfandExp => Ok(a2 + t * wp),
            ProblemFamily::GelfandExpNeg => Ok(a2 - t * wp),
            ProblemFamily::PowerPlusOne => Ok(a2 * w + (self.p_unwrap() - 1.0) * t * wp),
            ProblemFamily::Mems => Ok(a2 * w - (self.p_unwrap() + 1.0) * t * wp),
            ProblemFamily::Henon => unreachable!(),
        }
    }

    /// The guiding solution `w0`: an exact singular solution of the
    /// generating equation that `w` approaches as `t` grows.
    pub fn guiding_solution(&self) -> Result<GuidingSolution> {
        match self.family {
            ProblemFamily::GelfandExp => {
                self.require_n_at_least(3.0)?;
                let a2 = self.alpha + 2.0;
                Ok(GuidingSolution::LogLinear {
                    offset: (a2 * (self.n - 2.0)).ln(),
                    slope: a2,
                })
            }
            ProblemFamily::Mems => {
                self.require_n_at_least(2.0)?;
                let p = self.p_unwrap();
                let beta = (self.alpha + 2.0) / (p + 1.0);
                let coefficient = (beta * (beta + self.n - 2.0)).powf(-1.0 / (p + 1.0));
                Ok(GuidingSolution::PowerLaw {
                    coefficient,
                    exponent: beta,
                })
            }
            _ => Err(Error::UnsupportedFamily(self.family)),
        }
    }

    /// Roots of the Euler equation for the linearization around the guiding
    /// solution.
    pub fn euler_roots(&self) -> Result<EulerRoots> {
        match self.family {
            ProblemFamily::GelfandExp => {
                self.require_n_at_least(3.0)?;
                Ok(EulerRoots::from_char(
                    self.n,
                    (self.alpha + 2.0) * (self.n - 2.0),
                ))
            }
            ProblemFamily::Mems => {
                self.require_n_at_least(2.0)?;
                let p = self.p_unwrap();
                let beta = (self.alpha + 2.0) / (p + 1.0);
                Ok(EulerRoots::from_char(
                    self.n,
                    p * beta * (beta + self.n - 2.0),
                ))
            }
            _ => Err(Error::UnsupportedFamily(self.family)),
        }
    }

    /// Oscillatory Euler roots give infinitely many turns; real roots give an
    /// eventually monotone curve with at most two turns.
    pub fn classify_regime(&self) -> Result<Regime> {
        Ok(if self.euler_roots()?.oscillatory() {
            Regime::InfinitelyManyTurns
        } else {
            Regime::AtMostTwoTurns
        })
    }

    /// The limiting value `lambda*` that the curve approaches: the value of
    /// `lambda` at the singular solution.
    pub fn lambda_star(&self) -> Result<f64> {
        match self.family {
            ProblemFamily::GelfandExp => {
                self.require_n_at_least(3.0)?;
                Ok((self.alpha + 2.0) * (self.n - 2.0))
            }
            ProblemFamily::Mems => {
                self.require_n_at_least(2.0)?;
                let p = self.p_unwrap();
                let beta = (self.alpha + 2.0) / (p + 1.0);
                Ok(beta * (beta + self.n - 2.0))
            }
            _ => Err(Error::UnsupportedFamily(self.family)),
        }
    }

    fn require_n_at_least(&self, min_n: f64) -> Result<()> {
        if self.n < min_n {
            return Err(Error::PreconditionViolated(format!(
                "{} needs n >= {min_n} here, got n = {}",
                self.family, self.n
            )));
        }
        Ok(())
    }

    /// The deviation frame around the guiding solution, for families that
    /// have one. Supported exactly when [`ProblemSpec::guiding_solution`] is.
    pub(crate) fn guided_frame(&self) -> Result<GuidedFrame> {
        match self.family {
            ProblemFamily::GelfandExp => {
                self.require_n_at_least(3.0)?;
                Ok(GuidedFrame::Exp {
                    n: self.n,
                    alpha: self.alpha,
                    q: (self.alpha + 2.0) * (self.n - 2.0),
                })
            }
            ProblemFamily::Mems => {
                self.require_n_at_least(2.0)?;
                let p = self.p_unwrap();
                let beta = (self.alpha + 2.0) / (p + 1.0);
                let q = beta * (beta + self.n - 2.0);
                Ok(GuidedFrame::Mems {
                    n: self.n,
                    p,
                    beta,
                    c0: q.powf(-1.0 / (p + 1.0)),
                })
            }
            _ => Err(Error::UnsupportedFamily(self.family)),
        }
    }
}

/// The generating solution rewritten as its deviation from the guiding
/// solution, with state `[v, dv/ds]` in the logarithmic abscissa `s = ln t`.
///
/// GelfandExp uses the difference `v = w - w0`, which obeys
/// `v'' + (n-2) v' + q (e^v - 1) = 0` with `q = (alpha+2)(n-2)`; MEMS uses
/// the ratio `v = w/w0 - 1`, which obeys
/// `v'' + (n-2+2 beta) v' + Q ((1+v) - (1+v)^-p) = 0` with
/// `Q = beta (beta+n-2)`. Both are exact restatements of the generating
/// equation at any amplitude, not linearizations. Their point is precision:
/// `v` keeps full relative accuracy long after `w` itself has absorbed the
/// distance to `w0` into its roundoff, and the turn indicator reduces to
/// `dv/ds` times a factor of fixed sign, so late turns and crossings are
/// zeros of state variables rather than of a cancelling expression.
#[derive(Clone, Copy, Debug)]
pub(crate) enum GuidedFrame {
    Exp { n: f64, alpha: f64, q: f64 },
    Mems { n: f64, p: f64, beta: f64, c0: f64 },
}

impl GuidedFrame {
    /// Q = beta (beta + n - 2), which is also lambda* for the family.
    fn q_mems(n: f64, beta: f64) -> f64 {
        beta * (beta + n - 2.0)
    }

    /// The deviation system in `s = ln t`. Not singular anywhere; trial
    /// states with `1 + v <= 0` (MEMS) evaluate to non-finite values and get
    /// rejected by the integrator.
    pub(crate) fn system(&self) -> OdeSystem {
        match *self {
            GuidedFrame::Exp { n, q, .. } => OdeSystem::new(2, move |_s, y, dydt| {
                dydt[0] = y[1];
                dydt[1] = -(n - 2.0) * y[1] - q * y[0].exp_m1();
            }),
            GuidedFrame::Mems { n, p, beta, .. } => {
                let q = Self::q_mems(n, beta);
                OdeSystem::new(2, move |_s, y, dydt| {
                    let v = y[0];
                    // (1+v) - (1+v)^-p without cancellation at small v.
                    let restoring = v - (-p * v.ln_1p()).exp_m1();
                    dydt[0] = y[1];
                    dydt[1] = -(n - 2.0 + 2.0 * beta) * y[1] - q * restoring;
                })
            }
        }
    }

    /// Frame state at a generating state `(t, w, w')`.
    pub(crate) fn state_from(&self, t: f64, w: f64, wp: f64) -> [f64; 2] {
        match *self {
            GuidedFrame::Exp { alpha, q, .. } => {
                [w - q.ln() + (alpha + 2.0) * t.ln(), t * wp + alpha + 2.0]
            }
            GuidedFrame::Mems { beta, c0, .. } => {
                let w0 = c0 * t.powf(beta);
                [w / w0 - 1.0, (t * wp - beta * w) / w0]
            }
        }
    }

    pub(crate) fn w(&self, t: f64, v: f64) -> f64 {
        match *self {
            GuidedFrame::Exp { alpha, q, .. } => q.ln() - (alpha + 2.0) * t.ln() + v,
            GuidedFrame::Mems { beta, c0, .. } => c0 * t.powf(beta) * (1.0 + v),
        }
    }

    pub(crate) fn w_prime(&self, t: f64, v: f64, vdot: f64) -> f64 {
        match *self {
            GuidedFrame::Exp { alpha, .. } => (vdot - (alpha + 2.0)) / t,
            GuidedFrame::Mems { beta, c0, .. } => {
                c0 * t.powf(beta - 1.0) * (beta * (1.0 + v) + vdot)
            }
        }
    }

    pub(crate) fn lambda(&self, v: f64) -> f64 {
        match *self {
            GuidedFrame::Exp { q, .. } => q * v.exp(),
            GuidedFrame::Mems { n, p, beta, .. } => {
                Self::q_mems(n, beta) * (-(p + 1.0) * v.ln_1p()).exp()
            }
        }
    }

    /// `lambda - lambda*` with full relative accuracy however small `v` is.
    pub(crate) fn lambda_minus_star(&self, v: f64) -> f64 {
        match *self {
            GuidedFrame::Exp { q, .. } => q * v.exp_m1(),
            GuidedFrame::Mems { n, p, beta, .. } => {
                Self::q_mems(n, beta) * (-(p + 1.0) * v.ln_1p()).exp_m1()
            }
        }
    }

    pub(crate) fn u0(&self, t: f64, v: f64) -> f64 {
        match *self {
            GuidedFrame::Exp { .. } => -self.w(t, v),
            GuidedFrame::Mems { .. } => 1.0 - 1.0 / self.w(t, v),
        }
    }

    /// The family's turn indicator in frame variables: `dv/ds` itself for
    /// GelfandExp, `-(p+1) w0 dv/ds` for MEMS.
    pub(crate) fn indicator(&self, t: f64, vdot: f64) -> f64 {
        match *self {
            GuidedFrame::Exp { .. } => vdot,
            GuidedFrame::Mems { p, beta, c0, .. } => -(p + 1.0) * c0 * t.powf(beta) * vdot,
        }
    }

    /// Maps "dv/ds crossed upward" to "the indicator crossed upward".
    pub(crate) fn indicator_rising(&self, vdot_rising: bool) -> bool {
        match self {
            GuidedFrame::Exp { .. } => vdot_rising,
            GuidedFrame::Mems { .. } => !vdot_rising,
        }
    }

    /// Analytic `d^2 lambda / dt^2` at a point with `dv/ds = 0`, exact in the
    /// frame. Used where a centered difference of f64 lambda values cannot
    /// resolve the curvature.
    pub(crate) fn lambda_second_derivative_at_turn(&self, t: f64, v: f64) -> f64 {
        match *self {
            GuidedFrame::Exp { q, .. } => -q * q * v.exp() * v.exp_m1() / (t * t),
            GuidedFrame::Mems { n, p, beta, .. } => {
                let q = Self::q_mems(n, beta);
                let restoring = v - (-p * v.ln_1p()).exp_m1();
                q * q * (p + 1.0) * (-(p + 2.0) * v.ln_1p()).exp() * restoring / (t * t)
            }
        }
    }

    /// `w - w0` in frame variables.
    pub(crate) fn guiding_offset(&self, t: f64, v: f64) -> f64 {
        match *self {
            GuidedFrame::Exp { .. } => v,
            GuidedFrame::Mems { beta, c0, .. } => c0 * t.powf(beta) * v,
        }
    }
}

fn pow_alpha(t: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        t.powf(alpha)
    }
}

fn odd_pow(w: f64, p: f64) -> f64 {
    w.signum() * w.abs().powf(p)
}
