//! The Riemann sphere: chordal metric, the two stereographic charts, endpoint
//! limit sets, and continuation of curves through ∞ in the spherical
//! arc-length parameter.
//!
//! Continuation works on the inverted curve `w = 1/δ` near the parameter
//! value `s∞` where `δ` reaches ∞. A degree-8 polynomial is fitted to `w`
//! at `s∞ ± k·h`, `k = 1..8`, with `w(s∞) = 0`. The point `s∞` is accepted
//! as regular when the fitted derivative is nonzero, agrees across three
//! step sizes, and the scaled coefficients decay geometrically. When the
//! germ at one end matches the germ at the other end the continued curve is
//! the original one traversed again, so the domain grows by one period per
//! step. Otherwise the fit itself is the continuation, over the span it was
//! validated on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{AnalyticCurve, ClosedForm, Interval};
use crate::error::{Error, Result};
use crate::functionals::spherical_speed;
use crate::quad::{integrate, QuadOptions};
use crate::reparam::{default_anchor, integrate_to_infinity, total_length, CurveSpeed, SpeedProfile};

/// Chart switch radius: invert above `R_SWITCH`, return below `1/R_SWITCH`.
pub const R_SWITCH: f64 = 2.0;
pub const EPS_CLUSTER: f64 = 1e-6;
const TAIL_FIRST: i32 = 4;
const TAIL_LAST: i32 = 24;
const FIT_DEGREE: usize = 8;

/// `2|z − w| / √((1 + |z|²)(1 + |w|²))`.
pub fn chordal(z: Complex64, w: Complex64) -> f64 {
    2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt()
}

pub fn chordal_to_infinity(z: Complex64) -> f64 {
    2.0 / (1.0 + z.norm_sqr()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    /// Non-finite values (overflow) are read as ∞.
    pub fn from_value(z: Complex64) -> Self {
        if z.is_finite() {
            SpherePoint::Finite(z)
        } else {
            SpherePoint::Infinity
        }
    }

    pub fn distance(self, other: Self) -> f64 {
        match (self, other) {
            (SpherePoint::Finite(z), SpherePoint::Finite(w)) => chordal(z, w),
            (SpherePoint::Finite(z), SpherePoint::Infinity) | (SpherePoint::Infinity, SpherePoint::Finite(z)) => {
                chordal_to_infinity(z)
            }
            (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
        }
    }

    pub fn is_infinity(self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereChart {
    /// Coordinate `z`.
    Standard,
    /// Coordinate `1/z`.
    Inverted,
}

impl SphereChart {
    /// Local coordinate of `p`; `None` for the chart's missing point.
    pub fn coordinate(self, p: SpherePoint) -> Option<Complex64> {
        match (self, p) {
            (SphereChart::Standard, SpherePoint::Finite(z)) => Some(z),
            (SphereChart::Inverted, SpherePoint::Infinity) => Some(Complex64::new(0.0, 0.0)),
            (SphereChart::Inverted, SpherePoint::Finite(z)) if z != Complex64::new(0.0, 0.0) => Some(z.inv()),
            _ => None,
        }
    }

    pub fn point(self, w: Complex64) -> SpherePoint {
        match self {
            SphereChart::Standard => SpherePoint::from_value(w),
            SphereChart::Inverted if w == Complex64::new(0.0, 0.0) => SpherePoint::Infinity,
            SphereChart::Inverted => SpherePoint::from_value(w.inv()),
        }
    }

    /// Coordinate change into the other chart.
    pub fn transition(self, w: Complex64) -> Complex64 {
        w.inv()
    }

    /// Chart to use for `p` given the current one, with hysteresis.
    pub fn select(self, p: SpherePoint) -> Self {
        match p {
            SpherePoint::Infinity => SphereChart::Inverted,
            SpherePoint::Finite(z) => match self {
                SphereChart::Standard if z.norm() > R_SWITCH => SphereChart::Inverted,
                SphereChart::Inverted if z.norm() < 1.0 / R_SWITCH => SphereChart::Standard,
                c => c,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    Left,
    Right,
}

impl End {
    fn sign(self) -> f64 {
        match self {
            End::Left => -1.0,
            End::Right => 1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            End::Left => End::Right,
            End::Right => End::Left,
        }
    }
}

impl std::fmt::Display for End {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            End::Left => "left",
            End::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndpointClass {
    FinitePoint { value: Complex64 },
    Infinity,
    NonSingleton { diameter: f64 },
}

impl EndpointClass {
    pub fn name(&self) -> &'static str {
        match self {
            EndpointClass::FinitePoint { .. } => "finite_point",
            EndpointClass::Infinity => "infinity",
            EndpointClass::NonSingleton { .. } => "non_singleton",
        }
    }
}

/// What the tail sampling saw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailStats {
    pub samples: usize,
    /// Largest chordal distance among the last eight samples.
    pub dispersion: f64,
}

fn tail_parameters(domain: &Interval, end: End) -> Vec<f64> {
    let (near, far) = match end {
        End::Right => (domain.hi, domain.lo),
        End::Left => (domain.lo, domain.hi),
    };
    let dir = end.sign();
    (TAIL_FIRST..=TAIL_LAST)
        .map(|k| {
            if near.is_finite() {
                let span = if far.is_finite() { (near - far).abs() } else { 1.0 };
                near - dir * span * 2f64.powi(-k)
            } else {
                let base = if far.is_finite() { far } else { 0.0 };
                base + dir * 2f64.powi(k)
            }
        })
        .collect()
}

/// Limit set of `γ(t)` as `t` tends to the chosen end.
pub fn classify_endpoint(curve: &AnalyticCurve, end: End) -> (EndpointClass, TailStats) {
    let d = curve.domain();
    let (near, closed) = match end {
        End::Right => (d.hi, d.hi_closed),
        End::Left => (d.lo, d.lo_closed),
    };
    if closed && near.is_finite() {
        let class = match SpherePoint::from_value(curve.value_unchecked(near)) {
            SpherePoint::Finite(value) => EndpointClass::FinitePoint { value },
            SpherePoint::Infinity => EndpointClass::Infinity,
        };
        return (class, TailStats { samples: 1, dispersion: 0.0 });
    }
    let pts: Vec<SpherePoint> = tail_parameters(&d, end)
        .into_iter()
        .map(|t| SpherePoint::from_value(curve.value_unchecked(t)))
        .collect();
    let last = &pts[pts.len() - 8..];
    let mut dispersion: f64 = 0.0;
    for (i, p) in last.iter().enumerate() {
        for q in &last[i + 1..] {
            dispersion = dispersion.max(p.distance(*q));
        }
    }
    let stats = TailStats {
        samples: pts.len(),
        dispersion,
    };

    // Cauchy test on successive distances, extrapolated geometrically
    let steps: Vec<f64> = pts.windows(2).map(|w| w[0].distance(w[1])).collect();
    let recent = &steps[steps.len() - 6..];
    let tiny = 1e-3 * EPS_CLUSTER;
    let mut ratio: f64 = 0.0;
    for w in recent.windows(2) {
        if w[1] > tiny {
            ratio = ratio.max(if w[0] > 0.0 { w[1] / w[0] } else { f64::INFINITY });
        }
    }
    let last_step = recent[recent.len() - 1];
    let residual = if last_step <= tiny {
        last_step
    } else if ratio < 0.9 {
        last_step * ratio / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    if residual < EPS_CLUSTER {
        let limit = pts[pts.len() - 1];
        let class = match limit {
            SpherePoint::Finite(z) if chordal_to_infinity(z) > EPS_CLUSTER => EndpointClass::FinitePoint { value: z },
            _ => EndpointClass::Infinity,
        };
        return (class, stats);
    }
    let mut diameter: f64 = 0.0;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            diameter = diameter.max(p.distance(*q));
        }
    }
    (
        EndpointClass::NonSingleton {
            diameter: diameter.max(EPS_CLUSTER),
        },
        stats,
    )
}

/// The curve `1/γ` on the same domain.
pub fn invert_curve(curve: &AnalyticCurve) -> Result<AnalyticCurve> {
    let d = curve.domain();
    let (lo, hi) = d.sample_window();
    for t in Interval::closed(lo, hi)?.grid(257) {
        if curve.value_unchecked(t).norm() < 1e-12 {
            return Err(Error::ZeroOnDomain(t));
        }
    }
    if let Some(form) = curve.closed_form() {
        return Ok(AnalyticCurve::from_closed_form(
            ClosedForm::Reciprocal(Box::new(form.clone())),
            d,
        ));
    }
    let charts = curve.charts().iter().map(|c| c.recip()).collect::<Result<Vec<_>>>()?;
    AnalyticCurve::from_charts(charts, d)
}

/// `|L_sph(γ) − L_sph(1/γ)|` over `[a, b]`.
pub fn spherical_isometry_check(curve: &AnalyticCurve, a: f64, b: f64) -> Result<f64> {
    let c = curve.with_domain(Interval::closed(a, b)?);
    let inv = invert_curve(&c)?;
    let f = spherical_speed();
    Ok((total_length(&c, &f, a, b)? - total_length(&inv, &f, a, b)?).abs())
}

fn tight_quad() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        max_depth: 40,
    }
}

/// Spherical arc-length parameter of a curve on its whole domain, with
/// `s(anchor) = 0` and range `[A, B]` (finite ends only).
#[derive(Debug, Clone)]
pub struct SphericalParam {
    profile: CurveSpeed,
    anchor: f64,
    lo: f64,
    hi: f64,
    range: (f64, f64),
}

impl SphericalParam {
    pub fn new(curve: &AnalyticCurve) -> Result<Self> {
        let d = curve.domain();
        let profile = CurveSpeed::new(curve.clone(), spherical_speed());
        let anchor = default_anchor(&d);
        let mut p = Self {
            profile,
            anchor,
            lo: d.lo,
            hi: d.hi,
            range: (0.0, 0.0),
        };
        let a = if d.lo.is_finite() {
            -p.quad(d.lo, anchor)?
        } else {
            -p.tail(anchor, End::Left)?
        };
        let b = if d.hi.is_finite() {
            p.quad(anchor, d.hi)?
        } else {
            p.tail(anchor, End::Right)?
        };
        p.range = (a, b);
        Ok(p)
    }

    fn quad(&self, a: f64, b: f64) -> Result<f64> {
        Ok(integrate(|t| self.profile.speed_at(t), a, b, &tight_quad())?.value)
    }

    /// Spherical length from `t` to the chosen infinite end.
    pub fn tail(&self, t: f64, end: End) -> Result<f64> {
        Ok(integrate_to_infinity(&self.profile, t, end.sign(), &tight_quad(), 0.0, 1e-15)?.value)
    }

    pub fn curve(&self) -> &AnalyticCurve {
        &self.profile.curve
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// `(A, B)`.
    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn period(&self) -> f64 {
        self.range.1 - self.range.0
    }

    pub fn s_of_t(&self, t: f64) -> Result<f64> {
        if !(t >= self.lo && t <= self.hi) {
            return Err(Error::OutOfDomain(t));
        }
        let far = 1.0 + self.anchor.abs();
        if t > self.anchor + far && self.hi.is_infinite() {
            Ok(self.range.1 - self.tail(t, End::Right)?)
        } else if t < self.anchor - far && self.lo.is_infinite() {
            Ok(self.range.0 + self.tail(t, End::Left)?)
        } else {
            self.quad(self.anchor, t)
        }
    }

    /// Solves `s(t) = s` by bracketed Newton iteration.
    pub fn t_of_s(&self, s: f64) -> Result<f64> {
        let (a, b) = self.range;
        if !(s > a && s < b) {
            return Err(Error::OutOfRange { value: s, lo: a, hi: b });
        }
        let mut t_lo = self.anchor;
        let mut t_hi = self.anchor;
        let mut w = 1f64.max(self.anchor.abs());
        if s >= 0.0 {
            loop {
                let next = if self.hi.is_finite() { self.hi } else { t_hi + w };
                t_hi = next;
                if self.hi.is_finite() || self.s_of_t(t_hi)? >= s {
                    break;
                }
                t_lo = t_hi;
                w *= 2.0;
            }
        } else {
            loop {
                let next = if self.lo.is_finite() { self.lo } else { t_lo - w };
                t_lo = next;
                if self.lo.is_finite() || self.s_of_t(t_lo)? <= s {
                    break;
                }
                t_hi = t_lo;
                w *= 2.0;
            }
        }
        let tol = 1e-15 * (1.0 + s.abs());
        let mut t = 0.5 * (t_lo + t_hi);
        for _ in 0..200 {
            let r = self.s_of_t(t)? - s;
            if r.abs() <= tol {
                break;
            }
            if r > 0.0 {
                t_hi = t;
            } else {
                t_lo = t;
            }
            if t_hi - t_lo <= 4.0 * f64::EPSILON * (1.0 + t.abs()) {
                break;
            }
            let next = t - r / self.profile.speed_at(t)?;
            t = if next > t_lo && next < t_hi {
                next
            } else {
                0.5 * (t_lo + t_hi)
            };
        }
        Ok(t)
    }

    /// `δ(s) = γ(t(s))` as a sphere point; the ends of the range map to the
    /// endpoint limits.
    pub fn delta(&self, s: f64) -> Result<SpherePoint> {
        let t = self.t_of_s(s)?;
        Ok(SpherePoint::from_value(self.profile.curve.value_unchecked(t)))
    }

    /// Parameter `t` at spherical distance `x` from the infinite end.
    fn t_at_tail(&self, x: f64, end: End) -> Result<f64> {
        let dir = end.sign();
        let mut inner = self.anchor;
        let mut outer = self.anchor;
        let mut w = 1f64.max(self.anchor.abs());
        loop {
            outer += dir * w;
            if self.tail(outer, end)? <= x {
                break;
            }
            inner = outer;
            w *= 2.0;
            if !w.is_finite() {
                return Err(Error::DivergentLength(format!("tail at {end}")));
            }
        }
        let mut t = 0.5 * (inner + outer);
        for _ in 0..200 {
            let r = self.tail(t, end)? - x;
            if r.abs() <= 1e-15 * x {
                break;
            }
            // tail decreases moving outward
            if r > 0.0 {
                inner = t;
            } else {
                outer = t;
            }
            if (outer - inner).abs() <= 4.0 * f64::EPSILON * (1.0 + t.abs()) {
                break;
            }
            let next = t + dir * r / self.profile.speed_at(t)?;
            let (l, h) = (inner.min(outer), inner.max(outer));
            t = if next > l && next < h { next } else { 0.5 * (inner + outer) };
        }
        Ok(t)
    }
}

/// Polynomial model of `w = 1/δ` around the ∞-parameter `s∞`, in the signed
/// offset `σ = s − s∞`, with `w(s∞) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityFit {
    pub step: f64,
    /// `c₁ … c₈`.
    pub coeffs: Vec<Complex64>,
    /// Geometric decay ratio of the scaled coefficients.
    pub ratio: f64,
}

impl InfinityFit {
    pub fn eval(&self, sigma: f64) -> Complex64 {
        let x = Complex64::new(sigma, 0.0);
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| (acc + c) * x)
    }

    pub fn span(&self) -> f64 {
        FIT_DEGREE as f64 * self.step
    }
}

fn fit_at_infinity(param: &SphericalParam, end: End, h: f64) -> Result<InfinityFit> {
    let n = FIT_DEGREE;
    let span = n as f64 * h;
    let mut vander = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = DVector::<Complex64>::zeros(n);
    for k in 1..=n {
        let x = k as f64 * h;
        let t = param.t_at_tail(x, end)?;
        rhs[k - 1] = param.curve().value_unchecked(t).inv();
        let u = x / span;
        for j in 1..=n {
            vander[(k - 1, j - 1)] = Complex64::new(u.powi(j as i32), 0.0);
        }
    }
    let scaled = vander
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotAnalyticAtInfinity(format!("singular fit at {end} end")))?;
    // σ = −x at the right end, +x at the left end
    let sign = -end.sign();
    let coeffs = scaled
        .iter()
        .enumerate()
        .map(|(j, d)| d * (sign.powi(j as i32 + 1) / span.powi(j as i32 + 1)))
        .collect();
    let d1 = scaled[0].norm();
    let ratio = (4..n)
        .map(|j| (scaled[j].norm() / d1).powf(1.0 / j as f64))
        .fold(0.0, f64::max);
    Ok(InfinityFit { step: h, coeffs, ratio })
}

/// Checks that `1/δ` is analytic and regular at the ∞-parameter of `end`.
pub fn check_analytic_at_infinity(param: &SphericalParam, end: End) -> Result<InfinityFit> {
    let h0 = 1e-2f64.min(param.period() / 16.0);
    let fits = [h0, h0 / 2.0, h0 / 4.0]
        .iter()
        .map(|&h| fit_at_infinity(param, end, h))
        .collect::<Result<Vec<_>>>()?;
    let best = &fits[2];
    let c1 = best.coeffs[0];
    if !(c1.norm() > 1e-8) {
        return Err(Error::NotAnalyticAtInfinity(format!(
            "vanishing derivative {c1} of 1/δ at the {end} end"
        )));
    }
    let drift = fits
        .windows(2)
        .map(|w| (w[0].coeffs[0] - w[1].coeffs[0]).norm() / c1.norm())
        .fold(0.0, f64::max);
    if drift > 1e-6 {
        return Err(Error::NotAnalyticAtInfinity(format!(
            "derivative of 1/δ at the {end} end does not settle: relative drift {drift:.3e} over step sizes {h0:.1e}..{:.1e}",
            h0 / 4.0
        )));
    }
    if let Some(f) = fits.iter().find(|f| !(f.ratio < 0.9)) {
        return Err(Error::NotAnalyticAtInfinity(format!(
            "coefficients of 1/δ at the {end} end do not decay (ratio {:.3}, step {:.1e})",
            f.ratio, f.step
        )));
    }
    Ok(best.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// Past ∞ the curve re-enters from its other end.
    Periodic,
    /// Past ∞ only the local fit is available.
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    /// Spherical parameter where the curve passes through ∞.
    pub crossing: f64,
    pub kind: StepKind,
    /// `d(1/δ)/ds` at the crossing; modulus 1 under unit spherical speed.
    pub derivative: Complex64,
    pub speed_residual: f64,
    #[serde(with = "extended")]
    pub domain: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub endpoint: End,
    pub classification: EndpointClass,
    pub tail: TailStats,
    #[serde(with = "extended")]
    pub spherical_domain: [f64; 2],
    pub steps: Vec<ContinuationStep>,
    /// Why continuation stopped, when it stopped before the step budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<String>,
}

/// Both ends of a maximal-domain run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    #[serde(with = "extended")]
    pub spherical_domain: [f64; 2],
    pub left: ExtensionReport,
    pub right: ExtensionReport,
}

/// Domain bounds with `null` for an unbounded side.
mod extended {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(d: &[f64; 2], s: S) -> Result<S::Ok, S::Error> {
        let wire: [Option<f64>; 2] = [d[0].is_finite().then_some(d[0]), d[1].is_finite().then_some(d[1])];
        wire.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 2], D::Error> {
        let [lo, hi] = <[Option<f64>; 2]>::deserialize(d)?;
        Ok([lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)])
    }
}

/// A curve continued through ∞ in its spherical parameter.
#[derive(Debug, Clone)]
pub struct ContinuedCurve {
    param: SphericalParam,
    domain: [f64; 2],
    period: Option<f64>,
    right_fit: Option<InfinityFit>,
    left_fit: Option<InfinityFit>,
}

impl ContinuedCurve {
    pub fn domain(&self) -> [f64; 2] {
        self.domain
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn param(&self) -> &SphericalParam {
        &self.param
    }

    fn in_domain(&self, u: f64) -> bool {
        u > self.domain[0] && u < self.domain[1]
    }

    pub fn evaluate(&self, u: f64) -> Result<SpherePoint> {
        if !self.in_domain(u) {
            return Err(Error::OutOfRange {
                value: u,
                lo: self.domain[0],
                hi: self.domain[1],
            });
        }
        let (a, b) = self.param.range();
        let mut s = u;
        if let Some(p) = self.period {
            s -= p * ((s - a) / p).floor();
        }
        if s == a || s == b {
            return Ok(SpherePoint::Infinity);
        }
        if s > b {
            let fit = self.right_fit.as_ref().ok_or(Error::OutOfRange { value: u, lo: a, hi: b })?;
            return Ok(SphereChart::Inverted.point(fit.eval(s - b)));
        }
        if s < a {
            let fit = self.left_fit.as_ref().ok_or(Error::OutOfRange { value: u, lo: a, hi: b })?;
            return Ok(SphereChart::Inverted.point(fit.eval(s - a)));
        }
        self.param.delta(s)
    }

    /// Value in the standard chart; `None` at ∞.
    pub fn value(&self, u: f64) -> Result<Option<Complex64>> {
        Ok(SphereChart::Standard.coordinate(self.evaluate(u)?))
    }
}

/// Open ends only; closed ends are finite points.
fn end_is_open(curve: &AnalyticCurve, end: End) -> bool {
    let d = curve.domain();
    match end {
        End::Right => !d.hi_closed || d.hi.is_infinite(),
        End::Left => !d.lo_closed || d.lo.is_infinite(),
    }
}

struct EndState {
    report: ExtensionReport,
    fit: Option<InfinityFit>,
    outcome: Option<Error>,
}

fn end_state(curve: &AnalyticCurve, param: Option<&SphericalParam>, end: End) -> EndState {
    let (classification, tail) = classify_endpoint(curve, end);
    let domain = param
        .map(|p| [p.range().0, p.range().1])
        .unwrap_or([f64::NEG_INFINITY, f64::INFINITY]);
    let mut report = ExtensionReport {
        endpoint: end,
        classification,
        tail,
        spherical_domain: domain,
        steps: Vec::new(),
        stop: None,
    };
    if classification != EndpointClass::Infinity || !end_is_open(curve, end) {
        report.stop = Some(format!("obstruction: {}", classification.name()));
        return EndState {
            report,
            fit: None,
            outcome: None,
        };
    }
    let Some(param) = param else {
        report.stop = Some("divergent spherical length".into());
        return EndState {
            report,
            fit: None,
            outcome: Some(Error::DivergentLength(format!("spherical length toward the {end} end"))),
        };
    };
    match check_analytic_at_infinity(param, end) {
        Ok(fit) => EndState {
            report,
            fit: Some(fit),
            outcome: None,
        },
        Err(e) => {
            report.stop = Some(e.to_string());
            EndState {
                report,
                fit: None,
                outcome: Some(e),
            }
        }
    }
}

fn germs_match(right: &InfinityFit, left: &InfinityFit) -> bool {
    let scale = right.coeffs[0].norm();
    (0..3).all(|j| (right.coeffs[j] - left.coeffs[j]).norm() <= 1e-6 * scale * 10f64.powi(j as i32))
}

/// Continues the curve through ∞ at the requested ends, up to `max_steps`
/// steps per end.
pub fn continue_curve(curve: &AnalyticCurve, ends: &[End], max_steps: usize) -> Result<(DomainReport, ContinuedCurve)> {
    let param = SphericalParam::new(curve);
    let param_ref = param.as_ref().ok();
    let mut left = end_state(curve, param_ref, End::Left);
    let mut right = end_state(curve, param_ref, End::Right);
    let (a, b) = param_ref.map(|p| p.range()).unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let periodic = match (&left.fit, &right.fit) {
        (Some(l), Some(r)) => germs_match(r, l),
        _ => false,
    };
    let mut domain = [a, b];
    for (state, end) in [(&mut left, End::Left), (&mut right, End::Right)] {
        if !ends.contains(&end) || max_steps == 0 {
            continue;
        }
        let Some(fit) = state.fit.clone() else { continue };
        let speed_residual = (fit.coeffs[0].norm() - 1.0).abs();
        let side = end.sign();
        let steps = if periodic { max_steps } else { 1 };
        for _ in 0..steps {
            let crossing = if side > 0.0 { domain[1] } else { domain[0] };
            let grow = if periodic { b - a } else { fit.span() };
            if side > 0.0 {
                domain[1] += grow;
            } else {
                domain[0] -= grow;
            }
            state.report.steps.push(ContinuationStep {
                crossing,
                kind: if periodic { StepKind::Periodic } else { StepKind::Local },
                derivative: fit.coeffs[0],
                speed_residual,
                domain,
            });
        }
        if !periodic && max_steps > 1 {
            state.report.stop = Some("local continuation only: the germ past ∞ does not re-enter the curve".into());
        }
    }
    left.report.spherical_domain = domain;
    right.report.spherical_domain = domain;
    for (state, end) in [(&left, End::Left), (&right, End::Right)] {
        if ends.contains(&end) {
            if let Some(Error::NotAnalyticAtInfinity(msg)) = &state.outcome {
                return Err(Error::NotAnalyticAtInfinity(msg.clone()));
            }
        }
    }
    let param = param?;
    let continued = ContinuedCurve {
        domain,
        period: periodic.then_some(b - a),
        right_fit: (!periodic && ends.contains(&End::Right)).then(|| right.fit.clone()).flatten(),
        left_fit: (!periodic && ends.contains(&End::Left)).then(|| left.fit.clone()).flatten(),
        param,
    };
    Ok((
        DomainReport {
            spherical_domain: domain,
            left: left.report,
            right: right.report,
        },
        continued,
    ))
}

/// One continuation at `end`; fails when `1/δ` is not analytic at the
/// ∞-parameter there.
pub fn continue_through_infinity(curve: &AnalyticCurve, end: End, steps: usize) -> Result<ExtensionReport> {
    let (report, _) = continue_curve(curve, &[end], steps)?;
    Ok(match end {
        End::Left => report.left,
        End::Right => report.right,
    })
}

/// Continues at both ends for up to `max_steps` steps each and records the
/// stopping reason per end. Failures become stop reasons.
pub fn maximal_spherical_domain(curve: &AnalyticCurve, max_steps: usize) -> DomainReport {
    match continue_curve(curve, &[End::Left, End::Right], max_steps) {
        Ok((report, _)) => report,
        Err(_) => {
            // redo per end so one failing end does not hide the other
            let param = SphericalParam::new(curve).ok();
            let mut ends = Vec::new();
            for end in [End::Left, End::Right] {
                let r = continue_through_infinity(curve, end, max_steps).unwrap_or_else(|e| {
                    let mut st = end_state(curve, param.as_ref(), end);
                    st.report.stop = Some(e.to_string());
                    st.report
                });
                ends.push(r);
            }
            let right = ends.pop().expect("two ends");
            let left = ends.pop().expect("two ends");
            DomainReport {
                spherical_domain: [left.spherical_domain[0], right.spherical_domain[1]],
                left,
                right,
            }
        }
    }
}

/// Chordal distance of `δ(u + period)` from `δ(u)` at `n` points of `[lo, hi]`.
pub fn periodicity_defect(c: &ContinuedCurve, lo: f64, hi: f64, n: usize) -> Result<f64> {
    let p = c
        .period()
        .ok_or_else(|| Error::InvalidConfig("continued curve is not periodic".into()))?;
    let (a, b) = c.param().range();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let u = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        let base = c.param().delta(u.clamp(a, b))?;
        worst = worst.max(c.evaluate(u + p)?.distance(base));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Catalog;
    use std::f64::consts::PI;

    fn c(z: (f64, f64)) -> Complex64 {
        Complex64::new(z.0, z.1)
    }

    #[test]
    fn chordal_properties() {
        let pts = [(0.3, -1.2), (2.0, 0.5), (-0.1, 0.05), (7.0, -3.0)];
        for &p in &pts {
            assert_eq!(chordal(c(p), c(p)), 0.0);
            let z = c(p);
            assert!((chordal_to_infinity(z) - 2.0 / (1.0 + z.norm_sqr()).sqrt()).abs() < 1e-15);
            for &q in &pts {
                let w = c(q);
                assert!((chordal(z.inv(), w.inv()) - chordal(z, w)).abs() < 1e-12);
                assert!((chordal(z, w) - chordal(w, z)).abs() < 1e-15);
            }
        }
        // antipodes 1 and −1 on the equator
        assert!((chordal(c((1.0, 0.0)), c((-1.0, 0.0))) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn chart_round_trip_and_hysteresis() {
        for r in [0.1, 0.5, 1.0, 3.0, 10.0] {
            for k in 0..8 {
                let z = Complex64::from_polar(r, k as f64 * 0.7);
                let w = SphereChart::Standard.transition(z);
                assert!((SphereChart::Inverted.transition(w) - z).norm() <= 1e-14 * r);
            }
        }
        let big = SpherePoint::Finite(c((3.0, 0.0)));
        let mid = SpherePoint::Finite(c((1.0, 0.0)));
        let small = SpherePoint::Finite(c((0.4, 0.0)));
        let chart = SphereChart::Standard.select(big);
        assert_eq!(chart, SphereChart::Inverted);
        assert_eq!(chart.select(mid), SphereChart::Inverted);
        assert_eq!(chart.select(small), SphereChart::Standard);
        assert_eq!(SphereChart::Inverted.coordinate(SpherePoint::Infinity), Some(c((0.0, 0.0))));
    }

    #[test]
    fn classification_examples() {
        let line = AnalyticCurve::catalog(Catalog::Line);
        assert_eq!(classify_endpoint(&line, End::Right).0, EndpointClass::Infinity);
        assert_eq!(classify_endpoint(&line, End::Left).0, EndpointClass::Infinity);

        let sq = AnalyticCurve::catalog(Catalog::Square);
        match classify_endpoint(&sq, End::Right).0 {
            EndpointClass::FinitePoint { value } => assert!((value - 1.0).norm() < 1e-6),
            other => panic!("{other:?}"),
        }
        match classify_endpoint(&sq, End::Left).0 {
            EndpointClass::FinitePoint { value } => assert!(value.norm() < 1e-6),
            other => panic!("{other:?}"),
        }

        let circle = Catalog::Circle.curve(Interval::new(0.0, f64::INFINITY, false, false).unwrap());
        match classify_endpoint(&circle, End::Right).0 {
            EndpointClass::NonSingleton { diameter } => assert!(diameter > 1.0 && diameter <= 2.0 + 1e-12),
            other => panic!("{other:?}"),
        }

        let spiral = AnalyticCurve::catalog(Catalog::LogSpiral);
        assert_eq!(classify_endpoint(&spiral, End::Right).0, EndpointClass::Infinity);
    }

    #[test]
    fn closed_end_is_evaluation() {
        let p = AnalyticCurve::catalog(Catalog::Parabola);
        let (class, stats) = classify_endpoint(&p, End::Right);
        assert_eq!(class, EndpointClass::FinitePoint { value: c((1.0, 1.0)) });
        assert_eq!(stats.samples, 1);
    }

    #[test]
    fn inversion() {
        let line = Catalog::Line.curve(Interval::closed(1.0, 2.0).unwrap());
        let inv = invert_curve(&line).unwrap();
        assert!((inv.evaluate(1.6).unwrap() - 1.0 / 1.6).norm() < 1e-15);
        let circle = AnalyticCurve::catalog(Catalog::Circle);
        let inv = invert_curve(&circle).unwrap();
        assert!((inv.evaluate(0.8).unwrap() - Complex64::new(0.0, -0.8).exp()).norm() < 1e-14);
        let through_zero = Catalog::Line.curve(Interval::closed(-1.0, 1.0).unwrap());
        assert!(matches!(invert_curve(&through_zero), Err(Error::ZeroOnDomain(_))));
    }

    #[test]
    fn isometry() {
        let line = AnalyticCurve::catalog(Catalog::Line);
        assert!(spherical_isometry_check(&line, 1.0, 2.0).unwrap() < 1e-10);
        let circle = AnalyticCurve::catalog(Catalog::Circle);
        assert!(spherical_isometry_check(&circle, 0.0, PI).unwrap() < 1e-10);
    }

    #[test]
    fn spherical_parameter_of_line() {
        let p = SphericalParam::new(&AnalyticCurve::catalog(Catalog::Line)).unwrap();
        let (a, b) = p.range();
        assert!((a + PI / 2.0).abs() < 1e-12 && (b - PI / 2.0).abs() < 1e-12);
        for s in [-1.5, -0.3, 0.0, 0.9, 1.5] {
            let t = p.t_of_s(s).unwrap();
            assert!((t - s.tan()).abs() <= 1e-12 * (1.0 + t.abs()), "s = {s}");
        }
        assert!((p.s_of_t(50.0).unwrap() - 50f64.atan()).abs() < 1e-13);
    }

    #[test]
    fn line_fit_at_infinity() {
        let p = SphericalParam::new(&AnalyticCurve::catalog(Catalog::Line)).unwrap();
        // 1/tan(π/2 + σ) = −tan σ
        for end in [End::Left, End::Right] {
            let fit = check_analytic_at_infinity(&p, end).unwrap();
            assert!((fit.coeffs[0] + 1.0).norm() < 1e-8, "{end}: {:?}", fit.coeffs[0]);
            assert!((fit.coeffs[2] + 1.0 / 3.0).norm() < 1e-4);
        }
    }

    #[test]
    fn line_continuation() {
        let line = AnalyticCurve::catalog(Catalog::Line);
        let r = continue_through_infinity(&line, End::Right, 1).unwrap();
        assert!((r.spherical_domain[0] + PI / 2.0).abs() < 1e-8);
        assert!((r.spherical_domain[1] - 1.5 * PI).abs() < 1e-8);
        assert_eq!(r.steps.len(), 1);
        assert_eq!(r.steps[0].kind, StepKind::Periodic);
        assert!(r.steps[0].speed_residual < 1e-8);

        let m = maximal_spherical_domain(&line, 3);
        assert!((m.spherical_domain[0] + 3.5 * PI).abs() < 1e-8);
        assert!((m.spherical_domain[1] - 3.5 * PI).abs() < 1e-8);
    }

    #[test]
    fn continued_line_is_tan() {
        let line = AnalyticCurve::catalog(Catalog::Line);
        let (_, cc) = continue_curve(&line, &[End::Right], 1).unwrap();
        for u in [1.7, 2.5, 3.0, 4.4] {
            let v = cc.value(u).unwrap().unwrap();
            assert!((v.re - u.tan()).abs() < 1e-8 * (1.0 + u.tan().powi(2)), "u = {u}");
        }
        assert!(periodicity_defect(&cc, -1.4, 1.4, 20).unwrap() < 1e-8);
    }

    #[test]
    fn essential_singularity_rejected() {
        let e = AnalyticCurve::catalog(Catalog::ExpEssential);
        assert!(matches!(
            continue_through_infinity(&e, End::Right, 1),
            Err(Error::NotAnalyticAtInfinity(_))
        ));
    }

    #[test]
    fn obstructions_are_reported() {
        let sq = AnalyticCurve::catalog(Catalog::Square);
        let m = maximal_spherical_domain(&sq, 2);
        assert!(m.left.steps.is_empty() && m.right.steps.is_empty());
        assert_eq!(m.left.classification.name(), "finite_point");
        assert!((m.spherical_domain[1] - PI / 4.0).abs() < 1e-10);

        let circle = Catalog::Circle.curve(Interval::new(0.0, f64::INFINITY, false, false).unwrap());
        let m = maximal_spherical_domain(&circle, 2);
        assert_eq!(m.right.classification.name(), "non_singleton");
    }

    #[test]
    fn report_json_round_trip() {
        let line = AnalyticCurve::catalog(Catalog::Line);
        let m = maximal_spherical_domain(&line, 1);
        let text = serde_json::to_string(&m).unwrap();
        let back: DomainReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let e = ExtensionReport {
            endpoint: End::Left,
            classification: EndpointClass::NonSingleton { diameter: 2.0 },
            tail: TailStats { samples: 21, dispersion: 1.5 },
            spherical_domain: [0.0, f64::INFINITY],
            steps: vec![],
            stop: Some("obstruction: non_singleton".into()),
        };
        let text = serde_json::to_string(&e).unwrap();
        assert!(text.contains("\"kind\":\"non_singleton\""));
        assert_eq!(serde_json::from_str::<ExtensionReport>(&text).unwrap(), e);
    }
}
