//! Length maps `S(t) = ∫ₐᵗ F(Γ(u)) du`, their inverses, and the
//! reparametrized curve `δ = γ ∘ S⁻¹`.
//!
//! `S` is carried chart by chart: on each chart the speed series
//! `G = F ∘ Γ` is integrated term-wise, and the constant terms are chained
//! with adaptive quadrature so the map is globally continuous. The charts of
//! `δ` come from reverting each `S` chart and composing with the matching
//! chart of `γ`.
//!
//! Chart centers are laid out adaptively: each next center sits half a chart
//! radius past the previous one, where the radius is the smaller of the
//! curve chart radius and the root-test radius of `G`. The nearest chart to
//! a query is the one minimizing distance relative to its radius.

use std::sync::Arc;

use num_complex::Complex64;

use crate::curve::{AnalyticCurve, Interval, Jet, VectorCurve};
use crate::error::{Error, Result};
use crate::functionals::{compose_with_jet, JetFunctional, POSITIVITY_TOL};
use crate::quad::{integrate, QuadOptions};
use crate::series::TruncatedSeries;

/// Number of successive interval doublings allowed for improper integrals.
pub const MAX_DOUBLINGS: usize = 64;

/// Relative distance to a chart center beyond which a chart is not trusted.
const CHART_TRUST: f64 = 0.5;

/// Positive real scalar speed along a curve, pointwise and as chart series.
pub trait SpeedProfile: Send + Sync {
    fn domain(&self) -> Interval;

    /// `F(Γ(t))`, checked to be real positive.
    fn speed_at(&self, t: f64) -> Result<f64>;

    /// Series of `G = F ∘ Γ` around the real point `center`.
    fn speed_series(&self, center: f64) -> Result<TruncatedSeries>;
}

fn check_positive(v: Complex64, what: &str, t: f64) -> Result<f64> {
    if !v.is_finite() || !(v.re > 0.0) || v.im.abs() > POSITIVITY_TOL * (1.0 + v.re) {
        return Err(Error::NonPositiveSpeed(format!("{what} speed {v} at t = {t}")));
    }
    Ok(v.re)
}

/// A complex curve paired with a jet functional.
#[derive(Debug, Clone)]
pub struct CurveSpeed {
    pub curve: AnalyticCurve,
    pub functional: JetFunctional,
}

impl CurveSpeed {
    pub fn new(curve: AnalyticCurve, functional: JetFunctional) -> Self {
        Self { curve, functional }
    }
}

impl SpeedProfile for CurveSpeed {
    fn domain(&self) -> Interval {
        self.curve.domain()
    }

    fn speed_at(&self, t: f64) -> Result<f64> {
        let jet = self.curve.jet(t, self.functional.order())?;
        let v = self.functional.eval(&jet)?;
        check_positive(v, &self.functional.kind().to_string(), t)
    }

    fn speed_series(&self, center: f64) -> Result<TruncatedSeries> {
        let jets = self.curve.jet_series_at(center, self.functional.order());
        compose_with_jet(&self.functional, &jets)
    }
}

pub type VectorEvalFn = dyn Fn(&[Vec<Complex64>]) -> Complex64 + Send + Sync;
pub type VectorSeriesFn = dyn Fn(&[Vec<TruncatedSeries>]) -> Result<TruncatedSeries> + Send + Sync;

/// A functional on vector jets `(γ, γ′, …, γ⁽ᴺ⁾)` of a curve in ℝⁿ.
#[derive(Clone)]
pub struct VectorFunctional {
    pub order: usize,
    eval: Arc<VectorEvalFn>,
    eval_series: Arc<VectorSeriesFn>,
}

impl std::fmt::Debug for VectorFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorFunctional").field("order", &self.order).finish_non_exhaustive()
    }
}

impl VectorFunctional {
    pub fn new<E, S>(order: usize, eval: E, eval_series: S) -> Self
    where
        E: Fn(&[Vec<Complex64>]) -> Complex64 + Send + Sync + 'static,
        S: Fn(&[Vec<TruncatedSeries>]) -> Result<TruncatedSeries> + Send + Sync + 'static,
    {
        Self {
            order,
            eval: Arc::new(eval),
            eval_series: Arc::new(eval_series),
        }
    }

    pub fn eval(&self, jet: &[Vec<Complex64>]) -> Complex64 {
        (self.eval)(jet)
    }
}

/// `√(Σ γ_j′²)`, the Euclidean speed in ℝⁿ.
pub fn vector_euclidean_speed() -> VectorFunctional {
    VectorFunctional::new(
        1,
        |j| j[1].iter().map(|d| d * d).sum::<Complex64>().sqrt(),
        |s| {
            let mut acc = s[1][0].try_mul(&s[1][0])?;
            for d in &s[1][1..] {
                acc = acc.try_add(&d.try_mul(d)?)?;
            }
            acc.sqrt()
        },
    )
}

#[derive(Debug, Clone)]
pub struct VectorSpeed {
    pub curve: VectorCurve,
    pub functional: VectorFunctional,
}

impl SpeedProfile for VectorSpeed {
    fn domain(&self) -> Interval {
        self.curve.domain()
    }

    fn speed_at(&self, t: f64) -> Result<f64> {
        let jet = self.curve.jet(t, self.functional.order)?;
        check_positive(self.functional.eval(&jet), "vector", t)
    }

    fn speed_series(&self, center: f64) -> Result<TruncatedSeries> {
        let jets = self.curve.jet_series_at(center, self.functional.order);
        let g = (self.functional.eval_series)(&jets)?;
        check_positive(g.coeff(0), "vector series", center)?;
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthOptions {
    pub quad: QuadOptions,
    /// Inversion tolerance on `|S(t) − s|`, relative to `max(1, |A|, |B|)`.
    pub inv_tol: f64,
    pub table_size: usize,
    pub max_charts: usize,
}

impl Default for LengthOptions {
    fn default() -> Self {
        Self {
            quad: QuadOptions::default(),
            inv_tol: 1e-13,
            table_size: 64,
            max_charts: 100_000,
        }
    }
}

/// One chart of the length map.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthChart {
    pub center: f64,
    pub radius: f64,
    /// `G = F ∘ Γ`.
    pub speed: TruncatedSeries,
    /// Primitive of `G` whose constant term is `S(center)`.
    pub length: TruncatedSeries,
}

/// The strictly increasing map `S: [a, b] → [A, B]` with `S(anchor) = 0`.
#[derive(Clone)]
pub struct LengthMap {
    profile: Arc<dyn SpeedProfile>,
    source: Interval,
    anchor: f64,
    target: (f64, f64),
    charts: Vec<LengthChart>,
    table: Vec<(f64, f64)>,
    seam_residual: f64,
    opts: LengthOptions,
}

impl std::fmt::Debug for LengthMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LengthMap")
            .field("source", &self.source)
            .field("anchor", &self.anchor)
            .field("target", &self.target)
            .field("charts", &self.charts.len())
            .finish_non_exhaustive()
    }
}

impl LengthMap {
    pub fn build(profile: Arc<dyn SpeedProfile>, source: Interval, anchor: f64, opts: LengthOptions) -> Result<Self> {
        if !source.is_finite() {
            return Err(Error::InvalidInterval(format!(
                "length map needs a finite interval, got {source}"
            )));
        }
        let (lo, hi) = (source.lo, source.hi);
        if !(anchor >= lo && anchor <= hi) {
            return Err(Error::OutOfDomain(anchor));
        }
        for t in Interval::closed(lo, hi)?.grid(65) {
            profile.speed_at(t)?;
        }

        let width = hi - lo;
        let mut charts: Vec<LengthChart> = Vec::new();
        let mut c = lo;
        loop {
            let speed = profile.speed_series(c)?;
            let radius = speed.singularity_radius().unwrap_or(f64::INFINITY).min(speed.radius()).min(width);
            if !(radius > 1e-12 * (1.0 + c.abs())) {
                return Err(Error::InvalidCharts(format!("speed chart at {c} has radius {radius}")));
            }
            charts.push(LengthChart {
                center: c,
                radius,
                length: speed.antiderivative(Complex64::new(0.0, 0.0)),
                speed,
            });
            if c >= hi {
                break;
            }
            if charts.len() >= opts.max_charts {
                return Err(Error::InvalidCharts(format!(
                    "more than {} length charts needed",
                    opts.max_charts
                )));
            }
            c = (c + 0.5 * radius).min(hi);
        }

        // chain constant terms with quadrature between successive centers
        let mut raw = 0.0;
        let mut seam_residual: f64 = 0.0;
        for j in 1..charts.len() {
            let (a, b) = (charts[j - 1].center, charts[j].center);
            let q = integrate(|t| profile.speed_at(t), a, b, &opts.quad)?;
            let predicted = charts[j - 1].length.eval(Complex64::new(b, 0.0)).re;
            raw += q.value;
            seam_residual = seam_residual.max((predicted - raw).abs());
            charts[j].length = charts[j].speed.antiderivative(Complex64::new(raw, 0.0));
        }

        let mut map = Self {
            profile,
            source: Interval::closed(lo, hi)?,
            anchor,
            target: (0.0, 0.0),
            charts,
            table: Vec::new(),
            seam_residual,
            opts,
        };
        let offset = map.raw_length(anchor)?;
        for ch in &mut map.charts {
            ch.length = ch.length.add_scalar(Complex64::new(-offset, 0.0));
        }
        map.target = (map.raw_length(lo)?, map.raw_length(hi)?);
        let n = opts.table_size.max(2);
        map.table = (0..n)
            .map(|i| {
                let t = if i == n - 1 {
                    hi
                } else {
                    lo + width * i as f64 / (n - 1) as f64
                };
                map.raw_length(t).map(|s| (t, s))
            })
            .collect::<Result<_>>()?;
        Ok(map)
    }

    fn nearest(&self, t: f64) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, ch) in self.charts.iter().enumerate() {
            let rel = (t - ch.center).abs() / ch.radius;
            if rel < best.1 {
                best = (i, rel);
            }
        }
        best
    }

    fn raw_length(&self, t: f64) -> Result<f64> {
        let (i, rel) = self.nearest(t);
        let ch = &self.charts[i];
        if rel <= CHART_TRUST {
            Ok(ch.length.eval(Complex64::new(t, 0.0)).re)
        } else {
            let q = integrate(|u| self.profile.speed_at(u), ch.center, t, &self.opts.quad)?;
            Ok(ch.length.coeff(0).re + q.value)
        }
    }

    pub fn source(&self) -> Interval {
        self.source
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// `[A, B]`.
    pub fn target(&self) -> (f64, f64) {
        self.target
    }

    pub fn total(&self) -> f64 {
        self.target.1 - self.target.0
    }

    pub fn charts(&self) -> &[LengthChart] {
        &self.charts
    }

    pub fn profile(&self) -> &Arc<dyn SpeedProfile> {
        &self.profile
    }

    pub fn options(&self) -> &LengthOptions {
        &self.opts
    }

    /// Largest disagreement between a chart's primitive continued to the
    /// next center and the quadrature-chained value there.
    pub fn seam_residual(&self) -> f64 {
        self.seam_residual
    }

    /// `S(t)`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * (1.0 + self.source.hi.abs().max(self.source.lo.abs()));
        if !(t >= self.source.lo - slack && t <= self.source.hi + slack) {
            return Err(Error::OutOfDomain(t));
        }
        self.raw_length(t.clamp(self.source.lo, self.source.hi))
    }

    /// `S′(t) = F(Γ(t))`.
    pub fn speed(&self, t: f64) -> Result<f64> {
        self.profile.speed_at(t)
    }

    /// `S(t)` by direct quadrature from the anchor.
    pub fn eval_by_quadrature(&self, t: f64) -> Result<f64> {
        Ok(integrate(|u| self.profile.speed_at(u), self.anchor, t, &self.opts.quad)?.value)
    }

    /// `t = S⁻¹(s)` by safeguarded Newton iteration started from the
    /// monotone table, with bisection on overshoot.
    pub fn invert_at(&self, s: f64) -> Result<f64> {
        let (a, b) = self.target;
        let scale = 1f64.max(a.abs()).max(b.abs());
        if !(s >= a - 1e-12 * scale && s <= b + 1e-12 * scale) {
            return Err(Error::OutOfRange { value: s, lo: a, hi: b });
        }
        if s <= a {
            return Ok(self.source.lo);
        }
        if s >= b {
            return Ok(self.source.hi);
        }
        let i = self.table.partition_point(|&(_, v)| v <= s).clamp(1, self.table.len() - 1);
        let (mut t_lo, s_lo) = self.table[i - 1];
        let (mut t_hi, s_hi) = self.table[i];
        let mut t = if s_hi > s_lo {
            t_lo + (t_hi - t_lo) * (s - s_lo) / (s_hi - s_lo)
        } else {
            0.5 * (t_lo + t_hi)
        };
        let tol = self.opts.inv_tol * scale;
        for _ in 0..200 {
            let r = self.raw_length(t)? - s;
            if r.abs() <= tol {
                return Ok(t);
            }
            if r > 0.0 {
                t_hi = t;
            } else {
                t_lo = t;
            }
            if t_hi - t_lo <= 4.0 * f64::EPSILON * (1.0 + t.abs()) {
                return Ok(t);
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
}

/// Anchor convention: `0` when it lies in the interval, else the left end.
pub fn default_anchor(domain: &Interval) -> f64 {
    if domain.lo <= 0.0 && domain.hi >= 0.0 {
        0.0
    } else if domain.lo.is_finite() {
        domain.lo
    } else {
        domain.hi
    }
}

/// `S` for `curve` under `functional`, with `S(anchor) = 0`, on the curve's
/// (finite) domain.
pub fn length_map(curve: &AnalyticCurve, functional: &JetFunctional, anchor: f64) -> Result<LengthMap> {
    let d = curve.domain();
    let source = Interval::closed(d.lo, d.hi)?;
    length_map_on(curve, functional, source, anchor, LengthOptions::default())
}

pub fn length_map_on(
    curve: &AnalyticCurve,
    functional: &JetFunctional,
    source: Interval,
    anchor: f64,
    opts: LengthOptions,
) -> Result<LengthMap> {
    let profile = Arc::new(CurveSpeed::new(curve.clone(), functional.clone()));
    LengthMap::build(profile, source, anchor, opts)
}

/// One chart of `δ`, expressed in the length parameter `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaChart {
    pub t_center: f64,
    pub s_center: f64,
    /// `t(s) = S⁻¹(s)` near `s_center`.
    pub inverse: TruncatedSeries,
    /// `δ(s)` near `s_center`.
    pub series: TruncatedSeries,
}

fn delta_chart(curve: &AnalyticCurve, length: &TruncatedSeries, t_center: f64) -> Result<DeltaChart> {
    let inverse = length.revert().map_err(|_| Error::ChartReversionFailed(t_center))?;
    let gamma = curve.local_series(t_center, curve.order());
    let series = gamma.compose(&inverse)?;
    Ok(DeltaChart {
        t_center,
        s_center: inverse.center().re,
        inverse,
        series,
    })
}

/// `δ = γ ∘ S⁻¹` together with its series charts in `s`.
#[derive(Debug, Clone)]
pub struct ReparametrizedCurve {
    base: AnalyticCurve,
    functional: JetFunctional,
    map: LengthMap,
    charts: Vec<DeltaChart>,
}

impl ReparametrizedCurve {
    pub fn new(base: AnalyticCurve, functional: JetFunctional, map: LengthMap) -> Result<Self> {
        let charts = map
            .charts()
            .iter()
            .map(|ch| delta_chart(&base, &ch.length, ch.center))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            base,
            functional,
            map,
            charts,
        })
    }

    pub fn base(&self) -> &AnalyticCurve {
        &self.base
    }

    pub fn functional(&self) -> &JetFunctional {
        &self.functional
    }

    pub fn map(&self) -> &LengthMap {
        &self.map
    }

    pub fn charts(&self) -> &[DeltaChart] {
        &self.charts
    }

    /// `[A, B]`.
    pub fn domain(&self) -> (f64, f64) {
        self.map.target()
    }

    pub fn t_of_s(&self, s: f64) -> Result<f64> {
        self.map.invert_at(s)
    }

    fn nearest(&self, s: f64) -> Option<&DeltaChart> {
        self.charts
            .iter()
            .map(|c| (c, (s - c.s_center).abs() / c.series.radius().max(f64::MIN_POSITIVE)))
            .filter(|(_, rel)| *rel <= CHART_TRUST)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| c)
    }

    fn check(&self, s: f64) -> Result<()> {
        let (a, b) = self.domain();
        let slack = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if s >= a - slack && s <= b + slack {
            Ok(())
        } else {
            Err(Error::OutOfRange { value: s, lo: a, hi: b })
        }
    }

    pub fn evaluate(&self, s: f64) -> Result<Complex64> {
        self.derivative(s, 0)
    }

    /// `δ⁽ᵏ⁾(s)`; falls back to a chart built at `S⁻¹(s)` when no stored
    /// chart is close enough.
    pub fn derivative(&self, s: f64, k: usize) -> Result<Complex64> {
        self.check(s)?;
        let z = Complex64::new(s, 0.0);
        if let Some(c) = self.nearest(s).filter(|c| k < c.series.len()) {
            return Ok(c.series.derivative_at(z, k));
        }
        let t = self.map.invert_at(s)?;
        let g = self.map.profile().speed_series(t)?;
        let length = g.antiderivative(Complex64::new(self.map.eval(t)?, 0.0));
        let local = delta_chart(&self.base, &length, t)?;
        Ok(local.series.derivative_at(z, k))
    }

    pub fn jet(&self, s: f64, order: usize) -> Result<Jet> {
        let d = (0..=order).map(|k| self.derivative(s, k)).collect::<Result<Vec<_>>>()?;
        Ok(Jet::from_derivatives(&d))
    }

    /// `δ` as a chart-only curve on `[A, B]`.
    pub fn as_curve(&self) -> Result<AnalyticCurve> {
        let (a, b) = self.domain();
        AnalyticCurve::from_charts(
            self.charts.iter().map(|c| c.series.clone()).collect(),
            Interval::closed(a, b)?,
        )
    }

    pub fn chart_radii(&self) -> Vec<f64> {
        self.charts.iter().map(|c| c.series.radius()).collect()
    }
}

/// Reparametrizes `curve` by the `functional` length from the default anchor.
pub fn reparametrize(curve: &AnalyticCurve, functional: &JetFunctional) -> Result<ReparametrizedCurve> {
    let anchor = default_anchor(&curve.domain());
    let map = length_map(curve, functional, anchor)?;
    ReparametrizedCurve::new(curve.clone(), functional.clone(), map)
}

pub fn reparametrize_on(
    curve: &AnalyticCurve,
    functional: &JetFunctional,
    source: Interval,
    anchor: f64,
    opts: LengthOptions,
) -> Result<ReparametrizedCurve> {
    let map = length_map_on(curve, functional, source, anchor, opts)?;
    ReparametrizedCurve::new(curve.clone(), functional.clone(), map)
}

/// Like [`reparametrize_on`], but an infinite `domain` is first cut to the
/// finite part outside which at most `tail_tol` of length remains per end.
pub fn reparametrize_improper(
    curve: &AnalyticCurve,
    functional: &JetFunctional,
    domain: Interval,
    anchor: f64,
    tail_tol: f64,
    opts: LengthOptions,
) -> Result<ReparametrizedCurve> {
    let source = if domain.is_finite() {
        Interval::closed(domain.lo, domain.hi)?
    } else {
        let profile = CurveSpeed::new(curve.clone(), functional.clone());
        finite_core(&profile, domain, anchor, tail_tol)?
    };
    reparametrize_on(curve, functional, source, anchor, opts)
}

/// `max |F(jet of δ at s) − 1|` over a uniform grid of `[A, B]`.
pub fn unit_speed_residual(rc: &ReparametrizedCurve, grid: usize) -> Result<f64> {
    let (a, b) = rc.domain();
    let n = grid.max(2);
    let order = rc.functional.order();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let s = a + (b - a) * i as f64 / (n - 1) as f64;
        let v = rc.functional.eval(&rc.jet(s, order)?)?;
        worst = worst.max((v - 1.0).norm());
    }
    Ok(worst)
}

/// Result of a (possibly improper) length integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalLength {
    pub value: f64,
    /// Contribution of the last doubling piece at each infinite end.
    pub tail: f64,
    pub doublings: usize,
    pub quad_error: f64,
}

/// `∫ of the speed from `from` toward ±∞ by interval doubling.
///
/// Pieces `[x, x + w]` with doubling `w` are added until a piece falls below
/// `max(abs_tol, rel_tol·sum)`; fails after [`MAX_DOUBLINGS`] pieces.
pub fn integrate_to_infinity(
    profile: &dyn SpeedProfile,
    from: f64,
    direction: f64,
    quad: &QuadOptions,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<TotalLength> {
    let dir = direction.signum();
    let mut x = from;
    let mut w = 1f64.max(from.abs());
    let mut sum = 0.0;
    let mut err = 0.0;
    for k in 0..MAX_DOUBLINGS {
        let next = x + dir * w;
        let q = integrate(|t| profile.speed_at(t), x.min(next), x.max(next), quad)?;
        sum += q.value;
        err += q.error;
        if q.value.abs() <= abs_tol.max(rel_tol * sum.abs()) {
            return Ok(TotalLength {
                value: sum,
                tail: q.value.abs(),
                doublings: k + 1,
                quad_error: err,
            });
        }
        x = next;
        w *= 2.0;
    }
    Err(Error::DivergentLength(format!(
        "no convergence after {MAX_DOUBLINGS} doublings from {from} (partial {sum})"
    )))
}

/// Length between `a` and `b`, where either end may be infinite.
pub fn total_length_profile(profile: &dyn SpeedProfile, a: f64, b: f64, quad: &QuadOptions) -> Result<TotalLength> {
    if !(a < b) {
        return Err(Error::InvalidInterval(format!("[{a}, {b}]")));
    }
    let tail_tol = 1e-12;
    let mid = match (a.is_finite(), b.is_finite()) {
        (true, true) => {
            let q = integrate(|t| profile.speed_at(t), a, b, quad)?;
            return Ok(TotalLength {
                value: q.value,
                tail: 0.0,
                doublings: 0,
                quad_error: q.error,
            });
        }
        (true, false) => a,
        (false, true) => b,
        (false, false) => 0.0,
    };
    let mut out = TotalLength {
        value: 0.0,
        tail: 0.0,
        doublings: 0,
        quad_error: 0.0,
    };
    if !a.is_finite() {
        let l = integrate_to_infinity(profile, mid, -1.0, quad, tail_tol, 0.0)?;
        out.value += l.value;
        out.tail += l.tail;
        out.doublings += l.doublings;
        out.quad_error += l.quad_error;
    }
    if !b.is_finite() {
        let r = integrate_to_infinity(profile, mid, 1.0, quad, tail_tol, 0.0)?;
        out.value += r.value;
        out.tail += r.tail;
        out.doublings += r.doublings;
        out.quad_error += r.quad_error;
    }
    Ok(out)
}

/// Total `F`-length of `curve` between `a` and `b` (ends may be infinite).
pub fn total_length(curve: &AnalyticCurve, functional: &JetFunctional, a: f64, b: f64) -> Result<f64> {
    let profile = CurveSpeed::new(curve.clone(), functional.clone());
    Ok(total_length_profile(&profile, a, b, &QuadOptions::default())?.value)
}

/// Finite part of an interval outside which the remaining length at each
/// infinite end is below `tail_tol`.
pub fn finite_core(profile: &dyn SpeedProfile, domain: Interval, anchor: f64, tail_tol: f64) -> Result<Interval> {
    let quad = QuadOptions::default();
    let end = |dir: f64| -> Result<f64> {
        let mut x = anchor;
        let mut w = 1f64.max(anchor.abs());
        for _ in 0..MAX_DOUBLINGS {
            let next = x + dir * w;
            let q = integrate(|t| profile.speed_at(t), x.min(next), x.max(next), &quad)?;
            x = next;
            if q.value.abs() <= tail_tol {
                return Ok(x);
            }
            w *= 2.0;
        }
        Err(Error::DivergentLength(format!("tail toward {dir}∞ from {anchor}")))
    };
    let lo = if domain.lo.is_finite() { domain.lo } else { end(-1.0)? };
    let hi = if domain.hi.is_finite() { domain.hi } else { end(1.0)? };
    Interval::closed(lo, hi)
}

/// Reparametrization of a curve in ℝⁿ, one `δ` series per component.
#[derive(Debug, Clone)]
pub struct VectorReparametrized {
    map: LengthMap,
    charts: Vec<(f64, Vec<TruncatedSeries>)>,
}

pub fn reparametrize_vector(curve: &VectorCurve, functional: &VectorFunctional, anchor: f64) -> Result<VectorReparametrized> {
    let d = curve.domain();
    let profile = Arc::new(VectorSpeed {
        curve: curve.clone(),
        functional: functional.clone(),
    });
    let map = LengthMap::build(profile, Interval::closed(d.lo, d.hi)?, anchor, LengthOptions::default())?;
    let charts = map
        .charts()
        .iter()
        .map(|ch| {
            let inverse = ch.length.revert().map_err(|_| Error::ChartReversionFailed(ch.center))?;
            let comps = curve
                .components()
                .iter()
                .map(|c| c.local_series(ch.center, c.order()).compose(&inverse))
                .collect::<Result<Vec<_>>>()?;
            Ok((inverse.center().re, comps))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VectorReparametrized { map, charts })
}

impl VectorReparametrized {
    pub fn map(&self) -> &LengthMap {
        &self.map
    }

    pub fn charts(&self) -> impl Iterator<Item = &[TruncatedSeries]> {
        self.charts.iter().map(|(_, c)| c.as_slice())
    }

    pub fn derivative(&self, s: f64, k: usize) -> Result<Vec<f64>> {
        let (a, b) = self.map.target();
        if !(s >= a - 1e-12 && s <= b + 1e-12) {
            return Err(Error::OutOfRange { value: s, lo: a, hi: b });
        }
        let (_, comps) = self
            .charts
            .iter()
            .min_by(|x, y| {
                let rx = (s - x.0).abs() / x.1[0].radius();
                let ry = (s - y.0).abs() / y.1[0].radius();
                rx.total_cmp(&ry)
            })
            .ok_or(Error::OutOfRange { value: s, lo: a, hi: b })?;
        Ok(comps
            .iter()
            .map(|c| c.derivative_at(Complex64::new(s, 0.0), k).re)
            .collect())
    }

    pub fn evaluate(&self, s: f64) -> Result<Vec<f64>> {
        self.derivative(s, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Catalog;
    use crate::functionals::{euclidean_speed, hyperbolic_speed, spherical_speed};
    use std::f64::consts::PI;

    fn on(kind: Catalog, lo: f64, hi: f64) -> AnalyticCurve {
        kind.curve(Interval::closed(lo, hi).unwrap())
    }

    #[test]
    fn circle_length_is_two_pi() {
        let c = AnalyticCurve::catalog(Catalog::Circle);
        let map = length_map(&c, &euclidean_speed(), 0.0).unwrap();
        assert!((map.total() - 2.0 * PI).abs() < 1e-12);
        assert!(map.seam_residual() < 1e-10, "{} {:?}", map.seam_residual(), map.charts().iter().map(|c| c.radius).collect::<Vec<_>>());
    }

    #[test]
    fn parabola_length_matches_closed_form() {
        // ∫₀¹ √(1 + 4t²) dt
        let exact = (2f64.mul_add(5f64.sqrt(), (2.0 + 5f64.sqrt()).ln())) / 4.0;
        let c = AnalyticCurve::catalog(Catalog::Parabola);
        let map = length_map(&c, &euclidean_speed(), 0.0).unwrap();
        assert!((map.total() - exact).abs() < 1e-12, "{} vs {exact}", map.total());
        assert!((map.eval(0.5).unwrap() - map.eval_by_quadrature(0.5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn anchor_shifts_target() {
        let c = on(Catalog::Line, -1.0, 3.0);
        let map = length_map(&c, &euclidean_speed(), 1.0).unwrap();
        let (a, b) = map.target();
        assert!((a + 2.0).abs() < 1e-13 && (b - 2.0).abs() < 1e-13);
        assert!(map.eval(1.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn spherical_line_is_arctan() {
        let c = on(Catalog::Line, -20.0, 20.0);
        let map = length_map(&c, &spherical_speed(), 0.0).unwrap();
        for t in [-19.0, -3.0, -0.4, 0.0, 1.3, 7.5, 20.0] {
            assert!((map.eval(t).unwrap() - f64::atan(t)).abs() < 1e-12, "t = {t}");
        }
        let rc = ReparametrizedCurve::new(c, spherical_speed(), map).unwrap();
        for s in [-1.4, -0.7, 0.0, 0.2, 1.1] {
            let d = rc.evaluate(s).unwrap();
            assert!((d.re - s.tan()).abs() < 1e-10 && d.im.abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn inversion_round_trip() {
        let c = AnalyticCurve::catalog(Catalog::Parabola);
        let map = length_map(&c, &euclidean_speed(), 0.0).unwrap();
        for i in 0..=40 {
            let t = i as f64 / 40.0;
            let back = map.invert_at(map.eval(t).unwrap()).unwrap();
            assert!((back - t).abs() < 1e-12, "t = {t}");
        }
        assert!(matches!(map.invert_at(map.total() + 1.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn unit_speed_after_reparam() {
        for (c, f) in [
            (AnalyticCurve::catalog(Catalog::Circle), euclidean_speed()),
            (AnalyticCurve::catalog(Catalog::Parabola), spherical_speed()),
            (AnalyticCurve::catalog(Catalog::VerticalGeodesic), hyperbolic_speed()),
        ] {
            let rc = reparametrize(&c, &f).unwrap();
            let r = unit_speed_residual(&rc, 101).unwrap();
            assert!(r < 1e-9, "{:?}: {r}", f.kind());
        }
    }

    #[test]
    fn delta_matches_base_curve() {
        let c = AnalyticCurve::catalog(Catalog::Parabola);
        let rc = reparametrize(&c, &euclidean_speed()).unwrap();
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            let s = rc.map().eval(t).unwrap();
            let diff = (rc.evaluate(s).unwrap() - c.evaluate(t).unwrap()).norm();
            assert!(diff < 1e-11, "t = {t}: {diff}");
        }
        let as_curve = rc.as_curve().unwrap();
        let s = 0.6 * rc.map().total();
        assert!((as_curve.evaluate(s).unwrap() - rc.evaluate(s).unwrap()).norm() < 1e-11);
    }

    #[test]
    fn improper_spherical_length() {
        let c = AnalyticCurve::catalog(Catalog::Line);
        let l = total_length(&c, &spherical_speed(), f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert!((l - PI).abs() < 1e-9, "{l}");
        let half = total_length(&c, &spherical_speed(), 1.0, f64::INFINITY).unwrap();
        assert!((half - (PI / 2.0 - 1f64.atan())).abs() < 1e-9);
    }

    #[test]
    fn euclidean_line_diverges() {
        let c = AnalyticCurve::catalog(Catalog::Line);
        let r = total_length(&c, &euclidean_speed(), 0.0, f64::INFINITY);
        assert!(matches!(r, Err(Error::DivergentLength(_))));
    }

    #[test]
    fn non_positive_speed_rejected() {
        // hyperbolic speed needs Im γ > 0; the real line has Im γ = 0
        let c = on(Catalog::Line, 0.0, 1.0);
        assert!(length_map(&c, &hyperbolic_speed(), 0.0).is_err());
    }

    #[test]
    fn infinite_source_rejected() {
        let c = AnalyticCurve::catalog(Catalog::Line);
        assert!(matches!(
            length_map(&c, &spherical_speed(), 0.0),
            Err(Error::InvalidInterval(_))
        ));
    }

    #[test]
    fn vector_helix_length() {
        // (cos t, sin t, t) has speed √2
        let d = Interval::closed(0.0, 3.0).unwrap();
        let circle = ClosedFormParts::circle();
        let comps = vec![
            AnalyticCurve::from_closed_form(circle.0, d),
            AnalyticCurve::from_closed_form(circle.1, d),
            Catalog::Line.curve(d),
        ];
        let v = VectorCurve::new(comps, d).unwrap();
        let r = reparametrize_vector(&v, &vector_euclidean_speed(), 0.0).unwrap();
        assert!((r.map().total() - 3.0 * 2f64.sqrt()).abs() < 1e-12);
        let s = 1.7;
        let p = r.evaluate(s).unwrap();
        let t = s / 2f64.sqrt();
        assert!((p[0] - t.cos()).abs() < 1e-11 && (p[2] - t).abs() < 1e-11);
        let d1 = r.derivative(s, 1).unwrap();
        let norm: f64 = d1.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    struct ClosedFormParts;

    impl ClosedFormParts {
        /// `cos t = (e^{it} + e^{-it})/2` and `sin t` as real-valued closed forms.
        fn circle() -> (crate::curve::ClosedForm, crate::curve::ClosedForm) {
            use crate::curve::ClosedForm::{Exponential, Scaled, Sum};
            let e = |r: f64| Exponential {
                scale: Complex64::new(1.0, 0.0),
                rate: Complex64::new(0.0, r),
            };
            let cos = Scaled(Complex64::new(0.5, 0.0), Box::new(Sum(vec![e(1.0), e(-1.0)])));
            let sin = Scaled(
                Complex64::new(0.0, -0.5),
                Box::new(Sum(vec![e(1.0), Scaled(Complex64::new(-1.0, 0.0), Box::new(e(-1.0)))])),
            );
            (cos, sin)
        }
    }
}
