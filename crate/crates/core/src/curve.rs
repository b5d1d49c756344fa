//! Analytic curves `γ: I → ℂ` (and `I → ℝⁿ`), their charts and jets.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{TruncatedSeries, DEFAULT_ORDER};

/// Shortest admissible parameter interval.
pub const MIN_INTERVAL_WIDTH: f64 = 1e-9;

/// Hard cap on the number of charts laid out for a closed-form curve. Above
/// it the curve keeps only its closed form and builds local series on demand.
const MAX_CHARTS: usize = 4096;

/// Relative truncation error targeted when sizing closed-form charts.
const CHART_ACCURACY: f64 = 1e-16;

/// A real parameter interval; infinite ends are always open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidInterval("NaN endpoint".into()));
        }
        if !(hi - lo >= MIN_INTERVAL_WIDTH) {
            return Err(Error::InvalidInterval(format!(
                "[{lo}, {hi}] is shorter than {MIN_INTERVAL_WIDTH}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            lo_closed: lo_closed && lo.is_finite(),
            hi_closed: hi_closed && hi.is_finite(),
        })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_closed { t >= self.lo } else { t > self.lo };
        let below = if self.hi_closed { t <= self.hi } else { t < self.hi };
        above && below && t.is_finite()
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// A finite window for sampling: infinite ends are replaced by points a
    /// fixed distance away from the finite part.
    pub fn sample_window(&self) -> (f64, f64) {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => (self.lo, self.hi),
            (true, false) => (self.lo, self.lo + 20.0),
            (false, true) => (self.hi - 20.0, self.hi),
            (false, false) => (-10.0, 10.0),
        }
    }

    /// `n` sample points of the window; open finite ends are nudged inward.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.sample_window();
        let w = hi - lo;
        let n = n.max(2);
        let nudge = 1e-9 * w;
        (0..n)
            .map(|i| {
                let t = lo + w * i as f64 / (n - 1) as f64;
                if i == 0 && !self.lo_closed {
                    t + nudge
                } else if i == n - 1 && !self.hi_closed {
                    t - nudge
                } else {
                    t
                }
            })
            .collect()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

/// Closed-form curves with analytic derivatives of every order.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    /// `Σ c_k t^k`.
    Polynomial(Vec<Complex64>),
    /// `scale · exp(rate · t)`.
    Exponential { scale: Complex64, rate: Complex64 },
    Scaled(Complex64, Box<ClosedForm>),
    Sum(Vec<ClosedForm>),
    /// `1 / inner`; local series come from series division.
    Reciprocal(Box<ClosedForm>),
}

impl ClosedForm {
    pub fn value(&self, z: Complex64) -> Complex64 {
        match self {
            ClosedForm::Polynomial(p) => p
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c),
            ClosedForm::Exponential { scale, rate } => scale * (rate * z).exp(),
            ClosedForm::Scaled(c, inner) => c * inner.value(z),
            ClosedForm::Sum(parts) => parts.iter().map(|p| p.value(z)).sum(),
            ClosedForm::Reciprocal(inner) => inner.value(z).inv(),
        }
    }

    pub fn derivative(&self, z: Complex64, k: usize) -> Complex64 {
        match self {
            ClosedForm::Exponential { scale, rate } => scale * rate.powi(k as i32) * (rate * z).exp(),
            ClosedForm::Scaled(c, inner) => c * inner.derivative(z, k),
            ClosedForm::Sum(parts) => parts.iter().map(|p| p.derivative(z, k)).sum(),
            _ => {
                let coeffs = self.taylor(z, k + 1);
                coeffs[k] * factorial(k)
            }
        }
    }

    /// First `n` Taylor coefficients at `center`.
    pub fn taylor(&self, center: Complex64, n: usize) -> Vec<Complex64> {
        let n = n.max(1);
        match self {
            ClosedForm::Polynomial(p) => {
                let mut s = TruncatedSeries::from_coeffs(p.clone()).recenter(center);
                if s.len() < n {
                    let mut c = s.coeffs().to_vec();
                    c.resize(n, Complex64::new(0.0, 0.0));
                    s = TruncatedSeries::from_coeffs(c);
                }
                s.coeffs()[..n].to_vec()
            }
            ClosedForm::Exponential { scale, rate } => {
                let mut term = scale * (rate * center).exp();
                let mut out = Vec::with_capacity(n);
                for k in 0..n {
                    out.push(term);
                    term = term * rate / (k as f64 + 1.0);
                }
                out
            }
            ClosedForm::Scaled(c, inner) => inner.taylor(center, n).into_iter().map(|a| a * c).collect(),
            ClosedForm::Sum(parts) => {
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for p in parts {
                    for (o, a) in out.iter_mut().zip(p.taylor(center, n)) {
                        *o += a;
                    }
                }
                out
            }
            ClosedForm::Reciprocal(inner) => {
                let s = TruncatedSeries::from_coeffs(inner.taylor(center, n));
                match s.recip() {
                    Ok(r) => r.coeffs().to_vec(),
                    Err(_) => vec![Complex64::new(f64::INFINITY, 0.0); n],
                }
            }
        }
    }

    /// Radius within which an `n`-term Taylor chart at `center` reproduces
    /// the closed form to about `CHART_ACCURACY` relative error.
    pub fn chart_radius(&self, center: Complex64, n: usize) -> f64 {
        match self {
            ClosedForm::Polynomial(p) => {
                if p.len() <= n {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            ClosedForm::Exponential { rate, .. } => {
                let r = rate.norm();
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    ((CHART_ACCURACY.ln() + ln_factorial(n)) / n as f64).exp() / r
                }
            }
            ClosedForm::Scaled(_, inner) => inner.chart_radius(center, n),
            ClosedForm::Sum(parts) => parts
                .iter()
                .map(|p| p.chart_radius(center, n))
                .fold(f64::INFINITY, f64::min),
            ClosedForm::Reciprocal(inner) => {
                let base = inner.chart_radius(center, n);
                let s = TruncatedSeries::from_coeffs(inner.taylor(center, n));
                match s.recip() {
                    Ok(r) => base.min(r.singularity_radius().unwrap_or(f64::INFINITY)),
                    Err(_) => 0.0,
                }
            }
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|j| (j as f64).ln()).sum()
}

/// The built-in curve catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Catalog {
    /// `t`
    Line,
    /// `e^{it}`
    Circle,
    /// `t + i t²`
    Parabola,
    /// `e^t e^{it}`
    LogSpiral,
    /// `i e^t`
    VerticalGeodesic,
    /// `e^{(1+i)t}`, studied toward `+∞` where `1/γ(1/u)` is essential at 0.
    ExpEssential,
    /// `t²`, singular at 0.
    Square,
}

impl Catalog {
    pub const ALL: [Catalog; 7] = [
        Catalog::Line,
        Catalog::Circle,
        Catalog::Parabola,
        Catalog::LogSpiral,
        Catalog::VerticalGeodesic,
        Catalog::ExpEssential,
        Catalog::Square,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Catalog::Line => "line",
            Catalog::Circle => "circle",
            Catalog::Parabola => "parabola",
            Catalog::LogSpiral => "log_spiral",
            Catalog::VerticalGeodesic => "vertical_geodesic",
            Catalog::ExpEssential => "exp_essential",
            Catalog::Square => "square",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.id() == id)
    }

    pub fn closed_form(self) -> ClosedForm {
        let c = Complex64::new;
        match self {
            Catalog::Line => ClosedForm::Polynomial(vec![c(0.0, 0.0), c(1.0, 0.0)]),
            Catalog::Circle => ClosedForm::Exponential {
                scale: c(1.0, 0.0),
                rate: c(0.0, 1.0),
            },
            Catalog::Parabola => ClosedForm::Polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]),
            Catalog::LogSpiral | Catalog::ExpEssential => ClosedForm::Exponential {
                scale: c(1.0, 0.0),
                rate: c(1.0, 1.0),
            },
            Catalog::VerticalGeodesic => ClosedForm::Exponential {
                scale: c(0.0, 1.0),
                rate: c(1.0, 0.0),
            },
            Catalog::Square => ClosedForm::Polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
        }
    }

    pub fn default_domain(self) -> Interval {
        match self {
            Catalog::Line | Catalog::LogSpiral | Catalog::ExpEssential => Interval::real_line(),
            Catalog::Circle => Interval::closed(0.0, 2.0 * PI).unwrap(),
            Catalog::Parabola => Interval::closed(0.0, 1.0).unwrap(),
            Catalog::VerticalGeodesic => Interval::closed(0.0, 2.0).unwrap(),
            Catalog::Square => Interval::open(0.0, 1.0).unwrap(),
        }
    }

    pub fn curve(self, domain: Interval) -> AnalyticCurve {
        AnalyticCurve::from_closed_form(self.closed_form(), domain)
    }
}

/// `Γ(t) = (γ, conj γ(conj t), γ′, conj γ′(conj t), …, γ⁽ᴺ⁾, conj γ⁽ᴺ⁾(conj t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    order: usize,
    values: Vec<Complex64>,
}

impl Jet {
    pub fn new(order: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != 2 * (order + 1) {
            return Err(Error::InvalidConfig(format!(
                "jet of order {order} needs {} entries, got {}",
                2 * (order + 1),
                values.len()
            )));
        }
        Ok(Self { order, values })
    }

    /// Builds the jet from derivative values `γ⁽ᵏ⁾(t)` at a real `t`.
    pub fn from_derivatives(derivs: &[Complex64]) -> Self {
        let values = derivs.iter().flat_map(|&d| [d, d.conj()]).collect();
        Self {
            order: derivs.len() - 1,
            values,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Coordinate `z_i` with 1-based indexing (`z₁ = γ`, `z₂ = conj γ`, …).
    pub fn z(&self, i: usize) -> Complex64 {
        self.values[i - 1]
    }

    pub fn derivative(&self, k: usize) -> Complex64 {
        self.values[2 * k]
    }

    pub fn conj_derivative(&self, k: usize) -> Complex64 {
        self.values[2 * k + 1]
    }

    pub fn truncated(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self {
            order,
            values: self.values[..2 * (order + 1)].to_vec(),
        }
    }

    pub fn is_conjugate_paired(&self, tol: f64) -> bool {
        self.values
            .chunks(2)
            .all(|p| (p[1] - p[0].conj()).norm() <= tol * (1.0 + p[0].norm()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub min_speed: f64,
    pub argmin: f64,
    pub grid_size: usize,
    pub pass: bool,
}

/// Margin below which the derivative counts as vanishing.
pub const REGULARITY_MARGIN: f64 = 1e-12;

/// An analytic curve given by series charts and optionally a closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCurve {
    domain: Interval,
    charts: Vec<TruncatedSeries>,
    closed_form: Option<ClosedForm>,
    order: usize,
}

impl AnalyticCurve {
    /// Closed-form curve. On finite domains charts are laid out on a uniform
    /// grid with spacing half the smallest sampled chart radius.
    pub fn from_closed_form(form: ClosedForm, domain: Interval) -> Self {
        let mut curve = Self {
            domain,
            charts: Vec::new(),
            closed_form: Some(form),
            order: DEFAULT_ORDER,
        };
        if domain.is_finite() {
            let probes = Interval::closed(domain.lo, domain.hi)
                .map(|d| d.grid(9))
                .unwrap_or_default();
            let r_min = probes
                .iter()
                .map(|&c| curve.local_series(c, DEFAULT_ORDER).radius_estimate())
                .fold(f64::INFINITY, f64::min);
            if r_min > 0.0 && r_min.is_finite() {
                let spacing = 0.5 * r_min;
                let count = (domain.width() / spacing).ceil() as usize + 1;
                if count <= MAX_CHARTS {
                    curve.charts = (0..count)
                        .map(|i| {
                            let c = (domain.lo + spacing * i as f64).min(domain.hi);
                            let s = curve.local_series(c, DEFAULT_ORDER);
                            let r = s.radius_estimate();
                            s.with_radius(r)
                        })
                        .collect();
                }
            }
        }
        curve
    }

    /// Curve known only through charts. Checks that the discs cover the
    /// domain and that neighbouring charts agree on their overlaps.
    pub fn from_charts(charts: Vec<TruncatedSeries>, domain: Interval) -> Result<Self> {
        if charts.is_empty() {
            return Err(Error::InvalidCharts("no charts".into()));
        }
        if !domain.is_finite() {
            return Err(Error::InvalidCharts("chart curves need a finite domain".into()));
        }
        let order = charts.iter().map(|c| c.len()).min().unwrap_or(1);
        let curve = Self {
            domain,
            charts,
            closed_form: None,
            order,
        };
        for t in domain.grid(257) {
            if !curve
                .charts
                .iter()
                .any(|c| (Complex64::new(t, 0.0) - c.center()).norm() < c.radius())
            {
                return Err(Error::InvalidCharts(format!("t = {t} is not covered")));
            }
        }
        let mut idx: Vec<usize> = (0..curve.charts.len()).collect();
        idx.sort_by(|&a, &b| curve.charts[a].center().re.total_cmp(&curve.charts[b].center().re));
        for w in idx.windows(2) {
            let (p, q) = (&curve.charts[w[0]], &curve.charts[w[1]]);
            let mid = 0.5 * (p.center() + q.center());
            if (mid - p.center()).norm() < 0.9 * p.radius() && (mid - q.center()).norm() < 0.9 * q.radius() {
                let (a, b) = (p.eval(mid), q.eval(mid));
                if (a - b).norm() > 1e-10 * (1.0 + a.norm()) {
                    return Err(Error::InvalidCharts(format!(
                        "charts at {} and {} disagree at {mid}: {a} vs {b}",
                        p.center(),
                        q.center()
                    )));
                }
            }
        }
        Ok(curve)
    }

    pub fn catalog(kind: Catalog) -> Self {
        kind.curve(kind.default_domain())
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn with_domain(&self, domain: Interval) -> Self {
        match &self.closed_form {
            Some(f) => Self::from_closed_form(f.clone(), domain),
            None => Self {
                domain,
                ..self.clone()
            },
        }
    }

    pub fn charts(&self) -> &[TruncatedSeries] {
        &self.charts
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed_form.as_ref()
    }

    /// Number of coefficients per chart.
    pub fn order(&self) -> usize {
        self.order
    }

    fn check(&self, t: f64) -> Result<()> {
        if self.domain.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(t))
        }
    }

    fn nearest_chart(&self, t: f64) -> Option<&TruncatedSeries> {
        let z = Complex64::new(t, 0.0);
        self.charts.iter().min_by(|a, b| {
            let ra = (z - a.center()).norm() / a.radius().max(f64::MIN_POSITIVE);
            let rb = (z - b.center()).norm() / b.radius().max(f64::MIN_POSITIVE);
            ra.total_cmp(&rb)
        })
    }

    pub fn evaluate(&self, t: f64) -> Result<Complex64> {
        self.check(t)?;
        Ok(self.value_unchecked(t))
    }

    /// Value without the domain check; used for limits and tails.
    pub fn value_unchecked(&self, t: f64) -> Complex64 {
        let z = Complex64::new(t, 0.0);
        match (&self.closed_form, self.nearest_chart(t)) {
            (Some(f), _) => f.value(z),
            (None, Some(c)) => c.eval(z),
            (None, None) => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    pub fn derivative(&self, t: f64, k: usize) -> Result<Complex64> {
        self.check(t)?;
        let z = Complex64::new(t, 0.0);
        if let Some(f) = &self.closed_form {
            return Ok(f.derivative(z, k));
        }
        if k + 1 > self.order {
            return Err(Error::OrderTooHigh {
                requested: k,
                available: self.order.saturating_sub(1),
            });
        }
        let c = self.nearest_chart(t).ok_or(Error::OutOfDomain(t))?;
        Ok(c.derivative_at(z, k))
    }

    /// Series of `γ` around the real point `center` with `len` coefficients.
    pub fn local_series(&self, center: f64, len: usize) -> TruncatedSeries {
        let z = Complex64::new(center, 0.0);
        if let Some(f) = &self.closed_form {
            let coeffs = f.taylor(z, len);
            let r = f.chart_radius(z, len);
            return TruncatedSeries::new(z, coeffs, r.max(0.0))
                .unwrap_or_else(|_| TruncatedSeries::constant(z, Complex64::new(f64::NAN, 0.0), len));
        }
        match self.nearest_chart(center) {
            Some(c) => c.recenter(z).truncated(len),
            None => TruncatedSeries::constant(z, Complex64::new(f64::NAN, 0.0), len),
        }
    }

    pub fn jet(&self, t: f64, order: usize) -> Result<Jet> {
        let derivs = (0..=order)
            .map(|k| self.derivative(t, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Jet::from_derivatives(&derivs))
    }

    /// Jet entries as series on chart `chart_index`.
    pub fn jet_series(&self, chart_index: usize, order: usize) -> Result<Vec<TruncatedSeries>> {
        let chart = self
            .charts
            .get(chart_index)
            .ok_or_else(|| Error::InvalidCharts(format!("no chart {chart_index}")))?;
        if chart.center().im.abs() > 1e-14 * (1.0 + chart.center().re.abs()) {
            return Err(Error::ComplexCenterUnsupported(chart.center().to_string()));
        }
        if 2 * order > chart.len() {
            return Err(Error::OrderTooHigh {
                requested: order,
                available: chart.len() / 2,
            });
        }
        Ok(jet_entries(chart.clone(), order, chart.len() - order))
    }

    /// Jet series around an arbitrary real center, each `self.order()` long.
    pub fn jet_series_at(&self, center: f64, order: usize) -> Vec<TruncatedSeries> {
        let s = self.local_series(center, self.order + order);
        jet_entries(s, order, self.order)
    }

    /// Smallest `|γ′|` on a grid, refined by golden-section search around the
    /// grid minimum.
    pub fn regularity_check(&self, grid_size: usize) -> RegularityReport {
        let speed = |t: f64| self.derivative(t, 1).map(|d| d.norm()).unwrap_or(f64::NAN);
        regularity(&self.domain, grid_size, speed)
    }
}

fn jet_entries(chart: TruncatedSeries, order: usize, keep: usize) -> Vec<TruncatedSeries> {
    let mut out = Vec::with_capacity(2 * (order + 1));
    let mut d = chart;
    for _ in 0..=order {
        let t = d.clone().truncated(keep);
        // real center: conj γ⁽ᵏ⁾(conj z) has the conjugated coefficients
        out.push(t.conj_coeffs().with_center(t.center()));
        out.insert(out.len() - 1, t);
        d = d.differentiate();
    }
    out
}

fn regularity(domain: &Interval, grid_size: usize, speed: impl Fn(f64) -> f64) -> RegularityReport {
    let grid = domain.grid(grid_size.max(2));
    let (mut i_min, mut v_min) = (0, f64::INFINITY);
    for (i, &t) in grid.iter().enumerate() {
        let v = speed(t);
        if !(v >= v_min) {
            i_min = i;
            v_min = v;
        }
    }
    let mut arg = grid[i_min];
    if v_min.is_finite() && grid.len() > 2 {
        let mut a = grid[i_min.saturating_sub(1)];
        let mut b = grid[(i_min + 1).min(grid.len() - 1)];
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let x1 = b - g * (b - a);
            let x2 = a + g * (b - a);
            if speed(x1) < speed(x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let t = 0.5 * (a + b);
        let v = speed(t);
        if v < v_min {
            v_min = v;
            arg = t;
        }
    }
    RegularityReport {
        min_speed: v_min,
        argmin: arg,
        grid_size: grid.len(),
        pass: v_min > REGULARITY_MARGIN,
    }
}

/// A curve in ℝⁿ given by real-valued component curves on a common domain.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorCurve {
    domain: Interval,
    components: Vec<AnalyticCurve>,
}

impl VectorCurve {
    pub fn new(components: Vec<AnalyticCurve>, domain: Interval) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidCharts("vector curve needs components".into()));
        }
        let components: Vec<_> = components.into_iter().map(|c| c.with_domain(domain)).collect();
        for (j, c) in components.iter().enumerate() {
            for t in domain.grid(5) {
                let s = c.local_series(t, c.order());
                if s.coeffs().iter().any(|a| a.im.abs() > 1e-12 * (1.0 + a.re.abs())) {
                    return Err(Error::InvalidCharts(format!(
                        "component {j} has non-real coefficients at t = {t}"
                    )));
                }
            }
        }
        Ok(Self { domain, components })
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[AnalyticCurve] {
        &self.components
    }

    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.evaluate(t).map(|z| z.re)).collect()
    }

    /// `jet[k][j] = γ_j⁽ᵏ⁾(t)`.
    pub fn jet(&self, t: f64, order: usize) -> Result<Vec<Vec<Complex64>>> {
        (0..=order)
            .map(|k| self.components.iter().map(|c| c.derivative(t, k)).collect())
            .collect()
    }

    /// `series[k][j]` is the series of `γ_j⁽ᵏ⁾` around `center`.
    pub fn jet_series_at(&self, center: f64, order: usize) -> Vec<Vec<TruncatedSeries>> {
        let per_comp: Vec<Vec<TruncatedSeries>> = self
            .components
            .iter()
            .map(|c| {
                let mut d = c.local_series(center, c.order() + order);
                let mut v = Vec::new();
                for _ in 0..=order {
                    v.push(d.clone().truncated(c.order()));
                    d = d.differentiate();
                }
                v
            })
            .collect();
        (0..=order)
            .map(|k| per_comp.iter().map(|v| v[k].clone()).collect())
            .collect()
    }

    pub fn regularity_check(&self, grid_size: usize) -> RegularityReport {
        let speed = |t: f64| {
            self.components
                .iter()
                .map(|c| c.derivative(t, 1).map(|d| d.norm_sqr()).unwrap_or(f64::NAN))
                .sum::<f64>()
                .sqrt()
        };
        regularity(&self.domain, grid_size, speed)
    }

    /// For `n = 2`, the complex curve `x + i y`.
    pub fn to_complex(&self) -> Result<AnalyticCurve> {
        if self.dim() != 2 {
            return Err(Error::InvalidConfig("only planar curves map to ℂ".into()));
        }
        match (self.components[0].closed_form(), self.components[1].closed_form()) {
            (Some(x), Some(y)) => Ok(AnalyticCurve::from_closed_form(
                ClosedForm::Sum(vec![
                    x.clone(),
                    ClosedForm::Scaled(Complex64::new(0.0, 1.0), Box::new(y.clone())),
                ]),
                self.domain,
            )),
            _ => Err(Error::InvalidConfig("planar conversion needs closed-form components".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn interval_rules() {
        assert!(Interval::closed(0.0, 5e-10).is_err());
        assert!(Interval::closed(1.0, 0.0).is_err());
        let i = Interval::new(f64::NEG_INFINITY, 1.0, true, true).unwrap();
        assert!(!i.lo_closed);
        assert!(i.contains(1.0) && !i.contains(1.5) && i.contains(-1e300));
        let o = Interval::open(0.0, 1.0).unwrap();
        assert!(!o.contains(0.0) && !o.contains(1.0) && o.contains(0.5));
    }

    #[test]
    fn evaluate_catalog() {
        let line = AnalyticCurve::catalog(Catalog::Line);
        assert_eq!(line.evaluate(3.5).unwrap(), c(3.5, 0.0));
        let circle = AnalyticCurve::catalog(Catalog::Circle);
        assert!((circle.derivative(0.0, 1).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        assert!((circle.evaluate(PI / 2.0).unwrap() - c(0.0, 1.0)).norm() < 1e-12);
        assert_eq!(circle.evaluate(-0.1), Err(Error::OutOfDomain(-0.1)));
    }

    #[test]
    fn jets_of_catalog_curves() {
        let circle = AnalyticCurve::catalog(Catalog::Circle);
        let j = circle.jet(0.0, 1).unwrap();
        let want = [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)];
        for (g, w) in j.values().iter().zip(want) {
            assert!((g - w).norm() < 1e-15);
        }
        let line = AnalyticCurve::catalog(Catalog::Line);
        assert_eq!(line.jet(-2.0, 1).unwrap().values(), &[c(-2.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let parabola = AnalyticCurve::catalog(Catalog::Parabola);
        let j = parabola.jet(1.0, 1).unwrap();
        let want = [c(1.0, 1.0), c(1.0, -1.0), c(1.0, 2.0), c(1.0, -2.0)];
        for (g, w) in j.values().iter().zip(want) {
            assert!((g - w).norm() < 1e-14, "{g} vs {w}");
        }
        assert!(j.is_conjugate_paired(1e-14));
    }

    #[test]
    fn jet_series_of_line_and_circle() {
        let line = Catalog::Line.curve(Interval::closed(-1.0, 1.0).unwrap());
        let idx = line
            .charts()
            .iter()
            .position(|s| s.center().re == -1.0)
            .unwrap();
        let js = line.jet_series(idx, 1).unwrap();
        assert_eq!(js.len(), 4);
        assert_eq!(js[0].coeff(0), c(-1.0, 0.0));
        assert_eq!(js[0].coeff(1), c(1.0, 0.0));
        assert_eq!(js[2].coeff(0), c(1.0, 0.0));
        assert_eq!(js[0], js[1]);

        let circle = Catalog::Circle.curve(Interval::closed(0.0, 1.0).unwrap());
        let js = circle.jet_series(0, 1).unwrap();
        // oracle: Taylor coefficients of e^{-iz} at 0 are (-i)^k / k!
        let mut fact = 1.0;
        for k in 0..12 {
            if k > 0 {
                fact *= k as f64;
            }
            let want = c(0.0, -1.0).powi(k as i32) / fact;
            assert!((js[1].coeff(k) - want).norm() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn jet_series_complex_center_rejected() {
        let chart = TruncatedSeries::new(c(0.0, 0.5), vec![c(0.0, 0.0), c(1.0, 0.0)], 2.0).unwrap();
        let curve = AnalyticCurve {
            domain: Interval::closed(-1.0, 1.0).unwrap(),
            charts: vec![chart],
            closed_form: None,
            order: 2,
        };
        assert!(matches!(curve.jet_series(0, 0), Err(Error::ComplexCenterUnsupported(_))));
    }

    #[test]
    fn regularity_verdicts() {
        let circle = AnalyticCurve::catalog(Catalog::Circle);
        let r = circle.regularity_check(50);
        assert!(r.pass && (r.min_speed - 1.0).abs() < 1e-12);
        let sq = Catalog::Square.curve(Interval::open(-1.0, 1.0).unwrap());
        let r = sq.regularity_check(50);
        assert!(!r.pass, "{r:?}");
        assert!(r.argmin.abs() < 1e-6);
        let line = AnalyticCurve::catalog(Catalog::Line);
        let r = line.regularity_check(10);
        assert!(r.pass && (r.min_speed - 1.0).abs() < 1e-15);
    }

    #[test]
    fn charts_cover_and_agree() {
        let spiral = Catalog::LogSpiral.curve(Interval::closed(-1.0, 2.0).unwrap());
        assert!(spiral.charts().len() > 1);
        let charts_only = AnalyticCurve::from_charts(spiral.charts().to_vec(), spiral.domain()).unwrap();
        for t in spiral.domain().grid(37) {
            let a = spiral.evaluate(t).unwrap();
            let b = charts_only.evaluate(t).unwrap();
            assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
        }
        let gap = vec![spiral.charts()[0].clone().with_radius(0.1)];
        assert!(matches!(
            AnalyticCurve::from_charts(gap, spiral.domain()),
            Err(Error::InvalidCharts(_))
        ));
    }

    #[test]
    fn reciprocal_closed_form() {
        let f = ClosedForm::Reciprocal(Box::new(Catalog::Line.closed_form()));
        assert!((f.value(c(2.0, 0.0)) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((f.derivative(c(2.0, 0.0), 1) - c(-0.25, 0.0)).norm() < 1e-15);
        let r = f.chart_radius(c(2.0, 0.0), DEFAULT_ORDER);
        assert!((1.6..=2.5).contains(&r), "{r}");
    }

    #[test]
    fn vector_curve_bridge() {
        let x = Catalog::Line.closed_form();
        let y = ClosedForm::Polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let d = Interval::closed(0.0, 1.0).unwrap();
        let v = VectorCurve::new(
            vec![AnalyticCurve::from_closed_form(x, d), AnalyticCurve::from_closed_form(y, d)],
            d,
        )
        .unwrap();
        let z = v.to_complex().unwrap();
        let p = Catalog::Parabola.curve(d);
        for t in d.grid(11) {
            assert!((z.evaluate(t).unwrap() - p.evaluate(t).unwrap()).norm() < 1e-15);
        }
        assert!(v.regularity_check(20).pass);
        let not_real = VectorCurve::new(vec![Catalog::Circle.curve(d)], d);
        assert!(not_real.is_err());
    }
}
