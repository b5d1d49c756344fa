//! Truncated power series over `Complex64`.
//!
//! A [`TruncatedSeries`] stores `a_0 .. a_M` around a center together with a
//! validity radius. Every operation truncates to the shorter operand, so the
//! coefficients that survive are exact up to floating point rounding.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of coefficients kept per chart.
pub const DEFAULT_ORDER: usize = 32;

/// Radius returned by [`TruncatedSeries::radius_estimate`] when the tail is
/// identically zero (or too short to say anything).
pub const DEFAULT_RADIUS: f64 = 0.5;

/// Number of trailing coefficients inspected by the root test.
const TAIL_LEN: usize = 8;

/// Magnitudes at or below this count as exact zeros in the root test.
const TAIL_ZERO: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesWire", into = "SeriesWire")]
pub struct TruncatedSeries {
    center: Complex64,
    coeffs: Vec<Complex64>,
    radius: f64,
}

/// JSON layout: `{"center": [re, im], "coeffs": [[re, im], ...], "radius": r}`.
/// An unbounded radius is written as `null`.
#[derive(Serialize, Deserialize)]
struct SeriesWire {
    center: [f64; 2],
    coeffs: Vec<[f64; 2]>,
    radius: Option<f64>,
}

impl TryFrom<SeriesWire> for TruncatedSeries {
    type Error = Error;

    fn try_from(w: SeriesWire) -> Result<Self> {
        TruncatedSeries::new(
            Complex64::new(w.center[0], w.center[1]),
            w.coeffs
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
            w.radius.unwrap_or(f64::INFINITY),
        )
    }
}

impl From<TruncatedSeries> for SeriesWire {
    fn from(s: TruncatedSeries) -> Self {
        SeriesWire {
            center: [s.center.re, s.center.im],
            coeffs: s.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            radius: s.radius.is_finite().then_some(s.radius),
        }
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "series@{} [", self.center)?;
        for (k, c) in self.coeffs.iter().enumerate().take(6) {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        if self.coeffs.len() > 6 {
            write!(f, ", ... ({} terms)", self.coeffs.len())?;
        }
        write!(f, "] r={}", self.radius)
    }
}

impl TruncatedSeries {
    pub fn new(center: Complex64, coeffs: Vec<Complex64>, radius: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidSeries("no coefficients".into()));
        }
        if radius.is_nan() || radius < 0.0 {
            return Err(Error::InvalidSeries(format!("radius {radius}")));
        }
        if !center.is_finite() {
            return Err(Error::InvalidSeries(format!("center {center}")));
        }
        Ok(Self {
            center,
            coeffs,
            radius,
        })
    }

    /// Series at the origin with unbounded declared radius.
    ///
    /// Panics if `coeffs` is empty.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least one coefficient");
        Self {
            center: Complex64::new(0.0, 0.0),
            coeffs,
            radius: f64::INFINITY,
        }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn constant(center: Complex64, value: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order.max(1)];
        coeffs[0] = value;
        Self {
            center,
            coeffs,
            radius: f64::INFINITY,
        }
    }

    /// The identity map `z` expanded around `center`.
    pub fn variable(center: Complex64, order: usize) -> Self {
        let mut s = Self::constant(center, center, order.max(2));
        s.coeffs[1] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius.max(0.0);
        self
    }

    pub fn with_center(mut self, center: Complex64) -> Self {
        self.center = center;
        self
    }

    pub fn truncated(mut self, len: usize) -> Self {
        self.coeffs.truncate(len.max(1));
        self
    }

    pub fn conj_coeffs(&self) -> Self {
        Self {
            center: self.center.conj(),
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
            radius: self.radius,
        }
    }

    /// Horner evaluation at `z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let u = z - self.center;
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }

    /// k-th derivative at `z`.
    pub fn derivative_at(&self, z: Complex64, k: usize) -> Complex64 {
        let u = z - self.center;
        let mut acc = Complex64::new(0.0, 0.0);
        for n in (k..self.coeffs.len()).rev() {
            acc = acc * u + self.coeffs[n] * falling_factorial(n, k);
        }
        acc
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            center: self.center,
            coeffs: self.coeffs.iter().map(|&a| a * c).collect(),
            radius: self.radius,
        }
    }

    pub fn add_scalar(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn arith(&self, other: &Self, op: ArithOp) -> Result<Self> {
        self.check_center(other)?;
        let n = self.len().min(other.len());
        let radius = self.radius.min(other.radius);
        let coeffs = match op {
            ArithOp::Add => (0..n).map(|k| self.coeffs[k] + other.coeffs[k]).collect(),
            ArithOp::Sub => (0..n).map(|k| self.coeffs[k] - other.coeffs[k]).collect(),
            ArithOp::Mul => mul_trunc(&self.coeffs, &other.coeffs, n),
            ArithOp::Div => div_trunc(&self.coeffs, &other.coeffs, n)?,
        };
        let mut out = Self {
            center: self.center,
            coeffs,
            radius,
        };
        if op == ArithOp::Div {
            out.limit_by_singularity();
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.arith(other, ArithOp::Add)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.arith(other, ArithOp::Sub)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.arith(other, ArithOp::Mul)
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.arith(other, ArithOp::Div)
    }

    /// `1 / self`.
    pub fn recip(&self) -> Result<Self> {
        Self::constant(self.center, Complex64::new(1.0, 0.0), self.len()).try_div(self)
    }

    /// Re-expands the stored polynomial around `new_center`.
    ///
    /// The declared radius shrinks by the shift distance.
    pub fn recenter(&self, new_center: Complex64) -> Self {
        let d = new_center - self.center;
        let mut c = self.coeffs.clone();
        let n = c.len();
        // repeated synthetic division by (z - d)
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let hi = c[j + 1];
                c[j] += d * hi;
            }
        }
        Self {
            center: new_center,
            coeffs: c,
            radius: (self.radius - d.norm()).max(0.0),
        }
    }

    /// `self ∘ inner`, centered at `inner.center()`.
    ///
    /// The outer series is first re-expanded at `inner(center)` so that the
    /// nested Horner product only involves a series with zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        let v = inner.coeffs[0];
        let dist = (v - self.center).norm();
        if !(dist < self.radius || dist == 0.0) {
            return Err(Error::CompositionOutOfDomain {
                value: v.to_string(),
                distance: dist,
                radius: self.radius,
            });
        }
        let outer = if dist == 0.0 {
            self.clone()
        } else {
            self.recenter(v)
        };
        let n = outer.len().min(inner.len());
        let mut h = inner.coeffs[..n].to_vec();
        h[0] = Complex64::new(0.0, 0.0);

        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        acc[0] = outer.coeffs[n - 1];
        for k in (0..n - 1).rev() {
            // acc <- acc * h + a_k; h has no constant term so acc*h only
            // reaches orders that stay below n
            let mut next = mul_trunc(&acc, &h, n);
            next[0] += outer.coeffs[k];
            acc = next;
        }
        let mut out = Self {
            center: inner.center,
            coeffs: acc,
            radius: inner.radius,
        };
        out.limit_by_singularity();
        Ok(out)
    }

    pub fn differentiate(&self) -> Self {
        let coeffs = if self.len() == 1 {
            vec![Complex64::new(0.0, 0.0)]
        } else {
            (1..self.len()).map(|k| self.coeffs[k] * k as f64).collect()
        };
        Self {
            center: self.center,
            coeffs,
            radius: self.radius,
        }
    }

    /// Term-wise primitive with constant term `c`; keeps one extra coefficient.
    pub fn antiderivative(&self, c: Complex64) -> Self {
        let mut coeffs = Vec::with_capacity(self.len() + 1);
        coeffs.push(c);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &a)| a / (k as f64 + 1.0)),
        );
        Self {
            center: self.center,
            coeffs,
            radius: self.radius,
        }
    }

    /// Principal square root; needs `Re(a_0) > 0`.
    pub fn sqrt(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if !(a0.re > 0.0) {
            return Err(Error::BranchCutViolation(a0.to_string()));
        }
        let n = self.len();
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        g[0] = a0.sqrt();
        let two_g0 = g[0] * 2.0;
        for k in 1..n {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc -= g[j] * g[k - j];
            }
            g[k] = acc / two_g0;
        }
        let mut out = Self {
            center: self.center,
            coeffs: g,
            radius: self.radius,
        };
        out.limit_by_singularity();
        Ok(out)
    }

    /// Compositional inverse, centered at `self(center)` and taking the value
    /// `center` there.
    ///
    /// Solves `f(g(s)) = s` coefficient by coefficient. Powers of the partial
    /// inverse are accumulated incrementally, which keeps the recursion cubic
    /// in the order. The variables are rescaled by the radius estimate first
    /// so the recursion works on O(1) coefficients.
    pub fn revert(&self) -> Result<Self> {
        let n = self.len();
        let a1 = self.coeff(1);
        if n < 2 || a1.norm() == 0.0 || !a1.is_finite() {
            return Err(Error::NonInvertibleSeries);
        }
        let rho = {
            let r = self.radius_estimate();
            if r.is_finite() && r > 0.0 {
                r
            } else {
                1.0
            }
        };
        let lambda = a1 * rho;
        // normalized h(u) = (f(c + rho u) - f(c)) / lambda = u + ...
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        let mut rk = rho;
        for (k, ak) in a.iter_mut().enumerate().skip(1) {
            *ak = self.coeffs[k] * rk / lambda;
            rk *= rho;
        }

        // pow[k][m] = [w^m] g^k
        let zero = Complex64::new(0.0, 0.0);
        let mut pow = vec![vec![zero; n]; n];
        let mut b = vec![zero; n];
        b[1] = Complex64::new(1.0, 0.0);
        pow[1][1] = b[1];
        for m in 2..n {
            for k in 2..=m {
                let mut acc = zero;
                for j in 1..=(m - k + 1) {
                    acc += b[j] * pow[k - 1][m - j];
                }
                pow[k][m] = acc;
            }
            let mut s = zero;
            for k in 2..=m {
                s += a[k] * pow[k][m];
            }
            b[m] = -s;
            pow[1][m] = b[m];
        }

        let v = self.coeffs[0];
        let mut coeffs = vec![self.center; n];
        // powers of 1/λ, since dividing by λᵏ underflows |λᵏ|² for small λ
        let inv = lambda.inv();
        let mut ik = inv;
        for k in 1..n {
            coeffs[k] = b[k] * rho * ik;
            ik *= inv;
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonInvertibleSeries);
        }
        let mut out = Self {
            center: v,
            coeffs,
            radius: lambda.norm(),
        };
        out.limit_by_singularity();
        Ok(out)
    }

    /// Root-test radius of convergence from the last eight coefficients,
    /// normalized by the first nonzero coefficient. `None` when the tail is
    /// identically zero or there are not enough coefficients to look at.
    pub fn singularity_radius(&self) -> Option<f64> {
        let n = self.len();
        let lead = self.coeffs.iter().position(|c| c.norm() > TAIL_ZERO)?;
        if n < lead + 1 + TAIL_LEN {
            return None;
        }
        let a_lead = self.coeffs[lead].norm();
        let mut worst: f64 = 0.0;
        for k in (n - TAIL_LEN)..n {
            let m = self.coeffs[k].norm();
            if m > TAIL_ZERO {
                let root = (m / a_lead).powf(1.0 / (k - lead) as f64);
                worst = worst.max(root);
            }
        }
        (worst > 0.0 && worst.is_finite()).then(|| 1.0 / worst)
    }

    /// Estimated validity radius, clamped to the declared radius.
    pub fn radius_estimate(&self) -> f64 {
        self.singularity_radius()
            .unwrap_or(DEFAULT_RADIUS)
            .min(self.radius)
    }

    fn limit_by_singularity(&mut self) {
        if let Some(r) = self.singularity_radius() {
            self.radius = self.radius.min(r);
        }
    }

    fn check_center(&self, other: &Self) -> Result<()> {
        let scale = 1.0 + self.center.norm().max(other.center.norm());
        if (self.center - other.center).norm() > 1e-14 * scale {
            return Err(Error::CenterMismatch(
                self.center.to_string(),
                other.center.to_string(),
            ));
        }
        Ok(())
    }
}

/// Free-function form of [`TruncatedSeries::arith`].
pub fn arith(f: &TruncatedSeries, g: &TruncatedSeries, op: ArithOp) -> Result<TruncatedSeries> {
    f.arith(g, op)
}

fn falling_factorial(n: usize, k: usize) -> f64 {
    ((n - k + 1)..=n).fold(1.0, |acc, j| acc * j as f64)
}

fn mul_trunc(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, &ai) in a.iter().enumerate().take(n) {
        if ai == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn div_trunc(a: &[Complex64], b: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    let b0 = b[0];
    if b0.norm() == 0.0 {
        return Err(Error::DivisionByZeroConstantTerm);
    }
    let mut q = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let mut acc = a[k];
        for j in 1..=k {
            acc -= b[j] * q[k - j];
        }
        q[k] = acc / b0;
    }
    Ok(q)
}
