//! Jet functionals `F: Ω ⊂ ℂ^{2(N+1)} → ℂ` with `F(J) ⊂ (0, ∞)`.
//!
//! A functional carries a pointwise evaluator on [`Jet`]s, a series
//! evaluator that produces `G = F ∘ Γ` on a chart, and the membership test
//! for its domain `Ω`. Built-ins take the principal square root of `z₃z₄`,
//! which is holomorphic on `Re(z₃z₄) > 0`, a neighbourhood of `J`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::curve::{Catalog, Interval, Jet};
use crate::error::{Error, Result};
use crate::series::TruncatedSeries;

pub type EvalFn = dyn Fn(&Jet) -> Complex64 + Send + Sync;
pub type SeriesFn = dyn Fn(&[TruncatedSeries]) -> Result<TruncatedSeries> + Send + Sync;
pub type DomainFn = dyn Fn(&Jet) -> bool + Send + Sync;

/// Tolerance for the "real positive on J" contract.
pub const POSITIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionalKind {
    Euclidean,
    Spherical,
    Hyperbolic,
    Custom(String),
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalKind::Euclidean => write!(f, "euclidean"),
            FunctionalKind::Spherical => write!(f, "spherical"),
            FunctionalKind::Hyperbolic => write!(f, "hyperbolic"),
            FunctionalKind::Custom(name) => write!(f, "{name}"),
        }
    }
}

#[derive(Clone)]
pub struct JetFunctional {
    kind: FunctionalKind,
    order: usize,
    eval: Arc<EvalFn>,
    eval_series: Arc<SeriesFn>,
    domain: Arc<DomainFn>,
}

impl fmt::Debug for JetFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetFunctional")
            .field("kind", &self.kind)
            .field("order", &self.order)
            .finish_non_exhaustive()
    }
}

impl JetFunctional {
    pub fn kind(&self) -> &FunctionalKind {
        &self.kind
    }

    /// Jet order `N` consumed by the functional.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn in_domain(&self, jet: &Jet) -> bool {
        jet.order() >= self.order && (self.domain)(&jet.truncated(self.order))
    }

    pub fn eval(&self, jet: &Jet) -> Result<Complex64> {
        if jet.order() < self.order {
            return Err(Error::OrderTooHigh {
                requested: self.order,
                available: jet.order(),
            });
        }
        let jet = jet.truncated(self.order);
        if !(self.domain)(&jet) {
            return Err(Error::DomainViolation(format!(
                "{} functional at jet {:?}",
                self.kind,
                jet.values()
            )));
        }
        Ok((self.eval)(&jet))
    }

    /// `F` applied to jet-entry series; no domain check.
    pub fn eval_series(&self, jets: &[TruncatedSeries]) -> Result<TruncatedSeries> {
        (self.eval_series)(&jets[..2 * (self.order + 1)])
    }
}

fn sqrt_speed(j: &Jet) -> Complex64 {
    (j.z(3) * j.z(4)).sqrt()
}

fn speed_ok(j: &Jet) -> bool {
    (j.z(3) * j.z(4)).re > 0.0
}

fn sqrt_speed_series(s: &[TruncatedSeries]) -> Result<TruncatedSeries> {
    s[2].try_mul(&s[3])?.sqrt()
}

/// `F(z) = √(z₃z₄)`; equals `|γ′|` on `J`.
pub fn euclidean_speed() -> JetFunctional {
    JetFunctional {
        kind: FunctionalKind::Euclidean,
        order: 1,
        eval: Arc::new(sqrt_speed),
        eval_series: Arc::new(sqrt_speed_series),
        domain: Arc::new(speed_ok),
    }
}

/// `F(z) = √(z₃z₄) / (1 + z₁z₂)`; equals `|γ′| / (1 + |γ|²)` on `J`.
pub fn spherical_speed() -> JetFunctional {
    JetFunctional {
        kind: FunctionalKind::Spherical,
        order: 1,
        eval: Arc::new(|j| sqrt_speed(j) / (1.0 + j.z(1) * j.z(2))),
        eval_series: Arc::new(|s| {
            let denom = s[0].try_mul(&s[1])?.add_scalar(Complex64::new(1.0, 0.0));
            sqrt_speed_series(s)?.try_div(&denom)
        }),
        domain: Arc::new(|j| speed_ok(j) && (j.z(1) * j.z(2)).re > -0.5),
    }
}

/// `F(z) = 2i √(z₃z₄) / (z₁ − z₂)`; equals `|γ′| / Im γ` on `J`.
pub fn hyperbolic_speed() -> JetFunctional {
    let two_i = Complex64::new(0.0, 2.0);
    JetFunctional {
        kind: FunctionalKind::Hyperbolic,
        order: 1,
        eval: Arc::new(move |j| two_i * sqrt_speed(j) / (j.z(1) - j.z(2))),
        eval_series: Arc::new(move |s| sqrt_speed_series(s)?.scale(two_i).try_div(&s[0].try_sub(&s[1])?)),
        // (z₁ − z₂)/(2i) is Im γ on J
        domain: Arc::new(move |j| speed_ok(j) && ((j.z(1) - j.z(2)) / two_i).re > 0.0),
    }
}

/// Looks up a built-in by its CLI name.
pub fn builtin(name: &str) -> Option<JetFunctional> {
    match name {
        "euclidean" => Some(euclidean_speed()),
        "spherical" => Some(spherical_speed()),
        "hyperbolic" => Some(hyperbolic_speed()),
        _ => None,
    }
}

/// User functional. The series and pointwise evaluators are cross-checked on
/// a few probe curves whose jets fall inside the domain.
pub fn custom<E, S, D>(name: &str, order: usize, eval: E, eval_series: S, domain: D) -> Result<JetFunctional>
where
    E: Fn(&Jet) -> Complex64 + Send + Sync + 'static,
    S: Fn(&[TruncatedSeries]) -> Result<TruncatedSeries> + Send + Sync + 'static,
    D: Fn(&Jet) -> bool + Send + Sync + 'static,
{
    let f = JetFunctional {
        kind: FunctionalKind::Custom(name.to_string()),
        order,
        eval: Arc::new(eval),
        eval_series: Arc::new(eval_series),
        domain: Arc::new(domain),
    };
    let probe_domain = Interval::closed(0.0, 1.0)?;
    for kind in [Catalog::Parabola, Catalog::Circle, Catalog::VerticalGeodesic, Catalog::Line] {
        let curve = kind.curve(probe_domain);
        let center = 0.3;
        let jet = curve.jet(center, order)?;
        if !f.in_domain(&jet) {
            continue;
        }
        let series = f.eval_series(&curve.jet_series_at(center, order))?;
        check_consistency(&f, &jet, &series)?;
    }
    Ok(f)
}

fn check_consistency(f: &JetFunctional, jet: &Jet, series: &TruncatedSeries) -> Result<()> {
    let v = f.eval(jet)?;
    let c0 = series.coeff(0);
    if (c0 - v).norm() > 1e-10 * (1.0 + v.norm()) {
        return Err(Error::InconsistentFunctional(format!(
            "{}: series constant {c0} vs pointwise {v}",
            f.kind
        )));
    }
    Ok(())
}

/// Series of `G(z) = F(Γ(z))` on a chart from its jet-entry series.
pub fn compose_with_jet(f: &JetFunctional, jets: &[TruncatedSeries]) -> Result<TruncatedSeries> {
    let needed = 2 * (f.order + 1);
    if jets.len() < needed || !jets.len().is_multiple_of(2) {
        return Err(Error::OrderTooHigh {
            requested: f.order,
            available: (jets.len() / 2).saturating_sub(1),
        });
    }
    let center_values: Vec<Complex64> = jets[..needed].iter().map(|s| s.coeff(0)).collect();
    let jet = Jet::new(f.order, center_values)?;
    let series = f.eval_series(jets)?;
    check_consistency(f, &jet, &series)?;
    let c0 = series.coeff(0);
    if !(c0.re > 0.0) || c0.im.abs() > POSITIVITY_TOL * (1.0 + c0.re) {
        return Err(Error::NonPositiveSpeed(format!(
            "{} speed {c0} at {}",
            f.kind,
            jets[0].center()
        )));
    }
    Ok(series)
}
