//! Named model parameters and their maps to unconstrained space.

use serde::{Deserialize, Serialize};

/// Admissible range of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    /// `(lo, inf)`, mapped by `ln(v - lo)`.
    Above(f64),
    /// `(lo, hi)`, mapped by `atanh(2 (v - lo)/(hi - lo) - 1)`.
    Interval(f64, f64),
    /// `[0, inf)`, mapped by `sqrt(v)` (inverse `x^2`).
    NonNegative,
    Real,
}

impl Domain {
    pub const POSITIVE: Domain = Domain::Above(0.0);

    pub fn to_unconstrained(&self, v: f64) -> f64 {
        match *self {
            Domain::Above(lo) => (v - lo).ln(),
            Domain::Interval(lo, hi) => {
                let t = 2.0 * (v - lo) / (hi - lo) - 1.0;
                t.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh()
            }
            Domain::NonNegative => v.max(0.0).sqrt(),
            Domain::Real => v,
        }
    }

    pub fn from_unconstrained(&self, x: f64) -> f64 {
        match *self {
            Domain::Above(lo) => lo + x.exp(),
            Domain::Interval(lo, hi) => lo + 0.5 * (hi - lo) * (x.tanh() + 1.0),
            Domain::NonNegative => x * x,
            Domain::Real => x,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Domain::Above(lo) => v > lo && v.is_finite(),
            Domain::Interval(lo, hi) => v > lo && v < hi,
            Domain::NonNegative => v >= 0.0 && v.is_finite(),
            Domain::Real => v.is_finite(),
        }
    }
}

/// One scalar model parameter, named by its path in the model, e.g.
/// `sigma[0]`, `beta[0,1]`, `base.rho.a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: f64,
    pub domain: Domain,
}

impl Param {
    pub(crate) fn new(name: String, value: f64, domain: Domain) -> Self {
        Self {
            name,
            value,
            domain,
        }
    }

    /// A pattern selects this parameter if it equals the name or is a prefix
    /// ending right before an index bracket or a path separator.
    pub fn matches(&self, pattern: &str) -> bool {
        match self.name.strip_prefix(pattern) {
            Some("") => true,
            Some(rest) => rest.starts_with('[') || rest.starts_with('.') || pattern.ends_with('.'),
            None => false,
        }
    }
}

pub(crate) struct ParamSink<'a> {
    prefix: &'a str,
    out: &'a mut Vec<Param>,
}

impl<'a> ParamSink<'a> {
    pub(crate) fn new(prefix: &'a str, out: &'a mut Vec<Param>) -> Self {
        Self { prefix, out }
    }

    pub(crate) fn push(&mut self, name: impl AsRef<str>, value: f64, domain: Domain) {
        self.out.push(Param::new(
            format!("{}{}", self.prefix, name.as_ref()),
            value,
            domain,
        ));
    }

    pub(crate) fn prefix(&self) -> &str {
        self.prefix
    }

    pub(crate) fn out(&mut self) -> &mut Vec<Param> {
        self.out
    }
}

/// Pulls values in the order they were emitted by `params`.
pub(crate) fn take(values: &mut dyn Iterator<Item = f64>) -> f64 {
    values
        .next()
        .expect("parameter vector shorter than the model's parameter list")
}
