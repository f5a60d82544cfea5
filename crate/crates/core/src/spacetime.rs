//! Multivariate space–time covariances built from latent variable
//! coordinates:
//!
//! ```text
//! C(h, u, v) = sigma^2 / ( psi1(u^2 / psi2(|v|^2))^{d/2} psi2(|v|^2)^{1/2} )
//!              * phi1( |h|^2 / psi1(u^2 / psi2(|v|^2)) ),     v = xi_i - xi_j
//! ```
//!
//! with `phi1` completely monotone and `psi1`, `psi2` positive with completely
//! monotone derivative, both drawn from small fixed catalogs. Two asymmetric
//! variants are available: a time delay `u - lambda^T v` and a Lagrangian
//! velocity shift `(h - gamma_h u, u, v - gamma_xi u)`.
//!
//! As a [`crate::crosscov::CrossCovModel`] the time lag is the last coordinate
//! of each site, so a model with `d` spatial dimensions has dimension `d + 1`.

use serde::{Deserialize, Serialize};

use crate::crosscov::params::{take, Domain, ParamSink};
use crate::error::{Error, Result};

/// Completely monotone catalog for `phi1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Phi {
    /// `exp(-c t)`.
    Exponential { c: f64 },
    /// `(1 + c t)^{-1}`.
    Inverse { c: f64 },
}

impl Phi {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Phi::Exponential { c } => (-c * t).exp(),
            Phi::Inverse { c } => 1.0 / (1.0 + c * t),
        }
    }

    fn validate(&self) -> Result<()> {
        let (Phi::Exponential { c } | Phi::Inverse { c }) = *self;
        if c > 0.0 && c.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid("phi1.c", format!("must be positive, got {c}")))
        }
    }
}

/// Catalog of positive functions with completely monotone derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Psi {
    Constant,
    /// `(1 + a t)^b` with `a > 0`, `b` in `(0, 1]`.
    Power { a: f64, b: f64 },
}

impl Psi {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Psi::Constant => 1.0,
            Psi::Power { a, b } => (1.0 + a * t).powf(b),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if let Psi::Power { a, b } = *self {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::invalid(format!("{name}.a"), format!("must be positive, got {a}")));
            }
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::invalid(format!("{name}.b"), format!("must lie in (0, 1], got {b}")));
            }
        }
        Ok(())
    }
}

/// Optional asymmetry of the space–time model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceTimeAsym {
    /// `C(h, u - lambda_xi^T (xi_i - xi_j), xi_i - xi_j)`.
    Delay { lambda_xi: Vec<f64> },
    /// `C(h - gamma_h u, u, xi_i - xi_j - gamma_xi u)`.
    Velocity { gamma_h: Vec<f64>, gamma_xi: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTimeModel {
    pub sigma2: f64,
    pub phi1: Phi,
    pub psi1: Psi,
    pub psi2: Psi,
    /// Latent coordinates, one point in `R^k` per variable.
    pub xis: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymmetry: Option<SpaceTimeAsym>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

impl SpaceTimeModel {
    pub fn p(&self) -> usize {
        self.xis.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.xis.first().map_or(0, Vec::len)
    }

    /// `d` is the number of spatial dimensions (time excluded).
    pub fn validate(&self, d: usize) -> Result<()> {
        if d == 0 {
            return Err(Error::invalid("dim", "space–time models need at least one spatial dimension"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", format!("must be positive, got {}", self.sigma2)));
        }
        self.phi1.validate()?;
        self.psi1.validate("psi1")?;
        self.psi2.validate("psi2")?;
        let p = self.p();
        let k = self.latent_dim();
        if p == 0 {
            return Err(Error::invalid("xis", "at least one variable required"));
        }
        if k == 0 || k > p {
            return Err(Error::invalid(
                "xis",
                format!("latent dimension k must satisfy 1 <= k <= p = {p}, got {k}"),
            ));
        }
        for (i, xi) in self.xis.iter().enumerate() {
            if xi.len() != k {
                return Err(Error::dims(format!("xis[{i}]"), k, xi.len()));
            }
            if xi.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("xis[{i}]"), "not finite"));
            }
        }
        match &self.asymmetry {
            None => {}
            Some(SpaceTimeAsym::Delay { lambda_xi }) => {
                if lambda_xi.len() != k {
                    return Err(Error::dims("lambda_xi", k, lambda_xi.len()));
                }
                if lambda_xi.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("lambda_xi", "not finite"));
                }
            }
            Some(SpaceTimeAsym::Velocity { gamma_h, gamma_xi }) => {
                if gamma_h.len() != d {
                    return Err(Error::dims("gamma_h", d, gamma_h.len()));
                }
                if gamma_xi.len() != k {
                    return Err(Error::dims("gamma_xi", k, gamma_xi.len()));
                }
                if gamma_h.iter().chain(gamma_xi).any(|v| !v.is_finite()) {
                    return Err(Error::invalid("gamma_h", "velocities must be finite"));
                }
            }
        }
        Ok(())
    }

    /// The base function `C(h, u, v)` through its squared norms.
    #[inline]
    pub fn base(&self, d: usize, h2: f64, u: f64, v2: f64) -> f64 {
        let p2 = self.psi2.eval(v2);
        let p1 = self.psi1.eval(u * u / p2);
        self.sigma2 / (p1.powf(0.5 * d as f64) * p2.sqrt()) * self.phi1.eval(h2 / p1)
    }

    fn latent_lag(&self, i: usize, j: usize) -> Vec<f64> {
        self.xis[i].iter().zip(&self.xis[j]).map(|(a, b)| a - b).collect()
    }

    /// Symmetric covariance between variables `i` and `j` at spatial lag `h`
    /// and time lag `u`, ignoring any configured asymmetry.
    pub fn eval_symmetric(&self, i: usize, j: usize, h: &[f64], u: f64) -> f64 {
        let v = self.latent_lag(i, j);
        self.base(h.len(), norm2(h), u, norm2(&v))
    }

    /// Covariance including the configured asymmetry, if any.
    pub fn eval(&self, i: usize, j: usize, h: &[f64], u: f64) -> f64 {
        let d = h.len();
        let v = self.latent_lag(i, j);
        match &self.asymmetry {
            None => self.base(d, norm2(h), u, norm2(&v)),
            Some(SpaceTimeAsym::Delay { lambda_xi }) => {
                self.base(d, norm2(h), u - dot(lambda_xi, &v), norm2(&v))
            }
            Some(SpaceTimeAsym::Velocity { gamma_h, gamma_xi }) => {
                let hs: Vec<f64> = h.iter().zip(gamma_h).map(|(x, g)| x - g * u).collect();
                let vs: Vec<f64> = v.iter().zip(gamma_xi).map(|(x, g)| x - g * u).collect();
                self.base(d, norm2(&hs), u, norm2(&vs))
            }
        }
    }

    pub(crate) fn length_scale(&self) -> f64 {
        let c = match self.phi1 {
            Phi::Exponential { c } | Phi::Inverse { c } => c,
        };
        1.0 / c.sqrt()
    }

    pub(crate) fn params(&self, sink: &mut ParamSink) {
        sink.push("sigma2", self.sigma2, Domain::POSITIVE);
        let (Phi::Exponential { c } | Phi::Inverse { c }) = self.phi1;
        sink.push("phi1.c", c, Domain::POSITIVE);
        for (name, psi) in [("psi1", &self.psi1), ("psi2", &self.psi2)] {
            if let Psi::Power { a, b } = *psi {
                sink.push(format!("{name}.a"), a, Domain::POSITIVE);
                sink.push(format!("{name}.b"), b, Domain::Interval(0.0, 1.0));
            }
        }
        for (i, xi) in self.xis.iter().enumerate() {
            for (c, v) in xi.iter().enumerate() {
                sink.push(format!("xi[{i},{c}]"), *v, Domain::Real);
            }
        }
        match &self.asymmetry {
            None => {}
            Some(SpaceTimeAsym::Delay { lambda_xi }) => {
                for (c, v) in lambda_xi.iter().enumerate() {
                    sink.push(format!("lambda_xi[{c}]"), *v, Domain::Real);
                }
            }
            Some(SpaceTimeAsym::Velocity { gamma_h, gamma_xi }) => {
                for (c, v) in gamma_h.iter().enumerate() {
                    sink.push(format!("gamma_h[{c}]"), *v, Domain::Real);
                }
                for (c, v) in gamma_xi.iter().enumerate() {
                    sink.push(format!("gamma_xi[{c}]"), *v, Domain::Real);
                }
            }
        }
    }

    pub(crate) fn set_params(&mut self, values: &mut dyn Iterator<Item = f64>) {
        self.sigma2 = take(values);
        match &mut self.phi1 {
            Phi::Exponential { c } | Phi::Inverse { c } => *c = take(values),
        }
        for psi in [&mut self.psi1, &mut self.psi2] {
            if let Psi::Power { a, b } = psi {
                *a = take(values);
                *b = take(values);
            }
        }
        for xi in &mut self.xis {
            for v in xi.iter_mut() {
                *v = take(values);
            }
        }
        match &mut self.asymmetry {
            None => {}
            Some(SpaceTimeAsym::Delay { lambda_xi }) => {
                for v in lambda_xi.iter_mut() {
                    *v = take(values);
                }
            }
            Some(SpaceTimeAsym::Velocity { gamma_h, gamma_xi }) => {
                for v in gamma_h.iter_mut().chain(gamma_xi.iter_mut()) {
                    *v = take(values);
                }
            }
        }
    }
}

/// Symmetric space–time covariance `C_ij(h, u)`.
pub fn eval_st(model: &SpaceTimeModel, i: usize, j: usize, h: &[f64], u: f64) -> Result<f64> {
    check_indices(model, i, j)?;
    Ok(model.eval_symmetric(i, j, h, u))
}

/// Time-delay asymmetric covariance `C(h, u - lambda_xi^T (xi_i - xi_j), xi_i - xi_j)`.
pub fn eval_st_asym_delay(
    model: &SpaceTimeModel,
    lambda_xi: &[f64],
    i: usize,
    j: usize,
    h: &[f64],
    u: f64,
) -> Result<f64> {
    check_indices(model, i, j)?;
    if lambda_xi.len() != model.latent_dim() {
        return Err(Error::dims("lambda_xi", model.latent_dim(), lambda_xi.len()));
    }
    let v = model.latent_lag(i, j);
    Ok(model.base(h.len(), norm2(h), u - dot(lambda_xi, &v), norm2(&v)))
}

/// Velocity asymmetric covariance `C(h - gamma_h u, u, xi_i - xi_j - gamma_xi u)`.
pub fn eval_st_asym_velocity(
    model: &SpaceTimeModel,
    gamma_h: &[f64],
    gamma_xi: &[f64],
    i: usize,
    j: usize,
    h: &[f64],
    u: f64,
) -> Result<f64> {
    check_indices(model, i, j)?;
    if gamma_h.len() != h.len() {
        return Err(Error::dims("gamma_h", h.len(), gamma_h.len()));
    }
    if gamma_xi.len() != model.latent_dim() {
        return Err(Error::dims("gamma_xi", model.latent_dim(), gamma_xi.len()));
    }
    let hs: Vec<f64> = h.iter().zip(gamma_h).map(|(x, g)| x - g * u).collect();
    let vs: Vec<f64> = model
        .latent_lag(i, j)
        .iter()
        .zip(gamma_xi)
        .map(|(x, g)| x - g * u)
        .collect();
    Ok(model.base(h.len(), norm2(&hs), u, norm2(&vs)))
}

fn check_indices(model: &SpaceTimeModel, i: usize, j: usize) -> Result<()> {
    let p = model.p();
    for index in [i, j] {
        if index >= p {
            return Err(Error::IndexOutOfRange { index, p });
        }
    }
    Ok(())
}
