//! Univariate stationary correlation functions and smoothing kernels.
//!
//! These are the building blocks every cross-covariance family is assembled
//! from. All functions are pure; values below [`UNDERFLOW`] are returned as 0.

mod bessel;

pub use bessel::{bessel_k, ln_bessel_k_scaled};

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Correlations smaller than this are reported as exactly zero.
pub const UNDERFLOW: f64 = 1e-300;

fn flush(v: f64) -> f64 {
    if v < UNDERFLOW {
        0.0
    } else {
        v
    }
}

fn check_distance(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("distance must be finite and nonnegative, got {r}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

/// Matérn smoothness `nu` and inverse length scale `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaternParams {
    pub nu: f64,
    pub a: f64,
}

impl MaternParams {
    pub fn new(nu: f64, a: f64) -> Result<Self> {
        let p = Self { nu, a };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("nu", self.nu)?;
        positive("a", self.a)
    }
}

/// Matérn correlation `2^{1-nu}/Gamma(nu) (a r)^nu K_nu(a r)`.
pub fn matern_corr(r: f64, p: &MaternParams) -> Result<f64> {
    check_distance(r)?;
    p.validate()?;
    Ok(matern_unchecked(r, p.nu, p.a))
}

/// Matérn correlation without argument checks. Callers guarantee `r >= 0`,
/// `nu > 0`, `a > 0`.
#[inline]
pub(crate) fn matern_unchecked(r: f64, nu: f64, a: f64) -> f64 {
    let x = a * r;
    if x == 0.0 {
        return 1.0;
    }
    let ln_m = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu) + nu * x.ln()
        + ln_bessel_k_scaled(nu, x)
        - x;
    flush(ln_m.exp().min(1.0))
}

/// Powered exponential correlation `exp(-(r/phi)^kappa)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoweredExpParams {
    pub phi: f64,
    pub kappa: f64,
}

impl PoweredExpParams {
    pub fn new(phi: f64, kappa: f64) -> Result<Self> {
        let p = Self { phi, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("phi", self.phi)?;
        if !(self.kappa > 0.0 && self.kappa <= 2.0) {
            return Err(Error::invalid(
                "kappa",
                format!("must lie in (0, 2], got {}", self.kappa),
            ));
        }
        Ok(())
    }
}

pub fn powered_exp_corr(r: f64, p: &PoweredExpParams) -> Result<f64> {
    check_distance(r)?;
    p.validate()
        .map_err(|e| Error::Domain(e.to_string()))?;
    Ok(powered_exp_unchecked(r, p.phi, p.kappa))
}

#[inline]
pub(crate) fn powered_exp_unchecked(r: f64, phi: f64, kappa: f64) -> f64 {
    flush((-(r / phi).powf(kappa)).exp())
}

/// Askey truncated power `(1 - r/b)_+^mu`, valid in `R^d` when `mu >= (d+1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AskeyParams {
    /// Support radius `b`.
    pub support: f64,
    /// Tail exponent `mu`.
    pub exponent: f64,
}

impl AskeyParams {
    pub fn new(support: f64, exponent: f64, dim: usize) -> Result<Self> {
        let p = Self { support, exponent };
        p.validate(dim)?;
        Ok(p)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        positive("support", self.support)?;
        let min = (dim as f64 + 1.0) / 2.0;
        if !(self.exponent >= min) || !self.exponent.is_finite() {
            return Err(Error::Domain(format!(
                "Askey exponent {} is below (d+1)/2 = {min} for d = {dim}",
                self.exponent
            )));
        }
        Ok(())
    }
}

pub fn askey_corr(r: f64, p: &AskeyParams) -> Result<f64> {
    check_distance(r)?;
    positive("support", p.support)?;
    Ok(askey_unchecked(r, p.support, p.exponent))
}

#[inline]
pub(crate) fn askey_unchecked(r: f64, support: f64, exponent: f64) -> f64 {
    if r >= support {
        0.0
    } else {
        flush((1.0 - r / support).powf(exponent))
    }
}

/// Multivariate Askey taper with `gamma_ij = (gamma_i + gamma_j)/2`:
/// `C_ij(h) = c_ij (1 - |h|/b)_+^{nu + gamma_ij + 1}`.
///
/// The raw amplitude is `b^{nu+1} B(gamma_ij + 1, nu + 1)`; evaluation uses
/// the amplitude normalized so that `C_ii(0) = 1`, which is a diagonal
/// rescaling and keeps the matrix function nonnegative definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultivariateAskey {
    pub support: f64,
    pub exponent: f64,
    pub gammas: Vec<f64>,
}

impl MultivariateAskey {
    pub fn new(support: f64, exponent: f64, gammas: Vec<f64>, dim: usize) -> Result<Self> {
        let m = Self {
            support,
            exponent,
            gammas,
        };
        m.validate(dim)?;
        Ok(m)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        AskeyParams {
            support: self.support,
            exponent: self.exponent,
        }
        .validate(dim)?;
        if self.gammas.is_empty() {
            return Err(Error::invalid("gammas", "at least one variable required"));
        }
        for (i, &g) in self.gammas.iter().enumerate() {
            positive(&format!("gammas[{i}]"), g)?;
        }
        Ok(())
    }

    fn gamma_ij(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.gammas[i] + self.gammas[j])
    }

    fn ln_raw(&self, i: usize, j: usize) -> f64 {
        (self.exponent + 1.0) * self.support.ln()
            + ln_beta(self.gamma_ij(i, j) + 1.0, self.exponent + 1.0)
    }

    /// `b^{nu+1} B(gamma_ij + 1, nu + 1)`.
    pub fn raw_amplitude(&self, i: usize, j: usize) -> f64 {
        self.ln_raw(i, j).exp()
    }

    pub fn corr(&self, i: usize, j: usize, r: f64) -> f64 {
        if r >= self.support {
            return 0.0;
        }
        let amp = (self.ln_raw(i, j) - 0.5 * (self.ln_raw(i, i) + self.ln_raw(j, j))).exp();
        let power = self.exponent + self.gamma_ij(i, j) + 1.0;
        flush(amp * (1.0 - r / self.support).powf(power))
    }
}

/// Gaussian smoothing kernel `K_lambda(r) = exp(-(r/lambda)^2 / 2)`, `K(0) = 1`.
pub fn smoothing_kernel(r: f64, lambda: f64) -> Result<f64> {
    check_distance(r)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("bandwidth must be positive, got {lambda}")));
    }
    let t = r / lambda;
    Ok(flush((-0.5 * t * t).exp()))
}

/// A univariate stationary isotropic correlation function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Correlation {
    Matern(MaternParams),
    PoweredExponential(PoweredExpParams),
    Askey(AskeyParams),
}

impl Correlation {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Correlation::Matern(p) => p.validate(),
            Correlation::PoweredExponential(p) => p.validate(),
            Correlation::Askey(p) => p.validate(dim),
        }
    }

    /// Correlation at distance `r >= 0`; parameters must already be validated.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Correlation::Matern(p) => matern_unchecked(r, p.nu, p.a),
            Correlation::PoweredExponential(p) => powered_exp_unchecked(r, p.phi, p.kappa),
            Correlation::Askey(p) => askey_unchecked(r, p.support, p.exponent),
        }
    }

    /// A distance over which the correlation decays substantially.
    pub fn length_scale(&self) -> f64 {
        match *self {
            Correlation::Matern(p) => 1.0 / p.a,
            Correlation::PoweredExponential(p) => p.phi,
            Correlation::Askey(p) => p.support,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matern(r: f64, nu: f64, a: f64) -> f64 {
        matern_corr(r, &MaternParams::new(nu, a).unwrap()).unwrap()
    }

    #[test]
    fn matern_examples() {
        assert_eq!(matern(0.0, 0.7, 3.0), 1.0);
        assert!((matern(1.0, 0.5, 1.0) - 0.367_879_441_171_442_3).abs() < 1e-14);
        assert!((matern(1.0, 1.5, 1.0) - 0.735_758_882_342_884_6).abs() < 1e-14);
    }

    #[test]
    fn matern_half_integer_closed_forms() {
        let closed: [(f64, fn(f64) -> f64); 3] = [
            (0.5, |x| (-x).exp()),
            (1.5, |x| (1.0 + x) * (-x).exp()),
            (2.5, |x| (1.0 + x + x * x / 3.0) * (-x).exp()),
        ];
        for (nu, f) in closed {
            let mut x = 1e-6;
            while x <= 50.0 {
                let got = matern(x, nu, 1.0);
                let want = f(x);
                assert!((got / want - 1.0).abs() <= 1e-10, "nu={nu} x={x} {got} vs {want}");
                x *= 1.07;
            }
        }
    }

    #[test]
    fn matern_continuous_in_order() {
        for &nu in &[0.5, 1.0, 1.5, 2.5, 3.5] {
            for i in 0..200 {
                let r = i as f64 * 0.05;
                let d = (matern(r, nu, 1.3) - matern(r, nu + 1e-7, 1.3)).abs();
                assert!(d <= 1e-5, "nu={nu} r={r} d={d}");
            }
        }
    }

    #[test]
    fn matern_large_argument_underflows_to_zero() {
        assert_eq!(matern(1e6, 1.0, 1.0), 0.0);
        assert!(matern(600.0, 0.5, 1.0) > 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matern_corr(-1.0, &MaternParams { nu: 1.0, a: 1.0 }).is_err());
        assert!(MaternParams::new(0.0, 1.0).is_err());
        assert!(MaternParams::new(1.0, -2.0).is_err());
        assert!(powered_exp_corr(1.0, &PoweredExpParams { phi: 1.0, kappa: 2.5 }).is_err());
        assert!(AskeyParams::new(1.0, 1.0, 2).is_err());
        assert!(AskeyParams::new(1.0, 1.5, 2).is_ok());
        assert!(smoothing_kernel(1.0, 0.0).is_err());
    }

    #[test]
    fn powered_exponential_examples() {
        let p = PoweredExpParams::new(1.0, 1.0).unwrap();
        assert_eq!(powered_exp_corr(0.0, &p).unwrap(), 1.0);
        assert!((powered_exp_corr(1.0, &p).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let g = PoweredExpParams::new(1.0, 2.0).unwrap();
        assert!((powered_exp_corr(2.0, &g).unwrap() - (-4f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn askey_examples() {
        let p = AskeyParams::new(2.0, 2.0, 2).unwrap();
        assert_eq!(askey_corr(0.0, &p).unwrap(), 1.0);
        assert_eq!(askey_corr(2.0, &p).unwrap(), 0.0);
        assert_eq!(askey_corr(7.0, &p).unwrap(), 0.0);
        assert!((askey_corr(1.0, &p).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn smoothing_kernel_shape() {
        assert_eq!(smoothing_kernel(0.0, 3.0).unwrap(), 1.0);
        assert!((smoothing_kernel(3.0, 3.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(
            smoothing_kernel(1.3, 0.7).unwrap(),
            smoothing_kernel(2.6, 1.4).unwrap()
        );
    }

    #[test]
    fn multivariate_askey_normalized_and_compact() {
        let m = MultivariateAskey::new(3.0, 2.0, vec![0.5, 2.0], 2).unwrap();
        assert!((m.corr(0, 0, 0.0) - 1.0).abs() < 1e-14);
        assert!((m.corr(1, 1, 0.0) - 1.0).abs() < 1e-14);
        assert_eq!(m.corr(0, 1, 3.0), 0.0);
        let b = statrs::function::beta::beta(0.5 + 1.0, 3.0);
        assert!((m.raw_amplitude(0, 0) - 27.0 * b).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn correlations_nonincreasing(nu in 0.05f64..6.0, a in 0.01f64..10.0, kappa in 0.1f64..2.0) {
            let corrs = [
                Correlation::Matern(MaternParams { nu, a }),
                Correlation::PoweredExponential(PoweredExpParams { phi: 1.0 / a, kappa }),
                Correlation::Askey(AskeyParams { support: 3.0 / a, exponent: 1.5 + nu }),
            ];
            for c in corrs {
                prop_assert_eq!(c.eval(0.0), 1.0);
                let mut prev = 1.0;
                for i in 1..400 {
                    let v = c.eval(i as f64 * 0.02 / a);
                    prop_assert!(v <= prev + 1e-15, "{:?} at step {}", c, i);
                    prev = v;
                }
            }
        }
    }
}
