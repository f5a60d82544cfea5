//! Wrappers that modify a base model: lag shifts, spatially varying standard
//! deviations and compactly supported tapers.

use serde::{Deserialize, Serialize};

use super::Family;
use crate::design::euclidean;
use crate::error::{Error, Result};
use crate::kernels::{askey_unchecked, AskeyParams, MultivariateAskey};

/// `C^a_ij(h) = C_ij(h + a_i - a_j)` with `a_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymShift {
    pub base: Box<Family>,
    /// One shift vector per variable; the first is always the origin.
    pub shifts: Vec<Vec<f64>>,
}

impl AsymShift {
    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        self.base.validate(dim)?;
        if !self.base.is_stationary() {
            return Err(Error::NonStationaryBase);
        }
        let p = self.base.p();
        if self.shifts.len() != p {
            return Err(Error::dims("shifts", p, self.shifts.len()));
        }
        for (i, a) in self.shifts.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::dims(format!("shifts[{i}]"), dim, a.len()));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("shifts[{i}]"), "not finite"));
            }
        }
        if self.shifts[0].iter().any(|v| *v != 0.0) {
            return Err(Error::invalid("shifts[0]", "the first shift is fixed at the origin"));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn shifted_lag(&self, i: usize, j: usize, h: &[f64]) -> Vec<f64> {
        h.iter()
            .zip(&self.shifts[i])
            .zip(&self.shifts[j])
            .map(|((h, ai), aj)| h + (ai - aj))
            .collect()
    }
}

/// Nearest-site lookup table for a positive standard-deviation surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSurface {
    pub sites: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl SigmaSurface {
    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            sites: vec![vec![0.0; dim]],
            values: vec![value],
        }
    }

    fn validate(&self, name: &str, dim: usize) -> Result<()> {
        if self.sites.is_empty() || self.sites.len() != self.values.len() {
            return Err(Error::dims(
                format!("{name}.values"),
                self.sites.len(),
                self.values.len(),
            ));
        }
        for (k, s) in self.sites.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::dims(format!("{name}.sites[{k}]"), dim, s.len()));
            }
            if !(self.values[k] > 0.0 && self.values[k].is_finite()) {
                return Err(Error::invalid(
                    format!("{name}.values[{k}]"),
                    format!("must be positive, got {}", self.values[k]),
                ));
            }
        }
        Ok(())
    }

    /// Value at the nearest tabulated site (first one on ties).
    pub fn at(&self, s: &[f64]) -> f64 {
        let mut best = (f64::INFINITY, 0);
        for (k, t) in self.sites.iter().enumerate() {
            let d = euclidean(s, t);
            if d < best.0 {
                best = (d, k);
            }
        }
        self.values[best.1]
    }
}

/// `C_ij(s1, s2) = sigma_i(s1) sigma_j(s2) R_ij(s1, s2)` for a
/// correlation-scale base `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceScale {
    pub base: Box<Family>,
    pub surfaces: Vec<SigmaSurface>,
}

impl VarianceScale {
    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        self.base.validate(dim)?;
        let p = self.base.p();
        if self.surfaces.len() != p {
            return Err(Error::dims("surfaces", p, self.surfaces.len()));
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            s.validate(&format!("surfaces[{i}]"), dim)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaperKind {
    Askey(AskeyParams),
    MultivariateAskey(MultivariateAskey),
}

/// Schur product of a base model with a compactly supported taper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Taper {
    pub base: Box<Family>,
    pub taper: TaperKind,
}

impl Taper {
    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        self.base.validate(dim)?;
        match &self.taper {
            TaperKind::Askey(a) => a.validate(dim),
            TaperKind::MultivariateAskey(m) => {
                m.validate(dim)?;
                if m.gammas.len() != self.base.p() {
                    return Err(Error::dims("taper.gammas", self.base.p(), m.gammas.len()));
                }
                Ok(())
            }
        }
    }

    pub(crate) fn support(&self) -> f64 {
        match &self.taper {
            TaperKind::Askey(a) => a.support,
            TaperKind::MultivariateAskey(m) => m.support,
        }
    }

    #[inline]
    pub(crate) fn factor(&self, i: usize, j: usize, r: f64) -> f64 {
        match &self.taper {
            TaperKind::Askey(a) => askey_unchecked(r, a.support, a.exponent),
            TaperKind::MultivariateAskey(m) => m.corr(i, j, r),
        }
    }
}
