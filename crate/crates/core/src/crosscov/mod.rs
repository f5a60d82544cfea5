//! Matrix-valued cross-covariance functions `C_ij(s1, s2)`.
//!
//! A [`CrossCovModel`] pairs a spatial dimension with a [`Family`]. Families
//! are either base models (separable, LMC, multivariate Matérn, latent
//! dimensions, space–time) or wrappers around another family (lag shifts,
//! spatially varying standard deviations, tapers). Variables are indexed from
//! 0. Nuggets are added on the diagonal when both sites coincide exactly.

mod families;
pub mod params;
mod validity;
mod wrappers;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use families::{LatentDimModel, LmcModel, MaternVariant, MultiMaternModel, SeparableModel};
pub use params::{Domain, Param};
pub use validity::{validate_model, TrialRecord, ValidityReport, CONSTRUCTION_CHECK, TOLERANCE};
pub use wrappers::{AsymShift, SigmaSurface, Taper, TaperKind, VarianceScale};

use crate::design::{euclidean, SpatialDesign};
use crate::error::{Error, Result};
use crate::kernels::{AskeyParams, Correlation, MultivariateAskey};
use crate::spacetime::SpaceTimeModel;
use params::ParamSink;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Separable(SeparableModel),
    Lmc(LmcModel),
    MultiMatern(MultiMaternModel),
    LatentDim(LatentDimModel),
    AsymShift(AsymShift),
    VarianceScale(VarianceScale),
    Taper(Taper),
    SpaceTime(SpaceTimeModel),
}

impl Family {
    pub fn p(&self) -> usize {
        match self {
            Family::Separable(m) => m.p(),
            Family::Lmc(m) => m.p(),
            Family::MultiMatern(m) => m.p(),
            Family::LatentDim(m) => m.p(),
            Family::AsymShift(w) => w.base.p(),
            Family::VarianceScale(w) => w.base.p(),
            Family::Taper(w) => w.base.p(),
            Family::SpaceTime(m) => m.p(),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Family::Separable(m) => m.validate(dim),
            Family::Lmc(m) => m.validate(dim),
            Family::MultiMatern(m) => m.validate(),
            Family::LatentDim(m) => m.validate(),
            Family::AsymShift(w) => w.validate(dim),
            Family::VarianceScale(w) => w.validate(dim),
            Family::Taper(w) => w.validate(dim),
            Family::SpaceTime(m) => {
                if dim < 2 {
                    return Err(Error::invalid(
                        "dim",
                        "space–time models need at least one spatial coordinate plus time",
                    ));
                }
                m.validate(dim - 1)
            }
        }
    }

    /// Depends on the sites only through `s1 - s2`.
    pub fn is_stationary(&self) -> bool {
        match self {
            Family::VarianceScale(_) => false,
            Family::AsymShift(w) => w.base.is_stationary(),
            Family::Taper(w) => w.base.is_stationary(),
            _ => true,
        }
    }

    /// Depends on the sites only through `|s1 - s2|`.
    pub fn is_isotropic(&self) -> bool {
        match self {
            Family::Separable(_) | Family::Lmc(_) | Family::MultiMatern(_) | Family::LatentDim(_) => {
                true
            }
            Family::Taper(w) => w.base.is_isotropic(),
            _ => false,
        }
    }

    /// Isotropic families only.
    #[inline]
    fn eval_iso(&self, i: usize, j: usize, r: f64) -> f64 {
        match self {
            Family::Separable(m) => m.eval_iso(i, j, r),
            Family::Lmc(m) => m.eval_iso(i, j, r),
            Family::MultiMatern(m) => m.eval_iso(i, j, r),
            Family::LatentDim(m) => m.eval_iso(i, j, r),
            Family::Taper(w) => w.base.eval_iso(i, j, r) * w.factor(i, j, r),
            _ => unreachable!("eval_iso on a non-isotropic family"),
        }
    }

    /// Stationary families only; `h = s1 - s2`.
    fn eval_lag(&self, i: usize, j: usize, h: &[f64]) -> f64 {
        match self {
            Family::AsymShift(w) => w.base.eval_lag(i, j, &w.shifted_lag(i, j, h)),
            Family::SpaceTime(m) => {
                let (space, time) = h.split_at(h.len() - 1);
                m.eval(i, j, space, time[0])
            }
            Family::Taper(w) if !w.base.is_isotropic() => {
                let r = h.iter().map(|x| x * x).sum::<f64>().sqrt();
                w.base.eval_lag(i, j, h) * w.factor(i, j, r)
            }
            _ => self.eval_iso(i, j, h.iter().map(|x| x * x).sum::<f64>().sqrt()),
        }
    }

    fn eval(&self, i: usize, j: usize, s1: &[f64], s2: &[f64]) -> f64 {
        if self.is_isotropic() {
            return self.eval_iso(i, j, euclidean(s1, s2));
        }
        if self.is_stationary() {
            let h: Vec<f64> = s1.iter().zip(s2).map(|(a, b)| a - b).collect();
            return self.eval_lag(i, j, &h);
        }
        match self {
            Family::VarianceScale(w) => {
                (w.surfaces[i].at(s1) * w.surfaces[j].at(s2)) * w.base.eval(i, j, s1, s2)
            }
            Family::Taper(w) => w.base.eval(i, j, s1, s2) * w.factor(i, j, euclidean(s1, s2)),
            Family::AsymShift(_) => unreachable!("validated shift wrappers are stationary"),
            _ => unreachable!("base families are stationary"),
        }
    }

    fn nugget(&self, i: usize, s: &[f64]) -> f64 {
        match self {
            Family::MultiMatern(m) => m.nugget(i),
            Family::LatentDim(m) => m.nugget(),
            Family::AsymShift(w) => w.base.nugget(i, s),
            Family::Taper(w) => w.base.nugget(i, s),
            Family::VarianceScale(w) => w.surfaces[i].at(s).powi(2) * w.base.nugget(i, s),
            _ => 0.0,
        }
    }

    fn length_scale(&self) -> f64 {
        match self {
            Family::Separable(m) => m.length_scale(),
            Family::Lmc(m) => m.length_scale(),
            Family::MultiMatern(m) => m.length_scale(),
            Family::LatentDim(m) => m.length_scale(),
            Family::AsymShift(w) => w.base.length_scale(),
            Family::VarianceScale(w) => w.base.length_scale(),
            Family::Taper(w) => w.base.length_scale().min(w.support()),
            Family::SpaceTime(m) => m.length_scale(),
        }
    }

    /// Families whose validity is not guaranteed by construction.
    fn needs_numeric_check(&self) -> bool {
        match self {
            Family::MultiMatern(m) => m.variant != MaternVariant::Independent && m.p() > 1,
            Family::AsymShift(w) => w.base.needs_numeric_check(),
            Family::VarianceScale(w) => w.base.needs_numeric_check(),
            Family::Taper(w) => w.base.needs_numeric_check(),
            _ => false,
        }
    }

    fn params(&self, sink: &mut ParamSink) {
        match self {
            Family::Separable(m) => m.params(sink),
            Family::Lmc(m) => m.params(sink),
            Family::MultiMatern(m) => m.params(sink),
            Family::LatentDim(m) => m.params(sink),
            Family::SpaceTime(m) => m.params(sink),
            Family::AsymShift(w) => {
                let prefix = format!("{}base.", sink.prefix());
                w.base.params(&mut ParamSink::new(&prefix, sink.out()));
                for (i, a) in w.shifts.iter().enumerate().skip(1) {
                    for (c, v) in a.iter().enumerate() {
                        sink.push(format!("shift[{i},{c}]"), *v, Domain::Real);
                    }
                }
            }
            Family::VarianceScale(w) => {
                let prefix = format!("{}base.", sink.prefix());
                w.base.params(&mut ParamSink::new(&prefix, sink.out()));
            }
            Family::Taper(w) => {
                let prefix = format!("{}base.", sink.prefix());
                w.base.params(&mut ParamSink::new(&prefix, sink.out()));
            }
        }
    }

    fn set_params(&mut self, values: &mut dyn Iterator<Item = f64>) {
        match self {
            Family::Separable(m) => m.set_params(values),
            Family::Lmc(m) => m.set_params(values),
            Family::MultiMatern(m) => m.set_params(values),
            Family::LatentDim(m) => m.set_params(values),
            Family::SpaceTime(m) => m.set_params(values),
            Family::AsymShift(w) => {
                w.base.set_params(values);
                for a in w.shifts.iter_mut().skip(1) {
                    for v in a.iter_mut() {
                        *v = params::take(values);
                    }
                }
            }
            Family::VarianceScale(w) => w.base.set_params(values),
            Family::Taper(w) => w.base.set_params(values),
        }
    }
}

/// A validated cross-covariance model on `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossCovModel {
    dim: usize,
    model: Family,
}

impl CrossCovModel {
    /// Validates parameter invariants and, for families without a
    /// closed-form validity guarantee, runs the randomized
    /// nonnegative-definiteness check.
    pub fn new(dim: usize, family: Family) -> Result<Self> {
        let m = Self::structural(dim, family)?;
        m.check_numeric()?;
        Ok(m)
    }

    fn structural(dim: usize, family: Family) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        family.validate(dim)?;
        Ok(Self { dim, model: family })
    }

    fn check_numeric(&self) -> Result<()> {
        if self.model.needs_numeric_check() {
            let (sizes, trials, seed) = CONSTRUCTION_CHECK;
            validate_model(self, sizes, trials, seed).into_result()?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> usize {
        self.model.p()
    }

    pub fn family(&self) -> &Family {
        &self.model
    }

    pub fn into_family(self) -> Family {
        self.model
    }

    pub fn is_stationary(&self) -> bool {
        self.model.is_stationary()
    }

    pub fn is_isotropic(&self) -> bool {
        self.model.is_isotropic()
    }

    /// Typical correlation length, used to size random validation designs
    /// and default initial values.
    pub fn length_scale(&self) -> f64 {
        self.model.length_scale()
    }

    /// `C_ij(s1, s2)`, including the nugget when `i == j` and `s1 == s2`.
    pub fn eval(&self, i: usize, j: usize, s1: &[f64], s2: &[f64]) -> Result<f64> {
        let p = self.p();
        for index in [i, j] {
            if index >= p {
                return Err(Error::IndexOutOfRange { index, p });
            }
        }
        for s in [s1, s2] {
            if s.len() != self.dim {
                return Err(Error::dims("location", self.dim, s.len()));
            }
        }
        Ok(self.model.eval(i, j, s1, s2))
    }

    /// Like [`CrossCovModel::eval`] without index or dimension checks.
    #[inline]
    pub fn eval_unchecked(&self, i: usize, j: usize, s1: &[f64], s2: &[f64]) -> f64 {
        self.model.eval(i, j, s1, s2)
    }

    /// Stationary models: `C_ij(h)` for lag `h = s1 - s2`.
    pub fn eval_lag(&self, i: usize, j: usize, h: &[f64]) -> Result<f64> {
        if !self.is_stationary() {
            return Err(Error::NonStationaryBase);
        }
        let origin = vec![0.0; self.dim];
        self.eval(i, j, h, &origin)
    }

    /// Nugget variance of variable `i` at site `s` (already included in
    /// `eval` at coincident sites).
    pub fn nugget(&self, i: usize, s: &[f64]) -> f64 {
        self.model.nugget(i, s)
    }

    /// Free-parameter list in a fixed order, with names such as `sigma[0]`,
    /// `beta[0,1]` or `base.a`.
    pub fn params(&self) -> Vec<Param> {
        let mut out = Vec::new();
        self.model.params(&mut ParamSink::new("", &mut out));
        out
    }

    /// Copy with parameter values replaced (same order as [`CrossCovModel::params`]),
    /// fully validated.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        let m = self.with_values_structural(values)?;
        m.check_numeric()?;
        Ok(m)
    }

    /// Like [`CrossCovModel::with_values`] but skips the randomized check.
    pub fn with_values_structural(&self, values: &[f64]) -> Result<Self> {
        let n = self.params().len();
        if values.len() != n {
            return Err(Error::dims("parameter vector", n, values.len()));
        }
        let mut family = self.model.clone();
        family.set_params(&mut values.iter().copied());
        Self::structural(self.dim, family)
    }

    /// True when construction runs the randomized validity check.
    pub fn needs_numeric_check(&self) -> bool {
        self.model.needs_numeric_check()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: CrossCovModel = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::new(raw.dim, raw.model)
    }

    /// Parses a config with structural checks only, so that a failing
    /// randomized check can be reported in full by the caller.
    pub fn from_toml_structural(text: &str) -> Result<Self> {
        let raw: CrossCovModel = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::structural(raw.dim, raw.model)
    }

    /// `np x np` joint covariance on a design (site-major, variable-minor),
    /// filled on one triangle and mirrored.
    pub fn joint_matrix(&self, design: &SpatialDesign) -> Result<DMatrix<f64>> {
        if design.dim() != self.dim {
            return Err(Error::dims("design dimension", self.dim, design.dim()));
        }
        let n = design.len();
        let p = self.p();
        let np = n * p;
        let mut sigma = DMatrix::zeros(np, np);
        let mut put = |k: usize, l: usize, block: &[f64]| {
            for i in 0..p {
                for j in 0..p {
                    let v = block[i * p + j];
                    sigma[(k * p + i, l * p + j)] = v;
                    sigma[(l * p + j, k * p + i)] = v;
                }
            }
        };
        if self.is_isotropic() {
            // evaluate once per distinct distance
            let mut dist = Vec::with_capacity(n * (n + 1) / 2);
            for k in 0..n {
                for l in k..n {
                    dist.push(euclidean(design.site(k), design.site(l)));
                }
            }
            let mut unique = dist.clone();
            unique.sort_by(f64::total_cmp);
            unique.dedup();
            let table: Vec<Vec<f64>> = unique
                .par_iter()
                .map(|&r| {
                    (0..p * p)
                        .map(|q| self.model.eval_iso(q / p, q % p, r))
                        .collect()
                })
                .collect();
            let mut q = 0;
            for k in 0..n {
                for l in k..n {
                    let u = unique.partition_point(|x| *x < dist[q]);
                    put(k, l, &table[u]);
                    q += 1;
                }
            }
        } else {
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|k| {
                    let sk = design.site(k);
                    let mut row = Vec::with_capacity((n - k) * p * p);
                    for l in k..n {
                        for q in 0..p * p {
                            row.push(self.model.eval(q / p, q % p, sk, design.site(l)));
                        }
                    }
                    row
                })
                .collect();
            for (k, row) in rows.iter().enumerate() {
                for (off, l) in (k..n).enumerate() {
                    put(k, l, &row[off * p * p..(off + 1) * p * p]);
                }
            }
        }
        Ok(sigma)
    }

    /// `n1 p x n2 p` cross-covariance between two designs.
    pub fn cross_matrix(&self, d1: &SpatialDesign, d2: &SpatialDesign) -> Result<DMatrix<f64>> {
        for d in [d1, d2] {
            if d.dim() != self.dim {
                return Err(Error::dims("design dimension", self.dim, d.dim()));
            }
        }
        let p = self.p();
        let mut out = DMatrix::zeros(d1.len() * p, d2.len() * p);
        for k in 0..d1.len() {
            for l in 0..d2.len() {
                for i in 0..p {
                    for j in 0..p {
                        out[(k * p + i, l * p + j)] =
                            self.model.eval(i, j, d1.site(k), d2.site(l));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `C_ij(s1, s2)` for a model; see [`CrossCovModel::eval`].
pub fn eval_cross_cov(model: &CrossCovModel, i: usize, j: usize, s1: &[f64], s2: &[f64]) -> Result<f64> {
    model.eval(i, j, s1, s2)
}

pub fn make_separable(dim: usize, rho: Correlation, covariance: Vec<Vec<f64>>) -> Result<CrossCovModel> {
    CrossCovModel::new(dim, Family::Separable(SeparableModel { rho, covariance }))
}

pub fn make_lmc(dim: usize, rhos: Vec<Correlation>, loadings: Vec<Vec<f64>>) -> Result<CrossCovModel> {
    CrossCovModel::new(dim, Family::Lmc(LmcModel { rhos, loadings }))
}

pub fn make_multimatern(dim: usize, model: MultiMaternModel) -> Result<CrossCovModel> {
    CrossCovModel::new(dim, Family::MultiMatern(model))
}

pub fn make_latentdim(dim: usize, model: LatentDimModel) -> Result<CrossCovModel> {
    CrossCovModel::new(dim, Family::LatentDim(model))
}

pub fn make_spacetime(spatial_dim: usize, model: SpaceTimeModel) -> Result<CrossCovModel> {
    CrossCovModel::new(spatial_dim + 1, Family::SpaceTime(model))
}

/// Shifts variable `i` by `shifts[i]`; all shifts are translated so the first
/// is the origin.
pub fn asymmetrize(base: &CrossCovModel, shifts: Vec<Vec<f64>>) -> Result<CrossCovModel> {
    if !base.is_stationary() {
        return Err(Error::NonStationaryBase);
    }
    let anchor = shifts.first().cloned().unwrap_or_default();
    let shifts = shifts
        .into_iter()
        .map(|a| a.iter().zip(&anchor).map(|(x, y)| x - y).chain(a.iter().skip(anchor.len()).copied()).collect())
        .collect();
    CrossCovModel::new(
        base.dim,
        Family::AsymShift(AsymShift {
            base: Box::new(base.model.clone()),
            shifts,
        }),
    )
}

pub fn taper(base: &CrossCovModel, taper: AskeyParams) -> Result<CrossCovModel> {
    CrossCovModel::new(
        base.dim,
        Family::Taper(Taper {
            base: Box::new(base.model.clone()),
            taper: TaperKind::Askey(taper),
        }),
    )
}

pub fn taper_multivariate(base: &CrossCovModel, taper: MultivariateAskey) -> Result<CrossCovModel> {
    CrossCovModel::new(
        base.dim,
        Family::Taper(Taper {
            base: Box::new(base.model.clone()),
            taper: TaperKind::MultivariateAskey(taper),
        }),
    )
}

pub fn scale_variances(base: &CrossCovModel, surfaces: Vec<SigmaSurface>) -> Result<CrossCovModel> {
    CrossCovModel::new(
        base.dim,
        Family::VarianceScale(VarianceScale {
            base: Box::new(base.model.clone()),
            surfaces,
        }),
    )
}
