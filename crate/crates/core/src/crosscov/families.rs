//! Stationary isotropic base families: separable, LMC, multivariate Matérn
//! and the latent-dimension model.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::params::{take, Domain, ParamSink};
use crate::error::{Error, Result};
use crate::kernels::{matern_unchecked, Correlation};

fn check_positive(name: String, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive, got {v}")))
    }
}

fn square_matrix(name: &str, m: &[Vec<f64>], p: usize) -> Result<DMatrix<f64>> {
    if m.len() != p {
        return Err(Error::dims(format!("rows of {name}"), p, m.len()));
    }
    let mut out = DMatrix::zeros(p, p);
    for (i, row) in m.iter().enumerate() {
        if row.len() != p {
            return Err(Error::dims(format!("row {i} of {name}"), p, row.len()));
        }
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name}[{i},{j}]"), "not finite"));
            }
            out[(i, j)] = *v;
        }
    }
    Ok(out)
}

fn check_symmetric(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let scale = m.abs().max().max(1e-300);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::invalid(
                    format!("{name}[{i},{j}]"),
                    format!("matrix is not symmetric ({} vs {})", m[(i, j)], m[(j, i)]),
                ));
            }
        }
    }
    Ok(())
}

fn correlation_params(c: &Correlation, prefix: &str, sink: &mut ParamSink) {
    match c {
        Correlation::Matern(m) => {
            sink.push(format!("{prefix}.nu"), m.nu, Domain::POSITIVE);
            sink.push(format!("{prefix}.a"), m.a, Domain::POSITIVE);
        }
        Correlation::PoweredExponential(pe) => {
            sink.push(format!("{prefix}.phi"), pe.phi, Domain::POSITIVE);
            sink.push(format!("{prefix}.kappa"), pe.kappa, Domain::Interval(0.0, 2.0));
        }
        Correlation::Askey(a) => {
            sink.push(format!("{prefix}.support"), a.support, Domain::POSITIVE);
            sink.push(format!("{prefix}.exponent"), a.exponent, Domain::POSITIVE);
        }
    }
}

fn set_correlation_params(c: &mut Correlation, values: &mut dyn Iterator<Item = f64>) {
    match c {
        Correlation::Matern(m) => {
            m.nu = take(values);
            m.a = take(values);
        }
        Correlation::PoweredExponential(pe) => {
            pe.phi = take(values);
            pe.kappa = take(values);
        }
        Correlation::Askey(a) => {
            a.support = take(values);
            a.exponent = take(values);
        }
    }
}

/// `C_ij(h) = rho(h) R_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableModel {
    pub rho: Correlation,
    /// Nonspatial covariance matrix `R`.
    pub covariance: Vec<Vec<f64>>,
}

impl SeparableModel {
    pub(crate) fn p(&self) -> usize {
        self.covariance.len()
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        self.rho.validate(dim)?;
        let p = self.p();
        if p == 0 {
            return Err(Error::invalid("covariance", "empty matrix"));
        }
        let r = square_matrix("covariance", &self.covariance, p)?;
        check_symmetric("covariance", &r)?;
        let min = crate::linalg::min_eigenvalue(&r);
        if min < -1e-10 * r.trace().abs() {
            return Err(Error::invalid(
                "covariance",
                format!("not nonnegative definite (min eigenvalue {min:.3e})"),
            ));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn eval_iso(&self, i: usize, j: usize, r: f64) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.rho.eval(r) * self.covariance[lo][hi]
    }

    pub(crate) fn length_scale(&self) -> f64 {
        self.rho.length_scale()
    }

    /// Parameterized through the Cholesky factor of `R`, so every value keeps
    /// `R` nonnegative definite.
    pub(crate) fn params(&self, sink: &mut ParamSink) {
        correlation_params(&self.rho, "rho", sink);
        let p = self.p();
        let r = square_matrix("covariance", &self.covariance, p).unwrap_or_else(|_| DMatrix::zeros(p, p));
        let jitter = 1e-12 * r.trace().abs().max(1e-300);
        let l = crate::linalg::cholesky_lower(&r, 0.0)
            .or_else(|_| crate::linalg::cholesky_lower(&r, jitter))
            .unwrap_or_else(|_| DMatrix::zeros(p, p));
        for i in 0..p {
            for j in 0..=i {
                sink.push(format!("chol[{i},{j}]"), l[(i, j)], Domain::Real);
            }
        }
    }

    pub(crate) fn set_params(&mut self, values: &mut dyn Iterator<Item = f64>) {
        set_correlation_params(&mut self.rho, values);
        let p = self.p();
        let mut l = DMatrix::<f64>::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                l[(i, j)] = take(values);
            }
        }
        let r = &l * l.transpose();
        for i in 0..p {
            for j in 0..p {
                self.covariance[i][j] = r[(i, j)];
            }
        }
    }
}

/// Linear model of coregionalization, `C_ij(h) = sum_k rho_k(h) A_ik A_jk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmcModel {
    pub rhos: Vec<Correlation>,
    /// `p x r` loading matrix `A`, one row per variable.
    pub loadings: Vec<Vec<f64>>,
}

impl LmcModel {
    pub(crate) fn p(&self) -> usize {
        self.loadings.len()
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        let p = self.p();
        let r = self.rhos.len();
        if p == 0 {
            return Err(Error::invalid("loadings", "empty matrix"));
        }
        if r == 0 || r > p {
            return Err(Error::invalid("rhos", format!("need 1 <= r <= p = {p}, got r = {r}")));
        }
        for (k, rho) in self.rhos.iter().enumerate() {
            rho.validate(dim).map_err(|e| match e {
                Error::InvalidParameter { param, reason } => {
                    Error::invalid(format!("rhos[{k}].{param}"), reason)
                }
                other => other,
            })?;
        }
        let mut a = DMatrix::zeros(p, r);
        for (i, row) in self.loadings.iter().enumerate() {
            if row.len() != r {
                return Err(Error::dims(format!("row {i} of loadings"), r, row.len()));
            }
            for (k, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("loadings[{i},{k}]"), "not finite"));
                }
                a[(i, k)] = *v;
            }
        }
        let sv = a.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if !(smax > 0.0) || smin <= 1e-12 * smax {
            return Err(Error::invalid(
                "loadings",
                format!("matrix must have full column rank (singular values {smin:.3e}..{smax:.3e})"),
            ));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn eval_iso(&self, i: usize, j: usize, r: f64) -> f64 {
        let (ai, aj) = (&self.loadings[i], &self.loadings[j]);
        self.rhos
            .iter()
            .enumerate()
            .map(|(k, rho)| rho.eval(r) * (ai[k] * aj[k]))
            .sum()
    }

    pub(crate) fn length_scale(&self) -> f64 {
        self.rhos
            .iter()
            .map(Correlation::length_scale)
            .fold(0.0, f64::max)
    }

    pub(crate) fn params(&self, sink: &mut ParamSink) {
        for (k, rho) in self.rhos.iter().enumerate() {
            correlation_params(rho, &format!("rho[{k}]"), sink);
        }
        for (i, row) in self.loadings.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                sink.push(format!("loading[{i},{k}]"), *v, Domain::Real);
            }
        }
    }

    pub(crate) fn set_params(&mut self, values: &mut dyn Iterator<Item = f64>) {
        for rho in &mut self.rhos {
            set_correlation_params(rho, values);
        }
        for row in &mut self.loadings {
            for v in row.iter_mut() {
                *v = take(values);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaternVariant {
    /// One shared `a`, `nu_ij = (nu_i + nu_j)/2`.
    Parsimonious,
    /// `p = 2` with separate marginal and cross scale/smoothness.
    FullBivariate,
    /// Per-variable Matérn marginals, zero cross-covariance.
    Independent,
}

/// Multivariate Matérn: `C_ii = sigma_i^2 M(.|nu_i, a_i)`,
/// `C_ij = beta_ij sigma_i sigma_j M(.|nu_ij, a_ij)`, plus optional nuggets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiMaternModel {
    pub variant: MaternVariant,
    pub sigmas: Vec<f64>,
    pub nus: Vec<f64>,
    /// Inverse length scales: one value for parsimonious, one per variable otherwise.
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_cross: Option<f64>,
    /// Cross smoothness for the full bivariate model; defaults to the mean of the marginals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_cross: Option<f64>,
    /// Collocated cross-correlations, `p x p` symmetric with unit diagonal.
    /// May be omitted for the independent variant.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<Vec<f64>>,
    /// Nugget variances `tau_i^2`; empty means none.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nuggets: Vec<f64>,
}

impl MultiMaternModel {
    pub fn parsimonious(sigmas: Vec<f64>, nus: Vec<f64>, a: f64, beta: Vec<Vec<f64>>) -> Self {
        Self {
            variant: MaternVariant::Parsimonious,
            sigmas,
            nus,
            a: vec![a],
            a_cross: None,
            nu_cross: None,
            beta,
            nuggets: Vec::new(),
        }
    }

    /// Bivariate parsimonious model with collocated correlation `beta`.
    pub fn bivariate_parsimonious(sigmas: [f64; 2], nus: [f64; 2], a: f64, beta: f64) -> Self {
        Self::parsimonious(
            sigmas.to_vec(),
            nus.to_vec(),
            a,
            vec![vec![1.0, beta], vec![beta, 1.0]],
        )
    }

    pub fn full_bivariate(
        sigmas: [f64; 2],
        nus: [f64; 2],
        a: [f64; 2],
        a_cross: f64,
        nu_cross: Option<f64>,
        rho: f64,
    ) -> Self {
        Self {
            variant: MaternVariant::FullBivariate,
            sigmas: sigmas.to_vec(),
            nus: nus.to_vec(),
            a: a.to_vec(),
            a_cross: Some(a_cross),
            nu_cross,
            beta: vec![vec![1.0, rho], vec![rho, 1.0]],
            nuggets: Vec::new(),
        }
    }

    pub fn independent(sigmas: Vec<f64>, nus: Vec<f64>, a: Vec<f64>) -> Self {
        Self {
            variant: MaternVariant::Independent,
            sigmas,
            nus,
            a,
            a_cross: None,
            nu_cross: None,
            beta: Vec::new(),
            nuggets: Vec::new(),
        }
    }

    pub fn with_nuggets(mut self, nuggets: Vec<f64>) -> Self {
        self.nuggets = nuggets;
        self
    }

    pub(crate) fn p(&self) -> usize {
        self.sigmas.len()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let p = self.p();
        if p == 0 {
            return Err(Error::invalid("sigmas", "at least one variable required"));
        }
        if self.nus.len() != p {
            return Err(Error::dims("nus", p, self.nus.len()));
        }
        for i in 0..p {
            check_positive(format!("sigmas[{i}]"), self.sigmas[i])?;
            check_positive(format!("nus[{i}]"), self.nus[i])?;
        }
        let expected_a = match self.variant {
            MaternVariant::Parsimonious => 1,
            MaternVariant::FullBivariate | MaternVariant::Independent => p,
        };
        if self.a.len() != expected_a {
            return Err(Error::dims("a", expected_a, self.a.len()));
        }
        for (i, a) in self.a.iter().enumerate() {
            check_positive(format!("a[{i}]"), *a)?;
        }
        match self.variant {
            MaternVariant::FullBivariate => {
                if p != 2 {
                    return Err(Error::invalid(
                        "variant",
                        format!("full bivariate Matérn requires p = 2, got {p}"),
                    ));
                }
                match self.a_cross {
                    Some(a) => check_positive("a_cross".into(), a)?,
                    None => return Err(Error::invalid("a_cross", "required for full bivariate model")),
                }
                if let Some(nu) = self.nu_cross {
                    check_positive("nu_cross".into(), nu)?;
                }
            }
            _ => {
                if self.a_cross.is_some() || self.nu_cross.is_some() {
                    return Err(Error::invalid(
                        "a_cross",
                        "cross scale/smoothness only apply to the full bivariate model",
                    ));
                }
            }
        }
        if self.variant == MaternVariant::Independent && self.beta.is_empty() {
            // zero cross-covariance
        } else {
            let b = square_matrix("beta", &self.beta, p)?;
            check_symmetric("beta", &b)?;
            for i in 0..p {
                if b[(i, i)] != 1.0 {
                    return Err(Error::invalid(format!("beta[{i},{i}]"), "diagonal must be 1"));
                }
                if self.variant == MaternVariant::Independent {
                    for j in 0..p {
                        if i != j && b[(i, j)] != 0.0 {
                            return Err(Error::invalid(
                                format!("beta[{i},{j}]"),
                                "independent model requires zero cross-correlation",
                            ));
                        }
                    }
                }
            }
        }
        if !self.nuggets.is_empty() {
            if self.nuggets.len() != p {
                return Err(Error::dims("nuggets", p, self.nuggets.len()));
            }
            for (i, t) in self.nuggets.iter().enumerate() {
                if !(*t >= 0.0) || !t.is_finite() {
                    return Err(Error::invalid(format!("nuggets[{i}]"), "must be nonnegative"));
                }
            }
        }
        Ok(())
    }

    pub fn beta(&self, i: usize, j: usize) -> f64 {
        if i == j {
            1.0
        } else if self.beta.is_empty() {
            0.0
        } else {
            self.beta[i.min(j)][i.max(j)]
        }
    }

    pub fn nugget(&self, i: usize) -> f64 {
        self.nuggets.get(i).copied().unwrap_or(0.0)
    }

    /// `(nu_ij, a_ij)` used for the pair.
    pub fn pair_params(&self, i: usize, j: usize) -> (f64, f64) {
        match self.variant {
            MaternVariant::Parsimonious => (0.5 * (self.nus[i] + self.nus[j]), self.a[0]),
            MaternVariant::FullBivariate | MaternVariant::Independent if i == j => {
                (self.nus[i], self.a[i])
            }
            MaternVariant::FullBivariate => (
                self.nu_cross.unwrap_or(0.5 * (self.nus[0] + self.nus[1])),
                self.a_cross.unwrap_or(self.a[0]),
            ),
            MaternVariant::Independent => (0.5 * (self.nus[i] + self.nus[j]), self.a[i]),
        }
    }

    #[inline]
    pub(crate) fn eval_iso(&self, i: usize, j: usize, r: f64) -> f64 {
        let b = self.beta(i, j);
        if b == 0.0 {
            return 0.0;
        }
        let (nu, a) = self.pair_params(i, j);
        let mut c = b * (self.sigmas[i] * self.sigmas[j]) * matern_unchecked(r, nu, a);
        if i == j && r == 0.0 {
            c += self.nugget(i);
        }
        c
    }

    pub(crate) fn length_scale(&self) -> f64 {
        let amin = self
            .a
            .iter()
            .chain(self.a_cross.iter())
            .fold(f64::INFINITY, |m, a| m.min(*a));
        1.0 / amin
    }

    pub(crate) fn params(&self, sink: &mut ParamSink) {
        let p = self.p();
        for i in 0..p {
            sink.push(format!("sigma[{i}]"), self.sigmas[i], Domain::POSITIVE);
        }
        for i in 0..p {
            sink.push(format!("nu[{i}]"), self.nus[i], Domain::POSITIVE);
        }
        match self.variant {
            MaternVariant::Parsimonious => sink.push("a", self.a[0], Domain::POSITIVE),
            _ => {
                for i in 0..p {
                    sink.push(format!("a[{i}]"), self.a[i], Domain::POSITIVE);
                }
            }
        }
        if self.variant == MaternVariant::FullBivariate {
            let (nu_c, a_c) = self.pair_params(0, 1);
            sink.push("a_cross", a_c, Domain::POSITIVE);
            sink.push("nu_cross", nu_c, Domain::POSITIVE);
        }
        if self.variant != MaternVariant::Independent {
            for i in 0..p {
                for j in (i + 1)..p {
                    sink.push(format!("beta[{i},{j}]"), self.beta(i, j), Domain::Interval(-1.0, 1.0));
                }
            }
        }
        for i in 0..p {
            sink.push(format!("nugget[{i}]"), self.nugget(i), Domain::NonNegative);
        }
    }

    pub(crate) fn set_params(&mut self, values: &mut dyn Iterator<Item = f64>) {
        let p = self.p();
        for i in 0..p {
            self.sigmas[i] = take(values);
        }
        for i in 0..p {
            self.nus[i] = take(values);
        }
        for a in self.a.iter_mut() {
            *a = take(values);
        }
        if self.variant == MaternVariant::FullBivariate {
            self.a_cross = Some(take(values));
            self.nu_cross = Some(take(values));
        }
        if self.variant != MaternVariant::Independent {
            if self.beta.is_empty() {
                self.beta = (0..p)
                    .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect();
            }
            for i in 0..p {
                for j in (i + 1)..p {
                    let b = take(values);
                    self.beta[i][j] = b;
                    self.beta[j][i] = b;
                }
            }
        }
        let nuggets: Vec<f64> = (0..p).map(|_| take(values)).collect();
        if !(self.nuggets.is_empty() && nuggets.iter().all(|t| *t == 0.0)) {
            self.nuggets = nuggets;
        }
    }
}

/// Latent-dimension model: each variable is a point `xi_i` in `R^k`,
/// `C_ij(h) = sigma_i sigma_j / (d_ij + 1) exp(-alpha |h| / (d_ij + 1)^{beta/2})
///            + tau^2 I(i=j) I(h=0)` with `d_ij = |xi_i - xi_j|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatentDimModel {
    pub xis: Vec<Vec<f64>>,
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub tau: f64,
    pub alpha: f64,
    /// Space–variable nonseparability in `[0, 1]`; 0 is separable.
    pub beta_sep: f64,
}

impl LatentDimModel {
    pub(crate) fn p(&self) -> usize {
        self.sigmas.len()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let p = self.p();
        if p == 0 {
            return Err(Error::invalid("sigmas", "at least one variable required"));
        }
        if self.xis.len() != p {
            return Err(Error::dims("xis", p, self.xis.len()));
        }
        let k = self.xis[0].len();
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
            check_positive(format!("sigmas[{i}]"), self.sigmas[i])?;
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::invalid("tau", "must be nonnegative"));
        }
        check_positive("alpha".into(), self.alpha)?;
        if !(0.0..=1.0).contains(&self.beta_sep) {
            return Err(Error::invalid(
                "beta_sep",
                format!("must lie in [0, 1], got {}", self.beta_sep),
            ));
        }
        Ok(())
    }

    fn latent_distance(&self, i: usize, j: usize) -> f64 {
        crate::design::euclidean(&self.xis[i], &self.xis[j])
    }

    #[inline]
    pub(crate) fn eval_iso(&self, i: usize, j: usize, r: f64) -> f64 {
        let d1 = self.latent_distance(i, j) + 1.0;
        let mut c = (self.sigmas[i] * self.sigmas[j]) / d1
            * (-self.alpha * r / d1.powf(0.5 * self.beta_sep)).exp();
        if i == j && r == 0.0 {
            c += self.tau * self.tau;
        }
        c
    }

    pub(crate) fn nugget(&self) -> f64 {
        self.tau * self.tau
    }

    pub(crate) fn length_scale(&self) -> f64 {
        1.0 / self.alpha
    }

    pub(crate) fn params(&self, sink: &mut ParamSink) {
        for (i, xi) in self.xis.iter().enumerate() {
            for (c, v) in xi.iter().enumerate() {
                sink.push(format!("xi[{i},{c}]"), *v, Domain::Real);
            }
        }
        for (i, s) in self.sigmas.iter().enumerate() {
            sink.push(format!("sigma[{i}]"), *s, Domain::POSITIVE);
        }
        sink.push("tau", self.tau, Domain::NonNegative);
        sink.push("alpha", self.alpha, Domain::POSITIVE);
        sink.push("beta_sep", self.beta_sep, Domain::Interval(0.0, 1.0));
    }

    pub(crate) fn set_params(&mut self, values: &mut dyn Iterator<Item = f64>) {
        for xi in &mut self.xis {
            for v in xi.iter_mut() {
                *v = take(values);
            }
        }
        for s in &mut self.sigmas {
            *s = take(values);
        }
        self.tau = take(values);
        self.alpha = take(values);
        self.beta_sep = take(values);
    }
}
