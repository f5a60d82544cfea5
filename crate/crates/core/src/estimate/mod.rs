//! Maximum-likelihood fitting with parameter masks, multi-start simplex
//! search and staged plans.

pub mod nelder_mead;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::crosscov::{validate_model, CrossCovModel, MaternVariant, MultiMaternModel, Param, CONSTRUCTION_CHECK};
use crate::design::FieldSample;
use crate::error::{Error, Result};
use crate::gaussian::loglik;
pub use nelder_mead::{minimize, Minimum, NelderMeadOptions};

/// Which parameters are free. Patterns select parameters by name or name
/// prefix (`sigma` selects `sigma[0]`, `sigma[1]`, ...; `base.` selects the
/// whole wrapped model).
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Mask {
    #[default]
    All,
    None,
    Only(Vec<String>),
    AllExcept(Vec<String>),
}

impl Mask {
    pub fn only<S: AsRef<str>>(patterns: &[S]) -> Self {
        Mask::Only(patterns.iter().map(|s| s.as_ref().to_string()).collect())
    }

    pub fn all_except<S: AsRef<str>>(patterns: &[S]) -> Self {
        Mask::AllExcept(patterns.iter().map(|s| s.as_ref().to_string()).collect())
    }

    pub fn is_free(&self, p: &Param) -> bool {
        match self {
            Mask::All => true,
            Mask::None => false,
            Mask::Only(pats) => pats.iter().any(|q| p.matches(q)),
            Mask::AllExcept(pats) => !pats.iter().any(|q| p.matches(q)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    pub mask: Mask,
    /// Number of starts; the first is the initial model itself.
    pub starts: usize,
    /// Standard deviation of start perturbations in unconstrained space.
    pub spread: f64,
    pub optimizer: NelderMeadOptions,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self {
            mask: Mask::All,
            starts: 5,
            spread: 0.5,
            optimizer: NelderMeadOptions::default(),
        }
    }
}

impl FitSpec {
    pub fn with_mask(mask: Mask) -> Self {
        Self {
            mask,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartReport {
    pub loglik: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: CrossCovModel,
    pub loglik: f64,
    pub init_loglik: f64,
    pub free: Vec<String>,
    pub starts: Vec<StartReport>,
    pub seed: u64,
}

impl FitResult {
    pub fn evaluations(&self) -> usize {
        self.starts.iter().map(|s| s.evals).sum()
    }

    /// Difference between the best and second-best start.
    pub fn gap(&self) -> Option<f64> {
        let mut ll: Vec<f64> = self.starts.iter().map(|s| s.loglik).collect();
        ll.sort_by(|a, b| b.total_cmp(a));
        (ll.len() >= 2).then(|| ll[0] - ll[1])
    }

    /// Plain-text report, `key = value` lines with 17 significant digits.
    pub fn report(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("starts = {}\n", self.starts.len()));
        s.push_str(&format!("evaluations = {}\n", self.evaluations()));
        s.push_str(&format!("loglik = {:.16e}\n", self.loglik));
        s.push_str(&format!("init_loglik = {:.16e}\n", self.init_loglik));
        if let Some(g) = self.gap() {
            s.push_str(&format!("gap = {g:.16e}\n"));
        }
        s.push_str(&format!(
            "converged = {}\n",
            self.starts.iter().filter(|r| r.converged).count()
        ));
        s.push_str(&format!("free = [{}]\n", self.free.iter().map(|f| format!("\"{f}\"")).collect::<Vec<_>>().join(", ")));
        for p in self.model.params() {
            s.push_str(&format!("# {} = {:.16e}\n", p.name, p.value));
        }
        s
    }
}

/// Likelihood at a full parameter vector; invalid models score `-inf`.
fn objective(init: &CrossCovModel, sample: &FieldSample, values: &[f64]) -> f64 {
    match init.with_values(values) {
        Ok(m) => loglik(&m, sample),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Maximizes the log-likelihood over the free parameters of `init`.
pub fn fit_mle(spec: &FitSpec, sample: &FieldSample, init: &CrossCovModel, seed: u64) -> Result<FitResult> {
    if sample.replications() == 0 || sample.n() == 0 {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    if sample.p() != init.p() {
        return Err(Error::dims("variables", init.p(), sample.p()));
    }
    let params = init.params();
    let base: Vec<f64> = params.iter().map(|p| p.value).collect();
    let free: Vec<usize> = (0..params.len()).filter(|&k| spec.mask.is_free(&params[k])).collect();
    let init_loglik = loglik(init, sample);
    let free_names = free.iter().map(|&k| params[k].name.clone()).collect();
    if free.is_empty() {
        return Ok(FitResult {
            model: init.clone(),
            loglik: init_loglik,
            init_loglik,
            free: free_names,
            starts: vec![StartReport {
                loglik: init_loglik,
                evals: 1,
                converged: true,
            }],
            seed,
        });
    }
    let x0: Vec<f64> = free.iter().map(|&k| params[k].domain.to_unconstrained(base[k])).collect();
    let expand = |x: &[f64]| -> Vec<f64> {
        let mut v = base.clone();
        for (c, &k) in free.iter().enumerate() {
            v[k] = params[k].domain.from_unconstrained(x[c]);
        }
        v
    };
    let starts: Vec<Vec<f64>> = (0..spec.starts.max(1))
        .map(|s| {
            if s == 0 {
                return x0.clone();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let normal = Normal::new(0.0, spec.spread).expect("finite spread");
            x0.iter().map(|x| x + normal.sample(&mut rng)).collect()
        })
        .collect();
    let runs: Vec<Minimum> = starts
        .par_iter()
        .map(|x| {
            minimize(
                |x| -objective(init, sample, &expand(x)),
                x,
                &spec.optimizer,
            )
        })
        .collect();
    let reports: Vec<StartReport> = runs
        .iter()
        .map(|m| StartReport {
            loglik: -m.f,
            evals: m.evals,
            converged: m.converged,
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.f.total_cmp(&b.1.f).then(a.0.cmp(&b.0)))
        .map(|(_, m)| m)
        .expect("at least one start");
    if !best.f.is_finite() {
        return Err(Error::Estimation(format!(
            "no start produced a finite likelihood (initial loglik {init_loglik})"
        )));
    }
    let (model, ll) = if -best.f >= init_loglik {
        (init.with_values(&expand(&best.x))?, -best.f)
    } else {
        (init.clone(), init_loglik)
    };
    let (sizes, trials, check_seed) = CONSTRUCTION_CHECK;
    validate_model(&model, sizes, trials, check_seed).into_result()?;
    Ok(FitResult {
        model,
        loglik: ll,
        init_loglik,
        free: free_names,
        starts: reports,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagedFit {
    pub model: CrossCovModel,
    pub loglik: f64,
    pub stages: Vec<FitResult>,
}

/// Runs `stages` in order, each starting from the previous result.
pub fn fit_staged(stages: &[FitSpec], sample: &FieldSample, init: &CrossCovModel, seed: u64) -> Result<StagedFit> {
    if stages.is_empty() {
        return Err(Error::invalid("stages", "at least one stage required"));
    }
    let mut current = init.clone();
    let mut results = Vec::with_capacity(stages.len());
    for (s, spec) in stages.iter().enumerate() {
        let r = fit_mle(spec, sample, &current, seed.wrapping_add(s as u64)).map_err(|e| Error::Stage {
            stage: s,
            source: Box::new(e),
        })?;
        current = r.model.clone();
        results.push(r);
    }
    let loglik = results.last().map_or(f64::NEG_INFINITY, |r| r.loglik);
    Ok(StagedFit {
        model: current,
        loglik,
        stages: results,
    })
}

/// Default starting values for a multivariate Matérn fit: standard
/// deviations from the sample, `1/a` a quarter of the design diameter,
/// `nu = 0.5` and `beta` from collocated sample correlations.
pub fn init_multimatern(variant: MaternVariant, sample: &FieldSample) -> MultiMaternModel {
    let p = sample.p();
    let sigmas: Vec<f64> = sample.variances().iter().map(|v| v.sqrt().max(1e-12)).collect();
    let nus = vec![0.5; p];
    let diameter = sample.design().diameter();
    let a0 = if diameter > 0.0 { 4.0 / diameter } else { 1.0 };
    let beta: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    if i == j {
                        1.0
                    } else if variant == MaternVariant::Independent {
                        0.0
                    } else {
                        sample.collocated_correlation(i.min(j), i.max(j)).clamp(-0.95, 0.95)
                    }
                })
                .collect()
        })
        .collect();
    match variant {
        MaternVariant::Parsimonious => MultiMaternModel::parsimonious(sigmas, nus, a0, beta),
        MaternVariant::Independent => MultiMaternModel::independent(sigmas, nus, vec![a0; p]),
        MaternVariant::FullBivariate => {
            let mut m = MultiMaternModel::full_bivariate(
                [sigmas[0], sigmas.get(1).copied().unwrap_or(1.0)],
                [0.5, 0.5],
                [a0, a0],
                a0,
                None,
                beta.first().and_then(|r| r.get(1)).copied().unwrap_or(0.0),
            );
            m.nu_cross = Some(0.5);
            m
        }
    }
}

/// Marginals first with zero cross-correlation, then the cross parameters
/// with marginals held fixed.
pub fn two_stage_plan(variant: MaternVariant, base: &FitSpec) -> Vec<FitSpec> {
    let cross: &[&str] = match variant {
        MaternVariant::FullBivariate => &["beta", "a_cross", "nu_cross"],
        _ => &["beta"],
    };
    let marginal = FitSpec {
        mask: Mask::all_except(&[&["nugget"][..], cross].concat()),
        ..base.clone()
    };
    let crossing = FitSpec {
        mask: Mask::only(cross),
        ..base.clone()
    };
    vec![marginal, crossing]
}
