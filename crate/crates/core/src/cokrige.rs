//! Simple (zero-mean) co-kriging with predictive variances, Gaussian CRPS and
//! RMSE scoring, and a random hold-out cross-validation harness.

use std::io::{self, Write};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;

use crate::crosscov::CrossCovModel;
use crate::design::{FieldSample, SpatialDesign};
use crate::error::{Error, Result};
use crate::gaussian::{factorize_matrix, JitterPolicy};

/// Which quantity is predicted when the model has nuggets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Target {
    /// The noisy observable: the prior variance includes the nugget.
    #[default]
    Observable,
    /// The smooth latent process: the nugget is excluded.
    Latent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    pub targets: SpatialDesign,
    pub p: usize,
    /// Per replication, `n_targets * p` predictive means (site-major).
    pub mean: Vec<Vec<f64>>,
    /// Per replication, predictive variances in the same layout.
    pub variance: Vec<Vec<f64>>,
    /// Largest diagonal jitter needed to factorize the observation covariance.
    pub jitter: f64,
}

impl PredictionResult {
    /// Per-variable RMSE and mean CRPS against `truth` (same layout as `mean`);
    /// `NaN` truth values are skipped.
    pub fn scores(&self, truth: &[Vec<f64>]) -> Result<Vec<VarScore>> {
        if truth.len() != self.mean.len() {
            return Err(Error::dims("truth replications", self.mean.len(), truth.len()));
        }
        let mut acc = vec![(0.0, 0.0, 0usize); self.p];
        for (t, row) in truth.iter().enumerate() {
            if row.len() != self.mean[t].len() {
                return Err(Error::dims("truth values", self.mean[t].len(), row.len()));
            }
            for (q, y) in row.iter().enumerate() {
                if y.is_nan() {
                    continue;
                }
                let (mu, var) = (self.mean[t][q], self.variance[t][q]);
                let a = &mut acc[q % self.p];
                a.0 += (y - mu) * (y - mu);
                a.1 += crps_gaussian(mu, var.sqrt(), *y)?;
                a.2 += 1;
            }
        }
        Ok(acc
            .into_iter()
            .map(|(se, crps, n)| VarScore {
                rmse: (se / n as f64).sqrt(),
                crps: crps / n as f64,
                count: n,
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarScore {
    pub rmse: f64,
    pub crps: f64,
    /// Number of scored values.
    pub count: usize,
}

/// `C_ij(s1, s2)` without the nugget term.
fn cov_no_nugget(model: &CrossCovModel, i: usize, j: usize, s1: &[f64], s2: &[f64]) -> f64 {
    let c = model.eval_unchecked(i, j, s1, s2);
    if i == j && s1 == s2 {
        c - model.nugget(i, s1)
    } else {
        c
    }
}

/// Predicts every variable at every target site from the observations, one
/// replication at a time. Observation and target noise are independent, so
/// target–observation covariances never include the nugget.
pub fn cokrige(
    model: &CrossCovModel,
    observations: &FieldSample,
    targets: &SpatialDesign,
    target: Target,
) -> Result<PredictionResult> {
    let p = model.p();
    if observations.p() != p {
        return Err(Error::dims("variables in observations", p, observations.p()));
    }
    let obs_design = observations.design();
    for d in [obs_design, targets] {
        if d.dim() != model.dim() {
            return Err(Error::dims("design dimension", model.dim(), d.dim()));
        }
    }
    let n0 = targets.len();
    let sigma = model.joint_matrix(obs_design)?;
    let cross = DMatrix::from_fn(obs_design.len() * p, n0 * p, |r, c| {
        cov_no_nugget(model, r % p, c % p, obs_design.site(r / p), targets.site(c / p))
    });
    let prior: Vec<f64> = (0..n0 * p)
        .map(|c| {
            let (k, i) = (c / p, c % p);
            let s = targets.site(k);
            match target {
                Target::Observable => model.eval_unchecked(i, i, s, s),
                Target::Latent => cov_no_nugget(model, i, i, s, s),
            }
        })
        .collect();
    // observed site matching each target, for exact interpolation
    let coincident: Vec<Option<usize>> = targets.sites().map(|s| obs_design.position(s)).collect();

    let t_count = observations.replications();
    let mut mean = vec![vec![0.0; n0 * p]; t_count];
    let mut variance = vec![vec![0.0; n0 * p]; t_count];
    let mut jitter = 0.0f64;

    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for t in 0..t_count {
        let observed: Vec<usize> = (0..obs_design.len() * p)
            .filter(|&q| !observations.rep(t)[q].is_nan())
            .collect();
        match groups.iter_mut().find(|(o, _)| *o == observed) {
            Some((_, ts)) => ts.push(t),
            None => groups.push((observed, vec![t])),
        }
    }

    for (observed, ts) in &groups {
        let m = observed.len();
        let (mu_all, var_all) = if m == 0 {
            (DMatrix::zeros(n0 * p, ts.len()), prior.clone())
        } else {
            let sub = sigma.select_rows(observed).select_columns(observed);
            let f = factorize_matrix(&sub, &JitterPolicy::default())?;
            jitter = jitter.max(f.jitter);
            let k = cross.select_rows(observed);
            let w = f.whiten(&k);
            let z = DMatrix::from_fn(m, ts.len(), |r, c| observations.rep(ts[c])[observed[r]]);
            let alpha = f.solve(&z);
            let mu = k.transpose() * alpha;
            let var: Vec<f64> = (0..n0 * p)
                .map(|c| (prior[c] - w.column(c).norm_squared()).max(0.0))
                .collect();
            (mu, var)
        };
        for (c_idx, &t) in ts.iter().enumerate() {
            for q in 0..n0 * p {
                let (k, i) = (q / p, q % p);
                let exact = coincident[k].and_then(|l| {
                    let v = observations.rep(t)[l * p + i];
                    (!v.is_nan() && model.nugget(i, targets.site(k)) == 0.0).then_some(v)
                });
                match exact {
                    Some(v) => {
                        mean[t][q] = v;
                        variance[t][q] = 0.0;
                    }
                    None => {
                        mean[t][q] = mu_all[(q, c_idx)];
                        variance[t][q] = var_all[q];
                    }
                }
            }
        }
    }
    Ok(PredictionResult {
        targets: targets.clone(),
        p,
        mean,
        variance,
        jitter,
    })
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// CRPS of `N(mu, sigma^2)` at `y`:
/// `sigma [z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi)]`, `z = (y - mu)/sigma`.
pub fn crps_gaussian(mu: f64, sigma: f64, y: f64) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!("predictive standard deviation must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok((y - mu).abs());
    }
    let z = (y - mu) / sigma;
    let v = sigma
        * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z)
            - 1.0 / std::f64::consts::PI.sqrt());
    Ok(v.max(0.0))
}

/// Predicts the values at `heldout` sites from the `retained` sites, for
/// every replication, and scores them per variable.
pub fn holdout_score(
    model: &CrossCovModel,
    sample: &FieldSample,
    retained: &[usize],
    heldout: &[usize],
    target: Target,
) -> Result<Vec<VarScore>> {
    if retained.is_empty() {
        return Err(Error::InsufficientData("no retained sites".into()));
    }
    if heldout.is_empty() {
        return Err(Error::InsufficientData("no held-out sites".into()));
    }
    let train = sample.subset_sites(retained);
    let test = sample.subset_sites(heldout);
    let pred = cokrige(model, &train, test.design(), target)?;
    pred.scores(test.reps())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    /// Fraction of sites held out in each repeat, in `(0, 1)`.
    pub holdout_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    pub target: Target,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            holdout_fraction: 0.25,
            repeats: 10,
            seed: 0,
            target: Target::Observable,
        }
    }
}

/// Held-out site indices for repeat `r`; depends only on `n`, the fraction
/// and the seed.
pub fn holdout_split(n: usize, fraction: f64, seed: u64, r: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid("holdout_fraction", format!("must lie in (0, 1), got {fraction}")));
    }
    let h = ((fraction * n as f64).round() as usize).max(1);
    if h >= n {
        return Err(Error::InsufficientData(format!(
            "holding out {h} of {n} sites leaves nothing to predict from"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut heldout = idx[..h].to_vec();
    let mut retained = idx[h..].to_vec();
    heldout.sort_unstable();
    retained.sort_unstable();
    Ok((retained, heldout))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvScores {
    pub config: CvConfig,
    /// `[repeat][variable]`.
    pub per_repeat: Vec<Vec<VarScore>>,
}

impl CvScores {
    /// Per-variable scores averaged over repeats.
    pub fn mean(&self) -> Vec<VarScore> {
        let p = self.per_repeat.first().map_or(0, Vec::len);
        let r = self.per_repeat.len() as f64;
        (0..p)
            .map(|i| VarScore {
                rmse: self.per_repeat.iter().map(|s| s[i].rmse).sum::<f64>() / r,
                crps: self.per_repeat.iter().map(|s| s[i].crps).sum::<f64>() / r,
                count: self.per_repeat.iter().map(|s| s[i].count).sum(),
            })
            .collect()
    }

    /// Score table with columns `model,variable,rmse,crps,repeats,seed`.
    pub fn write_tidy<W: Write>(&self, model_name: &str, mut w: W, header: bool) -> io::Result<()> {
        if header {
            writeln!(w, "model,variable,rmse,crps,repeats,seed")?;
        }
        for (i, s) in self.mean().iter().enumerate() {
            writeln!(
                w,
                "{model_name},{i},{},{},{},{}",
                s.rmse,
                s.crps,
                self.per_repeat.len(),
                self.config.seed
            )?;
        }
        Ok(())
    }
}

/// Repeated random hold-out co-kriging with a fixed model (parameters
/// estimated beforehand on the full data). The same sites are held out in
/// every replication.
pub fn cross_validate(model: &CrossCovModel, sample: &FieldSample, config: &CvConfig) -> Result<CvScores> {
    if config.repeats == 0 {
        return Err(Error::invalid("repeats", "must be at least 1"));
    }
    let per_repeat = (0..config.repeats)
        .map(|r| {
            let (retained, heldout) = holdout_split(sample.n(), config.holdout_fraction, config.seed, r)?;
            holdout_score(model, sample, &retained, &heldout, config.target)
        })
        .collect::<Result<_>>()?;
    Ok(CvScores {
        config: config.clone(),
        per_repeat,
    })
}
