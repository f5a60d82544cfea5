//! Joint covariance assembly, Cholesky factorization with explicit jitter,
//! exact simulation and the zero-mean Gaussian log-likelihood of independent
//! replications.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::crosscov::CrossCovModel;
use crate::design::{FieldSample, SpatialDesign};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_lower, logdet_from_cholesky};

/// Tag written into binary dumps to identify the joint-vector ordering.
pub const ORDERING_TAG: &[u8; 16] = b"site-major/var  ";

/// Diagonal jitter levels tried in order, each relative to the mean diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct JitterPolicy {
    pub levels: Vec<f64>,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self {
            levels: vec![0.0, 1e-10, 1e-8, 1e-6],
        }
    }
}

impl JitterPolicy {
    /// Only exact or nearly exact factorization; used by the likelihood so
    /// that indefinite models are rejected instead of regularized.
    pub fn strict() -> Self {
        Self {
            levels: vec![0.0, 1e-10],
        }
    }

    pub fn none() -> Self {
        Self { levels: vec![0.0] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    /// Lower factor with `L L^T = Sigma + jitter I`.
    pub l: DMatrix<f64>,
    pub logdet: f64,
    /// Absolute jitter added to the diagonal.
    pub jitter: f64,
}

impl Factor {
    /// `L^{-1} b` for every column of `b`.
    pub fn whiten(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.l
            .solve_lower_triangular(b)
            .expect("factor has a positive diagonal")
    }

    /// `Sigma^{-1} b`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = self.whiten(b);
        self.l.tr_solve_lower_triangular_mut(&mut x);
        x
    }
}

/// The `np x np` joint covariance of a model on a design.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCovariance {
    pub design: SpatialDesign,
    pub p: usize,
    pub sigma: DMatrix<f64>,
    pub factor: Option<Factor>,
}

impl JointCovariance {
    pub fn n(&self) -> usize {
        self.design.len()
    }

    /// Row/column of variable `i` at site `k`.
    pub fn index(&self, k: usize, i: usize) -> usize {
        k * self.p + i
    }

    /// Factorizes (once) and returns the factor.
    pub fn factorize(&mut self, policy: &JitterPolicy) -> Result<&Factor> {
        if self.factor.is_none() {
            self.factor = Some(factorize_matrix(&self.sigma, policy)?);
        }
        Ok(self.factor.as_ref().expect("just set"))
    }

    /// Binary dump: magic, `n`, `p` (u64 LE), ordering tag, a flag byte for
    /// the factor, then `Sigma` and optionally `L`, row-major f64 LE.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"COREGSIG")?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&(self.p as u64).to_le_bytes())?;
        w.write_all(ORDERING_TAG)?;
        w.write_all(&[u8::from(self.factor.is_some())])?;
        write_row_major(&mut w, &self.sigma)?;
        if let Some(f) = &self.factor {
            write_row_major(&mut w, &f.l)?;
        }
        Ok(())
    }
}

fn write_row_major<W: Write>(w: &mut W, m: &DMatrix<f64>) -> io::Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            w.write_all(&m[(r, c)].to_le_bytes())?;
        }
    }
    Ok(())
}

/// `Sigma[(k,i),(l,j)] = C_ij(s_k, s_l)`.
pub fn assemble_sigma(model: &CrossCovModel, design: &SpatialDesign) -> Result<JointCovariance> {
    let sigma = model.joint_matrix(design)?;
    Ok(JointCovariance {
        design: design.clone(),
        p: model.p(),
        sigma,
        factor: None,
    })
}

/// Cholesky factor of `jc.sigma`, escalating the jitter through `policy`.
pub fn factorize(jc: &JointCovariance, policy: &JitterPolicy) -> Result<Factor> {
    factorize_matrix(&jc.sigma, policy)
}

pub fn factorize_matrix(sigma: &DMatrix<f64>, policy: &JitterPolicy) -> Result<Factor> {
    let n = sigma.nrows();
    let mean_diag = if n == 0 { 0.0 } else { sigma.trace() / n as f64 };
    let mut last = (0, 0.0);
    for &level in &policy.levels {
        let jitter = level * mean_diag.abs();
        match cholesky_lower(sigma, jitter) {
            Ok(l) => {
                let logdet = logdet_from_cholesky(&l);
                return Ok(Factor { l, logdet, jitter });
            }
            Err(pivot) => {
                log::debug!("cholesky failed at pivot {pivot} with jitter {jitter:.3e}");
                last = (pivot, jitter);
            }
        }
    }
    Err(Error::Factorization {
        pivot: last.0,
        jitter: last.1,
    })
}

/// `t` independent draws `L w`, `w ~ N(0, I)`, from a seeded ChaCha stream.
/// Draws are generated replication by replication, site-major.
pub fn simulate(
    model: &CrossCovModel,
    design: &SpatialDesign,
    t: usize,
    seed: u64,
) -> Result<FieldSample> {
    let mut jc = assemble_sigma(model, design)?;
    let np = jc.sigma.nrows();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut w = DMatrix::zeros(np, t);
    for c in 0..t {
        for r in 0..np {
            w[(r, c)] = StandardNormal.sample(&mut rng);
        }
    }
    let z = if jc.sigma.iter().all(|v| *v == 0.0) {
        DMatrix::zeros(np, t)
    } else {
        let f = jc.factorize(&JitterPolicy::default())?;
        &f.l * w
    };
    let reps = (0..t).map(|c| z.column(c).iter().copied().collect()).collect();
    FieldSample::new(design.clone(), model.p(), reps)
}

/// Log-likelihood with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLik {
    /// `-inf` when the covariance could not be factorized.
    pub value: f64,
    /// Largest jitter used over all missing-data patterns.
    pub jitter: f64,
    pub diagnostic: Option<String>,
}

impl LogLik {
    fn failed(msg: String) -> Self {
        Self {
            value: f64::NEG_INFINITY,
            jitter: 0.0,
            diagnostic: Some(msg),
        }
    }
}

/// Zero-mean Gaussian log-likelihood of the replications in `sample`,
/// `-T/2 (np log 2 pi + log det Sigma) - 1/2 sum_t z_t^T Sigma^{-1} z_t`.
/// Missing (`NaN`) entries are marginalized out by restricting `Sigma`.
/// Returns `-inf` if the model cannot be evaluated on the sample.
pub fn loglik(model: &CrossCovModel, sample: &FieldSample) -> f64 {
    loglik_detailed(model, sample, &JitterPolicy::strict()).value
}

pub fn loglik_detailed(model: &CrossCovModel, sample: &FieldSample, policy: &JitterPolicy) -> LogLik {
    if model.p() != sample.p() {
        return LogLik::failed(format!(
            "model has {} variables, sample has {}",
            model.p(),
            sample.p()
        ));
    }
    let sigma = match model.joint_matrix(sample.design()) {
        Ok(s) => s,
        Err(e) => return LogLik::failed(e.to_string()),
    };
    loglik_from_sigma(&sigma, sample.reps(), policy)
}

/// Log-likelihood of replications `reps` (with `NaN` for missing values)
/// under the joint covariance `sigma`.
pub fn loglik_from_sigma(sigma: &DMatrix<f64>, reps: &[Vec<f64>], policy: &JitterPolicy) -> LogLik {
    if sigma.iter().any(|v| !v.is_finite()) {
        return LogLik::failed("covariance has non-finite entries".into());
    }
    // group replications by missingness pattern
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for (t, r) in reps.iter().enumerate() {
        let observed: Vec<usize> = (0..r.len()).filter(|&q| !r[q].is_nan()).collect();
        match groups.iter_mut().find(|(o, _)| *o == observed) {
            Some((_, ts)) => ts.push(t),
            None => groups.push((observed, vec![t])),
        }
    }
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let mut total = 0.0;
    let mut max_jitter = 0.0f64;
    for (observed, ts) in &groups {
        let m = observed.len();
        if m == 0 {
            continue;
        }
        let sub = if m == sigma.nrows() {
            sigma.clone()
        } else {
            sigma.select_rows(observed).select_columns(observed)
        };
        let f = match factorize_matrix(&sub, policy) {
            Ok(f) => f,
            Err(e) => return LogLik::failed(e.to_string()),
        };
        max_jitter = max_jitter.max(f.jitter);
        let z = DMatrix::from_fn(m, ts.len(), |r, c| reps[ts[c]][observed[r]]);
        let w = f.whiten(&z);
        let quad = w.norm_squared();
        total += -0.5 * ts.len() as f64 * (m as f64 * ln2pi + f.logdet) - 0.5 * quad;
    }
    if !total.is_finite() {
        return LogLik::failed("log-likelihood is not finite".into());
    }
    LogLik {
        value: total,
        jitter: max_jitter,
        diagnostic: None,
    }
}

/// Solves `Sigma x = b` for a single vector through the factor.
pub fn solve_vector(f: &Factor, b: &DVector<f64>) -> DVector<f64> {
    crate::linalg::cholesky_solve(&f.l, b)
}
