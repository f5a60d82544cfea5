//! Randomized nonnegative-definiteness check of a model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CrossCovModel;
use crate::design::SpatialDesign;
use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;

/// Relative tolerance: a trial passes when
/// `min eigenvalue >= -TOLERANCE * trace / (n p)`.
pub const TOLERANCE: f64 = 1e-8;

/// Design sizes, trials per size and seed used when constructing models.
pub const CONSTRUCTION_CHECK: (&[usize], usize, u64) = (&[5, 12, 30], 2, 0x5eed_c0de);

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub n: usize,
    pub min_eigenvalue: f64,
    pub trace: f64,
    /// `-TOLERANCE * trace / (n p)`.
    pub threshold: f64,
}

impl TrialRecord {
    pub fn passed(&self) -> bool {
        self.min_eigenvalue >= self.threshold
    }

    /// Minimum eigenvalue relative to the average diagonal entry.
    pub fn scaled_min_eigenvalue(&self, p: usize) -> f64 {
        self.min_eigenvalue / (self.trace / (self.n * p) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub p: usize,
    pub trials: Vec<TrialRecord>,
}

impl ValidityReport {
    pub fn passed(&self) -> bool {
        self.trials.iter().all(TrialRecord::passed)
    }

    /// Trial with the smallest scaled minimum eigenvalue.
    pub fn worst(&self) -> Option<&TrialRecord> {
        self.trials.iter().min_by(|a, b| {
            a.scaled_min_eigenvalue(self.p)
                .total_cmp(&b.scaled_min_eigenvalue(self.p))
        })
    }

    pub fn into_result(self) -> Result<()> {
        match self.trials.iter().find(|t| !t.passed()) {
            None => Ok(()),
            Some(t) => Err(Error::NotNonnegativeDefinite {
                min_eigenvalue: t.min_eigenvalue,
                tolerance: t.threshold,
                trial: t.trial,
                n: t.n,
            }),
        }
    }
}

/// Assembles the joint covariance on `trials` random designs of each size,
/// sites uniform on `[0, 3 L]^dim` with `L` the model's length scale, and
/// records the smallest eigenvalue of each.
pub fn validate_model(
    model: &CrossCovModel,
    design_sizes: &[usize],
    trials: usize,
    seed: u64,
) -> ValidityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extent = 3.0 * model.length_scale();
    let extent = if extent.is_finite() && extent > 0.0 { extent } else { 1.0 };
    let p = model.p();
    let mut records = Vec::new();
    for trial in 0..trials.max(1) {
        for &n in design_sizes {
            let design = SpatialDesign::random_uniform(n, model.dim(), extent, &mut rng);
            let sigma = model
                .joint_matrix(&design)
                .expect("design dimension matches the model");
            let trace = sigma.trace();
            let min = if sigma.iter().all(|v| v.is_finite()) {
                min_eigenvalue(&sigma)
            } else {
                f64::NEG_INFINITY
            };
            records.push(TrialRecord {
                trial,
                n,
                min_eigenvalue: min,
                trace,
                threshold: -TOLERANCE * trace.abs() / (n * p) as f64,
            });
        }
    }
    ValidityReport { p, trials: records }
}
