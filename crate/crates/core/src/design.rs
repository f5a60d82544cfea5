//! Site designs and replicated multivariate field samples.
//!
//! Every joint vector in this crate uses site-major, variable-minor ordering:
//! entry `k * p + i` holds variable `i` at site `k`.

use rand::Rng;

use crate::error::{Error, Result};

/// Ordered list of sites in `R^dim`. For space–time models the last
/// coordinate is time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDesign {
    dim: usize,
    coords: Vec<f64>,
}

impl SpatialDesign {
    pub fn new(dim: usize, sites: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        let mut coords = Vec::with_capacity(dim * sites.len());
        for (k, s) in sites.iter().enumerate() {
            if s.len() != dim {
                return Err(Error::dims(format!("coordinates of site {k}"), dim, s.len()));
            }
            if s.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid(format!("site {k}"), "non-finite coordinate"));
            }
            coords.extend_from_slice(s);
        }
        Ok(Self { dim, coords })
    }

    /// Regular 2-D grid of `nx * ny` sites with the given spacing, x varying fastest.
    pub fn grid(nx: usize, ny: usize, spacing: f64) -> Self {
        let mut coords = Vec::with_capacity(2 * nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                coords.push(ix as f64 * spacing);
                coords.push(iy as f64 * spacing);
            }
        }
        Self { dim: 2, coords }
    }

    /// `n` sites drawn uniformly from `[0, extent]^dim`.
    pub fn random_uniform<R: Rng + ?Sized>(n: usize, dim: usize, extent: f64, rng: &mut R) -> Self {
        let coords = (0..n * dim).map(|_| rng.random::<f64>() * extent).collect();
        Self { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn site(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn sites(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn distance(&self, k: usize, l: usize) -> f64 {
        euclidean(self.site(k), self.site(l))
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for k in 0..n {
            for l in (k + 1)..n {
                best = best.max(self.distance(k, l));
            }
        }
        best
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &k in indices {
            coords.extend_from_slice(self.site(k));
        }
        Self {
            dim: self.dim,
            coords,
        }
    }

    /// Index of the first site with exactly these coordinates.
    pub fn position(&self, s: &[f64]) -> Option<usize> {
        self.sites().position(|t| t == s)
    }
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `T` replications of a `p`-variate field on a [`SpatialDesign`].
///
/// Missing observations are stored as `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    design: SpatialDesign,
    p: usize,
    reps: Vec<Vec<f64>>,
}

impl FieldSample {
    pub fn new(design: SpatialDesign, p: usize, reps: Vec<Vec<f64>>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p", "at least one variable required"));
        }
        let np = design.len() * p;
        for (t, r) in reps.iter().enumerate() {
            if r.len() != np {
                return Err(Error::dims(format!("replication {t}"), np, r.len()));
            }
            if r.iter().any(|v| v.is_infinite()) {
                return Err(Error::invalid(format!("replication {t}"), "infinite value"));
            }
        }
        Ok(Self { design, p, reps })
    }

    pub fn design(&self) -> &SpatialDesign {
        &self.design
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.design.len()
    }

    pub fn replications(&self) -> usize {
        self.reps.len()
    }

    pub fn rep(&self, t: usize) -> &[f64] {
        &self.reps[t]
    }

    pub fn reps(&self) -> &[Vec<f64>] {
        &self.reps
    }

    #[inline]
    pub fn value(&self, t: usize, k: usize, i: usize) -> f64 {
        self.reps[t][k * self.p + i]
    }

    pub fn is_complete(&self) -> bool {
        self.reps.iter().all(|r| r.iter().all(|v| !v.is_nan()))
    }

    /// Restrict to the given sites (in the given order).
    pub fn subset_sites(&self, indices: &[usize]) -> Self {
        let design = self.design.subset(indices);
        let reps = self
            .reps
            .iter()
            .map(|r| {
                indices
                    .iter()
                    .flat_map(|&k| r[k * self.p..(k + 1) * self.p].iter().copied())
                    .collect()
            })
            .collect();
        Self {
            design,
            p: self.p,
            reps,
        }
    }

    /// Restrict to the given variables (in the given order).
    pub fn select_variables(&self, vars: &[usize]) -> Result<Self> {
        for &i in vars {
            if i >= self.p {
                return Err(Error::IndexOutOfRange { index: i, p: self.p });
            }
        }
        let n = self.n();
        let reps = self
            .reps
            .iter()
            .map(|r| {
                (0..n)
                    .flat_map(|k| vars.iter().map(move |&i| r[k * self.p + i]))
                    .collect()
            })
            .collect();
        FieldSample::new(self.design.clone(), vars.len(), reps)
    }

    /// Per-variable sample variance pooled over sites and replications.
    pub fn variances(&self) -> Vec<f64> {
        (0..self.p)
            .map(|i| {
                let vals: Vec<f64> = self
                    .reps
                    .iter()
                    .flat_map(|r| (0..self.n()).map(move |k| r[k * self.p + i]))
                    .filter(|v| !v.is_nan())
                    .collect();
                let m = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
                vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len().max(1) as f64
            })
            .collect()
    }

    /// Pooled collocated correlation between variables `i` and `j`.
    pub fn collocated_correlation(&self, i: usize, j: usize) -> f64 {
        let pairs: Vec<(f64, f64)> = self
            .reps
            .iter()
            .flat_map(|r| (0..self.n()).map(move |k| (r[k * self.p + i], r[k * self.p + j])))
            .filter(|(a, b)| !a.is_nan() && !b.is_nan())
            .collect();
        let m = pairs.len() as f64;
        if m < 2.0 {
            return 0.0;
        }
        let (ma, mb) = pairs
            .iter()
            .fold((0.0, 0.0), |(x, y), (a, b)| (x + a / m, y + b / m));
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (a, b) in &pairs {
            sab += (a - ma) * (b - mb);
            saa += (a - ma) * (a - ma);
            sbb += (b - mb) * (b - mb);
        }
        if saa == 0.0 || sbb == 0.0 {
            0.0
        } else {
            sab / (saa * sbb).sqrt()
        }
    }
}
