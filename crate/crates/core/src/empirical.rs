//! Method-of-moments estimators: binned empirical cross-covariance, the
//! covariance-based and pseudo cross-variograms, and a kernel-smoothed
//! nonparametric cross-covariance.
//!
//! Cross-variograms are reported **without** the conventional factor 1/2:
//! `gamma_ij(h) = cov{Z_i(s+h) - Z_i(s), Z_j(s+h) - Z_j(s)}`, so `gamma_ii` is
//! twice the classical semivariogram.
//!
//! With several replications each estimator is computed per replication and
//! the per-replication estimates are averaged.

use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::design::{FieldSample, SpatialDesign};
use crate::error::{Error, Result};
use crate::kernels::smoothing_kernel;

/// How lag vectors `h = s_k - s_l` are grouped into bins. Ordered pairs are
/// used, so both `(k, l)` and `(l, k)` contribute, and zero-lag pairs
/// `(k, k)` fall in any bin that contains distance 0.
#[derive(Debug, Clone, PartialEq)]
pub enum LagBinning {
    /// Distance classes `[edges[b], edges[b+1])`.
    Distance { edges: Vec<f64> },
    /// Distance classes crossed with `sectors` equal angular sectors of the
    /// first two coordinates, starting at angle 0. Zero lags go to sector 0.
    Sector { edges: Vec<f64>, sectors: usize },
    /// Balls of radius `tol` around given lag vectors, for exact-lag
    /// estimation on regular designs.
    Vector { centers: Vec<Vec<f64>>, tol: f64 },
}

impl LagBinning {
    /// Distance classes centred on `0, w, 2w, ..., max_lag` with half-width `w/2`.
    pub fn regular(width: f64, max_lag: f64) -> Self {
        let nb = (max_lag / width).round() as usize + 1;
        let mut edges = vec![0.0];
        edges.extend((0..nb).map(|b| (b as f64 + 0.5) * width));
        LagBinning::Distance { edges }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let check_edges = |edges: &[f64]| {
            if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) || edges[0] < 0.0 {
                Err(Error::invalid("edges", "need at least two strictly increasing nonnegative edges"))
            } else {
                Ok(())
            }
        };
        match self {
            LagBinning::Distance { edges } => check_edges(edges),
            LagBinning::Sector { edges, sectors } => {
                check_edges(edges)?;
                if *sectors == 0 || dim < 2 {
                    return Err(Error::invalid("sectors", "need at least one sector and dimension >= 2"));
                }
                Ok(())
            }
            LagBinning::Vector { centers, tol } => {
                if centers.is_empty() || !(*tol > 0.0) {
                    return Err(Error::invalid("centers", "need lag vectors and a positive tolerance"));
                }
                for (b, c) in centers.iter().enumerate() {
                    if c.len() != dim {
                        return Err(Error::dims(format!("centers[{b}]"), dim, c.len()));
                    }
                }
                for a in 0..centers.len() {
                    for b in (a + 1)..centers.len() {
                        if crate::design::euclidean(&centers[a], &centers[b]) <= 2.0 * tol {
                            return Err(Error::invalid("tol", "lag balls overlap; bins must be disjoint"));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LagBinning::Distance { edges } => edges.len() - 1,
            LagBinning::Sector { edges, sectors } => (edges.len() - 1) * sectors,
            LagBinning::Vector { centers, .. } => centers.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn distance_class(edges: &[f64], r: f64) -> Option<usize> {
        if r < edges[0] || r >= edges[edges.len() - 1] {
            return None;
        }
        Some(edges.partition_point(|e| *e <= r) - 1)
    }

    /// Bin containing lag vector `h`, if any.
    pub fn bin_of(&self, h: &[f64]) -> Option<usize> {
        let r = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        match self {
            LagBinning::Distance { edges } => Self::distance_class(edges, r),
            LagBinning::Sector { edges, sectors } => {
                let c = Self::distance_class(edges, r)?;
                let s = if r == 0.0 {
                    0
                } else {
                    let angle = h[1].atan2(h[0]).rem_euclid(std::f64::consts::TAU);
                    ((angle / std::f64::consts::TAU * *sectors as f64) as usize).min(sectors - 1)
                };
                Some(c * sectors + s)
            }
            LagBinning::Vector { centers, tol } => centers
                .iter()
                .position(|c| crate::design::euclidean(c, h) <= *tol),
        }
    }

    /// Representative lag distance and, for directional bins, direction label.
    pub fn label(&self, b: usize) -> BinLabel {
        match self {
            LagBinning::Distance { edges } => BinLabel {
                lag: 0.5 * (edges[b] + edges[b + 1]),
                direction: None,
            },
            LagBinning::Sector { edges, sectors } => {
                let c = b / sectors;
                let s = b % sectors;
                BinLabel {
                    lag: 0.5 * (edges[c] + edges[c + 1]),
                    direction: Some((s as f64 + 0.5) * 360.0 / *sectors as f64),
                }
            }
            LagBinning::Vector { centers, .. } => BinLabel {
                lag: centers[b].iter().map(|x| x * x).sum::<f64>().sqrt(),
                direction: Some(centers[b][1].atan2(centers[b][0]).to_degrees()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinLabel {
    pub lag: f64,
    /// Degrees, counter-clockwise from the first axis.
    pub direction: Option<f64>,
}

/// Whether each replication is centred by its per-variable sample mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centering {
    #[default]
    SampleMean,
    /// Inputs are already residuals with mean zero.
    PreCentered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinEstimate {
    pub label: BinLabel,
    /// `|N(h)|`, the number of ordered site pairs in the bin.
    pub pairs: usize,
    /// Per-entry count of pairs with both values observed, summed over replications.
    pub counts: DMatrix<usize>,
    /// `p x p` estimate; `NaN` where no pair contributed.
    pub estimate: DMatrix<f64>,
}

impl BinEstimate {
    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|c| *c == 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedEstimate {
    pub p: usize,
    pub bins: Vec<BinEstimate>,
}

impl BinnedEstimate {
    /// One row per bin and `(i, j)`: `bin,lag,direction,i,j,count,estimate`.
    pub fn write_tidy<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "bin,lag,direction,i,j,count,estimate")?;
        for (b, bin) in self.bins.iter().enumerate() {
            let dir = bin.label.direction.map_or(String::new(), |d| d.to_string());
            for i in 0..self.p {
                for j in 0..self.p {
                    writeln!(
                        w,
                        "{b},{},{dir},{i},{j},{},{}",
                        bin.label.lag,
                        bin.counts[(i, j)],
                        bin.estimate[(i, j)]
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Per-variable centred copy of one replication.
fn centred(sample: &FieldSample, t: usize, centering: Centering) -> Vec<f64> {
    let p = sample.p();
    let mut z = sample.rep(t).to_vec();
    if centering == Centering::SampleMean {
        for i in 0..p {
            let vals: Vec<f64> = (0..sample.n()).map(|k| z[k * p + i]).filter(|v| !v.is_nan()).collect();
            if vals.is_empty() {
                continue;
            }
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            for k in 0..sample.n() {
                z[k * p + i] -= m;
            }
        }
    }
    z
}

/// Sample with each replication centred by its per-variable mean.
pub fn center(sample: &FieldSample) -> FieldSample {
    let reps = (0..sample.replications())
        .map(|t| centred(sample, t, Centering::SampleMean))
        .collect();
    FieldSample::new(sample.design().clone(), sample.p(), reps).expect("same shape")
}

/// Ordered pairs `(k, l)` grouped by the bin of `s_k - s_l`.
fn pairs_by_bin(design: &SpatialDesign, binning: &LagBinning) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new(); binning.len()];
    let mut h = vec![0.0; design.dim()];
    for k in 0..design.len() {
        for l in 0..design.len() {
            for (c, hc) in h.iter_mut().enumerate() {
                *hc = design.site(k)[c] - design.site(l)[c];
            }
            if let Some(b) = binning.bin_of(&h) {
                out[b].push((k, l));
            }
        }
    }
    out
}

/// Shared driver: `term(zk, zl, i, j)` gives the per-pair contribution for
/// entry `(i, j)` or `None` when it cannot be formed.
fn binned<F>(sample: &FieldSample, binning: &LagBinning, centering: Centering, term: F) -> Result<BinnedEstimate>
where
    F: Fn(&[f64], &[f64], usize, usize) -> Option<f64>,
{
    binning.validate(sample.design().dim())?;
    if sample.n() < 2 {
        return Err(Error::InsufficientData("need at least two sites".into()));
    }
    if sample.replications() == 0 {
        return Err(Error::InsufficientData("no replications".into()));
    }
    let p = sample.p();
    let pairs = pairs_by_bin(sample.design(), binning);
    let nb = binning.len();
    let mut est_sum = vec![DMatrix::<f64>::zeros(p, p); nb];
    let mut est_reps = vec![DMatrix::<usize>::zeros(p, p); nb];
    let mut counts = vec![DMatrix::<usize>::zeros(p, p); nb];
    for t in 0..sample.replications() {
        let z = centred(sample, t, centering);
        for (b, bin_pairs) in pairs.iter().enumerate() {
            for i in 0..p {
                for j in 0..p {
                    let mut s = 0.0;
                    let mut c = 0usize;
                    for &(k, l) in bin_pairs {
                        if let Some(v) = term(&z[k * p..(k + 1) * p], &z[l * p..(l + 1) * p], i, j) {
                            s += v;
                            c += 1;
                        }
                    }
                    if c > 0 {
                        est_sum[b][(i, j)] += s / c as f64;
                        est_reps[b][(i, j)] += 1;
                        counts[b][(i, j)] += c;
                    }
                }
            }
        }
    }
    let bins: Vec<BinEstimate> = (0..nb)
        .map(|b| BinEstimate {
            label: binning.label(b),
            pairs: pairs[b].len(),
            counts: counts[b].clone(),
            estimate: DMatrix::from_fn(p, p, |i, j| {
                let r = est_reps[b][(i, j)];
                if r == 0 {
                    f64::NAN
                } else {
                    est_sum[b][(i, j)] / r as f64
                }
            }),
        })
        .collect();
    if bins.iter().all(BinEstimate::is_empty) {
        return Err(Error::InsufficientData(
            "no usable site pairs in any bin (check bin edges and missing values)".into(),
        ));
    }
    Ok(BinnedEstimate { p, bins })
}

/// `C_hat(h) = |N(h)|^{-1} sum_{(k,l) in N(h)} (Z(s_k) - Zbar)(Z(s_l) - Zbar)^T`.
pub fn empirical_cross_cov(sample: &FieldSample, binning: &LagBinning, centering: Centering) -> Result<BinnedEstimate> {
    binned(sample, binning, centering, |zk, zl, i, j| {
        let v = zk[i] * zl[j];
        (!v.is_nan()).then_some(v)
    })
}

/// Covariance-based cross-variogram (no 1/2 factor): mean of
/// `(Z_i(s_k) - Z_i(s_l)) (Z_j(s_k) - Z_j(s_l))` over pairs where both
/// variables are observed at both sites.
pub fn cross_variogram(sample: &FieldSample, binning: &LagBinning) -> Result<BinnedEstimate> {
    binned(sample, binning, Centering::PreCentered, |zk, zl, i, j| {
        let v = (zk[i] - zl[i]) * (zk[j] - zl[j]);
        (!v.is_nan()).then_some(v)
    })
}

/// Pseudo cross-variogram: mean of `(Z_i(s_k) - Z_j(s_l))^2` over pairs
/// after centring; variables need not be co-located.
pub fn pseudo_cross_variogram(sample: &FieldSample, binning: &LagBinning, centering: Centering) -> Result<BinnedEstimate> {
    binned(sample, binning, centering, |zk, zl, i, j| {
        let d = zk[i] - zl[j];
        (!d.is_nan()).then_some(d * d)
    })
}

/// Kernel-weighted means `m_x,i = sum_k K(|x - s_k|) Z_i(s_k) / sum_k K(|x - s_k|)`
/// per replication, over observed values.
fn kernel_means(sample: &FieldSample, lambda: f64, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let p = sample.p();
    let design = sample.design();
    let weights: Vec<f64> = design
        .sites()
        .map(|s| smoothing_kernel(crate::design::euclidean(x, s), lambda))
        .collect::<Result<_>>()?;
    (0..sample.replications())
        .map(|t| {
            (0..p)
                .map(|i| {
                    let (mut num, mut den) = (0.0, 0.0);
                    for (k, w) in weights.iter().enumerate() {
                        let z = sample.value(t, k, i);
                        if !z.is_nan() {
                            num += w * z;
                            den += w;
                        }
                    }
                    if den > 0.0 {
                        Ok(num / den)
                    } else {
                        Err(Error::InsufficientData(format!(
                            "zero total kernel weight for variable {i} at {x:?}; increase the bandwidth"
                        )))
                    }
                })
                .collect()
        })
        .collect()
}

/// Kernel-smoothed cross-covariance between locations `x` and `y`:
/// products `Z_i(s_k) Z_j(s_l)` weighted by `K_lambda(|x - s_k|) K_lambda(|y - s_l|)`,
/// normalized by the weight sum and averaged over replications. Expects
/// mean-zero input (see [`center`]).
pub fn kernel_cross_cov(sample: &FieldSample, lambda: f64, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let dim = sample.design().dim();
    for s in [x, y] {
        if s.len() != dim {
            return Err(Error::dims("location", dim, s.len()));
        }
    }
    if sample.replications() == 0 {
        return Err(Error::InsufficientData("no replications".into()));
    }
    let mx = kernel_means(sample, lambda, x)?;
    let my = kernel_means(sample, lambda, y)?;
    let p = sample.p();
    let t = sample.replications() as f64;
    Ok(DMatrix::from_fn(p, p, |i, j| {
        mx.iter().zip(&my).map(|(a, b)| a[i] * b[j]).sum::<f64>() / t
    }))
}

/// Joint `np x np` kernel estimate over the sites of `targets`
/// (site-major, variable-minor).
pub fn kernel_cross_cov_matrix(sample: &FieldSample, lambda: f64, targets: &SpatialDesign) -> Result<DMatrix<f64>> {
    if targets.dim() != sample.design().dim() {
        return Err(Error::dims("target dimension", sample.design().dim(), targets.dim()));
    }
    let p = sample.p();
    let means: Vec<Vec<Vec<f64>>> = targets
        .sites()
        .map(|x| kernel_means(sample, lambda, x))
        .collect::<Result<_>>()?;
    let n = targets.len();
    let t = sample.replications().max(1) as f64;
    Ok(DMatrix::from_fn(n * p, n * p, |r, c| {
        let (k, i) = (r / p, r % p);
        let (l, j) = (c / p, c % p);
        means[k].iter().zip(&means[l]).map(|(a, b)| a[i] * b[j]).sum::<f64>() / t
    }))
}
