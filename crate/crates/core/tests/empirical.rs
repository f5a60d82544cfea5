use coregion::crosscov::*;
use coregion::design::{FieldSample, SpatialDesign};
use coregion::empirical::*;
use coregion::gaussian::simulate;
use coregion::linalg::min_eigenvalue;

fn model() -> CrossCovModel {
    make_multimatern(
        2,
        MultiMaternModel::bivariate_parsimonious([1.0, 0.6], [0.5, 1.5], 1.0 / 80.0, 0.5),
    )
    .unwrap()
}

#[test]
fn constant_field_gives_zero_estimates() {
    let d = SpatialDesign::grid(4, 4, 1.0);
    let s = FieldSample::new(d, 2, vec![vec![3.5; 32], vec![-1.0; 32]]).unwrap();
    let b = LagBinning::regular(1.0, 3.0);
    for est in [
        empirical_cross_cov(&s, &b, Centering::SampleMean).unwrap(),
        cross_variogram(&s, &b).unwrap(),
    ] {
        assert!(est.bins.iter().all(|bin| bin.estimate.iter().all(|v| *v == 0.0)));
    }
}

#[test]
fn two_site_hand_value() {
    let d = SpatialDesign::new(2, &[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let v = 1.7;
    let s = FieldSample::new(d, 1, vec![vec![v, -v]]).unwrap();
    let b = LagBinning::Vector { centers: vec![vec![-1.0, 0.0]], tol: 0.1 };
    let est = empirical_cross_cov(&s, &b, Centering::SampleMean).unwrap();
    assert_eq!(est.bins[0].pairs, 1);
    assert!((est.bins[0].estimate[(0, 0)] + v * v).abs() < 1e-15);
}

#[test]
fn reflected_bins_are_transposes() {
    let d = SpatialDesign::grid(5, 5, 10.0);
    let s = simulate(&asymmetrize(&model(), vec![vec![0.0, 0.0], vec![15.0, 5.0]]).unwrap(), &d, 3, 1).unwrap();
    let b = LagBinning::Sector { edges: vec![0.0, 5.0, 15.0, 25.0], sectors: 4 };
    let est = empirical_cross_cov(&s, &b, Centering::SampleMean).unwrap();
    for c in 1..3 {
        for sec in 0..4 {
            let a = &est.bins[c * 4 + sec].estimate;
            let r = &est.bins[c * 4 + (sec + 2) % 4].estimate;
            assert!((a - r.transpose()).abs().max() < 1e-12);
        }
    }
}

#[test]
fn pseudo_variogram_zero_lag_is_zero_on_diagonal() {
    let d = SpatialDesign::grid(4, 4, 20.0);
    let s = simulate(&model(), &d, 5, 2).unwrap();
    let est = pseudo_cross_variogram(&s, &LagBinning::regular(20.0, 40.0), Centering::SampleMean).unwrap();
    assert_eq!(est.bins[0].estimate[(0, 0)], 0.0);
    assert_eq!(est.bins[0].estimate[(1, 1)], 0.0);
    assert!(est.bins[0].estimate[(0, 1)] > 0.0);
}

#[test]
fn pseudo_variogram_handles_disjoint_sites() {
    let d = SpatialDesign::grid(4, 1, 1.0);
    let nan = f64::NAN;
    let s = FieldSample::new(d, 2, vec![vec![1.0, nan, nan, 2.0, 0.5, nan, nan, -1.0]]).unwrap();
    let b = LagBinning::regular(1.0, 3.0);
    let pseudo = pseudo_cross_variogram(&s, &b, Centering::PreCentered).unwrap();
    assert!(pseudo.bins[1].estimate[(0, 1)].is_finite());
    let cv = cross_variogram(&s, &b).unwrap();
    assert!(cv.bins[1].estimate[(0, 1)].is_nan());
    let all_missing = FieldSample::new(SpatialDesign::grid(2, 1, 1.0), 2, vec![vec![1.0, nan, nan, 2.0]]).unwrap();
    assert!(cross_variogram(&all_missing, &LagBinning::Distance { edges: vec![0.5, 1.5] }).is_err());
}

#[test]
fn variograms_match_model_identities() {
    let m = model();
    let d = SpatialDesign::grid(7, 7, 20.0);
    let s = simulate(&m, &d, 400, 5).unwrap();
    let b = LagBinning::Vector { centers: vec![vec![20.0, 0.0], vec![0.0, 40.0]], tol: 1.0 };
    let cv = cross_variogram(&s, &b).unwrap();
    let pv = pseudo_cross_variogram(&s, &b, Centering::PreCentered).unwrap();
    let o = [0.0, 0.0];
    for (bin, h) in [[20.0, 0.0], [0.0, 40.0]].iter().enumerate() {
        let neg = [-h[0], -h[1]];
        for i in 0..2 {
            for j in 0..2 {
                let c = |a: &[f64]| m.eval(i, j, a, &o).unwrap();
                let want = 2.0 * c(&o) - c(h) - c(&neg);
                assert!((cv.bins[bin].estimate[(i, j)] - want).abs() < 0.1, "cv ({i},{j})");
                let want = m.eval(i, i, &o, &o).unwrap() + m.eval(j, j, &o, &o).unwrap() - 2.0 * c(h);
                assert!((pv.bins[bin].estimate[(i, j)] - want).abs() < 0.15, "pseudo ({i},{j})");
            }
        }
    }
}

#[test]
fn kernel_estimator_limits_and_symmetry() {
    let d = SpatialDesign::grid(3, 3, 1.0);
    let s = center(&simulate(&model(), &d, 4, 3).unwrap());
    let (k, l) = (2, 7);
    let x = d.site(k).to_vec();
    let y = d.site(l).to_vec();
    let local = kernel_cross_cov(&s, 1e-3, &x, &y).unwrap();
    let t = s.replications() as f64;
    for i in 0..2 {
        for j in 0..2 {
            let raw: f64 = (0..4).map(|r| s.value(r, k, i) * s.value(r, l, j)).sum::<f64>() / t;
            assert!((local[(i, j)] - raw).abs() < 1e-12);
        }
    }
    let wide = kernel_cross_cov(&s, 1e6, &x, &y).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let mut g = 0.0;
            for r in 0..4 {
                for a in 0..9 {
                    for b in 0..9 {
                        g += s.value(r, a, i) * s.value(r, b, j);
                    }
                }
            }
            assert!((wide[(i, j)] - g / (81.0 * t)).abs() < 1e-9);
        }
    }
    let xy = kernel_cross_cov(&s, 0.8, &x, &y).unwrap();
    let yx = kernel_cross_cov(&s, 0.8, &y, &x).unwrap();
    assert_eq!(xy, yx.transpose());
    let far = [1e4, 1e4];
    assert!(matches!(kernel_cross_cov(&s, 1e-3, &far, &x), Err(coregion::Error::InsufficientData(_))));
}

#[test]
fn kernel_matrix_is_nonnegative_definite() {
    let d = SpatialDesign::grid(5, 5, 10.0);
    let s = center(&simulate(&model(), &d, 20, 8).unwrap());
    let targets = SpatialDesign::grid(4, 4, 12.0);
    let k = kernel_cross_cov_matrix(&s, 15.0, &targets).unwrap();
    assert_eq!(k, k.transpose());
    assert!(min_eigenvalue(&k) >= -1e-8 * k.trace());
}

#[test]
fn tidy_output_has_one_row_per_bin_and_entry() {
    let d = SpatialDesign::grid(3, 3, 1.0);
    let s = simulate(&model(), &d, 2, 1).unwrap();
    let est = empirical_cross_cov(&s, &LagBinning::regular(1.0, 2.0), Centering::SampleMean).unwrap();
    let mut out = Vec::new();
    est.write_tidy(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "bin,lag,direction,i,j,count,estimate");
    assert_eq!(lines.len(), 1 + 3 * 4);
    assert!(lines[1].starts_with("0,0.25,,0,0,18,"));
}

#[test]
fn overlapping_vector_bins_rejected() {
    let d = SpatialDesign::grid(3, 3, 1.0);
    let s = simulate(&model(), &d, 1, 1).unwrap();
    let b = LagBinning::Vector { centers: vec![vec![1.0, 0.0], vec![1.5, 0.0]], tol: 0.3 };
    assert!(empirical_cross_cov(&s, &b, Centering::SampleMean).is_err());
}
