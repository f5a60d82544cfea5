use coregion::cokrige::*;
use coregion::crosscov::*;
use coregion::design::{FieldSample, SpatialDesign};
use coregion::gaussian::simulate;
use coregion::kernels::{Correlation, MaternParams};
use proptest::prelude::*;

fn parsimonious() -> CrossCovModel {
    make_multimatern(
        2,
        MultiMaternModel::bivariate_parsimonious([1.2, 0.5], [1.5, 0.5], 1.0 / 60.0, -0.6),
    )
    .unwrap()
}

fn sample(seed: u64) -> FieldSample {
    simulate(&parsimonious(), &SpatialDesign::grid(5, 4, 25.0), 3, seed).unwrap()
}

#[test]
fn observed_sites_are_reproduced_exactly() {
    let s = sample(1);
    let pred = cokrige(&parsimonious(), &s, s.design(), Target::Observable).unwrap();
    assert_eq!(&pred.mean, s.reps());
    assert!(pred.variance.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn near_coincident_targets_approach_observations() {
    let s = sample(2);
    let shifted: Vec<Vec<f64>> = s.design().sites().map(|x| vec![x[0] + 1e-6, x[1]]).collect();
    let targets = SpatialDesign::new(2, &shifted).unwrap();
    let pred = cokrige(&parsimonious(), &s, &targets, Target::Observable).unwrap();
    for t in 0..3 {
        for q in 0..40 {
            assert!((pred.mean[t][q] - s.rep(t)[q]).abs() < 1e-3, "t={t} q={q}");
            assert!(pred.variance[t][q] < 1e-3);
        }
    }
}

#[test]
fn block_diagonal_model_matches_per_variable_kriging() {
    let m = make_multimatern(2, MultiMaternModel::independent(vec![1.0, 0.4], vec![0.5, 1.5], vec![0.02, 0.05])).unwrap();
    let s = simulate(&m, &SpatialDesign::grid(4, 4, 20.0), 2, 3).unwrap();
    let targets = SpatialDesign::new(2, &[vec![7.0, 13.0], vec![41.0, 2.0]]).unwrap();
    let joint = cokrige(&m, &s, &targets, Target::Observable).unwrap();
    for (i, sigma, nu, a) in [(0, 1.0, 0.5, 0.02), (1, 0.4, 1.5, 0.05)] {
        let mi = make_multimatern(2, MultiMaternModel::independent(vec![sigma], vec![nu], vec![a])).unwrap();
        let single = cokrige(&mi, &s.select_variables(&[i]).unwrap(), &targets, Target::Observable).unwrap();
        for t in 0..2 {
            for k in 0..2 {
                assert!((joint.mean[t][k * 2 + i] - single.mean[t][k]).abs() < 1e-10);
                assert!((joint.variance[t][k * 2 + i] - single.variance[t][k]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn separable_single_observation_closed_form() {
    let (s1, s2, rho) = (2.0, 0.5, 0.7);
    let r = vec![vec![s1 * s1, rho * s1 * s2], vec![rho * s1 * s2, s2 * s2]];
    let m = make_separable(2, Correlation::Matern(MaternParams { nu: 0.5, a: 1.0 }), r).unwrap();
    let d = SpatialDesign::new(2, &[vec![0.0, 0.0]]).unwrap();
    let z2 = 0.9;
    let obs = FieldSample::new(d.clone(), 2, vec![vec![f64::NAN, z2]]).unwrap();
    let pred = cokrige(&m, &obs, &d, Target::Observable).unwrap();
    assert!((pred.mean[0][0] - rho * s1 / s2 * z2).abs() < 1e-12);
    assert!((pred.variance[0][0] - s1 * s1 * (1.0 - rho * rho)).abs() < 1e-12);
    assert_eq!(pred.mean[0][1], z2);
}

#[test]
fn nugget_target_modes() {
    let base = MultiMaternModel::bivariate_parsimonious([1.0, 1.0], [0.5, 0.5], 0.05, 0.3).with_nuggets(vec![0.2, 0.1]);
    let m = make_multimatern(2, base).unwrap();
    let s = simulate(&m, &SpatialDesign::grid(3, 3, 10.0), 1, 4).unwrap();
    let far = SpatialDesign::new(2, &[vec![1e5, 1e5]]).unwrap();
    let obs = cokrige(&m, &s, &far, Target::Observable).unwrap();
    let lat = cokrige(&m, &s, &far, Target::Latent).unwrap();
    assert!((obs.variance[0][0] - 1.2).abs() < 1e-9);
    assert!((lat.variance[0][0] - 1.0).abs() < 1e-9);
    // with a nugget, observed sites are smoothed rather than interpolated
    let at = cokrige(&m, &s, s.design(), Target::Latent).unwrap();
    assert!(at.variance[0].iter().all(|v| *v > 0.0));
}

#[test]
fn crps_reference_values() {
    assert_eq!(crps_gaussian(1.0, 0.0, 1.0).unwrap(), 0.0);
    assert_eq!(crps_gaussian(0.0, 0.0, 2.0).unwrap(), 2.0);
    assert!((crps_gaussian(0.0, 1.0, 0.0).unwrap() - 0.233_694_977_255_109).abs() < 1e-12);
    assert!(crps_gaussian(0.0, -1.0, 0.0).is_err());
}

proptest! {
    #[test]
    fn crps_translation_and_scale(mu in -5.0..5.0f64, sigma in 0.01..5.0f64, y in -5.0..5.0f64, c in -10.0..10.0f64, k in 0.1..10.0f64) {
        let base = crps_gaussian(mu, sigma, y).unwrap();
        prop_assert!(base >= 0.0);
        let moved = crps_gaussian(mu + c, sigma, y + c).unwrap();
        prop_assert!((base - moved).abs() <= 1e-9 * (1.0 + base));
        let scaled = crps_gaussian(k * mu, k * sigma, k * y).unwrap();
        prop_assert!((scaled - k * base).abs() <= 1e-9 * (1.0 + k * base));
        prop_assert!(base >= (y - mu).abs() - sigma * (2.0 / std::f64::consts::PI).sqrt() - 1e-12);
    }
}

#[test]
fn predictive_variance_is_bounded_by_prior() {
    let m = parsimonious();
    let s = sample(5);
    let targets = SpatialDesign::new(2, &[vec![12.0, 12.0], vec![300.0, 0.0], vec![60.0, 40.0]]).unwrap();
    let pred = cokrige(&m, &s, &targets, Target::Observable).unwrap();
    for (q, v) in pred.variance[0].iter().enumerate() {
        let i = q % 2;
        let prior = m.eval(i, i, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(*v >= 0.0 && *v <= prior + 1e-12);
    }
}

#[test]
fn cross_validation_is_deterministic() {
    let s = sample(6);
    let cfg = CvConfig::default();
    let a = cross_validate(&parsimonious(), &s, &cfg).unwrap();
    let b = cross_validate(&parsimonious(), &s, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.per_repeat.len(), 10);
    let (r0, h0) = holdout_split(20, 0.25, 0, 0).unwrap();
    assert_eq!(h0.len(), 5);
    assert_eq!(r0.len() + h0.len(), 20);
    assert_ne!(holdout_split(20, 0.25, 0, 1).unwrap().1, h0);
    let mut out = Vec::new();
    a.write_tidy("pars", &mut out, true).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next(), Some("model,variable,rmse,crps,repeats,seed"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn degenerate_splits_are_rejected() {
    assert!(holdout_split(10, 0.0, 0, 0).is_err());
    assert!(holdout_split(10, 1.0, 0, 0).is_err());
    assert!(holdout_split(1, 0.5, 0, 0).is_err());
    let s = sample(7);
    let cfg = CvConfig { repeats: 0, ..CvConfig::default() };
    assert!(cross_validate(&parsimonious(), &s, &cfg).is_err());
}

#[test]
fn duplicated_sites_give_zero_error() {
    let s = sample(8);
    let all: Vec<usize> = (0..s.n()).collect();
    let scores = holdout_score(&parsimonious(), &s, &all, &[0, 7, 13], Target::Observable).unwrap();
    for v in scores {
        assert_eq!(v.rmse, 0.0);
        assert_eq!(v.crps, 0.0);
        assert_eq!(v.count, 9);
    }
}

#[test]
fn independent_model_scores_match_univariate() {
    let m = make_multimatern(2, MultiMaternModel::independent(vec![1.0, 0.4], vec![0.5, 1.5], vec![0.02, 0.05])).unwrap();
    let s = simulate(&m, &SpatialDesign::grid(5, 5, 15.0), 2, 9).unwrap();
    let cfg = CvConfig { repeats: 3, ..CvConfig::default() };
    let joint = cross_validate(&m, &s, &cfg).unwrap().mean();
    for (i, sigma, nu, a) in [(0, 1.0, 0.5, 0.02), (1, 0.4, 1.5, 0.05)] {
        let mi = make_multimatern(2, MultiMaternModel::independent(vec![sigma], vec![nu], vec![a])).unwrap();
        let single = cross_validate(&mi, &s.select_variables(&[i]).unwrap(), &cfg).unwrap().mean();
        assert!((joint[i].rmse - single[0].rmse).abs() < 1e-10);
        assert!((joint[i].crps - single[0].crps).abs() < 1e-10);
    }
}
