mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use varclust::regression::{
    best_indep, fit_indep, fit_regression, select_predictors, CrossProducts, IndepForm, RegressionForm,
};
use varclust::simgen::{exp2_coefficients, exp2_offsets, ScenarioSpec};
use varclust::DataMatrix;

fn set(v: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
    v.into_iter().collect()
}

#[test]
fn recovers_a_single_regression() {
    let ds = ScenarioSpec::exp2(1, 1).unwrap().generate().unwrap();
    let fit = fit_regression(&ds.data, &set([2]), &set([0]), RegressionForm::General).unwrap();
    assert!((fit.b[(0, 0)] - 3.0).abs() < 0.1, "b = {}", fit.b[(0, 0)]);
    assert!((fit.omega[(0, 0)] - 0.5).abs() < 0.1, "omega = {}", fit.omega[(0, 0)]);
    assert!(fit.a[0].abs() < 0.1);
}

#[test]
fn recovers_the_multivariate_regression_block() {
    let ds = ScenarioSpec::exp2(2, 2).unwrap().generate().unwrap();
    let fit = fit_regression(&ds.data, &set(2..11), &set([0, 1]), RegressionForm::General).unwrap();
    let b = exp2_coefficients();
    let offsets = exp2_offsets();
    for c in 0..9 {
        for r in 0..2 {
            assert!((fit.b[(r, c)] - b[(r, c)]).abs() < 0.15, "b[{r},{c}] = {}", fit.b[(r, c)]);
        }
        assert!((fit.a[c] - offsets[c]).abs() < 0.3, "a[{c}] = {}", fit.a[c]);
    }
}

#[test]
fn independent_block_estimates_moments() {
    let ds = ScenarioSpec::exp2(1, 3).unwrap().generate().unwrap();
    let fit = fit_indep(&ds.data, &set(3..14), IndepForm::Diagonal).unwrap();
    for (c, j) in (3..14).enumerate() {
        assert!((fit.gamma[c] - 0.4 * (j - 3) as f64).abs() < 0.1);
        assert!((fit.tau[(c, c)] - 1.0).abs() < 0.1);
    }
    // unit variances everywhere: the one-parameter form wins
    assert_eq!(best_indep(&ds.data, &set(3..14), &IndepForm::ALL).unwrap().form, IndepForm::Spherical);
}

#[test]
fn backward_selection_keeps_true_predictors_only() {
    let mut kept_truth = 0;
    let mut noise_empty = 0;
    for seed in 0..20 {
        let ds = ScenarioSpec::exp2(1, 100 + seed).unwrap().generate().unwrap();
        let (r, _) = select_predictors(&ds.data, &set([2]), &set([0, 1]), &RegressionForm::ALL).unwrap();
        kept_truth += usize::from(r == set([0]));
        let (r, _) = select_predictors(&ds.data, &set([5]), &set([0, 1]), &RegressionForm::ALL).unwrap();
        noise_empty += usize::from(r.is_empty());
    }
    assert!(kept_truth >= 16, "true predictor set chosen {kept_truth}/20 times");
    assert!(noise_empty >= 16, "empty set chosen {noise_empty}/20 times for pure noise");
}

#[test]
fn regression_input_errors() {
    let data = DataMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 1.0, 0.0], vec![0.5, 0.1, 2.0]]).unwrap();
    assert!(fit_regression(&data, &set([]), &set([0]), RegressionForm::Spherical).is_err());
    assert!(fit_regression(&data, &set([0]), &set([0]), RegressionForm::Spherical).is_err());
    assert!(matches!(
        fit_regression(&data, &set([0]), &set([1, 2]), RegressionForm::Diagonal),
        Err(varclust::Error::RankDeficient { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn fast_selection_matches_general_path(seed in any::<u64>(), target in 0usize..5) {
        let data = common::clustered(seed, 60, 5, 2, 1.0);
        let candidates: Vec<usize> = (0..5).filter(|&j| j != target).collect();
        let fast = CrossProducts::new(&data).select(target, &candidates).unwrap();
        let (r, _) = select_predictors(&data, &set([target]), &candidates.iter().copied().collect(), &[RegressionForm::Spherical]).unwrap();
        prop_assert_eq!(fast.predictors.iter().copied().collect::<BTreeSet<_>>(), r.clone());
        let exact = if r.is_empty() {
            fit_indep(&data, &set([target]), IndepForm::Spherical).unwrap().bic
        } else {
            fit_regression(&data, &set([target]), &r, RegressionForm::Spherical).unwrap().bic
        };
        prop_assert!(common::rel_close(fast.bic, exact, 1e-8), "{} vs {}", fast.bic, exact);
    }

    #[test]
    fn forms_are_nested_in_loglik(seed in any::<u64>()) {
        let data = common::clustered(seed, 50, 4, 2, 1.0);
        let fits: Vec<f64> = RegressionForm::ALL
            .iter()
            .map(|&f| fit_regression(&data, &set([2, 3]), &set([0, 1]), f).unwrap().loglik)
            .collect();
        prop_assert!(fits[0] <= fits[1] + 1e-9 && fits[1] <= fits[2] + 1e-9);
    }
}
