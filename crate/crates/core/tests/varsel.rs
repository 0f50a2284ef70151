mod common;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;
use varclust::gmm::{em_fit, CovarianceFamily, EmConfig};
use varclust::regression::{fit_indep, fit_regression, IndepForm, RegressionForm};
use varclust::simgen::ScenarioSpec;
use varclust::varsel::{criterion, evaluate_roles, select_roles, Move, RoleSearchConfig, VariableRoles};
use varclust::{rng, DataMatrix};

fn set(v: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
    v.into_iter().collect()
}

/// Two clusters on variables 0 and 1, variable 2 = 2·y0 + noise, and
/// three N(1, 4) noise columns.
fn toy(seed: u64, n: usize) -> DataMatrix {
    let mut r = rng::stream(seed, &[0x70e]);
    let mut z = || r.sample::<f64, _>(StandardNormal);
    let mut y = DMatrix::zeros(n, 6);
    for i in 0..n {
        let shift = if i % 2 == 0 { 3.0 } else { -3.0 };
        y[(i, 0)] = shift + z();
        y[(i, 1)] = -shift + z();
        y[(i, 2)] = 2.0 * y[(i, 0)] + 0.7 * z();
        for j in 3..6 {
            y[(i, j)] = 1.0 + 2.0 * z();
        }
    }
    DataMatrix::new(y, None).unwrap()
}

fn toy_config(seed: u64) -> RoleSearchConfig {
    RoleSearchConfig::new(vec![1, 2, 3], CovarianceFamily::AXIS_ALIGNED.to_vec()).with_seed(seed)
}

#[test]
fn toy_roles_are_recovered() {
    let data = toy(1, 300);
    let search = select_roles(&data, &toy_config(1)).unwrap();
    let roles = &search.model.roles;
    assert_eq!(roles.s, set([0, 1]));
    assert_eq!(roles.u, set([2]));
    assert_eq!(roles.r, set([0]));
    assert_eq!(roles.w, set([3, 4, 5]));
    assert_eq!(search.model.mixture.k, 2);
    assert_eq!(search.trace[0].mv, Move::Start);
}

#[test]
fn column_permutation_is_equivariant() {
    let data = toy(2, 300);
    let perm = [5usize, 3, 0, 4, 2, 1];
    let permuted = DataMatrix::new(DMatrix::from_fn(300, 6, |i, c| data.values()[(i, perm[c])]), None).unwrap();
    let a = select_roles(&data, &toy_config(2)).unwrap().model;
    let b = select_roles(&permuted, &toy_config(2)).unwrap().model;
    let back = |s: &BTreeSet<usize>| s.iter().map(|&c| perm[c]).collect::<BTreeSet<_>>();
    assert_eq!(back(&b.roles.s), a.roles.s);
    assert_eq!(back(&b.roles.u), a.roles.u);
    assert_eq!(back(&b.roles.w), a.roles.w);
    assert!(common::rel_close(a.criterion, b.criterion, 1e-6));
}

#[test]
fn search_trace_is_consistent() {
    for seed in 0..10 {
        let ds = ScenarioSpec::exp1(2, seed).unwrap().generate().unwrap();
        let data = &ds.data;
        let p = data.p();
        let config = RoleSearchConfig::new(vec![3], vec![CovarianceFamily::SphericalEqual]).with_seed(seed);
        let search = select_roles(data, &config).unwrap();
        let mut last_score = f64::NEG_INFINITY;
        for step in &search.trace {
            step.roles.validate(p).unwrap();
            let sum = step.mixture_bic + step.blocks.iter().map(|b| b.bic).sum::<f64>();
            assert!(common::rel_close(step.criterion, sum, 1e-12));
            assert!(step.score > last_score, "score must strictly increase");
            last_score = step.score;
            let outside: BTreeSet<usize> = step.blocks.iter().map(|b| b.var).collect();
            assert_eq!(outside, (0..p).filter(|j| !step.roles.s.contains(j)).collect());
            for block in &step.blocks {
                let bic = if block.predictors.is_empty() {
                    fit_indep(data, &set([block.var]), IndepForm::Spherical).unwrap().bic
                } else {
                    fit_regression(data, &set([block.var]), &set(block.predictors.iter().copied()), RegressionForm::Spherical)
                        .unwrap()
                        .bic
                };
                assert!(common::rel_close(block.bic, bic, 1e-8), "block {}: {} vs {bic}", block.var, block.bic);
                assert!(block.predictors.iter().all(|j| step.roles.s.contains(j)));
            }
        }
        let model = &search.model;
        model.roles.validate(p).unwrap();
        let total = model.mixture.bic
            + model.regression.as_ref().map_or(0.0, |r| r.bic)
            + model.indep.as_ref().map_or(0.0, |w| w.bic);
        assert!(common::rel_close(model.criterion, total, 1e-12));
        assert_eq!(model.roles.s, search.trace.last().unwrap().roles.s);
    }
}

#[test]
fn all_relevant_criterion_is_the_mixture_bic() {
    let data = toy(3, 200);
    let em = EmConfig::with_seed(3);
    let roles = VariableRoles::all_relevant(6);
    let model = criterion(&data, &roles, 2, CovarianceFamily::DiagonalEqual, RegressionForm::General, IndepForm::Diagonal, &em)
        .unwrap();
    let direct = em_fit(&data, 2, CovarianceFamily::DiagonalEqual, &em).unwrap();
    assert_eq!(model.criterion, direct.bic);
    assert!(model.regression.is_none() && model.indep.is_none());
}

#[test]
fn criterion_adds_the_three_blocks() {
    let data = toy(4, 200);
    let roles = VariableRoles::new(6, set([0, 1]), set([0]), set([2]), set([3, 4, 5])).unwrap();
    let em = EmConfig::with_seed(4);
    let m = criterion(&data, &roles, 2, CovarianceFamily::SphericalEqual, RegressionForm::Spherical, IndepForm::Spherical, &em)
        .unwrap();
    let mix = em_fit(&data.subset(&[0, 1]).unwrap(), 2, CovarianceFamily::SphericalEqual, &em).unwrap();
    let reg = fit_regression(&data, &set([2]), &set([0]), RegressionForm::Spherical).unwrap();
    let ind = fit_indep(&data, &set([3, 4, 5]), IndepForm::Spherical).unwrap();
    assert!(common::rel_close(m.criterion, mix.bic + reg.bic + ind.bic, 1e-12));
}

#[test]
fn true_roles_beat_a_plain_three_variable_mixture() {
    let replicates = 20;
    let mut wins = 0;
    for seed in 0..replicates {
        let ds = ScenarioSpec::exp2(1, seed).unwrap().generate().unwrap();
        let config = RoleSearchConfig {
            em: EmConfig { n_starts: Some(3), ..EmConfig::with_seed(seed) },
            ..RoleSearchConfig::new(vec![4], CovarianceFamily::AXIS_ALIGNED.to_vec())
        };
        let truth = evaluate_roles(&ds.data, &ds.true_roles, &config).unwrap();
        let alt = VariableRoles::new(14, set(0..3), set([]), set([]), set(3..14)).unwrap();
        let other = evaluate_roles(&ds.data, &alt, &config).unwrap();
        wins += usize::from(truth.criterion > other.criterion);
    }
    assert!(wins * 10 >= replicates as usize * 8, "truth won {wins}/{replicates}");
}

#[test]
fn invalid_search_inputs() {
    let one = DataMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
    assert!(select_roles(&one, &toy_config(0)).is_err());
    let data = toy(0, 50);
    assert!(select_roles(&data, &RoleSearchConfig::new(vec![], vec![CovarianceFamily::SphericalEqual])).is_err());
    let bad = VariableRoles { s: set([0]), r: set([]), u: set([]), w: set([1, 2]) };
    assert!(evaluate_roles(&data, &bad, &toy_config(0)).is_err());
}
