use varclust::simgen::{waveform_basis, Experiment, ScenarioSpec};

fn column_mean(values: &nalgebra::DMatrix<f64>, j: usize, rows: impl Iterator<Item = usize>) -> (f64, usize) {
    let mut sum = 0.0;
    let mut count = 0;
    for i in rows {
        sum += values[(i, j)];
        count += 1;
    }
    (sum / count as f64, count)
}

#[test]
fn exp1_cluster_means_and_noise() {
    let ds = ScenarioSpec::exp1(4, 0).unwrap().with_n(30_000).generate().unwrap();
    let y = ds.data.values();
    let centers = [1.7, -1.7, 0.0];
    for (k, &center) in centers.iter().enumerate() {
        let rows = || (0..30_000).filter(|&i| ds.true_labels[i] == k);
        let (m, count) = column_mean(y, 0, rows());
        assert!((m - center).abs() < 0.05, "cluster {k}: {m}");
        assert!((count as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.02);
        let (noise, _) = column_mean(y, 10, rows());
        assert!(noise.abs() < 0.05);
    }
    let var = y.column(20).variance();
    assert!((var - 1.0).abs() < 0.05);
    assert_eq!(ds.true_relevant, (0..5).collect());
}

#[test]
fn exp2_proportions_and_redundancy() {
    let ds = ScenarioSpec::exp2(1, 0).unwrap().with_n(40_000).generate().unwrap();
    let counts = (0..4).map(|k| ds.true_labels.iter().filter(|&&l| l == k).count() as f64 / 40_000.0);
    for (got, want) in counts.zip([0.2, 0.3, 0.3, 0.2]) {
        assert!((got - want).abs() < 0.01);
    }
    let y = ds.data.values();
    let resid: Vec<f64> = (0..40_000).map(|i| y[(i, 2)] - 3.0 * y[(i, 0)]).collect();
    let var = resid.iter().map(|r| r * r).sum::<f64>() / 40_000.0;
    assert!((var - 0.5).abs() < 0.02);
    assert_eq!(ds.true_roles.u, [2].into());
    assert_eq!(ds.true_roles.w, (3..14).collect());
}

#[test]
fn exp2_scenario_shapes() {
    let s2 = ScenarioSpec::exp2(2, 0).unwrap().generate().unwrap();
    assert_eq!((s2.data.n(), s2.data.p()), (2000, 14));
    assert_eq!(s2.true_roles.r, [0, 1].into());
    let s3 = ScenarioSpec::exp2(3, 0).unwrap().generate().unwrap();
    assert_eq!(s3.data.p(), 101);
    assert_eq!(s3.true_roles.w.len(), 90);
}

#[test]
fn waveform_profiles() {
    assert_eq!(waveform_basis(1, 11), 6.0);
    assert_eq!(waveform_basis(2, 15), 6.0);
    assert_eq!(waveform_basis(3, 7), 6.0);
    assert_eq!(waveform_basis(1, 1), 0.0);
    let ds = ScenarioSpec::waveform(0).generate().unwrap();
    assert_eq!((ds.data.n(), ds.data.p()), (5000, 40));
    // class (1,2) at point 11 mixes h1 = 6 and h2 = 2 with a uniform weight
    let (m, _) = column_mean(ds.data.values(), 10, (0..5000).filter(|&i| ds.true_labels[i] == 0));
    assert!((m - 4.0).abs() < 0.2, "{m}");
    assert_eq!(ds.true_relevant, (0..21).collect());
}

#[test]
fn generation_is_seed_deterministic() {
    for exp in [Experiment::Exp1, Experiment::Exp2, Experiment::Waveform] {
        let spec = ScenarioSpec::new(exp, 2, 5).unwrap();
        let a = spec.generate().unwrap();
        let b = spec.generate().unwrap();
        let c = spec.clone().with_seed(6).generate().unwrap();
        assert_eq!(a.data.values(), b.data.values());
        assert_eq!(a.true_labels, b.true_labels);
        assert_ne!(a.data.values(), c.data.values());
    }
}

#[test]
fn unknown_scenarios_are_rejected() {
    assert!(ScenarioSpec::exp1(6, 0).is_err());
    assert!(ScenarioSpec::exp2(0, 0).is_err());
}
