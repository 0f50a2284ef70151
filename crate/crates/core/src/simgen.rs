//! Seeded generators for the synthetic benchmark settings.
//!
//! Every column (and the label draw) comes from its own random substream, so
//! a dataset is a pure function of its [`ScenarioSpec`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, SMatrix};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::varsel::VariableRoles;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    /// Conditionally independent variables: 5 relevant, the rest noise.
    Exp1,
    /// Correlated variables: 2 relevant, redundant regressions, noise.
    Exp2,
    Waveform,
}

impl Experiment {
    fn tag(self) -> u64 {
        match self {
            Self::Exp1 => 1,
            Self::Exp2 => 2,
            Self::Waveform => 3,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exp1 => "exp1",
            Self::Exp2 => "exp2",
            Self::Waveform => "waveform",
        })
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp1" | "1" => Ok(Self::Exp1),
            "exp2" | "2" => Ok(Self::Exp2),
            "waveform" | "wave" => Ok(Self::Waveform),
            other => Err(Error::InvalidArgument(format!("unknown experiment `{other}`"))),
        }
    }
}

/// One synthetic setting.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub experiment: Experiment,
    pub scenario: u32,
    pub n: usize,
    pub p: usize,
    /// Cluster separation for the first experiment; unused elsewhere.
    pub mu: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Scenarios 1–5: (n, μ) = (30, 0.6), (30, 1.7), (300, 0.6), (300, 1.7),
    /// (300, 1.7); p = 25 except p = 100 in scenario 5.
    pub fn exp1(scenario: u32, seed: u64) -> Result<Self> {
        let (n, p, mu) = match scenario {
            1 => (30, 25, 0.6),
            2 => (30, 25, 1.7),
            3 => (300, 25, 0.6),
            4 => (300, 25, 1.7),
            5 => (300, 100, 1.7),
            s => return Err(Error::InvalidArgument(format!("exp1 has scenarios 1-5, got {s}"))),
        };
        Ok(Self { experiment: Experiment::Exp1, scenario, n, p, mu, seed })
    }

    /// Scenarios 1–3 with n = 2000; p = 14, 14, 101.
    pub fn exp2(scenario: u32, seed: u64) -> Result<Self> {
        let p = match scenario {
            1 | 2 => 14,
            3 => 101,
            s => return Err(Error::InvalidArgument(format!("exp2 has scenarios 1-3, got {s}"))),
        };
        Ok(Self { experiment: Experiment::Exp2, scenario, n: 2000, p, mu: 0.0, seed })
    }

    pub fn waveform(seed: u64) -> Self {
        Self { experiment: Experiment::Waveform, scenario: 1, n: 5000, p: 40, mu: 0.0, seed }
    }

    pub fn new(experiment: Experiment, scenario: u32, seed: u64) -> Result<Self> {
        match experiment {
            Experiment::Exp1 => Self::exp1(scenario, seed),
            Experiment::Exp2 => Self::exp2(scenario, seed),
            Experiment::Waveform => Ok(Self::waveform(seed)),
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Short identifier such as `exp1-s4`.
    pub fn id(&self) -> String {
        match self.experiment {
            Experiment::Waveform => "waveform".to_string(),
            e => format!("{e}-s{}", self.scenario),
        }
    }

    pub fn generate(&self) -> Result<LabeledDataset> {
        match self.experiment {
            Experiment::Exp1 => gen_exp1(self),
            Experiment::Exp2 => gen_exp2(self),
            Experiment::Waveform => gen_waveform(self.n, self.seed),
        }
    }

    fn column_rng(&self, column: usize) -> Rng {
        rng::stream(self.seed, &[self.experiment.tag(), self.scenario as u64, 1 + column as u64])
    }

    fn label_rng(&self) -> Rng {
        rng::stream(self.seed, &[self.experiment.tag(), self.scenario as u64, 0])
    }
}

/// A generated dataset with its ground truth.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub data: DataMatrix,
    pub true_labels: Vec<usize>,
    pub true_relevant: BTreeSet<usize>,
    pub true_roles: VariableRoles,
}

fn normals(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn categorical(rng: &mut Rng, n: usize, probs: &[f64]) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (k, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return k;
                }
            }
            probs.len() - 1
        })
        .collect()
}

fn finish(values: DMatrix<f64>, labels: Vec<usize>, roles: VariableRoles) -> Result<LabeledDataset> {
    let p = values.ncols();
    let names = (1..=p).map(|j| format!("V{j}")).collect();
    Ok(LabeledDataset {
        data: DataMatrix::new(values, Some(names))?,
        true_labels: labels,
        true_relevant: roles.s.clone(),
        true_roles: roles,
    })
}

/// Three equiprobable spherical clusters on the first five variables with
/// means (μ,…,μ), (−μ,…,−μ) and 0; the remaining columns are N(0, 1) noise.
pub fn gen_exp1(spec: &ScenarioSpec) -> Result<LabeledDataset> {
    if spec.experiment != Experiment::Exp1 || !(1..=5).contains(&spec.scenario) || spec.p < 5 {
        return Err(Error::InvalidArgument(format!("not an exp1 spec: {spec:?}")));
    }
    let (n, p) = (spec.n, spec.p);
    let labels = categorical(&mut spec.label_rng(), n, &[1.0 / 3.0; 3]);
    let centers = [spec.mu, -spec.mu, 0.0];
    let mut values = DMatrix::zeros(n, p);
    for j in 0..p {
        let z = normals(&mut spec.column_rng(j), n);
        for i in 0..n {
            let shift = if j < 5 { centers[labels[i]] } else { 0.0 };
            values[(i, j)] = shift + z[i];
        }
    }
    let roles = VariableRoles::new(p, (0..5).collect(), BTreeSet::new(), BTreeSet::new(), (5..p).collect())?;
    finish(values, labels, roles)
}

/// Plane rotation by `theta` radians.
pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Regression coefficients of variables 3–11 on variables 1–2 (one column per
/// redundant variable).
pub fn exp2_coefficients() -> SMatrix<f64, 2, 9> {
    SMatrix::<f64, 2, 9>::from_column_slice(&[
        0.5, 1.0, 2.0, 0.0, 0.0, 3.0, -1.0, 2.0, 2.0, -4.0, 0.5, 0.0, 4.0, 0.5, 3.0, 0.0, 2.0, 1.0,
    ])
}

/// Intercepts of variables 3–11: two zeros then seven evenly spaced values
/// from 0.4 to 2.
pub fn exp2_offsets() -> [f64; 9] {
    let mut o = [0.0; 9];
    for (i, v) in o.iter_mut().enumerate().skip(2) {
        *v = 0.4 + (i - 2) as f64 * (1.6 / 6.0);
    }
    o
}

/// Block-diagonal residual covariance diag(I₃, 0.5·I₂, Ω₁, Ω₂) with
/// Ω₁ = Rot(π/3)′ diag(1,3) Rot(π/3) and Ω₂ = Rot(π/6)′ diag(2,6) Rot(π/6).
pub fn exp2_omega() -> DMatrix<f64> {
    let block = |theta: f64, a: f64, b: f64| {
        let r = rotation(theta);
        r.transpose() * Matrix2::new(a, 0.0, 0.0, b) * r
    };
    let mut omega = DMatrix::zeros(9, 9);
    for j in 0..3 {
        omega[(j, j)] = 1.0;
    }
    omega[(3, 3)] = 0.5;
    omega[(4, 4)] = 0.5;
    for (start, blk) in [(5, block(std::f64::consts::FRAC_PI_3, 1.0, 3.0)), (7, block(std::f64::consts::FRAC_PI_6, 2.0, 6.0))] {
        for a in 0..2 {
            for b in 0..2 {
                omega[(start + a, start + b)] = blk[(a, b)];
            }
        }
    }
    omega
}

/// Four clusters N(μ_k, I₂) on the first two variables, μ ∈ {(0,0), (4,0),
/// (0,2), (4,2)}, followed by redundant and independent blocks.
pub fn gen_exp2(spec: &ScenarioSpec) -> Result<LabeledDataset> {
    if spec.experiment != Experiment::Exp2 || !(1..=3).contains(&spec.scenario) {
        return Err(Error::InvalidArgument(format!("not an exp2 spec: {spec:?}")));
    }
    let n = spec.n;
    let means = [(0.0, 0.0), (4.0, 0.0), (0.0, 2.0), (4.0, 2.0)];
    let props: &[f64] = if spec.scenario == 1 { &[0.2, 0.3, 0.3, 0.2] } else { &[0.25; 4] };
    let labels = categorical(&mut spec.label_rng(), n, props);
    let p = if spec.scenario == 3 { 101 } else { 14 };
    let mut values = DMatrix::zeros(n, p);
    for j in 0..2 {
        let z = normals(&mut spec.column_rng(j), n);
        for i in 0..n {
            let m = if j == 0 { means[labels[i]].0 } else { means[labels[i]].1 };
            values[(i, j)] = m + z[i];
        }
    }
    let set = |r: std::ops::Range<usize>| r.collect::<BTreeSet<usize>>();
    let roles;
    if spec.scenario == 1 {
        let z = normals(&mut spec.column_rng(2), n);
        for i in 0..n {
            values[(i, 2)] = 3.0 * values[(i, 0)] + 0.5f64.sqrt() * z[i];
        }
        for j in 3..14 {
            let mean = 0.4 * (j - 3) as f64;
            let z = normals(&mut spec.column_rng(j), n);
            for i in 0..n {
                values[(i, j)] = mean + z[i];
            }
        }
        roles = VariableRoles::new(p, set(0..2), set(0..1), set(2..3), set(3..14))?;
    } else {
        let b = exp2_coefficients();
        let offsets = exp2_offsets();
        let chol = exp2_omega().cholesky().expect("omega is positive definite");
        let l = chol.l();
        let z: Vec<Vec<f64>> = (0..9).map(|c| normals(&mut spec.column_rng(2 + c), n)).collect();
        for i in 0..n {
            for c in 0..9 {
                let eps: f64 = (0..=c).map(|m| l[(c, m)] * z[m][i]).sum();
                values[(i, 2 + c)] = offsets[c] + values[(i, 0)] * b[(0, c)] + values[(i, 1)] * b[(1, c)] + eps;
            }
        }
        let indep_means: Vec<f64> = if spec.scenario == 2 {
            vec![3.2, 3.6, 4.0]
        } else {
            (0..90).map(|c| 2.0 * (c / 30) as f64).collect()
        };
        for (c, &mean) in indep_means.iter().enumerate() {
            let j = 11 + c;
            let z = normals(&mut spec.column_rng(j), n);
            for i in 0..n {
                values[(i, j)] = mean + z[i];
            }
        }
        roles = VariableRoles::new(p, set(0..2), set(0..2), set(2..11), set(11..p))?;
    }
    finish(values, labels, roles)
}

/// Triangular waveform basis h₁(j) = max(6 − |j − 11|, 0) with h₂(j) = h₁(j − 4)
/// and h₃(j) = h₁(j + 4), for 1-based sampling points j.
pub fn waveform_basis(which: usize, j: usize) -> f64 {
    let shift = match which {
        1 => 0.0,
        2 => -4.0,
        3 => 4.0,
        _ => panic!("waveform basis index must be 1, 2 or 3"),
    };
    (6.0 - (j as f64 + shift - 11.0).abs()).max(0.0)
}

/// Classes pair the bases (1,2), (1,3), (2,3).
pub const WAVEFORM_PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

/// Waveform data: 21 noisy convex combinations of two triangular bases
/// followed by 19 N(0, 1) columns.
pub fn gen_waveform(n: usize, seed: u64) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("waveform needs n >= 1".into()));
    }
    let spec = ScenarioSpec::waveform(seed).with_n(n);
    let mut label_rng = spec.label_rng();
    let labels = categorical(&mut label_rng, n, &[1.0 / 3.0; 3]);
    let weights: Vec<f64> = (0..n).map(|_| label_rng.random::<f64>()).collect();
    let mut values = DMatrix::zeros(n, 40);
    for j in 0..40 {
        let z = normals(&mut spec.column_rng(j), n);
        for i in 0..n {
            values[(i, j)] = z[i];
            if j < 21 {
                let (a, b) = WAVEFORM_PAIRS[labels[i]];
                let u = weights[i];
                values[(i, j)] += u * waveform_basis(a, j + 1) + (1.0 - u) * waveform_basis(b, j + 1);
            }
        }
    }
    let roles = VariableRoles::new(40, (0..21).collect(), BTreeSet::new(), BTreeSet::new(), (21..40).collect())?;
    finish(values, labels, roles)
}
