//! Expectation-maximization for Gaussian mixtures under the covariance
//! families of [`CovarianceFamily`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;

use super::family::{param_count, CovarianceFamily};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Floor applications tolerated in one run before the start is abandoned.
const MAX_FLOOR_HITS: usize = 50;
const VEE_INNER_ITERS: usize = 20;

/// EM settings shared by every start.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    /// Random starts; `None` picks 10 for K ≤ 10 and 20 above.
    pub n_starts: Option<usize>,
    /// Relative log-likelihood change below which a run stops.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { n_starts: None, tol: 1e-6, max_iter: 500, seed: 0 }
    }
}

impl EmConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn starts_for(&self, k: usize) -> usize {
        self.n_starts.unwrap_or(if k <= 10 { 10 } else { 20 })
    }
}

/// A fitted Gaussian mixture.
#[derive(Debug, Clone)]
pub struct MixtureFit {
    pub k: usize,
    pub family: CovarianceFamily,
    pub pi: Vec<f64>,
    /// K×p component means.
    pub mu: DMatrix<f64>,
    pub sigma: Vec<DMatrix<f64>>,
    pub loglik: f64,
    pub bic: f64,
    /// n×K posterior membership probabilities.
    pub resp: DMatrix<f64>,
    /// Most probable component of each observation (0-based).
    pub labels: Vec<usize>,
    pub n_iter: usize,
    /// Observed-data log-likelihood after every E-step of the winning start.
    pub history: Vec<f64>,
    /// Index of the winning start (0 is the warm start when one was given).
    pub start: usize,
}

impl MixtureFit {
    pub fn n(&self) -> usize {
        self.resp.nrows()
    }

    pub fn p(&self) -> usize {
        self.mu.ncols()
    }

    pub fn n_params(&self) -> usize {
        param_count(self.k, self.p(), self.family)
    }
}

/// `2 loglik − ν log n`; larger is better.
pub fn bic_mixture(fit: &MixtureFit, n: usize) -> f64 {
    bic_value(fit.loglik, fit.n_params(), n)
}

pub(crate) fn bic_value(loglik: f64, n_params: usize, n: usize) -> f64 {
    2.0 * loglik - n_params as f64 * (n as f64).ln()
}

/// Fits a K-component mixture, keeping the best of the configured random
/// starts by log-likelihood (ties go to the earlier start).
pub fn em_fit(data: &DataMatrix, k: usize, family: CovarianceFamily, config: &EmConfig) -> Result<MixtureFit> {
    em_fit_matrix(data.values(), k, family, config, None)
}

/// Like [`em_fit`], with an optional extra start (index 0) initialized from
/// the given n×K responsibilities.
pub fn em_fit_matrix(
    y: &DMatrix<f64>,
    k: usize,
    family: CovarianceFamily,
    config: &EmConfig,
    warm: Option<&DMatrix<f64>>,
) -> Result<MixtureFit> {
    let ctx = Context::new(y, k, family)?;
    let n_random = config.starts_for(k);
    let mut best: Option<MixtureFit> = None;
    let mut attempted = 0;
    let mut consider = |fit: Option<MixtureFit>| {
        if let Some(fit) = fit {
            if best.as_ref().is_none_or(|b| fit.loglik > b.loglik) {
                best = Some(fit);
            }
        }
    };
    if let Some(resp) = warm {
        if resp.nrows() == y.nrows() && resp.ncols() == k {
            attempted += 1;
            consider(ctx.run(Init::Responsibilities(resp), config, 0));
        }
    }
    for s in 0..n_random {
        attempted += 1;
        let start = s + 1;
        consider(ctx.run(Init::RandomRows(rng::derive_seed(config.seed, &[k as u64, start as u64])), config, start));
    }
    best.ok_or(Error::DegenerateFit { starts: attempted })
}

/// Runs a single EM start seeded with `start_seed` and returns its fit,
/// including the full log-likelihood history.
pub fn em_single_start(
    data: &DataMatrix,
    k: usize,
    family: CovarianceFamily,
    config: &EmConfig,
    start_seed: u64,
) -> Result<MixtureFit> {
    let ctx = Context::new(data.values(), k, family)?;
    ctx.run(Init::RandomRows(start_seed), config, 1).ok_or(Error::DegenerateFit { starts: 1 })
}

enum Init<'a> {
    RandomRows(u64),
    Responsibilities(&'a DMatrix<f64>),
}

#[derive(Clone)]
enum Cov {
    Spherical(f64),
    Diagonal(DVector<f64>),
    Full(DMatrix<f64>),
}

/// Covariance in a form ready for density evaluation.
struct Prepared {
    log_det: f64,
    kind: PreparedKind,
}

enum PreparedKind {
    Spherical(f64),
    Diagonal(DVector<f64>),
    /// Inverse of the lower Cholesky factor.
    Full(DMatrix<f64>),
}

#[derive(Clone)]
struct Params {
    pi: Vec<f64>,
    mu: DMatrix<f64>,
    cov: Vec<Cov>,
    /// VEE volumes and shared unit-determinant shape/orientation matrix.
    vee: Option<(Vec<f64>, DMatrix<f64>)>,
}

struct Context<'a> {
    y: &'a DMatrix<f64>,
    k: usize,
    family: CovarianceFamily,
    global_cov: DMatrix<f64>,
    floor: f64,
}

impl<'a> Context<'a> {
    fn new(y: &'a DMatrix<f64>, k: usize, family: CovarianceFamily) -> Result<Self> {
        let (n, p) = y.shape();
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if n <= k {
            return Err(Error::SingularData(format!("n = {n} must exceed K = {k}")));
        }
        let too_small = match family {
            CovarianceFamily::FullVarying => n < k * (p + 1),
            CovarianceFamily::FullEqual | CovarianceFamily::FullEqualShapeOrientation => n < k + p,
            _ => false,
        };
        if too_small {
            return Err(Error::DegenerateFit { starts: 0 });
        }
        let mean = y.row_mean();
        let mut centered = y.clone();
        for mut row in centered.row_iter_mut() {
            row -= &mean;
        }
        let global_cov = centered.tr_mul(&centered) / n as f64;
        for j in 0..p {
            if global_cov[(j, j)] <= 1e-24 * (1.0 + mean[j] * mean[j]) {
                return Err(Error::SingularData(format!("column {j} has zero variance")));
            }
        }
        let floor = 1e-6 * global_cov.diagonal().mean();
        Ok(Self { y, k, family, global_cov, floor })
    }

    fn n(&self) -> usize {
        self.y.nrows()
    }

    fn p(&self) -> usize {
        self.y.ncols()
    }

    fn run(&self, init: Init<'_>, config: &EmConfig, start: usize) -> Option<MixtureFit> {
        let mut floor_hits = 0;
        let mut params = match init {
            Init::RandomRows(seed) => self.random_start(seed, &mut floor_hits)?,
            Init::Responsibilities(resp) => self.m_step(resp, None, &mut floor_hits)?,
        };
        let mut history = Vec::new();
        let mut resp;
        loop {
            let (ll, r) = self.e_step(&params)?;
            resp = r;
            let converged = history
                .last()
                .is_some_and(|&prev: &f64| (ll - prev).abs() <= config.tol * ll.abs());
            history.push(ll);
            if converged || history.len() >= config.max_iter {
                break;
            }
            params = self.m_step(&resp, Some(&params), &mut floor_hits)?;
            if floor_hits > MAX_FLOOR_HITS {
                return None;
            }
        }
        Some(self.finish(params, resp, history, start))
    }

    fn random_start(&self, seed: u64, floor_hits: &mut usize) -> Option<Params> {
        let (n, p, k) = (self.n(), self.p(), self.k);
        let mut rng = rng::stream(seed, &[]);
        let rows = sample(&mut rng, n, k).into_vec();
        let mu = DMatrix::from_fn(k, p, |c, j| self.y[(rows[c], j)]);
        let g = &self.global_cov;
        let (cov, vee) = match self.family {
            CovarianceFamily::SphericalEqual | CovarianceFamily::SphericalVarying => {
                (vec![Cov::Spherical(g.trace() / p as f64); k], None)
            }
            CovarianceFamily::DiagonalEqual | CovarianceFamily::DiagonalVarying => {
                (vec![Cov::Diagonal(g.diagonal()); k], None)
            }
            CovarianceFamily::FullEqual | CovarianceFamily::FullVarying => {
                let mut s = g.clone();
                self.apply_floor_full(&mut s, floor_hits);
                (vec![Cov::Full(s); k], None)
            }
            CovarianceFamily::FullEqualShapeOrientation => {
                let mut s = g.clone();
                self.apply_floor_full(&mut s, floor_hits);
                let log_det = log_det_spd(&s)?;
                let volume = (log_det / p as f64).exp();
                let shape = &s / volume;
                (vec![Cov::Full(s); k], Some((vec![volume; k], shape)))
            }
        };
        Some(Params { pi: vec![1.0 / k as f64; k], mu, cov, vee })
    }

    fn e_step(&self, params: &Params) -> Option<(f64, DMatrix<f64>)> {
        let (n, k) = (self.n(), self.k);
        let mut log_dens = DMatrix::<f64>::zeros(n, k);
        for c in 0..k {
            let prepared = prepare(&params.cov[c], self.p())?;
            let mut col = log_dens.column_mut(c);
            self.log_density(params.mu.row(c).transpose(), &prepared, col.as_mut_slice());
            let lp = params.pi[c].ln();
            col.add_scalar_mut(lp);
        }
        let mut loglik = 0.0;
        let mut resp = log_dens;
        for i in 0..n {
            let mut max = f64::NEG_INFINITY;
            for c in 0..k {
                max = max.max(resp[(i, c)]);
            }
            let mut sum = 0.0;
            for c in 0..k {
                let e = (resp[(i, c)] - max).exp();
                resp[(i, c)] = e;
                sum += e;
            }
            for c in 0..k {
                resp[(i, c)] /= sum;
            }
            loglik += max + sum.ln();
        }
        loglik.is_finite().then_some((loglik, resp))
    }

    fn log_density(&self, mu: DVector<f64>, cov: &Prepared, out: &mut [f64]) {
        let (n, p) = self.y.shape();
        let base = -0.5 * (p as f64 * LN_2PI + cov.log_det);
        match &cov.kind {
            PreparedKind::Spherical(var) => {
                out.fill(0.0);
                for j in 0..p {
                    let col = self.y.column(j);
                    let m = mu[j];
                    for (o, &v) in out.iter_mut().zip(col.iter()) {
                        let d = v - m;
                        *o += d * d;
                    }
                }
                let scale = -0.5 / var;
                for o in out.iter_mut() {
                    *o = base + scale * *o;
                }
            }
            PreparedKind::Diagonal(var) => {
                out.fill(0.0);
                for j in 0..p {
                    let col = self.y.column(j);
                    let (m, w) = (mu[j], 1.0 / var[j]);
                    for (o, &v) in out.iter_mut().zip(col.iter()) {
                        let d = v - m;
                        *o += w * d * d;
                    }
                }
                for o in out.iter_mut() {
                    *o = base - 0.5 * *o;
                }
            }
            PreparedKind::Full(l_inv) => {
                let mut centered = self.y.clone();
                for j in 0..p {
                    centered.column_mut(j).add_scalar_mut(-mu[j]);
                }
                let z = centered * l_inv.transpose();
                out.fill(0.0);
                for j in 0..p {
                    for (o, &v) in out.iter_mut().zip(z.column(j).iter()) {
                        *o += v * v;
                    }
                }
                for o in out.iter_mut().take(n) {
                    *o = base - 0.5 * *o;
                }
            }
        }
    }

    fn m_step(&self, resp: &DMatrix<f64>, prev: Option<&Params>, floor_hits: &mut usize) -> Option<Params> {
        let (n, p, k) = (self.n(), self.p(), self.k);
        let nk: Vec<f64> = resp.column_iter().map(|c| c.sum()).collect();
        if nk.iter().any(|&m| !(m > 1e-10 * n as f64)) {
            return None;
        }
        // a component's own covariance needs more points than it has free directions
        let min_own = match self.family {
            CovarianceFamily::FullVarying => p as f64 + 1.0,
            CovarianceFamily::SphericalVarying | CovarianceFamily::DiagonalVarying => 2.0,
            _ => 0.0,
        };
        if nk.iter().any(|&m| m < min_own) {
            return None;
        }
        let mut mu = resp.tr_mul(self.y);
        for c in 0..k {
            mu.row_mut(c).scale_mut(1.0 / nk[c]);
        }
        let pi: Vec<f64> = nk.iter().map(|&m| m / n as f64).collect();

        let mut vee = None;
        let cov = if self.family.is_full() {
            let scatter: Vec<DMatrix<f64>> = (0..k).map(|c| self.weighted_scatter(resp, &mu, c)).collect();
            match self.family {
                CovarianceFamily::FullVarying => scatter
                    .into_iter()
                    .zip(&nk)
                    .map(|(w, &m)| {
                        let mut s = w / m;
                        self.apply_floor_full(&mut s, floor_hits);
                        Cov::Full(s)
                    })
                    .collect(),
                CovarianceFamily::FullEqual => {
                    let mut s = scatter.into_iter().fold(DMatrix::zeros(p, p), |acc, w| acc + w) / n as f64;
                    self.apply_floor_full(&mut s, floor_hits);
                    vec![Cov::Full(s); k]
                }
                _ => {
                    let (volumes, shape) = self.vee_update(&scatter, &nk, prev.and_then(|p| p.vee.as_ref()))?;
                    let cov = volumes
                        .iter()
                        .map(|&v| {
                            let mut s = &shape * v;
                            self.apply_floor_full(&mut s, floor_hits);
                            Cov::Full(s)
                        })
                        .collect();
                    vee = Some((volumes, shape));
                    cov
                }
            }
        } else {
            // per-component, per-variable weighted squared deviations
            let mut dev = DMatrix::<f64>::zeros(k, p);
            for c in 0..k {
                let r = resp.column(c);
                for j in 0..p {
                    let m = mu[(c, j)];
                    dev[(c, j)] = self
                        .y
                        .column(j)
                        .iter()
                        .zip(r.iter())
                        .map(|(&v, &w)| {
                            let d = v - m;
                            w * d * d
                        })
                        .sum();
                }
            }
            let mut floor_scalar = |v: f64| {
                if v < self.floor {
                    *floor_hits += 1;
                    v + self.floor
                } else {
                    v
                }
            };
            match self.family {
                CovarianceFamily::SphericalEqual => {
                    let v = floor_scalar(dev.sum() / (n * p) as f64);
                    vec![Cov::Spherical(v); k]
                }
                CovarianceFamily::SphericalVarying => (0..k)
                    .map(|c| Cov::Spherical(floor_scalar(dev.row(c).sum() / (nk[c] * p as f64))))
                    .collect(),
                CovarianceFamily::DiagonalEqual => {
                    let d = dev.row_sum().transpose() / n as f64;
                    vec![Cov::Diagonal(self.floor_diagonal(d, floor_hits)); k]
                }
                _ => (0..k)
                    .map(|c| {
                        let d = dev.row(c).transpose() / nk[c];
                        Cov::Diagonal(self.floor_diagonal(d, floor_hits))
                    })
                    .collect(),
            }
        };
        Some(Params { pi, mu, cov, vee })
    }

    fn weighted_scatter(&self, resp: &DMatrix<f64>, mu: &DMatrix<f64>, c: usize) -> DMatrix<f64> {
        let (n, p) = self.y.shape();
        let mut w = DMatrix::<f64>::zeros(n, p);
        let r = resp.column(c);
        for j in 0..p {
            let m = mu[(c, j)];
            for (i, (dst, &v)) in w.column_mut(j).iter_mut().zip(self.y.column(j).iter()).enumerate() {
                *dst = r[i].sqrt() * (v - m);
            }
        }
        w.tr_mul(&w)
    }

    /// Conditional maximization of the VEE parameters: alternate the shared
    /// shape/orientation matrix and the per-component volumes.
    fn vee_update(
        &self,
        scatter: &[DMatrix<f64>],
        nk: &[f64],
        prev: Option<&(Vec<f64>, DMatrix<f64>)>,
    ) -> Option<(Vec<f64>, DMatrix<f64>)> {
        let p = self.p();
        let mut volumes = match prev {
            Some((v, _)) => v.clone(),
            None => scatter
                .iter()
                .zip(nk)
                .map(|(w, &m)| (w.trace() / (m * p as f64)).max(self.floor))
                .collect(),
        };
        let mut shape = DMatrix::zeros(p, p);
        for _ in 0..VEE_INNER_ITERS {
            let mut a = DMatrix::<f64>::zeros(p, p);
            for (w, &v) in scatter.iter().zip(&volumes) {
                a += w / v;
            }
            let log_det = log_det_spd(&a)?;
            shape = a * (-log_det / p as f64).exp();
            let inv = shape.clone().cholesky()?.inverse();
            let mut max_change: f64 = 0.0;
            for ((w, &m), v) in scatter.iter().zip(nk).zip(volumes.iter_mut()) {
                let new = (inv.component_mul(w).sum() / (p as f64 * m)).max(f64::MIN_POSITIVE);
                max_change = max_change.max(((new - *v) / *v).abs());
                *v = new;
            }
            if max_change < 1e-10 {
                break;
            }
        }
        Some((volumes, shape))
    }

    fn floor_diagonal(&self, mut d: DVector<f64>, floor_hits: &mut usize) -> DVector<f64> {
        if d.min() < self.floor {
            *floor_hits += 1;
            d.add_scalar_mut(self.floor);
        }
        d
    }

    fn apply_floor_full(&self, s: &mut DMatrix<f64>, floor_hits: &mut usize) {
        let min_eig = s.clone().symmetric_eigenvalues().min();
        if !(min_eig >= self.floor) {
            *floor_hits += 1;
            for j in 0..s.nrows() {
                s[(j, j)] += self.floor;
            }
        }
    }

    fn finish(&self, params: Params, resp: DMatrix<f64>, history: Vec<f64>, start: usize) -> MixtureFit {
        let (n, p, k) = (self.n(), self.p(), self.k);
        let loglik = *history.last().expect("at least one E-step");
        let labels = (0..n)
            .map(|i| {
                let row = resp.row(i);
                let mut best = 0;
                for c in 1..k {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect();
        let sigma = params
            .cov
            .iter()
            .map(|cov| match cov {
                Cov::Spherical(v) => DMatrix::from_diagonal_element(p, p, *v),
                Cov::Diagonal(d) => DMatrix::from_diagonal(d),
                Cov::Full(s) => s.clone(),
            })
            .collect();
        MixtureFit {
            k,
            family: self.family,
            pi: params.pi,
            mu: params.mu,
            sigma,
            loglik,
            bic: bic_value(loglik, param_count(k, p, self.family), n),
            resp,
            labels,
            n_iter: history.len(),
            history,
            start,
        }
    }
}

fn prepare(cov: &Cov, p: usize) -> Option<Prepared> {
    let prepared = match cov {
        Cov::Spherical(v) => Prepared { log_det: p as f64 * v.ln(), kind: PreparedKind::Spherical(*v) },
        Cov::Diagonal(d) => Prepared { log_det: d.iter().map(|v| v.ln()).sum(), kind: PreparedKind::Diagonal(d.clone()) },
        Cov::Full(s) => {
            let chol = s.clone().cholesky()?;
            let l = chol.l();
            let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
            let l_inv = l.solve_lower_triangular(&DMatrix::identity(s.nrows(), s.nrows()))?;
            Prepared { log_det, kind: PreparedKind::Full(l_inv) }
        }
    };
    Some(prepared)
}

fn log_det_spd(s: &DMatrix<f64>) -> Option<f64> {
    let chol = s.clone().cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Log-density of a single Gaussian with covariance `sigma` at each row of `y`.
pub fn gaussian_log_density(y: &DMatrix<f64>, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Option<Vec<f64>> {
    let l = sigma.clone().cholesky()?.l();
    let p = y.ncols();
    let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Some(
        y.row_iter()
            .map(|row| {
                let d = row.transpose() - mu;
                let z = l.solve_lower_triangular(&d).expect("triangular solve");
                -0.5 * (p as f64 * (2.0 * PI).ln() + log_det + z.norm_squared())
            })
            .collect(),
    )
}
