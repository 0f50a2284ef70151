//! Gaussian blocks for non-clustering variables: the linear regression of
//! redundant variables on a subset of the relevant ones, and the independent
//! Gaussian block.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::gmm::bic_value;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Smallest residual or independent variance used in a likelihood.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Structure of the regression residual covariance Ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegressionForm {
    Spherical,
    Diagonal,
    General,
}

impl RegressionForm {
    pub const ALL: [RegressionForm; 3] = [Self::Spherical, Self::Diagonal, Self::General];

    pub fn omega_params(self, q: usize) -> usize {
        match self {
            Self::Spherical => 1,
            Self::Diagonal => q,
            Self::General => q * (q + 1) / 2,
        }
    }
}

/// Structure of the independent block's covariance τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndepForm {
    Spherical,
    Diagonal,
}

impl IndepForm {
    pub const ALL: [IndepForm; 2] = [Self::Spherical, Self::Diagonal];
}

macro_rules! form_text {
    ($ty:ty { $($variant:ident => $name:literal),* }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $name),* })
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok(Self::$variant),)*
                    other => Err(Error::InvalidArgument(format!("unknown form `{other}`"))),
                }
            }
        }
    };
}

form_text!(RegressionForm { Spherical => "spherical", Diagonal => "diagonal", General => "general" });
form_text!(IndepForm { Spherical => "spherical", Diagonal => "diagonal" });

/// Regression of y^U on y^R: y^U = a + y^R b + ε, ε ~ N(0, Ω).
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub u: Vec<usize>,
    pub r: Vec<usize>,
    /// Intercepts, one per redundant variable.
    pub a: DVector<f64>,
    /// |R|×|U| coefficients.
    pub b: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub form: RegressionForm,
    pub loglik: f64,
    pub bic: f64,
}

impl RegressionFit {
    pub fn n_params(&self) -> usize {
        self.u.len() * (1 + self.r.len()) + self.form.omega_params(self.u.len())
    }
}

/// Independent Gaussian block y^W ~ N(γ, τ) with diagonal τ.
#[derive(Debug, Clone)]
pub struct IndepFit {
    pub w: Vec<usize>,
    pub gamma: DVector<f64>,
    pub tau: DMatrix<f64>,
    pub form: IndepForm,
    pub loglik: f64,
    pub bic: f64,
}

impl IndepFit {
    pub fn n_params(&self) -> usize {
        self.w.len() + if self.form == IndepForm::Spherical { 1 } else { self.w.len() }
    }
}

fn centered(m: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let mean = m.row_mean().transpose();
    let mut c = m;
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    (c, mean)
}

/// Log-likelihood of residuals with MLE scatter `s` (already divided by n)
/// under a diagonal covariance `var`.
fn diag_loglik(n: usize, s_diag: &[f64], var: &[f64]) -> f64 {
    let n = n as f64;
    s_diag
        .iter()
        .zip(var)
        .map(|(&s, &v)| -0.5 * n * (LN_2PI + v.ln()) - 0.5 * n * s / v)
        .sum()
}

/// Least-squares/maximum-likelihood regression of the `u` columns on the `r`
/// columns with residual covariance of the requested form.
pub fn fit_regression(
    data: &DataMatrix,
    u: &BTreeSet<usize>,
    r: &BTreeSet<usize>,
    form: RegressionForm,
) -> Result<RegressionFit> {
    let n = data.n();
    if u.is_empty() {
        return Err(Error::InvalidArgument("regression needs at least one response".into()));
    }
    if !u.is_disjoint(r) {
        return Err(Error::InvalidArgument("responses and predictors overlap".into()));
    }
    let (u_idx, r_idx): (Vec<usize>, Vec<usize>) = (u.iter().copied().collect(), r.iter().copied().collect());
    let (q, m) = (u_idx.len(), r_idx.len());
    if n <= m + 1 {
        return Err(Error::RankDeficient { expected: m + 1 });
    }
    let (yc, y_mean) = centered(data.select_columns(&u_idx));
    let (b, a, resid) = if m == 0 {
        (DMatrix::zeros(0, q), y_mean, yc)
    } else {
        let (xc, x_mean) = centered(data.select_columns(&r_idx));
        let gram = xc.tr_mul(&xc);
        let chol = gram.clone().cholesky().ok_or(Error::RankDeficient { expected: m + 1 })?;
        let l = chol.l_dirty();
        if (0..m).any(|j| l[(j, j)] * l[(j, j)] <= 1e-12 * gram[(j, j)]) {
            return Err(Error::RankDeficient { expected: m + 1 });
        }
        let b = chol.solve(&xc.tr_mul(&yc));
        let a = y_mean - b.tr_mul(&x_mean);
        let resid = &yc - &xc * &b;
        (b, a, resid)
    };
    let s = resid.tr_mul(&resid) / n as f64;
    let s_diag: Vec<f64> = s.diagonal().iter().copied().collect();
    let (omega, loglik) = match form {
        RegressionForm::Spherical => {
            let v = (s_diag.iter().sum::<f64>() / q as f64).max(VARIANCE_FLOOR);
            (DMatrix::from_diagonal_element(q, q, v), diag_loglik(n, &s_diag, &vec![v; q]))
        }
        RegressionForm::Diagonal => {
            let v: Vec<f64> = s_diag.iter().map(|&x| x.max(VARIANCE_FLOOR)).collect();
            (DMatrix::from_diagonal(&DVector::from_vec(v.clone())), diag_loglik(n, &s_diag, &v))
        }
        RegressionForm::General => {
            let chol = s.clone().cholesky().ok_or(Error::SingularOmega)?;
            if s.diagonal().iter().any(|&v| v < VARIANCE_FLOOR) {
                return Err(Error::SingularOmega);
            }
            let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            // tr(Ω⁻¹ S) = q at the MLE
            let loglik = -0.5 * n as f64 * (q as f64 * LN_2PI + log_det + q as f64);
            (s, loglik)
        }
    };
    let fit = RegressionFit { u: u_idx, r: r_idx, a, b, omega, form, loglik, bic: 0.0 };
    let bic = bic_value(loglik, fit.n_params(), n);
    Ok(RegressionFit { bic, ..fit })
}

/// Column means and diagonal MLE variances (averaged under `Spherical`),
/// floored at [`VARIANCE_FLOOR`].
pub fn fit_indep(data: &DataMatrix, w: &BTreeSet<usize>, form: IndepForm) -> Result<IndepFit> {
    let n = data.n();
    if w.is_empty() {
        return Err(Error::InvalidArgument("independent block needs at least one variable".into()));
    }
    if n < 2 {
        return Err(Error::InvalidData("independent block needs n >= 2".into()));
    }
    let idx: Vec<usize> = w.iter().copied().collect();
    let (yc, gamma) = centered(data.select_columns(&idx));
    let s_diag: Vec<f64> = yc.column_iter().map(|c| c.norm_squared() / n as f64).collect();
    let var: Vec<f64> = match form {
        IndepForm::Spherical => vec![(s_diag.iter().sum::<f64>() / idx.len() as f64).max(VARIANCE_FLOOR); idx.len()],
        IndepForm::Diagonal => s_diag.iter().map(|&v| v.max(VARIANCE_FLOOR)).collect(),
    };
    let loglik = diag_loglik(n, &s_diag, &var);
    let tau = DMatrix::from_diagonal(&DVector::from_vec(var));
    let fit = IndepFit { w: idx, gamma, tau, form, loglik, bic: 0.0 };
    let bic = bic_value(loglik, fit.n_params(), n);
    Ok(IndepFit { bic, ..fit })
}

/// Best form for a fixed (U, R); forms whose Ω is singular are skipped.
pub fn best_regression(
    data: &DataMatrix,
    u: &BTreeSet<usize>,
    r: &BTreeSet<usize>,
    forms: &[RegressionForm],
) -> Result<RegressionFit> {
    let mut best: Option<RegressionFit> = None;
    let mut err = Error::InvalidArgument("no regression form given".into());
    for &form in forms {
        match fit_regression(data, u, r, form) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.bic > b.bic) {
                    best = Some(fit);
                }
            }
            Err(e @ Error::SingularOmega) => err = e,
            Err(e) => return Err(e),
        }
    }
    best.ok_or(err)
}

pub fn best_indep(data: &DataMatrix, w: &BTreeSet<usize>, forms: &[IndepForm]) -> Result<IndepFit> {
    let mut best: Option<IndepFit> = None;
    for &form in forms {
        let fit = fit_indep(data, w, form)?;
        if best.as_ref().is_none_or(|b| fit.bic > b.bic) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no independent form given".into()))
}

/// Backward stepwise choice of predictors for the responses `u_vars`:
/// starting from all `candidates`, repeatedly drop the predictor whose
/// removal gives the largest regression BIC (best form at each candidate
/// set) while that improves on the current BIC.
pub fn select_predictors(
    data: &DataMatrix,
    u_vars: &BTreeSet<usize>,
    candidates: &BTreeSet<usize>,
    forms: &[RegressionForm],
) -> Result<(BTreeSet<usize>, RegressionForm)> {
    let mut r = candidates.clone();
    let mut current = best_regression(data, u_vars, &r, forms)?;
    while !r.is_empty() {
        let mut best: Option<(usize, RegressionFit)> = None;
        for &j in &r {
            let mut smaller = r.clone();
            smaller.remove(&j);
            let fit = best_regression(data, u_vars, &smaller, forms)?;
            if best.as_ref().is_none_or(|(_, b)| fit.bic > b.bic) {
                best = Some((j, fit));
            }
        }
        let (j, fit) = best.expect("non-empty predictor set");
        if fit.bic > current.bic {
            r.remove(&j);
            current = fit;
        } else {
            break;
        }
    }
    Ok((r, current.form))
}

/// Centered cross-products of every column, for fast single-response
/// regressions on arbitrary predictor subsets.
#[derive(Debug, Clone)]
pub struct CrossProducts {
    n: usize,
    c: DMatrix<f64>,
}

/// Outcome of a single-response predictor selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleSelection {
    pub predictors: Vec<usize>,
    pub bic: f64,
}

impl CrossProducts {
    pub fn new(data: &DataMatrix) -> Self {
        let (c, _) = centered(data.values().clone());
        Self { n: data.n(), c: c.tr_mul(&c) }
    }

    /// BIC of a single response with residual sum of squares `rss` and `m`
    /// predictors (intercept and variance counted on top).
    fn bic(&self, rss: f64, m: usize) -> f64 {
        let n = self.n as f64;
        let s = rss.max(0.0) / n;
        let v = s.max(VARIANCE_FLOOR);
        let loglik = -0.5 * n * (LN_2PI + v.ln()) - 0.5 * n * s / v;
        bic_value(loglik, m + 2, self.n)
    }

    /// Same search as [`select_predictors`] for one response, using the
    /// closed-form change in residual sum of squares when one predictor is
    /// dropped. An empty result means the variable is best modelled as
    /// independent of the candidates.
    pub fn select(&self, target: usize, candidates: &[usize]) -> Result<SingleSelection> {
        let m = candidates.len();
        let c_tt = self.c[(target, target)];
        if m == 0 {
            return Ok(SingleSelection { predictors: Vec::new(), bic: self.bic(c_tt, 0) });
        }
        if self.n <= m + 1 {
            return Err(Error::RankDeficient { expected: m + 1 });
        }
        let gram = DMatrix::from_fn(m, m, |a, b| self.c[(candidates[a], candidates[b])]);
        let rhs = DVector::from_fn(m, |a, _| self.c[(candidates[a], target)]);
        let chol = gram.clone().cholesky().ok_or(Error::RankDeficient { expected: m + 1 })?;
        {
            let l = chol.l_dirty();
            if (0..m).any(|j| l[(j, j)] * l[(j, j)] <= 1e-12 * gram[(j, j)]) {
                return Err(Error::RankDeficient { expected: m + 1 });
            }
        }
        let mut inv = chol.inverse();
        let mut beta = &inv * &rhs;
        let mut active: Vec<usize> = candidates.to_vec();
        let mut rss = c_tt - rhs.dot(&beta);
        let mut current = self.bic(rss, active.len());
        while !active.is_empty() {
            let mut best: Option<(usize, f64, f64)> = None;
            for i in 0..active.len() {
                let drop_rss = rss + beta[i] * beta[i] / inv[(i, i)];
                let bic = self.bic(drop_rss, active.len() - 1);
                if best.is_none_or(|(_, b, _)| bic > b) {
                    best = Some((i, bic, drop_rss));
                }
            }
            let (i, bic, drop_rss) = best.expect("non-empty");
            if bic <= current {
                break;
            }
            let col = inv.column(i).clone_owned();
            let pivot = inv[(i, i)];
            let bi = beta[i];
            inv = inv.remove_row(i).remove_column(i);
            let col = col.remove_row(i);
            inv -= &col * col.transpose() / pivot;
            beta = beta.remove_row(i) - col * (bi / pivot);
            active.remove(i);
            rss = drop_rss;
            current = bic;
        }
        Ok(SingleSelection { predictors: active, bic: current })
    }
}
