use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::gmm::{better, em_fit_matrix, CovarianceFamily, EmConfig, MixtureFit};
use crate::regression::{
    best_indep, best_regression, fit_indep, fit_regression, CrossProducts, IndepFit, IndepForm, RegressionFit,
    RegressionForm,
};

use super::VariableRoles;

/// Settings of the stepwise role search.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleSearchConfig {
    pub k_set: Vec<usize>,
    pub families: Vec<CovarianceFamily>,
    pub em: EmConfig,
    pub regression_forms: Vec<RegressionForm>,
    pub indep_forms: Vec<IndepForm>,
    /// Also try moving non-relevant variables back into S.
    pub allow_inclusion: bool,
    /// When set and more moves than this are available, rank moves by a
    /// one-iteration mixture update and fit only the best ones to convergence.
    pub screen: Option<usize>,
    /// When no move improves, refit the mixture with random starts as well
    /// and resume the search if that helped.
    pub polish: bool,
    /// Upper bound on accepted moves; `None` means 4p.
    pub max_steps: Option<usize>,
}

impl RoleSearchConfig {
    pub fn new(k_set: Vec<usize>, families: Vec<CovarianceFamily>) -> Self {
        Self {
            k_set,
            families,
            em: EmConfig::default(),
            regression_forms: RegressionForm::ALL.to_vec(),
            indep_forms: IndepForm::ALL.to_vec(),
            allow_inclusion: true,
            screen: None,
            polish: true,
            max_steps: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.em.seed = seed;
        self
    }
}

/// A complete model: mixture on S, regression of U on R, independent W.
#[derive(Debug, Clone)]
pub struct SelectedModel {
    pub roles: VariableRoles,
    pub mixture: MixtureFit,
    pub regression: Option<RegressionFit>,
    pub indep: Option<IndepFit>,
    pub criterion: f64,
}

impl SelectedModel {
    fn assemble(
        roles: VariableRoles,
        mixture: MixtureFit,
        regression: Option<RegressionFit>,
        indep: Option<IndepFit>,
    ) -> Self {
        let criterion =
            mixture.bic + regression.as_ref().map_or(0.0, |r| r.bic) + indep.as_ref().map_or(0.0, |w| w.bic);
        Self { roles, mixture, regression, indep, criterion }
    }
}

/// Role assigned during the search to one variable outside S: regression on
/// `predictors`, or independent when that is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableBlock {
    pub var: usize,
    pub predictors: Vec<usize>,
    pub bic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Start,
    Exclude(usize),
    Include(usize),
    /// Mixture refitted with random starts, roles unchanged.
    Polish,
}

/// State after an accepted move.
#[derive(Debug, Clone)]
pub struct SearchStep {
    pub mv: Move,
    pub roles: VariableRoles,
    pub mixture_k: usize,
    pub mixture_family: CovarianceFamily,
    pub mixture_loglik: f64,
    pub mixture_bic: f64,
    /// Block of every variable outside S, refitted on the current S.
    pub blocks: Vec<VariableBlock>,
    /// Mixture BIC plus the BIC of every block.
    pub criterion: f64,
    /// Starting mixture BIC plus the gains of all accepted moves.
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct RoleSearch {
    pub model: SelectedModel,
    pub trace: Vec<SearchStep>,
}

/// BIC sum of the three blocks for fixed roles, K, family and forms.
pub fn criterion(
    data: &DataMatrix,
    roles: &VariableRoles,
    k: usize,
    family: CovarianceFamily,
    form_r: RegressionForm,
    form_l: IndepForm,
    em: &EmConfig,
) -> Result<SelectedModel> {
    roles.validate(data.p())?;
    let s: Vec<usize> = roles.s.iter().copied().collect();
    let mixture = em_fit_matrix(&data.select_columns(&s), k, family, em, None)?;
    let regression = if roles.u.is_empty() { None } else { Some(fit_regression(data, &roles.u, &roles.r, form_r)?) };
    let indep = if roles.w.is_empty() { None } else { Some(fit_indep(data, &roles.w, form_l)?) };
    Ok(SelectedModel::assemble(roles.clone(), mixture, regression, indep))
}

/// Like [`criterion`] with the mixture grid and both forms chosen by BIC.
pub fn evaluate_roles(data: &DataMatrix, roles: &VariableRoles, config: &RoleSearchConfig) -> Result<SelectedModel> {
    roles.validate(data.p())?;
    let s: Vec<usize> = roles.s.iter().copied().collect();
    let per_k = fit_grid(&data.select_columns(&s), config, &config.em, &[], true)?;
    let mixture = overall_best(&per_k).clone();
    let regression =
        if roles.u.is_empty() { None } else { Some(best_regression(data, &roles.u, &roles.r, &config.regression_forms)?) };
    let indep = if roles.w.is_empty() { None } else { Some(best_indep(data, &roles.w, &config.indep_forms)?) };
    Ok(SelectedModel::assemble(roles.clone(), mixture, regression, indep))
}

/// Best fit for every K of the grid that can be fitted. Cells with a
/// matching fit in `warm` start from its responsibilities; random starts
/// are used only when `random` is set.
fn fit_grid(
    y: &DMatrix<f64>,
    config: &RoleSearchConfig,
    em: &EmConfig,
    warm: &[MixtureFit],
    random: bool,
) -> Result<Vec<MixtureFit>> {
    let warm_only = EmConfig { n_starts: Some(0), ..em.clone() };
    let em = if random { em } else { &warm_only };
    let mut out = Vec::new();
    let mut last_err = Error::DegenerateFit { starts: 0 };
    for &k in &config.k_set {
        let resp = warm.iter().find(|f| f.k == k).map(|f| &f.resp);
        if resp.is_none() && !random {
            continue;
        }
        let mut best: Option<MixtureFit> = None;
        for &family in &config.families {
            match em_fit_matrix(y, k, family, em, resp) {
                Ok(fit) => {
                    if best.as_ref().is_none_or(|b| better(&fit, b)) {
                        best = Some(fit);
                    }
                }
                Err(e) => last_err = e,
            }
        }
        out.extend(best);
    }
    if out.is_empty() {
        return Err(last_err);
    }
    Ok(out)
}

fn overall_best(per_k: &[MixtureFit]) -> &MixtureFit {
    let mut best = &per_k[0];
    for fit in &per_k[1..] {
        if better(fit, best) {
            best = fit;
        }
    }
    best
}

struct State {
    s: BTreeSet<usize>,
    per_k: Vec<MixtureFit>,
    best: usize,
    /// Sum of the accepted move gains on top of the starting mixture BIC.
    score: f64,
}

impl State {
    fn mixture(&self) -> &MixtureFit {
        &self.per_k[self.best]
    }
}

fn roles_from_blocks(s: &BTreeSet<usize>, blocks: &[VariableBlock]) -> VariableRoles {
    let mut u = BTreeSet::new();
    let mut r = BTreeSet::new();
    let mut w = BTreeSet::new();
    for b in blocks {
        if b.predictors.is_empty() {
            w.insert(b.var);
        } else {
            u.insert(b.var);
            r.extend(b.predictors.iter().copied());
        }
    }
    VariableRoles { s: s.clone(), r, u, w }
}

struct Searcher<'a> {
    data: &'a DataMatrix,
    config: &'a RoleSearchConfig,
    cross: CrossProducts,
}

impl Searcher<'_> {
    fn block(&self, var: usize, s: &BTreeSet<usize>) -> Result<VariableBlock> {
        let cands: Vec<usize> = s.iter().copied().collect();
        let sel = self.cross.select(var, &cands)?;
        Ok(VariableBlock { var, predictors: sel.predictors, bic: sel.bic })
    }

    fn blocks(&self, s: &BTreeSet<usize>) -> Result<Vec<VariableBlock>> {
        (0..self.data.p()).filter(|j| !s.contains(j)).map(|var| self.block(var, s)).collect()
    }

    fn record(&self, state: &State, mv: Move) -> Result<SearchStep> {
        let blocks = self.blocks(&state.s)?;
        let m = state.mixture();
        let criterion = m.bic + blocks.iter().map(|b| b.bic).sum::<f64>();
        Ok(SearchStep {
            mv,
            roles: roles_from_blocks(&state.s, &blocks),
            mixture_k: m.k,
            mixture_family: m.family,
            mixture_loglik: m.loglik,
            mixture_bic: m.bic,
            blocks,
            criterion,
            score: state.score,
        })
    }

    fn mixtures(&self, s: &BTreeSet<usize>, em: &EmConfig, warm: &[MixtureFit], random: bool) -> Option<(Vec<MixtureFit>, usize)> {
        let cols: Vec<usize> = s.iter().copied().collect();
        let per_k = fit_grid(&self.data.select_columns(&cols), self.config, em, warm, random).ok()?;
        let best = (0..per_k.len()).fold(0, |b, i| if better(&per_k[i], &per_k[b]) { i } else { b });
        Some((per_k, best))
    }

    /// Gain of a move given the mixture BIC it reaches: an excluded variable
    /// adds its regression block, an included one gives its block up.
    fn gain(&self, current: &State, mv: Move, s: &BTreeSet<usize>, mix_bic: f64) -> Option<f64> {
        let delta = mix_bic - current.mixture().bic;
        match mv {
            Move::Exclude(j) => Some(delta + self.block(j, s).ok()?.bic),
            Move::Include(j) => Some(delta - self.block(j, &current.s).ok()?.bic),
            Move::Start | Move::Polish => None,
        }
    }

    fn moves(&self, current: &State) -> Vec<(Move, BTreeSet<usize>)> {
        let mut out = Vec::new();
        if current.s.len() > 1 {
            for &j in &current.s {
                let mut s = current.s.clone();
                s.remove(&j);
                out.push((Move::Exclude(j), s));
            }
        }
        if self.config.allow_inclusion {
            for j in (0..self.data.p()).filter(|j| !current.s.contains(j)) {
                let mut s = current.s.clone();
                s.insert(j);
                out.push((Move::Include(j), s));
            }
        }
        out
    }

    /// Best strictly improving move, if any.
    fn step(&self, current: &State) -> Option<(Move, State)> {
        let mut moves = self.moves(current);
        if let Some(limit) = self.config.screen {
            if moves.len() > limit {
                let one_step = EmConfig { max_iter: 1, ..self.config.em.clone() };
                let mut scored: Vec<(f64, (Move, BTreeSet<usize>))> = moves
                    .into_iter()
                    .filter_map(|(mv, s)| {
                        let (per_k, best) = self.mixtures(&s, &one_step, &current.per_k, false)?;
                        Some((self.gain(current, mv, &s, per_k[best].bic)?, (mv, s)))
                    })
                    .collect();
                scored.sort_by(|a, b| b.0.total_cmp(&a.0));
                scored.truncate(limit);
                // restore the tie-break order among the survivors
                moves = scored.into_iter().map(|(_, m)| m).collect();
                moves.sort_by_key(|(mv, _)| match *mv {
                    Move::Exclude(j) => (0, j),
                    Move::Include(j) => (1, j),
                    Move::Start | Move::Polish => (2, 0),
                });
            }
        }
        let mut best: Option<(Move, State, f64)> = None;
        for (mv, s) in moves {
            let Some((per_k, idx)) = self.mixtures(&s, &self.config.em, &current.per_k, false) else { continue };
            let Some(gain) = self.gain(current, mv, &s, per_k[idx].bic) else { continue };
            if gain > 0.0 && best.as_ref().is_none_or(|(_, _, b)| gain > *b) {
                best = Some((mv, State { s, per_k, best: idx, score: current.score + gain }, gain));
            }
        }
        best.map(|(mv, s, _)| (mv, s))
    }

    /// Refit with random starts added; `None` unless the mixture improves.
    fn polish(&self, state: &State) -> Option<State> {
        let (per_k, best) = self.mixtures(&state.s, &self.config.em, &state.per_k, true)?;
        let gain = per_k[best].bic - state.mixture().bic;
        (gain > 0.0).then(|| State { s: state.s.clone(), per_k, best, score: state.score + gain })
    }
}

/// Stepwise search over variable roles starting from every variable
/// relevant. A move takes one variable out of S, where it is regressed on a
/// stepwise-chosen subset of the remaining relevant variables or left
/// independent, or brings one back in. Moves are scored by the change in the
/// mixture BIC plus the BIC of the moved variable's own block, and only
/// strict gains are accepted. The returned model regresses the redundant
/// variables jointly on the union of their predictors.
pub fn select_roles(data: &DataMatrix, config: &RoleSearchConfig) -> Result<RoleSearch> {
    if data.p() < 2 {
        return Err(Error::InvalidArgument("role search needs at least two variables".into()));
    }
    if config.k_set.is_empty() || config.families.is_empty() {
        return Err(Error::InvalidArgument("empty K set or family list".into()));
    }
    if config.regression_forms.is_empty() || config.indep_forms.is_empty() {
        return Err(Error::InvalidArgument("empty form list".into()));
    }
    let searcher = Searcher { data, config, cross: CrossProducts::new(data) };
    let all: BTreeSet<usize> = (0..data.p()).collect();
    let (per_k, best) = searcher
        .mixtures(&all, &config.em, &[], true)
        .ok_or_else(|| Error::SearchFailed("no mixture could be fitted on all variables".into()))?;
    let score = per_k[best].bic;
    let mut state = State { s: all, per_k, best, score };
    let mut trace = vec![searcher.record(&state, Move::Start)?];
    let max_steps = config.max_steps.unwrap_or(4 * data.p());
    let mut polished = false;
    for _ in 0..max_steps {
        if let Some((mv, next)) = searcher.step(&state) {
            state = next;
            polished = false;
            trace.push(searcher.record(&state, mv)?);
            continue;
        }
        if polished || !config.polish {
            break;
        }
        polished = true;
        match searcher.polish(&state) {
            Some(next) => {
                state = next;
                trace.push(searcher.record(&state, Move::Polish)?);
            }
            None => break,
        }
    }

    let roles = trace.last().expect("start is recorded").roles.clone();
    let regression = if roles.u.is_empty() {
        None
    } else {
        Some(best_regression(data, &roles.u, &roles.r, &config.regression_forms)?)
    };
    let indep = if roles.w.is_empty() { None } else { Some(best_indep(data, &roles.w, &config.indep_forms)?) };
    let mixture = state.per_k.swap_remove(state.best);
    Ok(RoleSearch { model: SelectedModel::assemble(roles, mixture, regression, indep), trace })
}
