use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Partition of the variables into relevant (`s`), redundant (`u`) and
/// independent (`w`) roles, with the redundant block's predictors `r ⊆ s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VariableRoles {
    pub s: BTreeSet<usize>,
    pub r: BTreeSet<usize>,
    pub u: BTreeSet<usize>,
    pub w: BTreeSet<usize>,
}

impl VariableRoles {
    /// Validated constructor.
    pub fn new(
        p: usize,
        s: BTreeSet<usize>,
        r: BTreeSet<usize>,
        u: BTreeSet<usize>,
        w: BTreeSet<usize>,
    ) -> Result<Self> {
        let roles = Self { s, r, u, w };
        roles.validate(p)?;
        Ok(roles)
    }

    /// Every variable relevant.
    pub fn all_relevant(p: usize) -> Self {
        Self { s: (0..p).collect(), r: BTreeSet::new(), u: BTreeSet::new(), w: BTreeSet::new() }
    }

    pub fn p(&self) -> usize {
        self.s.len() + self.u.len() + self.w.len()
    }

    /// Checks the partition invariants against `p` variables.
    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("invalid roles: {msg}")));
        if self.s.is_empty() {
            return bad("no relevant variable");
        }
        if !self.s.is_disjoint(&self.u) || !self.s.is_disjoint(&self.w) || !self.u.is_disjoint(&self.w) {
            return bad("role sets overlap");
        }
        let covered: BTreeSet<usize> = self.s.iter().chain(&self.u).chain(&self.w).copied().collect();
        if covered != (0..p).collect() {
            return bad("roles do not cover every variable exactly once");
        }
        if !self.r.is_subset(&self.s) {
            return bad("predictors outside the relevant set");
        }
        if self.r.is_empty() != self.u.is_empty() {
            return bad("predictors present without redundant variables or vice versa");
        }
        Ok(())
    }
}
