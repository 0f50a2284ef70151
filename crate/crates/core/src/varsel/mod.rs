//! Variable role selection for model-based clustering: relevant variables
//! drive the mixture, redundant ones are regressed on a subset of them and
//! the rest are independent Gaussians. Models are compared by the sum of
//! the three block BICs.

mod roles;
mod search;

pub use roles::VariableRoles;
pub use search::{
    criterion, evaluate_roles, select_roles, Move, RoleSearch, RoleSearchConfig, SearchStep, SelectedModel,
    VariableBlock,
};
pub use crate::regression::select_predictors;
