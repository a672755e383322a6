//! Geometric programming: posynomials, condensation, log-space solver and SCA.

mod convex;
mod posynomial;
mod problem;
mod sca;
mod solver;

pub use convex::{to_convex_form, ConvexProblem, LogSumExp};
pub use posynomial::{condense, Monomial, Posynomial};
pub use problem::{Constraint, GpProblem, VarBound};
pub use sca::{run_sca, ScaOutcome, ScaSettings};
pub use solver::{solve_convex, KktResiduals, Solution, SolverOptions};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("a posynomial needs at least one term")]
    EmptyPosynomial,
    #[error("monomial coefficient {0} is negative or not finite")]
    BadCoefficient(f64),
    #[error("variable z{0} is not assigned")]
    MissingVariable(usize),
    #[error("variable z{var} = {value} is not positive")]
    NonPositive { var: usize, value: f64 },
    #[error("bounds of variable z{var} are inconsistent")]
    BadBound { var: usize },
    #[error("cannot condense a posynomial that vanishes at the reference point")]
    ZeroCondensation,
    #[error("objective factor is identically zero")]
    ZeroObjective,
    #[error("constant constraint `{0}` cannot hold")]
    ConstantInfeasible(String),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("initial point violates `{label}` (value {value})")]
    InfeasibleStart { label: String, value: f64 },
}
