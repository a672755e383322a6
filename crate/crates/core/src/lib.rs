pub mod gp;
pub mod grid;
pub mod harness;
pub mod model;
pub mod selection;
pub mod subproblem;
