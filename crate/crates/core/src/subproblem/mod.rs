//! Continuous power-splitting and power allocation for a fixed relay selection.

mod builder;
mod coefficients;
mod evaluate;

pub use builder::{build_max_min, build_max_sum, BetaPolicy, SubproblemBuilder, VarLayout, SNAP_BELOW, VARIABLE_FLOOR};
pub use coefficients::{energy_coefficients, snr_coefficients, EnergyCoefficients, SnrCoefficients};
pub use evaluate::{initial_decision, true_utility, Evaluation, Evaluator, TrueUtility};

#[cfg(test)]
mod tests;
