//! Physical layer: geometry, channels, renewable arrivals, energy ledgers and rates.

mod channel;
mod decision;
mod energy;
mod params;
mod rate;
mod renewable;
mod scenario;

pub use channel::{path_loss, path_loss_db, sample_channels, ChannelSet, Geometry, Node, Point};
pub use decision::{ContinuousDecision, SelectionMatrix};
pub use energy::{
    check_feasible, consumed_energy, harvest_breakdown, harvested_energy, roll_ledger, EnergyLedger, Harvest,
    Verdict, Violation, FEASIBILITY_TOL,
};
pub use params::{dbm_to_watts, watts_to_dbm, SystemParams, TruncatedNormal, SPEED_OF_LIGHT};
pub use rate::{
    amplification_gain, bits_to_mbps, snr_and_rate, snr_and_rate_with, utility, utility_of, GainModel, RateResult,
    UtilityKind,
};
pub use renewable::{sample_renewable, truncated_normal_mean, RenewableTrace};
pub use scenario::{derive_seed, Scenario};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid truncation interval [{lower}, {upper}]")]
    InvalidTruncation { lower: f64, upper: f64 },
    #[error("path loss undefined at zero distance")]
    ZeroDistance,
    #[error("relay {relay} lies outside the deployment disk")]
    RelayOutsideDisk { relay: usize },
    #[error("amplification gain of relay {relay} in slot {slot} has a nonpositive denominator")]
    NonPositiveDenominator { relay: usize, slot: usize },
    #[error("shape mismatch: expected {expected:?}, got {got:?} for {what}")]
    Shape { what: &'static str, expected: (usize, usize), got: (usize, usize) },
}
