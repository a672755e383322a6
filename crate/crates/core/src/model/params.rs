use serde::{Deserialize, Serialize};

use super::ModelError;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power level in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Truncated normal law of the renewable power available at a relay (W).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal {
    pub mean: f64,
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Default for TruncatedNormal {
    fn default() -> Self {
        TruncatedNormal { mean: 2.0, variance: 0.25, lower: 0.0, upper: 2.4 }
    }
}

/// Physical and protocol constants of the relay network.
///
/// Powers are in watts, energies in joules, durations in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of relays `L`.
    pub relays: usize,
    /// Number of time slots `B`.
    pub slots: usize,
    /// Slot length `T_c`.
    pub slot_duration: f64,
    /// System bandwidth `W` (Hz).
    pub bandwidth: f64,
    /// Carrier frequency (Hz).
    pub carrier_frequency: f64,
    pub speed_of_light: f64,
    /// Transmit powers of terminal 1 and terminal 2.
    pub source_power: [f64; 2],
    /// Relay transmit power budget.
    pub relay_power_max: f64,
    /// Battery capacity of a relay.
    pub storage_capacity: f64,
    /// Battery leakage per slot.
    pub leakage: f64,
    /// Offset power drawn regardless of activity (`a_0`).
    pub offset_power: f64,
    /// Dimensionless scale of the radiated power (`a_t`).
    pub transmit_scale: f64,
    /// Power drawn while receiving (`a_r`).
    pub receive_power: f64,
    pub eta_rf: f64,
    pub eta_re: f64,
    /// Receiver noise variance `N_0` (W).
    pub noise_power: f64,
    pub path_loss_exponent: f64,
    /// Environment-dependent extra loss (dB).
    pub extra_loss_db: f64,
    /// Rician K-factor (dB). `f64::INFINITY` gives a pure line-of-sight channel.
    pub rician_k_db: f64,
    /// Terminal separation `D` (m).
    pub distance: f64,
    /// Battery charge of each relay before the first slot (length `relays`).
    pub initial_battery: Vec<f64>,
    pub renewable: TruncatedNormal,
}

impl Default for SystemParams {
    fn default() -> Self {
        let storage_capacity = 5.0;
        let relays = 3;
        SystemParams {
            relays,
            slots: 8,
            slot_duration: 0.175,
            bandwidth: 2e6,
            carrier_frequency: 2.45e9,
            speed_of_light: SPEED_OF_LIGHT,
            source_power: [dbm_to_watts(0.0); 2],
            relay_power_max: dbm_to_watts(0.0),
            storage_capacity,
            leakage: 10e-3,
            offset_power: 1.2,
            transmit_scale: 4e-3,
            receive_power: 1.2e-3,
            eta_rf: 0.4,
            eta_re: 0.3,
            noise_power: dbm_to_watts(-141.0),
            path_loss_exponent: 2.0,
            extra_loss_db: 0.0,
            rician_k_db: 7.78,
            distance: 50.0,
            initial_battery: vec![storage_capacity / 2.0; relays],
            renewable: TruncatedNormal::default(),
        }
    }
}

impl SystemParams {
    /// Default parameters resized to `relays` x `slots`, batteries at half capacity.
    pub fn with_size(relays: usize, slots: usize) -> Self {
        let mut p = SystemParams::default();
        p.resize(relays, slots);
        p
    }

    /// Changes the network size. Every relay starts at half capacity.
    pub fn resize(&mut self, relays: usize, slots: usize) {
        self.relays = relays;
        self.slots = slots;
        self.initial_battery = vec![self.storage_capacity / 2.0; relays];
    }

    /// Sets both terminal powers.
    pub fn set_source_power(&mut self, watts: f64) {
        self.source_power = [watts, watts];
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        fn bad(name: &'static str, reason: &str) -> ModelError {
            ModelError::InvalidParameter { name, reason: reason.to_string() }
        }
        if self.relays == 0 {
            return Err(bad("relays", "must be at least 1"));
        }
        if self.slots == 0 {
            return Err(bad("slots", "must be at least 1"));
        }
        let positive = [
            ("slot_duration", self.slot_duration),
            ("bandwidth", self.bandwidth),
            ("carrier_frequency", self.carrier_frequency),
            ("speed_of_light", self.speed_of_light),
            ("distance", self.distance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(name, "must be positive and finite"));
            }
        }
        let nonneg = [
            ("source_power[0]", self.source_power[0]),
            ("source_power[1]", self.source_power[1]),
            ("relay_power_max", self.relay_power_max),
            ("storage_capacity", self.storage_capacity),
            ("leakage", self.leakage),
            ("offset_power", self.offset_power),
            ("transmit_scale", self.transmit_scale),
            ("receive_power", self.receive_power),
            ("noise_power", self.noise_power),
            ("path_loss_exponent", self.path_loss_exponent),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(name, "must be nonnegative and finite"));
            }
        }
        for (name, v) in [("eta_rf", self.eta_rf), ("eta_re", self.eta_re)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(name, "must lie in [0, 1]"));
            }
        }
        if !self.extra_loss_db.is_finite() {
            return Err(bad("extra_loss_db", "must be finite"));
        }
        if self.rician_k_db.is_nan() || self.rician_k_db == f64::NEG_INFINITY {
            return Err(bad("rician_k_db", "must be a number or +inf"));
        }
        if self.initial_battery.len() != self.relays {
            return Err(bad("initial_battery", "length must equal the relay count"));
        }
        if self
            .initial_battery
            .iter()
            .any(|&e| !(e.is_finite() && (0.0..=self.storage_capacity).contains(&e)))
        {
            return Err(bad("initial_battery", "each charge must lie in [0, storage_capacity]"));
        }
        let re = &self.renewable;
        if !(re.lower >= 0.0 && re.upper > re.lower && re.upper.is_finite()) {
            return Err(ModelError::InvalidTruncation { lower: re.lower, upper: re.upper });
        }
        if !(re.variance >= 0.0 && re.mean.is_finite() && re.variance.is_finite()) {
            return Err(bad("renewable", "mean must be finite and variance nonnegative"));
        }
        Ok(())
    }

    /// Bits carried per slot per unit of `log2(1 + snr)`.
    pub fn bits_per_log2(&self) -> f64 {
        self.bandwidth * self.slot_duration / 2.0
    }
}
