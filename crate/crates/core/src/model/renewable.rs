use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::{ModelError, SystemParams, TruncatedNormal};
use crate::grid::Grid;

/// Renewable power `phi[l, b]` available to relay `l` during slot `b` (W).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableTrace {
    pub phi: Grid<f64>,
}

impl RenewableTrace {
    pub fn constant(relays: usize, slots: usize, watts: f64) -> Self {
        RenewableTrace { phi: Grid::filled(relays, slots, watts) }
    }
}

fn check_interval(law: &TruncatedNormal) -> Result<(), ModelError> {
    if !(law.lower >= 0.0 && law.upper > law.lower && law.upper.is_finite()) {
        return Err(ModelError::InvalidTruncation { lower: law.lower, upper: law.upper });
    }
    if !(law.variance >= 0.0 && law.variance.is_finite() && law.mean.is_finite()) {
        return Err(ModelError::InvalidParameter {
            name: "renewable",
            reason: "mean must be finite and variance nonnegative".into(),
        });
    }
    Ok(())
}

/// Draws i.i.d. truncated-normal renewable power for every relay and slot.
///
/// Sampling is by inverse CDF restricted to the truncation interval. A zero
/// variance yields the mean clamped into the interval.
pub fn sample_renewable(params: &SystemParams, seed: u64) -> Result<RenewableTrace, ModelError> {
    let law = &params.renewable;
    check_interval(law)?;
    let (lo, hi) = (law.lower, law.upper);
    if law.variance == 0.0 {
        let v = law.mean.clamp(lo, hi);
        return Ok(RenewableTrace::constant(params.relays, params.slots, v));
    }
    let normal = Normal::new(law.mean, law.variance.sqrt()).map_err(|e| ModelError::InvalidParameter {
        name: "renewable",
        reason: e.to_string(),
    })?;
    let (cdf_lo, cdf_hi) = (normal.cdf(lo), normal.cdf(hi));
    if cdf_hi - cdf_lo < 1e-12 {
        return Err(ModelError::InvalidParameter {
            name: "renewable",
            reason: "truncation interval carries negligible probability".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = Grid::from_fn(params.relays, params.slots, |_, _| {
        let u = cdf_lo + (cdf_hi - cdf_lo) * rng.random::<f64>();
        normal.inverse_cdf(u).clamp(lo, hi)
    });
    Ok(RenewableTrace { phi })
}

/// Closed-form mean of the truncated normal law.
pub fn truncated_normal_mean(law: &TruncatedNormal) -> f64 {
    if law.variance == 0.0 {
        return law.mean.clamp(law.lower, law.upper);
    }
    let sd = law.variance.sqrt();
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    let a = (law.lower - law.mean) / sd;
    let b = (law.upper - law.mean) / sd;
    law.mean + sd * (std.pdf(a) - std.pdf(b)) / (std.cdf(b) - std.cdf(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_stay_in_interval() {
        let p = SystemParams::with_size(20, 50);
        let re = sample_renewable(&p, 1).unwrap();
        assert!(re.phi.iter().all(|&x| (0.0..=2.4).contains(&x)));
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let mut p = SystemParams::with_size(3, 4);
        p.renewable.variance = 0.0;
        let re = sample_renewable(&p, 5).unwrap();
        assert!(re.phi.iter().all(|&x| x == 2.0));
    }

    #[test]
    fn empty_interval_is_rejected() {
        let mut p = SystemParams::default();
        p.renewable.upper = 0.0;
        assert!(matches!(sample_renewable(&p, 0), Err(ModelError::InvalidTruncation { .. })));
    }

    #[test]
    fn sample_mean_matches_closed_form() {
        let p = SystemParams::with_size(100, 1000);
        let re = sample_renewable(&p, 77).unwrap();
        let mean = re.phi.iter().sum::<f64>() / re.phi.as_slice().len() as f64;
        // Independent numerical integration of x f(x) over [0, 2.4].
        let (mu, sd) = (2.0f64, 0.5f64);
        let pdf = |x: f64| (-(x - mu).powi(2) / (2.0 * sd * sd)).exp();
        let n = 200_000;
        let h = 2.4 / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            num += x * pdf(x);
            den += pdf(x);
        }
        let oracle = num / den;
        assert!((truncated_normal_mean(&p.renewable) - oracle).abs() < 1e-6);
        assert!((mean / oracle - 1.0).abs() < 0.01, "{mean} vs {oracle}");
    }

    #[test]
    fn seeded_determinism() {
        let p = SystemParams::default();
        assert_eq!(sample_renewable(&p, 3).unwrap(), sample_renewable(&p, 3).unwrap());
    }
}
