use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sample_channels, sample_renewable, ChannelSet, Geometry, ModelError, RenewableTrace, SystemParams};

/// Mixes a purpose tag into a seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, purpose: u64) -> u64 {
    let mut z = seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One random network realization: placement, fading and renewable arrivals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: SystemParams,
    pub geometry: Geometry,
    pub channels: ChannelSet,
    pub renewable: RenewableTrace,
}

impl Scenario {
    pub fn sample(params: &SystemParams, seed: u64) -> Result<Scenario, ModelError> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
        let geometry = Geometry::sample(params, &mut rng);
        let channels = sample_channels(params, &geometry, derive_seed(seed, 2))?;
        let renewable = sample_renewable(params, derive_seed(seed, 3))?;
        Ok(Scenario { params: params.clone(), geometry, channels, renewable })
    }

    pub fn relays(&self) -> usize {
        self.params.relays
    }

    pub fn slots(&self) -> usize {
        self.params.slots
    }
}
