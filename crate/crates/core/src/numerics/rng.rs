use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// Addressable random stream: `(master_seed, stream_index)` fully determines
/// the sequence. Resampling loops use replicate `b` as the stream index so
/// results do not depend on how replicates are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Independent sub-stream family keyed by `index`. Children of distinct
    /// parents never share a master seed in practice.
    pub fn child(&self, index: u64) -> RngStream {
        let seed = splitmix64(self.master_seed ^ splitmix64(self.stream_index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        RngStream::new(seed, index)
    }

    pub fn standard_normal_vector(&self, dim: usize) -> Vec<f64> {
        standard_normal_vector(dim, &mut self.generator())
    }
}

pub fn standard_normal_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}
