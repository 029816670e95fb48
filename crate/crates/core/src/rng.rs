//! Deterministic random streams.
//!
//! A stream is identified by a master seed. Each `(cycle, ant)` pair gets its
//! own generator derived by hashing the labels into the seed, so the draws an
//! ant sees do not depend on the order in which ants or trials are executed.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type AntRng = Xoshiro256PlusPlus;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    master_seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        RngStream { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Generator for one ant's walk in one cycle.
    pub fn fork(&self, cycle: u64, ant: u64) -> AntRng {
        let h = splitmix64(self.master_seed ^ 0x5851_F42D_4C95_7F2D);
        let h = splitmix64(h ^ cycle);
        let h = splitmix64(h ^ ant.rotate_left(32));
        Xoshiro256PlusPlus::seed_from_u64(h)
    }

    /// Independent child stream, used for per-trial seeds.
    pub fn child(&self, index: u64) -> RngStream {
        let h = splitmix64(self.master_seed ^ 0x2545_F491_4F6C_DD1D);
        RngStream::new(splitmix64(h.wrapping_add(index)))
    }
}
