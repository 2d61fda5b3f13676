//! Seeded, platform-independent random streams.
//!
//! Every random decision in the crate draws from a ChaCha8 generator keyed by
//! `(seed, purpose, index)`. ChaCha is counter-based, so a stream is fully
//! determined by its key and never depends on how many values other streams
//! have consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// What a random stream is used for. Each purpose gets a disjoint stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Purpose {
    Init = 1,
    Shuffle = 2,
    Dropout = 3,
    Split = 4,
    Synthetic = 5,
    Test = 6,
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 40) ^ index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u32> = (0..4).map(|_| 0).scan(stream(3, Purpose::Init, 0), |r, _: u32| Some(r.gen())).collect();
        let b: Vec<u32> = (0..4).map(|_| 0).scan(stream(3, Purpose::Init, 0), |r, _: u32| Some(r.gen())).collect();
        let c: Vec<u32> = (0..4).map(|_| 0).scan(stream(3, Purpose::Shuffle, 0), |r, _: u32| Some(r.gen())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn known_first_value() {
        // Pins the generator so an upstream algorithm change cannot silently
        // alter every seeded experiment.
        let mut r = stream(1, Purpose::Init, 0);
        assert_eq!(r.gen::<u64>(), 4365066264658621796);
    }
}
