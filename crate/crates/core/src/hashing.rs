//! Stable feature hashing shared by the tagger and the classifiers.
//!
//! FNV-1a over `template \x1f value`, masked to the configured number of bits.
//! The hash must not change between releases since persisted models store
//! hashed ids.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureHasher {
    bits: u32,
}

impl FeatureHasher {
    pub fn new(bits: u32) -> Self {
        assert!(
            (1..=32).contains(&bits),
            "feature space bits must be in 1..=32"
        );
        FeatureHasher { bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn hash(&self, template: &str, value: &str) -> u32 {
        let mut h = FNV_OFFSET;
        for &b in template
            .as_bytes()
            .iter()
            .chain(&[0x1f])
            .chain(value.as_bytes())
        {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        let mask = if self.bits == 32 {
            u32::MAX as u64
        } else {
            (1u64 << self.bits) - 1
        };
        (h & mask) as u32
    }
}
