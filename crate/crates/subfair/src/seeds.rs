//! Seed derivation.
//!
//! Every random choice in the crate flows from one root seed through the
//! derivations below, so a whole experiment is reproducible from a single
//! integer. Stages of a pipeline derive distinct streams with [`derive`];
//! indexed repetitions (demonstration i, sample s) use plain addition on the
//! already-derived stage seed.

/// Pipeline stage tags. Keeping them in one place avoids accidental stream
/// collisions between stages that share a root seed.
pub mod stage {
    pub const SPLIT: u64 = 0x01;
    pub const DEMOS: u64 = 0x02;
    pub const TRAIN_SAMPLES: u64 = 0x03;
    pub const EVAL_DEMOS: u64 = 0x04;
    pub const NOISE: u64 = 0x05;
    pub const PP_SPLIT: u64 = 0x06;
    pub const THRESHOLDS: u64 = 0x07;
    pub const EVAL_SUBSET: u64 = 0x08;
    pub const BASELINE: u64 = 0x09;
}

/// Derives a stage seed from a base seed and a stage tag (splitmix64 finalizer
/// over the xor of base and a golden-ratio multiple of the tag).
pub fn derive(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the i-th repetition of a stage: stage seed plus index.
pub fn indexed(stage_seed: u64, index: u64) -> u64 {
    stage_seed.wrapping_add(index)
}
