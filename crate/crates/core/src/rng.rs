// Copyright 2026 The pulseforge Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded random substreams.
//!
//! Every independent unit of work (restart, trace, benchmark run) draws from
//! its own ChaCha stream keyed by `(seed, index)`, so results do not depend on
//! evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Nested substream, e.g. `(seed, run, purpose)`.
pub fn substream2(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(b);
    rng
}
