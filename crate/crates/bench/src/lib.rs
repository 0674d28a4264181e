//! Fixtures shared by the benchmarks.

use num_bigint::BigUint;

use circlestat_core::classify::weak_witness_prop34;
use circlestat_core::membership::witness_half_digits;
use circlestat_core::presets::sequence_preset;
use circlestat_core::{DigitExpansion, EnumeratedSequence};

pub fn full_factorial() -> EnumeratedSequence {
    sequence_preset("factorial", true).expect("preset")
}

pub fn full_even() -> EnumeratedSequence {
    sequence_preset("thm39-full-even", false).expect("preset")
}

pub fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

/// Half digits on the recursive support, long enough for `n` terms.
pub fn half_digit_witness(e: &EnumeratedSequence, n: u64) -> DigitExpansion {
    let a = weak_witness_prop34(e, 30, 5000).expect("witness").set();
    let k_max = e.schedule().index_map_reaching(n).expect("index map").last_k();
    let levels = (2 * k_max + 2).min(a.horizon().unwrap_or(u64::MAX));
    witness_half_digits(&a, e.base(), levels).expect("element")
}
