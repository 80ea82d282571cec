//! Entropy of observed annotations against the uniform distribution over
//! all consistent subgraphs. All logarithms are base 2.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

/// `log2(x)` for a positive big integer, accurate to well under `1e-9`.
///
/// Uses the top 64 bits as a mantissa and the remaining bit length as the
/// exponent, so it never converts the whole integer to floating point.
pub fn log2_count(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "log2 of zero");
    let bits = x.bits();
    if bits <= 64 {
        return libm::log2(x.to_u64().expect("fits in u64") as f64);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("64 bits");
    libm::log2(top as f64) + shift as f64
}

/// Shannon entropy in bits of the empirical distribution given by
/// occurrence counts. Zero counts are ignored; an empty input has entropy 0.
pub fn entropy_bits<I>(frequencies: I) -> f64
where
    I: IntoIterator<Item = u64>,
    I::IntoIter: Clone,
{
    let it = frequencies.into_iter();
    let total: u64 = it.clone().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = it
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * libm::log2(p)
        })
        .sum();
    h.max(0.0)
}

/// `h / log2(count)`; 0 when the maximum entropy is 0.
pub fn entropy_ratio(h: f64, count: &BigUint) -> f64 {
    let max = log2_count(count);
    if max == 0.0 {
        0.0
    } else {
        h / max
    }
}

/// Ratio estimated from count bounds: the endpoints are the ratios against
/// the upper and the lower bound, and the estimate is their mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEstimate {
    pub estimate: f64,
    /// Ratio against the upper bound.
    pub low: f64,
    /// Ratio against the lower bound.
    pub high: f64,
}

pub fn estimated_ratio(h: f64, lower: &BigUint, upper: &BigUint) -> RatioEstimate {
    let low = entropy_ratio(h, upper);
    let high = entropy_ratio(h, lower);
    RatioEstimate {
        estimate: (low + high) / 2.0,
        low,
        high,
    }
}
