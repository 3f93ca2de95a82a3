use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::bits::BitString;
use crate::{Error, Result};

/// Secret round-type key: bit `j` is 1 for a verification round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundKey {
    pub kappa: BitString,
    pub weight: usize,
}

/// A key together with who holds it and what leaked to the adversary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeyGrant {
    pub key: RoundKey,
    pub holders: Vec<usize>,
    /// Sorted key positions exposed to the adversary.
    pub leaked: Vec<usize>,
}

/// Uniform weight-`k` key of length `L` shared by `participants`, with a
/// uniformly chosen `round(leak_fraction · L)` positions leaked.
pub fn acka_generate<R: Rng + ?Sized>(
    participants: &[usize],
    l: usize,
    k: usize,
    leak_fraction: f64,
    rng: &mut R,
) -> Result<KeyGrant> {
    if k > l {
        return Err(Error::invalid(format!("key weight {k} exceeds length {l}")));
    }
    if !(0.0..=1.0).contains(&leak_fraction) {
        return Err(Error::invalid("leak fraction must lie in [0, 1]"));
    }
    if participants.is_empty() {
        return Err(Error::invalid("key needs at least one holder"));
    }
    let mut kappa = BitString::zeros(l);
    for pos in index::sample(rng, l, k) {
        kappa.set(pos, 1);
    }
    let leak_count = ((leak_fraction * l as f64).round() as usize).min(l);
    let mut leaked = index::sample(rng, l, leak_count).into_vec();
    leaked.sort_unstable();
    Ok(KeyGrant {
        key: RoundKey { kappa, weight: k },
        holders: participants.to_vec(),
        leaked,
    })
}

/// `h₂(k/L)·L` bits.
pub fn key_entropy_length(l: usize, k: usize) -> Result<f64> {
    if k > l {
        return Err(Error::invalid(format!("key weight {k} exceeds length {l}")));
    }
    if k == 0 || k == l {
        return Ok(0.0);
    }
    let p = k as f64 / l as f64;
    let h = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    Ok(h * l as f64)
}
