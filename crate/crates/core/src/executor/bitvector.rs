use std::collections::HashSet;

use crate::plan::FilterMode;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_key(key: &[i64], seed: u64) -> u64 {
    key.iter()
        .fold(mix(seed), |h, &v| mix(h ^ (v as u64).wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

/// Bloom filter with double hashing.
#[derive(Debug, Clone)]
pub struct BloomFilter {
    words: Vec<u64>,
    bits: u64,
    hashes: u32,
}

impl BloomFilter {
    /// Sized for `expected` keys at false-positive rate `fp_rate`.
    pub fn with_rate(expected: usize, fp_rate: f64) -> Self {
        let n = expected.max(1) as f64;
        let p = fp_rate.clamp(1e-12, 0.999);
        let ln2 = std::f64::consts::LN_2;
        let bits = ((-n * p.ln()) / (ln2 * ln2)).ceil().max(64.0) as u64;
        let hashes = ((bits as f64 / n) * ln2).round().clamp(1.0, 16.0) as u32;
        Self {
            words: vec![0; bits.div_ceil(64) as usize],
            bits,
            hashes,
        }
    }

    fn positions(&self, key: &[i64]) -> impl Iterator<Item = u64> + '_ {
        let h1 = hash_key(key, 0x5151);
        let h2 = hash_key(key, 0xa3a3) | 1;
        (0..self.hashes as u64).map(move |i| h1.wrapping_add(i.wrapping_mul(h2)) % self.bits)
    }

    pub fn insert(&mut self, key: &[i64]) {
        let pos: Vec<u64> = self.positions(key).collect();
        for p in pos {
            self.words[(p / 64) as usize] |= 1 << (p % 64);
        }
    }

    pub fn contains(&self, key: &[i64]) -> bool {
        self.positions(key)
            .all(|p| self.words[(p / 64) as usize] & (1 << (p % 64)) != 0)
    }

    pub fn bit_count(&self) -> u64 {
        self.bits
    }

    pub fn hash_count(&self) -> u32 {
        self.hashes
    }
}

/// Membership structure built from a hash join's build-side keys.
#[derive(Debug, Clone)]
pub enum RuntimeBitvector {
    /// Exact key set.
    Perfect(HashSet<Vec<i64>>),
    Lossy(BloomFilter),
}

impl RuntimeBitvector {
    pub fn build<'a>(mode: FilterMode, keys: impl IntoIterator<Item = &'a [i64]>, expected: usize) -> Self {
        match mode {
            FilterMode::Lossy(fp) if fp > 0.0 => {
                let mut bloom = BloomFilter::with_rate(expected, fp);
                for k in keys {
                    bloom.insert(k);
                }
                RuntimeBitvector::Lossy(bloom)
            }
            _ => RuntimeBitvector::Perfect(keys.into_iter().map(<[i64]>::to_vec).collect()),
        }
    }

    pub fn contains(&self, key: &[i64]) -> bool {
        match self {
            RuntimeBitvector::Perfect(set) => set.contains(key),
            RuntimeBitvector::Lossy(bloom) => bloom.contains(key),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_is_exact() {
        let keys: Vec<Vec<i64>> = (0..100).map(|i| vec![i * 2]).collect();
        let bv = RuntimeBitvector::build(FilterMode::Perfect, keys.iter().map(Vec::as_slice), 100);
        assert!((0..100).all(|i| bv.contains(&[i * 2])));
        assert!((0..100).all(|i| !bv.contains(&[i * 2 + 1])));
    }

    #[test]
    fn lossy_has_no_false_negatives_and_bounded_fp() {
        let keys: Vec<Vec<i64>> = (0..2000).map(|i| vec![i, -i]).collect();
        let bv = RuntimeBitvector::build(FilterMode::Lossy(0.01), keys.iter().map(Vec::as_slice), 2000);
        assert!(keys.iter().all(|k| bv.contains(k)));
        let fp = (0..20000).filter(|&i| bv.contains(&[i + 10_000, 7])).count();
        assert!((fp as f64 / 20000.0) < 0.03, "fp rate {}", fp as f64 / 20000.0);
    }
}
