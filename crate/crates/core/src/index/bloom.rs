use xxhash_rust::xxh3::xxh3_64_with_seed;

/// Offset for the second hash seed; any odd constant that differs from 0 works.
const SECOND_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Fixed-size Bloom filter over byte strings.
///
/// Probe positions use double hashing, `h1 + i * h2 mod m`, with both hashes
/// seeded from `seed`, so a filter answers identically on any machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BloomFilter {
    bits: Vec<u64>,
    m: u64,
    k: u32,
    seed: u64,
    n: u64,
}

/// Optimal `(m, k)` for `capacity` elements at false-positive rate `fpr`:
/// `m = ceil(-n ln p / (ln 2)^2)`, `k = ceil((m / n) ln 2)`.
pub fn optimal_params(capacity: u64, fpr: f64) -> (u64, u32) {
    let n = capacity.max(1) as f64;
    let ln2 = std::f64::consts::LN_2;
    let m = (-n * fpr.ln() / (ln2 * ln2)).ceil().max(1.0);
    let k = ((m / n) * ln2).ceil().max(1.0);
    (m as u64, k as u32)
}

impl BloomFilter {
    pub fn with_rate(capacity: u64, fpr: f64, seed: u64) -> Self {
        let (m, k) = optimal_params(capacity, fpr);
        Self::with_params(m, k, seed)
    }

    pub fn with_params(m: u64, k: u32, seed: u64) -> Self {
        assert!(m > 0 && k > 0, "bloom filter needs m > 0 and k > 0");
        BloomFilter { bits: vec![0; m.div_ceil(64) as usize], m, k, seed, n: 0 }
    }

    pub(crate) fn from_raw(bits: Vec<u64>, m: u64, k: u32, seed: u64, n: u64) -> Self {
        debug_assert_eq!(bits.len() as u64, m.div_ceil(64));
        BloomFilter { bits, m, k, seed, n }
    }

    fn positions(&self, item: &[u8]) -> impl Iterator<Item = u64> {
        let h1 = xxh3_64_with_seed(item, self.seed);
        let h2 = xxh3_64_with_seed(item, self.seed.wrapping_add(SECOND_SEED_OFFSET)) | 1;
        let m = self.m;
        (0..u64::from(self.k)).map(move |i| h1.wrapping_add(i.wrapping_mul(h2)) % m)
    }

    pub fn insert(&mut self, item: &[u8]) {
        let pos: Vec<u64> = self.positions(item).collect();
        for p in pos {
            self.bits[(p / 64) as usize] |= 1 << (p % 64);
        }
        self.n += 1;
    }

    /// `false` means `item` was never inserted.
    pub fn contains(&self, item: &[u8]) -> bool {
        self.positions(item).all(|p| self.bits[(p / 64) as usize] & (1 << (p % 64)) != 0)
    }

    pub fn bit_len(&self) -> u64 {
        self.m
    }

    pub fn hash_count(&self) -> u32 {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn inserted(&self) -> u64 {
        self.n
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.bits
    }

    pub fn ones(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizing_matches_closed_form() {
        // n = 1000, p = 0.01: m = ceil(9585.058...) = 9586, k = ceil(6.644...) = 7
        assert_eq!(optimal_params(1000, 0.01), (9586, 7));
        // n = 1, p = 0.5: m = ceil(1.4427) = 2, k = ceil(1.386) = 2
        assert_eq!(optimal_params(1, 0.5), (2, 2));
        assert_eq!(optimal_params(0, 0.01), optimal_params(1, 0.01));
    }

    #[test]
    fn no_false_negatives_small() {
        let mut f = BloomFilter::with_rate(100, 0.01, 7);
        for i in 0..100u32 {
            f.insert(&i.to_le_bytes());
        }
        assert!((0..100u32).all(|i| f.contains(&i.to_le_bytes())));
        assert_eq!(f.inserted(), 100);
    }

    #[test]
    fn fresh_filter_is_empty() {
        let f = BloomFilter::with_rate(10, 0.01, 1);
        assert!(!f.contains(b"anything"));
        assert_eq!(f.ones(), 0);
    }

    #[test]
    fn seed_changes_layout() {
        let mut a = BloomFilter::with_rate(10, 0.01, 1);
        let mut b = BloomFilter::with_rate(10, 0.01, 2);
        a.insert(b"x");
        b.insert(b"x");
        assert_ne!(a.words(), b.words());
    }
}
