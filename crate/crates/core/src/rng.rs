//! Deterministic random numbers and content hashing.
//!
//! A single seeded [`Pcg32`] stream drives static scene sampling and any
//! runtime draws made by behaviors, so a whole run is a pure function of its
//! seed.

const PCG_MULTIPLIER: u64 = 6364136223846793005;
const DOUBLE_SCALE: f64 = 1.0 / (1u64 << 53) as f64;

/// PCG32 (XSH-RR) generator.
///
/// The stream increment is derived from the seed: `inc = (seed << 1) | 1`,
/// followed by the standard two-step state initialisation. Equal seeds give
/// bit-equal output streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    pub fn new(seed: u64) -> Self {
        let mut rng = Pcg32 {
            state: 0,
            inc: (seed << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(seed);
        rng.next_u32();
        rng
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(PCG_MULTIPLIER).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    /// Two 32-bit outputs concatenated, first draw in the high bits.
    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    pub fn next_double(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * DOUBLE_SCALE
    }

    /// Uniform double in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_double() * (hi - lo)
    }
}

/// SplitMix64 finalizer; used to decorrelate per-run seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// FNV-1a 64-bit hash over raw bytes; stable program-file fingerprint.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    // Golden values generated once with an independent reference
    // implementation of the same seeding scheme.
    #[test]
    fn golden_u32_sequence_seed_42() {
        let mut rng = Pcg32::new(42);
        let got: Vec<u32> = (0..6).map(|_| rng.next_u32()).collect();
        assert_eq!(
            got,
            vec![1085446021, 176895750, 789123591, 1684778745, 4229066268, 1793278615]
        );
    }

    #[test]
    fn golden_doubles_seed_42() {
        let mut rng = Pcg32::new(42);
        assert_eq!(rng.next_double(), 0.25272509573055113);
        assert_eq!(rng.next_double(), 0.1837321537063149);
        assert_eq!(rng.next_double(), 0.9846562213305221);
    }

    #[test]
    fn golden_doubles_seed_7() {
        let mut rng = Pcg32::new(7);
        assert_eq!(rng.next_double(), 0.942161103253997);
        assert_eq!(rng.next_double(), 0.11404561157901583);
        assert_eq!(rng.next_double(), 0.3321021879368129);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = Pcg32::new(0xDEADBEEF);
        let mut b = Pcg32::new(0xDEADBEEF);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn doubles_in_unit_interval() {
        let mut rng = Pcg32::new(3);
        for _ in 0..10_000 {
            let d = rng.next_double();
            assert!((0.0..1.0).contains(&d));
        }
    }

    // CLT bound: sigma of the mean of 1e6 uniforms is ~0.00029; the window
    // below is wider than 10 sigma.
    #[test]
    fn mean_of_one_million_draws() {
        let mut rng = Pcg32::new(42);
        let sum: f64 = (0..1_000_000).map(|_| rng.next_double()).sum();
        let mean = sum / 1_000_000.0;
        assert!((0.497..=0.503).contains(&mean), "mean = {mean}");
    }

    #[test]
    fn splitmix_spreads_nearby_inputs() {
        let a = splitmix64(1);
        let b = splitmix64(2);
        assert_ne!(a, b);
        assert_ne!(a >> 32, b >> 32);
    }

    #[test]
    fn fnv_distinguishes_content() {
        assert_ne!(fnv1a64(b"a"), fnv1a64(b"b"));
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
    }
}
