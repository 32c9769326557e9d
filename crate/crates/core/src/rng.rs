//! SplitMix64, the generator behind every seeded operation in the crate.
//!
//! State update and output are:
//!
//! ```text
//! state  <- state + 0x9E3779B97F4A7C15            (mod 2^64)
//! z      <- state
//! z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (mod 2^64)
//! z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB  (mod 2^64)
//! output <- z ^ (z >> 31)
//! ```
//!
//! Derived quantities are defined on top of the raw 64-bit stream so that
//! they are reproducible in any language:
//!
//! * `next_f64`: `(next_u64() >> 11) * 2^-53`, uniform on `[0, 1)`.
//! * `below(n)`: Lemire's multiply-shift with rejection of the biased low
//!   range, uniform on `0..n`.
//! * `shuffle`: Fisher–Yates from the last index down, swapping `i` with
//!   `below(i + 1)`.
//! * `normal`: Box–Muller, `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`, one draw per
//!   call (the sine branch is discarded).
//! * `substream(id)`: a fresh generator seeded with the output of a
//!   SplitMix64 seeded at `seed ^ (id * 0xD1B54A32D192ED03)`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_MUL: u64 = 0xD1B5_4A32_D192_ED03;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    seed: u64,
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { seed, state: seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Log-normal draw with the given median and log-space standard deviation.
    pub fn lognormal(&mut self, median: f64, sigma_log: f64) -> f64 {
        median * (sigma_log * self.normal()).exp()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }

    /// Independent generator for substream `id`, derived from the seed only
    /// (not from the current position in this stream).
    pub fn substream(&self, id: u64) -> SplitMix64 {
        let mut seeder = SplitMix64::new(self.seed ^ id.wrapping_mul(STREAM_MUL));
        SplitMix64::new(seeder.next_u64())
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
