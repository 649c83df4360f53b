//! Self-contained pseudo-random number generation.
//!
//! Everything random in this crate flows through xoshiro256++ (Blackman &
//! Vigna) seeded from a single `u64` via the splitmix64 mixer, with Gaussian
//! variates produced by the Box-Muller transform on the generator's 53-bit
//! uniforms. Both algorithms have short published reference implementations,
//! so any consumer (in any language) can regenerate signals, ensembles, and
//! noise bit-for-bit from the recorded seeds.

use num_complex::Complex64;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer: the published mixing function applied to a state.
fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic per-stream seed derivation: the `stream + 1`-th output of a
/// splitmix64 sequence started at `base`. Used to give every trial of a
/// Monte-Carlo run its own independent seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix_finalize(base.wrapping_add(GOLDEN.wrapping_mul(stream.wrapping_add(1))))
}

/// xoshiro256++ generator with a Box-Muller Gaussian layer.
#[derive(Clone, Debug)]
pub struct Rng {
    s: [u64; 4],
    spare_gaussian: Option<f64>,
}

impl Rng {
    /// Seeds the four state words with consecutive splitmix64 outputs, as the
    /// reference implementation recommends.
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut s = [0u64; 4];
        for word in &mut s {
            state = state.wrapping_add(GOLDEN);
            *word = splitmix_finalize(state);
        }
        Rng {
            s,
            spare_gaussian: None,
        }
    }

    /// One step of xoshiro256++.
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate via Box-Muller; the paired sine variate is
    /// cached and returned by the next call.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare_gaussian.take() {
            return g;
        }
        // Shift the first uniform into (0, 1] so the logarithm stays finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Standard complex normal CN(0, 1): real and imaginary parts are
    /// independent N(0, 1/2).
    pub fn next_complex_gaussian(&mut self) -> Complex64 {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.next_gaussian() * scale, self.next_gaussian() * scale)
    }

    /// Unbiased uniform integer in [0, n) by rejection sampling.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires n > 0");
        // 2^64 mod n, computed without overflowing u64.
        let overhang = (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= u64::MAX - overhang {
                return x % n;
            }
        }
    }

    /// `k` distinct indices drawn uniformly from 0..n, returned sorted.
    /// Partial Fisher-Yates on the index range.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} distinct indices from 0..{n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.next_below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut chosen = pool[..k].to_vec();
        chosen.sort_unstable();
        chosen
    }
}
