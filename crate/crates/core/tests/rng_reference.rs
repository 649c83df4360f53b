//! Bit-level reference tests for the generator stack.
//!
//! The raw stream values were produced by an independent transcription of the
//! published xoshiro256++ / splitmix64 reference implementations, so these
//! tests pin the exact sequences every seeded artifact depends on.

use grahtp::rng::{derive_seed, Rng};

#[test]
fn xoshiro_reference_stream_seed_0() {
    let mut rng = Rng::new(0);
    let got: Vec<u64> = (0..5).map(|_| rng.next_u64()).collect();
    let want = [
        5987356902031041503,
        7051070477665621255,
        6633766593972829180,
        211316841551650330,
        9136120204379184874,
    ];
    assert_eq!(got, want, "xoshiro256++ stream diverged for seed 0");
}

#[test]
fn xoshiro_reference_stream_seed_42() {
    let mut rng = Rng::new(42);
    let got: Vec<u64> = (0..5).map(|_| rng.next_u64()).collect();
    let want = [
        15021278609987233951,
        5881210131331364753,
        18149643915985481100,
        12933668939759105464,
        14637574242682825331,
    ];
    assert_eq!(got, want, "xoshiro256++ stream diverged for seed 42");
}

#[test]
fn derive_seed_reference_values() {
    let got: Vec<u64> = (0..3).map(|k| derive_seed(7, k)).collect();
    let want = [
        7191089600892374487,
        309689372594955804,
        16616101746815609346,
    ];
    assert_eq!(got, want, "derive_seed chain diverged for base 7");
}

#[test]
fn uniform_reference_values_seed_7() {
    let mut rng = Rng::new(7);
    let got: Vec<f64> = (0..3).map(|_| rng.next_f64()).collect();
    let want = [
        f64::from_bits(0x3fac583400555d20),
        f64::from_bits(0x3fc607e46efd274c),
        f64::from_bits(0x3fe6f66236761a8b),
    ];
    assert_eq!(got, want, "53-bit uniforms diverged for seed 7");
}

#[test]
fn gaussian_reference_pair_seed_42() {
    let mut rng = Rng::new(42);
    // Box-Muller emits the cosine variate first and caches the sine variate.
    let g0 = rng.next_gaussian();
    let g1 = rng.next_gaussian();
    assert_eq!(
        g0.to_bits(),
        (-0.268607369462095f64).to_bits(),
        "first Box-Muller variate diverged: got {g0:e}"
    );
    assert_eq!(
        g1.to_bits(),
        0.5819710518628828f64.to_bits(),
        "cached Box-Muller variate diverged: got {g1:e}"
    );
}

#[test]
fn same_seed_reproduces_the_stream() {
    let mut a = Rng::new(123456789);
    let mut b = Rng::new(123456789);
    for i in 0..1000 {
        assert_eq!(a.next_u64(), b.next_u64(), "streams diverged at step {i}");
    }
}

#[test]
fn uniforms_live_in_the_half_open_unit_interval() {
    let mut rng = Rng::new(3);
    for _ in 0..10_000 {
        let u = rng.next_f64();
        assert!((0.0..1.0).contains(&u), "uniform {u} outside [0, 1)");
    }
}

#[test]
fn gaussian_moments_are_sane() {
    let mut rng = Rng::new(11);
    let n = 200_000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let g = rng.next_gaussian();
        sum += g;
        sum_sq += g * g;
    }
    let mean = sum / n as f64;
    let var = sum_sq / n as f64 - mean * mean;
    // Standard errors: mean ~ 1/sqrt(n) ~ 0.0022, var ~ sqrt(2/n) ~ 0.0032.
    assert!(mean.abs() < 0.01, "gaussian mean drifted: {mean}");
    assert!((var - 1.0).abs() < 0.02, "gaussian variance drifted: {var}");
}

#[test]
fn complex_gaussian_parts_have_half_variance() {
    let mut rng = Rng::new(12);
    let n = 100_000;
    let mut re_sq = 0.0;
    let mut im_sq = 0.0;
    for _ in 0..n {
        let c = rng.next_complex_gaussian();
        re_sq += c.re * c.re;
        im_sq += c.im * c.im;
    }
    let re_var = re_sq / n as f64;
    let im_var = im_sq / n as f64;
    assert!(
        (re_var - 0.5).abs() < 0.02,
        "CN(0,1) real-part variance drifted: {re_var}"
    );
    assert!(
        (im_var - 0.5).abs() < 0.02,
        "CN(0,1) imaginary-part variance drifted: {im_var}"
    );
}

#[test]
fn next_below_stays_in_range_and_hits_everything() {
    let mut rng = Rng::new(5);
    let n = 7u64;
    let mut seen = [false; 7];
    for _ in 0..1000 {
        let v = rng.next_below(n);
        assert!(v < n, "next_below({n}) returned {v}");
        seen[v as usize] = true;
    }
    assert!(
        seen.iter().all(|&s| s),
        "1000 draws from 0..7 missed a value: {seen:?}"
    );
}

#[test]
fn sample_distinct_is_sorted_unique_and_in_range() {
    let mut rng = Rng::new(9);
    for trial in 0..50 {
        let v = rng.sample_distinct(100, 10);
        assert_eq!(v.len(), 10, "trial {trial}: wrong sample size");
        assert!(
            v.windows(2).all(|w| w[0] < w[1]),
            "trial {trial}: sample not strictly increasing: {v:?}"
        );
        assert!(
            v.iter().all(|&i| i < 100),
            "trial {trial}: index out of range: {v:?}"
        );
    }
}

#[test]
fn sample_distinct_full_range_is_a_permutation_of_everything() {
    let mut rng = Rng::new(10);
    let v = rng.sample_distinct(12, 12);
    assert_eq!(v, (0..12).collect::<Vec<_>>(), "k = n must select all of 0..n");
}

#[test]
fn derive_seed_streams_decorrelate_trials() {
    // Adjacent streams must give unrelated generators; compare a few raw
    // outputs for the trivial failure mode (identical or shifted streams).
    let a: Vec<u64> = {
        let mut rng = Rng::new(derive_seed(1, 0));
        (0..4).map(|_| rng.next_u64()).collect()
    };
    let b: Vec<u64> = {
        let mut rng = Rng::new(derive_seed(1, 1));
        (0..4).map(|_| rng.next_u64()).collect()
    };
    assert_ne!(a, b, "adjacent derived streams must differ");
    assert_ne!(a[1..], b[..3], "derived streams must not be shifts of each other");
}
