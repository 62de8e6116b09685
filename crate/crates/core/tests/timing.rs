//! Welch t-test on `verify_mac` timings for a matching tag versus a tag
//! that differs in its first byte, in the style of dudect.

use std::hint::black_box;
use std::time::Instant;

use paysec_core::suite::{self, MacVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRIALS: usize = 100_000;
/// |t| above this suggests the two classes are distinguishable.
const T_THRESHOLD: f64 = 4.5;
/// Measurements above this percentile are discarded as interrupts.
const CROP_PERCENTILE: f64 = 0.90;

fn welch_t(a: &[f64], b: &[f64]) -> f64 {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var, n)
    };
    let (ma, va, na) = stats(a);
    let (mb, vb, nb) = stats(b);
    (ma - mb) / (va / na + vb / nb).sqrt()
}

#[test]
fn verify_mac_timing_is_class_independent() {
    let key = [0x42u8; 32];
    let data = [0x17u8; 64];
    let variant = MacVariant::HmacSha256;
    let good = suite::mac(variant, &key, &data).unwrap();
    let mut bad = good.clone();
    bad[0] ^= 0xff;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut samples: Vec<(bool, f64)> = Vec::with_capacity(TRIALS);
    for _ in 0..1_000 {
        black_box(suite::verify_mac(variant, &key, &data, &good).unwrap());
    }
    for _ in 0..TRIALS {
        let class = rng.gen::<bool>();
        let tag = if class { &good } else { &bad };
        let start = Instant::now();
        let ok = suite::verify_mac(variant, black_box(&key), black_box(&data), black_box(tag)).unwrap();
        let elapsed = start.elapsed().as_nanos() as f64;
        assert_eq!(ok, class);
        samples.push((class, elapsed));
    }

    let mut sorted: Vec<f64> = samples.iter().map(|s| s.1).collect();
    sorted.sort_by(f64::total_cmp);
    let cutoff = sorted[(sorted.len() as f64 * CROP_PERCENTILE) as usize];
    let (a, b): (Vec<_>, Vec<_>) = samples.into_iter().filter(|s| s.1 <= cutoff).partition(|s| s.0);
    let a: Vec<f64> = a.into_iter().map(|s| s.1).collect();
    let b: Vec<f64> = b.into_iter().map(|s| s.1).collect();
    let t = welch_t(&a, &b);
    println!("welch t = {t:.3} over {} + {} cropped samples", a.len(), b.len());
    assert!(
        t.abs() < T_THRESHOLD,
        "timing differs between valid and invalid tags: t = {t:.3}"
    );
}
