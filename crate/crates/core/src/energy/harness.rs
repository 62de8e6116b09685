use std::hint::black_box;
use std::time::{Duration, Instant};

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;

use super::{AttributeKind, AttributeSpec, Provenance, TimingSample};
use crate::error::{Error, Result};
use crate::suite::{self, CipherMode, KeyMaterial, ENC_KEY_LEN, IV_LEN, MAC_KEY_LEN};

/// Smallest iteration count accepted per batch.
pub const MIN_ITERATIONS: u64 = 1000;

/// Batches shorter than this many timer ticks are rejected.
const RESOLUTION_FACTOR: u32 = 100;

/// One security attribute with its inputs prepared ahead of time, so
/// that only the cryptographic work lands inside the timed loop.
pub struct AttributeRunner {
    kind: AttributeKind,
    keys: KeyMaterial,
    iv: [u8; IV_LEN],
    input: Vec<u8>,
}

impl AttributeRunner {
    /// Fixed-pattern keys, IV and input so runs are reproducible.
    pub fn new(spec: AttributeSpec) -> Result<Self> {
        if spec.input_size == 0 {
            return Err(Error::Config("input_size must be at least 1 byte".into()));
        }
        let pattern = |len: usize, seed: u8| -> Vec<u8> {
            (0..len)
                .map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed))
                .collect()
        };
        let keys = KeyMaterial::from_slices(&pattern(ENC_KEY_LEN, 0x11), &pattern(MAC_KEY_LEN, 0x5c))?;
        let mut iv = [0u8; IV_LEN];
        iv[..12].copy_from_slice(&pattern(12, 0xa7));
        Ok(Self {
            kind: spec.kind,
            keys,
            iv,
            input: pattern(spec.input_size, b'a'),
        })
    }

    /// Runs the attribute once and returns the output length.
    pub fn run_once(&self) -> Result<usize> {
        let input = black_box(&self.input[..]);
        match self.kind {
            AttributeKind::IntegrityOnly(mac) => Ok(suite::mac(mac, &self.keys.mac_key, input)?.len()),
            AttributeKind::Aead(CipherMode::Gcm, _) => {
                let (ct, tag) = suite::encrypt(CipherMode::Gcm, &self.keys.enc_key, &self.iv, &[], input)?;
                Ok(ct.len() + tag.map_or(0, |t| t.len()))
            }
            AttributeKind::Aead(mode, mac) => {
                let ct = if mode == CipherMode::Cbc {
                    suite::encrypt(mode, &self.keys.enc_key, &self.iv, &[], &suite::pad(input)?)?.0
                } else {
                    suite::encrypt(mode, &self.keys.enc_key, &self.iv, &[], input)?.0
                };
                let tag = suite::mac_parts(mac, &self.keys.mac_key, &[&self.iv, &ct])?;
                Ok(ct.len() + tag.len())
            }
        }
    }
}

/// Smallest observable step of the monotonic clock.
pub fn timer_granularity() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let start = Instant::now();
        let mut now = Instant::now();
        while now == start {
            now = Instant::now();
        }
        best = best.min(now - start);
    }
    best
}

/// Times `spec` once per entry of `iteration_counts` and averages the
/// per-operation times.
pub fn bench_attribute(spec: AttributeSpec, iteration_counts: &[u64]) -> Result<TimingSample> {
    if iteration_counts.is_empty() {
        return Err(Error::Measurement("no iteration counts given".into()));
    }
    if let Some(&low) = iteration_counts.iter().find(|&&c| c < MIN_ITERATIONS) {
        return Err(Error::Measurement(format!(
            "iteration count {low} is below the minimum of {MIN_ITERATIONS}"
        )));
    }
    let runner = AttributeRunner::new(spec)?;
    let floor = timer_granularity() * RESOLUTION_FACTOR;

    // warm caches and lazy CPU feature detection
    for _ in 0..MIN_ITERATIONS {
        black_box(runner.run_once()?);
    }

    let mut per_count = Vec::with_capacity(iteration_counts.len());
    for &count in iteration_counts {
        let start = Instant::now();
        for _ in 0..count {
            black_box(runner.run_once()?);
        }
        let elapsed = start.elapsed();
        if elapsed < floor {
            return Err(Error::Measurement(format!(
                "{count} iterations of {spec} took {elapsed:?}, below 100x timer granularity ({floor:?})"
            )));
        }
        let nanos = Decimal::from(elapsed.as_nanos() as u64);
        let micros = nanos / Decimal::from(count) / Decimal::ONE_THOUSAND;
        per_count.push(micros.round_dp(4));
    }

    let n = Decimal::from(per_count.len() as u64);
    let mean = per_count.iter().copied().sum::<Decimal>() / n;
    if mean <= Decimal::ZERO {
        return Err(Error::Measurement(format!("{spec} measured a non-positive mean time")));
    }
    let mean_f = mean.to_f64().unwrap_or(0.0);
    let var = per_count
        .iter()
        .map(|x| (x.to_f64().unwrap_or(0.0) - mean_f).powi(2))
        .sum::<f64>()
        / per_count.len() as f64;

    Ok(TimingSample {
        attribute: spec,
        per_op_micros: mean.round_dp(4),
        iteration_counts: iteration_counts.to_vec(),
        per_count_micros: per_count,
        dispersion: var.sqrt() / mean_f,
        provenance: Provenance::Measured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::MacVariant;

    fn spec(kind: AttributeKind, size: usize) -> AttributeSpec {
        AttributeSpec::new(kind, size).unwrap()
    }

    #[test]
    fn runner_outputs() {
        let hmac = AttributeRunner::new(spec(AttributeKind::IntegrityOnly(MacVariant::HmacSha256), 64)).unwrap();
        assert_eq!(hmac.run_once().unwrap(), 32);
        let cbc = AttributeRunner::new(spec(AttributeKind::Aead(CipherMode::Cbc, MacVariant::HmacSha256), 64)).unwrap();
        assert_eq!(cbc.run_once().unwrap(), 80 + 32);
        let gcm = AttributeRunner::new(spec(AttributeKind::Aead(CipherMode::Gcm, MacVariant::GcmTag), 512)).unwrap();
        assert_eq!(gcm.run_once().unwrap(), 512 + 16);
        for kind in AttributeKind::all() {
            assert!(AttributeRunner::new(spec(kind, 17)).unwrap().run_once().unwrap() > 0);
        }
    }

    #[test]
    fn rejects_low_counts() {
        let s = spec(AttributeKind::IntegrityOnly(MacVariant::HmacSha256), 64);
        assert!(matches!(bench_attribute(s, &[10]), Err(Error::Measurement(_))));
        assert!(matches!(bench_attribute(s, &[]), Err(Error::Measurement(_))));
        assert!(matches!(bench_attribute(s, &[5000, 999]), Err(Error::Measurement(_))));
    }

    #[test]
    fn measures_positive_time() {
        let s = spec(AttributeKind::IntegrityOnly(MacVariant::HmacSha256), 64);
        let sample = bench_attribute(s, &[2000, 4000]).unwrap();
        assert!(sample.per_op_micros > Decimal::ZERO);
        assert_eq!(sample.per_count_micros.len(), 2);
        assert_eq!(sample.provenance, Provenance::Measured);
    }

    #[test]
    fn granularity_is_small() {
        assert!(timer_granularity() < Duration::from_millis(1));
    }
}
