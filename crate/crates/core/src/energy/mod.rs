//! Timing, power and energy accounting for the security attributes.
//!
//! Energy is time × power: μs × mW = nJ, so dividing by 1000 gives μJ.
//! All arithmetic is decimal, so reference cells reproduce exactly.

mod harness;
mod report;
pub mod tables;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::suite::{CipherMode, MacVariant, SuiteConfig};

pub use harness::{bench_attribute, timer_granularity, AttributeRunner, MIN_ITERATIONS};
pub use report::{
    build_report, load_power, load_timings, EnergyEntry, EnergyReport, HostInfo, PowerFile, Reference, SavingsEntry,
    TimingsFile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttributeKind {
    IntegrityOnly(MacVariant),
    Aead(CipherMode, MacVariant),
}

impl AttributeKind {
    pub fn is_integrity_only(self) -> bool {
        matches!(self, AttributeKind::IntegrityOnly(_))
    }

    /// The attribute that a sealed envelope under `suite` exercises.
    pub fn for_suite(suite: SuiteConfig) -> Self {
        match suite.mode() {
            CipherMode::MacOnly => AttributeKind::IntegrityOnly(suite.mac()),
            mode => AttributeKind::Aead(mode, suite.mac()),
        }
    }

    pub fn suite(self) -> SuiteConfig {
        let (mode, mac) = match self {
            AttributeKind::IntegrityOnly(mac) => (CipherMode::MacOnly, mac),
            AttributeKind::Aead(mode, mac) => (mode, mac),
        };
        SuiteConfig::new(mode, mac).expect("attribute kinds hold valid suites")
    }

    /// Every integrity-only and AEAD attribute the harness can run.
    pub fn all() -> Vec<AttributeKind> {
        SuiteConfig::all().into_iter().map(Self::for_suite).collect()
    }

    /// The nine attributes of the reference tables: four HMACs alone, GCM,
    /// and the four standalone ciphers paired with HMAC-SHA256.
    pub fn reference_set() -> Vec<AttributeKind> {
        let mut out: Vec<_> = MacVariant::HMACS
            .iter()
            .map(|&m| AttributeKind::IntegrityOnly(m))
            .collect();
        out.push(AttributeKind::Aead(CipherMode::Gcm, MacVariant::GcmTag));
        for mode in [CipherMode::Cbc, CipherMode::Ctr, CipherMode::Cfb8, CipherMode::Cfb128] {
            out.push(AttributeKind::Aead(mode, MacVariant::HmacSha256));
        }
        out
    }
}

impl fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hmac = |m: MacVariant| m.hash_label().to_ascii_uppercase().replace("SHA", "HMAC-SHA");
        match *self {
            AttributeKind::IntegrityOnly(m) => f.write_str(&hmac(m)),
            AttributeKind::Aead(CipherMode::Gcm, _) => f.write_str("AES128-GCM"),
            AttributeKind::Aead(mode, m) => {
                write!(f, "AES128-{}-{}", mode.label().to_ascii_uppercase(), hmac(m))
            }
        }
    }
}

impl FromStr for AttributeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        Self::all()
            .into_iter()
            .find(|k| k.to_string() == upper)
            .ok_or_else(|| Error::Config(format!("unknown attribute {s:?}")))
    }
}

impl Serialize for AttributeKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttributeKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributeSpec {
    #[serde(rename = "attribute")]
    pub kind: AttributeKind,
    pub input_size: usize,
}

impl AttributeSpec {
    pub fn new(kind: AttributeKind, input_size: usize) -> Result<Self> {
        if input_size == 0 {
            return Err(Error::Config("input_size must be at least 1 byte".into()));
        }
        Ok(Self { kind, input_size })
    }
}

impl fmt::Display for AttributeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}B", self.kind, self.input_size)
    }
}

/// Where a number came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Timed on this host.
    Measured,
    /// Taken from the embedded reference tables.
    Reference,
    /// Computed from other reference values.
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    #[serde(flatten)]
    pub attribute: AttributeSpec,
    pub per_op_micros: Decimal,
    pub iteration_counts: Vec<u64>,
    /// Average μs per operation for each entry of `iteration_counts`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_count_micros: Vec<Decimal>,
    /// Relative standard deviation of `per_count_micros`.
    #[serde(default)]
    pub dispersion: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerEntry {
    pub milliwatts: Decimal,
    pub provenance: Provenance,
}

/// Milliwatt draw per attribute.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PowerModel {
    entries: BTreeMap<AttributeSpec, PowerEntry>,
}

impl PowerModel {
    pub fn insert(&mut self, attribute: AttributeSpec, milliwatts: Decimal, provenance: Provenance) {
        self.entries.insert(attribute, PowerEntry { milliwatts, provenance });
    }

    pub fn get(&self, attribute: &AttributeSpec) -> Option<&PowerEntry> {
        self.entries.get(attribute)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&AttributeSpec, &PowerEntry)> {
        self.entries.iter()
    }

    pub fn validate(&self) -> Result<()> {
        for (attr, e) in &self.entries {
            if e.milliwatts <= Decimal::ZERO {
                return Err(Error::NonPositive {
                    what: "power",
                    value: format!("{} for {attr}", e.milliwatts),
                });
            }
        }
        Ok(())
    }
}

/// μJ for an operation taking `time_us` at `power_mw`.
pub fn energy_uj(time_us: Decimal, power_mw: Decimal) -> Result<Decimal> {
    if time_us <= Decimal::ZERO {
        return Err(Error::NonPositive {
            what: "time",
            value: time_us.to_string(),
        });
    }
    if power_mw <= Decimal::ZERO {
        return Err(Error::NonPositive {
            what: "power",
            value: power_mw.to_string(),
        });
    }
    let product = time_us
        .checked_mul(power_mw)
        .ok_or_else(|| Error::Config("energy overflow".into()))?;
    Ok((product / Decimal::ONE_THOUSAND).normalize())
}

/// Percentage saved by `candidate_uj` relative to `baseline_uj`, unrounded.
pub fn savings_percent_exact(candidate_uj: Decimal, baseline_uj: Decimal) -> Result<Decimal> {
    if baseline_uj <= Decimal::ZERO {
        return Err(Error::NonPositive {
            what: "baseline energy",
            value: baseline_uj.to_string(),
        });
    }
    Ok(Decimal::ONE_HUNDRED - Decimal::ONE_HUNDRED * candidate_uj / baseline_uj)
}

/// [`savings_percent_exact`] rounded half away from zero to two places.
pub fn savings_percent(candidate_uj: Decimal, baseline_uj: Decimal) -> Result<Decimal> {
    Ok(round2(savings_percent_exact(candidate_uj, baseline_uj)?))
}

pub(crate) fn round2(x: Decimal) -> Decimal {
    x.round_dp_with_strategy(2, RoundingStrategy::MidpointAwayFromZero)
}

pub(crate) fn round3(x: Decimal) -> Decimal {
    x.round_dp_with_strategy(3, RoundingStrategy::MidpointAwayFromZero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy_uj(d("91"), d("155")).unwrap(), d("14.105"));
        assert_eq!(energy_uj(d("856"), d("158")).unwrap(), d("135.248"));
        assert_eq!(format!("{:.3}", energy_uj(d("1000"), d("1")).unwrap()), "1.000");
        assert!(energy_uj(d("0"), d("1")).is_err());
        assert!(energy_uj(d("1"), d("-3")).is_err());
    }

    #[test]
    fn savings_examples() {
        assert_eq!(savings_percent(d("14.105"), d("28.124")).unwrap(), d("49.85"));
        assert_eq!(savings_percent(d("25.265"), d("135.248")).unwrap(), d("81.32"));
        assert_eq!(savings_percent(d("42.78"), d("135.248")).unwrap(), d("68.37"));
        assert_eq!(savings_percent(d("19.22"), d("28.124")).unwrap(), d("31.66"));
        assert_eq!(format!("{:.2}", savings_percent(d("3.3"), d("3.3")).unwrap()), "0.00");
        assert!(savings_percent(d("1"), d("0")).is_err());
    }

    #[test]
    fn attribute_labels() {
        let cbc = AttributeKind::Aead(CipherMode::Cbc, MacVariant::HmacSha256);
        assert_eq!(cbc.to_string(), "AES128-CBC-HMAC-SHA256");
        assert_eq!(
            AttributeKind::Aead(CipherMode::Gcm, MacVariant::GcmTag).to_string(),
            "AES128-GCM"
        );
        assert_eq!(
            AttributeKind::IntegrityOnly(MacVariant::HmacSha512).to_string(),
            "HMAC-SHA512"
        );
        assert_eq!(
            AttributeKind::Aead(CipherMode::Cfb128, MacVariant::HmacSha384).to_string(),
            "AES128-CFB128-HMAC-SHA384"
        );
        for k in AttributeKind::all() {
            assert_eq!(k.to_string().parse::<AttributeKind>().unwrap(), k);
            assert_eq!(AttributeKind::for_suite(k.suite()), k);
        }
        assert_eq!(AttributeKind::all().len(), 21);
        assert_eq!(AttributeKind::reference_set().len(), 9);
        assert!(AttributeSpec::new(cbc, 0).is_err());
    }

    proptest! {
        #[test]
        fn energy_is_bilinear(t in 1u32..100_000, p in 1u32..1_000, tf in 0u32..1000) {
            let t = Decimal::from(t) + Decimal::new(i64::from(tf), 3);
            let p = Decimal::from(p);
            let two = Decimal::TWO;
            prop_assert_eq!(energy_uj(two * t, p).unwrap(), two * energy_uj(t, p).unwrap());
            prop_assert_eq!(energy_uj(t, two * p).unwrap(), two * energy_uj(t, p).unwrap());
        }

        #[test]
        fn savings_complements_ratio(a in 1u32..1_000_000, b in 1u32..1_000_000) {
            let a = Decimal::new(i64::from(a), 3);
            let b = Decimal::new(i64::from(b), 3);
            let ratio = Decimal::ONE_HUNDRED * a / b;
            prop_assert_eq!(savings_percent_exact(a, b).unwrap() + ratio, Decimal::ONE_HUNDRED);
        }
    }
}
