//! DPIA risk scoring and per-class privacy decisions.
//!
//! Each message class is scored on three factors (sensitivity,
//! vulnerability, impact), each on a 0..=3 scale. The score is the mean of
//! the factors rounded half away from zero to one decimal place, and the
//! band follows from the score:
//!
//! | score            | band     |
//! |------------------|----------|
//! | 0.0              | None     |
//! | 0.1 ..= 0.9      | Low      |
//! | 1.0 ..= 1.4      | Medium   |
//! | 1.5 ..= 1.9      | High     |
//! | 2.0 ..= 3.0      | Critical |
//!
//! Only `High` and `Critical` classes are encrypted; everything else travels
//! MAC-only.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class id of the "Session keys" row in [`PolicyTable::reference`]; rekey
/// envelopes are always sealed under this class.
pub const SESSION_KEYS_CLASS: u8 = 2;

pub const FARM_CONTROL_CLASS: u8 = 1;
pub const TEMPERATURE_CLASS: u8 = 3;
pub const HUMIDITY_CLASS: u8 = 4;
pub const NITRATE_CLASS: u8 = 5;

const MAX_LEVEL: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RiskFactors {
    sensitivity: u8,
    vulnerability: u8,
    impact: u8,
}

impl RiskFactors {
    pub fn new(sensitivity: i64, vulnerability: i64, impact: i64) -> Result<Self> {
        Ok(Self {
            sensitivity: level("sensitivity", sensitivity)?,
            vulnerability: level("vulnerability", vulnerability)?,
            impact: level("impact", impact)?,
        })
    }

    pub fn sensitivity(&self) -> u8 {
        self.sensitivity
    }

    pub fn vulnerability(&self) -> u8 {
        self.vulnerability
    }

    pub fn impact(&self) -> u8 {
        self.impact
    }

    pub fn sensitivity_name(&self) -> &'static str {
        ["Public", "Internal", "Professional", "Private"][self.sensitivity as usize]
    }

    pub fn vulnerability_name(&self) -> &'static str {
        ["None", "Exceptional", "Occasional", "Frequent"][self.vulnerability as usize]
    }

    pub fn impact_name(&self) -> &'static str {
        ["None", "Inconvenience", "Reputation", "Closure"][self.impact as usize]
    }
}

fn level(field: &'static str, value: i64) -> Result<u8> {
    if (0..=MAX_LEVEL as i64).contains(&value) {
        Ok(value as u8)
    } else {
        Err(Error::FactorOutOfRange { field, value })
    }
}

/// A risk score held in tenths, so `1.7` is stored as `17`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RiskScore(u8);

impl RiskScore {
    pub const MAX: RiskScore = RiskScore(30);

    pub fn from_tenths(tenths: u8) -> Result<Self> {
        if tenths <= Self::MAX.0 {
            Ok(Self(tenths))
        } else {
            Err(Error::ScoreOutOfRange(format!("{}.{}", tenths / 10, tenths % 10)))
        }
    }

    pub fn tenths(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 10.0
    }
}

impl fmt::Display for RiskScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

impl FromStr for RiskScore {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ScoreOutOfRange(s.to_string());
        let (whole, frac) = s.trim().split_once('.').unwrap_or((s.trim(), "0"));
        if frac.len() != 1 {
            return Err(bad());
        }
        let whole: u8 = whole.parse().map_err(|_| bad())?;
        let frac: u8 = frac.parse().map_err(|_| bad())?;
        Self::from_tenths(
            whole
                .checked_mul(10)
                .and_then(|w| w.checked_add(frac))
                .ok_or_else(bad)?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskBand {
    None,
    Low,
    Medium,
    High,
    Critical,
}

impl RiskBand {
    pub fn as_str(self) -> &'static str {
        match self {
            RiskBand::None => "None",
            RiskBand::Low => "Low",
            RiskBand::Medium => "Medium",
            RiskBand::High => "High",
            RiskBand::Critical => "Critical",
        }
    }
}

impl fmt::Display for RiskBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskBand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(RiskBand::None),
            "low" => Ok(RiskBand::Low),
            "medium" => Ok(RiskBand::Medium),
            "high" => Ok(RiskBand::High),
            "critical" => Ok(RiskBand::Critical),
            _ => Err(Error::PolicyParse(format!("unknown band {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    EdgeToGateway,
    GatewayToEdge,
}

/// Mean of the three factors, rounded half away from zero to one decimal.
pub fn score_risk(factors: RiskFactors) -> RiskScore {
    let sum = u32::from(factors.sensitivity) + u32::from(factors.vulnerability) + u32::from(factors.impact);
    // round(sum * 10 / 3) == floor((20 * sum + 3) / 6) for non-negative sums
    RiskScore(((20 * sum + 3) / 6) as u8)
}

pub fn band_of(score: RiskScore) -> RiskBand {
    match score.0 {
        0 => RiskBand::None,
        1..=9 => RiskBand::Low,
        10..=14 => RiskBand::Medium,
        15..=19 => RiskBand::High,
        _ => RiskBand::Critical,
    }
}

pub fn requires_privacy(band: RiskBand) -> bool {
    matches!(band, RiskBand::High | RiskBand::Critical)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrivacyDecision {
    pub requires_privacy: bool,
    pub band: RiskBand,
}

impl PrivacyDecision {
    pub fn from_band(band: RiskBand) -> Self {
        Self {
            requires_privacy: requires_privacy(band),
            band,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageClassSpec {
    class_id: u8,
    name: String,
    direction: Direction,
    factors: RiskFactors,
    score: RiskScore,
    band: RiskBand,
}

impl MessageClassSpec {
    pub fn new(class_id: u8, name: impl Into<String>, direction: Direction, factors: RiskFactors) -> Self {
        let score = score_risk(factors);
        Self {
            class_id,
            name: name.into(),
            direction,
            factors,
            score,
            band: band_of(score),
        }
    }

    pub fn class_id(&self) -> u8 {
        self.class_id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn factors(&self) -> RiskFactors {
        self.factors
    }

    pub fn score(&self) -> RiskScore {
        self.score
    }

    pub fn band(&self) -> RiskBand {
        self.band
    }

    pub fn requires_privacy(&self) -> bool {
        requires_privacy(self.band)
    }

    pub fn decision(&self) -> PrivacyDecision {
        PrivacyDecision::from_band(self.band)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyTable {
    classes: Vec<MessageClassSpec>,
}

impl PolicyTable {
    pub fn new(classes: Vec<MessageClassSpec>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &classes {
            if !seen.insert(c.class_id) {
                return Err(Error::DuplicateClass(c.class_id));
            }
        }
        Ok(Self { classes })
    }

    /// The aquaponics assessment: one gateway-to-edge control class, the
    /// edge's session keys, and three sensor readings.
    pub fn reference() -> Self {
        use Direction::*;
        let row = |id, name, dir, s, v, i| {
            MessageClassSpec::new(id, name, dir, RiskFactors::new(s, v, i).expect("levels in range"))
        };
        Self {
            classes: vec![
                row(FARM_CONTROL_CLASS, "Farm control", GatewayToEdge, 2, 1, 2),
                row(SESSION_KEYS_CLASS, "Session keys", EdgeToGateway, 3, 1, 3),
                row(TEMPERATURE_CLASS, "Temperature", EdgeToGateway, 0, 0, 0),
                row(HUMIDITY_CLASS, "Humidity", EdgeToGateway, 0, 0, 0),
                row(NITRATE_CLASS, "Nitrate", EdgeToGateway, 0, 0, 0),
            ],
        }
    }

    pub fn classes(&self) -> &[MessageClassSpec] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn get(&self, class_id: u8) -> Option<&MessageClassSpec> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    pub fn decide(&self, class_id: u8) -> Result<PrivacyDecision> {
        self.get(class_id)
            .map(MessageClassSpec::decision)
            .ok_or(Error::UnknownClass(class_id))
    }

    /// Classes an edge node emits on a schedule: edge-originated and public.
    pub fn reading_classes(&self) -> impl Iterator<Item = &MessageClassSpec> {
        self.classes
            .iter()
            .filter(|c| c.direction == Direction::EdgeToGateway && !c.requires_privacy())
    }

    /// Canonical TOML form; always carries the computed score and band.
    pub fn to_document(&self) -> String {
        let doc = PolicyDocument {
            classes: self
                .classes
                .iter()
                .map(|c| ClassEntry {
                    class_id: i64::from(c.class_id),
                    name: c.name.clone(),
                    direction: c.direction,
                    sensitivity: i64::from(c.factors.sensitivity),
                    vulnerability: i64::from(c.factors.vulnerability),
                    impact: i64::from(c.factors.impact),
                    score: Some(ScoreField::Text(c.score.to_string())),
                    band: Some(c.band.as_str().to_ascii_lowercase()),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("policy document serializes")
    }

    /// Plain-text rendering of the assessment, one row per class.
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{:<4} {:<16} {:<16} {:<16} {:<16} {:<16} {:>5}  {:<8} {}\n",
            "id", "class", "direction", "sensitivity", "vulnerability", "impact", "score", "risk", "privacy"
        );
        for c in &self.classes {
            let f = c.factors;
            let dir = match c.direction {
                Direction::EdgeToGateway => "edge->gateway",
                Direction::GatewayToEdge => "gateway->edge",
            };
            out.push_str(&format!(
                "{:<4} {:<16} {:<16} {:<16} {:<16} {:<16} {:>5}  {:<8} {}\n",
                c.class_id,
                c.name,
                dir,
                format!("{} {}", f.sensitivity, f.sensitivity_name()),
                format!("{} {}", f.vulnerability, f.vulnerability_name()),
                format!("{} {}", f.impact, f.impact_name()),
                c.score.to_string(),
                c.band.to_string(),
                if c.requires_privacy() { "encrypt" } else { "mac-only" },
            ));
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDocument {
    #[serde(default)]
    classes: Vec<ClassEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassEntry {
    class_id: i64,
    name: String,
    direction: Direction,
    sensitivity: i64,
    vulnerability: i64,
    impact: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<ScoreField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    band: Option<String>,
}

/// Scores may be written as `score = 1.7` or `score = "1.7"`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ScoreField {
    Text(String),
    Number(f64),
}

impl ScoreField {
    fn tenths(&self) -> Result<RiskScore> {
        match self {
            ScoreField::Text(s) => s.parse(),
            ScoreField::Number(x) => {
                let scaled = x * 10.0;
                if !(0.0..=30.0).contains(&scaled) || (scaled - scaled.round()).abs() > 1e-6 {
                    return Err(Error::ScoreOutOfRange(x.to_string()));
                }
                RiskScore::from_tenths(scaled.round() as u8)
            }
        }
    }
}

/// Parses and validates a policy document, recomputing every score and band.
pub fn load_policy(document: &str) -> Result<PolicyTable> {
    let doc: PolicyDocument = toml::from_str(document).map_err(|e| Error::PolicyParse(e.message().to_string()))?;
    let mut classes = Vec::with_capacity(doc.classes.len());
    for entry in doc.classes {
        let class_id = u8::try_from(entry.class_id)
            .map_err(|_| Error::PolicyParse(format!("class_id {} out of range 0..=255", entry.class_id)))?;
        let factors = RiskFactors::new(entry.sensitivity, entry.vulnerability, entry.impact)?;
        let spec = MessageClassSpec::new(class_id, entry.name, entry.direction, factors);
        if let Some(stored) = &entry.score {
            let stored = stored.tenths()?;
            if stored != spec.score {
                return Err(Error::ScoreMismatch {
                    class_id,
                    field: "score",
                    stored: stored.to_string(),
                    computed: spec.score.to_string(),
                });
            }
        }
        if let Some(stored) = &entry.band {
            let band: RiskBand = stored.parse()?;
            if band != spec.band {
                return Err(Error::ScoreMismatch {
                    class_id,
                    field: "band",
                    stored: band.to_string(),
                    computed: spec.band.to_string(),
                });
            }
        }
        classes.push(spec);
    }
    PolicyTable::new(classes)
}
