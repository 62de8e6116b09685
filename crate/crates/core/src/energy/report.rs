use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::{
    energy_uj, round2, round3, savings_percent_exact, tables, AttributeKind, AttributeSpec, PowerModel, Provenance,
    TimingSample,
};
use crate::error::{Error, Result};
use crate::suite::{CipherMode, MacVariant};

/// Largest gap between a recomputed and a printed cell still treated as
/// agreement, in μJ.
pub const PRINTED_TOLERANCE_UJ: Decimal = Decimal::from_parts(1, 0, 0, false, 3);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub timer_granularity_ns: u64,
    pub measured_at: u64,
}

impl HostInfo {
    pub fn current(timer_granularity_ns: u64, measured_at: u64) -> Self {
        Self {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            cpus: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            timer_granularity_ns,
            measured_at,
        }
    }
}

/// The document written by the benchmark harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<HostInfo>,
    pub samples: Vec<TimingSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFile {
    pub entries: Vec<PowerFileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFileEntry {
    #[serde(flatten)]
    pub attribute: AttributeSpec,
    pub milliwatts: Decimal,
    #[serde(default = "measured")]
    pub provenance: Provenance,
}

fn measured() -> Provenance {
    Provenance::Measured
}

impl From<&PowerModel> for PowerFile {
    fn from(model: &PowerModel) -> Self {
        Self {
            entries: model
                .entries()
                .map(|(a, e)| PowerFileEntry {
                    attribute: *a,
                    milliwatts: e.milliwatts,
                    provenance: e.provenance,
                })
                .collect(),
        }
    }
}

pub fn load_timings(json: &str) -> Result<TimingsFile> {
    let file: TimingsFile = serde_json::from_str(json).map_err(|e| Error::Config(format!("timings file: {e}")))?;
    for s in &file.samples {
        if s.per_op_micros <= Decimal::ZERO {
            return Err(Error::NonPositive {
                what: "time",
                value: format!("{} for {}", s.per_op_micros, s.attribute),
            });
        }
    }
    Ok(file)
}

pub fn load_power(json: &str) -> Result<PowerModel> {
    let file: PowerFile = serde_json::from_str(json).map_err(|e| Error::Config(format!("power file: {e}")))?;
    let mut model = PowerModel::default();
    for e in file.entries {
        model.insert(e.attribute, e.milliwatts, e.provenance);
    }
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEntry {
    #[serde(flatten)]
    pub attribute: AttributeSpec,
    pub time_us: Decimal,
    pub power_mw: Decimal,
    pub micro_joules: Decimal,
    pub provenance: Provenance,
    pub power_provenance: Provenance,
    /// Printed reference energy for this cell, when timings are reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub printed_uj: Option<Decimal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistent: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    About,
    Over,
}

/// A published percentage a savings figure is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub percent: Decimal,
    pub relation: Relation,
}

impl Reference {
    /// `About` allows half a point either way; `Over` must strictly exceed.
    pub fn is_met(&self, percent: Decimal) -> bool {
        match self.relation {
            Relation::About => (percent - self.percent).abs() <= Decimal::new(5, 1),
            Relation::Over => percent > self.percent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsEntry {
    pub label: String,
    pub candidate: AttributeSpec,
    pub baseline: AttributeSpec,
    pub candidate_uj: Decimal,
    pub baseline_uj: Decimal,
    /// 100 × (1 − candidate / baseline), two decimals.
    pub percent: Decimal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub unit: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<HostInfo>,
    pub integrity: Vec<EnergyEntry>,
    pub aead: Vec<EnergyEntry>,
    pub savings: Vec<SavingsEntry>,
    /// Cells whose recomputed energy disagrees with the printed value.
    pub inconsistent: Vec<String>,
    pub notes: Vec<String>,
}

struct Headline {
    label: &'static str,
    candidate: AttributeKind,
    size: usize,
    reference: Reference,
}

fn headlines() -> [Headline; 4] {
    let mac_only = AttributeKind::IntegrityOnly(MacVariant::HmacSha256);
    let cbc = AttributeKind::Aead(CipherMode::Cbc, MacVariant::HmacSha256);
    let r = |p: i64, relation| Reference {
        percent: Decimal::from(p),
        relation,
    };
    [
        Headline {
            label: "MAC-only vs GCM, 64 B",
            candidate: mac_only,
            size: 64,
            reference: r(50, Relation::About),
        },
        Headline {
            label: "MAC-only vs GCM, 512 B",
            candidate: mac_only,
            size: 512,
            reference: r(81, Relation::Over),
        },
        Headline {
            label: "CBC AEAD vs GCM, 64 B",
            candidate: cbc,
            size: 64,
            reference: r(32, Relation::Over),
        },
        Headline {
            label: "CBC AEAD vs GCM, 512 B",
            candidate: cbc,
            size: 512,
            reference: r(68, Relation::About),
        },
    ]
}

pub const GCM: AttributeKind = AttributeKind::Aead(CipherMode::Gcm, MacVariant::GcmTag);

/// Computes every energy cell and the headline savings. Reference timings
/// are cross-checked against the printed energy products.
pub fn build_report(timings: &[TimingSample], power: &PowerModel) -> Result<EnergyReport> {
    let mut integrity = Vec::new();
    let mut aead = Vec::new();
    let mut inconsistent = Vec::new();
    let mut energies = BTreeMap::new();

    for t in timings {
        let p = power
            .get(&t.attribute)
            .ok_or_else(|| Error::MissingPower(t.attribute.to_string()))?;
        let uj = energy_uj(t.per_op_micros, p.milliwatts)?;
        let printed = (t.provenance == Provenance::Reference)
            .then(|| tables::printed_energy(&t.attribute))
            .flatten();
        let consistent = printed.map(|pr| (uj - pr).abs() <= PRINTED_TOLERANCE_UJ);
        if consistent == Some(false) {
            inconsistent.push(format!(
                "{}: recomputed {:.3} uJ from {} us x {} mW, printed {:.3} uJ",
                t.attribute,
                round3(uj),
                t.per_op_micros,
                p.milliwatts,
                printed.unwrap()
            ));
        }
        energies.insert(t.attribute, uj);
        let entry = EnergyEntry {
            attribute: t.attribute,
            time_us: t.per_op_micros,
            power_mw: p.milliwatts,
            micro_joules: uj,
            provenance: t.provenance,
            power_provenance: p.provenance,
            printed_uj: printed,
            consistent,
        };
        if t.attribute.kind.is_integrity_only() {
            integrity.push(entry);
        } else {
            aead.push(entry);
        }
    }
    integrity.sort_by_key(|e| e.attribute);
    aead.sort_by_key(|e| e.attribute);

    let mut notes = vec!["energy = time (us) x power (mW) / 1000, reported in microjoules; \
         the reference energy tables carry a joule label but hold microjoule values"
        .to_string()];
    let mut savings = Vec::new();
    for h in headlines() {
        let candidate = AttributeSpec {
            kind: h.candidate,
            input_size: h.size,
        };
        let baseline = AttributeSpec {
            kind: GCM,
            input_size: h.size,
        };
        let (Some(&c), Some(&b)) = (energies.get(&candidate), energies.get(&baseline)) else {
            notes.push(format!("{}: skipped, timings lack {candidate} or {baseline}", h.label));
            continue;
        };
        let percent = round2(savings_percent_exact(c, b)?);
        let note = (!h.reference.is_met(percent)).then(|| {
            let rel = match h.reference.relation {
                Relation::About => "about",
                Relation::Over => "over",
            };
            format!(
                "recomputed {percent}% does not reproduce the quoted figure of {rel} {}%",
                h.reference.percent
            )
        });
        savings.push(SavingsEntry {
            label: h.label.to_string(),
            candidate,
            baseline,
            candidate_uj: c,
            baseline_uj: b,
            percent,
            reference: Some(h.reference),
            note,
        });
    }

    Ok(EnergyReport {
        unit: "uJ".to_string(),
        host: None,
        integrity,
        aead,
        savings,
        inconsistent,
        notes,
    })
}

impl EnergyReport {
    pub fn with_host(mut self, host: Option<HostInfo>) -> Self {
        self.host = host;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn entries(&self) -> impl Iterator<Item = &EnergyEntry> {
        self.integrity.iter().chain(&self.aead)
    }

    pub fn energy(&self, attribute: &AttributeSpec) -> Option<Decimal> {
        self.entries()
            .find(|e| e.attribute == *attribute)
            .map(|e| e.micro_joules)
    }

    /// Time, power and energy tables with one row per attribute and one
    /// column per input size, followed by the savings list.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        if let Some(h) = &self.host {
            let _ = writeln!(
                out,
                "host: {} {} ({} cpus), timer granularity {} ns\n",
                h.os, h.arch, h.cpus, h.timer_granularity_ns
            );
        }
        for (title, entries) in [("Integrity function", &self.integrity), ("AEAD function", &self.aead)] {
            if entries.is_empty() {
                continue;
            }
            type Cell = fn(&EnergyEntry) -> String;
            let columns: [(&str, Cell); 3] = [
                ("time analysis (us)", |e| e.time_us.normalize().to_string()),
                ("power analysis (mW)", |e| {
                    let flag = if e.power_provenance == Provenance::Derived {
                        "*"
                    } else {
                        ""
                    };
                    format!("{}{flag}", e.power_mw.normalize())
                }),
                ("energy consumption (uJ)", |e| {
                    let flag = if e.consistent == Some(false) { "!" } else { "" };
                    format!("{:.3}{flag}", round3(e.micro_joules))
                }),
            ];
            for (what, cell) in columns {
                render_table(&mut out, &format!("{title} {what}"), entries, cell);
            }
        }
        if !self.inconsistent.is_empty() {
            out.push_str("! recomputed energy disagrees with the printed reference cell:\n");
            for line in &self.inconsistent {
                let _ = writeln!(out, "  {line}");
            }
            out.push('\n');
        }
        if self.entries().any(|e| e.power_provenance == Provenance::Derived) {
            out.push_str("* power back-computed from reference energy and time\n\n");
        }
        if !self.savings.is_empty() {
            out.push_str("Savings\n");
            for s in &self.savings {
                let _ = writeln!(
                    out,
                    "  {:<24} {:>6.2}%  ({} {:.3} uJ vs {} {:.3} uJ)",
                    s.label,
                    s.percent,
                    s.candidate.kind,
                    round3(s.candidate_uj),
                    s.baseline.kind,
                    round3(s.baseline_uj)
                );
                if let Some(n) = &s.note {
                    let _ = writeln!(out, "  {:<24} note: {n}", "");
                }
            }
            out.push('\n');
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

fn render_table(out: &mut String, title: &str, entries: &[EnergyEntry], cell: fn(&EnergyEntry) -> String) {
    let sizes: BTreeSet<usize> = entries.iter().map(|e| e.attribute.input_size).collect();
    let mut rows: BTreeMap<AttributeKind, BTreeMap<usize, String>> = BTreeMap::new();
    for e in entries {
        rows.entry(e.attribute.kind)
            .or_default()
            .insert(e.attribute.input_size, cell(e));
    }
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:<28}", "");
    for s in &sizes {
        let _ = write!(out, "{:>16}", format!("{s} bytes input"));
    }
    out.push('\n');
    for (kind, cells) in rows {
        let _ = write!(out, "{:<28}", kind.to_string());
        for s in &sizes {
            let _ = write!(out, "{:>16}", cells.get(s).map_or("-", String::as_str));
        }
        out.push('\n');
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_power_is_an_error() {
        let timings = tables::reference_timings();
        let empty = PowerModel::default();
        assert!(matches!(build_report(&timings, &empty), Err(Error::MissingPower(_))));
    }

    #[test]
    fn measured_timings_are_not_cross_checked() {
        let mut timings = tables::reference_timings();
        for t in &mut timings {
            t.provenance = Provenance::Measured;
        }
        let report = build_report(&timings, &tables::reference_power()).unwrap();
        assert!(report.inconsistent.is_empty());
        assert!(report.entries().all(|e| e.printed_uj.is_none()));
    }

    #[test]
    fn partial_timings_skip_savings() {
        let timings: Vec<_> = tables::reference_timings()
            .into_iter()
            .filter(|t| t.attribute.kind.is_integrity_only())
            .collect();
        let report = build_report(&timings, &tables::reference_power()).unwrap();
        assert!(report.savings.is_empty());
        assert_eq!(report.notes.len(), 5);
    }

    #[test]
    fn file_round_trips() {
        let power = tables::reference_power();
        let json = serde_json::to_string(&PowerFile::from(&power)).unwrap();
        assert_eq!(load_power(&json).unwrap(), power);
        let timings = TimingsFile {
            host: None,
            samples: tables::reference_timings(),
        };
        let json = serde_json::to_string(&timings).unwrap();
        assert_eq!(load_timings(&json).unwrap(), timings);
        assert!(json.contains("\"attribute\":\"HMAC-SHA224\""));
        assert!(load_power(r#"{"entries":[{"attribute":"HMAC-SHA256","input_size":64,"milliwatts":"0"}]}"#).is_err());
        assert!(load_power(r#"{"entries":[{"attribute":"MD5","input_size":64,"milliwatts":"1"}]}"#).is_err());
    }

    #[test]
    fn reference_relations() {
        let about = Reference {
            percent: Decimal::from(50),
            relation: Relation::About,
        };
        assert!(about.is_met(Decimal::new(4985, 2)));
        assert!(!about.is_met(Decimal::new(4949, 2)));
        let over = Reference {
            percent: Decimal::from(32),
            relation: Relation::Over,
        };
        assert!(!over.is_met(Decimal::new(3166, 2)));
        assert!(!over.is_met(Decimal::from(32)));
    }
}
