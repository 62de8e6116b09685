//! Virtual-clock simulation of edge nodes streaming readings and rekeys to
//! a gateway, with fault injection and model-energy accounting.

use std::collections::BTreeMap;
use std::net::UdpSocket;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::energy::{self, tables, AttributeKind, AttributeSpec};
use crate::envelope::{self, MessageMeta, HEADER_LEN};
use crate::error::{Error, Result};
use crate::policy::{PolicyTable, SESSION_KEYS_CLASS};
use crate::session::{self, KeyStore, SessionKeys, DEFAULT_LIFETIME};
use crate::suite::SuiteConfig;

/// Payload size of every sensor reading.
pub const READING_LEN: usize = 64;

/// Energy per envelope, keyed by attribute and benchmarked input size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostModel {
    cells: BTreeMap<AttributeSpec, Decimal>,
}

impl CostModel {
    /// Reference timings times reference power.
    pub fn reference() -> Self {
        let (timings, power) = tables::reference_tables();
        let cells = timings
            .iter()
            .map(|t| {
                let p = power.get(&t.attribute).expect("reference power covers every timing");
                let uj = energy::energy_uj(t.per_op_micros, p.milliwatts).expect("reference cells are positive");
                (t.attribute, uj)
            })
            .collect();
        Self { cells }
    }

    /// Energy for one envelope carrying `len` plaintext bytes under
    /// `suite`. The flag is false when `len` was billed at the nearest
    /// benchmarked size rather than an exact one.
    pub fn charge(&self, suite: SuiteConfig, len: usize) -> Result<(Decimal, bool)> {
        let kind = AttributeKind::for_suite(suite);
        let nearest = self
            .cells
            .iter()
            .filter(|(a, _)| a.kind == kind)
            .min_by_key(|(a, _)| a.input_size.abs_diff(len))
            .ok_or_else(|| Error::MissingPower(kind.to_string()))?;
        Ok((*nearest.1, nearest.0.input_size == len))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultPlan {
    pub tamper_rate: f64,
    pub replay_rate: f64,
    pub drop_rate: f64,
    pub seed: u64,
}

impl Default for FaultPlan {
    fn default() -> Self {
        Self {
            tamper_rate: 0.0,
            replay_rate: 0.0,
            drop_rate: 0.0,
            seed: 0,
        }
    }
}

impl FaultPlan {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("tamper", self.tamper_rate),
            ("replay", self.replay_rate),
            ("drop", self.drop_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("{name} rate {r} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EdgeNodeState {
    pub sender_id: u32,
    pub session: SessionKeys,
    pub next_sequence: u64,
    pub policy: PolicyTable,
    /// (class id, period in seconds)
    pub schedule: Vec<(u8, u64)>,
    next_reading: BTreeMap<u8, u64>,
    pub rekey_every: Option<u64>,
    pub rekey_due: Option<u64>,
    pub reading_suite: SuiteConfig,
    pub rekey_suite: SuiteConfig,
    pub costs: CostModel,
    pub energy_uj: Decimal,
    pub counterfactual_uj: Decimal,
    /// Envelopes billed at a size other than a benchmarked one.
    pub approximate_charges: u64,
    pub sent_by_class: BTreeMap<u8, u64>,
    last_step: u64,
}

impl EdgeNodeState {
    pub fn new(
        sender_id: u32,
        session: SessionKeys,
        policy: PolicyTable,
        schedule: Vec<(u8, u64)>,
        rekey_every: Option<u64>,
    ) -> Result<Self> {
        if schedule.iter().any(|&(_, p)| p == 0) || rekey_every == Some(0) {
            return Err(Error::Config("periods must be positive".into()));
        }
        for &(class, _) in &schedule {
            policy.decide(class)?;
        }
        let start = session.created_at;
        Ok(Self {
            sender_id,
            next_reading: schedule.iter().map(|&(c, _)| (c, start)).collect(),
            rekey_due: rekey_every.map(|r| start + r),
            session,
            next_sequence: 1,
            policy,
            schedule,
            rekey_every,
            reading_suite: SuiteConfig::PUBLIC_DEFAULT,
            rekey_suite: SuiteConfig::PRIVATE_DEFAULT,
            costs: CostModel::reference(),
            energy_uj: Decimal::ZERO,
            counterfactual_uj: Decimal::ZERO,
            approximate_charges: 0,
            sent_by_class: BTreeMap::new(),
            last_step: start,
        })
    }

    fn take_sequence(&mut self) -> u64 {
        let s = self.next_sequence;
        self.next_sequence += 1;
        s
    }

    fn bill(&mut self, class_id: u8, suite: SuiteConfig, len: usize) -> Result<()> {
        let (uj, exact) = self.costs.charge(suite, len)?;
        let (base, _) = self.costs.charge(SuiteConfig::GCM, len)?;
        self.energy_uj += uj;
        self.counterfactual_uj += base;
        if !exact {
            self.approximate_charges += 1;
        }
        *self.sent_by_class.entry(class_id).or_default() += 1;
        Ok(())
    }
}

/// Fixed-format reading text, space-padded to [`READING_LEN`].
fn reading_text(policy: &PolicyTable, sender_id: u32, class_id: u8, now: u64) -> Vec<u8> {
    let name = policy.get(class_id).map_or("reading", |c| c.name());
    let value = (u64::from(sender_id) * 37 + now * 13 + u64::from(class_id) * 101) % 1000;
    let mut text = format!("{name} node={sender_id} t={now} value={}.{}", value / 10, value % 10).into_bytes();
    text.resize(READING_LEN, b' ');
    text
}

/// Emits every envelope due at `now`: readings first, then a rekey if one
/// is due.
pub fn step_edge(node: &mut EdgeNodeState, now: u64) -> Result<Vec<Vec<u8>>> {
    if now < node.last_step {
        return Err(Error::Protocol(format!(
            "clock went backwards: {now} < {}",
            node.last_step
        )));
    }
    node.last_step = now;
    let mut out = Vec::new();

    for (class_id, period) in node.schedule.clone() {
        let due = node.next_reading[&class_id];
        if due > now {
            continue;
        }
        let skipped = (now - due) / period;
        node.next_reading.insert(class_id, due + (skipped + 1) * period);
        let meta = MessageMeta {
            sender_id: node.sender_id,
            epoch: node.session.epoch,
            sequence: node.take_sequence(),
            class_id,
        };
        let text = reading_text(&node.policy, node.sender_id, class_id, now);
        let decision = node.policy.decide(class_id)?;
        out.push(envelope::seal(
            &node.session.keys,
            meta,
            decision,
            node.reading_suite,
            &text,
        )?);
        node.bill(class_id, node.reading_suite, text.len())?;
    }

    if let (Some(due), Some(every)) = (node.rekey_due, node.rekey_every) {
        if due <= now {
            let next = node.session.rotate_at(now)?;
            let sequence = node.take_sequence();
            let wire = session::build_rekey_envelope(
                &node.session,
                &next,
                node.sender_id,
                sequence,
                &node.policy,
                node.rekey_suite,
            )?;
            out.push(wire);
            node.bill(SESSION_KEYS_CLASS, node.rekey_suite, session::REKEY_PAYLOAD_LEN)?;
            node.session = next;
            node.rekey_due = Some(now + every);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GatewayEvent {
    Accepted {
        sender_id: u32,
        class_id: u8,
        #[serde(with = "hex_bytes")]
        plaintext: Vec<u8>,
        privacy_used: bool,
    },
    AuthFailure {
        reason: String,
    },
    Replay {
        reason: String,
    },
    FormatError {
        reason: String,
    },
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tallies {
    pub accepted: u64,
    pub auth_failure: u64,
    pub replay: u64,
    pub format_error: u64,
}

impl Tallies {
    pub fn total(&self) -> u64 {
        self.accepted + self.auth_failure + self.replay + self.format_error
    }
}

#[derive(Debug, Clone, Default)]
pub struct GatewayState {
    pub keys: KeyStore,
    pub log: Vec<GatewayEvent>,
    pub tallies: Tallies,
    /// Virtual time stamped on keys installed by rekeys.
    pub clock: u64,
}

impl GatewayState {
    pub fn new(keys: KeyStore) -> Self {
        Self {
            keys,
            ..Self::default()
        }
    }
}

/// Opens one envelope, installing keys when it is a rekey. Every outcome
/// is recorded as an event.
pub fn gateway_receive(gw: &mut GatewayState, wire: &[u8]) -> GatewayEvent {
    let result = envelope::decode(wire).and_then(|env| {
        if env.header.class_id == SESSION_KEYS_CLASS {
            session::apply_rekey(&mut gw.keys, wire, gw.clock)
        } else {
            gw.keys.open(wire)
        }
    });
    let event = match result {
        Ok(o) => {
            gw.tallies.accepted += 1;
            GatewayEvent::Accepted {
                sender_id: o.header.sender_id,
                class_id: o.class_id,
                plaintext: o.plaintext,
                privacy_used: o.privacy_used,
            }
        }
        Err(e @ Error::Format(_)) => {
            gw.tallies.format_error += 1;
            GatewayEvent::FormatError { reason: e.to_string() }
        }
        Err(e @ Error::Freshness { .. }) => {
            gw.tallies.replay += 1;
            GatewayEvent::Replay { reason: e.to_string() }
        }
        Err(e) => {
            gw.tallies.auth_failure += 1;
            GatewayEvent::AuthFailure { reason: e.to_string() }
        }
    };
    gw.log.push(event.clone());
    event
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    #[default]
    Loopback,
    Udp,
}

impl std::str::FromStr for Transport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loopback" => Ok(Transport::Loopback),
            "udp" => Ok(Transport::Udp),
            other => Err(Error::Config(format!("unknown transport {other:?}"))),
        }
    }
}

enum Link {
    Loopback,
    Udp { tx: UdpSocket, rx: UdpSocket, buf: Vec<u8> },
}

impl Link {
    fn open(transport: Transport) -> Result<Self> {
        match transport {
            Transport::Loopback => Ok(Link::Loopback),
            Transport::Udp => {
                let rx = UdpSocket::bind("127.0.0.1:0")?;
                rx.set_read_timeout(Some(Duration::from_secs(5)))?;
                let tx = UdpSocket::bind("127.0.0.1:0")?;
                tx.connect(rx.local_addr()?)?;
                Ok(Link::Udp {
                    tx,
                    rx,
                    buf: vec![0; 65_536],
                })
            }
        }
    }

    fn carry(&mut self, wire: &[u8]) -> Result<Vec<u8>> {
        match self {
            Link::Loopback => Ok(wire.to_vec()),
            Link::Udp { tx, rx, buf } => {
                tx.send(wire)?;
                let n = rx.recv(buf)?;
                Ok(buf[..n].to_vec())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub edges: u32,
    pub duration_secs: u64,
    /// Reading period for every reading class.
    pub period_secs: u64,
    pub rekey_every_secs: Option<u64>,
    pub faults: FaultPlan,
    pub transport: Transport,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            edges: 3,
            duration_secs: 60,
            period_secs: 10,
            rekey_every_secs: None,
            faults: FaultPlan::default(),
            transport: Transport::Loopback,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.edges == 0 {
            return Err(Error::Config("at least one edge node is required".into()));
        }
        if self.duration_secs == 0 || self.period_secs == 0 || self.rekey_every_secs == Some(0) {
            return Err(Error::Config("duration and periods must be positive".into()));
        }
        self.faults.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub sender_id: u32,
    /// Envelopes sent, keyed by class name.
    pub sent_by_class: BTreeMap<String, u64>,
    pub final_epoch: u8,
    pub energy_uj: Decimal,
    pub counterfactual_uj: Decimal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub sent: u64,
    pub dropped: u64,
    pub tampered: u64,
    pub duplicated: u64,
    pub delivered: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub assumptions: Vec<String>,
    pub config: SimConfig,
    pub nodes: Vec<NodeReport>,
    pub delivery: Delivery,
    pub gateway: Tallies,
    pub readings_accepted: u64,
    pub rekeys_accepted: u64,
    /// Accepted readings that arrived encrypted, or rekeys that did not.
    pub privacy_mismatches: u64,
    pub energy_uj: Decimal,
    pub counterfactual_uj: Decimal,
    pub savings_percent: Decimal,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub caveats: Vec<String>,
}

impl SimReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the whole scenario on a virtual clock. The report depends only on
/// `config`, including its fault seed.
pub fn run_simulation(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let policy = PolicyTable::reference();
    let schedule: Vec<(u8, u64)> = policy
        .reading_classes()
        .map(|c| (c.class_id(), config.period_secs))
        .collect();

    let mut gateway_keys = KeyStore::new();
    let mut nodes = Vec::new();
    for i in 0..config.edges {
        let sender_id = i + 1;
        let keys = session::generate_session_keys_at(0, 0, DEFAULT_LIFETIME)?;
        gateway_keys.insert(sender_id, keys.clone());
        nodes.push(EdgeNodeState::new(
            sender_id,
            keys,
            policy.clone(),
            schedule.clone(),
            config.rekey_every_secs,
        )?);
    }
    let mut gw = GatewayState::new(gateway_keys);
    let mut link = Link::open(config.transport)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.faults.seed);
    let faults = config.faults;
    let mut delivery = Delivery::default();

    let tick = gcd(
        config.period_secs,
        config.rekey_every_secs.unwrap_or(config.period_secs),
    );
    let mut now = 0;
    while now < config.duration_secs {
        gw.clock = now;
        for node in &mut nodes {
            for wire in step_edge(node, now)? {
                delivery.sent += 1;
                // fixed draw order keeps runs reproducible
                let drop = rng.gen::<f64>() < faults.drop_rate;
                let tamper = rng.gen::<f64>() < faults.tamper_rate;
                let replay = rng.gen::<f64>() < faults.replay_rate;
                let bit = rng.gen_range(HEADER_LEN * 8..wire.len() * 8);
                if drop {
                    delivery.dropped += 1;
                    continue;
                }
                let mut wire = wire;
                if tamper {
                    wire[bit / 8] ^= 1 << (bit % 8);
                    delivery.tampered += 1;
                }
                let received = link.carry(&wire)?;
                gateway_receive(&mut gw, &received);
                delivery.delivered += 1;
                if replay {
                    let again = link.carry(&wire)?;
                    gateway_receive(&mut gw, &again);
                    delivery.duplicated += 1;
                    delivery.delivered += 1;
                }
            }
        }
        now += tick;
    }

    let (mut readings, mut rekeys, mut mismatches) = (0, 0, 0);
    for e in &gw.log {
        if let GatewayEvent::Accepted {
            class_id, privacy_used, ..
        } = e
        {
            let rekey = *class_id == SESSION_KEYS_CLASS;
            if rekey {
                rekeys += 1;
            } else {
                readings += 1;
            }
            if rekey != *privacy_used {
                mismatches += 1;
            }
        }
    }

    let energy_uj: Decimal = nodes.iter().map(|n| n.energy_uj).sum();
    let counterfactual_uj: Decimal = nodes.iter().map(|n| n.counterfactual_uj).sum();
    let mut caveats = Vec::new();
    let approximate: u64 = nodes.iter().map(|n| n.approximate_charges).sum();
    if approximate > 0 {
        caveats.push(format!(
            "{approximate} envelopes billed at the nearest benchmarked input size"
        ));
    }

    Ok(SimReport {
        assumptions: vec![
            format!(
                "one reading per class every {} s on a virtual clock",
                config.period_secs
            ),
            format!(
                "readings are {READING_LEN} bytes, rekey payloads {} bytes",
                session::REKEY_PAYLOAD_LEN
            ),
            "energy billed from reference time and power cells; counterfactual bills every envelope as AES128-GCM"
                .to_string(),
        ],
        config: config.clone(),
        nodes: nodes
            .iter()
            .map(|n| NodeReport {
                sender_id: n.sender_id,
                sent_by_class: n
                    .sent_by_class
                    .iter()
                    .map(|(c, k)| {
                        (
                            policy.get(*c).map_or_else(|| c.to_string(), |s| s.name().to_string()),
                            *k,
                        )
                    })
                    .collect(),
                final_epoch: n.session.epoch,
                energy_uj: n.energy_uj,
                counterfactual_uj: n.counterfactual_uj,
            })
            .collect(),
        delivery,
        gateway: gw.tallies,
        readings_accepted: readings,
        rekeys_accepted: rekeys,
        privacy_mismatches: mismatches,
        energy_uj,
        counterfactual_uj,
        savings_percent: energy::savings_percent(energy_uj, counterfactual_uj)?,
        caveats,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    fn edge(rekey_every: Option<u64>) -> EdgeNodeState {
        let policy = PolicyTable::reference();
        let schedule = policy.reading_classes().map(|c| (c.class_id(), 10)).collect();
        let keys = session::generate_session_keys_at(0, 0, DEFAULT_LIFETIME).unwrap();
        EdgeNodeState::new(7, keys, policy, schedule, rekey_every).unwrap()
    }

    #[test]
    fn reference_costs() {
        let costs = CostModel::reference();
        assert_eq!(
            costs.charge(SuiteConfig::PUBLIC_DEFAULT, 64).unwrap(),
            (d("14.105"), true)
        );
        assert_eq!(
            costs.charge(SuiteConfig::PRIVATE_DEFAULT, 512).unwrap(),
            (d("42.78"), true)
        );
        assert_eq!(costs.charge(SuiteConfig::GCM, 64).unwrap(), (d("28.124"), true));
        assert_eq!(costs.charge(SuiteConfig::GCM, 512).unwrap(), (d("135.248"), true));
        assert_eq!(costs.charge(SuiteConfig::GCM, 300).unwrap(), (d("135.248"), false));
        let sha384 = "mac-only-sha384".parse().unwrap();
        assert!(costs.charge(sha384, 64).is_ok());
        assert!(costs.charge("cbc-hmac-sha384".parse().unwrap(), 64).is_err());
    }

    #[test]
    fn step_emits_readings() {
        let mut node = edge(None);
        let out = step_edge(&mut node, 0).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|w| w.len() == HEADER_LEN + READING_LEN + 32));
        assert_eq!(node.energy_uj, d("42.315"));
        assert!(step_edge(&mut node, 5).unwrap().is_empty());
        assert_eq!(node.energy_uj, d("42.315"));
        assert_eq!(step_edge(&mut node, 10).unwrap().len(), 3);
        assert!(step_edge(&mut node, 9).is_err());
    }

    #[test]
    fn step_emits_rekey() {
        let mut node = edge(Some(30));
        for t in [0, 10, 20] {
            step_edge(&mut node, t).unwrap();
        }
        let before = node.energy_uj;
        let out = step_edge(&mut node, 30).unwrap();
        assert_eq!(out.len(), 4);
        assert_eq!(out[3].len(), 596);
        assert_eq!(node.energy_uj - before, d("42.315") + d("42.78"));
        assert_eq!(node.session.epoch, 1);
        assert_eq!(node.rekey_due, Some(60));
    }

    #[test]
    fn gateway_classifies() {
        let mut node = edge(None);
        let mut store = KeyStore::new();
        store.insert(7, node.session.clone());
        let mut gw = GatewayState::new(store);
        let out = step_edge(&mut node, 0).unwrap();
        assert!(matches!(
            gateway_receive(&mut gw, &out[0]),
            GatewayEvent::Accepted {
                privacy_used: false,
                class_id: 3,
                ..
            }
        ));
        assert!(matches!(gateway_receive(&mut gw, &out[0]), GatewayEvent::Replay { .. }));
        let mut bad = out[1].clone();
        bad[30] ^= 4;
        assert!(matches!(
            gateway_receive(&mut gw, &bad),
            GatewayEvent::AuthFailure { .. }
        ));
        assert!(matches!(
            gateway_receive(&mut gw, &out[2][..10]),
            GatewayEvent::FormatError { .. }
        ));
        assert_eq!(
            gw.tallies,
            Tallies {
                accepted: 1,
                auth_failure: 1,
                replay: 1,
                format_error: 1
            }
        );
    }

    #[test]
    fn baseline_run() {
        let report = run_simulation(&SimConfig::default()).unwrap();
        assert_eq!(report.readings_accepted, 54);
        assert_eq!(report.gateway.accepted, 54);
        assert_eq!(report.gateway.total(), 54);
        assert_eq!(report.savings_percent, d("49.85"));
        assert_eq!(report.privacy_mismatches, 0);
    }

    #[test]
    fn full_tamper() {
        let config = SimConfig {
            faults: FaultPlan {
                tamper_rate: 1.0,
                ..FaultPlan::default()
            },
            ..SimConfig::default()
        };
        let report = run_simulation(&config).unwrap();
        assert_eq!(report.gateway.accepted, 0);
        assert_eq!(report.gateway.auth_failure, 54);
    }

    #[test]
    fn udp_matches_loopback() {
        let mut config = SimConfig {
            rekey_every_secs: Some(20),
            ..SimConfig::default()
        };
        config.faults = FaultPlan {
            tamper_rate: 0.1,
            replay_rate: 0.2,
            drop_rate: 0.05,
            seed: 9,
        };
        let a = run_simulation(&config).unwrap().to_json();
        config.transport = Transport::Udp;
        let b = run_simulation(&config).unwrap().to_json();
        assert_eq!(a.replace("udp", "loopback"), b.replace("udp", "loopback"));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(run_simulation(&SimConfig {
            edges: 0,
            ..SimConfig::default()
        })
        .is_err());
        assert!(run_simulation(&SimConfig {
            duration_secs: 0,
            ..SimConfig::default()
        })
        .is_err());
        let faults = FaultPlan {
            drop_rate: 1.5,
            ..FaultPlan::default()
        };
        assert!(run_simulation(&SimConfig {
            faults,
            ..SimConfig::default()
        })
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn tallies_conserve(seed in any::<u64>(), t in 0.0f64..1.0, r in 0.0f64..1.0, dr in 0.0f64..1.0) {
            let config = SimConfig {
                rekey_every_secs: Some(20),
                faults: FaultPlan { tamper_rate: t, replay_rate: r, drop_rate: dr, seed },
                ..SimConfig::default()
            };
            let report = run_simulation(&config).unwrap();
            prop_assert_eq!(report.gateway.total(), report.delivery.delivered);
            prop_assert_eq!(report.delivery.delivered, report.delivery.sent - report.delivery.dropped + report.delivery.duplicated);
            prop_assert_eq!(run_simulation(&config).unwrap(), report);
        }

        #[test]
        fn rotations_never_reject(every in 10u64..40, duration in 20u64..200) {
            let config = SimConfig { rekey_every_secs: Some(every), duration_secs: duration, ..SimConfig::default() };
            let report = run_simulation(&config).unwrap();
            prop_assert_eq!(report.gateway.accepted, report.delivery.sent);
            prop_assert_eq!(report.privacy_mismatches, 0);
        }
    }
}
