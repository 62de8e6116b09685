//! Argument parsing and dispatch for the `paysec` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use paysec_core::energy::{self, tables, AttributeKind, AttributeSpec, HostInfo, PowerFile, TimingsFile};
use paysec_core::envelope::{self, MessageMeta};
use paysec_core::policy::{self, PolicyTable, RiskFactors};
use paysec_core::session::{self, KeyStore, DEFAULT_LIFETIME};
use paysec_core::sim::{self, FaultPlan, SimConfig, Transport};
use paysec_core::{Error, ErrorKind, Result, SuiteConfig};
use tempfile::NamedTempFile;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_FORMAT: u8 = 3;
pub const EXIT_AUTH: u8 = 4;
pub const EXIT_FRESHNESS: u8 = 5;
pub const EXIT_POLICY: u8 = 6;
pub const EXIT_MEASUREMENT: u8 = 7;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (wire format 0x01)");

#[derive(Debug, Parser)]
#[command(name = "paysec", version = VERSION, about = "Selective-privacy envelopes for sensor networks")]
#[command(arg_required_else_help = true, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Risk scoring and policy files
    #[command(subcommand)]
    Policy(PolicyCommand),
    /// Create a key store holding fresh keys for one sender
    Keygen(KeygenArgs),
    /// Seal a payload into an envelope
    Seal(SealArgs),
    /// Verify and open an envelope
    Open(OpenArgs),
    /// Rotate the sender's keys and write the rekey envelope
    Rekey(RekeyArgs),
    /// Install keys from a received rekey envelope
    RekeyApply(RekeyApplyArgs),
    /// Time the security attributes on this host
    Bench(BenchArgs),
    /// Compute energy tables and savings from timings and power
    Report(ReportArgs),
    /// Run the edge/gateway simulation
    Simulate(SimulateArgs),
}

#[derive(Debug, Subcommand)]
pub enum PolicyCommand {
    /// Score one set of risk factors
    Score {
        #[arg(long)]
        sensitivity: i64,
        #[arg(long)]
        vulnerability: i64,
        #[arg(long)]
        impact: i64,
    },
    /// Validate a policy file and print its table
    Check { file: PathBuf },
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long)]
    pub sender: u32,
    #[arg(long, default_value_t = 0)]
    pub epoch: u8,
    #[arg(long, default_value_t = DEFAULT_LIFETIME.as_secs() / 86_400)]
    pub lifetime_days: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SealArgs {
    #[arg(long)]
    pub suite: SuiteConfig,
    #[arg(long)]
    pub keys: PathBuf,
    #[arg(long)]
    pub class: u8,
    /// Defaults to the key store's next sequence number
    #[arg(long)]
    pub seq: Option<u64>,
    /// Required when the key store holds more than one sender
    #[arg(long)]
    pub sender: Option<u32>,
    /// Policy file; the built-in reference table when omitted
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OpenArgs {
    #[arg(long)]
    pub keys: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct RekeyArgs {
    #[arg(long)]
    pub keys: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub sender: Option<u32>,
    #[arg(long, default_value_t = SuiteConfig::PRIVATE_DEFAULT)]
    pub suite: SuiteConfig,
    #[arg(long)]
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RekeyApplyArgs {
    #[arg(long)]
    pub keys: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = tables::SIZES)]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = tables::REFERENCE_ITERATIONS)]
    pub iterations: Vec<u64>,
    /// Attributes to time; the nine reference attributes when omitted
    #[arg(long, value_delimiter = ',')]
    pub attributes: Vec<AttributeKind>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Timings file, or `reference` for the built-in tables
    #[arg(long)]
    pub timings: String,
    /// Power file, or `reference` for the built-in tables
    #[arg(long)]
    pub power: String,
    /// Structured report destination; text goes to standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 3)]
    pub edges: u32,
    #[arg(long, default_value_t = 60)]
    pub duration: u64,
    #[arg(long, default_value_t = 10)]
    pub period: u64,
    #[arg(long)]
    pub rekey_every: Option<u64>,
    #[arg(long, default_value = "loopback")]
    pub transport: Transport,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub tamper: f64,
    #[arg(long, default_value_t = 0.0)]
    pub replay: f64,
    #[arg(long, default_value_t = 0.0)]
    pub drop: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status for a failed command.
pub fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Validation => EXIT_USAGE,
        ErrorKind::Format => EXIT_FORMAT,
        ErrorKind::Authentication | ErrorKind::Key | ErrorKind::Protocol => EXIT_AUTH,
        ErrorKind::Freshness => EXIT_FRESHNESS,
        ErrorKind::Policy => EXIT_POLICY,
        ErrorKind::Measurement => EXIT_MEASUREMENT,
        ErrorKind::Entropy | ErrorKind::Io => EXIT_OTHER,
    }
}

/// Writes through a temporary file in the same directory so `path` is
/// either untouched or fully written.
pub fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(data)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))
}

fn load_keys(path: &Path) -> Result<KeyStore> {
    KeyStore::from_toml(&read_text(path)?)
}

fn load_policy_or_reference(path: Option<&Path>) -> Result<PolicyTable> {
    match path {
        Some(p) => policy::load_policy(&read_text(p)?),
        None => Ok(PolicyTable::reference()),
    }
}

fn pick_sender(store: &KeyStore, sender: Option<u32>) -> Result<u32> {
    if let Some(s) = sender {
        return store
            .peer(s)
            .map(|_| s)
            .ok_or_else(|| Error::KeyStore(format!("no keys for sender {s}")));
    }
    let senders: Vec<u32> = store.senders().collect();
    match senders.as_slice() {
        [only] => Ok(*only),
        [] => Err(Error::KeyStore("key store is empty".into())),
        _ => Err(Error::Config("key store holds several senders; pass --sender".into())),
    }
}

fn is_reference(source: &str) -> bool {
    matches!(source, "paper" | "reference")
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Policy(PolicyCommand::Score {
            sensitivity,
            vulnerability,
            impact,
        }) => {
            let factors = RiskFactors::new(sensitivity, vulnerability, impact)?;
            let score = policy::score_risk(factors);
            writeln!(out, "{score} {}", policy::band_of(score))?;
        }
        Command::Policy(PolicyCommand::Check { file }) => {
            let table = policy::load_policy(&read_text(&file)?)?;
            write!(out, "{}", table.render_table())?;
        }
        Command::Keygen(a) => {
            let lifetime = Duration::from_secs(a.lifetime_days.saturating_mul(86_400));
            session::check_lifetime(lifetime)?;
            let keys = session::generate_session_keys_at(a.epoch, session::unix_now(), lifetime)?;
            let mut store = KeyStore::new();
            store.insert(a.sender, keys);
            write_atomic(&a.out, store.to_toml().as_bytes())?;
            writeln!(
                out,
                "wrote keys for sender {} epoch {} to {}",
                a.sender,
                a.epoch,
                a.out.display()
            )?;
        }
        Command::Seal(a) => seal(a, out)?,
        Command::Open(a) => {
            let mut store = load_keys(&a.keys)?;
            let wire = read(&a.input)?;
            let opened = store.open(&wire)?;
            write_atomic(&a.keys, store.to_toml().as_bytes())?;
            let h = opened.header;
            writeln!(out, "class: {}", opened.class_id)?;
            writeln!(out, "privacy: {}", opened.privacy_used)?;
            writeln!(
                out,
                "sender: {} epoch: {} sequence: {}",
                h.sender_id, h.key_epoch, h.sequence
            )?;
            out.write_all(&opened.plaintext)?;
            writeln!(out)?;
        }
        Command::Rekey(a) => {
            let policy = load_policy_or_reference(a.policy.as_deref())?;
            let mut store = load_keys(&a.keys)?;
            let sender = pick_sender(&store, a.sender)?;
            let peer = store.peer_mut(sender).expect("sender exists");
            let next = peer.current.rotate_at(session::unix_now())?;
            let sequence = peer.next_sequence;
            let wire = session::build_rekey_envelope(&peer.current, &next, sender, sequence, &policy, a.suite)?;
            peer.current = next;
            peer.previous = None;
            peer.next_sequence = sequence + 1;
            let epoch = peer.current.epoch;
            write_atomic(&a.out, &wire)?;
            write_atomic(&a.keys, store.to_toml().as_bytes())?;
            writeln!(
                out,
                "sender {sender} rotated to epoch {epoch}; {} byte rekey envelope",
                wire.len()
            )?;
        }
        Command::RekeyApply(a) => {
            let mut store = load_keys(&a.keys)?;
            let wire = read(&a.input)?;
            let opened = session::apply_rekey(&mut store, &wire, session::unix_now())?;
            write_atomic(&a.keys, store.to_toml().as_bytes())?;
            let sender = opened.header.sender_id;
            let epoch = store.peer(sender).map(|p| p.current.epoch).unwrap_or_default();
            writeln!(out, "sender {sender} now at epoch {epoch}")?;
        }
        Command::Bench(a) => bench(a, out)?,
        Command::Report(a) => {
            let timings = if is_reference(&a.timings) {
                TimingsFile {
                    host: None,
                    samples: tables::reference_timings(),
                }
            } else {
                energy::load_timings(&read_text(Path::new(&a.timings))?)?
            };
            let power = if is_reference(&a.power) {
                tables::reference_power()
            } else {
                energy::load_power(&read_text(Path::new(&a.power))?)?
            };
            let report = energy::build_report(&timings.samples, &power)?.with_host(timings.host);
            if let Some(path) = &a.out {
                write_atomic(path, report.to_json().as_bytes())?;
            }
            write!(out, "{}", report.render_text())?;
        }
        Command::Simulate(a) => {
            let config = SimConfig {
                edges: a.edges,
                duration_secs: a.duration,
                period_secs: a.period,
                rekey_every_secs: a.rekey_every,
                faults: FaultPlan {
                    tamper_rate: a.tamper,
                    replay_rate: a.replay,
                    drop_rate: a.drop,
                    seed: a.seed,
                },
                transport: a.transport,
            };
            config.validate()?;
            let report = sim::run_simulation(&config)?;
            if let Some(path) = &a.out {
                write_atomic(path, report.to_json().as_bytes())?;
            }
            let g = report.gateway;
            writeln!(
                out,
                "sent {} delivered {}: accepted {} auth_failure {} replay {} format_error {}",
                report.delivery.sent, report.delivery.delivered, g.accepted, g.auth_failure, g.replay, g.format_error
            )?;
            writeln!(
                out,
                "energy {} uJ vs {} uJ all-GCM: {}% saved",
                report.energy_uj, report.counterfactual_uj, report.savings_percent
            )?;
        }
    }
    Ok(())
}

fn seal(a: SealArgs, out: &mut dyn Write) -> Result<()> {
    let policy = load_policy_or_reference(a.policy.as_deref())?;
    let decision = policy.decide(a.class)?;
    a.suite.check_decision(decision)?;
    let mut store = load_keys(&a.keys)?;
    let sender = pick_sender(&store, a.sender)?;
    let plaintext = read(&a.input)?;
    let peer = store.peer_mut(sender).expect("sender exists");
    let sequence = a.seq.unwrap_or(peer.next_sequence);
    let meta = MessageMeta {
        sender_id: sender,
        epoch: peer.current.epoch,
        sequence,
        class_id: a.class,
    };
    let wire = envelope::seal(&peer.current.keys, meta, decision, a.suite, &plaintext)?;
    peer.next_sequence = peer.next_sequence.max(sequence.saturating_add(1));
    write_atomic(&a.out, &wire)?;
    write_atomic(&a.keys, store.to_toml().as_bytes())?;
    writeln!(
        out,
        "sealed {} bytes as {} bytes (class {}, sequence {sequence})",
        plaintext.len(),
        wire.len(),
        a.class
    )?;
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    if a.sizes.is_empty() || a.iterations.is_empty() {
        return Err(Error::Config("--sizes and --iterations must be non-empty".into()));
    }
    if let Some(low) = a.iterations.iter().find(|&&c| c < energy::MIN_ITERATIONS) {
        return Err(Error::Measurement(format!(
            "iteration count {low} is below the minimum of {}",
            energy::MIN_ITERATIONS
        )));
    }
    let kinds = if a.attributes.is_empty() {
        AttributeKind::reference_set()
    } else {
        a.attributes
    };
    let specs = a
        .sizes
        .iter()
        .flat_map(|&size| kinds.iter().map(move |&k| AttributeSpec::new(k, size)))
        .collect::<Result<Vec<_>>>()?;

    let granularity = energy::timer_granularity();
    let mut samples = Vec::with_capacity(specs.len());
    for spec in specs {
        let sample = energy::bench_attribute(spec, &a.iterations)?;
        writeln!(
            out,
            "{:<36} {:>12} us  (dispersion {:.1}%)",
            spec.to_string(),
            sample.per_op_micros,
            sample.dispersion * 100.0
        )?;
        samples.push(sample);
    }
    for &size in &a.sizes {
        let mut at: Vec<_> = samples.iter().filter(|s| s.attribute.input_size == size).collect();
        at.sort_by_key(|s| s.per_op_micros);
        let order: Vec<String> = at.iter().map(|s| s.attribute.kind.to_string()).collect();
        writeln!(out, "fastest to slowest @{size}B: {}", order.join(" < "))?;
    }
    let host = HostInfo::current(granularity.as_nanos() as u64, session::unix_now());
    let file = TimingsFile {
        host: Some(host),
        samples,
    };
    if let Some(path) = &a.out {
        let json = serde_json::to_string_pretty(&file).expect("timings serialize");
        write_atomic(path, json.as_bytes())?;
    }
    Ok(())
}

/// Reference power in the file format `report --power` reads.
pub fn reference_power_file() -> String {
    serde_json::to_string_pretty(&PowerFile::from(&tables::reference_power())).expect("power serializes")
}
