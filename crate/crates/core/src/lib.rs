//! Selective-privacy message protection for sensor networks.
//!
//! Every message is authenticated; only classes whose risk band is High or
//! Critical are also encrypted. The crate covers risk scoring, the cipher
//! suites, the envelope wire format, replay protection, session rekeying,
//! energy accounting and a gateway simulator.

pub mod energy;
pub mod envelope;
pub mod error;
pub mod policy;
pub mod replay;
pub mod session;
pub mod sim;
pub mod suite;

pub use energy::{AttributeKind, AttributeSpec, EnergyReport, PowerModel, Provenance, TimingSample};
pub use envelope::{open, seal, Envelope, EnvelopeHeader, MessageMeta, Opened};
pub use error::{Error, ErrorKind, FormatError, Result};
pub use policy::{band_of, load_policy, score_risk, PolicyTable, PrivacyDecision, RiskBand, RiskFactors, RiskScore};
pub use replay::{ReplayVerdict, ReplayWindow};
pub use session::{apply_rekey, build_rekey_envelope, KeyStore, SessionKeys};
pub use sim::{run_simulation, FaultPlan, SimConfig, SimReport};
pub use suite::{CipherMode, KeyMaterial, MacVariant, SuiteConfig};

/// Wire-format version written into every envelope header.
pub const WIRE_VERSION: u8 = envelope::VERSION;
