//! On-device session keys, the encrypted rekey exchange, and the
//! receiver-side key store.
//!
//! Every node draws its own keys. A rotation sends the next epoch's keys
//! sealed under the current ones as a 512-byte private message. The
//! receiver keeps the outgoing epoch alive until the first envelope under
//! the new epoch opens, then drops it.

use std::collections::BTreeMap;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::envelope::{self, MessageMeta, Opened};
use crate::error::{Error, Result};
use crate::policy::{PolicyTable, SESSION_KEYS_CLASS};
use crate::replay::ReplayWindow;
use crate::suite::{self, KeyMaterial, SuiteConfig, ENC_KEY_LEN, MAC_KEY_LEN};

pub const DEFAULT_LIFETIME: Duration = Duration::from_secs(30 * 24 * 3600);
pub const MIN_LIFETIME: Duration = Duration::from_secs(3600);
pub const MAX_LIFETIME: Duration = Duration::from_secs(365 * 24 * 3600);

pub const REKEY_PAYLOAD_LEN: usize = 512;
const KEY_STORE_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionKeys {
    pub keys: KeyMaterial,
    pub epoch: u8,
    /// Seconds since the Unix epoch (or since simulation start).
    pub created_at: u64,
    pub lifetime: Duration,
}

impl SessionKeys {
    pub fn expires_at(&self) -> u64 {
        self.created_at.saturating_add(self.lifetime.as_secs())
    }

    pub fn is_due(&self, now: u64) -> bool {
        now >= self.expires_at()
    }

    /// Fresh keys for the following epoch, wrapping after 255.
    pub fn rotate_at(&self, now: u64) -> Result<SessionKeys> {
        generate_session_keys_at(self.epoch.wrapping_add(1), now, self.lifetime)
    }
}

pub fn check_lifetime(lifetime: Duration) -> Result<()> {
    if (MIN_LIFETIME..=MAX_LIFETIME).contains(&lifetime) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "key lifetime {}s outside {}s..={}s",
            lifetime.as_secs(),
            MIN_LIFETIME.as_secs(),
            MAX_LIFETIME.as_secs()
        )))
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn generate_session_keys(epoch: u8) -> Result<SessionKeys> {
    generate_session_keys_at(epoch, unix_now(), DEFAULT_LIFETIME)
}

pub fn generate_session_keys_at(epoch: u8, created_at: u64, lifetime: Duration) -> Result<SessionKeys> {
    Ok(SessionKeys {
        keys: KeyMaterial::generate()?,
        epoch,
        created_at,
        lifetime,
    })
}

/// The next epoch's keys as carried inside a rekey envelope.
///
/// Layout: enc key (16) | mac key (32) | epoch (1) | random fill to 512.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RekeyPayload {
    pub keys: KeyMaterial,
    pub new_epoch: u8,
}

impl RekeyPayload {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(REKEY_PAYLOAD_LEN);
        out.extend_from_slice(&self.keys.enc_key);
        out.extend_from_slice(&self.keys.mac_key);
        out.push(self.new_epoch);
        out.extend(suite::generate_random(REKEY_PAYLOAD_LEN - out.len())?);
        Ok(out)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != REKEY_PAYLOAD_LEN {
            return Err(Error::Protocol(format!(
                "rekey payload is {} bytes, expected {REKEY_PAYLOAD_LEN}",
                bytes.len()
            )));
        }
        Ok(Self {
            keys: KeyMaterial::from_slices(&bytes[..ENC_KEY_LEN], &bytes[ENC_KEY_LEN..ENC_KEY_LEN + MAC_KEY_LEN])?,
            new_epoch: bytes[ENC_KEY_LEN + MAC_KEY_LEN],
        })
    }
}

/// Seals `next` under `current` as a Session-keys message.
pub fn build_rekey_envelope(
    current: &SessionKeys,
    next: &SessionKeys,
    sender_id: u32,
    sequence: u64,
    policy: &PolicyTable,
    suite: SuiteConfig,
) -> Result<Vec<u8>> {
    if next.epoch != current.epoch.wrapping_add(1) {
        return Err(Error::Protocol(format!(
            "next epoch {} does not follow current epoch {}",
            next.epoch, current.epoch
        )));
    }
    let decision = policy.decide(SESSION_KEYS_CLASS)?;
    if !decision.requires_privacy || !suite.mode().encrypts() {
        return Err(Error::PolicyViolation(format!(
            "session keys must be encrypted (suite {suite}, band {})",
            decision.band
        )));
    }
    let payload = RekeyPayload {
        keys: next.keys.clone(),
        new_epoch: next.epoch,
    }
    .to_bytes()?;
    let meta = MessageMeta {
        sender_id,
        epoch: current.epoch,
        sequence,
        class_id: SESSION_KEYS_CLASS,
    };
    envelope::seal(&current.keys, meta, decision, suite, &payload)
}

/// One sender's keys as seen by a receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerKeys {
    pub current: SessionKeys,
    /// Outgoing epoch, kept until the first envelope under `current` opens.
    pub previous: Option<SessionKeys>,
    windows: BTreeMap<u8, ReplayWindow>,
    /// Next sequence number to use when this node is the sender.
    pub next_sequence: u64,
}

impl PeerKeys {
    pub fn new(current: SessionKeys) -> Self {
        Self {
            current,
            previous: None,
            windows: BTreeMap::new(),
            next_sequence: 1,
        }
    }

    fn keys_for(&self, epoch: u8) -> Option<&SessionKeys> {
        if self.current.epoch == epoch {
            Some(&self.current)
        } else {
            self.previous.as_ref().filter(|p| p.epoch == epoch)
        }
    }

    pub fn window(&self, epoch: u8) -> ReplayWindow {
        self.windows.get(&epoch).copied().unwrap_or_default()
    }
}

/// Keys per sender. Mutations happen through `&mut self`, so a reader
/// either sees the store before a rotation or after it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyStore {
    peers: BTreeMap<u32, PeerKeys>,
}

impl KeyStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, sender_id: u32, keys: SessionKeys) {
        self.peers.insert(sender_id, PeerKeys::new(keys));
    }

    pub fn peer(&self, sender_id: u32) -> Option<&PeerKeys> {
        self.peers.get(&sender_id)
    }

    pub fn peer_mut(&mut self, sender_id: u32) -> Option<&mut PeerKeys> {
        self.peers.get_mut(&sender_id)
    }

    pub fn senders(&self) -> impl Iterator<Item = u32> + '_ {
        self.peers.keys().copied()
    }

    pub fn lookup(&self, sender_id: u32, epoch: u8) -> Option<&KeyMaterial> {
        self.peers.get(&sender_id)?.keys_for(epoch).map(|k| &k.keys)
    }

    /// Opens `wire`, lets `accept` veto the result, and only then commits
    /// the replay window and retires the previous epoch if applicable.
    fn open_with<F>(&mut self, wire: &[u8], accept: F) -> Result<Opened>
    where
        F: FnOnce(&PeerKeys, &Opened) -> Result<()>,
    {
        let env = envelope::decode(wire)?;
        let h = env.header;
        let unknown = Error::UnknownKey {
            sender_id: h.sender_id,
            epoch: h.key_epoch,
        };
        let peer = self.peers.get_mut(&h.sender_id).ok_or(unknown)?;
        let keys = peer
            .keys_for(h.key_epoch)
            .ok_or(Error::UnknownKey {
                sender_id: h.sender_id,
                epoch: h.key_epoch,
            })?
            .keys
            .clone();
        let mut window = peer.window(h.key_epoch);
        let opened = envelope::open_envelope(&keys, &mut window, &env)?;
        accept(peer, &opened)?;
        peer.windows.insert(h.key_epoch, window);
        if h.key_epoch == peer.current.epoch {
            if let Some(prev) = peer.previous.take() {
                peer.windows.remove(&prev.epoch);
            }
        }
        Ok(opened)
    }

    pub fn open(&mut self, wire: &[u8]) -> Result<Opened> {
        self.open_with(wire, |_, _| Ok(()))
    }
}

/// Installs the keys carried by a rekey envelope. The envelope must open
/// under the sender's current epoch and announce exactly the next epoch.
pub fn apply_rekey(store: &mut KeyStore, wire: &[u8], created_at: u64) -> Result<Opened> {
    let mut announced = None;
    let opened = store.open_with(wire, |peer, opened| {
        if opened.class_id != SESSION_KEYS_CLASS {
            return Err(Error::Protocol(format!("class {} is not a rekey", opened.class_id)));
        }
        if !opened.privacy_used {
            return Err(Error::PolicyViolation("rekey arrived unencrypted".into()));
        }
        if opened.header.key_epoch != peer.current.epoch {
            return Err(Error::Protocol(format!(
                "rekey sealed under epoch {}, current is {}",
                opened.header.key_epoch, peer.current.epoch
            )));
        }
        let payload = RekeyPayload::parse(&opened.plaintext)?;
        let expected = peer.current.epoch.wrapping_add(1);
        if payload.new_epoch != expected {
            return Err(Error::Protocol(format!(
                "rekey announces epoch {}, expected {expected}",
                payload.new_epoch
            )));
        }
        announced = Some((payload, peer.current.lifetime));
        Ok(())
    })?;
    let (payload, lifetime) = announced.expect("set by accept closure");
    let peer = store.peer_mut(opened.header.sender_id).expect("peer exists after open");
    let next = SessionKeys {
        keys: payload.keys,
        epoch: payload.new_epoch,
        created_at,
        lifetime,
    };
    let old = std::mem::replace(&mut peer.current, next);
    if let Some(prev) = peer.previous.replace(old) {
        peer.windows.remove(&prev.epoch);
    }
    peer.windows.remove(&payload.new_epoch);
    Ok(opened)
}

// Key store file

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyStoreFile {
    format_version: u32,
    #[serde(default)]
    keys: Vec<KeyEntry>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum Slot {
    Current,
    Previous,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyEntry {
    sender_id: u32,
    epoch: u8,
    slot: Slot,
    enc_key: String,
    mac_key: String,
    created_at: u64,
    lifetime_secs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    next_sequence: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    replay_highest: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    replay_bitmap: Option<u64>,
}

impl KeyStore {
    /// TOML form: one `[[keys]]` table per (sender, epoch) with hex keys
    /// and any replay window state.
    pub fn to_toml(&self) -> String {
        let mut keys = Vec::new();
        for (&sender_id, peer) in &self.peers {
            let mut push = |k: &SessionKeys, slot: Slot| {
                let window = peer.windows.get(&k.epoch);
                keys.push(KeyEntry {
                    sender_id,
                    epoch: k.epoch,
                    slot,
                    enc_key: hex::encode(k.keys.enc_key),
                    mac_key: hex::encode(k.keys.mac_key),
                    created_at: k.created_at,
                    lifetime_secs: k.lifetime.as_secs(),
                    next_sequence: (slot == Slot::Current).then_some(peer.next_sequence),
                    replay_highest: window.map(ReplayWindow::highest_seen),
                    replay_bitmap: window.map(ReplayWindow::bitmap),
                });
            };
            push(&peer.current, Slot::Current);
            if let Some(prev) = &peer.previous {
                push(prev, Slot::Previous);
            }
        }
        toml::to_string(&KeyStoreFile {
            format_version: KEY_STORE_FORMAT,
            keys,
        })
        .expect("key store serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: KeyStoreFile = toml::from_str(text).map_err(|e| Error::KeyStore(e.message().to_string()))?;
        if file.format_version != KEY_STORE_FORMAT {
            return Err(Error::KeyStore(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let mut currents = BTreeMap::new();
        let mut previous = Vec::new();
        for e in file.keys {
            let enc = hex::decode(&e.enc_key).map_err(|err| Error::KeyStore(format!("enc_key: {err}")))?;
            let mac = hex::decode(&e.mac_key).map_err(|err| Error::KeyStore(format!("mac_key: {err}")))?;
            let keys = SessionKeys {
                keys: KeyMaterial::from_slices(&enc, &mac)?,
                epoch: e.epoch,
                created_at: e.created_at,
                lifetime: Duration::from_secs(e.lifetime_secs),
            };
            let window = match (e.replay_highest, e.replay_bitmap) {
                (Some(h), Some(b)) => Some(ReplayWindow::from_parts(h, b)),
                (None, None) => None,
                _ => return Err(Error::KeyStore("replay_highest and replay_bitmap go together".into())),
            };
            match e.slot {
                Slot::Current => {
                    let mut peer = PeerKeys::new(keys);
                    peer.next_sequence = e.next_sequence.unwrap_or(1);
                    if let Some(w) = window {
                        peer.windows.insert(e.epoch, w);
                    }
                    if currents.insert(e.sender_id, peer).is_some() {
                        return Err(Error::KeyStore(format!(
                            "sender {} has two current entries",
                            e.sender_id
                        )));
                    }
                }
                Slot::Previous => previous.push((e.sender_id, keys, window)),
            }
        }
        for (sender_id, keys, window) in previous {
            let peer = currents
                .get_mut(&sender_id)
                .ok_or_else(|| Error::KeyStore(format!("sender {sender_id} has a previous entry but no current")))?;
            if peer.previous.is_some() || keys.epoch.wrapping_add(1) != peer.current.epoch {
                return Err(Error::KeyStore(format!(
                    "sender {sender_id}: previous epoch {} must directly precede current {}",
                    keys.epoch, peer.current.epoch
                )));
            }
            if let Some(w) = window {
                peer.windows.insert(keys.epoch, w);
            }
            peer.previous = Some(keys);
        }
        Ok(Self { peers: currents })
    }
}
