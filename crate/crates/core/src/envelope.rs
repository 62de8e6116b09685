//! Envelope wire format and the seal/open operations.
//!
//! ```text
//! offset  size  field
//! 0       2     magic 0x50 0x53 ("PS")
//! 2       1     version (0x01)
//! 3       1     suite: mode nibble << 4 | mac nibble
//! 4       4     sender_id   (big-endian)
//! 8       1     class_id
//! 9       1     key_epoch
//! 10      8     sequence    (big-endian)
//! 18      2     payload_len (big-endian, bytes of payload as sent)
//! 20      16    IV          (absent for MAC-only)
//! ..      n     payload     (ciphertext, or plaintext for MAC-only)
//! ..      t     tag         (28/32/48/64 for HMAC, 16 for GCM)
//! ```
//!
//! HMAC suites are encrypt-then-MAC with the tag over every preceding byte.
//! GCM authenticates the header as associated data. The receiver verifies
//! the tag before it looks at the replay window or decrypts anything.

use crate::error::{Error, FormatError, Result};
use crate::policy::PrivacyDecision;
use crate::replay::{ReplayVerdict, ReplayWindow};
use crate::suite::{self, CipherMode, InitVector, KeyMaterial, MacVariant, SuiteConfig, IV_LEN, MAX_PLAINTEXT};

pub const MAGIC: [u8; 2] = [0x50, 0x53];
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 20;
/// Header plus the shortest tag (GCM's 16 bytes, with its IV).
pub const MIN_ENVELOPE_LEN: usize = HEADER_LEN + 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnvelopeHeader {
    pub suite: SuiteConfig,
    pub sender_id: u32,
    pub class_id: u8,
    pub key_epoch: u8,
    pub sequence: u64,
    pub payload_len: u16,
}

impl EnvelopeHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..2].copy_from_slice(&MAGIC);
        out[2] = VERSION;
        out[3] = self.suite.to_byte();
        out[4..8].copy_from_slice(&self.sender_id.to_be_bytes());
        out[8] = self.class_id;
        out[9] = self.key_epoch;
        out[10..18].copy_from_slice(&self.sequence.to_be_bytes());
        out[18..20].copy_from_slice(&self.payload_len.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        if bytes.len() < HEADER_LEN {
            return Err(FormatError::Truncated {
                needed: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        if bytes[0..2] != MAGIC {
            return Err(FormatError::BadMagic([bytes[0], bytes[1]]));
        }
        if bytes[2] != VERSION {
            return Err(FormatError::BadVersion(bytes[2]));
        }
        let suite = SuiteConfig::from_byte(bytes[3]).ok_or(FormatError::BadSuite(bytes[3]))?;
        Ok(Self {
            suite,
            sender_id: u32::from_be_bytes(bytes[4..8].try_into().unwrap()),
            class_id: bytes[8],
            key_epoch: bytes[9],
            sequence: u64::from_be_bytes(bytes[10..18].try_into().unwrap()),
            payload_len: u16::from_be_bytes(bytes[18..20].try_into().unwrap()),
        })
    }

    fn iv_len(&self) -> usize {
        if self.suite.mode().encrypts() {
            IV_LEN
        } else {
            0
        }
    }

    /// Total wire length implied by the header.
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.iv_len() + usize::from(self.payload_len) + self.suite.mac().tag_len()
    }
}

pub fn encode_header(h: &EnvelopeHeader) -> [u8; HEADER_LEN] {
    h.encode()
}

/// A parsed envelope. Parsing does no cryptography.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub header: EnvelopeHeader,
    pub iv: Option<InitVector>,
    pub payload: Vec<u8>,
    pub tag: Vec<u8>,
}

impl Envelope {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header.wire_len());
        out.extend_from_slice(&self.header.encode());
        if let Some(iv) = &self.iv {
            out.extend_from_slice(iv.as_bytes());
        }
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.tag);
        out
    }

    /// Everything the tag covers: header, IV and payload.
    fn authenticated_prefix<'a>(&'a self, header: &'a [u8; HEADER_LEN]) -> [&'a [u8]; 3] {
        let iv: &[u8] = self.iv.as_ref().map_or(&[], |iv| &iv.0[..]);
        [&header[..], iv, &self.payload]
    }
}

pub fn decode(wire: &[u8]) -> Result<Envelope> {
    let header = EnvelopeHeader::decode(wire)?;
    let expected = header.wire_len();
    if wire.len() < expected {
        return Err(FormatError::Truncated {
            needed: expected,
            actual: wire.len(),
        }
        .into());
    }
    if wire.len() > expected {
        return Err(FormatError::TrailingBytes {
            expected,
            actual: wire.len(),
        }
        .into());
    }
    let mut at = HEADER_LEN;
    let iv = if header.suite.mode().encrypts() {
        let iv = InitVector(wire[at..at + IV_LEN].try_into().unwrap());
        at += IV_LEN;
        Some(iv)
    } else {
        None
    };
    let payload_end = at + usize::from(header.payload_len);
    Ok(Envelope {
        header,
        iv,
        payload: wire[at..payload_end].to_vec(),
        tag: wire[payload_end..].to_vec(),
    })
}

/// Routing and freshness fields for a message about to be sealed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageMeta {
    pub sender_id: u32,
    pub epoch: u8,
    pub sequence: u64,
    pub class_id: u8,
}

/// Seals `plaintext` under `suite`, which must agree with `decision`.
pub fn seal(
    keys: &KeyMaterial,
    meta: MessageMeta,
    decision: PrivacyDecision,
    suite: SuiteConfig,
    plaintext: &[u8],
) -> Result<Vec<u8>> {
    suite.check_decision(decision)?;
    seal_unchecked(keys, meta, suite, plaintext)
}

/// Seals without consulting a policy decision. Benchmarks and tests use
/// this to exercise every suite.
pub fn seal_unchecked(keys: &KeyMaterial, meta: MessageMeta, suite: SuiteConfig, plaintext: &[u8]) -> Result<Vec<u8>> {
    if plaintext.len() > MAX_PLAINTEXT {
        return Err(Error::Oversize(plaintext.len()));
    }
    let mode = suite.mode();
    let iv = if mode.encrypts() {
        Some(InitVector::generate(mode)?)
    } else {
        None
    };
    let body_len = if mode == CipherMode::Cbc {
        plaintext.len() + (suite::BLOCK_LEN - plaintext.len() % suite::BLOCK_LEN)
    } else {
        plaintext.len()
    };
    let header = EnvelopeHeader {
        suite,
        sender_id: meta.sender_id,
        class_id: meta.class_id,
        key_epoch: meta.epoch,
        sequence: meta.sequence,
        payload_len: u16::try_from(body_len).map_err(|_| Error::Oversize(plaintext.len()))?,
    };
    let header_bytes = header.encode();

    let mut env = match (mode, iv) {
        (CipherMode::MacOnly, _) => Envelope {
            header,
            iv: None,
            payload: plaintext.to_vec(),
            tag: Vec::new(),
        },
        (CipherMode::Gcm, Some(iv)) => {
            let (ct, tag) = suite::encrypt(mode, &keys.enc_key, &iv.0, &header_bytes, plaintext)?;
            return Ok(Envelope {
                header,
                iv: Some(iv),
                payload: ct,
                tag: tag.expect("GCM returns a tag").to_vec(),
            }
            .encode());
        }
        (_, Some(iv)) => {
            let input = if mode == CipherMode::Cbc {
                suite::pad(plaintext)?
            } else {
                plaintext.to_vec()
            };
            let (ct, _) = suite::encrypt(mode, &keys.enc_key, &iv.0, &[], &input)?;
            Envelope {
                header,
                iv: Some(iv),
                payload: ct,
                tag: Vec::new(),
            }
        }
        (_, None) => unreachable!("encrypting modes always carry an IV"),
    };
    debug_assert_eq!(env.payload.len(), body_len);
    env.tag = suite::mac_parts(suite.mac(), &keys.mac_key, &env.authenticated_prefix(&header_bytes))?;
    Ok(env.encode())
}

/// Result of a successful [`open`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Opened {
    pub header: EnvelopeHeader,
    pub class_id: u8,
    pub plaintext: Vec<u8>,
    pub privacy_used: bool,
}

/// Checks an HMAC tag. GCM tags are checked by [`reveal`] instead.
fn authenticate(keys: &KeyMaterial, env: &Envelope) -> Result<()> {
    let mac = env.header.suite.mac();
    if mac == MacVariant::GcmTag {
        return Ok(());
    }
    let header_bytes = env.header.encode();
    let parts = env.authenticated_prefix(&header_bytes);
    if suite::verify_mac_parts(mac, &keys.mac_key, &parts, &env.tag)? {
        Ok(())
    } else {
        Err(Error::Authentication)
    }
}

fn reveal(keys: &KeyMaterial, env: &Envelope) -> Result<Vec<u8>> {
    let mode = env.header.suite.mode();
    let iv = match (&env.iv, mode) {
        (_, CipherMode::MacOnly) => return Ok(env.payload.clone()),
        (Some(iv), _) => iv,
        (None, _) => unreachable!("decode yields an IV for encrypting modes"),
    };
    match mode {
        CipherMode::Gcm => {
            let aad = env.header.encode();
            suite::decrypt(mode, &keys.enc_key, &iv.0, &aad, &env.payload, Some(&env.tag))
        }
        CipherMode::Cbc => {
            let padded = suite::decrypt(mode, &keys.enc_key, &iv.0, &[], &env.payload, None)?;
            suite::unpad(&padded)
        }
        _ => suite::decrypt(mode, &keys.enc_key, &iv.0, &[], &env.payload, None),
    }
}

fn opened(env: &Envelope, plaintext: Vec<u8>) -> Opened {
    Opened {
        header: env.header,
        class_id: env.header.class_id,
        plaintext,
        privacy_used: env.header.suite.mode().encrypts(),
    }
}

/// Verifies and decrypts a parsed envelope without touching any replay
/// state.
pub fn unseal(keys: &KeyMaterial, env: &Envelope) -> Result<Opened> {
    authenticate(keys, env)?;
    Ok(opened(env, reveal(keys, env)?))
}

/// Parses, authenticates, checks freshness, then decrypts. `window` is
/// updated only when every step succeeds.
pub fn open<F>(key_lookup: F, window: &mut ReplayWindow, wire: &[u8]) -> Result<Opened>
where
    F: FnOnce(u32, u8) -> Option<KeyMaterial>,
{
    let env = decode(wire)?;
    let h = env.header;
    let keys = key_lookup(h.sender_id, h.key_epoch).ok_or(Error::UnknownKey {
        sender_id: h.sender_id,
        epoch: h.key_epoch,
    })?;
    open_envelope(&keys, window, &env)
}

/// [`open`] for an already-parsed envelope whose keys are known.
pub fn open_envelope(keys: &KeyMaterial, window: &mut ReplayWindow, env: &Envelope) -> Result<Opened> {
    authenticate(keys, env)?;
    // GCM verifies its tag inside decrypt, so it has to run before the
    // window is consulted.
    let early = if env.header.suite.mode() == CipherMode::Gcm {
        Some(reveal(keys, env)?)
    } else {
        None
    };
    check_fresh(window, env.header.sequence)?;
    let plaintext = match early {
        Some(p) => p,
        None => reveal(keys, env)?,
    };
    window.commit(env.header.sequence);
    Ok(opened(env, plaintext))
}

fn check_fresh(window: &ReplayWindow, sequence: u64) -> Result<()> {
    match window.check(sequence) {
        ReplayVerdict::Accept => Ok(()),
        verdict => Err(Error::Freshness { sequence, verdict }),
    }
}

/// Wire overhead for a plaintext of `len` bytes under `suite`.
pub fn overhead(suite: SuiteConfig, len: usize) -> usize {
    let iv = if suite.mode().encrypts() { IV_LEN } else { 0 };
    let pad = if suite.mode() == CipherMode::Cbc {
        suite::BLOCK_LEN - len % suite::BLOCK_LEN
    } else {
        0
    };
    HEADER_LEN + iv + suite.mac().tag_len() + pad
}
