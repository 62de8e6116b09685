//! AES-128 in five modes, HMAC over four SHA-2 variants, and the
//! encrypt-then-MAC composition used by the envelope layer.
//!
//! Standalone ciphers (CBC, CTR, CFB8, CFB128) are paired with a separate
//! HMAC key; GCM carries its own 16-byte tag. `MacOnly` is the
//! integrity/authenticity path without encryption.

use std::fmt;
use std::str::FromStr;

use aes::cipher::{AsyncStreamCipher, BlockDecryptMut, BlockEncryptMut, KeyIvInit, StreamCipher};
use aes::Aes128;
use aes_gcm::aead::AeadInPlace;
use aes_gcm::{Aes128Gcm, KeyInit};
use hmac::{Hmac, Mac};
use rand::rngs::OsRng;
use rand::RngCore;
use sha2::{Sha224, Sha256, Sha384, Sha512};
use subtle::ConstantTimeEq;

use crate::error::{Error, Result};
use crate::policy::PrivacyDecision;

pub const BLOCK_LEN: usize = 16;
pub const ENC_KEY_LEN: usize = 16;
pub const MAC_KEY_LEN: usize = 32;
pub const IV_LEN: usize = 16;
pub const GCM_NONCE_LEN: usize = 12;
pub const GCM_TAG_LEN: usize = 16;

/// Largest plaintext accepted; CBC padding of this length still fits a
/// 16-bit payload length.
pub const MAX_PLAINTEXT: usize = 65519;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CipherMode {
    MacOnly,
    Gcm,
    Cbc,
    Ctr,
    Cfb8,
    Cfb128,
}

impl CipherMode {
    pub const ALL: [CipherMode; 6] = [
        CipherMode::MacOnly,
        CipherMode::Gcm,
        CipherMode::Cbc,
        CipherMode::Ctr,
        CipherMode::Cfb8,
        CipherMode::Cfb128,
    ];

    pub const ENCRYPTING: [CipherMode; 5] = [
        CipherMode::Gcm,
        CipherMode::Cbc,
        CipherMode::Ctr,
        CipherMode::Cfb8,
        CipherMode::Cfb128,
    ];

    pub fn nibble(self) -> u8 {
        match self {
            CipherMode::MacOnly => 0x0,
            CipherMode::Gcm => 0x1,
            CipherMode::Cbc => 0x2,
            CipherMode::Ctr => 0x3,
            CipherMode::Cfb8 => 0x4,
            CipherMode::Cfb128 => 0x5,
        }
    }

    pub fn from_nibble(n: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.nibble() == n)
    }

    pub fn encrypts(self) -> bool {
        self != CipherMode::MacOnly
    }

    pub fn label(self) -> &'static str {
        match self {
            CipherMode::MacOnly => "mac-only",
            CipherMode::Gcm => "gcm",
            CipherMode::Cbc => "cbc",
            CipherMode::Ctr => "ctr",
            CipherMode::Cfb8 => "cfb8",
            CipherMode::Cfb128 => "cfb128",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MacVariant {
    GcmTag,
    HmacSha224,
    HmacSha256,
    HmacSha384,
    HmacSha512,
}

impl MacVariant {
    pub const HMACS: [MacVariant; 4] = [
        MacVariant::HmacSha224,
        MacVariant::HmacSha256,
        MacVariant::HmacSha384,
        MacVariant::HmacSha512,
    ];

    pub fn tag_len(self) -> usize {
        match self {
            MacVariant::GcmTag => GCM_TAG_LEN,
            MacVariant::HmacSha224 => 28,
            MacVariant::HmacSha256 => 32,
            MacVariant::HmacSha384 => 48,
            MacVariant::HmacSha512 => 64,
        }
    }

    pub fn nibble(self) -> u8 {
        match self {
            MacVariant::GcmTag => 0x0,
            MacVariant::HmacSha224 => 0x1,
            MacVariant::HmacSha256 => 0x2,
            MacVariant::HmacSha384 => 0x3,
            MacVariant::HmacSha512 => 0x4,
        }
    }

    pub fn from_nibble(n: u8) -> Option<Self> {
        [MacVariant::GcmTag]
            .into_iter()
            .chain(Self::HMACS)
            .find(|m| m.nibble() == n)
    }

    /// Hash name as used in suite labels, e.g. `sha256`.
    pub fn hash_label(self) -> &'static str {
        match self {
            MacVariant::GcmTag => "gcm",
            MacVariant::HmacSha224 => "sha224",
            MacVariant::HmacSha256 => "sha256",
            MacVariant::HmacSha384 => "sha384",
            MacVariant::HmacSha512 => "sha512",
        }
    }
}

/// A valid (cipher mode, MAC) pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SuiteConfig {
    mode: CipherMode,
    mac: MacVariant,
}

impl SuiteConfig {
    /// Default for payloads that need confidentiality.
    pub const PRIVATE_DEFAULT: SuiteConfig = SuiteConfig {
        mode: CipherMode::Cbc,
        mac: MacVariant::HmacSha256,
    };

    /// Default for public payloads.
    pub const PUBLIC_DEFAULT: SuiteConfig = SuiteConfig {
        mode: CipherMode::MacOnly,
        mac: MacVariant::HmacSha256,
    };

    pub const GCM: SuiteConfig = SuiteConfig {
        mode: CipherMode::Gcm,
        mac: MacVariant::GcmTag,
    };

    pub fn new(mode: CipherMode, mac: MacVariant) -> Result<Self> {
        if (mode == CipherMode::Gcm) != (mac == MacVariant::GcmTag) {
            return Err(Error::InvalidSuite(format!(
                "{} cannot be paired with {:?}",
                mode.label(),
                mac
            )));
        }
        Ok(Self { mode, mac })
    }

    pub fn mode(self) -> CipherMode {
        self.mode
    }

    pub fn mac(self) -> MacVariant {
        self.mac
    }

    pub fn to_byte(self) -> u8 {
        (self.mode.nibble() << 4) | self.mac.nibble()
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        let mode = CipherMode::from_nibble(b >> 4)?;
        let mac = MacVariant::from_nibble(b & 0x0f)?;
        Self::new(mode, mac).ok()
    }

    /// Every valid suite: four MAC-only, sixteen HMAC-composed ciphers, GCM.
    pub fn all() -> Vec<SuiteConfig> {
        let mut out = Vec::with_capacity(21);
        for mode in CipherMode::ALL {
            if mode == CipherMode::Gcm {
                out.push(Self::GCM);
            } else {
                out.extend(MacVariant::HMACS.iter().map(|&mac| SuiteConfig { mode, mac }));
            }
        }
        out
    }

    /// Checks the suite against a policy decision: MAC-only exactly when
    /// the class does not require privacy.
    pub fn check_decision(self, decision: PrivacyDecision) -> Result<()> {
        if decision.requires_privacy && !self.mode.encrypts() {
            return Err(Error::PolicyViolation(format!(
                "{} class requires encryption but suite {} is MAC-only",
                decision.band, self
            )));
        }
        if !decision.requires_privacy && self.mode.encrypts() {
            return Err(Error::PolicyViolation(format!(
                "{} class must travel MAC-only, got suite {}",
                decision.band, self
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SuiteConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            CipherMode::Gcm => f.write_str("gcm"),
            CipherMode::MacOnly => write!(f, "mac-only-{}", self.mac.hash_label()),
            m => write!(f, "{}-hmac-{}", m.label(), self.mac.hash_label()),
        }
    }
}

impl FromStr for SuiteConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        SuiteConfig::all()
            .into_iter()
            .find(|suite| suite.to_string() == lower)
            .ok_or_else(|| Error::InvalidSuite(format!("unknown suite {s:?}")))
    }
}

/// Paired encryption and MAC keys for one epoch.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    pub enc_key: [u8; ENC_KEY_LEN],
    pub mac_key: [u8; MAC_KEY_LEN],
}

impl KeyMaterial {
    pub fn generate() -> Result<Self> {
        loop {
            let mut enc_key = [0u8; ENC_KEY_LEN];
            let mut mac_key = [0u8; MAC_KEY_LEN];
            fill_random(&mut enc_key)?;
            fill_random(&mut mac_key)?;
            if enc_key[..] != mac_key[..ENC_KEY_LEN] {
                return Ok(Self { enc_key, mac_key });
            }
        }
    }

    pub fn from_slices(enc_key: &[u8], mac_key: &[u8]) -> Result<Self> {
        Ok(Self {
            enc_key: enc_key.try_into().map_err(|_| Error::InvalidLength {
                what: "encryption key",
                expected: ENC_KEY_LEN,
                actual: enc_key.len(),
            })?,
            mac_key: mac_key.try_into().map_err(|_| Error::InvalidLength {
                what: "MAC key",
                expected: MAC_KEY_LEN,
                actual: mac_key.len(),
            })?,
        })
    }
}

impl fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("KeyMaterial { .. }")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitVector(pub [u8; IV_LEN]);

impl InitVector {
    /// A fresh IV for `mode`. GCM uses the first 12 bytes as nonce and
    /// leaves the tail zero.
    pub fn generate(mode: CipherMode) -> Result<Self> {
        let mut iv = [0u8; IV_LEN];
        if mode == CipherMode::Gcm {
            fill_random(&mut iv[..GCM_NONCE_LEN])?;
        } else {
            fill_random(&mut iv)?;
        }
        Ok(Self(iv))
    }

    pub fn as_bytes(&self) -> &[u8; IV_LEN] {
        &self.0
    }
}

fn fill_random(buf: &mut [u8]) -> Result<()> {
    OsRng.try_fill_bytes(buf).map_err(|e| Error::Entropy(e.to_string()))
}

/// `n` bytes from the operating system CSPRNG.
pub fn generate_random(n: usize) -> Result<Vec<u8>> {
    let mut out = vec![0u8; n];
    fill_random(&mut out)?;
    Ok(out)
}

/// PKCS#7 padding to a whole number of blocks (always 1..=16 pad bytes).
pub fn pad(plaintext: &[u8]) -> Result<Vec<u8>> {
    if plaintext.len() > MAX_PLAINTEXT {
        return Err(Error::Oversize(plaintext.len()));
    }
    let pad_len = BLOCK_LEN - plaintext.len() % BLOCK_LEN;
    let mut out = Vec::with_capacity(plaintext.len() + pad_len);
    out.extend_from_slice(plaintext);
    out.resize(plaintext.len() + pad_len, pad_len as u8);
    Ok(out)
}

/// Strips PKCS#7 padding. Every malformation reports as
/// [`Error::Authentication`], and the scan touches the whole final block
/// regardless of where the first bad byte sits.
pub fn unpad(padded: &[u8]) -> Result<Vec<u8>> {
    if padded.is_empty() || padded.len() % BLOCK_LEN != 0 {
        return Err(Error::Authentication);
    }
    let last_block = &padded[padded.len() - BLOCK_LEN..];
    let pad_len = last_block[BLOCK_LEN - 1];
    let mut bad =
        subtle::Choice::from((pad_len == 0) as u8) | subtle::Choice::from((pad_len as usize > BLOCK_LEN) as u8);
    for (i, &b) in last_block.iter().rev().enumerate() {
        let in_pad = subtle::Choice::from(((i as u8) < pad_len) as u8);
        bad |= in_pad & !b.ct_eq(&pad_len);
    }
    if bool::from(bad) {
        return Err(Error::Authentication);
    }
    Ok(padded[..padded.len() - pad_len as usize].to_vec())
}

fn check_len(what: &'static str, bytes: &[u8], expected: usize) -> Result<()> {
    if bytes.len() == expected {
        Ok(())
    } else {
        Err(Error::InvalidLength {
            what,
            expected,
            actual: bytes.len(),
        })
    }
}

/// Encrypts under AES-128 in `mode`. CBC input must already be padded.
/// Returns the ciphertext and, for GCM only, the tag over `aad` and the
/// ciphertext. `aad` is ignored by the other modes.
pub fn encrypt(
    mode: CipherMode,
    key: &[u8],
    iv: &[u8],
    aad: &[u8],
    plaintext: &[u8],
) -> Result<(Vec<u8>, Option<[u8; GCM_TAG_LEN]>)> {
    check_len("encryption key", key, ENC_KEY_LEN)?;
    check_len("IV", iv, IV_LEN)?;
    let mut buf = plaintext.to_vec();
    match mode {
        CipherMode::MacOnly => {
            return Err(Error::InvalidSuite("mac-only has no cipher".into()));
        }
        CipherMode::Gcm => {
            let cipher = Aes128Gcm::new_from_slice(key).expect("key length checked");
            let tag = cipher
                .encrypt_in_place_detached(iv[..GCM_NONCE_LEN].into(), aad, &mut buf)
                .map_err(|_| Error::Oversize(plaintext.len()))?;
            return Ok((buf, Some(tag.into())));
        }
        CipherMode::Cbc => {
            if buf.len() % BLOCK_LEN != 0 {
                return Err(Error::InvalidLength {
                    what: "CBC plaintext (unpadded)",
                    expected: buf.len().next_multiple_of(BLOCK_LEN),
                    actual: buf.len(),
                });
            }
            let mut enc = cbc::Encryptor::<Aes128>::new(key.into(), iv.into());
            for block in buf.chunks_exact_mut(BLOCK_LEN) {
                enc.encrypt_block_mut(block.into());
            }
        }
        CipherMode::Ctr => {
            ctr::Ctr128BE::<Aes128>::new(key.into(), iv.into()).apply_keystream(&mut buf);
        }
        CipherMode::Cfb8 => {
            cfb8::Encryptor::<Aes128>::new(key.into(), iv.into()).encrypt(&mut buf);
        }
        CipherMode::Cfb128 => {
            cfb_mode::Encryptor::<Aes128>::new(key.into(), iv.into()).encrypt(&mut buf);
        }
    }
    Ok((buf, None))
}

/// Inverse of [`encrypt`]. For GCM the tag is checked before any plaintext
/// is returned.
pub fn decrypt(
    mode: CipherMode,
    key: &[u8],
    iv: &[u8],
    aad: &[u8],
    ciphertext: &[u8],
    gcm_tag: Option<&[u8]>,
) -> Result<Vec<u8>> {
    check_len("encryption key", key, ENC_KEY_LEN)?;
    check_len("IV", iv, IV_LEN)?;
    if (mode == CipherMode::Gcm) != gcm_tag.is_some() {
        return Err(Error::InvalidSuite(format!(
            "GCM tag must be supplied iff mode is GCM (mode {})",
            mode.label()
        )));
    }
    let mut buf = ciphertext.to_vec();
    match mode {
        CipherMode::MacOnly => {
            return Err(Error::InvalidSuite("mac-only has no cipher".into()));
        }
        CipherMode::Gcm => {
            let tag = gcm_tag.expect("checked above");
            check_len("GCM tag", tag, GCM_TAG_LEN)?;
            let cipher = Aes128Gcm::new_from_slice(key).expect("key length checked");
            cipher
                .decrypt_in_place_detached(iv[..GCM_NONCE_LEN].into(), aad, &mut buf, tag.into())
                .map_err(|_| Error::Authentication)?;
        }
        CipherMode::Cbc => {
            if buf.len() % BLOCK_LEN != 0 {
                return Err(Error::Authentication);
            }
            let mut dec = cbc::Decryptor::<Aes128>::new(key.into(), iv.into());
            for block in buf.chunks_exact_mut(BLOCK_LEN) {
                dec.decrypt_block_mut(block.into());
            }
        }
        CipherMode::Ctr => {
            ctr::Ctr128BE::<Aes128>::new(key.into(), iv.into()).apply_keystream(&mut buf);
        }
        CipherMode::Cfb8 => {
            cfb8::Decryptor::<Aes128>::new(key.into(), iv.into()).decrypt(&mut buf);
        }
        CipherMode::Cfb128 => {
            cfb_mode::Decryptor::<Aes128>::new(key.into(), iv.into()).decrypt(&mut buf);
        }
    }
    Ok(buf)
}

fn hmac_parts<M: Mac + KeyInit>(key: &[u8], parts: &[&[u8]]) -> Vec<u8> {
    let mut m = <M as Mac>::new_from_slice(key).expect("HMAC accepts any key length");
    for p in parts {
        m.update(p);
    }
    m.finalize().into_bytes().to_vec()
}

/// HMAC over the concatenation of `parts`.
pub fn mac_parts(variant: MacVariant, key: &[u8], parts: &[&[u8]]) -> Result<Vec<u8>> {
    if key.is_empty() {
        return Err(Error::InvalidLength {
            what: "MAC key",
            expected: MAC_KEY_LEN,
            actual: 0,
        });
    }
    Ok(match variant {
        MacVariant::GcmTag => {
            return Err(Error::InvalidSuite("GCM tags are produced by encrypt".into()));
        }
        MacVariant::HmacSha224 => hmac_parts::<Hmac<Sha224>>(key, parts),
        MacVariant::HmacSha256 => hmac_parts::<Hmac<Sha256>>(key, parts),
        MacVariant::HmacSha384 => hmac_parts::<Hmac<Sha384>>(key, parts),
        MacVariant::HmacSha512 => hmac_parts::<Hmac<Sha512>>(key, parts),
    })
}

pub fn mac(variant: MacVariant, key: &[u8], data: &[u8]) -> Result<Vec<u8>> {
    mac_parts(variant, key, &[data])
}

/// Constant-time check of `tag` against the HMAC of `parts`. A tag of the
/// wrong length fails immediately; the length is public.
pub fn verify_mac_parts(variant: MacVariant, key: &[u8], parts: &[&[u8]], tag: &[u8]) -> Result<bool> {
    if tag.len() != variant.tag_len() {
        return Ok(false);
    }
    let expected = mac_parts(variant, key, parts)?;
    Ok(bool::from(expected.ct_eq(tag)))
}

pub fn verify_mac(variant: MacVariant, key: &[u8], data: &[u8], tag: &[u8]) -> Result<bool> {
    verify_mac_parts(variant, key, &[data], tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::RiskBand;
    use proptest::prelude::*;

    fn key() -> [u8; 16] {
        [7u8; 16]
    }

    #[test]
    fn random_lengths_and_independence() {
        assert!(generate_random(0).unwrap().is_empty());
        let a = generate_random(16).unwrap();
        let b = generate_random(16).unwrap();
        assert_eq!(a.len(), 16);
        assert_ne!(a, b);
    }

    #[test]
    fn random_byte_coverage() {
        // Coupon collector: expected draws to see all 256 values is
        // 256 * H(256) ~= 1568; 10_000 draws miss a given value with
        // probability (255/256)^10000 ~= 1e-17.
        let mut seen = [false; 256];
        for _ in 0..10_000 {
            seen[generate_random(1).unwrap()[0] as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn pad_shapes() {
        let p = pad(&[0xaa; 16]).unwrap();
        assert_eq!(p.len(), 32);
        assert_eq!(&p[16..], &[0x10; 16]);
        assert_eq!(pad(&[]).unwrap(), vec![0x10; 16]);
        let p = pad(&[1; 15]).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p[15], 0x01);
        assert!(matches!(pad(&vec![0; MAX_PLAINTEXT + 1]), Err(Error::Oversize(_))));
        assert_eq!(pad(&vec![0; MAX_PLAINTEXT]).unwrap().len(), 65520);
    }

    #[test]
    fn unpad_rejects_malformed() {
        let mut b = [0x41u8; 16];
        b[15] = 0x00;
        assert!(matches!(unpad(&b), Err(Error::Authentication)));
        b[14] = 0x02;
        b[15] = 0x01;
        assert_eq!(unpad(&b).unwrap().len(), 15);
        let mut b = [0x41u8; 16];
        b[14] = 0x01;
        b[15] = 0x02;
        assert!(matches!(unpad(&b), Err(Error::Authentication)));
        let mut b = [0x41u8; 16];
        b[15] = 0x11;
        assert!(matches!(unpad(&b), Err(Error::Authentication)));
        assert!(matches!(unpad(&[]), Err(Error::Authentication)));
        assert!(matches!(unpad(&[1; 17]), Err(Error::Authentication)));
    }

    #[test]
    fn suite_byte_and_labels() {
        assert_eq!(SuiteConfig::PUBLIC_DEFAULT.to_byte(), 0x02);
        assert_eq!(SuiteConfig::PRIVATE_DEFAULT.to_byte(), 0x22);
        assert_eq!(SuiteConfig::GCM.to_byte(), 0x10);
        assert_eq!(SuiteConfig::all().len(), 21);
        for s in SuiteConfig::all() {
            assert_eq!(SuiteConfig::from_byte(s.to_byte()), Some(s));
            assert_eq!(s.to_string().parse::<SuiteConfig>().unwrap(), s);
        }
        assert_eq!(
            "cbc-hmac-sha256".parse::<SuiteConfig>().unwrap(),
            SuiteConfig::PRIVATE_DEFAULT
        );
        assert_eq!(
            "mac-only-sha256".parse::<SuiteConfig>().unwrap(),
            SuiteConfig::PUBLIC_DEFAULT
        );
        assert!(SuiteConfig::from_byte(0x12).is_none());
        assert!(SuiteConfig::from_byte(0x20).is_none());
        assert!(SuiteConfig::from_byte(0x62).is_none());
        assert!(SuiteConfig::from_byte(0x25).is_none());
        assert!(SuiteConfig::new(CipherMode::Gcm, MacVariant::HmacSha256).is_err());
        assert!(SuiteConfig::new(CipherMode::Cbc, MacVariant::GcmTag).is_err());
        assert!("rot13".parse::<SuiteConfig>().is_err());
    }

    #[test]
    fn decision_check() {
        let private = PrivacyDecision::from_band(RiskBand::Critical);
        let public = PrivacyDecision::from_band(RiskBand::None);
        assert!(SuiteConfig::PUBLIC_DEFAULT.check_decision(private).is_err());
        assert!(SuiteConfig::PRIVATE_DEFAULT.check_decision(private).is_ok());
        assert!(SuiteConfig::PUBLIC_DEFAULT.check_decision(public).is_ok());
        assert!(matches!(
            SuiteConfig::GCM.check_decision(public),
            Err(Error::PolicyViolation(_))
        ));
    }

    #[test]
    fn bad_sizes() {
        assert!(matches!(
            encrypt(CipherMode::Ctr, &[0; 15], &[0; 16], &[], b"x"),
            Err(Error::InvalidLength {
                what: "encryption key",
                ..
            })
        ));
        assert!(matches!(
            encrypt(CipherMode::Ctr, &[0; 16], &[0; 12], &[], b"x"),
            Err(Error::InvalidLength { what: "IV", .. })
        ));
        assert!(encrypt(CipherMode::Cbc, &key(), &[0; 16], &[], &[0; 15]).is_err());
        assert!(decrypt(CipherMode::Gcm, &key(), &[0; 16], &[], &[], None).is_err());
        assert!(decrypt(CipherMode::Cbc, &key(), &[0; 16], &[], &[0; 16], Some(&[0; 16])).is_err());
        assert!(mac(MacVariant::HmacSha256, &[], b"x").is_err());
    }

    #[test]
    fn gcm_rejects_tampering() {
        let iv = InitVector::generate(CipherMode::Gcm).unwrap();
        assert_eq!(&iv.0[12..], &[0; 4]);
        let (ct, tag) = encrypt(CipherMode::Gcm, &key(), &iv.0, b"hdr", b"secret message").unwrap();
        let tag = tag.unwrap();
        assert!(matches!(
            decrypt(CipherMode::Gcm, &key(), &iv.0, b"hdx", &ct, Some(&tag)),
            Err(Error::Authentication)
        ));
        let mut flipped = ct.clone();
        flipped[3] ^= 0x40;
        assert!(matches!(
            decrypt(CipherMode::Gcm, &key(), &iv.0, b"hdr", &flipped, Some(&tag)),
            Err(Error::Authentication)
        ));
        assert_eq!(
            decrypt(CipherMode::Gcm, &key(), &iv.0, b"hdr", &ct, Some(&tag)).unwrap(),
            b"secret message"
        );
    }

    #[test]
    fn cbc_empty_round_trip() {
        let k = KeyMaterial::generate().unwrap();
        let iv = InitVector::generate(CipherMode::Cbc).unwrap();
        let (ct, _) = encrypt(CipherMode::Cbc, &k.enc_key, &iv.0, &[], &pad(b"").unwrap()).unwrap();
        let pt = decrypt(CipherMode::Cbc, &k.enc_key, &iv.0, &[], &ct, None).unwrap();
        assert!(unpad(&pt).unwrap().is_empty());
    }

    #[test]
    fn ctr_round_trips() {
        let k = KeyMaterial::generate().unwrap();
        for _ in 0..1000 {
            let len = generate_random(1).unwrap()[0] as usize;
            let x = generate_random(len).unwrap();
            let iv = InitVector::generate(CipherMode::Ctr).unwrap();
            let (ct, tag) = encrypt(CipherMode::Ctr, &k.enc_key, &iv.0, &[], &x).unwrap();
            assert!(tag.is_none());
            assert_eq!(decrypt(CipherMode::Ctr, &k.enc_key, &iv.0, &[], &ct, None).unwrap(), x);
        }
    }

    #[test]
    fn mac_properties() {
        let k = [3u8; 32];
        let t1 = mac(MacVariant::HmacSha256, &k, b"reading").unwrap();
        assert_eq!(t1, mac(MacVariant::HmacSha256, &k, b"reading").unwrap());
        for variant in MacVariant::HMACS {
            let t = mac(variant, &k, b"reading").unwrap();
            assert_eq!(t.len(), variant.tag_len());
            for bit in 0..(k.len() * 8) {
                let mut k2 = k;
                k2[bit / 8] ^= 1 << (bit % 8);
                assert_ne!(t, mac(variant, &k2, b"reading").unwrap());
            }
        }
        assert!(verify_mac(MacVariant::HmacSha256, &k, b"reading", &t1).unwrap());
        let mut bad = t1.clone();
        *bad.last_mut().unwrap() ^= 1;
        assert!(!verify_mac(MacVariant::HmacSha256, &k, b"reading", &bad).unwrap());
        assert!(!verify_mac(MacVariant::HmacSha256, &k, b"reading", &t1[..31]).unwrap());
    }

    #[test]
    fn key_material_independent() {
        let a = KeyMaterial::generate().unwrap();
        let b = KeyMaterial::generate().unwrap();
        assert_ne!(a.enc_key, b.enc_key);
        assert_ne!(a.enc_key[..], a.mac_key[..16]);
        assert_eq!(format!("{a:?}"), "KeyMaterial { .. }");
        assert!(KeyMaterial::from_slices(&[0; 16], &[0; 31]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn every_mode_round_trips(
            data in proptest::collection::vec(any::<u8>(), 0..=1024),
            aad in proptest::collection::vec(any::<u8>(), 0..32),
            k in any::<[u8; 16]>(),
            iv in any::<[u8; 12]>(),
        ) {
            let mut iv16 = [0u8; 16];
            iv16[..12].copy_from_slice(&iv);
            for mode in CipherMode::ENCRYPTING {
                let input = if mode == CipherMode::Cbc { pad(&data).unwrap() } else { data.clone() };
                let (ct, tag) = encrypt(mode, &k, &iv16, &aad, &input).unwrap();
                prop_assert_eq!(ct.len(), input.len());
                prop_assert_eq!(tag.is_some(), mode == CipherMode::Gcm);
                let pt = decrypt(mode, &k, &iv16, &aad, &ct, tag.as_ref().map(|t| &t[..])).unwrap();
                let pt = if mode == CipherMode::Cbc { unpad(&pt).unwrap() } else { pt };
                prop_assert_eq!(&pt, &data);
            }
        }

        #[test]
        fn different_ivs_give_different_ciphertexts(data in proptest::collection::vec(any::<u8>(), 1..128)) {
            let k = [9u8; 16];
            for mode in CipherMode::ENCRYPTING {
                let input = if mode == CipherMode::Cbc { pad(&data).unwrap() } else { data.clone() };
                let a = InitVector::generate(mode).unwrap();
                let b = InitVector::generate(mode).unwrap();
                let (ca, _) = encrypt(mode, &k, &a.0, &[], &input).unwrap();
                let (cb, _) = encrypt(mode, &k, &b.0, &[], &input).unwrap();
                prop_assert_ne!(ca, cb);
            }
        }

        #[test]
        fn pad_unpad_round_trip(data in proptest::collection::vec(any::<u8>(), 0..=64)) {
            let p = pad(&data).unwrap();
            prop_assert_eq!(p.len(), 16 * ((data.len() + 1).div_ceil(16)));
            prop_assert_eq!(unpad(&p).unwrap(), data);
        }

        #[test]
        fn verify_rejects_single_bit_flips(
            data in proptest::collection::vec(any::<u8>(), 1..200),
            k in proptest::collection::vec(any::<u8>(), 1..80),
            bit in any::<usize>(),
            variant in proptest::sample::select(MacVariant::HMACS.to_vec()),
        ) {
            let tag = mac(variant, &k, &data).unwrap();
            prop_assert!(verify_mac(variant, &k, &data, &tag).unwrap());
            let mut d = data.clone();
            let b = bit % (d.len() * 8);
            d[b / 8] ^= 1 << (b % 8);
            prop_assert!(!verify_mac(variant, &k, &d, &tag).unwrap());
            let mut t = tag.clone();
            let b = bit % (t.len() * 8);
            t[b / 8] ^= 1 << (b % 8);
            prop_assert!(!verify_mac(variant, &k, &data, &t).unwrap());
        }
    }
}
