//! Published AES-128 and HMAC-SHA-2 test vectors.

use paysec_core::suite::{self, CipherMode, MacVariant};

const KEY: &str = "2b7e151628aed2a6abf7158809cf4f3c";
const PLAINTEXT: &str = "6bc1bee22e409f96e93d7e117393172aae2d8a571e03ac9c9eb76fac45af8e51\
                         30c81c46a35ce411e5fbc1191a0a52eff69f2445df4f9b17ad2b417be66c3710";
const IV: &str = "000102030405060708090a0b0c0d0e0f";
const COUNTER: &str = "f0f1f2f3f4f5f6f7f8f9fafbfcfdfeff";

fn h(s: &str) -> Vec<u8> {
    hex::decode(s).unwrap()
}

fn check_cipher(mode: CipherMode, iv: &str, pt: &[u8], expected: &str) {
    let (ct, tag) = suite::encrypt(mode, &h(KEY), &h(iv), &[], pt).unwrap();
    assert_eq!(hex::encode(&ct), expected, "{} encrypt", mode.label());
    assert!(tag.is_none());
    let back = suite::decrypt(mode, &h(KEY), &h(iv), &[], &ct, None).unwrap();
    assert_eq!(back, pt, "{} decrypt", mode.label());
}

#[test]
fn aes128_cbc() {
    check_cipher(
        CipherMode::Cbc,
        IV,
        &h(PLAINTEXT),
        "7649abac8119b246cee98e9b12e9197d5086cb9b507219ee95db113a917678b2\
         73bed6b8e3c1743b7116e69e222295163ff1caa1681fac09120eca307586e1a7",
    );
}

#[test]
fn aes128_ctr() {
    check_cipher(
        CipherMode::Ctr,
        COUNTER,
        &h(PLAINTEXT),
        "874d6191b620e3261bef6864990db6ce9806f66b7970fdff8617187bb9fffdff\
         5ae4df3edbd5d35e5b4f09020db03eab1e031dda2fbe03d1792170a0f3009cee",
    );
}

#[test]
fn aes128_cfb128() {
    check_cipher(
        CipherMode::Cfb128,
        IV,
        &h(PLAINTEXT),
        "3b3fd92eb72dad20333449f8e83cfb4ac8a64537a0b3a93fcde3cdad9f1ce58b\
         26751f67a3cbb140b1808cf187a4f4dfc04b05357c5d1c0eeac4c66f9ff7f2e6",
    );
}

#[test]
fn aes128_cfb8() {
    check_cipher(
        CipherMode::Cfb8,
        IV,
        &h(PLAINTEXT)[..18],
        "3b79424c9c0dd436bace9e0ed4586a4f32b9",
    );
}

#[test]
fn aes128_gcm() {
    let key = h("feffe9928665731c6d6a8f9467308308");
    let mut iv = h("cafebabefacedbaddecaf888");
    iv.extend([0; 4]);
    let pt = h("d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a72\
                1c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de657ba637b39");
    let aad = h("feedfacedeadbeeffeedfacedeadbeefabaddad2");
    let (ct, tag) = suite::encrypt(CipherMode::Gcm, &key, &iv, &aad, &pt).unwrap();
    assert_eq!(
        hex::encode(&ct),
        "42831ec2217774244b7221b784d0d49ce3aa212f2c02a4e035c17e2329aca12e\
         21d514b25466931c7d8f6a5aac84aa051ba30b396a0aac973d58e091"
    );
    let tag = tag.unwrap();
    assert_eq!(hex::encode(tag), "5bc94fbc3221a5db94fae95ae7121a47");
    assert_eq!(
        suite::decrypt(CipherMode::Gcm, &key, &iv, &aad, &ct, Some(&tag)).unwrap(),
        pt
    );
    let mut bad = tag;
    bad[0] ^= 1;
    assert!(suite::decrypt(CipherMode::Gcm, &key, &iv, &aad, &ct, Some(&bad)).is_err());
}

struct HmacCase {
    key: Vec<u8>,
    data: &'static [u8],
    /// sha224, sha256, sha384, sha512
    tags: [&'static str; 4],
}

fn hmac_cases() -> Vec<HmacCase> {
    vec![
        HmacCase {
            key: vec![0x0b; 20],
            data: b"Hi There",
            tags: [
                "896fb1128abbdf196832107cd49df33f47b4b1169912ba4f53684b22",
                "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7",
                "afd03944d84895626b0825f4ab46907f15f9dadbe4101ec682aa034c7cebc59c\
                 faea9ea9076ede7f4af152e8b2fa9cb6",
                "87aa7cdea5ef619d4ff0b4241a1d6cb02379f4e2ce4ec2787ad0b30545e17cde\
                 daa833b7d6b8a702038b274eaea3f4e4be9d914eeb61f1702e696c203a126854",
            ],
        },
        HmacCase {
            key: b"Jefe".to_vec(),
            data: b"what do ya want for nothing?",
            tags: [
                "a30e01098bc6dbbf45690f3a7e9e6d0f8bbea2a39e6148008fd05e44",
                "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843",
                "af45d2e376484031617f78d2b58a6b1b9c7ef464f5a01b47e42ec3736322445e\
                 8e2240ca5e69e2c78b3239ecfab21649",
                "164b7a7bfcf819e2e395fbe73b56e0a387bd64222e831fd610270cd7ea250554\
                 9758bf75c05a994a6d034f65f8f0e6fdcaeab1a34d4a6b4b636e070a38bce737",
            ],
        },
        HmacCase {
            key: vec![0xaa; 131],
            data: b"Test Using Larger Than Block-Size Key - Hash Key First",
            tags: [
                "95e9a0db962095adaebe9b2d6f0dbce2d499f112f2d2b7273fa6870e",
                "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54",
                "4ece084485813e9088d2c63a041bc5b44f9ef1012a2b588f3cd11f05033ac4c6\
                 0c2ef6ab4030fe8296248df163f44952",
                "80b24263c7c1a3ebb71493c1dd7be8b49b46d1f41b4aeec1121b013783f8f352\
                 6b56d037e05f2598bd0fd2215d6a1e5295e64f73f63f0aec8b915a985d786598",
            ],
        },
    ]
}

#[test]
fn hmac_sha2() {
    for (i, case) in hmac_cases().iter().enumerate() {
        for (variant, expected) in MacVariant::HMACS.iter().zip(case.tags) {
            let tag = suite::mac(*variant, &case.key, case.data).unwrap();
            assert_eq!(hex::encode(&tag), expected, "case {i} {}", variant.hash_label());
            assert_eq!(tag.len(), variant.tag_len());
            assert!(suite::verify_mac(*variant, &case.key, case.data, &tag).unwrap());
        }
    }
}

#[test]
fn hmac_over_parts_matches_concatenation() {
    let key = [7u8; 32];
    for variant in MacVariant::HMACS {
        let whole = suite::mac(variant, &key, b"header|iv|payload").unwrap();
        let parts = suite::mac_parts(variant, &key, &[b"header|", b"iv|", b"payload"]).unwrap();
        assert_eq!(whole, parts);
    }
}
