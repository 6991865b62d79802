//! Signature, hybrid encryption, hashing and identity-derived keys.
//!
//! Two suites ship, both behind the same [`SignatureScheme`] and
//! [`EncryptionScheme`] traits and registered by name in [`SUITES`]:
//!
//! * `p256` (default): ECDSA over NIST P-256 with RFC 6979 nonces, and
//!   ECIES-style hybrid encryption (ephemeral ECDH, HKDF-SHA256,
//!   ChaCha20-Poly1305).
//! * `toy`: the same constructions over the additive group of integers
//!   modulo 2^61 - 1. It is trivially breakable and exists only to make
//!   property tests and large simulations fast.
//!
//! Wire sizes do not depend on the suite: public keys are 33 bytes,
//! private keys 32 and signatures 64. Public keys are self-describing (their
//! first byte tells the suites apart), and private keys remember the suite
//! that made them, so the free functions [`sign`], [`verify`], [`encrypt`]
//! and [`decrypt`] need no suite argument.
//!
//! Identity-based keys are emulated: the authority holds a master scalar
//! `s` and publishes `s·G`. The private key of identity `id` is
//! `s·h(id)`, and anybody can compute the matching public key
//! `h(id)·(s·G)` from the published parameters alone.

mod ec;
mod toy;

use std::fmt;

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Nonce};
use hkdf::Hkdf;
use rand::RngCore;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::registry::{Handle, Named, Registry};

pub use ec::P256Suite;
pub use toy::ToySuite;

pub const PUBLIC_KEY_LEN: usize = 33;
pub const PRIVATE_KEY_LEN: usize = 32;
pub const SIGNATURE_LEN: usize = 64;
pub const DIGEST_LEN: usize = 32;

/// Bytes added by [`encrypt`] on top of the plaintext: ephemeral public key
/// plus the AEAD tag.
pub const CIPHERTEXT_OVERHEAD: usize = PUBLIC_KEY_LEN + 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("corrupt or foreign key material")]
    MalformedKey,
    #[error("authenticated decryption failed")]
    DecryptionFailed,
    #[error("master secret required to derive identity private keys")]
    MissingMasterSecret,
    #[error("identity string must not be empty")]
    EmptyIdentity,
}

pub type Result<T, E = CryptoError> = std::result::Result<T, E>;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKey(pub [u8; PUBLIC_KEY_LEN]);

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; SIGNATURE_LEN]);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; DIGEST_LEN]);

#[derive(Clone, PartialEq, Eq)]
pub struct Ciphertext(pub Vec<u8>);

/// A private scalar tagged with the suite that produced it.
#[derive(Clone, PartialEq, Eq)]
pub struct PrivateKey {
    suite: Suite,
    bytes: [u8; PRIVATE_KEY_LEN],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

/// Authority-held identity-key parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MasterParams {
    master_secret: Option<PrivateKey>,
    public_params: PublicParams,
}

/// The published half of [`MasterParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublicParams {
    pub suite: Suite,
    pub master_public: PublicKey,
}

pub trait SignatureScheme: Named {
    /// Deterministic key generation from 32 bytes of entropy.
    fn keygen(&self, seed: &[u8; 32]) -> KeyPair;

    fn public_key(&self, private: &PrivateKey) -> Result<PublicKey>;

    fn sign(&self, private: &PrivateKey, message: &[u8]) -> Result<Signature>;

    /// Never errors: anything malformed simply fails to verify.
    fn verify(&self, public: &PublicKey, message: &[u8], sig: &Signature) -> bool;

    /// Whether `public` is an encoding this suite produces.
    fn owns(&self, public: &PublicKey) -> bool;

    fn identity_public(&self, master_public: &PublicKey, id: &str) -> Result<PublicKey>;

    fn identity_private(&self, master_secret: &PrivateKey, id: &str) -> Result<PrivateKey>;
}

pub trait EncryptionScheme: Named {
    fn encrypt(&self, public: &PublicKey, plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Ciphertext>;

    fn decrypt(&self, private: &PrivateKey, ct: &Ciphertext) -> Result<Vec<u8>>;
}

/// A signature scheme and an encryption scheme sharing one key space.
pub trait CryptoSuite: SignatureScheme + EncryptionScheme {}

impl<T: SignatureScheme + EncryptionScheme> CryptoSuite for T {}

pub type Suite = Handle<dyn CryptoSuite>;

pub static SUITES: Registry<dyn CryptoSuite> = Registry::new("crypto suite", &[&P256Suite, &ToySuite]);

pub fn default_suite() -> Suite {
    suite("p256")
}

/// Registry lookup that panics on a typo; use [`SUITES`] for user input.
pub fn suite(name: &str) -> Suite {
    SUITES.get(name).unwrap_or_else(|e| panic!("{e}"))
}

fn owner_of(public: &PublicKey) -> Option<Suite> {
    SUITES.iter().find(|s| s.owns(public))
}

/// Generates a keypair with the default suite.
pub fn keygen(seed: &[u8; 32]) -> KeyPair {
    default_suite().keygen(seed)
}

pub fn sign(private: &PrivateKey, message: &[u8]) -> Result<Signature> {
    private.suite.sign(private, message)
}

pub fn verify(public: &PublicKey, message: &[u8], sig: &Signature) -> bool {
    owner_of(public).is_some_and(|s| s.verify(public, message, sig))
}

pub fn encrypt(public: &PublicKey, plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Ciphertext> {
    owner_of(public)
        .ok_or(CryptoError::MalformedKey)?
        .encrypt(public, plaintext, rng)
}

pub fn decrypt(private: &PrivateKey, ct: &Ciphertext) -> Result<Vec<u8>> {
    private.suite.decrypt(private, ct)
}

pub fn derive_identity_public(params: &PublicParams, id: &str) -> Result<PublicKey> {
    params.suite.identity_public(&params.master_public, id)
}

pub fn derive_identity_private(master: &MasterParams, id: &str) -> Result<PrivateKey> {
    let secret = master
        .master_secret
        .as_ref()
        .ok_or(CryptoError::MissingMasterSecret)?;
    secret.suite.identity_private(secret, id)
}

pub fn hash(bytes: &[u8]) -> Digest {
    Digest(Sha256::digest(bytes).into())
}

/// SHA-256 over the concatenation of `parts`.
pub(crate) fn hash_parts(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

impl MasterParams {
    pub fn generate(suite: Suite, seed: &[u8; 32]) -> Self {
        let kp = suite.keygen(seed);
        Self {
            master_secret: Some(kp.private),
            public_params: PublicParams {
                suite,
                master_public: kp.public,
            },
        }
    }

    pub fn public_params(&self) -> PublicParams {
        self.public_params
    }

    /// A copy holding only the published parameters.
    pub fn public_only(&self) -> Self {
        Self {
            master_secret: None,
            public_params: self.public_params,
        }
    }
}

impl PrivateKey {
    pub(crate) fn new(suite: Suite, bytes: [u8; PRIVATE_KEY_LEN]) -> Self {
        Self { suite, bytes }
    }

    pub fn suite(&self) -> Suite {
        self.suite
    }

    pub fn to_bytes(&self) -> [u8; PRIVATE_KEY_LEN] {
        self.bytes
    }

    pub fn public_key(&self) -> Result<PublicKey> {
        self.suite.public_key(self)
    }
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrivateKey({}, ..)", self.suite)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", hex(&self.0[..8]))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}..)", hex(&self.0[..8]))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}..)", hex(&self.0[..8]))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex(&self.0))
    }
}

impl fmt::Debug for Ciphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ciphertext({} bytes)", self.0.len())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hybrid-encryption back half shared by both suites: derive an AEAD key from
/// the DH output bound to both public keys, then seal with a zero nonce (each
/// key encrypts exactly one message).
fn seal(shared: &[u8], ephemeral: &PublicKey, recipient: &PublicKey, plaintext: &[u8]) -> Ciphertext {
    let cipher = aead_for(shared, ephemeral, recipient);
    let body = cipher
        .encrypt(Nonce::from_slice(&[0u8; 12]), plaintext)
        .expect("chacha20poly1305 encryption is infallible for in-memory buffers");
    let mut out = Vec::with_capacity(PUBLIC_KEY_LEN + body.len());
    out.extend_from_slice(&ephemeral.0);
    out.extend_from_slice(&body);
    Ciphertext(out)
}

fn open(shared: &[u8], ephemeral: &PublicKey, recipient: &PublicKey, body: &[u8]) -> Result<Vec<u8>> {
    aead_for(shared, ephemeral, recipient)
        .decrypt(Nonce::from_slice(&[0u8; 12]), body)
        .map_err(|_| CryptoError::DecryptionFailed)
}

fn aead_for(shared: &[u8], ephemeral: &PublicKey, recipient: &PublicKey) -> ChaCha20Poly1305 {
    let mut salt = [0u8; 2 * PUBLIC_KEY_LEN];
    salt[..PUBLIC_KEY_LEN].copy_from_slice(&ephemeral.0);
    salt[PUBLIC_KEY_LEN..].copy_from_slice(&recipient.0);
    let mut key = [0u8; 32];
    Hkdf::<Sha256>::new(Some(&salt), shared)
        .expand(b"coop-auth hybrid encryption v1", &mut key)
        .expect("32 bytes is a valid HKDF-SHA256 output length");
    ChaCha20Poly1305::new(&key.into())
}

fn split_ciphertext(ct: &Ciphertext) -> Result<(PublicKey, &[u8])> {
    if ct.0.len() < CIPHERTEXT_OVERHEAD {
        return Err(CryptoError::DecryptionFailed);
    }
    let (eph, body) = ct.0.split_at(PUBLIC_KEY_LEN);
    Ok((PublicKey(eph.try_into().expect("split at key length")), body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn seed(n: u8) -> [u8; 32] {
        [n; 32]
    }

    fn suites() -> Vec<Suite> {
        SUITES.iter().collect()
    }

    #[test]
    fn keygen_is_deterministic_and_seed_sensitive() {
        for s in suites() {
            assert_eq!(s.keygen(&seed(1)), s.keygen(&seed(1)), "{s}");
            assert_ne!(s.keygen(&seed(1)).public, s.keygen(&seed(2)).public, "{s}");
        }
    }

    #[test]
    fn sign_verify_tamper_and_wrong_key() {
        for s in suites() {
            let k = s.keygen(&seed(3));
            let k2 = s.keygen(&seed(4));
            let sig = sign(&k.private, b"abc").unwrap();
            assert!(verify(&k.public, b"abc", &sig), "{s}");
            assert!(!verify(&k.public, b"abd", &sig), "{s}");
            assert!(!verify(&k2.public, b"abc", &sig), "{s}");
        }
    }

    #[test]
    fn public_keys_identify_their_suite() {
        let ec = suite("p256").keygen(&seed(5));
        let toy = suite("toy").keygen(&seed(5));
        assert_eq!(owner_of(&ec.public).unwrap().name(), "p256");
        assert_eq!(owner_of(&toy.public).unwrap().name(), "toy");
        assert!(owner_of(&PublicKey([0xff; PUBLIC_KEY_LEN])).is_none());
        // a toy signature never verifies under a p256 key and vice versa
        let sig = sign(&toy.private, b"m").unwrap();
        assert!(!verify(&ec.public, b"m", &sig));
    }

    #[test]
    fn encryption_round_trip_and_failures() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for s in suites() {
            let k = s.keygen(&seed(6));
            let other = s.keygen(&seed(7));
            for len in [0usize, 1, 117, 1024, 4096] {
                let pt: Vec<u8> = (0..len).map(|i| (i * 31 % 251) as u8).collect();
                let ct = encrypt(&k.public, &pt, &mut rng).unwrap();
                assert_eq!(ct.0.len(), len + CIPHERTEXT_OVERHEAD);
                assert_eq!(decrypt(&k.private, &ct).unwrap(), pt, "{s} len {len}");
                assert_eq!(decrypt(&other.private, &ct), Err(CryptoError::DecryptionFailed), "{s}");
                for bit in [0usize, 8 * PUBLIC_KEY_LEN + 3, 8 * ct.0.len() - 1] {
                    let mut bad = ct.clone();
                    bad.0[bit / 8] ^= 1 << (bit % 8);
                    assert!(decrypt(&k.private, &bad).is_err(), "{s} bit {bit}");
                }
            }
            assert!(decrypt(&k.private, &Ciphertext(vec![1, 2, 3])).is_err());
        }
    }

    #[test]
    fn identity_keys_pair_up() {
        for s in suites() {
            let master = MasterParams::generate(s, &seed(8));
            let params = master.public_params();
            let a = derive_identity_public(&params, "zone-3").unwrap();
            assert_eq!(a, derive_identity_public(&params, "zone-3").unwrap());
            assert_ne!(a, derive_identity_public(&params, "zone-4").unwrap());
            for id in ["zone-1#0", "zone-1#1", "rsu-xyz"] {
                let private = derive_identity_private(&master, id).unwrap();
                let public = derive_identity_public(&params, id).unwrap();
                assert_eq!(private.public_key().unwrap(), public, "{s} {id}");
                let sig = sign(&private, b"hello").unwrap();
                assert!(verify(&public, b"hello", &sig));
            }
            assert_eq!(
                derive_identity_private(&master.public_only(), "zone-3"),
                Err(CryptoError::MissingMasterSecret)
            );
            assert_eq!(derive_identity_public(&params, ""), Err(CryptoError::EmptyIdentity));
        }
    }

    #[test]
    fn hash_properties() {
        assert_eq!(hash(b"x"), hash(b"x"));
        assert_ne!(hash(b"x"), hash(b"y"));
        // SHA-256 of the empty string
        assert_eq!(
            hash(b"").to_string(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn toy_sign_verify_round_trip(seed in any::<[u8; 32]>(), msg in proptest::collection::vec(any::<u8>(), 0..256), bit in any::<usize>()) {
            let k = suite("toy").keygen(&seed);
            let sig = sign(&k.private, &msg).unwrap();
            prop_assert!(verify(&k.public, &msg, &sig));
            let mut bad_sig = sig;
            let b = bit % (8 * SIGNATURE_LEN);
            bad_sig.0[b / 8] ^= 1 << (b % 8);
            prop_assert!(!verify(&k.public, &msg, &bad_sig));
            if !msg.is_empty() {
                let mut bad_msg = msg.clone();
                let b = bit % (8 * msg.len());
                bad_msg[b / 8] ^= 1 << (b % 8);
                prop_assert!(!verify(&k.public, &bad_msg, &sig));
            }
        }

        #[test]
        fn identity_derivation_agrees(id in "[a-z0-9#-]{1,24}") {
            for s in suites() {
                let master = MasterParams::generate(s, &[42; 32]);
                let private = derive_identity_private(&master, &id).unwrap();
                prop_assert_eq!(private.public_key().unwrap(), derive_identity_public(&master.public_params(), &id).unwrap());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn p256_sign_verify_round_trip(seed in any::<[u8; 32]>(), msg in proptest::collection::vec(any::<u8>(), 0..128), bit in any::<usize>()) {
            let k = suite("p256").keygen(&seed);
            let sig = sign(&k.private, &msg).unwrap();
            prop_assert!(verify(&k.public, &msg, &sig));
            let mut bad_sig = sig;
            let b = bit % (8 * SIGNATURE_LEN);
            bad_sig.0[b / 8] ^= 1 << (b % 8);
            prop_assert!(!verify(&k.public, &msg, &bad_sig));
        }
    }
}
