use rand::RngCore;

use super::*;

/// Insecure stand-in suite over (Z_q, +) with q = 2^61 - 1.
///
/// "Discrete logs" here are a single modular division, and signatures are
/// plain hashes of the public key and message: anyone can forge them. What
/// the suite does preserve is every functional property the protocol relies
/// on (round trips, tamper detection, wrong-key failure, identity-key
/// pairing), at a fraction of the cost of real curve arithmetic.
pub struct ToySuite;

const Q: u64 = (1 << 61) - 1;
const G: u64 = 7;
const PUBLIC_TAG: u8 = 0x7a;

fn this() -> Suite {
    suite("toy")
}

fn mul(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % Q as u128) as u64
}

fn hash_to_scalar(domain: &[u8], data: &[u8]) -> u64 {
    for counter in 0u32.. {
        let h = hash_parts(&[domain, &counter.to_be_bytes(), data]);
        let v = u64::from_be_bytes(h[..8].try_into().expect("8 bytes")) % Q;
        if v != 0 {
            return v;
        }
    }
    unreachable!()
}

fn scalar_of(private: &PrivateKey) -> Result<u64> {
    let b = private.to_bytes();
    let v = u64::from_be_bytes(b[24..].try_into().expect("8 bytes"));
    if b[..24].iter().any(|&x| x != 0) || v == 0 || v >= Q {
        return Err(CryptoError::MalformedKey);
    }
    Ok(v)
}

fn element_of(public: &PublicKey) -> Result<u64> {
    if !ToySuite.owns(public) {
        return Err(CryptoError::MalformedKey);
    }
    Ok(u64::from_be_bytes(public.0[25..].try_into().expect("8 bytes")))
}

fn encode_element(v: u64) -> PublicKey {
    let mut out = [0u8; PUBLIC_KEY_LEN];
    out[0] = PUBLIC_TAG;
    out[25..].copy_from_slice(&v.to_be_bytes());
    PublicKey(out)
}

fn private_from_scalar(v: u64) -> PrivateKey {
    let mut out = [0u8; PRIVATE_KEY_LEN];
    out[24..].copy_from_slice(&v.to_be_bytes());
    PrivateKey::new(this(), out)
}

fn signature_for(public: &PublicKey, message: &[u8]) -> Signature {
    let mut out = [0u8; SIGNATURE_LEN];
    out[..32].copy_from_slice(&hash_parts(&[b"coop-auth/toy/sig/a", &public.0, message]));
    out[32..].copy_from_slice(&hash_parts(&[b"coop-auth/toy/sig/b", &public.0, message]));
    Signature(out)
}

impl Named for ToySuite {
    fn name(&self) -> &'static str {
        "toy"
    }
}

impl SignatureScheme for ToySuite {
    fn keygen(&self, seed: &[u8; 32]) -> KeyPair {
        let s = hash_to_scalar(b"coop-auth/toy/keygen", seed);
        KeyPair {
            public: encode_element(mul(s, G)),
            private: private_from_scalar(s),
        }
    }

    fn public_key(&self, private: &PrivateKey) -> Result<PublicKey> {
        Ok(encode_element(mul(scalar_of(private)?, G)))
    }

    fn sign(&self, private: &PrivateKey, message: &[u8]) -> Result<Signature> {
        Ok(signature_for(&self.public_key(private)?, message))
    }

    fn verify(&self, public: &PublicKey, message: &[u8], sig: &Signature) -> bool {
        self.owns(public) && signature_for(public, message) == *sig
    }

    fn owns(&self, public: &PublicKey) -> bool {
        public.0[0] == PUBLIC_TAG
            && public.0[1..25].iter().all(|&b| b == 0)
            && u64::from_be_bytes(public.0[25..].try_into().expect("8 bytes")) < Q
    }

    fn identity_public(&self, master_public: &PublicKey, id: &str) -> Result<PublicKey> {
        if id.is_empty() {
            return Err(CryptoError::EmptyIdentity);
        }
        let h = hash_to_scalar(b"coop-auth/toy/identity", id.as_bytes());
        Ok(encode_element(mul(element_of(master_public)?, h)))
    }

    fn identity_private(&self, master_secret: &PrivateKey, id: &str) -> Result<PrivateKey> {
        if id.is_empty() {
            return Err(CryptoError::EmptyIdentity);
        }
        let h = hash_to_scalar(b"coop-auth/toy/identity", id.as_bytes());
        Ok(private_from_scalar(mul(scalar_of(master_secret)?, h)))
    }
}

impl EncryptionScheme for ToySuite {
    fn encrypt(&self, public: &PublicKey, plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Ciphertext> {
        let recipient = element_of(public)?;
        let mut entropy = [0u8; 32];
        rng.fill_bytes(&mut entropy);
        let e = hash_to_scalar(b"coop-auth/toy/ephemeral", &entropy);
        let ephemeral = encode_element(mul(e, G));
        let shared = mul(e, recipient).to_be_bytes();
        Ok(seal(&shared, &ephemeral, public, plaintext))
    }

    fn decrypt(&self, private: &PrivateKey, ct: &Ciphertext) -> Result<Vec<u8>> {
        let s = scalar_of(private)?;
        let (ephemeral, body) = split_ciphertext(ct)?;
        let point = element_of(&ephemeral).map_err(|_| CryptoError::DecryptionFailed)?;
        let shared = mul(s, point).to_be_bytes();
        open(&shared, &ephemeral, &encode_element(mul(s, G)), body)
    }
}
