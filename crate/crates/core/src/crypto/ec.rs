use p256::ecdsa::signature::{Signer, Verifier};
use p256::ecdsa::{Signature as EcdsaSignature, SigningKey, VerifyingKey};
use p256::elliptic_curve::ops::Reduce;
use p256::elliptic_curve::point::AffineCoordinates;
use p256::elliptic_curve::sec1::{FromEncodedPoint, ToEncodedPoint};
use p256::elliptic_curve::{Field, PrimeField};
use p256::{AffinePoint, EncodedPoint, FieldBytes, ProjectivePoint, Scalar, U256};
use rand::RngCore;

use super::*;

/// ECDSA / ECIES over NIST P-256.
pub struct P256Suite;

fn this() -> Suite {
    suite("p256")
}

/// Hashes into a non-zero scalar, re-hashing with a counter on the
/// (astronomically unlikely) zero result.
fn hash_to_scalar(domain: &[u8], data: &[u8]) -> Scalar {
    for counter in 0u32.. {
        let h = hash_parts(&[domain, &counter.to_be_bytes(), data]);
        let s = <Scalar as Reduce<U256>>::reduce_bytes(&FieldBytes::from(h));
        if !bool::from(s.is_zero()) {
            return s;
        }
    }
    unreachable!()
}

fn scalar_of(private: &PrivateKey) -> Result<Scalar> {
    let s: Option<Scalar> = Scalar::from_repr(FieldBytes::from(private.to_bytes())).into();
    s.filter(|s| !bool::from(s.is_zero())).ok_or(CryptoError::MalformedKey)
}

fn point_of(public: &PublicKey) -> Result<ProjectivePoint> {
    let ep = EncodedPoint::from_bytes(public.0).map_err(|_| CryptoError::MalformedKey)?;
    let p: Option<AffinePoint> = AffinePoint::from_encoded_point(&ep).into();
    p.map(ProjectivePoint::from).ok_or(CryptoError::MalformedKey)
}

fn encode_point(p: &ProjectivePoint) -> PublicKey {
    let ep = p.to_affine().to_encoded_point(true);
    PublicKey(ep.as_bytes().try_into().expect("compressed P-256 point is 33 bytes"))
}

fn private_from_scalar(s: &Scalar) -> PrivateKey {
    PrivateKey::new(this(), s.to_repr().into())
}

impl Named for P256Suite {
    fn name(&self) -> &'static str {
        "p256"
    }
}

impl SignatureScheme for P256Suite {
    fn keygen(&self, seed: &[u8; 32]) -> KeyPair {
        let s = hash_to_scalar(b"coop-auth/p256/keygen", seed);
        KeyPair {
            public: encode_point(&(ProjectivePoint::GENERATOR * s)),
            private: private_from_scalar(&s),
        }
    }

    fn public_key(&self, private: &PrivateKey) -> Result<PublicKey> {
        Ok(encode_point(&(ProjectivePoint::GENERATOR * scalar_of(private)?)))
    }

    fn sign(&self, private: &PrivateKey, message: &[u8]) -> Result<Signature> {
        let key = SigningKey::from_bytes(&FieldBytes::from(private.to_bytes()))
            .map_err(|_| CryptoError::MalformedKey)?;
        let sig: EcdsaSignature = key.sign(message);
        Ok(Signature(sig.to_bytes().into()))
    }

    fn verify(&self, public: &PublicKey, message: &[u8], sig: &Signature) -> bool {
        let Ok(key) = VerifyingKey::from_sec1_bytes(&public.0) else {
            return false;
        };
        let Ok(sig) = EcdsaSignature::from_slice(&sig.0) else {
            return false;
        };
        key.verify(message, &sig).is_ok()
    }

    fn owns(&self, public: &PublicKey) -> bool {
        matches!(public.0[0], 0x02 | 0x03)
    }

    fn identity_public(&self, master_public: &PublicKey, id: &str) -> Result<PublicKey> {
        if id.is_empty() {
            return Err(CryptoError::EmptyIdentity);
        }
        let h = hash_to_scalar(b"coop-auth/p256/identity", id.as_bytes());
        Ok(encode_point(&(point_of(master_public)? * h)))
    }

    fn identity_private(&self, master_secret: &PrivateKey, id: &str) -> Result<PrivateKey> {
        if id.is_empty() {
            return Err(CryptoError::EmptyIdentity);
        }
        let h = hash_to_scalar(b"coop-auth/p256/identity", id.as_bytes());
        Ok(private_from_scalar(&(scalar_of(master_secret)? * h)))
    }
}

impl EncryptionScheme for P256Suite {
    fn encrypt(&self, public: &PublicKey, plaintext: &[u8], rng: &mut dyn RngCore) -> Result<Ciphertext> {
        let recipient = point_of(public)?;
        let mut entropy = [0u8; 32];
        rng.fill_bytes(&mut entropy);
        let e = hash_to_scalar(b"coop-auth/p256/ephemeral", &entropy);
        let ephemeral = encode_point(&(ProjectivePoint::GENERATOR * e));
        let shared = (recipient * e).to_affine().x();
        Ok(seal(&shared, &ephemeral, public, plaintext))
    }

    fn decrypt(&self, private: &PrivateKey, ct: &Ciphertext) -> Result<Vec<u8>> {
        let s = scalar_of(private)?;
        let (ephemeral, body) = split_ciphertext(ct)?;
        let point = point_of(&ephemeral).map_err(|_| CryptoError::DecryptionFailed)?;
        let shared = (point * s).to_affine().x();
        let own = encode_point(&(ProjectivePoint::GENERATOR * s));
        open(&shared, &ephemeral, &own, body)
    }
}
