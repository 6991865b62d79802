//! Roadside unit: checks certificate requests, issues pseudonymous
//! certificates after a random release delay, and keeps the history table
//! the authority uses for tracing.

use std::collections::HashSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::certs::{HistoryEntry, LongTermCert, RevocationList, TempCert, CERT_WIRE_LEN};
use crate::crypto::{self, Ciphertext, PrivateKey, PublicKey, Signature, PUBLIC_KEY_LEN};
use crate::time::{Duration, Timestamp};
use crate::wire::{Decode, DecodeError, Encode, Reader};

/// Default upper bound on the release delay.
pub const DEFAULT_DELTA_MAX: Duration = Duration::from_secs(1);
/// Default pseudonymous certificate lifetime (10 minutes).
pub const DEFAULT_CERT_LIFETIME: Duration = Duration::from_secs(600);

/// A vehicle's request for a temporary certificate.
///
/// `ciphertext` seals the long-term certificate together with a second copy
/// of `pseudo_public_key` under the RSU's identity key; `request_signature`
/// is made with the vehicle's long-term key over the cleartext key followed
/// by the ciphertext bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertRequest {
    pub pseudo_public_key: PublicKey,
    pub ciphertext: Ciphertext,
    pub request_signature: Signature,
}

impl CertRequest {
    pub fn signed_bytes(pseudo_public_key: &PublicKey, ciphertext: &Ciphertext) -> Vec<u8> {
        let mut out = Vec::with_capacity(PUBLIC_KEY_LEN + ciphertext.0.len());
        out.extend_from_slice(&pseudo_public_key.0);
        out.extend_from_slice(&ciphertext.0);
        out
    }

    /// Plaintext sealed inside the request.
    pub fn sealed_payload(long_term: &LongTermCert, pseudo_public_key: &PublicKey) -> Vec<u8> {
        let mut out = long_term.encode();
        out.extend_from_slice(&pseudo_public_key.0);
        out
    }
}

impl Encode for CertRequest {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.pseudo_public_key.0);
        out.extend_from_slice(&(self.ciphertext.0.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.ciphertext.0);
        out.extend_from_slice(&self.request_signature.0);
    }
}

impl Decode for CertRequest {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let pseudo_public_key = PublicKey(r.array()?);
        let len = r.u32()? as usize;
        let ciphertext = Ciphertext(r.take(len)?.to_vec());
        Ok(Self {
            pseudo_public_key,
            ciphertext,
            request_signature: Signature(r.array()?),
        })
    }
}

/// Why a request was turned away. Checks run in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RejectReason {
    #[error("request ciphertext does not decrypt under this RSU's key")]
    DecryptionFailed,
    #[error("decrypted payload is not a certificate and key")]
    MalformedPayload,
    #[error("long-term certificate not signed by the authority")]
    BadAuthoritySignature,
    #[error("request signature does not match the long-term key")]
    BadRequestSignature,
    #[error("cleartext pseudonym key differs from the sealed copy")]
    KeyMismatch,
    #[error("long-term certificate is revoked")]
    Revoked,
}

/// A certificate the RSU has committed to, held back until `release_at`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scheduled {
    pub cert: TempCert,
    pub release_at: Timestamp,
}

#[derive(Debug, Clone, Copy)]
pub struct RsuParams {
    /// Release delay is drawn uniformly from `[0, delta_max)`.
    pub delta_max: Duration,
    pub cert_lifetime: Duration,
}

impl Default for RsuParams {
    fn default() -> Self {
        Self {
            delta_max: DEFAULT_DELTA_MAX,
            cert_lifetime: DEFAULT_CERT_LIFETIME,
        }
    }
}

pub struct Rsu {
    zone_id: String,
    epoch: u64,
    private_key: PrivateKey,
    authority_public: PublicKey,
    rl: RevocationList,
    history: Vec<HistoryEntry>,
    issued_ids: HashSet<u64>,
    params: RsuParams,
    id_rng: ChaCha20Rng,
}

impl Rsu {
    pub fn new(
        zone_id: impl Into<String>,
        epoch: u64,
        private_key: PrivateKey,
        authority_public: PublicKey,
        params: RsuParams,
        seed: u64,
    ) -> Self {
        Self {
            zone_id: zone_id.into(),
            epoch,
            private_key,
            authority_public,
            rl: RevocationList::new(),
            history: Vec::new(),
            issued_ids: HashSet::new(),
            params,
            id_rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn zone_id(&self) -> &str {
        &self.zone_id
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn rl(&self) -> &RevocationList {
        &self.rl
    }

    pub fn public_key(&self) -> PublicKey {
        self.private_key
            .public_key()
            .expect("provisioned RSU key is well-formed")
    }

    pub fn handle_cert_request(&mut self, req: &CertRequest, now: Timestamp) -> Result<Scheduled, RejectReason> {
        let plain = crypto::decrypt(&self.private_key, &req.ciphertext).map_err(|_| RejectReason::DecryptionFailed)?;
        if plain.len() != CERT_WIRE_LEN + PUBLIC_KEY_LEN {
            return Err(RejectReason::MalformedPayload);
        }
        let (cert_bytes, key_bytes) = plain.split_at(CERT_WIRE_LEN);
        let long_term = LongTermCert::decode(cert_bytes).map_err(|_| RejectReason::MalformedPayload)?;
        let sealed_key = PublicKey(key_bytes.try_into().expect("split at key length"));

        if !long_term.verify(&self.authority_public) {
            return Err(RejectReason::BadAuthoritySignature);
        }
        let signed = CertRequest::signed_bytes(&req.pseudo_public_key, &req.ciphertext);
        if !crypto::verify(&long_term.vehicle_public_key, &signed, &req.request_signature) {
            return Err(RejectReason::BadRequestSignature);
        }
        if sealed_key != req.pseudo_public_key {
            return Err(RejectReason::KeyMismatch);
        }
        if self.rl.contains(long_term.serial) {
            return Err(RejectReason::Revoked);
        }

        let pseudo_id = loop {
            let id = self.id_rng.next_u64();
            if self.issued_ids.insert(id) {
                break id;
            }
        };
        let expiration = (now + self.params.cert_lifetime).as_secs();
        let rsu_signature = crypto::sign(
            &self.private_key,
            &TempCert::signed_bytes(&req.pseudo_public_key, expiration, pseudo_id),
        )
        .expect("provisioned RSU key is well-formed");
        let cert = TempCert {
            pseudo_public_key: req.pseudo_public_key,
            expiration,
            pseudo_id,
            rsu_signature,
        };
        self.history.push(HistoryEntry {
            pseudo_id,
            pseudo_public_key: req.pseudo_public_key,
            long_term_cert: long_term,
            issued_at: now.as_secs(),
        });
        let jitter = match self.params.delta_max.as_nanos() {
            0 => 0,
            max => self.id_rng.gen_range(0..max),
        };
        Ok(Scheduled {
            cert,
            release_at: now + Duration::from_nanos(jitter),
        })
    }

    pub fn apply_rl_update(&mut self, rl: &RevocationList) {
        self.rl = self.rl.merge(rl);
    }

    /// All issued entries, oldest first.
    pub fn export_history(&self) -> Vec<HistoryEntry> {
        let mut out = self.history.clone();
        out.sort_by_key(|e| e.issued_at);
        out
    }
}
