//! The trusted center: enrolls vehicles, provisions roadside-unit keys,
//! traces pseudonyms back to vehicles, and maintains the revocation list.

use std::collections::{BTreeMap, HashMap};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::certs::{HistoryEntry, LongTermCert, RevocationList};
use crate::crypto::{self, CryptoError, KeyPair, MasterParams, PrivateKey, PublicKey, PublicParams, Suite};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthorityError {
    #[error("identity must not be empty")]
    EmptyIdentity,
    #[error("identity `{0}` is already enrolled")]
    AlreadyEnrolled(String),
    #[error("zone `{zone}` is at epoch {registered}, refusing epoch {requested}")]
    StaleEpoch { zone: String, registered: u64, requested: u64 },
    #[error("pseudonym {0:#018x} not found in the supplied history")]
    PseudonymNotFound(u64),
    #[error("serial {0} from RSU history has no enrollment record")]
    IntegrityError(u64),
    #[error("identity `{0}` is not enrolled")]
    UnknownIdentity(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// Identity string an RSU key is derived from.
pub fn rsu_identity(zone_id: &str, epoch: u64) -> String {
    format!("{zone_id}#{epoch}")
}

/// Public key of the RSU serving `zone_id` at `epoch`, computable by anyone.
pub fn rsu_public_key(params: &PublicParams, zone_id: &str, epoch: u64) -> Result<PublicKey, CryptoError> {
    crypto::derive_identity_public(params, &rsu_identity(zone_id, epoch))
}

#[derive(Debug, Clone)]
pub struct Enrollment {
    pub identity: String,
    pub cert: LongTermCert,
}

pub struct Authority {
    master: MasterParams,
    keypair: KeyPair,
    enrollment_db: BTreeMap<u64, Enrollment>,
    by_identity: HashMap<String, u64>,
    current_rl: RevocationList,
    rsu_registry: BTreeMap<String, u64>,
    next_serial: u64,
    rng: ChaCha20Rng,
}

impl Authority {
    pub fn new(suite: Suite, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut master_seed = [0u8; 32];
        rng.fill_bytes(&mut master_seed);
        let mut key_seed = [0u8; 32];
        rng.fill_bytes(&mut key_seed);
        Self {
            master: MasterParams::generate(suite, &master_seed),
            keypair: suite.keygen(&key_seed),
            enrollment_db: BTreeMap::new(),
            by_identity: HashMap::new(),
            current_rl: RevocationList::new(),
            rsu_registry: BTreeMap::new(),
            next_serial: 1,
            rng,
        }
    }

    pub fn public_key(&self) -> PublicKey {
        self.keypair.public
    }

    pub fn public_params(&self) -> PublicParams {
        self.master.public_params()
    }

    pub fn suite(&self) -> Suite {
        self.master.public_params().suite
    }

    pub fn current_rl(&self) -> &RevocationList {
        &self.current_rl
    }

    pub fn enrollment(&self, serial: u64) -> Option<&Enrollment> {
        self.enrollment_db.get(&serial)
    }

    pub fn serial_of(&self, identity: &str) -> Option<u64> {
        self.by_identity.get(identity).copied()
    }

    /// Registers a vehicle in person: fresh long-term keys plus a certificate
    /// over them.
    pub fn enroll_vehicle(&mut self, identity: &str, now: Timestamp) -> Result<(KeyPair, LongTermCert), AuthorityError> {
        if identity.is_empty() {
            return Err(AuthorityError::EmptyIdentity);
        }
        if self.by_identity.contains_key(identity) {
            return Err(AuthorityError::AlreadyEnrolled(identity.to_string()));
        }
        let mut seed = [0u8; 32];
        self.rng.fill_bytes(&mut seed);
        let keys = self.suite().keygen(&seed);
        let serial = self.next_serial;
        self.next_serial += 1;
        let issued_at = now.as_secs();
        let authority_signature = crypto::sign(
            &self.keypair.private,
            &LongTermCert::signed_bytes(&keys.public, serial, issued_at),
        )?;
        let cert = LongTermCert {
            vehicle_public_key: keys.public,
            serial,
            issued_at,
            authority_signature,
        };
        self.enrollment_db.insert(
            serial,
            Enrollment {
                identity: identity.to_string(),
                cert,
            },
        );
        self.by_identity.insert(identity.to_string(), serial);
        Ok((keys, cert))
    }

    /// Hands out the private key for `zone_id` at `epoch`. Epochs only move
    /// forward; re-provisioning the current epoch returns the same key.
    pub fn provision_rsu(&mut self, zone_id: &str, epoch: u64) -> Result<PrivateKey, AuthorityError> {
        if let Some(&registered) = self.rsu_registry.get(zone_id) {
            if epoch < registered {
                return Err(AuthorityError::StaleEpoch {
                    zone: zone_id.to_string(),
                    registered,
                    requested: epoch,
                });
            }
        }
        let key = crypto::derive_identity_private(&self.master, &rsu_identity(zone_id, epoch))?;
        self.rsu_registry.insert(zone_id.to_string(), epoch);
        Ok(key)
    }

    pub fn rsu_epoch(&self, zone_id: &str) -> Option<u64> {
        self.rsu_registry.get(zone_id).copied()
    }

    /// Maps a pseudonym to the vehicle identity behind it, using the issuing
    /// RSU's history table.
    pub fn trace(&self, pseudo_id: u64, history: &[HistoryEntry]) -> Result<String, AuthorityError> {
        let entry = history
            .iter()
            .find(|e| e.pseudo_id == pseudo_id)
            .ok_or(AuthorityError::PseudonymNotFound(pseudo_id))?;
        let serial = entry.long_term_cert.serial;
        self.enrollment_db
            .get(&serial)
            .map(|e| e.identity.clone())
            .ok_or(AuthorityError::IntegrityError(serial))
    }

    /// Adds the identity's serial to the revocation list and returns the new
    /// version for distribution to RSUs.
    pub fn revoke(&mut self, identity: &str) -> Result<RevocationList, AuthorityError> {
        let serial = self
            .serial_of(identity)
            .ok_or_else(|| AuthorityError::UnknownIdentity(identity.to_string()))?;
        self.current_rl = self.current_rl.add(serial);
        Ok(self.current_rl.clone())
    }

    /// Drops an enrollment record, e.g. after a retention period. The
    /// identity cannot be re-enrolled.
    pub fn purge_enrollment(&mut self, serial: u64) -> Option<Enrollment> {
        self.enrollment_db.remove(&serial)
    }
}
