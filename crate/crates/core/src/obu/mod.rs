//! On-board unit: certificate acquisition, beaconing, neighbour-list gossip
//! and cooperative signature checking.
//!
//! [`Obu`] is a sans-IO state machine. The caller (the simulator, or a test
//! harness) feeds it received messages and clock ticks and acts on what it
//! returns; it never sleeps, sends or spends CPU time itself.
//!
//! A received beacon takes one of two paths:
//!
//! * **verify now** when the sender is unknown, has not advertised a
//!   neighbour list yet, or this node is elected as one of its verifiers.
//!   A bad signature produces a signed [`DisapprovalMsg`] for broadcast.
//! * **wait** otherwise: the beacon is parked for `delta_t`. A valid
//!   disapproval naming it within that window pulls it out for a local
//!   recheck; if none arrives it is delivered on the next timer tick.
//!
//! Neighbour records are only created or refreshed from messages that were
//! verified, directly or by surviving the wait window.

mod election;
mod messages;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::RngCore;
use thiserror::Error;

use crate::authority::rsu_public_key;
use crate::certs::{check_temp_cert, CertStatus, LongTermCert, TempCert};
use crate::crypto::{self, CryptoError, Digest, KeyPair, PublicKey, PublicParams};
use crate::rsu::CertRequest;
use crate::time::{Duration, Timestamp};

pub use election::{
    default_election, election, id_distance, is_verifier, Election, ElectionStrategy, PNearest, PaperRule,
    STRATEGIES,
};
pub use messages::{
    neighbor_list_wire_len, Beacon, DisapprovalMsg, Frame, Kinematics, NeighborListMsg, BEACON_WIRE_LEN,
    DISAPPROVAL_WIRE_LEN, KINEMATICS_WIRE_LEN, TAG_BEACON, TAG_CERT_REQUEST, TAG_CERT_RESPONSE, TAG_DISAPPROVAL,
    TAG_NEIGHBOR_LIST,
};

/// How long a delivered message id is remembered for duplicate suppression.
const SEEN_HORIZON: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObuParams {
    /// Verifier count parameter.
    pub p: usize,
    /// Wait window before a non-verifier accepts a beacon.
    pub delta_t: Duration,
    /// Neighbour-list gossip period.
    pub theta: Duration,
    pub beacon_period: Duration,
    pub neighbor_timeout: Duration,
    pub election: Election,
}

impl Default for ObuParams {
    fn default() -> Self {
        Self {
            p: 5,
            delta_t: Duration::from_millis(30),
            theta: Duration::from_secs(1),
            beacon_period: Duration::from_millis(300),
            neighbor_timeout: Duration::from_secs(1),
            election: default_election(),
        }
    }
}

impl ObuParams {
    pub fn validate(&self) -> Result<(), ObuError> {
        let bad = |field| Err(ObuError::InvalidParam(field));
        if self.p < 1 {
            return bad("p");
        }
        if self.delta_t.is_zero() {
            return bad("delta_t");
        }
        if self.theta.is_zero() {
            return bad("theta");
        }
        if self.beacon_period.is_zero() {
            return bad("beacon_period");
        }
        if self.neighbor_timeout.is_zero() {
            return bad("neighbor_timeout");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObuError {
    #[error("no usable temporary certificate; renew first")]
    MustRenew,
    #[error("no certificate request outstanding")]
    NoPendingRequest,
    #[error("certificate does not carry the requested pseudonym key")]
    CertKeyMismatch,
    #[error("certificate rejected: {0:?}")]
    CertRejected(CertStatus),
    #[error("parameter `{0}` out of range")]
    InvalidParam(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// RSU public keys a vehicle accepts as certificate issuers.
#[derive(Debug, Clone, Default)]
pub struct TrustStore {
    issuers: Vec<PublicKey>,
}

impl TrustStore {
    pub fn new(issuers: impl IntoIterator<Item = PublicKey>) -> Self {
        let mut s = Self::default();
        for k in issuers {
            s.add(k);
        }
        s
    }

    /// Keys of every `(zone, epoch)` pair, derived from the published
    /// parameters.
    pub fn for_zones<'a>(
        params: &PublicParams,
        zones: impl IntoIterator<Item = (&'a str, u64)>,
    ) -> Result<Self, CryptoError> {
        let keys = zones
            .into_iter()
            .map(|(z, e)| rsu_public_key(params, z, e))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(keys))
    }

    pub fn add(&mut self, issuer: PublicKey) {
        if !self.issuers.contains(&issuer) {
            self.issuers.push(issuer);
        }
    }

    /// Best status over all trusted issuers.
    pub fn check(&self, cert: &TempCert, now: Timestamp) -> CertStatus {
        self.issuers
            .iter()
            .map(|k| check_temp_cert(cert, k, now))
            .find(|s| *s != CertStatus::BadSignature)
            .unwrap_or(CertStatus::BadSignature)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborRecord {
    pub temp_cert: TempCert,
    pub last_heard: Timestamp,
    /// The neighbour's own neighbours, from its last verified list.
    pub advertised_neighbors: BTreeSet<u64>,
    /// `None` until a list from this neighbour has been verified.
    pub list_time: Option<Timestamp>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingMessage {
    pub beacon: Beacon,
    pub message_id: Digest,
    pub received_at: Timestamp,
    pub deadline: Timestamp,
    /// A disapproval naming this beacon is being checked; do not deliver.
    pub held: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiveAction {
    VerifyNow,
    Wait(Timestamp),
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    /// Signature good, beacon handed to the application.
    Deliver,
    /// Signature bad. Carries the report to broadcast, or `None` when this
    /// node has no usable certificate to sign one with.
    Disapprove(Option<DisapprovalMsg>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DisapprovalActions {
    /// Rebroadcast the disapproval (first valid sighting only).
    pub forward: bool,
    /// A parked beacon the disapproval named; check it locally.
    pub recheck: Option<Beacon>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecheckOutcome {
    Delivered,
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TimerOutput {
    /// Beacons whose wait window ran out without a disapproval.
    pub delivered: Vec<Beacon>,
    pub evicted: Vec<u64>,
    pub beacon_due: bool,
    pub list_due: bool,
}

struct PendingRequest {
    keys: KeyPair,
    issuer: PublicKey,
}

struct Pseudonym {
    keys: KeyPair,
    cert: TempCert,
}

pub struct Obu {
    long_term: (KeyPair, LongTermCert),
    public_params: PublicParams,
    pseudo: Option<Pseudonym>,
    requested: Option<PendingRequest>,
    neighbors: BTreeMap<u64, NeighborRecord>,
    pending: BTreeMap<Digest, PendingMessage>,
    seen: HashMap<Digest, Timestamp>,
    seen_disapprovals: HashSet<Digest>,
    trust: TrustStore,
    params: ObuParams,
    next_beacon_at: Option<Timestamp>,
    next_list_at: Option<Timestamp>,
}

impl Obu {
    pub fn new(
        long_term: (KeyPair, LongTermCert),
        public_params: PublicParams,
        trust: TrustStore,
        params: ObuParams,
    ) -> Result<Self, ObuError> {
        params.validate()?;
        Ok(Self {
            long_term,
            public_params,
            pseudo: None,
            requested: None,
            neighbors: BTreeMap::new(),
            pending: BTreeMap::new(),
            seen: HashMap::new(),
            seen_disapprovals: HashSet::new(),
            trust,
            params,
            next_beacon_at: None,
            next_list_at: None,
        })
    }

    pub fn params(&self) -> &ObuParams {
        &self.params
    }

    pub fn long_term_cert(&self) -> &LongTermCert {
        &self.long_term.1
    }

    pub fn pseudo_id(&self) -> Option<u64> {
        self.pseudo.as_ref().map(|p| p.cert.pseudo_id)
    }

    pub fn temp_cert(&self) -> Option<&TempCert> {
        self.pseudo.as_ref().map(|p| &p.cert)
    }

    pub fn neighbor_table(&self) -> &BTreeMap<u64, NeighborRecord> {
        &self.neighbors
    }

    pub fn pending(&self) -> &BTreeMap<Digest, PendingMessage> {
        &self.pending
    }

    pub fn trust_mut(&mut self) -> &mut TrustStore {
        &mut self.trust
    }

    pub fn has_usable_cert(&self, now: Timestamp) -> bool {
        self.pseudo.as_ref().is_some_and(|p| !p.cert.is_expired(now))
    }

    pub fn request_outstanding(&self) -> bool {
        self.requested.is_some()
    }

    /// Builds a certificate request for the RSU of `zone_id` at `epoch`. The
    /// fresh pseudonym keys are held back until the matching certificate is
    /// installed; a newer request replaces an older one.
    pub fn build_cert_request(
        &mut self,
        zone_id: &str,
        epoch: u64,
        rng: &mut dyn RngCore,
    ) -> Result<CertRequest, ObuError> {
        let issuer = rsu_public_key(&self.public_params, zone_id, epoch)?;
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        let keys = self.long_term.0.private.suite().keygen(&seed);
        let sealed = CertRequest::sealed_payload(&self.long_term.1, &keys.public);
        let ciphertext = crypto::encrypt(&issuer, &sealed, rng)?;
        let request_signature = crypto::sign(
            &self.long_term.0.private,
            &CertRequest::signed_bytes(&keys.public, &ciphertext),
        )?;
        let req = CertRequest {
            pseudo_public_key: keys.public,
            ciphertext,
            request_signature,
        };
        self.requested = Some(PendingRequest { keys, issuer });
        Ok(req)
    }

    /// Accepts the certificate answering the outstanding request and switches
    /// to the new pseudonym.
    pub fn install_temp_cert(&mut self, cert: TempCert, now: Timestamp) -> Result<(), ObuError> {
        let req = self.requested.as_ref().ok_or(ObuError::NoPendingRequest)?;
        if cert.pseudo_public_key != req.keys.public {
            return Err(ObuError::CertKeyMismatch);
        }
        match check_temp_cert(&cert, &req.issuer, now) {
            CertStatus::Valid => {}
            other => return Err(ObuError::CertRejected(other)),
        }
        let req = self.requested.take().expect("checked above");
        self.trust.add(req.issuer);
        self.pseudo = Some(Pseudonym { keys: req.keys, cert });
        Ok(())
    }

    /// Arms the beacon and list schedules, both starting at `first_at`.
    pub fn start_beaconing(&mut self, first_at: Timestamp) {
        self.next_beacon_at = Some(first_at);
        self.next_list_at = Some(first_at);
    }

    fn usable_pseudonym(&self, now: Timestamp) -> Result<&Pseudonym, ObuError> {
        self.pseudo
            .as_ref()
            .filter(|p| !p.cert.is_expired(now))
            .ok_or(ObuError::MustRenew)
    }

    pub fn make_beacon(&self, kinematics: Kinematics, now: Timestamp) -> Result<Beacon, ObuError> {
        let p = self.usable_pseudonym(now)?;
        Ok(Beacon::sign(p.cert.pseudo_id, now, kinematics, p.cert, &p.keys.private)?)
    }

    pub fn make_neighbor_list(&self, now: Timestamp) -> Result<NeighborListMsg, ObuError> {
        let p = self.usable_pseudonym(now)?;
        let ids: BTreeSet<u64> = self.neighbors.keys().copied().collect();
        Ok(NeighborListMsg::sign(p.cert.pseudo_id, now, &ids, p.cert, &p.keys.private)?)
    }

    fn mutual_ids(&self, sender: &NeighborRecord, self_id: u64, sender_id: u64) -> Vec<u64> {
        sender
            .advertised_neighbors
            .iter()
            .copied()
            .filter(|id| *id != self_id && *id != sender_id && self.neighbors.contains_key(id))
            .collect()
    }

    /// Whether this node elects itself to verify `sender_id`, or `None`
    /// when it lacks the shared knowledge to take part in the election.
    pub fn elected_for(&self, sender_id: u64) -> Option<bool> {
        let self_id = self.pseudo_id()?;
        let record = self.neighbors.get(&sender_id)?;
        record.list_time?;
        let mutual = self.mutual_ids(record, self_id, sender_id);
        Some(self.params.election.is_verifier(self_id, sender_id, &mutual, self.params.p))
    }

    pub fn on_receive_beacon(&mut self, beacon: &Beacon, now: Timestamp) -> ReceiveAction {
        let id = beacon.message_id();
        if self.seen.contains_key(&id) || Some(beacon.pseudo_id) == self.pseudo_id() {
            return ReceiveAction::Ignore;
        }
        self.seen.insert(id, now);
        if self.seen_disapprovals.contains(&id) {
            return ReceiveAction::VerifyNow;
        }
        // a known pseudonym showing up with a different certificate gets no
        // benefit of the doubt
        let same_cert = self
            .neighbors
            .get(&beacon.pseudo_id)
            .is_some_and(|r| r.temp_cert == beacon.temp_cert);
        if !same_cert || self.elected_for(beacon.pseudo_id).unwrap_or(true) {
            return ReceiveAction::VerifyNow;
        }
        let deadline = now + self.params.delta_t;
        self.pending.insert(
            id,
            PendingMessage {
                beacon: beacon.clone(),
                message_id: id,
                received_at: now,
                deadline,
                held: false,
            },
        );
        ReceiveAction::Wait(deadline)
    }

    fn beacon_valid(&self, beacon: &Beacon, now: Timestamp) -> bool {
        self.trust.check(&beacon.temp_cert, now) == CertStatus::Valid && beacon.self_consistent()
    }

    fn heard_from(&mut self, cert: &TempCert, now: Timestamp) {
        let rec = self.neighbors.entry(cert.pseudo_id).or_insert_with(|| NeighborRecord {
            temp_cert: *cert,
            last_heard: now,
            advertised_neighbors: BTreeSet::new(),
            list_time: None,
        });
        if rec.temp_cert != *cert {
            rec.temp_cert = *cert;
            rec.advertised_neighbors.clear();
            rec.list_time = None;
        }
        rec.last_heard = rec.last_heard.max(now);
    }

    pub fn verify_now(&mut self, beacon: &Beacon, now: Timestamp) -> VerifyOutcome {
        if self.beacon_valid(beacon, now) {
            self.heard_from(&beacon.temp_cert, now);
            return VerifyOutcome::Deliver;
        }
        let id = beacon.message_id();
        self.seen_disapprovals.insert(id);
        let report = self
            .usable_pseudonym(now)
            .ok()
            .and_then(|p| DisapprovalMsg::sign(p.cert.pseudo_id, id, now, p.cert, &p.keys.private).ok());
        VerifyOutcome::Disapprove(report)
    }

    /// Verifies a neighbour list and records the advertised ids. Returns
    /// whether the list was accepted.
    pub fn on_receive_neighbor_list(&mut self, msg: &NeighborListMsg, now: Timestamp) -> bool {
        if Some(msg.pseudo_id) == self.pseudo_id()
            || self.trust.check(&msg.temp_cert, now) != CertStatus::Valid
            || !msg.self_consistent()
        {
            return false;
        }
        self.heard_from(&msg.temp_cert, now);
        let rec = self.neighbors.get_mut(&msg.pseudo_id).expect("just inserted");
        if rec.list_time.is_some_and(|t| t > msg.timestamp) {
            return true;
        }
        rec.advertised_neighbors = msg.neighbor_ids.iter().copied().collect();
        rec.list_time = Some(msg.timestamp);
        true
    }

    /// Stops a parked beacon from being delivered while a disapproval naming
    /// it is checked. Returns whether such a beacon was parked.
    pub fn hold_pending(&mut self, subject: &Digest) -> bool {
        match self.pending.get_mut(subject) {
            Some(p) => {
                p.held = true;
                true
            }
            None => false,
        }
    }

    /// A valid disapproval naming `subject` has already been processed, so
    /// further copies carry no news.
    pub fn already_disapproved(&self, subject: &Digest) -> bool {
        self.seen_disapprovals.contains(subject)
    }

    /// Undoes [`Obu::hold_pending`] when the disapproval could not be checked
    /// at all, e.g. because it was dropped on a full receive buffer.
    pub fn release_hold(&mut self, subject: &Digest) {
        if let Some(p) = self.pending.get_mut(subject) {
            p.held = false;
        }
    }

    pub fn on_receive_disapproval(&mut self, d: &DisapprovalMsg, now: Timestamp) -> DisapprovalActions {
        let valid = self.trust.check(&d.reporter_temp_cert, now) == CertStatus::Valid && d.self_consistent();
        if !valid {
            if let Some(p) = self.pending.get_mut(&d.subject) {
                p.held = false;
            }
            return DisapprovalActions::default();
        }
        if !self.seen_disapprovals.insert(d.subject) {
            return DisapprovalActions::default();
        }
        DisapprovalActions {
            forward: true,
            recheck: self.pending.remove(&d.subject).map(|p| p.beacon),
        }
    }

    /// Local recheck of a beacon pulled out of the wait queue by a
    /// disapproval. Never produces a report of its own.
    pub fn complete_recheck(&mut self, beacon: &Beacon, now: Timestamp) -> RecheckOutcome {
        if self.beacon_valid(beacon, now) {
            self.heard_from(&beacon.temp_cert, now);
            RecheckOutcome::Delivered
        } else {
            RecheckOutcome::Dropped
        }
    }

    pub fn on_timer(&mut self, now: Timestamp) -> TimerOutput {
        let mut out = TimerOutput::default();

        let due: Vec<Digest> = self
            .pending
            .values()
            .filter(|p| p.deadline <= now && !p.held)
            .map(|p| p.message_id)
            .collect();
        for id in due {
            let p = self.pending.remove(&id).expect("collected above");
            if let Some(rec) = self.neighbors.get_mut(&p.beacon.pseudo_id) {
                rec.last_heard = rec.last_heard.max(p.deadline);
            }
            out.delivered.push(p.beacon);
        }

        let timeout = self.params.neighbor_timeout;
        let stale: Vec<u64> = self
            .neighbors
            .iter()
            .filter(|(_, r)| now.saturating_since(r.last_heard) > timeout)
            .map(|(id, _)| *id)
            .collect();
        for id in &stale {
            self.neighbors.remove(id);
        }
        out.evicted = stale;

        let usable = self.has_usable_cert(now);
        if let Some(at) = self.next_beacon_at.filter(|at| *at <= now) {
            out.beacon_due = usable;
            self.next_beacon_at = Some(next_slot(at, now, self.params.beacon_period));
        }
        if let Some(at) = self.next_list_at.filter(|at| *at <= now) {
            out.list_due = usable;
            self.next_list_at = Some(next_slot(at, now, self.params.theta));
        }

        self.seen.retain(|_, t| now.saturating_since(*t) <= SEEN_HORIZON);
        out
    }

    /// Earliest instant at which [`Obu::on_timer`] has something to do.
    pub fn next_wakeup(&self) -> Option<Timestamp> {
        let pending = self.pending.values().filter(|p| !p.held).map(|p| p.deadline);
        let evictions = self
            .neighbors
            .values()
            .map(|r| r.last_heard + self.params.neighbor_timeout + Duration::from_nanos(1));
        pending
            .chain(evictions)
            .chain(self.next_beacon_at)
            .chain(self.next_list_at)
            .min()
    }
}

/// First schedule slot strictly after `now`, stepping from `at`.
fn next_slot(at: Timestamp, now: Timestamp, period: Duration) -> Timestamp {
    let behind = (now - at).as_nanos() / period.as_nanos();
    at + period.times(behind + 1)
}

#[cfg(test)]
pub(crate) mod tests;
