//! Verify-everything comparison node.
//!
//! Certificates, beacons and expiry handling are borrowed from [`Obu`]; only
//! the reception policy differs. Every received beacon becomes one
//! verification job and is delivered iff that job succeeds. No neighbour
//! lists, no wait window, no disapprovals.

use std::collections::HashMap;

use crate::crypto::Digest;
use crate::obu::{Beacon, Obu, VerifyOutcome};
use crate::time::{Duration, Timestamp};

const SEEN_HORIZON: Duration = Duration::from_secs(5);

/// A signature check the caller must schedule on the node's processor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyJob {
    pub beacon: Beacon,
    pub message_id: Digest,
}

pub struct BaselineObu {
    inner: Obu,
    seen: HashMap<Digest, Timestamp>,
}

impl BaselineObu {
    pub fn new(inner: Obu) -> Self {
        Self {
            inner,
            seen: HashMap::new(),
        }
    }

    /// Certificate handling and beacon signing.
    pub fn obu(&self) -> &Obu {
        &self.inner
    }

    pub fn obu_mut(&mut self) -> &mut Obu {
        &mut self.inner
    }

    /// One job per distinct foreign beacon.
    pub fn baseline_on_receive(&mut self, beacon: &Beacon, now: Timestamp) -> Option<VerifyJob> {
        if Some(beacon.pseudo_id) == self.inner.pseudo_id() {
            return None;
        }
        let message_id = beacon.message_id();
        if self.seen.insert(message_id, now).is_some() {
            return None;
        }
        Some(VerifyJob {
            beacon: beacon.clone(),
            message_id,
        })
    }

    /// Runs the check once the processor gets to the job. Returns whether
    /// the beacon is delivered.
    pub fn complete_verify(&mut self, job: &VerifyJob, now: Timestamp) -> bool {
        matches!(self.inner.verify_now(&job.beacon, now), VerifyOutcome::Deliver)
    }

    pub fn prune(&mut self, now: Timestamp) {
        self.seen.retain(|_, t| now.saturating_since(*t) <= SEEN_HORIZON);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::authority::Authority;
    use crate::crypto::suite;
    use crate::obu::{Kinematics, ObuParams, TrustStore};
    use crate::rsu::{Rsu, RsuParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn pair() -> (BaselineObu, BaselineObu) {
        let mut authority = Authority::new(suite("toy"), 2);
        let key = authority.provision_rsu("z", 0).unwrap();
        let mut rsu = Rsu::new("z", 0, key, authority.public_key(), RsuParams::default(), 1);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut make = |name: &str| {
            let lt = authority.enroll_vehicle(name, Timestamp::ZERO).unwrap();
            let pp = authority.public_params();
            let trust = TrustStore::for_zones(&pp, [("z", 0)]).unwrap();
            let mut o = Obu::new(lt, pp, trust, ObuParams::default()).unwrap();
            let req = o.build_cert_request("z", 0, &mut rng).unwrap();
            let s = rsu.handle_cert_request(&req, Timestamp::ZERO).unwrap();
            o.install_temp_cert(s.cert, Timestamp::ZERO).unwrap();
            BaselineObu::new(o)
        };
        (make("a"), make("b"))
    }

    #[test]
    fn every_beacon_is_checked_once() {
        let (a, mut b) = pair();
        let now = Timestamp::from_secs(1);
        let beacon = a.obu().make_beacon(Kinematics::default(), now).unwrap();
        let job = b.baseline_on_receive(&beacon, now).unwrap();
        assert!(b.baseline_on_receive(&beacon, now).is_none());
        assert!(b.complete_verify(&job, now));
        // even a known sender gets checked again
        let next = a.obu().make_beacon(Kinematics::default(), now + Duration::from_millis(300)).unwrap();
        assert!(b.baseline_on_receive(&next, now).is_some());
    }

    #[test]
    fn forged_beacon_never_delivered() {
        let (a, mut b) = pair();
        let now = Timestamp::from_secs(1);
        let mut beacon = a.obu().make_beacon(Kinematics::default(), now).unwrap();
        beacon.kinematics.speed_mm_s = 1;
        let job = b.baseline_on_receive(&beacon, now).unwrap();
        assert!(!b.complete_verify(&job, now));
    }

    #[test]
    fn own_beacon_skipped() {
        let (mut a, _) = pair();
        let beacon = a.obu().make_beacon(Kinematics::default(), Timestamp::ZERO).unwrap();
        assert!(a.baseline_on_receive(&beacon, Timestamp::ZERO).is_none());
    }
}
