use std::collections::{BTreeMap, BTreeSet, VecDeque};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::authority::Authority;
use crate::crypto::suite;
use crate::rsu::{RejectReason, Rsu, RsuParams};
use crate::wire::{Decode, Encode};

const ZONE: &str = "zone-0";

pub(crate) struct World {
    authority: Authority,
    rsu: Rsu,
    rng: ChaCha20Rng,
    enrolled: usize,
}

impl World {
    pub(crate) fn new(suite_name: &str, lifetime: Duration) -> Self {
        let mut authority = Authority::new(suite(suite_name), 11);
        let key = authority.provision_rsu(ZONE, 0).unwrap();
        let rsu = Rsu::new(
            ZONE,
            0,
            key,
            authority.public_key(),
            RsuParams {
                delta_max: Duration::from_millis(500),
                cert_lifetime: lifetime,
            },
            5,
        );
        Self {
            authority,
            rsu,
            rng: ChaCha20Rng::seed_from_u64(3),
            enrolled: 0,
        }
    }

    pub(crate) fn bare_obu(&mut self, params: ObuParams) -> Obu {
        self.enrolled += 1;
        let lt = self
            .authority
            .enroll_vehicle(&format!("veh-{}", self.enrolled), Timestamp::ZERO)
            .unwrap();
        let pp = self.authority.public_params();
        let trust = TrustStore::for_zones(&pp, [(ZONE, 0)]).unwrap();
        Obu::new(lt, pp, trust, params).unwrap()
    }

    pub(crate) fn obu(&mut self, params: ObuParams) -> Obu {
        let mut o = self.bare_obu(params);
        let req = o.build_cert_request(ZONE, 0, &mut self.rng).unwrap();
        let s = self.rsu.handle_cert_request(&req, Timestamp::ZERO).unwrap();
        o.install_temp_cert(s.cert, Timestamp::ZERO).unwrap();
        o
    }
}

fn world() -> World {
    World::new("toy", Duration::from_secs(600))
}

pub(crate) fn kin() -> Kinematics {
    Kinematics::from_si(10.0, 20.0, 12.5, std::f64::consts::FRAC_PI_2, 0.0)
}

fn at_ms(ms: u64) -> Timestamp {
    Timestamp::ZERO + Duration::from_millis(ms)
}

/// Makes `a` and `b` verified neighbours of each other, lists included.
fn introduce(nodes: &mut [Obu], a: usize, b: usize, now: Timestamp) {
    for (x, y) in [(a, b), (b, a)] {
        let beacon = nodes[x].make_beacon(kin(), now).unwrap();
        assert_eq!(nodes[y].on_receive_beacon(&beacon, now), ReceiveAction::VerifyNow);
        assert_eq!(nodes[y].verify_now(&beacon, now), VerifyOutcome::Deliver);
    }
}

fn exchange_lists(nodes: &mut [Obu], adj: &[Vec<usize>], now: Timestamp) {
    let lists: Vec<NeighborListMsg> = nodes.iter().map(|n| n.make_neighbor_list(now).unwrap()).collect();
    for (s, list) in lists.iter().enumerate() {
        for &r in &adj[s] {
            assert!(nodes[r].on_receive_neighbor_list(list, now));
        }
    }
}

#[test]
fn cert_request_round_trip() {
    let mut w = world();
    let mut o = w.bare_obu(ObuParams::default());
    assert!(!o.has_usable_cert(Timestamp::ZERO));
    let req = o.build_cert_request(ZONE, 0, &mut w.rng).unwrap();
    assert!(o.request_outstanding());
    let s = w.rsu.handle_cert_request(&req, Timestamp::ZERO).unwrap();
    assert_eq!(s.cert.pseudo_public_key, req.pseudo_public_key);
    o.install_temp_cert(s.cert, s.release_at).unwrap();
    assert_eq!(o.pseudo_id(), Some(s.cert.pseudo_id));
    assert!(!o.request_outstanding());
    assert_eq!(o.install_temp_cert(s.cert, s.release_at), Err(ObuError::NoPendingRequest));
}

#[test]
fn consecutive_requests_use_fresh_keys() {
    let mut w = world();
    let mut o = w.bare_obu(ObuParams::default());
    let r1 = o.build_cert_request(ZONE, 0, &mut w.rng).unwrap();
    let r2 = o.build_cert_request(ZONE, 0, &mut w.rng).unwrap();
    assert_ne!(r1.pseudo_public_key, r2.pseudo_public_key);
    // only the newest request can be completed
    let s1 = w.rsu.handle_cert_request(&r1, Timestamp::ZERO).unwrap();
    assert_eq!(o.install_temp_cert(s1.cert, Timestamp::ZERO), Err(ObuError::CertKeyMismatch));
}

#[test]
fn request_for_other_zone_fails_to_decrypt() {
    let mut w = world();
    let mut o = w.bare_obu(ObuParams::default());
    let req = o.build_cert_request("zone-9", 0, &mut w.rng).unwrap();
    assert_eq!(
        w.rsu.handle_cert_request(&req, Timestamp::ZERO).unwrap_err(),
        RejectReason::DecryptionFailed
    );
}

#[test]
fn cert_from_untrusted_issuer_rejected() {
    let mut w = world();
    let mut o = w.bare_obu(ObuParams::default());
    let req = o.build_cert_request(ZONE, 0, &mut w.rng).unwrap();
    let mut s = w.rsu.handle_cert_request(&req, Timestamp::ZERO).unwrap();
    s.cert.pseudo_id ^= 1;
    assert_eq!(
        o.install_temp_cert(s.cert, Timestamp::ZERO),
        Err(ObuError::CertRejected(CertStatus::BadSignature))
    );
}

#[test]
fn beacon_verifies_at_receiver() {
    let mut w = world();
    let a = w.obu(ObuParams::default());
    let mut b = w.obu(ObuParams::default());
    let beacon = a.make_beacon(kin(), at_ms(10)).unwrap();
    assert!(beacon.self_consistent());
    assert_eq!(beacon.encode().len(), BEACON_WIRE_LEN);
    assert_eq!(b.on_receive_beacon(&beacon, at_ms(11)), ReceiveAction::VerifyNow);
    assert_eq!(b.verify_now(&beacon, at_ms(11)), VerifyOutcome::Deliver);
    assert!(b.neighbor_table().contains_key(&a.pseudo_id().unwrap()));
}

#[test]
fn expired_cert_must_renew() {
    let mut w = World::new("toy", Duration::from_secs(2));
    let a = w.obu(ObuParams::default());
    assert!(a.make_beacon(kin(), at_ms(1999)).is_ok());
    assert_eq!(a.make_beacon(kin(), at_ms(2000)), Err(ObuError::MustRenew));
    assert_eq!(a.make_neighbor_list(at_ms(2000)), Err(ObuError::MustRenew));
}

#[test]
fn message_id_is_stable() {
    let mut w = world();
    let a = w.obu(ObuParams::default());
    let b1 = a.make_beacon(kin(), at_ms(5)).unwrap();
    let b2 = Beacon::decode(&b1.encode()).unwrap();
    assert_eq!(b1.message_id(), b2.message_id());
    assert_eq!(b1.message_id(), crypto::hash(&b1.encode()));
    let later = a.make_beacon(kin(), at_ms(6)).unwrap();
    assert_ne!(b1.message_id(), later.message_id());
}

#[test]
fn known_non_verifier_waits_delta_t() {
    let mut w = world();
    let params = ObuParams {
        p: 1,
        ..ObuParams::default()
    };
    let mut nodes: Vec<Obu> = (0..3).map(|_| w.obu(params)).collect();
    let adj = vec![vec![1, 2], vec![0, 2], vec![0, 1]];
    introduce(&mut nodes, 0, 1, at_ms(0));
    introduce(&mut nodes, 0, 2, at_ms(0));
    introduce(&mut nodes, 1, 2, at_ms(0));
    exchange_lists(&mut nodes, &adj, at_ms(1));

    let beacon = nodes[0].make_beacon(kin(), at_ms(100)).unwrap();
    let now = at_ms(100);
    let actions: Vec<ReceiveAction> = [1, 2].iter().map(|&r| nodes[r].on_receive_beacon(&beacon, now)).collect();
    // p = 1 with full knowledge: exactly one of the two verifies
    assert_eq!(actions.iter().filter(|a| **a == ReceiveAction::VerifyNow).count(), 1);
    let waiting = actions.iter().position(|a| *a != ReceiveAction::VerifyNow).unwrap() + 1;
    assert_eq!(
        actions[waiting - 1],
        ReceiveAction::Wait(now + Duration::from_millis(30))
    );
    assert_eq!(nodes[waiting].on_receive_beacon(&beacon, now), ReceiveAction::Ignore);

    // nothing before the deadline, exactly once after it
    assert!(nodes[waiting].on_timer(at_ms(129)).delivered.is_empty());
    assert_eq!(nodes[waiting].on_timer(at_ms(130)).delivered, vec![beacon.clone()]);
    assert!(nodes[waiting].on_timer(at_ms(200)).delivered.is_empty());
}

#[test]
fn duplicate_and_own_beacons_ignored() {
    let mut w = world();
    let mut a = w.obu(ObuParams::default());
    let mut b = w.obu(ObuParams::default());
    let beacon = a.make_beacon(kin(), at_ms(1)).unwrap();
    assert_eq!(b.on_receive_beacon(&beacon, at_ms(1)), ReceiveAction::VerifyNow);
    assert_eq!(b.on_receive_beacon(&beacon, at_ms(2)), ReceiveAction::Ignore);
    assert_eq!(a.on_receive_beacon(&beacon, at_ms(1)), ReceiveAction::Ignore);
}

#[test]
fn forged_and_expired_beacons_disapproved() {
    let mut w = World::new("toy", Duration::from_secs(2));
    let a = w.obu(ObuParams::default());
    let mut b = w.obu(ObuParams::default());

    let mut forged = a.make_beacon(kin(), at_ms(1)).unwrap();
    forged.kinematics.x_mm += 1;
    match b.verify_now(&forged, at_ms(1)) {
        VerifyOutcome::Disapprove(Some(d)) => {
            assert_eq!(d.subject, forged.message_id());
            assert_eq!(d.reporter_pseudo_id, b.pseudo_id().unwrap());
            assert!(d.self_consistent());
        }
        other => panic!("{other:?}"),
    }
    assert!(b.neighbor_table().is_empty());

    let honest = a.make_beacon(kin(), at_ms(1)).unwrap();
    // the reporter's own cert has expired too, so there is nobody to sign
    assert_eq!(b.verify_now(&honest, at_ms(2500)), VerifyOutcome::Disapprove(None));
}

#[test]
fn expired_beacon_disapproved_with_report() {
    let mut short = World::new("toy", Duration::from_secs(2));
    let a = short.obu(ObuParams::default());
    // same authority seed, so the receiver trusts the same zone key
    let mut long = World::new("toy", Duration::from_secs(600));
    long.rsu = Rsu::new(
        ZONE,
        0,
        long.authority.provision_rsu(ZONE, 0).unwrap(),
        long.authority.public_key(),
        RsuParams::default(),
        99,
    );
    let mut b = long.obu(ObuParams::default());
    let beacon = a.make_beacon(kin(), at_ms(1)).unwrap();
    assert_eq!(b.verify_now(&beacon, at_ms(1)), VerifyOutcome::Deliver);
    let stale = a.make_beacon(kin(), at_ms(1999)).unwrap();
    assert!(matches!(b.verify_now(&stale, at_ms(2000)), VerifyOutcome::Disapprove(Some(_))));
}

/// Three mutual neighbours, p = 1: node 1 or 2 waits on node 0's beacon.
fn waiting_setup() -> (World, Vec<Obu>, usize, usize) {
    let mut w = world();
    let params = ObuParams {
        p: 1,
        ..ObuParams::default()
    };
    let mut nodes: Vec<Obu> = (0..3).map(|_| w.obu(params)).collect();
    let adj = vec![vec![1, 2], vec![0, 2], vec![0, 1]];
    introduce(&mut nodes, 0, 1, at_ms(0));
    introduce(&mut nodes, 0, 2, at_ms(0));
    introduce(&mut nodes, 1, 2, at_ms(0));
    exchange_lists(&mut nodes, &adj, at_ms(1));
    let sender = nodes[0].pseudo_id().unwrap();
    let verifier = if nodes[1].elected_for(sender) == Some(true) { 1 } else { 2 };
    let waiter = 3 - verifier;
    assert_eq!(nodes[waiter].elected_for(sender), Some(false));
    (w, nodes, verifier, waiter)
}

#[test]
fn disapproval_pulls_pending_for_recheck() {
    let (_w, mut nodes, verifier, waiter) = waiting_setup();
    let now = at_ms(100);
    let mut forged = nodes[0].make_beacon(kin(), now).unwrap();
    forged.kinematics.speed_mm_s = 99_000;
    assert_eq!(nodes[waiter].on_receive_beacon(&forged, now), ReceiveAction::Wait(at_ms(130)));
    assert_eq!(nodes[verifier].on_receive_beacon(&forged, now), ReceiveAction::VerifyNow);
    let VerifyOutcome::Disapprove(Some(d)) = nodes[verifier].verify_now(&forged, at_ms(107)) else {
        panic!("forged beacon accepted");
    };

    assert!(nodes[waiter].hold_pending(&d.subject));
    let acts = nodes[waiter].on_receive_disapproval(&d, at_ms(108));
    assert!(acts.forward);
    assert_eq!(acts.recheck.as_ref(), Some(&forged));
    assert_eq!(nodes[waiter].complete_recheck(&forged, at_ms(115)), RecheckOutcome::Dropped);
    assert!(nodes[waiter].on_timer(at_ms(200)).delivered.is_empty());
    assert!(nodes[waiter].pending().is_empty());

    // flood suppression
    assert_eq!(nodes[waiter].on_receive_disapproval(&d, at_ms(109)), DisapprovalActions::default());
    // a later copy of the forged beacon goes straight to local checking
    let again = nodes[waiter].on_receive_beacon(&forged, at_ms(6000));
    assert!(matches!(again, ReceiveAction::VerifyNow | ReceiveAction::Ignore));
}

#[test]
fn bad_disapproval_ignored() {
    let (_w, mut nodes, verifier, waiter) = waiting_setup();
    let now = at_ms(100);
    let honest = nodes[0].make_beacon(kin(), now).unwrap();
    assert!(matches!(nodes[waiter].on_receive_beacon(&honest, now), ReceiveAction::Wait(_)));

    // a liar signs a disapproval, then the signature is mangled in transit
    let liar = &nodes[verifier];
    let cert = *liar.temp_cert().unwrap();
    let mut d = DisapprovalMsg::sign(
        cert.pseudo_id,
        honest.message_id(),
        now,
        cert,
        &liar.pseudo.as_ref().unwrap().keys.private,
    )
    .unwrap();
    d.signature.0[5] ^= 0x40;
    assert!(nodes[waiter].hold_pending(&d.subject));
    assert_eq!(nodes[waiter].on_receive_disapproval(&d, at_ms(101)), DisapprovalActions::default());
    assert_eq!(nodes[waiter].on_timer(at_ms(130)).delivered, vec![honest]);
}

#[test]
fn held_pending_waits_for_disapproval_check() {
    let (_w, mut nodes, _verifier, waiter) = waiting_setup();
    let honest = nodes[0].make_beacon(kin(), at_ms(100)).unwrap();
    nodes[waiter].on_receive_beacon(&honest, at_ms(100));
    nodes[waiter].hold_pending(&honest.message_id());
    assert!(nodes[waiter].on_timer(at_ms(140)).delivered.is_empty());
    assert_eq!(
        nodes[waiter].next_wakeup().map(|t| t > at_ms(140)),
        Some(true),
        "held messages do not drive wakeups"
    );
}

#[test]
fn silent_neighbour_evicted() {
    let mut w = world();
    let mut nodes: Vec<Obu> = (0..2).map(|_| w.obu(ObuParams::default())).collect();
    introduce(&mut nodes, 0, 1, at_ms(0));
    let id = nodes[0].pseudo_id().unwrap();
    assert!(nodes[1].on_timer(at_ms(1000)).evicted.is_empty());
    assert_eq!(nodes[1].on_timer(at_ms(1001)).evicted, vec![id]);
    assert!(nodes[1].neighbor_table().is_empty());
}

#[test]
fn schedules_fire_on_period() {
    let mut w = world();
    let mut o = w.obu(ObuParams::default());
    o.start_beaconing(at_ms(50));
    let out = o.on_timer(at_ms(49));
    assert!(!out.beacon_due && !out.list_due);
    let out = o.on_timer(at_ms(50));
    assert!(out.beacon_due && out.list_due);
    let out = o.on_timer(at_ms(350));
    assert!(out.beacon_due && !out.list_due);
    assert_eq!(o.next_wakeup(), Some(at_ms(650)));
    let out = o.on_timer(at_ms(1050));
    assert!(out.beacon_due && out.list_due);
}

#[test]
fn neighbor_list_carries_sorted_ids() {
    let mut w = world();
    let mut nodes: Vec<Obu> = (0..4).map(|_| w.obu(ObuParams::default())).collect();
    for j in 1..4 {
        introduce(&mut nodes, 0, j, at_ms(0));
    }
    let list = nodes[0].make_neighbor_list(at_ms(1)).unwrap();
    let mut expect: Vec<u64> = nodes[1..].iter().map(|n| n.pseudo_id().unwrap()).collect();
    expect.sort_unstable();
    assert_eq!(list.neighbor_ids, expect);
    assert_eq!(list.encode().len(), neighbor_list_wire_len(3));
    assert!(list.self_consistent());
}

#[test]
fn params_validated() {
    for (bad, field) in [
        (ObuParams { p: 0, ..ObuParams::default() }, "p"),
        (ObuParams { delta_t: Duration::ZERO, ..ObuParams::default() }, "delta_t"),
        (ObuParams { theta: Duration::ZERO, ..ObuParams::default() }, "theta"),
    ] {
        assert_eq!(bad.validate(), Err(ObuError::InvalidParam(field)));
    }
}

#[test]
fn p256_suite_end_to_end() {
    let mut w = World::new("p256", Duration::from_secs(600));
    let a = w.obu(ObuParams::default());
    let mut b = w.obu(ObuParams::default());
    let beacon = a.make_beacon(kin(), at_ms(1)).unwrap();
    assert_eq!(b.verify_now(&beacon, at_ms(1)), VerifyOutcome::Deliver);
    let mut forged = beacon;
    forged.kinematics.accel_mm_s2 = -1;
    assert!(matches!(b.verify_now(&forged, at_ms(1)), VerifyOutcome::Disapprove(Some(_))));
}

/// Clique of `k + 1` receivers around one sender, everyone knowing
/// everyone: count how many receivers pick VerifyNow.
fn clique_verifiers(strategy: &str, k: usize, p: usize) -> usize {
    let mut w = world();
    let params = ObuParams {
        p,
        election: election(strategy),
        ..ObuParams::default()
    };
    let n = k + 2;
    let mut nodes: Vec<Obu> = (0..n).map(|_| w.obu(params)).collect();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
    for i in 0..n {
        for j in i + 1..n {
            introduce(&mut nodes, i, j, at_ms(0));
        }
    }
    exchange_lists(&mut nodes, &adj, at_ms(1));
    let beacon = nodes[0].make_beacon(kin(), at_ms(50)).unwrap();
    (1..n)
        .filter(|&r| nodes[r].on_receive_beacon(&beacon, at_ms(50)) == ReceiveAction::VerifyNow)
        .count()
}

#[test]
fn clique_verifier_counts() {
    for k in 0..8 {
        for p in 1..=4 {
            assert_eq!(clique_verifiers("p-nearest", k, p), p.min(k + 1), "p-nearest k={k} p={p}");
            let literal = if k >= p { k - p + 1 } else { k + 1 };
            assert_eq!(clique_verifiers("paper-rule", k, p), literal, "paper-rule k={k} p={p}");
        }
    }
}

/// Outcome of one beacon at one receiver in [`run_round`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Delivered(Timestamp),
    Dropped,
}

/// Builds a random topology, lets everyone learn their neighbours and
/// exchange lists, then has `sender` emit one beacon (forged or not) and
/// floods any disapprovals over an ideal zero-delay channel.
fn run_round(
    n: usize,
    edge_prob: f64,
    seed: u64,
    strategy: &str,
    forged: bool,
) -> (Vec<Vec<usize>>, BTreeMap<usize, Fate>, usize) {
    let mut topo = ChaCha20Rng::seed_from_u64(seed);
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if topo.gen_bool(edge_prob) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut w = world();
    let params = ObuParams {
        p: topo.gen_range(1..=5),
        election: election(strategy),
        ..ObuParams::default()
    };
    let mut nodes: Vec<Obu> = (0..n).map(|_| w.obu(params)).collect();
    for (i, ns) in adj.iter().enumerate() {
        for &j in ns {
            if i < j {
                introduce(&mut nodes, i, j, at_ms(0));
            }
        }
    }
    exchange_lists(&mut nodes, &adj, at_ms(1));

    let sender = 0;
    let now = at_ms(100);
    let mut beacon = nodes[sender].make_beacon(kin(), now).unwrap();
    if forged {
        beacon.kinematics.y_mm -= 7;
    }
    let mut fates = BTreeMap::new();
    let mut verifiers = 0;
    let mut flood: VecDeque<(usize, DisapprovalMsg)> = VecDeque::new();
    for &r in &adj[sender] {
        match nodes[r].on_receive_beacon(&beacon, now) {
            ReceiveAction::VerifyNow => {
                verifiers += 1;
                match nodes[r].verify_now(&beacon, now) {
                    VerifyOutcome::Deliver => {
                        fates.insert(r, Fate::Delivered(now));
                    }
                    VerifyOutcome::Disapprove(d) => {
                        fates.insert(r, Fate::Dropped);
                        flood.push_back((r, d.expect("reporter has a cert")));
                    }
                }
            }
            ReceiveAction::Wait(deadline) => assert_eq!(deadline, now + params.delta_t),
            ReceiveAction::Ignore => panic!("fresh beacon ignored"),
        }
    }
    while let Some((from, d)) = flood.pop_front() {
        for &r in &adj[from] {
            nodes[r].hold_pending(&d.subject);
            let acts = nodes[r].on_receive_disapproval(&d, now);
            if let Some(b) = acts.recheck {
                let outcome = nodes[r].complete_recheck(&b, now);
                assert_eq!(outcome, RecheckOutcome::Dropped);
                fates.insert(r, Fate::Dropped);
            }
            if acts.forward {
                flood.push_back((r, d.clone()));
            }
        }
    }
    let deadline = now + params.delta_t;
    for &r in &adj[sender] {
        for b in nodes[r].on_timer(deadline).delivered {
            assert_eq!(b, beacon);
            assert!(fates.insert(r, Fate::Delivered(deadline)).is_none(), "delivered twice");
        }
    }
    (adj, fates, verifiers)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forged_beacons_never_delivered(
        n in 2usize..=30,
        edge_prob in 0.1f64..0.9,
        seed in any::<u64>(),
        rule_b in any::<bool>(),
    ) {
        let strategy = if rule_b { "paper-rule" } else { "p-nearest" };
        let (adj, fates, verifiers) = run_round(n, edge_prob, seed, strategy, true);
        if verifiers > 0 {
            for &r in &adj[0] {
                prop_assert_eq!(fates.get(&r), Some(&Fate::Dropped), "receiver {}", r);
            }
        }
        // verify-everything ground truth rejects it, so no verifier delivers
        prop_assert!(fates.values().all(|f| *f == Fate::Dropped));
    }

    #[test]
    fn honest_beacons_delivered_within_delta_t(
        n in 2usize..=30,
        edge_prob in 0.1f64..0.9,
        seed in any::<u64>(),
        rule_b in any::<bool>(),
    ) {
        let strategy = if rule_b { "paper-rule" } else { "p-nearest" };
        let (adj, fates, _) = run_round(n, edge_prob, seed, strategy, false);
        for &r in &adj[0] {
            match fates.get(&r) {
                Some(Fate::Delivered(t)) => prop_assert!(*t <= at_ms(130)),
                other => prop_assert!(false, "receiver {} got {:?}", r, other),
            }
        }
    }

    #[test]
    fn frames_round_trip(
        seed in any::<u64>(),
        ids in proptest::collection::btree_set(any::<u64>(), 0..20),
        x in any::<i64>(),
        heading in any::<i64>(),
        t in any::<u64>(),
    ) {
        let mut w = World::new("toy", Duration::from_secs(600));
        w.rng = ChaCha20Rng::seed_from_u64(seed);
        let a = w.obu(ObuParams::default());
        let cert = *a.temp_cert().unwrap();
        let key = &a.pseudo.as_ref().unwrap().keys.private;
        let ts = Timestamp::from_nanos(t);
        let k = Kinematics { x_mm: x, heading_mrad: heading, ..kin() };
        let ids: BTreeSet<u64> = ids;
        let frames = [
            Frame::Beacon(Beacon::sign(cert.pseudo_id, ts, k, cert, key).unwrap()),
            Frame::NeighborList(NeighborListMsg::sign(cert.pseudo_id, ts, &ids, cert, key).unwrap()),
            Frame::Disapproval(DisapprovalMsg::sign(cert.pseudo_id, crypto::hash(&[1]), ts, cert, key).unwrap()),
            Frame::CertResponse(cert),
        ];
        for f in frames {
            let bytes = f.encode();
            prop_assert_eq!(Frame::decode(&bytes).unwrap(), f);
            let mut longer = bytes.clone();
            longer.push(0);
            prop_assert!(Frame::decode(&longer).is_err());
            prop_assert!(Frame::decode(&bytes[..bytes.len() - 1]).is_err());
        }
    }
}

#[test]
fn cert_request_frame_round_trip() {
    let mut w = world();
    let mut o = w.bare_obu(ObuParams::default());
    let req = o.build_cert_request(ZONE, 0, &mut w.rng).unwrap();
    let f = Frame::CertRequest(req);
    assert_eq!(Frame::decode(&f.encode()).unwrap(), f);
    assert!(Frame::decode(&[9, 0, 0]).is_err());
}
