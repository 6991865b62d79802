//! Long-term and temporary certificates, revocation lists and RSU history
//! rows, with their canonical encodings.
//!
//! All encodings are fixed field order, big-endian integers. Certificate
//! timestamps are whole seconds.

use std::collections::BTreeSet;

use crate::crypto::{self, PublicKey, Signature, PUBLIC_KEY_LEN, SIGNATURE_LEN};
use crate::time::Timestamp;
use crate::wire::{Decode, DecodeError, Encode, Reader};

/// Encoded size of either certificate kind: key, two 8-byte integers and a
/// signature.
pub const CERT_WIRE_LEN: usize = PUBLIC_KEY_LEN + 8 + 8 + SIGNATURE_LEN;

/// Vehicle certificate issued in person by the trusted authority.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LongTermCert {
    pub vehicle_public_key: PublicKey,
    pub serial: u64,
    pub issued_at: u64,
    pub authority_signature: Signature,
}

/// Pseudonymous certificate issued by a roadside unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TempCert {
    pub pseudo_public_key: PublicKey,
    /// Whole seconds; the cert is unusable from this instant on.
    pub expiration: u64,
    pub pseudo_id: u64,
    pub rsu_signature: Signature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertStatus {
    Valid,
    Expired,
    BadSignature,
}

/// Versioned set of revoked long-term serials.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RevocationList {
    pub version: u64,
    pub revoked_serials: BTreeSet<u64>,
}

/// One row of an RSU's issuance history, linking a pseudonym back to the
/// long-term certificate that requested it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistoryEntry {
    pub pseudo_id: u64,
    pub pseudo_public_key: PublicKey,
    pub long_term_cert: LongTermCert,
    pub issued_at: u64,
}

impl LongTermCert {
    pub fn signed_bytes(vehicle_public_key: &PublicKey, serial: u64, issued_at: u64) -> Vec<u8> {
        let mut out = Vec::with_capacity(PUBLIC_KEY_LEN + 16);
        out.extend_from_slice(&vehicle_public_key.0);
        out.extend_from_slice(&serial.to_be_bytes());
        out.extend_from_slice(&issued_at.to_be_bytes());
        out
    }

    pub fn verify(&self, authority_public: &PublicKey) -> bool {
        crypto::verify(
            authority_public,
            &Self::signed_bytes(&self.vehicle_public_key, self.serial, self.issued_at),
            &self.authority_signature,
        )
    }
}

impl TempCert {
    pub fn signed_bytes(pseudo_public_key: &PublicKey, expiration: u64, pseudo_id: u64) -> Vec<u8> {
        let mut out = Vec::with_capacity(PUBLIC_KEY_LEN + 16);
        out.extend_from_slice(&pseudo_public_key.0);
        out.extend_from_slice(&expiration.to_be_bytes());
        out.extend_from_slice(&pseudo_id.to_be_bytes());
        out
    }

    pub fn signature_valid(&self, issuer_public: &PublicKey) -> bool {
        crypto::verify(
            issuer_public,
            &Self::signed_bytes(&self.pseudo_public_key, self.expiration, self.pseudo_id),
            &self.rsu_signature,
        )
    }

    pub fn expires_at(&self) -> Timestamp {
        Timestamp::from_secs(self.expiration)
    }

    pub fn is_expired(&self, now: Timestamp) -> bool {
        now >= self.expires_at()
    }
}

pub fn check_temp_cert(cert: &TempCert, issuer_public: &PublicKey, now: Timestamp) -> CertStatus {
    if !cert.signature_valid(issuer_public) {
        CertStatus::BadSignature
    } else if cert.is_expired(now) {
        CertStatus::Expired
    } else {
        CertStatus::Valid
    }
}

impl RevocationList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, serial: u64) -> bool {
        self.revoked_serials.contains(&serial)
    }

    /// Returns the next version with `serial` included.
    pub fn add(&self, serial: u64) -> Self {
        let mut next = self.clone();
        next.version += 1;
        next.revoked_serials.insert(serial);
        next
    }

    /// Union at the larger version, without bumping it.
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            version: self.version.max(other.version),
            revoked_serials: self.revoked_serials.union(&other.revoked_serials).copied().collect(),
        }
    }
}

pub fn rl_contains(rl: &RevocationList, serial: u64) -> bool {
    rl.contains(serial)
}

pub fn rl_add(rl: &RevocationList, serial: u64) -> RevocationList {
    rl.add(serial)
}

pub fn rl_merge(a: &RevocationList, b: &RevocationList) -> RevocationList {
    a.merge(b)
}

fn read_key(r: &mut Reader<'_>) -> Result<PublicKey, DecodeError> {
    Ok(PublicKey(r.array()?))
}

fn read_sig(r: &mut Reader<'_>) -> Result<Signature, DecodeError> {
    Ok(Signature(r.array()?))
}

impl Encode for LongTermCert {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&Self::signed_bytes(&self.vehicle_public_key, self.serial, self.issued_at));
        out.extend_from_slice(&self.authority_signature.0);
    }
}

impl Decode for LongTermCert {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            vehicle_public_key: read_key(r)?,
            serial: r.u64()?,
            issued_at: r.u64()?,
            authority_signature: read_sig(r)?,
        })
    }
}

impl Encode for TempCert {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&Self::signed_bytes(&self.pseudo_public_key, self.expiration, self.pseudo_id));
        out.extend_from_slice(&self.rsu_signature.0);
    }
}

impl Decode for TempCert {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            pseudo_public_key: read_key(r)?,
            expiration: r.u64()?,
            pseudo_id: r.u64()?,
            rsu_signature: read_sig(r)?,
        })
    }
}

impl Encode for RevocationList {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.version.to_be_bytes());
        out.extend_from_slice(&(self.revoked_serials.len() as u32).to_be_bytes());
        for s in &self.revoked_serials {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
}

impl Decode for RevocationList {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let version = r.u64()?;
        let n = r.u32()? as usize;
        let mut revoked_serials = BTreeSet::new();
        let mut prev = None;
        for _ in 0..n {
            let s = r.u64()?;
            // canonical form: strictly ascending
            if prev.is_some_and(|p| p >= s) {
                return Err(DecodeError::Malformed("revoked serials not strictly ascending"));
            }
            prev = Some(s);
            revoked_serials.insert(s);
        }
        Ok(Self { version, revoked_serials })
    }
}

impl Encode for HistoryEntry {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.pseudo_id.to_be_bytes());
        out.extend_from_slice(&self.pseudo_public_key.0);
        self.long_term_cert.encode_into(out);
        out.extend_from_slice(&self.issued_at.to_be_bytes());
    }
}

impl Decode for HistoryEntry {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            pseudo_id: r.u64()?,
            pseudo_public_key: read_key(r)?,
            long_term_cert: LongTermCert::decode_from(r)?,
            issued_at: r.u64()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{suite, KeyPair};
    use proptest::prelude::*;

    fn issue(rsu: &KeyPair, holder: &KeyPair, expiration: u64, pseudo_id: u64) -> TempCert {
        let sig = crypto::sign(
            &rsu.private,
            &TempCert::signed_bytes(&holder.public, expiration, pseudo_id),
        )
        .unwrap();
        TempCert {
            pseudo_public_key: holder.public,
            expiration,
            pseudo_id,
            rsu_signature: sig,
        }
    }

    #[test]
    fn temp_cert_wire_length() {
        assert_eq!(CERT_WIRE_LEN, 33 + 8 + 8 + 64);
        let s = suite("toy");
        let c = issue(&s.keygen(&[1; 32]), &s.keygen(&[2; 32]), 600, 42);
        assert_eq!(c.encode().len(), 113);
    }

    #[test]
    fn decode_rejects_truncation_and_trailing_bytes() {
        let s = suite("toy");
        let c = issue(&s.keygen(&[1; 32]), &s.keygen(&[2; 32]), 600, 42);
        let bytes = c.encode();
        assert_eq!(TempCert::decode(&bytes).unwrap(), c);
        assert_eq!(
            TempCert::decode(&bytes[..bytes.len() - 1]),
            Err(DecodeError::Truncated { needed: 1 })
        );
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(TempCert::decode(&long), Err(DecodeError::Trailing(1)));
    }

    #[test]
    fn check_temp_cert_statuses() {
        let s = suite("p256");
        let rsu = s.keygen(&[1; 32]);
        let other_rsu = s.keygen(&[9; 32]);
        let holder = s.keygen(&[2; 32]);
        let issued = Timestamp::from_secs(100);
        let c = issue(&rsu, &holder, 700, 7);
        assert_eq!(check_temp_cert(&c, &rsu.public, issued), CertStatus::Valid);
        assert_eq!(
            check_temp_cert(&c, &rsu.public, Timestamp::from_nanos(699_999_999_999)),
            CertStatus::Valid
        );
        assert_eq!(check_temp_cert(&c, &rsu.public, Timestamp::from_secs(700)), CertStatus::Expired);
        let mut bad = c;
        bad.rsu_signature.0[10] ^= 0x01;
        assert_eq!(check_temp_cert(&bad, &rsu.public, issued), CertStatus::BadSignature);
        assert_eq!(check_temp_cert(&c, &other_rsu.public, issued), CertStatus::BadSignature);
    }

    #[test]
    fn revocation_list_ops() {
        let empty = RevocationList::new();
        assert!(!rl_contains(&empty, 5));
        let one = rl_add(&empty, 5);
        assert!(rl_contains(&one, 5));
        assert_eq!(one.version, 1);
        let again = rl_add(&one, 5);
        assert_eq!(again.version, 2);
        assert_eq!(again.revoked_serials, one.revoked_serials);

        let a = RevocationList { version: 3, revoked_serials: [1].into() };
        let b = RevocationList { version: 7, revoked_serials: [2].into() };
        assert_eq!(rl_merge(&a, &b), RevocationList { version: 7, revoked_serials: [1, 2].into() });
    }

    #[test]
    fn revocation_list_decode_is_canonical() {
        let rl = RevocationList { version: 2, revoked_serials: [3, 9].into() };
        let bytes = rl.encode();
        assert_eq!(RevocationList::decode(&bytes).unwrap(), rl);
        let mut swapped = bytes.clone();
        swapped[12..20].copy_from_slice(&9u64.to_be_bytes());
        swapped[20..28].copy_from_slice(&3u64.to_be_bytes());
        assert!(RevocationList::decode(&swapped).is_err());
    }

    fn arb_rl() -> impl Strategy<Value = RevocationList> {
        (0u64..20, proptest::collection::btree_set(0u64..30, 0..8))
            .prop_map(|(version, revoked_serials)| RevocationList { version, revoked_serials })
    }

    fn arb_key() -> impl Strategy<Value = PublicKey> {
        any::<[u8; 32]>().prop_map(|s| suite("toy").keygen(&s).public)
    }

    fn arb_sig() -> impl Strategy<Value = Signature> {
        (any::<[u8; 32]>(), any::<[u8; 32]>()).prop_map(|(a, b)| {
            let mut s = [0u8; 64];
            s[..32].copy_from_slice(&a);
            s[32..].copy_from_slice(&b);
            Signature(s)
        })
    }

    proptest! {
        #[test]
        fn rl_merge_is_a_semilattice(a in arb_rl(), b in arb_rl(), c in arb_rl()) {
            prop_assert_eq!(rl_merge(&a, &b), rl_merge(&b, &a));
            prop_assert_eq!(rl_merge(&rl_merge(&a, &b), &c), rl_merge(&a, &rl_merge(&b, &c)));
            prop_assert_eq!(rl_merge(&a, &a), a.clone());
            prop_assert_eq!(RevocationList::decode(&a.encode()).unwrap(), a);
        }

        #[test]
        fn cert_encodings_round_trip(
            key in arb_key(), ltk in arb_key(), sig in arb_sig(), sig2 in arb_sig(),
            expiration: u64, pseudo_id: u64, serial: u64, issued_at: u64,
        ) {
            let t = TempCert { pseudo_public_key: key, expiration, pseudo_id, rsu_signature: sig };
            prop_assert_eq!(TempCert::decode(&t.encode()).unwrap(), t);
            let l = LongTermCert { vehicle_public_key: ltk, serial, issued_at, authority_signature: sig2 };
            prop_assert_eq!(LongTermCert::decode(&l.encode()).unwrap(), l);
            let h = HistoryEntry { pseudo_id, pseudo_public_key: key, long_term_cert: l, issued_at };
            prop_assert_eq!(HistoryEntry::decode(&h.encode()).unwrap(), h);
        }

        #[test]
        fn foreign_rsu_never_validates(seed_a in any::<[u8; 32]>(), seed_b in any::<[u8; 32]>(), now in 0u64..2000) {
            prop_assume!(seed_a != seed_b);
            let s = suite("toy");
            let rsu_a = s.keygen(&seed_a);
            let rsu_b = s.keygen(&seed_b);
            let holder = s.keygen(&[3; 32]);
            let c = issue(&rsu_a, &holder, 1000, 1);
            prop_assert_ne!(check_temp_cert(&c, &rsu_b.public, Timestamp::from_secs(now)), CertStatus::Valid);
        }
    }
}
