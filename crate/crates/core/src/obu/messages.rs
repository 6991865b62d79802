//! Vehicle-to-vehicle messages and the tagged frame format.
//!
//! Every frame starts with a one-byte type tag. Signatures cover the whole
//! encoding up to (and excluding) the signature itself, tag included.
//! Kinematics are fixed-point milli-units (mm, mm/s, mrad, mm/s²), so a
//! beacon is always [`BEACON_WIRE_LEN`] bytes.

use std::collections::BTreeSet;

use crate::certs::{TempCert, CERT_WIRE_LEN};
use crate::crypto::{self, Digest, PrivateKey, Signature, DIGEST_LEN, SIGNATURE_LEN};
use crate::rsu::CertRequest;
use crate::time::Timestamp;
use crate::wire::{Decode, DecodeError, Encode, Reader};

pub const TAG_BEACON: u8 = 1;
pub const TAG_NEIGHBOR_LIST: u8 = 2;
pub const TAG_DISAPPROVAL: u8 = 3;
pub const TAG_CERT_REQUEST: u8 = 4;
pub const TAG_CERT_RESPONSE: u8 = 5;

pub const KINEMATICS_WIRE_LEN: usize = 5 * 8;
pub const BEACON_WIRE_LEN: usize = 1 + 8 + 8 + KINEMATICS_WIRE_LEN + CERT_WIRE_LEN + SIGNATURE_LEN;
pub const DISAPPROVAL_WIRE_LEN: usize = 1 + 8 + DIGEST_LEN + 8 + CERT_WIRE_LEN + SIGNATURE_LEN;

/// Encoded size of a neighbour list carrying `n` ids.
pub const fn neighbor_list_wire_len(n: usize) -> usize {
    1 + 8 + 8 + 2 + 8 * n + CERT_WIRE_LEN + SIGNATURE_LEN
}

/// Position, speed, heading and acceleration in milli-units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Kinematics {
    pub x_mm: i64,
    pub y_mm: i64,
    pub speed_mm_s: i64,
    pub heading_mrad: i64,
    pub accel_mm_s2: i64,
}

impl Kinematics {
    pub fn from_si(x_m: f64, y_m: f64, speed_m_s: f64, heading_rad: f64, accel_m_s2: f64) -> Self {
        let milli = |v: f64| (v * 1000.0).round() as i64;
        Self {
            x_mm: milli(x_m),
            y_mm: milli(y_m),
            speed_mm_s: milli(speed_m_s),
            heading_mrad: milli(heading_rad),
            accel_mm_s2: milli(accel_m_s2),
        }
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        for v in [self.x_mm, self.y_mm, self.speed_mm_s, self.heading_mrad, self.accel_mm_s2] {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            x_mm: r.i64()?,
            y_mm: r.i64()?,
            speed_mm_s: r.i64()?,
            heading_mrad: r.i64()?,
            accel_mm_s2: r.i64()?,
        })
    }
}

/// Signed periodic safety message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Beacon {
    pub pseudo_id: u64,
    pub timestamp: Timestamp,
    pub kinematics: Kinematics,
    pub temp_cert: TempCert,
    pub signature: Signature,
}

impl Beacon {
    pub fn sign(
        pseudo_id: u64,
        timestamp: Timestamp,
        kinematics: Kinematics,
        temp_cert: TempCert,
        key: &PrivateKey,
    ) -> Result<Self, crypto::CryptoError> {
        let mut b = Self {
            pseudo_id,
            timestamp,
            kinematics,
            temp_cert,
            signature: Signature([0; SIGNATURE_LEN]),
        };
        b.signature = crypto::sign(key, &b.signed_bytes())?;
        Ok(b)
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BEACON_WIRE_LEN);
        out.push(TAG_BEACON);
        out.extend_from_slice(&self.pseudo_id.to_be_bytes());
        out.extend_from_slice(&self.timestamp.as_nanos().to_be_bytes());
        self.kinematics.encode_into(&mut out);
        self.temp_cert.encode_into(&mut out);
        out
    }

    /// Signature matches the embedded certificate key and the claimed id
    /// matches the certificate. Says nothing about who issued the cert.
    pub fn self_consistent(&self) -> bool {
        self.pseudo_id == self.temp_cert.pseudo_id
            && crypto::verify(&self.temp_cert.pseudo_public_key, &self.signed_bytes(), &self.signature)
    }

    /// Stable identifier: hash of the full encoding.
    pub fn message_id(&self) -> Digest {
        crypto::hash(&self.encode())
    }
}

impl Encode for Beacon {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.signed_bytes());
        out.extend_from_slice(&self.signature.0);
    }
}

impl Decode for Beacon {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_BEACON)?;
        Ok(Self {
            pseudo_id: r.u64()?,
            timestamp: Timestamp::from_nanos(r.u64()?),
            kinematics: Kinematics::decode_from(r)?,
            temp_cert: TempCert::decode_from(r)?,
            signature: Signature(r.array()?),
        })
    }
}

/// Signed, periodically gossiped list of the sender's current neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborListMsg {
    pub pseudo_id: u64,
    pub timestamp: Timestamp,
    /// Ascending, duplicate-free.
    pub neighbor_ids: Vec<u64>,
    pub temp_cert: TempCert,
    pub signature: Signature,
}

impl NeighborListMsg {
    pub fn sign(
        pseudo_id: u64,
        timestamp: Timestamp,
        neighbors: &BTreeSet<u64>,
        temp_cert: TempCert,
        key: &PrivateKey,
    ) -> Result<Self, crypto::CryptoError> {
        let mut m = Self {
            pseudo_id,
            timestamp,
            neighbor_ids: neighbors.iter().copied().collect(),
            temp_cert,
            signature: Signature([0; SIGNATURE_LEN]),
        };
        m.signature = crypto::sign(key, &m.signed_bytes())?;
        Ok(m)
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(neighbor_list_wire_len(self.neighbor_ids.len()));
        out.push(TAG_NEIGHBOR_LIST);
        out.extend_from_slice(&self.pseudo_id.to_be_bytes());
        out.extend_from_slice(&self.timestamp.as_nanos().to_be_bytes());
        out.extend_from_slice(&(self.neighbor_ids.len() as u16).to_be_bytes());
        for id in &self.neighbor_ids {
            out.extend_from_slice(&id.to_be_bytes());
        }
        self.temp_cert.encode_into(&mut out);
        out
    }

    pub fn self_consistent(&self) -> bool {
        self.pseudo_id == self.temp_cert.pseudo_id
            && self.neighbor_ids.windows(2).all(|w| w[0] < w[1])
            && crypto::verify(&self.temp_cert.pseudo_public_key, &self.signed_bytes(), &self.signature)
    }
}

impl Encode for NeighborListMsg {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.signed_bytes());
        out.extend_from_slice(&self.signature.0);
    }
}

impl Decode for NeighborListMsg {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_NEIGHBOR_LIST)?;
        let pseudo_id = r.u64()?;
        let timestamp = Timestamp::from_nanos(r.u64()?);
        let n = r.u16()? as usize;
        let mut neighbor_ids = Vec::with_capacity(n);
        for _ in 0..n {
            let id = r.u64()?;
            if neighbor_ids.last().is_some_and(|&last| last >= id) {
                return Err(DecodeError::Malformed("neighbour ids not strictly ascending"));
            }
            neighbor_ids.push(id);
        }
        Ok(Self {
            pseudo_id,
            timestamp,
            neighbor_ids,
            temp_cert: TempCert::decode_from(r)?,
            signature: Signature(r.array()?),
        })
    }
}

/// Signed report that the beacon with id `subject` failed verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisapprovalMsg {
    pub reporter_pseudo_id: u64,
    pub subject: Digest,
    pub timestamp: Timestamp,
    pub reporter_temp_cert: TempCert,
    pub signature: Signature,
}

impl DisapprovalMsg {
    pub fn sign(
        reporter_pseudo_id: u64,
        subject: Digest,
        timestamp: Timestamp,
        reporter_temp_cert: TempCert,
        key: &PrivateKey,
    ) -> Result<Self, crypto::CryptoError> {
        let mut d = Self {
            reporter_pseudo_id,
            subject,
            timestamp,
            reporter_temp_cert,
            signature: Signature([0; SIGNATURE_LEN]),
        };
        d.signature = crypto::sign(key, &d.signed_bytes())?;
        Ok(d)
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(DISAPPROVAL_WIRE_LEN);
        out.push(TAG_DISAPPROVAL);
        out.extend_from_slice(&self.reporter_pseudo_id.to_be_bytes());
        out.extend_from_slice(&self.subject.0);
        out.extend_from_slice(&self.timestamp.as_nanos().to_be_bytes());
        self.reporter_temp_cert.encode_into(&mut out);
        out
    }

    pub fn self_consistent(&self) -> bool {
        self.reporter_pseudo_id == self.reporter_temp_cert.pseudo_id
            && crypto::verify(
                &self.reporter_temp_cert.pseudo_public_key,
                &self.signed_bytes(),
                &self.signature,
            )
    }
}

impl Encode for DisapprovalMsg {
    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.signed_bytes());
        out.extend_from_slice(&self.signature.0);
    }
}

impl Decode for DisapprovalMsg {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        expect_tag(r, TAG_DISAPPROVAL)?;
        Ok(Self {
            reporter_pseudo_id: r.u64()?,
            subject: Digest(r.array()?),
            timestamp: Timestamp::from_nanos(r.u64()?),
            reporter_temp_cert: TempCert::decode_from(r)?,
            signature: Signature(r.array()?),
        })
    }
}

/// Anything that goes over the air, V2V or V2I.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Beacon(Beacon),
    NeighborList(NeighborListMsg),
    Disapproval(DisapprovalMsg),
    CertRequest(CertRequest),
    CertResponse(TempCert),
}

impl Encode for Frame {
    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Frame::Beacon(b) => b.encode_into(out),
            Frame::NeighborList(m) => m.encode_into(out),
            Frame::Disapproval(d) => d.encode_into(out),
            Frame::CertRequest(r) => {
                out.push(TAG_CERT_REQUEST);
                r.encode_into(out);
            }
            Frame::CertResponse(c) => {
                out.push(TAG_CERT_RESPONSE);
                c.encode_into(out);
            }
        }
    }
}

impl Decode for Frame {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(match r.peek_u8()? {
            TAG_BEACON => Frame::Beacon(Beacon::decode_from(r)?),
            TAG_NEIGHBOR_LIST => Frame::NeighborList(NeighborListMsg::decode_from(r)?),
            TAG_DISAPPROVAL => Frame::Disapproval(DisapprovalMsg::decode_from(r)?),
            TAG_CERT_REQUEST => {
                r.u8()?;
                Frame::CertRequest(CertRequest::decode_from(r)?)
            }
            TAG_CERT_RESPONSE => {
                r.u8()?;
                Frame::CertResponse(TempCert::decode_from(r)?)
            }
            other => return Err(DecodeError::BadTag(other)),
        })
    }
}

fn expect_tag(r: &mut Reader<'_>, tag: u8) -> Result<(), DecodeError> {
    match r.u8()? {
        t if t == tag => Ok(()),
        t => Err(DecodeError::BadTag(t)),
    }
}
