use crate::crypto::{Ciphertext, CryptoError, PrimeField, SecretShare};
use crate::ring::{ElementMaskVector, IndicatorSet, Ring, RingVector};

use super::{ProtocolError, UserId};

/// What a client sends in the Report phase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientReport {
    pub masked: RingVector,
    pub indicator: IndicatorSet,
    /// `⟦⟨r_i⟩_u⟧`, one per decryptor in `D` order.
    pub individual_shares: Vec<Ciphertext>,
    /// `⟦⟨r_{i,v}⟩_u⟧` at `v_pos * |D| + u_pos`.
    pub decryptor_shares: Vec<Ciphertext>,
}

impl ClientReport {
    pub fn decryptor_share(&self, d: usize, v_pos: usize, u_pos: usize) -> &Ciphertext {
        &self.decryptor_shares[v_pos * d + u_pos]
    }
}

/// Server → decryptor `u` after collecting reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnmaskRequest {
    pub indicators: Vec<(UserId, IndicatorSet)>,
    pub shares: Vec<(UserId, Ciphertext)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnmaskResponse {
    pub emk: ElementMaskVector,
    pub shares: Vec<(UserId, SecretShare)>,
    /// Clients whose ciphertext failed authentication.
    pub failed: Vec<UserId>,
}

/// Server → surviving decryptor: the dropout list `V` and the ciphertexts
/// `⟦⟨r_{i,v}⟩_u⟧` for `v ∈ V`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryRequest {
    pub dropped: Vec<UserId>,
    pub shares: Vec<(UserId, UserId, Ciphertext)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveryResponse {
    pub shares: Vec<(UserId, UserId, SecretShare)>,
    pub failed: Vec<(UserId, UserId)>,
}

/// Why a decryptor refused to continue.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Refusal {
    TooManyDropouts { claimed: usize, max: usize },
    UnknownDecryptor(UserId),
    SelfListed,
    UnknownClient(UserId),
    DuplicateEntry(UserId),
}

impl std::fmt::Display for Refusal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Refusal::TooManyDropouts { claimed, max } => write!(f, "dropout list of {claimed} exceeds {max}"),
            Refusal::UnknownDecryptor(v) => write!(f, "dropout list names non-decryptor {v}"),
            Refusal::SelfListed => f.write_str("dropout list names the recipient itself"),
            Refusal::UnknownClient(c) => write!(f, "request names unknown client {c}"),
            Refusal::DuplicateEntry(c) => write!(f, "request repeats entry {c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Body {
    Report(ClientReport),
    UnmaskRequest(UnmaskRequest),
    UnmaskResponse(UnmaskResponse),
    RecoveryRequest(RecoveryRequest),
    RecoveryResponse(RecoveryResponse),
    Refusal(Refusal),
}

impl Body {
    fn tag(&self) -> u8 {
        match self {
            Body::Report(_) => 1,
            Body::UnmaskRequest(_) => 2,
            Body::UnmaskResponse(_) => 3,
            Body::RecoveryRequest(_) => 4,
            Body::RecoveryResponse(_) => 5,
            Body::Refusal(_) => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Body::Report(_) => "report",
            Body::UnmaskRequest(_) => "unmask-request",
            Body::UnmaskResponse(_) => "unmask-response",
            Body::RecoveryRequest(_) => "recovery-request",
            Body::RecoveryResponse(_) => "recovery-response",
            Body::Refusal(_) => "refusal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub round: u64,
    pub sender: UserId,
    pub body: Body,
}

/// Parameters needed to parse message bodies.
#[derive(Clone, Debug)]
pub struct Codec {
    pub ring: Ring,
    pub field: PrimeField,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_be_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.0.extend_from_slice(b);
    }
    fn len(&mut self, n: usize) {
        self.u32(n as u32);
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        if self.0.len() < n {
            return Err(ProtocolError::Decode("truncated message"));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, ProtocolError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bytes(&mut self) -> Result<&'a [u8], ProtocolError> {
        let n = self.u32()? as usize;
        self.take(n)
    }
    /// A count, sanity-bounded by the remaining input.
    fn len(&mut self) -> Result<usize, ProtocolError> {
        let n = self.u32()? as usize;
        if n > self.0.len() {
            return Err(ProtocolError::Decode("count exceeds message"));
        }
        Ok(n)
    }
}

fn ct(r: &mut Reader<'_>) -> Result<Ciphertext, ProtocolError> {
    Ok(Ciphertext::decode(r.bytes()?)?)
}

fn share(r: &mut Reader<'_>, field: &PrimeField) -> Result<SecretShare, ProtocolError> {
    Ok(SecretShare::decode(field, r.bytes()?)?)
}

impl Message {
    /// `tag u8 || τ u64 || sender u32 || body`, all integers big-endian.
    pub fn encode(&self, codec: &Codec) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.u8(self.body.tag());
        w.u64(self.round);
        w.u32(self.sender);
        match &self.body {
            Body::Report(rep) => {
                w.bytes(&rep.masked.encode());
                w.bytes(&rep.indicator.encode());
                w.len(rep.individual_shares.len());
                for c in &rep.individual_shares {
                    w.bytes(&c.encode());
                }
                w.len(rep.decryptor_shares.len());
                for c in &rep.decryptor_shares {
                    w.bytes(&c.encode());
                }
            }
            Body::UnmaskRequest(req) => {
                w.len(req.indicators.len());
                for (id, b) in &req.indicators {
                    w.u32(*id);
                    w.bytes(&b.encode());
                }
                w.len(req.shares.len());
                for (id, c) in &req.shares {
                    w.u32(*id);
                    w.bytes(&c.encode());
                }
            }
            Body::UnmaskResponse(resp) => {
                w.bytes(&resp.emk.encode());
                w.len(resp.shares.len());
                for (id, s) in &resp.shares {
                    w.u32(*id);
                    w.bytes(&s.encode(&codec.field));
                }
                w.len(resp.failed.len());
                for id in &resp.failed {
                    w.u32(*id);
                }
            }
            Body::RecoveryRequest(req) => {
                w.len(req.dropped.len());
                for v in &req.dropped {
                    w.u32(*v);
                }
                w.len(req.shares.len());
                for (i, v, c) in &req.shares {
                    w.u32(*i);
                    w.u32(*v);
                    w.bytes(&c.encode());
                }
            }
            Body::RecoveryResponse(resp) => {
                w.len(resp.shares.len());
                for (i, v, s) in &resp.shares {
                    w.u32(*i);
                    w.u32(*v);
                    w.bytes(&s.encode(&codec.field));
                }
                w.len(resp.failed.len());
                for (i, v) in &resp.failed {
                    w.u32(*i);
                    w.u32(*v);
                }
            }
            Body::Refusal(reason) => match reason {
                Refusal::TooManyDropouts { claimed, max } => {
                    w.u8(0);
                    w.u32(*claimed as u32);
                    w.u32(*max as u32);
                }
                Refusal::UnknownDecryptor(v) => {
                    w.u8(1);
                    w.u32(*v);
                }
                Refusal::SelfListed => w.u8(2),
                Refusal::UnknownClient(c) => {
                    w.u8(3);
                    w.u32(*c);
                }
                Refusal::DuplicateEntry(c) => {
                    w.u8(4);
                    w.u32(*c);
                }
            },
        }
        w.0
    }

    pub fn decode(codec: &Codec, bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader(bytes);
        let tag = r.u8()?;
        let round = r.u64()?;
        let sender = r.u32()?;
        let body = match tag {
            1 => {
                let masked = RingVector::decode(codec.ring, r.bytes()?)?;
                let ind = r.bytes()?;
                let (indicator, used) = IndicatorSet::decode(ind)?;
                if used != ind.len() {
                    return Err(ProtocolError::Decode("trailing bytes after indicator set"));
                }
                let n = r.len()?;
                let individual_shares = (0..n).map(|_| ct(&mut r)).collect::<Result<_, _>>()?;
                let n = r.len()?;
                let decryptor_shares = (0..n).map(|_| ct(&mut r)).collect::<Result<_, _>>()?;
                Body::Report(ClientReport { masked, indicator, individual_shares, decryptor_shares })
            }
            2 => {
                let n = r.len()?;
                let mut indicators = Vec::with_capacity(n);
                for _ in 0..n {
                    let id = r.u32()?;
                    let raw = r.bytes()?;
                    let (b, used) = IndicatorSet::decode(raw)?;
                    if used != raw.len() {
                        return Err(ProtocolError::Decode("trailing bytes after indicator set"));
                    }
                    indicators.push((id, b));
                }
                let n = r.len()?;
                let mut shares = Vec::with_capacity(n);
                for _ in 0..n {
                    let id = r.u32()?;
                    shares.push((id, ct(&mut r)?));
                }
                Body::UnmaskRequest(UnmaskRequest { indicators, shares })
            }
            3 => {
                let emk = ElementMaskVector::decode(codec.ring, r.bytes()?)?;
                let n = r.len()?;
                let mut shares = Vec::with_capacity(n);
                for _ in 0..n {
                    let id = r.u32()?;
                    shares.push((id, share(&mut r, &codec.field)?));
                }
                let n = r.len()?;
                let failed = (0..n).map(|_| r.u32()).collect::<Result<_, _>>()?;
                Body::UnmaskResponse(UnmaskResponse { emk, shares, failed })
            }
            4 => {
                let n = r.len()?;
                let dropped = (0..n).map(|_| r.u32()).collect::<Result<_, _>>()?;
                let n = r.len()?;
                let mut shares = Vec::with_capacity(n);
                for _ in 0..n {
                    let i = r.u32()?;
                    let v = r.u32()?;
                    shares.push((i, v, ct(&mut r)?));
                }
                Body::RecoveryRequest(RecoveryRequest { dropped, shares })
            }
            5 => {
                let n = r.len()?;
                let mut shares = Vec::with_capacity(n);
                for _ in 0..n {
                    let i = r.u32()?;
                    let v = r.u32()?;
                    shares.push((i, v, share(&mut r, &codec.field)?));
                }
                let n = r.len()?;
                let mut failed = Vec::with_capacity(n);
                for _ in 0..n {
                    failed.push((r.u32()?, r.u32()?));
                }
                Body::RecoveryResponse(RecoveryResponse { shares, failed })
            }
            6 => Body::Refusal(match r.u8()? {
                0 => Refusal::TooManyDropouts { claimed: r.u32()? as usize, max: r.u32()? as usize },
                1 => Refusal::UnknownDecryptor(r.u32()?),
                2 => Refusal::SelfListed,
                3 => Refusal::UnknownClient(r.u32()?),
                4 => Refusal::DuplicateEntry(r.u32()?),
                _ => return Err(ProtocolError::Decode("unknown refusal code")),
            }),
            _ => return Err(ProtocolError::Decode("unknown message tag")),
        };
        if !r.0.is_empty() {
            return Err(ProtocolError::Decode("trailing bytes after message"));
        }
        Ok(Message { round, sender, body })
    }
}

impl From<CryptoError> for ProtocolError {
    fn from(e: CryptoError) -> Self {
        ProtocolError::Crypto(e)
    }
}
