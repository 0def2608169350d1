use serde::{Deserialize, Serialize};

use super::{HarnessError, RunSpec};
use crate::cost::{Phase, Role};
use crate::protocol::UserId;

pub const TRANSCRIPT_MAGIC: &[u8; 8] = b"PESA-TX1";

/// One delivered message in canonical encoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub phase: Phase,
    pub sender_role: Role,
    pub receiver_role: Role,
    pub receiver: UserId,
    pub bytes: Vec<u8>,
}

fn phase_code(p: Phase) -> u8 {
    Phase::ALL.iter().position(|&q| q == p).unwrap() as u8
}

fn role_code(r: Role) -> u8 {
    Role::ALL.iter().position(|&q| q == r).unwrap() as u8
}

/// File layout: magic, `u32` BE length + JSON run spec, then per record
/// `phase u8 ‖ sender role u8 ‖ receiver role u8 ‖ receiver u32 ‖ u32 len ‖ bytes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub spec_json: String,
    pub records: Vec<Record>,
}

impl Transcript {
    pub fn new(spec: &RunSpec, records: Vec<Record>) -> Self {
        let spec_json = serde_json::to_string(spec).expect("run spec serializes");
        Self { spec_json, records }
    }

    pub fn spec(&self) -> Result<RunSpec, HarnessError> {
        serde_json::from_str(&self.spec_json).map_err(|e| HarnessError::Transcript(e.to_string()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let size: usize = self.records.iter().map(|r| r.bytes.len() + 11).sum();
        let mut out = Vec::with_capacity(12 + self.spec_json.len() + size);
        out.extend_from_slice(TRANSCRIPT_MAGIC);
        out.extend_from_slice(&(self.spec_json.len() as u32).to_be_bytes());
        out.extend_from_slice(self.spec_json.as_bytes());
        for r in &self.records {
            out.push(phase_code(r.phase));
            out.push(role_code(r.sender_role));
            out.push(role_code(r.receiver_role));
            out.extend_from_slice(&r.receiver.to_be_bytes());
            out.extend_from_slice(&(r.bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&r.bytes);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, HarnessError> {
        let err = |m: &str| HarnessError::Transcript(m.to_string());
        let mut rest = bytes.strip_prefix(TRANSCRIPT_MAGIC.as_slice()).ok_or_else(|| err("bad magic"))?;
        let mut take = |n: usize| -> Result<&[u8], HarnessError> {
            if rest.len() < n {
                return Err(err("truncated"));
            }
            let (head, tail) = rest.split_at(n);
            rest = tail;
            Ok(head)
        };
        let u32_at = |b: &[u8]| u32::from_be_bytes(b.try_into().unwrap());
        let len = u32_at(take(4)?) as usize;
        let spec_json = String::from_utf8(take(len)?.to_vec()).map_err(|_| err("spec is not UTF-8"))?;
        let mut records = Vec::new();
        loop {
            let head = match take(11) {
                Ok(h) => h,
                Err(_) if rest.is_empty() => break,
                Err(e) => return Err(e),
            };
            let phase = *Phase::ALL.get(head[0] as usize).ok_or_else(|| err("bad phase"))?;
            let sender_role = *Role::ALL.get(head[1] as usize).ok_or_else(|| err("bad role"))?;
            let receiver_role = *Role::ALL.get(head[2] as usize).ok_or_else(|| err("bad role"))?;
            let receiver = u32_at(&head[3..7]);
            let n = u32_at(&head[7..11]) as usize;
            let body = take(n)?.to_vec();
            records.push(Record { phase, sender_role, receiver_role, receiver, bytes: body });
        }
        Ok(Self { spec_json, records })
    }

    pub fn total_bytes(&self) -> u64 {
        self.records.iter().map(|r| r.bytes.len() as u64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_truncation() {
        let t = Transcript::new(
            &RunSpec::default(),
            vec![
                Record {
                    phase: Phase::Report,
                    sender_role: Role::Client,
                    receiver_role: Role::Server,
                    receiver: u32::MAX,
                    bytes: vec![1, 2, 3],
                },
                Record {
                    phase: Phase::DropRcv,
                    sender_role: Role::Decryptor,
                    receiver_role: Role::Server,
                    receiver: 4,
                    bytes: vec![],
                },
            ],
        );
        let b = t.to_bytes();
        assert_eq!(&b[..8], b"PESA-TX1");
        assert_eq!(Transcript::from_bytes(&b).unwrap(), t);
        assert_eq!(t.spec().unwrap(), RunSpec::default());
        assert!(Transcript::from_bytes(&b[..b.len() - 1]).is_err());
        assert!(Transcript::from_bytes(b"PESA-TX0").is_err());
    }
}
