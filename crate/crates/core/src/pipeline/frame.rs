//! E2-lite wire frame: a fixed header over any reliable byte stream.
//!
//! Layout: magic "ZTRC" | version u8 | msg_type u8 | correlation_id u64 BE
//! | payload_len u32 BE | payload bytes. Payloads are the JSON envelopes
//! and messages defined by the other modules.

use crate::error::{Error, Result};

pub const FRAME_MAGIC: [u8; 4] = *b"ZTRC";
pub const FRAME_VERSION: u8 = 1;
pub const FRAME_HEADER_LEN: usize = 4 + 1 + 1 + 8 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    KeyIssue = 1,
    EncKpm = 2,
    Control = 3,
    Ack = 4,
}

impl MsgType {
    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            1 => Ok(MsgType::KeyIssue),
            2 => Ok(MsgType::EncKpm),
            3 => Ok(MsgType::Control),
            4 => Ok(MsgType::Ack),
            other => Err(Error::Frame(format!("unknown msg_type {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct E2Frame {
    pub msg_type: MsgType,
    pub correlation_id: u64,
    pub payload: Vec<u8>,
}

impl E2Frame {
    pub fn new(msg_type: MsgType, correlation_id: u64, payload: Vec<u8>) -> Self {
        Self {
            msg_type,
            correlation_id,
            payload,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FRAME_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&FRAME_MAGIC);
        out.push(FRAME_VERSION);
        out.push(self.msg_type as u8);
        out.extend_from_slice(&self.correlation_id.to_be_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses one frame from the front of `buf`, returning it together
    /// with the number of bytes consumed, or None if more bytes are
    /// needed.
    pub fn decode_prefix(buf: &[u8]) -> Result<Option<(E2Frame, usize)>> {
        if buf.len() < FRAME_HEADER_LEN {
            return Ok(None);
        }
        if buf[0..4] != FRAME_MAGIC {
            return Err(Error::Frame("bad magic".into()));
        }
        if buf[4] != FRAME_VERSION {
            return Err(Error::Frame(format!("unsupported version {}", buf[4])));
        }
        let msg_type = MsgType::from_u8(buf[5])?;
        let correlation_id = u64::from_be_bytes(buf[6..14].try_into().unwrap());
        let payload_len = u32::from_be_bytes(buf[14..18].try_into().unwrap()) as usize;
        let total = FRAME_HEADER_LEN + payload_len;
        if buf.len() < total {
            return Ok(None);
        }
        let payload = buf[FRAME_HEADER_LEN..total].to_vec();
        Ok(Some((
            E2Frame {
                msg_type,
                correlation_id,
                payload,
            },
            total,
        )))
    }

    /// Decodes a buffer that must contain exactly one frame.
    pub fn decode(buf: &[u8]) -> Result<E2Frame> {
        match Self::decode_prefix(buf)? {
            Some((frame, consumed)) if consumed == buf.len() => Ok(frame),
            Some(_) => Err(Error::Frame("trailing bytes after frame".into())),
            None => Err(Error::Frame("truncated frame".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodes_to_the_documented_layout() {
        let frame = E2Frame::new(MsgType::EncKpm, 0x0102030405060708, b"hi".to_vec());
        let bytes = frame.encode();
        assert_eq!(&bytes[0..4], b"ZTRC");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 2);
        assert_eq!(&bytes[6..14], &[1, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(&bytes[14..18], &[0, 0, 0, 2]);
        assert_eq!(&bytes[18..], b"hi");
        assert_eq!(E2Frame::decode(&bytes).unwrap(), frame);
    }

    #[test]
    fn rejects_unknown_type_bad_magic_and_version() {
        let mut bytes = E2Frame::new(MsgType::Ack, 1, vec![]).encode();
        bytes[5] = 9;
        assert!(matches!(E2Frame::decode(&bytes), Err(Error::Frame(_))));

        let mut bytes = E2Frame::new(MsgType::Ack, 1, vec![]).encode();
        bytes[0] = b'X';
        assert!(matches!(E2Frame::decode(&bytes), Err(Error::Frame(_))));

        let mut bytes = E2Frame::new(MsgType::Ack, 1, vec![]).encode();
        bytes[4] = 2;
        assert!(matches!(E2Frame::decode(&bytes), Err(Error::Frame(_))));
    }

    #[test]
    fn prefix_decoding_handles_partial_and_concatenated_frames() {
        let a = E2Frame::new(MsgType::Control, 7, b"abc".to_vec());
        let b = E2Frame::new(MsgType::Ack, 7, vec![]);
        let mut stream = a.encode();
        stream.extend(b.encode());

        assert!(E2Frame::decode_prefix(&stream[..5]).unwrap().is_none());
        let (first, used) = E2Frame::decode_prefix(&stream).unwrap().unwrap();
        assert_eq!(first, a);
        let (second, used2) = E2Frame::decode_prefix(&stream[used..]).unwrap().unwrap();
        assert_eq!(second, b);
        assert_eq!(used + used2, stream.len());
    }

    #[test]
    fn payload_length_must_match() {
        let mut bytes = E2Frame::new(MsgType::Ack, 1, b"xyz".to_vec()).encode();
        bytes.truncate(bytes.len() - 1);
        assert!(matches!(E2Frame::decode(&bytes), Err(Error::Frame(_))));
    }
}
