//! Bit-exact wire encodings.
//!
//! Integers travel as a 4-byte big-endian length `L` followed by `L`
//! magnitude bytes, big-endian, with no leading zero byte (zero encodes as
//! `L = 0`). Frames are tagged:
//!
//! ```text
//! 0x01 Init          | variant(1) | conversation id(16) | variant fields | message
//! 0x02 PuzzleSet     | count(4)   | count * (len(4) | ciphertext)
//! 0x03 Challenge     | conversation id(16) | puzzle id(16) | int b
//! 0x04 Authenticated | conversation id(16) | int v | len(4) | sealed
//! 0x05 Broadcast     | len(4) | text
//! ```
//!
//! Decoding is strict: non-canonical integers, unknown tags, and trailing
//! bytes are all rejected.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::puzzle::{self, Puzzle};
use crate::session::{
    AuthenticatedMessage, ChallengeMessage, ConversationId, InitMessage, InitPayload,
};

pub const TAG_INIT: u8 = 0x01;
pub const TAG_PUZZLE_SET: u8 = 0x02;
pub const TAG_CHALLENGE: u8 = 0x03;
pub const TAG_AUTHENTICATED: u8 = 0x04;
pub const TAG_BROADCAST: u8 = 0x05;

/// Append the canonical integer encoding.
pub fn put_uint(out: &mut Vec<u8>, n: &BigUint) {
    if n.is_zero() {
        out.extend_from_slice(&0u32.to_be_bytes());
        return;
    }
    let bytes = n.to_bytes_be();
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&bytes);
}

/// Append a 4-byte big-endian length followed by the bytes themselves.
pub fn put_bytes(out: &mut Vec<u8>, data: &[u8]) {
    out.extend_from_slice(&(data.len() as u32).to_be_bytes());
    out.extend_from_slice(data);
}

/// Cursor over a frame being decoded.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::TruncatedFrame);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32_be(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let b = self.take(N)?;
        let mut out = [0u8; N];
        out.copy_from_slice(b);
        Ok(out)
    }

    /// Length-prefixed byte string.
    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        let len = self.u32_be()? as usize;
        self.take(len)
    }

    /// Canonical integer; a leading zero magnitude byte is malformed.
    pub fn uint(&mut self) -> Result<BigUint> {
        let magnitude = self.bytes()?;
        if let Some(0) = magnitude.first() {
            return Err(Error::MalformedFrame("leading zero in integer".into()));
        }
        Ok(BigUint::from_bytes_be(magnitude))
    }

    /// Decoding must consume the whole frame.
    pub fn finish(self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::MalformedFrame(format!(
                "{} trailing bytes",
                self.remaining()
            )));
        }
        Ok(())
    }
}

/// Any frame the protocol puts on the simulated network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireMessage {
    Init(InitMessage),
    PuzzleSet(Vec<Puzzle>),
    Challenge(ChallengeMessage),
    Authenticated(AuthenticatedMessage),
    Broadcast(Vec<u8>),
}

impl WireMessage {
    pub fn tag(&self) -> u8 {
        match self {
            WireMessage::Init(_) => TAG_INIT,
            WireMessage::PuzzleSet(_) => TAG_PUZZLE_SET,
            WireMessage::Challenge(_) => TAG_CHALLENGE,
            WireMessage::Authenticated(_) => TAG_AUTHENTICATED,
            WireMessage::Broadcast(_) => TAG_BROADCAST,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            WireMessage::Init(init) => {
                out.push(TAG_INIT);
                out.push(init.payload.variant());
                out.extend_from_slice(init.conversation_id.as_bytes());
                match &init.payload {
                    InitPayload::Open { id } => put_bytes(&mut out, id),
                    InitPayload::Registered => {}
                    InitPayload::Signed {
                        id,
                        message_hash,
                        signature,
                    } => {
                        put_bytes(&mut out, id);
                        out.extend_from_slice(message_hash);
                        put_uint(&mut out, signature);
                    }
                }
                put_bytes(&mut out, &init.first_message);
            }
            WireMessage::PuzzleSet(set) => {
                // Layout is owned by the puzzle module; reuse it verbatim.
                return puzzle::encode_puzzle_set(set).expect("non-empty puzzle set");
            }
            WireMessage::Challenge(ch) => {
                out.push(TAG_CHALLENGE);
                out.extend_from_slice(ch.conversation_id.as_bytes());
                out.extend_from_slice(&ch.puzzle_id);
                put_uint(&mut out, &ch.challenge);
            }
            WireMessage::Authenticated(am) => {
                out.push(TAG_AUTHENTICATED);
                out.extend_from_slice(am.conversation_id.as_bytes());
                put_uint(&mut out, &am.response);
                put_bytes(&mut out, &am.sealed);
            }
            WireMessage::Broadcast(text) => {
                out.push(TAG_BROADCAST);
                put_bytes(&mut out, text);
            }
        }
        out
    }

    pub fn decode(frame: &[u8]) -> Result<WireMessage> {
        let mut r = Reader::new(frame);
        let tag = r.u8()?;
        let msg = match tag {
            TAG_INIT => {
                let variant = r.u8()?;
                let conversation_id = ConversationId::from_bytes(r.array::<16>()?);
                let payload = match variant {
                    1 => InitPayload::Open {
                        id: r.bytes()?.to_vec(),
                    },
                    2 => InitPayload::Registered,
                    3 => InitPayload::Signed {
                        id: r.bytes()?.to_vec(),
                        message_hash: r.array::<32>()?,
                        signature: r.uint()?,
                    },
                    other => {
                        return Err(Error::MalformedFrame(format!(
                            "unknown init variant {other}"
                        )))
                    }
                };
                let first_message = r.bytes()?.to_vec();
                WireMessage::Init(InitMessage {
                    conversation_id,
                    payload,
                    first_message,
                })
            }
            TAG_PUZZLE_SET => {
                return Ok(WireMessage::PuzzleSet(puzzle::decode_puzzle_set(frame)?));
            }
            TAG_CHALLENGE => WireMessage::Challenge(ChallengeMessage {
                conversation_id: ConversationId::from_bytes(r.array::<16>()?),
                puzzle_id: r.array::<16>()?,
                challenge: r.uint()?,
            }),
            TAG_AUTHENTICATED => WireMessage::Authenticated(AuthenticatedMessage {
                conversation_id: ConversationId::from_bytes(r.array::<16>()?),
                response: r.uint()?,
                sealed: r.bytes()?.to_vec(),
            }),
            TAG_BROADCAST => WireMessage::Broadcast(r.bytes()?.to_vec()),
            other => return Err(Error::MalformedFrame(format!("unknown tag 0x{other:02x}"))),
        };
        r.finish()?;
        Ok(msg)
    }
}

/// Encode an integer on its own (used by key fixtures and tests).
pub fn uint_to_vec(n: &BigUint) -> Vec<u8> {
    let mut out = Vec::new();
    put_uint(&mut out, n);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_encodes_as_empty_length() {
        assert_eq!(uint_to_vec(&BigUint::zero()), vec![0, 0, 0, 0]);
    }

    #[test]
    fn integer_encoding_has_no_leading_zero() {
        let n = BigUint::from(0x00ff00u32);
        assert_eq!(uint_to_vec(&n), vec![0, 0, 0, 2, 0xff, 0x00]);
    }

    #[test]
    fn non_canonical_integer_rejected() {
        // length 2, magnitude 0x00 0x08: must be encoded as length 1, 0x08
        let bad = vec![0, 0, 0, 2, 0x00, 0x08];
        let mut r = Reader::new(&bad);
        assert!(matches!(r.uint(), Err(Error::MalformedFrame(_))));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut frame = WireMessage::Broadcast(b"hi".to_vec()).encode();
        frame.push(0);
        assert!(matches!(
            WireMessage::decode(&frame),
            Err(Error::MalformedFrame(_))
        ));
    }

    #[test]
    fn unknown_tag_rejected() {
        assert!(matches!(
            WireMessage::decode(&[0x7f, 0, 0]),
            Err(Error::MalformedFrame(_))
        ));
    }

    proptest! {
        #[test]
        fn uint_roundtrip(words in prop::collection::vec(any::<u32>(), 0..8)) {
            let n = BigUint::new(words);
            let enc = uint_to_vec(&n);
            let mut r = Reader::new(&enc);
            let back = r.uint().unwrap();
            r.finish().unwrap();
            prop_assert_eq!(back, n);
        }

        #[test]
        fn broadcast_roundtrip(text in prop::collection::vec(any::<u8>(), 0..200)) {
            let msg = WireMessage::Broadcast(text);
            let back = WireMessage::decode(&msg.encode()).unwrap();
            prop_assert_eq!(back, msg);
        }
    }
}
