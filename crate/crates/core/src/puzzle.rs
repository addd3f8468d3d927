//! Merkle puzzle sets.
//!
//! The initiator publishes `n` small ciphertexts. Each hides, under a key of
//! only `k` effective bits, a payload `K_const || X || F(X) || u`: a fixed
//! redundancy prefix, a puzzle identifier, secret key material, and a GQ
//! commitment. The responder brute-forces one puzzle (expected `2^(k-1)`
//! trials) and thereby commits to a specific `(X, FX, u)`; an eavesdropper
//! who wants every secret must pay roughly `n` times that.
//!
//! The cipher is a hash keystream: block `j` of the stream for key bytes `R`
//! is `SHA-256(R || j_be64)`, XORed over the payload. Hardness comes solely
//! from the size of the key space, never from the cipher.

use num_bigint::BigUint;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gqid::{self, PublicParams};
use crate::wire;

/// Fixed plaintext prefix that lets a solver recognize the right key.
pub const REDUNDANCY: [u8; 8] = *b"MERKLE01";

/// Hard ceiling on `n * 2^k` for [`solve_all`], keeping the adversary
/// oracle desk-scale.
pub const SOLVE_ALL_BUDGET: u64 = 1 << 26;

/// Upper bound on effective key bits.
pub const MAX_KEY_BITS: u32 = 40;

/// Shape of a puzzle set: how many puzzles and how hard each one is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PuzzleParams {
    pub count: u32,
    pub key_bits: u32,
    pub redundancy: [u8; 8],
}

impl PuzzleParams {
    pub fn new(count: u32, key_bits: u32) -> Result<PuzzleParams> {
        let params = PuzzleParams {
            count,
            key_bits,
            redundancy: REDUNDANCY,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::BadPuzzleParams("count must be at least 1".into()));
        }
        if self.key_bits > MAX_KEY_BITS {
            return Err(Error::BadPuzzleParams(format!(
                "key bits {} above the ceiling {MAX_KEY_BITS}",
                self.key_bits
            )));
        }
        Ok(())
    }

    /// Size of the key space, `2^k`.
    pub fn key_space(&self) -> u64 {
        1u64 << self.key_bits
    }
}

impl Default for PuzzleParams {
    fn default() -> Self {
        PuzzleParams {
            count: 8,
            key_bits: 8,
            redundancy: REDUNDANCY,
        }
    }
}

/// One puzzle as it travels: just the ciphertext.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Puzzle {
    pub ciphertext: Vec<u8>,
}

/// Decrypted puzzle contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuzzlePayload {
    pub redundancy: [u8; 8],
    pub puzzle_id: [u8; 16],
    pub key_material: [u8; 32],
    pub commitment: BigUint,
}

/// Initiator-side record for one puzzle: everything needed to answer a
/// challenge naming its `X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuzzleSecret {
    pub puzzle_id: [u8; 16],
    pub key_material: [u8; 32],
    pub key: u64,
    pub nonce: BigUint,
}

/// XOR `data` with the hash keystream for `key`.
pub(crate) fn stream_xor(data: &[u8], key: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    let mut block: u64 = 0;
    while out.len() < data.len() {
        let mut h = Sha256::new();
        h.update(key);
        h.update(block.to_be_bytes());
        let ks = h.finalize();
        for byte in ks {
            if out.len() == data.len() {
                break;
            }
            out.push(data[out.len()] ^ byte);
        }
        block += 1;
    }
    out
}

/// `F(X)`: the initiator's secret keyed function.
pub fn key_material_for(f_secret: &[u8; 32], puzzle_id: &[u8; 16]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(f_secret);
    h.update(puzzle_id);
    h.finalize().into()
}

fn payload_bytes(payload: &PuzzlePayload) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 16 + 32 + 8);
    out.extend_from_slice(&payload.redundancy);
    out.extend_from_slice(&payload.puzzle_id);
    out.extend_from_slice(&payload.key_material);
    wire::put_uint(&mut out, &payload.commitment);
    out
}

fn parse_payload(bytes: &[u8]) -> Result<PuzzlePayload> {
    let mut r = wire::Reader::new(bytes);
    let redundancy = r.array::<8>()?;
    let puzzle_id = r.array::<16>()?;
    let key_material = r.array::<32>()?;
    let commitment = r.uint()?;
    r.finish()?;
    Ok(PuzzlePayload {
        redundancy,
        puzzle_id,
        key_material,
        commitment,
    })
}

/// Build a fresh puzzle set. Returns the wire-facing puzzles and the
/// matching secrets, index-aligned. Deterministic under a seeded rng.
pub fn make_puzzle_set<R: Rng>(
    params: &PuzzleParams,
    gq: &PublicParams,
    f_secret: &[u8; 32],
    rng: &mut R,
) -> Result<(Vec<Puzzle>, Vec<PuzzleSecret>)> {
    params.validate()?;
    let mut puzzles = Vec::with_capacity(params.count as usize);
    let mut secrets = Vec::with_capacity(params.count as usize);
    let mut used_ids = std::collections::HashSet::new();
    for _ in 0..params.count {
        let mut puzzle_id = [0u8; 16];
        loop {
            rng.fill(&mut puzzle_id);
            if used_ids.insert(puzzle_id) {
                break;
            }
        }
        let key_material = key_material_for(f_secret, &puzzle_id);
        let commitment = gqid::commit(gq, rng);
        let key = rng.gen_range(0..params.key_space());
        let (nonce, value) = commitment.into_parts();
        let payload = PuzzlePayload {
            redundancy: params.redundancy,
            puzzle_id,
            key_material,
            commitment: value,
        };
        puzzles.push(Puzzle {
            ciphertext: stream_xor(&payload_bytes(&payload), &key.to_be_bytes()),
        });
        secrets.push(PuzzleSecret {
            puzzle_id,
            key_material,
            key,
            nonce,
        });
    }
    Ok((puzzles, secrets))
}

/// Try one key against one puzzle. Cheap prefix check first; a full parse
/// only on a redundancy hit.
fn try_key(puzzle: &Puzzle, key: u64, redundancy: &[u8; 8]) -> Option<PuzzlePayload> {
    let keybytes = key.to_be_bytes();
    if puzzle.ciphertext.len() < 8 {
        return None;
    }
    let prefix = stream_xor(&puzzle.ciphertext[..8], &keybytes);
    if prefix != redundancy[..] {
        return None;
    }
    let clear = stream_xor(&puzzle.ciphertext, &keybytes);
    parse_payload(&clear).ok()
}

/// Solve one puzzle chosen uniformly at random, searching the key space in
/// a randomized order. Returns the payload and the number of keys tried.
pub fn solve_one<R: Rng>(
    set: &[Puzzle],
    params: &PuzzleParams,
    rng: &mut R,
) -> Result<(PuzzlePayload, u64)> {
    params.validate()?;
    if set.is_empty() {
        return Err(Error::EmptyPuzzleSet);
    }
    let puzzle = &set[rng.gen_range(0..set.len())];
    solve_puzzle(puzzle, params, rng)
}

fn solve_puzzle<R: Rng>(
    puzzle: &Puzzle,
    params: &PuzzleParams,
    rng: &mut R,
) -> Result<(PuzzlePayload, u64)> {
    let space = params.key_space();
    // Visit every key exactly once in a random-looking order: i -> a*i + c
    // (mod 2^k) is a permutation whenever a is odd.
    let a = rng.gen_range(0..space) | 1;
    let c = rng.gen_range(0..space);
    let mask = space - 1;
    let mut trials = 0u64;
    for i in 0..space {
        let key = (a.wrapping_mul(i).wrapping_add(c)) & mask;
        trials += 1;
        if let Some(payload) = try_key(puzzle, key, &params.redundancy) {
            return Ok((payload, trials));
        }
    }
    Err(Error::UnsolvablePuzzle)
}

/// Adversary oracle: recover every payload in the set. Refuses work beyond
/// [`SOLVE_ALL_BUDGET`]. Returns the payloads and the summed trial count.
pub fn solve_all<R: Rng>(
    set: &[Puzzle],
    params: &PuzzleParams,
    rng: &mut R,
) -> Result<(Vec<PuzzlePayload>, u64)> {
    params.validate()?;
    if set.is_empty() {
        return Err(Error::EmptyPuzzleSet);
    }
    let requested = (set.len() as u64).saturating_mul(params.key_space());
    if requested > SOLVE_ALL_BUDGET {
        return Err(Error::BudgetExceeded(requested, SOLVE_ALL_BUDGET));
    }
    let mut payloads = Vec::with_capacity(set.len());
    let mut trials = 0u64;
    for puzzle in set {
        let (payload, t) = solve_puzzle(puzzle, params, rng)?;
        payloads.push(payload);
        trials += t;
    }
    Ok((payloads, trials))
}

/// Full puzzle-set frame: tag 0x02, 4-byte count, then each ciphertext
/// length-prefixed.
pub fn encode_puzzle_set(set: &[Puzzle]) -> Result<Vec<u8>> {
    if set.is_empty() {
        return Err(Error::EmptyPuzzleSet);
    }
    let mut out = vec![wire::TAG_PUZZLE_SET];
    out.extend_from_slice(&(set.len() as u32).to_be_bytes());
    for puzzle in set {
        wire::put_bytes(&mut out, &puzzle.ciphertext);
    }
    Ok(out)
}

pub fn decode_puzzle_set(frame: &[u8]) -> Result<Vec<Puzzle>> {
    let mut r = wire::Reader::new(frame);
    if r.u8()? != wire::TAG_PUZZLE_SET {
        return Err(Error::MalformedFrame("not a puzzle-set frame".into()));
    }
    let count = r.u32_be()?;
    if count == 0 {
        return Err(Error::EmptyPuzzleSet);
    }
    let mut set = Vec::with_capacity(count as usize);
    for _ in 0..count {
        set.push(Puzzle {
            ciphertext: r.bytes()?.to_vec(),
        });
    }
    r.finish()?;
    Ok(set)
}
