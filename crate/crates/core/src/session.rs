//! Three-phase conversation state machines.
//!
//! Phase 2 binds an identity to a fresh conversation in one of three ways:
//! the ID travels in clear (variant 1), the bootstrap registry maps the
//! conversation to the ID (variant 2), or the init carries a bootstrap
//! signature over the ID and the first message's hash (variant 3).
//!
//! Phase 3 protects every later message with one GQ round keyed through a
//! Merkle puzzle: the initiator publishes a puzzle set, the responder solves
//! one puzzle to learn `(X, FX, u)` and answers with a challenge `b`, and
//! the initiator proves possession of `sigma` with `v` while sealing the
//! message under `FX`. Every failure on the responder side is a reject with
//! a reason, never a panic or an error.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::bootstrap::Bootstrap;
use crate::error::{Error, RejectReason, Result};
use crate::gqid::{self, ChallengeRange, Credential, Identity, PublicParams, Response};
use crate::puzzle::{self, PuzzleParams, PuzzleSecret};

/// Opaque 16-byte conversation label, displayed as hex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConversationId([u8; 16]);

impl ConversationId {
    pub fn from_bytes(bytes: [u8; 16]) -> ConversationId {
        ConversationId(bytes)
    }

    pub fn random<R: Rng>(rng: &mut R) -> ConversationId {
        let mut bytes = [0u8; 16];
        rng.fill(&mut bytes);
        ConversationId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }
}

impl std::fmt::Display for ConversationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// Everything both ends must agree on before a conversation starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolConfig {
    pub puzzle: PuzzleParams,
    pub challenge: ChallengeRange,
    /// Keep unsolved puzzle secrets across `begin_message` calls instead of
    /// discarding them with each fresh set.
    pub reuse_puzzles: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            puzzle: PuzzleParams::default(),
            challenge: ChallengeRange::Modulus,
            reuse_puzzles: false,
        }
    }
}

/// Identity binding material carried by an init frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitPayload {
    /// Variant 1: the ID travels in clear.
    Open { id: Vec<u8> },
    /// Variant 2: the bootstrap registry holds the binding.
    Registered,
    /// Variant 3: bootstrap signature over `H(ID || h(m))`.
    Signed {
        id: Vec<u8>,
        message_hash: [u8; 32],
        signature: BigUint,
    },
}

impl InitPayload {
    pub fn variant(&self) -> u8 {
        match self {
            InitPayload::Open { .. } => 1,
            InitPayload::Registered => 2,
            InitPayload::Signed { .. } => 3,
        }
    }
}

/// Phase-2 opener: conversation label, binding material, first message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitMessage {
    pub conversation_id: ConversationId,
    pub payload: InitPayload,
    pub first_message: Vec<u8>,
}

/// Responder's phase-3 move: which puzzle it solved and its challenge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeMessage {
    pub conversation_id: ConversationId,
    pub puzzle_id: [u8; 16],
    pub challenge: BigUint,
}

/// Initiator's phase-3 move: the GQ response and the sealed message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthenticatedMessage {
    pub conversation_id: ConversationId,
    pub response: BigUint,
    pub sealed: Vec<u8>,
}

/// Initiator-side conversation state: the credential, the per-conversation
/// puzzle function secret, and the outstanding puzzle secrets.
#[derive(Debug, Clone)]
pub struct InitiatorSession {
    credential: Credential,
    conversation_id: ConversationId,
    f_secret: [u8; 32],
    secrets: HashMap<[u8; 16], PuzzleSecret>,
    consumed: HashSet<[u8; 16]>,
    config: ProtocolConfig,
    params: PublicParams,
}

impl InitiatorSession {
    /// Open a conversation. Variants 2 and 3 need the bootstrap: variant 2
    /// registers the binding, variant 3 obtains the signature.
    pub fn initiate<R: Rng>(
        variant: u8,
        credential: Credential,
        first_message: &[u8],
        mut bootstrap: Option<&mut Bootstrap>,
        config: ProtocolConfig,
        params: PublicParams,
        rng: &mut R,
    ) -> Result<(InitiatorSession, InitMessage)> {
        config.puzzle.validate()?;
        let conversation_id = ConversationId::random(rng);
        let mut f_secret = [0u8; 32];
        rng.fill(&mut f_secret);
        let payload = match variant {
            1 => InitPayload::Open {
                id: credential.identity.id.clone(),
            },
            2 => {
                let bs = bootstrap.as_deref_mut().ok_or(Error::BootstrapUnreachable)?;
                bs.register_conversation(conversation_id, &credential.identity.id)?;
                InitPayload::Registered
            }
            3 => {
                let bs = bootstrap.as_deref_mut().ok_or(Error::BootstrapUnreachable)?;
                let message_hash: [u8; 32] = Sha256::digest(first_message).into();
                let signature = bs.sign_identity(&credential.identity.id, &message_hash)?;
                InitPayload::Signed {
                    id: credential.identity.id.clone(),
                    message_hash,
                    signature,
                }
            }
            other => {
                return Err(Error::MalformedFrame(format!(
                    "unknown init variant {other}"
                )))
            }
        };
        let init = InitMessage {
            conversation_id,
            payload,
            first_message: first_message.to_vec(),
        };
        Ok((
            InitiatorSession {
                credential,
                conversation_id,
                f_secret,
                secrets: HashMap::new(),
                consumed: HashSet::new(),
                config,
                params,
            },
            init,
        ))
    }

    pub fn conversation_id(&self) -> ConversationId {
        self.conversation_id
    }

    pub fn credential(&self) -> &Credential {
        &self.credential
    }

    pub fn f_secret(&self) -> &[u8; 32] {
        &self.f_secret
    }

    /// Puzzle secrets not yet spent on a challenge.
    pub fn outstanding_secrets(&self) -> impl Iterator<Item = &PuzzleSecret> {
        self.secrets.values()
    }

    /// Produce a fresh puzzle-set frame and remember its secrets. Needs no
    /// peer interaction, so sets can be prepared ahead of time.
    pub fn begin_message<R: Rng>(&mut self, rng: &mut R) -> Result<Vec<u8>> {
        if !self.config.reuse_puzzles {
            self.secrets.clear();
        }
        let (set, secrets) =
            puzzle::make_puzzle_set(&self.config.puzzle, &self.params, &self.f_secret, rng)?;
        for secret in secrets {
            self.secrets.insert(secret.puzzle_id, secret);
        }
        puzzle::encode_puzzle_set(&set)
    }

    /// Answer a challenge: compute `v` for the stored nonce and seal `m`
    /// under the puzzle's key material. Each puzzle answers at most once.
    pub fn answer_challenge(
        &mut self,
        challenge: &ChallengeMessage,
        message: &[u8],
    ) -> Result<AuthenticatedMessage> {
        if challenge.conversation_id != self.conversation_id {
            return Err(Error::ConversationMismatch);
        }
        if self.consumed.contains(&challenge.puzzle_id) {
            return Err(Error::ReusedPuzzle);
        }
        let secret = self
            .secrets
            .get(&challenge.puzzle_id)
            .ok_or(Error::UnknownPuzzle)?;
        let response = gqid::respond(
            &self.credential,
            &secret.nonce,
            &challenge.challenge,
            &self.params,
            &self.config.challenge,
        )?;
        let sealed = seal(message, &secret.key_material);
        let puzzle_id = challenge.puzzle_id;
        self.secrets.remove(&puzzle_id);
        self.consumed.insert(puzzle_id);
        Ok(AuthenticatedMessage {
            conversation_id: self.conversation_id,
            response: response.0,
            sealed,
        })
    }

    #[cfg(test)]
    pub(crate) fn inject_secret(&mut self, secret: PuzzleSecret) {
        self.secrets.insert(secret.puzzle_id, secret);
    }
}

#[derive(Debug, Clone)]
struct PendingChallenge {
    key_material: [u8; 32],
    commitment: BigUint,
    challenge: BigUint,
}

/// Responder-side conversation state: the bound identity and at most one
/// outstanding challenge.
#[derive(Debug, Clone)]
pub struct ResponderSession {
    conversation_id: ConversationId,
    identity: Identity,
    pending: Option<PendingChallenge>,
    consumed: HashSet<[u8; 16]>,
    config: ProtocolConfig,
    params: PublicParams,
}

impl ResponderSession {
    /// Check an init frame and bind its identity. Returns the session and
    /// the first message.
    pub fn accept(
        msg: &InitMessage,
        params: PublicParams,
        bootstrap: Option<&Bootstrap>,
        config: ProtocolConfig,
    ) -> Result<(ResponderSession, Vec<u8>)> {
        let identity = match &msg.payload {
            InitPayload::Open { id } => Identity::from_id(id, &params)?,
            InitPayload::Registered => {
                let bs = bootstrap.ok_or(Error::BootstrapUnreachable)?;
                let id = bs
                    .lookup_conversation(&msg.conversation_id)
                    .ok_or(Error::UnknownConversation)?;
                Identity::from_id(id, &params)?
            }
            InitPayload::Signed {
                id,
                message_hash,
                signature,
            } => {
                let recomputed: [u8; 32] = Sha256::digest(&msg.first_message).into();
                if recomputed != *message_hash {
                    return Err(Error::InvalidSignature);
                }
                let mut digest = Sha256::new();
                digest.update(id);
                digest.update(message_hash);
                let bound: [u8; 32] = digest.finalize().into();
                if !gqid::verify_sig(&params, signature, &bound) {
                    return Err(Error::InvalidSignature);
                }
                Identity::from_id(id, &params)?
            }
        };
        Ok((
            ResponderSession {
                conversation_id: msg.conversation_id,
                identity,
                pending: None,
                consumed: HashSet::new(),
                config,
                params,
            },
            msg.first_message.clone(),
        ))
    }

    pub fn conversation_id(&self) -> ConversationId {
        self.conversation_id
    }

    pub fn identity(&self) -> &Identity {
        &self.identity
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    /// Solve one puzzle from the offered set and issue a challenge. At most
    /// one challenge may be outstanding, and no puzzle id is accepted twice
    /// within a conversation.
    pub fn make_challenge<R: Rng>(
        &mut self,
        set_frame: &[u8],
        rng: &mut R,
    ) -> Result<ChallengeMessage> {
        if self.pending.is_some() {
            return Err(Error::ChallengePending);
        }
        let set = puzzle::decode_puzzle_set(set_frame)?;
        let (payload, _trials) = puzzle::solve_one(&set, &self.config.puzzle, rng)?;
        if !self.consumed.insert(payload.puzzle_id) {
            return Err(Error::ReplayedPuzzle);
        }
        let challenge = self.config.challenge.sample(&self.params, rng);
        self.pending = Some(PendingChallenge {
            key_material: payload.key_material,
            commitment: payload.commitment,
            challenge: challenge.clone(),
        });
        Ok(ChallengeMessage {
            conversation_id: self.conversation_id,
            puzzle_id: payload.puzzle_id,
            challenge,
        })
    }

    /// Check the GQ equation against the pending challenge, then the
    /// integrity tag; return the plaintext on accept. Any failure rejects
    /// with a reason and clears the pending state.
    pub fn verify_and_open(
        &mut self,
        msg: &AuthenticatedMessage,
    ) -> std::result::Result<Vec<u8>, RejectReason> {
        if msg.conversation_id != self.conversation_id {
            return Err(RejectReason::NoPending);
        }
        let pending = self.pending.take().ok_or(RejectReason::NoPending)?;
        let proof_ok = gqid::verify(
            &self.identity.j,
            &pending.challenge,
            &Response(msg.response.clone()),
            &pending.commitment,
            &self.params,
        );
        if !proof_ok {
            return Err(RejectReason::BadProof);
        }
        open(&msg.sealed, &pending.key_material).ok_or(RejectReason::BadTag)
    }
}

/// Encrypt-then-tag under the puzzle's 32-byte key material: the ciphertext
/// is the hash-keystream XOR of `m` under `H(FX || "enc")`, and the 32-byte
/// tag is `H(H(FX || "mac") || c)`.
pub fn seal(message: &[u8], key_material: &[u8; 32]) -> Vec<u8> {
    let ciphertext = puzzle::stream_xor(message, &subkey(key_material, b"enc"));
    let mut sealed = ciphertext;
    let tag = tag_for(key_material, &sealed);
    sealed.extend_from_slice(&tag);
    sealed
}

/// Inverse of [`seal`]. The tag is checked before anything is decrypted;
/// `None` means the tag did not verify.
pub fn open(sealed: &[u8], key_material: &[u8; 32]) -> Option<Vec<u8>> {
    if sealed.len() < 32 {
        return None;
    }
    let (ciphertext, tag) = sealed.split_at(sealed.len() - 32);
    if tag_for(key_material, ciphertext) != tag[..] {
        return None;
    }
    Some(puzzle::stream_xor(ciphertext, &subkey(key_material, b"enc")))
}

fn subkey(key_material: &[u8; 32], label: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(key_material);
    h.update(label);
    h.finalize().into()
}

fn tag_for(key_material: &[u8; 32], ciphertext: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(subkey(key_material, b"mac"));
    h.update(ciphertext);
    h.finalize().into()
}
