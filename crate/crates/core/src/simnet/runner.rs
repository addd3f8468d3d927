//! Scenario execution.
//!
//! A runner turns a parsed scenario into protocol traffic on a fresh
//! simulated network: it creates the bootstrap, issues credentials, drives
//! conversations message by message, lets adversaries interfere, and
//! evaluates every `expect` line against what actually happened. All
//! randomness flows from the scenario seed, so two runs of the same script
//! produce byte-identical transcripts, chat logs, and audit logs.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bootstrap::Bootstrap;
use crate::chatapp::{ChatLog, Conversation};
use crate::error::{Error, Result};
use crate::gqid::{self, ChallengeRange, PublicParams};
use crate::puzzle::{self, PuzzleParams};
use crate::session::{
    seal, AuthenticatedMessage, ConversationId, InitiatorSession, ProtocolConfig,
    ResponderSession,
};
use crate::simnet::script::{self, AttackKind, Directive, Expectation, Scenario};
use crate::simnet::{
    Address, AdversaryKind, FrameTweak, Network, Role, SubstitutionRule, TranscriptRecord,
};
use crate::wire::{self, WireMessage};

/// Scenario-wide knobs, set by `param` lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioParams {
    pub modulus_bits: u32,
    pub public_exp: u64,
    pub puzzle_count: u32,
    pub key_bits: u32,
    pub challenge_range: ChallengeRange,
    pub gq_rounds: u32,
    pub reuse_puzzles: bool,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            modulus_bits: 64,
            public_exp: 65537,
            puzzle_count: 8,
            key_bits: 8,
            challenge_range: ChallengeRange::Modulus,
            gq_rounds: 1,
            reuse_puzzles: false,
        }
    }
}

impl ScenarioParams {
    fn apply(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let bad = |message: String| Error::ScenarioParse { line, message };
        match key {
            "modulus-bits" => {
                let bits: u32 = value
                    .parse()
                    .map_err(|_| bad(format!("modulus-bits: not a number `{value}`")))?;
                if !(16..=2048).contains(&bits) {
                    return Err(bad(format!("modulus-bits must be in [16, 2048], got {bits}")));
                }
                self.modulus_bits = bits;
            }
            "public-exp" => {
                let exp: u64 = value
                    .parse()
                    .map_err(|_| bad(format!("public-exp: not a number `{value}`")))?;
                if exp < 3 || exp % 2 == 0 {
                    return Err(bad(format!("public-exp must be odd and >= 3, got {exp}")));
                }
                self.public_exp = exp;
            }
            "puzzle-count" => {
                let count: u32 = value
                    .parse()
                    .map_err(|_| bad(format!("puzzle-count: not a number `{value}`")))?;
                if count < 1 {
                    return Err(bad("puzzle-count must be at least 1".into()));
                }
                self.puzzle_count = count;
            }
            "key-bits" => {
                let bits: u32 = value
                    .parse()
                    .map_err(|_| bad(format!("key-bits: not a number `{value}`")))?;
                if bits > puzzle::MAX_KEY_BITS {
                    return Err(bad(format!(
                        "key-bits must be at most {}, got {bits}",
                        puzzle::MAX_KEY_BITS
                    )));
                }
                self.key_bits = bits;
            }
            "challenge-range" => {
                self.challenge_range = match value {
                    "modulus" => ChallengeRange::Modulus,
                    "below-exp" => ChallengeRange::BelowPublicExp,
                    other => {
                        return Err(bad(format!(
                            "challenge-range must be `modulus` or `below-exp`, got `{other}`"
                        )))
                    }
                };
            }
            "gq-rounds" => {
                let rounds: u32 = value
                    .parse()
                    .map_err(|_| bad(format!("gq-rounds: not a number `{value}`")))?;
                if !(1..=16).contains(&rounds) {
                    return Err(bad(format!("gq-rounds must be in [1, 16], got {rounds}")));
                }
                self.gq_rounds = rounds;
            }
            "reuse-puzzles" => {
                self.reuse_puzzles = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(bad(format!(
                            "reuse-puzzles must be `true` or `false`, got `{other}`"
                        )))
                    }
                };
            }
            other => return Err(bad(format!("unknown param `{other}`"))),
        }
        Ok(())
    }

    fn protocol_config(&self) -> Result<ProtocolConfig> {
        Ok(ProtocolConfig {
            puzzle: PuzzleParams::new(self.puzzle_count, self.key_bits)?,
            challenge: self.challenge_range.clone(),
            reuse_puzzles: self.reuse_puzzles,
        })
    }
}

/// What the most recent protocol exchange came to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    Rejected(String),
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Accepted => f.write_str("accept"),
            Outcome::Rejected(reason) => write!(f, "reject:{reason}"),
        }
    }
}

/// One evaluated `expect` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectResult {
    pub line: usize,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

/// Byte strings that must never show up in an adversary's captures.
#[derive(Debug, Clone, Default)]
pub struct SecretInventory {
    pub sigmas: Vec<Vec<u8>>,
    pub nonces: Vec<Vec<u8>>,
    pub f_secrets: Vec<Vec<u8>>,
    pub key_material: Vec<Vec<u8>>,
}

impl SecretInventory {
    pub fn all(&self) -> impl Iterator<Item = &Vec<u8>> {
        self.sigmas
            .iter()
            .chain(&self.nonces)
            .chain(&self.f_secrets)
            .chain(&self.key_material)
    }
}

/// Everything a finished run exposes for inspection.
#[derive(Debug)]
pub struct RunReport {
    pub name: String,
    pub seed: u64,
    pub transcript: Vec<TranscriptRecord>,
    pub expects: Vec<ExpectResult>,
    /// Per conversation, in creation order: id and chat log lines.
    pub logs: Vec<(ConversationId, Vec<String>)>,
    pub audit: Vec<String>,
    /// Total bytes of honest puzzle-set frames.
    pub puzzle_bytes: u64,
    /// Total plaintext bytes of accepted private messages.
    pub message_bytes: u64,
    pub adversary_memory: Vec<(String, Vec<Vec<u8>>)>,
    pub secret_inventory: SecretInventory,
    /// (conversation, bound ID, initiating user) for every started
    /// conversation.
    pub bound_identities: Vec<(ConversationId, Vec<u8>, String)>,
    pub user_names: Vec<String>,
    pub bootstrap: Bootstrap,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.expects.iter().all(|e| e.pass)
    }

    pub fn transcript_lines(&self) -> Vec<String> {
        self.transcript.iter().map(TranscriptRecord::line).collect()
    }

    /// Puzzle overhead per message byte; `None` when no message bytes were
    /// accepted.
    pub fn size_ratio(&self) -> Option<f64> {
        if self.message_bytes == 0 {
            return None;
        }
        Some(self.puzzle_bytes as f64 / self.message_bytes as f64)
    }
}

struct NodeHandle {
    address: Address,
    adversary: Option<AdversaryKind>,
    credentials: Vec<crate::gqid::Credential>,
    conversations_started: usize,
}

/// Parse and execute a scenario in one go.
pub fn run_scenario(name: &str, text: &str) -> Result<RunReport> {
    let scenario = script::parse(text)?;
    let mut runner = Runner::new(&scenario)?;
    runner.execute(&scenario)?;
    Ok(runner.into_report(name, scenario.seed))
}

fn run_err(line: usize, e: Error) -> Error {
    match e {
        Error::ScenarioRun { .. } | Error::ScenarioParse { .. } => e,
        other => Error::ScenarioRun {
            line,
            message: other.to_string(),
        },
    }
}

fn text_of(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

pub struct Runner {
    rng: ChaCha20Rng,
    net: Network,
    bootstrap: Bootstrap,
    gq: PublicParams,
    params: ScenarioParams,
    nodes: BTreeMap<String, NodeHandle>,
    /// Last known addresses of departed nodes, for spoof targeting.
    gone: HashMap<String, Address>,
    routes: HashMap<(String, String), Vec<String>>,
    conversations: Vec<Conversation>,
    last_outcome: Option<Outcome>,
    last_conv: Option<usize>,
    expects: Vec<ExpectResult>,
    puzzle_bytes: u64,
    message_bytes: u64,
}

impl Runner {
    pub fn new(scenario: &Scenario) -> Result<Runner> {
        let mut params = ScenarioParams::default();
        for (line, key, value) in &scenario.params {
            params.apply(*line, key, value)?;
        }
        let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
        let keys = gqid::keygen(
            params.modulus_bits,
            BigUint::from(params.public_exp),
            &mut rng,
        )
        .map_err(|e| run_err(0, e))?;
        let bootstrap = Bootstrap::new(keys);
        let gq = bootstrap.params();
        let mut net = Network::new();
        net.add_node(Role::Bootstrap, &mut rng);
        Ok(Runner {
            rng,
            net,
            bootstrap,
            gq,
            params,
            nodes: BTreeMap::new(),
            gone: HashMap::new(),
            routes: HashMap::new(),
            conversations: Vec::new(),
            last_outcome: None,
            last_conv: None,
            expects: Vec::new(),
            puzzle_bytes: 0,
            message_bytes: 0,
        })
    }

    pub fn execute(&mut self, scenario: &Scenario) -> Result<()> {
        for (line, directive) in &scenario.directives {
            self.step(*line, directive)?;
        }
        Ok(())
    }

    fn step(&mut self, line: usize, directive: &Directive) -> Result<()> {
        match directive {
            Directive::Node { name, adversary } => self.add_node(line, name, *adversary),
            Directive::Remove { name } => self.remove_node(line, name),
            Directive::Spoof { name, victim } => self.spoof(line, name, victim),
            Directive::Path { names } => {
                let key = (
                    names.first().expect("parser enforces length").clone(),
                    names.last().expect("parser enforces length").clone(),
                );
                self.routes.insert(key, names.clone());
                Ok(())
            }
            Directive::Issue { name, count } => self.issue(line, name, *count),
            Directive::Conv { from, to, variant } => self.declare_conv(line, from, to, *variant),
            Directive::Spriv { from, to, text } => self.spriv(line, from, to, text),
            Directive::Sall { from, text } => self.sall(line, from, text),
            Directive::Attack { kind, node } => self.attack(line, *kind, node),
            Directive::Expect(expectation) => {
                self.evaluate_expect(line, expectation);
                Ok(())
            }
        }
    }

    fn handle(&self, line: usize, name: &str) -> Result<&NodeHandle> {
        self.nodes
            .get(name)
            .ok_or_else(|| run_err(line, Error::UnknownNode(name.to_string())))
    }

    fn add_node(&mut self, line: usize, name: &str, adversary: Option<AdversaryKind>) -> Result<()> {
        if self.nodes.contains_key(name) {
            return Err(Error::ScenarioRun {
                line,
                message: format!("node `{name}` already exists"),
            });
        }
        let role = adversary.map(Role::Adversary).unwrap_or(Role::Honest);
        let address = self.net.add_node(role, &mut self.rng);
        self.gone.remove(name);
        self.nodes.insert(
            name.to_string(),
            NodeHandle {
                address,
                adversary,
                credentials: Vec::new(),
                conversations_started: 0,
            },
        );
        Ok(())
    }

    fn remove_node(&mut self, line: usize, name: &str) -> Result<()> {
        let handle = self
            .nodes
            .remove(name)
            .ok_or_else(|| run_err(line, Error::UnknownNode(name.to_string())))?;
        self.net
            .remove_node(handle.address)
            .map_err(|e| run_err(line, e))?;
        self.gone.insert(name.to_string(), handle.address);
        Ok(())
    }

    fn spoof(&mut self, line: usize, name: &str, victim: &str) -> Result<()> {
        if self.nodes.contains_key(victim) {
            return Err(run_err(line, Error::AddressInUse));
        }
        let target = *self.gone.get(victim).ok_or_else(|| Error::ScenarioRun {
            line,
            message: format!("victim `{victim}` was never on the network"),
        })?;
        let handle = self.handle(line, name)?;
        if handle.adversary.is_none() {
            return Err(Error::ScenarioRun {
                line,
                message: format!("`{name}` is not an adversary"),
            });
        }
        let old = handle.address;
        self.net.move_node(old, target).map_err(|e| run_err(line, e))?;
        self.nodes.get_mut(name).expect("checked above").address = target;
        Ok(())
    }

    fn issue(&mut self, line: usize, name: &str, count: u32) -> Result<()> {
        self.handle(line, name)?;
        let credentials = self
            .bootstrap
            .issue_batch(name, count, &mut self.rng)
            .map_err(|e| run_err(line, e))?;
        self.nodes
            .get_mut(name)
            .expect("checked above")
            .credentials
            .extend(credentials);
        Ok(())
    }

    fn declare_conv(&mut self, line: usize, from: &str, to: &str, variant: u8) -> Result<()> {
        self.handle(line, from)?;
        self.handle(line, to)?;
        if self.find_conv(from, to).is_some() {
            return Err(Error::ScenarioRun {
                line,
                message: format!("conversation {from} -> {to} already declared"),
            });
        }
        self.conversations
            .push(Conversation::declared(from, to, variant));
        Ok(())
    }

    fn find_conv(&self, from: &str, to: &str) -> Option<usize> {
        self.conversations
            .iter()
            .position(|c| c.initiator_name == from && c.responder_name == to)
    }

    /// The scripted route between two names, defaulting to a direct hop.
    /// A route declared one way serves the reverse direction reversed.
    fn route(&self, from: &str, to: &str) -> Vec<String> {
        if let Some(names) = self.routes.get(&(from.to_string(), to.to_string())) {
            return names.clone();
        }
        if let Some(names) = self.routes.get(&(to.to_string(), from.to_string())) {
            let mut reversed = names.clone();
            reversed.reverse();
            return reversed;
        }
        vec![from.to_string(), to.to_string()]
    }

    fn send_frame(&mut self, line: usize, from: &str, to: &str, frame: &[u8]) -> Result<Vec<u8>> {
        let names = self.route(from, to);
        let mut path = Vec::with_capacity(names.len());
        for name in &names {
            path.push(self.handle(line, name)?.address);
        }
        self.net.send_via(&path, frame).map_err(|e| run_err(line, e))
    }

    fn spriv(&mut self, line: usize, from: &str, to: &str, text: &str) -> Result<()> {
        self.handle(line, from)?;
        self.handle(line, to)?;
        match self.find_conv(from, to) {
            Some(idx) => {
                let started = self.conversations[idx].started();
                let outcome = if started {
                    self.with_conv(idx, |runner, conv| runner.drive_round(line, conv, text))?
                } else {
                    self.with_conv(idx, |runner, conv| runner.drive_init(line, conv, text))?
                };
                self.last_conv = Some(idx);
                self.last_outcome = Some(outcome);
                Ok(())
            }
            None => {
                let is_adversary = self.handle(line, from)?.adversary.is_some();
                if !is_adversary {
                    return Err(Error::ScenarioRun {
                        line,
                        message: format!("no conversation declared between {from} and {to}"),
                    });
                }
                let idx = self
                    .conversations
                    .iter()
                    .rposition(|c| c.responder_name == to && c.started())
                    .ok_or_else(|| Error::ScenarioRun {
                        line,
                        message: format!("no conversation at {to} to intrude on"),
                    })?;
                let outcome =
                    self.with_conv(idx, |runner, conv| runner.drive_intrusion(line, conv, from, text))?;
                self.last_conv = Some(idx);
                self.last_outcome = Some(outcome);
                Ok(())
            }
        }
    }

    /// Temporarily take a conversation out of the table so the closure can
    /// borrow the runner mutably alongside it.
    fn with_conv<T>(
        &mut self,
        idx: usize,
        f: impl FnOnce(&mut Runner, &mut Conversation) -> Result<T>,
    ) -> Result<T> {
        let mut conv = std::mem::replace(
            &mut self.conversations[idx],
            Conversation::declared("", "", 1),
        );
        let result = f(self, &mut conv);
        self.conversations[idx] = conv;
        result
    }

    /// First SPRIV of a conversation: build and deliver the init frame.
    fn drive_init(&mut self, line: usize, conv: &mut Conversation, text: &str) -> Result<Outcome> {
        let config = self.params.protocol_config().map_err(|e| run_err(line, e))?;
        let from = conv.initiator_name.clone();
        let handle = self.nodes.get_mut(&from).expect("caller checked");
        if handle.credentials.is_empty() {
            return Err(run_err(line, Error::NoCredential(from)));
        }
        // A node spreads its conversations over its issued credentials so
        // they cannot be linked by ID; once exhausted, the last one repeats.
        let pick = handle
            .conversations_started
            .min(handle.credentials.len() - 1);
        let credential = handle.credentials[pick].clone();
        handle.conversations_started += 1;

        let initiated = InitiatorSession::initiate(
            conv.variant,
            credential,
            text.as_bytes(),
            Some(&mut self.bootstrap),
            config.clone(),
            self.gq.clone(),
            &mut self.rng,
        );
        let (session, init) = match initiated {
            Ok(pair) => pair,
            Err(e) => return Ok(Outcome::Rejected(e.reason_tag().to_string())),
        };
        let frame = WireMessage::Init(init).encode();
        let delivered = self.send_frame(line, &conv.initiator_name, &conv.responder_name, &frame)?;
        let decoded = match WireMessage::decode(&delivered) {
            Ok(WireMessage::Init(msg)) => msg,
            _ => return Ok(Outcome::Rejected("malformed".to_string())),
        };
        match ResponderSession::accept(&decoded, self.gq.clone(), Some(&self.bootstrap), config) {
            Ok((responder, first)) => {
                let mut log = ChatLog::new(responder.conversation_id());
                log.append(
                    self.net.current_step(),
                    crate::chatapp::Direction::In,
                    &text_of(&first),
                );
                self.message_bytes += first.len() as u64;
                conv.initiator = Some(session);
                conv.responder = Some(responder);
                conv.log = Some(log);
                Ok(Outcome::Accepted)
            }
            Err(e) => Ok(Outcome::Rejected(e.reason_tag().to_string())),
        }
    }

    /// A later SPRIV: one puzzle-keyed GQ round per configured repetition,
    /// the message itself riding on the final round.
    fn drive_round(&mut self, line: usize, conv: &mut Conversation, text: &str) -> Result<Outcome> {
        let rounds = self.params.gq_rounds;
        for round in 1..=rounds {
            let real = round == rounds;
            let payload: &[u8] = if real { text.as_bytes() } else { b"" };
            let initiator = conv.initiator.as_mut().ok_or_else(|| Error::ScenarioRun {
                line,
                message: "conversation has no initiator state".into(),
            })?;
            let set_frame = initiator.begin_message(&mut self.rng).map_err(|e| run_err(line, e))?;
            self.puzzle_bytes += set_frame.len() as u64;
            let delivered =
                self.send_frame(line, &conv.initiator_name, &conv.responder_name, &set_frame)?;

            let responder = conv.responder.as_mut().expect("started conversation");
            let challenge = match responder.make_challenge(&delivered, &mut self.rng) {
                Ok(ch) => ch,
                Err(e) => return Ok(Outcome::Rejected(e.reason_tag().to_string())),
            };
            let ch_frame = WireMessage::Challenge(challenge).encode();
            let delivered =
                self.send_frame(line, &conv.responder_name, &conv.initiator_name, &ch_frame)?;
            let challenge = match WireMessage::decode(&delivered) {
                Ok(WireMessage::Challenge(ch)) => ch,
                _ => return Ok(Outcome::Rejected("malformed".to_string())),
            };

            let initiator = conv.initiator.as_mut().expect("checked above");
            let authenticated = match initiator.answer_challenge(&challenge, payload) {
                Ok(am) => am,
                Err(e) => return Ok(Outcome::Rejected(e.reason_tag().to_string())),
            };
            let am_frame = WireMessage::Authenticated(authenticated).encode();
            let delivered =
                self.send_frame(line, &conv.initiator_name, &conv.responder_name, &am_frame)?;
            let authenticated = match WireMessage::decode(&delivered) {
                Ok(WireMessage::Authenticated(am)) => am,
                _ => return Ok(Outcome::Rejected("malformed".to_string())),
            };

            let responder = conv.responder.as_mut().expect("started conversation");
            match responder.verify_and_open(&authenticated) {
                Ok(message) => {
                    if real {
                        conv.log_accept(self.net.current_step(), &text_of(&message));
                        self.message_bytes += message.len() as u64;
                    }
                }
                Err(reason) => return Ok(Outcome::Rejected(reason.to_string())),
            }
        }
        Ok(Outcome::Accepted)
    }

    /// An adversary tries to continue someone else's conversation. It can
    /// build well-formed puzzles and knows their contents, but without the
    /// conversation's sigma it can only guess the GQ response.
    fn drive_intrusion(
        &mut self,
        line: usize,
        conv: &mut Conversation,
        intruder: &str,
        text: &str,
    ) -> Result<Outcome> {
        let config = self.params.protocol_config().map_err(|e| run_err(line, e))?;
        let mut f_secret = [0u8; 32];
        self.rng.fill(&mut f_secret);
        let (set, secrets) =
            puzzle::make_puzzle_set(&config.puzzle, &self.gq, &f_secret, &mut self.rng)
                .map_err(|e| run_err(line, e))?;
        let set_frame = puzzle::encode_puzzle_set(&set).map_err(|e| run_err(line, e))?;
        let delivered = self.send_frame(line, intruder, &conv.responder_name, &set_frame)?;

        let responder = conv.responder.as_mut().expect("caller picked a started conversation");
        let challenge = match responder.make_challenge(&delivered, &mut self.rng) {
            Ok(ch) => ch,
            Err(e) => return Ok(Outcome::Rejected(e.reason_tag().to_string())),
        };
        // The intruder knows the key material for the puzzle it built, so
        // the seal will open; only the proof can fail.
        let key_material = secrets
            .iter()
            .find(|s| s.puzzle_id == challenge.puzzle_id)
            .map(|s| s.key_material)
            .unwrap_or([0u8; 32]);
        let guessed = self
            .rng
            .gen_biguint_range(&BigUint::one(), &self.gq.modulus);
        let forged = AuthenticatedMessage {
            conversation_id: challenge.conversation_id,
            response: guessed,
            sealed: seal(text.as_bytes(), &key_material),
        };
        let frame = WireMessage::Authenticated(forged).encode();
        let delivered = self.send_frame(line, intruder, &conv.responder_name, &frame)?;
        let authenticated = match WireMessage::decode(&delivered) {
            Ok(WireMessage::Authenticated(am)) => am,
            _ => return Ok(Outcome::Rejected("malformed".to_string())),
        };
        let responder = conv.responder.as_mut().expect("checked above");
        match responder.verify_and_open(&authenticated) {
            Ok(message) => {
                conv.log_accept(self.net.current_step(), &text_of(&message));
                self.message_bytes += message.len() as u64;
                Ok(Outcome::Accepted)
            }
            Err(reason) => Ok(Outcome::Rejected(reason.to_string())),
        }
    }

    fn sall(&mut self, line: usize, from: &str, text: &str) -> Result<()> {
        let sender = self.handle(line, from)?.address;
        let frame = WireMessage::Broadcast(text.as_bytes().to_vec()).encode();
        let recipients: Vec<Address> = self
            .nodes
            .values()
            .map(|h| h.address)
            .filter(|a| *a != sender)
            .collect();
        for to in recipients {
            self.net
                .send_via(&[sender, to], &frame)
                .map_err(|e| run_err(line, e))?;
        }
        Ok(())
    }

    fn attack(&mut self, line: usize, kind: AttackKind, name: &str) -> Result<()> {
        let handle = self.handle(line, name)?;
        if handle.adversary.is_none() {
            return Err(Error::ScenarioRun {
                line,
                message: format!("`{name}` is not an adversary"),
            });
        }
        let address = handle.address;
        match kind {
            AttackKind::Replay => self.replay_attack(line, name, address),
            AttackKind::TamperSealed => {
                self.net
                    .node_mut(address)
                    .map_err(|e| run_err(line, e))?
                    .arm(SubstitutionRule {
                        tag: wire::TAG_AUTHENTICATED,
                        tweak: FrameTweak::FlipSealedByte { index: 0 },
                    });
                Ok(())
            }
            AttackKind::TamperMessage => {
                self.net
                    .node_mut(address)
                    .map_err(|e| run_err(line, e))?
                    .arm(SubstitutionRule {
                        tag: wire::TAG_INIT,
                        tweak: FrameTweak::FlipFirstMessageByte { index: 0 },
                    });
                Ok(())
            }
            AttackKind::SwapId => {
                let id = self
                    .nodes
                    .get(name)
                    .and_then(|h| h.credentials.first())
                    .map(|c| c.identity.id.clone())
                    .ok_or_else(|| Error::ScenarioRun {
                        line,
                        message: format!("`{name}` holds no credential to swap in"),
                    })?;
                self.net
                    .node_mut(address)
                    .map_err(|e| run_err(line, e))?
                    .arm(SubstitutionRule {
                        tag: wire::TAG_INIT,
                        tweak: FrameTweak::ReplaceInitId { id },
                    });
                Ok(())
            }
        }
    }

    /// Re-inject the attacker's most recently captured authenticated
    /// message toward its original destination.
    fn replay_attack(&mut self, line: usize, name: &str, address: Address) -> Result<()> {
        let captured = self
            .net
            .node(address)
            .map_err(|e| run_err(line, e))?
            .captured
            .iter()
            .rev()
            .find(|f| f.first() == Some(&wire::TAG_AUTHENTICATED))
            .cloned()
            .ok_or_else(|| Error::ScenarioRun {
                line,
                message: format!("`{name}` captured no authenticated message to replay"),
            })?;
        let authenticated = match WireMessage::decode(&captured) {
            Ok(WireMessage::Authenticated(am)) => am,
            _ => {
                return Err(Error::ScenarioRun {
                    line,
                    message: "captured frame no longer decodes".into(),
                })
            }
        };
        let idx = self
            .conversations
            .iter()
            .position(|c| c.conversation_id() == Some(authenticated.conversation_id))
            .ok_or_else(|| Error::ScenarioRun {
                line,
                message: "replayed frame names an unknown conversation".into(),
            })?;
        let dest = self
            .handle(line, &self.conversations[idx].responder_name.clone())?
            .address;
        self.net
            .inject(address, dest, &captured)
            .map_err(|e| run_err(line, e))?;
        let outcome = self.with_conv(idx, |_, conv| {
            let responder = conv.responder.as_mut().expect("started conversation");
            Ok(match responder.verify_and_open(&authenticated) {
                Ok(_) => Outcome::Accepted,
                Err(reason) => Outcome::Rejected(reason.to_string()),
            })
        })?;
        self.last_conv = Some(idx);
        self.last_outcome = Some(outcome);
        Ok(())
    }

    fn evaluate_expect(&mut self, line: usize, expectation: &Expectation) {
        let (observed, pass) = match expectation {
            Expectation::Accept | Expectation::Reject(_) => {
                let observed = self
                    .last_outcome
                    .as_ref()
                    .map(|o| o.to_string())
                    .unwrap_or_else(|| "none".to_string());
                (observed.clone(), observed == expectation.to_string())
            }
            Expectation::RevokesTo(user) => match self.current_bound_id() {
                Some(id) => match self.bootstrap.revoke(&id) {
                    Some(actual) => {
                        let pass = actual == *user;
                        (format!("revokes-to:{actual}"), pass)
                    }
                    None => ("revokes-to:nobody".to_string(), false),
                },
                None => ("no-conversation".to_string(), false),
            },
        };
        self.expects.push(ExpectResult {
            line,
            expected: expectation.to_string(),
            observed,
            pass,
        });
    }

    fn current_bound_id(&self) -> Option<Vec<u8>> {
        let idx = self.last_conv?;
        self.conversations[idx].bound_id().map(<[u8]>::to_vec)
    }

    pub fn into_report(mut self, name: &str, seed: u64) -> RunReport {
        let logs = self
            .conversations
            .iter()
            .filter_map(|c| {
                c.log
                    .as_ref()
                    .map(|l| (l.conversation_id(), l.lines().to_vec()))
            })
            .collect();
        let adversary_memory = self
            .nodes
            .iter()
            .filter(|(_, h)| h.adversary.is_some())
            .map(|(name, h)| {
                let captured = self
                    .net
                    .node(h.address)
                    .map(|n| n.captured.clone())
                    .unwrap_or_default();
                (name.clone(), captured)
            })
            .collect();
        let mut inventory = SecretInventory::default();
        for conv in &self.conversations {
            if let Some(initiator) = &conv.initiator {
                inventory
                    .sigmas
                    .push(initiator.credential().sigma().to_bytes_be());
                inventory.f_secrets.push(initiator.f_secret().to_vec());
                for secret in initiator.outstanding_secrets() {
                    inventory.nonces.push(secret.nonce.to_bytes_be());
                    inventory.key_material.push(secret.key_material.to_vec());
                }
            }
        }
        inventory.sigmas.sort();
        inventory.nonces.sort();
        inventory.f_secrets.sort();
        inventory.key_material.sort();
        let bound_identities = self
            .conversations
            .iter()
            .filter(|c| c.started())
            .map(|c| {
                (
                    c.conversation_id().expect("started"),
                    c.bound_id().expect("started").to_vec(),
                    c.initiator_name.clone(),
                )
            })
            .collect();
        let transcript = std::mem::take(&mut self.net).transcript().to_vec();
        RunReport {
            name: name.to_string(),
            seed,
            transcript,
            expects: self.expects,
            logs,
            audit: self.bootstrap.audit_log().to_vec(),
            puzzle_bytes: self.puzzle_bytes,
            message_bytes: self.message_bytes,
            adversary_memory,
            secret_inventory: inventory,
            bound_identities,
            user_names: self.bootstrap.users(),
            bootstrap: self.bootstrap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> RunReport {
        run_scenario("test", text).unwrap()
    }

    const HONEST: &str = r#"
seed 11
param puzzle-count 2
param key-bits 4
node alice
node bobby
issue alice 1
conv alice bobby variant=1
spriv alice bobby "hi there"
expect accept
spriv alice bobby "second message"
expect accept
expect revokes-to:alice
"#;

    #[test]
    fn honest_conversation_accepts_and_logs() {
        let report = run(HONEST);
        assert!(report.all_pass(), "{:#?}", report.expects);
        assert_eq!(report.logs.len(), 1);
        let (conv_id, lines) = &report.logs[0];
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains(&format!("IN {conv_id} hi there")));
        assert!(lines[1].contains(&format!("IN {conv_id} second message")));
        assert_eq!(report.message_bytes, 8 + 14);
        assert!(report.puzzle_bytes > 0);
        assert!(report.audit.iter().any(|l| l.starts_with("ISSUE alice ")));
        assert!(report.audit.iter().any(|l| l.starts_with("REVOKE ")));
    }

    #[test]
    fn runs_are_deterministic() {
        let a = run(HONEST);
        let b = run(HONEST);
        assert_eq!(a.transcript_lines(), b.transcript_lines());
        assert_eq!(a.logs, b.logs);
        assert_eq!(a.audit, b.audit);
    }

    #[test]
    fn seed_changes_the_transcript() {
        let a = run(HONEST);
        let b = run(&HONEST.replace("seed 11", "seed 12"));
        assert_ne!(a.transcript_lines(), b.transcript_lines());
    }

    #[test]
    fn variant2_and_variant3_run_end_to_end() {
        for variant in [2, 3] {
            let text = HONEST.replace("variant=1", &format!("variant={variant}"));
            let report = run(&text);
            assert!(report.all_pass(), "variant {variant}: {:#?}", report.expects);
        }
        let report = run(&HONEST.replace("variant=1", "variant=2"));
        assert!(report.audit.iter().any(|l| l.starts_with("REGISTER ")));
        let report = run(&HONEST.replace("variant=1", "variant=3"));
        assert!(report.audit.iter().any(|l| l.starts_with("SIGN ")));
    }

    #[test]
    fn multihop_path_is_honored() {
        let text = r#"
seed 3
param puzzle-count 1
param key-bits 2
node alice
node relay
node bobby
path alice relay bobby
issue alice 1
conv alice bobby variant=1
spriv alice bobby "via relay"
expect accept
"#;
        let report = run(text);
        assert!(report.all_pass(), "{:#?}", report.expects);
        // init leg: send + forward through the relay
        assert_eq!(report.transcript[0].action, "send");
        assert_eq!(report.transcript[1].action, "forward");
    }

    #[test]
    fn adversary_intrusion_is_rejected_as_bad_proof() {
        let text = r#"
seed 5
param puzzle-count 2
param key-bits 4
node alice
node bobby
node mallet adversary=spoof
issue alice 1
conv alice bobby variant=1
spriv alice bobby "mine"
expect accept
spriv mallet bobby "now mine"
expect reject:bad-proof
"#;
        let report = run(text);
        assert!(report.all_pass(), "{:#?}", report.expects);
        // the hijack attempt leaves no trace in the chat log
        assert_eq!(report.logs[0].1.len(), 1);
    }

    #[test]
    fn spoof_takes_the_victims_address_but_not_the_conversation() {
        let text = r#"
seed 6
param puzzle-count 2
param key-bits 4
node alice
node bobby
node mallet adversary=spoof
issue alice 1
conv alice bobby variant=1
spriv alice bobby "greetings"
expect accept
remove alice
spoof mallet alice
spriv mallet bobby "still me"
expect reject:bad-proof
"#;
        let report = run(text);
        assert!(report.all_pass(), "{:#?}", report.expects);
        // the intrusion frames really come from alice's old address
        let first_addr = report.transcript[0].from;
        let last = report.transcript.last().unwrap();
        assert_eq!(last.from, first_addr);
    }

    #[test]
    fn replay_attack_is_rejected() {
        let text = r#"
seed 7
param puzzle-count 2
param key-bits 4
node alice
node relay adversary=replay
node bobby
path alice relay bobby
issue alice 1
conv alice bobby variant=1
spriv alice bobby "opening"
spriv alice bobby "to be replayed"
expect accept
attack replay relay
expect reject:no-pending
"#;
        let report = run(text);
        assert!(report.all_pass(), "{:#?}", report.expects);
        assert_eq!(report.transcript.last().unwrap().action, "replay");
        assert_eq!(report.logs[0].1.len(), 2, "replay adds no log line");
    }

    #[test]
    fn tampered_seal_is_rejected() {
        let text = r#"
seed 8
param puzzle-count 2
param key-bits 4
node alice
node relay adversary=mitm
node bobby
path alice relay bobby
issue alice 1
conv alice bobby variant=1
spriv alice bobby "opening"
expect accept
attack tamper-sealed relay
spriv alice bobby "precious"
expect reject:bad-tag
spriv alice bobby "back to normal"
expect accept
"#;
        let report = run(text);
        assert!(report.all_pass(), "{:#?}", report.expects);
    }

    #[test]
    fn variant3_rejects_tampered_first_message_and_swapped_id() {
        let text = r#"
seed 9
param puzzle-count 1
param key-bits 2
node alice
node relay adversary=mitm
node bobby
node carla
path alice relay bobby
issue alice 2
issue relay 1
attack tamper-message relay
conv alice bobby variant=3
spriv alice bobby "signed opener"
expect reject:invalid-signature
attack swap-id relay
spriv alice bobby "swapped opener"
expect reject:invalid-signature
spriv alice bobby "clean opener"
expect accept
expect revokes-to:alice
"#;
        let report = run(text);
        assert!(report.all_pass(), "{:#?}", report.expects);
    }

    #[test]
    fn sall_reaches_everyone_but_the_sender() {
        let text = r#"
seed 10
node alice
node bobby
node carla
sall alice "hello all"
"#;
        let report = run(text);
        assert_eq!(report.transcript.len(), 2);
        for record in &report.transcript {
            assert_eq!(record.action, "send");
            assert_eq!(record.frame[0], wire::TAG_BROADCAST);
        }
        assert_eq!(report.message_bytes, 0);
        assert!(report.size_ratio().is_none());
    }

    #[test]
    fn eavesdropper_memory_never_contains_protocol_secrets() {
        let text = r#"
seed 13
param puzzle-count 4
param key-bits 6
node alice
node spy adversary=eavesdrop
node bobby
path alice spy bobby
issue alice 1
conv alice bobby variant=1
spriv alice bobby "opening"
spriv alice bobby "first secret round"
spriv alice bobby "second secret round"
expect accept
"#;
        let report = run(text);
        assert!(report.all_pass());
        let (_, captured) = &report.adversary_memory[0];
        assert!(!captured.is_empty());
        for needle in report.secret_inventory.all() {
            for frame in captured {
                assert!(
                    !frame.windows(needle.len()).any(|w| w == &needle[..]),
                    "secret bytes leaked into a captured frame"
                );
            }
        }
        for (_, _, user) in &report.bound_identities {
            for frame in captured {
                assert!(
                    !frame
                        .windows(user.len())
                        .any(|w| w == user.as_bytes()),
                    "user name leaked into a captured frame"
                );
            }
        }
    }

    #[test]
    fn scenario_errors_carry_the_offending_line() {
        let text = "seed 1\nnode alice\nspriv alice ghost \"x\"\n";
        match run_scenario("test", text).unwrap_err() {
            Error::ScenarioRun { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "seed 1\nnode alice\nnode bobby\nconv alice bobby variant=1\nspriv alice bobby \"x\"\n";
        match run_scenario("test", text).unwrap_err() {
            Error::ScenarioRun { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("no credential"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn failed_expects_are_reported_not_fatal() {
        let text = r#"
seed 2
param puzzle-count 1
param key-bits 2
node alice
node bobby
issue alice 1
conv alice bobby variant=1
spriv alice bobby "hello"
expect reject:bad-proof
"#;
        let report = run(text);
        assert!(!report.all_pass());
        assert_eq!(report.expects.len(), 1);
        assert_eq!(report.expects[0].observed, "accept");
        assert_eq!(report.expects[0].expected, "reject:bad-proof");
    }

    #[test]
    fn gq_rounds_param_repeats_the_identification() {
        let text = r#"
seed 14
param puzzle-count 1
param key-bits 2
param gq-rounds 3
node alice
node bobby
issue alice 1
conv alice bobby variant=1
spriv alice bobby "opening"
spriv alice bobby "triple-checked"
expect accept
"#;
        let report = run(text);
        assert!(report.all_pass(), "{:#?}", report.expects);
        // init (1 record) + 3 rounds x 3 legs
        assert_eq!(report.transcript.len(), 1 + 9);
        // the message is logged once
        assert_eq!(report.logs[0].1.len(), 2);
    }
}
