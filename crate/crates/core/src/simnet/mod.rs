//! Deterministic simulated ad-hoc network.
//!
//! Nodes hold 4-byte addresses; frames travel along explicitly scripted
//! multi-hop paths. Every hop is appended to an append-only transcript with
//! byte-exact frame copies, so whole runs can be diffed. Intermediate nodes
//! may be adversarial: they record what they forward and, when armed with a
//! substitution rule, rewrite one matching frame in flight.
//!
//! There is no clock and no loss. Determinism is the point: a scenario's
//! seed fixes every byte of the transcript.

pub mod runner;
pub mod script;

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use crate::error::{Error, Result};
use crate::session::InitPayload;
use crate::wire::WireMessage;

/// 4-byte node address, displayed as 8 hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub u32);

impl std::fmt::Display for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:08x}", self.0)
    }
}

/// Behavior of an adversarial node while frames pass through it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    /// Records traffic, forwards unchanged.
    Eavesdrop,
    /// Records traffic and applies armed substitution rules.
    Mitm,
    /// Records traffic for later re-injection.
    Replay,
    /// Records traffic; exists to take over a freed address.
    Spoof,
}

impl AdversaryKind {
    pub fn parse(s: &str) -> Option<AdversaryKind> {
        match s {
            "eavesdrop" => Some(AdversaryKind::Eavesdrop),
            "mitm" => Some(AdversaryKind::Mitm),
            "replay" => Some(AdversaryKind::Replay),
            "spoof" => Some(AdversaryKind::Spoof),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdversaryKind::Eavesdrop => "eavesdrop",
            AdversaryKind::Mitm => "mitm",
            AdversaryKind::Replay => "replay",
            AdversaryKind::Spoof => "spoof",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Honest,
    Bootstrap,
    Adversary(AdversaryKind),
}

/// One-shot in-flight frame rewrite, applied by the first adversarial hop
/// that sees a frame with the matching tag.
#[derive(Debug, Clone)]
pub struct SubstitutionRule {
    pub tag: u8,
    pub tweak: FrameTweak,
}

#[derive(Debug, Clone)]
pub enum FrameTweak {
    /// XOR 0xff into one byte of the raw frame.
    FlipRawByte { index: usize },
    /// Decode an authenticated message and corrupt one sealed byte.
    FlipSealedByte { index: usize },
    /// Decode an init and corrupt one byte of the carried first message.
    FlipFirstMessageByte { index: usize },
    /// Decode an init and substitute the identity it claims.
    ReplaceInitId { id: Vec<u8> },
}

fn apply_tweak(frame: &[u8], tweak: &FrameTweak) -> Option<Vec<u8>> {
    match tweak {
        FrameTweak::FlipRawByte { index } => {
            let mut out = frame.to_vec();
            let byte = out.get_mut(*index)?;
            *byte ^= 0xff;
            Some(out)
        }
        FrameTweak::FlipSealedByte { index } => {
            let mut msg = match WireMessage::decode(frame).ok()? {
                WireMessage::Authenticated(am) => am,
                _ => return None,
            };
            let byte = msg.sealed.get_mut(*index)?;
            *byte ^= 0xff;
            Some(WireMessage::Authenticated(msg).encode())
        }
        FrameTweak::FlipFirstMessageByte { index } => {
            let mut msg = match WireMessage::decode(frame).ok()? {
                WireMessage::Init(init) => init,
                _ => return None,
            };
            let byte = msg.first_message.get_mut(*index)?;
            *byte ^= 0xff;
            Some(WireMessage::Init(msg).encode())
        }
        FrameTweak::ReplaceInitId { id } => {
            let mut msg = match WireMessage::decode(frame).ok()? {
                WireMessage::Init(init) => init,
                _ => return None,
            };
            match &mut msg.payload {
                InitPayload::Open { id: slot } => *slot = id.clone(),
                InitPayload::Signed { id: slot, .. } => *slot = id.clone(),
                InitPayload::Registered => return None,
            }
            Some(WireMessage::Init(msg).encode())
        }
    }
}

/// A network participant. Adversaries accumulate `captured` copies of every
/// frame they forward or receive.
#[derive(Debug, Clone)]
pub struct Node {
    pub address: Address,
    pub role: Role,
    pub inbox: VecDeque<Vec<u8>>,
    pub captured: Vec<Vec<u8>>,
    pub rules: Vec<SubstitutionRule>,
}

impl Node {
    fn new(address: Address, role: Role) -> Node {
        Node {
            address,
            role,
            inbox: VecDeque::new(),
            captured: Vec::new(),
            rules: Vec::new(),
        }
    }

    pub fn is_adversary(&self) -> bool {
        matches!(self.role, Role::Adversary(_))
    }

    /// Arm a one-shot substitution rule. Only meaningful on adversaries.
    pub fn arm(&mut self, rule: SubstitutionRule) {
        self.rules.push(rule);
    }

    /// Apply and consume the first rule matching this frame's tag.
    fn rewrite(&mut self, frame: &[u8]) -> Option<Vec<u8>> {
        let tag = *frame.first()?;
        let pos = self.rules.iter().position(|r| r.tag == tag)?;
        match apply_tweak(frame, &self.rules[pos].tweak) {
            Some(out) => {
                self.rules.remove(pos);
                Some(out)
            }
            None => None,
        }
    }
}

/// One transcript record: a single hop of a frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptRecord {
    pub step: u64,
    pub from: Address,
    pub to: Address,
    pub action: &'static str,
    pub frame: Vec<u8>,
}

impl TranscriptRecord {
    pub fn line(&self) -> String {
        format!(
            "{} {} {} {} {}",
            self.step,
            self.from,
            self.to,
            self.action,
            hex::encode(&self.frame)
        )
    }
}

/// The network: an address-keyed node table plus the transcript.
#[derive(Debug, Default)]
pub struct Network {
    nodes: BTreeMap<Address, Node>,
    transcript: Vec<TranscriptRecord>,
    step: u64,
}

impl Network {
    pub fn new() -> Network {
        Network::default()
    }

    /// Join with a random unused address.
    pub fn add_node<R: Rng>(&mut self, role: Role, rng: &mut R) -> Address {
        loop {
            let address = Address(rng.gen());
            if !self.nodes.contains_key(&address) {
                self.nodes.insert(address, Node::new(address, role));
                return address;
            }
        }
    }

    /// Join at a specific address, as a spoofing node does after its victim
    /// leaves.
    pub fn add_node_at(&mut self, address: Address, role: Role) -> Result<()> {
        if self.nodes.contains_key(&address) {
            return Err(Error::AddressInUse);
        }
        self.nodes.insert(address, Node::new(address, role));
        Ok(())
    }

    pub fn remove_node(&mut self, address: Address) -> Result<Node> {
        self.nodes
            .remove(&address)
            .ok_or_else(|| Error::UnknownNode(address.to_string()))
    }

    /// Re-register an existing node at a new address, keeping its state.
    pub fn move_node(&mut self, from: Address, to: Address) -> Result<()> {
        if self.nodes.contains_key(&to) {
            return Err(Error::AddressInUse);
        }
        let mut node = self.remove_node(from)?;
        node.address = to;
        self.nodes.insert(to, node);
        Ok(())
    }

    pub fn node(&self, address: Address) -> Result<&Node> {
        self.nodes
            .get(&address)
            .ok_or_else(|| Error::UnknownNode(address.to_string()))
    }

    pub fn node_mut(&mut self, address: Address) -> Result<&mut Node> {
        self.nodes
            .get_mut(&address)
            .ok_or_else(|| Error::UnknownNode(address.to_string()))
    }

    pub fn contains(&self, address: Address) -> bool {
        self.nodes.contains_key(&address)
    }

    /// Addresses of all current nodes, in address order.
    pub fn addresses(&self) -> Vec<Address> {
        self.nodes.keys().copied().collect()
    }

    /// Carry a frame along `path`, hop by hop. Intermediate adversaries
    /// record and possibly rewrite it. Returns the bytes as delivered to
    /// the final node (also queued in its inbox).
    pub fn send_via(&mut self, path: &[Address], frame: &[u8]) -> Result<Vec<u8>> {
        if path.len() < 2 {
            return Err(Error::BrokenPath(
                "a path needs at least two nodes".into(),
            ));
        }
        for address in path {
            if !self.nodes.contains_key(address) {
                return Err(Error::BrokenPath(format!("no node at {address}")));
            }
        }
        let mut current = frame.to_vec();
        for leg in path.windows(2) {
            let (from, to) = (leg[0], leg[1]);
            let mut action = if from == path[0] { "send" } else { "forward" };
            if from != path[0] {
                let hop = self.nodes.get_mut(&from).expect("checked above");
                if hop.is_adversary() {
                    hop.captured.push(current.clone());
                    if let Some(rewritten) = hop.rewrite(&current) {
                        current = rewritten;
                        action = "tamper";
                    } else if matches!(hop.role, Role::Adversary(AdversaryKind::Eavesdrop)) {
                        action = "eavesdrop";
                    }
                }
            }
            self.step += 1;
            self.transcript.push(TranscriptRecord {
                step: self.step,
                from,
                to,
                action,
                frame: current.clone(),
            });
        }
        let dest = self.nodes.get_mut(path.last().expect("non-empty")).expect("checked");
        if dest.is_adversary() {
            dest.captured.push(current.clone());
        }
        dest.inbox.push_back(current.clone());
        Ok(current)
    }

    /// Deliver a frame directly, recorded as a replay. Used when an
    /// adversary re-injects captured traffic.
    pub fn inject(&mut self, from: Address, to: Address, frame: &[u8]) -> Result<Vec<u8>> {
        if !self.nodes.contains_key(&from) {
            return Err(Error::BrokenPath(format!("no node at {from}")));
        }
        let dest = self
            .nodes
            .get_mut(&to)
            .ok_or_else(|| Error::BrokenPath(format!("no node at {to}")))?;
        dest.inbox.push_back(frame.to_vec());
        self.step += 1;
        self.transcript.push(TranscriptRecord {
            step: self.step,
            from,
            to,
            action: "replay",
            frame: frame.to_vec(),
        });
        Ok(frame.to_vec())
    }

    pub fn transcript(&self) -> &[TranscriptRecord] {
        &self.transcript
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn add_remove_and_forced_readd() {
        let mut net = Network::new();
        let mut r = rng(1);
        let a = net.add_node(Role::Honest, &mut r);
        let b = net.add_node(Role::Honest, &mut r);
        assert_ne!(a, b);
        assert!(matches!(
            net.add_node_at(a, Role::Adversary(AdversaryKind::Spoof)),
            Err(Error::AddressInUse)
        ));
        net.remove_node(a).unwrap();
        net.add_node_at(a, Role::Adversary(AdversaryKind::Spoof)).unwrap();
        assert!(net.node(a).unwrap().is_adversary());
        assert!(matches!(net.node(Address(0x12345678)), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn honest_multihop_delivers_unchanged() {
        let mut net = Network::new();
        let mut r = rng(2);
        let a = net.add_node(Role::Honest, &mut r);
        let h1 = net.add_node(Role::Honest, &mut r);
        let h2 = net.add_node(Role::Honest, &mut r);
        let b = net.add_node(Role::Honest, &mut r);
        let frame = vec![0x05, 0, 0, 0, 2, 42, 43];
        let delivered = net.send_via(&[a, h1, h2, b], &frame).unwrap();
        assert_eq!(delivered, frame);
        assert_eq!(net.node(b).unwrap().inbox.front(), Some(&frame));
        let actions: Vec<_> = net.transcript().iter().map(|t| t.action).collect();
        assert_eq!(actions, ["send", "forward", "forward"]);
        assert!(net.transcript().iter().all(|t| t.frame == frame));
    }

    #[test]
    fn eavesdropper_records_but_does_not_modify() {
        let mut net = Network::new();
        let mut r = rng(3);
        let a = net.add_node(Role::Honest, &mut r);
        let e = net.add_node(Role::Adversary(AdversaryKind::Eavesdrop), &mut r);
        let b = net.add_node(Role::Honest, &mut r);
        let frame = vec![0x05, 0, 0, 0, 1, 9];
        let delivered = net.send_via(&[a, e, b], &frame).unwrap();
        assert_eq!(delivered, frame);
        assert_eq!(net.node(e).unwrap().captured, vec![frame.clone()]);
        assert_eq!(net.transcript()[1].action, "eavesdrop");
    }

    #[test]
    fn armed_rule_fires_once_and_only_on_its_tag() {
        let mut net = Network::new();
        let mut r = rng(4);
        let a = net.add_node(Role::Honest, &mut r);
        let m = net.add_node(Role::Adversary(AdversaryKind::Mitm), &mut r);
        let b = net.add_node(Role::Honest, &mut r);
        net.node_mut(m).unwrap().arm(SubstitutionRule {
            tag: 0x05,
            tweak: FrameTweak::FlipRawByte { index: 5 },
        });
        let other = vec![0x03u8; 8];
        assert_eq!(net.send_via(&[a, m, b], &other).unwrap(), other);
        let frame = vec![0x05, 0, 0, 0, 1, 9];
        let delivered = net.send_via(&[a, m, b], &frame).unwrap();
        assert_eq!(delivered[5], 9 ^ 0xff);
        assert_eq!(net.transcript()[3].action, "tamper");
        // the rule is spent
        assert_eq!(net.send_via(&[a, m, b], &frame).unwrap(), frame);
    }

    #[test]
    fn broken_paths_error() {
        let mut net = Network::new();
        let mut r = rng(5);
        let a = net.add_node(Role::Honest, &mut r);
        assert!(matches!(net.send_via(&[a], b"x"), Err(Error::BrokenPath(_))));
        assert!(matches!(
            net.send_via(&[a, Address(7)], b"x"),
            Err(Error::BrokenPath(_))
        ));
    }

    #[test]
    fn inject_records_a_replay_action() {
        let mut net = Network::new();
        let mut r = rng(6);
        let m = net.add_node(Role::Adversary(AdversaryKind::Replay), &mut r);
        let b = net.add_node(Role::Honest, &mut r);
        net.inject(m, b, b"frame").unwrap();
        assert_eq!(net.transcript().len(), 1);
        assert_eq!(net.transcript()[0].action, "replay");
        assert_eq!(net.node(b).unwrap().inbox.front().unwrap(), b"frame");
    }

    #[test]
    fn transcript_line_format() {
        let record = TranscriptRecord {
            step: 7,
            from: Address(1),
            to: Address(0xdeadbeef),
            action: "send",
            frame: vec![0x05, 0xff],
        };
        assert_eq!(record.line(), "7 00000001 deadbeef send 05ff");
    }

    #[test]
    fn address_allocation_is_deterministic() {
        let mut n1 = Network::new();
        let mut n2 = Network::new();
        let a1: Vec<_> = (0..10).map(|_| n1.add_node(Role::Honest, &mut rng(7))).collect();
        let a2: Vec<_> = (0..10).map(|_| n2.add_node(Role::Honest, &mut rng(7))).collect();
        // same seed restarted each call gives the same first draw
        assert_eq!(a1[0], a2[0]);
        let mut r = rng(8);
        let mut n3 = Network::new();
        let b: Vec<_> = (0..10).map(|_| n3.add_node(Role::Honest, &mut r)).collect();
        let distinct: std::collections::HashSet<_> = b.iter().collect();
        assert_eq!(distinct.len(), 10);
    }
}
