//! Chat workload on top of the protocol.
//!
//! Two primitives: SALL broadcasts a message to every node with no
//! authentication at all, and SPRIV runs a private conversation in which
//! only the holder of the initiating credential can continue. The receiver
//! of a private conversation keeps its log: one line per accepted message,
//! in acceptance order. Rejected rounds leave no trace in the log.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::session::{ConversationId, InitiatorSession, ResponderSession};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::In => "IN",
            Direction::Out => "OUT",
        })
    }
}

/// Append-only log of one conversation's accepted messages.
#[derive(Debug, Clone)]
pub struct ChatLog {
    conversation_id: ConversationId,
    lines: Vec<String>,
}

impl ChatLog {
    pub fn new(conversation_id: ConversationId) -> ChatLog {
        ChatLog {
            conversation_id,
            lines: Vec::new(),
        }
    }

    pub fn conversation_id(&self) -> ConversationId {
        self.conversation_id
    }

    pub fn append(&mut self, step: u64, direction: Direction, text: &str) {
        self.lines
            .push(format!("{step} {direction} {} {text}", self.conversation_id));
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    /// Log file name under a scenario's output directory.
    pub fn file_name(&self) -> String {
        format!("{}.log", self.conversation_id)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let mut file = std::fs::File::create(dir.join(self.file_name()))?;
        for line in &self.lines {
            writeln!(file, "{line}")?;
        }
        Ok(())
    }
}

/// One private conversation as the chat layer sees it: the two endpoints'
/// session halves and the receiver-kept log.
#[derive(Debug)]
pub struct Conversation {
    pub initiator_name: String,
    pub responder_name: String,
    pub variant: u8,
    pub initiator: Option<InitiatorSession>,
    pub responder: Option<ResponderSession>,
    pub log: Option<ChatLog>,
}

impl Conversation {
    pub fn declared(initiator_name: &str, responder_name: &str, variant: u8) -> Conversation {
        Conversation {
            initiator_name: initiator_name.to_string(),
            responder_name: responder_name.to_string(),
            variant,
            initiator: None,
            responder: None,
            log: None,
        }
    }

    pub fn started(&self) -> bool {
        self.responder.is_some()
    }

    pub fn conversation_id(&self) -> Option<ConversationId> {
        self.responder
            .as_ref()
            .map(|r| r.conversation_id())
            .or_else(|| self.initiator.as_ref().map(|i| i.conversation_id()))
    }

    /// The identity the responder bound in Phase 2, if any.
    pub fn bound_id(&self) -> Option<&[u8]> {
        self.responder.as_ref().map(|r| r.identity().id.as_slice())
    }

    /// Record an accepted message in the receiver's log.
    pub fn log_accept(&mut self, step: u64, text: &str) {
        if let Some(log) = self.log.as_mut() {
            log.append(step, Direction::In, text);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv_id() -> ConversationId {
        ConversationId::from_bytes([0xab; 16])
    }

    #[test]
    fn log_lines_follow_the_format() {
        let mut log = ChatLog::new(conv_id());
        log.append(3, Direction::In, "hello there");
        log.append(9, Direction::Out, "reply");
        assert_eq!(
            log.lines(),
            [
                format!("3 IN {} hello there", conv_id()),
                format!("9 OUT {} reply", conv_id()),
            ]
        );
        assert_eq!(log.file_name(), format!("{}.log", conv_id()));
    }

    #[test]
    fn log_writes_one_line_per_message() {
        let dir = tempfile::tempdir().unwrap();
        let mut log = ChatLog::new(conv_id());
        for i in 0..5 {
            log.append(i, Direction::In, &format!("m{i}"));
        }
        log.write_to(dir.path()).unwrap();
        let content = std::fs::read_to_string(dir.path().join(log.file_name())).unwrap();
        assert_eq!(content.lines().count(), 5);
        assert!(content.starts_with(&format!("0 IN {} m0", conv_id())));
    }

    #[test]
    fn declared_conversation_has_no_state_yet() {
        let conv = Conversation::declared("alice", "bobby", 2);
        assert!(!conv.started());
        assert_eq!(conv.conversation_id(), None);
        assert_eq!(conv.bound_id(), None);
        assert_eq!(conv.variant, 2);
    }
}
