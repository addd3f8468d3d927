//! Scenario script parser.
//!
//! Scripts are line-oriented UTF-8. `#` starts a comment (outside quotes),
//! blank lines are skipped. `seed` may appear once and `param` lines must
//! precede everything else, so a script's configuration is fixed before any
//! node exists. Message text is double-quoted and taken verbatim; there are
//! no escape sequences.
//!
//! ```text
//! seed 7
//! param key-bits 8
//! node alice
//! node bob
//! issue alice 2
//! conv alice bob variant=1
//! spriv alice bob "hello"
//! expect accept
//! ```

use crate::error::{Error, Result};
use crate::simnet::AdversaryKind;

/// A parsed scenario: the seed, the configuration pairs, and the directive
/// list with source line numbers for error reporting.
#[derive(Debug, Clone, Default)]
pub struct Scenario {
    pub seed: u64,
    pub params: Vec<(usize, String, String)>,
    pub directives: Vec<(usize, Directive)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Node {
        name: String,
        adversary: Option<AdversaryKind>,
    },
    Remove {
        name: String,
    },
    Spoof {
        name: String,
        victim: String,
    },
    Path {
        names: Vec<String>,
    },
    Issue {
        name: String,
        count: u32,
    },
    Conv {
        from: String,
        to: String,
        variant: u8,
    },
    Spriv {
        from: String,
        to: String,
        text: String,
    },
    Sall {
        from: String,
        text: String,
    },
    Attack {
        kind: AttackKind,
        node: String,
    },
    Expect(Expectation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    /// Re-inject the attacker's last captured authenticated message.
    Replay,
    /// Arm: flip a sealed byte of the next authenticated message.
    TamperSealed,
    /// Arm: flip a byte of the next init's first message.
    TamperMessage,
    /// Arm: substitute the attacker's own ID into the next init.
    SwapId,
}

impl AttackKind {
    fn parse(s: &str) -> Option<AttackKind> {
        match s {
            "replay" => Some(AttackKind::Replay),
            "tamper-sealed" => Some(AttackKind::TamperSealed),
            "tamper-message" => Some(AttackKind::TamperMessage),
            "swap-id" => Some(AttackKind::SwapId),
            _ => None,
        }
    }
}

/// What an `expect` line claims about the run so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    /// The most recent protocol outcome was an accept.
    Accept,
    /// The most recent protocol outcome was a reject with this reason tag.
    Reject(String),
    /// The current conversation's ID revokes to this user.
    RevokesTo(String),
}

impl std::fmt::Display for Expectation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expectation::Accept => f.write_str("accept"),
            Expectation::Reject(reason) => write!(f, "reject:{reason}"),
            Expectation::RevokesTo(user) => write!(f, "revokes-to:{user}"),
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::ScenarioParse {
        line,
        message: message.into(),
    }
}

/// Split a line into words and quoted strings; a `#` outside quotes ends
/// the line.
fn tokenize(line: usize, text: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '#' {
            break;
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(other) => s.push(other),
                    None => return Err(err(line, "unterminated quote")),
                }
            }
            tokens.push(s);
        } else {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || c == '#' || c == '"' {
                    break;
                }
                s.push(c);
                chars.next();
            }
            tokens.push(s);
        }
    }
    Ok(tokens)
}

fn parse_count<T: std::str::FromStr>(line: usize, what: &str, token: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| err(line, format!("{what} must be a number, got `{token}`")))
}

fn expect_args(line: usize, directive: &str, tokens: &[String], n: usize) -> Result<()> {
    if tokens.len() != n + 1 {
        return Err(err(
            line,
            format!("`{directive}` takes {n} argument(s), got {}", tokens.len() - 1),
        ));
    }
    Ok(())
}

pub fn parse(text: &str) -> Result<Scenario> {
    let mut scenario = Scenario::default();
    let mut seed_seen = false;
    let mut body_started = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens = tokenize(line, raw)?;
        if tokens.is_empty() {
            continue;
        }
        match tokens[0].as_str() {
            "seed" => {
                expect_args(line, "seed", &tokens, 1)?;
                if seed_seen {
                    return Err(err(line, "seed may appear only once"));
                }
                if body_started {
                    return Err(err(line, "seed must precede all directives"));
                }
                scenario.seed = parse_count(line, "seed", &tokens[1])?;
                seed_seen = true;
            }
            "param" => {
                expect_args(line, "param", &tokens, 2)?;
                if body_started {
                    return Err(err(line, "param lines must precede all directives"));
                }
                scenario
                    .params
                    .push((line, tokens[1].clone(), tokens[2].clone()));
            }
            "node" => {
                body_started = true;
                let adversary = match tokens.len() {
                    2 => None,
                    3 => {
                        let kind = tokens[2]
                            .strip_prefix("adversary=")
                            .ok_or_else(|| err(line, "expected adversary=<kind>"))?;
                        Some(AdversaryKind::parse(kind).ok_or_else(|| {
                            err(line, format!("unknown adversary kind `{kind}`"))
                        })?)
                    }
                    _ => return Err(err(line, "`node` takes a name and optional adversary=")),
                };
                scenario.directives.push((
                    line,
                    Directive::Node {
                        name: tokens[1].clone(),
                        adversary,
                    },
                ));
            }
            "remove" => {
                body_started = true;
                expect_args(line, "remove", &tokens, 1)?;
                scenario
                    .directives
                    .push((line, Directive::Remove { name: tokens[1].clone() }));
            }
            "spoof" => {
                body_started = true;
                expect_args(line, "spoof", &tokens, 2)?;
                scenario.directives.push((
                    line,
                    Directive::Spoof {
                        name: tokens[1].clone(),
                        victim: tokens[2].clone(),
                    },
                ));
            }
            "path" => {
                body_started = true;
                if tokens.len() < 3 {
                    return Err(err(line, "`path` needs at least two node names"));
                }
                scenario.directives.push((
                    line,
                    Directive::Path {
                        names: tokens[1..].to_vec(),
                    },
                ));
            }
            "issue" => {
                body_started = true;
                expect_args(line, "issue", &tokens, 2)?;
                scenario.directives.push((
                    line,
                    Directive::Issue {
                        name: tokens[1].clone(),
                        count: parse_count(line, "issue count", &tokens[2])?,
                    },
                ));
            }
            "conv" => {
                body_started = true;
                expect_args(line, "conv", &tokens, 3)?;
                let variant_spec = tokens[3]
                    .strip_prefix("variant=")
                    .ok_or_else(|| err(line, "expected variant=<1|2|3>"))?;
                let variant: u8 = parse_count(line, "variant", variant_spec)?;
                if !(1..=3).contains(&variant) {
                    return Err(err(line, format!("variant must be 1, 2, or 3, got {variant}")));
                }
                scenario.directives.push((
                    line,
                    Directive::Conv {
                        from: tokens[1].clone(),
                        to: tokens[2].clone(),
                        variant,
                    },
                ));
            }
            "spriv" => {
                body_started = true;
                expect_args(line, "spriv", &tokens, 3)?;
                scenario.directives.push((
                    line,
                    Directive::Spriv {
                        from: tokens[1].clone(),
                        to: tokens[2].clone(),
                        text: tokens[3].clone(),
                    },
                ));
            }
            "sall" => {
                body_started = true;
                expect_args(line, "sall", &tokens, 2)?;
                scenario.directives.push((
                    line,
                    Directive::Sall {
                        from: tokens[1].clone(),
                        text: tokens[2].clone(),
                    },
                ));
            }
            "attack" => {
                body_started = true;
                expect_args(line, "attack", &tokens, 2)?;
                let kind = AttackKind::parse(&tokens[1])
                    .ok_or_else(|| err(line, format!("unknown attack kind `{}`", tokens[1])))?;
                scenario.directives.push((
                    line,
                    Directive::Attack {
                        kind,
                        node: tokens[2].clone(),
                    },
                ));
            }
            "expect" => {
                body_started = true;
                expect_args(line, "expect", &tokens, 1)?;
                let expectation = if tokens[1] == "accept" {
                    Expectation::Accept
                } else if let Some(reason) = tokens[1].strip_prefix("reject:") {
                    if reason.is_empty() {
                        return Err(err(line, "reject: needs a reason tag"));
                    }
                    Expectation::Reject(reason.to_string())
                } else if let Some(user) = tokens[1].strip_prefix("revokes-to:") {
                    if user.is_empty() {
                        return Err(err(line, "revokes-to: needs a user"));
                    }
                    Expectation::RevokesTo(user.to_string())
                } else {
                    return Err(err(
                        line,
                        format!("expected accept, reject:<reason>, or revokes-to:<user>, got `{}`", tokens[1]),
                    ));
                };
                scenario
                    .directives
                    .push((line, Directive::Expect(expectation)));
            }
            other => return Err(err(line, format!("unknown directive `{other}`"))),
        }
    }
    Ok(scenario)
}
