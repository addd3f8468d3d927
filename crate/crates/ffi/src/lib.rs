//! C interface to the anonymous authentication protocol and its scenario
//! runner. Every object crosses the boundary as an opaque handle; byte
//! payloads travel in [`AaBuf`] values that the caller must release with
//! `aa_buf_free`, and strings in NUL-terminated buffers released with
//! `aa_string_free`. Functions returning [`AaStatus`] leave a description
//! of the most recent failure for `aa_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use adhoc_auth::bootstrap::Bootstrap;
use adhoc_auth::gqid::Credential;
use adhoc_auth::puzzle::PuzzleParams;
use adhoc_auth::session::{InitiatorSession, ProtocolConfig, ResponderSession};
use adhoc_auth::simnet::runner::{self, RunReport};
use adhoc_auth::wire::WireMessage;
use adhoc_auth::{Error, RejectReason};

/// Result of every fallible call in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AaStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument was outside its documented range.
    InvalidArgument = 3,
    /// A scenario script failed to parse.
    ParseError = 4,
    /// A scenario script failed while executing.
    RunError = 5,
    /// A protocol operation failed (malformed frame, bad state, ...).
    ProtocolError = 6,
    /// The responder rejected the round: the identification proof failed.
    RejectedBadProof = 7,
    /// The responder rejected the round: the seal tag did not verify.
    RejectedBadTag = 8,
    /// The responder rejected the round: no challenge was pending.
    RejectedNoPending = 9,
    /// The requested record does not exist.
    NotFound = 10,
    /// The requested quantity is undefined for this input.
    Undefined = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: AaStatus, message: impl Into<String>) -> AaStatus {
    let text = CString::new(message.into().replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
    status
}

fn error_status(e: &Error) -> AaStatus {
    match e {
        Error::ScenarioParse { .. } => AaStatus::ParseError,
        Error::ScenarioRun { .. } => AaStatus::RunError,
        _ => AaStatus::ProtocolError,
    }
}

fn reject_status(reason: RejectReason) -> AaStatus {
    match reason {
        RejectReason::BadProof => AaStatus::RejectedBadProof,
        RejectReason::BadTag => AaStatus::RejectedBadTag,
        RejectReason::NoPending => AaStatus::RejectedNoPending,
    }
}

/// A byte buffer owned by this library. Release with `aa_buf_free`.
#[repr(C)]
pub struct AaBuf {
    pub ptr: *mut u8,
    pub len: usize,
}

impl AaBuf {
    fn empty() -> AaBuf {
        AaBuf {
            ptr: ptr::null_mut(),
            len: 0,
        }
    }
}

fn buf_from_vec(v: Vec<u8>) -> AaBuf {
    let boxed = v.into_boxed_slice();
    let len = boxed.len();
    AaBuf {
        ptr: Box::into_raw(boxed) as *mut u8,
        len,
    }
}

fn string_out(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("no interior NUL")
        .into_raw()
}

unsafe fn slice_arg<'a>(ptr: *const u8, len: usize) -> Option<&'a [u8]> {
    if len == 0 {
        return Some(&[]);
    }
    if ptr.is_null() {
        return None;
    }
    Some(std::slice::from_raw_parts(ptr, len))
}

unsafe fn str_arg<'a>(ptr: *const c_char) -> Result<&'a str, AaStatus> {
    if ptr.is_null() {
        return Err(fail(AaStatus::NullArgument, "NULL string argument"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(AaStatus::InvalidUtf8, "string argument is not UTF-8"))
}

macro_rules! require {
    ($ptr:expr, $what:literal) => {
        match $ptr {
            Some(r) => r,
            None => return fail(AaStatus::NullArgument, concat!("NULL ", $what)),
        }
    };
}

/// The issuing authority plus its deterministic randomness stream.
pub struct AaBootstrap {
    inner: Bootstrap,
    rng: ChaCha20Rng,
}

/// One issued credential.
pub struct AaCredential {
    inner: Credential,
}

/// Initiator-side conversation state.
pub struct AaInitiator {
    session: InitiatorSession,
    rng: ChaCha20Rng,
}

/// Responder-side conversation state.
pub struct AaResponder {
    session: ResponderSession,
    rng: ChaCha20Rng,
}

/// A finished scenario run.
pub struct AaReport {
    inner: RunReport,
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn aa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Description of the most recent failure on this thread, or NULL if none.
/// The caller owns the returned string.
#[no_mangle]
pub extern "C" fn aa_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.clone().into_raw())
            .unwrap_or(ptr::null_mut())
    })
}

/// Release a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn aa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Release a buffer returned by this library. A NULL pointer is ignored.
#[no_mangle]
pub unsafe extern "C" fn aa_buf_free(buf: AaBuf) {
    if !buf.ptr.is_null() {
        let slice = ptr::slice_from_raw_parts_mut(buf.ptr, buf.len);
        drop(Box::from_raw(slice));
    }
}

/// Create an authority with a fresh keypair of `modulus_bits` bits and the
/// given public exponent, deterministically from `seed`.
#[no_mangle]
pub unsafe extern "C" fn aa_bootstrap_new(
    modulus_bits: u32,
    public_exp: u64,
    seed: u64,
    out: *mut *mut AaBootstrap,
) -> AaStatus {
    let out = require!(out.as_mut(), "output handle");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    match adhoc_auth::gqid::keygen(modulus_bits, BigUint::from(public_exp), &mut rng) {
        Ok(keys) => {
            *out = Box::into_raw(Box::new(AaBootstrap {
                inner: Bootstrap::new(keys),
                rng,
            }));
            AaStatus::Ok
        }
        Err(e) => fail(error_status(&e), e.to_string()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn aa_bootstrap_free(bs: *mut AaBootstrap) {
    if !bs.is_null() {
        drop(Box::from_raw(bs));
    }
}

/// Issue one credential to `user`. The caller owns the credential handle.
#[no_mangle]
pub unsafe extern "C" fn aa_bootstrap_issue(
    bs: *mut AaBootstrap,
    user: *const c_char,
    out: *mut *mut AaCredential,
) -> AaStatus {
    let out = require!(out.as_mut(), "output handle");
    let bs = require!(bs.as_mut(), "bootstrap handle");
    let user = match str_arg(user) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match bs.inner.issue_batch(user, 1, &mut bs.rng) {
        Ok(mut credentials) => {
            *out = Box::into_raw(Box::new(AaCredential {
                inner: credentials.remove(0),
            }));
            AaStatus::Ok
        }
        Err(e) => fail(error_status(&e), e.to_string()),
    }
}

/// Hex form of the credential's anonymous ID. The caller owns the string.
#[no_mangle]
pub unsafe extern "C" fn aa_credential_id_hex(
    credential: *const AaCredential,
    out: *mut *mut c_char,
) -> AaStatus {
    let out = require!(out.as_mut(), "output pointer");
    let credential = require!(credential.as_ref(), "credential handle");
    *out = string_out(credential.inner.identity.id_hex());
    AaStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn aa_credential_free(credential: *mut AaCredential) {
    if !credential.is_null() {
        drop(Box::from_raw(credential));
    }
}

/// Reveal which user a hex-encoded anonymous ID was issued to. Returns
/// `NOT_FOUND` when the ID is unknown to the authority.
#[no_mangle]
pub unsafe extern "C" fn aa_bootstrap_revoke_hex(
    bs: *mut AaBootstrap,
    id_hex: *const c_char,
    out_user: *mut *mut c_char,
) -> AaStatus {
    let out_user = require!(out_user.as_mut(), "output pointer");
    let bs = require!(bs.as_mut(), "bootstrap handle");
    let id_hex = match str_arg(id_hex) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let id = match hex::decode(id_hex) {
        Ok(bytes) => bytes,
        Err(_) => return fail(AaStatus::InvalidArgument, "id is not valid hex"),
    };
    match bs.inner.revoke(&id) {
        Some(user) => {
            *out_user = string_out(user);
            AaStatus::Ok
        }
        None => fail(AaStatus::NotFound, "no such ID was ever issued"),
    }
}

fn protocol_config(puzzle_count: u32, key_bits: u32) -> Result<ProtocolConfig, Error> {
    Ok(ProtocolConfig {
        puzzle: PuzzleParams::new(puzzle_count, key_bits)?,
        ..ProtocolConfig::default()
    })
}

/// Open a conversation. `variant` selects the init flavor (1 = ID in the
/// clear, 2 = registry, 3 = signed). On success `out_init` holds the init
/// frame to transmit and `out` the initiator handle.
#[no_mangle]
pub unsafe extern "C" fn aa_initiator_new(
    bs: *mut AaBootstrap,
    variant: u8,
    credential: *const AaCredential,
    first_message: *const u8,
    first_message_len: usize,
    puzzle_count: u32,
    key_bits: u32,
    seed: u64,
    out_init: *mut AaBuf,
    out: *mut *mut AaInitiator,
) -> AaStatus {
    let out = require!(out.as_mut(), "output handle");
    let out_init = require!(out_init.as_mut(), "init frame output");
    let bs = require!(bs.as_mut(), "bootstrap handle");
    let credential = require!(credential.as_ref(), "credential handle");
    let first = require!(slice_arg(first_message, first_message_len), "first message");
    let config = match protocol_config(puzzle_count, key_bits) {
        Ok(c) => c,
        Err(e) => return fail(AaStatus::InvalidArgument, e.to_string()),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let params = bs.inner.params();
    match InitiatorSession::initiate(
        variant,
        credential.inner.clone(),
        first,
        Some(&mut bs.inner),
        config,
        params,
        &mut rng,
    ) {
        Ok((session, init)) => {
            *out_init = buf_from_vec(WireMessage::Init(init).encode());
            *out = Box::into_raw(Box::new(AaInitiator { session, rng }));
            AaStatus::Ok
        }
        Err(e) => fail(error_status(&e), e.to_string()),
    }
}

/// Build the next puzzle-set frame. Call once per message round.
#[no_mangle]
pub unsafe extern "C" fn aa_initiator_begin(
    initiator: *mut AaInitiator,
    out_set: *mut AaBuf,
) -> AaStatus {
    let out_set = require!(out_set.as_mut(), "set frame output");
    let initiator = require!(initiator.as_mut(), "initiator handle");
    match initiator.session.begin_message(&mut initiator.rng) {
        Ok(frame) => {
            *out_set = buf_from_vec(frame);
            AaStatus::Ok
        }
        Err(e) => fail(error_status(&e), e.to_string()),
    }
}

/// Answer a challenge frame, attaching `message` under the puzzle key.
#[no_mangle]
pub unsafe extern "C" fn aa_initiator_answer(
    initiator: *mut AaInitiator,
    challenge_frame: *const u8,
    challenge_len: usize,
    message: *const u8,
    message_len: usize,
    out_authenticated: *mut AaBuf,
) -> AaStatus {
    let out_authenticated = require!(out_authenticated.as_mut(), "authenticated frame output");
    let initiator = require!(initiator.as_mut(), "initiator handle");
    let frame = require!(slice_arg(challenge_frame, challenge_len), "challenge frame");
    let message = require!(slice_arg(message, message_len), "message");
    let challenge = match WireMessage::decode(frame) {
        Ok(WireMessage::Challenge(ch)) => ch,
        Ok(_) => return fail(AaStatus::ProtocolError, "frame is not a challenge"),
        Err(e) => return fail(error_status(&e), e.to_string()),
    };
    match initiator.session.answer_challenge(&challenge, message) {
        Ok(authenticated) => {
            *out_authenticated = buf_from_vec(WireMessage::Authenticated(authenticated).encode());
            AaStatus::Ok
        }
        Err(e) => fail(error_status(&e), e.to_string()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn aa_initiator_free(initiator: *mut AaInitiator) {
    if !initiator.is_null() {
        drop(Box::from_raw(initiator));
    }
}

/// Accept an init frame and recover the first message. The bootstrap handle
/// supplies the authority's public parameters (and, for variants 2 and 3,
/// the registry and signature checks).
#[no_mangle]
pub unsafe extern "C" fn aa_responder_accept(
    bs: *const AaBootstrap,
    init_frame: *const u8,
    init_len: usize,
    puzzle_count: u32,
    key_bits: u32,
    seed: u64,
    out_first_message: *mut AaBuf,
    out: *mut *mut AaResponder,
) -> AaStatus {
    let out = require!(out.as_mut(), "output handle");
    let out_first_message = require!(out_first_message.as_mut(), "first message output");
    let bs = require!(bs.as_ref(), "bootstrap handle");
    let frame = require!(slice_arg(init_frame, init_len), "init frame");
    let config = match protocol_config(puzzle_count, key_bits) {
        Ok(c) => c,
        Err(e) => return fail(AaStatus::InvalidArgument, e.to_string()),
    };
    let init = match WireMessage::decode(frame) {
        Ok(WireMessage::Init(msg)) => msg,
        Ok(_) => return fail(AaStatus::ProtocolError, "frame is not an init"),
        Err(e) => return fail(error_status(&e), e.to_string()),
    };
    match ResponderSession::accept(&init, bs.inner.params(), Some(&bs.inner), config) {
        Ok((session, first)) => {
            *out_first_message = buf_from_vec(first);
            *out = Box::into_raw(Box::new(AaResponder {
                session,
                rng: ChaCha20Rng::seed_from_u64(seed),
            }));
            AaStatus::Ok
        }
        Err(e) => fail(error_status(&e), e.to_string()),
    }
}

/// Solve one puzzle from a set frame and emit the challenge frame.
#[no_mangle]
pub unsafe extern "C" fn aa_responder_challenge(
    responder: *mut AaResponder,
    set_frame: *const u8,
    set_len: usize,
    out_challenge: *mut AaBuf,
) -> AaStatus {
    let out_challenge = require!(out_challenge.as_mut(), "challenge frame output");
    let responder = require!(responder.as_mut(), "responder handle");
    let frame = require!(slice_arg(set_frame, set_len), "set frame");
    match responder.session.make_challenge(frame, &mut responder.rng) {
        Ok(challenge) => {
            *out_challenge = buf_from_vec(WireMessage::Challenge(challenge).encode());
            AaStatus::Ok
        }
        Err(e) => fail(error_status(&e), e.to_string()),
    }
}

/// Verify an authenticated frame and open the sealed message. Rejections
/// come back as the three `REJECTED_*` statuses with no message output.
#[no_mangle]
pub unsafe extern "C" fn aa_responder_open(
    responder: *mut AaResponder,
    authenticated_frame: *const u8,
    authenticated_len: usize,
    out_message: *mut AaBuf,
) -> AaStatus {
    let out_message = require!(out_message.as_mut(), "message output");
    let responder = require!(responder.as_mut(), "responder handle");
    let frame = require!(
        slice_arg(authenticated_frame, authenticated_len),
        "authenticated frame"
    );
    let authenticated = match WireMessage::decode(frame) {
        Ok(WireMessage::Authenticated(msg)) => msg,
        Ok(_) => return fail(AaStatus::ProtocolError, "frame is not an authenticated message"),
        Err(e) => return fail(error_status(&e), e.to_string()),
    };
    *out_message = AaBuf::empty();
    match responder.session.verify_and_open(&authenticated) {
        Ok(message) => {
            *out_message = buf_from_vec(message);
            AaStatus::Ok
        }
        Err(reason) => fail(reject_status(reason), format!("round rejected: {reason}")),
    }
}

#[no_mangle]
pub unsafe extern "C" fn aa_responder_free(responder: *mut AaResponder) {
    if !responder.is_null() {
        drop(Box::from_raw(responder));
    }
}

/// Run a scenario script and hand back the report.
#[no_mangle]
pub unsafe extern "C" fn aa_run_scenario(
    name: *const c_char,
    text: *const c_char,
    out: *mut *mut AaReport,
) -> AaStatus {
    let out = require!(out.as_mut(), "output handle");
    let name = match str_arg(name) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let text = match str_arg(text) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match runner::run_scenario(name, text) {
        Ok(report) => {
            *out = Box::into_raw(Box::new(AaReport { inner: report }));
            AaStatus::Ok
        }
        Err(e) => fail(error_status(&e), e.to_string()),
    }
}

/// 1 when every expectation in the run passed, else 0.
#[no_mangle]
pub unsafe extern "C" fn aa_report_all_pass(report: *const AaReport) -> i32 {
    match report.as_ref() {
        Some(r) if r.inner.all_pass() => 1,
        _ => 0,
    }
}

#[no_mangle]
pub unsafe extern "C" fn aa_report_expect_count(report: *const AaReport) -> usize {
    report.as_ref().map(|r| r.inner.expects.len()).unwrap_or(0)
}

/// Details of expectation `index`: script line, pass flag, and a rendered
/// `expected -> observed` string owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn aa_report_expect(
    report: *const AaReport,
    index: usize,
    out_line: *mut u64,
    out_pass: *mut i32,
    out_text: *mut *mut c_char,
) -> AaStatus {
    let report = require!(report.as_ref(), "report handle");
    let out_line = require!(out_line.as_mut(), "line output");
    let out_pass = require!(out_pass.as_mut(), "pass output");
    let out_text = require!(out_text.as_mut(), "text output");
    let Some(e) = report.inner.expects.get(index) else {
        return fail(AaStatus::NotFound, format!("no expectation at index {index}"));
    };
    *out_line = e.line as u64;
    *out_pass = e.pass as i32;
    *out_text = string_out(format!("{} -> {}", e.expected, e.observed));
    AaStatus::Ok
}

/// The full transcript, one `<step> <from> <to> <action> <hex-frame>` line
/// per delivered hop. The caller owns the string.
#[no_mangle]
pub unsafe extern "C" fn aa_report_transcript(
    report: *const AaReport,
    out: *mut *mut c_char,
) -> AaStatus {
    let out = require!(out.as_mut(), "output pointer");
    let report = require!(report.as_ref(), "report handle");
    *out = string_out(report.inner.transcript_lines().join("\n"));
    AaStatus::Ok
}

/// The authority's audit log, one line per issue/register/sign/revoke.
#[no_mangle]
pub unsafe extern "C" fn aa_report_audit(
    report: *const AaReport,
    out: *mut *mut c_char,
) -> AaStatus {
    let out = require!(out.as_mut(), "output pointer");
    let report = require!(report.as_ref(), "report handle");
    *out = string_out(report.inner.audit.join("\n"));
    AaStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn aa_report_log_count(report: *const AaReport) -> usize {
    report.as_ref().map(|r| r.inner.logs.len()).unwrap_or(0)
}

/// Chat log `index`: the conversation ID in hex and the log lines joined
/// with newlines. The caller owns both strings.
#[no_mangle]
pub unsafe extern "C" fn aa_report_log(
    report: *const AaReport,
    index: usize,
    out_conversation: *mut *mut c_char,
    out_lines: *mut *mut c_char,
) -> AaStatus {
    let report = require!(report.as_ref(), "report handle");
    let out_conversation = require!(out_conversation.as_mut(), "conversation output");
    let out_lines = require!(out_lines.as_mut(), "lines output");
    let Some((conversation_id, lines)) = report.inner.logs.get(index) else {
        return fail(AaStatus::NotFound, format!("no chat log at index {index}"));
    };
    *out_conversation = string_out(conversation_id.to_string());
    *out_lines = string_out(lines.join("\n"));
    AaStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn aa_report_puzzle_bytes(report: *const AaReport) -> u64 {
    report.as_ref().map(|r| r.inner.puzzle_bytes).unwrap_or(0)
}

#[no_mangle]
pub unsafe extern "C" fn aa_report_message_bytes(report: *const AaReport) -> u64 {
    report.as_ref().map(|r| r.inner.message_bytes).unwrap_or(0)
}

/// Puzzle bytes over message bytes, or `UNDEFINED` when the run carried no
/// private message bytes.
#[no_mangle]
pub unsafe extern "C" fn aa_report_size_ratio(
    report: *const AaReport,
    out: *mut f64,
) -> AaStatus {
    let report = require!(report.as_ref(), "report handle");
    let out = require!(out.as_mut(), "output pointer");
    match report.inner.size_ratio() {
        Some(ratio) => {
            *out = ratio;
            AaStatus::Ok
        }
        None => fail(AaStatus::Undefined, "run carried no private message bytes"),
    }
}

#[no_mangle]
pub unsafe extern "C" fn aa_report_free(report: *mut AaReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
