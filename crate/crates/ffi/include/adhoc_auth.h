#ifndef ADHOC_AUTH_H
#define ADHOC_AUTH_H

/* Generated by cbindgen from the adhoc-auth-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call in this interface.
 */
typedef enum AaStatus {
  /**
   * The call succeeded.
   */
  AA_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  AA_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  AA_STATUS_INVALID_UTF8 = 2,
  /**
   * An argument was outside its documented range.
   */
  AA_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A scenario script failed to parse.
   */
  AA_STATUS_PARSE_ERROR = 4,
  /**
   * A scenario script failed while executing.
   */
  AA_STATUS_RUN_ERROR = 5,
  /**
   * A protocol operation failed (malformed frame, bad state, ...).
   */
  AA_STATUS_PROTOCOL_ERROR = 6,
  /**
   * The responder rejected the round: the identification proof failed.
   */
  AA_STATUS_REJECTED_BAD_PROOF = 7,
  /**
   * The responder rejected the round: the seal tag did not verify.
   */
  AA_STATUS_REJECTED_BAD_TAG = 8,
  /**
   * The responder rejected the round: no challenge was pending.
   */
  AA_STATUS_REJECTED_NO_PENDING = 9,
  /**
   * The requested record does not exist.
   */
  AA_STATUS_NOT_FOUND = 10,
  /**
   * The requested quantity is undefined for this input.
   */
  AA_STATUS_UNDEFINED = 11,
} AaStatus;

/**
 * The issuing authority plus its deterministic randomness stream.
 */
typedef struct AaBootstrap AaBootstrap;

/**
 * One issued credential.
 */
typedef struct AaCredential AaCredential;

/**
 * Initiator-side conversation state.
 */
typedef struct AaInitiator AaInitiator;

/**
 * A finished scenario run.
 */
typedef struct AaReport AaReport;

/**
 * Responder-side conversation state.
 */
typedef struct AaResponder AaResponder;

/**
 * A byte buffer owned by this library. Release with `aa_buf_free`.
 */
typedef struct AaBuf {
  uint8_t *ptr;
  size_t len;
} AaBuf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *aa_version(void);

/**
 * Description of the most recent failure on this thread, or NULL if none.
 * The caller owns the returned string.
 */
char *aa_last_error(void);

/**
 * Release a string returned by this library. NULL is ignored.
 */
void aa_string_free(char *s);

/**
 * Release a buffer returned by this library. A NULL pointer is ignored.
 */
void aa_buf_free(struct AaBuf buf);

/**
 * Create an authority with a fresh keypair of `modulus_bits` bits and the
 * given public exponent, deterministically from `seed`.
 */
enum AaStatus aa_bootstrap_new(uint32_t modulus_bits,
                               uint64_t public_exp,
                               uint64_t seed,
                               struct AaBootstrap **out);

void aa_bootstrap_free(struct AaBootstrap *bs);

/**
 * Issue one credential to `user`. The caller owns the credential handle.
 */
enum AaStatus aa_bootstrap_issue(struct AaBootstrap *bs,
                                 const char *user,
                                 struct AaCredential **out);

/**
 * Hex form of the credential's anonymous ID. The caller owns the string.
 */
enum AaStatus aa_credential_id_hex(const struct AaCredential *credential, char **out);

void aa_credential_free(struct AaCredential *credential);

/**
 * Reveal which user a hex-encoded anonymous ID was issued to. Returns
 * `NOT_FOUND` when the ID is unknown to the authority.
 */
enum AaStatus aa_bootstrap_revoke_hex(struct AaBootstrap *bs, const char *id_hex, char **out_user);

/**
 * Open a conversation. `variant` selects the init flavor (1 = ID in the
 * clear, 2 = registry, 3 = signed). On success `out_init` holds the init
 * frame to transmit and `out` the initiator handle.
 */
enum AaStatus aa_initiator_new(struct AaBootstrap *bs,
                               uint8_t variant,
                               const struct AaCredential *credential,
                               const uint8_t *first_message,
                               size_t first_message_len,
                               uint32_t puzzle_count,
                               uint32_t key_bits,
                               uint64_t seed,
                               struct AaBuf *out_init,
                               struct AaInitiator **out);

/**
 * Build the next puzzle-set frame. Call once per message round.
 */
enum AaStatus aa_initiator_begin(struct AaInitiator *initiator, struct AaBuf *out_set);

/**
 * Answer a challenge frame, attaching `message` under the puzzle key.
 */
enum AaStatus aa_initiator_answer(struct AaInitiator *initiator,
                                  const uint8_t *challenge_frame,
                                  size_t challenge_len,
                                  const uint8_t *message,
                                  size_t message_len,
                                  struct AaBuf *out_authenticated);

void aa_initiator_free(struct AaInitiator *initiator);

/**
 * Accept an init frame and recover the first message. The bootstrap handle
 * supplies the authority's public parameters (and, for variants 2 and 3,
 * the registry and signature checks).
 */
enum AaStatus aa_responder_accept(const struct AaBootstrap *bs,
                                  const uint8_t *init_frame,
                                  size_t init_len,
                                  uint32_t puzzle_count,
                                  uint32_t key_bits,
                                  uint64_t seed,
                                  struct AaBuf *out_first_message,
                                  struct AaResponder **out);

/**
 * Solve one puzzle from a set frame and emit the challenge frame.
 */
enum AaStatus aa_responder_challenge(struct AaResponder *responder,
                                     const uint8_t *set_frame,
                                     size_t set_len,
                                     struct AaBuf *out_challenge);

/**
 * Verify an authenticated frame and open the sealed message. Rejections
 * come back as the three `REJECTED_*` statuses with no message output.
 */
enum AaStatus aa_responder_open(struct AaResponder *responder,
                                const uint8_t *authenticated_frame,
                                size_t authenticated_len,
                                struct AaBuf *out_message);

void aa_responder_free(struct AaResponder *responder);

/**
 * Run a scenario script and hand back the report.
 */
enum AaStatus aa_run_scenario(const char *name, const char *text, struct AaReport **out);

/**
 * 1 when every expectation in the run passed, else 0.
 */
int32_t aa_report_all_pass(const struct AaReport *report);

size_t aa_report_expect_count(const struct AaReport *report);

/**
 * Details of expectation `index`: script line, pass flag, and a rendered
 * `expected -> observed` string owned by the caller.
 */
enum AaStatus aa_report_expect(const struct AaReport *report,
                               size_t index,
                               uint64_t *out_line,
                               int32_t *out_pass,
                               char **out_text);

/**
 * The full transcript, one `<step> <from> <to> <action> <hex-frame>` line
 * per delivered hop. The caller owns the string.
 */
enum AaStatus aa_report_transcript(const struct AaReport *report, char **out);

/**
 * The authority's audit log, one line per issue/register/sign/revoke.
 */
enum AaStatus aa_report_audit(const struct AaReport *report, char **out);

size_t aa_report_log_count(const struct AaReport *report);

/**
 * Chat log `index`: the conversation ID in hex and the log lines joined
 * with newlines. The caller owns both strings.
 */
enum AaStatus aa_report_log(const struct AaReport *report,
                            size_t index,
                            char **out_conversation,
                            char **out_lines);

uint64_t aa_report_puzzle_bytes(const struct AaReport *report);

uint64_t aa_report_message_bytes(const struct AaReport *report);

/**
 * Puzzle bytes over message bytes, or `UNDEFINED` when the run carried no
 * private message bytes.
 */
enum AaStatus aa_report_size_ratio(const struct AaReport *report, double *out);

void aa_report_free(struct AaReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADHOC_AUTH_H */
