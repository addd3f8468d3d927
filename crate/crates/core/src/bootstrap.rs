//! The trusted authority.
//!
//! The bootstrap owns the key pair, issues anonymous credentials, keeps the
//! variant-2 conversation registry, signs variant-3 init digests, and is the
//! only party able to map an ID back to the real user behind it. Everything
//! it does lands in an append-only audit log.

use std::collections::HashMap;

use num_bigint::BigUint;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gqid::{self, BootstrapKeys, Credential, PublicParams};
use crate::session::ConversationId;

/// Length of an issued ID in bytes, hex-displayed everywhere.
pub const ID_LEN: usize = 16;

#[derive(Debug, Clone, Default)]
struct UserRecord {
    issued: Vec<Vec<u8>>,
}

/// Key owner, credential issuer, conversation registry, and revocation
/// authority, addressed in-process.
#[derive(Debug, Clone)]
pub struct Bootstrap {
    keys: BootstrapKeys,
    users: HashMap<String, UserRecord>,
    owner_of: HashMap<Vec<u8>, String>,
    registry: HashMap<ConversationId, Vec<u8>>,
    audit: Vec<String>,
}

impl Bootstrap {
    pub fn new(keys: BootstrapKeys) -> Bootstrap {
        Bootstrap {
            keys,
            users: HashMap::new(),
            owner_of: HashMap::new(),
            registry: HashMap::new(),
            audit: Vec::new(),
        }
    }

    pub fn params(&self) -> PublicParams {
        self.keys.params()
    }

    pub fn keys(&self) -> &BootstrapKeys {
        &self.keys
    }

    /// Issue `count` fresh credentials to `user`. IDs are random, globally
    /// unique, and recorded for later revocation.
    pub fn issue_batch<R: Rng>(
        &mut self,
        user: &str,
        count: u32,
        rng: &mut R,
    ) -> Result<Vec<Credential>> {
        if count < 1 {
            return Err(Error::BadIssueCount);
        }
        let mut credentials = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let mut id = vec![0u8; ID_LEN];
            loop {
                rng.fill(id.as_mut_slice());
                if !self.owner_of.contains_key(&id) {
                    break;
                }
            }
            let credential = gqid::issue_credential(&self.keys, &id)?;
            self.owner_of.insert(id.clone(), user.to_string());
            self.users
                .entry(user.to_string())
                .or_default()
                .issued
                .push(id.clone());
            self.audit.push(format!("ISSUE {user} {}", hex::encode(&id)));
            credentials.push(credential);
        }
        Ok(credentials)
    }

    /// Variant-2 support: bind a conversation to an ID, write-once.
    pub fn register_conversation(
        &mut self,
        conversation: ConversationId,
        id: &[u8],
    ) -> Result<()> {
        if self.registry.contains_key(&conversation) {
            return Err(Error::AlreadyRegistered);
        }
        self.registry.insert(conversation, id.to_vec());
        self.audit
            .push(format!("REGISTER {conversation} {}", hex::encode(id)));
        Ok(())
    }

    pub fn lookup_conversation(&self, conversation: &ConversationId) -> Option<&[u8]> {
        self.registry.get(conversation).map(Vec::as_slice)
    }

    /// Variant-3 support: sign `H(ID || h_m)` for an ID this bootstrap
    /// issued.
    pub fn sign_identity(&mut self, id: &[u8], h_m: &[u8; 32]) -> Result<BigUint> {
        if !self.owner_of.contains_key(id) {
            return Err(Error::UnknownId);
        }
        let mut digest = Sha256::new();
        digest.update(id);
        digest.update(h_m);
        let bound: [u8; 32] = digest.finalize().into();
        let signature = gqid::sign_digest(&self.keys, &bound)?;
        self.audit
            .push(format!("SIGN {} {}", hex::encode(id), hex::encode(h_m)));
        Ok(signature)
    }

    /// Strip the anonymity from an ID. Returns the user it was issued to,
    /// or `None` for IDs this bootstrap never issued.
    pub fn revoke(&mut self, id: &[u8]) -> Option<String> {
        let user = self.owner_of.get(id).cloned()?;
        self.audit
            .push(format!("REVOKE {} {user}", hex::encode(id)));
        Some(user)
    }

    pub fn issued_ids(&self, user: &str) -> &[Vec<u8>] {
        self.users.get(user).map(|u| u.issued.as_slice()).unwrap_or(&[])
    }

    /// All users credentials were ever issued to, sorted.
    pub fn users(&self) -> Vec<String> {
        let mut names: Vec<String> = self.users.keys().cloned().collect();
        names.sort();
        names
    }

    pub fn audit_log(&self) -> &[String] {
        &self.audit
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

    fn bootstrap(seed: u64) -> Bootstrap {
        let keys = gqid::keygen(64, BigUint::from(65537u32), &mut rng(seed)).unwrap();
        Bootstrap::new(keys)
    }

    #[test]
    fn issued_credentials_pass_the_issuance_invariant() {
        let mut bs = bootstrap(1);
        let params = bs.params();
        let creds = bs.issue_batch("alice", 3, &mut rng(2)).unwrap();
        assert_eq!(creds.len(), 3);
        for cred in &creds {
            let lhs = (cred.sigma().modpow(&params.public_exp, &params.modulus)
                * &cred.identity.j)
                % &params.modulus;
            assert_eq!(lhs, BigUint::from(1u32));
        }
    }

    #[test]
    fn ids_are_distinct_across_users_and_revoke_to_their_user() {
        let mut bs = bootstrap(2);
        let a = bs.issue_batch("alice", 5, &mut rng(3)).unwrap();
        let b = bs.issue_batch("bob", 5, &mut rng(4)).unwrap();
        let mut all: Vec<Vec<u8>> = Vec::new();
        all.extend(a.iter().map(|c| c.identity.id.clone()));
        all.extend(b.iter().map(|c| c.identity.id.clone()));
        let distinct: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), 10);
        for cred in &a {
            assert_eq!(bs.revoke(&cred.identity.id).as_deref(), Some("alice"));
        }
        for cred in &b {
            assert_eq!(bs.revoke(&cred.identity.id).as_deref(), Some("bob"));
        }
        assert_eq!(bs.revoke(b"never-issued-0000"), None);
    }

    #[test]
    fn zero_count_is_rejected() {
        let mut bs = bootstrap(3);
        assert!(matches!(
            bs.issue_batch("alice", 0, &mut rng(5)),
            Err(Error::BadIssueCount)
        ));
    }

    #[test]
    fn registry_is_write_once() {
        let mut bs = bootstrap(4);
        let conv = ConversationId::from_bytes([7; 16]);
        assert_eq!(bs.lookup_conversation(&conv), None);
        bs.register_conversation(conv, b"some-id-bytes-00").unwrap();
        assert_eq!(bs.lookup_conversation(&conv), Some(b"some-id-bytes-00".as_slice()));
        assert!(matches!(
            bs.register_conversation(conv, b"other-id-bytes-0"),
            Err(Error::AlreadyRegistered)
        ));
        // read-only: repeated lookups agree
        assert_eq!(bs.lookup_conversation(&conv), Some(b"some-id-bytes-00".as_slice()));
    }

    #[test]
    fn sign_identity_round_trips_and_rejects_unknown_ids() {
        let mut bs = bootstrap(5);
        let params = bs.params();
        let cred = bs.issue_batch("alice", 1, &mut rng(6)).unwrap().remove(0);
        let h_m = [0xabu8; 32];
        let sig = bs.sign_identity(&cred.identity.id, &h_m).unwrap();

        let mut digest = Sha256::new();
        digest.update(&cred.identity.id);
        digest.update(h_m);
        let bound: [u8; 32] = digest.finalize().into();
        assert!(gqid::verify_sig(&params, &sig, &bound));

        let mut altered = bound;
        altered[0] ^= 1;
        assert!(!gqid::verify_sig(&params, &sig, &altered));

        assert!(matches!(
            bs.sign_identity(b"not-issued-here0", &h_m),
            Err(Error::UnknownId)
        ));
    }

    #[test]
    fn audit_log_records_every_action_in_order() {
        let mut bs = bootstrap(6);
        let cred = bs.issue_batch("alice", 1, &mut rng(7)).unwrap().remove(0);
        let id_hex = hex::encode(&cred.identity.id);
        let conv = ConversationId::from_bytes([1; 16]);
        bs.register_conversation(conv, &cred.identity.id).unwrap();
        let h_m = [0x11u8; 32];
        bs.sign_identity(&cred.identity.id, &h_m).unwrap();
        bs.revoke(&cred.identity.id).unwrap();
        bs.revoke(b"unknown-id-00000");
        let log = bs.audit_log();
        assert_eq!(log.len(), 4, "failed revoke must not be logged");
        assert_eq!(log[0], format!("ISSUE alice {id_hex}"));
        assert_eq!(log[1], format!("REGISTER {conv} {id_hex}"));
        assert_eq!(log[2], format!("SIGN {id_hex} {}", hex::encode(h_m)));
        assert_eq!(log[3], format!("REVOKE {id_hex} alice"));
    }
}
