//! Ownership and initiation proofs over reconstructed log data.
//!
//! A verifier needs only the public event log and the presented key. Nothing
//! here consults live registry state.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::commitments::{token_commitment, tree_id, AnchorId, Digest32, OwnershipToken};
use crate::reconstruction::Forest;
use crate::registry::{AnchorRecord, ArtifactClass};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("zero commitment: governance anchors carry no initiation proof")]
    GovernanceAnchor,
    #[error("anchor {0} has a commitment/type mismatch (zero commitment iff governance type)")]
    SeparationViolation(AnchorId),
    #[error("no tree is rooted at {0}")]
    UnknownRoot(AnchorId),
}

/// `tree_id(token, root_id) == claimed_tree_id`.
pub fn verify_ownership(token: &OwnershipToken, root_id: &AnchorId, claimed_tree_id: &Digest32) -> bool {
    tree_id(token, root_id) == *claimed_tree_id
}

/// `token_commitment(token, anchor_id) == claimed_commitment`. A zero
/// commitment marks a governance anchor and is an error, not a mismatch.
pub fn verify_initiation(
    token: &OwnershipToken,
    anchor_id: &AnchorId,
    claimed_commitment: &Digest32,
) -> Result<bool, VerifyError> {
    if claimed_commitment.is_zero() {
        return Err(VerifyError::GovernanceAnchor);
    }
    Ok(token_commitment(token, anchor_id) == *claimed_commitment)
}

/// Zero commitment and governance type must agree; a record where they don't
/// cannot have come from an honest contract.
pub fn is_governance(record: &AnchorRecord) -> Result<bool, VerifyError> {
    let zero = record.token_commitment.is_zero();
    let governance_type = record.class() == ArtifactClass::Governance;
    if zero != governance_type {
        return Err(VerifyError::SeparationViolation(record.ar_id.clone()));
    }
    Ok(zero)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AuthResult {
    pub authenticated: bool,
    pub root_check: bool,
    pub anchor_checks: BTreeMap<AnchorId, bool>,
    pub governance_skipped: Vec<AnchorId>,
}

/// Checks that `token` owns the tree rooted at `root_id` and initiated every
/// content anchor in it.
///
/// The anchors checked are `root_id` and everything below it through
/// same-tree edges. Other parentless anchors that merely claim the same tree
/// id, and cross-tree attachments, are not part of the lineage.
pub fn authenticate_tree(token: &OwnershipToken, root_id: &AnchorId, forest: &Forest) -> Result<AuthResult, VerifyError> {
    let unknown = || VerifyError::UnknownRoot(root_id.clone());
    let tree = forest.tree_of(root_id).ok_or_else(unknown)?;
    let root = &tree.nodes[root_id];
    if !root.is_root() {
        return Err(unknown());
    }
    let root_check = verify_ownership(token, root_id, &tree.tree_id);

    let mut anchor_checks = BTreeMap::new();
    let mut governance_skipped = Vec::new();
    for record in tree.lineage(root_id).map_err(|_| unknown())? {
        if is_governance(record)? {
            governance_skipped.push(record.ar_id.clone());
        } else {
            let ok = verify_initiation(token, &record.ar_id, &record.token_commitment)?;
            anchor_checks.insert(record.ar_id.clone(), ok);
        }
    }
    let authenticated = root_check && anchor_checks.values().all(|ok| *ok);
    Ok(AuthResult { authenticated, root_check, anchor_checks, governance_skipped })
}

/// What an accuser offers when challenged to produce the key.
#[derive(Debug, Clone)]
pub enum AccuserResponse {
    Produce(OwnershipToken),
    Refuse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// The accuser holds the key, so the accuser initiated the anchor.
    SelfIncriminating,
    /// No valid key produced: the claim amounts to breaking keccak256.
    Dismissed,
}

/// Settles a claim that the operator registered `record` without the
/// accuser's authorization. A wrong key counts the same as a refusal.
pub fn adjudicate_accusation(response: &AccuserResponse, record: &AnchorRecord) -> Result<Verdict, VerifyError> {
    if is_governance(record)? {
        return Err(VerifyError::GovernanceAnchor);
    }
    match response {
        AccuserResponse::Produce(token) if verify_initiation(token, &record.ar_id, &record.token_commitment)? => {
            Ok(Verdict::SelfIncriminating)
        }
        _ => Ok(Verdict::Dismissed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commitments::keygen;
    use crate::reconstruction::reconstruct;
    use crate::registry::{ArtifactType, GovernanceKind, OperatorId, RegistrationRequest, Registry};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const OP: OperatorId = OperatorId([1; 20]);

    fn build(key: &OwnershipToken, children: usize, void_child: bool) -> (Registry, AnchorId) {
        let mut reg = Registry::new([OP]).unwrap().with_seed([3; 32]);
        let r = reg.reserve("u");
        let t = tree_id(key, &r);
        let ty = ArtifactType::new("DOCUMENT").unwrap();
        reg.register_content(&OP, RegistrationRequest::new(r.clone(), ty.clone(), "11".repeat(32), None, &t, token_commitment(key, &r)))
            .unwrap();
        let mut last = r.clone();
        for _ in 0..children {
            let c = reg.reserve("u");
            reg.register_content(&OP, RegistrationRequest::new(c.clone(), ty.clone(), "11".repeat(32), Some(last.clone()), &t, token_commitment(key, &c)))
                .unwrap();
            last = c;
        }
        if void_child {
            reg.register_governance(&OP, GovernanceKind::Void, &last, "").unwrap();
        }
        (reg, r)
    }

    #[test]
    fn ownership_and_initiation() {
        let k = keygen(&[1; 32]).unwrap();
        let r = AnchorId::new("root").unwrap();
        let t = tree_id(&k, &r);
        assert!(verify_ownership(&k, &r, &t));
        assert!(!verify_ownership(&k, &AnchorId::new("root2").unwrap(), &t));
        let phi = token_commitment(&k, &r);
        assert_eq!(verify_initiation(&k, &r, &phi), Ok(true));
        assert_eq!(verify_initiation(&keygen(&[2; 32]).unwrap(), &r, &phi), Ok(false));
        assert_eq!(verify_initiation(&k, &r, &Digest32::ZERO), Err(VerifyError::GovernanceAnchor));
    }

    #[test]
    fn random_keys_never_verify() {
        let k = keygen(&[1; 32]).unwrap();
        let r = AnchorId::new("root").unwrap();
        let t = tree_id(&k, &r);
        let phi = token_commitment(&k, &r);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100_000 {
            let k2 = OwnershipToken::from_bytes(rng.random());
            assert!(!verify_ownership(&k2, &r, &t));
            assert_eq!(verify_initiation(&k2, &r, &phi), Ok(false));
        }
    }

    #[test]
    fn governance_classification() {
        let k = keygen(&[1; 32]).unwrap();
        let (reg, r) = build(&k, 1, true);
        let forest = reconstruct(reg.events()).unwrap();
        let void = reg.events().last().unwrap().ar_id_plain.clone();
        assert_eq!(is_governance(forest.node(&void).unwrap()), Ok(true));
        assert_eq!(is_governance(forest.node(&r).unwrap()), Ok(false));

        let mut tampered = forest.node(&r).unwrap().clone();
        tampered.token_commitment = Digest32::ZERO;
        assert_eq!(is_governance(&tampered), Err(VerifyError::SeparationViolation(r.clone())));
        let mut tampered = forest.node(&void).unwrap().clone();
        tampered.artifact_type = ArtifactType::new("DATASET").unwrap();
        assert!(is_governance(&tampered).is_err());
    }

    #[test]
    fn authenticate_with_void_child() {
        let k = keygen(&[1; 32]).unwrap();
        let (reg, r) = build(&k, 3, true);
        let forest = reconstruct(reg.events()).unwrap();
        let res = authenticate_tree(&k, &r, &forest).unwrap();
        assert!(res.authenticated);
        assert!(res.root_check);
        assert_eq!(res.anchor_checks.len(), 4);
        assert_eq!(res.governance_skipped.len(), 1);
        assert!(!res.anchor_checks.contains_key(&res.governance_skipped[0]));

        let other = keygen(&[2; 32]).unwrap();
        let res = authenticate_tree(&other, &r, &forest).unwrap();
        assert!(!res.authenticated);
        assert!(!res.root_check);
        assert!(res.anchor_checks.values().all(|ok| !ok));

        let child = reg.events()[1].ar_id_plain.clone();
        assert_eq!(authenticate_tree(&k, &child, &forest).unwrap_err(), VerifyError::UnknownRoot(child));
    }

    #[test]
    fn accusation_dichotomy() {
        let k = keygen(&[1; 32]).unwrap();
        let (reg, r) = build(&k, 0, false);
        let forest = reconstruct(reg.events()).unwrap();
        let rec = forest.node(&r).unwrap();
        assert_eq!(adjudicate_accusation(&AccuserResponse::Produce(k.clone()), rec), Ok(Verdict::SelfIncriminating));
        assert_eq!(adjudicate_accusation(&AccuserResponse::Refuse, rec), Ok(Verdict::Dismissed));
        assert_eq!(
            adjudicate_accusation(&AccuserResponse::Produce(keygen(&[9; 32]).unwrap()), rec),
            Ok(Verdict::Dismissed)
        );

        let (reg, _) = build(&k, 1, true);
        let forest = reconstruct(reg.events()).unwrap();
        let void = forest.node(&reg.events().last().unwrap().ar_id_plain).unwrap();
        assert_eq!(adjudicate_accusation(&AccuserResponse::Refuse, void), Err(VerifyError::GovernanceAnchor));
    }
}
