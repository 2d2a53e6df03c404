//! Seeded random workloads against a [`Registry`].
//!
//! Drives mixed traffic through the public registry API: new roots, lineage
//! children, ACCOUNT anchors with gated batches, cross-tree attachments and
//! governance actions. With faults enabled, a share of the operations is a
//! deliberately invalid request, and each must be rejected with the expected
//! error while leaving the log untouched.

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commitments::{keygen, token_commitment, tree_id, AnchorId, Digest32, OwnershipToken};
use crate::registry::{
    ArtifactClass, ArtifactType, GovernanceKind, OperatorId, RegistrationRequest, Registry, RegistryError,
};

/// Kinds of deliberately invalid requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fault {
    NonOperator,
    ZeroCommitment,
    Duplicate,
    Unreserved,
    UnknownParent,
    ForeignTreeChild,
}

impl Fault {
    pub const ALL: [Fault; 6] = [
        Fault::NonOperator,
        Fault::ZeroCommitment,
        Fault::Duplicate,
        Fault::Unreserved,
        Fault::UnknownParent,
        Fault::ForeignTreeChild,
    ];

    fn accepts(self, err: &RegistryError) -> bool {
        matches!(
            (self, err),
            (Fault::NonOperator, RegistryError::NotOperator(_))
                | (Fault::ZeroCommitment, RegistryError::MissingTokenCommitment)
                | (Fault::Duplicate, RegistryError::DuplicateArtifact(_))
                | (Fault::Unreserved, RegistryError::UnreservedId(_))
                | (Fault::UnknownParent, RegistryError::UnknownParent(_))
                | (Fault::ForeignTreeChild, RegistryError::TreeIdMismatch)
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkloadReport {
    pub ops: usize,
    pub events: usize,
    /// Rejections of honest requests. Always zero for a correct registry.
    pub unexpected_errors: Vec<String>,
    /// Faults that were accepted, or rejected with the wrong error.
    pub fault_escapes: Vec<String>,
    pub faults_rejected: HashMap<Fault, usize>,
}

impl WorkloadReport {
    pub fn clean(&self) -> bool {
        self.unexpected_errors.is_empty() && self.fault_escapes.is_empty()
    }
}

#[derive(Debug, Clone)]
struct User {
    key: OwnershipToken,
    roots: Vec<AnchorId>,
}

/// Generator state. Keeps each simulated user's key so tests can verify
/// their trees afterwards; the registry never sees these keys.
#[derive(Debug, Clone)]
pub struct Workload {
    rng: ChaCha8Rng,
    operator: OperatorId,
    outsider: OperatorId,
    fault_rate: f64,
    users: Vec<User>,
    /// Content anchors and the user who initiated each.
    owned: Vec<(AnchorId, usize)>,
    accounts: Vec<(AnchorId, usize)>,
    all: Vec<AnchorId>,
    content_types: Vec<ArtifactType>,
}

impl Workload {
    /// `operator` must be whitelisted on the registry the workload drives.
    pub fn new(seed: u64, operator: OperatorId) -> Self {
        Workload {
            rng: ChaCha8Rng::seed_from_u64(seed),
            operator,
            outsider: OperatorId([0xee; 20]),
            fault_rate: 0.0,
            users: Vec::new(),
            owned: Vec::new(),
            accounts: Vec::new(),
            all: Vec::new(),
            content_types: crate::registry::DEFAULT_CONTENT_TYPES
                .iter()
                .map(|n| ArtifactType::new(*n).expect("default type"))
                .collect(),
        }
    }

    /// Share of operations (0.0 to 1.0) replaced by invalid requests.
    pub fn with_faults(mut self, rate: f64) -> Self {
        self.fault_rate = rate;
        self
    }

    /// `(root, key)` for every root registered so far.
    pub fn roots(&self) -> impl Iterator<Item = (&AnchorId, &OwnershipToken)> {
        self.users.iter().flat_map(|u| u.roots.iter().map(move |r| (r, &u.key)))
    }

    pub fn key_of_user(&self, user: usize) -> &OwnershipToken {
        &self.users[user].key
    }

    fn manifest(&mut self) -> String {
        hex::encode(self.rng.random::<[u8; 32]>())
    }

    fn content_type(&mut self) -> ArtifactType {
        self.content_types.choose(&mut self.rng).expect("non-empty").clone()
    }

    fn new_user(&mut self) -> usize {
        let entropy: [u8; 32] = self.rng.random();
        self.users.push(User { key: keygen(&entropy).expect("32 bytes"), roots: Vec::new() });
        self.users.len() - 1
    }

    fn request(
        &mut self,
        reg: &mut Registry,
        user: usize,
        parent: Option<AnchorId>,
        tree: Digest32,
        artifact_type: ArtifactType,
    ) -> RegistrationRequest {
        let id = reg.reserve("workload");
        let key = &self.users[user].key;
        let mut req = RegistrationRequest::new(
            id.clone(),
            artifact_type,
            String::new(),
            parent,
            &tree,
            token_commitment(key, &id),
        );
        req.manifest_hash = self.manifest();
        req.title = format!("artifact {}", id.as_str().get(..8).unwrap_or(id.as_str()));
        req.author = format!("user-{user}");
        req
    }

    fn note(&mut self, id: AnchorId, user: Option<usize>, class: ArtifactClass) {
        self.all.push(id.clone());
        if let Some(u) = user {
            match class {
                ArtifactClass::Account => self.accounts.push((id.clone(), u)),
                ArtifactClass::Content => {}
                ArtifactClass::Governance => return,
            }
            self.owned.push((id, u));
        }
    }

    /// Registers a root for `user` (a new user when `None`).
    pub fn new_root(&mut self, reg: &mut Registry, user: Option<usize>) -> Result<(AnchorId, usize), RegistryError> {
        let user = user.unwrap_or_else(|| self.new_user());
        let id = reg.reserve("workload");
        let key = self.users[user].key.clone();
        let mut req = RegistrationRequest::new(
            id.clone(),
            self.content_type(),
            self.manifest(),
            None,
            &tree_id(&key, &id),
            token_commitment(&key, &id),
        );
        req.author = format!("user-{user}");
        reg.register_content(&self.operator, req)?;
        self.users[user].roots.push(id.clone());
        self.note(id.clone(), Some(user), ArtifactClass::Content);
        Ok((id, user))
    }

    /// Registers a child of `parent` initiated by the parent's owner.
    pub fn child(
        &mut self,
        reg: &mut Registry,
        parent: &AnchorId,
        user: usize,
        artifact_type: Option<ArtifactType>,
    ) -> Result<AnchorId, RegistryError> {
        let tree = reg.record(parent).ok_or_else(|| RegistryError::UnknownParent(parent.clone()))?.tree_id;
        let ty = artifact_type.unwrap_or_else(|| self.content_type());
        let class = ty.class();
        let req = self.request(reg, user, Some(parent.clone()), tree, ty);
        let id = req.ar_id.clone();
        reg.register_content(&self.operator, req)?;
        self.note(id.clone(), Some(user), class);
        Ok(id)
    }

    pub fn governance(&mut self, reg: &mut Registry, kind: GovernanceKind, target: &AnchorId) -> Result<AnchorId, RegistryError> {
        let e = reg.register_governance(&self.operator, kind, target, "workload")?;
        self.note(e.ar_id_plain.clone(), None, ArtifactClass::Governance);
        Ok(e.ar_id_plain)
    }

    /// Grows a random tree for a fresh user: at most `max_nodes` anchors
    /// (governance included) and at most `max_depth` edges below the root.
    /// Roughly `governance_share` of the non-root anchors are governance.
    pub fn grow_tree(
        &mut self,
        reg: &mut Registry,
        max_depth: usize,
        max_nodes: usize,
        governance_share: f64,
    ) -> Result<(AnchorId, usize), RegistryError> {
        let (root, user) = self.new_root(reg, None)?;
        let target = self.rng.random_range(1..=max_nodes.max(1));
        let mut content: Vec<(AnchorId, usize)> = vec![(root.clone(), 0)];
        let mut count = 1;
        while count < target {
            let (parent, depth) = content.choose(&mut self.rng).expect("root present").clone();
            if depth >= max_depth {
                continue;
            }
            if self.rng.random_bool(governance_share) {
                let kind = *GovernanceKind::ALL.choose(&mut self.rng).expect("non-empty");
                self.governance(reg, kind, &parent)?;
            } else {
                let child = self.child(reg, &parent, user, None)?;
                content.push((child, depth + 1));
            }
            count += 1;
        }
        Ok((root, user))
    }

    /// Runs `n` random operations and reports anything unexpected.
    pub fn run(&mut self, reg: &mut Registry, n: usize) -> WorkloadReport {
        let mut report = WorkloadReport::default();
        for _ in 0..n {
            report.ops += 1;
            if !self.owned.is_empty() && self.rng.random_bool(self.fault_rate) {
                self.inject_fault(reg, &mut report);
                continue;
            }
            if let Err(e) = self.honest_step(reg) {
                report.unexpected_errors.push(e.to_string());
            }
        }
        report.events = reg.events().len();
        report
    }

    fn honest_step(&mut self, reg: &mut Registry) -> Result<(), RegistryError> {
        let roll = self.rng.random_range(0..100u32);
        if self.owned.is_empty() || roll < 10 {
            let existing = (!self.users.is_empty() && self.rng.random_bool(0.3))
                .then(|| self.rng.random_range(0..self.users.len()));
            self.new_root(reg, existing)?;
            return Ok(());
        }
        let (parent, user) = self.owned.choose(&mut self.rng).expect("non-empty").clone();
        match roll {
            10..=59 => {
                self.child(reg, &parent, user, None)?;
            }
            60..=64 => {
                self.child(reg, &parent, user, Some(ArtifactType::account()))?;
            }
            65..=74 if !self.accounts.is_empty() => {
                let (account, owner) = self.accounts.choose(&mut self.rng).expect("non-empty").clone();
                let tree = reg.record(&account).expect("registered").tree_id;
                let ty = self.content_type();
                let req = self.request(reg, owner, None, tree, ty);
                let id = req.ar_id.clone();
                reg.register_gated(&self.operator, req, &account)?;
                self.note(id, Some(owner), ArtifactClass::Content);
            }
            75..=84 => {
                // Someone cites an anchor from another tree.
                let target = self.all.choose(&mut self.rng).expect("non-empty").clone();
                let (own_root, owner) = self.owned.choose(&mut self.rng).expect("non-empty").clone();
                let tree = reg.record(&own_root).expect("registered").tree_id;
                let ty = self.content_type();
                let req = self.request(reg, owner, None, tree, ty);
                let id = req.ar_id.clone();
                reg.register_targeted(&self.operator, req, &target)?;
                self.note(id, Some(owner), ArtifactClass::Content);
            }
            _ => {
                let target = self.all.choose(&mut self.rng).expect("non-empty").clone();
                let kind = *GovernanceKind::ALL.choose(&mut self.rng).expect("non-empty");
                self.governance(reg, kind, &target)?;
            }
        }
        Ok(())
    }

    fn inject_fault(&mut self, reg: &mut Registry, report: &mut WorkloadReport) {
        let fault = *Fault::ALL.choose(&mut self.rng).expect("non-empty");
        let (parent, user) = self.owned.choose(&mut self.rng).expect("non-empty").clone();
        let tree = reg.record(&parent).expect("registered").tree_id;
        let ty = self.content_type();
        let mut req = self.request(reg, user, Some(parent.clone()), tree, ty);
        let mut caller = self.operator;
        match fault {
            Fault::NonOperator => caller = self.outsider,
            Fault::ZeroCommitment => req.token_commitment = Digest32::ZERO,
            Fault::Duplicate => req.ar_id = parent,
            Fault::Unreserved => req.ar_id = AnchorId::new(format!("unreserved-{}", self.rng.random::<u64>())).expect("valid"),
            Fault::UnknownParent => req.parent_ar_id = Some(AnchorId::new(format!("ghost-{}", self.rng.random::<u64>())).expect("valid")),
            Fault::ForeignTreeChild => req.tree_id_plain = hex::encode(self.rng.random::<[u8; 32]>()),
        }
        let before = reg.events().len();
        match reg.register_content(&caller, req) {
            Err(e) if fault.accepts(&e) && reg.events().len() == before => {
                *report.faults_rejected.entry(fault).or_default() += 1;
            }
            Err(e) => report.fault_escapes.push(format!("{fault:?} rejected with {e}")),
            Ok(_) => report.fault_escapes.push(format!("{fault:?} was accepted")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::reconstruct;
    use crate::verification::authenticate_tree;

    const OP: OperatorId = OperatorId([1; 20]);

    #[test]
    fn honest_run_is_clean_and_authenticates() {
        let mut reg = Registry::new([OP]).unwrap().with_seed([1; 32]);
        let mut w = Workload::new(11, OP);
        let report = w.run(&mut reg, 2_000);
        assert!(report.clean(), "{report:?}");
        assert_eq!(report.events, reg.events().len());
        let forest = reconstruct(reg.events()).unwrap();
        for (root, key) in w.roots() {
            assert!(authenticate_tree(key, root, &forest).unwrap().authenticated);
        }
    }

    #[test]
    fn faults_are_all_rejected() {
        let mut reg = Registry::new([OP]).unwrap().with_seed([2; 32]);
        let mut w = Workload::new(12, OP).with_faults(0.4);
        let report = w.run(&mut reg, 3_000);
        assert!(report.clean(), "{report:?}");
        for f in Fault::ALL {
            assert!(report.faults_rejected.get(&f).copied().unwrap_or(0) > 0, "{f:?} never exercised");
        }
    }

    #[test]
    fn grown_trees_respect_bounds() {
        let mut reg = Registry::new([OP]).unwrap().with_seed([3; 32]);
        let mut w = Workload::new(13, OP);
        for _ in 0..20 {
            let (root, _) = w.grow_tree(&mut reg, 6, 200, 0.1).unwrap();
            let forest = reconstruct(reg.events()).unwrap();
            let tree = forest.tree_of(&root).unwrap();
            assert!(tree.nodes.len() <= 200);
            for record in tree.nodes.values() {
                let mut depth = 0;
                let mut cur = record.clone();
                while let Some(p) = &cur.parent_ar_id {
                    depth += 1;
                    cur = tree.nodes[p].clone();
                }
                assert!(depth <= 6);
            }
        }
    }
}
