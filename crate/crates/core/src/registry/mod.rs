//! Operator-gated registration state machine.
//!
//! [`Registry`] simulates the on-chain contract: a uniqueness map of
//! registered anchors, the PENDING reservation set, the operator whitelist,
//! and the append-only event log. Every mutating call validates fully before
//! touching state, so a rejected call leaves the registry unchanged.
//!
//! Enforcement summary:
//!
//! | rule | error |
//! |------|-------|
//! | caller must be a whitelisted operator | [`RegistryError::NotOperator`] |
//! | content commitments are never `0^32` | [`RegistryError::MissingTokenCommitment`] |
//! | an `arId` registers at most once | [`RegistryError::DuplicateArtifact`] |
//! | content ids must come from [`Registry::reserve`] | [`RegistryError::UnreservedId`] |
//! | parents register before children | [`RegistryError::UnknownParent`] |
//! | lineage children inherit the parent's tree | [`RegistryError::TreeIdMismatch`] |
//!
//! Governance anchors take no commitment argument at all; the zero sentinel
//! is written internally.

mod gas;
mod types;

use std::collections::{BTreeSet, HashMap};

use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng, TryRngCore};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

pub use gas::{
    gas_estimate, GasReport, RequestKind, EVENT_EMISSION_GAS, STORE_COMMITMENT_GAS, TOTAL_ADDED_GAS,
    ZERO_CHECK_GAS,
};
pub use types::{
    ArtifactClass, ArtifactType, GovernanceKind, OperatorId, Taxonomy, ACCOUNT_TYPE, DEFAULT_CONTENT_TYPES,
    GOVERNANCE_TYPES,
};

use crate::commitments::{is_lower_hex, AnchorId, Digest32};
use crate::eventlog::{string_topic, AnchoredEvent, EventLog, EventLogError};

/// Block number of the first event.
pub const DEPLOY_BLOCK: u64 = 1;
/// Prefix of auto-generated governance anchor ids.
pub const GOVERNANCE_ID_PREFIX: &str = "GOV-";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("registry needs at least one operator")]
    NoOperators,
    #[error("caller {0} is not a whitelisted operator")]
    NotOperator(OperatorId),
    #[error("content registration carries a zero token commitment")]
    MissingTokenCommitment,
    #[error("artifact {0} is already registered")]
    DuplicateArtifact(AnchorId),
    #[error("artifact id {0} was never reserved")]
    UnreservedId(AnchorId),
    #[error("parent {0} is not registered")]
    UnknownParent(AnchorId),
    #[error("target {0} is not registered")]
    UnknownTarget(AnchorId),
    #[error("treeIdPlain does not match the parent's tree")]
    TreeIdMismatch,
    #[error("manifest hash must be 64 lowercase hex characters")]
    BadManifestHash,
    #[error("treeIdPlain must be 64 lowercase hex characters")]
    BadTreeId,
    #[error("{0} is not an ACCOUNT anchor")]
    NoAccountAnchor(AnchorId),
    #[error("request tree differs from the account anchor's tree")]
    AccountTreeMismatch,
    #[error("parentArId {parent} conflicts with target {target}")]
    ParentConflict { parent: AnchorId, target: AnchorId },
    #[error("artifact type {0} is not in this registry's taxonomy")]
    UnknownArtifactType(String),
    #[error("{0:?} artifacts cannot use this entry point")]
    WrongEntryPoint(ArtifactClass),
    #[error("invalid taxonomy: {0}")]
    BadTaxonomy(String),
    #[error("invalid operator address {0}")]
    BadOperator(String),
    #[error("inconsistent event log: {0}")]
    CorruptLog(String),
}

impl From<EventLogError> for RegistryError {
    fn from(e: EventLogError) -> Self {
        RegistryError::CorruptLog(e.to_string())
    }
}

/// What a client (through the operator) submits for a content registration.
///
/// The `arIdPlain` event field is always `ar_id` itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistrationRequest {
    pub ar_id: AnchorId,
    pub artifact_type: ArtifactType,
    pub descriptor: String,
    pub title: String,
    pub author: String,
    /// SHA-256 of the artifact manifest, 64 lowercase hex characters.
    pub manifest_hash: String,
    pub parent_ar_id: Option<AnchorId>,
    pub tree_id_plain: String,
    pub token_commitment: Digest32,
}

impl RegistrationRequest {
    /// A request with empty descriptive metadata.
    pub fn new(
        ar_id: AnchorId,
        artifact_type: ArtifactType,
        manifest_hash: impl Into<String>,
        parent_ar_id: Option<AnchorId>,
        tree_id: &Digest32,
        token_commitment: Digest32,
    ) -> Self {
        RegistrationRequest {
            ar_id,
            artifact_type,
            descriptor: String::new(),
            title: String::new(),
            author: String::new(),
            manifest_hash: manifest_hash.into(),
            parent_ar_id,
            tree_id_plain: tree_id.to_hex(),
            token_commitment,
        }
    }
}

/// One registered node, as stored by the registry or rebuilt from a log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnchorRecord {
    pub ar_id: AnchorId,
    pub artifact_type: ArtifactType,
    pub descriptor: String,
    pub title: String,
    pub author: String,
    pub manifest_hash: String,
    pub parent_ar_id: Option<AnchorId>,
    pub tree_id_plain: String,
    pub token_commitment: Digest32,
    pub registrant: OperatorId,
    pub block_number: u64,
    pub log_index: u64,
    pub tree_id: Digest32,
}

impl AnchorRecord {
    pub fn from_event(e: &AnchoredEvent) -> Result<Self, RegistryError> {
        let tree_id = Digest32::from_hex(&e.tree_id_plain).map_err(|_| RegistryError::BadTreeId)?;
        Ok(Self::with_tree_id(e, tree_id))
    }

    /// `from_event` for a caller that already parsed `treeIdPlain`.
    pub(crate) fn with_tree_id(e: &AnchoredEvent, tree_id: Digest32) -> Self {
        AnchorRecord {
            ar_id: e.ar_id_plain.clone(),
            artifact_type: e.artifact_type.clone(),
            descriptor: e.descriptor.clone(),
            title: e.title.clone(),
            author: e.author.clone(),
            manifest_hash: e.manifest_hash.clone(),
            parent_ar_id: e.parent_ar_id.clone(),
            tree_id_plain: e.tree_id_plain.clone(),
            token_commitment: e.token_commitment,
            registrant: e.registrant,
            block_number: e.block_number,
            log_index: e.log_index,
            tree_id,
        }
    }

    pub fn class(&self) -> ArtifactClass {
        self.artifact_type.class()
    }

    pub fn is_root(&self) -> bool {
        self.parent_ar_id.is_none()
    }

    pub fn position(&self) -> (u64, u64) {
        (self.block_number, self.log_index)
    }
}

/// Which contract-level checks are live.
///
/// Both are on in every normal registry. Turning them off exists only for
/// the necessity drills in [`crate::poisoning`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Enforcement {
    pub operator_gate: bool,
    pub zero_commitment_check: bool,
}

impl Default for Enforcement {
    fn default() -> Self {
        Enforcement { operator_gate: true, zero_commitment_check: true }
    }
}

#[derive(Debug, Clone)]
enum IdSource {
    Seeded(ChaCha20Rng),
    Os,
}

impl IdSource {
    fn next_hex(&mut self) -> String {
        let mut bytes = [0u8; 16];
        match self {
            IdSource::Seeded(rng) => rng.fill_bytes(&mut bytes),
            IdSource::Os => OsRng.try_fill_bytes(&mut bytes).expect("OS random source unavailable"),
        }
        hex::encode(bytes)
    }
}

#[derive(Debug, Clone)]
pub struct Registry {
    operators: BTreeSet<OperatorId>,
    taxonomy: Taxonomy,
    registered: HashMap<AnchorId, AnchorRecord>,
    reservations: HashMap<AnchorId, String>,
    log: EventLog,
    next_block: u64,
    ids: IdSource,
    enforcement: Enforcement,
}

impl Registry {
    pub fn new(operators: impl IntoIterator<Item = OperatorId>) -> Result<Self, RegistryError> {
        let operators: BTreeSet<_> = operators.into_iter().collect();
        if operators.is_empty() {
            return Err(RegistryError::NoOperators);
        }
        Ok(Registry {
            operators,
            taxonomy: Taxonomy::default(),
            registered: HashMap::new(),
            reservations: HashMap::new(),
            log: EventLog::new(),
            next_block: DEPLOY_BLOCK,
            ids: IdSource::Os,
            enforcement: Enforcement::default(),
        })
    }

    pub fn with_taxonomy(mut self, taxonomy: Taxonomy) -> Self {
        self.taxonomy = taxonomy;
        self
    }

    /// Makes reservation and governance ids reproducible.
    pub fn with_seed(mut self, seed: [u8; 32]) -> Self {
        self.ids = IdSource::Seeded(ChaCha20Rng::from_seed(seed));
        self
    }

    /// Rebuilds a registry from a previously exported log plus the ids that
    /// were still PENDING. Events must be in log order with parents first.
    pub fn restore(
        operators: impl IntoIterator<Item = OperatorId>,
        taxonomy: Taxonomy,
        events: Vec<AnchoredEvent>,
        pending: impl IntoIterator<Item = (AnchorId, String)>,
    ) -> Result<Self, RegistryError> {
        let mut reg = Registry::new(operators)?.with_taxonomy(taxonomy);
        for e in &events {
            if reg.registered.contains_key(&e.ar_id_plain) {
                return Err(RegistryError::DuplicateArtifact(e.ar_id_plain.clone()));
            }
            if let Some(p) = &e.parent_ar_id {
                if !reg.registered.contains_key(p) {
                    return Err(RegistryError::UnknownParent(p.clone()));
                }
            }
            let record = AnchorRecord::from_event(e)?;
            reg.registered.insert(record.ar_id.clone(), record);
        }
        reg.log = EventLog::from_events(events)?;
        reg.next_block = reg.log.last().map_or(DEPLOY_BLOCK, |e| e.block_number + 1);
        for (id, owner) in pending {
            if reg.registered.contains_key(&id) {
                return Err(RegistryError::DuplicateArtifact(id));
            }
            reg.reservations.insert(id, owner);
        }
        Ok(reg)
    }

    /// Test seam for the necessity drills. Never call this on a registry
    /// whose log you intend to trust.
    pub fn set_enforcement(&mut self, enforcement: Enforcement) {
        self.enforcement = enforcement;
    }

    pub fn enforcement(&self) -> Enforcement {
        self.enforcement
    }

    pub fn operators(&self) -> &BTreeSet<OperatorId> {
        &self.operators
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn is_operator(&self, who: &OperatorId) -> bool {
        self.operators.contains(who)
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn events(&self) -> &[AnchoredEvent] {
        self.log.events()
    }

    pub fn registered(&self) -> &HashMap<AnchorId, AnchorRecord> {
        &self.registered
    }

    pub fn record(&self, id: &AnchorId) -> Option<&AnchorRecord> {
        self.registered.get(id)
    }

    pub fn is_reserved(&self, id: &AnchorId) -> bool {
        self.reservations.contains_key(id)
    }

    /// PENDING reservations and the client reference each was issued to.
    pub fn reservations(&self) -> impl Iterator<Item = (&AnchorId, &str)> {
        self.reservations.iter().map(|(k, v)| (k, v.as_str()))
    }

    pub fn next_block(&self) -> u64 {
        self.next_block
    }

    /// The per-registration gas overhead. Independent of registry size.
    pub fn gas_estimate(&self, kind: RequestKind) -> GasReport {
        gas_estimate(kind)
    }

    fn fresh_id(&mut self, prefix: &str) -> AnchorId {
        loop {
            let id = AnchorId::new(format!("{prefix}{}", self.ids.next_hex())).expect("hex ids are valid");
            if !self.registered.contains_key(&id) && !self.reservations.contains_key(&id) {
                return id;
            }
        }
    }

    /// Pre-generates a unique content id and holds it as PENDING.
    pub fn reserve(&mut self, requested_by: &str) -> AnchorId {
        let id = self.fresh_id("");
        self.reservations.insert(id.clone(), requested_by.to_owned());
        id
    }

    fn check_caller(&self, caller: &OperatorId) -> Result<(), RegistryError> {
        if self.enforcement.operator_gate && !self.operators.contains(caller) {
            return Err(RegistryError::NotOperator(*caller));
        }
        Ok(())
    }

    /// Checks shared by all three content entry points. Returns the parsed
    /// tree id of the request.
    fn check_content(&self, req: &RegistrationRequest) -> Result<Digest32, RegistryError> {
        if !self.taxonomy.contains(&req.artifact_type) {
            return Err(RegistryError::UnknownArtifactType(req.artifact_type.name().to_owned()));
        }
        let class = req.artifact_type.class();
        if class == ArtifactClass::Governance {
            return Err(RegistryError::WrongEntryPoint(class));
        }
        if self.enforcement.zero_commitment_check && req.token_commitment.is_zero() {
            return Err(RegistryError::MissingTokenCommitment);
        }
        if self.registered.contains_key(&req.ar_id) {
            return Err(RegistryError::DuplicateArtifact(req.ar_id.clone()));
        }
        if !self.reservations.contains_key(&req.ar_id) {
            return Err(RegistryError::UnreservedId(req.ar_id.clone()));
        }
        if req.manifest_hash.len() != 64 || !is_lower_hex(&req.manifest_hash) {
            return Err(RegistryError::BadManifestHash);
        }
        Digest32::from_hex(&req.tree_id_plain).map_err(|_| RegistryError::BadTreeId)
    }

    /// Parent must exist and share the request's tree.
    fn check_lineage_parent(&self, parent: &AnchorId, tree_id: &Digest32) -> Result<(), RegistryError> {
        let p = self
            .registered
            .get(parent)
            .ok_or_else(|| RegistryError::UnknownParent(parent.clone()))?;
        if p.tree_id != *tree_id {
            return Err(RegistryError::TreeIdMismatch);
        }
        Ok(())
    }

    /// `registerContent`: a root (no parent) or a child within the parent's
    /// tree.
    pub fn register_content(
        &mut self,
        caller: &OperatorId,
        req: RegistrationRequest,
    ) -> Result<AnchoredEvent, RegistryError> {
        self.check_caller(caller)?;
        let tree_id = self.check_content(&req)?;
        if let Some(parent) = &req.parent_ar_id {
            self.check_lineage_parent(parent, &tree_id)?;
        }
        Ok(self.commit_content(caller, req))
    }

    /// `registerGated`: a registration drawn against an ACCOUNT anchor's
    /// batch allowance. The request must live in the account's tree; with no
    /// explicit parent it attaches directly under the account anchor.
    pub fn register_gated(
        &mut self,
        caller: &OperatorId,
        mut req: RegistrationRequest,
        account_anchor: &AnchorId,
    ) -> Result<AnchoredEvent, RegistryError> {
        self.check_caller(caller)?;
        let tree_id = self.check_content(&req)?;
        let account = self
            .registered
            .get(account_anchor)
            .filter(|r| r.class() == ArtifactClass::Account)
            .ok_or_else(|| RegistryError::NoAccountAnchor(account_anchor.clone()))?;
        if account.tree_id != tree_id {
            return Err(RegistryError::AccountTreeMismatch);
        }
        let parent = req.parent_ar_id.get_or_insert_with(|| account_anchor.clone()).clone();
        self.check_lineage_parent(&parent, &tree_id)?;
        Ok(self.commit_content(caller, req))
    }

    /// `registerTargeted`: permissionless attachment under any registered
    /// anchor. The new anchor keeps the tree id it was submitted with, which
    /// may differ from the target's.
    pub fn register_targeted(
        &mut self,
        caller: &OperatorId,
        mut req: RegistrationRequest,
        target_ar_id: &AnchorId,
    ) -> Result<AnchoredEvent, RegistryError> {
        self.check_caller(caller)?;
        self.check_content(&req)?;
        if let Some(parent) = &req.parent_ar_id {
            if parent != target_ar_id {
                return Err(RegistryError::ParentConflict { parent: parent.clone(), target: target_ar_id.clone() });
            }
        }
        if !self.registered.contains_key(target_ar_id) {
            return Err(RegistryError::UnknownTarget(target_ar_id.clone()));
        }
        req.parent_ar_id = Some(target_ar_id.clone());
        Ok(self.commit_content(caller, req))
    }

    /// Registers a REVIEW, VOID or AFFIRMED anchor under `target_ar_id`.
    /// There is no commitment parameter: the event always carries `0^32`.
    pub fn register_governance(
        &mut self,
        caller: &OperatorId,
        kind: GovernanceKind,
        target_ar_id: &AnchorId,
        descriptor: &str,
    ) -> Result<AnchoredEvent, RegistryError> {
        self.check_caller(caller)?;
        let tree_id_plain = self
            .registered
            .get(target_ar_id)
            .ok_or_else(|| RegistryError::UnknownTarget(target_ar_id.clone()))?
            .tree_id_plain
            .clone();
        let ar_id = self.fresh_id(GOVERNANCE_ID_PREFIX);
        let event = self.build_event(
            caller,
            ar_id,
            ArtifactType::governance(kind),
            descriptor.to_owned(),
            String::new(),
            String::new(),
            String::new(),
            Some(target_ar_id.clone()),
            tree_id_plain,
            Digest32::ZERO,
        );
        Ok(self.append(event))
    }

    fn commit_content(&mut self, caller: &OperatorId, req: RegistrationRequest) -> AnchoredEvent {
        self.reservations.remove(&req.ar_id);
        let event = self.build_event(
            caller,
            req.ar_id,
            req.artifact_type,
            req.descriptor,
            req.title,
            req.author,
            req.manifest_hash,
            req.parent_ar_id,
            req.tree_id_plain,
            req.token_commitment,
        );
        self.append(event)
    }

    #[allow(clippy::too_many_arguments)]
    fn build_event(
        &self,
        caller: &OperatorId,
        ar_id: AnchorId,
        artifact_type: ArtifactType,
        descriptor: String,
        title: String,
        author: String,
        manifest_hash: String,
        parent_ar_id: Option<AnchorId>,
        tree_id_plain: String,
        token_commitment: Digest32,
    ) -> AnchoredEvent {
        AnchoredEvent {
            ar_id_topic: string_topic(ar_id.as_str()),
            registrant: *caller,
            artifact_type,
            ar_id_plain: ar_id,
            descriptor,
            title,
            author,
            manifest_hash,
            parent_ar_id,
            tree_id_topic: string_topic(&tree_id_plain),
            tree_id_plain,
            token_commitment,
            block_number: self.next_block,
            log_index: self.log.len() as u64,
        }
    }

    fn append(&mut self, event: AnchoredEvent) -> AnchoredEvent {
        let record = AnchorRecord::from_event(&event).expect("validated tree id");
        self.log.append(event.clone()).expect("registry emits events in order");
        self.registered.insert(record.ar_id.clone(), record);
        self.next_block += 1;
        event
    }
}
