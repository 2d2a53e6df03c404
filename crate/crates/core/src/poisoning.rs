//! Tree-poisoning attacks and their closure mechanisms.
//!
//! Three attacks against a victim's tree, each driven through the ordinary
//! registry API:
//!
//! | variant | closed by |
//! |---------|-----------|
//! | fraudulent root | cryptographic priority |
//! | malicious child attachment | VOID governance cascade |
//! | tree identity spoofing | contract enforcement |
//!
//! Every attack first records the victim's [`AuthResult`], runs its script,
//! rebuilds the forest from the log, and evaluates the closure conditions
//! from the resulting evidence. [`necessity_drill`] switches one mechanism
//! off and shows its variant reopening while the other two stay closed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::commitments::{keccak256, keygen, token_commitment, tree_id, AnchorId, Digest32, OwnershipToken};
use crate::reconstruction::{reconstruct_with, Forest, ProvenanceTree, ReconstructError, ReconstructOptions};
use crate::registry::{
    ArtifactClass, ArtifactType, Enforcement, GovernanceKind, OperatorId, RegistrationRequest, Registry, RegistryError,
};
use crate::verification::{authenticate_tree, verify_initiation, AuthResult};
use crate::workload::{Workload, WorkloadReport};

pub const SCENARIO_OPERATOR: OperatorId = OperatorId([0x0a; 20]);
/// The adversary's own wallet, which is not on the whitelist.
pub const ADVERSARY_WALLET: OperatorId = OperatorId([0xad; 20]);

#[derive(Debug, Error)]
pub enum PoisoningError {
    #[error("unknown mechanism {0:?} (expected priority, cascade or enforcement)")]
    UnknownMechanism(String),
    #[error("unknown attack variant {0:?}")]
    UnknownVariant(String),
    #[error("scenario setup failed: {0}")]
    Setup(#[from] RegistryError),
    #[error("reconstruction failed: {0}")]
    Reconstruct(#[from] ReconstructError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    FraudulentRoot,
    MaliciousChild,
    TreeSpoofing,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::FraudulentRoot, Variant::MaliciousChild, Variant::TreeSpoofing];

    /// The mechanism that closes this variant.
    pub fn closed_by(self) -> Mechanism {
        match self {
            Variant::FraudulentRoot => Mechanism::CryptographicPriority,
            Variant::MaliciousChild => Mechanism::GovernanceCascade,
            Variant::TreeSpoofing => Mechanism::ContractEnforcement,
        }
    }

    pub fn default_script(self) -> Vec<AttackStep> {
        match self {
            Variant::FraudulentRoot => vec![AttackStep::FraudulentRoot { children: 2 }],
            Variant::MaliciousChild => {
                vec![AttackStep::AttachChild { grandchildren: 2 }, AttackStep::VoidAttachment]
            }
            Variant::TreeSpoofing => vec![
                AttackStep::SpoofDirect,
                AttackStep::SpoofZeroCommitment,
                AttackStep::SpoofForeignChild,
                AttackStep::SpoofRoot,
            ],
        }
    }
}

impl FromStr for Variant {
    type Err = PoisoningError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "fraudulent-root" | "1" => Ok(Variant::FraudulentRoot),
            "malicious-child" | "2" => Ok(Variant::MaliciousChild),
            "tree-spoofing" | "3" => Ok(Variant::TreeSpoofing),
            _ => Err(PoisoningError::UnknownVariant(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mechanism {
    CryptographicPriority,
    GovernanceCascade,
    ContractEnforcement,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] =
        [Mechanism::CryptographicPriority, Mechanism::GovernanceCascade, Mechanism::ContractEnforcement];

    /// The variant that reopens without this mechanism.
    pub fn guards(self) -> Variant {
        Variant::ALL.into_iter().find(|v| v.closed_by() == self).expect("one variant per mechanism")
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::CryptographicPriority => "priority",
            Mechanism::GovernanceCascade => "cascade",
            Mechanism::ContractEnforcement => "enforcement",
        })
    }
}

impl FromStr for Mechanism {
    type Err = PoisoningError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "priority" | "cryptographic-priority" => Ok(Mechanism::CryptographicPriority),
            "cascade" | "governance-cascade" | "void" => Ok(Mechanism::GovernanceCascade),
            "enforcement" | "contract-enforcement" | "gate" => Ok(Mechanism::ContractEnforcement),
            _ => Err(PoisoningError::UnknownMechanism(s.to_owned())),
        }
    }
}

/// Which closure mechanisms are live for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Mechanisms {
    pub priority: bool,
    pub cascade: bool,
    pub enforcement: bool,
}

impl Mechanisms {
    pub fn all() -> Self {
        Mechanisms { priority: true, cascade: true, enforcement: true }
    }

    pub fn without(m: Mechanism) -> Self {
        let mut out = Mechanisms::all();
        match m {
            Mechanism::CryptographicPriority => out.priority = false,
            Mechanism::GovernanceCascade => out.cascade = false,
            Mechanism::ContractEnforcement => out.enforcement = false,
        }
        out
    }
}

impl Default for Mechanisms {
    fn default() -> Self {
        Mechanisms::all()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "step", rename_all = "camelCase")]
pub enum AttackStep {
    /// Adversary registers its own root, then `children` anchors under it.
    FraudulentRoot { children: usize },
    /// Adversary attaches an anchor under the victim's deepest anchor via
    /// the targeted path, then `grandchildren` anchors under that.
    AttachChild { grandchildren: usize },
    /// The operator voids the most recent attachment.
    VoidAttachment,
    /// Adversary calls the registry directly, claiming the victim's tree.
    SpoofDirect,
    /// Through the operator, claiming the victim's tree with a zero
    /// commitment.
    SpoofZeroCommitment,
    /// Through the operator, claiming the victim's tree under a parent from
    /// the adversary's own tree.
    SpoofForeignChild,
    /// Through the operator, a new root carrying the victim's tree id.
    SpoofRoot,
}

#[derive(Debug, Clone)]
pub struct AttackScenario {
    pub variant: Variant,
    pub victim_key: OwnershipToken,
    pub adversary_key: OwnershipToken,
    pub victim_root: AnchorId,
    /// Victim lineage in registration order, root first.
    pub victim_anchors: Vec<AnchorId>,
    pub script: Vec<AttackStep>,
    pub mechanisms: Mechanisms,
}

impl AttackScenario {
    /// Registers the victim's tree (a root and a two-anchor chain under it)
    /// and returns a scenario with the variant's default script.
    pub fn prepare(
        registry: &mut Registry,
        variant: Variant,
        victim_key: OwnershipToken,
        adversary_key: OwnershipToken,
    ) -> Result<Self, PoisoningError> {
        let root = registry.reserve("victim");
        let t_u = tree_id(&victim_key, &root);
        let mut anchors = vec![root.clone()];
        let req = content_request(root.clone(), None, &t_u, &victim_key, "victim root");
        registry.register_content(&SCENARIO_OPERATOR, req)?;
        for i in 0..2 {
            let id = registry.reserve("victim");
            let parent = anchors.last().cloned();
            let req = content_request(id.clone(), parent, &t_u, &victim_key, &format!("victim derivative {i}"));
            registry.register_content(&SCENARIO_OPERATOR, req)?;
            anchors.push(id);
        }
        Ok(AttackScenario {
            variant,
            victim_key,
            adversary_key,
            victim_root: root,
            victim_anchors: anchors,
            script: variant.default_script(),
            mechanisms: Mechanisms::all(),
        })
    }

    /// Fresh registry plus a prepared scenario, keys derived from `seed`.
    pub fn seeded(variant: Variant, seed: u64) -> Result<(Registry, Self), PoisoningError> {
        let mut registry = scenario_registry(seed);
        let victim = derive_key(seed, b"victim");
        let adversary = derive_key(seed, b"adversary");
        let scenario = AttackScenario::prepare(&mut registry, variant, victim, adversary)?;
        Ok((registry, scenario))
    }

    pub fn with_mechanisms(mut self, mechanisms: Mechanisms) -> Self {
        self.mechanisms = mechanisms;
        self
    }

    fn victim_tree_id(&self) -> Digest32 {
        tree_id(&self.victim_key, &self.victim_root)
    }
}

pub fn scenario_registry(seed: u64) -> Registry {
    let mut s = [0u8; 32];
    s[..8].copy_from_slice(&seed.to_le_bytes());
    Registry::new([SCENARIO_OPERATOR]).expect("one operator").with_seed(s)
}

fn derive_key(seed: u64, label: &[u8]) -> OwnershipToken {
    let mut pre = seed.to_le_bytes().to_vec();
    pre.extend_from_slice(label);
    keygen(keccak256(&pre).as_bytes()).expect("32 bytes")
}

fn content_request(
    id: AnchorId,
    parent: Option<AnchorId>,
    tree: &Digest32,
    key: &OwnershipToken,
    title: &str,
) -> RegistrationRequest {
    let mut req = RegistrationRequest::new(
        id.clone(),
        ArtifactType::new("DOCUMENT").expect("default type"),
        keccak256(title.as_bytes()).to_hex(),
        parent,
        tree,
        token_commitment(key, &id),
    );
    req.title = title.to_owned();
    req
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpoofAttempt {
    pub path: String,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ar_id: Option<AnchorId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Whether the accepted anchor sits in the victim's lineage.
    pub in_victim_lineage: bool,
    /// Whether the anchor's commitment verifies under the victim's key.
    pub verifies_under_victim_key: bool,
}

/// Facts gathered from the log after an attack. Fields that do not apply to
/// the variant stay empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Evidence {
    pub victim_tree_id: Digest32,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub adversary_tree_ids: Vec<Digest32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_ids_distinct: Option<bool>,
    /// `None` when priority could not be decided.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub priority_winner: Option<Digest32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub victim_has_priority: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary_authenticates_victim: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub attachment: Vec<AnchorId>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub suppressed: Vec<AnchorId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attachment_visible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub victim_nodes_suppressed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub void_commitment_zero: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attributable_to_adversary: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub spoof_attempts: Vec<SpoofAttempt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spoofed_root_authenticates: Option<bool>,
    pub log_append_only: bool,
    pub events_added: usize,
    pub victim_auth_unchanged: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub step_errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AttackOutcome {
    pub variant: Variant,
    pub closed_by: Mechanism,
    /// Whether every closure condition for the variant held.
    pub closed: bool,
    pub mechanisms: Mechanisms,
    pub evidence: Evidence,
    pub victim_auth_before: AuthResult,
    /// `Err` when the victim's lineage no longer passes governance
    /// separation (a zero-commitment content anchor got in).
    #[serde(serialize_with = "ser_auth")]
    pub victim_auth_after: Result<AuthResult, String>,
}

fn ser_auth<S: serde::Serializer>(v: &Result<AuthResult, String>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Ok(a) => a.serialize(s),
        Err(e) => BTreeMap::from([("error", e)]).serialize(s),
    }
}

struct Run<'a> {
    registry: &'a mut Registry,
    scenario: &'a AttackScenario,
    evidence: Evidence,
    adversary_roots: Vec<AnchorId>,
    void_ids: Vec<AnchorId>,
}

impl Run<'_> {
    fn options(&self) -> ReconstructOptions {
        ReconstructOptions { apply_void_cascade: self.scenario.mechanisms.cascade }
    }

    fn forest(&self) -> Result<Forest, PoisoningError> {
        Ok(reconstruct_with(self.registry.events(), self.options())?.0)
    }

    fn adversary_content(&mut self, parent: Option<AnchorId>, tree: Option<Digest32>, title: &str) -> RegistrationRequest {
        let id = self.registry.reserve("adversary");
        let key = &self.scenario.adversary_key;
        let tree = tree.unwrap_or_else(|| tree_id(key, &id));
        content_request(id, parent, &tree, key, title)
    }

    fn step(&mut self, step: &AttackStep) -> Result<(), PoisoningError> {
        let op = SCENARIO_OPERATOR;
        let t_u = self.scenario.victim_tree_id();
        match step {
            AttackStep::FraudulentRoot { children } => {
                let mut req = self.adversary_content(None, None, "original work, predates all others");
                req.descriptor = "priority claim".into();
                let root = req.ar_id.clone();
                let t_a = tree_id(&self.scenario.adversary_key, &root);
                self.registry.register_content(&op, req)?;
                for i in 0..*children {
                    let req = self.adversary_content(Some(root.clone()), Some(t_a), &format!("fraudulent derivative {i}"));
                    self.registry.register_content(&op, req)?;
                }
                self.adversary_roots.push(root);
                self.evidence.adversary_tree_ids.push(t_a);
            }
            AttackStep::AttachChild { grandchildren } => {
                let target = self.scenario.victim_anchors.last().expect("victim tree").clone();
                let req = self.adversary_content(None, None, "malicious attachment");
                let head = req.ar_id.clone();
                let t_a = tree_id(&self.scenario.adversary_key, &head);
                self.registry.register_targeted(&op, req, &target)?;
                self.evidence.attachment.push(head.clone());
                for i in 0..*grandchildren {
                    let req = self.adversary_content(Some(head.clone()), Some(t_a), &format!("malicious descendant {i}"));
                    self.evidence.attachment.push(req.ar_id.clone());
                    self.registry.register_content(&op, req)?;
                }
                self.evidence.adversary_tree_ids.push(t_a);
            }
            AttackStep::VoidAttachment => {
                let head = self.evidence.attachment.first().cloned().ok_or_else(|| {
                    RegistryError::UnknownTarget(AnchorId::new("no-attachment").expect("valid"))
                })?;
                let e = self.registry.register_governance(&op, GovernanceKind::Void, &head, "malicious attachment")?;
                self.evidence.void_commitment_zero = Some(e.token_commitment.is_zero());
                self.void_ids.push(e.ar_id_plain);
            }
            AttackStep::SpoofDirect => {
                let req = self.adversary_content(Some(self.scenario.victim_root.clone()), Some(t_u), "spoofed member");
                self.attempt("direct call", ADVERSARY_WALLET, req, None);
            }
            AttackStep::SpoofZeroCommitment => {
                let mut req = self.adversary_content(Some(self.scenario.victim_root.clone()), Some(t_u), "spoofed member");
                req.token_commitment = Digest32::ZERO;
                self.attempt("operator, zero commitment", op, req, None);
            }
            AttackStep::SpoofForeignChild => {
                let own = self.adversary_content(None, None, "adversary base");
                let own_id = own.ar_id.clone();
                self.registry.register_content(&op, own)?;
                let req = self.adversary_content(Some(own_id), Some(t_u), "spoofed member");
                self.attempt("operator, foreign parent", op, req, None);
            }
            AttackStep::SpoofRoot => {
                let req = self.adversary_content(None, Some(t_u), "spoofed root");
                self.attempt("operator, duplicate tree root", op, req, None);
            }
        }
        Ok(())
    }

    fn attempt(&mut self, path: &str, caller: OperatorId, req: RegistrationRequest, _target: Option<AnchorId>) {
        let id = req.ar_id.clone();
        let result = self.registry.register_content(&caller, req);
        self.evidence.spoof_attempts.push(SpoofAttempt {
            path: path.to_owned(),
            accepted: result.is_ok(),
            ar_id: result.is_ok().then_some(id),
            error: result.err().map(|e| e.to_string()),
            in_victim_lineage: false,
            verifies_under_victim_key: false,
        });
    }
}

fn lineage_ids(forest: &Forest, root: &AnchorId) -> BTreeSet<AnchorId> {
    forest
        .tree_of(root)
        .and_then(|t: &ProvenanceTree| t.lineage(root).ok())
        .map(|recs| recs.into_iter().map(|r| r.ar_id.clone()).collect())
        .unwrap_or_default()
}

fn run(registry: &mut Registry, scenario: &AttackScenario, variant: Variant) -> Result<AttackOutcome, PoisoningError> {
    let options = ReconstructOptions { apply_void_cascade: scenario.mechanisms.cascade };
    let before_log = registry.events().to_vec();
    let before_forest = reconstruct_with(&before_log, options)?.0;
    let victim_auth_before = authenticate_tree(&scenario.victim_key, &scenario.victim_root, &before_forest)
        .map_err(|e| RegistryError::CorruptLog(e.to_string()))?;

    let saved = registry.enforcement();
    registry.set_enforcement(Enforcement {
        operator_gate: scenario.mechanisms.enforcement,
        zero_commitment_check: scenario.mechanisms.enforcement,
    });

    let mut r = Run {
        registry,
        scenario,
        evidence: Evidence { victim_tree_id: scenario.victim_tree_id(), ..Evidence::default() },
        adversary_roots: Vec::new(),
        void_ids: Vec::new(),
    };
    for step in &scenario.script {
        if let Err(e) = r.step(step) {
            r.evidence.step_errors.push(format!("{step:?}: {e}"));
        }
    }
    r.registry.set_enforcement(saved);

    let forest = r.forest()?;
    let after_log = r.registry.events();
    let mut ev = r.evidence;
    ev.log_append_only = after_log.len() >= before_log.len() && after_log[..before_log.len()] == before_log[..];
    ev.events_added = after_log.len() - before_log.len();

    let victim_auth_after = authenticate_tree(&scenario.victim_key, &scenario.victim_root, &forest).map_err(|e| e.to_string());
    ev.victim_auth_unchanged = victim_auth_after.as_ref() == Ok(&victim_auth_before);
    let victim_lineage = lineage_ids(&forest, &scenario.victim_root);
    let t_u = ev.victim_tree_id;

    let closed = match variant {
        Variant::FraudulentRoot => {
            let distinct = !ev.adversary_tree_ids.is_empty() && ev.adversary_tree_ids.iter().all(|t| *t != t_u);
            ev.tree_ids_distinct = Some(distinct);
            if scenario.mechanisms.priority {
                let mut winner = t_u;
                for t in &ev.adversary_tree_ids {
                    winner = forest.priority(&winner, t)?;
                }
                ev.priority_winner = Some(winner);
                ev.victim_has_priority = Some(winner == t_u);
            } else {
                // Identity alone: two well-formed, self-authenticating trees
                // and no ordering rule to pick between them.
                ev.priority_winner = None;
                ev.victim_has_priority = None;
            }
            let adversary_auth = authenticate_tree(&scenario.adversary_key, &scenario.victim_root, &forest)
                .map(|a| a.authenticated)
                .unwrap_or(false);
            ev.adversary_authenticates_victim = Some(adversary_auth);
            distinct && ev.victim_has_priority == Some(true) && !adversary_auth
        }
        Variant::MaliciousChild => {
            let suppressed = forest.suppressed();
            let mut s: Vec<_> = suppressed.iter().cloned().collect();
            s.sort();
            ev.suppressed = s;
            let visible = ev.attachment.iter().any(|id| !suppressed.contains(id));
            ev.attachment_visible = Some(visible);
            ev.victim_nodes_suppressed = Some(victim_lineage.iter().filter(|id| suppressed.contains(*id)).count());
            let attributable = ev.attachment.iter().all(|id| {
                forest.node(id).is_some_and(|rec| {
                    verify_initiation(&scenario.adversary_key, id, &rec.token_commitment) == Ok(true)
                        && verify_initiation(&scenario.victim_key, id, &rec.token_commitment) == Ok(false)
                })
            });
            ev.attributable_to_adversary = Some(attributable && !ev.attachment.is_empty());
            !ev.attachment.is_empty()
                && !visible
                && ev.victim_nodes_suppressed == Some(0)
                && ev.void_commitment_zero == Some(true)
                && attributable
        }
        Variant::TreeSpoofing => {
            for attempt in &mut ev.spoof_attempts {
                if let Some(id) = &attempt.ar_id {
                    attempt.in_victim_lineage = victim_lineage.contains(id);
                    attempt.verifies_under_victim_key = forest
                        .node(id)
                        .is_some_and(|rec| verify_initiation(&scenario.victim_key, id, &rec.token_commitment) == Ok(true));
                }
            }
            let spoofed_roots: Vec<&AnchorId> = ev
                .spoof_attempts
                .iter()
                .filter(|a| a.accepted)
                .filter_map(|a| a.ar_id.as_ref())
                .filter(|id| forest.node(id).is_some_and(|r| r.is_root()))
                .collect();
            let root_auth = spoofed_roots.iter().any(|id| {
                authenticate_tree(&scenario.adversary_key, id, &forest).is_ok_and(|a| a.authenticated)
                    || authenticate_tree(&scenario.victim_key, id, &forest).is_ok_and(|a| a.authenticated)
            });
            ev.spoofed_root_authenticates = Some(root_auth);
            !ev.spoof_attempts.is_empty()
                && ev.spoof_attempts.iter().all(|a| !a.in_victim_lineage && !a.verifies_under_victim_key)
                && !root_auth
        }
    };
    let closed = closed && ev.log_append_only && ev.victim_auth_unchanged && ev.step_errors.is_empty();

    Ok(AttackOutcome {
        variant,
        closed_by: variant.closed_by(),
        closed,
        mechanisms: scenario.mechanisms,
        evidence: ev,
        victim_auth_before,
        victim_auth_after,
    })
}

/// Adversary registers a competing root (and children). The registry
/// accepts it; closure is the distinct tree identity plus earlier
/// registration of the victim's root.
pub fn run_fraudulent_root(registry: &mut Registry, scenario: &AttackScenario) -> Result<AttackOutcome, PoisoningError> {
    run(registry, scenario, Variant::FraudulentRoot)
}

/// Adversary attaches a subtree under a victim anchor; the operator voids
/// it. Closure is the suppression view, with the log only ever growing.
pub fn run_malicious_child(registry: &mut Registry, scenario: &AttackScenario) -> Result<AttackOutcome, PoisoningError> {
    run(registry, scenario, Variant::MaliciousChild)
}

/// Adversary tries to place anchors carrying the victim's tree id. Closure
/// is the operator gate, the zero-commitment revert, the lineage tree check,
/// and verification excluding parentless impostors.
pub fn run_tree_spoofing(registry: &mut Registry, scenario: &AttackScenario) -> Result<AttackOutcome, PoisoningError> {
    run(registry, scenario, Variant::TreeSpoofing)
}

pub fn run_attack(registry: &mut Registry, scenario: &AttackScenario) -> Result<AttackOutcome, PoisoningError> {
    run(registry, scenario, scenario.variant)
}

/// Runs `variant` on a fresh seeded registry with the given mechanisms.
pub fn run_seeded(variant: Variant, seed: u64, mechanisms: Mechanisms) -> Result<AttackOutcome, PoisoningError> {
    let (mut registry, scenario) = AttackScenario::seeded(variant, seed)?;
    run_attack(&mut registry, &scenario.with_mechanisms(mechanisms))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DrillReport {
    pub disabled: Mechanism,
    pub reopened_variant: Variant,
    /// The guarded variant is no longer closed.
    pub breached: bool,
    pub breach: AttackOutcome,
    /// The other two variants, run with the same mechanism disabled.
    pub others: Vec<AttackOutcome>,
    /// `breached` and every other variant still closed.
    pub expected_observed: bool,
}

/// Disables `mechanism` and runs all three variants.
pub fn necessity_drill(mechanism: Mechanism, seed: u64) -> Result<DrillReport, PoisoningError> {
    let mechanisms = Mechanisms::without(mechanism);
    let target = mechanism.guards();
    let breach = run_seeded(target, seed, mechanisms)?;
    let others = Variant::ALL
        .into_iter()
        .filter(|v| *v != target)
        .map(|v| run_seeded(v, seed, mechanisms))
        .collect::<Result<Vec<_>, _>>()?;
    let breached = !breach.closed;
    let expected_observed = breached && others.iter().all(|o| o.closed);
    Ok(DrillReport { disabled: mechanism, reopened_variant: target, breached, breach, others, expected_observed })
}

/// Same as [`necessity_drill`], parsing the mechanism name first.
pub fn necessity_drill_named(mechanism: &str, seed: u64) -> Result<DrillReport, PoisoningError> {
    necessity_drill(mechanism.parse()?, seed)
}

/// Content anchors in one tree that share a manifest hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DuplicateManifest {
    pub manifest_hash: String,
    pub anchors: Vec<AnchorId>,
}

/// Flags every manifest hash carried by two or more content anchors of the
/// tree.
pub fn duplicate_manifests(tree: &ProvenanceTree) -> Vec<DuplicateManifest> {
    let mut groups: BTreeMap<&str, Vec<&AnchorId>> = BTreeMap::new();
    for rec in tree.nodes.values() {
        if rec.class() != ArtifactClass::Governance {
            groups.entry(rec.manifest_hash.as_str()).or_default().push(&rec.ar_id);
        }
    }
    groups
        .into_iter()
        .filter(|(_, ids)| ids.len() >= 2)
        .map(|(hash, ids)| {
            let mut anchors: Vec<AnchorId> = ids.into_iter().cloned().collect();
            anchors.sort();
            DuplicateManifest { manifest_hash: hash.to_owned(), anchors }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GriefingReport {
    pub account: AnchorId,
    pub batch: Vec<AnchorId>,
    pub distinct_ids: bool,
    pub distinct_commitments: bool,
    /// Every batch commitment verifies under the griefer's key.
    pub all_attributable: bool,
    pub flagged: Vec<DuplicateManifest>,
}

/// An enterprise user pushes `n` registrations with one manifest hash
/// through an ACCOUNT anchor, to later claim the operator made them.
pub fn enterprise_griefing(registry: &mut Registry, griefer: &OwnershipToken, n: usize) -> Result<GriefingReport, PoisoningError> {
    let op = SCENARIO_OPERATOR;
    let account = registry.reserve("enterprise");
    let t = tree_id(griefer, &account);
    let mut req = content_request(account.clone(), None, &t, griefer, "enterprise account");
    req.artifact_type = ArtifactType::account();
    registry.register_content(&op, req)?;

    let manifest = keccak256(b"the same artifact, n times").to_hex();
    let mut batch = Vec::with_capacity(n);
    for _ in 0..n {
        let id = registry.reserve("enterprise");
        let mut req = content_request(id.clone(), None, &t, griefer, "batch item");
        req.manifest_hash = manifest.clone();
        registry.register_gated(&op, req, &account)?;
        batch.push(id);
    }

    let forest = reconstruct_with(registry.events(), ReconstructOptions::default())?.0;
    let tree = forest.tree(&t).ok_or(ReconstructError::UnknownTree(t))?;
    let commitments: BTreeSet<Digest32> = batch.iter().map(|id| tree.nodes[id].token_commitment).collect();
    let ids: BTreeSet<&AnchorId> = batch.iter().collect();
    let all_attributable = batch
        .iter()
        .all(|id| verify_initiation(griefer, id, &tree.nodes[id].token_commitment) == Ok(true));
    Ok(GriefingReport {
        account,
        distinct_ids: ids.len() == n,
        distinct_commitments: commitments.len() == n,
        all_attributable,
        flagged: duplicate_manifests(tree),
        batch,
    })
}

/// Honest-equilibrium smoke run: mixed honest traffic from many users.
pub fn honest_run(seed: u64, ops: usize) -> WorkloadReport {
    let mut registry = scenario_registry(seed);
    Workload::new(seed, SCENARIO_OPERATOR).run(&mut registry, ops)
}
