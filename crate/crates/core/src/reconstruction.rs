//! Rebuilds the provenance forest from an event log alone.
//!
//! One pass over the events: each event becomes a node, `parentArId` becomes
//! an edge, and nodes are grouped by `treeIdPlain`. An edge whose endpoints
//! carry different tree ids (a targeted attachment into someone else's tree)
//! is kept out of both trees' child lists and recorded in
//! [`Forest::cross_edges`] instead, so every tree's node set satisfies tree
//! membership on its own.
//!
//! VOID anchors are ordinary governance nodes under their target and also
//! suppression directives: the target and everything below it (following
//! every parent link, cross-tree ones included) is hidden from the view.
//! Governance anchors themselves are never hidden. The events are not
//! touched.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::commitments::{AnchorId, Digest32};
use crate::eventlog::{tree_topic, AnchoredEvent};
use crate::registry::{AnchorRecord, ArtifactClass};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconstructError {
    #[error("{child} references parent {parent} that does not precede it")]
    OrphanParent { child: AnchorId, parent: AnchorId },
    #[error("artifact {0} appears twice in the log")]
    DuplicateId(AnchorId),
    #[error("artifact {0} is its own ancestor")]
    CycleDetected(AnchorId),
    #[error("event {0} is out of (block, index) order")]
    OutOfOrder(AnchorId),
    #[error("event {0} has a malformed treeIdPlain")]
    BadTreeId(AnchorId),
    #[error("unknown anchor {0}")]
    UnknownId(AnchorId),
    #[error("unknown tree {0}")]
    UnknownTree(Digest32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvenanceTree {
    /// Earliest parentless node of the group, or the earliest node when the
    /// group only exists through a cross-tree attachment.
    pub root: AnchorId,
    pub tree_id: Digest32,
    pub nodes: HashMap<AnchorId, AnchorRecord>,
    /// Same-tree edges only, children in log order.
    pub children: HashMap<AnchorId, Vec<AnchorId>>,
    pub suppressed: HashSet<AnchorId>,
    /// Entry points besides `root`: later parentless nodes claiming this tree
    /// id and nodes attached under an anchor of another tree.
    pub heads: Vec<AnchorId>,
}

impl ProvenanceTree {
    pub fn root_record(&self) -> &AnchorRecord {
        &self.nodes[&self.root]
    }

    pub fn children_of(&self, id: &AnchorId) -> &[AnchorId] {
        self.children.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn is_visible(&self, id: &AnchorId) -> bool {
        self.nodes.contains_key(id) && !self.suppressed.contains(id)
    }

    /// Ids of the nodes reachable from `id` via same-tree edges, excluding
    /// `id` itself.
    pub fn descendants(&self, id: &AnchorId) -> Result<HashSet<AnchorId>, ReconstructError> {
        if !self.nodes.contains_key(id) {
            return Err(ReconstructError::UnknownId(id.clone()));
        }
        let mut out = HashSet::new();
        let mut stack: Vec<&AnchorId> = self.children_of(id).iter().collect();
        while let Some(next) = stack.pop() {
            if out.insert(next.clone()) {
                stack.extend(self.children_of(next));
            }
        }
        Ok(out)
    }

    /// `root_id` followed by its descendants, in log order.
    pub fn lineage(&self, root_id: &AnchorId) -> Result<Vec<&AnchorRecord>, ReconstructError> {
        let root = self.nodes.get(root_id).ok_or_else(|| ReconstructError::UnknownId(root_id.clone()))?;
        // Every node has one parent and parents precede children in the log,
        // so a plain walk visits each node once.
        let mut out = vec![root];
        let mut stack: Vec<&AnchorId> = self.children_of(root_id).iter().collect();
        while let Some(next) = stack.pop() {
            out.push(&self.nodes[next]);
            stack.extend(self.children_of(next));
        }
        out.sort_by_key(|r| r.position());
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Forest {
    pub trees: HashMap<Digest32, ProvenanceTree>,
    /// `(child, target)` pairs whose tree ids differ.
    pub cross_edges: Vec<(AnchorId, AnchorId)>,
    /// Tree slot and log position of every node.
    tree_of: HashMap<AnchorId, (u32, u32)>,
    /// Tree id of each slot.
    slot_tids: Vec<Digest32>,
}

impl Forest {
    pub fn len(&self) -> usize {
        self.tree_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree_of.is_empty()
    }

    pub fn tree(&self, tree_id: &Digest32) -> Option<&ProvenanceTree> {
        self.trees.get(tree_id)
    }

    pub fn tree_of(&self, id: &AnchorId) -> Option<&ProvenanceTree> {
        self.tree_of.get(id).and_then(|(slot, _)| self.trees.get(&self.slot_tids[*slot as usize]))
    }

    pub fn node(&self, id: &AnchorId) -> Option<&AnchorRecord> {
        self.tree_of(id).and_then(|t| t.nodes.get(id))
    }

    pub fn is_suppressed(&self, id: &AnchorId) -> bool {
        self.tree_of(id).is_some_and(|t| t.suppressed.contains(id))
    }

    pub fn suppressed(&self) -> HashSet<AnchorId> {
        self.trees.values().flat_map(|t| t.suppressed.iter().cloned()).collect()
    }

    pub fn tree_by_topic(&self, topic: &Digest32) -> Option<&ProvenanceTree> {
        self.trees.values().find(|t| tree_topic(&t.tree_id) == *topic)
    }

    /// Every `(parent, child)` edge, same-tree and cross-tree.
    pub fn edges(&self) -> HashSet<(AnchorId, AnchorId)> {
        let mut out: HashSet<_> = self
            .trees
            .values()
            .flat_map(|t| t.children.iter().flat_map(|(p, cs)| cs.iter().map(move |c| (p.clone(), c.clone()))))
            .collect();
        out.extend(self.cross_edges.iter().map(|(c, p)| (p.clone(), c.clone())));
        out
    }

    pub fn descendants(&self, tree_id: &Digest32, id: &AnchorId) -> Result<HashSet<AnchorId>, ReconstructError> {
        self.tree(tree_id).ok_or(ReconstructError::UnknownTree(*tree_id))?.descendants(id)
    }

    /// The tree whose root was registered first.
    pub fn priority(&self, a: &Digest32, b: &Digest32) -> Result<Digest32, ReconstructError> {
        let ta = self.tree(a).ok_or(ReconstructError::UnknownTree(*a))?;
        let tb = self.tree(b).ok_or(ReconstructError::UnknownTree(*b))?;
        if ta.root_record().position() <= tb.root_record().position() {
            Ok(*a)
        } else {
            Ok(*b)
        }
    }

    /// JSON-friendly dump, trees ordered by root position.
    pub fn dump(&self, only_topic: Option<&Digest32>) -> ForestDump {
        let mut trees: Vec<&ProvenanceTree> = self
            .trees
            .values()
            .filter(|t| only_topic.is_none_or(|topic| tree_topic(&t.tree_id) == *topic))
            .collect();
        trees.sort_by_key(|t| t.root_record().position());
        let trees = trees
            .into_iter()
            .map(|t| {
                let mut nodes: Vec<AnchorRecord> = t.nodes.values().cloned().collect();
                nodes.sort_by_key(|r| r.position());
                let edges = nodes
                    .iter()
                    .flat_map(|n| t.children_of(&n.ar_id).iter().map(|c| (n.ar_id.clone(), c.clone())))
                    .collect();
                let mut suppressed: Vec<AnchorId> = t.suppressed.iter().cloned().collect();
                suppressed.sort();
                TreeDump {
                    tree_id: t.tree_id,
                    tree_topic: tree_topic(&t.tree_id),
                    root: t.root.clone(),
                    heads: t.heads.clone(),
                    nodes,
                    edges,
                    suppressed,
                }
            })
            .collect();
        let cross_edges = self
            .cross_edges
            .iter()
            .filter(|(c, p)| {
                only_topic.is_none_or(|topic| {
                    [c, p].iter().any(|id| self.tree_of(id).is_some_and(|t| tree_topic(&t.tree_id) == *topic))
                })
            })
            .cloned()
            .collect();
        ForestDump { trees, cross_edges }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeDump {
    pub tree_id: Digest32,
    pub tree_topic: Digest32,
    pub root: AnchorId,
    pub heads: Vec<AnchorId>,
    pub nodes: Vec<AnchorRecord>,
    /// `(parent, child)` pairs.
    pub edges: Vec<(AnchorId, AnchorId)>,
    pub suppressed: Vec<AnchorId>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ForestDump {
    pub trees: Vec<TreeDump>,
    /// `(child, target)` pairs.
    pub cross_edges: Vec<(AnchorId, AnchorId)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReconstructOptions {
    /// When false, VOID anchors are kept as nodes but suppress nothing.
    /// Only the necessity drills turn this off.
    pub apply_void_cascade: bool,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions { apply_void_cascade: true }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReconstructStats {
    pub events: usize,
    /// Node touches across the build pass and the cascade.
    pub node_visits: usize,
}

const NONE: u32 = u32::MAX;

pub fn reconstruct(events: &[AnchoredEvent]) -> Result<Forest, ReconstructError> {
    reconstruct_with(events, ReconstructOptions::default()).map(|(f, _)| f)
}

pub fn reconstruct_with(
    events: &[AnchoredEvent],
    options: ReconstructOptions,
) -> Result<(Forest, ReconstructStats), ReconstructError> {
    let n = events.len();
    let mut forest = Forest::default();
    let mut stats = ReconstructStats { events: n, node_visits: 0 };

    // Pass 1, log order: validate, index every id, and record edges by log
    // position. Nothing per-tree is built yet.
    let mut slot_of: HashMap<Digest32, u32> = HashMap::new();
    let mut slots: Vec<u32> = Vec::with_capacity(n);
    let mut parent_pos: Vec<u32> = Vec::with_capacity(n);
    let mut governance: Vec<bool> = Vec::with_capacity(n);
    let mut void_targets: Vec<u32> = Vec::new();
    // Child lists over log positions, all edges included, for the cascade.
    let mut first_child: Vec<u32> = vec![NONE; n];
    let mut next_sibling: Vec<u32> = vec![NONE; n];
    let mut last_pos: Option<(u64, u64)> = None;
    forest.tree_of.reserve(n);

    for (pos, e) in events.iter().enumerate() {
        let pos = u32::try_from(pos).expect("log fits in u32 positions");
        stats.node_visits += 1;
        let id = &e.ar_id_plain;
        if last_pos.is_some_and(|p| e.position() <= p) {
            return Err(ReconstructError::OutOfOrder(id.clone()));
        }
        last_pos = Some(e.position());
        if e.parent_ar_id.as_ref() == Some(id) {
            return Err(ReconstructError::CycleDetected(id.clone()));
        }
        let tid = Digest32::from_hex(&e.tree_id_plain).map_err(|_| ReconstructError::BadTreeId(id.clone()))?;
        let slot = *slot_of.entry(tid).or_insert_with(|| {
            forest.slot_tids.push(tid);
            (forest.slot_tids.len() - 1) as u32
        });
        if forest.tree_of.insert(id.clone(), (slot, pos)).is_some() {
            return Err(ReconstructError::DuplicateId(id.clone()));
        }
        slots.push(slot);
        governance.push(e.artifact_type.class() == ArtifactClass::Governance);

        let mut parent_at = NONE;
        if let Some(parent) = &e.parent_ar_id {
            let (parent_slot, p) = *forest.tree_of.get(parent).ok_or_else(|| ReconstructError::OrphanParent {
                child: id.clone(),
                parent: parent.clone(),
            })?;
            parent_at = p;
            next_sibling[pos as usize] = first_child[p as usize];
            first_child[p as usize] = pos;
            if parent_slot != slot {
                forest.cross_edges.push((id.clone(), parent.clone()));
            }
            if e.artifact_type.is_void() {
                void_targets.push(p);
            }
        }
        parent_pos.push(parent_at);
    }

    // The cascade needs only positions, so it runs before any tree exists.
    let mut suppressed = vec![false; n];
    if options.apply_void_cascade {
        let mut seen = vec![false; n];
        let mut queue: VecDeque<u32> = VecDeque::new();
        for target in void_targets {
            if !std::mem::replace(&mut seen[target as usize], true) {
                queue.push_back(target);
            }
            while let Some(pos) = queue.pop_front() {
                stats.node_visits += 1;
                suppressed[pos as usize] = !governance[pos as usize];
                let mut child = first_child[pos as usize];
                while child != NONE {
                    if !std::mem::replace(&mut seen[child as usize], true) {
                        queue.push_back(child);
                    }
                    child = next_sibling[child as usize];
                }
            }
        }
    }

    // Pass 2, one tree at a time over positions grouped by tree (stable, so
    // each group stays in log order). Records are built in log order first,
    // then moved into their trees.
    let tree_count = forest.slot_tids.len();
    let mut offsets = vec![0usize; tree_count + 1];
    for &s in &slots {
        offsets[s as usize + 1] += 1;
    }
    for i in 0..tree_count {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut grouped = vec![0u32; n];
    for (pos, &s) in slots.iter().enumerate() {
        grouped[fill[s as usize]] = pos as u32;
        fill[s as usize] += 1;
    }
    let mut records: Vec<Option<AnchorRecord>> = events
        .iter()
        .zip(&slots)
        .map(|(e, &s)| Some(AnchorRecord::with_tree_id(e, forest.slot_tids[s as usize])))
        .collect();

    forest.trees.reserve(tree_count);
    for (slot, tid) in forest.slot_tids.iter().enumerate() {
        let group = &grouped[offsets[slot]..offsets[slot + 1]];
        let mut tree = ProvenanceTree {
            root: events[group[0] as usize].ar_id_plain.clone(),
            tree_id: *tid,
            nodes: HashMap::with_capacity(group.len()),
            children: HashMap::new(),
            suppressed: HashSet::new(),
            heads: Vec::new(),
        };
        let mut seen_parentless = false;
        for &pos in group {
            let record = records[pos as usize].take().expect("each position is grouped once");
            let id = &record.ar_id;
            let p = parent_pos[pos as usize];
            let cross = p != NONE && slots[p as usize] != slot as u32;
            if p != NONE && !cross {
                let parent = record.parent_ar_id.as_ref().expect("parent position implies a parent");
                match tree.children.get_mut(parent) {
                    Some(list) => list.push(id.clone()),
                    None => {
                        tree.children.insert(parent.clone(), vec![id.clone()]);
                    }
                }
            }
            if p == NONE {
                if !seen_parentless {
                    // First real root of the group displaces an attachment
                    // placeholder.
                    if tree.root != *id {
                        let old = std::mem::replace(&mut tree.root, id.clone());
                        tree.heads.retain(|h| h != id);
                        tree.heads.insert(0, old);
                    }
                    seen_parentless = true;
                } else {
                    tree.heads.push(id.clone());
                }
            } else if cross && tree.root != *id {
                tree.heads.push(id.clone());
            }
            if suppressed[pos as usize] {
                tree.suppressed.insert(id.clone());
            }
            tree.nodes.insert(id.clone(), record);
        }
        forest.trees.insert(*tid, tree);
    }

    Ok((forest, stats))
}

/// Brute-force transitive closure oracle, kept independent of the traversal
/// in [`ProvenanceTree::descendants`].
#[cfg(test)]
pub(crate) fn closure_oracle(edges: &[(AnchorId, AnchorId)], from: &AnchorId) -> HashSet<AnchorId> {
    let mut reach: HashSet<AnchorId> = HashSet::new();
    loop {
        let before = reach.len();
        for (p, c) in edges {
            if p == from || reach.contains(p) {
                reach.insert(c.clone());
            }
        }
        if reach.len() == before {
            return reach;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commitments::{keccak256, token_commitment, tree_id, OwnershipToken};
    use crate::registry::{ArtifactType, GovernanceKind, OperatorId, RegistrationRequest, Registry};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const OP: OperatorId = OperatorId([1; 20]);

    struct Fixture {
        reg: Registry,
        key: OwnershipToken,
    }

    impl Fixture {
        fn new(seed: u8) -> Self {
            Fixture { reg: Registry::new([OP]).unwrap().with_seed([seed; 32]), key: OwnershipToken::from_bytes([seed; 32]) }
        }

        fn root(&mut self) -> AnchorId {
            let r = self.reg.reserve("c");
            let t = tree_id(&self.key, &r);
            let req = RegistrationRequest::new(r.clone(), ArtifactType::new("MODEL").unwrap(), "00".repeat(32), None, &t, token_commitment(&self.key, &r));
            self.reg.register_content(&OP, req).unwrap();
            r
        }

        fn child(&mut self, parent: &AnchorId) -> AnchorId {
            let c = self.reg.reserve("c");
            let t = self.reg.record(parent).unwrap().tree_id;
            let req = RegistrationRequest::new(c.clone(), ArtifactType::new("MODEL").unwrap(), "00".repeat(32), Some(parent.clone()), &t, token_commitment(&self.key, &c));
            self.reg.register_content(&OP, req).unwrap();
            c
        }
    }

    #[test]
    fn root_with_two_children() {
        let mut f = Fixture::new(1);
        let r = f.root();
        let c1 = f.child(&r);
        let c2 = f.child(&r);
        let forest = reconstruct(f.reg.events()).unwrap();
        assert_eq!(forest.trees.len(), 1);
        let tree = forest.tree_of(&r).unwrap();
        assert_eq!(tree.nodes.len(), 3);
        assert_eq!(tree.root, r);
        assert_eq!(tree.children_of(&r), &[c1, c2]);
        assert!(tree.suppressed.is_empty());
    }

    #[test]
    fn void_suppresses_subtree_without_touching_log() {
        let mut f = Fixture::new(2);
        let r = f.root();
        let s = f.child(&r);
        let s1 = f.child(&s);
        let s2 = f.child(&s1);
        let keep = f.child(&r);
        let len_before = f.reg.events().len();
        f.reg.register_governance(&OP, GovernanceKind::Void, &s, "flagged").unwrap();
        assert_eq!(f.reg.events().len(), len_before + 1);
        let forest = reconstruct(f.reg.events()).unwrap();
        let tree = forest.tree_of(&r).unwrap();
        let expected: HashSet<_> = [s.clone(), s1, s2].into_iter().collect();
        assert_eq!(tree.suppressed, expected);
        assert!(tree.is_visible(&keep));
        assert!(tree.is_visible(&r));

        // Dropping the VOID event restores visibility.
        let without: Vec<_> = f.reg.events().iter().filter(|e| !e.artifact_type.is_void()).cloned().collect();
        assert!(reconstruct(&without).unwrap().suppressed().is_empty());

        let (_, off) = reconstruct_with(f.reg.events(), ReconstructOptions { apply_void_cascade: false }).unwrap();
        assert_eq!(off.events, len_before + 1);
        let (forest_off, _) = reconstruct_with(f.reg.events(), ReconstructOptions { apply_void_cascade: false }).unwrap();
        assert!(forest_off.suppressed().is_empty());
    }

    #[test]
    fn review_and_affirmed_do_not_suppress() {
        let mut f = Fixture::new(3);
        let r = f.root();
        let c = f.child(&r);
        f.reg.register_governance(&OP, GovernanceKind::Review, &c, "").unwrap();
        f.reg.register_governance(&OP, GovernanceKind::Affirmed, &r, "").unwrap();
        let forest = reconstruct(f.reg.events()).unwrap();
        assert!(forest.suppressed().is_empty());
        assert_eq!(forest.tree_of(&r).unwrap().nodes.len(), 4);
    }

    #[test]
    fn descendants_edge_cases() {
        let mut f = Fixture::new(4);
        let r = f.root();
        let a = f.child(&r);
        let b = f.child(&a);
        let forest = reconstruct(f.reg.events()).unwrap();
        let t = forest.tree_of(&r).unwrap();
        assert!(t.descendants(&b).unwrap().is_empty());
        assert_eq!(t.descendants(&r).unwrap().len(), 2);
        let ghost = AnchorId::new("ghost").unwrap();
        assert_eq!(t.descendants(&ghost).unwrap_err(), ReconstructError::UnknownId(ghost));
    }

    #[test]
    fn descendants_match_closure_oracle_on_random_tree() {
        let mut f = Fixture::new(5);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let r = f.root();
        let mut ids = vec![r.clone()];
        while ids.len() < 200 {
            let p = ids[rng.random_range(0..ids.len())].clone();
            ids.push(f.child(&p));
        }
        let forest = reconstruct(f.reg.events()).unwrap();
        let tree = forest.tree_of(&r).unwrap();
        let edges: Vec<_> = forest.edges().into_iter().collect();
        for id in ids.iter().step_by(7) {
            assert_eq!(tree.descendants(id).unwrap(), closure_oracle(&edges, id));
        }
    }

    #[test]
    fn corrupt_logs_are_rejected() {
        let mut f = Fixture::new(6);
        let r = f.root();
        f.child(&r);
        let events = f.reg.events().to_vec();

        let mut swapped = events.clone();
        swapped.swap(0, 1);
        swapped[0].block_number = 1;
        swapped[0].log_index = 0;
        swapped[1].block_number = 2;
        swapped[1].log_index = 1;
        assert!(matches!(reconstruct(&swapped), Err(ReconstructError::OrphanParent { .. })));

        let dup = vec![events[0].clone(), { let mut d = events[0].clone(); d.block_number = 9; d }];
        assert_eq!(reconstruct(&dup).unwrap_err(), ReconstructError::DuplicateId(r.clone()));

        let mut selfp = events[0].clone();
        selfp.parent_ar_id = Some(r.clone());
        assert_eq!(reconstruct(&[selfp]).unwrap_err(), ReconstructError::CycleDetected(r.clone()));

        let mut backwards = events.clone();
        backwards[0].block_number = 5;
        assert!(matches!(reconstruct(&backwards), Err(ReconstructError::OutOfOrder(_))));
    }

    #[test]
    fn priority_is_by_registration_order() {
        let mut f = Fixture::new(7);
        let first = f.root();
        let second = f.root();
        let forest = reconstruct(f.reg.events()).unwrap();
        let ta = forest.tree_of(&first).unwrap().tree_id;
        let tb = forest.tree_of(&second).unwrap().tree_id;
        assert_eq!(forest.priority(&ta, &tb).unwrap(), ta);
        assert_eq!(forest.priority(&tb, &ta).unwrap(), ta);
        assert_eq!(forest.priority(&tb, &tb).unwrap(), tb);
        let ghost = keccak256(b"ghost");
        assert_eq!(forest.priority(&ta, &ghost).unwrap_err(), ReconstructError::UnknownTree(ghost));
    }

    #[test]
    fn cross_tree_attachment_is_kept_apart() {
        let mut f = Fixture::new(8);
        let victim_root = f.root();
        let adversary = OwnershipToken::from_bytes([0xad; 32]);
        let a = f.reg.reserve("adv");
        let t_a = tree_id(&adversary, &a);
        let req = RegistrationRequest::new(a.clone(), ArtifactType::new("MODEL").unwrap(), "00".repeat(32), None, &t_a, token_commitment(&adversary, &a));
        f.reg.register_targeted(&OP, req, &victim_root).unwrap();
        let forest = reconstruct(f.reg.events()).unwrap();
        assert_eq!(forest.trees.len(), 2);
        assert_eq!(forest.cross_edges, vec![(a.clone(), victim_root.clone())]);
        assert!(forest.tree_of(&victim_root).unwrap().children_of(&victim_root).is_empty());
        assert_eq!(forest.tree_of(&a).unwrap().root, a);
        assert!(forest.edges().contains(&(victim_root, a)));
    }
}
