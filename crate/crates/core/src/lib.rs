//! Provenance trees anchored through an operator-gated registry.
//!
//! The crate simulates the whole lifecycle of an AnchorRegistry-style
//! deployment in a single process:
//!
//! * [`commitments`]: client-side ownership tokens and the two keccak256
//!   commitments derived from them (tree identity and per-anchor initiation).
//! * [`registry`]: the contract's registration state machine and its
//!   enforcement rules, plus the fixed gas model.
//! * [`eventlog`]: the `Anchored` event, its JSONL export, and log queries.
//! * [`reconstruction`]: rebuilding the provenance forest from the log alone,
//!   including the VOID suppression view.
//! * [`verification`]: ownership, initiation and governance checks, and
//!   [`verification::authenticate_tree`].
//! * [`poisoning`]: scripted tree-poisoning attacks and the drills that show
//!   each closure mechanism is needed.
//!
//! ```
//! use anchor_registry::commitments::{keygen, token_commitment, tree_id};
//! use anchor_registry::registry::{ArtifactType, OperatorId, RegistrationRequest, Registry};
//! use anchor_registry::reconstruction::reconstruct;
//! use anchor_registry::verification::authenticate_tree;
//!
//! let operator = OperatorId([0x0a; 20]);
//! let mut registry = Registry::new([operator]).unwrap();
//!
//! // Client side: the key never reaches the registry.
//! let key = keygen(&[42u8; 32]).unwrap();
//! let root = registry.reserve("alice");
//! let request = RegistrationRequest::new(
//!     root.clone(),
//!     ArtifactType::new("DATASET").unwrap(),
//!     "ab".repeat(32),
//!     None,
//!     &tree_id(&key, &root),
//!     token_commitment(&key, &root),
//! );
//! registry.register_content(&operator, request).unwrap();
//!
//! // Verifier side: only the public log and the presented key.
//! let forest = reconstruct(registry.events()).unwrap();
//! assert!(authenticate_tree(&key, &root, &forest).unwrap().authenticated);
//! ```

pub mod commitments;
pub mod eventlog;
pub mod poisoning;
pub mod reconstruction;
pub mod registry;
pub mod verification;
pub mod workload;

#[cfg(doctest)]
mod book;
