//! `anchorreg`: file-backed front end for the anchor registry simulator.
//!
//! JSON results go to stdout, diagnostics to stderr. See [`exit`] for the
//! exit-code table.

mod exit;
mod state;

use std::path::PathBuf;
use std::process::ExitCode;

use anchor_registry::commitments::{keygen, token_commitment, tree_id, AnchorId, Digest32, OwnershipToken};
use anchor_registry::eventlog::{tree_topic, AnchoredEvent};
use anchor_registry::poisoning::{self, Mechanism, Mechanisms, Variant};
use anchor_registry::reconstruction::{reconstruct_with, ReconstructOptions};
use anchor_registry::registry::{
    gas_estimate, ArtifactType, GovernanceKind, OperatorId, RegistrationRequest, RequestKind,
};
use anchor_registry::verification::authenticate_tree;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::exit::{input, CliError};
use crate::state::{read_log, Config, Session};

#[derive(Debug, Parser)]
#[command(name = "anchorreg", version, about = "Anchor registry simulator: registration, reconstruction, verification and attack drills")]
struct Cli {
    /// Config file: {"logPath", "operators", "taxonomyPath"?, "seed"?}.
    #[arg(short, long, global = true, env = "ANCHORREG_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an ownership key. The key is printed and nowhere stored.
    Keygen {
        /// 32 bytes of hex entropy, for a reproducible key.
        #[arg(long)]
        seed: Option<String>,
    },
    /// Compute the tree id and initiation commitment for a key and anchor id.
    Commit {
        #[arg(long)]
        key: String,
        #[arg(long)]
        id: String,
    },
    /// Reserve a fresh artifact id (held as PENDING).
    Reserve {
        #[arg(long, default_value = "cli")]
        requested_by: String,
    },
    /// Register a content anchor: a root, a child, or (with --account) a
    /// gated registration under an ACCOUNT anchor.
    Register {
        #[command(flatten)]
        content: ContentArgs,
        #[arg(long)]
        parent: Option<String>,
        /// ACCOUNT anchor whose batch allowance this draws on.
        #[arg(long)]
        account: Option<String>,
    },
    /// Attach a content anchor under any registered target (targeted
    /// registration). The anchor keeps its own tree id.
    Attach {
        #[command(flatten)]
        content: ContentArgs,
        #[arg(long)]
        target: String,
    },
    /// Register a REVIEW, VOID or AFFIRMED anchor under a target.
    Govern {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "")]
        descriptor: String,
        /// Calling operator (defaults to the first configured operator).
        #[arg(long)]
        operator: Option<String>,
    },
    /// Rebuild the forest from the log and print it.
    Reconstruct {
        /// Only the tree with this topic (keccak256 of the tree id's hex).
        #[arg(long)]
        tree: Option<String>,
        /// Show VOIDed anchors as if no VOID had been registered.
        #[arg(long)]
        no_cascade: bool,
        /// Log file to read instead of the configured one.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Check that a key owns the tree rooted at --root and initiated every
    /// content anchor in it. Exit 0 iff authenticated.
    Verify {
        #[arg(long)]
        root: String,
        #[arg(long)]
        key: String,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run a tree-poisoning variant in a fresh in-memory registry.
    Attack {
        /// fraudulent-root, malicious-child or tree-spoofing (or 1, 2, 3).
        #[arg(long)]
        variant: String,
        /// Disable one mechanism (priority, cascade, enforcement) and run
        /// the necessity drill.
        #[arg(long)]
        drill: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the per-registration gas overhead.
    Gas {
        #[arg(long, default_value = "content")]
        kind: String,
    },
}

#[derive(Debug, Args)]
struct ContentArgs {
    /// Reserved artifact id.
    #[arg(long)]
    id: String,
    #[arg(long = "type", default_value = "DOCUMENT")]
    artifact_type: String,
    /// 64 lowercase hex characters.
    #[arg(long)]
    manifest: String,
    /// Ownership key; the commitment is computed locally and the key is
    /// not stored.
    #[arg(long, conflicts_with = "commitment", required_unless_present = "commitment")]
    key: Option<String>,
    /// Precomputed initiation commitment, so the key never reaches this
    /// machine.
    #[arg(long)]
    commitment: Option<String>,
    /// Tree id (hex). Defaults to the parent's or account's tree, or for a
    /// root to the tree id derived from --key.
    #[arg(long)]
    tree: Option<String>,
    #[arg(long, default_value = "")]
    title: String,
    #[arg(long, default_value = "")]
    author: String,
    #[arg(long, default_value = "")]
    descriptor: String,
    /// Calling operator (defaults to the first configured operator).
    #[arg(long)]
    operator: Option<String>,
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("result serializes"));
}

fn anchor_id(s: &str) -> Result<AnchorId, CliError> {
    AnchorId::new(s).map_err(input("artifact id"))
}

fn key(s: &str) -> Result<OwnershipToken, CliError> {
    OwnershipToken::from_hex(s).map_err(input("key"))
}

fn digest(what: &str, s: &str) -> Result<Digest32, CliError> {
    Digest32::from_hex(s.strip_prefix("0x").unwrap_or(s)).map_err(input(what))
}

fn load_config(path: Option<&PathBuf>) -> Result<Config, CliError> {
    let path = path.ok_or_else(|| CliError::Input("this command needs --config (or ANCHORREG_CONFIG)".into()))?;
    Config::load(path)
}

fn operator(config: &Config, explicit: Option<&str>) -> Result<OperatorId, CliError> {
    match explicit {
        Some(s) => Ok(OperatorId::from_hex(s)?),
        None => Ok(config.default_operator()),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct KeyOutput {
    key: String,
    tree_id_hint: &'static str,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CommitOutput {
    ar_id: AnchorId,
    tree_id: Digest32,
    tree_topic: Digest32,
    token_commitment: Digest32,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ReserveOutput {
    ar_id: AnchorId,
    status: &'static str,
}

/// Builds a content request, resolving the tree id and commitment.
fn content_request(
    session: &Session,
    args: &ContentArgs,
    parent: Option<AnchorId>,
    tree_from: Option<&AnchorId>,
) -> Result<RegistrationRequest, CliError> {
    let id = anchor_id(&args.id)?;
    let artifact_type = ArtifactType::new(args.artifact_type.as_str())?;
    let key = args.key.as_deref().map(key).transpose()?;
    let commitment = match (&key, &args.commitment) {
        (Some(k), _) => token_commitment(k, &id),
        (None, Some(c)) => digest("commitment", c)?,
        (None, None) => unreachable!("clap requires --key or --commitment"),
    };
    let tree = match (&args.tree, tree_from, &key) {
        (Some(t), _, _) => digest("tree id", t)?,
        // Unknown anchors fall through to a placeholder so the registry
        // reports them with its own error.
        (None, Some(anchor), _) => session.registry.record(anchor).map_or(Digest32::ZERO, |r| r.tree_id),
        (None, None, Some(k)) => tree_id(k, &id),
        (None, None, None) => {
            return Err(CliError::Input("a root registered with --commitment needs --tree".into()));
        }
    };
    let mut req = RegistrationRequest::new(id, artifact_type, args.manifest.clone(), parent, &tree, commitment);
    req.title = args.title.clone();
    req.author = args.author.clone();
    req.descriptor = args.descriptor.clone();
    Ok(req)
}

fn finish(session: &Session, event: &AnchoredEvent) -> Result<(), CliError> {
    session.commit(Some(event))?;
    print_json(event);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli.config.as_ref();
    match cli.command {
        Command::Keygen { seed } => {
            let token = match seed {
                Some(s) => keygen(&state::parse_seed(&s)?).expect("32 bytes"),
                None => OwnershipToken::generate(),
            };
            eprintln!("keep this key offline: it proves ownership and is never stored by anchorreg");
            print_json(&KeyOutput {
                key: token.to_hex(),
                tree_id_hint: "treeId = keccak256(key || rootArId); see `anchorreg commit`",
            });
        }
        Command::Commit { key: k, id } => {
            let k = key(&k)?;
            let id = anchor_id(&id)?;
            let t = tree_id(&k, &id);
            print_json(&CommitOutput { tree_topic: tree_topic(&t), tree_id: t, token_commitment: token_commitment(&k, &id), ar_id: id });
        }
        Command::Reserve { requested_by } => {
            let mut session = Session::open(load_config(config_path)?)?;
            let id = session.registry.reserve(&requested_by);
            session.commit(None)?;
            print_json(&ReserveOutput { ar_id: id, status: "PENDING" });
        }
        Command::Register { content, parent, account } => {
            let mut session = Session::open(load_config(config_path)?)?;
            let caller = operator(&session.config, content.operator.as_deref())?;
            let parent = parent.as_deref().map(anchor_id).transpose()?;
            let event = match account {
                Some(acct) => {
                    let acct = anchor_id(&acct)?;
                    let req = content_request(&session, &content, parent, Some(&acct))?;
                    session.registry.register_gated(&caller, req, &acct)?
                }
                None => {
                    let req = content_request(&session, &content, parent.clone(), parent.as_ref())?;
                    session.registry.register_content(&caller, req)?
                }
            };
            finish(&session, &event)?;
        }
        Command::Attach { content, target } => {
            let mut session = Session::open(load_config(config_path)?)?;
            let caller = operator(&session.config, content.operator.as_deref())?;
            let target = anchor_id(&target)?;
            if content.tree.is_none() && content.key.is_none() {
                return Err(CliError::Input("attach with --commitment needs --tree".into()));
            }
            let req = content_request(&session, &content, None, None)?;
            let event = session.registry.register_targeted(&caller, req, &target)?;
            finish(&session, &event)?;
        }
        Command::Govern { kind, target, descriptor, operator: op } => {
            let mut session = Session::open(load_config(config_path)?)?;
            let caller = operator(&session.config, op.as_deref())?;
            let kind: GovernanceKind = kind.parse()?;
            let target = anchor_id(&target)?;
            let event = session.registry.register_governance(&caller, kind, &target, &descriptor)?;
            finish(&session, &event)?;
        }
        Command::Reconstruct { tree, no_cascade, log } => {
            let log = match log {
                Some(l) => l,
                None => load_config(config_path)?.log_path,
            };
            let topic = tree.as_deref().map(|t| digest("tree topic", t)).transpose()?;
            let events = read_log(&log, false)?;
            let options = ReconstructOptions { apply_void_cascade: !no_cascade };
            let (forest, _) = reconstruct_with(&events, options)?;
            print_json(&forest.dump(topic.as_ref()));
        }
        Command::Verify { root, key: k, log } => {
            let log = match log {
                Some(l) => l,
                None => load_config(config_path)?.log_path,
            };
            let k = key(&k)?;
            let root = anchor_id(&root)?;
            let events = read_log(&log, false)?;
            let (forest, _) = reconstruct_with(&events, ReconstructOptions::default())?;
            let result = authenticate_tree(&k, &root, &forest)?;
            print_json(&result);
            if !result.authenticated {
                return Err(CliError::Negative(format!("key does not authenticate the tree rooted at {root}")));
            }
        }
        Command::Attack { variant, drill, seed } => {
            let variant: Variant = variant.parse().map_err(input("variant"))?;
            match drill {
                None => {
                    let outcome = poisoning::run_seeded(variant, seed, Mechanisms::all()).map_err(input("attack"))?;
                    print_json(&outcome);
                    if !outcome.closed {
                        return Err(CliError::Negative(format!("{variant:?} was not closed")));
                    }
                }
                Some(m) => {
                    let mechanism: Mechanism = m.parse().map_err(input("mechanism"))?;
                    let report = poisoning::necessity_drill(mechanism, seed).map_err(input("drill"))?;
                    print_json(&report);
                    let expected = if variant == mechanism.guards() {
                        report.breached
                    } else {
                        report.others.iter().any(|o| o.variant == variant && o.closed)
                    };
                    if !(expected && report.expected_observed) {
                        return Err(CliError::Negative(format!("drill without {mechanism} did not behave as expected")));
                    }
                }
            }
        }
        Command::Gas { kind } => {
            let kind = match kind.to_ascii_lowercase().as_str() {
                "content" => RequestKind::Content,
                "governance" => RequestKind::Governance,
                other => return Err(CliError::Input(format!("unknown request kind {other:?}"))),
            };
            print_json(&gas_estimate(kind));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("anchorreg: {e}");
            ExitCode::from(e.code())
        }
    }
}
