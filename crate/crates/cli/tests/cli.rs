use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const OPERATOR: &str = "0x0101010101010101010101010101010101010101";
const OUTSIDER: &str = "0x0202020202020202020202020202020202020202";
const ZERO32: &str = "0000000000000000000000000000000000000000000000000000000000000000";
/// keccak256 of 32 zero bytes.
const ZERO_SEED_KEY: &str = "290decd9548b62a8d60345a988386fc84ba6bc95484008f6362f93160ef3e563";

struct Env {
    dir: TempDir,
    config: PathBuf,
}

impl Env {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        let config = dir.path().join("config.json");
        let cfg = serde_json::json!({ "logPath": "log.jsonl", "operators": [OPERATOR], "seed": "11".repeat(32) });
        fs::write(&config, cfg.to_string()).unwrap();
        Env { dir, config }
    }

    fn log(&self) -> PathBuf {
        self.dir.path().join("log.jsonl")
    }

    fn log_bytes(&self) -> Vec<u8> {
        fs::read(self.log()).unwrap_or_default()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_anchorreg"))
            .arg("--config")
            .arg(&self.config)
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> Value {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).unwrap()
    }

    /// Runs a command expected to fail with `code` and checks the log did
    /// not change.
    fn fails(&self, code: i32, args: &[&str]) {
        let before = self.log_bytes();
        let out = self.run(args);
        assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(self.log_bytes(), before, "{args:?} modified the log");
    }

    fn reserve(&self) -> String {
        self.ok(&["reserve"])["arId"].as_str().unwrap().to_owned()
    }

    fn key(&self, seed_byte: &str) -> String {
        self.ok(&["keygen", "--seed", &seed_byte.repeat(32)])["key"].as_str().unwrap().to_owned()
    }

    fn register(&self, id: &str, key: &str, parent: Option<&str>) -> Value {
        let manifest = "ab".repeat(32);
        let mut args = vec!["register", "--id", id, "--manifest", &manifest, "--key", key];
        if let Some(p) = parent {
            args.extend(["--parent", p]);
        }
        self.ok(&args)
    }

    fn lines(&self) -> usize {
        String::from_utf8(self.log_bytes()).unwrap().lines().count()
    }
}

fn all_files(dir: &Path) -> Vec<PathBuf> {
    fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_file()).collect()
}

#[test]
fn keygen_is_deterministic_with_seed_and_random_without() {
    let env = Env::new();
    assert_eq!(env.key("00"), ZERO_SEED_KEY);
    let a = env.ok(&["keygen"])["key"].as_str().unwrap().to_owned();
    let b = env.ok(&["keygen"])["key"].as_str().unwrap().to_owned();
    assert_ne!(a, b);
    assert_eq!(a.len(), 64);
    env.fails(2, &["keygen", "--seed", "xyz"]);
    env.fails(2, &["keygen", "--seed", "00"]);
}

#[test]
fn happy_path_root_then_child() {
    let env = Env::new();
    let key = env.key("07");
    let root = env.reserve();
    let ev = env.register(&root, &key, None);
    assert_eq!(ev["arIdPlain"], root.as_str());
    assert_eq!(ev["parentArId"], "");
    let commit = env.ok(&["commit", "--key", &key, "--id", &root]);
    assert_eq!(ev["treeIdPlain"], commit["treeId"]);
    assert_eq!(ev["tokenCommitment"], commit["tokenCommitment"]);

    let child = env.reserve();
    let ev = env.register(&child, &key, Some(&root));
    assert_eq!(ev["parentArId"], root.as_str());
    assert_eq!(env.lines(), 2);

    let reservations: Value =
        serde_json::from_str(&fs::read_to_string(env.dir.path().join("log.jsonl.reservations.json")).unwrap()).unwrap();
    assert_eq!(reservations.as_object().unwrap().len(), 0);
}

#[test]
fn registry_errors_map_to_exit_codes_and_leave_the_log_alone() {
    let env = Env::new();
    let key = env.key("07");
    let root = env.reserve();
    env.register(&root, &key, None);
    let m = "ab".repeat(32);

    let id = env.reserve();
    env.fails(10, &["register", "--id", &id, "--manifest", &m, "--key", &key, "--parent", &root, "--operator", OUTSIDER]);
    env.fails(11, &["register", "--id", &id, "--manifest", &m, "--commitment", ZERO32, "--parent", &root]);
    env.fails(12, &["register", "--id", &root, "--manifest", &m, "--key", &key]);
    env.fails(13, &["register", "--id", "never-reserved", "--manifest", &m, "--key", &key, "--parent", &root]);
    env.fails(14, &["register", "--id", &id, "--manifest", &m, "--key", &key, "--parent", "ghost"]);
    env.fails(14, &["govern", "--kind", "VOID", "--target", "ghost"]);
    env.fails(15, &["register", "--id", &id, "--manifest", &m, "--key", &key, "--parent", &root, "--tree", &"cd".repeat(32)]);
    env.fails(16, &["register", "--id", &id, "--manifest", "not-hex", "--key", &key, "--parent", &root]);
    env.fails(2, &["register", "--id", &id, "--manifest", &m, "--key", "zz"]);
    env.fails(2, &["register", "--id", &id, "--manifest", &m, "--commitment", &"cd".repeat(32)]);

    // The reservation survived every failure.
    env.register(&id, &key, Some(&root));
    assert_eq!(env.lines(), 2);
}

#[test]
fn verify_accepts_owner_and_rejects_others() {
    let env = Env::new();
    let key = env.key("07");
    let root = env.reserve();
    env.register(&root, &key, None);
    let child = env.reserve();
    env.register(&child, &key, Some(&root));
    env.ok(&["govern", "--kind", "REVIEW", "--target", &child]);

    let res = env.ok(&["verify", "--root", &root, "--key", &key]);
    assert_eq!(res["authenticated"], true);
    assert_eq!(res["anchorChecks"].as_object().unwrap().len(), 2);
    assert_eq!(res["governanceSkipped"].as_array().unwrap().len(), 1);

    let out = env.run(&["verify", "--root", &root, "--key", &env.key("08")]);
    assert_eq!(out.status.code(), Some(1));
    let res: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(res["authenticated"], false);

    env.fails(14, &["verify", "--root", &child, "--key", &key]);
}

#[test]
fn reconstruct_filters_by_tree_topic_and_applies_void() {
    let env = Env::new();
    let (ka, kb) = (env.key("0a"), env.key("0b"));
    let ra = env.reserve();
    env.register(&ra, &ka, None);
    let rb = env.reserve();
    env.register(&rb, &kb, None);
    let cb = env.reserve();
    env.register(&cb, &kb, Some(&rb));
    env.ok(&["govern", "--kind", "VOID", "--target", &cb]);

    let all = env.ok(&["reconstruct"]);
    assert_eq!(all["trees"].as_array().unwrap().len(), 2);

    let topic = env.ok(&["commit", "--key", &kb, "--id", &rb])["treeTopic"].as_str().unwrap().to_owned();
    let only = env.ok(&["reconstruct", "--tree", &topic]);
    let trees = only["trees"].as_array().unwrap();
    assert_eq!(trees.len(), 1);
    assert_eq!(trees[0]["root"], rb.as_str());
    assert_eq!(trees[0]["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(trees[0]["suppressed"], serde_json::json!([cb]));

    let raw = env.ok(&["reconstruct", "--tree", &topic, "--no-cascade"]);
    assert_eq!(raw["trees"][0]["suppressed"], serde_json::json!([]));
}

#[test]
fn tampered_and_unreadable_logs() {
    let env = Env::new();
    let key = env.key("07");
    let root = env.reserve();
    env.register(&root, &key, None);

    let missing = env.dir.path().join("missing.jsonl");
    env.fails(3, &["verify", "--root", &root, "--key", &key, "--log", missing.to_str().unwrap()]);
    env.fails(3, &["reconstruct", "--log", missing.to_str().unwrap()]);

    let garbage = env.dir.path().join("garbage.jsonl");
    fs::write(&garbage, "{not json\n").unwrap();
    env.fails(3, &["reconstruct", "--log", garbage.to_str().unwrap()]);

    // Rename the anchor in its plain field only: the indexed topic no longer
    // matches.
    let text = fs::read_to_string(env.log()).unwrap();
    let tampered = env.dir.path().join("tampered.jsonl");
    fs::write(&tampered, text.replace(&format!("\"arIdPlain\":\"{root}\""), "\"arIdPlain\":\"someone-else\"")).unwrap();
    env.fails(4, &["verify", "--root", "someone-else", "--key", &key, "--log", tampered.to_str().unwrap()]);
    env.fails(4, &["reconstruct", "--log", tampered.to_str().unwrap()]);
}

#[test]
fn keys_never_reach_the_state_directory() {
    let env = Env::new();
    let key = env.key("5e");
    let root = env.reserve();
    env.register(&root, &key, None);
    let child = env.reserve();
    env.register(&child, &key, Some(&root));
    let acct = env.reserve();
    let m = "ab".repeat(32);
    env.ok(&["register", "--id", &acct, "--type", "ACCOUNT", "--manifest", &m, "--key", &key, "--parent", &root]);
    let gated = env.reserve();
    env.ok(&["register", "--id", &gated, "--manifest", &m, "--key", &key, "--account", &acct]);
    let other = env.key("5f");
    let att = env.reserve();
    let other_tree = env.ok(&["commit", "--key", &other, "--id", "elsewhere"])["treeId"].as_str().unwrap().to_owned();
    env.ok(&["attach", "--id", &att, "--manifest", &m, "--key", &other, "--tree", &other_tree, "--target", &child]);
    env.ok(&["verify", "--root", &root, "--key", &key]);
    env.fails(12, &["register", "--id", &root, "--manifest", &m, "--key", &key]);
    assert_eq!(env.lines(), 5);

    for file in all_files(env.dir.path()) {
        let bytes = fs::read(&file).unwrap();
        let text = String::from_utf8_lossy(&bytes).to_lowercase();
        for k in [&key, &other] {
            assert!(!text.contains(k.as_str()), "key found in {}", file.display());
        }
    }
}

#[test]
fn gated_registration_defaults_to_the_account_parent() {
    let env = Env::new();
    let key = env.key("07");
    let m = "ab".repeat(32);
    let root = env.reserve();
    env.register(&root, &key, None);
    let acct = env.reserve();
    env.ok(&["register", "--id", &acct, "--type", "ACCOUNT", "--manifest", &m, "--key", &key, "--parent", &root]);
    let item = env.reserve();
    let ev = env.ok(&["register", "--id", &item, "--manifest", &m, "--key", &key, "--account", &acct]);
    assert_eq!(ev["parentArId"], acct.as_str());
    let stray = env.reserve();
    env.fails(14, &["register", "--id", &stray, "--manifest", &m, "--key", &key, "--account", &root]);
}

#[test]
fn attacks_and_drills_report_expected_results() {
    let env = Env::new();
    for (variant, mechanism) in [("fraudulent-root", "CRYPTOGRAPHIC_PRIORITY"), ("2", "GOVERNANCE_CASCADE"), ("tree-spoofing", "CONTRACT_ENFORCEMENT")] {
        let out = env.ok(&["attack", "--variant", variant]);
        assert_eq!(out["closed"], true);
        assert_eq!(out["closedBy"], mechanism);
    }
    for drill in ["priority", "cascade", "enforcement"] {
        for variant in ["1", "2", "3"] {
            let out = env.ok(&["attack", "--variant", variant, "--drill", drill]);
            assert_eq!(out["expectedObserved"], true);
        }
    }
    env.fails(2, &["attack", "--variant", "4"]);
    env.fails(2, &["attack", "--variant", "1", "--drill", "nothing"]);
}

#[test]
fn gas_report_is_fixed() {
    let env = Env::new();
    let g = env.ok(&["gas"]);
    assert_eq!(g["storeCommitment"], 20000);
    assert_eq!(g["zeroCheck"], 3);
    assert_eq!(g["eventEmission"], 375);
    assert_eq!(g["totalAdded"], 20378);
}

#[test]
fn config_problems_are_bad_input() {
    let env = Env::new();
    fs::write(&env.config, r#"{"logPath":"log.jsonl","operators":[]}"#).unwrap();
    env.fails(2, &["reserve"]);
    fs::write(&env.config, r#"{"logPath":"no/such/dir/log.jsonl","operators":["0x01"]}"#).unwrap();
    env.fails(2, &["reserve"]);
    fs::write(&env.config, r#"{"logPath":"log.jsonl","operators":["nothex"]}"#).unwrap();
    env.fails(2, &["reserve"]);
    let out = Command::new(env!("CARGO_BIN_EXE_anchorreg")).arg("reserve").env_remove("ANCHORREG_CONFIG").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
