//! Config loading and on-disk state: the JSONL event log plus a sidecar file
//! of PENDING reservations. Ownership keys are never written anywhere.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};

use anchor_registry::commitments::AnchorId;
use anchor_registry::eventlog::{self, AnchoredEvent};
use anchor_registry::registry::{OperatorId, Registry, Taxonomy};
use serde::Deserialize;

use crate::exit::{input, CliError};

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ConfigFile {
    log_path: PathBuf,
    operators: Vec<String>,
    #[serde(default)]
    taxonomy_path: Option<PathBuf>,
    #[serde(default)]
    seed: Option<String>,
}

/// A validated config. Relative paths are resolved against the config
/// file's directory.
#[derive(Debug, Clone)]
pub struct Config {
    pub log_path: PathBuf,
    pub operators: Vec<OperatorId>,
    pub taxonomy: Taxonomy,
    pub seed: Option<[u8; 32]>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(input(&format!("config {}", path.display())))?;
        let raw: ConfigFile = serde_json::from_str(&text).map_err(input("config"))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let log_path = base.join(&raw.log_path);
        let parent = log_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(CliError::Input(format!("log directory {} does not exist", parent.display())));
        }
        if raw.operators.is_empty() {
            return Err(CliError::Input("config lists no operators".into()));
        }
        let operators = raw
            .operators
            .iter()
            .map(|o| OperatorId::from_hex(o))
            .collect::<Result<Vec<_>, _>>()?;
        let taxonomy = match &raw.taxonomy_path {
            Some(p) => {
                let p = base.join(p);
                let text = fs::read_to_string(&p).map_err(input(&format!("taxonomy {}", p.display())))?;
                Taxonomy::from_json(&text)?
            }
            None => Taxonomy::default(),
        };
        let seed = raw.seed.as_deref().map(parse_seed).transpose()?;
        Ok(Config { log_path, operators, taxonomy, seed })
    }

    pub fn default_operator(&self) -> OperatorId {
        self.operators[0]
    }
}

pub fn parse_seed(s: &str) -> Result<[u8; 32], CliError> {
    let s = s.strip_prefix("0x").unwrap_or(s);
    let mut out = [0u8; 32];
    hex::decode_to_slice(s, &mut out).map_err(input("seed must be 32 bytes of hex"))?;
    Ok(out)
}

fn sidecar(log: &Path, suffix: &str) -> PathBuf {
    let mut name = log.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn reservations_path(log: &Path) -> PathBuf {
    sidecar(log, ".reservations.json")
}

/// Reads the whole log. A missing file is an empty log only when
/// `missing_ok` is set.
pub fn read_log(path: &Path, missing_ok: bool) -> Result<Vec<AnchoredEvent>, CliError> {
    match File::open(path) {
        Ok(f) => Ok(eventlog::read_jsonl(BufReader::new(f))?),
        Err(e) if e.kind() == ErrorKind::NotFound && missing_ok => Ok(Vec::new()),
        Err(e) => Err(CliError::Unreadable(format!("cannot read log {}: {e}", path.display()))),
    }
}

fn read_reservations(path: &Path) -> Result<BTreeMap<AnchorId, String>, CliError> {
    match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text)
            .map_err(|e| CliError::Unreadable(format!("reservations file {}: {e}", path.display()))),
        Err(e) if e.kind() == ErrorKind::NotFound => Ok(BTreeMap::new()),
        Err(e) => Err(CliError::Unreadable(format!("cannot read {}: {e}", path.display()))),
    }
}

/// A registry restored from disk under an exclusive lock, for one mutating
/// command. Nothing is written unless [`Session::commit`] is called.
pub struct Session {
    pub config: Config,
    pub registry: Registry,
    _lock: File,
}

impl Session {
    pub fn open(config: Config) -> Result<Self, CliError> {
        let lock_path = sidecar(&config.log_path, ".lock");
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(|e| CliError::Unreadable(format!("cannot open lock {}: {e}", lock_path.display())))?;
        lock.lock().map_err(|e| CliError::Unreadable(format!("cannot lock {}: {e}", lock_path.display())))?;

        let events = read_log(&config.log_path, true)?;
        let mut pending = read_reservations(&reservations_path(&config.log_path))?;
        // A crash between the log append and the sidecar rewrite leaves a
        // registered id still listed as pending.
        for e in &events {
            pending.remove(&e.ar_id_plain);
        }
        let mut registry = Registry::restore(config.operators.clone(), config.taxonomy.clone(), events, pending)?;
        if let Some(seed) = config.seed {
            registry = registry.with_seed(seed);
        }
        Ok(Session { config, registry, _lock: lock })
    }

    /// Appends `event` (if any) to the log, then rewrites the reservations
    /// sidecar.
    pub fn commit(&self, event: Option<&AnchoredEvent>) -> Result<(), CliError> {
        let log = &self.config.log_path;
        let io_err = |e: std::io::Error| CliError::Unreadable(format!("cannot write {}: {e}", log.display()));
        if let Some(event) = event {
            let mut f = OpenOptions::new().create(true).append(true).open(log).map_err(io_err)?;
            f.write_all(format!("{}\n", eventlog::serialize(event)).as_bytes()).map_err(io_err)?;
            f.sync_data().map_err(io_err)?;
        }
        let pending: BTreeMap<&AnchorId, &str> = self.registry.reservations().collect();
        let path = reservations_path(log);
        let tmp = sidecar(log, ".reservations.json.tmp");
        let json = serde_json::to_string_pretty(&pending).expect("map serializes");
        fs::write(&tmp, json + "\n").map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(io_err)?;
        Ok(())
    }
}
