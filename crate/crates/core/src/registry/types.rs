use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::RegistryError;

pub const GOVERNANCE_TYPES: [&str; 3] = ["REVIEW", "VOID", "AFFIRMED"];
pub const ACCOUNT_TYPE: &str = "ACCOUNT";
pub const DEFAULT_CONTENT_TYPES: [&str; 6] = ["DATASET", "MODEL", "DOCUMENT", "IMAGE", "AUDIO", "CODE"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ArtifactClass {
    Content,
    Governance,
    Account,
}

/// Symbolic artifact type tag as it appears in events.
///
/// The class is a function of the name: the three governance names and
/// `ACCOUNT` are fixed, everything else is content. Which content names a
/// registry accepts is decided by its [`Taxonomy`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArtifactType(String);

impl ArtifactType {
    pub fn new(name: impl Into<String>) -> Result<Self, RegistryError> {
        let name = name.into();
        if name.is_empty() || !name.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_') {
            return Err(RegistryError::UnknownArtifactType(name));
        }
        Ok(ArtifactType(name))
    }

    pub fn governance(kind: GovernanceKind) -> Self {
        ArtifactType(kind.name().to_owned())
    }

    pub fn account() -> Self {
        ArtifactType(ACCOUNT_TYPE.to_owned())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn class(&self) -> ArtifactClass {
        if GOVERNANCE_TYPES.contains(&self.0.as_str()) {
            ArtifactClass::Governance
        } else if self.0 == ACCOUNT_TYPE {
            ArtifactClass::Account
        } else {
            ArtifactClass::Content
        }
    }

    pub fn is_void(&self) -> bool {
        self.0 == "VOID"
    }
}

impl fmt::Display for ArtifactType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ArtifactType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ArtifactType {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArtifactType::new(s)
    }
}

impl Serialize for ArtifactType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ArtifactType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        ArtifactType::new(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GovernanceKind {
    Review,
    Void,
    Affirmed,
}

impl GovernanceKind {
    pub const ALL: [GovernanceKind; 3] = [GovernanceKind::Review, GovernanceKind::Void, GovernanceKind::Affirmed];

    pub fn name(self) -> &'static str {
        match self {
            GovernanceKind::Review => "REVIEW",
            GovernanceKind::Void => "VOID",
            GovernanceKind::Affirmed => "AFFIRMED",
        }
    }
}

impl FromStr for GovernanceKind {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GovernanceKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| RegistryError::UnknownArtifactType(s.to_owned()))
    }
}

/// The set of artifact type names a registry accepts.
///
/// Only content names are configurable; the governance and account classes
/// are fixed because enforcement depends on them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    classes: BTreeMap<String, ArtifactClass>,
}

#[derive(Serialize, Deserialize)]
struct TaxonomyEntry {
    name: String,
    class: ArtifactClass,
}

#[derive(Serialize, Deserialize)]
struct TaxonomyFile {
    types: Vec<TaxonomyEntry>,
}

impl Taxonomy {
    pub fn with_content_types<I, S>(content: I) -> Result<Self, RegistryError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut classes = BTreeMap::new();
        for g in GOVERNANCE_TYPES {
            classes.insert(g.to_owned(), ArtifactClass::Governance);
        }
        classes.insert(ACCOUNT_TYPE.to_owned(), ArtifactClass::Account);
        for name in content {
            let ty = ArtifactType::new(name)?;
            if ty.class() != ArtifactClass::Content {
                return Err(RegistryError::BadTaxonomy(format!(
                    "{} is reserved for the {:?} class",
                    ty.name(),
                    ty.class()
                )));
            }
            classes.insert(ty.0, ArtifactClass::Content);
        }
        Ok(Taxonomy { classes })
    }

    /// Parses `{"types": [{"name": "...", "class": "CONTENT"}, ...]}`.
    ///
    /// The file must list exactly REVIEW, VOID, AFFIRMED as governance and
    /// exactly ACCOUNT as account; omitting them is also accepted.
    pub fn from_json(json: &str) -> Result<Self, RegistryError> {
        let file: TaxonomyFile =
            serde_json::from_str(json).map_err(|e| RegistryError::BadTaxonomy(e.to_string()))?;
        let mut content = Vec::new();
        for entry in file.types {
            let ty = ArtifactType::new(entry.name.clone())?;
            if ty.class() != entry.class {
                return Err(RegistryError::BadTaxonomy(format!(
                    "{} must have class {:?}, not {:?}",
                    entry.name,
                    ty.class(),
                    entry.class
                )));
            }
            if entry.class == ArtifactClass::Content {
                content.push(entry.name);
            }
        }
        Taxonomy::with_content_types(content)
    }

    pub fn to_json(&self) -> String {
        let types = self
            .classes
            .iter()
            .map(|(name, class)| TaxonomyEntry { name: name.clone(), class: *class })
            .collect();
        serde_json::to_string_pretty(&TaxonomyFile { types }).expect("taxonomy serializes")
    }

    pub fn contains(&self, ty: &ArtifactType) -> bool {
        self.classes.contains_key(ty.name())
    }

    pub fn content_types(&self) -> impl Iterator<Item = ArtifactType> + '_ {
        self.classes
            .iter()
            .filter(|(_, c)| **c == ArtifactClass::Content)
            .map(|(n, _)| ArtifactType(n.clone()))
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy::with_content_types(DEFAULT_CONTENT_TYPES).expect("default taxonomy is valid")
    }
}

/// A 20-byte operator wallet address, rendered as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperatorId(pub [u8; 20]);

impl OperatorId {
    pub fn from_hex(s: &str) -> Result<Self, RegistryError> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        let mut out = [0u8; 20];
        hex::decode_to_slice(s.to_ascii_lowercase(), &mut out)
            .map_err(|_| RegistryError::BadOperator(s.to_owned()))?;
        Ok(OperatorId(out))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorId({})", self.to_hex())
    }
}

impl FromStr for OperatorId {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OperatorId::from_hex(s)
    }
}

impl Serialize for OperatorId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for OperatorId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        OperatorId::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes_follow_names() {
        for g in GOVERNANCE_TYPES {
            assert_eq!(ArtifactType::new(g).unwrap().class(), ArtifactClass::Governance);
        }
        assert_eq!(ArtifactType::account().class(), ArtifactClass::Account);
        assert_eq!(ArtifactType::new("MODEL").unwrap().class(), ArtifactClass::Content);
        assert!(ArtifactType::new("model").is_err());
    }

    #[test]
    fn taxonomy_rejects_reclassification() {
        let bad = r#"{"types":[{"name":"VOID","class":"CONTENT"}]}"#;
        assert!(matches!(Taxonomy::from_json(bad), Err(RegistryError::BadTaxonomy(_))));
        let bad = r#"{"types":[{"name":"PREPRINT","class":"GOVERNANCE"}]}"#;
        assert!(Taxonomy::from_json(bad).is_err());
    }

    #[test]
    fn taxonomy_json_round_trip() {
        let t = Taxonomy::default();
        assert_eq!(Taxonomy::from_json(&t.to_json()).unwrap(), t);
        let custom = Taxonomy::from_json(r#"{"types":[{"name":"PREPRINT","class":"CONTENT"}]}"#).unwrap();
        assert!(custom.contains(&ArtifactType::new("PREPRINT").unwrap()));
        assert!(custom.contains(&ArtifactType::new("VOID").unwrap()));
        assert!(!custom.contains(&ArtifactType::new("MODEL").unwrap()));
    }

    #[test]
    fn operator_hex() {
        let op = OperatorId::from_hex("0x00000000000000000000000000000000000000Ab").unwrap();
        assert_eq!(op.to_hex(), "00000000000000000000000000000000000000ab");
        assert!(OperatorId::from_hex("abcd").is_err());
    }
}
