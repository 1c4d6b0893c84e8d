//! Flag catalogs, binary genomes, and the mapping between them.
//!
//! A catalog is an ordered list of toggleable compiler flags. A genome is a
//! bit vector of the same length; bit `i` decides whether flag `i` is
//! emitted in its on form or its off form. Decoding prepends the catalog's
//! fixed base arguments, so the search only ever edits the tail of the
//! argument list.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One tunable flag: the token emitted when its gene is 1 and, optionally,
/// the token emitted when it is 0. `off_form: None` emits nothing when off.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagSpec {
    pub name: String,
    pub on_form: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub off_form: Option<String>,
}

/// Ordered flag list plus arguments that every decoded command line starts
/// with. Flag order is the genome bit order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagCatalog {
    pub flags: Vec<FlagSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub base_arguments: Vec<String>,
}

impl FlagCatalog {
    /// Parses and validates a catalog document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let catalog: FlagCatalog =
            serde_json::from_str(text).map_err(|e| Error::CatalogParse(e.to_string()))?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::CatalogParse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Flag names must be unique and names and on forms non-empty. An empty
    /// flag list is legal here; consumers that need at least one flag reject
    /// it themselves.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for spec in &self.flags {
            if spec.name.is_empty() {
                return Err(Error::CatalogParse("flag with empty name".into()));
            }
            if spec.on_form.is_empty() {
                return Err(Error::CatalogParse(format!(
                    "flag {} has an empty on_form",
                    spec.name
                )));
            }
            if spec.off_form.as_deref() == Some("") {
                return Err(Error::CatalogParse(format!(
                    "flag {} has an empty off_form",
                    spec.name
                )));
            }
            if !seen.insert(spec.name.as_str()) {
                return Err(Error::DuplicateFlag(spec.name.clone()));
            }
        }
        Ok(())
    }

    pub fn genome_length(&self) -> usize {
        self.flags.len()
    }

    /// Hex SHA-256 of the canonical serialized catalog. Reports embed this
    /// so results can be matched to the exact flag list that produced them.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("catalog serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let out = hasher.finalize();
        let mut hex = String::with_capacity(out.len() * 2);
        for byte in out {
            use std::fmt::Write;
            write!(hex, "{byte:02x}").unwrap();
        }
        hex
    }

    /// Full compiler argument list for a genome: base arguments first, then
    /// one token per flag whose form applies (off flags without an off form
    /// contribute nothing).
    pub fn decode(&self, genome: &Genome) -> Result<Vec<String>> {
        if genome.len() != self.flags.len() {
            return Err(Error::LengthMismatch {
                expected: self.flags.len(),
                got: genome.len(),
            });
        }
        let mut args = self.base_arguments.clone();
        for (spec, on) in self.flags.iter().zip(genome.iter()) {
            if on {
                args.push(spec.on_form.clone());
            } else if let Some(off) = &spec.off_form {
                args.push(off.clone());
            }
        }
        Ok(args)
    }

    /// Genome with bit `i` set iff flag `i`'s name is in `selected`.
    /// Unknown names are rejected rather than ignored.
    pub fn encode<S: AsRef<str>>(&self, selected: &[S]) -> Result<Genome> {
        let known: HashSet<&str> = self.flags.iter().map(|f| f.name.as_str()).collect();
        for name in selected {
            if !known.contains(name.as_ref()) {
                return Err(Error::UnknownFlag(name.as_ref().to_string()));
            }
        }
        let wanted: HashSet<&str> = selected.iter().map(|s| s.as_ref()).collect();
        let bits = self
            .flags
            .iter()
            .map(|f| wanted.contains(f.name.as_str()))
            .collect();
        Ok(Genome::new(bits))
    }

    /// Names of the flags a genome enables, in catalog order.
    pub fn enabled_names(&self, genome: &Genome) -> Result<Vec<String>> {
        if genome.len() != self.flags.len() {
            return Err(Error::LengthMismatch {
                expected: self.flags.len(),
                got: genome.len(),
            });
        }
        Ok(self
            .flags
            .iter()
            .zip(genome.iter())
            .filter(|(_, on)| *on)
            .map(|(f, _)| f.name.clone())
            .collect())
    }
}

/// Fixed-length bit vector over a catalog's flags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genome {
    bits: Vec<bool>,
}

impl Genome {
    pub fn new(bits: Vec<bool>) -> Self {
        Genome { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Genome {
            bits: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn set_bit(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::DocumentParse(format!(
                        "genome strings contain only 0 and 1, found {other:?}"
                    )))
                }
            }
        }
        Ok(Genome { bits })
    }
}

impl Serialize for Genome {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Genome {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// The compiler's own bundled optimization levels, used as comparison
/// baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptLevel {
    O0,
    O1,
    O2,
    O3,
    Ofast,
}

impl OptLevel {
    pub const ALL: [OptLevel; 5] = [
        OptLevel::O0,
        OptLevel::O1,
        OptLevel::O2,
        OptLevel::O3,
        OptLevel::Ofast,
    ];

    pub fn label(self) -> &'static str {
        match self {
            OptLevel::O0 => "O0",
            OptLevel::O1 => "O1",
            OptLevel::O2 => "O2",
            OptLevel::O3 => "O3",
            OptLevel::Ofast => "Ofast",
        }
    }

    pub fn argument(self) -> &'static str {
        match self {
            OptLevel::O0 => "-O0",
            OptLevel::O1 => "-O1",
            OptLevel::O2 => "-O2",
            OptLevel::O3 => "-O3",
            OptLevel::Ofast => "-Ofast",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.label() == label)
    }
}

impl fmt::Display for OptLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for OptLevel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for OptLevel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        OptLevel::from_label(&s)
            .ok_or_else(|| D::Error::custom(format!("unknown optimization level {s:?}")))
    }
}
