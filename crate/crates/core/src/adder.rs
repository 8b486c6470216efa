//! One-bit full adders described as truth tables.
//!
//! Every adder, exact or approximate, is an 8-row table indexed by
//! `idx = 4*A + 2*B + Cin`. Approximate behaviors are never compiled in;
//! they are loaded from an adder-library document:
//!
//! ```json
//! [
//!   { "name": "exact", "sum_bits": "01101001", "cout_bits": "00010111" }
//! ]
//! ```
//!
//! Character `i` of each bit string is the output for row `i`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EXACT_NAME: &str = "exact";

const EXACT_SUM: u8 = 0b1001_0110;
const EXACT_COUT: u8 = 0b1110_1000;

#[inline]
pub fn row_index(a: u8, b: u8, cin: u8) -> usize {
    ((a as usize & 1) << 2) | ((b as usize & 1) << 1) | (cin as usize & 1)
}

/// Behavior of a single full-adder cell.
///
/// Bit `idx` of `sum` / `cout` holds the output for truth-table row `idx`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FullAdderSpec {
    name: String,
    sum: u8,
    cout: u8,
}

impl FullAdderSpec {
    pub fn new(name: impl Into<String>, sum_bits: [u8; 8], cout_bits: [u8; 8]) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Format {
                entry: String::new(),
                field: "name".into(),
                reason: "must not be empty".into(),
            });
        }
        let pack = |bits: [u8; 8], field: &str| -> Result<u8> {
            bits.iter().enumerate().try_fold(0u8, |acc, (i, &b)| match b {
                0 | 1 => Ok(acc | (b << i)),
                _ => Err(Error::Format {
                    entry: name.clone(),
                    field: field.into(),
                    reason: format!("row {i} holds {b}, expected 0 or 1"),
                }),
            })
        };
        let sum = pack(sum_bits, "sum_bits")?;
        let cout = pack(cout_bits, "cout_bits")?;
        Ok(FullAdderSpec { name, sum, cout })
    }

    /// Builds a spec from two bit strings in document form.
    pub fn from_bit_strings(name: &str, sum_bits: &str, cout_bits: &str) -> Result<Self> {
        let sum = parse_bits(name, "sum_bits", sum_bits)?;
        let cout = parse_bits(name, "cout_bits", cout_bits)?;
        FullAdderSpec::new(name, sum, cout)
    }

    /// Builds a spec from packed row masks (bit `idx` = row `idx`).
    pub fn from_masks(name: impl Into<String>, sum: u8, cout: u8) -> Self {
        FullAdderSpec {
            name: name.into(),
            sum,
            cout,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sum_mask(&self) -> u8 {
        self.sum
    }

    pub fn cout_mask(&self) -> u8 {
        self.cout
    }

    pub fn sum_bits(&self) -> [u8; 8] {
        std::array::from_fn(|i| (self.sum >> i) & 1)
    }

    pub fn cout_bits(&self) -> [u8; 8] {
        std::array::from_fn(|i| (self.cout >> i) & 1)
    }

    pub fn sum_string(&self) -> String {
        bits_to_string(self.sum)
    }

    pub fn cout_string(&self) -> String {
        bits_to_string(self.cout)
    }

    /// Table lookup; inputs are reduced to their low bit.
    #[inline]
    pub fn eval(&self, a: u8, b: u8, cin: u8) -> (u8, u8) {
        let idx = row_index(a, b, cin);
        ((self.sum >> idx) & 1, (self.cout >> idx) & 1)
    }

    /// The eight `(sum | cout << 1)` outputs, indexed by row.
    pub fn packed_rows(&self) -> [u8; 8] {
        std::array::from_fn(|i| ((self.sum >> i) & 1) | (((self.cout >> i) & 1) << 1))
    }

    /// Same tables as the exact adder, regardless of name.
    pub fn is_exact(&self) -> bool {
        self.sum == EXACT_SUM && self.cout == EXACT_COUT
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        FullAdderSpec {
            name: name.into(),
            ..self.clone()
        }
    }
}

impl fmt::Debug for FullAdderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FullAdderSpec")
            .field("name", &self.name)
            .field("sum_bits", &self.sum_string())
            .field("cout_bits", &self.cout_string())
            .finish()
    }
}

fn bits_to_string(mask: u8) -> String {
    (0..8)
        .map(|i| if (mask >> i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn parse_bits(entry: &str, field: &str, text: &str) -> Result<[u8; 8]> {
    let err = |reason: String| Error::Format {
        entry: entry.to_string(),
        field: field.to_string(),
        reason,
    };
    let chars: Vec<char> = text.chars().collect();
    if chars.len() != 8 {
        return Err(err(format!(
            "has length {}, expected exactly 8 characters",
            chars.len()
        )));
    }
    let mut bits = [0u8; 8];
    for (i, c) in chars.into_iter().enumerate() {
        bits[i] = match c {
            '0' => 0,
            '1' => 1,
            other => return Err(err(format!("has non-binary character {other:?} at {i}"))),
        };
    }
    Ok(bits)
}

/// Sum = parity of the inputs, carry = majority.
pub fn exact_full_adder() -> FullAdderSpec {
    FullAdderSpec::from_masks(EXACT_NAME, EXACT_SUM, EXACT_COUT)
}

/// Rows on which an adder disagrees with the exact one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdderErrorProfile {
    pub sum_error_rows: BTreeSet<usize>,
    pub cout_error_rows: BTreeSet<usize>,
}

impl AdderErrorProfile {
    /// Erroneous output bits over the table, 0..=16.
    pub fn row_error_count(&self) -> usize {
        self.sum_error_rows.len() + self.cout_error_rows.len()
    }
}

pub fn error_profile(spec: &FullAdderSpec) -> AdderErrorProfile {
    let exact = exact_full_adder();
    let rows = |a: u8, b: u8| (0..8).filter(|i| (a ^ b) >> i & 1 == 1).collect();
    AdderErrorProfile {
        sum_error_rows: rows(spec.sum, exact.sum),
        cout_error_rows: rows(spec.cout, exact.cout),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    name: String,
    sum_bits: String,
    cout_bits: String,
}

/// Named collection of adders in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdderLibrary {
    entries: Vec<FullAdderSpec>,
}

impl AdderLibrary {
    /// A library holding only the exact adder.
    pub fn exact_only() -> Self {
        AdderLibrary {
            entries: vec![exact_full_adder()],
        }
    }

    /// Builds a library from specs, injecting "exact" at the front when absent.
    pub fn from_specs(specs: impl IntoIterator<Item = FullAdderSpec>) -> Result<Self> {
        let mut entries: Vec<FullAdderSpec> = Vec::new();
        for spec in specs {
            if entries.iter().any(|e| e.name == spec.name) {
                return Err(Error::DuplicateAdder(spec.name));
            }
            if spec.name == EXACT_NAME && !spec.is_exact() {
                return Err(Error::Format {
                    entry: EXACT_NAME.into(),
                    field: "sum_bits/cout_bits".into(),
                    reason: "must hold the canonical exact tables 01101001/00010111".into(),
                });
            }
            entries.push(spec);
        }
        if !entries.iter().any(|e| e.name == EXACT_NAME) {
            entries.insert(0, exact_full_adder());
        }
        Ok(AdderLibrary { entries })
    }

    pub fn get(&self, name: &str) -> Option<&FullAdderSpec> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn resolve(&self, name: &str) -> Result<&FullAdderSpec> {
        self.get(name)
            .ok_or_else(|| Error::UnknownAdder(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FullAdderSpec> {
        self.entries.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical document form: pretty JSON, two-space indent, trailing newline.
    pub fn to_document(&self) -> String {
        let docs: Vec<EntryDoc> = self
            .entries
            .iter()
            .map(|e| EntryDoc {
                name: e.name.clone(),
                sum_bits: e.sum_string(),
                cout_bits: e.cout_string(),
            })
            .collect();
        let mut out = serde_json::to_string_pretty(&docs).expect("entries serialize");
        out.push('\n');
        out
    }
}

/// Parses an adder-library document.
pub fn load_library(document: &str) -> Result<AdderLibrary> {
    let value: serde_json::Value =
        serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    let items = value
        .as_array()
        .ok_or_else(|| Error::Parse("top level must be a list of adder entries".into()))?;
    let mut specs = Vec::with_capacity(items.len());
    for (pos, item) in items.iter().enumerate() {
        let label = item
            .get("name")
            .and_then(|n| n.as_str())
            .map(str::to_string)
            .unwrap_or_else(|| format!("#{pos}"));
        let doc: EntryDoc = serde_json::from_value(item.clone()).map_err(|e| Error::Format {
            entry: label.clone(),
            field: missing_field(&e.to_string()),
            reason: e.to_string(),
        })?;
        if doc.name.is_empty() {
            return Err(Error::Format {
                entry: label,
                field: "name".into(),
                reason: "must not be empty".into(),
            });
        }
        specs.push(FullAdderSpec::from_bit_strings(
            &doc.name,
            &doc.sum_bits,
            &doc.cout_bits,
        )?);
    }
    AdderLibrary::from_specs(specs)
}

fn missing_field(msg: &str) -> String {
    ["name", "sum_bits", "cout_bits"]
        .into_iter()
        .find(|f| msg.contains(&format!("`{f}`")))
        .unwrap_or("entry")
        .to_string()
}

pub fn load_library_file(path: impl AsRef<std::path::Path>) -> Result<AdderLibrary> {
    let text = std::fs::read_to_string(path)?;
    load_library(&text)
}
