//! Input documents: parsing, validation, and canonical serialization.
//!
//! A set document is a small JSON object carrying a matrix family and,
//! optionally, the six parameters of the two-member switching model. Every
//! numeric field round-trips through serialization bit-exactly: values are
//! written as decimal strings with 17 significant digits, which is enough
//! to reproduce any binary64 value, and are accepted back either as JSON
//! numbers (convenient to write by hand) or as such strings (as emitted).
//!
//! The canonical form of a document — compact JSON with every number in
//! the 17-digit string format — is what gets hashed into reports, so two
//! files that differ only in whitespace or in numeric spelling (`1` vs
//! `1.0`) identify the same input.

use std::collections::BTreeSet;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{self, Serializer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use jsr_core::switching::{build_model, KozyakinModel};
use jsr_core::matrix::approx_equal;
use jsr_core::{Matrix, MatrixSet};

/// Tolerance for checking that an attached parameter block reproduces the
/// matrices listed alongside it.
const BLOCK_MATCH_TOL: f64 = 1e-12;

/// The only schema version this build reads or writes.
pub const SCHEMA_VERSION: &str = "1";

/// A finite `f64` that serializes as a decimal string with 17 significant
/// digits and deserializes from either that string form or a plain JSON
/// number. 17 digits pin down every binary64 value, so a value survives
/// any number of round-trips with its bits intact (including the sign of
/// negative zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dec(pub f64);

impl Dec {
    /// The wrapped value.
    pub fn get(self) -> f64 {
        self.0
    }

    /// The canonical 17-significant-digit rendering.
    pub fn render(self) -> String {
        format!("{:.16e}", self.0)
    }
}

impl From<f64> for Dec {
    fn from(v: f64) -> Self {
        Dec(v)
    }
}

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(ser::Error::custom(format!(
                "non-finite value {} cannot be serialized",
                self.0
            )));
        }
        serializer.serialize_str(&self.render())
    }
}

struct DecVisitor;

impl Visitor<'_> for DecVisitor {
    type Value = Dec;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a finite number or a decimal string")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Dec, E> {
        if v.is_finite() {
            Ok(Dec(v))
        } else {
            Err(E::custom(format!("non-finite number {v}")))
        }
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Dec, E> {
        self.visit_f64(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Dec, E> {
        self.visit_f64(v as f64)
    }

    fn visit_str<E: de::Error>(self, s: &str) -> Result<Dec, E> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| E::custom(format!("cannot parse {s:?} as a number")))?;
        if v.is_finite() {
            Ok(Dec(v))
        } else {
            Err(E::custom(format!("non-finite value {s:?}")))
        }
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Dec, D::Error> {
        deserializer.deserialize_any(DecVisitor)
    }
}

/// One named matrix, rows outermost.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub name: String,
    pub rows: Vec<Vec<Dec>>,
}

/// The six parameters of the two-member switching model, in the fixed
/// order used everywhere: the first member is `alpha * [[a, b], [0, 1]]`
/// and the second `beta * [[1, 0], [c, d]]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KozyakinDoc {
    pub a: Dec,
    pub b: Dec,
    pub c: Dec,
    pub d: Dec,
    pub alpha: Dec,
    pub beta: Dec,
}

/// A matrix-family input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetDocument {
    pub schema_version: String,
    pub dim: usize,
    pub matrices: Vec<MatrixDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kozyakin: Option<KozyakinDoc>,
}

impl SetDocument {
    /// Builds a document from an already-validated model, naming the
    /// members `A1` and `A2`. Used when the model arrives as command-line
    /// parameters rather than as a file, so that the emitted input hash
    /// matches a file holding the same family.
    pub fn from_model(model: &KozyakinModel) -> SetDocument {
        let matrix_doc = |name: &str, m: &Matrix| MatrixDoc {
            name: name.to_string(),
            rows: m.rows().into_iter().map(|r| r.into_iter().map(Dec).collect()).collect(),
        };
        let set = model.set();
        SetDocument {
            schema_version: SCHEMA_VERSION.to_string(),
            dim: 2,
            matrices: vec![
                matrix_doc("A1", set.member(1).expect("two members")),
                matrix_doc("A2", set.member(2).expect("two members")),
            ],
            kozyakin: Some(KozyakinDoc {
                a: Dec(model.a),
                b: Dec(model.b),
                c: Dec(model.c),
                d: Dec(model.d),
                alpha: Dec(model.alpha),
                beta: Dec(model.beta),
            }),
        }
    }

    /// Compact JSON with every number in the canonical string form.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("document serialization cannot fail")
    }

    /// Hex SHA-256 of the canonical form; whitespace- and
    /// numeric-spelling-insensitive identity of the input.
    pub fn sha256(&self) -> String {
        hex_sha256(self.canonical_json().as_bytes())
    }

    /// Human-oriented rendering for files: pretty-printed canonical form.
    pub fn pretty_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("document serialization");
        text.push('\n');
        text
    }
}

/// Hex-encoded SHA-256 of raw bytes.
pub fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Parses and validates a set document, returning field-precise
/// diagnostics as plain strings on any violation.
pub fn parse_set_document(text: &str) -> Result<SetDocument, String> {
    let doc: SetDocument =
        serde_json::from_str(text).map_err(|e| format!("document parse error: {e}"))?;
    validate(&doc)?;
    Ok(doc)
}

fn validate(doc: &SetDocument) -> Result<(), String> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "unsupported schema_version {:?}, expected {:?}",
            doc.schema_version, SCHEMA_VERSION
        ));
    }
    if doc.dim == 0 {
        return Err("dim must be at least 1".to_string());
    }
    if doc.matrices.is_empty() {
        return Err("document lists no matrices".to_string());
    }
    let mut seen = BTreeSet::new();
    for matrix in &doc.matrices {
        if matrix.name.is_empty() {
            return Err("matrix names must be non-empty".to_string());
        }
        if !seen.insert(matrix.name.as_str()) {
            return Err(format!("duplicate matrix name {}", matrix.name));
        }
        if matrix.rows.len() != doc.dim {
            return Err(format!(
                "matrix {} has {} rows, expected {}",
                matrix.name,
                matrix.rows.len(),
                doc.dim
            ));
        }
        for (i, row) in matrix.rows.iter().enumerate() {
            if row.len() != doc.dim {
                return Err(format!(
                    "matrix {} row {} has {} entries, expected {}",
                    matrix.name,
                    i + 1,
                    row.len(),
                    doc.dim
                ));
            }
        }
    }
    Ok(())
}

/// Converts a validated document into the library's set type, building and
/// cross-checking the switching model when a parameter block is attached.
///
/// The block must describe exactly the two listed matrices: each entry of
/// the members it generates has to agree with the file's entries within
/// `BLOCK_MATCH_TOL`, and the parameters themselves must pass the model
/// gates. A violated gate surfaces verbatim (it names the failed
/// inequality).
pub fn to_matrix_set(doc: &SetDocument) -> Result<(MatrixSet, Option<KozyakinModel>), String> {
    let mut members = Vec::with_capacity(doc.matrices.len());
    for matrix in &doc.matrices {
        let rows: Vec<Vec<f64>> = matrix
            .rows
            .iter()
            .map(|r| r.iter().map(|d| d.0).collect())
            .collect();
        let m = Matrix::from_rows(&rows)
            .map_err(|e| format!("matrix {}: {e}", matrix.name))?;
        members.push(m);
    }
    let set = MatrixSet::new(members).map_err(|e| e.to_string())?;

    let model = match &doc.kozyakin {
        None => None,
        Some(block) => {
            if doc.dim != 2 || doc.matrices.len() != 2 {
                return Err(format!(
                    "a kozyakin block needs exactly two 2x2 matrices, found {} of dimension {}",
                    doc.matrices.len(),
                    doc.dim
                ));
            }
            let model = build_model(
                block.a.0,
                block.b.0,
                block.c.0,
                block.d.0,
                block.alpha.0,
                block.beta.0,
            )
            .map_err(|e| e.to_string())?;
            for letter in 1..=2 {
                let generated = model.set().member(letter).expect("two members");
                let listed = set.member(letter).expect("two members");
                if !approx_equal(generated, listed, BLOCK_MATCH_TOL) {
                    return Err(format!(
                        "kozyakin block disagrees with matrix {}: the parameters generate \
                         different entries",
                        doc.matrices[letter - 1].name
                    ));
                }
            }
            Some(model)
        }
    };
    Ok((set, model))
}
