//! Relation statistics and join metadata.
//!
//! A [`Catalog`] is loaded from a JSON workload document:
//!
//! ```json
//! {
//!   "relations": [{"name": "F", "cardinality": 1000, "columns": ["f_a"], "key_columns": []}],
//!   "edges": [{"left": "F", "right": "A", "left_cols": ["f_a"], "right_cols": ["a_id"],
//!              "pkfk": "LeftToRight", "sel_lr": 0.4, "sel_rl": 1.0}]
//! }
//! ```
//!
//! Semi-join selectivities are stored per direction. A missing selectivity
//! means "no reduction" (1.0).

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate relation name `{0}`")]
    DuplicateRelation(String),
    #[error("relation `{relation}`: key column `{column}` is not one of its columns")]
    KeyNotInColumns { relation: String, column: String },
    #[error("relation `{relation}`: duplicate column `{column}`")]
    DuplicateColumn { relation: String, column: String },
    #[error("edge {edge}: unknown relation `{name}`")]
    DanglingRelation { edge: String, name: String },
    #[error("edge {edge}: relation `{relation}` has no column `{column}`")]
    UnknownColumn {
        edge: String,
        relation: String,
        column: String,
    },
    #[error("edge {edge}: a relation cannot join itself")]
    SelfLoop { edge: String },
    #[error("edge {edge}: join column lists must be non-empty and of equal length")]
    ColumnCountMismatch { edge: String },
    #[error("edge {edge}: {field} = {value} is outside [0, 1]")]
    SelectivityOutOfRange {
        edge: String,
        field: &'static str,
        value: f64,
    },
    #[error("edge {edge}: PKFK direction requires the key side's join columns to equal its key columns")]
    PkFkKeyMismatch { edge: String },
    #[error("more than one edge between `{0}` and `{1}`")]
    DuplicateEdge(String, String),
    #[error("no join edge between `{from}` and `{to}`")]
    NoEdge { from: String, to: String },
}

/// Which side of an equi-join edge has its join columns forming a unique key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum PkFk {
    /// `left -> right`: the right side's join columns are its key.
    LeftToRight,
    /// `right -> left`: the left side's join columns are its key.
    RightToLeft,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relation {
    pub name: String,
    pub cardinality: u64,
    #[serde(default)]
    pub columns: Vec<String>,
    #[serde(default)]
    pub key_columns: Vec<String>,
}

impl Relation {
    pub fn new(name: impl Into<String>, cardinality: u64) -> Self {
        Self {
            name: name.into(),
            cardinality,
            columns: Vec::new(),
            key_columns: Vec::new(),
        }
    }

    pub fn with_columns<S: Into<String>>(mut self, columns: impl IntoIterator<Item = S>) -> Self {
        self.columns = columns.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_key<S: Into<String>>(mut self, key: impl IntoIterator<Item = S>) -> Self {
        self.key_columns = key.into_iter().map(Into::into).collect();
        self
    }

    pub fn column_index(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JoinEdge {
    pub left: String,
    pub right: String,
    pub left_cols: Vec<String>,
    pub right_cols: Vec<String>,
    #[serde(default)]
    pub pkfk: PkFk,
    /// `|left ⋉ right| / |left|`
    #[serde(rename = "sel_lr", default = "one")]
    pub selectivity_lr: f64,
    /// `|right ⋉ left| / |right|`
    #[serde(rename = "sel_rl", default = "one")]
    pub selectivity_rl: f64,
}

impl JoinEdge {
    pub fn new<S: Into<String>>(
        left: impl Into<String>,
        right: impl Into<String>,
        left_cols: impl IntoIterator<Item = S>,
        right_cols: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            left: left.into(),
            right: right.into(),
            left_cols: left_cols.into_iter().map(Into::into).collect(),
            right_cols: right_cols.into_iter().map(Into::into).collect(),
            pkfk: PkFk::None,
            selectivity_lr: 1.0,
            selectivity_rl: 1.0,
        }
    }

    pub fn pkfk(mut self, pkfk: PkFk) -> Self {
        self.pkfk = pkfk;
        self
    }

    pub fn selectivities(mut self, lr: f64, rl: f64) -> Self {
        self.selectivity_lr = lr;
        self.selectivity_rl = rl;
        self
    }

    pub fn connects(&self, a: &str, b: &str) -> bool {
        (self.left == a && self.right == b) || (self.left == b && self.right == a)
    }

    pub fn other(&self, name: &str) -> Option<&str> {
        if self.left == name {
            Some(&self.right)
        } else if self.right == name {
            Some(&self.left)
        } else {
            None
        }
    }

    /// Join columns on `name`'s side of the edge.
    pub fn columns_of(&self, name: &str) -> Option<&[String]> {
        if self.left == name {
            Some(&self.left_cols)
        } else if self.right == name {
            Some(&self.right_cols)
        } else {
            None
        }
    }

    /// The relation whose join columns form a key, if any.
    pub fn key_side(&self) -> Option<&str> {
        match self.pkfk {
            PkFk::LeftToRight => Some(&self.right),
            PkFk::RightToLeft => Some(&self.left),
            PkFk::None => None,
        }
    }

    /// True iff `from -> to` holds on this edge.
    pub fn points_to(&self, from: &str, to: &str) -> bool {
        match self.pkfk {
            PkFk::LeftToRight => self.left == from && self.right == to,
            PkFk::RightToLeft => self.right == from && self.left == to,
            PkFk::None => false,
        }
    }

    /// `|from ⋉ to| / |from|` as stored on the edge.
    pub fn selectivity_from(&self, from: &str) -> Option<f64> {
        if self.left == from {
            Some(self.selectivity_lr)
        } else if self.right == from {
            Some(self.selectivity_rl)
        } else {
            None
        }
    }

    fn label(&self) -> String {
        format!("{}-{}", self.left, self.right)
    }
}

impl fmt::Display for JoinEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.pkfk {
            PkFk::LeftToRight => "->",
            PkFk::RightToLeft => "<-",
            PkFk::None => "--",
        };
        write!(f, "{} {} {}", self.left, arrow, self.right)
    }
}

/// Validated set of relations and join edges. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub relations: Vec<Relation>,
    #[serde(default)]
    pub edges: Vec<JoinEdge>,
}

impl Catalog {
    /// Builds and validates a catalog.
    pub fn new(relations: Vec<Relation>, edges: Vec<JoinEdge>) -> Result<Self, CatalogError> {
        let catalog = Self { relations, edges };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn edge_between(&self, a: &str, b: &str) -> Option<&JoinEdge> {
        self.edges.iter().find(|e| e.connects(a, b))
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.iter().map(|r| r.name.as_str())
    }

    /// Stored directional selectivity `|from ⋉ to| / |from|`.
    pub fn semijoin_selectivity(&self, from: &str, to: &str) -> Result<f64, CatalogError> {
        self.edge_between(from, to)
            .and_then(|e| e.selectivity_from(from))
            .ok_or_else(|| CatalogError::NoEdge {
                from: from.to_string(),
                to: to.to_string(),
            })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    pub fn validate(&self) -> Result<(), CatalogError> {
        let mut names = BTreeSet::new();
        for rel in &self.relations {
            if !names.insert(rel.name.as_str()) {
                return Err(CatalogError::DuplicateRelation(rel.name.clone()));
            }
            let mut cols = BTreeSet::new();
            for c in &rel.columns {
                if !cols.insert(c.as_str()) {
                    return Err(CatalogError::DuplicateColumn {
                        relation: rel.name.clone(),
                        column: c.clone(),
                    });
                }
            }
            if let Some(k) = rel.key_columns.iter().find(|k| !cols.contains(k.as_str())) {
                return Err(CatalogError::KeyNotInColumns {
                    relation: rel.name.clone(),
                    column: k.clone(),
                });
            }
        }

        let mut pairs = BTreeSet::new();
        for edge in &self.edges {
            let label = edge.label();
            for name in [&edge.left, &edge.right] {
                if !names.contains(name.as_str()) {
                    return Err(CatalogError::DanglingRelation {
                        edge: label,
                        name: name.clone(),
                    });
                }
            }
            if edge.left == edge.right {
                return Err(CatalogError::SelfLoop { edge: label });
            }
            if edge.left_cols.is_empty() || edge.left_cols.len() != edge.right_cols.len() {
                return Err(CatalogError::ColumnCountMismatch { edge: label });
            }
            for (name, cols) in [(&edge.left, &edge.left_cols), (&edge.right, &edge.right_cols)] {
                let rel = self.relation(name).expect("checked above");
                if let Some(c) = cols.iter().find(|c| rel.column_index(c).is_none()) {
                    return Err(CatalogError::UnknownColumn {
                        edge: label,
                        relation: name.clone(),
                        column: c.clone(),
                    });
                }
            }
            for (field, value) in [("sel_lr", edge.selectivity_lr), ("sel_rl", edge.selectivity_rl)] {
                if !(0.0..=1.0).contains(&value) {
                    return Err(CatalogError::SelectivityOutOfRange {
                        edge: label,
                        field,
                        value,
                    });
                }
            }
            if let Some(key_side) = edge.key_side() {
                let rel = self.relation(key_side).expect("checked above");
                let join: BTreeSet<_> = edge.columns_of(key_side).unwrap().iter().collect();
                let key: BTreeSet<_> = rel.key_columns.iter().collect();
                if key.is_empty() || join != key {
                    return Err(CatalogError::PkFkKeyMismatch { edge: label });
                }
            }
            let pair = if edge.left < edge.right {
                (edge.left.clone(), edge.right.clone())
            } else {
                (edge.right.clone(), edge.left.clone())
            };
            if !pairs.insert(pair.clone()) {
                return Err(CatalogError::DuplicateEdge(pair.0, pair.1));
            }
        }
        Ok(())
    }
}

/// Parses and validates a workload document.
pub fn load_catalog(document: &str) -> Result<Catalog, CatalogError> {
    let catalog: Catalog = serde_json::from_str(document).map_err(|e| CatalogError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    catalog.validate()?;
    Ok(catalog)
}

pub fn load_catalog_file(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_catalog(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const STAR: &str = r#"{
      "relations": [
        {"name": "F", "cardinality": 1000, "columns": ["f_a", "f_b"], "key_columns": []},
        {"name": "A", "cardinality": 10, "columns": ["a_id"], "key_columns": ["a_id"]},
        {"name": "B", "cardinality": 10, "columns": ["b_id"], "key_columns": ["b_id"]}
      ],
      "edges": [
        {"left": "F", "right": "A", "left_cols": ["f_a"], "right_cols": ["a_id"],
         "pkfk": "LeftToRight", "sel_lr": 0.4, "sel_rl": 1.0},
        {"left": "F", "right": "B", "left_cols": ["f_b"], "right_cols": ["b_id"],
         "pkfk": "LeftToRight", "sel_lr": 0.5}
      ]
    }"#;

    #[test]
    fn loads_three_relation_star() {
        let cat = load_catalog(STAR).unwrap();
        assert_eq!(cat.relations.len(), 3);
        assert_eq!(cat.edges.len(), 2);
        assert_eq!(cat.relation("F").unwrap().cardinality, 1000);
        // missing sel_rl defaults to no reduction
        assert_eq!(cat.edges[1].selectivity_rl, 1.0);
    }

    #[test]
    fn dangling_reference_is_rejected() {
        let doc = STAR.replace(r#""right": "B""#, r#""right": "X""#);
        match load_catalog(&doc) {
            Err(CatalogError::DanglingRelation { name, .. }) => assert_eq!(name, "X"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn selectivity_out_of_range_is_rejected() {
        let doc = STAR.replace(r#""sel_lr": 0.4"#, r#""sel_lr": 1.3"#);
        match load_catalog(&doc) {
            Err(CatalogError::SelectivityOutOfRange { field, value, .. }) => {
                assert_eq!(field, "sel_lr");
                assert_eq!(value, 1.3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = load_catalog("{\n  \"relations\": [\n  {\"name\": 3}]}").unwrap_err();
        match err {
            CatalogError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = load_catalog(r#"{"relations": [], "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn pkfk_requires_key_columns() {
        let doc = STAR.replace(
            r#"{"name": "A", "cardinality": 10, "columns": ["a_id"], "key_columns": ["a_id"]}"#,
            r#"{"name": "A", "cardinality": 10, "columns": ["a_id"], "key_columns": []}"#,
        );
        assert!(matches!(
            load_catalog(&doc),
            Err(CatalogError::PkFkKeyMismatch { .. })
        ));
    }

    #[test]
    fn duplicate_edges_and_self_loops() {
        let rels = vec![
            Relation::new("A", 1).with_columns(["x"]),
            Relation::new("B", 1).with_columns(["y"]),
        ];
        let e = JoinEdge::new("A", "B", ["x"], ["y"]);
        let err = Catalog::new(rels.clone(), vec![e.clone(), JoinEdge::new("B", "A", ["y"], ["x"])]);
        assert!(matches!(err, Err(CatalogError::DuplicateEdge(..))));
        let err = Catalog::new(rels, vec![JoinEdge::new("A", "A", ["x"], ["x"])]);
        assert!(matches!(err, Err(CatalogError::SelfLoop { .. })));
    }

    #[test]
    fn semijoin_selectivity_lookup() {
        let cat = load_catalog(STAR).unwrap();
        assert_eq!(cat.semijoin_selectivity("F", "A").unwrap(), 0.4);
        assert_eq!(cat.semijoin_selectivity("A", "F").unwrap(), 1.0);
        assert!(matches!(
            cat.semijoin_selectivity("A", "B"),
            Err(CatalogError::NoEdge { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let cat = load_catalog(STAR).unwrap();
        let again = load_catalog(&cat.to_json()).unwrap();
        assert_eq!(cat, again);
    }
}
