use std::collections::HashSet;
use std::path::Path;

use super::ExecError;
use crate::join_graph::JoinGraph;

/// Integer-valued table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<i64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<String>, rows: Vec<Vec<i64>>) -> Result<Self, ExecError> {
        let name = name.into();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != columns.len()) {
            return Err(ExecError::RowWidth {
                table: name,
                row,
                found: r.len(),
                expected: columns.len(),
            });
        }
        Ok(Self { name, columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, column: &str) -> Result<usize, ExecError> {
        self.columns
            .iter()
            .position(|c| c == column)
            .ok_or_else(|| ExecError::MissingColumn {
                table: self.name.clone(),
                column: column.to_string(),
            })
    }

    pub fn read_csv(path: impl AsRef<Path>, name: impl Into<String>) -> Result<Self, ExecError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let csv_err = |e: csv::Error| ExecError::Csv {
            path: shown.clone(),
            message: e.to_string(),
        };
        let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
        let columns: Vec<String> = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let row = record
                .iter()
                .map(|cell| {
                    cell.trim().parse::<i64>().map_err(|_| ExecError::Csv {
                        path: shown.clone(),
                        message: format!("row {}: `{cell}` is not an integer", i + 1),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Table::new(name, columns, rows)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), ExecError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let csv_err = |e: csv::Error| ExecError::Csv {
            path: shown.clone(),
            message: e.to_string(),
        };
        let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
        writer.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            writer
                .write_record(row.iter().map(i64::to_string))
                .map_err(csv_err)?;
        }
        writer.flush().map_err(|e| ExecError::Io {
            path: shown.clone(),
            message: e.to_string(),
        })
    }
}

/// One table per relation of a graph, in the graph's relation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    tables: Vec<Table>,
}

impl Dataset {
    /// Matches tables to relations by name and checks schemas and keys.
    pub fn new(graph: &JoinGraph, tables: Vec<Table>) -> Result<Self, ExecError> {
        let mut ordered = Vec::with_capacity(graph.len());
        let mut pool: Vec<Option<Table>> = tables.into_iter().map(Some).collect();
        for rel in &graph.catalog().relations {
            let slot = pool
                .iter_mut()
                .find(|t| t.as_ref().is_some_and(|t| t.name == rel.name))
                .ok_or_else(|| ExecError::MissingTable(rel.name.clone()))?;
            let table = slot.take().expect("matched");
            for c in &rel.columns {
                table.column_index(c)?;
            }
            if !rel.key_columns.is_empty() {
                let idx = rel
                    .key_columns
                    .iter()
                    .map(|c| table.column_index(c))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut seen = HashSet::with_capacity(table.len());
                for row in &table.rows {
                    let key: Vec<i64> = idx.iter().map(|&i| row[i]).collect();
                    if !seen.insert(key) {
                        return Err(ExecError::DuplicateKey(table.name.clone()));
                    }
                }
            }
            ordered.push(table);
        }
        Ok(Self { tables: ordered })
    }

    pub(crate) fn from_ordered(tables: Vec<Table>) -> Self {
        Self { tables }
    }

    pub fn table(&self, rel: usize) -> &Table {
        &self.tables[rel]
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    /// Reads `<dir>/<relation>.csv` for every relation.
    pub fn load_dir(graph: &JoinGraph, dir: impl AsRef<Path>) -> Result<Self, ExecError> {
        let dir = dir.as_ref();
        let tables = graph
            .catalog()
            .relations
            .iter()
            .map(|r| {
                let path = dir.join(format!("{}.csv", r.name));
                if !path.exists() {
                    return Err(ExecError::MissingTable(r.name.clone()));
                }
                Table::read_csv(path, r.name.clone())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Dataset::new(graph, tables)
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<(), ExecError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| ExecError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        for t in &self.tables {
            t.write_csv(dir.join(format!("{}.csv", t.name)))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = Table::new("T", vec!["a".into(), "b".into()], vec![vec![1, -2], vec![3, 4]]).unwrap();
        let path = dir.path().join("T.csv");
        t.write_csv(&path).unwrap();
        assert_eq!(Table::read_csv(&path, "T").unwrap(), t);
    }

    #[test]
    fn row_width_checked() {
        assert!(matches!(
            Table::new("T", vec!["a".into()], vec![vec![1, 2]]),
            Err(ExecError::RowWidth { .. })
        ));
    }
}
