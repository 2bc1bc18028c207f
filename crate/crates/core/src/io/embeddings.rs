//! Text embedding files: one token per line followed by its vector. A
//! leading `count dim` header line is skipped when present. The table keeps
//! rows only for requested vocabulary entries; everything else folds into
//! the unknown row, the mean of all vectors in the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::IoError;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    rows: BTreeMap<String, Vec<f64>>,
    unknown: Vec<f64>,
}

impl EmbeddingTable {
    /// Vector for a token, falling back to the unknown row.
    pub fn lookup(&self, token: &str) -> &[f64] {
        self.rows.get(token).map(Vec::as_slice).unwrap_or(&self.unknown)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.rows.contains_key(token)
    }

    pub fn known_count(&self) -> usize {
        self.rows.len()
    }

    pub fn unknown_row(&self) -> &[f64] {
        &self.unknown
    }
}

#[derive(Debug)]
pub struct EmbeddingRead {
    pub table: EmbeddingTable,
    pub warnings: Vec<String>,
}

pub fn read_embeddings(
    path: impl AsRef<Path>,
    vocabulary: &[String],
) -> Result<EmbeddingRead, IoError> {
    let data = fs::read_to_string(path)?;
    let wanted: std::collections::BTreeSet<&str> =
        vocabulary.iter().map(String::as_str).collect();
    let mut warnings = Vec::new();
    let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut dim: Option<usize> = None;
    let mut sum: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for (lineno, raw) in data.lines().enumerate() {
        let line = lineno + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut parts = raw.split_whitespace();
        let token = parts.next().expect("non-empty line").to_string();
        let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
        let values = values.map_err(|_| IoError::Format {
            line,
            message: "non-numeric vector entry".into(),
        })?;
        if dim.is_none() {
            // A two-field all-numeric first line is a count/dim header.
            if lineno == 0 && values.len() == 1 && token.parse::<usize>().is_ok() {
                continue;
            }
            if values.is_empty() {
                return Err(IoError::Format {
                    line,
                    message: "embedding row has no values".into(),
                });
            }
            dim = Some(values.len());
            sum = vec![0.0; values.len()];
        }
        let dim = dim.expect("set above");
        if values.len() != dim {
            return Err(IoError::Format {
                line,
                message: format!("dimension {} does not match {}", values.len(), dim),
            });
        }
        for (s, v) in sum.iter_mut().zip(&values) {
            *s += v;
        }
        count += 1;
        if wanted.contains(token.as_str()) {
            if rows.contains_key(&token) {
                warnings.push(format!("line {line}: duplicate entry for {token:?} ignored"));
            } else {
                rows.insert(token, values);
            }
        }
    }
    let dim = dim.ok_or(IoError::Format {
        line: 0,
        message: "embedding file has no rows".into(),
    })?;
    let unknown: Vec<f64> = if count > 0 {
        sum.iter().map(|s| s / count as f64).collect()
    } else {
        vec![0.0; dim]
    };
    Ok(EmbeddingRead {
        table: EmbeddingTable { dim, rows, unknown },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn vocab(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn reads_three_rows_of_dim_four() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(
            &path,
            "alpha 1 2 3 4\nbeta 0.5 0.5 0.5 0.5\ngamma -1 0 1 0\n",
        )
        .unwrap();
        let read = read_embeddings(&path, &vocab(&["alpha", "beta", "gamma"])).unwrap();
        assert_eq!(read.table.dim, 4);
        assert_eq!(read.table.known_count(), 3);
        assert_eq!(read.table.lookup("alpha"), &[1.0, 2.0, 3.0, 4.0]);
        assert!(read.warnings.is_empty());
    }

    #[test]
    fn missing_token_gets_unknown_row() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(&path, "alpha 2 4\nbeta 0 0\n").unwrap();
        let read = read_embeddings(&path, &vocab(&["alpha", "missing"])).unwrap();
        assert!(!read.table.contains("missing"));
        assert_eq!(read.table.lookup("missing"), &[1.0, 2.0]);
        assert_eq!(read.table.lookup("missing"), read.table.unknown_row());
    }

    #[test]
    fn duplicate_first_occurrence_wins_with_warning() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(&path, "alpha 1 1\nalpha 9 9\n").unwrap();
        let read = read_embeddings(&path, &vocab(&["alpha"])).unwrap();
        assert_eq!(read.table.lookup("alpha"), &[1.0, 1.0]);
        assert_eq!(read.warnings.len(), 1);
    }

    #[test]
    fn inconsistent_dimension_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(&path, "alpha 1 2 3\nbeta 1 2\n").unwrap();
        match read_embeddings(&path, &vocab(&["alpha"])) {
            Err(IoError::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn header_line_is_skipped() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("emb.txt");
        std::fs::write(&path, "2 3\nalpha 1 2 3\nbeta 4 5 6\n").unwrap();
        let read = read_embeddings(&path, &vocab(&["alpha", "beta"])).unwrap();
        assert_eq!(read.table.dim, 3);
        assert_eq!(read.table.known_count(), 2);
    }
}
