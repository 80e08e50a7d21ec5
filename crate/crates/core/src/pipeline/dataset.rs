use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Single,
    Pair,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub text: String,
    pub text2: Option<String>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub rows: Vec<Example>,
    /// Label strings; position is the label id.
    pub labels: Vec<String>,
    pub kind: TaskKind,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row ids grouped by label, each group ascending.
    pub fn ids_by_class(&self, ids: impl IntoIterator<Item = usize>) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_classes()];
        for id in ids {
            groups[self.rows[id].label].push(id);
        }
        groups.iter_mut().for_each(|g| g.sort_unstable());
        groups
    }

    /// SHA-256 over labels and rows in a length-prefixed canonical encoding.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let mut field = |s: &str| {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        field(match self.kind {
            TaskKind::Single => "single",
            TaskKind::Pair => "pair",
        });
        for l in &self.labels {
            field(l);
        }
        for row in &self.rows {
            field(&row.text);
            field(row.text2.as_deref().unwrap_or("\u{0}"));
            field(&row.label.to_string());
        }
        hex::encode(h.finalize())
    }
}

/// Column selection for a TSV file. With a header, columns are named; without
/// one, they are 0-based indices written as decimal strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TsvSchema {
    pub has_header: bool,
    pub text_column: String,
    pub text2_column: Option<String>,
    pub label_column: String,
    /// Explicit label order; empty means first-appearance order.
    pub labels: Vec<String>,
}

impl TsvSchema {
    pub fn single() -> Self {
        Self {
            has_header: true,
            text_column: "sentence".into(),
            text2_column: None,
            label_column: "label".into(),
            labels: vec![],
        }
    }

    pub fn pair() -> Self {
        Self {
            has_header: true,
            text_column: "sentence1".into(),
            text2_column: Some("sentence2".into()),
            label_column: "label".into(),
            labels: vec![],
        }
    }

    pub fn kind(&self) -> TaskKind {
        if self.text2_column.is_some() {
            TaskKind::Pair
        } else {
            TaskKind::Single
        }
    }
}

fn resolve_column(name: &str, header: Option<&[&str]>) -> Result<usize> {
    match header {
        Some(cols) => cols
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header {cols:?}"))),
        None => name
            .parse()
            .map_err(|_| Error::Schema(format!("without a header, column `{name}` must be a 0-based index"))),
    }
}

pub fn parse_tsv(content: &str, schema: &TsvSchema) -> Result<Dataset> {
    let mut lines = content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty());

    let header_line = if schema.has_header {
        match lines.next() {
            Some((_, l)) => Some(l.split('\t').collect::<Vec<_>>()),
            None => return Err(Error::Data("file is empty".into())),
        }
    } else {
        None
    };
    let header = header_line.as_deref();
    let text_col = resolve_column(&schema.text_column, header)?;
    let text2_col = schema
        .text2_column
        .as_deref()
        .map(|c| resolve_column(c, header))
        .transpose()?;
    let label_col = resolve_column(&schema.label_column, header)?;
    let needed = [Some(text_col), text2_col, Some(label_col)]
        .into_iter()
        .flatten()
        .max()
        .unwrap()
        + 1;

    let explicit = !schema.labels.is_empty();
    let mut labels: Vec<String> = schema.labels.clone();
    let mut label_ids: HashMap<String, usize> =
        labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();

    let mut rows = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < needed {
            return Err(Error::Data(format!(
                "line {line_no}: expected at least {needed} tab-separated fields, found {}",
                fields.len()
            )));
        }
        let raw_label = fields[label_col].trim();
        let label = match label_ids.get(raw_label) {
            Some(&id) => id,
            None if explicit => {
                return Err(Error::Data(format!(
                    "line {line_no}: label `{raw_label}` is not in the configured label list"
                )))
            }
            None => {
                let id = labels.len();
                labels.push(raw_label.to_string());
                label_ids.insert(raw_label.to_string(), id);
                id
            }
        };
        rows.push(Example {
            text: fields[text_col].to_string(),
            text2: text2_col.map(|c| fields[c].to_string()),
            label,
        });
    }
    if rows.is_empty() {
        return Err(Error::Data("file has no data rows".into()));
    }
    Ok(Dataset {
        rows,
        labels,
        kind: schema.kind(),
    })
}

pub fn load_tsv(path: &Path, schema: &TsvSchema) -> Result<Dataset> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tsv(&content, schema).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}
