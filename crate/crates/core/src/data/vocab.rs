use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Id reserved in every field for rare and unseen tokens.
pub const OOV_ID: u32 = 0;
pub const OOV_TOKEN: &str = "__OOV__";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldVocab {
    name: String,
    index: HashMap<String, u32>,
    // tokens[k] has id k + 1
    tokens: Vec<String>,
}

impl FieldVocab {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            index: HashMap::new(),
            tokens: Vec::new(),
        }
    }

    /// Vocabulary whose tokens get ids `1..=tokens.len()` in the given order.
    pub fn from_tokens<I, S>(name: impl Into<String>, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Self::new(name);
        for t in tokens {
            v.insert(t.into());
        }
        v
    }

    fn insert(&mut self, token: String) -> u32 {
        if let Some(&id) = self.index.get(&token) {
            return id;
        }
        let id = self.tokens.len() as u32 + 1;
        self.index.insert(token.clone(), id);
        self.tokens.push(token);
        id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of ids including the OOV slot.
    pub fn size(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn encode(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(OOV_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        match id {
            OOV_ID => Some(OOV_TOKEN),
            _ => self.tokens.get(id as usize - 1).map(String::as_str),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }
}

/// Builds one vocabulary per field from training rows.
///
/// Tokens seen fewer than `min_frequency` times fold into [`OOV_ID`]; retained
/// tokens are numbered by first appearance.
pub fn build_vocabs(field_names: &[String], rows: &[Vec<String>], min_frequency: usize) -> Result<Vec<FieldVocab>> {
    if min_frequency == 0 {
        return Err(Error::config("min_frequency", "must be at least 1"));
    }
    if rows.is_empty() {
        return Err(Error::Data(
            "cannot build vocabularies from an empty training split".into(),
        ));
    }
    let f = field_names.len();
    let mut counts: Vec<HashMap<&str, usize>> = vec![HashMap::new(); f];
    for (r, row) in rows.iter().enumerate() {
        if row.len() != f {
            return Err(Error::Data(format!("row {r} has {} fields, expected {f}", row.len())));
        }
        for (c, tok) in row.iter().enumerate() {
            *counts[c].entry(tok.as_str()).or_default() += 1;
        }
    }
    let mut vocabs: Vec<FieldVocab> = field_names.iter().map(FieldVocab::new).collect();
    for row in rows {
        for (c, tok) in row.iter().enumerate() {
            if counts[c][tok.as_str()] >= min_frequency && !vocabs[c].contains(tok) {
                vocabs[c].insert(tok.clone());
            }
        }
    }
    Ok(vocabs)
}

/// Writes `field \t token \t id` lines, OOV included.
pub fn write_vocab_sidecar(path: &Path, vocabs: &[FieldVocab]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .from_path(path)?;
    for v in vocabs {
        w.write_record([v.name(), OOV_TOKEN, "0"])?;
        for (k, tok) in v.tokens.iter().enumerate() {
            w.write_record([v.name(), tok.as_str(), &(k + 1).to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_vocab_sidecar(path: &Path) -> Result<Vec<FieldVocab>> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .from_path(path)?;
    let mut vocabs: Vec<FieldVocab> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Data(format!("malformed vocab line: {rec:?}")));
        }
        let (field, tok) = (&rec[0], &rec[1]);
        let id: u32 = rec[2]
            .parse()
            .map_err(|_| Error::Data(format!("bad vocab id `{}`", &rec[2])))?;
        let pos = match vocabs.iter().position(|v| v.name() == field) {
            Some(p) => p,
            None => {
                vocabs.push(FieldVocab::new(field));
                vocabs.len() - 1
            }
        };
        if id == OOV_ID {
            continue;
        }
        let got = vocabs[pos].insert(tok.to_string());
        if got != id {
            return Err(Error::Data(format!(
                "vocab ids for field `{field}` are not dense: expected {got}, found {id}"
            )));
        }
    }
    Ok(vocabs)
}
