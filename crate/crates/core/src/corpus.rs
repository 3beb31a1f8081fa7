//! Idea collections: ingestion, text preprocessing and TF-IDF vectors.
//!
//! The text pipeline is fixed so that two runs over the same input produce
//! bit-identical vectors:
//!
//! 1. `title + " " + text`, lowercased;
//! 2. split on every non-alphanumeric character, tokens shorter than two
//!    characters discarded;
//! 3. stop-words removed (the frozen list in `data/stopwords.txt`);
//! 4. Porter stemming;
//! 5. terms whose document frequency is below 1% or above 90% of the corpus
//!    are dropped;
//! 6. `tfidf = count * (ln((1 + N) / (1 + df)) + 1)`, rows L2-normalized.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frozen English stop-word list, one word per line.
pub const STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Documents containing a term in fewer than this fraction of items drop it.
pub const MIN_DOC_FREQ: f64 = 0.01;
/// Documents containing a term in more than this fraction of items drop it.
pub const MAX_DOC_FREQ: f64 = 0.90;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub text: String,
    /// Raw quality score (e.g. applause count), finite and non-negative.
    pub quality: f64,
}

/// Sparse TF-IDF row: `(term index, weight)` pairs sorted by term index.
pub type SparseRow = Vec<(usize, f64)>;

/// An ordered collection of items. Item order is the canonical index used
/// by every matrix downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    items: Vec<Item>,
    #[serde(default)]
    vocabulary: Vec<String>,
    #[serde(default)]
    tfidf: Option<Vec<SparseRow>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// Guess from the file extension (`.csv` → CSV, anything else → JSONL).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

impl Corpus {
    /// Build an unvectorized corpus, checking size, id uniqueness and qualities.
    pub fn new(items: Vec<Item>) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::invalid("corpus must contain at least 2 items"));
        }
        let mut seen = HashSet::with_capacity(items.len());
        for item in &items {
            if !seen.insert(item.id.as_str()) {
                return Err(Error::DuplicateId(item.id.clone()));
            }
            if !item.quality.is_finite() || item.quality < 0.0 {
                return Err(Error::invalid(format!(
                    "item `{}`: quality must be finite and non-negative, got {}",
                    item.id, item.quality
                )));
            }
        }
        Ok(Corpus {
            items,
            vocabulary: Vec::new(),
            tfidf: None,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn ids(&self) -> Vec<String> {
        self.items.iter().map(|i| i.id.clone()).collect()
    }

    pub fn qualities(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.quality).collect()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn is_vectorized(&self) -> bool {
        self.tfidf.is_some()
    }

    /// Sparse TF-IDF rows, present after [`Corpus::vectorize`].
    pub fn tfidf(&self) -> Option<&[SparseRow]> {
        self.tfidf.as_deref()
    }

    /// Dense copy of the TF-IDF matrix (N × |vocabulary|).
    pub fn tfidf_dense(&self) -> Option<Vec<Vec<f64>>> {
        let rows = self.tfidf.as_ref()?;
        Some(
            rows.iter()
                .map(|row| {
                    let mut dense = vec![0.0; self.vocabulary.len()];
                    for &(t, w) in row {
                        dense[t] = w;
                    }
                    dense
                })
                .collect(),
        )
    }

    /// Reorder items (and TF-IDF rows) so that position `p` holds the old item `order[p]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Corpus> {
        crate::ranking::Ranking::new(order.to_vec(), self.len())?;
        Ok(Corpus {
            items: order.iter().map(|&i| self.items[i].clone()).collect(),
            vocabulary: self.vocabulary.clone(),
            tfidf: self
                .tfidf
                .as_ref()
                .map(|rows| order.iter().map(|&i| rows[i].clone()).collect()),
        })
    }

    /// Run the text pipeline and attach TF-IDF vectors.
    pub fn vectorize(&self) -> Result<Corpus> {
        let n = self.items.len();
        let docs: Vec<Vec<String>> = self
            .items
            .iter()
            .map(|item| preprocess(&format!("{} {}", item.title, item.text)))
            .collect();
        if docs.iter().all(Vec::is_empty) {
            return Err(Error::invalid(
                "all items have empty text after preprocessing; nothing to vectorize",
            ));
        }

        let counts: Vec<BTreeMap<&str, usize>> = docs
            .iter()
            .map(|doc| {
                let mut c = BTreeMap::new();
                for term in doc {
                    *c.entry(term.as_str()).or_insert(0) += 1;
                }
                c
            })
            .collect();

        let mut doc_freq: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &counts {
            for term in c.keys() {
                *doc_freq.entry(term).or_insert(0) += 1;
            }
        }

        let nf = n as f64;
        let kept: Vec<(&str, usize)> = doc_freq
            .into_iter()
            .filter(|&(_, df)| {
                let frac = df as f64 / nf;
                (MIN_DOC_FREQ..=MAX_DOC_FREQ).contains(&frac)
            })
            .collect();
        if kept.is_empty() {
            return Err(Error::invalid(format!(
                "vocabulary is empty after document-frequency filtering \
                 (kept terms must appear in {:.0}%..{:.0}% of items); \
                 relax the thresholds or add more varied text",
                MIN_DOC_FREQ * 100.0,
                MAX_DOC_FREQ * 100.0
            )));
        }

        let index: BTreeMap<&str, usize> = kept
            .iter()
            .enumerate()
            .map(|(i, &(term, _))| (term, i))
            .collect();
        let idf: Vec<f64> = kept
            .iter()
            .map(|&(_, df)| ((1.0 + nf) / (1.0 + df as f64)).ln() + 1.0)
            .collect();

        let tfidf = counts
            .iter()
            .map(|c| {
                let mut row: SparseRow = c
                    .iter()
                    .filter_map(|(term, &count)| {
                        index.get(term).map(|&t| (t, count as f64 * idf[t]))
                    })
                    .collect();
                let norm = row.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for entry in &mut row {
                        entry.1 /= norm;
                    }
                }
                row
            })
            .collect();

        Ok(Corpus {
            items: self.items.clone(),
            vocabulary: kept.iter().map(|&(t, _)| t.to_string()).collect(),
            tfidf: Some(tfidf),
        })
    }

    /// Save as JSON (the CLI's `corpus.bin`).
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Load a corpus saved with [`Corpus::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let corpus: Corpus = serde_json::from_str(&raw)
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        // re-check invariants on the deserialized items
        Corpus::new(corpus.items.clone())?;
        Ok(corpus)
    }
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

/// Lowercase, tokenize, drop stop-words and stem.
pub fn preprocess(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let stops = stopwords();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|tok| tok.chars().count() >= 2)
        .filter(|tok| !stops.contains(tok))
        .map(porter_stemmer::stem)
        .collect()
}

/// Read a JSONL or CSV idea file.
pub fn ingest(path: &Path, format: InputFormat) -> Result<Corpus> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ingest_str(&raw, format, &path.display().to_string())
}

/// One JSON object per line, in item order.
pub fn write_jsonl<W: std::io::Write>(items: &[Item], mut writer: W) -> Result<()> {
    for item in items {
        let line =
            serde_json::to_string(item).map_err(|e| Error::format("jsonl", e.to_string()))?;
        writeln!(writer, "{line}").map_err(|e| Error::io("jsonl", e))?;
    }
    Ok(())
}

/// Parse idea records from an in-memory string. `origin` names the source in errors.
pub fn ingest_str(raw: &str, format: InputFormat, origin: &str) -> Result<Corpus> {
    let items = match format {
        InputFormat::Jsonl => parse_jsonl(raw, origin)?,
        InputFormat::Csv => parse_csv(raw, origin)?,
    };
    Corpus::new(items)
}

fn parse_jsonl(raw: &str, origin: &str) -> Result<Vec<Item>> {
    let mut items = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let record = format!("at line {}", lineno + 1);
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::format(origin, format!("line {}: {e}", lineno + 1)))?;
        let obj = value.as_object().ok_or_else(|| {
            Error::format(origin, format!("line {}: expected an object", lineno + 1))
        })?;
        let id = match obj.get("id") {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(serde_json::Value::Number(n)) => n.to_string(),
            _ => {
                return Err(Error::format(
                    origin,
                    format!("record {record}: missing id"),
                ))
            }
        };
        let quality = match obj.get("quality") {
            Some(serde_json::Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
            Some(serde_json::Value::Null) | None => {
                return Err(Error::MissingQuality(format!("`{id}` ({record})")))
            }
            Some(other) => {
                return Err(Error::format(
                    origin,
                    format!("record `{id}`: quality must be a number, got {other}"),
                ))
            }
        };
        let text_field = |key: &str| {
            obj.get(key)
                .and_then(|v| v.as_str())
                .unwrap_or_default()
                .to_string()
        };
        items.push(Item {
            title: text_field("title"),
            text: text_field("text"),
            id,
            quality,
        });
    }
    Ok(items)
}

fn parse_csv(raw: &str, origin: &str) -> Result<Vec<Item>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(raw.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::format(origin, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = col("id").ok_or_else(|| Error::format(origin, "missing `id` column"))?;
    let quality_col = col("quality");
    let title_col = col("title");
    let text_col = col("text");

    let mut items = Vec::new();
    for (rowno, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(origin, e.to_string()))?;
        let id = record.get(id_col).unwrap_or_default().to_string();
        let quality_raw = quality_col
            .and_then(|c| record.get(c))
            .map(str::trim)
            .unwrap_or_default();
        if quality_raw.is_empty() {
            return Err(Error::MissingQuality(format!("`{id}` (row {})", rowno + 1)));
        }
        let quality: f64 = quality_raw.parse().map_err(|_| {
            Error::format(
                origin,
                format!("record `{id}`: quality `{quality_raw}` is not a number"),
            )
        })?;
        let get = |c: Option<usize>| {
            c.and_then(|c| record.get(c))
                .unwrap_or_default()
                .to_string()
        };
        items.push(Item {
            title: get(title_col),
            text: get(text_col),
            id,
            quality,
        });
    }
    Ok(items)
}
