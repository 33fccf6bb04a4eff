//! On-disk formats: opcode files, corpus manifests, vocabularies, HMM and
//! embedding model files, and feature CSVs.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use opseq_core::corpus::{MnemonicSequence, Vocabulary};
use opseq_core::embed::{EmbeddingMatrix, Word2VecParams};
use opseq_core::hmm::HmmModel;
use opseq_core::FeatureVector;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::format(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

/// What the tokens of an opcode file are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TokenKind {
    #[default]
    Mnemonics,
    /// Non-negative integer opcode ids, one per line.
    Ids,
}

const HEADER: &str = "# opseq tokens:";

/// Parses an opcode file: one token per line, `#` comment lines, and an
/// optional `# opseq tokens: ids|mnemonics` header.
pub fn parse_opcode_text(text: &str, path: &Path) -> Result<(TokenKind, Vec<String>)> {
    let mut kind = TokenKind::Mnemonics;
    let mut tokens = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix(HEADER) {
            if !tokens.is_empty() {
                return Err(Error::format(path, format!("line {}: header after tokens", i + 1)));
            }
            kind = match rest.trim() {
                "ids" => TokenKind::Ids,
                "mnemonics" => TokenKind::Mnemonics,
                other => {
                    return Err(Error::format(
                        path,
                        format!("line {}: unknown token kind {other:?}", i + 1),
                    ))
                }
            };
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.split_whitespace().count() != 1 {
            return Err(Error::format(path, format!("line {}: expected one token", i + 1)));
        }
        let token = match kind {
            TokenKind::Ids => line
                .parse::<usize>()
                .map_err(|_| Error::format(path, format!("line {}: {line:?} is not an opcode id", i + 1)))?
                .to_string(),
            TokenKind::Mnemonics => line.to_lowercase(),
        };
        tokens.push(token);
    }
    Ok((kind, tokens))
}

pub fn render_opcode_text(tokens: &[String], kind: TokenKind) -> String {
    let mut out = String::new();
    if kind == TokenKind::Ids {
        out.push_str(HEADER);
        out.push_str(" ids\n");
    }
    for t in tokens {
        out.push_str(t);
        out.push('\n');
    }
    out
}

pub fn read_opcode_file(path: &Path) -> Result<(TokenKind, Vec<String>)> {
    parse_opcode_text(&read_text(path)?, path)
}

pub fn write_opcode_file(path: &Path, tokens: &[String], kind: TokenKind) -> Result<()> {
    write_text(path, &render_opcode_text(tokens, kind))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub family: String,
    /// Opcode file, relative to the manifest's directory unless absolute.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub families: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Checks ids are unique and non-empty and every family is declared.
    pub fn validate(&self, path: &Path) -> Result<()> {
        let declared: BTreeSet<&str> = self.families.iter().map(String::as_str).collect();
        if declared.len() != self.families.len() {
            return Err(Error::format(path, "duplicate family label"));
        }
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            if e.id.is_empty() {
                return Err(Error::format(path, "empty sample id"));
            }
            if !ids.insert(e.id.as_str()) {
                return Err(Error::format(path, format!("duplicate sample id {:?}", e.id)));
            }
            if !declared.contains(e.family.as_str()) {
                return Err(Error::format(
                    path,
                    format!("sample {:?} has undeclared family {:?}", e.id, e.family),
                ));
            }
        }
        Ok(())
    }

    pub fn family_index(&self, family: &str) -> Option<usize> {
        self.families.iter().position(|f| f == family)
    }
}

pub fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let manifest: Manifest = read_json(path)?;
    manifest.validate(path)?;
    Ok(manifest)
}

/// Loads every sequence named by the manifest, in manifest order.
pub fn load_corpus(path: &Path) -> Result<(Manifest, Vec<MnemonicSequence>)> {
    let manifest = read_manifest(path)?;
    let base = base_dir(path);
    let sequences = manifest
        .entries
        .iter()
        .map(|e| {
            let (_, tokens) = read_opcode_file(&resolve(&base, &e.path))?;
            Ok(MnemonicSequence::new(e.id.clone(), e.family.clone(), tokens))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, sequences))
}

/// Writes one opcode file per sequence under `dir` plus `dir/manifest.json`.
pub fn write_corpus(dir: &Path, families: &[String], sequences: &[MnemonicSequence]) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(sequences.len());
    for seq in sequences {
        let rel = PathBuf::from(format!("{}.ops", seq.sample_id));
        write_opcode_file(&dir.join(&rel), &seq.mnemonics, TokenKind::Mnemonics)?;
        entries.push(ManifestEntry {
            id: seq.sample_id.clone(),
            family: seq.family.clone(),
            path: rel,
        });
    }
    let manifest = Manifest {
        families: families.to_vec(),
        entries,
    };
    let path = dir.join("manifest.json");
    manifest.validate(&path)?;
    write_json(&path, &manifest)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabFile {
    #[serde(rename = "M")]
    pub m: usize,
    pub mnemonics: Vec<String>,
    /// Percent of all corpus tokens, per retained opcode.
    pub frequencies: Vec<f64>,
}

impl From<&Vocabulary> for VocabFile {
    fn from(v: &Vocabulary) -> Self {
        Self {
            m: v.size(),
            mnemonics: v.mnemonics().to_vec(),
            frequencies: v.frequencies().to_vec(),
        }
    }
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    let file: VocabFile = read_json(path)?;
    if file.m != file.mnemonics.len() {
        return Err(Error::format(
            path,
            format!("M = {} but {} mnemonics", file.m, file.mnemonics.len()),
        ));
    }
    Vocabulary::from_ranked(file.mnemonics, file.frequencies).map_err(|e| Error::format(path, e))
}

pub fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    write_json(path, &VocabFile::from(vocab))
}

fn rows(flat: &[f64], width: usize) -> Vec<Vec<f64>> {
    flat.chunks_exact(width).map(<[f64]>::to_vec).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub sample_id: String,
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl ModelFile {
    pub fn new(sample_id: &str, family: &str, model: &HmmModel, seed: u64) -> Self {
        Self {
            sample_id: sample_id.to_string(),
            family: family.to_string(),
            n: model.n_states(),
            m: model.n_symbols(),
            a: rows(model.a(), model.n_states()),
            b: rows(model.b(), model.n_symbols()),
            pi: model.pi().to_vec(),
            log_likelihood: model.log_likelihood,
            iterations: model.iterations,
            seed,
        }
    }

    pub fn model(&self) -> opseq_core::Result<HmmModel> {
        let mut model = HmmModel::from_rows(&self.a, &self.b, &self.pi)?;
        if model.n_states() != self.n || model.n_symbols() != self.m {
            return Err(opseq_core::Error::InvalidModel(format!(
                "declared {}x{} but matrices are {}x{}",
                self.n,
                self.m,
                model.n_states(),
                model.n_symbols()
            )));
        }
        model.log_likelihood = self.log_likelihood;
        model.iterations = self.iterations;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub sample_id: String,
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "W")]
    pub w: usize,
    pub params: Word2VecParams,
    pub seed: u64,
    pub vectors: Vec<Vec<f64>>,
}

impl EmbeddingFile {
    pub fn new(sample_id: &str, family: &str, emb: &EmbeddingMatrix) -> Self {
        Self {
            sample_id: sample_id.to_string(),
            family: family.to_string(),
            n: emb.dim,
            m: emb.vocab_size,
            w: emb.window,
            params: emb.params,
            seed: emb.seed,
            vectors: rows(&emb.vectors, emb.dim),
        }
    }

    pub fn embedding(&self) -> opseq_core::Result<EmbeddingMatrix> {
        if self.vectors.len() != self.m || self.vectors.iter().any(|v| v.len() != self.n) {
            return Err(opseq_core::Error::Dimension {
                expected: self.n * self.m,
                got: self.vectors.iter().map(Vec::len).sum(),
            });
        }
        Ok(EmbeddingMatrix {
            dim: self.n,
            vocab_size: self.m,
            window: self.w,
            params: self.params,
            seed: self.seed,
            vectors: self.vectors.concat(),
        })
    }
}

/// Reads every `*.json` file in `dir`, sorted by file name.
pub fn read_json_dir<T: DeserializeOwned>(dir: &Path) -> Result<Vec<T>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "json"));
    paths.sort();
    paths.iter().map(|p| read_json(p)).collect()
}

/// One row of a feature CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub sample_id: String,
    pub family: String,
    pub values: Vec<f64>,
}

impl From<&FeatureVector> for FeatureRow {
    fn from(f: &FeatureVector) -> Self {
        Self {
            sample_id: f.sample_id.clone(),
            family: f.family.clone(),
            values: f.values.clone(),
        }
    }
}

/// Header `sample_id,family,f0..f{D-1}`. Values use the shortest
/// representation that round-trips.
pub fn render_features_csv(rows: &[FeatureRow]) -> Result<String> {
    let dim = rows.first().map_or(0, |r| r.values.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sample_id".to_string(), "family".to_string()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    let to_err = |e: csv::Error| Error::format("<features>", e);
    w.write_record(&header).map_err(to_err)?;
    for r in rows {
        if r.values.len() != dim {
            return Err(Error::format(
                "<features>",
                format!("{}: {} values, expected {dim}", r.sample_id, r.values.len()),
            ));
        }
        let mut record = vec![r.sample_id.clone(), r.family.clone()];
        record.extend(r.values.iter().map(f64::to_string));
        w.write_record(&record).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format("<features>", e))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_features_csv(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    write_text(path, &render_features_csv(rows)?)
}

pub fn read_features_csv(path: &Path) -> Result<Vec<FeatureRow>> {
    let text = read_text(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::format(path, e))?.clone();
    let dim = header.len().saturating_sub(2);
    let expected = (0..dim).map(|i| format!("f{i}"));
    if header.len() < 2
        || &header[0] != "sample_id"
        || &header[1] != "family"
        || !header
            .iter()
            .skip(2)
            .eq(expected.collect::<Vec<_>>().iter().map(String::as_str))
    {
        return Err(Error::format(path, "header must be sample_id,family,f0..f{D-1}"));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, e))?;
        let values = record
            .iter()
            .skip(2)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::format(path, format!("row {}: {v:?} is not a number", i + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow {
            sample_id: record[0].to_string(),
            family: record[1].to_string(),
            values,
        });
    }
    Ok(rows)
}
