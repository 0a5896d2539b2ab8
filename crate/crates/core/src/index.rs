//! The feature database: corpus-normalized signatures, exhaustive top-k
//! ranking, and the versioned JSON index file.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{has_image_extension, load_image};
use crate::metrics::{BlockLayout, Direction, Metric};
use crate::signature::{extract_signature, ExtractionConfig, Signature, SignatureFlag};

pub const INDEX_FORMAT_VERSION: u64 = 1;

/// Per-dimension corpus minimum and maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    pub fn fit<'a>(dims: usize, vectors: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut min = vec![f64::INFINITY; dims];
        let mut max = vec![f64::NEG_INFINITY; dims];
        for v in vectors {
            for (i, &x) in v.iter().enumerate() {
                min[i] = min[i].min(x);
                max[i] = max[i].max(x);
            }
        }
        Normalization { min, max }
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    /// `(x - min) / (max - min)`, or 0 where the dimension is constant.
    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    /// Maps a normalized vector back to raw units. Constant dimensions come
    /// back as the corpus constant.
    pub fn invert(&self, norm: &[f64]) -> Vec<f64> {
        norm.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| if hi > lo { lo + x * (hi - lo) } else { lo })
            .collect()
    }
}

/// One stored image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub raw_fv: Vec<f64>,
    pub norm_fv: Vec<f64>,
    pub flags: Vec<SignatureFlag>,
}

/// A query in both raw and corpus-normalized coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureQuery {
    pub raw: Vec<f64>,
    pub norm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub image_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResults {
    pub metric: Metric,
    pub direction: Direction,
    pub hits: Vec<Hit>,
}

impl RankedResults {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.hits.iter().map(|h| h.image_id.as_str())
    }

    /// One `rank  score  image_id` line per hit, ranks starting at 1.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (i, h) in self.hits.iter().enumerate() {
            out.push_str(&format!("{}  {}  {}\n", i + 1, h.score, h.image_id));
        }
        out
    }
}

/// Orders hits best-first for `direction`; equal scores fall back to the id.
pub fn rank_order(direction: Direction, a: &Hit, b: &Hit) -> Ordering {
    let by_score = match direction {
        Direction::Ascending => a.score.total_cmp(&b.score),
        Direction::Descending => b.score.total_cmp(&a.score),
    };
    by_score.then_with(|| a.image_id.cmp(&b.image_id))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOptions {
    pub k: usize,
    pub metric: Metric,
    /// Drop hits scoring worse than this (above it for distances, below it
    /// for similarities).
    pub threshold: Option<f64>,
}

impl QueryOptions {
    pub fn new(k: usize, metric: Metric) -> Self {
        QueryOptions {
            k,
            metric,
            threshold: None,
        }
    }
}

/// Immutable, corpus-normalized collection of signatures.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexStore {
    config: ExtractionConfig,
    config_hash: String,
    normalization: Normalization,
    entries: Vec<IndexEntry>,
    root: Option<PathBuf>,
}

impl IndexStore {
    /// Normalizes a set of signatures extracted with `config`.
    pub fn from_signatures(
        config: ExtractionConfig,
        signatures: Vec<Signature>,
        root: Option<PathBuf>,
    ) -> Result<Self> {
        config.validate()?;
        if signatures.is_empty() {
            return Err(Error::EmptyStore);
        }
        let hash = config.config_hash();
        let layout = config.layout();
        let mut seen = BTreeSet::new();
        for s in &signatures {
            if s.config_hash != hash {
                return Err(Error::ConfigMismatch {
                    expected: hash,
                    actual: s.config_hash.clone(),
                });
            }
            layout.check(&s.raw_fv)?;
            if !seen.insert(s.image_id.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate image id {}",
                    s.image_id
                )));
            }
        }
        let normalization =
            Normalization::fit(layout.len(), signatures.iter().map(|s| s.raw_fv.as_slice()));
        let mut entries: Vec<IndexEntry> = signatures
            .into_iter()
            .map(|s| IndexEntry {
                norm_fv: normalization.apply(&s.raw_fv),
                id: s.image_id,
                raw_fv: s.raw_fv,
                flags: s.flags,
            })
            .collect();
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(IndexStore {
            config,
            config_hash: hash,
            normalization,
            entries,
            root,
        })
    }

    pub fn config(&self) -> &ExtractionConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn layout(&self) -> BlockLayout {
        self.config.layout()
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    /// Entries sorted by id.
    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Directory the corpus was indexed from, if known.
    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn get(&self, id: &str) -> Option<&IndexEntry> {
        self.entries
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn entry(&self, id: &str) -> Result<&IndexEntry> {
        self.get(id).ok_or_else(|| Error::UnknownImage(id.to_string()))
    }

    /// Path of a stored image on disk, when the corpus root is known.
    pub fn image_path(&self, id: &str) -> Result<PathBuf> {
        self.entry(id)?;
        let root = self
            .root
            .as_ref()
            .ok_or_else(|| Error::UnknownImage(format!("{id} (index has no corpus root)")))?;
        Ok(id.split('/').fold(root.clone(), |p, part| p.join(part)))
    }

    /// Normalizes a signature against this corpus.
    pub fn prepare(&self, sig: &Signature) -> Result<FeatureQuery> {
        if sig.config_hash != self.config_hash {
            return Err(Error::ConfigMismatch {
                expected: self.config_hash.clone(),
                actual: sig.config_hash.clone(),
            });
        }
        self.layout().check(&sig.raw_fv)?;
        Ok(FeatureQuery {
            norm: self.normalization.apply(&sig.raw_fv),
            raw: sig.raw_fv.clone(),
        })
    }

    pub fn prepare_image(&self, img: &Image) -> Result<FeatureQuery> {
        self.prepare(&extract_signature("query", img, &self.config)?)
    }

    /// The stored vectors of an indexed image, as a query.
    pub fn stored_query(&self, id: &str) -> Result<FeatureQuery> {
        let e = self.entry(id)?;
        Ok(FeatureQuery {
            raw: e.raw_fv.clone(),
            norm: e.norm_fv.clone(),
        })
    }

    /// Exhaustive scan: scores every entry and keeps the best `k`.
    pub fn query(&self, q: &FeatureQuery, opts: &QueryOptions) -> Result<RankedResults> {
        if self.entries.is_empty() {
            return Err(Error::EmptyStore);
        }
        if opts.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let layout = self.layout();
        layout.check(&q.raw)?;
        layout.check(&q.norm)?;
        let direction = opts.metric.direction();
        let mut hits = self
            .entries
            .iter()
            .map(|e| {
                let score = opts.metric.score(&layout, &q.raw, &q.norm, &e.raw_fv, &e.norm_fv)?;
                Ok(Hit {
                    image_id: e.id.clone(),
                    score,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(t) = opts.threshold {
            hits.retain(|h| match direction {
                Direction::Ascending => h.score <= t,
                Direction::Descending => h.score >= t,
            });
        }
        hits.sort_by(|a, b| rank_order(direction, a, b));
        hits.truncate(opts.k);
        Ok(RankedResults {
            metric: opts.metric,
            direction,
            hits,
        })
    }

    pub fn query_image(&self, img: &Image, k: usize, metric: Metric) -> Result<RankedResults> {
        self.query(&self.prepare_image(img)?, &QueryOptions::new(k, metric))
    }

    pub fn query_signature(&self, sig: &Signature, k: usize, metric: Metric) -> Result<RankedResults> {
        self.query(&self.prepare(sig)?, &QueryOptions::new(k, metric))
    }
}

/// Result of indexing a directory: the store plus files that failed.
#[derive(Debug)]
pub struct BuildReport {
    pub store: IndexStore,
    pub failures: Vec<(PathBuf, Error)>,
}

/// Image files under `dir` (recursively) with their ids: the relative path
/// with `/` separators. Sorted by id.
pub fn collect_images(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() || !has_image_extension(entry.path()) {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).expect("walkdir stays under root");
        let id = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        files.push((id, entry.path().to_path_buf()));
    }
    files.sort();
    Ok(files)
}

/// Extracts and normalizes every image under `dir`. Files that fail to load
/// are reported, not fatal; a directory with no usable image is an error.
pub fn build_index(dir: impl AsRef<Path>, cfg: &ExtractionConfig) -> Result<BuildReport> {
    let dir = dir.as_ref();
    cfg.validate()?;
    let files = collect_images(dir)?;
    let results: Vec<(PathBuf, Result<Signature>)> = files
        .into_par_iter()
        .map(|(id, path)| {
            let sig = load_image(&path).and_then(|img| extract_signature(id, &img, cfg));
            (path, sig)
        })
        .collect();
    let mut signatures = Vec::new();
    let mut failures = Vec::new();
    for (path, r) in results {
        match r {
            Ok(s) => signatures.push(s),
            Err(e) => failures.push((path, e)),
        }
    }
    if signatures.is_empty() {
        return Err(Error::EmptyCorpus(dir.to_path_buf()));
    }
    let root = std::fs::canonicalize(dir).unwrap_or_else(|_| dir.to_path_buf());
    Ok(BuildReport {
        store: IndexStore::from_signatures(cfg.clone(), signatures, Some(root))?,
        failures,
    })
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    version: u64,
    config_hash: String,
    config: ExtractionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root: Option<PathBuf>,
    normalization: Normalization,
    signatures: Vec<IndexRecord>,
}

#[derive(Serialize, Deserialize)]
struct IndexRecord {
    id: String,
    raw_fv: Vec<f64>,
    norm_fv: Vec<f64>,
    #[serde(default)]
    flags: Vec<SignatureFlag>,
}

/// Serializes the store as a JSON document. Floats are written in their
/// shortest round-trip form, so loading reproduces every value exactly.
pub fn save_index(store: &IndexStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = IndexFile {
        version: INDEX_FORMAT_VERSION,
        config_hash: store.config_hash.clone(),
        config: store.config.clone(),
        root: store.root.clone(),
        normalization: store.normalization.clone(),
        signatures: store
            .entries
            .iter()
            .map(|e| IndexRecord {
                id: e.id.clone(),
                raw_fv: e.raw_fv.clone(),
                norm_fv: e.norm_fv.clone(),
                flags: e.flags.clone(),
            })
            .collect(),
    };
    let tmp = path.with_extension("tmp");
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(&tmp)?);
        serde_json::to_writer(&mut w, &file)?;
        w.write_all(b"\n")?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<IndexStore> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_index(&bytes)
}

/// Parses the bytes of an index file.
pub fn parse_index(bytes: &[u8]) -> Result<IndexStore> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| Error::CorruptIndex(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptIndex("missing integer version".into()))?;
    if version != INDEX_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: INDEX_FORMAT_VERSION,
        });
    }
    if value.get("config_hash").and_then(|h| h.as_str()).is_none() {
        return Err(Error::MissingConfigHash);
    }
    let file: IndexFile =
        serde_json::from_value(value).map_err(|e| Error::CorruptIndex(e.to_string()))?;
    file.config
        .validate()
        .map_err(|e| Error::CorruptIndex(e.to_string()))?;
    if file.config.config_hash() != file.config_hash {
        return Err(Error::CorruptIndex(
            "config_hash does not match the stored config".into(),
        ));
    }
    let dims = file.config.layout().len();
    if file.normalization.min.len() != dims || file.normalization.max.len() != dims {
        return Err(Error::CorruptIndex(format!(
            "normalization arrays do not have {dims} entries"
        )));
    }
    if file.signatures.is_empty() {
        return Err(Error::EmptyStore);
    }
    let mut entries = Vec::with_capacity(file.signatures.len());
    for r in file.signatures {
        if r.raw_fv.len() != dims || r.norm_fv.len() != dims {
            return Err(Error::CorruptIndex(format!(
                "signature {} does not have {dims} dimensions",
                r.id
            )));
        }
        entries.push(IndexEntry {
            id: r.id,
            raw_fv: r.raw_fv,
            norm_fv: r.norm_fv,
            flags: r.flags,
        });
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    if entries.windows(2).any(|w| w[0].id == w[1].id) {
        return Err(Error::CorruptIndex("duplicate image ids".into()));
    }
    Ok(IndexStore {
        config: file.config,
        config_hash: file.config_hash,
        normalization: file.normalization,
        entries,
        root: file.root,
    })
}
