//! Rating-file ingestion, activity filtering, and seeded train/test/CV
//! splitting.
//!
//! External user/item identifiers are remapped to dense indices in
//! first-appearance order; all downstream code works on dense indices.
//! Splits and folds are views (index lists) into an immutable dataset, so
//! train and test always share one index space.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// One observed rating, on dense indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingTriple {
    pub user: u32,
    pub item: u32,
    pub rating: f64,
}

/// Input layout of a delimiter-separated rating file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatTag {
    /// Detect the delimiter from the first data line (`::`, tab, comma).
    Auto,
    Csv,
    Tsv,
    /// MovieLens-1M style `user::item::rating::timestamp`.
    DoubleColon,
}

impl std::str::FromStr for FormatTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(FormatTag::Auto),
            "csv" => Ok(FormatTag::Csv),
            "tsv" => Ok(FormatTag::Tsv),
            "double-colon" | "colons" => Ok(FormatTag::DoubleColon),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub format: FormatTag,
    /// Rating scale; inferred as the observed min/max when absent.
    pub scale: Option<(f64, f64)>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            format: FormatTag::Auto,
            scale: None,
        }
    }
}

/// Indexed sparse store of rating triples plus id maps and scale metadata.
#[derive(Debug, Clone)]
pub struct RatingDataset {
    triples: Vec<RatingTriple>,
    n_users: usize,
    n_items: usize,
    scale_min: f64,
    scale_max: f64,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    user_index: HashMap<String, u32>,
    item_index: HashMap<String, u32>,
}

impl RatingDataset {
    /// Build a dataset from triples already on dense indices. Indices must
    /// cover `[0, n_users)` and `[0, n_items)` with no duplicate pairs.
    /// External ids are synthesized as the decimal indices.
    pub fn from_dense_triples(
        n_users: usize,
        n_items: usize,
        triples: Vec<RatingTriple>,
        scale: (f64, f64),
    ) -> Result<Self> {
        if triples.is_empty() {
            return Err(Error::EmptyDataset("no triples".into()));
        }
        let mut user_seen = vec![false; n_users];
        let mut item_seen = vec![false; n_items];
        let mut pairs = HashSet::with_capacity(triples.len());
        for t in &triples {
            if t.user as usize >= n_users {
                return Err(Error::Index {
                    what: "user",
                    index: t.user as usize,
                    len: n_users,
                });
            }
            if t.item as usize >= n_items {
                return Err(Error::Index {
                    what: "item",
                    index: t.item as usize,
                    len: n_items,
                });
            }
            if !t.rating.is_finite() || t.rating < scale.0 || t.rating > scale.1 {
                return Err(Error::Config(format!(
                    "rating {} outside scale [{}, {}]",
                    t.rating, scale.0, scale.1
                )));
            }
            if !pairs.insert((t.user, t.item)) {
                return Err(Error::DuplicateRating {
                    user: t.user.to_string(),
                    item: t.item.to_string(),
                    line: 0,
                });
            }
            user_seen[t.user as usize] = true;
            item_seen[t.item as usize] = true;
        }
        if user_seen.iter().any(|s| !s) || item_seen.iter().any(|s| !s) {
            return Err(Error::Config(
                "dense index space has unused users or items".into(),
            ));
        }
        let user_ids: Vec<String> = (0..n_users).map(|u| u.to_string()).collect();
        let item_ids: Vec<String> = (0..n_items).map(|i| i.to_string()).collect();
        let user_index = user_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        let item_index = item_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Ok(RatingDataset {
            triples,
            n_users,
            n_items,
            scale_min: scale.0,
            scale_max: scale.1,
            user_ids,
            item_ids,
            user_index,
            item_index,
        })
    }

    pub fn triples(&self) -> &[RatingTriple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn scale(&self) -> (f64, f64) {
        (self.scale_min, self.scale_max)
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn user_dense_index(&self, external: &str) -> Option<u32> {
        self.user_index.get(external).copied()
    }

    pub fn item_dense_index(&self, external: &str) -> Option<u32> {
        self.item_index.get(external).copied()
    }

    /// View over every triple.
    pub fn view(&self) -> DatasetView<'_> {
        DatasetView {
            source: self,
            indices: (0..self.triples.len() as u32).collect(),
        }
    }

    /// SHA-256 of the canonical triple listing (`user<TAB>item<TAB>rating`
    /// per line, external ids, dense order). Stable provenance fingerprint.
    pub fn content_sha256(&self) -> String {
        let mut text = String::new();
        for t in &self.triples {
            let _ = writeln!(
                text,
                "{}\t{}\t{}",
                self.user_ids[t.user as usize], self.item_ids[t.item as usize], t.rating
            );
        }
        hex_digest(text.as_bytes())
    }

    /// Iteratively drop users with fewer than `min_user_ratings` ratings and
    /// items with fewer than `min_item_ratings`, until a fixed point. Dense
    /// indices are reassigned in first-appearance order over the survivors.
    pub fn filter_activity(
        &self,
        min_user_ratings: usize,
        min_item_ratings: usize,
    ) -> Result<RatingDataset> {
        let mut keep: Vec<bool> = vec![true; self.triples.len()];
        loop {
            let mut user_counts = vec![0usize; self.n_users];
            let mut item_counts = vec![0usize; self.n_items];
            for (t, &k) in self.triples.iter().zip(&keep) {
                if k {
                    user_counts[t.user as usize] += 1;
                    item_counts[t.item as usize] += 1;
                }
            }
            let mut changed = false;
            for (t, k) in self.triples.iter().zip(keep.iter_mut()) {
                if *k
                    && (user_counts[t.user as usize] < min_user_ratings
                        || item_counts[t.item as usize] < min_item_ratings)
                {
                    *k = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut user_remap: HashMap<u32, u32> = HashMap::new();
        let mut item_remap: HashMap<u32, u32> = HashMap::new();
        let mut user_ids = Vec::new();
        let mut item_ids = Vec::new();
        let mut triples = Vec::new();
        for (t, &k) in self.triples.iter().zip(&keep) {
            if !k {
                continue;
            }
            let u = *user_remap.entry(t.user).or_insert_with(|| {
                user_ids.push(self.user_ids[t.user as usize].clone());
                (user_ids.len() - 1) as u32
            });
            let i = *item_remap.entry(t.item).or_insert_with(|| {
                item_ids.push(self.item_ids[t.item as usize].clone());
                (item_ids.len() - 1) as u32
            });
            triples.push(RatingTriple {
                user: u,
                item: i,
                rating: t.rating,
            });
        }
        if triples.is_empty() {
            return Err(Error::EmptyDataset(format!(
                "activity filter (min_user={min_user_ratings}, min_item={min_item_ratings}) removed everything"
            )));
        }
        let user_index = user_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        let item_index = item_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Ok(RatingDataset {
            triples,
            n_users: user_ids.len(),
            n_items: item_ids.len(),
            scale_min: self.scale_min,
            scale_max: self.scale_max,
            user_ids,
            item_ids,
            user_index,
            item_index,
        })
    }

    /// Seeded 80/20-style split: indices are shuffled by the documented
    /// generator (see [`crate::rng`]) and the first
    /// `floor(train_fraction * N)` go to the train view.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<SplitPlan<'_>> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1), got {train_fraction}"
            )));
        }
        let mut indices: Vec<u32> = (0..self.triples.len() as u32).collect();
        SplitMix64::new(seed).shuffle(&mut indices);
        let n_train = (train_fraction * self.triples.len() as f64).floor() as usize;
        let test = indices.split_off(n_train);
        Ok(SplitPlan {
            train: DatasetView {
                source: self,
                indices,
            },
            test: DatasetView {
                source: self,
                indices: test,
            },
            seed,
            train_fraction,
        })
    }
}

/// Immutable subset of a dataset's triples.
#[derive(Debug, Clone)]
pub struct DatasetView<'a> {
    source: &'a RatingDataset,
    indices: Vec<u32>,
}

impl<'a> DatasetView<'a> {
    pub fn source(&self) -> &'a RatingDataset {
        self.source
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a RatingTriple> + '_ {
        self.indices
            .iter()
            .map(move |&i| &self.source.triples()[i as usize])
    }

    /// Triple positions (into the source) backing this view.
    pub fn triple_indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn mean_rating(&self) -> f64 {
        if self.indices.is_empty() {
            return 0.0;
        }
        self.iter().map(|t| t.rating).sum::<f64>() / self.indices.len() as f64
    }

    /// Boolean masks of users/items with at least one triple in this view.
    pub fn coverage(&self) -> (Vec<bool>, Vec<bool>) {
        let mut users = vec![false; self.source.n_users()];
        let mut items = vec![false; self.source.n_items()];
        for t in self.iter() {
            users[t.user as usize] = true;
            items[t.item as usize] = true;
        }
        (users, items)
    }

    /// Seeded shuffle + contiguous chunking into `n_folds`
    /// (train, validation) pairs whose validation blocks partition this view.
    /// Block sizes differ by at most one; the remainder blocks come first.
    pub fn make_folds(&self, n_folds: usize, seed: u64) -> Result<CvPlan<'a>> {
        if n_folds < 2 {
            return Err(Error::Config(format!(
                "n_folds must be at least 2, got {n_folds}"
            )));
        }
        if self.indices.len() < n_folds {
            return Err(Error::Config(format!(
                "cannot make {n_folds} folds from {} triples",
                self.indices.len()
            )));
        }
        let mut shuffled = self.indices.clone();
        SplitMix64::new(seed).shuffle(&mut shuffled);
        let base = shuffled.len() / n_folds;
        let remainder = shuffled.len() % n_folds;
        let mut folds = Vec::with_capacity(n_folds);
        let mut start = 0usize;
        for b in 0..n_folds {
            let size = base + usize::from(b < remainder);
            let validation: Vec<u32> = shuffled[start..start + size].to_vec();
            let train: Vec<u32> = shuffled[..start]
                .iter()
                .chain(&shuffled[start + size..])
                .copied()
                .collect();
            folds.push((
                DatasetView {
                    source: self.source,
                    indices: train,
                },
                DatasetView {
                    source: self.source,
                    indices: validation,
                },
            ));
            start += size;
        }
        Ok(CvPlan {
            folds,
            n_folds,
            seed,
        })
    }
}

/// Disjoint train/test views over one dataset.
#[derive(Debug)]
pub struct SplitPlan<'a> {
    pub train: DatasetView<'a>,
    pub test: DatasetView<'a>,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Cross-validation folds over a training view.
#[derive(Debug)]
pub struct CvPlan<'a> {
    pub folds: Vec<(DatasetView<'a>, DatasetView<'a>)>,
    pub n_folds: usize,
    pub seed: u64,
}

/// Load a delimiter-separated rating file. Records are
/// `(user, item, rating[, timestamp])`; a header line is skipped when its
/// rating field does not parse; `.gz` input is decompressed transparently.
pub fn load_ratings(path: &Path, options: &LoadOptions) -> Result<RatingDataset> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = if path.extension().is_some_and(|e| e == "gz") {
        let mut out = String::new();
        flate2::read::GzDecoder::new(&raw[..])
            .read_to_string(&mut out)
            .map_err(|e| Error::io(path, e))?;
        out
    } else {
        String::from_utf8(raw).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("not valid UTF-8: {e}"),
        })?
    };
    parse_ratings(&text, path, options)
}

fn detect_delimiter(line: &str) -> &'static str {
    if line.contains("::") {
        "::"
    } else if line.contains('\t') {
        "\t"
    } else {
        ","
    }
}

fn parse_ratings(text: &str, path: &Path, options: &LoadOptions) -> Result<RatingDataset> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut delimiter: Option<&str> = match options.format {
        FormatTag::Auto => None,
        FormatTag::Csv => Some(","),
        FormatTag::Tsv => Some("\t"),
        FormatTag::DoubleColon => Some("::"),
    };

    let mut user_ids: Vec<String> = Vec::new();
    let mut item_ids: Vec<String> = Vec::new();
    let mut user_index: HashMap<String, u32> = HashMap::new();
    let mut item_index: HashMap<String, u32> = HashMap::new();
    let mut triples: Vec<RatingTriple> = Vec::new();
    let mut pairs: HashSet<(u32, u32)> = HashSet::new();
    let mut observed_min = f64::INFINITY;
    let mut observed_max = f64::NEG_INFINITY;
    let mut first_record = true;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let delim = *delimiter.get_or_insert_with(|| detect_delimiter(line));
        let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
        if fields.len() < 3 || fields.len() > 4 {
            if first_record {
                // Could still be a header with an unexpected shape; skip it.
                first_record = false;
                continue;
            }
            return Err(parse_err(
                lineno,
                format!("expected 3 or 4 fields, found {}", fields.len()),
            ));
        }
        let rating: f64 = match fields[2].parse() {
            Ok(r) => r,
            Err(_) if first_record => {
                // Header line: the rating column is not numeric.
                first_record = false;
                continue;
            }
            Err(_) => {
                return Err(parse_err(
                    lineno,
                    format!("rating field {:?} is not a number", fields[2]),
                ));
            }
        };
        first_record = false;
        if !rating.is_finite() {
            return Err(parse_err(lineno, format!("rating {rating} is not finite")));
        }
        if let Some((lo, hi)) = options.scale {
            if rating < lo || rating > hi {
                return Err(parse_err(
                    lineno,
                    format!("rating {rating} outside configured scale [{lo}, {hi}]"),
                ));
            }
        }
        let next_user = user_ids.len() as u32;
        let user = *user_index.entry(fields[0].to_string()).or_insert_with(|| {
            user_ids.push(fields[0].to_string());
            next_user
        });
        let next_item = item_ids.len() as u32;
        let item = *item_index.entry(fields[1].to_string()).or_insert_with(|| {
            item_ids.push(fields[1].to_string());
            next_item
        });
        if !pairs.insert((user, item)) {
            return Err(Error::DuplicateRating {
                user: fields[0].to_string(),
                item: fields[1].to_string(),
                line: lineno,
            });
        }
        observed_min = observed_min.min(rating);
        observed_max = observed_max.max(rating);
        triples.push(RatingTriple { user, item, rating });
    }

    if triples.is_empty() {
        return Err(Error::EmptyDataset(format!("{}: no records", path.display())));
    }
    let (scale_min, scale_max) = options.scale.unwrap_or((observed_min, observed_max));
    Ok(RatingDataset {
        n_users: user_ids.len(),
        n_items: item_ids.len(),
        triples,
        scale_min,
        scale_max,
        user_ids,
        item_ids,
        user_index,
        item_index,
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// SHA-256 of a file's raw bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex_digest(&bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub triples: usize,
    pub users: usize,
    pub items: usize,
}

impl DatasetCounts {
    pub fn of(ds: &RatingDataset) -> Self {
        DatasetCounts {
            triples: ds.len(),
            users: ds.n_users(),
            items: ds.n_items(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub seed: u64,
    pub train_fraction: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Provenance record written next to any prepared split: counts before and
/// after filtering, scale, thresholds, and content hashes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub source_path: String,
    pub source_sha256: String,
    pub format: FormatTag,
    pub min_user_ratings: usize,
    pub min_item_ratings: usize,
    pub raw_counts: DatasetCounts,
    pub filtered_counts: DatasetCounts,
    pub scale_min: f64,
    pub scale_max: f64,
    pub content_sha256: String,
    pub split: Option<SplitInfo>,
}

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

impl DatasetManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse(text: &str) -> Result<RatingDataset> {
        parse_ratings(text, Path::new("test-input"), &LoadOptions::default())
    }

    #[test]
    fn single_record() {
        let ds = parse("A,X,3.0\n").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.n_users(), 1);
        assert_eq!(ds.n_items(), 1);
        assert_eq!(ds.scale(), (3.0, 3.0));
    }

    #[test]
    fn duplicate_pair_is_rejected() {
        let err = parse("A,X,3.0\nA,X,3.0\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateRating { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(parse(""), Err(Error::EmptyDataset(_))));
        assert!(matches!(parse("\n\n"), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn malformed_record_carries_line_number() {
        let err = parse("A,X,3.0\nB,Y,not-a-number\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn header_and_timestamp_are_skipped() {
        let ds = parse("userId,movieId,rating,timestamp\n1,31,2.5,1260759144\n1,1029,3.0,1260759179\n")
            .unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.n_users(), 1);
        assert_eq!(ds.n_items(), 2);
        assert_eq!(ds.user_ids()[0], "1");
    }

    #[test]
    fn delimiter_variants() {
        let csv = parse("A,X,3.0\nB,X,4.0\n").unwrap();
        let tsv = parse("A\tX\t3.0\nB\tX\t4.0\n").unwrap();
        let mlm = parse("A::X::3.0::978300760\nB::X::4.0::978300760\n").unwrap();
        for ds in [&csv, &tsv, &mlm] {
            assert_eq!(ds.len(), 2);
            assert_eq!(ds.n_users(), 2);
            assert_eq!(ds.n_items(), 1);
        }
    }

    #[test]
    fn configured_scale_is_enforced() {
        let opts = LoadOptions {
            format: FormatTag::Auto,
            scale: Some((1.0, 5.0)),
        };
        let err = parse_ratings("A,X,9.0\n", Path::new("t"), &opts).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let ds = parse_ratings("A,X,5.0\n", Path::new("t"), &opts).unwrap();
        assert_eq!(ds.scale(), (1.0, 5.0));
    }

    #[test]
    fn gz_input_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ratings.csv.gz");
        let mut enc =
            flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(b"A,X,3.0\nB,Y,4.0\n").unwrap();
        std::fs::write(&path, enc.finish().unwrap()).unwrap();
        let ds = load_ratings(&path, &LoadOptions::default()).unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn filter_with_zero_thresholds_is_identity() {
        let ds = parse("A,X,3.0\nA,Y,4.0\nB,X,2.0\n").unwrap();
        let filtered = ds.filter_activity(0, 0).unwrap();
        assert_eq!(filtered.triples(), ds.triples());
        assert_eq!(filtered.user_ids(), ds.user_ids());
        assert_eq!(filtered.item_ids(), ds.item_ids());
    }

    /// Brute-force fixed-point reference: repeatedly drop offending external
    /// triples until stable, independent of the dense-index machinery.
    fn reference_filter(
        triples: &[(&str, &str, f64)],
        min_user: usize,
        min_item: usize,
    ) -> Vec<(String, String, f64)> {
        let mut kept: Vec<(String, String, f64)> = triples
            .iter()
            .map(|(u, i, r)| (u.to_string(), i.to_string(), *r))
            .collect();
        loop {
            let mut ucount: HashMap<&str, usize> = HashMap::new();
            let mut icount: HashMap<&str, usize> = HashMap::new();
            for (u, i, _) in &kept {
                *ucount.entry(u).or_default() += 1;
                *icount.entry(i).or_default() += 1;
            }
            let next: Vec<_> = kept
                .iter()
                .filter(|(u, i, _)| ucount[u.as_str()] >= min_user && icount[i.as_str()] >= min_item)
                .cloned()
                .collect();
            if next.len() == kept.len() {
                return kept;
            }
            kept = next;
        }
    }

    #[test]
    fn filter_matches_brute_force_fixed_point() {
        // Three users with 5/25/30 ratings over shared items. Dropping the
        // light user starves some items below the item threshold, which in
        // turn starves nobody further (fixed point after two passes).
        let mut rows: Vec<(String, String, f64)> = Vec::new();
        for k in 0..5 {
            rows.push(("u0".into(), format!("solo{k}"), 3.0));
        }
        for k in 0..25 {
            rows.push(("u1".into(), format!("shared{k}"), 4.0));
        }
        for k in 0..25 {
            rows.push(("u2".into(), format!("shared{k}"), 2.0));
        }
        for k in 0..5 {
            rows.push(("u2".into(), format!("solo{k}"), 5.0));
        }
        let text: String = rows
            .iter()
            .map(|(u, i, r)| format!("{u},{i},{r}\n"))
            .collect();
        let ds = parse(&text).unwrap();

        let refs: Vec<(&str, &str, f64)> = rows
            .iter()
            .map(|(u, i, r)| (u.as_str(), i.as_str(), *r))
            .collect();
        for (min_user, min_item) in [(20, 2), (20, 0), (6, 3), (26, 2)] {
            let expected = reference_filter(&refs, min_user, min_item);
            match ds.filter_activity(min_user, min_item) {
                Ok(filtered) => {
                    let got: Vec<(String, String, f64)> = filtered
                        .triples()
                        .iter()
                        .map(|t| {
                            (
                                filtered.user_ids()[t.user as usize].clone(),
                                filtered.item_ids()[t.item as usize].clone(),
                                t.rating,
                            )
                        })
                        .collect();
                    assert_eq!(got, expected, "thresholds ({min_user},{min_item})");
                }
                Err(Error::EmptyDataset(_)) => {
                    assert!(expected.is_empty(), "thresholds ({min_user},{min_item})");
                }
                Err(other) => panic!("unexpected {other}"),
            }
        }
    }

    #[test]
    fn filter_is_idempotent() {
        let text: String = (0..30)
            .flat_map(|u| (0..(u % 7 + 1)).map(move |i| format!("u{u},i{i},3.0\n")))
            .collect();
        let ds = parse(&text).unwrap();
        let once = ds.filter_activity(3, 2).unwrap();
        let twice = once.filter_activity(3, 2).unwrap();
        assert_eq!(once.triples(), twice.triples());
        assert_eq!(once.user_ids(), twice.user_ids());
    }

    fn grid_dataset(n: usize) -> RatingDataset {
        // Cross-product triples covering every index, n of them.
        let n_items = 100 + n % 100 + 1;
        let mut triples = Vec::with_capacity(n);
        let mut u = 0u32;
        let mut i = 0u32;
        for _ in 0..n {
            triples.push(RatingTriple {
                user: u,
                item: i,
                rating: 3.0,
            });
            i += 1;
            if i as usize == n_items {
                i = 0;
                u += 1;
            }
        }
        let n_users = u as usize + usize::from(i > 0);
        // Guarantee item coverage for the last partial row.
        RatingDataset::from_dense_triples(n_users, n_items.min(n), triples, (1.0, 5.0)).unwrap()
    }

    #[test]
    fn split_sizes_match_floor_arithmetic() {
        let ds = grid_dataset(100_004);
        let plan = ds.split(0.8, 42).unwrap();
        assert_eq!(plan.train.len(), 80_003);
        assert_eq!(plan.test.len(), 20_001);
    }

    #[test]
    fn split_is_deterministic() {
        let ds = grid_dataset(1_000);
        let a = ds.split(0.8, 7).unwrap();
        let b = ds.split(0.8, 7).unwrap();
        assert_eq!(a.train.triple_indices(), b.train.triple_indices());
        assert_eq!(a.test.triple_indices(), b.test.triple_indices());
        let c = ds.split(0.8, 8).unwrap();
        assert_ne!(a.train.triple_indices(), c.train.triple_indices());
    }

    #[test]
    fn split_matches_reference_shuffle() {
        let ds = grid_dataset(10);
        for seed in [0u64, 1, 99] {
            let plan = ds.split(0.8, seed).unwrap();
            let mut reference: Vec<u32> = (0..10).collect();
            SplitMix64::new(seed).shuffle(&mut reference);
            assert_eq!(plan.train.triple_indices(), &reference[..8]);
            assert_eq!(plan.test.triple_indices(), &reference[8..]);
        }
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let ds = grid_dataset(10);
        assert!(matches!(ds.split(0.0, 1), Err(Error::Config(_))));
        assert!(matches!(ds.split(1.0, 1), Err(Error::Config(_))));
        assert!(matches!(ds.split(-0.5, 1), Err(Error::Config(_))));
    }

    #[test]
    fn fold_sizes_and_partition() {
        let ds = grid_dataset(100);
        let view = ds.view();
        let plan = view.make_folds(10, 3).unwrap();
        for (_, val) in &plan.folds {
            assert_eq!(val.len(), 10);
        }

        let ds101 = grid_dataset(101);
        let view101 = ds101.view();
        let plan101 = view101.make_folds(10, 3).unwrap();
        let mut sizes: Vec<usize> = plan101.folds.iter().map(|(_, v)| v.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![10, 10, 10, 10, 10, 10, 10, 10, 10, 11]);

        // Union of validation blocks is exactly the input view.
        let mut union: Vec<u32> = plan101
            .folds
            .iter()
            .flat_map(|(_, v)| v.triple_indices().iter().copied())
            .collect();
        union.sort_unstable();
        let mut expected: Vec<u32> = view101.triple_indices().to_vec();
        expected.sort_unstable();
        assert_eq!(union, expected);

        // Each pair is disjoint and covers the view.
        for (train, val) in &plan101.folds {
            assert_eq!(train.len() + val.len(), view101.len());
            let tset: HashSet<u32> = train.triple_indices().iter().copied().collect();
            assert!(val.triple_indices().iter().all(|i| !tset.contains(i)));
        }
    }

    #[test]
    fn folds_reject_small_inputs() {
        let ds = grid_dataset(5);
        let view = ds.view();
        assert!(matches!(view.make_folds(1, 0), Err(Error::Config(_))));
        assert!(matches!(view.make_folds(6, 0), Err(Error::Config(_))));
    }

    #[test]
    fn manifest_round_trips() {
        let ds = parse("A,X,3.0\nB,Y,4.5\n").unwrap();
        let manifest = DatasetManifest {
            format_version: MANIFEST_FORMAT_VERSION,
            source_path: "ratings.csv".into(),
            source_sha256: "abc".into(),
            format: FormatTag::Auto,
            min_user_ratings: 20,
            min_item_ratings: 0,
            raw_counts: DatasetCounts::of(&ds),
            filtered_counts: DatasetCounts::of(&ds),
            scale_min: 3.0,
            scale_max: 4.5,
            content_sha256: ds.content_sha256(),
            split: Some(SplitInfo {
                seed: 42,
                train_fraction: 0.8,
                n_train: 1,
                n_test: 1,
            }),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        manifest.write(&path).unwrap();
        assert_eq!(DatasetManifest::read(&path).unwrap(), manifest);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_dataset() -> impl Strategy<Value = RatingDataset> {
            // Small random datasets with full index coverage.
            (2usize..=8, 2usize..=8).prop_flat_map(|(nu, ni)| {
                proptest::collection::vec(0.0f64..=1.0, nu * ni).prop_map(move |extra| {
                    let mut triples = Vec::new();
                    for u in 0..nu {
                        for i in 0..ni {
                            // Keep a triple with probability ~2/3, but always
                            // keep the diagonal so coverage holds.
                            let p = extra[u * ni + i];
                            if i == u % ni || u == i % nu || p < 0.66 {
                                triples.push(RatingTriple {
                                    user: u as u32,
                                    item: i as u32,
                                    rating: 1.0 + (p * 4.0),
                                });
                            }
                        }
                    }
                    RatingDataset::from_dense_triples(nu, ni, triples, (1.0, 5.0)).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn split_is_disjoint_and_covering(
                ds in arb_dataset(),
                fraction in 0.05f64..0.95,
                seed in any::<u64>(),
            ) {
                let plan = ds.split(fraction, seed).unwrap();
                let mut all: Vec<u32> = plan
                    .train
                    .triple_indices()
                    .iter()
                    .chain(plan.test.triple_indices())
                    .copied()
                    .collect();
                all.sort_unstable();
                let expected: Vec<u32> = (0..ds.len() as u32).collect();
                prop_assert_eq!(all, expected);
                let target = (fraction * ds.len() as f64).floor() as usize;
                prop_assert_eq!(plan.train.len(), target);
            }

            #[test]
            fn folds_partition_for_all_counts(
                ds in arb_dataset(),
                n_folds in 2usize..=10,
                seed in any::<u64>(),
            ) {
                prop_assume!(ds.len() >= n_folds);
                let view = ds.view();
                let plan = view.make_folds(n_folds, seed).unwrap();
                let mut union: Vec<u32> = plan
                    .folds
                    .iter()
                    .flat_map(|(_, v)| v.triple_indices().iter().copied())
                    .collect();
                union.sort_unstable();
                let mut expected = view.triple_indices().to_vec();
                expected.sort_unstable();
                prop_assert_eq!(union, expected);
                let sizes: Vec<usize> = plan.folds.iter().map(|(_, v)| v.len()).collect();
                let min = sizes.iter().min().unwrap();
                let max = sizes.iter().max().unwrap();
                prop_assert!(max - min <= 1);
            }

            #[test]
            fn filter_idempotent_prop(
                ds in arb_dataset(),
                min_user in 0usize..4,
                min_item in 0usize..4,
            ) {
                if let Ok(once) = ds.filter_activity(min_user, min_item) {
                    let twice = once.filter_activity(min_user, min_item).unwrap();
                    prop_assert_eq!(once.triples(), twice.triples());
                }
            }
        }
    }
}
