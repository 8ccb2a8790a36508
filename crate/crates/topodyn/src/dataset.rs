//! Labeled multichannel corpora on disk: a manifest maps CSV files to
//! class labels and sample ids, with sha256 checksums, and split
//! generation draws balanced test sets per class.
//!
//! Manifest format, one entry per line, tab-separated:
//!
//! ```text
//! path<TAB>label<TAB>sample_id<TAB>sha256-hex-or-dash
//! ```
//!
//! `#` starts a comment line; blank lines are skipped. Paths resolve
//! relative to the manifest's directory. A checksum of `-` skips
//! verification for that file.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::{self, OdeSpec, SignalKind, SignalParams, System};
use crate::embedding::TimeSeries;
use crate::io::{self, CsvError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("manifest line {line}: {reason}")]
    BadManifestLine { line: usize, reason: &'static str },
    #[error("duplicate sample id {id:?}")]
    DuplicateSampleId { id: String },
    #[error("missing data file {path}")]
    MissingFile { path: String },
    #[error("{path}: {source}")]
    Parse { path: String, source: CsvError },
    #[error("checksum mismatch for {path}")]
    ChecksumMismatch { path: String },
    #[error("{path}: not valid UTF-8")]
    NotUtf8 { path: String },
    #[error("{path}: channels have unequal lengths (pass allow_ragged to accept)")]
    UnequalChannelLengths { path: String },
    #[error("{path}: {got} channels, expected {want} as in the first sample")]
    ChannelCountMismatch { path: String, got: usize, want: usize },
    #[error("class {class:?} has {have} samples, need at least {need}")]
    ClassTooSmall { class: String, have: usize, need: usize },
}

/// One labeled multichannel recording.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    pub channels: Vec<TimeSeries>,
    pub label: String,
    pub sample_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
    pub sample_id: String,
    /// Lowercase sha256 hex, or "-" to skip verification.
    pub checksum: String,
}

/// Parsed manifest: ordered entries plus the directory entry paths
/// resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    base: PathBuf,
    entries: Vec<ManifestEntry>,
}

fn valid_checksum(s: &str) -> bool {
    s == "-" || (s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

impl DatasetManifest {
    /// Parses manifest text. `base` is the directory entry paths are
    /// relative to (the manifest file's parent when read from disk).
    pub fn parse(text: &str, base: impl Into<PathBuf>) -> Result<Self, DatasetError> {
        let mut entries = Vec::new();
        let mut seen_ids = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(DatasetError::BadManifestLine {
                    line,
                    reason: "expected 4 tab-separated fields: path, label, sample_id, checksum",
                });
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(DatasetError::BadManifestLine { line, reason: "empty field" });
            }
            if !valid_checksum(fields[3]) {
                return Err(DatasetError::BadManifestLine {
                    line,
                    reason: "checksum must be 64 hex digits or '-'",
                });
            }
            if !seen_ids.insert(fields[2].to_string()) {
                return Err(DatasetError::DuplicateSampleId { id: fields[2].to_string() });
            }
            entries.push(ManifestEntry {
                path: fields[0].to_string(),
                label: fields[1].to_string(),
                sample_id: fields[2].to_string(),
                checksum: fields[3].to_string(),
            });
        }
        Ok(Self { base: base.into(), entries })
    }

    pub fn read_file(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, base)
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn base(&self) -> &Path {
        &self.base
    }

    /// Distinct labels in sorted order.
    pub fn classes(&self) -> Vec<String> {
        let mut classes: Vec<String> = self.entries.iter().map(|e| e.label.clone()).collect();
        classes.sort();
        classes.dedup();
        classes
    }

    /// Serialization; `parse` of the result with the same base is identity.
    /// Panics if any field contains a tab or newline.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            for field in [&e.path, &e.label, &e.sample_id, &e.checksum] {
                assert!(
                    !field.contains(['\t', '\n', '\r']),
                    "manifest fields must not contain tabs or newlines"
                );
            }
            writeln!(out, "{}\t{}\t{}\t{}", e.path, e.label, e.sample_id, e.checksum).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Accept samples whose channels have differing lengths.
    pub allow_ragged: bool,
    /// Z-score every channel after parsing.
    pub zscore: bool,
}

fn load_one(
    base: &Path,
    entry: &ManifestEntry,
    opts: &LoadOptions,
) -> Result<ActionSample, DatasetError> {
    let path = base.join(&entry.path);
    let shown = path.display().to_string();
    let bytes = std::fs::read(&path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DatasetError::MissingFile { path: shown.clone() }
        } else {
            DatasetError::Io { path: shown.clone(), source }
        }
    })?;
    if entry.checksum != "-" && sha256_hex(&bytes) != entry.checksum {
        return Err(DatasetError::ChecksumMismatch { path: shown });
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| DatasetError::NotUtf8 { path: shown.clone() })?;
    let mut channels =
        io::parse_csv(&text).map_err(|source| DatasetError::Parse { path: shown.clone(), source })?;
    if !opts.allow_ragged && channels.iter().any(|c| c.len() != channels[0].len()) {
        return Err(DatasetError::UnequalChannelLengths { path: shown });
    }
    if opts.zscore {
        channels = channels.iter().map(TimeSeries::zscored).collect();
    }
    Ok(ActionSample {
        channels,
        label: entry.label.clone(),
        sample_id: entry.sample_id.clone(),
    })
}

/// Loads every entry, in manifest order. Files are read and parsed in
/// parallel; order and the first error reported are still deterministic
/// (manifest order). The channel count of the first sample is the
/// required count for all others.
pub fn load_dataset(
    manifest: &DatasetManifest,
    opts: &LoadOptions,
) -> Result<Vec<ActionSample>, DatasetError> {
    let results: Vec<Result<ActionSample, DatasetError>> = manifest
        .entries
        .par_iter()
        .map(|entry| load_one(&manifest.base, entry, opts))
        .collect();
    let mut samples = Vec::with_capacity(results.len());
    for result in results {
        samples.push(result?);
    }
    if let Some(first) = samples.first() {
        let want = first.channels.len();
        for s in &samples[1..] {
            if s.channels.len() != want {
                return Err(DatasetError::ChannelCountMismatch {
                    path: s.sample_id.clone(),
                    got: s.channels.len(),
                    want,
                });
            }
        }
    }
    Ok(samples)
}

/// One train/test partition of sample indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Draws `n_splits` independent partitions; each test set holds exactly
/// `test_per_class` samples of every class, sampled without replacement,
/// and train is the complement. Classes are processed in sorted label
/// order so the result depends only on (samples, arguments, seed).
pub fn make_splits(
    samples: &[ActionSample],
    n_splits: usize,
    test_per_class: usize,
    seed: u64,
) -> Result<Vec<Split>, DatasetError> {
    let mut classes: Vec<&str> = samples.iter().map(|s| s.label.as_str()).collect();
    classes.sort();
    classes.dedup();
    let by_class: Vec<(&str, Vec<usize>)> = classes
        .iter()
        .map(|&label| {
            let idx: Vec<usize> = samples
                .iter()
                .enumerate()
                .filter(|(_, s)| s.label == label)
                .map(|(i, _)| i)
                .collect();
            (label, idx)
        })
        .collect();
    for (label, idx) in &by_class {
        if idx.len() <= test_per_class {
            return Err(DatasetError::ClassTooSmall {
                class: (*label).to_string(),
                have: idx.len(),
                need: test_per_class + 1,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Vec::with_capacity(n_splits);
    for _ in 0..n_splits {
        let mut test = Vec::with_capacity(test_per_class * by_class.len());
        for (_, idx) in &by_class {
            let chosen = rand::seq::index::sample(&mut rng, idx.len(), test_per_class);
            test.extend(chosen.iter().map(|k| idx[k]));
        }
        test.sort_unstable();
        let test_set: HashSet<usize> = test.iter().copied().collect();
        let train: Vec<usize> = (0..samples.len()).filter(|i| !test_set.contains(i)).collect();
        splits.push(Split { train, test });
    }
    Ok(splits)
}

/// Synthetic five-class benchmark corpus: chaotic flows (lorenz,
/// rossler: the three state coordinates as channels) and sinusoid
/// variants (sine, noisy_sine, damped_sine: three phase-shifted
/// channels), `per_class` instances each with randomized initial
/// conditions, amplitudes, periods, and phases. Channel ids are
/// uniformly c0, c1, c2.
pub fn synthetic_corpus(per_class: usize, seed: u64) -> Vec<ActionSample> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(5 * per_class);
    let n = 800usize; // samples kept per channel

    let mut push = |label: &str, k: usize, raw: Vec<TimeSeries>| {
        let channels = raw
            .into_iter()
            .enumerate()
            .map(|(i, c)| TimeSeries::new(format!("c{i}"), c.samples().to_vec()).unwrap())
            .collect();
        samples.push(ActionSample {
            channels,
            label: label.to_string(),
            sample_id: format!("{label}_{k:02}"),
        });
    };

    for k in 0..per_class {
        let x0 = [
            rng.random_range(-15.0..15.0),
            rng.random_range(-20.0..20.0),
            rng.random_range(5.0..35.0),
        ];
        let spec = OdeSpec { n_steps: 1000 + n, ..OdeSpec::new(System::lorenz(), x0) };
        push("lorenz", k, integrate_ok(&spec).into());
    }
    for k in 0..per_class {
        let x0 = [
            rng.random_range(-8.0..8.0),
            rng.random_range(-8.0..8.0),
            rng.random_range(0.0..4.0),
        ];
        let spec = OdeSpec { n_steps: 1000 + n, ..OdeSpec::new(System::rossler(), x0) };
        push("rossler", k, integrate_ok(&spec).into());
    }
    for (kind, label) in [
        (SignalKind::Sine, "sine"),
        (SignalKind::NoisySine, "noisy_sine"),
        (SignalKind::DampedSine, "damped_sine"),
    ] {
        for k in 0..per_class {
            let params = SignalParams {
                amplitude: rng.random_range(0.8..1.2),
                period: rng.random_range(40.0..80.0),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                noise: 0.25,
                decay: rng.random_range(0.0015..0.0035),
            };
            let channels = (0..3)
                .map(|i| {
                    let p = SignalParams {
                        phase: params.phase + i as f64 * std::f64::consts::FRAC_PI_3,
                        ..params
                    };
                    // parameter ranges above satisfy the generator's checks
                    dynamics::synth_signal(kind, &p, n, rng.random()).unwrap()
                })
                .collect();
            push(label, k, channels);
        }
    }
    samples
}

fn integrate_ok(spec: &OdeSpec) -> [TimeSeries; 3] {
    // canonical parameters and bounded initial boxes cannot diverge
    dynamics::integrate(spec).expect("benchmark trajectory diverged")
}

/// Writes one CSV per sample plus `manifest.txt` (with real checksums)
/// into `dir`, creating it if needed. Returns the manifest.
pub fn write_corpus(dir: &Path, samples: &[ActionSample]) -> Result<DatasetManifest, DatasetError> {
    let io_err = |source| DatasetError::Io { path: dir.display().to_string(), source };
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut entries = Vec::with_capacity(samples.len());
    for s in samples {
        let name = format!("{}.csv", s.sample_id);
        let text = io::to_csv(&s.channels);
        std::fs::write(dir.join(&name), &text)
            .map_err(|source| DatasetError::Io { path: name.clone(), source })?;
        entries.push(ManifestEntry {
            path: name,
            label: s.label.clone(),
            sample_id: s.sample_id.clone(),
            checksum: sha256_hex(text.as_bytes()),
        });
    }
    let manifest = DatasetManifest { base: dir.to_path_buf(), entries };
    std::fs::write(dir.join("manifest.txt"), manifest.to_text()).map_err(io_err)?;
    Ok(manifest)
}
