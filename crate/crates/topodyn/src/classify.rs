//! Nearest-neighbor classification of multichannel recordings by their
//! persistence signatures.
//!
//! Each channel is delay-embedded, capped, filtered, and reduced to one
//! dim-0 and one dim-1 diagram, finitized to the channel's own scale cap.
//! The distance between two samples is the unweighted sum of
//! 1-Wasserstein distances over channels and both dimensions. Evaluation
//! runs a seeded balanced split protocol and pools a row-normalized
//! confusion matrix.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{make_splits, ActionSample, DatasetError};
use crate::embedding::{delay_embed, estimate_delay, subsample, EmbeddingConfig, EmbeddingError};
use crate::filtration::{build_rips, FiltrationError, ScalePolicy};
use crate::homology::{
    compute_persistence, Death, HomologyError, PersistenceDiagram, PersistencePair,
};
use crate::metrics::wasserstein1;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("channel {channel}: {source}")]
    Embedding { channel: String, source: EmbeddingError },
    #[error("channel {channel}: {source}")]
    Filtration { channel: String, source: FiltrationError },
    #[error("channel {channel}: {source}")]
    Homology { channel: String, source: HomologyError },
    #[error("signatures built with different configs: {a} vs {b}")]
    FingerprintMismatch { a: String, b: String },
    #[error("signatures have {got} and {want} channels")]
    ChannelCountMismatch { got: usize, want: usize },
    #[error("empty training set")]
    EmptyTrainSet,
    #[error("bad config fingerprint: {0}")]
    BadFingerprint(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Embedding delay selection: a fixed lag, or the autocorrelation
/// zero-crossing estimated per channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauPolicy {
    Auto,
    Fixed(usize),
}

/// Everything that determines a signature, pinned into a parseable
/// fingerprint so artifacts record how they were produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub m: usize,
    pub tau: TauPolicy,
    pub max_points: usize,
    pub scale: ScalePolicy,
    pub temporal_links: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            m: 3,
            tau: TauPolicy::Auto,
            max_points: 150,
            scale: ScalePolicy::Diameter,
            temporal_links: true,
        }
    }
}

impl PipelineConfig {
    /// Stable textual form, e.g.
    /// `m=3 tau=auto max_points=150 eps=diameter links=on`.
    /// `parse_fingerprint` of the result is identity.
    pub fn fingerprint(&self) -> String {
        let tau = match self.tau {
            TauPolicy::Auto => "auto".to_string(),
            TauPolicy::Fixed(t) => t.to_string(),
        };
        let eps = match self.scale {
            ScalePolicy::Diameter => "diameter".to_string(),
            ScalePolicy::Fixed(e) => e.to_string(),
        };
        format!(
            "m={} tau={} max_points={} eps={} links={}",
            self.m,
            tau,
            self.max_points,
            eps,
            if self.temporal_links { "on" } else { "off" }
        )
    }

    pub fn parse_fingerprint(text: &str) -> Result<Self, ClassifyError> {
        let bad = |msg: &str| ClassifyError::BadFingerprint(format!("{msg} in {text:?}"));
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for token in text.split_whitespace() {
            let (key, value) =
                token.split_once('=').ok_or_else(|| bad("expected key=value tokens"))?;
            if fields.insert(key, value).is_some() {
                return Err(bad("duplicate key"));
            }
        }
        let mut take = |key: &str| fields.remove(key).ok_or_else(|| bad("missing key"));
        let m = take("m")?.parse().map_err(|_| bad("bad m"))?;
        let tau = match take("tau")? {
            "auto" => TauPolicy::Auto,
            t => TauPolicy::Fixed(t.parse().map_err(|_| bad("bad tau"))?),
        };
        let max_points = take("max_points")?.parse().map_err(|_| bad("bad max_points"))?;
        let scale = match take("eps")? {
            "diameter" => ScalePolicy::Diameter,
            e => ScalePolicy::Fixed(e.parse().map_err(|_| bad("bad eps"))?),
        };
        let temporal_links = match take("links")? {
            "on" => true,
            "off" => false,
            _ => return Err(bad("links must be on or off")),
        };
        if !fields.is_empty() {
            return Err(bad("unknown key"));
        }
        Ok(Self { m, tau, max_points, scale, temporal_links })
    }
}

/// The two diagrams of one channel, finitized to that channel's scale cap.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDiagrams {
    pub dim0: PersistenceDiagram,
    pub dim1: PersistenceDiagram,
}

/// Per-channel persistence diagrams of one sample plus the config that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologicalSignature {
    config: PipelineConfig,
    channels: Vec<ChannelDiagrams>,
}

impl TopologicalSignature {
    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn channels(&self) -> &[ChannelDiagrams] {
        &self.channels
    }
}

fn channel_diagrams(
    channel: &crate::embedding::TimeSeries,
    cfg: &PipelineConfig,
) -> Result<ChannelDiagrams, ClassifyError> {
    let annotate_embed =
        |source| ClassifyError::Embedding { channel: channel.id().to_string(), source };
    let tau = match cfg.tau {
        TauPolicy::Auto => estimate_delay(channel).map_err(annotate_embed)?,
        TauPolicy::Fixed(t) => t,
    };
    let ecfg = EmbeddingConfig { m: cfg.m, tau, max_points: cfg.max_points };
    let cloud = delay_embed(channel, &ecfg).map_err(annotate_embed)?;
    let cloud = subsample(&cloud, cfg.max_points);
    let filt = build_rips(&cloud, cfg.scale, cfg.temporal_links)
        .map_err(|source| ClassifyError::Filtration { channel: channel.id().to_string(), source })?;
    let diagram = compute_persistence(&filt)
        .map_err(|source| ClassifyError::Homology { channel: channel.id().to_string(), source })?;
    let eps = diagram.eps_max();
    // Zero-persistence pairs are dropped before finitizing: the matching
    // distances are invariant to them, and links-on filtrations produce
    // thousands. Essential classes survive (a constant channel keeps its
    // single component as a (0, eps) = (0, 0) point).
    let finitize = |dim: u8| {
        let pairs: Vec<PersistencePair> = diagram
            .pairs()
            .iter()
            .filter(|p| p.dim == dim && !p.is_zero_persistence())
            .map(|p| PersistencePair {
                dim: p.dim,
                birth: p.birth,
                death: match p.death {
                    Death::Essential => Death::Finite(eps),
                    d => d,
                },
            })
            .collect();
        // births/deaths come from a validated diagram, so this cannot fail
        PersistenceDiagram::new(pairs, eps).expect("reduced pairs are in range")
    };
    Ok(ChannelDiagrams { dim0: finitize(0), dim1: finitize(1) })
}

/// Computes the per-channel diagrams of one sample. Channels run in
/// parallel; the result (and the first error, if any) is order-stable.
pub fn signature(
    sample: &ActionSample,
    cfg: &PipelineConfig,
) -> Result<TopologicalSignature, ClassifyError> {
    let results: Vec<Result<ChannelDiagrams, ClassifyError>> =
        sample.channels.par_iter().map(|c| channel_diagrams(c, cfg)).collect();
    let mut channels = Vec::with_capacity(results.len());
    for r in results {
        channels.push(r?);
    }
    Ok(TopologicalSignature { config: *cfg, channels })
}

/// Unweighted sum of 1-Wasserstein distances over channels and both
/// homology dimensions. A pseudometric on signatures sharing a config.
pub fn sample_distance(
    a: &TopologicalSignature,
    b: &TopologicalSignature,
) -> Result<f64, ClassifyError> {
    if a.config != b.config {
        return Err(ClassifyError::FingerprintMismatch {
            a: a.config.fingerprint(),
            b: b.config.fingerprint(),
        });
    }
    if a.channels.len() != b.channels.len() {
        return Err(ClassifyError::ChannelCountMismatch {
            got: b.channels.len(),
            want: a.channels.len(),
        });
    }
    let mut total = 0.0;
    for (ca, cb) in a.channels.iter().zip(&b.channels) {
        // diagrams are finitized and single-dimension by construction
        total += wasserstein1(&ca.dim0, &cb.dim0).expect("finitized same-dim diagrams");
        total += wasserstein1(&ca.dim1, &cb.dim1).expect("finitized same-dim diagrams");
    }
    Ok(total)
}

/// k-NN vote over precomputed (distance, label) pairs in training-set
/// order. Neighbors are ranked by (distance, index); the majority label
/// wins, ties broken by the earliest tied neighbor.
fn knn_from_distances<'a>(dists: &[(f64, &'a str)], k: usize) -> &'a str {
    assert!(k >= 1, "k must be >= 1");
    let mut order: Vec<usize> = (0..dists.len()).collect();
    order.sort_by(|&i, &j| dists[i].0.total_cmp(&dists[j].0).then(i.cmp(&j)));
    let top = &order[..k.min(order.len())];
    let mut votes: HashMap<&str, usize> = HashMap::new();
    for &i in top {
        *votes.entry(dists[i].1).or_insert(0) += 1;
    }
    let mut best = dists[top[0]].1;
    let mut best_votes = votes[best];
    for &i in &top[1..] {
        let label = dists[i].1;
        if votes[label] > best_votes {
            best = label;
            best_votes = votes[label];
        }
    }
    best
}

/// Predicts the label of `query` from its k nearest training signatures
/// (acceptance runs pin k = 1: the minimum-distance label, ties to the
/// smallest training index).
pub fn knn_predict<'a>(
    query: &TopologicalSignature,
    train: &[(&TopologicalSignature, &'a str)],
    k: usize,
) -> Result<&'a str, ClassifyError> {
    if train.is_empty() {
        return Err(ClassifyError::EmptyTrainSet);
    }
    let mut dists = Vec::with_capacity(train.len());
    for (sig, label) in train {
        dists.push((sample_distance(query, sig)?, *label));
    }
    Ok(knn_from_distances(&dists, k))
}

/// Split protocol: how many independent partitions to draw and how many
/// test samples per class each takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalProtocol {
    pub n_splits: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

/// Outcome of a split-protocol evaluation.
///
/// `std_accuracy` is the population standard deviation across splits.
/// `confusion` is pooled over all splits and row-normalized by
/// true-class test counts; rows and columns follow `classes` order. A
/// class that was never tested keeps a diagonal 1 by convention.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub fingerprint: String,
    pub seed: u64,
    pub n_splits: usize,
    pub test_per_class: usize,
    pub classes: Vec<String>,
    pub split_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub confusion: Vec<Vec<f64>>,
}

impl EvalReport {
    /// Stable tab-separated serialization; byte-identical for identical
    /// inputs regardless of thread schedule.
    pub fn to_text(&self) -> String {
        let mut out = String::from("nn-eval-report v1\n");
        writeln!(out, "fingerprint\t{}", self.fingerprint).unwrap();
        writeln!(out, "seed\t{}", self.seed).unwrap();
        writeln!(out, "splits\t{}", self.n_splits).unwrap();
        writeln!(out, "test_per_class\t{}", self.test_per_class).unwrap();
        writeln!(out, "mean_accuracy\t{}", self.mean_accuracy).unwrap();
        writeln!(out, "std_accuracy_population\t{}", self.std_accuracy).unwrap();
        for class in &self.classes {
            writeln!(out, "class\t{class}").unwrap();
        }
        for acc in &self.split_accuracies {
            writeln!(out, "split_accuracy\t{acc}").unwrap();
        }
        for (class, row) in self.classes.iter().zip(&self.confusion) {
            write!(out, "confusion\t{class}").unwrap();
            for v in row {
                write!(out, "\t{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the full protocol: one signature per sample (computed once,
/// reused by every split), all pairwise distances cached, then 1-NN over
/// each split. Deterministic for fixed (samples, cfg, protocol).
pub fn evaluate(
    samples: &[ActionSample],
    cfg: &PipelineConfig,
    protocol: &EvalProtocol,
) -> Result<EvalReport, ClassifyError> {
    let splits = make_splits(samples, protocol.n_splits, protocol.test_per_class, protocol.seed)?;
    let sig_results: Vec<Result<TopologicalSignature, ClassifyError>> =
        samples.par_iter().map(|s| signature(s, cfg)).collect();
    let mut signatures = Vec::with_capacity(sig_results.len());
    for r in sig_results {
        signatures.push(r?);
    }

    let n = samples.len();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let dist_results: Vec<Result<f64, ClassifyError>> = pairs
        .par_iter()
        .map(|&(i, j)| sample_distance(&signatures[i], &signatures[j]))
        .collect();
    let mut dist = vec![0.0; n * n];
    for (&(i, j), r) in pairs.iter().zip(dist_results) {
        let d = r?;
        dist[i * n + j] = d;
        dist[j * n + i] = d;
    }

    let mut classes: Vec<String> = samples.iter().map(|s| s.label.clone()).collect();
    classes.sort();
    classes.dedup();
    let class_index: HashMap<&str, usize> = classes.iter().map(String::as_str).zip(0..).collect();

    let mut split_accuracies = Vec::with_capacity(splits.len());
    let mut counts = vec![0u64; classes.len() * classes.len()];
    for split in &splits {
        let mut correct = 0usize;
        for &q in &split.test {
            let dists: Vec<(f64, &str)> = split
                .train
                .iter()
                .map(|&t| (dist[q * n + t], samples[t].label.as_str()))
                .collect();
            let predicted = knn_from_distances(&dists, 1);
            let truth = samples[q].label.as_str();
            if predicted == truth {
                correct += 1;
            }
            counts[class_index[truth] * classes.len() + class_index[predicted]] += 1;
        }
        let acc = if split.test.is_empty() {
            1.0 // vacuous: no test items means no observed errors
        } else {
            correct as f64 / split.test.len() as f64
        };
        split_accuracies.push(acc);
    }

    let k = split_accuracies.len();
    let mean_accuracy =
        if k == 0 { 0.0 } else { split_accuracies.iter().sum::<f64>() / k as f64 };
    let std_accuracy = if k == 0 {
        0.0
    } else {
        let var = split_accuracies.iter().map(|a| (a - mean_accuracy).powi(2)).sum::<f64>()
            / k as f64;
        var.sqrt()
    };

    let confusion = (0..classes.len())
        .map(|t| {
            let row = &counts[t * classes.len()..(t + 1) * classes.len()];
            let total: u64 = row.iter().sum();
            if total == 0 {
                (0..classes.len()).map(|p| if p == t { 1.0 } else { 0.0 }).collect()
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();

    Ok(EvalReport {
        fingerprint: cfg.fingerprint(),
        seed: protocol.seed,
        n_splits: protocol.n_splits,
        test_per_class: protocol.test_per_class,
        classes,
        split_accuracies,
        mean_accuracy,
        std_accuracy,
        confusion,
    })
}
