//! Time-delay embedding: reconstruct a phase-space point cloud from a
//! scalar time series.
//!
//! A series `x(0), x(1), ...` of length `T` embeds into `T - (m-1)*tau`
//! points, where point `n` is `[x(n), x(n+tau), ..., x(n+(m-1)*tau)]`.
//! The point order follows the time order of the series, which the
//! filtration stage relies on when it inserts temporal links.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("series too short: {len} samples, need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("invalid embedding config: {0}")]
    InvalidConfig(&'static str),
}

/// A scalar time series: ordered samples plus an opaque channel id.
///
/// Invariants: at least one sample, all samples finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    id: String,
    samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, samples: Vec<f64>) -> Result<Self, EmbeddingError> {
        if samples.is_empty() {
            return Err(EmbeddingError::SeriesTooShort { len: 0, needed: 1 });
        }
        if let Some(index) = samples.iter().position(|s| !s.is_finite()) {
            return Err(EmbeddingError::NonFiniteSample { index });
        }
        Ok(Self { id: id.into(), samples })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Per-channel z-scoring (mean 0, unit variance). A constant series is
    /// centered but not scaled.
    pub fn zscored(&self) -> TimeSeries {
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().sum::<f64>() / n;
        let var = self.samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        let samples = if sd > 0.0 {
            self.samples.iter().map(|s| (s - mean) / sd).collect()
        } else {
            self.samples.iter().map(|s| s - mean).collect()
        };
        TimeSeries { id: self.id.clone(), samples }
    }
}

/// Parameters of the delay embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingConfig {
    /// Embedding dimension, `m >= 1`.
    pub m: usize,
    /// Embedding delay in samples, `tau >= 1`.
    pub tau: usize,
    /// Subsampling cap applied after embedding, `max_points >= 2`.
    pub max_points: usize,
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.m < 1 {
            return Err(EmbeddingError::InvalidConfig("m must be >= 1"));
        }
        if self.tau < 1 {
            return Err(EmbeddingError::InvalidConfig("tau must be >= 1"));
        }
        if self.max_points < 2 {
            return Err(EmbeddingError::InvalidConfig("max_points must be >= 2"));
        }
        Ok(())
    }
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { m: 3, tau: 1, max_points: 150 }
    }
}

/// An ordered set of points in `R^m`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    temporal_order: bool,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates. `coords.len()` must be a
    /// nonzero multiple of `dim`.
    pub fn from_rows(coords: Vec<f64>, dim: usize, temporal_order: bool) -> Self {
        assert!(dim >= 1, "point dimension must be >= 1");
        assert!(
            !coords.is_empty() && coords.len() % dim == 0,
            "coordinate buffer must be a nonzero multiple of dim"
        );
        Self { coords, dim, temporal_order }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether index order equals time order.
    pub fn temporal_order(&self) -> bool {
        self.temporal_order
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }
}

/// Delay-embeds `series` into `R^m` with delay `tau`.
///
/// Returns exactly `T - (m-1)*tau` points; point `n`, coordinate `j` is
/// `series[n + j*tau]`. Requires `T - (m-1)*tau >= 2`.
pub fn delay_embed(series: &TimeSeries, cfg: &EmbeddingConfig) -> Result<PointCloud, EmbeddingError> {
    cfg.validate()?;
    let t = series.len();
    let span = (cfg.m - 1) * cfg.tau;
    if t < span + 2 {
        return Err(EmbeddingError::SeriesTooShort { len: t, needed: span + 2 });
    }
    let n_points = t - span;
    let samples = series.samples();
    let mut coords = Vec::with_capacity(n_points * cfg.m);
    for n in 0..n_points {
        for j in 0..cfg.m {
            coords.push(samples[n + j * cfg.tau]);
        }
    }
    Ok(PointCloud { coords, dim: cfg.m, temporal_order: true })
}

/// Picks an embedding delay as the lag of the first zero-crossing of the
/// sample autocorrelation, searching lags `1..=len/2`. Falls back to 1 when
/// no crossing exists or the series is degenerate (zero variance).
pub fn estimate_delay(series: &TimeSeries) -> Result<usize, EmbeddingError> {
    let n = series.len();
    if n < 4 {
        return Err(EmbeddingError::SeriesTooShort { len: n, needed: 4 });
    }
    let x = series.samples();
    let mean = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    if denom <= 0.0 {
        return Ok(1);
    }
    for lag in 1..=n / 2 {
        let num: f64 = (0..n - lag).map(|t| (x[t] - mean) * (x[t + lag] - mean)).sum();
        if num / denom <= 0.0 {
            return Ok(lag);
        }
    }
    Ok(1)
}

/// Caps a cloud at `max_points` points taken at uniformly spaced temporal
/// indices (first and last always kept). A cloud at or under the cap is
/// returned unchanged.
///
/// Panics if `max_points < 2`.
pub fn subsample(cloud: &PointCloud, max_points: usize) -> PointCloud {
    assert!(max_points >= 2, "max_points must be >= 2");
    let n = cloud.len();
    if n <= max_points {
        return cloud.clone();
    }
    let k = max_points;
    let mut coords = Vec::with_capacity(k * cloud.dim);
    for i in 0..k {
        // Uniform spacing over [0, n-1]; rounding keeps indices strictly
        // increasing because the stride is >= 1.
        let idx = ((i * (n - 1)) as f64 / (k - 1) as f64).round() as usize;
        coords.extend_from_slice(cloud.point(idx));
    }
    PointCloud { coords, dim: cloud.dim, temporal_order: cloud.temporal_order }
}
