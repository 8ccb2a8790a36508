//! Persistent homology (H0 and H1) of a filtration by boundary-matrix
//! column reduction over GF(2).
//!
//! H0 comes from a union-find pass over the edges (single-linkage merge
//! events), H1 from reducing the triangle boundary columns over edge
//! rows. Both are the standard left-to-right reduction specialized per
//! dimension: in the full boundary matrix, column operations never cross
//! dimensions, so the blocks reduce independently and pair identically.

use std::cmp::Ordering;
use std::fmt::Write as _;

use thiserror::Error;

use crate::filtration::Filtration;

#[derive(Debug, Error)]
pub enum HomologyError {
    #[error("malformed filtration: {0}")]
    MalformedFiltration(&'static str),
}

#[derive(Debug, Error)]
pub enum DiagramTextError {
    #[error("missing `eps_max` header line")]
    MissingHeader,
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: &'static str },
}

/// Death of a feature: a finite scale, or never within the filtration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Death {
    Finite(f64),
    Essential,
}

impl Death {
    pub fn is_essential(&self) -> bool {
        matches!(self, Death::Essential)
    }

    /// Sort key: finite deaths ascending, essential after all of them.
    fn key(&self) -> (u8, f64) {
        match *self {
            Death::Finite(d) => (0, d),
            Death::Essential => (1, 0.0),
        }
    }
}

/// One birth/death pair of a homology feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub dim: u8,
    pub birth: f64,
    pub death: Death,
}

impl PersistencePair {
    /// Lifetime of the feature, with an essential death read as
    /// `eps_max` (the truncation scale is all we observed).
    pub fn persistence(&self, eps_max: f64) -> f64 {
        match self.death {
            Death::Finite(d) => d - self.birth,
            Death::Essential => eps_max - self.birth,
        }
    }

    /// Born and dead at the same scale; reduction noise, dropped from
    /// serialized diagrams.
    pub fn is_zero_persistence(&self) -> bool {
        matches!(self.death, Death::Finite(d) if d == self.birth)
    }

    fn cmp_stable(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then(self.birth.total_cmp(&other.birth))
            .then_with(|| {
                let (a, b) = (self.death.key(), other.death.key());
                a.0.cmp(&b.0).then(a.1.total_cmp(&b.1))
            })
    }
}

/// A persistence diagram: pairs plus the truncation scale they were
/// computed under. Pairs are kept in stable (dim, birth, death) order.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pairs: Vec<PersistencePair>,
    eps_max: f64,
}

impl PersistenceDiagram {
    /// Validates invariants: dim 0 or 1, finite nonnegative births,
    /// death >= birth, and birth/finite death <= eps_max.
    pub fn new(mut pairs: Vec<PersistencePair>, eps_max: f64) -> Result<Self, HomologyError> {
        if !(eps_max.is_finite() && eps_max >= 0.0) {
            return Err(HomologyError::MalformedFiltration("eps_max must be finite, >= 0"));
        }
        for p in &pairs {
            if p.dim > 1 {
                return Err(HomologyError::MalformedFiltration("pair dimension must be 0 or 1"));
            }
            if !(p.birth.is_finite() && p.birth >= 0.0 && p.birth <= eps_max) {
                return Err(HomologyError::MalformedFiltration("birth out of range"));
            }
            if let Death::Finite(d) = p.death {
                if !(d.is_finite() && d >= p.birth && d <= eps_max) {
                    return Err(HomologyError::MalformedFiltration("death out of range"));
                }
            }
        }
        pairs.sort_unstable_by(PersistencePair::cmp_stable);
        Ok(Self { pairs, eps_max })
    }

    pub fn pairs(&self) -> &[PersistencePair] {
        &self.pairs
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    /// Pairs of one dimension.
    pub fn pairs_in_dim(&self, dim: u8) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(move |p| p.dim == dim)
    }

    /// Count of features in `dim` whose persistence strictly exceeds
    /// `threshold`, essential deaths counted as `eps_max - birth`.
    pub fn persistent_betti(&self, dim: u8, threshold: f64) -> usize {
        assert!(threshold >= 0.0, "threshold must be >= 0");
        self.pairs_in_dim(dim).filter(|p| p.persistence(self.eps_max) > threshold).count()
    }

    /// Replaces essential deaths by the truncation scale, making every
    /// pair finite (the form the diagram distances consume).
    pub fn finitized(&self) -> PersistenceDiagram {
        let pairs = self
            .pairs
            .iter()
            .map(|p| PersistencePair {
                dim: p.dim,
                birth: p.birth,
                death: match p.death {
                    Death::Essential => Death::Finite(self.eps_max),
                    d => d,
                },
            })
            .collect();
        PersistenceDiagram { pairs, eps_max: self.eps_max }
    }

    /// Serializes as text: an `eps_max` header, then one `dim birth
    /// death` record per pair ("inf" for essential), in stored order.
    /// Zero-persistence pairs are dropped unless `keep_zero_persistence`.
    pub fn to_text(&self, keep_zero_persistence: bool) -> String {
        let mut out = String::new();
        writeln!(out, "eps_max {}", self.eps_max).unwrap();
        for p in &self.pairs {
            if !keep_zero_persistence && p.is_zero_persistence() {
                continue;
            }
            match p.death {
                Death::Finite(d) => writeln!(out, "{} {} {}", p.dim, p.birth, d).unwrap(),
                Death::Essential => writeln!(out, "{} {} inf", p.dim, p.birth).unwrap(),
            }
        }
        out
    }

    /// Parses the [`to_text`](Self::to_text) format. Blank lines and `#`
    /// comments are ignored; line numbers in errors are 1-based.
    pub fn parse_text(text: &str) -> Result<Self, DiagramTextError> {
        let mut eps_max: Option<f64> = None;
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut tok = content.split_whitespace();
            if eps_max.is_none() {
                if tok.next() != Some("eps_max") {
                    return Err(DiagramTextError::BadLine {
                        line,
                        reason: "expected `eps_max <value>` header",
                    });
                }
                let v: f64 = tok
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or(DiagramTextError::BadLine { line, reason: "bad eps_max value" })?;
                if !(v.is_finite() && v >= 0.0) || tok.next().is_some() {
                    return Err(DiagramTextError::BadLine { line, reason: "bad eps_max value" });
                }
                eps_max = Some(v);
                continue;
            }
            let eps = eps_max.unwrap();
            let (d, b, dth) = match (tok.next(), tok.next(), tok.next(), tok.next()) {
                (Some(d), Some(b), Some(x), None) => (d, b, x),
                _ => {
                    return Err(DiagramTextError::BadLine {
                        line,
                        reason: "expected `dim birth death`",
                    })
                }
            };
            let dim: u8 = match d {
                "0" => 0,
                "1" => 1,
                _ => return Err(DiagramTextError::BadLine { line, reason: "dim must be 0 or 1" }),
            };
            let birth: f64 = b
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite() && *v >= 0.0 && *v <= eps)
                .ok_or(DiagramTextError::BadLine {
                    line,
                    reason: "birth must be finite, >= 0, <= eps_max",
                })?;
            let death = if dth == "inf" {
                Death::Essential
            } else {
                let v: f64 = dth
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite() && *v >= birth && *v <= eps)
                    .ok_or(DiagramTextError::BadLine {
                        line,
                        reason: "death must be finite, >= birth, <= eps_max (or `inf`)",
                    })?;
                Death::Finite(v)
            };
            pairs.push(PersistencePair { dim, birth, death });
        }
        let eps_max = eps_max.ok_or(DiagramTextError::MissingHeader)?;
        pairs.sort_unstable_by(PersistencePair::cmp_stable);
        Ok(Self { pairs, eps_max })
    }
}

/// Condensed index of pair (i, j), i < j.
#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

struct UnionFind {
    parent: Vec<u32>,
    /// Birth value of the component creator; valid at roots.
    birth: Vec<f64>,
}

impl UnionFind {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }
}

/// Reduces a filtration to its H0/H1 persistence diagram.
///
/// Zero-persistence pairs are retained; callers filter them where the
/// downstream contract wants noise removed. Order or face violations in
/// the input surface as [`HomologyError::MalformedFiltration`].
pub fn compute_persistence(f: &Filtration) -> Result<PersistenceDiagram, HomologyError> {
    let n = f.n_vertices();
    let mut seen_vertex = vec![false; n];
    let mut edge_ord = vec![u32::MAX; n * (n - 1) / 2];
    // (birth value, i, j) per edge, in filtration order
    let mut edges: Vec<(f64, u32, u32)> = Vec::new();
    // (death value, sorted edge ordinals) per triangle
    let mut tris: Vec<(f64, [u32; 3])> = Vec::new();
    let mut prev = 0.0f64;

    for s in f.simplices() {
        let v = s.value();
        if v > f.eps_max() {
            return Err(HomologyError::MalformedFiltration("value above eps_max"));
        }
        if v < prev {
            return Err(HomologyError::MalformedFiltration("values must be nondecreasing"));
        }
        prev = v;
        match *s.vertices() {
            [a] => {
                let a = a as usize;
                if a >= n {
                    return Err(HomologyError::MalformedFiltration("vertex index out of range"));
                }
                if seen_vertex[a] {
                    return Err(HomologyError::MalformedFiltration("duplicate vertex"));
                }
                seen_vertex[a] = true;
            }
            [a, b] => {
                if b as usize >= n || !seen_vertex[a as usize] || !seen_vertex[b as usize] {
                    return Err(HomologyError::MalformedFiltration("edge before its vertices"));
                }
                let idx = pair_index(n, a as usize, b as usize);
                if edge_ord[idx] != u32::MAX {
                    return Err(HomologyError::MalformedFiltration("duplicate edge"));
                }
                edge_ord[idx] = edges.len() as u32;
                edges.push((v, a, b));
            }
            [a, b, c] => {
                if c as usize >= n {
                    return Err(HomologyError::MalformedFiltration("vertex index out of range"));
                }
                let (ab, ac, bc) = (
                    edge_ord[pair_index(n, a as usize, b as usize)],
                    edge_ord[pair_index(n, a as usize, c as usize)],
                    edge_ord[pair_index(n, b as usize, c as usize)],
                );
                if ab == u32::MAX || ac == u32::MAX || bc == u32::MAX {
                    return Err(HomologyError::MalformedFiltration("triangle before its edges"));
                }
                let mut ords = [ab, ac, bc];
                ords.sort_unstable();
                tris.push((v, ords));
            }
            _ => unreachable!("simplex dimensions are 0..=2 by construction"),
        }
    }
    if !seen_vertex.iter().all(|&b| b) {
        return Err(HomologyError::MalformedFiltration("missing vertex simplex"));
    }

    let mut pairs = Vec::new();

    // H0: merge events. The component whose creator is younger dies at
    // the merging edge's value; index breaks birth ties, which leaves
    // the pair multiset unchanged.
    let mut uf = UnionFind { parent: (0..n as u32).collect(), birth: vec![0.0; n] };
    let mut cycle_edge = vec![false; edges.len()];
    for (ord, &(v, a, b)) in edges.iter().enumerate() {
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            cycle_edge[ord] = true;
            continue;
        }
        let (die, live) = if (uf.birth[ra as usize], ra) > (uf.birth[rb as usize], rb) {
            (ra, rb)
        } else {
            (rb, ra)
        };
        pairs.push(PersistencePair {
            dim: 0,
            birth: uf.birth[die as usize],
            death: Death::Finite(v),
        });
        uf.parent[die as usize] = live;
    }
    let mut roots: Vec<u32> = (0..n as u32).filter(|&x| uf.parent[x as usize] == x).collect();
    roots.sort_unstable();
    for r in roots {
        pairs.push(PersistencePair {
            dim: 0,
            birth: uf.birth[r as usize],
            death: Death::Essential,
        });
    }

    // H1: reduce triangle boundary columns over edge rows. The reduced
    // low row of a column is the cycle edge it kills; columns that
    // cancel to zero create 2-cycles and are out of scope.
    let e_count = edges.len();
    let words = e_count.div_ceil(64).max(1);
    let mut pivot_of_row = vec![u32::MAX; e_count];
    let mut pivot_blocks: Vec<u64> = Vec::new();
    let mut edge_paired = vec![false; e_count];
    let mut ws = vec![0u64; words];
    for &(tval, ords) in &tris {
        ws.fill(0);
        for e in ords {
            let e = e as usize;
            if edges[e].0 > tval {
                return Err(HomologyError::MalformedFiltration("face value above coface value"));
            }
            ws[e / 64] |= 1 << (e % 64);
        }
        let mut low = find_low(&ws, ords[2] as usize);
        while let Some(r) = low {
            let p = pivot_of_row[r];
            if p == u32::MAX {
                pivot_of_row[r] = (pivot_blocks.len() / words) as u32;
                pivot_blocks.extend_from_slice(&ws);
                edge_paired[r] = true;
                pairs.push(PersistencePair {
                    dim: 1,
                    birth: edges[r].0,
                    death: Death::Finite(tval),
                });
                break;
            }
            let off = p as usize * words;
            for w in 0..=r / 64 {
                ws[w] ^= pivot_blocks[off + w];
            }
            low = find_low(&ws, r);
        }
    }
    for (ord, &(v, ..)) in edges.iter().enumerate() {
        if cycle_edge[ord] && !edge_paired[ord] {
            pairs.push(PersistencePair { dim: 1, birth: v, death: Death::Essential });
        }
    }

    PersistenceDiagram::new(pairs, f.eps_max())
}

/// Highest set bit index <= `upto`, or None.
fn find_low(ws: &[u64], upto: usize) -> Option<usize> {
    let mut w = upto / 64;
    let shift = 63 - upto % 64;
    let mut word = ws[w] << shift >> shift;
    loop {
        if word != 0 {
            return Some(w * 64 + 63 - word.leading_zeros() as usize);
        }
        if w == 0 {
            return None;
        }
        w -= 1;
        word = ws[w];
    }
}
