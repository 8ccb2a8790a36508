//! Vietoris–Rips filtration of a point cloud, truncated at a scale cap
//! and restricted to simplices of dimension <= 2.
//!
//! Vertices enter at value 0, edge {i,j} at the Euclidean distance
//! d(i,j) when d(i,j) <= eps_max, and a triangle at the maximum of its
//! three edge values (flag rule). When temporal links are on, every edge
//! between consecutive indices enters at value 0 regardless of distance,
//! so the value-0 subcomplex contains the whole trajectory path. Those
//! links are ordinary edges afterward: they participate in flag
//! triangles and their value-0 scale propagates through the max rule.

use std::fmt::Write as _;

use thiserror::Error;

use crate::embedding::PointCloud;

#[derive(Debug, Error)]
pub enum FiltrationError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("scale cap must be a finite nonnegative number")]
    NegativeScale,
}

/// A simplex of dimension 0..=2 with its filtration value.
///
/// Invariants: vertices strictly increasing, value >= 0, and value >= the
/// value of every face (guaranteed by construction in [`build_rips`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    value: f64,
    verts: [u32; 3],
    dim: u8,
}

impl Simplex {
    /// `verts[..=dim]` must be strictly increasing; `value` finite, >= 0.
    pub fn new(value: f64, verts: &[u32]) -> Self {
        assert!((1..=3).contains(&verts.len()), "simplex needs 1..=3 vertices");
        assert!(verts.windows(2).all(|w| w[0] < w[1]), "vertices must strictly increase");
        assert!(value.is_finite() && value >= 0.0, "value must be finite and nonnegative");
        let mut v = [0u32; 3];
        v[..verts.len()].copy_from_slice(verts);
        Self { value, verts: v, dim: (verts.len() - 1) as u8 }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..=self.dim as usize]
    }

    /// Total order used by the filtration: (value, dim, vertex tuple).
    /// Padding vertices are zero, so comparing the full array is
    /// equivalent to lexicographic tuple order within a dimension.
    fn sort_key(&self) -> (f64, u8, [u32; 3]) {
        (self.value, self.dim, self.verts)
    }

    fn cmp_filtration(&self, other: &Self) -> std::cmp::Ordering {
        let (av, ad, at) = self.sort_key();
        let (bv, bd, bt) = other.sort_key();
        av.total_cmp(&bv).then(ad.cmp(&bd)).then(at.cmp(&bt))
    }
}

/// A filtration: simplices sorted by (value, dimension, vertices), which
/// puts every face before its cofaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    simplices: Vec<Simplex>,
    eps_max: f64,
    n_vertices: usize,
}

impl Filtration {
    /// Assembles a filtration from parts without checking the sorted or
    /// face-before-coface invariants; consumers that require them detect
    /// violations and report malformed input. Meant for tests and tools
    /// that build filtrations by hand.
    pub fn from_parts(simplices: Vec<Simplex>, eps_max: f64, n_vertices: usize) -> Self {
        assert!(eps_max.is_finite() && eps_max >= 0.0, "eps_max must be finite and nonnegative");
        Self { simplices, eps_max, n_vertices }
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// One simplex per line, `value dim v0 [v1 [v2]]`, in stored order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.simplices {
            write!(out, "{} {}", s.value(), s.dim()).unwrap();
            for v in s.vertices() {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// How to pick the truncation scale of a filtration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalePolicy {
    /// Use the cloud diameter: every pair eventually connects.
    Diameter,
    /// Use an explicit cap; must be finite and >= 0.
    Fixed(f64),
}

/// Index of pair (i, j), i < j, in a condensed upper-triangular buffer.
#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Maximum pairwise Euclidean distance; 0 for a single point.
pub fn diameter(cloud: &PointCloud) -> Result<f64, FiltrationError> {
    if cloud.is_empty() {
        return Err(FiltrationError::EmptyCloud);
    }
    let n = cloud.len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(euclidean(cloud.point(i), cloud.point(j)));
        }
    }
    Ok(best)
}

/// Builds the truncated Rips filtration of `cloud`.
///
/// With `temporal_links`, consecutive indices are taken as adjacent in
/// time (the embedding emits points in time order) and get value-0 edges.
pub fn build_rips(
    cloud: &PointCloud,
    scale: ScalePolicy,
    temporal_links: bool,
) -> Result<Filtration, FiltrationError> {
    if cloud.is_empty() {
        return Err(FiltrationError::EmptyCloud);
    }
    let n = cloud.len();
    let eps_max = match scale {
        ScalePolicy::Diameter => diameter(cloud)?,
        ScalePolicy::Fixed(e) => {
            if !e.is_finite() || e < 0.0 {
                return Err(FiltrationError::NegativeScale);
            }
            e
        }
    };

    // Edge values in condensed layout; INFINITY marks an absent edge.
    let mut edge_val = vec![f64::INFINITY; n * (n - 1) / 2];
    for i in 0..n {
        for j in i + 1..n {
            let v = if temporal_links && j == i + 1 {
                0.0
            } else {
                let d = euclidean(cloud.point(i), cloud.point(j));
                if d > eps_max {
                    continue;
                }
                d
            };
            edge_val[pair_index(n, i, j)] = v;
        }
    }

    // Adjacency bitsets for flag-triangle enumeration.
    let words = n.div_ceil(64);
    let mut adj = vec![0u64; n * words];
    for i in 0..n {
        for j in i + 1..n {
            if edge_val[pair_index(n, i, j)].is_finite() {
                adj[i * words + j / 64] |= 1 << (j % 64);
                adj[j * words + i / 64] |= 1 << (i % 64);
            }
        }
    }

    let mut simplices = Vec::new();
    for i in 0..n as u32 {
        simplices.push(Simplex { value: 0.0, verts: [i, 0, 0], dim: 0 });
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = edge_val[pair_index(n, i, j)];
            if v.is_finite() {
                simplices.push(Simplex { value: v, verts: [i as u32, j as u32, 0], dim: 1 });
            }
        }
    }
    // Triangles {i, j, k}, i < j < k: k ranges over common neighbors of i
    // and j above j. The flag value is the max of the three edge values,
    // not the max pairwise distance (temporal links enter at 0).
    for i in 0..n {
        for j in i + 1..n {
            let vij = edge_val[pair_index(n, i, j)];
            if !vij.is_finite() {
                continue;
            }
            for w in j / 64..words {
                let mut common = adj[i * words + w] & adj[j * words + w];
                if w == j / 64 {
                    // keep bits strictly above j within j's word
                    common &= u64::MAX.checked_shl(j as u32 % 64 + 1).unwrap_or(0);
                }
                while common != 0 {
                    let k = w * 64 + common.trailing_zeros() as usize;
                    common &= common - 1;
                    let vik = edge_val[pair_index(n, i, k)];
                    let vjk = edge_val[pair_index(n, j, k)];
                    simplices.push(Simplex {
                        value: vij.max(vik).max(vjk),
                        verts: [i as u32, j as u32, k as u32],
                        dim: 2,
                    });
                }
            }
        }
    }

    simplices.sort_unstable_by(Simplex::cmp_filtration);
    Ok(Filtration { simplices, eps_max, n_vertices: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(coords: &[f64], dim: usize) -> PointCloud {
        PointCloud::from_rows(coords.to_vec(), dim, true)
    }

    fn unit_square() -> PointCloud {
        cloud(&[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0], 2)
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(&cloud(&[1.0, 2.0], 2)).unwrap(), 0.0);
        assert_eq!(diameter(&cloud(&[0.0, 0.0, 3.0, 4.0], 2)).unwrap(), 5.0);
        assert_eq!(diameter(&unit_square()).unwrap(), 2.0f64.sqrt());
    }

    #[test]
    fn two_points_no_links() {
        let f = build_rips(&cloud(&[0.0, 3.0], 1), ScalePolicy::Fixed(5.0), false).unwrap();
        let got: Vec<(f64, Vec<u32>)> =
            f.simplices().iter().map(|s| (s.value(), s.vertices().to_vec())).collect();
        assert_eq!(got, vec![(0.0, vec![0]), (0.0, vec![1]), (3.0, vec![0, 1])]);
        assert_eq!(f.eps_max(), 5.0);
        assert_eq!(f.n_vertices(), 2);
    }

    #[test]
    fn temporal_links_ignore_the_cap() {
        let f = build_rips(&cloud(&[0.0, 10.0, 20.0], 1), ScalePolicy::Fixed(5.0), true).unwrap();
        let got: Vec<(f64, Vec<u32>)> =
            f.simplices().iter().map(|s| (s.value(), s.vertices().to_vec())).collect();
        assert_eq!(
            got,
            vec![
                (0.0, vec![0]),
                (0.0, vec![1]),
                (0.0, vec![2]),
                (0.0, vec![0, 1]),
                (0.0, vec![1, 2]),
            ]
        );
    }

    #[test]
    fn unit_square_flag_complex() {
        let f = build_rips(&unit_square(), ScalePolicy::Fixed(2.0), false).unwrap();
        let s2 = 2.0f64.sqrt();
        let edges: Vec<(f64, Vec<u32>)> = f
            .simplices()
            .iter()
            .filter(|s| s.dim() == 1)
            .map(|s| (s.value(), s.vertices().to_vec()))
            .collect();
        assert_eq!(
            edges,
            vec![
                (1.0, vec![0, 1]),
                (1.0, vec![0, 3]),
                (1.0, vec![1, 2]),
                (1.0, vec![2, 3]),
                (s2, vec![0, 2]),
                (s2, vec![1, 3]),
            ]
        );
        let tris: Vec<(f64, Vec<u32>)> = f
            .simplices()
            .iter()
            .filter(|s| s.dim() == 2)
            .map(|s| (s.value(), s.vertices().to_vec()))
            .collect();
        assert_eq!(
            tris,
            vec![
                (s2, vec![0, 1, 2]),
                (s2, vec![0, 1, 3]),
                (s2, vec![0, 2, 3]),
                (s2, vec![1, 2, 3]),
            ]
        );
    }

    #[test]
    fn square_truncated_below_diagonal_has_no_triangles() {
        let f = build_rips(&unit_square(), ScalePolicy::Fixed(1.0), false).unwrap();
        assert_eq!(f.simplices().iter().filter(|s| s.dim() == 1).count(), 4);
        assert_eq!(f.simplices().iter().filter(|s| s.dim() == 2).count(), 0);
    }

    #[test]
    fn diameter_policy_gives_complete_graph() {
        let f = build_rips(&unit_square(), ScalePolicy::Diameter, false).unwrap();
        assert_eq!(f.eps_max(), 2.0f64.sqrt());
        assert_eq!(f.simplices().iter().filter(|s| s.dim() == 1).count(), 6);
        assert_eq!(f.simplices().iter().filter(|s| s.dim() == 2).count(), 4);
    }

    #[test]
    fn face_before_coface_and_monotone() {
        let f = build_rips(&unit_square(), ScalePolicy::Diameter, true).unwrap();
        let position: std::collections::HashMap<Vec<u32>, usize> = f
            .simplices()
            .iter()
            .enumerate()
            .map(|(p, s)| (s.vertices().to_vec(), p))
            .collect();
        for (p, s) in f.simplices().iter().enumerate() {
            let vs = s.vertices();
            if vs.len() == 1 {
                continue;
            }
            for drop in 0..vs.len() {
                let face: Vec<u32> =
                    vs.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &v)| v).collect();
                let fp = position[&face];
                assert!(fp < p, "face {face:?} must precede {vs:?}");
                assert!(f.simplices()[fp].value() <= s.value());
            }
        }
    }

    #[test]
    fn duplicate_points_keep_zero_edges() {
        let f = build_rips(&cloud(&[1.0, 1.0, 5.0], 1), ScalePolicy::Diameter, false).unwrap();
        let e01 = f
            .simplices()
            .iter()
            .find(|s| s.vertices() == [0, 1])
            .expect("duplicate points still get their edge");
        assert_eq!(e01.value(), 0.0);
        assert_eq!(f.n_vertices(), 3);
    }

    #[test]
    fn single_point_cloud() {
        let f = build_rips(&cloud(&[7.0], 1), ScalePolicy::Diameter, true).unwrap();
        assert_eq!(f.simplices().len(), 1);
        assert_eq!(f.eps_max(), 0.0);
    }

    #[test]
    fn rejects_bad_scale() {
        let c = unit_square();
        assert!(matches!(
            build_rips(&c, ScalePolicy::Fixed(-1.0), false),
            Err(FiltrationError::NegativeScale)
        ));
        assert!(matches!(
            build_rips(&c, ScalePolicy::Fixed(f64::NAN), false),
            Err(FiltrationError::NegativeScale)
        ));
        assert!(matches!(
            build_rips(&c, ScalePolicy::Fixed(f64::INFINITY), false),
            Err(FiltrationError::NegativeScale)
        ));
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = build_rips(&unit_square(), ScalePolicy::Diameter, true).unwrap();
        let b = build_rips(&unit_square(), ScalePolicy::Diameter, true).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let s2 = 2.0f64.sqrt();
        assert!(a.to_text().starts_with("0 0 0\n0 0 1\n0 0 2\n0 0 3\n0 1 0 1\n"));
        assert!(a.to_text().contains(&format!("{s2} 2 1 2 3\n")));
    }

    #[test]
    fn temporal_zero_subcomplex_is_a_path() {
        let c = cloud(&[0.0, 100.0, -50.0, 7.0, 42.0], 1);
        let f = build_rips(&c, ScalePolicy::Fixed(0.0), true).unwrap();
        let zero_edges: Vec<Vec<u32>> = f
            .simplices()
            .iter()
            .filter(|s| s.dim() == 1 && s.value() == 0.0)
            .map(|s| s.vertices().to_vec())
            .collect();
        for i in 0..4u32 {
            assert!(zero_edges.contains(&vec![i, i + 1]));
        }
    }
}
