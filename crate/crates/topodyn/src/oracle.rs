//! Slow reference persistence for small filtrations, used to check the
//! reduction in [`crate::homology`].
//!
//! Nothing here shares mechanics with the production reduction: pairs
//! are recovered purely from ranks of boundary submatrices. A simplex
//! position is a destroyer when its column raises the rank of its
//! dimension's boundary matrix; the feature it kills is located by the
//! smallest prefix `a` at which the column becomes dependent once rows
//! at positions <= `a` are deleted (the killed class is then supported
//! inside the prefix). Columns fit in a `u128`, which caps the oracle
//! at 16 vertices (C(16,2) = 120 edge rows).

use thiserror::Error;

use crate::filtration::Filtration;
use crate::homology::{Death, PersistenceDiagram, PersistencePair};

/// Vertex cap: edge rows must fit in a 128-bit column mask.
pub const ORACLE_MAX_VERTICES: usize = 16;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("filtration has {n} vertices, the oracle handles at most {ORACLE_MAX_VERTICES}")]
    TooLargeForOracle { n: usize },
}

/// GF(2) span tester over u128 columns, basis indexed by leading bit.
#[derive(Clone)]
struct Basis {
    by_lead: [u128; 128],
}

impl Basis {
    fn new() -> Self {
        Self { by_lead: [0; 128] }
    }

    /// Inserts `v`; returns true when it was independent of the basis.
    fn insert(&mut self, mut v: u128) -> bool {
        while v != 0 {
            let lead = 127 - v.leading_zeros() as usize;
            if self.by_lead[lead] == 0 {
                self.by_lead[lead] = v;
                return true;
            }
            v ^= self.by_lead[lead];
        }
        false
    }

    fn contains(&self, mut v: u128) -> bool {
        while v != 0 {
            let lead = 127 - v.leading_zeros() as usize;
            if self.by_lead[lead] == 0 {
                return false;
            }
            v ^= self.by_lead[lead];
        }
        true
    }
}

/// Is `target`, row-masked, in the span of the row-masked `cols`?
fn in_masked_span(cols: &[u128], target: u128, mask: u128) -> bool {
    let mut basis = Basis::new();
    for &c in cols {
        basis.insert(c & mask);
    }
    basis.contains(target & mask)
}

/// A simplex position in the filtration, annotated for rank queries.
struct Position {
    value: f64,
    dim: usize,
    /// Ordinal among simplices of the same dimension, in filtration order.
    ordinal: usize,
    /// Boundary over (dim-1)-ordinals; 0 for vertices.
    column: u128,
}

/// Reference persistence by rank computations over every prefix.
///
/// The input must be a valid filtration (sorted, face before coface);
/// violations panic rather than error, since this path only ever sees
/// outputs of the filtration builder. Output pairs form the same
/// multiset as the production reduction.
pub fn naive_persistence_oracle(f: &Filtration) -> Result<PersistenceDiagram, OracleError> {
    let n = f.n_vertices();
    if n > ORACLE_MAX_VERTICES {
        return Err(OracleError::TooLargeForOracle { n });
    }

    // Annotate positions with per-dimension ordinals and boundary columns.
    let mut counts = [0usize; 3];
    let mut vert_ordinal = vec![usize::MAX; n];
    let mut edge_ordinal = std::collections::HashMap::<(u32, u32), usize>::new();
    let mut positions = Vec::with_capacity(f.simplices().len());
    for s in f.simplices() {
        let dim = s.dim();
        let ordinal = counts[dim];
        counts[dim] += 1;
        let column = match *s.vertices() {
            [a] => {
                vert_ordinal[a as usize] = ordinal;
                0u128
            }
            [a, b] => {
                edge_ordinal.insert((a, b), ordinal);
                (1 << vert_ordinal[a as usize]) | (1 << vert_ordinal[b as usize])
            }
            [a, b, c] => {
                let eab = edge_ordinal[&(a, b)];
                let eac = edge_ordinal[&(a, c)];
                let ebc = edge_ordinal[&(b, c)];
                (1u128 << eab) | (1 << eac) | (1 << ebc)
            }
            _ => unreachable!("dimensions are 0..=2"),
        };
        positions.push(Position { value: s.value(), dim, ordinal, column });
    }

    // Row masks: for dimension k and prefix position a, the rows of
    // (k-1)-simplices sitting at positions > a.
    let row_mask_above = |k: usize, a: isize| -> u128 {
        let mut mask = 0u128;
        for (p, pos) in positions.iter().enumerate() {
            if pos.dim == k - 1 && p as isize > a {
                mask |= 1 << pos.ordinal;
            }
        }
        mask
    };
    let full = u128::MAX;

    // Classify each position: a destroyer's column is independent of the
    // columns of earlier same-dimension simplices.
    let mut is_destroyer = vec![false; positions.len()];
    for j in 0..positions.len() {
        if positions[j].dim == 0 {
            continue;
        }
        let earlier: Vec<u128> = positions[..j]
            .iter()
            .filter(|p| p.dim == positions[j].dim)
            .map(|p| p.column)
            .collect();
        is_destroyer[j] = !in_masked_span(&earlier, positions[j].column, full);
    }

    let mut claimed = vec![false; positions.len()];
    let mut pairs = Vec::new();
    for j in 0..positions.len() {
        if !is_destroyer[j] {
            continue;
        }
        let k = positions[j].dim;
        let earlier: Vec<u128> =
            positions[..j].iter().filter(|p| p.dim == k).map(|p| p.column).collect();
        // Candidate birth positions: (k-1)-simplices before j. delta(a)
        // is monotone in a, false with no rows deleted (destroyer test
        // above), true when all candidate rows are deleted.
        let candidates: Vec<usize> =
            (0..j).filter(|&p| positions[p].dim == k - 1).collect();
        let delta = |a: usize| -> bool {
            let mask = row_mask_above(k, a as isize);
            in_masked_span(&earlier, positions[j].column, mask)
        };
        let mut lo = 0usize;
        let mut hi = candidates.len() - 1;
        debug_assert!(delta(candidates[hi]));
        while lo < hi {
            let mid = (lo + hi) / 2;
            if delta(candidates[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let born_at = candidates[lo];
        assert!(
            !is_destroyer[born_at] && !claimed[born_at],
            "pairing landed on a non-creator or doubly-claimed position"
        );
        claimed[born_at] = true;
        pairs.push(PersistencePair {
            dim: (k - 1) as u8,
            birth: positions[born_at].value,
            death: Death::Finite(positions[j].value),
        });
    }

    // Unclaimed creators of dimension 0 and 1 never die.
    for (p, pos) in positions.iter().enumerate() {
        if pos.dim <= 1 && !is_destroyer[p] && !claimed[p] {
            pairs.push(PersistencePair {
                dim: pos.dim as u8,
                birth: pos.value,
                death: Death::Essential,
            });
        }
    }

    Ok(PersistenceDiagram::new(pairs, f.eps_max()).expect("oracle pairs satisfy invariants"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::PointCloud;
    use crate::filtration::{build_rips, ScalePolicy};
    use crate::homology::compute_persistence;

    fn cloud(coords: &[f64], dim: usize) -> PointCloud {
        PointCloud::from_rows(coords.to_vec(), dim, true)
    }

    fn canon(d: &PersistenceDiagram) -> Vec<(u8, u64, u64)> {
        // exact-bit canonical form for multiset comparison
        let mut v: Vec<(u8, u64, u64)> = d
            .pairs()
            .iter()
            .map(|p| {
                (
                    p.dim,
                    p.birth.to_bits(),
                    match p.death {
                        Death::Finite(x) => x.to_bits(),
                        Death::Essential => u64::MAX,
                    },
                )
            })
            .collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn vertices_only_are_all_essential() {
        let f = build_rips(&cloud(&[0.0, 10.0, 20.0], 1), ScalePolicy::Fixed(1.0), false).unwrap();
        let d = naive_persistence_oracle(&f).unwrap();
        assert_eq!(d.pairs().len(), 3);
        assert!(d.pairs().iter().all(|p| p.dim == 0 && p.death.is_essential()));
    }

    #[test]
    fn unit_square_matches_hand_computation() {
        let sq = cloud(&[0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0], 2);
        let f = build_rips(&sq, ScalePolicy::Fixed(2.0), false).unwrap();
        let d = naive_persistence_oracle(&f).unwrap();
        let s2 = 2.0f64.sqrt();
        let h1: Vec<_> = d
            .pairs_in_dim(1)
            .filter(|p| !p.is_zero_persistence())
            .map(|p| (p.birth, p.death))
            .collect();
        assert_eq!(h1, vec![(1.0, Death::Finite(s2))]);
        assert_eq!(d.pairs_in_dim(0).count(), 4);
    }

    #[test]
    fn agrees_with_reduction_on_fixed_clouds() {
        let clouds: Vec<(Vec<f64>, usize)> = vec![
            (vec![0.0, 3.0], 1),
            (vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0], 2),
            (vec![0.0, 3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.0, 3.5], 1),
            (vec![1.0, 1.0, 5.0], 1),
            (vec![0.0, 0.0, 2.0, 0.0, 1.0, 1.7320508075688772], 2),
        ];
        for (coords, dim) in clouds {
            let c = cloud(&coords, dim);
            for links in [false, true] {
                for scale in [ScalePolicy::Diameter, ScalePolicy::Fixed(2.0)] {
                    let f = build_rips(&c, scale, links).unwrap();
                    let fast = compute_persistence(&f).unwrap();
                    let slow = naive_persistence_oracle(&f).unwrap();
                    assert_eq!(canon(&fast), canon(&slow), "coords {coords:?} links {links}");
                }
            }
        }
    }

    #[test]
    fn refuses_large_inputs() {
        let coords: Vec<f64> = (0..17).map(f64::from).collect();
        let f = build_rips(&cloud(&coords, 1), ScalePolicy::Fixed(0.5), false).unwrap();
        assert!(matches!(
            naive_persistence_oracle(&f),
            Err(OracleError::TooLargeForOracle { n: 17 })
        ));
    }
}
