//! Distances between persistence diagrams: 1-Wasserstein under the L1
//! ground metric and bottleneck under L-infinity, both via optimal
//! assignment with diagonal augmentation.
//!
//! The augmented problem is square with side |X| + |Y|: each diagram
//! point may match any point of the other diagram or any diagonal slot
//! (cost: its own distance to the diagonal), and slot-to-slot entries
//! cost 0. Diagrams must be finitized first; essential deaths are
//! rejected, zero-persistence points are harmless (diagonal cost 0).

use thiserror::Error;

use crate::homology::{Death, PersistenceDiagram};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("diagrams mix homology dimensions")]
    MixedDimensions,
    #[error("diagram contains an essential (non-finitized) pair")]
    NonFinitePair,
}

/// Ground metric on diagram points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ground {
    L1,
    Linf,
}

impl Ground {
    fn point_cost(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (db, dd) = ((a.0 - b.0).abs(), (a.1 - b.1).abs());
        match self {
            Ground::L1 => db + dd,
            Ground::Linf => db.max(dd),
        }
    }

    /// Distance from (b, d) to its closest diagonal point.
    fn diagonal_cost(&self, p: (f64, f64)) -> f64 {
        match self {
            Ground::L1 => p.1 - p.0,
            Ground::Linf => (p.1 - p.0) / 2.0,
        }
    }
}

/// What a cost entry connects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    PointToPoint,
    PointToDiagonal,
    DiagonalToPoint,
    DiagonalToDiagonal,
}

/// A square assignment problem. Rows are X points then Y-diagonal
/// slots; columns are Y points then X-diagonal slots.
#[derive(Debug, Clone)]
pub struct MatchingProblem {
    side: usize,
    nx: usize,
    ny: usize,
    costs: Vec<f64>,
}

impl MatchingProblem {
    /// Wraps a plain square cost matrix (every entry point-to-point).
    /// Panics unless the matrix is square with finite nonnegative costs.
    pub fn from_cost_matrix(rows: Vec<Vec<f64>>) -> Self {
        let side = rows.len();
        let mut costs = Vec::with_capacity(side * side);
        for row in &rows {
            assert_eq!(row.len(), side, "cost matrix must be square");
            for &c in row {
                assert!(c.is_finite() && c >= 0.0, "costs must be finite and nonnegative");
                costs.push(c);
            }
        }
        Self { side, nx: side, ny: side, costs }
    }

    fn from_points(xs: &[(f64, f64)], ys: &[(f64, f64)], ground: Ground) -> Self {
        let (nx, ny) = (xs.len(), ys.len());
        let side = nx + ny;
        let mut costs = vec![0.0; side * side];
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                costs[i * side + j] = ground.point_cost(x, y);
            }
            let diag = ground.diagonal_cost(x);
            for j in ny..side {
                costs[i * side + j] = diag;
            }
        }
        for (j, &y) in ys.iter().enumerate() {
            let diag = ground.diagonal_cost(y);
            for i in nx..side {
                costs[i * side + j] = diag;
            }
        }
        Self { side, nx, ny, costs }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn cost(&self, row: usize, col: usize) -> f64 {
        self.costs[row * self.side + col]
    }

    pub fn kind(&self, row: usize, col: usize) -> EntryKind {
        match (row < self.nx, col < self.ny) {
            (true, true) => EntryKind::PointToPoint,
            (true, false) => EntryKind::PointToDiagonal,
            (false, true) => EntryKind::DiagonalToPoint,
            (false, false) => EntryKind::DiagonalToDiagonal,
        }
    }
}

/// Minimum-cost perfect matching by the Jonker-Volgenant dual-potential
/// method (O(side^3)). Returns the row-to-column assignment and the sum
/// of the matched entries. The optimal value is unique; the matching
/// need not be.
pub fn assignment_solve(p: &MatchingProblem) -> (Vec<usize>, f64) {
    let n = p.side;
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // 1-based arrays; column 0 is a virtual staging column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column -> row, 0 = free
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = p.cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // augment along the alternating path
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }
    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=n {
        row_to_col[matched_row[j] - 1] = j - 1;
    }
    // total from the chosen entries, not the potentials: keeps sums of
    // exactly representable costs exact
    let total = row_to_col.iter().enumerate().map(|(i, &j)| p.cost(i, j)).sum();
    (row_to_col, total)
}

/// Extracts (birth, death) points, rejecting essential pairs and mixed
/// dimensions across the two diagrams.
fn validate(
    x: &PersistenceDiagram,
    y: &PersistenceDiagram,
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>), MetricsError> {
    let mut dim: Option<u8> = None;
    let mut extract = |d: &PersistenceDiagram| -> Result<Vec<(f64, f64)>, MetricsError> {
        d.pairs()
            .iter()
            .map(|p| {
                match dim {
                    Some(k) if k != p.dim => return Err(MetricsError::MixedDimensions),
                    None => dim = Some(p.dim),
                    _ => {}
                }
                match p.death {
                    Death::Finite(death) => Ok((p.birth, death)),
                    Death::Essential => Err(MetricsError::NonFinitePair),
                }
            })
            .collect()
    };
    let xs = extract(x)?;
    let ys = extract(y)?;
    Ok((xs, ys))
}

/// Exact 1-Wasserstein for the all-births-zero case: with every point at
/// (0, d), matching is one-dimensional transport between the deaths of
/// one diagram (padded with a zero per point of the other, the diagonal
/// slots) and vice versa; the sorted pairing is optimal for |a - b|.
fn wasserstein1_births_zero(xs: &[(f64, f64)], ys: &[(f64, f64)]) -> f64 {
    let mut a: Vec<f64> = xs.iter().map(|p| p.1).chain(std::iter::repeat_n(0.0, ys.len())).collect();
    let mut b: Vec<f64> = ys.iter().map(|p| p.1).chain(std::iter::repeat_n(0.0, xs.len())).collect();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum()
}

/// 1-Wasserstein distance under the L1 ground metric, diagonal matching
/// allowed at cost death - birth. Diagrams must be finitized.
pub fn wasserstein1(
    x: &PersistenceDiagram,
    y: &PersistenceDiagram,
) -> Result<f64, MetricsError> {
    let (xs, ys) = validate(x, y)?;
    if xs.is_empty() && ys.is_empty() {
        return Ok(0.0);
    }
    if xs.iter().all(|p| p.0 == 0.0) && ys.iter().all(|p| p.0 == 0.0) {
        return Ok(wasserstein1_births_zero(&xs, &ys));
    }
    let (_, total) = assignment_solve(&MatchingProblem::from_points(&xs, &ys, Ground::L1));
    Ok(total)
}

/// Can every row be matched using only entries <= cap?
fn feasible(p: &MatchingProblem, cap: f64) -> bool {
    fn try_assign(
        p: &MatchingProblem,
        row: usize,
        cap: f64,
        visited: &mut [bool],
        col_match: &mut [usize],
    ) -> bool {
        for col in 0..p.side {
            if p.cost(row, col) <= cap && !visited[col] {
                visited[col] = true;
                if col_match[col] == usize::MAX
                    || try_assign(p, col_match[col], cap, visited, col_match)
                {
                    col_match[col] = row;
                    return true;
                }
            }
        }
        false
    }
    let mut col_match = vec![usize::MAX; p.side];
    let mut visited = vec![false; p.side];
    (0..p.side).all(|row| {
        visited.fill(false);
        try_assign(p, row, cap, &mut visited, &mut col_match)
    })
}

/// Bottleneck distance under the L-infinity ground metric, diagonal
/// matching at cost (death - birth) / 2. Diagrams must be finitized.
///
/// The optimum is some cost entry, so a binary search over the sorted
/// distinct entries with a matching-feasibility test is exact.
pub fn bottleneck(x: &PersistenceDiagram, y: &PersistenceDiagram) -> Result<f64, MetricsError> {
    let (xs, ys) = validate(x, y)?;
    if xs.is_empty() && ys.is_empty() {
        return Ok(0.0);
    }
    let p = MatchingProblem::from_points(&xs, &ys, Ground::Linf);
    let mut candidates = p.costs.clone();
    candidates.sort_unstable_by(f64::total_cmp);
    candidates.dedup();
    // feasibility is monotone in the cap; the max entry always works
    let first = candidates.partition_point(|&c| !feasible(&p, c));
    Ok(candidates[first])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{PersistencePair, PersistenceDiagram};

    fn diagram(dim: u8, points: &[(f64, f64)], eps: f64) -> PersistenceDiagram {
        let pairs = points
            .iter()
            .map(|&(b, d)| PersistencePair { dim, birth: b, death: Death::Finite(d) })
            .collect();
        PersistenceDiagram::new(pairs, eps).unwrap()
    }

    #[test]
    fn wasserstein_spec_examples() {
        let empty = diagram(0, &[], 5.0);
        let a = diagram(0, &[(0.0, 2.0)], 5.0);
        let b = diagram(0, &[(0.0, 1.0)], 5.0);
        assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);
        assert_eq!(wasserstein1(&a, &empty).unwrap(), 2.0);
        assert_eq!(wasserstein1(&empty, &a).unwrap(), 2.0);
        assert_eq!(wasserstein1(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn bottleneck_spec_examples() {
        let empty = diagram(1, &[], 5.0);
        let a = diagram(1, &[(0.0, 2.0)], 5.0);
        let b = diagram(1, &[(0.5, 2.5)], 5.0);
        assert_eq!(bottleneck(&a, &a).unwrap(), 0.0);
        assert_eq!(bottleneck(&a, &empty).unwrap(), 1.0);
        assert_eq!(bottleneck(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn assignment_spec_examples() {
        let (m, c) = assignment_solve(&MatchingProblem::from_cost_matrix(vec![vec![7.0]]));
        assert_eq!((m, c), (vec![0], 7.0));
        let (m, c) = assignment_solve(&MatchingProblem::from_cost_matrix(vec![
            vec![1.0, 2.0],
            vec![2.0, 1.0],
        ]));
        assert_eq!((m, c), (vec![0, 1], 2.0));
    }

    #[test]
    fn assignment_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.random_range(1..=6);
            // dyadic costs keep every sum exact in f64
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(0..1u16 << 10) as f64 / 16.0).collect())
                .collect();
            let best = brute_force(&rows);
            let (matching, got) = assignment_solve(&MatchingProblem::from_cost_matrix(rows.clone()));
            assert_eq!(got, best);
            // matching must be a permutation achieving the total
            let mut seen = vec![false; n];
            let mut total = 0.0;
            for (i, &j) in matching.iter().enumerate() {
                assert!(!seen[j]);
                seen[j] = true;
                total += rows[i][j];
            }
            assert_eq!(total, best);
        }
    }

    fn brute_force(rows: &[Vec<f64>]) -> f64 {
        fn rec(rows: &[Vec<f64>], i: usize, used: &mut [bool], acc: f64, best: &mut f64) {
            if i == rows.len() {
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            for j in 0..rows.len() {
                if !used[j] {
                    used[j] = true;
                    rec(rows, i + 1, used, acc + rows[i][j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(rows, 0, &mut vec![false; rows.len()], 0.0, &mut best);
        best
    }

    #[test]
    fn rejects_essential_and_mixed_dims() {
        let fine = diagram(0, &[(0.0, 1.0)], 5.0);
        let essential = PersistenceDiagram::new(
            vec![PersistencePair { dim: 0, birth: 0.0, death: Death::Essential }],
            5.0,
        )
        .unwrap();
        assert!(matches!(wasserstein1(&fine, &essential), Err(MetricsError::NonFinitePair)));
        assert!(matches!(bottleneck(&essential, &fine), Err(MetricsError::NonFinitePair)));

        let other_dim = diagram(1, &[(0.5, 1.0)], 5.0);
        assert!(matches!(wasserstein1(&fine, &other_dim), Err(MetricsError::MixedDimensions)));
        assert!(matches!(bottleneck(&fine, &other_dim), Err(MetricsError::MixedDimensions)));
    }

    #[test]
    fn zero_persistence_points_change_nothing() {
        let a = diagram(1, &[(1.0, 3.0), (2.0, 2.5)], 5.0);
        let b = diagram(1, &[(1.25, 2.75)], 5.0);
        let a_noisy = diagram(1, &[(1.0, 3.0), (2.0, 2.5), (1.5, 1.5)], 5.0);
        let b_noisy = diagram(1, &[(1.25, 2.75), (4.0, 4.0)], 5.0);
        assert_eq!(wasserstein1(&a, &b).unwrap(), wasserstein1(&a_noisy, &b_noisy).unwrap());
        assert_eq!(bottleneck(&a, &b).unwrap(), bottleneck(&a_noisy, &b_noisy).unwrap());
    }

    #[test]
    fn power_of_two_scaling_is_exact() {
        let a = diagram(1, &[(1.0, 3.0), (0.5, 4.5)], 8.0);
        let b = diagram(1, &[(1.5, 2.0)], 8.0);
        let a2 = diagram(1, &[(2.0, 6.0), (1.0, 9.0)], 16.0);
        let b2 = diagram(1, &[(3.0, 4.0)], 16.0);
        assert_eq!(wasserstein1(&a2, &b2).unwrap(), 2.0 * wasserstein1(&a, &b).unwrap());
        assert_eq!(bottleneck(&a2, &b2).unwrap(), 2.0 * bottleneck(&a, &b).unwrap());
    }

    #[test]
    fn births_zero_fast_path_matches_assignment() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let n = rng.random_range(0..6);
                let pts: Vec<(f64, f64)> =
                    (0..n).map(|_| (0.0, rng.random_range(0..1u16 << 10) as f64 / 16.0)).collect();
                pts
            };
            let xs = mk(&mut rng);
            let ys = mk(&mut rng);
            let fast = wasserstein1_births_zero(&xs, &ys);
            let (_, slow) = assignment_solve(&MatchingProblem::from_points(&xs, &ys, Ground::L1));
            assert_eq!(fast, slow, "xs {xs:?} ys {ys:?}");
        }
    }

    #[test]
    fn symmetry_on_random_diagrams() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..25 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let n = rng.random_range(0..6);
                let pts: Vec<(f64, f64)> = (0..n)
                    .map(|_| {
                        let b = rng.random_range(0..1u16 << 8) as f64 / 16.0;
                        let d = b + rng.random_range(0..1u16 << 8) as f64 / 16.0;
                        (b, d)
                    })
                    .collect();
                diagram(1, &pts, 40.0)
            };
            let (a, b) = (mk(&mut rng), mk(&mut rng));
            assert_eq!(wasserstein1(&a, &b).unwrap(), wasserstein1(&b, &a).unwrap());
            assert_eq!(bottleneck(&a, &b).unwrap(), bottleneck(&b, &a).unwrap());
        }
    }
}
