//! Property tests over randomized inputs: structural invariants of the
//! embedding, filtration, reduction, and diagram metrics, plus agreement
//! between the production reduction and the rank-based reference
//! implementation.

use proptest::prelude::*;

use topodyn::embedding::{delay_embed, estimate_delay, subsample, EmbeddingConfig, PointCloud, TimeSeries};
use topodyn::filtration::{build_rips, ScalePolicy};
use topodyn::homology::{compute_persistence, Death, PersistenceDiagram, PersistencePair};
use topodyn::metrics::{bottleneck, wasserstein1};
use topodyn::oracle::naive_persistence_oracle;

fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, 10..120)
}

fn cloud_strategy(max_points: usize) -> impl Strategy<Value = PointCloud> {
    (1usize..=3).prop_flat_map(move |dim| {
        prop::collection::vec(-10.0..10.0f64, dim * 2..=dim * max_points)
            .prop_map(move |mut coords| {
                coords.truncate(coords.len() / dim * dim);
                PointCloud::from_rows(coords, dim, true)
            })
    })
}

/// Dyadic-rational diagram points: exact under summation and doubling.
fn diagram_strategy(dim: u8) -> impl Strategy<Value = PersistenceDiagram> {
    prop::collection::vec((0u16..1 << 8, 0u16..1 << 8), 0..8).prop_map(move |raw| {
        let pairs = raw
            .into_iter()
            .map(|(b, p)| {
                let birth = b as f64 / 16.0;
                PersistencePair {
                    dim,
                    birth,
                    death: Death::Finite(birth + p as f64 / 16.0),
                }
            })
            .collect();
        PersistenceDiagram::new(pairs, 40.0).unwrap()
    })
}

fn canon(d: &PersistenceDiagram) -> Vec<(u8, u64, u64)> {
    let mut v: Vec<(u8, u64, u64)> = d
        .pairs()
        .iter()
        .map(|p| {
            let death = match p.death {
                Death::Finite(x) => x.to_bits(),
                Death::Essential => u64::MAX,
            };
            (p.dim, p.birth.to_bits(), death)
        })
        .collect();
    v.sort_unstable();
    v
}

proptest! {
    #[test]
    fn embedding_point_count_and_coordinate_identity(
        samples in series_strategy(),
        m in 1usize..=4,
        tau in 1usize..=5,
    ) {
        let t = samples.len();
        let span = (m - 1) * tau;
        prop_assume!(t >= span + 2);
        let series = TimeSeries::new("s", samples.clone()).unwrap();
        let cloud =
            delay_embed(&series, &EmbeddingConfig { m, tau, max_points: 10_000 }).unwrap();
        prop_assert_eq!(cloud.len(), t - span);
        prop_assert_eq!(cloud.dim(), m);
        for n in 0..cloud.len() {
            for j in 0..m {
                prop_assert_eq!(cloud.point(n)[j], samples[n + j * tau]);
            }
        }
    }

    #[test]
    fn subsample_is_idempotent_and_keeps_endpoints(
        cloud in cloud_strategy(40),
        k in 2usize..=50,
    ) {
        let once = subsample(&cloud, k);
        prop_assert_eq!(once.len(), cloud.len().min(k));
        prop_assert_eq!(once.point(0), cloud.point(0));
        prop_assert_eq!(once.point(once.len() - 1), cloud.point(cloud.len() - 1));
        let twice = subsample(&once, k);
        prop_assert_eq!(&twice, &once);
    }

    #[test]
    fn estimated_delay_is_in_range(samples in series_strategy()) {
        let series = TimeSeries::new("s", samples.clone()).unwrap();
        let tau = estimate_delay(&series).unwrap();
        prop_assert!(tau >= 1);
        prop_assert!(tau <= (samples.len() / 2).max(1));
    }

    #[test]
    fn filtration_structure(cloud in cloud_strategy(10), links in any::<bool>()) {
        let n = cloud.len();
        let f = build_rips(&cloud, ScalePolicy::Diameter, links).unwrap();

        // sorted by value; faces precede cofaces; flag rule for triangles
        let mut seen_vertices = std::collections::HashSet::new();
        let mut edge_value = std::collections::HashMap::new();
        let mut last = f64::NEG_INFINITY;
        let mut edge_count = 0usize;
        for s in f.simplices() {
            prop_assert!(s.value() >= last);
            last = s.value();
            prop_assert!(s.value() <= f.eps_max());
            match s.dim() {
                0 => {
                    seen_vertices.insert(s.vertices()[0]);
                }
                1 => {
                    let [a, b] = [s.vertices()[0], s.vertices()[1]];
                    prop_assert!(seen_vertices.contains(&a) && seen_vertices.contains(&b));
                    edge_value.insert((a, b), s.value());
                    edge_count += 1;
                }
                _ => {
                    let v = s.vertices();
                    let max_edge = [(v[0], v[1]), (v[0], v[2]), (v[1], v[2])]
                        .iter()
                        .map(|e| *edge_value.get(e).expect("edge before triangle"))
                        .fold(f64::NEG_INFINITY, f64::max);
                    prop_assert_eq!(s.value(), max_edge);
                }
            }
        }
        // at the diameter cap every pair is connected
        prop_assert_eq!(edge_count, n * (n - 1) / 2);
        if links {
            for i in 0..n as u32 - 1 {
                prop_assert_eq!(edge_value[&(i, i + 1)], 0.0);
            }
        }
    }

    #[test]
    fn homology_pair_accounting(cloud in cloud_strategy(10), links in any::<bool>()) {
        let n = cloud.len();
        let f = build_rips(&cloud, ScalePolicy::Diameter, links).unwrap();
        let d = compute_persistence(&f).unwrap();
        let dim0: Vec<_> = d.pairs_in_dim(0).collect();
        prop_assert_eq!(dim0.len(), n, "one dim-0 pair per vertex");
        for p in d.pairs() {
            prop_assert!(p.birth >= 0.0 && p.birth <= d.eps_max());
            if let Death::Finite(death) = p.death {
                prop_assert!(death >= p.birth && death <= d.eps_max());
            }
        }
        if links {
            // the temporal path connects everything at value 0
            let essentials = dim0.iter().filter(|p| p.death.is_essential()).count();
            prop_assert_eq!(essentials, 1);
            for p in &dim0 {
                if let Death::Finite(death) = p.death {
                    prop_assert_eq!((p.birth, death), (0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn euler_characteristic_matches_betti_alternation(
        cloud in cloud_strategy(9),
        links in any::<bool>(),
        fixed in prop::option::of(0.5..15.0f64),
    ) {
        let scale = match fixed {
            Some(e) => ScalePolicy::Fixed(e),
            None => ScalePolicy::Diameter,
        };
        let f = build_rips(&cloud, scale, links).unwrap();
        let d = compute_persistence(&f).unwrap();
        let count_dim =
            |k: usize| f.simplices().iter().filter(|s| s.dim() == k).count() as i64;
        let (v, e, t) = (count_dim(0), count_dim(1), count_dim(2));
        let b0 = d.pairs_in_dim(0).filter(|p| p.death.is_essential()).count() as i64;
        let b1 = d.pairs_in_dim(1).filter(|p| p.death.is_essential()).count() as i64;
        let finite_h1 = d.pairs_in_dim(1).count() as i64 - b1;
        // triangles either create 2-cycles or kill 1-cycles
        let b2 = t - finite_h1;
        prop_assert_eq!(v - e + t, b0 - b1 + b2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_agrees_with_rank_oracle(
        cloud in cloud_strategy(8),
        links in any::<bool>(),
        fixed in prop::option::of(0.5..20.0f64),
    ) {
        let scale = match fixed {
            Some(e) => ScalePolicy::Fixed(e),
            None => ScalePolicy::Diameter,
        };
        let f = build_rips(&cloud, scale, links).unwrap();
        let fast = compute_persistence(&f).unwrap();
        let slow = naive_persistence_oracle(&f).unwrap();
        prop_assert_eq!(canon(&fast), canon(&slow));
    }

    #[test]
    fn metric_axioms(
        x in diagram_strategy(1),
        y in diagram_strategy(1),
        z in diagram_strategy(1),
    ) {
        let w = |a: &PersistenceDiagram, b: &PersistenceDiagram| wasserstein1(a, b).unwrap();
        let bk = |a: &PersistenceDiagram, b: &PersistenceDiagram| bottleneck(a, b).unwrap();

        prop_assert_eq!(w(&x, &x), 0.0);
        prop_assert_eq!(w(&x, &y), w(&y, &x));
        prop_assert_eq!(bk(&x, &y), bk(&y, &x));
        prop_assert!(w(&x, &z) <= w(&x, &y) + w(&y, &z) + 1e-9);
        prop_assert!(bk(&x, &z) <= bk(&x, &y) + bk(&y, &z) + 1e-9);
        // the max matched cost never exceeds the summed cost
        prop_assert!(bk(&x, &y) <= w(&x, &y) + 1e-9);
    }

    #[test]
    fn metric_ignores_zero_persistence_and_scales_exactly(
        x in diagram_strategy(1),
        y in diagram_strategy(1),
        pad in 0u16..1 << 8,
    ) {
        let with_pad = |d: &PersistenceDiagram| {
            let mut pairs = d.pairs().to_vec();
            let at = pad as f64 / 16.0;
            pairs.push(PersistencePair { dim: 1, birth: at, death: Death::Finite(at) });
            PersistenceDiagram::new(pairs, d.eps_max()).unwrap()
        };
        prop_assert_eq!(wasserstein1(&with_pad(&x), &y).unwrap(), wasserstein1(&x, &y).unwrap());
        prop_assert_eq!(bottleneck(&x, &with_pad(&y)).unwrap(), bottleneck(&x, &y).unwrap());

        let doubled = |d: &PersistenceDiagram| {
            let pairs = d
                .pairs()
                .iter()
                .map(|p| PersistencePair {
                    dim: p.dim,
                    birth: 2.0 * p.birth,
                    death: match p.death {
                        Death::Finite(v) => Death::Finite(2.0 * v),
                        Death::Essential => Death::Essential,
                    },
                })
                .collect();
            PersistenceDiagram::new(pairs, 2.0 * d.eps_max()).unwrap()
        };
        prop_assert_eq!(
            wasserstein1(&doubled(&x), &doubled(&y)).unwrap(),
            2.0 * wasserstein1(&x, &y).unwrap()
        );
        prop_assert_eq!(
            bottleneck(&doubled(&x), &doubled(&y)).unwrap(),
            2.0 * bottleneck(&x, &y).unwrap()
        );
    }
}
