use isolect::decay::{sample_curves, time_quadratic, time_starostin, DecayParams};
use isolect::formats::{
    parse_matrix, parse_tree_description, write_matrix, write_tree_description,
};
use isolect::simulate::recover_from_matrix;
use isolect::{
    build_dendrogram, case_two, coincidence_from_cognacy, coincidence_from_distance,
    distance_from_coincidence, distance_matrix, redistribute_residuals, theoretical_matrix,
    ChainNode, CognacyTable, CoincidenceMatrix, Dendrogram, DistanceMatrix, Edge, Leaf, NodeRef,
    Root, RootLink, RootVariant, Side, SwadeshDistance,
};
use proptest::prelude::*;

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("x{i}")).collect()
}

/// Symmetric matrix of distances with a shared base, so the entries are
/// comparable in size but not tied.
fn distance_matrix_strategy() -> impl Strategy<Value = CoincidenceMatrix> {
    (3usize..7).prop_flat_map(|k| {
        prop::collection::vec(5.0f64..80.0, k * (k - 1) / 2).prop_map(move |cells| {
            let mut d = vec![vec![0.0; k]; k];
            let mut it = cells.into_iter();
            for i in 0..k {
                for j in (i + 1)..k {
                    let v = it.next().unwrap();
                    d[i][j] = v;
                    d[j][i] = v;
                }
            }
            DistanceMatrix::from_fn(labels(k), |i, j| d[i][j])
                .unwrap()
                .to_coincidence(None)
                .unwrap()
        })
    })
}

/// Random time-consistent tree. Join depths grow fast enough that every
/// pair joined next is closer than any pair joined later.
fn random_tree(
    k: usize,
    picks: &[(prop::sample::Index, prop::sample::Index)],
    widths: &[f64],
    attach: &[bool],
) -> Dendrogram {
    let leaves = labels(k).into_iter().map(|label| Leaf { label }).collect();
    let mut active: Vec<(NodeRef, f64)> = (0..k).map(|i| (NodeRef::Leaf(i), 0.0)).collect();
    let mut chains = Vec::new();
    let mut depth = 4.0;
    for t in 0..k - 2 {
        let i = picks[t].0.index(active.len());
        let (a, ha) = active.remove(i);
        let j = picks[t].1.index(active.len());
        let (b, hb) = active.remove(j);
        chains.push(ChainNode {
            width: widths[t],
            left: Edge {
                node: a,
                length: depth - ha,
            },
            right: Edge {
                node: b,
                length: depth - hb,
            },
            attach: if attach[t] { Side::Right } else { Side::Left },
        });
        active.push((NodeRef::Chain(chains.len() - 1), depth));
        depth = 3.0 * depth + 4.0;
    }
    let root = Root::Link(RootLink {
        length: depth,
        variant: RootVariant::Unresolved,
        left: active[0].0,
        right: active[1].0,
    });
    Dendrogram::new(leaves, chains, root).unwrap()
}

fn paths(m: &CoincidenceMatrix) -> Vec<(String, String, f64)> {
    let mut out: Vec<_> = distance_matrix(m)
        .pairs()
        .map(|(i, j, l)| {
            let (a, b) = (m.labels()[i].clone(), m.labels()[j].clone());
            if a < b {
                (a, b, l)
            } else {
                (b, a, l)
            }
        })
        .collect();
    out.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
    out
}

fn close(a: &[(String, String, f64)], b: &[(String, String, f64)], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.0 == y.0 && x.1 == y.1 && (x.2 - y.2).abs() <= tol)
}

proptest! {
    #[test]
    fn distance_round_trip(l in 0.0f64..500.0) {
        let c = coincidence_from_distance(SwadeshDistance::new(l).unwrap());
        let back = distance_from_coincidence(c).value();
        prop_assert!((back - l).abs() <= 1e-9 * l.max(1.0));
    }

    #[test]
    fn borrowing_exclusion_shifts_every_pair(
        shared in prop::collection::vec(prop::collection::vec(0u32..3, 3), 40..90),
        n3 in 1usize..10,
    ) {
        // Slots borrowed in all languages with distinct loan classes.
        let k = 3;
        let n0 = shared.len() + n3;
        let mut classes = vec![Vec::new(); k];
        let mut borrowed = vec![Vec::new(); k];
        for _ in 0..n3 {
            for l in 0..k {
                classes[l].push(100 + l as u32);
                borrowed[l].push(true);
            }
        }
        for slot in &shared {
            for l in 0..k {
                classes[l].push(slot[l]);
                borrowed[l].push(false);
            }
        }
        let t = CognacyTable::from_parts(labels(k), (0..n0).map(|i| format!("s{i}")).collect(), classes, borrowed).unwrap();
        let with = coincidence_from_cognacy(&t, false).unwrap();
        let without = coincidence_from_cognacy(&t, true).unwrap();
        let s = 100.0 * (n0 as f64 / (n0 - n3) as f64).ln();
        for (i, j, c) in with.pairs() {
            if c.value() == 0.0 {
                continue;
            }
            let drop = distance_from_coincidence(c).value() - distance_from_coincidence(without.get(i, j)).value();
            prop_assert!((drop - s).abs() < 1e-9);
        }
    }

    #[test]
    fn build_is_label_order_invariant(m in distance_matrix_strategy(), rot in 0usize..6) {
        let k = m.len();
        let perm: Vec<usize> = (0..k).map(|i| (i + rot) % k).collect();
        let relabeled: Vec<String> = perm.iter().map(|&p| m.labels()[p].clone()).collect();
        let p = CoincidenceMatrix::from_fn(relabeled, None, |i, j| m.get(perm[i], perm[j]).value()).unwrap();
        let a = build_dendrogram(&m).unwrap().tree;
        let b = build_dendrogram(&p).unwrap().tree;
        prop_assert_eq!(a.clades(), b.clades());
        prop_assert!(close(&paths(&theoretical_matrix(&a)), &paths(&theoretical_matrix(&b)), 1e-9));
    }

    #[test]
    fn tree_distances_are_additive(m in distance_matrix_strategy()) {
        let t = build_dendrogram(&m).unwrap().tree;
        prop_assert!(t.is_time_consistent(1e-9));
        let d = t.path_matrix();
        let k = d.len();
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    prop_assert!(d.get(a, c) <= d.get(a, b) + d.get(b, c) + 1e-9);
                }
            }
        }
        for a in 0..k {
            for b in (a + 1)..k {
                for c in (b + 1)..k {
                    for e in (c + 1)..k {
                        let mut s = [
                            d.get(a, b) + d.get(c, e),
                            d.get(a, c) + d.get(b, e),
                            d.get(a, e) + d.get(b, c),
                        ];
                        s.sort_by(f64::total_cmp);
                        prop_assert!((s[2] - s[1]).abs() < 1e-9, "four-point condition {:?}", s);
                    }
                }
            }
        }
    }

    #[test]
    fn builder_agrees_with_three_language_closed_form(
        l12 in 1.0f64..50.0, extra in 0.0f64..40.0, frac in 0.0f64..1.0,
    ) {
        let l13 = l12 + extra;
        let lo = l12.max(l13 - l12);
        let l23 = lo + frac * (l12 + l13 - lo);
        let c = case_two(l12, l13, l23).unwrap();
        let d = [[0.0, l12, l13], [l12, 0.0, l23], [l13, l23, 0.0]];
        let m = DistanceMatrix::from_fn(labels(3), |i, j| d[i][j]).unwrap().to_coincidence(None).unwrap();
        let r = build_dendrogram(&m).unwrap();
        prop_assert!((r.steps[0].chain_width - c.chain_width).abs() < 1e-9);
        prop_assert!((r.steps[0].left_vertical - c.divergence).abs() < 1e-9);
        prop_assert!((r.tree.root_link().unwrap().length - c.stem).abs() < 1e-9);
    }

    #[test]
    fn tree_metric_is_recovered_exactly(
        (k, picks, widths, attach) in (3usize..7).prop_flat_map(|k| (
            Just(k),
            prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), k - 1),
            prop::collection::vec(0.0f64..2.0, k - 1),
            prop::collection::vec(any::<bool>(), k - 1),
        ))
    ) {
        let truth = random_tree(k, &picks, &widths, &attach);
        let th = theoretical_matrix(&truth);
        let outcome = recover_from_matrix(&truth, &th).unwrap();
        prop_assert!(outcome.topology_match, "{:?}", outcome);
        prop_assert!(outcome.max_abs_error < 1e-6, "{:?}", outcome.lengths);
        let built = build_dendrogram(&th).unwrap();
        prop_assert!(close(&paths(&theoretical_matrix(&built.tree)), &paths(&th), 1e-6));
    }

    #[test]
    fn root_variants_keep_path_lengths(m in distance_matrix_strategy(), f in 0.0f64..1.0) {
        let t = build_dendrogram(&m).unwrap().tree;
        let base = paths(&theoretical_matrix(&t));
        for v in [RootVariant::MaxChain, RootVariant::DeepPoint, RootVariant::Parametrized(f)] {
            let alt = t.with_root_variant(v).unwrap();
            prop_assert!(close(&paths(&theoretical_matrix(&alt)), &base, 1e-12));
        }
    }

    #[test]
    fn redistribution_never_worsens_fit(m in distance_matrix_strategy()) {
        let t = build_dendrogram(&m).unwrap().tree;
        let adj = redistribute_residuals(&t, &m).unwrap();
        let before = isolect::fit_report(&t, &m).unwrap().rms_l;
        let after = isolect::fit_report(&adj, &m).unwrap().rms_l;
        prop_assert!(after <= before + 1e-9);
        prop_assert!(adj.is_time_consistent(1e-9));
    }

    #[test]
    fn tree_description_round_trip(m in distance_matrix_strategy()) {
        let t = build_dendrogram(&m).unwrap().tree;
        let back = parse_tree_description(&write_tree_description(&t)).unwrap();
        prop_assert!(close(&paths(&theoretical_matrix(&back)), &paths(&theoretical_matrix(&t)), 1e-9));
    }

    #[test]
    fn matrix_text_round_trip(m in distance_matrix_strategy()) {
        let back = parse_matrix(&write_matrix(&m)).unwrap();
        prop_assert_eq!(back.labels(), m.labels());
        for (i, j, c) in m.pairs() {
            prop_assert!((back.get(i, j).value() - c.value()).abs() <= 5e-4);
        }
    }

    #[test]
    fn calibration_curves_increase(lambda in 0.05f64..0.3, shift in 0.0f64..4.0) {
        let p = DecayParams::new(lambda, 1.0, shift).unwrap();
        for s in sample_curves(200.0, 1.0, &p, 1.0).unwrap() {
            for w in s.points.windows(2) {
                prop_assert!(w[1].1 > w[0].1, "{} not increasing at L={}", s.curve.name(), w[1].0);
            }
        }
    }

    #[test]
    fn starostin_is_scaled_quadratic(l in 0.01f64..300.0, lambda in 0.05f64..0.3) {
        let p = DecayParams::new(lambda, 1.0, 0.0).unwrap();
        let r = time_starostin(l, &p).unwrap() / time_quadratic(l, &p).unwrap();
        prop_assert!((r - (0.005 * l).exp()).abs() < 1e-12 * r);
    }
}
