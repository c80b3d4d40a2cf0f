//! Reconstruction of the prior state of a language system.
//!
//! Two languages determine only their distance. Three languages determine
//! a chain width and divergence length in closed form. Larger systems are
//! built greedily: the closest pair of active points is joined into a chain
//! whose width is the mean of the distance differences seen from every
//! other active point, corrected for the depths already reached by the two
//! points, so that every divergence line ends at the present.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::dendrogram::{
    fit_report, ChainNode, Dendrogram, Edge, Leaf, NodeRef, Root, RootLink, RootVariant, Side,
};
use crate::error::{Error, Result};
use crate::lexstat::{distance_matrix, CoincidenceMatrix};
use crate::lsq;

const TRIANGLE_TOL: f64 = 1e-9;

fn check_distance(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDistance {
            pair: name.to_string(),
            value: v,
        })
    }
}

/// The one-parameter family of configurations compatible with a single
/// distance: both languages diverge `a'` swadesh ago from the ends of a chain
/// of width `L12 - 2a'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLanguageFamily {
    pub total: f64,
}

impl TwoLanguageFamily {
    /// Chain width for divergence length `a_prime`, which must lie in `[0, L12/2]`.
    pub fn chain_width(&self, a_prime: f64) -> Result<f64> {
        if !(0.0..=self.total / 2.0).contains(&a_prime) {
            return Err(Error::InvalidParameter(format!(
                "a' = {a_prime} outside [0, {}]",
                self.total / 2.0
            )));
        }
        Ok(self.total - 2.0 * a_prime)
    }

    /// Divergence from a single ancestral point `L12/2` ago.
    pub fn pure_divergence(&self) -> f64 {
        self.total / 2.0
    }

    /// A present-day chain of width `L12` (the lexifier-pidgin limit).
    pub fn contemporary_chain_width(&self) -> f64 {
        self.total
    }

    pub fn dendrogram(&self, labels: [&str; 2], a_prime: f64) -> Result<Dendrogram> {
        let width = self.chain_width(a_prime)?;
        Dendrogram::new(
            vec![
                Leaf {
                    label: labels[0].into(),
                },
                Leaf {
                    label: labels[1].into(),
                },
            ],
            vec![ChainNode {
                width,
                left: Edge {
                    node: NodeRef::Leaf(0),
                    length: a_prime,
                },
                right: Edge {
                    node: NodeRef::Leaf(1),
                    length: a_prime,
                },
                attach: Side::Left,
            }],
            Root::Single(NodeRef::Chain(0)),
        )
    }
}

pub fn case_one(l12: f64) -> Result<TwoLanguageFamily> {
    check_distance("(1, 2)", l12)?;
    Ok(TwoLanguageFamily { total: l12 })
}

/// Closed-form reconstruction of three languages where 1 and 2 are closest.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseTwo {
    pub chain_width: f64,
    pub divergence: f64,
    /// Distance from the chain endpoint nearest language 3 to language 3.
    pub stem: f64,
    /// Stem computed by walking from language 1.
    pub stem_via_first: f64,
    /// Stem computed by walking from language 2.
    pub stem_via_second: f64,
    /// True if language 3 joins through the endpoint above language 2.
    pub third_joins_second: bool,
    pub warnings: Vec<String>,
}

impl CaseTwo {
    /// Deepest admissible position of the last link: half the distance from
    /// language 3 to the nearer of 1 and 2.
    pub fn max_link_depth(&self) -> f64 {
        (self.divergence + self.stem) / 2.0
    }

    pub fn dendrogram(&self, labels: [&str; 3]) -> Result<Dendrogram> {
        Dendrogram::new(
            labels
                .iter()
                .map(|l| Leaf {
                    label: l.to_string(),
                })
                .collect(),
            vec![ChainNode {
                width: self.chain_width,
                left: Edge {
                    node: NodeRef::Leaf(0),
                    length: self.divergence,
                },
                right: Edge {
                    node: NodeRef::Leaf(1),
                    length: self.divergence,
                },
                attach: if self.third_joins_second {
                    Side::Right
                } else {
                    Side::Left
                },
            }],
            Root::Link(RootLink {
                length: self.stem,
                variant: RootVariant::Unresolved,
                left: NodeRef::Chain(0),
                right: NodeRef::Leaf(2),
            }),
        )
    }
}

pub fn case_two(l12: f64, l13: f64, l23: f64) -> Result<CaseTwo> {
    check_distance("(1, 2)", l12)?;
    check_distance("(1, 3)", l13)?;
    check_distance("(2, 3)", l23)?;
    if l12 > l13.min(l23) {
        return Err(Error::InvalidParameter(format!(
            "L12 = {l12} must be the smallest of the three distances"
        )));
    }
    let mut warnings = Vec::new();
    if l13 > l12 + l23 + TRIANGLE_TOL || l23 > l12 + l13 + TRIANGLE_TOL {
        warnings.push(format!(
            "triangle inequality violated: L12={l12}, L13={l13}, L23={l23}"
        ));
    }
    let signed = l13 - l23;
    let third_joins_second = signed >= 0.0;
    let mut b = signed.abs();
    if b > l12 {
        warnings.push(format!("chain width {b} exceeds L12 = {l12}; clamped"));
        b = l12;
    }
    let a = (l12 - b) / 2.0;
    let (far, near) = if third_joins_second {
        (l13, l23)
    } else {
        (l23, l13)
    };
    let via_far = far - (a + b);
    let via_near = near - a;
    let (stem_via_first, stem_via_second) = if third_joins_second {
        (via_far, via_near)
    } else {
        (via_near, via_far)
    };
    let raw = (l13 + l23 - l12) / 2.0;
    if raw < 0.0 {
        warnings.push(format!("negative stem {raw}; clamped to 0"));
    }
    Ok(CaseTwo {
        chain_width: b,
        divergence: a,
        stem: raw.max(0.0),
        stem_via_first,
        stem_via_second,
        third_joins_second,
        warnings,
    })
}

/// Record of one agglomeration step.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinStep {
    pub node: NodeRef,
    pub left: NodeRef,
    pub right: NodeRef,
    pub left_name: String,
    pub right_name: String,
    /// Distance between the attach endpoints of the two joined points.
    pub pair_distance: f64,
    /// Mean over observers of `L(left, m) - L(right, m)`.
    pub mean_difference: f64,
    /// Width before taking the magnitude; its sign gives the orientation.
    pub signed_width: f64,
    pub chain_width: f64,
    /// Depth of the new chain below the present.
    pub depth: f64,
    pub left_vertical: f64,
    pub right_vertical: f64,
    pub attach: Side,
    /// Deviation of each observer's width estimate from the mean.
    pub observer_residuals: Vec<(String, f64)>,
    /// Path length added by clamping verticals at zero.
    pub clamp_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub tree: Dendrogram,
    pub steps: Vec<JoinStep>,
    pub warnings: Vec<String>,
}

struct Active {
    node: NodeRef,
    slot: usize,
    depth: f64,
    key: Vec<String>,
    name: String,
}

fn pair_cmp(a: (&[String], &[String]), b: (&[String], &[String])) -> Ordering {
    a.0.cmp(b.0).then_with(|| a.1.cmp(b.1))
}

/// Greedy reconstruction of a dendrogram from a coincidence matrix.
///
/// Ties between equally close pairs go to the lexicographically smallest
/// pair of (sorted) clade labels.
pub fn build_dendrogram(m: &CoincidenceMatrix) -> Result<Reconstruction> {
    let k = m.len();
    if k < 2 {
        return Err(Error::TooFewLanguages {
            required: 2,
            got: k,
        });
    }
    let dm = distance_matrix(m);
    let labels = m.labels();
    let slots = 2 * k - 1;
    let mut dist = vec![vec![0.0; slots]; slots];
    for (i, j, l) in dm.pairs() {
        check_distance(&format!("({}, {})", labels[i], labels[j]), l)?;
        dist[i][j] = l;
        dist[j][i] = l;
    }

    let leaves: Vec<Leaf> = labels.iter().map(|l| Leaf { label: l.clone() }).collect();
    let mut active: Vec<Active> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| Active {
            node: NodeRef::Leaf(i),
            slot: i,
            depth: 0.0,
            key: vec![l.clone()],
            name: l.clone(),
        })
        .collect();
    let mut chains: Vec<ChainNode> = Vec::new();
    let mut steps = Vec::new();
    let mut warnings = Vec::new();

    while active.len() > 2 {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..active.len() {
            for b in (a + 1)..active.len() {
                let (p, q) = if active[a].key <= active[b].key {
                    (a, b)
                } else {
                    (b, a)
                };
                let l = dist[active[p].slot][active[q].slot];
                let better = match best {
                    None => true,
                    Some((bp, bq, bl)) => {
                        l < bl
                            || (l == bl
                                && pair_cmp(
                                    (&active[p].key, &active[q].key),
                                    (&active[bp].key, &active[bq].key),
                                ) == Ordering::Less)
                    }
                };
                if better {
                    best = Some((p, q, l));
                }
            }
        }
        let (p, q, l) = best.expect("at least three active points");
        let (si, sj) = (active[p].slot, active[q].slot);
        let (hi, hj) = (active[p].depth, active[q].depth);

        let observers: Vec<usize> = (0..active.len()).filter(|&x| x != p && x != q).collect();
        let diffs: Vec<f64> = observers
            .iter()
            .map(|&x| dist[si][active[x].slot] - dist[sj][active[x].slot])
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let signed = mean + hi - hj;
        let attach = if signed >= 0.0 {
            Side::Right
        } else {
            Side::Left
        };
        let width = signed.abs();

        let raw_depth = (l - width + hi + hj) / 2.0;
        let depth = raw_depth.max(hi).max(hj);
        let (vi, vj) = (depth - hi, depth - hj);
        let clamp_residual = vi + vj + width - l;
        if clamp_residual > 0.0 {
            warnings.push(format!(
                "joining {} and {}: chain width {width:.3} exceeds what the distance {l:.3} allows; verticals clamped",
                active[p].name, active[q].name
            ));
        }

        for &x in &observers {
            let (dim, djm) = (dist[si][active[x].slot], dist[sj][active[x].slot]);
            if (dim - djm).abs() > l + TRIANGLE_TOL || l > dim + djm + TRIANGLE_TOL {
                warnings.push(format!(
                    "triangle inequality violated for {}, {}, {}",
                    active[p].name, active[q].name, active[x].name
                ));
            }
        }

        let c = chains.len();
        let node = NodeRef::Chain(c);
        let slot = k + c;
        for &x in &observers {
            let sx = active[x].slot;
            let stem = (dist[si][sx] + dist[sj][sx] - l) / 2.0;
            if stem < 0.0 {
                warnings.push(format!(
                    "negative distance {stem:.3} from the new chain to {}; clamped to 0",
                    active[x].name
                ));
            }
            dist[slot][sx] = stem.max(0.0);
            dist[sx][slot] = stem.max(0.0);
        }

        chains.push(ChainNode {
            width,
            left: Edge {
                node: active[p].node,
                length: vi,
            },
            right: Edge {
                node: active[q].node,
                length: vj,
            },
            attach,
        });
        let name = format!("({},{})", active[p].name, active[q].name);
        steps.push(JoinStep {
            node,
            left: active[p].node,
            right: active[q].node,
            left_name: active[p].name.clone(),
            right_name: active[q].name.clone(),
            pair_distance: l,
            mean_difference: mean,
            signed_width: signed,
            chain_width: width,
            depth,
            left_vertical: vi,
            right_vertical: vj,
            attach,
            observer_residuals: observers
                .iter()
                .zip(&diffs)
                .map(|(&x, d)| (active[x].name.clone(), d + hi - hj - signed))
                .collect(),
            clamp_residual,
        });

        let mut key: Vec<String> = active[p]
            .key
            .iter()
            .chain(&active[q].key)
            .cloned()
            .collect();
        key.sort();
        let merged = Active {
            node,
            slot,
            depth,
            key,
            name,
        };
        let (lo, hi_pos) = if p < q { (p, q) } else { (q, p) };
        active.remove(hi_pos);
        active.remove(lo);
        active.push(merged);
    }

    let (a, b) = if active[0].key <= active[1].key {
        (0, 1)
    } else {
        (1, 0)
    };
    let length = dist[active[a].slot][active[b].slot];
    let tree = Dendrogram::new(
        leaves,
        chains,
        Root::Link(RootLink {
            length,
            variant: RootVariant::Unresolved,
            left: active[a].node,
            right: active[b].node,
        }),
    )?;
    Ok(Reconstruction {
        tree,
        steps,
        warnings,
    })
}

/// Refits every length of `d` to `measured` by least squares, keeping the
/// topology and orientations.
///
/// The free parameters are the depth and width of every chain and the root
/// link length; divergence lines are depth differences, so the result keeps
/// every leaf at the present. All lengths stay non-negative. The result never
/// fits worse than the input.
pub fn redistribute_residuals(d: &Dendrogram, measured: &CoincidenceMatrix) -> Result<Dendrogram> {
    let before = fit_report(d, measured)?;
    let chains = d.chains();
    let nc = chains.len();
    let root_param = d.root_link().map(|_| 2 * nc);
    let np = 2 * nc + usize::from(root_param.is_some());
    if np == 0 {
        return Ok(d.clone());
    }
    let h = |n: NodeRef| match n {
        NodeRef::Chain(c) => Some(c),
        NodeRef::Leaf(_) => None,
    };

    let mut parent = vec![None; d.leaves().len()];
    let mut chain_parent = vec![None; nc];
    for (c, ch) in chains.iter().enumerate() {
        for side in [Side::Left, Side::Right] {
            match ch.edge(side).node {
                NodeRef::Leaf(i) => parent[i] = Some((c, side)),
                NodeRef::Chain(i) => chain_parent[i] = Some((c, side)),
            }
        }
    }
    // (chain, side, coefficients of the distance to that endpoint)
    let ancestry = |leaf: usize| {
        let mut steps: Vec<(usize, Side, Vec<f64>)> = Vec::new();
        let mut to_attach = vec![0.0; np];
        let mut child = NodeRef::Leaf(leaf);
        let mut up = parent[leaf];
        while let Some((c, side)) = up {
            let mut v = to_attach.clone();
            v[c] += 1.0;
            if let Some(cc) = h(child) {
                v[cc] -= 1.0;
            }
            to_attach = v.clone();
            if side != chains[c].attach {
                to_attach[nc + c] += 1.0;
            }
            steps.push((c, side, v));
            child = NodeRef::Chain(c);
            up = chain_parent[c];
        }
        (steps, child, to_attach)
    };

    let labels = measured.labels();
    let to_leaf: Vec<usize> = labels
        .iter()
        .map(|l| d.leaf_index(l).expect("labels checked by fit_report"))
        .collect();
    let anc: Vec<_> = (0..d.leaves().len()).map(ancestry).collect();
    let dm = distance_matrix(measured);
    let rows: Vec<(Vec<f64>, f64)> = dm
        .pairs()
        .map(|(i, j, l)| {
            let (sa, ta, va) = &anc[to_leaf[i]];
            let (sb, tb, vb) = &anc[to_leaf[j]];
            let row = sa
                .iter()
                .find_map(|(c, _, ua)| {
                    sb.iter().find(|s| s.0 == *c).map(|(_, _, ub)| {
                        let mut r: Vec<f64> = ua.iter().zip(ub).map(|(x, y)| x + y).collect();
                        r[nc + c] += 1.0;
                        r
                    })
                })
                .unwrap_or_else(|| {
                    debug_assert!(ta != tb);
                    let mut r: Vec<f64> = va.iter().zip(vb).map(|(x, y)| x + y).collect();
                    if let Some(rp) = root_param {
                        r[rp] += 1.0;
                    }
                    r
                });
            (row, l)
        })
        .collect();

    let a = DMatrix::from_fn(rows.len(), np, |r, c| rows[r].0[c]);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));

    let mut constraints: Vec<Vec<f64>> = Vec::new();
    for (c, ch) in chains.iter().enumerate() {
        for side in [Side::Left, Side::Right] {
            let mut g = vec![0.0; np];
            g[c] = 1.0;
            if let Some(cc) = h(ch.edge(side).node) {
                g[cc] -= 1.0;
            }
            constraints.push(g);
        }
        let mut g = vec![0.0; np];
        g[nc + c] = 1.0;
        constraints.push(g);
    }
    if let Some(rp) = root_param {
        let mut g = vec![0.0; np];
        g[rp] = 1.0;
        constraints.push(g);
    }
    let g = DMatrix::from_fn(constraints.len(), np, |r, c| constraints[r][c]);

    let mut x0 = DVector::zeros(np);
    for (c, ch) in chains.iter().enumerate() {
        x0[c] = d.depth(NodeRef::Chain(c));
        x0[nc + c] = ch.width;
    }
    if let (Some(rp), Some(link)) = (root_param, d.root_link()) {
        x0[rp] = link.length;
    }

    let x = lsq::solve(&a, &y, &g, x0);
    let depth_of = |n: NodeRef| h(n).map_or(0.0, |c| x[c]);
    let widths: Vec<f64> = (0..nc).map(|c| x[nc + c]).collect();
    let edges: Vec<(f64, f64)> = chains
        .iter()
        .enumerate()
        .map(|(c, ch)| {
            (
                x[c] - depth_of(ch.left.node),
                x[c] - depth_of(ch.right.node),
            )
        })
        .collect();
    let adjusted = d.with_lengths(&widths, &edges, root_param.map(|rp| x[rp]));
    let after = fit_report(&adjusted, measured)?;
    if after.rms_l > before.rms_l {
        return Ok(d.clone());
    }
    Ok(adjusted)
}

/// The two limiting shapes of the root link: the widest chain the subtree
/// depths allow, and a deep ancestral point.
pub fn root_variants(d: &Dendrogram) -> Result<(Dendrogram, Dendrogram)> {
    if d.root_link().is_none() {
        return Err(Error::InvalidTree("tree has no root link".into()));
    }
    Ok((
        d.with_root_variant(RootVariant::MaxChain)?,
        d.with_root_variant(RootVariant::DeepPoint)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dendrogram::theoretical_matrix;
    use crate::lexstat::DistanceMatrix;

    /// Matrix from the upper triangle of distances, row by row.
    fn from_distances(labels: &[&str], l: &[f64]) -> CoincidenceMatrix {
        let k = labels.len();
        let mut tri = vec![vec![0.0; k]; k];
        let mut cells = l.iter();
        for i in 0..k {
            for j in (i + 1)..k {
                let v = *cells.next().unwrap();
                tri[i][j] = v;
                tri[j][i] = v;
            }
        }
        DistanceMatrix::from_fn(labels.iter().map(|s| s.to_string()).collect(), |i, j| {
            tri[i][j]
        })
        .unwrap()
        .to_coincidence(None)
        .unwrap()
    }

    #[test]
    fn case_one_family() {
        let f = case_one(20.0).unwrap();
        assert_eq!(f.chain_width(10.0).unwrap(), 0.0);
        assert_eq!(f.chain_width(0.0).unwrap(), 20.0);
        assert_eq!(f.chain_width(6.0).unwrap(), 8.0);
        assert!(f.chain_width(10.5).is_err());
        assert!(case_one(-1.0).is_err());
        assert_eq!(f.contemporary_chain_width(), 20.0);
    }

    #[test]
    fn case_two_closed_form() {
        let c = case_two(20.0, 30.0, 26.0).unwrap();
        assert!((c.chain_width - 4.0).abs() < 1e-12);
        assert!((c.divergence - 8.0).abs() < 1e-12);
        assert!((c.stem - 18.0).abs() < 1e-12);
        assert!((c.stem_via_first - c.stem_via_second).abs() < 1e-12);
        assert!(c.third_joins_second);
        assert!((c.max_link_depth() - 13.0).abs() < 1e-12);
        let t = c.dendrogram(["1", "2", "3"]).unwrap();
        assert!((t.path_distance("1", "3").unwrap().value() - 30.0).abs() < 1e-12);
        assert!((t.path_distance("2", "3").unwrap().value() - 26.0).abs() < 1e-12);

        let sym = case_two(12.0, 12.0, 12.0).unwrap();
        assert_eq!(sym.chain_width, 0.0);
        assert_eq!(sym.divergence, 6.0);
        assert_eq!(sym.stem, 6.0);
    }

    #[test]
    fn case_two_orientation_and_errors() {
        let c = case_two(20.0, 26.0, 30.0).unwrap();
        assert!(!c.third_joins_second);
        assert!((c.chain_width - 4.0).abs() < 1e-12);
        assert!(case_two(30.0, 20.0, 26.0).is_err());
        // 1 and 3 are 50 apart but 1-2-3 only spans 30: clamped with warnings.
        let bad = case_two(10.0, 50.0, 20.0).unwrap();
        assert_eq!(bad.chain_width, 10.0);
        assert!(bad.warnings.len() >= 2);
    }

    #[test]
    fn builder_on_two_languages() {
        let m = from_distances(&["a", "b"], &[17.0]);
        let r = build_dendrogram(&m).unwrap();
        assert!(r.steps.is_empty());
        assert!((r.tree.root_link().unwrap().length - 17.0).abs() < 1e-9);
        let one = CoincidenceMatrix::from_fn(vec!["a".into()], None, |_, _| 100.0).unwrap();
        assert!(matches!(
            build_dendrogram(&one),
            Err(Error::TooFewLanguages { .. })
        ));
    }

    #[test]
    fn builder_matches_case_two() {
        let m = from_distances(&["1", "2", "3"], &[20.0, 30.0, 26.0]);
        let r = build_dendrogram(&m).unwrap();
        let s = &r.steps[0];
        assert!((s.chain_width - 4.0).abs() < 1e-9);
        assert!((s.left_vertical - 8.0).abs() < 1e-9);
        assert!((s.right_vertical - 8.0).abs() < 1e-9);
        assert_eq!(s.attach, Side::Right);
        assert!((r.tree.root_link().unwrap().length - 18.0).abs() < 1e-9);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn tie_break_is_lexicographic() {
        // All pairs equal: the first join must be (a, b).
        let m = from_distances(&["c", "b", "a", "d"], &[10.0; 6]);
        let r = build_dendrogram(&m).unwrap();
        assert_eq!(
            (
                r.steps[0].left_name.as_str(),
                r.steps[0].right_name.as_str()
            ),
            ("a", "b")
        );
    }

    #[test]
    fn depth_correction_for_deeper_nodes() {
        // a,b under a chain of width 6 at depth 10 attached at b's end; c joins
        // at depth 20 via a zero-width node. The a-b node is 10 deep, c is 0.
        let m = from_distances(&["a", "b", "c", "d"], &[26.0, 46.0, 56.0, 40.0, 50.0, 50.0]);
        let r = build_dendrogram(&m).unwrap();
        assert_eq!(r.steps.len(), 2);
        let s = &r.steps[1];
        assert!(s.chain_width.abs() < 1e-9, "{s:?}");
        assert!((s.depth - 20.0).abs() < 1e-9);
        assert!((r.tree.root_link().unwrap().length - 30.0).abs() < 1e-9);
        assert!(r.tree.is_time_consistent(1e-9));
    }

    #[test]
    fn redistribution_keeps_exact_fit_and_improves_noisy() {
        let m = from_distances(&["a", "b", "c", "d"], &[26.0, 46.0, 56.0, 40.0, 50.0, 50.0]);
        let r = build_dendrogram(&m).unwrap();
        let adj = redistribute_residuals(&r.tree, &m).unwrap();
        assert!(fit_report(&adj, &m).unwrap().rms_l < 1e-9);
        let th = theoretical_matrix(&adj);
        for (i, j, c) in th.pairs() {
            assert!((c.value() - m.get(i, j).value()).abs() < 1e-9);
        }

        // Start from the right topology with wrong lengths.
        let off = r
            .tree
            .with_lengths(&[3.0, 2.0], &[(12.0, 12.0), (9.0, 21.0)], Some(20.0));
        assert!(off.is_time_consistent(1e-9));
        let before = fit_report(&off, &m).unwrap().rms_l;
        let adj = redistribute_residuals(&off, &m).unwrap();
        let after = fit_report(&adj, &m).unwrap().rms_l;
        assert!(before > 1.0 && after < 1e-6, "{after} vs {before}");
        assert!(adj.is_time_consistent(1e-9));

        // A quartet's greedy fit already spreads the noise evenly.
        let noisy = from_distances(&["a", "b", "c", "d"], &[26.0, 49.0, 56.0, 40.0, 50.0, 50.0]);
        let r = build_dendrogram(&noisy).unwrap();
        let before = fit_report(&r.tree, &noisy).unwrap().rms_l;
        let adj = redistribute_residuals(&r.tree, &noisy).unwrap();
        let after = fit_report(&adj, &noisy).unwrap().rms_l;
        assert!(after <= before + 1e-12, "{after} > {before}");
    }

    #[test]
    fn root_variant_shapes() {
        let m = from_distances(&["a", "b"], &[32.0]);
        let t = build_dendrogram(&m).unwrap().tree;
        let (max, deep) = root_variants(&t).unwrap();
        let g = deep.root_geometry().unwrap();
        assert!((g.left_vertical - 16.0).abs() < 1e-9 && (g.right_vertical - 16.0).abs() < 1e-9);
        assert!((max.root_geometry().unwrap().chain_width - 32.0).abs() < 1e-9);

        let z = build_dendrogram(&from_distances(&["a", "b"], &[0.0]))
            .unwrap()
            .tree;
        let (max, deep) = root_variants(&z).unwrap();
        assert_eq!(max.root_geometry(), deep.root_geometry());
        assert!(root_variants(&Dendrogram::single_leaf("x")).is_err());
    }
}
