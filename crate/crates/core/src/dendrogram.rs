//! Dendrograms of isolect chains joined by divergence lines.
//!
//! An internal node is an isolect chain: a horizontal segment of width `b`
//! swadesh whose two endpoints each carry one child via a vertical
//! divergence line. The parent of a chain connects to one of its endpoints,
//! the attach side. The two subtrees left at the end of a reconstruction are
//! joined by a [`RootLink`] whose length is known but whose shape is not.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::lexstat::{
    coincidence_from_distance, distance_matrix, CoincidenceMatrix, DistanceMatrix, SwadeshDistance,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    Leaf(usize),
    Chain(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// A divergence line from a chain endpoint down to a child.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub node: NodeRef,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainNode {
    pub width: f64,
    pub left: Edge,
    pub right: Edge,
    /// Endpoint that receives the edge towards the parent.
    pub attach: Side,
}

impl ChainNode {
    pub fn edge(&self, side: Side) -> &Edge {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub label: String,
}

/// How the final link between the two top subtrees is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootVariant {
    /// Only the length is known.
    Unresolved,
    /// As wide a chain as the subtree depths allow.
    MaxChain,
    /// A single ancestral point with two divergence lines.
    DeepPoint,
    /// Fraction of the admissible width realized as a chain, in `[0, 1]`.
    Parametrized(f64),
}

impl RootVariant {
    fn chain_fraction(self) -> f64 {
        match self {
            RootVariant::Unresolved | RootVariant::DeepPoint => 0.0,
            RootVariant::MaxChain => 1.0,
            RootVariant::Parametrized(f) => f,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootLink {
    pub length: f64,
    pub variant: RootVariant,
    pub left: NodeRef,
    pub right: NodeRef,
}

/// Concrete shape of a root link given the depths of the subtrees it joins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootGeometry {
    pub depth: f64,
    pub chain_width: f64,
    pub left_vertical: f64,
    pub right_vertical: f64,
}

impl RootLink {
    /// Places the link so that both verticals end at the same depth and the
    /// chain takes the configured share of what is left after the depth gap
    /// between the subtrees is bridged. If the link is shorter than that gap
    /// the shallower subtree gets the whole length as a vertical.
    pub fn geometry(&self, left_depth: f64, right_depth: f64) -> RootGeometry {
        let gap = (left_depth - right_depth).abs();
        if self.length < gap {
            let (lv, rv, depth) = if left_depth < right_depth {
                (self.length, 0.0, left_depth + self.length)
            } else {
                (0.0, self.length, right_depth + self.length)
            };
            return RootGeometry {
                depth,
                chain_width: 0.0,
                left_vertical: lv,
                right_vertical: rv,
            };
        }
        let span = self.length - gap;
        let f = self.variant.chain_fraction();
        let chain_width = f * span;
        let depth = left_depth.max(right_depth) + (1.0 - f) * span / 2.0;
        RootGeometry {
            depth,
            chain_width,
            left_vertical: depth - left_depth,
            right_vertical: depth - right_depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Root {
    /// Degenerate tree: the whole system is one node.
    Single(NodeRef),
    Link(RootLink),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaves: Vec<Leaf>,
    chains: Vec<ChainNode>,
    root: Root,
}

fn check_length(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTree(format!(
            "{what} = {v} must be finite and >= 0"
        )))
    }
}

impl Dendrogram {
    /// Validates and assembles a tree. Every node must be reachable from the
    /// root exactly once.
    pub fn new(leaves: Vec<Leaf>, chains: Vec<ChainNode>, root: Root) -> Result<Self> {
        let mut labels = HashSet::new();
        for l in &leaves {
            if !labels.insert(l.label.as_str()) {
                return Err(Error::DuplicateLabel(l.label.clone()));
            }
        }
        if leaves.is_empty() {
            return Err(Error::InvalidTree("no leaves".into()));
        }
        for (i, c) in chains.iter().enumerate() {
            check_length(&format!("width of chain {i}"), c.width)?;
            check_length(&format!("left edge of chain {i}"), c.left.length)?;
            check_length(&format!("right edge of chain {i}"), c.right.length)?;
        }
        let tops = match &root {
            Root::Single(n) => vec![*n],
            Root::Link(link) => {
                check_length("root link length", link.length)?;
                if let RootVariant::Parametrized(f) = link.variant {
                    if !(0.0..=1.0).contains(&f) {
                        return Err(Error::InvalidTree(format!(
                            "root fraction {f} outside [0, 1]"
                        )));
                    }
                }
                vec![link.left, link.right]
            }
        };
        let mut seen = HashSet::new();
        let mut stack = tops;
        while let Some(n) = stack.pop() {
            let ok = match n {
                NodeRef::Leaf(i) => i < leaves.len(),
                NodeRef::Chain(i) => i < chains.len(),
            };
            if !ok {
                return Err(Error::InvalidTree(format!("dangling reference {n:?}")));
            }
            if !seen.insert(n) {
                return Err(Error::InvalidTree(format!("{n:?} reached twice")));
            }
            if let NodeRef::Chain(i) = n {
                stack.push(chains[i].left.node);
                stack.push(chains[i].right.node);
            }
        }
        if seen.len() != leaves.len() + chains.len() {
            return Err(Error::InvalidTree("unreachable nodes".into()));
        }
        Ok(Self {
            leaves,
            chains,
            root,
        })
    }

    /// A tree of one leaf.
    pub fn single_leaf(label: &str) -> Self {
        Self {
            leaves: vec![Leaf {
                label: label.to_string(),
            }],
            chains: Vec::new(),
            root: Root::Single(NodeRef::Leaf(0)),
        }
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn chains(&self) -> &[ChainNode] {
        &self.chains
    }

    pub fn root(&self) -> &Root {
        &self.root
    }

    pub fn root_link(&self) -> Option<&RootLink> {
        match &self.root {
            Root::Link(l) => Some(l),
            Root::Single(_) => None,
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.leaves.iter().map(|l| l.label.clone()).collect()
    }

    pub fn leaf_index(&self, label: &str) -> Option<usize> {
        self.leaves.iter().position(|l| l.label == label)
    }

    /// Shape of the root link under its current variant.
    pub fn root_geometry(&self) -> Option<RootGeometry> {
        self.root_link()
            .map(|l| l.geometry(self.depth(l.left), self.depth(l.right)))
    }

    /// Returns a copy with a different root-link variant.
    pub fn with_root_variant(&self, variant: RootVariant) -> Result<Self> {
        let mut t = self.clone();
        if let Root::Link(l) = &mut t.root {
            if let RootVariant::Parametrized(f) = variant {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::InvalidTree(format!(
                        "root fraction {f} outside [0, 1]"
                    )));
                }
            }
            l.variant = variant;
        }
        Ok(t)
    }

    /// Replaces every length, keeping topology and orientation.
    pub(crate) fn with_lengths(
        &self,
        widths: &[f64],
        edges: &[(f64, f64)],
        root_length: Option<f64>,
    ) -> Self {
        let mut t = self.clone();
        for (i, c) in t.chains.iter_mut().enumerate() {
            c.width = widths[i].max(0.0);
            c.left.length = edges[i].0.max(0.0);
            c.right.length = edges[i].1.max(0.0);
        }
        if let (Root::Link(l), Some(r)) = (&mut t.root, root_length) {
            l.length = r.max(0.0);
        }
        t
    }

    /// Depth below the present of a node: 0 for leaves, and for a chain the
    /// longer of the two routes through its children.
    pub fn depth(&self, n: NodeRef) -> f64 {
        match n {
            NodeRef::Leaf(_) => 0.0,
            NodeRef::Chain(i) => {
                let c = &self.chains[i];
                (self.depth(c.left.node) + c.left.length)
                    .max(self.depth(c.right.node) + c.right.length)
            }
        }
    }

    /// True if, for every chain, both children reach the present after the
    /// same total vertical length (within `tol`).
    pub fn is_time_consistent(&self, tol: f64) -> bool {
        self.chains.iter().all(|c| {
            let l = self.depth(c.left.node) + c.left.length;
            let r = self.depth(c.right.node) + c.right.length;
            (l - r).abs() <= tol
        })
    }

    /// Parent chain and the side through which `n` hangs from it.
    fn parents(&self) -> HashMap<NodeRef, (usize, Side)> {
        let mut p = HashMap::new();
        for (i, c) in self.chains.iter().enumerate() {
            p.insert(c.left.node, (i, Side::Left));
            p.insert(c.right.node, (i, Side::Right));
        }
        p
    }

    /// Leaf indices below `n`, sorted.
    pub fn leaves_under(&self, n: NodeRef) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![n];
        while let Some(x) = stack.pop() {
            match x {
                NodeRef::Leaf(i) => out.push(i),
                NodeRef::Chain(i) => {
                    stack.push(self.chains[i].left.node);
                    stack.push(self.chains[i].right.node);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Clade of every chain as a set of labels.
    pub fn clades(&self) -> BTreeSet<BTreeSet<String>> {
        (0..self.chains.len())
            .map(|i| self.clade_labels(NodeRef::Chain(i)))
            .collect()
    }

    pub fn clade_labels(&self, n: NodeRef) -> BTreeSet<String> {
        self.leaves_under(n)
            .into_iter()
            .map(|i| self.leaves[i].label.clone())
            .collect()
    }

    /// Finds the chain whose clade is exactly `labels`.
    pub fn find_clade(&self, labels: &BTreeSet<String>) -> Option<usize> {
        (0..self.chains.len()).find(|&i| &self.clade_labels(NodeRef::Chain(i)) == labels)
    }

    fn ancestry(&self, parents: &HashMap<NodeRef, (usize, Side)>, leaf: usize) -> Ancestry {
        let mut steps = Vec::new();
        let mut cur = NodeRef::Leaf(leaf);
        let mut to_attach = 0.0;
        while let Some(&(c, side)) = parents.get(&cur) {
            let chain = &self.chains[c];
            let up = to_attach + chain.edge(side).length;
            steps.push((c, side, up));
            to_attach = up
                + if side == chain.attach {
                    0.0
                } else {
                    chain.width
                };
            cur = NodeRef::Chain(c);
        }
        Ancestry {
            steps,
            top: cur,
            to_top_attach: to_attach,
        }
    }

    fn path_between(&self, a: &Ancestry, b: &Ancestry) -> f64 {
        for &(c, sa, ua) in &a.steps {
            if let Some(&(_, sb, ub)) = b.steps.iter().find(|s| s.0 == c) {
                debug_assert!(sa != sb);
                return ua + self.chains[c].width + ub;
            }
        }
        match &self.root {
            Root::Link(link) if a.top != b.top => a.to_top_attach + link.length + b.to_top_attach,
            // Same top node and no common chain: the leaves coincide.
            _ => 0.0,
        }
    }

    /// Length of the leaf-to-leaf path: divergence lines plus the full width
    /// of every chain the path crosses between different endpoints.
    pub fn path_distance(&self, a: &str, b: &str) -> Result<SwadeshDistance> {
        let ia = self
            .leaf_index(a)
            .ok_or_else(|| Error::UnknownLeaf(a.to_string()))?;
        let ib = self
            .leaf_index(b)
            .ok_or_else(|| Error::UnknownLeaf(b.to_string()))?;
        if ia == ib {
            return SwadeshDistance::new(0.0);
        }
        let parents = self.parents();
        let d = self.path_between(&self.ancestry(&parents, ia), &self.ancestry(&parents, ib));
        SwadeshDistance::new(d)
    }

    /// All leaf-to-leaf path distances, labels in leaf order.
    pub fn path_matrix(&self) -> DistanceMatrix {
        let parents = self.parents();
        let anc: Vec<Ancestry> = (0..self.leaves.len())
            .map(|i| self.ancestry(&parents, i))
            .collect();
        DistanceMatrix::from_fn(self.labels(), |i, j| self.path_between(&anc[i], &anc[j]))
            .expect("validated tree has finite non-negative lengths")
    }
}

struct Ancestry {
    /// (chain, side entered, distance from the leaf to that endpoint)
    steps: Vec<(usize, Side, f64)>,
    top: NodeRef,
    to_top_attach: f64,
}

/// Coefficients implied by the tree, `C = 100 exp(-L/100)` of every path.
pub fn theoretical_matrix(d: &Dendrogram) -> CoincidenceMatrix {
    d.path_matrix()
        .to_coincidence(None)
        .expect("path distances convert to valid coefficients")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFit {
    pub a: String,
    pub b: String,
    pub measured_l: f64,
    pub theoretical_l: f64,
    /// theoretical minus measured
    pub residual_l: f64,
    pub measured_c: f64,
    pub theoretical_c: f64,
    pub residual_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub pairs: Vec<PairFit>,
    pub rms_l: f64,
    pub max_abs_l: f64,
    pub rms_c: f64,
    pub max_abs_c: f64,
}

/// Compares tree-implied distances with a measured matrix.
pub fn fit_report(d: &Dendrogram, measured: &CoincidenceMatrix) -> Result<FitReport> {
    let tree_labels: BTreeSet<&str> = d.leaves.iter().map(|l| l.label.as_str()).collect();
    let m_labels: BTreeSet<&str> = measured.labels().iter().map(String::as_str).collect();
    if tree_labels != m_labels {
        let diff: Vec<&str> = tree_labels
            .symmetric_difference(&m_labels)
            .copied()
            .collect();
        return Err(Error::LabelMismatch(diff.join(", ")));
    }
    let dm = distance_matrix(measured);
    let paths = d.path_matrix();
    let labels = measured.labels();
    let pairs: Vec<PairFit> = dm
        .pairs()
        .map(|(i, j, ml)| {
            let ti = paths.index_of(&labels[i]).expect("labels checked");
            let tj = paths.index_of(&labels[j]).expect("labels checked");
            let tl = paths.get(ti, tj);
            let mc = measured.get(i, j).value();
            let tc =
                coincidence_from_distance(SwadeshDistance::new(tl).expect("valid path")).value();
            PairFit {
                a: labels[i].clone(),
                b: labels[j].clone(),
                measured_l: ml,
                theoretical_l: tl,
                residual_l: tl - ml,
                measured_c: mc,
                theoretical_c: tc,
                residual_c: tc - mc,
            }
        })
        .collect();
    let n = pairs.len().max(1) as f64;
    let rms = |f: fn(&PairFit) -> f64| (pairs.iter().map(|p| f(p).powi(2)).sum::<f64>() / n).sqrt();
    let max = |f: fn(&PairFit) -> f64| pairs.iter().map(|p| f(p).abs()).fold(0.0, f64::max);
    Ok(FitReport {
        rms_l: rms(|p| p.residual_l),
        max_abs_l: max(|p| p.residual_l),
        rms_c: rms(|p| p.residual_c),
        max_abs_c: max(|p| p.residual_c),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three languages: 1 and 2 hang from the ends of a chain of width 4 at
    /// depth 8; 3 joins through the endpoint above 2 with a link of 18.
    pub(crate) fn three_leaf() -> Dendrogram {
        Dendrogram::new(
            vec![
                Leaf { label: "1".into() },
                Leaf { label: "2".into() },
                Leaf { label: "3".into() },
            ],
            vec![ChainNode {
                width: 4.0,
                left: Edge {
                    node: NodeRef::Leaf(0),
                    length: 8.0,
                },
                right: Edge {
                    node: NodeRef::Leaf(1),
                    length: 8.0,
                },
                attach: Side::Right,
            }],
            Root::Link(RootLink {
                length: 18.0,
                variant: RootVariant::Unresolved,
                left: NodeRef::Chain(0),
                right: NodeRef::Leaf(2),
            }),
        )
        .unwrap()
    }

    #[test]
    fn path_sums_on_three_leaf_tree() {
        let t = three_leaf();
        let p = |a, b| t.path_distance(a, b).unwrap().value();
        assert_eq!(p("1", "2"), 8.0 + 4.0 + 8.0);
        assert_eq!(p("1", "3"), 8.0 + 4.0 + 18.0);
        assert_eq!(p("2", "3"), 8.0 + 18.0);
        assert_eq!(p("3", "2"), p("2", "3"));
        assert_eq!(p("1", "1"), 0.0);
        assert!(matches!(
            t.path_distance("1", "9"),
            Err(Error::UnknownLeaf(_))
        ));
    }

    #[test]
    fn theoretical_coincidences() {
        let t = three_leaf();
        let m = theoretical_matrix(&t);
        assert!((m.get(0, 1).value() - 81.873).abs() < 5e-4);

        let half = 100.0 * 2f64.ln() / 2.0;
        let pair = Dendrogram::new(
            vec![Leaf { label: "a".into() }, Leaf { label: "b".into() }],
            vec![ChainNode {
                width: 0.0,
                left: Edge {
                    node: NodeRef::Leaf(0),
                    length: half,
                },
                right: Edge {
                    node: NodeRef::Leaf(1),
                    length: half,
                },
                attach: Side::Left,
            }],
            Root::Single(NodeRef::Chain(0)),
        )
        .unwrap();
        assert!((theoretical_matrix(&pair).get(0, 1).value() - 50.0).abs() < 1e-9);

        let single = theoretical_matrix(&Dendrogram::single_leaf("x"));
        assert_eq!(single.len(), 1);
        assert_eq!(single.pair_count(), 0);
    }

    #[test]
    fn fit_report_on_exact_and_perturbed() {
        let t = three_leaf();
        let exact = theoretical_matrix(&t);
        let r = fit_report(&t, &exact).unwrap();
        assert!(r.rms_l < 1e-9 && r.max_abs_l < 1e-9);

        let dm = t.path_matrix();
        let perturbed = DistanceMatrix::from_fn(dm.labels().to_vec(), |i, j| {
            dm.get(i, j) + if (i, j) == (0, 2) { 1.0 } else { 0.0 }
        })
        .unwrap()
        .to_coincidence(None)
        .unwrap();
        let r = fit_report(&t, &perturbed).unwrap();
        assert!((r.max_abs_l - 1.0).abs() < 1e-9);
        assert!((r.rms_l - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        let p = r.pairs.iter().find(|p| p.a == "1" && p.b == "3").unwrap();
        assert!((p.residual_l + 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_report_label_mismatch() {
        let t = three_leaf();
        let m =
            CoincidenceMatrix::from_fn(vec!["1".into(), "2".into(), "x".into()], None, |_, _| 90.0)
                .unwrap();
        match fit_report(&t, &m).unwrap_err() {
            Error::LabelMismatch(s) => assert_eq!(s, "3, x"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_trees_rejected() {
        let leaves = vec![Leaf { label: "a".into() }, Leaf { label: "b".into() }];
        let link = |l: f64| {
            Root::Link(RootLink {
                length: l,
                variant: RootVariant::Unresolved,
                left: NodeRef::Leaf(0),
                right: NodeRef::Leaf(1),
            })
        };
        assert!(Dendrogram::new(leaves.clone(), vec![], link(-1.0)).is_err());
        assert!(Dendrogram::new(leaves.clone(), vec![], link(f64::NAN)).is_err());
        assert!(Dendrogram::new(leaves.clone(), vec![], Root::Single(NodeRef::Leaf(0))).is_err());
        assert!(Dendrogram::new(leaves, vec![], link(3.0)).is_ok());
    }

    #[test]
    fn root_geometry_variants() {
        let link = RootLink {
            length: 32.0,
            variant: RootVariant::DeepPoint,
            left: NodeRef::Leaf(0),
            right: NodeRef::Leaf(1),
        };
        let g = link.geometry(0.0, 0.0);
        assert_eq!(
            (g.left_vertical, g.right_vertical, g.chain_width),
            (16.0, 16.0, 0.0)
        );
        let g = RootLink {
            variant: RootVariant::MaxChain,
            ..link.clone()
        }
        .geometry(0.0, 0.0);
        assert_eq!(
            (g.left_vertical, g.right_vertical, g.chain_width),
            (0.0, 0.0, 32.0)
        );
        // Depth gap of 10 is bridged before any chain is laid.
        let g = RootLink {
            variant: RootVariant::MaxChain,
            ..link.clone()
        }
        .geometry(10.0, 0.0);
        assert_eq!(
            (g.left_vertical, g.right_vertical, g.chain_width, g.depth),
            (0.0, 10.0, 22.0, 10.0)
        );
        let g = link.geometry(10.0, 0.0);
        assert_eq!(
            (g.left_vertical, g.right_vertical, g.depth),
            (11.0, 21.0, 21.0)
        );
        let short = RootLink {
            length: 4.0,
            ..link
        };
        let g = short.geometry(10.0, 0.0);
        assert_eq!((g.left_vertical, g.right_vertical), (0.0, 4.0));
    }
}
