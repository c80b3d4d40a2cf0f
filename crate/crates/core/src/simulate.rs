//! Forward simulation of basic-list evolution on a known dendrogram.
//!
//! Every slot evolves independently. Along a segment of `ℓ` swadesh the slot
//! is replaced by a brand-new cognate class with probability
//! `1 - exp(-ℓ/100)`, so two lects at path distance `L` share a slot with
//! probability `exp(-L/100)`. Chains count as segments of their width.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dendrogram::{Dendrogram, NodeRef, Root, Side};
use crate::error::{Error, Result};
use crate::lexstat::{coincidence_from_cognacy, CognacyTable, CoincidenceMatrix};
use crate::retro::{build_dendrogram, redistribute_residuals};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub tree: Dendrogram,
    pub slots: usize,
    pub seed: u64,
    pub replicates: usize,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(Error::InvalidParameter("slots must be >= 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be >= 1".into()));
        }
        Ok(())
    }
}

struct Segment {
    from: usize,
    to: usize,
    keep: f64,
}

/// Segments in an order where every `from` point is reached before it is read.
fn segments(tree: &Dendrogram) -> (usize, usize, Vec<Segment>) {
    let k = tree.leaves().len();
    let chains = tree.chains();
    let point = |n: NodeRef, side: Option<Side>| match n {
        NodeRef::Leaf(i) => i,
        NodeRef::Chain(c) => {
            let s = side.unwrap_or(chains[c].attach);
            k + 2 * c + usize::from(s == Side::Right)
        }
    };
    let keep = |len: f64| (-len / 100.0).exp();
    let mut out = Vec::new();
    let mut stack = Vec::new();
    let origin = match tree.root() {
        Root::Single(n) => {
            stack.push(*n);
            point(*n, None)
        }
        Root::Link(link) => {
            out.push(Segment {
                from: point(link.left, None),
                to: point(link.right, None),
                keep: keep(link.length),
            });
            stack.push(link.left);
            stack.push(link.right);
            point(link.left, None)
        }
    };
    while let Some(n) = stack.pop() {
        if let NodeRef::Chain(c) = n {
            let ch = &chains[c];
            out.push(Segment {
                from: point(n, Some(ch.attach)),
                to: point(n, Some(ch.attach.opposite())),
                keep: keep(ch.width),
            });
            for side in [Side::Left, Side::Right] {
                let e = ch.edge(side);
                out.push(Segment {
                    from: point(n, Some(side)),
                    to: point(e.node, None),
                    keep: keep(e.length),
                });
                stack.push(e.node);
            }
        }
    }
    (k + 2 * chains.len(), origin, out)
}

fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// Simulates replicate `replicate` of `cfg`. Each replicate draws from its
/// own stream of the master seed, so results do not depend on scheduling.
pub fn simulate_replicate(cfg: &SimulationConfig, replicate: usize) -> Result<CognacyTable> {
    cfg.validate()?;
    let (npoints, origin, segs) = segments(&cfg.tree);
    let k = cfg.tree.leaves().len();
    let mut rng = replicate_rng(cfg.seed, replicate);
    let mut classes = vec![vec![0u32; cfg.slots]; k];
    let mut state = vec![0u32; npoints];
    for slot in 0..cfg.slots {
        // Class ids only need to be unique within a slot.
        let mut fresh = 0u32;
        state[origin] = 0;
        for s in &segs {
            state[s.to] = if rng.random::<f64>() < s.keep {
                state[s.from]
            } else {
                fresh += 1;
                fresh
            };
        }
        for (leaf, row) in classes.iter_mut().enumerate() {
            row[slot] = state[leaf];
        }
    }
    CognacyTable::from_parts(
        cfg.tree.labels(),
        (0..cfg.slots).map(|s| format!("s{s}")).collect(),
        classes,
        vec![vec![false; cfg.slots]; k],
    )
}

/// First replicate of `cfg`.
pub fn simulate_cognacy(cfg: &SimulationConfig) -> Result<CognacyTable> {
    simulate_replicate(cfg, 0)
}

pub fn simulate_replicates(cfg: &SimulationConfig) -> Result<Vec<CognacyTable>> {
    cfg.validate()?;
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| simulate_replicate(cfg, r))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthComparison {
    pub what: String,
    pub truth: f64,
    pub reconstructed: f64,
}

impl LengthComparison {
    pub fn error(&self) -> f64 {
        self.reconstructed - self.truth
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub topology_match: bool,
    pub lengths: Vec<LengthComparison>,
    pub max_abs_error: f64,
    pub reconstructed: Dendrogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub trials: Vec<TrialOutcome>,
}

impl RecoveryReport {
    pub fn all_topologies_match(&self) -> bool {
        self.trials.iter().all(|t| t.topology_match)
    }

    pub fn max_abs_error(&self) -> f64 {
        self.trials
            .iter()
            .map(|t| t.max_abs_error)
            .fold(0.0, f64::max)
    }
}

fn clade_name(t: &Dendrogram, n: NodeRef) -> String {
    let labels: Vec<String> = t.clade_labels(n).into_iter().collect();
    format!("{{{}}}", labels.join(","))
}

/// Compares a reconstruction with the generating tree, matching chains by
/// clade. Chains of non-zero width must also agree on which child sits at
/// the attach endpoint.
pub fn compare_trees(truth: &Dendrogram, reconstructed: &Dendrogram) -> TrialOutcome {
    const WIDTH_TOL: f64 = 1e-9;
    let mut topology_match = truth.clades() == reconstructed.clades();
    let mut lengths = Vec::new();
    for (c, tc) in truth.chains().iter().enumerate() {
        let clade = truth.clade_labels(NodeRef::Chain(c));
        let Some(rc) = reconstructed.find_clade(&clade) else {
            topology_match = false;
            continue;
        };
        let rch = &reconstructed.chains()[rc];
        let name = clade_name(truth, NodeRef::Chain(c));
        lengths.push(LengthComparison {
            what: format!("width {name}"),
            truth: tc.width,
            reconstructed: rch.width,
        });
        lengths.push(LengthComparison {
            what: format!("depth {name}"),
            truth: truth.depth(NodeRef::Chain(c)),
            reconstructed: reconstructed.depth(NodeRef::Chain(rc)),
        });
        for side in [Side::Left, Side::Right] {
            let te = tc.edge(side);
            let child = truth.clade_labels(te.node);
            let rside = [Side::Left, Side::Right]
                .into_iter()
                .find(|&s| reconstructed.clade_labels(rch.edge(s).node) == child);
            let Some(rside) = rside else {
                topology_match = false;
                continue;
            };
            if side == tc.attach && tc.width > WIDTH_TOL && rside != rch.attach {
                topology_match = false;
            }
            lengths.push(LengthComparison {
                what: format!("vertical {} under {name}", clade_name(truth, te.node)),
                truth: te.length,
                reconstructed: rch.edge(rside).length,
            });
        }
    }
    match (truth.root_link(), reconstructed.root_link()) {
        (Some(t), Some(r)) => lengths.push(LengthComparison {
            what: "root link".into(),
            truth: t.length,
            reconstructed: r.length,
        }),
        (None, None) => {}
        _ => topology_match = false,
    }
    let max_abs_error = lengths.iter().map(|l| l.error().abs()).fold(0.0, f64::max);
    TrialOutcome {
        topology_match,
        lengths,
        max_abs_error,
        reconstructed: reconstructed.clone(),
    }
}

/// Reconstructs from `measured` and compares with `truth`.
pub fn recover_from_matrix(
    truth: &Dendrogram,
    measured: &CoincidenceMatrix,
) -> Result<TrialOutcome> {
    let built = build_dendrogram(measured)?;
    let adjusted = redistribute_residuals(&built.tree, measured)?;
    Ok(compare_trees(truth, &adjusted))
}

/// Simulates every replicate and reconstructs it.
pub fn recovery_trial(cfg: &SimulationConfig) -> Result<RecoveryReport> {
    if cfg.tree.leaves().len() < 2 {
        return Err(Error::TooFewLanguages {
            required: 2,
            got: cfg.tree.leaves().len(),
        });
    }
    let tables = simulate_replicates(cfg)?;
    let trials = tables
        .iter()
        .map(|t| recover_from_matrix(&cfg.tree, &coincidence_from_cognacy(t, false)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveryReport { trials })
}
