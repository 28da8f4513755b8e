//! Recursive breadth-first generation of sentence trees.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BranchingModel, RootDist, Target};
use crate::error::{Error, Result};
use crate::grammar::{multiset_minus, Connector};
use crate::par;
use crate::tree::{Outcome, PathStep, SentenceTree, Slot, TreeNode};

pub const DEFAULT_NODE_CAP: usize = 10_000;

/// How a node's connectors are resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GenerationMode {
    /// Every connector of the frame is drawn independently from its table.
    #[default]
    Permissive,
    /// A disjunct containing the parent-edge connector is chosen uniformly;
    /// its connectors are drawn and every other connector closes to `TT`.
    Strict,
}

impl std::str::FromStr for GenerationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "permissive" => Ok(GenerationMode::Permissive),
            "strict" => Ok(GenerationMode::Strict),
            _ => Err(Error::InvalidArgument(format!(
                "unknown generation mode `{s}` (expected permissive or strict)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenerationConfig {
    pub node_cap: usize,
    pub mode: GenerationMode,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            node_cap: DEFAULT_NODE_CAP,
            mode: GenerationMode::Permissive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    /// A table draw for a connector.
    Draw,
    /// Uniform choice of a disjunct (strict mode); `connector` is the
    /// consumed connector, or the first of the frame at the root.
    DisjunctChoice,
    /// A connector closed to `TT` outside the chosen disjunct.
    Forced,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub node: usize,
    pub connector: Connector,
    pub outcome: Target,
    /// In `(0, 1]`.
    pub prob: f64,
    pub event: TraceEvent,
}

/// Every random decision of one generation, in the order it was made.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenerationTrace {
    pub steps: Vec<TraceStep>,
}

impl GenerationTrace {
    pub fn log_prob(&self) -> f64 {
        self.steps.iter().map(|s| s.prob.ln()).sum()
    }

    pub fn prob(&self) -> f64 {
        self.steps.iter().map(|s| s.prob).product()
    }
}

/// One connector and the outcome drawn for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Draw {
    pub connector: Connector,
    pub target: Target,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub tree: SentenceTree,
    pub trace: GenerationTrace,
}

/// The generator for tree `index` of a run seeded with `seed`.
pub fn tree_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_one<M: BranchingModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    ancestry: &[PathStep],
    term: &str,
    connector: &Connector,
    rng: &mut R,
) -> Result<(Target, f64)> {
    let table = model.table(ancestry, term, connector)?;
    let (t, p) = table.sample(rng).ok_or_else(|| Error::InvalidTable {
        term: term.to_string(),
        connector: connector.to_string(),
        reason: "no outcome has positive probability".into(),
    })?;
    Ok((t.clone(), p))
}

/// Draws one outcome per connector of `connectors` independently, as for a
/// root or first-order node.
pub fn sample_neighbors<M: BranchingModel + ?Sized>(
    model: &M,
    term: &str,
    connectors: &[Connector],
    seed: u64,
) -> Result<(Vec<Draw>, GenerationTrace)> {
    if !model.lexicon().contains(term) {
        return Err(Error::UnknownWord {
            word: term.to_string(),
            position: 0,
        });
    }
    let mut rng = tree_rng(seed, 0);
    let mut draws = Vec::with_capacity(connectors.len());
    let mut trace = GenerationTrace::default();
    for c in connectors {
        let (target, prob) = draw_one(model, &[], term, c, &mut rng)?;
        trace.steps.push(TraceStep {
            node: 0,
            connector: c.clone(),
            outcome: target.clone(),
            prob,
            event: TraceEvent::Draw,
        });
        draws.push(Draw {
            connector: c.clone(),
            target,
        });
    }
    Ok((draws, trace))
}

/// Generates from `root` with the first stream of `seed`.
pub fn generate_tree<M: BranchingModel + ?Sized>(
    model: &M,
    root: &str,
    config: &GenerationConfig,
    seed: u64,
) -> Result<Generated> {
    generate_tree_with_rng(model, root, config, &mut tree_rng(seed, 0))
}

struct Pending {
    /// Step from the parent into this node.
    incoming: Option<PathStep>,
    consumed: Option<Connector>,
}

/// Ancestor steps of `node`, root first, keeping only the last `limit`.
fn ancestry(
    pending: &[Pending],
    parents: &[Option<usize>],
    node: usize,
    limit: Option<usize>,
) -> Vec<PathStep> {
    let mut out = Vec::new();
    let mut cur = node;
    while limit.is_none_or(|k| out.len() < k) {
        match (&pending[cur].incoming, parents[cur]) {
            (Some(step), Some(p)) => {
                out.push(step.clone());
                cur = p;
            }
            _ => break,
        }
    }
    out.reverse();
    out
}

pub fn generate_tree_with_rng<M: BranchingModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    root: &str,
    config: &GenerationConfig,
    rng: &mut R,
) -> Result<Generated> {
    if config.node_cap == 0 {
        return Err(Error::InvalidArgument("node cap must be at least 1".into()));
    }
    let lexicon = model.lexicon();
    let root_entry = lexicon
        .frame_entry(root, None)
        .ok_or_else(|| Error::UnknownWord {
            word: root.to_string(),
            position: 0,
        })?;
    let limit = model.context_steps();
    let mut nodes = vec![TreeNode {
        term: root.to_string(),
        entry: root_entry,
        parent: None,
        expanded: false,
        slots: Vec::new(),
    }];
    let mut parents = vec![None];
    let mut pending = vec![Pending {
        incoming: None,
        consumed: None,
    }];
    let mut trace = GenerationTrace::default();
    let mut queue = VecDeque::from([0usize]);
    let mut cap_hit = false;

    while let Some(i) = queue.pop_front() {
        let term = nodes[i].term.clone();
        let entry = lexicon.entry(nodes[i].entry);
        let consumed = pending[i].consumed.clone();
        let frame = match &consumed {
            Some(c) => multiset_minus(entry.connectors(), std::slice::from_ref(c))
                .expect("frame entry carries the consumed connector"),
            None => entry.connectors().to_vec(),
        };
        let context = ancestry(&pending, &parents, i, limit);
        let mark = trace.steps.len();

        // Connectors left free to draw; the rest are forced closed.
        let mut free = vec![true; frame.len()];
        if config.mode == GenerationMode::Strict {
            let options: Vec<_> = entry
                .disjuncts()
                .iter()
                .filter(|d| consumed.as_ref().is_none_or(|c| d.contains(c)))
                .collect();
            let k = rng.gen_range(0..options.len());
            let mut chosen = match &consumed {
                Some(c) => multiset_minus(options[k].connectors(), std::slice::from_ref(c))
                    .expect("disjunct contains the consumed connector"),
                None => options[k].connectors().to_vec(),
            };
            for (slot, c) in frame.iter().enumerate() {
                if let Some(pos) = chosen.iter().position(|x| x == c) {
                    chosen.swap_remove(pos);
                } else {
                    free[slot] = false;
                }
            }
            trace.steps.push(TraceStep {
                node: i,
                connector: consumed
                    .clone()
                    .or_else(|| frame.first().cloned())
                    .expect("a root frame is never empty"),
                outcome: Target::Term(term.clone()),
                prob: 1.0 / options.len() as f64,
                event: TraceEvent::DisjunctChoice,
            });
        }

        let mut outcomes = Vec::with_capacity(frame.len());
        for (slot, c) in frame.iter().enumerate() {
            let (target, prob, event) = if free[slot] {
                let (t, p) = draw_one(model, &context, &term, c, rng)?;
                (t, p, TraceEvent::Draw)
            } else {
                (Target::Tt, 1.0, TraceEvent::Forced)
            };
            trace.steps.push(TraceStep {
                node: i,
                connector: c.clone(),
                outcome: target.clone(),
                prob,
                event,
            });
            outcomes.push(target);
        }

        let children = outcomes
            .iter()
            .filter(|t| matches!(t, Target::Term(_)))
            .count();
        if nodes.len() + children > config.node_cap {
            trace.steps.truncate(mark);
            cap_hit = true;
            break;
        }
        let mut slots = Vec::with_capacity(frame.len());
        for (c, target) in frame.into_iter().zip(outcomes) {
            let outcome = match target {
                Target::Tt => Outcome::Tt,
                Target::Term(u) => {
                    let mate = c.mate();
                    let child_entry = lexicon.frame_entry(&u, Some(&mate)).ok_or_else(|| {
                        Error::InvalidTable {
                            term: term.clone(),
                            connector: c.to_string(),
                            reason: format!("`{u}` cannot plug into {c}"),
                        }
                    })?;
                    let id = nodes.len();
                    nodes.push(TreeNode {
                        term: u,
                        entry: child_entry,
                        parent: Some(i),
                        expanded: false,
                        slots: Vec::new(),
                    });
                    parents.push(Some(i));
                    pending.push(Pending {
                        incoming: Some(PathStep {
                            term: term.clone(),
                            connector: c.clone(),
                        }),
                        consumed: Some(mate),
                    });
                    queue.push_back(id);
                    Outcome::Child(id)
                }
            };
            slots.push(Slot {
                connector: c,
                outcome,
            });
        }
        nodes[i].slots = slots;
        nodes[i].expanded = true;
    }

    Ok(Generated {
        tree: SentenceTree::from_nodes(nodes, cap_hit),
        trace,
    })
}

/// Generates `n` trees; tree `i` uses stream `i` of `seed` for its root
/// draw and its expansion, so output is independent of scheduling.
pub fn generate_corpus<M: BranchingModel + ?Sized>(
    model: &M,
    roots: &RootDist,
    n: usize,
    config: &GenerationConfig,
    seed: u64,
) -> Result<Vec<Generated>> {
    par::map_range(n, |i| {
        let mut rng = tree_rng(seed, i as u64);
        let root = roots.sample(&mut rng).to_string();
        generate_tree_with_rng(model, &root, config, &mut rng)
    })
    .into_iter()
    .collect()
}
