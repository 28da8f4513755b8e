//! How much the single-parent approximation loses against the exact chain
//! rule, on samples and, for finite-support models, by enumeration.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use super::{
    ancestry_of, context_counts, score_tree_exact, ContextKey, Order, PathConditionedModel,
};
use crate::error::{Error, Result};
use crate::grammar::multiset_minus;
use crate::par;
use crate::source::{generate_corpus, BranchingModel, GenerationConfig, RootDist, Target};
use crate::tree::{Outcome, SentenceTree, Slot, TreeNode};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceConfig {
    pub samples: usize,
    pub seed: u64,
    pub generation: GenerationConfig,
    /// How many largest-gap trees to keep.
    pub worst: usize,
    /// Largest support to enumerate for the exact divergence; 0 disables it.
    pub enumeration_limit: usize,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        DivergenceConfig {
            samples: 10_000,
            seed: 0,
            generation: GenerationConfig::default(),
            worst: 5,
            enumeration_limit: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeGap {
    pub index: usize,
    pub exact: f64,
    pub order1: f64,
    pub tree: String,
}

impl TreeGap {
    pub fn gap(&self) -> f64 {
        self.exact - self.order1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactDivergence {
    pub kl: f64,
    pub mean_abs_gap: f64,
    pub support: usize,
    /// Total probability of the enumerated trees.
    pub total_mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceReport {
    pub order: Order,
    pub samples: usize,
    /// Sampled trees cut by the node cap; they are not scored.
    pub capped: usize,
    pub kl_estimate: f64,
    pub kl_stderr: f64,
    pub mean_abs_gap: f64,
    pub worst: Vec<TreeGap>,
    pub exact: Option<ExactDivergence>,
    /// The order-1 projection the gaps were measured against.
    pub projection: PathConditionedModel,
}

impl DivergenceReport {
    /// Machine-readable metrics, one `(key, value)` per line of output.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        let mut m = vec![
            ("kl_exact_vs_order1", self.kl_estimate),
            ("kl_exact_vs_order1_stderr", self.kl_stderr),
            ("mean_abs_logprob_gap", self.mean_abs_gap),
            ("samples", self.samples as f64),
            ("capped", self.capped as f64),
        ];
        if let Some(e) = &self.exact {
            m.push(("kl_enumerated", e.kl));
            m.push(("support_size", e.support as f64));
        }
        m
    }
}

impl fmt::Display for DivergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model order: {}", self.order)?;
        writeln!(
            f,
            "sampled trees: {} ({} capped, not scored)",
            self.samples, self.capped
        )?;
        writeln!(
            f,
            "KL(exact || order-1) estimate: {:.6} +/- {:.6} (1 s.e.)",
            self.kl_estimate, self.kl_stderr
        )?;
        writeln!(
            f,
            "mean |log P_exact - log P_order1|: {:.6}",
            self.mean_abs_gap
        )?;
        if let Some(e) = &self.exact {
            writeln!(
                f,
                "enumerated KL over {} trees (mass {:.9}): {:.6}",
                e.support, e.total_mass, e.kl
            )?;
        }
        if !self.worst.is_empty() {
            writeln!(f, "largest gaps:")?;
            for g in &self.worst {
                writeln!(
                    f,
                    "  #{:<6} gap {:+.6}  exact {:.6}  order-1 {:.6}  {}",
                    g.index,
                    g.gap(),
                    g.exact,
                    g.order1,
                    g.tree
                )?;
            }
        }
        Ok(())
    }
}

pub const SUPPORT_NODES_PER_TREE: usize = 32;

/// Every complete tree the model generates from `roots` with its
/// probability, or `None` when there are more than `limit` of them or the
/// pending partial trees hold more than `SUPPORT_NODES_PER_TREE * limit` nodes.
pub fn enumerate_support<M: BranchingModel + ?Sized>(
    model: &M,
    roots: &RootDist,
    limit: usize,
) -> Result<Option<Vec<(SentenceTree, f64)>>> {
    struct State {
        nodes: Vec<TreeNode>,
        consumed: Vec<Option<crate::grammar::Connector>>,
        queue: VecDeque<usize>,
        prob: f64,
    }
    let lexicon = model.lexicon();
    let limit_steps = model.context_steps();
    let mut open = Vec::new();
    for (root, p) in roots.entries() {
        if *p <= 0.0 {
            continue;
        }
        let entry = lexicon
            .frame_entry(root, None)
            .ok_or_else(|| Error::UnknownWord {
                word: root.clone(),
                position: 0,
            })?;
        open.push(State {
            nodes: vec![TreeNode {
                term: root.clone(),
                entry,
                parent: None,
                expanded: false,
                slots: Vec::new(),
            }],
            consumed: vec![None],
            queue: VecDeque::from([0]),
            prob: *p,
        });
    }
    let node_budget = limit.saturating_mul(SUPPORT_NODES_PER_TREE);
    let mut held: usize = open.iter().map(|s| s.nodes.len()).sum();
    let mut done = Vec::new();
    while let Some(mut st) = open.pop() {
        held -= st.nodes.len();
        let Some(i) = st.queue.pop_front() else {
            let mut nodes = st.nodes;
            for n in &mut nodes {
                n.expanded = true;
            }
            done.push((SentenceTree::from_nodes(nodes, false), st.prob));
            if done.len() > limit {
                return Ok(None);
            }
            continue;
        };
        let entry = lexicon.entry(st.nodes[i].entry);
        let frame = match &st.consumed[i] {
            Some(c) => multiset_minus(entry.connectors(), std::slice::from_ref(c))
                .expect("frame carries its parent edge"),
            None => entry.connectors().to_vec(),
        };
        let view = SentenceTree::from_nodes(st.nodes.clone(), false);
        let context = ancestry_of(&view, i, limit_steps);
        let term = st.nodes[i].term.clone();
        let mut options: Vec<Vec<(Target, f64)>> = Vec::with_capacity(frame.len());
        for c in &frame {
            let table = model.table(&context, &term, c)?;
            options.push(
                table
                    .iter()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(t, p)| (t.clone(), p))
                    .collect(),
            );
        }
        let mut choice = vec![0usize; frame.len()];
        loop {
            let mut next = State {
                nodes: st.nodes.clone(),
                consumed: st.consumed.clone(),
                queue: st.queue.clone(),
                prob: st.prob,
            };
            let mut slots = Vec::with_capacity(frame.len());
            for (k, c) in frame.iter().enumerate() {
                let (target, p) = &options[k][choice[k]];
                next.prob *= p;
                let outcome = match target {
                    Target::Tt => Outcome::Tt,
                    Target::Term(u) => {
                        let mate = c.mate();
                        let id = next.nodes.len();
                        next.nodes.push(TreeNode {
                            term: u.clone(),
                            entry: lexicon
                                .frame_entry(u, Some(&mate))
                                .expect("validated partner"),
                            parent: Some(i),
                            expanded: false,
                            slots: Vec::new(),
                        });
                        next.consumed.push(Some(mate));
                        next.queue.push_back(id);
                        Outcome::Child(id)
                    }
                };
                slots.push(Slot {
                    connector: c.clone(),
                    outcome,
                });
            }
            next.nodes[i].slots = slots;
            next.nodes[i].expanded = true;
            held += next.nodes.len();
            open.push(next);
            if open.len() + done.len() > limit || held > node_budget {
                return Ok(None);
            }
            // Odometer over the per-slot options.
            let mut k = 0;
            while k < choice.len() {
                choice[k] += 1;
                if choice[k] < options[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    }
    done.sort_by_cached_key(|d| d.0.to_string());
    Ok(Some(done))
}

fn weighted_context_mass(trees: &[(SentenceTree, f64)], order: Order) -> BTreeMap<ContextKey, f64> {
    let mut mass = BTreeMap::new();
    for (tree, p) in trees {
        for (k, row) in context_counts(std::slice::from_ref(tree), order) {
            *mass.entry(k).or_insert(0.0) += p * row.values().sum::<f64>();
        }
    }
    mass
}

/// The order-1 projection weighted by exact context visit probabilities,
/// and the divergence from it, when the support has at most `limit` trees.
pub fn exact_divergence(
    model: &PathConditionedModel,
    roots: &RootDist,
    limit: usize,
) -> Result<Option<(ExactDivergence, PathConditionedModel)>> {
    let Some(support) = enumerate_support(model, roots, limit)? else {
        return Ok(None);
    };
    let mass = weighted_context_mass(&support, model.order());
    let weighted = model.clone().with_mass(mass)?;
    let q1 = weighted.project(Order::Finite(1)).into_owned();
    let mut kl = 0.0;
    let mut abs = 0.0;
    let mut total = 0.0;
    for (tree, p) in &support {
        let lp = score_tree_exact(tree, model, roots)?;
        let lq = score_tree_exact(tree, &q1, roots)?;
        kl += p * (lp - lq);
        abs += p * (lp - lq).abs();
        total += p;
    }
    Ok(Some((
        ExactDivergence {
            kl,
            mean_abs_gap: abs,
            support: support.len(),
            total_mass: total,
        },
        q1,
    )))
}

/// Samples trees from `model` and compares exact scores with scores under
/// its order-1 projection, weighting contexts by their visits in the sample.
pub fn divergence_report(
    model: &PathConditionedModel,
    roots: &RootDist,
    config: &DivergenceConfig,
) -> Result<DivergenceReport> {
    if config.samples == 0 {
        return Err(Error::InvalidArgument(
            "divergence needs at least one sample".into(),
        ));
    }
    let generated = generate_corpus(
        model,
        roots,
        config.samples,
        &config.generation,
        config.seed,
    )?;
    let trees: Vec<(usize, SentenceTree)> = generated
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.tree.cap_hit())
        .map(|(i, g)| (i, g.tree))
        .collect();
    let capped = config.samples - trees.len();
    let plain: Vec<SentenceTree> = trees.iter().map(|(_, t)| t.clone()).collect();
    let mass: BTreeMap<ContextKey, f64> = context_counts(&plain, model.order())
        .into_iter()
        .map(|(k, row)| (k, row.values().sum()))
        .collect();
    let projection = model
        .clone()
        .with_mass(mass)?
        .project(Order::Finite(1))
        .into_owned();

    let scored = par::map(&trees, |(i, t)| -> Result<TreeGap> {
        Ok(TreeGap {
            index: *i,
            exact: score_tree_exact(t, model, roots)?,
            order1: score_tree_exact(t, &projection, roots)?,
            tree: t.to_string(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let n = scored.len();
    let (kl_estimate, kl_stderr, mean_abs_gap) = if n == 0 {
        (0.0, 0.0, 0.0)
    } else {
        let nf = n as f64;
        let mean = scored.iter().map(TreeGap::gap).sum::<f64>() / nf;
        let abs = scored.iter().map(|g| g.gap().abs()).sum::<f64>() / nf;
        let var = if n > 1 {
            scored.iter().map(|g| (g.gap() - mean).powi(2)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        (mean, (var / nf).sqrt(), abs)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scored[b]
            .gap()
            .abs()
            .total_cmp(&scored[a].gap().abs())
            .then(scored[a].index.cmp(&scored[b].index))
    });
    let mut seen = std::collections::BTreeSet::new();
    let worst = order
        .into_iter()
        .filter(|&k| seen.insert(scored[k].tree.clone()))
        .take(config.worst)
        .map(|k| scored[k].clone())
        .collect();

    let exact = if config.enumeration_limit > 0 {
        exact_divergence(model, roots, config.enumeration_limit)?.map(|(e, _)| e)
    } else {
        None
    };

    Ok(DivergenceReport {
        order: model.order(),
        samples: config.samples,
        capped,
        kl_estimate,
        kl_stderr,
        mean_abs_gap,
        worst,
        exact,
        projection,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    /// Weight of the full model against its order-1 projection.
    pub strength: f64,
    pub kl_estimate: f64,
    pub kl_stderr: f64,
    pub mean_abs_gap: f64,
    pub exact_kl: Option<f64>,
}

/// Divergence along the path from the order-1 projection (strength 0) to
/// the full model (strength 1). Every point reuses the same seed.
pub fn divergence_sweep(
    model: &PathConditionedModel,
    roots: &RootDist,
    config: &DivergenceConfig,
    strengths: &[f64],
) -> Result<Vec<SweepPoint>> {
    let exact = if config.enumeration_limit > 0 {
        exact_divergence(model, roots, config.enumeration_limit)?.map(|(_, q1)| q1)
    } else {
        None
    };
    let base = match exact {
        Some(q1) => q1,
        None => {
            let probe = DivergenceConfig {
                worst: 0,
                enumeration_limit: 0,
                ..*config
            };
            divergence_report(model, roots, &probe)?.projection
        }
    };
    strengths
        .iter()
        .map(|&s| {
            let mixed = model.interpolate(&base, s)?;
            let r = divergence_report(
                &mixed,
                roots,
                &DivergenceConfig {
                    worst: 0,
                    ..*config
                },
            )?;
            Ok(SweepPoint {
                strength: s,
                kl_estimate: r.kl_estimate,
                kl_stderr: r.kl_stderr,
                mean_abs_gap: r.mean_abs_gap,
                exact_kl: r.exact.map(|e| e.kl),
            })
        })
        .collect()
}
