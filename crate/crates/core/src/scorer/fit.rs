//! Count-ratio fitting of path-conditioned models from tree corpora.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{ancestry_of, ContextKey, Order, PathConditionedModel};
use crate::error::{Error, Result};
use crate::grammar::Lexicon;
use crate::par;
use crate::source::{admissible_targets, smoothed_table, RootDist, Target};
use crate::tree::{Outcome, SentenceTree};

pub type ContextCounts = BTreeMap<ContextKey, BTreeMap<Target, f64>>;

fn merge(mut a: ContextCounts, b: ContextCounts) -> ContextCounts {
    for (k, row) in b {
        let dst = a.entry(k).or_default();
        for (t, c) in row {
            *dst.entry(t).or_default() += c;
        }
    }
    a
}

/// Outcome counts of every slot in `trees`, keyed by context truncated to
/// `order`. Frontier nodes of capped trees contribute nothing.
pub fn context_counts(trees: &[SentenceTree], order: Order) -> ContextCounts {
    let limit = order.context_steps();
    par::map_reduce(
        trees,
        ContextCounts::new,
        |acc, tree| {
            for (i, n) in tree.nodes().iter().enumerate() {
                if n.slots.is_empty() {
                    continue;
                }
                let path = ancestry_of(tree, i, limit);
                for s in &n.slots {
                    let target = match s.outcome {
                        Outcome::Tt => Target::Tt,
                        Outcome::Child(c) => Target::Term(tree.node(c).term.clone()),
                    };
                    let key = ContextKey::new(path.clone(), &n.term, s.connector.clone());
                    *acc.entry(key).or_default().entry(target).or_default() += 1.0;
                }
            }
        },
        merge,
    )
}

/// Add-`alpha` count ratios over contexts of `order`, with visit counts as
/// context mass and empirical root frequencies. At order 1 with
/// `alpha > 0` every lexicon key gets a table.
pub fn fit_path_model(
    trees: &[SentenceTree],
    lexicon: Arc<Lexicon>,
    order: Order,
    alpha: f64,
) -> Result<PathConditionedModel> {
    if alpha < 0.0 || alpha.is_nan() {
        return Err(Error::NegativeAlpha(alpha));
    }
    if order == Order::Finite(0) {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    if trees.is_empty() && alpha == 0.0 {
        return Err(Error::EmptyCorpus);
    }
    for t in trees {
        t.validate(&lexicon)?;
    }
    let counts = context_counts(trees, order);
    let mut keys: Vec<ContextKey> = counts.keys().cloned().collect();
    if order == Order::Finite(1) && alpha > 0.0 {
        keys.extend(
            lexicon
                .source_keys()
                .into_iter()
                .map(|(t, c)| ContextKey::new(Vec::new(), &t, c)),
        );
        keys.sort();
        keys.dedup();
    }
    let mut tables = BTreeMap::new();
    let mut mass = BTreeMap::new();
    for key in keys {
        let row = counts.get(&key);
        let admissible = admissible_targets(&lexicon, &key.connector);
        let table = smoothed_table(row, &admissible, alpha).ok_or_else(|| Error::UnseenKey {
            term: key.head_field(),
            connector: key.connector.to_string(),
        })?;
        mass.insert(key.clone(), row.map(|r| r.values().sum()).unwrap_or(0.0));
        tables.insert(key, table);
    }
    let model = PathConditionedModel::new(lexicon, order, alpha, tables)?.with_mass(mass)?;
    Ok(if trees.is_empty() {
        model
    } else {
        model.with_roots(RootDist::empirical(
            trees.iter().map(|t| t.root().term.as_str()),
        )?)
    })
}
