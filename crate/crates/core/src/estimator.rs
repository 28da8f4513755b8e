//! Frequentist estimation of stochastic sources from linkage or tree corpora.
//!
//! Each table is normalized per `(term, connector)`:
//! `P(x | t, c) = (C(t, c, x) + alpha) / (C(t, c, .) + alpha * V)` with `V`
//! the admissible targets of `c` plus `TT`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grammar::{Connector, Lexicon};
use crate::linkage::{validate_linkage, Linkage};
use crate::par;
use crate::source::{admissible_targets, smoothed_table, StochasticSource, Target};
use crate::tree::{Outcome, SentenceTree};

/// A `(term, connector, target)` event.
pub type PairKey = (String, Connector, Target);

/// Pair and unigram counts. Counts are whole numbers except under
/// fractional weighting of ambiguous sentences.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinkCounts {
    pub pairs: BTreeMap<PairKey, f64>,
    pub unigrams: BTreeMap<String, f64>,
}

impl LinkCounts {
    pub fn pair(&self, term: &str, connector: &Connector, target: &Target) -> f64 {
        self.pairs
            .get(&(term.to_string(), connector.clone(), target.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn unigram(&self, term: &str) -> f64 {
        self.unigrams.get(term).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty() && self.unigrams.is_empty()
    }

    fn add_pair(&mut self, term: &str, connector: Connector, target: Target, w: f64) {
        *self
            .pairs
            .entry((term.to_string(), connector, target))
            .or_default() += w;
    }

    fn add_unigram(&mut self, term: &str, w: f64) {
        *self.unigrams.entry(term.to_string()).or_default() += w;
    }

    /// Records both directions of every link, and every closure, with weight `w`.
    pub fn add_linkage(&mut self, l: &Linkage, w: f64) {
        for word in &l.words {
            self.add_unigram(word, w);
        }
        for link in &l.links {
            let (a, b) = (&l.words[link.left], &l.words[link.right]);
            let plus = Connector::right(&link.label);
            self.add_pair(a, plus.clone(), Target::term(b), w);
            self.add_pair(b, plus.mate(), Target::term(a), w);
        }
        for c in &l.closures {
            self.add_pair(&l.words[c.word], c.connector.clone(), Target::Tt, w);
        }
    }

    /// Records each parent draw and each closure of an expanded node.
    pub fn add_tree(&mut self, t: &SentenceTree) {
        for n in t.nodes() {
            self.add_unigram(&n.term, 1.0);
            for s in &n.slots {
                let target = match s.outcome {
                    Outcome::Tt => Target::Tt,
                    Outcome::Child(c) => Target::term(&t.node(c).term),
                };
                self.add_pair(&n.term, s.connector.clone(), target, 1.0);
            }
        }
    }

    /// Every count multiplied by `k`.
    pub fn scaled(&self, k: f64) -> LinkCounts {
        LinkCounts {
            pairs: self
                .pairs
                .iter()
                .map(|(key, c)| (key.clone(), c * k))
                .collect(),
            unigrams: self
                .unigrams
                .iter()
                .map(|(key, c)| (key.clone(), c * k))
                .collect(),
        }
    }
}

/// Pointwise sum.
pub fn counts_merge(a: LinkCounts, b: LinkCounts) -> LinkCounts {
    let (mut big, small) = if a.pairs.len() >= b.pairs.len() {
        (a, b)
    } else {
        (b, a)
    };
    for (k, c) in small.pairs {
        *big.pairs.entry(k).or_default() += c;
    }
    for (k, c) in small.unigrams {
        *big.unigrams.entry(k).or_default() += c;
    }
    big
}

fn check(l: &Linkage, lexicon: &Lexicon) -> Result<()> {
    for (i, w) in l.words.iter().enumerate() {
        if !lexicon.contains(w) {
            return Err(Error::UnknownWord {
                word: w.clone(),
                position: i,
            });
        }
    }
    validate_linkage(l, lexicon, l.inferred_mode()).map_err(Error::InvalidLinkage)
}

/// Counts a linkage corpus after validating every linkage.
pub fn count_corpus(corpus: &[Linkage], lexicon: &Lexicon) -> Result<LinkCounts> {
    let weighted: Vec<(&Linkage, f64)> = corpus.iter().map(|l| (l, 1.0)).collect();
    count_weighted(&weighted, lexicon)
}

/// As [`count_corpus`], with a weight per linkage.
pub fn count_weighted(corpus: &[(&Linkage, f64)], lexicon: &Lexicon) -> Result<LinkCounts> {
    for (l, _) in corpus {
        check(l, lexicon)?;
    }
    Ok(par::map_reduce(
        corpus,
        LinkCounts::default,
        |acc, (l, w)| acc.add_linkage(l, *w),
        counts_merge,
    ))
}

/// Counts a tree corpus after validating every tree.
pub fn count_trees(trees: &[SentenceTree], lexicon: &Lexicon) -> Result<LinkCounts> {
    for t in trees {
        t.validate(lexicon)?;
    }
    Ok(par::map_reduce(
        trees,
        LinkCounts::default,
        |acc, t| acc.add_tree(t),
        counts_merge,
    ))
}

/// Add-`alpha` estimate of every table the lexicon needs.
pub fn estimate_source(
    counts: &LinkCounts,
    lexicon: Arc<Lexicon>,
    alpha: f64,
) -> Result<StochasticSource> {
    if alpha < 0.0 || alpha.is_nan() {
        return Err(Error::NegativeAlpha(alpha));
    }
    let mut rows: BTreeMap<(&str, &Connector), BTreeMap<Target, f64>> = BTreeMap::new();
    for ((t, c, x), n) in &counts.pairs {
        rows.entry((t.as_str(), c))
            .or_default()
            .insert(x.clone(), *n);
    }
    let mut tables = BTreeMap::new();
    for (term, connector) in lexicon.source_keys() {
        let admissible = admissible_targets(&lexicon, &connector);
        let row = rows.get(&(term.as_str(), &connector));
        let table = smoothed_table(row, &admissible, alpha).ok_or_else(|| Error::UnseenKey {
            term: term.clone(),
            connector: connector.to_string(),
        })?;
        tables.insert((term, connector), table);
    }
    StochasticSource::new(lexicon, tables)
}
