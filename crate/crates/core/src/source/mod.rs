//! The parameterized source `S(t, l)`: for each term and connector, a
//! distribution over the terms that can plug into that connector, with the
//! termination tag as an explicit outcome.

mod branching;
mod generate;

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grammar::{Connector, Lexicon, TT};
use crate::tree::PathStep;

pub use branching::{
    almost_sure_finite, mean_offspring_matrix, spectral_radius, FinitenessReport, OffspringMatrix,
    PowerIteration, Verdict,
};
pub use generate::{
    generate_corpus, generate_tree, generate_tree_with_rng, sample_neighbors, tree_rng, Draw,
    Generated, GenerationConfig, GenerationMode, GenerationTrace, TraceEvent, TraceStep,
    DEFAULT_NODE_CAP,
};

/// Tables may deviate from unit mass by at most this much.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// An outcome of a connector draw.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Term(String),
    Tt,
}

impl Target {
    pub fn term(t: &str) -> Target {
        Target::Term(t.to_string())
    }

    pub fn as_term(&self) -> Option<&str> {
        match self {
            Target::Term(t) => Some(t),
            Target::Tt => None,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Term(t) => f.write_str(t),
            Target::Tt => f.write_str(TT),
        }
    }
}

impl From<&str> for Target {
    fn from(s: &str) -> Target {
        if s == TT {
            Target::Tt
        } else {
            Target::Term(s.to_string())
        }
    }
}

/// A discrete distribution over targets. Entries are kept in target order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Table {
    entries: BTreeMap<Target, f64>,
}

impl Table {
    pub fn new<I, T>(entries: I) -> Table
    where
        I: IntoIterator<Item = (T, f64)>,
        T: Into<Target>,
    {
        Table {
            entries: entries.into_iter().map(|(t, p)| (t.into(), p)).collect(),
        }
    }

    /// Uniform over `targets`.
    pub fn uniform(targets: &[Target]) -> Table {
        let p = 1.0 / targets.len() as f64;
        Table {
            entries: targets.iter().map(|t| (t.clone(), p)).collect(),
        }
    }

    pub fn prob(&self, t: &Target) -> f64 {
        self.entries.get(t).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Target, f64)> {
        self.entries.iter().map(|(t, &p)| (t, p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn insert(&mut self, t: Target, p: f64) {
        self.entries.insert(t, p);
    }

    pub(crate) fn entry_mut(&mut self, t: Target) -> &mut f64 {
        self.entries.entry(t).or_insert(0.0)
    }

    /// Inverse-CDF draw for `u` in `[0, 1)`; only positive entries can win.
    pub fn pick(&self, u: f64) -> Option<(&Target, f64)> {
        let mut acc = 0.0;
        let mut last = None;
        for (t, &p) in &self.entries {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = Some((t, p));
            if u < acc {
                return last;
            }
        }
        last
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(&Target, f64)> {
        self.pick(rng.gen::<f64>())
    }

    /// Largest absolute entrywise difference, treating missing entries as 0.
    pub fn max_abs_diff(&self, other: &Table) -> f64 {
        self.entries
            .keys()
            .chain(other.entries.keys())
            .map(|t| (self.prob(t) - other.prob(t)).abs())
            .fold(0.0, f64::max)
    }
}

/// Terms that can plug into `connector`, then `TT`.
pub fn admissible_targets(lexicon: &Lexicon, connector: &Connector) -> Vec<Target> {
    let mut out: Vec<Target> = lexicon
        .partners(connector)
        .into_iter()
        .map(Target::term)
        .collect();
    out.push(Target::Tt);
    out
}

/// Add-`alpha` estimate from raw counts over `admissible`; `None` when
/// there is nothing to normalize (no counts and `alpha == 0`).
pub(crate) fn smoothed_table(
    counts: Option<&BTreeMap<Target, f64>>,
    admissible: &[Target],
    alpha: f64,
) -> Option<Table> {
    let count = |t: &Target| counts.and_then(|c| c.get(t)).copied().unwrap_or(0.0);
    let total: f64 = admissible.iter().map(count).sum();
    let denom = total + alpha * admissible.len() as f64;
    if denom <= 0.0 {
        return None;
    }
    Some(Table {
        entries: admissible
            .iter()
            .map(|t| (t.clone(), (count(t) + alpha) / denom))
            .collect(),
    })
}

/// A `(term, connector)` key of a stochastic source.
pub type SourceKey = (String, Connector);

/// Anything that supplies child distributions during generation. First-order
/// sources ignore the ancestry; path-conditioned models use it.
pub trait BranchingModel: Sync {
    fn lexicon(&self) -> &Lexicon;

    /// How many trailing ancestor steps `table` looks at; `None` for all.
    fn context_steps(&self) -> Option<usize> {
        Some(0)
    }

    fn table(
        &self,
        ancestry: &[PathStep],
        term: &str,
        connector: &Connector,
    ) -> Result<Cow<'_, Table>>;
}

/// Per-(term, connector) distributions over partner terms and `TT`.
#[derive(Clone, Debug)]
pub struct StochasticSource {
    lexicon: Arc<Lexicon>,
    tables: BTreeMap<SourceKey, Table>,
}

impl PartialEq for StochasticSource {
    fn eq(&self, other: &Self) -> bool {
        self.tables == other.tables && self.lexicon == other.lexicon
    }
}

pub(crate) fn check_table(lexicon: &Lexicon, key: &SourceKey, table: &mut Table) -> Result<()> {
    let (term, connector) = key;
    let fail = |reason: String| Error::InvalidTable {
        term: term.clone(),
        connector: connector.to_string(),
        reason,
    };
    if !lexicon.contains(term) {
        return Err(fail(format!("`{term}` is not in the lexicon")));
    }
    if !lexicon.carries(term, connector) {
        return Err(fail(format!("`{term}` has no connector {connector}")));
    }
    let mate = connector.mate();
    for (t, p) in table.iter() {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(fail(format!("probability {p} for {t} is outside [0, 1]")));
        }
        if let Target::Term(u) = t {
            if !lexicon.carries(u, &mate) {
                return Err(fail(format!(
                    "`{u}` cannot plug into {connector} (no {mate})"
                )));
            }
        }
    }
    table.entry_mut(Target::Tt);
    let sum = table.sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized {
            term: term.clone(),
            connector: connector.to_string(),
            sum,
        });
    }
    Ok(())
}

impl StochasticSource {
    /// Validates every table. A missing `TT` entry is added with mass 0.
    pub fn new(lexicon: Arc<Lexicon>, tables: BTreeMap<SourceKey, Table>) -> Result<Self> {
        let mut tables = tables;
        for (key, table) in tables.iter_mut() {
            check_table(&lexicon, key, table)?;
        }
        Ok(StochasticSource { lexicon, tables })
    }

    pub fn lexicon_arc(&self) -> &Arc<Lexicon> {
        &self.lexicon
    }

    pub fn tables(&self) -> &BTreeMap<SourceKey, Table> {
        &self.tables
    }

    pub fn get(&self, term: &str, connector: &Connector) -> Option<&Table> {
        self.tables.get(&(term.to_string(), connector.clone()))
    }

    /// Replaces one table after validating it.
    pub fn set_table(&mut self, term: &str, connector: Connector, table: Table) -> Result<()> {
        let key = (term.to_string(), connector);
        let mut table = table;
        check_table(&self.lexicon, &key, &mut table)?;
        self.tables.insert(key, table);
        Ok(())
    }

    /// Lexicon keys with no table.
    pub fn missing_keys(&self) -> Vec<SourceKey> {
        self.lexicon
            .source_keys()
            .into_iter()
            .filter(|k| !self.tables.contains_key(k))
            .collect()
    }

    /// Largest entrywise difference over the keys both sources define.
    pub fn max_abs_diff(&self, other: &StochasticSource) -> f64 {
        self.tables
            .iter()
            .filter_map(|(k, t)| other.tables.get(k).map(|o| t.max_abs_diff(o)))
            .fold(0.0, f64::max)
    }

    /// Reads `term CONNECTOR target probability` lines.
    pub fn parse(text: &str, lexicon: Arc<Lexicon>) -> Result<Self> {
        let mut tables: BTreeMap<SourceKey, Table> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('%').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::format(
                    i + 1,
                    "expected `term CONNECTOR target probability`",
                ));
            }
            let connector: Connector = f[1]
                .parse()
                .map_err(|e: Error| Error::format(i + 1, e.to_string()))?;
            let p: f64 = f[3]
                .parse()
                .map_err(|_| Error::format(i + 1, format!("bad probability `{}`", f[3])))?;
            let table = tables.entry((f[0].to_string(), connector)).or_default();
            let target = Target::from(f[2]);
            if table.entries.contains_key(&target) {
                return Err(Error::format(i + 1, format!("duplicate target `{}`", f[2])));
            }
            table.insert(target, p);
        }
        StochasticSource::new(lexicon, tables)
    }
}

impl fmt::Display for StochasticSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((term, connector), table) in &self.tables {
            for (t, p) in table.iter() {
                writeln!(f, "{term} {connector} {t} {p}")?;
            }
        }
        Ok(())
    }
}

impl BranchingModel for StochasticSource {
    fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn table(
        &self,
        _ancestry: &[PathStep],
        term: &str,
        connector: &Connector,
    ) -> Result<Cow<'_, Table>> {
        self.get(term, connector)
            .map(Cow::Borrowed)
            .ok_or_else(|| Error::MissingTable {
                term: term.to_string(),
                connector: connector.to_string(),
            })
    }
}

/// Distribution of root terms for unconditional generation and scoring.
#[derive(Clone, Debug, PartialEq)]
pub struct RootDist {
    entries: Vec<(String, f64)>,
}

impl RootDist {
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("empty root distribution".into()));
        }
        let sum: f64 = entries.iter().map(|(_, p)| p).sum();
        if entries.iter().any(|(_, p)| !p.is_finite() || *p < 0.0)
            || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE
        {
            return Err(Error::InvalidArgument(format!(
                "root distribution must be non-negative and sum to 1, sums to {sum}"
            )));
        }
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(RootDist { entries })
    }

    /// Probability 1 on a single term.
    pub fn single(term: &str) -> Self {
        RootDist {
            entries: vec![(term.to_string(), 1.0)],
        }
    }

    pub fn uniform(lexicon: &Lexicon) -> Self {
        let n = lexicon.word_count() as f64;
        RootDist {
            entries: lexicon.words().map(|w| (w.to_string(), 1.0 / n)).collect(),
        }
    }

    /// Relative frequencies of `roots`.
    pub fn empirical<'a>(roots: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
        let mut total = 0.0;
        for r in roots {
            *counts.entry(r).or_default() += 1.0;
            total += 1.0;
        }
        if total == 0.0 {
            return Err(Error::EmptyCorpus);
        }
        Ok(RootDist {
            entries: counts
                .into_iter()
                .map(|(t, c)| (t.to_string(), c / total))
                .collect(),
        })
    }

    pub fn prob(&self, term: &str) -> f64 {
        self.entries
            .iter()
            .find(|(t, _)| t == term)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &str {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = &self.entries[0].0;
        for (t, p) in &self.entries {
            if *p <= 0.0 {
                continue;
            }
            acc += p;
            last = t;
            if u < acc {
                return t;
            }
        }
        last
    }
}
