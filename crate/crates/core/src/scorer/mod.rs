//! Probabilities of sentence trees under path-conditioned models.
//!
//! A model of order `k` conditions each draw on the parent term, the
//! connector, and the last `k - 1` ancestor steps above the parent. Order 1
//! is a first-order stochastic source; the single-parent score of a higher
//! order model uses its projection to order 1.

mod divergence;
mod fit;
mod ngram;

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grammar::{Connector, Lexicon};
use crate::source::{
    admissible_targets, check_table, BranchingModel, RootDist, StochasticSource, Table, Target,
};
use crate::tree::{Outcome, PathStep, SentenceTree};

pub use divergence::{
    divergence_report, divergence_sweep, enumerate_support, exact_divergence, DivergenceConfig,
    DivergenceReport, ExactDivergence, SweepPoint, TreeGap,
};
pub use fit::{context_counts, fit_path_model};
pub use ngram::{ngram_context_factor, NgramCounts};

/// Path order: how many steps of the root-to-node path a draw sees,
/// counting the parent step itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Finite(usize),
    Infinite,
}

impl Order {
    /// Ancestor steps above the parent that a draw sees; `None` for all.
    pub fn context_steps(self) -> Option<usize> {
        match self {
            Order::Finite(k) => Some(k.saturating_sub(1)),
            Order::Infinite => None,
        }
    }

    /// Trailing part of `ancestry` visible at this order.
    pub fn truncate(self, ancestry: &[PathStep]) -> &[PathStep] {
        match self.context_steps() {
            Some(k) if ancestry.len() > k => &ancestry[ancestry.len() - k..],
            _ => ancestry,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(k) => write!(f, "{k}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "inf" {
            return Ok(Order::Infinite);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Order::Finite(k)),
            _ => Err(Error::InvalidArgument(format!(
                "order must be a positive integer or `inf`, got `{s}`"
            ))),
        }
    }
}

/// Conditioning context of one draw.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContextKey {
    /// Ancestor steps above the parent, root side first.
    pub path: Vec<PathStep>,
    pub term: String,
    pub connector: Connector,
}

impl ContextKey {
    pub fn new(path: Vec<PathStep>, term: &str, connector: Connector) -> Self {
        ContextKey {
            path,
            term: term.to_string(),
            connector,
        }
    }

    /// `a:P+>m` style first field of a model line.
    pub fn head_field(&self) -> String {
        let mut s = String::new();
        for step in &self.path {
            s.push_str(&step.to_string());
            s.push('>');
        }
        s.push_str(&self.term);
        s
    }

    fn parse(head: &str, connector: &str) -> std::result::Result<ContextKey, String> {
        let mut parts: Vec<&str> = head.split('>').collect();
        let term = parts.pop().unwrap_or_default();
        if term.is_empty() {
            return Err(format!("empty term in context `{head}`"));
        }
        let path = parts
            .into_iter()
            .map(|p| {
                let (t, c) = p
                    .split_once(':')
                    .ok_or_else(|| format!("path step `{p}` needs `term:CONNECTOR`"))?;
                let connector = c.parse::<Connector>().map_err(|e| e.to_string())?;
                Ok(PathStep {
                    term: t.to_string(),
                    connector,
                })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let connector = connector.parse::<Connector>().map_err(|e| e.to_string())?;
        Ok(ContextKey {
            path,
            term: term.to_string(),
            connector,
        })
    }

    fn truncated(&self, order: Order) -> ContextKey {
        ContextKey {
            path: order.truncate(&self.path).to_vec(),
            term: self.term.clone(),
            connector: self.connector.clone(),
        }
    }
}

impl fmt::Display for ContextKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.head_field(), self.connector)
    }
}

/// Child distributions keyed by truncated path context.
///
/// `mass` records how often each context is visited; it weights contexts
/// when the model is projected to a lower order. Contexts without a table
/// fall back to the uniform distribution over admissible targets when
/// `alpha > 0` and are an error otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct PathConditionedModel {
    lexicon: Arc<Lexicon>,
    order: Order,
    alpha: f64,
    tables: BTreeMap<ContextKey, Table>,
    mass: BTreeMap<ContextKey, f64>,
    roots: Option<RootDist>,
}

fn check_path(lexicon: &Lexicon, key: &ContextKey) -> std::result::Result<(), String> {
    let mut expect_mate: Option<Connector> = None;
    for step in &key.path {
        if let Some(m) = &expect_mate {
            if !lexicon.carries(&step.term, m) {
                return Err(format!("`{}` cannot hang from {}", step.term, m.mate()));
            }
        }
        if !lexicon.carries(&step.term, &step.connector) {
            return Err(format!(
                "`{}` has no connector {}",
                step.term, step.connector
            ));
        }
        expect_mate = Some(step.connector.mate());
    }
    match expect_mate {
        Some(m) if !lexicon.carries(&key.term, &m) => {
            Err(format!("`{}` cannot hang from {}", key.term, m.mate()))
        }
        _ => Ok(()),
    }
}

impl PathConditionedModel {
    /// Validates every table and every context path against the lexicon.
    pub fn new(
        lexicon: Arc<Lexicon>,
        order: Order,
        alpha: f64,
        tables: BTreeMap<ContextKey, Table>,
    ) -> Result<Self> {
        if order == Order::Finite(0) {
            return Err(Error::InvalidArgument("order must be at least 1".into()));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::NegativeAlpha(alpha));
        }
        let mut tables = tables;
        for (key, table) in tables.iter_mut() {
            if order.context_steps().is_some_and(|k| key.path.len() > k) {
                return Err(Error::InvalidArgument(format!(
                    "context `{key}` is longer than order {order} allows"
                )));
            }
            check_path(&lexicon, key).map_err(|reason| Error::InvalidTable {
                term: key.head_field(),
                connector: key.connector.to_string(),
                reason,
            })?;
            check_table(&lexicon, &(key.term.clone(), key.connector.clone()), table).map_err(
                |e| match e {
                    Error::NotNormalized { sum, .. } => Error::NotNormalized {
                        term: key.head_field(),
                        connector: key.connector.to_string(),
                        sum,
                    },
                    other => other,
                },
            )?;
        }
        Ok(PathConditionedModel {
            lexicon,
            order,
            alpha,
            tables,
            mass: BTreeMap::new(),
            roots: None,
        })
    }

    /// The order-1 model with the tables of `src`.
    pub fn from_source(src: &StochasticSource) -> Self {
        PathConditionedModel {
            lexicon: src.lexicon_arc().clone(),
            order: Order::Finite(1),
            alpha: 0.0,
            tables: src
                .tables()
                .iter()
                .map(|((t, c), table)| (ContextKey::new(Vec::new(), t, c.clone()), table.clone()))
                .collect(),
            mass: BTreeMap::new(),
            roots: None,
        }
    }

    /// The tables as a stochastic source; only for order 1.
    pub fn to_source(&self) -> Result<StochasticSource> {
        if self.order != Order::Finite(1) {
            return Err(Error::InvalidArgument(format!(
                "only order-1 models are stochastic sources (this one has order {})",
                self.order
            )));
        }
        let tables = self
            .tables
            .iter()
            .map(|(k, t)| ((k.term.clone(), k.connector.clone()), t.clone()))
            .collect();
        StochasticSource::new(self.lexicon.clone(), tables)
    }

    pub fn lexicon_arc(&self) -> &Arc<Lexicon> {
        &self.lexicon
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tables(&self) -> &BTreeMap<ContextKey, Table> {
        &self.tables
    }

    pub fn mass(&self) -> &BTreeMap<ContextKey, f64> {
        &self.mass
    }

    pub fn roots(&self) -> Option<&RootDist> {
        self.roots.as_ref()
    }

    pub fn with_roots(mut self, roots: RootDist) -> Self {
        self.roots = Some(roots);
        self
    }

    /// Replaces the context visit masses; keys must be contexts of this order.
    pub fn with_mass(mut self, mass: BTreeMap<ContextKey, f64>) -> Result<Self> {
        for (k, &m) in &mass {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "mass {m} of `{k}` must be non-negative"
                )));
            }
            if self.order.context_steps().is_some_and(|s| k.path.len() > s) {
                return Err(Error::InvalidArgument(format!(
                    "mass context `{k}` exceeds order {}",
                    self.order
                )));
            }
        }
        self.mass = mass;
        Ok(self)
    }

    /// The distribution for a draw of `connector` from `term` below `ancestry`.
    pub fn lookup(
        &self,
        ancestry: &[PathStep],
        term: &str,
        connector: &Connector,
    ) -> Result<Cow<'_, Table>> {
        let key = ContextKey::new(
            self.order.truncate(ancestry).to_vec(),
            term,
            connector.clone(),
        );
        if let Some(t) = self.tables.get(&key) {
            return Ok(Cow::Borrowed(t));
        }
        if self.alpha > 0.0 && self.lexicon.carries(term, connector) {
            return Ok(Cow::Owned(Table::uniform(&admissible_targets(
                &self.lexicon,
                connector,
            ))));
        }
        Err(Error::UnseenKey {
            term: key.head_field(),
            connector: connector.to_string(),
        })
    }

    /// Collapses contexts to their last `order - 1` steps, averaging tables
    /// weighted by visit mass. Groups without mass are averaged uniformly.
    /// Returns `self` unchanged when it already has at most that order.
    pub fn project(&self, order: Order) -> Cow<'_, PathConditionedModel> {
        if order >= self.order {
            return Cow::Borrowed(self);
        }
        let mut groups: BTreeMap<ContextKey, Vec<(&Table, f64)>> = BTreeMap::new();
        for (k, t) in &self.tables {
            let m = self.mass.get(k).copied().unwrap_or(0.0);
            groups.entry(k.truncated(order)).or_default().push((t, m));
        }
        let mut tables = BTreeMap::new();
        let mut mass = BTreeMap::new();
        for (key, members) in groups {
            let total: f64 = members.iter().map(|(_, m)| m).sum();
            let weights: Vec<f64> = if total > 0.0 {
                members.iter().map(|(_, m)| m / total).collect()
            } else {
                vec![1.0 / members.len() as f64; members.len()]
            };
            let mut table = Table::default();
            for ((t, _), w) in members.iter().zip(&weights) {
                for (target, p) in t.iter() {
                    *table.entry_mut(target.clone()) += w * p;
                }
            }
            mass.insert(key.clone(), total);
            tables.insert(key, table);
        }
        Cow::Owned(PathConditionedModel {
            lexicon: self.lexicon.clone(),
            order,
            alpha: self.alpha,
            tables,
            mass,
            roots: self.roots.clone(),
        })
    }

    /// Context-wise mixture `s * self + (1 - s) * base`, where `base` is a
    /// lower-order model looked up at each of this model's contexts.
    pub fn interpolate(&self, base: &PathConditionedModel, s: f64) -> Result<PathConditionedModel> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!(
                "mixture weight {s} outside [0, 1]"
            )));
        }
        let mut tables = BTreeMap::new();
        for (k, t) in &self.tables {
            let b = base.lookup(&k.path, &k.term, &k.connector)?;
            let mut mixed = Table::default();
            for (target, p) in t.iter() {
                *mixed.entry_mut(target.clone()) += s * p;
            }
            for (target, p) in b.iter() {
                *mixed.entry_mut(target.clone()) += (1.0 - s) * p;
            }
            tables.insert(k.clone(), mixed);
        }
        let mut out =
            PathConditionedModel::new(self.lexicon.clone(), self.order, self.alpha, tables)?;
        out.mass = self.mass.clone();
        out.roots = self.roots.clone();
        Ok(out)
    }

    /// Reads a model file. Lines are `ctx CONNECTOR target probability`
    /// where `ctx` is `term` or `t1:C1>...>term`; `%!` lines carry
    /// `order`, `alpha`, `root`, and `mass` directives.
    pub fn parse(text: &str, lexicon: Arc<Lexicon>) -> Result<Self> {
        let mut order = None;
        let mut alpha = 0.0;
        let mut roots = Vec::new();
        let mut mass = BTreeMap::new();
        let mut tables: BTreeMap<ContextKey, Table> = BTreeMap::new();
        let mut longest = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if let Some(d) = trimmed.strip_prefix("%!") {
                let f: Vec<&str> = d.split_whitespace().collect();
                let num = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|_| Error::format(line, format!("bad number `{s}`")))
                };
                match f.as_slice() {
                    ["order", k] => {
                        order = Some(
                            k.parse::<Order>()
                                .map_err(|e| Error::format(line, e.to_string()))?,
                        )
                    }
                    ["alpha", a] => alpha = num(a)?,
                    ["root", t, p] => roots.push((t.to_string(), num(p)?)),
                    ["mass", head, c, m] => {
                        let key = ContextKey::parse(head, c).map_err(|e| Error::format(line, e))?;
                        mass.insert(key, num(m)?);
                    }
                    _ => return Err(Error::format(line, format!("unknown directive `{d}`"))),
                }
                continue;
            }
            let content = trimmed.split('%').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let f: Vec<&str> = content.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::format(
                    line,
                    "expected `context CONNECTOR target probability`",
                ));
            }
            let key = ContextKey::parse(f[0], f[1]).map_err(|e| Error::format(line, e))?;
            let p: f64 = f[3]
                .parse()
                .map_err(|_| Error::format(line, format!("bad probability `{}`", f[3])))?;
            longest = longest.max(key.path.len());
            let table = tables.entry(key).or_default();
            let target = Target::from(f[2]);
            if table.iter().any(|(t, _)| *t == target) {
                return Err(Error::format(line, format!("duplicate target `{}`", f[2])));
            }
            table.insert(target, p);
        }
        let order = order.unwrap_or(Order::Finite(longest + 1));
        let mut model =
            PathConditionedModel::new(lexicon, order, alpha, tables)?.with_mass(mass)?;
        if !roots.is_empty() {
            model.roots = Some(RootDist::new(roots)?);
        }
        Ok(model)
    }
}

impl fmt::Display for PathConditionedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "%! order {}", self.order)?;
        if self.alpha != 0.0 {
            writeln!(f, "%! alpha {}", self.alpha)?;
        }
        if let Some(r) = &self.roots {
            for (t, p) in r.entries() {
                writeln!(f, "%! root {t} {p}")?;
            }
        }
        for (k, m) in &self.mass {
            writeln!(f, "%! mass {} {} {m}", k.head_field(), k.connector)?;
        }
        for (k, table) in &self.tables {
            for (t, p) in table.iter() {
                writeln!(f, "{k} {t} {p}")?;
            }
        }
        Ok(())
    }
}

impl BranchingModel for PathConditionedModel {
    fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn context_steps(&self) -> Option<usize> {
        self.order.context_steps()
    }

    fn table(
        &self,
        ancestry: &[PathStep],
        term: &str,
        connector: &Connector,
    ) -> Result<Cow<'_, Table>> {
        self.lookup(ancestry, term, connector)
    }
}

/// Ancestor steps of node `i`, root side first, keeping the last `limit`.
pub(crate) fn ancestry_of(tree: &SentenceTree, i: usize, limit: Option<usize>) -> Vec<PathStep> {
    let mut out = Vec::new();
    let mut cur = i;
    while limit.is_none_or(|k| out.len() < k) {
        let Some((p, c)) = tree.parent_edge(cur) else {
            break;
        };
        out.push(PathStep {
            term: tree.node(p).term.clone(),
            connector: c.clone(),
        });
        cur = p;
    }
    out.reverse();
    out
}

/// One scored decision: the context and the probability of its outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredEvent {
    pub node: usize,
    pub context: ContextKey,
    pub outcome: Target,
    pub prob: f64,
}

/// Every slot decision of `tree` with its probability under `model`, in
/// node then slot order. The root draw is not included.
pub fn tree_events<M: BranchingModel + ?Sized>(
    tree: &SentenceTree,
    model: &M,
) -> Result<Vec<ScoredEvent>> {
    if tree.cap_hit() {
        return Err(Error::InvalidTree(
            "cannot score a tree cut by the node cap".into(),
        ));
    }
    let limit = model.context_steps();
    let mut out = Vec::new();
    for (i, n) in tree.nodes().iter().enumerate() {
        let context = ancestry_of(tree, i, limit);
        for s in &n.slots {
            let outcome = match s.outcome {
                Outcome::Tt => Target::Tt,
                Outcome::Child(c) => Target::Term(tree.node(c).term.clone()),
            };
            let prob = model.table(&context, &n.term, &s.connector)?.prob(&outcome);
            out.push(ScoredEvent {
                node: i,
                context: ContextKey::new(context.clone(), &n.term, s.connector.clone()),
                outcome,
                prob,
            });
        }
    }
    Ok(out)
}

/// Log-probability of `tree`: the root under `roots` plus every slot draw
/// under `model`, accumulated in log space.
pub fn score_tree_exact<M: BranchingModel + ?Sized>(
    tree: &SentenceTree,
    model: &M,
    roots: &RootDist,
) -> Result<f64> {
    let root = &tree.root().term;
    let p_root = roots.prob(root);
    if p_root <= 0.0 {
        return Err(Error::ZeroProbability(format!("root `{root}`")));
    }
    let mut total = p_root.ln();
    for e in tree_events(tree, model)? {
        if e.prob <= 0.0 {
            return Err(Error::ZeroProbability(format!(
                "{} -> {} at node {}",
                e.context, e.outcome, e.node
            )));
        }
        total += e.prob.ln();
    }
    Ok(total)
}

/// The single-parent score: `score_tree_exact` under the order-1 projection.
pub fn score_tree_yuret(
    tree: &SentenceTree,
    model: &PathConditionedModel,
    roots: &RootDist,
) -> Result<f64> {
    score_tree_exact(tree, model.project(Order::Finite(1)).as_ref(), roots)
}
