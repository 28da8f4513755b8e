//! Link-grammar vocabulary: connectors, disjunct expressions and lexicons.
//!
//! A lexicon maps words to and/or expressions over connectors. Each
//! expression expands into a list of [`Disjunct`]s, the flat alternatives a
//! word may use in a linkage. The termination tag [`TT`] is a pseudo-term
//! closing connectors that have no partner; it is never a lexicon word.

mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use parse::parse_lexicon;

/// Spelling of the termination tag.
pub const TT: &str = "TT";

/// Polarity of a connector: `-` seeks a partner to the left, `+` to the right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn sign(self) -> char {
        match self {
            Direction::Left => '-',
            Direction::Right => '+',
        }
    }

    pub fn flip(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

/// A typed, directional link socket such as `S+` or `O-`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Connector {
    label: String,
    direction: Direction,
}

impl Connector {
    pub fn new(label: impl Into<String>, direction: Direction) -> Result<Self> {
        let label = label.into();
        validate_label(&label).map_err(Error::InvalidArgument)?;
        Ok(Connector { label, direction })
    }

    /// Shorthand for tests and fixtures; panics on an invalid label.
    pub fn right(label: &str) -> Self {
        Connector::new(label, Direction::Right).expect("valid connector label")
    }

    /// Shorthand for tests and fixtures; panics on an invalid label.
    pub fn left(label: &str) -> Self {
        Connector::new(label, Direction::Left).expect("valid connector label")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// The connector that links to this one: same label, opposite polarity.
    pub fn mate(&self) -> Connector {
        Connector {
            label: self.label.clone(),
            direction: self.direction.flip(),
        }
    }

    pub fn matches(&self, other: &Connector) -> bool {
        connector_match(self, other)
    }
}

impl fmt::Display for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.label, self.direction.sign())
    }
}

impl FromStr for Connector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let direction = match s.chars().last() {
            Some('+') => Direction::Right,
            Some('-') => Direction::Left,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "connector `{s}` must end in `+` or `-`"
                )))
            }
        };
        Connector::new(&s[..s.len() - 1], direction)
    }
}

/// Labels are uppercase identifiers: `[A-Z][A-Za-z0-9_]*`.
pub(crate) fn validate_label(label: &str) -> std::result::Result<(), String> {
    let mut chars = label.chars();
    match chars.next() {
        None => return Err("empty connector label".into()),
        Some(c) if !c.is_ascii_uppercase() => {
            return Err(format!(
                "connector label `{label}` must start with an uppercase letter"
            ))
        }
        _ => {}
    }
    if let Some(c) = chars.find(|c| !(c.is_ascii_alphanumeric() || *c == '_')) {
        return Err(format!(
            "invalid character `{c}` in connector label `{label}`"
        ));
    }
    Ok(())
}

/// Characters that may not appear in a lexicon word; they are structural in
/// one of the line-oriented file formats.
const RESERVED_WORD_CHARS: &[char] = &[':', ';', '(', ')', '&', '%', '=', '>', '#', ','];

pub(crate) fn validate_word(word: &str) -> std::result::Result<(), String> {
    if word.is_empty() {
        return Err("empty word".into());
    }
    if word == TT {
        return Err(format!("`{TT}` is reserved for the termination tag"));
    }
    if let Some(c) = word
        .chars()
        .find(|c| c.is_whitespace() || RESERVED_WORD_CHARS.contains(c))
    {
        return Err(format!("invalid character `{c}` in word `{word}`"));
    }
    Ok(())
}

/// True iff the connectors carry the same label with opposite polarity.
pub fn connector_match(a: &Connector, b: &Connector) -> bool {
    a.label == b.label && a.direction != b.direction
}

/// An and/or expression over connectors, as written after the colon of a
/// lexicon statement. Internal nodes keep their children in source order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DisjunctExpr {
    Connector(Connector),
    And(Vec<DisjunctExpr>),
    Or(Vec<DisjunctExpr>),
}

impl DisjunctExpr {
    pub fn leaf(c: Connector) -> Self {
        DisjunctExpr::Connector(c)
    }

    /// Builds an AND node; a single child collapses to the child itself.
    pub fn and(mut children: Vec<DisjunctExpr>) -> Self {
        assert!(!children.is_empty(), "AND node needs children");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            DisjunctExpr::And(children)
        }
    }

    /// Builds an OR node; a single child collapses to the child itself.
    pub fn or(mut children: Vec<DisjunctExpr>) -> Self {
        assert!(!children.is_empty(), "OR node needs children");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            DisjunctExpr::Or(children)
        }
    }

    /// Number of AND/OR nodes.
    pub fn operator_count(&self) -> usize {
        match self {
            DisjunctExpr::Connector(_) => 0,
            DisjunctExpr::And(cs) | DisjunctExpr::Or(cs) => {
                1 + cs.iter().map(|c| c.operator_count()).sum::<usize>()
            }
        }
    }

    fn fmt_child(&self, child: &DisjunctExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let needs_parens = matches!(
            (self, child),
            (DisjunctExpr::And(_), DisjunctExpr::And(_))
                | (DisjunctExpr::And(_), DisjunctExpr::Or(_))
                | (DisjunctExpr::Or(_), DisjunctExpr::Or(_))
        );
        if needs_parens {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for DisjunctExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (children, sep) = match self {
            DisjunctExpr::Connector(c) => return write!(f, "{c}"),
            DisjunctExpr::And(cs) => (cs, " & "),
            DisjunctExpr::Or(cs) => (cs, " or "),
        };
        for (i, child) in children.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            self.fmt_child(child, f)?;
        }
        Ok(())
    }
}

impl FromStr for DisjunctExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse::parse_expr(s)
    }
}

/// One satisfying alternative of a [`DisjunctExpr`]: an ordered connector list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Disjunct(pub Vec<Connector>);

impl Disjunct {
    pub fn connectors(&self) -> &[Connector] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: &Connector) -> bool {
        self.0.contains(c)
    }
}

impl fmt::Display for Disjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("]")
    }
}

/// All distinct flattened alternatives of `expr`, in left-to-right expansion
/// order. `or` picks one child, `&` concatenates one alternative of each child.
pub fn expand_disjuncts(expr: &DisjunctExpr) -> Vec<Disjunct> {
    expand(expr).into_iter().map(Disjunct).collect()
}

fn expand(expr: &DisjunctExpr) -> Vec<Vec<Connector>> {
    match expr {
        DisjunctExpr::Connector(c) => vec![vec![c.clone()]],
        DisjunctExpr::Or(children) => {
            let mut out = Vec::new();
            for child in children {
                for alt in expand(child) {
                    push_unique(&mut out, alt);
                }
            }
            out
        }
        DisjunctExpr::And(children) => {
            let mut acc: Vec<Vec<Connector>> = vec![Vec::new()];
            for child in children {
                let alts = expand(child);
                let mut next = Vec::with_capacity(acc.len() * alts.len());
                for prefix in &acc {
                    for alt in &alts {
                        let mut joined = prefix.clone();
                        joined.extend(alt.iter().cloned());
                        push_unique(&mut next, joined);
                    }
                }
                acc = next;
            }
            acc
        }
    }
}

fn push_unique(out: &mut Vec<Vec<Connector>>, item: Vec<Connector>) {
    if !out.contains(&item) {
        out.push(item);
    }
}

/// Every connector leaf of `expr` in expression order, with multiplicity.
pub fn connectors_of(expr: &DisjunctExpr) -> Vec<Connector> {
    fn walk(e: &DisjunctExpr, out: &mut Vec<Connector>) {
        match e {
            DisjunctExpr::Connector(c) => out.push(c.clone()),
            DisjunctExpr::And(cs) | DisjunctExpr::Or(cs) => cs.iter().for_each(|c| walk(c, out)),
        }
    }
    let mut out = Vec::new();
    walk(expr, &mut out);
    out
}

/// Multiset difference `whole - part`, keeping the order of `whole`.
/// Returns `None` when `part` is not contained in `whole`.
pub fn multiset_minus(whole: &[Connector], part: &[Connector]) -> Option<Vec<Connector>> {
    let mut rest: Vec<Connector> = whole.to_vec();
    for c in part {
        let pos = rest.iter().position(|x| x == c)?;
        rest.remove(pos);
    }
    Some(rest)
}

/// Order-insensitive multiset comparison.
pub fn same_multiset(a: &[Connector], b: &[Connector]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

/// One lexicon statement `w1 w2 ...: EXPR;`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconEntry {
    terms: Vec<String>,
    expr: DisjunctExpr,
    disjuncts: Vec<Disjunct>,
    connectors: Vec<Connector>,
}

impl LexiconEntry {
    pub fn new(terms: Vec<String>, expr: DisjunctExpr) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("lexicon entry without words".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            validate_word(t).map_err(Error::InvalidArgument)?;
            if terms[..i].contains(t) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate word `{t}` in one entry"
                )));
            }
        }
        let disjuncts = expand_disjuncts(&expr);
        let connectors = connectors_of(&expr);
        Ok(LexiconEntry {
            terms,
            expr,
            disjuncts,
            connectors,
        })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn expr(&self) -> &DisjunctExpr {
        &self.expr
    }

    /// Cached [`expand_disjuncts`] of the expression.
    pub fn disjuncts(&self) -> &[Disjunct] {
        &self.disjuncts
    }

    /// Cached [`connectors_of`] of the expression.
    pub fn connectors(&self) -> &[Connector] {
        &self.connectors
    }
}

impl fmt::Display for LexiconEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {};", self.terms.join(" "), self.expr)
    }
}

/// A list of entries plus a word index. A word listed in several entries
/// keeps each expression separately.
#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    index: BTreeMap<String, Vec<usize>>,
}

impl PartialEq for Lexicon {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for Lexicon {}

impl Lexicon {
    pub fn new(entries: Vec<LexiconEntry>) -> Self {
        let mut index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, entry) in entries.iter().enumerate() {
            for t in &entry.terms {
                index.entry(t.clone()).or_default().push(i);
            }
        }
        Lexicon { entries, index }
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_lexicon(text)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &LexiconEntry {
        &self.entries[i]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All expressions attached to `word`, in declaration order.
    pub fn lookup(&self, word: &str) -> Vec<&DisjunctExpr> {
        self.entries_for(word)
            .iter()
            .map(|&i| &self.entries[i].expr)
            .collect()
    }

    /// Indices of the entries listing `word`.
    pub fn entries_for(&self, word: &str) -> &[usize] {
        self.index.get(word).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Distinct words in sorted order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn word_count(&self) -> usize {
        self.index.len()
    }

    /// First entry of `word` whose connector set contains `required`
    /// (any entry when `required` is `None`).
    pub fn frame_entry(&self, word: &str, required: Option<&Connector>) -> Option<usize> {
        self.entries_for(word)
            .iter()
            .copied()
            .find(|&i| match required {
                None => true,
                Some(c) => self.entries[i].connectors.contains(c),
            })
    }

    /// Union of the word's connector multisets, taking each connector at its
    /// maximal multiplicity over the word's entries; sorted.
    pub fn max_connectors(&self, word: &str) -> Vec<Connector> {
        let mut best: BTreeMap<&Connector, usize> = BTreeMap::new();
        for &i in self.entries_for(word) {
            let mut counts: BTreeMap<&Connector, usize> = BTreeMap::new();
            for c in &self.entries[i].connectors {
                *counts.entry(c).or_default() += 1;
            }
            for (c, n) in counts {
                let slot = best.entry(c).or_default();
                *slot = (*slot).max(n);
            }
        }
        best.into_iter()
            .flat_map(|(c, n)| std::iter::repeat_n(c.clone(), n))
            .collect()
    }

    /// Distinct connectors of `word` over all its entries, sorted.
    pub fn distinct_connectors(&self, word: &str) -> Vec<Connector> {
        let mut out = self.max_connectors(word);
        out.dedup();
        out
    }

    /// True iff some entry of `word` carries `c`.
    pub fn carries(&self, word: &str, c: &Connector) -> bool {
        self.entries_for(word)
            .iter()
            .any(|&i| self.entries[i].connectors.contains(c))
    }

    /// Words that could plug into connector `c`: those carrying its mate.
    pub fn partners(&self, c: &Connector) -> Vec<&str> {
        let mate = c.mate();
        self.words().filter(|w| self.carries(w, &mate)).collect()
    }

    /// Every `(word, connector)` key a stochastic source over this lexicon
    /// needs, in sorted order.
    pub fn source_keys(&self) -> Vec<(String, Connector)> {
        self.words()
            .flat_map(|w| {
                self.distinct_connectors(w)
                    .into_iter()
                    .map(move |c| (w.to_string(), c))
            })
            .collect()
    }
}

impl fmt::Display for Lexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for entry in &self.entries {
            writeln!(f, "{entry}")?;
        }
        Ok(())
    }
}
