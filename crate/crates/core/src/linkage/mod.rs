//! Linkages of a token sequence: typed planar links plus termination-tag
//! closures for connectors left unused by the chosen disjunct.

mod corpus;
mod enumerate;
mod text;

use std::collections::BTreeSet;
use std::fmt;

use crate::grammar::{multiset_minus, same_multiset, validate_label, Connector, Disjunct, Lexicon};

pub use corpus::{read_linkage_corpus, write_linkage_corpus, write_linkage_record, LinkageRecord};
pub use enumerate::{enumerate_linkages, parse_corpus, ParserConfig, DEFAULT_MAX_TOKENS};
pub use text::{linkage_to_text, LinkChain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ParseMode {
    /// Every connector of the chosen disjunct is linked; nothing else.
    Strict,
    /// As strict, plus every connector of the expression outside the chosen
    /// disjunct is closed by a termination tag.
    #[default]
    Tt,
}

impl std::str::FromStr for ParseMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "strict" => Ok(ParseMode::Strict),
            "tt" => Ok(ParseMode::Tt),
            _ => Err(crate::Error::InvalidArgument(format!(
                "parse mode must be `strict` or `tt`, got `{s}`"
            ))),
        }
    }
}

/// A link between two word positions, `left < right`. The left word holds
/// `label+`, the right word `label-`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub left: usize,
    pub right: usize,
    pub label: String,
}

impl Link {
    pub fn new(left: usize, right: usize, label: impl Into<String>) -> Self {
        Link {
            left,
            right,
            label: label.into(),
        }
    }

    /// The connector this link consumes on word `i`, if `i` is an endpoint.
    pub fn connector_at(&self, i: usize) -> Option<Connector> {
        let dir = if i == self.left {
            crate::grammar::Direction::Right
        } else if i == self.right {
            crate::grammar::Direction::Left
        } else {
            return None;
        };
        Connector::new(self.label.clone(), dir).ok()
    }

    /// Interval crossing: `i < k < j < l` in either order.
    pub fn crosses(&self, other: &Link) -> bool {
        let (a, b) = (self.left, self.right);
        let (c, d) = (other.left, other.right);
        (a < c && c < b && b < d) || (c < a && a < d && d < b)
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.left, self.label, self.right)
    }
}

/// A connector on word `word` closed by a termination tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TtClosure {
    pub word: usize,
    pub connector: Connector,
}

impl fmt::Display for TtClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.word, self.connector)
    }
}

/// The lexicon entry and disjunct a word uses in a linkage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Choice {
    pub entry: usize,
    pub disjunct: Disjunct,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Linkage {
    pub words: Vec<String>,
    pub links: Vec<Link>,
    pub closures: Vec<TtClosure>,
    pub chosen: Vec<Choice>,
}

impl Linkage {
    /// Sorts links and closures into canonical order.
    pub fn canonicalize(&mut self) {
        self.links.sort();
        self.closures.sort();
    }

    /// Connectors word `i` uses in links, in link order.
    pub fn linked_connectors(&self, i: usize) -> Vec<Connector> {
        self.links
            .iter()
            .filter_map(|l| l.connector_at(i))
            .collect()
    }

    pub fn closures_of(&self, i: usize) -> Vec<Connector> {
        self.closures
            .iter()
            .filter(|c| c.word == i)
            .map(|c| c.connector.clone())
            .collect()
    }

    /// Strict linkages carry no closures.
    pub fn inferred_mode(&self) -> ParseMode {
        if self.closures.is_empty() {
            ParseMode::Strict
        } else {
            ParseMode::Tt
        }
    }

    fn sort_key(&self) -> (&[Link], &[Choice], &[TtClosure]) {
        (&self.links, &self.chosen, &self.closures)
    }
}

impl PartialOrd for Linkage {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Linkage {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then_with(|| self.words.cmp(&other.words))
    }
}

/// A broken linkage invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Shape(String),
    LinkIndex(Link),
    DuplicatePair { left: usize, right: usize },
    Crossing(Link, Link),
    Disconnected { unreached: Vec<usize> },
    UnknownEntry { word: usize },
    NotADisjunct { word: usize },
    Unsatisfied { word: usize },
    ClosureMismatch { word: usize },
    StrictClosure { word: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(m) => write!(f, "shape: {m}"),
            Violation::LinkIndex(l) => write!(f, "link {l} has bad endpoints or label"),
            Violation::DuplicatePair { left, right } => {
                write!(f, "words {left} and {right} are linked more than once")
            }
            Violation::Crossing(a, b) => write!(f, "planarity: {a} crosses {b}"),
            Violation::Disconnected { unreached } => {
                write!(
                    f,
                    "connectivity: words {unreached:?} not reachable from word 0"
                )
            }
            Violation::UnknownEntry { word } => {
                write!(f, "word {word}: chosen entry does not list this word")
            }
            Violation::NotADisjunct { word } => {
                write!(
                    f,
                    "word {word}: chosen disjunct is not an expansion of its entry"
                )
            }
            Violation::Unsatisfied { word } => {
                write!(
                    f,
                    "satisfaction: word {word} links differ from its disjunct"
                )
            }
            Violation::ClosureMismatch { word } => write!(
                f,
                "termination tags: word {word} closures differ from its unused connectors"
            ),
            Violation::StrictClosure { word } => {
                write!(f, "strict mode: word {word} has termination-tag closures")
            }
        }
    }
}

/// All pairs of crossing links; quadratic in the number of links.
pub fn crossing_pairs(links: &[Link]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..links.len() {
        for j in i + 1..links.len() {
            if links[i].crosses(&links[j]) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Words not reachable from word 0 through links.
fn unreached(n: usize, links: &[Link]) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut x = x;
        while p[x] != r {
            let next = p[x];
            p[x] = r;
            x = next;
        }
        r
    }
    for l in links {
        if l.left < n && l.right < n {
            let (a, b) = (find(&mut parent, l.left), find(&mut parent, l.right));
            parent[a] = b;
        }
    }
    let root = find(&mut parent, 0);
    (0..n).filter(|&i| find(&mut parent, i) != root).collect()
}

/// Checks every linkage invariant; returns all violations found.
pub fn validate_linkage(
    l: &Linkage,
    lexicon: &Lexicon,
    mode: ParseMode,
) -> Result<(), Vec<Violation>> {
    let n = l.words.len();
    let mut v = Vec::new();
    if n == 0 {
        v.push(Violation::Shape("no words".into()));
        return Err(v);
    }
    if l.chosen.len() != n {
        v.push(Violation::Shape(format!(
            "{} words but {} choices",
            n,
            l.chosen.len()
        )));
        return Err(v);
    }
    let mut pairs = BTreeSet::new();
    let mut good_links = Vec::new();
    for link in &l.links {
        if link.left >= link.right || link.right >= n || validate_label(&link.label).is_err() {
            v.push(Violation::LinkIndex(link.clone()));
            continue;
        }
        if !pairs.insert((link.left, link.right)) {
            v.push(Violation::DuplicatePair {
                left: link.left,
                right: link.right,
            });
        }
        good_links.push(link.clone());
    }
    for (a, b) in crossing_pairs(&good_links) {
        v.push(Violation::Crossing(
            good_links[a].clone(),
            good_links[b].clone(),
        ));
    }
    let missing = unreached(n, &good_links);
    if !missing.is_empty() {
        v.push(Violation::Disconnected { unreached: missing });
    }
    for (i, choice) in l.chosen.iter().enumerate() {
        if choice.entry >= lexicon.len()
            || !lexicon.entries_for(&l.words[i]).contains(&choice.entry)
        {
            v.push(Violation::UnknownEntry { word: i });
            continue;
        }
        let entry = lexicon.entry(choice.entry);
        if !entry.disjuncts().contains(&choice.disjunct) {
            v.push(Violation::NotADisjunct { word: i });
            continue;
        }
        if !same_multiset(&l.linked_connectors(i), choice.disjunct.connectors()) {
            v.push(Violation::Unsatisfied { word: i });
        }
        let closures = l.closures_of(i);
        match mode {
            ParseMode::Strict => {
                if !closures.is_empty() {
                    v.push(Violation::StrictClosure { word: i });
                }
            }
            ParseMode::Tt => {
                let expected = multiset_minus(entry.connectors(), choice.disjunct.connectors())
                    .unwrap_or_default();
                if !same_multiset(&closures, &expected) {
                    v.push(Violation::ClosureMismatch { word: i });
                }
            }
        }
    }
    if l.closures.iter().any(|c| c.word >= n) {
        v.push(Violation::Shape("closure on a missing word".into()));
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}
