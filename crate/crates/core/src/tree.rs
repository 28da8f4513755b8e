//! Rooted sentence trees: the objects generated by a stochastic source and
//! scored by the path-conditioned models.
//!
//! Node 0 is the root; children are appended breadth-first. Every expanded
//! node lists one [`Slot`] per connector of its lexicon entry, except the
//! connector consumed by the edge from its parent. A slot either leads to a
//! child or is closed by the termination tag.

use std::fmt;

use crate::error::{Error, Result};
use crate::grammar::{multiset_minus, same_multiset, Connector, Direction, Lexicon, TT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Tt,
    Child(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Slot {
    pub connector: Connector,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreeNode {
    pub term: String,
    pub entry: usize,
    pub parent: Option<usize>,
    /// False only for frontier nodes left behind when a node cap was reached.
    pub expanded: bool,
    pub slots: Vec<Slot>,
}

/// One step of a root-to-node path: a term and the connector followed out
/// of it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathStep {
    pub term: String,
    pub connector: Connector,
}

impl fmt::Display for PathStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.term, self.connector)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SentenceTree {
    nodes: Vec<TreeNode>,
    cap_hit: bool,
}

impl SentenceTree {
    /// Wraps nodes without checking them; see [`SentenceTree::validate`].
    pub fn from_nodes(nodes: Vec<TreeNode>, cap_hit: bool) -> Self {
        SentenceTree { nodes, cap_hit }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cap_hit(&self) -> bool {
        self.cap_hit
    }

    /// The parent and the parent-side connector of node `i`.
    pub fn parent_edge(&self, i: usize) -> Option<(usize, &Connector)> {
        let p = self.nodes[i].parent?;
        self.nodes[p]
            .slots
            .iter()
            .find(|s| s.outcome == Outcome::Child(i))
            .map(|s| (p, &s.connector))
    }

    /// The connector of node `i` used up by its parent edge.
    pub fn consumed(&self, i: usize) -> Option<Connector> {
        self.parent_edge(i).map(|(_, c)| c.mate())
    }

    /// `(parent, parent-side connector, child)` for every edge.
    pub fn edges(&self) -> impl Iterator<Item = (usize, &Connector, usize)> {
        self.nodes.iter().enumerate().flat_map(|(p, n)| {
            n.slots.iter().filter_map(move |s| match s.outcome {
                Outcome::Child(c) => Some((p, &s.connector, c)),
                Outcome::Tt => None,
            })
        })
    }

    /// `(node, connector)` for every termination-tag closure.
    pub fn closures(&self) -> impl Iterator<Item = (usize, &Connector)> {
        self.nodes.iter().enumerate().flat_map(|(i, n)| {
            n.slots
                .iter()
                .filter(|s| s.outcome == Outcome::Tt)
                .map(move |s| (i, &s.connector))
        })
    }

    /// Ancestor steps of every node, root first. The root's list is empty.
    pub fn ancestries(&self) -> Vec<Vec<PathStep>> {
        let mut out: Vec<Vec<PathStep>> = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for s in &n.slots {
                if let Outcome::Child(c) = s.outcome {
                    if c > i && c < self.nodes.len() {
                        let mut path = out[i].clone();
                        path.push(PathStep {
                            term: n.term.clone(),
                            connector: s.connector.clone(),
                        });
                        out[c] = path;
                    }
                }
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        self.ancestries().iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Checks structure and coverage of every node against `lexicon`.
    pub fn validate(&self, lexicon: &Lexicon) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTree(m));
        if self.nodes.is_empty() {
            return bad("no nodes".into());
        }
        if self.nodes[0].parent.is_some() {
            return bad("root has a parent".into());
        }
        let mut seen_as_child = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for s in &n.slots {
                if let Outcome::Child(c) = s.outcome {
                    if c <= i || c >= self.nodes.len() {
                        return bad(format!("node {i} points to invalid child {c}"));
                    }
                    if self.nodes[c].parent != Some(i) {
                        return bad(format!("child {c} does not name {i} as parent"));
                    }
                    seen_as_child[c] += 1;
                }
            }
        }
        for (i, n) in self.nodes.iter().enumerate().skip(1) {
            if seen_as_child[i] != 1 || n.parent.is_none() {
                return bad(format!("node {i} is not attached exactly once"));
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if !lexicon.entries_for(&n.term).contains(&n.entry) {
                return bad(format!(
                    "node {i}: entry {} does not list `{}`",
                    n.entry, n.term
                ));
            }
            let entry = lexicon.entry(n.entry);
            let consumed = self.consumed(i);
            let frame = match &consumed {
                Some(c) => multiset_minus(entry.connectors(), std::slice::from_ref(c)),
                None => Some(entry.connectors().to_vec()),
            };
            let Some(frame) = frame else {
                return bad(format!(
                    "node {i}: `{}` cannot take its parent edge",
                    n.term
                ));
            };
            if !n.expanded {
                if !self.cap_hit || !n.slots.is_empty() {
                    return bad(format!("node {i} is unexpanded in a complete tree"));
                }
                continue;
            }
            let used: Vec<Connector> = n.slots.iter().map(|s| s.connector.clone()).collect();
            if !same_multiset(&used, &frame) {
                return bad(format!(
                    "node {i}: slots do not cover the connectors of `{}`",
                    n.term
                ));
            }
        }
        Ok(())
    }

    /// Token order and heads. Same-side children are placed nearest-first in
    /// slot order; `+` children go right of their parent, `-` children left.
    pub fn linearize(&self) -> (Vec<String>, Vec<Option<usize>>) {
        let mut order = Vec::with_capacity(self.nodes.len());
        self.linearize_into(0, &mut order);
        let mut position = vec![0; self.nodes.len()];
        for (pos, &node) in order.iter().enumerate() {
            position[node] = pos;
        }
        let tokens = order.iter().map(|&n| self.nodes[n].term.clone()).collect();
        let heads = order
            .iter()
            .map(|&n| self.nodes[n].parent.map(|p| position[p]))
            .collect();
        (tokens, heads)
    }

    fn linearize_into(&self, i: usize, out: &mut Vec<usize>) {
        let n = &self.nodes[i];
        let side = |dir: Direction| {
            n.slots.iter().filter_map(move |s| match s.outcome {
                Outcome::Child(c) if s.connector.direction() == dir => Some(c),
                _ => None,
            })
        };
        let left: Vec<usize> = side(Direction::Left).collect();
        for &c in left.iter().rev() {
            self.linearize_into(c, out);
        }
        out.push(i);
        for c in side(Direction::Right) {
            self.linearize_into(c, out);
        }
    }
}

impl fmt::Display for SentenceTree {
    /// Bracketed form, e.g. `cat(D-=the S+=chased(O+=TT) O-=TT)`. Trees cut
    /// by a node cap are prefixed with `!cap` and mark frontier nodes `(?)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cap_hit {
            f.write_str("!cap ")?;
        }
        self.fmt_node(0, f)
    }
}

impl SentenceTree {
    fn fmt_node(&self, i: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = &self.nodes[i];
        f.write_str(&n.term)?;
        if !n.expanded {
            return f.write_str("(?)");
        }
        if n.slots.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (k, s) in n.slots.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}=", s.connector)?;
            match s.outcome {
                Outcome::Tt => f.write_str(TT)?,
                Outcome::Child(c) => self.fmt_node(c, f)?,
            }
        }
        f.write_str(")")
    }

    /// Parses the bracketed form, resolving each node's lexicon entry.
    pub fn parse(text: &str, lexicon: &Lexicon) -> Result<SentenceTree> {
        let text = text.trim();
        let (cap_hit, body) = match text.strip_prefix("!cap") {
            Some(rest) => (true, rest.trim_start()),
            None => (false, text),
        };
        let mut p = TreeParser {
            chars: body.chars().collect(),
            pos: 0,
            nodes: Vec::new(),
            lexicon,
        };
        p.node(None, None)?;
        if p.pos != p.chars.len() {
            return Err(Error::InvalidTree(format!(
                "trailing input at column {}",
                p.pos + 1
            )));
        }
        let tree = SentenceTree {
            nodes: p.nodes,
            cap_hit,
        }
        .into_breadth_first();
        tree.validate(lexicon)?;
        Ok(tree)
    }

    /// Renumbers nodes in breadth-first order (children in slot order).
    fn into_breadth_first(self) -> SentenceTree {
        let n = self.nodes.len();
        let mut order = Vec::with_capacity(n);
        order.push(0);
        let mut head = 0;
        while head < order.len() {
            let i = order[head];
            head += 1;
            for s in &self.nodes[i].slots {
                if let Outcome::Child(c) = s.outcome {
                    order.push(c);
                }
            }
        }
        let mut new_id = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            new_id[old] = new;
        }
        let nodes = order
            .iter()
            .map(|&old| {
                let mut node = self.nodes[old].clone();
                node.parent = node.parent.map(|p| new_id[p]);
                for s in &mut node.slots {
                    if let Outcome::Child(c) = &mut s.outcome {
                        *c = new_id[*c];
                    }
                }
                node
            })
            .collect();
        SentenceTree {
            nodes,
            cap_hit: self.cap_hit,
        }
    }
}

struct TreeParser<'a> {
    chars: Vec<char>,
    pos: usize,
    nodes: Vec<TreeNode>,
    lexicon: &'a Lexicon,
}

impl TreeParser<'_> {
    fn err<T>(&self, m: &str) -> Result<T> {
        Err(Error::InvalidTree(format!(
            "{m} at column {}",
            self.pos + 1
        )))
    }

    fn token(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.chars.len() && !matches!(self.chars[self.pos], '(' | ')' | '=' | ' ')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn node(&mut self, parent: Option<usize>, consumed: Option<Connector>) -> Result<usize> {
        let term = self.token();
        if term.is_empty() || term == TT {
            return self.err("expected a term");
        }
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            term: term.clone(),
            entry: 0,
            parent,
            expanded: true,
            slots: Vec::new(),
        });
        let mut slots = Vec::new();
        let mut expanded = true;
        if self.chars.get(self.pos) == Some(&'(') {
            self.pos += 1;
            if self.chars.get(self.pos) == Some(&'?') && self.chars.get(self.pos + 1) == Some(&')')
            {
                self.pos += 2;
                expanded = false;
            } else {
                loop {
                    let conn_text = self.token();
                    let connector: Connector = match conn_text.parse() {
                        Ok(c) => c,
                        Err(_) => return self.err("expected a connector"),
                    };
                    if self.chars.get(self.pos) != Some(&'=') {
                        return self.err("expected `=`");
                    }
                    self.pos += 1;
                    let outcome = if self.chars[self.pos..].starts_with(&['T', 'T'])
                        && matches!(self.chars.get(self.pos + 2), Some(' ') | Some(')'))
                    {
                        self.pos += 2;
                        Outcome::Tt
                    } else {
                        Outcome::Child(self.node(Some(id), Some(connector.mate()))?)
                    };
                    slots.push(Slot { connector, outcome });
                    match self.chars.get(self.pos) {
                        Some(' ') => self.pos += 1,
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return self.err("expected ` ` or `)`"),
                    }
                }
            }
        }
        let mut frame: Vec<Connector> = slots.iter().map(|s: &Slot| s.connector.clone()).collect();
        frame.extend(consumed.clone());
        let entry = self.lexicon.entries_for(&term).iter().copied().find(|&e| {
            let conns = self.lexicon.entry(e).connectors();
            if expanded {
                same_multiset(conns, &frame)
            } else {
                consumed.as_ref().is_none_or(|c| conns.contains(c))
            }
        });
        let Some(entry) = entry else {
            return Err(Error::InvalidTree(format!(
                "`{term}` has no lexicon entry matching connectors {:?}",
                frame.iter().map(|c| c.to_string()).collect::<Vec<_>>()
            )));
        };
        let n = &mut self.nodes[id];
        n.entry = entry;
        n.expanded = expanded;
        n.slots = slots;
        Ok(id)
    }
}

/// Reads a tree corpus: one bracketed tree per line, `%` comments.
pub fn read_tree_corpus(text: &str, lexicon: &Lexicon) -> Result<Vec<SentenceTree>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'))
        .map(|(i, l)| {
            SentenceTree::parse(l, lexicon).map_err(|e| Error::format(i + 1, e.to_string()))
        })
        .collect()
}

pub fn write_tree_corpus(trees: &[SentenceTree]) -> String {
    let mut out = String::new();
    for t in trees {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bracket_round_trip() {
        let lex = fixtures::generation_lexicon();
        let text = "cat(D-=the S+=chased(O+=TT) O-=TT)";
        let t = SentenceTree::parse(text, &lex).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.to_string(), text);
        assert_eq!(t.consumed(2), Some(Connector::left("S")));
        assert_eq!(t.edges().count(), 2);
        assert_eq!(t.closures().count(), 2);
    }

    #[test]
    fn rejects_uncovered_nodes() {
        let lex = fixtures::generation_lexicon();
        assert!(SentenceTree::parse("cat(D-=the S+=TT)", &lex).is_err());
        assert!(SentenceTree::parse("cat(D-=the S+=TT O-=TT X+=TT)", &lex).is_err());
        assert!(SentenceTree::parse("cat(D-=the(D+=TT) S+=TT O-=TT)", &lex).is_err());
        assert!(SentenceTree::parse("cat(?)", &lex).is_err());
        assert!(SentenceTree::parse("!cap cat(D-=the S+=chased(?) O-=TT)", &lex).is_ok());
    }

    #[test]
    fn linearization_places_sides() {
        let lex = fixtures::generation_lexicon();
        let t =
            SentenceTree::parse("cat(D-=the S+=chased(O+=snake(D-=a S+=TT)) O-=TT)", &lex).unwrap();
        let (tokens, heads) = t.linearize();
        assert_eq!(tokens.join(" "), "the cat chased a snake");
        assert_eq!(heads, vec![Some(1), None, Some(1), Some(4), Some(2)]);
    }

    #[test]
    fn ancestry_paths() {
        let lex = fixtures::generation_lexicon();
        let t =
            SentenceTree::parse("cat(D-=the S+=chased(O+=snake(D-=a S+=TT)) O-=TT)", &lex).unwrap();
        let paths = t.ancestries();
        assert_eq!(t.node(2).term, "chased");
        assert_eq!(t.node(3).term, "snake");
        let snake = paths[3].iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert_eq!(snake, vec!["cat:S+", "chased:O+"]);
        assert_eq!(t.depth(), 3);
    }
}
