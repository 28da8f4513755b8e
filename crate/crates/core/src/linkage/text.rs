//! Inline textual form of a linkage, `The + D - cat + S - chased`.
//!
//! Only linkages whose links form a single path through every word have
//! this form; the words are written in path order, and each step shows which
//! side holds the `+` end.

use std::fmt;
use std::str::FromStr;

use super::Linkage;
use crate::error::{Error, Result};
use crate::grammar::{validate_label, Direction};

/// A word path with typed steps. `steps[i]` joins `words[i]` and
/// `words[i + 1]`; its direction is the polarity held by `words[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkChain {
    pub words: Vec<String>,
    pub steps: Vec<(Direction, String)>,
}

impl LinkChain {
    /// Path form of `l`, or `None` when its links are not a Hamiltonian path.
    pub fn from_linkage(l: &Linkage) -> Option<LinkChain> {
        let n = l.words.len();
        if n == 0 {
            return None;
        }
        if n == 1 {
            return l.links.is_empty().then(|| LinkChain {
                words: l.words.clone(),
                steps: Vec::new(),
            });
        }
        if l.links.len() != n - 1 {
            return None;
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, link) in l.links.iter().enumerate() {
            if link.right >= n {
                return None;
            }
            adj[link.left].push(k);
            adj[link.right].push(k);
        }
        if adj.iter().any(|a| a.len() > 2 || a.is_empty()) {
            return None;
        }
        let start = (0..n).find(|&i| adj[i].len() == 1)?;
        let mut words = vec![l.words[start].clone()];
        let mut steps = Vec::new();
        let mut cur = start;
        let mut came_by = usize::MAX;
        while let Some(&k) = adj[cur].iter().find(|&&k| k != came_by) {
            let link = &l.links[k];
            let next = if link.left == cur {
                link.right
            } else {
                link.left
            };
            let dir = if cur < next {
                Direction::Right
            } else {
                Direction::Left
            };
            steps.push((dir, link.label.clone()));
            words.push(l.words[next].clone());
            came_by = k;
            cur = next;
        }
        (words.len() == n).then_some(LinkChain { words, steps })
    }
}

impl fmt::Display for LinkChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                let (dir, label) = &self.steps[i - 1];
                write!(f, " {} {} {} ", dir.sign(), label, dir.flip().sign())?;
            }
            f.write_str(w)?;
        }
        Ok(())
    }
}

impl FromStr for LinkChain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.is_empty() || !(toks.len() - 1).is_multiple_of(4) {
            return Err(Error::InvalidArgument(format!(
                "malformed link chain `{s}`"
            )));
        }
        let mut words = vec![toks[0].to_string()];
        let mut steps = Vec::new();
        for chunk in toks[1..].chunks(4) {
            let dir = match (chunk[0], chunk[2]) {
                ("+", "-") => Direction::Right,
                ("-", "+") => Direction::Left,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "link `{} {} {}` needs opposite signs",
                        chunk[0], chunk[1], chunk[2]
                    )))
                }
            };
            validate_label(chunk[1]).map_err(Error::InvalidArgument)?;
            steps.push((dir, chunk[1].to_string()));
            words.push(chunk[3].to_string());
        }
        Ok(LinkChain { words, steps })
    }
}

/// Inline text of `l`, or `None` when it is not representable.
pub fn linkage_to_text(l: &Linkage) -> Option<String> {
    LinkChain::from_linkage(l).map(|c| c.to_string())
}
