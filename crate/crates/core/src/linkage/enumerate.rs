//! Linkage enumeration by recursive region splitting.
//!
//! `solve(L, R, l, r)` returns every way of linking the words strictly
//! between `L` and `R` such that the right-pointing connectors `l` of `L`
//! and the left-pointing connectors `r` of `R` are all consumed and every
//! interior word hangs off `L` or `R`. Connector lists are ordered
//! farthest partner first, so a disjunct contributes one ordered variant per
//! distinct arrangement of its same-side connectors. Results are memoized
//! per region and list suffix.

use std::collections::HashMap;
use std::rc::Rc;

use super::{Choice, Link, Linkage, ParseMode, TtClosure};
use crate::error::{Error, Result};
use crate::grammar::{multiset_minus, Direction, Lexicon};
use crate::par;

pub const DEFAULT_MAX_TOKENS: usize = 16;

#[derive(Clone, Debug)]
pub struct ParserConfig {
    pub max_tokens: usize,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

struct Variant {
    entry: usize,
    disjunct: usize,
    left: Vec<String>,
    right: Vec<String>,
}

fn distinct_permutations(items: &[String]) -> Vec<Vec<String>> {
    let mut sorted = items.to_vec();
    sorted.sort();
    let mut out = Vec::new();
    let mut used = vec![false; sorted.len()];
    let mut cur = Vec::with_capacity(sorted.len());
    fn rec(
        sorted: &[String],
        used: &mut [bool],
        cur: &mut Vec<String>,
        out: &mut Vec<Vec<String>>,
    ) {
        if cur.len() == sorted.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..sorted.len() {
            if used[i] || (i > 0 && sorted[i] == sorted[i - 1] && !used[i - 1]) {
                continue;
            }
            used[i] = true;
            cur.push(sorted[i].clone());
            rec(sorted, used, cur, out);
            cur.pop();
            used[i] = false;
        }
    }
    rec(&sorted, &mut used, &mut cur, &mut out);
    out
}

fn variants_for(word: &str, lexicon: &Lexicon) -> Vec<Variant> {
    let mut out = Vec::new();
    for &entry in lexicon.entries_for(word) {
        for (d, disjunct) in lexicon.entry(entry).disjuncts().iter().enumerate() {
            let side = |dir| -> Vec<String> {
                disjunct
                    .connectors()
                    .iter()
                    .filter(|c| c.direction() == dir)
                    .map(|c| c.label().to_string())
                    .collect()
            };
            let lefts = distinct_permutations(&side(Direction::Left));
            let rights = distinct_permutations(&side(Direction::Right));
            for left in &lefts {
                for right in &rights {
                    out.push(Variant {
                        entry,
                        disjunct: d,
                        left: left.clone(),
                        right: right.clone(),
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Default)]
struct Partial {
    links: Vec<Link>,
    choices: Vec<(usize, usize)>,
}

const NONE: usize = usize::MAX;

type Key = (usize, usize, usize, usize, usize, usize);

struct Solver<'a> {
    n: usize,
    variants: &'a [Vec<Variant>],
    memo: HashMap<Key, Rc<Vec<Partial>>>,
}

impl Solver<'_> {
    fn right_list(&self, word: usize, var: usize, off: usize) -> &[String] {
        &self.variants[word][var].right[off..]
    }

    fn left_list(&self, word: usize, var: usize, off: usize) -> &[String] {
        if word == self.n {
            return &[];
        }
        &self.variants[word][var].left[off..]
    }

    fn solve(
        &mut self,
        l: usize,
        r: usize,
        lv: usize,
        lo: usize,
        rv: usize,
        ro: usize,
    ) -> Rc<Vec<Partial>> {
        let key = (l, r, lv, lo, rv, ro);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let result = Rc::new(self.compute(l, r, lv, lo, rv, ro));
        self.memo.insert(key, result.clone());
        result
    }

    fn compute(
        &mut self,
        l: usize,
        r: usize,
        lv: usize,
        lo: usize,
        rv: usize,
        ro: usize,
    ) -> Vec<Partial> {
        let llist: Vec<String> = self.right_list(l, lv, lo).to_vec();
        let rlist: Vec<String> = self.left_list(r, rv, ro).to_vec();
        if r == l + 1 {
            return if llist.is_empty() && rlist.is_empty() {
                vec![Partial::default()]
            } else {
                Vec::new()
            };
        }
        if llist.is_empty() && rlist.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        for w in l + 1..r {
            for wv in 0..self.variants[w].len() {
                let (wl, wr) = {
                    let var = &self.variants[w][wv];
                    (var.left.first().cloned(), var.right.first().cloned())
                };
                let left_ok = matches!((llist.first(), &wl), (Some(a), Some(b)) if a == b);
                let right_ok =
                    r < self.n && matches!((rlist.first(), &wr), (Some(a), Some(b)) if a == b);
                let lsols = if left_ok {
                    self.solve(l, w, lv, lo + 1, wv, 1)
                } else {
                    Rc::new(Vec::new())
                };
                let rsols = if right_ok {
                    self.solve(w, r, wv, 1, rv, ro + 1)
                } else {
                    Rc::new(Vec::new())
                };
                let link_lw = || Link::new(l, w, llist[0].clone());
                let link_wr = || Link::new(w, r, rlist[0].clone());
                if !lsols.is_empty() && !rsols.is_empty() {
                    combine(&mut out, &lsols, &rsols, &[link_lw(), link_wr()], (w, wv));
                }
                if !lsols.is_empty() {
                    let rest = self.solve(w, r, wv, 0, rv, ro);
                    combine(&mut out, &lsols, &rest, &[link_lw()], (w, wv));
                }
                if !rsols.is_empty() && llist.is_empty() {
                    let rest = self.solve(l, w, lv, lo, wv, 0);
                    combine(&mut out, &rest, &rsols, &[link_wr()], (w, wv));
                }
            }
        }
        out
    }
}

fn combine(
    out: &mut Vec<Partial>,
    a: &[Partial],
    b: &[Partial],
    links: &[Link],
    choice: (usize, usize),
) {
    for x in a {
        for y in b {
            let mut p = Partial {
                links: Vec::with_capacity(x.links.len() + y.links.len() + links.len()),
                choices: Vec::with_capacity(x.choices.len() + y.choices.len() + 1),
            };
            p.links.extend_from_slice(links);
            p.links.extend(x.links.iter().cloned());
            p.links.extend(y.links.iter().cloned());
            p.choices.push(choice);
            p.choices.extend_from_slice(&x.choices);
            p.choices.extend_from_slice(&y.choices);
            out.push(p);
        }
    }
}

/// All valid linkages of `tokens`, sorted by link set.
pub fn enumerate_linkages(
    tokens: &[String],
    lexicon: &Lexicon,
    mode: ParseMode,
    config: &ParserConfig,
) -> Result<Vec<Linkage>> {
    if tokens.is_empty() {
        return Err(Error::EmptySentence);
    }
    if tokens.len() > config.max_tokens {
        return Err(Error::TooLong {
            len: tokens.len(),
            max: config.max_tokens,
        });
    }
    if let Some((position, word)) = tokens
        .iter()
        .enumerate()
        .find(|(_, w)| !lexicon.contains(w))
    {
        return Err(Error::UnknownWord {
            word: word.clone(),
            position,
        });
    }
    let n = tokens.len();
    let variants: Vec<Vec<Variant>> = tokens.iter().map(|t| variants_for(t, lexicon)).collect();
    let mut solver = Solver {
        n,
        variants: &variants,
        memo: HashMap::new(),
    };
    let mut out = Vec::new();
    for v0 in 0..variants[0].len() {
        if !variants[0][v0].left.is_empty() {
            continue;
        }
        let sols = solver.solve(0, n, v0, 0, NONE, 0);
        for sol in sols.iter() {
            let mut assign = vec![NONE; n];
            assign[0] = v0;
            for &(w, wv) in &sol.choices {
                assign[w] = wv;
            }
            out.push(build(
                tokens,
                lexicon,
                mode,
                &variants,
                &assign,
                sol.links.clone(),
            ));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn build(
    tokens: &[String],
    lexicon: &Lexicon,
    mode: ParseMode,
    variants: &[Vec<Variant>],
    assign: &[usize],
    links: Vec<Link>,
) -> Linkage {
    let mut chosen = Vec::with_capacity(tokens.len());
    let mut closures = Vec::new();
    for (i, &vi) in assign.iter().enumerate() {
        let var = &variants[i][vi];
        let entry = lexicon.entry(var.entry);
        let disjunct = entry.disjuncts()[var.disjunct].clone();
        if mode == ParseMode::Tt {
            let rest = multiset_minus(entry.connectors(), disjunct.connectors())
                .expect("disjunct is a sub-multiset of its expression");
            closures.extend(
                rest.into_iter()
                    .map(|connector| TtClosure { word: i, connector }),
            );
        }
        chosen.push(Choice {
            entry: var.entry,
            disjunct,
        });
    }
    let mut l = Linkage {
        words: tokens.to_vec(),
        links,
        closures,
        chosen,
    };
    l.canonicalize();
    l
}

/// Parses many sentences; output order follows input order.
pub fn parse_corpus(
    sentences: &[Vec<String>],
    lexicon: &Lexicon,
    mode: ParseMode,
    config: &ParserConfig,
) -> Vec<Result<Vec<Linkage>>> {
    par::map(sentences, |s| enumerate_linkages(s, lexicon, mode, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn figure_sentence_has_one_linkage() {
        let lex = fixtures::figure_lexicon();
        let got = enumerate_linkages(
            &toks("the cat chased a snake"),
            &lex,
            ParseMode::Tt,
            &ParserConfig::default(),
        )
        .unwrap();
        assert_eq!(got.len(), 1);
        let l = &got[0];
        assert_eq!(
            l.links,
            vec![
                Link::new(0, 1, "D"),
                Link::new(1, 2, "S"),
                Link::new(2, 4, "O"),
                Link::new(3, 4, "D"),
            ]
        );
        let closures: Vec<String> = l.closures.iter().map(|c| c.to_string()).collect();
        assert_eq!(closures, vec!["1:O-", "4:S+"]);
    }

    #[test]
    fn mary_ran() {
        let lex = fixtures::figure_lexicon();
        let cfg = ParserConfig::default();
        let got = enumerate_linkages(&toks("Mary ran"), &lex, ParseMode::Strict, &cfg).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].links, vec![Link::new(0, 1, "S")]);
        assert!(got[0].closures.is_empty());
        assert!(
            enumerate_linkages(&toks("ran Mary"), &lex, ParseMode::Strict, &cfg)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn input_errors() {
        let lex = fixtures::figure_lexicon();
        let cfg = ParserConfig { max_tokens: 3 };
        assert_eq!(
            enumerate_linkages(&toks("the dog"), &lex, ParseMode::Tt, &cfg),
            Err(Error::UnknownWord {
                word: "dog".into(),
                position: 1
            })
        );
        assert!(matches!(
            enumerate_linkages(&toks("the cat chased a"), &lex, ParseMode::Tt, &cfg),
            Err(Error::TooLong { len: 4, max: 3 })
        ));
        assert_eq!(
            enumerate_linkages(&[], &lex, ParseMode::Tt, &cfg),
            Err(Error::EmptySentence)
        );
    }

    #[test]
    fn same_side_connectors_in_any_order() {
        let lex = Lexicon::parse("v: A+ & B+; x: A-; y: B-;").unwrap();
        let cfg = ParserConfig::default();
        assert_eq!(
            enumerate_linkages(&toks("v x y"), &lex, ParseMode::Strict, &cfg)
                .unwrap()
                .len(),
            1
        );
        assert_eq!(
            enumerate_linkages(&toks("v y x"), &lex, ParseMode::Strict, &cfg)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn permutations_are_distinct() {
        let p = distinct_permutations(&["A".into(), "A".into(), "B".into()]);
        assert_eq!(p.len(), 3);
    }
}
