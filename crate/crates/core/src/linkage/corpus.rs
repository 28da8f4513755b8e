//! Linkage corpus files. One record per line, three tab-separated fields:
//!
//! ```text
//! the cat ran<TAB>0-D-1 1-S-2<TAB>1:O-
//! ```
//!
//! tokens, links as `i-LABEL-j`, closures as `i:LABEL±`. A `%` line starts a
//! new sentence group; consecutive records with identical tokens and no
//! separator belong to the same sentence (alternative linkages).

use super::{validate_linkage, Choice, Link, Linkage, ParseMode, TtClosure};
use crate::error::{Error, Result};
use crate::grammar::{multiset_minus, same_multiset, Connector, Lexicon};

/// A record read back from a corpus file, with the mode it validated under.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkageRecord {
    pub linkage: Linkage,
    pub mode: ParseMode,
}

pub fn write_linkage_record(l: &Linkage) -> String {
    let links: Vec<String> = l.links.iter().map(|k| k.to_string()).collect();
    let closures: Vec<String> = l.closures.iter().map(|c| c.to_string()).collect();
    format!(
        "{}\t{}\t{}",
        l.words.join(" "),
        links.join(" "),
        closures.join(" ")
    )
}

/// Writes sentence groups, each preceded by a `% sentence <i>` marker.
pub fn write_linkage_corpus(groups: &[Vec<Linkage>]) -> String {
    let mut out = String::new();
    for (i, group) in groups.iter().enumerate() {
        out.push_str(&format!("% sentence {i}\n"));
        for l in group {
            out.push_str(&write_linkage_record(l));
            out.push('\n');
        }
    }
    out
}

fn parse_link(s: &str, line: usize) -> Result<Link> {
    let parts: Vec<&str> = s.split('-').collect();
    if parts.len() != 3 {
        return Err(Error::format(line, format!("malformed link `{s}`")));
    }
    let idx = |p: &str| {
        p.parse::<usize>()
            .map_err(|_| Error::format(line, format!("bad index in link `{s}`")))
    };
    let (a, b) = (idx(parts[0])?, idx(parts[2])?);
    if a >= b {
        return Err(Error::format(
            line,
            format!("link `{s}` must go left to right"),
        ));
    }
    Ok(Link::new(a, b, parts[1]))
}

fn parse_closure(s: &str, line: usize) -> Result<TtClosure> {
    let (w, c) = s
        .split_once(':')
        .ok_or_else(|| Error::format(line, format!("malformed closure `{s}`")))?;
    let word = w
        .parse()
        .map_err(|_| Error::format(line, format!("bad index in closure `{s}`")))?;
    let connector: Connector = c
        .parse()
        .map_err(|e: Error| Error::format(line, e.to_string()))?;
    Ok(TtClosure { word, connector })
}

/// Recovers each word's (entry, disjunct) from its links and closures.
fn resolve(
    words: Vec<String>,
    links: Vec<Link>,
    closures: Vec<TtClosure>,
    lexicon: &Lexicon,
    line: usize,
) -> Result<LinkageRecord> {
    let mode = if closures.is_empty() {
        ParseMode::Strict
    } else {
        ParseMode::Tt
    };
    let mut l = Linkage {
        words,
        links,
        closures,
        chosen: Vec::new(),
    };
    l.canonicalize();
    for (i, w) in l.words.iter().enumerate() {
        if !lexicon.contains(w) {
            return Err(Error::UnknownWord {
                word: w.clone(),
                position: i,
            });
        }
        let linked = l.linked_connectors(i);
        let closed = l.closures_of(i);
        let found = lexicon.entries_for(w).iter().find_map(|&e| {
            let entry = lexicon.entry(e);
            entry.disjuncts().iter().find_map(|d| {
                if !same_multiset(d.connectors(), &linked) {
                    return None;
                }
                let fits = match mode {
                    ParseMode::Strict => true,
                    ParseMode::Tt => multiset_minus(entry.connectors(), d.connectors())
                        .is_some_and(|rest| same_multiset(&rest, &closed)),
                };
                fits.then(|| Choice {
                    entry: e,
                    disjunct: d.clone(),
                })
            })
        });
        match found {
            Some(c) => l.chosen.push(c),
            None => {
                return Err(Error::format(
                    line,
                    format!("word {i} (`{w}`) matches no disjunct of its entries"),
                ))
            }
        }
    }
    validate_linkage(&l, lexicon, mode)
        .map_err(|v| Error::format(line, Error::InvalidLinkage(v).to_string()))?;
    Ok(LinkageRecord { linkage: l, mode })
}

/// Reads a corpus into sentence groups, validating every record.
pub fn read_linkage_corpus(text: &str, lexicon: &Lexicon) -> Result<Vec<Vec<LinkageRecord>>> {
    let mut groups: Vec<Vec<LinkageRecord>> = Vec::new();
    let mut open = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim_start().starts_with('%') {
            open = false;
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() > 3 {
            return Err(Error::format(
                line,
                "expected at most 3 tab-separated fields",
            ));
        }
        let words: Vec<String> = fields[0].split_whitespace().map(String::from).collect();
        if words.is_empty() {
            return Err(Error::format(line, "record has no tokens"));
        }
        let links = fields
            .get(1)
            .map(|f| f.split_whitespace().map(|s| parse_link(s, line)).collect())
            .transpose()?
            .unwrap_or_default();
        let closures = fields
            .get(2)
            .map(|f| {
                f.split_whitespace()
                    .map(|s| parse_closure(s, line))
                    .collect()
            })
            .transpose()?
            .unwrap_or_default();
        let rec = resolve(words, links, closures, lexicon, line)?;
        let same_sentence = open
            && groups
                .last()
                .and_then(|g| g.last())
                .is_some_and(|prev| prev.linkage.words == rec.linkage.words);
        if same_sentence {
            groups.last_mut().unwrap().push(rec);
        } else {
            groups.push(vec![rec]);
        }
        open = true;
    }
    Ok(groups)
}
