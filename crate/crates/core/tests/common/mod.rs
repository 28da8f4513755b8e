//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls the routine it checks; shared code is limited to data
//! types, lexicon lookup, and the tree file format.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use linkgram::grammar::{Connector, Direction, Lexicon};
use linkgram::linkage::{Choice, Link, Linkage, ParseMode, TtClosure};
use linkgram::mst::PmiTable;
use linkgram::source::{admissible_targets, BranchingModel, StochasticSource, Table, Target};
use linkgram::tree::PathStep;
use rand::Rng;

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn remove_one(bag: &mut Vec<Connector>, c: &Connector) -> bool {
    match bag.iter().position(|x| x == c) {
        Some(i) => {
            bag.remove(i);
            true
        }
        None => false,
    }
}

// ---------------------------------------------------------------------------
// Linkages by exhaustive search.

struct Brute<'a> {
    n: usize,
    pairs: Vec<(usize, usize)>,
    /// Connectors still unlinked, per word.
    open: Vec<Vec<Connector>>,
    links: Vec<Link>,
    found: &'a mut Vec<Vec<Link>>,
}

impl Brute<'_> {
    fn row_done(&self, k: usize) -> bool {
        // After the last pair whose left end is `i`, word `i` is finished.
        let (i, _) = self.pairs[k];
        let last_of_row = k + 1 == self.pairs.len() || self.pairs[k + 1].0 != i;
        !last_of_row || self.open[i].is_empty()
    }

    fn go(&mut self, k: usize) {
        if k == self.pairs.len() {
            if self.open.iter().all(Vec::is_empty)
                && planar(&self.links)
                && connected(self.n, &self.links)
            {
                self.found.push(self.links.clone());
            }
            return;
        }
        let (i, j) = self.pairs[k];
        if self.row_done(k) {
            self.go(k + 1);
        }
        let labels: BTreeSet<String> = self.open[i]
            .iter()
            .filter(|c| c.direction() == Direction::Right)
            .map(|c| c.label().to_string())
            .filter(|l| self.open[j].contains(&Connector::left(l)))
            .collect();
        for label in labels {
            let (plus, minus) = (Connector::right(&label), Connector::left(&label));
            remove_one(&mut self.open[i], &plus);
            remove_one(&mut self.open[j], &minus);
            self.links.push(Link::new(i, j, label.clone()));
            if self.row_done(k) {
                self.go(k + 1);
            }
            self.links.pop();
            self.open[i].push(plus);
            self.open[j].push(minus);
        }
    }
}

/// Two links cross iff exactly one endpoint of one lies strictly inside the other.
pub fn crosses_by_intervals(a: &Link, b: &Link) -> bool {
    let inside = |x: usize, l: &Link| l.left < x && x < l.right;
    let shared = a.left == b.left || a.left == b.right || a.right == b.left || a.right == b.right;
    !shared && (inside(a.left, b) != inside(a.right, b))
}

fn planar(links: &[Link]) -> bool {
    links
        .iter()
        .enumerate()
        .all(|(x, a)| links[x + 1..].iter().all(|b| !crosses_by_intervals(a, b)))
}

fn connected(n: usize, links: &[Link]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(w) = stack.pop() {
        for l in links {
            for (a, b) in [(l.left, l.right), (l.right, l.left)] {
                if a == w && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Every linkage of `tokens`: each disjunct assignment times each link set.
pub fn brute_force_linkages(tokens: &[String], lexicon: &Lexicon, mode: ParseMode) -> Vec<Linkage> {
    let n = tokens.len();
    let options: Vec<Vec<(usize, usize)>> = tokens
        .iter()
        .map(|w| {
            lexicon
                .entries_for(w)
                .iter()
                .flat_map(|&e| (0..lexicon.entry(e).disjuncts().len()).map(move |d| (e, d)))
                .collect()
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
        }
    }
    let mut out = Vec::new();
    let mut pick = vec![0usize; n];
    loop {
        let chosen: Vec<(usize, usize)> = (0..n).map(|w| options[w][pick[w]]).collect();
        let open: Vec<Vec<Connector>> = chosen
            .iter()
            .map(|&(e, d)| lexicon.entry(e).disjuncts()[d].connectors().to_vec())
            .collect();
        if balanced(&open) {
            let mut found = Vec::new();
            if n == 1 {
                if open[0].is_empty() {
                    found.push(Vec::new());
                }
            } else {
                Brute {
                    n,
                    pairs: pairs.clone(),
                    open,
                    links: Vec::new(),
                    found: &mut found,
                }
                .go(0);
            }
            for links in found {
                out.push(assemble(tokens, lexicon, mode, &chosen, links));
            }
        }
        // Odometer over assignments.
        let mut w = 0;
        loop {
            if w == n {
                out.sort();
                out.dedup();
                return out;
            }
            pick[w] += 1;
            if pick[w] < options[w].len() {
                break;
            }
            pick[w] = 0;
            w += 1;
        }
    }
}

fn balanced(open: &[Vec<Connector>]) -> bool {
    let mut net: BTreeMap<&str, i64> = BTreeMap::new();
    for c in open.iter().flatten() {
        *net.entry(c.label()).or_default() += if c.direction() == Direction::Right {
            1
        } else {
            -1
        };
    }
    net.values().all(|&v| v == 0)
}

fn assemble(
    tokens: &[String],
    lexicon: &Lexicon,
    mode: ParseMode,
    chosen: &[(usize, usize)],
    mut links: Vec<Link>,
) -> Linkage {
    let mut closures = Vec::new();
    let mut choices = Vec::new();
    for (w, &(e, d)) in chosen.iter().enumerate() {
        let entry = lexicon.entry(e);
        let disjunct = entry.disjuncts()[d].clone();
        if mode == ParseMode::Tt {
            let mut rest = entry.connectors().to_vec();
            for c in disjunct.connectors() {
                assert!(remove_one(&mut rest, c));
            }
            closures.extend(
                rest.into_iter()
                    .map(|connector| TtClosure { word: w, connector }),
            );
        }
        choices.push(Choice { entry: e, disjunct });
    }
    links.sort();
    closures.sort();
    Linkage {
        words: tokens.to_vec(),
        links,
        closures,
        chosen: choices,
    }
}

/// All sentences over `words` with lengths `1..=max_len`, shortest first.
pub fn all_sentences(words: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    let mut layer: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * words.len());
        for s in &layer {
            for w in words {
                let mut t = s.clone();
                t.push(w.to_string());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

// ---------------------------------------------------------------------------
// Trees of an order-1 source by recursive expansion.

/// Every complete tree rooted at `term` with its probability, in bracket
/// form. Panics if `depth` is exceeded, which bounds infinite supports.
pub fn oracle_trees(src: &StochasticSource, term: &str, depth: usize) -> Vec<(String, f64)> {
    oracle_subtrees(src, term, None, depth)
}

fn oracle_subtrees(
    src: &StochasticSource,
    term: &str,
    consumed: Option<&Connector>,
    depth: usize,
) -> Vec<(String, f64)> {
    assert!(depth > 0, "support deeper than the oracle bound");
    let lex = src.lexicon_arc();
    let entry = lex
        .entries_for(term)
        .iter()
        .copied()
        .find(|&e| consumed.is_none_or(|c| lex.entry(e).connectors().contains(c)))
        .expect("term can take the parent edge");
    let mut frame = lex.entry(entry).connectors().to_vec();
    if let Some(c) = consumed {
        assert!(remove_one(&mut frame, c));
    }
    // Partial slot lists with their probability.
    let mut partial: Vec<(Vec<String>, f64)> = vec![(Vec::new(), 1.0)];
    for c in &frame {
        let table = src.get(term, c).expect("source covers the frame");
        let mut options: Vec<(String, f64)> = Vec::new();
        for (target, p) in table.iter() {
            if p <= 0.0 {
                continue;
            }
            match target {
                Target::Tt => options.push((format!("{c}=TT"), p)),
                Target::Term(u) => {
                    for (sub, q) in oracle_subtrees(src, u, Some(&c.mate()), depth - 1) {
                        options.push((format!("{c}={sub}"), p * q));
                    }
                }
            }
        }
        let mut next = Vec::new();
        for (slots, p) in &partial {
            for (o, q) in &options {
                let mut s = slots.clone();
                s.push(o.clone());
                next.push((s, p * q));
            }
        }
        partial = next;
    }
    partial
        .into_iter()
        .map(|(slots, p)| {
            if slots.is_empty() {
                (term.to_string(), p)
            } else {
                (format!("{term}({})", slots.join(" ")), p)
            }
        })
        .collect()
}

/// `r` takes an `a` and a `c`; `a` may take a `c`; nothing else links.
pub const THREE_TERM_LEXICON: &str = "r: A+ & C+;\na: A- & C+;\nc: C-;\n";

pub fn three_term_source(p_a: f64, p_rc: f64, p_ac: f64) -> StochasticSource {
    let lex = Arc::new(Lexicon::parse(THREE_TERM_LEXICON).unwrap());
    let mut t = BTreeMap::new();
    t.insert(
        ("r".to_string(), Connector::right("A")),
        Table::new([("a", p_a), ("TT", 1.0 - p_a)]),
    );
    t.insert(
        ("r".to_string(), Connector::right("C")),
        Table::new([("c", p_rc), ("TT", 1.0 - p_rc)]),
    );
    t.insert(
        ("a".to_string(), Connector::left("A")),
        Table::new([("TT", 1.0)]),
    );
    t.insert(
        ("a".to_string(), Connector::right("C")),
        Table::new([("c", p_ac), ("TT", 1.0 - p_ac)]),
    );
    t.insert(
        ("c".to_string(), Connector::left("C")),
        Table::new([("TT", 1.0)]),
    );
    StochasticSource::new(lex, t).unwrap()
}

// ---------------------------------------------------------------------------
// Random sources.

/// Random tables over every key of `lexicon`. `TT` gets an extra `tt_bias`
/// weight before normalization, so large biases give subcritical sources.
pub fn random_source<R: Rng>(lexicon: Arc<Lexicon>, tt_bias: f64, rng: &mut R) -> StochasticSource {
    let mut tables = BTreeMap::new();
    for key in lexicon.source_keys() {
        let targets = admissible_targets(&lexicon, &key.1);
        let weights: Vec<f64> = targets
            .iter()
            .map(|t| rng.gen_range(0.05..1.0) + if *t == Target::Tt { tt_bias } else { 0.0 })
            .collect();
        let total: f64 = weights.iter().sum();
        tables.insert(
            key,
            Table::new(
                targets
                    .into_iter()
                    .zip(weights.into_iter().map(|w| w / total)),
            ),
        );
    }
    StochasticSource::new(lexicon, tables).unwrap()
}

// ---------------------------------------------------------------------------
// Numeric oracles.

/// A product of positive reals kept as `mantissa * 2^exponent` with the
/// mantissa in `[1, 2)`, so it never underflows.
#[derive(Clone, Copy, Debug)]
pub struct WideProduct {
    mantissa: f64,
    exponent: i64,
}

impl Default for WideProduct {
    fn default() -> Self {
        WideProduct {
            mantissa: 1.0,
            exponent: 0,
        }
    }
}

impl WideProduct {
    pub fn mul(&mut self, x: f64) {
        assert!(x > 0.0 && x.is_finite());
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        assert!(exp > 0, "subnormal factor");
        let m = f64::from_bits((bits & !(0x7ff << 52)) | (1023 << 52));
        self.mantissa *= m;
        self.exponent += exp - 1023;
        if self.mantissa >= 2.0 {
            self.mantissa /= 2.0;
            self.exponent += 1;
        }
    }

    pub fn ln(&self) -> f64 {
        self.mantissa.ln() + self.exponent as f64 * std::f64::consts::LN_2
    }
}

/// KL between the grandparent grammar and its single-parent projection.
pub fn grandparent_kl(q: f64, lambda: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { x / 2.0 * x.ln() } else { 0.0 };
    q * 0.8 * (term(1.0 + lambda) + term(1.0 - lambda))
}

/// Mean size of a tree whose nodes each continue with probability `p`.
pub fn geometric_mean_size(p: f64) -> f64 {
    1.0 / (1.0 - p)
}

// ---------------------------------------------------------------------------
// Dependency trees by exhaustive search.

/// Heads where every arc's interior is dominated by its head, single root.
pub fn projective_by_dominance(heads: &[Option<usize>]) -> bool {
    let n = heads.len();
    if heads.iter().filter(|h| h.is_none()).count() != 1 {
        return false;
    }
    // Acyclic: each walk reaches the root within n steps.
    let dominated_by = |mut x: usize, h: usize| -> bool {
        for _ in 0..=n {
            if x == h {
                return true;
            }
            match heads[x] {
                Some(p) => x = p,
                None => return false,
            }
        }
        false
    };
    for d in 0..n {
        let mut x = d;
        let mut steps = 0;
        while let Some(p) = heads[x] {
            x = p;
            steps += 1;
            if steps > n {
                return false;
            }
        }
    }
    for (d, h) in heads.iter().enumerate() {
        if let Some(h) = *h {
            let (lo, hi) = (d.min(h), d.max(h));
            if !(lo + 1..hi).all(|k| dominated_by(k, h)) {
                return false;
            }
        }
    }
    true
}

/// Best projective tree as (pmi, span, root, heads) under the order: most
/// PMI, then least span, then leftmost root. `None` when none exists.
pub fn exhaustive_mst(
    tokens: &[String],
    pmi: &PmiTable,
) -> Option<(f64, usize, usize, Vec<Option<usize>>)> {
    let n = tokens.len();
    let mut best: Option<(f64, usize, usize, Vec<Option<usize>>)> = None;
    for root in 0..n {
        // Each non-root token picks a head among the other tokens.
        let others: Vec<usize> = (0..n).filter(|&d| d != root).collect();
        let mut pick = vec![0usize; others.len()];
        loop {
            let mut heads = vec![None; n];
            let mut ok = true;
            for (k, &d) in others.iter().enumerate() {
                let h = if pick[k] >= d { pick[k] + 1 } else { pick[k] };
                heads[d] = Some(h);
                if pmi.get(&tokens[d.min(h)], &tokens[d.max(h)]).is_none() {
                    ok = false;
                }
            }
            if ok && projective_by_dominance(&heads) {
                let mut score = 0.0;
                let mut span = 0;
                for (d, h) in heads.iter().enumerate() {
                    if let Some(h) = *h {
                        score += pmi.get(&tokens[d.min(h)], &tokens[d.max(h)]).unwrap();
                        span += d.abs_diff(h);
                    }
                }
                let better = match &best {
                    None => true,
                    Some((s, sp, r, _)) => {
                        score > *s || (score == *s && (span < *sp || (span == *sp && root < *r)))
                    }
                };
                if better {
                    best = Some((score, span, root, heads));
                }
            }
            let mut k = 0;
            loop {
                if k == pick.len() {
                    break;
                }
                pick[k] += 1;
                if pick[k] < n - 1 {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == pick.len() {
                break;
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Trees of any branching model, with ancestry tracked explicitly.

/// Every complete tree from `root` as (bracket text, probability without
/// the root draw). Ancestry steps are `(term, connector)` from the root down.
pub fn oracle_model_trees<M: BranchingModel>(
    model: &M,
    root: &str,
    depth: usize,
) -> Vec<(String, f64)> {
    model_subtrees(model, root, None, &[], depth)
}

fn model_subtrees<M: BranchingModel>(
    model: &M,
    term: &str,
    consumed: Option<&Connector>,
    path: &[PathStep],
    depth: usize,
) -> Vec<(String, f64)> {
    assert!(depth > 0, "support deeper than the oracle bound");
    let lex = model.lexicon();
    let entry = lex
        .entries_for(term)
        .iter()
        .copied()
        .find(|&e| consumed.is_none_or(|c| lex.entry(e).connectors().contains(c)))
        .expect("term can take the parent edge");
    let mut frame = lex.entry(entry).connectors().to_vec();
    if let Some(c) = consumed {
        assert!(remove_one(&mut frame, c));
    }
    let mut partial: Vec<(Vec<String>, f64)> = vec![(Vec::new(), 1.0)];
    for c in &frame {
        let table = model.table(path, term, c).expect("model covers the frame");
        let mut below = path.to_vec();
        below.push(PathStep {
            term: term.to_string(),
            connector: c.clone(),
        });
        let mut options: Vec<(String, f64)> = Vec::new();
        for (target, p) in table.iter() {
            if p <= 0.0 {
                continue;
            }
            match target {
                Target::Tt => options.push((format!("{c}=TT"), p)),
                Target::Term(u) => {
                    for (sub, q) in model_subtrees(model, u, Some(&c.mate()), &below, depth - 1) {
                        options.push((format!("{c}={sub}"), p * q));
                    }
                }
            }
        }
        let mut next = Vec::new();
        for (slots, p) in &partial {
            for (o, q) in &options {
                let mut s = slots.clone();
                s.push(o.clone());
                next.push((s, p * q));
            }
        }
        partial = next;
    }
    partial
        .into_iter()
        .map(|(slots, p)| {
            if slots.is_empty() {
                (term.to_string(), p)
            } else {
                (format!("{term}({})", slots.join(" ")), p)
            }
        })
        .collect()
}
