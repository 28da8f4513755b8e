//! Maximum total-PMI projective dependency parsing over raw token corpora.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::tree::SentenceTree;

/// `ln(C(a, b) * T / (C(a) * C(b)))` for ordered pairs `a` before `b`
/// within the window; `T` is the number of tokens. Pairs never seen are
/// absent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PmiTable {
    values: BTreeMap<(String, String), f64>,
}

impl PmiTable {
    pub fn from_values<I: IntoIterator<Item = ((String, String), f64)>>(values: I) -> Self {
        PmiTable {
            values: values.into_iter().collect(),
        }
    }

    pub fn get(&self, left: &str, right: &str) -> Option<f64> {
        self.values
            .get(&(left.to_string(), right.to_string()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.values
            .iter()
            .map(|((a, b), v)| (a.as_str(), b.as_str(), *v))
    }
}

impl fmt::Display for PmiTable {
    /// `word word value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((a, b), v) in &self.values {
            writeln!(f, "{a} {b} {v}")?;
        }
        Ok(())
    }
}

pub fn build_pmi<S: AsRef<[String]>>(corpus: &[S], window: usize) -> Result<PmiTable> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    let mut unigrams: BTreeMap<&str, f64> = BTreeMap::new();
    let mut pairs: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    let mut total = 0.0;
    for s in corpus {
        let s = s.as_ref();
        for (i, a) in s.iter().enumerate() {
            *unigrams.entry(a).or_default() += 1.0;
            total += 1.0;
            for b in s.iter().skip(i + 1).take(window) {
                *pairs.entry((a, b)).or_default() += 1.0;
            }
        }
    }
    if total == 0.0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(PmiTable {
        values: pairs
            .into_iter()
            .map(|((a, b), c)| {
                let v = (c * total / (unigrams[a] * unigrams[b])).ln();
                ((a.to_string(), b.to_string()), v)
            })
            .collect(),
    })
}

/// A single-rooted dependency tree; `heads[i]` is `None` for the root.
#[derive(Clone, Debug, PartialEq)]
pub struct DependencyTree {
    pub tokens: Vec<String>,
    pub heads: Vec<Option<usize>>,
    /// Total PMI over edges, summed in dependent order.
    pub score: f64,
}

impl DependencyTree {
    pub fn root(&self) -> Option<usize> {
        self.heads.iter().position(Option::is_none)
    }

    /// Sum of `|head - dependent|` over edges.
    pub fn total_span(&self) -> usize {
        self.heads
            .iter()
            .enumerate()
            .filter_map(|(d, h)| h.map(|h| h.abs_diff(d)))
            .sum()
    }

    /// Single root, acyclic, and no two edges cross (the root edge comes
    /// from a position left of every token).
    pub fn is_projective(&self) -> bool {
        is_projective_tree(&self.heads)
    }
}

pub(crate) fn is_projective_tree(heads: &[Option<usize>]) -> bool {
    let n = heads.len();
    if heads.iter().filter(|h| h.is_none()).count() != 1 || heads.iter().flatten().any(|&h| h >= n)
    {
        return false;
    }
    for start in 0..n {
        let mut cur = start;
        for _ in 0..=n {
            match heads[cur] {
                Some(h) => cur = h,
                None => break,
            }
        }
        if heads[cur].is_some() {
            return false;
        }
    }
    // Arcs as (left, right) on positions shifted by one; the root edge is (0, r + 1).
    let arcs: Vec<(usize, usize)> = heads
        .iter()
        .enumerate()
        .map(|(d, h)| {
            let h = h.map_or(0, |h| h + 1);
            (h.min(d + 1), h.max(d + 1))
        })
        .collect();
    for (i, &(a, b)) in arcs.iter().enumerate() {
        for &(c, d) in &arcs[i + 1..] {
            if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                return false;
            }
        }
    }
    true
}

pub const DEFAULT_MST_MAX_TOKENS: usize = 64;

/// Score of a partial structure: total PMI, then span (smaller is better).
#[derive(Clone, Copy, Debug, PartialEq)]
struct Val {
    pmi: f64,
    span: usize,
}

impl Val {
    const ZERO: Val = Val { pmi: 0.0, span: 0 };

    fn add(self, o: Val) -> Val {
        Val {
            pmi: self.pmi + o.pmi,
            span: self.span + o.span,
        }
    }

    fn better(self, o: Val) -> bool {
        self.pmi > o.pmi || (self.pmi == o.pmi && self.span < o.span)
    }
}

#[derive(Clone, Copy)]
enum Back {
    None,
    Split(usize),
}

/// Eisner decomposition; `complete[dir][s][t]` and `incomplete[dir][s][t]`
/// with dir 0 headed at `t` (left-pointing) and dir 1 headed at `s`.
struct Chart {
    complete: [Cells; 2],
    incomplete: [Cells; 2],
}

type Cells = Vec<Vec<Option<(Val, Back)>>>;

fn pick(best: &mut Option<(Val, Back)>, v: Val, back: Back) {
    match best {
        Some((b, _)) if !v.better(*b) => {}
        _ => *best = Some((v, back)),
    }
}

/// The projective single-rooted tree with the highest total PMI. Ties go
/// to the smaller total edge span, then to the leftmost root.
pub fn mst_parse(tokens: &[String], pmi: &PmiTable) -> Result<DependencyTree> {
    let n = tokens.len();
    if n == 0 {
        return Err(Error::EmptySentence);
    }
    let edge = |h: usize, d: usize| -> Option<Val> {
        let (l, r) = (h.min(d), h.max(d));
        pmi.get(&tokens[l], &tokens[r]).map(|v| Val {
            pmi: v,
            span: r - l,
        })
    };
    let empty = || vec![vec![None; n]; n];
    let mut ch = Chart {
        complete: [empty(), empty()],
        incomplete: [empty(), empty()],
    };
    for s in 0..n {
        ch.complete[0][s][s] = Some((Val::ZERO, Back::None));
        ch.complete[1][s][s] = Some((Val::ZERO, Back::None));
    }
    for len in 1..n {
        for s in 0..n - len {
            let t = s + len;
            for (dir, (h, d)) in [(0, (t, s)), (1, (s, t))] {
                let Some(w) = edge(h, d) else { continue };
                let mut best = None;
                for r in s..t {
                    if let (Some((a, _)), Some((b, _))) =
                        (ch.complete[1][s][r], ch.complete[0][r + 1][t])
                    {
                        pick(&mut best, a.add(b).add(w), Back::Split(r));
                    }
                }
                ch.incomplete[dir][s][t] = best;
            }
            let mut best = None;
            for r in s..t {
                if let (Some((a, _)), Some((b, _))) = (ch.complete[0][s][r], ch.incomplete[0][r][t])
                {
                    pick(&mut best, a.add(b), Back::Split(r));
                }
            }
            ch.complete[0][s][t] = best;
            let mut best = None;
            for r in s + 1..=t {
                if let (Some((a, _)), Some((b, _))) = (ch.incomplete[1][s][r], ch.complete[1][r][t])
                {
                    pick(&mut best, a.add(b), Back::Split(r));
                }
            }
            ch.complete[1][s][t] = best;
        }
    }
    let mut best: Option<(Val, usize)> = None;
    for r in 0..n {
        if let (Some((a, _)), Some((b, _))) = (ch.complete[0][0][r], ch.complete[1][r][n - 1]) {
            let v = a.add(b);
            if best.is_none_or(|(bv, _)| v.better(bv)) {
                best = Some((v, r));
            }
        }
    }
    let Some((_, root)) = best else {
        return Err(Error::NoStructure(format!(
            "no spanning tree over `{}` uses only known pairs",
            tokens.join(" ")
        )));
    };
    let mut heads = vec![None; n];
    backtrack(&ch, true, 0, 0, root, &mut heads);
    backtrack(&ch, true, 1, root, n - 1, &mut heads);
    let score = heads
        .iter()
        .enumerate()
        .filter_map(|(d, h)| h.map(|h| edge(h, d).expect("chosen edges are known").pmi))
        .sum();
    Ok(DependencyTree {
        tokens: tokens.to_vec(),
        heads,
        score,
    })
}

fn backtrack(
    ch: &Chart,
    complete: bool,
    dir: usize,
    s: usize,
    t: usize,
    heads: &mut [Option<usize>],
) {
    if s == t {
        return;
    }
    let table = if complete {
        &ch.complete
    } else {
        &ch.incomplete
    };
    let (_, back) = table[dir][s][t].expect("backtracking follows filled cells");
    let Back::Split(r) = back else { return };
    match (complete, dir) {
        (false, _) => {
            if dir == 0 {
                heads[s] = Some(t);
            } else {
                heads[t] = Some(s);
            }
            backtrack(ch, true, 1, s, r, heads);
            backtrack(ch, true, 0, r + 1, t, heads);
        }
        (true, 0) => {
            backtrack(ch, true, 0, s, r, heads);
            backtrack(ch, false, 0, r, t, heads);
        }
        (true, _) => {
            backtrack(ch, false, 1, s, r, heads);
            backtrack(ch, true, 1, r, t, heads);
        }
    }
}

/// Fraction of non-root gold tokens whose parsed head matches, with the
/// gold tree linearized nearest-first. A tree with no edges scores 1.
pub fn structure_vs_truth(parsed: &DependencyTree, gold: &SentenceTree) -> Result<f64> {
    let (_, gold_heads) = gold.linearize();
    if gold_heads.len() != parsed.heads.len() {
        return Err(Error::LengthMismatch {
            parsed: parsed.heads.len(),
            gold: gold_heads.len(),
        });
    }
    let mut total = 0usize;
    let mut hit = 0usize;
    for (g, p) in gold_heads.iter().zip(&parsed.heads) {
        if g.is_some() {
            total += 1;
            if g == p {
                hit += 1;
            }
        }
    }
    Ok(if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    })
}

/// Corpus attachment score of MST parses against gold trees, with PMI
/// built from the linearized gold corpus itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttachmentScore {
    /// Correct heads over non-root tokens, pooled across sentences.
    pub uas: f64,
    /// Standard error of `uas` with sentences as the sampling unit.
    pub stderr: f64,
    pub sentences: usize,
    pub tokens: usize,
}

pub fn attachment_score(gold: &[SentenceTree], window: usize) -> Result<AttachmentScore> {
    let linear: Vec<(Vec<String>, Vec<Option<usize>>)> =
        gold.iter().map(SentenceTree::linearize).collect();
    let tokens: Vec<&[String]> = linear.iter().map(|(t, _)| t.as_slice()).collect();
    let pmi = build_pmi(&tokens, window)?;
    let per_sentence = crate::par::map(&linear, |(toks, heads)| {
        let parsed = mst_parse(toks, &pmi)?;
        let scored = heads.iter().filter(|h| h.is_some()).count();
        let hit = heads
            .iter()
            .zip(&parsed.heads)
            .filter(|(g, p)| g.is_some() && g == p)
            .count();
        Ok((hit, scored))
    });
    let per_sentence: Vec<(usize, usize)> = per_sentence.into_iter().collect::<Result<_>>()?;
    let hits: usize = per_sentence.iter().map(|p| p.0).sum();
    let total: usize = per_sentence.iter().map(|p| p.1).sum();
    if total == 0 {
        return Err(Error::InvalidArgument(
            "no sentence has a non-root token".into(),
        ));
    }
    let uas = hits as f64 / total as f64;
    let m = per_sentence.len() as f64;
    let resid: f64 = per_sentence
        .iter()
        .map(|&(h, n)| (h as f64 - uas * n as f64).powi(2))
        .sum();
    let stderr = if m > 1.0 {
        (resid * m / (m - 1.0)).sqrt() / total as f64
    } else {
        0.0
    };
    Ok(AttachmentScore {
        uas,
        stderr,
        sentences: per_sentence.len(),
        tokens: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn pmi_of_one_pair() {
        let t = build_pmi(&[toks("a b")], 1).unwrap();
        assert_eq!(t.get("a", "b"), Some(2f64.ln()));
        assert_eq!(t.get("b", "a"), None);
        assert_eq!(t.len(), 1);
        assert!(build_pmi::<Vec<String>>(&[], 1).is_err());
        assert!(build_pmi(&[toks("a")], 0).is_err());
    }

    #[test]
    fn pmi_is_scale_invariant() {
        let one = vec![toks("a b c a"), toks("b c")];
        let two: Vec<Vec<String>> = one.iter().chain(one.iter()).cloned().collect();
        let (x, y) = (build_pmi(&one, 2).unwrap(), build_pmi(&two, 2).unwrap());
        assert_eq!(x.len(), y.len());
        for (a, b, v) in x.iter() {
            assert!((y.get(a, b).unwrap() - v).abs() < 1e-12);
        }
    }

    #[test]
    fn two_tokens() {
        let t = PmiTable::from_values([(("x".into(), "y".into()), 1.5)]);
        let d = mst_parse(&toks("x y"), &t).unwrap();
        assert_eq!(d.heads, vec![None, Some(0)]);
        assert_eq!(d.score, 1.5);
        assert!(d.is_projective());
    }

    #[test]
    fn prefers_chain() {
        let v = |a: &str, b: &str, x: f64| ((a.to_string(), b.to_string()), x);
        let t = PmiTable::from_values([
            v("a", "b", 3.0),
            v("b", "c", 3.0),
            v("c", "d", 3.0),
            v("a", "c", 1.0),
            v("a", "d", 1.0),
            v("b", "d", 1.0),
        ]);
        let d = mst_parse(&toks("a b c d"), &t).unwrap();
        assert_eq!(d.score, 9.0);
        assert_eq!(d.total_span(), 3);
        assert_eq!(d.root(), Some(0));
        assert_eq!(d.heads, vec![None, Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn unconnectable_sentence() {
        let t = PmiTable::from_values([(("x".into(), "y".into()), 1.0)]);
        assert!(matches!(
            mst_parse(&toks("x z"), &t),
            Err(Error::NoStructure(_))
        ));
        assert_eq!(mst_parse(&toks("z"), &t).unwrap().heads, vec![None]);
    }

    #[test]
    fn projectivity_check() {
        assert!(is_projective_tree(&[None, Some(0), Some(1)]));
        assert!(!is_projective_tree(&[None, None]));
        assert!(!is_projective_tree(&[Some(1), Some(0)]));
        // 0 -> 2 crosses 1 -> 3
        assert!(!is_projective_tree(&[None, Some(3), Some(0), Some(0)]));
        // an edge over the root
        assert!(!is_projective_tree(&[Some(2), None, Some(1)]));
        assert!(is_projective_tree(&[None, Some(2), Some(0)]));
        // a cycle
        assert!(!is_projective_tree(&[Some(2), None, Some(0)]));
    }
}
