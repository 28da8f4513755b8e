//! The linear-context correction factor of an n-gram view of a sentence.

use std::collections::HashMap;

/// Occurrence counts of every contiguous token sequence in a corpus.
#[derive(Clone, Debug, Default)]
pub struct NgramCounts {
    counts: HashMap<Vec<String>, u64>,
}

impl NgramCounts {
    pub fn from_corpus<S: AsRef<[String]>>(sentences: &[S]) -> Self {
        let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
        for s in sentences {
            let s = s.as_ref();
            for i in 0..s.len() {
                for j in i + 1..=s.len() {
                    *counts.entry(s[i..j].to_vec()).or_default() += 1;
                }
            }
        }
        NgramCounts { counts }
    }

    pub fn count(&self, seq: &[String]) -> u64 {
        self.counts.get(seq).copied().unwrap_or(0)
    }
}

/// Product over `k = n + 2 ..= m` (1-based, `m` tokens) of
/// `C(w_1..w_{k-1}) / C(w_{k-n}..w_{k-1})`; a `0/0` ratio counts as 1.
pub fn ngram_context_factor(sentence: &[String], n: usize, counts: &NgramCounts) -> f64 {
    let m = sentence.len();
    let mut factor = 1.0;
    for k in (n + 2)..=m {
        let prefix = &sentence[..k - 1];
        let window = &sentence[k - 1 - n..k - 1];
        let (num, den) = (counts.count(prefix), counts.count(window));
        if den == 0 {
            continue;
        }
        factor *= num as f64 / den as f64;
    }
    factor
}
