//! Small grammars and sources shared by tests, benches, and examples.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::grammar::{Connector, Lexicon};
use crate::scorer::{ContextKey, Order, PathConditionedModel};
use crate::source::{RootDist, StochasticSource, Table};
use crate::tree::PathStep;

/// Five statements, the last written without its colon.
pub const FIGURE_LEXICON: &str = "\
a the: D+;
cat snake: D- & (S+ or O-);
Mary: O- or S+;
ran: S-;
chased S- & O+;
";

/// The figure lexicon with `ran` also able to take an object.
pub const GENERATION_LEXICON: &str = "\
a the: D+;
cat snake: D- & (S+ or O-);
Mary: O- or S+;
ran: S- or O+;
chased: S- & O+;
";

/// Tables over [`GENERATION_LEXICON`]; `cat` and `snake` share the worked
/// tables, the rest are filled in so the source is subcritical.
pub const FIGURE_SOURCE: &str = "\
cat D- the 0.6
cat D- a 0.4
cat D- TT 0
cat O- chased 0.3
cat O- ran 0.2
cat O- TT 0.5
cat S+ chased 0.5
cat S+ ran 0.4
cat S+ TT 0.1
snake D- the 0.6
snake D- a 0.4
snake D- TT 0
snake O- chased 0.3
snake O- ran 0.2
snake O- TT 0.5
snake S+ chased 0.5
snake S+ ran 0.4
snake S+ TT 0.1
the D+ cat 0.05
the D+ snake 0.05
the D+ TT 0.9
a D+ cat 0.05
a D+ snake 0.05
a D+ TT 0.9
Mary O- chased 0.3
Mary O- ran 0.1
Mary O- TT 0.6
Mary S+ chased 0.4
Mary S+ ran 0.3
Mary S+ TT 0.3
chased S- cat 0.1
chased S- snake 0.05
chased S- Mary 0.05
chased S- TT 0.8
chased O+ cat 0.1
chased O+ snake 0.05
chased O+ Mary 0.05
chased O+ TT 0.8
ran S- cat 0.05
ran S- snake 0.05
ran S- Mary 0.05
ran S- TT 0.85
ran O+ cat 0.05
ran O+ snake 0.05
ran O+ Mary 0.05
ran O+ TT 0.85
";

/// Eight words with a repeated entry (`ran`) and repeated same-side
/// connectors (`saw`, `Mary`).
pub const PARSER_TEST_LEXICON: &str = "\
the a: D+;
cat dog: D- & (S+ or O-);
Mary: O- or S+ or (S+ & S+);
ran: S-;
ran: S- & (O+ or S-);
chased: S- & O+;
saw: (S- & O+ & O+) or (S- & D+) or O-;
";

pub fn figure_lexicon() -> Lexicon {
    Lexicon::parse(FIGURE_LEXICON).expect("fixture lexicon parses")
}

pub fn generation_lexicon() -> Lexicon {
    Lexicon::parse(GENERATION_LEXICON).expect("fixture lexicon parses")
}

pub fn parser_test_lexicon() -> Lexicon {
    Lexicon::parse(PARSER_TEST_LEXICON).expect("fixture lexicon parses")
}

pub fn figure_source() -> StochasticSource {
    StochasticSource::parse(FIGURE_SOURCE, Arc::new(generation_lexicon()))
        .expect("fixture source is valid")
}

/// One term `w: A- & A+` whose `A+` continues with probability `p`; its
/// `A-` always closes, so tree sizes are geometric with mean `1 / (1 - p)`.
pub fn chain_source(p: f64) -> StochasticSource {
    let lex = Arc::new(Lexicon::parse("w: A- & A+;").expect("fixture lexicon parses"));
    let mut tables = BTreeMap::new();
    tables.insert(
        ("w".to_string(), Connector::right("A")),
        Table::new([("w", p), ("TT", 1.0 - p)]),
    );
    tables.insert(
        ("w".to_string(), Connector::left("A")),
        Table::new([("TT", 1.0)]),
    );
    StochasticSource::new(lex, tables).expect("fixture source is valid")
}

pub const GRANDPARENT_LEXICON: &str = "a b: P+;\nm: P- & P-;\n";

/// Roots `a`, `b` with probability 1/2 each.
pub fn grandparent_roots() -> RootDist {
    RootDist::new(vec![("a".into(), 0.5), ("b".into(), 0.5)]).expect("valid roots")
}

/// Order-2 model where `m`, hanging from `a` or `b`, fills its free `P-`
/// slot with a copy of its parent with probability `0.8 (1 + lambda) / 2`
/// and with the other root term with `0.8 (1 - lambda) / 2`. `q` is the
/// chance a root takes an `m`. Context masses are exact visit probabilities
/// under [`grandparent_roots`].
pub fn grandparent_model(q: f64, lambda: f64) -> PathConditionedModel {
    copy_model(&["a", "b"], q, lambda)
}

/// The lexicon of [`copy_model`] over `roots`.
pub fn copy_lexicon(roots: &[&str]) -> String {
    format!("{}: P+;\nm: P- & P-;\n", roots.join(" "))
}

/// [`grandparent_model`] over any set of root terms, uniform at the root.
/// Below `m` the parent is copied with probability
/// `0.8 (1 + (k - 1) lambda) / k` and each other root term drawn with
/// `0.8 (1 - lambda) / k`, so `lambda = 0` is context-free.
pub fn copy_model(roots: &[&str], q: f64, lambda: f64) -> PathConditionedModel {
    let lex = Arc::new(Lexicon::parse(&copy_lexicon(roots)).expect("fixture lexicon parses"));
    let k = roots.len() as f64;
    let p_plus = Connector::right("P");
    let p_minus = Connector::left("P");
    let same = 0.8 * (1.0 + (k - 1.0) * lambda) / k;
    let other = 0.8 * (1.0 - lambda) / k;
    let mut tables = BTreeMap::new();
    let mut mass = BTreeMap::new();
    for &root in roots {
        let top = ContextKey::new(Vec::new(), root, p_plus.clone());
        tables.insert(top.clone(), Table::new([("m", q), ("TT", 1.0 - q)]));
        mass.insert(top, 1.0 / k);
        let path = vec![PathStep {
            term: root.to_string(),
            connector: p_plus.clone(),
        }];
        let below = ContextKey::new(path, "m", p_minus.clone());
        let mut row: Vec<(&str, f64)> = roots
            .iter()
            .map(|&r| (r, if r == root { same } else { other }))
            .collect();
        row.push(("TT", 0.2));
        tables.insert(below.clone(), Table::new(row));
        mass.insert(below, q / k);
    }
    let uniform = RootDist::new(roots.iter().map(|r| (r.to_string(), 1.0 / k)).collect())
        .expect("valid roots");
    PathConditionedModel::new(lex, Order::Finite(2), 0.0, tables)
        .and_then(|m| m.with_mass(mass))
        .expect("fixture model is valid")
        .with_roots(uniform)
}
