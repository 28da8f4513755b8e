//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every tolerance is a named constant below.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use common::{
    all_sentences, brute_force_linkages, exhaustive_mst, geometric_mean_size, grandparent_kl,
    oracle_trees, random_source, three_term_source, toks,
};
use linkgram::estimator::{count_trees, estimate_source};
use linkgram::fixtures;
use linkgram::grammar::Connector;
use linkgram::linkage::{enumerate_linkages, ParseMode, ParserConfig};
use linkgram::mst::{mst_parse, PmiTable};
use linkgram::par;
use linkgram::scorer::{
    divergence_report, divergence_sweep, exact_divergence, score_tree_exact, score_tree_yuret,
    DivergenceConfig, PathConditionedModel,
};
use linkgram::source::{
    generate_corpus, generate_tree, mean_offspring_matrix, spectral_radius, GenerationConfig,
    PowerIteration, RootDist, Target,
};
use linkgram::tree::{write_tree_corpus, Outcome, SentenceTree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GENERATION_SIGMAS: f64 = 3.0;
const GENERATION_SAMPLES: usize = 10_000;
const RANDOM_SCORING_CASES: usize = 1_000;
const NORMALIZATION_TOL: f64 = 1e-6;
const DIVERGENCE_SIGMAS: f64 = 3.0;
const DIVERGENCE_SAMPLES: usize = 10_000;
const CONTROL_TOL: f64 = 1e-9;
const CONSISTENCY_TREES: usize = 50_000;
const CONSISTENCY_TOL: f64 = 0.02;
const RADIUS_TOL: f64 = 1e-6;
const MEAN_SIZE_REL_TOL: f64 = 0.05;
const PARSER_MAX_LEN: usize = 6;
const MST_CASES: usize = 500;
const MST_MAX_LEN: usize = 6;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn c1_worked_linkage() -> Verdict {
    let lex = fixtures::figure_lexicon();
    let got = enumerate_linkages(
        &toks("the cat chased a snake"),
        &lex,
        ParseMode::Tt,
        &ParserConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    check(got.len() == 1, format!("{} linkages", got.len()))?;
    let links: Vec<String> = got[0].links.iter().map(|l| l.to_string()).collect();
    let closures: Vec<String> = got[0].closures.iter().map(|c| c.to_string()).collect();
    check(
        links == ["0-D-1", "1-S-2", "2-O-4", "3-D-4"],
        format!("links {links:?}"),
    )?;
    check(
        closures == ["1:O-", "4:S+"],
        format!("closures {closures:?}"),
    )?;
    Ok(format!(
        "links {} closures {}",
        links.join(" "),
        closures.join(" ")
    ))
}

fn c2_generation_statistics() -> Verdict {
    let src = fixtures::figure_source();
    let trees = generate_corpus(
        &src,
        &RootDist::single("cat"),
        GENERATION_SAMPLES,
        &GenerationConfig::default(),
        2,
    )
    .map_err(|e| e.to_string())?;
    let n = GENERATION_SAMPLES as f64;
    let expected: [(&str, &[(&str, f64)]); 3] = [
        ("D-", &[("the", 0.6), ("a", 0.4)]),
        ("O-", &[("chased", 0.3), ("ran", 0.2), ("TT", 0.5)]),
        ("S+", &[("chased", 0.5), ("ran", 0.4), ("TT", 0.1)]),
    ];
    let mut worst: f64 = 0.0;
    for (conn, table) in expected {
        let conn: Connector = conn.parse().unwrap();
        let mut counts: BTreeMap<Target, f64> = BTreeMap::new();
        for g in &trees {
            let s = g
                .tree
                .root()
                .slots
                .iter()
                .find(|s| s.connector == conn)
                .ok_or("root lacks a slot")?;
            let t = match s.outcome {
                Outcome::Tt => Target::Tt,
                Outcome::Child(c) => Target::term(&g.tree.node(c).term),
            };
            *counts.entry(t).or_default() += 1.0;
        }
        for &(t, p) in table {
            let hat = counts.get(&Target::from(t)).copied().unwrap_or(0.0) / n;
            let se = (p * (1.0 - p) / n).sqrt();
            let z = (hat - p).abs() / se;
            worst = worst.max(z);
            check(
                z <= GENERATION_SIGMAS,
                format!("cat {conn} {t}: {hat:.4} vs {p} ({z:.2} se)"),
            )?;
        }
    }
    Ok(format!(
        "max deviation {worst:.2} se over {GENERATION_SAMPLES} samples"
    ))
}

fn c3_order_one_equivalence() -> Verdict {
    let lex = Arc::new(fixtures::generation_lexicon());
    let words: Vec<&str> = lex.words().collect();
    let roots = RootDist::uniform(&lex);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sizes = 0;
    for case in 0..RANDOM_SCORING_CASES {
        let src = random_source(lex.clone(), rng.gen_range(1.0..8.0), &mut rng);
        let model = PathConditionedModel::from_source(&src);
        let root = words[rng.gen_range(0..words.len())];
        let g = generate_tree(&model, root, &GenerationConfig::default(), case as u64)
            .map_err(|e| e.to_string())?;
        check(!g.tree.cap_hit(), "cap hit")?;
        let a = score_tree_exact(&g.tree, &model, &roots).map_err(|e| e.to_string())?;
        let b = score_tree_yuret(&g.tree, &model, &roots).map_err(|e| e.to_string())?;
        check(
            a.to_bits() == b.to_bits(),
            format!("case {case}: {a} vs {b}"),
        )?;
        sizes += g.tree.len();
    }
    Ok(format!(
        "{RANDOM_SCORING_CASES} trees ({sizes} nodes) bit-identical"
    ))
}

fn c4_normalization() -> Verdict {
    let src = three_term_source(0.6, 0.5, 0.3);
    let lex = src.lexicon_arc().clone();
    let roots = RootDist::uniform(&lex);
    let mut total = 0.0;
    let mut count = 0;
    for (root, _) in roots.entries() {
        for (text, _) in oracle_trees(&src, root, 8) {
            let tree = SentenceTree::parse(&text, &lex).map_err(|e| e.to_string())?;
            total += score_tree_exact(&tree, &src, &roots)
                .map_err(|e| e.to_string())?
                .exp();
            count += 1;
        }
    }
    check(
        (total - 1.0).abs() <= NORMALIZATION_TOL,
        format!("mass {total}"),
    )?;
    Ok(format!("{count} trees, total mass {total:.12}"))
}

fn c5_divergence() -> Verdict {
    let (q, lambda) = (0.7, 0.9);
    let model = fixtures::grandparent_model(q, lambda);
    let roots = fixtures::grandparent_roots();
    let config = DivergenceConfig {
        samples: DIVERGENCE_SAMPLES,
        seed: 5,
        ..DivergenceConfig::default()
    };
    let r = divergence_report(&model, &roots, &config).map_err(|e| e.to_string())?;
    let exact = r.exact.as_ref().ok_or("support not enumerated")?.kl;
    check(
        (exact - grandparent_kl(q, lambda)).abs() < 1e-12,
        format!(
            "enumerated {exact} vs closed form {}",
            grandparent_kl(q, lambda)
        ),
    )?;
    check(exact > 0.0, "enumerated KL not positive")?;
    check(
        r.kl_estimate > DIVERGENCE_SIGMAS * r.kl_stderr,
        format!("estimate {} stderr {}", r.kl_estimate, r.kl_stderr),
    )?;
    check(
        (r.kl_estimate - exact).abs() <= DIVERGENCE_SIGMAS * r.kl_stderr,
        format!("estimate {} far from {exact}", r.kl_estimate),
    )?;
    let order1 = PathConditionedModel::from_source(&fixtures::figure_source());
    let control = divergence_report(&order1, &RootDist::uniform(order1.lexicon_arc()), &config)
        .map_err(|e| e.to_string())?;
    check(
        control.kl_estimate.abs() <= CONTROL_TOL,
        format!("order-1 control KL {}", control.kl_estimate),
    )?;
    let (flat, _) = exact_divergence(&fixtures::grandparent_model(q, 0.0), &roots, 1000)
        .map_err(|e| e.to_string())?
        .ok_or("support not enumerated")?;
    check(
        flat.kl.abs() <= CONTROL_TOL,
        format!("dependence-free control KL {}", flat.kl),
    )?;
    Ok(format!(
        "enumerated {exact:.6}, estimate {:.6} +- {:.6}, controls {:.1e} / {:.1e}",
        r.kl_estimate, r.kl_stderr, control.kl_estimate, flat.kl
    ))
}

fn c6_estimator_consistency() -> Verdict {
    let src = fixtures::figure_source();
    let lex = src.lexicon_arc().clone();
    let trees: Vec<SentenceTree> = generate_corpus(
        &src,
        &RootDist::uniform(&lex),
        CONSISTENCY_TREES,
        &GenerationConfig::default(),
        6,
    )
    .map_err(|e| e.to_string())?
    .into_iter()
    .map(|g| g.tree)
    .collect();
    let counts = count_trees(&trees, &lex).map_err(|e| e.to_string())?;
    let est = estimate_source(&counts, lex, 0.0).map_err(|e| e.to_string())?;
    let err = est.max_abs_diff(&src);
    check(err < CONSISTENCY_TOL, format!("L-inf error {err}"))?;
    Ok(format!("L-inf error {err:.4} at N = {CONSISTENCY_TREES}"))
}

fn c7_branching() -> Verdict {
    let mut parts = Vec::new();
    for p in [0.5, 0.9, 1.0] {
        let m = mean_offspring_matrix(&fixtures::chain_source(p)).map_err(|e| e.to_string())?;
        let (rho, _) =
            spectral_radius(&m.matrix, &PowerIteration::default()).map_err(|e| e.to_string())?;
        check(
            (rho - p).abs() <= RADIUS_TOL,
            format!("p={p}: radius {rho}"),
        )?;
        parts.push(format!("rho({p})={rho:.9}"));
    }
    for p in [0.5, 0.9] {
        let src = fixtures::chain_source(p);
        let trees = generate_corpus(
            &src,
            &RootDist::single("w"),
            GENERATION_SAMPLES,
            &GenerationConfig::default(),
            7,
        )
        .map_err(|e| e.to_string())?;
        let capped = trees.iter().filter(|g| g.tree.cap_hit()).count();
        check(capped == 0, format!("p={p}: {capped} cap hits"))?;
        if p == 0.5 {
            let mean = trees.iter().map(|g| g.tree.len()).sum::<usize>() as f64
                / GENERATION_SAMPLES as f64;
            let want = geometric_mean_size(p);
            check(
                (mean - want).abs() <= MEAN_SIZE_REL_TOL * want,
                format!("mean size {mean}"),
            )?;
            parts.push(format!("mean size {mean:.4}"));
        }
    }
    parts.push("0 cap hits".into());
    Ok(parts.join(", "))
}

fn c8_parser_oracle() -> Verdict {
    let lex = fixtures::parser_test_lexicon();
    let words: Vec<&str> = lex.words().collect();
    check(words.len() == 8, format!("{} words", words.len()))?;
    let sentences = all_sentences(&words, PARSER_MAX_LEN);
    let results = par::map(&sentences, |s| {
        let mut found = 0usize;
        for mode in [ParseMode::Strict, ParseMode::Tt] {
            let got = enumerate_linkages(s, &lex, mode, &ParserConfig::default())
                .map_err(|e| format!("{s:?}: {e}"))?;
            if got != brute_force_linkages(s, &lex, mode) {
                return Err(format!("{} ({mode:?})", s.join(" ")));
            }
            found += got.len();
        }
        Ok(found)
    });
    let mut linkages = 0;
    for r in results {
        linkages += r?;
    }
    Ok(format!(
        "{} sentences, {linkages} linkages across both modes",
        sentences.len()
    ))
}

fn c9_mst_oracle() -> Verdict {
    let vocab = ["p", "q", "r", "s"];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut solved = 0;
    for case in 0..MST_CASES {
        let mut values = Vec::new();
        for a in vocab {
            for b in vocab {
                if rng.gen_bool(0.85) {
                    let v = rng.gen_range(-16i32..=16);
                    values.push(((a.to_string(), b.to_string()), f64::from(v) / 8.0));
                }
            }
        }
        let pmi = PmiTable::from_values(values);
        let len = rng.gen_range(1..=MST_MAX_LEN);
        let tokens: Vec<String> = (0..len)
            .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
            .collect();
        match (mst_parse(&tokens, &pmi), exhaustive_mst(&tokens, &pmi)) {
            (Ok(t), Some((score, ..))) => {
                check(
                    t.score == score,
                    format!("case {case}: {} vs {score}", t.score),
                )?;
                solved += 1;
            }
            (Err(_), None) => {}
            (got, want) => return Err(format!("case {case}: {got:?} vs {want:?}")),
        }
    }
    Ok(format!(
        "{MST_CASES} instances, {solved} with structure, all scores equal"
    ))
}

fn c10_reproducibility() -> Verdict {
    let once = || -> Result<Vec<String>, String> {
        let src = fixtures::figure_source();
        let roots = RootDist::uniform(src.lexicon_arc());
        let trees: Vec<SentenceTree> =
            generate_corpus(&src, &roots, 2_000, &GenerationConfig::default(), 10)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|g| g.tree)
                .collect();
        let est = estimate_source(
            &count_trees(&trees, src.lexicon_arc()).map_err(|e| e.to_string())?,
            src.lexicon_arc().clone(),
            0.5,
        )
        .map_err(|e| e.to_string())?;
        let model = fixtures::grandparent_model(0.6, 0.8);
        let config = DivergenceConfig {
            samples: 2_000,
            seed: 10,
            ..DivergenceConfig::default()
        };
        let report = divergence_report(&model, &fixtures::grandparent_roots(), &config)
            .map_err(|e| e.to_string())?;
        let sweep = divergence_sweep(
            &model,
            &fixtures::grandparent_roots(),
            &config,
            &[0.0, 0.5, 1.0],
        )
        .map_err(|e| e.to_string())?;
        Ok(vec![
            write_tree_corpus(&trees),
            est.to_string(),
            report.to_string(),
            format!("{:?}", report.metrics()),
            format!("{sweep:?}"),
        ])
    };
    let (a, b) = (once()?, once()?);
    check(a == b, "outputs differ between runs")?;
    let bytes: usize = a.iter().map(String::len).sum();
    Ok(format!("{} artifacts, {bytes} bytes identical", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("worked-example linkage", c1_worked_linkage),
        ("generation statistics", c2_generation_statistics),
        ("order-1 equivalence", c3_order_one_equivalence),
        ("normalization oracle", c4_normalization),
        ("divergence", c5_divergence),
        ("estimator consistency", c6_estimator_consistency),
        ("branching finiteness", c7_branching),
        ("parser oracle", c8_parser_oracle),
        ("MST oracle", c9_mst_oracle),
        ("reproducibility", c10_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
