use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use linkgram::estimator::{count_trees, count_weighted, estimate_source, LinkCounts};
use linkgram::grammar::Lexicon;
use linkgram::linkage::{
    parse_corpus, read_linkage_corpus, write_linkage_record, ParseMode, ParserConfig,
};
use linkgram::mst::{attachment_score, build_pmi, mst_parse};
use linkgram::scorer::{
    divergence_report, divergence_sweep, fit_path_model, score_tree_exact, score_tree_yuret,
    DivergenceConfig, Order, PathConditionedModel,
};
use linkgram::source::{
    almost_sure_finite, generate_corpus, BranchingModel, GenerationConfig, GenerationMode,
    PowerIteration, RootDist, StochasticSource, Verdict,
};
use linkgram::tree::{read_tree_corpus, write_tree_corpus, SentenceTree};
use linkgram::Error;

use crate::io::{self, Outputs};
use crate::{
    Ambiguous, CheckFiniteArgs, CritiqueArgs, EstimateArgs, FitArgs, GenModeArg, GenerateArgs,
    GenerationArgs, MstArgs, ParseArgs, ParseModeArg, ScoreArgs, Status,
};

fn partial_if(failed: usize) -> Status {
    if failed == 0 {
        Status::Success
    } else {
        Status::Partial
    }
}

fn generation_config(a: &GenerationArgs) -> Result<GenerationConfig> {
    if a.node_cap == 0 {
        bail!("--node-cap must be at least 1");
    }
    Ok(GenerationConfig {
        node_cap: a.node_cap,
        mode: match a.mode {
            GenModeArg::Permissive => GenerationMode::Permissive,
            GenModeArg::Strict => GenerationMode::Strict,
        },
    })
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        bail!("--epsilon must lie in (0, 1), got {eps}");
    }
    Ok(())
}

fn load_source(path: &Path, lex: &Arc<Lexicon>) -> Result<StochasticSource> {
    StochasticSource::parse(&io::read(path)?, lex.clone())
        .with_context(|| format!("in source {}", path.display()))
}

fn load_model(path: &Path, lex: &Arc<Lexicon>) -> Result<PathConditionedModel> {
    PathConditionedModel::parse(&io::read(path)?, lex.clone())
        .with_context(|| format!("in model {}", path.display()))
}

fn load_tables(
    source: Option<&PathBuf>,
    model: Option<&PathBuf>,
    lex: &Arc<Lexicon>,
) -> Result<PathConditionedModel> {
    match (source, model) {
        (Some(s), None) => Ok(PathConditionedModel::from_source(&load_source(s, lex)?)),
        (None, Some(m)) => load_model(m, lex),
        _ => bail!("exactly one of --source and --model is required"),
    }
}

/// The model file's roots when it has them, else uniform over the lexicon.
fn roots_of(model: &PathConditionedModel, lex: &Lexicon) -> RootDist {
    model
        .roots()
        .cloned()
        .unwrap_or_else(|| RootDist::uniform(lex))
}

pub fn parse(a: &ParseArgs) -> Result<Status> {
    Outputs::check(&[a.output.as_ref()])?;
    let lex = io::lexicon(&a.lexicon)?;
    let sentences = match (&a.sentence, &a.corpus) {
        (Some(s), _) => io::sentences(s),
        (None, Some(p)) => io::sentences(&io::read(p)?),
        (None, None) => unreachable!("clap requires an input"),
    };
    let mode = match a.mode {
        ParseModeArg::Strict => ParseMode::Strict,
        ParseModeArg::Tt => ParseMode::Tt,
    };
    let config = ParserConfig {
        max_tokens: a.max_tokens,
    };
    let results = parse_corpus(&sentences, &lex, mode, &config);

    let mut out = String::new();
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    let mut errors = Vec::new();
    let mut unparsed = Vec::new();
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(ls) => {
                writeln!(out, "% sentence {i}")?;
                for l in ls {
                    writeln!(out, "{}", write_linkage_record(l))?;
                }
                if ls.is_empty() {
                    unparsed.push(i);
                } else {
                    *histogram.entry(ls.len()).or_default() += 1;
                }
            }
            Err(e) => {
                writeln!(out, "% sentence {i} failed: {e}")?;
                errors.push((i, e.to_string()));
            }
        }
    }
    let mut outputs = Outputs::default();
    outputs.push(a.output.as_ref(), out);
    outputs.write()?;

    eprintln!("sentences: {}", sentences.len());
    eprintln!("parsed: {}", histogram.values().sum::<usize>());
    eprintln!("no linkage: {}", unparsed.len());
    eprintln!("errors: {}", errors.len());
    for (k, n) in &histogram {
        eprintln!("with {k} linkage(s): {n}");
    }
    for i in &unparsed {
        eprintln!("sentence {i}: no linkage");
    }
    for (i, e) in &errors {
        eprintln!("sentence {i}: {e}");
    }
    Ok(partial_if(errors.len() + unparsed.len()))
}

/// Empirical draw frequencies per `(term, connector)` from directional
/// tree counts.
fn empirical_tables(counts: &LinkCounts) -> String {
    let mut totals: BTreeMap<(&str, String), f64> = BTreeMap::new();
    for ((t, c, _), n) in &counts.pairs {
        *totals.entry((t.as_str(), c.to_string())).or_default() += n;
    }
    let mut out = String::new();
    for ((t, c, x), n) in &counts.pairs {
        let total = totals[&(t.as_str(), c.to_string())];
        let _ = writeln!(
            out,
            "empirical P({x} | {t}, {c}) = {:.4} over {total} draws",
            n / total
        );
    }
    out
}

pub fn generate(a: &GenerateArgs) -> Result<Status> {
    Outputs::check(&[a.output.as_ref(), a.sentences.as_ref()])?;
    check_epsilon(a.epsilon)?;
    let config = generation_config(&a.generation)?;
    let lex = io::lexicon(&a.lexicon)?;
    let model = load_tables(a.source.as_ref(), a.model.as_ref(), &lex)?;
    let roots = match &a.root {
        Some(r) => {
            if !lex.words().any(|w| w == r) {
                bail!("root `{r}` is not in the lexicon");
            }
            RootDist::single(r)
        }
        None => roots_of(&model, &lex),
    };
    let mut notes = Vec::new();
    if model.order() == Order::Finite(1) {
        let src = model.to_source()?;
        let f = almost_sure_finite(&src, a.epsilon, &PowerIteration::default())?;
        if f.verdict == Verdict::InfiniteRisk {
            notes.push(format!(
                "warning: spectral radius {:.9} is not below 1 - {}; trees may be infinite and are cut at {} nodes",
                f.spectral_radius, a.epsilon, config.node_cap
            ));
        } else {
            notes.push(format!("spectral radius: {:.9}", f.spectral_radius));
        }
    } else {
        notes.push(format!(
            "model order {}: finiteness is not checked",
            model.order()
        ));
    }

    let generated = generate_corpus(&model, &roots, a.count, &config, a.seed)?;
    let trees: Vec<SentenceTree> = generated.into_iter().map(|g| g.tree).collect();
    let complete: Vec<SentenceTree> = trees.iter().filter(|t| !t.cap_hit()).cloned().collect();
    let capped = trees.len() - complete.len();
    let counts = count_trees(&complete, &lex)?;

    let mut outputs = Outputs::default();
    outputs.push(a.output.as_ref(), write_tree_corpus(&trees));
    if let Some(p) = &a.sentences {
        let mut text = String::new();
        for t in &complete {
            writeln!(text, "{}", t.linearize().0.join(" "))?;
        }
        outputs.push(Some(p), text);
    }
    outputs.write()?;

    for n in &notes {
        eprintln!("{n}");
    }
    eprintln!("trees: {}", trees.len());
    let fraction = if trees.is_empty() {
        0.0
    } else {
        capped as f64 / trees.len() as f64
    };
    eprintln!(
        "cap-hit fraction: {fraction:.6} ({capped} of {})",
        trees.len()
    );
    if !complete.is_empty() {
        let nodes: usize = complete.iter().map(SentenceTree::len).sum();
        eprintln!(
            "mean size of complete trees: {:.4}",
            nodes as f64 / complete.len() as f64
        );
    }
    eprint!("{}", empirical_tables(&counts));
    Ok(Status::Success)
}

/// Trees from a corpus file; capped trees are dropped with a note.
fn complete_trees(path: &Path, lex: &Lexicon) -> Result<Vec<SentenceTree>> {
    let trees = read_tree_corpus(&io::read(path)?, lex)
        .with_context(|| format!("in tree corpus {}", path.display()))?;
    let total = trees.len();
    let complete: Vec<SentenceTree> = trees.into_iter().filter(|t| !t.cap_hit()).collect();
    if complete.len() < total {
        eprintln!(
            "skipped {} trees cut by the node cap",
            total - complete.len()
        );
    }
    Ok(complete)
}

pub fn estimate(a: &EstimateArgs) -> Result<Status> {
    Outputs::check(&[a.output.as_ref()])?;
    let lex = io::lexicon(&a.lexicon)?;
    let counts = match (&a.linkages, &a.trees) {
        (Some(p), None) => {
            let groups = read_linkage_corpus(&io::read(p)?, &lex)
                .with_context(|| format!("in linkage corpus {}", p.display()))?;
            let mut weighted = Vec::new();
            let mut skipped = 0;
            for g in &groups {
                match a.ambiguous {
                    Ambiguous::First => weighted.push((&g[0].linkage, 1.0)),
                    Ambiguous::AllUniform => {
                        let w = 1.0 / g.len() as f64;
                        weighted.extend(g.iter().map(|r| (&r.linkage, w)));
                    }
                    Ambiguous::Skip if g.len() > 1 => skipped += 1,
                    Ambiguous::Skip => weighted.push((&g[0].linkage, 1.0)),
                }
            }
            if skipped > 0 {
                eprintln!("skipped {skipped} ambiguous sentences");
            }
            count_weighted(&weighted, &lex)?
        }
        (None, Some(p)) => count_trees(&complete_trees(p, &lex)?, &lex)?,
        _ => bail!("exactly one of --linkages and --trees is required"),
    };
    let src = estimate_source(&counts, lex, a.alpha)?;
    let mut outputs = Outputs::default();
    outputs.push(a.output.as_ref(), src.to_string());
    outputs.write()?;
    Ok(Status::Success)
}

pub fn fit(a: &FitArgs) -> Result<Status> {
    Outputs::check(&[a.output.as_ref()])?;
    let order: Order = a.order.parse()?;
    let lex = io::lexicon(&a.lexicon)?;
    let trees = complete_trees(&a.trees, &lex)?;
    let model = fit_path_model(&trees, lex, order, a.alpha)?;
    let mut outputs = Outputs::default();
    outputs.push(a.output.as_ref(), model.to_string());
    outputs.write()?;
    Ok(Status::Success)
}

pub fn score(a: &ScoreArgs) -> Result<Status> {
    Outputs::check(&[a.output.as_ref()])?;
    let lex = io::lexicon(&a.lexicon)?;
    let model = load_tables(a.source.as_ref(), a.model.as_ref(), &lex)?;
    let roots = roots_of(&model, &lex);
    let text = io::read(&a.trees)?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'))
        .collect();
    let scored = linkgram::par::map(&lines, |&(_, line)| -> linkgram::Result<(f64, f64)> {
        let tree = SentenceTree::parse(line, &lex)?;
        Ok((
            score_tree_exact(&tree, &model, &roots)?,
            score_tree_yuret(&tree, &model, &roots)?,
        ))
    });
    let mut out = String::from("% exact\tsingle-parent\tgap\ttree\n");
    let mut failed = 0;
    for ((i, line), r) in lines.iter().zip(scored) {
        match r {
            Ok((e, y)) => writeln!(out, "{e:.9}\t{y:.9}\t{:+.9}\t{}", e - y, line.trim())?,
            Err(err) => {
                failed += 1;
                writeln!(out, "% line {} failed: {err}", i + 1)?;
                eprintln!("line {}: {err}", i + 1);
            }
        }
    }
    let mut outputs = Outputs::default();
    outputs.push(a.output.as_ref(), out);
    outputs.write()?;
    eprintln!("scored: {} of {}", lines.len() - failed, lines.len());
    Ok(partial_if(failed))
}

fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let points: Vec<f64> = s
        .split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .with_context(|| format!("bad sweep point `{x}`"))
        })
        .collect::<Result<_>>()?;
    if points.iter().any(|p| !(0.0..=1.0).contains(p)) {
        bail!("sweep strengths must lie in [0, 1]");
    }
    Ok(points)
}

fn gold<M: BranchingModel>(
    model: &M,
    roots: &RootDist,
    n: usize,
    config: &GenerationConfig,
    seed: u64,
) -> Result<Vec<SentenceTree>> {
    Ok(generate_corpus(model, roots, n, config, seed)?
        .into_iter()
        .map(|g| g.tree)
        .filter(|t| !t.cap_hit())
        .collect())
}

pub fn critique(a: &CritiqueArgs) -> Result<Status> {
    Outputs::check(&[a.report.as_ref(), Some(&a.metrics)])?;
    let generation = generation_config(&a.generation)?;
    let strengths = parse_sweep(&a.sweep)?;
    if a.window == 0 {
        bail!("--window must be at least 1");
    }
    if a.sentences == 0 {
        bail!("--sentences must be at least 1");
    }
    let lex = io::lexicon(&a.lexicon)?;
    let model = load_model(&a.model, &lex)?;
    if model.order() == Order::Finite(1) && !a.allow_order1 {
        bail!(
            "model {} has order 1, so it equals its own order-1 projection and the divergence is zero by construction; pass --allow-order1 to run it as a control",
            a.model.display()
        );
    }
    let roots = roots_of(&model, &lex);
    let config = DivergenceConfig {
        samples: a.samples,
        seed: a.seed,
        generation,
        worst: a.worst,
        enumeration_limit: a.enumeration_limit,
    };
    let report = divergence_report(&model, &roots, &config)?;
    let sweep = divergence_sweep(&model, &roots, &config, &strengths)?;
    let matched = &report.projection;
    let uas2 = attachment_score(
        &gold(&model, &roots, a.sentences, &generation, a.seed)?,
        a.window,
    )?;
    let uas1 = attachment_score(
        &gold(matched, &roots, a.sentences, &generation, a.seed)?,
        a.window,
    )?;

    let mut text = report.to_string();
    writeln!(text)?;
    writeln!(
        text,
        "dependence sweep (0 = order-1 projection, 1 = model):"
    )?;
    writeln!(
        text,
        "  strength  kl_estimate  kl_stderr  mean_abs_gap  kl_enumerated"
    )?;
    for p in &sweep {
        let exact = p
            .exact_kl
            .map_or_else(|| "-".to_string(), |k| format!("{k:.6}"));
        writeln!(
            text,
            "  {:>8.4}  {:>11.6}  {:>9.6}  {:>12.6}  {:>13}",
            p.strength, p.kl_estimate, p.kl_stderr, p.mean_abs_gap, exact
        )?;
    }
    let monotone = sweep
        .windows(2)
        .all(|w| w[1].strength < w[0].strength || w[1].mean_abs_gap >= w[0].mean_abs_gap);
    writeln!(
        text,
        "gap column monotone in strength: {}",
        if monotone { "yes" } else { "no" }
    )?;
    writeln!(text)?;
    writeln!(
        text,
        "MST attachment (window {}, {} sentences per corpus, 3 s.e. bands):",
        a.window, a.sentences
    )?;
    for (name, u) in [("order-1 projection", &uas1), ("model", &uas2)] {
        writeln!(
            text,
            "  {name:<18}  uas {:.4} +/- {:.4} over {} tokens",
            u.uas,
            3.0 * u.stderr,
            u.tokens
        )?;
    }

    let mut metrics = String::new();
    for (k, v) in report.metrics() {
        writeln!(metrics, "{k} {v}")?;
    }
    for (k, v) in [
        ("uas_order1_source", uas1.uas),
        ("uas_order1_source_stderr", uas1.stderr),
        ("uas_order2_source", uas2.uas),
        ("uas_order2_source_stderr", uas2.stderr),
    ] {
        writeln!(metrics, "{k} {v}")?;
    }
    for (i, p) in sweep.iter().enumerate() {
        writeln!(metrics, "sweep_{i}_strength {}", p.strength)?;
        writeln!(metrics, "sweep_{i}_mean_abs_logprob_gap {}", p.mean_abs_gap)?;
    }

    let mut outputs = Outputs::default();
    outputs.push(a.report.as_ref(), text);
    outputs.push(Some(&a.metrics), metrics);
    outputs.write()?;
    Ok(Status::Success)
}

pub fn mst(a: &MstArgs) -> Result<Status> {
    Outputs::check(&[a.output.as_ref(), a.pmi.as_ref()])?;
    if a.window == 0 {
        bail!("--window must be at least 1");
    }
    let (sentences, gold) = match (&a.corpus, &a.trees, &a.lexicon) {
        (Some(p), None, _) => (io::sentences(&io::read(p)?), None),
        (None, Some(p), Some(l)) => {
            let lex = io::lexicon(l)?;
            let trees = complete_trees(p, &lex)?;
            let linear: Vec<_> = trees.iter().map(SentenceTree::linearize).collect();
            let toks = linear.iter().map(|(t, _)| t.clone()).collect();
            let heads: Vec<_> = linear.into_iter().map(|(_, h)| h).collect();
            (toks, Some(heads))
        }
        _ => bail!("pass --corpus, or --trees with --lexicon"),
    };
    let pmi = build_pmi(&sentences, a.window)?;
    let parsed = linkgram::par::map(&sentences, |s| mst_parse(s, &pmi));

    let mut out = String::new();
    let (mut hit, mut total, mut failed) = (0usize, 0usize, 0usize);
    for (i, r) in parsed.iter().enumerate() {
        match r {
            Ok(t) => {
                let heads: Vec<String> = t
                    .heads
                    .iter()
                    .map(|h| h.map_or_else(|| "-".to_string(), |h| h.to_string()))
                    .collect();
                writeln!(
                    out,
                    "{}\t{}\t{:.9}",
                    t.tokens.join(" "),
                    heads.join(" "),
                    t.score
                )?;
                if let Some(g) = &gold {
                    for (gh, ph) in g[i].iter().zip(&t.heads) {
                        if gh.is_some() {
                            total += 1;
                            hit += usize::from(gh == ph);
                        }
                    }
                }
            }
            Err(e) => {
                failed += 1;
                writeln!(out, "% sentence {i} failed: {e}")?;
                if !matches!(e, Error::NoStructure(_) | Error::EmptySentence) {
                    eprintln!("sentence {i}: {e}");
                }
            }
        }
    }
    let mut outputs = Outputs::default();
    outputs.push(a.output.as_ref(), out);
    if let Some(p) = &a.pmi {
        outputs.push(Some(p), pmi.to_string());
    }
    outputs.write()?;
    eprintln!("sentences: {}", sentences.len());
    eprintln!("no structure: {failed}");
    if gold.is_some() && total > 0 {
        eprintln!(
            "unlabeled attachment: {:.4} ({hit} of {total})",
            hit as f64 / total as f64
        );
    }
    Ok(partial_if(failed))
}

pub fn check_finite(a: &CheckFiniteArgs) -> Result<Status> {
    check_epsilon(a.epsilon)?;
    let lex = io::lexicon(&a.lexicon)?;
    let src = load_source(&a.source, &lex)?;
    let f = almost_sure_finite(&src, a.epsilon, &PowerIteration::default())?;
    println!("spectral_radius {:.12}", f.spectral_radius);
    println!("iterations {}", f.iterations);
    println!("epsilon {}", a.epsilon);
    println!("verdict {}", f.verdict);
    Ok(Status::Success)
}
