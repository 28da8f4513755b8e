mod common;

use std::sync::Arc;

use common::random_source;
use linkgram::fixtures;
use linkgram::source::{
    almost_sure_finite, generate_corpus, mean_offspring_matrix, spectral_radius, GenerationConfig,
    PowerIteration, RootDist, Verdict,
};
use linkgram::tree::Outcome;
use nalgebra::{DMatrix, Schur};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest eigenvalue modulus from a real Schur form; `None` when the
/// QR iteration does not settle within its budget.
fn eigen_radius(m: &[Vec<f64>]) -> Option<f64> {
    let n = m.len();
    let dm = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let schur = Schur::try_new(dm, 1e-14, 100_000)?;
    Some(
        schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn power_iteration_matches_eigendecomposition(seed in any::<u64>(), bias in 0.0f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_source(Arc::new(fixtures::generation_lexicon()), bias, &mut rng);
        let m = mean_offspring_matrix(&src).unwrap();
        let (rho, _) = spectral_radius(&m.matrix, &PowerIteration::default()).unwrap();
        let want = eigen_radius(&m.matrix);
        prop_assume!(want.is_some());
        let want = want.unwrap();
        prop_assert!((rho - want).abs() <= 1e-6 * want.max(1.0), "{} vs {}", rho, want);
    }

    #[test]
    fn random_nonnegative_matrices(entries in prop::collection::vec(0.0f64..2.0, 16)) {
        let m: Vec<Vec<f64>> = entries.chunks(4).map(<[f64]>::to_vec).collect();
        let (rho, _) = spectral_radius(&m, &PowerIteration::default()).unwrap();
        let want = eigen_radius(&m);
        prop_assume!(want.is_some());
        let want = want.unwrap();
        prop_assert!((rho - want).abs() <= 1e-6 * want.max(1.0), "{} vs {}", rho, want);
    }
}

#[test]
fn matrix_rows_are_root_child_means() {
    // Every term of this lexicon has one entry, so a root expands exactly
    // the maximal connector set and its child counts estimate the row.
    let src = fixtures::figure_source();
    let m = mean_offspring_matrix(&src).unwrap();
    let n = 10_000;
    for parent in &m.terms {
        let trees = generate_corpus(
            &src,
            &RootDist::single(parent),
            n,
            &GenerationConfig::default(),
            31,
        )
        .unwrap();
        for child in &m.terms {
            let xs: Vec<f64> = trees
                .iter()
                .map(|g| {
                    let root = g.tree.root();
                    root.slots
                        .iter()
                        .filter(|s| matches!(s.outcome, Outcome::Child(c) if &g.tree.node(c).term == child))
                        .count() as f64
                })
                .collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            let want = m.get(parent, child);
            assert!(
                (mean - want).abs() <= 3.0 * se + 1e-12,
                "{parent}->{child}: {mean} vs {want}"
            );
        }
    }
}

#[test]
fn verdict_follows_the_margin() {
    let config = PowerIteration::default();
    for (p, verdict) in [
        (0.5, Verdict::Finite),
        (0.9, Verdict::Finite),
        (1.0 - 1e-7, Verdict::InfiniteRisk),
        (1.0, Verdict::InfiniteRisk),
    ] {
        let r = almost_sure_finite(&fixtures::chain_source(p), 1e-6, &config).unwrap();
        assert_eq!(r.verdict, verdict, "p={p}");
    }
    let r = almost_sure_finite(&fixtures::figure_source(), 1e-6, &config).unwrap();
    assert_eq!(r.verdict, Verdict::Finite);
}

#[test]
fn bipartite_matrix_with_a_repeating_norm_ratio() {
    // The max-norm ratio of this case repeats to 1e-9 after 21 steps while
    // the iterate is still 1e-4 from the Perron vector.
    let mut rng = ChaCha8Rng::seed_from_u64(4848950119301130411);
    let src = random_source(
        Arc::new(fixtures::generation_lexicon()),
        2.9026360245843756,
        &mut rng,
    );
    let m = mean_offspring_matrix(&src).unwrap();
    let (rho, _) = spectral_radius(&m.matrix, &PowerIteration::default()).unwrap();
    let want = eigen_radius(&m.matrix).unwrap();
    assert!((rho - want).abs() <= 1e-6 * want, "{rho} vs {want}");
}
