//! Multitype branching-process view of a source: the mean offspring matrix
//! and its spectral radius.
//!
//! Each term is expanded on its maximal connector set, so the matrix bounds
//! the expected offspring of every actual node from above, and a radius
//! below one implies almost-surely finite trees.

use super::{StochasticSource, Target};
use crate::error::{Error, Result};

/// `matrix[t][u]`: expected number of `u` children when `terms[t]` is expanded.
#[derive(Clone, Debug, PartialEq)]
pub struct OffspringMatrix {
    pub terms: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl OffspringMatrix {
    pub fn index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn get(&self, parent: &str, child: &str) -> f64 {
        match (self.index(parent), self.index(child)) {
            (Some(i), Some(j)) => self.matrix[i][j],
            _ => 0.0,
        }
    }
}

pub fn mean_offspring_matrix(src: &StochasticSource) -> Result<OffspringMatrix> {
    let lexicon = src.lexicon_arc();
    let terms: Vec<String> = lexicon.words().map(String::from).collect();
    let n = terms.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for (i, t) in terms.iter().enumerate() {
        for c in lexicon.max_connectors(t) {
            let table = src.get(t, &c).ok_or_else(|| Error::MissingTable {
                term: t.clone(),
                connector: c.to_string(),
            })?;
            for (target, p) in table.iter() {
                if let Target::Term(u) = target {
                    let j = terms
                        .binary_search(u)
                        .expect("validated targets are lexicon words");
                    matrix[i][j] += p;
                }
            }
        }
    }
    Ok(OffspringMatrix { terms, matrix })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerIteration {
    pub max_iterations: usize,
    /// Iteration stops once both the max-normalized iterate and the relative
    /// estimate change by at most this much in one step.
    pub tolerance: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration {
            max_iterations: 1_000_000,
            tolerance: 1e-9,
        }
    }
}

/// Spectral radius of a non-negative square matrix and the number of
/// iterations used. Iterates on `M + I`, whose Perron root strictly
/// dominates every other eigenvalue in modulus, so periodic matrices
/// converge too.
pub fn spectral_radius(matrix: &[Vec<f64>], config: &PowerIteration) -> Result<(f64, usize)> {
    let n = matrix.len();
    if n == 0 {
        return Ok((0.0, 0));
    }
    let mut x = vec![1.0; n];
    let mut estimate = f64::NAN;
    for it in 1..=config.max_iterations {
        let mut y: Vec<f64> = (0..n)
            .map(|i| x[i] + matrix[i].iter().zip(&x).map(|(m, v)| m * v).sum::<f64>())
            .collect();
        let norm = y.iter().fold(0.0f64, |a, &v| a.max(v));
        for v in &mut y {
            *v /= norm;
        }
        // The max-norm ratio is not monotone and can repeat by accident
        // while the iterate is still moving, so both must settle.
        let moved = y
            .iter()
            .zip(&x)
            .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        x = y;
        let previous = estimate;
        estimate = norm;
        if moved <= config.tolerance && (estimate - previous).abs() <= config.tolerance * estimate {
            return Ok(((estimate - 1.0).max(0.0), it));
        }
    }
    Err(Error::NonConvergence {
        iterations: config.max_iterations,
        estimate: (estimate - 1.0).max(0.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Finite,
    InfiniteRisk,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Finite => "finite",
            Verdict::InfiniteRisk => "infinite-risk",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FinitenessReport {
    pub verdict: Verdict,
    pub spectral_radius: f64,
    pub iterations: usize,
}

/// Finite iff the spectral radius is below `1 - epsilon`.
pub fn almost_sure_finite(
    src: &StochasticSource,
    epsilon: f64,
    config: &PowerIteration,
) -> Result<FinitenessReport> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} must lie in [0, 1)"
        )));
    }
    let m = mean_offspring_matrix(src)?;
    let (radius, iterations) = spectral_radius(&m.matrix, config)?;
    let verdict = if radius < 1.0 - epsilon {
        Verdict::Finite
    } else {
        Verdict::InfiniteRisk
    };
    Ok(FinitenessReport {
        verdict,
        spectral_radius: radius,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;

    #[test]
    fn chain_radii() {
        for p in [0.0, 0.5, 0.9, 1.0] {
            let src = fixtures::chain_source(p);
            let m = mean_offspring_matrix(&src).unwrap();
            assert_eq!(m.matrix, vec![vec![p]]);
            let r = almost_sure_finite(&src, 1e-6, &PowerIteration::default()).unwrap();
            assert_relative_eq!(r.spectral_radius, p, epsilon = 1e-12);
            let expect = if p < 1.0 {
                Verdict::Finite
            } else {
                Verdict::InfiniteRisk
            };
            assert_eq!(r.verdict, expect);
        }
    }

    #[test]
    fn periodic_matrix_converges() {
        let m = vec![vec![0.0, 0.8], vec![0.8, 0.0]];
        let (r, _) = spectral_radius(&m, &PowerIteration::default()).unwrap();
        assert_relative_eq!(r, 0.8, epsilon = 1e-8);
    }

    #[test]
    fn nonconvergence_reports_estimate() {
        let m = vec![vec![0.5, 0.1], vec![0.2, 0.3]];
        let cfg = PowerIteration {
            max_iterations: 2,
            tolerance: 0.0,
        };
        match spectral_radius(&m, &cfg) {
            Err(Error::NonConvergence {
                iterations: 2,
                estimate,
            }) => assert!(estimate > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn figure_source_is_subcritical() {
        let r = almost_sure_finite(&fixtures::figure_source(), 1e-6, &PowerIteration::default())
            .unwrap();
        assert_eq!(r.verdict, Verdict::Finite);
        assert!(r.spectral_radius < 0.9, "radius {}", r.spectral_radius);
    }
}
