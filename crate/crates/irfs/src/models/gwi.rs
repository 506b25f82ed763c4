//! Multi-type Galton–Watson processes with immigration:
//! `F(x, z) = Σ_j Σ_{i ≤ x_j} offspring_{i;j} + immigration`.
//!
//! Monotone on `ℕ^d` by construction, with drift metadata
//! `(p = 1, ρ = cap, K = E|immigration|₁)` taken from the branching source.

use std::sync::Arc;

use crate::engine::{DriftSpec, ModelSpec, StateSpace};
use crate::error::{Error, Result};
use crate::noise::{BranchingSource, NoiseValue};

pub fn make_gwi(source: &Arc<BranchingSource>) -> Result<ModelSpec> {
    let dim = source.spec.dim;
    if dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let drift = DriftSpec {
        p: 1.0,
        rho: source.spec.rho,
        k: source.immigration_mean_l1(),
    };
    Ok(ModelSpec::builder(
        "gwi",
        dim,
        StateSpace::NonNegativeInteger,
        move |x, z| match z {
            NoiseValue::Branching(rec) => {
                debug_assert_eq!(rec.dim(), dim);
                let mut next = rec.immigration();
                for (j, &count) in x.iter().enumerate() {
                    debug_assert!(count >= 0.0 && count.fract() == 0.0);
                    for i in 1..=count as u64 {
                        let litter = rec.offspring(j, i);
                        for (acc, v) in next.iter_mut().zip(litter.iter()) {
                            *acc += v;
                        }
                    }
                }
                next
            }
            other => panic!("gwi model expects branching noise, got {other:?}"),
        },
    )
    .monotone(true)
    .drift(drift)
    .build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{self, VstarOptions};
    use crate::noise::{make_branching_environment, BranchingSpec, CountLaw};
    use crate::stats;

    fn bernoulli_poisson(seed: u64, p: f64, imm: f64) -> crate::noise::DrivingProcess {
        make_branching_environment(
            seed,
            BranchingSpec {
                dim: 1,
                offspring: vec![vec![CountLaw::Bernoulli { p }]],
                immigration: vec![CountLaw::Poisson { mean: imm }],
                rho: p.max(0.01),
                environment: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_without_immigration() {
        let p = bernoulli_poisson(81, 0.4, 0.0);
        let model = make_gwi(p.branching_source().unwrap()).unwrap();
        for k in [0i64, -3, -20] {
            let x = engine::negative_iterate(&model, &p, k, 0, 0).unwrap();
            assert_eq!(x[0], 0.0);
        }
        let ladder = engine::estimate_vstar(&model, &p, &VstarOptions::default(), 0).unwrap();
        assert_eq!(ladder.v_star.unwrap()[0], 0.0);
    }

    #[test]
    fn ladders_are_monotone_integer_and_converge() {
        let p = bernoulli_poisson(82, 0.4, 1.0);
        let model = make_gwi(p.branching_source().unwrap()).unwrap();
        for stream in 0..50u64 {
            let ladder = engine::estimate_vstar(&model, &p, &VstarOptions::default(), stream)
                .unwrap();
            assert!(ladder.converged);
            for v in &ladder.values_at_zero {
                assert_eq!(v[0].fract(), 0.0, "integer states stay integers");
            }
            for w in ladder.values_at_zero.windows(2) {
                assert!(w[1][0] >= w[0][0], "ladder must be nondecreasing");
            }
        }
    }

    #[test]
    fn stationary_mean_matches_recursion() {
        // E X = 0.4 E X + 1 at stationarity: E V* = 1/0.6.
        let p = bernoulli_poisson(83, 0.4, 1.0);
        let model = make_gwi(p.branching_source().unwrap()).unwrap();
        let replicas = 4000u64;
        let samples: Vec<f64> = (0..replicas)
            .map(|r| {
                engine::estimate_vstar(&model, &p, &VstarOptions::default(), r)
                    .unwrap()
                    .v_star
                    .unwrap()[0]
            })
            .collect();
        let mean = stats::mean(&samples);
        let expected = 1.0 / 0.6;
        assert!(
            (mean - expected).abs() < 3.5 * stats::std_error(&samples).max(0.01),
            "mean {mean} vs {expected}"
        );
    }

    #[test]
    fn monotone_in_initial_state() {
        let p = bernoulli_poisson(84, 0.45, 1.0);
        let model = make_gwi(p.branching_source().unwrap()).unwrap();
        let mut rng = crate::rng::CounterRng::at(5, 0, 0);
        for i in 0..500i64 {
            let z = p.sample_at(i, 0).unwrap();
            let a = (rng.uniform() * 6.0).floor();
            let b = a + (rng.uniform() * 4.0).floor();
            let fa = model.apply(&[a], &z)[0];
            let fb = model.apply(&[b], &z)[0];
            assert!(fa <= fb, "monotonicity broken: F({a})={fa} > F({b})={fb}");
        }
    }

    #[test]
    fn two_type_process_runs() {
        let p = make_branching_environment(
            85,
            BranchingSpec {
                dim: 2,
                offspring: vec![
                    vec![CountLaw::Bernoulli { p: 0.3 }, CountLaw::Bernoulli { p: 0.2 }],
                    vec![CountLaw::Bernoulli { p: 0.1 }, CountLaw::Bernoulli { p: 0.4 }],
                ],
                immigration: vec![
                    CountLaw::Poisson { mean: 0.5 },
                    CountLaw::Poisson { mean: 0.5 },
                ],
                rho: 0.6,
                environment: None,
            },
        )
        .unwrap();
        let model = make_gwi(p.branching_source().unwrap()).unwrap();
        let ladder = engine::estimate_vstar(&model, &p, &VstarOptions::default(), 3).unwrap();
        assert!(ladder.converged);
        let drift = model.drift().unwrap();
        assert_eq!(drift.p, 1.0);
        assert!((drift.k - 1.0).abs() < 1e-12);
    }
}
