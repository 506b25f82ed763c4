//! Branching-environment noise: per lattice index, a lazily materialized
//! family of offspring vectors plus one immigration vector.
//!
//! Offspring counts are keyed by `(seed, stream, index, type, individual,
//! coordinate)`, so any two negative-iteration depths that touch the same
//! individual see the same draw, no matter how many individuals each path
//! consumed. Dependence across time enters only through a scalar
//! environment process that modulates the offspring means; conditional on
//! the environment at an index, offspring are i.i.d. across individuals.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::State;
use crate::error::{Error, Result};
use crate::rng::{role_seed, CounterRng};

use super::laws::CountLaw;

const ROLE_OFFSPRING: u64 = 0x4F46;
const ROLE_IMMIGRATION: u64 = 0x494D;
const ROLE_ENVIRONMENT: u64 = 0x454E;

/// Environment modulation: the offspring means at index `n` are multiplied
/// by `1 + amplitude·(2 e_n - 1)` with `e_n` i.i.d. uniform, then clipped
/// so the row-sum cap stays in force pointwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvModulation {
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchingSpec {
    pub dim: usize,
    /// `offspring[j][k]`: law of coordinate `k` of the offspring vector of
    /// one type-`j` individual.
    pub offspring: Vec<Vec<CountLaw>>,
    /// Immigration vector law, one entry per coordinate.
    pub immigration: Vec<CountLaw>,
    /// Almost-sure cap on the offspring mean row sums.
    pub rho: f64,
    pub environment: Option<EnvModulation>,
}

#[derive(Debug)]
pub struct BranchingSource {
    pub spec: BranchingSpec,
    /// Largest base row sum `max_j Σ_k E offspring[j][k]`.
    max_row_mean: f64,
}

impl BranchingSource {
    pub fn new(spec: BranchingSpec) -> Result<Self> {
        if spec.dim < 1 {
            return Err(Error::InvalidDimension(spec.dim));
        }
        if spec.offspring.len() != spec.dim || spec.immigration.len() != spec.dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} offspring rows and immigration entries",
                spec.dim
            )));
        }
        for row in &spec.offspring {
            if row.len() != spec.dim {
                return Err(Error::DimensionMismatch(
                    "offspring law rows must have `dim` entries".into(),
                ));
            }
            for law in row {
                law.validate().map_err(Error::InvalidParameter)?;
            }
        }
        for law in &spec.immigration {
            law.validate().map_err(Error::InvalidParameter)?;
        }
        if !(0.0..1.0).contains(&spec.rho) {
            return Err(Error::InvalidParameter(format!(
                "rho {} outside [0, 1)",
                spec.rho
            )));
        }
        let max_row_mean = spec
            .offspring
            .iter()
            .map(|row| row.iter().map(CountLaw::mean).sum::<f64>())
            .fold(0.0f64, f64::max);
        // Without an environment there is nothing to clip: the base means
        // themselves must satisfy the cap.
        if spec.environment.is_none() && max_row_mean > spec.rho + 1e-12 {
            return Err(Error::DriftViolated { rho: spec.rho });
        }
        Ok(BranchingSource { spec, max_row_mean })
    }

    pub fn immigration_mean_l1(&self) -> f64 {
        self.spec.immigration.iter().map(CountLaw::mean).sum()
    }

    /// Environment multiplier at an index, already clipped to the cap.
    pub fn scale_at(&self, seed: u64, stream: u64, index: i64) -> f64 {
        match &self.spec.environment {
            None => 1.0,
            Some(env) => {
                let mut rng =
                    CounterRng::at(role_seed(seed, ROLE_ENVIRONMENT), stream, index);
                let raw = 1.0 + env.amplitude * (2.0 * rng.uniform() - 1.0);
                let cap = if self.max_row_mean > 0.0 {
                    self.spec.rho / self.max_row_mean
                } else {
                    f64::INFINITY
                };
                raw.clamp(0.0, cap)
            }
        }
    }
}

/// One lattice point of branching noise.
#[derive(Debug, Clone)]
pub struct BranchingRecord {
    pub(crate) source: Arc<BranchingSource>,
    pub(crate) seed: u64,
    pub(crate) stream: u64,
    pub(crate) index: i64,
    pub(crate) scale: f64,
}

impl BranchingRecord {
    pub fn dim(&self) -> usize {
        self.source.spec.dim
    }

    /// Offspring vector of the `individual`-th member of type `of_type`
    /// (individuals counted from 1). Repeated access returns the same
    /// vector.
    pub fn offspring(&self, of_type: usize, individual: u64) -> State {
        let d = self.dim();
        debug_assert!(of_type < d);
        let tag = (of_type as u64 + 1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(individual);
        let mut rng = CounterRng::sub_stream(
            role_seed(self.seed, ROLE_OFFSPRING),
            self.stream,
            self.index,
            tag,
        );
        let laws = &self.source.spec.offspring[of_type];
        (0..d)
            .map(|k| laws[k].sample_scaled(&mut rng, self.scale) as f64)
            .collect()
    }

    pub fn immigration(&self) -> State {
        let mut rng = CounterRng::at(
            role_seed(self.seed, ROLE_IMMIGRATION),
            self.stream,
            self.index,
        );
        self.source
            .spec
            .immigration
            .iter()
            .map(|law| law.sample_scaled(&mut rng, 1.0) as f64)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bernoulli_poisson(dim: usize, p: f64, imm_mean: f64) -> BranchingSpec {
        BranchingSpec {
            dim,
            offspring: vec![vec![CountLaw::Bernoulli { p }; dim]; dim],
            immigration: vec![CountLaw::Poisson { mean: imm_mean }; dim],
            rho: 0.9,
            environment: None,
        }
    }

    fn record(src: &Arc<BranchingSource>, index: i64) -> BranchingRecord {
        BranchingRecord {
            source: Arc::clone(src),
            seed: 21,
            stream: 0,
            index,
            scale: src.scale_at(21, 0, index),
        }
    }

    #[test]
    fn bernoulli_offspring_support() {
        let src = Arc::new(BranchingSource::new(bernoulli_poisson(1, 0.4, 1.0)).unwrap());
        let rec = record(&src, 1);
        for i in 1..=50 {
            let v = rec.offspring(0, i)[0];
            assert!(v == 0.0 || v == 1.0, "bernoulli offspring {v}");
        }
    }

    #[test]
    fn immigration_mean_matches_poisson() {
        let src = Arc::new(BranchingSource::new(bernoulli_poisson(1, 0.4, 1.0)).unwrap());
        let mut total = 0.0;
        let n = 100_000;
        for i in 0..n {
            total += record(&src, i).immigration()[0];
        }
        let mean = total / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "immigration mean {mean}");
    }

    #[test]
    fn repeated_access_is_identical() {
        let src = Arc::new(BranchingSource::new(bernoulli_poisson(2, 0.3, 0.5)).unwrap());
        let rec = record(&src, -5);
        let first = rec.offspring(1, 2);
        for _ in 0..10 {
            assert_eq!(rec.offspring(1, 2), first);
        }
        assert_eq!(rec.immigration(), rec.immigration());
    }

    #[test]
    fn drift_cap_enforced_at_construction() {
        let mut spec = bernoulli_poisson(2, 0.6, 1.0); // row sum 1.2 > rho
        spec.rho = 0.9;
        assert!(matches!(
            BranchingSource::new(spec),
            Err(Error::DriftViolated { .. })
        ));
    }

    #[test]
    fn environment_scale_is_clipped() {
        let mut spec = bernoulli_poisson(1, 0.8, 1.0);
        spec.rho = 0.9;
        spec.environment = Some(EnvModulation { amplitude: 0.5 });
        let src = BranchingSource::new(spec).unwrap();
        for i in 0..1000 {
            let s = src.scale_at(9, 0, i);
            assert!(s * 0.8 <= 0.9 + 1e-12, "scaled mean exceeds cap: {s}");
            assert!(s >= 0.0);
        }
    }
}
