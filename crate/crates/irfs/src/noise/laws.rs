//! Scalar and counting distributions used as building blocks for driving
//! processes. Every law samples through [`CounterRng`], so the catalog
//! inherits the keyed determinism of the word function.

use serde::{Deserialize, Serialize};

use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ScalarLaw {
    Constant { value: f64 },
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { mean: f64 },
    /// Two-point law: `lo` with probability `p_lo`, else `hi`.
    TwoPoint { lo: f64, hi: f64, p_lo: f64 },
}

impl ScalarLaw {
    pub fn sample(&self, rng: &mut CounterRng) -> f64 {
        match *self {
            ScalarLaw::Constant { value } => value,
            ScalarLaw::Uniform { lo, hi } => rng.uniform_in(lo, hi),
            ScalarLaw::Normal { mean, sd } => mean + sd * rng.normal(),
            ScalarLaw::Exponential { mean } => rng.exponential(mean),
            ScalarLaw::TwoPoint { lo, hi, p_lo } => {
                if rng.bernoulli(p_lo) {
                    lo
                } else {
                    hi
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ScalarLaw::Constant { value } => value,
            ScalarLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            ScalarLaw::Normal { mean, .. } => mean,
            ScalarLaw::Exponential { mean } => mean,
            ScalarLaw::TwoPoint { lo, hi, p_lo } => p_lo * lo + (1.0 - p_lo) * hi,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ScalarLaw::Uniform { lo, hi } if lo > hi || lo.is_nan() || hi.is_nan() => {
                Err(format!("uniform bounds out of order: [{lo}, {hi}]"))
            }
            ScalarLaw::Normal { sd, .. } if sd < 0.0 => Err(format!("negative sd {sd}")),
            ScalarLaw::Exponential { mean } if mean < 0.0 => {
                Err(format!("negative exponential mean {mean}"))
            }
            ScalarLaw::TwoPoint { p_lo, .. } if !(0.0..=1.0).contains(&p_lo) => {
                Err(format!("two-point probability {p_lo} outside [0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

/// Laws over the non-negative integers, for offspring and immigration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CountLaw {
    Constant { value: u64 },
    Bernoulli { p: f64 },
    Poisson { mean: f64 },
}

impl CountLaw {
    /// Samples with the base mean multiplied by `scale` (the environment
    /// modulation hook). Bernoulli probabilities are clamped to `[0, 1]`.
    pub fn sample_scaled(&self, rng: &mut CounterRng, scale: f64) -> u64 {
        match *self {
            CountLaw::Constant { value } => {
                // A constant law ignores modulation; it has no randomness to scale.
                value
            }
            CountLaw::Bernoulli { p } => u64::from(rng.bernoulli((p * scale).clamp(0.0, 1.0))),
            CountLaw::Poisson { mean } => rng.poisson((mean * scale).max(0.0)),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            CountLaw::Constant { value } => value as f64,
            CountLaw::Bernoulli { p } => p,
            CountLaw::Poisson { mean } => mean,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            CountLaw::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                Err(format!("bernoulli probability {p} outside [0, 1]"))
            }
            CountLaw::Poisson { mean } if mean < 0.0 => {
                Err(format!("negative poisson mean {mean}"))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_law_means() {
        let mut acc = 0.0;
        let law = ScalarLaw::TwoPoint { lo: -1.0, hi: 1.0, p_lo: 0.75 };
        for i in 0..100_000 {
            acc += law.sample(&mut CounterRng::at(3, 0, i));
        }
        assert!((acc / 100_000.0 - law.mean()).abs() < 0.01);
        assert_eq!(law.mean(), -0.5);
    }

    #[test]
    fn count_law_scaling() {
        let law = CountLaw::Bernoulli { p: 0.5 };
        let mut ones = 0u64;
        for i in 0..50_000 {
            ones += law.sample_scaled(&mut CounterRng::at(4, 0, i), 0.5);
        }
        let frac = ones as f64 / 50_000.0;
        assert!((frac - 0.25).abs() < 0.01, "frac {frac}");
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(ScalarLaw::Uniform { lo: 1.0, hi: 0.0 }.validate().is_err());
        assert!(CountLaw::Bernoulli { p: 1.5 }.validate().is_err());
        assert!(CountLaw::Poisson { mean: -1.0 }.validate().is_err());
    }
}
