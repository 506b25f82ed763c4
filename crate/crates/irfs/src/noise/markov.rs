//! Two-sided stationary Markov sources, restricted to reversible kernels.
//!
//! A stationary chain extends to negative time through its time reversal,
//! whose kernel is `P*(a,b) = π_b P(b,a) / π_a`. For reversible chains
//! `P* = P`, so both directions use the same kernel and the two-sided
//! process is constructive: anchor the state at index 0 by a draw from `π`,
//! then walk forwards and backwards, each step keyed by its own lattice
//! index. Values are memoized per stream; the memo is pure caching, the
//! walk itself is a deterministic function of `(seed, stream, index)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::rng::CounterRng;

const ROLE_ANCHOR: u64 = 0x4D41;
const ROLE_STEP: u64 = 0x4D53;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovSpec {
    /// Real value attached to each chain state.
    pub states: Vec<f64>,
    /// Row-stochastic transition kernel.
    pub kernel: Vec<Vec<f64>>,
    /// Stationary law; must satisfy detailed balance with the kernel.
    pub stationary: Vec<f64>,
}

#[derive(Debug)]
pub struct MarkovSource {
    pub spec: MarkovSpec,
    cumulative_rows: Vec<Vec<f64>>,
    cumulative_pi: Vec<f64>,
    cache: Arc<Mutex<HashMap<u64, Path>>>,
}

#[derive(Debug, Default)]
struct Path {
    /// State index at lattice points 0, 1, 2, ...
    forward: Vec<usize>,
    /// State index at lattice points -1, -2, ...
    backward: Vec<usize>,
}

impl Clone for MarkovSource {
    fn clone(&self) -> Self {
        MarkovSource {
            spec: self.spec.clone(),
            cumulative_rows: self.cumulative_rows.clone(),
            cumulative_pi: self.cumulative_pi.clone(),
            cache: Arc::clone(&self.cache),
        }
    }
}

impl MarkovSource {
    pub fn new(spec: MarkovSpec) -> Result<Self, String> {
        let n = spec.states.len();
        if n == 0 || spec.kernel.len() != n || spec.stationary.len() != n {
            return Err("states, kernel rows and stationary law must have equal length".into());
        }
        for (i, row) in spec.kernel.iter().enumerate() {
            if row.len() != n {
                return Err(format!("kernel row {i} has wrong length"));
            }
            if row.iter().any(|&p| p < 0.0) {
                return Err(format!("kernel row {i} has negative entries"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(format!("kernel row {i} sums to {s}, expected 1"));
            }
        }
        let pi_sum: f64 = spec.stationary.iter().sum();
        if (pi_sum - 1.0).abs() > 1e-9 || spec.stationary.iter().any(|&p| p < 0.0) {
            return Err("stationary law is not a probability vector".into());
        }
        for a in 0..n {
            for b in 0..n {
                let flow_ab = spec.stationary[a] * spec.kernel[a][b];
                let flow_ba = spec.stationary[b] * spec.kernel[b][a];
                if (flow_ab - flow_ba).abs() > 1e-9 {
                    return Err(format!(
                        "kernel is not reversible: detailed balance fails for ({a}, {b})"
                    ));
                }
            }
        }
        let cumulative_rows = spec
            .kernel
            .iter()
            .map(|row| cumulative(row))
            .collect::<Vec<_>>();
        let cumulative_pi = cumulative(&spec.stationary);
        Ok(MarkovSource {
            spec,
            cumulative_rows,
            cumulative_pi,
            cache: Arc::new(Mutex::new(HashMap::new())),
        })
    }

    pub fn value_at(&self, seed: u64, stream: u64, index: i64) -> f64 {
        self.spec.states[self.state_at(seed, stream, index)]
    }

    fn state_at(&self, seed: u64, stream: u64, index: i64) -> usize {
        let mut cache = self.cache.lock().expect("markov cache poisoned");
        let path = cache.entry(stream).or_insert_with(|| {
            let mut rng = CounterRng::at(crate::rng::role_seed(seed, ROLE_ANCHOR), stream, 0);
            Path {
                forward: vec![rng.categorical(&self.cumulative_pi)],
                backward: Vec::new(),
            }
        });
        let step_seed = crate::rng::role_seed(seed, ROLE_STEP);
        if index >= 0 {
            let want = index as usize;
            while path.forward.len() <= want {
                let here = *path.forward.last().unwrap();
                let i = path.forward.len() as i64;
                let mut rng = CounterRng::at(step_seed, stream, i);
                path.forward.push(rng.categorical(&self.cumulative_rows[here]));
            }
            path.forward[want]
        } else {
            let want = (-index) as usize; // backward[0] is index -1
            while path.backward.len() < want {
                let here = *path.backward.last().unwrap_or(&path.forward[0]);
                let i = -(path.backward.len() as i64) - 1;
                let mut rng = CounterRng::at(step_seed, stream, i);
                path.backward.push(rng.categorical(&self.cumulative_rows[here]));
            }
            path.backward[want - 1]
        }
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Deterministic alternation between two states with a uniformly random
/// phase: the minimal stationary, ergodic, reversible chain. Useful for
/// period-2 matrix selections.
pub fn alternating_spec(value_a: f64, value_b: f64) -> MarkovSpec {
    MarkovSpec {
        states: vec![value_a, value_b],
        kernel: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        stationary: vec![0.5, 0.5],
    }
}
