//! The waiting-time recursion `X_{n+1} = (X_n + Z_{n+1})⁺` and its exact
//! stationary representation `V* = sup_{j ≤ 0} (Z_j + … + Z_0)⁺`.
//!
//! Two interpretations of the noise: a direct scalar increment `Z`, or a
//! queue pair `(S_{n-1}, T_n)` with `Z_n = S_{n-1} - T_n` (the G/G/1
//! waiting-time map).

use crate::engine::{ModelSpec, StateSpace};
use crate::error::{Error, Result};
use crate::noise::{DrivingProcess, NoiseValue, TimeIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LindleyParams {
    /// Scalar real noise is the increment itself.
    DirectZ,
    /// Queue-pair noise: increment `service - interarrival`.
    Queue,
}

fn increment(params: LindleyParams, z: &NoiseValue) -> f64 {
    match (params, z) {
        (LindleyParams::DirectZ, z) => z
            .as_scalar()
            .unwrap_or_else(|| panic!("lindley expects scalar noise, got {z:?}")),
        (
            LindleyParams::Queue,
            NoiseValue::QueuePair {
                service,
                interarrival,
            },
        ) => service - interarrival,
        (LindleyParams::Queue, other) => {
            panic!("lindley queue variant expects queue-pair noise, got {other:?}")
        }
    }
}

pub fn make_lindley(params: LindleyParams) -> ModelSpec {
    ModelSpec::builder(
        "lindley",
        1,
        StateSpace::NonNegativeReal,
        move |x, z| smallvec::smallvec![(x[0] + increment(params, z)).max(0.0)],
    )
    .scalar_batch(move |states, z| {
        let inc = increment(params, z);
        for x in states {
            *x = (*x + inc).max(0.0);
        }
    })
    .monotone(true)
    // (·)⁺ is 1-Lipschitz and the bound is attained while the state stays
    // positive, so K_z ≡ 1 is exact.
    .lipschitz(|_| 1.0)
    .build()
}

/// Extracts the Lindley increment at a lattice index.
pub fn increment_at(
    params: LindleyParams,
    process: &DrivingProcess,
    i: TimeIndex,
    stream: u64,
) -> Result<f64> {
    Ok(increment(params, &process.sample_at(i, stream)?))
}

/// Exact evaluation of `max(0, max_{1≤j≤depth} Σ_{i=-j+1}^{0} Z_i)` on the
/// same noise indices the engine's negative iteration consumes.
pub fn vstar_closed_form(
    params: LindleyParams,
    process: &DrivingProcess,
    depth: u64,
    stream: u64,
) -> Result<f64> {
    Ok(*vstar_closed_form_ladder(params, process, depth, stream)?
        .last()
        .ok_or_else(|| Error::InvalidParameter("depth must be at least 1".into()))?)
}

/// The running suffix-max for every depth `1..=depth`: entry `n-1` equals
/// the closed-form value of `X^{(-n)}_0(0)`.
pub fn vstar_closed_form_ladder(
    params: LindleyParams,
    process: &DrivingProcess,
    depth: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(depth as usize);
    let mut suffix_sum = 0.0f64;
    let mut running_max = 0.0f64;
    for j in 1..=depth as i64 {
        suffix_sum += increment_at(params, process, 1 - j, stream)?;
        running_max = running_max.max(suffix_sum);
        out.push(running_max.max(0.0));
    }
    Ok(out)
}
