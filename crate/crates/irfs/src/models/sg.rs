//! Constant-gain stochastic gradient for least squares,
//! `X_{n+1} = X_n - λ(A_{n+1} X_n - V_{n+1})`, with trajectory averaging
//! and asymptotic-bias estimation. The map is affine in the state, so the
//! exact linear part `I - λA` is attached.

use rayon::prelude::*;
use serde::Serialize;
use smallvec::SmallVec;

use crate::engine::{self, ModelSpec, State, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::{solve, SquareMatrix};
use crate::noise::{DrivingProcess, NoiseValue};

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgDerive {
    /// The noise provides `(A, V)` matrix pairs directly.
    Pair,
    /// Scalar real noise `z` is lifted to `A = z²` (positive
    /// semi-definite by construction) and `V = z`, the documented scalar
    /// route for dependent sources like the 3-dependent window process.
    ScalarQuad,
}

#[derive(Debug, Clone)]
pub struct SgParams {
    pub gain: f64,
    pub dim: usize,
    pub derive: SgDerive,
}

/// One gradient step `x - λ(a·x - v)`. Shared verbatim with the Langevin
/// linear-pair drift so the two models coincide bit-for-bit on shared
/// noise when the Gaussian term vanishes.
#[inline]
pub(crate) fn gradient_step(x: &[f64], a: &SquareMatrix, v: &[f64], gain: f64) -> State {
    let ax = a.apply(x);
    x.iter()
        .zip(ax.iter().zip(v))
        .map(|(xi, (axi, vi))| xi - gain * (axi - vi))
        .collect()
}

pub(crate) fn pair_of(derive: SgDerive, z: &NoiseValue) -> (SquareMatrix, State) {
    match (derive, z) {
        (SgDerive::Pair, NoiseValue::MatrixPair { a, b }) => (a.clone(), b.clone()),
        (SgDerive::ScalarQuad, z) => {
            let s = z
                .as_scalar()
                .unwrap_or_else(|| panic!("scalar derivation expects scalar noise, got {z:?}"));
            (SquareMatrix::scalar(s * s), smallvec::smallvec![s])
        }
        (SgDerive::Pair, other) => {
            panic!("sg pair derivation expects matrix-pair noise, got {other:?}")
        }
    }
}

pub fn make_sg(params: &SgParams) -> Result<ModelSpec> {
    if params.dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if params.gain <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gain must be positive, got {}",
            params.gain
        )));
    }
    if params.derive == SgDerive::ScalarQuad && params.dim != 1 {
        return Err(Error::DimensionMismatch(
            "scalar derivation needs dim 1".into(),
        ));
    }
    let gain = params.gain;
    let derive = params.derive;
    let step_matrix = move |z: &NoiseValue| {
        let (a, _) = pair_of(derive, z);
        let d = a.dim();
        let mut m = SquareMatrix::identity(d);
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, m.get(i, j) - gain * a.get(i, j));
            }
        }
        m
    };
    Ok(ModelSpec::builder(
        "stochastic_gradient",
        params.dim,
        StateSpace::Real,
        move |x, z| {
            let (a, v) = pair_of(derive, z);
            gradient_step(x, &a, &v, gain)
        },
    )
    .lipschitz(move |z| step_matrix(z).operator_norm(NORM_TOL))
    .linear_part(step_matrix)
    .build())
}

/// Running means `X̄_n = (1/n) Σ_{i=1}^{n} X_i` (the start value is not
/// averaged).
pub fn average_trajectory(traj: &engine::Trajectory) -> Vec<State> {
    let dim = traj.values.first().map_or(0, |s| s.len());
    let mut acc: State = engine::zero_state(dim);
    let mut out = Vec::with_capacity(traj.values.len().saturating_sub(1));
    for (n, x) in traj.values.iter().skip(1).enumerate() {
        for (a, v) in acc.iter_mut().zip(x.iter()) {
            *a += v;
        }
        out.push(acc.iter().map(|a| a / (n as f64 + 1.0)).collect());
    }
    out
}

/// `θ = Ā⁻¹ V̄` from explicit means.
pub fn target_from_means(a_mean: &SquareMatrix, v_mean: &[f64]) -> Result<State> {
    solve(a_mean, v_mean)
}

/// Empirical target: mean `A` and `V` over a window of noise, inverted.
pub fn estimate_target(
    derive: SgDerive,
    process: &DrivingProcess,
    samples: u64,
    stream: u64,
) -> Result<State> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    let mut a_acc: Option<SquareMatrix> = None;
    let mut v_acc: State = SmallVec::new();
    for i in 1..=samples as i64 {
        let (a, v) = pair_of(derive, &process.sample_at(i, stream)?);
        match &mut a_acc {
            None => {
                a_acc = Some(a);
                v_acc = v;
            }
            Some(acc) => {
                for r in 0..acc.dim() {
                    for c in 0..acc.dim() {
                        acc.set(r, c, acc.get(r, c) + a.get(r, c));
                    }
                }
                for (dst, src) in v_acc.iter_mut().zip(v.iter()) {
                    *dst += src;
                }
            }
        }
    }
    let a_mean = a_acc.unwrap().scale(1.0 / samples as f64);
    let v_mean: State = v_acc.iter().map(|v| v / samples as f64).collect();
    target_from_means(&a_mean, &v_mean)
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasEstimate {
    pub gain: f64,
    pub horizon: u64,
    pub replicas: u64,
    /// Replica mean of `X̄_horizon - θ`, per coordinate.
    pub delta: State,
    /// Norm of `delta` with its replica standard error.
    pub delta_norm: f64,
    pub std_error: f64,
}

/// Estimates the asymptotic averaging bias `δ_λ = lim X̄_n - θ` at a fixed
/// horizon, with error bars from replica dispersion.
pub fn bias_estimate(
    params: &SgParams,
    process: &DrivingProcess,
    theta: &[f64],
    horizon: u64,
    replicas: u64,
    base_stream: u64,
) -> Result<BiasEstimate> {
    let model = make_sg(params)?;
    let start = engine::zero_state(params.dim);
    let per_replica: Vec<State> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<State> {
            let traj = engine::forward_iterate(&model, process, &start, horizon, base_stream + r)?;
            let xbar = average_trajectory(&traj)
                .pop()
                .ok_or_else(|| Error::InvalidParameter("horizon must be positive".into()))?;
            Ok(xbar.iter().zip(theta).map(|(x, t)| x - t).collect())
        })
        .collect::<Result<_>>()?;
    let dim = params.dim;
    let mut delta = engine::zero_state(dim);
    for d in &per_replica {
        for (acc, v) in delta.iter_mut().zip(d.iter()) {
            *acc += v;
        }
    }
    for v in delta.iter_mut() {
        *v /= replicas as f64;
    }
    let norms: Vec<f64> = per_replica
        .iter()
        .map(|d| engine::lp_norm(d, 2.0))
        .collect();
    Ok(BiasEstimate {
        gain: params.gain,
        horizon,
        replicas,
        delta_norm: engine::lp_norm(&delta, 2.0),
        delta,
        std_error: crate::stats::std_error(&norms),
    })
}
