//! Affine recursions `X_{n+1} = A_{n+1} X_n + B_{n+1}`.
//!
//! The per-step Lipschitz factor is exactly the operator norm of `A`, and
//! the linear part is exposed so composite Lipschitz norms are computed as
//! matrix-product norms rather than bounds.


use crate::engine::{ModelSpec, State, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::noise::NoiseValue;

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AffineInterp {
    /// The noise provides `(A, B)` pairs directly.
    Pair,
    /// Scalar real noise `z` acts multiplicatively: `A = [z]`, `B = 0`.
    ScalarMultiplicative,
}

#[derive(Debug, Clone)]
pub struct AffineParams {
    pub dim: usize,
    pub interp: AffineInterp,
}

pub fn make_affine(params: &AffineParams) -> Result<ModelSpec> {
    if params.dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if params.interp == AffineInterp::ScalarMultiplicative && params.dim != 1 {
        return Err(Error::DimensionMismatch(
            "scalar multiplicative interpretation needs dim 1".into(),
        ));
    }
    let dim = params.dim;
    match params.interp {
        AffineInterp::Pair => Ok(ModelSpec::builder(
            "affine",
            dim,
            StateSpace::Real,
            move |x, z| match z {
                NoiseValue::MatrixPair { a, b } => {
                    let mut out = a.apply(x);
                    for (o, add) in out.iter_mut().zip(b.iter()) {
                        *o += add;
                    }
                    out
                }
                other => panic!("affine model expects matrix-pair noise, got {other:?}"),
            },
        )
        .lipschitz(|z| match z {
            NoiseValue::MatrixPair { a, .. } => a.operator_norm(NORM_TOL),
            other => panic!("affine model expects matrix-pair noise, got {other:?}"),
        })
        .linear_part(|z| match z {
            NoiseValue::MatrixPair { a, .. } => a.clone(),
            other => panic!("affine model expects matrix-pair noise, got {other:?}"),
        })
        .build()),
        AffineInterp::ScalarMultiplicative => Ok(make_multiplicative_scalar()),
    }
}

/// The scalar multiplicative map `X_{n+1} = Z_{n+1} · X_n`, the natural
/// model over scalar real noise (e.g. the two-point counterexample source).
pub fn make_multiplicative_scalar() -> ModelSpec {
    ModelSpec::builder(
        "multiplicative",
        1,
        StateSpace::Real,
        |x, z| {
            let f = scalar_factor(z);
            smallvec::smallvec![f * x[0]]
        },
    )
    .scalar_batch(|states, z| {
        let f = scalar_factor(z);
        for x in states {
            *x *= f;
        }
    })
    .lipschitz(|z| scalar_factor(z).abs())
    .linear_part(|z| SquareMatrix::scalar(scalar_factor(z)))
    .build()
}

fn scalar_factor(z: &NoiseValue) -> f64 {
    z.as_scalar()
        .unwrap_or_else(|| panic!("multiplicative model expects scalar noise, got {z:?}"))
}

/// Exact coupling identity for affine models: the distance after `n` steps
/// equals `|A_n ⋯ A_1 (v - v')|`.
pub fn coupled_difference(
    model: &ModelSpec,
    process: &crate::noise::DrivingProcess,
    v: &[f64],
    v_other: &[f64],
    n: u64,
    stream: u64,
) -> Result<State> {
    let mut diff: State = v.iter().zip(v_other).map(|(a, b)| a - b).collect();
    for j in 1..=n as i64 {
        let z = process.sample_at(j, stream)?;
        let a = model
            .linear_part(&z)
            .ok_or(Error::MethodUnavailable("model has no linear part"))?;
        diff = a.apply(&diff);
    }
    Ok(diff)
}

/// Shear matrix with `‖A‖ = 2` but `A² = 0.25·I`: per-step norms exceed
/// one while every two-step composite contracts.
pub fn contracting_shear() -> SquareMatrix {
    SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![0.125, 0.0]]).expect("static shape")
}
