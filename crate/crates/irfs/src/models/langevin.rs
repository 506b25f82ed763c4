//! Langevin-type iterations `X_{n+1} = X_n - λ H(X_n, Y_n) + √(2λ) N_{n+1}`
//! under a strong-convexity envelope `m(y) ≤ ∂₁H(·, y) ≤ M(y)`.
//!
//! The envelope yields the exact per-step Lipschitz factor
//! `K_z = (1 + λ²M(y)² - 2λ m(y))^{1/2}`, contraction in the mean as soon
//! as the gain stays below `2·E m / E M²`.

use crate::engine::{ModelSpec, State, StateSpace};
use crate::error::{Error, Result};
use crate::noise::NoiseValue;

use super::sg::gradient_step;

/// Drift families. The data coordinate `y` is the first entry of the data
/// vector for the scalar-curvature families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HKind {
    /// `H(x, y) = γ(y)·x - offset·𝟙` with curvature `γ(y) = base + slope·y`.
    Quadratic { base: f64, slope: f64, offset: f64 },
    /// `H(x, y) = γ(y)·x + eps·tanh(x)` coordinatewise: strongly convex but
    /// not quadratic; the envelope `[γ(y), γ(y) + eps]` is a strict bound.
    QuadraticTanh { base: f64, slope: f64, eps: f64 },
    /// `H(x, (A, V)) = A x - V` over matrix-pair noise: the stochastic
    /// gradient drift. With the Gaussian term absent this reproduces the
    /// constant-gain stochastic gradient model bit for bit.
    LinearPair,
}

/// How the convexity envelope is declared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    /// Constants valid for all data values.
    Constants { m: f64, big_m: f64 },
    /// The envelope attained by the curvature itself: `m(y) = M(y) = γ(y)`
    /// for the quadratic family, `[γ(y), γ(y)+eps]` for the tanh family.
    Attained,
}

#[derive(Debug, Clone)]
pub struct LangevinParams {
    pub gain: f64,
    pub dim: usize,
    pub h: HKind,
    pub envelope: Envelope,
}

/// `(1 + λ²M² - 2λm)^{1/2}`, the one-step contraction factor.
pub fn contraction_bound(gain: f64, m: f64, big_m: f64) -> f64 {
    (1.0 + gain * gain * big_m * big_m - 2.0 * gain * m).sqrt()
}

/// The gain threshold `2·E m / E M²` below which the mean factor dips
/// under one.
pub fn stepsize_threshold(mean_m: f64, mean_m2: f64) -> f64 {
    2.0 * mean_m / mean_m2
}

fn curvature(h: &HKind, y: f64) -> f64 {
    match *h {
        HKind::Quadratic { base, slope, .. } | HKind::QuadraticTanh { base, slope, .. } => {
            base + slope * y
        }
        HKind::LinearPair => unreachable!("linear-pair drift has no scalar curvature"),
    }
}

fn drift(h: &HKind, x: &[f64], data: &[f64]) -> State {
    match *h {
        HKind::Quadratic { offset, .. } => {
            let g = curvature(h, data[0]);
            x.iter().map(|xi| g * xi - offset).collect()
        }
        HKind::QuadraticTanh { eps, .. } => {
            let g = curvature(h, data[0]);
            x.iter().map(|xi| g * xi + eps * xi.tanh()).collect()
        }
        HKind::LinearPair => unreachable!("handled in apply"),
    }
}

pub fn make_langevin(params: &LangevinParams) -> Result<ModelSpec> {
    if params.dim == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if params.gain < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gain must be non-negative, got {}",
            params.gain
        )));
    }
    if let Envelope::Constants { m, big_m } = params.envelope {
        if !(0.0 <= m && m <= big_m) {
            return Err(Error::InvalidEnvelope { lower: m, upper: big_m });
        }
    }
    if let HKind::QuadraticTanh { eps, .. } = params.h {
        if eps < 0.0 {
            return Err(Error::InvalidParameter("negative tanh slope".into()));
        }
    }
    let gain = params.gain;
    let h = params.h;
    let envelope = params.envelope;
    let gauss_scale = (2.0 * gain).sqrt();

    let apply = move |x: &[f64], z: &NoiseValue| -> State {
        match (h, z) {
            (HKind::LinearPair, NoiseValue::MatrixPair { a, b }) => {
                // √(2λ)·0 adds nothing: the step IS the gradient step.
                gradient_step(x, a, b, gain)
            }
            (_, NoiseValue::LangevinPair { data, gauss }) => {
                let hval = drift(&h, x, data);
                x.iter()
                    .zip(hval.iter().zip(gauss.iter()))
                    .map(|(xi, (hi, ni))| xi - gain * hi + gauss_scale * ni)
                    .collect()
            }
            (_, other) => panic!("langevin model got unsupported noise {other:?}"),
        }
    };

    let lipschitz = move |z: &NoiseValue| -> f64 {
        match (h, z) {
            (HKind::LinearPair, NoiseValue::MatrixPair { a, .. }) => {
                let d = a.dim();
                let mut m = crate::linalg::SquareMatrix::identity(d);
                for i in 0..d {
                    for j in 0..d {
                        m.set(i, j, m.get(i, j) - gain * a.get(i, j));
                    }
                }
                m.operator_norm(1e-12)
            }
            (_, NoiseValue::LangevinPair { data, .. }) => {
                let (lo, hi) = match envelope {
                    Envelope::Constants { m, big_m } => (m, big_m),
                    Envelope::Attained => {
                        let g = curvature(&h, data[0]);
                        match h {
                            HKind::QuadraticTanh { eps, .. } => (g, g + eps),
                            _ => (g, g),
                        }
                    }
                };
                contraction_bound(gain, lo, hi)
            }
            (_, other) => panic!("langevin model got unsupported noise {other:?}"),
        }
    };

    let builder = ModelSpec::builder("langevin", params.dim, StateSpace::Real, apply)
        .lipschitz(lipschitz);
    Ok(builder.build())
}
