//! Lipschitz norms, Lyapunov exponents, and the stability criteria.
//!
//! Composite Lipschitz norms of `F_n ∘ … ∘ F_1` are measured three ways,
//! in decreasing exactness:
//!
//! * **exact** — for affine-in-state maps, the operator norm of the matrix
//!   product (running product with rescaling, so horizons of 10⁶ steps
//!   neither overflow nor underflow);
//! * **per-step factor upper bound** — `Π K_{Z_i}` when the model declares
//!   an exact per-step factor;
//! * **sampled-pairs lower bound** — the largest difference quotient over a
//!   cloud of coupled pairs: always available, only a lower bound.
//!
//! Statistical verdicts use 3-sigma bands around the estimate with an
//! explicit `Inconclusive` state; a zero-dispersion (deterministic) sample
//! degenerates to the strict comparison.

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{lp_norm, ModelSpec, State, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::noise::DrivingProcess;
use crate::rng::{role_seed, CounterRng};
use crate::stats;

pub use crate::linalg::SquareMatrix as Matrix;

const PAIR_ROLE: u64 = 0x5052;
const PROBE_ROLE: u64 = 0x5042;
/// Default sampling ball radius for pair clouds.
pub const DEFAULT_PAIR_RADIUS: f64 = 10.0;
/// Default number of sampled pairs.
pub const DEFAULT_PAIRS: u64 = 1_000;

/// Spectral norm of a matrix within relative tolerance `tol`.
pub fn matrix_operator_norm(a: &SquareMatrix, tol: f64) -> f64 {
    a.operator_norm(tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    ExactMatrixNorm,
    PerStepFactorUpperBound,
    SampledPairsLowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Satisfaction {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    /// Integrability of `(log ‖F_1‖)⁺`.
    ThmGenFirst,
    /// Long-run contraction `E log ‖F_n ∘ … ∘ F_1‖ < 0` for some `n`.
    ThmGenSecond,
    /// One-step contraction in the mean of logs, `E log K_Z < 0`.
    OneStepContraction,
    /// Foster–Lyapunov drift with slope below one.
    DriftCondition,
    /// Long-run root test `limsup (E ‖F_k ∘ … ∘ F_1‖)^{1/k} < 1`.
    LongRunContraction,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionVerdict {
    pub condition: ConditionKind,
    pub satisfaction: Satisfaction,
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub note: String,
}

/// 3-sigma verdict for "estimate must lie strictly below `threshold`".
fn verdict_below(
    condition: ConditionKind,
    estimate: f64,
    std_error: f64,
    samples: u64,
    threshold: f64,
    note: impl Into<String>,
) -> ConditionVerdict {
    let satisfaction = if !estimate.is_finite() {
        Satisfaction::Violated
    } else if std_error == 0.0 {
        if estimate < threshold {
            Satisfaction::Satisfied
        } else {
            Satisfaction::Violated
        }
    } else if estimate + 3.0 * std_error < threshold {
        Satisfaction::Satisfied
    } else if estimate - 3.0 * std_error > threshold {
        Satisfaction::Violated
    } else {
        Satisfaction::Inconclusive
    };
    ConditionVerdict {
        condition,
        satisfaction,
        estimate,
        std_error,
        samples,
        note: note.into(),
    }
}

/// Incremental tracker of `log ‖F_j ∘ … ∘ F_1‖` along one noise stream.
enum NormTracker {
    Exact {
        product: SquareMatrix,
        log_scale: f64,
    },
    Factors {
        log_sum: f64,
    },
    Pairs {
        pairs: Vec<(State, State, f64)>,
    },
}

impl NormTracker {
    fn method(&self) -> NormMethod {
        match self {
            NormTracker::Exact { .. } => NormMethod::ExactMatrixNorm,
            NormTracker::Factors { .. } => NormMethod::PerStepFactorUpperBound,
            NormTracker::Pairs { .. } => NormMethod::SampledPairsLowerBound,
        }
    }

    fn new(model: &ModelSpec, process: &DrivingProcess, stream: u64, pairs: u64, radius: f64) -> Self {
        if model.has_linear_part() {
            NormTracker::Exact {
                product: SquareMatrix::identity(model.state_dim()),
                log_scale: 0.0,
            }
        } else if model.has_lipschitz_factor() {
            NormTracker::Factors { log_sum: 0.0 }
        } else {
            let mut cloud = Vec::with_capacity(pairs as usize);
            let seed = role_seed(process.seed(), PAIR_ROLE);
            for p in 0..pairs {
                let mut rng = CounterRng::sub_stream(seed, stream, 0, p);
                let (x, y) = sample_pair(model, &mut rng, radius);
                let d0 = model.distance(&x, &y);
                if d0 > 0.0 {
                    cloud.push((x, y, d0));
                }
            }
            NormTracker::Pairs { pairs: cloud }
        }
    }

    fn step(&mut self, model: &ModelSpec, z: &crate::noise::NoiseValue) {
        match self {
            NormTracker::Exact { product, log_scale } => {
                let a = model.linear_part(z).expect("tracker requires linear part");
                *product = a.matmul(product);
                let scale = product.frobenius();
                if scale > 1e100 || (scale > 0.0 && scale < 1e-100) {
                    *product = product.scale(1.0 / scale);
                    *log_scale += scale.ln();
                }
            }
            NormTracker::Factors { log_sum } => {
                *log_sum += model
                    .lipschitz_factor(z)
                    .expect("tracker requires factor")
                    .max(f64::MIN_POSITIVE)
                    .ln();
            }
            NormTracker::Pairs { pairs } => {
                for (x, y, _) in pairs.iter_mut() {
                    *x = model.apply(x, z);
                    *y = model.apply(y, z);
                }
            }
        }
    }

    /// `log` of the current composite-norm measurement.
    fn log_norm(&self) -> f64 {
        match self {
            NormTracker::Exact { product, log_scale } => {
                log_scale + product.operator_norm(1e-12).max(f64::MIN_POSITIVE).ln()
            }
            NormTracker::Factors { log_sum } => *log_sum,
            NormTracker::Pairs { pairs } => pairs
                .iter()
                .map(|(x, y, d0)| model_free_quotient(x, y, *d0))
                .fold(f64::NEG_INFINITY, f64::max)
                .max(-745.0), // floor at log of the smallest positive double
        }
    }
}

fn model_free_quotient(x: &State, y: &State, d0: f64) -> f64 {
    let diff: State = x.iter().zip(y.iter()).map(|(a, b)| a - b).collect();
    let d = lp_norm(&diff, 2.0);
    (d.max(f64::MIN_POSITIVE) / d0).ln()
}

fn sample_pair(model: &ModelSpec, rng: &mut CounterRng, radius: f64) -> (State, State) {
    let dim = model.state_dim();
    let draw = |rng: &mut CounterRng| -> State {
        (0..dim)
            .map(|_| match model.state_space() {
                StateSpace::Real => rng.uniform_in(-radius, radius),
                StateSpace::NonNegativeReal => rng.uniform_in(0.0, radius),
                StateSpace::NonNegativeInteger => (rng.uniform() * (radius + 1.0)).floor(),
            })
            .collect()
    };
    let x = draw(rng);
    let mut y = draw(rng);
    if x == y {
        // Nudge one coordinate to keep the quotient defined.
        match model.state_space() {
            StateSpace::NonNegativeInteger => y[0] += 1.0,
            _ => y[0] += radius * 1e-3 + 1e-9,
        }
    }
    (x, y)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositeLipschitz {
    pub window: u64,
    /// Largest difference quotient over the sampled pair cloud.
    pub lower: f64,
    /// `Π K_{Z_i}`, when a per-step factor exists.
    pub upper: Option<f64>,
    /// Operator norm of the matrix product, when a linear part exists.
    pub exact: Option<f64>,
}

/// Lower/upper/exact composite Lipschitz measurements over the window
/// `Z_1..Z_n` of one stream.
pub fn composite_lipschitz(
    model: &ModelSpec,
    process: &DrivingProcess,
    n: u64,
    stream: u64,
    pairs: u64,
    radius: f64,
) -> Result<CompositeLipschitz> {
    if n == 0 {
        return Err(Error::InvalidParameter("window must not be empty".into()));
    }
    let seed = role_seed(process.seed(), PAIR_ROLE);
    let mut cloud: Vec<(State, State, f64)> = (0..pairs)
        .map(|p| {
            let mut rng = CounterRng::sub_stream(seed, stream, 0, p);
            let (x, y) = sample_pair(model, &mut rng, radius);
            let d0 = model.distance(&x, &y);
            (x, y, d0)
        })
        .filter(|(_, _, d0)| *d0 > 0.0)
        .collect();
    let mut upper = model.has_lipschitz_factor().then_some(0.0f64);
    let mut exact_product = model
        .has_linear_part()
        .then(|| (SquareMatrix::identity(model.state_dim()), 0.0f64));
    for j in 1..=n as i64 {
        let z = process.sample_at(j, stream)?;
        for (x, y, _) in cloud.iter_mut() {
            *x = model.apply(x, &z);
            *y = model.apply(y, &z);
        }
        if let Some(log_sum) = upper.as_mut() {
            *log_sum += model.lipschitz_factor(&z).unwrap().max(f64::MIN_POSITIVE).ln();
        }
        if let Some((product, log_scale)) = exact_product.as_mut() {
            let a = model.linear_part(&z).unwrap();
            *product = a.matmul(product);
            let scale = product.frobenius();
            if scale > 1e100 || (scale > 0.0 && scale < 1e-100) {
                *product = product.scale(1.0 / scale);
                *log_scale += scale.ln();
            }
        }
    }
    let lower = cloud
        .iter()
        .map(|(x, y, d0)| model.distance(x, y) / d0)
        .fold(0.0f64, f64::max);
    Ok(CompositeLipschitz {
        window: n,
        lower,
        upper: upper.map(f64::exp),
        exact: exact_product
            .map(|(product, log_scale)| (log_scale + product.operator_norm(1e-12).ln()).exp()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovEstimate {
    pub horizons: Vec<u64>,
    /// Subadditive averages `E_n`, one per horizon, replica means.
    pub averages: Vec<f64>,
    /// Estimate at the largest horizon.
    pub point: f64,
    /// Replica dispersion at the largest horizon; `None` for one replica.
    pub std_error: Option<f64>,
    pub replicas: u64,
    pub method: NormMethod,
}

/// Estimates the Lyapunov exponent as `(1/n) log ‖F_n ∘ … ∘ F_1‖` across
/// increasing horizons, replica-averaged, with the sharpest norm route the
/// model supports.
pub fn estimate_lyapunov(
    model: &ModelSpec,
    process: &DrivingProcess,
    horizons: &[u64],
    replicas: u64,
    base_stream: u64,
) -> Result<LyapunovEstimate> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "horizons must be nonempty and strictly increasing".into(),
        ));
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be positive".into()));
    }
    let max_n = *horizons.last().unwrap();
    let per_replica: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let stream = base_stream + r;
            let mut tracker =
                NormTracker::new(model, process, stream, DEFAULT_PAIRS, DEFAULT_PAIR_RADIUS);
            let mut out = Vec::with_capacity(horizons.len());
            let mut h_iter = horizons.iter().copied().peekable();
            for j in 1..=max_n as i64 {
                let z = process.sample_at(j, stream)?;
                tracker.step(model, &z);
                if h_iter.peek() == Some(&(j as u64)) {
                    h_iter.next();
                    out.push(tracker.log_norm() / j as f64);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let method = NormTracker::new(model, process, base_stream, 1, DEFAULT_PAIR_RADIUS).method();
    let averages: Vec<f64> = (0..horizons.len())
        .map(|h| stats::mean(&per_replica.iter().map(|r| r[h]).collect::<Vec<_>>()))
        .collect();
    let at_last: Vec<f64> = per_replica.iter().map(|r| *r.last().unwrap()).collect();
    Ok(LyapunovEstimate {
        horizons: horizons.to_vec(),
        point: *averages.last().unwrap(),
        averages,
        std_error: (replicas > 1).then(|| stats::std_error(&at_last)),
        replicas,
        method,
    })
}

/// One-step norm samples `log ‖F_i‖` over a window of lattice indices,
/// through the sharpest available route.
fn one_step_log_norms(
    model: &ModelSpec,
    process: &DrivingProcess,
    samples: u64,
    stream: u64,
) -> Result<(Vec<f64>, NormMethod)> {
    let mut out = Vec::with_capacity(samples as usize);
    let method = if model.has_linear_part() {
        NormMethod::ExactMatrixNorm
    } else if model.has_lipschitz_factor() {
        NormMethod::PerStepFactorUpperBound
    } else {
        NormMethod::SampledPairsLowerBound
    };
    for i in 1..=samples as i64 {
        let z = process.sample_at(i, stream)?;
        let norm = if let Some(a) = model.linear_part(&z) {
            a.operator_norm(1e-12)
        } else if let Some(k) = model.lipschitz_factor(&z) {
            k
        } else {
            let seed = role_seed(process.seed(), PAIR_ROLE);
            let mut best = 0.0f64;
            for p in 0..64u64 {
                let mut rng = CounterRng::sub_stream(seed, stream, i, p);
                let (x, y) = sample_pair(model, &mut rng, DEFAULT_PAIR_RADIUS);
                let d0 = model.distance(&x, &y);
                if d0 == 0.0 {
                    continue;
                }
                let q = model.distance(&model.apply(&x, &z), &model.apply(&y, &z)) / d0;
                best = best.max(q);
            }
            best
        };
        out.push(norm.max(f64::MIN_POSITIVE).ln());
    }
    Ok((out, method))
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremGenCheck {
    pub first: ConditionVerdict,
    pub second: ConditionVerdict,
    pub horizon: u64,
    pub method: NormMethod,
}

/// Verifies the two blanket conditions: integrability of `(log ‖F_1‖)⁺`
/// (finite sample mean plus a heavy-tail screen on the top order
/// statistics) and `E log ‖F_n ∘ … ∘ F_1‖ < 0` at the given horizon.
pub fn check_theorem_gen(
    model: &ModelSpec,
    process: &DrivingProcess,
    n: u64,
    samples: u64,
    base_stream: u64,
) -> Result<TheoremGenCheck> {
    let (log_norms, method) = one_step_log_norms(model, process, samples, base_stream)?;
    let positive_part: Vec<f64> = log_norms.iter().map(|v| v.max(0.0)).collect();
    let (mean_pos, se_pos) = stats::batch_mean_se(&positive_part, 50);
    let tail = stats::hill_tail_index(&positive_part, 0.01);
    let tail_ok = tail.is_none_or(|idx| idx > 1.0);
    let first = ConditionVerdict {
        condition: ConditionKind::ThmGenFirst,
        satisfaction: if !mean_pos.is_finite() {
            Satisfaction::Violated
        } else if tail_ok {
            Satisfaction::Satisfied
        } else {
            Satisfaction::Inconclusive
        },
        estimate: mean_pos,
        std_error: se_pos,
        samples,
        note: match tail {
            Some(idx) if idx.is_finite() => format!("hill tail index {idx:.2}"),
            Some(_) => "hill tail index unbounded (tied upper order statistics)".into(),
            None => "too few positive samples for a tail screen".into(),
        },
    };

    // E_n with replica error bars; keep the total step budget near `samples`.
    let replicas = (samples / n).clamp(8, 4096);
    let estimate = estimate_lyapunov(model, process, &[n], replicas, base_stream)?;
    let second = verdict_below(
        ConditionKind::ThmGenSecond,
        estimate.point * n as f64,
        estimate.std_error.unwrap_or(0.0) * n as f64,
        replicas,
        0.0,
        format!("E_n·n at n={n} via {:?}", estimate.method),
    );
    Ok(TheoremGenCheck {
        first,
        second,
        horizon: n,
        method,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OneStepCheck {
    pub verdict: ConditionVerdict,
    /// Mean of `|F(0, Z)|` with a finite-mean tail screen outcome.
    pub f_zero_abs_mean: f64,
    pub f_zero_tail_ok: bool,
}

/// Verifies `E log K_Z < 0` and, alongside, that `E |F(0, Z)| < ∞` looks
/// plausible empirically.
pub fn check_one_step(
    model: &ModelSpec,
    process: &DrivingProcess,
    samples: u64,
    base_stream: u64,
) -> Result<OneStepCheck> {
    if !model.has_lipschitz_factor() {
        return Err(Error::MethodUnavailable(
            "model declares no exact per-step Lipschitz factor",
        ));
    }
    let mut logs = Vec::with_capacity(samples as usize);
    let mut f_zero = Vec::with_capacity(samples as usize);
    let origin = crate::engine::zero_state(model.state_dim());
    for i in 1..=samples as i64 {
        let z = process.sample_at(i, base_stream)?;
        logs.push(model.lipschitz_factor(&z).unwrap().max(f64::MIN_POSITIVE).ln());
        f_zero.push(model.norm(&model.apply(&origin, &z)));
    }
    let (mean_log, se_log) = stats::batch_mean_se(&logs, 50);
    let tail = stats::hill_tail_index(&f_zero, 0.01);
    Ok(OneStepCheck {
        verdict: verdict_below(
            ConditionKind::OneStepContraction,
            mean_log,
            se_log,
            samples,
            0.0,
            "mean of log K_Z",
        ),
        f_zero_abs_mean: stats::mean(&f_zero),
        f_zero_tail_ok: tail.is_none_or(|idx| idx > 1.0),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftFit {
    pub rho_hat: f64,
    pub rho_se: f64,
    pub k_hat: f64,
    pub verdict: ConditionVerdict,
    /// Declared `(rho, k)` when the model carries drift metadata.
    pub declared: Option<(f64, f64)>,
    pub probes: Vec<(f64, f64, f64)>,
}

/// Fits `E |F(x, Z)|_p ≈ ρ̂·|x|_p + K̂` over probe states spanning several
/// magnitudes and compares the slope against one.
pub fn check_drift(
    model: &ModelSpec,
    process: &DrivingProcess,
    magnitudes: &[f64],
    samples: u64,
    base_stream: u64,
) -> Result<DriftFit> {
    if magnitudes.len() < 3 {
        return Err(Error::InvalidParameter(
            "need at least three probe magnitudes".into(),
        ));
    }
    let dim = model.state_dim();
    let p = model.drift().map_or(2.0, |d| d.p);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ses = Vec::new();
    let mut probes = Vec::new();
    for (pi, &mag) in magnitudes.iter().enumerate() {
        // Deterministic positive direction, scaled to the magnitude.
        let mut dir_rng = CounterRng::at(role_seed(process.seed(), PROBE_ROLE), 0, pi as i64);
        let mut x: State = (0..dim).map(|_| dir_rng.uniform_in(0.5, 1.0)).collect();
        let scale = mag / lp_norm(&x, p).max(f64::MIN_POSITIVE);
        for v in x.iter_mut() {
            *v *= scale;
        }
        if model.state_space() == StateSpace::NonNegativeInteger {
            for v in x.iter_mut() {
                *v = v.round();
            }
        }
        let actual_mag = lp_norm(&x, p);
        let images: Vec<f64> = (1..=samples as i64)
            .map(|i| -> Result<f64> {
                let z = process.sample_at(i, base_stream + pi as u64)?;
                Ok(lp_norm(&model.apply(&x, &z), p))
            })
            .collect::<Result<_>>()?;
        let (m, se) = stats::batch_mean_se(&images, 50);
        xs.push(actual_mag);
        ys.push(m);
        ses.push(se);
        probes.push((actual_mag, m, se));
    }
    let fit = stats::linear_fit(&xs, &ys, &ses);
    let verdict = verdict_below(
        ConditionKind::DriftCondition,
        fit.slope,
        fit.slope_se,
        samples * magnitudes.len() as u64,
        1.0,
        format!("least-squares over {} probes, l_{p} norm", magnitudes.len()),
    );
    Ok(DriftFit {
        rho_hat: fit.slope,
        rho_se: fit.slope_se,
        k_hat: fit.intercept,
        verdict,
        declared: model.drift().map(|d| (d.rho, d.k)),
        probes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LongRunCheck {
    pub horizons: Vec<u64>,
    /// Root sequence `(mean ‖F_k ∘ … ∘ F_1‖)^{1/k}`.
    pub roots: Vec<f64>,
    pub root_ses: Vec<f64>,
    /// limsup proxy: the largest root over the final doubling block.
    pub proxy: f64,
    pub proxy_se: f64,
    pub verdict: ConditionVerdict,
    pub method: NormMethod,
}

/// Root test for long-run contractivity in the mean. The limsup is proxied
/// by the maximum over the final doubling block of horizons.
pub fn check_longrun(
    model: &ModelSpec,
    process: &DrivingProcess,
    k_max: u64,
    replicas: u64,
    base_stream: u64,
) -> Result<LongRunCheck> {
    if k_max == 0 || replicas < 2 {
        return Err(Error::InvalidParameter(
            "need k_max ≥ 1 and at least two replicas".into(),
        ));
    }
    let mut horizons = Vec::new();
    let mut k = 1u64;
    while k < k_max {
        horizons.push(k);
        k *= 2;
    }
    horizons.push(k_max);
    horizons.dedup();
    let per_replica: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let stream = base_stream + r;
            let mut tracker =
                NormTracker::new(model, process, stream, DEFAULT_PAIRS.min(128), DEFAULT_PAIR_RADIUS);
            let mut out = Vec::with_capacity(horizons.len());
            let mut h_iter = horizons.iter().copied().peekable();
            for j in 1..=k_max as i64 {
                let z = process.sample_at(j, stream)?;
                tracker.step(model, &z);
                if h_iter.peek() == Some(&(j as u64)) {
                    h_iter.next();
                    out.push(tracker.log_norm().exp());
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let method = NormTracker::new(model, process, base_stream, 1, DEFAULT_PAIR_RADIUS).method();
    let mut roots = Vec::new();
    let mut root_ses = Vec::new();
    for (h, &k) in horizons.iter().enumerate() {
        let norms: Vec<f64> = per_replica.iter().map(|r| r[h]).collect();
        let m = stats::mean(&norms);
        let se = stats::std_error(&norms);
        let root = m.max(f64::MIN_POSITIVE).powf(1.0 / k as f64);
        // Delta method through m^(1/k).
        let root_se = if m > 0.0 { se * root / (k as f64 * m) } else { 0.0 };
        roots.push(root);
        root_ses.push(root_se);
    }
    // Final doubling block: horizons in (k_max/2, k_max].
    let block_lo = k_max / 2;
    let (mut proxy, mut proxy_se) = (f64::NEG_INFINITY, 0.0);
    for ((&k, &root), &se) in horizons.iter().zip(&roots).zip(&root_ses) {
        if k > block_lo && root > proxy {
            proxy = root;
            proxy_se = se;
        }
    }
    let verdict = verdict_below(
        ConditionKind::LongRunContraction,
        proxy,
        proxy_se,
        replicas,
        1.0,
        format!("max root over horizons in ({block_lo}, {k_max}]"),
    );
    Ok(LongRunCheck {
        horizons,
        roots,
        root_ses,
        proxy,
        proxy_se,
        verdict,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{self, AffineInterp, AffineParams};
    use crate::noise::{self, DrivingProcess, MatrixLaw, ScalarLaw};

    fn constant_scalar_affine(seed: u64, a: f64) -> (ModelSpec, DrivingProcess) {
        let model = models::make_affine(&AffineParams { dim: 1, interp: AffineInterp::Pair })
            .unwrap();
        let p = DrivingProcess::iid_matrix_pair(
            seed,
            MatrixLaw::Scalar(ScalarLaw::Constant { value: a }),
            vec![ScalarLaw::Constant { value: 0.0 }],
        )
        .unwrap();
        (model, p)
    }

    #[test]
    fn composite_bounds_for_constant_affine() {
        let (model, p) = constant_scalar_affine(101, 0.5);
        let c = composite_lipschitz(&model, &p, 8, 0, 200, 10.0).unwrap();
        let expected = 0.5f64.powi(8);
        assert!((c.exact.unwrap() - expected).abs() < 1e-12);
        assert!((c.upper.unwrap() - expected).abs() < 1e-12);
        assert!((c.lower - expected).abs() < 1e-9);
    }

    #[test]
    fn composite_bounds_for_lindley() {
        let model = models::make_lindley(models::LindleyParams::DirectZ);
        let p = DrivingProcess::iid_scalar(102, ScalarLaw::Normal { mean: -0.5, sd: 1.0 }).unwrap();
        let c = composite_lipschitz(&model, &p, 20, 0, 500, 10.0).unwrap();
        assert!(c.exact.is_none());
        assert_eq!(c.upper, Some(1.0));
        assert!(c.lower <= 1.0 + 1e-12);
    }

    #[test]
    fn ordering_lower_exact_upper() {
        let model = models::make_affine(&AffineParams { dim: 2, interp: AffineInterp::Pair })
            .unwrap();
        let p = DrivingProcess::iid_matrix_pair(
            103,
            MatrixLaw::IidEntries { dim: 2, law: ScalarLaw::Uniform { lo: -0.7, hi: 0.7 } },
            vec![ScalarLaw::Constant { value: 0.0 }; 2],
        )
        .unwrap();
        for n in [1u64, 3, 9] {
            let c = composite_lipschitz(&model, &p, n, 1, 500, 10.0).unwrap();
            let exact = c.exact.unwrap();
            assert!(c.lower <= exact + 1e-9, "lower {} vs exact {exact}", c.lower);
            assert!(exact <= c.upper.unwrap() + 1e-9);
        }
    }

    #[test]
    fn lyapunov_constant_half_is_log_half() {
        let (model, p) = constant_scalar_affine(104, 0.5);
        let est = estimate_lyapunov(&model, &p, &[4, 16], 4, 0).unwrap();
        assert_eq!(est.method, NormMethod::ExactMatrixNorm);
        assert!((est.point - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_honig_minus_two_thirds() {
        let model = models::make_multiplicative_scalar();
        let p = noise::make_honig(105);
        let est = estimate_lyapunov(&model, &p, &[1_000_000], 1, 0).unwrap();
        assert!((est.point + 2.0 / 3.0).abs() < 0.02, "E = {}", est.point);
        assert!(est.std_error.is_none());
    }

    #[test]
    fn lyapunov_matrix_product_matches_direct_oracle() {
        // Independent oracle: multiply the same matrices directly at full
        // horizon, no rescaling path shared with the implementation.
        let model = models::make_affine(&AffineParams { dim: 2, interp: AffineInterp::Pair })
            .unwrap();
        let p = DrivingProcess::iid_matrix_pair(
            106,
            MatrixLaw::IidEntries { dim: 2, law: ScalarLaw::Uniform { lo: -0.9, hi: 0.9 } },
            vec![ScalarLaw::Constant { value: 0.0 }; 2],
        )
        .unwrap();
        let n = 200u64;
        let replicas = 64u64;
        let est = estimate_lyapunov(&model, &p, &[n], replicas, 0).unwrap();
        let mut oracle_vals = Vec::new();
        for r in 0..replicas {
            let mut prod = SquareMatrix::identity(2);
            let mut log_scale = 0.0;
            for j in 1..=n as i64 {
                if let crate::noise::NoiseValue::MatrixPair { a, .. } = p.sample_at(j, r).unwrap()
                {
                    prod = a.matmul(&prod);
                    // Rescale by the max-abs entry: a different normalization
                    // than the implementation's Frobenius route.
                    let m = (0..2)
                        .flat_map(|i| (0..2).map(move |j| (i, j)))
                        .map(|(i, j)| prod.get(i, j).abs())
                        .fold(0.0f64, f64::max);
                    if m > 0.0 {
                        prod = prod.scale(1.0 / m);
                        log_scale += m.ln();
                    }
                }
            }
            oracle_vals.push((log_scale + prod.operator_norm(1e-12).ln()) / n as f64);
        }
        let oracle_mean = stats::mean(&oracle_vals);
        let se = stats::std_error(&oracle_vals);
        assert!(
            (est.point - oracle_mean).abs() <= 3.0 * se.max(1e-9),
            "estimate {} vs oracle {oracle_mean} ± {se}",
            est.point
        );
    }

    #[test]
    fn theorem_gen_on_honig() {
        let model = models::make_multiplicative_scalar();
        let p = noise::make_honig(107);
        let check = check_theorem_gen(&model, &p, 1, 40_000, 0).unwrap();
        assert_eq!(check.first.satisfaction, Satisfaction::Satisfied);
        assert_eq!(check.second.satisfaction, Satisfaction::Satisfied);
        assert!((check.second.estimate + 2.0 / 3.0).abs() < 0.05);
    }

    #[test]
    fn theorem_gen_isometry_violated() {
        let (model, p) = constant_scalar_affine(108, 1.0);
        let check = check_theorem_gen(&model, &p, 4, 10_000, 0).unwrap();
        // Deterministic E_n = 0: strictly-below test fails.
        assert_eq!(check.second.satisfaction, Satisfaction::Violated);
        assert_eq!(check.second.estimate, 0.0);
    }

    #[test]
    fn theorem_gen_shear_contracts_at_two_steps() {
        let model = models::make_affine(&AffineParams { dim: 2, interp: AffineInterp::Pair })
            .unwrap();
        let p = DrivingProcess::iid_matrix_pair(
            109,
            MatrixLaw::Constant(models::affine::contracting_shear()),
            vec![ScalarLaw::Constant { value: 0.0 }; 2],
        )
        .unwrap();
        let one = check_theorem_gen(&model, &p, 1, 2_000, 0).unwrap();
        assert_eq!(one.second.satisfaction, Satisfaction::Violated);
        let two = check_theorem_gen(&model, &p, 2, 2_000, 0).unwrap();
        assert_eq!(two.second.satisfaction, Satisfaction::Satisfied);
        assert!((two.second.estimate - 0.25f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn one_step_check_examples() {
        let model = models::make_multiplicative_scalar();
        let p = noise::make_honig(110);
        let check = check_one_step(&model, &p, 1_000_000, 0).unwrap();
        assert_eq!(check.verdict.satisfaction, Satisfaction::Satisfied);
        assert!((check.verdict.estimate + 2.0 / 3.0).abs() < 0.01);
        assert!(check.f_zero_tail_ok);

        let (model, p) = constant_scalar_affine(111, 1.0);
        let check = check_one_step(&model, &p, 1_000, 0).unwrap();
        assert_eq!(check.verdict.satisfaction, Satisfaction::Violated);
        assert_eq!(check.verdict.estimate, 0.0);

        let gwi_p = noise::make_branching_environment(
            112,
            noise::BranchingSpec {
                dim: 1,
                offspring: vec![vec![noise::CountLaw::Bernoulli { p: 0.4 }]],
                immigration: vec![noise::CountLaw::Poisson { mean: 1.0 }],
                rho: 0.5,
                environment: None,
            },
        )
        .unwrap();
        let gwi = models::make_gwi(gwi_p.branching_source().unwrap()).unwrap();
        assert!(matches!(
            check_one_step(&gwi, &gwi_p, 10, 0),
            Err(Error::MethodUnavailable(_))
        ));
    }

    #[test]
    fn langevin_one_step_constant_envelope() {
        let params = models::LangevinParams {
            gain: 0.1,
            dim: 1,
            h: models::HKind::Quadratic { base: 1.0, slope: 1.0, offset: 0.0 },
            envelope: models::Envelope::Constants { m: 1.0, big_m: 2.0 },
        };
        let model = models::make_langevin(&params).unwrap();
        let p = DrivingProcess::langevin_traffic(
            113,
            vec![ScalarLaw::Uniform { lo: 0.0, hi: 1.0 }],
            None,
            1,
        )
        .unwrap();
        let check = check_one_step(&model, &p, 2_000, 0).unwrap();
        assert_eq!(check.verdict.satisfaction, Satisfaction::Satisfied);
        assert!((check.verdict.estimate - 0.84f64.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn drift_fit_gwi_and_lindley() {
        let gwi_p = noise::make_branching_environment(
            114,
            noise::BranchingSpec {
                dim: 1,
                offspring: vec![vec![noise::CountLaw::Bernoulli { p: 0.4 }]],
                immigration: vec![noise::CountLaw::Poisson { mean: 1.0 }],
                rho: 0.5,
                environment: None,
            },
        )
        .unwrap();
        let gwi = models::make_gwi(gwi_p.branching_source().unwrap()).unwrap();
        let fit = check_drift(&gwi, &gwi_p, &[0.0, 1.0, 3.0, 10.0, 30.0, 100.0], 4_000, 0)
            .unwrap();
        assert!((fit.rho_hat - 0.4).abs() < 0.02, "rho {}", fit.rho_hat);
        assert!((fit.k_hat - 1.0).abs() < 0.2, "k {}", fit.k_hat);
        assert_eq!(fit.verdict.satisfaction, Satisfaction::Satisfied);
        assert_eq!(fit.declared, Some((0.5, 1.0)));

        let lindley = models::make_lindley(models::LindleyParams::DirectZ);
        let p = DrivingProcess::iid_scalar(115, ScalarLaw::Normal { mean: -0.5, sd: 1.0 })
            .unwrap();
        let fit =
            check_drift(&lindley, &p, &[0.0, 1.0, 3.0, 10.0, 30.0, 100.0], 4_000, 0).unwrap();
        assert!(fit.rho_hat > 0.9, "rho {}", fit.rho_hat);
        assert_eq!(fit.verdict.satisfaction, Satisfaction::Inconclusive);
    }

    #[test]
    fn drift_fit_zero_immigration_has_zero_intercept() {
        let p = noise::make_branching_environment(
            116,
            noise::BranchingSpec {
                dim: 1,
                offspring: vec![vec![noise::CountLaw::Bernoulli { p: 0.4 }]],
                immigration: vec![noise::CountLaw::Constant { value: 0 }],
                rho: 0.5,
                environment: None,
            },
        )
        .unwrap();
        let gwi = models::make_gwi(p.branching_source().unwrap()).unwrap();
        let fit = check_drift(&gwi, &p, &[0.0, 1.0, 3.0, 10.0, 30.0], 4_000, 0).unwrap();
        assert!(fit.k_hat.abs() < 0.1, "k {}", fit.k_hat);
    }

    #[test]
    fn longrun_examples() {
        let (model, p) = constant_scalar_affine(117, 0.5);
        let check = check_longrun(&model, &p, 16, 16, 0).unwrap();
        assert!((check.proxy - 0.5).abs() < 1e-12);
        assert_eq!(check.verdict.satisfaction, Satisfaction::Satisfied);

        // Two-point multiplicative counterexample: E log K < 0 but the root
        // sequence converges to E Z ≈ 2.5532 > 1.
        let model = models::make_multiplicative_scalar();
        let p = noise::make_honig(118);
        let check = check_longrun(&model, &p, 8, 400_000, 0).unwrap();
        assert_eq!(check.verdict.satisfaction, Satisfaction::Violated);
        let expected = 2.0 / 3.0 * (-2.0f64).exp() + 1.0 / 3.0 * 2.0f64.exp();
        assert!(
            (check.proxy - expected).abs() < 0.1,
            "proxy {} vs {expected}",
            check.proxy
        );

        // i.i.d. factors with E K < 1: the root converges to E K.
        let model2 = models::make_affine(&AffineParams { dim: 1, interp: AffineInterp::Pair })
            .unwrap();
        let p2 = DrivingProcess::iid_matrix_pair(
            119,
            MatrixLaw::Scalar(ScalarLaw::Uniform { lo: 0.2, hi: 0.8 }),
            vec![ScalarLaw::Constant { value: 0.0 }],
        )
        .unwrap();
        let check2 = check_longrun(&model2, &p2, 16, 4_000, 0).unwrap();
        assert_eq!(check2.verdict.satisfaction, Satisfaction::Satisfied);
        assert!((check2.proxy - 0.5).abs() < 0.05, "root {}", check2.proxy);
    }

    #[test]
    fn scale_equivariance_of_exponent() {
        // Scaling the linear part by c shifts E by exactly log c.
        for &c in &[0.5f64, 2.0, 3.0] {
            let (model, p) = constant_scalar_affine(120, 0.6);
            let base = estimate_lyapunov(&model, &p, &[32], 4, 0).unwrap().point;
            let (model_c, p_c) = constant_scalar_affine(120, 0.6 * c);
            let scaled = estimate_lyapunov(&model_c, &p_c, &[32], 4, 0).unwrap().point;
            assert!(
                (scaled - base - c.ln()).abs() < 1e-10,
                "c={c}: {scaled} vs {base}"
            );
        }
    }

    #[test]
    fn subadditivity_of_exact_averages() {
        let model = models::make_affine(&AffineParams { dim: 2, interp: AffineInterp::Pair })
            .unwrap();
        let p = DrivingProcess::iid_matrix_pair(
            121,
            MatrixLaw::IidEntries { dim: 2, law: ScalarLaw::Uniform { lo: -0.8, hi: 0.8 } },
            vec![ScalarLaw::Constant { value: 0.0 }; 2],
        )
        .unwrap();
        let replicas = 48u64;
        for (m, n) in [(2u64, 2u64), (2, 4), (4, 8), (8, 8)] {
            let horizons = if m == n { vec![m, m + n] } else { vec![m, n, m + n] };
            let est = estimate_lyapunov(&model, &p, &horizons, replicas, 0).unwrap();
            let find = |k: u64| {
                est.horizons
                    .iter()
                    .position(|&h| h == k)
                    .map(|i| est.averages[i])
                    .unwrap()
            };
            let lhs = (m + n) as f64 * find(m + n);
            let rhs = m as f64 * find(m) + n as f64 * find(n);
            // Pooled 3-sigma slack on both sides.
            let se = est.std_error.unwrap_or(0.0) * (m + n) as f64;
            assert!(lhs <= rhs + 3.0 * se * 2.0 + 1e-9, "({m},{n}): {lhs} vs {rhs}");
        }
    }
}
