//! Forward, backward and negative iteration of a random map, the
//! stationary initialization `V*`, and coupling measurements.
//!
//! The negative iteration starts the recursion at a negative time `k` from
//! the zero state and evaluates at time 0. Deepening `k` reuses exactly the
//! noise the shallower runs consumed, which the keyed noise sources
//! guarantee by construction; `estimate_vstar` turns the resulting ladder
//! into a point estimate of the stationary initialization.

use std::sync::Arc;

use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::noise::{DrivingProcess, NoiseValue, TimeIndex};

/// A state vector; inline up to dimension four, heap beyond.
pub type State = SmallVec<[f64; 4]>;

pub fn zero_state(dim: usize) -> State {
    smallvec::smallvec![0.0; dim]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpace {
    Real,
    NonNegativeReal,
    NonNegativeInteger,
}

/// Foster–Lyapunov drift metadata: `E[|F(x,Z)|_p | past] ≤ rho·|x|_p + k`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DriftSpec {
    pub p: f64,
    pub rho: f64,
    pub k: f64,
}

type ApplyFn = dyn Fn(&[f64], &NoiseValue) -> State + Send + Sync;
type BatchFn = dyn Fn(&mut [f64], &NoiseValue) + Send + Sync;
type FactorFn = dyn Fn(&NoiseValue) -> f64 + Send + Sync;
type LinearFn = dyn Fn(&NoiseValue) -> SquareMatrix + Send + Sync;

/// A random map `F(x, z)` with the metadata the verification machinery
/// needs: an exact per-step Lipschitz factor when one exists, the linear
/// part for affine-in-state maps (exact composite norms), monotonicity and
/// drift declarations.
#[derive(Clone)]
pub struct ModelSpec {
    name: &'static str,
    state_dim: usize,
    state_space: StateSpace,
    monotone: bool,
    drift: Option<DriftSpec>,
    apply_fn: Arc<ApplyFn>,
    batch_fn: Option<Arc<BatchFn>>,
    lipschitz_fn: Option<Arc<FactorFn>>,
    linear_fn: Option<Arc<LinearFn>>,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("state_space", &self.state_space)
            .field("monotone", &self.monotone)
            .field("drift", &self.drift)
            .finish()
    }
}

pub struct ModelBuilder {
    inner: ModelSpec,
}

impl ModelSpec {
    pub fn builder(
        name: &'static str,
        state_dim: usize,
        state_space: StateSpace,
        apply: impl Fn(&[f64], &NoiseValue) -> State + Send + Sync + 'static,
    ) -> ModelBuilder {
        ModelBuilder {
            inner: ModelSpec {
                name,
                state_dim,
                state_space,
                monotone: false,
                drift: None,
                apply_fn: Arc::new(apply),
                batch_fn: None,
                lipschitz_fn: None,
                linear_fn: None,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn state_space(&self) -> StateSpace {
        self.state_space
    }

    pub fn monotone(&self) -> bool {
        self.monotone
    }

    pub fn drift(&self) -> Option<DriftSpec> {
        self.drift
    }

    #[inline]
    pub fn apply(&self, x: &[f64], z: &NoiseValue) -> State {
        (self.apply_fn)(x, z)
    }

    /// Applies the map to many scalar states in place, when the model
    /// carries a batched form of its own `apply`. Batched and one-at-a-time
    /// application perform identical floating-point operations per state.
    pub fn apply_scalar_batch(&self, states: &mut [f64], z: &NoiseValue) -> bool {
        match &self.batch_fn {
            Some(f) => {
                f(states, z);
                true
            }
            None => false,
        }
    }

    pub fn has_scalar_batch(&self) -> bool {
        self.batch_fn.is_some()
    }

    /// Exact per-step Lipschitz factor `K_z`, when declared.
    pub fn lipschitz_factor(&self, z: &NoiseValue) -> Option<f64> {
        self.lipschitz_fn.as_ref().map(|f| f(z))
    }

    pub fn has_lipschitz_factor(&self) -> bool {
        self.lipschitz_fn.is_some()
    }

    /// Linear part of an affine-in-state map, when declared.
    pub fn linear_part(&self, z: &NoiseValue) -> Option<SquareMatrix> {
        self.linear_fn.as_ref().map(|f| f(z))
    }

    pub fn has_linear_part(&self) -> bool {
        self.linear_fn.is_some()
    }

    /// The norm attached to this model: `l_p` when drift metadata names a
    /// `p`, the Euclidean norm otherwise.
    pub fn norm(&self, x: &[f64]) -> f64 {
        match self.drift {
            Some(DriftSpec { p, .. }) if p != 2.0 => lp_norm(x, p),
            _ => lp_norm(x, 2.0),
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let diff: State = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.norm(&diff)
    }
}

pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if p.is_infinite() {
        x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else {
        // Scale by the largest magnitude: raw powers of entries near
        // 1e-160 underflow even though the norm itself is representable.
        let m = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        if p == 2.0 {
            m * x
                .iter()
                .map(|v| {
                    let t = v / m;
                    t * t
                })
                .sum::<f64>()
                .sqrt()
        } else {
            m * x
                .iter()
                .map(|v| (v.abs() / m).powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        }
    }
}

impl ModelBuilder {
    pub fn monotone(mut self, yes: bool) -> Self {
        self.inner.monotone = yes;
        self
    }

    pub fn drift(mut self, spec: DriftSpec) -> Self {
        self.inner.drift = Some(spec);
        self
    }

    /// Batched elementwise form of `apply` for one-dimensional models;
    /// must perform bit-identical operations per state.
    pub fn scalar_batch(mut self, f: impl Fn(&mut [f64], &NoiseValue) + Send + Sync + 'static) -> Self {
        debug_assert_eq!(self.inner.state_dim, 1, "batched apply is for scalar models");
        self.inner.batch_fn = Some(Arc::new(f));
        self
    }

    pub fn lipschitz(mut self, f: impl Fn(&NoiseValue) -> f64 + Send + Sync + 'static) -> Self {
        self.inner.lipschitz_fn = Some(Arc::new(f));
        self
    }

    pub fn linear_part(
        mut self,
        f: impl Fn(&NoiseValue) -> SquareMatrix + Send + Sync + 'static,
    ) -> Self {
        self.inner.linear_fn = Some(Arc::new(f));
        self
    }

    pub fn build(self) -> ModelSpec {
        self.inner
    }
}

/// A forward trajectory `X_start, X_{start+1}, …`.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub start_index: TimeIndex,
    pub values: Vec<State>,
}

impl Trajectory {
    pub fn last(&self) -> &State {
        self.values.last().expect("trajectory never empty")
    }
}

/// The negative-iteration ladder: the value at time 0 of runs started from
/// the zero state at depths `-n`, over a doubling schedule.
#[derive(Debug, Clone, Serialize)]
pub struct NegativeLadder {
    pub depths: Vec<u64>,
    pub values_at_zero: Vec<State>,
    /// Distance between consecutive scheduled values, in the model norm.
    pub increments: Vec<f64>,
    pub converged: bool,
    pub v_star: Option<State>,
}

#[derive(Debug, Clone, Copy)]
pub struct VstarOptions {
    /// Block-increment tolerance for contractive (real-state) models.
    pub tolerance: f64,
    pub max_depth: u64,
    /// Norm ceiling after which a monotone ladder is declared divergent.
    pub divergence_ceiling: f64,
    /// Minimum depth before a monotone ladder may settle. Monotone ladders
    /// grow in rare records separated by flat stretches, so a quiet block
    /// near the surface proves nothing; models with drift metadata replace
    /// this with the depth at which the tail bound `K·ρ^{n+1}/(1-ρ)` drops
    /// below the tolerance.
    pub monotone_min_depth: u64,
}

impl Default for VstarOptions {
    fn default() -> Self {
        VstarOptions {
            tolerance: 1e-9,
            max_depth: 1 << 20,
            divergence_ceiling: 1e12,
            monotone_min_depth: 64,
        }
    }
}

fn min_settle_depth(model: &ModelSpec, options: &VstarOptions) -> u64 {
    if !model.monotone() {
        return 1;
    }
    match model.drift() {
        Some(DriftSpec { rho, k, .. }) if rho > 0.0 && rho < 1.0 && k > 0.0 => {
            let needed = ((options.tolerance * (1.0 - rho) / k).ln() / rho.ln()).ceil();
            (needed.max(1.0) as u64).min(options.max_depth)
        }
        // No immigration or a zero slope: the ladder settles immediately.
        Some(_) => 1,
        None => options.monotone_min_depth.min(options.max_depth),
    }
}

fn ensure_finite(x: &State, step: TimeIndex) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::StateEscaped { step })
    }
}

/// Forward iteration: `X_0 = v`, `X_{j+1} = F(X_j, Z_{j+1})`, driven by
/// `Z_1, …, Z_n` of the given stream.
pub fn forward_iterate(
    model: &ModelSpec,
    process: &DrivingProcess,
    v: &[f64],
    n: u64,
    stream: u64,
) -> Result<Trajectory> {
    let mut values = Vec::with_capacity(n as usize + 1);
    let mut x: State = SmallVec::from_slice(v);
    ensure_finite(&x, 0)?;
    values.push(x.clone());
    for j in 1..=n as i64 {
        let z = process.sample_at(j, stream)?;
        x = model.apply(&x, &z);
        ensure_finite(&x, j)?;
        values.push(x.clone());
    }
    Ok(Trajectory {
        start_index: 0,
        values,
    })
}

/// Backward iteration: the same noise window applied in reverse order,
/// `X̃_n = F(·, Z_1) ∘ … ∘ F(·, Z_n) (v)`. Equal in law to the forward
/// iterate for i.i.d. noise; the diagnostics test exactly that.
pub fn backward_iterate(
    model: &ModelSpec,
    process: &DrivingProcess,
    v: &[f64],
    n: u64,
    stream: u64,
) -> Result<State> {
    let mut x: State = SmallVec::from_slice(v);
    ensure_finite(&x, 0)?;
    for j in (1..=n as i64).rev() {
        let z = process.sample_at(j, stream)?;
        x = model.apply(&x, &z);
        ensure_finite(&x, j)?;
    }
    Ok(x)
}

/// Evolves a state planted at time `k` through the window `(k, n]`.
pub(crate) fn iterate_window(
    model: &ModelSpec,
    process: &DrivingProcess,
    start: &[f64],
    k: TimeIndex,
    n: TimeIndex,
    stream: u64,
) -> Result<State> {
    let mut x: State = SmallVec::from_slice(start);
    ensure_finite(&x, k)?;
    for j in k + 1..=n {
        let z = process.sample_at(j, stream)?;
        x = model.apply(&x, &z);
        ensure_finite(&x, j)?;
    }
    Ok(x)
}

/// Negative iteration: `X_k = 0`, evaluated at time `n ≥ k`.
pub fn negative_iterate(
    model: &ModelSpec,
    process: &DrivingProcess,
    k: TimeIndex,
    n: TimeIndex,
    stream: u64,
) -> Result<State> {
    if k > 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "negative iteration needs k ≤ 0 and k ≤ n, got k={k}, n={n}"
        )));
    }
    iterate_window(model, process, &zero_state(model.state_dim()), k, n, stream)
}

/// `X^{(-n)}_0(0)` for every depth `n = 1..=max_depth`, sharing one
/// prefetched noise window. Quadratic in the depth.
///
/// Scalar models with a batched `apply` run the sweep time-major: at step
/// `j` every ladder already started receives the same `Z_j`, one dispatch
/// per step instead of one per ladder, with identical arithmetic per
/// state. Other models fall back to a per-depth recomputation.
pub fn negative_ladder_dense(
    model: &ModelSpec,
    process: &DrivingProcess,
    max_depth: u64,
    stream: u64,
) -> Result<Vec<State>> {
    let n = max_depth as i64;
    // window[j] is the noise at lattice index -n+1+j, i.e. Z_{-n+1}..Z_0.
    let mut window = Vec::with_capacity(max_depth as usize);
    for i in (-n + 1)..=0 {
        window.push(process.sample_at(i, stream)?);
    }
    if model.state_dim() == 1 && model.has_scalar_batch() {
        // states[i] is the ladder of depth i+1; ladder n starts at time -n
        // and first updates at step j = -n+1, i.e. once -j < n.
        let mut states = vec![0.0f64; max_depth as usize];
        for (offset, z) in window.iter().enumerate() {
            let j = -n + 1 + offset as i64;
            let first_active = (-j) as usize;
            model.apply_scalar_batch(&mut states[first_active..], z);
        }
        if let Some(bad) = states.iter().position(|v| !v.is_finite()) {
            return Err(Error::StateEscaped { step: -(bad as i64) });
        }
        return Ok(states.into_iter().map(|v| smallvec::smallvec![v]).collect());
    }
    let mut out = Vec::with_capacity(max_depth as usize);
    for depth in 1..=max_depth as usize {
        let mut x = zero_state(model.state_dim());
        for z in &window[window.len() - depth..] {
            x = model.apply(&x, z);
        }
        ensure_finite(&x, 0)?;
        out.push(x);
    }
    Ok(out)
}

/// Estimates the stationary initialization by deepening the negative
/// iteration over a doubling schedule.
///
/// Convergence is declared when the increment over the last doubling block
/// falls below the tolerance (contractive models) or when the scheduled
/// values agree exactly over a full block (integer-state monotone models,
/// where block-end equality plus monotonicity pins the whole block).
pub fn estimate_vstar(
    model: &ModelSpec,
    process: &DrivingProcess,
    options: &VstarOptions,
    stream: u64,
) -> Result<NegativeLadder> {
    let integer_equality =
        model.state_space() == StateSpace::NonNegativeInteger && model.monotone();
    let min_settle = min_settle_depth(model, options);
    let mut ladder = NegativeLadder {
        depths: Vec::new(),
        values_at_zero: Vec::new(),
        increments: Vec::new(),
        converged: false,
        v_star: None,
    };
    // Noise window Z_{-depth+1}..Z_0, stored reversed (window_rev[m] is the
    // value at index -m) and grown lazily as the schedule deepens.
    let mut window_rev: Vec<NoiseValue> = Vec::new();
    let mut floor_hit = false;
    let mut depth: u64 = 1;
    loop {
        let depth_i = depth as i64;
        while window_rev.len() < depth as usize {
            let idx = -(window_rev.len() as i64);
            match process.sample_at(idx, stream) {
                Ok(z) => window_rev.push(z),
                Err(Error::IndexBelowFloor { .. }) => {
                    floor_hit = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let usable_depth = (window_rev.len() as u64).min(depth);
        if usable_depth == 0 {
            break;
        }
        let mut x = zero_state(model.state_dim());
        for m in (0..usable_depth as usize).rev() {
            x = model.apply(&x, &window_rev[m]);
        }
        ensure_finite(&x, -depth_i)?;
        if model.monotone() && model.norm(&x) > options.divergence_ceiling {
            return Err(Error::MonotoneDivergence {
                depth: usable_depth,
                ceiling: options.divergence_ceiling,
            });
        }
        if let Some(prev) = ladder.values_at_zero.last() {
            let inc = model.distance(&x, prev);
            ladder.increments.push(inc);
            let settled = usable_depth >= min_settle
                && if integer_equality {
                    x == *prev
                } else {
                    inc < options.tolerance
                };
            if settled {
                ladder.depths.push(usable_depth);
                ladder.values_at_zero.push(x.clone());
                ladder.converged = true;
                ladder.v_star = Some(x);
                return Ok(ladder);
            }
        }
        ladder.depths.push(usable_depth);
        ladder.values_at_zero.push(x);
        if floor_hit || depth >= options.max_depth {
            break;
        }
        depth = (depth * 2).min(options.max_depth);
    }
    Err(Error::NotConverged {
        max_depth: options.max_depth,
        ladder: Box::new(ladder),
    })
}

/// Distances `|X_i(v) - X_i(v')|` for `i = 0..=n`, both trajectories
/// consuming identical noise.
pub fn coupling_distance(
    model: &ModelSpec,
    process: &DrivingProcess,
    v: &[f64],
    v_other: &[f64],
    n: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    let mut x: State = SmallVec::from_slice(v);
    let mut y: State = SmallVec::from_slice(v_other);
    let mut distances = Vec::with_capacity(n as usize + 1);
    distances.push(model.distance(&x, &y));
    for j in 1..=n as i64 {
        let z = process.sample_at(j, stream)?;
        x = model.apply(&x, &z);
        y = model.apply(&y, &z);
        ensure_finite(&x, j)?;
        ensure_finite(&y, j)?;
        distances.push(model.distance(&x, &y));
    }
    Ok(distances)
}

/// Number of trailing steps of exact equality required before a
/// coalescence time is believed.
pub const COALESCENCE_VERIFY_WINDOW: u64 = 100;

/// First index after which the two trajectories agree exactly and keep
/// agreeing over the verification window.
pub fn coalescence_time(
    model: &ModelSpec,
    process: &DrivingProcess,
    v: &[f64],
    v_other: &[f64],
    max_n: u64,
    stream: u64,
) -> Result<u64> {
    let mut x: State = SmallVec::from_slice(v);
    let mut y: State = SmallVec::from_slice(v_other);
    let mut candidate: Option<u64> = None;
    if x == y {
        candidate = Some(0);
    }
    let mut j: u64 = 0;
    while j < max_n + COALESCENCE_VERIFY_WINDOW {
        j += 1;
        let z = process.sample_at(j as i64, stream)?;
        x = model.apply(&x, &z);
        y = model.apply(&y, &z);
        ensure_finite(&x, j as i64)?;
        match (x == y, candidate) {
            (true, None) => candidate = Some(j),
            (false, Some(_)) => candidate = None,
            _ => {}
        }
        if let Some(tau) = candidate {
            if j - tau >= COALESCENCE_VERIFY_WINDOW {
                return Ok(tau);
            }
        }
        if candidate.is_none() && j >= max_n {
            break;
        }
    }
    match candidate {
        Some(tau) if tau <= max_n => Ok(tau),
        _ => Err(Error::NotCoalesced { max_n }),
    }
}
