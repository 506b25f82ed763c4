//! Statistical verdicts on top of the engine: law-of-large-numbers checks,
//! stationarity of the `V*`-initialized process, forward/backward
//! distributional equality, moment bounds, and the mean-divergence
//! demonstration for the two-point multiplicative counterexample.
//!
//! Ensembles run on dedicated stream blocks (stride `2³²`) so that no
//! internal replica ever shares noise with a user-facing trajectory
//! stream. Replica work fans out through rayon and is reduced in replica
//! order, so results are bit-identical regardless of thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{self, ModelSpec, State, VstarOptions};
use crate::error::{Error, Result};
use crate::lyapunov::{self, ConditionVerdict, Satisfaction};
use crate::models;
use crate::noise::DrivingProcess;
use crate::stats;

const STREAM_STRIDE: u64 = 1 << 32;
const SLLN_BLOCK: u64 = 1;
const STATIONARITY_BLOCK: u64 = 2;
const FORWARD_BLOCK: u64 = 3;
const BACKWARD_BLOCK: u64 = 4;
const MEAN_BLOCK: u64 = 5;
const COUPLING_BLOCK: u64 = 6;
const COALESCENCE_BLOCK: u64 = 7;
const MOMENT_BLOCK: u64 = 8;
const TRAJECTORY_BLOCK: u64 = 9;

fn block_stream(block: u64, replica: u64) -> u64 {
    block * STREAM_STRIDE + replica
}

/// A scalar estimate carrying its error bar and sample size.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricWithError {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Streaming time average `(1/n) Σ_{i=1}^{n} X_i` of a forward trajectory.
pub fn time_average(
    model: &ModelSpec,
    process: &DrivingProcess,
    v: &[f64],
    horizon: u64,
    stream: u64,
) -> Result<State> {
    let mut x: State = smallvec::SmallVec::from_slice(v);
    let mut acc = engine::zero_state(model.state_dim());
    for j in 1..=horizon as i64 {
        let z = process.sample_at(j, stream)?;
        x = model.apply(&x, &z);
        if !x.iter().all(|t| t.is_finite()) {
            return Err(Error::StateEscaped { step: j });
        }
        for (a, t) in acc.iter_mut().zip(x.iter()) {
            *a += t;
        }
    }
    Ok(acc.iter().map(|a| a / horizon as f64).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct SllnCheck {
    pub time_average: State,
    pub ensemble_v_star: State,
    /// `|time average − ensemble mean|` in the model norm.
    pub abs_error: f64,
    pub horizon: u64,
    pub ensemble_streams: u64,
    pub ensemble_se: f64,
}

/// Compares the time average of one trajectory against an ensemble mean of
/// `V*` drawn from independent streams.
pub fn slln_check(
    model: &ModelSpec,
    process: &DrivingProcess,
    v: &[f64],
    horizon: u64,
    stream: u64,
    ensemble: u64,
    vstar_options: &VstarOptions,
) -> Result<SllnCheck> {
    let avg = time_average(model, process, v, horizon, stream)?;
    let vstars: Vec<State> = (0..ensemble)
        .into_par_iter()
        .map(|r| -> Result<State> {
            Ok(
                engine::estimate_vstar(model, process, vstar_options, block_stream(SLLN_BLOCK, r))?
                    .v_star
                    .expect("converged ladder carries v_star"),
            )
        })
        .collect::<Result<_>>()?;
    let dim = model.state_dim();
    let mut mean = engine::zero_state(dim);
    for vs in &vstars {
        for (m, t) in mean.iter_mut().zip(vs.iter()) {
            *m += t;
        }
    }
    for m in mean.iter_mut() {
        *m /= ensemble as f64;
    }
    let norms: Vec<f64> = vstars.iter().map(|vs| model.norm(vs)).collect();
    Ok(SllnCheck {
        abs_error: model.distance(&avg, &mean),
        time_average: avg,
        ensemble_v_star: mean,
        horizon,
        ensemble_streams: ensemble,
        ensemble_se: stats::std_error(&norms),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartMode {
    /// Start each trajectory at that stream's estimated `V*`.
    VStar,
    /// Start at a fixed state (used to demonstrate transients).
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarityCheck {
    pub times: [u64; 3],
    /// Ensemble mean per checkpoint (coordinate-major).
    pub means: Vec<State>,
    pub std_errors: Vec<State>,
    pub satisfied: bool,
    pub streams: u64,
}

/// Starts trajectories at the estimated `V*` (fresh forward noise) and
/// compares ensemble marginal means at times `0, w/2, w`; stationarity
/// means the three agree within 3 pooled standard errors per coordinate.
pub fn stationarity_check(
    model: &ModelSpec,
    process: &DrivingProcess,
    streams: u64,
    window: u64,
    start: StartMode,
    vstar_options: &VstarOptions,
) -> Result<StationarityCheck> {
    if streams < 2 || window < 2 {
        return Err(Error::InvalidParameter(
            "need at least two streams and a window of at least two steps".into(),
        ));
    }
    let times = [0u64, window / 2, window];
    let dim = model.state_dim();
    let snapshots: Vec<[State; 3]> = (0..streams)
        .into_par_iter()
        .map(|r| -> Result<[State; 3]> {
            let stream = block_stream(STATIONARITY_BLOCK, r);
            let start_state: State = match start {
                StartMode::VStar => engine::estimate_vstar(model, process, vstar_options, stream)?
                    .v_star
                    .expect("converged ladder carries v_star"),
                StartMode::Fixed(v) => smallvec::smallvec![v; dim],
            };
            let mut x = start_state.clone();
            let mut mid = x.clone();
            for j in 1..=window as i64 {
                let z = process.sample_at(j, stream)?;
                x = model.apply(&x, &z);
                if j as u64 == times[1] {
                    mid = x.clone();
                }
            }
            Ok([start_state, mid, x])
        })
        .collect::<Result<_>>()?;
    let mut means = Vec::with_capacity(3);
    let mut ses = Vec::with_capacity(3);
    for t in 0..3 {
        let mut mean = engine::zero_state(dim);
        let mut se = engine::zero_state(dim);
        for c in 0..dim {
            let coord: Vec<f64> = snapshots.iter().map(|s| s[t][c]).collect();
            mean[c] = stats::mean(&coord);
            se[c] = stats::std_error(&coord);
        }
        means.push(mean);
        ses.push(se);
    }
    let mut satisfied = true;
    for a in 0..3 {
        for b in a + 1..3 {
            for c in 0..dim {
                let pooled =
                    (ses[a][c] * ses[a][c] + ses[b][c] * ses[b][c]).sqrt().max(f64::MIN_POSITIVE);
                if (means[a][c] - means[b][c]).abs() > 3.0 * pooled {
                    satisfied = false;
                }
            }
        }
    }
    Ok(StationarityCheck {
        times,
        means,
        std_errors: ses,
        satisfied,
        streams,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoSampleCheck {
    /// KS statistic per coordinate.
    pub statistics: Vec<f64>,
    /// Critical value at the 1% level, union-bounded over coordinates.
    pub critical: f64,
    pub satisfied: bool,
    pub horizon: u64,
    pub samples: u64,
}

/// Two-sample comparison of the forward and backward iterates at a fixed
/// horizon. Gated to i.i.d. or reversible noise; for general stationary
/// sources the equality has no reason to hold and the comparison refuses
/// to assert it.
pub fn forward_backward_compare(
    model: &ModelSpec,
    process: &DrivingProcess,
    v: &[f64],
    n: u64,
    samples: u64,
) -> Result<TwoSampleCheck> {
    if !process.is_reversible_in_law() {
        return Err(Error::GateViolated);
    }
    if samples < 10 {
        return Err(Error::InvalidParameter("need at least 10 samples".into()));
    }
    let dim = model.state_dim();
    let forward: Vec<State> = (0..samples)
        .into_par_iter()
        .map(|r| -> Result<State> {
            Ok(engine::forward_iterate(model, process, v, n, block_stream(FORWARD_BLOCK, r))?
                .last()
                .clone())
        })
        .collect::<Result<_>>()?;
    let backward: Vec<State> = (0..samples)
        .into_par_iter()
        .map(|r| engine::backward_iterate(model, process, v, n, block_stream(BACKWARD_BLOCK, r)))
        .collect::<Result<_>>()?;
    // Conservative union bound over coordinates.
    let critical = stats::ks_critical(0.01 / dim as f64, samples as usize, samples as usize);
    let mut statistics = Vec::with_capacity(dim);
    for c in 0..dim {
        let a: Vec<f64> = forward.iter().map(|s| s[c]).collect();
        let b: Vec<f64> = backward.iter().map(|s| s[c]).collect();
        statistics.push(stats::ks_two_sample(&a, &b));
    }
    let satisfied = statistics.iter().all(|&s| s < critical);
    Ok(TwoSampleCheck {
        statistics,
        critical,
        satisfied,
        horizon: n,
        samples,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct HonigOptions {
    pub mean_replicas: u64,
    pub coupling_replicas: u64,
    pub coupling_horizon: u64,
    pub coupling_threshold: f64,
    pub lyapunov_horizon: u64,
}

impl Default for HonigOptions {
    fn default() -> Self {
        HonigOptions {
            mean_replicas: 1_000_000,
            coupling_replicas: 1_000,
            coupling_horizon: 10_000,
            coupling_threshold: 1e-10,
            lyapunov_horizon: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioPoint {
    pub n: u64,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HonigDivergence {
    /// `E[X_{n+1}] / E[X_n]` estimates for n = 0..n_max-1.
    pub ratios: Vec<RatioPoint>,
    /// `(2/3)e⁻² + (1/3)e²`, the exact mean factor.
    pub expected_ratio: f64,
    /// Fraction of coupling replicas whose terminal distance fell below
    /// the threshold.
    pub coupling_success_rate: f64,
    pub coupling_replicas: u64,
    /// Single-trajectory `(1/n) log X_n`.
    pub trajectory_lyapunov: f64,
    pub mean_replicas: u64,
}

/// The counterexample centerpiece: trajectories couple (almost-sure
/// stability) while the running means diverge geometrically at rate
/// `E Z ≈ 2.5532`. Both measurements run on the same process in one call.
pub fn honig_divergence(
    seed: u64,
    v: f64,
    n_max: u64,
    options: &HonigOptions,
) -> Result<HonigDivergence> {
    if v < 0.0 {
        return Err(Error::InvalidParameter("start must be non-negative".into()));
    }
    if n_max > 10 {
        return Err(Error::InvalidParameter(
            "mean estimates are limited to n ≤ 10: the estimator variance grows like (E Z²)ⁿ"
                .into(),
        ));
    }
    let process = crate::noise::make_honig(seed);
    let model = models::make_multiplicative_scalar();
    let replicas = options.mean_replicas;
    // Per-replica products up to each n, batched for ratio error bars.
    // Parallelism is across whole batches and each batch sums its own
    // replicas in index order, so the floating-point reduction order is
    // fixed no matter how many workers run.
    const BATCHES: usize = 50;
    let batch_len = (replicas as usize / BATCHES).max(1);
    let sums: Vec<Vec<f64>> = (0..BATCHES)
        .into_par_iter()
        .map(|batch| {
            let lo = (batch * batch_len) as u64;
            let hi = if batch == BATCHES - 1 {
                replicas
            } else {
                ((batch + 1) * batch_len) as u64
            };
            let mut acc = vec![0.0f64; n_max as usize + 1];
            for r in lo..hi {
                let mut x = v;
                acc[0] += x;
                for n in 1..=n_max as i64 {
                    x *= process
                        .scalar_at(n, block_stream(MEAN_BLOCK, r))
                        .expect("honig noise has no floor");
                    acc[n as usize] += x;
                }
            }
            acc
        })
        .collect();
    let mut ratios = Vec::with_capacity(n_max as usize);
    for n in 0..n_max as usize {
        let total_next: f64 = sums.iter().map(|b| b[n + 1]).sum();
        let total_here: f64 = sums.iter().map(|b| b[n]).sum();
        let per_batch: Vec<f64> = sums
            .iter()
            .filter(|b| b[n] > 0.0)
            .map(|b| b[n + 1] / b[n])
            .collect();
        ratios.push(RatioPoint {
            n: n as u64,
            estimate: if total_here > 0.0 { total_next / total_here } else { f64::NAN },
            std_error: stats::std_error(&per_batch),
        });
    }

    let successes: u64 = (0..options.coupling_replicas)
        .into_par_iter()
        .map(|r| {
            let d = engine::coupling_distance(
                &model,
                &process,
                &[1.0],
                &[2.0],
                options.coupling_horizon,
                block_stream(COUPLING_BLOCK, r),
            )
            .expect("scalar multiplicative coupling cannot escape");
            u64::from(*d.last().unwrap() < options.coupling_threshold)
        })
        .sum();

    let mut log_x = v.max(f64::MIN_POSITIVE).ln();
    for j in 1..=options.lyapunov_horizon as i64 {
        log_x += process
            .scalar_at(j, block_stream(TRAJECTORY_BLOCK, 0))?
            .ln();
    }
    let expected_ratio = 2.0 / 3.0 * (-2.0f64).exp() + 1.0 / 3.0 * 2.0f64.exp();
    Ok(HonigDivergence {
        ratios,
        expected_ratio,
        coupling_success_rate: successes as f64 / options.coupling_replicas as f64,
        coupling_replicas: options.coupling_replicas,
        trajectory_lyapunov: (log_x - v.max(f64::MIN_POSITIVE).ln())
            / options.lyapunov_horizon as f64,
        mean_replicas: replicas,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentBoundCheck {
    pub estimate: MetricWithError,
    /// `K / (1 - ρ)` from the drift declaration.
    pub bound: f64,
    pub satisfied: bool,
}

/// Estimates `E |V*|_p` over replicas and compares it against the drift
/// bound `K/(1-ρ)`; satisfied when `estimate - 3·se ≤ bound`.
pub fn moment_bound_check(
    model: &ModelSpec,
    process: &DrivingProcess,
    replicas: u64,
    vstar_options: &VstarOptions,
) -> Result<MomentBoundCheck> {
    let drift = model
        .drift()
        .ok_or(Error::MethodUnavailable("model declares no drift metadata"))?;
    let norms: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let ladder =
                engine::estimate_vstar(model, process, vstar_options, block_stream(MOMENT_BLOCK, r))?;
            Ok(model.norm(&ladder.v_star.expect("converged ladder carries v_star")))
        })
        .collect::<Result<_>>()?;
    let value = stats::mean(&norms);
    let se = stats::std_error(&norms);
    let bound = drift.k / (1.0 - drift.rho);
    Ok(MomentBoundCheck {
        estimate: MetricWithError {
            value,
            std_error: se,
            samples: replicas,
        },
        bound,
        satisfied: value - 3.0 * se <= bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingSummary {
    /// Slope of `log distance` against the step index (per-step rate).
    pub decay_rate: f64,
    pub terminal_quantiles: Vec<(f64, f64)>,
    pub replicas: u64,
    pub horizon: u64,
    /// Fraction of replicas with terminal distance below the threshold.
    pub success_rate: f64,
    pub threshold: f64,
}

/// Coupling decay between two starts across replicas.
pub fn coupling_summary(
    model: &ModelSpec,
    process: &DrivingProcess,
    v: &[f64],
    v_other: &[f64],
    horizon: u64,
    replicas: u64,
    threshold: f64,
) -> Result<CouplingSummary> {
    let results: Vec<(f64, f64)> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let d = engine::coupling_distance(
                model,
                process,
                v,
                v_other,
                horizon,
                block_stream(COUPLING_BLOCK, r),
            )?;
            let terminal = *d.last().unwrap();
            // Per-replica decay rate from the first and last positive entries.
            let d0 = d[0].max(f64::MIN_POSITIVE);
            let rate = (terminal.max(f64::MIN_POSITIVE) / d0).ln() / horizon as f64;
            Ok((terminal, rate))
        })
        .collect::<Result<_>>()?;
    let mut terminals: Vec<f64> = results.iter().map(|(t, _)| *t).collect();
    let rates: Vec<f64> = results.iter().map(|(_, r)| *r).collect();
    let successes = terminals.iter().filter(|&&t| t < threshold).count();
    terminals.sort_by(f64::total_cmp);
    Ok(CouplingSummary {
        decay_rate: stats::mean(&rates),
        terminal_quantiles: [0.5, 0.9, 0.99]
            .iter()
            .map(|&q| (q, stats::quantile(&terminals, q)))
            .collect(),
        replicas,
        horizon,
        success_rate: successes as f64 / replicas as f64,
        threshold,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoalescenceSummary {
    pub tau_quantiles: Vec<(f64, f64)>,
    pub success_rate: f64,
    pub replicas: u64,
    pub max_n: u64,
}

/// Forward coupling times between two starts across replicas.
pub fn coalescence_summary(
    model: &ModelSpec,
    process: &DrivingProcess,
    v: &[f64],
    v_other: &[f64],
    max_n: u64,
    replicas: u64,
) -> Result<CoalescenceSummary> {
    let taus: Vec<Option<u64>> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<Option<u64>> {
            match engine::coalescence_time(
                model,
                process,
                v,
                v_other,
                max_n,
                block_stream(COALESCENCE_BLOCK, r),
            ) {
                Ok(tau) => Ok(Some(tau)),
                Err(Error::NotCoalesced { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut finite: Vec<f64> = taus.iter().flatten().map(|&t| t as f64).collect();
    finite.sort_by(f64::total_cmp);
    Ok(CoalescenceSummary {
        tau_quantiles: [0.5, 0.9, 0.99]
            .iter()
            .map(|&q| (q, stats::quantile(&finite, q)))
            .collect(),
        success_rate: finite.len() as f64 / replicas as f64,
        replicas,
        max_n,
    })
}

/// Everything the diagnostics know about one model/noise pairing.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub model: &'static str,
    pub conditions: Vec<ConditionVerdict>,
    pub coupling: Option<CouplingSummary>,
    pub coalescence: Option<CoalescenceSummary>,
    pub slln_error: Option<f64>,
    pub v_star_moment: Option<MomentBoundCheck>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct ReportBudgets {
    pub samples: u64,
    pub horizon: u64,
    pub replicas: u64,
    pub coupling_horizon: u64,
    pub coupling_threshold: f64,
}

impl Default for ReportBudgets {
    fn default() -> Self {
        ReportBudgets {
            samples: 20_000,
            horizon: 200_000,
            replicas: 500,
            coupling_horizon: 2_000,
            coupling_threshold: 1e-8,
        }
    }
}

/// Runs the full battery on one model/noise pairing. Individual pieces
/// that do not apply (no drift metadata, no exact factor, ladders that do
/// not converge) are skipped with a note rather than failing the report.
pub fn stability_report(
    model: &ModelSpec,
    process: &DrivingProcess,
    budgets: &ReportBudgets,
) -> Result<StabilityReport> {
    let mut conditions = Vec::new();
    let mut notes = Vec::new();
    let gen = lyapunov::check_theorem_gen(model, process, 8, budgets.samples, 0)?;
    conditions.push(gen.first);
    conditions.push(gen.second);
    match lyapunov::check_one_step(model, process, budgets.samples, 0) {
        Ok(one) => conditions.push(one.verdict),
        Err(Error::MethodUnavailable(why)) => notes.push(format!("one-step check skipped: {why}")),
        Err(e) => return Err(e),
    }
    let drift_fit = lyapunov::check_drift(
        model,
        process,
        &[0.0, 1.0, 3.0, 10.0, 30.0, 100.0],
        (budgets.samples / 10).max(500),
        0,
    )?;
    conditions.push(drift_fit.verdict);

    let dim = model.state_dim();
    let ones: State = smallvec::smallvec![1.0; dim];
    let zeros: State = engine::zero_state(dim);
    let coupling = coupling_summary(
        model,
        process,
        &ones,
        &zeros,
        budgets.coupling_horizon,
        budgets.replicas,
        budgets.coupling_threshold,
    )?;
    let coalescence = if model.state_space() == engine::StateSpace::NonNegativeInteger {
        Some(coalescence_summary(
            model,
            process,
            &ones,
            &zeros,
            budgets.coupling_horizon * 10,
            budgets.replicas,
        )?)
    } else {
        None
    };

    let stable_looking = conditions.iter().any(|c| {
        c.satisfaction == Satisfaction::Satisfied
            && matches!(
                c.condition,
                lyapunov::ConditionKind::ThmGenSecond
                    | lyapunov::ConditionKind::OneStepContraction
                    | lyapunov::ConditionKind::DriftCondition
            )
    });
    let mut slln_error = None;
    let mut v_star_moment = None;
    if stable_looking {
        match slln_check(
            model,
            process,
            &zeros,
            budgets.horizon,
            0,
            budgets.replicas,
            &VstarOptions::default(),
        ) {
            Ok(check) => slln_error = Some(check.abs_error),
            Err(Error::NotConverged { .. }) => {
                notes.push("slln skipped: ladder did not converge".into())
            }
            Err(e) => return Err(e),
        }
        if model.drift().is_some() {
            match moment_bound_check(model, process, budgets.replicas, &VstarOptions::default()) {
                Ok(check) => v_star_moment = Some(check),
                Err(Error::NotConverged { .. }) => {
                    notes.push("moment bound skipped: ladder did not converge".into())
                }
                Err(e) => return Err(e),
            }
        }
    } else {
        notes.push("no stability condition satisfied; ladder-based checks skipped".into());
    }

    Ok(StabilityReport {
        model: model.name(),
        conditions,
        coupling: Some(coupling),
        coalescence,
        slln_error,
        v_star_moment,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{AffineInterp, AffineParams, LindleyParams};
    use crate::noise::{DrivingProcess, MatrixLaw, ScalarLaw};

    fn fixed_point_affine(seed: u64) -> (ModelSpec, DrivingProcess) {
        let model = models::make_affine(&AffineParams { dim: 1, interp: AffineInterp::Pair })
            .unwrap();
        let p = DrivingProcess::iid_matrix_pair(
            seed,
            MatrixLaw::Scalar(ScalarLaw::Constant { value: 0.5 }),
            vec![ScalarLaw::Constant { value: 1.0 }],
        )
        .unwrap();
        (model, p)
    }

    #[test]
    fn slln_fixed_point_exact() {
        let (model, p) = fixed_point_affine(201);
        let check =
            slln_check(&model, &p, &[7.0], 2_000, 0, 50, &VstarOptions::default()).unwrap();
        assert!((check.ensemble_v_star[0] - 2.0).abs() < 1e-8);
        assert!((check.time_average[0] - 2.0).abs() < 0.01);
        assert!(check.abs_error < 0.01);
    }

    #[test]
    fn slln_gwi_matches_mean_recursion() {
        let p = crate::noise::make_branching_environment(
            202,
            crate::noise::BranchingSpec {
                dim: 1,
                offspring: vec![vec![crate::noise::CountLaw::Bernoulli { p: 0.4 }]],
                immigration: vec![crate::noise::CountLaw::Poisson { mean: 1.0 }],
                rho: 0.5,
                environment: None,
            },
        )
        .unwrap();
        let model = models::make_gwi(p.branching_source().unwrap()).unwrap();
        let check =
            slln_check(&model, &p, &[0.0], 300_000, 0, 2_000, &VstarOptions::default()).unwrap();
        let expected = 1.0 / 0.6;
        assert!(
            (check.time_average[0] - expected).abs() / expected < 0.02,
            "time average {}",
            check.time_average[0]
        );
        assert!(
            (check.ensemble_v_star[0] - expected).abs() / expected < 0.02,
            "ensemble {}",
            check.ensemble_v_star[0]
        );
    }

    #[test]
    fn stationarity_holds_from_vstar_and_fails_from_zero() {
        let p = DrivingProcess::queue_traffic(
            203,
            ScalarLaw::Exponential { mean: 0.5 },
            ScalarLaw::Exponential { mean: 1.0 },
        )
        .unwrap();
        let model = models::make_lindley(LindleyParams::Queue);
        let opts = VstarOptions {
            max_depth: 1 << 14,
            ..VstarOptions::default()
        };
        let good =
            stationarity_check(&model, &p, 1_500, 200, StartMode::VStar, &opts).unwrap();
        assert!(good.satisfied, "means {:?} ± {:?}", good.means, good.std_errors);
        for mean in &good.means {
            assert!((mean[0] - 0.5).abs() < 0.08, "marginal mean {}", mean[0]);
        }
        let bad =
            stationarity_check(&model, &p, 1_500, 200, StartMode::Fixed(0.0), &opts).unwrap();
        assert!(!bad.satisfied, "transient must be detected from a cold start");
        assert_eq!(bad.means[0][0], 0.0);
    }

    #[test]
    fn forward_backward_gate_and_degenerate_cases() {
        let (model, p) = fixed_point_affine(204);
        // n = 0: both samples are the start point; statistic 0.
        let check = forward_backward_compare(&model, &p, &[1.5], 0, 100).unwrap();
        assert_eq!(check.statistics[0], 0.0);
        assert!(check.satisfied);
        // Deterministic noise at any horizon: exactly equal samples.
        let check = forward_backward_compare(&model, &p, &[1.5], 20, 100).unwrap();
        assert_eq!(check.statistics[0], 0.0);
        // Dependent noise refuses the comparison.
        let ma = DrivingProcess::moving_average(
            205,
            vec![1.0, 0.5],
            ScalarLaw::Normal { mean: 0.0, sd: 1.0 },
        )
        .unwrap();
        let mult = models::make_multiplicative_scalar();
        assert!(matches!(
            forward_backward_compare(&mult, &ma, &[1.0], 10, 100),
            Err(Error::GateViolated)
        ));
    }

    #[test]
    fn forward_backward_affine_below_critical() {
        let model = models::make_affine(&AffineParams { dim: 1, interp: AffineInterp::Pair })
            .unwrap();
        let p = DrivingProcess::iid_matrix_pair(
            206,
            MatrixLaw::Scalar(ScalarLaw::Uniform { lo: 0.1, hi: 0.7 }),
            vec![ScalarLaw::Normal { mean: 0.0, sd: 1.0 }],
        )
        .unwrap();
        let check = forward_backward_compare(&model, &p, &[0.0], 50, 4_000).unwrap();
        assert!(
            check.satisfied,
            "stat {:?} vs critical {}",
            check.statistics, check.critical
        );
    }

    #[test]
    fn honig_divergence_small_budget() {
        let options = HonigOptions {
            mean_replicas: 150_000,
            coupling_replicas: 200,
            coupling_horizon: 10_000,
            coupling_threshold: 1e-10,
            lyapunov_horizon: 200_000,
        };
        let report = honig_divergence(207, 1.0, 5, &options).unwrap();
        for point in &report.ratios[..4] {
            assert!(
                (point.estimate - report.expected_ratio).abs() / report.expected_ratio < 0.10,
                "ratio at n={} is {} ± {}",
                point.n,
                point.estimate,
                point.std_error
            );
        }
        assert!(report.coupling_success_rate >= 0.99);
        assert!((report.trajectory_lyapunov + 2.0 / 3.0).abs() < 0.02);
        // Degenerate start: everything stays at zero.
        let zero = honig_divergence(207, 0.0, 3, &options).unwrap();
        assert!(zero.ratios.iter().all(|r| r.estimate.is_nan()));
        assert!(honig_divergence(1, 1.0, 11, &options).is_err());
    }

    #[test]
    fn moment_bound_examples() {
        let mk = |imm: f64, seed: u64| {
            crate::noise::make_branching_environment(
                seed,
                crate::noise::BranchingSpec {
                    dim: 1,
                    offspring: vec![vec![crate::noise::CountLaw::Bernoulli { p: 0.4 }]],
                    immigration: vec![crate::noise::CountLaw::Poisson { mean: imm }],
                    rho: 0.4,
                    environment: None,
                },
            )
            .unwrap()
        };
        // Bernoulli(0.4)/Poisson(1): bound 1/0.6, estimate right at it.
        let p = mk(1.0, 208);
        let model = models::make_gwi(p.branching_source().unwrap()).unwrap();
        let check = moment_bound_check(&model, &p, 3_000, &VstarOptions::default()).unwrap();
        assert!(check.satisfied);
        assert!((check.bound - 1.0 / 0.6).abs() < 1e-12);
        assert!((check.estimate.value - check.bound).abs() < 0.1);
        // Zero immigration: 0 ≤ 0.
        let p0 = mk(0.0, 209);
        let model0 = models::make_gwi(p0.branching_source().unwrap()).unwrap();
        let check0 = moment_bound_check(&model0, &p0, 200, &VstarOptions::default()).unwrap();
        assert!(check0.satisfied);
        assert_eq!(check0.estimate.value, 0.0);
        assert_eq!(check0.bound, 0.0);
        // Poisson(2): mean 2/0.6.
        let p2 = mk(2.0, 210);
        let model2 = models::make_gwi(p2.branching_source().unwrap()).unwrap();
        let check2 = moment_bound_check(&model2, &p2, 3_000, &VstarOptions::default()).unwrap();
        assert!(check2.satisfied);
        assert!((check2.estimate.value - 2.0 / 0.6).abs() < 0.15);
    }

    #[test]
    fn stability_report_runs_on_gwi() {
        let p = crate::noise::make_branching_environment(
            211,
            crate::noise::BranchingSpec {
                dim: 1,
                offspring: vec![vec![crate::noise::CountLaw::Bernoulli { p: 0.4 }]],
                immigration: vec![crate::noise::CountLaw::Poisson { mean: 1.0 }],
                rho: 0.5,
                environment: None,
            },
        )
        .unwrap();
        let model = models::make_gwi(p.branching_source().unwrap()).unwrap();
        let budgets = ReportBudgets {
            samples: 4_000,
            horizon: 50_000,
            replicas: 300,
            coupling_horizon: 1_000,
            coupling_threshold: 0.5,
        };
        let report = stability_report(&model, &p, &budgets).unwrap();
        assert_eq!(report.model, "gwi");
        assert!(report
            .conditions
            .iter()
            .any(|c| c.condition == lyapunov::ConditionKind::DriftCondition
                && c.satisfaction == Satisfaction::Satisfied));
        assert!(report.coalescence.is_some());
        assert!(report.v_star_moment.as_ref().unwrap().satisfied);
        assert!(report.slln_error.unwrap() < 0.2);
    }

    #[test]
    fn report_is_reproducible_bit_for_bit() {
        let (model, p) = fixed_point_affine(212);
        let budgets = ReportBudgets {
            samples: 2_000,
            horizon: 10_000,
            replicas: 100,
            coupling_horizon: 500,
            coupling_threshold: 1e-6,
        };
        let a = stability_report(&model, &p, &budgets).unwrap();
        let b = stability_report(&model, &p, &budgets).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
