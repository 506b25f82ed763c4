//! The experiment configuration: a TOML document with four blocks
//! (`experiment`, `noise`, `model`, `budgets`), a list of `[[checks]]`,
//! and an optional `output` block. The full schema is documented in the
//! book chapter on experiments; unknown fields are rejected with the
//! parser's line diagnostics.

use serde::{Deserialize, Serialize};

use irfs::linalg::SquareMatrix;
use irfs::models::{
    AffineInterp, AffineParams, Envelope, HKind, LangevinParams, LindleyParams, SgDerive, SgParams,
};
use irfs::noise::{
    make_branching_environment, make_honig, make_three_dependent, BranchingSpec, CountLaw,
    DrivingProcess, MarkovSpec, MatrixLaw, ScalarLaw,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentBlock,
    pub noise: NoiseBlock,
    pub model: ModelBlock,
    #[serde(default)]
    pub budgets: Budgets,
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseBlock {
    pub seed: u64,
    #[serde(flatten)]
    pub kind: NoiseKindConfig,
    /// Optional floor `K_min` below which indices refuse to sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKindConfig {
    Iid {
        value: ValueLawConfig,
    },
    TwoPointHonig {},
    MovingAverage {
        coefficients: Vec<f64>,
        innovation: ScalarLaw,
    },
    ReversibleMarkov {
        states: Vec<f64>,
        kernel: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
    QueueTraffic {
        service: ScalarLaw,
        interarrival: ScalarLaw,
    },
    LangevinTraffic {
        data: Vec<ScalarLaw>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        data_ma: Option<Vec<f64>>,
        gauss_dim: usize,
    },
    BranchingEnvironment {
        dim: usize,
        offspring: Vec<Vec<CountLaw>>,
        immigration: Vec<CountLaw>,
        rho: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        environment: Option<irfs::noise::EnvModulation>,
    },
    ThreeDependent {
        #[serde(default = "default_half")]
        lin: f64,
        #[serde(default = "default_half")]
        prod: f64,
    },
    Scripted {
        values: Vec<f64>,
        start: i64,
        outside: f64,
    },
}

fn default_half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ValueLawConfig {
    /// Real vector with one law per coordinate.
    Vector { laws: Vec<ScalarLaw> },
    /// `(A, B)` pairs for affine-style models.
    MatrixPair {
        a: MatrixLawConfig,
        b: Vec<ScalarLaw>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MatrixLawConfig {
    Constant { rows: Vec<Vec<f64>> },
    Scalar { value: ScalarLaw },
    Wishart { dim: usize },
    IidEntries { dim: usize, entry: ScalarLaw },
}

impl MatrixLawConfig {
    fn build(&self) -> CliResult<MatrixLaw> {
        Ok(match self {
            MatrixLawConfig::Constant { rows } => MatrixLaw::Constant(
                SquareMatrix::from_rows(rows).map_err(CliError::from_core)?,
            ),
            MatrixLawConfig::Scalar { value } => MatrixLaw::Scalar(value.clone()),
            MatrixLawConfig::Wishart { dim } => MatrixLaw::Wishart { dim: *dim },
            MatrixLawConfig::IidEntries { dim, entry } => MatrixLaw::IidEntries {
                dim: *dim,
                law: entry.clone(),
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelBlock {
    /// `X' = A X + B` over matrix-pair noise.
    Affine { dim: usize },
    /// `X' = Z·X` over scalar noise.
    Multiplicative {},
    /// Constant-gain stochastic gradient.
    Sg {
        gain: f64,
        dim: usize,
        #[serde(default = "default_pair")]
        derive: SgDeriveConfig,
    },
    /// Waiting-time recursion.
    Lindley {
        #[serde(default = "default_variant")]
        variant: LindleyVariant,
    },
    /// Langevin iteration with a convexity envelope.
    Langevin {
        gain: f64,
        dim: usize,
        h: HKindConfig,
        envelope: EnvelopeConfig,
    },
    /// Galton–Watson with immigration; parameters come from the
    /// branching-environment noise block.
    Gwi {},
}

fn default_pair() -> SgDeriveConfig {
    SgDeriveConfig::Pair
}

fn default_variant() -> LindleyVariant {
    LindleyVariant::Direct
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SgDeriveConfig {
    Pair,
    ScalarQuad,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LindleyVariant {
    Direct,
    Queue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HKindConfig {
    Quadratic {
        base: f64,
        #[serde(default)]
        slope: f64,
        #[serde(default)]
        offset: f64,
    },
    QuadraticTanh {
        base: f64,
        #[serde(default)]
        slope: f64,
        eps: f64,
    },
    LinearPair {},
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvelopeConfig {
    Constants { m: f64, big_m: f64 },
    Named(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// Default trajectory horizon.
    pub horizon: u64,
    /// Default replica count for ensembles.
    pub replicas: u64,
    /// Default sample count for one-step statistics.
    pub samples: u64,
    /// Negative-ladder tolerance.
    pub tolerance: f64,
    /// Negative-ladder depth cap.
    pub max_depth: u64,
    /// Wall-clock guard for the whole experiment.
    pub wall_clock_secs: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            horizon: 1_000_000,
            replicas: 1_000,
            samples: 100_000,
            tolerance: 1e-9,
            max_depth: 1 << 20,
            wall_clock_secs: 600,
        }
    }
}

impl Budgets {
    pub fn vstar_options(&self) -> irfs::engine::VstarOptions {
        irfs::engine::VstarOptions {
            tolerance: self.tolerance,
            max_depth: self.max_depth,
            ..irfs::engine::VstarOptions::default()
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.horizon == 0 || self.replicas == 0 || self.samples == 0 || self.max_depth == 0 {
            return Err(CliError::Config(
                "budgets must be positive (horizon, replicas, samples, max_depth)".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::Config("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// `json` (default) or `csv`.
    pub format: OutputFormat,
    /// Report path; stdout when absent.
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// What outcome a verdict-style check is expected to produce. The
/// counterexample presets *expect* a violated condition; matching the
/// expectation is what counts as a pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    #[default]
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckSpec {
    /// Lyapunov exponent estimate.
    Lyapunov {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizons: Option<Vec<u64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicas: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    /// Blanket conditions: integrability + long-run contraction at `horizon`.
    TheoremGen {
        #[serde(default = "default_gen_horizon")]
        horizon: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<u64>,
        #[serde(default)]
        expect_first: Expectation,
        #[serde(default)]
        expect_second: Expectation,
    },
    /// One-step contraction in the mean of logs.
    OneStep {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<u64>,
        #[serde(default)]
        expect: Expectation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    /// Foster–Lyapunov drift fit.
    Drift {
        #[serde(default = "default_magnitudes")]
        magnitudes: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<u64>,
        #[serde(default)]
        expect: Expectation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_rho: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    /// Long-run root test.
    Longrun {
        k_max: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicas: Option<u64>,
        #[serde(default)]
        expect: Expectation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_root: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    /// Ensemble of negative-iteration ladders: moments of `V*`.
    Vstar {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicas: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_mean: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_variance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        /// Require monotone ladders to be nondecreasing (checked exactly).
        #[serde(default)]
        require_monotone: bool,
    },
    /// Coupling decay between two starts.
    Coupling {
        v: Vec<f64>,
        v_other: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicas: Option<u64>,
        #[serde(default = "default_coupling_threshold")]
        threshold: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_success_rate: Option<f64>,
    },
    /// Forward coupling times between two starts.
    Coalescence {
        v: Vec<f64>,
        v_other: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_n: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicas: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_success_rate: Option<f64>,
    },
    /// Time average against the ensemble mean of `V*`.
    Slln {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ensemble: Option<u64>,
        #[serde(default)]
        start: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect_value: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        /// Wider band for the ensemble side, whose error is set by the
        /// replica count rather than the horizon.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ensemble_tolerance: Option<f64>,
    },
    /// Marginal moments of the `V*`-initialized process at three times.
    Stationarity {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        streams: Option<u64>,
        #[serde(default = "default_window")]
        window: u64,
        /// Start at a fixed value instead of `V*` (transient demo).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fixed_start: Option<f64>,
        #[serde(default)]
        expect: Expectation,
    },
    /// Forward/backward two-sample comparison (i.i.d./reversible gate).
    ForwardBackward {
        #[serde(default = "default_fb_horizon")]
        horizon: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<u64>,
        #[serde(default)]
        expect: Expectation,
    },
    /// Mean divergence vs almost-sure coupling for the two-point
    /// counterexample.
    HonigDivergence {
        #[serde(default = "default_nmax")]
        n_max: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean_replicas: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coupling_replicas: Option<u64>,
        #[serde(default = "default_coupling_horizon")]
        coupling_horizon: u64,
        #[serde(default = "default_ratio_rtol")]
        ratio_rtol: f64,
        #[serde(default = "default_min_success")]
        min_coupling_success: f64,
    },
    /// `E|V*|` against the drift bound `K/(1-ρ)`.
    MomentBound {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicas: Option<u64>,
        #[serde(default)]
        expect: Expectation,
    },
    /// Engine negative iteration against the suffix-max closed form, all
    /// depths, several seeds.
    LindleyIdentity {
        #[serde(default = "default_identity_depth")]
        max_depth: u64,
        #[serde(default = "default_identity_seeds")]
        seeds: u64,
        #[serde(default = "default_identity_tol")]
        tolerance: f64,
    },
    /// Averaging bias across a grid of gains (reported, not asserted).
    SgBias {
        gains: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicas: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_samples: Option<u64>,
    },
    /// Empirical one-step quotient against the declared contraction bound.
    LipschitzBound {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        triples: Option<u64>,
        bound: f64,
        #[serde(default = "default_bound_slack")]
        slack: f64,
    },
    /// The full diagnostic battery as one record.
    StabilityReport {},
}

fn default_gen_horizon() -> u64 {
    8
}
fn default_magnitudes() -> Vec<f64> {
    vec![0.0, 1.0, 3.0, 10.0, 30.0, 100.0]
}
fn default_coupling_threshold() -> f64 {
    1e-10
}
fn default_window() -> u64 {
    200
}
fn default_fb_horizon() -> u64 {
    50
}
fn default_nmax() -> u64 {
    8
}
fn default_coupling_horizon() -> u64 {
    10_000
}
fn default_ratio_rtol() -> f64 {
    0.05
}
fn default_min_success() -> f64 {
    0.99
}
fn default_identity_depth() -> u64 {
    2_000
}
fn default_identity_seeds() -> u64 {
    20
}
fn default_identity_tol() -> f64 {
    1e-12
}
fn default_bound_slack() -> f64 {
    1e-9
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Lyapunov { .. } => "lyapunov",
            CheckSpec::TheoremGen { .. } => "theorem_gen",
            CheckSpec::OneStep { .. } => "one_step",
            CheckSpec::Drift { .. } => "drift",
            CheckSpec::Longrun { .. } => "longrun",
            CheckSpec::Vstar { .. } => "vstar",
            CheckSpec::Coupling { .. } => "coupling",
            CheckSpec::Coalescence { .. } => "coalescence",
            CheckSpec::Slln { .. } => "slln",
            CheckSpec::Stationarity { .. } => "stationarity",
            CheckSpec::ForwardBackward { .. } => "forward_backward",
            CheckSpec::HonigDivergence { .. } => "honig_divergence",
            CheckSpec::MomentBound { .. } => "moment_bound",
            CheckSpec::LindleyIdentity { .. } => "lindley_identity",
            CheckSpec::SgBias { .. } => "sg_bias",
            CheckSpec::LipschitzBound { .. } => "lipschitz_bound",
            CheckSpec::StabilityReport { .. } => "stability_report",
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.budgets.validate()?;
        if self.checks.is_empty() {
            return Err(CliError::Config("no checks requested".into()));
        }
        // Construction validates noise and model parameter ranges.
        let process = self.build_process()?;
        self.build_model(&process)?;
        Ok(())
    }

    pub fn build_process(&self) -> CliResult<DrivingProcess> {
        let seed = self.noise.seed;
        let process = match &self.noise.kind {
            NoiseKindConfig::Iid { value } => match value {
                ValueLawConfig::Vector { laws } => DrivingProcess::iid_vector(seed, laws.clone())
                    .map_err(CliError::from_core)?,
                ValueLawConfig::MatrixPair { a, b } => {
                    DrivingProcess::iid_matrix_pair(seed, a.build()?, b.clone())
                        .map_err(CliError::from_core)?
                }
            },
            NoiseKindConfig::TwoPointHonig {} => make_honig(seed),
            NoiseKindConfig::MovingAverage {
                coefficients,
                innovation,
            } => DrivingProcess::moving_average(seed, coefficients.clone(), innovation.clone())
                .map_err(CliError::from_core)?,
            NoiseKindConfig::ReversibleMarkov {
                states,
                kernel,
                stationary,
            } => DrivingProcess::reversible_markov(
                seed,
                MarkovSpec {
                    states: states.clone(),
                    kernel: kernel.clone(),
                    stationary: stationary.clone(),
                },
            )
            .map_err(CliError::from_core)?,
            NoiseKindConfig::QueueTraffic {
                service,
                interarrival,
            } => DrivingProcess::queue_traffic(seed, service.clone(), interarrival.clone())
                .map_err(CliError::from_core)?,
            NoiseKindConfig::LangevinTraffic {
                data,
                data_ma,
                gauss_dim,
            } => DrivingProcess::langevin_traffic(seed, data.clone(), data_ma.clone(), *gauss_dim)
                .map_err(CliError::from_core)?,
            NoiseKindConfig::BranchingEnvironment {
                dim,
                offspring,
                immigration,
                rho,
                environment,
            } => make_branching_environment(
                seed,
                BranchingSpec {
                    dim: *dim,
                    offspring: offspring.clone(),
                    immigration: immigration.clone(),
                    rho: *rho,
                    environment: environment.clone(),
                },
            )
            .map_err(CliError::from_core)?,
            NoiseKindConfig::ThreeDependent { lin, prod } => {
                make_three_dependent(seed, *lin, *prod)
            }
            NoiseKindConfig::Scripted {
                values,
                start,
                outside,
            } => DrivingProcess::scripted(seed, values.clone(), *start, *outside),
        };
        Ok(match self.noise.floor {
            Some(k_min) => process.with_floor(k_min),
            None => process,
        })
    }

    pub fn build_model(&self, process: &DrivingProcess) -> CliResult<irfs::engine::ModelSpec> {
        let model = match &self.model {
            ModelBlock::Affine { dim } => irfs::models::make_affine(&AffineParams {
                dim: *dim,
                interp: AffineInterp::Pair,
            })
            .map_err(CliError::from_core)?,
            ModelBlock::Multiplicative {} => irfs::models::make_multiplicative_scalar(),
            ModelBlock::Sg { gain, dim, derive } => irfs::models::make_sg(&SgParams {
                gain: *gain,
                dim: *dim,
                derive: match derive {
                    SgDeriveConfig::Pair => SgDerive::Pair,
                    SgDeriveConfig::ScalarQuad => SgDerive::ScalarQuad,
                },
            })
            .map_err(CliError::from_core)?,
            ModelBlock::Lindley { variant } => irfs::models::make_lindley(match variant {
                LindleyVariant::Direct => LindleyParams::DirectZ,
                LindleyVariant::Queue => LindleyParams::Queue,
            }),
            ModelBlock::Langevin {
                gain,
                dim,
                h,
                envelope,
            } => {
                let h_kind = match h {
                    HKindConfig::Quadratic { base, slope, offset } => HKind::Quadratic {
                        base: *base,
                        slope: *slope,
                        offset: *offset,
                    },
                    HKindConfig::QuadraticTanh { base, slope, eps } => HKind::QuadraticTanh {
                        base: *base,
                        slope: *slope,
                        eps: *eps,
                    },
                    HKindConfig::LinearPair {} => HKind::LinearPair,
                };
                let env = match envelope {
                    EnvelopeConfig::Constants { m, big_m } => Envelope::Constants {
                        m: *m,
                        big_m: *big_m,
                    },
                    EnvelopeConfig::Named(name) if name == "attained" => Envelope::Attained,
                    EnvelopeConfig::Named(name) => {
                        return Err(CliError::Config(format!(
                            "unknown envelope \"{name}\"; use \"attained\" or {{ m, big_m }}"
                        )))
                    }
                };
                irfs::models::make_langevin(&LangevinParams {
                    gain: *gain,
                    dim: *dim,
                    h: h_kind,
                    envelope: env,
                })
                .map_err(CliError::from_core)?
            }
            ModelBlock::Gwi {} => {
                let source = process.branching_source().ok_or_else(|| {
                    CliError::Config(
                        "the gwi model needs branching_environment noise".into(),
                    )
                })?;
                irfs::models::make_gwi(source).map_err(CliError::from_core)?
            }
        };
        Ok(model)
    }

    pub fn lindley_variant(&self) -> Option<LindleyParams> {
        match &self.model {
            ModelBlock::Lindley { variant } => Some(match variant {
                LindleyVariant::Direct => LindleyParams::DirectZ,
                LindleyVariant::Queue => LindleyParams::Queue,
            }),
            _ => None,
        }
    }

    pub fn sg_params(&self) -> Option<SgParams> {
        match &self.model {
            ModelBlock::Sg { gain, dim, derive } => Some(SgParams {
                gain: *gain,
                dim: *dim,
                derive: match derive {
                    SgDeriveConfig::Pair => SgDerive::Pair,
                    SgDeriveConfig::ScalarQuad => SgDerive::ScalarQuad,
                },
            }),
            _ => None,
        }
    }
}
