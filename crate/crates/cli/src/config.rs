use std::path::PathBuf;

use ncdirichlet::elliptic::MapSpec;
use ncdirichlet::evolution::Scheme;
use ncdirichlet::linalg::{CVector, C64};
use ncdirichlet::{Algebra, AlgebraDescriptor, Element};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Describe,
    MarkovCheck,
    Gap,
    CalculusCheck,
    SolvePoisson,
    SolveQuasilinear,
    Evolve,
    BeCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Describe => "describe",
            Command::MarkovCheck => "markov-check",
            Command::Gap => "gap",
            Command::CalculusCheck => "calculus-check",
            Command::SolvePoisson => "solve-poisson",
            Command::SolveQuasilinear => "solve-quasilinear",
            Command::Evolve => "evolve",
            Command::BeCheck => "be-check",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Solver tolerance (weak residual relative to `max(1, ||f||)`).
    pub tol: f64,
    /// Positivity tolerance override for densities.
    pub positivity: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol: 1e-10, positivity: None }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub backend: AlgebraDescriptor,
    #[serde(default)]
    pub problem: Option<Value>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, overridden by `--out`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Coefficients of an algebra element.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum CoeffSpec {
    /// Full coefficient vector of `[re, im]` pairs.
    Dense(Vec<C64>),
    Sparse(SparseCoeffs),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparseCoeffs {
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    /// Coefficient index, or torus exponents `[n, m]`.
    pub at: TermIndex,
    pub c: C64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum TermIndex {
    Index(usize),
    Exponents([i64; 2]),
}

impl CoeffSpec {
    pub fn build(&self, alg: &Algebra) -> Result<Element, CliError> {
        match self {
            CoeffSpec::Dense(v) => Ok(alg.element(CVector::from_vec(v.clone()))?),
            CoeffSpec::Sparse(s) => {
                let mut coeffs = CVector::zeros(alg.dim());
                for term in &s.terms {
                    let idx = match term.at {
                        TermIndex::Index(i) if i < alg.dim() => i,
                        TermIndex::Index(i) => return Err(CliError::Config(format!("coefficient index {i} out of range"))),
                        TermIndex::Exponents([n, m]) => alg
                            .torus_index(n, m)
                            .ok_or_else(|| CliError::Config(format!("monomial U^{n}V^{m} outside the torus window")))?,
                    };
                    coeffs[idx] += term.c;
                }
                Ok(alg.element(coeffs)?)
            }
        }
    }
}

fn default_times() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescribeProblem {}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarkovProblem {
    pub t_samples: Vec<f64>,
}

impl Default for MarkovProblem {
    fn default() -> Self {
        MarkovProblem { t_samples: default_times() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapProblem {
    pub verify_samples: usize,
}

impl Default for GapProblem {
    fn default() -> Self {
        GapProblem { verify_samples: 32 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalculusProblem {
    pub samples: usize,
    /// Torus support limit for random elements.
    pub support: Option<usize>,
}

impl Default for CalculusProblem {
    fn default() -> Self {
        CalculusProblem { samples: 100, support: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonMethod {
    #[default]
    Spectral,
    Variational,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonProblem {
    pub f: CoeffSpec,
    #[serde(default)]
    pub method: PoissonMethod,
    #[serde(default)]
    pub project_rhs: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasilinearProblem {
    pub f: CoeffSpec,
    pub map: MapSpec,
    #[serde(default)]
    pub project_rhs: bool,
    #[serde(default)]
    pub force: bool,
    pub probe_samples: Option<usize>,
    pub initial_seed: Option<u64>,
    pub max_iterations: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub t: f64,
    /// One coefficient list per tangent direction.
    pub h: Vec<CoeffSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub t: f64,
    pub b: CoeffSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormSpec {
    Heat,
    Continuity { viscosity: f64, flow: Vec<FlowSpec> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveProblem {
    pub form: FormSpec,
    pub initial: CoeffSpec,
    #[serde(default)]
    pub source: Vec<SourceSpec>,
    pub horizon: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    #[serde(default = "default_probe_samples")]
    pub probe_samples: usize,
}

fn default_probe_samples() -> usize {
    8
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeProblem {
    pub k: f64,
    pub t_samples: Vec<f64>,
    pub battery_size: usize,
}

impl Default for BeProblem {
    fn default() -> Self {
        BeProblem { k: 0.0, t_samples: default_times(), battery_size: 16 }
    }
}

/// Parse the command payload; an absent payload uses the command defaults when it has them.
pub fn payload<T: DeserializeOwned>(problem: &Option<Value>, command: Command) -> Result<T, CliError> {
    let value = problem.clone().unwrap_or_else(|| Value::Object(Default::default()));
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{} problem: {e}", command.name())))
}

/// Every command payload, validated up front so that a malformed config produces no output.
#[derive(Clone, Debug)]
pub enum Problem {
    Describe,
    Markov(MarkovProblem),
    Gap(GapProblem),
    Calculus(CalculusProblem),
    Poisson(PoissonProblem),
    Quasilinear(QuasilinearProblem),
    Evolve(EvolveProblem),
    Be(BeProblem),
}

impl RunConfig {
    pub fn problem(&self) -> Result<Problem, CliError> {
        let p = &self.problem;
        let c = self.command;
        Ok(match c {
            Command::Describe => {
                payload::<DescribeProblem>(p, c)?;
                Problem::Describe
            }
            Command::MarkovCheck => Problem::Markov(payload(p, c)?),
            Command::Gap => Problem::Gap(payload(p, c)?),
            Command::CalculusCheck => Problem::Calculus(payload(p, c)?),
            Command::SolvePoisson => Problem::Poisson(payload(p, c)?),
            Command::SolveQuasilinear => Problem::Quasilinear(payload(p, c)?),
            Command::Evolve => Problem::Evolve(payload(p, c)?),
            Command::BeCheck => Problem::Be(payload(p, c)?),
        })
    }
}
