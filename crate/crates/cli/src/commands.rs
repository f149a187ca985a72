use ncdirichlet::algebra::cyclic_levy_weights;
use ncdirichlet::battery;
use ncdirichlet::elliptic::{minimize_dirichlet_energy, probe_map, solve_poisson, solve_quasilinear, SolveReport, SolverOptions};
use ncdirichlet::evolution::{self, EvolutionProblem, FlowSample, Form, SourceSample};
use ncdirichlet::linalg::{min_eigenvalue, C64};
use ncdirichlet::tangent::{self, cs03_norm_sq, divergence, gradient, laplacian_from_calculus, left_act, riemannian_metric, right_act};
use ncdirichlet::{AlgebraDescriptor, Check, DirichletSpace, Element, Fidelity, Report, TangentVector};
use serde_json::{json, Value};

use crate::config::{
    BeProblem, CalculusProblem, EvolveProblem, FormSpec, GapProblem, MarkovProblem, PoissonMethod, PoissonProblem,
    Problem, QuasilinearProblem, RunConfig,
};
use crate::error::CliError;

/// Everything a command produces before anything touches the disk.
pub struct Outcome {
    pub report: Report,
    pub results: Value,
    /// `(file name, contents)` pairs written next to `report.json`.
    pub artifacts: Vec<(String, String)>,
}

impl Outcome {
    fn new(report: Report, results: Value) -> Self {
        Outcome { report, results, artifacts: Vec::new() }
    }
}

pub fn run(cfg: &RunConfig, problem: &Problem, space: &DirichletSpace) -> Result<Outcome, CliError> {
    match problem {
        Problem::Describe => describe(space),
        Problem::Markov(p) => markov(space, p, cfg.seed),
        Problem::Gap(p) => gap(space, p, cfg.seed),
        Problem::Calculus(p) => calculus(space, p, cfg.seed),
        Problem::Poisson(p) => poisson(space, p, cfg),
        Problem::Quasilinear(p) => quasilinear(space, p, cfg),
        Problem::Evolve(p) => evolve(space, p, cfg.seed),
        Problem::Be(p) => be(space, p, cfg.seed),
    }
}

/// Support limit keeping triple products of random torus elements inside the window.
fn default_support(space: &DirichletSpace) -> Option<usize> {
    space.algebra().torus_radius().map(|r| (r / 3).max(1))
}

fn describe(space: &DirichletSpace) -> Result<Outcome, CliError> {
    let alg = space.algebra();
    let mut results = json!({
        "kind": alg.descriptor().kind_name(),
        "dim": alg.dim(),
        "representation_dim": alg.representation_dim(),
        "fidelity": alg.fidelity(),
        "spectrum": space.eigenvalues(),
        "kernel_dim": space.kernel_dim(),
        "tangent_directions": tangent::direction_count(space),
        "positivity_tolerance": alg.positivity_tolerance(),
    });
    match alg.descriptor() {
        AlgebraDescriptor::MatrixAlgebra { generators, .. } => {
            let gens: Vec<Value> = generators
                .iter()
                .map(|g| Value::Array(g.transpose().iter().map(|z| json!([z.re, z.im])).collect()))
                .collect();
            results["generators"] = Value::Array(gens);
        }
        AlgebraDescriptor::NcTorus { .. } => {
            results["generators"] = json!(["delta_1", "delta_2"]);
        }
        AlgebraDescriptor::CyclicGroup { lengths, .. } => {
            results["generators"] = json!(lengths);
            results["levy_weights"] = json!(cyclic_levy_weights(lengths));
        }
    }
    Ok(Outcome::new(space.invariants(), results))
}

fn markov(space: &DirichletSpace, p: &MarkovProblem, seed: u64) -> Result<Outcome, CliError> {
    let report = space.markov_check(&p.t_samples, seed)?;
    Ok(Outcome::new(report, json!({ "t_samples": p.t_samples })))
}

fn gap(space: &DirichletSpace, p: &GapProblem, seed: u64) -> Result<Outcome, CliError> {
    let pc = space.poincare_constant()?;
    let mut report = Report::default();
    report.push(space.verify_poincare(seed, p.verify_samples)?);
    Ok(Outcome::new(report, serde_json::to_value(pc)?))
}

fn random_tangent(space: &DirichletSpace, rng: &mut battery::BatteryRng, support: Option<usize>) -> TangentVector {
    let k = tangent::direction_count(space);
    TangentVector::new((0..k).map(|_| battery::element(space.algebra(), rng, support)).collect())
}

fn calculus(space: &DirichletSpace, p: &CalculusProblem, seed: u64) -> Result<Outcome, CliError> {
    let alg = space.algebra();
    let support = p.support.or_else(|| default_support(space));
    let mut report = Report::default();

    let lap = laplacian_from_calculus(space)?;
    let g = space.generator_matrix();
    let fact = (g - lap).norm() / g.norm().max(f64::MIN_POSITIVE);
    report.push(Check::at_most("factorization", fact, 1e-10));

    let mut rng = battery::rng(seed);
    let (mut cs, mut leib, mut adj, mut pair, mut psd, mut gamma_tr, mut cp) =
        (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, f64::INFINITY, 0.0_f64, f64::INFINITY);
    for _ in 0..p.samples {
        let a = battery::element(alg, &mut rng, support);
        let b = battery::element(alg, &mut rng, support);
        let da = gradient(space, &a)?;
        let direct = right_act(space, &da, &b)?.norm().powi(2);
        cs = cs.max((cs03_norm_sq(space, &a, &b)? - direct).abs() / (1.0 + direct));

        let lhs = gradient(space, &a.mul(&b)?)?;
        let rhs = right_act(space, &da, &b)?.add(&left_act(space, &a, &gradient(space, &b)?)?)?;
        leib = leib.max(lhs.sub(&rhs)?.norm() / (1.0 + lhs.norm() + rhs.norm()));

        let h = random_tangent(space, &mut rng, support);
        let x = da.inner(&h)?;
        let y = a.inner(&divergence(space, &h)?)?;
        adj = adj.max((x - y).norm() / (1.0 + x.norm()));

        let r = riemannian_metric(space, &h, &h)?;
        let n2 = h.norm().powi(2);
        pair = pair.max((r.total() - C64::from(n2)).norm() / (1.0 + n2));
        psd = psd.min(r.positivity_witness() / (1.0 + n2));

        let energy = space.energy(&a)?;
        gamma_tr = gamma_tr.max((space.carre_du_champ(&a, &a)?.total() - C64::from(energy)).norm() / (1.0 + energy));
        if alg.fidelity() == Fidelity::Exact {
            let pairs = [(a.clone(), b.clone()), (b.clone(), a.clone())];
            let mut sum = alg.zero();
            for (aj, bj) in &pairs {
                for (ak, bk) in &pairs {
                    let gjk = space.carre_du_champ(aj, ak)?.into_element();
                    sum = sum.add(&bj.adjoint().mul(&gjk)?.mul(bk)?)?;
                }
            }
            cp = cp.min(min_eigenvalue(&sum.represent().matrix));
        }
    }
    report.push(Check::at_most("cs03_norm", cs, 1e-9));
    report.push(Check::at_most("leibniz", leib, 1e-10));
    report.push(Check::at_most("divergence_adjoint", adj, 1e-10));
    report.push(Check::at_most("metric_pairing", pair, 1e-10));
    report.push(Check::margin("metric_positive", psd, 1e-10));
    report.push(Check::at_most("carre_du_champ_trace", gamma_tr, 1e-10));
    if alg.fidelity() == Fidelity::Exact {
        report.push(Check::margin("carre_du_champ_cp", cp, 1e-9));
    } else {
        report.push(Check::skipped("carre_du_champ_cp", "representation is not faithful"));
    }
    Ok(Outcome::new(report, json!({ "samples": p.samples, "support": support })))
}

fn coefficient_csv(u: &Element) -> String {
    let mut out = String::from("index,re,im\n");
    for (k, z) in u.coeffs().iter().enumerate() {
        out.push_str(&format!("{k},{:.17e},{:.17e}\n", z.re, z.im));
    }
    out
}

fn solution_outcome(rep: SolveReport, f: &Element, tol: f64, mut report: Report) -> Result<Outcome, CliError> {
    report.push(Check::at_most("weak_residual", rep.residual_weak, tol * f.norm_l2().max(1.0)));
    let artifacts = vec![
        ("solution.json".to_string(), serde_json::to_string_pretty(&serde_json::to_value(&rep.solution)?)?),
        ("solution.csv".to_string(), coefficient_csv(&rep.solution)),
    ];
    let results = serde_json::to_value(&rep)?;
    Ok(Outcome { report, results, artifacts })
}

fn poisson(space: &DirichletSpace, p: &PoissonProblem, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = p.f.build(space.algebra())?;
    let opts = SolverOptions { tol: cfg.tolerances.tol, project_rhs: p.project_rhs, seed: cfg.seed, ..Default::default() };
    let rep = match p.method {
        PoissonMethod::Spectral => solve_poisson(space, &f, &opts)?,
        PoissonMethod::Variational => minimize_dirichlet_energy(space, &f, &opts)?,
    };
    let mut report = Report::default();
    if let Some(strong) = rep.residual_strong {
        report.push(Check::at_most("strong_residual", strong, 1e-8 * f.norm_l2().max(f64::MIN_POSITIVE)));
    }
    solution_outcome(rep, &f, cfg.tolerances.tol, report)
}

fn quasilinear(space: &DirichletSpace, p: &QuasilinearProblem, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = p.f.build(space.algebra())?;
    let map = p.map.build();
    let mut opts = SolverOptions {
        tol: cfg.tolerances.tol,
        project_rhs: p.project_rhs,
        force: p.force,
        seed: cfg.seed,
        initial_seed: p.initial_seed,
        ..Default::default()
    };
    if let Some(n) = p.probe_samples {
        opts.probe_samples = n;
    }
    if let Some(n) = p.max_iterations {
        opts.max_iterations = n;
    }
    let probe = probe_map(space, &map, opts.probe_samples, cfg.seed)?;
    let probe_value = serde_json::to_value(&probe)?;
    if !probe.report.all_passed() && !p.force {
        let results = json!({ "probe": probe_value, "map": map.name() });
        return Ok(Outcome::new(probe.report, results));
    }
    let mut report = probe.report;
    if p.force {
        for c in &mut report.checks {
            c.skipped = true;
        }
    }
    let rep = solve_quasilinear(space, &map, &f, &opts)?;
    let mut out = solution_outcome(rep, &f, cfg.tolerances.tol, report)?;
    out.results["probe"] = probe_value;
    out.results["map"] = json!(map.name());
    Ok(out)
}

fn evolve(space: &DirichletSpace, p: &EvolveProblem, seed: u64) -> Result<Outcome, CliError> {
    let alg = space.algebra();
    let k = tangent::direction_count(space);
    let form = match &p.form {
        FormSpec::Heat => Form::Heat,
        FormSpec::Continuity { viscosity, flow } => {
            let mut samples = Vec::with_capacity(flow.len());
            for s in flow {
                if s.h.len() != k {
                    return Err(CliError::Config(format!("flow sample has {} components, expected {k}", s.h.len())));
                }
                let comps = s.h.iter().map(|c| c.build(alg)).collect::<Result<Vec<_>, _>>()?;
                samples.push(FlowSample { t: s.t, h: TangentVector::new(comps) });
            }
            Form::Continuity { viscosity: *viscosity, flow: samples }
        }
    };
    let source = p
        .source
        .iter()
        .map(|s| Ok(SourceSample { t: s.t, b: s.b.build(alg)? }))
        .collect::<Result<Vec<_>, CliError>>()?;
    let problem = EvolutionProblem {
        form,
        source,
        initial: p.initial.build(alg)?,
        horizon: p.horizon,
        dt: p.dt,
        scheme: p.scheme,
        coercivity_c0: p.c0,
        coercivity_c1: p.c1,
        probe_samples: p.probe_samples,
        seed,
    };
    let rep = evolution::solve_evolution(space, &problem)?;
    let mut report = Report::default();
    if problem.source.is_empty() {
        let mass = problem.initial.trace().re.abs();
        report.push(Check::at_most("conservation_drift", rep.conservation_drift, 1e-10 * (1.0 + mass)));
    }
    let margin = rep.steps.iter().map(|s| s.coercivity_margin).fold(f64::INFINITY, f64::min);
    if rep.flags.iter().any(|f| f.starts_with("hypotheses unverified")) {
        report.push(Check::skipped("coercivity", "hypotheses unverified: zero viscosity"));
    } else if rep.c1.is_some() {
        report.push(Check::margin("coercivity", margin, 1e-10));
    }
    let mut results = serde_json::to_value(&rep)?;
    results["steps_taken"] = json!(rep.steps.len());
    results["terminal"] = serde_json::to_value(rep.terminal())?;
    let artifacts = vec![("trajectory.csv".to_string(), rep.trajectory_csv())];
    Ok(Outcome { report, results, artifacts })
}

fn be(space: &DirichletSpace, p: &BeProblem, seed: u64) -> Result<Outcome, CliError> {
    let mut rng = battery::rng(seed);
    let support = default_support(space);
    let battery: Vec<Element> = (0..p.battery_size).map(|_| battery::element(space.algebra(), &mut rng, support)).collect();
    let rep = space.be_check(p.k, &p.t_samples, &battery)?;
    let results = json!({
        "k": p.k,
        "k_supremum": rep.k_supremum,
        "skipped": rep.skipped,
        "t_samples": p.t_samples,
    });
    Ok(Outcome::new(rep.report, results))
}
