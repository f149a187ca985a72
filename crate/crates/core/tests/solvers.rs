use ncdirichlet::algebra::{Algebra, AlgebraDescriptor};
use ncdirichlet::battery;
use ncdirichlet::elliptic::{self, probe_map, solve_poisson, solve_quasilinear, MapSpec, NonlinearMap, SolverOptions};
use ncdirichlet::evolution::{solve_evolution, EvolutionProblem, Scheme, SourceSample};
use ncdirichlet::pauli;
use ncdirichlet::{DirichletSpace, Element, Error};

fn spaces() -> Vec<DirichletSpace> {
    [
        AlgebraDescriptor::qubit(vec![pauli::x(), pauli::y(), pauli::z()]),
        AlgebraDescriptor::torus(2, 0.3819660112501051),
        AlgebraDescriptor::rational_torus(2, 2, 5),
        AlgebraDescriptor::cyclic(vec![0.0, 1.0, 2.0, 1.0]),
    ]
    .into_iter()
    .map(|d| DirichletSpace::new(Algebra::new(d).unwrap()))
    .collect()
}

#[test]
fn quasilinear_solution_is_unique_across_starts() {
    let map = NonlinearMap::convex_gradient(0.5);
    for s in spaces() {
        let mut rng = battery::rng(11);
        let f = s.project_perp(&battery::element(s.algebra(), &mut rng, Some(1))).unwrap();
        let base = solve_quasilinear(&s, &map, &f, &SolverOptions::default()).unwrap();
        assert!(base.residual_weak <= 1e-10 * f.norm_l2().max(1.0));
        assert!(!base.level_residuals.is_empty());
        let restarted = solve_quasilinear(&s, &map, &f, &SolverOptions { initial_seed: Some(9), ..Default::default() }).unwrap();
        assert!(base.solution.sub(&restarted.solution).unwrap().norm_l2() < 1e-8);
    }
}

#[test]
fn linear_map_scales_poisson_solution() {
    for s in spaces() {
        let mut rng = battery::rng(12);
        let f = s.project_perp(&battery::element(s.algebra(), &mut rng, None)).unwrap();
        let q = solve_quasilinear(&s, &NonlinearMap::linear(2.0), &f, &SolverOptions::default()).unwrap();
        let p = solve_poisson(&s, &f, &SolverOptions::default()).unwrap();
        assert!(q.solution.scale_real(2.0).sub(&p.solution).unwrap().norm_l2() < 1e-8);
    }
}

#[test]
fn probe_reports_declared_constants() {
    for s in spaces() {
        let probe = probe_map(&s, &NonlinearMap::convex_gradient(1.0), 50, 3).unwrap();
        assert!(probe.report.all_passed(), "{:?}", probe.report.failures().collect::<Vec<_>>());
        assert!(probe.growth_ratio <= 2.0);
        assert!(probe.coercivity_margin_quadratic >= -1e-12);
    }
}

#[test]
fn kernel_component_gate() {
    let s = &spaces()[0];
    let f = s.algebra().one();
    let err = solve_quasilinear(s, &NonlinearMap::identity(), &f, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NoSolution { .. }));
}

#[test]
fn map_spec_round_trip() {
    let spec: MapSpec = serde_json::from_str(r#"{"kind":"convex_gradient","beta":1.0}"#).unwrap();
    assert_eq!(spec, MapSpec::ConvexGradient { beta: 1.0 });
    assert!(serde_json::from_str::<MapSpec>(r#"{"kind":"convex_gradient","beta":1.0,"x":2}"#).is_err());
    assert_eq!(spec.build().constants.growth, 2.0);
}

#[test]
fn element_json_round_trip() {
    for s in spaces() {
        let mut rng = battery::rng(13);
        let a = battery::element(s.algebra(), &mut rng, None);
        let text = serde_json::to_string(&a).unwrap();
        let back: Element = serde_json::from_str(&text).unwrap();
        assert_eq!(back.coeffs(), a.coeffs());
        assert_eq!(back.algebra().descriptor(), a.algebra().descriptor(), "{text}");
    }
}

#[test]
fn solve_report_serializes() {
    let s = &spaces()[1];
    let f = s.algebra().monomial(1, 1).unwrap();
    let rep = elliptic::minimize_dirichlet_energy(s, &f, &SolverOptions::default()).unwrap();
    let v = serde_json::to_value(&rep).unwrap();
    assert!(v["residual_weak"].as_f64().unwrap() < 1e-12);
    assert!(v["energy_history"].as_array().unwrap().len() >= 2);
}

#[test]
fn forced_heat_reaches_poisson_steady_state() {
    // u' + Delta u = f has the steady state Delta^{-1} f on the orthogonal complement of the kernel
    for s in spaces() {
        let mut rng = battery::rng(14);
        let f = s.project_perp(&battery::element(s.algebra(), &mut rng, Some(1))).unwrap();
        let steady = solve_poisson(&s, &f, &SolverOptions::default()).unwrap().solution;
        let mut p = EvolutionProblem::heat(s.algebra().zero(), 40.0, 0.05, Scheme::ImplicitEuler);
        p.source = vec![SourceSample { t: 0.0, b: f.clone() }];
        let rep = solve_evolution(&s, &p).unwrap();
        assert!(rep.terminal_error.is_none());
        assert!(rep.terminal().sub(&steady).unwrap().norm_l2() < 1e-6);
        assert!(rep.steps.iter().all(|d| d.conservation_defect.abs() < 1e-10));
    }
}

#[test]
fn trajectory_csv_shape() {
    let s = &spaces()[0];
    let u0 = s.algebra().from_matrix(&pauli::x()).unwrap();
    let rep = solve_evolution(s, &EvolutionProblem::heat(u0, 0.1, 0.05, Scheme::CrankNicolson)).unwrap();
    let csv = rep.trajectory_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 3);
    assert_eq!(lines[0].split(',').count(), 1 + 2 * 4);
    assert!(lines[0].starts_with("t,re_0,im_0"));
}
