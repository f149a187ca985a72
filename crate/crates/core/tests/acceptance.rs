//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use ncdirichlet::algebra::{Algebra, AlgebraDescriptor};
use ncdirichlet::battery;
use ncdirichlet::elliptic::{minimize_dirichlet_energy, solve_poisson, solve_quasilinear, NonlinearMap, SolverOptions};
use ncdirichlet::evolution::{solve_evolution, EvolutionProblem, FlowSample, Scheme};
use ncdirichlet::linalg::{min_eigenvalue, C64};
use ncdirichlet::pauli;
use ncdirichlet::tangent::{self, cs03_norm_sq, gradient, laplacian_from_calculus, riemannian_metric, right_act};
use ncdirichlet::{DirichletSpace, Element, TangentVector};

const GOLDEN: f64 = 0.3819660112501051;

fn space(desc: AlgebraDescriptor) -> DirichletSpace {
    DirichletSpace::new(Algebra::new(desc).expect("valid descriptor"))
}

fn qubit() -> DirichletSpace {
    space(AlgebraDescriptor::qubit(vec![pauli::z()]))
}

fn qubit_xz() -> DirichletSpace {
    space(AlgebraDescriptor::qubit(vec![pauli::x(), pauli::z()]))
}

fn torus(radius: usize) -> DirichletSpace {
    space(AlgebraDescriptor::torus(radius, GOLDEN))
}

fn cyclic() -> DirichletSpace {
    space(AlgebraDescriptor::cyclic(vec![0.0, 1.0, 2.0, 1.0]))
}

/// `(space, label, support limit for random elements)`.
fn backends() -> Vec<(DirichletSpace, &'static str, Option<usize>)> {
    vec![
        (qubit_xz(), "matrix M_2", None),
        (torus(4), "torus N=4", Some(1)),
        (space(AlgebraDescriptor::rational_torus(4, 1, 3)), "torus theta=1/3", Some(1)),
        (cyclic(), "Z_4", None),
    ]
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0_f64;
    let mut kernels = true;
    for n in [1, 2, 4] {
        let p = torus(n).poincare_constant().expect("gap exists");
        worst = worst.max((p.gap - 1.0).abs()).max((p.constant - 1.0).abs());
        kernels &= p.kernel_dim == 1;
    }
    outcome(worst <= 1e-12 && kernels, format!("max |gap-1|,|C_P-1| = {worst:.2e}, kernel_dim=1: {kernels}"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0_f64;
    for (s, _, _) in backends() {
        let lap = laplacian_from_calculus(&s).expect("calculus");
        let rel = (s.generator_matrix() - lap).norm() / s.generator_matrix().norm();
        worst = worst.max(rel);
    }
    outcome(worst <= 1e-10, format!("max relative Frobenius defect = {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0_f64;
    for (s, _, support) in backends() {
        let mut rng = battery::rng(3);
        for _ in 0..100 {
            let a = battery::element(s.algebra(), &mut rng, support);
            let b = battery::element(s.algebra(), &mut rng, support);
            let direct = right_act(&s, &gradient(&s, &a).unwrap(), &b).unwrap().norm().powi(2);
            let formula = cs03_norm_sq(&s, &a, &b).unwrap();
            worst = worst.max((formula - direct).abs() / (1.0 + direct));
        }
    }
    outcome(worst <= 1e-9, format!("max scaled defect = {worst:.2e} over 100 pairs x 4 backends"))
}

fn criterion_4() -> Outcome {
    let mut trace_defect = 0.0_f64;
    let mut cp_margin = f64::INFINITY;
    for (s, _, support) in backends() {
        let mut rng = battery::rng(4);
        for _ in 0..50 {
            let a = battery::element(s.algebra(), &mut rng, support);
            let gamma = s.carre_du_champ(&a, &a).unwrap();
            let energy = s.energy(&a).unwrap();
            trace_defect = trace_defect.max((gamma.total() - C64::from(energy)).norm() / (1.0 + energy));
        }
    }
    for s in [qubit_xz(), qubit(), cyclic()] {
        let mut rng = battery::rng(40);
        for _ in 0..50 {
            let a: Vec<Element> = (0..3).map(|_| battery::element(s.algebra(), &mut rng, None)).collect();
            let b: Vec<Element> = (0..3).map(|_| battery::element(s.algebra(), &mut rng, None)).collect();
            let mut sum = s.algebra().zero();
            for j in 0..3 {
                for k in 0..3 {
                    let g = s.carre_du_champ(&a[j], &a[k]).unwrap().into_element();
                    sum = sum.add(&b[j].adjoint().mul(&g).unwrap().mul(&b[k]).unwrap()).unwrap();
                }
            }
            cp_margin = cp_margin.min(min_eigenvalue(&sum.represent().matrix));
        }
    }
    outcome(
        trace_defect <= 1e-10 && cp_margin >= -1e-9,
        format!("max |tau(Gamma[a]) - E[a]| scaled = {trace_defect:.2e}, min CP eigenvalue = {cp_margin:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let mut all = true;
    let mut worst = f64::INFINITY;
    for s in [qubit(), qubit_xz(), cyclic()] {
        let report = s.markov_check(&[0.1, 1.0, 10.0], 5).unwrap();
        for c in &report.checks {
            all &= !c.skipped && c.passed && c.tolerance <= 1e-10;
            let margin = if c.name.starts_with("choi_cp") { c.value } else { -c.value };
            worst = worst.min(margin);
        }
    }
    outcome(all && worst >= -1e-10, format!("{} checks, worst margin = {worst:.2e}", 3 * 3 * 5))
}

fn criterion_6() -> Outcome {
    let mut pairing = 0.0_f64;
    let mut psd = f64::INFINITY;
    for (s, _, support) in backends() {
        let mut rng = battery::rng(6);
        let k = tangent::direction_count(&s);
        for _ in 0..100 {
            let h = TangentVector::new((0..k).map(|_| battery::element(s.algebra(), &mut rng, support)).collect());
            let r = riemannian_metric(&s, &h, &h).unwrap();
            let norm_sq = h.norm().powi(2);
            pairing = pairing.max((r.total() - C64::from(norm_sq)).norm() / (1.0 + norm_sq));
            psd = psd.min(r.positivity_witness() / (1.0 + norm_sq));
        }
    }
    outcome(
        pairing <= 1e-10 && psd >= -1e-10,
        format!("max |tau(R(h,h)) - ||h||^2| scaled = {pairing:.2e}, min scaled eigenvalue = {psd:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let opts = SolverOptions::default();
    let mut agree = 0.0_f64;
    let mut strong = 0.0_f64;
    for (s, _, _) in backends() {
        let mut rng = battery::rng(7);
        for _ in 0..20 {
            let f = s.project_perp(&battery::element(s.algebra(), &mut rng, None)).unwrap();
            let spectral = solve_poisson(&s, &f, &opts).unwrap();
            let variational = minimize_dirichlet_energy(&s, &f, &opts).unwrap();
            agree = agree.max(spectral.solution.sub(&variational.solution).unwrap().norm_l2());
            for rep in [&spectral, &variational] {
                strong = strong.max(rep.residual_strong.unwrap() / f.norm_l2());
            }
        }
    }
    outcome(
        agree <= 1e-8 && strong <= 1e-8,
        format!("max spectral/variational gap = {agree:.2e}, max relative strong residual = {strong:.2e}"),
    )
}

/// Root of `c + c / sqrt(1 + c^2) = 1` by bisection on `[0, 1]`.
fn bisection_root() -> f64 {
    let g = |c: f64| c + c / (1.0 + c * c).sqrt() - 1.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_8() -> Outcome {
    let s = torus(2);
    let map = NonlinearMap::convex_gradient(1.0);
    let u = s.algebra().monomial(1, 0).unwrap();
    let idx = s.algebra().torus_index(1, 0).unwrap();
    let oracle = bisection_root();
    let mut coefficients = Vec::new();
    let mut leak = 0.0_f64;
    for start in [None, Some(1), Some(2), Some(3), Some(4), Some(5)] {
        let opts = SolverOptions { initial_seed: start, ..Default::default() };
        let rep = solve_quasilinear(&s, &map, &u, &opts).unwrap();
        let c = rep.solution.coeffs()[idx];
        coefficients.push(c);
        leak = leak.max(rep.solution.sub(&u.scale(c)).unwrap().norm_l2());
    }
    let error = coefficients.iter().map(|c| (c - C64::from(oracle)).norm()).fold(0.0, f64::max);
    let spread = coefficients.iter().map(|c| (c - coefficients[0]).norm()).fold(0.0, f64::max);
    outcome(
        error <= 1e-8 && spread <= 1e-8 && leak <= 1e-8,
        format!("oracle c = {oracle:.12}, max error = {error:.2e}, restart spread = {spread:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let s = qubit();
    let u0 = s.algebra().from_matrix(&pauli::x()).unwrap();
    let errors = |scheme| -> Vec<f64> {
        [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&dt| solve_evolution(&s, &EvolutionProblem::heat(u0.clone(), 1.0, dt, scheme)).unwrap().terminal_error.unwrap())
            .collect()
    };
    let ratios = |e: &[f64]| [e[0] / e[1], e[1] / e[2]];
    let ie = ratios(&errors(Scheme::ImplicitEuler));
    let cn = ratios(&errors(Scheme::CrankNicolson));
    let ok = ie.iter().all(|r| (1.6..=2.4).contains(r)) && cn.iter().all(|r| (3.2..=4.8).contains(r));
    outcome(ok, format!("implicit Euler ratios {:.3}, {:.3}; Crank-Nicolson ratios {:.3}, {:.3}", ie[0], ie[1], cn[0], cn[1]))
}

fn criterion_10() -> Outcome {
    let s = torus(2);
    let alg = s.algebra();
    let h = gradient(&s, &alg.monomial(1, 0).unwrap()).unwrap().scale_real(0.8);
    let flow = vec![FlowSample { t: 0.0, h }];
    let mut rng = battery::rng(10);
    let u0 = alg.one().add(&battery::element(alg, &mut rng, Some(1))).unwrap();
    let mut worst = 0.0_f64;
    let mut moved = f64::INFINITY;
    for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
        let p = EvolutionProblem::continuity(u0.clone(), 0.1, flow.clone(), 1.0, 1e-2, scheme);
        let rep = solve_evolution(&s, &p).unwrap();
        let m0 = rep.states[0].trace().re;
        let drift = rep.states.iter().map(|u| (u.trace().re - m0).abs()).fold(0.0, f64::max);
        worst = worst.max(drift);
        moved = moved.min(rep.terminal().sub(&u0).unwrap().norm_l2());
    }
    outcome(
        worst <= 1e-10 && moved > 1e-3,
        format!("max |Re<u_k,1> - Re<u_0,1>| = {worst:.2e}, ||u_T - u_0|| = {moved:.2e}"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 10] = [
        ("torus Poincare constant", criterion_1, Duration::from_secs(1)),
        ("generator factorization", criterion_2, Duration::from_secs(1)),
        ("bimodule norm formula", criterion_3, Duration::from_secs(5)),
        ("carre du champ consistency", criterion_4, Duration::from_secs(5)),
        ("Markov property", criterion_5, Duration::from_secs(1)),
        ("Riemannian metric pairing", criterion_6, Duration::from_secs(5)),
        ("Poisson solver equivalence", criterion_7, Duration::from_secs(10)),
        ("quasilinear scalar benchmark", criterion_8, Duration::from_secs(10)),
        ("heat evolution convergence", criterion_9, Duration::from_secs(30)),
        ("continuity conservation", criterion_10, Duration::from_secs(10)),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let passed = result.passed && elapsed < *budget;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<30} {}  ({}; {:.3}s of {}s)",
            i + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failures, failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
