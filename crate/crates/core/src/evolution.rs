//! Parabolic problems `u' + A(t) u = b(t)` in the triple `V = D(E) ⊂ H = L2(tau) ⊂ V*`.
//!
//! Coordinates are real: a state is `(Re u, Im u)` in `R^{2d}`. The L2 basis is orthonormal, so
//! the mass matrix is the identity, and `A(t)_{ij} = F(e_j, e_i; t)`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen, LU};
use serde::{Deserialize, Serialize};

use crate::algebra::Element;
use crate::battery;
use crate::dirichlet::DirichletSpace;
use crate::error::{Error, Result};
use crate::linalg::{from_real, realify, to_real, CMatrix, C64};
use crate::tangent::{gradient_matrix, right_act, TangentVector};

/// Real-coordinate Gram matrices of `H` and `V`.
#[derive(Clone, Debug)]
pub struct Triple {
    /// Gram matrix of `<.,.>_{L2}`.
    pub mass: DMatrix<f64>,
    /// Real matrix of `Re E(.,.)`.
    pub stiffness: DMatrix<f64>,
    /// Gram matrix of `<.,.>_E = <.,.>_{L2} + E(.,.)`.
    pub energy_gram: DMatrix<f64>,
    /// Condition number of `energy_gram` (finite means `j` is injective with dense image).
    pub condition: f64,
}

impl Triple {
    pub fn real_dim(&self) -> usize {
        self.mass.nrows()
    }

    /// `j^*`: the Riesz representative in `V` of the functional `v -> <g, v>_H`.
    pub fn dual_transport(&self, g: &DVector<f64>) -> DVector<f64> {
        let rhs = &self.mass * g;
        self.energy_gram.clone().lu().solve(&rhs).expect("energy Gram is positive definite")
    }
}

pub fn assemble_triple(space: &DirichletSpace) -> Triple {
    let stiffness = realify(space.generator_matrix());
    let n = stiffness.nrows();
    let mass = DMatrix::<f64>::identity(n, n);
    let energy_gram = &mass + &stiffness;
    let eig = SymmetricEigen::new(energy_gram.clone()).eigenvalues;
    let condition = eig.max() / eig.min();
    Triple { mass, stiffness, energy_gram, condition }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
}

/// A flow sample `h(t)`.
#[derive(Clone, Debug)]
pub struct FlowSample {
    pub t: f64,
    pub h: TangentVector,
}

/// A source sample `b(t)`, given by its L2 representative.
#[derive(Clone, Debug)]
pub struct SourceSample {
    pub t: f64,
    pub b: Element,
}

#[derive(Clone, Debug)]
pub enum Form {
    /// `F(u, v) = E(u, v)`.
    Heat,
    /// `F(u, v; t) = eps E(u, v) + Re <h(t) u, d v>`.
    Continuity { viscosity: f64, flow: Vec<FlowSample> },
}

#[derive(Clone, Debug)]
pub struct EvolutionProblem {
    pub form: Form,
    pub source: Vec<SourceSample>,
    pub initial: Element,
    pub horizon: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// `c0` in `F(v,v;t) >= c0 ||v||_V^2 - c1 ||v||_H^2` (defaults: 1 for Heat, `eps` for Continuity).
    pub coercivity_c0: Option<f64>,
    /// Declared `c1`; when absent the smallest admissible value is reported instead.
    pub coercivity_c1: Option<f64>,
    /// Random probe vectors per step for the empirical margins.
    pub probe_samples: usize,
    pub seed: u64,
}

impl EvolutionProblem {
    pub fn heat(initial: Element, horizon: f64, dt: f64, scheme: Scheme) -> Self {
        EvolutionProblem {
            form: Form::Heat,
            source: Vec::new(),
            initial,
            horizon,
            dt,
            scheme,
            coercivity_c0: None,
            coercivity_c1: None,
            probe_samples: 8,
            seed: 0,
        }
    }

    pub fn continuity(initial: Element, viscosity: f64, flow: Vec<FlowSample>, horizon: f64, dt: f64, scheme: Scheme) -> Self {
        EvolutionProblem { form: Form::Continuity { viscosity, flow }, ..Self::heat(initial, horizon, dt, scheme) }
    }

    fn validate(&self, space: &DirichletSpace) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.initial.algebra().descriptor() != space.algebra().descriptor() {
            return Err(Error::BackendMismatch("initial datum".into()));
        }
        if let Form::Continuity { viscosity, flow } = &self.form {
            if viscosity.is_nan() || *viscosity < 0.0 {
                return bad(format!("viscosity must be nonnegative, got {viscosity}"));
            }
            check_sorted(flow.iter().map(|s| s.t), "flow")?;
        }
        check_sorted(self.source.iter().map(|s| s.t), "source")?;
        Ok(())
    }
}

fn check_sorted(times: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut last = f64::NEG_INFINITY;
    for t in times {
        if t.is_nan() || t <= last {
            return Err(Error::InvalidProblem(format!("{what} sample times must be strictly increasing")));
        }
        last = t;
    }
    Ok(())
}

/// Piecewise-linear interpolation weights over sorted sample times (constant extension outside).
fn interpolation(times: &[f64], t: f64) -> Vec<(usize, f64)> {
    match times.len() {
        0 => Vec::new(),
        1 => vec![(0, 1.0)],
        n => {
            if t <= times[0] {
                return vec![(0, 1.0)];
            }
            if t >= times[n - 1] {
                return vec![(n - 1, 1.0)];
            }
            let k = times.partition_point(|&s| s <= t) - 1;
            let w = (t - times[k]) / (times[k + 1] - times[k]);
            vec![(k, 1.0 - w), (k + 1, w)]
        }
    }
}

/// The time-dependent operator `A(t)` and source `b(t)` in real coordinates.
struct Assembled {
    stiffness: DMatrix<f64>,
    viscosity: f64,
    flow_times: Vec<f64>,
    /// `Re <h_k u, d v>` at each flow sample.
    transport: Vec<DMatrix<f64>>,
    source_times: Vec<f64>,
    sources: Vec<DVector<f64>>,
    autonomous: bool,
}

impl Assembled {
    fn new(space: &DirichletSpace, problem: &EvolutionProblem) -> Result<Self> {
        let stiffness = realify(space.generator_matrix());
        let (viscosity, flow_times, transport) = match &problem.form {
            Form::Heat => (1.0, Vec::new(), Vec::new()),
            Form::Continuity { viscosity, flow } => {
                let grad = gradient_matrix(space)?;
                let mats = flow.iter().map(|s| transport_matrix(space, &grad, &s.h)).collect::<Result<Vec<_>>>()?;
                (*viscosity, flow.iter().map(|s| s.t).collect(), mats)
            }
        };
        let mut sources = Vec::with_capacity(problem.source.len());
        for s in &problem.source {
            if s.b.algebra().descriptor() != space.algebra().descriptor() {
                return Err(Error::BackendMismatch("source sample".into()));
            }
            sources.push(to_real(s.b.coeffs()));
        }
        let autonomous = transport.len() <= 1;
        Ok(Assembled {
            stiffness,
            viscosity,
            flow_times,
            transport,
            source_times: problem.source.iter().map(|s| s.t).collect(),
            sources,
            autonomous,
        })
    }

    fn operator(&self, t: f64) -> DMatrix<f64> {
        let mut a = &self.stiffness * self.viscosity;
        for (k, w) in interpolation(&self.flow_times, t) {
            a += &self.transport[k] * w;
        }
        a
    }

    fn source(&self, t: f64, n: usize) -> DVector<f64> {
        let mut b = DVector::zeros(n);
        for (k, w) in interpolation(&self.source_times, t) {
            b += &self.sources[k] * w;
        }
        b
    }
}

/// Real matrix of `(u, v) -> Re <h u, d v>_H`, with rows indexed by `v`.
fn transport_matrix(space: &DirichletSpace, grad: &CMatrix, h: &TangentVector) -> Result<DMatrix<f64>> {
    let alg = space.algebra();
    let d = alg.dim();
    let mut right = CMatrix::zeros(grad.nrows(), d);
    for j in 0..d {
        right.set_column(j, &right_act(space, h, &alg.basis_element(j))?.flatten());
    }
    // Re <R u, G v> = Re v^H (G^H R) u
    Ok(realify(&(grad.adjoint() * right)))
}

/// Per-step certificates of the coercivity and boundedness conditions.
#[derive(Clone, Debug, Serialize)]
pub struct StepDiagnostics {
    pub t: f64,
    /// Smallest `c1` with `F(v,v;t) >= c0 ||v||_V^2 - c1 ||v||_H^2` for all `v`.
    pub c1_required: f64,
    /// `min_v (F(v,v;t) - c0 ||v||_V^2 + c1 ||v||_H^2) / ||v||_H^2` over the probe battery.
    pub coercivity_margin: f64,
    /// `sup |F(v,w;t)| / (||v||_V ||w||_V)`.
    pub boundedness: f64,
    /// `d/dt Re <u, 1> - Re <b(t), 1>` from the discrete difference quotient.
    pub conservation_defect: f64,
    pub solve_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionReport {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<Element>,
    pub steps: Vec<StepDiagnostics>,
    pub c0: f64,
    pub c1: Option<f64>,
    /// `max_k |Re <u_k, 1> - Re <u_0, 1>|`.
    pub conservation_drift: f64,
    /// `||u(T) - exp(-T Delta) u_0||` for the heat flow without source.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_error: Option<f64>,
    pub flags: Vec<String>,
}

impl EvolutionReport {
    pub fn terminal(&self) -> &Element {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// CSV with columns `t, re_0, im_0, re_1, im_1, ...`.
    pub fn trajectory_csv(&self) -> String {
        let d = self.states.first().map_or(0, |s| s.coeffs().len());
        let mut out = String::from("t");
        for k in 0..d {
            let _ = write!(out, ",re_{k},im_{k}");
        }
        out.push('\n');
        for (t, u) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.17e}");
            for z in u.coeffs().iter() {
                let _ = write!(out, ",{:.17e},{:.17e}", z.re, z.im);
            }
            out.push('\n');
        }
        out
    }
}

fn singular(time: f64, m: &DMatrix<f64>) -> Error {
    let sv = m.singular_values();
    let rcond = if sv.max() > 0.0 { sv.min() / sv.max() } else { 0.0 };
    Error::SingularStep { time, rcond }
}

fn checked_solve(lu: &LU<f64, nalgebra::Dyn, nalgebra::Dyn>, m: &DMatrix<f64>, rhs: &DVector<f64>, time: f64) -> Result<(DVector<f64>, f64)> {
    let x = lu.solve(rhs).ok_or_else(|| singular(time, m))?;
    let residual = (m * &x - rhs).norm();
    let scale = rhs.norm().max(m.norm() * x.norm()).max(f64::MIN_POSITIVE);
    let rel = residual / scale;
    if rel.is_nan() || rel > 1e-12 {
        return Err(singular(time, m));
    }
    Ok((x, rel))
}

/// One step from `(t, x)` to `t + dt`.
pub fn step(space: &DirichletSpace, problem: &EvolutionProblem, u: &Element, t: f64) -> Result<Element> {
    problem.validate(space)?;
    let asm = Assembled::new(space, problem)?;
    let x = to_real(u.coeffs());
    let (lhs, rhs) = step_system(&asm, problem.scheme, &x, t, problem.dt);
    let lu = lhs.clone().lu();
    let (next, _) = checked_solve(&lu, &lhs, &rhs, t + problem.dt)?;
    space.algebra().element(from_real(&next))
}

fn step_system(asm: &Assembled, scheme: Scheme, x: &DVector<f64>, t: f64, dt: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.len();
    let id = DMatrix::<f64>::identity(n, n);
    let a1 = asm.operator(t + dt);
    let b1 = asm.source(t + dt, n);
    match scheme {
        Scheme::ImplicitEuler => (id + a1 * dt, x + b1 * dt),
        Scheme::CrankNicolson => {
            let a0 = asm.operator(t);
            let b0 = asm.source(t, n);
            let rhs = x - a0 * x * (0.5 * dt) + (b0 + b1) * (0.5 * dt);
            (id + a1 * (0.5 * dt), rhs)
        }
    }
}

/// `(c1_required, boundedness)` for the real operator `a`, computed exactly.
fn certificates(a: &DMatrix<f64>, triple: &Triple, c0: f64, inv_sqrt_gram: &DMatrix<f64>) -> (f64, f64) {
    let sym = (a + a.transpose()) * 0.5;
    let c1 = SymmetricEigen::new(&triple.energy_gram * c0 - sym).eigenvalues.max().max(0.0);
    let bounded = (inv_sqrt_gram * a * inv_sqrt_gram).singular_values().max();
    (c1, bounded)
}

pub fn solve_evolution(space: &DirichletSpace, problem: &EvolutionProblem) -> Result<EvolutionReport> {
    problem.validate(space)?;
    let asm = Assembled::new(space, problem)?;
    let triple = assemble_triple(space);
    let n = triple.real_dim();
    let inv_sqrt_gram = {
        let eig = SymmetricEigen::new(triple.energy_gram.clone());
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
        &eig.eigenvectors * d * eig.eigenvectors.transpose()
    };
    let (c0, mut flags) = match &problem.form {
        Form::Heat => (problem.coercivity_c0.unwrap_or(1.0), Vec::new()),
        Form::Continuity { viscosity, .. } => {
            let mut flags = Vec::new();
            if *viscosity == 0.0 {
                flags.push("hypotheses unverified: zero viscosity".to_string());
            }
            (problem.coercivity_c0.unwrap_or(*viscosity), flags)
        }
    };

    let one = to_real(space.algebra().one().coeffs());
    let mut rng = battery::rng(problem.seed);
    let probes: Vec<DVector<f64>> = (0..problem.probe_samples)
        .map(|_| to_real(battery::element(space.algebra(), &mut rng, None).coeffs()))
        .collect();

    let steps_count = (problem.horizon / problem.dt).round().max(1.0) as usize;
    if ((steps_count as f64) * problem.dt - problem.horizon).abs() > 1e-9 * problem.horizon {
        flags.push(format!("horizon rounded to {} steps", steps_count));
    }
    let mut x = to_real(problem.initial.coeffs());
    let mass0 = one.dot(&x);
    let mut times = vec![0.0];
    let mut states = vec![problem.initial.clone()];
    let mut steps = Vec::with_capacity(steps_count);
    let mut drift = 0.0_f64;
    let mut cached: Option<(DMatrix<f64>, LU<f64, nalgebra::Dyn, nalgebra::Dyn>)> = None;

    for k in 0..steps_count {
        let t = k as f64 * problem.dt;
        let t1 = (k + 1) as f64 * problem.dt;
        let (lhs, rhs) = step_system(&asm, problem.scheme, &x, t, problem.dt);
        let reuse = asm.autonomous && cached.is_some();
        if !reuse {
            let lu = lhs.clone().lu();
            cached = Some((lhs, lu));
        }
        let (m, lu) = cached.as_ref().expect("factorization cached");
        let (next, solve_residual) = checked_solve(lu, m, &rhs, t1)?;
        if !asm.autonomous {
            cached = None;
        }

        let a1 = asm.operator(t1);
        let (c1_required, boundedness) = certificates(&a1, &triple, c0, &inv_sqrt_gram);
        let c1 = problem.coercivity_c1.unwrap_or(c1_required);
        let coercivity_margin = probes
            .iter()
            .map(|v| {
                let f = v.dot(&(&a1 * v));
                let vv = v.dot(&(&triple.energy_gram * v));
                let hh = v.dot(&(&triple.mass * v));
                (f - c0 * vv + c1 * hh) / hh.max(f64::MIN_POSITIVE)
            })
            .fold(f64::INFINITY, f64::min);
        let b_one = match problem.scheme {
            Scheme::ImplicitEuler => asm.source(t1, n).dot(&one),
            Scheme::CrankNicolson => 0.5 * (asm.source(t, n) + asm.source(t1, n)).dot(&one),
        };
        let conservation_defect = (one.dot(&next) - one.dot(&x)) / problem.dt - b_one;
        x = next;
        drift = drift.max((one.dot(&x) - mass0).abs());
        times.push(t1);
        states.push(space.algebra().element(from_real(&x))?);
        steps.push(StepDiagnostics { t: t1, c1_required, coercivity_margin, boundedness, conservation_defect, solve_residual });
    }

    let terminal_error = match (&problem.form, problem.source.is_empty()) {
        (Form::Heat, true) => {
            let exact = space.semigroup_apply(*times.last().expect("nonempty"), &problem.initial)?;
            Some(exact.sub(states.last().expect("nonempty"))?.norm_l2())
        }
        _ => None,
    };
    Ok(EvolutionReport {
        times,
        states,
        steps,
        c0,
        c1: problem.coercivity_c1,
        conservation_drift: drift,
        terminal_error,
        flags,
    })
}

/// `||int_0^T (w(t) phi(t) + u(t) phi'(t)) dt||` for the piecewise-linear trajectory, where `w`
/// is the discrete difference quotient and `phi` vanishes at both ends.
pub fn weak_derivative_defect(report: &EvolutionReport, phi: impl Fn(f64) -> f64, dphi: impl Fn(f64) -> f64) -> f64 {
    // three-point Gauss-Legendre on each step
    let nodes = [(-(0.6f64).sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), ((0.6f64).sqrt(), 5.0 / 9.0)];
    let d = report.terminal().coeffs().len();
    let mut acc = nalgebra::DVector::<C64>::zeros(d);
    for k in 0..report.times.len() - 1 {
        let (t0, t1) = (report.times[k], report.times[k + 1]);
        let h = t1 - t0;
        let u0 = report.states[k].coeffs();
        let u1 = report.states[k + 1].coeffs();
        let w = (u1 - u0) / C64::from(h);
        for (x, wt) in nodes {
            let s = 0.5 * (x + 1.0);
            let t = t0 + s * h;
            let u = u0 * C64::from(1.0 - s) + u1 * C64::from(s);
            acc += (&w * C64::from(phi(t)) + u * C64::from(dphi(t))) * C64::from(0.5 * h * wt);
        }
    }
    acc.norm()
}

/// `| ||u_N||^2 + 2 sum dt E[u_*] - ||u_0||^2 |` where `u_*` is `u_{k+1}` (implicit Euler) or the
/// midpoint average (Crank-Nicolson).
pub fn heat_energy_defect(space: &DirichletSpace, report: &EvolutionReport, scheme: Scheme) -> Result<f64> {
    let mut dissipated = 0.0;
    for k in 0..report.times.len() - 1 {
        let dt = report.times[k + 1] - report.times[k];
        let u = match scheme {
            Scheme::ImplicitEuler => report.states[k + 1].clone(),
            Scheme::CrankNicolson => report.states[k].add(&report.states[k + 1])?.scale_real(0.5),
        };
        dissipated += 2.0 * dt * space.energy(&u)?;
    }
    let start = report.states[0].norm_l2().powi(2);
    let end = report.terminal().norm_l2().powi(2);
    Ok((end + dissipated - start).abs())
}
