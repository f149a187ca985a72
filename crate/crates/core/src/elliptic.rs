//! Weak solutions of `d^* d u = f` and of the quasilinear problem `d^* F(d u) = f`.
//!
//! Variational quantities use real coordinates: a complex coefficient vector `u` in `C^d` is
//! the real vector `(Re u, Im u)` in `R^{2d}`, and every form is the real part of the
//! corresponding sesquilinear form.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::Element;
use crate::battery;
use crate::dirichlet::DirichletSpace;
use crate::error::{Error, Result};
use crate::linalg::{from_real, realify, to_real, CMatrix, CVector, C64, I};
use crate::report::{Check, Report};
use crate::tangent::{gradient_matrix, TangentVector};

/// Declared structural constants of a nonlinear map `F : H -> H`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapConstants {
    /// `||F(h)|| <= c0 (1 + ||h||)`.
    pub growth: f64,
    /// `Re <F(h), h> >= c1 ||h|| - c2`.
    pub coercivity: f64,
    pub offset: f64,
    /// `Re <F(h) - F(v), h - v> >= theta ||h - v||^2`, if declared.
    pub strong_monotonicity: Option<f64>,
}

type Evaluator = dyn Fn(&TangentVector) -> TangentVector + Send + Sync;

/// A black-box map on the tangent bimodule plus its declared constants.
#[derive(Clone)]
pub struct NonlinearMap {
    name: String,
    evaluator: Arc<Evaluator>,
    pub constants: MapConstants,
}

impl fmt::Debug for NonlinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearMap").field("name", &self.name).field("constants", &self.constants).finish()
    }
}

impl NonlinearMap {
    pub fn new(
        name: impl Into<String>,
        constants: MapConstants,
        evaluator: impl Fn(&TangentVector) -> TangentVector + Send + Sync + 'static,
    ) -> Self {
        NonlinearMap { name: name.into(), evaluator: Arc::new(evaluator), constants }
    }

    pub fn identity() -> Self {
        Self::linear(1.0)
    }

    /// `F(h) = s h`.
    pub fn linear(scale: f64) -> Self {
        let constants = MapConstants {
            growth: scale.abs(),
            coercivity: scale.max(0.0),
            offset: scale.max(0.0) / 4.0,
            strong_monotonicity: (scale > 0.0).then_some(scale),
        };
        Self::new(format!("linear({scale})"), constants, move |h| h.scale_real(scale))
    }

    /// `F(h) = h + beta h / sqrt(1 + ||h||^2)`, the gradient of the convex functional
    /// `||h||^2 / 2 + beta sqrt(1 + ||h||^2)`.
    pub fn convex_gradient(beta: f64) -> Self {
        let constants = MapConstants {
            growth: 1.0 + beta.abs(),
            coercivity: 1.0,
            offset: 0.25,
            strong_monotonicity: Some(1.0),
        };
        Self::new(format!("convex_gradient({beta})"), constants, move |h| {
            let s = 1.0 + beta / (1.0 + h.norm().powi(2)).sqrt();
            h.scale_real(s)
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, h: &TangentVector) -> TangentVector {
        (self.evaluator)(h)
    }
}

/// Serializable selection of a built-in map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Identity,
    Linear { scale: f64 },
    ConvexGradient { beta: f64 },
}

impl MapSpec {
    pub fn build(&self) -> NonlinearMap {
        match self {
            MapSpec::Identity => NonlinearMap::identity(),
            MapSpec::Linear { scale } => NonlinearMap::linear(*scale),
            MapSpec::ConvexGradient { beta } => NonlinearMap::convex_gradient(*beta),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub solution: Element,
    /// Largest weak-form defect over a full basis of `D(E)`.
    pub residual_weak: f64,
    /// `||Delta u - f||` for linear problems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_strong: Option<f64>,
    pub iterations: usize,
    pub galerkin_dim: usize,
    pub kernel_component_of_f: f64,
    pub flags: Vec<String>,
    /// Energies `I(u_k)` along the conjugate-gradient iterates.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub energy_history: Vec<f64>,
    /// Full weak residual after each Galerkin level.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub level_residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Weak residual tolerance, relative to `max(1, ||f||)`.
    pub tol: f64,
    /// Project `f` onto `(ker Delta)^perp` instead of failing.
    pub project_rhs: bool,
    pub max_iterations: usize,
    /// Skip the hypothesis probe of the nonlinear map.
    pub force: bool,
    pub probe_samples: usize,
    pub seed: u64,
    /// Random initial Galerkin coordinates drawn from this seed (zero start when absent).
    pub initial_seed: Option<u64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            project_rhs: false,
            max_iterations: 500,
            force: false,
            probe_samples: 64,
            seed: 0,
            initial_seed: None,
        }
    }
}

/// The right-hand side after the solvability gate.
struct Rhs {
    f: CVector,
    kernel_mass: f64,
    flags: Vec<String>,
}

fn gate_rhs(space: &DirichletSpace, f: &Element, opts: &SolverOptions) -> Result<Rhs> {
    let kernel = space.project_kernel(f)?;
    let kernel_mass = kernel.norm_l2();
    let tolerance = 1e-10 * f.norm_l2();
    let mut flags = Vec::new();
    let coeffs = if kernel_mass > tolerance {
        if !opts.project_rhs {
            return Err(Error::NoSolution { mass: kernel_mass, tolerance });
        }
        flags.push(format!("projected_rhs(discarded={kernel_mass:.3e})"));
        f.coeffs() - kernel.coeffs()
    } else {
        f.coeffs().clone()
    };
    Ok(Rhs { f: coeffs, kernel_mass, flags })
}

/// `max_g |E(u, g) - <f, g>|` over the generator eigenbasis (a basis of all of `D(E)`).
pub fn weak_residual_linear(space: &DirichletSpace, u: &Element, f: &Element) -> Result<f64> {
    let v = space.eigenvectors();
    let du = space.generator_matrix() * u.coeffs();
    let lhs = v.adjoint() * du;
    let rhs = v.adjoint() * f.coeffs();
    Ok((lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `max_g |Re <F(d u), d g> - Re <f, g>|` over the real basis `{v_k, i v_k}` of `D(E)`.
pub fn weak_residual(space: &DirichletSpace, map: &NonlinearMap, u: &Element, f: &Element) -> Result<f64> {
    let grad = gradient_matrix(space)?;
    let du = TangentVector::unflatten(space.algebra(), &(&grad * u.coeffs()))?;
    let fdu = map.apply(&du).flatten();
    let dv = &grad * space.eigenvectors();
    let lhs = dv.adjoint() * fdu;
    let rhs = space.eigenvectors().adjoint() * f.coeffs();
    // <X, d(i v)> = i <X, d v>, so the real and imaginary parts cover both real directions
    Ok((lhs - rhs).iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max))
}

fn tolerance_for(opts: &SolverOptions, f: &CVector) -> f64 {
    opts.tol * f.norm().max(1.0)
}

/// Spectral solution of the Poisson equation by diagonal inversion on `D_perp`.
pub fn solve_poisson(space: &DirichletSpace, f: &Element, opts: &SolverOptions) -> Result<SolveReport> {
    let rhs = gate_rhs(space, f, opts)?;
    let v = space.eigenvectors();
    let lambda = space.eigenvalues();
    let kd = space.kernel_dim();
    let mut c = v.adjoint() * &rhs.f;
    for (k, ck) in c.iter_mut().enumerate() {
        *ck = if k < kd { C64::from(0.0) } else { *ck / lambda[k] };
    }
    let u = space.algebra().wrap(v * c);
    let f_used = space.algebra().wrap(rhs.f.clone());
    finish_linear(space, u, &f_used, rhs, 0, Vec::new(), opts)
}

fn finish_linear(
    space: &DirichletSpace,
    u: Element,
    f_used: &Element,
    rhs: Rhs,
    iterations: usize,
    energy_history: Vec<f64>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let residual_weak = weak_residual_linear(space, &u, f_used)?;
    let strong = space.generator_apply(&u)?.sub(f_used)?.norm_l2();
    let mut flags = rhs.flags;
    if residual_weak > tolerance_for(opts, &rhs.f) {
        flags.push("weak_residual_above_tolerance".into());
    }
    Ok(SolveReport {
        solution: u,
        residual_weak,
        residual_strong: Some(strong),
        iterations,
        galerkin_dim: 2 * (space.algebra().dim() - space.kernel_dim()),
        kernel_component_of_f: rhs.kernel_mass,
        flags,
        energy_history,
        level_residuals: Vec::new(),
    })
}

/// Minimize `I(u) = E[u]/2 - Re <f, u>` over real coordinates of `D_perp` by conjugate gradients.
pub fn minimize_dirichlet_energy(space: &DirichletSpace, f: &Element, opts: &SolverOptions) -> Result<SolveReport> {
    let rhs = gate_rhs(space, f, opts)?;
    let a = realify(space.generator_matrix());
    let b = to_real(&rhs.f);
    let energy = |x: &DVector<f64>| 0.5 * x.dot(&(&a * x)) - b.dot(x);

    let n = b.len();
    let mut x = DVector::<f64>::zeros(n);
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let stop = (1e-14 * b.norm()).powi(2);
    let mut history = vec![energy(&x)];
    let mut iterations = 0;
    let max_iter = opts.max_iterations.max(4 * n);
    let mut monotone = true;
    while rr > stop {
        if iterations >= max_iter {
            return Err(Error::NotConverged { iterations, residual: rr.sqrt() });
        }
        let ap = &a * &p;
        let curvature = p.dot(&ap);
        if curvature <= 0.0 {
            break;
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_new = r.dot(&r);
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
        iterations += 1;
        let e = energy(&x);
        if e > history.last().copied().unwrap_or(f64::INFINITY) + 1e-14 * e.abs().max(1.0) {
            monotone = false;
        }
        history.push(e);
    }
    let u = space.project_perp(&space.algebra().wrap(from_real(&x)))?;
    let f_used = space.algebra().wrap(rhs.f.clone());
    let mut report = finish_linear(space, u, &f_used, rhs, iterations, history, opts)?;
    if !monotone {
        report.flags.push("energy_not_monotone".into());
    }
    Ok(report)
}

/// Real Galerkin basis of `D_0(E)`: `{v_k / sqrt(l_k), i v_k / sqrt(l_k)}` for `l_k` above the gap.
struct GalerkinBasis {
    /// Complex coefficient vectors of the real basis elements, one per column.
    omega: CMatrix,
    /// Gradients of the basis elements, flattened.
    grad_omega: CMatrix,
    /// Index of the eigenvalue cluster each column belongs to.
    cluster: Vec<usize>,
    clusters: usize,
}

fn galerkin_basis(space: &DirichletSpace) -> Result<GalerkinBasis> {
    let kd = space.kernel_dim();
    let lambda = space.eigenvalues();
    let v = space.eigenvectors();
    let d = lambda.len();
    let m = 2 * (d - kd);
    let mut omega = CMatrix::zeros(d, m);
    let mut cluster = Vec::with_capacity(m);
    let tol = 1e-8 * space.max_eigenvalue().abs().max(1e-300);
    let mut current = 0;
    for (slot, k) in (kd..d).enumerate() {
        if slot > 0 && lambda[k] - lambda[k - 1] > tol {
            current += 1;
        }
        let w = v.column(k) / C64::from(lambda[k].sqrt());
        omega.set_column(2 * slot, &w);
        omega.set_column(2 * slot + 1, &(&w * I));
        cluster.push(current);
        cluster.push(current);
    }
    let grad_omega = gradient_matrix(space)? * &omega;
    Ok(GalerkinBasis { omega, grad_omega, cluster, clusters: if m == 0 { 0 } else { current + 1 } })
}

/// Galerkin system `V(d)_k = Re <F(sum_j d_j d w_j), d w_k> - Re <f, w_k>` on active coordinates.
struct GalerkinSystem<'a> {
    space: &'a DirichletSpace,
    basis: &'a GalerkinBasis,
    map: &'a NonlinearMap,
    f_proj: DVector<f64>,
    active: Vec<usize>,
}

impl GalerkinSystem<'_> {
    fn eval(&self, d: &DVector<f64>) -> Result<DVector<f64>> {
        let mut coords = DVector::<C64>::zeros(self.basis.omega.ncols());
        for (i, &j) in self.active.iter().enumerate() {
            coords[j] = C64::from(d[i]);
        }
        let grad_u = &self.basis.grad_omega * coords;
        let h = TangentVector::unflatten(self.space.algebra(), &grad_u)?;
        let fh = self.map.apply(&h).flatten();
        Ok(DVector::from_iterator(
            self.active.len(),
            self.active.iter().map(|&j| self.basis.grad_omega.column(j).dotc(&fh).re - self.f_proj[j]),
        ))
    }

    fn jacobian(&self, d: &DVector<f64>, v0: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = d.len();
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = 1e-6 * (1.0 + d[j].abs());
            let mut dp = d.clone();
            dp[j] += step;
            let col = (self.eval(&dp)? - v0) / step;
            jac.set_column(j, &col);
        }
        Ok(jac)
    }
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Damped Newton with a finite-difference Jacobian, falling back to a fixed-point iteration.
fn solve_system(
    sys: &GalerkinSystem<'_>,
    mut d: DVector<f64>,
    tol: f64,
    max_iter: usize,
    flags: &mut Vec<String>,
) -> Result<(DVector<f64>, usize)> {
    let mut iterations = 0;
    let mut v = sys.eval(&d)?;
    let mut newton_ok = true;
    while sup_norm(&v) > tol && iterations < max_iter {
        iterations += 1;
        let jac = sys.jacobian(&d, &v)?;
        let Some(delta) = jac.lu().solve(&(-&v)) else {
            newton_ok = false;
            break;
        };
        let phi = v.norm_squared();
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &d + &delta * s;
            let vt = sys.eval(&trial)?;
            if vt.norm_squared() <= (1.0 - 2e-4 * s) * phi {
                d = trial;
                v = vt;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            newton_ok = false;
            break;
        }
    }
    if newton_ok && sup_norm(&v) <= tol {
        return Ok((d, iterations));
    }
    flags.push("newton_fallback_fixed_point".into());
    let c = &sys.map.constants;
    let lipschitz = c.growth.max(1e-12);
    let step = match c.strong_monotonicity {
        Some(theta) if theta > 0.0 => theta / (lipschitz * lipschitz),
        _ => 1.0 / lipschitz,
    };
    while sup_norm(&v) > tol {
        if iterations >= max_iter {
            return Err(Error::NotConverged { iterations, residual: sup_norm(&v) });
        }
        d -= &v * step;
        v = sys.eval(&d)?;
        iterations += 1;
    }
    Ok((d, iterations))
}

/// Solve `d^* F(d u) = f` weakly by Galerkin continuation over eigenvalue clusters.
pub fn solve_quasilinear(
    space: &DirichletSpace,
    map: &NonlinearMap,
    f: &Element,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let rhs = gate_rhs(space, f, opts)?;
    let mut flags = rhs.flags.clone();
    if !opts.force {
        let probe = probe_map(space, map, opts.probe_samples, opts.seed)?;
        let failure = probe
            .report
            .failures()
            .next()
            .map(|bad| format!("{} = {:.3e} (tolerance {:.3e})", bad.name, bad.value, bad.tolerance));
        if let Some(msg) = failure {
            return Err(Error::ProbeFailure(msg));
        }
    } else {
        flags.push("probe_skipped".into());
    }
    let f_used = space.algebra().wrap(rhs.f.clone());
    let basis = galerkin_basis(space)?;
    let m = basis.omega.ncols();
    let f_proj = DVector::from_iterator(m, (0..m).map(|j| basis.omega.column(j).dotc(&rhs.f).re));
    let tol = tolerance_for(opts, &rhs.f);
    let newton_tol = 1e-3 * tol;

    let mut start = DVector::<f64>::zeros(m);
    if let Some(seed) = opts.initial_seed {
        let mut rng = battery::rng(seed);
        let scale = f_proj.norm().max(1.0);
        for x in start.iter_mut() {
            *x = scale * rng.random_range(-1.0..1.0);
        }
    }

    let mut level_residuals = Vec::with_capacity(basis.clusters);
    let mut iterations = 0;
    let mut d_full = start.clone();
    for level in 0..basis.clusters {
        let active: Vec<usize> = (0..m).filter(|&j| basis.cluster[j] <= level).collect();
        let sys = GalerkinSystem { space, basis: &basis, map, f_proj: f_proj.clone(), active: active.clone() };
        let d0 = DVector::from_iterator(active.len(), active.iter().map(|&j| d_full[j]));
        let (d, its) = solve_system(&sys, d0, newton_tol, opts.max_iterations, &mut flags)?;
        iterations += its;
        d_full.fill(0.0);
        for (i, &j) in active.iter().enumerate() {
            d_full[j] = d[i];
        }
        // coordinates not yet active keep their initial values for the next level's warm start
        for j in 0..m {
            if basis.cluster[j] > level {
                d_full[j] = start[j];
            }
        }
        let u = solution_from(space, &basis, &d_full, level)?;
        level_residuals.push(weak_residual(space, map, &u, &f_used)?);
    }
    let last = basis.clusters.saturating_sub(1);
    let u = solution_from(space, &basis, &d_full, last)?;
    let residual_weak = weak_residual(space, map, &u, &f_used)?;
    flags.sort();
    flags.dedup();
    if residual_weak > tol {
        return Err(Error::NotConverged { iterations, residual: residual_weak });
    }
    Ok(SolveReport {
        solution: u,
        residual_weak,
        residual_strong: None,
        iterations,
        galerkin_dim: m,
        kernel_component_of_f: rhs.kernel_mass,
        flags,
        energy_history: Vec::new(),
        level_residuals,
    })
}

fn solution_from(space: &DirichletSpace, basis: &GalerkinBasis, d: &DVector<f64>, level: usize) -> Result<Element> {
    let coords = DVector::<C64>::from_iterator(
        d.len(),
        d.iter().enumerate().map(|(j, &x)| if basis.cluster[j] <= level { C64::from(x) } else { C64::from(0.0) }),
    );
    space.algebra().element(&basis.omega * coords)
}

/// Empirical hypothesis constants of a nonlinear map on a seeded battery.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    /// `min Re <F(h) - F(v), h - v>`.
    pub monotonicity_margin: f64,
    /// `min Re <F(h) - F(v), h - v> / ||h - v||^2`.
    pub monotonicity_ratio: f64,
    /// `max ||F(h)|| / (1 + ||h||)`.
    pub growth_ratio: f64,
    /// `min Re <F(h), h> - c1 ||h|| + c2`.
    pub coercivity_margin: f64,
    /// `min Re <F(h), h> - c1 ||h||^2 + c2`.
    pub coercivity_margin_quadratic: f64,
    pub report: Report,
}

fn random_tangent(space: &DirichletSpace, rng: &mut battery::BatteryRng, k: usize) -> TangentVector {
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let comps = (0..k).map(|_| battery::element(space.algebra(), rng, None).scale_real(scale)).collect();
    TangentVector::new(comps)
}

/// Probe monotonicity, growth and coercivity of `F` on random pairs in `H`.
pub fn probe_map(space: &DirichletSpace, map: &NonlinearMap, samples: usize, seed: u64) -> Result<ProbeReport> {
    let k = crate::tangent::direction_count(space);
    let c = map.constants;
    let mut rng = battery::rng(seed);
    let mut mono = f64::INFINITY;
    let mut mono_ratio = f64::INFINITY;
    let mut growth = 0.0_f64;
    let mut coer = f64::INFINITY;
    let mut coer_q = f64::INFINITY;
    for _ in 0..samples {
        let h = random_tangent(space, &mut rng, k);
        let v = random_tangent(space, &mut rng, k);
        let fh = map.apply(&h);
        let fv = map.apply(&v);
        let diff = h.sub(&v)?;
        let m = fh.sub(&fv)?.inner(&diff)?.re;
        mono = mono.min(m);
        let dn = diff.norm().powi(2);
        if dn > 0.0 {
            mono_ratio = mono_ratio.min(m / dn);
        }
        for (x, fx) in [(&h, &fh), (&v, &fv)] {
            let n = x.norm();
            growth = growth.max(fx.norm() / (1.0 + n));
            let pairing = fx.inner(x)?.re;
            coer = coer.min(pairing - c.coercivity * n + c.offset);
            coer_q = coer_q.min(pairing - c.coercivity * n * n + c.offset);
        }
    }
    let mut report = Report::default();
    report.push(Check::margin("monotonicity", mono_ratio, 1e-12));
    report.push(Check::at_most("growth", growth - c.growth, 1e-12 * c.growth.max(1.0)));
    report.push(Check::margin("coercivity", coer, 1e-12));
    if let Some(theta) = c.strong_monotonicity {
        report.push(Check::margin("strong_monotonicity", mono_ratio - theta, 1e-10 * theta.max(1.0)));
    }
    Ok(ProbeReport {
        monotonicity_margin: mono,
        monotonicity_ratio: mono_ratio,
        growth_ratio: growth,
        coercivity_margin: coer,
        coercivity_margin_quadratic: coer_q,
        report,
    })
}
