//! Generators, Markov semigroups, Dirichlet forms and the carré du champ.
//!
//! The generator `Delta` is the positive self-adjoint operator on `L2(tau)` with
//! `P_t = exp(-t Delta)` and `E(a, b) = <a, Delta b>`:
//!
//! * torus: `Delta(U^n V^m) = (n^2 + m^2) U^n V^m`,
//! * matrix algebra: `Delta(a) = sum_j [v_j, [v_j, a]]`,
//! * cyclic group: `Delta(delta_g) = l(g) delta_g`.

use serde::Serialize;

use crate::algebra::{Algebra, AlgebraDescriptor, Density, Element, Fidelity};
use crate::battery;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, min_eigenvalue, CMatrix, CVector, C64, ONE};
use crate::report::{Check, Report};

/// A noncommutative measure space together with a symmetric Markov generator.
#[derive(Clone, Debug)]
pub struct DirichletSpace {
    algebra: Algebra,
    generator: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    kernel_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoincareConstant {
    pub gap: f64,
    #[serde(rename = "C_P")]
    pub constant: f64,
    pub kernel_dim: usize,
}

/// `ad_v = v (x) I - I (x) v^T` on row-major coefficient vectors.
fn commutator_matrix(v: &CMatrix) -> CMatrix {
    let n = v.nrows();
    let id = CMatrix::identity(n, n);
    v.kronecker(&id) - id.kronecker(&v.transpose())
}

pub(crate) fn standard_generator(algebra: &Algebra) -> CMatrix {
    let d = algebra.dim();
    match algebra.descriptor() {
        AlgebraDescriptor::NcTorus { .. } => CMatrix::from_diagonal(&CVector::from_fn(d, |k, _| {
            let (n, m) = algebra.torus_exponents(k).unwrap();
            C64::from((n * n + m * m) as f64)
        })),
        AlgebraDescriptor::CyclicGroup { lengths, .. } => {
            CMatrix::from_diagonal(&CVector::from_fn(d, |g, _| C64::from(lengths[g])))
        }
        AlgebraDescriptor::MatrixAlgebra { generators, .. } => {
            let mut out = CMatrix::zeros(d, d);
            for v in generators {
                let ad = commutator_matrix(v);
                out += &ad * &ad;
            }
            out
        }
    }
}

impl DirichletSpace {
    /// Standard Dirichlet structure of the backend.
    pub fn new(algebra: Algebra) -> Self {
        let generator = standard_generator(&algebra);
        Self::assemble(algebra, generator)
    }

    /// Space with an arbitrary Hermitian generator matrix (used to probe broken generators).
    pub fn from_generator(algebra: Algebra, generator: CMatrix) -> Result<Self> {
        let d = algebra.dim();
        if generator.shape() != (d, d) {
            return Err(Error::InvalidProblem(format!("generator must be {d}x{d}")));
        }
        let defect = (&generator - generator.adjoint()).norm();
        if defect > 1e-10 * (1.0 + generator.norm()) {
            return Err(Error::InvalidProblem(format!("generator is not Hermitian (defect {defect:.3e})")));
        }
        Ok(Self::assemble(algebra, generator))
    }

    fn assemble(algebra: Algebra, generator: CMatrix) -> Self {
        let (eigenvalues, eigenvectors) = hermitian_eigen(&generator);
        let scale = eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let cut = 1e-8 * scale;
        let kernel_dim = if scale == 0.0 {
            eigenvalues.len()
        } else {
            eigenvalues.iter().filter(|&&x| x < cut).count()
        };
        DirichletSpace { algebra, generator, eigenvalues, eigenvectors, kernel_dim }
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn generator_matrix(&self) -> &CMatrix {
        &self.generator
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Eigenvalues below this count as kernel.
    pub fn gap_tolerance(&self) -> f64 {
        1e-8 * self.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    fn check_backend(&self, a: &Element) -> Result<()> {
        if a.algebra() != &self.algebra {
            return Err(Error::BackendMismatch("element does not belong to this Dirichlet space".into()));
        }
        Ok(())
    }

    /// Structural invariants: Hermitian PSD generator, conservativity, eigen reconstruction.
    pub fn invariants(&self) -> Report {
        let mut r = Report::default();
        let scale = self.max_eigenvalue().abs().max(1e-300);
        let herm = (&self.generator - self.generator.adjoint()).norm() / (1.0 + self.generator.norm());
        r.push(Check::at_most("generator_hermitian", herm, 1e-12));
        let min = self.eigenvalues.first().copied().unwrap_or(0.0);
        r.push(Check::margin("generator_psd", min / scale, 1e-10));
        let unit = self.generator_apply(&self.algebra.one()).map(|e| e.norm_l2()).unwrap_or(f64::NAN);
        r.push(Check::at_most("annihilates_unit", unit, 1e-10 * scale));
        let recon = self.reconstruct() - &self.generator;
        let rel = recon.norm() / self.generator.norm().max(1e-300);
        r.push(Check::at_most("eigensystem_reconstruction", rel, 1e-10));
        r
    }

    fn spectral_matrix(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let v = &self.eigenvectors;
        let scaled = CMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * f(self.eigenvalues[j]));
        scaled * v.adjoint()
    }

    fn reconstruct(&self) -> CMatrix {
        self.spectral_matrix(|x| x)
    }

    pub fn generator_apply(&self, a: &Element) -> Result<Element> {
        self.check_backend(a)?;
        Ok(self.algebra.wrap(&self.generator * a.coeffs()))
    }

    /// Matrix of `P_t = exp(-t Delta)` on coefficients.
    pub fn semigroup_matrix(&self, t: f64) -> Result<CMatrix> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        if t == 0.0 {
            let d = self.algebra.dim();
            return Ok(CMatrix::identity(d, d));
        }
        Ok(self.spectral_matrix(|x| (-t * x).exp()))
    }

    pub fn semigroup_apply(&self, t: f64, a: &Element) -> Result<Element> {
        self.check_backend(a)?;
        Ok(self.algebra.wrap(self.semigroup_matrix(t)? * a.coeffs()))
    }

    /// `E(a, b) = <a, Delta b>`.
    pub fn dirichlet_form(&self, a: &Element, b: &Element) -> Result<C64> {
        self.check_backend(a)?;
        self.check_backend(b)?;
        Ok(a.coeffs().dotc(&(&self.generator * b.coeffs())))
    }

    /// `E[a]`.
    pub fn energy(&self, a: &Element) -> Result<f64> {
        Ok(self.dirichlet_form(a, a)?.re)
    }

    /// `Gamma(a, b)` from `2 Gamma(a, b) = Delta(a^*) b + a^* Delta(b) - Delta(a^* b)`.
    pub fn carre_du_champ(&self, a: &Element, b: &Element) -> Result<Density> {
        self.check_backend(a)?;
        self.check_backend(b)?;
        let a_star = a.adjoint();
        let t1 = self.generator_apply(&a_star)?.mul(b)?;
        let t2 = a_star.mul(&self.generator_apply(b)?)?;
        let t3 = self.generator_apply(&a_star.mul(b)?)?;
        let twice = t1.add(&t2)?.sub(&t3)?;
        Ok(Density::from_element(twice.scale_real(0.5)))
    }

    /// `Gamma[a] = Gamma(a, a)`, which must be a positive density.
    pub fn carre_du_champ_sq(&self, a: &Element) -> Result<Density> {
        Density::positive(self.carre_du_champ(a, a)?.into_element())
    }

    /// Component of `a` in `ker Delta`.
    pub fn project_kernel(&self, a: &Element) -> Result<Element> {
        self.check_backend(a)?;
        let k = self.kernel_dim;
        let vk = self.eigenvectors.columns(0, k);
        let coeffs = vk * (vk.adjoint() * a.coeffs());
        Ok(self.algebra.wrap(coeffs))
    }

    /// Orthogonal projection onto `D_perp`, the complement of the kernel.
    pub fn project_perp(&self, a: &Element) -> Result<Element> {
        a.sub(&self.project_kernel(a)?)
    }

    /// Spectral gap and Poincaré constant `C_P = 1 / gap`.
    pub fn poincare_constant(&self) -> Result<PoincareConstant> {
        let gap = *self.eigenvalues.get(self.kernel_dim).ok_or(Error::DegenerateSpace)?;
        if gap <= 0.0 {
            return Err(Error::DegenerateSpace);
        }
        Ok(PoincareConstant { gap, constant: 1.0 / gap, kernel_dim: self.kernel_dim })
    }

    /// Check `||a||^2 <= (C_P + tol) E[a]` on random elements of `D_perp`.
    pub fn verify_poincare(&self, seed: u64, samples: usize) -> Result<Check> {
        let pc = self.poincare_constant()?;
        let mut rng = battery::rng(seed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..samples {
            let a = self.project_perp(&battery::element(&self.algebra, &mut rng, None))?;
            let lhs = a.norm_l2().powi(2);
            let e = self.energy(&a)?;
            worst = worst.max(lhs - pc.constant * e);
        }
        Ok(Check::at_most("poincare_inequality", worst, 1e-10 * pc.constant.max(1.0)))
    }

    /// Choi matrix `sum_ij E_ij (x) P_t(E_A(E_ij))` in the faithful representation, where `E_A`
    /// is the trace-preserving conditional expectation onto the represented algebra.
    pub fn choi_matrix(&self, t: f64) -> Result<CMatrix> {
        let pt = self.semigroup_matrix(t)?;
        match self.algebra.descriptor() {
            AlgebraDescriptor::MatrixAlgebra { n, .. } => {
                let n = *n;
                let mut choi = CMatrix::zeros(n * n, n * n);
                for i in 0..n {
                    for j in 0..n {
                        let image = pt.column(i * n + j);
                        for a in 0..n {
                            for b in 0..n {
                                choi[(i * n + a, j * n + b)] = image[a * n + b];
                            }
                        }
                    }
                }
                Ok(choi)
            }
            AlgebraDescriptor::CyclicGroup { q, .. } => {
                let q = *q;
                let mut choi = CMatrix::zeros(q * q, q * q);
                for i in 0..q {
                    for j in 0..q {
                        let g = (i + q - j) % q;
                        let image = self.algebra.wrap(pt.column(g).into_owned() / C64::from(q as f64));
                        let m = image.represent().matrix;
                        for a in 0..q {
                            for b in 0..q {
                                choi[(i * q + a, j * q + b)] = m[(a, b)];
                            }
                        }
                    }
                }
                Ok(choi)
            }
            AlgebraDescriptor::NcTorus { .. } => Err(Error::NotRepresentable(
                "the torus has no faithful finite representation; complete positivity not checkable".into(),
            )),
        }
    }

    /// Unitality, contraction, complete positivity and trace symmetry of `P_t` at each sample time.
    pub fn markov_check(&self, t_samples: &[f64], seed: u64) -> Result<Report> {
        let mut report = Report::default();
        let tol = 1e-10;
        let one = self.algebra.one();
        let mut rng = battery::rng(seed);
        let support = self.algebra.torus_radius().map(|r| r / 2);
        let exact = self.algebra.fidelity() == Fidelity::Exact;
        let probes: Vec<(Element, Element)> = (0..8)
            .map(|_| {
                (
                    battery::element(&self.algebra, &mut rng, support),
                    battery::element(&self.algebra, &mut rng, support),
                )
            })
            .collect();
        for &t in t_samples {
            let pt = self.semigroup_matrix(t)?;
            let apply = |a: &Element| self.algebra.wrap(&pt * a.coeffs());

            let unit_defect = apply(&one).sub(&one)?.norm_l2() / one.norm_l2();
            report.push(Check::at_most(format!("unitality[t={t}]"), unit_defect, tol));

            let l2_norm = self
                .eigenvalues
                .iter()
                .map(|&x| (-t * x).exp())
                .fold(0.0_f64, f64::max);
            report.push(Check::at_most(format!("contraction_l2[t={t}]"), l2_norm - 1.0, tol));

            if exact {
                let mut worst = f64::NEG_INFINITY;
                for (a, _) in &probes {
                    let ratio = apply(a).operator_norm() / a.operator_norm();
                    worst = worst.max(ratio - 1.0);
                }
                report.push(Check::at_most(format!("contraction_op[t={t}]"), worst, tol));
                let choi = self.choi_matrix(t)?;
                report.push(Check::margin(format!("choi_cp[t={t}]"), min_eigenvalue(&choi), tol));
            } else {
                report.push(Check::skipped(
                    format!("choi_cp[t={t}]"),
                    "approximate representation: complete positivity not checkable",
                ));
            }

            let mut worst = 0.0_f64;
            for (a, b) in &probes {
                let lhs = a.mul(&apply(b))?.trace();
                let rhs = apply(a).mul(b)?.trace();
                let scale = 1.0 + a.norm_l2() * b.norm_l2();
                worst = worst.max((lhs - rhs).norm() / scale);
            }
            report.push(Check::at_most(format!("trace_symmetry[t={t}]"), worst, tol));
        }
        Ok(report)
    }

    /// Smallest eigenvalue of `represent(e^{-2Kt} P_t Gamma[a] - Gamma[P_t a])`.
    pub fn be_margin(&self, k: f64, t: f64, a: &Element) -> Result<f64> {
        let gamma = self.carre_du_champ(a, a)?.into_element();
        let lhs = self.semigroup_apply(t, &gamma)?.scale_real((-2.0 * k * t).exp());
        let rhs = self.carre_du_champ(&self.semigroup_apply(t, a)?, &self.semigroup_apply(t, a)?)?;
        Ok(min_eigenvalue(&lhs.sub(rhs.element())?.represent().matrix))
    }

    /// Bakry–Émery `BE(K, inf)` ordering on a battery, plus the largest `K` the battery admits.
    pub fn be_check(&self, k: f64, t_samples: &[f64], battery: &[Element]) -> Result<BeReport> {
        let mut report = Report::default();
        if self.algebra.fidelity() == Fidelity::Approximate {
            report.push(Check::skipped("be_ordering", "approximate representation"));
            return Ok(BeReport { report, k_supremum: None, skipped: true });
        }
        let tol = 1e-10;
        let passes = |kk: f64| -> Result<bool> {
            for &t in t_samples {
                for a in battery {
                    if self.be_margin(kk, t, a)? < -tol {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        };
        for &t in t_samples {
            let mut worst = f64::INFINITY;
            for a in battery {
                worst = worst.min(self.be_margin(k, t, a)?);
            }
            report.push(Check::margin(format!("be_ordering[K={k},t={t}]"), worst, tol));
        }
        Ok(BeReport { report, k_supremum: self.be_supremum(passes)?, skipped: false })
    }

    fn be_supremum(&self, passes: impl Fn(f64) -> Result<bool>) -> Result<Option<f64>> {
        const CAP: f64 = 1e6;
        let mut lo = 0.0;
        while !passes(lo)? {
            lo = if lo == 0.0 { -1.0 } else { 2.0 * lo };
            if lo < -CAP {
                return Ok(None);
            }
        }
        let mut hi = if lo < 0.0 { lo / 2.0 } else { 1.0 };
        while passes(hi)? {
            lo = hi;
            hi = if hi <= 0.0 { hi / 2.0 + 1.0 } else { 2.0 * hi };
            if hi > CAP {
                return Ok(Some(f64::INFINITY));
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if passes(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(lo))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BeReport {
    pub report: Report,
    /// Largest `K` passing on the battery (`None`: none found, `inf`: unbounded up to the cap).
    pub k_supremum: Option<f64>,
    pub skipped: bool,
}

/// Coefficients of `a` in the generator eigenbasis.
pub fn eigen_coefficients(space: &DirichletSpace, a: &Element) -> CVector {
    space.eigenvectors().adjoint() * a.coeffs()
}

/// Choi matrix of the identity channel on `M_n`: `n` times the maximally entangled projector.
pub fn identity_choi(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            m[(i * n + i, j * n + j)] = ONE;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli;

    fn qubit() -> DirichletSpace {
        DirichletSpace::new(Algebra::new(AlgebraDescriptor::qubit(vec![pauli::z()])).unwrap())
    }

    fn torus(radius: usize) -> DirichletSpace {
        DirichletSpace::new(Algebra::new(AlgebraDescriptor::torus(radius, 0.5 * (5f64.sqrt() - 1.0))).unwrap())
    }

    #[test]
    fn torus_generator_on_monomials() {
        let s = torus(2);
        let a = s.algebra().monomial(2, 1).unwrap();
        let da = s.generator_apply(&a).unwrap();
        assert_eq!(da, a.scale_real(5.0));
        assert!(s.generator_apply(&s.algebra().one()).unwrap().is_zero());
    }

    #[test]
    fn qubit_generator_on_sigma_x() {
        let s = qubit();
        let x = s.algebra().from_matrix(&pauli::x()).unwrap();
        let dx = s.generator_apply(&x).unwrap();
        assert!((dx.coeffs() - x.coeffs() * C64::from(4.0)).norm() < 1e-14);
    }

    #[test]
    fn semigroup_examples() {
        let s = torus(1);
        let uv = s.algebra().monomial(1, 1).unwrap();
        let t = 0.3;
        let p = s.semigroup_apply(t, &uv).unwrap();
        assert!((p.coeffs() - uv.coeffs() * C64::from((-2.0 * t).exp())).norm() < 1e-15);
        let q = qubit();
        let x = q.algebra().from_matrix(&pauli::x()).unwrap();
        let px = q.semigroup_apply(t, &x).unwrap();
        assert!((px.coeffs() - x.coeffs() * C64::from((-4.0 * t).exp())).norm() < 1e-12);
        assert_eq!(q.semigroup_apply(0.0, &x).unwrap(), x);
        assert!(matches!(q.semigroup_apply(-1.0, &x), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn semigroup_law_is_composition() {
        let s = qubit();
        let mut rng = battery::rng(3);
        let a = battery::element(s.algebra(), &mut rng, None);
        let direct = s.semigroup_apply(0.7, &a).unwrap();
        let composed = s.semigroup_apply(0.3, &s.semigroup_apply(0.4, &a).unwrap()).unwrap();
        assert!((direct.coeffs() - composed.coeffs()).norm() < 1e-10);
    }

    #[test]
    fn dirichlet_form_on_torus_modes() {
        let s = torus(2);
        let alg = s.algebra();
        let u = alg.monomial(1, 0).unwrap();
        assert_eq!(s.energy(&u).unwrap(), 1.0);
        assert_eq!(s.energy(&alg.one()).unwrap(), 0.0);
        let a = alg.monomial(2, 1).unwrap().add(&alg.monomial(0, 1).unwrap().scale_real(2.0)).unwrap();
        assert!((s.energy(&a).unwrap() - 9.0).abs() < 1e-13);
    }

    #[test]
    fn carre_du_champ_examples() {
        let q = qubit();
        let x = q.algebra().from_matrix(&pauli::x()).unwrap();
        let g = q.carre_du_champ_sq(&x).unwrap();
        let expected = q.algebra().one().scale_real(4.0);
        assert!((g.element().coeffs() - expected.coeffs()).norm() < 1e-13);
        assert!((g.total().re - q.energy(&x).unwrap()).abs() < 1e-12);
        assert!(q.carre_du_champ_sq(&q.algebra().one()).unwrap().element().norm_l2() < 1e-15);

        let s = torus(2);
        let u = s.algebra().monomial(1, 0).unwrap();
        let gu = s.carre_du_champ_sq(&u).unwrap();
        assert!((gu.element().coeffs() - s.algebra().one().coeffs()).norm() < 1e-14);
        assert!((gu.total().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn poincare_examples() {
        for r in [1, 2, 4] {
            let pc = torus(r).poincare_constant().unwrap();
            assert_eq!((pc.gap, pc.constant, pc.kernel_dim), (1.0, 1.0, 1));
        }
        let pc = qubit().poincare_constant().unwrap();
        assert!((pc.gap - 4.0).abs() < 1e-12 && (pc.constant - 0.25).abs() < 1e-12);
        assert_eq!(pc.kernel_dim, 2);
        let cyc = DirichletSpace::new(Algebra::new(AlgebraDescriptor::cyclic(vec![0.0, 1.0])).unwrap());
        let pc = cyc.poincare_constant().unwrap();
        assert_eq!((pc.gap, pc.constant), (1.0, 1.0));
        assert!(qubit().verify_poincare(1, 50).unwrap().passed);
    }

    #[test]
    fn degenerate_space_has_no_gap() {
        let s = DirichletSpace::new(Algebra::new(AlgebraDescriptor::qubit(vec![])).unwrap());
        assert!(matches!(s.poincare_constant(), Err(Error::DegenerateSpace)));
    }

    #[test]
    fn markov_check_qubit_and_identity_channel() {
        let s = qubit();
        let report = s.markov_check(&[0.1, 1.0, 10.0], 7).unwrap();
        assert!(report.all_passed(), "{report:?}");
        let choi = s.choi_matrix(0.0).unwrap();
        assert!((choi - identity_choi(2)).norm() < 1e-15);
    }

    #[test]
    fn corrupted_generator_fails_contraction() {
        let s = qubit();
        let mut vals = s.eigenvalues().to_vec();
        let last = vals.len() - 1;
        vals[last] = -vals[last];
        let v = s.eigenvectors();
        let d = CMatrix::from_diagonal(&CVector::from_iterator(vals.len(), vals.iter().map(|&x| C64::from(x))));
        let broken = DirichletSpace::from_generator(s.algebra().clone(), v * d * v.adjoint()).unwrap();
        let report = broken.markov_check(&[1.0], 0).unwrap();
        assert!(!report.get("contraction_l2[t=1]").unwrap().passed);
        assert!(!broken.invariants().all_passed());
    }

    #[test]
    fn torus_markov_skips_cp() {
        let report = torus(2).markov_check(&[0.5], 0).unwrap();
        assert!(report.get("choi_cp[t=0.5]").unwrap().skipped);
        assert!(report.all_passed());
    }

    #[test]
    fn be_qubit_supremum_is_four() {
        let s = qubit();
        let mut rng = battery::rng(11);
        let battery: Vec<Element> = (0..4).map(|_| battery::element(s.algebra(), &mut rng, None)).collect();
        let ts = [0.0, 0.1, 1.0, 10.0];
        let be = s.be_check(0.0, &ts, &battery).unwrap();
        assert!(be.report.all_passed());
        let k = be.k_supremum.unwrap();
        assert!((k - 4.0).abs() < 1e-6, "k = {k}");
        let above = s.be_check(k + 0.5, &ts, &battery).unwrap();
        assert!(!above.report.all_passed());
        // t = 0 passes for any K
        let zero = s.be_check(100.0, &[0.0], &battery).unwrap();
        assert!(zero.report.all_passed());
    }

    #[test]
    fn be_rational_torus_flat() {
        let s = DirichletSpace::new(Algebra::new(AlgebraDescriptor::rational_torus(2, 1, 3)).unwrap());
        let mut rng = battery::rng(5);
        let battery: Vec<Element> = (0..3).map(|_| battery::element(s.algebra(), &mut rng, Some(1))).collect();
        let be = s.be_check(0.0, &[0.0, 0.2, 1.0], &battery).unwrap();
        assert!(be.report.all_passed(), "{:?}", be.report);
        let irr = torus(2).be_check(0.0, &[0.1], &battery_irr()).unwrap();
        assert!(irr.skipped);
    }

    fn battery_irr() -> Vec<Element> {
        vec![torus(2).algebra().one()]
    }
}
