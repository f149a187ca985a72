//! Concrete noncommutative measure spaces `(N, tau)`.
//!
//! Three backends are provided:
//!
//! * `MatrixAlgebra`: `M_n(C)` with the unnormalized trace. Coefficients are the
//!   matrix entries in row-major order, `data[i * n + j] = a_ij`.
//! * `NCTorus`: the rotation algebra generated by unitaries `U`, `V` with
//!   `VU = e^{2 pi i theta} UV`, truncated to monomials `U^n V^m` with `|n|, |m| <= N`.
//!   Coefficient `alpha_{n,m}` is stored at `(n + N) * (2N + 1) + (m + N)`, i.e. row-major
//!   over `n` then `m`. The trace reads off `alpha_{0,0}`.
//! * `CyclicGroup`: the convolution algebra of `Z_q`, `data[g] = f(g)`, with trace `f(0)`.
//!
//! In all three cases the coefficient basis is orthonormal for `<a, b> = tau(a^* b)`, so the
//! L2 inner product is the Euclidean one on coefficients.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cis_turns, hermitian_eigen, hermitian_function, min_eigenvalue, spectral_norm, CMatrix,
    CVector, C64, ONE, ZERO,
};

/// Explicit rational rotation parameter `theta = p / q` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rational {
    pub p: u64,
    pub q: u64,
}

/// Which concrete noncommutative measure space is in play.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum AlgebraDescriptor {
    MatrixAlgebra {
        n: usize,
        /// Self-adjoint generators `v_j`, each serialized as `n * n` `[re, im]` pairs, row-major.
        #[serde(with = "matrix_list")]
        generators: Vec<CMatrix>,
    },
    #[serde(rename = "NCTorus")]
    NcTorus {
        #[serde(rename = "N")]
        radius: usize,
        theta: f64,
        /// Present only when `theta` is declared rational; never inferred.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rational: Option<Rational>,
    },
    CyclicGroup { q: usize, lengths: Vec<f64> },
}

mod matrix_list {
    use super::{CMatrix, C64};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(mats: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<C64>> = mats
            .iter()
            .map(|m| {
                let n = m.nrows();
                (0..n * n).map(|k| m[(k / n, k % n)]).collect()
            })
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let rows: Vec<Vec<C64>> = Vec::deserialize(d)?;
        rows.into_iter()
            .map(|flat| {
                let n = (flat.len() as f64).sqrt().round() as usize;
                if n * n != flat.len() {
                    return Err(D::Error::custom(format!(
                        "generator has {} entries, not a square count",
                        flat.len()
                    )));
                }
                Ok(CMatrix::from_row_slice(n, n, &flat))
            })
            .collect()
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Coefficients `mu_k >= 0` (k = 0..q) with `l(g) = sum_k mu_k (1 - cos(2 pi k g / q))`.
///
/// Exists with nonnegative entries exactly when `l` is conditionally of negative type.
pub fn cyclic_levy_weights(lengths: &[f64]) -> Vec<f64> {
    let q = lengths.len();
    (0..q)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            let hat: C64 = lengths
                .iter()
                .enumerate()
                .map(|(g, &l)| cis_turns(-((g * k) as f64) / q as f64) * l)
                .sum();
            -hat.re / q as f64
        })
        .collect()
}

/// Smallest eigenvalue of `[l(g) + l(h) - l(g - h)]` on the zero-sum subspace.
pub fn negative_type_margin(lengths: &[f64]) -> f64 {
    let q = lengths.len();
    let kernel = DMatrix::from_fn(q, q, |g, h| {
        lengths[g] + lengths[h] - lengths[(g + q - h) % q]
    });
    let proj = DMatrix::from_fn(q, q, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / q as f64);
    let restricted = &proj * kernel * &proj;
    // the constant vector is an exact null vector of the projection; drop it
    let mut vals: Vec<f64> = restricted.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    let zero_pos = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    vals.remove(zero_pos);
    vals.first().copied().unwrap_or(0.0)
}

impl AlgebraDescriptor {
    pub fn qubit(generators: Vec<CMatrix>) -> Self {
        AlgebraDescriptor::MatrixAlgebra { n: 2, generators }
    }

    pub fn torus(radius: usize, theta: f64) -> Self {
        AlgebraDescriptor::NcTorus { radius, theta, rational: None }
    }

    pub fn rational_torus(radius: usize, p: u64, q: u64) -> Self {
        AlgebraDescriptor::NcTorus {
            radius,
            theta: p as f64 / q as f64,
            rational: Some(Rational { p, q }),
        }
    }

    pub fn cyclic(lengths: Vec<f64>) -> Self {
        AlgebraDescriptor::CyclicGroup { q: lengths.len(), lengths }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDescriptor(msg));
        match self {
            AlgebraDescriptor::MatrixAlgebra { n, generators } => {
                if *n == 0 {
                    return bad("matrix dimension must be >= 1".into());
                }
                for (j, v) in generators.iter().enumerate() {
                    if v.shape() != (*n, *n) {
                        return bad(format!("generator {j} is not {n}x{n}"));
                    }
                    let defect = (v - v.adjoint()).norm();
                    if defect > 1e-12 * (1.0 + v.norm()) {
                        return bad(format!("generator {j} is not self-adjoint (defect {defect:.3e})"));
                    }
                }
            }
            AlgebraDescriptor::NcTorus { radius, theta, rational } => {
                if *radius == 0 {
                    return bad("torus truncation radius must be >= 1".into());
                }
                if !(0.0..1.0).contains(theta) {
                    return bad(format!("theta = {theta} outside [0, 1)"));
                }
                if let Some(Rational { p, q }) = rational {
                    if *q == 0 || p >= q || gcd(*p, *q) != 1 {
                        return bad(format!("rational theta {p}/{q} is not a reduced fraction in [0, 1)"));
                    }
                    if (theta - *p as f64 / *q as f64).abs() > 1e-15 {
                        return bad(format!("theta = {theta} disagrees with declared {p}/{q}"));
                    }
                }
            }
            AlgebraDescriptor::CyclicGroup { q, lengths } => {
                if *q < 2 {
                    return bad("group order must be >= 2".into());
                }
                if lengths.len() != *q {
                    return bad(format!("expected {q} lengths, got {}", lengths.len()));
                }
                if lengths.iter().any(|l| !l.is_finite() || *l < 0.0) {
                    return bad("lengths must be finite and nonnegative".into());
                }
                if lengths[0] != 0.0 {
                    return bad("l(0) must be 0".into());
                }
                let scale = lengths.iter().copied().fold(1.0, f64::max);
                for k in 1..*q {
                    if (lengths[k] - lengths[q - k]).abs() > 1e-12 * scale {
                        return bad(format!("l({k}) != l({})", q - k));
                    }
                }
                let margin = negative_type_margin(lengths);
                if margin < -1e-10 * scale * *q as f64 {
                    return bad(format!(
                        "length function is not conditionally of negative type (margin {margin:.3e})"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Complex dimension of the coefficient space (= dim L2).
    pub fn dim(&self) -> usize {
        match self {
            AlgebraDescriptor::MatrixAlgebra { n, .. } => n * n,
            AlgebraDescriptor::NcTorus { radius, .. } => (2 * radius + 1).pow(2),
            AlgebraDescriptor::CyclicGroup { q, .. } => *q,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AlgebraDescriptor::MatrixAlgebra { .. } => "MatrixAlgebra",
            AlgebraDescriptor::NcTorus { .. } => "NCTorus",
            AlgebraDescriptor::CyclicGroup { .. } => "CyclicGroup",
        }
    }
}

/// Shared handle to a validated backend.
#[derive(Clone, Debug)]
pub struct Algebra {
    desc: Arc<AlgebraDescriptor>,
    eps_pos: f64,
}

impl PartialEq for Algebra {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.desc, &other.desc) || *self.desc == *other.desc
    }
}

impl Algebra {
    pub fn new(desc: AlgebraDescriptor) -> Result<Self> {
        desc.validate()?;
        let mut alg = Algebra { desc: Arc::new(desc), eps_pos: 0.0 };
        alg.eps_pos = 1e-10 * alg.representation_dim() as f64;
        Ok(alg)
    }

    pub fn with_positivity_tolerance(mut self, eps: f64) -> Self {
        self.eps_pos = eps;
        self
    }

    pub fn descriptor(&self) -> &AlgebraDescriptor {
        &self.desc
    }

    pub fn positivity_tolerance(&self) -> f64 {
        self.eps_pos
    }

    pub fn dim(&self) -> usize {
        self.desc.dim()
    }

    /// Dimension of the matrices produced by [`Element::represent`].
    pub fn representation_dim(&self) -> usize {
        match &*self.desc {
            AlgebraDescriptor::MatrixAlgebra { n, .. } => *n,
            AlgebraDescriptor::NcTorus { rational: Some(r), .. } => r.q as usize,
            AlgebraDescriptor::NcTorus { .. } => self.dim(),
            AlgebraDescriptor::CyclicGroup { q, .. } => *q,
        }
    }

    pub fn fidelity(&self) -> Fidelity {
        match &*self.desc {
            AlgebraDescriptor::NcTorus { rational: Some(_), .. } => Fidelity::ClockShift,
            AlgebraDescriptor::NcTorus { .. } => Fidelity::Approximate,
            _ => Fidelity::Exact,
        }
    }

    pub fn element(&self, coeffs: CVector) -> Result<Element> {
        if coeffs.len() != self.dim() {
            return Err(Error::BackendMismatch(format!(
                "{} coefficients for a backend of dimension {}",
                coeffs.len(),
                self.dim()
            )));
        }
        Ok(Element { algebra: self.clone(), coeffs })
    }

    pub(crate) fn wrap(&self, coeffs: CVector) -> Element {
        debug_assert_eq!(coeffs.len(), self.dim());
        Element { algebra: self.clone(), coeffs }
    }

    pub fn zero(&self) -> Element {
        self.wrap(CVector::zeros(self.dim()))
    }

    pub fn one(&self) -> Element {
        let mut c = CVector::zeros(self.dim());
        match &*self.desc {
            AlgebraDescriptor::MatrixAlgebra { n, .. } => {
                for i in 0..*n {
                    c[i * n + i] = ONE;
                }
            }
            AlgebraDescriptor::NcTorus { .. } => c[self.torus_index(0, 0).unwrap()] = ONE,
            AlgebraDescriptor::CyclicGroup { .. } => c[0] = ONE,
        }
        self.wrap(c)
    }

    pub fn basis_element(&self, i: usize) -> Element {
        let mut c = CVector::zeros(self.dim());
        c[i] = ONE;
        self.wrap(c)
    }

    pub fn from_matrix(&self, m: &CMatrix) -> Result<Element> {
        match &*self.desc {
            AlgebraDescriptor::MatrixAlgebra { n, .. } if m.shape() == (*n, *n) => {
                Ok(self.wrap(CVector::from_fn(n * n, |k, _| m[(k / n, k % n)])))
            }
            _ => Err(Error::BackendMismatch("from_matrix needs a matching MatrixAlgebra".into())),
        }
    }

    /// The monomial `U^n V^m` of a torus backend.
    pub fn monomial(&self, n: i64, m: i64) -> Result<Element> {
        let idx = self.torus_index(n, m).ok_or_else(|| {
            Error::BackendMismatch(format!("monomial U^{n}V^{m} is outside the torus window"))
        })?;
        Ok(self.basis_element(idx))
    }

    /// Delta function at `g` in a cyclic backend.
    pub fn delta(&self, g: usize) -> Result<Element> {
        match &*self.desc {
            AlgebraDescriptor::CyclicGroup { q, .. } => Ok(self.basis_element(g % q)),
            _ => Err(Error::BackendMismatch("delta needs a CyclicGroup backend".into())),
        }
    }

    pub fn torus_radius(&self) -> Option<usize> {
        match &*self.desc {
            AlgebraDescriptor::NcTorus { radius, .. } => Some(*radius),
            _ => None,
        }
    }

    /// Coefficient slot of `U^n V^m`, if inside the window.
    pub fn torus_index(&self, n: i64, m: i64) -> Option<usize> {
        let r = self.torus_radius()? as i64;
        if n.abs() > r || m.abs() > r {
            return None;
        }
        let side = 2 * r + 1;
        Some(((n + r) * side + (m + r)) as usize)
    }

    /// Exponents `(n, m)` stored at slot `idx`.
    pub fn torus_exponents(&self, idx: usize) -> Option<(i64, i64)> {
        let r = self.torus_radius()? as i64;
        let side = 2 * r + 1;
        let idx = idx as i64;
        Some((idx / side - r, idx % side - r))
    }

    /// `e^{2 pi i theta k}`, using exact residues when theta is declared rational.
    pub fn torus_phase(&self, k: i64) -> C64 {
        match &*self.desc {
            AlgebraDescriptor::NcTorus { rational: Some(Rational { p, q }), .. } => {
                let q = *q as i64;
                let r = ((*p as i64 % q) * (k % q)).rem_euclid(q);
                cis_turns(r as f64 / q as f64)
            }
            AlgebraDescriptor::NcTorus { theta, .. } => cis_turns(theta * k as f64),
            _ => ONE,
        }
    }

    fn check(&self, other: &Algebra) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::BackendMismatch(format!(
                "{} element combined with {} element",
                self.desc.kind_name(),
                other.desc.kind_name()
            )))
        }
    }

    pub(crate) fn product_coeffs(&self, a: &CVector, b: &CVector) -> (CVector, f64) {
        match &*self.desc {
            AlgebraDescriptor::MatrixAlgebra { n, .. } => {
                let am = CMatrix::from_row_slice(*n, *n, a.as_slice());
                let bm = CMatrix::from_row_slice(*n, *n, b.as_slice());
                let p = am * bm;
                (CVector::from_fn(n * n, |k, _| p[(k / n, k % n)]), 0.0)
            }
            AlgebraDescriptor::CyclicGroup { q, .. } => {
                let mut out = CVector::zeros(*q);
                for (y, &fy) in a.iter().enumerate() {
                    if fy == ZERO {
                        continue;
                    }
                    for (z, &gz) in b.iter().enumerate() {
                        out[(y + z) % q] += fy * gz;
                    }
                }
                (out, 0.0)
            }
            AlgebraDescriptor::NcTorus { radius, .. } => {
                let r = *radius as i64;
                let mut out = CVector::zeros(self.dim());
                let mut dropped = 0.0;
                let support_b: Vec<(usize, C64)> =
                    b.iter().enumerate().filter(|(_, z)| **z != ZERO).map(|(i, z)| (i, *z)).collect();
                // leaked mass accumulates per target monomial, so keep a sparse map of outside hits
                let mut outside: std::collections::HashMap<(i64, i64), C64> = Default::default();
                for (ia, &za) in a.iter().enumerate() {
                    if za == ZERO {
                        continue;
                    }
                    let (n, m) = self.torus_exponents(ia).unwrap();
                    for &(ib, zb) in &support_b {
                        let (p, q) = self.torus_exponents(ib).unwrap();
                        let c = za * zb * self.torus_phase(m * p);
                        let (tn, tm) = (n + p, m + q);
                        if tn.abs() <= r && tm.abs() <= r {
                            out[self.torus_index(tn, tm).unwrap()] += c;
                        } else {
                            *outside.entry((tn, tm)).or_insert(ZERO) += c;
                        }
                    }
                }
                for z in outside.values() {
                    dropped += z.norm_sqr();
                }
                (out, dropped.sqrt())
            }
        }
    }

    pub(crate) fn adjoint_coeffs(&self, a: &CVector) -> CVector {
        match &*self.desc {
            AlgebraDescriptor::MatrixAlgebra { n, .. } => {
                CVector::from_fn(n * n, |k, _| a[(k % n) * n + k / n].conj())
            }
            AlgebraDescriptor::CyclicGroup { q, .. } => {
                CVector::from_fn(*q, |g, _| a[(q - g) % q].conj())
            }
            AlgebraDescriptor::NcTorus { .. } => CVector::from_fn(self.dim(), |k, _| {
                let (n, m) = self.torus_exponents(k).unwrap();
                // (U^{-n}V^{-m})^* = e^{2 pi i theta nm} U^n V^m
                let src = self.torus_index(-n, -m).unwrap();
                a[src].conj() * self.torus_phase(n * m)
            }),
        }
    }

    /// Clock matrix `diag(omega^k)` and shift `S e_k = e_{k-1}` with `SC = omega CS`.
    fn clock_shift(&self, n: i64, m: i64) -> CMatrix {
        let q = self.representation_dim();
        let qi = q as i64;
        let mut out = CMatrix::zeros(q, q);
        for k in 0..qi {
            let row = (k - m).rem_euclid(qi);
            out[(row as usize, k as usize)] = self.torus_phase(n * row);
        }
        out
    }

    fn represent_coeffs(&self, a: &CVector) -> CMatrix {
        match &*self.desc {
            AlgebraDescriptor::MatrixAlgebra { n, .. } => CMatrix::from_row_slice(*n, *n, a.as_slice()),
            AlgebraDescriptor::CyclicGroup { q, .. } => {
                CMatrix::from_fn(*q, *q, |x, y| a[(x + q - y) % q])
            }
            AlgebraDescriptor::NcTorus { rational: Some(_), .. } => {
                let q = self.representation_dim();
                let mut out = CMatrix::zeros(q, q);
                for (k, &z) in a.iter().enumerate() {
                    if z != ZERO {
                        let (n, m) = self.torus_exponents(k).unwrap();
                        out += self.clock_shift(n, m) * z;
                    }
                }
                out
            }
            AlgebraDescriptor::NcTorus { .. } => {
                let d = self.dim();
                let mut out = CMatrix::zeros(d, d);
                for col in 0..d {
                    let (prod, _) = self.product_coeffs(a, &self.basis_element(col).coeffs);
                    out.set_column(col, &prod);
                }
                out
            }
        }
    }

    /// Discrete Fourier transform `f^(k) = sum_g f(g) e^{-2 pi i g k / q}`.
    pub(crate) fn dft(f: &CVector) -> CVector {
        let q = f.len();
        CVector::from_fn(q, |k, _| {
            f.iter()
                .enumerate()
                .map(|(g, &z)| z * cis_turns(-(((g * k) % q) as f64) / q as f64))
                .sum()
        })
    }

    pub(crate) fn idft(hat: &CVector) -> CVector {
        let q = hat.len();
        CVector::from_fn(q, |g, _| {
            hat.iter()
                .enumerate()
                .map(|(k, &z)| z * cis_turns((((g * k) % q) as f64) / q as f64))
                .sum::<C64>()
                / q as f64
        })
    }

    /// Apply a real function to a self-adjoint element through its spectrum.
    fn functional_calculus(&self, a: &Element, f: impl Fn(f64) -> f64) -> Result<Element> {
        match &*self.desc {
            AlgebraDescriptor::MatrixAlgebra { n, .. } => {
                let m = hermitian_function(&self.represent_coeffs(&a.coeffs), f);
                Ok(self.wrap(CVector::from_fn(n * n, |k, _| m[(k / n, k % n)])))
            }
            AlgebraDescriptor::CyclicGroup { .. } => {
                let hat = Self::dft(&a.coeffs);
                Ok(self.wrap(Self::idft(&hat.map(|z| C64::from(f(z.re))))))
            }
            AlgebraDescriptor::NcTorus { .. } => {
                let unit = self.torus_index(0, 0).unwrap();
                let scalar_only = a.coeffs.iter().enumerate().all(|(k, z)| k == unit || *z == ZERO);
                if !scalar_only {
                    return Err(Error::NotRepresentable(
                        "torus spectral calculus is only exact on multiples of the unit".into(),
                    ));
                }
                let mut c = CVector::zeros(self.dim());
                c[unit] = C64::from(f(a.coeffs[unit].re));
                Ok(self.wrap(c))
            }
        }
    }
}

/// How much the matrix returned by [`Element::represent`] can be trusted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    /// Faithful *-isomorphism onto its image.
    Exact,
    /// Clock-shift *-homomorphism `M_q` for rational theta; exact on products that stay in the window.
    ClockShift,
    /// Left-regular action on the truncation window (irrational theta).
    Approximate,
}

#[derive(Clone, Debug)]
pub struct Representation {
    pub matrix: CMatrix,
    pub fidelity: Fidelity,
}

/// One element of the algebra / of `L2(tau)`.
#[derive(Clone, Debug)]
pub struct Element {
    algebra: Algebra,
    coeffs: CVector,
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra && self.coeffs == other.coeffs
    }
}

impl Element {
    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn coeffs(&self) -> &CVector {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVector {
        self.coeffs
    }

    /// Product; torus products are cut back to the window (see [`Element::mul_tracked`]).
    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.mul_tracked(other).map(|(e, _)| e)
    }

    /// Product together with the L2 norm of whatever fell outside the torus window.
    pub fn mul_tracked(&self, other: &Element) -> Result<(Element, f64)> {
        self.algebra.check(&other.algebra)?;
        let (c, dropped) = self.algebra.product_coeffs(&self.coeffs, &other.coeffs);
        Ok((self.algebra.wrap(c), dropped))
    }

    pub fn adjoint(&self) -> Element {
        self.algebra.wrap(self.algebra.adjoint_coeffs(&self.coeffs))
    }

    pub fn trace(&self) -> C64 {
        match self.algebra.descriptor() {
            AlgebraDescriptor::MatrixAlgebra { n, .. } => (0..*n).map(|i| self.coeffs[i * n + i]).sum(),
            AlgebraDescriptor::NcTorus { .. } => self.coeffs[self.algebra.torus_index(0, 0).unwrap()],
            AlgebraDescriptor::CyclicGroup { .. } => self.coeffs[0],
        }
    }

    /// `<a, b> = tau(a^* b)`, antilinear in `self`.
    pub fn inner(&self, other: &Element) -> Result<C64> {
        self.algebra.check(&other.algebra)?;
        Ok(self.coeffs.dotc(&other.coeffs))
    }

    pub fn norm_l2(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.algebra.check(&other.algebra)?;
        Ok(self.algebra.wrap(&self.coeffs + &other.coeffs))
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.algebra.check(&other.algebra)?;
        Ok(self.algebra.wrap(&self.coeffs - &other.coeffs))
    }

    pub fn scale(&self, t: C64) -> Element {
        self.algebra.wrap(&self.coeffs * t)
    }

    pub fn scale_real(&self, t: f64) -> Element {
        self.scale(C64::from(t))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| *z == ZERO)
    }

    /// `||a - a^*|| <= 1e-10 ||a||` in L2.
    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint_defect() <= 1e-10 * self.norm_l2()
    }

    pub fn self_adjoint_defect(&self) -> f64 {
        (&self.coeffs - self.algebra.adjoint_coeffs(&self.coeffs)).norm()
    }

    pub fn represent(&self) -> Representation {
        Representation {
            matrix: self.algebra.represent_coeffs(&self.coeffs),
            fidelity: self.algebra.fidelity(),
        }
    }

    /// Left-regular action on the coefficient window (torus) or `represent` elsewhere.
    pub fn left_multiplication(&self) -> CMatrix {
        match self.algebra.descriptor() {
            AlgebraDescriptor::NcTorus { .. } => {
                let d = self.algebra.dim();
                let mut out = CMatrix::zeros(d, d);
                for col in 0..d {
                    let (prod, _) =
                        self.algebra.product_coeffs(&self.coeffs, &self.algebra.basis_element(col).coeffs);
                    out.set_column(col, &prod);
                }
                out
            }
            _ => self.represent().matrix,
        }
    }

    /// Largest singular value of the represented operator.
    ///
    /// For the torus this is the norm of left multiplication compressed to the window, which is
    /// exactly the norm of the truncated module action.
    pub fn operator_norm(&self) -> f64 {
        match self.algebra.descriptor() {
            AlgebraDescriptor::CyclicGroup { .. } => {
                Algebra::dft(&self.coeffs).iter().map(|z| z.norm()).fold(0.0, f64::max)
            }
            AlgebraDescriptor::NcTorus { .. } => spectral_norm(&self.left_multiplication()),
            AlgebraDescriptor::MatrixAlgebra { .. } => spectral_norm(&self.represent().matrix),
        }
    }

    /// Smallest eigenvalue of the Hermitian part of the positivity representation.
    pub fn positivity_witness(&self) -> f64 {
        match self.algebra.descriptor() {
            AlgebraDescriptor::CyclicGroup { .. } => {
                Algebra::dft(&self.coeffs).iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
            }
            _ => min_eigenvalue(&self.represent().matrix),
        }
    }

    fn require_self_adjoint(&self) -> Result<()> {
        let defect = self.self_adjoint_defect();
        let tolerance = 1e-10 * self.norm_l2();
        if defect > tolerance {
            return Err(Error::NotSelfAdjoint { defect, tolerance });
        }
        Ok(())
    }

    /// Jordan decomposition `a = a+ - a-` of a self-adjoint element.
    pub fn positive_decompose(&self) -> Result<(Density, Density)> {
        self.require_self_adjoint()?;
        let alg = &self.algebra;
        let plus = alg.functional_calculus(self, |x| x.max(0.0))?;
        let minus = alg.functional_calculus(self, |x| (-x).max(0.0))?;
        Ok((Density::from_element(plus), Density::from_element(minus)))
    }

    pub fn sqrt_positive(&self) -> Result<Element> {
        self.require_self_adjoint()?;
        let witness = self.positivity_witness();
        let tolerance = self.algebra.positivity_tolerance() * (1.0 + self.norm_l2());
        if witness < -tolerance {
            return Err(Error::NotPositive { witness, tolerance });
        }
        self.algebra.functional_calculus(self, |x| x.max(0.0).sqrt())
    }

    /// `|a| = (a^* a)^{1/2}`.
    pub fn modulus(&self) -> Result<Element> {
        self.adjoint().mul(self)?.sqrt_positive()
    }

    /// The underlying matrix of a matrix backend.
    pub fn as_matrix(&self) -> Option<CMatrix> {
        match self.algebra.descriptor() {
            AlgebraDescriptor::MatrixAlgebra { n, .. } => {
                Some(CMatrix::from_row_slice(*n, *n, self.coeffs.as_slice()))
            }
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementJson {
    backend: AlgebraDescriptor,
    data: Vec<C64>,
}

impl Serialize for Element {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementJson { backend: self.algebra.descriptor().clone(), data: self.coeffs.iter().copied().collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ElementJson::deserialize(d)?;
        let algebra = Algebra::new(raw.backend).map_err(D::Error::custom)?;
        algebra.element(CVector::from_vec(raw.data)).map_err(D::Error::custom)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.algebra.descriptor().kind_name())?;
        for (i, z) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{z}")?;
        }
        write!(f, "]")
    }
}

/// An L1-density `rho`, acting as the functional `f -> tau(rho f)`.
#[derive(Clone, Debug)]
pub struct Density {
    element: Element,
    positivity_witness: f64,
}

impl Density {
    /// Wrap an element, recording (not enforcing) its positivity witness.
    pub fn from_element(element: Element) -> Self {
        let positivity_witness = element.positivity_witness();
        Density { element, positivity_witness }
    }

    /// Wrap an element that must be positive up to the backend tolerance.
    pub fn positive(element: Element) -> Result<Self> {
        let d = Self::from_element(element);
        let tolerance = d.tolerance();
        if d.positivity_witness < -tolerance {
            return Err(Error::NotPositive { witness: d.positivity_witness, tolerance });
        }
        Ok(d)
    }

    fn tolerance(&self) -> f64 {
        self.element.algebra.positivity_tolerance() * (1.0 + self.element.norm_l2())
    }

    pub fn element(&self) -> &Element {
        &self.element
    }

    pub fn into_element(self) -> Element {
        self.element
    }

    pub fn positivity_witness(&self) -> f64 {
        self.positivity_witness
    }

    pub fn is_positive(&self) -> bool {
        self.positivity_witness >= -self.tolerance()
    }

    /// `tau(rho f)`.
    pub fn pair(&self, f: &Element) -> Result<C64> {
        Ok(self.element.mul(f)?.trace())
    }

    /// Total mass `tau(rho)`.
    pub fn total(&self) -> C64 {
        self.element.trace()
    }
}

/// Eigenvalues of the Hermitian part of the representation, ascending.
pub fn represented_spectrum(a: &Element) -> Vec<f64> {
    hermitian_eigen(&a.represent().matrix).0
}
