//! The symmetric differential calculus `(H, J, d)` attached to a Dirichlet space.
//!
//! The tangent bimodule is realized as a direct sum of copies of `L2(tau)`, one per direction:
//!
//! * matrix algebra: `d_j a = [v_j, a]`, plain bimodule actions, `J(h)_j = -h_j^*`;
//! * torus: `d_1 (U^n V^m) = i n U^n V^m`, `d_2 (U^n V^m) = i m U^n V^m`, plain actions,
//!   `J(h)_j = h_j^*`;
//! * cyclic group `Z_q`: write `l(g) = sum_k mu_k (1 - cos(2 pi k g / q))` with `mu_k >= 0`
//!   (possible exactly when `l` is of negative type) and let `alpha_k` be the dual
//!   automorphism `delta_g -> e^{2 pi i k g / q} delta_g`. There is one direction per `k` with
//!   `mu_k > 0`: `d_k a = sqrt(mu_k / 2) (alpha_k(a) - a)`. Left multiplication on that
//!   direction is twisted, `x . h_k = alpha_k(x) h_k`, and `J` pairs `k` with `-k`:
//!   `J(h)_{-k} = -alpha_{-k}(h_k^*)`. Summing `|d_k f|^2` over `k` reproduces
//!   `E[f] = sum_g l(g) |f(g)|^2`.
//!
//! In every case `div = d^*` is the L2 adjoint and `div . d` is the generator.

use serde::{Deserialize, Serialize};

use crate::algebra::{cyclic_levy_weights, Algebra, AlgebraDescriptor, Density, Element};
use crate::dirichlet::DirichletSpace;
use crate::error::{Error, Result};
use crate::linalg::{cis_turns, CMatrix, CVector, C64, I};

/// An element of the tangent bimodule: one L2 component per direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TangentVector {
    components: Vec<Element>,
}

impl TangentVector {
    pub fn new(components: Vec<Element>) -> Self {
        TangentVector { components }
    }

    pub fn zero(space: &DirichletSpace) -> Self {
        let k = directions(space.algebra()).len();
        TangentVector { components: vec![space.algebra().zero(); k] }
    }

    pub fn components(&self) -> &[Element] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    fn zip_with(&self, other: &TangentVector, f: impl Fn(&Element, &Element) -> Result<Element>) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::BackendMismatch("tangent vectors of different spaces".into()));
        }
        let components = self.components.iter().zip(&other.components).map(|(a, b)| f(a, b)).collect::<Result<_>>()?;
        Ok(TangentVector { components })
    }

    pub fn add(&self, other: &TangentVector) -> Result<Self> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &TangentVector) -> Result<Self> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, t: C64) -> Self {
        TangentVector { components: self.components.iter().map(|c| c.scale(t)).collect() }
    }

    pub fn scale_real(&self, t: f64) -> Self {
        self.scale(C64::from(t))
    }

    /// `<h, g>_H = sum_j tau(h_j^* g_j)`.
    pub fn inner(&self, other: &TangentVector) -> Result<C64> {
        if self.len() != other.len() {
            return Err(Error::BackendMismatch("tangent vectors of different spaces".into()));
        }
        self.components.iter().zip(&other.components).map(|(a, b)| a.inner(b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c.norm_l2().powi(2)).sum::<f64>().sqrt()
    }

    /// Concatenated coefficient vector.
    pub fn flatten(&self) -> CVector {
        let total: usize = self.components.iter().map(|c| c.coeffs().len()).sum();
        let mut out = CVector::zeros(total);
        let mut off = 0;
        for c in &self.components {
            out.rows_mut(off, c.coeffs().len()).copy_from(c.coeffs());
            off += c.coeffs().len();
        }
        out
    }

    pub fn unflatten(algebra: &Algebra, flat: &CVector) -> Result<Self> {
        let d = algebra.dim();
        if d == 0 || !flat.len().is_multiple_of(d) {
            return Err(Error::BackendMismatch("flat tangent vector has the wrong length".into()));
        }
        let components = (0..flat.len() / d)
            .map(|j| algebra.element(flat.rows(j * d, d).into_owned()))
            .collect::<Result<_>>()?;
        Ok(TangentVector { components })
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Direction {
    Commutator(CMatrix),
    TorusAxis(usize),
    Character { k: usize, weight: f64 },
}

pub(crate) fn directions(algebra: &Algebra) -> Vec<Direction> {
    match algebra.descriptor() {
        AlgebraDescriptor::MatrixAlgebra { generators, .. } => {
            generators.iter().cloned().map(Direction::Commutator).collect()
        }
        AlgebraDescriptor::NcTorus { .. } => vec![Direction::TorusAxis(0), Direction::TorusAxis(1)],
        AlgebraDescriptor::CyclicGroup { lengths, .. } => {
            let mu = cyclic_levy_weights(lengths);
            let top = mu.iter().copied().fold(0.0, f64::max);
            mu.iter()
                .enumerate()
                .filter(|(k, &m)| *k > 0 && m > 1e-13 * top)
                .map(|(k, &m)| Direction::Character { k, weight: (m / 2.0).sqrt() })
                .collect()
        }
    }
}

/// `alpha_k(f)(g) = e^{2 pi i s k g / q} f(g)` with `s = +-1`.
fn dual_action(a: &Element, k: usize, sign: f64) -> Element {
    let q = a.coeffs().len();
    let c = CVector::from_fn(q, |g, _| a.coeffs()[g] * cis_turns(sign * ((g * k) % q) as f64 / q as f64));
    a.algebra().wrap(c)
}

fn torus_axis(a: &Element, axis: usize) -> Element {
    let alg = a.algebra();
    let c = CVector::from_fn(a.coeffs().len(), |idx, _| {
        let (n, m) = alg.torus_exponents(idx).unwrap();
        let e = if axis == 0 { n } else { m };
        a.coeffs()[idx] * I * e as f64
    });
    alg.wrap(c)
}

fn commutator(v: &CMatrix, a: &Element) -> Element {
    let m = a.as_matrix().expect("commutator directions live on matrix backends");
    let c = v * &m - &m * v;
    a.algebra().from_matrix(&c).expect("same backend")
}

fn check_space(space: &DirichletSpace, a: &Element) -> Result<()> {
    if a.algebra() != space.algebra() {
        return Err(Error::BackendMismatch("element does not belong to this space".into()));
    }
    Ok(())
}

fn check_vector(space: &DirichletSpace, h: &TangentVector, dirs: &[Direction]) -> Result<()> {
    if h.len() != dirs.len() {
        return Err(Error::BackendMismatch(format!(
            "tangent vector has {} components, space has {}",
            h.len(),
            dirs.len()
        )));
    }
    h.components.iter().try_for_each(|c| check_space(space, c))
}

/// Gradient `d a`.
pub fn gradient(space: &DirichletSpace, a: &Element) -> Result<TangentVector> {
    check_space(space, a)?;
    let components = directions(space.algebra())
        .iter()
        .map(|d| match d {
            Direction::Commutator(v) => commutator(v, a),
            Direction::TorusAxis(axis) => torus_axis(a, *axis),
            Direction::Character { k, weight } => {
                dual_action(a, *k, 1.0).sub(a).expect("same backend").scale_real(*weight)
            }
        })
        .collect();
    Ok(TangentVector { components })
}

/// Divergence `d^* h`, the L2 adjoint of the gradient.
pub fn divergence(space: &DirichletSpace, h: &TangentVector) -> Result<Element> {
    let dirs = directions(space.algebra());
    check_vector(space, h, &dirs)?;
    let mut out = space.algebra().zero();
    for (d, c) in dirs.iter().zip(&h.components) {
        let term = match d {
            Direction::Commutator(v) => commutator(v, c),
            Direction::TorusAxis(axis) => torus_axis(c, *axis).scale_real(-1.0),
            Direction::Character { k, weight } => dual_action(c, *k, -1.0).sub(c)?.scale_real(*weight),
        };
        out = out.add(&term)?;
    }
    Ok(out)
}

/// Bimodule action `x . h . y`.
pub fn module_act(space: &DirichletSpace, x: &Element, h: &TangentVector, y: &Element) -> Result<TangentVector> {
    check_space(space, x)?;
    check_space(space, y)?;
    let dirs = directions(space.algebra());
    check_vector(space, h, &dirs)?;
    let components = dirs
        .iter()
        .zip(&h.components)
        .map(|(d, c)| {
            let left = match d {
                Direction::Character { k, .. } => dual_action(x, *k, 1.0),
                _ => x.clone(),
            };
            left.mul(c)?.mul(y)
        })
        .collect::<Result<_>>()?;
    Ok(TangentVector { components })
}

/// Right action `h . y`.
pub fn right_act(space: &DirichletSpace, h: &TangentVector, y: &Element) -> Result<TangentVector> {
    module_act(space, &space.algebra().one(), h, y)
}

/// Left action `x . h`.
pub fn left_act(space: &DirichletSpace, x: &Element, h: &TangentVector) -> Result<TangentVector> {
    module_act(space, x, h, &space.algebra().one())
}

/// The antilinear involution `J` with `J(d a) = d(a^*)`.
pub fn involution_j(space: &DirichletSpace, h: &TangentVector) -> Result<TangentVector> {
    let dirs = directions(space.algebra());
    check_vector(space, h, &dirs)?;
    let mut out = h.components.clone();
    for (j, (d, c)) in dirs.iter().zip(&h.components).enumerate() {
        match d {
            Direction::Commutator(_) => out[j] = c.adjoint().scale_real(-1.0),
            Direction::TorusAxis(_) => out[j] = c.adjoint(),
            Direction::Character { k, .. } => {
                let q = c.coeffs().len();
                let partner = (q - k) % q;
                let target = dirs
                    .iter()
                    .position(|e| matches!(e, Direction::Character { k: kk, .. } if *kk == partner))
                    .ok_or_else(|| Error::InvalidDescriptor("asymmetric character set".into()))?;
                out[target] = dual_action(&c.adjoint(), *k, -1.0).scale_real(-1.0);
            }
        }
    }
    Ok(TangentVector { components: out })
}

/// `||a (x) b||^2 = 1/2 (E(a, a b b^*) + E(a b b^*, a) - E(b b^*, a^* a))`.
pub fn cs03_norm_sq(space: &DirichletSpace, a: &Element, b: &Element) -> Result<f64> {
    let bb = b.mul(&b.adjoint())?;
    let abb = a.mul(&bb)?;
    let aa = a.adjoint().mul(a)?;
    let v = space.dirichlet_form(a, &abb)? + space.dirichlet_form(&abb, a)? - space.dirichlet_form(&bb, &aa)?;
    Ok(0.5 * v.re)
}

/// Density-valued metric `R(h, g) = sum_j h_j^* g_j`, antilinear in `h`, with `tau(R(h, g)) = <h, g>_H`.
pub fn riemannian_metric(space: &DirichletSpace, h: &TangentVector, g: &TangentVector) -> Result<Density> {
    let dirs = directions(space.algebra());
    check_vector(space, h, &dirs)?;
    check_vector(space, g, &dirs)?;
    let mut out = space.algebra().zero();
    for (a, b) in h.components.iter().zip(&g.components) {
        out = out.add(&a.adjoint().mul(b)?)?;
    }
    Ok(Density::from_element(out))
}

/// Matrix of `div . d` on coefficients, assembled column by column.
pub fn laplacian_from_calculus(space: &DirichletSpace) -> Result<CMatrix> {
    let alg = space.algebra();
    let d = alg.dim();
    let mut out = CMatrix::zeros(d, d);
    for col in 0..d {
        let e = alg.basis_element(col);
        let v = divergence(space, &gradient(space, &e)?)?;
        out.set_column(col, v.coeffs());
    }
    Ok(out)
}

/// Matrix of the gradient from coefficients to flattened tangent coefficients.
pub fn gradient_matrix(space: &DirichletSpace) -> Result<CMatrix> {
    let alg = space.algebra();
    let d = alg.dim();
    let k = direction_count(space);
    let mut out = CMatrix::zeros(k * d, d);
    for col in 0..d {
        out.set_column(col, &gradient(space, &alg.basis_element(col))?.flatten());
    }
    Ok(out)
}

/// Number of tangent directions of the space.
pub fn direction_count(space: &DirichletSpace) -> usize {
    directions(space.algebra()).len()
}
