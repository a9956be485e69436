//! Numerical differentiation with respect to an algebra along a map `phi`.
//!
//! A function `f` is differentiable along `phi` at `u` when there is an
//! algebra element `g` with `df_u = R(g) dphi_u`; `g` is the derivative
//! `f'_phi(u)`. It is computed here as the least-squares solution of that
//! linear system, so the routine is total and reports how well the equation
//! is satisfied.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, Element};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, RANK_TOL};
use crate::map::SmoothMap;

/// Relative residual at or below which `f` is declared differentiable.
pub const DIFFERENTIABILITY_TOL: f64 = 1e-6;

/// Number of random directions tried by [`find_regular_direction`] after the basis.
pub const RANDOM_DIRECTIONS: usize = 64;

/// Outcome of [`phi_derivative`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiffReport {
    /// Least-squares (minimum-norm) solution `g` of `df_u = R(g) dphi_u`.
    pub derivative: Element,
    /// `||df_u - R(g) dphi_u||_F / ||df_u||_F` (absolute when `df_u = 0`).
    pub residual: f64,
    /// Whether the linear system determines `g` uniquely.
    pub unique: bool,
}

impl DiffReport {
    /// True when the residual is within [`DIFFERENTIABILITY_TOL`].
    pub fn is_differentiable(&self) -> bool {
        self.residual <= DIFFERENTIABILITY_TOL
    }
}

fn check_pair(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra) -> Result<()> {
    let n = alg.dim();
    for (what, found) in [("phi codomain", phi.codomain()), ("f codomain", f.codomain())] {
        if found != n {
            return Err(Error::DimensionMismatch { what, expected: n, found });
        }
    }
    if f.domain() != phi.domain() {
        return Err(Error::DimensionMismatch {
            what: "f domain",
            expected: phi.domain(),
            found: f.domain(),
        });
    }
    Ok(())
}

/// The `(n k) x n` matrix whose column `i` is `vec(R_i dphi)`.
fn derivative_system(alg: &Algebra, jphi: &DMatrix<f64>) -> DMatrix<f64> {
    let n = alg.dim();
    let k = jphi.ncols();
    let mut m = DMatrix::zeros(n * k, n);
    for i in 0..n {
        let col = alg.basis_rep(i) * jphi;
        m.set_column(i, &DVector::from_column_slice(col.as_slice()));
    }
    m
}

/// Solves `J = R(g) jphi` for `g` given the two Jacobians.
pub fn derivative_from_jacobians(alg: &Algebra, jf: &DMatrix<f64>, jphi: &DMatrix<f64>) -> DiffReport {
    let m = derivative_system(alg, jphi);
    let b = DVector::from_column_slice(jf.as_slice());
    let ls = lstsq(&m, &b, RANK_TOL);
    let bn = b.norm();
    DiffReport {
        residual: if bn > 0.0 { ls.residual / bn } else { ls.residual },
        unique: ls.rank == alg.dim(),
        derivative: ls.x,
    }
}

/// Derivative `f'_phi(u)` by least squares, with its residual and uniqueness flag.
pub fn phi_derivative(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra, u: &[f64]) -> Result<DiffReport> {
    check_pair(f, phi, alg)?;
    let jf = f.jacobian(u)?;
    let jphi = phi.jacobian(u)?;
    Ok(derivative_from_jacobians(alg, &jf, &jphi))
}

/// Largest generalized Cauchy-Riemann defect from the two Jacobians,
/// normalized by `||Jf|| ||Jphi|| max(1, max|c|)`.
pub fn cre_residual_from_jacobians(alg: &Algebra, jf: &DMatrix<f64>, jphi: &DMatrix<f64>) -> f64 {
    let n = alg.dim();
    let k = jphi.ncols();
    let scale = jf.norm() * jphi.norm() * alg.scale();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            for q in 0..n {
                let mut s = 0.0;
                for m in 0..n {
                    for l in 0..n {
                        let c = alg.c(l, m, q);
                        if c != 0.0 {
                            s += (jf[(m, i)] * jphi[(l, j)] - jf[(m, j)] * jphi[(l, i)]) * c;
                        }
                    }
                }
                worst = worst.max(s.abs());
            }
        }
    }
    worst / scale
}

/// Largest generalized Cauchy-Riemann defect of `f` along `phi` at `u`.
pub fn cre_residual(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra, u: &[f64]) -> Result<f64> {
    check_pair(f, phi, alg)?;
    let jf = f.jacobian(u)?;
    let jphi = phi.jacobian(u)?;
    Ok(cre_residual_from_jacobians(alg, &jf, &jphi))
}

/// A unit vector `xi` with `dphi_u(xi)` regular. Basis vectors are tried
/// first, then [`RANDOM_DIRECTIONS`] seeded random directions.
pub fn find_regular_direction(phi: &SmoothMap, alg: &Algebra, u: &[f64]) -> Result<DVector<f64>> {
    if phi.codomain() != alg.dim() {
        return Err(Error::DimensionMismatch {
            what: "phi codomain",
            expected: alg.dim(),
            found: phi.codomain(),
        });
    }
    let jphi = phi.jacobian(u)?;
    let k = phi.domain();
    for j in 0..k {
        if alg.is_regular(&jphi.column(j).into_owned()) {
            let mut xi = DVector::zeros(k);
            xi[j] = 1.0;
            return Ok(xi);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..RANDOM_DIRECTIONS {
        let xi = DVector::from_fn(k, |_, _| rng.random_range(-1.0..=1.0));
        let norm = xi.norm();
        if norm == 0.0 {
            continue;
        }
        let xi = xi / norm;
        if alg.is_regular(&(&jphi * &xi)) {
            return Ok(xi);
        }
    }
    Err(Error::NotFound)
}

type ElementFn = dyn Fn(&Element) -> Result<Element> + Send + Sync;

/// An algebra-differentiable function `A -> A` given with its derivative.
#[derive(Clone)]
pub struct AlgebraFunction {
    alg: Algebra,
    value: Arc<ElementFn>,
    derivative: Arc<ElementFn>,
}

impl std::fmt::Debug for AlgebraFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AlgebraFunction").field("dim", &self.alg.dim()).finish()
    }
}

fn check_coeffs(alg: &Algebra, coeffs: &[Element]) -> Result<()> {
    for c in coeffs {
        if c.len() != alg.dim() {
            return Err(Error::DimensionMismatch {
                what: "polynomial coefficient",
                expected: alg.dim(),
                found: c.len(),
            });
        }
    }
    Ok(())
}

fn horner(alg: &Algebra, coeffs: &[Element], w: &Element) -> Element {
    let mut acc = alg.zero();
    for c in coeffs.iter().rev() {
        acc = alg.mul(&acc, w) + c;
    }
    acc
}

fn derivative_coeffs(coeffs: &[Element]) -> Vec<Element> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * i as f64)
        .collect()
}

impl AlgebraFunction {
    /// Wraps a value function and its algebra derivative.
    pub fn new<V, D>(alg: &Algebra, value: V, derivative: D) -> Self
    where
        V: Fn(&Element) -> Result<Element> + Send + Sync + 'static,
        D: Fn(&Element) -> Result<Element> + Send + Sync + 'static,
    {
        Self {
            alg: alg.clone(),
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }

    /// `w -> c_0 + c_1 w + ... + c_m w^m`.
    pub fn polynomial(alg: &Algebra, coeffs: Vec<Element>) -> Result<Self> {
        check_coeffs(alg, &coeffs)?;
        let dcoeffs = derivative_coeffs(&coeffs);
        let (a1, a2) = (alg.clone(), alg.clone());
        Ok(Self::new(
            alg,
            move |w| Ok(horner(&a1, &coeffs, w)),
            move |w| Ok(horner(&a2, &dcoeffs, w)),
        ))
    }

    /// `w -> p(w) / q(w)`, failing where `q(w)` is singular.
    pub fn rational(alg: &Algebra, p: Vec<Element>, q: Vec<Element>) -> Result<Self> {
        check_coeffs(alg, &p)?;
        check_coeffs(alg, &q)?;
        let (dp, dq) = (derivative_coeffs(&p), derivative_coeffs(&q));
        let (a1, a2) = (alg.clone(), alg.clone());
        let (p1, q1) = (p.clone(), q.clone());
        Ok(Self::new(
            alg,
            move |w| a1.div(&horner(&a1, &p1, w), &horner(&a1, &q1, w)),
            move |w| {
                let (pv, qv) = (horner(&a2, &p, w), horner(&a2, &q, w));
                let (dpv, dqv) = (horner(&a2, &dp, w), horner(&a2, &dq, w));
                let num = a2.mul(&dpv, &qv) - a2.mul(&pv, &dqv);
                a2.div(&num, &a2.mul(&qv, &qv))
            },
        ))
    }

    /// `w -> w^m` for any integer `m` (negative powers need regular `w`).
    pub fn power(alg: &Algebra, m: i32) -> Self {
        let (a1, a2) = (alg.clone(), alg.clone());
        let pw = move |a: &Algebra, w: &Element, m: i32| -> Result<Element> {
            if m >= 0 {
                Ok(a.pow(w, m as u32))
            } else {
                Ok(a.pow(&a.inverse(w)?, m.unsigned_abs()))
            }
        };
        Self::new(
            alg,
            move |w| pw(&a1, w, m),
            move |w| {
                if m == 0 {
                    Ok(a2.zero())
                } else {
                    Ok(pw(&a2, w, m - 1)? * m as f64)
                }
            },
        )
    }

    /// The algebra exponential, its own derivative.
    pub fn exp(alg: &Algebra) -> Self {
        let (a1, a2) = (alg.clone(), alg.clone());
        Self::new(alg, move |w| Ok(a1.exp(w)), move |w| Ok(a2.exp(w)))
    }

    /// The algebra this function acts on.
    pub fn algebra(&self) -> &Algebra {
        &self.alg
    }

    /// `g(w)`.
    pub fn value(&self, w: &Element) -> Result<Element> {
        (self.value)(w)
    }

    /// `g'(w)`.
    pub fn derivative(&self, w: &Element) -> Result<Element> {
        (self.derivative)(w)
    }

    /// `g` as a map `R^n -> R^n` with Jacobian `R(g'(w))`.
    pub fn as_map(&self) -> SmoothMap {
        let n = self.alg.dim();
        let (g1, g2) = (self.clone(), self.clone());
        SmoothMap::try_new(n, n, move |w| g1.value(&DVector::from_column_slice(w)))
            .with_try_jacobian(move |w| Ok(g2.alg.rep(&g2.derivative(&DVector::from_column_slice(w))?)))
    }

    /// `g o phi` with Jacobian `R(g'(phi(u))) dphi_u`.
    pub fn after(&self, phi: &SmoothMap) -> Result<SmoothMap> {
        let n = self.alg.dim();
        if phi.codomain() != n {
            return Err(Error::DimensionMismatch {
                what: "phi codomain",
                expected: n,
                found: phi.codomain(),
            });
        }
        let (g1, g2) = (self.clone(), self.clone());
        let (p1, p2) = (phi.clone(), phi.clone());
        Ok(SmoothMap::try_new(phi.domain(), n, move |u| g1.value(&p1.eval(u)?)).with_try_jacobian(
            move |u| {
                let w = p2.eval(u)?;
                Ok(g2.alg.rep(&g2.derivative(&w)?) * p2.jacobian(u)?)
            },
        ))
    }
}

/// `u -> c_0 + c_1 phi(u) + ... + c_m phi(u)^m` with its analytic Jacobian.
pub fn phi_polynomial(coeffs: Vec<Element>, phi: &SmoothMap, alg: &Algebra) -> Result<SmoothMap> {
    AlgebraFunction::polynomial(alg, coeffs)?.after(phi)
}

/// `u -> p(phi(u)) / q(phi(u))` with its analytic Jacobian.
pub fn phi_rational(p: Vec<Element>, q: Vec<Element>, phi: &SmoothMap, alg: &Algebra) -> Result<SmoothMap> {
    AlgebraFunction::rational(alg, p, q)?.after(phi)
}

/// `g o f`, for checking `(g o f)'_phi = (g' o f) f'_phi`.
pub fn compose_outer(g: &SmoothMap, f: &SmoothMap) -> Result<SmoothMap> {
    g.compose(f)
}

/// `(f o g, phi o g)`, for checking `h'_{phi o g}(v) = f'_phi(g(v))`.
pub fn compose_inner(f: &SmoothMap, phi: &SmoothMap, g: &SmoothMap) -> Result<(SmoothMap, SmoothMap)> {
    Ok((f.compose(g)?, phi.compose(g)?))
}

/// Maximum Newton iterations used to invert `phi`.
pub const NEWTON_MAX_ITER: usize = 50;

/// Factorization `f = g o phi` for a locally invertible `phi: R^n -> R^n`.
#[derive(Clone, Debug)]
pub struct Factorization {
    f: SmoothMap,
    phi: SmoothMap,
    alg: Algebra,
    seed: Vec<f64>,
}

/// Builds `g = f o phi^{-1}`, inverting `phi` by Newton iteration from `seed`.
pub fn factor_through_phi(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra, seed: &[f64]) -> Result<Factorization> {
    check_pair(f, phi, alg)?;
    if phi.domain() != alg.dim() {
        return Err(Error::DimensionMismatch {
            what: "phi domain",
            expected: alg.dim(),
            found: phi.domain(),
        });
    }
    Ok(Factorization {
        f: f.clone(),
        phi: phi.clone(),
        alg: alg.clone(),
        seed: seed.to_vec(),
    })
}

/// Solves `phi(u) = w` by damped Newton iteration started at `seed`.
pub fn invert_map(phi: &SmoothMap, w: &DVector<f64>, seed: &[f64]) -> Result<Vec<f64>> {
    let fail = Error::PhiNotInvertible {
        iterations: NEWTON_MAX_ITER,
    };
    let mut u = DVector::from_column_slice(seed);
    let tol = 1e-13 * (1.0 + w.norm());
    let mut r = phi.eval(u.as_slice())? - w;
    for _ in 0..NEWTON_MAX_ITER {
        if r.norm() <= tol {
            return Ok(u.as_slice().to_vec());
        }
        let j = phi.jacobian(u.as_slice())?;
        let step = j.lu().solve(&r).ok_or(Error::PhiNotInvertible {
            iterations: NEWTON_MAX_ITER,
        })?;
        let mut t = 1.0;
        loop {
            let cand = &u - &step * t;
            let rc = phi.eval(cand.as_slice())? - w;
            if rc.norm() < r.norm() || t < 1e-4 {
                u = cand;
                r = rc;
                break;
            }
            t *= 0.5;
        }
    }
    if r.norm() <= tol * 1e3 {
        Ok(u.as_slice().to_vec())
    } else {
        Err(fail)
    }
}

impl Factorization {
    /// `phi^{-1}(w)` near the seed point.
    pub fn invert_phi(&self, w: &DVector<f64>) -> Result<Vec<f64>> {
        invert_map(&self.phi, w, &self.seed)
    }

    /// The factor `g` with `f = g o phi`; its Jacobian is `Jf (Jphi)^{-1}`.
    pub fn g(&self) -> SmoothMap {
        let n = self.alg.dim();
        let (s1, s2) = (self.clone(), self.clone());
        SmoothMap::try_new(n, n, move |w| {
            let u = s1.invert_phi(&DVector::from_column_slice(w))?;
            s1.f.eval(&u)
        })
        .with_try_jacobian(move |w| {
            let u = s2.invert_phi(&DVector::from_column_slice(w))?;
            s2.jacobian_ratio(&u)
        })
    }

    fn jacobian_ratio(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let jf = self.f.jacobian(u)?;
        let jphi = self.phi.jacobian(u)?;
        let inv = jphi.try_inverse().ok_or(Error::PhiNotInvertible { iterations: 0 })?;
        Ok(jf * inv)
    }

    /// Relative Frobenius distance of `Jf (Jphi)^{-1}` at `u` from the span
    /// of `R(e_1), ..., R(e_n)`.
    pub fn membership_distance(&self, u: &[f64]) -> Result<f64> {
        let m = self.jacobian_ratio(u)?;
        let report = derivative_from_jacobians(&self.alg, &m, &DMatrix::identity(self.alg.dim(), self.alg.dim()));
        Ok(report.residual)
    }
}
