//! Differentiable maps `R^k -> R^n` exposed as point evaluation plus a
//! Jacobian, either analytic or by central finite differences.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

type EvalFn = dyn Fn(&[f64]) -> Result<DVector<f64>> + Send + Sync;
type JacFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// Relative step of the first-derivative central differences.
pub const FD_STEP: f64 = 1e-6;

/// A map `R^k -> R^n` with a Jacobian.
#[derive(Clone)]
pub struct SmoothMap {
    domain: usize,
    codomain: usize,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
}

/// The map `phi` along which derivatives are taken.
pub type PhiMap = SmoothMap;

/// A function `f` whose derivative is sought.
pub type VectorFunction = SmoothMap;

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("domain", &self.domain)
            .field("codomain", &self.codomain)
            .field("analytic_jacobian", &self.jac.is_some())
            .finish()
    }
}

/// Central-difference Jacobian of `f` at `u` with step `h` per coordinate.
pub fn central_jacobian<F>(f: F, u: &[f64], n: usize, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>>,
{
    let k = u.len();
    let mut jac = DMatrix::zeros(n, k);
    let mut p = u.to_vec();
    for j in 0..k {
        p[j] = u[j] + h;
        let fp = f(&p)?;
        p[j] = u[j] - h;
        let fm = f(&p)?;
        p[j] = u[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    Ok(jac)
}

fn norm(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl SmoothMap {
    /// A map from an infallible closure; the Jacobian defaults to finite differences.
    pub fn new<F>(domain: usize, codomain: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::try_new(domain, codomain, move |u| Ok(f(u)))
    }

    /// A map from a fallible closure.
    pub fn try_new<F>(domain: usize, codomain: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<DVector<f64>> + Send + Sync + 'static,
    {
        Self {
            domain,
            codomain,
            eval: Arc::new(f),
            jac: None,
        }
    }

    /// Attaches an analytic Jacobian.
    pub fn with_jacobian<J>(self, j: J) -> Self
    where
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.with_try_jacobian(move |u| Ok(j(u)))
    }

    /// Attaches a fallible analytic Jacobian.
    pub fn with_try_jacobian<J>(mut self, j: J) -> Self
    where
        J: Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(j));
        self
    }

    /// Drops the analytic Jacobian so that finite differences are used.
    pub fn without_jacobian(mut self) -> Self {
        self.jac = None;
        self
    }

    /// Affine map `u -> M u + b` with its exact Jacobian.
    pub fn affine(m: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(m.nrows(), b.len(), "offset length must match the row count");
        let (n, k) = m.shape();
        let mm = m.clone();
        Self::new(k, n, move |u| &mm * DVector::from_column_slice(u) + &b).with_jacobian(move |_| m.clone())
    }

    /// Linear map `u -> M u`.
    pub fn linear(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        Self::affine(m, DVector::zeros(n))
    }

    /// Identity on `R^n`.
    pub fn identity(n: usize) -> Self {
        Self::linear(DMatrix::identity(n, n))
    }

    /// Constant map with value `c`.
    pub fn constant(domain: usize, c: DVector<f64>) -> Self {
        let n = c.len();
        Self::new(domain, n, move |_| c.clone()).with_jacobian(move |_| DMatrix::zeros(n, domain))
    }

    /// Domain dimension `k`.
    pub fn domain(&self) -> usize {
        self.domain
    }

    /// Codomain dimension `n`.
    pub fn codomain(&self) -> usize {
        self.codomain
    }

    /// True when an analytic Jacobian is attached.
    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() == self.domain {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what: "evaluation point",
                expected: self.domain,
                found: u.len(),
            })
        }
    }

    /// Evaluates the map at `u`.
    pub fn eval(&self, u: &[f64]) -> Result<DVector<f64>> {
        self.check_point(u)?;
        let v = (self.eval)(u)?;
        if v.len() != self.codomain {
            return Err(Error::DimensionMismatch {
                what: "map value",
                expected: self.codomain,
                found: v.len(),
            });
        }
        Ok(v)
    }

    /// Jacobian at `u`: analytic when attached, otherwise central differences
    /// with step `1e-6 (1 + ||u||)`.
    pub fn jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(u)?;
        match &self.jac {
            Some(j) => {
                let m = j(u)?;
                if m.shape() != (self.codomain, self.domain) {
                    return Err(Error::DimensionMismatch {
                        what: "jacobian rows",
                        expected: self.codomain,
                        found: m.nrows(),
                    });
                }
                Ok(m)
            }
            None => self.fd_jacobian(u),
        }
    }

    /// Central-difference Jacobian with step `1e-6 (1 + ||u||)`.
    pub fn fd_jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        self.fd_jacobian_with_step(u, FD_STEP * (1.0 + norm(u)))
    }

    /// Central-difference Jacobian with an explicit step.
    pub fn fd_jacobian_with_step(&self, u: &[f64], h: f64) -> Result<DMatrix<f64>> {
        self.check_point(u)?;
        central_jacobian(|p| self.eval(p), u, self.codomain, h)
    }

    /// Relative deviation between the Jacobian and its finite-difference estimate.
    pub fn jacobian_consistency(&self, u: &[f64]) -> Result<f64> {
        let j = self.jacobian(u)?;
        let fd = self.fd_jacobian(u)?;
        let scale = j.norm().max(fd.norm());
        Ok(if scale == 0.0 { 0.0 } else { (j - fd).norm() / scale })
    }

    /// Composition `self o inner`, with the chain-rule Jacobian.
    pub fn compose(&self, inner: &SmoothMap) -> Result<SmoothMap> {
        if inner.codomain != self.domain {
            return Err(Error::DimensionMismatch {
                what: "composition",
                expected: self.domain,
                found: inner.codomain,
            });
        }
        let (outer_e, inner_e) = (self.clone(), inner.clone());
        let (outer_j, inner_j) = (self.clone(), inner.clone());
        Ok(SmoothMap::try_new(inner.domain, self.codomain, move |u| {
            let w = inner_e.eval(u)?;
            outer_e.eval(w.as_slice())
        })
        .with_try_jacobian(move |u| {
            let w = inner_j.eval(u)?;
            Ok(outer_j.jacobian(w.as_slice())? * inner_j.jacobian(u)?)
        }))
    }

    /// Pointwise sum `self + other`.
    pub fn add(&self, other: &SmoothMap) -> Result<SmoothMap> {
        if (self.domain, self.codomain) != (other.domain, other.codomain) {
            return Err(Error::DimensionMismatch {
                what: "sum operand codomain",
                expected: self.codomain,
                found: other.codomain,
            });
        }
        let (a, b) = (self.clone(), other.clone());
        let (aj, bj) = (self.clone(), other.clone());
        Ok(
            SmoothMap::try_new(self.domain, self.codomain, move |u| Ok(a.eval(u)? + b.eval(u)?))
                .with_try_jacobian(move |u| Ok(aj.jacobian(u)? + bj.jacobian(u)?)),
        )
    }

    /// Scaled map `s * self`.
    pub fn scale(&self, s: f64) -> SmoothMap {
        let (a, aj) = (self.clone(), self.clone());
        SmoothMap::try_new(self.domain, self.codomain, move |u| Ok(a.eval(u)? * s))
            .with_try_jacobian(move |u| Ok(aj.jacobian(u)? * s))
    }
}
