//! Differential equations `w'_phi = F(tau, w)` with an algebra-valued unknown.
//!
//! A solution satisfies `dw_tau = R(F(tau, w(tau))) dphi_tau`. The closed-form
//! families, the separable solver and Picard iteration all report that
//! residual, measured with finite differences of the computed `w`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::{Algebra, Element};
use crate::error::{Error, Result};
use crate::integral::{line_integral_with, Path};
use crate::map::SmoothMap;

type RhsFn = dyn Fn(&[f64], &Element) -> Result<Element> + Send + Sync;

/// Finite-difference step of the residual oracle.
pub const RESIDUAL_STEP: f64 = 1e-6;
/// Largest accepted residual of a verified solution.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Newton iteration cap of the separable solver.
pub const NEWTON_MAX_ITER: usize = 50;
/// Picard stopping threshold on the sup-norm of successive differences.
pub const PICARD_TOL: f64 = 1e-10;

/// The equation `w'_phi = F(tau, w)`, `w(tau0) = w0`.
#[derive(Clone)]
pub struct PhiOde {
    rhs: Arc<RhsFn>,
    phi: SmoothMap,
    alg: Algebra,
    tau0: Vec<f64>,
    w0: Element,
}

impl fmt::Debug for PhiOde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiOde")
            .field("phi", &self.phi)
            .field("dim", &self.alg.dim())
            .field("tau0", &self.tau0)
            .field("w0", &self.w0.as_slice())
            .finish()
    }
}

impl PhiOde {
    pub fn new<F>(rhs: F, phi: &SmoothMap, alg: &Algebra, tau0: &[f64], w0: Element) -> Result<Self>
    where
        F: Fn(&[f64], &Element) -> Result<Element> + Send + Sync + 'static,
    {
        if phi.codomain() != alg.dim() || w0.len() != alg.dim() {
            return Err(Error::DimensionMismatch {
                what: "phi codomain and initial value",
                expected: alg.dim(),
                found: if w0.len() != alg.dim() { w0.len() } else { phi.codomain() },
            });
        }
        if tau0.len() != phi.domain() {
            return Err(Error::DimensionMismatch {
                what: "initial point",
                expected: phi.domain(),
                found: tau0.len(),
            });
        }
        Ok(Self {
            rhs: Arc::new(rhs),
            phi: phi.clone(),
            alg: alg.clone(),
            tau0: tau0.to_vec(),
            w0,
        })
    }

    pub fn phi(&self) -> &SmoothMap {
        &self.phi
    }

    pub fn algebra(&self) -> &Algebra {
        &self.alg
    }

    pub fn initial(&self) -> (&[f64], &Element) {
        (&self.tau0, &self.w0)
    }

    /// `F(tau, w)`.
    pub fn rhs(&self, tau: &[f64], w: &Element) -> Result<Element> {
        (self.rhs)(tau, w)
    }

    /// `||dw - R(F(tau, w)) dphi||_F / (1 + ||dphi||_F)` at `tau`, with `dw`
    /// by central differences of step [`RESIDUAL_STEP`].
    pub fn residual_at(&self, w: &SmoothMap, tau: &[f64]) -> Result<f64> {
        let dw = w.fd_jacobian_with_step(tau, RESIDUAL_STEP)?;
        let dphi = self.phi.jacobian(tau)?;
        let f = self.rhs(tau, &w.eval(tau)?)?;
        Ok((dw - self.alg.rep(&f) * &dphi).norm() / (1.0 + dphi.norm()))
    }

    /// Samples `w` on `grid` with the largest residual.
    pub fn samples(&self, w: &SmoothMap, grid: &[Vec<f64>]) -> Result<SolutionSamples> {
        let mut points = Vec::with_capacity(grid.len());
        let mut max_residual = 0.0f64;
        for tau in grid {
            let value = w.eval(tau)?;
            max_residual = max_residual.max(self.residual_at(w, tau)?);
            points.push(Sample {
                tau: tau.clone(),
                w: value.iter().copied().collect(),
            });
        }
        Ok(SolutionSamples { points, max_residual })
    }
}

/// One `(tau, w(tau))` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub tau: Vec<f64>,
    pub w: Vec<f64>,
}

/// Solution values on a grid with the residual of the equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSamples {
    pub points: Vec<Sample>,
    pub max_residual: f64,
}

/// A closed-form solution together with its equation.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub ode: PhiOde,
    pub w: SmoothMap,
}

impl OdeSolution {
    /// `w(tau)`.
    pub fn eval(&self, tau: &[f64]) -> Result<Element> {
        self.w.eval(tau)
    }

    /// Samples with the residual of the equation.
    pub fn samples(&self, grid: &[Vec<f64>]) -> Result<SolutionSamples> {
        self.ode.samples(&self.w, grid)
    }
}

fn check_dims(alg: &Algebra, maps: &[(&'static str, &SmoothMap)], k: usize) -> Result<()> {
    for (what, m) in maps {
        if m.codomain() != alg.dim() {
            return Err(Error::DimensionMismatch {
                what,
                expected: alg.dim(),
                found: m.codomain(),
            });
        }
        if m.domain() != k {
            return Err(Error::DimensionMismatch {
                what,
                expected: k,
                found: m.domain(),
            });
        }
    }
    Ok(())
}

/// `w = -e / (H + C)` for `w'_phi = K w^2`, where `H'_phi = K`.
pub fn solve_square_rhs(k: &SmoothMap, h: &SmoothMap, c: &Element, phi: &SmoothMap, alg: &Algebra) -> Result<OdeSolution> {
    check_dims(alg, &[("K", k), ("H", h), ("phi", phi)], phi.domain())?;
    let (hh, cc, a) = (h.clone(), c.clone(), alg.clone());
    let w = SmoothMap::try_new(phi.domain(), alg.dim(), move |tau| {
        let denom = hh.eval(tau)? + &cc;
        Ok(-a.inverse(&denom)?)
    });
    let tau0 = vec![0.0; phi.domain()];
    let w0 = w.eval(&tau0).unwrap_or_else(|_| alg.zero());
    let (kk, a) = (k.clone(), alg.clone());
    let ode = PhiOde::new(move |tau, w| Ok(a.mul(&kk.eval(tau)?, &a.mul(w, w))), phi, alg, &tau0, w0)?;
    Ok(OdeSolution { ode, w })
}

/// `w = K^2 / 2 + C` for `w'_K = K`.
pub fn solve_phi_rhs(k: &SmoothMap, c: &Element, alg: &Algebra) -> Result<OdeSolution> {
    check_dims(alg, &[("K", k)], k.domain())?;
    let (kk, cc, a) = (k.clone(), c.clone(), alg.clone());
    let w = SmoothMap::try_new(k.domain(), alg.dim(), move |tau| {
        let v = kk.eval(tau)?;
        Ok(a.mul(&v, &v) * 0.5 + &cc)
    });
    let tau0 = vec![0.0; k.domain()];
    let w0 = w.eval(&tau0)?;
    let kr = k.clone();
    let ode = PhiOde::new(move |tau, _| kr.eval(tau), k, alg, &tau0, w0)?;
    Ok(OdeSolution { ode, w })
}

/// `w = C exp(phi)` for `w'_phi = w`.
pub fn solve_exponential(phi: &SmoothMap, alg: &Algebra, c: &Element) -> Result<OdeSolution> {
    check_dims(alg, &[("phi", phi)], phi.domain())?;
    let (p, cc, a) = (phi.clone(), c.clone(), alg.clone());
    let w = SmoothMap::try_new(phi.domain(), alg.dim(), move |tau| Ok(a.mul(&cc, &a.exp(&p.eval(tau)?))));
    let tau0 = vec![0.0; phi.domain()];
    let w0 = w.eval(&tau0)?;
    let ode = PhiOde::new(|_, w| Ok(w.clone()), phi, alg, &tau0, w0)?;
    Ok(OdeSolution { ode, w })
}

/// Implicit solution of `w'_phi = K(tau) L(w)` through
/// `int_{w0}^{w} dv / L(v) = int_{tau0}^{tau} K dphi`.
#[derive(Clone)]
pub struct SeparableSolver {
    k: SmoothMap,
    l: SmoothMap,
    phi: SmoothMap,
    alg: Algebra,
    w0: Element,
    tau0: Vec<f64>,
    /// Continuation steps from `tau0` to an evaluation point.
    pub steps: usize,
    /// Simpson subintervals per continuation step.
    pub quadrature: usize,
}

impl fmt::Debug for SeparableSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableSolver")
            .field("tau0", &self.tau0)
            .field("w0", &self.w0.as_slice())
            .field("steps", &self.steps)
            .field("quadrature", &self.quadrature)
            .finish()
    }
}

/// Builds the implicit-solution evaluator of a separable equation.
pub fn separable_solve(
    k: &SmoothMap,
    l: &SmoothMap,
    phi: &SmoothMap,
    alg: &Algebra,
    w0: &Element,
    tau0: &[f64],
) -> Result<SeparableSolver> {
    check_dims(alg, &[("K", k), ("phi", phi)], tau0.len())?;
    check_dims(alg, &[("L", l)], alg.dim())?;
    let lw0 = l.eval(w0.as_slice())?;
    if !alg.is_regular(&lw0) {
        return Err(Error::SingularElement {
            ratio: alg.regularity_ratio(&lw0),
        });
    }
    Ok(SeparableSolver {
        k: k.clone(),
        l: l.clone(),
        phi: phi.clone(),
        alg: alg.clone(),
        w0: w0.clone(),
        tau0: tau0.to_vec(),
        steps: 16,
        quadrature: 32,
    })
}

impl SeparableSolver {
    /// `e / L(v)` as a map on the algebra.
    fn inverse_l(&self) -> SmoothMap {
        let (l, a) = (self.l.clone(), self.alg.clone());
        SmoothMap::try_new(self.alg.dim(), self.alg.dim(), move |v| a.inverse(&l.eval(v)?))
    }

    /// One continuation step: the `w` with
    /// `int_{w_prev}^{w} dv / L(v) = delta`, by Newton from `w_prev`.
    fn newton_step(&self, inv_l: &SmoothMap, id: &SmoothMap, w_prev: &Element, delta: &Element) -> Result<Element> {
        let mut w = w_prev.clone();
        let mut last = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let path = Path::segment(w_prev.as_slice(), w.as_slice());
            let g = line_integral_with(inv_l, id, &self.alg, &path, self.quadrature)? - delta;
            let gn = g.norm();
            let scale = 1.0 + delta.norm();
            if gn <= 1e-15 * scale || (gn >= last && gn <= 1e-12 * scale) {
                return Ok(w);
            }
            last = gn;
            let jac = self.alg.rep(&inv_l.eval(w.as_slice())?);
            let step = jac.lu().solve(&g).ok_or(Error::SingularElement { ratio: 0.0 })?;
            w -= step;
            if !w.iter().all(|x| x.is_finite()) {
                break;
            }
        }
        Err(Error::NewtonDivergence {
            iterations: NEWTON_MAX_ITER,
        })
    }

    /// Solution values along a sequence of points starting after `tau0`;
    /// each step integrates from the previous point and warm-starts Newton
    /// there.
    pub fn solve_along(&self, taus: &[Vec<f64>]) -> Result<Vec<Element>> {
        let inv_l = self.inverse_l();
        let id = SmoothMap::identity(self.alg.dim());
        let mut w = self.w0.clone();
        let mut prev = self.tau0.clone();
        let mut out = Vec::with_capacity(taus.len());
        for tau in taus {
            let path = Path::segment(&prev, tau);
            let delta = line_integral_with(&self.k, &self.phi, &self.alg, &path, self.quadrature)?;
            w = self.newton_step(&inv_l, &id, &w, &delta)?;
            out.push(w.clone());
            prev = tau.clone();
        }
        Ok(out)
    }

    /// `w(tau)` by continuation along the straight segment from `tau0`.
    pub fn eval(&self, tau: &[f64]) -> Result<Element> {
        let n = self.steps.max(1);
        let pts: Vec<Vec<f64>> = (1..=n)
            .map(|i| {
                let s = i as f64 / n as f64;
                self.tau0.iter().zip(tau).map(|(a, b)| a + s * (b - a)).collect()
            })
            .collect();
        Ok(self.solve_along(&pts)?.pop().unwrap_or_else(|| self.w0.clone()))
    }

    /// The solution as a map, for residual checks.
    pub fn as_map(&self) -> SmoothMap {
        let me = self.clone();
        SmoothMap::try_new(self.tau0.len(), self.alg.dim(), move |tau| me.eval(tau))
    }

    /// The equation `w'_phi = K L(w)`.
    pub fn ode(&self) -> Result<PhiOde> {
        let (k, l, a) = (self.k.clone(), self.l.clone(), self.alg.clone());
        PhiOde::new(
            move |tau, w| Ok(a.mul(&k.eval(tau)?, &l.eval(w.as_slice())?)),
            &self.phi,
            &self.alg,
            &self.tau0,
            self.w0.clone(),
        )
    }
}

/// Output of [`picard`].
#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    /// Path parameter of every node.
    pub times: Vec<f64>,
    pub samples: SolutionSamples,
    /// Sup-norm of successive differences, one entry per iteration.
    pub history: Vec<f64>,
}

/// Cumulative Simpson integral of node values `g` with spacing `h`.
fn cumulative_simpson(g: &[Element], h: f64) -> Vec<Element> {
    let n = g.len();
    let mut out = vec![g[0].clone() * 0.0; n];
    for i in 1..n {
        out[i] = if i % 2 == 0 {
            &out[i - 2] + (&g[i - 2] + &g[i - 1] * 4.0 + &g[i]) * (h / 3.0)
        } else if i + 1 < n {
            &out[i - 1] + (&g[i - 1] * 5.0 + &g[i] * 8.0 - &g[i + 1]) * (h / 12.0)
        } else {
            &out[i - 1] + (&g[i - 1] + &g[i]) * (h / 2.0)
        };
    }
    out
}

/// Picard iteration `w_{n+1}(tau) = w0 + int F(w_n) dphi` for the
/// autonomous equation `w'_phi = F(w)` along `path` (starting at `tau0`),
/// on `nodes` equally spaced nodes.
pub fn picard<F>(
    f: F,
    phi: &SmoothMap,
    alg: &Algebra,
    w0: &Element,
    path: &Path,
    nodes: usize,
    max_iter: usize,
) -> Result<PicardReport>
where
    F: Fn(&Element) -> Result<Element>,
{
    let nodes = nodes.max(5);
    let h = path.t1() / (nodes - 1) as f64;
    let times: Vec<f64> = (0..nodes).map(|i| i as f64 * h).collect();
    let taus: Vec<DVector<f64>> = times.iter().map(|&t| path.point(t)).collect();
    let dphi: Vec<Element> = times
        .iter()
        .zip(&taus)
        .map(|(&t, tau)| Ok(phi.jacobian(tau.as_slice())? * path.velocity(t)))
        .collect::<Result<_>>()?;
    let mut w: Vec<Element> = vec![w0.clone(); nodes];
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let g: Vec<Element> = w
            .iter()
            .zip(&dphi)
            .map(|(wi, di)| Ok(alg.mul(&f(wi)?, di)))
            .collect::<Result<_>>()?;
        let next: Vec<Element> = cumulative_simpson(&g, h).into_iter().map(|v| v + w0).collect();
        let diff = next.iter().zip(&w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        w = next;
        history.push(diff);
        if !diff.is_finite() {
            break;
        }
        if diff <= PICARD_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { history });
    }
    let mut max_residual = 0.0f64;
    for i in 2..nodes.saturating_sub(2) {
        let dw = (&w[i - 2] - &w[i - 1] * 8.0 + &w[i + 1] * 8.0 - &w[i + 2]) / (12.0 * h);
        let r = (dw - alg.mul(&f(&w[i])?, &dphi[i])).norm() / (1.0 + dphi[i].norm());
        max_residual = max_residual.max(r);
    }
    let points = taus
        .iter()
        .zip(&w)
        .map(|(tau, wi)| Sample {
            tau: tau.iter().copied().collect(),
            w: wi.iter().copied().collect(),
        })
        .collect();
    Ok(PicardReport {
        times,
        samples: SolutionSamples { points, max_residual },
        history,
    })
}

/// Largest `||dR_p(F(p)) - e_1||` over `points`, with `dR` by central
/// differences.
pub fn verify_canonical(r: &SmoothMap, field: &SmoothMap, points: &[Vec<f64>]) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in points {
        let dr: DMatrix<f64> = r.fd_jacobian(p)?;
        let mut v = dr * field.eval(p)?;
        v[0] -= 1.0;
        worst = worst.max(v.norm());
    }
    Ok(worst)
}
