//! Line integrals of algebra-valued integrands along a map `phi`.
//!
//! The integral of `f` along a path `gamma` is
//! `int_0^t1 f(gamma(s)) dphi_{gamma(s)}(gamma'(s)) ds`, with the product taken
//! in the algebra. For `phi`-differentiable `f` it depends only on the end
//! points, its closed-loop values vanish, and the rows of `R(f) Jphi` are
//! conservative fields.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::{Algebra, Element};
use crate::error::{Error, Result};
use crate::map::{central_jacobian, SmoothMap};

type CurveFn = dyn Fn(f64) -> DVector<f64> + Send + Sync;

/// Default number of Simpson subintervals.
pub const DEFAULT_SEGMENTS: usize = 512;
/// Largest gap between the end points of a closed path.
pub const CLOSURE_TOL: f64 = 1e-12;
/// Subinterval counts of [`closed_loop_check`].
pub const LOOP_LADDER: [usize; 4] = [64, 128, 256, 512];

/// A parameterized curve `gamma: [0, t1] -> R^k`.
#[derive(Clone)]
pub struct Path {
    dim: usize,
    t1: f64,
    gamma: Arc<CurveFn>,
    dgamma: Option<Arc<CurveFn>>,
    segments: usize,
    closed: bool,
    pieces: Vec<Path>,
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Path")
            .field("dim", &self.dim)
            .field("t1", &self.t1)
            .field("segments", &self.segments)
            .field("closed", &self.closed)
            .field("pieces", &self.pieces.len())
            .finish()
    }
}

impl Path {
    /// Open path from a parameterization; the derivative defaults to
    /// central differences.
    pub fn new<G>(dim: usize, t1: f64, gamma: G) -> Self
    where
        G: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            t1,
            gamma: Arc::new(gamma),
            dgamma: None,
            segments: DEFAULT_SEGMENTS,
            closed: false,
            pieces: Vec::new(),
        }
    }

    /// Attaches an analytic derivative.
    pub fn with_derivative<D>(mut self, d: D) -> Self
    where
        D: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        self.dgamma = Some(Arc::new(d));
        self
    }

    /// Sets the number of Simpson subintervals (rounded up to even).
    pub fn with_segments(mut self, n: usize) -> Self {
        self.segments = n.max(2).next_multiple_of(2);
        self
    }

    /// Marks the path closed after checking `gamma(0) = gamma(t1)`.
    pub fn closed(mut self) -> Result<Self> {
        let gap = (self.point(0.0) - self.point(self.t1)).norm();
        if gap > CLOSURE_TOL {
            return Err(Error::InvalidInput(format!("path end points differ by {gap:e}")));
        }
        self.closed = true;
        Ok(self)
    }

    /// Straight segment from `u0` to `u1` over `[0, 1]`.
    pub fn segment(u0: &[f64], u1: &[f64]) -> Self {
        let (a, b) = (DVector::from_column_slice(u0), DVector::from_column_slice(u1));
        let d = &b - &a;
        let dd = d.clone();
        Self::new(u0.len(), 1.0, move |t| &a + &d * t).with_derivative(move |_| dd.clone())
    }

    /// Concatenation of paths, each traversed over one consecutive block of
    /// parameter; quadrature treats every piece separately so corners are
    /// integrated exactly.
    pub fn concat(pieces: Vec<Path>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::InvalidInput("no pieces to concatenate".into()));
        };
        let dim = first.dim;
        for w in pieces.windows(2) {
            let gap = (w[0].point(w[0].t1) - w[1].point(0.0)).norm();
            if w[1].dim != dim || gap > CLOSURE_TOL {
                return Err(Error::InvalidInput(format!("pieces do not join (gap {gap:e})")));
            }
        }
        let starts: Vec<f64> = pieces
            .iter()
            .scan(0.0, |acc, p| {
                let s = *acc;
                *acc += p.t1;
                Some(s)
            })
            .collect();
        let t1 = pieces.iter().map(|p| p.t1).sum();
        let locate = {
            let starts = starts.clone();
            move |t: f64| starts.iter().rposition(|&s| t >= s).unwrap_or(0)
        };
        let (pa, sa, la) = (pieces.clone(), starts.clone(), locate.clone());
        let (pb, sb, lb) = (pieces.clone(), starts, locate);
        let mut path = Self::new(dim, t1, move |t| {
            let i = la(t);
            pa[i].point(t - sa[i])
        })
        .with_derivative(move |t| {
            let i = lb(t);
            pb[i].velocity(t - sb[i])
        });
        path.segments = DEFAULT_SEGMENTS.next_multiple_of(2 * pieces.len());
        path.pieces = pieces;
        Ok(path)
    }

    /// Polygonal path through `points`, one unit of parameter per edge.
    pub fn polyline(points: &[Vec<f64>]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("a polyline needs two points".into()));
        }
        Self::concat(points.windows(2).map(|w| Path::segment(&w[0], &w[1])).collect())
    }

    /// Circle of radius `r` around `center` in the coordinate plane
    /// `(plane.0, plane.1)`, counter-clockwise over `[0, 2 pi]`.
    pub fn circle(center: &[f64], r: f64, plane: (usize, usize)) -> Result<Self> {
        let k = center.len();
        if plane.0 >= k || plane.1 >= k || plane.0 == plane.1 {
            return Err(Error::InvalidInput(format!("plane {plane:?} is not a coordinate plane of R^{k}")));
        }
        let c = DVector::from_column_slice(center);
        let (i, j) = plane;
        Self::new(k, 2.0 * PI, move |t| {
            let mut p = c.clone();
            p[i] += r * t.cos();
            p[j] += r * t.sin();
            p
        })
        .with_derivative(move |t| {
            let mut d = DVector::zeros(k);
            d[i] = -r * t.sin();
            d[j] = r * t.cos();
            d
        })
        .closed()
    }

    /// The same curve traversed with the time change
    /// `s = t + kappa t (t1 - t) / t1`, `|kappa| < 1`. The end speeds differ,
    /// so a periodic integrand becomes non-periodic in `t`.
    pub fn with_quadratic_timing(&self, kappa: f64) -> Result<Path> {
        if kappa.abs() >= 1.0 || !self.pieces.is_empty() {
            return Err(Error::InvalidInput("time change needs |kappa| < 1 on a simple path".into()));
        }
        let t1 = self.t1;
        let (g, dg) = (self.clone(), self.clone());
        Ok(Path {
            dim: self.dim,
            t1,
            gamma: Arc::new(move |t| g.point(t + kappa * t * (t1 - t) / t1)),
            dgamma: Some(Arc::new(move |t| {
                dg.velocity(t + kappa * t * (t1 - t) / t1) * (1.0 + kappa * (t1 - 2.0 * t) / t1)
            })),
            segments: self.segments,
            closed: self.closed,
            pieces: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// `gamma(t)`.
    pub fn point(&self, t: f64) -> DVector<f64> {
        (self.gamma)(t)
    }

    /// `gamma'(t)`, analytic when attached.
    pub fn velocity(&self, t: f64) -> DVector<f64> {
        match &self.dgamma {
            Some(d) => d(t),
            None => {
                let h = 1e-6 * (1.0 + self.t1.abs());
                ((self.gamma)(t + h) - (self.gamma)(t - h)) / (2.0 * h)
            }
        }
    }
}

fn check_inputs(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra, k: usize) -> Result<()> {
    let checks = [
        ("phi codomain", alg.dim(), phi.codomain()),
        ("f codomain", alg.dim(), f.codomain()),
        ("phi domain", k, phi.domain()),
        ("f domain", k, f.domain()),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(Error::DimensionMismatch { what, expected, found });
        }
    }
    Ok(())
}

/// `f(gamma(t)) dphi(gamma'(t))`.
fn integrand(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra, path: &Path, t: f64) -> Result<Element> {
    let u = path.point(t);
    let fu = f.eval(u.as_slice())?;
    let dphi = phi.jacobian(u.as_slice())? * path.velocity(t);
    Ok(alg.mul(&fu, &dphi))
}

/// Composite Simpson quadrature of the line integral with the path's
/// subinterval count.
pub fn line_integral(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra, path: &Path) -> Result<Element> {
    line_integral_with(f, phi, alg, path, path.segments)
}

/// Composite Simpson quadrature with `n` subintervals (rounded up to even).
pub fn line_integral_with(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra, path: &Path, n: usize) -> Result<Element> {
    Ok(simpson(f, phi, alg, path, n)?.0)
}

/// Simpson sum and the matching sum of `|integrand|`.
fn simpson(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra, path: &Path, n: usize) -> Result<(Element, f64)> {
    check_inputs(f, phi, alg, path.dim)?;
    if !path.pieces.is_empty() {
        let per = (n / path.pieces.len()).max(2);
        let mut acc = alg.zero();
        let mut mag = 0.0;
        for piece in &path.pieces {
            let (v, m) = simpson(f, phi, alg, piece, per)?;
            acc += v;
            mag += m;
        }
        return Ok((acc, mag));
    }
    let n = n.max(2).next_multiple_of(2);
    let h = path.t1 / n as f64;
    let mut acc = alg.zero();
    let mut mag = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let g = integrand(f, phi, alg, path, i as f64 * h)?;
        mag += w * g.norm();
        acc += g * w;
    }
    Ok((acc * (h / 3.0), mag * h / 3.0))
}

/// Integral magnitudes of a closed loop over a ladder of subinterval counts.
#[derive(Debug, Clone, Serialize)]
pub struct LoopReport {
    /// `(N, ||I_N||)` for every ladder rung.
    pub magnitudes: Vec<(usize, f64)>,
    /// The integral at the finest rung.
    pub integral: Vec<f64>,
    /// `||I_N||` at the finest rung.
    pub final_magnitude: f64,
    /// Smallest `log2(||I_N|| / ||I_2N||)` over consecutive rungs above the
    /// roundoff floor; `None` when every rung is already at the floor.
    pub order: Option<f64>,
    /// Roundoff floor `1e3 eps int |integrand|`.
    pub noise_floor: f64,
}

/// Integrates over the closed `path` for each `N` in `ladder` and estimates
/// the observed convergence order of the magnitudes towards zero.
pub fn closed_loop_check(
    f: &SmoothMap,
    phi: &SmoothMap,
    alg: &Algebra,
    path: &Path,
    ladder: &[usize],
) -> Result<LoopReport> {
    if !path.closed {
        return Err(Error::InvalidInput("closed_loop_check needs a closed path".into()));
    }
    if ladder.is_empty() {
        return Err(Error::InvalidInput("empty subinterval ladder".into()));
    }
    let mut magnitudes = Vec::with_capacity(ladder.len());
    let mut integral = alg.zero();
    let mut scale = 0.0f64;
    for &n in ladder {
        let (val, mag) = simpson(f, phi, alg, path, n)?;
        scale = scale.max(mag);
        magnitudes.push((n, val.norm()));
        integral = val;
    }
    let noise_floor = 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let order = magnitudes
        .windows(2)
        .filter(|w| w[1].1 > noise_floor && w[0].1 > noise_floor)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[1].0 as f64 / w[0].0 as f64).ln())
        .reduce(f64::min);
    let final_magnitude = magnitudes.last().map_or(0.0, |m| m.1);
    Ok(LoopReport {
        magnitudes,
        integral: integral.iter().copied().collect(),
        final_magnitude,
        order,
        noise_floor,
    })
}

/// The `n` fields `G_q(u) = sum_j (sum_{m,l} f_m phi_{l,u_j} c_{lmq}) e_j`,
/// i.e. the rows of `R(f(u)) Jphi(u)`.
pub fn conservative_fields(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra) -> Result<Vec<SmoothMap>> {
    check_inputs(f, phi, alg, phi.domain())?;
    let k = phi.domain();
    Ok((0..alg.dim())
        .map(|q| {
            let (f, phi, alg) = (f.clone(), phi.clone(), alg.clone());
            SmoothMap::try_new(k, k, move |u| {
                let m = alg.rep(&f.eval(u)?) * phi.jacobian(u)?;
                Ok(m.row(q).transpose())
            })
        })
        .collect())
}

/// Largest `|d_i G_j - d_j G_i|` of a field `G: R^k -> R^k` at `u`, by
/// central differences with step `h`.
pub fn fd_curl(field: &SmoothMap, u: &[f64], h: f64) -> Result<f64> {
    let j = central_jacobian(|p| field.eval(p), u, field.codomain(), h)?;
    let mut worst = 0.0f64;
    for a in 0..j.nrows() {
        for b in (a + 1)..j.ncols() {
            worst = worst.max((j[(a, b)] - j[(b, a)]).abs());
        }
    }
    Ok(worst)
}

/// `F(u) = int f dphi` along the straight segment from `u0` to `u`, with
/// `segments` Simpson subintervals. Its Jacobian is left to finite
/// differences.
pub fn antiderivative(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra, u0: &[f64], segments: usize) -> Result<SmoothMap> {
    check_inputs(f, phi, alg, u0.len())?;
    let (f, phi, alg, u0) = (f.clone(), phi.clone(), alg.clone(), u0.to_vec());
    Ok(SmoothMap::try_new(u0.len(), alg.dim(), move |u| {
        let path = Path::segment(&u0, u).with_segments(segments);
        line_integral(&f, &phi, &alg, &path)
    }))
}

/// The `R(f) Jphi` matrix at `u`, whose rows are the values of the `G_q`.
pub fn field_matrix(f: &SmoothMap, phi: &SmoothMap, alg: &Algebra, u: &[f64]) -> Result<DMatrix<f64>> {
    Ok(alg.rep(&f.eval(u)?) * phi.jacobian(u)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::{phi_derivative, AlgebraFunction};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn swap() -> SmoothMap {
        SmoothMap::linear(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))
    }

    #[test]
    fn unit_integrand_gives_increment() {
        let alg = Algebra::complex();
        let phi = SmoothMap::identity(2);
        let e = SmoothMap::constant(2, alg.unit());
        let path = Path::segment(&[0.5, -1.0], &[2.0, 3.0]);
        let v = line_integral(&e, &phi, &alg, &path).unwrap();
        assert_relative_eq!(v, dvector![1.5, 4.0], epsilon = 1e-13);
    }

    #[test]
    fn cauchy_for_z_and_residue_for_inverse() {
        let alg = Algebra::complex();
        let phi = SmoothMap::identity(2);
        let circle = Path::circle(&[0.0, 0.0], 1.0, (0, 1)).unwrap();
        let z = line_integral(&phi, &phi, &alg, &circle).unwrap();
        assert!(z.norm() < 1e-13);
        let inv = AlgebraFunction::power(&alg, -1).after(&phi).unwrap();
        let r = line_integral(&inv, &phi, &alg, &circle).unwrap();
        assert_relative_eq!(r, dvector![0.0, 2.0 * PI], epsilon = 1e-12);
    }

    #[test]
    fn closed_loop_order_is_visible_with_time_change() {
        let alg = Algebra::complex();
        let f = AlgebraFunction::power(&alg, 2).after(&swap()).unwrap();
        let path = Path::circle(&[0.0, 0.0], 1.0, (0, 1)).unwrap().with_quadratic_timing(0.25).unwrap();
        let rep = closed_loop_check(&f, &swap(), &alg, &path, &LOOP_LADDER).unwrap();
        assert!(rep.final_magnitude < 1e-8, "{rep:?}");
        assert!(rep.order.unwrap() >= 3.5, "{rep:?}");
        let uniform = Path::circle(&[0.0, 0.0], 1.0, (0, 1)).unwrap();
        let rep = closed_loop_check(&f, &swap(), &alg, &uniform, &LOOP_LADDER).unwrap();
        assert!(rep.final_magnitude < 1e-10);
    }

    #[test]
    fn open_paths_cannot_be_loop_checked() {
        let alg = Algebra::complex();
        let phi = SmoothMap::identity(2);
        let path = Path::segment(&[0.0, 0.0], &[1.0, 0.0]);
        assert!(closed_loop_check(&phi, &phi, &alg, &path, &LOOP_LADDER).is_err());
        assert!(Path::segment(&[0.0, 0.0], &[1.0, 0.0]).closed().is_err());
    }

    #[test]
    fn path_independence() {
        let alg = Algebra::a2_1(0.3, -0.7);
        let phi = SmoothMap::new(2, 2, |u| dvector![u[0] + 0.2 * u[1] * u[1], u[1] - 0.1 * u[0]]);
        let f = AlgebraFunction::exp(&alg).after(&phi).unwrap();
        let straight = Path::segment(&[0.0, 0.0], &[1.0, 1.0]);
        let bent = Path::polyline(&[vec![0.0, 0.0], vec![1.0, -0.5], vec![1.0, 1.0]]).unwrap();
        let a = line_integral(&f, &phi, &alg, &straight).unwrap();
        let b = line_integral(&f, &phi, &alg, &bent).unwrap();
        assert!((a - b).norm() < 1e-8);
    }

    #[test]
    fn fields_of_unit_are_gradients() {
        let alg = Algebra::a2_12();
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let phi = SmoothMap::linear(m.clone());
        let e = SmoothMap::constant(3, alg.unit());
        let gs = conservative_fields(&e, &phi, &alg).unwrap();
        for (q, g) in gs.iter().enumerate() {
            let v = g.eval(&[0.3, -0.2, 1.0]).unwrap();
            assert_eq!(v, m.row(q).transpose());
        }
    }

    #[test]
    fn fields_are_curl_free() {
        let alg = Algebra::a2_2(0.5, 1.5);
        let phi = SmoothMap::new(2, 2, |u| dvector![u[0] * u[1], u[0] - u[1] * u[1]]);
        let f = AlgebraFunction::polynomial(&alg, vec![dvector![0.0, 1.0], dvector![1.0, 0.5], dvector![0.2, -0.3]])
            .unwrap()
            .after(&phi)
            .unwrap();
        for g in conservative_fields(&f, &phi, &alg).unwrap() {
            assert!(fd_curl(&g, &[0.4, -0.7], 1e-4).unwrap() < 1e-5);
        }
    }

    #[test]
    fn antiderivative_of_phi() {
        let alg = Algebra::complex();
        let phi = swap();
        let ad = antiderivative(&phi, &phi, &alg, &[0.2, 0.1], 64).unwrap();
        let u = [0.7, -0.4];
        let sq = |p: &[f64]| {
            let w = phi.eval(p).unwrap();
            alg.mul(&w, &w)
        };
        let expected = (sq(&u) - sq(&[0.2, 0.1])) / 2.0;
        assert_relative_eq!(ad.eval(&u).unwrap(), expected, epsilon = 1e-12);
        let d = phi_derivative(&ad, &phi, &alg, &u).unwrap();
        assert_relative_eq!(d.derivative, phi.eval(&u).unwrap(), epsilon = 1e-6);
    }
}
