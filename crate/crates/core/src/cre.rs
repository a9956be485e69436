//! Generalized Cauchy-Riemann systems.
//!
//! For `phi: R^k -> A` the derivative condition `df = R(g) dphi` is
//! equivalent (given a regular direction) to the linear first-order system
//! `dphi(e_j) f_{u_i} = dphi(e_i) f_{u_j}`, one equation per pair `i < j`
//! and algebra component `q`. This module emits those systems as coefficient
//! tensors and solves the inverse problem for planar systems of two PDEs:
//! recover `phi` and the algebra from the coefficient pattern.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Element, PlanarCase};
use crate::error::{Error, MatchStage, Result};
use crate::linalg::lstsq;
use crate::map::SmoothMap;

/// One equation `sum_{m,i} a[m][i] d f_m / d u_i = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreEquation {
    /// The independent-variable pair `(i, j)`, `i < j`.
    pub pair: (usize, usize),
    /// Algebra component `q`.
    pub component: usize,
    /// `coefficients[m][i]` multiplies `d f_m / d u_i`.
    pub coefficients: Vec<Vec<f64>>,
}

impl CreEquation {
    /// Value of the left-hand side for a Jacobian `jf[m][i]`.
    pub fn apply(&self, jf: &DMatrix<f64>) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(m, row)| row.iter().enumerate().map(|(i, a)| a * jf[(m, i)]).sum::<f64>())
            .sum()
    }

    /// Coefficients as an `n x k` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.coefficients.len();
        let k = self.coefficients.first().map_or(0, Vec::len);
        DMatrix::from_fn(n, k, |m, i| self.coefficients[m][i])
    }
}

/// A homogeneous linear first-order system with constant coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreSystem {
    /// Number of dependent variables `n`.
    pub dependents: usize,
    /// Number of independent variables `k`.
    pub independents: usize,
    pub equations: Vec<CreEquation>,
}

const DEPENDENT_NAMES: [&str; 3] = ["u", "v", "w"];
const INDEPENDENT_NAMES: [&str; 3] = ["x", "y", "z"];

fn dependent_name(m: usize, n: usize) -> String {
    if n <= 3 {
        DEPENDENT_NAMES[m].to_string()
    } else {
        format!("f_{{{}}}", m + 1)
    }
}

fn independent_name(i: usize, k: usize) -> String {
    if k <= 3 {
        INDEPENDENT_NAMES[i].to_string()
    } else {
        format!("u_{}", i + 1)
    }
}

fn latex_terms(terms: &[(f64, String)]) -> String {
    let mut out = String::new();
    for (c, name) in terms {
        if *c == 0.0 {
            continue;
        }
        let mag = c.abs();
        let body = if mag == 1.0 { name.clone() } else { format!("{mag}{name}") };
        if out.is_empty() {
            if *c < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(if *c < 0.0 { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

impl CreSystem {
    /// Left-hand side of every equation for a Jacobian `jf`.
    pub fn residuals(&self, jf: &DMatrix<f64>) -> Vec<f64> {
        self.equations.iter().map(|e| e.apply(jf)).collect()
    }

    /// Largest absolute left-hand side for a Jacobian `jf`.
    pub fn max_residual(&self, jf: &DMatrix<f64>) -> f64 {
        self.residuals(jf).into_iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    /// LaTeX rendering, one `... = 0` line per equation.
    pub fn to_latex(&self) -> String {
        let (n, k) = (self.dependents, self.independents);
        let lines: Vec<String> = self
            .equations
            .iter()
            .map(|e| {
                let mut terms = Vec::new();
                for i in 0..k {
                    for m in 0..n {
                        terms.push((
                            e.coefficients[m][i],
                            format!("{}_{{{}}}", dependent_name(m, n), independent_name(i, k)),
                        ));
                    }
                }
                format!("{} = 0", latex_terms(&terms))
            })
            .collect();
        format!("\\begin{{aligned}}\n{}\n\\end{{aligned}}", lines.join(" \\\\\n"))
    }

    /// JSON rendering `{"dependents":..,"independents":..,"equations":[..]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("system serializes")
    }
}

fn check_phi_dim(alg: &Algebra, n: usize) -> Result<()> {
    if n == alg.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what: "phi codomain",
            expected: alg.dim(),
            found: n,
        })
    }
}

/// Emits the system for a fixed Jacobian `jphi` (`n x k`). The coefficient
/// of `f_{m,u_i}` in equation `(i<j, q)` is `sum_l phi_{l,u_j} c_{lmq}` and
/// that of `f_{m,u_j}` is `-sum_l phi_{l,u_i} c_{lmq}`.
pub fn emit_cre_from_jacobian(alg: &Algebra, jphi: &DMatrix<f64>) -> Result<CreSystem> {
    let (n, k) = jphi.shape();
    check_phi_dim(alg, n)?;
    let mut equations = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            for q in 0..n {
                let mut coefficients = vec![vec![0.0; k]; n];
                for (m, row) in coefficients.iter_mut().enumerate() {
                    let (mut ci, mut cj) = (0.0, 0.0);
                    for l in 0..n {
                        let c = alg.c(l, m, q);
                        ci += jphi[(l, j)] * c;
                        cj -= jphi[(l, i)] * c;
                    }
                    row[i] = ci;
                    row[j] = cj;
                }
                equations.push(CreEquation {
                    pair: (i, j),
                    component: q,
                    coefficients,
                });
            }
        }
    }
    Ok(CreSystem {
        dependents: n,
        independents: k,
        equations,
    })
}

/// Probe points used to decide whether `phi` has a constant Jacobian.
fn probe_points(k: usize) -> [Vec<f64>; 3] {
    [
        vec![0.0; k],
        (0..k).map(|i| 0.37 + 0.21 * i as f64).collect(),
        (0..k).map(|i| -1.3 + 0.55 * i as f64).collect(),
    ]
}

/// The system of a map `phi`: constant when `phi` is affine, otherwise
/// evaluated pointwise.
#[derive(Debug, Clone)]
pub struct CreField {
    alg: Algebra,
    phi: SmoothMap,
    constant: Option<CreSystem>,
}

impl CreField {
    /// Constant-coefficient system when the Jacobian of `phi` is constant.
    pub fn constant_system(&self) -> Option<&CreSystem> {
        self.constant.as_ref()
    }

    /// Coefficients frozen at the point `u`.
    pub fn at(&self, u: &[f64]) -> Result<CreSystem> {
        emit_cre_from_jacobian(&self.alg, &self.phi.jacobian(u)?)
    }
}

/// Emits the generalized Cauchy-Riemann system of `phi` over `alg`.
pub fn emit_cre(alg: &Algebra, phi: &SmoothMap) -> Result<CreField> {
    check_phi_dim(alg, phi.codomain())?;
    let probes = probe_points(phi.domain());
    let jacobians: Vec<_> = probes.iter().map(|p| phi.jacobian(p)).collect();
    let constant = match (&jacobians[0], &jacobians[1], &jacobians[2]) {
        (Ok(j0), Ok(j1), Ok(j2)) => {
            let scale = j0.norm().max(1e-300);
            if (j0 - j1).norm() <= 1e-12 * scale && (j0 - j2).norm() <= 1e-12 * scale {
                Some(emit_cre_from_jacobian(alg, j0)?)
            } else {
                None
            }
        }
        _ => None,
    };
    Ok(CreField {
        alg: alg.clone(),
        phi: phi.clone(),
        constant,
    })
}

/// The single equation `k (first CRE) + l (second CRE)` of a planar algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCre {
    pub weights: [f64; 2],
    /// `coefficients[m][i]` multiplies `d f_m / d u_i`.
    pub coefficients: Vec<Vec<f64>>,
}

impl WeightedCre {
    /// Left-hand side for a Jacobian `jf`.
    pub fn apply(&self, jf: &DMatrix<f64>) -> f64 {
        (0..2)
            .flat_map(|m| (0..2).map(move |i| (m, i)))
            .map(|(m, i)| self.coefficients[m][i] * jf[(m, i)])
            .sum()
    }
}

/// Weighted combination of the two equations of a planar system.
pub fn emit_weighted_cre(alg: &Algebra, jphi: &DMatrix<f64>, k: f64, l: f64) -> Result<WeightedCre> {
    if alg.dim() != 2 || jphi.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            what: "planar algebra and 2x2 phi Jacobian",
            expected: 2,
            found: alg.dim().max(jphi.ncols()),
        });
    }
    let sys = emit_cre_from_jacobian(alg, jphi)?;
    let (e1, e2) = (&sys.equations[0], &sys.equations[1]);
    let coefficients = (0..2)
        .map(|m| (0..2).map(|i| k * e1.coefficients[m][i] + l * e2.coefficients[m][i]).collect())
        .collect();
    Ok(WeightedCre {
        weights: [k, l],
        coefficients,
    })
}

/// A polynomial `c + x X + y Y` of degree at most one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly1 {
    #[serde(rename = "const", default)]
    pub c: f64,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

impl Poly1 {
    pub const ZERO: Poly1 = Poly1 { c: 0.0, x: 0.0, y: 0.0 };

    pub fn new(c: f64, x: f64, y: f64) -> Self {
        Self { c, x, y }
    }

    /// The constant polynomial `c`.
    pub fn constant(c: f64) -> Self {
        Self::new(c, 0.0, 0.0)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c + self.x * x + self.y * y
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.c * s, self.x * s, self.y * s)
    }

    pub fn add(&self, o: &Poly1) -> Self {
        Self::new(self.c + o.c, self.x + o.x, self.y + o.y)
    }

    fn coeffs(&self) -> [f64; 3] {
        [self.c, self.x, self.y]
    }

    fn max_abs(&self) -> f64 {
        self.c.abs().max(self.x.abs()).max(self.y.abs())
    }
}

/// A system `<A : dw> = F` of two first-order PDEs in `w = (u, v)` over
/// `(x, y)`. Columns of `A` multiply `(u_x, u_y, v_x, v_y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPdeSystem {
    pub a: [[Poly1; 4]; 2],
    #[serde(default)]
    pub f: [Poly1; 2],
}

impl TwoPdeSystem {
    /// Homogeneous system with the given coefficient rows.
    pub fn homogeneous(a: [[Poly1; 4]; 2]) -> Self {
        Self {
            a,
            f: [Poly1::ZERO; 2],
        }
    }

    /// Constant-coefficient planar system from an emitted CRE system.
    pub fn from_cre(sys: &CreSystem) -> Result<Self> {
        if sys.dependents != 2 || sys.independents != 2 || sys.equations.len() != 2 {
            return Err(Error::DimensionMismatch {
                what: "planar CRE system",
                expected: 2,
                found: sys.dependents.max(sys.independents),
            });
        }
        let row = |e: &CreEquation| {
            let c = &e.coefficients;
            [c[0][0], c[0][1], c[1][0], c[1][1]].map(Poly1::constant)
        };
        Ok(Self::homogeneous([row(&sys.equations[0]), row(&sys.equations[1])]))
    }

    /// The CRE system of a quadratic map `phi = (p1, p2)` over a planar
    /// algebra; its coefficients are polynomials of degree one.
    pub fn from_quadratic_phi(alg: &Algebra, phi: &[QuadPoly; 2]) -> Result<Self> {
        check_phi_dim(alg, 2)?;
        let grads = phi.map(|p| p.gradient_polys());
        let mut a = [[Poly1::ZERO; 4]; 2];
        for (q, row) in a.iter_mut().enumerate() {
            for m in 0..2 {
                let mut cx = Poly1::ZERO;
                let mut cy = Poly1::ZERO;
                for (l, g) in grads.iter().enumerate() {
                    let c = alg.c(l, m, q);
                    cx = cx.add(&g[1].scale(c));
                    cy = cy.add(&g[0].scale(-c));
                }
                row[2 * m] = cx;
                row[2 * m + 1] = cy;
            }
        }
        Ok(Self::homogeneous(a))
    }

    /// Coefficient matrix at `(x, y)`.
    pub fn matrix_at(&self, x: f64, y: f64) -> DMatrix<f64> {
        DMatrix::from_fn(2, 4, |r, c| self.a[r][c].eval(x, y))
    }

    /// Right-hand side at `(x, y)`.
    pub fn rhs_at(&self, x: f64, y: f64) -> DVector<f64> {
        DVector::from_fn(2, |r, _| self.f[r].eval(x, y))
    }

    /// `<A : dw> - F` at `(x, y)` for a Jacobian `jw` of `w = (u, v)`.
    pub fn residual(&self, x: f64, y: f64, jw: &DMatrix<f64>) -> DVector<f64> {
        let d = DVector::from_column_slice(&[jw[(0, 0)], jw[(0, 1)], jw[(1, 0)], jw[(1, 1)]]);
        self.matrix_at(x, y) * d - self.rhs_at(x, y)
    }

    fn is_homogeneous(&self) -> bool {
        self.f.iter().all(|p| p.max_abs() == 0.0)
    }

    fn scale(&self) -> f64 {
        self.a.iter().flatten().map(Poly1::max_abs).fold(1.0, f64::max)
    }

    fn swapped(&self) -> Self {
        Self {
            a: [self.a[1], self.a[0]],
            f: [self.f[1], self.f[0]],
        }
    }
}

/// A quadratic polynomial in `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadPoly {
    #[serde(rename = "const")]
    pub c: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl QuadPoly {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c + self.x * x + self.y * y + self.xx * x * x + self.xy * x * y + self.yy * y * y
    }

    /// Gradient `(d/dx, d/dy)` at `(x, y)`.
    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        [
            self.x + 2.0 * self.xx * x + self.xy * y,
            self.y + self.xy * x + 2.0 * self.yy * y,
        ]
    }

    /// Partial derivatives `(d/dx, d/dy)` as degree-one polynomials.
    pub fn gradient_polys(&self) -> [Poly1; 2] {
        [
            Poly1::new(self.x, 2.0 * self.xx, self.xy),
            Poly1::new(self.y, self.xy, 2.0 * self.yy),
        ]
    }

    /// Potential of the conservative field `(P, Q)` with zero constant.
    fn potential(p: &Poly1, q: &Poly1) -> Self {
        Self {
            c: 0.0,
            x: p.c,
            y: q.c,
            xx: p.x / 2.0,
            xy: p.y,
            yy: q.y / 2.0,
        }
    }
}

/// The map `(x, y) -> (p1(x, y), p2(x, y))` with its exact Jacobian.
pub fn quadratic_map(p: [QuadPoly; 2]) -> SmoothMap {
    SmoothMap::new(2, 2, move |u| DVector::from_vec(vec![p[0].eval(u[0], u[1]), p[1].eval(u[0], u[1])]))
        .with_jacobian(move |u| {
            let (g1, g2) = (p[0].gradient(u[0], u[1]), p[1].gradient(u[0], u[1]));
            DMatrix::from_row_slice(2, 2, &[g1[0], g1[1], g2[0], g2[1]])
        })
}

/// Result of [`recover_phi_algebra`].
#[derive(Debug, Clone)]
pub struct Recovery {
    pub case: PlanarCase,
    /// `(alpha, beta)` or `(gamma, delta)`; `None` for `A2_12`.
    pub params: Option<[f64; 2]>,
    /// Potentials `phi_1, phi_2` (zero integration constants).
    pub potentials: [QuadPoly; 2],
    pub phi: SmoothMap,
    pub algebra: Algebra,
    /// Constant factor applied to the first matched row.
    pub row_scale: f64,
    /// Whether the two rows were exchanged to match the pattern.
    pub rows_swapped: bool,
    /// True when the system has a right-hand side; its solutions are then
    /// `f + w_p` for a particular solution `w_p` the caller must supply.
    pub requires_particular_solution: bool,
}

/// Fields `(b_ij)` of a matched pattern as the two gradient fields.
struct Matched {
    case: PlanarCase,
    params: Option<[f64; 2]>,
    grads: [(Poly1, Poly1); 2],
    row_scale: f64,
}

/// Linear identities over degree-1 polynomials: each `sum_u a_u P_u = R`
/// contributes three scalar equations.
struct PolyLinearSystem {
    rows: Vec<[f64; 3]>,
    rhs: Vec<f64>,
}

impl PolyLinearSystem {
    fn new() -> Self {
        Self { rows: Vec::new(), rhs: Vec::new() }
    }

    fn push(&mut self, terms: [Poly1; 3], rhs: Poly1) {
        let cs = terms.map(|p| p.coeffs());
        let r = rhs.coeffs();
        for d in 0..3 {
            self.rows.push([cs[0][d], cs[1][d], cs[2][d]]);
            self.rhs.push(r[d]);
        }
    }

    fn solve(&self, tol: f64) -> Option<[f64; 3]> {
        let a = DMatrix::from_fn(self.rows.len(), 3, |r, c| self.rows[r][c]);
        let b = DVector::from_vec(self.rhs.clone());
        let ls = lstsq(&a, &b, 1e-12);
        (ls.residual <= tol).then(|| [ls.x[0], ls.x[1], ls.x[2]])
    }
}

fn match_a(s: &TwoPdeSystem, tol: f64) -> Option<Matched> {
    let [r1, r2] = &s.a;
    let z = Poly1::ZERO;
    let mut sys = PolyLinearSystem::new();
    sys.push([r1[2], r2[0].scale(-1.0), z], z);
    sys.push([r1[3], r2[1].scale(-1.0), z], z);
    sys.push([r1[0], z, r2[0]], r2[2]);
    sys.push([r1[1], z, r2[1]], r2[3]);
    let [t, alpha, beta] = sys.solve(tol)?;
    if t.abs() <= 1e-12 {
        return None;
    }
    let (b11, b12, b21, b22) = (r1[0].scale(t), r1[1].scale(t), r2[0], r2[1]);
    Some(Matched {
        case: PlanarCase::A21,
        params: Some([alpha, beta]),
        grads: [(b12.scale(-1.0), b11), (b22.scale(-1.0), b21)],
        row_scale: t,
    })
}

fn match_b(s: &TwoPdeSystem, tol: f64) -> Option<Matched> {
    let [r1, r2] = &s.a;
    let z = Poly1::ZERO;
    let mut sys = PolyLinearSystem::new();
    sys.push([r1[0], r1[2].scale(-1.0), z], r2[2]);
    sys.push([r1[1], r1[3].scale(-1.0), z], r2[3]);
    sys.push([z, z, r1[2]], r2[0]);
    sys.push([z, z, r1[3]], r2[1]);
    let [t, g, d] = sys.solve(tol)?;
    if t.abs() <= 1e-12 {
        return None;
    }
    let (b13, b14, b23, b24) = (r1[2].scale(t), r1[3].scale(t), r2[2], r2[3]);
    Some(Matched {
        case: PlanarCase::A22,
        params: Some([g / t, d / t]),
        grads: [(b14.scale(-1.0), b13), (b24.scale(-1.0), b23)],
        row_scale: t,
    })
}

fn match_c(s: &TwoPdeSystem, tol: f64) -> Option<Matched> {
    let [r1, r2] = &s.a;
    let off = [r1[2], r1[3], r2[0], r2[1]];
    if off.iter().any(|p| p.max_abs() > tol) {
        return None;
    }
    Some(Matched {
        case: PlanarCase::A12,
        params: None,
        grads: [(r1[1].scale(-1.0), r1[0]), (r2[3].scale(-1.0), r2[2])],
        row_scale: 1.0,
    })
}

/// Matches a homogeneous two-PDE system with degree-1 coefficients against
/// the CRE patterns of `A2_1`, `A2_2` and `A2_12` (in that order), allowing a
/// constant scaling of one row and an exchange of rows, then integrates the
/// extracted gradient fields to the potentials of `phi`.
pub fn recover_phi_algebra(system: &TwoPdeSystem) -> Result<Recovery> {
    recover_with_cases(system, &PlanarCase::ALL)
}

/// Like [`recover_phi_algebra`] but only tries the pattern of `case`.
pub fn recover_phi_in_case(system: &TwoPdeSystem, case: PlanarCase) -> Result<Recovery> {
    recover_with_cases(system, &[case])
}

type Matcher = fn(&TwoPdeSystem, f64) -> Option<Matched>;

fn matcher_for(case: PlanarCase) -> Matcher {
    match case {
        PlanarCase::A21 => match_a,
        PlanarCase::A22 => match_b,
        PlanarCase::A12 => match_c,
    }
}

fn recover_with_cases(system: &TwoPdeSystem, cases: &[PlanarCase]) -> Result<Recovery> {
    let tol = 1e-12 * system.scale();
    let mut reached_conservativeness = false;
    for swapped in [false, true] {
        let s = if swapped { system.swapped() } else { system.clone() };
        for matcher in cases.iter().map(|&c| matcher_for(c)) {
            let Some(m) = matcher(&s, tol) else { continue };
            reached_conservativeness = true;
            let conservative = m.grads.iter().all(|(p, q)| (p.y - q.x).abs() <= tol * m.row_scale.abs().max(1.0));
            if !conservative {
                continue;
            }
            let potentials = m.grads.map(|(p, q)| QuadPoly::potential(&p, &q));
            let phi = quadratic_map(potentials);
            let nondegenerate = probe_points(2).iter().any(|u| {
                phi.jacobian(u)
                    .map(|j| j.determinant().abs() > 1e-12 * j.norm_squared().max(1e-300))
                    .unwrap_or(false)
            });
            if !nondegenerate {
                continue;
            }
            return Ok(Recovery {
                case: m.case,
                params: m.params,
                potentials,
                algebra: m.case.algebra(m.params),
                phi,
                row_scale: m.row_scale,
                rows_swapped: swapped,
                requires_particular_solution: !system.is_homogeneous(),
            });
        }
    }
    Err(Error::NoMatch {
        stage: if reached_conservativeness {
            MatchStage::Conservativeness
        } else {
            MatchStage::Pattern
        },
    })
}

/// Constant element `lambda` with `Jref = R(lambda) Jphi` at every sample,
/// or `None` when no single element fits to `tol` (relative).
pub fn gauge_between(
    alg: &Algebra,
    phi: &SmoothMap,
    reference: &SmoothMap,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Option<Element>> {
    let mut lambda: Option<Element> = None;
    for u in points {
        let report = crate::phi::derivative_from_jacobians(alg, &reference.jacobian(u)?, &phi.jacobian(u)?);
        if report.residual > tol || !alg.is_regular(&report.derivative) {
            return Ok(None);
        }
        match &lambda {
            None => lambda = Some(report.derivative),
            Some(l) => {
                if (l - &report.derivative).norm() > tol * l.norm() {
                    return Ok(None);
                }
            }
        }
    }
    Ok(lambda)
}

/// Per-point matrices `M` with `A2 = M A1` and `F2 = M F1`.
pub fn find_equivalence_matrix(
    s1: &TwoPdeSystem,
    s2: &TwoPdeSystem,
    points: &[[f64; 2]],
) -> Result<Vec<DMatrix<f64>>> {
    let mut out = Vec::with_capacity(points.len());
    for &[x, y] in points {
        let aug = |s: &TwoPdeSystem| {
            let mut m = DMatrix::zeros(2, 5);
            m.view_mut((0, 0), (2, 4)).copy_from(&s.matrix_at(x, y));
            m.set_column(4, &s.rhs_at(x, y));
            m
        };
        let (a1, a2) = (aug(s1), aug(s2));
        let a1t = a1.transpose();
        let mut mt = DMatrix::zeros(2, 2);
        for r in 0..2 {
            let col = lstsq(&a1t, &a2.row(r).transpose(), 1e-12).x;
            mt.set_column(r, &col);
        }
        let m = mt.transpose();
        let res = (&m * &a1 - &a2).norm() / a2.norm().max(1e-300);
        if res > 1e-8 {
            return Err(Error::NotEquivalent(format!(
                "no matrix maps the first system onto the second at ({x}, {y}); residual {res:e}"
            )));
        }
        if m.determinant().abs() < 1e-12 {
            return Err(Error::NotEquivalent(format!("singular transformation at ({x}, {y})")));
        }
        out.push(m);
    }
    Ok(out)
}
