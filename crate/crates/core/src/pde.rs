//! Closed-form solutions of constant-coefficient linear PDEs built from
//! `phi`-differentiable functions, each verified by finite-difference
//! substitution.
//!
//! Every constructor returns the solution together with a [`ResidualReport`]
//! from [`pde_residual`], so the caller always sees how well the formula
//! satisfies its equation.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::Algebra;
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::map::{PhiMap, SmoothMap};

/// Relative step of the second-derivative finite differences, scaled by `1 + ||point||`.
pub const PDE_FD_STEP: f64 = 1e-4;
/// Relative step of the first-derivative finite differences, scaled by `1 + ||point||`.
pub const PDE_FD_STEP_FIRST: f64 = 1e-6;
/// Relative residual above which a constructed solution is flagged.
pub const FLAG_TOL: f64 = 1e-4;
/// Number of sample points used by the constructors.
pub const SAMPLE_POINTS: usize = 20;
/// Tolerance of the branch conditions of [`second_order_solution`].
pub const CONDITION_TOL: f64 = 1e-10;
/// Relative least-squares residual below which a singular exponent system is consistent.
pub const CONSISTENCY_TOL: f64 = 1e-10;

const ZERO_TOL: f64 = 1e-12;

type CoeffFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Which derivative of a dependent variable a term applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Derivative {
    Value,
    First(usize),
    Second(usize, usize),
}

/// Coefficient of a term, constant or a function of the independent variables.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Variable(Arc<CoeffFn>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "{c}"),
            Coefficient::Variable(_) => write!(f, "<variable>"),
        }
    }
}

impl Coefficient {
    fn at(&self, x: &[f64]) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Variable(g) => g(x),
        }
    }
}

/// One term `coefficient * D u_component`.
#[derive(Debug, Clone)]
pub struct Term {
    pub coefficient: Coefficient,
    pub component: usize,
    pub derivative: Derivative,
}

impl Term {
    pub fn new(coefficient: f64, component: usize, derivative: Derivative) -> Self {
        Self {
            coefficient: Coefficient::Constant(coefficient),
            component,
            derivative,
        }
    }

    /// A term whose coefficient varies with the independent variables.
    pub fn variable<G>(g: G, component: usize, derivative: Derivative) -> Self
    where
        G: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            coefficient: Coefficient::Variable(Arc::new(g)),
            component,
            derivative,
        }
    }
}

/// A homogeneous linear PDE system `sum_terms coefficient * D u_component = 0`,
/// one term list per equation.
#[derive(Debug, Clone)]
pub struct LinearPde {
    name: String,
    variables: usize,
    components: usize,
    equations: Vec<Vec<Term>>,
}

impl LinearPde {
    pub fn new(name: &str, variables: usize, components: usize, equations: Vec<Vec<Term>>) -> Result<Self> {
        for term in equations.iter().flatten() {
            if term.component >= components {
                return Err(Error::DimensionMismatch {
                    what: "term component",
                    expected: components,
                    found: term.component,
                });
            }
            let bad = match term.derivative {
                Derivative::Value => None,
                Derivative::First(i) => (i >= variables).then_some(i),
                Derivative::Second(i, j) => (i.max(j) >= variables).then_some(i.max(j)),
            };
            if let Some(found) = bad {
                return Err(Error::DimensionMismatch {
                    what: "derivative variable",
                    expected: variables,
                    found,
                });
            }
        }
        Ok(Self {
            name: name.to_string(),
            variables,
            components,
            equations,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn equations(&self) -> &[Vec<Term>] {
        &self.equations
    }

    /// `a u_x + b v_x - c u_y - d v_y = 0` in the variables `(x, y)`.
    pub fn first_order(a: f64, b: f64, c: f64, d: f64) -> Self {
        use Derivative::First;
        Self {
            name: "first-order".into(),
            variables: 2,
            components: 2,
            equations: vec![vec![
                Term::new(a, 0, First(0)),
                Term::new(b, 1, First(0)),
                Term::new(-c, 0, First(1)),
                Term::new(-d, 1, First(1)),
            ]],
        }
    }

    /// `a1 y_x + y_t + b1 y - b1 z = 0` and `-a2 z_x + z_t - b2 y + b2 z = 0`
    /// in the variables `(x, t)`.
    pub fn system_451(a1: f64, a2: f64, b1: f64, b2: f64) -> Self {
        use Derivative::{First, Value};
        Self {
            name: "system451".into(),
            variables: 2,
            components: 2,
            equations: vec![
                vec![
                    Term::new(a1, 0, First(0)),
                    Term::new(1.0, 0, First(1)),
                    Term::new(b1, 0, Value),
                    Term::new(-b1, 1, Value),
                ],
                vec![
                    Term::new(-a2, 1, First(0)),
                    Term::new(1.0, 1, First(1)),
                    Term::new(-b2, 0, Value),
                    Term::new(b2, 1, Value),
                ],
            ],
        }
    }

    /// `A u_xx + 2B u_xy + C u_yy + D u_x + E u_y = 0`.
    pub fn second_order(a: f64, b: f64, c: f64, d: f64, e: f64) -> Self {
        use Derivative::{First, Second};
        Self {
            name: "second-order".into(),
            variables: 2,
            components: 1,
            equations: vec![vec![
                Term::new(a, 0, Second(0, 0)),
                Term::new(2.0 * b, 0, Second(0, 1)),
                Term::new(c, 0, Second(1, 1)),
                Term::new(d, 0, First(0)),
                Term::new(e, 0, First(1)),
            ]],
        }
    }

    /// `alpha (u_x1x1 + ... + u_xnxn) - u_t = 0` in the variables `(t, x1, ..., xn)`.
    pub fn heat(alpha: f64, space_dim: usize) -> Self {
        let mut terms = vec![Term::new(-1.0, 0, Derivative::First(0))];
        terms.extend((1..=space_dim).map(|i| Term::new(alpha, 0, Derivative::Second(i, i))));
        Self {
            name: "heat".into(),
            variables: space_dim + 1,
            components: 1,
            equations: vec![terms],
        }
    }

    /// `u_x1x1 + ... + u_xnxn = 0`.
    pub fn laplace(dim: usize) -> Self {
        Self {
            name: "laplace".into(),
            variables: dim,
            components: 1,
            equations: vec![(0..dim).map(|i| Term::new(1.0, 0, Derivative::Second(i, i))).collect()],
        }
    }
}

/// Worst finite-difference residual over a set of points.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    /// Largest `|sum of terms|` over points and equations.
    pub absolute: f64,
    /// Largest `|sum of terms| / max |term|` over points and equations.
    pub relative: f64,
    /// Point attaining the largest relative residual.
    pub worst_point: Vec<f64>,
    pub points: usize,
}

impl ResidualReport {
    /// True when the relative residual exceeds [`FLAG_TOL`].
    pub fn flagged(&self) -> bool {
        !(self.relative <= FLAG_TOL)
    }
}

struct Stencil<'a> {
    u: &'a SmoothMap,
    x: &'a [f64],
    h: f64,
    h1: f64,
    center: DVector<f64>,
}

impl Stencil<'_> {
    fn shifted(&self, moves: &[(usize, f64)]) -> Result<DVector<f64>> {
        let mut p = self.x.to_vec();
        for &(i, s) in moves {
            p[i] += s;
        }
        self.u.eval(&p)
    }

    fn derivative(&self, d: Derivative) -> Result<DVector<f64>> {
        let (h, h1) = (self.h, self.h1);
        Ok(match d {
            Derivative::Value => self.center.clone(),
            Derivative::First(i) => (self.shifted(&[(i, h1)])? - self.shifted(&[(i, -h1)])?) / (2.0 * h1),
            Derivative::Second(i, j) if i == j => {
                (self.shifted(&[(i, h)])? - 2.0 * &self.center + self.shifted(&[(i, -h)])?) / (h * h)
            }
            Derivative::Second(i, j) => {
                (self.shifted(&[(i, h), (j, h)])? - self.shifted(&[(i, h), (j, -h)])?
                    - self.shifted(&[(i, -h), (j, h)])?
                    + self.shifted(&[(i, -h), (j, -h)])?)
                    / (4.0 * h * h)
            }
        })
    }
}

/// Substitutes `u` into `pde` with central differences at every point.
///
/// Both steps are `h` when given. Otherwise second derivatives use
/// `1e-4 (1 + ||point||)` and first derivatives `1e-6 (1 + ||point||)`.
pub fn pde_residual(u: &SmoothMap, pde: &LinearPde, points: &[Vec<f64>], h: Option<f64>) -> Result<ResidualReport> {
    if u.domain() != pde.variables || u.codomain() != pde.components {
        return Err(Error::DimensionMismatch {
            what: "solution shape",
            expected: pde.components,
            found: u.codomain(),
        });
    }
    let mut report = ResidualReport {
        absolute: 0.0,
        relative: 0.0,
        worst_point: points.first().cloned().unwrap_or_default(),
        points: points.len(),
    };
    for x in points {
        let radius = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let stencil = Stencil {
            u,
            x,
            h: h.unwrap_or(PDE_FD_STEP * radius),
            h1: h.unwrap_or(PDE_FD_STEP_FIRST * radius),
            center: u.eval(x)?,
        };
        for eq in &pde.equations {
            let mut sum = 0.0;
            let mut largest: f64 = 0.0;
            for term in eq {
                let value = term.coefficient.at(x) * stencil.derivative(term.derivative)?[term.component];
                sum += value;
                largest = largest.max(value.abs());
            }
            let abs = sum.abs();
            let rel = if abs == 0.0 { 0.0 } else { abs / largest };
            if !abs.is_finite() || !rel.is_finite() {
                return Err(Error::InvalidInput(format!("solution is not finite near {x:?}")));
            }
            report.absolute = report.absolute.max(abs);
            if rel > report.relative {
                report.relative = rel;
                report.worst_point = x.clone();
            }
        }
    }
    Ok(report)
}

/// `count` deterministic low-discrepancy points in the box `[lo, hi]^dim`.
pub fn sample_points(dim: usize, count: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    // Generalized golden ratio: the unique positive root of x^(dim+1) = x + 1.
    let mut g = 2.0_f64;
    for _ in 0..64 {
        g = (1.0 + g).powf(1.0 / (dim as f64 + 1.0));
    }
    let steps: Vec<f64> = (1..=dim).map(|j| g.powi(-(j as i32))).collect();
    (1..=count)
        .map(|k| {
            steps
                .iter()
                .map(|s| lo + (hi - lo) * (0.5 + k as f64 * s).fract())
                .collect()
        })
        .collect()
}

/// `a u_x + b v_x - c u_y - d v_y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct FirstOrderPde {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl FirstOrderPde {
    pub fn operator(&self) -> LinearPde {
        LinearPde::first_order(self.a, self.b, self.c, self.d)
    }
}

/// A linear `phi` whose `phi`-differentiable functions in `A2_1(alpha, beta)`
/// solve a [`FirstOrderPde`].
#[derive(Debug, Clone)]
pub struct FirstOrderSolution {
    pub pde: FirstOrderPde,
    pub alpha: f64,
    pub beta: f64,
    /// Matrix of the linear map `phi`.
    pub matrix: [[f64; 2]; 2],
    pub algebra: Algebra,
    pub phi: PhiMap,
    /// Residual of `(u, v) = phi`.
    pub residual: ResidualReport,
}

/// Builds `phi` for `pde` in the algebra `A2_1(alpha, beta)`.
pub fn first_order_phi(pde: &FirstOrderPde, alpha: f64, beta: f64) -> Result<FirstOrderSolution> {
    let s = alpha + beta;
    if (s - 1.0).abs() <= ZERO_TOL {
        return Err(Error::DegenerateParameters(format!("alpha + beta = {s} must differ from 1")));
    }
    let FirstOrderPde { a, b, c, d } = *pde;
    let den = s - 1.0;
    let matrix = [
        [(c * s - d) / den, (a * s - b) / den],
        [(d - c) / den, (b - a) / den],
    ];
    let phi = SmoothMap::linear(DMatrix::from_row_slice(2, 2, &[matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]]));
    let residual = pde_residual(&phi, &pde.operator(), &sample_points(2, SAMPLE_POINTS, -1.0, 1.0), None)?;
    Ok(FirstOrderSolution {
        pde: *pde,
        alpha,
        beta,
        matrix,
        algebra: Algebra::a2_1(alpha, beta),
        phi,
        residual,
    })
}

/// Solution family of [`LinearPde::system_451`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family451 {
    Trig,
    Hyperbolic,
}

/// Coefficients `(a1, a2, b1, b2)` of [`LinearPde::system_451`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct System451 {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl System451 {
    pub fn operator(&self) -> LinearPde {
        LinearPde::system_451(self.a1, self.a2, self.b1, self.b2)
    }
}

/// The pair `(y, z)(x, t)` with its residual.
#[derive(Debug, Clone)]
pub struct System451Solution {
    pub system: System451,
    pub family: Family451,
    pub c1: f64,
    pub c2: f64,
    /// The map `(x, t) -> (y, z)`.
    pub solution: SmoothMap,
    pub residual: ResidualReport,
}

/// Builds a member of the trigonometric or hyperbolic family.
pub fn system_451_solutions(system: &System451, family: Family451, c1: f64, c2: f64) -> Result<System451Solution> {
    let System451 { a1, a2, b1, b2 } = *system;
    let s = a1 + a2;
    if s.abs() <= ZERO_TOL {
        return Err(Error::DegenerateParameters("a1 + a2 must be nonzero".into()));
    }
    let solution = match family {
        Family451::Trig => {
            let h1 = [(b2 - b1) / s, (-a1 * b2 - a2 * b1) / s];
            let h2 = [(b1 + b2) / s, (a2 * b1 - a1 * b2) / s];
            SmoothMap::new(2, 2, move |u| {
                let e = (h1[0] * u[0] + h1[1] * u[1]).exp();
                let (sn, cs) = (h2[0] * u[0] + h2[1] * u[1]).sin_cos();
                DVector::from_vec(vec![e * (c1 * cs + c2 * sn), e * (-c1 * sn + c2 * cs)])
            })
        }
        Family451::Hyperbolic => {
            let h = [(b1 - b2) / s, (a1 * b2 + a2 * b1) / s];
            SmoothMap::new(2, 2, move |u| {
                let hv = h[0] * u[0] + h[1] * u[1];
                let e = (-hv).exp();
                let (sh, ch) = (hv.sinh(), hv.cosh());
                DVector::from_vec(vec![e * (c1 * ch + c2 * sh), e * (c1 * sh + c2 * ch)])
            })
        }
    };
    let residual = pde_residual(&solution, &system.operator(), &sample_points(2, SAMPLE_POINTS, -1.0, 1.0), None)?;
    Ok(System451Solution {
        system: *system,
        family,
        c1,
        c2,
        solution,
        residual,
    })
}

/// `A u_xx + 2B u_xy + C u_yy + D u_x + E u_y = 0` with algebra parameters `p1, p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[allow(non_snake_case)]
pub struct SecondOrderPde {
    pub A: f64,
    pub B: f64,
    pub C: f64,
    pub D: f64,
    pub E: f64,
    pub p1: f64,
    pub p2: f64,
}

impl SecondOrderPde {
    pub fn operator(&self) -> LinearPde {
        LinearPde::second_order(self.A, self.B, self.C, self.D, self.E)
    }

    /// `p1 + p2 B`.
    pub fn p(&self) -> f64 {
        self.p1 + self.p2 * self.B
    }

    /// `AC + P^2 - 2PB` with `P = p1 + p2 B`.
    pub fn delta(&self) -> f64 {
        let p = self.p();
        self.A * self.C + p * p - 2.0 * p * self.B
    }

    fn scale(&self) -> f64 {
        [self.A, self.B, self.C, self.D, self.E, self.p()]
            .iter()
            .fold(1.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Which formula produced the exponent of a second-order solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondOrderBranch {
    /// `Delta != 0`.
    Regular,
    /// `Delta = 0`.
    Singular,
}

/// `u = (alpha / a) e^(a x + b y)` with its residual.
#[derive(Debug, Clone)]
pub struct SecondOrderSolution {
    pub pde: SecondOrderPde,
    pub alpha: f64,
    pub beta: f64,
    pub branch: SecondOrderBranch,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub amplitude: f64,
    pub solution: SmoothMap,
    pub residual: ResidualReport,
}

fn close(lhs: f64, rhs: f64) -> bool {
    (lhs - rhs).abs() <= CONDITION_TOL * 1.0_f64.max(lhs.abs()).max(rhs.abs())
}

/// True when `(alpha, beta)` selects the regular branch, i.e. `Delta != 0`.
pub fn second_order_is_regular(pde: &SecondOrderPde) -> bool {
    pde.delta().abs() > ZERO_TOL * pde.scale() * pde.scale()
}

/// Builds the exponential solution for `(alpha, beta)`.
pub fn second_order_solution(pde: &SecondOrderPde, alpha: f64, beta: f64) -> Result<SecondOrderSolution> {
    let SecondOrderPde { A, B, C, D, E, .. } = *pde;
    if D == 0.0 && E == 0.0 {
        return Err(Error::ConditionViolated("|D| + |E| must be nonzero".into()));
    }
    let p = pde.p();
    let delta = pde.delta();
    let (branch, a, b) = if second_order_is_regular(pde) {
        let lhs = alpha * (-A * E + p * D);
        let rhs = beta * (2.0 * B * E - C * D - p * E);
        if !close(lhs, rhs) {
            return Err(Error::ConditionViolated(format!(
                "alpha (-AE + PD) = {lhs} differs from beta (2BE - CD - PE) = {rhs}"
            )));
        }
        (
            SecondOrderBranch::Regular,
            (2.0 * B * E - C * D - p * E) / delta,
            (-A * E + p * D) / delta,
        )
    } else {
        if !close(A * E, p * D) {
            return Err(Error::ConditionViolated(format!("AE = {} differs from PD = {}", A * E, p * D)));
        }
        let den = beta * (p - 2.0 * B) - alpha * A;
        if den.abs() <= ZERO_TOL * pde.scale() * 1.0_f64.max(alpha.abs()).max(beta.abs()) {
            return Err(Error::ConditionViolated("alpha A must differ from beta (P - 2B)".into()));
        }
        (SecondOrderBranch::Singular, alpha * D / den, beta * D / den)
    };
    if a.abs() <= ZERO_TOL {
        return Err(Error::DegenerateParameters("exponent coefficient a vanishes".into()));
    }
    let amplitude = alpha / a;
    let solution = SmoothMap::new(2, 1, move |u| DVector::from_element(1, amplitude * (a * u[0] + b * u[1]).exp()));
    let residual = pde_residual(&solution, &pde.operator(), &sample_points(2, SAMPLE_POINTS, -1.0, 1.0), None)?;
    Ok(SecondOrderSolution {
        pde: *pde,
        alpha,
        beta,
        branch,
        delta,
        a,
        b,
        amplitude,
        solution,
        residual,
    })
}

/// `alpha (u_xx + u_yy + u_zz) = u_t` with parameters `p1..p6` and amplitude `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct HeatProblem {
    pub alpha: f64,
    pub p: [f64; 6],
    pub amplitude: f64,
}

/// How the exponent vector of a heat solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatRoute {
    /// Cofactor formulas, `Delta != 0`.
    ClosedForm,
    /// Least squares on a consistent singular system.
    LeastSquares,
}

/// `u(t, x, y, z) = (a / b1) e^(B . tau)` with its checks.
#[derive(Debug, Clone)]
pub struct HeatSolution {
    pub problem: HeatProblem,
    pub delta: f64,
    pub route: HeatRoute,
    pub b: [f64; 4],
    /// Independent LU solve of the exponent system, when it is nonsingular.
    pub b_linear_solve: Option<[f64; 4]>,
    /// `max |b - b_linear_solve|`.
    pub formula_agreement: Option<f64>,
    /// `max |M b - e1|` for the exponent system `M b = e1`.
    pub bij_residual: f64,
    /// `alpha (b2^2 + b3^2 + b4^2) - b1`.
    pub diagnostic: f64,
    pub solution: SmoothMap,
    pub residual: ResidualReport,
}

/// Coefficient matrix and right-hand side of the exponent system.
pub fn heat_system(alpha: f64, p: &[f64; 6]) -> (DMatrix<f64>, DVector<f64>) {
    let [p1, p2, p3, p4, p5, p6] = *p;
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, -p1, -p2, -p3, //
            p1, alpha, -p4, -p5, //
            p2, p4, alpha, -p6, //
            p3, p5, p6, alpha,
        ],
    );
    (m, DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]))
}

/// Determinant of the exponent system.
pub fn heat_delta(alpha: f64, p: &[f64; 6]) -> f64 {
    let [p1, p2, p3, p4, p5, p6] = *p;
    alpha * alpha * (p1 * p1 + p2 * p2 + p3 * p3)
        + p6 * p6 * p1 * p1
        + p5 * p5 * p2 * p2
        + p4 * p4 * p3 * p3
        + 2.0 * p6 * p4 * p3 * p1
        - 2.0 * p6 * p5 * p2 * p1
        - 2.0 * p5 * p4 * p3 * p2
}

/// Cofactor solution of the exponent system; `None` when `Delta = 0`.
pub fn heat_b_closed_form(alpha: f64, p: &[f64; 6]) -> Option<[f64; 4]> {
    let delta = heat_delta(alpha, p);
    if delta == 0.0 {
        return None;
    }
    let [p1, p2, p3, p4, p5, p6] = *p;
    let a2 = alpha * alpha;
    Some([
        (a2 * alpha + alpha * (p4 * p4 + p5 * p5 + p6 * p6)) / delta,
        (-a2 * p1 - p6 * p6 * p1 + p6 * p5 * p2 - alpha * p5 * p3 - alpha * p4 * p2 - p6 * p4 * p3) / delta,
        (p6 * p5 * p1 - a2 * p2 - p5 * p5 * p2 - alpha * p6 * p3 + alpha * p1 * p4 + p5 * p4 * p3) / delta,
        (alpha * p5 * p1 + alpha * p6 * p2 - a2 * p3 - p4 * p4 * p3 - p6 * p4 * p1 + p5 * p4 * p2) / delta,
    ])
}

fn to_array(v: &DVector<f64>) -> [f64; 4] {
    [v[0], v[1], v[2], v[3]]
}

/// Builds the exponential heat solution of `problem`.
pub fn heat_solution(problem: &HeatProblem) -> Result<HeatSolution> {
    let HeatProblem { alpha, p, amplitude } = *problem;
    let (m, rhs) = heat_system(alpha, &p);
    let delta = heat_delta(alpha, &p);
    let scale = m.norm().max(1.0);
    let lu_solution = m.clone().lu().solve(&rhs).map(|v| to_array(&v));
    let regular = delta.abs() > ZERO_TOL * scale.powi(4);
    let (route, b, b_linear_solve) = match (regular, heat_b_closed_form(alpha, &p)) {
        (true, Some(b)) => (HeatRoute::ClosedForm, b, lu_solution),
        _ => {
            let ls = lstsq(&m, &rhs, crate::linalg::RANK_TOL);
            if ls.residual > CONSISTENCY_TOL * rhs.norm() {
                return Err(Error::DeltaZeroInconsistent { residual: ls.residual });
            }
            (HeatRoute::LeastSquares, to_array(&ls.x), None)
        }
    };
    let bv = DVector::from_column_slice(&b);
    let bij_residual = (&m * &bv - &rhs).amax();
    let formula_agreement = b_linear_solve.map(|l| (0..4).map(|i| (b[i] - l[i]).abs()).fold(0.0, f64::max));
    if b[0].abs() <= ZERO_TOL * bv.amax().max(1.0) {
        return Err(Error::B1Zero);
    }
    let diagnostic = alpha * (b[1] * b[1] + b[2] * b[2] + b[3] * b[3]) - b[0];
    let coef = amplitude / b[0];
    let solution = SmoothMap::new(4, 1, move |tau| {
        let e: f64 = (0..4).map(|i| b[i] * tau[i]).sum();
        DVector::from_element(1, coef * e.exp())
    });
    let residual = pde_residual(
        &solution,
        &LinearPde::heat(alpha, 3),
        &sample_points(4, SAMPLE_POINTS, -1.0, 1.0),
        None,
    )?;
    Ok(HeatSolution {
        problem: *problem,
        delta,
        route,
        b,
        b_linear_solve,
        formula_agreement,
        bij_residual,
        diagnostic,
        solution,
        residual,
    })
}
