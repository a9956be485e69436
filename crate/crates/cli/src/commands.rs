//! One function per subcommand, each turning parsed flags into a
//! [`RunReport`].

use clap::ValueEnum;
use nalgebra::DVector;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use phia::algebra::{AlgebraJson, AXIOM_TOL};
use phia::cre::{emit_cre, recover_phi_algebra, TwoPdeSystem};
use phia::integral::{closed_loop_check, Path};
use phia::ode::{picard, solve_exponential, solve_phi_rhs, solve_square_rhs, SolutionSamples, RESIDUAL_TOL};
use phia::pde::{
    first_order_phi, heat_solution, second_order_solution, system_451_solutions, Family451, FirstOrderPde,
    HeatProblem, ResidualReport, SecondOrderPde, System451,
};
use phia::phi::{cre_residual, phi_derivative, DIFFERENTIABILITY_TOL};
use phia::quadratic::{algebrize_with, verify_billiards_algebrization, AlgebrizeOptions, QuadraticVf, WITNESS_TOL};
use phia::{catalog, Algebra, Element, Error, PlanarCase, Scalar, SmoothMap};

use crate::input::{self, InputError};
use crate::report::{Check, RunReport};

/// Tolerance on the relative finite-difference residual of PDE solutions.
pub const PDE_TOL: f64 = 1e-6;
/// Tolerance on the billiards algebrization residuals.
pub const BILLIARDS_TOL: f64 = 1e-10;
/// Tolerance on `R(uv) = R(u) R(v)` for loaded algebras.
pub const REP_TOL: f64 = 1e-12;
/// Tolerance on exact algebraic identities such as the heat exponent system.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Why a subcommand produced no report.
#[derive(Debug)]
pub enum Failure {
    /// Malformed or inconsistent input; exit code 2.
    Input(String),
    /// A computation that did not converge or found nothing; exit code 1.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidInput(_)
            | Error::Json(_)
            | Error::DimensionMismatch { .. }
            | Error::NotCommutative { .. }
            | Error::AssociativityViolation { .. }
            | Error::NoUnit { .. }
            | Error::DegenerateParameters(_)
            | Error::ConditionViolated(_)
            | Error::DeltaZeroInconsistent { .. }
            | Error::B1Zero => Failure::Input(msg),
            _ => Failure::Numerical(msg),
        }
    }
}

pub type Outcome = std::result::Result<RunReport, Failure>;

/// Shared context of one invocation.
pub struct Ctx {
    pub argv: Vec<String>,
    pub seed: u64,
}

impl Ctx {
    fn report(&self, inputs: Value, outputs: Value, checks: Vec<Check>) -> RunReport {
        RunReport::new(self.argv.clone(), self.seed, inputs, outputs, checks)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}

fn vec_of(e: &DVector<f64>) -> Vec<f64> {
    e.iter().copied().collect()
}

fn element(flag: &str, s: &str, alg: &Algebra) -> Result<Element, Failure> {
    Ok(DVector::from_vec(input::reals(flag, s, Some(alg.dim()))?))
}

fn point(flag: &str, s: &str, phi: &SmoothMap) -> Result<Vec<f64>, Failure> {
    Ok(input::reals(flag, s, Some(phi.domain()))?)
}

fn case_of(n: u8) -> Result<PlanarCase, Failure> {
    match n {
        1 => Ok(PlanarCase::A21),
        2 => Ok(PlanarCase::A22),
        3 => Ok(PlanarCase::A12),
        _ => Err(Failure::Input(format!("--case: expected 1, 2 or 3, found {n}"))),
    }
}

fn residual_checks(name: &str, r: &ResidualReport) -> Vec<Check> {
    vec![Check::at_most(format!("{name} relative FD residual"), r.relative, PDE_TOL)]
}

/// Largest `||R(uv) - R(u)R(v)||` over `count` seeded random pairs.
fn rep_defect<T: Scalar>(alg: &Algebra<T>, rng: &mut ChaCha8Rng, count: usize) -> f64 {
    (0..count)
        .map(|_| {
            let (u, v) = (alg.random_element(rng), alg.random_element(rng));
            let lhs = alg.rep(&alg.mul(&u, &v));
            let rhs = alg.rep(&u) * alg.rep(&v);
            (lhs - rhs).norm() / (1.0 + u.norm() * v.norm())
        })
        .fold(0.0, f64::max)
}

/// `algebra verify`: axiom defects of a JSON algebra and the representation
/// identity on random pairs.
pub fn algebra_verify(ctx: &Ctx, file: &str, samples: usize) -> Outcome {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Input(format!("--file: {file}: {e}")))?;
    let model: AlgebraJson =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("--file: {file}: {e}")))?;
    let axioms = model.axiom_report()?;
    let scale = axioms.scale;
    let mut checks = vec![
        Check::at_most("commutativity", axioms.commutativity, AXIOM_TOL * scale),
        Check::at_most("associativity", axioms.associativity, AXIOM_TOL * scale * scale),
        Check::at_most("unit", axioms.unit, AXIOM_TOL * scale),
    ];
    let mut outputs = json!({ "axioms": to_value(&axioms) });
    if axioms.passes(AXIOM_TOL) {
        let mut rng = ctx.rng();
        let defect = match input::algebra_file(file)? {
            phia::AnyAlgebra::Real(a) => rep_defect(&a, &mut rng, samples),
            phia::AnyAlgebra::Complex(a) => rep_defect(&a, &mut rng, samples),
        };
        outputs["representation_defect"] = json!(defect);
        checks.push(Check::at_most("R(uv) = R(u)R(v)", defect, REP_TOL * scale));
    }
    let inputs = json!({ "file": file, "dim": model.dim, "scalars": to_value(&model.scalars), "samples": samples });
    Ok(ctx.report(inputs, outputs, checks))
}

/// `algebra export`: the JSON description of a catalog algebra.
pub fn algebra_export(ctx: &Ctx, name: &str, out: Option<&str>) -> Outcome {
    let alg = input::algebra(name)?;
    let axioms = alg.axiom_report();
    if let Some(path) = out {
        std::fs::write(path, alg.to_json()).map_err(|e| Failure::Input(format!("--out: {path}: {e}")))?;
    }
    let checks = vec![Check::at_most(
        "axioms",
        axioms.commutativity.max(axioms.associativity).max(axioms.unit),
        AXIOM_TOL * axioms.scale * axioms.scale,
    )];
    Ok(ctx.report(
        json!({ "name": name, "out": out }),
        json!({ "algebra": to_value(&alg.to_json_model()) }),
        checks,
    ))
}

fn default_point(dim: usize) -> Vec<f64> {
    [0.7, 0.3, 0.4].iter().copied().cycle().take(dim).collect()
}

/// `cre`: the generalized Cauchy-Riemann system of `(phi, A)`.
pub fn cre(ctx: &Ctx, algebra: &str, phi_id: &str, at: Option<&str>, latex: bool) -> Outcome {
    let alg = input::algebra(algebra)?;
    let phi = input::phi(phi_id)?;
    let field = emit_cre(&alg, &phi)?;
    let u = match at {
        Some(s) => point("at", s, &phi)?,
        None => default_point(phi.domain()),
    };
    let system = match (field.constant_system(), at) {
        (Some(s), _) => s.clone(),
        (None, Some(_)) => field.at(&u)?,
        (None, None) => {
            return Err(Failure::Input("--at is required because the system depends on the point".into()));
        }
    };
    let self_check = system.max_residual(&phi.jacobian(&u)?);
    let lib_check = cre_residual(&phi, &phi, &alg, &u)?;
    let mut outputs = json!({
        "constant_coefficients": field.constant_system().is_some(),
        "system": to_value(&system),
        "equations": system.equations.len(),
    });
    if latex {
        outputs["latex"] = json!(system.to_latex());
    }
    let checks = vec![
        Check::at_most("phi satisfies its own system", self_check, DIFFERENTIABILITY_TOL),
        Check::at_most("phi is differentiable along phi", lib_check, DIFFERENTIABILITY_TOL),
    ];
    Ok(ctx.report(json!({ "algebra": algebra, "phi": phi_id, "at": u }), outputs, checks))
}

/// `diff`: the derivative of `f` along `phi` at a point.
pub fn diff(ctx: &Ctx, f_id: &str, phi_id: &str, algebra: &str, at: &str) -> Outcome {
    let alg = input::algebra(algebra)?;
    let phi = input::phi(phi_id)?;
    let f = input::function(f_id, &phi, &alg)?;
    let u = point("at", at, &phi)?;
    let report = phi_derivative(&f, &phi, &alg, &u)?;
    let outputs = json!({
        "derivative": vec_of(&report.derivative),
        "residual": report.residual,
        "unique": report.unique,
    });
    let checks = vec![Check::at_most("derivative residual", report.residual, DIFFERENTIABILITY_TOL)];
    Ok(ctx.report(json!({ "f": f_id, "phi": phi_id, "algebra": algebra, "at": u }), outputs, checks))
}

/// `recover`: the planar algebra and potential `phi` of a two-equation system.
pub fn recover(ctx: &Ctx, file: &str) -> Outcome {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Input(format!("--file: {file}: {e}")))?;
    let sys: TwoPdeSystem = serde_json::from_str(&text).map_err(|e| Failure::Input(format!("--file: {file}: {e}")))?;
    let rec = recover_phi_algebra(&sys)?;
    let t = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut worst = 0.0f64;
    for &x in &t {
        for &y in &t {
            let j = rec.phi.jacobian(&[x, y])?;
            let homogeneous = sys.residual(x, y, &j) + sys.rhs_at(x, y);
            let scale = sys.matrix_at(x, y).norm().max(1.0) * j.norm().max(1.0);
            worst = worst.max(homogeneous.amax() / scale);
        }
    }
    let outputs = json!({
        "case": rec.case.label(),
        "params": rec.params,
        "potentials": to_value(&rec.potentials),
        "algebra": to_value(&rec.algebra.to_json_model()),
        "row_scale": rec.row_scale,
        "rows_swapped": rec.rows_swapped,
        "requires_particular_solution": rec.requires_particular_solution,
    });
    let checks = vec![Check::at_most("recovered phi solves the homogeneous system", worst, 1e-12)];
    Ok(ctx.report(json!({ "file": file, "system": to_value(&sys) }), outputs, checks))
}

/// `algebrize`: planar algebras and linear `phi` along which a quadratic
/// field is differentiable.
pub fn algebrize(ctx: &Ctx, vf: &str, case: Option<u8>, bx: Option<&str>, limit: Option<usize>) -> Outcome {
    let v = input::reals("vf", vf, Some(12))?;
    let field = QuadraticVf::new(std::array::from_fn(|i| v[i]), std::array::from_fn(|i| v[6 + i]));
    let mut opts = AlgebrizeOptions::default();
    if let Some(c) = case {
        opts.cases = vec![case_of(c)?];
    }
    let (lo, hi) = match bx {
        Some(s) => {
            let [lo, hi] = input::array::<2>("box", s)?;
            if !(lo < hi) {
                return Err(Failure::Input(format!("--box: lower bound {lo} must be below upper bound {hi}")));
            }
            opts.half_width = lo.abs().max(hi.abs());
            (lo, hi)
        }
        None => (-opts.half_width, opts.half_width),
    };
    let inside = |p: &Option<[f64; 2]>| p.is_none_or(|p| p.iter().all(|x| (lo..=hi).contains(x)));
    let mut witnesses: Vec<_> = algebrize_with(&field, &opts)
        .into_iter()
        .filter(|w| inside(&Some(w.matrix_params)) && inside(&w.params))
        .collect();
    if let Some(n) = limit {
        witnesses.truncate(n);
    }
    if witnesses.is_empty() {
        return Err(Failure::Numerical(format!("no witness found in the search box [{lo}, {hi}]^2")));
    }
    let worst = witnesses.iter().map(|w| w.residual).fold(0.0, f64::max);
    let inputs = json!({
        "vf": v,
        "cases": opts.cases.iter().map(|c| c.label()).collect::<Vec<_>>(),
        "box": [lo, hi],
        "limit": limit,
    });
    let outputs = json!({ "count": witnesses.len(), "witnesses": to_value(&witnesses) });
    Ok(ctx.report(inputs, outputs, vec![Check::at_most("worst witness CRE residual", worst, WITNESS_TOL)]))
}

/// `billiards`: the algebrization of the billiards field for `(a, b, c)`.
pub fn billiards(ctx: &Ctx, params: &str) -> Outcome {
    let [a, b, c] = input::array::<3>("params", params)?;
    let r = verify_billiards_algebrization(a, b, c)?;
    let checks = vec![
        Check::at_most("CRE residual", r.residual, BILLIARDS_TOL),
        Check::at_most("null vector residual", r.null_residual, BILLIARDS_TOL),
    ];
    Ok(ctx.report(json!({ "a": a, "b": b, "c": c }), to_value(&r), checks))
}

/// Subinterval ladder ending at `n`: `n/8, n/4, n/2, n`, keeping even rungs.
fn ladder(n: usize) -> Vec<usize> {
    [n / 8, n / 4, n / 2, n].into_iter().filter(|&k| k >= 2 && k % 2 == 0).collect()
}

/// `integrate`: the line integral of `f` along `phi` over a closed circle.
pub fn integrate(ctx: &Ctx, lp: &str, f_id: &str, phi_id: &str, algebra: &str, n: usize, tol: f64) -> Outcome {
    let alg = input::algebra(algebra)?;
    let phi = input::phi(phi_id)?;
    let f = input::function(f_id, &phi, &alg)?;
    let c = input::circle_loop(lp)?;
    if n < 2 || n % 2 == 1 {
        return Err(Failure::Input(format!("--N: expected an even count of at least 2, found {n}")));
    }
    let mut center = vec![0.0; phi.domain()];
    center[0] = c.cx;
    if phi.domain() > 1 {
        center[1] = c.cy;
    }
    let mut path = Path::circle(&center, c.r, (0, 1))?;
    if c.kappa != 0.0 {
        path = path.with_quadratic_timing(c.kappa)?;
    }
    let rungs = ladder(n);
    let r = closed_loop_check(&f, &phi, &alg, &path, &rungs)?;
    let inputs = json!({
        "loop": { "r": c.r, "cx": c.cx, "cy": c.cy, "kappa": c.kappa },
        "f": f_id, "phi": phi_id, "algebra": algebra, "N": n, "tol": tol,
    });
    let checks = vec![Check::at_most("closed-loop integral magnitude", r.final_magnitude, tol)];
    Ok(ctx.report(inputs, to_value(&r), checks))
}

/// Closed-form and Picard families of `ode solve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OdeFamily {
    /// `w' = w^2` along `phi`, solved by `w = -e / (phi + C)`.
    Square,
    /// `w' = phi` along `phi`, solved by `w = phi^2 / 2 + C`.
    PhiRhs,
    /// `w' = w` along `phi`, solved by `w = C exp(phi)`.
    Exp,
    /// `w' = w` along `phi` by Picard iteration on a segment.
    Picard,
}

/// Flags of `ode solve`.
pub struct OdeArgs<'a> {
    pub family: OdeFamily,
    pub algebra: &'a str,
    pub phi: &'a str,
    pub c: &'a str,
    pub grid: usize,
    pub bx: &'a str,
    pub to: Option<&'a str>,
    pub nodes: usize,
}

/// `ode solve`: a family solution with its residual on a seeded grid.
pub fn ode_solve(ctx: &Ctx, a: &OdeArgs) -> Outcome {
    let alg = input::algebra(a.algebra)?;
    let phi = input::phi(a.phi)?;
    if phi.codomain() != alg.dim() {
        return Err(Failure::Input(format!(
            "--phi has codomain dimension {} but the algebra has dimension {}",
            phi.codomain(),
            alg.dim()
        )));
    }
    let c = element("C", a.c, &alg)?;
    let [lo, hi] = input::array::<2>("box", a.bx)?;
    if !(lo < hi) {
        return Err(Failure::Input(format!("--box: lower bound {lo} must be below upper bound {hi}")));
    }
    let family = a.family.to_possible_value().map(|v| v.get_name().to_string());
    let mut inputs = json!({
        "family": family, "algebra": a.algebra, "phi": a.phi, "C": vec_of(&c), "box": [lo, hi],
    });
    let (samples, extra): (SolutionSamples, Value) = match a.family {
        OdeFamily::Picard => {
            let from = vec![lo; phi.domain()];
            let to = match a.to {
                Some(s) => point("to", s, &phi)?,
                None => vec![hi; phi.domain()],
            };
            inputs["to"] = json!(to);
            inputs["nodes"] = json!(a.nodes);
            let path = Path::segment(&from, &to);
            let report = picard(|w| Ok(w.clone()), &phi, &alg, &c, &path, a.nodes, 200)?;
            let phi0 = phi.eval(&from)?;
            let mut oracle = 0.0f64;
            for s in &report.samples.points {
                let shift = phi.eval(&s.tau)? - &phi0;
                let exact = alg.mul(&c, &alg.exp(&shift));
                let got = DVector::from_column_slice(&s.w);
                oracle = oracle.max((got - &exact).norm() / (1.0 + exact.norm()));
            }
            let extra = json!({ "history": report.history, "exponential_oracle": oracle });
            (report.samples, extra)
        }
        family => {
            if a.grid == 0 {
                return Err(Failure::Input("--grid: expected at least one point".into()));
            }
            inputs["grid"] = json!(a.grid);
            let sol = match family {
                OdeFamily::Square => {
                    let k = SmoothMap::constant(phi.domain(), alg.unit());
                    solve_square_rhs(&k, &phi, &c, &phi, &alg)?
                }
                OdeFamily::PhiRhs => solve_phi_rhs(&phi, &c, &alg)?,
                _ => solve_exponential(&phi, &alg, &c)?,
            };
            let mut rng = ctx.rng();
            let pts: Vec<Vec<f64>> = (0..a.grid)
                .map(|_| (0..phi.domain()).map(|_| lo + (hi - lo) * rand_unit(&mut rng)).collect())
                .collect();
            (sol.samples(&pts)?, json!({}))
        }
    };
    let mut checks = vec![Check::at_most("ODE residual", samples.max_residual, RESIDUAL_TOL)];
    if let Some(o) = extra.get("exponential_oracle").and_then(Value::as_f64) {
        checks.push(Check::at_most("Picard against C exp(phi - phi0)", o, RESIDUAL_TOL));
    }
    let mut outputs = json!({ "samples": samples.points, "max_residual": samples.max_residual });
    if let (Value::Object(o), Value::Object(e)) = (&mut outputs, extra) {
        o.extend(e);
    }
    Ok(ctx.report(inputs, outputs, checks))
}

fn rand_unit(rng: &mut ChaCha8Rng) -> f64 {
    use rand_chacha::rand_core::RngCore;
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn pde_report(ctx: &Ctx, inputs: Value, params: Value, residual: &ResidualReport, mut checks: Vec<Check>) -> RunReport {
    let mut all = residual_checks("solution", residual);
    all.append(&mut checks);
    let oracle: Vec<Value> = all.iter().map(to_value).collect();
    ctx.report(
        inputs,
        json!({ "solution_params": params, "residual": to_value(residual), "oracle_checks": oracle }),
        all,
    )
}

/// `pde first-order`.
pub fn pde_first_order(ctx: &Ctx, coeffs: &str, alpha: f64, beta: f64) -> Outcome {
    let [a, b, c, d] = input::array::<4>("coeffs", coeffs)?;
    let pde = FirstOrderPde { a, b, c, d };
    let s = first_order_phi(&pde, alpha, beta)?;
    let sq = catalog::function("square", &s.phi, &s.algebra)?;
    let r2 = phia::pde::pde_residual(&sq, &pde.operator(), &phia::pde::sample_points(2, 50, -1.0, 1.0), None)?;
    let params = json!({ "matrix": s.matrix, "algebra": to_value(&s.algebra.to_json_model()) });
    let checks = vec![Check::at_most("phi^2 relative FD residual", r2.relative, PDE_TOL)];
    Ok(pde_report(ctx, json!({ "coeffs": [a, b, c, d], "alpha": alpha, "beta": beta }), params, &s.residual, checks))
}

/// `pde system451`.
pub fn pde_system451(ctx: &Ctx, params: &str, family: Family451, c1: f64, c2: f64) -> Outcome {
    let [a1, a2, b1, b2] = input::array::<4>("params", params)?;
    let s = system_451_solutions(&System451 { a1, a2, b1, b2 }, family, c1, c2)?;
    let inputs = json!({ "params": [a1, a2, b1, b2], "family": to_value(&family), "c1": c1, "c2": c2 });
    let out = json!({ "family": to_value(&s.family), "c1": s.c1, "c2": s.c2 });
    Ok(pde_report(ctx, inputs, out, &s.residual, vec![]))
}

/// `pde second-order`.
pub fn pde_second_order(ctx: &Ctx, coeffs: &str, p: &str, alpha: f64, beta: f64) -> Outcome {
    let [a, b, c, d, e] = input::array::<5>("coeffs", coeffs)?;
    let [p1, p2] = input::array::<2>("p", p)?;
    let pde = SecondOrderPde { A: a, B: b, C: c, D: d, E: e, p1, p2 };
    let s = second_order_solution(&pde, alpha, beta)?;
    let inputs = json!({ "coeffs": [a, b, c, d, e], "p": [p1, p2], "alpha": alpha, "beta": beta });
    let out = json!({
        "branch": to_value(&s.branch), "delta": s.delta, "a": s.a, "b": s.b, "amplitude": s.amplitude,
    });
    Ok(pde_report(ctx, inputs, out, &s.residual, vec![]))
}

/// `pde heat`.
pub fn pde_heat(ctx: &Ctx, alpha: f64, p: &str, amplitude: f64) -> Outcome {
    let p = input::array::<6>("p", p)?;
    let problem = HeatProblem { alpha, p, amplitude };
    let s = heat_solution(&problem)?;
    let mut checks = vec![Check::at_most("exponent system residual", s.bij_residual, IDENTITY_TOL)];
    if let Some(g) = s.formula_agreement {
        checks.push(Check::at_most("closed form against linear solve", g, IDENTITY_TOL));
    }
    let out = json!({
        "route": to_value(&s.route), "delta": s.delta, "b": s.b, "b_linear_solve": s.b_linear_solve,
        "diagnostic": s.diagnostic,
    });
    Ok(pde_report(ctx, to_value(&problem), out, &s.residual, checks))
}

/// The worked-examples table: every catalogued example with its check.
pub fn worked_examples(ctx: &Ctx) -> Outcome {
    let rows = phia::examples::run_examples();
    let checks = rows
        .iter()
        .map(|r| Check {
            name: r.id.to_string(),
            value: r.value,
            tolerance: r.tolerance,
            pass: r.passed,
        })
        .collect();
    Ok(ctx.report(json!({}), json!({ "examples": to_value(&rows) }), checks))
}
