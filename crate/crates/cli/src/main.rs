//! `phia`: command line access to algebra checks, Cauchy-Riemann systems,
//! quadratic algebrization, loop integrals, ODE families and PDE solutions.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a
//! computation does not converge, 2 on malformed input.

mod commands;
mod input;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use phia::pde::Family451;

use commands::{Ctx, OdeArgs, OdeFamily, Outcome};

#[derive(Debug, Parser)]
#[command(name = "phia", version, about = "Calculus along a map phi over commutative unital algebras")]
struct Cli {
    /// Seed of every random sample drawn by the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate or export algebras.
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Emit the generalized Cauchy-Riemann system of (phi, A).
    Cre {
        /// JSON file or catalog name (complex, a2_12, a3_1-table, a2_1:a,b, a2_2:g,d, a3_1:p1,..,p6).
        #[arg(long)]
        algebra: String,
        /// Catalog id of phi.
        #[arg(long)]
        phi: String,
        /// Point for systems whose coefficients vary.
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
        /// Include a LaTeX rendering.
        #[arg(long)]
        latex: bool,
    },
    /// Derivative of a catalog function along phi at a point.
    Diff {
        /// Catalog function id (unit, phi, square, cube, exp, inverse, inverse-square).
        #[arg(long)]
        f: String,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        algebra: String,
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// Recover a planar algebra and phi from a two-equation system in JSON.
    Recover {
        #[arg(long)]
        file: String,
    },
    /// Search planar algebras along which a quadratic field is differentiable.
    Algebrize {
        /// Twelve coefficients a0..a5,b0..b5 of the two quadratic components.
        #[arg(long, allow_hyphen_values = true)]
        vf: String,
        /// Restrict to one family: 1 = A2_1, 2 = A2_2, 3 = A2_12.
        #[arg(long)]
        case: Option<u8>,
        /// Parameter box lo,hi.
        #[arg(long = "box", allow_hyphen_values = true)]
        bx: Option<String>,
        /// Keep at most this many witnesses.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Algebrize the billiards field with parameters a,b,c.
    Billiards {
        #[arg(long, allow_hyphen_values = true)]
        params: String,
    },
    /// Integrate a catalog function along phi over a closed circle.
    Integrate {
        /// Loop as circle:r=R[,cx=X][,cy=Y][,kappa=K].
        #[arg(long = "loop", allow_hyphen_values = true)]
        lp: String,
        #[arg(long)]
        f: String,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        algebra: String,
        /// Finest number of Simpson subintervals.
        #[arg(long = "N", default_value_t = 512)]
        n: usize,
        /// Largest accepted magnitude of the integral.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Differential equations along phi.
    #[command(subcommand)]
    Ode(OdeCmd),
    /// Exact solutions of linear PDEs.
    #[command(subcommand)]
    Pde(PdeCmd),
    /// Run every worked example and print a pass/fail table.
    #[command(name = "paper-examples", visible_alias = "worked-examples")]
    Examples,
}

#[derive(Debug, Subcommand)]
enum AlgebraCmd {
    /// Check the axioms and R(uv) = R(u)R(v) for an algebra in JSON.
    Verify {
        #[arg(long)]
        file: String,
        /// Number of random pairs for the representation check.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Print (and optionally write) the JSON of a catalog algebra.
    Export {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum OdeCmd {
    /// Solve one family and check its residual.
    Solve(OdeSolve),
}

#[derive(Debug, Args)]
struct OdeSolve {
    #[arg(long, value_enum)]
    family: OdeFamily,
    #[arg(long)]
    algebra: String,
    #[arg(long)]
    phi: String,
    /// Constant of the family as algebra coordinates; the initial value for picard.
    #[arg(long = "C", allow_hyphen_values = true)]
    c: String,
    /// Number of random sample points in the box.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Sampling box lo,hi applied to every coordinate; picard starts at lo.
    #[arg(long = "box", default_value = "0,0.5", allow_hyphen_values = true)]
    bx: String,
    /// End point of the picard segment (default hi in every coordinate).
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    /// Picard nodes.
    #[arg(long, default_value_t = 129)]
    nodes: usize,
}

#[derive(Debug, Subcommand)]
enum PdeCmd {
    /// a u_x + b v_x - c u_y - d v_y = 0 through A2_1(alpha, beta).
    FirstOrder {
        #[arg(long, allow_hyphen_values = true)]
        coeffs: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
    },
    /// The coupled first-order system in (y, z)(x, t).
    System451 {
        /// a1,a2,b1,b2.
        #[arg(long, allow_hyphen_values = true)]
        params: String,
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        c1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        c2: f64,
    },
    /// A u_xx + 2B u_xy + C u_yy + D u_x + E u_y = 0.
    SecondOrder {
        /// A,B,C,D,E.
        #[arg(long, allow_hyphen_values = true)]
        coeffs: String,
        /// p1,p2.
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
    },
    /// alpha (u_xx + u_yy + u_zz) = u_t.
    Heat {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// p1,..,p6.
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Family {
    Trig,
    Hyperbolic,
}

fn dispatch(cli: &Cli, ctx: &Ctx) -> Outcome {
    match &cli.command {
        Command::Algebra(AlgebraCmd::Verify { file, samples }) => commands::algebra_verify(ctx, file, *samples),
        Command::Algebra(AlgebraCmd::Export { name, out }) => commands::algebra_export(ctx, name, out.as_deref()),
        Command::Cre { algebra, phi, at, latex } => commands::cre(ctx, algebra, phi, at.as_deref(), *latex),
        Command::Diff { f, phi, algebra, at } => commands::diff(ctx, f, phi, algebra, at),
        Command::Recover { file } => commands::recover(ctx, file),
        Command::Algebrize { vf, case, bx, limit } => commands::algebrize(ctx, vf, *case, bx.as_deref(), *limit),
        Command::Billiards { params } => commands::billiards(ctx, params),
        Command::Integrate { lp, f, phi, algebra, n, tol } => commands::integrate(ctx, lp, f, phi, algebra, *n, *tol),
        Command::Ode(OdeCmd::Solve(a)) => commands::ode_solve(
            ctx,
            &OdeArgs {
                family: a.family,
                algebra: &a.algebra,
                phi: &a.phi,
                c: &a.c,
                grid: a.grid,
                bx: &a.bx,
                to: a.to.as_deref(),
                nodes: a.nodes,
            },
        ),
        Command::Pde(PdeCmd::FirstOrder { coeffs, alpha, beta }) => commands::pde_first_order(ctx, coeffs, *alpha, *beta),
        Command::Pde(PdeCmd::System451 { params, family, c1, c2 }) => {
            let family = match family {
                Family::Trig => Family451::Trig,
                Family::Hyperbolic => Family451::Hyperbolic,
            };
            commands::pde_system451(ctx, params, family, *c1, *c2)
        }
        Command::Pde(PdeCmd::SecondOrder { coeffs, p, alpha, beta }) => {
            commands::pde_second_order(ctx, coeffs, p, *alpha, *beta)
        }
        Command::Pde(PdeCmd::Heat { alpha, p, amplitude }) => commands::pde_heat(ctx, *alpha, p, *amplitude),
        Command::Examples => commands::worked_examples(ctx),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let ctx = Ctx {
        argv: std::iter::once("phia".to_string()).chain(argv.into_iter().skip(1)).collect(),
        seed: cli.seed,
    };
    let start = Instant::now();
    match dispatch(&cli, &ctx) {
        Ok(report) => {
            if cli.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text(start.elapsed().as_secs_f64()));
            }
            ExitCode::from(if report.pass { 0 } else { 1 })
        }
        Err(failure) => {
            if cli.json {
                let body = serde_json::json!({
                    "command": ctx.argv,
                    "seed": ctx.seed,
                    "error": failure.message(),
                    "exit_code": failure.exit_code(),
                    "pass": false,
                });
                println!("{}", serde_json::to_string_pretty(&body).expect("error body serializes"));
            }
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
