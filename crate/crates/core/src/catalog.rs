//! Named algebras, maps `phi` and functions of `phi` used by the worked
//! examples, the command line and the test suites.
//!
//! Algebras are named `complex`, `a2_12`, `a3_1-table` (the three-dimensional
//! table with `e_2e_2 = e_2e_3 = e_3e_3 = e_2 + e_3`) or parameterized as
//! `a2_1:alpha,beta`, `a2_2:gamma,delta` and `a3_1:p1,...,p6`.

use nalgebra::{DMatrix, DVector};

use crate::algebra::Algebra;
use crate::error::{Error, Result};
use crate::map::SmoothMap;
use crate::phi::AlgebraFunction;

/// A named map `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiEntry {
    pub id: &'static str,
    pub formula: &'static str,
    pub domain: usize,
    pub codomain: usize,
}

/// Every named map `phi`.
pub const PHIS: &[PhiEntry] = &[
    PhiEntry { id: "identity2", formula: "(x, y)", domain: 2, codomain: 2 },
    PhiEntry { id: "identity3", formula: "(x, y, z)", domain: 3, codomain: 3 },
    PhiEntry { id: "swap", formula: "(y, x)", domain: 2, codomain: 2 },
    PhiEntry { id: "y-zero", formula: "(y, 0)", domain: 2, codomain: 2 },
    PhiEntry { id: "y-x-plus-y", formula: "(y, x + y)", domain: 2, codomain: 2 },
    PhiEntry { id: "x-plus-z-y", formula: "(x + z, y)", domain: 3, codomain: 2 },
    PhiEntry { id: "xx-plus-z-inv-y", formula: "(x^2 + z, 1/y)", domain: 3, codomain: 2 },
    PhiEntry { id: "x-y-0", formula: "(x, y, 0)", domain: 2, codomain: 3 },
    PhiEntry { id: "x-0-y", formula: "(x, 0, y)", domain: 2, codomain: 3 },
    PhiEntry { id: "0-x-y", formula: "(0, x, y)", domain: 2, codomain: 3 },
    PhiEntry { id: "squares", formula: "(x^2 - y^2, 2xy)", domain: 2, codomain: 2 },
    PhiEntry { id: "half-squares", formula: "(x^2/2 - y^2/2, xy)", domain: 2, codomain: 2 },
];

/// Every named function of `phi`.
pub const FUNCTIONS: &[(&str, &str)] = &[
    ("unit", "e"),
    ("phi", "phi"),
    ("square", "phi^2"),
    ("cube", "phi^3"),
    ("exp", "exp(phi)"),
    ("inverse", "e / phi"),
    ("inverse-square", "e / phi^2"),
];

fn parse_list(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidInput(format!("{what}: {e}")))?;
    if v.len() != n {
        return Err(Error::InvalidInput(format!("{what}: expected {n} numbers, found {}", v.len())));
    }
    Ok(v)
}

/// The three-dimensional table whose products `e_2e_2`, `e_2e_3`, `e_3e_3`
/// all equal `e_2 + e_3`, built entry by entry.
pub fn a3_1_table() -> Algebra {
    let (o, z) = (1.0, 0.0);
    let c = vec![
        vec![vec![o, z, z], vec![z, o, z], vec![z, z, o]],
        vec![vec![z, o, z], vec![z, o, o], vec![z, o, o]],
        vec![vec![z, z, o], vec![z, o, o], vec![z, o, o]],
    ];
    Algebra::from_constants(c, vec![o, z, z]).expect("the table is a unital commutative algebra")
}

/// Looks up an algebra by name.
pub fn algebra(name: &str) -> Result<Algebra> {
    let (head, args) = match name.split_once(':') {
        Some((h, a)) => (h.trim(), Some(a)),
        None => (name.trim(), None),
    };
    match (head, args) {
        ("complex", None) => Ok(Algebra::complex()),
        ("a2_12", None) => Ok(Algebra::a2_12()),
        ("a3_1-table", None) => Ok(a3_1_table()),
        ("a2_1", Some(a)) => {
            let p = parse_list(a, 2, "a2_1 parameters")?;
            Ok(Algebra::a2_1(p[0], p[1]))
        }
        ("a2_2", Some(a)) => {
            let p = parse_list(a, 2, "a2_2 parameters")?;
            Ok(Algebra::a2_2(p[0], p[1]))
        }
        ("a3_1", Some(a)) => {
            let p = parse_list(a, 6, "a3_1 parameters")?;
            Algebra::a3_1([p[0], p[1], p[2], p[3], p[4], p[5]])
        }
        _ => Err(Error::InvalidInput(format!("unknown algebra '{name}'"))),
    }
}

fn linear(rows: usize, cols: usize, m: &[f64]) -> SmoothMap {
    SmoothMap::linear(DMatrix::from_row_slice(rows, cols, m))
}

/// Looks up a map `phi` by id.
pub fn phi(id: &str) -> Result<SmoothMap> {
    Ok(match id {
        "identity2" => SmoothMap::identity(2),
        "identity3" => SmoothMap::identity(3),
        "swap" => linear(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        "y-zero" => linear(2, 2, &[0.0, 1.0, 0.0, 0.0]),
        "y-x-plus-y" => linear(2, 2, &[0.0, 1.0, 1.0, 1.0]),
        "x-plus-z-y" => linear(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]),
        "xx-plus-z-inv-y" => SmoothMap::new(3, 2, |u| DVector::from_vec(vec![u[0] * u[0] + u[2], 1.0 / u[1]]))
            .with_jacobian(|u| {
                DMatrix::from_row_slice(2, 3, &[2.0 * u[0], 0.0, 1.0, 0.0, -1.0 / (u[1] * u[1]), 0.0])
            }),
        "x-y-0" => linear(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        "x-0-y" => linear(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
        "0-x-y" => linear(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
        "squares" => quadratic_phi(2.0),
        "half-squares" => quadratic_phi(1.0),
        _ => return Err(Error::InvalidInput(format!("unknown phi '{id}'"))),
    })
}

/// `(s (x^2 - y^2) / 2, s x y)`.
fn quadratic_phi(s: f64) -> SmoothMap {
    SmoothMap::new(2, 2, move |u| {
        DVector::from_vec(vec![0.5 * s * (u[0] * u[0] - u[1] * u[1]), s * u[0] * u[1]])
    })
    .with_jacobian(move |u| DMatrix::from_row_slice(2, 2, &[s * u[0], -s * u[1], s * u[1], s * u[0]]))
}

/// The algebra function named `id` acting on `alg`.
pub fn algebra_function(id: &str, alg: &Algebra) -> Result<AlgebraFunction> {
    Ok(match id {
        "unit" => AlgebraFunction::power(alg, 0),
        "phi" => AlgebraFunction::power(alg, 1),
        "square" => AlgebraFunction::power(alg, 2),
        "cube" => AlgebraFunction::power(alg, 3),
        "exp" => AlgebraFunction::exp(alg),
        "inverse" => AlgebraFunction::power(alg, -1),
        "inverse-square" => AlgebraFunction::power(alg, -2),
        _ => return Err(Error::InvalidInput(format!("unknown function '{id}'"))),
    })
}

/// `g o phi` for the algebra function named `id`.
pub fn function(id: &str, phi: &SmoothMap, alg: &Algebra) -> Result<SmoothMap> {
    algebra_function(id, alg)?.after(phi)
}

/// A `(phi, A)` pair from the worked examples with a sampling box.
#[derive(Debug, Clone)]
pub struct CatalogPair {
    pub id: &'static str,
    pub algebra_name: String,
    pub algebra: Algebra,
    pub phi_id: &'static str,
    pub phi: SmoothMap,
    /// Per-coordinate sampling interval.
    pub domain: Vec<(f64, f64)>,
    /// Functions of `phi` defined on the whole box.
    pub functions: Vec<&'static str>,
    /// True when `dphi` has a regular direction at every point of the box.
    pub regular: bool,
}

impl CatalogPair {
    /// Maps a point of the unit cube `[0, 1]^k` into the sampling box.
    pub fn point_from_unit(&self, t: &[f64]) -> Vec<f64> {
        self.domain.iter().zip(t).map(|((lo, hi), s)| lo + (hi - lo) * s).collect()
    }

    /// `g o phi` for the function named `id`.
    pub fn function(&self, id: &str) -> Result<SmoothMap> {
        function(id, &self.phi, &self.algebra)
    }
}

fn pair(
    id: &'static str,
    algebra_name: &str,
    phi_id: &'static str,
    domain: &[(f64, f64)],
    functions: &[&'static str],
    regular: bool,
) -> CatalogPair {
    CatalogPair {
        id,
        algebra_name: algebra_name.to_string(),
        algebra: algebra(algebra_name).expect("catalog algebra"),
        phi_id,
        phi: phi(phi_id).expect("catalog phi"),
        domain: domain.to_vec(),
        functions: functions.to_vec(),
        regular,
    }
}

/// The `(phi, A)` pairs of the worked examples.
pub fn pairs() -> Vec<CatalogPair> {
    let box2 = [(-1.0, 1.0), (-1.0, 1.0)];
    let box3 = [(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)];
    let all = ["unit", "phi", "square", "cube", "exp"];
    let generic_a31 = "a3_1:0.3,-0.7,0.5,1.1,-0.4,0.9";
    vec![
        pair("complex-identity", "complex", "identity2", &box2, &all, true),
        pair("complex-swap", "complex", "swap", &box2, &all, true),
        pair("complex-y-zero", "complex", "y-zero", &box2, &all, true),
        pair("complex-y-x-plus-y", "complex", "y-x-plus-y", &box2, &all, true),
        pair("complex-x-plus-z-y", "complex", "x-plus-z-y", &box3, &all, true),
        pair(
            "complex-xx-plus-z-inv-y",
            "complex",
            "xx-plus-z-inv-y",
            &[(-1.0, 1.0), (0.5, 2.0), (-1.0, 1.0)],
            &all,
            true,
        ),
        pair("a3_1-x-y-0", generic_a31, "x-y-0", &box2, &all, true),
        pair("a3_1-x-0-y", generic_a31, "x-0-y", &box2, &all, true),
        pair(
            "a3_1-table-x-y-0",
            "a3_1-table",
            "x-y-0",
            &[(1.0, 2.0), (-0.4, 0.4)],
            &["unit", "phi", "square", "exp", "inverse", "inverse-square"],
            true,
        ),
        pair("a3_1-zero-0-x-y", "a3_1:0,0,0,0,0,0", "0-x-y", &box2, &["unit", "phi", "square"], false),
        pair("a2_1-squares", "a2_1:0.8,-0.3", "squares", &box2, &all, true),
        pair("a2_2-squares", "a2_2:0.6,1.4", "squares", &box2, &all, true),
        pair("a2_12-half-squares", "a2_12", "half-squares", &box2, &all, true),
        pair("a2_1-identity", "a2_1:-0.5,0.25", "identity2", &box2, &all, true),
    ]
}

/// Looks up a catalog pair by id.
pub fn pair_by_id(id: &str) -> Result<CatalogPair> {
    pairs()
        .into_iter()
        .find(|p| p.id == id)
        .ok_or_else(|| Error::InvalidInput(format!("unknown catalog pair '{id}'")))
}
