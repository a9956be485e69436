//! Expected CRE systems kept as golden files and their comparison with
//! emitted systems.
//!
//! A golden file lists each equation as `lhs = rhs` with terms keyed by
//! `f_var` (for example `v_x`) and coefficients that are numbers or the
//! table symbols `p1..p9`, optionally negated. The symbols resolve against
//! the three-dimensional table `e_2e_2 = p7 e_1 + p1 e_2 + p2 e_3`,
//! `e_2e_3 = p8 e_1 + p3 e_2 + p4 e_3`, `e_3e_3 = p9 e_1 + p5 e_2 + p6 e_3`.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::algebra::Algebra;
use crate::cre::CreSystem;
use crate::error::{Error, Result};

/// One expected equation.
#[derive(Debug, Clone, Deserialize)]
pub struct GoldenEquation {
    pub lhs: BTreeMap<String, String>,
    pub rhs: BTreeMap<String, String>,
}

/// A expected system with the catalog names of its algebra and `phi`.
#[derive(Debug, Clone, Deserialize)]
pub struct GoldenSystem {
    pub id: String,
    /// `complex` or `a3_1` (any instance of the three-dimensional family).
    pub algebra: String,
    pub phi: String,
    pub dependents: Vec<String>,
    pub independents: Vec<String>,
    pub equations: Vec<GoldenEquation>,
}

/// Every golden file, as `(file name, contents)`.
pub const FILES: &[(&str, &str)] = &[
    ("cre_complex_swap.json", include_str!("../golden/cre_complex_swap.json")),
    ("cre_complex_y_zero.json", include_str!("../golden/cre_complex_y_zero.json")),
    ("cre_complex_y_x_plus_y.json", include_str!("../golden/cre_complex_y_x_plus_y.json")),
    ("cre_a3_1_x_y_0.json", include_str!("../golden/cre_a3_1_x_y_0.json")),
    ("cre_a3_1_x_0_y.json", include_str!("../golden/cre_a3_1_x_0_y.json")),
    ("cre_a3_1_0_x_y.json", include_str!("../golden/cre_a3_1_0_x_y.json")),
];

/// Parses every golden file.
pub fn golden_systems() -> Result<Vec<GoldenSystem>> {
    FILES.iter().map(|(_, s)| Ok(serde_json::from_str(s)?)).collect()
}

fn symbol(alg: &Algebra, name: &str) -> Result<f64> {
    let (i, j, k) = match name {
        "p1" => (1, 1, 1),
        "p2" => (1, 1, 2),
        "p3" => (1, 2, 1),
        "p4" => (1, 2, 2),
        "p5" => (2, 2, 1),
        "p6" => (2, 2, 2),
        "p7" => (1, 1, 0),
        "p8" => (1, 2, 0),
        "p9" => (2, 2, 0),
        _ => return Err(Error::InvalidInput(format!("unknown coefficient symbol '{name}'"))),
    };
    if alg.dim() != 3 {
        return Err(Error::DimensionMismatch {
            what: "algebra for table symbols",
            expected: 3,
            found: alg.dim(),
        });
    }
    Ok(alg.c(i, j, k))
}

/// Value of a coefficient string in `alg`.
pub fn coefficient(alg: &Algebra, s: &str) -> Result<f64> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s),
    };
    if body.starts_with('p') {
        Ok(sign * symbol(alg, body)?)
    } else {
        body.parse::<f64>()
            .map(|v| sign * v)
            .map_err(|e| Error::InvalidInput(format!("coefficient '{s}': {e}")))
    }
}

impl GoldenSystem {
    fn position(&self, key: &str) -> Result<(usize, usize)> {
        let (f, var) = key
            .split_once('_')
            .ok_or_else(|| Error::InvalidInput(format!("term '{key}' is not of the form f_var")))?;
        let m = self.dependents.iter().position(|d| d == f);
        let i = self.independents.iter().position(|d| d == var);
        match (m, i) {
            (Some(m), Some(i)) => Ok((m, i)),
            _ => Err(Error::InvalidInput(format!("term '{key}' names an unknown variable"))),
        }
    }

    /// Coefficients `[equation][m][i]` of `lhs - rhs` in `alg`.
    pub fn coefficients(&self, alg: &Algebra) -> Result<Vec<Vec<Vec<f64>>>> {
        let (n, k) = (self.dependents.len(), self.independents.len());
        self.equations
            .iter()
            .map(|eq| {
                let mut c = vec![vec![0.0; k]; n];
                for (side, sign) in [(&eq.lhs, 1.0), (&eq.rhs, -1.0)] {
                    for (key, value) in side {
                        let (m, i) = self.position(key)?;
                        c[m][i] += sign * coefficient(alg, value)?;
                    }
                }
                Ok(c)
            })
            .collect()
    }

    /// Largest coefficient deviation between the emitted and expected
    /// equations, taken in order, each up to an overall sign.
    pub fn deviation(&self, emitted: &CreSystem, alg: &Algebra) -> Result<f64> {
        let expected = self.coefficients(alg)?;
        if expected.len() != emitted.equations.len()
            || emitted.dependents != self.dependents.len()
            || emitted.independents != self.independents.len()
        {
            return Err(Error::DimensionMismatch {
                what: "expected equations",
                expected: expected.len(),
                found: emitted.equations.len(),
            });
        }
        let mut worst = 0.0f64;
        for (p, e) in expected.iter().zip(&emitted.equations) {
            let dev = |s: f64| {
                p.iter()
                    .flatten()
                    .zip(e.coefficients.iter().flatten())
                    .map(|(a, b)| (s * a - b).abs())
                    .fold(0.0, f64::max)
            };
            worst = worst.max(dev(1.0).min(dev(-1.0)));
        }
        Ok(worst)
    }
}
