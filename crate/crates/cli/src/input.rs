//! Parsing of flag values into library inputs.

use std::path::Path;

use phia::catalog;
use phia::{Algebra, AnyAlgebra, SmoothMap};

/// An input problem, reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<phia::Error> for InputError {
    fn from(e: phia::Error) -> Self {
        InputError(e.to_string())
    }
}

pub type InputResult<T> = std::result::Result<T, InputError>;

/// Comma-separated reals for the flag `flag`, optionally of a fixed length.
pub fn reals(flag: &str, s: &str, len: Option<usize>) -> InputResult<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| InputError(format!("--{flag}: '{t}' is not a number")))
        })
        .collect::<InputResult<_>>()?;
    if let Some(n) = len {
        if v.len() != n {
            return Err(InputError(format!("--{flag}: expected {n} values, found {}", v.len())));
        }
    }
    Ok(v)
}

/// Fixed-size array of reals for the flag `flag`.
pub fn array<const N: usize>(flag: &str, s: &str) -> InputResult<[f64; N]> {
    let v = reals(flag, s, Some(N))?;
    Ok(std::array::from_fn(|i| v[i]))
}

/// A real-scalar algebra from a JSON file path or a catalog name such as
/// `complex`, `a2_1:0.5,-1` or `a3_1:1,1,1,1,1,1`.
pub fn algebra(s: &str) -> InputResult<Algebra> {
    if Path::new(s).is_file() {
        let text = std::fs::read_to_string(s).map_err(|e| InputError(format!("--algebra: {s}: {e}")))?;
        return Algebra::from_json(&text).map_err(|e| InputError(format!("--algebra: {s}: {e}")));
    }
    catalog::algebra(s).map_err(|e| InputError(format!("--algebra: {e}")))
}

/// An algebra file with real or complex scalars.
pub fn algebra_file(path: &str) -> InputResult<AnyAlgebra> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("--file: {path}: {e}")))?;
    AnyAlgebra::from_json(&text).map_err(|e| InputError(format!("--file: {path}: {e}")))
}

/// A catalog map `phi`.
pub fn phi(id: &str) -> InputResult<SmoothMap> {
    catalog::phi(id).map_err(|e| InputError(format!("--phi: {e}")))
}

/// A catalog function of `phi`.
pub fn function(id: &str, phi: &SmoothMap, alg: &Algebra) -> InputResult<SmoothMap> {
    if phi.codomain() != alg.dim() {
        return Err(InputError(format!(
            "--phi has codomain dimension {} but the algebra has dimension {}",
            phi.codomain(),
            alg.dim()
        )));
    }
    catalog::function(id, phi, alg).map_err(|e| InputError(format!("--f: {e}")))
}

/// Closed loop description `circle:r=R[,cx=X][,cy=Y][,kappa=K]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleLoop {
    pub r: f64,
    pub cx: f64,
    pub cy: f64,
    pub kappa: f64,
}

pub fn circle_loop(s: &str) -> InputResult<CircleLoop> {
    let body = s
        .strip_prefix("circle:")
        .ok_or_else(|| InputError(format!("--loop: '{s}' must start with 'circle:'")))?;
    let mut out = CircleLoop {
        r: f64::NAN,
        cx: 0.0,
        cy: 0.0,
        kappa: 0.0,
    };
    for part in body.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| InputError(format!("--loop: '{part}' is not key=value")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| InputError(format!("--loop: '{v}' is not a number")))?;
        match k.trim() {
            "r" => out.r = v,
            "cx" => out.cx = v,
            "cy" => out.cy = v,
            "kappa" => out.kappa = v,
            other => return Err(InputError(format!("--loop: unknown key '{other}'"))),
        }
    }
    if !(out.r > 0.0) {
        return Err(InputError("--loop: radius r must be positive".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_reals() {
        assert_eq!(reals("x", "1, -2.5,3e-1", None).unwrap(), vec![1.0, -2.5, 0.3]);
        assert!(reals("x", "1,a", None).unwrap_err().0.contains("--x"));
        assert!(reals("x", "1,2", Some(3)).is_err());
        assert_eq!(array::<2>("x", "4,5").unwrap(), [4.0, 5.0]);
    }

    #[test]
    fn parses_loops() {
        let c = circle_loop("circle:r=0.5,cx=2,kappa=0.25").unwrap();
        assert_eq!(c, CircleLoop { r: 0.5, cx: 2.0, cy: 0.0, kappa: 0.25 });
        assert!(circle_loop("square:r=1").is_err());
        assert!(circle_loop("circle:r=-1").is_err());
        assert!(circle_loop("circle:q=1").is_err());
    }

    #[test]
    fn resolves_catalog_algebras() {
        assert_eq!(algebra("complex").unwrap().dim(), 2);
        assert_eq!(algebra("a3_1:1,1,1,1,1,1").unwrap().dim(), 3);
        assert!(algebra("nonsense").is_err());
    }
}
