//! Finite-dimensional commutative associative unital algebras defined by
//! structure constants `e_i e_j = sum_k c[i][j][k] e_k`.
//!
//! Elements are plain dense coefficient vectors. Multiplication by an element
//! `a` is the linear map `R(a) = sum_i a_i R_i` with `[R_i]_{jk} = c[i][k][j]`
//! (the first fundamental representation), which turns inversion and the
//! exponential into ordinary dense linear algebra.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold on `sigma_min / sigma_max` below which an element is singular.
pub const REGULARITY_TOL: f64 = 1e-12;

/// Relative tolerance used when validating the algebra axioms.
pub const AXIOM_TOL: f64 = 1e-12;

/// Scalar field tag carried by every algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Real,
    Complex,
}

/// Scalar types an algebra can be defined over.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    const KIND: ScalarKind;

    /// Builds a scalar from real and imaginary parts; `None` when a real
    /// scalar is requested with a nonzero imaginary part.
    fn from_parts(re: f64, im: f64) -> Option<Self>;

    /// Real and imaginary parts.
    fn to_parts(self) -> (f64, f64);

    /// Uniform draw from `[-1, 1]` (each part for complex scalars).
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    const KIND: ScalarKind = ScalarKind::Real;

    fn from_parts(re: f64, im: f64) -> Option<Self> {
        (im == 0.0).then_some(re)
    }

    fn to_parts(self) -> (f64, f64) {
        (self, 0.0)
    }

    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random_range(-1.0..=1.0)
    }
}

impl Scalar for Complex64 {
    const KIND: ScalarKind = ScalarKind::Complex;

    fn from_parts(re: f64, im: f64) -> Option<Self> {
        Some(Complex64::new(re, im))
    }

    fn to_parts(self) -> (f64, f64) {
        (self.re, self.im)
    }

    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
    }
}

/// An algebra element: its coefficient vector in the basis `e_1..e_n`.
pub type Element<T = f64> = DVector<T>;

/// Largest violations of the three algebra axioms for a constants tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxiomReport {
    /// `max |c[i][j][k] - c[j][i][k]|`.
    pub commutativity: f64,
    /// `max |((e_i e_j) e_k - e_i (e_j e_k))_m|`.
    pub associativity: f64,
    /// `max |(u e_i - e_i)_k|` for the declared unit `u`.
    pub unit: f64,
    /// `max(1, max |c|)`, the scale the tolerances are relative to.
    pub scale: f64,
}

impl AxiomReport {
    /// True when every defect is within `tol` relative to the tensor scale.
    pub fn passes(&self, tol: f64) -> bool {
        self.commutativity <= tol * self.scale
            && self.associativity <= tol * self.scale * self.scale
            && self.unit <= tol * self.scale
    }
}

/// A commutative associative unital algebra over `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Algebra<T: Scalar = f64> {
    dim: usize,
    constants: Vec<T>,
    unit: Element<T>,
    basis_reps: Vec<DMatrix<T>>,
}

fn idx(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

fn flatten<T: Scalar>(constants: &[Vec<Vec<T>>]) -> Result<(usize, Vec<T>)> {
    let n = constants.len();
    if n == 0 {
        return Err(Error::InvalidInput("algebra dimension must be positive".into()));
    }
    let mut flat = Vec::with_capacity(n * n * n);
    for plane in constants {
        if plane.len() != n {
            return Err(Error::DimensionMismatch {
                what: "structure constants (second index)",
                expected: n,
                found: plane.len(),
            });
        }
        for row in plane {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "structure constants (third index)",
                    expected: n,
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
    }
    Ok((n, flat))
}

/// Computes the axiom defects of a flat `n x n x n` constants tensor.
pub fn axiom_report<T: Scalar>(n: usize, c: &[T], unit: &[T]) -> AxiomReport {
    let scale = c.iter().map(|x| x.modulus()).fold(1.0, f64::max);
    let mut commutativity = 0.0f64;
    let mut associativity = 0.0f64;
    let mut unit_defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                commutativity = commutativity.max((c[idx(n, i, j, k)] - c[idx(n, j, i, k)]).modulus());
                for m in 0..n {
                    let mut left = T::zero();
                    let mut right = T::zero();
                    for l in 0..n {
                        left += c[idx(n, i, j, l)] * c[idx(n, l, k, m)];
                        right += c[idx(n, j, k, l)] * c[idx(n, i, l, m)];
                    }
                    associativity = associativity.max((left - right).modulus());
                }
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            let mut s = T::zero();
            for j in 0..n {
                s += unit[j] * c[idx(n, j, i, k)];
            }
            let target = if i == k { T::one() } else { T::zero() };
            unit_defect = unit_defect.max((s - target).modulus());
        }
    }
    AxiomReport {
        commutativity,
        associativity,
        unit: unit_defect,
        scale,
    }
}

impl<T: Scalar> Algebra<T> {
    /// General constructor validating commutativity, the unit and associativity
    /// to `1e-12` relative to the tensor scale.
    pub fn from_constants(constants: Vec<Vec<Vec<T>>>, unit: Vec<T>) -> Result<Self> {
        let (n, flat) = flatten(&constants)?;
        Self::from_flat(n, flat, unit, AXIOM_TOL)
    }

    fn from_flat(n: usize, c: Vec<T>, unit: Vec<T>, tol: f64) -> Result<Self> {
        if unit.len() != n {
            return Err(Error::DimensionMismatch {
                what: "unit",
                expected: n,
                found: unit.len(),
            });
        }
        if c.iter().chain(unit.iter()).any(|x| !x.modulus().is_finite()) {
            return Err(Error::InvalidInput("structure constants must be finite".into()));
        }
        let report = axiom_report(n, &c, &unit);
        let scale = report.scale;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if (c[idx(n, i, j, k)] - c[idx(n, j, i, k)]).modulus() > tol * scale {
                        return Err(Error::NotCommutative { i, j, k });
                    }
                }
            }
        }
        for i in 0..n {
            let mut worst = 0.0f64;
            for k in 0..n {
                let mut s = T::zero();
                for j in 0..n {
                    s += unit[j] * c[idx(n, j, i, k)];
                }
                let target = if i == k { T::one() } else { T::zero() };
                worst = worst.max((s - target).modulus());
            }
            if worst > tol * scale {
                return Err(Error::NoUnit { index: i, deviation: worst });
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut deviation = 0.0f64;
                    for m in 0..n {
                        let mut left = T::zero();
                        let mut right = T::zero();
                        for l in 0..n {
                            left += c[idx(n, i, j, l)] * c[idx(n, l, k, m)];
                            right += c[idx(n, j, k, l)] * c[idx(n, i, l, m)];
                        }
                        deviation = deviation.max((left - right).modulus());
                    }
                    if deviation > tol * scale * scale {
                        return Err(Error::AssociativityViolation { i, j, k, deviation });
                    }
                }
            }
        }
        let basis_reps = (0..n)
            .map(|i| DMatrix::from_fn(n, n, |j, k| c[idx(n, i, k, j)]))
            .collect();
        Ok(Self {
            dim: n,
            constants: c,
            unit: DVector::from_vec(unit),
            basis_reps,
        })
    }

    /// `A^2_1(alpha, beta)`: unit `e_1`, `e_2 e_2 = alpha e_1 + beta e_2`.
    pub fn a2_1(alpha: T, beta: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        let c = vec![
            vec![vec![o, z], vec![z, o]],
            vec![vec![z, o], vec![alpha, beta]],
        ];
        Self::from_constants(c, vec![o, z]).expect("A2_1 satisfies the axioms")
    }

    /// `A^2_2(gamma, delta)`: unit `e_2`, `e_1 e_1 = gamma e_1 + delta e_2`.
    pub fn a2_2(gamma: T, delta: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        let c = vec![
            vec![vec![gamma, delta], vec![o, z]],
            vec![vec![o, z], vec![z, o]],
        ];
        Self::from_constants(c, vec![z, o]).expect("A2_2 satisfies the axioms")
    }

    /// `A^2_{1,2}`: componentwise product on two coordinates, unit `e_1 + e_2`.
    pub fn a2_12() -> Self {
        let (o, z) = (T::one(), T::zero());
        let c = vec![
            vec![vec![o, z], vec![z, z]],
            vec![vec![z, z], vec![z, o]],
        ];
        Self::from_constants(c, vec![o, o]).expect("A2_12 satisfies the axioms")
    }

    /// The closure constants `(p7, p8, p9)` that make the three-dimensional
    /// family `a3_1` associative.
    pub fn a3_1_closure(p: [T; 6]) -> [T; 3] {
        let [p1, p2, p3, p4, p5, p6] = p;
        let p7 = -p1 * p4 - p2 * p6 + p2 * p3 + p4 * p4;
        let p8 = p2 * p5 - p3 * p4;
        let p9 = -p1 * p5 - p3 * p6 + p4 * p5 + p3 * p3;
        [p7, p8, p9]
    }

    /// `A^3_1(p1..p6)`: unit `e_1` and
    /// `e_2e_2 = p7 e_1 + p1 e_2 + p2 e_3`,
    /// `e_2e_3 = p8 e_1 + p3 e_2 + p4 e_3`,
    /// `e_3e_3 = p9 e_1 + p5 e_2 + p6 e_3`.
    pub fn a3_1(p: [T; 6]) -> Result<Self> {
        let [p1, p2, p3, p4, p5, p6] = p;
        let [p7, p8, p9] = Self::a3_1_closure(p);
        let (o, z) = (T::one(), T::zero());
        let c = vec![
            vec![vec![o, z, z], vec![z, o, z], vec![z, z, o]],
            vec![vec![z, o, z], vec![p7, p1, p2], vec![p8, p3, p4]],
            vec![vec![z, z, o], vec![p8, p3, p4], vec![p9, p5, p6]],
        ];
        let (n, flat) = flatten(&c)?;
        Self::from_flat(n, flat, vec![o, z, z], 1e-10)
    }

    /// Dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Structure constant `c[i][j][k]` (zero-based indices).
    pub fn c(&self, i: usize, j: usize, k: usize) -> T {
        self.constants[idx(self.dim, i, j, k)]
    }

    /// Constants tensor as nested vectors `[i][j][k]`.
    pub fn constants(&self) -> Vec<Vec<Vec<T>>> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.c(i, j, k)).collect()).collect())
            .collect()
    }

    /// Largest constant magnitude, at least 1.
    pub fn scale(&self) -> f64 {
        self.constants.iter().map(|x| x.modulus()).fold(1.0, f64::max)
    }

    /// The unit element `e`.
    pub fn unit(&self) -> Element<T> {
        self.unit.clone()
    }

    /// Basis element `e_i` (zero-based).
    pub fn basis(&self, i: usize) -> Element<T> {
        let mut v = DVector::zeros(self.dim);
        v[i] = T::one();
        v
    }

    /// The zero element.
    pub fn zero(&self) -> Element<T> {
        DVector::zeros(self.dim)
    }

    /// Representation matrix `R_i` of the basis element `e_i`.
    pub fn basis_rep(&self, i: usize) -> &DMatrix<T> {
        &self.basis_reps[i]
    }

    /// Axiom defects of this algebra.
    pub fn axiom_report(&self) -> AxiomReport {
        axiom_report(self.dim, &self.constants, self.unit.as_slice())
    }

    fn check_len(&self, a: &Element<T>) {
        assert_eq!(a.len(), self.dim, "element length must equal the algebra dimension");
    }

    /// Product `ab` by bilinear expansion through the constants.
    pub fn mul(&self, a: &Element<T>, b: &Element<T>) -> Element<T> {
        self.check_len(a);
        self.check_len(b);
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if a[i] == T::zero() {
                continue;
            }
            for j in 0..n {
                let ab = a[i] * b[j];
                if ab == T::zero() {
                    continue;
                }
                for k in 0..n {
                    out[k] += ab * self.c(i, j, k);
                }
            }
        }
        out
    }

    /// Representation `R(a) = sum_i a_i R_i`.
    pub fn rep(&self, a: &Element<T>) -> DMatrix<T> {
        self.check_len(a);
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            if a[i] != T::zero() {
                m += &self.basis_reps[i] * a[i];
            }
        }
        m
    }

    /// `sigma_min / sigma_max` of `R(a)` (zero for the zero element).
    pub fn regularity_ratio(&self, a: &Element<T>) -> f64 {
        let sv = self.rep(a).singular_values();
        let max = sv.max();
        if max == 0.0 {
            0.0
        } else {
            sv.min() / max
        }
    }

    /// True when `R(a)` is nonsingular at the `1e-12` relative threshold.
    pub fn is_regular(&self, a: &Element<T>) -> bool {
        self.regularity_ratio(a) >= REGULARITY_TOL
    }

    /// Inverse `a^{-1}` by solving `R(a) x = e`.
    pub fn inverse(&self, a: &Element<T>) -> Result<Element<T>> {
        let ratio = self.regularity_ratio(a);
        if ratio < REGULARITY_TOL {
            return Err(Error::SingularElement { ratio });
        }
        self.rep(a)
            .lu()
            .solve(&self.unit)
            .ok_or(Error::SingularElement { ratio })
    }

    /// Quotient `a / b = a b^{-1}`.
    pub fn div(&self, a: &Element<T>, b: &Element<T>) -> Result<Element<T>> {
        Ok(self.mul(a, &self.inverse(b)?))
    }

    /// Power `a^m` by repeated squaring; `a^0 = e`.
    pub fn pow(&self, a: &Element<T>, m: u32) -> Element<T> {
        let mut result = self.unit();
        let mut base = a.clone();
        let mut m = m;
        while m > 0 {
            if m & 1 == 1 {
                result = self.mul(&result, &base);
            }
            m >>= 1;
            if m > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }

    /// Exponential `exp(a) = exp(R(a)) e`.
    pub fn exp(&self, a: &Element<T>) -> Element<T> {
        self.rep(a).exp() * &self.unit
    }

    /// Draws a regular element with coefficients uniform in `[-1, 1]`.
    pub fn random_regular<R: Rng + ?Sized>(&self, rng: &mut R) -> Element<T> {
        loop {
            let a = DVector::from_fn(self.dim, |_, _| T::sample(rng));
            if self.is_regular(&a) {
                return a;
            }
        }
    }

    /// Draws an element with coefficients uniform in `[-1, 1]`.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Element<T> {
        DVector::from_fn(self.dim, |_, _| T::sample(rng))
    }

    /// Serializable form of this algebra.
    pub fn to_json_model(&self) -> AlgebraJson {
        let enc = |x: T| JsonScalar::encode(x);
        AlgebraJson {
            dim: self.dim,
            scalars: T::KIND,
            constants: self
                .constants()
                .into_iter()
                .map(|p| p.into_iter().map(|r| r.into_iter().map(enc).collect()).collect())
                .collect(),
            unit: self.unit.iter().copied().map(enc).collect(),
        }
    }

    /// JSON string of this algebra.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_model()).expect("algebra serializes")
    }

    /// Parses and validates a JSON algebra whose scalar field is `T`.
    pub fn from_json(s: &str) -> Result<Self> {
        let model: AlgebraJson = serde_json::from_str(s)?;
        Self::from_json_model(&model)
    }

    /// Validates a parsed JSON model whose scalar field is `T`.
    pub fn from_json_model(model: &AlgebraJson) -> Result<Self> {
        let (constants, unit) = model.decode::<T>()?;
        Self::from_constants(constants, unit)
    }
}

impl Algebra<f64> {
    /// The complex numbers as `A^2_1(-1, 0)`.
    pub fn complex() -> Self {
        Self::a2_1(-1.0, 0.0)
    }

    /// The same constants viewed over the complex numbers.
    pub fn complexify(&self) -> Algebra<Complex64> {
        let c = self
            .constants()
            .into_iter()
            .map(|p| {
                p.into_iter()
                    .map(|r| r.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
                    .collect()
            })
            .collect();
        let unit = self.unit.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Algebra::from_constants(c, unit).expect("complexification keeps the axioms")
    }
}

/// The three two-dimensional algebra families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlanarCase {
    /// `A^2_1(alpha, beta)`.
    #[serde(rename = "A2_1")]
    A21,
    /// `A^2_2(gamma, delta)`.
    #[serde(rename = "A2_2")]
    A22,
    /// `A^2_{1,2}`.
    #[serde(rename = "A2_12")]
    A12,
}

impl PlanarCase {
    /// All three families in search order.
    pub const ALL: [PlanarCase; 3] = [PlanarCase::A21, PlanarCase::A22, PlanarCase::A12];

    /// The algebra of this family; `params` is ignored for `A2_12`.
    pub fn algebra(self, params: Option<[f64; 2]>) -> Algebra {
        let [p, q] = params.unwrap_or([0.0, 0.0]);
        match self {
            PlanarCase::A21 => Algebra::a2_1(p, q),
            PlanarCase::A22 => Algebra::a2_2(p, q),
            PlanarCase::A12 => Algebra::a2_12(),
        }
    }

    /// Whether the family carries two parameters.
    pub fn has_params(self) -> bool {
        !matches!(self, PlanarCase::A12)
    }

    /// Short label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            PlanarCase::A21 => "A2_1",
            PlanarCase::A22 => "A2_2",
            PlanarCase::A12 => "A2_12",
        }
    }
}

/// A JSON scalar: a plain number or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonScalar {
    Real(f64),
    Complex([f64; 2]),
}

impl JsonScalar {
    fn encode<T: Scalar>(x: T) -> Self {
        let (re, im) = x.to_parts();
        match T::KIND {
            ScalarKind::Real => JsonScalar::Real(re),
            ScalarKind::Complex => JsonScalar::Complex([re, im]),
        }
    }

    fn decode<T: Scalar>(self) -> Result<T> {
        let (re, im) = match self {
            JsonScalar::Real(x) => (x, 0.0),
            JsonScalar::Complex([re, im]) => (re, im),
        };
        T::from_parts(re, im)
            .ok_or_else(|| Error::InvalidInput(format!("complex value [{re}, {im}] in a real algebra")))
    }
}

/// On-disk algebra description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub dim: usize,
    pub scalars: ScalarKind,
    pub constants: Vec<Vec<Vec<JsonScalar>>>,
    pub unit: Vec<JsonScalar>,
}

impl AlgebraJson {
    /// Decodes the tensor and unit without validating the axioms.
    pub fn decode<T: Scalar>(&self) -> Result<(Vec<Vec<Vec<T>>>, Vec<T>)> {
        if self.scalars != T::KIND {
            return Err(Error::InvalidInput(format!(
                "algebra declares {:?} scalars, {:?} requested",
                self.scalars,
                T::KIND
            )));
        }
        if self.constants.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "structure constants (first index)",
                expected: self.dim,
                found: self.constants.len(),
            });
        }
        let constants = self
            .constants
            .iter()
            .map(|p| {
                p.iter()
                    .map(|r| r.iter().map(|x| x.decode::<T>()).collect::<Result<Vec<T>>>())
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let unit = self.unit.iter().map(|x| x.decode::<T>()).collect::<Result<Vec<T>>>()?;
        Ok((constants, unit))
    }

    /// Axiom defects of the raw description (no validation).
    pub fn axiom_report(&self) -> Result<AxiomReport> {
        match self.scalars {
            ScalarKind::Real => {
                let (c, u) = self.decode::<f64>()?;
                let (n, flat) = flatten(&c)?;
                check_unit_len(n, u.len())?;
                Ok(axiom_report(n, &flat, &u))
            }
            ScalarKind::Complex => {
                let (c, u) = self.decode::<Complex64>()?;
                let (n, flat) = flatten(&c)?;
                check_unit_len(n, u.len())?;
                Ok(axiom_report(n, &flat, &u))
            }
        }
    }
}

fn check_unit_len(n: usize, found: usize) -> Result<()> {
    if n == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what: "unit",
            expected: n,
            found,
        })
    }
}

/// An algebra over either scalar field, as loaded from JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyAlgebra {
    Real(Algebra<f64>),
    Complex(Algebra<Complex64>),
}

impl AnyAlgebra {
    /// Parses and validates a JSON algebra of either scalar kind.
    pub fn from_json(s: &str) -> Result<Self> {
        let model: AlgebraJson = serde_json::from_str(s)?;
        match model.scalars {
            ScalarKind::Real => Ok(AnyAlgebra::Real(Algebra::from_json_model(&model)?)),
            ScalarKind::Complex => Ok(AnyAlgebra::Complex(Algebra::from_json_model(&model)?)),
        }
    }

    /// Dimension of the wrapped algebra.
    pub fn dim(&self) -> usize {
        match self {
            AnyAlgebra::Real(a) => a.dim(),
            AnyAlgebra::Complex(a) => a.dim(),
        }
    }

    /// Axiom defects of the wrapped algebra.
    pub fn axiom_report(&self) -> AxiomReport {
        match self {
            AnyAlgebra::Real(a) => a.axiom_report(),
            AnyAlgebra::Complex(a) => a.axiom_report(),
        }
    }
}
