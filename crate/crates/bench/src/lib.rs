//! Shared fixtures for the benchmarks.

use nalgebra::DVector;
use phia::quadratic::QuadraticVf;
use phia::{catalog, Algebra, Element};

/// A generic three-dimensional algebra `A3_1(p)`.
pub fn a3_1() -> Algebra {
    Algebra::a3_1([0.7, -0.4, 1.1, 0.3, -0.9, 0.5]).expect("fixture parameters are valid")
}

/// A regular element of [`a3_1`].
pub fn a3_1_element() -> Element {
    DVector::from_vec(vec![1.3, -0.2, 0.4])
}

/// `c (L w)^2` in `A2_1(1.37, -0.61)` with parameters off the scan grid.
pub fn off_grid_square() -> QuadraticVf {
    let alg = catalog::algebra("a2_1:1.37,-0.61").expect("catalog algebra");
    QuadraticVf::from_square(&alg, &[0.8, 0.3], &[[1.0, 0.4], [-0.2, 0.9]])
}
