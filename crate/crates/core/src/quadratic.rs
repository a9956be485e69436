//! Algebrizability of quadratic planar vector fields.
//!
//! A field `f = (P, Q)` with `P, Q` quadratic is differentiable along a
//! linear `phi` over a planar algebra exactly when the vector
//! `v = (a, b, c, d)` of `V = Jphi^{-1}` is orthogonal to the rows of a
//! parameter-dependent matrix `M6`. The quadratic part alone gives the square
//! matrix `M4` and the linear part the matrix `M2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, PlanarCase, Scalar};
use crate::error::{Error, Result};
use crate::linalg::{null_space, right_singular, smallest_singular};
use crate::map::SmoothMap;
use crate::phi::cre_residual_from_jacobians;

/// Largest accepted CRE residual of a witness on the verification grid.
pub const WITNESS_TOL: f64 = 1e-8;
/// Smallest accepted `|ad - bc|` for a unit vector `v`.
pub const MIN_DET: f64 = 1e-9;
/// Relative singular-value threshold for null spaces.
pub const NULL_TOL: f64 = 1e-10;
/// Parameters closer than this are the same witness.
pub const DEDUP_TOL: f64 = 1e-6;

/// `f(x, y) = (a0 + a1 x + a2 y + a3 x^2 + a4 xy + a5 y^2, b0 + ... + b5 y^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadraticVf {
    pub a: [f64; 6],
    pub b: [f64; 6],
}

impl QuadraticVf {
    pub fn new(a: [f64; 6], b: [f64; 6]) -> Self {
        Self { a, b }
    }

    /// The coordinates of `c (phi(w))^2` for a linear `phi` (matrix `l`,
    /// row-major) and an element `c` of `alg`.
    pub fn from_square(alg: &Algebra, c: &[f64; 2], l: &[[f64; 2]; 2]) -> Self {
        let c = DVector::from_column_slice(c);
        let col = |j: usize| DVector::from_vec(vec![l[0][j], l[1][j]]);
        let (px, py) = (col(0), col(1));
        let xx = alg.mul(&c, &alg.mul(&px, &px));
        let xy = alg.mul(&c, &alg.mul(&px, &py)) * 2.0;
        let yy = alg.mul(&c, &alg.mul(&py, &py));
        Self {
            a: [0.0, 0.0, 0.0, xx[0], xy[0], yy[0]],
            b: [0.0, 0.0, 0.0, xx[1], xy[1], yy[1]],
        }
    }

    /// Evaluates the field at `(x, y)` over real or complex scalars.
    pub fn eval<T: Scalar>(&self, x: T, y: T) -> [T; 2] {
        let monomials = [T::one(), x, y, x * x, x * y, y * y];
        let dot = |c: &[f64; 6]| {
            c.iter()
                .zip(monomials.iter())
                .fold(T::zero(), |acc, (ci, m)| acc + T::from_real(*ci) * *m)
        };
        [dot(&self.a), dot(&self.b)]
    }

    /// Analytic Jacobian at `(x, y)`.
    pub fn jacobian(&self, x: f64, y: f64) -> DMatrix<f64> {
        let (a, b) = (&self.a, &self.b);
        DMatrix::from_row_slice(
            2,
            2,
            &[
                a[1] + 2.0 * a[3] * x + a[4] * y,
                a[2] + a[4] * x + 2.0 * a[5] * y,
                b[1] + 2.0 * b[3] * x + b[4] * y,
                b[2] + b[4] * x + 2.0 * b[5] * y,
            ],
        )
    }

    /// The field as a map `R^2 -> R^2` with its exact Jacobian.
    pub fn as_map(&self) -> SmoothMap {
        let (f, g) = (*self, *self);
        SmoothMap::new(2, 2, move |u| {
            let [p, q] = f.eval(u[0], u[1]);
            DVector::from_vec(vec![p, q])
        })
        .with_jacobian(move |u| g.jacobian(u[0], u[1]))
    }

    /// True when every quadratic coefficient vanishes.
    pub fn is_affine(&self) -> bool {
        self.a[3..].iter().chain(self.b[3..].iter()).all(|c| *c == 0.0)
    }

    /// True when every constant and linear coefficient vanishes.
    pub fn is_homogeneous(&self) -> bool {
        self.a[..3].iter().chain(self.b[..3].iter()).all(|c| *c == 0.0)
    }

    /// Linear part `[[a1, a2], [b1, b2]]`.
    pub fn linear_part(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[self.a[1], self.a[2], self.b[1], self.b[2]])
    }
}

/// Rows of `M2` (linear part), in the layout of each case.
fn linear_rows(vf: &QuadraticVf, case: PlanarCase, p: [f64; 2]) -> [[f64; 4]; 2] {
    let (a, b) = (&vf.a, &vf.b);
    pair_rows(case, p, [a[1], a[2]], [b[1], b[2]])
}

/// Rows built from the coefficient pair `(A1, A2)`, `(B1, B2)` of one
/// Jacobian component; `M2`, `M4` and `M6` are stacks of these.
fn pair_rows(case: PlanarCase, [p, q]: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [[f64; 4]; 2] {
    match case {
        PlanarCase::A21 => [
            [q * b[0] + a[0], -b[0], q * b[1] + a[1], -b[1]],
            [p * b[0], -a[0], p * b[1], -a[1]],
        ],
        PlanarCase::A22 => [
            [a[0], p * a[0] - b[0], a[1], p * a[1] - b[1]],
            [b[0], -q * a[0], b[1], -q * a[1]],
        ],
        PlanarCase::A12 => [[0.0, a[0], 0.0, a[1]], [b[0], 0.0, b[1], 0.0]],
    }
}

/// The `x` and `y` coefficient blocks of the Jacobian:
/// `[[2a3, a4], [2b3, b4]]` and `[[a4, 2a5], [b4, 2b5]]`.
fn quadratic_pairs(vf: &QuadraticVf) -> [([f64; 2], [f64; 2]); 2] {
    let (a, b) = (&vf.a, &vf.b);
    [
        ([2.0 * a[3], a[4]], [2.0 * b[3], b[4]]),
        ([a[4], 2.0 * a[5]], [b[4], 2.0 * b[5]]),
    ]
}

fn stack(rows: &[[f64; 4]]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), 4, |r, c| rows[r][c])
}

/// `M2(vf, params)`; `params` is `(alpha, beta)`, `(gamma, delta)` or ignored.
pub fn build_m2(vf: &QuadraticVf, case: PlanarCase, params: [f64; 2]) -> DMatrix<f64> {
    stack(&linear_rows(vf, case, params))
}

/// `M4(vf, params)`.
pub fn build_m4(vf: &QuadraticVf, case: PlanarCase, params: [f64; 2]) -> DMatrix<f64> {
    let [(ax, bx), (ay, by)] = quadratic_pairs(vf);
    let [x1, x2] = pair_rows(case, params, ax, bx);
    let [y1, y2] = pair_rows(case, params, ay, by);
    stack(&[x1, y1, x2, y2])
}

/// `M6(vf, params)`: the rows of `M2` and `M4` interleaved as
/// (first `M2` row, first two `M4` rows, second `M2` row, last two `M4` rows).
pub fn build_m6(vf: &QuadraticVf, case: PlanarCase, params: [f64; 2]) -> DMatrix<f64> {
    let [l1, l2] = linear_rows(vf, case, params);
    let [(ax, bx), (ay, by)] = quadratic_pairs(vf);
    let [x1, x2] = pair_rows(case, params, ax, bx);
    let [y1, y2] = pair_rows(case, params, ay, by);
    stack(&[l1, x1, y1, l2, x2, y2])
}

/// The algebra whose CRE pattern the rows of `case` encode, and the
/// parameters of that algebra. The case-2 rows encode `u_x + gamma u_y - v_y`,
/// which is the pattern of `A2_2(-gamma, delta)` under its multiplication table.
pub fn witness_algebra(case: PlanarCase, params: [f64; 2]) -> (Option<[f64; 2]>, Algebra) {
    let p = match case {
        PlanarCase::A21 => Some(params),
        PlanarCase::A22 => Some([-params[0], params[1]]),
        PlanarCase::A12 => None,
    };
    (p, case.algebra(p))
}

/// A linear `phi` and planar algebra along which the field is differentiable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebrizationWitness {
    pub case: PlanarCase,
    /// Parameters of the algebra in its multiplication-table convention.
    pub params: Option<[f64; 2]>,
    /// Parameters as they enter the matrices `M2`, `M4`, `M6`.
    pub matrix_params: [f64; 2],
    /// `v = (a, b, c, d)`, unit length.
    pub v: [f64; 4],
    /// Jacobian of `phi(s, t) = (d s - b t, a t - c s) / (ad - bc)`, row-major.
    pub phi_matrix: [[f64; 2]; 2],
    /// Largest CRE residual over the verification grid.
    pub residual: f64,
    /// `||M v|| / ||M||` for the matrix the witness was taken from.
    pub null_residual: f64,
}

impl AlgebrizationWitness {
    /// The witness algebra.
    pub fn algebra(&self) -> Algebra {
        self.case.algebra(self.params)
    }

    /// The linear map `phi`.
    pub fn phi(&self) -> SmoothMap {
        let m = self.phi_matrix;
        SmoothMap::linear(DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]]))
    }

    /// `ad - bc`.
    pub fn det(&self) -> f64 {
        let [a, b, c, d] = self.v;
        a * d - b * c
    }
}

/// Search settings for [`algebrize_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebrizeOptions {
    /// Parameters range over `[-half_width, half_width]^2`.
    pub half_width: f64,
    /// Grid spacing of the scan.
    pub step: f64,
    /// Keep at most this many witnesses.
    pub limit: Option<usize>,
    /// Cases to try.
    pub cases: Vec<PlanarCase>,
}

impl Default for AlgebrizeOptions {
    fn default() -> Self {
        Self {
            half_width: 10.0,
            step: 0.25,
            limit: None,
            cases: PlanarCase::ALL.to_vec(),
        }
    }
}

/// Verification points: a 5 x 5 grid on `[-1, 1]^2`.
fn verification_grid() -> Vec<[f64; 2]> {
    let t = [-1.0, -0.5, 0.0, 0.5, 1.0];
    t.iter().flat_map(|&x| t.iter().map(move |&y| [x, y])).collect()
}

/// Largest CRE residual of `vf` along `jphi` over the verification grid.
pub fn witness_residual(vf: &QuadraticVf, alg: &Algebra, jphi: &DMatrix<f64>) -> f64 {
    verification_grid()
        .iter()
        .map(|&[x, y]| cre_residual_from_jacobians(alg, &vf.jacobian(x, y), jphi))
        .fold(0.0, f64::max)
}

/// Unit vector of the column span of `n` with the largest `|ad - bc|`.
fn best_null_vector(n: &DMatrix<f64>) -> DVector<f64> {
    if n.ncols() == 1 {
        return n.column(0).into_owned();
    }
    let q = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 0.0, 0.5, //
            0.0, 0.0, -0.5, 0.0, //
            0.0, -0.5, 0.0, 0.0, //
            0.5, 0.0, 0.0, 0.0,
        ],
    );
    let eig = SymmetricEigen::new(n.transpose() * q * n);
    let i = eig.eigenvalues.iamax();
    n * eig.eigenvectors.column(i)
}

fn relative_null_residual(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        0.0
    } else {
        (m * v).norm() / scale
    }
}

/// Builds and verifies a witness from a unit vector `v`.
fn make_witness(
    vf: &QuadraticVf,
    case: PlanarCase,
    matrix_params: [f64; 2],
    v: &DVector<f64>,
    null_residual: f64,
) -> Option<AlgebrizationWitness> {
    let v = v / v.norm();
    let (a, b, c, d) = (v[0], v[1], v[2], v[3]);
    let det = a * d - b * c;
    if det.abs() <= MIN_DET {
        return None;
    }
    let jphi = DMatrix::from_row_slice(2, 2, &[d / det, -b / det, -c / det, a / det]);
    let (params, alg) = witness_algebra(case, matrix_params);
    let residual = witness_residual(vf, &alg, &jphi);
    if !(residual <= WITNESS_TOL) {
        return None;
    }
    Some(AlgebrizationWitness {
        case,
        params,
        matrix_params,
        v: [a, b, c, d],
        phi_matrix: [[jphi[(0, 0)], jphi[(0, 1)]], [jphi[(1, 0)], jphi[(1, 1)]]],
        residual,
        null_residual,
    })
}

/// Witness from the null space of `M6` at `params`, if any.
fn witness_at(vf: &QuadraticVf, case: PlanarCase, params: [f64; 2]) -> Option<AlgebrizationWitness> {
    let m6 = build_m6(vf, case, params);
    let n = null_space(&m6, NULL_TOL);
    if n.ncols() == 0 {
        return None;
    }
    let v = best_null_vector(&n);
    make_witness(vf, case, params, &v, relative_null_residual(&m6, &v))
}

/// Roots in `[lo, hi]` of a function known to be a polynomial of degree at
/// most two; `None` when it vanishes identically.
fn quadratic_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, zero_scale: f64) -> Option<Vec<f64>> {
    let (fm, f0, fp) = (f(-1.0), f(0.0), f(1.0));
    let q0 = f0;
    let q1 = (fp - fm) / 2.0;
    let q2 = (fp + fm) / 2.0 - f0;
    let (fl, fh) = (f(lo), f(hi));
    let mag = q0.abs().max(q1.abs()).max(q2.abs()).max(fl.abs()).max(fh.abs());
    if mag <= zero_scale {
        return None;
    }
    let mut roots = Vec::new();
    if q2.abs() <= 1e-14 * mag {
        if q1.abs() > 1e-14 * mag {
            roots.push(-q0 / q1);
        }
    } else {
        let disc = q1 * q1 - 4.0 * q2 * q0;
        let vertex = -q1 / (2.0 * q2);
        if disc < 0.0 && (q0 + q1 * vertex + q2 * vertex * vertex).abs() <= 1e-6 * mag {
            roots.push(vertex);
        } else if disc >= 0.0 {
            let sq = disc.sqrt();
            let t = -0.5 * (q1 + q1.signum() * sq);
            if t != 0.0 {
                roots.push(t / q2);
                roots.push(q0 / t);
            } else {
                roots.push(0.0);
            }
        }
    }
    let polished = roots
        .into_iter()
        .map(|mut s| {
            for _ in 0..3 {
                let d = q1 + 2.0 * q2 * s;
                if d == 0.0 {
                    break;
                }
                s -= f(s) / d;
            }
            s
        })
        .filter(|s| s.is_finite() && *s >= lo - 1e-12 && *s <= hi + 1e-12)
        .collect();
    Some(polished)
}

fn grid(half_width: f64, step: f64) -> Vec<f64> {
    let n = (half_width / step).round() as i64;
    (-n..=n).map(|i| i as f64 * step).collect()
}

/// Parameter pairs on the grid lines where `det M4` vanishes.
fn det_m4_roots(vf: &QuadraticVf, case: PlanarCase, opts: &AlgebrizeOptions) -> Vec<[f64; 2]> {
    let (lo, hi) = (-opts.half_width, opts.half_width);
    let lines = grid(opts.half_width, opts.step);
    let coarse: Vec<f64> = grid(opts.half_width, 1.0);
    let scale = build_m4(vf, case, [hi, hi]).norm().max(build_m4(vf, case, [1.0, 1.0]).norm());
    let zero_scale = 1e-13 * scale.powi(4);
    let det = |p: [f64; 2]| build_m4(vf, case, p).determinant();
    let mut out = Vec::new();
    for &fixed in &lines {
        for axis in 0..2 {
            let point = |s: f64| if axis == 0 { [s, fixed] } else { [fixed, s] };
            match quadratic_roots(|s| det(point(s)), lo, hi, zero_scale) {
                Some(roots) => out.extend(roots.into_iter().map(point)),
                None => out.extend(coarse.iter().map(|&s| point(s))),
            }
        }
    }
    out
}

type Builder = fn(&QuadraticVf, PlanarCase, [f64; 2]) -> DMatrix<f64>;

/// Levenberg-Marquardt on `[M(p) V; V^T V - I] = 0` over `(p, V)` with `V`
/// a `4 x k` block, so that `M(p)` has nullity at least `k`; `M` is affine
/// in `p`.
fn refine(vf: &QuadraticVf, case: PlanarCase, p0: [f64; 2], build: Builder, k: usize) -> Option<[f64; 2]> {
    let base = build(vf, case, [0.0, 0.0]);
    let rows = base.nrows();
    let d = [build(vf, case, [1.0, 0.0]) - &base, build(vf, case, [0.0, 1.0]) - &base];
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let len = rows * k + pairs.len();
    let unknowns = 2 + 4 * k;
    let residual = |p: [f64; 2], v: &DMatrix<f64>| {
        let mv = build(vf, case, p) * v;
        let mut r = DVector::zeros(len);
        for c in 0..k {
            r.rows_mut(c * rows, rows).copy_from(&mv.column(c));
        }
        for (e, &(i, j)) in pairs.iter().enumerate() {
            r[rows * k + e] = v.column(i).dot(&v.column(j)) - if i == j { 1.0 } else { 0.0 };
        }
        r
    };
    let mut p = p0;
    let (_, basis) = right_singular(&build(vf, case, p));
    let mut v = basis.columns(4 - k, k).into_owned();
    let mut r = residual(p, &v);
    let mut lambda = 1e-3;
    let scale = base.norm().max(1.0);
    for _ in 0..200 {
        if r.norm() <= 1e-15 * scale {
            break;
        }
        let m = build(vf, case, p);
        let mut j = DMatrix::zeros(len, unknowns);
        for c in 0..k {
            for (i, di) in d.iter().enumerate() {
                j.view_mut((c * rows, i), (rows, 1)).copy_from(&(di * v.column(c)));
            }
            j.view_mut((c * rows, 2 + 4 * c), (rows, 4)).copy_from(&m);
        }
        for (e, &(a, b)) in pairs.iter().enumerate() {
            for t in 0..4 {
                j[(rows * k + e, 2 + 4 * a + t)] += v[(t, b)];
                j[(rows * k + e, 2 + 4 * b + t)] += v[(t, a)];
            }
        }
        let jt = j.transpose();
        let g = &jt * &r;
        let h = &jt * &j;
        let mut improved = false;
        for _ in 0..20 {
            let damped = &h + DMatrix::from_diagonal(&h.diagonal().map(|x| lambda * (x + 1e-12)));
            let Some(step) = damped.lu().solve(&(-&g)) else { break };
            let np = [p[0] + step[0], p[1] + step[1]];
            let nv = &v + DMatrix::from_column_slice(4, k, step.rows(2, 4 * k).as_slice());
            let nr = residual(np, &nv);
            if nr.norm() < r.norm() {
                (p, v, r) = (np, nv, nr);
                lambda = (lambda / 3.0).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let m = build(vf, case, p);
    let (values, _) = right_singular(&m);
    let sigma = values[values.len() - k];
    let smax = values[0];
    (p.iter().all(|x| x.is_finite()) && sigma <= NULL_TOL * smax.max(1e-300)).then_some(p)
}

/// Grid points where the `k`-th smallest singular value of `build`,
/// relative to the largest, is a local minimum; smallest first.
fn sigma_minima(
    vf: &QuadraticVf,
    case: PlanarCase,
    opts: &AlgebrizeOptions,
    build: Builder,
    k: usize,
    count: usize,
) -> Vec<[f64; 2]> {
    let g = grid(opts.half_width, opts.step);
    let n = g.len();
    let s: Vec<f64> = (0..n * n)
        .map(|i| {
            let (values, _) = right_singular(&build(vf, case, [g[i / n], g[i % n]]));
            values[values.len() - k] / values[0].max(1e-300)
        })
        .collect();
    let mut minima: Vec<(f64, [f64; 2])> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let here = s[i * n + j];
            let is_min = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    a < 0 || b < 0 || a >= n as i64 || b >= n as i64 || s[a as usize * n + b as usize] >= here
                })
            });
            if is_min {
                minima.push((here, [g[i], g[j]]));
            }
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    minima.into_iter().take(count).map(|m| m.1).collect()
}

fn default_params(case: PlanarCase) -> [f64; 2] {
    match case {
        PlanarCase::A21 => [-1.0, 0.0],
        PlanarCase::A22 => [0.0, 1.0],
        PlanarCase::A12 => [0.0, 0.0],
    }
}

fn affine_witness(vf: &QuadraticVf, case: PlanarCase) -> Option<AlgebrizationWitness> {
    let params = default_params(case);
    let l = vf.linear_part();
    let scale = l.norm();
    if scale > 0.0 && l.determinant().abs() > 1e-12 * scale * scale {
        let inv = l.try_inverse()?;
        let v = DVector::from_vec(vec![inv[(0, 0)], inv[(0, 1)], inv[(1, 0)], inv[(1, 1)]]);
        let vn = &v / v.norm();
        let m6 = build_m6(vf, case, params);
        return make_witness(vf, case, params, &vn, relative_null_residual(&m6, &vn));
    }
    witness_at(vf, case, params)
}

fn same_witness(a: &AlgebrizationWitness, b: &AlgebrizationWitness) -> bool {
    a.case == b.case
        && (a.case == PlanarCase::A12
            || (a.matrix_params[0] - b.matrix_params[0]).abs() <= DEDUP_TOL
                && (a.matrix_params[1] - b.matrix_params[1]).abs() <= DEDUP_TOL)
}

/// Witnesses for `vf` with the default search box `[-10, 10]^2`, step 0.25.
/// An empty list means no witness was found in the box.
pub fn algebrize(vf: &QuadraticVf) -> Vec<AlgebrizationWitness> {
    algebrize_with(vf, &AlgebrizeOptions::default())
}

/// Witnesses for `vf`. Per case, candidate parameters come from the zeros of
/// `det M4` on the grid lines and from refined grid minima of the second
/// smallest singular value, since a witness `V` brings the whole family
/// `V R(mu)` into the null space. Fields with a linear part also use refined
/// minima of `sigma_min(M6)`. A candidate is accepted only if its CRE
/// residual on the verification grid is at most [`WITNESS_TOL`].
pub fn algebrize_with(vf: &QuadraticVf, opts: &AlgebrizeOptions) -> Vec<AlgebrizationWitness> {
    let mut out: Vec<AlgebrizationWitness> = Vec::new();
    for &case in &opts.cases {
        let mut found = Vec::new();
        if vf.is_affine() {
            found.extend(affine_witness(vf, case));
        } else if case == PlanarCase::A12 {
            found.extend(witness_at(vf, case, [0.0, 0.0]));
        } else {
            let roots = det_m4_roots(vf, case, opts);
            if vf.is_homogeneous() {
                found.extend(roots.iter().filter_map(|&p| {
                    witness_at(vf, case, p)
                        .or_else(|| refine(vf, case, p, build_m4, 1).and_then(|q| witness_at(vf, case, q)))
                }));
                found.extend(
                    sigma_minima(vf, case, opts, build_m4, 2, 12)
                        .into_iter()
                        .filter_map(|p| refine(vf, case, p, build_m4, 2))
                        .filter_map(|p| witness_at(vf, case, p)),
                );
            } else {
                let pencil: Vec<[f64; 2]> = sigma_minima(vf, case, opts, build_m6, 2, 12);
                found.extend(
                    pencil
                        .into_iter()
                        .filter_map(|p| refine(vf, case, p, build_m6, 2))
                        .filter_map(|p| witness_at(vf, case, p)),
                );
                let mut seeds = sigma_minima(vf, case, opts, build_m6, 1, 12);
                let mut ranked: Vec<(f64, [f64; 2])> = roots
                    .iter()
                    .map(|&p| {
                        let m = build_m6(vf, case, p);
                        (smallest_singular(&m).0 / m.norm().max(1e-300), p)
                    })
                    .collect();
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
                seeds.extend(ranked.into_iter().take(24).map(|r| r.1));
                found.extend(
                    seeds
                        .into_iter()
                        .filter_map(|p| refine(vf, case, p, build_m6, 1))
                        .filter_map(|p| witness_at(vf, case, p)),
                );
            }
        }
        found.sort_by(|a, b| {
            let na = a.matrix_params[0].hypot(a.matrix_params[1]);
            let nb = b.matrix_params[0].hypot(b.matrix_params[1]);
            na.total_cmp(&nb)
                .then(a.matrix_params[0].total_cmp(&b.matrix_params[0]))
                .then(a.matrix_params[1].total_cmp(&b.matrix_params[1]))
        });
        for w in found {
            if !out.iter().any(|o| same_witness(o, &w)) {
                out.push(w);
            }
        }
    }
    if let Some(limit) = opts.limit {
        out.truncate(limit);
    }
    out
}

/// The complex field `F(u, v) = (b u^2 - (b+c) uv, a v^2 - (a+c) uv)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilliardsField {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl BilliardsField {
    /// Coefficients as a quadratic field in `(u, v)`.
    pub fn vf(&self) -> QuadraticVf {
        let (a, b, c) = (self.a, self.b, self.c);
        QuadraticVf::new([0.0, 0.0, 0.0, b, -(b + c), 0.0], [0.0, 0.0, 0.0, 0.0, -(a + c), a])
    }

    /// Complex evaluation.
    pub fn eval_complex(&self, u: Complex64, v: Complex64) -> [Complex64; 2] {
        self.vf().eval(u, v)
    }

    /// The realized field on `R^4` with `u = x1 + i y1`, `v = x2 + i y2`.
    pub fn eval_real(&self, p: [f64; 4]) -> [f64; 4] {
        let (a, b, c) = (self.a, self.b, self.c);
        let [x1, y1, x2, y2] = p;
        [
            b * (x1 * x1 - y1 * y1) - (b + c) * (x1 * x2 - y1 * y2),
            2.0 * b * x1 * y1 - (b + c) * (x1 * y2 + x2 * y1),
            a * (x2 * x2 - y2 * y2) - (a + c) * (x1 * x2 - y1 * y2),
            2.0 * a * x2 * y2 - (a + c) * (x1 * y2 + x2 * y1),
        ]
    }
}

/// The billiards field for `(a, b, c)`.
pub fn billiards_field(a: f64, b: f64, c: f64) -> BilliardsField {
    BilliardsField { a, b, c }
}

/// Closed-form algebrization data of the billiards field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilliardsReport {
    pub alpha: f64,
    pub beta: f64,
    pub v: [f64; 4],
    /// `phi(u, v) = (u - (b+c) v / (2b), -(a+c) v / (2b))`, row-major.
    pub phi_matrix: [[f64; 2]; 2],
    /// `max ||F(w) - b phi(w)^2|| / (1 + max ||F(w)||)` over the grid.
    pub residual: f64,
    /// `det M4(alpha, beta)` relative to `||M4||^4`.
    pub det_m4: f64,
    /// `||M4 v|| / (||M4|| ||v||)`.
    pub null_residual: f64,
}

/// Checks `F(w) = b (phi(w))^2` in `A2_1(alpha, beta)` over complex scalars on
/// a 4 x 4 grid of complex points `(u, v)`.
pub fn verify_billiards_algebrization(a: f64, b: f64, c: f64) -> Result<BilliardsReport> {
    if b == 0.0 {
        return Err(Error::DegenerateParameters("b = 0".into()));
    }
    if a + c == 0.0 {
        return Err(Error::DegenerateParameters("a + c = 0".into()));
    }
    let s = a + c;
    let alpha = -(b + c).powi(2) / (s * s);
    let beta = -2.0 * (b + c) / s + 4.0 * a * b / (s * s);
    let v = [1.0, -(b + c) / s, 0.0, -2.0 * b / s];
    let phi_matrix = [[1.0, -(b + c) / (2.0 * b)], [0.0, -s / (2.0 * b)]];
    let field = billiards_field(a, b, c);
    let alg = Algebra::<Complex64>::a2_1(Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0));
    let nodes: Vec<Complex64> = (0..4)
        .map(|k| Complex64::new(-1.0 + 2.0 * k as f64 / 3.0, 0.5 - k as f64 / 3.0))
        .collect();
    let bb = Complex64::new(b, 0.0);
    let (mut worst, mut fmax) = (0.0f64, 0.0f64);
    for &u in &nodes {
        for &w2 in &nodes {
            let f = field.eval_complex(u, w2);
            let p = nalgebra::dvector![
                u + w2 * phi_matrix[0][1],
                w2 * phi_matrix[1][1]
            ];
            let sq = alg.mul(&p, &p) * bb;
            let diff = ((f[0] - sq[0]).norm_sqr() + (f[1] - sq[1]).norm_sqr()).sqrt();
            worst = worst.max(diff);
            fmax = fmax.max((f[0].norm_sqr() + f[1].norm_sqr()).sqrt());
        }
    }
    let m4 = build_m4(&field.vf(), PlanarCase::A21, [alpha, beta]);
    let vv = DVector::from_column_slice(&v);
    Ok(BilliardsReport {
        alpha,
        beta,
        v,
        phi_matrix,
        residual: worst / (1.0 + fmax),
        det_m4: m4.determinant().abs() / m4.norm().powi(4),
        null_residual: (&m4 * &vv).norm() / (m4.norm() * vv.norm()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_field_gives_zero_matrices() {
        let vf = QuadraticVf::default();
        for case in PlanarCase::ALL {
            assert_eq!(build_m6(&vf, case, [1.5, -2.0]).norm(), 0.0);
            assert_eq!(build_m4(&vf, case, [1.5, -2.0]).norm(), 0.0);
            assert_eq!(build_m2(&vf, case, [1.5, -2.0]).norm(), 0.0);
        }
    }

    #[test]
    fn matrix_entries_follow_the_displays() {
        let vf = QuadraticVf::new([0.0, 1.0, 2.0, 3.0, 4.0, 5.0], [0.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let (al, be) = (0.5, -2.0);
        let m6 = build_m6(&vf, PlanarCase::A21, [al, be]);
        assert_eq!(m6.row(0).iter().copied().collect::<Vec<_>>(), vec![be * 6.0 + 1.0, -6.0, be * 7.0 + 2.0, -7.0]);
        assert_eq!(m6.row(1).iter().copied().collect::<Vec<_>>(), vec![2.0 * be * 8.0 + 6.0, -16.0, be * 9.0 + 4.0, -9.0]);
        assert_eq!(m6.row(5).iter().copied().collect::<Vec<_>>(), vec![al * 9.0, -4.0, 2.0 * al * 10.0, -10.0]);
        let (ga, de) = (1.5, 3.0);
        let m6 = build_m6(&vf, PlanarCase::A22, [ga, de]);
        assert_eq!(m6.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, ga * 1.0 - 6.0, 2.0, ga * 2.0 - 7.0]);
        assert_eq!(m6.row(4).iter().copied().collect::<Vec<_>>(), vec![16.0, -2.0 * de * 3.0, 9.0, -de * 4.0]);
        let m6 = build_m6(&vf, PlanarCase::A12, [0.0, 0.0]);
        assert_eq!(m6.row(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 4.0, 0.0, 10.0]);
        assert_eq!(m6.row(5).iter().copied().collect::<Vec<_>>(), vec![9.0, 0.0, 20.0, 0.0]);
        for case in PlanarCase::ALL {
            let m6 = build_m6(&vf, case, [al, be]);
            let m4 = build_m4(&vf, case, [al, be]);
            let m2 = build_m2(&vf, case, [al, be]);
            for (r6, r4) in [(1, 0), (2, 1), (4, 2), (5, 3)] {
                assert_eq!(m6.row(r6), m4.row(r4));
            }
            assert_eq!(m6.row(0), m2.row(0));
            assert_eq!(m6.row(3), m2.row(1));
        }
    }

    #[test]
    fn billiards_closed_form() {
        let r = verify_billiards_algebrization(1.0, 1.0, 1.0).unwrap();
        assert_eq!((r.alpha, r.beta), (-1.0, -1.0));
        assert_eq!(r.v, [1.0, -1.0, 0.0, -1.0]);
        assert!(r.residual <= 1e-12);
        assert!(r.det_m4 <= 1e-12 && r.null_residual <= 1e-12);
        let r = verify_billiards_algebrization(2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(r.alpha, -4.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(r.beta, -4.0 / 9.0, epsilon = 1e-15);
        assert!(r.residual <= 1e-12);
        assert!(matches!(verify_billiards_algebrization(1.0, 0.0, 1.0), Err(Error::DegenerateParameters(_))));
        assert!(matches!(verify_billiards_algebrization(1.0, 1.0, -1.0), Err(Error::DegenerateParameters(_))));
    }

    #[test]
    fn billiards_evaluations() {
        let f = billiards_field(1.0, 1.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(f.eval_complex(one, one), [Complex64::new(-1.0, 0.0); 2]);
        let g = billiards_field(1.0, 0.0, 0.0);
        assert_eq!(g.eval_complex(one, one), [Complex64::new(0.0, 0.0); 2]);
        let (u, v) = (Complex64::new(0.3, -1.2), Complex64::new(-0.7, 0.4));
        let h = billiards_field(0.4, -1.1, 2.3);
        let c = h.eval_complex(u, v);
        let r = h.eval_real([u.re, u.im, v.re, v.im]);
        for (x, y) in [(c[0].re, r[0]), (c[0].im, r[1]), (c[1].re, r[2]), (c[1].im, r[3])] {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn billiards_field_is_algebrized_with_closed_form_witness() {
        let ws = algebrize_with(
            &billiards_field(1.0, 1.0, 1.0).vf(),
            &AlgebrizeOptions {
                cases: vec![PlanarCase::A21],
                ..Default::default()
            },
        );
        let w = ws
            .iter()
            .find(|w| (w.matrix_params[0] + 1.0).abs() < 1e-9 && (w.matrix_params[1] + 1.0).abs() < 1e-9)
            .expect("closed-form parameters found");
        assert!(w.det().abs() > MIN_DET && w.residual <= WITNESS_TOL);
        let m4 = build_m4(&billiards_field(1.0, 1.0, 1.0).vf(), PlanarCase::A21, [-1.0, -1.0]);
        let closed = DVector::from_vec(vec![1.0, -1.0, 0.0, -1.0]);
        assert!((&m4 * &closed).norm() <= 1e-14);
    }

    #[test]
    fn affine_fields_are_algebrizable() {
        let vf = QuadraticVf::new([1.0, 2.0, -1.0, 0.0, 0.0, 0.0], [-3.0, 0.5, 1.0, 0.0, 0.0, 0.0]);
        let ws = algebrize(&vf);
        assert_eq!(ws.len(), 3);
        for w in &ws {
            assert!(w.residual <= 1e-12);
            assert_relative_eq!(w.phi().jacobian(&[0.0, 0.0]).unwrap(), vf.linear_part(), epsilon = 1e-12);
        }
    }

    #[test]
    fn forward_constructed_fields_round_trip() {
        let l = [[1.0, 0.4], [-0.3, 1.2]];
        for (case, params) in [
            (PlanarCase::A21, [-2.0, 0.5]),
            (PlanarCase::A22, [1.5, -0.75]),
            (PlanarCase::A12, [0.0, 0.0]),
        ] {
            let alg = case.algebra(Some(params));
            let vf = QuadraticVf::from_square(&alg, &[0.8, -0.6], &l);
            let ws = algebrize_with(
                &vf,
                &AlgebrizeOptions {
                    cases: vec![case],
                    ..Default::default()
                },
            );
            assert!(!ws.is_empty(), "{case:?}");
            for w in &ws {
                assert!(w.residual <= WITNESS_TOL);
                assert!(w.null_residual <= 1e-10);
            }
        }
    }

    #[test]
    fn off_grid_parameters_are_found() {
        let l = [[0.49, -0.67], [-0.41, 2.0]];
        for (case, params) in [
            (PlanarCase::A21, [2.0494, -2.3658]),
            (PlanarCase::A22, [1.1727, -2.9109]),
        ] {
            let alg = case.algebra(Some(params));
            let vf = QuadraticVf::from_square(&alg, &[1.3, 0.7], &l);
            let ws = algebrize_with(
                &vf,
                &AlgebrizeOptions {
                    cases: vec![case],
                    ..Default::default()
                },
            );
            let best = ws.iter().find(|w| {
                let p = w.params.unwrap();
                (p[0] - params[0]).abs() < 1e-8 && (p[1] - params[1]).abs() < 1e-8
            });
            assert!(best.is_some_and(|w| w.residual <= WITNESS_TOL), "{case:?}: {ws:?}");
        }
    }

    #[test]
    fn second_case_rows_encode_negated_gamma() {
        let l = [[1.0, 0.4], [-0.3, 1.2]];
        let alg = Algebra::a2_2(1.5, -0.75);
        let vf = QuadraticVf::from_square(&alg, &[0.8, -0.6], &l);
        let inv = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, -0.3, 1.2]).try_inverse().unwrap();
        let v = DVector::from_column_slice(inv.transpose().as_slice());
        let flipped = build_m4(&vf, PlanarCase::A22, [-1.5, -0.75]);
        let as_built = build_m4(&vf, PlanarCase::A22, [1.5, -0.75]);
        assert!((&flipped * &v).norm() <= 1e-14);
        assert!((&as_built * &v).norm() > 1e-3);
        let (params, _) = witness_algebra(PlanarCase::A22, [-1.5, -0.75]);
        assert_eq!(params, Some([1.5, -0.75]));
    }

    #[test]
    fn quadratic_part_with_linear_terms() {
        let alg = Algebra::a2_1(-1.0, 0.0);
        let mut vf = QuadraticVf::from_square(&alg, &[1.0, 0.0], &[[1.0, 0.0], [0.0, 1.0]]);
        vf.a[1] = 2.0;
        vf.b[2] = 2.0;
        vf.a[2] = -0.5;
        vf.b[1] = 0.5;
        let ws = algebrize_with(
            &vf,
            &AlgebrizeOptions {
                cases: vec![PlanarCase::A21],
                ..Default::default()
            },
        );
        assert!(ws.iter().any(|w| (w.matrix_params[0] + 1.0).abs() < 1e-8 && w.matrix_params[1].abs() < 1e-8));
    }
}
