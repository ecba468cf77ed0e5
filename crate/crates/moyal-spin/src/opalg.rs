//! Dense complex operator algebra in the |m, n_z> basis.
//!
//! Operators are (2s+1) x (2s+1) complex matrices with row/column index
//! a = s - m, i.e. m descending from s to -s. This ordering is fixed here
//! once for the whole crate; the factorized-kernel column ordering in the
//! `discrete` module maps onto it via a = 2s - (m + s).

use nalgebra::{ComplexField, DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{wigner_small_d, Direction, SpinJ};
use crate::error::{Error, Result};

/// Real square matrix; Gram matrices and their inverses live here.
pub type RealMatrix = DMatrix<f64>;

/// Condition estimate above which a solve is declared singular.
///
/// 1/sqrt(eps): degenerate constellations must fail loudly while
/// near-degenerate ones still produce (warned-about) output.
pub fn singularity_threshold() -> f64 {
    1.0 / f64::EPSILON.sqrt()
}

/// Complex (2s+1) x (2s+1) matrix in the |m, n_z> basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    s: SpinJ,
    mat: DMatrix<Complex64>,
}

impl Operator {
    pub fn zeros(s: SpinJ) -> Self {
        Self {
            s,
            mat: DMatrix::zeros(s.dim(), s.dim()),
        }
    }

    pub fn identity(s: SpinJ) -> Self {
        Self {
            s,
            mat: DMatrix::identity(s.dim(), s.dim()),
        }
    }

    pub fn from_matrix(s: SpinJ, mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != s.dim() || mat.ncols() != s.dim() {
            return Err(Error::DimensionMismatch {
                expected: s.dim(),
                got: mat.nrows().max(mat.ncols()),
            });
        }
        Ok(Self { s, mat })
    }

    pub fn from_fn(s: SpinJ, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let d = s.dim();
        Self {
            s,
            mat: DMatrix::from_fn(d, d, f),
        }
    }

    pub fn s(&self) -> SpinJ {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        self.mat[(a, b)]
    }

    pub fn set_entry(&mut self, a: usize, b: usize, value: Complex64) {
        self.mat[(a, b)] = value;
    }

    pub fn adjoint(&self) -> Operator {
        Self {
            s: self.s,
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.diagonal().iter().sum()
    }

    /// max |A - A^dagger| over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.mat.adjoint();
        (&self.mat - adj)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        Ok(Self {
            s: self.s,
            mat: &self.mat * &other.mat,
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        Ok(Self {
            s: self.s,
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other)?;
        Ok(Self {
            s: self.s,
            mat: &self.mat - &other.mat,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        Self {
            s: self.s,
            mat: self.mat.map(|c| c * factor),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        (&self.mat - &other.mat)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.s != other.s {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> OperatorJson {
        let d = self.dim();
        let grid = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..d)
                .map(|a| (0..d).map(|b| f(&self.mat[(a, b)])).collect())
                .collect()
        };
        OperatorJson {
            tool_version: None,
            two_s: self.s.two_s(),
            re: grid(|c| c.re),
            im: grid(|c| c.im),
        }
    }

    pub fn from_json(json: &OperatorJson) -> Result<Operator> {
        let s = SpinJ::from_two_s(json.two_s)?;
        let d = s.dim();
        if json.re.len() != d || json.im.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: json.re.len().max(json.im.len()),
            });
        }
        let mut mat = DMatrix::zeros(d, d);
        for a in 0..d {
            if json.re[a].len() != d || json.im[a].len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: json.re[a].len().max(json.im[a].len()),
                });
            }
            for b in 0..d {
                mat[(a, b)] = Complex64::new(json.re[a][b], json.im[a][b]);
            }
        }
        Ok(Self { s, mat })
    }
}

/// JSON wire format: {"two_s": int, "re": [[...]], "im": [[...]]} with
/// row-major a-index ordering. `tool_version` is an optional provenance tag
/// added by the CLI.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_version: Option<String>,
    pub two_s: u32,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// tr(AB) without forming the product.
pub fn trace_product(a: &Operator, b: &Operator) -> Result<Complex64> {
    if a.s() != b.s() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let d = a.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a.entry(i, j) * b.entry(j, i);
        }
    }
    Ok(acc)
}

/// Solution of a linear system together with its condition estimate.
#[derive(Clone, Debug)]
pub struct Solved<T> {
    pub solution: DMatrix<T>,
    pub condition: f64,
}

/// Solves M X = rhs by pivoted LU and reports the 2-norm condition estimate
/// of M. Fails with a `SingularMatrix` error when the estimate exceeds the
/// singularity threshold.
pub fn solve_linear<T>(m: &DMatrix<T>, rhs: &DMatrix<T>) -> Result<Solved<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!(
            "solve_linear needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if rhs.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: rhs.nrows(),
        });
    }
    let condition = condition_estimate(m);
    if !condition.is_finite() || condition > singularity_threshold() {
        return Err(Error::SingularMatrix { condition });
    }
    let lu = m.clone().lu();
    let solution = lu.solve(rhs).ok_or(Error::SingularMatrix { condition })?;
    Ok(Solved {
        solution,
        condition,
    })
}

/// 2-norm condition number from the singular values.
pub fn condition_estimate<T>(m: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64> + Copy,
{
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let min = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// z-y-z Euler angles parameterizing a rotation R = R_z(alpha) R_y(beta) R_z(gamma).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Angles (phi, theta, 0) of a rotation taking n_z to the given
    /// direction. The vanishing third angle is a gauge fixed here once.
    pub fn taking_z_to(n: &Direction) -> Self {
        Self {
            alpha: n.phi(),
            beta: n.theta(),
            gamma: 0.0,
        }
    }
}

fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// SO(3) matrix of the z-y-z Euler angles.
pub fn rotation_matrix(angles: EulerAngles) -> Matrix3<f64> {
    rot_z(angles.alpha) * rot_y(angles.beta) * rot_z(angles.gamma)
}

/// SO(3) matrix of a rotation about `axis` by `angle` (Rodrigues formula).
pub fn rotation_matrix_axis_angle(axis: &Direction, angle: f64) -> Matrix3<f64> {
    let k = axis.as_vector();
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + angle.sin() * kx + (1.0 - angle.cos()) * (kx * kx)
}

/// Extracts z-y-z Euler angles from a rotation matrix.
pub fn euler_from_matrix(r: &Matrix3<f64>) -> EulerAngles {
    let beta = r[(2, 2)].clamp(-1.0, 1.0).acos();
    if beta.sin().abs() > 1e-12 {
        EulerAngles {
            alpha: r[(1, 2)].atan2(r[(0, 2)]),
            beta,
            gamma: r[(2, 1)].atan2(-r[(2, 0)]),
        }
    } else if r[(2, 2)] > 0.0 {
        // Pure rotation about z.
        EulerAngles {
            alpha: r[(1, 0)].atan2(r[(0, 0)]),
            beta: 0.0,
            gamma: 0.0,
        }
    } else {
        // beta = pi: R = R_z(alpha - gamma) R_y(pi).
        EulerAngles {
            alpha: (-r[(1, 0)]).atan2(-r[(0, 0)]),
            beta,
            gamma: 0.0,
        }
    }
}

/// Unitary irreducible representation U_g = e^{-i alpha J_z} e^{-i beta J_y}
/// e^{-i gamma J_z} built from Wigner small-d matrix elements.
pub fn rotation_operator(s: SpinJ, angles: EulerAngles) -> Operator {
    let two_ms: Vec<i32> = s.two_m_values().collect();
    Operator::from_fn(s, |a, b| {
        let m = f64::from(two_ms[a]) / 2.0;
        let mp = f64::from(two_ms[b]) / 2.0;
        let d = wigner_small_d(s, two_ms[a], two_ms[b], angles.beta)
            .expect("valid projections by construction");
        Complex64::from_polar(1.0, -angles.alpha * m)
            * d
            * Complex64::from_polar(1.0, -angles.gamma * mp)
    })
}

/// Rotation operator for an axis-angle parameterization.
pub fn rotation_operator_axis_angle(s: SpinJ, axis: &Direction, angle: f64) -> Operator {
    let angles = euler_from_matrix(&rotation_matrix_axis_angle(axis, angle));
    rotation_operator(s, angles)
}

/// Spin component operator n . J for tests and symbol tables.
pub fn spin_component(s: SpinJ, axis: &Direction) -> Operator {
    // J_z diagonal, J_+/- on the off-diagonals; n.J = n_z J_z
    //   + (n_x - i n_y)/2 J_+ + (n_x + i n_y)/2 J_-.
    let two_ms: Vec<i32> = s.two_m_values().collect();
    let sval = s.spin();
    let mut op = Operator::zeros(s);
    let d = s.dim();
    for (a, &two_m) in two_ms.iter().enumerate() {
        let m = f64::from(two_m) / 2.0;
        op.set_entry(a, a, Complex64::new(axis.z() * m, 0.0));
    }
    let v = Vector3::new(axis.x(), axis.y(), axis.z());
    for (b, &two_m) in two_ms.iter().enumerate() {
        let m = f64::from(two_m) / 2.0;
        // J_+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>, row a = s - (m+1) = b - 1.
        if b >= 1 {
            let c = (sval * (sval + 1.0) - m * (m + 1.0)).sqrt();
            let coeff = Complex64::new(v.x / 2.0, -v.y / 2.0) * c;
            let prev = op.entry(b - 1, b);
            op.set_entry(b - 1, b, prev + coeff);
        }
        if b + 1 < d {
            let c = (sval * (sval + 1.0) - m * (m - 1.0)).sqrt();
            let coeff = Complex64::new(v.x / 2.0, v.y / 2.0) * c;
            let prev = op.entry(b + 1, b);
            op.set_entry(b + 1, b, prev + coeff);
        }
    }
    op
}
