//! Special functions of angular-momentum algebra.
//!
//! Clebsch-Gordan coefficients, Legendre polynomials, spherical harmonics,
//! Wigner rotation matrices and spin-coherent overlaps. All quantum numbers
//! are passed as twice their value (`two_j`, `two_m`) so that half-integer
//! spins stay in exact integer arithmetic.

mod clebsch;
mod coherent;
mod harmonics;
mod wigner_d;

pub use clebsch::clebsch_gordan;
pub use coherent::{basis_overlap_sq, coherent_amplitude, coherent_state_vector};
pub use harmonics::{legendre_p, spherical_harmonic};
pub use wigner_d::wigner_small_d;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Half-integer spin quantum number, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpinJ {
    two_s: u32,
}

impl SpinJ {
    pub fn from_two_s(two_s: u32) -> Result<Self> {
        if two_s == 0 {
            return Err(Error::InvalidQuantumNumbers(
                "spin must satisfy 2s >= 1".into(),
            ));
        }
        Ok(Self { two_s })
    }

    pub fn two_s(&self) -> u32 {
        self.two_s
    }

    /// The spin quantum number s as a float.
    pub fn spin(&self) -> f64 {
        f64::from(self.two_s) / 2.0
    }

    /// Hilbert-space dimension 2s+1.
    pub fn dim(&self) -> usize {
        self.two_s as usize + 1
    }

    /// Number of constellation points N_s = (2s+1)^2.
    pub fn n_points(&self) -> usize {
        self.dim() * self.dim()
    }

    /// Projection quantum numbers 2m, descending from 2s to -2s.
    ///
    /// The k-th entry corresponds to the basis row a = s - m = k.
    pub fn two_m_values(&self) -> impl Iterator<Item = i32> + '_ {
        let two_s = self.two_s as i32;
        (0..=two_s).map(move |a| two_s - 2 * a)
    }

    /// Basis row index a = s - m of a projection quantum number.
    pub fn row_of(&self, two_m: i32) -> usize {
        ((self.two_s as i32 - two_m) / 2) as usize
    }
}

/// Unit vector on the two-sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    x: f64,
    y: f64,
    z: f64,
}

impl Direction {
    /// Builds a direction from components that must already be unit length
    /// up to input precision (1e-6 on the squared norm, generous enough for
    /// hand-written coordinates); the stored vector is renormalized exactly.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm_sq = x * x + y * y + z * z;
        if (norm_sq - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "direction ({x}, {y}, {z}) is not unit length (|n|^2 = {norm_sq})"
            )));
        }
        let norm = norm_sq.sqrt();
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Normalizes an arbitrary non-zero vector onto the sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if norm < 1e-300 {
            return Err(Error::InvalidInput("cannot normalize zero vector".into()));
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Polar angles: theta measured from +z, phi from +x in the x-y plane.
    pub fn from_polar(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    pub fn z_pole() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 1.0,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Direction) -> [f64; 3] {
        [
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        ]
    }

    pub fn theta(&self) -> f64 {
        self.z.clamp(-1.0, 1.0).acos()
    }

    pub fn phi(&self) -> f64 {
        if self.x == 0.0 && self.y == 0.0 {
            0.0
        } else {
            self.y.atan2(self.x)
        }
    }

    pub fn antipode(&self) -> Direction {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Stereographic image z = tan(theta/2) e^{i phi}; the north pole maps
    /// to 0 and the south pole to infinity.
    pub fn to_stereo(&self) -> StereoPoint {
        if self.z >= 0.0 {
            let denom = 1.0 + self.z;
            StereoPoint::new(Complex64::new(self.x / denom, self.y / denom))
        } else {
            // Equivalent form without cancellation in 1 + z near the south
            // pole: (x + iy)(1 - z) / (x^2 + y^2).
            let plane_sq = self.x * self.x + self.y * self.y;
            if plane_sq == 0.0 {
                return StereoPoint::new(Complex64::new(f64::INFINITY, 0.0));
            }
            let scale = (1.0 - self.z) / plane_sq;
            StereoPoint::new(Complex64::new(self.x * scale, self.y * scale))
        }
    }

    /// Applies a 3x3 rotation matrix and renormalizes.
    pub fn rotated(&self, r: &nalgebra::Matrix3<f64>) -> Direction {
        let v = r * nalgebra::Vector3::new(self.x, self.y, self.z);
        Direction::normalized(v.x, v.y, v.z).expect("rotation preserves norm")
    }

    pub fn as_vector(&self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.x, self.y, self.z)
    }
}

/// Stereographic image of a direction in the complex plane.
///
/// The convention z = tan(theta/2) e^{i phi} is forced by the requirement
/// that the coherent amplitude reduce to delta_{m,s} at z = 0. The south
/// pole corresponds to the limit |z| -> infinity and is represented by a
/// non-finite complex number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StereoPoint {
    z: Complex64,
}

impl StereoPoint {
    pub fn new(z: Complex64) -> Self {
        Self { z }
    }

    pub fn value(&self) -> Complex64 {
        self.z
    }

    pub fn is_finite(&self) -> bool {
        self.z.re.is_finite() && self.z.im.is_finite()
    }

    /// Inverse stereographic projection back onto the sphere.
    pub fn direction(&self) -> Direction {
        if !self.is_finite() {
            return Direction {
                x: 0.0,
                y: 0.0,
                z: -1.0,
            };
        }
        let t2 = self.z.norm_sqr();
        let denom = 1.0 + t2;
        Direction::normalized(
            2.0 * self.z.re / denom,
            2.0 * self.z.im / denom,
            (1.0 - t2) / denom,
        )
        .expect("inverse stereographic projection lands on the sphere")
    }
}
