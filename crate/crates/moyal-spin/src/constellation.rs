//! Constellations: ordered sets of N_s = (2s+1)^2 directions on the sphere.
//!
//! Generators for the four families studied here (random, nested cones, free
//! cones, spirals), the spherical-harmonic matrix y and diagonal d entering
//! the Gram factorization G = g^dagger g with g = d y, and the validity test
//! deciding whether a constellation spans the operator space.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::angular::{spherical_harmonic, Direction, SpinJ, StereoPoint};
use crate::error::{Error, Result};
use crate::opalg::{condition_estimate, singularity_threshold};

/// Scale-free degeneracy threshold: |det y| divided by the product of row
/// norms (a Hadamard-style ratio independent of N_s) below this value marks
/// the constellation as forbidden.
pub const DET_Y_REL_THRESHOLD: f64 = 1e-10;

/// Ordered list of N_s directions tagged with their spin.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    s: SpinJ,
    points: Vec<Direction>,
}

impl Constellation {
    pub fn new(s: SpinJ, points: Vec<Direction>) -> Result<Self> {
        if points.len() != s.n_points() {
            return Err(Error::DimensionMismatch {
                expected: s.n_points(),
                got: points.len(),
            });
        }
        Ok(Self { s, points })
    }

    pub fn s(&self) -> SpinJ {
        self.s
    }

    pub fn points(&self) -> &[Direction] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies one global rotation to every point.
    pub fn rotated(&self, r: &nalgebra::Matrix3<f64>) -> Constellation {
        Self {
            s: self.s,
            points: self.points.iter().map(|p| p.rotated(r)).collect(),
        }
    }

    /// Stereographic images of all points, in constellation order.
    pub fn stereo_points(&self) -> Vec<StereoPoint> {
        self.points.iter().map(|p| p.to_stereo()).collect()
    }

    /// CSV export of the polar angles, rows `theta,phi` in radians and
    /// constellation order.
    pub fn to_polar_csv(&self) -> String {
        let mut out = String::from("theta,phi\n");
        for p in &self.points {
            out.push_str(&format!("{:.17e},{:.17e}\n", p.theta(), p.phi()));
        }
        out
    }

    pub fn to_json(&self) -> ConstellationJson {
        ConstellationJson {
            tool_version: None,
            two_s: self.s.two_s(),
            points: self.points.iter().map(|p| [p.x(), p.y(), p.z()]).collect(),
        }
    }

    pub fn from_json(json: &ConstellationJson) -> Result<Self> {
        let s = SpinJ::from_two_s(json.two_s)?;
        let points = json
            .points
            .iter()
            .map(|[x, y, z]| Direction::new(*x, *y, *z))
            .collect::<Result<Vec<_>>>()?;
        Self::new(s, points)
    }
}

/// JSON wire format: {"two_s": int, "points": [[x, y, z], ...]} in
/// constellation order. `tool_version` is optional CLI provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstellationJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_version: Option<String>,
    pub two_s: u32,
    pub points: Vec<[f64; 3]>,
}

/// N_s directions drawn uniformly on the sphere from a seeded ChaCha8
/// stream; one (phi, cos theta) pair is consumed per point in order, so a
/// fixed seed reproduces the same constellation on every platform.
pub fn random_constellation(s: SpinJ, seed: u64) -> Constellation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..s.n_points())
        .map(|_| {
            let phi: f64 = rng.random_range(0.0..TAU);
            let z: f64 = rng.random_range(-1.0..1.0);
            let st = (1.0 - z * z).sqrt();
            Direction::normalized(st * phi.cos(), st * phi.sin(), z)
                .expect("nonzero by construction")
        })
        .collect();
    Constellation { s, points }
}

/// 2s+1 nested cones about the z axis with the given opening angles; each
/// cone carries 2s+1 points equispaced in azimuth and shifted by its
/// meridian offset. Half-integer spins need offsets placing the cones on
/// different meridians; they are exposed as parameters rather than fixed.
pub fn nested_cones(
    s: SpinJ,
    opening_angles: &[f64],
    meridian_offsets: &[f64],
) -> Result<Constellation> {
    let n_cones = s.dim();
    if opening_angles.len() != n_cones || meridian_offsets.len() != n_cones {
        return Err(Error::DimensionMismatch {
            expected: n_cones,
            got: opening_angles.len().min(meridian_offsets.len()),
        });
    }
    for (i, &theta) in opening_angles.iter().enumerate() {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::InvalidInput(format!(
                "opening angle {theta} outside (0, pi)"
            )));
        }
        for &other in &opening_angles[..i] {
            if (theta - other).abs() < 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "duplicate opening angle {theta}"
                )));
            }
        }
    }
    let mut points = Vec::with_capacity(s.n_points());
    for (&theta, &offset) in opening_angles.iter().zip(meridian_offsets) {
        for j in 0..n_cones {
            let phi = offset + TAU * j as f64 / n_cones as f64;
            points.push(Direction::from_polar(theta, phi));
        }
    }
    Constellation::new(s, points)
}

/// One cone of a free-cones constellation.
#[derive(Clone, Copy, Debug)]
pub struct ConeSpec {
    pub axis: Direction,
    pub opening_angle: f64,
    pub count: usize,
    pub meridian_offset: f64,
}

/// Cones with arbitrary axes and per-cone point counts; counts must add up
/// to N_s. Points are equispaced around each cone about its own axis.
pub fn free_cones(s: SpinJ, specs: &[ConeSpec]) -> Result<Constellation> {
    let total: usize = specs.iter().map(|c| c.count).sum();
    if total != s.n_points() {
        return Err(Error::InvalidInput(format!(
            "cone counts sum to {total}, expected {}",
            s.n_points()
        )));
    }
    let mut points = Vec::with_capacity(total);
    for spec in specs {
        if !(spec.opening_angle >= 0.0 && spec.opening_angle <= PI) {
            return Err(Error::InvalidInput(format!(
                "opening angle {} outside [0, pi]",
                spec.opening_angle
            )));
        }
        // Orthonormal frame (e1, e2, axis).
        let a = spec.axis.as_vector();
        let helper = if a.z.abs() < 0.9 {
            nalgebra::Vector3::new(0.0, 0.0, 1.0)
        } else {
            nalgebra::Vector3::new(1.0, 0.0, 0.0)
        };
        let e1 = a.cross(&helper).normalize();
        let e2 = a.cross(&e1);
        let (st, ct) = spec.opening_angle.sin_cos();
        for j in 0..spec.count {
            let phi = spec.meridian_offset + TAU * j as f64 / spec.count as f64;
            let v = ct * a + st * (phi.cos() * e1 + phi.sin() * e2);
            points.push(Direction::normalized(v.x, v.y, v.z).expect("unit by construction"));
        }
    }
    Constellation::new(s, points)
}

/// Spiral constellation: stereographic images z_nu = z0^{nu-1}. The seed
/// must be neither of modulus one nor purely real, otherwise the factorized
/// kernel matrix acquires coincident Vandermonde nodes.
pub fn spiral(s: SpinJ, z0: Complex64) -> Result<Constellation> {
    if (z0.norm() - 1.0).abs() < 1e-9 {
        return Err(Error::InvalidInput(format!(
            "|z0| = {} too close to 1",
            z0.norm()
        )));
    }
    if z0.im == 0.0 {
        return Err(Error::InvalidInput("z0 must not be purely real".into()));
    }
    let mut points = Vec::with_capacity(s.n_points());
    let mut z = Complex64::new(1.0, 0.0);
    for _ in 0..s.n_points() {
        points.push(StereoPoint::new(z).direction());
        z *= z0;
    }
    Constellation::new(s, points)
}

/// Vandermonde nodes w = z0^a conj(z0)^b of a spiral's factorized kernel
/// matrix, in the column order of `discrete::q_matrix_factorization`.
pub fn spiral_nodes(s: SpinJ, z0: Complex64) -> Vec<Complex64> {
    let d = s.dim();
    let mut nodes = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            nodes.push(z0.powu(a as u32) * z0.conj().powu(b as u32));
        }
    }
    nodes
}

/// Matrix of the N_s lowest spherical harmonics evaluated at the points:
/// row (l, m) in the order (0,0), (1,-1), (1,0), (1,1), ..., (2s, 2s);
/// column nu contains Y_lm(n_nu).
pub fn y_matrix(c: &Constellation) -> DMatrix<Complex64> {
    let n = c.len();
    let mut mat = DMatrix::zeros(n, n);
    let mut row = 0;
    for l in 0..=c.s().two_s() {
        for m in -(l as i32)..=(l as i32) {
            for (col, p) in c.points().iter().enumerate() {
                mat[(row, col)] = spherical_harmonic(l, m, p).expect("|m| <= l by construction");
            }
            row += 1;
        }
    }
    mat
}

/// Diagonal factor of g = d y:
/// d_(l) = 2 sqrt(pi) (2s)! / sqrt((2s+1+l)! (2s-l)!), repeated 2l+1 times
/// in the row order of `y_matrix`.
pub fn d_diagonal(s: SpinJ) -> Vec<f64> {
    let two_s = s.two_s();
    let ln_fact = |n: u32| -> f64 { (2..=n).map(|k| f64::from(k).ln()).sum() };
    let mut diag = Vec::with_capacity(s.n_points());
    for l in 0..=two_s {
        let ln_value = 0.5 * PI.ln() + (2.0f64).ln() + ln_fact(two_s)
            - 0.5 * (ln_fact(two_s + 1 + l) + ln_fact(two_s - l));
        let value = ln_value.exp();
        for _ in 0..(2 * l + 1) {
            diag.push(value);
        }
    }
    diag
}

/// Outcome of the degeneracy test on a constellation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ValidityReport {
    /// |det y|.
    pub det_y: f64,
    /// |det y| divided by the product of the row norms of y.
    pub det_y_rel: f64,
    /// 2-norm condition estimate of the Gram matrix.
    pub gram_condition: f64,
    pub allowed: bool,
}

/// Tests whether the coherent projectors attached to the constellation are
/// linearly independent. Rotation-invariant: both |det y| and the Gram
/// matrix depend only on the relative geometry of the points.
pub fn validate(c: &Constellation) -> ValidityReport {
    let y = y_matrix(c);
    let det_y = y.clone().lu().determinant().norm();
    let row_norm_product: f64 = (0..y.nrows())
        .map(|r| y.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .product();
    let det_y_rel = if row_norm_product > 0.0 {
        det_y / row_norm_product
    } else {
        0.0
    };
    let gram = crate::discrete::gram(c);
    let gram_condition = condition_estimate(&gram);
    let allowed = det_y_rel > DET_Y_REL_THRESHOLD && gram_condition < singularity_threshold();
    ValidityReport {
        det_y,
        det_y_rel,
        gram_condition,
        allowed,
    }
}
