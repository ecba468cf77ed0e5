//! Closed-form spin-1/2 machinery.
//!
//! For four points on the sphere the dual kernel has an explicit geometric
//! construction through the f-vectors, the intersections of tangent planes
//! at the reflected points. Everything here doubles as an independent
//! oracle for the general-s inversion paths in `discrete`; the public
//! dual-kernel API stays in `discrete` for uniformity.

use nalgebra::{Matrix4, Vector3};
use num_complex::Complex64;

use crate::angular::SpinJ;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::opalg::{Operator, RealMatrix};

/// The four (non-unit) vectors solving f^mu . n_nu = -1 for mu != nu.
#[derive(Clone, Copy, Debug)]
pub struct FVectors {
    pub f: [Vector3<f64>; 4],
}

fn require_spin_half(c: &Constellation) -> Result<()> {
    if c.s().two_s() != 1 {
        return Err(Error::InvalidInput(format!(
            "spin-1/2 closed forms need 2s = 1, got 2s = {}",
            c.s().two_s()
        )));
    }
    Ok(())
}

/// Mean chord length between the four points; used to keep the degeneracy
/// threshold scale-aware.
fn mean_chord(c: &Constellation) -> f64 {
    let pts = c.points();
    let mut total = 0.0;
    let mut count = 0.0;
    for i in 0..4 {
        for j in 0..i {
            let d = pts[i].as_vector() - pts[j].as_vector();
            total += d.norm();
            count += 1.0;
        }
    }
    total / count
}

/// f^1 points to the intersection of the planes tangent to the sphere at
/// -n_2, -n_3, -n_4; the rest follow by cyclic permutation. Defining
/// property: f^mu . n_nu = -1 whenever mu != nu. The overall sign is fixed
/// by that property (the tangent planes are x . n_nu = -1).
pub fn f_vectors(c: &Constellation) -> Result<FVectors> {
    require_spin_half(c)?;
    let n: Vec<Vector3<f64>> = c.points().iter().map(|p| p.as_vector()).collect();
    let chord = mean_chord(c);
    let mut f = [Vector3::zeros(); 4];
    for (mu, slot) in f.iter_mut().enumerate() {
        // Cyclic triple (a, b, c) of the indices other than mu.
        let (a, b, cc) = ((mu + 1) % 4, (mu + 2) % 4, (mu + 3) % 4);
        let triple = n[a].cross(&n[b]).dot(&n[cc]);
        if triple.abs() < 1e-12 * chord.powi(3) {
            return Err(Error::DegenerateConstellation(format!(
                "triple product of points {a}, {b}, {cc} vanishes"
            )));
        }
        *slot = -(n[a].cross(&n[b]) + n[b].cross(&n[cc]) + n[cc].cross(&n[a])) / triple;
    }
    Ok(FVectors { f })
}

/// Closed-form inverse Gram matrix:
/// G^{mu nu} = 2 (1 + f^mu . f^nu) / [(1 + n_mu . f^mu)(1 + n_nu . f^nu)].
pub fn gram_inverse_closed(c: &Constellation) -> Result<RealMatrix> {
    let fv = f_vectors(c)?;
    let n: Vec<Vector3<f64>> = c.points().iter().map(|p| p.as_vector()).collect();
    let d: Vec<f64> = (0..4).map(|k| 1.0 + fv.f[k].dot(&n[k])).collect();
    Ok(RealMatrix::from_fn(4, 4, |mu, nu| {
        2.0 * (1.0 + fv.f[mu].dot(&fv.f[nu])) / (d[mu] * d[nu])
    }))
}

fn pauli_form(scalar: f64, v: &Vector3<f64>) -> Operator {
    // scalar * I + v . sigma
    let s = SpinJ::from_two_s(1).expect("2s = 1 is valid");
    let mut op = Operator::zeros(s);
    op.set_entry(0, 0, Complex64::new(scalar + v.z, 0.0));
    op.set_entry(0, 1, Complex64::new(v.x, -v.y));
    op.set_entry(1, 0, Complex64::new(v.x, v.y));
    op.set_entry(1, 1, Complex64::new(scalar - v.z, 0.0));
    op
}

/// Closed-form dual kernel:
/// Q^nu = 2 (I + f^nu . sigma) / (1 + f^nu . n_nu).
pub fn dual_kernel_closed(c: &Constellation) -> Result<Vec<Operator>> {
    let fv = f_vectors(c)?;
    let n: Vec<Vector3<f64>> = c.points().iter().map(|p| p.as_vector()).collect();
    Ok((0..4)
        .map(|nu| {
            let denom = 1.0 + fv.f[nu].dot(&n[nu]);
            pauli_form(1.0, &fv.f[nu]).scale(Complex64::new(2.0 / denom, 0.0))
        })
        .collect())
}

/// Dual spin symbols s^nu = 2 f^nu / (1 + f^nu . n_nu).
pub fn spin_symbols_closed(c: &Constellation) -> Result<[Vector3<f64>; 4]> {
    let fv = f_vectors(c)?;
    let n: Vec<Vector3<f64>> = c.points().iter().map(|p| p.as_vector()).collect();
    let mut out = [Vector3::zeros(); 4];
    for nu in 0..4 {
        out[nu] = 2.0 * fv.f[nu] / (1.0 + fv.f[nu].dot(&n[nu]));
    }
    Ok(out)
}

/// Outcome of the concyclicity test.
#[derive(Clone, Copy, Debug)]
pub struct DegeneracyReport {
    /// Volume of the tetrahedron spanned by the four points.
    pub tetra_volume: f64,
    /// Volume threshold below which the points count as concyclic.
    pub threshold: f64,
    /// True when the constellation is forbidden.
    pub forbidden: bool,
}

/// Volume of the tetrahedron with the constellation points as vertices,
/// |det g| / 6 for the 4x4 matrix g of ones and components.
pub fn tetrahedron_volume(c: &Constellation) -> Result<f64> {
    require_spin_half(c)?;
    let n = c.points();
    let g = Matrix4::from_fn(|row, col| match row {
        0 => 1.0,
        1 => n[col].x(),
        2 => n[col].y(),
        3 => n[col].z(),
        _ => unreachable!(),
    });
    Ok(g.determinant().abs() / 6.0)
}

/// A spin-1/2 constellation is forbidden exactly when its four points lie
/// on one circle, i.e. the tetrahedron they span is flat. The threshold is
/// scale-aware: V < 1e-10 (mean chord)^3.
pub fn degeneracy_test(c: &Constellation) -> Result<DegeneracyReport> {
    let volume = tetrahedron_volume(c)?;
    let threshold = 1e-10 * mean_chord(c).powi(3);
    Ok(DegeneracyReport {
        tetra_volume: volume,
        threshold,
        forbidden: volume < threshold,
    })
}
