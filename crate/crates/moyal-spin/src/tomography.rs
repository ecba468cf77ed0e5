//! State reconstruction from projection probabilities.
//!
//! The nu-th component of a density matrix's discrete Q-symbol is the
//! probability of measuring the maximal spin projection along n_nu, so the
//! N_s probabilities of an allowed constellation determine the state:
//! rho = (1/(2s+1)) sum_nu p_nu Q^nu. Reconstruction is linear; noisy
//! probabilities may therefore produce a non-positive operator, which is
//! reported rather than silently repaired. The error amplification obeys
//! ||delta rho|| <= (2s+1)^{-1} eps sum_nu ||Q^nu|| for probability noise
//! bounded by eps.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::discrete::{discrete_symbol, expand, KernelPair, Symbol, SymbolVariant};
use crate::error::{Error, Result};
use crate::opalg::Operator;

/// How far an operator is from being a density matrix.
#[derive(Clone, Copy, Debug)]
pub struct DensityDiagnostics {
    pub hermiticity_defect: f64,
    /// |tr rho - 1|.
    pub trace_defect: f64,
    /// Smallest eigenvalue of the hermitized operator.
    pub min_eigenvalue: f64,
    pub is_density: bool,
}

const DENSITY_TOL: f64 = 1e-9;

pub fn density_diagnostics(rho: &Operator) -> DensityDiagnostics {
    let hermiticity_defect = rho.hermiticity_defect();
    let trace_defect = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
    let hermitized = rho
        .add(&rho.adjoint())
        .expect("same dimensions")
        .scale(Complex64::new(0.5, 0.0));
    let eigen = SymmetricEigen::new(hermitized.matrix().clone());
    let min_eigenvalue = eigen
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    DensityDiagnostics {
        hermiticity_defect,
        trace_defect,
        min_eigenvalue,
        is_density: hermiticity_defect < DENSITY_TOL
            && trace_defect < DENSITY_TOL
            && min_eigenvalue > -DENSITY_TOL,
    }
}

/// Measurable probabilities p_nu = <n_nu| rho |n_nu>, i.e. the discrete
/// Q-symbol of the state. Non-density inputs are still evaluated; the
/// diagnostics tell the caller what was wrong.
pub fn probabilities(rho: &Operator, kp: &KernelPair) -> Result<(Symbol, DensityDiagnostics)> {
    let diag = density_diagnostics(rho);
    let symbol = discrete_symbol(rho, kp, SymbolVariant::Lower)?;
    Ok((symbol, diag))
}

/// Linear inversion: rho = (1/(2s+1)) sum_nu p_nu Q^nu. Exact probabilities
/// reproduce the state exactly (up to solve accuracy); the output trace is
/// sum_nu p_nu tr[Q^nu] / (2s+1), which equals one for exact inputs.
pub fn reconstruct(p: &Symbol, kp: &KernelPair) -> Result<Operator> {
    if p.variant() != SymbolVariant::Lower {
        return Err(Error::InvalidInput(
            "reconstruction expects the lower (probability) symbol".into(),
        ));
    }
    expand(p, kp)
}

/// Optional post-processing absent from the reconstruction itself: projects
/// onto the nearest density matrix by clipping negative eigenvalues and
/// renormalizing the trace.
pub fn project_to_density(rho: &Operator) -> Result<Operator> {
    let hermitized = rho.add(&rho.adjoint())?.scale(Complex64::new(0.5, 0.0));
    let eigen = SymmetricEigen::new(hermitized.matrix().clone());
    let clipped: Vec<f64> = eigen.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidInput(
            "operator has no positive spectral weight to renormalize".into(),
        ));
    }
    let d = rho.dim();
    let mut mat = nalgebra::DMatrix::<Complex64>::zeros(d, d);
    for (k, &value) in clipped.iter().enumerate() {
        let column = eigen.eigenvectors.column(k);
        let weight = value / total;
        for a in 0..d {
            for b in 0..d {
                mat[(a, b)] += column[a] * column[b].conj() * weight;
            }
        }
    }
    Operator::from_matrix(rho.s(), mat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::{coherent_state_vector, Direction, SpinJ};
    use crate::constellation::{random_constellation, Constellation};
    use crate::discrete::dual_kernel;
    use crate::opalg::spin_component;

    fn spin(two_s: u32) -> SpinJ {
        SpinJ::from_two_s(two_s).unwrap()
    }

    fn regular_tetrahedron() -> Constellation {
        let r = 1.0 / 3.0_f64.sqrt();
        Constellation::new(
            spin(1),
            vec![
                Direction::new(r, r, r).unwrap(),
                Direction::new(r, -r, -r).unwrap(),
                Direction::new(-r, r, -r).unwrap(),
                Direction::new(-r, -r, r).unwrap(),
            ],
        )
        .unwrap()
    }

    fn random_density(s: SpinJ, seed: u64) -> Operator {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw = Operator::from_fn(s, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let psd = raw.mul(&raw.adjoint()).unwrap();
        let trace = psd.trace().re;
        psd.scale(Complex64::new(1.0 / trace, 0.0))
    }

    #[test]
    fn maximally_mixed_probabilities() {
        let s = spin(2);
        let c = random_constellation(s, 3);
        let kp = dual_kernel(&c).unwrap();
        let rho = Operator::identity(s).scale(Complex64::new(1.0 / s.dim() as f64, 0.0));
        let (p, diag) = probabilities(&rho, &kp).unwrap();
        assert!(diag.is_density);
        for v in p.values() {
            assert!((v.re - 1.0 / s.dim() as f64).abs() < 1e-13);
        }
        let back = reconstruct(&p, &kp).unwrap();
        assert!(back.max_abs_diff(&rho) < 1e-10);
    }

    #[test]
    fn coherent_state_probabilities_follow_overlap_law() {
        let s = spin(3);
        let c = random_constellation(s, 9);
        let kp = dual_kernel(&c).unwrap();
        let n0 = Direction::from_polar(1.2, -0.6);
        let v = coherent_state_vector(s, n0.to_stereo());
        let rho = Operator::from_fn(s, |a, b| v[a] * v[b].conj());
        let (p, diag) = probabilities(&rho, &kp).unwrap();
        assert!(diag.is_density);
        for (value, point) in p.values().iter().zip(c.points()) {
            let expected = ((1.0 + n0.dot(point)) / 2.0).powi(s.two_s() as i32);
            assert!((value.re - expected).abs() < 1e-12);
            assert!(value.im.abs() < 1e-13);
        }
    }

    #[test]
    fn bloch_vector_probabilities_and_exact_recovery() {
        let s = spin(1);
        let c = regular_tetrahedron();
        let kp = dual_kernel(&c).unwrap();
        let r = [0.3, -0.5, 0.6];
        let axis = Direction::normalized(r[0], r[1], r[2]).unwrap();
        let r_norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        // rho = (I + r . sigma)/2.
        let rho = Operator::identity(s)
            .add(&spin_component(s, &axis).scale(Complex64::new(2.0 * r_norm, 0.0)))
            .unwrap()
            .scale(Complex64::new(0.5, 0.0));
        let (p, diag) = probabilities(&rho, &kp).unwrap();
        assert!(diag.is_density);
        for (value, point) in p.values().iter().zip(c.points()) {
            let dot = r[0] * point.x() + r[1] * point.y() + r[2] * point.z();
            assert!((value.re - 0.5 * (1.0 + dot)).abs() < 1e-13);
        }
        let back = reconstruct(&p, &kp).unwrap();
        assert!(back.max_abs_diff(&rho) < 1e-12);
        assert!((back.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_random_densities() {
        let s = spin(2);
        let c = random_constellation(s, 17);
        let kp = dual_kernel(&c).unwrap();
        for seed in 0..10u64 {
            let rho = random_density(s, seed);
            let (p, diag) = probabilities(&rho, &kp).unwrap();
            assert!(diag.is_density);
            assert!(p.is_real(1e-10));
            let back = reconstruct(&p, &kp).unwrap();
            assert!(back.max_abs_diff(&rho) < 1e-9, "seed {seed}");
            assert!((back.trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn reconstruction_is_linear() {
        let s = spin(1);
        let c = regular_tetrahedron();
        let kp = dual_kernel(&c).unwrap();
        let (pa, _) = probabilities(&random_density(s, 1), &kp).unwrap();
        let (pb, _) = probabilities(&random_density(s, 2), &kp).unwrap();
        let (alpha, beta) = (0.35, 0.65);
        let mixed: Vec<Complex64> = pa
            .values()
            .iter()
            .zip(pb.values())
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let mixed = Symbol::new(s, SymbolVariant::Lower, mixed).unwrap();
        let direct = reconstruct(&mixed, &kp).unwrap();
        let combined = reconstruct(&pa, &kp)
            .unwrap()
            .scale(Complex64::new(alpha, 0.0))
            .add(
                &reconstruct(&pb, &kp)
                    .unwrap()
                    .scale(Complex64::new(beta, 0.0)),
            )
            .unwrap();
        assert!(direct.max_abs_diff(&combined) < 1e-12);
    }

    #[test]
    fn noisy_probabilities_reported_not_projected() {
        use rand::{Rng, SeedableRng};
        let s = spin(1);
        let c = regular_tetrahedron();
        let kp = dual_kernel(&c).unwrap();
        // A pure state has eigenvalues {1, 0}; uniform noise on its
        // probabilities pushes one eigenvalue negative.
        let v = coherent_state_vector(s, Direction::z_pole().to_stereo());
        let rho = Operator::from_fn(s, |a, b| v[a] * v[b].conj());
        let (p, _) = probabilities(&rho, &kp).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let eps = 0.02;
        let noisy: Vec<Complex64> = p
            .values()
            .iter()
            .map(|v| v + Complex64::new(rng.random_range(-eps..eps), 0.0))
            .collect();
        let noisy = Symbol::new(s, SymbolVariant::Lower, noisy).unwrap();
        let estimate = reconstruct(&noisy, &kp).unwrap();
        let diag = density_diagnostics(&estimate);
        assert!(
            diag.min_eigenvalue < 0.0,
            "noise should expose negativity, got {diag:?}"
        );

        // Amplification bound: ||delta rho|| <= eps/(2s+1) sum_nu ||Q^nu||.
        let bound = eps / 2.0
            * kp.dual_ops()
                .iter()
                .map(|q| q.max_abs() * 2.0) // entrywise max bounds the 2-norm of a 2x2
                .sum::<f64>();
        assert!(estimate.max_abs_diff(&rho) <= bound);

        let projected = project_to_density(&estimate).unwrap();
        let pd = density_diagnostics(&projected);
        assert!(pd.is_density);
        assert!((projected.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_density_inputs_still_evaluated() {
        let s = spin(1);
        let c = regular_tetrahedron();
        let kp = dual_kernel(&c).unwrap();
        let not_density =
            Operator::from_fn(s, |a, b| Complex64::new(a as f64 + 1.0, b as f64 - 0.5));
        let (p, diag) = probabilities(&not_density, &kp).unwrap();
        assert!(!diag.is_density);
        assert_eq!(p.values().len(), 4);
    }

    #[test]
    fn upper_symbol_rejected_by_reconstruct() {
        let s = spin(1);
        let c = regular_tetrahedron();
        let kp = dual_kernel(&c).unwrap();
        let sym = Symbol::from_real(s, SymbolVariant::Upper, &[1.0; 4]).unwrap();
        assert!(reconstruct(&sym, &kp).is_err());
    }
}
