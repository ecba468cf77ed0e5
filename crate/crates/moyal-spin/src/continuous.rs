//! Continuous Stratonovich-Weyl machinery.
//!
//! Self-dual Wigner kernels, dual (Berezin) kernel pairs, the reproducing
//! kernel, continuous symbols and the continuous star-product kernel. Kernel
//! operators are diagonal in the basis attached to their direction; the basis
//! itself is built by rotating the n_z eigenbasis with Euler angles
//! (phi, theta, 0). The third Euler angle is a gauge: it changes the phases
//! of |m, n> but never the kernel.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::angular::{clebsch_gordan, legendre_p, Direction, SpinJ};
use crate::error::{Error, Result};
use crate::opalg::{rotation_operator, trace_product, EulerAngles, Operator};

/// Sign choices epsilon_l = +-1 labelling the 2^{2s} self-dual kernels;
/// epsilon_0 = +1 is forced by standardization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsilonSigns {
    eps: Vec<i8>,
}

impl EpsilonSigns {
    pub fn new(s: SpinJ, eps: Vec<i8>) -> Result<Self> {
        if eps.len() != s.dim() {
            return Err(Error::DimensionMismatch {
                expected: s.dim(),
                got: eps.len(),
            });
        }
        if eps[0] != 1 {
            return Err(Error::InvalidInput(
                "standardization requires epsilon_0 = +1".into(),
            ));
        }
        if eps.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::InvalidInput("epsilon entries must be +-1".into()));
        }
        Ok(Self { eps })
    }

    /// The contraction-friendly choice epsilon_l = +1 for all l.
    pub fn all_plus(s: SpinJ) -> Self {
        Self {
            eps: vec![1; s.dim()],
        }
    }

    pub fn get(&self, l: u32) -> f64 {
        f64::from(self.eps[l as usize])
    }
}

/// Non-zero weights gamma_l parameterizing dual kernel pairs; gamma_0 = +1
/// by standardization. gamma_l = +-1 recovers the self-dual kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaWeights {
    gamma: Vec<f64>,
}

impl GammaWeights {
    pub fn new(s: SpinJ, gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() != s.dim() {
            return Err(Error::DimensionMismatch {
                expected: s.dim(),
                got: gamma.len(),
            });
        }
        if gamma[0] != 1.0 {
            return Err(Error::InvalidInput(
                "standardization requires gamma_0 = +1".into(),
            ));
        }
        if gamma.iter().any(|g| *g == 0.0 || !g.is_finite()) {
            return Err(Error::InvalidInput("gamma entries must be non-zero".into()));
        }
        Ok(Self { gamma })
    }

    /// gamma_l = C(s l s; s 0 s): the choice whose lower kernel is the
    /// coherent-state projector, producing the P/Q symbol pair.
    pub fn pq_choice(s: SpinJ) -> Self {
        let two_s = s.two_s();
        let gamma = (0..=two_s)
            .map(|l| {
                clebsch_gordan(two_s, two_s as i32, 2 * l, 0, two_s, two_s as i32)
                    .expect("valid quantum numbers")
            })
            .collect();
        Self { gamma }
    }

    pub fn signs(s: SpinJ, eps: &EpsilonSigns) -> Self {
        Self {
            gamma: (0..s.dim()).map(|l| f64::from(eps.eps[l])).collect(),
        }
    }

    pub fn get(&self, l: u32) -> f64 {
        self.gamma[l as usize]
    }
}

/// Diagonal weights of a kernel pair in the rotated eigenbasis, stored in
/// basis-row order a = s - m. Self-dual kernels have equal sides.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelCoefficients {
    s: SpinJ,
    delta_lower: Vec<f64>,
    delta_upper: Vec<f64>,
}

/// Which member of a dual kernel pair to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelSide {
    Lower,
    Upper,
}

impl KernelCoefficients {
    pub fn s(&self) -> SpinJ {
        self.s
    }

    pub fn side(&self, side: KernelSide) -> &[f64] {
        match side {
            KernelSide::Lower => &self.delta_lower,
            KernelSide::Upper => &self.delta_upper,
        }
    }

    pub fn is_self_dual(&self, tol: f64) -> bool {
        self.delta_lower
            .iter()
            .zip(self.delta_upper.iter())
            .all(|(a, b)| (a - b).abs() < tol)
    }

    /// Duality invariant: the two l-projections must multiply to one for
    /// every l <= 2s.
    pub fn duality_defect(&self) -> f64 {
        let two_s = self.s.two_s();
        let mut worst: f64 = 0.0;
        for l in 0..=two_s {
            let mut lower = 0.0;
            let mut upper = 0.0;
            for (a, two_m) in self.s.two_m_values().enumerate() {
                let c = clebsch_gordan(two_s, two_m, 2 * l, 0, two_s, two_m)
                    .expect("valid quantum numbers");
                lower += self.delta_lower[a] * c;
                upper += self.delta_upper[a] * c;
            }
            worst = worst.max((lower * upper - 1.0).abs());
        }
        worst
    }
}

/// Coefficients of the self-dual kernel:
/// Delta(m) = sum_l eps_l (2l+1)/(2s+1) C(s l s; m 0 m).
pub fn selfdual_coeffs(s: SpinJ, eps: &EpsilonSigns) -> KernelCoefficients {
    let two_s = s.two_s();
    let delta: Vec<f64> = s
        .two_m_values()
        .map(|two_m| {
            (0..=two_s)
                .map(|l| {
                    eps.get(l) * f64::from(2 * l + 1) / f64::from(two_s + 1)
                        * clebsch_gordan(two_s, two_m, 2 * l, 0, two_s, two_m)
                            .expect("valid quantum numbers")
                })
                .sum()
        })
        .collect();
    KernelCoefficients {
        s,
        delta_lower: delta.clone(),
        delta_upper: delta,
    }
}

/// Coefficients of a dual kernel pair:
/// Delta_m uses gamma_l, Delta^m uses 1/gamma_l.
pub fn dual_coeffs(s: SpinJ, gamma: &GammaWeights) -> KernelCoefficients {
    let two_s = s.two_s();
    let project = |weight: &dyn Fn(u32) -> f64| -> Vec<f64> {
        s.two_m_values()
            .map(|two_m| {
                (0..=two_s)
                    .map(|l| {
                        weight(l) * f64::from(2 * l + 1) / f64::from(two_s + 1)
                            * clebsch_gordan(two_s, two_m, 2 * l, 0, two_s, two_m)
                                .expect("valid quantum numbers")
                    })
                    .sum()
            })
            .collect()
    };
    KernelCoefficients {
        s,
        delta_lower: project(&|l| gamma.get(l)),
        delta_upper: project(&|l| 1.0 / gamma.get(l)),
    }
}

/// Kernel operator at a direction: Delta(n) = sum_m Delta_m |m,n><m,n|.
pub fn kernel_at(n: &Direction, coeffs: &KernelCoefficients, side: KernelSide) -> Operator {
    let s = coeffs.s;
    let u = rotation_operator(s, EulerAngles::taking_z_to(n));
    let weights = coeffs.side(side);
    let d = s.dim();
    let mut mat = nalgebra::DMatrix::<Complex64>::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &w) in weights.iter().enumerate() {
                acc += u.entry(a, k) * w * u.entry(b, k).conj();
            }
            mat[(a, b)] = acc;
        }
    }
    Operator::from_matrix(s, mat).expect("dimensions agree by construction")
}

/// Band-limited delta function on the sphere:
/// delta_s(a, b) = sum_{l=0}^{2s} (2l+1)/(4 pi) P_l(a . b).
pub fn reproducing_kernel(s: SpinJ, a: &Direction, b: &Direction) -> f64 {
    let x = a.dot(b).clamp(-1.0, 1.0);
    (0..=s.two_s())
        .map(|l| f64::from(2 * l + 1) / (4.0 * PI) * legendre_p(l, x).expect("x in [-1,1]"))
        .sum()
}

/// Continuous symbol tr[A Delta_n] (lower side) or tr[A Delta^n] (upper).
pub fn continuous_symbol(
    a: &Operator,
    n: &Direction,
    coeffs: &KernelCoefficients,
    side: KernelSide,
) -> Result<Complex64> {
    if a.s() != coeffs.s {
        return Err(Error::DimensionMismatch {
            expected: coeffs.s.dim(),
            got: a.dim(),
        });
    }
    trace_product(a, &kernel_at(n, coeffs, side))
}

/// Trilinear kernel of the continuous star product,
/// L(n, m, k) = ((2s+1)/(4 pi))^2 tr[Delta(n) Delta(m) Delta(k)].
pub fn continuous_star_kernel(
    n: &Direction,
    m: &Direction,
    k: &Direction,
    coeffs: &KernelCoefficients,
) -> Result<Complex64> {
    if !coeffs.is_self_dual(1e-12) {
        return Err(Error::InvalidInput(
            "continuous_star_kernel needs a self-dual kernel".into(),
        ));
    }
    let s = coeffs.s;
    let kn = kernel_at(n, coeffs, KernelSide::Lower);
    let km = kernel_at(m, coeffs, KernelSide::Lower);
    let kk = kernel_at(k, coeffs, KernelSide::Lower);
    let factor = (f64::from(s.two_s() + 1) / (4.0 * PI)).powi(2);
    Ok(trace_product(&kn.mul(&km)?, &kk)? * factor)
}
