//! Product Gauss-Legendre x uniform-azimuth quadrature on the unit sphere.
//!
//! Every integrand appearing in the continuous Stratonovich-Weyl postulates
//! is a polynomial of degree at most 4s in the direction components, so a
//! product rule of matching degree integrates them exactly (up to rounding).

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::angular::Direction;
use crate::opalg::Operator;

/// Gauss-Legendre nodes and weights on (-1, 1), exact through degree 2n-1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P'_n by recurrence.
            let mut p_prev = 1.0;
            let mut p_curr = x;
            for k in 1..n {
                let k = k as f64;
                let p_next = ((2.0 * k + 1.0) * x * p_curr - k * p_prev) / (k + 1.0);
                p_prev = p_curr;
                p_curr = p_next;
            }
            dp = (n as f64) * (x * p_curr - p_prev) / (x * x - 1.0);
            let dx = p_curr / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Quadrature rule over S^2 whose weights sum to 4 pi.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    nodes: Vec<(Direction, f64)>,
    degree: u32,
}

impl SphereQuadrature {
    /// Rule exact for spherical polynomials up to `max_degree`.
    pub fn new(max_degree: u32) -> Self {
        let n_theta = (max_degree as usize + 2) / 2 + 1;
        let n_phi = max_degree as usize + 2;
        let (ct, wt) = gauss_legendre(n_theta);
        let phi_w = TAU / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for (z, w) in ct.iter().zip(wt.iter()) {
            let st = (1.0 - z * z).max(0.0).sqrt();
            for k in 0..n_phi {
                let phi = phi_w * k as f64;
                let n = Direction::normalized(st * phi.cos(), st * phi.sin(), *z)
                    .expect("quadrature node on sphere");
                nodes.push((n, w * phi_w));
            }
        }
        Self {
            nodes,
            degree: max_degree,
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn nodes(&self) -> &[(Direction, f64)] {
        &self.nodes
    }

    pub fn integrate(&self, f: impl Fn(&Direction) -> f64) -> f64 {
        self.nodes.iter().map(|(n, w)| w * f(n)).sum()
    }

    pub fn integrate_complex(&self, f: impl Fn(&Direction) -> Complex64) -> Complex64 {
        self.nodes
            .iter()
            .map(|(n, w)| f(n) * Complex64::new(*w, 0.0))
            .sum()
    }

    pub fn integrate_operator(
        &self,
        s: crate::angular::SpinJ,
        f: impl Fn(&Direction) -> Operator,
    ) -> Operator {
        let mut acc = Operator::zeros(s);
        for (n, w) in &self.nodes {
            acc = acc
                .add(&f(n).scale(Complex64::new(*w, 0.0)))
                .expect("uniform dimensions");
        }
        acc
    }
}
