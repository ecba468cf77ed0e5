//! Discrete kernels and symbols on point constellations.
//!
//! The kernel consists of the N_s coherent projectors Q_nu attached to a
//! constellation; its dual Q^nu follows from the trace pairing
//! tr[Q_nu Q^mu] = (2s+1) delta. Three inversion routes are provided: a
//! pivoted solve on the Gram matrix (the canonical path, most robust), the
//! D1 N D2 factorization of the kernel matrix in the stereographic chart,
//! and the closed-form Vandermonde inverse available on spiral
//! constellations. The alternates exist to cross-check the solve, not to
//! replace it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::angular::{coherent_state_vector, Direction, SpinJ};
use crate::constellation::{spiral, spiral_nodes, Constellation};
use crate::error::{Error, Result};
use crate::opalg::{
    condition_estimate, rotation_operator, singularity_threshold, trace_product, EulerAngles,
    Operator, RealMatrix,
};

/// Largest stereographic modulus the factorization chart accepts before
/// demanding a pre-rotation.
pub const CHART_MAX_ABS_Z: f64 = 1e6;

/// Kernel family of a constellation: coherent projectors, their duals, and
/// the Gram matrix acting as the metric between them.
#[derive(Clone, Debug)]
pub struct KernelPair {
    s: SpinJ,
    constellation: Constellation,
    q_ops: Vec<Operator>,
    dual_ops: Vec<Operator>,
    gram: RealMatrix,
    gram_inv: RealMatrix,
    gram_condition: f64,
}

impl KernelPair {
    pub fn s(&self) -> SpinJ {
        self.s
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn q_ops(&self) -> &[Operator] {
        &self.q_ops
    }

    pub fn dual_ops(&self) -> &[Operator] {
        &self.dual_ops
    }

    pub fn gram(&self) -> &RealMatrix {
        &self.gram
    }

    pub fn gram_inv(&self) -> &RealMatrix {
        &self.gram_inv
    }

    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }

    /// max |tr[Q_nu Q^mu]/(2s+1) - delta_nu^mu|.
    pub fn duality_defect(&self) -> f64 {
        let n = self.q_ops.len();
        let scale = f64::from(self.s.two_s() + 1);
        let mut worst: f64 = 0.0;
        for nu in 0..n {
            for mu in 0..n {
                let t =
                    trace_product(&self.q_ops[nu], &self.dual_ops[mu]).expect("uniform dimensions");
                let expected = if nu == mu { 1.0 } else { 0.0 };
                worst = worst.max((t / scale - expected).norm());
            }
        }
        worst
    }

    /// max-entry deviation of sum_nu Q^nu / (2s+1) from the identity. The
    /// sum is compensated so the defect reflects the stored operators, not
    /// summation noise.
    pub fn standardization_defect(&self) -> f64 {
        let d = self.s.dim();
        let scale = f64::from(self.s.two_s() + 1);
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                let mut acc = CompensatedSum::default();
                for op in &self.dual_ops {
                    acc.add(op.entry(a, b));
                }
                let expected = if a == b { scale } else { 0.0 };
                worst = worst.max((acc.value() - expected).norm() / scale);
            }
        }
        worst
    }
}

/// Coherent projectors Q_nu = |n_nu><n_nu| in the |m, n_z> basis.
pub fn q_projectors(c: &Constellation) -> Vec<Operator> {
    let s = c.s();
    c.points()
        .iter()
        .map(|p| {
            let v = coherent_state_vector(s, p.to_stereo());
            Operator::from_fn(s, |a, b| v[a] * v[b].conj())
        })
        .collect()
}

/// Gram matrix G_{nu nu'} = |<n_nu|n_nu'>|^2 = ((1 + n_nu . n_nu')/2)^{2s}.
pub fn gram(c: &Constellation) -> RealMatrix {
    let n = c.len();
    let two_s = c.s().two_s() as i32;
    RealMatrix::from_fn(n, n, |i, j| {
        ((1.0 + c.points()[i].dot(&c.points()[j])) / 2.0).powi(two_s)
    })
}

/// Neumaier-compensated accumulator for complex sums with heavy
/// cancellation (dual-kernel entries are O(kappa) while their sums are
/// O(1), so a plain sum loses log10(kappa) digits).
#[derive(Clone, Copy, Default)]
struct CompensatedSum {
    sum_re: f64,
    sum_im: f64,
    err_re: f64,
    err_im: f64,
}

impl CompensatedSum {
    fn add(&mut self, value: Complex64) {
        fn neumaier(sum: &mut f64, err: &mut f64, v: f64) {
            let t = *sum + v;
            if sum.abs() >= v.abs() {
                *err += (*sum - t) + v;
            } else {
                *err += (v - t) + *sum;
            }
            *sum = t;
        }
        neumaier(&mut self.sum_re, &mut self.err_re, value.re);
        neumaier(&mut self.sum_im, &mut self.err_im, value.im);
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.sum_re + self.err_re, self.sum_im + self.err_im)
    }
}

/// Residual I - G X with compensated dot products: the product terms and
/// their FMA rounding errors are accumulated separately, so the residual
/// itself is accurate to well below machine epsilon times the entry scale.
fn compensated_residual(g: &RealMatrix, x: &RealMatrix) -> RealMatrix {
    let n = g.nrows();
    RealMatrix::from_fn(n, n, |i, j| {
        let mut sum = if i == j { -1.0 } else { 0.0 };
        let mut err = 0.0;
        for k in 0..n {
            let a = g[(i, k)];
            let b = x[(k, j)];
            let prod = a * b;
            err += a.mul_add(b, -prod);
            // Two-sum of `sum` and `prod`.
            let new_sum = sum + prod;
            let delta = if sum.abs() >= prod.abs() {
                (sum - new_sum) + prod
            } else {
                (prod - new_sum) + sum
            };
            sum = new_sum;
            err += delta;
        }
        -(sum + err)
    })
}

/// Inverts the Gram matrix by pivoted LU, then polishes with Newton
/// iterations on compensated residuals. For kappa eps well below one this
/// drives the forward error of the inverse to the epsilon level rather
/// than eps * kappa, which keeps downstream identities (standardization,
/// round trips) at their nominal tolerances on ill-conditioned but still
/// allowed constellations.
fn refined_gram_inverse(gram: &RealMatrix) -> Result<(RealMatrix, f64)> {
    let condition = condition_estimate(gram);
    if !condition.is_finite() || condition > singularity_threshold() {
        return Err(Error::SingularMatrix { condition });
    }
    let n = gram.nrows();
    let lu = gram.clone().lu();
    let mut inv = lu
        .solve(&RealMatrix::identity(n, n))
        .ok_or(Error::SingularMatrix { condition })?;
    for _ in 0..3 {
        let residual = compensated_residual(gram, &inv);
        let correction = lu
            .solve(&residual)
            .ok_or(Error::SingularMatrix { condition })?;
        inv += correction;
    }
    // The inverse of a symmetric matrix is symmetric.
    inv = (&inv + inv.transpose()) / 2.0;
    Ok((inv, condition))
}

fn assemble_pair(
    c: &Constellation,
    q_ops: Vec<Operator>,
    dual_ops: Vec<Operator>,
    gram: RealMatrix,
    gram_inv: RealMatrix,
    gram_condition: f64,
) -> KernelPair {
    KernelPair {
        s: c.s(),
        constellation: c.clone(),
        q_ops,
        dual_ops,
        gram,
        gram_inv,
        gram_condition,
    }
}

/// Canonical dual-kernel computation:
/// Q^nu = (2s+1) sum_mu G^{mu nu} Q_mu with G^{mu nu} from the pivoted
/// solve on the Gram matrix.
pub fn dual_kernel(c: &Constellation) -> Result<KernelPair> {
    let g = gram(c);
    let (g_inv, condition) = refined_gram_inverse(&g)?;
    let q_ops = q_projectors(c);
    let scale = f64::from(c.s().two_s() + 1);
    let n = c.len();
    let dual_ops: Vec<Operator> = (0..n)
        .map(|nu| {
            Operator::from_fn(c.s(), |a, b| {
                let mut acc = CompensatedSum::default();
                for (mu, q) in q_ops.iter().enumerate() {
                    acc.add(q.entry(a, b) * g_inv[(mu, nu)]);
                }
                acc.value() * scale
            })
        })
        .collect();
    Ok(assemble_pair(c, q_ops, dual_ops, g, g_inv, condition))
}

/// Factorized kernel matrix Q = D1 N D2.
///
/// Rows are constellation points; columns are pairs (m, m') in the order
/// {(2s,2s), (2s,2s-1), ..., (0,0)}, which is lexicographic in the basis
/// rows (a, b) = (s - m, s - m'). Entries:
///   D1_nu = (1 + |z_nu|^2)^{-2s},
///   N_{nu,(a,b)} = z_nu^a conj(z_nu)^b,
///   D2_{(a,b)} = binom(2s,a)^{1/2} binom(2s,b)^{1/2}.
#[derive(Clone, Debug)]
pub struct QFactorization {
    pub d1: Vec<f64>,
    pub n: DMatrix<Complex64>,
    pub d2: Vec<f64>,
}

impl QFactorization {
    /// Reassembles the full kernel matrix D1 N D2.
    pub fn assemble(&self) -> DMatrix<Complex64> {
        let rows = self.n.nrows();
        let cols = self.n.ncols();
        DMatrix::from_fn(rows, cols, |r, c| self.n[(r, c)] * self.d1[r] * self.d2[c])
    }
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc
}

/// Builds the D1 N D2 factorization of the kernel matrix
/// Q_{nu,(m,m')} = <m|Q_nu|m'>. Fails with a chart error when a point sits
/// too close to the south pole; the caller is expected to rotate the
/// constellation first (see `dual_kernel_via_factorization`).
pub fn q_matrix_factorization(c: &Constellation) -> Result<QFactorization> {
    let s = c.s();
    let d = s.dim();
    let zs = c.stereo_points();
    let max_abs_z = zs
        .iter()
        .map(|z| {
            if z.is_finite() {
                z.value().norm()
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    if !max_abs_z.is_finite() || max_abs_z > CHART_MAX_ABS_Z {
        return Err(Error::ChartBreakdown { max_abs_z });
    }

    let two_s = s.two_s() as i32;
    let d1: Vec<f64> = zs
        .iter()
        .map(|z| (1.0 + z.value().norm_sqr()).powi(-two_s))
        .collect();
    let mut d2 = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            d2.push((binomial_f64(s.two_s(), a as u32) * binomial_f64(s.two_s(), b as u32)).sqrt());
        }
    }
    let n = DMatrix::from_fn(c.len(), d * d, |nu, col| {
        let (a, b) = (col / d, col % d);
        let z = zs[nu].value();
        z.powu(a as u32) * z.conj().powu(b as u32)
    });
    Ok(QFactorization { d1, n, d2 })
}

/// Reads the dual kernel off the inverse of a factorized kernel matrix:
/// Q^{-1} = D2^{-1} N^{-1} D1^{-1}, with <m|Q^nu|m'> = (2s+1) times the
/// ((m',m), nu) entry of Q^{-1}.
fn duals_from_n_inverse(
    c: &Constellation,
    fact: &QFactorization,
    n_inv: &DMatrix<Complex64>,
) -> Vec<Operator> {
    let s = c.s();
    let d = s.dim();
    let scale = f64::from(s.two_s() + 1);
    (0..c.len())
        .map(|nu| {
            Operator::from_fn(s, |row, col| {
                // Pair index (a(m'), a(m)) addresses operator entry
                // (row, col) = (a(m), a(m')).
                let pair = col * d + row;
                n_inv[(pair, nu)] / fact.d2[pair] / fact.d1[nu] * scale
            })
        })
        .collect()
}

/// Dual kernel via inversion of the factorized kernel matrix. Constellations
/// reaching into the south-pole chart are pre-rotated away from the pole and
/// the resulting dual operators rotated back, which is exact by covariance.
pub fn dual_kernel_via_factorization(c: &Constellation) -> Result<KernelPair> {
    // Candidate rotations, tried in order until the chart is comfortable.
    let candidates = [
        EulerAngles::new(0.0, 0.0, 0.0),
        EulerAngles::new(0.0, std::f64::consts::PI / 2.0, 0.0),
        EulerAngles::new(0.0, std::f64::consts::PI, 0.0),
        EulerAngles::new(0.3, 1.9106332362490186, 0.0),
        EulerAngles::new(1.1, 0.7297276562269663, 0.0),
    ];
    let mut chosen = None;
    for angles in candidates {
        let rotated = c.rotated(&crate::opalg::rotation_matrix(angles));
        let max_abs_z = rotated
            .stereo_points()
            .iter()
            .map(|z| {
                if z.is_finite() {
                    z.value().norm()
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        if max_abs_z <= 100.0 {
            chosen = Some((angles, rotated));
            break;
        }
    }
    let (angles, working) = chosen.ok_or(Error::DegenerateConstellation(
        "no chart rotation keeps all points away from the south pole".into(),
    ))?;

    let fact = q_matrix_factorization(&working)?;
    let q_matrix = fact.assemble();
    // Q Q^dagger = G, so the Gram condition is the squared condition of
    // the kernel matrix.
    let q_condition = condition_estimate(&q_matrix);
    let condition = q_condition * q_condition;
    if !condition.is_finite() || condition > singularity_threshold() {
        return Err(Error::SingularMatrix { condition });
    }
    let n = working.len();
    // Invert N (the hard factor); D1 and D2 invert entrywise.
    let n_inv = fact
        .n
        .clone()
        .lu()
        .solve(&DMatrix::<Complex64>::identity(n, n))
        .ok_or(Error::SingularMatrix { condition })?;
    let duals_rotated = duals_from_n_inverse(&working, &fact, &n_inv);

    // Rotate the duals back: Q^nu = U^dagger Q'^nu U for c' = R c.
    let u = rotation_operator(c.s(), angles);
    let dual_ops: Vec<Operator> = duals_rotated
        .iter()
        .map(|qd| {
            u.adjoint()
                .mul(qd)
                .and_then(|m| m.mul(&u))
                .expect("uniform dimensions")
        })
        .collect();

    let q_ops = q_projectors(c);
    let g = gram(c);
    let g_inv = gram_inverse_from_duals(c.s(), &dual_ops);
    Ok(assemble_pair(c, q_ops, dual_ops, g, g_inv, condition))
}

/// Inverse Gram matrix recovered from dual operators through the metric
/// identity G^{nu nu'} = (2s+1)^{-2} tr[Q^nu Q^nu'].
fn gram_inverse_from_duals(s: SpinJ, dual_ops: &[Operator]) -> RealMatrix {
    let n = dual_ops.len();
    let scale = f64::from(s.two_s() + 1).powi(2);
    RealMatrix::from_fn(n, n, |i, j| {
        trace_product(&dual_ops[i], &dual_ops[j])
            .expect("uniform dimensions")
            .re
            / scale
    })
}

/// Closed-form inverse of the Vandermonde matrix V_{nu mu} = x_nu^{mu-1}
/// through elementary symmetric polynomials of the nodes.
pub fn vandermonde_inverse(nodes: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let n = nodes.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty node list".into()));
    }
    let scale = nodes.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (nodes[i] - nodes[j]).norm() < 1e-14 * scale {
                return Err(Error::Domain(format!(
                    "repeated Vandermonde nodes at indices {j} and {i}"
                )));
            }
        }
    }

    // Monic master polynomial P(t) = prod_i (t - x_i); master[k] holds the
    // coefficient of t^k, so master[n-j] = (-1)^j S_j(nodes).
    let mut master = vec![Complex64::new(0.0, 0.0); n + 1];
    master[0] = Complex64::new(1.0, 0.0);
    let mut degree = 0;
    for x in nodes {
        degree += 1;
        master[degree] = master[degree - 1];
        for k in (1..degree).rev() {
            master[k] = master[k - 1] - x * master[k];
        }
        master[0] = -x * master[0];
    }

    let mut inv = DMatrix::zeros(n, n);
    for (k, x) in nodes.iter().enumerate() {
        // Synthetic division: Q_k(t) = P(t)/(t - x_k), monic of degree n-1,
        // whose coefficients are the signed elementary symmetric functions
        // of the nodes with x_k removed.
        let mut q = vec![Complex64::new(0.0, 0.0); n];
        q[n - 1] = master[n];
        for j in (0..n - 1).rev() {
            q[j] = master[j + 1] + x * q[j + 1];
        }
        // Denominator prod_{l != k} (x_k - x_l) = Q_k(x_k) by Horner.
        let mut denom = q[n - 1];
        for j in (0..n - 1).rev() {
            denom = denom * x + q[j];
        }
        for j in 0..n {
            // Row j+1 of V^{-1} holds the coefficient of t^j.
            inv[(j, k)] = q[j] / denom;
        }
    }
    Ok(inv)
}

/// Dual kernel of a spiral constellation through the closed-form Vandermonde
/// inverse of its factorized kernel matrix.
pub fn dual_kernel_via_vandermonde(s: SpinJ, z0: Complex64) -> Result<KernelPair> {
    let c = spiral(s, z0)?;
    let nodes = spiral_nodes(s, z0);
    let v_inv = vandermonde_inverse(&nodes)?;
    // The factorized matrix satisfies N = V^T on spiral nodes.
    let n_inv = v_inv.transpose();
    let fact = q_matrix_factorization(&c)?;
    let q_matrix = fact.assemble();
    // Q Q^dagger = G, so the Gram condition is the squared condition of
    // the kernel matrix.
    let q_condition = condition_estimate(&q_matrix);
    let condition = q_condition * q_condition;
    if !condition.is_finite() || condition > singularity_threshold() {
        return Err(Error::SingularMatrix { condition });
    }
    let dual_ops = duals_from_n_inverse(&c, &fact, &n_inv);
    let q_ops = q_projectors(&c);
    let g = gram(&c);
    let g_inv = gram_inverse_from_duals(s, &dual_ops);
    Ok(assemble_pair(&c, q_ops, dual_ops, g, g_inv, condition))
}

/// Which expansion a symbol belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolVariant {
    /// A_nu = tr[A Q_nu]: the discrete Q-symbol.
    Lower,
    /// A^nu = tr[A Q^nu]: the discrete P-symbol (dual).
    Upper,
}

/// Length-N_s vector of symbol values; real for Hermitian operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    s: SpinJ,
    variant: SymbolVariant,
    values: Vec<Complex64>,
}

impl Symbol {
    pub fn new(s: SpinJ, variant: SymbolVariant, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != s.n_points() {
            return Err(Error::DimensionMismatch {
                expected: s.n_points(),
                got: values.len(),
            });
        }
        Ok(Self { s, variant, values })
    }

    pub fn from_real(s: SpinJ, variant: SymbolVariant, values: &[f64]) -> Result<Self> {
        Self::new(
            s,
            variant,
            values.iter().map(|v| Complex64::new(*v, 0.0)).collect(),
        )
    }

    pub fn s(&self) -> SpinJ {
        self.s
    }

    pub fn variant(&self) -> SymbolVariant {
        self.variant
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.im.abs() < tol)
    }

    pub fn real_values(&self) -> Result<Vec<f64>> {
        if !self.is_real(1e-9) {
            return Err(Error::InvalidInput(
                "symbol has non-negligible imaginary parts".into(),
            ));
        }
        Ok(self.values.iter().map(|v| v.re).collect())
    }

    /// CSV rows `nu,value` (lower) or `nu,dual_value` (upper); nu is
    /// 1-based as in the kernel labelling. Complex entries are written as
    /// `re+imi`.
    pub fn to_csv(&self) -> String {
        let header = match self.variant {
            SymbolVariant::Lower => "nu,value",
            SymbolVariant::Upper => "nu,dual_value",
        };
        let mut out = String::from(header);
        out.push('\n');
        for (i, v) in self.values.iter().enumerate() {
            if v.im.abs() <= 1e-12 * (1.0 + v.re.abs()) {
                out.push_str(&format!("{},{:.17e}\n", i + 1, v.re));
            } else {
                out.push_str(&format!("{},{:.17e}{:+.17e}i\n", i + 1, v.re, v.im));
            }
        }
        out
    }

    /// Parses the CSV format written by `to_csv`; comment lines starting
    /// with '#' are skipped.
    pub fn from_csv(s: SpinJ, text: &str) -> Result<Symbol> {
        let mut variant = None;
        let mut values = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if variant.is_none() {
                variant = Some(match line {
                    "nu,value" => SymbolVariant::Lower,
                    "nu,dual_value" => SymbolVariant::Upper,
                    other => {
                        return Err(Error::InvalidInput(format!(
                            "unrecognized symbol CSV header '{other}'"
                        )))
                    }
                });
                continue;
            }
            let (nu_field, value_field) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidInput(format!("malformed symbol CSV row '{line}'")))?;
            let nu: usize = nu_field
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad nu field '{nu_field}'")))?;
            if nu != values.len() + 1 {
                return Err(Error::InvalidInput(format!(
                    "symbol CSV rows out of order at nu = {nu}"
                )));
            }
            values.push(parse_complex_value(value_field.trim())?);
        }
        let variant =
            variant.ok_or_else(|| Error::InvalidInput("symbol CSV missing header".into()))?;
        Symbol::new(s, variant, values)
    }
}

fn parse_complex_value(text: &str) -> Result<Complex64> {
    if let Ok(re) = text.parse::<f64>() {
        return Ok(Complex64::new(re, 0.0));
    }
    if let Some(body) = text.strip_suffix('i') {
        // Split at the last sign that is not part of an exponent.
        let bytes = body.as_bytes();
        for idx in (1..bytes.len()).rev() {
            let ch = bytes[idx] as char;
            if (ch == '+' || ch == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                let re: f64 = body[..idx]
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad complex value '{text}'")))?;
                let im: f64 = body[idx..]
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad complex value '{text}'")))?;
                return Ok(Complex64::new(re, im));
            }
        }
    }
    Err(Error::InvalidInput(format!("bad complex value '{text}'")))
}

/// Discrete symbol of an operator: A_nu = <n_nu|A|n_nu> for the lower
/// variant and A^nu = tr[A Q^nu] for the upper one.
pub fn discrete_symbol(a: &Operator, kp: &KernelPair, variant: SymbolVariant) -> Result<Symbol> {
    if a.s() != kp.s() {
        return Err(Error::DimensionMismatch {
            expected: kp.s().dim(),
            got: a.dim(),
        });
    }
    let ops = match variant {
        SymbolVariant::Lower => kp.q_ops(),
        SymbolVariant::Upper => kp.dual_ops(),
    };
    let values = ops
        .iter()
        .map(|op| trace_product(a, op).expect("uniform dimensions"))
        .collect();
    Symbol::new(kp.s(), variant, values)
}

/// Reassembles the operator from a symbol: lower symbols expand against the
/// dual kernel, upper symbols against the projectors.
pub fn expand(sym: &Symbol, kp: &KernelPair) -> Result<Operator> {
    if sym.s() != kp.s() {
        return Err(Error::DimensionMismatch {
            expected: kp.s().dim(),
            got: sym.s().dim(),
        });
    }
    let ops = match sym.variant() {
        SymbolVariant::Lower => kp.dual_ops(),
        SymbolVariant::Upper => kp.q_ops(),
    };
    let scale = 1.0 / f64::from(kp.s().two_s() + 1);
    Ok(Operator::from_fn(kp.s(), |a, b| {
        let mut acc = CompensatedSum::default();
        for (v, op) in sym.values().iter().zip(ops) {
            acc.add(v * op.entry(a, b));
        }
        acc.value() * scale
    }))
}

fn check_star_inputs(a: &Symbol, b: &Symbol, kp: &KernelPair) -> Result<()> {
    if a.s() != kp.s() || b.s() != kp.s() {
        return Err(Error::DimensionMismatch {
            expected: kp.s().n_points(),
            got: a.values().len().min(b.values().len()),
        });
    }
    if a.variant() != SymbolVariant::Lower || b.variant() != SymbolVariant::Lower {
        return Err(Error::InvalidInput(
            "star product expects lower symbols".into(),
        ));
    }
    Ok(())
}

/// Discrete star product
/// (A * B)_lambda = (2s+1)^{-2} sum_{mu nu} L^{mu nu}_lambda A_mu B_nu
/// with the trilinear kernel L^{mu nu}_lambda = tr[Q^mu Q^nu Q_lambda].
pub fn star_product(a: &Symbol, b: &Symbol, kp: &KernelPair) -> Result<Symbol> {
    star_product_threaded(a, b, kp, 1)
}

/// Star product with the lambda loop split over `threads` worker threads.
/// Each output entry is computed independently, so the result does not
/// depend on the thread count.
pub fn star_product_threaded(
    a: &Symbol,
    b: &Symbol,
    kp: &KernelPair,
    threads: usize,
) -> Result<Symbol> {
    check_star_inputs(a, b, kp)?;
    let n = kp.q_ops().len();
    let dim = kp.s().dim();
    let scale = 1.0 / f64::from(kp.s().two_s() + 1).powi(2);

    // Using Q_lambda = |v_lambda><v_lambda| the trilinear sum collapses to
    // y^dagger x with w_mu = Q^mu v_lambda, x = sum_nu B_nu w_nu and
    // y = sum_mu conj(A_mu) w_mu.
    let vectors: Vec<Vec<Complex64>> = kp
        .constellation()
        .points()
        .iter()
        .map(|p| coherent_state_vector(kp.s(), p.to_stereo()))
        .collect();

    let compute_lambda = |lam: usize| -> Complex64 {
        let v = &vectors[lam];
        let mut x = vec![Complex64::new(0.0, 0.0); dim];
        let mut y = vec![Complex64::new(0.0, 0.0); dim];
        for mu in 0..n {
            let q = &kp.dual_ops()[mu];
            let bv = b.values()[mu];
            let av = a.values()[mu].conj();
            for r in 0..dim {
                let mut w = Complex64::new(0.0, 0.0);
                for (cidx, vc) in v.iter().enumerate() {
                    w += q.entry(r, cidx) * vc;
                }
                x[r] += bv * w;
                y[r] += av * w;
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..dim {
            acc += y[r].conj() * x[r];
        }
        acc * scale
    };

    let values = if threads <= 1 || n < 2 {
        (0..n).map(compute_lambda).collect()
    } else {
        let workers = threads.min(n);
        let mut values = vec![Complex64::new(0.0, 0.0); n];
        let chunk = n.div_ceil(workers);
        std::thread::scope(|scope| {
            for (w, slot) in values.chunks_mut(chunk).enumerate() {
                let compute = &compute_lambda;
                scope.spawn(move || {
                    for (offset, out) in slot.iter_mut().enumerate() {
                        *out = compute(w * chunk + offset);
                    }
                });
            }
        });
        values
    };
    Symbol::new(kp.s(), SymbolVariant::Lower, values)
}

/// Triple coherent overlap tr[Q_mu Q_nu Q_lambda] in closed form:
/// 4^{-2s} (1 + sum of dot products + i triple product)^{2s}.
pub fn coherent_triple_kernel(c: &Constellation, mu: usize, nu: usize, lam: usize) -> Complex64 {
    let g = triple_bracket(c, mu, nu, lam);
    (g / 4.0).powu(c.s().two_s())
}

/// The same trace evaluated as the product of coherent overlaps
/// <n_lambda|n_mu><n_mu|n_nu><n_nu|n_lambda>; used to cross-check the
/// closed form.
pub fn coherent_triple_overlap(c: &Constellation, mu: usize, nu: usize, lam: usize) -> Complex64 {
    let s = c.s();
    let overlap = |a: usize, b: usize| -> Complex64 {
        let va = coherent_state_vector(s, c.points()[a].to_stereo());
        let vb = coherent_state_vector(s, c.points()[b].to_stereo());
        va.iter().zip(vb.iter()).map(|(x, y)| x.conj() * y).sum()
    };
    overlap(lam, mu) * overlap(mu, nu) * overlap(nu, lam)
}

fn triple_bracket(c: &Constellation, mu: usize, nu: usize, lam: usize) -> Complex64 {
    let (a, b, d) = (c.points()[mu], c.points()[nu], c.points()[lam]);
    let dots = a.dot(&b) + b.dot(&d) + d.dot(&a);
    let cross = b.cross(&d);
    let triple = a.x() * cross[0] + a.y() * cross[1] + a.z() * cross[2];
    Complex64::new(1.0 + dots, triple)
}

/// Oriented area of the geodesic triangle (n_mu, n_nu, n_lambda), read off
/// the principal branch of the phase of the triple bracket. Near-antipodal
/// configurations have no principal value and are reported as undefined
/// rather than silently wrapped.
pub fn geodesic_triangle_area(c: &Constellation, mu: usize, nu: usize, lam: usize) -> Result<f64> {
    let g = triple_bracket(c, mu, nu, lam);
    if g.norm() < 1e-12 {
        return Err(Error::UndefinedPhase(format!(
            "triple bracket vanishes for indices ({mu}, {nu}, {lam})"
        )));
    }
    // A = (1/i) ln(g / g*) = 2 arg(g).
    Ok(2.0 * g.arg())
}

/// Evaluates the continuous Q-symbol of an operator at an arbitrary point
/// from its discrete dual symbol:
/// <n_0|A|n_0> = (1/(2s+1)) sum_nu A^nu |<n_0|n_nu>|^2.
pub fn off_constellation_eval(
    sym_upper: &Symbol,
    c: &Constellation,
    n0: &Direction,
) -> Result<Complex64> {
    if sym_upper.variant() != SymbolVariant::Upper {
        return Err(Error::InvalidInput(
            "off-constellation evaluation needs the dual (upper) symbol".into(),
        ));
    }
    if sym_upper.s() != c.s() {
        return Err(Error::DimensionMismatch {
            expected: c.s().n_points(),
            got: sym_upper.values().len(),
        });
    }
    let two_s = c.s().two_s() as i32;
    let mut acc = Complex64::new(0.0, 0.0);
    for (value, p) in sym_upper.values().iter().zip(c.points()) {
        let weight = ((1.0 + n0.dot(p)) / 2.0).powi(two_s);
        acc += value * weight;
    }
    Ok(acc / f64::from(c.s().two_s() + 1))
}
