//! Residual systems over the transition amplitudes `a_jj' = u + iv`.
//!
//! The unknown vector stores `u` at `2(j M' + j')` and `v` right after it.
//!
//! For an integer exponent `g` the requirement that
//! `sum_j' f(sum_j c_j a_jj') = 1` hold for every first layer with
//! `sum_j f(c_j) = 1` is a homogeneous identity in `c`, so it can be expanded
//! in the monomials `c^alpha (c*)^beta` with `|alpha| = |beta| = g` and
//! matched against `sum_j |c_j|^(2g)`. That gives one complex condition per
//! unordered pair of multi-indices:
//!
//! `sum_j' a^alpha (a*)^beta = 1` if `alpha = beta = g e_j`, else `0`.
//!
//! The first kind are the row norms and come first. Every other pair
//! contributes its real and imaginary part, the latter vanishing identically
//! when `alpha = beta`. Multinomial weights drop out since the targets vanish.
//!
//! Other exponents have no finite expansion. Their independence residuals are
//! taken at a fixed set of sampled first layers instead.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{random_normalized, rng_for};
use crate::rule::{modulus_power, ProbabilityRule};

/// Seed of the sampled first layers used for non-integer exponents.
const SAMPLED_SYSTEM_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub m: usize,
    pub m_prime: usize,
}

impl ShapeSpec {
    pub fn new(m: usize, m_prime: usize) -> Result<Self> {
        if m == 0 || m_prime == 0 {
            return Err(Error::UnsupportedShape {
                m,
                m_prime,
                reason: "both sets need at least one alternative".into(),
            });
        }
        Ok(ShapeSpec { m, m_prime })
    }

    /// Real unknowns `u_jj', v_jj'`.
    pub fn unknowns(&self) -> usize {
        2 * self.m * self.m_prime
    }

    /// Index of the complex unknown `a_jj'`.
    pub fn var(&self, j: usize, jp: usize) -> usize {
        j * self.m_prime + jp
    }

    /// Reads the unknown vector back into an `M x M'` matrix.
    pub fn to_matrix(&self, x: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.m, self.m_prime, |j, jp| {
            let v = self.var(j, jp);
            Complex64::new(x[2 * v], x[2 * v + 1])
        })
    }

    pub fn from_matrix(&self, a: &DMatrix<Complex64>) -> Vec<f64> {
        let mut x = vec![0.0; self.unknowns()];
        for j in 0..self.m {
            for jp in 0..self.m_prime {
                let v = self.var(j, jp);
                x[2 * v] = a[(j, jp)].re;
                x[2 * v + 1] = a[(j, jp)].im;
            }
        }
        x
    }
}

impl fmt::Display for ShapeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.m, self.m_prime)
    }
}

impl std::str::FromStr for ShapeSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("shape {s:?} is not of the form M,M'"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let m = a.trim().parse().map_err(|_| bad())?;
        let mp = b.trim().parse().map_err(|_| bad())?;
        ShapeSpec::new(m, mp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemMode {
    /// Exact coefficient matching for `f(x) = |x|^(2g)` with integer `g`.
    Polynomial { degree: u32 },
    /// Independence tested at a fixed set of sampled first layers.
    Sampled { samples: usize },
}

#[derive(Debug, Clone, Copy)]
struct Factor {
    var: usize,
    conj: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Re,
    Im,
}

#[derive(Debug, Clone)]
struct PolyResidual {
    /// Monomials summed, one per column `j'`.
    terms: Vec<Vec<Factor>>,
    part: Part,
    constant: f64,
}

#[derive(Debug, Clone)]
enum Body {
    Polynomial(Vec<PolyResidual>),
    Sampled {
        gamma: f64,
        samples: Vec<Vec<Complex64>>,
    },
}

/// Real residuals over the `2 M M'` real unknowns.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    shape: ShapeSpec,
    rule: ProbabilityRule,
    body: Body,
    labels: Vec<String>,
}

/// Multi-indices of total degree `g` over `m` variables, lexicographically
/// descending: `(g,0,..), (g-1,1,..), ...`.
pub fn multi_indices(m: usize, g: u32) -> Vec<Vec<u32>> {
    fn rec(m: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == m {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            rec(m, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, g, &mut Vec::with_capacity(m), &mut out);
    out
}

pub fn multinomial(alpha: &[u32]) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let g: u32 = alpha.iter().sum();
    fact(g) / alpha.iter().map(|&a| fact(a)).product::<f64>()
}

fn fmt_index(alpha: &[u32]) -> String {
    let parts: Vec<String> = alpha.iter().map(|a| a.to_string()).collect();
    format!("({})", parts.join(","))
}

/// Builds the residual system for `shape` under `rule`.
pub fn build_system(shape: ShapeSpec, rule: ProbabilityRule) -> Result<ConstraintSystem> {
    ShapeSpec::new(shape.m, shape.m_prime)?;
    let gamma = match rule {
        ProbabilityRule::Classical => {
            return Err(Error::UnsupportedRule(
                "the identity rule has no normalization system; it is excluded because it cannot interfere"
                    .into(),
            ))
        }
        ProbabilityRule::GammaModulus(g) => {
            rule.validate()?;
            g
        }
    };
    match rule.polynomial_degree() {
        Some(g) => Ok(polynomial_system(shape, rule, g)),
        None => Ok(sampled_system(shape, rule, gamma)),
    }
}

fn polynomial_system(shape: ShapeSpec, rule: ProbabilityRule, g: u32) -> ConstraintSystem {
    let (m, mp) = (shape.m, shape.m_prime);
    let mut residuals = Vec::new();
    let mut labels = Vec::new();

    let column_term = |alpha: &[u32], beta: &[u32], jp: usize| -> Vec<Factor> {
        let mut factors = Vec::new();
        for j in 0..m {
            let var = shape.var(j, jp);
            factors.extend((0..alpha[j]).map(|_| Factor { var, conj: false }));
            factors.extend((0..beta[j]).map(|_| Factor { var, conj: true }));
        }
        factors
    };

    for j in 0..m {
        let mut e = vec![0; m];
        e[j] = g;
        residuals.push(PolyResidual {
            terms: (0..mp).map(|jp| column_term(&e, &e, jp)).collect(),
            part: Part::Re,
            constant: -1.0,
        });
        labels.push(format!("row {} norm", j + 1));
    }

    let indices = multi_indices(m, g);
    for (i, alpha) in indices.iter().enumerate() {
        for beta in &indices[i..] {
            let pure = alpha == beta && alpha.contains(&g);
            if pure {
                continue;
            }
            let terms: Vec<Vec<Factor>> = (0..mp).map(|jp| column_term(alpha, beta, jp)).collect();
            for (part, name) in [(Part::Re, "Re"), (Part::Im, "Im")] {
                residuals.push(PolyResidual {
                    terms: terms.clone(),
                    part,
                    constant: 0.0,
                });
                labels.push(format!("{name} {}|{}", fmt_index(alpha), fmt_index(beta)));
            }
        }
    }

    ConstraintSystem {
        shape,
        rule,
        body: Body::Polynomial(residuals),
        labels,
    }
}

fn sampled_system(shape: ShapeSpec, rule: ProbabilityRule, gamma: f64) -> ConstraintSystem {
    let count = 4 * shape.m * shape.m_prime;
    let mut rng = rng_for(SAMPLED_SYSTEM_SEED, 0);
    let samples: Vec<Vec<Complex64>> = (0..count)
        .map(|_| random_normalized(&mut rng, shape.m, rule))
        .collect();
    let mut labels: Vec<String> = (0..shape.m).map(|j| format!("row {} norm", j + 1)).collect();
    labels.extend((0..count).map(|s| format!("sample {}", s + 1)));
    ConstraintSystem {
        shape,
        rule,
        body: Body::Sampled { gamma, samples },
        labels,
    }
}

fn factor_value(x: &[f64], f: Factor) -> Complex64 {
    let z = Complex64::new(x[2 * f.var], x[2 * f.var + 1]);
    if f.conj {
        z.conj()
    } else {
        z
    }
}

fn take(part: Part, z: Complex64) -> f64 {
    match part {
        Part::Re => z.re,
        Part::Im => z.im,
    }
}

/// `d|z|^(2g) / d|z|^2`, with the singular point at zero mapped to zero.
fn modulus_power_slope(norm_sqr: f64, gamma: f64) -> f64 {
    if norm_sqr <= 1e-300 {
        if gamma == 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        gamma * norm_sqr.powf(gamma - 1.0)
    }
}

impl ConstraintSystem {
    pub fn shape(&self) -> ShapeSpec {
        self.shape
    }

    pub fn rule(&self) -> ProbabilityRule {
        self.rule
    }

    pub fn num_unknowns(&self) -> usize {
        self.shape.unknowns()
    }

    pub fn num_residuals(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mode(&self) -> SystemMode {
        match (&self.body, self.rule.polynomial_degree()) {
            (Body::Polynomial(_), Some(degree)) => SystemMode::Polynomial { degree },
            (Body::Sampled { samples, .. }, _) => SystemMode::Sampled {
                samples: samples.len(),
            },
            (Body::Polynomial(_), None) => unreachable!("polynomial body needs integer degree"),
        }
    }

    pub fn residuals(&self, x: &[f64]) -> DVector<f64> {
        assert_eq!(x.len(), self.num_unknowns());
        match &self.body {
            Body::Polynomial(rs) => DVector::from_iterator(
                rs.len(),
                rs.iter().map(|r| {
                    let s: Complex64 = r
                        .terms
                        .iter()
                        .map(|t| t.iter().map(|&f| factor_value(x, f)).product::<Complex64>())
                        .sum();
                    take(r.part, s) + r.constant
                }),
            ),
            Body::Sampled { gamma, samples } => {
                let a = self.shape.to_matrix(x);
                let mut out = Vec::with_capacity(self.num_residuals());
                for j in 0..self.shape.m {
                    let s: f64 = (0..self.shape.m_prime)
                        .map(|jp| modulus_power(a[(j, jp)], *gamma))
                        .sum();
                    out.push(s - 1.0);
                }
                for c in samples {
                    let s: f64 = (0..self.shape.m_prime)
                        .map(|jp| {
                            let z: Complex64 = (0..self.shape.m).map(|j| c[j] * a[(j, jp)]).sum();
                            modulus_power(z, *gamma)
                        })
                        .sum();
                    out.push(s - 1.0);
                }
                DVector::from_vec(out)
            }
        }
    }

    /// Analytic Jacobian, one row per residual.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.num_unknowns();
        let mut jac = DMatrix::zeros(self.num_residuals(), n);
        match &self.body {
            Body::Polynomial(rs) => {
                let mut values: Vec<Complex64> = Vec::new();
                let mut suffix: Vec<Complex64> = Vec::new();
                for (row, r) in rs.iter().enumerate() {
                    for term in &r.terms {
                        values.clear();
                        values.extend(term.iter().map(|&f| factor_value(x, f)));
                        suffix.clear();
                        suffix.resize(values.len() + 1, Complex64::new(1.0, 0.0));
                        for p in (0..values.len()).rev() {
                            suffix[p] = suffix[p + 1] * values[p];
                        }
                        let mut prefix = Complex64::new(1.0, 0.0);
                        for (p, f) in term.iter().enumerate() {
                            let others = prefix * suffix[p + 1];
                            let dv = if f.conj {
                                Complex64::new(0.0, -1.0)
                            } else {
                                Complex64::new(0.0, 1.0)
                            };
                            jac[(row, 2 * f.var)] += take(r.part, others);
                            jac[(row, 2 * f.var + 1)] += take(r.part, others * dv);
                            prefix *= values[p];
                        }
                    }
                }
            }
            Body::Sampled { gamma, samples } => {
                let (m, mp) = (self.shape.m, self.shape.m_prime);
                let a = self.shape.to_matrix(x);
                for j in 0..m {
                    for jp in 0..mp {
                        let z = a[(j, jp)];
                        let slope = modulus_power_slope(z.norm_sqr(), *gamma);
                        let v = self.shape.var(j, jp);
                        jac[(j, 2 * v)] = slope * 2.0 * z.re;
                        jac[(j, 2 * v + 1)] = slope * 2.0 * z.im;
                    }
                }
                for (s, c) in samples.iter().enumerate() {
                    let row = m + s;
                    for jp in 0..mp {
                        let z: Complex64 = (0..m).map(|j| c[j] * a[(j, jp)]).sum();
                        let slope = modulus_power_slope(z.norm_sqr(), *gamma);
                        for (j, cj) in c.iter().enumerate() {
                            // d|z|^2/du = 2 Re(z* c_j), d|z|^2/dv = -2 Im(z* c_j)
                            let w = z.conj() * cj;
                            let v = self.shape.var(j, jp);
                            jac[(row, 2 * v)] = slope * 2.0 * w.re;
                            jac[(row, 2 * v + 1)] = -slope * 2.0 * w.im;
                        }
                    }
                }
            }
        }
        jac
    }

    /// Euclidean norm of the residual vector.
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        self.residuals(x).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_row_orthonormal, rng_for};
    use rand::Rng;

    fn shape(m: usize, mp: usize) -> ShapeSpec {
        ShapeSpec::new(m, mp).unwrap()
    }

    #[test]
    fn residual_counts() {
        let born = ProbabilityRule::BORN;
        assert_eq!(build_system(shape(2, 2), born).unwrap().num_residuals(), 4);
        assert_eq!(build_system(shape(1, 1), born).unwrap().num_residuals(), 1);
        for m in 1..=5 {
            for mp in 1..=5 {
                let s = build_system(shape(m, mp), born).unwrap();
                assert_eq!(s.num_residuals(), m + m * (m - 1));
                assert_eq!(s.num_unknowns(), 2 * m * mp);
            }
        }
        let quartic = build_system(shape(2, 2), ProbabilityRule::GammaModulus(2.0)).unwrap();
        assert_eq!(quartic.num_residuals(), 10);
        assert_eq!(quartic.num_unknowns(), 8);
        assert_eq!(quartic.mode(), SystemMode::Polynomial { degree: 2 });
    }

    #[test]
    fn classical_rule_has_no_system() {
        assert!(matches!(
            build_system(shape(2, 2), ProbabilityRule::Classical),
            Err(Error::UnsupportedRule(_))
        ));
    }

    #[test]
    fn multi_index_order() {
        assert_eq!(
            multi_indices(2, 2),
            vec![vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        assert_eq!(multi_indices(3, 1).len(), 3);
        assert_eq!(multi_indices(3, 2).len(), 6);
        assert_eq!(multinomial(&[1, 1]), 2.0);
        assert_eq!(multinomial(&[2, 1, 1]), 12.0);
    }

    #[test]
    fn unitary_rows_solve_born_system() {
        let mut rng = rng_for(11, 0);
        for (m, mp) in [(2, 2), (3, 3), (2, 4), (1, 3)] {
            let s = build_system(shape(m, mp), ProbabilityRule::BORN).unwrap();
            let a = random_row_orthonormal(&mut rng, m, mp);
            let x = shape(m, mp).from_matrix(&a);
            assert!(s.residual_norm(&x) < 1e-12, "({m},{mp})");
        }
    }

    #[test]
    fn orthogonality_residual_is_row_inner_product() {
        let mut rng = rng_for(5, 0);
        let sh = shape(2, 2);
        let s = build_system(sh, ProbabilityRule::BORN).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..8).map(|_| rng.random::<f64>() - 0.5).collect();
            let r = s.residuals(&x);
            let a = sh.to_matrix(&x);
            let inner = a[(0, 0)] * a[(1, 0)].conj() + a[(0, 1)] * a[(1, 1)].conj();
            let modulus = (r[2] * r[2] + r[3] * r[3]).sqrt();
            assert!((modulus - inner.norm()).abs() < 1e-12);
        }
    }

    /// Direct check of the expansion: `sum_j' |c . a_j'|^(2g) - sum_j |c_j|^(2g)`
    /// equals the coefficient-weighted residuals for any `c`.
    #[test]
    fn expansion_reproduces_direct_evaluation() {
        let mut rng = rng_for(9, 0);
        for (m, mp, g) in [(2, 2, 2u32), (3, 2, 2), (2, 3, 3), (2, 2, 1)] {
            let sh = shape(m, mp);
            let rule = ProbabilityRule::GammaModulus(g as f64);
            let s = build_system(sh, rule).unwrap();
            let x: Vec<f64> = (0..sh.unknowns()).map(|_| rng.random::<f64>() - 0.5).collect();
            let a = sh.to_matrix(&x);
            let r = s.residuals(&x);
            let c: Vec<Complex64> = (0..m)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let direct: f64 = (0..mp)
                .map(|jp| {
                    let z: Complex64 = (0..m).map(|j| c[j] * a[(j, jp)]).sum();
                    z.norm_sqr().powi(g as i32)
                })
                .sum::<f64>()
                - c.iter().map(|z| z.norm_sqr().powi(g as i32)).sum::<f64>();

            let idx = multi_indices(m, g);
            let mono = |al: &[u32], be: &[u32]| -> Complex64 {
                (0..m)
                    .map(|j| c[j].powu(al[j]) * c[j].conj().powu(be[j]))
                    .product()
            };
            let mut expanded = 0.0;
            for j in 0..m {
                let mut e = vec![0; m];
                e[j] = g;
                expanded += r[j] * mono(&e, &e).re;
            }
            let mut row = m;
            for (i, al) in idx.iter().enumerate() {
                for be in &idx[i..] {
                    if al == be && al.contains(&g) {
                        continue;
                    }
                    let z = Complex64::new(r[row], r[row + 1]);
                    row += 2;
                    let w = multinomial(al) * multinomial(be);
                    let term = w * z * mono(al, be);
                    expanded += if al == be { term.re } else { 2.0 * term.re };
                }
            }
            assert_eq!(row, s.num_residuals());
            assert!(
                (expanded - direct).abs() < 1e-12 * direct.abs().max(1.0),
                "({m},{mp}) g={g}: {expanded} vs {direct}"
            );
        }
    }

    fn finite_difference_check(s: &ConstraintSystem, x: &[f64]) {
        let jac = s.jacobian(x);
        let h = 1e-6;
        for k in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            let d = (s.residuals(&xp) - s.residuals(&xm)) / (2.0 * h);
            for i in 0..s.num_residuals() {
                assert!(
                    (jac[(i, k)] - d[i]).abs() < 1e-6 * (1.0 + d[i].abs()),
                    "residual {i} unknown {k}: {} vs {}",
                    jac[(i, k)],
                    d[i]
                );
            }
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let mut rng = rng_for(21, 0);
        for (m, mp, rule) in [
            (2, 2, ProbabilityRule::BORN),
            (3, 2, ProbabilityRule::GammaModulus(2.0)),
            (2, 3, ProbabilityRule::GammaModulus(3.0)),
            (2, 2, ProbabilityRule::GammaModulus(1.5)),
            (3, 2, ProbabilityRule::GammaModulus(0.5)),
        ] {
            let sh = shape(m, mp);
            let s = build_system(sh, rule).unwrap();
            let x: Vec<f64> = (0..sh.unknowns()).map(|_| rng.random::<f64>() - 0.5).collect();
            finite_difference_check(&s, &x);
        }
    }

    /// Phase-permutation matrices send each alternative to its own successor,
    /// so `f` only ever sees single products and every exponent normalizes.
    #[test]
    fn phase_permutations_are_roots_for_every_exponent() {
        let sh = shape(2, 2);
        let p = Complex64::from_polar(1.0, 0.7);
        let q = Complex64::from_polar(1.0, -2.1);
        let z = Complex64::new(0.0, 0.0);
        let diag = DMatrix::from_row_slice(2, 2, &[p, z, z, q]);
        let anti = DMatrix::from_row_slice(2, 2, &[z, p, q, z]);
        for g in [1.0, 2.0, 3.0, 0.5, 1.5] {
            let s = build_system(sh, ProbabilityRule::GammaModulus(g)).unwrap();
            for a in [&diag, &anti] {
                assert!(s.residual_norm(&sh.from_matrix(a)) < 1e-14, "g={g}");
            }
        }
        let wide = shape(2, 3);
        let s = build_system(wide, ProbabilityRule::GammaModulus(2.0)).unwrap();
        let a = DMatrix::from_row_slice(2, 3, &[z, p, z, z, z, q]);
        assert!(s.residual_norm(&wide.from_matrix(&a)) < 1e-14);
    }

    #[test]
    fn quartic_conditions_match_the_four_lines() {
        // Classes after the row norms, in order:
        // (2,0)|(1,1), (2,0)|(0,2), (1,1)|(1,1), (1,1)|(0,2).
        let s = build_system(shape(2, 2), ProbabilityRule::GammaModulus(2.0)).unwrap();
        let names: Vec<&str> = s.labels().iter().map(String::as_str).collect();
        assert_eq!(
            names,
            [
                "row 1 norm",
                "row 2 norm",
                "Re (2,0)|(1,1)",
                "Im (2,0)|(1,1)",
                "Re (2,0)|(0,2)",
                "Im (2,0)|(0,2)",
                "Re (1,1)|(1,1)",
                "Im (1,1)|(1,1)",
                "Re (1,1)|(0,2)",
                "Im (1,1)|(0,2)",
            ]
        );
        let mut rng = rng_for(4, 0);
        let x: Vec<f64> = (0..8).map(|_| rng.random::<f64>() - 0.5).collect();
        let a = shape(2, 2).to_matrix(&x);
        let r = s.residuals(&x);
        let c = |j: usize, jp: usize| a[(j, jp)];
        let line = |f: &dyn Fn(usize) -> Complex64| f(0) + f(1);
        let lines = [
            line(&|k| c(0, k) * c(0, k) * c(0, k).conj() * c(1, k).conj()),
            line(&|k| c(0, k) * c(0, k) * c(1, k).conj() * c(1, k).conj()),
            line(&|k| c(0, k) * c(0, k).conj() * c(1, k) * c(1, k).conj()),
            line(&|k| c(0, k) * c(1, k) * c(1, k).conj() * c(1, k).conj()),
        ];
        for (i, z) in lines.iter().enumerate() {
            assert!((r[2 + 2 * i] - z.re).abs() < 1e-14);
            assert!((r[3 + 2 * i] - z.im).abs() < 1e-14);
        }
        assert_eq!(r[7], 0.0);
    }

    #[test]
    fn sampled_mode_for_fractional_gamma() {
        let s = build_system(shape(2, 3), ProbabilityRule::GammaModulus(1.5)).unwrap();
        assert_eq!(s.mode(), SystemMode::Sampled { samples: 24 });
        assert_eq!(s.num_residuals(), 2 + 24);
        let t = build_system(shape(1, 1), ProbabilityRule::GammaModulus(0.5)).unwrap();
        assert!(t.residual_norm(&[1.0, 0.0]) < 1e-12);
    }

    #[test]
    fn shape_parsing() {
        assert_eq!("2,3".parse::<ShapeSpec>().unwrap(), shape(2, 3));
        assert!("2".parse::<ShapeSpec>().is_err());
        assert!("0,2".parse::<ShapeSpec>().is_err());
    }
}
