//! Quadrature building blocks.
//!
//! Two independent integration schemes are provided on purpose:
//!
//! * [`gauss_jacobi`] rules, built by the Golub–Welsch eigenvalue method,
//!   for integrands that are smooth against a `(1-x)^a (1+x)^b` weight.
//! * [`tanh_sinh`], a double-exponential adaptive rule that tolerates
//!   integrable endpoint singularities.
//!
//! Higher layers use one scheme for evaluation and the other as an oracle,
//! so agreement between them is a genuine cross-check rather than the same
//! arithmetic replayed twice.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use statrs::function::beta::ln_beta;

/// Nodes and weights of a fixed quadrature rule.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    /// Applies the rule to `f`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Jacobi rule with `n` nodes for the weight `(1-x)^a (1+x)^b` on
/// `[-1, 1]`. Requires `n >= 1` and `a, b > -1`.
///
/// The rule integrates polynomials of degree `2n - 1` exactly against the
/// weight. Nodes are the eigenvalues of the symmetric Jacobi matrix of the
/// three-term recurrence; the weight at each node is `mu0` times the squared
/// first component of the corresponding normalized eigenvector.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<QuadRule> {
    if n == 0 {
        return Err(Error::InvalidParameter("gauss_jacobi needs n >= 1".into()));
    }
    if !(a > -1.0 && b > -1.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gauss_jacobi exponents must be > -1, got a={a}, b={b}"
        )));
    }

    // Monic-Jacobi recurrence coefficients: p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1}.
    let alpha = |k: usize| -> f64 {
        if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            let s = 2.0 * k as f64 + a + b;
            (b * b - a * a) / (s * (s + 2.0))
        }
    };
    let beta = |k: usize| -> f64 {
        // k >= 1; valid for a + b > -1 (always true here since a, b > -1
        // and the kernel layer only requests a + b = 2k - 1 with k > 0).
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        4.0 * kf * (kf + a) * (kf + b) * (kf + a + b) / (s * s * (s + 1.0) * (s - 1.0))
    };

    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jac[(i, i)] = alpha(i);
    }
    for i in 1..n {
        let off = beta(i).sqrt();
        jac[(i, i - 1)] = off;
        jac[(i - 1, i)] = off;
    }

    let eig = nalgebra::SymmetricEigen::new(jac);
    // mu0 = integral of the bare weight = 2^(a+b+1) B(a+1, b+1).
    let ln_mu0 = (a + b + 1.0) * std::f64::consts::LN_2 + ln_beta(a + 1.0, b + 1.0);
    let mu0 = ln_mu0.exp();

    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));

    Ok(QuadRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Double-exponential (tanh-sinh) quadrature of `f` over `[a, b]`.
///
/// Converges at the requested relative tolerance for analytic integrands and
/// for integrable endpoint singularities such as `(x-a)^p`, `p > -1`. Points
/// where `f` returns a non-finite value are dropped; with the substitution's
/// double-exponential weight decay this only affects points whose true
/// contribution is below roundoff (e.g. an endpoint singularity hit exactly
/// because `x` rounded to `a` or `b`).
pub fn tanh_sinh(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(b > a) {
        return Err(Error::InvalidParameter(format!(
            "tanh_sinh needs b > a, got [{a}, {b}]"
        )));
    }
    let half = 0.5 * (b - a);

    // x(t) = center + half * tanh(u), u = (pi/2) sinh(t);
    // dx = half * (pi/2) cosh(t) / cosh^2(u) dt.
    let eval = |f: &mut dyn FnMut(f64) -> f64, t: f64| -> f64 {
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        // 1 - |tanh(u)| = 2 exp(-2|u|) / (1 + exp(-2|u|)), computed stably.
        let e = (-2.0 * u.abs()).exp();
        let edge = 2.0 * e / (1.0 + e);
        let x = if t >= 0.0 {
            b - half * edge
        } else {
            a + half * edge
        };
        let w = half * std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        if w == 0.0 {
            return 0.0;
        }
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };

    const T_MAX: f64 = 3.6; // offsets from endpoints reach ~1e-24 of the interval
    const MAX_LEVEL: u32 = 12;

    let mut h = 1.0;
    let mut sum = eval(&mut f, 0.0);
    let mut k = 1;
    while (k as f64) * h <= T_MAX {
        let t = k as f64 * h;
        sum += eval(&mut f, t) + eval(&mut f, -t);
        k += 1;
    }
    let mut estimate = h * sum;

    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        // New points are the odd multiples of the refined step.
        let mut new_sum = 0.0;
        let mut k = 1;
        while (k as f64) * h <= T_MAX {
            let t = k as f64 * h;
            new_sum += eval(&mut f, t) + eval(&mut f, -t);
            k += 2;
        }
        let refined = 0.5 * estimate + h * new_sum;
        let delta = (refined - estimate).abs();
        estimate = refined;
        if _level >= 3 && delta <= rel_tol * estimate.abs() + f64::MIN_POSITIVE {
            return Ok(estimate);
        }
    }
    Err(Error::Precision(format!(
        "tanh_sinh did not reach rel_tol={rel_tol:.1e} within {MAX_LEVEL} levels"
    )))
}

/// `log(sum(exp(x_i)))` computed stably. Returns `-inf` for an empty slice
/// or when every term is `-inf`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m; // empty, all -inf, or a +inf/NaN term dominates
    }
    let s: f64 = terms.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}
