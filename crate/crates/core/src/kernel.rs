//! Exact heat-kernel evaluation for rank-one multiplicities and products of
//! rank-one factors.
//!
//! In rank one with multiplicity `k > 0` the kernel has the integral form
//!
//! ```text
//!   h_t(x, y) = c_k^{-1} (2t)^{-(2k+1)/2} *
//!               integral over s in [-1,1] of exp(-A(s)^2 / 4t) dnu_k(s),
//! ```
//!
//! with `A(s)^2 = x^2 + y^2 - 2xys` and the probability density
//! `dnu_k = c_E (1-s)^{k-1} (1+s)^k ds`. Two evaluation routes are kept
//! deliberately distinct: Gauss–Jacobi rules that absorb the density into
//! their weight (with order escalation 64 -> 512), and plain tanh-sinh
//! integration of the explicit density. The normalization constant is
//! cross-checked against its defining integral at construction time.
//!
//! Products of rank-one factors multiply per coordinate and cover the sign
//! groups `{±1}^N`.

use crate::error::{Error, Result};
use crate::quad::{gauss_jacobi, log_sum_exp, tanh_sinh, QuadRule};
use crate::rootsys::RootSystem;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

/// Smallest and largest Gauss–Jacobi orders tried by the escalation ladder.
pub const BASE_ORDER: usize = 64;
pub const MAX_ORDER: usize = 512;

/// Two quadrature orders "agree" when their log-values differ by at most
/// this (eight significant digits of the value), plus slack proportional to
/// the log magnitude for exponent roundoff. Sized so the harshest sweep
/// point (`|xy|/2t = 5000`, where 256 vs 512 nodes differ by ~2e-9) still
/// converges; every downstream tolerance is 1e-6 or looser.
const LOG_AGREE: f64 = 1e-8;

fn require_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be positive, got t = {t}")));
    }
    Ok(())
}

/// Rank-one evaluator for a fixed multiplicity `k`.
#[derive(Clone, Debug)]
pub struct Rank1Kernel {
    k: f64,
    /// Gauss–Jacobi rules for the weight `(1-s)^{k-1}(1+s)^k`, orders
    /// 64, 128, 256, 512.
    ladder: Vec<QuadRule>,
    /// `ln c_k`, `c_k = 2^{2k + 1/2} Gamma(k + 1/2)`: the Gaussian mass of
    /// the weight `2^k |x|^{2k}`.
    ln_ck: f64,
    /// `ln c_E`, `c_E = Gamma(k+1/2) / (sqrt(pi) Gamma(k))`: normalizer of
    /// the density `(1-s)^{k-1}(1+s)^k`.
    ln_ce: f64,
}

impl Rank1Kernel {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rank-one multiplicity must be positive and finite, got {k}"
            )));
        }
        let mut ladder = Vec::new();
        let mut order = BASE_ORDER;
        while order <= MAX_ORDER {
            ladder.push(gauss_jacobi(order, k - 1.0, k)?);
            order *= 2;
        }
        let ln_ck = (2.0 * k + 0.5) * std::f64::consts::LN_2 + ln_gamma(k + 0.5);
        let ln_ce = ln_gamma(k + 0.5) - 0.5 * std::f64::consts::PI.ln() - ln_gamma(k);
        let kern = Rank1Kernel {
            k,
            ladder,
            ln_ck,
            ln_ce,
        };
        kern.validate_constants()?;
        Ok(kern)
    }

    /// Closed-form constants vs. their defining integrals; a mismatch means a
    /// broken quadrature rule or special-function regression and aborts
    /// construction.
    fn validate_constants(&self) -> Result<()> {
        // c_k = integral of exp(-u^2/2) 2^k |u|^{2k} du over the line.
        let k = self.k;
        let tail = tanh_sinh(
            |u: f64| u.powf(2.0 * k) * (-0.5 * u * u).exp(),
            0.0,
            12.0,
            1e-10,
        )?;
        let ck_quad = 2f64.powf(k + 1.0) * tail;
        let ck = self.ln_ck.exp();
        if ((ck_quad - ck) / ck).abs() > 1e-8 {
            return Err(Error::Precision(format!(
                "normalization mismatch: closed form {ck:.12e} vs integral {ck_quad:.12e}"
            )));
        }
        // the Jacobi rule must integrate the density to total mass 1
        let mass = self.ln_ce.exp() * self.ladder[0].weights.iter().sum::<f64>();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::Precision(format!(
                "density mass {mass:.12e} differs from 1"
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Homogeneous dimension `1 + 2k`.
    pub fn homogeneous_dim(&self) -> f64 {
        1.0 + 2.0 * self.k
    }

    /// `ln c_k`.
    pub fn log_normalization(&self) -> f64 {
        self.ln_ck
    }

    /// `ln` of the density normalizer `c_E`.
    pub fn density_log_norm(&self) -> f64 {
        self.ln_ce
    }

    /// Runs `eval` up the order ladder until two consecutive orders agree.
    fn escalate(&self, eval: impl Fn(&QuadRule) -> f64) -> Result<f64> {
        let mut prev = eval(&self.ladder[0]);
        let mut delta = f64::INFINITY;
        for rule in &self.ladder[1..] {
            let cur = eval(rule);
            delta = (cur - prev).abs();
            if delta <= LOG_AGREE + 1e-14 * cur.abs() {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::Precision(format!(
            "quadrature ladder exhausted at order {MAX_ORDER} (k = {}, last delta {delta:.3e})",
            self.k
        )))
    }

    /// `ln E_k(x, y)`: the positive kernel interpolating between `exp(xy)`
    /// (multiplicity 0) and the Bessel-type even kernel.
    pub fn log_dunkl(&self, x: f64, y: f64) -> Result<f64> {
        let z = x * y;
        self.escalate(|rule| {
            let terms: Vec<f64> = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&s, &w)| w.ln() + z * s)
                .collect();
            self.ln_ce + log_sum_exp(&terms)
        })
    }

    pub fn dunkl(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.log_dunkl(x, y)?.exp())
    }

    /// `ln h_t(x, y)`, evaluated as a single log-sum so the `exp(-A^2/4t)`
    /// factors can reach far below the underflow threshold of `f64`.
    pub fn log_heat(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        require_time(t)?;
        let pref = -self.ln_ck - 0.5 * self.homogeneous_dim() * (2.0 * t).ln();
        let sq = x * x + y * y;
        let z = 2.0 * x * y;
        self.escalate(|rule| {
            let terms: Vec<f64> = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&s, &w)| w.ln() - (sq - z * s) / (4.0 * t))
                .collect();
            pref + self.ln_ce + log_sum_exp(&terms)
        })
    }

    pub fn heat(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        Ok(self.log_heat(x, y, t)?.exp())
    }

    /// `ln h_t(x, y)` through the explicit-density route: tanh-sinh with the
    /// endpoint singularity left in the integrand and the exponential maximum
    /// factored out. Shares no arithmetic with [`Self::log_heat`] beyond the
    /// normalizing constants.
    pub fn log_heat_density(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        require_time(t)?;
        let pref = -self.ln_ck - 0.5 * self.homogeneous_dim() * (2.0 * t).ln();
        if x == 0.0 {
            // the measure on the orbit hull degenerates to the point mass at 0
            return Ok(pref - (x * x + y * y) / (4.0 * t));
        }
        let k = self.k;
        // Integrate in u = 1 - s over [0, 2]. The singular factor u^{k-1}
        // then takes the abscissa directly; computing 1 - s near s = 1 would
        // halve its significant digits and leave a ~sqrt(eps) noise floor
        // under the k < 1 integrals. A^2 - min(A^2) is linear with its zero
        // at u = 0 (x y >= 0) or u = 2 (x y < 0), both exact in u.
        let (m, q): (f64, Box<dyn Fn(f64) -> f64>) = if x * y >= 0.0 {
            (
                (x - y) * (x - y),
                Box::new(move |u: f64| x * y * u / (2.0 * t)),
            )
        } else {
            let c = -x * y / (2.0 * t);
            ((x + y) * (x + y), Box::new(move |u: f64| c * (2.0 - u)))
        };
        let integral = tanh_sinh(
            |u: f64| (-q(u)).exp() * u.powf(k - 1.0) * (2.0 - u).powf(k),
            0.0,
            2.0,
            1e-11,
        )?;
        Ok(pref + self.ln_ce - m / (4.0 * t) + integral.ln())
    }

    pub fn heat_density(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        Ok(self.log_heat_density(x, y, t)?.exp())
    }

    /// Mass of the orbit-hull region `U(sigma(x), t) = {eta : x^2 -
    /// <sigma(x), eta> <= t}` under the measure representing the kernel at
    /// base point `x`. In rank one this is a regularized incomplete beta
    /// function; `flip` selects the nontrivial group element.
    pub fn mu_measure_u(&self, x: f64, flip: bool, t: f64) -> Result<f64> {
        require_time(t)?;
        if x == 0.0 {
            return Ok(1.0);
        }
        let u = (t / (2.0 * x * x)).min(1.0);
        let v = if flip {
            beta_reg(self.k + 1.0, self.k, u)
        } else {
            beta_reg(self.k, self.k + 1.0, u)
        };
        Ok(v)
    }

    /// Log of the second-moment integral of the representing measure,
    /// `c_k^{-1} (2t)^{-hom/2} * integral (A^2/t) e^{-A^2/4t} dnu` — the
    /// `4t I_2` term of the exchange identity, evaluated on the same
    /// escalating quadrature ladder as the kernel itself.
    pub fn log_moment_integral(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        require_time(t)?;
        let sq = x * x + y * y;
        let z = 2.0 * x * y;
        if sq == 0.0 {
            // A^2 vanishes identically; the moment integral is zero.
            return Ok(f64::NEG_INFINITY);
        }
        let pref = -self.ln_ck - 0.5 * self.homogeneous_dim() * (2.0 * t).ln();
        self.escalate(|rule| {
            let terms: Vec<f64> = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&s, &w)| {
                    let a2 = sq - z * s;
                    // a2 = 0 contributes nothing; ln gives -inf as intended
                    w.ln() + (a2 / t).ln() - a2 / (4.0 * t)
                })
                .collect();
            pref + self.ln_ce + log_sum_exp(&terms)
        })
    }

    /// Relative residual of the exchange identity tying the kernel to its
    /// reflected values and the second moment of the representing measure:
    ///
    /// ```text
    ///   (2 hom - 2 + (x-y)^2/t) h_t(x,y)
    ///     = c_k^{-1} (2t)^{-hom/2} * integral (A^2/t) e^{-A^2/4t} dnu
    ///       + 4k h_t(x, -y).
    /// ```
    ///
    /// The residual is normalized by the (always positive) left side.
    pub fn check_basic_identity(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        require_time(t)?;
        let hom = self.homogeneous_dim();
        let lhs_factor = 2.0 * hom - 2.0 + (x - y) * (x - y) / t;
        let h = self.heat(x, y, t)?;
        let h_flip = self.heat(x, -y, t)?;
        let log_moment = self.log_moment_integral(x, y, t)?;
        let lhs = lhs_factor * h;
        let rhs = log_moment.exp() + 4.0 * self.k * h_flip;
        Ok((lhs - rhs).abs() / lhs)
    }
}

/// Kernel for a product of rank-one factors on orthogonal axes — the heat
/// kernel of the sign-flip group `{±1}^N` with per-axis multiplicities.
#[derive(Clone, Debug)]
pub struct ProductKernel {
    factors: Vec<Rank1Kernel>,
}

impl ProductKernel {
    pub fn new(k: &[f64]) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::InvalidParameter(
                "product kernel needs at least one factor".into(),
            ));
        }
        let factors = k
            .iter()
            .map(|&ki| Rank1Kernel::new(ki))
            .collect::<Result<_>>()?;
        Ok(ProductKernel { factors })
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Rank1Kernel] {
        &self.factors
    }

    pub fn homogeneous_dim(&self) -> f64 {
        self.factors.iter().map(|f| f.homogeneous_dim()).sum()
    }

    fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "points of dimension {}/{} fed to a {}-dimensional kernel",
                x.len(),
                y.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn log_heat(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        self.check_dims(x, y)?;
        let mut acc = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            acc += f.log_heat(x[i], y[i], t)?;
        }
        Ok(acc)
    }

    pub fn heat(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        Ok(self.log_heat(x, y, t)?.exp())
    }

    /// Independent-route product evaluation (per-factor tanh-sinh).
    pub fn log_heat_density(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        self.check_dims(x, y)?;
        let mut acc = 0.0;
        for (i, f) in self.factors.iter().enumerate() {
            acc += f.log_heat_density(x[i], y[i], t)?;
        }
        Ok(acc)
    }

    /// Relative residual (in units of `h_t/t`) of the time-derivative
    /// identity
    ///
    /// ```text
    ///   d/dt h_t(x,y) = |x-y|^2/(4t^2) h_t(x,y) - N/(2t) h_t(x,y)
    ///                   - 1/(2t) * sum over roots k(a) h_t(x, sigma_a(y)),
    /// ```
    ///
    /// where the root sum doubles each axis flip (both signs of the root).
    /// The derivative is a central difference with step `1e-4 t`.
    pub fn check_time_derivative(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        self.check_dims(x, y)?;
        require_time(t)?;
        let dt = 1e-4 * t;
        let lhs = (self.heat(x, y, t + dt)? - self.heat(x, y, t - dt)?) / (2.0 * dt);
        let h = self.heat(x, y, t)?;
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        let n = self.dim() as f64;
        let mut refl = 0.0;
        for i in 0..self.dim() {
            let mut yf = y.to_vec();
            yf[i] = -yf[i];
            refl += 2.0 * self.factors[i].k() * self.heat(x, &yf, t)?;
        }
        let rhs = d2 / (4.0 * t * t) * h - n / (2.0 * t) * h - refl / (2.0 * t);
        Ok((lhs - rhs).abs() * t / h)
    }

    /// Relative residual of the multivariate exchange identity
    ///
    /// ```text
    ///   (2 hom - 2 N + |x-y|^2/t) h_t(x,y)
    ///     = 4t I_2 + 2 sum over roots k(a) h_t(x, sigma_a(y)),
    /// ```
    ///
    /// where `4t I_2` splits over the factors: each axis contributes its
    /// one-dimensional moment integral times the kernel of the remaining
    /// axes, and the root sum doubles each axis flip.
    pub fn check_basic_identity(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        self.check_dims(x, y)?;
        require_time(t)?;
        let hom = self.homogeneous_dim();
        let n = self.dim() as f64;
        let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        let h = self.heat(x, y, t)?;
        let lhs = (2.0 * hom - 2.0 * n + d2 / t) * h;
        let mut rhs = 0.0;
        for i in 0..self.dim() {
            let mut log_term = self.factors[i].log_moment_integral(x[i], y[i], t)?;
            for (j, f) in self.factors.iter().enumerate() {
                if j != i {
                    log_term += f.log_heat(x[j], y[j], t)?;
                }
            }
            rhs += log_term.exp();
            let mut yf = y.to_vec();
            yf[i] = -yf[i];
            rhs += 4.0 * self.factors[i].k() * self.heat(x, &yf, t)?;
        }
        Ok((lhs - rhs).abs() / lhs)
    }
}

/// Uniform evaluation interface over the interchangeable kernel backends.
/// The grid-based solver provides its own implementor in the PDE module.
pub trait HeatEval {
    fn dim(&self) -> usize;
    fn log_heat_at(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64>;
}

impl HeatEval for ProductKernel {
    fn dim(&self) -> usize {
        self.dim()
    }
    fn log_heat_at(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        self.log_heat(x, y, t)
    }
}

/// The rank-one explicit-density route as a standalone backend.
#[derive(Clone, Debug)]
pub struct DensityBackend(pub Rank1Kernel);

impl HeatEval for DensityBackend {
    fn dim(&self) -> usize {
        1
    }
    fn log_heat_at(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        self.0.log_heat_density(x[0], y[0], t)
    }
}

/// `integral of h_t(x, z) dw(z)` in rank one; 1 when the kernel is correctly
/// normalized. Quadrature truncates where the Gaussian tail is negligible.
pub fn mass_integral_1d(kern: &Rank1Kernel, x: f64, t: f64) -> Result<f64> {
    require_time(t)?;
    let k = kern.k();
    let lim = x.abs() + 16.0 * t.sqrt().max(1e-3);
    let f = |z: f64| {
        let w = 2f64.powf(k) * z.abs().powf(2.0 * k);
        kern.heat(x, z, t).map(|h| h * w).unwrap_or(f64::NAN)
    };
    let left = tanh_sinh(f, -lim, 0.0, 1e-9)?;
    let right = tanh_sinh(f, 0.0, lim, 1e-9)?;
    Ok(left + right)
}

/// `integral of h_s(x, z) h_t(z, y) dw(z)` in rank one; equals
/// `h_{s+t}(x, y)` by the semigroup property.
pub fn semigroup_integral_1d(kern: &Rank1Kernel, x: f64, y: f64, s: f64, t: f64) -> Result<f64> {
    require_time(s)?;
    require_time(t)?;
    let k = kern.k();
    let lim = x.abs().max(y.abs()) + 16.0 * s.max(t).sqrt().max(1e-3);
    let f = |z: f64| {
        let w = 2f64.powf(k) * z.abs().powf(2.0 * k);
        match (kern.heat(x, z, s), kern.heat(z, y, t)) {
            (Ok(a), Ok(b)) => a * b * w,
            _ => f64::NAN,
        }
    };
    let left = tanh_sinh(f, -lim, 0.0, 1e-9)?;
    let right = tanh_sinh(f, 0.0, lim, 1e-9)?;
    Ok(left + right)
}

/// Finite-difference application of the weighted Laplacian
///
/// ```text
///   L f(x) = (Laplace f)(x) + sum over roots k(a) *
///            [ <grad f(x), a> / <a, x> - (f(x) - f(sigma_a x)) / <a, x>^2 ]
/// ```
///
/// (roots of squared norm 2). Second-order central differences with step
/// `step`; refuses points closer than `step / 2` to a reflection wall, where
/// the difference quotient against the mirror image loses all accuracy.
pub fn dunkl_laplacian(
    rs: &RootSystem,
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    step: f64,
) -> Result<f64> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!("bad step {step}")));
    }
    if x.len() != rs.dim() {
        return Err(Error::InvalidParameter(format!(
            "point of dimension {} fed to a {}-dimensional system",
            x.len(),
            rs.dim()
        )));
    }
    let min = 0.5 * step;
    let wall = rs.wall_distance(x);
    if wall < min {
        return Err(Error::WallProximity { dist: wall, min });
    }

    let fx = f(x);
    let mut lap = 0.0;
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + step;
        let fp = f(&xp);
        xp[i] = orig - step;
        let fm = f(&xp);
        xp[i] = orig;
        lap += (fp - 2.0 * fx + fm) / (step * step);
    }

    let mut refl = 0.0;
    for (r, a) in rs.roots().iter().enumerate() {
        let ax = crate::rootsys::dot(a, x);
        // directional derivative along the root
        let na = crate::rootsys::dot(a, a).sqrt();
        let xu: Vec<f64> = x
            .iter()
            .zip(a)
            .map(|(xi, ai)| xi + step * ai / na)
            .collect();
        let xd: Vec<f64> = x
            .iter()
            .zip(a)
            .map(|(xi, ai)| xi - step * ai / na)
            .collect();
        let da = na * (f(&xu) - f(&xd)) / (2.0 * step);
        let mirror = rs.reflect(r, x);
        refl += rs.mult(r) * (da / ax - (fx - f(&mirror)) / (ax * ax));
    }
    Ok(lap + refl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Kummer's confluent hypergeometric M(a, b, z) by plain series; test
    /// oracle only, accurate for moderate positive z.
    fn kummer_m(a: f64, b: f64, z: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 0..200 {
            let nf = n as f64;
            term *= (a + nf) * z / ((b + nf) * (nf + 1.0));
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    }

    #[test]
    fn construction_validates_inputs_and_constants() {
        assert!(Rank1Kernel::new(0.0).is_err());
        assert!(Rank1Kernel::new(-1.0).is_err());
        assert!(Rank1Kernel::new(f64::NAN).is_err());
        for k in [0.1, 0.5, 1.0, 2.3, 5.0] {
            let kern = Rank1Kernel::new(k).unwrap();
            assert_relative_eq!(kern.homogeneous_dim(), 1.0 + 2.0 * k);
        }
    }

    #[test]
    fn dunkl_kernel_special_values() {
        let kern = Rank1Kernel::new(1.3).unwrap();
        // E(x, 0) = E(0, y) = 1
        assert_relative_eq!(kern.dunkl(1.7, 0.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(kern.dunkl(0.0, -2.0).unwrap(), 1.0, max_relative = 1e-12);
        // symmetry and positivity
        let a = kern.dunkl(1.1, 2.3).unwrap();
        let b = kern.dunkl(2.3, 1.1).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        assert!(kern.dunkl(-3.0, 2.0).unwrap() > 0.0);
    }

    #[test]
    fn dunkl_kernel_matches_hypergeometric_series() {
        // E_k(x, y) = exp(-xy) M(k+1, 2k+1, 2xy)
        for &(k, x, y) in &[(0.5, 0.7, 1.1), (1.0, 1.5, 2.0), (2.3, 0.3, -2.5)] {
            let kern = Rank1Kernel::new(k).unwrap();
            let z: f64 = x * y;
            // use the positive-argument form for an all-positive series
            let expect = if z >= 0.0 {
                (-z).exp() * kummer_m(k + 1.0, 2.0 * k + 1.0, 2.0 * z)
            } else {
                z.exp() * kummer_m(k, 2.0 * k + 1.0, -2.0 * z)
            };
            assert_relative_eq!(kern.dunkl(x, y).unwrap(), expect, max_relative = 1e-11);
        }
    }

    #[test]
    fn dunkl_kernel_small_multiplicity_limit() {
        // k -> 0 degenerates to exp(xy)
        let kern = Rank1Kernel::new(1e-6).unwrap();
        let (x, y) = (1.2, -0.7);
        assert_relative_eq!(
            kern.dunkl(x, y).unwrap(),
            (x * y).exp(),
            max_relative = 1e-4
        );
    }

    #[test]
    fn dunkl_kernel_satisfies_its_operator_equation() {
        // T_x E(x, y) = y E(x, y) with T f = f' + k (f(x) - f(-x)) / x
        let k = 1.5;
        let kern = Rank1Kernel::new(k).unwrap();
        let (x, y) = (0.7, 1.3);
        let h = 1e-5;
        let e = |x: f64| kern.dunkl(x, y).unwrap();
        let deriv = (e(x + h) - e(x - h)) / (2.0 * h);
        let t_op = deriv + k * (e(x) - e(-x)) / x;
        assert_relative_eq!(t_op, y * e(x), max_relative = 1e-6);
    }

    #[test]
    fn heat_kernel_classical_limit() {
        // k -> 0: h_t collapses to the Gaussian kernel
        let kern = Rank1Kernel::new(1e-6).unwrap();
        let (x, y, t): (f64, f64, f64) = (1.5, 0.5, 0.8);
        let gauss =
            (4.0 * std::f64::consts::PI * t).powf(-0.5) * (-(x - y) * (x - y) / (4.0 * t)).exp();
        assert_relative_eq!(kern.heat(x, y, t).unwrap(), gauss, max_relative = 1e-4);
    }

    #[test]
    fn heat_kernel_is_symmetric_positive_and_needs_positive_time() {
        let kern = Rank1Kernel::new(0.8).unwrap();
        let a = kern.heat(1.4, -0.3, 0.6).unwrap();
        let b = kern.heat(-0.3, 1.4, 0.6).unwrap();
        assert!(a > 0.0);
        assert_relative_eq!(a, b, max_relative = 1e-12);
        assert!(kern.heat(1.0, 1.0, 0.0).is_err());
        assert!(kern.heat(1.0, 1.0, -2.0).is_err());
        assert!(kern.log_heat(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn heat_kernel_survives_extreme_exponents_in_log_space() {
        let kern = Rank1Kernel::new(1.0).unwrap();
        // |x - y|^2 / t = 40000: the linear value underflows, the log must not
        let lh = kern.log_heat(10.0, -10.0, 0.01);
        // x and -10 are in the same orbit: moderate value
        assert!(lh.unwrap().is_finite());
        let lh2 = kern.log_heat(10.0, 0.0, 0.005).unwrap();
        assert!(lh2.is_finite() && lh2 < -4000.0);
    }

    #[test]
    fn both_evaluation_routes_agree() {
        let triples = [
            (0.5, 0.3, 1.9, 0.4),
            (1.0, -1.2, 2.4, 1.3),
            (2.3, 2.0, -2.0, 0.05),
            (1.7, 0.0, 1.0, 2.0),
            (0.9, 3.0, 3.0, 10.0),
        ];
        for &(k, x, y, t) in &triples {
            let kern = Rank1Kernel::new(k).unwrap();
            let a = kern.log_heat(x, y, t).unwrap();
            let b = kern.log_heat_density(x, y, t).unwrap();
            assert!(
                ((a - b).exp() - 1.0).abs() < 1e-8,
                "routes disagree at k={k}, x={x}, y={y}, t={t}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn mass_and_semigroup_integrals() {
        let kern = Rank1Kernel::new(1.0).unwrap();
        assert_relative_eq!(
            mass_integral_1d(&kern, 2.0, 0.5).unwrap(),
            1.0,
            max_relative = 1e-6
        );
        let kern2 = Rank1Kernel::new(0.6).unwrap();
        assert_relative_eq!(
            mass_integral_1d(&kern2, -0.7, 3.0).unwrap(),
            1.0,
            max_relative = 1e-6
        );
        let (x, y, s, t) = (0.8, -0.4, 0.25, 0.25);
        let conv = semigroup_integral_1d(&kern, x, y, s, t).unwrap();
        assert_relative_eq!(conv, kern.heat(x, y, s + t).unwrap(), max_relative = 1e-6);
    }

    #[test]
    fn measure_of_the_near_region_is_an_incomplete_beta() {
        let kern = Rank1Kernel::new(0.5).unwrap();
        // quadrature oracle: integral of the density over the matching
        // s-interval
        let k = kern.k();
        let ce = kern.density_log_norm().exp();
        let x: f64 = 3.0;
        for t in [0.5, 2.0, 7.0, 30.0] {
            let smin = (1.0 - t / (x * x)).max(-1.0);
            let direct = if smin >= 1.0 {
                0.0
            } else {
                tanh_sinh(
                    |s: f64| ce * (1.0 - s).powf(k - 1.0) * (1.0 + s).powf(k),
                    smin,
                    1.0,
                    1e-9,
                )
                .unwrap()
            };
            assert_relative_eq!(
                kern.mu_measure_u(x, false, t).unwrap(),
                direct,
                max_relative = 1e-6
            );
            let smax = (t / (x * x) - 1.0).min(1.0);
            let direct_flip = if smax <= -1.0 {
                0.0
            } else {
                tanh_sinh(
                    |s: f64| ce * (1.0 - s).powf(k - 1.0) * (1.0 + s).powf(k),
                    -1.0,
                    smax,
                    1e-9,
                )
                .unwrap()
            };
            assert_relative_eq!(
                kern.mu_measure_u(x, true, t).unwrap(),
                direct_flip,
                max_relative = 1e-6
            );
        }
        // saturation: whole hull once t >= 2 x^2
        assert_relative_eq!(kern.mu_measure_u(1.0, false, 2.0).unwrap(), 1.0);
        assert_relative_eq!(kern.mu_measure_u(1.0, true, 2.0).unwrap(), 1.0);
        assert_relative_eq!(kern.mu_measure_u(0.0, true, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn time_derivative_identity_rank_one() {
        let kern = ProductKernel::new(&[1.0]).unwrap();
        let res = kern.check_time_derivative(&[1.5], &[0.5], 1.0).unwrap();
        assert!(res < 1e-6, "residual {res}");
    }

    #[test]
    fn time_derivative_identity_in_the_plane() {
        let kern = ProductKernel::new(&[0.7, 1.8]).unwrap();
        for (x, y, t) in [
            ([1.2, -0.4], [0.3, 0.9], 0.5),
            ([2.0, 1.0], [-1.0, 2.0], 2.0),
            ([0.0, 0.5], [0.5, 0.0], 1.0),
        ] {
            let res = kern.check_time_derivative(&x, &y, t).unwrap();
            assert!(res < 1e-5, "residual {res} at {x:?} {y:?} t={t}");
        }
    }

    #[test]
    fn basic_identity_rank_one() {
        let kern = Rank1Kernel::new(1.0).unwrap();
        for (x, y, t) in [(1.5, 0.5, 1.0), (0.3, -1.1, 0.4), (2.0, 2.0, 3.0)] {
            let res = kern.check_basic_identity(x, y, t).unwrap();
            assert!(res < 1e-6, "residual {res} at x={x}, y={y}, t={t}");
        }
        // coincident points: left side collapses to 2(hom - 1) h_t
        let kern = Rank1Kernel::new(2.3).unwrap();
        let res = kern.check_basic_identity(1.2, 1.2, 0.7).unwrap();
        assert!(res < 1e-6, "residual {res}");
    }

    #[test]
    fn basic_identity_on_the_plane() {
        let kern = ProductKernel::new(&[1.0, 0.5]).unwrap();
        for (x, y, t) in [
            ([1.5, 0.5], [0.5, -1.0], 1.0),
            ([0.3, 2.0], [-1.1, 1.2], 0.4),
            ([0.0, 1.0], [0.0, 1.0], 2.0),
        ] {
            let res = kern.check_basic_identity(&x, &y, t).unwrap();
            assert!(res < 1e-6, "residual {res} at {x:?} {y:?} t={t}");
        }
    }

    #[test]
    fn product_kernel_multiplies_factors() {
        let kern = ProductKernel::new(&[1.0, 0.5]).unwrap();
        let f0 = Rank1Kernel::new(1.0).unwrap();
        let f1 = Rank1Kernel::new(0.5).unwrap();
        let (x, y, t) = ([1.1, -0.6], [0.4, 2.0], 0.9);
        assert_relative_eq!(
            kern.log_heat(&x, &y, t).unwrap(),
            f0.log_heat(x[0], y[0], t).unwrap() + f1.log_heat(x[1], y[1], t).unwrap(),
            epsilon = 1e-13
        );
        assert!(kern.heat(&[1.0], &[1.0, 2.0], 0.5).is_err());
        assert!(ProductKernel::new(&[]).is_err());
    }

    #[test]
    fn laplacian_reproduces_flat_and_quadratic_data() {
        let rs = RootSystem::product_a1(&[1.0, 0.5]).unwrap();
        let x = [0.8, -1.3];
        let c = dunkl_laplacian(&rs, &|_: &[f64]| 3.5, &x, 1e-3).unwrap();
        assert!(c.abs() < 1e-7, "constant gave {c}");
        let q = dunkl_laplacian(&rs, &|p: &[f64]| p.iter().map(|v| v * v).sum(), &x, 1e-3).unwrap();
        assert_relative_eq!(q, 2.0 * rs.homogeneous_dim(), max_relative = 1e-7);
    }

    #[test]
    fn laplacian_respects_wall_guard() {
        let rs = RootSystem::product_a1(&[1.0]).unwrap();
        let err = dunkl_laplacian(&rs, &|_: &[f64]| 0.0, &[1e-6], 0.01).unwrap_err();
        assert!(matches!(err, Error::WallProximity { .. }));
    }

    #[test]
    fn laplacian_generates_the_heat_flow() {
        // d/dt h = L h in the second argument
        let rs = RootSystem::product_a1(&[1.3]).unwrap();
        let kern = ProductKernel::new(&[1.3]).unwrap();
        let (x0, t) = (0.9, 0.7);
        let y = [1.7];
        let f = |p: &[f64]| kern.heat(&[x0], p, t).unwrap();
        let lap = dunkl_laplacian(&rs, &f, &y, 4e-3).unwrap();
        let dt = 1e-5;
        let ddt = (kern.heat(&[x0], &y, t + dt).unwrap() - kern.heat(&[x0], &y, t - dt).unwrap())
            / (2.0 * dt);
        assert_relative_eq!(lap, ddt, max_relative = 1e-4);
    }

    #[test]
    fn heat_eval_backends_share_an_interface() {
        let product = ProductKernel::new(&[1.0]).unwrap();
        let density = DensityBackend(Rank1Kernel::new(1.0).unwrap());
        let (x, y, t) = ([0.7], [-1.1], 0.6);
        let a = HeatEval::log_heat_at(&product, &x, &y, t).unwrap();
        let b = density.log_heat_at(&x, &y, t).unwrap();
        assert!(((a - b).exp() - 1.0).abs() < 1e-8);
        assert_eq!(HeatEval::dim(&product), 1);
    }
}
