//! Reproducible sweep drivers: every check the command-line tool and the
//! acceptance suite run lives here as a pure function from a serializable
//! configuration to a tabular report.
//!
//! Conventions shared by all drivers:
//!
//! * sweeps iterate in a fixed, documented order, and any randomness comes
//!   from a seeded generator carried in the config, so equal configs produce
//!   equal reports;
//! * inequalities that hold up to an existence constant are *measured*: the
//!   report records the empirical constant (the sup of the bounded side over
//!   the bounding side) and passes when it is finite, alongside any explicit
//!   tolerance the check carries;
//! * `rows` hold one record per sweep point for CSV export; they and the
//!   wall-time field are skipped during serialization so that summaries stay
//!   deterministic.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    exact_ball_volume, lambda_bruteforce, lambda_dihedral, lambda_dp, lambda_table, log_envelope,
    log_volume_comparable, volume_comparable, LambdaMode,
};
use crate::error::{Error, Result};
use crate::kernel::{mass_integral_1d, semigroup_integral_1d, ProductKernel, Rank1Kernel};
use crate::pde::{GridSpec, Solver};
use crate::quad::tanh_sinh;
use crate::rootsys::{dist, orbit_distance, Family, ReflectionGroup, RootSystem, SystemConfig};

/// `n` evenly spaced values covering `[a, b]` inclusively.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// `n` geometrically spaced values covering `[a, b]` inclusively; `a, b > 0`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Cartesian power of a coordinate list, in lexicographic order.
fn cartesian(coords: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..dim {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                coords.iter().map(move |&c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    pts
}

/// Point rendered for a CSV cell, coordinates joined by `;`.
fn fmt_point(p: &[f64]) -> String {
    p.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Human-readable label for a system config, used as a row key.
pub fn system_label(sc: &SystemConfig) -> String {
    match sc {
        SystemConfig::ProductA1 { k } => format!(
            "product_a1({})",
            k.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        SystemConfig::Dihedral { m, k_even, k_odd } => {
            format!("dihedral(m={m},k={k_even}/{k_odd})")
        }
    }
}

/// Exact product-kernel evaluator for a product root system.
fn product_kernel(rs: &RootSystem) -> Result<ProductKernel> {
    match rs.family() {
        Family::ProductA1 => {
            let k: Vec<f64> = (0..rs.dim()).map(|i| rs.mult(i)).collect();
            ProductKernel::new(&k)
        }
        _ => Err(Error::NotApplicable(
            "exact kernel evaluation requires a product system".into(),
        )),
    }
}

/// Mean of `dev` over the top `frac` quantile (after sorting by the first
/// component) minus the mean over the adjacent quantile below it. A
/// systematic drift of the deviation at the extreme of the sweep shows up as
/// a large gap; random scatter averages out.
fn tail_trend_gap(mut pairs: Vec<(f64, f64)>, frac: f64) -> Option<f64> {
    let n = pairs.len();
    let k = ((n as f64 * frac) as usize).max(1);
    if n < 2 * k {
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mean = |s: &[(f64, f64)]| s.iter().map(|p| p.1).sum::<f64>() / s.len() as f64;
    Some(mean(&pairs[n - k..]) - mean(&pairs[n - 2 * k..n - k]))
}

fn bits_key(x: &[f64], t: f64) -> (Vec<u64>, u64) {
    (x.iter().map(|v| v.to_bits()).collect(), t.to_bits())
}

// ---------------------------------------------------------------------------
// Sandwich sweep: kernel between its two-sided envelopes
// ---------------------------------------------------------------------------

/// Sweep configuration for the two-sided envelope comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub system: SystemConfig,
    /// Points per coordinate axis over `[-coord_max, coord_max]`.
    pub coord_points: usize,
    pub coord_max: f64,
    /// Times, geometrically spaced over `[t_min, t_max]`.
    pub t_points: usize,
    pub t_min: f64,
    pub t_max: f64,
    /// Decay rate of the upper envelope; must be below 1/4.
    pub c_upper: f64,
    /// Decay rate of the lower envelope; must be above 1/4.
    pub c_lower: f64,
    /// Rows with `|x-y|^2/t` beyond this are skipped, bounding the exponent
    /// range the sweep exercises.
    pub s_max: f64,
    /// Quantile width for the tail trend test.
    pub trend_tail: f64,
    /// Largest tolerated drift (in log units) between adjacent tail
    /// quantiles of the deviation.
    pub trend_max_gap: f64,
}

impl BoundsConfig {
    /// Rank-one sweep: 41 x 41 positions x 17 times, exponents up to 400.
    pub fn rank_one() -> Self {
        BoundsConfig {
            system: SystemConfig::ProductA1 { k: vec![1.0] },
            coord_points: 41,
            coord_max: 10.0,
            t_points: 17,
            t_min: 1e-2,
            t_max: 1e2,
            c_upper: 0.2,
            c_lower: 0.3,
            s_max: 400.0,
            trend_tail: 0.1,
            trend_max_gap: std::f64::consts::LN_2,
        }
    }

    /// Sign-flip plane sweep: 7 x 7 positions per axis pair, 17 times.
    pub fn plane() -> Self {
        BoundsConfig {
            system: SystemConfig::ProductA1 { k: vec![1.0, 0.5] },
            coord_points: 7,
            coord_max: 6.0,
            ..BoundsConfig::rank_one()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c_upper > 0.0 && self.c_upper < 0.25) {
            return Err(Error::Config(format!(
                "upper envelope rate must sit in (0, 1/4), got {}",
                self.c_upper
            )));
        }
        if !(self.c_lower > 0.25) || !self.c_lower.is_finite() {
            return Err(Error::Config(format!(
                "lower envelope rate must exceed 1/4, got {}",
                self.c_lower
            )));
        }
        if self.coord_points < 2 || self.t_points < 2 {
            return Err(Error::Config(
                "sweep needs at least 2 points per axis".into(),
            ));
        }
        if !(self.t_min > 0.0 && self.t_max > self.t_min) {
            return Err(Error::Config(format!(
                "bad time range [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if !(self.s_max > 0.0) {
            return Err(Error::Config(format!("bad exponent cap {}", self.s_max)));
        }
        if !(self.trend_tail > 0.0 && self.trend_tail <= 0.25) {
            return Err(Error::Config(format!(
                "trend quantile must sit in (0, 1/4], got {}",
                self.trend_tail
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsRow {
    pub x: String,
    pub y: String,
    pub t: f64,
    /// `|x-y|^2 / t`.
    pub s: f64,
    pub log_h: f64,
    /// `log h - log envelope(c_upper)`; bounded above when the upper bound holds.
    pub dev_upper: f64,
    /// `log h - log envelope(c_lower)`; bounded below when the lower bound holds.
    pub dev_lower: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub config: BoundsConfig,
    pub points: usize,
    pub sup_dev_upper: f64,
    pub inf_dev_lower: f64,
    pub trend_gap_upper: f64,
    pub trend_gap_lower: f64,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<BoundsRow>,
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Evaluates the kernel against both envelopes over a position/time grid and
/// measures the admissible constants. Passing means: every deviation is
/// finite, and the deviations show no systematic drift between the two top
/// quantiles of `|x-y|^2/t` (the envelopes neither win nor lose ground as
/// the Gaussian regime takes over).
pub fn run_verify_bounds(cfg: &BoundsConfig) -> Result<BoundsReport> {
    cfg.validate()?;
    let start = Instant::now();
    let rs = cfg.system.build()?;
    let group = ReflectionGroup::generate(&rs)?;
    let kern = product_kernel(&rs)?;
    let coords = linspace(-cfg.coord_max, cfg.coord_max, cfg.coord_points);
    let pts = cartesian(&coords, rs.dim());
    let ts = logspace(cfg.t_min, cfg.t_max, cfg.t_points);

    let mut tasks = Vec::new();
    for &t in &ts {
        for x in &pts {
            for y in &pts {
                let s = dist(x, y).powi(2) / t;
                if s <= cfg.s_max {
                    tasks.push((t, x, y, s));
                }
            }
        }
    }
    // pure per-point evaluations; collect preserves task order, so the row
    // order (and thus the emitted report) is independent of thread count
    let rows = tasks
        .into_par_iter()
        .map(|(t, x, y, s)| -> Result<BoundsRow> {
            let log_h = kern.log_heat(x, y, t)?;
            let env_u = log_envelope(&rs, &group, x, y, t, cfg.c_upper, LambdaMode::Dp)?;
            let env_l = log_envelope(&rs, &group, x, y, t, cfg.c_lower, LambdaMode::Dp)?;
            Ok(BoundsRow {
                x: fmt_point(x),
                y: fmt_point(y),
                t,
                s,
                log_h,
                dev_upper: log_h - env_u,
                dev_lower: log_h - env_l,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::Config(
            "sweep produced no rows; relax s_max or the grids".into(),
        ));
    }
    let mut sup_u = f64::NEG_INFINITY;
    let mut inf_l = f64::INFINITY;
    let mut failures = Vec::new();
    for row in &rows {
        if !row.dev_upper.is_finite() || !row.dev_lower.is_finite() {
            failures.push(format!(
                "non-finite deviation at x={} y={} t={}",
                row.x, row.y, row.t
            ));
        }
        sup_u = sup_u.max(row.dev_upper);
        inf_l = inf_l.min(row.dev_lower);
    }

    let gap_u = tail_trend_gap(
        rows.iter().map(|r| (r.s, r.dev_upper)).collect(),
        cfg.trend_tail,
    )
    .unwrap_or(f64::NAN);
    let gap_l = tail_trend_gap(
        rows.iter().map(|r| (r.s, r.dev_lower)).collect(),
        cfg.trend_tail,
    )
    .unwrap_or(f64::NAN);
    if !sup_u.is_finite() {
        failures.push(format!("upper deviation unbounded: sup = {sup_u}"));
    }
    if !inf_l.is_finite() {
        failures.push(format!("lower deviation unbounded: inf = {inf_l}"));
    }
    if !(gap_u <= cfg.trend_max_gap) {
        failures.push(format!(
            "upper deviation drifts by {gap_u:.3} log units across the top quantiles (max {})",
            cfg.trend_max_gap
        ));
    }
    if !(gap_l >= -cfg.trend_max_gap) {
        failures.push(format!(
            "lower deviation drifts by {gap_l:.3} log units across the top quantiles (max {})",
            cfg.trend_max_gap
        ));
    }

    let mut constants = BTreeMap::new();
    constants.insert("envelope_upper".into(), sup_u.exp());
    constants.insert("envelope_lower".into(), (-inf_l).exp());
    Ok(BoundsReport {
        config: cfg.clone(),
        points: rows.len(),
        sup_dev_upper: sup_u,
        inf_dev_lower: inf_l,
        trend_gap_upper: gap_u,
        trend_gap_lower: gap_l,
        constants,
        pass: failures.is_empty(),
        failures,
        rows,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Lambda cross-check: dynamic program vs exhaustive enumeration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaConfig {
    pub systems: Vec<SystemConfig>,
    /// Random triples per system.
    pub triples: usize,
    /// Word-length horizon shared by both evaluators.
    pub max_len: usize,
    pub coord_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub seed: u64,
    /// Relative agreement required between the two evaluators.
    pub tol: f64,
    /// Slack on the structural band of the closed-form/word-sum ratio for
    /// dihedral systems. Near the diagonal the word sum approaches the count
    /// of admissible sequences while the closed form normalizes to one, so
    /// the ratio is gated inside `(1 / (slack * count_bound), slack)` with a
    /// per-system combinatorial `count_bound`.
    pub dihedral_ratio_slack: f64,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        LambdaConfig {
            systems: vec![
                SystemConfig::ProductA1 { k: vec![1.0] },
                SystemConfig::ProductA1 { k: vec![0.8, 1.3] },
                SystemConfig::Dihedral {
                    m: 3,
                    k_even: 1.0,
                    k_odd: 1.0,
                },
                SystemConfig::Dihedral {
                    m: 4,
                    k_even: 1.0,
                    k_odd: 0.6,
                },
            ],
            triples: 1000,
            max_len: 5,
            coord_max: 3.0,
            t_min: 0.1,
            t_max: 10.0,
            seed: 0x5eed,
            tol: 1e-12,
            dihedral_ratio_slack: 10.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaRow {
    pub system: String,
    pub x: String,
    pub y: String,
    pub t: f64,
    pub dp: f64,
    pub brute: f64,
    pub rel: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaReport {
    pub config: LambdaConfig,
    pub max_rel: f64,
    pub per_system_max: BTreeMap<String, f64>,
    /// `(min, max)` of closed-form / dynamic-program over dihedral systems.
    pub dihedral_ratio: Option<(f64, f64)>,
    /// Word sums grow with `t` at fixed positions.
    pub monotone_ok: bool,
    /// Time rescaling by `c >= 1` changes the word sum by at most `c^{2|G|}`.
    pub scaling_ok: bool,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<LambdaRow>,
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Compares the word-sum dynamic program against exhaustive enumeration on
/// seeded random triples, then spot-checks structural properties: dihedral
/// closed form within a bounded factor, monotonicity in `t`, and the
/// rescaling bound.
pub fn run_lambda_crosscheck(cfg: &LambdaConfig) -> Result<LambdaReport> {
    if cfg.systems.is_empty() || cfg.triples == 0 {
        return Err(Error::Config(
            "need at least one system and one triple".into(),
        ));
    }
    if !(cfg.t_min > 0.0 && cfg.t_max > cfg.t_min) {
        return Err(Error::Config(format!(
            "bad time range [{}, {}]",
            cfg.t_min, cfg.t_max
        )));
    }
    if !(cfg.dihedral_ratio_slack > 1.0) {
        return Err(Error::Config(
            "dihedral_ratio_slack must exceed 1 (the ratio itself reaches 1)".into(),
        ));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut per_system_max = BTreeMap::new();
    let mut max_rel = 0.0f64;
    let mut dih_lo = f64::INFINITY;
    let mut dih_hi = f64::NEG_INFINITY;
    let mut saw_dihedral = false;
    let mut monotone_ok = true;
    let mut scaling_ok = true;
    let mut failures = Vec::new();

    for sys in &cfg.systems {
        let rs = sys.build()?;
        let group = ReflectionGroup::generate(&rs)?;
        let label = system_label(sys);
        let mut sys_max = 0.0f64;
        let mut sys_dih: Option<(f64, f64)> = None;
        for _ in 0..cfg.triples {
            let x: Vec<f64> = (0..rs.dim())
                .map(|_| rng.gen_range(-cfg.coord_max..cfg.coord_max))
                .collect();
            let y: Vec<f64> = (0..rs.dim())
                .map(|_| rng.gen_range(-cfg.coord_max..cfg.coord_max))
                .collect();
            let t = (rng.gen_range(cfg.t_min.ln()..cfg.t_max.ln())).exp();
            let dp = lambda_table(&rs, &group, &x, &y, t, cfg.max_len)?.lambda;
            let brute = lambda_bruteforce(&rs, &group, &x, &y, t, cfg.max_len, 10_000_000)?;
            let rel = (dp - brute).abs() / brute;
            sys_max = sys_max.max(rel);
            rows.push(LambdaRow {
                system: label.clone(),
                x: fmt_point(&x),
                y: fmt_point(&y),
                t,
                dp,
                brute,
                rel,
            });

            // structural spot checks on a deterministic subsample
            if rows.len() % 7 == 0 {
                let full = lambda_dp(&rs, &group, &x, &y, t)?;
                let later = lambda_dp(&rs, &group, &x, &y, 2.0 * t)?;
                if !(later >= full * (1.0 - 1e-12)) {
                    monotone_ok = false;
                }
                let c: f64 = 2.7;
                let scaled = lambda_dp(&rs, &group, &x, &y, c * t)?;
                let cap = c.powi(2 * group.order() as i32);
                if !(scaled <= full * cap * (1.0 + 1e-12)) {
                    scaling_ok = false;
                }
                if let Family::Dihedral { .. } = rs.family() {
                    let closed = lambda_dihedral(&rs, &group, &x, &y, t)?;
                    let ratio = closed / full;
                    let e = sys_dih.get_or_insert((f64::INFINITY, f64::NEG_INFINITY));
                    e.0 = e.0.min(ratio);
                    e.1 = e.1.max(ratio);
                }
            }
        }
        if let Some((lo, hi)) = sys_dih {
            saw_dihedral = true;
            dih_lo = dih_lo.min(lo);
            dih_hi = dih_hi.max(hi);
            // Geometric bound on the number of admissible sequences within
            // the word-length horizon; the ratio's honest floor is its
            // reciprocal, since the word sum approaches the count near the
            // diagonal while the closed form stays at one.
            let p = rs.n_positive() as f64;
            let horizon = 2 * group.order() as i32;
            let count_bound = (p.powi(horizon + 1) - 1.0) / (p - 1.0);
            let floor = 1.0 / (cfg.dihedral_ratio_slack * count_bound);
            if !(lo > floor && hi < cfg.dihedral_ratio_slack) {
                failures.push(format!(
                    "{label}: closed form / word sum strayed outside \
                     [{floor:.1e}, {:.1e}]: observed [{lo:.3e}, {hi:.3e}]",
                    cfg.dihedral_ratio_slack
                ));
            }
        }
        max_rel = max_rel.max(sys_max);
        per_system_max.insert(label, sys_max);
    }

    if !(max_rel <= cfg.tol) {
        failures.push(format!(
            "dynamic program disagrees with enumeration by {max_rel:.3e} (tol {:.1e})",
            cfg.tol
        ));
    }
    if !monotone_ok {
        failures.push("word sum failed to grow with t".into());
    }
    if !scaling_ok {
        failures.push("word sum violated the rescaling cap".into());
    }
    let dihedral_ratio = saw_dihedral.then_some((dih_lo, dih_hi));

    let mut constants = BTreeMap::new();
    constants.insert("max_rel".into(), max_rel);
    if let Some((lo, hi)) = dihedral_ratio {
        constants.insert("dihedral_ratio_lo".into(), lo);
        constants.insert("dihedral_ratio_hi".into(), hi);
    }
    Ok(LambdaReport {
        config: cfg.clone(),
        max_rel,
        per_system_max,
        dihedral_ratio,
        monotone_ok,
        scaling_ok,
        constants,
        pass: failures.is_empty(),
        failures,
        rows,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Backend agreement: quadrature ladder vs independent density route
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackendConfig {
    pub k_values: Vec<f64>,
    /// Random triples per multiplicity.
    pub triples: usize,
    pub coord_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            k_values: vec![0.5, 1.0, 2.3],
            triples: 1000,
            coord_max: 4.0,
            t_min: 0.05,
            t_max: 20.0,
            seed: 0xbac0,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BackendRow {
    pub k: f64,
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub log_ladder: f64,
    pub log_density: f64,
    pub rel: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BackendReport {
    pub config: BackendConfig,
    pub points: usize,
    pub max_rel: f64,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<BackendRow>,
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Rank-one kernel by the fixed-order quadrature ladder vs the independent
/// adaptive-density route, on seeded random triples.
pub fn run_backend_agreement(cfg: &BackendConfig) -> Result<BackendReport> {
    if cfg.k_values.is_empty() || cfg.triples == 0 {
        return Err(Error::Config(
            "need at least one multiplicity and one triple".into(),
        ));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut max_rel = 0.0f64;
    for &k in &cfg.k_values {
        let kern = Rank1Kernel::new(k)?;
        for _ in 0..cfg.triples {
            let x = rng.gen_range(-cfg.coord_max..cfg.coord_max);
            let y = rng.gen_range(-cfg.coord_max..cfg.coord_max);
            let t = (rng.gen_range(cfg.t_min.ln()..cfg.t_max.ln())).exp();
            let a = kern.log_heat(x, y, t)?;
            let b = kern.log_heat_density(x, y, t)?;
            let rel = ((a - b).exp() - 1.0).abs();
            max_rel = max_rel.max(rel);
            rows.push(BackendRow {
                k,
                x,
                y,
                t,
                log_ladder: a,
                log_density: b,
                rel,
            });
        }
    }
    let mut failures = Vec::new();
    if !(max_rel <= cfg.tol) {
        failures.push(format!(
            "backends disagree by {max_rel:.3e} (tol {:.1e})",
            cfg.tol
        ));
    }
    let mut constants = BTreeMap::new();
    constants.insert("max_rel".into(), max_rel);
    Ok(BackendReport {
        config: cfg.clone(),
        points: rows.len(),
        max_rel,
        constants,
        pass: failures.is_empty(),
        failures,
        rows,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Identity suite: differential identities, conservation, and the
// intermediate inequalities behind the two-sided bounds
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityConfig {
    pub systems: Vec<SystemConfig>,
    /// Per-axis coordinate values for both sweep points.
    pub coord_vals: Vec<f64>,
    pub ts: Vec<f64>,
    /// The time-derivative residual uses finite differences, so it is only
    /// sampled where `|x-y|^2/t` stays below this cap (beyond it the
    /// third-derivative term would swamp the tolerance).
    pub s_cap_fd: f64,
    /// Upper decay rate (below 1/4) for the envelope-side inequalities.
    pub c_upper: f64,
    /// Lower decay rate (above 1/4).
    pub c_lower: f64,
    /// Intermediate rate strictly below `c_upper`, used by the one-step
    /// upper recursion and the combined inequality.
    pub c1: f64,
    /// Gate for the two differential-identity residuals.
    pub residual_tol: f64,
    /// Gate for mass and semigroup quadrature checks.
    pub quad_tol: f64,
    /// Multiplicities for the mass/semigroup spot checks.
    pub spot_ks: Vec<f64>,
    pub spot_xs: Vec<f64>,
    pub spot_ts: Vec<f64>,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            systems: vec![
                SystemConfig::ProductA1 { k: vec![1.0] },
                SystemConfig::ProductA1 { k: vec![1.0, 0.5] },
            ],
            coord_vals: vec![-2.5, -1.5, -0.6, 0.0, 0.8, 1.6, 2.4],
            ts: vec![0.3, 0.7, 1.6, 3.2],
            s_cap_fd: 30.0,
            c_upper: 0.2,
            c_lower: 0.3,
            c1: 0.15,
            residual_tol: 1e-5,
            quad_tol: 1e-6,
            spot_ks: vec![0.6, 1.0, 2.3],
            spot_xs: vec![0.3, 1.5, -2.0],
            spot_ts: vec![0.4, 2.0],
        }
    }
}

impl IdentityConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c_upper > 0.0 && self.c_upper < 0.25 && self.c_lower > 0.25) {
            return Err(Error::Config(format!(
                "decay rates must straddle 1/4: got {} and {}",
                self.c_upper, self.c_lower
            )));
        }
        if !(self.c1 > 0.0 && self.c1 < self.c_upper) {
            return Err(Error::Config(format!(
                "intermediate rate must sit in (0, c_upper): got {}",
                self.c1
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityRow {
    pub system: String,
    pub x: String,
    pub y: String,
    pub t: f64,
    pub s: f64,
    /// Time-derivative identity residual; empty outside the FD-safe region.
    pub studia: Option<f64>,
    /// Exchange identity residual.
    pub basic: f64,
    /// `h * w(B(x,sqrt t)) * exp(+c_upper d^2/t)` — bounded iff the direct
    /// upper bound holds.
    pub r31_upper: f64,
    /// `w(B)^{-1} exp(-c_lower |x-y|^2/t) / h` — bounded iff the direct
    /// (Euclidean) lower bound holds.
    pub r31_lower: f64,
    /// One-step recursion: `h / (w(B)^{-1} e^{-c1 s} + (1+|x-y|/sqrt t)^{-2}
    /// sum_a h(x, s_a y))`.
    pub r32_upper: f64,
    /// Mirror of the above with `c_lower`, bounding `h` from below.
    pub r32_lower: f64,
    /// Combined inequality ratio (may be negative; bounded above).
    pub r311: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub config: IdentityConfig,
    pub points: usize,
    pub max_studia: f64,
    pub max_basic: f64,
    pub max_mass_dev: f64,
    pub max_semigroup_dev: f64,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<IdentityRow>,
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Runs the differential identities (time derivative and exchange), the
/// conservation checks (unit mass, semigroup composition), and measures the
/// empirical constants of the intermediate kernel inequalities: the direct
/// two-sided bound, the one-step recursion in both directions, and the
/// combined inequality with `eps = (c_upper - c1) / (2 c_upper)`.
pub fn run_identity_suite(cfg: &IdentityConfig) -> Result<IdentityReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut max_studia = 0.0f64;
    let mut max_basic = 0.0f64;
    let mut c31_up = f64::NEG_INFINITY;
    let mut c31_lo = f64::NEG_INFINITY;
    let mut c32_up = f64::NEG_INFINITY;
    let mut c32_lo = f64::NEG_INFINITY;
    let mut c311 = f64::NEG_INFINITY;
    let eps = (cfg.c_upper - cfg.c1) / (2.0 * cfg.c_upper);

    for sys in &cfg.systems {
        let rs = sys.build()?;
        let group = ReflectionGroup::generate(&rs)?;
        let kern = product_kernel(&rs)?;
        let label = system_label(sys);
        let hom = kern.homogeneous_dim();
        let n = kern.dim() as f64;
        let pts = cartesian(&cfg.coord_vals, rs.dim());
        let mut vol_cache: BTreeMap<(Vec<u64>, u64), f64> = BTreeMap::new();
        for &t in &cfg.ts {
            for x in &pts {
                let key = bits_key(x, t);
                let vol = match vol_cache.get(&key) {
                    Some(&v) => v,
                    None => {
                        let v = exact_ball_volume(&rs, x, t.sqrt())?;
                        vol_cache.insert(key, v);
                        v
                    }
                };
                for y in &pts {
                    let d2e = dist(x, y).powi(2);
                    let s = d2e / t;
                    let h = kern.heat(x, y, t)?;
                    let studia = if s <= cfg.s_cap_fd {
                        let r = kern.check_time_derivative(x, y, t)?;
                        max_studia = max_studia.max(r);
                        Some(r)
                    } else {
                        None
                    };
                    let basic = kern.check_basic_identity(x, y, t)?;
                    max_basic = max_basic.max(basic);

                    let (d_orb, _) = orbit_distance(&group, x, y);
                    let mut plain = 0.0;
                    let mut weighted = 0.0;
                    for i in 0..rs.roots().len() {
                        let yr = rs.reflect(i, y);
                        let hr = kern.heat(x, &yr, t)?;
                        plain += hr;
                        weighted += rs.mult(i) * hr;
                    }
                    let fac = (1.0 + d2e.sqrt() / t.sqrt()).powi(-2);
                    let r31_upper = h * vol * (cfg.c_upper * d_orb * d_orb / t).exp();
                    let r31_lower = (-cfg.c_lower * s).exp() / vol / h;
                    let recur_up = (-cfg.c1 * s).exp() / vol + fac * plain;
                    let recur_lo = (-cfg.c_lower * s).exp() / vol + fac * plain;
                    let r32_upper = h / recur_up;
                    let r32_lower = recur_lo / h;
                    let lhs = (2.0 * hom - 2.0 * n + s) * h - (1.0 - eps) * s * h - 2.0 * weighted;
                    let r311 = lhs / (4.0 * (-(1.0 - 2.0 * eps) * s / 4.0).exp() / vol);
                    c31_up = c31_up.max(r31_upper);
                    c31_lo = c31_lo.max(r31_lower);
                    c32_up = c32_up.max(r32_upper);
                    c32_lo = c32_lo.max(r32_lower);
                    c311 = c311.max(r311);
                    rows.push(IdentityRow {
                        system: label.clone(),
                        x: fmt_point(x),
                        y: fmt_point(y),
                        t,
                        s,
                        studia,
                        basic,
                        r31_upper,
                        r31_lower,
                        r32_upper,
                        r32_lower,
                        r311,
                    });
                }
            }
        }
    }

    // conservation spot checks on the rank-one factors
    let mut max_mass = 0.0f64;
    let mut max_semi = 0.0f64;
    for &k in &cfg.spot_ks {
        let kern = Rank1Kernel::new(k)?;
        for &x in &cfg.spot_xs {
            for &t in &cfg.spot_ts {
                let mass = mass_integral_1d(&kern, x, t)?;
                max_mass = max_mass.max((mass - 1.0).abs());
            }
        }
        for pair in cfg.spot_xs.windows(2) {
            for &s in &cfg.spot_ts {
                for &t in &cfg.spot_ts {
                    let conv = semigroup_integral_1d(&kern, pair[0], pair[1], s, t)?;
                    let direct = kern.heat(pair[0], pair[1], s + t)?;
                    max_semi = max_semi.max((conv / direct - 1.0).abs());
                }
            }
        }
    }

    let mut failures = Vec::new();
    if !(max_studia <= cfg.residual_tol) {
        failures.push(format!(
            "time-derivative residual {max_studia:.3e} above {:.1e}",
            cfg.residual_tol
        ));
    }
    if !(max_basic <= cfg.residual_tol) {
        failures.push(format!(
            "exchange-identity residual {max_basic:.3e} above {:.1e}",
            cfg.residual_tol
        ));
    }
    if !(max_mass <= cfg.quad_tol) {
        failures.push(format!(
            "unit-mass deviation {max_mass:.3e} above {:.1e}",
            cfg.quad_tol
        ));
    }
    if !(max_semi <= cfg.quad_tol) {
        failures.push(format!(
            "semigroup deviation {max_semi:.3e} above {:.1e}",
            cfg.quad_tol
        ));
    }
    let mut constants = BTreeMap::new();
    // the inequality constants are sups over the sweep; an empty sweep is
    // vacuously fine, so they are only gated/reported when rows exist
    if !rows.is_empty() {
        for (name, v) in [
            ("direct upper", c31_up),
            ("direct lower", c31_lo),
            ("recursion upper", c32_up),
            ("recursion lower", c32_lo),
            ("combined", c311),
        ] {
            if !v.is_finite() {
                failures.push(format!("{name} inequality constant is not finite: {v}"));
            }
        }
        constants.insert("prop_upper_direct".into(), c31_up);
        constants.insert("prop_lower_direct".into(), c31_lo);
        constants.insert("prop_upper_recursion".into(), c32_up);
        constants.insert("prop_lower_recursion".into(), c32_lo);
        constants.insert("combined_inequality".into(), c311);
    }
    constants.insert("studia_max".into(), max_studia);
    constants.insert("basic_max".into(), max_basic);
    constants.insert("mass_max".into(), max_mass);
    constants.insert("semigroup_max".into(), max_semi);
    Ok(IdentityReport {
        config: cfg.clone(),
        points: rows.len(),
        max_studia,
        max_basic,
        max_mass_dev: max_mass,
        max_semigroup_dev: max_semi,
        constants,
        pass: failures.is_empty(),
        failures,
        rows,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Regularity: spatial Hoelder control of h and partial_t h
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityConfig {
    pub systems: Vec<SystemConfig>,
    pub coord_vals: Vec<f64>,
    pub ts: Vec<f64>,
    /// Displacement sizes as fractions of `sqrt(t)`; all must stay below 1/2.
    pub delta_fracs: Vec<f64>,
    /// Time dilation of the comparison kernel.
    pub c4: f64,
    /// Time dilation in the small-displacement comparison.
    pub c5: f64,
    /// Sanity cap on all three quotients.
    pub quotient_cap: f64,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        RegularityConfig {
            systems: vec![
                SystemConfig::ProductA1 { k: vec![1.0] },
                SystemConfig::ProductA1 { k: vec![1.0, 0.5] },
            ],
            coord_vals: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            ts: vec![0.5, 1.0, 2.0],
            delta_fracs: vec![0.45, 0.2, 0.05],
            c4: 4.0,
            c5: 4.0,
            quotient_cap: 1e3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityRow {
    pub system: String,
    pub x: String,
    pub y: String,
    pub t: f64,
    pub delta: f64,
    pub dir: String,
    /// `|h(x,y) - h(x,y')| / ((delta/sqrt t) h_{c4 t}(x,y))`.
    pub q_value: f64,
    /// Same quotient for the time derivative, scaled by `t`.
    pub q_derivative: f64,
    /// `h_t(x,y) / h_{c5 t}(x,y')`.
    pub q_small: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub config: RegularityConfig,
    pub points: usize,
    pub sup_value: f64,
    pub sup_derivative: f64,
    pub sup_small: f64,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<RegularityRow>,
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Hoelder quotients of the kernel and its time derivative under small
/// displacements of the second argument (`|y - y'| < sqrt(t)/2`), compared
/// against the time-dilated kernel; plus the plain small-displacement
/// comparison. All three sups must stay finite and under the sanity cap.
pub fn run_regularity_suite(cfg: &RegularityConfig) -> Result<RegularityReport> {
    if cfg.delta_fracs.iter().any(|&f| !(f > 0.0 && f < 0.5)) {
        return Err(Error::Config(
            "displacement fractions must sit in (0, 1/2)".into(),
        ));
    }
    if !(cfg.c4 > 1.0 && cfg.c5 > 1.0) {
        return Err(Error::Config("time dilations must exceed 1".into()));
    }
    let start = Instant::now();
    let mut rows = Vec::new();
    let (mut sup_v, mut sup_d, mut sup_s) = (0.0f64, 0.0f64, 0.0f64);
    for sys in &cfg.systems {
        let rs = sys.build()?;
        let kern = product_kernel(&rs)?;
        let label = system_label(sys);
        let dim = rs.dim();
        let pts = cartesian(&cfg.coord_vals, dim);
        let mut dirs: Vec<(String, Vec<f64>)> = Vec::new();
        for i in 0..dim {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; dim];
                e[i] = sign;
                dirs.push((format!("{}e{i}", if sign > 0.0 { "+" } else { "-" }), e));
            }
        }
        for &t in &cfg.ts {
            let dt = 1e-4 * t;
            for x in &pts {
                for y in &pts {
                    let h = kern.heat(x, y, t)?;
                    let h4 = kern.heat(x, y, cfg.c4 * t)?;
                    let dh = (kern.heat(x, y, t + dt)? - kern.heat(x, y, t - dt)?) / (2.0 * dt);
                    for &frac in &cfg.delta_fracs {
                        let delta = frac * t.sqrt();
                        for (dname, dir) in &dirs {
                            let yp: Vec<f64> =
                                y.iter().zip(dir).map(|(a, b)| a + delta * b).collect();
                            let hp = kern.heat(x, &yp, t)?;
                            let dhp = (kern.heat(x, &yp, t + dt)? - kern.heat(x, &yp, t - dt)?)
                                / (2.0 * dt);
                            let scale = (delta / t.sqrt()) * h4;
                            let q_value = (h - hp).abs() / scale;
                            let q_derivative = (dh - dhp).abs() * t / scale;
                            let q_small = h / kern.heat(x, &yp, cfg.c5 * t)?;
                            sup_v = sup_v.max(q_value);
                            sup_d = sup_d.max(q_derivative);
                            sup_s = sup_s.max(q_small);
                            rows.push(RegularityRow {
                                system: label.clone(),
                                x: fmt_point(x),
                                y: fmt_point(y),
                                t,
                                delta,
                                dir: dname.clone(),
                                q_value,
                                q_derivative,
                                q_small,
                            });
                        }
                    }
                }
            }
        }
    }
    let mut failures = Vec::new();
    for (name, v) in [
        ("value", sup_v),
        ("derivative", sup_d),
        ("small-displacement", sup_s),
    ] {
        if !v.is_finite() || v > cfg.quotient_cap {
            failures.push(format!(
                "{name} quotient {v:.3e} breaches the cap {:.1e}",
                cfg.quotient_cap
            ));
        }
    }
    let mut constants = BTreeMap::new();
    constants.insert("holder_value".into(), sup_v);
    constants.insert("holder_derivative".into(), sup_d);
    constants.insert("small_displacement".into(), sup_s);
    Ok(RegularityReport {
        config: cfg.clone(),
        points: rows.len(),
        sup_value: sup_v,
        sup_derivative: sup_d,
        sup_small: sup_s,
        constants,
        pass: failures.is_empty(),
        failures,
        rows,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Representing-measure band: mu_x of the near region vs the word sum
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub ks: Vec<f64>,
    pub xs: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    /// Largest allowed ratio between the band's ends, per multiplicity.
    pub band_cap: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            ks: vec![0.5, 1.5],
            xs: vec![0.3, 1.0, 3.0],
            t_min: 1e-2,
            t_max: 1e2,
            t_points: 33,
            // The ratio has a genuine hump near t ~ 2 x^2 (where the near
            // region saturates) that grows with k; width ~60 measured at
            // k = 1.5, flat plateaus on both sides.
            band_cap: 100.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureRow {
    pub k: f64,
    pub x: f64,
    pub t: f64,
    pub flip: bool,
    pub mu: f64,
    pub reference: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureReport {
    pub config: MeasureConfig,
    pub points: usize,
    /// Per-multiplicity `(min, max)` of the ratio across positions, times,
    /// and both orbit elements.
    pub bands: BTreeMap<String, (f64, f64)>,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<MeasureRow>,
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Rank-one representing measure of the near region around each orbit
/// element (identity and sign flip) against `t^{hom/2} Lambda / w(B)`. For
/// each multiplicity the ratio must stay inside a single band across four
/// decades of `t` and all positions.
pub fn run_measure_band(cfg: &MeasureConfig) -> Result<MeasureReport> {
    if cfg.ks.is_empty() || cfg.xs.is_empty() || cfg.t_points < 2 {
        return Err(Error::Config("empty measure sweep".into()));
    }
    if cfg.xs.iter().any(|&x| x == 0.0) {
        return Err(Error::Config(
            "positions must avoid the wall at the origin".into(),
        ));
    }
    let start = Instant::now();
    let ts = logspace(cfg.t_min, cfg.t_max, cfg.t_points);
    let mut rows = Vec::new();
    let mut bands = BTreeMap::new();
    let mut failures = Vec::new();
    for &k in &cfg.ks {
        let rs = RootSystem::product_a1(&[k])?;
        let group = ReflectionGroup::generate(&rs)?;
        let kern = Rank1Kernel::new(k)?;
        let hom = kern.homogeneous_dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &cfg.xs {
            for &t in &ts {
                for flip in [false, true] {
                    let mu = kern.mu_measure_u(x, flip, t)?;
                    let target = if flip { vec![-x] } else { vec![x] };
                    let lam = lambda_dp(&rs, &group, &[x], &target, t)?;
                    let vol = exact_ball_volume(&rs, &[x], t.sqrt())?;
                    let reference = t.powf(0.5 * hom) * lam / vol;
                    let ratio = mu / reference;
                    lo = lo.min(ratio);
                    hi = hi.max(ratio);
                    rows.push(MeasureRow {
                        k,
                        x,
                        t,
                        flip,
                        mu,
                        reference,
                        ratio,
                    });
                }
            }
        }
        if !(lo > 0.0 && hi.is_finite() && hi / lo <= cfg.band_cap) {
            failures.push(format!(
                "k={k}: ratio band [{lo:.3e}, {hi:.3e}] wider than the cap {}",
                cfg.band_cap
            ));
        }
        bands.insert(format!("k={k}"), (lo, hi));
    }
    let mut constants = BTreeMap::new();
    for (label, (lo, hi)) in &bands {
        constants.insert(format!("{label} lo"), *lo);
        constants.insert(format!("{label} hi"), *hi);
        constants.insert(format!("{label} width"), hi / lo);
    }
    Ok(MeasureReport {
        config: cfg.clone(),
        points: rows.len(),
        bands,
        constants,
        pass: failures.is_empty(),
        failures,
        rows,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Ball volumes: exact integrals vs the closed comparable form
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VolumeConfig {
    pub systems: Vec<SystemConfig>,
    /// Centers run along a ray from the origin out to this norm.
    pub x_max: f64,
    pub x_points: usize,
    /// Ray direction (radians) for two-dimensional systems.
    pub ray_angle: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        VolumeConfig {
            systems: vec![
                SystemConfig::ProductA1 { k: vec![1.0] },
                SystemConfig::ProductA1 { k: vec![1.0, 0.5] },
                SystemConfig::Dihedral {
                    m: 3,
                    k_even: 1.0,
                    k_odd: 1.0,
                },
            ],
            x_max: 10.0,
            x_points: 11,
            ray_angle: 0.4,
            r_min: 1e-2,
            r_max: 10.0,
            r_points: 13,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeRow {
    pub system: String,
    pub x: String,
    pub r: f64,
    pub exact: f64,
    pub comparable: f64,
    pub ratio: f64,
    pub doubling: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeReport {
    pub config: VolumeConfig,
    pub points: usize,
    /// Per-system `(min, max)` of exact/comparable.
    pub bands: BTreeMap<String, (f64, f64)>,
    /// Per-system smallest constant `C` with ratios in `[1/C, C]`.
    pub c_hat: BTreeMap<String, f64>,
    /// Per-system largest observed `w(B(x,2r)) / w(B(x,r))`.
    pub doubling_max: BTreeMap<String, f64>,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<VolumeRow>,
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Exact weighted ball volumes against the closed comparable form over a
/// position ray and three decades of radius. Passing requires the ratio to
/// stay inside a single finite band per system, and the doubling ratio to
/// respect the bound `2^hom * C^2` implied by the band (the comparable form
/// doubles by at most `2^hom` exactly).
pub fn run_volume_check(cfg: &VolumeConfig) -> Result<VolumeReport> {
    if cfg.systems.is_empty() || cfg.x_points == 0 || cfg.r_points < 2 {
        return Err(Error::Config("empty volume sweep".into()));
    }
    let start = Instant::now();
    let norms = linspace(0.0, cfg.x_max, cfg.x_points);
    let rads = logspace(cfg.r_min, cfg.r_max, cfg.r_points);
    let mut rows = Vec::new();
    let mut bands = BTreeMap::new();
    let mut c_hat = BTreeMap::new();
    let mut doubling_max = BTreeMap::new();
    let mut failures = Vec::new();
    for sys in &cfg.systems {
        let rs = sys.build()?;
        let label = system_label(sys);
        let dir: Vec<f64> = match rs.dim() {
            1 => vec![1.0],
            2 => vec![cfg.ray_angle.cos(), cfg.ray_angle.sin()],
            d => {
                return Err(Error::Config(format!(
                    "volume sweep supports dimensions 1 and 2, got {d}"
                )))
            }
        };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut dbl = 0.0f64;
        for &xn in &norms {
            let x: Vec<f64> = dir.iter().map(|d| d * xn).collect();
            for &r in &rads {
                let exact = exact_ball_volume(&rs, &x, r)?;
                let comparable = volume_comparable(&rs, &x, r)?;
                let ratio = exact / comparable;
                let doubling = exact_ball_volume(&rs, &x, 2.0 * r)? / exact;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
                dbl = dbl.max(doubling);
                rows.push(VolumeRow {
                    system: label.clone(),
                    x: fmt_point(&x),
                    r,
                    exact,
                    comparable,
                    ratio,
                    doubling,
                });
            }
        }
        let c = hi.max(1.0 / lo);
        let dbl_cap = 2f64.powf(rs.homogeneous_dim()) * c * c;
        if !(lo > 0.0 && hi.is_finite()) {
            failures.push(format!(
                "{label}: volume ratio unbounded: [{lo:.3e}, {hi:.3e}]"
            ));
        }
        if !(dbl <= dbl_cap) {
            failures.push(format!(
                "{label}: doubling ratio {dbl:.3} above the band-implied cap {dbl_cap:.3}"
            ));
        }
        bands.insert(label.clone(), (lo, hi));
        c_hat.insert(label.clone(), c);
        doubling_max.insert(label, dbl);
    }
    let mut constants = BTreeMap::new();
    for (label, c) in &c_hat {
        constants.insert(format!("{label} c_hat"), *c);
    }
    for (label, d) in &doubling_max {
        constants.insert(format!("{label} doubling"), *d);
    }
    Ok(VolumeReport {
        config: cfg.clone(),
        points: rows.len(),
        bands,
        c_hat,
        doubling_max,
        constants,
        pass: failures.is_empty(),
        failures,
        rows,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// PDE validation: product layout against the exact-kernel oracle
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PdeProductConfig {
    /// Angular nodes per half-sector on the fine grid (halved for the coarse
    /// run; must be even).
    pub q: usize,
    /// Radial rings on the fine grid; `n_r + 1` must be even so the coarse
    /// grid nests.
    pub n_r: usize,
    pub r_max: f64,
    pub k_even: f64,
    pub k_odd: f64,
    /// Center of the Gaussian initial bump.
    pub x0: [f64; 2],
    /// Width parameter of the bump (`exp(-|y-x0|^2/4 t0)`).
    pub t0: f64,
    /// Evolution span.
    pub t: f64,
    /// Bulk region: oracle values at least this fraction of the peak.
    pub bulk_rel: f64,
    /// Relative tolerance of the per-axis oracle quadrature.
    pub oracle_tol: f64,
    pub max_bulk_err: f64,
    pub max_classical_err: f64,
    pub min_factor: f64,
}

impl Default for PdeProductConfig {
    fn default() -> Self {
        PdeProductConfig {
            q: 18,
            n_r: 127,
            r_max: 8.0,
            k_even: 1.0,
            k_odd: 1.0,
            x0: [1.1, 0.85],
            t0: 0.4,
            t: 0.5,
            bulk_rel: 1e-3,
            oracle_tol: 1e-9,
            max_bulk_err: 0.02,
            max_classical_err: 0.01,
            min_factor: 3.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PdeProductRow {
    pub r: f64,
    pub theta: f64,
    pub value: f64,
    pub oracle: f64,
    pub rel: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PdeProductReport {
    pub config: PdeProductConfig,
    /// Max relative deviation from the oracle over the fine grid's bulk.
    pub bulk_err: f64,
    /// Weighted relative L2 deviations on each grid's own bulk.
    pub l2_err_fine: f64,
    pub l2_err_coarse: f64,
    /// `l2_err_coarse / l2_err_fine`.
    pub convergence_factor: f64,
    /// Max relative deviation for the unweighted run against the closed
    /// Gaussian form.
    pub classical_err: f64,
    pub mass_drift_fine: f64,
    pub mass_drift_coarse: f64,
    pub mass_drift_classical: f64,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<PdeProductRow>,
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Convolution of the rank-one kernel against the Gaussian factor of the
/// initial bump along one axis: `int h_t(v, z) exp(-(z-c)^2/4 t0) w_k(z) dz`
/// with `w_k(z) = 2^k |z|^{2k}`, split at the weight's kink.
fn axis_convolution(f: &Rank1Kernel, v: f64, c: f64, t0: f64, t: f64, tol: f64) -> Result<f64> {
    let k = f.k();
    let lim = v.abs().max(c.abs()) + 16.0 * t.max(t0).sqrt();
    let fail = std::cell::Cell::new(false);
    let integrand = |z: f64| -> f64 {
        match f.log_heat(v, z, t) {
            Ok(lh) => {
                let lw = k * std::f64::consts::LN_2 + 2.0 * k * z.abs().ln();
                (lh + lw - (z - c) * (z - c) / (4.0 * t0)).exp()
            }
            Err(_) => {
                fail.set(true);
                f64::NAN
            }
        }
    };
    let total = tanh_sinh(integrand, -lim, 0.0, tol)? + tanh_sinh(integrand, 0.0, lim, tol)?;
    if fail.get() {
        return Err(Error::Precision(
            "kernel evaluation failed inside the oracle convolution".into(),
        ));
    }
    Ok(total)
}

struct WeightedRun {
    l2: f64,
    bulk_max: f64,
    drift: f64,
    rows: Vec<PdeProductRow>,
}

fn weighted_run(
    spec: &GridSpec,
    kern: &ProductKernel,
    cfg: &PdeProductConfig,
) -> Result<WeightedRun> {
    let solver = Solver::new(*spec)?;
    let u0 = solver.gaussian_bump(cfg.x0, cfg.t0)?;
    let ev = solver.evolve(&u0, cfg.t)?;
    let n = solver.node_count();
    let f = kern.factors();
    let mut oracle = vec![0.0; n];
    for (idx, o) in oracle.iter_mut().enumerate() {
        let p = solver.node_position(idx);
        *o = axis_convolution(&f[0], p[0], cfg.x0[0], cfg.t0, cfg.t, cfg.oracle_tol)?
            * axis_convolution(&f[1], p[1], cfg.x0[1], cfg.t0, cfg.t, cfg.oracle_tol)?;
    }
    let peak = oracle.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = cfg.bulk_rel * peak;
    let (mut num, mut den, mut bulk_max) = (0.0, 0.0, 0.0f64);
    let mut rows = Vec::new();
    for idx in 0..n {
        if oracle[idx] < cut {
            continue;
        }
        let wv = solver.weights()[idx] * solver.volumes()[idx];
        let e = ev.field[idx] - oracle[idx];
        num += wv * e * e;
        den += wv * oracle[idx] * oracle[idx];
        let rel = e.abs() / oracle[idx];
        bulk_max = bulk_max.max(rel);
        let (r, theta) = solver.node_polar(idx);
        rows.push(PdeProductRow {
            r,
            theta,
            value: ev.field[idx],
            oracle: oracle[idx],
            rel,
        });
    }
    Ok(WeightedRun {
        l2: (num / den).sqrt(),
        bulk_max,
        drift: ev.mass_drift.abs(),
        rows,
    })
}

/// Validates the grid solver against the exact product kernel: evolves a
/// Gaussian bump on a fine and a 2x-coarser grid, compares both against the
/// per-axis convolution oracle, checks the error contraction under
/// refinement, and repeats the fine run with zero multiplicities against the
/// closed classical solution.
pub fn run_pde_product_validation(cfg: &PdeProductConfig) -> Result<PdeProductReport> {
    if cfg.q < 4 || cfg.q % 2 != 0 {
        return Err(Error::Config(format!(
            "fine angular count must be even and at least 4, got {}",
            cfg.q
        )));
    }
    if (cfg.n_r + 1) % 2 != 0 || cfg.n_r < 9 {
        return Err(Error::Config(format!(
            "need odd n_r >= 9 so the coarse grid nests, got {}",
            cfg.n_r
        )));
    }
    let start = Instant::now();
    // axis 0 flips across the vertical wall (odd index), axis 1 across the
    // horizontal wall (even index)
    let kern = ProductKernel::new(&[cfg.k_odd, cfg.k_even])?;
    let fine = GridSpec {
        m: 2,
        q: cfg.q,
        n_r: cfg.n_r,
        r_max: cfg.r_max,
        k_even: cfg.k_even,
        k_odd: cfg.k_odd,
    };
    let coarse = GridSpec {
        q: cfg.q / 2,
        n_r: (cfg.n_r + 1) / 2 - 1,
        ..fine
    };
    let run_f = weighted_run(&fine, &kern, cfg)?;
    let run_c = weighted_run(&coarse, &kern, cfg)?;
    let factor = run_c.l2 / run_f.l2;

    // classical limit: zero multiplicities against the closed Gaussian form
    let classical = GridSpec {
        k_even: 0.0,
        k_odd: 0.0,
        ..fine
    };
    let solver = Solver::new(classical)?;
    let u0 = solver.gaussian_bump(cfg.x0, cfg.t0)?;
    let ev = solver.evolve(&u0, cfg.t)?;
    let tt = cfg.t0 + cfg.t;
    let amp = cfg.t0 / tt;
    let mut classical_err = 0.0f64;
    let mut peak = f64::NEG_INFINITY;
    let closed: Vec<f64> = (0..solver.node_count())
        .map(|idx| {
            let p = solver.node_position(idx);
            let d2 = (p[0] - cfg.x0[0]).powi(2) + (p[1] - cfg.x0[1]).powi(2);
            let v = amp * (-d2 / (4.0 * tt)).exp();
            peak = peak.max(v);
            v
        })
        .collect();
    for idx in 0..solver.node_count() {
        if closed[idx] >= cfg.bulk_rel * peak {
            classical_err = classical_err.max((ev.field[idx] - closed[idx]).abs() / closed[idx]);
        }
    }

    let mut failures = Vec::new();
    if !(run_f.bulk_max <= cfg.max_bulk_err) {
        failures.push(format!(
            "bulk error {:.3e} above {:.2e}",
            run_f.bulk_max, cfg.max_bulk_err
        ));
    }
    if !(classical_err <= cfg.max_classical_err) {
        failures.push(format!(
            "classical-limit error {classical_err:.3e} above {:.2e}",
            cfg.max_classical_err
        ));
    }
    if !(factor >= cfg.min_factor) {
        failures.push(format!(
            "error contraction {factor:.2} under mesh halving below the required {}",
            cfg.min_factor
        ));
    }

    let mut constants = BTreeMap::new();
    constants.insert("bulk_err".into(), run_f.bulk_max);
    constants.insert("l2_err_fine".into(), run_f.l2);
    constants.insert("l2_err_coarse".into(), run_c.l2);
    constants.insert("convergence_factor".into(), factor);
    constants.insert("classical_err".into(), classical_err);
    Ok(PdeProductReport {
        config: cfg.clone(),
        bulk_err: run_f.bulk_max,
        l2_err_fine: run_f.l2,
        l2_err_coarse: run_c.l2,
        convergence_factor: factor,
        classical_err,
        mass_drift_fine: run_f.drift,
        mass_drift_coarse: run_c.drift,
        mass_drift_classical: ev.mass_drift.abs(),
        constants,
        pass: failures.is_empty(),
        failures,
        rows: run_f.rows,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// PDE dihedral envelope: solver kernel column vs the closed-form envelope
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PdeDihedralConfig {
    pub m: usize,
    pub k: f64,
    pub q: usize,
    pub n_r: usize,
    pub r_max: f64,
    /// Kernel column base point; place it inside a chamber within about half
    /// a diffusion length of a wall so the comparison disk crosses it.
    pub x: [f64; 2],
    /// Seed time: the column is approximated at `t0` by a mass-normalized
    /// Gaussian, then evolved to `t`.
    pub t0: f64,
    pub t: f64,
    /// Decay rates of the upper and lower envelopes.
    pub c_upper: f64,
    pub c_lower: f64,
    /// Radius of the comparison disk around `x`, in units of `sqrt(t)`. The
    /// one-sided volume normalization of the envelopes drifts polynomially
    /// in the distance, so a single band only exists over moderate radii.
    pub trust_factor: f64,
    /// Resolvability guards: field values at least this fraction of the
    /// peak, and at least this many rings from the origin and the boundary.
    pub bulk_rel: f64,
    pub inner_rings: usize,
    pub outer_rings: usize,
    /// Largest allowed max/min spread of each field/envelope ratio.
    pub band_cap: f64,
    /// Sanity floor on the number of compared nodes.
    pub min_nodes: usize,
    /// At least this many nodes must sit across a wall from `x` (shorter
    /// orbit distance than direct), so the envelope's case split is
    /// genuinely exercised.
    pub min_wall_nodes: usize,
}

impl Default for PdeDihedralConfig {
    fn default() -> Self {
        PdeDihedralConfig {
            m: 3,
            k: 1.0,
            q: 16,
            n_r: 96,
            r_max: 6.0,
            // 2 sqrt(t) from the origin, 0.2 rad off the nearest mirror
            // line, i.e. a wall distance of about 0.4 sqrt(t)
            x: [1.0736, 0.2177],
            t0: 0.032,
            t: 0.3,
            c_upper: 0.2,
            c_lower: 0.3,
            trust_factor: 0.8,
            bulk_rel: 1e-3,
            inner_rings: 3,
            outer_rings: 3,
            band_cap: 10.0,
            min_nodes: 100,
            min_wall_nodes: 10,
        }
    }
}

impl PdeDihedralConfig {
    fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t > self.t0) {
            return Err(Error::Config(format!(
                "need 0 < t0 < t, got t0 = {}, t = {}",
                self.t0, self.t
            )));
        }
        if !(self.c_upper > 0.0 && self.c_upper < 0.25) {
            return Err(Error::Config(format!(
                "upper envelope rate must lie in (0, 1/4), got {}",
                self.c_upper
            )));
        }
        if !(self.c_lower > 0.25) {
            return Err(Error::Config(format!(
                "lower envelope rate must exceed 1/4, got {}",
                self.c_lower
            )));
        }
        if !(self.trust_factor > 0.0) {
            return Err(Error::Config("trust_factor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PdeDihedralRow {
    pub r: f64,
    pub theta: f64,
    pub value: f64,
    pub d_orbit: f64,
    pub lambda: f64,
    pub log_ratio_upper: f64,
    pub log_ratio_lower: f64,
    pub across_wall: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PdeDihedralReport {
    pub config: PdeDihedralConfig,
    pub nodes: usize,
    pub wall_nodes: usize,
    /// Max/min spread of the field/upper-envelope ratio, and likewise for
    /// the lower envelope.
    pub spread_upper: f64,
    pub spread_lower: f64,
    /// Empirical envelope constants: sup of field/upper-envelope and inf of
    /// field/lower-envelope.
    pub c_hat_upper: f64,
    pub c_hat_lower: f64,
    pub mass_drift: f64,
    /// The tolerance is solver-limited: the seed is an approximate column
    /// and the grid resolution bounds the attainable agreement.
    pub note: String,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    pub failures: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<PdeDihedralRow>,
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Approximates the dihedral kernel column `h_t(x, .)` on the grid (Gaussian
/// seed at `t0`, mass-normalized, evolved to `t`) and compares it pointwise
/// against both closed-form envelopes `V(x, sqrt t)^{-1} e^{-c d^2/t}
/// Lambda_D(x, y, t)` with separated rates `c_upper < 1/4 < c_lower`. Each
/// ratio must stay inside a single band of bounded width over the comparison
/// disk; the width allowance is solver-limited rather than a property of the
/// envelopes.
pub fn run_pde_dihedral_envelope(cfg: &PdeDihedralConfig) -> Result<PdeDihedralReport> {
    cfg.validate()?;
    let start = Instant::now();
    let spec = GridSpec {
        m: cfg.m,
        q: cfg.q,
        n_r: cfg.n_r,
        r_max: cfg.r_max,
        k_even: cfg.k,
        k_odd: cfg.k,
    };
    let solver = Solver::new(spec)?;
    let rs = RootSystem::dihedral(cfg.m, cfg.k, cfg.k)?;
    let group = ReflectionGroup::generate(&rs)?;
    let mut u0 = solver.gaussian_bump(cfg.x, cfg.t0)?;
    let m0 = solver.mass(&u0);
    for v in &mut u0 {
        *v /= m0;
    }
    let ev = solver.evolve(&u0, cfg.t - cfg.t0)?;
    let peak = ev.field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = cfg.bulk_rel * peak;
    let rt = cfg.t.sqrt();
    let trust = cfg.trust_factor * rt;
    let dr = solver.spec().dr();
    let r_lo = (cfg.inner_rings as f64 + 0.5) * dr;
    let r_hi = cfg.r_max - (cfg.outer_rings as f64 + 0.5) * dr;
    let x = cfg.x.to_vec();
    let log_vol = log_volume_comparable(&rs, &x, rt)?;
    let mut rows = Vec::new();
    let (mut u_lo, mut u_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut l_lo, mut l_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut wall_nodes = 0usize;
    for idx in 0..solver.node_count() {
        let u = ev.field[idx];
        let (r, theta) = solver.node_polar(idx);
        if u < cut || r < r_lo || r > r_hi {
            continue;
        }
        let p = solver.node_position(idx);
        if dist(&x, &p) > trust {
            continue;
        }
        let d = orbit_distance(&group, &x, &p).0;
        let lambda = lambda_dihedral(&rs, &group, &x, &p, cfg.t)?;
        let across_wall = lambda < 1.0;
        if across_wall {
            wall_nodes += 1;
        }
        let base = -log_vol + lambda.ln();
        let ru = u.ln() - (base - cfg.c_upper * d * d / cfg.t);
        let rl = u.ln() - (base - cfg.c_lower * d * d / cfg.t);
        u_lo = u_lo.min(ru);
        u_hi = u_hi.max(ru);
        l_lo = l_lo.min(rl);
        l_hi = l_hi.max(rl);
        rows.push(PdeDihedralRow {
            r,
            theta,
            value: u,
            d_orbit: d,
            lambda,
            log_ratio_upper: ru,
            log_ratio_lower: rl,
            across_wall,
        });
    }
    let spread_upper = (u_hi - u_lo).exp();
    let spread_lower = (l_hi - l_lo).exp();
    let mut failures = Vec::new();
    if rows.len() < cfg.min_nodes {
        failures.push(format!(
            "only {} resolvable nodes (need {})",
            rows.len(),
            cfg.min_nodes
        ));
    }
    if wall_nodes < cfg.min_wall_nodes {
        failures.push(format!(
            "only {wall_nodes} nodes across a wall (need {})",
            cfg.min_wall_nodes
        ));
    }
    if !(spread_upper <= cfg.band_cap) {
        failures.push(format!(
            "upper ratio spans a factor {spread_upper:.2} (cap {})",
            cfg.band_cap
        ));
    }
    if !(spread_lower <= cfg.band_cap) {
        failures.push(format!(
            "lower ratio spans a factor {spread_lower:.2} (cap {})",
            cfg.band_cap
        ));
    }
    let mut constants = BTreeMap::new();
    constants.insert("spread_upper".into(), spread_upper);
    constants.insert("spread_lower".into(), spread_lower);
    constants.insert("c_hat_upper".into(), u_hi.exp());
    constants.insert("c_hat_lower".into(), l_lo.exp());
    Ok(PdeDihedralReport {
        config: cfg.clone(),
        nodes: rows.len(),
        wall_nodes,
        spread_upper,
        spread_lower,
        c_hat_upper: u_hi.exp(),
        c_hat_lower: l_lo.exp(),
        mass_drift: ev.mass_drift.abs(),
        note: "solver-limited: approximate seed column and finite grid resolution \
               set the attainable band width; the comparison disk keeps orbit \
               distances moderate, where a single band is meaningful"
            .into(),
        constants,
        pass: failures.is_empty(),
        failures,
        rows,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_cover_their_ranges() {
        let l = linspace(-1.0, 2.0, 7);
        assert_eq!(l.len(), 7);
        assert_eq!(l[0], -1.0);
        assert_eq!(l[6], 2.0);
        let g = logspace(1e-2, 1e2, 5);
        assert!((g[0] - 1e-2).abs() < 1e-12);
        assert!((g[2] - 1.0).abs() < 1e-12);
        assert!((g[4] - 1e2).abs() < 1e-10);
        assert_eq!(cartesian(&[0.0, 1.0], 3).len(), 8);
    }

    #[test]
    fn trend_gap_sees_drift_but_not_noise() {
        let drift: Vec<(f64, f64)> = (0..200).map(|i| (i as f64, 0.01 * i as f64)).collect();
        let gap = tail_trend_gap(drift, 0.1).unwrap();
        assert!((gap - 0.2).abs() < 1e-9, "gap = {gap}");
        let flat: Vec<(f64, f64)> = (0..200)
            .map(|i| (i as f64, if i % 2 == 0 { 0.3 } else { -0.3 }))
            .collect();
        let gap = tail_trend_gap(flat, 0.1).unwrap();
        assert!(gap.abs() < 0.1, "gap = {gap}");
        assert!(tail_trend_gap(vec![(0.0, 0.0)], 0.1).is_none());
    }

    #[test]
    fn bounds_smoke_rank_one() {
        let cfg = BoundsConfig {
            coord_points: 9,
            coord_max: 4.0,
            t_points: 5,
            t_min: 0.1,
            t_max: 10.0,
            ..BoundsConfig::rank_one()
        };
        let rep = run_verify_bounds(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
        assert!(rep.points > 300);
        assert!(rep.sup_dev_upper.is_finite());
        assert!(rep.inf_dev_lower.is_finite());
        // admissible constants stay moderate on this small sweep
        assert!(rep.sup_dev_upper < 12.0, "sup = {}", rep.sup_dev_upper);
        assert!(rep.inf_dev_lower > -12.0, "inf = {}", rep.inf_dev_lower);
    }

    #[test]
    fn bounds_smoke_plane() {
        let cfg = BoundsConfig {
            coord_points: 3,
            coord_max: 3.0,
            t_points: 5,
            t_min: 0.1,
            t_max: 10.0,
            ..BoundsConfig::plane()
        };
        let rep = run_verify_bounds(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
    }

    #[test]
    fn lambda_smoke() {
        let cfg = LambdaConfig {
            systems: vec![
                SystemConfig::ProductA1 { k: vec![1.0] },
                SystemConfig::Dihedral {
                    m: 3,
                    k_even: 1.0,
                    k_odd: 1.0,
                },
            ],
            triples: 40,
            ..LambdaConfig::default()
        };
        let rep = run_lambda_crosscheck(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
        assert!(rep.max_rel <= 1e-12, "max rel = {}", rep.max_rel);
        assert!(rep.dihedral_ratio.is_some());
    }

    #[test]
    fn backend_smoke() {
        let cfg = BackendConfig {
            k_values: vec![1.0],
            triples: 25,
            ..BackendConfig::default()
        };
        let rep = run_backend_agreement(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
    }

    #[test]
    fn identity_smoke() {
        let cfg = IdentityConfig {
            systems: vec![SystemConfig::ProductA1 { k: vec![1.0] }],
            coord_vals: vec![-1.2, 0.0, 1.4],
            ts: vec![0.5, 2.0],
            spot_ks: vec![1.0],
            spot_xs: vec![0.3, 1.5],
            spot_ts: vec![0.4, 2.0],
            ..IdentityConfig::default()
        };
        let rep = run_identity_suite(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
        assert!(rep.constants["combined_inequality"].is_finite());
        assert!(rep.constants["prop_upper_direct"] > 0.0);
    }

    #[test]
    fn regularity_smoke() {
        let cfg = RegularityConfig {
            systems: vec![SystemConfig::ProductA1 { k: vec![1.0] }],
            coord_vals: vec![-1.0, 0.0, 1.0],
            ts: vec![0.5, 2.0],
            delta_fracs: vec![0.2],
            ..RegularityConfig::default()
        };
        let rep = run_regularity_suite(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
        assert!(rep.sup_value > 0.0 && rep.sup_value.is_finite());
    }

    #[test]
    fn measure_smoke() {
        let cfg = MeasureConfig {
            ks: vec![1.0],
            xs: vec![0.5, 2.0],
            t_points: 9,
            ..MeasureConfig::default()
        };
        let rep = run_measure_band(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
        let (lo, hi) = rep.bands["k=1"];
        assert!(lo > 0.0 && hi.is_finite() && hi >= lo);
    }

    #[test]
    fn volume_smoke() {
        let cfg = VolumeConfig {
            systems: vec![
                SystemConfig::ProductA1 { k: vec![1.0] },
                SystemConfig::Dihedral {
                    m: 3,
                    k_even: 1.0,
                    k_odd: 1.0,
                },
            ],
            x_points: 4,
            r_points: 5,
            ..VolumeConfig::default()
        };
        let rep = run_volume_check(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
    }

    #[test]
    fn pde_product_smoke() {
        let cfg = PdeProductConfig {
            q: 6,
            n_r: 31,
            r_max: 5.0,
            x0: [0.8, 0.6],
            t0: 0.16,
            t: 0.1,
            max_bulk_err: 0.2,
            max_classical_err: 0.1,
            min_factor: 1.5,
            ..PdeProductConfig::default()
        };
        let rep = run_pde_product_validation(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
        assert!(rep.l2_err_fine < rep.l2_err_coarse);
    }

    #[test]
    fn pde_dihedral_smoke() {
        let cfg = PdeDihedralConfig {
            q: 8,
            n_r: 48,
            r_max: 5.0,
            t0: 0.05,
            min_nodes: 30,
            min_wall_nodes: 5,
            ..PdeDihedralConfig::default()
        };
        let rep = run_pde_dihedral_envelope(&cfg).unwrap();
        assert!(rep.pass, "failures: {:?}", rep.failures);
        assert!(rep.nodes >= 30 && rep.wall_nodes >= 5);
        assert!(rep.spread_upper < 8.0 && rep.spread_lower < 8.0);
    }

    #[test]
    fn pde_dihedral_rejects_bad_rates() {
        let cfg = PdeDihedralConfig {
            c_upper: 0.3,
            ..PdeDihedralConfig::default()
        };
        assert!(run_pde_dihedral_envelope(&cfg).is_err());
        let cfg = PdeDihedralConfig {
            c_lower: 0.25,
            ..PdeDihedralConfig::default()
        };
        assert!(run_pde_dihedral_envelope(&cfg).is_err());
    }

    #[test]
    fn configs_round_trip_through_json() {
        let a = serde_json::to_string(&BoundsConfig::rank_one()).unwrap();
        let b: BoundsConfig = serde_json::from_str(&a).unwrap();
        assert_eq!(a, serde_json::to_string(&b).unwrap());
        let a = serde_json::to_string(&PdeProductConfig::default()).unwrap();
        let b: PdeProductConfig = serde_json::from_str(&a).unwrap();
        assert_eq!(a, serde_json::to_string(&b).unwrap());
        let a = serde_json::to_string(&LambdaConfig::default()).unwrap();
        let b: LambdaConfig = serde_json::from_str(&a).unwrap();
        assert_eq!(a, serde_json::to_string(&b).unwrap());
    }
}
