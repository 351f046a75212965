//! The nine acceptance gates, one test each, printing a one-line verdict.
//!
//! Every tolerance is pinned here in code next to the gate it belongs to;
//! the suites' defaults are asserted against these pins so they cannot
//! drift silently.

use std::time::Instant;

use dunkl_core::harness::{
    run_backend_agreement, run_identity_suite, run_lambda_crosscheck, run_measure_band,
    run_pde_dihedral_envelope, run_pde_product_validation, run_regularity_suite, run_verify_bounds,
    run_volume_check, BackendConfig, BoundsConfig, IdentityConfig, LambdaConfig, MeasureConfig,
    PdeDihedralConfig, PdeProductConfig, RegularityConfig, VolumeConfig,
};

fn verdict(n: usize, label: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {n} [{label}]: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

#[test]
fn criterion_1_envelope_sandwich_product_systems() {
    let start = Instant::now();
    let rank1 = BoundsConfig::rank_one();
    let plane = BoundsConfig::plane();
    for cfg in [&rank1, &plane] {
        assert_eq!(cfg.c_upper, 0.2);
        assert_eq!(cfg.c_lower, 0.3);
        assert_eq!(cfg.s_max, 400.0);
        assert_eq!(cfg.trend_tail, 0.1);
    }
    let rep1 = run_verify_bounds(&rank1).unwrap();
    let rep2 = run_verify_bounds(&plane).unwrap();
    let points = rep1.points + rep2.points;
    let s_top = rep1
        .rows
        .iter()
        .chain(rep2.rows.iter())
        .map(|r| r.s)
        .fold(0.0f64, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = rep1.pass && rep2.pass && points >= 10_000 && s_top >= 300.0 && elapsed < 300.0;
    verdict(
        1,
        "two-sided envelope sandwich, rank-1 and plane product",
        pass,
        &format!(
            "{points} points, s up to {s_top:.0}, C_u = {:.2}/{:.2}, C_l = {:.2}/{:.2}, {elapsed:.1} s",
            rep1.constants["envelope_upper"],
            rep2.constants["envelope_upper"],
            rep1.constants["envelope_lower"],
            rep2.constants["envelope_lower"]
        ),
    );
    assert!(rep1.pass, "rank-1 sweep failed: {:?}", rep1.failures);
    assert!(rep2.pass, "plane sweep failed: {:?}", rep2.failures);
    assert!(points >= 10_000, "sweep too small: {points} points");
    assert!(
        s_top >= 300.0,
        "sweep never reaches the far regime: {s_top}"
    );
    assert!(elapsed < 300.0, "criterion 1 overran: {elapsed:.1} s");
}

#[test]
fn criterion_2_lambda_dp_equals_bruteforce() {
    let start = Instant::now();
    let cfg = LambdaConfig::default();
    assert_eq!(cfg.triples, 1000);
    assert_eq!(cfg.max_len, 5);
    assert_eq!(cfg.tol, 1e-12);
    assert_eq!(cfg.systems.len(), 4, "Z2^1, Z2^2, dihedral m=3 and m=4");
    let rep = run_lambda_crosscheck(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = rep.pass && elapsed < 60.0;
    verdict(
        2,
        "admissible-sum dynamic program vs exhaustive enumeration",
        pass,
        &format!(
            "{} triples, max rel {:.2e}, {elapsed:.1} s",
            rep.rows.len(),
            rep.max_rel
        ),
    );
    assert!(rep.pass, "failures: {:?}", rep.failures);
    assert!(rep.rows.len() >= 4000);
    assert!(elapsed < 60.0, "criterion 2 overran: {elapsed:.1} s");
}

#[test]
fn criterion_3_backend_agreement() {
    let cfg = BackendConfig::default();
    assert_eq!(cfg.tol, 1e-8);
    assert!(cfg.triples * cfg.k_values.len() >= 1000);
    let rep = run_backend_agreement(&cfg).unwrap();
    verdict(
        3,
        "closed-form kernel vs integral-representation backend",
        rep.pass,
        &format!("{} triples, max rel {:.2e}", rep.points, rep.max_rel),
    );
    assert!(rep.pass, "failures: {:?}", rep.failures);
    assert!(rep.points >= 1000);
}

#[test]
fn criterion_4_identity_suite() {
    let cfg = IdentityConfig::default();
    assert_eq!(cfg.residual_tol, 1e-5);
    assert_eq!(cfg.quad_tol, 1e-6);
    let rep = run_identity_suite(&cfg).unwrap();
    verdict(
        4,
        "differential identities, conservation, direct and recursive bounds",
        rep.pass,
        &format!(
            "{} rows, residuals {:.1e}/{:.1e}, quadrature {:.1e}/{:.1e}, constants finite",
            rep.points, rep.max_studia, rep.max_basic, rep.max_mass_dev, rep.max_semigroup_dev
        ),
    );
    assert!(rep.pass, "failures: {:?}", rep.failures);
    for key in [
        "prop_upper_direct",
        "prop_lower_direct",
        "prop_upper_recursion",
        "prop_lower_recursion",
        "combined_inequality",
    ] {
        assert!(
            rep.constants[key].is_finite(),
            "{key} not finite: {}",
            rep.constants[key]
        );
    }
}

#[test]
fn criterion_5_volume_band_and_doubling() {
    let cfg = VolumeConfig::default();
    assert_eq!(cfg.x_max, 10.0);
    assert_eq!(cfg.r_min, 1e-2);
    assert_eq!(cfg.r_max, 10.0);
    let rep = run_volume_check(&cfg).unwrap();
    let c_hat = rep
        .constants
        .iter()
        .filter(|(k, _)| k.ends_with("c_hat"))
        .map(|(_, v)| *v)
        .fold(0.0f64, f64::max);
    verdict(
        5,
        "exact ball volume vs comparable product, with doubling",
        rep.pass,
        &format!("{} rows, worst band constant {:.2}", rep.points, c_hat),
    );
    assert!(rep.pass, "failures: {:?}", rep.failures);
}

#[test]
fn criterion_6_regularity_quotients() {
    let cfg = RegularityConfig::default();
    assert_eq!(cfg.c4, 4.0);
    assert_eq!(cfg.c5, 4.0);
    let rep = run_regularity_suite(&cfg).unwrap();
    verdict(
        6,
        "spatial regularity of the kernel and its time derivative",
        rep.pass,
        &format!(
            "{} rows, quotients {:.2}/{:.2}, small-shift band {:.2}",
            rep.points,
            rep.constants["holder_value"],
            rep.constants["holder_derivative"],
            rep.constants["small_displacement"]
        ),
    );
    assert!(rep.pass, "failures: {:?}", rep.failures);
}

#[test]
fn criterion_7_measure_band_four_decades() {
    let cfg = MeasureConfig::default();
    assert!(cfg.t_max / cfg.t_min >= 1e4, "need four decades of t");
    assert_eq!(cfg.band_cap, 100.0);
    let rep = run_measure_band(&cfg).unwrap();
    let width = rep
        .bands
        .values()
        .map(|(lo, hi)| hi / lo)
        .fold(0.0f64, f64::max);
    verdict(
        7,
        "orbit-measure ratio banded across four decades, both orbit points",
        rep.pass,
        &format!("{} rows, worst band width {width:.2}", rep.points),
    );
    assert!(rep.pass, "failures: {:?}", rep.failures);
    assert!(rep.rows.iter().any(|r| r.flip), "reflected point untested");
}

#[test]
fn criterion_8_solver_vs_convolution_oracle() {
    let cfg = PdeProductConfig::default();
    assert_eq!(cfg.max_bulk_err, 0.02);
    assert_eq!(cfg.max_classical_err, 0.01);
    assert_eq!(cfg.min_factor, 3.0);
    let rep = run_pde_product_validation(&cfg).unwrap();
    verdict(
        8,
        "heat solver vs exact convolution oracle, classical limit, mesh order",
        rep.pass,
        &format!(
            "bulk {:.2}%, classical {:.2}%, refinement factor {:.1}",
            100.0 * rep.bulk_err,
            100.0 * rep.classical_err,
            rep.convergence_factor
        ),
    );
    assert!(rep.pass, "failures: {:?}", rep.failures);
}

#[test]
fn criterion_9_dihedral_envelope_band() {
    let start = Instant::now();
    let cfg = PdeDihedralConfig::default();
    assert_eq!(cfg.m, 3);
    assert_eq!(cfg.k, 1.0);
    assert_eq!(cfg.band_cap, 10.0);
    let rep = run_pde_dihedral_envelope(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = rep.pass && elapsed < 900.0;
    verdict(
        9,
        "solver kernel column inside the dihedral envelope band",
        pass,
        &format!(
            "{} nodes ({} across a wall), spreads {:.2}/{:.2} vs cap {}, {elapsed:.1} s; {}",
            rep.nodes, rep.wall_nodes, rep.spread_upper, rep.spread_lower, cfg.band_cap, rep.note
        ),
    );
    assert!(rep.pass, "failures: {:?}", rep.failures);
    assert!(!rep.note.is_empty(), "tolerance provenance must be labeled");
    assert!(elapsed < 900.0, "criterion 9 overran: {elapsed:.1} s");
}
