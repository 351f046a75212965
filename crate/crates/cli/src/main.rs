//! Sweep driver for the heat-kernel verification suites.
//!
//! Each subcommand runs one suite, writes its rows as CSV, and emits a JSON
//! summary `{suite, pass, empirical_constants, max_residuals, config_echo}`.
//! Output is deterministic: the same config and seed produce byte-identical
//! files regardless of `--jobs`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use dunkl_core::harness::{
    run_backend_agreement, run_identity_suite, run_lambda_crosscheck, run_measure_band,
    run_pde_dihedral_envelope, run_pde_product_validation, run_regularity_suite, run_verify_bounds,
    run_volume_check, BackendConfig, BoundsConfig, IdentityConfig, LambdaConfig, MeasureConfig,
    PdeDihedralConfig, PdeProductConfig, RegularityConfig, VolumeConfig,
};

#[derive(Parser)]
#[command(
    name = "dunkl",
    version,
    about = "Reflection-group heat kernel verification sweeps"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Kernel vs two-sided envelopes over a position/time sweep.
    VerifyBounds(Common),
    /// Differential and integral identities, regularity quotients, measure
    /// bands, and the backend cross-check.
    Identities(Common),
    /// Dynamic-programming Lambda vs exhaustive enumeration, plus scaling.
    LambdaCheck(Common),
    /// Weighted ball volumes vs the comparable product form.
    VolumeCheck(Common),
    /// Heat solver validation (product layout) and the dihedral envelope.
    PdeRun(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the CSV rows and JSON summary.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the sweep seed where the suite draws random points.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the sweep pool (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

/// Sub-configs of the `identities` suite; omitted sections use defaults.
#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct IdentitiesBundle {
    identity: Option<IdentityConfig>,
    regularity: Option<RegularityConfig>,
    measure: Option<MeasureConfig>,
    backend: Option<BackendConfig>,
}

/// Sub-configs of the `pde-run` suite.
#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PdeBundle {
    product: Option<PdeProductConfig>,
    dihedral: Option<PdeDihedralConfig>,
}

#[derive(Serialize)]
struct Summary {
    suite: &'static str,
    pass: bool,
    empirical_constants: BTreeMap<String, f64>,
    max_residuals: BTreeMap<String, f64>,
    config_echo: Value,
    failures: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.cmd {
        Cmd::VerifyBounds(c)
        | Cmd::Identities(c)
        | Cmd::LambdaCheck(c)
        | Cmd::VolumeCheck(c)
        | Cmd::PdeRun(c) => c,
    };
    if let Some(jobs) = common.jobs {
        // ignore the error if a pool already exists (tests call main twice)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(&cli.cmd) {
        Ok(summary) => {
            if summary.pass {
                println!("{}: PASS", summary.suite);
                ExitCode::SUCCESS
            } else {
                println!("{}: FAIL", summary.suite);
                for f in &summary.failures {
                    println!("  - {f}");
                }
                ExitCode::from(2)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: &Cmd) -> Result<Summary> {
    let summary = match cmd {
        Cmd::VerifyBounds(c) => verify_bounds(c)?,
        Cmd::Identities(c) => identities(c)?,
        Cmd::LambdaCheck(c) => lambda_check(c)?,
        Cmd::VolumeCheck(c) => volume_check(c)?,
        Cmd::PdeRun(c) => pde_run(c)?,
    };
    Ok(summary)
}

fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn write_rows<R: Serialize>(dir: &Path, name: &str, rows: &[R]) -> Result<()> {
    let path = dir.join(name);
    let mut wtr =
        csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    let path = dir.join(format!("{}_summary.json", summary.suite.replace('-', "_")));
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn prefixed(dst: &mut BTreeMap<String, f64>, prefix: &str, src: &BTreeMap<String, f64>) {
    for (k, v) in src {
        dst.insert(format!("{prefix}{k}"), *v);
    }
}

fn verify_bounds(c: &Common) -> Result<Summary> {
    let cfg: BoundsConfig = match &c.config {
        Some(p) => load_config(p)?,
        None => BoundsConfig::rank_one(),
    };
    fs::create_dir_all(&c.out)?;
    let report = run_verify_bounds(&cfg)?;
    write_rows(&c.out, "bounds_rows.csv", &report.rows)?;
    let mut max_residuals = BTreeMap::new();
    max_residuals.insert("trend_gap_upper".into(), report.trend_gap_upper);
    max_residuals.insert("trend_gap_lower".into(), report.trend_gap_lower);
    let summary = Summary {
        suite: "verify-bounds",
        pass: report.pass,
        empirical_constants: report.constants.clone(),
        max_residuals,
        config_echo: serde_json::to_value(&cfg)?,
        failures: report.failures.clone(),
    };
    write_summary(&c.out, &summary)?;
    Ok(summary)
}

fn identities(c: &Common) -> Result<Summary> {
    let bundle: IdentitiesBundle = match &c.config {
        Some(p) => load_config(p)?,
        None => IdentitiesBundle::default(),
    };
    let id_cfg = bundle.identity.unwrap_or_default();
    let reg_cfg = bundle.regularity.unwrap_or_default();
    let mea_cfg = bundle.measure.unwrap_or_default();
    let mut bak_cfg = bundle.backend.unwrap_or_default();
    if let Some(seed) = c.seed {
        bak_cfg.seed = seed;
    }
    fs::create_dir_all(&c.out)?;

    let id = run_identity_suite(&id_cfg)?;
    let reg = run_regularity_suite(&reg_cfg)?;
    let mea = run_measure_band(&mea_cfg)?;
    let bak = run_backend_agreement(&bak_cfg)?;
    write_rows(&c.out, "identity_rows.csv", &id.rows)?;
    write_rows(&c.out, "regularity_rows.csv", &reg.rows)?;
    write_rows(&c.out, "measure_rows.csv", &mea.rows)?;
    write_rows(&c.out, "backend_rows.csv", &bak.rows)?;

    let mut constants = BTreeMap::new();
    prefixed(&mut constants, "identity_", &id.constants);
    prefixed(&mut constants, "regularity_", &reg.constants);
    prefixed(&mut constants, "measure_", &mea.constants);
    prefixed(&mut constants, "backend_", &bak.constants);
    let mut max_residuals = BTreeMap::new();
    for key in ["studia_max", "basic_max", "mass_max", "semigroup_max"] {
        if let Some(v) = id.constants.get(key) {
            max_residuals.insert(format!("identity_{key}"), *v);
        }
    }
    max_residuals.insert("backend_max_rel".into(), bak.max_rel);

    let mut failures = Vec::new();
    for (tag, f) in [
        ("identity", &id.failures),
        ("regularity", &reg.failures),
        ("measure", &mea.failures),
        ("backend", &bak.failures),
    ] {
        failures.extend(f.iter().map(|m| format!("{tag}: {m}")));
    }
    let summary = Summary {
        suite: "identities",
        pass: id.pass && reg.pass && mea.pass && bak.pass,
        empirical_constants: constants,
        max_residuals,
        config_echo: serde_json::json!({
            "identity": id_cfg,
            "regularity": reg_cfg,
            "measure": mea_cfg,
            "backend": bak_cfg,
        }),
        failures,
    };
    write_summary(&c.out, &summary)?;
    Ok(summary)
}

fn lambda_check(c: &Common) -> Result<Summary> {
    let mut cfg: LambdaConfig = match &c.config {
        Some(p) => load_config(p)?,
        None => LambdaConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    fs::create_dir_all(&c.out)?;
    let report = run_lambda_crosscheck(&cfg)?;
    write_rows(&c.out, "lambda_rows.csv", &report.rows)?;
    let mut max_residuals = BTreeMap::new();
    max_residuals.insert("max_rel".into(), report.max_rel);
    let summary = Summary {
        suite: "lambda-check",
        pass: report.pass,
        empirical_constants: report.constants.clone(),
        max_residuals,
        config_echo: serde_json::to_value(&cfg)?,
        failures: report.failures.clone(),
    };
    write_summary(&c.out, &summary)?;
    Ok(summary)
}

fn volume_check(c: &Common) -> Result<Summary> {
    let cfg: VolumeConfig = match &c.config {
        Some(p) => load_config(p)?,
        None => VolumeConfig::default(),
    };
    fs::create_dir_all(&c.out)?;
    let report = run_volume_check(&cfg)?;
    write_rows(&c.out, "volume_rows.csv", &report.rows)?;
    let summary = Summary {
        suite: "volume-check",
        pass: report.pass,
        empirical_constants: report.constants.clone(),
        max_residuals: BTreeMap::new(),
        config_echo: serde_json::to_value(&cfg)?,
        failures: report.failures.clone(),
    };
    write_summary(&c.out, &summary)?;
    Ok(summary)
}

fn pde_run(c: &Common) -> Result<Summary> {
    let bundle: PdeBundle = match &c.config {
        Some(p) => load_config(p)?,
        None => PdeBundle::default(),
    };
    let prod_cfg = bundle.product.unwrap_or_default();
    let dih_cfg = bundle.dihedral.unwrap_or_default();
    fs::create_dir_all(&c.out)?;
    let prod = run_pde_product_validation(&prod_cfg)?;
    let dih = run_pde_dihedral_envelope(&dih_cfg)?;
    write_rows(&c.out, "pde_product_rows.csv", &prod.rows)?;
    write_rows(&c.out, "pde_dihedral_rows.csv", &dih.rows)?;

    let mut constants = BTreeMap::new();
    prefixed(&mut constants, "product_", &prod.constants);
    prefixed(&mut constants, "dihedral_", &dih.constants);
    let mut max_residuals = BTreeMap::new();
    max_residuals.insert("product_bulk_err".into(), prod.bulk_err);
    max_residuals.insert("product_classical_err".into(), prod.classical_err);
    max_residuals.insert("product_mass_drift".into(), prod.mass_drift_fine);
    max_residuals.insert("dihedral_mass_drift".into(), dih.mass_drift);

    let mut failures = Vec::new();
    failures.extend(prod.failures.iter().map(|m| format!("product: {m}")));
    failures.extend(dih.failures.iter().map(|m| format!("dihedral: {m}")));
    let summary = Summary {
        suite: "pde-run",
        pass: prod.pass && dih.pass,
        empirical_constants: constants,
        max_residuals,
        config_echo: serde_json::json!({
            "product": prod_cfg,
            "dihedral": dih_cfg,
            "dihedral_note": dih.note,
        }),
        failures,
    };
    write_summary(&c.out, &summary)?;
    Ok(summary)
}
