use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use nllt_core::chain::MixingProfile;
use nllt_core::error::{Error, Result};
use nllt_core::fourier::{cf_decay_scan, contraction_profile, CfScan, ContractionProfile};
use nllt_core::instance::{load_instance_path, LoadedInstance};
use nllt_core::sim::{clt_check, empirical_distribution, llt_check, CfMode, SimConfig};
use nllt_core::variance::{
    covariance_matrix, positivity_verdict, s_ell_squared, sigma_squared_estimate, PositivityVerdict,
};

use crate::report::RunReport;

/// Flag values from the command line, merged over per-file defaults once
/// the instance is loaded.
#[derive(Clone, Copy, Default)]
pub struct SimFlagArgs {
    pub horizon: Option<u64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<u64>,
}

pub struct SimFlags {
    pub horizon: usize,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

fn resolve_flags(loaded: &LoadedInstance, args: SimFlagArgs) -> Result<SimFlags> {
    let d = &loaded.defaults;
    let horizon = args
        .horizon
        .map(|v| v as usize)
        .or(d.horizon)
        .ok_or_else(|| Error::Parse("--horizon is required (no default in file)".into()))?;
    let samples = args
        .samples
        .map(|v| v as usize)
        .or(d.samples)
        .ok_or_else(|| Error::Parse("--samples is required (no default in file)".into()))?;
    Ok(SimFlags {
        horizon,
        samples,
        seed: args.seed.or(d.seed).unwrap_or(0),
        workers: args.workers.map(|v| v as usize).or(d.workers).unwrap_or(1),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Parse(format!("writing {}: {e}", path.display())))
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .map_err(|e| Error::Parse(format!("creating {}: {e}", path.display())))
}

fn emit_report<T: Serialize>(report: &RunReport<T>, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Parse(format!("serializing report: {e}")))?;
    match out {
        Some(path) => {
            write_file(path, &text)?;
            println!("report written to {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// Parse "a,b,c" or "lo:hi:count" into a float grid.
pub fn parse_f64_grid(spec: &str) -> Result<Vec<f64>> {
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!(
                "grid {spec:?} must be lo:hi:count or a comma list"
            )));
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad_grid(spec))?;
        let hi: f64 = parts[1].parse().map_err(|_| bad_grid(spec))?;
        let count: usize = parts[2].parse().map_err(|_| bad_grid(spec))?;
        if count < 2 || hi <= lo {
            return Err(bad_grid(spec));
        }
        Ok((0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect())
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad_grid(spec)))
            .collect()
    }
}

/// Parse "2:10" (inclusive, step 1), "2:10:2" or "2,4,8" into horizons.
pub fn parse_usize_grid(spec: &str) -> Result<Vec<usize>> {
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let lo: usize = parts[0].parse().map_err(|_| bad_grid(spec))?;
        let hi: usize = parts[1].parse().map_err(|_| bad_grid(spec))?;
        let step: usize = match parts.len() {
            2 => 1,
            3 => parts[2].parse().map_err(|_| bad_grid(spec))?,
            _ => return Err(bad_grid(spec)),
        };
        if step == 0 || hi < lo {
            return Err(bad_grid(spec));
        }
        Ok((lo..=hi).step_by(step).collect())
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad_grid(spec)))
            .collect()
    }
}

fn bad_grid(spec: &str) -> Error {
    Error::Parse(format!("malformed grid specification {spec:?}"))
}

#[derive(Serialize)]
struct AnalyzeOutputs {
    raw_mean: f64,
    raw_second_moment: f64,
    centered_second_moment: f64,
    ell: usize,
    states: usize,
    component_max_abs: Vec<f64>,
    exact_values_present: bool,
    exact_values_dropped: bool,
    lattice: serde_json::Value,
    mixing: MixingProfile,
    variance: nllt_core::VarianceReport,
}

pub fn cmd_analyze(path: &Path, k_max: usize, out: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let loaded = load_instance_path(path)?;
    let inst = &loaded.instance;
    let ell = inst.ell();
    let profile = MixingProfile::compute(inst.chain(), ell, k_max);
    let s2 = s_ell_squared(inst.chain(), inst.decomposition(), None)?;
    let variance = positivity_verdict(inst, &profile, s2, None, None);

    let component_max_abs = inst
        .decomposition()
        .components()
        .iter()
        .map(|t| t.iter().fold(0.0_f64, |a, v| a.max(v.abs())))
        .collect();
    let outputs = AnalyzeOutputs {
        raw_mean: loaded.raw_mean,
        raw_second_moment: loaded.raw_second_moment,
        centered_second_moment: inst.observable().second_moment(),
        ell,
        states: inst.chain().size(),
        component_max_abs,
        exact_values_present: inst.observable().exact_values().is_some(),
        exact_values_dropped: inst.observable().exact_dropped(),
        lattice: serde_json::to_value(inst.lattice()).map_err(|e| Error::Parse(e.to_string()))?,
        mixing: profile,
        variance,
    };
    let mut report = RunReport::new("analyze", &loaded.digest, outputs);
    report.wall_ms = start.elapsed().as_millis();
    emit_report(&report, out)
}

#[derive(Serialize)]
struct SimulateOutputs {
    distribution_csv: PathBuf,
    sigma2_used: f64,
    sigma2_source: String,
    ks_statistic: f64,
    covariance: nllt_core::variance::CovarianceEstimate,
}

pub fn cmd_simulate(
    path: &Path,
    args: SimFlagArgs,
    sigma2: Option<f64>,
    out_dir: &Path,
) -> Result<()> {
    let start = Instant::now();
    let loaded = load_instance_path(path)?;
    let flags = resolve_flags(&loaded, args)?;
    let inst = &loaded.instance;
    ensure_dir(out_dir)?;
    let config = SimConfig::new(flags.horizon, flags.samples, flags.seed, flags.workers);

    let dist = empirical_distribution(inst, &config)?;
    let csv_path = out_dir.join("distribution.csv");
    let mut csv = String::new();
    let _ = writeln!(
        csv,
        "# seed={} samples={} horizon={}",
        flags.seed, flags.samples, flags.horizon
    );
    let _ = writeln!(csv, "u,mass,stderr");
    let zeroes = vec![0.0; dist.support().len()];
    let stderr = dist.stderr().unwrap_or(&zeroes);
    for ((u, mass), se) in dist.support().iter().zip(dist.mass()).zip(stderr) {
        let _ = writeln!(csv, "{u},{mass},{se}");
    }
    write_file(&csv_path, &csv)?;

    let covariance = covariance_matrix(inst, &config)?;
    let (sigma2_used, sigma2_source) = match sigma2 {
        Some(v) => (v, "flag".to_string()),
        None => (
            covariance.sigma2_same_sample,
            "same-sample variance".to_string(),
        ),
    };
    let ks_statistic = clt_check(inst, &config, sigma2_used)?;

    let outputs = SimulateOutputs {
        distribution_csv: csv_path,
        sigma2_used,
        sigma2_source,
        ks_statistic,
        covariance,
    };
    let mut report = RunReport::new("simulate", &loaded.digest, outputs);
    report.seed = Some(flags.seed);
    report.samples = Some(flags.samples);
    report.horizon = Some(flags.horizon);
    report.workers = Some(flags.workers);
    report.wall_ms = start.elapsed().as_millis();
    emit_report(&report, Some(&out_dir.join("report.json")))
}

#[derive(Serialize)]
struct LltOutputs {
    llt_csv: PathBuf,
    sigma2_used: f64,
    sigma2_source: String,
    verdict: PositivityVerdict,
    report: nllt_core::sim::LltReport,
}

pub fn cmd_llt(
    path: &Path,
    args: SimFlagArgs,
    sigma2: Option<f64>,
    width: Option<f64>,
    out_dir: &Path,
) -> Result<()> {
    let start = Instant::now();
    let loaded = load_instance_path(path)?;
    let flags = resolve_flags(&loaded, args)?;
    let inst = &loaded.instance;
    ensure_dir(out_dir)?;

    let profile = MixingProfile::compute(inst.chain(), inst.ell(), 20.max(inst.ell()));
    let s2 = s_ell_squared(inst.chain(), inst.decomposition(), None)?;
    let verdict = positivity_verdict(inst, &profile, s2, None, None);
    match verdict.verdict {
        PositivityVerdict::DegenerateFEllZero | PositivityVerdict::Inconclusive => {
            return Err(Error::VerdictPrecondition {
                verdict: format!("{:?}", verdict.verdict),
            });
        }
        _ => {}
    }

    let config = SimConfig::new(flags.horizon, flags.samples, flags.seed, flags.workers);
    let (sigma2_used, sigma2_source) = match sigma2 {
        Some(v) => (v, "flag".to_string()),
        None => {
            let n = flags.horizon;
            let grid = [(n / 4).max(8), (n / 2).max(9), n.max(10)];
            let est =
                sigma_squared_estimate(inst, &grid, flags.samples, flags.seed, flags.workers)?;
            (est.sigma2, format!("estimated on grid {grid:?}"))
        }
    };
    let report_data = llt_check(inst, &config, sigma2_used, width)?;

    let csv_path = out_dir.join("llt.csv");
    let mut csv = String::new();
    let _ = writeln!(
        csv,
        "# seed={} samples={} horizon={} sigma2={}",
        flags.seed, flags.samples, flags.horizon, sigma2_used
    );
    let _ = writeln!(csv, "u,L,R,stderr");
    for row in &report_data.rows {
        let _ = writeln!(csv, "{},{},{},{}", row.u, row.l, row.r, row.stderr);
    }
    write_file(&csv_path, &csv)?;

    let outputs = LltOutputs {
        llt_csv: csv_path,
        sigma2_used,
        sigma2_source,
        verdict: verdict.verdict,
        report: report_data,
    };
    let mut report = RunReport::new("llt", &loaded.digest, outputs);
    report.seed = Some(flags.seed);
    report.samples = Some(flags.samples);
    report.horizon = Some(flags.horizon);
    report.workers = Some(flags.workers);
    report.wall_ms = start.elapsed().as_millis();
    emit_report(&report, Some(&out_dir.join("report.json")))
}

#[derive(Serialize)]
struct CfScanOutputs {
    cf_csv: PathBuf,
    contraction_csv: Option<PathBuf>,
    scan: CfScan,
    #[serde(skip_serializing_if = "Option::is_none")]
    contraction: Option<ContractionProfile>,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_cf_scan(
    path: &Path,
    theta_spec: &str,
    n_spec: &str,
    mode: CfMode,
    samples: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    out_dir: &Path,
) -> Result<()> {
    let start = Instant::now();
    let loaded = load_instance_path(path)?;
    let inst = &loaded.instance;
    ensure_dir(out_dir)?;
    let thetas = parse_f64_grid(theta_spec)?;
    let n_grid = parse_usize_grid(n_spec)?;

    let seed = seed.or(loaded.defaults.seed).unwrap_or(0);
    let samples = samples.or(loaded.defaults.samples).unwrap_or(100_000);
    let workers = workers.or(loaded.defaults.workers).unwrap_or(1);
    let mc_config = SimConfig::new(n_grid[0].max(1), samples, seed, workers);
    let mc = matches!(mode, CfMode::MonteCarlo).then_some(&mc_config);

    let scan = cf_decay_scan(inst, &thetas, &n_grid, mode, mc)?;

    let cf_path = out_dir.join("cf.csv");
    let mut csv = String::new();
    if matches!(mode, CfMode::MonteCarlo) {
        let _ = writeln!(csv, "# seed={seed} samples={samples}");
    } else {
        let _ = writeln!(csv, "# mode=exact");
    }
    let _ = writeln!(csv, "theta,n,abs_phi,mode,below_floor");
    let floor = scan.noise_floor.unwrap_or(0.0);
    let mode_name = match mode {
        CfMode::Exact => "exact",
        CfMode::MonteCarlo => "monte_carlo",
    };
    for (t_idx, &theta) in scan.theta.iter().enumerate() {
        for (n_idx, &n) in scan.n_grid.iter().enumerate() {
            let a = scan.abs_phi[t_idx][n_idx];
            let _ = writeln!(csv, "{theta},{n},{a},{mode_name},{}", a <= floor);
        }
    }
    write_file(&cf_path, &csv)?;

    let contraction = match contraction_profile(inst, &thetas, None) {
        Ok(profile) => Some(profile),
        Err(Error::PositivityWindowUnavailable { .. }) => None,
        Err(e) => return Err(e),
    };
    let contraction_csv = match &contraction {
        Some(profile) => {
            let path = out_dir.join("contraction.csv");
            let mut csv = String::new();
            let _ = writeln!(csv, "theta,prefix_index,rho");
            for (t_idx, &theta) in profile.theta.iter().enumerate() {
                for (p_idx, rho) in profile.rho[t_idx].iter().enumerate() {
                    let _ = writeln!(csv, "{theta},{p_idx},{rho}");
                }
            }
            write_file(&path, &csv)?;
            Some(path)
        }
        None => None,
    };

    let outputs = CfScanOutputs {
        cf_csv: cf_path,
        contraction_csv,
        scan,
        contraction,
    };
    let mut report = RunReport::new("cf-scan", &loaded.digest, outputs);
    report.seed = matches!(mode, CfMode::MonteCarlo).then_some(seed);
    report.samples = matches!(mode, CfMode::MonteCarlo).then_some(samples);
    report.workers = Some(workers);
    report.wall_ms = start.elapsed().as_millis();
    emit_report(&report, Some(&out_dir.join("fit_summary.json")))
}
