//! One function per experiment kind. Each writes its CSV files into the
//! output directory and returns a one-line summary.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rhm_core::dataset::{sample_train_test, sample_training_set};
use rhm_core::rng::{mix_seed, task_rng};
use rhm_core::stats::{level_moments, monte_carlo_moments, noise_scaling_probe, rule_moments, Ensemble};
use rhm_core::{io, theory_quantities, Dataset, ModelParams, RhmInstance, SensitivityConfig};
use rhm_learn::{layerwise_solve, onestep_sensitivity, synonym_recovery_score, KMeansConfig, LayerwiseConfig};
use rhm_nn::{checkpoint, sample_complexity_scan, sensitivity_profile, test_error, train, Architecture, Network, ScanConfig, Source};
use serde::Serialize;

use crate::config::{ExperimentConfig, Kind, NetOptions};
use crate::error::CliError;
use crate::records::write_csv_file;

pub const DEFAULT_OUT_DIR: &str = "rhm-out";
pub const OUT_DIR_ENV: &str = "RHM_OUT_DIR";

/// Runs the configured experiment.
pub fn run(config: &ExperimentConfig) -> Result<String, CliError> {
    let params = config.params()?;
    match config.kind {
        Kind::Gen => gen(config, &params),
        Kind::Theory => theory(config, &params),
        Kind::Stats => stats(config, &params),
        Kind::Onestep => onestep(config, &params),
        Kind::Cluster => cluster(config, &params),
        Kind::Train => train_one(config, &params),
        Kind::Scan => scan(config, &params),
        Kind::Sense => sense(config, &params),
    }
}

/// Config value, else `RHM_OUT_DIR`, else the default.
fn out_dir(config: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = config
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn p_max_u64(params: &ModelParams) -> Result<u64, CliError> {
    params
        .p_max()
        .as_u64()
        .ok_or_else(|| CliError::Config(format!("p_max = {} is too large to sample from", params.p_max())))
}

fn check_grid(grid: &[u64], params: &ModelParams) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::Config("empty P grid".into()));
    }
    let p_max = p_max_u64(params)?;
    if let Some(&bad) = grid.iter().find(|&&p| p == 0 || p > p_max) {
        return Err(CliError::Config(format!("grid value {bad} outside [1, p_max = {p_max}]")));
    }
    Ok(())
}

fn instance_for(params: &ModelParams, seed: u64, k: u64) -> Result<RhmInstance, CliError> {
    Ok(RhmInstance::build(params.with_seed(mix_seed(&[seed, k])))?)
}

fn gen(config: &ExperimentConfig, params: &ModelParams) -> Result<String, CliError> {
    let inst = RhmInstance::build(*params)?;
    // An output ending in .json names the instance file itself.
    let target = match &config.out {
        Some(p) if p.extension().is_some_and(|e| e == "json") => p.clone(),
        _ => out_dir(config)?.join("instance.json"),
    };
    if let Some(parent) = target.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    io::save_instance(&inst, &target)?;
    let mut line = format!("instance written to {}", target.display());
    if let Some(n) = config.gen.sample {
        let data = sample_training_set(&inst, n, &mut task_rng(params.seed, 0))?;
        let path = target.with_file_name("data.csv");
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        std::io::Write::write_all(&mut f, format!("{}\n", crate::records::schema_line("rhm-data")).as_bytes())?;
        data.write_csv(f)?;
        line.push_str(&format!("; {n} data written to {}", path.display()));
    }
    Ok(line)
}

#[derive(Serialize)]
struct TheoryRow {
    quantity: &'static str,
    value: String,
}

fn theory(config: &ExperimentConfig, params: &ModelParams) -> Result<String, CliError> {
    let t = theory_quantities(params)?;
    let rows = vec![
        TheoryRow { quantity: "p_max", value: t.p_max.to_string() },
        TheoryRow { quantity: "p_star", value: t.p_star.to_string() },
        TheoryRow { quantity: "p_c", value: t.p_c.to_string() },
        TheoryRow { quantity: "eps_rand", value: t.eps_rand.to_string() },
        TheoryRow { quantity: "p_min_nats", value: t.p_min_nats.to_string() },
        TheoryRow { quantity: "log_num_instances", value: t.log_num_instances.to_string() },
        TheoryRow {
            quantity: "log_f_hfm",
            value: t.log_f_hfm.map_or(String::new(), |x| x.to_string()),
        },
    ];
    if config.out.is_some() || std::env::var_os(OUT_DIR_ENV).is_some() {
        write_csv_file(&out_dir(config)?.join("theory.csv"), "rhm-theory", &rows)?;
    }
    Ok(format!(
        "p_star={} p_c={} eps_rand={} p_max={} p_min_nats={:.3}",
        t.p_star, t.p_c, t.eps_rand, t.p_max, t.p_min_nats
    ))
}

#[derive(Serialize)]
struct MomentRow {
    quantity: &'static str,
    monte_carlo: f64,
    se: f64,
    theory: f64,
}

#[derive(Serialize)]
struct NoiseRow {
    #[serde(rename = "P")]
    p: u64,
    variance: f64,
    se: f64,
    predicted: f64,
}

fn stats(config: &ExperimentConfig, params: &ModelParams) -> Result<String, CliError> {
    let opts = &config.stats;
    let dir = out_dir(config)?;
    let mc = monte_carlo_moments(params, opts.instances, config.seed, Ensemble::Rhm)?;
    let rm = rule_moments(params);
    let lm = level_moments(params);
    let row = |quantity, monte_carlo, se, theory| MomentRow { quantity, monte_carlo, se, theory };
    let rows = vec![
        row("mean", mc.rule.mean, mc.rule_se.mean, rm.mean),
        row("var", mc.rule.var, mc.rule_se.var, rm.var),
        row("cov_same_hi", mc.rule.cov_same_hi, mc.rule_se.cov_same_hi, rm.cov_same_hi),
        row("cov_same_lo", mc.rule.cov_same_lo, mc.rule_se.cov_same_lo, rm.cov_same_lo),
        row("cov_none", mc.rule.cov_none, mc.rule_se.cov_none, rm.cov_none),
        row("signal_var", mc.signal_var, mc.signal_var_se, lm.signal_var),
        row("signal_var_asymptotic", mc.signal_var, mc.signal_var_se, lm.signal_var_asymptotic),
    ];
    write_csv_file(&dir.join("moments.csv"), "rhm-moments", &rows)?;
    let mut line = format!(
        "signal_var={:.4e}±{:.1e} theory={:.4e} asymptotic={:.4e}",
        mc.signal_var, mc.signal_var_se, lm.signal_var, lm.signal_var_asymptotic
    );
    if !opts.noise_grid.is_empty() {
        let inst = RhmInstance::build(*params)?;
        let probe = noise_scaling_probe(&inst, &opts.noise_grid, opts.resamples, config.seed, opts.scheme)?;
        let rows: Vec<NoiseRow> = probe
            .points
            .iter()
            .map(|p| NoiseRow { p: p.p, variance: p.variance, se: p.se, predicted: p.predicted })
            .collect();
        write_csv_file(&dir.join("noise.csv"), "rhm-noise", &rows)?;
        match probe.slope {
            Some(s) => line.push_str(&format!(" noise_slope={s:.3}")),
            None => line.push_str(" noise_slope=undefined"),
        }
    }
    Ok(line)
}

fn onestep_grid(config: &ExperimentConfig, params: &ModelParams) -> Result<Vec<u64>, CliError> {
    let opts = &config.onestep;
    let p_max = p_max_u64(params)?;
    let grid = if opts.grid.is_empty() {
        let p_c = theory_quantities(params)?.p_c.as_f64();
        opts.ratios.iter().map(|r| ((r * p_c).round() as u64).clamp(1, p_max)).collect()
    } else {
        opts.grid.clone()
    };
    check_grid(&grid, params)?;
    Ok(grid)
}

#[derive(Serialize)]
struct OnestepRow {
    #[serde(rename = "P")]
    p: u64,
    p_over_pc: f64,
    instance: u64,
    #[serde(rename = "S")]
    s: f64,
    #[serde(rename = "SE")]
    se: f64,
}

#[derive(Serialize)]
struct CurveRow {
    #[serde(rename = "P")]
    p: u64,
    x: f64,
    y: f64,
    se: f64,
    runs: usize,
}

/// Mean and standard error of the mean.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Probe for a run of size `p`: the held-out data, or a sample of the whole
/// dataset when nothing is held out.
pub fn probe_or_full(inst: &RhmInstance, test: Dataset, cap: u64, seed: u64) -> Result<Dataset, CliError> {
    if test.len() >= 2 {
        return Ok(test);
    }
    let p_max = p_max_u64(inst.params())?;
    Ok(sample_training_set(inst, cap.min(p_max), &mut task_rng(seed, 3))?)
}

fn onestep(config: &ExperimentConfig, params: &ModelParams) -> Result<String, CliError> {
    let opts = &config.onestep;
    let grid = onestep_grid(config, params)?;
    if opts.instances == 0 {
        return Err(CliError::Config("onestep.instances must be positive".into()));
    }
    let cfg = SensitivityConfig { replacements: opts.replacements, ..Default::default() };
    let p_c = theory_quantities(params)?.p_c.as_f64();
    let mut rows = Vec::new();
    let mut curve = Vec::new();
    for &p in &grid {
        let cells: Vec<OnestepRow> = (0..opts.instances as u64)
            .into_par_iter()
            .map(|k| -> Result<OnestepRow, CliError> {
                let inst = instance_for(params, config.seed, k)?;
                let cell = mix_seed(&[config.seed, k, p]);
                let (tr, te) = sample_train_test(&inst, p, opts.probe, &mut task_rng(cell, 0))?;
                let probe = probe_or_full(&inst, te, opts.probe, cell)?;
                let s = onestep_sensitivity(&inst, &tr, &probe, &cfg, &mut task_rng(cell, 1))?;
                Ok(OnestepRow { p, p_over_pc: p as f64 / p_c, instance: k, s: s.value, se: s.se })
            })
            .collect::<Result<_, _>>()?;
        let (m, se) = mean_se(&cells.iter().map(|r| r.s).collect::<Vec<_>>());
        curve.push(CurveRow { p, x: p as f64 / p_c, y: m, se, runs: cells.len() });
        rows.extend(cells);
    }
    let dir = out_dir(config)?;
    write_csv_file(&dir.join("onestep.csv"), "rhm-onestep", &rows)?;
    write_csv_file(&dir.join("onestep_curve.csv"), "rhm-curve", &curve)?;
    let pts: Vec<String> = curve.iter().map(|c| format!("{:.3}:{:.3}", c.x, c.y)).collect();
    Ok(format!("S11 vs P/p_c {}", pts.join(" ")))
}

#[derive(Serialize)]
struct ClusterRow {
    #[serde(rename = "P")]
    p: u64,
    seed: u64,
    test_error: f64,
    train_error: f64,
    recovery_level1: f64,
    empty_clusters: usize,
}

fn cluster(config: &ExperimentConfig, params: &ModelParams) -> Result<String, CliError> {
    let opts = &config.cluster;
    check_grid(&opts.grid, params)?;
    if opts.seeds == 0 {
        return Err(CliError::Config("cluster.seeds must be positive".into()));
    }
    let dir = out_dir(config)?;
    let mut rows = Vec::new();
    let mut curve = Vec::new();
    let scale = (params.v as f64).powf(params.depth as f64 + 0.5);
    for &p in &opts.grid {
        let cells: Vec<(ClusterRow, Option<Vec<u8>>)> = (0..opts.seeds as u64)
            .into_par_iter()
            .map(|k| -> Result<_, CliError> {
                let inst = instance_for(params, config.seed, k)?;
                let cell = mix_seed(&[config.seed, k, p]);
                let (tr, te) = sample_train_test(&inst, p, opts.test_cap, &mut task_rng(cell, 0))?;
                let lcfg = LayerwiseConfig {
                    kmeans: KMeansConfig { restarts: opts.restarts, max_iters: opts.max_iters, seed: cell },
                    pooled: true,
                };
                let out = layerwise_solve(&inst, &tr, &lcfg)?;
                let level = &out.model.levels[0];
                let recovery = synonym_recovery_score(&level.cluster_of, &inst, 1)?;
                let csv = if opts.assignments {
                    let truth: Vec<Option<usize>> = level.observed.iter().map(|&c| inst.rule(1).symbol_of(c)).collect();
                    let mut buf = Vec::new();
                    level.assignment.write_csv(&mut buf, &level.observed, Some(&truth))?;
                    Some(buf)
                } else {
                    None
                };
                let test_error = if te.is_empty() { f64::NAN } else { out.model.error(&te) };
                let row = ClusterRow {
                    p,
                    seed: k,
                    test_error,
                    train_error: out.train_error,
                    recovery_level1: recovery,
                    empty_clusters: out.reports.iter().map(|r| r.empty_clusters).sum(),
                };
                Ok((row, csv))
            })
            .collect::<Result<_, _>>()?;
        for (row, csv) in cells {
            if let Some(buf) = csv {
                std::fs::write(dir.join(format!("assignments_P{}_seed{}.csv", row.p, row.seed)), buf)?;
            }
            rows.push(row);
        }
        let errs: Vec<f64> = rows.iter().filter(|r| r.p == p && r.test_error.is_finite()).map(|r| r.test_error).collect();
        if !errs.is_empty() {
            let (m, se) = mean_se(&errs);
            curve.push(CurveRow { p, x: p as f64 / scale, y: m, se, runs: errs.len() });
        }
    }
    write_csv_file(&dir.join("cluster.csv"), "rhm-cluster", &rows)?;
    write_csv_file(&dir.join("cluster_curve.csv"), "rhm-curve", &curve)?;
    let pts: Vec<String> = curve.iter().map(|c| format!("{}:{:.3}", c.p, c.y)).collect();
    Ok(format!("layerwise test error by P {}", pts.join(" ")))
}

fn architecture(net: &NetOptions, params: &ModelParams) -> Architecture {
    let mut arch = Architecture::default_for(net.arch, params);
    if let Some(w) = net.width {
        arch.width = w;
    }
    if let Some(d) = net.depth {
        arch.depth = d;
    }
    arch
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

fn train_one(config: &ExperimentConfig, params: &ModelParams) -> Result<String, CliError> {
    let p = config.train.p.unwrap_or(params.p_star().as_u64().unwrap_or(u64::MAX));
    check_grid(&[p], params)?;
    let arch = architecture(&config.net, params);
    arch.validate(params)?;
    let inst = RhmInstance::build(*params)?;
    let (tr, te) = sample_train_test(&inst, p, config.train.test_cap, &mut task_rng(config.seed, 0))?;
    let mut net = Network::init(arch, params, &mut task_rng(config.seed, 1))?;
    let outcome = train(&mut net, &tr, &config.net.train_config(), &mut task_rng(config.seed, 2))?;
    let dir = out_dir(config)?;
    checkpoint::save(&net, &dir.join("checkpoint.json"))?;
    let rows: Vec<LossRow> = outcome
        .loss_history
        .iter()
        .enumerate()
        .map(|(epoch, &loss)| LossRow { epoch: epoch + 1, loss })
        .collect();
    write_csv_file(&dir.join("loss.csv"), "rhm-loss", &rows)?;
    let err = if te.is_empty() { "n/a".to_string() } else { format!("{:.4}", test_error(&net, &te)?) };
    Ok(format!(
        "P={p} arch={} epochs={} converged={} train_loss={:.3e} test_error={err}",
        arch.kind,
        outcome.epochs,
        outcome.converged,
        outcome.final_loss()
    ))
}

#[derive(Serialize)]
struct ScanCurveRow {
    #[serde(rename = "P")]
    p: u64,
    mean_error: Option<f64>,
    se: f64,
    runs: usize,
    converged: usize,
}

fn scan(config: &ExperimentConfig, params: &ModelParams) -> Result<String, CliError> {
    let opts = &config.scan;
    check_grid(&opts.grid, params)?;
    let scfg = ScanConfig {
        arch: architecture(&config.net, params),
        grid: opts.grid.clone(),
        seeds: opts.seeds,
        seed: config.seed,
        train: config.net.train_config(),
        threshold: opts.threshold,
        test_cap: opts.test_cap,
        stop_at_first: opts.stop_at_first,
        source: if opts.hfm { Source::Hfm } else { Source::Rhm },
    };
    let res = sample_complexity_scan(params, &scfg)?;
    let dir = out_dir(config)?;
    write_csv_file(&dir.join("scan.csv"), "rhm-scan", &res.records)?;
    let curve: Vec<ScanCurveRow> = res
        .points
        .iter()
        .map(|p| ScanCurveRow { p: p.p, mean_error: p.mean_error, se: p.se, runs: p.runs, converged: p.converged })
        .collect();
    write_csv_file(&dir.join("scan_curve.csv"), "rhm-scan-curve", &curve)?;
    let p_star = res.p_star.map_or("above grid max".to_string(), |p| p.to_string());
    Ok(format!(
        "arch={} threshold={} ({:.4}) P*={p_star} predicted p_star={}",
        scfg.arch.kind,
        res.threshold,
        res.threshold_value,
        params.p_star()
    ))
}

#[derive(Serialize)]
struct SenseRow {
    #[serde(rename = "P")]
    p: u64,
    seed: u64,
    stage: &'static str,
    k: usize,
    l: usize,
    #[serde(rename = "S")]
    s: f64,
    #[serde(rename = "SE")]
    se: f64,
    probe_size: usize,
    #[serde(rename = "R")]
    r: usize,
    test_error: f64,
}

fn sense(config: &ExperimentConfig, params: &ModelParams) -> Result<String, CliError> {
    let opts = &config.sense;
    let grid = if opts.grid.is_empty() {
        vec![params.p_star().as_u64().unwrap_or(u64::MAX)]
    } else {
        opts.grid.clone()
    };
    check_grid(&grid, params)?;
    let arch = architecture(&config.net, params);
    arch.validate(params)?;
    let scfg = SensitivityConfig { replacements: opts.replacements, ..Default::default() };
    let mut rows = Vec::new();
    for &p in &grid {
        for k in 0..opts.seeds as u64 {
            let inst = instance_for(params, config.seed, k)?;
            let cell = mix_seed(&[config.seed, k, p]);
            let (tr, te) = sample_train_test(&inst, p, opts.probe, &mut task_rng(cell, 0))?;
            let probe = probe_or_full(&inst, te, opts.probe, cell)?;
            let mut net = Network::init(arch, params, &mut task_rng(cell, 1))?;
            for stage in ["init", "trained"] {
                if stage == "trained" {
                    train(&mut net, &tr, &config.net.train_config(), &mut task_rng(cell, 2))?;
                }
                let err = test_error(&net, &probe)?;
                let rep = sensitivity_profile(&net, &inst, &probe, &scfg, &mut task_rng(cell, 4))?;
                for (layer, by_level) in rep.values.iter().enumerate() {
                    for (l, s) in by_level.iter().enumerate() {
                        rows.push(SenseRow {
                            p,
                            seed: k,
                            stage,
                            k: layer,
                            l: l + 1,
                            s: s.value,
                            se: s.se,
                            probe_size: rep.probe_size,
                            r: rep.replacements,
                            test_error: err,
                        });
                    }
                }
            }
        }
    }
    write_csv_file(&out_dir(config)?.join("sensitivity.csv"), "rhm-sensitivity", &rows)?;
    let diag: Vec<String> = rows
        .iter()
        .filter(|r| r.stage == "trained" && r.k == r.l + 1)
        .map(|r| format!("S{}{}={:.3}", r.k, r.l, r.s))
        .collect();
    Ok(format!("trained {} ({} rows written)", diag.join(" "), rows.len()))
}

/// Loads an instance file, for inspection and fuzzing.
pub fn load_instance(path: &Path) -> Result<RhmInstance, CliError> {
    Ok(io::load_instance(path)?)
}
