use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rhm_cli::{parse_grid, run, CliError, ExperimentConfig, Kind};
use rhm_nn::ArchKind;

const THREADS_ENV: &str = "RHM_THREADS";

/// Random Hierarchy Model experiments. Flags override values from `--config`.
#[derive(Debug, Parser)]
#[command(name = "rhm", version)]
struct Args {
    /// gen, theory, stats, onestep, cluster, train, scan or sense. Taken from
    /// the config file when omitted.
    kind: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    v: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long = "L")]
    depth: Option<usize>,
    #[arg(long)]
    nc: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Training-set size for `train`.
    #[arg(long = "P")]
    p: Option<u64>,
    /// `a,b,c` or `lo:hi:ratio`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    width: Option<usize>,
    /// Instances (or instance and initialization pairs) per grid point.
    #[arg(long)]
    seeds: Option<usize>,
    /// Output directory; for `gen`, a path ending in `.json` names the file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn build_config(args: Args) -> Result<ExperimentConfig, CliError> {
    let kind: Option<Kind> = args.kind.as_deref().map(str::parse).transpose()?;
    let mut cfg = match (&args.config, kind) {
        (Some(path), kind) => {
            let cfg = ExperimentConfig::load(path)?;
            if kind.is_some_and(|k| k != cfg.kind) {
                return Err(CliError::Config(format!(
                    "subcommand {} does not match config kind {}",
                    kind.unwrap().name(),
                    cfg.kind.name()
                )));
            }
            cfg
        }
        (None, Some(kind)) => ExperimentConfig::new(kind),
        (None, None) => return Err(CliError::Config("no subcommand and no --config".into())),
    };
    let model = &mut cfg.model;
    model.v = args.v.or(model.v);
    model.m = args.m.or(model.m);
    model.s = args.s.or(model.s);
    model.depth = args.depth.or(model.depth);
    model.nc = args.nc.or(model.nc);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.out = args.out.or(cfg.out);
    cfg.threads = args.threads.or(cfg.threads);
    if let Some(p) = args.p {
        cfg.train.p = Some(p);
    }
    if let Some(arch) = &args.arch {
        cfg.net.arch = arch.parse::<ArchKind>().map_err(|e| CliError::Config(e.to_string()))?;
    }
    if args.width.is_some() {
        cfg.net.width = args.width;
    }
    if let Some(n) = args.seeds {
        match cfg.kind {
            Kind::Cluster => cfg.cluster.seeds = n,
            Kind::Scan => cfg.scan.seeds = n,
            Kind::Sense => cfg.sense.seeds = n,
            Kind::Onestep => cfg.onestep.instances = n,
            Kind::Stats => cfg.stats.instances = n,
            _ => return Err(CliError::Config(format!("--seeds does not apply to {}", cfg.kind.name()))),
        }
    }
    if let Some(text) = &args.grid {
        let grid = parse_grid(text)?;
        let kind = cfg.kind;
        *cfg.grid_mut().ok_or_else(|| CliError::Config(format!("--grid does not apply to {}", kind.name())))? = grid;
    }
    Ok(cfg)
}

fn threads(cfg: &ExperimentConfig) -> Result<Option<usize>, CliError> {
    match cfg.threads {
        Some(n) => Ok(Some(n)),
        None => match std::env::var(THREADS_ENV) {
            Ok(t) => t
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("{THREADS_ENV}={t:?} is not a thread count"))),
            Err(_) => Ok(None),
        },
    }
}

fn main_inner() -> Result<String, CliError> {
    let args = Args::try_parse().map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => e.exit(),
        _ => CliError::Config(e.to_string().trim().to_string()),
    })?;
    let cfg = build_config(args)?;
    if let Some(n) = threads(&cfg)? {
        if n == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    run(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner() {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
