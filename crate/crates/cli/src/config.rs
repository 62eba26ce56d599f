//! Experiment configuration: a TOML file, command-line overrides on top.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rhm_core::stats::SamplingScheme;
use rhm_core::ModelParams;
use rhm_nn::{ArchKind, Threshold, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Gen,
    Theory,
    Stats,
    Onestep,
    Cluster,
    Train,
    Scan,
    Sense,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Gen,
        Kind::Theory,
        Kind::Stats,
        Kind::Onestep,
        Kind::Cluster,
        Kind::Train,
        Kind::Scan,
        Kind::Sense,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Gen => "gen",
            Kind::Theory => "theory",
            Kind::Stats => "stats",
            Kind::Onestep => "onestep",
            Kind::Cluster => "cluster",
            Kind::Train => "train",
            Kind::Scan => "scan",
            Kind::Sense => "sense",
        }
    }
}

impl FromStr for Kind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment kind {s:?}")))
    }
}

/// Model parameters as written in a config file. `m` and `nc` default to the
/// maximal case `v^(s-1)` and `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub v: Option<usize>,
    pub m: Option<usize>,
    pub s: Option<usize>,
    #[serde(rename = "L")]
    pub depth: Option<usize>,
    pub nc: Option<usize>,
}

impl ModelSection {
    pub fn resolve(&self, seed: u64) -> Result<ModelParams, CliError> {
        let v = self.v.ok_or_else(|| CliError::Config("model.v is required".into()))?;
        let s = self.s.unwrap_or(2);
        let depth = self.depth.unwrap_or(2);
        let m = match self.m {
            Some(m) => m,
            None => u32::try_from(s - 1)
                .ok()
                .and_then(|e| v.checked_pow(e))
                .ok_or_else(|| CliError::Config("v^(s-1) overflows".into()))?,
        };
        let params = ModelParams::new(v, m, s, depth, self.nc.unwrap_or(v), seed);
        params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenOptions {
    /// Also write this many sampled data as CSV.
    pub sample: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsOptions {
    /// Instances for the Monte Carlo moments.
    pub instances: usize,
    /// Training-set sizes of the noise probe; empty skips it.
    pub noise_grid: Vec<u64>,
    pub resamples: usize,
    pub scheme: SamplingScheme,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self { instances: 500, noise_grid: Vec::new(), resamples: 200, scheme: SamplingScheme::WithoutReplacement }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnestepOptions {
    /// Training-set sizes in units of `p_c`; ignored when `grid` is set.
    pub ratios: Vec<f64>,
    /// Absolute training-set sizes.
    pub grid: Vec<u64>,
    pub instances: usize,
    pub probe: u64,
    pub replacements: usize,
}

impl Default for OnestepOptions {
    fn default() -> Self {
        Self { ratios: vec![0.25, 0.5, 1.0, 2.0, 4.0], grid: Vec::new(), instances: 10, probe: 1000, replacements: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterOptions {
    pub grid: Vec<u64>,
    pub seeds: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub test_cap: u64,
    /// Write the level-1 assignment of the last run as CSV.
    pub assignments: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self { grid: Vec::new(), seeds: 5, restarts: 10, max_iters: 100, test_cap: 20_000, assignments: false }
    }
}

/// Network and optimizer shared by `train`, `scan` and `sense`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetOptions {
    pub arch: ArchKind,
    /// Hidden width; the architecture default when absent.
    pub width: Option<usize>,
    /// Hidden layers of a deep FCN.
    pub depth: Option<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss_threshold: f64,
    pub max_epochs: usize,
}

impl Default for NetOptions {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            arch: ArchKind::TreeCnn,
            width: None,
            depth: None,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            loss_threshold: t.loss_threshold,
            max_epochs: t.max_epochs,
        }
    }
}

impl NetOptions {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            loss_threshold: self.loss_threshold,
            max_epochs: self.max_epochs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOptions {
    #[serde(rename = "P")]
    pub p: Option<u64>,
    pub test_cap: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { p: None, test_cap: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    pub grid: Vec<u64>,
    pub seeds: usize,
    pub threshold: Threshold,
    pub test_cap: u64,
    pub stop_at_first: bool,
    pub hfm: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            grid: Vec::new(),
            seeds: 5,
            threshold: Threshold::default(),
            test_cap: 20_000,
            stop_at_first: false,
            hfm: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SenseOptions {
    pub grid: Vec<u64>,
    pub seeds: usize,
    pub probe: u64,
    pub replacements: usize,
}

impl Default for SenseOptions {
    fn default() -> Self {
        Self { grid: Vec::new(), seeds: 1, probe: 1000, replacements: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    /// Output directory.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub gen: GenOptions,
    #[serde(default)]
    pub stats: StatsOptions,
    #[serde(default)]
    pub onestep: OnestepOptions,
    #[serde(default)]
    pub cluster: ClusterOptions,
    #[serde(default)]
    pub net: NetOptions,
    #[serde(default)]
    pub train: TrainOptions,
    #[serde(default)]
    pub scan: ScanOptions,
    #[serde(default)]
    pub sense: SenseOptions,
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        Self {
            kind,
            seed: 0,
            out: None,
            threads: None,
            model: ModelSection::default(),
            gen: GenOptions::default(),
            stats: StatsOptions::default(),
            onestep: OnestepOptions::default(),
            cluster: ClusterOptions::default(),
            net: NetOptions::default(),
            train: TrainOptions::default(),
            scan: ScanOptions::default(),
            sense: SenseOptions::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|r| text[..r.start.min(text.len())].lines().count().max(1));
            let at = line.map_or(String::new(), |l| format!(" (line {l})"));
            CliError::Config(format!("config{at}: {}", e.message().trim()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        self.model.resolve(self.seed)
    }

    /// The grid used by the selected experiment, if it takes one.
    pub fn grid_mut(&mut self) -> Option<&mut Vec<u64>> {
        match self.kind {
            Kind::Cluster => Some(&mut self.cluster.grid),
            Kind::Scan => Some(&mut self.scan.grid),
            Kind::Sense => Some(&mut self.sense.grid),
            Kind::Onestep => Some(&mut self.onestep.grid),
            Kind::Stats => Some(&mut self.stats.noise_grid),
            _ => None,
        }
    }
}

/// Parses `a,b,c` or a geometric range `lo:hi:ratio`.
pub fn parse_grid(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Config(format!("cannot parse grid {text:?}"));
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let [lo, hi, ratio] = text.split(':').collect::<Vec<_>>()[..] {
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let ratio: f64 = ratio.trim().parse().map_err(|_| bad())?;
        if !(lo >= 1.0 && hi >= lo && ratio > 1.0 && hi.is_finite()) {
            return Err(bad());
        }
        let mut out = Vec::new();
        let mut x = lo;
        while x <= hi * (1.0 + 1e-12) {
            let p = x.round() as u64;
            if out.last() != Some(&p) {
                out.push(p);
            }
            x *= ratio;
        }
        return Ok(out);
    }
    text.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("4, 8,16").unwrap(), vec![4, 8, 16]);
        assert_eq!(parse_grid("16:64:2").unwrap(), vec![16, 32, 64]);
        assert_eq!(parse_grid("").unwrap(), Vec::<u64>::new());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("8:4:2").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn defaults_fill_the_maximal_case() {
        let c = ExperimentConfig::from_toml("kind = \"theory\"\n[model]\nv = 8\nL = 3\n").unwrap();
        let p = c.params().unwrap();
        assert_eq!((p.v, p.m, p.s, p.depth, p.n_classes), (8, 8, 2, 3, 8));
    }

    #[test]
    fn bad_configs() {
        assert!(ExperimentConfig::from_toml("kind = \"theory\"\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("kind = \"nope\"\n").is_err());
        let c = ExperimentConfig::from_toml("kind = \"theory\"\n[model]\nv = 2\nm = 3\n").unwrap();
        assert!(c.params().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::new(Kind::Scan);
        c.model.v = Some(4);
        c.scan.grid = vec![16, 32];
        c.scan.threshold = Threshold::Absolute(0.1);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    proptest::proptest! {
        #[test]
        fn listed_grids_parse_back(xs in proptest::collection::vec(1u64..1_000_000, 1..20)) {
            let text = xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            proptest::prop_assert_eq!(parse_grid(&text).unwrap(), xs);
        }

        #[test]
        fn geometric_grids_are_increasing_and_bounded(lo in 1u64..1000, span in 1.0f64..1e4, ratio in 1.05f64..4.0) {
            let hi = lo as f64 * span;
            let g = parse_grid(&format!("{lo}:{hi}:{ratio}")).unwrap();
            proptest::prop_assert_eq!(g[0], lo);
            proptest::prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
            proptest::prop_assert!(*g.last().unwrap() as f64 <= hi + 0.5);
        }
    }
}
