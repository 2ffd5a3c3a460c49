//! Run configuration: a TOML file plus flag and environment overrides.
//!
//! Precedence is flags over environment variables over the file. Relative
//! data paths resolve against the directory containing the config file, so
//! a profile and its fixture can travel together.

use std::env;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use misreport::{
    AssumptionSet, BetaGrid, CoordinateRange, CutoffRule, Design, ErrorLaw, InstrumentMode, Link,
    ModelKind, ModelSpec, Normalization, Restriction,
};

use crate::{Failure, RunArgs};

/// Environment variable overriding the seed.
pub const ENV_SEED: &str = "MISREPORT_SEED";
/// Environment variable overriding the worker thread count.
pub const ENV_THREADS: &str = "MISREPORT_THREADS";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub assumptions: AssumptionsConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub binning: BinningConfig,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub setest: SetestConfig,
    #[serde(default)]
    pub estimate: EstimateConfig,
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub run: RunSection,
}

/// Input file and column roles.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    /// Column holding the reported binary outcome.
    pub y: String,
    /// Covariate columns, in design-matrix order after the intercept.
    pub x: Vec<String>,
    /// Outcome-instrument column; enters the design matrix last.
    pub z: Option<String>,
    /// Reporting-instrument column; excluded from the structural index.
    pub w: Option<String>,
    /// Declared W order, most misreporting first; ascending when omitted.
    pub w_levels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstrumentsChoice {
    Z,
    W,
    Zw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestrictionChoice {
    None,
    NoFalsePositives,
    NoFalseNegatives,
    Capped,
    FalsePositivesSmaller,
    FalseNegativesSmaller,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssumptionsConfig {
    pub instruments: InstrumentsChoice,
    pub restriction: RestrictionChoice,
    /// Cap on the false-positive rate; required by `restriction = "capped"`.
    pub fp_cap: Option<f64>,
    /// Cap on the false-negative rate; required by `restriction = "capped"`.
    pub fn_cap: Option<f64>,
    /// Relevance threshold for two-instrument diagnostics and tolerance for
    /// the monotonicity check; defaults to the library's estimated-table
    /// default.
    pub tau: Option<f64>,
}

impl Default for AssumptionsConfig {
    fn default() -> Self {
        AssumptionsConfig {
            instruments: InstrumentsChoice::Z,
            restriction: RestrictionChoice::None,
            fp_cap: None,
            fn_cap: None,
            tau: None,
        }
    }
}

impl AssumptionsConfig {
    pub fn to_assumptions(self) -> Result<AssumptionSet, Failure> {
        let instruments = match self.instruments {
            InstrumentsChoice::Z => InstrumentMode::ZOnly,
            InstrumentsChoice::W => InstrumentMode::WOnly,
            InstrumentsChoice::Zw => InstrumentMode::ZAndW,
        };
        let restriction = match self.restriction {
            RestrictionChoice::None => Restriction::None,
            RestrictionChoice::NoFalsePositives => Restriction::NoFalsePositives,
            RestrictionChoice::NoFalseNegatives => Restriction::NoFalseNegatives,
            RestrictionChoice::FalsePositivesSmaller => Restriction::FalsePositivesSmaller,
            RestrictionChoice::FalseNegativesSmaller => Restriction::FalseNegativesSmaller,
            RestrictionChoice::Capped => {
                let (Some(fp_cap), Some(fn_cap)) = (self.fp_cap, self.fn_cap) else {
                    return Err(Failure::config(
                        "restriction \"capped\" needs both fp_cap and fn_cap",
                    ));
                };
                Restriction::Capped { fp_cap, fn_cap }
            }
        };
        let set = AssumptionSet { instruments, restriction };
        set.validate()?;
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindChoice {
    Parametric,
    Semiparametric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkChoice {
    Normal,
    Logistic,
    /// Cauchy with location 0 and scale 1/2, the benchmark calibration.
    Cauchy,
}

impl LinkChoice {
    pub fn to_link(self) -> Link {
        match self {
            LinkChoice::Normal => Link::StandardNormal,
            LinkChoice::Logistic => Link::Logistic,
            LinkChoice::Cauchy => Link::half_cauchy(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: KindChoice,
    /// Link for the parametric moment functions and the MLE baseline.
    pub link: LinkChoice,
    /// Design-matrix coordinate pinned by scale normalization (0 is the
    /// intercept).
    pub normalization_coordinate: usize,
    pub normalization_value: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: KindChoice::Semiparametric,
            link: LinkChoice::Normal,
            normalization_coordinate: 0,
            normalization_value: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn to_spec(self, dim: usize) -> Result<ModelSpec, Failure> {
        let kind = match self.kind {
            KindChoice::Parametric => ModelKind::Parametric(self.link.to_link()),
            KindChoice::Semiparametric => ModelKind::Semiparametric,
        };
        let normalization = Normalization {
            coordinate: self.normalization_coordinate,
            value: self.normalization_value,
        };
        Ok(ModelSpec::new(kind, dim, normalization)?)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinningConfig {
    /// Covariate cells per continuous dimension for envelope tables.
    pub cells_per_dim: usize,
    /// Minimum observations per table slice; sparser slices are excluded.
    pub min_cell_count: usize,
    /// Target hypercube count for the criterion; defaults by sample size.
    pub cube_target: Option<usize>,
}

impl Default for BinningConfig {
    fn default() -> Self {
        BinningConfig { cells_per_dim: 4, min_cell_count: 5, cube_target: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Hard cap on grid points, guarding against accidental blowups.
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// One range per free coordinate, in coordinate order.
    pub coordinate: Vec<RangeConfig>,
}

fn default_budget() -> usize {
    5_000_000
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
}

impl GridConfig {
    pub fn to_grid(&self) -> Result<BetaGrid, Failure> {
        let ranges = self
            .coordinate
            .iter()
            .map(|r| CoordinateRange { lower: r.lower, upper: r.upper, step: r.step })
            .collect();
        Ok(BetaGrid::new(ranges, self.budget)?)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SetestConfig {
    /// Slack multiplier in the acceptance cutoff `min Q + kappa ln(n) / n`.
    pub kappa: f64,
}

impl Default for SetestConfig {
    fn default() -> Self {
        SetestConfig { kappa: CutoffRule::default().kappa }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    /// Also fit the constant-rate misreporting MLE for comparison.
    pub with_mle: bool,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig { with_mle: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignChoice {
    InstrumentZ,
    InstrumentW,
}

impl DesignChoice {
    pub fn to_design(self) -> Design {
        match self {
            DesignChoice::InstrumentZ => Design::InstrumentZ,
            DesignChoice::InstrumentW => Design::InstrumentW,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorChoice {
    Normal,
    Cauchy,
}

impl ErrorChoice {
    pub fn to_error(self) -> ErrorLaw {
        match self {
            ErrorChoice::Normal => ErrorLaw::Normal,
            ErrorChoice::Cauchy => ErrorLaw::Cauchy,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub design: DesignChoice,
    #[serde(default = "default_error")]
    pub error: ErrorChoice,
    /// Observations per replication.
    pub n: usize,
    pub replications: usize,
}

fn default_error() -> ErrorChoice {
    ErrorChoice::Normal
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Any of "csv", "json"; the text table always goes to stdout.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            formats: vec!["csv".to_string(), "json".to_string()],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub threads: Option<usize>,
}

/// A loaded configuration with every override already applied.
#[derive(Debug)]
pub struct Resolved {
    pub file: FileConfig,
    /// Directory of the config file; relative data paths resolve here.
    pub config_dir: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    data_override: Option<PathBuf>,
}

fn env_parsed<T: std::str::FromStr>(name: &str) -> Result<Option<T>, Failure> {
    match env::var(name) {
        Ok(raw) => raw.parse::<T>().map(Some).map_err(|_| {
            Failure::config(format!("{name} must be a number, got {raw:?}"))
        }),
        Err(_) => Ok(None),
    }
}

/// Reads and parses the config file, then applies flag and environment
/// overrides.
pub fn load(args: &RunArgs) -> Result<Resolved, Failure> {
    let raw = std::fs::read_to_string(&args.config).map_err(|e| {
        Failure::config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let file: FileConfig = toml::from_str(&raw).map_err(|e| {
        Failure::config(format!("invalid config {}: {e}", args.config.display()))
    })?;
    let config_dir = args
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    resolve(file, config_dir, args)
}

/// Applies overrides to an already-parsed config; `verify` uses this with
/// defaults when no file is given.
pub fn resolve(
    file: FileConfig,
    config_dir: PathBuf,
    args: &RunArgs,
) -> Result<Resolved, Failure> {
    let seed = match args.seed {
        Some(s) => s,
        None => env_parsed::<u64>(ENV_SEED)?.unwrap_or(file.run.seed),
    };
    let threads = match args.threads {
        Some(t) => Some(t),
        None => env_parsed::<usize>(ENV_THREADS)?.or(file.run.threads),
    };
    let out_dir = args.out.clone().unwrap_or_else(|| file.output.dir.clone());
    Ok(Resolved {
        file,
        config_dir,
        out_dir,
        seed,
        threads,
        data_override: args.data.clone(),
    })
}

impl Resolved {
    /// The data section, required by commands that read a sample.
    pub fn data(&self) -> Result<&DataConfig, Failure> {
        self.file
            .data
            .as_ref()
            .ok_or_else(|| Failure::config("config has no [data] section"))
    }

    /// Input path with the `--data` override and config-relative resolution
    /// applied.
    pub fn data_path(&self) -> Result<PathBuf, Failure> {
        if let Some(path) = &self.data_override {
            return Ok(path.clone());
        }
        let declared = &self.data()?.path;
        if declared.is_absolute() {
            Ok(declared.clone())
        } else {
            Ok(self.config_dir.join(declared))
        }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.file.output.formats.iter().any(|f| f == format)
    }

    pub fn grid(&self) -> Result<BetaGrid, Failure> {
        self.file
            .grid
            .as_ref()
            .ok_or_else(|| Failure::config("config has no [grid] section"))?
            .to_grid()
    }

    pub fn cutoff(&self) -> CutoffRule {
        CutoffRule { kappa: self.file.setest.kappa }
    }
}
