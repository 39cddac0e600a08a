//! Run configuration: a TOML file with one section per block.

use serde::Deserialize;

use qfp_core::params::{ModelParams, PhysicalUnits};
use qfp_core::QfpError;

/// Error category determines the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable/invalid configuration or mismatched inputs (exit 2).
    Config(String),
    /// Model validation failures (exit 3).
    Model(QfpError),
    /// Numerical guards tripped during a run (exit 4).
    Numerical(QfpError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Model(e) => write!(f, "model error: {e}"),
            CliError::Numerical(e) => write!(f, "numerical guard: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<QfpError> for CliError {
    fn from(e: QfpError) -> Self {
        if e.is_model_error() {
            CliError::Model(e)
        } else {
            CliError::Numerical(e)
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub time: TimeBlock,
    #[serde(default)]
    pub initial: InitialBlock,
    #[serde(default)]
    pub entropy: EntropyBlock,
    #[serde(default)]
    pub dispersion: DispersionBlock,
    #[serde(default)]
    pub oracle: OracleBlock,
    #[serde(default)]
    pub kernel: KernelBlock,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub gamma: Option<f64>,
    pub omega0: Option<f64>,
    pub dpp: Option<f64>,
    pub dqq: Option<f64>,
    pub dpq: Option<f64>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub hbar: Option<f64>,
    pub mass: Option<f64>,
    /// Linear-potential tilt a in V = omega0^2 |x|^2 / 2 + a x + b; absorbed
    /// by an x-frame shift of -a/omega0^2.
    #[serde(default)]
    pub potential_a: f64,
    /// Constant potential offset; no dynamical effect.
    #[serde(default)]
    pub potential_b: f64,
    pub physical: Option<PhysicalBlock>,
}

fn default_dim() -> usize {
    1
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock {
            gamma: Some(1.0),
            omega0: Some(1.0),
            dpp: Some(1.0),
            dqq: Some(1.0),
            dpq: Some(0.0),
            dim: 1,
            hbar: None,
            mass: None,
            potential_a: 0.0,
            potential_b: 0.0,
            physical: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalBlock {
    pub lambda: f64,
    pub kb_t: f64,
    #[serde(default)]
    pub omega_cutoff: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default = "default_n")]
    pub nx: usize,
    #[serde(default = "default_n")]
    pub nv: usize,
    /// Extents; 0 requests auto-sizing from the data and model.
    #[serde(default)]
    pub lx: f64,
    #[serde(default)]
    pub lv: f64,
}

fn default_n() -> usize {
    129
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            nx: 129,
            nv: 129,
            lx: 0.0,
            lv: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    /// Explicit output times (strictly increasing, positive).
    pub points: Option<Vec<f64>>,
    /// Alternative: a uniform series on (0, t_max].
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
}

impl TimeBlock {
    pub fn resolve(&self) -> CliResult<Vec<f64>> {
        let times = if let Some(points) = &self.points {
            points.clone()
        } else {
            let t_max = self.t_max.unwrap_or(2.0);
            let samples = self.samples.unwrap_or(20);
            if !(t_max > 0.0) || samples == 0 {
                return Err(CliError::Config(
                    "time.t_max must be positive and time.samples nonzero".into(),
                ));
            }
            (1..=samples)
                .map(|k| t_max * k as f64 / samples as f64)
                .collect()
        };
        if times.is_empty() {
            return Err(CliError::Config("time list is empty".into()));
        }
        if times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(
                "time list must be strictly increasing and positive".into(),
            ));
        }
        Ok(times)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    #[serde(default = "default_kind")]
    pub kind: String,
    pub center_x: Option<f64>,
    pub center_v: Option<f64>,
    pub sigma_x: Option<f64>,
    pub sigma_v: Option<f64>,
    /// Mixture rows [weight, center_x, center_v, sigma_x, sigma_v].
    pub components: Option<Vec<Vec<f64>>>,
    pub path: Option<String>,
    /// Normalize the ingested data to unit mass (applied once).
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_kind() -> String {
    "gaussian".into()
}

fn default_true() -> bool {
    true
}

impl Default for InitialBlock {
    fn default() -> Self {
        InitialBlock {
            kind: "gaussian".into(),
            center_x: Some(1.0),
            center_v: Some(0.5),
            sigma_x: Some(0.9),
            sigma_v: Some(0.8),
            components: None,
            path: None,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyBlock {
    #[serde(default = "default_generator")]
    pub generator: String,
    #[serde(default = "default_variant")]
    pub kappa_variant: String,
}

fn default_generator() -> String {
    "quadratic".into()
}

fn default_variant() -> String {
    "product".into()
}

impl Default for EntropyBlock {
    fn default() -> Self {
        EntropyBlock {
            generator: default_generator(),
            kappa_variant: default_variant(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionBlock {
    /// Norm orders; "inf" selects the max norm.
    #[serde(default = "default_p_list")]
    pub p_list: Vec<String>,
    /// Also propagate the initial data and record measured norms.
    #[serde(default)]
    pub measure: bool,
}

fn default_p_list() -> Vec<String> {
    vec!["1".into(), "2".into(), "inf".into()]
}

impl Default for DispersionBlock {
    fn default() -> Self {
        DispersionBlock {
            p_list: default_p_list(),
            measure: false,
        }
    }
}

impl DispersionBlock {
    pub fn norms(&self) -> CliResult<Vec<f64>> {
        self.p_list
            .iter()
            .map(|s| {
                if s == "inf" {
                    Ok(f64::INFINITY)
                } else {
                    s.parse::<f64>()
                        .map_err(|_| CliError::Config(format!("unparseable norm order `{s}`")))
                        .and_then(|p| {
                            if p >= 1.0 {
                                Ok(p)
                            } else {
                                Err(CliError::Config(format!("norm order {p} < 1")))
                            }
                        })
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    /// Time step; 0 requests the stability bound.
    #[serde(default)]
    pub dt: f64,
    #[serde(default = "default_band")]
    pub damping_band: usize,
    #[serde(default = "one")]
    pub damping_strength: f64,
}

fn default_band() -> usize {
    8
}

impl Default for OracleBlock {
    fn default() -> Self {
        OracleBlock {
            dt: 0.0,
            damping_band: 8,
            damping_strength: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    /// Also emit the adaptive-quadrature covariance columns.
    #[serde(default)]
    pub quadrature: bool,
}

/// The model plus the frame shift absorbed from a linear potential tilt.
pub struct ResolvedModel {
    pub params: ModelParams,
    /// x_shifted = x_original + shift.
    pub x_shift: f64,
}

pub fn load_config(path: Option<&str>) -> CliResult<RunConfig> {
    match path {
        None => Ok(RunConfig {
            model: ModelBlock::default(),
            initial: InitialBlock::default(),
            ..RunConfig::default()
        }),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {p}: {e}")))?;
            let mut cfg: RunConfig = toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("cannot parse {p}: {e}")))?;
            // a config without [initial] gets the default data
            if cfg.initial.kind == "gaussian" && cfg.initial.center_x.is_none() {
                cfg.initial = InitialBlock {
                    kind: "gaussian".into(),
                    ..InitialBlock::default()
                };
            }
            Ok(cfg)
        }
    }
}

pub fn resolve_model(block: &ModelBlock) -> CliResult<ResolvedModel> {
    let params = if let Some(ph) = &block.physical {
        ModelParams::from_physical(PhysicalUnits {
            lambda: ph.lambda,
            kb_t: ph.kb_t,
            omega_cutoff: ph.omega_cutoff,
            mass: ph.mass,
            hbar: ph.hbar,
            omega0: block.omega0.unwrap_or(1.0),
            dim: block.dim,
        })
        .map_err(CliError::Model)?
    } else {
        let get = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::Config(format!("model.{name} missing")))
        };
        ModelParams::with_constants(
            get("gamma", block.gamma)?,
            get("omega0", block.omega0)?,
            get("dpp", block.dpp)?,
            get("dqq", block.dqq)?,
            get("dpq", block.dpq)?,
            block.dim,
            block.hbar.unwrap_or(1.0),
            block.mass.unwrap_or(1.0),
        )
        .map_err(CliError::Model)?
    };
    let x_shift = if block.potential_a != 0.0 {
        if params.omega0 == 0.0 {
            return Err(CliError::Config(
                "a linear potential tilt cannot be absorbed when omega0 = 0".into(),
            ));
        }
        block.potential_a / (params.omega0 * params.omega0)
    } else {
        0.0
    };
    Ok(ResolvedModel { params, x_shift })
}
