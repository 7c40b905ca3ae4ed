//! Flat `key = value` configuration with dotted section names.
//!
//! ```text
//! # comment
//! pulse.kind = legendre_optimal
//! pulse.n = 12
//! band.k_upper = 1.0
//! sweep.l_over_vtau = 0.05, 0.1, 0.2
//! ```
//!
//! Unknown keys are rejected so typos surface as named-field errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::band::BandSpec;
use crate::echo::{CableNetwork, ReflectorScene};
use crate::error::Error;
use crate::pulse::MomentPower;

/// A configuration problem tied to the offending key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }

    fn from_core(field: &str, e: Error) -> Self {
        ConfigError::new(field, e.to_string())
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

const KNOWN_KEYS: &[&str] = &[
    "pulse.kind",
    "pulse.n",
    "pulse.power",
    "pulse.d",
    "pulse.tail",
    "pulse.periods",
    "band.k_lower",
    "band.k_upper",
    "scene.a",
    "scene.x0",
    "scene.l",
    "sweep.l_over_vtau",
    "noise.sigma2",
    "mc.trials",
    "mc.seed",
    "mc.estimator",
    "mc.x0_window",
    "grid.l_min",
    "grid.l_max",
    "grid.steps",
    "multipath.enabled",
    "multipath.reflectance",
    "multipath.attenuation",
    "multipath.terms",
    "units.vtau",
    "curves.n_max",
    "curves.d_values",
    "fisher.repetitions",
    "estimate.signal",
];

/// Raw parsed entries, each with its source line.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(format!("line {line_no}"), "expected `key = value`"))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::new(key, format!("unknown key on line {line_no}")));
            }
            if entries.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
                return Err(ConfigError::new(key, format!("duplicate key on line {line_no}")));
            }
        }
        Ok(KeyValues { entries })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError::new(key, format!("cannot parse `{v}`"))),
        }
    }

    fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::new(key, format!("cannot parse `{v}`"))),
        }
    }

    fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        let items: Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match items {
            Ok(list) if !list.is_empty() => Ok(Some(list)),
            _ => Err(ConfigError::new(key, format!("expected a comma-separated list of numbers, got `{v}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    SincCosine,
    LegendreOptimal,
    Comb,
    Tone,
}

impl FromStr for PulseKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "sinc_cosine" => Ok(PulseKind::SincCosine),
            "legendre_optimal" => Ok(PulseKind::LegendreOptimal),
            "comb" => Ok(PulseKind::Comb),
            "tone" => Ok(PulseKind::Tone),
            _ => Err(()),
        }
    }
}

/// Definition of the inverse band-edge unit `V_tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VtauConvention {
    /// `V_tau = 1 / k_upper`.
    Angular,
    /// `V_tau = 2 pi / k_upper`, the period of the band-edge frequency.
    Cyclic,
}

impl VtauConvention {
    pub fn vtau(self, k_upper: f64) -> f64 {
        match self {
            VtauConvention::Angular => 1.0 / k_upper,
            VtauConvention::Cyclic => std::f64::consts::TAU / k_upper,
        }
    }

    /// Band edge giving `l / V_tau = ratio` at separation `l`.
    pub fn k_upper_for(self, ratio: f64, l: f64) -> f64 {
        match self {
            VtauConvention::Angular => ratio / l,
            VtauConvention::Cyclic => std::f64::consts::TAU * ratio / l,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            VtauConvention::Angular => "V_tau = 1/k_upper (angular band edge)",
            VtauConvention::Cyclic => "V_tau = 2*pi/k_upper (cyclic band edge)",
        }
    }
}

impl FromStr for VtauConvention {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "angular" => Ok(VtauConvention::Angular),
            "cyclic" => Ok(VtauConvention::Cyclic),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Mle,
    Grid,
}

impl FromStr for EstimatorKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "mle" => Ok(EstimatorKind::Mle),
            "grid" => Ok(EstimatorKind::Grid),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    pub kind: PulseKind,
    /// Legendre dimension.
    pub n: usize,
    pub power: MomentPower,
    /// Sinc-cosine length parameter.
    pub d: f64,
    /// Tail power left off the grid.
    pub tail: f64,
    /// Whole periods of the slowest comb or tone component on the grid.
    pub periods: usize,
}

/// Prior on the echo centre used by the likelihood estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum X0Window {
    /// A quarter period of the band edge, `pi / (2 k_edge)`.
    Auto,
    /// Search every lag.
    Unbounded,
    HalfWidth(f64),
}

impl X0Window {
    pub fn half_width(self, band: &BandSpec<f64>) -> Option<f64> {
        match self {
            X0Window::Auto => Some(std::f64::consts::FRAC_PI_2 / band.edge()),
            X0Window::Unbounded => None,
            X0Window::HalfWidth(w) => Some(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSearchConfig {
    pub l_min: Option<f64>,
    pub l_max: Option<f64>,
    pub steps: usize,
}

/// Grid-search bounds when none are configured: `[0, 3 l]` around a known
/// separation, `[0, 2 V_tau]` otherwise.
pub const DEFAULT_GRID_SPAN_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pulse: PulseConfig,
    pub band: BandSpec<f64>,
    pub scene: ReflectorScene<f64>,
    /// `l / V_tau` values of a Monte Carlo sweep at fixed `scene.l`.
    pub sweep: Option<Vec<f64>>,
    pub sigma2: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub estimator: EstimatorKind,
    pub x0_window: X0Window,
    pub grid: GridSearchConfig,
    pub multipath: Option<CableNetwork<f64>>,
    pub vtau: VtauConvention,
    pub curves_n_max: usize,
    pub curves_d_values: Vec<f64>,
    pub fisher_repetitions: usize,
    pub estimate_signal: Option<PathBuf>,
}

pub const DEFAULT_D_VALUES: &[f64] = &[
    1.5, 2.0, 3.0, 5.0, 7.0, 10.0, 15.0, 20.0, 30.0, 50.0, 70.0, 100.0, 150.0, 200.0, 300.0, 500.0, 1000.0,
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::from_key_values(&KeyValues::default()).expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self, ConfigError> {
        let kind = kv.get("pulse.kind", "legendre_optimal".to_string())?;
        let kind: PulseKind = kind.parse().map_err(|_| {
            ConfigError::new("pulse.kind", format!("`{kind}` is not one of sinc_cosine, legendre_optimal, comb, tone"))
        })?;
        let n: usize = kv.get("pulse.n", 12)?;
        if n == 0 {
            return Err(ConfigError::new("pulse.n", "must be >= 1"));
        }
        let power: usize = kv.get("pulse.power", 2)?;
        let power = MomentPower::from_exponent(power).map_err(|e| ConfigError::from_core("pulse.power", e))?;
        let d: f64 = kv.get("pulse.d", 50.0)?;
        if kind == PulseKind::SincCosine && !(d > 1.0) {
            return Err(ConfigError::new("pulse.d", format!("must exceed 1, got {d}")));
        }
        let tail: f64 = kv.get("pulse.tail", 1e-4)?;
        if !(tail > 0.0 && tail < 1.0) {
            return Err(ConfigError::new("pulse.tail", format!("must lie in (0, 1), got {tail}")));
        }
        let periods: usize = kv.get("pulse.periods", 200)?;
        if periods == 0 {
            return Err(ConfigError::new("pulse.periods", "must be >= 1"));
        }

        let k_upper: f64 = kv.get("band.k_upper", 1.0)?;
        let k_lower: f64 = kv.get("band.k_lower", -k_upper)?;
        let band = BandSpec::new(k_lower, k_upper).map_err(|e| ConfigError::from_core("band.k_upper", e))?;
        if kind == PulseKind::SincCosine && !band.is_symmetric() {
            return Err(ConfigError::new("band.k_lower", "the sinc-cosine pulse needs a symmetric band"));
        }
        if matches!(kind, PulseKind::SincCosine | PulseKind::Tone) && !(k_upper > 0.0) {
            return Err(ConfigError::new("band.k_upper", "must be > 0"));
        }

        let a: f64 = kv.get("scene.a", 1.0)?;
        let x0: f64 = kv.get("scene.x0", 0.0)?;
        let l: f64 = kv.get("scene.l", 0.05)?;
        let scene = ReflectorScene::new(a, x0, l).map_err(|e| {
            let field = match &e {
                Error::InvalidArgument { name: "A", .. } => "scene.a",
                Error::InvalidArgument { name: "x0", .. } => "scene.x0",
                _ => "scene.l",
            };
            ConfigError::from_core(field, e)
        })?;

        let sweep = kv.get_list("sweep.l_over_vtau")?;
        if let Some(s) = &sweep {
            if s.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
                return Err(ConfigError::new("sweep.l_over_vtau", "every entry must be finite and > 0"));
            }
            if !(l > 0.0) {
                return Err(ConfigError::new("scene.l", "a sweep over l/V_tau needs l > 0"));
            }
        }

        let sigma2: f64 = kv.get("noise.sigma2", 1e-6)?;
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(ConfigError::new("noise.sigma2", format!("must be finite and >= 0, got {sigma2}")));
        }
        let trials: usize = kv.get("mc.trials", 1000)?;
        if trials < 2 {
            return Err(ConfigError::new("mc.trials", "at least two trials are required"));
        }
        let master_seed: u64 = kv.get("mc.seed", 0)?;
        let est = kv.get("mc.estimator", "mle".to_string())?;
        let estimator: EstimatorKind = est
            .parse()
            .map_err(|_| ConfigError::new("mc.estimator", format!("`{est}` is not one of mle, grid")))?;
        let x0_window = match kv.raw("mc.x0_window") {
            None | Some("auto") => X0Window::Auto,
            Some("none") => X0Window::Unbounded,
            Some(_) => {
                let w: f64 = kv.get("mc.x0_window", 0.0)?;
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(ConfigError::new("mc.x0_window", "must be finite and >= 0, `auto` or `none`"));
                }
                X0Window::HalfWidth(w)
            }
        };

        let grid = GridSearchConfig {
            l_min: kv.get_opt("grid.l_min")?,
            l_max: kv.get_opt("grid.l_max")?,
            steps: kv.get("grid.steps", crate::estimation::DEFAULT_GRID_STEPS)?,
        };
        if grid.steps < 2 {
            return Err(ConfigError::new("grid.steps", "must be >= 2"));
        }
        if let Some(lo) = grid.l_min {
            if !(lo >= 0.0) {
                return Err(ConfigError::new("grid.l_min", "must be >= 0"));
            }
        }
        if let (Some(lo), Some(hi)) = (grid.l_min, grid.l_max) {
            if !(hi > lo) {
                return Err(ConfigError::new("grid.l_max", "must exceed grid.l_min"));
            }
        }

        let multipath = if kv.get("multipath.enabled", false)? {
            let r: f64 = kv.get("multipath.reflectance", 0.2)?;
            let att: f64 = kv.get("multipath.attenuation", 0.9)?;
            let terms: usize = kv.get("multipath.terms", 12)?;
            Some(CableNetwork::new(l, r, att, terms).map_err(|e| {
                let field = match &e {
                    Error::InvalidArgument { name: "reflectance", .. } => "multipath.reflectance",
                    Error::InvalidArgument { name: "attenuation", .. } => "multipath.attenuation",
                    Error::InvalidArgument { name: "terms", .. } => "multipath.terms",
                    _ => "scene.l",
                };
                ConfigError::from_core(field, e)
            })?)
        } else {
            None
        };

        let vt = kv.get("units.vtau", "angular".to_string())?;
        let vtau: VtauConvention = vt
            .parse()
            .map_err(|_| ConfigError::new("units.vtau", format!("`{vt}` is not one of angular, cyclic")))?;

        let curves_n_max: usize = kv.get("curves.n_max", 40)?;
        if curves_n_max < 2 {
            return Err(ConfigError::new("curves.n_max", "must be >= 2"));
        }
        let curves_d_values = kv.get_list("curves.d_values")?.unwrap_or_else(|| DEFAULT_D_VALUES.to_vec());
        if curves_d_values.iter().any(|&d| !(d > 1.0)) {
            return Err(ConfigError::new("curves.d_values", "every d must exceed 1"));
        }
        let fisher_repetitions: usize = kv.get("fisher.repetitions", 1)?;
        if fisher_repetitions == 0 {
            return Err(ConfigError::new("fisher.repetitions", "must be >= 1"));
        }
        let estimate_signal = kv.raw("estimate.signal").map(PathBuf::from);

        Ok(ExperimentConfig {
            pulse: PulseConfig {
                kind,
                n,
                power,
                d,
                tail,
                periods,
            },
            band,
            scene,
            sweep,
            sigma2,
            trials,
            master_seed,
            estimator,
            x0_window,
            grid,
            multipath,
            vtau,
            curves_n_max,
            curves_d_values,
            fisher_repetitions,
            estimate_signal,
        })
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        ExperimentConfig::from_key_values(&KeyValues::parse(text)?)
    }
}
