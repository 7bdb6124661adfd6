//! Run configuration: a single JSON document, fully validated at parse
//! time. Unknown keys and duplicate keys are rejected; range checks are
//! collected exhaustively (every violation reported, not just the first).

use serde::{Deserialize, Serialize};

use valleon_core::device::Geometry;
use valleon_core::fit::DipShape;
use valleon_core::lattice::Valley;
use valleon_core::ribbon::Interface;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("JSON syntax error: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("duplicate key `{0}` in the same object")]
    DuplicateKey(String),
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

fn default_a_nm() -> f64 {
    470.0
}
fn default_t() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default = "default_a_nm")]
    pub a_nm: f64,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection { a_nm: default_a_nm(), t: default_t(), delta: default_delta() }
    }
}

fn default_nk() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_nk")]
    pub nk: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { nk: default_nk() }
    }
}

fn default_width() -> usize {
    20
}
fn default_interface() -> String {
    "I12".into()
}
fn default_k_samples() -> usize {
    132
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RibbonSection {
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_interface")]
    pub interface: String,
    #[serde(default = "default_k_samples")]
    pub k_samples: usize,
}

impl Default for RibbonSection {
    fn default() -> Self {
        RibbonSection {
            width: default_width(),
            interface: default_interface(),
            k_samples: default_k_samples(),
        }
    }
}

fn default_geometry() -> String {
    "hsbs".into()
}
fn default_extent() -> usize {
    40
}
fn default_lead_length() -> usize {
    12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    #[serde(default = "default_geometry")]
    pub geometry: String,
    #[serde(default = "default_extent")]
    pub extent: usize,
    #[serde(default = "default_lead_length")]
    pub lead_length: usize,
}

impl Default for DeviceSection {
    fn default() -> Self {
        DeviceSection {
            geometry: default_geometry(),
            extent: default_extent(),
            lead_length: default_lead_length(),
        }
    }
}

fn default_carrier() -> String {
    "K".into()
}
fn default_gamma() -> f64 {
    0.5
}
fn default_dt() -> f64 {
    0.05
}
fn default_steps() -> usize {
    9000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSection {
    #[serde(default = "default_carrier")]
    pub carrier: String,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

impl Default for TransportSection {
    fn default() -> Self {
        TransportSection {
            carrier: default_carrier(),
            gamma: default_gamma(),
            dt: default_dt(),
            steps: default_steps(),
        }
    }
}

fn default_v0() -> f64 {
    0.965
}
fn default_sigma() -> f64 {
    0.25
}
fn default_pair() -> Vec<String> {
    vec!["c".into(), "d".into()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSection {
    #[serde(default = "default_v0")]
    pub v0: f64,
    /// Spectral width (1/ps).
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Explicit delay values (ps); `null`/absent = a symmetric default
    /// scan of 81 points over ±5/σ.
    #[serde(default)]
    pub delays: Option<Vec<f64>>,
    #[serde(default = "default_pair")]
    pub pair: Vec<String>,
}

impl Default for QuantumSection {
    fn default() -> Self {
        QuantumSection {
            v0: default_v0(),
            sigma: default_sigma(),
            delays: None,
            pair: default_pair(),
        }
    }
}

fn default_shape() -> String {
    "dip".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "default_shape")]
    pub shape: String,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection { shape: default_shape() }
    }
}

fn default_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir(), formats: default_formats() }
    }
}

fn default_seed() -> u64 {
    2026
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub lattice: LatticeSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub ribbon: RibbonSection,
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub transport: TransportSection,
    #[serde(default)]
    pub quantum: QuantumSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn interface(&self) -> Interface {
        match self.ribbon.interface.as_str() {
            "I12" => Interface::I12,
            _ => Interface::I21,
        }
    }

    pub fn geometry(&self) -> Geometry {
        match self.device.geometry.as_str() {
            "straight" => Geometry::Straight,
            "z" => Geometry::Z,
            "omega" => Geometry::Omega,
            _ => Geometry::Hsbs,
        }
    }

    pub fn carrier(&self) -> Valley {
        match self.transport.carrier.as_str() {
            "Kprime" | "K'" => Valley::KPrime,
            _ => Valley::K,
        }
    }

    pub fn shape(&self) -> DipShape {
        match self.fit.shape.as_str() {
            "peak" => DipShape::Peak,
            _ => DipShape::Dip,
        }
    }

    /// Delay grid in ps: explicit values, or the symmetric default scan.
    pub fn delays_ps(&self) -> Vec<f64> {
        match &self.quantum.delays {
            Some(d) => d.clone(),
            None => {
                let half = 5.0 / self.quantum.sigma;
                (-40..=40).map(|i| i as f64 * half / 40.0).collect()
            }
        }
    }
}

/// Token-level duplicate-key scan: tracks the key set of every open
/// object. serde_json silently keeps the last duplicate, so this must run
/// on the raw text before deserialization.
fn scan_duplicates(text: &str) -> Result<(), ConfigError> {
    #[derive(PartialEq)]
    enum Ctx {
        Object,
        Array,
    }
    let mut stack: Vec<(Ctx, Vec<String>)> = Vec::new();
    let mut chars = text.chars().peekable();
    let mut expecting_key = false;
    while let Some(c) = chars.next() {
        match c {
            '{' => {
                stack.push((Ctx::Object, Vec::new()));
                expecting_key = true;
            }
            '[' => {
                stack.push((Ctx::Array, Vec::new()));
                expecting_key = false;
            }
            '}' | ']' => {
                stack.pop();
                expecting_key = false;
            }
            ',' => {
                if let Some((Ctx::Object, _)) = stack.last() {
                    expecting_key = true;
                }
            }
            '"' => {
                let mut s = String::new();
                while let Some(c2) = chars.next() {
                    match c2 {
                        '\\' => {
                            if let Some(esc) = chars.next() {
                                s.push('\\');
                                s.push(esc);
                            }
                        }
                        '"' => break,
                        other => s.push(other),
                    }
                }
                if expecting_key {
                    if let Some((Ctx::Object, keys)) = stack.last_mut() {
                        if keys.contains(&s) {
                            return Err(ConfigError::DuplicateKey(s));
                        }
                        keys.push(s);
                    }
                    expecting_key = false;
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Parses and fully validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    scan_duplicates(text)?;
    let config: RunConfig = serde_json::from_value(value)?;
    validate(&config)?;
    Ok(config)
}

/// Collects every range violation, named by dotted key path.
pub fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    let mut errs: Vec<String> = Vec::new();
    let mut check = |ok: bool, path: &str, msg: String| {
        if !ok {
            errs.push(format!("{path}: {msg}"));
        }
    };
    check(c.lattice.a_nm > 0.0, "lattice.a_nm", format!("must be > 0, got {}", c.lattice.a_nm));
    check(c.lattice.t > 0.0, "lattice.t", format!("must be > 0, got {}", c.lattice.t));
    check(
        c.lattice.delta.abs() < 3.0 * c.lattice.t,
        "lattice.delta",
        format!("|delta| must be < 3t, got {}", c.lattice.delta),
    );
    check(c.grid.nk >= 24, "grid.nk", format!("must be >= 24, got {}", c.grid.nk));
    check(c.ribbon.width >= 8, "ribbon.width", format!("must be >= 8, got {}", c.ribbon.width));
    check(
        matches!(c.ribbon.interface.as_str(), "I12" | "I21"),
        "ribbon.interface",
        format!("must be I12 or I21, got `{}`", c.ribbon.interface),
    );
    check(
        c.ribbon.k_samples >= 64,
        "ribbon.k_samples",
        format!("must be >= 64, got {}", c.ribbon.k_samples),
    );
    check(
        matches!(c.device.geometry.as_str(), "straight" | "z" | "omega" | "hsbs"),
        "device.geometry",
        format!("must be straight|z|omega|hsbs, got `{}`", c.device.geometry),
    );
    check(c.device.extent >= 24, "device.extent", format!("must be >= 24, got {}", c.device.extent));
    check(
        c.device.lead_length >= 10,
        "device.lead_length",
        format!("must be >= 10, got {}", c.device.lead_length),
    );
    check(
        c.device.extent > 2 * c.device.lead_length,
        "device.extent",
        format!("must exceed 2 x lead_length = {}", 2 * c.device.lead_length),
    );
    check(
        matches!(c.transport.carrier.as_str(), "K" | "Kprime" | "K'"),
        "transport.carrier",
        format!("must be K or Kprime, got `{}`", c.transport.carrier),
    );
    check(c.transport.gamma > 0.0, "transport.gamma", format!("must be > 0, got {}", c.transport.gamma));
    let h_bound = 3.0 * c.lattice.t + c.lattice.delta.abs() + c.transport.gamma;
    check(
        c.transport.dt > 0.0 && 0.5 * c.transport.dt * h_bound < 0.9,
        "transport.dt",
        format!("must satisfy 0 < dt/2 x (3t+|delta|+gamma) < 0.9, got {}", c.transport.dt),
    );
    check(c.transport.steps >= 1, "transport.steps", "must be >= 1".into());
    check(
        (0.0..=1.0).contains(&c.quantum.v0),
        "quantum.v0",
        format!("must lie in [0, 1], got {}", c.quantum.v0),
    );
    check(c.quantum.sigma > 0.0, "quantum.sigma", format!("must be > 0, got {}", c.quantum.sigma));
    if let Some(delays) = &c.quantum.delays {
        check(
            delays.iter().all(|d| d.is_finite()),
            "quantum.delays",
            "all delays must be finite".into(),
        );
        check(delays.len() >= 7, "quantum.delays", format!("need >= 7 points, got {}", delays.len()));
    }
    check(
        c.quantum.pair.len() == 2 && c.quantum.pair[0] != c.quantum.pair[1],
        "quantum.pair",
        format!("must be two distinct mode labels, got {:?}", c.quantum.pair),
    );
    check(
        matches!(c.fit.shape.as_str(), "dip" | "peak"),
        "fit.shape",
        format!("must be dip or peak, got `{}`", c.fit.shape),
    );
    check(!c.output.dir.is_empty(), "output.dir", "must not be empty".into());
    check(
        !c.output.formats.is_empty()
            && c.output.formats.iter().all(|f| matches!(f.as_str(), "csv" | "json" | "svg")),
        "output.formats",
        format!("must be a non-empty subset of csv|json|svg, got {:?}", c.output.formats),
    );
    if errs.is_empty() {
        Ok(())
    } else {
        Err(ConfigError::Invalid(errs))
    }
}
