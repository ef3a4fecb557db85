use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cp1_lax::curve::ModelParams;
use cp1_lax::lie::{make_algebra, AlgebraData};
use cp1_lax::C64;
use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Field { field: &'static str, message: String },
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GeometryCheck,
    IdentityCheck,
    Simulate,
    LaxScan,
    Charges,
    BetaFlow,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Experiment::GeometryCheck => "geometry-check",
            Experiment::IdentityCheck => "identity-check",
            Experiment::Simulate => "simulate",
            Experiment::LaxScan => "lax-scan",
            Experiment::Charges => "charges",
            Experiment::BetaFlow => "beta-flow",
        };
        f.write_str(s)
    }
}

/// Complex number written as "re+imi", "re", "imi" or "re-imi".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex(pub C64);

impl FromStr for Complex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || format!("invalid complex number {s:?}, expected \"re+imi\"");
        if t.is_empty() {
            return Err(bad());
        }
        let Some(body) = t.strip_suffix('i') else {
            return t.parse::<f64>().map(|re| Complex(C64::new(re, 0.0))).map_err(|_| bad());
        };
        // split at the last sign that is not a leading sign or an exponent sign
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            other => other,
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.parse().map_err(|_| bad())?;
        Ok(Complex(C64::new(re, im)))
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let C64 { re, im } = self.0;
        if im.is_sign_negative() {
            write!(f, "{re}-{}i", -im)
        } else {
            write!(f, "{re}+{im}i")
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    seed: Option<u64>,
    output_dir: Option<String>,
    algebra: RawAlgebra,
    model: RawModel,
    lattice: Option<RawLattice>,
    lax: Option<RawLax>,
    flow: Option<RawFlow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebra {
    name: String,
    n: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    p1: String,
    p2: String,
    eps: Option<f64>,
    alpha_prime: Option<String>,
    nodes: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    n1: Option<usize>,
    n2: Option<usize>,
    l1: Option<f64>,
    l2: Option<f64>,
    modes: Option<usize>,
    amplitude: Option<f64>,
    j2_amplitude: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLax {
    z: Option<Vec<String>>,
    k: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    steps: Option<usize>,
    d_eps: Option<f64>,
    period_nodes: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeConfig {
    pub n1: usize,
    pub n2: usize,
    pub l1: f64,
    pub l2: f64,
    pub modes: usize,
    pub amplitude: f64,
    pub j2_amplitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowConfig {
    pub steps: usize,
    pub d_eps: f64,
    pub period_nodes: usize,
}

/// Fully defaulted and validated configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub algebra: String,
    pub algebra_n: usize,
    pub p1: C64,
    pub p2: C64,
    pub eps: f64,
    pub alpha_prime: C64,
    pub nodes: usize,
    pub lattice: LatticeConfig,
    /// None selects the default twelve-point grid.
    pub z: Option<Vec<C64>>,
    pub k: usize,
    pub flow: FlowConfig,
    /// git blob hash of the config file.
    pub config_hash: String,
}

impl ExperimentConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams::with_alpha_prime(self.p1, self.p2, self.eps, self.alpha_prime).expect("validated at load")
    }

    pub fn algebra(&self) -> AlgebraData {
        make_algebra(&self.algebra, self.algebra_n).expect("validated at load")
    }
}

/// Hash of `blob <len>\0<bytes>`, as computed by `git hash-object`.
pub fn git_blob_sha1(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn complex(name: &'static str, s: &str) -> Result<C64, ConfigError> {
    s.parse::<Complex>().map(|c| c.0).map_err(|e| field(name, e))
}

fn finite(name: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(field(name, format!("must be finite, got {v}")))
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64, ConfigError> {
    if finite(name, v)? > 0.0 {
        Ok(v)
    } else {
        Err(field(name, format!("must be positive, got {v}")))
    }
}

pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let experiment: Experiment = serde_json::from_value(serde_json::Value::String(raw.experiment.clone())).map_err(|_| {
        field(
            "experiment",
            format!(
                "unknown experiment {:?}; expected one of geometry-check, identity-check, simulate, lax-scan, charges, beta-flow",
                raw.experiment
            ),
        )
    })?;

    let algebra_n = raw.algebra.n.unwrap_or(2);
    let alg = make_algebra(&raw.algebra.name, algebra_n).map_err(|e| field("algebra.name", e.to_string()))?;

    let p1 = complex("model.p1", &raw.model.p1)?;
    let p2 = complex("model.p2", &raw.model.p2)?;
    for (name, v) in [("model.p1", p1), ("model.p2", p2)] {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(field(name, "must be finite"));
        }
    }
    let eps = match raw.model.eps {
        Some(e) => positive("model.eps", e)?,
        None => ModelParams::default_eps(p1, p2),
    };
    let alpha_prime = match &raw.model.alpha_prime {
        Some(s) => complex("model.alpha_prime", s)?,
        None => C64::new(0.0, 4.0 * std::f64::consts::PI),
    };
    if !(alpha_prime.re.is_finite() && alpha_prime.im.is_finite()) {
        return Err(field("model.alpha_prime", "must be finite"));
    }
    ModelParams::with_alpha_prime(p1, p2, eps, alpha_prime).map_err(|e| field("model", e.to_string()))?;
    let nodes = raw.model.nodes.unwrap_or(256);
    if nodes < 16 || !nodes.is_multiple_of(2) {
        return Err(field("model.nodes", format!("contour node count must be even and at least 16, got {nodes}")));
    }

    let rl = raw.lattice.unwrap_or(RawLattice {
        n1: None,
        n2: None,
        l1: None,
        l2: None,
        modes: None,
        amplitude: None,
        j2_amplitude: None,
    });
    let lattice = LatticeConfig {
        n1: rl.n1.unwrap_or(64),
        n2: rl.n2.unwrap_or(64),
        l1: positive("lattice.l1", rl.l1.unwrap_or(1.0))?,
        l2: positive("lattice.l2", rl.l2.unwrap_or(1.0))?,
        modes: rl.modes.unwrap_or(3),
        amplitude: finite("lattice.amplitude", rl.amplitude.unwrap_or(0.3))?,
        j2_amplitude: finite("lattice.j2_amplitude", rl.j2_amplitude.unwrap_or(0.39))?,
    };
    for (name, v) in [("lattice.n1", lattice.n1), ("lattice.n2", lattice.n2)] {
        if v < 8 {
            return Err(field(name, format!("lattice needs at least 8 points per direction, got {v}")));
        }
    }

    let rx = raw.lax.unwrap_or(RawLax { z: None, k: None });
    let z = match rx.z {
        Some(list) => {
            let params = ModelParams::with_alpha_prime(p1, p2, eps, alpha_prime).expect("checked above");
            let mut out = Vec::with_capacity(list.len());
            for s in &list {
                let v = complex("lax.z", s)?;
                if v.norm() < 1e-12 || (v - p1).norm() < 1e-12 || (v - p2).norm() < 1e-12 {
                    return Err(field("lax.z", format!("{s} is an excluded point (0, p1 or p2)")));
                }
                if ((v - p1).norm() - params.eps).abs() < params.eps / 8.0 {
                    return Err(field("lax.z", format!("{s} lies within eps/8 of the contour")));
                }
                out.push(v);
            }
            if out.is_empty() {
                return Err(field("lax.z", "empty spectral grid"));
            }
            Some(out)
        }
        None => None,
    };
    let k = rx.k.unwrap_or(alg.rank.max(1));
    if k == 0 {
        return Err(field("lax.k", "need at least one trace power"));
    }

    let rf = raw.flow.unwrap_or(RawFlow { steps: None, d_eps: None, period_nodes: None });
    let flow = FlowConfig {
        steps: rf.steps.unwrap_or(10),
        d_eps: finite("flow.d_eps", rf.d_eps.unwrap_or(0.01))?,
        period_nodes: rf.period_nodes.unwrap_or(64),
    };
    if flow.period_nodes < 8 {
        return Err(field("flow.period_nodes", "need at least 8 quadrature nodes"));
    }

    let out = raw.output_dir.unwrap_or_else(|| "out".into());
    let output_dir = if Path::new(&out).is_absolute() { PathBuf::from(out) } else { base.join(out) };
    Ok(ExperimentConfig {
        experiment,
        seed: raw.seed.unwrap_or(0),
        output_dir,
        algebra: raw.algebra.name,
        algebra_n,
        p1,
        p2,
        eps,
        alpha_prime,
        nodes,
        lattice,
        z,
        k,
        flow,
        config_hash: git_blob_sha1(text.as_bytes()),
    })
}

pub fn validate_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let bytes = std::fs::read(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let text = String::from_utf8(bytes).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}
