//! Declarative experiment configs: versioned JSON with unknown fields
//! rejected, plus the per-family validation rules.

use std::fmt;
use std::path::Path;

use grahtp::numerics::Field;
use grahtp::sensing::EnsembleKind;
use grahtp::solver::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, io_err, CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Inclusive arithmetic progression start, start+step, ..., <= stop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: usize,
    pub stop: usize,
    pub step: usize,
}

impl RangeSpec {
    pub fn values(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut v = self.start;
        while v <= self.stop {
            out.push(v);
            v += self.step;
        }
        out
    }

    fn validate(&self, what: &str) -> CliResult<()> {
        if self.step == 0 {
            return Err(CliError::Config(format!("{what}: step must be positive")));
        }
        if self.start == 0 {
            return Err(CliError::Config(format!("{what}: start must be positive")));
        }
        if self.start > self.stop {
            return Err(CliError::Config(format!(
                "{what}: empty range (start {} > stop {})",
                self.start, self.stop
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Convergence,
    Timing,
    TransitionCurve,
    TransitionGrid,
    #[serde(rename = "reconstruct_1d")]
    Reconstruct1d,
    #[serde(rename = "reconstruct_2d")]
    Reconstruct2d,
    Dft,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Convergence,
        Family::Timing,
        Family::TransitionCurve,
        Family::TransitionGrid,
        Family::Reconstruct1d,
        Family::Reconstruct2d,
        Family::Dft,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Convergence => "convergence",
            Family::Timing => "timing",
            Family::TransitionCurve => "transition_curve",
            Family::TransitionGrid => "transition_grid",
            Family::Reconstruct1d => "reconstruct_1d",
            Family::Reconstruct2d => "reconstruct_2d",
            Family::Dft => "dft",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn is_reconstruct(&self) -> bool {
        matches!(self, Family::Reconstruct1d | Family::Reconstruct2d)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How each trial picks its starting point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    /// Spectral initializer on the trial's own measurements.
    Spectral,
    /// Start at exact relative error `r` from the truth, on the true support.
    OraclePerturbed { r: f64 },
}

// Deserialized by hand: serde ignores deny_unknown_fields on internally
// tagged enums, and config files should reject typos inside `init` too.
impl<'de> Deserialize<'de> for InitSpec {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            kind: String,
            #[serde(default)]
            r: Option<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        match (raw.kind.as_str(), raw.r) {
            ("spectral", None) => Ok(InitSpec::Spectral),
            ("spectral", Some(_)) => Err(serde::de::Error::custom(
                "spectral init does not take an 'r' field",
            )),
            ("oracle_perturbed", Some(r)) => Ok(InitSpec::OraclePerturbed { r }),
            ("oracle_perturbed", None) => Err(serde::de::Error::custom(
                "oracle_perturbed init requires the 'r' field",
            )),
            (other, _) => Err(serde::de::Error::custom(format!(
                "unknown init kind {other:?}; expected \"spectral\" or \"oracle_perturbed\""
            ))),
        }
    }
}

/// A benchmark experiment: one family plus its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_range: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_range: Option<RangeSpec>,
    /// Image shape for reconstruct_2d.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    /// Optional PGM input for reconstruct_2d; a synthetic wavelet-sparse
    /// image is generated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    /// Haar decomposition depth for the reconstruct families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelet_levels: Option<usize>,
    pub trials: usize,
    pub seed_base: u64,
    pub field: Field,
    #[serde(default)]
    pub sigma: f64,
    pub solver: SolverConfig,
    pub init: InitSpec,
    /// Emit per-iteration trace_<trial>.csv files (single-cell families only).
    #[serde(default)]
    pub trace: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| io_err(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn require(&self, field: &str, present: bool) -> CliResult<()> {
        if present {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "family '{}' requires the '{field}' field",
                self.family
            )))
        }
    }

    fn forbid(&self, field: &str, absent: bool) -> CliResult<()> {
        if absent {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "family '{}' does not accept the '{field}' field",
                self.family
            )))
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (this tool reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(CliError::Config(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            )));
        }
        self.solver.validate().map_err(config_err)?;
        if let InitSpec::OraclePerturbed { r } = self.init {
            if !r.is_finite() || r <= 0.0 {
                return Err(CliError::Config(format!(
                    "oracle_perturbed init needs finite r > 0, got {r}"
                )));
            }
        }
        if let Some(range) = &self.m_range {
            range.validate("m_range")?;
        }
        if let Some(range) = &self.s_range {
            range.validate("s_range")?;
        }

        match self.family {
            Family::Convergence | Family::Dft => {
                self.require("n", self.n.is_some())?;
                self.require("m", self.m.is_some())?;
                self.require("s", self.s.is_some())?;
                self.forbid("m_range", self.m_range.is_none())?;
                self.forbid("s_range", self.s_range.is_none())?;
            }
            Family::Timing => {
                self.require("n", self.n.is_some())?;
                self.require("m or m_range", self.m.is_some() || self.m_range.is_some())?;
                self.require("s or s_range", self.s.is_some() || self.s_range.is_some())?;
                if self.m.is_some() && self.m_range.is_some() {
                    return Err(CliError::Config(
                        "give either m or m_range, not both".into(),
                    ));
                }
                if self.s.is_some() && self.s_range.is_some() {
                    return Err(CliError::Config(
                        "give either s or s_range, not both".into(),
                    ));
                }
            }
            Family::TransitionCurve => {
                self.require("n", self.n.is_some())?;
                self.require("s", self.s.is_some())?;
                self.require("m_range", self.m_range.is_some())?;
                self.forbid("m", self.m.is_none())?;
                self.forbid("s_range", self.s_range.is_none())?;
            }
            Family::TransitionGrid => {
                self.require("n", self.n.is_some())?;
                self.require("s_range", self.s_range.is_some())?;
                self.require("m_range", self.m_range.is_some())?;
                self.forbid("m", self.m.is_none())?;
                self.forbid("s", self.s.is_none())?;
            }
            Family::Reconstruct1d => {
                self.require("n", self.n.is_some())?;
                self.require("m", self.m.is_some())?;
                self.require("s", self.s.is_some())?;
                self.require("wavelet_levels", self.wavelet_levels.is_some())?;
                self.forbid("m_range", self.m_range.is_none())?;
                self.forbid("s_range", self.s_range.is_none())?;
                let levels = self.wavelet_levels.unwrap();
                check_levels(self.n.unwrap(), levels, "n")?;
                if self.field != Field::Real {
                    return Err(CliError::Config(
                        "wavelet reconstructions run in the real field".into(),
                    ));
                }
            }
            Family::Reconstruct2d => {
                self.require("height", self.height.is_some())?;
                self.require("width", self.width.is_some())?;
                self.require("m", self.m.is_some())?;
                self.require("s", self.s.is_some())?;
                self.require("wavelet_levels", self.wavelet_levels.is_some())?;
                self.forbid("n", self.n.is_none())?;
                self.forbid("m_range", self.m_range.is_none())?;
                self.forbid("s_range", self.s_range.is_none())?;
                let levels = self.wavelet_levels.unwrap();
                check_levels(self.height.unwrap(), levels, "height")?;
                check_levels(self.width.unwrap(), levels, "width")?;
                if self.field != Field::Real {
                    return Err(CliError::Config(
                        "wavelet reconstructions run in the real field".into(),
                    ));
                }
            }
        }
        if !self.family.is_reconstruct() {
            self.forbid("wavelet_levels", self.wavelet_levels.is_none())?;
        }
        if self.family != Family::Reconstruct2d {
            self.forbid("image", self.image.is_none())?;
            self.forbid("height", self.height.is_none())?;
            self.forbid("width", self.width.is_none())?;
        }
        if self.family == Family::Dft && self.init == InitSpec::Spectral {
            return Err(CliError::Config(
                "the spectral initializer is not validated for partial-DFT sensing; \
                 use init {\"kind\": \"oracle_perturbed\", \"r\": ...} instead"
                    .into(),
            ));
        }
        if self.trace && self.cells().len() != 1 {
            return Err(CliError::Config(
                "trace output is only available for single-cell families \
                 (convergence, dft, reconstruct_1d, reconstruct_2d)"
                    .into(),
            ));
        }
        Ok(())
    }

    /// The (m, s) parameter cells this experiment sweeps, in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let ms: Vec<usize> = match (self.m, &self.m_range) {
            (Some(m), _) => vec![m],
            (None, Some(range)) => range.values(),
            (None, None) => Vec::new(),
        };
        let ss: Vec<usize> = match (self.s, &self.s_range) {
            (Some(s), _) => vec![s],
            (None, Some(range)) => range.values(),
            (None, None) => Vec::new(),
        };
        let n = self
            .n
            .unwrap_or_else(|| self.height.unwrap_or(0) * self.width.unwrap_or(0));
        let mut cells = Vec::new();
        let mut index = 0u64;
        for &s in &ss {
            for &m in &ms {
                cells.push(Cell { n, m, s, index });
                index += 1;
            }
        }
        cells
    }
}

/// One (n, m, s) point of an experiment sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    /// Position in the sweep, folded into the seed stream so every cell
    /// draws independent instances.
    pub index: u64,
}

fn check_levels(len: usize, levels: usize, what: &str) -> CliResult<()> {
    if levels == 0 {
        return Err(CliError::Config("wavelet_levels must be at least 1".into()));
    }
    let block = 1usize << levels;
    if !len.is_multiple_of(block) {
        return Err(CliError::Config(format!(
            "{what} = {len} is not divisible by 2^wavelet_levels = {block}"
        )));
    }
    Ok(())
}

/// Config for `grahtp gen`: materialize one instance to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub field: Field,
    pub ensemble: EnsembleKind,
    #[serde(default)]
    pub sigma: f64,
    pub seed: u64,
}

impl GenConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| io_err(format!("{}: {e}", path.display())))?;
        let cfg: GenConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (this tool reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(CliError::Config(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Config for `grahtp solve`: run the solver on a stored instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveJobConfig {
    pub schema_version: u32,
    /// Path to an instance.json produced by `grahtp gen`.
    pub instance: String,
    pub solver: SolverConfig,
    pub init: InitSpec,
    /// Seed for the oracle_perturbed initializer (spectral init draws no
    /// randomness). Overridden by `--seed`.
    #[serde(default)]
    pub init_seed: u64,
    #[serde(default)]
    pub trace: bool,
}

impl SolveJobConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| io_err(format!("{}: {e}", path.display())))?;
        let cfg: SolveJobConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (this tool reads {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.solver.validate().map_err(config_err)?;
        Ok(cfg)
    }
}
