use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::amplifiers::{function_of_x, quadratic_signal_op, AmplifierSpec, SignalFunction};
use crate::error::{invalid, Error, Result};
use crate::fock::{number_op, FockSpace, Operator, StateKind, C64};
use crate::measurement::{DetectorKind, DetectorSpec, GridSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Verify,
    NoiseSweep,
    Povm,
    Estimate,
    Compare,
}

impl CommandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::Verify => "verify",
            CommandName::NoiseSweep => "noise-sweep",
            CommandName::Povm => "povm",
            CommandName::Estimate => "estimate",
            CommandName::Compare => "compare",
        }
    }
}

/// Signal operator descriptor. Complex coefficients are `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalConfig {
    /// The number operator `a†a`.
    #[serde(alias = "number")]
    ADagA {},
    /// `α a² + β a†a + γ a†² + δ`
    Quadratic {
        #[serde(default)]
        alpha: C64,
        #[serde(default)]
        beta: C64,
        #[serde(default)]
        gamma: C64,
        #[serde(default)]
        delta: C64,
    },
    /// `Σ_k c_k x^k` on the truncated position quadrature.
    PolyX { coeffs: Vec<f64> },
    /// `(−1)^{a†a}`
    Parity {},
    /// Diagonal in the Fock basis, one entry per level.
    Diagonal { values: Vec<C64> },
    /// `c 𝟙`
    Constant { value: C64 },
}

impl SignalConfig {
    pub fn build(&self, dim: usize) -> Result<Operator> {
        let space = FockSpace::new(dim)?;
        let diag = |v: &dyn Fn(usize) -> C64| {
            Operator::from_fn(vec![dim], |i, j| if i == j { v(i) } else { C64::new(0.0, 0.0) })
        };
        Ok(match self {
            SignalConfig::ADagA {} => number_op(space),
            SignalConfig::Quadratic {
                alpha,
                beta,
                gamma,
                delta,
            } => {
                let q = quadratic_signal_op(space, *alpha, *beta, *gamma, *delta);
                if !q.is_normal {
                    log::info!("quadratic signal fails the coefficient normality test");
                }
                q.op
            }
            SignalConfig::PolyX { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("amplifier.signal.coeffs", "need finite coefficients"));
                }
                let p = SignalFunction::Polynomial(coeffs.clone());
                function_of_x(dim, |x| C64::new(p.eval(x), 0.0))?
            }
            SignalConfig::Parity {} => diag(&|i| C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)),
            SignalConfig::Diagonal { values } => {
                if values.len() != dim {
                    return Err(invalid(
                        "amplifier.signal.values",
                        format!("{} entries for dimension {dim}", values.len()),
                    ));
                }
                diag(&|i| values[i])
            }
            SignalConfig::Constant { value } => diag(&|_| *value),
        })
    }
}

/// Amplifier block. `g` is the gain used when no `gains` list is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplifierConfig {
    Linear {
        g: f64,
    },
    TwoModeNormal {
        signal: SignalConfig,
        #[serde(default = "unit")]
        g: f64,
    },
    VonNeumann {
        signal: SignalConfig,
        #[serde(default = "unit")]
        g: f64,
    },
    ThreeMode {
        signal: SignalConfig,
        #[serde(default = "unit")]
        g: f64,
    },
    SingleMode {
        f: SignalFunction,
        #[serde(default = "unit")]
        g: f64,
        #[serde(default)]
        r: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl Default for AmplifierConfig {
    fn default() -> Self {
        AmplifierConfig::TwoModeNormal {
            signal: SignalConfig::ADagA {},
            g: 1.0,
        }
    }
}

impl AmplifierConfig {
    pub fn gain(&self) -> f64 {
        match self {
            AmplifierConfig::Linear { g }
            | AmplifierConfig::TwoModeNormal { g, .. }
            | AmplifierConfig::VonNeumann { g, .. }
            | AmplifierConfig::ThreeMode { g, .. }
            | AmplifierConfig::SingleMode { g, .. } => *g,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, AmplifierConfig::Linear { .. })
    }

    pub fn meter_count(&self) -> usize {
        match self {
            AmplifierConfig::SingleMode { .. } => 0,
            AmplifierConfig::ThreeMode { .. } => 2,
            _ => 1,
        }
    }

    pub fn signal(&self) -> Option<&SignalConfig> {
        match self {
            AmplifierConfig::TwoModeNormal { signal, .. }
            | AmplifierConfig::VonNeumann { signal, .. }
            | AmplifierConfig::ThreeMode { signal, .. } => Some(signal),
            _ => None,
        }
    }

    /// The amplifier at gain `g` on a signal mode of dimension `dim`.
    pub fn build(&self, dim: usize, g: f64) -> Result<AmplifierSpec> {
        let spec = match self {
            AmplifierConfig::Linear { .. } => AmplifierSpec::Linear { g },
            AmplifierConfig::TwoModeNormal { signal, .. } => AmplifierSpec::TwoModeNormal {
                f: signal.build(dim)?,
                g,
            },
            AmplifierConfig::VonNeumann { signal, .. } => AmplifierSpec::VonNeumann {
                f: signal.build(dim)?,
                g,
            },
            AmplifierConfig::ThreeMode { signal, .. } => AmplifierSpec::ThreeMode {
                f: signal.build(dim)?,
                g,
            },
            AmplifierConfig::SingleMode { f, r, .. } => AmplifierSpec::SingleMode { f: f.clone(), g, r: *r },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PovmRoute {
    /// Gaussian records in closed form.
    #[default]
    ClosedForm,
    /// Sandwich of the amplifier unitary with the detector elements.
    Numeric,
}

/// One JSON document describing a run. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    /// Signal-mode dimension.
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub amplifier: AmplifierConfig,
    /// Gains to sweep; defaults to the single amplifier gain.
    #[serde(default)]
    pub gains: Option<Vec<f64>>,
    #[serde(default = "default_input")]
    pub input: StateKind,
    /// Meter preparations; defaults to vacua.
    #[serde(default)]
    pub meters: Option<Vec<StateKind>>,
    /// Meter dimensions; defaults to the automatic rule per gain.
    #[serde(default)]
    pub meter_dims: Option<Vec<usize>>,
    #[serde(default)]
    pub detector: Option<DetectorSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub povm_route: PovmRoute,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn default_dim() -> usize {
    8
}

fn default_input() -> StateKind {
    StateKind::Fock { n: 1 }
}

fn default_trials() -> usize {
    100_000
}

fn default_seed() -> u64 {
    42
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults parse")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn gain_list(&self) -> Vec<f64> {
        self.gains.clone().unwrap_or_else(|| vec![self.amplifier.gain()])
    }

    pub fn meter_kinds(&self) -> Vec<StateKind> {
        self.meters
            .clone()
            .unwrap_or_else(|| vec![StateKind::vacuum(); self.amplifier.meter_count()])
    }

    /// The detector, or the natural one for `command` when none is set.
    pub fn detector_for(&self, command: CommandName) -> DetectorSpec {
        if let Some(d) = self.detector {
            return d;
        }
        let kind = match (&self.amplifier, command) {
            (AmplifierConfig::Linear { .. }, _) => DetectorKind::Heterodyne,
            (AmplifierConfig::VonNeumann { .. } | AmplifierConfig::ThreeMode { .. }, _) => DetectorKind::Homodyne,
            (_, CommandName::Estimate) => DetectorKind::Homodyne,
            _ => DetectorKind::Heterodyne,
        };
        DetectorSpec {
            kind,
            efficiency: 1.0,
        }
    }

    /// Schema-level checks that need no numerics. Field names in the errors
    /// follow the JSON paths.
    pub fn validate(&self, command: CommandName) -> Result<()> {
        if let Some(c) = self.command {
            if c != command {
                return Err(Error::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    c.as_str(),
                    command.as_str()
                )));
            }
        }
        if self.dim < 2 {
            return Err(invalid("dim", "a mode needs at least two levels"));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "at least one trial is required"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be positive"));
        }
        let g = self.amplifier.gain();
        check_gain(&self.amplifier, g, "amplifier.g")?;
        if let Some(gs) = &self.gains {
            if gs.is_empty() {
                return Err(invalid("gains", "list is empty"));
            }
            for (k, &g) in gs.iter().enumerate() {
                check_gain(&self.amplifier, g, &format!("gains[{k}]"))?;
            }
        }
        if let AmplifierConfig::SingleMode { r, .. } = self.amplifier {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(invalid("amplifier.r", "squeezing must be finite and non-negative"));
            }
        }
        if let Some(m) = &self.meters {
            if m.len() != self.amplifier.meter_count() {
                return Err(invalid(
                    "meters",
                    format!("expected {} meter states, got {}", self.amplifier.meter_count(), m.len()),
                ));
            }
        }
        if let Some(d) = &self.meter_dims {
            if d.len() != self.amplifier.meter_count() {
                return Err(invalid(
                    "meter_dims",
                    format!("expected {} dimensions, got {}", self.amplifier.meter_count(), d.len()),
                ));
            }
            if d.iter().any(|&k| k < 2) {
                return Err(invalid("meter_dims", "each meter needs at least two levels"));
            }
        }
        if let Some(d) = &self.detector {
            d.validate().map_err(|_| invalid("detector.efficiency", format!("{} is outside (0, 1]", d.efficiency)))?;
        }
        if !(self.grid.radius_widths > 0.0 && self.grid.step_widths > 0.0) {
            return Err(invalid("grid", "radius and step must be positive"));
        }
        Ok(())
    }

    /// The config with every default made explicit and `seed` applied.
    pub fn resolved(&self, command: CommandName, seed: Option<u64>) -> RunConfig {
        let mut c = self.clone();
        c.command = Some(command);
        c.gains = Some(self.gain_list());
        c.meters = Some(self.meter_kinds());
        c.detector = Some(self.detector_for(command));
        if let Some(s) = seed {
            c.seed = s;
        }
        c
    }
}

fn check_gain(amp: &AmplifierConfig, g: f64, field: &str) -> Result<()> {
    if !g.is_finite() {
        return Err(invalid(field, "gain must be finite"));
    }
    match amp {
        AmplifierConfig::Linear { .. } => {
            if g <= 0.0 {
                return Err(invalid(field, format!("linear gain must be positive, got {g}")));
            }
            if g < 1.0 {
                return Err(Error::GainOutOfRange(g));
            }
        }
        _ => {
            if g < 0.0 {
                return Err(invalid(field, format!("gain must be non-negative, got {g}")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_takes_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c.dim, 8);
        assert_eq!(c.amplifier, AmplifierConfig::default());
        assert!(c.validate(CommandName::Verify).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"dims": 4}"#).is_err());
        let bad = r#"{"amplifier": {"variant": "linear", "g": 2, "r": 1}}"#;
        assert!(RunConfig::from_json(bad).is_err());
        let bad = r#"{"amplifier": {"variant": "two_mode_normal", "signal": {"kind": "parity", "x": 1}}}"#;
        assert!(RunConfig::from_json(bad).is_err());
    }

    #[test]
    fn signal_descriptors_parse() {
        let text = r#"{"amplifier": {"variant": "two_mode_normal", "g": 2,
            "signal": {"kind": "quadratic", "alpha": [0.5, 0], "beta": [1, 0], "gamma": [0.5, 0]}}}"#;
        let c = RunConfig::from_json(text).unwrap();
        let spec = c.amplifier.build(10, 2.0).unwrap();
        assert_eq!(spec.gain(), 2.0);
        let n = RunConfig::from_json(r#"{"amplifier": {"variant": "von_neumann", "signal": {"kind": "number"}}}"#).unwrap();
        assert_eq!(n.amplifier.signal(), Some(&SignalConfig::ADagA {}));
    }

    #[test]
    fn non_positive_linear_gain_names_the_field() {
        let c = RunConfig::from_json(r#"{"amplifier": {"variant": "linear", "g": 0}}"#).unwrap();
        let e = c.validate(CommandName::Verify).unwrap_err();
        assert!(e.to_string().contains("amplifier.g"), "{e}");
        let c = RunConfig::from_json(r#"{"amplifier": {"variant": "linear", "g": 2}, "gains": [1.5, -1]}"#).unwrap();
        assert!(c.validate(CommandName::NoiseSweep).unwrap_err().to_string().contains("gains[1]"));
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = RunConfig::from_json(r#"{"gains": [1, 2]}"#).unwrap();
        let r = c.resolved(CommandName::Povm, Some(7));
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), r);
        assert_eq!(r.seed, 7);
    }
}
