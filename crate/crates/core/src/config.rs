//! Run configuration: flat-key TOML in, validated [`RunConfig`] out.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::params::{theta_from_physical, SystemParams};
use crate::propagator::{IntegratorConfig, Method};

pub const DEFAULT_NMAX: usize = 100;
pub const DEFAULT_HORIZON: f64 = 200.0;
pub const DEFAULT_SAMPLE_EVERY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    /// Dressed-state master equation with secular jumps between polaritons.
    Polariton,
    /// Bare-basis master equation with local resonator and TLS jumps.
    Simple,
}

impl Approach {
    pub fn name(&self) -> &'static str {
        match self {
            Approach::Polariton => "polariton",
            Approach::Simple => "simple",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// Resonator and TLS both thermal at θ.
    ThermalThermal,
    /// Resonator thermal at θ, TLS in its ground state.
    ThermalGround,
}

impl InitialState {
    pub fn name(&self) -> &'static str {
        match self {
            InitialState::ThermalThermal => "thermal-thermal",
            InitialState::ThermalGround => "thermal-ground",
        }
    }
}

/// How θ = ħω_m/(k_B T) was specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Theta(f64),
    Physical {
        omega_m_hz: f64,
        /// Read `omega_m_hz` as f with ω_m = 2πf.
        angular: bool,
        temperature_k: f64,
    },
}

impl Temperature {
    pub fn theta(&self) -> Result<f64> {
        match *self {
            Temperature::Theta(t) => Ok(t),
            Temperature::Physical {
                omega_m_hz,
                angular,
                temperature_k,
            } => theta_from_physical(omega_m_hz, angular, temperature_k),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Temperature::Theta(t) => format!("theta given directly ({t})"),
            Temperature::Physical {
                omega_m_hz,
                angular,
                temperature_k,
            } => {
                let omega = if angular {
                    format!("omega_m = 2*pi*{omega_m_hz} rad/s")
                } else {
                    format!("omega_m = {omega_m_hz} rad/s")
                };
                format!("{omega}, T = {temperature_k} K, theta = hbar*omega_m/(k_B*T)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub temperature: Temperature,
    pub nmax: usize,
    pub n_pulses: usize,
    pub horizon: f64,
    pub approach: Approach,
    pub integrator: IntegratorConfig,
    pub initial_state: InitialState,
    pub sample_every: f64,
}

/// On-disk layout. Every key is top level.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    omega_z: f64,
    lambda: f64,
    g: f64,
    kappa: f64,
    gamma_m: f64,
    gamma_tau: f64,
    delta_l: f64,
    delta_b: Option<f64>,
    theta: Option<f64>,
    omega_m_hz: Option<f64>,
    angular_convention: Option<bool>,
    temperature_k: Option<f64>,
    nmax: Option<usize>,
    n_pulses: Option<usize>,
    horizon: Option<f64>,
    approach: Option<Approach>,
    initial_state: Option<InitialState>,
    sample_every: Option<f64>,
    method: Option<Method>,
    dt: Option<f64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    guard_interval: Option<usize>,
    interaction_picture: Option<bool>,
}

impl RawConfig {
    fn resolve(self) -> Result<RunConfig> {
        let temperature = match (self.theta, self.omega_m_hz, self.temperature_k) {
            (Some(t), None, None) => {
                if self.angular_convention.is_some() {
                    return Err(SimError::invalid(
                        "angular_convention",
                        "only meaningful with omega_m_hz and temperature_k",
                    ));
                }
                Temperature::Theta(t)
            }
            (None, Some(f), Some(temp)) => Temperature::Physical {
                omega_m_hz: f,
                angular: self.angular_convention.unwrap_or(true),
                temperature_k: temp,
            },
            (Some(_), _, _) => {
                return Err(SimError::invalid(
                    "theta",
                    "give either theta or omega_m_hz + temperature_k, not both",
                ))
            }
            (None, None, _) => {
                return Err(SimError::invalid(
                    "omega_m_hz",
                    "temperature missing: set theta, or omega_m_hz and temperature_k",
                ))
            }
            (None, Some(_), None) => return Err(SimError::invalid("temperature_k", "required with omega_m_hz")),
        };
        let defaults = IntegratorConfig::default();
        let cfg = RunConfig {
            params: SystemParams {
                omega_z: self.omega_z,
                lambda_c: self.lambda,
                g_c: self.g,
                kappa: self.kappa,
                gamma_m: self.gamma_m,
                gamma_tau: self.gamma_tau,
                delta_l: self.delta_l,
                delta_b: self.delta_b,
                theta: temperature.theta()?,
            },
            temperature,
            nmax: self.nmax.unwrap_or(DEFAULT_NMAX),
            n_pulses: self.n_pulses.unwrap_or(0),
            horizon: self.horizon.unwrap_or(DEFAULT_HORIZON),
            approach: self.approach.unwrap_or(Approach::Polariton),
            integrator: IntegratorConfig {
                method: self.method.unwrap_or(defaults.method),
                dt: self.dt.unwrap_or(defaults.dt),
                rel_tol: self.rel_tol.unwrap_or(defaults.rel_tol),
                abs_tol: self.abs_tol.unwrap_or(defaults.abs_tol),
                guard_interval: self.guard_interval.unwrap_or(defaults.guard_interval),
                interaction_picture: self.interaction_picture.unwrap_or(defaults.interaction_picture),
            },
            initial_state: self.initial_state.unwrap_or(InitialState::ThermalThermal),
            sample_every: self.sample_every.unwrap_or(DEFAULT_SAMPLE_EVERY),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Maps internal field names back to the config-file keys.
fn file_key(key: &str) -> &str {
    match key {
        "lambda_c" => "lambda",
        "g_c" => "g",
        other => other,
    }
}

impl RunConfig {
    /// Parameters of the first figure with default numerics.
    pub fn fig1() -> Self {
        Self {
            params: SystemParams::fig1(),
            temperature: Temperature::Physical {
                omega_m_hz: 200e6,
                angular: true,
                temperature_k: 0.1,
            },
            nmax: DEFAULT_NMAX,
            n_pulses: 0,
            horizon: DEFAULT_HORIZON,
            approach: Approach::Polariton,
            integrator: IntegratorConfig::default(),
            initial_state: InitialState::ThermalThermal,
            sample_every: DEFAULT_SAMPLE_EVERY,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| SimError::invalid("<toml>", e.to_string()))?;
        raw.resolve()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| match e {
            SimError::InvalidParameter { key, reason } => SimError::invalid(file_key(&key), reason),
            other => other,
        })?;
        self.integrator.validate()?;
        if self.nmax < 2 {
            return Err(SimError::invalid("nmax", format!("must be >= 2, got {}", self.nmax)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(SimError::invalid("horizon", format!("must be finite and > 0, got {}", self.horizon)));
        }
        if !(self.sample_every > 0.0) || !self.sample_every.is_finite() {
            return Err(SimError::invalid(
                "sample_every",
                format!("must be finite and > 0, got {}", self.sample_every),
            ));
        }
        Ok(())
    }

    /// Switches the Hz → ω_m reading and recomputes θ.
    pub fn set_angular_convention(&mut self, angular: bool) -> Result<()> {
        match &mut self.temperature {
            Temperature::Physical { angular: a, .. } => *a = angular,
            Temperature::Theta(_) => {
                return Err(SimError::invalid(
                    "angular_convention",
                    "config gives theta directly; set omega_m_hz and temperature_k instead",
                ))
            }
        }
        self.params.theta = self.temperature.theta()?;
        Ok(())
    }

    /// Ordered `key = value` echo, in config-file vocabulary.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let mut out = vec![
            ("omega_z", p.omega_z.to_string()),
            ("lambda", p.lambda_c.to_string()),
            ("g", p.g_c.to_string()),
            ("kappa", p.kappa.to_string()),
            ("gamma_m", p.gamma_m.to_string()),
            ("gamma_tau", p.gamma_tau.to_string()),
            ("delta_l", p.delta_l.to_string()),
            (
                "delta_b",
                p.delta_b.map_or_else(|| format!("{} (= delta_l)", p.delta_l), |d| d.to_string()),
            ),
            ("theta", p.theta.to_string()),
        ];
        if let Temperature::Physical {
            omega_m_hz,
            angular,
            temperature_k,
        } = self.temperature
        {
            out.push(("omega_m_hz", omega_m_hz.to_string()));
            out.push(("angular_convention", angular.to_string()));
            out.push(("temperature_k", temperature_k.to_string()));
        }
        let i = &self.integrator;
        out.extend([
            ("nmax", self.nmax.to_string()),
            ("n_pulses", self.n_pulses.to_string()),
            ("horizon", self.horizon.to_string()),
            ("approach", self.approach.name().to_string()),
            ("initial_state", self.initial_state.name().to_string()),
            ("sample_every", self.sample_every.to_string()),
            (
                "method",
                match i.method {
                    Method::Rk4 => "rk4",
                    Method::Adaptive => "adaptive",
                }
                .to_string(),
            ),
            ("dt", i.dt.to_string()),
            ("rel_tol", i.rel_tol.to_string()),
            ("abs_tol", i.abs_tol.to_string()),
            ("guard_interval", i.guard_interval.to_string()),
            ("interaction_picture", i.interaction_picture.to_string()),
        ]);
        out
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_toml_str(&text).map_err(|e| {
        let message = match e {
            SimError::InvalidParameter { key, reason } if key == "<toml>" => reason,
            SimError::InvalidParameter { key, reason } => format!("key `{key}`: {reason}"),
            other => other.to_string(),
        };
        SimError::Config {
            path: path.to_path_buf(),
            message,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG1: &str = r#"
omega_z = 0.9
lambda = 0.05
g = 0.05
kappa = 0.15
gamma_m = 1e-6
gamma_tau = 2.5e-4
delta_l = -1.0
omega_m_hz = 200e6
angular_convention = true
temperature_k = 0.1
"#;

    #[test]
    fn fig1_text_matches_preset() {
        let cfg = RunConfig::from_toml_str(FIG1).unwrap();
        assert_eq!(cfg, RunConfig::fig1());
        assert!((cfg.params.theta - 0.09597).abs() < 1e-4);
        assert_eq!(cfg.nmax, DEFAULT_NMAX);
        assert_eq!(cfg.horizon, 200.0);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml_str(&format!("{FIG1}\ngama_tau = 1.0\n")).unwrap_err();
        assert!(err.to_string().contains("gama_tau"), "{err}");
    }

    #[test]
    fn negative_gamma_tau_rejected() {
        let text = FIG1.replace("gamma_tau = 2.5e-4", "gamma_tau = -1e-4");
        match RunConfig::from_toml_str(&text).unwrap_err() {
            SimError::InvalidParameter { key, .. } => assert_eq!(key, "gamma_tau"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn internal_names_map_to_file_keys() {
        let text = FIG1.replace("lambda = 0.05", "lambda = nan");
        match RunConfig::from_toml_str(&text).unwrap_err() {
            SimError::InvalidParameter { key, .. } => assert_eq!(key, "lambda"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn temperature_forms() {
        let direct = FIG1
            .replace("omega_m_hz = 200e6\n", "")
            .replace("angular_convention = true\n", "")
            .replace("temperature_k = 0.1\n", "theta = 0.5\n");
        let mut cfg = RunConfig::from_toml_str(&direct).unwrap();
        assert_eq!(cfg.params.theta, 0.5);
        assert!(cfg.set_angular_convention(false).is_err());

        let both = format!("{FIG1}theta = 0.5\n");
        assert!(RunConfig::from_toml_str(&both).is_err());
        let neither = FIG1.replace("temperature_k = 0.1\n", "").replace("omega_m_hz = 200e6\n", "");
        assert!(RunConfig::from_toml_str(&neither).is_err());

        let mut cfg = RunConfig::fig1();
        cfg.set_angular_convention(false).unwrap();
        assert!((cfg.params.theta * 2.0 * std::f64::consts::PI - 0.09598486140851266).abs() < 1e-15);
    }

    #[test]
    fn bad_numerics_rejected() {
        for (from, to) in [
            ("delta_l = -1.0", "delta_l = -1.0\nhorizon = 0.0"),
            ("delta_l = -1.0", "delta_l = -1.0\nnmax = 1"),
            ("delta_l = -1.0", "delta_l = -1.0\ndt = -0.1"),
            ("delta_l = -1.0", "delta_l = -1.0\nsample_every = 0.0"),
            ("delta_l = -1.0", "delta_l = -1.0\napproach = \"exact\""),
        ] {
            assert!(RunConfig::from_toml_str(&FIG1.replace(from, to)).is_err(), "{to}");
        }
    }

    #[test]
    fn enums_parse() {
        let text = format!(
            "{FIG1}approach = \"simple\"\ninitial_state = \"thermal-ground\"\nmethod = \"adaptive\"\n"
        );
        let cfg = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.approach, Approach::Simple);
        assert_eq!(cfg.initial_state, InitialState::ThermalGround);
        assert_eq!(cfg.integrator.method, Method::Adaptive);
    }

    #[test]
    fn load_config_wraps_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, format!("{FIG1}\nfoo = 1\n")).unwrap();
        let err = load_config(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.toml") && msg.contains("foo"), "{msg}");
        assert!(matches!(load_config(&dir.path().join("missing.toml")), Err(SimError::Io { .. })));
    }
}
