//! Physical parameters, all frequencies and rates in units of the
//! mechanical frequency ω_m.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Reduced Planck constant, J·s (exact SI value).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (exact SI value).
pub const K_B: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// TLS frequency ω_z.
    pub omega_z: f64,
    /// Resonator–TLS coupling λ.
    pub lambda_c: f64,
    /// Optomechanical coupling g.
    pub g_c: f64,
    /// Cavity damping κ.
    pub kappa: f64,
    /// Intrinsic resonator damping γ_m.
    pub gamma_m: f64,
    /// TLS damping γ_τ.
    pub gamma_tau: f64,
    /// Drive detuning Δ_L.
    pub delta_l: f64,
    /// Detuning entering the cavity rates; falls back to Δ_L when unset.
    pub delta_b: Option<f64>,
    /// ħω_m / (k_B T).
    pub theta: f64,
}

impl SystemParams {
    /// Parameter set shared by the first figure: ω_z = 0.9, κ = 0.15,
    /// γ_m = 1e-6, γ_τ = 2.5e-4, g = λ = 0.05, Δ_L = −1, T = 0.1 K at
    /// ω_m = 2π·200 MHz.
    pub fn fig1() -> Self {
        Self {
            omega_z: 0.9,
            lambda_c: 0.05,
            g_c: 0.05,
            kappa: 0.15,
            gamma_m: 1e-6,
            gamma_tau: 2.5e-4,
            delta_l: -1.0,
            delta_b: None,
            theta: theta_from_physical(200e6, true, 0.1).expect("valid preset temperature"),
        }
    }

    pub fn delta_b(&self) -> f64 {
        self.delta_b.unwrap_or(self.delta_l)
    }

    /// Detuning δω = ω_m − ω_z.
    pub fn detuning(&self) -> f64 {
        1.0 - self.omega_z
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega_z", self.omega_z),
            ("lambda_c", self.lambda_c),
            ("g_c", self.g_c),
            ("kappa", self.kappa),
            ("gamma_m", self.gamma_m),
            ("gamma_tau", self.gamma_tau),
            ("delta_l", self.delta_l),
            ("theta", self.theta),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(SimError::invalid(key, format!("must be finite, got {v}")));
            }
        }
        if let Some(db) = self.delta_b {
            if !db.is_finite() {
                return Err(SimError::invalid("delta_b", format!("must be finite, got {db}")));
            }
        }
        for (key, v) in [
            ("kappa", self.kappa),
            ("gamma_m", self.gamma_m),
            ("gamma_tau", self.gamma_tau),
            ("lambda_c", self.lambda_c),
        ] {
            if v < 0.0 {
                return Err(SimError::invalid(key, format!("must be >= 0, got {v}")));
            }
        }
        if self.theta <= 0.0 {
            return Err(SimError::invalid("theta", format!("must be > 0, got {}", self.theta)));
        }
        if self.omega_z <= 0.0 {
            return Err(SimError::invalid("omega_z", format!("must be > 0, got {}", self.omega_z)));
        }
        Ok(())
    }
}

/// θ = ħω_m/(k_B T) from a lab frequency in Hz.
///
/// With `angular` set, `frequency_hz` is read as ω_m/2π, so ω_m = 2π·f.
/// Otherwise ω_m = f numerically.
pub fn theta_from_physical(frequency_hz: f64, angular: bool, temperature_k: f64) -> Result<f64> {
    if !(frequency_hz > 0.0) || !frequency_hz.is_finite() {
        return Err(SimError::invalid(
            "omega_m_hz",
            format!("must be finite and > 0, got {frequency_hz}"),
        ));
    }
    if !(temperature_k > 0.0) || !temperature_k.is_finite() {
        return Err(SimError::invalid(
            "temperature_k",
            format!("must be finite and > 0, got {temperature_k}"),
        ));
    }
    let omega = if angular {
        std::f64::consts::TAU * frequency_hz
    } else {
        frequency_hz
    };
    Ok(HBAR * omega / (K_B * temperature_k))
}
