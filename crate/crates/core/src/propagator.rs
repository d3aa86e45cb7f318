//! Time integration of `dρ/dt = G(ρ)` over one segment.
//!
//! With the interaction picture on, the state is carried in the frame that
//! rotates with the diagonal of `H` for the duration of the segment and
//! rotated back analytically at its end. For a generator whose Hamiltonian is
//! diagonal the rotating-frame equation contains only the dissipative scales,
//! so the step no longer has to resolve the Bohr frequencies.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dissipation::Generator;
use crate::error::{GuardKind, Result, SimError};
use crate::space::DensityMatrix;

pub const TRACE_GUARD: f64 = 1e-7;
pub const HERMITICITY_GUARD: f64 = 1e-7;
pub const POSITIVITY_GUARD: f64 = -1e-6;

/// Largest `dt × stiffness` accepted for fixed-step RK4 in the lab frame.
pub const LAB_STEP_BOUND: f64 = 0.1;
/// Same bound in the rotating frame.
pub const ROTATING_STEP_BOUND: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step (RK4) or initial step (adaptive), units of 1/ω_m.
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Steps between validity checks.
    pub guard_interval: usize,
    pub interaction_picture: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt: 0.05,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            guard_interval: 100,
            interaction_picture: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(SimError::invalid("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(SimError::invalid("rel_tol", "must be > 0"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(SimError::invalid("abs_tol", "must be > 0"));
        }
        if self.guard_interval == 0 {
            return Err(SimError::invalid("guard_interval", "must be >= 1"));
        }
        Ok(())
    }

    /// Checks that a fixed step resolves the fastest scale of `generator`.
    pub fn validate_for(&self, generator: &Generator) -> Result<()> {
        self.validate()?;
        if self.method == Method::Adaptive {
            return Ok(());
        }
        let (stiffness, bound) = if self.interaction_picture {
            (generator.stiffness(true), ROTATING_STEP_BOUND)
        } else {
            (generator.stiffness(false), LAB_STEP_BOUND)
        };
        if self.dt * stiffness > bound {
            return Err(SimError::invalid(
                "dt",
                format!(
                    "dt = {} with fastest rate {stiffness:.4} gives dt·rate = {:.3} > {bound}; \
                     use dt <= {:.3e}",
                    self.dt,
                    self.dt * stiffness,
                    bound / stiffness
                ),
            ));
        }
        Ok(())
    }
}

/// Stateful integrator: keeps scratch buffers and a global step count so
/// guards fire every `guard_interval` steps across segments.
pub struct Propagator<'a> {
    generator: &'a Generator,
    cfg: IntegratorConfig,
    steps: usize,
    stages: Vec<DMatrix<C64>>,
    tmp: DMatrix<C64>,
}

/// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// `y ← y + Σ coef_k · stage_k` on raw slices.
fn axpy_stages(y: &mut DMatrix<C64>, base: &DMatrix<C64>, stages: &[DMatrix<C64>], coefs: &[f64]) {
    let out = y.as_mut_slice();
    out.copy_from_slice(base.as_slice());
    for (stage, &c) in stages.iter().zip(coefs) {
        if c == 0.0 {
            continue;
        }
        for (o, s) in out.iter_mut().zip(stage.as_slice()) {
            *o += s * c;
        }
    }
}

impl<'a> Propagator<'a> {
    pub fn new(generator: &'a Generator, cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate_for(generator)?;
        let d = generator.space().dim();
        let n_stages = match cfg.method {
            Method::Rk4 => 4,
            Method::Adaptive => 7,
        };
        Ok(Self {
            generator,
            cfg,
            steps: 0,
            stages: vec![DMatrix::zeros(d, d); n_stages],
            tmp: DMatrix::zeros(d, d),
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn eval(&self, y: &DMatrix<C64>, out: &mut DMatrix<C64>, s: f64) {
        let frame = if self.cfg.interaction_picture { Some(s) } else { None };
        self.generator.apply_into(y, out, frame);
    }

    fn rk4_step(&mut self, y: &mut DMatrix<C64>, s: f64, h: f64) {
        let mut stages = std::mem::take(&mut self.stages);
        let mut tmp = std::mem::replace(&mut self.tmp, DMatrix::zeros(0, 0));
        self.eval(y, &mut stages[0], s);
        axpy_stages(&mut tmp, y, &stages[0..1], &[h / 2.0]);
        self.eval(&tmp, &mut stages[1], s + h / 2.0);
        axpy_stages(&mut tmp, y, &stages[1..2], &[h / 2.0]);
        self.eval(&tmp, &mut stages[2], s + h / 2.0);
        axpy_stages(&mut tmp, y, &stages[2..3], &[h]);
        self.eval(&tmp, &mut stages[3], s + h);
        let w = [h / 6.0, h / 3.0, h / 3.0, h / 6.0];
        let base = y.clone();
        axpy_stages(y, &base, &stages, &w);
        self.stages = stages;
        self.tmp = tmp;
    }

    /// One Dormand–Prince attempt; returns the candidate and its scaled error.
    fn dp_attempt(&mut self, y: &DMatrix<C64>, s: f64, h: f64) -> (DMatrix<C64>, f64) {
        let mut stages = std::mem::take(&mut self.stages);
        let mut tmp = std::mem::replace(&mut self.tmp, DMatrix::zeros(0, 0));
        for k in 0..7 {
            let coefs: Vec<f64> = DP_A[k][..k].iter().map(|a| a * h).collect();
            axpy_stages(&mut tmp, y, &stages[..k], &coefs);
            self.eval(&tmp, &mut stages[k], s + DP_C[k] * h);
        }
        let mut high = DMatrix::zeros(y.nrows(), y.ncols());
        let w5: Vec<f64> = DP_B5.iter().map(|b| b * h).collect();
        axpy_stages(&mut high, y, &stages, &w5);
        let werr: Vec<f64> = DP_B5.iter().zip(&DP_B4).map(|(a, b)| (a - b) * h).collect();
        let mut err = 0.0f64;
        let zero = DMatrix::zeros(y.nrows(), y.ncols());
        axpy_stages(&mut tmp, &zero, &stages, &werr);
        for ((e, a), b) in tmp.as_slice().iter().zip(y.as_slice()).zip(high.as_slice()) {
            let scale = self.cfg.abs_tol + self.cfg.rel_tol * a.norm().max(b.norm());
            err = err.max(e.norm() / scale);
        }
        self.stages = stages;
        self.tmp = tmp;
        (high, err)
    }

    /// Advance `rho` by `duration`; `t_start` is only used in diagnostics.
    pub fn advance(&mut self, rho: &DensityMatrix, duration: f64, t_start: f64) -> Result<DensityMatrix> {
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(SimError::invalid("duration", format!("must be finite and >= 0, got {duration}")));
        }
        if duration == 0.0 {
            return Ok(rho.clone());
        }
        let mut y = rho.matrix().clone();
        let end_eps = 1e-12 * duration.max(1.0);
        let mut s = 0.0;
        match self.cfg.method {
            Method::Rk4 => {
                while duration - s > end_eps {
                    let h = self.cfg.dt.min(duration - s);
                    self.rk4_step(&mut y, s, h);
                    s = if duration - (s + h) <= end_eps { duration } else { s + h };
                    self.count_step(&y, t_start + s)?;
                }
            }
            Method::Adaptive => {
                let mut h = self.cfg.dt;
                let mut rejects = 0usize;
                while duration - s > end_eps {
                    let step = h.min(duration - s);
                    let (cand, err) = self.dp_attempt(&y, s, step);
                    if err <= 1.0 {
                        y = cand;
                        s = if duration - (s + step) <= end_eps { duration } else { s + step };
                        self.count_step(&y, t_start + s)?;
                        rejects = 0;
                    } else {
                        rejects += 1;
                        if rejects > 50 {
                            return Err(SimError::invalid(
                                "adaptive step",
                                format!("step size collapsed to {step:.3e} at t = {:.6}", t_start + s),
                            ));
                        }
                    }
                    let factor = if !err.is_finite() {
                        0.2
                    } else if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    h = step * factor;
                }
            }
        }
        if self.cfg.interaction_picture {
            rotate_out(&mut y, self.generator.frame_energies(), duration);
        }
        let out = DensityMatrix::new_unchecked(y, rho.space())?;
        check_guards(&out, t_start + duration, self.steps)?;
        Ok(out)
    }

    fn count_step(&mut self, y: &DMatrix<C64>, t: f64) -> Result<()> {
        self.steps += 1;
        if self.steps.is_multiple_of(self.cfg.guard_interval) {
            // guards are frame independent
            let rho = DensityMatrix::new_unchecked(y.clone(), self.generator.space())?;
            check_guards(&rho, t, self.steps)?;
        }
        Ok(())
    }
}

/// `ρ_ij ← exp(−i(E_i − E_j)t) ρ_ij`: back from the rotating frame.
fn rotate_out(y: &mut DMatrix<C64>, energies: &[f64], t: f64) {
    let d = energies.len();
    let data = y.as_mut_slice();
    for j in 0..d {
        for i in 0..d {
            let w = energies[i] - energies[j];
            if w != 0.0 {
                data[i + j * d] *= C64::from_polar(1.0, -w * t);
            }
        }
    }
}

pub fn check_guards(rho: &DensityMatrix, t: f64, step: usize) -> Result<()> {
    if rho.matrix().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SimError::Guard {
            kind: GuardKind::NonFinite,
            time: t,
            step,
            value: f64::NAN,
            limit: 0.0,
        });
    }
    let trace = rho.trace_error();
    if trace > TRACE_GUARD {
        return Err(SimError::Guard {
            kind: GuardKind::Trace,
            time: t,
            step,
            value: trace,
            limit: TRACE_GUARD,
        });
    }
    let herm = rho.hermiticity_error();
    if herm > HERMITICITY_GUARD {
        return Err(SimError::Guard {
            kind: GuardKind::Hermiticity,
            time: t,
            step,
            value: herm,
            limit: HERMITICITY_GUARD,
        });
    }
    let low = rho.min_eigenvalue();
    if low < POSITIVITY_GUARD {
        return Err(SimError::Guard {
            kind: GuardKind::Positivity,
            time: t,
            step,
            value: low,
            limit: POSITIVITY_GUARD,
        });
    }
    Ok(())
}

/// Evolves `rho` for `duration` under `generator`.
pub fn propagate(
    rho: &DensityMatrix,
    generator: &Generator,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<DensityMatrix> {
    if rho.space() != generator.space() {
        return Err(SimError::DimensionMismatch {
            expected: generator.space().dim(),
            found: rho.space().dim(),
        });
    }
    Propagator::new(generator, *cfg)?.advance(rho, duration, 0.0)
}

/// Outcome of a step-size study on one end-time observable.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `(dt, value)` from coarsest to finest.
    pub values: Vec<(f64, f64)>,
    /// Absolute change between consecutive refinements.
    pub changes: Vec<f64>,
    /// Richardson estimate from the first three refinements, if available.
    pub observed_order: Option<f64>,
    /// Coarsest dt whose value moves by less than `threshold` on refinement.
    pub converged_dt: Option<f64>,
    pub threshold: f64,
}

/// Runs `run(dt)` for each dt (in parallel) and measures convergence.
pub fn convergence_sweep<F>(dt_list: &[f64], threshold: f64, run: F) -> Result<ConvergenceReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if dt_list.len() < 2 {
        return Err(SimError::invalid("dt_list", "need at least two step sizes"));
    }
    let mut dts = dt_list.to_vec();
    if dts.iter().any(|dt| !(*dt > 0.0)) {
        return Err(SimError::invalid("dt_list", "step sizes must be > 0"));
    }
    dts.sort_by(|a, b| b.total_cmp(a));
    dts.dedup();
    if dts.len() < 2 {
        return Err(SimError::invalid("dt_list", "need at least two distinct step sizes"));
    }
    let values: Vec<(f64, f64)> = dts
        .par_iter()
        .map(|&dt| run(dt).map(|v| (dt, v)))
        .collect::<Result<_>>()?;
    let changes: Vec<f64> = values.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let observed_order = if values.len() >= 3 && changes[1] > 0.0 && changes[0] > 0.0 {
        let ratio = values[0].0 / values[1].0;
        Some((changes[0] / changes[1]).ln() / ratio.ln())
    } else {
        None
    };
    let converged_dt = changes
        .iter()
        .position(|&c| c < threshold)
        .map(|k| values[k].0);
    Ok(ConvergenceReport {
        values,
        changes,
        observed_order,
        converged_dt,
        threshold,
    })
}
