//! Free Lindblad evolution interleaved with instantaneous `σ_z` pulses.

use crate::dissipation::{Generator, SparseOp};
use crate::error::{Result, SimError};
use crate::propagator::{IntegratorConfig, Propagator};
use crate::space::{trace_of_product, DensityMatrix, Operator};

/// Times closer than this are treated as the same event.
const COINCIDENT: f64 = 1e-9;

/// Largest `V†V − I` residual accepted for a pulse.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    horizon: f64,
    times: Vec<f64>,
}

impl PulseSchedule {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(SimError::invalid("horizon", format!("must be finite and > 0, got {horizon}")));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(SimError::invalid("pulse_times", "must be strictly increasing"));
            }
        }
        if let (Some(&first), Some(&last)) = (times.first(), times.last()) {
            if !(first > 0.0) || !(last < horizon) {
                return Err(SimError::invalid("pulse_times", "must lie strictly inside (0, horizon)"));
            }
        }
        Ok(Self { horizon, times })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `n` pulses at `t_j = j·horizon/(n+1)`, j = 1..n.
pub fn uniform_schedule(n_pulses: usize, horizon: f64) -> Result<PulseSchedule> {
    let spacing = horizon / (n_pulses as f64 + 1.0);
    let times = (1..=n_pulses).map(|j| j as f64 * spacing).collect();
    PulseSchedule::new(times, horizon)
}

fn check_pulse(v: &Operator) -> Result<()> {
    let resid = v.unitarity_residual();
    if resid > UNITARITY_TOL {
        return Err(SimError::NotUnitary(resid));
    }
    Ok(())
}

/// `ρ ↦ V ρ V†`.
pub fn apply_pulse(rho: &DensityMatrix, v: &Operator) -> Result<DensityMatrix> {
    if rho.space() != v.space() {
        return Err(SimError::DimensionMismatch {
            expected: rho.space().dim(),
            found: v.space().dim(),
        });
    }
    check_pulse(v)?;
    let m = SparseOp::from_dense(v.matrix()).conjugate(rho.matrix());
    DensityMatrix::new_unchecked(m, rho.space())
}

/// Operators recorded at each sample, expressed in the generator's basis.
#[derive(Debug, Clone)]
pub struct Observables {
    pub phonons: Operator,
    pub tls_excited: Operator,
    /// Projector on the highest retained Fock level.
    pub top_level: Operator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub n_osc: f64,
    pub tls_excited: f64,
    pub trace_err: f64,
    pub min_eig: f64,
    pub purity: f64,
    pub top_level: f64,
}

impl Sample {
    pub fn measure(t: f64, rho: &DensityMatrix, obs: &Observables) -> Self {
        let m = rho.matrix();
        Self {
            t,
            n_osc: trace_of_product(obs.phonons.matrix(), m).re,
            tls_excited: trace_of_product(obs.tls_excited.matrix(), m).re,
            trace_err: rho.trace_error(),
            min_eig: rho.min_eigenvalue(),
            purity: rho.purity(),
            top_level: trace_of_product(obs.top_level.matrix(), m).re,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub samples: Vec<Sample>,
    pub final_state: DensityMatrix,
    pub max_top_level: f64,
    pub steps: usize,
}

/// Evolves `rho0` over `[0, schedule.horizon]`, conjugating by `pulse` at
/// every scheduled instant and recording `observables` on `sampling`.
/// A sample that coincides with a pulse sees the post-pulse state.
pub fn evolve_pulsed(
    rho0: &DensityMatrix,
    generator: &Generator,
    pulse: &Operator,
    schedule: &PulseSchedule,
    sampling: &[f64],
    cfg: &IntegratorConfig,
    observables: &Observables,
) -> Result<Evolution> {
    let space = generator.space();
    if rho0.space() != space || pulse.space() != space {
        return Err(SimError::DimensionMismatch {
            expected: space.dim(),
            found: rho0.space().dim(),
        });
    }
    let horizon = schedule.horizon();
    for w in sampling.windows(2) {
        if !(w[1] > w[0]) {
            return Err(SimError::invalid("sampling", "times must be strictly increasing"));
        }
    }
    if sampling.iter().any(|&t| t < 0.0 || t > horizon + COINCIDENT) {
        return Err(SimError::invalid("sampling", "times must lie in [0, horizon]"));
    }
    check_pulse(pulse)?;
    let v = SparseOp::from_dense(pulse.matrix());

    #[derive(Clone, Copy)]
    struct Event {
        t: f64,
        pulse: bool,
        sample: bool,
    }
    let mut events: Vec<Event> = Vec::with_capacity(schedule.len() + sampling.len());
    let (mut ip, mut is) = (0, 0);
    let pulses = schedule.times();
    while ip < pulses.len() || is < sampling.len() {
        let tp = pulses.get(ip).copied().unwrap_or(f64::INFINITY);
        let ts = sampling.get(is).copied().unwrap_or(f64::INFINITY);
        if (tp - ts).abs() <= COINCIDENT {
            events.push(Event { t: tp, pulse: true, sample: true });
            ip += 1;
            is += 1;
        } else if tp < ts {
            events.push(Event { t: tp, pulse: true, sample: false });
            ip += 1;
        } else {
            events.push(Event { t: ts, pulse: false, sample: true });
            is += 1;
        }
    }

    let mut propagator = Propagator::new(generator, *cfg)?;
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut samples = Vec::with_capacity(sampling.len());
    let mut max_top = Sample::measure(0.0, &rho, observables).top_level;
    for ev in events {
        if ev.t > t {
            rho = propagator.advance(&rho, ev.t - t, t)?;
            t = ev.t;
        }
        if ev.pulse {
            rho = DensityMatrix::new_unchecked(v.conjugate(rho.matrix()), space)?;
        }
        if ev.sample {
            let s = Sample::measure(ev.t, &rho, observables);
            max_top = max_top.max(s.top_level);
            samples.push(s);
        }
    }
    if horizon - t > COINCIDENT {
        rho = propagator.advance(&rho, horizon - t, t)?;
    }
    max_top = max_top.max(Sample::measure(horizon, &rho, observables).top_level);
    Ok(Evolution {
        samples,
        final_state: rho,
        max_top_level: max_top,
        steps: propagator.steps(),
    })
}
