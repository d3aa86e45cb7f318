//! Single runs, grid sweeps and the named figure scenarios.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{Approach, InitialState, RunConfig};
use crate::dissipation::{bose_occupation, build_polariton_generator, build_simple_generator, TransitionTable};
use crate::error::{Result, SimError};
use crate::polariton::{pulse_matrix, PolaritonBasis};
use crate::propagator::{POSITIVITY_GUARD, TRACE_GUARD};
use crate::pulse::{evolve_pulsed, uniform_schedule, Observables, Sample};
use crate::space::{
    build_tls_ops, number_operator, thermal_resonator_state, thermal_tail_weight, tls_thermal_excited,
    top_level_projector, SpaceDims, TRUNCATION_LIMIT,
};

pub const PULSE_SPACING_RULE: &str = "N pulses at t_j = j*horizon/(N+1), j = 1..N";
pub const TENSOR_ORDERING: &str = "fock-major product basis, index = 2n + s (s = 0 down, s = 1 up)";

/// Pulse counts swept by the first figure.
pub const FIG1_PULSES: [usize; 5] = [0, 9, 19, 49, 99];
pub const FIG2_OMEGA_Z: [f64; 3] = [0.6, 0.8, 0.95];
pub const FIG2_PULSES: [usize; 3] = [0, 99, 199];
pub const FIG3_GAMMA_TAU: [f64; 7] = [1e-6, 3e-6, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3];
pub const FIG3_PULSES: [usize; 2] = [0, 99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Scenario {
    Fig1a,
    Fig1b,
    Fig2,
    Fig3a,
    Fig3b,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Fig1a,
        Scenario::Fig1b,
        Scenario::Fig2,
        Scenario::Fig3a,
        Scenario::Fig3b,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Fig1a => "fig1a",
            Scenario::Fig1b => "fig1b",
            Scenario::Fig2 => "fig2",
            Scenario::Fig3a => "fig3a",
            Scenario::Fig3b => "fig3b",
        }
    }

    /// Base config adjusted for this scenario, plus its grid.
    pub fn setup(&self, base: &RunConfig) -> (RunConfig, Vec<Axis>) {
        let mut cfg = base.clone();
        let pulses = |v: &[usize]| Axis::NPulses(v.to_vec());
        match self {
            Scenario::Fig1a => {
                cfg.approach = Approach::Polariton;
                (cfg, vec![pulses(&FIG1_PULSES)])
            }
            Scenario::Fig1b => {
                cfg.approach = Approach::Simple;
                (cfg, vec![pulses(&FIG1_PULSES)])
            }
            Scenario::Fig2 => (cfg, vec![Axis::OmegaZ(FIG2_OMEGA_Z.to_vec()), pulses(&FIG2_PULSES)]),
            Scenario::Fig3a | Scenario::Fig3b => {
                cfg.params.omega_z = if *self == Scenario::Fig3a { 0.95 } else { 0.6 };
                (cfg, vec![Axis::GammaTau(FIG3_GAMMA_TAU.to_vec()), pulses(&FIG3_PULSES)])
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| SimError::invalid("scenario", format!("unknown scenario `{s}`")))
    }
}

/// One swept dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    OmegaZ(Vec<f64>),
    GammaTau(Vec<f64>),
    NPulses(Vec<usize>),
    Approach(Vec<Approach>),
}

impl Axis {
    fn coords(&self) -> Vec<Coord> {
        match self {
            Axis::OmegaZ(v) => v.iter().map(|&x| Coord::OmegaZ(x)).collect(),
            Axis::GammaTau(v) => v.iter().map(|&x| Coord::GammaTau(x)).collect(),
            Axis::NPulses(v) => v.iter().map(|&x| Coord::NPulses(x)).collect(),
            Axis::Approach(v) => v.iter().map(|&x| Coord::Approach(x)).collect(),
        }
    }
}

/// One grid coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coord {
    OmegaZ(f64),
    GammaTau(f64),
    NPulses(usize),
    Approach(Approach),
}

impl Coord {
    pub fn key(&self) -> &'static str {
        match self {
            Coord::OmegaZ(_) => "omega_z",
            Coord::GammaTau(_) => "gamma_tau",
            Coord::NPulses(_) => "n_pulses",
            Coord::Approach(_) => "approach",
        }
    }

    pub fn value(&self) -> String {
        match self {
            Coord::OmegaZ(x) | Coord::GammaTau(x) => x.to_string(),
            Coord::NPulses(n) => n.to_string(),
            Coord::Approach(a) => a.name().to_string(),
        }
    }

    fn apply(&self, cfg: &mut RunConfig) {
        match *self {
            Coord::OmegaZ(x) => cfg.params.omega_z = x,
            Coord::GammaTau(x) => cfg.params.gamma_tau = x,
            Coord::NPulses(n) => cfg.n_pulses = n,
            Coord::Approach(a) => cfg.approach = a,
        }
    }

    fn compare(&self, other: &Coord) -> Ordering {
        match (self, other) {
            (Coord::OmegaZ(a), Coord::OmegaZ(b)) | (Coord::GammaTau(a), Coord::GammaTau(b)) => a.total_cmp(b),
            (Coord::NPulses(a), Coord::NPulses(b)) => a.cmp(b),
            (Coord::Approach(a), Coord::Approach(b)) => a.cmp(b),
            _ => self.key().cmp(other.key()),
        }
    }
}

/// File-name friendly `key-value_key-value` label.
pub fn point_label(coords: &[Coord]) -> String {
    if coords.is_empty() {
        return "single".to_string();
    }
    coords
        .iter()
        .map(|c| format!("{}-{}", c.key(), c.value()))
        .collect::<Vec<_>>()
        .join("_")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quality {
    /// Thermal weight beyond nmax in the untruncated initial state.
    pub initial_tail: f64,
    /// Largest population of the top Fock level seen during the run.
    pub max_top_level: f64,
    pub max_trace_err: f64,
    pub min_eig: f64,
}

impl Quality {
    pub fn truncation_ok(&self) -> bool {
        self.initial_tail < TRUNCATION_LIMIT && self.max_top_level < TRUNCATION_LIMIT
    }

    pub fn guards_ok(&self) -> bool {
        self.max_trace_err < TRACE_GUARD && self.min_eig > POSITIVITY_GUARD
    }

    pub fn passed(&self) -> bool {
        self.truncation_ok() && self.guards_ok()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub label: String,
    pub coords: Vec<Coord>,
    pub config: RunConfig,
    pub samples: Vec<Sample>,
    pub quality: Quality,
    pub steps: usize,
}

impl Trajectory {
    pub fn end(&self) -> &Sample {
        self.samples.last().expect("sampling grid always contains t = 0")
    }

    /// Conventions and config echo written above every data block.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let cfg = &self.config;
        let mut out: Vec<(String, String)> = vec![
            ("code_version".into(), env!("CARGO_PKG_VERSION").into()),
            ("label".into(), self.label.clone()),
            ("pulse_spacing".into(), PULSE_SPACING_RULE.into()),
            (
                "delta_b_choice".into(),
                match cfg.params.delta_b {
                    None => "delta_b = delta_l".into(),
                    Some(d) => format!("delta_b = {d} (explicit)"),
                },
            ),
            ("initial_state".into(), initial_state_description(cfg.initial_state)),
            ("tensor_ordering".into(), TENSOR_ORDERING.into()),
            ("frequency_convention".into(), cfg.temperature.describe()),
            (
                "pulse_basis".into(),
                match cfg.approach {
                    Approach::Polariton => "U sigma_z U^dagger in the polariton basis".into(),
                    Approach::Simple => "sigma_z in the product basis".into(),
                },
            ),
            ("readout".into(), "expectations in the lab frame at each sampling time".into()),
        ];
        out.extend(cfg.echo().into_iter().map(|(k, v)| (format!("config.{k}"), v)));
        let q = &self.quality;
        out.extend([
            ("quality.initial_tail".into(), format!("{:e}", q.initial_tail)),
            ("quality.max_top_level".into(), format!("{:e}", q.max_top_level)),
            ("quality.max_trace_err".into(), format!("{:e}", q.max_trace_err)),
            ("quality.min_eig".into(), format!("{:e}", q.min_eig)),
            ("quality.truncation_ok".into(), q.truncation_ok().to_string()),
            ("quality.guards_ok".into(), q.guards_ok().to_string()),
            ("integrator.steps".into(), self.steps.to_string()),
        ]);
        out
    }
}

fn initial_state_description(s: InitialState) -> String {
    match s {
        InitialState::ThermalThermal => "resonator thermal at theta (x) TLS thermal at theta".into(),
        InitialState::ThermalGround => "resonator thermal at theta (x) TLS ground".into(),
    }
}

/// `0, Δ, 2Δ, …` with the horizon always included.
pub fn sampling_grid(horizon: f64, every: f64) -> Vec<f64> {
    let count = (horizon / every + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| k as f64 * every).collect();
    if let Some(last) = grid.last_mut() {
        if (*last - horizon).abs() <= 1e-9 {
            *last = horizon;
        } else if *last < horizon {
            grid.push(horizon);
        }
    }
    grid
}

/// Initial resonator occupation and truncation tail for `cfg`.
pub fn initial_occupation(cfg: &RunConfig) -> Result<(f64, f64)> {
    let n_th = bose_occupation(1.0, cfg.params.theta)?;
    Ok((n_th, thermal_tail_weight(cfg.nmax, n_th)))
}

pub fn run_single(cfg: &RunConfig, coords: Vec<Coord>) -> Result<Trajectory> {
    cfg.validate()?;
    let label = point_label(&coords);
    let space = SpaceDims::new(cfg.nmax)?;
    let p = &cfg.params;
    let (n_th, _) = initial_occupation(cfg)?;
    let tls_excited = match cfg.initial_state {
        InitialState::ThermalThermal => tls_thermal_excited(bose_occupation(p.omega_z, p.theta)?),
        InitialState::ThermalGround => 0.0,
    };
    let (rho_product, initial_tail) = thermal_resonator_state(space, n_th, tls_excited)?;
    let tls = build_tls_ops(space);
    let product_obs = Observables {
        phonons: number_operator(space),
        tls_excited: tls.raise.mul(&tls.lower),
        top_level: top_level_projector(space),
    };
    let schedule = uniform_schedule(cfg.n_pulses, cfg.horizon)?;
    let grid = sampling_grid(cfg.horizon, cfg.sample_every);
    let evolution = match cfg.approach {
        Approach::Polariton => {
            let basis = PolaritonBasis::build(p, space);
            let table = TransitionTable::build(&basis, p)?;
            let generator = build_polariton_generator(&basis, &table, p)?;
            let obs = Observables {
                phonons: basis.to_polariton(&product_obs.phonons),
                tls_excited: basis.to_polariton(&product_obs.tls_excited),
                top_level: basis.to_polariton(&product_obs.top_level),
            };
            let rho = rho_product.transformed(basis.transform());
            evolve_pulsed(&rho, &generator, &pulse_matrix(&basis), &schedule, &grid, &cfg.integrator, &obs)
        }
        Approach::Simple => {
            let generator = build_simple_generator(p, space)?;
            evolve_pulsed(
                &rho_product,
                &generator,
                &tls.sigma_z,
                &schedule,
                &grid,
                &cfg.integrator,
                &product_obs,
            )
        }
    }
    .map_err(|e| e.context(format!("run {label} ({} approach)", cfg.approach.name())))?;
    let quality = Quality {
        initial_tail,
        max_top_level: evolution.max_top_level,
        max_trace_err: evolution.samples.iter().map(|s| s.trace_err).fold(0.0, f64::max),
        min_eig: evolution.samples.iter().map(|s| s.min_eig).fold(f64::INFINITY, f64::min),
    };
    Ok(Trajectory {
        label,
        coords,
        config: cfg.clone(),
        samples: evolution.samples,
        quality,
        steps: evolution.steps,
    })
}

#[derive(Debug)]
pub struct SweepRow {
    pub coords: Vec<Coord>,
    pub outcome: Result<Trajectory>,
}

impl SweepRow {
    pub fn label(&self) -> String {
        point_label(&self.coords)
    }

    pub fn passed(&self) -> bool {
        matches!(&self.outcome, Ok(t) if t.quality.passed())
    }
}

fn compare_points(a: &[Coord], b: &[Coord]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.compare(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Cartesian product of `axes`, deduplicated and sorted.
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<Coord>> {
    let mut points: Vec<Vec<Coord>> = vec![vec![]];
    for axis in axes {
        let coords = axis.coords();
        points = points
            .iter()
            .flat_map(|p| {
                coords.iter().map(move |c| {
                    let mut q = p.clone();
                    q.push(*c);
                    q
                })
            })
            .collect();
    }
    points.sort_by(|a, b| compare_points(a, b));
    let before = points.len();
    points.dedup_by(|a, b| compare_points(a, b).is_eq());
    if points.len() < before {
        log::warn!("dropped {} duplicate grid point(s)", before - points.len());
    }
    points
}

/// Runs every grid point in parallel. Failures stay in their row.
pub fn sweep(axes: &[Axis], base: &RunConfig) -> Result<Vec<SweepRow>> {
    if axes.iter().any(|a| a.coords().is_empty()) {
        return Err(SimError::invalid("grid", "every axis needs at least one value"));
    }
    let points = grid_points(axes);
    let rows: Vec<SweepRow> = points
        .into_par_iter()
        .map(|coords| {
            let mut cfg = base.clone();
            for c in &coords {
                c.apply(&mut cfg);
            }
            let outcome = run_single(&cfg, coords.clone());
            if let Err(e) = &outcome {
                log::error!("{}: {e}", point_label(&coords));
            }
            SweepRow { coords, outcome }
        })
        .collect();
    Ok(rows)
}

/// CLI-level adjustments applied on top of a scenario's base config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub n_pulses: Option<usize>,
    pub nmax: Option<usize>,
    pub approach: Option<Approach>,
    pub angular_convention: Option<bool>,
}

impl Overrides {
    pub fn apply_to(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(n) = self.nmax {
            cfg.nmax = n;
        }
        if let Some(n) = self.n_pulses {
            cfg.n_pulses = n;
        }
        if let Some(a) = self.approach {
            cfg.approach = a;
        }
        if let Some(on) = self.angular_convention {
            cfg.set_angular_convention(on)?;
        }
        cfg.validate()
    }
}

pub fn run_scenario(scenario: Scenario, base: &RunConfig, overrides: &Overrides) -> Result<Vec<SweepRow>> {
    let (mut cfg, mut axes) = scenario.setup(base);
    overrides.apply_to(&mut cfg)?;
    if let Some(n) = overrides.n_pulses {
        for axis in &mut axes {
            if let Axis::NPulses(v) = axis {
                *v = vec![n];
            }
        }
    }
    sweep(&axes, &cfg).map_err(|e| e.context(format!("scenario {scenario}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut cfg = RunConfig::fig1();
        cfg.nmax = 6;
        cfg.params.theta = 2.0;
        cfg.horizon = 4.0;
        cfg.sample_every = 1.0;
        cfg
    }

    #[test]
    fn sampling_grid_hits_horizon() {
        assert_eq!(sampling_grid(3.0, 1.0), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(sampling_grid(2.5, 1.0), vec![0.0, 1.0, 2.0, 2.5]);
        let g = sampling_grid(200.0, 0.1);
        assert_eq!(g.len(), 2001);
        assert_eq!(*g.last().unwrap(), 200.0);
    }

    #[test]
    fn scenario_names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        assert!("fig4".parse::<Scenario>().is_err());
    }

    #[test]
    fn grids_have_expected_shape() {
        let base = RunConfig::fig1();
        let sizes: Vec<usize> = Scenario::ALL
            .iter()
            .map(|sc| grid_points(&sc.setup(&base).1).len())
            .collect();
        assert_eq!(sizes, vec![5, 5, 9, 14, 14]);
        assert_eq!(Scenario::Fig3b.setup(&base).0.params.omega_z, 0.6);
        assert_eq!(Scenario::Fig1b.setup(&base).0.approach, Approach::Simple);
    }

    #[test]
    fn duplicates_removed_and_sorted() {
        let pts = grid_points(&[Axis::NPulses(vec![9, 0, 9]), Axis::OmegaZ(vec![0.8, 0.6])]);
        let labels: Vec<String> = pts.iter().map(|p| point_label(p)).collect();
        assert_eq!(
            labels,
            [
                "n_pulses-0_omega_z-0.6",
                "n_pulses-0_omega_z-0.8",
                "n_pulses-9_omega_z-0.6",
                "n_pulses-9_omega_z-0.8"
            ]
        );
    }

    #[test]
    fn one_point_sweep_equals_single_run() {
        let cfg = small();
        let rows = sweep(&[Axis::NPulses(vec![3])], &cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let mut direct_cfg = cfg.clone();
        direct_cfg.n_pulses = 3;
        let direct = run_single(&direct_cfg, vec![Coord::NPulses(3)]).unwrap();
        let swept = rows[0].outcome.as_ref().unwrap();
        assert_eq!(swept.samples, direct.samples);
    }

    #[test]
    fn failing_point_is_recorded_not_fatal() {
        let mut cfg = small();
        cfg.integrator.dt = 5.0;
        cfg.integrator.interaction_picture = false;
        let rows = sweep(&[Axis::Approach(vec![Approach::Polariton, Approach::Simple])], &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.outcome.is_err()));
        let msg = rows[0].outcome.as_ref().unwrap_err().to_string();
        assert!(msg.contains("approach-polariton"), "{msg}");
    }

    #[test]
    fn approaches_share_initial_state() {
        let cfg = small();
        let a = run_single(&cfg, vec![]).unwrap();
        let mut simple = cfg.clone();
        simple.approach = Approach::Simple;
        let b = run_single(&simple, vec![]).unwrap();
        assert!((a.samples[0].n_osc - b.samples[0].n_osc).abs() < 1e-12);
        assert!((a.samples[0].tls_excited - b.samples[0].tls_excited).abs() < 1e-12);
    }

    #[test]
    fn quality_flags() {
        let mut q = Quality {
            initial_tail: 1e-6,
            max_top_level: 1e-6,
            max_trace_err: 1e-12,
            min_eig: -1e-9,
        };
        assert!(q.passed());
        q.initial_tail = 1e-3;
        assert!(!q.truncation_ok() && q.guards_ok() && !q.passed());
    }

    #[test]
    fn overrides_replace_pulse_axis() {
        let mut cfg = small();
        cfg.horizon = 2.0;
        let o = Overrides {
            n_pulses: Some(4),
            ..Default::default()
        };
        let rows = run_scenario(Scenario::Fig1b, &cfg, &o).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].coords, vec![Coord::NPulses(4)]);
        assert_eq!(rows[0].outcome.as_ref().unwrap().config.approach, Approach::Simple);
    }
}
