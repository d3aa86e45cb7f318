//! Oracle comparisons shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use dd_cooling::config::Approach;
use dd_cooling::dissipation::{build_polariton_generator, build_simple_generator, Generator, TransitionTable};
use dd_cooling::oracle::{build_superoperator, dense_diagonalize_jc, expm_evolve};
use dd_cooling::polariton::{doublet_splitting, pulse_matrix, transition_coefficients, Branch, PolaritonBasis};
use dd_cooling::propagator::{propagate, IntegratorConfig};
use dd_cooling::pulse::{evolve_pulsed, uniform_schedule, Observables};
use dd_cooling::space::{
    build_ladder, build_tls_ops, max_abs, number_operator, thermal_resonator_state, top_level_projector,
    DensityMatrix, Operator, SpaceDims,
};
use dd_cooling::SystemParams;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_density(rng: &mut ChaCha8Rng, space: SpaceDims) -> DensityMatrix {
    let d = space.dim();
    let g = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr, space).expect("G G† / tr is a density matrix")
}

/// Generator and the matching pulse for one approach.
pub fn generator(params: &SystemParams, nmax: usize, approach: Approach) -> (Generator, Operator, Option<PolaritonBasis>) {
    let space = SpaceDims::new(nmax).unwrap();
    match approach {
        Approach::Polariton => {
            let basis = PolaritonBasis::build(params, space);
            let table = TransitionTable::build(&basis, params).unwrap();
            let g = build_polariton_generator(&basis, &table, params).unwrap();
            let v = pulse_matrix(&basis);
            (g, v, Some(basis))
        }
        Approach::Simple => (
            build_simple_generator(params, space).unwrap(),
            build_tls_ops(space).sigma_z,
            None,
        ),
    }
}

/// Largest deviation between the sparse generator and its dense
/// superoperator over `samples` random Hermitian inputs.
pub fn generator_vs_superoperator(params: &SystemParams, nmax: usize, approach: Approach, samples: usize, seed: u64) -> f64 {
    let (g, _, _) = generator(params, nmax, approach);
    let s = build_superoperator(&g).unwrap();
    let mut r = rng(seed);
    (0..samples)
        .map(|_| {
            let x = random_hermitian(&mut r, g.space().dim());
            max_abs(&(g.apply(&x) - s.apply(&x)))
        })
        .fold(0.0, f64::max)
}

/// Max-abs difference between the time stepper and the dense exponential.
pub fn stepper_vs_expm(
    params: &SystemParams,
    nmax: usize,
    approach: Approach,
    duration: f64,
    cfg: &IntegratorConfig,
    seed: u64,
) -> f64 {
    let (g, _, _) = generator(params, nmax, approach);
    let s = build_superoperator(&g).unwrap();
    let rho = random_density(&mut rng(seed), g.space());
    let stepped = propagate(&rho, &g, duration, cfg).unwrap();
    let exact = expm_evolve(&s, rho.matrix(), duration).unwrap();
    max_abs(&(stepped.matrix() - exact))
}

/// Deviation of the closed-form polariton construction from a dense
/// diagonalization: energies, eigenvector overlaps, ladder and σ₋ matrix
/// elements, and the pulse matrix.
pub fn closed_forms_vs_dense(params: &SystemParams, nmax: usize) -> f64 {
    let space = SpaceDims::new(nmax).unwrap();
    let basis = PolaritonBasis::build(params, space);
    let spec = dense_diagonalize_jc(params, space);
    let d = space.dim();
    let u = basis.transform();

    // pair every closed-form level with the dense eigenvector it overlaps most
    let mut v = DMatrix::<f64>::zeros(d, d);
    let mut worst: f64 = 0.0;
    let mut used = vec![false; d];
    for (k, level) in basis.levels().iter().enumerate() {
        let (best, overlap) = (0..d)
            .filter(|&j| !used[j])
            .map(|j| {
                let o: f64 = (0..d).map(|i| u[(k, i)].re * spec.eigenvectors[(i, j)]).sum();
                (j, o)
            })
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        used[best] = true;
        worst = worst.max(1.0 - overlap.abs());
        worst = worst.max((spec.eigenvalues[best] - level.energy).abs());
        let sign = overlap.signum();
        for i in 0..d {
            v[(i, k)] = sign * spec.eigenvectors[(i, best)];
        }
        if level.branch == Branch::Plus || level.branch == Branch::Minus {
            let n = level.manifold;
            let partner = basis.index_of(n, if level.branch == Branch::Plus { Branch::Minus } else { Branch::Plus });
            let split = (level.energy - basis.levels()[partner.unwrap()].energy).abs();
            worst = worst.max((split - doublet_splitting(params, n)).abs());
        }
    }
    let vc = v.map(|x| C64::new(x, 0.0));
    let dense = |op: &Operator| vc.adjoint() * op.matrix() * &vc;
    let b = dense(&build_ladder(space));
    let sm = dense(&build_tls_ops(space).lower);
    for t in transition_coefficients(&basis) {
        worst = worst.max((b[(t.lower, t.upper)].re - t.ladder).abs());
        worst = worst.max((sm[(t.lower, t.upper)].re - t.sigma).abs());
    }
    let sz = dense(&build_tls_ops(space).sigma_z);
    worst.max(max_abs(&(sz - pulse_matrix(&basis).matrix())))
}

/// `V² = I`, `V = V†`, `V σ₋ V = −σ₋`, `V b V = b` in the polariton basis.
pub fn conjugation_residual(params: &SystemParams, nmax: usize) -> f64 {
    let space = SpaceDims::new(nmax).unwrap();
    let basis = PolaritonBasis::build(params, space);
    let v = pulse_matrix(&basis);
    let vm = v.matrix();
    let sm = basis.to_polariton(&build_tls_ops(space).lower);
    let b = basis.to_polariton(&build_ladder(space));
    let id = DMatrix::<C64>::identity(space.dim(), space.dim());
    [
        max_abs(&(vm * vm - &id)),
        max_abs(&(vm - vm.adjoint())),
        max_abs(&(vm * sm.matrix() * vm + sm.matrix())),
        max_abs(&(vm * b.matrix() * vm - b.matrix())),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// With the optomechanical coupling off, the polariton generator relaxes to
/// the Gibbs state of the dressed levels. Returns the max-abs deviation of
/// the superoperator steady state from it.
pub fn detailed_balance_residual(params: &SystemParams, nmax: usize) -> f64 {
    let p = SystemParams { g_c: 0.0, ..*params };
    let (g, _, basis) = generator(&p, nmax, Approach::Polariton);
    let basis = basis.unwrap();
    let rho = build_superoperator(&g).unwrap().steady_state().unwrap();
    let e0 = basis.ground_energy();
    let w: Vec<f64> = basis.energies().iter().map(|e| (-p.theta * (e - e0)).exp()).collect();
    let z: f64 = w.iter().sum();
    let gibbs = DMatrix::from_fn(w.len(), w.len(), |i, j| C64::new(if i == j { w[i] / z } else { 0.0 }, 0.0));
    max_abs(&(rho - gibbs))
}

/// Max-abs difference of ⟨b†b⟩(t) between runs with and without TLS damping
/// under the same pulse schedule, for each pulse count.
pub fn decoupling_distances(approach: Approach, pulses: &[usize], horizon: f64) -> Vec<f64> {
    let base = SystemParams {
        g_c: 0.0,
        gamma_m: 0.0,
        gamma_tau: 0.05,
        theta: 1.0,
        ..SystemParams::fig1()
    };
    let nmax = 8;
    let grid: Vec<f64> = (0..=(horizon as usize * 4)).map(|k| k as f64 * 0.25).collect();
    let cfg = IntegratorConfig {
        dt: 0.01,
        ..Default::default()
    };
    let trace = |params: &SystemParams, n: usize| -> Vec<f64> {
        let (g, v, basis) = generator(params, nmax, approach);
        let space = g.space();
        let (rho, _) = thermal_resonator_state(space, 0.2, 0.0).unwrap();
        let tls = build_tls_ops(space);
        let mut obs = Observables {
            phonons: number_operator(space),
            tls_excited: tls.raise.mul(&tls.lower),
            top_level: top_level_projector(space),
        };
        let rho = match &basis {
            Some(b) => {
                obs = Observables {
                    phonons: b.to_polariton(&obs.phonons),
                    tls_excited: b.to_polariton(&obs.tls_excited),
                    top_level: b.to_polariton(&obs.top_level),
                };
                rho.transformed(b.transform())
            }
            None => rho,
        };
        let schedule = uniform_schedule(n, horizon).unwrap();
        evolve_pulsed(&rho, &g, &v, &schedule, &grid, &cfg, &obs)
            .unwrap()
            .samples
            .iter()
            .map(|s| s.n_osc)
            .collect()
    };
    let lossless = SystemParams { gamma_tau: 0.0, ..base };
    pulses
        .iter()
        .map(|&n| {
            let a = trace(&base, n);
            let b = trace(&lossless, n);
            a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        })
        .collect()
}
