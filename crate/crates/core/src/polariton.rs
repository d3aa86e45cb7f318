//! Dressed (polariton) basis of the Jaynes–Cummings Hamiltonian
//!
//! `H_JC = b†b + (ω_z/2) σ_z + λ(σ₊b + b†σ₋)`
//!
//! conserves the excitation number, so it splits into 2×2 manifolds spanned
//! by `|n,↓⟩` and `|n−1,↑⟩` (n ≥ 1), plus the singlet ground state `|0,↓⟩`.
//! Truncation at `nmax` leaves one more singlet, `|nmax,↑⟩`, whose partner
//! `|nmax+1,↓⟩` is not retained; it is an exact eigenstate of the truncated
//! Hamiltonian and is labelled [`Branch::Edge`] in manifold `nmax + 1`.
//!
//! Polariton indices: ground = 0, `(n,+)` = 2n−1, `(n,−)` = 2n, edge = 2nmax+1.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::params::SystemParams;
use crate::space::{build_ladder, build_tls_ops, Operator, SpaceDims, Spin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Ground,
    Plus,
    Minus,
    Edge,
}

impl Branch {
    pub fn symbol(&self) -> &'static str {
        match self {
            Branch::Ground => "g",
            Branch::Plus => "+",
            Branch::Minus => "-",
            Branch::Edge => "e",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub manifold: usize,
    pub branch: Branch,
    pub energy: f64,
}

/// `(cos(δ_n/2), sin(δ_n/2))` for one doublet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixing {
    pub cos_half: f64,
    pub sin_half: f64,
}

#[derive(Debug, Clone)]
pub struct PolaritonBasis {
    space: SpaceDims,
    levels: Vec<Level>,
    /// Indexed by n; entry 0 is unused.
    mixing: Vec<Mixing>,
    /// Row p holds polariton state p in product coordinates: `ρ_pol = U ρ U†`.
    transform: DMatrix<C64>,
}

/// Product-basis `H_JC` in units of ω_m.
pub fn jc_hamiltonian(params: &SystemParams, space: SpaceDims) -> Operator {
    let mut h = DMatrix::<C64>::zeros(space.dim(), space.dim());
    for n in 0..=space.nmax() {
        let nf = n as f64;
        let (dn, up) = (space.index(n, Spin::Down), space.index(n, Spin::Up));
        h[(dn, dn)] = C64::new(nf - params.omega_z / 2.0, 0.0);
        h[(up, up)] = C64::new(nf + params.omega_z / 2.0, 0.0);
        if n >= 1 {
            let partner = space.index(n - 1, Spin::Up);
            let coupling = C64::new(params.lambda_c * nf.sqrt(), 0.0);
            h[(dn, partner)] = coupling;
            h[(partner, dn)] = coupling;
        }
    }
    Operator::new(h, space).expect("shape matches space")
}

/// Doublet splitting ω_n = √(δω² + 4λ²n).
pub fn doublet_splitting(params: &SystemParams, n: usize) -> f64 {
    let dw = params.detuning();
    (dw * dw + 4.0 * params.lambda_c * params.lambda_c * n as f64).sqrt()
}

fn mixing_for(params: &SystemParams, n: usize) -> Mixing {
    let dw = params.detuning();
    let wn = doublet_splitting(params, n);
    if wn == 0.0 {
        // λ = 0 at resonance: bare states are already eigenstates
        return Mixing {
            cos_half: 1.0,
            sin_half: 0.0,
        };
    }
    // clamp guards the ±δω = ω_n edge against rounding below zero
    Mixing {
        cos_half: ((wn + dw) / (2.0 * wn)).max(0.0).sqrt(),
        sin_half: ((wn - dw) / (2.0 * wn)).max(0.0).sqrt(),
    }
}

impl PolaritonBasis {
    pub fn build(params: &SystemParams, space: SpaceDims) -> Self {
        let d = space.dim();
        let nmax = space.nmax();
        let mut levels = Vec::with_capacity(d);
        let mut mixing = vec![
            Mixing {
                cos_half: 1.0,
                sin_half: 0.0
            };
            nmax + 1
        ];
        let mut u = DMatrix::<C64>::zeros(d, d);

        levels.push(Level {
            manifold: 0,
            branch: Branch::Ground,
            energy: -params.omega_z / 2.0,
        });
        u[(0, space.index(0, Spin::Down))] = C64::new(1.0, 0.0);

        for n in 1..=nmax {
            let nf = n as f64;
            // manifold block [[a, b], [b, c]] on (|n,↓⟩, |n−1,↑⟩)
            let a = nf - params.omega_z / 2.0;
            let c = nf - 1.0 + params.omega_z / 2.0;
            let b = params.lambda_c * nf.sqrt();
            let mean = 0.5 * (a + c);
            let half_split = (0.25 * (a - c) * (a - c) + b * b).sqrt();

            let mix = mixing_for(params, n);
            mixing[n] = mix;
            let (plus, minus) = (2 * n - 1, 2 * n);
            let (dn, up) = (space.index(n, Spin::Down), space.index(n - 1, Spin::Up));
            // |n,+⟩ = c|n↓⟩ + s|n−1↑⟩,  |n,−⟩ = s|n↓⟩ − c|n−1↑⟩
            u[(plus, dn)] = C64::new(mix.cos_half, 0.0);
            u[(plus, up)] = C64::new(mix.sin_half, 0.0);
            u[(minus, dn)] = C64::new(mix.sin_half, 0.0);
            u[(minus, up)] = C64::new(-mix.cos_half, 0.0);

            levels.push(Level {
                manifold: n,
                branch: Branch::Plus,
                energy: mean + half_split,
            });
            levels.push(Level {
                manifold: n,
                branch: Branch::Minus,
                energy: mean - half_split,
            });
        }

        let edge = d - 1;
        u[(edge, space.index(nmax, Spin::Up))] = C64::new(1.0, 0.0);
        levels.push(Level {
            manifold: nmax + 1,
            branch: Branch::Edge,
            energy: nmax as f64 + params.omega_z / 2.0,
        });

        Self {
            space,
            levels,
            mixing,
            transform: u,
        }
    }

    pub fn space(&self) -> SpaceDims {
        self.space
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn ground_energy(&self) -> f64 {
        self.levels[0].energy
    }

    /// Mixing coefficients of doublet `n` (1 ≤ n ≤ nmax).
    pub fn mixing(&self, n: usize) -> Mixing {
        assert!(n >= 1 && n <= self.space.nmax(), "doublet {n} out of range");
        self.mixing[n]
    }

    pub fn transform(&self) -> &DMatrix<C64> {
        &self.transform
    }

    /// Polariton index of `(n, branch)`.
    pub fn index_of(&self, n: usize, branch: Branch) -> Option<usize> {
        let nmax = self.space.nmax();
        match branch {
            Branch::Ground if n == 0 => Some(0),
            Branch::Plus if (1..=nmax).contains(&n) => Some(2 * n - 1),
            Branch::Minus if (1..=nmax).contains(&n) => Some(2 * n),
            Branch::Edge if n == nmax + 1 => Some(self.space.dim() - 1),
            _ => None,
        }
    }

    /// Indices of all levels in manifold `n`.
    pub fn manifold(&self, n: usize) -> Vec<usize> {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.manifold == n)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn max_manifold(&self) -> usize {
        self.space.nmax() + 1
    }

    /// Product-basis operator expressed in the polariton basis.
    pub fn to_polariton(&self, op: &Operator) -> Operator {
        op.conjugated_by(&self.transform)
    }

    /// Polariton-basis operator expressed in the product basis.
    pub fn to_product(&self, op: &Operator) -> Operator {
        op.conjugated_by(&self.transform.adjoint())
    }
}

/// Matrix elements `A = ⟨n−1,β| b |n,α⟩` and `σ = ⟨n−1,β| σ₋ |n,α⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionCoefficient {
    pub manifold: usize,
    pub upper: usize,
    pub lower: usize,
    pub alpha: Branch,
    pub beta: Branch,
    pub ladder: f64,
    pub sigma: f64,
}

/// Coefficients for every pair of levels in adjacent manifolds, computed as
/// explicit matrix elements through the basis transform.
pub fn transition_coefficients(basis: &PolaritonBasis) -> Vec<TransitionCoefficient> {
    let space = basis.space();
    let b = basis.to_polariton(&build_ladder(space));
    let sm = basis.to_polariton(&build_tls_ops(space).lower);
    let mut out = Vec::new();
    for n in 1..=basis.max_manifold() {
        let uppers = basis.manifold(n);
        let lowers = basis.manifold(n - 1);
        for &upper in &uppers {
            for &lower in &lowers {
                let a = b.matrix()[(lower, upper)];
                let s = sm.matrix()[(lower, upper)];
                debug_assert!(a.im.abs() < 1e-14 && s.im.abs() < 1e-14);
                out.push(TransitionCoefficient {
                    manifold: n,
                    upper,
                    lower,
                    alpha: basis.levels()[upper].branch,
                    beta: basis.levels()[lower].branch,
                    ladder: a.re,
                    sigma: s.re,
                });
            }
        }
    }
    out
}

/// `σ_z` in the polariton basis.
pub fn pulse_matrix(basis: &PolaritonBasis) -> Operator {
    basis.to_polariton(&build_tls_ops(basis.space()).sigma_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::max_abs;

    fn params(omega_z: f64, lambda: f64) -> SystemParams {
        SystemParams {
            omega_z,
            lambda_c: lambda,
            ..SystemParams::fig1()
        }
    }

    #[test]
    fn resonant_doublet_is_evenly_mixed() {
        let p = params(1.0, 0.05);
        let basis = PolaritonBasis::build(&p, SpaceDims::new(4).unwrap());
        assert!((doublet_splitting(&p, 1) - 0.1).abs() < 1e-15);
        let m = basis.mixing(1);
        assert!((m.cos_half - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((m.sin_half - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn fig1_first_doublet() {
        let p = SystemParams::fig1();
        let basis = PolaritonBasis::build(&p, SpaceDims::new(4).unwrap());
        let w1 = doublet_splitting(&p, 1);
        assert!((w1 - 0.02f64.sqrt()).abs() < 1e-15);
        assert!((w1 - 0.141421).abs() < 1e-6);
        let c = basis.mixing(1).cos_half;
        assert!((c - 0.92388).abs() < 1e-5, "{c}");
        let (plus, minus) = (basis.levels()[1], basis.levels()[2]);
        assert!((plus.energy - minus.energy - w1).abs() < 1e-14);
    }

    #[test]
    fn decoupled_limit_is_a_signed_permutation() {
        for omega_z in [0.9, 1.0, 1.2] {
            let basis = PolaritonBasis::build(&params(omega_z, 0.0), SpaceDims::new(5).unwrap());
            for row in basis.transform().row_iter() {
                let nz: Vec<_> = row.iter().filter(|z| z.norm() > 0.0).collect();
                assert_eq!(nz.len(), 1);
                assert!((nz[0].norm() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn transform_is_unitary_and_diagonalizes() {
        for omega_z in [0.6, 0.9, 1.0, 1.3] {
            let p = params(omega_z, 0.05);
            let space = SpaceDims::new(7).unwrap();
            let basis = PolaritonBasis::build(&p, space);
            let u = basis.transform();
            let d = space.dim();
            assert!(max_abs(&(u.adjoint() * u - DMatrix::identity(d, d))) < 1e-12);
            let h = basis.to_polariton(&jc_hamiltonian(&p, space));
            let mut resid = h.matrix().clone();
            for (i, e) in basis.energies().iter().enumerate() {
                resid[(i, i)] -= C64::new(*e, 0.0);
            }
            assert!(max_abs(&resid) < 1e-12);
            for n in 1..=space.nmax() {
                let m = basis.mixing(n);
                assert!((m.cos_half.powi(2) + m.sin_half.powi(2) - 1.0).abs() < 1e-12);
                let (plus, minus) = (basis.levels()[2 * n - 1], basis.levels()[2 * n]);
                assert!(plus.energy >= minus.energy);
                assert!((plus.energy - minus.energy - doublet_splitting(&p, n)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pulse_matrix_structure() {
        let p = params(1.0, 0.05);
        let space = SpaceDims::new(5).unwrap();
        let basis = PolaritonBasis::build(&p, space);
        let v = pulse_matrix(&basis);
        let d = space.dim();
        assert!(max_abs(&(v.matrix() * v.matrix() - DMatrix::identity(d, d))) < 1e-12);
        assert!(v.hermiticity_residual() < 1e-15);
        assert!((v.matrix()[(0, 0)].re + 1.0).abs() < 1e-15);
        for n in 1..=space.nmax() {
            let (plus, minus) = (2 * n - 1, 2 * n);
            assert!(v.matrix()[(plus, plus)].norm() < 1e-15);
            assert!(v.matrix()[(minus, minus)].norm() < 1e-15);
            assert!((v.matrix()[(plus, minus)].re + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn first_manifold_coefficients() {
        let p = params(1.0, 0.05);
        let basis = PolaritonBasis::build(&p, SpaceDims::new(4).unwrap());
        let table = transition_coefficients(&basis);
        let to_ground_from_plus = table
            .iter()
            .find(|t| t.manifold == 1 && t.alpha == Branch::Plus)
            .unwrap();
        assert_eq!(to_ground_from_plus.beta, Branch::Ground);
        assert!((to_ground_from_plus.ladder - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);

        let p = SystemParams::fig1();
        let basis = PolaritonBasis::build(&p, SpaceDims::new(4).unwrap());
        let m = basis.mixing(1);
        for t in transition_coefficients(&basis).iter().filter(|t| t.manifold == 1) {
            // σ₋ only sees the |0,↑⟩ component, which is s_α
            let s_alpha = match t.alpha {
                Branch::Plus => m.sin_half,
                Branch::Minus => -m.cos_half,
                _ => unreachable!(),
            };
            assert!((t.sigma - s_alpha).abs() < 1e-15);
        }
    }

    #[test]
    fn index_lookup() {
        let basis = PolaritonBasis::build(&SystemParams::fig1(), SpaceDims::new(3).unwrap());
        assert_eq!(basis.index_of(0, Branch::Ground), Some(0));
        assert_eq!(basis.index_of(2, Branch::Minus), Some(4));
        assert_eq!(basis.index_of(4, Branch::Edge), Some(7));
        assert_eq!(basis.index_of(4, Branch::Plus), None);
        assert_eq!(basis.manifold(4), vec![7]);
    }
}
