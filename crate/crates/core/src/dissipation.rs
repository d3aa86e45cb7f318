//! Lindblad generators.
//!
//! A [`Generator`] stores `H` and jump operators `O_k` with rates `r_k` and
//! realizes
//!
//! `dρ/dt = −i[H, ρ] + Σ_k (r_k/2) 𝓛(O_k)ρ`,  `𝓛(o)ρ = 2oρo† − ρo†o − o†oρ`.
//!
//! Internally this is rewritten as `−i(H_eff ρ − ρ H_eff†) + Σ r_k O_k ρ O_k†`
//! with `H_eff = H − (i/2) Σ r_k O_k†O_k`, split into its diagonal and a
//! sparse off-diagonal remainder. The real diagonal of `H` defines the
//! rotating frame used by the propagator.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};
use crate::params::SystemParams;
use crate::polariton::{jc_hamiltonian, transition_coefficients, Branch, PolaritonBasis};
use crate::space::{build_ladder, build_tls_ops, Operator, SpaceDims, ZERO};

/// Transitions closer to degeneracy than this carry no thermal dissipator.
pub const DEGENERATE_OMEGA: f64 = 1e-9;

/// Bose–Einstein occupation `1/(exp(ω·θ) − 1)`.
pub fn bose_occupation(omega: f64, theta: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(SimError::invalid("omega", format!("must be > 0, got {omega}")));
    }
    if !(theta > 0.0) {
        return Err(SimError::invalid("theta", format!("must be > 0, got {theta}")));
    }
    Ok(1.0 / (omega * theta).exp_m1())
}

/// Cavity-induced rates `(Γ₋, Γ₊)` at transition frequency `omega`:
/// `Γ∓ = g²κ / (κ²/4 + (ω ± Δ_b)²)`.
pub fn cavity_rates(omega: f64, params: &SystemParams) -> (f64, f64) {
    let num = params.g_c * params.g_c * params.kappa;
    let width = params.kappa * params.kappa / 4.0;
    let db = params.delta_b();
    let lorentz = |x: f64| {
        let den = width + x * x;
        if num == 0.0 {
            0.0
        } else {
            num / den
        }
    };
    (lorentz(omega + db), lorentz(omega - db))
}

/// One jump `O_n^{αβ} = |n−1,β⟩⟨n,α|` with everything that sets its rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub manifold: usize,
    pub alpha: Branch,
    pub beta: Branch,
    pub upper: usize,
    pub lower: usize,
    /// ω_{nαβ} = ω_{n,α} − ω_{n−1,β}.
    pub omega: f64,
    pub ladder: f64,
    pub sigma: f64,
    /// Bose factor at |ω|; `None` for degenerate transitions.
    pub n_th: Option<f64>,
    pub gamma0: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
}

impl Transition {
    /// Total rate multiplying `(1/2)𝓛(O)`.
    pub fn lowering_rate(&self) -> f64 {
        let cavity = self.ladder * self.ladder * self.gamma_minus;
        match self.n_th {
            None => cavity,
            Some(n) if self.omega > 0.0 => cavity + self.gamma0 * (n + 1.0),
            // negative-frequency jump: O raises the energy, so it carries absorption
            Some(n) => cavity + self.gamma0 * n,
        }
    }

    /// Total rate multiplying `(1/2)𝓛(O†)`.
    pub fn raising_rate(&self) -> f64 {
        let cavity = self.ladder * self.ladder * self.gamma_plus;
        match self.n_th {
            None => cavity,
            Some(n) if self.omega > 0.0 => cavity + self.gamma0 * n,
            Some(n) => cavity + self.gamma0 * (n + 1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransitionTable {
    params: SystemParams,
    energies: Vec<f64>,
    entries: Vec<Transition>,
}

impl TransitionTable {
    pub fn build(basis: &PolaritonBasis, params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let energies = basis.energies();
        let mut entries = Vec::new();
        for c in transition_coefficients(basis) {
            let omega = energies[c.upper] - energies[c.lower];
            let n_th = if omega.abs() < DEGENERATE_OMEGA {
                None
            } else {
                Some(bose_occupation(omega.abs(), params.theta)?)
            };
            let gamma0 = c.ladder * c.ladder * params.gamma_m + c.sigma * c.sigma * params.gamma_tau;
            let (gamma_minus, gamma_plus) = cavity_rates(omega, params);
            entries.push(Transition {
                manifold: c.manifold,
                alpha: c.alpha,
                beta: c.beta,
                upper: c.upper,
                lower: c.lower,
                omega,
                ladder: c.ladder,
                sigma: c.sigma,
                n_th,
                gamma0,
                gamma_minus,
                gamma_plus,
            });
        }
        Ok(Self {
            params: *params,
            energies,
            entries,
        })
    }

    pub fn entries(&self) -> &[Transition] {
        &self.entries
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }
}

/// Sparse operator as `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != ZERO {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self {
            dim: m.nrows(),
            entries,
        }
    }

    /// `|row⟩⟨col|`.
    pub fn transition(dim: usize, row: usize, col: usize) -> Self {
        Self {
            dim,
            entries: vec![(row, col, C64::new(1.0, 0.0))],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect();
        entries.sort_by_key(|&(i, j, _)| (j, i));
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// `A ρ A†`.
    pub fn conjugate(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.dim;
        let mut tmp = DMatrix::<C64>::zeros(d, d);
        for &(a, b, v) in &self.entries {
            for j in 0..d {
                tmp[(a, j)] += v * rho[(b, j)];
            }
        }
        // (tmp A†)[:, j] = Σ_l tmp[:, l] conj(A[j, l])
        let mut out = DMatrix::<C64>::zeros(d, d);
        for &(j, l, v) in &self.entries {
            let w = v.conj();
            for i in 0..d {
                out[(i, j)] += tmp[(i, l)] * w;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisTag {
    Polariton,
    Product,
}

impl BasisTag {
    pub fn name(&self) -> &'static str {
        match self {
            BasisTag::Polariton => "polariton",
            BasisTag::Product => "product",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dissipator {
    pub jump: SparseOp,
    pub rate: f64,
    pub label: String,
}

/// One jump entry flattened for the hot loop.
#[derive(Debug, Clone, Copy)]
struct JumpEntry {
    row: usize,
    col: usize,
    value: C64,
    bohr: f64,
}

#[derive(Debug, Clone)]
struct JumpBlock {
    start: usize,
    end: usize,
    rate: f64,
    /// All entries share one Bohr frequency, so `ÕρÕ† = OρO†` in the frame.
    homogeneous: bool,
}

#[derive(Debug, Clone)]
pub struct Generator {
    tag: BasisTag,
    space: SpaceDims,
    hamiltonian: Operator,
    dissipators: Vec<Dissipator>,
    frame: Vec<f64>,
    /// Diagonal of H_eff.
    eff_diag: Vec<C64>,
    /// Off-diagonal of H_eff, with Bohr frequencies.
    eff_offdiag: Vec<JumpEntry>,
    jumps: Vec<JumpEntry>,
    blocks: Vec<JumpBlock>,
}

impl Generator {
    pub fn new(
        tag: BasisTag,
        hamiltonian: Operator,
        dissipators: Vec<Dissipator>,
    ) -> Result<Self> {
        let space = hamiltonian.space();
        let d = space.dim();
        if hamiltonian.hermiticity_residual() > 1e-12 {
            return Err(SimError::invalid("hamiltonian", "must be Hermitian"));
        }
        for diss in &dissipators {
            if !(diss.rate >= 0.0) || !diss.rate.is_finite() {
                return Err(SimError::invalid(
                    format!("rate[{}]", diss.label),
                    format!("must be finite and >= 0, got {}", diss.rate),
                ));
            }
            if diss.jump.dim() != d {
                return Err(SimError::DimensionMismatch {
                    expected: d,
                    found: diss.jump.dim(),
                });
            }
        }
        let h = hamiltonian.matrix();
        let frame: Vec<f64> = (0..d).map(|i| h[(i, i)].re).collect();

        let mut heff = h.clone();
        let half_i = C64::new(0.0, 0.5);
        for diss in &dissipators {
            if diss.rate == 0.0 {
                continue;
            }
            // O†O accumulated entrywise: (O†O)_{jl} = Σ_i conj(O_ij) O_il
            let e = diss.jump.entries();
            for &(i1, j, v1) in e {
                for &(i2, l, v2) in e {
                    if i1 == i2 {
                        heff[(j, l)] -= half_i * diss.rate * v1.conj() * v2;
                    }
                }
            }
        }
        let eff_diag = (0..d).map(|i| heff[(i, i)]).collect();
        let mut eff_offdiag = Vec::new();
        for j in 0..d {
            for i in 0..d {
                if i != j && heff[(i, j)] != ZERO {
                    eff_offdiag.push(JumpEntry {
                        row: i,
                        col: j,
                        value: heff[(i, j)],
                        bohr: frame[i] - frame[j],
                    });
                }
            }
        }

        let mut jumps = Vec::new();
        let mut blocks = Vec::new();
        for diss in &dissipators {
            if diss.rate == 0.0 || diss.jump.nnz() == 0 {
                continue;
            }
            let start = jumps.len();
            for &(row, col, value) in diss.jump.entries() {
                jumps.push(JumpEntry {
                    row,
                    col,
                    value,
                    bohr: frame[row] - frame[col],
                });
            }
            let end = jumps.len();
            let first = jumps[start].bohr;
            let homogeneous = jumps[start..end].iter().all(|e| (e.bohr - first).abs() < 1e-12);
            blocks.push(JumpBlock {
                start,
                end,
                rate: diss.rate,
                homogeneous,
            });
        }

        Ok(Self {
            tag,
            space,
            hamiltonian,
            dissipators,
            frame,
            eff_diag,
            eff_offdiag,
            jumps,
            blocks,
        })
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn space(&self) -> SpaceDims {
        self.space
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn dissipators(&self) -> &[Dissipator] {
        &self.dissipators
    }

    /// Diagonal of H; the rotating frame is `exp(i·diag(frame)·t)`.
    pub fn frame_energies(&self) -> &[f64] {
        &self.frame
    }

    /// Fastest rate the integrator has to resolve.
    ///
    /// In the lab frame this is the spread of the diagonal energies plus the
    /// dissipative and coupling scales. In the rotating frame the energy
    /// spread drops out.
    pub fn stiffness(&self, rotating: bool) -> f64 {
        let decay = self
            .eff_diag
            .iter()
            .map(|z| -2.0 * z.im)
            .fold(0.0f64, f64::max);
        let mut row_sum = vec![0.0f64; self.space.dim()];
        for e in &self.eff_offdiag {
            row_sum[e.row] += e.value.norm();
        }
        let coupling = 2.0 * row_sum.iter().cloned().fold(0.0f64, f64::max);
        if rotating {
            decay + coupling
        } else {
            let lo = self.frame.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = self.frame.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (hi - lo) + decay + coupling
        }
    }

    /// `G(ρ)` in the lab frame.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.space.dim();
        let mut out = DMatrix::zeros(d, d);
        self.apply_into(rho, &mut out, None);
        out
    }

    /// Writes `G(ρ)` into `out`. With `frame_time = Some(s)`, `ρ` is taken in
    /// the frame rotating with the diagonal of H and the generator is
    /// evaluated at time `s` since the frame origin.
    pub fn apply_into(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>, frame_time: Option<f64>) {
        let d = self.space.dim();
        debug_assert_eq!(rho.nrows(), d);
        let r = rho.as_slice();
        let o = out.as_mut_slice();
        let minus_i = C64::new(0.0, -1.0);

        // diagonal of H_eff: −i(D_i − conj(D_j)) ρ_ij
        for j in 0..d {
            let dj = self.eff_diag[j].conj();
            for i in 0..d {
                let k = i + j * d;
                let mut coef = self.eff_diag[i] - dj;
                if frame_time.is_some() {
                    coef.re = 0.0;
                }
                o[k] = minus_i * coef * r[k];
            }
        }

        let phase = |bohr: f64| match frame_time {
            Some(s) if bohr != 0.0 => C64::from_polar(1.0, bohr * s),
            _ => C64::new(1.0, 0.0),
        };

        // off-diagonal H_eff: −i K ρ + i ρ K†
        for e in &self.eff_offdiag {
            let v = e.value * phase(e.bohr);
            let left = minus_i * v;
            for j in 0..d {
                o[e.row + j * d] += left * r[e.col + j * d];
            }
            // (ρ K†)_{i,row} = Σ ρ_{i,col} conj(K_{row,col})
            let right = -minus_i * v.conj();
            for i in 0..d {
                o[i + e.row * d] += right * r[i + e.col * d];
            }
        }

        // jump terms Σ r O ρ O†
        for block in &self.blocks {
            let entries = &self.jumps[block.start..block.end];
            let rotate = frame_time.is_some() && !block.homogeneous;
            for a in entries {
                let va = if rotate { a.value * phase(a.bohr) } else { a.value };
                let va = va * block.rate;
                for b in entries {
                    let vb = if rotate { b.value * phase(b.bohr) } else { b.value };
                    // (OρO†)_{a.row, b.row} += O_{a.row,a.col} ρ_{a.col,b.col} conj(O_{b.row,b.col})
                    o[a.row + b.row * d] += va * r[a.col + b.col * d] * vb.conj();
                }
            }
        }
    }
}

fn rank_one(dim: usize, row: usize, col: usize) -> SparseOp {
    SparseOp::transition(dim, row, col)
}

/// Generator in the polariton basis: `H_τ` diagonal, one jump per pair of
/// levels in adjacent manifolds (and its adjoint).
pub fn build_polariton_generator(
    basis: &PolaritonBasis,
    table: &TransitionTable,
    params: &SystemParams,
) -> Result<Generator> {
    if table.params != *params {
        return Err(SimError::BasisMismatch(
            "transition table was built with different parameters".into(),
        ));
    }
    let energies = basis.energies();
    if table.energies.len() != energies.len()
        || table.energies.iter().zip(&energies).any(|(a, b)| a != b)
    {
        return Err(SimError::BasisMismatch(
            "transition table was built from a different polariton basis".into(),
        ));
    }
    let space = basis.space();
    let d = space.dim();
    let hamiltonian = Operator::diagonal(space, &energies)?;
    let mut dissipators = Vec::new();
    for t in table.entries() {
        let name = format!("{}{}->{}{}", t.manifold, t.alpha.symbol(), t.manifold - 1, t.beta.symbol());
        let down = t.lowering_rate();
        let up = t.raising_rate();
        if down > 0.0 {
            dissipators.push(Dissipator {
                jump: rank_one(d, t.lower, t.upper),
                rate: down,
                label: format!("O[{name}]"),
            });
        }
        if up > 0.0 {
            dissipators.push(Dissipator {
                jump: rank_one(d, t.upper, t.lower),
                rate: up,
                label: format!("O+[{name}]"),
            });
        }
    }
    Generator::new(BasisTag::Polariton, hamiltonian, dissipators)
}

/// Product-basis generator: JC Hamiltonian, independent thermal baths on `b`
/// and `σ₋`, and cavity cooling rates evaluated at the bare frequency ω_m.
pub fn build_simple_generator(params: &SystemParams, space: SpaceDims) -> Result<Generator> {
    params.validate()?;
    let n_m = bose_occupation(1.0, params.theta)?;
    let n_z = bose_occupation(params.omega_z, params.theta)?;
    let (gamma_minus, gamma_plus) = cavity_rates(1.0, params);
    let b = SparseOp::from_dense(build_ladder(space).matrix());
    let tls = build_tls_ops(space);
    let sm = SparseOp::from_dense(tls.lower.matrix());
    let dissipators = vec![
        Dissipator {
            jump: b.clone(),
            rate: params.gamma_m * (n_m + 1.0) + gamma_minus,
            label: "b".into(),
        },
        Dissipator {
            jump: b.adjoint(),
            rate: params.gamma_m * n_m + gamma_plus,
            label: "b+".into(),
        },
        Dissipator {
            jump: sm.clone(),
            rate: params.gamma_tau * (n_z + 1.0),
            label: "sigma-".into(),
        },
        Dissipator {
            jump: sm.adjoint(),
            rate: params.gamma_tau * n_z,
            label: "sigma+".into(),
        },
    ];
    Generator::new(BasisTag::Product, jc_hamiltonian(params, space), dissipators)
}
