//! Brute-force references for small dimensions.
//!
//! Nothing here shares code paths with the sparse generator application or
//! the time steppers: superoperators are assembled from dense Kronecker
//! products and propagated with a dense matrix exponential.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::dissipation::Generator;
use crate::error::{Result, SimError};
use crate::params::SystemParams;
use crate::polariton::jc_hamiltonian;
use crate::space::{SpaceDims, ONE, ZERO};

/// Largest Hilbert-space dimension the oracle accepts (nmax ≤ 7).
pub const ORACLE_MAX_DIM: usize = 16;

/// Full eigendecomposition of the product-basis `H_JC`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct JcSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Column k is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
}

pub fn dense_diagonalize_jc(params: &SystemParams, space: SpaceDims) -> JcSpectrum {
    let h = jc_hamiltonian(params, space).matrix().map(|z| z.re);
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, order.len(), |i, k| eig.eigenvectors[(i, order[k])]);
    JcSpectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Generator as a `d² × d²` matrix acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    matrix: DMatrix<C64>,
    d: usize,
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

pub fn build_superoperator(generator: &Generator) -> Result<Superoperator> {
    let d = generator.space().dim();
    if d > ORACLE_MAX_DIM {
        return Err(SimError::OracleTooLarge {
            dim: d,
            cap: ORACLE_MAX_DIM,
        });
    }
    let id = DMatrix::<C64>::identity(d, d);
    let h = generator.hamiltonian().matrix();
    // vec(AXB) = (Bᵀ ⊗ A) vec(X)
    let mut s = (kron(&id, h) - kron(&h.transpose(), &id)) * C64::new(0.0, -1.0);
    for diss in generator.dissipators() {
        let o = diss.jump.to_dense();
        let od = o.adjoint();
        let odo = &od * &o;
        let r = C64::new(diss.rate, 0.0);
        s += (kron(&o.conjugate(), &o) - kron(&id, &odo) * C64::new(0.5, 0.0) - kron(&odo.transpose(), &id) * C64::new(0.5, 0.0)) * r;
    }
    Ok(Superoperator { matrix: s, d })
}

impl Superoperator {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let v = vectorize(rho);
        unvectorize(&(&self.matrix * v), self.d)
    }

    /// Row vector of the trace functional composed with the superoperator;
    /// zero for trace-preserving generators.
    pub fn trace_row(&self) -> DVector<C64> {
        let d = self.d;
        DVector::from_fn(d * d, |col, _| (0..d).map(|i| self.matrix[(i + i * d, col)]).sum())
    }

    /// Stationary state: `S vec(ρ) = 0` with `Tr ρ = 1`.
    pub fn steady_state(&self) -> Result<DMatrix<C64>> {
        let d = self.d;
        let mut a = self.matrix.clone();
        let mut rhs = DVector::<C64>::zeros(d * d);
        // one equation is redundant with trace preservation; swap in Tr ρ = 1
        for col in 0..d * d {
            a[(0, col)] = ZERO;
        }
        for i in 0..d {
            a[(0, i + i * d)] = ONE;
        }
        rhs[0] = ONE;
        let x = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| SimError::invalid("superoperator", "singular stationary system"))?;
        Ok(unvectorize(&x, d))
    }
}

pub fn vectorize(rho: &DMatrix<C64>) -> DVector<C64> {
    // nalgebra storage is column-major, i.e. already column-stacked
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, d: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// `exp(S t) vec(ρ₀)` by scaling and squaring.
pub fn expm_evolve(s: &Superoperator, rho0: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
    if s.d > ORACLE_MAX_DIM {
        return Err(SimError::OracleTooLarge {
            dim: s.d,
            cap: ORACLE_MAX_DIM,
        });
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let prop = (&s.matrix * C64::new(t, 0.0)).exp();
    Ok(unvectorize(&(prop * vectorize(rho0)), s.d))
}
