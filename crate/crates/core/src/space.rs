//! Truncated resonator ⊗ two-level-system Hilbert space.
//!
//! Product states are flattened Fock-major: `|n, s⟩ ↦ 2n + s` with `s = 0`
//! for the TLS ground state `|↓⟩` and `s = 1` for `|↑⟩`. Every operator and
//! density matrix in the crate uses this ordering in the product basis.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Result, SimError};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Tolerances a density matrix has to meet to count as valid.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Largest population allowed in the top retained Fock level.
pub const TRUNCATION_LIMIT: f64 = 1e-4;

/// TLS state label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Down = 0,
    Up = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceDims {
    nmax: usize,
}

impl SpaceDims {
    pub fn new(nmax: usize) -> Result<Self> {
        if nmax < 2 {
            return Err(SimError::invalid("nmax", format!("must be >= 2, got {nmax}")));
        }
        Ok(Self { nmax })
    }

    /// Highest retained Fock level.
    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn dim(&self) -> usize {
        2 * (self.nmax + 1)
    }

    /// Flat index of the product state `|n, s⟩`.
    #[inline]
    pub fn index(&self, n: usize, s: Spin) -> usize {
        debug_assert!(n <= self.nmax);
        2 * n + s as usize
    }

    /// Inverse of [`SpaceDims::index`].
    #[inline]
    pub fn state(&self, i: usize) -> (usize, Spin) {
        let s = if i.is_multiple_of(2) { Spin::Down } else { Spin::Up };
        (i / 2, s)
    }
}

/// Dense operator on the product (or polariton) space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
    space: SpaceDims,
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>, space: SpaceDims) -> Result<Self> {
        check_shape(&matrix, space)?;
        Ok(Self { matrix, space })
    }

    pub fn zeros(space: SpaceDims) -> Self {
        let d = space.dim();
        Self {
            matrix: DMatrix::zeros(d, d),
            space,
        }
    }

    pub fn identity(space: SpaceDims) -> Self {
        let d = space.dim();
        Self {
            matrix: DMatrix::identity(d, d),
            space,
        }
    }

    pub fn from_real_fn(space: SpaceDims, f: impl Fn(usize, usize) -> f64) -> Self {
        let d = space.dim();
        Self {
            matrix: DMatrix::from_fn(d, d, |i, j| C64::new(f(i, j), 0.0)),
            space,
        }
    }

    pub fn diagonal(space: SpaceDims, diag: &[f64]) -> Result<Self> {
        if diag.len() != space.dim() {
            return Err(SimError::DimensionMismatch {
                expected: space.dim(),
                found: diag.len(),
            });
        }
        Ok(Self::from_real_fn(space, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn space(&self) -> SpaceDims {
        self.space
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            space: self.space,
        }
    }

    pub fn mul(&self, other: &Operator) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
            space: self.space,
        }
    }

    pub fn add(&self, other: &Operator) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
            space: self.space,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            matrix: &self.matrix * factor,
            space: self.space,
        }
    }

    /// `U · self · U†`.
    pub fn conjugated_by(&self, unitary: &DMatrix<C64>) -> Self {
        Self {
            matrix: unitary * &self.matrix * unitary.adjoint(),
            space: self.space,
        }
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Max-abs entry of `O†O − I`.
    pub fn unitarity_residual(&self) -> f64 {
        let d = self.space.dim();
        max_abs(&(self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(d, d)))
    }
}

/// Density matrix owned by a single simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    space: SpaceDims,
}

/// Result of the validity checks on a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        self.trace_error <= TRACE_TOL
            && self.hermiticity_error <= HERMITIAN_TOL
            && self.min_eigenvalue >= -POSITIVITY_TOL
    }
}

impl DensityMatrix {
    /// Validating constructor.
    pub fn new(matrix: DMatrix<C64>, space: SpaceDims) -> Result<Self> {
        let rho = Self::new_unchecked(matrix, space)?;
        let v = rho.validity();
        if !v.is_valid() {
            return Err(SimError::invalid(
                "rho",
                format!(
                    "not a density matrix (trace err {:.2e}, hermiticity err {:.2e}, min eig {:.2e})",
                    v.trace_error, v.hermiticity_error, v.min_eigenvalue
                ),
            ));
        }
        Ok(rho)
    }

    /// Shape-checked only; integrators use this for intermediate states.
    pub fn new_unchecked(matrix: DMatrix<C64>, space: SpaceDims) -> Result<Self> {
        check_shape(&matrix, space)?;
        Ok(Self { matrix, space })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn space(&self) -> SpaceDims {
        self.space
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn trace_error(&self) -> f64 {
        (self.trace() - ONE).norm()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.matrix.nrows();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                let r = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                worst = worst.max(r);
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.matrix)
    }

    pub fn validity(&self) -> Validity {
        Validity {
            trace_error: self.trace_error(),
            hermiticity_error: self.hermiticity_error(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }

    /// Change of basis `ρ ↦ U ρ U†`.
    pub fn transformed(&self, unitary: &DMatrix<C64>) -> Self {
        Self {
            matrix: unitary * &self.matrix * unitary.adjoint(),
            space: self.space,
        }
    }
}

fn check_shape(matrix: &DMatrix<C64>, space: SpaceDims) -> Result<()> {
    let d = space.dim();
    if matrix.nrows() != d || matrix.ncols() != d {
        return Err(SimError::DimensionMismatch {
            expected: d,
            found: matrix.nrows().max(matrix.ncols()),
        });
    }
    Ok(())
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Smallest eigenvalue of the Hermitian part of `m`.
///
/// The matrix is split into the connected components of its nonzero pattern
/// and each block is diagonalized on its own. States that conserve an
/// excitation number stay block diagonal, which turns an O(d³) check into a
/// handful of 2×2 problems.
pub fn min_hermitian_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for j in 0..d {
        for i in 0..j {
            if m[(i, j)] != ZERO || m[(j, i)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..d {
        let r = find(&mut parent, i);
        blocks.entry(r).or_default().push(i);
    }
    let mut lowest = f64::INFINITY;
    for idx in blocks.values() {
        let k = idx.len();
        let block = DMatrix::from_fn(k, k, |a, b| {
            let (i, j) = (idx[a], idx[b]);
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        });
        let low = if k == 1 {
            block[(0, 0)].re
        } else {
            block
                .symmetric_eigenvalues()
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b))
        };
        lowest = lowest.min(low);
    }
    lowest
}

/// Resonator annihilation operator `b ⊗ 1`.
pub fn build_ladder(space: SpaceDims) -> Operator {
    let mut op = Operator::zeros(space);
    for n in 1..=space.nmax() {
        let amp = C64::new((n as f64).sqrt(), 0.0);
        for s in [Spin::Down, Spin::Up] {
            op.matrix[(space.index(n - 1, s), space.index(n, s))] = amp;
        }
    }
    op
}

/// TLS lowering, raising and `σ_z` operators, as `1 ⊗ σ`.
#[derive(Debug, Clone)]
pub struct TlsOps {
    pub lower: Operator,
    pub raise: Operator,
    pub sigma_z: Operator,
}

pub fn build_tls_ops(space: SpaceDims) -> TlsOps {
    let mut lower = Operator::zeros(space);
    let mut sigma_z = Operator::zeros(space);
    for n in 0..=space.nmax() {
        let (dn, up) = (space.index(n, Spin::Down), space.index(n, Spin::Up));
        lower.matrix[(dn, up)] = ONE;
        sigma_z.matrix[(dn, dn)] = -ONE;
        sigma_z.matrix[(up, up)] = ONE;
    }
    let raise = lower.dagger();
    TlsOps {
        lower,
        raise,
        sigma_z,
    }
}

/// `b†b`.
pub fn number_operator(space: SpaceDims) -> Operator {
    Operator::from_real_fn(space, |i, j| if i == j { space.state(i).0 as f64 } else { 0.0 })
}

/// Projector onto the highest retained Fock level (both TLS states).
pub fn top_level_projector(space: SpaceDims) -> Operator {
    Operator::from_real_fn(space, |i, j| {
        if i == j && space.state(i).0 == space.nmax() {
            1.0
        } else {
            0.0
        }
    })
}

/// Weight of the Bose-Einstein distribution above `nmax`, before truncation.
pub fn thermal_tail_weight(nmax: usize, n_th: f64) -> f64 {
    if n_th <= 0.0 {
        return 0.0;
    }
    (n_th / (n_th + 1.0)).powi(nmax as i32 + 1)
}

/// Excited-state population of a TLS in equilibrium with occupation `n_th`
/// of its transition, `n/(2n+1)`.
pub fn tls_thermal_excited(n_th: f64) -> f64 {
    n_th / (2.0 * n_th + 1.0)
}

/// Thermal resonator at mean occupation `n_th` (truncated and renormalized),
/// times a diagonal TLS state with excited population `tls_excited`.
///
/// Returns the state and the tail weight lost to truncation.
pub fn thermal_resonator_state(
    space: SpaceDims,
    n_th: f64,
    tls_excited: f64,
) -> Result<(DensityMatrix, f64)> {
    if !(n_th >= 0.0) || !n_th.is_finite() {
        return Err(SimError::invalid("n_th", format!("must be finite and >= 0, got {n_th}")));
    }
    if !(0.0..=1.0).contains(&tls_excited) {
        return Err(SimError::invalid(
            "tls_excited",
            format!("must lie in [0, 1], got {tls_excited}"),
        ));
    }
    let ratio = n_th / (n_th + 1.0);
    let mut pops: Vec<f64> = (0..=space.nmax()).map(|n| ratio.powi(n as i32)).collect();
    let total: f64 = pops.iter().sum();
    pops.iter_mut().for_each(|p| *p /= total);
    let tail = thermal_tail_weight(space.nmax(), n_th);
    if tail > TRUNCATION_LIMIT {
        log::warn!(
            "thermal state n_th = {n_th:.4} loses tail weight {tail:.3e} at nmax = {}; increase nmax",
            space.nmax()
        );
    }
    let d = space.dim();
    let mut m = DMatrix::zeros(d, d);
    for (n, p) in pops.iter().enumerate() {
        m[(space.index(n, Spin::Down), space.index(n, Spin::Down))] = C64::new(p * (1.0 - tls_excited), 0.0);
        m[(space.index(n, Spin::Up), space.index(n, Spin::Up))] = C64::new(p * tls_excited, 0.0);
    }
    Ok((DensityMatrix { matrix: m, space }, tail))
}

/// `Tr(O ρ)`.
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if rho.space != op.space {
        return Err(SimError::DimensionMismatch {
            expected: rho.space.dim(),
            found: op.space.dim(),
        });
    }
    Ok(trace_of_product(op.matrix(), rho.matrix()))
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let d = a.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize) -> SpaceDims {
        SpaceDims::new(n).unwrap()
    }

    #[test]
    fn rejects_tiny_truncation() {
        assert!(SpaceDims::new(1).is_err());
        assert_eq!(space(2).dim(), 6);
    }

    #[test]
    fn index_round_trip_is_fock_major() {
        let s = space(4);
        for i in 0..s.dim() {
            let (n, spin) = s.state(i);
            assert_eq!(s.index(n, spin), i);
        }
        assert_eq!(s.index(0, Spin::Up), 1);
        assert_eq!(s.index(1, Spin::Down), 2);
    }

    #[test]
    fn ladder_entries_nmax2() {
        let s = space(2);
        let b = build_ladder(s);
        // Fock factor restricted to TLS down
        let fock = |i: usize, j: usize| b.matrix()[(s.index(i, Spin::Down), s.index(j, Spin::Down))];
        for i in 0..3 {
            for j in 0..3 {
                let expected = match (i, j) {
                    (0, 1) => 1.0,
                    (1, 2) => 2f64.sqrt(),
                    _ => 0.0,
                };
                assert!((fock(i, j) - C64::new(expected, 0.0)).norm() < 1e-15);
            }
        }
        let nb = b.dagger().mul(&b);
        assert!(nb.max_abs_diff(&number_operator(s)) < 1e-14);
    }

    #[test]
    fn ladder_commutator_truncation_artifact() {
        let s = space(5);
        let b = build_ladder(s);
        let bd = b.dagger();
        let comm = b.mul(&bd).add(&bd.mul(&b).scale(-ONE));
        let mut expected = Operator::identity(s);
        for spin in [Spin::Down, Spin::Up] {
            let i = s.index(5, spin);
            expected.matrix[(i, i)] = C64::new(-5.0, 0.0);
        }
        assert!(comm.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn tls_identities() {
        let s = space(3);
        let t = build_tls_ops(s);
        let flipped = t.sigma_z.mul(&t.lower).mul(&t.sigma_z).add(&t.lower);
        assert!(crate::space::max_abs(flipped.matrix()) < 1e-15);
        let flipped = t.sigma_z.mul(&t.raise).mul(&t.sigma_z).add(&t.raise);
        assert!(crate::space::max_abs(flipped.matrix()) < 1e-15);
        assert_eq!(t.sigma_z.mul(&t.sigma_z), Operator::identity(s));
        let anti = t.raise.mul(&t.lower).add(&t.lower.mul(&t.raise));
        assert_eq!(anti, Operator::identity(s));
    }

    #[test]
    fn thermal_zero_is_vacuum() {
        let s = space(4);
        let (rho, tail) = thermal_resonator_state(s, 0.0, 0.0).unwrap();
        assert_eq!(tail, 0.0);
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                let e = if i == 0 && j == 0 { ONE } else { ZERO };
                assert_eq!(rho.matrix()[(i, j)], e);
            }
        }
    }

    #[test]
    fn thermal_mean_occupation() {
        // geometric series: <n> = r/(1-r) untruncated
        let s = space(80);
        let (rho, _) = thermal_resonator_state(s, 10.0, 0.3).unwrap();
        assert!(rho.trace_error() < 1e-12);
        let n = expectation(&rho, &number_operator(s)).unwrap();
        // the truncated closed form; renormalization pulls the mean to ~9.964
        assert!((n.re - 9.964).abs() < 1e-3, "{}", n.re);
        let r: f64 = 10.0 / 11.0;
        let m = 81;
        let truncated_mean = r / (1.0 - r) - (m as f64) * r.powi(m) / (1.0 - r.powi(m));
        assert!((n.re - truncated_mean).abs() < 1e-10);
    }

    #[test]
    fn thermal_mean_within_1e3_when_tail_small() {
        let s = space(200);
        let (rho, tail) = thermal_resonator_state(s, 10.0, 0.0).unwrap();
        assert!(tail < 1e-8);
        let n = expectation(&rho, &number_operator(s)).unwrap().re;
        assert!((n - 10.0).abs() < 1e-3, "{n}");
        let (rho, _) = thermal_resonator_state(s, 1.0, 0.0).unwrap();
        let n = expectation(&rho, &number_operator(s)).unwrap().re;
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_rejects_bad_inputs() {
        let s = space(4);
        assert!(thermal_resonator_state(s, -1.0, 0.0).is_err());
        assert!(thermal_resonator_state(s, f64::NAN, 0.0).is_err());
        assert!(thermal_resonator_state(s, 1.0, 1.5).is_err());
    }

    #[test]
    fn expectation_basics() {
        let s = space(3);
        let (rho, _) = thermal_resonator_state(s, 0.7, 0.2).unwrap();
        let id = expectation(&rho, &Operator::identity(s)).unwrap();
        assert!((id - ONE).norm() < 1e-14);
        let (vac, _) = thermal_resonator_state(s, 0.0, 0.0).unwrap();
        assert_eq!(expectation(&vac, &number_operator(s)).unwrap(), ZERO);
        let wrong = Operator::identity(space(4));
        assert!(matches!(
            expectation(&rho, &wrong),
            Err(SimError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn block_eigenvalue_matches_dense() {
        let s = space(3);
        let d = s.dim();
        let mut m = DMatrix::<C64>::zeros(d, d);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.2, 0.0);
        m[(2, 2)] = C64::new(0.2, 0.0);
        m[(1, 2)] = C64::new(0.1, 0.25);
        m[(2, 1)] = C64::new(0.1, -0.25);
        m[(5, 5)] = C64::new(0.1, 0.0);
        let dense = m.clone().symmetric_eigenvalues().min();
        assert!((min_hermitian_eigenvalue(&m) - dense).abs() < 1e-14);
        assert!(min_hermitian_eigenvalue(&m) < 0.0);
        assert!(DensityMatrix::new(m, s).is_err());
    }
}
