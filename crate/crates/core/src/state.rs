//! Density matrices, the controlled n-level system, and basic state algebra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, inner, vector_norm, ComplexMatrix, C64, ZERO};

/// Tolerance used when validating externally produced density matrices.
pub const STATE_TOL: f64 = 1e-9;

/// Eigenvalues closer than this are treated as one degenerate block.
const DEGENERACY_TOL: f64 = 1e-10;

/// Hermitian, unit-trace, positive semidefinite n×n matrix.
///
/// Construction checks the three invariants to [`STATE_TOL`] and then
/// projects onto the exact Hermitian, unit-trace matrix so downstream
/// arithmetic starts clean.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, STATE_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::InvalidDensity(format!(
                "expected a nonempty square matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if matrix.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let herm = matrix.hermiticity_error();
        if herm > tol {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace - 1.0).norm() > tol {
            return Err(Error::InvalidDensity(format!(
                "trace {:.12} differs from 1",
                trace.re
            )));
        }
        let h = matrix.hermitian_part().scale_real(1.0 / trace.re);
        let min_eig = eigh(&h)?.values[0];
        if min_eig < -tol {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { matrix: h })
    }

    /// Computational basis state |k⟩⟨k|.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidInput(format!("basis index {k} out of range for n = {n}")));
        }
        let mut m = ComplexMatrix::zeros(n, n);
        m[(k, k)] = C64::new(1.0, 0.0);
        Ok(Self { matrix: m })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n).scale_real(1.0 / n as f64),
        }
    }

    /// Σ p_i |i⟩⟨i|
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::diag_real(p))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// Tr(ρ²)
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.frobenius_norm().powi(2)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.matrix)
            .map(|e| e.values)
            .expect("density matrix is Hermitian by construction")
    }

    pub fn vectorize(&self) -> Vec<C64> {
        self.matrix.vectorize()
    }
}

/// |ψ̂⟩⟨ψ̂| with ψ̂ = ψ/‖ψ‖.
pub fn density_from_pure(psi: &[C64]) -> Result<DensityMatrix> {
    let norm = vector_norm(psi);
    if psi.is_empty() || norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidInput("state vector must be nonzero and finite".into()));
    }
    let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
    DensityMatrix::new(ComplexMatrix::outer(&unit, &unit))
}

/// ρ = Σ p_i |φ_i⟩⟨φ_i| with p descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub p: Vec<f64>,
    pub phi: Vec<Vec<C64>>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.p.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (p, v) in self.p.iter().zip(&self.phi) {
            m = &m + &ComplexMatrix::outer(v, v).scale_real(*p);
        }
        m
    }
}

/// Eigen-decomposition of a density matrix with descending weights.
///
/// Eigenvectors inside a degenerate block are replaced by the Gram–Schmidt
/// orthonormalization of the projected basis vectors P|0⟩, P|1⟩, … so the
/// result does not depend on solver internals. Each eigenvector's first
/// non-negligible component is made real and positive.
pub fn spectral_decomposition(rho: &DensityMatrix) -> SpectralDecomposition {
    let n = rho.dim();
    let eig = eigh(rho.matrix()).expect("density matrix is Hermitian by construction");
    // descending, stable in solver order
    let order: Vec<usize> = (0..n).rev().collect();
    let mut p: Vec<f64> = order.iter().map(|&k| eig.values[k].max(0.0)).collect();
    let total: f64 = p.iter().sum();
    for x in &mut p {
        *x /= total;
    }
    let mut phi: Vec<Vec<C64>> = order.iter().map(|&k| eig.vectors.column(k)).collect();

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (p[end - 1] - p[end]).abs() <= DEGENERACY_TOL {
            end += 1;
        }
        if end - start > 1 {
            let block = canonical_block(&phi[start..end], n);
            phi.splice(start..end, block);
        } else {
            fix_phase(&mut phi[start]);
        }
        start = end;
    }
    SpectralDecomposition { p, phi }
}

fn canonical_block(vectors: &[Vec<C64>], n: usize) -> Vec<Vec<C64>> {
    let projector = |e: usize| -> Vec<C64> {
        // P e_k = Σ_v v ⟨v|e_k⟩
        let mut w = vec![ZERO; n];
        for v in vectors {
            let coef = v[e].conj();
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += vi * coef;
            }
        }
        w
    };
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(vectors.len());
    for e in 0..n {
        if out.len() == vectors.len() {
            break;
        }
        let mut w = projector(e);
        for _ in 0..2 {
            for u in &out {
                let c = inner(u, &w);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= ui * c;
                }
            }
        }
        let norm = vector_norm(&w);
        if norm > 1e-6 {
            out.push(w.into_iter().map(|z| z / norm).collect());
        }
    }
    for v in &mut out {
        fix_phase(v);
    }
    out
}

fn fix_phase(v: &mut [C64]) {
    if let Some(lead) = v.iter().copied().find(|z| z.norm() > 1e-6) {
        let rot = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Frobenius (Hilbert–Schmidt) norm of `a − b`.
pub fn hs_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok((a.matrix() - b.matrix()).frobenius_norm())
}

/// Bloch coordinates with |0⟩ at the north pole:
/// x = 2 Re ρ₀₁, y = 2 Im ρ₁₀, z = ρ₀₀ − ρ₁₁.
pub fn bloch_vector(rho: &DensityMatrix) -> Result<[f64; 3]> {
    if rho.dim() != 2 {
        return Err(Error::NotTwoLevel(rho.dim()));
    }
    let m = rho.matrix();
    Ok([
        2.0 * m[(0, 1)].re,
        2.0 * m[(1, 0)].im,
        m[(0, 0)].re - m[(1, 1)].re,
    ])
}

/// An n-level system: H₀ = Σ ε_i |i⟩⟨i|, a Hermitian coupling V to the
/// coherent field, and Einstein coefficients A_ij (i < j) for the j → i
/// transitions. Energies are in rad/s (ħ = 1); V is in rad/s per unit field.
#[derive(Debug, Clone, PartialEq)]
pub struct QSystem {
    energies: Vec<f64>,
    coupling: ComplexMatrix,
    einstein_a: Vec<Vec<f64>>,
    h_eff: Option<Vec<f64>>,
}

impl QSystem {
    /// `einstein_a` is n×n; only the strict upper triangle may be nonzero.
    pub fn new(energies: Vec<f64>, coupling: ComplexMatrix, einstein_a: Vec<Vec<f64>>) -> Result<Self> {
        let n = energies.len();
        if n == 0 {
            return Err(Error::InvalidInput("system needs at least one level".into()));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInput("energies must be finite".into()));
        }
        if let Some(k) = (1..n).find(|&k| energies[k] <= energies[k - 1]) {
            return Err(Error::InvalidInput(format!(
                "energies must be strictly increasing (level {k})"
            )));
        }
        if coupling.rows() != n || coupling.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: coupling.rows().max(coupling.cols()),
            });
        }
        let herm = coupling.hermiticity_error();
        if herm > 1e-12 * coupling.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation: herm });
        }
        if einstein_a.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: einstein_a.len(),
            });
        }
        for (i, row) in einstein_a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &a) in row.iter().enumerate() {
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "Einstein coefficient A[{i}][{j}] must be finite and nonnegative"
                    )));
                }
                if j <= i && a != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "Einstein coefficient A[{i}][{j}] must be zero (only i < j is used)"
                    )));
                }
            }
        }
        Ok(Self {
            energies,
            coupling: coupling.hermitian_part(),
            einstein_a,
            h_eff: None,
        })
    }

    /// Adds a diagonal effective Hamiltonian (rad/s) to the open dynamics.
    pub fn with_h_eff(mut self, diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: diagonal.len(),
            });
        }
        self.h_eff = Some(diagonal);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn coupling(&self) -> &ComplexMatrix {
        &self.coupling
    }

    pub fn einstein_a(&self, i: usize, j: usize) -> f64 {
        self.einstein_a[i][j]
    }

    pub fn einstein_matrix(&self) -> &[Vec<f64>] {
        &self.einstein_a
    }

    pub fn h_eff(&self) -> Option<&[f64]> {
        self.h_eff.as_deref()
    }

    pub fn h0(&self) -> ComplexMatrix {
        ComplexMatrix::diag_real(&self.energies)
    }

    /// H₀ + H_eff, the Hamiltonian of the open dynamics.
    pub fn open_hamiltonian(&self) -> ComplexMatrix {
        match &self.h_eff {
            None => self.h0(),
            Some(d) => {
                let diag: Vec<f64> = self.energies.iter().zip(d).map(|(e, h)| e + h).collect();
                ComplexMatrix::diag_real(&diag)
            }
        }
    }

    /// ω_ij = ε_j − ε_i for i < j.
    pub fn transition_frequency(&self, i: usize, j: usize) -> f64 {
        self.energies[j] - self.energies[i]
    }

    /// Checks that all transition frequencies are pairwise distinct.
    pub fn check_generic(&self) -> Result<()> {
        let n = self.dim();
        let mut freqs: Vec<((usize, usize), f64)> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                freqs.push(((i, j), self.transition_frequency(i, j)));
            }
        }
        let scale = freqs.iter().map(|f| f.1).fold(0.0, f64::max);
        freqs.sort_by(|a, b| a.1.total_cmp(&b.1));
        for w in freqs.windows(2) {
            if (w[1].1 - w[0].1).abs() <= 1e-12 * scale {
                return Err(Error::NonGeneric(
                    format!("{:?}", w[0].0),
                    format!("{:?}", w[1].0),
                ));
            }
        }
        Ok(())
    }

    pub fn is_generic(&self) -> bool {
        self.check_generic().is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pure_basis_state() {
        let rho = density_from_pure(&[ONE, ZERO]).unwrap();
        let expected = ComplexMatrix::diag_real(&[1.0, 0.0]);
        assert_eq!(rho.matrix(), &expected);
    }

    #[test]
    fn pure_plus_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = density_from_pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
        for z in rho.matrix().as_slice() {
            assert!((z - c(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn pure_circular_state() {
        // (1, i)/√2 → [[.5, −.5i], [.5i, .5]]
        let rho = density_from_pure(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let m = rho.matrix();
        assert!((m[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((m[(0, 1)] - c(0.0, -0.5)).norm() < 1e-15);
        assert!((m[(1, 0)] - c(0.0, 0.5)).norm() < 1e-15);
        assert!((m[(1, 1)] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert!(matches!(
            density_from_pure(&[ZERO, ZERO]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn invalid_matrices_are_rejected() {
        let not_unit = ComplexMatrix::diag_real(&[0.5, 0.4]);
        assert!(DensityMatrix::new(not_unit).is_err());
        let negative = ComplexMatrix::diag_real(&[1.5, -0.5]);
        assert!(DensityMatrix::new(negative).is_err());
        let mut non_herm = ComplexMatrix::diag_real(&[0.5, 0.5]);
        non_herm[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(non_herm).is_err());
    }

    #[test]
    fn spectral_decomposition_of_calcium_target() {
        let rho = DensityMatrix::from_populations(&[0.25, 0.75]).unwrap();
        let sd = spectral_decomposition(&rho);
        assert!((sd.p[0] - 0.75).abs() < 1e-15 && (sd.p[1] - 0.25).abs() < 1e-15);
        assert_eq!(sd.phi[0], vec![ZERO, ONE]);
        assert_eq!(sd.phi[1], vec![ONE, ZERO]);
    }

    #[test]
    fn spectral_decomposition_of_maximally_mixed_is_canonical() {
        let sd = spectral_decomposition(&DensityMatrix::maximally_mixed(2));
        assert_eq!(sd.p, vec![0.5, 0.5]);
        assert_eq!(sd.phi, vec![vec![ONE, ZERO], vec![ZERO, ONE]]);
    }

    #[test]
    fn hs_distance_examples() {
        let g = DensityMatrix::basis(2, 0).unwrap();
        let e = DensityMatrix::basis(2, 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(hs_distance(&g, &g).unwrap(), 0.0);
        assert!((hs_distance(&g, &e).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((hs_distance(&mixed, &g).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let three = DensityMatrix::maximally_mixed(3);
        assert!(matches!(hs_distance(&g, &three), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bloch_examples() {
        let g = DensityMatrix::basis(2, 0).unwrap();
        assert_eq!(bloch_vector(&g).unwrap(), [0.0, 0.0, 1.0]);
        assert_eq!(bloch_vector(&DensityMatrix::maximally_mixed(2)).unwrap(), [0.0, 0.0, 0.0]);
        let target = DensityMatrix::from_populations(&[0.25, 0.75]).unwrap();
        assert_eq!(bloch_vector(&target).unwrap(), [0.0, 0.0, -0.5]);
        // (1, i)/√2 sits on +y
        let y = density_from_pure(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let b = bloch_vector(&y).unwrap();
        assert!((b[1] - 1.0).abs() < 1e-15 && b[0].abs() < 1e-15 && b[2].abs() < 1e-15);
        assert!(matches!(
            bloch_vector(&DensityMatrix::maximally_mixed(3)),
            Err(Error::NotTwoLevel(3))
        ));
    }

    #[test]
    fn system_validation() {
        let v = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let a = vec![vec![0.0, 1.0], vec![0.0, 0.0]];
        assert!(QSystem::new(vec![0.0, 1.0], v.clone(), a.clone()).is_ok());
        assert!(QSystem::new(vec![1.0, 1.0], v.clone(), a.clone()).is_err());
        assert!(QSystem::new(vec![0.0, 1.0], v.clone(), vec![vec![0.0, 0.0], vec![1.0, 0.0]]).is_err());
        let non_herm = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(
            QSystem::new(vec![0.0, 1.0], non_herm, a),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn genericity() {
        let zero_a = vec![vec![0.0; 3]; 3];
        let v = ComplexMatrix::zeros(3, 3);
        let ladder = QSystem::new(vec![0.0, 1.0, 2.0], v.clone(), zero_a.clone()).unwrap();
        assert!(matches!(ladder.check_generic(), Err(Error::NonGeneric(..))));
        let generic = QSystem::new(vec![0.0, 1.0, 2.5], v, zero_a).unwrap();
        assert!(generic.is_generic());
    }
}
