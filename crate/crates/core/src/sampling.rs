//! Seeded random states, unitaries and spectra.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::linalg::{inner, vector_norm, ComplexMatrix, C64};
use crate::state::{density_from_pure, DensityMatrix, QSystem};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_complex_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

/// Haar-random pure state.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DensityMatrix {
    loop {
        let psi = random_complex_vector(rng, n);
        if let Ok(rho) = density_from_pure(&psi) {
            return rho;
        }
    }
}

/// Hilbert–Schmidt random mixed state G G† / Tr(G G†).
pub fn random_mixed<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng));
    let w = g.matmul(&g.adjoint());
    let tr = w.trace().re;
    DensityMatrix::new(w.scale_real(1.0 / tr)).expect("G G† is a valid state after normalization")
}

/// Alternates pure (even index) and mixed (odd index) states.
pub fn random_initial_states<R: Rng + ?Sized>(rng: &mut R, n: usize, count: usize) -> Vec<DensityMatrix> {
    (0..count)
        .map(|k| if k % 2 == 0 { random_pure(rng, n) } else { random_mixed(rng, n) })
        .collect()
}

/// Haar-ish random unitary from Gram–Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = random_complex_vector(rng, n);
        for _ in 0..2 {
            for u in &cols {
                let c = inner(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= ui * c;
                }
            }
        }
        let norm = vector_norm(&v);
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    ComplexMatrix::from_columns(&cols).expect("n columns of length n")
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng));
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Descending probability vector, uniform on the simplex.
pub fn random_descending_spectrum<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = p.iter().sum();
    for x in &mut p {
        *x /= total;
    }
    p.sort_by(|a, b| b.total_cmp(a));
    p
}

/// Generic n-level system: ascending energies with distinct gaps, Einstein
/// coefficients in [0.5, 2) on every pair and a random Hermitian coupling.
pub fn random_generic_system<R: Rng + ?Sized>(rng: &mut R, n: usize) -> QSystem {
    loop {
        let mut energies = vec![0.0];
        for _ in 1..n {
            let last = *energies.last().unwrap();
            energies.push(last + 1.0 + 4.0 * rng.random::<f64>());
        }
        let a = (0..n)
            .map(|i| (0..n).map(|j| if j > i { 0.5 + 1.5 * rng.random::<f64>() } else { 0.0 }).collect())
            .collect();
        if let Ok(sys) = QSystem::new(energies, random_hermitian(rng, n), a) {
            if sys.is_generic() {
                return sys;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let a = random_initial_states(&mut rng_from_seed(3), 3, 4);
        let b = random_initial_states(&mut rng_from_seed(3), 3, 4);
        assert_eq!(a, b);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let u = random_unitary(&mut rng_from_seed(1), 4);
        let g = u.adjoint().matmul(&u);
        assert!((&g - &ComplexMatrix::identity(4)).max_abs() < 1e-13);
    }

    #[test]
    fn mixed_states_are_full_rank() {
        let rho = random_mixed(&mut rng_from_seed(9), 3);
        assert!(rho.eigenvalues()[0] > 0.0);
        assert!(rho.purity() < 1.0);
    }

    #[test]
    fn spectrum_is_descending_and_normalized() {
        let p = random_descending_spectrum(&mut rng_from_seed(5), 4);
        assert!(p.windows(2).all(|w| w[0] >= w[1]));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
