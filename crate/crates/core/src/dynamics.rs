//! Markovian dynamics under incoherent radiation.
//!
//! The generator is
//!
//! ```text
//! ρ̇ = −i[H₀ + H_eff, ρ] + Σ_{i<j} A_ij [(n_ij + 1) L_{Q_ij}(ρ) + n_ij L_{Q_ji}(ρ)]
//! L_Q(ρ) = 2QρQ† − Q†Qρ − ρQ†Q,   Q_ij = |i⟩⟨j|
//! ```
//!
//! Expanding the dissipator gives population transfer rates 2A(n+1)
//! downward and 2An upward, and coherence decay rates
//! Γ_ln = ½(out_l + out_n) where out_k is the total population outflow
//! rate of level k. These differ from the W = A(2n+1) shorthand by a
//! uniform factor of the L_Q normalization; everything here follows the
//! expansion above.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, numerical_rank, ComplexMatrix, Lu, C64, I, ONE, ZERO};
use crate::state::{DensityMatrix, QSystem};
use crate::units::{HBAR, SPEED_OF_LIGHT};

/// Default cap on photon occupation numbers.
pub const DEFAULT_N_MAX: f64 = 1e6;

/// Default number of trajectory samples per stage.
pub const DEFAULT_SAMPLES: usize = 200;

/// Photon occupation n_{ω_ij} for every transition i < j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    n: usize,
    /// Upper-triangle pairs in row-major order: (0,1), (0,2), …, (1,2), …
    occupations: Vec<f64>,
    n_max: f64,
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // pairs preceding row i: Σ_{r<i} (n − 1 − r)
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl SpectralDensity {
    pub fn new(n: usize, occupations: Vec<f64>, n_max: f64) -> Result<Self> {
        let pairs = n * n.saturating_sub(1) / 2;
        if occupations.len() != pairs {
            return Err(Error::DimensionMismatch {
                expected: pairs,
                found: occupations.len(),
            });
        }
        if !(n_max.is_finite() && n_max > 0.0) {
            return Err(Error::InvalidInput(format!("n_max must be positive, got {n_max}")));
        }
        if let Some(bad) = occupations.iter().find(|&&x| !(0.0..=n_max).contains(&x)) {
            return Err(Error::InvalidInput(format!(
                "occupation {bad} outside [0, {n_max}]"
            )));
        }
        Ok(Self { n, occupations, n_max })
    }

    pub fn from_fn(n: usize, n_max: f64, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut occ = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                occ.push(f(i, j));
            }
        }
        Self::new(n, occ, n_max)
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::from_fn(n, DEFAULT_N_MAX.max(value), |_, _| value)
    }

    /// No photons on any transition.
    pub fn vacuum(n: usize) -> Self {
        Self::uniform(n, 0.0).expect("zero occupation is valid")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_max(&self) -> f64 {
        self.n_max
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.occupations[pair_index(self.n, a, b)]
    }

    /// ((i, j), n_ij) in row-major pair order.
    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
            .zip(self.occupations.iter().copied())
    }
}

/// Column-vectorized generator acting on vec(ρ), `vec[i + j·n] = ρ_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    generator: ComplexMatrix,
    n: usize,
    split: Option<Split>,
}

/// Generator = −i[diag(levels), ·] + dissipator with both parts commuting.
#[derive(Debug, Clone, PartialEq)]
struct Split {
    levels: Vec<f64>,
    dissipator: ComplexMatrix,
}

impl Liouvillian {
    pub fn from_generator(generator: ComplexMatrix, n: usize) -> Result<Self> {
        if generator.rows() != n * n || generator.cols() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: generator.rows(),
            });
        }
        Ok(Self {
            generator,
            n,
            split: None,
        })
    }

    pub fn generator(&self) -> &ComplexMatrix {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// 𝓛(ρ) as a matrix.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let v = self.generator.matvec(&rho.vectorize());
        ComplexMatrix::unvectorize(&v, self.n).expect("generator is n²×n²")
    }

    /// ‖vec(𝕀)ᵀ · G‖_∞, zero for a trace-preserving generator.
    pub fn trace_preservation_residual(&self) -> f64 {
        let n = self.n;
        (0..n * n)
            .map(|col| {
                (0..n)
                    .map(|k| self.generator[(k + k * n, col)])
                    .sum::<C64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// exp(t·G)
    ///
    /// Radiation generators built from a system propagate the dissipator
    /// numerically and the level phases exactly, which stays accurate when the
    /// level frequencies exceed the rates by many orders of magnitude.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        match &self.split {
            None => matrix_exp(&self.generator, C64::new(t, 0.0)),
            Some(split) => {
                let n = self.n;
                let mut p = matrix_exp(&split.dissipator, C64::new(t, 0.0));
                for r in 0..n {
                    for c in 0..n {
                        if r == c {
                            continue;
                        }
                        let phase = C64::from_polar(1.0, -(split.levels[r] - split.levels[c]) * t);
                        let row = r + c * n;
                        for k in 0..n * n {
                            p[(row, k)] *= phase;
                        }
                    }
                }
                p
            }
        }
    }

    /// All eigenvalues of the generator (complex Schur form).
    pub fn eigenvalues(&self) -> Vec<C64> {
        let m = self.generator.rows();
        let dm = DMatrix::from_fn(m, m, |r, c| {
            let z = self.generator[(r, c)];
            Complex::new(z.re, z.im)
        });
        let schur = nalgebra::Schur::new(dm);
        let (_, t) = schur.unpack();
        (0..m).map(|k| C64::new(t[(k, k)].re, t[(k, k)].im)).collect()
    }

    /// Smallest nonzero decay rate −Re λ over the generator's spectrum.
    ///
    /// Rates below `1e-10 · ‖G‖₁` are treated as the stationary mode. When
    /// the Hamiltonian part dominates the norm by many orders of magnitude
    /// prefer [`dissipative_gap`], which drops it.
    pub fn spectral_gap(&self) -> Result<f64> {
        gap_from_eigenvalues(self.eigenvalues(), self.generator.norm_1())
    }
}

fn gap_from_eigenvalues(eigs: impl IntoIterator<Item = C64>, scale: f64) -> Result<f64> {
    let threshold = 1e-10 * scale;
    eigs.into_iter()
        .map(|l| -l.re)
        .filter(|&rate| rate > threshold)
        .min_by(f64::total_cmp)
        .ok_or(Error::ZeroGap)
}

fn check_dims(sys: &QSystem, occ: &SpectralDensity) -> Result<()> {
    if sys.dim() != occ.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: occ.dim(),
        });
    }
    Ok(())
}

/// Adds rate · L_Q for Q = |a⟩⟨b| to a column-vectorized generator.
fn add_jump(gen: &mut ComplexMatrix, n: usize, a: usize, b: usize, rate: f64) {
    if rate == 0.0 {
        return;
    }
    let idx = |r: usize, c: usize| r + c * n;
    let r = C64::new(rate, 0.0);
    // 2QρQ† = 2ρ_bb |a⟩⟨a|
    gen[(idx(a, a), idx(b, b))] += r * 2.0;
    // −Q†Qρ − ρQ†Q with Q†Q = |b⟩⟨b|
    for m in 0..n {
        gen[(idx(b, m), idx(b, m))] -= r;
        gen[(idx(m, b), idx(m, b))] -= r;
    }
}

fn assemble(sys: &QSystem, occ: &SpectralDensity, with_hamiltonian: bool) -> Result<Liouvillian> {
    check_dims(sys, occ)?;
    let n = sys.dim();
    let mut dissipator = ComplexMatrix::zeros(n * n, n * n);
    for ((i, j), occupation) in occ.pairs() {
        let a = sys.einstein_a(i, j);
        add_jump(&mut dissipator, n, i, j, a * (occupation + 1.0));
        add_jump(&mut dissipator, n, j, i, a * occupation);
    }
    if !with_hamiltonian {
        return Liouvillian::from_generator(dissipator, n);
    }
    let h = sys.open_hamiltonian();
    let id = ComplexMatrix::identity(n);
    let comm = &id.kron(&h) - &h.transpose().kron(&id);
    let generator = &comm.scale(-I) + &dissipator;
    let levels = h.diagonal().iter().map(|z| z.re).collect();
    Ok(Liouvillian {
        generator,
        n,
        split: Some(Split { levels, dissipator }),
    })
}

/// Generator of the incoherent-radiation master equation for `sys` bathed in
/// the spectral density `occ`.
pub fn build_dissipator(sys: &QSystem, occ: &SpectralDensity) -> Result<Liouvillian> {
    assemble(sys, occ, true)
}

/// Spectral gap of the dissipative part alone.
///
/// For diagonal H₀ + H_eff on a generic system the commutator part only adds
/// imaginary shifts on the coherence sectors, so the decay rates are those
/// of the dissipator. Computing them without the (often huge) level
/// frequencies keeps the eigenvalues well conditioned.
pub fn dissipative_gap(sys: &QSystem, occ: &SpectralDensity) -> Result<f64> {
    let l = assemble(sys, occ, false)?;
    let g = l.generator();
    let m = g.rows();
    let real = DMatrix::from_fn(m, m, |r, c| g[(r, c)].re);
    let eigs: Vec<C64> = real
        .complex_eigenvalues()
        .iter()
        .map(|z| C64::new(z.re, z.im))
        .collect();
    gap_from_eigenvalues(eigs, g.norm_1())
}

/// Population transfer rates; `rates[i][j]` is the j → i rate for i ≠ j and
/// the diagonal holds minus the column sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMatrix {
    rates: Vec<Vec<f64>>,
}

impl RateMatrix {
    pub fn new(mut rates: Vec<Vec<f64>>) -> Result<Self> {
        let n = rates.len();
        for (i, row) in rates.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            if row.iter().enumerate().any(|(j, &w)| i != j && !(w >= 0.0 && w.is_finite())) {
                return Err(Error::InvalidInput(format!("negative or non-finite rate in row {i}")));
            }
        }
        for j in 0..n {
            let out: f64 = (0..n).filter(|&i| i != j).map(|i| rates[i][j]).sum();
            rates[j][j] = -out;
        }
        Ok(Self { rates })
    }

    pub fn rates(&self) -> &[Vec<f64>] {
        &self.rates
    }

    pub fn dim(&self) -> usize {
        self.rates.len()
    }

    /// dp/dt for population vector `p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.rates
            .iter()
            .map(|row| row.iter().zip(p).map(|(w, x)| w * x).sum())
            .collect()
    }
}

/// Pauli master equation rates from the dissipator expansion: 2A(n+1) for
/// j → i and 2An for i → j, i < j.
pub fn pauli_generator(sys: &QSystem, occ: &SpectralDensity) -> Result<RateMatrix> {
    check_dims(sys, occ)?;
    let n = sys.dim();
    let mut rates = vec![vec![0.0; n]; n];
    for ((i, j), occupation) in occ.pairs() {
        let a = sys.einstein_a(i, j);
        rates[i][j] = 2.0 * a * (occupation + 1.0);
        rates[j][i] = 2.0 * a * occupation;
    }
    RateMatrix::new(rates)
}

/// Γ_ln, the decay rate of the coherence ρ_ln. Symmetric, zero diagonal.
pub fn coherence_decay_rates(sys: &QSystem, occ: &SpectralDensity) -> Result<Vec<Vec<f64>>> {
    check_dims(sys, occ)?;
    let n = sys.dim();
    // Each jump Q = |a⟩⟨b| with rate r damps every coherence touching b by r.
    let mut damping = vec![0.0; n];
    for ((i, j), occupation) in occ.pairs() {
        let a = sys.einstein_a(i, j);
        damping[j] += a * (occupation + 1.0);
        damping[i] += a * occupation;
    }
    Ok((0..n)
        .map(|l| {
            (0..n)
                .map(|m| if l == m { 0.0 } else { damping[l] + damping[m] })
                .collect()
        })
        .collect())
}

/// Sampled time evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<(f64, DensityMatrix)>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn states(&self) -> impl Iterator<Item = &DensityMatrix> {
        self.samples.iter().map(|s| &s.1)
    }

    pub fn last(&self) -> &DensityMatrix {
        &self.samples.last().expect("trajectory is never empty").1
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// ρ(t_k) = exp(t_k·G) ρ₀ at `samples` equally spaced times from 0 to `t`.
pub fn propagate(gen: &Liouvillian, rho0: &DensityMatrix, t: f64, samples: usize) -> Result<Trajectory> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: rho0.dim(),
        });
    }
    if t == 0.0 {
        return Ok(Trajectory {
            samples: vec![(0.0, rho0.clone())],
        });
    }
    if samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples to span [0, t], got {samples}"
        )));
    }
    let n = gen.dim();
    let dt = t / (samples - 1) as f64;
    let step = gen.propagator(dt);
    let mut v = rho0.vectorize();
    let mut out = Vec::with_capacity(samples);
    out.push((0.0, rho0.clone()));
    for k in 1..samples {
        v = step.matvec(&v);
        let time = if k == samples - 1 { t } else { k as f64 * dt };
        let m = ComplexMatrix::unvectorize(&v, n)?;
        let rho = DensityMatrix::new(m).map_err(|e| {
            Error::Internal(format!("propagation left the state space at t = {time:e}: {e}"))
        })?;
        out.push((time, rho));
    }
    Ok(Trajectory { samples: out })
}

/// The unique state with 𝓛(ρ) = 0.
pub fn stationary_state(gen: &Liouvillian) -> Result<DensityMatrix> {
    let n = gen.dim();
    let g = gen.generator();
    let rank = numerical_rank(g, 1e-12);
    let kernel = n * n - rank;
    if kernel != 1 {
        return Err(if kernel == 0 {
            Error::Internal("generator has trivial kernel; not trace preserving".into())
        } else {
            Error::NonUniqueSteadyState(kernel)
        });
    }
    // Population rows sum to zero, so one of them can carry Tr ρ = 1.
    let mut system = g.clone();
    for c in 0..n * n {
        system[(0, c)] = ZERO;
    }
    for k in 0..n {
        system[(0, k + k * n)] = ONE;
    }
    let mut rhs = vec![ZERO; n * n];
    rhs[0] = ONE;
    let x = Lu::new(&system)?.solve_vec(&rhs);
    let m = ComplexMatrix::unvectorize(&x, n)?.hermitian_part();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr))
}

/// Radiative energy density per unit angular frequency, ħω·n·ω²/(π²c³),
/// in J·s/m³.
pub fn energy_density(omega: f64, n_omega: f64) -> Result<f64> {
    if !(omega > 0.0) || !(n_omega >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "need ω > 0 and n ≥ 0, got ω = {omega}, n = {n_omega}"
        )));
    }
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    Ok(HBAR * omega * n_omega * omega * omega / (pi2 * SPEED_OF_LIGHT.powi(3)))
}
