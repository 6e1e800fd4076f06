//! Operator-sum maps Φ(ρ) = Σ K_i ρ K_i† and the all-to-one map onto ρ_f.

use serde::Serialize;

use crate::engineering::{EngineeringPlan, Executor};
use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexMatrix, C64};
use crate::sampling::{random_initial_states, rng_from_seed};
use crate::state::{hs_distance, spectral_decomposition, DensityMatrix, QSystem};

pub const TRACE_PRESERVATION_TOL: f64 = 1e-10;
pub const CP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausMap {
    operators: Vec<ComplexMatrix>,
    n: usize,
}

impl KrausMap {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let map = Self::unchecked(operators)?;
        let residual = map.trace_preservation_residual();
        if residual > TRACE_PRESERVATION_TOL {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(map)
    }

    /// Accepts any square operator list of one dimension without checking
    /// Σ K†K = 𝕀, for auditing hand-built maps.
    pub fn unchecked(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidInput("a Kraus map needs at least one operator".into()))?;
        let n = first.rows();
        for k in &operators {
            if !k.is_square() || k.rows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: if k.rows() != n { k.rows() } else { k.cols() },
                });
            }
        }
        Ok(Self { operators, n })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// ‖Σ K_i†K_i − 𝕀‖_F
    pub fn trace_preservation_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::identity(self.n).scale_real(-1.0);
        for k in &self.operators {
            sum = &sum + &k.adjoint().matmul(k);
        }
        sum.frobenius_norm()
    }

    /// Drops operators whose Frobenius norm is at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let kept: Vec<_> = self.operators.iter().filter(|k| k.frobenius_norm() > tol).cloned().collect();
        if kept.is_empty() {
            return self.clone();
        }
        Self {
            operators: kept,
            n: self.n,
        }
    }

    /// Σ K_i X K_i† for an arbitrary square X.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.n || x.cols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.rows(),
            });
        }
        let mut out = ComplexMatrix::zeros(self.n, self.n);
        for k in &self.operators {
            out = &out + &k.matmul(x).matmul(&k.adjoint());
        }
        Ok(out)
    }
}

pub fn apply_map(phi: &KrausMap, rho: &DensityMatrix) -> Result<DensityMatrix> {
    DensityMatrix::new(phi.apply_matrix(rho.matrix())?)
}

/// K_ij = √p_i |φ_i⟩⟨j| over the spectral decomposition of ρ_f, indexed
/// i-major; zero operators are kept.
pub fn all_to_one_map(rho_f: &DensityMatrix) -> KrausMap {
    let n = rho_f.dim();
    let sd = spectral_decomposition(rho_f);
    let mut ops = Vec::with_capacity(n * n);
    for (p, phi) in sd.p.iter().zip(&sd.phi) {
        let amp = phi.iter().map(|z| z * p.sqrt()).collect::<Vec<_>>();
        for j in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            ops.push(ComplexMatrix::outer(&amp, &e));
        }
    }
    KrausMap::new(ops).expect("spectral operators of a valid state sum to the identity")
}

/// Anything acting linearly on n×n matrices.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn act(&self, x: &ComplexMatrix) -> ComplexMatrix;
}

impl LinearMap for KrausMap {
    fn dim(&self) -> usize {
        self.n
    }

    fn act(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.apply_matrix(x).expect("dimension fixed by the map")
    }
}

/// A raw matrix action with a declared dimension.
pub struct MatrixAction<F> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(&ComplexMatrix) -> ComplexMatrix> LinearMap for MatrixAction<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn act(&self, x: &ComplexMatrix) -> ComplexMatrix {
        (self.f)(x)
    }
}

/// C = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)
pub fn choi_matrix<M: LinearMap + ?Sized>(phi: &M) -> ComplexMatrix {
    let n = phi.dim();
    let mut c = ComplexMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let eij = ComplexMatrix::from_fn(n, n, |r, s| {
                if r == i && s == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            c = &c + &eij.kron(&phi.act(&eij));
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpReport {
    pub completely_positive: bool,
    pub min_eigenvalue: f64,
    /// Choi spectrum, ascending.
    pub choi_eigenvalues: Vec<f64>,
}

pub fn complete_positivity<M: LinearMap + ?Sized>(phi: &M) -> Result<CpReport> {
    let c = choi_matrix(phi);
    let eig = eigh(&c.hermitian_part())?;
    if c.hermiticity_error() > CP_TOL {
        return Ok(CpReport {
            completely_positive: false,
            min_eigenvalue: eig.values[0],
            choi_eigenvalues: eig.values,
        });
    }
    Ok(CpReport {
        completely_positive: eig.values[0] >= -CP_TOL,
        min_eigenvalue: eig.values[0],
        choi_eigenvalues: eig.values,
    })
}

pub fn is_completely_positive<M: LinearMap + ?Sized>(phi: &M) -> bool {
    complete_positivity(phi).map(|r| r.completely_positive).unwrap_or(false)
}

/// Largest distance between the executed scheme and Φ over seeded random
/// inputs.
pub fn compare_map_to_scheme(
    sys: &QSystem,
    plan: &EngineeringPlan,
    phi: &KrausMap,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if phi.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: phi.dim(),
        });
    }
    let exec = Executor::new(sys, plan, plan.mode, 2)?;
    let inputs = random_initial_states(&mut rng_from_seed(seed), sys.dim(), trials);
    let mut worst = 0.0f64;
    for rho in &inputs {
        worst = worst.max(hs_distance(&exec.final_state(rho)?, &apply_map(phi, rho)?)?);
    }
    Ok(worst)
}
