//! Coherent control: unitary dynamics under H₀ + u(t)V, the Lie-algebra
//! controllability test and two-level pulse synthesis.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{eigh, inner, matrix_exp, ComplexMatrix, C64, I};
use crate::state::{DensityMatrix, QSystem};
use crate::units::HBAR;

/// Carrier samples required per period by [`propagate_coherent`].
pub const SAMPLES_PER_PERIOD: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Constant,
}

/// u(t) = amplitude · cos(carrier · t + phase) for 0 ≤ t ≤ duration, with t
/// measured from the start of the pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub amplitude: f64,
    pub carrier: f64,
    pub duration: f64,
    pub phase: f64,
    pub envelope: Envelope,
}

impl Pulse {
    pub fn new(amplitude: f64, carrier: f64, duration: f64, phase: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !(duration >= 0.0) || !carrier.is_finite() || !phase.is_finite() {
            return Err(Error::InvalidInput(format!(
                "pulse needs amplitude ≥ 0 and duration ≥ 0 (got {amplitude}, {duration})"
            )));
        }
        Ok(Self {
            amplitude,
            carrier,
            duration,
            phase,
            envelope: Envelope::Constant,
        })
    }

    pub fn field(&self, t: f64) -> f64 {
        match self.envelope {
            Envelope::Constant => self.amplitude * (self.carrier * t + self.phase).cos(),
        }
    }
}

/// Tolerance on ‖U†U − 𝕀‖ accepted by [`UnitaryOperator::new`].
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    matrix: ComplexMatrix,
}

impl UnitaryOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARY_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                found: matrix.cols(),
            });
        }
        let err = unitarity_error(&matrix);
        if err > tol {
            return Err(Error::InvalidInput(format!("matrix is not unitary (deviation {err:e})")));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Hermitian H with exp(−iH) = U and spectrum in (−π, π].
    pub fn generator(&self) -> Result<ComplexMatrix> {
        let u = &self.matrix;
        let n = u.rows();
        let ud = u.adjoint();
        let cos_part = (u + &ud).scale_real(0.5);
        let sin_part = (u - &ud).scale(C64::new(0.0, -0.5));
        // A generic combination of the two commuting Hermitian parts separates
        // eigenvalues of U that share a real or imaginary part.
        for mix in [0.618_033_988_749_894_9, 0.302_775_637_731_995, 1.732_050_807_568_877] {
            let probe = &cos_part + &sin_part.scale_real(mix);
            let eig = eigh(&probe)?;
            let w = &eig.vectors;
            let angles: Vec<f64> = (0..n)
                .map(|k| {
                    let col = w.column(k);
                    let c = inner(&col, &cos_part.matvec(&col)).re;
                    let s = inner(&col, &sin_part.matvec(&col)).re;
                    s.atan2(c)
                })
                .collect();
            let h = ComplexMatrix::diag_real(&angles.iter().map(|a| -a).collect::<Vec<_>>()).conjugate_by(w);
            let h = h.hermitian_part();
            if (&matrix_exp(&h, -I) - u).max_abs() < 1e-9 {
                return Ok(h);
            }
        }
        Err(Error::Internal("could not resolve the eigenbasis of the unitary".into()))
    }
}

/// ‖U†U − 𝕀‖_F
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    (&u.adjoint().matmul(u) - &ComplexMatrix::identity(u.rows())).frobenius_norm()
}

/// U ρ U†
pub fn apply_unitary(u: &UnitaryOperator, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if u.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: rho.dim(),
        });
    }
    DensityMatrix::new(rho.matrix().conjugate_by(u.matrix()))
}

/// U = Σ_i |φ_i⟩⟨i|, i.e. the φ_i as columns.
pub fn basis_rotation_unitary(phi: &[Vec<C64>]) -> Result<UnitaryOperator> {
    let n = phi.len();
    if let Some(v) = phi.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let mut deviation = 0.0f64;
    for (a, u) in phi.iter().enumerate() {
        for (b, v) in phi.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            deviation = deviation.max((inner(u, v) - target).norm());
        }
    }
    if deviation > 1e-10 {
        return Err(Error::NotOrthonormal { deviation });
    }
    UnitaryOperator::new(ComplexMatrix::from_columns(phi)?)
}

/// Largest time step resolving both the carrier and the free evolution.
pub fn max_step(sys: &QSystem, pulse: &Pulse) -> f64 {
    let h0_norm = sys.energies().iter().map(|e| e.abs()).fold(0.0, f64::max);
    let fastest = pulse.carrier.abs().max(h0_norm);
    if fastest == 0.0 {
        f64::INFINITY
    } else {
        TAU / (SAMPLES_PER_PERIOD * fastest)
    }
}

/// Propagators U(t_k) sampled along a pulse.
#[derive(Debug, Clone)]
pub struct PropagatorPath {
    pub samples: Vec<(f64, ComplexMatrix)>,
    pub steps: usize,
}

impl PropagatorPath {
    pub fn last(&self) -> &ComplexMatrix {
        &self.samples.last().expect("path is never empty").1
    }
}

/// Time-ordered product of midpoint exponentials
/// U_{k+1} = exp(−i(H₀ + u(t_k + h/2)V) h) U_k under the full cosine drive,
/// with h = duration / ⌈duration / dt⌉. `samples` propagators are kept at
/// (approximately) uniformly spaced steps including both ends.
pub fn propagator_path(sys: &QSystem, pulse: &Pulse, dt: f64, samples: usize) -> Result<PropagatorPath> {
    let limit = max_step(sys, pulse);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::StepTooCoarse { dt, max: limit });
    }
    let n = sys.dim();
    let mut u = ComplexMatrix::identity(n);
    if pulse.duration == 0.0 {
        return Ok(PropagatorPath {
            samples: vec![(0.0, u)],
            steps: 0,
        });
    }
    if samples < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 samples, got {samples}")));
    }
    let steps = (pulse.duration / dt).ceil() as usize;
    let h = pulse.duration / steps as f64;
    let h0 = sys.h0();
    let v = sys.coupling();

    let mut keep: Vec<usize> = (0..samples)
        .map(|s| ((s as f64) * steps as f64 / (samples - 1) as f64).round() as usize)
        .collect();
    keep.dedup();
    let mut next_keep = 0;
    let mut out = Vec::with_capacity(keep.len());
    if keep[0] == 0 {
        out.push((0.0, u.clone()));
        next_keep = 1;
    }
    for k in 0..steps {
        let mid = (k as f64 + 0.5) * h;
        let hamiltonian = &h0 + &v.scale_real(pulse.field(mid));
        let step = matrix_exp(&hamiltonian, C64::new(0.0, -h));
        u = step.matmul(&u);
        if next_keep < keep.len() && keep[next_keep] == k + 1 {
            let t = if k + 1 == steps { pulse.duration } else { (k + 1) as f64 * h };
            out.push((t, u.clone()));
            next_keep += 1;
        }
    }
    let drift = unitarity_error(&u);
    if drift > 1e-8 {
        return Err(Error::Internal(format!("propagator lost unitarity ({drift:e})")));
    }
    Ok(PropagatorPath { samples: out, steps })
}

/// ρ(t) = U(t) ρ₀ U(t)† along the pulse.
pub fn propagate_coherent(
    sys: &QSystem,
    pulse: &Pulse,
    rho0: &DensityMatrix,
    dt: f64,
    samples: usize,
) -> Result<Trajectory> {
    if rho0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: rho0.dim(),
        });
    }
    let path = propagator_path(sys, pulse, dt, samples)?;
    let samples = path
        .samples
        .iter()
        .map(|(t, u)| Ok((*t, DensityMatrix::new(rho0.matrix().conjugate_by(u))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { samples })
}

/// Rotating-wave estimate t_π = πħ/(μE) of a resonant π-pulse.
///
/// Only a starting point; the full cosine drive shifts the optimum slightly
/// (see [`synthesize_two_level_pulse`]).
pub fn pi_pulse_duration(sys: &QSystem, field: f64, dipole: f64) -> Result<f64> {
    if sys.dim() != 2 {
        return Err(Error::NotTwoLevel(sys.dim()));
    }
    if !(field > 0.0) || !(dipole > 0.0) {
        return Err(Error::InvalidInput(format!(
            "field and dipole must be positive (got {field}, {dipole})"
        )));
    }
    Ok(PI * HBAR / (dipole * field))
}

/// Dimension of the real Lie algebra generated by {iH₀, iV}.
///
/// Global phases act trivially on density matrices, so when the traceless
/// parts already generate su(n) the algebra is reported as the full u(n),
/// dimension n². Otherwise the literal dimension is returned.
pub fn lie_algebra_rank(h0: &ComplexMatrix, v: &ComplexMatrix) -> Result<usize> {
    if !h0.is_square() || !v.is_square() || h0.rows() != v.rows() {
        return Err(Error::DimensionMismatch {
            expected: h0.rows(),
            found: v.rows(),
        });
    }
    for m in [h0, v] {
        let dev = m.hermiticity_error();
        if dev > 1e-12 * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
    }
    let n = h0.rows();
    let gens: Vec<ComplexMatrix> = [h0, v].iter().map(|m| m.scale(I)).collect();
    let traceless: Vec<ComplexMatrix> = gens
        .iter()
        .map(|g| {
            let shift = g.trace() / n as f64;
            g - &ComplexMatrix::identity(n).scale(shift)
        })
        .collect();
    if lie_closure_dimension(&traceless, n)? == n * n - 1 {
        return Ok(n * n);
    }
    lie_closure_dimension(&gens, n)
}

/// Directions whose residual after projection falls below this (for unit
/// norm elements) are linearly dependent on the current span.
const RANK_TOL: f64 = 1e-9;

struct RealSpan {
    basis: Vec<Vec<f64>>,
}

impl RealSpan {
    fn coords(m: &ComplexMatrix) -> Vec<f64> {
        m.as_slice().iter().map(|z| z.re).chain(m.as_slice().iter().map(|z| z.im)).collect()
    }

    /// Adds the component of `m` orthogonal to the span; returns it as a unit
    /// matrix when it is a new direction.
    fn try_add(&mut self, m: &ComplexMatrix) -> Option<ComplexMatrix> {
        let mut x = Self::coords(m);
        for _ in 0..2 {
            for b in &self.basis {
                let d: f64 = b.iter().zip(&x).map(|(p, q)| p * q).sum();
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= d * bi;
                }
            }
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= RANK_TOL {
            return None;
        }
        for xi in &mut x {
            *xi /= norm;
        }
        let half = x.len() / 2;
        let data = (0..half).map(|k| C64::new(x[k], x[half + k])).collect();
        self.basis.push(x);
        Some(ComplexMatrix::from_vec(m.rows(), m.cols(), data).expect("same shape"))
    }
}

fn lie_closure_dimension(gens: &[ComplexMatrix], n: usize) -> Result<usize> {
    let mut span = RealSpan { basis: Vec::new() };
    let mut elements: Vec<ComplexMatrix> = Vec::new();
    for g in gens {
        let norm = g.frobenius_norm();
        if norm == 0.0 {
            continue;
        }
        if let Some(e) = span.try_add(&g.scale_real(1.0 / norm)) {
            elements.push(e);
        }
    }
    let cap = n.pow(4).max(1);
    let mut evaluated = 0usize;
    let mut k = 0;
    while k < elements.len() {
        for j in 0..k {
            evaluated += 1;
            if evaluated > cap {
                return Err(Error::Internal("Lie closure exceeded n⁴ commutators".into()));
            }
            let c = ComplexMatrix::commutator(&elements[j], &elements[k]);
            if let Some(e) = span.try_add(&c) {
                elements.push(e);
            }
        }
        k += 1;
    }
    Ok(elements.len())
}

/// Outcome of [`synthesize_two_level_pulse`].
#[derive(Debug, Clone)]
pub struct SynthesizedPulse {
    pub pulse: Pulse,
    /// Rotating-wave duration before refinement.
    pub rwa_duration: f64,
    pub step: f64,
}

/// Designs a resonant constant-envelope pulse on a two-level system whose
/// propagator sends |0⟩ to `target` up to a global phase.
///
/// The rotating-wave solution fixes the rotation angle and drive phase; the
/// duration is then refined by scanning the full-drive propagation around
/// that estimate for the best match of the |0⟩ population, and the phase is
/// corrected from the resulting azimuth error.
pub fn synthesize_two_level_pulse(
    sys: &QSystem,
    target: &[C64],
    amplitude: f64,
    dt: Option<f64>,
) -> Result<SynthesizedPulse> {
    if sys.dim() != 2 {
        return Err(Error::NotTwoLevel(sys.dim()));
    }
    if target.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: target.len(),
        });
    }
    if !(amplitude > 0.0) {
        return Err(Error::InvalidInput(format!("pulse amplitude must be positive, got {amplitude}")));
    }
    let coupling = sys.coupling()[(0, 1)];
    let carrier = sys.transition_frequency(0, 1);
    let rabi = amplitude * coupling.norm();
    if rabi == 0.0 {
        return Err(Error::Uncontrollable { rank: 0, required: 4 });
    }
    let norm = (target[0].norm_sqr() + target[1].norm_sqr()).sqrt();
    let (c0, c1) = (target[0].norm() / norm, target[1].norm() / norm);
    let angle = 2.0 * c1.atan2(c0);
    let azimuth = target[1].arg() - target[0].arg();
    let eta = coupling.arg();

    let probe = Pulse::new(amplitude, carrier, 0.0, 0.0)?;
    let step = dt.unwrap_or_else(|| max_step(sys, &probe));
    let rwa_duration = angle / rabi;
    let phase_for = |duration: f64| wrap_angle(-PI / 2.0 - carrier * duration - azimuth - eta);

    if rwa_duration == 0.0 {
        return Ok(SynthesizedPulse {
            pulse: Pulse::new(amplitude, carrier, 0.0, 0.0)?,
            rwa_duration,
            step,
        });
    }

    // Scan the |0⟩ population over a window around the estimate.
    let target_pop = c0 * c0;
    let window = Pulse::new(amplitude, carrier, 1.25 * rwa_duration, phase_for(rwa_duration))?;
    let steps = (window.duration / step).ceil().max(1.0) as usize;
    let path = propagator_path(sys, &window, step, steps + 1)?;
    let lo = 0.75 * rwa_duration;
    let (best_t, _) = path
        .samples
        .iter()
        .filter(|(t, _)| *t >= lo)
        .map(|(t, u)| (*t, (u[(0, 0)].norm_sqr() - target_pop).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((rwa_duration, 0.0));

    let mut pulse = Pulse::new(amplitude, carrier, best_t, phase_for(best_t))?;
    // The relative phase of U|0⟩ only matters when both amplitudes are present.
    if c0 > 1e-3 && c1 > 1e-3 {
        for _ in 0..3 {
            let u = propagator_path(sys, &pulse, step, 2)?;
            let col = u.last().column(0);
            let err = wrap_angle(col[1].arg() - col[0].arg() - azimuth);
            if err.abs() < 1e-12 {
                break;
            }
            pulse.phase = wrap_angle(pulse.phase + err);
        }
    }
    Ok(SynthesizedPulse {
        pulse,
        rwa_duration,
        step,
    })
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    fn pauli(name: char) -> ComplexMatrix {
        match name {
            'x' => ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap(),
            'y' => ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap(),
            'z' => ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap(),
            _ => unreachable!(),
        }
    }

    fn two_level(omega: f64, coupling: f64) -> QSystem {
        let v = pauli('x').scale_real(coupling);
        QSystem::new(vec![0.0, omega], v, vec![vec![0.0; 2]; 2]).unwrap()
    }

    #[test]
    fn lie_rank_examples() {
        assert_eq!(lie_algebra_rank(&pauli('z'), &pauli('x')).unwrap(), 4);
        assert_eq!(lie_algebra_rank(&pauli('z'), &pauli('z')).unwrap(), 1);
        let ladder_h = ComplexMatrix::diag_real(&[0.0, 1.0, 2.5]);
        let ladder_v = ComplexMatrix::from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.7], &[0.0, 0.7, 0.0]]).unwrap();
        assert_eq!(lie_algebra_rank(&ladder_h, &ladder_v).unwrap(), 9);
    }

    #[test]
    fn lie_rank_of_diagonal_pair() {
        let h = ComplexMatrix::diag_real(&[0.0, 1.0]);
        let v = ComplexMatrix::diag_real(&[2.0, 5.0]);
        assert_eq!(lie_algebra_rank(&h, &v).unwrap(), 2);
    }

    #[test]
    fn lie_rank_rejects_non_hermitian() {
        let bad = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(lie_algebra_rank(&pauli('z'), &bad), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn basis_rotation_examples() {
        let id = basis_rotation_unitary(&[vec![ONE, ZERO], vec![ZERO, ONE]]).unwrap();
        assert_eq!(id.matrix(), &ComplexMatrix::identity(2));
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let h = basis_rotation_unitary(&[vec![s, s], vec![s, -s]]).unwrap();
        let expected = ComplexMatrix::from_rows(&[vec![s, s], vec![s, -s]]).unwrap();
        assert_eq!(h.matrix(), &expected);
        assert!(matches!(
            basis_rotation_unitary(&[vec![ONE, ZERO], vec![ONE, ZERO]]),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn apply_unitary_examples() {
        let rho = DensityMatrix::from_populations(&[0.75, 0.25]).unwrap();
        let same = apply_unitary(&UnitaryOperator::identity(2), &rho).unwrap();
        assert_eq!(same, rho);
        let x = UnitaryOperator::new(pauli('x')).unwrap();
        let flipped = apply_unitary(&x, &rho).unwrap();
        assert_eq!(flipped.populations(), vec![0.25, 0.75]);
        assert!(apply_unitary(&x, &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn pi_pulse_duration_values() {
        let sys = two_level(4.5e15, 1.0);
        let t = pi_pulse_duration(&sys, 1e7, 2.4e-29).unwrap();
        assert!((t - 1.381e-12).abs() < 1e-15, "{t:e}");
        let half = pi_pulse_duration(&sys, 2e7, 2.4e-29).unwrap();
        assert!((half - t / 2.0).abs() < 1e-27);
        let fast = pi_pulse_duration(&sys, 1e9, 2.4e-29).unwrap();
        assert!((fast - 13.8e-15).abs() < 0.1e-15, "{fast:e}");
        let three = QSystem::new(vec![0.0, 1.0, 2.5], ComplexMatrix::zeros(3, 3), vec![vec![0.0; 3]; 3]).unwrap();
        assert!(matches!(pi_pulse_duration(&three, 1e7, 2.4e-29), Err(Error::NotTwoLevel(3))));
    }

    #[test]
    fn free_evolution_keeps_populations() {
        let sys = two_level(10.0, 1.0);
        let pulse = Pulse::new(0.0, 10.0, 3.0, 0.0).unwrap();
        let s = C64::new(0.6, 0.0);
        let rho0 = crate::state::density_from_pure(&[s, C64::new(0.0, 0.8)]).unwrap();
        let dt = max_step(&sys, &pulse);
        let traj = propagate_coherent(&sys, &pulse, &rho0, dt, 50).unwrap();
        for (t, rho) in &traj.samples {
            let p = rho.populations();
            assert!((p[0] - 0.36).abs() < 1e-12 && (p[1] - 0.64).abs() < 1e-12);
            // ρ₀₁(t) = e^{iωt} ρ₀₁(0) for H₀ = diag(0, ω)
            let expected = rho0.matrix()[(0, 1)] * C64::from_polar(1.0, 10.0 * t);
            assert!((rho.matrix()[(0, 1)] - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn coarse_step_is_rejected() {
        let sys = two_level(10.0, 1.0);
        let pulse = Pulse::new(1.0, 10.0, 1.0, 0.0).unwrap();
        let limit = max_step(&sys, &pulse);
        let rho = DensityMatrix::basis(2, 0).unwrap();
        assert!(matches!(
            propagate_coherent(&sys, &pulse, &rho, 2.0 * limit, 10),
            Err(Error::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn generator_reproduces_unitary() {
        let u = crate::sampling::random_unitary(&mut crate::sampling::rng_from_seed(4), 3);
        let op = UnitaryOperator::new(u.clone()).unwrap();
        let h = op.generator().unwrap();
        assert!(h.hermiticity_error() < 1e-12);
        assert!((&matrix_exp(&h, -I) - &u).max_abs() < 1e-9);
        // degenerate spectrum: 𝕀 and σ_x
        for m in [ComplexMatrix::identity(2), pauli('x')] {
            let h = UnitaryOperator::new(m.clone()).unwrap().generator().unwrap();
            assert!((&matrix_exp(&h, -I) - &m).max_abs() < 1e-9);
        }
    }

    #[test]
    fn synthesized_pulse_reaches_superposition() {
        // Ω/ω = 1e-3: close to the rotating-wave regime
        let sys = two_level(1000.0, 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let target = [C64::new(s, 0.0), C64::new(0.0, s)];
        let synth = synthesize_two_level_pulse(&sys, &target, 1.0, None).unwrap();
        let path = propagator_path(&sys, &synth.pulse, synth.step, 2).unwrap();
        let col = path.last().column(0);
        let overlap = inner(&target, &col).norm();
        assert!(overlap > 1.0 - 1e-5, "overlap {overlap}");
    }
}
