//! Two-stage steering of an arbitrary initial state into a target ρ_f.
//!
//! Stage 1 bathes the system in incoherent radiation with occupations
//! n*_ij = p_j/(p_i − p_j), whose unique fixed point is ρ̃_f = Σ p_i|i⟩⟨i|
//! (the target spectrum, descending, placed on ascending energies). Stage 2
//! switches the radiation off and rotates the energy basis onto the target
//! eigenbasis with U = Σ |φ_i⟩⟨i|, either as an ideal instantaneous unitary
//! or, for two-level systems, with a resonant pulse under the full drive.

use serde::{Deserialize, Serialize};

use crate::control::{
    basis_rotation_unitary, lie_algebra_rank, propagator_path, synthesize_two_level_pulse, Pulse,
    UnitaryOperator,
};
use crate::dynamics::{build_dissipator, dissipative_gap, SpectralDensity, DEFAULT_N_MAX, DEFAULT_SAMPLES};
use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, ComplexMatrix, C64};
use crate::sampling::{random_initial_states, rng_from_seed};
use crate::state::{hs_distance, spectral_decomposition, DensityMatrix, QSystem};

pub const DEFAULT_RELAXATIONS: f64 = 6.0;
pub const DEFAULT_PULSE_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_IDEAL_THRESHOLD: f64 = 1e-6;

/// Tolerance on Σp = 1 when accepting a target spectrum.
const SPECTRUM_SUM_TOL: f64 = 1e-9;

/// Occupations that make `p` (descending, on ascending levels) detailed
/// balanced: n_ij = p_j/(p_i − p_j), capped at `n_max` for (near) ties and
/// zero between two empty levels.
pub fn synthesize_spectral_density(p: &[f64], n_max: f64) -> Result<SpectralDensity> {
    if p.is_empty() {
        return Err(Error::InvalidSpectrum("empty spectrum".into()));
    }
    if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidSpectrum(format!("entry {x} is negative or not finite")));
    }
    if let Some(k) = (1..p.len()).find(|&k| p[k] > p[k - 1]) {
        return Err(Error::InvalidSpectrum(format!(
            "p[{k}] = {} exceeds p[{}] = {}",
            p[k],
            k - 1,
            p[k - 1]
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SPECTRUM_SUM_TOL {
        return Err(Error::InvalidSpectrum(format!("sum is {total}")));
    }
    SpectralDensity::from_fn(p.len(), n_max, |i, j| {
        let (hi, lo) = (p[i], p[j]);
        if hi > lo {
            (lo / (hi - lo)).min(n_max)
        } else if lo > 0.0 {
            n_max
        } else {
            0.0
        }
    })
}

/// Stage-1 duration a/λ_gap, where λ_gap is the slowest nonzero decay rate
/// of the generator. The slowest mode is then suppressed by e^{−a}.
pub fn stage1_duration(sys: &QSystem, occ: &SpectralDensity, a: f64) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(Error::InvalidInput(format!("relaxation multiple a must be ≥ 1, got {a}")));
    }
    Ok(a / dissipative_gap(sys, occ)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage1Length {
    /// a relaxation times 1/λ_gap.
    Relaxations(f64),
    /// Explicit duration in seconds.
    Duration(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage2Mode {
    Ideal,
    Pulse,
}

/// Decohere-then-balance variant of stage 1: the first `fraction` of the
/// duration runs under a uniform `occupation` on every transition, the rest
/// under n*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitStage1 {
    pub fraction: f64,
    pub occupation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanConfig {
    pub stage1: Stage1Length,
    pub n_max: f64,
    /// `None` picks pulse for two-level systems with a pulse amplitude and
    /// ideal otherwise.
    pub mode: Option<Stage2Mode>,
    /// Drive amplitude in the field units of the system coupling.
    pub pulse_amplitude: Option<f64>,
    /// Integration step for the pulse; defaults to the largest allowed.
    pub dt: Option<f64>,
    pub split: Option<SplitStage1>,
    /// Nominal duration over which the ideal unitary is drawn in trajectories;
    /// defaults to 1e-3 of stage 1.
    pub ideal_stage2_duration: Option<f64>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            stage1: Stage1Length::Relaxations(DEFAULT_RELAXATIONS),
            n_max: DEFAULT_N_MAX,
            mode: None,
            pulse_amplitude: None,
            dt: None,
            split: None,
            ideal_stage2_duration: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanWarning {
    /// Pulse mode was requested but {iH₀, iV} does not generate u(n); the
    /// plan fell back to an ideal unitary.
    Uncontrollable { rank: usize, required: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineeringPlan {
    pub n_star: SpectralDensity,
    pub stage1_duration: f64,
    /// Slowest nonzero decay rate under n*; `None` if the explicit duration
    /// was given for a generator without one.
    pub spectral_gap: Option<f64>,
    pub split: Option<SplitStage1>,
    pub stage2_unitary: UnitaryOperator,
    pub stage2_pulse: Option<Pulse>,
    pub pulse_step: Option<f64>,
    pub ideal_stage2_duration: f64,
    /// Target spectrum, descending.
    pub p: Vec<f64>,
    /// Target eigenbasis, φ_i belonging to p_i.
    pub phi: Vec<Vec<C64>>,
    pub mode: Stage2Mode,
    pub controllability_rank: Option<usize>,
    pub warnings: Vec<PlanWarning>,
}

impl EngineeringPlan {
    /// ρ̃_f = Σ p_i |i⟩⟨i|
    pub fn diagonal_target(&self) -> DensityMatrix {
        DensityMatrix::from_populations(&self.p).expect("plan spectrum is a valid distribution")
    }

    /// ρ_f = Σ p_i |φ_i⟩⟨φ_i|
    pub fn target(&self) -> DensityMatrix {
        let n = self.p.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (p, v) in self.p.iter().zip(&self.phi) {
            m = &m + &ComplexMatrix::outer(v, v).scale_real(*p);
        }
        DensityMatrix::new(m).expect("plan spectrum and basis form a valid state")
    }

    /// Fails if pulse mode had to be abandoned.
    pub fn require_feasible(&self) -> Result<()> {
        match self.warnings.first() {
            Some(PlanWarning::Uncontrollable { rank, required }) => Err(Error::Uncontrollable {
                rank: *rank,
                required: *required,
            }),
            None => Ok(()),
        }
    }
}

pub fn plan(sys: &QSystem, rho_f: &DensityMatrix, config: &PlanConfig) -> Result<EngineeringPlan> {
    let n = sys.dim();
    if rho_f.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rho_f.dim(),
        });
    }
    sys.check_generic()?;
    let sd = spectral_decomposition(rho_f);
    let n_star = synthesize_spectral_density(&sd.p, config.n_max)?;

    let (stage1_duration, spectral_gap) = match config.stage1 {
        Stage1Length::Relaxations(a) => {
            let gap = dissipative_gap(sys, &n_star)?;
            (stage1_duration(sys, &n_star, a)?, Some(gap))
        }
        Stage1Length::Duration(t) => {
            if !(t >= 0.0) {
                return Err(Error::NegativeTime(t));
            }
            (t, dissipative_gap(sys, &n_star).ok())
        }
    };
    if let Some(split) = config.split {
        if !(0.0..=1.0).contains(&split.fraction) || !(split.occupation >= 0.0) {
            return Err(Error::InvalidInput("split stage needs fraction in [0, 1] and occupation ≥ 0".into()));
        }
    }

    let stage2_unitary = basis_rotation_unitary(&sd.phi)?;
    let mode = config.mode.unwrap_or(if n == 2 && config.pulse_amplitude.is_some() {
        Stage2Mode::Pulse
    } else {
        Stage2Mode::Ideal
    });

    let mut warnings = Vec::new();
    let mut controllability_rank = None;
    let mut stage2_pulse = None;
    let mut pulse_step = None;
    let mut resolved_mode = mode;
    if mode == Stage2Mode::Pulse {
        if n != 2 {
            return Err(Error::ModeMismatch(format!(
                "pulse synthesis is only available for two-level systems (n = {n})"
            )));
        }
        let amplitude = config
            .pulse_amplitude
            .ok_or_else(|| Error::InvalidInput("pulse mode needs a pulse amplitude".into()))?;
        let rank = lie_algebra_rank(&sys.h0(), sys.coupling())?;
        controllability_rank = Some(rank);
        if rank < n * n {
            warnings.push(PlanWarning::Uncontrollable {
                rank,
                required: n * n,
            });
            resolved_mode = Stage2Mode::Ideal;
        } else {
            let synth = synthesize_two_level_pulse(sys, &sd.phi[0], amplitude, config.dt)?;
            pulse_step = Some(synth.step);
            stage2_pulse = Some(synth.pulse);
        }
    }

    let ideal_stage2_duration = config
        .ideal_stage2_duration
        .unwrap_or(if stage1_duration > 0.0 { 1e-3 * stage1_duration } else { 1.0 });

    Ok(EngineeringPlan {
        n_star,
        stage1_duration,
        spectral_gap,
        split: config.split,
        stage2_unitary,
        stage2_pulse,
        pulse_step,
        ideal_stage2_duration,
        p: sd.p,
        phi: sd.phi,
        mode: resolved_mode,
        controllability_rank,
        warnings,
    })
}

/// One sample of an executed plan.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// 1 (incoherent) or 2 (coherent).
    pub stage: u8,
    pub state: DensityMatrix,
    /// ‖ρ_t − ρ_f‖_F
    pub obj_final: f64,
    /// ‖ρ_t − ρ̃_f‖_F
    pub obj_tilde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineeringReport {
    pub trajectory: Vec<TrajectoryPoint>,
    pub stage1_final: DensityMatrix,
    pub final_state: DensityMatrix,
    pub final_error: f64,
}

impl EngineeringReport {
    /// (t, ‖ρ_t − ρ_f‖, ‖ρ_t − ρ̃_f‖) for every sample.
    pub fn objective_series(&self) -> Vec<(f64, f64, f64)> {
        self.trajectory.iter().map(|p| (p.t, p.obj_final, p.obj_tilde)).collect()
    }
}

struct Segment {
    step: ComplexMatrix,
    steps: usize,
    dt: f64,
}

/// A plan with its propagators precomputed, for running many initial states.
pub struct Executor {
    n: usize,
    stage1_segments: Vec<Segment>,
    stage1_total: ComplexMatrix,
    stage1_duration: f64,
    stage2_path: Vec<(f64, ComplexMatrix)>,
    final_unitary: ComplexMatrix,
    target: DensityMatrix,
    tilde: DensityMatrix,
}

impl Executor {
    pub fn new(sys: &QSystem, plan: &EngineeringPlan, mode: Stage2Mode, samples: usize) -> Result<Self> {
        let n = sys.dim();
        if plan.p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: plan.p.len(),
            });
        }
        if samples < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 samples per stage, got {samples}")));
        }
        let t1 = plan.stage1_duration;
        let mut pieces: Vec<(SpectralDensity, f64)> = Vec::new();
        match plan.split {
            Some(split) if split.fraction > 0.0 => {
                let decohere = SpectralDensity::from_fn(n, plan.n_star.n_max().max(split.occupation), |_, _| {
                    split.occupation
                })?;
                pieces.push((decohere, split.fraction * t1));
                pieces.push((plan.n_star.clone(), (1.0 - split.fraction) * t1));
            }
            _ => pieces.push((plan.n_star.clone(), t1)),
        }
        pieces.retain(|(_, d)| *d > 0.0);

        let mut stage1_segments = Vec::new();
        let mut stage1_total = ComplexMatrix::identity(n * n);
        for (occ, duration) in &pieces {
            let gen = build_dissipator(sys, occ)?;
            let share = ((samples - 1) as f64 * duration / t1).round().max(1.0) as usize;
            let dt = duration / share as f64;
            stage1_total = gen.propagator(*duration).matmul(&stage1_total);
            stage1_segments.push(Segment {
                step: gen.propagator(dt),
                steps: share,
                dt,
            });
        }

        let (stage2_path, final_unitary) = match mode {
            Stage2Mode::Pulse => {
                if n != 2 {
                    return Err(Error::ModeMismatch(format!("pulse mode needs n = 2, got {n}")));
                }
                let (pulse, dt) = match (&plan.stage2_pulse, plan.pulse_step) {
                    (Some(p), Some(dt)) => (p, dt),
                    _ => return Err(Error::ModeMismatch("plan carries no stage-2 pulse".into())),
                };
                let path = propagator_path(sys, pulse, dt, samples)?;
                let last = path.last().clone();
                (path.samples, last)
            }
            Stage2Mode::Ideal => {
                let u = plan.stage2_unitary.matrix().clone();
                let h = plan.stage2_unitary.generator()?;
                let tau = plan.ideal_stage2_duration;
                let path = (0..samples)
                    .map(|k| {
                        let s = k as f64 / (samples - 1) as f64;
                        let m = if k + 1 == samples { u.clone() } else { matrix_exp(&h, C64::new(0.0, -s)) };
                        (s * tau, m)
                    })
                    .collect();
                (path, u)
            }
        };

        Ok(Self {
            n,
            stage1_segments,
            stage1_total,
            stage1_duration: t1,
            stage2_path,
            final_unitary,
            target: plan.target(),
            tilde: plan.diagonal_target(),
        })
    }

    fn check(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: rho.dim(),
            });
        }
        Ok(())
    }

    fn to_state(&self, v: &[C64]) -> Result<DensityMatrix> {
        DensityMatrix::new(ComplexMatrix::unvectorize(v, self.n)?)
    }

    /// End-of-stage-1 state.
    pub fn stage1_state(&self, rho_i: &DensityMatrix) -> Result<DensityMatrix> {
        self.check(rho_i)?;
        self.to_state(&self.stage1_total.matvec(&rho_i.vectorize()))
    }

    /// Final state only, without a trajectory.
    pub fn final_state(&self, rho_i: &DensityMatrix) -> Result<DensityMatrix> {
        let mid = self.stage1_state(rho_i)?;
        DensityMatrix::new(mid.matrix().conjugate_by(&self.final_unitary))
    }

    pub fn run(&self, rho_i: &DensityMatrix) -> Result<EngineeringReport> {
        self.check(rho_i)?;
        let point = |t: f64, stage: u8, state: DensityMatrix| -> Result<TrajectoryPoint> {
            Ok(TrajectoryPoint {
                t,
                stage,
                obj_final: hs_distance(&state, &self.target)?,
                obj_tilde: hs_distance(&state, &self.tilde)?,
                state,
            })
        };

        let mut trajectory = vec![point(0.0, 1, rho_i.clone())?];
        let mut v = rho_i.vectorize();
        let mut t0 = 0.0;
        for (s, seg) in self.stage1_segments.iter().enumerate() {
            for k in 1..=seg.steps {
                v = seg.step.matvec(&v);
                let last_of_stage = s + 1 == self.stage1_segments.len() && k == seg.steps;
                let t = if last_of_stage { self.stage1_duration } else { t0 + k as f64 * seg.dt };
                trajectory.push(point(t, 1, self.to_state(&v)?)?);
            }
            t0 += seg.steps as f64 * seg.dt;
        }
        // The stepped and one-shot stage-1 propagators agree to rounding; the
        // one-shot product is the reference for the final state.
        let stage1_final = self.to_state(&self.stage1_total.matvec(&rho_i.vectorize()))?;
        if let Some(last) = trajectory.last_mut() {
            if self.stage1_duration > 0.0 {
                *last = point(last.t, 1, stage1_final.clone())?;
            }
        }

        for (t, u) in self.stage2_path.iter().skip(1) {
            let state = DensityMatrix::new(stage1_final.matrix().conjugate_by(u))?;
            trajectory.push(point(self.stage1_duration + t, 2, state)?);
        }
        let final_state = DensityMatrix::new(stage1_final.matrix().conjugate_by(&self.final_unitary))?;
        let final_error = hs_distance(&final_state, &self.target)?;
        Ok(EngineeringReport {
            trajectory,
            stage1_final,
            final_state,
            final_error,
        })
    }
}

/// Runs the plan from `rho_i` with [`DEFAULT_SAMPLES`] samples per stage.
pub fn execute(
    sys: &QSystem,
    rho_i: &DensityMatrix,
    plan: &EngineeringPlan,
    mode: Stage2Mode,
) -> Result<EngineeringReport> {
    Executor::new(sys, plan, mode, DEFAULT_SAMPLES)?.run(rho_i)
}

/// Largest pairwise Frobenius distance in a set of states.
pub fn max_pairwise_distance(states: &[DensityMatrix]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (a, x) in states.iter().enumerate() {
        for y in &states[a + 1..] {
            worst = worst.max(hs_distance(x, y)?);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllToOneReport {
    pub trials: usize,
    pub seed: u64,
    pub max_distance: f64,
    /// Largest ‖ρ_final − ρ_f‖ over the trials.
    pub max_final_error: f64,
}

/// Final-state spread of the plan over explicit initial states.
pub fn spread_over(sys: &QSystem, plan: &EngineeringPlan, initial: &[DensityMatrix]) -> Result<f64> {
    let exec = Executor::new(sys, plan, plan.mode, 2)?;
    let finals = initial
        .iter()
        .map(|rho| exec.final_state(rho))
        .collect::<Result<Vec<_>>>()?;
    max_pairwise_distance(&finals)
}

/// Executes the plan from `trials` seeded random initial states (alternating
/// pure and Hilbert–Schmidt mixed) and reports the final-state spread.
pub fn verify_all_to_one(sys: &QSystem, plan: &EngineeringPlan, trials: usize, seed: u64) -> Result<AllToOneReport> {
    if trials < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 trials, got {trials}")));
    }
    let initial = random_initial_states(&mut rng_from_seed(seed), sys.dim(), trials);
    let exec = Executor::new(sys, plan, plan.mode, 2)?;
    let target = plan.target();
    let finals = initial
        .iter()
        .map(|rho| exec.final_state(rho))
        .collect::<Result<Vec<_>>>()?;
    let max_final_error = finals
        .iter()
        .map(|f| hs_distance(f, &target))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(AllToOneReport {
        trials,
        seed,
        max_distance: max_pairwise_distance(&finals)?,
        max_final_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub cases: usize,
    pub seed: u64,
    pub max_final_error: f64,
}

/// Steers `cases` seeded random initial states into seeded random targets on
/// one system with ideal stage-2 unitaries; reports the worst final error.
pub fn controllability_sweep(
    sys: &QSystem,
    cases: usize,
    seed: u64,
    stage1: Stage1Length,
    n_max: f64,
) -> Result<SweepReport> {
    let mut rng = rng_from_seed(seed);
    let n = sys.dim();
    let config = PlanConfig {
        stage1,
        n_max,
        mode: Some(Stage2Mode::Ideal),
        ..PlanConfig::default()
    };
    let mut worst = 0.0f64;
    for k in 0..cases {
        let pair = random_initial_states(&mut rng, n, 2);
        // alternate which of the pair is pure so both roles see both kinds
        let (rho_i, rho_f) = if k % 2 == 0 { (&pair[0], &pair[1]) } else { (&pair[1], &pair[0]) };
        let p = plan(sys, rho_f, &config)?;
        let exec = Executor::new(sys, &p, Stage2Mode::Ideal, 2)?;
        worst = worst.max(hs_distance(&exec.final_state(rho_i)?, rho_f)?);
    }
    Ok(SweepReport {
        cases,
        seed,
        max_final_error: worst,
    })
}
