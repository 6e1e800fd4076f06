//! JSON scenario files. Every physical quantity carries its unit in the field
//! name; complex arrays are `{"re": ..., "im": ...}` with `im` optional.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use qsteer_core::engineering::{PlanConfig, Stage1Length, Stage2Mode, SplitStage1};
use qsteer_core::linalg::ComplexMatrix;
use qsteer_core::state::{density_from_pure, DensityMatrix, QSystem};
use qsteer_core::units::HBAR;
use serde::Deserialize;

#[derive(Debug)]
pub struct ParseError {
    pub context: String,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.context, self.message)
    }
}

impl std::error::Error for ParseError {}

fn field_error(field: &str, message: impl fmt::Display) -> ParseError {
    ParseError {
        context: format!("field `{field}`"),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexMatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl ComplexMatrixSpec {
    pub fn to_matrix(&self, field: &str) -> Result<ComplexMatrix, ParseError> {
        let n = self.re.len();
        let im = self.im.clone().unwrap_or_else(|| vec![vec![0.0; n]; n]);
        if im.len() != n {
            return Err(field_error(field, format!("`im` has {} rows, `re` has {n}", im.len())));
        }
        let mut rows = Vec::with_capacity(n);
        for (r, (re_row, im_row)) in self.re.iter().zip(&im).enumerate() {
            if re_row.len() != n || im_row.len() != n {
                return Err(field_error(field, format!("row {r} is not of length {n}")));
            }
            rows.push(re_row.iter().zip(im_row).map(|(a, b)| Complex64::new(*a, *b)).collect());
        }
        ComplexMatrix::from_rows(&rows).map_err(|e| field_error(field, e))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexVectorSpec {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Option<Vec<f64>>,
}

impl ComplexVectorSpec {
    fn to_vector(&self, field: &str) -> Result<Vec<Complex64>, ParseError> {
        let im = self.im.clone().unwrap_or_else(|| vec![0.0; self.re.len()]);
        if im.len() != self.re.len() {
            return Err(field_error(field, "`re` and `im` lengths differ"));
        }
        Ok(self.re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub energies_rad_per_s: Vec<f64>,
    /// Upper-triangular A_ij (i < j); other entries must be zero.
    pub einstein_a_per_s: Vec<Vec<f64>>,
    /// Transition dipole matrix; the coupling is −d/ħ per V/m.
    #[serde(default)]
    pub transition_dipole_c_m: Option<ComplexMatrixSpec>,
    /// Coupling V directly, in rad/s per V/m.
    #[serde(default)]
    pub coupling_rad_per_s_per_v_per_m: Option<ComplexMatrixSpec>,
    #[serde(default)]
    pub h_eff_rad_per_s: Option<Vec<f64>>,
}

impl SystemSpec {
    pub fn to_system(&self) -> Result<QSystem, ParseError> {
        let coupling = match (&self.transition_dipole_c_m, &self.coupling_rad_per_s_per_v_per_m) {
            (Some(d), None) => d.to_matrix("system.transition_dipole_c_m")?.scale_real(-1.0 / HBAR),
            (None, Some(v)) => v.to_matrix("system.coupling_rad_per_s_per_v_per_m")?,
            _ => {
                return Err(field_error(
                    "system",
                    "give exactly one of `transition_dipole_c_m` or `coupling_rad_per_s_per_v_per_m`",
                ))
            }
        };
        let sys = QSystem::new(self.energies_rad_per_s.clone(), coupling, self.einstein_a_per_s.clone())
            .map_err(|e| field_error("system", e))?;
        match &self.h_eff_rad_per_s {
            Some(d) => sys.with_h_eff(d.clone()).map_err(|e| field_error("system.h_eff_rad_per_s", e)),
            None => Ok(sys),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum StateSpec {
    /// Computational basis state |k⟩.
    Basis(usize),
    /// Unnormalized state vector.
    Pure(ComplexVectorSpec),
    Density(ComplexMatrixSpec),
    /// Diagonal density matrix.
    Populations(Vec<f64>),
}

impl StateSpec {
    pub fn to_state(&self, n: usize, field: &str) -> Result<DensityMatrix, ParseError> {
        let rho = match self {
            StateSpec::Basis(k) => DensityMatrix::basis(n, *k),
            StateSpec::Pure(v) => density_from_pure(&v.to_vector(field)?),
            StateSpec::Density(m) => DensityMatrix::new(m.to_matrix(field)?),
            StateSpec::Populations(p) => DensityMatrix::from_populations(p),
        }
        .map_err(|e| field_error(field, e))?;
        if rho.dim() != n {
            return Err(field_error(field, format!("state has dimension {}, system has {n}", rho.dim())));
        }
        Ok(rho)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage1Spec {
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub duration_s: Option<f64>,
    #[serde(default)]
    pub split: Option<SplitStage1>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemSpec,
    pub initial_state: StateSpec,
    pub target_state: StateSpec,
    #[serde(default)]
    pub stage1: Option<Stage1Spec>,
    #[serde(default)]
    pub mode: Option<Stage2Mode>,
    #[serde(default)]
    pub pulse_amplitude_v_per_m: Option<f64>,
    #[serde(default)]
    pub pulse_step_s: Option<f64>,
    #[serde(default)]
    pub ideal_stage2_duration_s: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub n_max: Option<f64>,
    #[serde(default)]
    pub threshold: Option<f64>,
}

/// A scenario resolved into library types.
pub struct Resolved {
    pub name: String,
    pub system: QSystem,
    pub initial: DensityMatrix,
    pub target: DensityMatrix,
    pub config: PlanConfig,
    pub samples: usize,
    pub seed: u64,
    pub threshold: Option<f64>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub mode: Option<Stage2Mode>,
    pub a: Option<f64>,
    pub n_max: Option<f64>,
    pub threshold: Option<f64>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| ParseError {
        context: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Resolved, ParseError> {
    let scenario: Scenario = read_json(path)?;
    resolve(scenario, path, overrides)
}

fn resolve(s: Scenario, path: &Path, o: &Overrides) -> Result<Resolved, ParseError> {
    let system = s.system.to_system()?;
    let n = system.dim();
    let initial = s.initial_state.to_state(n, "initial_state")?;
    let target = s.target_state.to_state(n, "target_state")?;

    let stage1_spec = s.stage1.unwrap_or(Stage1Spec {
        a: None,
        duration_s: None,
        split: None,
    });
    let stage1 = match (o.a, stage1_spec.a, stage1_spec.duration_s) {
        (Some(a), _, _) => Stage1Length::Relaxations(a),
        (None, Some(_), Some(_)) => {
            return Err(field_error("stage1", "give either `a` or `duration_s`, not both"));
        }
        (None, Some(a), None) => Stage1Length::Relaxations(a),
        (None, None, Some(t)) => Stage1Length::Duration(t),
        (None, None, None) => PlanConfig::default().stage1,
    };
    if let Stage1Length::Relaxations(a) = stage1 {
        if !(a >= 1.0) {
            return Err(field_error("stage1.a", format!("must be ≥ 1, got {a}")));
        }
    }
    let n_max = o.n_max.or(s.n_max).unwrap_or(PlanConfig::default().n_max);
    if !(n_max > 0.0 && n_max.is_finite()) {
        return Err(field_error("n_max", format!("must be positive and finite, got {n_max}")));
    }
    if let Some(e) = s.pulse_amplitude_v_per_m {
        if !(e > 0.0 && e.is_finite()) {
            return Err(field_error("pulse_amplitude_v_per_m", format!("must be positive, got {e}")));
        }
    }
    let samples = o.samples.or(s.samples).unwrap_or(qsteer_core::dynamics::DEFAULT_SAMPLES);
    if samples < 2 {
        return Err(field_error("samples", format!("need at least 2, got {samples}")));
    }
    let name = s.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|x| x.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into())
    });
    Ok(Resolved {
        name,
        system,
        initial,
        target,
        config: PlanConfig {
            stage1,
            n_max,
            mode: o.mode.or(s.mode),
            pulse_amplitude: s.pulse_amplitude_v_per_m,
            dt: s.pulse_step_s,
            split: stage1_spec.split,
            ideal_stage2_duration: s.ideal_stage2_duration_s,
        },
        samples,
        seed: s.seed.unwrap_or(0),
        threshold: o.threshold.or(s.threshold),
    })
}

/// A controllability query: either a full system or a raw (H₀, V) pair.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ControlFile {
    Pair {
        h0_rad_per_s: ComplexMatrixSpec,
        coupling_rad_per_s_per_v_per_m: ComplexMatrixSpec,
    },
    Wrapped {
        system: SystemSpec,
    },
    Bare(SystemSpec),
}

pub fn load_control_pair(path: &Path) -> Result<(ComplexMatrix, ComplexMatrix), ParseError> {
    let file: ControlFile = read_json(path)?;
    match file {
        ControlFile::Pair {
            h0_rad_per_s,
            coupling_rad_per_s_per_v_per_m,
        } => Ok((
            h0_rad_per_s.to_matrix("h0_rad_per_s")?,
            coupling_rad_per_s_per_v_per_m.to_matrix("coupling_rad_per_s_per_v_per_m")?,
        )),
        ControlFile::Wrapped { system } | ControlFile::Bare(system) => {
            let sys = system.to_system()?;
            Ok((sys.h0(), sys.coupling().clone()))
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TargetFile {
    Wrapped { target_state: StateSpec },
    Bare(StateSpec),
}

fn state_dim(spec: &StateSpec) -> Option<usize> {
    match spec {
        StateSpec::Basis(_) => None,
        StateSpec::Pure(v) => Some(v.re.len()),
        StateSpec::Density(m) => Some(m.re.len()),
        StateSpec::Populations(p) => Some(p.len()),
    }
}

pub fn load_target(path: &Path) -> Result<DensityMatrix, ParseError> {
    let file: TargetFile = read_json(path)?;
    let spec = match file {
        TargetFile::Wrapped { target_state } => target_state,
        TargetFile::Bare(s) => s,
    };
    let n = state_dim(&spec)
        .ok_or_else(|| field_error("target_state", "a basis index alone does not fix the dimension"))?;
    spec.to_state(n, "target_state")
}
