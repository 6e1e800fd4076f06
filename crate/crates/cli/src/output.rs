use std::fmt::Write as _;

use qsteer_core::engineering::{EngineeringPlan, EngineeringReport, PlanWarning, Stage2Mode};
use qsteer_core::linalg::{ComplexMatrix, C64};
use qsteer_core::state::{bloch_vector, DensityMatrix};
use serde::Serialize;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn element_label(n: usize, i: usize, j: usize) -> String {
    if n > 10 {
        format!("{i}_{j}")
    } else {
        format!("{i}{j}")
    }
}

pub fn csv_header(n: usize) -> Vec<String> {
    let mut cols = vec!["t_s".to_string(), "stage".to_string()];
    for i in 0..n {
        for j in i..n {
            let l = element_label(n, i, j);
            cols.push(format!("re_rho_{l}"));
            cols.push(format!("im_rho_{l}"));
        }
    }
    cols.push("obj_final".into());
    cols.push("obj_tilde".into());
    if n == 2 {
        cols.extend(["bloch_x", "bloch_y", "bloch_z"].map(String::from));
    }
    cols
}

pub fn trajectory_csv(report: &EngineeringReport) -> String {
    let n = report.final_state.dim();
    let mut out = csv_header(n).join(",");
    out.push('\n');
    for p in &report.trajectory {
        let m = p.state.matrix();
        let mut row = vec![num(p.t), p.stage.to_string()];
        for i in 0..n {
            for j in i..n {
                row.push(num(m[(i, j)].re));
                row.push(num(m[(i, j)].im));
            }
        }
        row.push(num(p.obj_final));
        row.push(num(p.obj_tilde));
        if n == 2 {
            let b = bloch_vector(&p.state).expect("two-level state");
            row.extend(b.iter().map(|x| num(*x)));
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

#[derive(Serialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| (0..m.rows()).map(|r| (0..m.cols()).map(|c| f(&m[(r, c)])).collect()).collect();
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl From<&DensityMatrix> for MatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        rho.matrix().into()
    }
}

#[derive(Serialize)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&Vec<C64>> for VectorJson {
    fn from(v: &Vec<C64>) -> Self {
        Self {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }
}

#[derive(Serialize)]
pub struct OccupationJson {
    pub i: usize,
    pub j: usize,
    pub occupation: f64,
}

#[derive(Serialize)]
pub struct PulseJson {
    pub amplitude_v_per_m: f64,
    pub carrier_rad_per_s: f64,
    pub duration_s: f64,
    pub phase_rad: f64,
    pub step_s: Option<f64>,
}

#[derive(Serialize)]
pub struct PlanJson {
    pub mode: Stage2Mode,
    pub target_spectrum: Vec<f64>,
    pub target_basis: Vec<VectorJson>,
    pub n_star: Vec<OccupationJson>,
    pub n_max: f64,
    pub stage1_duration_s: f64,
    pub spectral_gap_per_s: Option<f64>,
    pub stage2_unitary: MatrixJson,
    pub stage2_pulse: Option<PulseJson>,
    pub ideal_stage2_duration_s: f64,
    pub controllability_rank: Option<usize>,
    pub warnings: Vec<PlanWarning>,
}

impl From<&EngineeringPlan> for PlanJson {
    fn from(p: &EngineeringPlan) -> Self {
        Self {
            mode: p.mode,
            target_spectrum: p.p.clone(),
            target_basis: p.phi.iter().map(VectorJson::from).collect(),
            n_star: p
                .n_star
                .pairs()
                .map(|((i, j), occupation)| OccupationJson { i, j, occupation })
                .collect(),
            n_max: p.n_star.n_max(),
            stage1_duration_s: p.stage1_duration,
            spectral_gap_per_s: p.spectral_gap,
            stage2_unitary: p.stage2_unitary.matrix().into(),
            stage2_pulse: p.stage2_pulse.as_ref().map(|pulse| PulseJson {
                amplitude_v_per_m: pulse.amplitude,
                carrier_rad_per_s: pulse.carrier,
                duration_s: pulse.duration,
                phase_rad: pulse.phase,
                step_s: p.pulse_step,
            }),
            ideal_stage2_duration_s: p.ideal_stage2_duration,
            controllability_rank: p.controllability_rank,
            warnings: p.warnings.clone(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
