//! Mandelstam-Tamm bound and the geometric-phase speed limit.

use serde::{Deserialize, Serialize};

use crate::decomposition::AngleTrack;
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::phases::PhaseLedger;
use crate::tolerances::Tolerances;

pub const NOTE_CYCLIC: &str = "cyclic";
pub const NOTE_ZERO_VARIANCE: &str = "zero-variance";
pub const NOTE_F_BAR_DIVERGENT: &str = "f_bar-divergent";
pub const NOTE_SIGN_CONFLICT: &str = "outside derivation hypotheses";
pub const NOTE_LAB_UNDEFINED: &str = "lab phi_g undefined";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimitReport {
    #[serde(rename = "T")]
    pub t: f64,
    pub delta_h: f64,
    pub s0_final: f64,
    pub mt_bound: f64,
    /// `T / mt_bound`; `None` when the bound is zero.
    pub mt_saturation: Option<f64>,
    /// `None` when `tan(S0/2)` diverges on the grid.
    pub f_bar: Option<f64>,
    pub phi_g_rot: f64,
    pub phi_g_lab: Option<f64>,
    pub geometric_bound_rot: f64,
    pub geometric_bound_lab: Option<f64>,
    /// `T / geometric_bound_rot`; `None` when the bound is zero.
    pub geometric_saturation_rot: Option<f64>,
    pub sign_conflict_steps: usize,
    pub notes: Vec<String>,
}

impl SpeedLimitReport {
    pub fn mt_slack(&self) -> f64 {
        self.t - self.mt_bound
    }

    pub fn geometric_slack_rot(&self) -> f64 {
        self.t - self.geometric_bound_rot
    }

    pub fn has_note(&self, note: &str) -> bool {
        self.notes.iter().any(|n| n == note)
    }
}

/// Energy spread of a time-independent trajectory, checked constant along the grid.
pub fn energy_spread(traj: &Trajectory) -> Result<f64> {
    if !traj.schedule.is_time_independent() {
        return Err(Error::TimeDependentScheduleUnsupported);
    }
    let dh0 = traj.energy_variances[0].sqrt();
    let drift = traj.energy_variances.iter().fold(0.0f64, |m, v| m.max((v.sqrt() - dh0).abs()));
    if drift > 1e-9 * dh0.max(1.0) {
        return Err(Error::NumericalFailure(format!("energy spread drifts by {drift:e} under a constant Hamiltonian")));
    }
    Ok(dh0)
}

/// `hbar S0(T) / (2 dH)`. A closed path gives zero.
pub fn mandelstam_tamm_bound(traj: &Trajectory, angles: &AngleTrack) -> Result<f64> {
    mandelstam_tamm_bound_with(traj, angles, &Tolerances::default())
}

pub fn mandelstam_tamm_bound_with(traj: &Trajectory, angles: &AngleTrack, tol: &Tolerances) -> Result<f64> {
    let dh = energy_spread(traj)?;
    if dh <= tol.turn {
        return Err(Error::ZeroVariance);
    }
    let s0 = angles.final_s0();
    if s0 <= tol.node {
        return Ok(0.0);
    }
    Ok(traj.hbar() * s0 / (2.0 * dh))
}

/// Trapezoid time average of `tan(S0/2)`.
pub fn f_bar(angles: &AngleTrack) -> Result<f64> {
    f_bar_with(angles, &Tolerances::default())
}

pub fn f_bar_with(angles: &AngleTrack, tol: &Tolerances) -> Result<f64> {
    if angles.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: angles.len() });
    }
    if let Some(k) = angles.s0.iter().position(|&s| s >= std::f64::consts::PI - tol.node) {
        return Err(Error::TanDivergence { index: k, time: angles.times[k] });
    }
    let tan: Vec<f64> = angles.s0.iter().map(|s| (0.5 * s).tan()).collect();
    let mut integral = 0.0;
    for k in 0..tan.len() - 1 {
        integral += 0.5 * (tan[k] + tan[k + 1]) * (angles.times[k + 1] - angles.times[k]);
    }
    let span = angles.times[angles.len() - 1] - angles.times[0];
    if span <= 0.0 {
        return Err(Error::RangeMismatch("angle track spans zero time".into()));
    }
    Ok(integral / span)
}

/// `sum sin^2(S0_mid/2) dPhi` over phase steps.
pub fn rotating_geometric_phase(angles: &AngleTrack) -> f64 {
    angles.phase_steps().into_iter().map(|s| angles.weight_mid(s) * angles.phase_increment(s)).sum()
}

/// Steps where the lab-frame dynamical and geometric increments have opposite signs.
pub fn sign_conflicts(ledger: &PhaseLedger, tol: &Tolerances) -> usize {
    let n = ledger.phi_dynamical.len();
    (0..n.saturating_sub(1))
        .filter(|&k| {
            let (Some(g0), Some(g1)) = (ledger.phi_geometric[k], ledger.phi_geometric[k + 1]) else {
                return false;
            };
            let dd = ledger.phi_dynamical[k + 1] - ledger.phi_dynamical[k];
            let dg = g1 - g0;
            dd.abs() > tol.sign_noise && dg.abs() > tol.sign_noise && dd * dg < 0.0
        })
        .count()
}

fn bound(hbar: f64, phi_g: f64, dh: f64, f: f64) -> f64 {
    if phi_g == 0.0 || f.is_infinite() {
        0.0
    } else {
        hbar * phi_g.abs() / (dh * f)
    }
}

pub fn geometric_qsl(traj: &Trajectory, angles: &AngleTrack, ledger: &PhaseLedger) -> Result<SpeedLimitReport> {
    geometric_qsl_with(traj, angles, ledger, &Tolerances::default())
}

pub fn geometric_qsl_with(
    traj: &Trajectory,
    angles: &AngleTrack,
    ledger: &PhaseLedger,
    tol: &Tolerances,
) -> Result<SpeedLimitReport> {
    let t = traj.t_final() - traj.times[0];
    let hbar = traj.hbar();
    let dh = energy_spread(traj)?;
    let s0_final = angles.final_s0();
    let mut notes = Vec::new();
    let mt_bound = match mandelstam_tamm_bound_with(traj, angles, tol) {
        Ok(b) => b,
        Err(Error::ZeroVariance) => {
            notes.push(NOTE_ZERO_VARIANCE.to_string());
            0.0
        }
        Err(e) => return Err(e),
    };
    if s0_final <= tol.node {
        notes.push(NOTE_CYCLIC.to_string());
    }
    let f = match f_bar_with(angles, tol) {
        Ok(f) => Some(f),
        Err(Error::TanDivergence { .. }) => {
            notes.push(NOTE_F_BAR_DIVERGENT.to_string());
            None
        }
        Err(e) => return Err(e),
    };
    let sign_conflict_steps = sign_conflicts(ledger, tol);
    if sign_conflict_steps > 0 {
        notes.push(NOTE_SIGN_CONFLICT.to_string());
    }
    let phi_g_rot = rotating_geometric_phase(angles);
    let phi_g_lab = ledger.final_geometric();
    if phi_g_lab.is_none() {
        notes.push(NOTE_LAB_UNDEFINED.to_string());
    }
    let (geometric_bound_rot, geometric_bound_lab) = if dh <= tol.turn {
        (0.0, phi_g_lab.map(|_| 0.0))
    } else {
        let f_val = f.unwrap_or(f64::INFINITY);
        (bound(hbar, phi_g_rot, dh, f_val), phi_g_lab.map(|p| bound(hbar, p, dh, f_val)))
    };
    let ratio = |b: f64| if b > 0.0 { Some(t / b) } else { None };
    Ok(SpeedLimitReport {
        t,
        delta_h: dh,
        s0_final,
        mt_bound,
        mt_saturation: ratio(mt_bound),
        f_bar: f,
        phi_g_rot,
        phi_g_lab,
        geometric_bound_rot,
        geometric_bound_lab,
        geometric_saturation_rot: ratio(geometric_bound_rot),
        sign_conflict_steps,
        notes,
    })
}
