//! Orthogonal split of an evolved state against the initial state.
//!
//! `U|psi> = <U>|psi> + dU |psibar(U)>` with `|psibar>` orthogonal to `|psi>`,
//! and along a trajectory
//! `|psi(t)> = cos(S0/2) e^{i Phi} |psi(0)> + sin(S0/2) |psibar_0(t)>`.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::numerics::{max_abs_vec, ray_angle, ComplexVector, QuantumState, C64};
use crate::tolerances::Tolerances;

/// What to do when the overlap with the initial state vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodePolicy {
    /// Flag the sample and continue the phase across it.
    #[default]
    Continue,
    /// Fail with [`Error::NodeEncountered`].
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryDecomposition {
    /// `<psi|U|psi>`.
    pub mean: C64,
    /// `sqrt(1 - |<U>|^2)`.
    pub delta: f64,
    /// Absent when `delta` is below the node tolerance.
    pub orthogonal: Option<QuantumState>,
}

impl UnitaryDecomposition {
    /// `|| <U> psi + dU psibar - U psi ||_max`.
    pub fn reconstruction_residual(&self, psi: &QuantumState, u_psi: &QuantumState) -> f64 {
        let mut rebuilt = psi.amplitudes() * self.mean;
        if let Some(orth) = &self.orthogonal {
            rebuilt += orth.amplitudes() * C64::new(self.delta, 0.0);
        }
        max_abs_vec(&(rebuilt - u_psi.amplitudes()))
    }
}

fn check_unit(psi: &QuantumState, tol: &Tolerances) -> Result<()> {
    let norm = psi.amplitudes().norm();
    if (norm - 1.0).abs() > tol.normalization {
        return Err(Error::UnnormalizedState { norm });
    }
    Ok(())
}

/// Splits `u_psi` into its component along `psi` and a normalized orthogonal remainder.
///
/// `delta` is taken as the norm of the remainder, which equals
/// `sqrt(1 - |mean|^2)` for unit vectors but does not cancel catastrophically
/// when `|mean|` is close to one.
pub fn decompose_unitary_action(psi: &QuantumState, u_psi: &QuantumState) -> Result<UnitaryDecomposition> {
    decompose_unitary_action_with(psi, u_psi, &Tolerances::default())
}

pub fn decompose_unitary_action_with(
    psi: &QuantumState,
    u_psi: &QuantumState,
    tol: &Tolerances,
) -> Result<UnitaryDecomposition> {
    psi.check_same_dim(u_psi)?;
    check_unit(psi, tol)?;
    check_unit(u_psi, tol)?;
    let mean = psi.inner(u_psi);
    let perp: ComplexVector = u_psi.amplitudes() - psi.amplitudes() * mean;
    let delta = perp.norm();
    let orthogonal = (delta > tol.node).then(|| QuantumState::from_unitary_image(perp / C64::new(delta, 0.0)));
    Ok(UnitaryDecomposition { mean, delta, orthogonal })
}

/// Bargmann angle and unwrapped Pancharatnam phase along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleTrack {
    pub times: Vec<f64>,
    /// `S0(t_k)` in `[0, pi]`.
    pub s0: Vec<f64>,
    /// Unwrapped `Phi(t_k)`, `None` at nodes.
    pub phi_total: Vec<Option<f64>>,
    pub node_flags: Vec<bool>,
}

/// A step between two consecutive samples at which the phase is defined.
/// `to - from` is 1 except across nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseStep {
    pub from: usize,
    pub to: usize,
}

impl AngleTrack {
    pub fn len(&self) -> usize {
        self.s0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s0.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.node_flags.iter().filter(|&&n| n).count()
    }

    /// Consecutive pairs of non-node samples.
    pub fn phase_steps(&self) -> Vec<PhaseStep> {
        let defined: Vec<usize> = (0..self.len()).filter(|&k| !self.node_flags[k]).collect();
        defined.windows(2).map(|w| PhaseStep { from: w[0], to: w[1] }).collect()
    }

    /// `Phi(to) - Phi(from)` for a phase step.
    pub fn phase_increment(&self, step: PhaseStep) -> f64 {
        self.phi_total[step.to].unwrap() - self.phi_total[step.from].unwrap()
    }

    /// `S0` at the step midpoint (mean of the endpoint angles).
    pub fn s0_mid(&self, step: PhaseStep) -> f64 {
        0.5 * (self.s0[step.from] + self.s0[step.to])
    }

    /// `sin^2(S0/2)` at the step midpoint.
    pub fn weight_mid(&self, step: PhaseStep) -> f64 {
        (0.5 * self.s0_mid(step)).sin().powi(2)
    }

    /// Final unwrapped phase, `None` if the last sample is a node.
    pub fn final_phase(&self) -> Option<f64> {
        *self.phi_total.last().unwrap()
    }

    pub fn final_s0(&self) -> f64 {
        *self.s0.last().unwrap()
    }
}

/// `arg(a conj(b))`.
pub(crate) fn relative_arg(a: C64, b: C64) -> f64 {
    (a * b.conj()).arg()
}

/// Lagrange extrapolation of up to three `(t, value)` points to `t`.
fn extrapolate(points: &[(f64, f64)], t: f64) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (ti, vi) = points[i];
            let basis: f64 = (0..n).filter(|&j| j != i).map(|j| (t - points[j].0) / (ti - points[j].0)).product();
            vi * basis
        })
        .sum()
}

/// The lift `base + 2 pi m` closest to `target`; near-ties go to the more negative branch.
pub(crate) fn nearest_branch(base: f64, target: f64, tie: f64) -> f64 {
    let m0 = ((target - base) / TAU).round();
    let mut best = f64::NAN;
    let mut best_dist = f64::INFINITY;
    for m in [m0 - 1.0, m0, m0 + 1.0] {
        let candidate = base + TAU * m;
        let dist = (candidate - target).abs();
        if dist < best_dist - tie {
            best = candidate;
            best_dist = dist;
        } else if (dist - best_dist).abs() <= tie && candidate < best {
            best = candidate;
            best_dist = best_dist.min(dist);
        }
    }
    best
}

pub fn angle_track(traj: &Trajectory) -> Result<AngleTrack> {
    angle_track_with(traj, NodePolicy::default(), &Tolerances::default())
}

/// Computes `S0` and unwraps `Phi` by accumulating `arg(c_{k+1} conj(c_k))`.
///
/// Steps between neighbouring non-node samples must stay below the pi/2
/// resolution guard. Across node samples the phase is continued by the
/// branch closest to a quadratic extrapolation of the preceding samples.
pub fn angle_track_with(traj: &Trajectory, policy: NodePolicy, tol: &Tolerances) -> Result<AngleTrack> {
    let n = traj.states.len();
    let psi0 = traj.initial().amplitudes();
    let mut s0 = Vec::with_capacity(n);
    let mut phi_total: Vec<Option<f64>> = Vec::with_capacity(n);
    let mut node_flags = Vec::with_capacity(n);
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut last: Option<usize> = None;

    for k in 0..n {
        let c = traj.overlaps[k];
        s0.push(2.0 * ray_angle(psi0, traj.states[k].amplitudes()));
        let node = c.norm() <= tol.node;
        node_flags.push(node);
        if node {
            if policy == NodePolicy::Strict {
                return Err(Error::NodeEncountered { index: k, time: traj.times[k] });
            }
            phi_total.push(None);
            continue;
        }
        let phi = match last {
            None => c.arg(),
            Some(j) => {
                let increment = relative_arg(c, traj.overlaps[j]);
                let previous = phi_total[j].unwrap();
                if j + 1 == k {
                    if increment.abs() >= FRAC_PI_2 {
                        return Err(Error::PhaseResolutionExceeded { step: j, time: traj.times[j], increment });
                    }
                    previous + increment
                } else {
                    let tail = &history[history.len().saturating_sub(3)..];
                    let predicted = extrapolate(tail, traj.times[k]);
                    nearest_branch(previous + increment, predicted, tol.branch_tie)
                }
            }
        };
        phi_total.push(Some(phi));
        history.push((traj.times[k], phi));
        last = Some(k);
    }
    Ok(AngleTrack { times: traj.times.clone(), s0, phi_total, node_flags })
}

/// Normalized orthogonal components `|psibar_0(t_k)>` along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalTrack {
    pub states: Vec<Option<QuantumState>>,
    /// First sample with a defined orthogonal component.
    pub defined_from: Option<usize>,
}

impl OrthogonalTrack {
    pub fn present_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_some()).count()
    }
}

pub fn orthogonal_track(traj: &Trajectory) -> Result<OrthogonalTrack> {
    orthogonal_track_with(traj, &Tolerances::default())
}

pub fn orthogonal_track_with(traj: &Trajectory, tol: &Tolerances) -> Result<OrthogonalTrack> {
    let psi0 = traj.initial();
    let states = traj
        .states
        .iter()
        .map(|s| decompose_unitary_action_with(psi0, s, tol).map(|d| d.orthogonal))
        .collect::<Result<Vec<_>>>()?;
    let defined_from = states.iter().position(Option::is_some);
    Ok(OrthogonalTrack { states, defined_from })
}

/// Per-sample `|| cos(S0/2) e^{i Phi} psi0 + sin(S0/2) psibar - psi(t) ||_max`; `None` at nodes.
pub fn angle_form_residuals(traj: &Trajectory, angles: &AngleTrack, orth: &OrthogonalTrack) -> Vec<Option<f64>> {
    let psi0 = traj.initial().amplitudes();
    (0..traj.states.len())
        .map(|k| {
            let phi = angles.phi_total[k]?;
            let half = 0.5 * angles.s0[k];
            let mut rebuilt = psi0 * C64::from_polar(half.cos(), phi);
            if let Some(o) = &orth.states[k] {
                rebuilt += o.amplitudes() * C64::new(half.sin(), 0.0);
            }
            Some(max_abs_vec(&(rebuilt - traj.states[k].amplitudes())))
        })
        .collect()
}

/// Norm of the part of `psi(t_k)` outside `span{psi(0), psibar_0(t_k)}`.
pub fn confinement_residuals(traj: &Trajectory, orth: &OrthogonalTrack) -> Vec<f64> {
    let psi0 = traj.initial();
    traj.states
        .iter()
        .zip(&orth.states)
        .map(|(s, o)| {
            let mut rest = s.amplitudes() - psi0.amplitudes() * psi0.inner(s);
            if let Some(o) = o {
                rest -= o.amplitudes() * o.inner(s);
            }
            rest.norm()
        })
        .collect()
}

/// Max split-reconstruction residual over all samples of a trajectory.
pub fn split_residual_max(traj: &Trajectory) -> Result<f64> {
    let psi0 = traj.initial();
    traj.states.iter().try_fold(0.0_f64, |acc, s| {
        let d = decompose_unitary_action(psi0, s)?;
        Ok(acc.max(d.reconstruction_residual(psi0, s)))
    })
}

/// `|mean|^2 + delta^2 - 1`.
pub fn norm_split_defect(d: &UnitaryDecomposition) -> f64 {
    d.mean.norm_sqr() + d.delta * d.delta - 1.0
}
