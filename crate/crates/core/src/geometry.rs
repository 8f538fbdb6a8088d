//! Fubini-Study geometry of a trajectory: step lengths, path length,
//! circuitousness, the contraction factor and kernel, and the metric
//! identities of the effective two-level state in the rotating frame.

use crate::decomposition::{AngleTrack, PhaseStep};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::numerics::{ray_angle, ComplexVector, QuantumState, C64};
use crate::tolerances::Tolerances;

/// Fubini-Study distance `2 arccos |<a|b>|`.
pub fn fs_distance(a: &QuantumState, b: &QuantumState) -> f64 {
    2.0 * ray_angle(a.amplitudes(), b.amplitudes())
}

/// Per grid step lengths in two forms: from consecutive overlaps, and
/// `2 dH dt / hbar` from the energy spread (trapezoid in `dH`).
#[derive(Debug, Clone, PartialEq)]
pub struct StepLengths {
    pub overlap_form: Vec<f64>,
    pub variance_form: Vec<f64>,
}

impl StepLengths {
    pub fn overlap_total(&self) -> f64 {
        self.overlap_form.iter().sum()
    }

    pub fn variance_total(&self) -> f64 {
        self.variance_form.iter().sum()
    }

    pub fn max_step_difference(&self) -> f64 {
        self.overlap_form.iter().zip(&self.variance_form).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Steps straddling a segment boundary are split there, with the spread
/// taken from each side's limit.
pub fn fs_step_lengths(traj: &Trajectory) -> StepLengths {
    let hbar = traj.hbar();
    let overlap_form = traj.states.windows(2).map(|w| fs_distance(&w[0], &w[1])).collect();
    let spreads: Vec<f64> = traj.energy_variances.iter().map(|v| v.sqrt()).collect();
    let variance_form = (0..traj.steps())
        .map(|k| {
            let (t0, t1) = (traj.times[k], traj.times[k + 1]);
            let mut nodes = vec![(t0, spreads[k])];
            for b in traj.boundaries.iter().filter(|b| b.time > t0 && b.time <= t1) {
                nodes.push((b.time, b.variance_before.max(0.0).sqrt()));
                nodes.push((b.time, b.variance_after.max(0.0).sqrt()));
            }
            nodes.push((t1, spreads[k + 1]));
            nodes.chunks(2).map(|p| (p[0].1 + p[1].1) * (p[1].0 - p[0].0)).sum::<f64>() / hbar
        })
        .collect();
    StepLengths { overlap_form, variance_form }
}

/// Total path length `S` in projective space.
pub fn total_length(traj: &Trajectory) -> f64 {
    fs_step_lengths(traj).overlap_total()
}

/// `(cos(S0/2) e^{i Phi}, sin(S0/2))` per sample, i.e. the state with the
/// orthogonal component frozen at its initial direction.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveRotatingState {
    /// At nodes the first component vanishes and the undefined phase is set to zero.
    pub components: Vec<[C64; 2]>,
}

impl EffectiveRotatingState {
    fn vector(&self, k: usize) -> ComplexVector {
        ComplexVector::from_column_slice(&self.components[k])
    }

    /// Fubini-Study distance between two samples of the effective state.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        2.0 * ray_angle(&self.vector(a), &self.vector(b))
    }
}

pub fn rotating_frame_state(angles: &AngleTrack) -> EffectiveRotatingState {
    let components = angles
        .s0
        .iter()
        .zip(&angles.phi_total)
        .map(|(s0, phi)| {
            let half = 0.5 * s0;
            [C64::from_polar(half.cos(), phi.unwrap_or(0.0)), C64::new(half.sin(), 0.0)]
        })
        .collect();
    EffectiveRotatingState { components }
}

/// Residuals of `dS^2 = dS0^2 + sin^2(S0) dPhi^2` and its phase form
/// `dS^2 = dS0^2 + 4 dPhi_D dPhi_G`, per phase step.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricResiduals {
    pub steps: Vec<PhaseStep>,
    /// Effective state in the rotating frame.
    pub rotating: Vec<f64>,
    /// Same frame, with `dPhi_D = cos^2(S0/2) dPhi` and `dPhi_G = sin^2(S0/2) dPhi`.
    pub phase_form: Vec<f64>,
    /// Lab-frame distance against the same right-hand side. Diagnostic only.
    pub lab: Vec<f64>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl MetricResiduals {
    pub fn max_rotating(&self) -> f64 {
        max_abs(&self.rotating)
    }

    /// Steps that jump over a flagged node, where the `(S0, Phi)` chart is singular.
    pub fn node_bridging_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.to > s.from + 1).count()
    }

    /// Rotating-frame residual over steps between adjacent samples.
    pub fn max_rotating_off_nodes(&self) -> f64 {
        self.steps.iter().zip(&self.rotating).filter(|(s, _)| s.to == s.from + 1).fold(0.0, |m, (_, r)| m.max(r.abs()))
    }

    pub fn max_phase_form(&self) -> f64 {
        max_abs(&self.phase_form)
    }

    pub fn max_lab(&self) -> f64 {
        max_abs(&self.lab)
    }

    /// Largest difference between the two rotating-frame forms.
    pub fn form_disagreement(&self) -> f64 {
        self.rotating.iter().zip(&self.phase_form).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub fn verify_metric_identities(
    traj: &Trajectory,
    angles: &AngleTrack,
    effective: &EffectiveRotatingState,
) -> Result<MetricResiduals> {
    if angles.len() != traj.states.len() || effective.components.len() != angles.len() {
        return Err(Error::RangeMismatch(format!(
            "trajectory {} / angles {} / effective state {} samples",
            traj.states.len(),
            angles.len(),
            effective.components.len()
        )));
    }
    let steps = angles.phase_steps();
    let mut rotating = Vec::with_capacity(steps.len());
    let mut phase_form = Vec::with_capacity(steps.len());
    let mut lab = Vec::with_capacity(steps.len());
    for &step in &steps {
        let ds0 = angles.s0[step.to] - angles.s0[step.from];
        let d_phi = angles.phase_increment(step);
        let mid = angles.s0_mid(step);
        let sphere = ds0 * ds0 + mid.sin().powi(2) * d_phi * d_phi;
        let (c2, s2) = ((0.5 * mid).cos().powi(2), (0.5 * mid).sin().powi(2));
        let phases = ds0 * ds0 + 4.0 * (c2 * d_phi) * (s2 * d_phi);
        let ds_eff = effective.distance(step.from, step.to);
        let ds_lab = fs_distance(&traj.states[step.from], &traj.states[step.to]);
        rotating.push(ds_eff * ds_eff - sphere);
        phase_form.push(ds_eff * ds_eff - phases);
        lab.push(ds_lab * ds_lab - sphere);
    }
    Ok(MetricResiduals { steps, rotating, phase_form, lab })
}

/// Excess length over geodesic progress from the initial state, per grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuitousness {
    pub per_step: Vec<f64>,
    /// Running sum, one entry per sample starting at zero.
    pub cumulative: Vec<f64>,
}

impl Circuitousness {
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }
}

pub fn circuitousness(traj: &Trajectory, angles: &AngleTrack) -> Circuitousness {
    circuitousness_from(&fs_step_lengths(traj).overlap_form, angles)
}

fn circuitousness_from(ds: &[f64], angles: &AngleTrack) -> Circuitousness {
    let per_step: Vec<f64> = ds.iter().enumerate().map(|(k, d)| d - (angles.s0[k + 1] - angles.s0[k]).abs()).collect();
    let mut cumulative = Vec::with_capacity(per_step.len() + 1);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for c in &per_step {
        acc += c;
        cumulative.push(acc);
    }
    Circuitousness { per_step, cumulative }
}

/// Contraction factor `gamma = sqrt(1 - dS0^2/dS^2)` and kernel
/// `K = sin(S0)/gamma * dPhi/dS0` per grid step, with `None` where undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub gamma: Vec<Option<f64>>,
    pub kernel: Vec<Option<f64>>,
    /// Steps where `|dS0| > dS` from roundoff and the radicand was clamped to zero.
    pub clamped: usize,
    /// `sum |K dS0|` over steps with a defined kernel.
    pub reconstructed_length: f64,
    /// `sum dS` over the same steps.
    pub length_on_defined: f64,
}

impl KernelReport {
    pub fn relative_discrepancy(&self) -> f64 {
        if self.length_on_defined == 0.0 {
            0.0
        } else {
            (self.reconstructed_length - self.length_on_defined).abs() / self.length_on_defined
        }
    }

    pub fn defined_kernel_steps(&self) -> usize {
        self.kernel.iter().flatten().count()
    }
}

pub fn kernel_and_gamma(traj: &Trajectory, angles: &AngleTrack) -> KernelReport {
    kernel_and_gamma_with(traj, angles, &Tolerances::default())
}

pub fn kernel_and_gamma_with(traj: &Trajectory, angles: &AngleTrack, tol: &Tolerances) -> KernelReport {
    kernel_from(&fs_step_lengths(traj).overlap_form, angles, tol)
}

fn kernel_from(ds: &[f64], angles: &AngleTrack, tol: &Tolerances) -> KernelReport {
    let mut gamma = Vec::with_capacity(ds.len());
    let mut kernel = Vec::with_capacity(ds.len());
    let mut clamped = 0;
    let (mut reconstructed_length, mut length_on_defined) = (0.0, 0.0);
    for (k, &d) in ds.iter().enumerate() {
        let ds0 = angles.s0[k + 1] - angles.s0[k];
        if d <= tol.turn {
            gamma.push(None);
            kernel.push(None);
            continue;
        }
        let radicand = 1.0 - (ds0 / d).powi(2);
        if radicand < 0.0 {
            clamped += 1;
        }
        let g = radicand.clamp(0.0, 1.0).sqrt();
        gamma.push(Some(g));
        let k_val = match (angles.phi_total[k], angles.phi_total[k + 1]) {
            (Some(p0), Some(p1)) if ds0.abs() > tol.turn && g > tol.turn => {
                let mid = 0.5 * (angles.s0[k] + angles.s0[k + 1]);
                Some(mid.sin() / g * (p1 - p0) / ds0)
            }
            _ => None,
        };
        if let Some(kv) = k_val {
            reconstructed_length += (kv * ds0).abs();
            length_on_defined += d;
        }
        kernel.push(k_val);
    }
    KernelReport { gamma, kernel, clamped, reconstructed_length, length_on_defined }
}

/// Everything the geometry module reports for one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport {
    pub total_length: f64,
    pub geodesic_angle: f64,
    pub step_lengths: StepLengths,
    pub cumulative_length: Vec<f64>,
    pub circuitousness: Circuitousness,
    pub kernel: KernelReport,
    pub metric: MetricResiduals,
}

impl GeometryReport {
    pub fn build(traj: &Trajectory, angles: &AngleTrack) -> Result<Self> {
        Self::build_with(traj, angles, &Tolerances::default())
    }

    pub fn build_with(traj: &Trajectory, angles: &AngleTrack, tol: &Tolerances) -> Result<Self> {
        let step_lengths = fs_step_lengths(traj);
        let mut cumulative_length = Vec::with_capacity(traj.states.len());
        let mut acc = 0.0;
        cumulative_length.push(0.0);
        for d in &step_lengths.overlap_form {
            acc += d;
            cumulative_length.push(acc);
        }
        let circuitousness = circuitousness_from(&step_lengths.overlap_form, angles);
        let kernel = kernel_from(&step_lengths.overlap_form, angles, tol);
        let metric = verify_metric_identities(traj, angles, &rotating_frame_state(angles))?;
        Ok(Self {
            total_length: acc,
            geodesic_angle: angles.final_s0(),
            step_lengths,
            cumulative_length,
            circuitousness,
            kernel,
            metric,
        })
    }

    /// `|S_overlap - S_variance| / S_overlap`, zero for a stationary path.
    pub fn length_form_disagreement(&self) -> f64 {
        let (a, b) = (self.step_lengths.overlap_total(), self.step_lengths.variance_total());
        if a == 0.0 && b == 0.0 {
            0.0
        } else {
            (a - b).abs() / a.max(b)
        }
    }
}
