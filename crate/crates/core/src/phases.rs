//! Dynamical, geometric and orthogonal-component phases along a trajectory,
//! the per-step fractional-contribution law and the geometric phase fraction.
//!
//! Connection integrals are discretized as arguments of successive
//! overlaps, which is gauge invariant and free of finite-difference noise.
//! The fractional law is checked step by step with the weight
//! `w = sin^2(S0_mid / 2)`, `S0_mid` being the mean of the endpoint angles:
//!
//! ```text
//! dPhi_D = (1 - w) dPhi + w dPhiBar
//! dPhi_G =       w (dPhi - dPhiBar)
//! ```

use crate::decomposition::{nearest_branch, AngleTrack, OrthogonalTrack, PhaseStep};
use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::numerics::QuantumState;
use crate::tolerances::Tolerances;

/// `Phi_D(t_k) = -(1/hbar) int_0^{t_k} <H> dt` by the trapezoid rule.
///
/// Steps that straddle a segment boundary are split there, using the
/// left and right limits of the energy at the boundary.
pub fn dynamical_phase(traj: &Trajectory) -> Vec<f64> {
    let hbar = traj.hbar();
    let mut out = Vec::with_capacity(traj.times.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..traj.steps() {
        let (t0, t1) = (traj.times[k], traj.times[k + 1]);
        let (e0, e1) = (traj.energy_expectations[k], traj.energy_expectations[k + 1]);
        let mut nodes = vec![(t0, e0)];
        for b in traj.boundaries.iter().filter(|b| b.time > t0 && b.time <= t1) {
            nodes.push((b.time, b.energy_before));
            nodes.push((b.time, b.energy_after));
        }
        nodes.push((t1, e1));
        let integral: f64 = nodes.chunks(2).map(|pair| 0.5 * (pair[0].1 + pair[1].1) * (pair[1].0 - pair[0].0)).sum();
        acc -= integral / hbar;
        out.push(acc);
    }
    out
}

/// Reference state `chi_k = (conj(c_k)/|c_k|) psi_k`.
fn reference_state(traj: &Trajectory, k: usize) -> QuantumState {
    let c = traj.overlaps[k];
    traj.states[k].rephased(-c.arg())
}

/// `Phi_G(t_k) = -sum_j arg <chi_j|chi_{j+1}>` over the phase steps of `angles`.
///
/// Across nodes the increment is lifted to the branch consistent with
/// `dPhi - dPhi_D`. `None` at node samples.
pub fn geometric_phase(traj: &Trajectory, angles: &AngleTrack) -> Vec<Option<f64>> {
    let phi_d = dynamical_phase(traj);
    geometric_phase_with_dynamical(traj, angles, &phi_d)
}

fn geometric_phase_with_dynamical(traj: &Trajectory, angles: &AngleTrack, phi_d: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; angles.len()];
    let steps = angles.phase_steps();
    let Some(first) = (0..angles.len()).find(|&k| !angles.node_flags[k]) else {
        return out;
    };
    out[first] = Some(0.0);
    let mut chi_prev = reference_state(traj, first);
    for step in steps {
        let chi = reference_state(traj, step.to);
        let raw = -chi_prev.inner(&chi).arg();
        let increment = if step.to == step.from + 1 {
            raw
        } else {
            let target = angles.phase_increment(step) - (phi_d[step.to] - phi_d[step.from]);
            nearest_branch(raw, target, 0.0)
        };
        out[step.to] = Some(out[step.from].unwrap() + increment);
        chi_prev = chi;
    }
    out
}

/// `PhiBar(t_k) = sum arg <psibar_j|psibar_{j+1}>` from the first defined sample.
///
/// Where the orthogonal component is absent (the state returned to the
/// initial ray) the phase is undefined and accumulation resumes with no
/// increment across the gap.
pub fn orthogonal_phase(orth: &OrthogonalTrack) -> Result<Vec<Option<f64>>> {
    let present = orth.present_count();
    if present < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: present });
    }
    let mut out = vec![None; orth.states.len()];
    let mut acc = 0.0;
    let mut prev: Option<&QuantumState> = None;
    for (k, state) in orth.states.iter().enumerate() {
        match state {
            Some(s) => {
                if let Some(p) = prev {
                    acc += p.inner(s).arg();
                }
                out[k] = Some(acc);
                prev = Some(s);
            }
            None => prev = None,
        }
    }
    Ok(out)
}

/// `sin^2(S0/2)` at every sample.
pub fn geometric_phase_fraction(angles: &AngleTrack) -> Vec<f64> {
    angles.s0.iter().map(|s| (0.5 * s).sin().powi(2).clamp(0.0, 1.0)).collect()
}

/// Per-step residuals of both lines of the fractional-contribution law.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalLawResiduals {
    pub steps: Vec<PhaseStep>,
    pub residual_d: Vec<f64>,
    pub residual_g: Vec<f64>,
}

impl FractionalLawResiduals {
    pub fn max_abs_d(&self) -> f64 {
        self.residual_d.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    pub fn max_abs_g(&self) -> f64 {
        self.residual_g.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_d().max(self.max_abs_g())
    }
}

fn increment(series: &[Option<f64>], step: PhaseStep) -> Option<f64> {
    Some(series[step.to]? - series[step.from]?)
}

/// `dPhiBar` over a step; zero where the orthogonal component is absent,
/// which only happens where the weight vanishes to second order.
fn orthogonal_increment(phi_bar: &[Option<f64>], step: PhaseStep) -> f64 {
    increment(phi_bar, step).unwrap_or(0.0)
}

fn check_lengths(angles: &AngleTrack, lens: &[usize]) -> Result<()> {
    if let Some(&bad) = lens.iter().find(|&&l| l != angles.len()) {
        return Err(Error::RangeMismatch(format!("series of length {bad} against {} samples", angles.len())));
    }
    Ok(())
}

pub fn verify_fractional_law(
    angles: &AngleTrack,
    phi_d: &[f64],
    phi_g: &[Option<f64>],
    phi_bar: &[Option<f64>],
) -> Result<FractionalLawResiduals> {
    check_lengths(angles, &[phi_d.len(), phi_g.len(), phi_bar.len()])?;
    let steps = angles.phase_steps();
    let mut residual_d = Vec::with_capacity(steps.len());
    let mut residual_g = Vec::with_capacity(steps.len());
    for &step in &steps {
        let w = angles.weight_mid(step);
        let d_phi = angles.phase_increment(step);
        let d_bar = orthogonal_increment(phi_bar, step);
        let d_d = phi_d[step.to] - phi_d[step.from];
        let d_g = increment(phi_g, step)
            .ok_or_else(|| Error::RangeMismatch(format!("geometric phase undefined at sample {}", step.to)))?;
        residual_d.push(d_d - ((1.0 - w) * d_phi + w * d_bar));
        residual_g.push(d_g - w * (d_phi - d_bar));
    }
    Ok(FractionalLawResiduals { steps, residual_d, residual_g })
}

/// Step-wise comparison of `dPhi_G / (dPhi - dPhiBar)` with the midpoint fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionRatioCheck {
    /// `|ratio - w|` per phase step, `None` where the denominator is degenerate.
    pub deviations: Vec<Option<f64>>,
    pub checked: usize,
    pub skipped: usize,
    pub max_deviation: f64,
}

pub fn fraction_ratio_check(
    angles: &AngleTrack,
    phi_g: &[Option<f64>],
    phi_bar: &[Option<f64>],
    tol: &Tolerances,
) -> Result<FractionRatioCheck> {
    check_lengths(angles, &[phi_g.len(), phi_bar.len()])?;
    let mut deviations = Vec::new();
    let (mut checked, mut skipped, mut max_deviation) = (0, 0, 0.0_f64);
    for step in angles.phase_steps() {
        let mismatch = angles.phase_increment(step) - orthogonal_increment(phi_bar, step);
        let d_g = increment(phi_g, step);
        match d_g {
            Some(d_g) if mismatch.abs() > tol.ratio_denominator => {
                let dev = (d_g / mismatch - angles.weight_mid(step)).abs();
                max_deviation = max_deviation.max(dev);
                checked += 1;
                deviations.push(Some(dev));
            }
            _ => {
                skipped += 1;
                deviations.push(None);
            }
        }
    }
    Ok(FractionRatioCheck { deviations, checked, skipped, max_deviation })
}

/// Whether `f_g` never decreases while `S0` increases, reported descriptively.
pub fn fraction_tracks_angle(angles: &AngleTrack, gpf: &[f64]) -> bool {
    (1..gpf.len()).all(|k| (angles.s0[k] - angles.s0[k - 1]) * (gpf[k] - gpf[k - 1]) >= -1e-15)
}

/// Every phase series of a trajectory and the checks that tie them together.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLedger {
    pub times: Vec<f64>,
    pub s0: Vec<f64>,
    pub phi_total: Vec<Option<f64>>,
    pub phi_dynamical: Vec<f64>,
    pub phi_geometric: Vec<Option<f64>>,
    pub phi_orthogonal: Vec<Option<f64>>,
    pub gpf: Vec<f64>,
    pub fractional_law: FractionalLawResiduals,
    pub ratio_check: FractionRatioCheck,
}

impl PhaseLedger {
    pub fn build(traj: &Trajectory, angles: &AngleTrack, orth: &OrthogonalTrack) -> Result<Self> {
        Self::build_with(traj, angles, orth, &Tolerances::default())
    }

    pub fn build_with(
        traj: &Trajectory,
        angles: &AngleTrack,
        orth: &OrthogonalTrack,
        tol: &Tolerances,
    ) -> Result<Self> {
        let phi_dynamical = dynamical_phase(traj);
        let phi_geometric = geometric_phase_with_dynamical(traj, angles, &phi_dynamical);
        let phi_orthogonal = match orthogonal_phase(orth) {
            Ok(p) => p,
            // stationary ray: no orthogonal component anywhere
            Err(Error::InsufficientSamples { .. }) => vec![None; angles.len()],
            Err(e) => return Err(e),
        };
        let gpf = geometric_phase_fraction(angles);
        let fractional_law = verify_fractional_law(angles, &phi_dynamical, &phi_geometric, &phi_orthogonal)?;
        let ratio_check = fraction_ratio_check(angles, &phi_geometric, &phi_orthogonal, tol)?;
        Ok(Self {
            times: angles.times.clone(),
            s0: angles.s0.clone(),
            phi_total: angles.phi_total.clone(),
            phi_dynamical,
            phi_geometric,
            phi_orthogonal,
            gpf,
            fractional_law,
            ratio_check,
        })
    }

    /// `|Phi - Phi_D - Phi_G|` at every non-node sample.
    pub fn additivity_residuals(&self) -> Vec<Option<f64>> {
        (0..self.times.len())
            .map(|k| Some((self.phi_total[k]? - self.phi_dynamical[k] - self.phi_geometric[k]?).abs()))
            .collect()
    }

    pub fn additivity_max(&self) -> f64 {
        self.additivity_residuals().into_iter().flatten().fold(0.0, f64::max)
    }

    /// `Phi_D(T)` and `Phi_G(T)` rebuilt by summing the fractional-law increments.
    pub fn summed_law(&self, angles: &AngleTrack) -> (f64, f64) {
        let (mut d, mut g) = (0.0, 0.0);
        for &step in &self.fractional_law.steps {
            let w = angles.weight_mid(step);
            let d_phi = angles.phase_increment(step);
            let d_bar = orthogonal_increment(&self.phi_orthogonal, step);
            d += (1.0 - w) * d_phi + w * d_bar;
            g += w * (d_phi - d_bar);
        }
        (d, g)
    }

    pub fn final_dynamical(&self) -> f64 {
        *self.phi_dynamical.last().unwrap()
    }

    pub fn final_geometric(&self) -> Option<f64> {
        *self.phi_geometric.last().unwrap()
    }

    pub fn final_total(&self) -> Option<f64> {
        *self.phi_total.last().unwrap()
    }

    /// Residual of step `i` attributed to the sample the step ends on.
    pub fn residuals_by_sample(&self) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
        let n = self.times.len();
        let (mut d, mut g) = (vec![None; n], vec![None; n]);
        for (i, step) in self.fractional_law.steps.iter().enumerate() {
            d[step.to] = Some(self.fractional_law.residual_d[i]);
            g[step.to] = Some(self.fractional_law.residual_g[i]);
        }
        (d, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{angle_track, orthogonal_track};
    use crate::evolution::{evolve, HamiltonianSchedule, Segment};
    use crate::numerics::{random_hermitian, random_state, HermitianOperator, C64};
    use std::f64::consts::{PI, TAU};

    fn precession(theta: f64, t_final: f64, steps: usize) -> Trajectory {
        let psi = QuantumState::from_slice(&[C64::new((theta / 2.0).cos(), 0.0), C64::new((theta / 2.0).sin(), 0.0)])
            .unwrap();
        let schedule = HamiltonianSchedule::single(HermitianOperator::pauli_z().scaled(0.5), t_final, 1.0).unwrap();
        evolve(&psi, &schedule, steps).unwrap()
    }

    fn ledger(traj: &Trajectory) -> (AngleTrack, PhaseLedger) {
        let a = angle_track(traj).unwrap();
        let o = orthogonal_track(traj).unwrap();
        let l = PhaseLedger::build(traj, &a, &o).unwrap();
        (a, l)
    }

    #[test]
    fn eigenstate_dynamical_phase() {
        let traj = precession(0.0, TAU, 256);
        let phi_d = dynamical_phase(&traj);
        for (t, p) in traj.times.iter().zip(&phi_d) {
            assert!((p + t / 2.0).abs() < 1e-12);
        }
        assert!((phi_d.last().unwrap() + PI).abs() < 1e-12);
        let (_, l) = ledger(&traj);
        assert!(l.phi_geometric.iter().all(|g| g.unwrap().abs() < 1e-9));
        assert!(l.fractional_law.max_abs() <= 1e-12);
        assert!(l.gpf.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn null_hamiltonian_has_no_dynamical_phase() {
        let schedule = HamiltonianSchedule::single(HermitianOperator::zeros(3), 2.0, 1.0).unwrap();
        let traj = evolve(&random_state(3, 1).unwrap(), &schedule, 32).unwrap();
        assert!(dynamical_phase(&traj).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn cyclic_precession_phases() {
        let traj = precession(PI / 3.0, TAU, 4096);
        let (a, l) = ledger(&traj);
        assert!((l.final_dynamical() + PI / 2.0).abs() < 1e-12);
        assert!((l.final_geometric().unwrap() + PI / 2.0).abs() < 1e-5);
        assert!((l.final_total().unwrap() + PI).abs() < 1e-10);
        assert!(l.fractional_law.max_abs() <= 1e-6, "{:e}", l.fractional_law.max_abs());
        assert!(l.additivity_max() <= 5e-6);
        let (d, g) = l.summed_law(&a);
        assert!((d - l.final_dynamical()).abs() < 5e-6);
        assert!((g - l.final_geometric().unwrap()).abs() < 5e-6);
    }

    #[test]
    fn equatorial_cycle_has_geometric_phase_minus_pi() {
        let traj = precession(PI / 2.0, TAU, 4096);
        let (_, l) = ledger(&traj);
        assert!((l.final_geometric().unwrap() + PI).abs() < 1e-5);
        // psibar is constant for precession, so PhiBar vanishes
        assert!(l.phi_orthogonal.iter().flatten().all(|p| p.abs() < 2e-6));
    }

    #[test]
    fn fraction_at_half_period() {
        let traj = precession(PI / 3.0, PI, 256);
        let a = angle_track(&traj).unwrap();
        let f = geometric_phase_fraction(&a);
        assert!((f.last().unwrap() - 0.75).abs() < 1e-12);
        assert!(fraction_tracks_angle(&a, &f));
    }

    #[test]
    fn fraction_extremes() {
        let a = AngleTrack {
            times: vec![0.0, 1.0],
            s0: vec![0.0, PI],
            phi_total: vec![Some(0.0), None],
            node_flags: vec![false, true],
        };
        assert_eq!(geometric_phase_fraction(&a), vec![0.0, 1.0]);
    }

    #[test]
    fn real_orthogonal_track_has_zero_phase() {
        let states = (0..5)
            .map(|k| {
                let x = 0.3 * k as f64;
                Some(
                    QuantumState::from_slice(&[C64::new(0.0, 0.0), C64::new(x.cos(), 0.0), C64::new(x.sin(), 0.0)])
                        .unwrap(),
                )
            })
            .collect();
        let orth = OrthogonalTrack { states, defined_from: Some(0) };
        assert!(orthogonal_phase(&orth).unwrap().iter().all(|p| *p == Some(0.0)));
        let empty = OrthogonalTrack { states: vec![None, None], defined_from: None };
        assert!(matches!(orthogonal_phase(&empty), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn ratio_check_on_precession() {
        let traj = precession(PI / 3.0, TAU, 4096);
        let (_, l) = ledger(&traj);
        assert_eq!(l.ratio_check.skipped, 0);
        assert!(l.ratio_check.max_deviation < 1e-5, "{:e}", l.ratio_check.max_deviation);
    }

    #[test]
    fn random_system_law_converges() {
        let h = random_hermitian(6, 4).unwrap();
        let psi = random_state(6, 4).unwrap();
        let schedule = HamiltonianSchedule::single(h, 1.0, 1.0).unwrap();
        let coarse = evolve(&psi, &schedule, 2048).unwrap();
        let fine = evolve(&psi, &schedule, 4096).unwrap();
        let (_, lc) = ledger(&coarse);
        let (_, lf) = ledger(&fine);
        let order = (lc.fractional_law.max_abs() / lf.fractional_law.max_abs()).log2();
        assert!(order >= 1.9, "order {order}");
        assert!(lf.fractional_law.max_abs() <= 5e-6);
    }

    #[test]
    fn multi_segment_dynamical_phase_is_exact() {
        // <H_s> is conserved within a segment, so the integral is piecewise linear
        let h1 = random_hermitian(3, 1).unwrap();
        let h2 = random_hermitian(3, 2).unwrap();
        let schedule = HamiltonianSchedule::new(
            vec![
                Segment { hamiltonian: h1.clone(), duration: 0.3 },
                Segment { hamiltonian: h2.clone(), duration: 0.7 },
            ],
            1.0,
        )
        .unwrap();
        let psi = random_state(3, 3).unwrap();
        let traj = evolve(&psi, &schedule, 64).unwrap();
        let e1 = h1.expectation(&psi);
        let e2 = traj.boundaries[0].energy_after;
        let expected = -(e1 * 0.3 + e2 * 0.7);
        assert!((dynamical_phase(&traj).last().unwrap() - expected).abs() < 1e-12);
    }
}
