//! The full pipeline for one scenario and the tables built from it.

use crate::decomposition::{angle_track_with, orthogonal_track_with, AngleTrack, NodePolicy, OrthogonalTrack};
use crate::error::Result;
use crate::evolution::Trajectory;
use crate::geometry::GeometryReport;
use crate::phases::PhaseLedger;
use crate::scenarios::Scenario;
use crate::speedlimits::{geometric_qsl_with, SpeedLimitReport};
use crate::tolerances::Tolerances;

use super::output::Table;

pub struct Analysis {
    pub traj: Trajectory,
    pub angles: AngleTrack,
    pub orth: OrthogonalTrack,
    pub ledger: PhaseLedger,
    pub geometry: GeometryReport,
}

pub fn angles_for(traj: &Trajectory, strict_nodes: bool) -> Result<AngleTrack> {
    let policy = if strict_nodes { NodePolicy::Strict } else { NodePolicy::Continue };
    angle_track_with(traj, policy, &Tolerances::default())
}

impl Analysis {
    pub fn run(scenario: &Scenario, steps: usize, strict_nodes: bool) -> Result<Self> {
        let tol = Tolerances::default();
        let traj = scenario.evolve(steps)?;
        let angles = angles_for(&traj, strict_nodes)?;
        let orth = orthogonal_track_with(&traj, &tol)?;
        let ledger = PhaseLedger::build_with(&traj, &angles, &orth, &tol)?;
        let geometry = GeometryReport::build_with(&traj, &angles, &tol)?;
        Ok(Self { traj, angles, orth, ledger, geometry })
    }

    pub fn speed_limits(&self) -> Result<SpeedLimitReport> {
        geometric_qsl_with(&self.traj, &self.angles, &self.ledger, &Tolerances::default())
    }

    pub fn phases_table(&self) -> Table {
        let mut t = Table::new(&["t", "S0", "Phi", "PhiD", "PhiG", "PhiBar", "f_g", "eq9_res_d", "eq9_res_g"]);
        let (res_d, res_g) = self.ledger.residuals_by_sample();
        let l = &self.ledger;
        for k in 0..l.times.len() {
            t.push(vec![
                Some(l.times[k]),
                Some(l.s0[k]),
                l.phi_total[k],
                Some(l.phi_dynamical[k]),
                l.phi_geometric[k],
                l.phi_orthogonal[k],
                Some(l.gpf[k]),
                res_d[k],
                res_g[k],
            ]);
        }
        t
    }

    /// Step quantities sit on the row of the sample that ends the step.
    pub fn geometry_table(&self) -> Table {
        let mut t = Table::new(&["t", "dS", "dS0", "circuit", "gamma", "K", "S"]);
        let g = &self.geometry;
        for k in 0..self.traj.times.len() {
            let step = k.checked_sub(1);
            t.push(vec![
                Some(self.traj.times[k]),
                step.map(|j| g.step_lengths.overlap_form[j]),
                step.map(|j| self.angles.s0[j + 1] - self.angles.s0[j]),
                step.map(|j| g.circuitousness.per_step[j]),
                step.and_then(|j| g.kernel.gamma[j]),
                step.and_then(|j| g.kernel.kernel[j]),
                Some(g.cumulative_length[k]),
            ]);
        }
        t
    }
}

/// Trajectory table: amplitudes, overlap modulus and argument, unwrapped phase.
pub fn evolution_table(traj: &Trajectory, angles: &AngleTrack) -> Table {
    let dim = traj.dim();
    let mut names = vec!["t".to_string()];
    for i in 0..dim {
        names.push(format!("re_{i}"));
        names.push(format!("im_{i}"));
    }
    names.extend(["abs_c", "arg_c", "Phi"].map(String::from));
    let mut t = Table { columns: names, rows: Vec::new() };
    for k in 0..traj.times.len() {
        let mut row = vec![Some(traj.times[k])];
        for a in traj.states[k].amplitudes().iter() {
            row.push(Some(a.re));
            row.push(Some(a.im));
        }
        let c = traj.overlaps[k];
        row.push(Some(c.norm()));
        row.push((!angles.node_flags[k]).then(|| c.arg()));
        row.push(angles.phi_total[k]);
        t.push(row);
    }
    t
}
