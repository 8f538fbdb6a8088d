//! Sampling of `|psi(t)> = U(t)|psi(0)>` on a uniform grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{HermitianOperator, Propagator, QuantumState, C64};

/// Smallest accepted number of grid steps.
pub const MIN_STEPS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub hamiltonian: HermitianOperator,
    pub duration: f64,
}

/// Piecewise-constant Hamiltonian. A single segment is the time-independent case.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSchedule {
    segments: Vec<Segment>,
    hbar: f64,
}

impl HamiltonianSchedule {
    pub fn new(segments: Vec<Segment>, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidSchedule(format!("hbar must be positive, got {hbar}")));
        }
        let first = segments.first().ok_or_else(|| Error::InvalidSchedule("no segments".into()))?;
        let dim = first.hamiltonian.dim();
        for (i, s) in segments.iter().enumerate() {
            if s.hamiltonian.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.hamiltonian.dim() });
            }
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(Error::InvalidSchedule(format!("segment {i} has non-positive duration {}", s.duration)));
            }
        }
        Ok(Self { segments, hbar })
    }

    pub fn single(hamiltonian: HermitianOperator, duration: f64, hbar: f64) -> Result<Self> {
        Self::new(vec![Segment { hamiltonian, duration }], hbar)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.segments[0].hamiltonian.dim()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn is_time_independent(&self) -> bool {
        self.segments.len() == 1
    }

    /// Same schedule with every segment Hamiltonian shifted by `c I`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment { hamiltonian: s.hamiltonian.shifted(c), duration: s.duration })
                .collect(),
            hbar: self.hbar,
        }
    }

    /// Start times of the segments.
    pub fn segment_starts(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s.duration;
                start
            })
            .collect()
    }

    /// Index of the segment active at `t` (right-continuous at boundaries).
    pub fn segment_at(&self, t: f64) -> usize {
        let starts = self.segment_starts();
        starts.iter().rposition(|&s| t >= s).unwrap_or(0)
    }
}

/// Energy moments just before and after an interior segment boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub time: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub variance_before: f64,
    pub variance_after: f64,
}

/// Prepared exact evolution: one propagator per segment and the state at
/// every segment start.
#[derive(Debug, Clone)]
struct Evolver {
    propagators: Vec<Propagator>,
    starts: Vec<f64>,
    start_states: Vec<QuantumState>,
}

impl Evolver {
    fn new(psi0: &QuantumState, schedule: &HamiltonianSchedule) -> Result<Self> {
        let propagators = schedule
            .segments()
            .iter()
            .map(|s| Propagator::new(&s.hamiltonian, schedule.hbar()))
            .collect::<Result<Vec<_>>>()?;
        let starts = schedule.segment_starts();
        let mut start_states = vec![psi0.clone()];
        for (p, s) in propagators.iter().zip(schedule.segments()).take(propagators.len() - 1) {
            let next = p.apply(s.duration, start_states.last().unwrap());
            start_states.push(next);
        }
        Ok(Self { propagators, starts, start_states })
    }

    fn segment_at(&self, t: f64) -> usize {
        self.starts.iter().rposition(|&s| t >= s).unwrap_or(0)
    }

    fn state_at(&self, t: f64) -> (usize, QuantumState) {
        let seg = self.segment_at(t);
        (seg, self.propagators[seg].apply(t - self.starts[seg], &self.start_states[seg]))
    }
}

/// A sampled trajectory together with its cached overlaps and energy moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    /// `c_k = <psi(0)|psi(t_k)>`.
    pub overlaps: Vec<C64>,
    pub energy_expectations: Vec<f64>,
    /// Clamped at zero.
    pub energy_variances: Vec<f64>,
    /// Interior segment boundaries, empty for time-independent schedules.
    pub boundaries: Vec<Boundary>,
    pub schedule: HamiltonianSchedule,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.t_final() / self.steps() as f64
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn hbar(&self) -> f64 {
        self.schedule.hbar()
    }

    pub fn initial(&self) -> &QuantumState {
        &self.states[0]
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Every `factor`-th sample; inverse of [`refine`] on the shared grid.
    pub fn downsample(&self, factor: usize) -> Result<Trajectory> {
        if factor == 0 || !self.steps().is_multiple_of(factor) {
            return Err(Error::ParamOutOfRange(format!("cannot downsample {} steps by {factor}", self.steps())));
        }
        let pick = |v: &Vec<f64>| v.iter().step_by(factor).copied().collect::<Vec<_>>();
        Ok(Trajectory {
            times: pick(&self.times),
            states: self.states.iter().step_by(factor).cloned().collect(),
            overlaps: self.overlaps.iter().step_by(factor).copied().collect(),
            energy_expectations: pick(&self.energy_expectations),
            energy_variances: pick(&self.energy_variances),
            boundaries: self.boundaries.clone(),
            schedule: self.schedule.clone(),
        })
    }
}

fn grid_time(k: usize, steps: usize, t_final: f64) -> f64 {
    // (k * T) / N keeps power-of-two refinements bitwise aligned with the coarse grid.
    if k == steps {
        t_final
    } else {
        (k as f64 * t_final) / steps as f64
    }
}

/// Evolves `psi0` under `schedule` and samples `steps + 1` uniformly spaced states.
pub fn evolve(psi0: &QuantumState, schedule: &HamiltonianSchedule, steps: usize) -> Result<Trajectory> {
    if psi0.dim() != schedule.dim() {
        return Err(Error::DimensionMismatch { expected: schedule.dim(), found: psi0.dim() });
    }
    let norm = psi0.amplitudes().norm();
    if (norm - 1.0).abs() > crate::tolerances::NORMALIZATION {
        return Err(Error::UnnormalizedState { norm });
    }
    if steps < MIN_STEPS {
        return Err(Error::StepCountTooSmall { steps, min: MIN_STEPS });
    }
    let evolver = Evolver::new(psi0, schedule)?;
    let t_final = schedule.total_duration();

    let samples: Vec<(f64, QuantumState, f64, f64)> = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let t = grid_time(k, steps, t_final);
            let (seg, state) = if k == 0 { (0, psi0.clone()) } else { evolver.state_at(t) };
            let (mean, var) = evolver.propagators[seg].spectrum().population_variance(state.amplitudes());
            (t, state, mean, var.max(0.0))
        })
        .collect();

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut energy_expectations = Vec::with_capacity(steps + 1);
    let mut energy_variances = Vec::with_capacity(steps + 1);
    for (t, s, e, v) in samples {
        times.push(t);
        states.push(s);
        energy_expectations.push(e);
        energy_variances.push(v);
    }
    let overlaps = states.iter().map(|s| psi0.inner(s)).collect();

    let boundaries = (1..evolver.starts.len())
        .map(|seg| {
            let state = &evolver.start_states[seg];
            let (eb, vb) = evolver.propagators[seg - 1].spectrum().population_variance(state.amplitudes());
            let (ea, va) = evolver.propagators[seg].spectrum().population_variance(state.amplitudes());
            Boundary {
                time: evolver.starts[seg],
                energy_before: eb,
                energy_after: ea,
                variance_before: vb.max(0.0),
                variance_after: va.max(0.0),
            }
        })
        .collect();

    Ok(Trajectory {
        times,
        states,
        overlaps,
        energy_expectations,
        energy_variances,
        boundaries,
        schedule: schedule.clone(),
    })
}

/// Re-samples the same evolution on a grid `factor` times finer.
pub fn refine(traj: &Trajectory, factor: usize) -> Result<Trajectory> {
    if factor < 2 {
        return Err(Error::ParamOutOfRange(format!("refinement factor must be >= 2, got {factor}")));
    }
    evolve(traj.initial(), &traj.schedule, traj.steps() * factor)
}
