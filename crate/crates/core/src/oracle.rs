//! Brute-force recomputation of the phase ledger and the geometry series.
//!
//! Everything here uses a different discretization from the main
//! pipeline: rates are taken from finite differences of the sampled states
//! or from `H` directly, then integrated by quadrature, instead of summing
//! arguments of neighbouring overlaps.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::Trajectory;
use crate::geometry::GeometryReport;
use crate::numerics::{ComplexMatrix, ComplexVector, QuantumState, C64};
use crate::phases::PhaseLedger;
use crate::tolerances::Tolerances;

/// Kernel comparisons skip steps with `gamma^2` below this.
pub const KERNEL_GAMMA_SQ_FLOOR: f64 = 1e-4;

/// One main-versus-oracle comparison. For a series the reported values are
/// those at the sample of largest disagreement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub quantity: String,
    pub main_value: f64,
    pub oracle_value: f64,
    pub abs_diff: f64,
    /// `abs_diff / max(max |main|, 1)`.
    pub rel_diff: f64,
    pub method: String,
    pub sample: Option<usize>,
    pub compared: usize,
    /// Samples defined in one series but not the other.
    pub unmatched: usize,
}

impl OracleReport {
    pub fn scalar(quantity: &str, method: &str, main_value: f64, oracle_value: f64) -> Self {
        let abs_diff = (main_value - oracle_value).abs();
        Self {
            quantity: quantity.into(),
            main_value,
            oracle_value,
            abs_diff,
            rel_diff: abs_diff / main_value.abs().max(1.0),
            method: method.into(),
            sample: None,
            compared: 1,
            unmatched: 0,
        }
    }

    pub fn series(quantity: &str, method: &str, main: &[Option<f64>], oracle: &[Option<f64>]) -> Self {
        let mut scale: f64 = 1.0;
        let mut worst: Option<(usize, f64, f64)> = None;
        let (mut compared, mut unmatched) = (0, 0);
        for (k, (m, o)) in main.iter().zip(oracle).enumerate() {
            if let Some(m) = m {
                scale = scale.max(m.abs());
            }
            match (m, o) {
                (Some(m), Some(o)) => {
                    compared += 1;
                    if worst.is_none_or(|(_, wm, wo)| (m - o).abs() > (wm - wo).abs()) {
                        worst = Some((k, *m, *o));
                    }
                }
                (None, None) => {}
                _ => unmatched += 1,
            }
        }
        unmatched += main.len().abs_diff(oracle.len());
        let (sample, main_value, oracle_value) = match worst {
            Some((k, m, o)) => (Some(k), m, o),
            None => (None, 0.0, 0.0),
        };
        let abs_diff = (main_value - oracle_value).abs();
        Self {
            quantity: quantity.into(),
            main_value,
            oracle_value,
            abs_diff,
            rel_diff: abs_diff / scale,
            method: method.into(),
            sample,
            compared,
            unmatched,
        }
    }

    pub fn passes(&self, rel_tol: f64) -> bool {
        self.rel_diff <= rel_tol && self.unmatched == 0
    }
}

fn some(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().copied().map(Some).collect()
}

/// Derivatives of vector samples: central differences inside, second-order
/// one-sided differences at both ends.
fn fd_derivatives(times: &[f64], vs: &[ComplexVector]) -> Vec<ComplexVector> {
    let n = vs.len();
    match n {
        0 => Vec::new(),
        1 => vec![vs[0].map(|_| C64::new(0.0, 0.0))],
        2 => {
            let d = (&vs[1] - &vs[0]) / C64::new(times[1] - times[0], 0.0);
            vec![d.clone(), d]
        }
        _ => (0..n)
            .map(|k| {
                if k == 0 {
                    let h = times[1] - times[0];
                    ((&vs[1] - &vs[0]) * C64::new(4.0, 0.0) - (&vs[2] - &vs[0])) / C64::new(2.0 * h, 0.0)
                } else if k == n - 1 {
                    let h = times[n - 1] - times[n - 2];
                    ((&vs[n - 1] - &vs[n - 2]) * C64::new(4.0, 0.0) - (&vs[n - 1] - &vs[n - 3]))
                        / C64::new(2.0 * h, 0.0)
                } else {
                    (&vs[k + 1] - &vs[k - 1]) / C64::new(times[k + 1] - times[k - 1], 0.0)
                }
            })
            .collect(),
    }
}

/// `Im <v|v'>` for each sample of a run.
fn connection_rates(times: &[f64], vs: &[ComplexVector]) -> Vec<f64> {
    fd_derivatives(times, vs).iter().zip(vs).map(|(d, v)| v.dotc(d).im).collect()
}

/// Cumulative integral of samples `f` over `times`. Each interval uses the
/// quadratic through three neighbouring samples; two samples fall back to
/// the trapezoid.
fn cumulative_quadrature(times: &[f64], f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    if n == 0 {
        return out;
    }
    out.push(0.0);
    for i in 0..n - 1 {
        let h = times[i + 1] - times[i];
        acc += if n == 2 {
            0.5 * h * (f[0] + f[1])
        } else if i + 2 < n {
            h / 12.0 * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2])
        } else {
            h / 12.0 * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1])
        };
        out.push(acc);
    }
    out
}

/// `i int <chi|dchi/dt> dt` for `chi = e^{-i arg c} psi`, using central
/// differences and the trapezoid rule, Richardson-extrapolated from the
/// grid and its every-other-sample subgrid when the step count is even.
pub fn fd_connection_integral(times: &[f64], states: &[QuantumState]) -> Result<f64> {
    fd_connection_integral_with(times, states, &Tolerances::default())
}

pub fn fd_connection_integral_with(times: &[f64], states: &[QuantumState], tol: &Tolerances) -> Result<f64> {
    let n = states.len();
    if n < 16 || times.len() != n {
        return Err(Error::InsufficientSamples { needed: 16, found: n.min(times.len()) });
    }
    let psi0 = states[0].amplitudes();
    let mut chi = Vec::with_capacity(n);
    for (k, s) in states.iter().enumerate() {
        let c = psi0.dotc(s.amplitudes());
        if c.norm() <= tol.node {
            return Err(Error::NodeEncountered { index: k, time: times[k] });
        }
        chi.push(s.amplitudes() * C64::from_polar(1.0, -c.arg()));
    }
    let integral = |step: usize| {
        let t: Vec<f64> = times.iter().step_by(step).copied().collect();
        let v: Vec<ComplexVector> = chi.iter().step_by(step).cloned().collect();
        let rate = connection_rates(&t, &v);
        -(0..t.len() - 1).map(|i| 0.5 * (rate[i] + rate[i + 1]) * (t[i + 1] - t[i])).sum::<f64>()
    };
    let fine = integral(1);
    if (n - 1).is_multiple_of(2) {
        Ok((4.0 * fine - integral(2)) / 3.0)
    } else {
        Ok(fine)
    }
}

/// Contiguous samples of one segment on which a quantity is defined.
#[derive(Debug, Clone, Copy)]
struct Run {
    segment: usize,
    first: usize,
    last: usize,
}

impl Run {
    fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }
}

struct Grid<'a> {
    traj: &'a Trajectory,
    /// `(start, end, first sample, last sample)` per segment.
    segments: Vec<(f64, f64, usize, usize)>,
    hamiltonians: Vec<ComplexMatrix>,
}

impl<'a> Grid<'a> {
    fn new(traj: &'a Trajectory) -> Self {
        let starts = traj.schedule.segment_starts();
        let eps = 1e-12 * traj.t_final().abs().max(1.0);
        let segments = traj
            .schedule
            .segments()
            .iter()
            .zip(&starts)
            .map(|(seg, &start)| {
                let end = start + seg.duration;
                let first = traj.times.iter().position(|&t| t >= start - eps).unwrap_or(0);
                let last = traj.times.iter().rposition(|&t| t <= end + eps).unwrap_or(traj.times.len() - 1);
                (start, end, first, last)
            })
            .collect();
        let hamiltonians = traj.schedule.segments().iter().map(|s| s.hamiltonian.matrix().clone()).collect();
        Self { traj, segments, hamiltonians }
    }

    fn runs(&self, defined: impl Fn(usize) -> bool) -> Vec<Run> {
        let mut runs = Vec::new();
        for (segment, &(_, _, first, last)) in self.segments.iter().enumerate() {
            let mut open: Option<usize> = None;
            for k in first..=last {
                match (defined(k), open) {
                    (true, None) => open = Some(k),
                    (false, Some(s)) => {
                        runs.push(Run { segment, first: s, last: k - 1 });
                        open = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = open {
                runs.push(Run { segment, first: s, last });
            }
        }
        runs
    }

    fn times(&self, run: &Run) -> &[f64] {
        &self.traj.times[run.indices()]
    }

    /// Stitches per-run cumulative integrals into one series. Consecutive
    /// runs in different segments with no undefined sample between them are
    /// joined by extrapolating each run's rate to the segment boundary;
    /// anything else is a gap bridged by `gap(previous run, next run)`, which
    /// returns the offsets from the previous run's last sample to each later
    /// sample up to the next run's first, `None` where undefined.
    fn assemble(
        &self,
        runs: &[Run],
        rate: impl Fn(&Run) -> Vec<f64>,
        mut gap: impl FnMut(&Run, &Run) -> Vec<Option<f64>>,
    ) -> Vec<Option<f64>> {
        let times = &self.traj.times;
        let mut out: Vec<Option<f64>> = vec![None; times.len()];
        let mut prev: Option<(Run, Vec<f64>)> = None;
        for run in runs {
            let f = rate(run);
            let base = match &prev {
                None => 0.0,
                Some((p, pf)) => {
                    let at_prev = out[p.last].unwrap();
                    let joined = p.segment != run.segment && run.first <= p.last + 1;
                    if joined {
                        let boundary = self.segments[p.segment].1;
                        let tail = extrapolated_area(self.times(p), pf, boundary, true);
                        let head = extrapolated_area(self.times(run), &f, boundary, false);
                        at_prev + tail + head
                    } else {
                        // offsets for samples p.last+1 ..= run.first
                        let offsets = gap(p, run);
                        for (i, o) in offsets.iter().enumerate() {
                            let k = p.last + 1 + i;
                            if out[k].is_none() {
                                out[k] = o.map(|o| at_prev + o);
                            }
                        }
                        at_prev + offsets.last().copied().flatten().unwrap_or(0.0)
                    }
                }
            };
            let cum = cumulative_quadrature(self.times(run), &f);
            for (i, k) in run.indices().enumerate() {
                if out[k].is_none() {
                    out[k] = Some(base + cum[i]);
                }
            }
            prev = Some((*run, f));
        }
        out
    }
}

/// Area between the end of a run and a boundary time, with the rate
/// extended linearly from the two outermost samples.
fn extrapolated_area(times: &[f64], f: &[f64], boundary: f64, at_end: bool) -> f64 {
    let n = times.len();
    let (t_edge, f_edge, slope) = if n < 2 {
        let i = if at_end { n - 1 } else { 0 };
        (times[i], f[i], 0.0)
    } else if at_end {
        (times[n - 1], f[n - 1], (f[n - 1] - f[n - 2]) / (times[n - 1] - times[n - 2]))
    } else {
        (times[0], f[0], (f[1] - f[0]) / (times[1] - times[0]))
    };
    let span = boundary - t_edge;
    let f_boundary = f_edge + slope * span;
    0.5 * (f_edge + f_boundary) * span
}

/// Largest per-step phase change a finite-difference rate is trusted across.
pub const RESOLVED_PHASE_STEP: f64 = 0.02;

/// Sample `k` is resolved when neither adjacent step moves the phase by more
/// than [`RESOLVED_PHASE_STEP`]. Steps where `valid` fails do not count.
fn resolved(n: usize, k: usize, valid: impl Fn(usize) -> bool, step: impl Fn(usize) -> f64) -> bool {
    let ok = |j: usize| !valid(j) || step(j).abs() <= RESOLVED_PHASE_STEP;
    (k == 0 || ok(k - 1)) && (k + 1 >= n || ok(k))
}

/// Increment `raw + 2 pi m` closest to `predicted`; near-ties go negative.
fn lift(raw: f64, predicted: f64, tie: f64) -> f64 {
    let m = ((predicted - raw) / TAU).round();
    let candidates = [raw + TAU * (m - 1.0), raw + TAU * m, raw + TAU * (m + 1.0)];
    let best = candidates.iter().map(|c| (c - predicted).abs()).fold(f64::INFINITY, f64::min);
    candidates.into_iter().filter(|c| (c - predicted).abs() <= best + tie).fold(f64::INFINITY, f64::min)
}

/// Every ledger and geometry series recomputed from definitions.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceLedger {
    pub times: Vec<f64>,
    pub overlaps: Vec<C64>,
    /// `2 arccos |c|`.
    pub s0: Vec<f64>,
    pub phi_total: Vec<Option<f64>>,
    pub phi_dynamical: Vec<f64>,
    pub phi_geometric: Vec<Option<f64>>,
    pub phi_orthogonal: Vec<Option<f64>>,
    /// `1 - |c|^2`.
    pub gpf: Vec<f64>,
    /// Cumulative chord length `sum 2 sqrt(1 - |<psi_k|psi_{k+1}>|^2)`.
    pub cumulative_length: Vec<f64>,
    pub circuitousness: Vec<f64>,
    /// Instantaneous rates at both ends of each grid step, evaluated with
    /// the Hamiltonian acting during that step.
    pub step_rates: Vec<Option<[Rates; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    /// `2 dH / hbar`.
    pub speed: f64,
    /// `1 - (dS0/dt)^2 / (dS/dt)^2`, undefined at nodes, near `S0 = 0` and at rest.
    pub gamma_sq: Option<f64>,
    /// `dPhi/dt`, undefined at nodes.
    pub phase_rate: Option<f64>,
    /// `dS0/dt`, undefined where `gamma_sq` is.
    pub s0_rate: Option<f64>,
}

pub fn recompute_ledger_bruteforce(traj: &Trajectory) -> Result<BruteForceLedger> {
    recompute_ledger_bruteforce_with(traj, &Tolerances::default())
}

pub fn recompute_ledger_bruteforce_with(traj: &Trajectory, tol: &Tolerances) -> Result<BruteForceLedger> {
    let n = traj.states.len();
    if n < 3 {
        return Err(Error::InsufficientSamples { needed: 3, found: n });
    }
    let hbar = traj.hbar();
    let grid = Grid::new(traj);
    let psi0 = traj.states[0].amplitudes().clone();
    let amps: Vec<&ComplexVector> = traj.states.iter().map(|s| s.amplitudes()).collect();
    let overlaps: Vec<C64> = amps.iter().map(|a| psi0.dotc(a)).collect();
    // H psi_k with the Hamiltonian of the run's segment; samples on a
    // boundary need the segment they are viewed from
    let h_psi = |seg: usize, k: usize| &grid.hamiltonians[seg] * amps[k];

    let all = grid.runs(|_| true);
    let phi_dynamical: Vec<f64> = grid
        .assemble(
            &all,
            |run| run.indices().map(|k| -amps[k].dotc(&h_psi(run.segment, k)).re / hbar).collect(),
            |_, _| Vec::new(),
        )
        .into_iter()
        .map(|v| v.unwrap())
        .collect();

    let non_node = |k: usize| overlaps[k].norm() > tol.node;
    let c_step = |j: usize| (overlaps[j + 1] * overlaps[j].conj()).arg();
    let phase_runs = grid.runs(|k| non_node(k) && resolved(n, k, |j| non_node(j) && non_node(j + 1), c_step));
    let phase_rate = |run: &Run| -> Vec<f64> {
        run.indices()
            .map(|k| {
                let c_dot = psi0.dotc(&h_psi(run.segment, k)) * C64::new(0.0, -1.0 / hbar);
                (c_dot * overlaps[k].conj()).im / overlaps[k].norm_sqr()
            })
            .collect()
    };
    let point_rate = |k: usize| {
        let seg = grid.segments.iter().rposition(|&(_, _, first, last)| first <= k && k <= last).unwrap_or(0);
        let c_dot = psi0.dotc(&h_psi(seg, k)) * C64::new(0.0, -1.0 / hbar);
        (c_dot * overlaps[k].conj()).im / overlaps[k].norm_sqr()
    };
    // chord sums between non-node samples; a block of node samples is
    // crossed on the branch nearest the rate-predicted change
    let phi_total = grid.assemble(&phase_runs, phase_rate, |a, b| {
        let mut offsets = Vec::new();
        let (mut acc, mut last) = (0.0, a.last);
        for k in a.last + 1..=b.first {
            if !non_node(k) {
                offsets.push(None);
                continue;
            }
            acc += if last + 1 == k {
                c_step(last)
            } else {
                let raw = (overlaps[k] * overlaps[last].conj()).arg();
                let predicted = 0.5 * (point_rate(last) + point_rate(k)) * (traj.times[k] - traj.times[last]);
                lift(raw, predicted, tol.branch_tie)
            };
            offsets.push(Some(acc));
            last = k;
        }
        offsets
    });

    let phi_geometric = grid.assemble(
        &phase_runs,
        |run| {
            let chi: Vec<ComplexVector> =
                run.indices().map(|k| amps[k] * C64::from_polar(1.0, -overlaps[k].arg())).collect();
            connection_rates(grid.times(run), &chi).into_iter().map(|r| -r).collect()
        },
        |a, b| {
            let ka = a.last;
            (ka + 1..=b.first)
                .map(|k| Some(phi_total[k]? - phi_total[ka]? - (phi_dynamical[k] - phi_dynamical[ka])))
                .collect()
        },
    );

    let perp: Vec<ComplexVector> = amps.iter().zip(&overlaps).map(|(a, c)| *a - &psi0 * *c).collect();
    let present = |k: usize| perp[k].norm() > tol.node;
    let bar = |k: usize| &perp[k] / C64::new(perp[k].norm(), 0.0);
    let bar_step = |j: usize| bar(j).dotc(&bar(j + 1)).arg();
    let both_present = |j: usize| present(j) && present(j + 1);
    let orth_runs = grid.runs(|k| present(k) && resolved(n, k, both_present, bar_step));
    let phi_orthogonal = grid.assemble(
        &orth_runs,
        |run| {
            let bars: Vec<ComplexVector> = run.indices().map(bar).collect();
            connection_rates(grid.times(run), &bars)
        },
        |a, b| {
            let mut acc = 0.0;
            (a.last + 1..=b.first)
                .map(|k| {
                    if both_present(k - 1) {
                        acc += bar_step(k - 1);
                    }
                    present(k).then_some(acc)
                })
                .collect()
        },
    );

    let norm0 = psi0.dotc(&psi0).re;
    let fidelity: Vec<f64> = overlaps.iter().zip(&amps).map(|(c, a)| c.norm_sqr() / (norm0 * a.dotc(a).re)).collect();
    let s0: Vec<f64> = fidelity.iter().map(|f| 2.0 * f.sqrt().min(1.0).acos()).collect();
    let gpf: Vec<f64> = fidelity.iter().map(|f| 1.0 - f).collect();

    let mut cumulative_length = vec![0.0];
    let mut circuitousness = vec![0.0];
    for k in 0..n - 1 {
        // Gram determinant, zero exactly for identical samples
        let m = amps[k].dotc(amps[k + 1]).norm_sqr();
        let ds = 2.0 * (amps[k].norm_squared() * amps[k + 1].norm_squared() - m).max(0.0).sqrt();
        cumulative_length.push(cumulative_length[k] + ds);
        circuitousness.push(circuitousness[k] + ds - (s0[k + 1] - s0[k]).abs());
    }

    let rates = |seg: usize, k: usize| -> Rates {
        let hp = h_psi(seg, k);
        let mean = amps[k].dotc(&hp).re;
        let speed = 2.0 * (hp.norm_squared() - mean * mean).max(0.0).sqrt() / hbar;
        let c = overlaps[k];
        let c_dot = psi0.dotc(&hp) * C64::new(0.0, -1.0 / hbar);
        let non_node = c.norm() > tol.node;
        let phase_rate = non_node.then(|| (c_dot * c.conj()).im / c.norm_sqr());
        let sin_half = (1.0 - c.norm_sqr()).max(0.0).sqrt();
        let s0_rate = (non_node && sin_half > 1e-6 && speed > tol.turn)
            .then(|| -2.0 * (c_dot * c.conj()).re / (c.norm() * sin_half));
        let gamma_sq = s0_rate.map(|r| 1.0 - (r / speed).powi(2));
        Rates { speed, gamma_sq, phase_rate, s0_rate }
    };
    let step_rates = (0..n - 1)
        .map(|k| {
            let seg = grid.segments.iter().position(|&(_, _, first, last)| first <= k && k < last)?;
            Some([rates(seg, k), rates(seg, k + 1)])
        })
        .collect();

    Ok(BruteForceLedger {
        times: traj.times.clone(),
        overlaps,
        s0,
        phi_total,
        phi_dynamical,
        phi_geometric,
        phi_orthogonal,
        gpf,
        cumulative_length,
        circuitousness,
        step_rates,
    })
}

fn turns(a: &Rates, b: &Rates) -> bool {
    match (a.s0_rate, b.s0_rate) {
        (Some(x), Some(y)) => x * y < 0.0,
        _ => false,
    }
}

/// Compares a brute-force ledger with the main pipeline's series.
pub fn compare(brute: &BruteForceLedger, ledger: &PhaseLedger, geometry: &GeometryReport) -> Vec<OracleReport> {
    let n = brute.times.len();
    let mut out = vec![
        OracleReport::series("s0", "2 arccos |c|", &some(&ledger.s0), &some(&brute.s0)),
        OracleReport::series(
            "phi_total",
            "quadrature of Im(c' conj c)/|c|^2 with c' from H",
            &ledger.phi_total,
            &brute.phi_total,
        ),
        OracleReport::series(
            "phi_dynamical",
            "piecewise quadratic quadrature of <psi|H|psi>",
            &some(&ledger.phi_dynamical),
            &some(&brute.phi_dynamical),
        ),
        OracleReport::series(
            "phi_geometric",
            "finite-difference connection of chi",
            &ledger.phi_geometric,
            &brute.phi_geometric,
        ),
        OracleReport::series(
            "phi_orthogonal",
            "finite-difference connection of psibar",
            &ledger.phi_orthogonal,
            &brute.phi_orthogonal,
        ),
        OracleReport::series("gpf", "1 - |c|^2", &some(&ledger.gpf), &some(&brute.gpf)),
        OracleReport::series(
            "fs_length",
            "chord sum 2 sqrt(1 - |<psi_k|psi_k+1>|^2)",
            &some(&geometry.cumulative_length),
            &some(&brute.cumulative_length),
        ),
        OracleReport::series(
            "circuitousness",
            "chord sum minus |dS0| from arccos",
            &some(&geometry.circuitousness.cumulative),
            &some(&brute.circuitousness),
        ),
    ];

    // gamma^2 per grid step: main from finite steps, oracle as the mean of
    // instantaneous endpoint values. Steps where either side is undefined,
    // or S0 turns inside the step, are skipped
    let steps = n - 1;
    let mut main_g = vec![None; steps];
    let mut oracle_g = vec![None; steps];
    for k in 0..steps {
        let Some([a, b]) = brute.step_rates[k] else { continue };
        if turns(&a, &b) {
            continue;
        }
        if let (Some(g), Some(a), Some(b)) = (geometry.kernel.gamma[k], a.gamma_sq, b.gamma_sq) {
            main_g[k] = Some(g * g);
            oracle_g[k] = Some(0.5 * (a + b));
        }
    }
    out.push(OracleReport::series("gamma_sq", "1 - (dS0/dt / dS/dt)^2 from instantaneous rates", &main_g, &oracle_g));

    // |K dS0| = sin(S0) |dPhi| / gamma accumulated over steps where gamma is
    // well away from zero; near geodesic steps the ratio is roundoff-dominated
    let mut main_k = vec![None; n];
    let mut oracle_k = vec![None; n];
    let (mut acc_main, mut acc_oracle) = (0.0, 0.0);
    let term = |r: &Rates, s0: f64| -> Option<f64> {
        let g = r.gamma_sq.filter(|&g| g >= KERNEL_GAMMA_SQ_FLOOR)?;
        Some(s0.sin() * r.phase_rate?.abs() / g.sqrt())
    };
    for k in 0..steps {
        let (Some(kernel), Some([ra, rb])) = (geometry.kernel.kernel[k], brute.step_rates[k]) else { continue };
        if turns(&ra, &rb) {
            continue;
        }
        let (Some(a), Some(b)) = (term(&ra, brute.s0[k]), term(&rb, brute.s0[k + 1])) else { continue };
        acc_main += (kernel * (ledger.s0[k + 1] - ledger.s0[k])).abs();
        acc_oracle += 0.5 * (a + b) * (brute.times[k + 1] - brute.times[k]);
        main_k[k + 1] = Some(acc_main);
        oracle_k[k + 1] = Some(acc_oracle);
    }
    out.push(OracleReport::series(
        "kernel_reconstruction",
        "trapezoid of sin(S0)|dPhi/dt|/gamma from instantaneous rates",
        &main_k,
        &oracle_k,
    ));
    out
}

/// Builds the main pipeline and the brute-force ledger for `traj` and compares them.
pub fn cross_check(traj: &Trajectory) -> Result<Vec<OracleReport>> {
    use crate::decomposition::{angle_track, orthogonal_track};
    let angles = angle_track(traj)?;
    let orth = orthogonal_track(traj)?;
    let ledger = PhaseLedger::build(traj, &angles, &orth)?;
    let geometry = GeometryReport::build(traj, &angles)?;
    let brute = recompute_ledger_bruteforce(traj)?;
    let mut out = compare(&brute, &ledger, &geometry);
    if angles.node_count() == 0 && traj.schedule.is_time_independent() {
        if let Some(main) = ledger.final_geometric() {
            let fd = fd_connection_integral(&traj.times, &traj.states)?;
            out.push(OracleReport::scalar("phi_geometric_final", "Richardson finite-difference connection", main, fd));
        }
    }
    Ok(out)
}
