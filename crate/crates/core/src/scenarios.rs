//! Built-in scenarios and the closed-form precession oracle.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI, TAU};

use crate::error::{Error, Result};
use crate::evolution::{evolve, HamiltonianSchedule, Segment, Trajectory};
use crate::numerics::{random_hermitian, random_state, HermitianOperator, QuantumState, C64};

pub const DEFAULT_STEPS: usize = 4096;

/// Closed forms for `H = (hbar omega/2) sigma_z + hbar offset I` acting on
/// `cos(theta/2)|0> + sin(theta/2)|1>`.
///
/// With `x = omega t / 2` the state is
/// `e^{-i offset t} (cos(theta/2) e^{-ix}, sin(theta/2) e^{ix})`, so
///
/// * `c(t) = e^{-i offset t} (cos x - i cos(theta) sin x)`,
///   `|c|^2 = 1 - sin^2(theta) sin^2 x`;
/// * `<H> = hbar (omega/2) cos(theta) + hbar offset` is constant, giving
///   `Phi_D(t) = -(omega/2) cos(theta) t - offset t`;
/// * `dH = (hbar omega/2) sin(theta)`;
/// * `Phi(t) = -atan(cos(theta) tan x) - offset t`, continued across the
///   branch points `x = pi/2 + m pi` by adding `-s m pi` with `s` the sign of
///   `cos(theta)` (taken `+` at `theta = pi/2`, where the continuation is a
///   jump of `-pi` at each node);
/// * `Phi_G = Phi - Phi_D`. At `t = 2 pi/omega` this is
///   `-pi + pi cos(theta) = -pi (1 - cos(theta))`;
/// * the component orthogonal to the initial state is
///   `e^{-i offset t} i sgn(sin x) (-sin(theta/2), cos(theta/2))`, a fixed ray,
///   so its phase is `-offset t` up to a constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormOracle {
    pub theta: f64,
    pub omega: f64,
    pub hbar: f64,
    pub offset: f64,
}

impl ClosedFormOracle {
    pub fn new(theta: f64, omega: f64, hbar: f64) -> Self {
        Self { theta, omega, hbar, offset: 0.0 }
    }

    pub fn with_offset(self, offset: f64) -> Self {
        Self { offset, ..self }
    }

    fn half_angle(&self, t: f64) -> f64 {
        0.5 * self.omega * t
    }

    pub fn state(&self, t: f64) -> QuantumState {
        let x = self.half_angle(t);
        let g = C64::from_polar(1.0, -self.offset * t);
        let a = g * C64::from_polar((0.5 * self.theta).cos(), -x);
        let b = g * C64::from_polar((0.5 * self.theta).sin(), x);
        QuantumState::normalized(crate::numerics::ComplexVector::from_column_slice(&[a, b])).unwrap()
    }

    pub fn overlap(&self, t: f64) -> C64 {
        let x = self.half_angle(t);
        C64::from_polar(1.0, -self.offset * t) * C64::new(x.cos(), -self.theta.cos() * x.sin())
    }

    pub fn s0(&self, t: f64) -> f64 {
        let x = self.half_angle(t);
        let perp = (self.theta.sin() * x.sin()).abs();
        2.0 * perp.atan2(self.overlap(t).norm())
    }

    pub fn total_phase(&self, t: f64) -> f64 {
        let x = self.half_angle(t);
        let m = (x / PI).round();
        let y = x - m * PI;
        let s = if self.theta.cos() >= 0.0 { 1.0 } else { -1.0 };
        let cos_t = self.theta.cos();
        -(s * m * PI + (cos_t * y.sin()).atan2(y.cos())) - self.offset * t
    }

    pub fn dynamical_phase(&self, t: f64) -> f64 {
        -(0.5 * self.omega * self.theta.cos() + self.offset) * t
    }

    pub fn geometric_phase(&self, t: f64) -> f64 {
        self.total_phase(t) - self.dynamical_phase(t)
    }

    pub fn orthogonal_phase(&self, t: f64) -> f64 {
        -self.offset * t
    }

    pub fn energy_spread(&self) -> f64 {
        0.5 * self.hbar * self.omega * self.theta.sin().abs()
    }

    /// `|c|^2 + sin^2(S0/2) - 1` at 64 evenly spread probe times in `[0, t_final]`.
    pub fn consistency_defect(&self, t_final: f64) -> f64 {
        (0..64)
            .map(|k| {
                let t = t_final * k as f64 / 63.0;
                (self.overlap(t).norm_sqr() + (0.5 * self.s0(t)).sin().powi(2) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Sample times where `|c| = 0` within `[0, t_final]`.
    pub fn node_times(&self, t_final: f64) -> Vec<f64> {
        if self.theta.cos().abs() > 1e-12 || self.omega == 0.0 {
            return Vec::new();
        }
        let period = TAU / self.omega;
        let mut t = 0.5 * period;
        let mut out = Vec::new();
        while t <= t_final * (1.0 + 1e-12) {
            out.push(t);
            t += period;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub schedule: HamiltonianSchedule,
    pub psi0: QuantumState,
    pub t_final: f64,
    pub default_steps: usize,
    pub oracle: Option<ClosedFormOracle>,
}

impl Scenario {
    pub fn evolve(&self, steps: usize) -> Result<Trajectory> {
        evolve(&self.psi0, &self.schedule, steps)
    }

    pub fn evolve_default(&self) -> Result<Trajectory> {
        self.evolve(self.default_steps)
    }

    pub fn is_single_segment(&self) -> bool {
        self.schedule.is_time_independent()
    }

    pub fn is_precession(&self) -> bool {
        self.name.starts_with("precession-")
    }
}

fn precession_scenario(name: String, theta: f64, omega: f64, offset: f64, t_final: f64) -> Result<Scenario> {
    let h = HermitianOperator::pauli_z().scaled(0.5 * omega).shifted(offset);
    let psi0 = QuantumState::from_slice(&[C64::new((0.5 * theta).cos(), 0.0), C64::new((0.5 * theta).sin(), 0.0)])?;
    Ok(Scenario {
        description: format!("qubit precession, theta = {theta:.6}, omega = {omega}, offset = {offset}"),
        name,
        schedule: HamiltonianSchedule::single(h, t_final, 1.0)?,
        psi0,
        t_final,
        default_steps: DEFAULT_STEPS,
        oracle: Some(ClosedFormOracle::new(theta, omega, 1.0).with_offset(offset)),
    })
}

fn precession_name(theta: f64) -> String {
    let degrees = theta.to_degrees();
    if (degrees - degrees.round()).abs() < 1e-9 {
        format!("precession-th{}", degrees.round() as i64)
    } else {
        format!("precession-th{degrees:.4}")
    }
}

/// One full period of `H = (omega/2) sigma_z` from polar angle `theta`, with `hbar = 1`.
pub fn qubit_precession(theta: f64, omega: f64) -> Result<Scenario> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::ParamOutOfRange(format!("theta = {theta} must lie in (0, pi)")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::ParamOutOfRange(format!("omega = {omega} must be positive")));
    }
    precession_scenario(precession_name(theta), theta, omega, 0.0, TAU / omega)
}

/// Stationary state: `|0>` under `sigma_z/2` for one period.
pub fn eigenstate() -> Scenario {
    let mut s = precession_scenario("eigenstate".into(), 0.0, 1.0, 0.0, TAU).unwrap();
    s.description = "eigenstate of sigma_z/2, one period".into();
    s
}

/// Equatorial precession with an energy offset; passes through a node at half period.
pub fn node_crossing() -> Scenario {
    let mut s = precession_scenario("node-crossing".into(), FRAC_PI_2, 1.0, 0.25, TAU).unwrap();
    s.description = "equatorial precession with offset 0.25, node at t = pi".into();
    s
}

/// Random Hermitian system of the given dimension, run to `t = 1.2 hbar / dH`.
pub fn random_system(dim: usize, seed: u64) -> Result<Scenario> {
    let h = random_hermitian(dim, seed)?;
    let psi0 = random_state(dim, seed)?;
    let dh = h.variance_from_moments(&psi0).max(0.0).sqrt();
    if dh <= 1e-9 {
        return Err(Error::ZeroVariance);
    }
    let t_final = 1.2 / dh;
    Ok(Scenario {
        name: format!("random-d{dim}-s{seed}"),
        description: format!("random Hermitian, dim {dim}, seed {seed}"),
        schedule: HamiltonianSchedule::single(h, t_final, 1.0)?,
        psi0,
        t_final,
        default_steps: DEFAULT_STEPS,
        oracle: None,
    })
}

/// Two random Hamiltonians applied back to back, switching at half time.
pub fn quench(dim: usize, seed: u64) -> Result<Scenario> {
    let h1 = random_hermitian(dim, seed)?;
    let h2 = random_hermitian(dim, seed.wrapping_add(1000))?;
    let psi0 = random_state(dim, seed)?;
    let dh = h1.variance_from_moments(&psi0).max(0.0).sqrt();
    if dh <= 1e-9 {
        return Err(Error::ZeroVariance);
    }
    let half = 0.6 / dh;
    let schedule = HamiltonianSchedule::new(
        vec![Segment { hamiltonian: h1, duration: half }, Segment { hamiltonian: h2, duration: half }],
        1.0,
    )?;
    Ok(Scenario {
        name: format!("quench-d{dim}-s{seed}"),
        description: format!("two random Hamiltonians, dim {dim}, seed {seed}, switch at t = {half:.6}"),
        t_final: schedule.total_duration(),
        schedule,
        psi0,
        default_steps: DEFAULT_STEPS,
        oracle: None,
    })
}

/// The full catalog, sorted by name.
pub fn catalog() -> Vec<Scenario> {
    let mut out = vec![eigenstate(), node_crossing()];
    for theta in [FRAC_PI_6, FRAC_PI_3, FRAC_PI_2] {
        out.push(qubit_precession(theta, 1.0).unwrap());
    }
    for dim in [2, 4, 6, 8] {
        for seed in 1..=3 {
            out.push(random_system(dim, seed).unwrap());
        }
    }
    out.push(quench(4, 1).unwrap());
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

pub fn catalog_names() -> Vec<String> {
    catalog().into_iter().map(|s| s.name).collect()
}

pub fn builtin(name: &str) -> Result<Scenario> {
    catalog().into_iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::angle_track;
    use crate::phases::dynamical_phase;
    use std::collections::HashSet;

    #[test]
    fn names_unique_and_sorted() {
        let names = catalog_names();
        let set: HashSet<_> = names.iter().collect();
        assert_eq!(set.len(), names.len());
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        for n in
            ["eigenstate", "node-crossing", "precession-th30", "precession-th60", "precession-th90", "random-d6-s2"]
        {
            assert!(names.iter().any(|x| x == n), "{n}");
        }
        assert!(catalog().iter().all(|s| (s.psi0.amplitudes().norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn deterministic_random_systems() {
        let a = builtin("random-d6-s2").unwrap();
        let b = builtin("random-d6-s2").unwrap();
        assert_eq!(a.schedule, b.schedule);
        assert_eq!(a.psi0, b.psi0);
    }

    #[test]
    fn unknown_name() {
        assert_eq!(builtin("nope").unwrap_err(), Error::UnknownScenario("nope".into()));
    }

    #[test]
    fn parameter_ranges() {
        assert!(matches!(qubit_precession(0.0, 1.0), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(qubit_precession(PI, 1.0), Err(Error::ParamOutOfRange(_))));
        assert!(matches!(qubit_precession(1.0, 0.0), Err(Error::ParamOutOfRange(_))));
        assert_eq!(qubit_precession(FRAC_PI_3, 1.0).unwrap().name, "precession-th60");
    }

    #[test]
    fn oracle_consistency() {
        for s in catalog().into_iter().filter_map(|s| s.oracle.map(|o| (o, s.t_final))) {
            assert!(s.0.consistency_defect(s.1) <= 1e-12);
        }
        let o = ClosedFormOracle::new(FRAC_PI_2, 1.0, 1.0);
        assert!(o.overlap(PI).norm() < 1e-15);
        assert_eq!(o.node_times(TAU).len(), 1);
    }

    #[test]
    fn cyclic_closed_forms() {
        let o = ClosedFormOracle::new(FRAC_PI_3, 1.0, 1.0);
        assert!((o.total_phase(TAU) + PI).abs() < 1e-12);
        assert!((o.dynamical_phase(TAU) + FRAC_PI_2).abs() < 1e-12);
        assert!((o.geometric_phase(TAU) + FRAC_PI_2).abs() < 1e-12);
        assert!((o.energy_spread() - 3f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_phase_is_continuous() {
        for theta in [0.3, FRAC_PI_3, 2.0, 2.9] {
            let o = ClosedFormOracle::new(theta, 1.0, 1.0);
            let n = 20_000;
            for k in 0..n {
                let (t0, t1) = (TAU * k as f64 / n as f64, TAU * (k + 1) as f64 / n as f64);
                assert!((o.total_phase(t1) - o.total_phase(t0)).abs() < 1e-2, "theta {theta} t {t0}");
                let arg = (o.overlap(t1) * C64::from_polar(1.0, -o.total_phase(t1))).arg();
                assert!(arg.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn small_angle_geometric_phase() {
        let theta = 1e-3;
        let o = ClosedFormOracle::new(theta, 1.0, 1.0);
        let expected = -PI * theta * theta / 2.0;
        assert!((o.geometric_phase(TAU) - expected).abs() / expected.abs() < 0.01);
        let s = qubit_precession(theta, 1.0).unwrap();
        let traj = s.evolve(4096).unwrap();
        let a = angle_track(&traj).unwrap();
        let pg = a.final_phase().unwrap() - dynamical_phase(&traj).last().unwrap();
        assert!((pg - expected).abs() / expected.abs() < 0.01);
    }

    #[test]
    fn numeric_matches_oracle_away_from_nodes() {
        for name in ["precession-th30", "precession-th60", "precession-th90", "node-crossing"] {
            let s = builtin(name).unwrap();
            let o = s.oracle.unwrap();
            let traj = s.evolve(4096).unwrap();
            let a = angle_track(&traj).unwrap();
            let pd = dynamical_phase(&traj);
            let nodes = o.node_times(s.t_final);
            for (k, &t) in traj.times.iter().enumerate() {
                if nodes.iter().any(|tn| (t - tn).abs() < 2.5 * traj.dt()) {
                    continue;
                }
                assert!((a.s0[k] - o.s0(t)).abs() <= 1e-5, "{name} S0 at {t}");
                assert!((a.phi_total[k].unwrap() - o.total_phase(t)).abs() <= 1e-5, "{name} Phi at {t}");
                assert!((pd[k] - o.dynamical_phase(t)).abs() <= 1e-5, "{name} PhiD at {t}");
            }
        }
    }
}
