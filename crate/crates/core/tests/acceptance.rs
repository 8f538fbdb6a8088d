//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phasefrac::cli::analysis::Analysis;
use phasefrac::decomposition::decompose_unitary_action;
use phasefrac::evolution::HamiltonianSchedule;
use phasefrac::numerics::{
    max_abs_vec, propagator, random_hermitian, random_state, HermitianOperator, QuantumState, C64,
};
use phasefrac::oracle::cross_check;
use phasefrac::scenarios::{catalog, qubit_precession, random_system, ClosedFormOracle, Scenario};
use phasefrac::speedlimits::geometric_qsl;

const STEPS: usize = 4096;

/// Residuals at or below this are roundoff and carry no convergence order.
const ROUNDOFF_FLOOR: f64 = 1e-13;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn analyse(s: &Scenario, steps: usize) -> Analysis {
    Analysis::run(s, steps, false).unwrap_or_else(|e| panic!("{} at {steps} steps: {e}", s.name))
}

fn order(coarse: f64, fine: f64, factor: f64) -> f64 {
    (coarse / fine).ln() / factor.ln()
}

fn split_reconstruction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (mut split, mut angle_form) = (0.0_f64, 0.0_f64);
    for i in 0..200u64 {
        let dim = 2 + (i as usize % 7);
        let h = random_hermitian(dim, 1_000 + i).unwrap();
        let psi = random_state(dim, 5_000 + i).unwrap();
        let t = rng.gen_range(0.0..10.0);
        let u = propagator(&h, t, 1.0).unwrap();
        let u_psi = QuantumState::new(&u * psi.amplitudes()).unwrap();
        let d = decompose_unitary_action(&psi, &u_psi).unwrap();
        split = split.max(d.reconstruction_residual(&psi, &u_psi));

        let s0 = 2.0 * d.delta.atan2(d.mean.norm());
        let phi = d.mean.arg();
        let mut rebuilt = psi.amplitudes() * C64::from_polar((0.5 * s0).cos(), phi);
        if let Some(orth) = &d.orthogonal {
            rebuilt += orth.amplitudes() * C64::new((0.5 * s0).sin(), 0.0);
        }
        angle_form = angle_form.max(max_abs_vec(&(rebuilt - u_psi.amplitudes())));
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        split <= 1e-10 && angle_form <= 1e-10 && elapsed < 1.0,
        format!("orthogonal split {split:.2e}, angle form {angle_form:.2e}, {elapsed:.3} s"),
    )
}

fn fractional_law(scenarios: &[Scenario]) -> Outcome {
    let mut worst = (0.0_f64, String::new());
    let mut min_order = (f64::INFINITY, String::new());
    let mut at_floor = Vec::new();
    for s in scenarios {
        let r: Vec<f64> =
            [STEPS, 2 * STEPS, 4 * STEPS].iter().map(|&n| analyse(s, n).ledger.fractional_law.max_abs()).collect();
        if r[0] > worst.0 {
            worst = (r[0], s.name.clone());
        }
        if r[0] <= ROUNDOFF_FLOOR {
            at_floor.push(s.name.clone());
            continue;
        }
        let p = order(r[0], r[1], 2.0).min(order(r[0], r[2], 4.0));
        if p < min_order.0 {
            min_order = (p, s.name.clone());
        }
    }
    outcome(
        worst.0 <= 5e-6 && min_order.0 >= 1.9,
        format!(
            "max residual {:.2e} ({}), min order {:.2} ({}), at roundoff: {}",
            worst.0,
            worst.1,
            min_order.0,
            min_order.1,
            if at_floor.is_empty() { "none".into() } else { at_floor.join(",") }
        ),
    )
}

fn gpf_law(analyses: &[(String, Analysis)]) -> Outcome {
    let mut max_dev = 0.0_f64;
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, a) in analyses {
        let r = &a.ledger.ratio_check;
        max_dev = max_dev.max(r.max_deviation);
        let total = r.checked + r.skipped;
        if name.starts_with("precession-") {
            let frac = r.skipped as f64 / total as f64;
            if name == "precession-th90" {
                // Geodesic motion: dPhi = dPhiBar on every step away from the node.
                parts.push(format!("{name} degenerate, skipped {}/{total}", r.skipped));
            } else {
                ok &= frac < 0.01;
                parts.push(format!("{name} skipped {}/{total}", r.skipped));
            }
        }
    }
    ok &= max_dev <= 1e-5;
    outcome(ok, format!("max |ratio - f_g| {max_dev:.2e}; {}", parts.join("; ")))
}

fn cyclic_phases() -> Outcome {
    let s = qubit_precession(PI / 3.0, 1.0).unwrap();
    let a = analyse(&s, STEPS);
    let phi = a.ledger.final_total().unwrap();
    let phi_d = a.ledger.final_dynamical();
    let phi_g = a.ledger.final_geometric().unwrap();
    let oracle = ClosedFormOracle::new(PI / 3.0, 1.0, 1.0);
    let expected = [-PI, -FRAC_PI_2, -FRAC_PI_2];
    let got = [phi, phi_d, phi_g];
    let err = expected.iter().zip(&got).fold(0.0_f64, |m, (e, g)| m.max((e - g).abs()));
    let oracle_err = (oracle.geometric_phase(TAU) + FRAC_PI_2).abs();
    outcome(
        err <= 1e-4 && oracle_err <= 1e-12,
        format!("Phi {phi:.8}, Phi_D {phi_d:.8}, Phi_G {phi_g:.8}, max err {err:.2e}"),
    )
}

fn path_length(analyses: &[(String, Analysis)], scenarios: &[Scenario]) -> Outcome {
    let th60 = &analyses.iter().find(|(n, _)| n == "precession-th60").unwrap().1;
    let expected = TAU * (PI / 3.0).sin();
    let len_err = (th60.geometry.total_length - expected).abs();
    let mut worst = (0.0_f64, String::new());
    for ((name, a), s) in analyses.iter().zip(scenarios) {
        if !s.is_single_segment() {
            continue;
        }
        let (o, v) = (a.geometry.step_lengths.overlap_total(), a.geometry.step_lengths.variance_total());
        let rel = if o.max(v) <= 1e-12 { 0.0 } else { (o - v).abs() / o.max(v) };
        if rel > worst.0 {
            worst = (rel, name.clone());
        }
    }
    outcome(
        len_err <= 1e-4 && worst.0 <= 1e-6,
        format!(
            "th60 S = {:.8} (err {len_err:.2e}); max form disagreement {:.2e} ({})",
            th60.geometry.total_length, worst.0, worst.1
        ),
    )
}

fn metric_identities(analyses: &[(String, Analysis)], scenarios: &[Scenario]) -> Outcome {
    let mut precession = 0.0_f64;
    let mut forms = 0.0_f64;
    for (name, a) in analyses {
        forms = forms.max(a.geometry.metric.form_disagreement());
        if name.starts_with("precession-") {
            precession = precession.max(a.geometry.metric.max_rotating_off_nodes());
        }
    }
    // Residuals reach roundoff well before 4096 steps, so the order is measured on a coarser grid.
    let mut min_order = (f64::INFINITY, String::new());
    for s in scenarios.iter().filter(|s| s.name.starts_with("random-")) {
        let r: Vec<f64> =
            [256, 512, 1024].iter().map(|&n| analyse(s, n).geometry.metric.max_rotating_off_nodes()).collect();
        let p = order(r[0], r[1], 2.0).min(order(r[0], r[2], 4.0));
        if p < min_order.0 {
            min_order = (p, s.name.clone());
        }
    }
    outcome(
        precession <= 1e-8 && min_order.0 >= 2.0 && forms <= 1e-12,
        format!(
            "precession max {precession:.2e}; random min order {:.2} ({}) over 256/512/1024 steps; forms agree to {forms:.2e}",
            min_order.0, min_order.1
        ),
    )
}

fn speed_limits() -> Outcome {
    let mut min_slack = f64::INFINITY;
    for i in 0..100u64 {
        let s = random_system(2 + (i as usize % 7), 300 + i).unwrap();
        let q = analyse(&s, 1024).speed_limits().unwrap();
        min_slack = min_slack.min(q.mt_slack());
    }

    let h = HermitianOperator::pauli_z().scaled(0.5);
    let schedule = HamiltonianSchedule::single(h, PI, 1.0).unwrap();
    let psi0 = QuantumState::from_slice(&[C64::new(FRAC_1_SQRT_2, 0.0); 2]).unwrap();
    let traj = phasefrac::evolution::evolve(&psi0, &schedule, STEPS).unwrap();
    let angles = phasefrac::cli::analysis::angles_for(&traj, false).unwrap();
    let orth = phasefrac::decomposition::orthogonal_track(&traj).unwrap();
    let ledger = phasefrac::phases::PhaseLedger::build(&traj, &angles, &orth).unwrap();
    let half = geometric_qsl(&traj, &angles, &ledger).unwrap();
    let saturation_err = (half.mt_bound / half.t - 1.0).abs();

    let cyc = analyse(&qubit_precession(PI / 3.0, 1.0).unwrap(), STEPS).speed_limits().unwrap();
    let cyclic_ok = cyc.mt_bound == 0.0
        && cyc.geometric_bound_rot > 0.0
        && cyc.t >= cyc.geometric_bound_rot - 1e-9
        && cyc.sign_conflict_steps == 0;
    outcome(
        min_slack >= -1e-9 && saturation_err <= 1e-6 && cyclic_ok,
        format!(
            "min MT slack {min_slack:.3e} over 100 systems; half-period saturation err {saturation_err:.2e}; \
             cyclic th60 mt_bound {}, bound_rot {:.6}, T {:.6}, sign conflicts {}",
            cyc.mt_bound, cyc.geometric_bound_rot, cyc.t, cyc.sign_conflict_steps
        ),
    )
}

fn gauge(scenarios: &[Scenario]) -> Outcome {
    const C: f64 = 0.7321;
    let (mut invariant, mut shifted) = (0.0_f64, 0.0_f64);
    for s in scenarios {
        let base = analyse(s, STEPS);
        let mut moved = s.clone();
        moved.schedule = s.schedule.shifted(C);
        let gauged = analyse(&moved, STEPS);
        let hbar = s.schedule.hbar();
        for k in 0..base.traj.times.len() {
            let t = base.traj.times[k];
            invariant = invariant.max((base.ledger.s0[k] - gauged.ledger.s0[k]).abs());
            if let (Some(a), Some(b)) = (base.ledger.phi_geometric[k], gauged.ledger.phi_geometric[k]) {
                invariant = invariant.max((a - b).abs());
            }
            let expected = -C * t / hbar;
            if let (Some(a), Some(b)) = (base.ledger.phi_total[k], gauged.ledger.phi_total[k]) {
                shifted = shifted.max((b - a - expected).abs());
            }
            shifted = shifted.max((gauged.ledger.phi_dynamical[k] - base.ledger.phi_dynamical[k] - expected).abs());
        }
    }
    outcome(
        invariant <= 1e-8 && shifted <= 1e-8,
        format!("c = {C}: S0/Phi_G change {invariant:.2e}, Phi/Phi_D shift error {shifted:.2e}"),
    )
}

fn oracle_agreement(scenarios: &[Scenario]) -> Outcome {
    let mut worst = (0.0_f64, String::new());
    let mut failed = Vec::new();
    for s in scenarios {
        let traj = s.evolve(STEPS).unwrap();
        let reports = match cross_check(&traj) {
            Ok(r) => r,
            Err(e) => {
                failed.push(format!("{}: {e}", s.name));
                continue;
            }
        };
        for r in reports {
            if r.rel_diff > worst.0 {
                worst = (r.rel_diff, format!("{}/{}", s.name, r.quantity));
            }
            if !r.passes(1e-4) {
                failed.push(format!("{}/{}", s.name, r.quantity));
            }
        }
    }
    outcome(
        failed.is_empty(),
        format!(
            "max rel diff {:.2e} ({}); failures: {}",
            worst.0,
            worst.1,
            if failed.is_empty() { "none".into() } else { failed.join(", ") }
        ),
    )
}

fn cli_gate() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_phasefrac");
    let run = |args: &[&str]| Command::new(bin).args(args).env_remove("PHASEFRAC_TOL").output().unwrap();
    let first = run(&["verify", "--all"]);
    let second = run(&["verify", "--all"]);
    let mut identical = first.stdout == second.stdout;
    for cmd in ["evolve", "phases", "geometry"] {
        for name in ["builtin:precession-th60", "builtin:random-d6-s2"] {
            let a = run(&[cmd, "--scenario", name, "--format", "json"]);
            let b = run(&[cmd, "--scenario", name, "--format", "json"]);
            identical &= a.status.success() && a.stdout == b.stdout;
        }
    }
    let code = first.status.code();
    outcome(code == Some(0) && identical, format!("verify --all exit {code:?}; reruns byte-identical: {identical}"))
}

fn main() {
    let start = Instant::now();
    let scenarios = catalog();
    let analyses: Vec<(String, Analysis)> = scenarios.iter().map(|s| (s.name.clone(), analyse(s, STEPS))).collect();

    let results = [
        ("1 state reconstruction", split_reconstruction()),
        ("2 fractional law residuals and order", fractional_law(&scenarios)),
        ("3 geometric phase fraction ratio", gpf_law(&analyses)),
        ("4 closed-form cyclic phases", cyclic_phases()),
        ("5 path length", path_length(&analyses, &scenarios)),
        ("6 metric identities", metric_identities(&analyses, &scenarios)),
        ("7 speed limits", speed_limits()),
        ("8 gauge covariance", gauge(&scenarios)),
        ("9 oracle agreement", oracle_agreement(&scenarios)),
        ("10 CLI gate and determinism", cli_gate()),
    ];
    let mut failures = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failures += usize::from(!o.passed);
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failures,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
