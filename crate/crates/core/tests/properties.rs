use proptest::prelude::*;

use phasefrac::cli::analysis::Analysis;
use phasefrac::decomposition::{decompose_unitary_action, norm_split_defect};
use phasefrac::evolution::{evolve, HamiltonianSchedule};
use phasefrac::numerics::{max_abs, propagator, random_hermitian, random_state, unitarity_defect, QuantumState};
use phasefrac::scenarios::Scenario;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 32, ..ProptestConfig::default() }
}

/// Random system run for `t_final` with `steps` samples.
fn system(dim: usize, seed: u64, t_final: f64) -> Scenario {
    let h = random_hermitian(dim, seed).unwrap();
    Scenario {
        name: format!("prop-d{dim}-s{seed}"),
        description: String::new(),
        schedule: HamiltonianSchedule::single(h, t_final, 1.0).unwrap(),
        psi0: random_state(dim, seed + 7_919).unwrap(),
        t_final,
        default_steps: 2048,
        oracle: None,
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn propagator_is_unitary(dim in 2usize..=8, seed in 0u64..10_000, t in -20.0f64..20.0) {
        let h = random_hermitian(dim, seed).unwrap();
        let u = propagator(&h, t, 1.0).unwrap();
        prop_assert!(unitarity_defect(&u) <= 1e-12);
    }

    #[test]
    fn propagator_group_property(dim in 2usize..=6, seed in 0u64..10_000, t1 in -5.0f64..5.0, t2 in -5.0f64..5.0) {
        let h = random_hermitian(dim, seed).unwrap();
        let prod = propagator(&h, t1, 1.0).unwrap() * propagator(&h, t2, 1.0).unwrap();
        let joint = propagator(&h, t1 + t2, 1.0).unwrap();
        prop_assert!(max_abs(&(prod - joint)) <= 1e-10);
    }

    #[test]
    fn evolution_preserves_norm(dim in 2usize..=8, seed in 0u64..10_000, t_final in 0.1f64..6.0) {
        let s = system(dim, seed, t_final);
        let traj = evolve(&s.psi0, &s.schedule, 64).unwrap();
        for psi in &traj.states {
            prop_assert!((psi.amplitudes().norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn unitary_action_splits_exactly(dim in 2usize..=8, seed in 0u64..10_000, t in 0.0f64..10.0) {
        let h = random_hermitian(dim, seed).unwrap();
        let psi = random_state(dim, seed + 1).unwrap();
        let u_psi = QuantumState::new(propagator(&h, t, 1.0).unwrap() * psi.amplitudes()).unwrap();
        let d = decompose_unitary_action(&psi, &u_psi).unwrap();
        prop_assert!(d.reconstruction_residual(&psi, &u_psi) <= 1e-10);
        prop_assert!(norm_split_defect(&d) <= 1e-10);
        if let Some(orth) = &d.orthogonal {
            prop_assert!(psi.inner(orth).norm() <= 1e-10);
        }
    }

    #[test]
    fn energy_offset_is_pure_gauge(dim in 2usize..=6, seed in 0u64..10_000, c in -3.0f64..3.0) {
        let s = system(dim, seed, 1.5);
        let mut shifted = s.clone();
        shifted.schedule = s.schedule.shifted(c);
        let (a, b) = (Analysis::run(&s, 512, false).unwrap(), Analysis::run(&shifted, 512, false).unwrap());
        for k in 0..a.traj.times.len() {
            let gauge = -c * a.traj.times[k];
            prop_assert!((a.ledger.s0[k] - b.ledger.s0[k]).abs() <= 1e-8);
            prop_assert!((b.ledger.phi_dynamical[k] - a.ledger.phi_dynamical[k] - gauge).abs() <= 1e-8);
            if let (Some(x), Some(y)) = (a.ledger.phi_geometric[k], b.ledger.phi_geometric[k]) {
                prop_assert!((x - y).abs() <= 1e-8);
            }
            if let (Some(x), Some(y)) = (a.ledger.phi_total[k], b.ledger.phi_total[k]) {
                prop_assert!((y - x - gauge).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn phases_add_up_and_follow_fractional_law(dim in 2usize..=6, seed in 0u64..10_000) {
        let a = Analysis::run(&system(dim, seed, 2.0), 2048, false).unwrap();
        prop_assert!(a.ledger.additivity_max() <= 5e-6);
        prop_assert!(a.ledger.fractional_law.max_abs() <= 5e-6);
        prop_assert!(a.ledger.gpf.iter().all(|f| (0.0..=1.0).contains(f)));
    }

    #[test]
    fn path_dominates_geodesic(dim in 2usize..=6, seed in 0u64..10_000, t_final in 0.2f64..4.0) {
        let a = Analysis::run(&system(dim, seed, t_final), 1024, false).unwrap();
        prop_assert!(a.geometry.total_length >= a.geometry.geodesic_angle - 1e-9);
        prop_assert!(a.geometry.circuitousness.cumulative.iter().all(|&c| c >= -1e-9));
        for g in a.geometry.kernel.gamma.iter().flatten() {
            prop_assert!((0.0..=1.0).contains(g));
        }
    }

    #[test]
    fn mandelstam_tamm_holds(dim in 2usize..=6, seed in 0u64..10_000, t_final in 0.2f64..4.0) {
        let q = Analysis::run(&system(dim, seed, t_final), 1024, false).unwrap().speed_limits().unwrap();
        prop_assert!(q.mt_slack() >= -1e-9);
    }
}
