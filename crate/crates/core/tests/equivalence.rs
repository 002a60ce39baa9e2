//! Discrete Q-learning against the continuous dynamics.

use smoothq::dynamics::{discrete_play, integrate, q_continuous_closed_form, q_update, IntegratorConfig, QValueState};
use smoothq::experiments::{make_amps, make_match_mismatch};
use smoothq::qre::{qre_residual, solve_qre};
use smoothq::StrategyProfile;

#[test]
fn mean_field_play_tracks_the_rescaled_flow() {
    // per-player rates differ, so each player's clock runs at α/T_k; equal
    // rates keep a single time axis
    let (t, alpha) = (2.0, 5e-4);
    let g = make_amps().with_temperatures(&[t, t]).unwrap();
    let x0 = StrategyProfile::new(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
    let rounds = 8_000;
    let discrete = discrete_play(&g, &QValueState::from_profile(&g, &x0, alpha).unwrap(), rounds, 200).unwrap();
    let scale = alpha / t;
    let cfg = IntegratorConfig::rk4().with_step(scale).with_max_steps(rounds).with_record_every(200).with_stop_tolerance(None);
    let ode = integrate(&g, &x0, &cfg, None).unwrap();
    assert_eq!(ode.times.len(), discrete.times.len());
    for (xd, xc) in discrete.states.iter().zip(&ode.states) {
        assert!(xd.sup_distance(xc) < 5e-4);
    }
}

#[test]
fn the_qre_is_a_rest_point_of_discrete_play() {
    let g = make_match_mismatch(4).with_temperatures(&[0.3; 6]).unwrap();
    let p = solve_qre(&g, 1e-13, 200_000).unwrap().profile;
    // Q-values equal to the rewards at the QRE reproduce it
    let values = (0..g.num_players()).map(|k| g.reward_vector(k, &p).unwrap()).collect();
    let q0 = QValueState::new(values, vec![0.01; g.num_players()]).unwrap();
    let traj = discrete_play(&g, &q0, 2_000, 500).unwrap();
    for x in &traj.states {
        assert!(x.sup_distance(&p) < 1e-10);
        assert!(qre_residual(&g, x).unwrap() < 1e-10);
    }
}

#[test]
fn q_values_under_constant_rewards() {
    // discrete: Q_n = r (1 − (1 − α)^n); continuous: Q(t) = r (1 − e^{−αt})
    let (alpha, r): (f64, f64) = (1e-3, 2.5);
    let mut q = vec![0.0];
    for _ in 0..3_000 {
        q_update(&mut q, alpha, &[r]);
    }
    let exact = r * (1.0 - (1.0 - alpha).powi(3_000));
    assert!((q[0] - exact).abs() < 1e-12);
    let continuous = q_continuous_closed_form(|_| r, alpha, 3_000.0).unwrap();
    assert!((continuous - r * (1.0 - (-alpha * 3_000.0_f64).exp())).abs() < 1e-10);
    assert!((q[0] - continuous).abs() < 2e-3 * r);
}
