use proptest::prelude::*;
use tendon_hand::actuation::{
    coast_step, electrical_step, motor_torque, steady_state_current, BridgeCommand, MotorParams,
};

fn motors() -> impl Strategy<Value = MotorParams> {
    prop_oneof![Just(MotorParams::palm_default()), Just(MotorParams::forearm_default())]
}

/// Fine RK4 integration of `L di/dt = d V - Ke ω - R i`.
fn rk4_current(p: &MotorParams, i0: f64, duty: f64, supply: f64, omega: f64, t: f64) -> f64 {
    let f = |i: f64| {
        (duty * supply - p.back_emf_v_s_per_rad * omega - p.winding_resistance_ohm * i) / p.winding_inductance_h
    };
    let n = 10_000;
    let h = t / n as f64;
    let mut i = i0;
    for _ in 0..n {
        let k1 = f(i);
        let k2 = f(i + 0.5 * h * k1);
        let k3 = f(i + 0.5 * h * k2);
        let k4 = f(i + h * k3);
        i += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    i
}

#[test]
fn inductive_step_matches_ode_integration() {
    let mut p = MotorParams::palm_default();
    p.winding_inductance_h = 2e-3;
    let (duty, supply, omega) = (0.6, 12.0, 3.0);
    let mut i = 0.0;
    for _ in 0..5 {
        i = electrical_step(&p, i, duty, supply, omega, 1e-4).unwrap();
    }
    let oracle = rk4_current(&p, 0.0, duty, supply, omega, 5e-4);
    assert!((i - oracle).abs() < 1e-9, "{i} vs {oracle}");
}

#[test]
fn released_bridge_conducts_only_above_supply() {
    let p = MotorParams::palm_default();
    let slow = 0.5 * 12.0 / p.back_emf_v_s_per_rad;
    assert_eq!(coast_step(&p, 0.1, 12.0, slow, 1e-3).unwrap(), 0.0);
    let fast = 1.5 * 12.0 / p.back_emf_v_s_per_rad;
    let i = BridgeCommand::Release.step(&p, 0.0, 12.0, fast, 1e-3).unwrap();
    assert!((i - (-6.0 / p.winding_resistance_ohm)).abs() < 1e-12);
}

#[test]
fn supply_outside_rating_is_rejected() {
    assert!(electrical_step(&MotorParams::palm_default(), 0.0, 0.5, 24.0, 0.0, 1e-3).is_err());
}

proptest! {
    #[test]
    fn steady_current_is_affine(p in motors(), d1 in -1.0..1.0f64, d2 in -1.0..1.0f64, w1 in -50.0..50.0f64, w2 in -50.0..50.0f64, a in 0.0..1.0f64) {
        let f = |d: f64, w: f64| steady_state_current(&p, d, 12.0, w);
        let mix = f(a * d1 + (1.0 - a) * d2, a * w1 + (1.0 - a) * w2);
        let lin = a * f(d1, w1) + (1.0 - a) * f(d2, w2);
        prop_assert!((mix - lin).abs() <= 1e-12);
    }

    #[test]
    fn torque_never_exceeds_stall(p in motors(), i in -100.0..100.0f64) {
        let t = motor_torque(&p, i);
        prop_assert!(t.torque.abs() <= p.stall_torque_nmm);
        prop_assert_eq!(t.saturated, p.output_torque_constant() * i.abs() > p.stall_torque_nmm);
    }

    #[test]
    fn mechanical_power_never_exceeds_electrical(p in motors(), duty in -1.0..1.0f64, w in -60.0..60.0f64) {
        let supply = 12.0;
        let i = steady_state_current(&p, duty, supply, w);
        let t = motor_torque(&p, i);
        prop_assume!(!t.saturated);
        let p_mech = t.torque * w / 1000.0;
        let p_elec = duty * supply * i;
        prop_assert!(p_mech <= p_elec + 1e-12);
    }
}
