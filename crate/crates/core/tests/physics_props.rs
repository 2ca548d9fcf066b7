use std::path::Path;

use proptest::prelude::*;
use uav_codesign::f1model::{
    assess, ceiling, knee_point, mission_report, rotor_power, safe_velocity, select_among, DesignSummary,
    KneePoint, PhysicsParams, Provisioning,
};
use uav_codesign::uavspec::{load_problem, CoDesignProblem};

fn nano() -> CoDesignProblem {
    load_problem(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/nano.toml")).unwrap()
}

fn physics(drag: Option<f64>) -> PhysicsParams {
    PhysicsParams { drag_coefficient: drag, ..PhysicsParams::from_problem(&nano()) }
}

fn drag() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![Just(None), (0.5..100.0f64).prop_map(Some)]
}

proptest! {
    #[test]
    fn velocity_rises_with_throughput(f in 1.0..500.0f64, df in 0.0..500.0f64, a in 0.5..100.0f64, k in drag()) {
        let ph = physics(k);
        let v1 = safe_velocity(f, &ph, a);
        let v2 = safe_velocity(f + df, &ph, a);
        prop_assert!(v2 >= v1);
        prop_assert!(v2 <= ceiling(&ph, a) * (1.0 + 1e-12));
    }

    #[test]
    fn velocity_rises_with_acceleration(f in 1.0..500.0f64, a in 0.5..100.0f64, da in 0.0..50.0f64, k in drag()) {
        let ph = physics(k);
        prop_assert!(safe_velocity(f, &ph, a + da) >= safe_velocity(f, &ph, a));
    }

    #[test]
    fn knee_is_monotone_in_acceleration(a in 0.5..100.0f64, da in 0.0..50.0f64, k in drag()) {
        let ph = physics(k);
        prop_assert!(knee_point(&ph, a + da, 0.05).throughput >= knee_point(&ph, a, 0.05).throughput);
    }

    #[test]
    fn knee_reaches_the_target(a in 0.5..100.0f64, eps in 0.01..0.3f64, k in drag()) {
        let ph = physics(k);
        let kp = knee_point(&ph, a, eps);
        prop_assert!(kp.v_safe >= (1.0 - eps) * kp.ceiling);
        let below = kp.throughput - 0.1;
        if below > 0.0 {
            prop_assert!(safe_velocity(below, &ph, a) < (1.0 - eps) * kp.ceiling);
        }
    }

    #[test]
    fn classification_brackets_the_knee(fps in 1.0..400.0f64, knee in 5.0..200.0f64, tol in 0.0..0.2f64) {
        let kp = KneePoint { throughput: knee, v_safe: 1.0, ceiling: 1.0 };
        let c = assess(fps, &kp, tol).classification;
        let expect = if fps > knee * (1.0 + tol) {
            Provisioning::OverProvisioned
        } else if fps < knee * (1.0 - tol) {
            Provisioning::UnderProvisioned
        } else {
            Provisioning::Optimal
        };
        prop_assert_eq!(c, expect);
    }

    #[test]
    fn missions_fall_with_power_and_payload(p in 0.1..10.0f64, dp in 0.0..5.0f64, g in 0.0..20.0f64, dg in 0.0..20.0f64) {
        let prob = nano();
        let d = |w: f64, m: f64| DesignSummary {
            name: "d".into(), compute_fps: 60.0, soc_power_w: w, payload_g: m, success_rate: 0.9,
        };
        let base = mission_report(&prob, &d(p, g)).unwrap().n_missions;
        prop_assert!(mission_report(&prob, &d(p + dp, g)).unwrap().n_missions <= base);
        prop_assert!(mission_report(&prob, &d(p, g + dg)).unwrap().n_missions <= base);
    }

    #[test]
    fn selection_ignores_input_order(rot in 0usize..4, rev in any::<bool>()) {
        let prob = nano();
        let mut ds: Vec<DesignSummary> = ["AP", "HP", "PO", "LP"]
            .iter()
            .map(|n| DesignSummary::of_literal(prob.designs.iter().find(|d| d.name == *n).unwrap(), &prob).unwrap())
            .collect();
        let first = select_among(&ds, &prob).unwrap();
        ds.rotate_left(rot);
        if rev {
            ds.reverse();
        }
        let again = select_among(&ds, &prob).unwrap();
        prop_assert_eq!(&first.chosen_row().design.name, &again.chosen_row().design.name);
        prop_assert_eq!(first.chosen_row().design.name.as_str(), "AP");
    }
}

#[test]
fn rotor_power_follows_the_three_halves_law() {
    let ph = physics(None);
    for m in [20.0, 100.0, 1500.0] {
        let r = rotor_power(2.0 * m, &ph) / rotor_power(m, &ph);
        assert!((r - 2f64.powf(1.5)).abs() < 1e-12);
    }
}

#[test]
fn slower_sensor_caps_a_fast_accelerator() {
    let prob = nano();
    let d = |fps: f64| DesignSummary { name: "d".into(), compute_fps: fps, soc_power_w: 1.0, payload_g: 20.0, success_rate: 0.9 };
    let sensor = prob.platform.sensor.framerate_fps;
    let a = mission_report(&prob, &d(sensor)).unwrap();
    let b = mission_report(&prob, &d(sensor * 4.0)).unwrap();
    assert_eq!(a.action_throughput, b.action_throughput);
    assert_eq!(a.n_missions, b.n_missions);
}
