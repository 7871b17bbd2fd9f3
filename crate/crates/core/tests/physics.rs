use nalgebra::Vector3;
use serde_json::Value;
use smartlet::aquatics::{capillary_force, gas_rate, SmartletBody, WaterParams};
use smartlet::photonics::{Emitter, OpticalLinkParams, Receiver, SeriesString, SolarCellSpec};

fn oracle() -> Value {
    serde_json::from_str(include_str!("fixtures/oracle_values.json")).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

#[test]
fn electrolysis_and_body_constants() {
    let o = &oracle()["physics"];
    let w = WaterParams::default();
    let b = SmartletBody::default();
    assert!(close(gas_rate(7e-6).unwrap(), o["gas_rate_7ua_m3_s"].as_f64().unwrap(), 1e-12));
    assert!(close(b.dry_mass, o["dry_mass_kg"].as_f64().unwrap(), 1e-12));
    assert!(close(b.critical_volume(&w), o["v_crit_m3"].as_f64().unwrap(), 1e-12));
    assert!(close(b.excess_weight(&w) / w.drag, o["terminal_velocity_2e-7N"].as_f64().unwrap(), 1e-12));
}

#[test]
fn capillary_profile() {
    let o = &oracle()["physics"];
    let w = WaterParams::default();
    let at_lc = capillary_force(w.capillary_length + 1e-3, 1e-3, &w) / w.capillary_force_scale;
    assert!(close(at_lc, o["capillary_at_lc_over_f0"].as_f64().unwrap(), 1e-12));
    assert_eq!(capillary_force(1e-3 + 30.5e-3, 1e-3, &w), 0.0);
    assert!(capillary_force(1e-3 + 29e-3, 1e-3, &w) > 0.0);
}

#[test]
fn link_voltage_curve() {
    let p = OpticalLinkParams::default();
    assert!(close(p.emitter_intensity, oracle()["link"]["emitter_intensity"].as_f64().unwrap(), 1e-12));
    for (mm, v) in oracle()["link"]["volts"].as_object().unwrap() {
        let d: f64 = mm.parse::<f64>().unwrap() * 1e-3;
        let tx = Emitter { position: Vector3::zeros(), normal: Vector3::x(), on: true };
        let rx = Receiver { position: Vector3::new(d, 0.0, 0.0), normal: -Vector3::x() };
        let (volts, digital) = p.receive(&tx, &rx);
        assert!(close(volts, v.as_f64().unwrap(), 1e-9), "{mm} mm: {volts}");
        if d <= 4e-3 || d >= 5e-3 {
            assert_eq!(digital, d <= 4e-3, "{mm} mm");
        }
    }
}

#[test]
fn link_needs_facing_optics() {
    let p = OpticalLinkParams::default();
    let tx = Emitter { position: Vector3::zeros(), normal: -Vector3::x(), on: true };
    let rx = Receiver { position: Vector3::new(2e-3, 0.0, 0.0), normal: -Vector3::x() };
    assert_eq!(p.irradiance(&tx, &rx), 0.0);
    let off = Emitter { on: false, normal: Vector3::x(), ..tx };
    assert_eq!(p.irradiance(&off, &rx), 0.0);
}

#[test]
fn harvester_areas() {
    let o = &oracle()["photovoltaics"];
    assert!(close(SolarCellSpec::single_tube().area_cm2, o["single_tube_area_cm2"].as_f64().unwrap(), 1e-12));
    let s = SeriesString::folded();
    assert!(close(s.total_area_cm2(), o["string_area_cm2"].as_f64().unwrap(), 1e-12));
    assert!(close(s.fill_factor, o["string_effective_factor"].as_f64().unwrap(), 1e-12));
}

#[test]
fn acceptance_physics_checks() {
    for check in [smartlet::acceptance::pce_calibration, smartlet::acceptance::gas_ode, smartlet::acceptance::link_envelope] {
        let c = check();
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
}
