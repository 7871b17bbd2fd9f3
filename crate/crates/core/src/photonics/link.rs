//! muLED -> muOPD optical channel.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpticalLinkParams {
    pub emitter_exponent: f64,
    /// Radiant intensity scale, W/cm² at 1 m on axis.
    pub emitter_intensity: f64,
    pub saturation_voltage: f64,
    /// Irradiance giving half the saturation voltage, W/cm².
    pub half_saturation_irradiance: f64,
    pub threshold_voltage: f64,
    pub bandwidth_hz: f64,
    pub contact_distance: f64,
}

/// Distance at which an aligned link crosses the digital threshold.
pub const CALIBRATED_RANGE: f64 = 4.5e-3;

impl Default for OpticalLinkParams {
    fn default() -> Self {
        let (vmax, vth, e_half) = (1.2, 0.7, 5e-6);
        let e_star = e_half * vth / (vmax - vth);
        OpticalLinkParams {
            emitter_exponent: 1.0,
            emitter_intensity: e_star * CALIBRATED_RANGE * CALIBRATED_RANGE,
            saturation_voltage: vmax,
            half_saturation_irradiance: e_half,
            threshold_voltage: vth,
            bandwidth_hz: 5000.0,
            contact_distance: 1e-4,
        }
    }
}

/// Point emitter with an outward face normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emitter {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub on: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl OpticalLinkParams {
    pub fn irradiance(&self, emitter: &Emitter, receiver: &Receiver) -> f64 {
        if !emitter.on {
            return 0.0;
        }
        let delta = receiver.position - emitter.position;
        let raw = delta.norm();
        let d = raw.max(self.contact_distance);
        let dir = if raw > 0.0 { delta / raw } else { emitter.normal };
        let cos_e = emitter.normal.dot(&dir);
        let cos_r = receiver.normal.dot(&-dir);
        if cos_e <= 0.0 || cos_r <= 0.0 {
            return 0.0;
        }
        self.emitter_intensity * cos_e.powf(self.emitter_exponent) * cos_r / (d * d)
    }

    pub fn voltage(&self, irradiance: f64) -> f64 {
        let e = irradiance.max(0.0);
        self.saturation_voltage * e / (e + self.half_saturation_irradiance)
    }

    pub fn digital(&self, voltage: f64) -> bool {
        voltage >= self.threshold_voltage
    }

    pub fn receive(&self, emitter: &Emitter, receiver: &Receiver) -> (f64, bool) {
        let v = self.voltage(self.irradiance(emitter, receiver));
        (v, self.digital(v))
    }

    /// Smoothing factor of the detector's first-order low-pass for step `dt`.
    pub fn filter_alpha(&self, dt: f64) -> f64 {
        1.0 - (-2.0 * std::f64::consts::PI * self.bandwidth_hz * dt).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aligned(d: f64) -> (Emitter, Receiver) {
        (
            Emitter { position: Vector3::zeros(), normal: Vector3::x(), on: true },
            Receiver { position: Vector3::new(d, 0.0, 0.0), normal: -Vector3::x() },
        )
    }

    #[test]
    fn calibrated_crossing() {
        let p = OpticalLinkParams::default();
        let (e, r) = aligned(CALIBRATED_RANGE);
        assert!((p.receive(&e, &r).0 - 0.7).abs() < 1e-12);
        assert!(p.receive(&aligned(4e-3).0, &aligned(4e-3).1).1);
        assert!(!p.receive(&aligned(8e-3).0, &aligned(8e-3).1).1);
    }

    #[test]
    fn zero_distance_clamped() {
        let p = OpticalLinkParams::default();
        let (e, r) = aligned(0.0);
        let (v, on) = p.receive(&e, &r);
        assert!(v.is_finite() && on);
    }

    #[test]
    fn grazing_receiver_is_dark() {
        let p = OpticalLinkParams::default();
        let (e, mut r) = aligned(2e-3);
        r.normal = Vector3::y();
        assert_eq!(p.receive(&e, &r).0, 0.0);
    }
}
