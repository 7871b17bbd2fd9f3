//! Light-dome measurement: 16 azimuths x 21 altitudes, one LED lit at a time.

use nalgebra::{Rotation3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solar::{LightSource, SeriesString, SourceKind};

pub const AZIMUTHS: usize = 16;
pub const ALTITUDES: usize = 21;
pub const AZIMUTH_STEP_DEG: f64 = 22.5;
pub const ALTITUDE_STEP_DEG: f64 = 4.5;
/// Irradiance of one dome LED at the dome centre, W/cm².
pub const DOME_LED_IRRADIANCE: f64 = 50e-6;
/// Yaw of the folded cube on the dome stage.
pub const MOUNT_YAW_DEG: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomeMode {
    Prefolded,
    Folded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomePoint {
    pub azimuth_deg: f64,
    pub altitude_deg: f64,
    pub power: f64,
    pub v_out: f64,
    pub relative_pce: f64,
}

pub fn led_direction(azimuth_deg: f64, altitude_deg: f64) -> Vector3<f64> {
    let (az, al) = (azimuth_deg.to_radians(), altitude_deg.to_radians());
    Vector3::new(al.cos() * az.cos(), al.cos() * az.sin(), al.sin())
}

pub fn grid() -> Vec<(f64, f64)> {
    (0..AZIMUTHS)
        .flat_map(|a| (0..ALTITUDES).map(move |e| (a as f64 * AZIMUTH_STEP_DEG, e as f64 * ALTITUDE_STEP_DEG)))
        .collect()
}

pub fn mount_pose(mode: DomeMode) -> Rotation3<f64> {
    match mode {
        DomeMode::Folded => Rotation3::from_axis_angle(&Vector3::z_axis(), MOUNT_YAW_DEG.to_radians()),
        DomeMode::Prefolded => Rotation3::identity(),
    }
}

/// One evaluation per LED with only that LED lit; `lit` limits which LEDs are
/// switched on at all (None = every LED).
pub fn sweep_with(mode: DomeMode, string: &SeriesString, lit: Option<&[usize]>) -> Vec<DomePoint> {
    let pose = mount_pose(mode);
    let mut pts: Vec<DomePoint> = grid()
        .into_par_iter()
        .enumerate()
        .map(|(idx, (az, al))| {
            let on = lit.is_none_or(|l| l.contains(&idx));
            let src = LightSource {
                direction: led_direction(az, al).into(),
                irradiance: if on { DOME_LED_IRRADIANCE } else { 0.0 },
                kind: SourceKind::DomeLed,
            };
            let out = string.power(&[src], &pose);
            DomePoint { azimuth_deg: az, altitude_deg: al, power: out.power, v_out: out.v_out, relative_pce: 0.0 }
        })
        .collect();
    let max = pts.iter().map(|p| p.power).fold(0.0, f64::max);
    if max > 0.0 {
        for p in &mut pts {
            p.relative_pce = p.power / max;
        }
    }
    pts
}

pub fn sweep(mode: DomeMode, string: &SeriesString) -> Vec<DomePoint> {
    sweep_with(mode, string, None)
}

pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

pub fn max_min_ratio(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size() {
        assert_eq!(grid().len(), 336);
    }

    #[test]
    fn single_led_single_entry() {
        let pts = sweep_with(DomeMode::Folded, &SeriesString::folded(), Some(&[100]));
        assert_eq!(pts.iter().filter(|p| p.power > 0.0).count(), 1);
        assert!(pts[100].power > 0.0);
    }
}
