use nalgebra::Vector3;

use super::body::WaterParams;

/// Lateral meniscus attraction between two floating bodies whose centres are
/// `d` apart; `contact` is the centre distance at face contact.
pub fn capillary_force(d: f64, contact: f64, water: &WaterParams) -> f64 {
    if d - contact > water.capillary_cutoff {
        return 0.0;
    }
    water.capillary_force_scale * (-(d - contact).max(0.0) / water.capillary_length).exp()
}

/// Horizontal force on the body at `a` from the body at `b`.
pub fn capillary_pull(a: &Vector3<f64>, b: &Vector3<f64>, contact: f64, water: &WaterParams) -> Vector3<f64> {
    let mut delta = b - a;
    delta.z = 0.0;
    let d = delta.norm();
    if d == 0.0 {
        return Vector3::zeros();
    }
    delta / d * capillary_force(d, contact, water)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile() {
        let w = WaterParams::default();
        let e = 1e-3;
        assert_eq!(capillary_force(e, e, &w), w.capillary_force_scale);
        let one_length = capillary_force(e + w.capillary_length, e, &w);
        assert!((one_length - w.capillary_force_scale / std::f64::consts::E).abs() < 1e-20);
        assert!(capillary_force(e + 30.001e-3, e, &w) < 1e-12);
        assert!(capillary_force(e + 29.999e-3, e, &w) > 1e-11);
    }

    #[test]
    fn pull_is_horizontal_and_attractive() {
        let w = WaterParams::default();
        let f = capillary_pull(&Vector3::new(0.0, 0.0, 0.01), &Vector3::new(3e-3, 0.0, 0.0105), 1e-3, &w);
        assert!(f.x > 0.0 && f.y == 0.0 && f.z == 0.0);
    }
}
