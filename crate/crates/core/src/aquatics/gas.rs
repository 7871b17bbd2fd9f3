use crate::Error;

pub const FARADAY: f64 = 96485.0;
/// Molar volume of an ideal gas at 25 °C, m³/mol.
pub const MOLAR_VOLUME: f64 = 2.445e-2;

/// Combined H2 + O2 volume rate, m³/s.
pub fn gas_rate(current: f64) -> Result<f64, Error> {
    if current < 0.0 || current.is_nan() {
        return Err(Error::Domain(format!("negative current {current}")));
    }
    Ok((current / (2.0 * FARADAY) + current / (4.0 * FARADAY)) * MOLAR_VOLUME)
}

/// Advances dV/dt = rate - k V by `dt` with rate and k held constant.
pub fn step_volume(volume: f64, rate: f64, k: f64, dt: f64) -> f64 {
    if k == 0.0 {
        return (volume + rate * dt).max(0.0);
    }
    let steady = rate / k;
    (steady + (volume - steady) * (-k * dt).exp()).max(0.0)
}

/// Closed form of the same ODE from V(0) = v0.
pub fn analytic_volume(v0: f64, rate: f64, k: f64, t: f64) -> f64 {
    let steady = rate / k;
    steady + (v0 - steady) * (-k * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_microamps() {
        assert!((gas_rate(7e-6).unwrap() - 1.3303881432346995e-12).abs() < 1e-24);
        assert_eq!(gas_rate(0.0).unwrap(), 0.0);
        assert!(gas_rate(-1e-9).is_err());
    }

    #[test]
    fn linear_in_current() {
        let a = gas_rate(3e-6).unwrap();
        assert!((gas_rate(6e-6).unwrap() - 2.0 * a).abs() <= 1e-27);
    }

    #[test]
    fn step_tends_to_steady_state() {
        let r = gas_rate(7e-6).unwrap();
        let mut v = 0.0;
        for _ in 0..100_000 {
            v = step_volume(v, r, 0.02, 0.01);
        }
        assert!((v - r / 0.02).abs() / (r / 0.02) < 1e-6);
    }
}
