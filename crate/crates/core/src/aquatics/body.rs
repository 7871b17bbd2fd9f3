use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::docking::{Face, Offset};
use super::gas;

pub const G: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaterParams {
    pub density: f64,
    pub dissolution_bulk: f64,
    pub dissolution_surface: f64,
    pub drag: f64,
    pub capillary_length: f64,
    pub capillary_force_scale: f64,
    /// Face gap beyond which meniscus attraction is zero, m.
    pub capillary_cutoff: f64,
    /// Bond strength per matched cell, N.
    pub surface_bond_force: f64,
    /// Downward force needed to pull a lone body off the interface, N.
    pub surface_pin_force: f64,
    pub brownian_sigma: f64,
    pub max_speed: f64,
    pub dock_threshold: i32,
    /// Capture face gap as a fraction of the edge length.
    pub capture_fraction: f64,
}

impl Default for WaterParams {
    fn default() -> Self {
        WaterParams {
            density: 1000.0,
            dissolution_bulk: 0.005,
            dissolution_surface: 0.02,
            drag: 2e-5,
            capillary_length: 2.7e-3,
            capillary_force_scale: 1e-6,
            capillary_cutoff: 30e-3,
            surface_bond_force: 1e-8,
            surface_pin_force: 5e-8,
            brownian_sigma: 5e-5,
            max_speed: 20e-3,
            dock_threshold: 6,
            capture_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    Floor,
    Water,
    Surface,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    pub peer: u32,
    pub face: Face,
    pub peer_face: Face,
    pub offset: Offset,
    pub score: i32,
    pub strength: f64,
}

/// Tank interior: x and y extents and water depth, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tank {
    pub size: [f64; 3],
}

impl Default for Tank {
    fn default() -> Self {
        Tank { size: [0.05, 0.02, 0.02] }
    }
}

impl Tank {
    pub fn floor_z(&self, edge: f64) -> f64 {
        edge / 2.0
    }

    pub fn surface_z(&self, edge: f64) -> f64 {
        self.size[2] - edge / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmartletBody {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub edge: f64,
    pub dry_mass: f64,
    pub solid_volume: f64,
    pub gas_volume: f64,
    pub site: Site,
    pub bonds: Vec<Bond>,
}

pub const DEFAULT_SOLID_VOLUME: f64 = 7.0e-11;
pub const DEFAULT_EXCESS_WEIGHT: f64 = 2.0e-7;

impl Default for SmartletBody {
    fn default() -> Self {
        SmartletBody {
            position: Vector3::new(0.0, 0.0, 0.5e-3),
            velocity: Vector3::zeros(),
            edge: 1e-3,
            dry_mass: 1000.0 * DEFAULT_SOLID_VOLUME + DEFAULT_EXCESS_WEIGHT / G,
            solid_volume: DEFAULT_SOLID_VOLUME,
            gas_volume: 0.0,
            site: Site::Floor,
            bonds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionEvent {
    Levitate,
    SurfaceReached,
    SinkStart,
    FloorReached,
}

impl SmartletBody {
    pub fn critical_volume(&self, water: &WaterParams) -> f64 {
        self.dry_mass / water.density - self.solid_volume
    }

    pub fn excess_weight(&self, water: &WaterParams) -> f64 {
        G * (self.dry_mass - water.density * self.solid_volume)
    }
}

/// Net vertical force, positive up. Written around the critical volume so its
/// sign is exactly the sign of (gas volume - critical volume).
pub fn buoyancy_force(body: &SmartletBody, water: &WaterParams) -> f64 {
    water.density * G * (body.gas_volume - body.critical_volume(water))
}

pub struct MotionInput {
    pub gas_rate: f64,
    pub lateral_force: Vector3<f64>,
    /// Held at the interface by dock bonds.
    pub bonded: bool,
    pub pinned: bool,
}

/// Advances gas, then position, by `dt`. Overdamped: velocity is force over drag.
pub fn step_motion<R: Rng>(
    body: &mut SmartletBody,
    input: &MotionInput,
    tank: &Tank,
    water: &WaterParams,
    dt: f64,
    rng: &mut R,
) -> Option<MotionEvent> {
    let k = if body.site == Site::Surface { water.dissolution_surface } else { water.dissolution_bulk };
    body.gas_volume = gas::step_volume(body.gas_volume, input.gas_rate, k, dt);
    debug_assert!(body.gas_volume >= 0.0);
    if input.pinned {
        body.velocity = Vector3::zeros();
        return None;
    }
    let fz = buoyancy_force(body, water);
    let (floor, surface) = (tank.floor_z(body.edge), tank.surface_z(body.edge));
    let mut event = None;
    match body.site {
        Site::Floor if fz > 0.0 => {
            body.site = Site::Water;
            event = Some(MotionEvent::Levitate);
        }
        Site::Surface if !input.bonded && -fz > water.surface_pin_force => {
            body.site = Site::Water;
            event = Some(MotionEvent::SinkStart);
        }
        _ => {}
    }
    let cap = |v: f64| v.clamp(-water.max_speed, water.max_speed);
    let mut v = Vector3::zeros();
    match body.site {
        Site::Floor => {}
        Site::Surface => {
            v.x = cap(input.lateral_force.x / water.drag);
            v.y = cap(input.lateral_force.y / water.drag);
        }
        Site::Water => {
            v.z = cap(fz / water.drag);
            let s = water.brownian_sigma / dt.sqrt();
            v.x = s * rng.sample::<f64, _>(StandardNormal);
            v.y = s * rng.sample::<f64, _>(StandardNormal);
        }
    }
    body.velocity = v;
    body.position += v * dt;
    let half = body.edge / 2.0;
    body.position.x = body.position.x.clamp(half, tank.size[0] - half);
    body.position.y = body.position.y.clamp(half, tank.size[1] - half);
    if body.site == Site::Water {
        if body.position.z >= surface {
            body.position.z = surface;
            body.site = Site::Surface;
            event = event.or(Some(MotionEvent::SurfaceReached));
        } else if body.position.z <= floor {
            body.position.z = floor;
            body.site = Site::Floor;
            event = event.or(Some(MotionEvent::FloorReached));
        }
    }
    event
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_body_constants() {
        let w = WaterParams::default();
        let b = SmartletBody::default();
        assert!((b.excess_weight(&w) - 2.0e-7).abs() < 1e-18);
        assert!((b.critical_volume(&w) - 2.0387359836901123e-11).abs() < 1e-22);
        assert!((buoyancy_force(&b, &w) + 2.0e-7).abs() < 1e-18);
    }

    #[test]
    fn neutral_at_critical_volume() {
        let w = WaterParams::default();
        let mut b = SmartletBody::default();
        b.gas_volume = b.critical_volume(&w);
        assert_eq!(buoyancy_force(&b, &w), 0.0);
    }

    #[test]
    fn terminal_velocity() {
        let w = WaterParams::default();
        let tank = Tank::default();
        let mut b = SmartletBody { site: Site::Water, ..SmartletBody::default() };
        b.position.z = 0.01;
        b.gas_volume = b.critical_volume(&w) + 2e-7 / (w.density * G);
        let w = WaterParams { brownian_sigma: 0.0, dissolution_bulk: 0.0, ..w };
        let input = MotionInput { gas_rate: 0.0, lateral_force: Vector3::zeros(), bonded: false, pinned: false };
        step_motion(&mut b, &input, &tank, &w, 1e-3, &mut ChaCha8Rng::seed_from_u64(0));
        assert!((b.velocity.z - 0.01).abs() < 1e-12);
    }

    #[test]
    fn resting_body_stays() {
        let w = WaterParams::default();
        let tank = Tank::default();
        let mut b = SmartletBody::default();
        b.position = Vector3::new(0.01, 0.01, tank.floor_z(b.edge));
        let start = b.clone();
        let input = MotionInput { gas_rate: 0.0, lateral_force: Vector3::zeros(), bonded: false, pinned: false };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(step_motion(&mut b, &input, &tank, &w, 1e-3, &mut rng), None);
        }
        assert_eq!(b, start);
    }
}
