use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::Error;

/// Irradiance of one sun, W/cm².
pub const ONE_SUN: f64 = 0.1;
/// Floor of the tubular response for light along the tube axis.
pub const END_CAP_FLOOR: f64 = 0.1;

pub fn pce(p_max: f64, p_in: f64, area_cm2: f64) -> Result<f64, Error> {
    if !(p_in > 0.0) || !(area_cm2 > 0.0) {
        return Err(Error::Domain(format!("pce needs positive p_in and area (got {p_in}, {area_cm2})")));
    }
    Ok(100.0 * p_max / (p_in * area_cm2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellKind {
    Planar { normal: [f64; 3] },
    /// Rolled tube on a cube edge; `faces` are the outward normals of the two
    /// faces meeting at that edge.
    Tubular { axis: [f64; 3], faces: [[f64; 3]; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolarCellSpec {
    pub i_sc: f64,
    pub v_oc: f64,
    pub fill_factor: f64,
    pub area_cm2: f64,
    pub kind: CellKind,
}

impl SolarCellSpec {
    /// Single rolled cell at its best measured operating point.
    pub fn single_tube() -> Self {
        SolarCellSpec {
            i_sc: 50e-6,
            v_oc: 0.65,
            fill_factor: 0.5,
            area_cm2: 0.5 * 50e-6 * 0.65 / (ONE_SUN * 0.115),
            kind: CellKind::Tubular { axis: [0.0, 0.0, 1.0], faces: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] },
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.fill_factor > 0.0 && self.fill_factor < 1.0) {
            return Err(Error::Config("fill factor must lie in (0, 1)".into()));
        }
        if !(self.i_sc > 0.0 && self.v_oc > 0.0 && self.area_cm2 > 0.0) {
            return Err(Error::Config("iSc, vOc and area must be positive".into()));
        }
        Ok(())
    }

    pub fn p_max(&self) -> f64 {
        self.fill_factor * self.i_sc * self.v_oc
    }

    /// Visibility of a source in direction `to_source` (body frame).
    pub fn sees(&self, to_source: &Vector3<f64>) -> bool {
        match self.kind {
            CellKind::Planar { normal } => Vector3::from(normal).dot(to_source) > 0.0,
            CellKind::Tubular { faces, .. } => (Vector3::from(faces[0]) + Vector3::from(faces[1])).dot(to_source) > 1e-9,
        }
    }
}

/// Response to light arriving from unit direction `to_source`. Tubular cells
/// depend only on the axial component, so rotations about the axis leave the
/// result bit-identical whenever they preserve that component.
pub fn angular_factor(cell: &SolarCellSpec, to_source: &Vector3<f64>) -> f64 {
    match cell.kind {
        CellKind::Planar { normal } => Vector3::from(normal).dot(to_source).max(0.0),
        CellKind::Tubular { axis, .. } => {
            let c = Vector3::from(axis).dot(to_source);
            (1.0 - c * c).max(0.0).sqrt().max(END_CAP_FLOOR)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchRule {
    /// Series current is the smallest illuminated-cell current.
    StrictMin,
    /// Operates at the best subset: dim cells leak through their shunt and
    /// add no voltage.
    #[default]
    LeakyShunt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesString {
    pub cells: Vec<SolarCellSpec>,
    pub bypass_diodes: bool,
    pub rule: MismatchRule,
    pub fill_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Sun,
    DomeLed,
    PeerLed,
}

/// Directional source; `direction` points from the body toward the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightSource {
    pub direction: [f64; 3],
    pub irradiance: f64,
    pub kind: SourceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StringOutput {
    pub power: f64,
    pub v_out: f64,
    pub i_out: f64,
}

/// Edges carrying tubes on the folded cube, as (axis, face, face).
const TUBE_EDGES: [([f64; 3], [f64; 3], [f64; 3]); 8] = [
    ([0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
    ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
    ([0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]),
    ([0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
    ([0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -1.0]),
    ([1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]),
    ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
    ([0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]),
];

/// Per-tube values of the eight-cell string.
pub const STRING_CELL_ISC: f64 = 7e-6;
pub const STRING_CELL_VOC: f64 = 0.7;
/// Power at the top-lit operating point of the folded cube.
pub const STRING_P_TOP: f64 = 17e-6;

impl SeriesString {
    fn cell(kind: CellKind) -> SolarCellSpec {
        SolarCellSpec {
            i_sc: STRING_CELL_ISC,
            v_oc: STRING_CELL_VOC,
            fill_factor: 0.5,
            area_cm2: STRING_P_TOP / (ONE_SUN * 0.015) / 8.0,
            kind,
        }
    }

    /// Eight tubes on the edges of the folded cube.
    pub fn folded() -> Self {
        let cells = TUBE_EDGES
            .iter()
            .map(|&(axis, f1, f2)| Self::cell(CellKind::Tubular { axis, faces: [f1, f2] }))
            .collect();
        SeriesString {
            cells,
            bypass_diodes: false,
            rule: MismatchRule::LeakyShunt,
            fill_factor: STRING_P_TOP / (3.0 * STRING_CELL_VOC * STRING_CELL_ISC),
        }
    }

    /// The same eight cells lying flat, facing +z, before folding.
    pub fn prefolded() -> Self {
        SeriesString {
            cells: (0..8).map(|_| Self::cell(CellKind::Planar { normal: [0.0, 0.0, 1.0] })).collect(),
            ..Self::folded()
        }
    }

    pub fn total_area_cm2(&self) -> f64 {
        self.cells.iter().map(|c| c.area_cm2).sum()
    }

    /// Short-circuit current of every cell under `sources` with the body
    /// rotated by `pose` (body to world).
    pub fn cell_currents(&self, sources: &[LightSource], pose: &Rotation3<f64>) -> Vec<f64> {
        let local: Vec<(Vector3<f64>, f64)> = sources
            .iter()
            .filter(|s| s.irradiance > 0.0)
            .map(|s| (pose.inverse_transform_vector(&Vector3::from(s.direction)), s.irradiance))
            .collect();
        self.cells
            .iter()
            .map(|c| {
                local
                    .iter()
                    .filter(|(d, _)| c.sees(d))
                    .map(|(d, e)| c.i_sc * angular_factor(c, d) * e / ONE_SUN)
                    .sum()
            })
            .collect()
    }

    pub fn power(&self, sources: &[LightSource], pose: &Rotation3<f64>) -> StringOutput {
        let currents = self.cell_currents(sources, pose);
        let mut lit: Vec<(f64, f64)> =
            currents.iter().zip(&self.cells).filter(|(i, _)| **i > 0.0).map(|(i, c)| (*i, c.v_oc)).collect();
        if lit.is_empty() {
            return StringOutput::default();
        }
        let v_out: f64 = lit.iter().map(|l| l.1).sum();
        if self.bypass_diodes {
            let power = self.fill_factor * lit.iter().map(|(i, v)| i * v).sum::<f64>();
            let i_out = lit.iter().map(|l| l.0).fold(0.0, f64::max);
            return StringOutput { power, v_out, i_out };
        }
        lit.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (i_out, volts) = match self.rule {
            MismatchRule::StrictMin => (lit.last().unwrap().0, v_out),
            MismatchRule::LeakyShunt => {
                let mut best = (0.0, 0.0);
                let mut v = 0.0;
                for &(i, vc) in &lit {
                    v += vc;
                    if i * v > best.0 * best.1 {
                        best = (i, v);
                    }
                }
                best
            }
        };
        StringOutput { power: self.fill_factor * i_out * volts, v_out, i_out }
    }
}

pub fn sun_from_above(irradiance: f64) -> LightSource {
    LightSource { direction: [0.0, 0.0, 1.0], irradiance, kind: SourceKind::Sun }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tube_hits_calibration() {
        let c = SolarCellSpec::single_tube();
        let eff = pce(c.p_max(), ONE_SUN, c.area_cm2).unwrap();
        assert!((eff - 11.5).abs() < 1e-12);
        assert!((c.area_cm2 - 1.413e-3).abs() < 1e-6);
    }

    #[test]
    fn pce_domain() {
        assert!(pce(1.0, 0.0, 1.0).is_err());
        assert!(pce(1.0, 1.0, -1.0).is_err());
        assert_eq!(pce(0.0, 0.1, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn planar_factor() {
        let c = SeriesString::prefolded().cells[0];
        assert_eq!(angular_factor(&c, &Vector3::z()), 1.0);
        assert_eq!(angular_factor(&c, &Vector3::x()), 0.0);
    }

    #[test]
    fn folded_top_light() {
        let s = SeriesString::folded();
        let out = s.power(&[sun_from_above(ONE_SUN)], &Rotation3::identity());
        assert!((out.power - 17e-6).abs() < 1e-12);
        assert!((out.v_out - 2.1).abs() < 1e-12);
        assert!((out.i_out - 7e-6).abs() < 1e-15);
    }

    #[test]
    fn darkness() {
        let s = SeriesString::folded();
        assert_eq!(s.power(&[sun_from_above(0.0)], &Rotation3::identity()), StringOutput::default());
        assert_eq!(s.power(&[], &Rotation3::identity()), StringOutput::default());
    }

    #[test]
    fn strict_min_limits_current() {
        let s = SeriesString { rule: MismatchRule::StrictMin, ..SeriesString::folded() };
        let d = Vector3::new(1.0, 0.3, 0.6).normalize();
        let src = LightSource { direction: d.into(), irradiance: ONE_SUN, kind: SourceKind::Sun };
        let strict = s.power(&[src], &Rotation3::identity());
        let leaky = SeriesString::folded().power(&[src], &Rotation3::identity());
        assert!(strict.power <= leaky.power);
        assert_eq!(strict.v_out, leaky.v_out);
    }
}
