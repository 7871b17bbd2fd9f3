//! Hydrophobic barcode faces and dock scoring.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Face {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "+z")]
    PosZ,
    #[serde(rename = "-z")]
    NegZ,
}

impl Face {
    pub const ALL: [Face; 6] = [Face::PosX, Face::NegX, Face::PosY, Face::NegY, Face::PosZ, Face::NegZ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn normal(self) -> [f64; 3] {
        match self {
            Face::PosX => [1.0, 0.0, 0.0],
            Face::NegX => [-1.0, 0.0, 0.0],
            Face::PosY => [0.0, 1.0, 0.0],
            Face::NegY => [0.0, -1.0, 0.0],
            Face::PosZ => [0.0, 0.0, 1.0],
            Face::NegZ => [0.0, 0.0, -1.0],
        }
    }

    pub fn opposite(self) -> Face {
        match self {
            Face::PosX => Face::NegX,
            Face::NegX => Face::PosX,
            Face::PosY => Face::NegY,
            Face::NegY => Face::PosY,
            Face::PosZ => Face::NegZ,
            Face::NegZ => Face::PosZ,
        }
    }

    pub fn label(self) -> &'static str {
        ["+x", "-x", "+y", "-y", "+z", "-z"][self.index()]
    }
}

impl FromStr for Face {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Face::ALL.into_iter().find(|f| f.label() == s).ok_or_else(|| Error::Config(format!("unknown face {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Offset {
    Full,
    HalfX,
    HalfY,
}

/// 4x4 grid, row-major, `true` = hydrophobic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FacePattern {
    pub cells: [[bool; 4]; 4],
    pub registration: bool,
}

type Grid = [[bool; 4]; 4];

impl FacePattern {
    pub fn uniform(hydrophobic: bool) -> Self {
        FacePattern { cells: [[hydrophobic; 4]; 4], registration: true }
    }
}

impl FromStr for FacePattern {
    type Err = Error;

    /// 16 characters of '1' (hydrophobic) / '0', row by row.
    fn from_str(s: &str) -> Result<Self, Error> {
        let chars: Vec<char> = s.chars().filter(|c| !matches!(c, '_' | ' ' | '/')).collect();
        if chars.len() != 16 {
            return Err(Error::Config(format!("face pattern needs 16 cells, got {}", chars.len())));
        }
        let mut cells = [[false; 4]; 4];
        for (i, c) in chars.iter().enumerate() {
            cells[i / 4][i % 4] = match c {
                '1' => true,
                '0' => false,
                other => return Err(Error::Config(format!("bad face cell {other:?}"))),
            };
        }
        Ok(FacePattern { cells, registration: true })
    }
}

impl fmt::Display for FacePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.cells {
            for &c in row {
                f.write_str(if c { "1" } else { "0" })?;
            }
        }
        Ok(())
    }
}

impl Serialize for FacePattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FacePattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn mirror(g: &Grid) -> Grid {
    let mut out = [[false; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = g[r][3 - c];
        }
    }
    out
}

fn rotate(g: &Grid) -> Grid {
    let mut out = [[false; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = g[3 - j][i];
        }
    }
    out
}

fn pair_value(a: bool, b: bool) -> i32 {
    match (a, b) {
        (true, true) => 1,
        (false, false) => 0,
        _ => -1,
    }
}

/// Sum over cells that overlap when `b` is shifted by (dr, dc).
fn overlap(a: &Grid, b: &Grid, dr: i32, dc: i32) -> i32 {
    let mut score = 0;
    for r in 0..4i32 {
        for c in 0..4i32 {
            let (br, bc) = (r - dr, c - dc);
            if (0..4).contains(&br) && (0..4).contains(&bc) {
                score += pair_value(a[r as usize][c as usize], b[br as usize][bc as usize]);
            }
        }
    }
    score
}

/// Best contact score of two faces pressed together. `None` when a half
/// offset is requested without registration guides on both faces.
pub fn dock_score(a: &FacePattern, b: &FacePattern, offset: Offset) -> Option<i32> {
    if offset != Offset::Full && !(a.registration && b.registration) {
        return None;
    }
    let mut grids = vec![mirror(&b.cells)];
    for k in 1..4 {
        grids.push(rotate(&grids[k - 1]));
    }
    let best = match offset {
        Offset::Full => grids.iter().map(|g| overlap(&a.cells, g, 0, 0)).max(),
        Offset::HalfX => [0, 2].iter().flat_map(|&k| [2, -2].map(|s| overlap(&a.cells, &grids[k], 0, s))).max(),
        Offset::HalfY => [0, 2].iter().flat_map(|&k| [2, -2].map(|s| overlap(&a.cells, &grids[k], s, 0))).max(),
    };
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_extremes() {
        let h = FacePattern::uniform(true);
        let l = FacePattern::uniform(false);
        assert_eq!(dock_score(&h, &h, Offset::Full), Some(16));
        assert_eq!(dock_score(&h, &l, Offset::Full), Some(-16));
        assert_eq!(dock_score(&l, &l, Offset::Full), Some(0));
        assert_eq!(dock_score(&h, &h, Offset::HalfX), Some(8));
    }

    #[test]
    fn half_needs_registration() {
        let mut a = FacePattern::uniform(true);
        a.registration = false;
        assert_eq!(dock_score(&a, &a, Offset::HalfY), None);
        assert_eq!(dock_score(&a, &a, Offset::Full), Some(16));
    }

    #[test]
    fn matching_halves() {
        let left: FacePattern = "1100110011001100".parse().unwrap();
        let right: FacePattern = "0011001100110011".parse().unwrap();
        assert_eq!(dock_score(&left, &right, Offset::Full), Some(8));
        assert_eq!(dock_score(&left, &FacePattern::uniform(false), Offset::Full), Some(-8));
    }

    #[test]
    fn face_labels() {
        for f in Face::ALL {
            assert_eq!(f.label().parse::<Face>().unwrap(), f);
            assert_eq!(f.opposite().opposite(), f);
        }
    }
}
