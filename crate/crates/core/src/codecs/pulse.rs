
use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Line {
    Low,
    High,
}

impl Line {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Line::High
        } else {
            Line::Low
        }
    }

    pub fn is_high(self) -> bool {
        self == Line::High
    }

    pub fn toggled(self) -> Self {
        match self {
            Line::Low => Line::High,
            Line::High => Line::Low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub t_ns: u64,
    pub level: Line,
}

/// Timestamped binary waveform at 1 ns resolution. The first edge records the
/// level the train starts with; the line is taken as Low before it.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PulseTrain {
    edges: Vec<Edge>,
    duration_ns: u64,
}

impl PulseTrain {
    pub fn new(edges: Vec<Edge>, duration_ns: u64) -> Result<Self, Error> {
        for w in edges.windows(2) {
            if w[1].t_ns <= w[0].t_ns {
                return Err(Error::Domain(format!("edge times not increasing at {} ns", w[1].t_ns)));
            }
            if w[1].level == w[0].level {
                return Err(Error::Domain(format!("levels do not alternate at {} ns", w[1].t_ns)));
            }
        }
        if let Some(last) = edges.last() {
            if duration_ns < last.t_ns {
                return Err(Error::Domain("duration ends before last edge".into()));
            }
        }
        Ok(PulseTrain { edges, duration_ns })
    }

    pub fn empty() -> Self {
        PulseTrain::default()
    }

    /// Builds a train from consecutive (level, length) segments starting at
    /// `t0`. Adjacent equal levels merge; zero-length segments are dropped.
    pub fn from_segments(t0: u64, segments: impl IntoIterator<Item = (Line, u64)>) -> Self {
        let mut edges: Vec<Edge> = Vec::new();
        let mut t = t0;
        for (level, len) in segments {
            if len == 0 {
                continue;
            }
            if edges.last().map(|e| e.level) != Some(level) {
                edges.push(Edge { t_ns: t, level });
            }
            t += len;
        }
        PulseTrain { edges, duration_ns: t }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn duration_ns(&self) -> u64 {
        self.duration_ns
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn level_at(&self, t_ns: u64) -> Line {
        match self.edges.partition_point(|e| e.t_ns <= t_ns) {
            0 => Line::Low,
            i => self.edges[i - 1].level,
        }
    }

    /// Appends a final falling edge at the end of the train if it ends High.
    pub fn end_low(mut self) -> Self {
        if self.edges.last().is_some_and(|e| e.level == Line::High) {
            let t = self.duration_ns;
            if self.edges.last().unwrap().t_ns == t {
                self.edges.pop();
            } else {
                self.edges.push(Edge { t_ns: t, level: Line::Low });
            }
        }
        self
    }

    pub fn extend_low(mut self, extra_ns: u64) -> Self {
        self = self.end_low();
        self.duration_ns += extra_ns;
        self
    }

    /// (level, length) runs covering the whole train.
    pub fn segments(&self) -> Vec<(Line, u64)> {
        let mut out = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            let end = self.edges.get(i + 1).map_or(self.duration_ns, |n| n.t_ns);
            if end > e.t_ns {
                out.push((e.level, end - e.t_ns));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_merge() {
        let t = PulseTrain::from_segments(0, [(Line::Low, 5), (Line::High, 5), (Line::High, 5), (Line::Low, 5)]);
        assert_eq!(t.edges().len(), 3);
        assert_eq!(t.duration_ns(), 20);
        assert_eq!(t.level_at(12), Line::High);
        assert_eq!(t.segments(), vec![(Line::Low, 5), (Line::High, 10), (Line::Low, 5)]);
    }

    #[test]
    fn validation() {
        let e = |t, level| Edge { t_ns: t, level };
        assert!(PulseTrain::new(vec![e(0, Line::High), e(0, Line::Low)], 5).is_err());
        assert!(PulseTrain::new(vec![e(0, Line::High), e(3, Line::High)], 5).is_err());
        assert!(PulseTrain::new(vec![e(0, Line::High), e(3, Line::Low)], 2).is_err());
    }

}
