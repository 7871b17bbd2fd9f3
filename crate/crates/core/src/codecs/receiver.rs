//! Streaming Manchester receiver fed by sampled digital line levels.

use super::frame::{decode_frame, Frame, FrameError};
use super::manchester::ManchesterParams;
use super::pulse::{Edge, Line, PulseTrain};

/// Cells of continuous Low after which a frame is closed.
pub const IDLE_CELLS: u64 = 3;

#[derive(Debug, Clone)]
pub struct StreamReceiver {
    params: ManchesterParams,
    level: Line,
    edges: Vec<Edge>,
    last_edge_ns: u64,
}

impl StreamReceiver {
    pub fn new(params: ManchesterParams) -> Self {
        StreamReceiver { params, level: Line::Low, edges: Vec::new(), last_edge_ns: 0 }
    }

    pub fn params(&self) -> &ManchesterParams {
        &self.params
    }

    pub fn is_idle(&self) -> bool {
        self.edges.is_empty()
    }

    /// Feeds one sample; returns a decode result when a frame closes.
    pub fn sample(&mut self, t_ns: u64, high: bool) -> Option<Result<Frame, FrameError>> {
        let level = Line::from_bool(high);
        if level != self.level {
            self.level = level;
            if !(self.edges.is_empty() && level == Line::Low) {
                self.edges.push(Edge { t_ns, level });
                self.last_edge_ns = t_ns;
            }
            return None;
        }
        if self.edges.is_empty() || level == Line::High {
            return None;
        }
        if t_ns - self.last_edge_ns > IDLE_CELLS * self.params.cell_ns() {
            return Some(self.flush());
        }
        None
    }

    fn flush(&mut self) -> Result<Frame, FrameError> {
        let edges = std::mem::take(&mut self.edges);
        let end = edges.last().map_or(0, |e| e.t_ns);
        let train = PulseTrain::new(edges, end).expect("edges are recorded in order");
        decode_frame(&train, &self.params)
    }
}
