//! Waveform CSV: `time_ns,level` rows, one per edge, closed by an `end` row
//! carrying the train duration.

use std::io::{Read, Write};

use smartlet::codecs::{Edge, Line, PulseTrain};

pub fn write<W: Write>(train: &PulseTrain, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_ns", "level"])?;
    for e in train.edges() {
        w.write_record([e.t_ns.to_string().as_str(), if e.level.is_high() { "1" } else { "0" }])?;
    }
    w.write_record([train.duration_ns().to_string().as_str(), "end"])?;
    w.flush()?;
    Ok(())
}

pub fn read<R: Read>(input: R) -> Result<PulseTrain, String> {
    let mut r = csv::Reader::from_reader(input);
    let mut edges = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| format!("line {row}: {e}"))?;
        if rec.len() != 2 {
            return Err(format!("line {row}: expected time_ns,level"));
        }
        let t: u64 = rec[0].trim().parse().map_err(|_| format!("line {row}: bad time {:?}", &rec[0]))?;
        let level = match rec[1].trim() {
            "1" => Line::High,
            "0" => Line::Low,
            "end" => return PulseTrain::new(edges, t).map_err(|e| format!("line {row}: {e}")),
            other => return Err(format!("line {row}: bad level {other:?}")),
        };
        edges.push(Edge { t_ns: t, level });
    }
    Err("missing end row".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = PulseTrain::from_segments(10, [(Line::High, 5), (Line::Low, 7), (Line::High, 3)]);
        let mut buf = Vec::new();
        write(&t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "time_ns,level\n10,1\n15,0\n22,1\n25,end\n");
        assert_eq!(read(&buf[..]).unwrap(), t);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read("time_ns,level\n5,1\n".as_bytes()).is_err());
        assert!(read("time_ns,level\n5,x\n9,end\n".as_bytes()).is_err());
        assert!(read("time_ns,level\n5,1\n4,0\n9,end\n".as_bytes()).is_err());
    }
}
