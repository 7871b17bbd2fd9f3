use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::Serialize;
use smartlet::acceptance;
use smartlet::codecs::frame::{decode_frame, encode_frame};
use smartlet::codecs::{manchester, ws2812, Convention, ManchesterParams, Ws2812Timing};
use smartlet::engine::{read_trace, replay, HashingWriter, Scenario, Simulation, TraceRecord, TraceWriter};
use smartlet::engine::scenario::parse_payload;
use smartlet::fsm::{execute, parse_bit_string, LabletProgram, Stimulus};
use smartlet::photonics::dome::{self, DomeMode};
use smartlet::photonics::{angular_factor, CellKind, MismatchRule, SeriesString, SolarCellSpec};

use crate::exit::{BAD_INPUT, FAILURE, PORT_BUSY, TRACE_IO};
use crate::service::Service;
use crate::*;

/// A failed command: exit code plus the diagnostic printed to stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure { code, msg: msg.into() }
    }
}

type Outcome = Result<(), Failure>;

fn bad(msg: impl std::fmt::Display) -> Failure {
    Failure::new(BAD_INPUT, msg.to_string())
}

pub fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Cmd::Run(a) => run(&a),
        Cmd::Serve(a) => serve(&a),
        Cmd::Codec(c) => codec(c),
        Cmd::Fsm(FsmCmd::Exec { program, stimulus, ticks }) => fsm_exec(program.as_deref(), stimulus.as_deref(), ticks),
        Cmd::Power(p) => power(p),
        Cmd::Replay(a) => replay_trace(&a),
        Cmd::Verify { only } => verify(only.as_deref()),
    }
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn Read>, Failure> {
    match path {
        Some(p) => Ok(Box::new(File::open(p).map_err(|e| bad(format!("{}: {e}", p.display())))?)),
        None => Ok(Box::new(io::stdin().lock())),
    }
}

fn open_output(path: Option<&Path>, code: u8) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => Ok(Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::new(code, format!("{}: {e}", p.display())))?))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text).map_err(|e| match e.line {
        Some(l) => bad(format!("{}:{l}: {}", path.display(), e.message)),
        None => bad(format!("{}: {}", path.display(), e.message)),
    })
}

#[derive(Serialize)]
struct StateRow<'a> {
    tick: u64,
    time_s: f64,
    id: u32,
    x_mm: f64,
    y_mm: f64,
    z_mm: f64,
    gas_nl: f64,
    site: &'a smartlet::aquatics::Site,
    mode: &'a smartlet::fsm::Mode,
    phase: u8,
    bge: bool,
    green: bool,
    red: bool,
    bonds: String,
}

fn run(a: &RunArgs) -> Outcome {
    let mut s = load_scenario(&a.scenario)?;
    if let Some(seed) = a.seed {
        s.seed = seed;
    }
    if let Some(d) = a.duration {
        if !(d >= 0.0 && d.is_finite()) {
            return Err(bad(format!("duration {d} must be a non-negative number of seconds")));
        }
        s.duration_s = d;
    }
    let mut sim = Simulation::new(&s).map_err(|e| bad(format!("{}: {e}", a.scenario.display())))?;
    let io_err = |e: io::Error| Failure::new(TRACE_IO, format!("trace output: {e}"));
    let csv_err = |e: csv::Error| Failure::new(TRACE_IO, format!("csv output: {e}"));
    let sink = open_output(a.trace.as_deref(), TRACE_IO)?;
    let mut trace = TraceWriter::new(HashingWriter::new(sink));
    let mut states = match &a.csv {
        Some(p) => Some(csv::Writer::from_path(p).map_err(csv_err)?),
        None => None,
    };
    let dt = s.physics_dt;
    let mut emit = |rec: &TraceRecord| -> Outcome {
        trace.write(rec).map_err(io_err)?;
        if let (Some(w), TraceRecord::State { tick, agents }) = (states.as_mut(), rec) {
            for ag in agents {
                let bonds = ag.bonds.iter().map(u32::to_string).collect::<Vec<_>>().join(";");
                w.serialize(StateRow {
                    tick: *tick,
                    time_s: *tick as f64 * dt,
                    id: ag.id,
                    x_mm: ag.pos[0] * 1e3,
                    y_mm: ag.pos[1] * 1e3,
                    z_mm: ag.pos[2] * 1e3,
                    gas_nl: ag.gas_nl,
                    site: &ag.site,
                    mode: &ag.mode,
                    phase: ag.phase,
                    bge: ag.bge,
                    green: ag.leds.g,
                    red: ag.leds.r,
                    bonds,
                })
                .map_err(csv_err)?;
            }
        }
        Ok(())
    };
    emit(&sim.header())?;
    let mut events = 0usize;
    while !sim.done() {
        for rec in sim.step() {
            events += matches!(rec, TraceRecord::Event(_)) as usize;
            emit(&rec)?;
        }
    }
    if let Some(rec) = sim.finish() {
        emit(&rec)?;
    }
    trace.flush().map_err(io_err)?;
    if let Some(mut w) = states {
        w.flush().map_err(io_err)?;
    }
    eprintln!("{} ticks, {events} events, trace sha256 {}", sim.world.tick, trace.into_inner().hex_digest());
    Ok(())
}

/// Scenario served when none is given: the two decoder-rate agents of the
/// frequency-selectivity tank, with no scheduled light.
pub fn default_serve_scenario() -> Scenario {
    let mut s = acceptance::scenario(acceptance::TWO_RATES);
    s.schedule.clear();
    s
}

fn serve(a: &ServeArgs) -> Outcome {
    let scenario = match &a.scenario {
        Some(p) => load_scenario(p)?,
        None => default_serve_scenario(),
    };
    let listener = std::net::TcpListener::bind((a.host.as_str(), a.port)).map_err(|e| match e.kind() {
        io::ErrorKind::AddrInUse => Failure::new(PORT_BUSY, format!("port {} is busy", a.port)),
        _ => Failure::new(FAILURE, format!("cannot listen on {}:{}: {e}", a.host, a.port)),
    })?;
    let trace: Option<Box<dyn Write + Send>> = match &a.trace {
        Some(p) => Some(Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::new(TRACE_IO, format!("{}: {e}", p.display())))?))),
        None => None,
    };
    let service = Service::start(scenario, trace).map_err(bad)?;
    let router = service.router();
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::new(FAILURE, e.to_string()))?;
    let served = rt.block_on(async move {
        listener.set_nonblocking(true)?;
        let listener = tokio::net::TcpListener::from_std(listener)?;
        eprintln!("serving on ws://{}/ws (paused)", listener.local_addr()?);
        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    let closed = service.shutdown();
    served.map_err(|e| Failure::new(FAILURE, e.to_string()))?;
    closed.map_err(|e| Failure::new(TRACE_IO, format!("trace output: {e}")))
}

fn manchester_params(o: &ManchesterOpts) -> Result<ManchesterParams, Failure> {
    if !(o.rate > 0.0 && o.rate.is_finite()) {
        return Err(bad(format!("rate {} Hz must be positive", o.rate)));
    }
    let convention = if o.falling { Convention::FallingIsOne } else { Convention::RisingIsOne };
    Ok(ManchesterParams { convention, ..ManchesterParams::at_rate(o.rate) })
}

fn write_waveform(train: &smartlet::codecs::PulseTrain, out: Option<&Path>) -> Outcome {
    let sink = open_output(out, FAILURE)?;
    waveform::write(train, sink).map_err(|e| Failure::new(FAILURE, e.to_string()))
}

fn read_waveform(input: Option<&Path>) -> Result<smartlet::codecs::PulseTrain, Failure> {
    let name = input.map_or("stdin".into(), |p| p.display().to_string());
    waveform::read(open_input(input)?).map_err(|e| bad(format!("{name}: {e}")))
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn codec(c: CodecCmd) -> Outcome {
    match c {
        CodecCmd::Manchester(ManchesterCmd::Encode { payload, opts, out }) => {
            let params = manchester_params(&opts)?;
            let train = if opts.raw {
                manchester::encode(&parse_bit_string(&payload).map_err(bad)?, &params)
            } else {
                encode_frame(&parse_payload(&payload).map_err(bad)?, &params)
            };
            write_waveform(&train, out.as_deref())
        }
        CodecCmd::Manchester(ManchesterCmd::Decode { input, opts }) => {
            let params = manchester_params(&opts)?;
            let train = read_waveform(input.as_deref())?;
            let line = if opts.raw {
                bit_string(&manchester::decode(&train, &params).map_err(|e| Failure::new(FAILURE, e.to_string()))?)
            } else {
                let frame = decode_frame(&train, &params).map_err(|e| Failure::new(FAILURE, e.to_string()))?;
                serde_json::to_string(&frame).expect("frames serialize")
            };
            println!("{line}");
            Ok(())
        }
        CodecCmd::Ws2812b(Ws2812Cmd::Encode { grb, out }) => {
            let pixels = grb.iter().map(|h| parse_pixel(h)).collect::<Result<Vec<_>, _>>()?;
            write_waveform(&ws2812::encode(&pixels, &Ws2812Timing::default()), out.as_deref())
        }
        CodecCmd::Ws2812b(Ws2812Cmd::Decode { input }) => {
            let train = read_waveform(input.as_deref())?;
            let pixels = ws2812::decode(&train, &Ws2812Timing::default()).map_err(|e| Failure::new(FAILURE, e.to_string()))?;
            for p in pixels {
                println!("{:02X}{:02X}{:02X}", p[0], p[1], p[2]);
            }
            Ok(())
        }
        CodecCmd::Ws2812b(Ws2812Cmd::Cascade { input, out }) => {
            let train = read_waveform(input.as_deref())?;
            let (word, rest) = ws2812::cascade(&train, &Ws2812Timing::default()).map_err(|e| Failure::new(FAILURE, e.to_string()))?;
            println!("{word:06X}");
            match out {
                Some(p) => write_waveform(&rest, Some(&p)),
                None => Ok(()),
            }
        }
    }
}

fn parse_pixel(hex: &str) -> Result<[u8; 3], Failure> {
    let h = hex.trim_start_matches('#');
    let v = (h.len() == 6).then(|| u32::from_str_radix(h, 16).ok()).flatten().ok_or_else(|| bad(format!("pixel {hex:?} is not GGRRBB hex")))?;
    Ok([(v >> 16) as u8, (v >> 8) as u8, v as u8])
}

fn fsm_exec(program: Option<&str>, stimulus: Option<&Path>, ticks: u64) -> Outcome {
    let program = program.map(|p| p.parse::<LabletProgram>().map_err(|e| bad(format!("program: {e}")))).transpose()?;
    let mut stim = Vec::new();
    if let Some(path) = stimulus {
        let file = File::open(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| bad(format!("{}: {e}", path.display())))?;
            if line.trim().is_empty() {
                continue;
            }
            stim.push(serde_json::from_str::<Stimulus>(&line).map_err(|e| bad(format!("{}:{}: {e}", path.display(), i + 1)))?);
        }
    }
    let labels = execute(program, &stim, ticks).map_err(bad)?;
    let mut out = io::stdout().lock();
    for (n, l) in labels.iter().enumerate() {
        writeln!(out, "{n} {l}").map_err(|e| Failure::new(FAILURE, e.to_string()))?;
    }
    Ok(())
}

fn power(p: PowerCmd) -> Outcome {
    let csv_fail = |e: csv::Error| Failure::new(FAILURE, e.to_string());
    match p {
        PowerCmd::Dome { mode, rule, out } => {
            let (mode, mut string) = match mode {
                ModeArg::Folded => (DomeMode::Folded, SeriesString::folded()),
                ModeArg::Prefolded => (DomeMode::Prefolded, SeriesString::prefolded()),
            };
            string.rule = match rule {
                RuleArg::StrictMin => MismatchRule::StrictMin,
                RuleArg::LeakyShunt => MismatchRule::LeakyShunt,
            };
            let mut w = csv::Writer::from_writer(open_output(out.as_deref(), FAILURE)?);
            w.write_record(["azimuth_deg", "altitude_deg", "relative_pce"]).map_err(csv_fail)?;
            for pt in dome::sweep(mode, &string) {
                w.serialize((pt.azimuth_deg, pt.altitude_deg, pt.relative_pce)).map_err(csv_fail)?;
            }
            w.flush().map_err(|e| Failure::new(FAILURE, e.to_string()))
        }
        PowerCmd::SweepAngle { kind, step_deg, out } => {
            if !(step_deg > 0.0 && step_deg <= 180.0) {
                return Err(bad("step must lie in (0, 180] degrees"));
            }
            let mut cell = SolarCellSpec::single_tube();
            if let CellArg::Planar = kind {
                cell.kind = CellKind::Planar { normal: [0.0, 0.0, 1.0] };
            }
            let mut w = csv::Writer::from_writer(open_output(out.as_deref(), FAILURE)?);
            w.write_record(["angle_deg", "factor"]).map_err(csv_fail)?;
            let steps = (180.0 / step_deg).floor() as usize;
            for k in 0..=steps {
                let angle = k as f64 * step_deg;
                w.serialize((angle, angular_factor(&cell, &direction(angle)))).map_err(csv_fail)?;
            }
            w.flush().map_err(|e| Failure::new(FAILURE, e.to_string()))
        }
    }
}

/// Source direction `deg` away from +z, tilted towards +x: the angle of
/// incidence for a planar cell facing up, the angle from a vertical tube axis.
fn direction(deg: f64) -> Vector3<f64> {
    let r = deg.to_radians();
    Vector3::new(r.sin(), 0.0, r.cos())
}

fn replay_trace(a: &ReplayArgs) -> Outcome {
    let name = a.trace.display().to_string();
    let original = std::fs::read_to_string(&a.trace).map_err(|e| bad(format!("{name}: {e}")))?;
    let records = read_trace(original.as_bytes()).map_err(|e| bad(format!("{name}: {e}")))?;
    let starts: Vec<usize> = records.iter().enumerate().filter(|(_, r)| matches!(r, TraceRecord::Header { .. })).map(|(i, _)| i).collect();
    if starts.first() != Some(&0) {
        return Err(bad(format!("{name}: trace does not start with a header")));
    }
    let mut again = TraceWriter::new(Vec::new());
    for (k, &s) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(records.len());
        replay(&records[s..end], &mut again).map_err(|e| Failure::new(FAILURE, format!("{name}: {e}")))?;
    }
    let again = String::from_utf8(again.into_inner()).expect("traces are UTF-8");
    if let Some(p) = &a.out {
        std::fs::write(p, &again).map_err(|e| Failure::new(TRACE_IO, format!("{}: {e}", p.display())))?;
    }
    let recorded: Vec<&str> = original.lines().filter(|l| !l.trim().is_empty()).collect();
    let replayed: Vec<&str> = again.lines().collect();
    if let Some(i) = (0..recorded.len().max(replayed.len())).find(|&i| recorded.get(i) != replayed.get(i)) {
        return Err(Failure::new(
            FAILURE,
            format!("replay diverges at record {} of {} (recorded {}, replayed {})", i + 1, recorded.len(), recorded.len(), replayed.len()),
        ));
    }
    eprintln!("replay reproduces all {} records over {} session(s)", recorded.len(), starts.len());
    Ok(())
}

fn verify(only: Option<&str>) -> Outcome {
    let selected: Vec<_> = acceptance::CRITERIA.iter().filter(|(n, _)| only.is_none_or(|o| o == *n)).collect();
    if selected.is_empty() {
        let names: Vec<&str> = acceptance::CRITERIA.iter().map(|(n, _)| *n).collect();
        return Err(bad(format!("unknown check {:?}; known: {}", only.unwrap_or(""), names.join(", "))));
    }
    let mut failed = 0;
    for (name, check) in selected {
        let c = check();
        println!("{} {name}: {}", if c.passed { "PASS" } else { "FAIL" }, c.detail);
        failed += !c.passed as usize;
    }
    if failed > 0 {
        return Err(Failure::new(FAILURE, format!("{failed} check(s) failed")));
    }
    Ok(())
}
