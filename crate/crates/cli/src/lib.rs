//! `smartlet` command line: headless runs, codec/FSM/power utilities, trace
//! replay and the WebSocket control service.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod protocol;
pub mod service;
pub mod waveform;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const BAD_INPUT: u8 = 2;
    pub const TRACE_IO: u8 = 3;
    pub const PORT_BUSY: u8 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "smartlet", version, about = "Smartlet micro-robot swarm simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run a scenario to completion and write its JSONL trace.
    Run(RunArgs),
    /// Serve a paused live simulation to WebSocket consoles.
    Serve(ServeArgs),
    /// Encode or decode optical and LED waveforms.
    #[command(subcommand)]
    Codec(CodecCmd),
    /// Drive the lablet state machine directly.
    #[command(subcommand)]
    Fsm(FsmCmd),
    /// Solar harvesting sweeps.
    #[command(subcommand)]
    Power(PowerCmd),
    /// Re-run a recorded trace and check that it reproduces.
    Replay(ReplayArgs),
    /// Run the acceptance checks.
    Verify {
        /// Run only the named check.
        #[arg(long)]
        only: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the scenario duration, seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Trace destination; stdout when omitted.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also write decimated agent states as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Scenario to load; the two-frequency tank when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Records the session, including applied commands, for replay.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CodecCmd {
    #[command(subcommand)]
    Manchester(ManchesterCmd),
    #[command(subcommand, name = "ws2812b")]
    Ws2812b(Ws2812Cmd),
}

#[derive(Debug, Args)]
pub struct ManchesterOpts {
    #[arg(long, default_value_t = 200.0)]
    pub rate: f64,
    /// '1' is High then Low.
    #[arg(long)]
    pub falling: bool,
    /// Bare bits without preamble or frame header.
    #[arg(long)]
    pub raw: bool,
}

#[derive(Debug, Subcommand)]
pub enum ManchesterCmd {
    /// Payload (START, STOP, SEND, 0xNN, 8 or 58 bits; any bits with --raw)
    /// to waveform CSV.
    Encode {
        payload: String,
        #[command(flatten)]
        opts: ManchesterOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Waveform CSV to bits or a frame.
    Decode {
        /// Waveform CSV; stdin when omitted.
        input: Option<PathBuf>,
        #[command(flatten)]
        opts: ManchesterOpts,
    },
}

#[derive(Debug, Subcommand)]
pub enum Ws2812Cmd {
    /// GGRRBB hex pixels to waveform CSV.
    Encode {
        #[arg(long, required = true, num_args = 1..)]
        grb: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Waveform CSV to GGRRBB pixels.
    Decode { input: Option<PathBuf> },
    /// One pixel stage: prints the latched word, writes the forwarded waveform.
    Cascade {
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum FsmCmd {
    /// Apply a JSONL stimulus and print one state label per tick.
    Exec {
        /// 58-bit program latched before the first tick.
        #[arg(long)]
        program: Option<String>,
        #[arg(long)]
        stimulus: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        ticks: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Folded,
    Prefolded,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleArg {
    StrictMin,
    LeakyShunt,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CellArg {
    Planar,
    Tubular,
}

#[derive(Debug, Subcommand)]
pub enum PowerCmd {
    /// Relative PCE for every dome LED.
    Dome {
        #[arg(long, value_enum, default_value_t = ModeArg::Folded)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = RuleArg::LeakyShunt)]
        rule: RuleArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Angular response of a single cell.
    SweepAngle {
        #[arg(long, value_enum)]
        kind: CellArg,
        #[arg(long, default_value_t = 5.0)]
        step_deg: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Where to write the regenerated trace.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
