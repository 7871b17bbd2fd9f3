//! Lablet finite state machine: serial program load, four operating modes and
//! three-phase actuator pattern execution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

pub const PROGRAM_BITS: usize = 58;
const WORD_MASK: u64 = (1 << PROGRAM_BITS) - 1;
/// Idle ticks before an autorun program starts by itself.
pub const AUTORUN_DELAY: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    AtEnd,
    Sensor1,
    Sensor2,
    Trigger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Previous,
    Same,
    Next,
    Idle,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Self::AtEnd, Self::Sensor1, Self::Sensor2, Self::Trigger];

    fn from_code(code: u64) -> Self {
        Self::ALL[(code & 3) as usize]
    }

    fn code(self) -> u64 {
        self as u64
    }
}

impl Target {
    pub const ALL: [Target; 4] = [Self::Previous, Self::Same, Self::Next, Self::Idle];

    fn from_code(code: u64) -> Self {
        Self::ALL[(code & 3) as usize]
    }

    fn code(self) -> u64 {
        self as u64
    }
}

/// One 18-bit phase block. `mask` bit i enables actuator A(i+1); pattern bit 7
/// is step 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseBlock {
    pub pattern: u8,
    pub mask: u8,
    pub repeats: u8,
    pub condition: Condition,
    pub target: Target,
}

impl PhaseBlock {
    pub fn cycles(&self) -> u8 {
        self.repeats + 1
    }

    pub fn level_at(&self, step: u8) -> bool {
        self.pattern >> (7 - step) & 1 == 1
    }

    fn word(&self) -> u64 {
        (self.pattern as u64) << 10
            | ((self.mask & 7) as u64) << 7
            | ((self.repeats & 7) as u64) << 4
            | self.condition.code() << 2
            | self.target.code()
    }

    fn from_word(w: u64) -> Self {
        PhaseBlock {
            pattern: (w >> 10 & 0xFF) as u8,
            mask: (w >> 7 & 7) as u8,
            repeats: (w >> 4 & 7) as u8,
            condition: Condition::from_code(w >> 2),
            target: Target::from_code(w),
        }
    }
}

impl Default for PhaseBlock {
    fn default() -> Self {
        PhaseBlock {
            pattern: 0,
            mask: 0,
            repeats: 0,
            condition: Condition::AtEnd,
            target: Target::Previous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LabletProgram {
    pub clock_fast: bool,
    pub autorun: bool,
    pub send_on_idle: bool,
    pub phases: [PhaseBlock; 3],
}

impl LabletProgram {
    /// Packs into the low 58 bits; bit 57 is the first transmitted bit.
    pub fn to_word(&self) -> u64 {
        let header = (self.clock_fast as u64) << 3 | (self.autorun as u64) << 2 | (self.send_on_idle as u64) << 1;
        let mut w = header;
        for p in &self.phases {
            w = w << 18 | p.word();
        }
        w
    }

    pub fn from_word(w: u64) -> Result<Self, Error> {
        if w & !WORD_MASK != 0 {
            return Err(Error::MalformedProgram("word wider than 58 bits".into()));
        }
        if w >> 54 & 1 == 1 {
            return Err(Error::MalformedProgram("reserved header bit set".into()));
        }
        let phase = |i: u32| PhaseBlock::from_word(w >> (36 - 18 * i) & 0x3FFFF);
        Ok(LabletProgram {
            clock_fast: w >> 57 & 1 == 1,
            autorun: w >> 56 & 1 == 1,
            send_on_idle: w >> 55 & 1 == 1,
            phases: [phase(0), phase(1), phase(2)],
        })
    }

    pub fn to_bits(&self) -> Vec<bool> {
        word_to_bits(self.to_word())
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self, Error> {
        if bits.len() != PROGRAM_BITS {
            return Err(Error::MalformedProgram(format!("expected 58 bits, got {}", bits.len())));
        }
        Self::from_word(bits.iter().fold(0, |w, &b| w << 1 | b as u64))
    }
}

pub fn word_to_bits(w: u64) -> Vec<bool> {
    (0..PROGRAM_BITS).map(|i| w >> (PROGRAM_BITS - 1 - i) & 1 == 1).collect()
}

impl fmt::Display for LabletProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.to_bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for LabletProgram {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::from_bits(&parse_bit_string(s.trim())?)
    }
}

pub fn parse_bit_string(s: &str) -> Result<Vec<bool>, Error> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::MalformedProgram(format!("unexpected character {other:?}"))),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    High,
    Low,
    Z,
}

impl Level {
    pub fn symbol(self) -> char {
        match self {
            Level::High => 'H',
            Level::Low => 'L',
            Level::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Idle,
    Programming,
    Running,
    Sending,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Idle, Mode::Programming, Mode::Running, Mode::Sending];

    pub fn letter(self) -> char {
        match self {
            Mode::Idle => 'I',
            Mode::Programming => 'P',
            Mode::Running => 'R',
            Mode::Sending => 'S',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Command {
    Start,
    Stop,
    Send,
}

impl Command {
    pub const START: u8 = 0b1010_0101;
    pub const STOP: u8 = 0b0101_1010;
    pub const SEND: u8 = 0b1100_0011;

    pub fn byte(self) -> u8 {
        match self {
            Command::Start => Self::START,
            Command::Stop => Self::STOP,
            Command::Send => Self::SEND,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            Self::START => Some(Command::Start),
            Self::STOP => Some(Command::Stop),
            Self::SEND => Some(Command::Send),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Start => "START",
            Command::Stop => "STOP",
            Command::Send => "SEND",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_uppercase().as_str() {
            "START" => Ok(Command::Start),
            "STOP" => Ok(Command::Stop),
            "SEND" => Ok(Command::Send),
            _ => Err(Error::Config(format!("unknown command {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandOutcome {
    Applied(Command),
    /// Recognized but the current mode does not accept it.
    Ignored(Command),
    Unrecognized,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOutcome {
    /// Bit pushed out of a full register.
    pub shifted_out: Option<bool>,
    /// Set when this bit completed a 58-bit session.
    pub latched: Option<Result<LabletProgram, Error>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsmState {
    pub mode: Mode,
    pub phase: u8,
    pub step: u8,
    pub cycles: u8,
    pub register: u64,
    pub fill: u8,
    pub session: u8,
    pub program: Option<LabletProgram>,
    pub actuators: [Level; 3],
    pub sensors: [bool; 2],
    pub pending_trigger: bool,
    pub idle_ticks: u32,
    pub send_index: u8,
}

impl Default for FsmState {
    fn default() -> Self {
        FsmState {
            mode: Mode::Idle,
            phase: 0,
            step: 0,
            cycles: 0,
            register: 0,
            fill: 0,
            session: 0,
            program: None,
            actuators: [Level::Z; 3],
            sensors: [false; 2],
            pending_trigger: false,
            idle_ticks: 0,
            send_index: 0,
        }
    }
}

impl FsmState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_program(program: LabletProgram) -> Self {
        FsmState {
            register: program.to_word(),
            fill: PROGRAM_BITS as u8,
            program: Some(program),
            ..Self::default()
        }
    }

    pub fn current_phase(&self) -> Option<&PhaseBlock> {
        self.program.as_ref().map(|p| &p.phases[self.phase as usize])
    }

    pub fn load_bit(&mut self, bit: bool) -> Result<LoadOutcome, Error> {
        if matches!(self.mode, Mode::Running | Mode::Sending) {
            return Err(Error::ProtocolViolation(format!("program bit while {:?}", self.mode)));
        }
        if self.mode == Mode::Idle {
            self.mode = Mode::Programming;
            self.session = 0;
        }
        let shifted_out = (self.fill as usize == PROGRAM_BITS).then_some(self.register >> 57 & 1 == 1);
        self.register = (self.register << 1 | bit as u64) & WORD_MASK;
        self.fill = (self.fill + 1).min(PROGRAM_BITS as u8);
        self.session += 1;
        let mut latched = None;
        if self.session as usize == PROGRAM_BITS {
            let parsed = LabletProgram::from_word(self.register);
            self.program = parsed.clone().ok();
            self.mode = Mode::Idle;
            self.idle_ticks = 0;
            latched = Some(parsed);
        }
        Ok(LoadOutcome { shifted_out, latched })
    }

    pub fn receive_command(&mut self, byte: u8) -> CommandOutcome {
        let Some(cmd) = Command::from_byte(byte) else {
            return CommandOutcome::Unrecognized;
        };
        match self.mode {
            Mode::Programming | Mode::Sending => CommandOutcome::Ignored(cmd),
            Mode::Idle => match (cmd, self.program) {
                (Command::Start, Some(_)) => {
                    self.enter_phase(0);
                    CommandOutcome::Applied(cmd)
                }
                (Command::Send, Some(_)) => {
                    self.begin_sending();
                    CommandOutcome::Applied(cmd)
                }
                _ => CommandOutcome::Ignored(cmd),
            },
            Mode::Running => {
                if cmd == Command::Stop {
                    self.reset_to_idle();
                    return CommandOutcome::Applied(cmd);
                }
                if self.current_phase().map(|p| p.condition) == Some(Condition::Trigger) {
                    self.pending_trigger = true;
                    return CommandOutcome::Applied(cmd);
                }
                CommandOutcome::Ignored(cmd)
            }
        }
    }

    /// One FSM clock period. Returns the data-output bit while Sending.
    pub fn tick(&mut self) -> Option<bool> {
        match self.mode {
            Mode::Programming => None,
            Mode::Idle => {
                if self.program.is_some_and(|p| p.autorun) {
                    self.idle_ticks += 1;
                    if self.idle_ticks >= AUTORUN_DELAY {
                        self.enter_phase(0);
                    }
                }
                None
            }
            Mode::Sending => {
                let bit = self.register >> (PROGRAM_BITS - 1 - self.send_index as usize) & 1 == 1;
                self.send_index += 1;
                if self.send_index as usize == PROGRAM_BITS {
                    self.mode = Mode::Idle;
                    self.idle_ticks = 0;
                }
                Some(bit)
            }
            Mode::Running => {
                self.run_tick();
                None
            }
        }
    }

    fn run_tick(&mut self) {
        let Some(phase) = self.current_phase().copied() else {
            self.reset_to_idle();
            return;
        };
        let met = match phase.condition {
            Condition::AtEnd => false,
            Condition::Sensor1 => self.sensors[0],
            Condition::Sensor2 => self.sensors[1],
            Condition::Trigger => self.pending_trigger,
        };
        if met {
            self.pending_trigger = false;
            self.jump(phase.target);
            return;
        }
        self.step += 1;
        if self.step == 8 {
            self.step = 0;
            self.cycles += 1;
            if self.cycles == phase.cycles() {
                let target = if phase.condition == Condition::AtEnd { phase.target } else { Target::Next };
                self.jump(target);
                return;
            }
        }
        self.drive();
    }

    fn jump(&mut self, target: Target) {
        match target {
            Target::Previous => self.enter_phase((self.phase + 2) % 3),
            Target::Same => self.enter_phase(self.phase),
            Target::Next => self.enter_phase((self.phase + 1) % 3),
            Target::Idle => {
                let send = self.program.is_some_and(|p| p.send_on_idle);
                self.reset_to_idle();
                if send {
                    self.begin_sending();
                }
            }
        }
    }

    fn enter_phase(&mut self, index: u8) {
        self.mode = Mode::Running;
        self.phase = index;
        self.step = 0;
        self.cycles = 0;
        self.pending_trigger = false;
        self.drive();
    }

    fn drive(&mut self) {
        let Some(phase) = self.current_phase().copied() else {
            return;
        };
        let level = if phase.level_at(self.step) { Level::High } else { Level::Low };
        for (i, a) in self.actuators.iter_mut().enumerate() {
            *a = if phase.mask >> i & 1 == 1 { level } else { Level::Z };
        }
    }

    fn reset_to_idle(&mut self) {
        self.mode = Mode::Idle;
        self.phase = 0;
        self.step = 0;
        self.cycles = 0;
        self.pending_trigger = false;
        self.idle_ticks = 0;
        self.actuators = [Level::Z; 3];
    }

    fn begin_sending(&mut self) {
        self.mode = Mode::Sending;
        self.send_index = 0;
        self.actuators = [Level::Z; 3];
    }

    /// Compact per-tick record: mode letter, phase, step, A1..A3.
    pub fn trace_label(&self) -> String {
        let acts: String = self.actuators.iter().map(|a| a.symbol()).collect();
        format!("{}{}{} {}", self.mode.letter(), self.phase, self.step, acts)
    }
}

/// Stimulus used by the golden vectors and `fsm exec`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stimulus {
    Command { tick: u64, value: CommandValue },
    Sensor { tick: u64, index: usize, level: bool },
    Bits { tick: u64, value: String },
}

impl Stimulus {
    pub fn tick(&self) -> u64 {
        match self {
            Stimulus::Command { tick, .. } | Stimulus::Sensor { tick, .. } | Stimulus::Bits { tick, .. } => *tick,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CommandValue {
    Named(String),
    Raw(u8),
}

impl CommandValue {
    pub fn byte(&self) -> Result<u8, Error> {
        match self {
            CommandValue::Raw(b) => Ok(*b),
            CommandValue::Named(n) => Ok(n.parse::<Command>()?.byte()),
        }
    }
}

/// Applies stimuli and ticks the machine, producing one label per tick
/// (state before the tick, then the data-output bit that tick emitted).
pub fn execute(program: Option<LabletProgram>, stimulus: &[Stimulus], ticks: u64) -> Result<Vec<String>, Error> {
    let mut fsm = program.map(FsmState::with_program).unwrap_or_default();
    let mut out = Vec::with_capacity(ticks as usize);
    for n in 0..ticks {
        for s in stimulus.iter().filter(|s| s.tick() == n) {
            match s {
                Stimulus::Command { value, .. } => {
                    fsm.receive_command(value.byte()?);
                }
                Stimulus::Sensor { index, level, .. } => {
                    if *index > 1 {
                        return Err(Error::Config(format!("sensor index {index} out of range")));
                    }
                    fsm.sensors[*index] = *level;
                }
                Stimulus::Bits { value, .. } => {
                    for b in parse_bit_string(value)? {
                        let _ = fsm.load_bit(b);
                    }
                }
            }
        }
        let label = fsm.trace_label();
        let dout = match fsm.tick() {
            Some(true) => '1',
            Some(false) => '0',
            None => '-',
        };
        out.push(format!("{label} {dout}"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phase(pattern: u8, mask: u8, repeats: u8, condition: Condition, target: Target) -> PhaseBlock {
        PhaseBlock { pattern, mask, repeats, condition, target }
    }

    #[test]
    fn zero_word_is_zero_program() {
        let p = LabletProgram::from_word(0).unwrap();
        assert_eq!(p, LabletProgram::default());
        assert_eq!(p.to_string(), "0".repeat(58));
    }

    #[test]
    fn reserved_bit_rejected() {
        let mut s = vec!['0'; 58];
        s[3] = '1';
        let s: String = s.into_iter().collect();
        assert!(matches!(s.parse::<LabletProgram>(), Err(Error::MalformedProgram(_))));
        assert!(LabletProgram::from_bits(&[false; 57]).is_err());
    }

    #[test]
    fn header_order() {
        let p = LabletProgram { clock_fast: true, ..Default::default() };
        assert!(p.to_string().starts_with("1000"));
        let p = LabletProgram { send_on_idle: true, ..Default::default() };
        assert!(p.to_string().starts_with("0010"));
    }

    #[test]
    fn alternating_a3() {
        let prog = LabletProgram {
            phases: [phase(0b1010_1010, 0b100, 0, Condition::AtEnd, Target::Idle); 3],
            ..Default::default()
        };
        let mut fsm = FsmState::with_program(prog);
        assert_eq!(fsm.receive_command(Command::START), CommandOutcome::Applied(Command::Start));
        let mut seen = Vec::new();
        for _ in 0..8 {
            seen.push(fsm.actuators);
            fsm.tick();
        }
        for (i, a) in seen.iter().enumerate() {
            assert_eq!(a[0], Level::Z);
            assert_eq!(a[1], Level::Z);
            assert_eq!(a[2], if i % 2 == 0 { Level::High } else { Level::Low });
        }
        assert_eq!(fsm.mode, Mode::Idle);
        assert_eq!(fsm.actuators, [Level::Z; 3]);
    }

    #[test]
    fn previous_from_phase_zero_wraps() {
        let prog = LabletProgram {
            phases: [phase(0, 1, 0, Condition::AtEnd, Target::Previous), PhaseBlock::default(), PhaseBlock::default()],
            ..Default::default()
        };
        let mut fsm = FsmState::with_program(prog);
        fsm.receive_command(Command::START);
        for _ in 0..8 {
            fsm.tick();
        }
        assert_eq!(fsm.phase, 2);
    }

    #[test]
    fn sensor_jump_is_immediate() {
        let prog = LabletProgram {
            phases: [
                phase(0xFF, 1, 7, Condition::Sensor1, Target::Idle),
                PhaseBlock::default(),
                PhaseBlock::default(),
            ],
            ..Default::default()
        };
        let mut fsm = FsmState::with_program(prog);
        fsm.receive_command(Command::START);
        fsm.tick();
        fsm.sensors[0] = true;
        fsm.tick();
        assert_eq!(fsm.mode, Mode::Idle);
    }

    #[test]
    fn load_bit_while_running_is_violation() {
        let mut fsm = FsmState::with_program(LabletProgram {
            phases: [phase(0xFF, 4, 7, Condition::AtEnd, Target::Same); 3],
            ..Default::default()
        });
        fsm.receive_command(Command::START);
        let before = fsm;
        assert!(matches!(fsm.load_bit(true), Err(Error::ProtocolViolation(_))));
        assert_eq!(fsm, before);
    }

    #[test]
    fn unrecognized_command_leaves_state() {
        let mut fsm = FsmState::new();
        let before = fsm;
        assert_eq!(fsm.receive_command(0x00), CommandOutcome::Unrecognized);
        assert_eq!(fsm, before);
    }

    #[test]
    fn command_hamming_distance() {
        let all = [Command::START, Command::STOP, Command::SEND];
        for i in 0..3 {
            for j in i + 1..3 {
                assert!((all[i] ^ all[j]).count_ones() >= 4);
            }
        }
    }
}
