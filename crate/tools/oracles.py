#!/usr/bin/env python3
"""Independent reference computations used to freeze test fixtures.

Nothing here imports or mirrors the Rust sources; every value is derived
from first principles (closed forms, enumeration, a separate FSM emulator).
Run from the repository root:  python3 tools/oracles.py
"""
import json
import math
import random
from pathlib import Path

FIX = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "fixtures"

# ---------------------------------------------------------------- physics
FARADAY = 96485.0
MOLAR_VOLUME = 2.445e-2
G = 9.81
RHO = 1000.0


def gas_rate(current):
    # H2: I/(2F) mol/s, O2: I/(4F) mol/s
    return (current / (2 * FARADAY) + current / (4 * FARADAY)) * MOLAR_VOLUME


def physics():
    excess_weight = 2.0e-7
    solid_volume = 7.0e-11
    dry_mass = RHO * solid_volume + excess_weight / G
    v_crit = dry_mass / RHO - solid_volume
    rate = gas_rate(7e-6)
    k = 0.005
    # analytic gas volume under constant current and first order loss
    samples = {str(t): rate / k * (1 - math.exp(-k * t)) for t in (1, 10, 60, 150, 300)}
    return {
        "gas_rate_7ua_m3_s": rate,
        "dry_mass_kg": dry_mass,
        "v_crit_m3": v_crit,
        "terminal_velocity_2e-7N": 2e-7 / 2e-5,
        "analytic_gas_k0.005_m3": samples,
        "capillary_at_lc_over_f0": math.exp(-1.0),
        "capillary_30mm_n": 1e-6 * math.exp(-30e-3 / 2.7e-3),
    }


def photovoltaics():
    ff, isc, voc, p_in = 0.5, 50e-6, 0.65, 0.1
    single_area = ff * isc * voc / (p_in * 0.115)
    string_area = 17e-6 / (p_in * 0.015)
    return {
        "single_tube_area_cm2": single_area,
        "single_tube_pce_check": 100 * ff * isc * voc / (p_in * single_area),
        "string_area_cm2": string_area,
        "string_effective_factor": 17e-6 / (7e-6 * 2.1),
    }


def link():
    # threshold crossing placed at 4.5 mm; saturating detector v = vmax*E/(E+Eh)
    vmax, vth, e_half, d_star = 1.2, 0.7, 5e-6, 4.5e-3
    e_star = e_half * vth / (vmax - vth)
    i0 = e_star * d_star ** 2

    def volts(d):
        e = i0 / d ** 2
        return vmax * e / (e + e_half)

    return {
        "emitter_intensity": i0,
        "volts": {str(d): volts(d * 1e-3) for d in (1, 2, 3, 4, 4.5, 5, 6, 8)},
    }


# ----------------------------------------------------------------- docking
def parse(p):
    return [[p[r * 4 + c] == "1" for c in range(4)] for r in range(4)]


def pair_value(a, b):
    if a and b:
        return 1
    if a != b:
        return -1
    return 0


def dock_bruteforce(pa, pb, offset):
    """Place cell centres in a continuous contact plane and match coincident centres."""
    a, b = parse(pa), parse(pb)
    a_cells = {(c - 1.5, r - 1.5): a[r][c] for r in range(4) for c in range(4)}
    if offset == "full":
        rotations, shifts = (0, 1, 2, 3), [(0, 0)]
    elif offset == "half_x":
        rotations, shifts = (0, 2), [(2, 0), (-2, 0)]
    else:
        rotations, shifts = (0, 2), [(0, 2), (0, -2)]
    best = None
    for k in rotations:
        for sx, sy in shifts:
            score = 0
            for r in range(4):
                for c in range(4):
                    u, v = -(c - 1.5), r - 1.5  # mirror: faces meet face to face
                    for _ in range(k):
                        u, v = -v, u
                    key = (u + sx, v + sy)
                    if key in a_cells:
                        score += pair_value(a_cells[key], b[r][c])
            best = score if best is None else max(best, score)
    return best


def dock_fixtures():
    pats = {
        "all_hydrophobic": "1" * 16,
        "all_hydrophilic": "0" * 16,
        "checkerboard": "".join("1" if (r + c) % 2 == 0 else "0" for r in range(4) for c in range(4)),
        "inverted_checkerboard": "".join("0" if (r + c) % 2 == 0 else "1" for r in range(4) for c in range(4)),
        "left_half": "".join("1" if c < 2 else "0" for r in range(4) for c in range(4)),
        "right_half": "".join("1" if c >= 2 else "0" for r in range(4) for c in range(4)),
        "top_half": "".join("1" if r < 2 else "0" for r in range(4) for c in range(4)),
        "ring": "".join("1" if r in (0, 3) or c in (0, 3) else "0" for r in range(4) for c in range(4)),
        "corner_l": "1000100010001111",
        "diagonal": "".join("1" if r == c else "0" for r in range(4) for c in range(4)),
    }
    rng = random.Random(7)
    for i in range(4):
        pats[f"random_{i}"] = "".join(rng.choice("01") for _ in range(16))
    cases = []
    for na, pa in pats.items():
        for nb, pb in pats.items():
            for off in ("full", "half_x", "half_y"):
                cases.append({"a": na, "b": nb, "offset": off, "score": dock_bruteforce(pa, pb, off)})
    return {"patterns": pats, "cases": cases}


# --------------------------------------------------------------- programs
def phase_bits(pattern, mask, repeats, cond, target):
    return f"{pattern:08b}{mask:03b}{repeats:03b}{cond:02b}{target:02b}"


def program_bits(header, phases):
    s = header + "".join(phase_bits(*p) for p in phases)
    assert len(s) == 58
    return s


A1, A2, A3 = 0b001, 0b010, 0b100
UNCOND, SENS1, SENS2, TRIG = 0, 1, 2, 3
PREV, SAME, NEXT, IDLE = 0, 1, 2, 3

DIVE_PHASES = [
    (0xFF, A1 | A3, 7, UNCOND, NEXT),
    (0x00, A1 | A3, 7, UNCOND, NEXT),
    (0x00, A1 | A3, 7, UNCOND, NEXT),
]


# ------------------------------------------------------ reference lablet FSM
class RefFsm:
    AUTORUN_DELAY = 64

    def __init__(self, program=None):
        self.mode = "I"
        self.reg = list(program) if program else []
        self.phase = 0
        self.step = 0
        self.cycles = 0
        self.act = ["Z", "Z", "Z"]
        self.sensors = [False, False]
        self.pending = False
        self.idle_ticks = 0
        self.send_idx = 0
        self.session = 0

    def loaded(self):
        return len(self.reg) == 58

    def prog(self):
        s = "".join(self.reg)
        ph = []
        for i in range(3):
            b = s[4 + 18 * i: 4 + 18 * (i + 1)]
            ph.append({
                "pattern": b[0:8],
                "mask": int(b[8:11], 2),
                "repeats": int(b[11:14], 2),
                "cond": int(b[14:16], 2),
                "target": int(b[16:18], 2),
            })
        return {"autorun": s[1] == "1", "send_on_idle": s[2] == "1", "phases": ph}

    def drive(self):
        p = self.prog()["phases"][self.phase]
        level = "H" if p["pattern"][self.step] == "1" else "L"
        self.act = [level if p["mask"] >> i & 1 else "Z" for i in range(3)]

    def enter(self, i):
        self.mode, self.phase, self.step, self.cycles, self.pending = "R", i, 0, 0, False
        self.drive()

    def to_idle(self):
        self.act = ["Z", "Z", "Z"]
        self.phase = self.step = self.cycles = 0
        self.pending = False
        self.idle_ticks = 0
        if self.prog()["send_on_idle"]:
            self.mode, self.send_idx = "S", 0
        else:
            self.mode = "I"

    def go(self, target):
        if target == PREV:
            self.enter((self.phase + 2) % 3)
        elif target == SAME:
            self.enter(self.phase)
        elif target == NEXT:
            self.enter((self.phase + 1) % 3)
        else:
            self.to_idle()

    def command(self, value):
        names = {0xA5: "START", 0x5A: "STOP", 0xC3: "SEND"}
        if value not in names or self.mode in ("P", "S"):
            return
        name = names[value]
        if self.mode == "I":
            if name == "START" and self.loaded():
                self.enter(0)
            elif name == "SEND" and self.loaded():
                self.mode, self.send_idx = "S", 0
                self.act = ["Z", "Z", "Z"]
            return
        if name == "STOP":
            self.mode = "I"
            self.act = ["Z", "Z", "Z"]
            self.phase = self.step = self.cycles = 0
            self.pending = False
            self.idle_ticks = 0
            return
        if self.prog()["phases"][self.phase]["cond"] == TRIG:
            self.pending = True

    def load(self, bit):
        if self.mode in ("R", "S"):
            return
        if self.mode == "I":
            self.mode, self.session = "P", 0
        self.reg.append(bit)
        if len(self.reg) > 58:
            self.reg.pop(0)
        self.session += 1
        if self.session == 58:
            self.mode = "I"
            self.idle_ticks = 0

    def tick(self):
        if self.mode == "I":
            if self.loaded() and self.prog()["autorun"]:
                self.idle_ticks += 1
                if self.idle_ticks >= self.AUTORUN_DELAY:
                    self.enter(0)
            return None
        if self.mode == "S":
            bit = self.reg[self.send_idx]
            self.send_idx += 1
            if self.send_idx == 58:
                self.mode = "I"
                self.idle_ticks = 0
            return bit
        if self.mode == "P":
            return None
        p = self.prog()["phases"][self.phase]
        met = (p["cond"] == SENS1 and self.sensors[0]) or (p["cond"] == SENS2 and self.sensors[1]) \
            or (p["cond"] == TRIG and self.pending)
        if met:
            self.pending = False
            self.go(p["target"])
            return None
        self.step += 1
        if self.step == 8:
            self.step = 0
            self.cycles += 1
            if self.cycles == p["repeats"] + 1:
                self.go(p["target"] if p["cond"] == UNCOND else NEXT)
                return None
        self.drive()
        return None

    def record(self, dout):
        d = "-" if dout is None else dout
        return f"{self.mode}{self.phase}{self.step} {''.join(self.act)} {d}"


def run_vector(program, stimulus, ticks):
    fsm = RefFsm(program)
    names = {"START": 0xA5, "STOP": 0x5A, "SEND": 0xC3}
    trace = []
    for n in range(ticks):
        for ev in (e for e in stimulus if e["tick"] == n):
            if ev["kind"] == "command":
                v = ev["value"]
                fsm.command(names[v] if isinstance(v, str) else v)
            elif ev["kind"] == "sensor":
                fsm.sensors[ev["index"]] = ev["level"]
            elif ev["kind"] == "bits":
                for ch in ev["value"]:
                    fsm.load(ch)
        snapshot = (fsm.mode, fsm.phase, fsm.step, list(fsm.act))
        dout = fsm.tick()
        mode, phase, step, act = snapshot
        d = "-" if dout is None else dout
        trace.append(f"{mode}{phase}{step} {''.join(act)} {d}")
    return trace


def fsm_vectors():
    v = []
    start_stop = program_bits("0000", [
        (0b10101010, A3, 0, UNCOND, NEXT),
        (0b11001100, A3, 0, UNCOND, NEXT),
        (0b11110000, A1 | A3, 1, UNCOND, NEXT),
    ])
    v.append(("start_stop_envelope", start_stop, [
        {"tick": 3, "kind": "command", "value": "START"},
        {"tick": 40, "kind": "command", "value": "STOP"},
    ], 50))
    sensor = program_bits("0000", [
        (0xFF, A1, 7, SENS1, NEXT),
        (0x0F, A2, 7, UNCOND, PREV),
        (0x33, A3, 0, SENS2, IDLE),
    ])
    v.append(("sensor_jump", sensor, [
        {"tick": 0, "kind": "command", "value": "START"},
        {"tick": 5, "kind": "sensor", "index": 0, "level": True},
        {"tick": 6, "kind": "sensor", "index": 0, "level": False},
        {"tick": 30, "kind": "sensor", "index": 1, "level": True},
    ], 40))
    trig = program_bits("0000", [
        (0x81, A1 | A2, 1, TRIG, SAME),
        (0xF0, A3, 0, TRIG, IDLE),
        (0x0F, A3, 0, UNCOND, NEXT),
    ])
    v.append(("trigger_command", trig, [
        {"tick": 1, "kind": "command", "value": "START"},
        {"tick": 7, "kind": "command", "value": "SEND"},
        {"tick": 12, "kind": "command", "value": 0x00},
        {"tick": 20, "kind": "command", "value": "START"},
        {"tick": 30, "kind": "command", "value": "START"},
    ], 45))
    prev = program_bits("0000", [
        (0xAA, A3, 0, UNCOND, PREV),
        (0x55, A2, 0, UNCOND, NEXT),
        (0xCC, A1, 0, UNCOND, NEXT),
    ])
    v.append(("previous_wraps", prev, [{"tick": 0, "kind": "command", "value": "START"}], 40))
    send = program_bits("0010", [
        (0xFF, A3, 0, UNCOND, IDLE),
        (0x00, A3, 0, UNCOND, NEXT),
        (0x00, A3, 0, UNCOND, NEXT),
    ])
    v.append(("send_on_idle", send, [{"tick": 0, "kind": "command", "value": "START"}], 75))
    v.append(("load_then_start", None, [
        {"tick": 0, "kind": "bits", "value": start_stop},
        {"tick": 2, "kind": "command", "value": "START"},
        {"tick": 6, "kind": "bits", "value": "1"},
    ], 12))
    v.append(("explicit_send", start_stop, [
        {"tick": 1, "kind": "command", "value": "SEND"},
        {"tick": 5, "kind": "command", "value": "START"},
    ], 62))
    auto = program_bits("0100", DIVE_PHASES)
    v.append(("autorun_timeout", auto, [], 70))
    zeros = "0" * 58
    v.append(("all_zero_program_stays_idle", zeros, [], 200))
    out = []
    for name, prog, stim, ticks in v:
        out.append({"name": name, "program": prog, "stimulus": stim, "ticks": ticks,
                    "expected": run_vector(prog, stim, ticks)})
    return out


def main():
    FIX.mkdir(parents=True, exist_ok=True)
    values = {
        "physics": physics(),
        "photovoltaics": photovoltaics(),
        "link": link(),
        "programs": {
            "canonical_dive_autorun": program_bits("0100", DIVE_PHASES),
            "canonical_dive": program_bits("0000", DIVE_PHASES),
        },
    }
    (FIX / "oracle_values.json").write_text(json.dumps(values, indent=2) + "\n")
    (FIX / "dock_scores.json").write_text(json.dumps(dock_fixtures(), indent=1) + "\n")
    with open(FIX / "fsm_vectors.jsonl", "w") as f:
        for rec in fsm_vectors():
            f.write(json.dumps(rec, separators=(",", ":")) + "\n")
    print(json.dumps(values, indent=2))


if __name__ == "__main__":
    main()
