//! Hand-written parser and canonical printer for the pulse-sequence DSL.
//!
//! One statement per line, `#` starts a comment:
//!
//! ```text
//! stmt  := "laser" lchan dur | "mw" mchan rot [phase]
//!        | "wait" (dur | IDENT) | "readout" lchan dur
//!        | "sweep" IDENT dur dur INT
//! lchan := "A1" | "A2" | "OFFRES"
//! mchan := "MW1" | "MW2" | "MW3"
//! rot   := "pi" | "pi/2" | NUMBER"deg" | dur
//! phase := "+x" | "-x" | "+y" | "-y"
//! dur   := NUMBER("ns" | "us" | "ms")
//! ```
//!
//! Any duration slot also accepts the declared sweep symbol, so a sweep can
//! scan waits, pulse lengths or laser durations. At most one sweep may be
//! declared and every symbol use must match it.
//!
//! The canonical form uses lowercase keywords, single spaces and keeps each
//! duration in the unit it was written in; printing a parsed sequence and
//! parsing it again is the identity.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            col,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaserChannel {
    A1,
    A2,
    OffRes,
}

impl LaserChannel {
    pub fn as_str(&self) -> &'static str {
        match self {
            LaserChannel::A1 => "A1",
            LaserChannel::A2 => "A2",
            LaserChannel::OffRes => "OFFRES",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MwChannel {
    Mw1,
    Mw2,
    Mw3,
}

impl MwChannel {
    pub fn as_str(&self) -> &'static str {
        match self {
            MwChannel::Mw1 => "MW1",
            MwChannel::Mw2 => "MW2",
            MwChannel::Mw3 => "MW3",
        }
    }

    /// Ground sublevel pair (higher m first) in the (+3/2, +1/2, -1/2, -3/2)
    /// basis.
    pub fn pair(&self) -> (usize, usize) {
        match self {
            MwChannel::Mw1 => (2, 3),
            MwChannel::Mw2 => (1, 2),
            MwChannel::Mw3 => (0, 1),
        }
    }

    /// Ratio of the effective pair Rabi frequency to the bare drive value:
    /// 2 |<m|S_x|m'>| (sqrt(3) for the outer pairs, 2 for the central one).
    pub fn pair_factor(&self) -> f64 {
        match self {
            MwChannel::Mw1 | MwChannel::Mw3 => crate::constants::SQRT_3,
            MwChannel::Mw2 => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeUnit {
    Ns,
    Us,
    Ms,
}

impl TimeUnit {
    pub fn as_str(&self) -> &'static str {
        match self {
            TimeUnit::Ns => "ns",
            TimeUnit::Us => "us",
            TimeUnit::Ms => "ms",
        }
    }

    pub fn to_us_factor(&self) -> f64 {
        match self {
            TimeUnit::Ns => 1e-3,
            TimeUnit::Us => 1.0,
            TimeUnit::Ms => 1e3,
        }
    }
}

/// A duration literal, kept in its written unit for canonical printing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationLit {
    pub value: f64,
    pub unit: TimeUnit,
}

impl DurationLit {
    pub fn us(value: f64) -> Self {
        Self {
            value,
            unit: TimeUnit::Us,
        }
    }

    pub fn to_us(&self) -> f64 {
        self.value * self.unit.to_us_factor()
    }
}

impl fmt::Display for DurationLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.value, self.unit.as_str())
    }
}

/// A duration slot: literal or reference to the sweep symbol.
#[derive(Debug, Clone, PartialEq)]
pub enum DurValue {
    Lit(DurationLit),
    Sym(String),
}

impl DurValue {
    /// Resolve to microseconds given the current sweep value.
    pub fn resolve_us(&self, sweep_value_us: f64) -> f64 {
        match self {
            DurValue::Lit(d) => d.to_us(),
            DurValue::Sym(_) => sweep_value_us,
        }
    }

    pub fn is_symbol(&self) -> bool {
        matches!(self, DurValue::Sym(_))
    }
}

impl fmt::Display for DurValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DurValue::Lit(d) => write!(f, "{d}"),
            DurValue::Sym(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rotation {
    Pi,
    PiHalf,
    Degrees(f64),
    Timed(DurValue),
}

impl Rotation {
    /// Rotation angle in radians; timed rotations use the effective pair
    /// Rabi frequency (MHz).
    pub fn angle(&self, pair_rabi_mhz: f64, sweep_value_us: f64) -> f64 {
        match self {
            Rotation::Pi => std::f64::consts::PI,
            Rotation::PiHalf => std::f64::consts::FRAC_PI_2,
            Rotation::Degrees(d) => d.to_radians(),
            Rotation::Timed(d) => {
                std::f64::consts::TAU * pair_rabi_mhz * d.resolve_us(sweep_value_us)
            }
        }
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rotation::Pi => write!(f, "pi"),
            Rotation::PiHalf => write!(f, "pi/2"),
            Rotation::Degrees(d) => write!(f, "{d}deg"),
            Rotation::Timed(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::PlusX => "+x",
            Phase::MinusX => "-x",
            Phase::PlusY => "+y",
            Phase::MinusY => "-y",
        }
    }

    /// Drive phase angle in radians.
    pub fn angle(&self) -> f64 {
        match self {
            Phase::PlusX => 0.0,
            Phase::MinusX => std::f64::consts::PI,
            Phase::PlusY => std::f64::consts::FRAC_PI_2,
            Phase::MinusY => 3.0 * std::f64::consts::FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Laser {
        chan: LaserChannel,
        dur: DurValue,
    },
    Mw {
        chan: MwChannel,
        rot: Rotation,
        phase: Option<Phase>,
    },
    Wait {
        dur: DurValue,
    },
    Readout {
        chan: LaserChannel,
        dur: DurValue,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepDecl {
    pub symbol: String,
    pub start: DurationLit,
    pub stop: DurationLit,
    pub points: usize,
}

impl SweepDecl {
    pub fn values_us(&self) -> Vec<f64> {
        crate::trace::linspace(self.start.to_us(), self.stop.to_us(), self.points)
    }
}

/// An ordered pulse sequence with an optional sweep declaration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pub elements: Vec<Element>,
    pub sweep: Option<SweepDecl>,
}

/// Token with its 1-based starting column.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch == '#' {
            break;
        }
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        let end = line.find('#').unwrap_or(line.len());
        out.push((s + 1, line[s..end].trim_end()));
    }
    out
}

fn parse_duration_lit(token: &str) -> Option<DurationLit> {
    for (suffix, unit) in [
        ("ns", TimeUnit::Ns),
        ("us", TimeUnit::Us),
        ("ms", TimeUnit::Ms),
    ] {
        if let Some(prefix) = token.strip_suffix(suffix) {
            if let Ok(value) = prefix.parse::<f64>() {
                return Some(DurationLit { value, unit });
            }
        }
    }
    None
}

fn is_identifier(token: &str) -> bool {
    !token.is_empty()
        && token
            .chars()
            .next()
            .map(|c| c.is_ascii_alphabetic() || c == '_')
            .unwrap_or(false)
        && token.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct LineParser<'a> {
    tokens: Vec<(usize, &'a str)>,
    cursor: usize,
    line_no: usize,
}

impl<'a> LineParser<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        let t = self.tokens.get(self.cursor).copied().ok_or_else(|| {
            let col = self.tokens.last().map(|(c, t)| c + t.len()).unwrap_or(1);
            ParseError::new(self.line_no, col, format!("expected {what}"))
        })?;
        self.cursor += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.tokens.get(self.cursor).copied()
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if let Some((col, tok)) = self.peek() {
            return Err(ParseError::new(
                self.line_no,
                col,
                format!("unexpected trailing token `{tok}`"),
            ));
        }
        Ok(())
    }

    fn duration_or_symbol(&mut self, what: &str) -> Result<DurValue, ParseError> {
        let (col, tok) = self.next(what)?;
        if let Some(lit) = parse_duration_lit(tok) {
            if lit.value <= 0.0 {
                return Err(ParseError::new(
                    self.line_no,
                    col,
                    format!("duration must be positive, got `{tok}`"),
                ));
            }
            return Ok(DurValue::Lit(lit));
        }
        if is_identifier(tok) {
            return Ok(DurValue::Sym(tok.to_string()));
        }
        Err(ParseError::new(
            self.line_no,
            col,
            format!(
                "malformed duration `{tok}` (expected NUMBER followed by ns/us/ms, or a symbol)"
            ),
        ))
    }

    fn duration_lit(&mut self, what: &str, allow_zero: bool) -> Result<DurationLit, ParseError> {
        let (col, tok) = self.next(what)?;
        let lit = parse_duration_lit(tok).ok_or_else(|| {
            ParseError::new(
                self.line_no,
                col,
                format!("malformed duration `{tok}` (expected NUMBER followed by ns/us/ms)"),
            )
        })?;
        if lit.value < 0.0 || (!allow_zero && lit.value == 0.0) {
            return Err(ParseError::new(
                self.line_no,
                col,
                format!(
                    "duration must be {}, got `{tok}`",
                    if allow_zero {
                        "non-negative"
                    } else {
                        "positive"
                    }
                ),
            ));
        }
        Ok(lit)
    }

    fn laser_channel(&mut self) -> Result<LaserChannel, ParseError> {
        let (col, tok) = self.next("laser channel (A1, A2 or OFFRES)")?;
        match tok {
            "A1" => Ok(LaserChannel::A1),
            "A2" => Ok(LaserChannel::A2),
            "OFFRES" => Ok(LaserChannel::OffRes),
            "MW1" | "MW2" | "MW3" => Err(ParseError::new(
                self.line_no,
                col,
                format!("{tok} is a microwave channel, not a laser channel"),
            )),
            other => Err(ParseError::new(
                self.line_no,
                col,
                format!("unknown channel {other}"),
            )),
        }
    }

    fn mw_channel(&mut self) -> Result<MwChannel, ParseError> {
        let (col, tok) = self.next("microwave channel (MW1, MW2 or MW3)")?;
        match tok {
            "MW1" => Ok(MwChannel::Mw1),
            "MW2" => Ok(MwChannel::Mw2),
            "MW3" => Ok(MwChannel::Mw3),
            "A1" | "A2" | "OFFRES" => Err(ParseError::new(
                self.line_no,
                col,
                format!("{tok} is an optical channel, not a microwave channel"),
            )),
            other => Err(ParseError::new(
                self.line_no,
                col,
                format!("unknown channel {other}"),
            )),
        }
    }

    fn rotation(&mut self) -> Result<Rotation, ParseError> {
        let (col, tok) = self.next("rotation (pi, pi/2, NUMBERdeg or a duration)")?;
        match tok {
            "pi" => Ok(Rotation::Pi),
            "pi/2" => Ok(Rotation::PiHalf),
            _ => {
                if let Some(deg) = tok.strip_suffix("deg") {
                    if let Ok(value) = deg.parse::<f64>() {
                        return Ok(Rotation::Degrees(value));
                    }
                }
                if let Some(lit) = parse_duration_lit(tok) {
                    if lit.value <= 0.0 {
                        return Err(ParseError::new(
                            self.line_no,
                            col,
                            format!("duration must be positive, got `{tok}`"),
                        ));
                    }
                    return Ok(Rotation::Timed(DurValue::Lit(lit)));
                }
                if is_identifier(tok) {
                    return Ok(Rotation::Timed(DurValue::Sym(tok.to_string())));
                }
                Err(ParseError::new(
                    self.line_no,
                    col,
                    format!("malformed rotation `{tok}`"),
                ))
            }
        }
    }

    fn phase(&mut self) -> Result<Option<Phase>, ParseError> {
        let Some((col, tok)) = self.peek() else {
            return Ok(None);
        };
        self.cursor += 1;
        match tok {
            "+x" => Ok(Some(Phase::PlusX)),
            "-x" => Ok(Some(Phase::MinusX)),
            "+y" => Ok(Some(Phase::PlusY)),
            "-y" => Ok(Some(Phase::MinusY)),
            other => Err(ParseError::new(
                self.line_no,
                col,
                format!("unknown phase `{other}` (expected +x, -x, +y or -y)"),
            )),
        }
    }
}

/// Parse DSL text into a sequence, with line/column diagnostics.
pub fn parse_sequence(text: &str) -> Result<PulseSequence, ParseError> {
    let mut seq = PulseSequence::default();
    // (line, col, symbol) for declaration checking afterwards.
    let mut symbol_uses: Vec<(usize, usize, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = tokenize(raw);
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser {
            tokens,
            cursor: 0,
            line_no,
        };
        let (kw_col, keyword) = p.next("statement keyword")?;
        match keyword {
            "laser" => {
                let chan = p.laser_channel()?;
                let dur = p.duration_or_symbol("laser duration")?;
                if let DurValue::Sym(s) = &dur {
                    symbol_uses.push((line_no, kw_col, s.clone()));
                }
                p.expect_end()?;
                seq.elements.push(Element::Laser { chan, dur });
            }
            "mw" => {
                let chan = p.mw_channel()?;
                let rot = p.rotation()?;
                if let Rotation::Timed(DurValue::Sym(s)) = &rot {
                    symbol_uses.push((line_no, kw_col, s.clone()));
                }
                let phase = p.phase()?;
                p.expect_end()?;
                seq.elements.push(Element::Mw { chan, rot, phase });
            }
            "wait" => {
                let dur = p.duration_or_symbol("wait duration")?;
                if let DurValue::Sym(s) = &dur {
                    symbol_uses.push((line_no, kw_col, s.clone()));
                }
                p.expect_end()?;
                seq.elements.push(Element::Wait { dur });
            }
            "readout" => {
                let chan = p.laser_channel()?;
                let dur = p.duration_or_symbol("readout duration")?;
                if let DurValue::Sym(s) = &dur {
                    symbol_uses.push((line_no, kw_col, s.clone()));
                }
                p.expect_end()?;
                seq.elements.push(Element::Readout { chan, dur });
            }
            "sweep" => {
                let (sym_col, sym) = p.next("sweep symbol")?;
                if !is_identifier(sym) {
                    return Err(ParseError::new(
                        line_no,
                        sym_col,
                        format!("invalid sweep symbol `{sym}`"),
                    ));
                }
                let start = p.duration_lit("sweep start", true)?;
                let stop = p.duration_lit("sweep stop", true)?;
                let (pts_col, pts_tok) = p.next("sweep point count")?;
                let points: usize = pts_tok.parse().map_err(|_| {
                    ParseError::new(line_no, pts_col, format!("invalid point count `{pts_tok}`"))
                })?;
                if points == 0 {
                    return Err(ParseError::new(
                        line_no,
                        pts_col,
                        "point count must be >= 1",
                    ));
                }
                p.expect_end()?;
                if seq.sweep.is_some() {
                    return Err(ParseError::new(
                        line_no,
                        kw_col,
                        "at most one sweep declaration is allowed",
                    ));
                }
                seq.sweep = Some(SweepDecl {
                    symbol: sym.to_string(),
                    start,
                    stop,
                    points,
                });
            }
            other => {
                return Err(ParseError::new(
                    line_no,
                    kw_col,
                    format!("unknown statement `{other}`"),
                ));
            }
        }
    }

    for (line, col, sym) in &symbol_uses {
        match &seq.sweep {
            Some(decl) if decl.symbol == *sym => {}
            Some(decl) => {
                return Err(ParseError::new(
                    *line,
                    *col,
                    format!(
                        "undeclared symbol `{sym}` (the sweep declares `{}`)",
                        decl.symbol
                    ),
                ));
            }
            None => {
                return Err(ParseError::new(
                    *line,
                    *col,
                    format!("undeclared symbol `{sym}` (no sweep declaration)"),
                ));
            }
        }
    }
    Ok(seq)
}

/// Canonical form: sweep first, one statement per line, lowercase keywords,
/// single spaces, durations in their written units.
pub fn print_sequence(seq: &PulseSequence) -> String {
    let mut out = String::new();
    if let Some(s) = &seq.sweep {
        out.push_str(&format!(
            "sweep {} {} {} {}\n",
            s.symbol, s.start, s.stop, s.points
        ));
    }
    for e in &seq.elements {
        match e {
            Element::Laser { chan, dur } => {
                out.push_str(&format!("laser {} {}\n", chan.as_str(), dur));
            }
            Element::Mw { chan, rot, phase } => match phase {
                Some(p) => {
                    out.push_str(&format!("mw {} {} {}\n", chan.as_str(), rot, p.as_str()));
                }
                None => out.push_str(&format!("mw {} {}\n", chan.as_str(), rot)),
            },
            Element::Wait { dur } => out.push_str(&format!("wait {dur}\n")),
            Element::Readout { chan, dur } => {
                out.push_str(&format!("readout {} {}\n", chan.as_str(), dur));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn parses_a_single_pulse() {
        let seq = parse_sequence("mw MW1 pi/2 +x\n").unwrap();
        assert_eq!(seq.elements.len(), 1);
        assert_eq!(
            seq.elements[0],
            Element::Mw {
                chan: MwChannel::Mw1,
                rot: Rotation::PiHalf,
                phase: Some(Phase::PlusX),
            }
        );
    }

    #[test]
    fn parses_the_hahn_echo_sequence() {
        let text = "\
sweep tau 0us 100us 201
laser A2 20us
mw MW1 pi/2 +x
wait tau
mw MW1 pi +x
wait tau
mw MW1 pi/2 +x
readout A2 150ns
";
        let seq = parse_sequence(text).unwrap();
        assert_eq!(seq.elements.len(), 7);
        let sweep = seq.sweep.as_ref().unwrap();
        assert_eq!(sweep.symbol, "tau");
        assert_eq!(sweep.points, 201);
        assert!(matches!(
            &seq.elements[2],
            Element::Wait {
                dur: DurValue::Sym(s)
            } if s == "tau"
        ));
    }

    #[test]
    fn unknown_channel_reports_location() {
        let err = parse_sequence("mw MW7 pi\n").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("unknown channel MW7"), "{err}");
    }

    #[test]
    fn laser_rejects_mw_channel() {
        let err = parse_sequence("laser MW1 10us\n").unwrap_err();
        assert!(err.message.contains("not a laser channel"));
    }

    #[test]
    fn undeclared_symbol_is_an_error() {
        let err = parse_sequence("wait tau\n").unwrap_err();
        assert!(err.message.contains("undeclared symbol `tau`"), "{err}");
        let err2 = parse_sequence("sweep t 0us 1us 5\nwait tau\n").unwrap_err();
        assert!(err2.message.contains("undeclared symbol `tau`"));
        assert_eq!(err2.line, 2);
    }

    #[test]
    fn second_sweep_is_rejected() {
        let err = parse_sequence("sweep a 0us 1us 2\nsweep b 0us 1us 2\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("at most one sweep"));
    }

    #[test]
    fn zero_duration_literal_is_rejected() {
        assert!(parse_sequence("wait 0us\n").is_err());
        assert!(parse_sequence("laser A2 0ns\n").is_err());
        // Sweeps may start at zero.
        assert!(parse_sequence("sweep t 0us 5us 11\nwait t\n").is_ok());
    }

    #[test]
    fn malformed_duration_is_rejected() {
        let err = parse_sequence("wait 5parsecs\n").unwrap_err();
        assert!(err.message.contains("malformed duration"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let seq = parse_sequence("# a comment\n\nmw MW2 90deg -y # trailing\n").unwrap();
        assert_eq!(seq.elements.len(), 1);
        assert_eq!(
            seq.elements[0],
            Element::Mw {
                chan: MwChannel::Mw2,
                rot: Rotation::Degrees(90.0),
                phase: Some(Phase::MinusY),
            }
        );
    }

    fn random_sequence(rng: &mut SplitMix64) -> PulseSequence {
        let sweep = if rng.uniform() < 0.7 {
            Some(SweepDecl {
                symbol: "tau".to_string(),
                start: DurationLit {
                    value: (rng.range(0.0, 10.0) * 8.0).round() / 8.0,
                    unit: TimeUnit::Us,
                },
                stop: DurationLit {
                    value: (rng.range(10.0, 100.0) * 8.0).round() / 8.0,
                    unit: TimeUnit::Us,
                },
                points: 2 + (rng.next_u64() % 200) as usize,
            })
        } else {
            None
        };
        let has_sweep = sweep.is_some();
        let n = 1 + (rng.next_u64() % 8) as usize;
        let mut elements = Vec::new();
        let units = [TimeUnit::Ns, TimeUnit::Us, TimeUnit::Ms];
        let dur = |rng: &mut SplitMix64| -> DurValue {
            if has_sweep && rng.uniform() < 0.3 {
                DurValue::Sym("tau".to_string())
            } else {
                DurValue::Lit(DurationLit {
                    value: ((rng.range(0.1, 500.0)) * 4.0).round() / 4.0,
                    unit: units[(rng.next_u64() % 3) as usize],
                })
            }
        };
        for _ in 0..n {
            let choice = rng.next_u64() % 4;
            let el = match choice {
                0 => Element::Laser {
                    chan: [LaserChannel::A1, LaserChannel::A2, LaserChannel::OffRes]
                        [(rng.next_u64() % 3) as usize],
                    dur: dur(rng),
                },
                1 => {
                    let rot = match rng.next_u64() % 4 {
                        0 => Rotation::Pi,
                        1 => Rotation::PiHalf,
                        2 => Rotation::Degrees((rng.range(1.0, 360.0) * 2.0).round() / 2.0),
                        _ => Rotation::Timed(dur(rng)),
                    };
                    let phase = match rng.next_u64() % 5 {
                        0 => None,
                        1 => Some(Phase::PlusX),
                        2 => Some(Phase::MinusX),
                        3 => Some(Phase::PlusY),
                        _ => Some(Phase::MinusY),
                    };
                    Element::Mw {
                        chan: [MwChannel::Mw1, MwChannel::Mw2, MwChannel::Mw3]
                            [(rng.next_u64() % 3) as usize],
                        rot,
                        phase,
                    }
                }
                2 => Element::Wait { dur: dur(rng) },
                _ => Element::Readout {
                    chan: [LaserChannel::A1, LaserChannel::A2][(rng.next_u64() % 2) as usize],
                    dur: dur(rng),
                },
            };
            elements.push(el);
        }
        PulseSequence { elements, sweep }
    }

    /// Hand-written sequences hitting every grammar production exactly.
    fn production_corpus() -> Vec<&'static str> {
        vec![
            "laser A1 10us\n",
            "laser A2 1.5ms\n",
            "laser OFFRES 40us\n",
            "mw MW1 pi\n",
            "mw MW1 pi +x\n",
            "mw MW1 pi -x\n",
            "mw MW2 pi/2 +y\n",
            "mw MW2 pi/2 -y\n",
            "mw MW3 90deg\n",
            "mw MW3 33.5deg +x\n",
            "mw MW1 250ns\n",
            "mw MW2 1.25us -x\n",
            "wait 5us\n",
            "wait 120ns\n",
            "wait 2ms\n",
            "readout A1 150ns\n",
            "readout A2 1us\n",
            "sweep tau 0us 100us 201\nwait tau\n",
            "sweep t 10ns 900ns 90\nmw MW1 t +y\n",
            "sweep w 0.5us 80us 41\nlaser A2 w\n",
            "sweep r 100ns 400ns 4\nreadout A2 r\n",
            "sweep tau 0ms 1ms 11\nlaser OFFRES 40us\nmw MW1 pi/2 +x\nwait tau\nmw MW1 pi +x\nwait tau\nmw MW1 pi/2 +x\nreadout A2 150ns\n",
        ]
    }

    #[test]
    fn print_parse_is_identity_on_the_corpus() {
        // Explicit coverage of every production, then a batch of generated
        // sequences for breadth: 50 in total.
        let mut corpus: Vec<PulseSequence> = production_corpus()
            .into_iter()
            .map(|text| parse_sequence(text).unwrap())
            .collect();
        let mut rng = SplitMix64::new(99);
        while corpus.len() < 50 {
            corpus.push(random_sequence(&mut rng));
        }
        for seq in corpus {
            let printed = print_sequence(&seq);
            let reparsed = parse_sequence(&printed)
                .unwrap_or_else(|e| panic!("canonical text failed to parse: {e}\n{printed}"));
            assert_eq!(reparsed, seq, "round trip mismatch for\n{printed}");
            assert_eq!(print_sequence(&reparsed), printed);
        }
    }

    #[test]
    fn canonical_text_examples() {
        let seq = parse_sequence("mw MW1 pi/2 +x\nwait 5us\nreadout A2 150ns\n").unwrap();
        assert_eq!(
            print_sequence(&seq),
            "mw MW1 pi/2 +x\nwait 5us\nreadout A2 150ns\n"
        );
    }
}
