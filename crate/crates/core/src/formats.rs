//! Line-oriented text formats for instances, maps, games, profiles and points.
//!
//! Blank lines and lines starting with `#` are ignored everywhere. Line
//! numbers in errors refer to the whole file.

use std::fmt::Write as _;

use crate::brouwer::{build_hpv_map, format_coord, make_toy_map, BrouwerMap, MapKind, Point, ToySpec};
use crate::circuits::parse_lines;
use crate::end_of_line::EolInstance;
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::imitation::{ImitationGame, MixedProfile};

type Line<'a> = (usize, &'a str);

fn content_lines(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .collect()
}

struct Cursor<'a> {
    lines: Vec<Line<'a>>,
    pos: usize,
    /// Line number reported when input ends early.
    last: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let lines = content_lines(text);
        let last = text.lines().count().max(1);
        Cursor { lines, pos: 0, last }
    }

    fn next(&mut self, what: &str) -> Result<Line<'a>> {
        let line = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::syntax(self.last, format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(line)
    }

    fn expect(&mut self, exact: &str) -> Result<usize> {
        let (no, l) = self.next(&format!("`{exact}`"))?;
        if l != exact {
            return Err(Error::syntax(no, format!("expected `{exact}`, got {l:?}")));
        }
        Ok(no)
    }

    /// `key value`, returning the value.
    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (no, l) = self.next(&format!("`{key} <value>`"))?;
        match l.split_once(' ') {
            Some((k, v)) if k == key && !v.is_empty() => Ok((no, v)),
            _ => Err(Error::syntax(no, format!("expected `{key} <value>`, got {l:?}"))),
        }
    }

    fn circuit(&mut self) -> Result<crate::circuits::BitCircuit> {
        let rest = &self.lines[self.pos..];
        let mut iter = rest.iter().copied();
        let (c, remaining) = parse_lines(&mut iter)?;
        self.pos = self.lines.len() - remaining.len();
        Ok(c)
    }

    fn done(&self) -> Result<()> {
        match self.lines.get(self.pos) {
            Some((no, l)) => Err(Error::syntax(*no, format!("trailing content {l:?}"))),
            None => Ok(()),
        }
    }
}

fn parse_usize(no: usize, s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::syntax(no, format!("bad integer {s:?}")))
}

/// Numbers are written as `a/b` when exactly representable with a small
/// power-of-two or integer denominator, otherwise with 17 significant digits.
pub fn format_number(x: f64) -> String {
    if let Some(r) = Rational::from_float(x) {
        if r.denom().bits() <= 24 {
            return r.to_string();
        }
    }
    format_coord(x)
}

pub fn parse_number(s: &str) -> Result<f64> {
    let bad = || Error::Malformed(format!("not a number: {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.parse::<i64>().map_err(|_| bad())? as f64;
            let b: f64 = b.parse::<i64>().map_err(|_| bad())? as f64;
            if b == 0.0 {
                return Err(bad());
            }
            Ok(a / b)
        }
        None => {
            let v: f64 = s.parse().map_err(|_| bad())?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        }
    }
}

fn number_at(no: usize, s: &str) -> Result<f64> {
    parse_number(s).map_err(|e| Error::syntax(no, e.to_string()))
}

// ---- instances ----

pub fn write_instance(inst: &EolInstance) -> String {
    let mut s = format!("eol v1\nn {}\nS:\n", inst.n());
    s.push_str(&inst.successor().serialize());
    s.push_str("P:\n");
    s.push_str(&inst.predecessor().serialize());
    s
}

fn instance_block(cur: &mut Cursor) -> Result<EolInstance> {
    cur.expect("eol v1")?;
    let (no, n) = cur.field("n")?;
    let n = parse_usize(no, n)?;
    let no = cur.expect("S:")?;
    let s = cur.circuit()?;
    cur.expect("P:")?;
    let p = cur.circuit()?;
    let inst = EolInstance::new(s, p).map_err(|e| Error::syntax(no, e.to_string()))?;
    if inst.n() != n {
        return Err(Error::syntax(no, format!("header says n = {n}, circuits have width {}", inst.n())));
    }
    Ok(inst)
}

pub fn parse_instance(text: &str) -> Result<EolInstance> {
    let mut cur = Cursor::new(text);
    let inst = instance_block(&mut cur)?;
    cur.done()?;
    Ok(inst)
}

// ---- maps ----

pub fn write_map(map: &BrouwerMap) -> String {
    let mut s = String::from("brouwer v1\n");
    let kind = match map.kind() {
        MapKind::Hpv(_) => "hpv",
        MapKind::Toy(_) => "toy",
    };
    let _ = writeln!(s, "kind {kind}");
    let _ = writeln!(s, "d {}", map.dim());
    let _ = writeln!(s, "h 1/8");
    let _ = writeln!(s, "delta {}", format_number(map.delta()));
    let _ = writeln!(s, "lipschitz {}", format_number(map.lipschitz_bound()));
    let _ = writeln!(s, "floor {}", format_number(map.displacement_floor()));
    match map.kind() {
        MapKind::Hpv(field) => {
            s.push_str("instance:\n");
            s.push_str(&write_instance(field.instance()));
        }
        MapKind::Toy(spec) => match spec {
            ToySpec::Identity { .. } => s.push_str("toy identity\n"),
            ToySpec::Reversal { .. } => s.push_str("toy reversal\n"),
            ToySpec::Constant { c } => {
                let _ = writeln!(s, "toy constant {}", join_numbers(c));
            }
            ToySpec::Affine { a, b } => {
                s.push_str("toy affine\n");
                for (row, bi) in a.iter().zip(b) {
                    let _ = writeln!(s, "row {} {}", join_numbers(row), format_number(*bi));
                }
            }
        },
    }
    s
}

fn join_numbers(v: &[f64]) -> String {
    v.iter().map(|x| format_number(*x)).collect::<Vec<_>>().join(" ")
}

fn numbers(no: usize, s: &str) -> Result<Vec<f64>> {
    s.split(' ').map(|t| number_at(no, t)).collect()
}

fn map_block(cur: &mut Cursor) -> Result<BrouwerMap> {
    cur.expect("brouwer v1")?;
    let (kind_no, kind) = cur.field("kind")?;
    let (no, d) = cur.field("d")?;
    let d = parse_usize(no, d)?;
    let (h_no, h) = cur.field("h")?;
    let (delta_no, delta) = cur.field("delta")?;
    let (lip_no, lip) = cur.field("lipschitz")?;
    let (floor_no, floor) = cur.field("floor")?;
    let h = number_at(h_no, h)?;
    let delta = number_at(delta_no, delta)?;
    let lip = number_at(lip_no, lip)?;
    let floor = number_at(floor_no, floor)?;

    let map = match kind {
        "hpv" => {
            cur.expect("instance:")?;
            let inst = instance_block(cur)?;
            build_hpv_map(&inst).map_err(|e| Error::syntax(kind_no, e.to_string()))?
        }
        "toy" => {
            let (no, l) = cur.next("`toy <spec>`")?;
            let spec = match l.split_once(' ').unwrap_or((l, "")) {
                ("toy", "identity") => ToySpec::Identity { d },
                ("toy", "reversal") => ToySpec::Reversal { d },
                ("toy", rest) if rest.starts_with("constant ") => ToySpec::Constant {
                    c: numbers(no, &rest["constant ".len()..])?,
                },
                ("toy", "affine") => {
                    let mut a = Vec::with_capacity(d);
                    let mut b = Vec::with_capacity(d);
                    for _ in 0..d {
                        let (no, row) = cur.field("row")?;
                        let mut vals = numbers(no, row)?;
                        if vals.len() != d + 1 {
                            return Err(Error::syntax(no, format!("affine row needs {} numbers", d + 1)));
                        }
                        b.push(vals.pop().expect("non-empty"));
                        a.push(vals);
                    }
                    ToySpec::Affine { a, b }
                }
                _ => return Err(Error::syntax(no, format!("unknown toy map {l:?}"))),
            };
            make_toy_map(spec).map_err(|e| Error::syntax(no, e.to_string()))?
        }
        other => return Err(Error::syntax(kind_no, format!("unknown map kind {other:?}"))),
    };
    let mismatch = |no: usize, what: &str, got: f64, want: f64| {
        Error::syntax(no, format!("{what} {got} does not match the construction ({want})"))
    };
    if map.dim() != d {
        return Err(Error::syntax(no, format!("d = {d} but the map has dimension {}", map.dim())));
    }
    if h != crate::brouwer::CELL {
        return Err(mismatch(h_no, "h", h, crate::brouwer::CELL));
    }
    if delta != map.delta() {
        return Err(mismatch(delta_no, "delta", delta, map.delta()));
    }
    if floor != map.displacement_floor() {
        return Err(mismatch(floor_no, "floor", floor, map.displacement_floor()));
    }
    map.with_lipschitz_bound(lip).map_err(|e| Error::syntax(lip_no, e.to_string()))
}

pub fn parse_map(text: &str) -> Result<BrouwerMap> {
    let mut cur = Cursor::new(text);
    let map = map_block(&mut cur)?;
    cur.done()?;
    Ok(map)
}

// ---- games ----

pub fn write_game(game: &ImitationGame) -> String {
    let mut s = String::from("game v1\n");
    let _ = writeln!(s, "d {}", game.dim());
    let _ = writeln!(s, "k {}", game.k());
    let _ = writeln!(s, "M {}", game.lipschitz());
    let _ = writeln!(s, "eps {}", game.eps());
    s.push_str("map:\n");
    s.push_str(&write_map(game.map()));
    s
}

pub fn parse_game(text: &str) -> Result<ImitationGame> {
    let mut cur = Cursor::new(text);
    cur.expect("game v1")?;
    let (d_no, d) = cur.field("d")?;
    let d = parse_usize(d_no, d)?;
    let (k_no, k) = cur.field("k")?;
    let k: u64 = k.parse().map_err(|_| Error::syntax(k_no, format!("bad k {k:?}")))?;
    let (m_no, m) = cur.field("M")?;
    let m = exact::parse_rational(m).map_err(|e| Error::syntax(m_no, e.to_string()))?;
    let (eps_no, eps) = cur.field("eps")?;
    let eps = exact::parse_rational(eps).map_err(|e| Error::syntax(eps_no, e.to_string()))?;
    cur.expect("map:")?;
    let map = map_block(&mut cur)?;
    cur.done()?;
    if map.dim() != d {
        return Err(Error::syntax(d_no, format!("d = {d} but the map has dimension {}", map.dim())));
    }
    let m_f = exact::to_f64(&m);
    if exact::from_f64(m_f).ok() != Some(m.clone()) {
        return Err(Error::syntax(m_no, "M must be exactly representable"));
    }
    let map = map.with_lipschitz_bound(m_f).map_err(|e| Error::syntax(m_no, e.to_string()))?;
    ImitationGame::with_k(map, eps, k).map_err(|e| Error::syntax(k_no, e.to_string()))
}

// ---- profiles ----

pub fn write_profile(profile: &MixedProfile) -> String {
    let mut s = String::from("profile v1\n");
    for i in 0..profile.num_players() {
        let _ = write!(s, "p{i}:");
        for (a, p) in profile.support(i) {
            let _ = write!(s, " {a}:{}/{}", p.numer(), p.denom());
        }
        s.push('\n');
    }
    s
}

pub fn parse_profile(text: &str) -> Result<MixedProfile> {
    let mut cur = Cursor::new(text);
    cur.expect("profile v1")?;
    let mut players = Vec::new();
    while cur.pos < cur.lines.len() {
        let (no, l) = cur.next("player line")?;
        let prefix = format!("p{}:", players.len());
        let rest = l
            .strip_prefix(&prefix)
            .ok_or_else(|| Error::syntax(no, format!("expected `{prefix}`, got {l:?}")))?;
        let mut support = Vec::new();
        for tok in rest.split_whitespace() {
            let (a, p) = tok
                .split_once(':')
                .ok_or_else(|| Error::syntax(no, format!("expected `<action>:<num>/<den>`, got {tok:?}")))?;
            let a = parse_usize(no, a)?;
            let p = exact::parse_rational(p).map_err(|e| Error::syntax(no, e.to_string()))?;
            support.push((a, p));
        }
        if support.is_empty() {
            return Err(Error::syntax(no, "empty support"));
        }
        players.push(support);
    }
    MixedProfile::new(players)
}

// ---- points ----

pub fn write_points(points: &[Point]) -> String {
    points.iter().map(|p| format!("{p}\n")).collect()
}

pub fn parse_points(text: &str) -> Result<Vec<Point>> {
    content_lines(text)
        .into_iter()
        .map(|(no, l)| Ok(Point(l.split_whitespace().map(|t| number_at(no, t)).collect::<Result<_>>()?)))
        .collect()
}

/// Parse a point given inline, e.g. `0.5 0.25` or `1/2,1/4`.
pub fn parse_point(s: &str) -> Result<Point> {
    let coords = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(parse_number)
        .collect::<Result<Vec<_>>>()?;
    if coords.is_empty() {
        return Err(Error::Malformed("empty point".into()));
    }
    Ok(Point(coords))
}
