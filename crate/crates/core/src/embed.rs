//! Embedding of an EndOfTheLine graph as vertex-disjoint paths on the
//! `(2n+1)`-dimensional hypercube.
//!
//! A vertex `(u, v, b)` stores the current line vertex `u`, a buffer `v` and a
//! phase bit `b`. With `b = 0` the buffer walks from `u` to `S(u)` one bit at a
//! time; then `b` flips; with `b = 1` `u` walks to `v`; then `b` flips back.
//! Bits are updated least-significant first and equal bits are skipped.
//!
//! Phase-0 states are keyed by `u`, phase-1 states by `v` (whose origin is
//! recovered as `P(v)`), so every query needs a constant number of circuit
//! evaluations.

use std::fmt;

use rayon::prelude::*;

use crate::end_of_line::{format_word, parse_word, EolInstance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathVertex {
    pub u: u64,
    pub v: u64,
    pub b: bool,
}

impl PathVertex {
    pub const ORIGIN: PathVertex = PathVertex {
        u: 0,
        v: 0,
        b: false,
    };

    pub fn new(u: u64, v: u64, b: bool) -> Self {
        PathVertex { u, v, b }
    }

    /// Packed `(2n+1)`-bit word: `u` in bits `0..n`, `v` in `n..2n`, `b` at `2n`.
    pub fn to_word(self, n: usize) -> u64 {
        self.u | (self.v << n) | ((self.b as u64) << (2 * n))
    }

    pub fn from_word(w: u64, n: usize) -> Self {
        let mask = (1u64 << n) - 1;
        PathVertex {
            u: w & mask,
            v: (w >> n) & mask,
            b: (w >> (2 * n)) & 1 == 1,
        }
    }

    /// Coordinate `axis` (0-based, packed-word order) of the hypercube vertex.
    pub fn bit(self, axis: usize, n: usize) -> bool {
        (self.to_word(n) >> axis) & 1 == 1
    }

    /// Text form `<u>|<v>|<b>`, `u` and `v` MSB-first.
    pub fn display(self, n: usize) -> String {
        format!(
            "{}|{}|{}",
            format_word(self.u, n),
            format_word(self.v, n),
            self.b as u8
        )
    }

    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let parts: Vec<&str> = s.split('|').collect();
        match parts.as_slice() {
            [u, v, b] => {
                let b = match *b {
                    "0" => false,
                    "1" => true,
                    _ => return Err(Error::Malformed(format!("bad phase bit in {s:?}"))),
                };
                Ok(PathVertex {
                    u: parse_word(u, n)?,
                    v: parse_word(v, n)?,
                    b,
                })
            }
            _ => Err(Error::Malformed(format!("expected <u>|<v>|<b>, got {s:?}"))),
        }
    }

    /// Number of coordinates in which the two vertices differ.
    pub fn hamming(self, other: PathVertex, n: usize) -> u32 {
        (self.to_word(n) ^ other.to_word(n)).count_ones()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalPathInfo {
    pub on_path: bool,
    pub prev: Option<PathVertex>,
    pub next: Option<PathVertex>,
    pub is_start: bool,
    pub is_end: bool,
}

impl LocalPathInfo {
    const OFF: LocalPathInfo = LocalPathInfo {
        on_path: false,
        prev: None,
        next: None,
        is_start: false,
        is_end: false,
    };

    fn on(prev: Option<PathVertex>, next: Option<PathVertex>) -> Self {
        LocalPathInfo {
            on_path: true,
            prev,
            next,
            is_start: prev.is_none(),
            is_end: next.is_none(),
        }
    }
}

impl fmt::Display for LocalPathInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "on_path={} start={} end={}",
            self.on_path, self.is_start, self.is_end
        )
    }
}

/// `flipped` must be the lowest `m` set bits of `mask` for some `m`.
fn is_low_prefix(flipped: u64, mask: u64) -> bool {
    if flipped & !mask != 0 {
        return false;
    }
    let rest = mask & !flipped;
    // every flipped bit lies below every unflipped one
    flipped == 0 || rest == 0 || (63 - flipped.leading_zeros()) < rest.trailing_zeros()
}

fn lowest_bit(x: u64) -> u64 {
    x & x.wrapping_neg()
}

fn highest_bit(x: u64) -> u64 {
    1u64 << (63 - x.leading_zeros())
}

/// Local path structure at `p` for a normalized instance.
pub fn local_info(inst: &EolInstance, p: PathVertex) -> Result<LocalPathInfo> {
    let n = inst.n();
    let limit = 1u64 << n;
    if p.u >= limit || p.v >= limit {
        return Err(Error::WidthMismatch {
            expected: n,
            got: 64 - (p.u | p.v).leading_zeros() as usize,
        });
    }
    let PathVertex { u, v, b } = p;
    if !b {
        let s = inst.succ(u);
        if s == u {
            // u is an end of G (or isolated): only (u, u, 0) can be on a path
            if v != u {
                return Ok(LocalPathInfo::OFF);
            }
            let pu = inst.pred(u);
            if pu == u {
                return Ok(LocalPathInfo::OFF);
            }
            return Ok(LocalPathInfo::on(Some(PathVertex::new(u, u, true)), None));
        }
        let diff = u ^ s;
        let flipped = u ^ v;
        if !is_low_prefix(flipped, diff) {
            return Ok(LocalPathInfo::OFF);
        }
        let next = if v == s {
            PathVertex::new(u, v, true)
        } else {
            PathVertex::new(u, v ^ lowest_bit(diff & !flipped), false)
        };
        let prev = if v != u {
            Some(PathVertex::new(u, v ^ highest_bit(flipped), false))
        } else if inst.pred(u) != u {
            Some(PathVertex::new(u, u, true))
        } else {
            None
        };
        Ok(LocalPathInfo::on(prev, Some(next)))
    } else {
        let origin = inst.pred(v);
        if origin == v || inst.succ(origin) != v {
            return Ok(LocalPathInfo::OFF);
        }
        let diff = origin ^ v;
        let flipped = origin ^ u;
        if !is_low_prefix(flipped, diff) {
            return Ok(LocalPathInfo::OFF);
        }
        let next = if u == v {
            PathVertex::new(v, v, false)
        } else {
            PathVertex::new(u ^ lowest_bit(diff & !flipped), v, true)
        };
        let prev = if u == origin {
            PathVertex::new(origin, v, false)
        } else {
            PathVertex::new(u ^ highest_bit(flipped), v, true)
        };
        Ok(LocalPathInfo::on(Some(prev), Some(next)))
    }
}

/// All maximal paths (start to end) and all cycles of the embedding.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathSet {
    pub paths: Vec<Vec<PathVertex>>,
    pub cycles: Vec<Vec<PathVertex>>,
}

impl PathSet {
    /// Path endpoints other than the origin, as `(vertex, is_start)` pairs.
    pub fn nontrivial_endpoints(&self) -> Vec<(PathVertex, bool)> {
        let mut out = Vec::new();
        for path in &self.paths {
            let first = path[0];
            let last = *path.last().unwrap();
            if first != PathVertex::ORIGIN {
                out.push((first, true));
            }
            out.push((last, false));
        }
        out.sort();
        out
    }
}

/// Exhaustively enumerate the embedding; needs `2^(2n+1) <= limit`.
pub fn enumerate_all_paths(inst: &EolInstance, limit: u64) -> Result<PathSet> {
    let n = inst.n();
    let width = 2 * n + 1;
    if width >= 63 || (1u64 << width) > limit {
        return Err(Error::BudgetExceeded {
            needed: 1u128 << width.min(127),
            budget: limit as u128,
        });
    }
    let size = 1u64 << width;
    let infos: Vec<LocalPathInfo> = (0..size)
        .into_par_iter()
        .map(|w| local_info(inst, PathVertex::from_word(w, n)).expect("in range"))
        .collect();
    let info = |p: PathVertex| infos[p.to_word(n) as usize];

    let mut visited = vec![false; size as usize];
    let mut set = PathSet::default();
    for w in 0..size {
        let i = infos[w as usize];
        if i.on_path && i.is_start {
            let mut path = vec![PathVertex::from_word(w, n)];
            visited[w as usize] = true;
            let mut cur = i;
            while let Some(next) = cur.next {
                let slot = &mut visited[next.to_word(n) as usize];
                if *slot {
                    return Err(Error::Internal(format!(
                        "paths intersect at {}",
                        next.display(n)
                    )));
                }
                *slot = true;
                path.push(next);
                cur = info(next);
            }
            set.paths.push(path);
        }
    }
    for w in 0..size {
        if infos[w as usize].on_path && !visited[w as usize] {
            let start = PathVertex::from_word(w, n);
            let mut cycle = vec![start];
            visited[w as usize] = true;
            let mut cur = info(start).next.expect("cycle vertices have successors");
            while cur != start {
                let slot = &mut visited[cur.to_word(n) as usize];
                if *slot {
                    return Err(Error::Internal(format!(
                        "cycle re-enters at {}",
                        cur.display(n)
                    )));
                }
                *slot = true;
                cycle.push(cur);
                cur = info(cur).next.expect("cycle vertices have successors");
            }
            set.cycles.push(cycle);
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_line() -> EolInstance {
        EolInstance::gen_line_instance(2, &[0b00, 0b01, 0b11])
            .unwrap()
            .normalize()
            .unwrap()
    }

    /// Straightforward simulation of the walk from the origin, independent of `local_info`.
    fn reference_walk(inst: &EolInstance) -> Vec<PathVertex> {
        let n = inst.n();
        let mut walk = vec![PathVertex::ORIGIN];
        let mut u = 0u64;
        loop {
            let s = inst.succ(u);
            if s == u {
                return walk;
            }
            let mut v = u;
            for j in 0..n {
                if (v ^ s) >> j & 1 == 1 {
                    v ^= 1 << j;
                    walk.push(PathVertex::new(u, v, false));
                }
            }
            walk.push(PathVertex::new(u, v, true));
            let mut w = u;
            for j in 0..n {
                if (w ^ v) >> j & 1 == 1 {
                    w ^= 1 << j;
                    walk.push(PathVertex::new(w, v, true));
                }
            }
            walk.push(PathVertex::new(v, v, false));
            u = v;
        }
    }

    #[test]
    fn origin_is_the_trivial_start() {
        let inst = three_line();
        let info = local_info(&inst, PathVertex::ORIGIN).unwrap();
        assert!(info.on_path && info.is_start && !info.is_end);
        assert_eq!(info.prev, None);
        // S(00) = 01: first update sets the low bit of v
        assert_eq!(info.next, Some(PathVertex::new(0, 0b01, false)));
    }

    #[test]
    fn off_path_when_buffer_is_not_a_hybrid() {
        let inst = three_line();
        // u = 00, S(u) = 01, v = 10 is not between u and S(u)
        let info = local_info(&inst, PathVertex::new(0, 0b10, false)).unwrap();
        assert!(!info.on_path);
        assert!(local_info(&inst, PathVertex::new(4, 0, false)).is_err());
    }

    #[test]
    fn walk_matches_reference_simulation() {
        let inst = three_line();
        let reference = reference_walk(&inst);
        let mut walk = vec![PathVertex::ORIGIN];
        while let Some(next) = local_info(&inst, *walk.last().unwrap()).unwrap().next {
            walk.push(next);
        }
        assert_eq!(walk, reference);
        let last = *walk.last().unwrap();
        assert_eq!(last, PathVertex::new(0b11, 0b11, false));
        assert_eq!(last.display(2), "11|11|0");
        assert!(local_info(&inst, last).unwrap().is_end);
    }

    #[test]
    fn three_line_has_one_path() {
        let set = enumerate_all_paths(&three_line(), 1 << 20).unwrap();
        assert_eq!(set.paths.len(), 1);
        assert!(set.cycles.is_empty());
        assert_eq!(set.paths[0][0], PathVertex::ORIGIN);
        assert_eq!(set.paths[0], reference_walk(&three_line()));
    }

    #[test]
    fn two_lines_give_disjoint_paths() {
        let inst = EolInstance::from_lines(3, &[vec![0, 1, 3], vec![4, 5, 7, 6]], &[])
            .unwrap()
            .normalize()
            .unwrap();
        let set = enumerate_all_paths(&inst, 1 << 20).unwrap();
        assert_eq!(set.paths.len(), 2);
        let mut all: Vec<PathVertex> = set.paths.concat();
        let total = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), total);
        let ends: Vec<(u64, bool)> = set
            .nontrivial_endpoints()
            .iter()
            .map(|(p, s)| (p.u, *s))
            .collect();
        assert_eq!(ends, vec![(3, false), (4, true), (6, false)]);
    }

    #[test]
    fn single_edge_instance_gives_short_path() {
        let inst = EolInstance::gen_line_instance(3, &[0, 0b100])
            .unwrap()
            .normalize()
            .unwrap();
        let set = enumerate_all_paths(&inst, 1 << 20).unwrap();
        assert_eq!(set.paths.len(), 1);
        // v bit, phase flip, u bit, phase flip
        assert_eq!(set.paths[0].len(), 5);
    }

    #[test]
    fn cycles_are_listed_separately() {
        let inst = EolInstance::from_lines(2, &[vec![0, 1]], &[vec![2, 3]])
            .unwrap()
            .normalize()
            .unwrap();
        let set = enumerate_all_paths(&inst, 1 << 20).unwrap();
        assert_eq!(set.paths.len(), 1);
        assert_eq!(set.cycles.len(), 1);
    }

    #[test]
    fn vertex_text_round_trip() {
        let p = PathVertex::new(0b10, 0b01, true);
        assert_eq!(p.display(2), "10|01|1");
        assert_eq!(PathVertex::parse("10|01|1", 2).unwrap(), p);
        assert!(PathVertex::parse("10|01", 2).is_err());
        assert_eq!(PathVertex::from_word(p.to_word(2), 2), p);
    }

    #[test]
    fn enumeration_budget() {
        assert!(matches!(
            enumerate_all_paths(&three_line(), 16),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
