//! EndOfTheLine instances: successor/predecessor circuits over `n`-bit words.

use std::fmt;

use rayon::prelude::*;

use crate::circuits::{table_circuit, BitCircuit, CircuitBuilder, Wire};
use crate::error::{Error, Result};

/// Default cap on exhaustive enumeration (2^20 words).
pub const DEFAULT_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EolInstance {
    n: usize,
    successor: BitCircuit,
    predecessor: BitCircuit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolutionKind {
    EndOfLine,
    StartOfLine,
}

impl fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolutionKind::EndOfLine => "end",
            SolutionKind::StartOfLine => "start",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EolSolution {
    pub x: u64,
    pub kind: SolutionKind,
}

/// MSB-first rendering of an `n`-bit word.
pub fn format_word(x: u64, n: usize) -> String {
    (0..n)
        .rev()
        .map(|j| if (x >> j) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_word(s: &str, n: usize) -> Result<u64> {
    if s.len() != n || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::Malformed(format!("expected {n}-bit binary word, got {s:?}")));
    }
    Ok(s.bytes().fold(0u64, |acc, b| (acc << 1) | (b - b'0') as u64))
}

impl EolInstance {
    /// Checks widths and the trivial-source condition `P(0) = 0 != S(0)`.
    pub fn new(successor: BitCircuit, predecessor: BitCircuit) -> Result<Self> {
        let n = successor.num_inputs();
        for (name, c) in [("S", &successor), ("P", &predecessor)] {
            if c.num_inputs() != n || c.num_outputs() != n {
                return Err(Error::InvalidInstance(format!(
                    "{name} must map {n} bits to {n} bits"
                )));
            }
        }
        if n == 0 || n > 32 {
            return Err(Error::InvalidInstance(format!("unsupported width {n}")));
        }
        let inst = EolInstance {
            n,
            successor,
            predecessor,
        };
        if inst.pred(0) != 0 {
            return Err(Error::InvalidInstance("P(0^n) must be 0^n".into()));
        }
        if inst.succ(0) == 0 {
            return Err(Error::InvalidInstance("S(0^n) must differ from 0^n".into()));
        }
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn successor(&self) -> &BitCircuit {
        &self.successor
    }

    pub fn predecessor(&self) -> &BitCircuit {
        &self.predecessor
    }

    pub fn succ(&self, x: u64) -> u64 {
        self.successor
            .evaluate_word(x)
            .expect("instance widths checked at construction")
    }

    pub fn pred(&self, x: u64) -> u64 {
        self.predecessor
            .evaluate_word(x)
            .expect("instance widths checked at construction")
    }

    fn check_word(&self, x: u64) -> Result<()> {
        if self.n < 64 && x >> self.n != 0 {
            return Err(Error::WidthMismatch {
                expected: self.n,
                got: 64 - x.leading_zeros() as usize,
            });
        }
        Ok(())
    }

    /// Solution predicate on the circuits as given. End-of-line takes
    /// precedence when both clauses hold.
    pub fn is_solution(&self, x: u64) -> Result<Option<EolSolution>> {
        self.check_word(x)?;
        if self.pred(self.succ(x)) != x {
            return Ok(Some(EolSolution {
                x,
                kind: SolutionKind::EndOfLine,
            }));
        }
        if x != 0 && self.succ(self.pred(x)) != x {
            return Ok(Some(EolSolution {
                x,
                kind: SolutionKind::StartOfLine,
            }));
        }
        Ok(None)
    }

    /// Wrap S and P so that ends are S-fixed and starts are P-fixed.
    ///
    /// `S'(x) = x` if `P(S(x)) != x`, else `S(x)`; `P'(x) = x` if `S(P(x)) != x`,
    /// else `P(x)`. Fails when `0^n` itself is a solution, since the wrapped
    /// successor would then fix `0^n`.
    pub fn normalize(&self) -> Result<EolInstance> {
        let n = self.n;
        let mut b = CircuitBuilder::new(n);
        let x: Vec<Wire> = (0..n).map(|j| b.input(j)).collect();

        let s = b.append(&self.successor, &x);
        let ps = b.append(&self.predecessor, &s);
        let s_ok = b.equal(&ps, &x);
        let s_out: Vec<Wire> = (0..n).map(|j| b.mux(s_ok, x[j], s[j])).collect();
        let successor = b.finish(&s_out);

        let mut b = CircuitBuilder::new(n);
        let x: Vec<Wire> = (0..n).map(|j| b.input(j)).collect();
        let p = b.append(&self.predecessor, &x);
        let sp = b.append(&self.successor, &p);
        let p_ok = b.equal(&sp, &x);
        let p_out: Vec<Wire> = (0..n).map(|j| b.mux(p_ok, x[j], p[j])).collect();
        let predecessor = b.finish(&p_out);

        EolInstance::new(successor, predecessor).map_err(|e| {
            Error::InvalidInstance(format!("normalization failed ({e}); 0^n is itself a solution"))
        })
    }

    /// True when every word satisfies the normalized endpoint convention.
    pub fn is_normalized(&self, limit: u64) -> Result<bool> {
        let size = self.space_size(limit)?;
        Ok((0..size).into_par_iter().all(|x| {
            let s = self.succ(x);
            let p = self.pred(x);
            (self.pred(s) == x || s == x) && (self.succ(p) == x || p == x)
        }))
    }

    fn space_size(&self, limit: u64) -> Result<u64> {
        let size = 1u64 << self.n;
        if size > limit {
            return Err(Error::BudgetExceeded {
                needed: size as u128,
                budget: limit as u128,
            });
        }
        Ok(size)
    }

    /// Every solution, sorted by `x`. Refuses when `2^n > limit`.
    pub fn solve_bruteforce(&self, limit: u64) -> Result<Vec<EolSolution>> {
        let size = self.space_size(limit)?;
        let mut out: Vec<EolSolution> = (0..size)
            .into_par_iter()
            .filter_map(|x| self.is_solution(x).expect("in range"))
            .collect();
        out.sort();
        Ok(out)
    }

    /// Raw solutions that lose their status under [`EolInstance::normalize`]:
    /// words with neither a consistent in-edge nor out-edge.
    pub fn isolated_solutions(&self, limit: u64) -> Result<Vec<u64>> {
        let size = self.space_size(limit)?;
        let mut out: Vec<u64> = (0..size)
            .into_par_iter()
            .filter(|&x| {
                let s = self.succ(x);
                let p = self.pred(x);
                let out_ok = s != x && self.pred(s) == x;
                let in_ok = p != x && self.succ(p) == x;
                let solution = self.pred(s) != x || (x != 0 && self.succ(p) != x);
                solution && !out_ok && !in_ok
            })
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Build an instance from explicit successor/predecessor tables.
    pub fn from_tables(n: usize, succ: &[u64], pred: &[u64]) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::InvalidInstance(format!("table width {n} unsupported")));
        }
        if succ.len() != 1 << n || pred.len() != 1 << n {
            return Err(Error::InvalidInstance("table size must be 2^n".into()));
        }
        EolInstance::new(table_circuit(n, succ), table_circuit(n, pred))
    }

    /// Instance whose graph is exactly the given line, self-loops elsewhere.
    pub fn gen_line_instance(n: usize, line: &[u64]) -> Result<Self> {
        Self::from_lines(n, &[line.to_vec()], &[])
    }

    /// Instance from vertex-disjoint lines and cycles. The first line must start at `0^n`.
    pub fn from_lines(n: usize, lines: &[Vec<u64>], cycles: &[Vec<u64>]) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::InvalidInstance(format!("table width {n} unsupported")));
        }
        let size = 1usize << n;
        match lines.first().and_then(|l| l.first()) {
            Some(0) => {}
            _ => return Err(Error::InvalidInstance("first line must start at 0^n".into())),
        }
        if lines[0].len() < 2 {
            return Err(Error::InvalidInstance(
                "the line from 0^n needs a successor (S(0^n) != 0^n)".into(),
            ));
        }
        let mut seen = vec![false; size];
        let mut succ: Vec<u64> = (0..size as u64).collect();
        let mut pred: Vec<u64> = (0..size as u64).collect();
        let mut mark = |v: u64| -> Result<()> {
            if v as usize >= size {
                return Err(Error::InvalidInstance(format!("vertex {v} exceeds {n} bits")));
            }
            if std::mem::replace(&mut seen[v as usize], true) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate vertex {}",
                    format_word(v, n)
                )));
            }
            Ok(())
        };
        for line in lines {
            for &v in line {
                mark(v)?;
            }
        }
        for cycle in cycles {
            if cycle.len() < 2 {
                return Err(Error::InvalidInstance("cycles need at least two vertices".into()));
            }
            for &v in cycle {
                mark(v)?;
            }
        }
        for line in lines {
            for w in line.windows(2) {
                succ[w[0] as usize] = w[1];
                pred[w[1] as usize] = w[0];
            }
        }
        for cycle in cycles {
            let len = cycle.len();
            for i in 0..len {
                let (a, b) = (cycle[i], cycle[(i + 1) % len]);
                succ[a as usize] = b;
                pred[b as usize] = a;
            }
        }
        Self::from_tables(n, &succ, &pred)
    }
}
