//! Instance generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wsne_core::{EolInstance, EolSolution, SolutionKind};

/// Vertex-disjoint lines (first one from 0, every line of length ≥ 2) and
/// cycles covering a random subset of `{0,1}^n`.
pub fn random_structure(n: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<u64>>, Vec<Vec<u64>>) {
    let mut rest: Vec<u64> = (1..(1u64 << n)).collect();
    rest.shuffle(rng);
    let take = |len: usize, rest: &mut Vec<u64>| -> Vec<u64> {
        let len = len.min(rest.len());
        rest.drain(..len).collect()
    };
    let first_len = rng.gen_range(1..=rest.len().min(6));
    let mut first = vec![0];
    first.extend(take(first_len, &mut rest));
    let mut lines = vec![first];
    let mut cycles = Vec::new();
    while rest.len() >= 2 {
        match rng.gen_range(0..4) {
            0 | 1 => {
                let len = rng.gen_range(2..=rest.len().min(5));
                lines.push(take(len, &mut rest));
            }
            2 => {
                let len = rng.gen_range(2..=rest.len().min(4));
                cycles.push(take(len, &mut rest));
            }
            _ => {
                // leave an isolated vertex
                rest.pop();
            }
        }
    }
    (lines, cycles)
}

/// Solutions read off the line structure: every line end, every start but 0.
pub fn line_oracle(lines: &[Vec<u64>]) -> Vec<EolSolution> {
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push(EolSolution {
                x: line[0],
                kind: SolutionKind::StartOfLine,
            });
        }
        out.push(EolSolution {
            x: *line.last().expect("non-empty line"),
            kind: SolutionKind::EndOfLine,
        });
    }
    out.sort();
    out
}

pub fn random_instance(n: usize, rng: &mut ChaCha8Rng) -> (EolInstance, Vec<EolSolution>) {
    let (lines, cycles) = random_structure(n, rng);
    let inst = EolInstance::from_lines(n, &lines, &cycles).expect("generated structure is valid");
    (inst, line_oracle(&lines))
}
