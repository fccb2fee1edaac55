//! Gate-list boolean circuits.
//!
//! A [`BitCircuit`] is a straight-line program over `num_inputs` input bits.
//! Gates may only reference inputs or strictly earlier gates, so a circuit is
//! acyclic by construction and evaluation is a single forward pass.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Or,
    Not,
    Xor,
    Const0,
    Const1,
    Copy,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Const0 | GateKind::Const1 => 0,
            GateKind::Not | GateKind::Copy => 1,
            GateKind::And | GateKind::Or | GateKind::Xor => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Not => "NOT",
            GateKind::Xor => "XOR",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
            GateKind::Copy => "COPY",
        }
    }
}

impl FromStr for GateKind {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Ok(match s {
            "AND" => GateKind::And,
            "OR" => GateKind::Or,
            "NOT" => GateKind::Not,
            "XOR" => GateKind::Xor,
            "CONST0" => GateKind::Const0,
            "CONST1" => GateKind::Const1,
            "COPY" => GateKind::Copy,
            _ => return Err(()),
        })
    }
}

/// A wire: either an input bit or the output of a gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ref {
    Input(usize),
    Gate(usize),
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Input(j) => write!(f, "i{j}"),
            Ref::Gate(j) => write!(f, "g{j}"),
        }
    }
}

impl FromStr for Ref {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        let (tag, idx) = s.split_at(s.len().min(1));
        // reject signs, whitespace and leading '+'
        if idx.is_empty() || !idx.bytes().all(|b| b.is_ascii_digit()) {
            return Err(());
        }
        let idx: usize = idx.parse().map_err(|_| ())?;
        match tag {
            "i" => Ok(Ref::Input(idx)),
            "g" => Ok(Ref::Gate(idx)),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub operands: Vec<Ref>,
}

/// Immutable gate-list circuit. Gate `j` is the `j`-th entry of `gates`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitCircuit {
    num_inputs: usize,
    gates: Vec<Gate>,
    outputs: Vec<Ref>,
}

impl BitCircuit {
    /// Validate and assemble a circuit.
    pub fn new(num_inputs: usize, gates: Vec<Gate>, outputs: Vec<Ref>) -> Result<Self> {
        for (id, gate) in gates.iter().enumerate() {
            if gate.operands.len() != gate.kind.arity() {
                return Err(Error::Malformed(format!(
                    "gate {id}: {} takes {} operands, got {}",
                    gate.kind.name(),
                    gate.kind.arity(),
                    gate.operands.len()
                )));
            }
            for r in &gate.operands {
                check_ref(*r, num_inputs, id)
                    .map_err(|m| Error::Malformed(format!("gate {id}: {m}")))?;
            }
        }
        for r in &outputs {
            check_ref(*r, num_inputs, gates.len())
                .map_err(|m| Error::Malformed(format!("output: {m}")))?;
        }
        Ok(BitCircuit {
            num_inputs,
            gates,
            outputs,
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[Ref] {
        &self.outputs
    }

    pub fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>> {
        if input.len() != self.num_inputs {
            return Err(Error::WidthMismatch {
                expected: self.num_inputs,
                got: input.len(),
            });
        }
        let mut values = Vec::with_capacity(self.gates.len());
        let read = |values: &Vec<bool>, r: Ref| match r {
            Ref::Input(j) => input[j],
            Ref::Gate(j) => values[j],
        };
        for gate in &self.gates {
            let ops = &gate.operands;
            let v = match gate.kind {
                GateKind::And => read(&values, ops[0]) & read(&values, ops[1]),
                GateKind::Or => read(&values, ops[0]) | read(&values, ops[1]),
                GateKind::Xor => read(&values, ops[0]) ^ read(&values, ops[1]),
                GateKind::Not => !read(&values, ops[0]),
                GateKind::Copy => read(&values, ops[0]),
                GateKind::Const0 => false,
                GateKind::Const1 => true,
            };
            values.push(v);
        }
        Ok(self.outputs.iter().map(|&r| read(&values, r)).collect())
    }

    /// Evaluate on a word whose bit `j` feeds input `j`; output bit `j` becomes bit `j`.
    pub fn evaluate_word(&self, input: u64) -> Result<u64> {
        if self.num_inputs > 64 || self.outputs.len() > 64 {
            return Err(Error::Malformed("word evaluation limited to 64 bits".into()));
        }
        let out = self.evaluate(&word_to_bits(input, self.num_inputs))?;
        Ok(bits_to_word(&out))
    }

    /// Bit-exact text form; see [`BitCircuit::parse`].
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str("circuit v1\n");
        s.push_str(&format!("inputs {}\n", self.num_inputs));
        for (id, gate) in self.gates.iter().enumerate() {
            s.push_str(&format!("{id} {}", gate.kind.name()));
            for r in &gate.operands {
                s.push_str(&format!(" {r}"));
            }
            s.push('\n');
        }
        s.push_str("outputs");
        for r in &self.outputs {
            s.push_str(&format!(" {r}"));
        }
        s.push('\n');
        s
    }

    /// Parse the line-oriented format. Line numbers in errors are 1-based.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .split('\n')
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.starts_with('#'));
        let (circuit, rest) = parse_lines(&mut lines)?;
        if let Some((no, l)) = rest.into_iter().find(|(_, l)| !l.is_empty()) {
            return Err(Error::syntax(no, format!("trailing content after outputs: {l:?}")));
        }
        Ok(circuit)
    }
}

fn check_ref(r: Ref, num_inputs: usize, gate_limit: usize) -> std::result::Result<(), String> {
    match r {
        Ref::Input(j) if j >= num_inputs => Err(format!("input i{j} out of range")),
        Ref::Gate(j) if j >= gate_limit => Err(format!("reference to undefined gate g{j}")),
        _ => Ok(()),
    }
}

fn split_fields(no: usize, line: &str) -> Result<Vec<&str>> {
    if line.ends_with(' ') || line.starts_with(' ') || line.contains("  ") || line.contains('\t')
    {
        return Err(Error::syntax(no, "fields must be separated by single spaces"));
    }
    Ok(line.split(' ').collect())
}

/// Parse one circuit block from a line iterator, stopping after the `outputs`
/// line. Returns the circuit and the remaining lines.
pub(crate) fn parse_lines<'a, I>(lines: &mut I) -> Result<(BitCircuit, Vec<(usize, &'a str)>)>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let (no, header) = lines
        .next()
        .ok_or_else(|| Error::syntax(1, "empty circuit text"))?;
    if header != "circuit v1" {
        return Err(Error::syntax(no, format!("expected `circuit v1`, got {header:?}")));
    }
    let (no, inputs_line) = lines
        .next()
        .ok_or_else(|| Error::syntax(no + 1, "missing `inputs` line"))?;
    let fields = split_fields(no, inputs_line)?;
    let num_inputs = match fields.as_slice() {
        ["inputs", n] => n
            .parse::<usize>()
            .map_err(|_| Error::syntax(no, format!("bad input count {n:?}")))?,
        _ => return Err(Error::syntax(no, "expected `inputs <n>`")),
    };

    let mut gates: Vec<Gate> = Vec::new();
    let mut last_no = no;
    for (no, line) in lines.by_ref() {
        last_no = no;
        let fields = split_fields(no, line)?;
        if fields[0] == "outputs" {
            let mut outputs = Vec::with_capacity(fields.len() - 1);
            for f in &fields[1..] {
                let r: Ref = f
                    .parse()
                    .map_err(|_| Error::syntax(no, format!("bad reference {f:?}")))?;
                check_ref(r, num_inputs, gates.len()).map_err(|m| Error::syntax(no, m))?;
                outputs.push(r);
            }
            let circuit = BitCircuit::new(num_inputs, gates, outputs)
                .map_err(|e| Error::syntax(no, e.to_string()))?;
            return Ok((circuit, lines.collect()));
        }
        if fields.len() < 2 {
            return Err(Error::syntax(no, format!("malformed gate line {line:?}")));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| Error::syntax(no, format!("bad gate id {:?}", fields[0])))?;
        if id < gates.len() {
            return Err(Error::syntax(no, format!("duplicate gate id {id}")));
        }
        if id != gates.len() {
            return Err(Error::syntax(
                no,
                format!("gate ids must be consecutive: expected {}, got {id}", gates.len()),
            ));
        }
        let kind: GateKind = fields[1]
            .parse()
            .map_err(|_| Error::syntax(no, format!("unknown gate kind {:?}", fields[1])))?;
        let operands = fields[2..]
            .iter()
            .map(|f| {
                let r: Ref = f
                    .parse()
                    .map_err(|_| Error::syntax(no, format!("bad reference {f:?}")))?;
                check_ref(r, num_inputs, id).map_err(|m| Error::syntax(no, m))?;
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        if operands.len() != kind.arity() {
            return Err(Error::syntax(
                no,
                format!("{} takes {} operands", kind.name(), kind.arity()),
            ));
        }
        gates.push(Gate { kind, operands });
    }
    Err(Error::syntax(last_no, "missing `outputs` line"))
}

/// Little-endian bit expansion: bit `j` of `word` becomes element `j`.
pub fn word_to_bits(word: u64, width: usize) -> Vec<bool> {
    (0..width).map(|j| (word >> j) & 1 == 1).collect()
}

pub fn bits_to_word(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (j, &b)| acc | ((b as u64) << j))
}

/// Incremental circuit construction with constant folding on the wire level.
///
/// Folding only avoids emitting gates whose value is already known; it never
/// rewrites gates that were emitted.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    num_inputs: usize,
    gates: Vec<Gate>,
    zero: Option<Ref>,
    one: Option<Ref>,
}

/// A builder wire, possibly a known constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wire {
    Const(bool),
    Ref(Ref),
}

impl CircuitBuilder {
    pub fn new(num_inputs: usize) -> Self {
        CircuitBuilder {
            num_inputs,
            gates: Vec::new(),
            zero: None,
            one: None,
        }
    }

    pub fn input(&self, j: usize) -> Wire {
        assert!(j < self.num_inputs, "input {j} out of range");
        Wire::Ref(Ref::Input(j))
    }

    fn push(&mut self, kind: GateKind, operands: Vec<Ref>) -> Ref {
        self.gates.push(Gate { kind, operands });
        Ref::Gate(self.gates.len() - 1)
    }

    fn materialize(&mut self, w: Wire) -> Ref {
        match w {
            Wire::Ref(r) => r,
            Wire::Const(false) => match self.zero {
                Some(r) => r,
                None => {
                    let r = self.push(GateKind::Const0, vec![]);
                    self.zero = Some(r);
                    r
                }
            },
            Wire::Const(true) => match self.one {
                Some(r) => r,
                None => {
                    let r = self.push(GateKind::Const1, vec![]);
                    self.one = Some(r);
                    r
                }
            },
        }
    }

    pub fn not(&mut self, a: Wire) -> Wire {
        match a {
            Wire::Const(v) => Wire::Const(!v),
            Wire::Ref(r) => Wire::Ref(self.push(GateKind::Not, vec![r])),
        }
    }

    pub fn and(&mut self, a: Wire, b: Wire) -> Wire {
        match (a, b) {
            (Wire::Const(false), _) | (_, Wire::Const(false)) => Wire::Const(false),
            (Wire::Const(true), x) | (x, Wire::Const(true)) => x,
            (Wire::Ref(x), Wire::Ref(y)) => Wire::Ref(self.push(GateKind::And, vec![x, y])),
        }
    }

    pub fn or(&mut self, a: Wire, b: Wire) -> Wire {
        match (a, b) {
            (Wire::Const(true), _) | (_, Wire::Const(true)) => Wire::Const(true),
            (Wire::Const(false), x) | (x, Wire::Const(false)) => x,
            (Wire::Ref(x), Wire::Ref(y)) => Wire::Ref(self.push(GateKind::Or, vec![x, y])),
        }
    }

    pub fn xor(&mut self, a: Wire, b: Wire) -> Wire {
        match (a, b) {
            (Wire::Const(x), Wire::Const(y)) => Wire::Const(x ^ y),
            (Wire::Const(false), x) | (x, Wire::Const(false)) => x,
            (Wire::Const(true), x) | (x, Wire::Const(true)) => self.not(x),
            (Wire::Ref(x), Wire::Ref(y)) => Wire::Ref(self.push(GateKind::Xor, vec![x, y])),
        }
    }

    /// `sel ? hi : lo`
    pub fn mux(&mut self, sel: Wire, lo: Wire, hi: Wire) -> Wire {
        if lo == hi {
            return lo;
        }
        match sel {
            Wire::Const(true) => hi,
            Wire::Const(false) => lo,
            _ => {
                let take_hi = self.and(sel, hi);
                let nsel = self.not(sel);
                let take_lo = self.and(nsel, lo);
                self.or(take_hi, take_lo)
            }
        }
    }

    /// Inline `circuit` with its inputs bound to `inputs`, returning its output wires.
    pub fn append(&mut self, circuit: &BitCircuit, inputs: &[Wire]) -> Vec<Wire> {
        assert_eq!(inputs.len(), circuit.num_inputs());
        let mut local: Vec<Wire> = Vec::with_capacity(circuit.gates().len());
        let read = |local: &Vec<Wire>, r: Ref| match r {
            Ref::Input(j) => inputs[j],
            Ref::Gate(j) => local[j],
        };
        for gate in circuit.gates() {
            let ops: Vec<Wire> = gate.operands.iter().map(|&r| read(&local, r)).collect();
            let w = match gate.kind {
                GateKind::And => self.and(ops[0], ops[1]),
                GateKind::Or => self.or(ops[0], ops[1]),
                GateKind::Xor => self.xor(ops[0], ops[1]),
                GateKind::Not => self.not(ops[0]),
                GateKind::Copy => ops[0],
                GateKind::Const0 => Wire::Const(false),
                GateKind::Const1 => Wire::Const(true),
            };
            local.push(w);
        }
        circuit.outputs().iter().map(|&r| read(&local, r)).collect()
    }

    /// Wire that is true iff the two words are equal.
    pub fn equal(&mut self, a: &[Wire], b: &[Wire]) -> Wire {
        assert_eq!(a.len(), b.len());
        let mut any_diff = Wire::Const(false);
        for (&x, &y) in a.iter().zip(b) {
            let d = self.xor(x, y);
            any_diff = self.or(any_diff, d);
        }
        self.not(any_diff)
    }

    /// Multiplexer tree over `inputs` selecting `table[x]` bit `bit`.
    pub fn lookup_bit(&mut self, inputs: &[Wire], table: &[u64], bit: usize) -> Wire {
        assert_eq!(table.len(), 1usize << inputs.len());
        fn rec(
            b: &mut CircuitBuilder,
            inputs: &[Wire],
            table: &[u64],
            bit: usize,
            level: usize,
        ) -> Wire {
            if level == 0 {
                return Wire::Const((table[0] >> bit) & 1 == 1);
            }
            // input `level - 1` is the most significant remaining selector
            let half = table.len() / 2;
            let lo = rec(b, inputs, &table[..half], bit, level - 1);
            let hi = rec(b, inputs, &table[half..], bit, level - 1);
            b.mux(inputs[level - 1], lo, hi)
        }
        rec(self, inputs, table, bit, inputs.len())
    }

    pub fn finish(mut self, outputs: &[Wire]) -> BitCircuit {
        let outs: Vec<Ref> = outputs.iter().map(|&w| self.materialize(w)).collect();
        let gates = self.gates;
        BitCircuit::new(self.num_inputs, gates, outs).expect("builder produces valid circuits")
    }
}

/// Table-lookup circuit computing `table[x]` for every `width`-bit `x`.
pub fn table_circuit(width: usize, table: &[u64]) -> BitCircuit {
    let mut b = CircuitBuilder::new(width);
    let inputs: Vec<Wire> = (0..width).map(|j| b.input(j)).collect();
    let outs: Vec<Wire> = (0..width)
        .map(|bit| b.lookup_bit(&inputs, table, bit))
        .collect();
    b.finish(&outs)
}

/// The `n`-bit identity circuit (COPY gates, so the gate list is not empty).
pub fn identity_circuit(n: usize) -> BitCircuit {
    let gates = (0..n)
        .map(|j| Gate {
            kind: GateKind::Copy,
            operands: vec![Ref::Input(j)],
        })
        .collect();
    BitCircuit::new(n, gates, (0..n).map(Ref::Gate).collect()).expect("valid identity")
}
