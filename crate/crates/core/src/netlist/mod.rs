//! Gate-level netlist model for benchmark circuits and their locked variants.
//!
//! A [`Netlist`] holds primary inputs/outputs, combinational gates, D
//! flip-flops and keyed latches. Nets are interned to dense [`NetId`]s;
//! every net must have exactly one driver and the combinational part must
//! be acyclic (cycles through FFs/latches are fine).

mod text;

pub use text::{parse_bench, parse_locked, write_bench, write_locked, ParseError};

use std::collections::HashMap;
use std::fmt;

/// Dense index into a netlist's net table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetId(pub u32);

impl NetId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Combinational gate kinds. MUX input order is (select, in0, in1) and the
/// output equals in0 when select = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    Mux,
    Const0,
    Const1,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::Mux => "MUX",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }

    pub fn from_name(s: &str) -> Option<GateKind> {
        Some(match s {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "NOT" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            "MUX" => GateKind::Mux,
            "CONST0" => GateKind::Const0,
            "CONST1" => GateKind::Const1,
            _ => return None,
        })
    }

    /// Expected arity as (min, max); `None` max means unbounded.
    pub fn arity(self) -> (usize, Option<usize>) {
        match self {
            GateKind::Not | GateKind::Buf => (1, Some(1)),
            GateKind::Mux => (3, Some(3)),
            GateKind::Const0 | GateKind::Const1 => (0, Some(0)),
            _ => (2, None),
        }
    }

    /// Evaluate on boolean inputs.
    pub fn eval(self, inputs: &[bool]) -> bool {
        match self {
            GateKind::And => inputs.iter().all(|&b| b),
            GateKind::Nand => !inputs.iter().all(|&b| b),
            GateKind::Or => inputs.iter().any(|&b| b),
            GateKind::Nor => !inputs.iter().any(|&b| b),
            GateKind::Xor => inputs.iter().fold(false, |a, &b| a ^ b),
            GateKind::Xnor => !inputs.iter().fold(false, |a, &b| a ^ b),
            GateKind::Not => !inputs[0],
            GateKind::Buf => inputs[0],
            GateKind::Mux => {
                if inputs[0] {
                    inputs[2]
                } else {
                    inputs[1]
                }
            }
            GateKind::Const0 => false,
            GateKind::Const1 => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub output: NetId,
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
}

/// Rising-edge D flip-flop, reset to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipFlop {
    pub output: NetId,
    pub data: NetId,
}

/// A latch gated by a 2-bit key slot. Its behavior under each key value is
/// defined by the simulator; the netlist only records connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyedLatch {
    pub output: NetId,
    pub data: NetId,
    pub key_index: u32,
}

/// The four roles a keyed latch can play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LatchType {
    Primary,
    Secondary,
    DelayDecoy,
    LogicDecoy,
}

impl LatchType {
    pub const ALL: [LatchType; 4] = [
        LatchType::Primary,
        LatchType::Secondary,
        LatchType::DelayDecoy,
        LatchType::LogicDecoy,
    ];

    pub fn token(self) -> &'static str {
        match self {
            LatchType::Primary => "PRIMARY",
            LatchType::Secondary => "SECONDARY",
            LatchType::DelayDecoy => "DELAY_DECOY",
            LatchType::LogicDecoy => "LOGIC_DECOY",
        }
    }

    pub fn from_token(s: &str) -> Option<LatchType> {
        Some(match s {
            "PRIMARY" => LatchType::Primary,
            "SECONDARY" => LatchType::Secondary,
            "DELAY_DECOY" => LatchType::DelayDecoy,
            "LOGIC_DECOY" => LatchType::LogicDecoy,
            _ => return None,
        })
    }
}

impl fmt::Display for LatchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Per-latch true types for a locked netlist, keyed by latch id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub types: std::collections::BTreeMap<u32, LatchType>,
}

impl GroundTruth {
    pub fn get(&self, latch_id: u32) -> Option<LatchType> {
        self.types.get(&latch_id).copied()
    }

    pub fn count(&self, ty: LatchType) -> usize {
        self.types.values().filter(|&&t| t == ty).count()
    }

    /// Ground truth must cover exactly the latch ids of its netlist.
    pub fn check_matches(&self, netlist: &Netlist) -> Result<(), NetlistError> {
        for id in self.types.keys() {
            if *id as usize >= netlist.latches.len() {
                return Err(NetlistError::GroundTruthMismatch {
                    latch_id: *id,
                    n_latches: netlist.latches.len(),
                });
            }
        }
        for id in 0..netlist.latches.len() as u32 {
            if !self.types.contains_key(&id) {
                return Err(NetlistError::GroundTruthIncomplete { latch_id: id });
            }
        }
        Ok(())
    }
}

/// What drives a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input,
    Gate(usize),
    Ff(usize),
    Latch(usize),
    None,
}

/// A place where a net is consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkRef {
    /// `pin` is the position in the gate's input list.
    GateInput { gate: usize, pin: usize },
    FfData(usize),
    LatchData(usize),
    /// Position in the netlist's output list.
    Output(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum NetlistError {
    #[error("net `{0}` has no driver")]
    Undriven(String),
    #[error("net `{0}` has more than one driver")]
    MultipleDrivers(String),
    #[error("combinational cycle through net `{0}`")]
    CombinationalCycle(String),
    #[error("gate `{output}`: {kind} expects {expected} inputs, got {got}")]
    Arity {
        output: String,
        kind: &'static str,
        expected: String,
        got: usize,
    },
    #[error("latch key indices are not distinct and contiguous from 0")]
    KeyIndexGap,
    #[error("ground truth names latch {latch_id} but netlist has {n_latches} latches")]
    GroundTruthMismatch { latch_id: u32, n_latches: usize },
    #[error("ground truth missing latch {latch_id}")]
    GroundTruthIncomplete { latch_id: u32 },
}

/// Gate-level circuit: PIs, POs, combinational gates, FFs, keyed latches.
///
/// Latch id is the position in `latches`; freshly locked netlists keep
/// `key_index == id`, and transformations that drop latches preserve
/// `key_index` as the stable identity of the original key slot.
#[derive(Debug, Clone)]
pub struct Netlist {
    pub name: String,
    nets: Vec<String>,
    net_index: HashMap<String, NetId>,
    pub inputs: Vec<NetId>,
    pub outputs: Vec<NetId>,
    pub gates: Vec<Gate>,
    pub flipflops: Vec<FlipFlop>,
    pub latches: Vec<KeyedLatch>,
}

impl Netlist {
    pub fn new(name: impl Into<String>) -> Self {
        Netlist {
            name: name.into(),
            nets: Vec::new(),
            net_index: HashMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            gates: Vec::new(),
            flipflops: Vec::new(),
            latches: Vec::new(),
        }
    }

    pub fn n_nets(&self) -> usize {
        self.nets.len()
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.nets[id.idx()]
    }

    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.net_index.get(name).copied()
    }

    /// Intern a net name, returning its id.
    pub fn intern(&mut self, name: &str) -> NetId {
        if let Some(&id) = self.net_index.get(name) {
            return id;
        }
        let id = NetId(self.nets.len() as u32);
        self.nets.push(name.to_string());
        self.net_index.insert(name.to_string(), id);
        id
    }

    /// Intern a fresh net with the reserved `__lbll_` prefix, picking the
    /// first unused suffix for `stem`.
    pub fn fresh_net(&mut self, stem: &str) -> NetId {
        let mut n = 0usize;
        loop {
            let name = format!("__lbll_{stem}{n}");
            if !self.net_index.contains_key(&name) {
                return self.intern(&name);
            }
            n += 1;
        }
    }

    /// Map net id -> driver. `Driver::None` marks an undriven net.
    pub fn drivers(&self) -> Vec<Driver> {
        let mut d = vec![Driver::None; self.nets.len()];
        for &pi in &self.inputs {
            d[pi.idx()] = Driver::Input;
        }
        for (i, g) in self.gates.iter().enumerate() {
            d[g.output.idx()] = Driver::Gate(i);
        }
        for (i, ff) in self.flipflops.iter().enumerate() {
            d[ff.output.idx()] = Driver::Ff(i);
        }
        for (i, l) in self.latches.iter().enumerate() {
            d[l.output.idx()] = Driver::Latch(i);
        }
        d
    }

    /// Map net id -> all places it is consumed.
    pub fn sinks(&self) -> Vec<Vec<SinkRef>> {
        let mut s: Vec<Vec<SinkRef>> = vec![Vec::new(); self.nets.len()];
        for (gi, g) in self.gates.iter().enumerate() {
            for (pin, &inp) in g.inputs.iter().enumerate() {
                s[inp.idx()].push(SinkRef::GateInput { gate: gi, pin });
            }
        }
        for (fi, ff) in self.flipflops.iter().enumerate() {
            s[ff.data.idx()].push(SinkRef::FfData(fi));
        }
        for (li, l) in self.latches.iter().enumerate() {
            s[l.data.idx()].push(SinkRef::LatchData(li));
        }
        for (oi, &o) in self.outputs.iter().enumerate() {
            s[o.idx()].push(SinkRef::Output(oi));
        }
        s
    }

    /// Point one sink at a different net.
    pub fn rewire_sink(&mut self, sink: SinkRef, new_net: NetId) {
        match sink {
            SinkRef::GateInput { gate, pin } => self.gates[gate].inputs[pin] = new_net,
            SinkRef::FfData(i) => self.flipflops[i].data = new_net,
            SinkRef::LatchData(i) => self.latches[i].data = new_net,
            SinkRef::Output(i) => self.outputs[i] = new_net,
        }
    }

    /// Topological order of gate indices over the combinational part.
    /// Fails on a combinational cycle.
    pub fn topo_gates(&self) -> Result<Vec<usize>, NetlistError> {
        // Kahn over gates; an edge g1 -> g2 exists when g1's output feeds g2.
        let drivers = self.drivers();
        let mut indeg = vec![0usize; self.gates.len()];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); self.gates.len()];
        for (gi, g) in self.gates.iter().enumerate() {
            for &inp in &g.inputs {
                if let Driver::Gate(src) = drivers[inp.idx()] {
                    succ[src].push(gi);
                    indeg[gi] += 1;
                }
            }
        }
        let mut queue: Vec<usize> = (0..self.gates.len()).filter(|&g| indeg[g] == 0).collect();
        let mut order = Vec::with_capacity(self.gates.len());
        while let Some(g) = queue.pop() {
            order.push(g);
            for &n in &succ[g] {
                indeg[n] -= 1;
                if indeg[n] == 0 {
                    queue.push(n);
                }
            }
        }
        if order.len() != self.gates.len() {
            let stuck = indeg
                .iter()
                .position(|&d| d > 0)
                .map(|g| self.net_name(self.gates[g].output).to_string())
                .unwrap_or_default();
            return Err(NetlistError::CombinationalCycle(stuck));
        }
        Ok(order)
    }

    /// Check the structural invariants: exactly one driver per net, arities,
    /// combinational acyclicity, and (when `strict_keys`) dense key indices.
    pub fn validate(&self, strict_keys: bool) -> Result<(), NetlistError> {
        let mut seen = vec![false; self.nets.len()];
        let mut mark = |id: NetId, nets: &[String]| -> Result<(), NetlistError> {
            if seen[id.idx()] {
                return Err(NetlistError::MultipleDrivers(nets[id.idx()].clone()));
            }
            seen[id.idx()] = true;
            Ok(())
        };
        for &pi in &self.inputs {
            mark(pi, &self.nets)?;
        }
        for g in &self.gates {
            mark(g.output, &self.nets)?;
        }
        for ff in &self.flipflops {
            mark(ff.output, &self.nets)?;
        }
        for l in &self.latches {
            mark(l.output, &self.nets)?;
        }
        if let Some(i) = seen.iter().position(|&s| !s) {
            return Err(NetlistError::Undriven(self.nets[i].clone()));
        }
        for g in &self.gates {
            let (min, max) = g.kind.arity();
            let got = g.inputs.len();
            let ok = got >= min && max.is_none_or(|m| got <= m);
            if !ok {
                let expected = match max {
                    Some(m) if m == min => format!("{min}"),
                    Some(m) => format!("{min}..{m}"),
                    None => format!(">= {min}"),
                };
                return Err(NetlistError::Arity {
                    output: self.net_name(g.output).to_string(),
                    kind: g.kind.name(),
                    expected,
                    got,
                });
            }
        }
        self.topo_gates()?;
        if strict_keys {
            let mut idx: Vec<u32> = self.latches.iter().map(|l| l.key_index).collect();
            idx.sort_unstable();
            if idx.iter().enumerate().any(|(i, &k)| k != i as u32) {
                return Err(NetlistError::KeyIndexGap);
            }
        }
        Ok(())
    }

    /// Drop nets that nothing drives or consumes, re-densifying ids.
    /// Used after transformations that orphan nets.
    pub fn compact_nets(&mut self) {
        let drivers = self.drivers();
        let sinks = self.sinks();
        let mut keep = vec![false; self.nets.len()];
        for i in 0..self.nets.len() {
            if drivers[i] != Driver::None || !sinks[i].is_empty() {
                keep[i] = true;
            }
        }
        if keep.iter().all(|&k| k) {
            return;
        }
        let mut remap = vec![NetId(u32::MAX); self.nets.len()];
        let mut new_nets = Vec::new();
        let mut new_index = HashMap::new();
        for (i, name) in self.nets.iter().enumerate() {
            if keep[i] {
                let id = NetId(new_nets.len() as u32);
                remap[i] = id;
                new_index.insert(name.clone(), id);
                new_nets.push(name.clone());
            }
        }
        let m = |id: NetId| remap[id.idx()];
        for pi in &mut self.inputs {
            *pi = m(*pi);
        }
        for po in &mut self.outputs {
            *po = m(*po);
        }
        for g in &mut self.gates {
            g.output = m(g.output);
            for inp in &mut g.inputs {
                *inp = m(*inp);
            }
        }
        for ff in &mut self.flipflops {
            ff.output = m(ff.output);
            ff.data = m(ff.data);
        }
        for l in &mut self.latches {
            l.output = m(l.output);
            l.data = m(l.data);
        }
        self.nets = new_nets;
        self.net_index = new_index;
    }

    /// Name-based canonical form: declaration lists sorted by net name.
    /// Two netlists are semantically equal when their canonical forms match.
    fn canonical(&self) -> CanonicalNetlist {
        let n = |id: NetId| self.net_name(id).to_string();
        let mut gates: Vec<(String, &'static str, Vec<String>)> = self
            .gates
            .iter()
            .map(|g| (n(g.output), g.kind.name(), g.inputs.iter().map(|&i| n(i)).collect()))
            .collect();
        gates.sort();
        let mut ffs: Vec<(String, String)> = self
            .flipflops
            .iter()
            .map(|f| (n(f.output), n(f.data)))
            .collect();
        ffs.sort();
        let mut latches: Vec<(String, String, u32)> = self
            .latches
            .iter()
            .map(|l| (n(l.output), n(l.data), l.key_index))
            .collect();
        latches.sort_by_key(|(_, _, k)| *k);
        CanonicalNetlist {
            name: self.name.clone(),
            inputs: self.inputs.iter().map(|&i| n(i)).collect(),
            outputs: self.outputs.iter().map(|&o| n(o)).collect(),
            gates,
            ffs,
            latches,
        }
    }
}

#[derive(PartialEq, Eq)]
struct CanonicalNetlist {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    gates: Vec<(String, &'static str, Vec<String>)>,
    ffs: Vec<(String, String)>,
    latches: Vec<(String, String, u32)>,
}

impl PartialEq for Netlist {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for Netlist {}
