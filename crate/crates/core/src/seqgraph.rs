//! Sequential graph extraction and per-latch structural features.
//!
//! The sequential graph abstracts away combinational logic: nodes are PIs,
//! POs, FFs and latches; a directed edge u -> v means a gate-only path runs
//! from u's output to v's data input (or to the PO v). Each latch node gets
//! a 14-entry feature vector used by the classifiers.

use crate::netlist::{Driver, Netlist, SinkRef};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Pi,
    Po,
    Ff,
    Latch,
}

#[derive(Debug, Clone)]
pub struct SeqNode {
    pub kind: NodeKind,
    pub name: String,
    /// Latch id for `NodeKind::Latch`, else unused.
    pub latch_id: u32,
}

/// G = (V, E): sequential/boundary nodes and combinational-path edges.
#[derive(Debug, Clone)]
pub struct SequentialGraph {
    pub nodes: Vec<SeqNode>,
    pub edges: Vec<(usize, usize)>,
    /// latch id -> node id
    pub latch_nodes: Vec<usize>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl SequentialGraph {
    pub fn new(nodes: Vec<SeqNode>, mut edges: Vec<(usize, usize)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let mut succ = vec![Vec::new(); nodes.len()];
        let mut pred = vec![Vec::new(); nodes.len()];
        for &(u, v) in &edges {
            succ[u].push(v);
            pred[v].push(u);
        }
        let latch_nodes = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::Latch)
            .map(|(i, _)| i)
            .collect();
        SequentialGraph {
            nodes,
            edges,
            latch_nodes,
            succ,
            pred,
        }
    }

    pub fn fanout(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn fanin(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u, v)).is_ok()
    }

    /// Latch-to-latch edges as (latch id, latch id), self-loops included.
    pub fn latch_edges(&self) -> Vec<(u32, u32)> {
        self.edges
            .iter()
            .filter_map(|&(u, v)| {
                match (&self.nodes[u], &self.nodes[v]) {
                    (a, b) if a.kind == NodeKind::Latch && b.kind == NodeKind::Latch => {
                        Some((a.latch_id, b.latch_id))
                    }
                    _ => None,
                }
            })
            .collect()
    }
}

/// The 14 structural features of one latch. Fractions live in [0, 1],
/// `loop3`/`single_fanio` are 0/1, and the six count features are raw
/// in/out-degree counts split by neighbor kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub triangle: f64,
    pub trapezoid_a: f64,
    pub trapezoid_b: f64,
    pub max_fanout_delay: f64,
    pub max_fanin_delay: f64,
    pub loop3: f64,
    pub single_fanio: f64,
    pub fanin_latches: f64,
    pub fanin_ffs: f64,
    pub fanin_pis: f64,
    pub fanout_latches: f64,
    pub fanout_ffs: f64,
    pub fanout_pos: f64,
    pub false_self_loop: f64,
}

pub const N_FEATURES: usize = 14;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "triangle",
    "trapezoid_a",
    "trapezoid_b",
    "max_fanout_delay",
    "max_fanin_delay",
    "loop3",
    "single_fanio",
    "fanin_latches",
    "fanin_ffs",
    "fanin_pis",
    "fanout_latches",
    "fanout_ffs",
    "fanout_pos",
    "false_self_loop",
];

impl FeatureVector {
    pub fn to_array(self) -> [f64; N_FEATURES] {
        [
            self.triangle,
            self.trapezoid_a,
            self.trapezoid_b,
            self.max_fanout_delay,
            self.max_fanin_delay,
            self.loop3,
            self.single_fanio,
            self.fanin_latches,
            self.fanin_ffs,
            self.fanin_pis,
            self.fanout_latches,
            self.fanout_ffs,
            self.fanout_pos,
            self.false_self_loop,
        ]
    }
}

/// Extract the sequential graph: for every non-PO node, walk forward over
/// combinational gates and record which sequential/PO elements are reached.
/// Per-net sink sets are memoized, so shared cones are traversed once.
pub fn extract_graph(netlist: &Netlist) -> SequentialGraph {
    let mut nodes = Vec::new();
    // Node order: PIs, POs, FFs, latches — stable and independent of net ids.
    let mut po_node_of_pos = Vec::with_capacity(netlist.outputs.len());
    for &pi in &netlist.inputs {
        nodes.push(SeqNode {
            kind: NodeKind::Pi,
            name: netlist.net_name(pi).to_string(),
            latch_id: 0,
        });
    }
    for (pos, &po) in netlist.outputs.iter().enumerate() {
        po_node_of_pos.push(nodes.len());
        let _ = pos;
        nodes.push(SeqNode {
            kind: NodeKind::Po,
            name: netlist.net_name(po).to_string(),
            latch_id: 0,
        });
    }
    let ff_base = nodes.len();
    for ff in &netlist.flipflops {
        nodes.push(SeqNode {
            kind: NodeKind::Ff,
            name: netlist.net_name(ff.output).to_string(),
            latch_id: 0,
        });
    }
    let latch_base = nodes.len();
    for (li, l) in netlist.latches.iter().enumerate() {
        nodes.push(SeqNode {
            kind: NodeKind::Latch,
            name: netlist.net_name(l.output).to_string(),
            latch_id: li as u32,
        });
    }

    let sinks = netlist.sinks();
    let drivers = netlist.drivers();
    // reached[net] = sink node ids reachable from this net through gates only.
    let mut reached: Vec<Option<BTreeSet<usize>>> = vec![None; netlist.n_nets()];

    // Iterative post-order over the gate DAG via explicit stack.
    fn sinks_of(
        net: usize,
        netlist: &Netlist,
        sinks: &[Vec<SinkRef>],
        po_node_of_pos: &[usize],
        ff_base: usize,
        latch_base: usize,
        reached: &mut [Option<BTreeSet<usize>>],
    ) -> BTreeSet<usize> {
        if let Some(r) = &reached[net] {
            return r.clone();
        }
        let mut stack = vec![(net, false)];
        while let Some((n, expanded)) = stack.pop() {
            if reached[n].is_some() {
                continue;
            }
            if expanded {
                let mut set = BTreeSet::new();
                for s in &sinks[n] {
                    match *s {
                        SinkRef::Output(pos) => {
                            set.insert(po_node_of_pos[pos]);
                        }
                        SinkRef::FfData(fi) => {
                            set.insert(ff_base + fi);
                        }
                        SinkRef::LatchData(li) => {
                            set.insert(latch_base + li);
                        }
                        SinkRef::GateInput { gate, .. } => {
                            let out = netlist.gates[gate].output.idx();
                            if let Some(r) = &reached[out] {
                                set.extend(r.iter().copied());
                            }
                        }
                    }
                }
                reached[n] = Some(set);
            } else {
                stack.push((n, true));
                for s in &sinks[n] {
                    if let SinkRef::GateInput { gate, .. } = *s {
                        let out = netlist.gates[gate].output.idx();
                        if reached[out].is_none() {
                            stack.push((out, false));
                        }
                    }
                }
            }
        }
        reached[net].clone().unwrap()
    }

    let mut edges = Vec::new();
    let mut source_nets: Vec<(usize, usize)> = Vec::new(); // (node id, net)
    for (i, &pi) in netlist.inputs.iter().enumerate() {
        source_nets.push((i, pi.idx()));
    }
    for (fi, ff) in netlist.flipflops.iter().enumerate() {
        source_nets.push((ff_base + fi, ff.output.idx()));
    }
    for (li, l) in netlist.latches.iter().enumerate() {
        source_nets.push((latch_base + li, l.output.idx()));
    }
    for (node, net) in source_nets {
        let set = sinks_of(
            net,
            netlist,
            &sinks,
            &po_node_of_pos,
            ff_base,
            latch_base,
            &mut reached,
        );
        for t in set {
            edges.push((node, t));
        }
    }
    // A PO position whose net is itself a source (PI/FF/latch output) is
    // reached via the sink map above; nothing extra to do. Drivers are only
    // consulted to silence the unused warning in odd netlists.
    let _ = drivers;

    SequentialGraph::new(nodes, edges)
}

/// Fraction of fan-ins of `v2` that share at least one fan-out with `v2`.
/// Empty fan-in yields 0.
pub fn triangle(graph: &SequentialGraph, v2: usize) -> f64 {
    let fi = graph.fanin(v2);
    if fi.is_empty() {
        return 0.0;
    }
    let fo2: BTreeSet<usize> = graph.fanout(v2).iter().copied().collect();
    let hits = fi
        .iter()
        .filter(|&&v1| graph.fanout(v1).iter().any(|w| fo2.contains(w)))
        .count();
    hits as f64 / fi.len() as f64
}

/// Two trapezoid features for `v2`. The first scores fan-ins against the
/// two-hop fan-out set FO(FO(v2)); the second mirrors it over fan-ins:
/// fan-outs scored against FI(FI(v2)).
pub fn trapezoids(graph: &SequentialGraph, v2: usize) -> (f64, f64) {
    let fi = graph.fanin(v2);
    let fo = graph.fanout(v2);
    let a = if fi.is_empty() {
        0.0
    } else {
        let mut fofo: BTreeSet<usize> = BTreeSet::new();
        for &w in fo {
            fofo.extend(graph.fanout(w).iter().copied());
        }
        let hits = fi
            .iter()
            .filter(|&&v1| graph.fanout(v1).iter().any(|x| fofo.contains(x)))
            .count();
        hits as f64 / fi.len() as f64
    };
    let b = if fo.is_empty() {
        0.0
    } else {
        let mut fifi: BTreeSet<usize> = BTreeSet::new();
        for &w in fi {
            fifi.extend(graph.fanin(w).iter().copied());
        }
        let hits = fo
            .iter()
            .filter(|&&v1| graph.fanin(v1).iter().any(|x| fifi.contains(x)))
            .count();
        hits as f64 / fo.len() as f64
    };
    (a, b)
}

/// Raw (unnormalized) unit-delay depths for every latch: longest gate count
/// on a combinational path leaving the latch output, and entering the latch
/// data input. Returned as (fanout, fanin) pairs indexed by latch id.
fn raw_delays(netlist: &Netlist) -> Vec<(usize, usize)> {
    let sinks = netlist.sinks();
    let drivers = netlist.drivers();
    let n_nets = netlist.n_nets();

    // depth_to_sink[net]: max gates on a path from the net to any PO or
    // sequential data pin; None if no sink is reachable.
    let mut to_sink: Vec<Option<Option<usize>>> = vec![None; n_nets];
    fn depth_to_sink(
        net: usize,
        netlist: &Netlist,
        sinks: &[Vec<SinkRef>],
        memo: &mut [Option<Option<usize>>],
    ) -> Option<usize> {
        if let Some(v) = memo[net] {
            return v;
        }
        let mut stack = vec![(net, false)];
        while let Some((n, expanded)) = stack.pop() {
            if memo[n].is_some() {
                continue;
            }
            if expanded {
                let mut best: Option<usize> = None;
                for s in &sinks[n] {
                    let cand = match *s {
                        SinkRef::Output(_) | SinkRef::FfData(_) | SinkRef::LatchData(_) => Some(0),
                        SinkRef::GateInput { gate, .. } => {
                            let out = netlist.gates[gate].output.idx();
                            memo[out].unwrap().map(|d| d + 1)
                        }
                    };
                    if let Some(c) = cand {
                        best = Some(best.map_or(c, |b: usize| b.max(c)));
                    }
                }
                memo[n] = Some(best);
            } else {
                stack.push((n, true));
                for s in &sinks[n] {
                    if let SinkRef::GateInput { gate, .. } = *s {
                        let out = netlist.gates[gate].output.idx();
                        if memo[out].is_none() {
                            stack.push((out, false));
                        }
                    }
                }
            }
        }
        memo[net].unwrap()
    }

    // depth_from_source[net]: max gates on a path from any PI/FF/latch
    // output to the net; None when only constants feed it.
    let mut from_src: Vec<Option<Option<usize>>> = vec![None; n_nets];
    fn depth_from_source(
        net: usize,
        netlist: &Netlist,
        drivers: &[Driver],
        memo: &mut [Option<Option<usize>>],
    ) -> Option<usize> {
        if let Some(v) = memo[net] {
            return v;
        }
        let mut stack = vec![(net, false)];
        while let Some((n, expanded)) = stack.pop() {
            if memo[n].is_some() {
                continue;
            }
            match drivers[n] {
                Driver::Input | Driver::Ff(_) | Driver::Latch(_) => {
                    memo[n] = Some(Some(0));
                    continue;
                }
                Driver::None => {
                    memo[n] = Some(None);
                    continue;
                }
                Driver::Gate(g) => {
                    if expanded {
                        let mut best: Option<usize> = None;
                        for &inp in &netlist.gates[g].inputs {
                            if let Some(d) = memo[inp.idx()].unwrap() {
                                best = Some(best.map_or(d + 1, |b: usize| b.max(d + 1)));
                            }
                        }
                        memo[n] = Some(best);
                    } else {
                        stack.push((n, true));
                        for &inp in &netlist.gates[g].inputs {
                            if memo[inp.idx()].is_none() {
                                stack.push((inp.idx(), false));
                            }
                        }
                    }
                }
            }
        }
        memo[net].unwrap()
    }

    netlist
        .latches
        .iter()
        .map(|l| {
            let out = depth_to_sink(l.output.idx(), netlist, &sinks, &mut to_sink).unwrap_or(0);
            let inp =
                depth_from_source(l.data.idx(), netlist, &drivers, &mut from_src).unwrap_or(0);
            (out, inp)
        })
        .collect()
}

/// Normalized (max fan-out delay, max fan-in delay) for one latch.
/// Depths are unit gate delays normalized so the circuit-wide latch maximum
/// is 1; a circuit with no combinational logic around latches yields 0.
pub fn delay_features(netlist: &Netlist, latch_id: u32) -> (f64, f64) {
    let raw = raw_delays(netlist);
    let max_out = raw.iter().map(|r| r.0).max().unwrap_or(0);
    let max_in = raw.iter().map(|r| r.1).max().unwrap_or(0);
    let (o, i) = raw[latch_id as usize];
    (
        if max_out == 0 { 0.0 } else { o as f64 / max_out as f64 },
        if max_in == 0 { 0.0 } else { i as f64 / max_in as f64 },
    )
}

/// Everything except the triangle/trapezoid/delay features:
/// (loop3, single_fanio, f8..f13 counts, false_self_loop).
pub fn remaining_features(graph: &SequentialGraph, node: usize) -> (f64, f64, [f64; 6], f64) {
    let fi = graph.fanin(node);
    let fo = graph.fanout(node);

    // Directed cycle of exactly 3 distinct nodes through `node`.
    let mut loop3 = 0.0;
    'outer: for &w in fo {
        if w == node {
            continue;
        }
        for &x in graph.fanout(w) {
            if x == node || x == w {
                continue;
            }
            if graph.has_edge(x, node) {
                loop3 = 1.0;
                break 'outer;
            }
        }
    }

    let single_fanio = if fi.len() == 1 || fo.len() == 1 { 1.0 } else { 0.0 };

    let mut counts = [0f64; 6];
    for &u in fi {
        match graph.nodes[u].kind {
            NodeKind::Latch => counts[0] += 1.0,
            NodeKind::Ff => counts[1] += 1.0,
            NodeKind::Pi => counts[2] += 1.0,
            NodeKind::Po => {}
        }
    }
    for &v in fo {
        match graph.nodes[v].kind {
            NodeKind::Latch => counts[3] += 1.0,
            NodeKind::Ff => counts[4] += 1.0,
            NodeKind::Po => counts[5] += 1.0,
            NodeKind::Pi => {}
        }
    }

    // Highest 1/|FI(v2)| over fan-out latches v2 that carry a self-loop.
    let mut fsl = 0.0f64;
    for &v2 in fo {
        if graph.nodes[v2].kind == NodeKind::Latch && graph.has_edge(v2, v2) {
            let d = graph.fanin(v2).len();
            if d > 0 {
                fsl = fsl.max(1.0 / d as f64);
            }
        }
    }

    (loop3, single_fanio, counts, fsl)
}

/// Compute all 14 features for every latch of a netlist.
pub fn featurize(netlist: &Netlist) -> Vec<FeatureVector> {
    let graph = extract_graph(netlist);
    featurize_with_graph(netlist, &graph)
}

pub fn featurize_with_graph(netlist: &Netlist, graph: &SequentialGraph) -> Vec<FeatureVector> {
    let raw = raw_delays(netlist);
    let max_out = raw.iter().map(|r| r.0).max().unwrap_or(0);
    let max_in = raw.iter().map(|r| r.1).max().unwrap_or(0);
    graph
        .latch_nodes
        .iter()
        .enumerate()
        .map(|(li, &node)| {
            let tri = triangle(graph, node);
            let (ta, tb) = trapezoids(graph, node);
            let (fo_raw, fi_raw) = raw[li];
            let (loop3, single, counts, fsl) = remaining_features(graph, node);
            FeatureVector {
                triangle: tri,
                trapezoid_a: ta,
                trapezoid_b: tb,
                max_fanout_delay: if max_out == 0 { 0.0 } else { fo_raw as f64 / max_out as f64 },
                max_fanin_delay: if max_in == 0 { 0.0 } else { fi_raw as f64 / max_in as f64 },
                loop3,
                single_fanio: single,
                fanin_latches: counts[0],
                fanin_ffs: counts[1],
                fanin_pis: counts[2],
                fanout_latches: counts[3],
                fanout_ffs: counts[4],
                fanout_pos: counts[5],
                false_self_loop: fsl,
            }
        })
        .collect()
}

/// Independent reachability oracle: fresh per-source BFS over the gate DAG,
/// sharing nothing with [`extract_graph`]'s memoized DFS.
pub fn extract_graph_bfs_oracle(netlist: &Netlist) -> Vec<(usize, usize)> {
    let graph_nodes = extract_graph(netlist); // node numbering only
    let sinks = netlist.sinks();
    let ff_base = netlist.inputs.len() + netlist.outputs.len();
    let latch_base = ff_base + netlist.flipflops.len();

    let mut sources: Vec<(usize, usize)> = Vec::new();
    for (i, &pi) in netlist.inputs.iter().enumerate() {
        sources.push((i, pi.idx()));
    }
    for (fi, ff) in netlist.flipflops.iter().enumerate() {
        sources.push((ff_base + fi, ff.output.idx()));
    }
    for (li, l) in netlist.latches.iter().enumerate() {
        sources.push((latch_base + li, l.output.idx()));
    }

    let mut edges = Vec::new();
    for (node, start) in sources {
        let mut seen_nets = vec![false; netlist.n_nets()];
        let mut queue = std::collections::VecDeque::new();
        seen_nets[start] = true;
        queue.push_back(start);
        let mut targets = BTreeSet::new();
        while let Some(net) = queue.pop_front() {
            for s in &sinks[net] {
                match *s {
                    SinkRef::Output(pos) => {
                        targets.insert(netlist.inputs.len() + pos);
                    }
                    SinkRef::FfData(fi) => {
                        targets.insert(ff_base + fi);
                    }
                    SinkRef::LatchData(li) => {
                        targets.insert(latch_base + li);
                    }
                    SinkRef::GateInput { gate, .. } => {
                        let out = netlist.gates[gate].output.idx();
                        if !seen_nets[out] {
                            seen_nets[out] = true;
                            queue.push_back(out);
                        }
                    }
                }
            }
        }
        for t in targets {
            edges.push((node, t));
        }
    }
    edges.sort_unstable();
    let _ = graph_nodes;
    edges
}
