//! Latch-based logic locking: select a region of FFs, split each into a
//! primary/secondary latch pair, insert delay and logic decoys, and assign
//! key slots. Ground truth and a manifest travel with the locked netlist.
//!
//! Selection grows a connected region of the FF adjacency graph from the FF
//! with the largest combinational fan-in cone; retiming is not performed
//! (splitting alone preserves the structural properties the attack needs).
//! Control circuitry is modeled behaviorally by the simulator, not as gates.

use crate::netlist::{
    Driver, Gate, GateKind, GroundTruth, KeyedLatch, LatchType, Netlist, NetId, SinkRef,
};
use crate::seqgraph::{self, NodeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DecoyStyle {
    Mux,
    Or,
    Xor,
}

impl DecoyStyle {
    pub fn token(self) -> &'static str {
        match self {
            DecoyStyle::Mux => "MUX",
            DecoyStyle::Or => "OR",
            DecoyStyle::Xor => "XOR",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "MUX" => DecoyStyle::Mux,
            "OR" => DecoyStyle::Or,
            "XOR" => DecoyStyle::Xor,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LockConfig {
    pub seed: u64,
    /// Fraction of FFs to latch, in (0, 1].
    pub ff_fraction: f64,
    /// Delay decoys per selected FF.
    pub delay_decoy_rate: f64,
    /// Logic decoys per selected FF.
    pub logic_decoy_rate: f64,
    pub logic_decoy_styles: Vec<DecoyStyle>,
}

impl Default for LockConfig {
    fn default() -> Self {
        LockConfig {
            seed: 0,
            ff_fraction: 0.5,
            delay_decoy_rate: 0.25,
            logic_decoy_rate: 0.25,
            logic_decoy_styles: vec![DecoyStyle::Mux, DecoyStyle::Or, DecoyStyle::Xor],
        }
    }
}

/// Bijection between latch types and 2-bit key values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyEncoding {
    /// Indexed by [`LatchType::ALL`] order.
    pub bits: [u8; 4],
}

impl Default for KeyEncoding {
    fn default() -> Self {
        // 00 logic decoy, 01 delay decoy, 10 primary, 11 secondary.
        KeyEncoding {
            bits: [0b10, 0b11, 0b01, 0b00],
        }
    }
}

impl KeyEncoding {
    pub fn bits_for(&self, ty: LatchType) -> u8 {
        let i = LatchType::ALL.iter().position(|&t| t == ty).unwrap();
        self.bits[i]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LockError {
    #[error("netlist has no flip-flops to lock")]
    NoFlipFlops,
    #[error("invalid lock config: {0}")]
    BadConfig(String),
}

/// Insertion bookkeeping: seed, encoding, per-type counts, saturation.
#[derive(Debug, Clone, PartialEq)]
pub struct LockManifest {
    pub circuit: String,
    pub seed: u64,
    pub ff_fraction: f64,
    pub delay_decoy_rate: f64,
    pub logic_decoy_rate: f64,
    pub styles: Vec<DecoyStyle>,
    pub selected_ffs: usize,
    pub n_primary: usize,
    pub n_secondary: usize,
    pub n_delay_decoys: usize,
    pub n_logic_decoys: usize,
    pub n_keys: usize,
    pub encoding: KeyEncoding,
    pub delay_saturated: usize,
    pub mux_fallbacks: usize,
}

impl LockManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "circuit = {}", self.circuit);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "ff_fraction = {}", self.ff_fraction);
        let _ = writeln!(s, "delay_decoy_rate = {}", self.delay_decoy_rate);
        let _ = writeln!(s, "logic_decoy_rate = {}", self.logic_decoy_rate);
        let styles: Vec<&str> = self.styles.iter().map(|s| s.token()).collect();
        let _ = writeln!(s, "styles = {}", styles.join(","));
        let _ = writeln!(s, "selected_ffs = {}", self.selected_ffs);
        let _ = writeln!(s, "n_primary = {}", self.n_primary);
        let _ = writeln!(s, "n_secondary = {}", self.n_secondary);
        let _ = writeln!(s, "n_delay_decoys = {}", self.n_delay_decoys);
        let _ = writeln!(s, "n_logic_decoys = {}", self.n_logic_decoys);
        let _ = writeln!(s, "n_keys = {}", self.n_keys);
        for (i, ty) in LatchType::ALL.iter().enumerate() {
            let _ = writeln!(s, "key_encoding.{} = {:02b}", ty.token(), self.encoding.bits[i]);
        }
        let _ = writeln!(s, "delay_saturated = {}", self.delay_saturated);
        let _ = writeln!(s, "mux_fallbacks = {}", self.mux_fallbacks);
        s
    }
}

fn check_config(config: &LockConfig) -> Result<(), LockError> {
    if !(config.ff_fraction > 0.0 && config.ff_fraction <= 1.0) {
        return Err(LockError::BadConfig(format!(
            "ff_fraction {} outside (0, 1]",
            config.ff_fraction
        )));
    }
    if !config.delay_decoy_rate.is_finite()
        || !config.logic_decoy_rate.is_finite()
        || config.delay_decoy_rate < 0.0
        || config.logic_decoy_rate < 0.0
    {
        return Err(LockError::BadConfig("decoy rates must be finite and >= 0".into()));
    }
    if config.logic_decoy_rate > 0.0 && config.logic_decoy_styles.is_empty() {
        return Err(LockError::BadConfig(
            "logic_decoy_rate > 0 needs at least one style".into(),
        ));
    }
    Ok(())
}

/// Size of the combinational fan-in cone of each FF (gate count up to the
/// nearest sequential/PI boundary).
fn fanin_cone_sizes(netlist: &Netlist) -> Vec<usize> {
    let drivers = netlist.drivers();
    netlist
        .flipflops
        .iter()
        .map(|ff| {
            let mut seen_gates = BTreeSet::new();
            let mut stack = vec![ff.data];
            let mut seen_nets = BTreeSet::new();
            while let Some(net) = stack.pop() {
                if !seen_nets.insert(net) {
                    continue;
                }
                if let Driver::Gate(g) = drivers[net.idx()] {
                    if seen_gates.insert(g) {
                        for &inp in &netlist.gates[g].inputs {
                            stack.push(inp);
                        }
                    }
                }
            }
            seen_gates.len()
        })
        .collect()
}

/// Choose ceil(ff_fraction * |FFs|) FFs forming a connected region of the
/// FF adjacency graph (when one exists), grown from the FF with the largest
/// fan-in cone. Deterministic; ties break toward the lower FF index.
pub fn select_ffs(netlist: &Netlist, config: &LockConfig) -> Result<Vec<usize>, LockError> {
    check_config(config)?;
    let n_ffs = netlist.flipflops.len();
    if n_ffs == 0 {
        return Err(LockError::NoFlipFlops);
    }
    let target = ((config.ff_fraction * n_ffs as f64).ceil() as usize).clamp(1, n_ffs);

    let cones = fanin_cone_sizes(netlist);
    // Undirected FF adjacency from the sequential graph.
    let graph = seqgraph::extract_graph(netlist);
    let ff_node_base = netlist.inputs.len() + netlist.outputs.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_ffs];
    for &(u, v) in &graph.edges {
        if graph.nodes[u].kind == NodeKind::Ff && graph.nodes[v].kind == NodeKind::Ff && u != v {
            adj[u - ff_node_base].insert(v - ff_node_base);
            adj[v - ff_node_base].insert(u - ff_node_base);
        }
    }

    let best_unselected = |selected: &BTreeSet<usize>, from: &BTreeSet<usize>| -> Option<usize> {
        from.iter()
            .filter(|f| !selected.contains(f))
            .max_by_key(|&&f| (cones[f], std::cmp::Reverse(f)))
            .copied()
    };

    let all: BTreeSet<usize> = (0..n_ffs).collect();
    let mut selected = BTreeSet::new();
    let mut frontier: BTreeSet<usize> = BTreeSet::new();
    while selected.len() < target {
        let pick = best_unselected(&selected, &frontier)
            .or_else(|| best_unselected(&selected, &all))
            .expect("target <= n_ffs");
        selected.insert(pick);
        frontier.remove(&pick);
        for &nb in &adj[pick] {
            if !selected.contains(&nb) {
                frontier.insert(nb);
            }
        }
    }
    Ok(selected.into_iter().collect())
}

/// Split each selected FF `q = DFF(d)` into a primary latch `p = LATCH(d)`
/// driving a secondary latch `q = LATCH(p)`. Under correct keys the pair
/// behaves exactly like the FF. Both latches enter the ground truth.
pub fn split_to_latches(netlist: &mut Netlist, gt: &mut GroundTruth, selected: &[usize]) {
    let sel: BTreeSet<usize> = selected.iter().copied().collect();
    let mut kept = Vec::new();
    for (fi, ff) in netlist.flipflops.clone().into_iter().enumerate() {
        if !sel.contains(&fi) {
            kept.push(ff);
            continue;
        }
        let p_net = netlist.fresh_net("p");
        let p_id = netlist.latches.len() as u32;
        netlist.latches.push(KeyedLatch {
            output: p_net,
            data: ff.data,
            key_index: p_id,
        });
        gt.types.insert(p_id, LatchType::Primary);
        let s_id = netlist.latches.len() as u32;
        netlist.latches.push(KeyedLatch {
            output: ff.output,
            data: p_net,
            key_index: s_id,
        });
        gt.types.insert(s_id, LatchType::Secondary);
    }
    netlist.flipflops = kept;
}

/// Nets combinationally reachable forward from any latch output.
fn latch_forward_nets(netlist: &Netlist) -> BTreeSet<NetId> {
    let sinks = netlist.sinks();
    let mut seen = BTreeSet::new();
    let mut stack: Vec<NetId> = netlist.latches.iter().map(|l| l.output).collect();
    while let Some(net) = stack.pop() {
        if !seen.insert(net) {
            continue;
        }
        for s in &sinks[net.idx()] {
            if let SinkRef::GateInput { gate, .. } = *s {
                stack.push(netlist.gates[gate].output);
            }
        }
    }
    seen
}

/// Nets combinationally reachable backward from any latch data input.
fn latch_backward_nets(netlist: &Netlist) -> BTreeSet<NetId> {
    let drivers = netlist.drivers();
    let mut seen = BTreeSet::new();
    let mut stack: Vec<NetId> = netlist.latches.iter().map(|l| l.data).collect();
    while let Some(net) = stack.pop() {
        if !seen.insert(net) {
            continue;
        }
        if let Driver::Gate(g) = drivers[net.idx()] {
            for &inp in &netlist.gates[g].inputs {
                stack.push(inp);
            }
        }
    }
    seen
}

/// Nets whose combinational fan-out reaches a latch/FF/PO sink.
fn reaches_terminal(netlist: &Netlist) -> Vec<bool> {
    let sinks = netlist.sinks();
    let drivers = netlist.drivers();
    let mut reach = vec![false; netlist.n_nets()];
    // Seed: nets consumed by terminals; propagate backward through gates.
    let mut stack = Vec::new();
    for (ni, slist) in sinks.iter().enumerate() {
        if slist.iter().any(|s| {
            matches!(
                s,
                SinkRef::Output(_) | SinkRef::FfData(_) | SinkRef::LatchData(_)
            )
        }) {
            reach[ni] = true;
            stack.push(ni);
        }
    }
    while let Some(net) = stack.pop() {
        if let Driver::Gate(g) = drivers[net] {
            for &inp in &netlist.gates[g].inputs {
                if !reach[inp.idx()] {
                    reach[inp.idx()] = true;
                    stack.push(inp.idx());
                }
            }
        }
    }
    reach
}

/// Insert `rate * (#latches / 2)` delay decoys. Each splits one randomly
/// chosen latch-to-(latch|FF|PO) combinational segment: the decoy taps the
/// segment's source side and re-drives the chosen sink. Returns how many
/// insertions saturated for lack of an eligible segment.
pub fn insert_delay_decoys(
    netlist: &mut Netlist,
    gt: &mut GroundTruth,
    config: &LockConfig,
    rng: &mut ChaCha20Rng,
) -> usize {
    let n_pairs = gt.count(LatchType::Primary);
    let want = (config.delay_decoy_rate * n_pairs as f64).round() as usize;
    let mut saturated = 0;
    for _ in 0..want {
        let forward = latch_forward_nets(netlist);
        let reach = reaches_terminal(netlist);
        let sinks = netlist.sinks();
        let mut candidates: Vec<(NetId, SinkRef)> = Vec::new();
        for &net in &forward {
            if !reach[net.idx()] {
                continue;
            }
            for &s in &sinks[net.idx()] {
                let ok = match s {
                    SinkRef::Output(_) | SinkRef::FfData(_) | SinkRef::LatchData(_) => true,
                    SinkRef::GateInput { gate, .. } => {
                        reach[netlist.gates[gate].output.idx()]
                    }
                };
                if ok {
                    candidates.push((net, s));
                }
            }
        }
        if candidates.is_empty() {
            saturated += 1;
            continue;
        }
        let (net, sink) = candidates[rng.gen_range(0..candidates.len())];
        let dd_net = netlist.fresh_net("dd");
        let dd_id = netlist.latches.len() as u32;
        netlist.latches.push(KeyedLatch {
            output: dd_net,
            data: net,
            key_index: dd_id,
        });
        gt.types.insert(dd_id, LatchType::DelayDecoy);
        netlist.rewire_sink(sink, dd_net);
    }
    saturated
}

/// Insert `rate * (#primary)` logic decoys. Each decoy latch taps a random
/// functional net; a companion gate (MUX/OR/XOR) splices the decoy output
/// into a randomly chosen net of the locked region so that a correctly
/// keyed (constant 0) decoy leaves the function unchanged. Returns the
/// number of MUX-style insertions that fell back to OR/XOR.
pub fn insert_logic_decoys(
    netlist: &mut Netlist,
    gt: &mut GroundTruth,
    config: &LockConfig,
    rng: &mut ChaCha20Rng,
) -> usize {
    let n_pairs = gt.count(LatchType::Primary);
    let want = (config.logic_decoy_rate * n_pairs as f64).round() as usize;
    let mut fallbacks = 0;
    for _ in 0..want {
        // The locked region: segment nets around the latches.
        let mut region: Vec<NetId> = latch_forward_nets(netlist)
            .union(&latch_backward_nets(netlist))
            .copied()
            .collect();
        region.sort_unstable();
        if region.is_empty() {
            break;
        }
        let sinks = netlist.sinks();

        // Cut nets need at least one sink to re-drive.
        let cuttable: Vec<NetId> = region
            .iter()
            .copied()
            .filter(|n| !sinks[n.idx()].is_empty())
            .collect();
        if cuttable.is_empty() {
            break;
        }
        let cut = cuttable[rng.gen_range(0..cuttable.len())];
        let cut_sinks: Vec<SinkRef> = sinks[cut.idx()].clone();

        let mut style = config.logic_decoy_styles[rng.gen_range(0..config.logic_decoy_styles.len())];
        // MUX style needs a second region net that will not close a
        // combinational cycle once spliced after the cut.
        let mut mux_other: Option<NetId> = None;
        if style == DecoyStyle::Mux {
            let forbidden = comb_fanout_nets(netlist, cut);
            let others: Vec<NetId> = region
                .iter()
                .copied()
                .filter(|&n| n != cut && !forbidden.contains(&n))
                .collect();
            if others.is_empty() {
                let non_mux: Vec<DecoyStyle> = config
                    .logic_decoy_styles
                    .iter()
                    .copied()
                    .filter(|&s| s != DecoyStyle::Mux)
                    .collect();
                if non_mux.is_empty() {
                    fallbacks += 1;
                    continue; // MUX-only config on a too-small region
                }
                style = non_mux[rng.gen_range(0..non_mux.len())];
                fallbacks += 1;
            } else {
                mux_other = Some(others[rng.gen_range(0..others.len())]);
            }
        }

        // Decoy data taps a random functional net so it toggles under wrong
        // keys.
        let tap = region[rng.gen_range(0..region.len())];
        let ld_net = netlist.fresh_net("ld");
        let ld_id = netlist.latches.len() as u32;
        netlist.latches.push(KeyedLatch {
            output: ld_net,
            data: tap,
            key_index: ld_id,
        });
        gt.types.insert(ld_id, LatchType::LogicDecoy);

        let companion_out = netlist.fresh_net("lg");
        let companion = match style {
            DecoyStyle::Mux => Gate {
                output: companion_out,
                kind: GateKind::Mux,
                inputs: vec![ld_net, cut, mux_other.unwrap()],
            },
            DecoyStyle::Or => Gate {
                output: companion_out,
                kind: GateKind::Or,
                inputs: vec![cut, ld_net],
            },
            DecoyStyle::Xor => Gate {
                output: companion_out,
                kind: GateKind::Xor,
                inputs: vec![cut, ld_net],
            },
        };
        netlist.gates.push(companion);
        // Far end of the cut net: every pre-existing consumer.
        for s in cut_sinks {
            netlist.rewire_sink(s, companion_out);
        }
    }
    fallbacks
}

/// Combinational fan-out net set of `net` (inclusive).
fn comb_fanout_nets(netlist: &Netlist, net: NetId) -> BTreeSet<NetId> {
    let sinks = netlist.sinks();
    let mut seen = BTreeSet::new();
    let mut stack = vec![net];
    while let Some(n) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        for s in &sinks[n.idx()] {
            if let SinkRef::GateInput { gate, .. } = *s {
                stack.push(netlist.gates[gate].output);
            }
        }
    }
    seen
}

/// Run the full locking flow. Deterministic for a given (netlist, config).
pub fn lock(
    netlist: &Netlist,
    config: &LockConfig,
) -> Result<(Netlist, GroundTruth, LockManifest), LockError> {
    check_config(config)?;
    let selected = select_ffs(netlist, config)?;
    let mut locked = netlist.clone();
    let mut gt = GroundTruth::default();
    split_to_latches(&mut locked, &mut gt, &selected);

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let delay_saturated = insert_delay_decoys(&mut locked, &mut gt, config, &mut rng);
    let mux_fallbacks = insert_logic_decoys(&mut locked, &mut gt, config, &mut rng);

    // Key slots: latch ids are already dense insertion order.
    for (i, l) in locked.latches.iter_mut().enumerate() {
        l.key_index = i as u32;
    }
    locked
        .validate(true)
        .expect("locking must preserve netlist invariants");
    gt.check_matches(&locked).expect("ground truth total");

    let manifest = LockManifest {
        circuit: netlist.name.clone(),
        seed: config.seed,
        ff_fraction: config.ff_fraction,
        delay_decoy_rate: config.delay_decoy_rate,
        logic_decoy_rate: config.logic_decoy_rate,
        styles: config.logic_decoy_styles.clone(),
        selected_ffs: selected.len(),
        n_primary: gt.count(LatchType::Primary),
        n_secondary: gt.count(LatchType::Secondary),
        n_delay_decoys: gt.count(LatchType::DelayDecoy),
        n_logic_decoys: gt.count(LatchType::LogicDecoy),
        n_keys: 2 * locked.latches.len(),
        encoding: KeyEncoding::default(),
        delay_saturated,
        mux_fallbacks,
    };
    Ok((locked, gt, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{functional_corruptibility, FcConfig, KeyAssignment};
    use crate::netlist::parse_bench;

    fn s27() -> Netlist {
        parse_bench(crate::gen::S27_BENCH).unwrap()
    }

    #[test]
    fn select_all_ffs_at_fraction_one() {
        let n = s27();
        let cfg = LockConfig {
            ff_fraction: 1.0,
            ..Default::default()
        };
        assert_eq!(select_ffs(&n, &cfg).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn single_ff_always_selected() {
        let n = parse_bench("INPUT(a)\nOUTPUT(q)\nq = DFF(a)").unwrap();
        let cfg = LockConfig {
            ff_fraction: 0.1,
            ..Default::default()
        };
        assert_eq!(select_ffs(&n, &cfg).unwrap(), vec![0]);
    }

    #[test]
    fn selection_region_is_connected() {
        // Half the FFs of a mid-size circuit form a BFS-connected region of
        // the FF adjacency graph.
        let n = crate::gen::generate(&crate::gen::GenConfig {
            name: "sel".into(),
            n_pis: 4,
            n_pos: 3,
            n_ffs: 14,
            n_gates: 120,
            seed: 7,
        });
        let cfg = LockConfig {
            ff_fraction: 0.5,
            ..Default::default()
        };
        let sel = select_ffs(&n, &cfg).unwrap();
        assert_eq!(sel.len(), 7);

        // Independent BFS connectivity check over the FF adjacency graph
        // restricted to the selection.
        let g = seqgraph::extract_graph(&n);
        let base = n.inputs.len() + n.outputs.len();
        let inset: BTreeSet<usize> = sel.iter().copied().collect();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n.flipflops.len()];
        for &(u, v) in &g.edges {
            if g.nodes[u].kind == NodeKind::Ff && g.nodes[v].kind == NodeKind::Ff && u != v {
                adj[u - base].insert(v - base);
                adj[v - base].insert(u - base);
            }
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![sel[0]];
        while let Some(f) = stack.pop() {
            if !seen.insert(f) {
                continue;
            }
            for &nb in &adj[f] {
                if inset.contains(&nb) && !seen.contains(&nb) {
                    stack.push(nb);
                }
            }
        }
        assert_eq!(seen, inset, "selected FFs must form one connected region");
    }

    #[test]
    fn split_creates_pairs() {
        let mut n = s27();
        let mut gt = GroundTruth::default();
        split_to_latches(&mut n, &mut gt, &[0]);
        assert_eq!(n.flipflops.len(), 2);
        assert_eq!(n.latches.len(), 2);
        assert_eq!(gt.get(0), Some(LatchType::Primary));
        assert_eq!(gt.get(1), Some(LatchType::Secondary));
        // P drives S directly.
        assert_eq!(n.latches[1].data, n.latches[0].output);
        n.validate(true).unwrap();
    }

    #[test]
    fn split_nothing_is_identity() {
        let mut n = s27();
        let before = n.clone();
        let mut gt = GroundTruth::default();
        split_to_latches(&mut n, &mut gt, &[]);
        assert_eq!(n, before);
        assert!(gt.types.is_empty());
    }

    #[test]
    fn series_ffs_split_into_alternating_chain() {
        // Two FFs in series become a P-S-P-S chain in the sequential graph.
        let text = "INPUT(a)\nOUTPUT(z)\nq1 = DFF(a)\nt = NOT(q1)\nq2 = DFF(t)\nz = BUF(q2)";
        let mut n = parse_bench(text).unwrap();
        let mut gt = GroundTruth::default();
        split_to_latches(&mut n, &mut gt, &[0, 1]);
        let g = seqgraph::extract_graph(&n);
        // Walk from the first primary: P0 -> S0 -> P1 -> S1.
        let types: Vec<LatchType> = (0..4).map(|i| gt.get(i).unwrap()).collect();
        assert_eq!(
            types,
            vec![
                LatchType::Primary,
                LatchType::Secondary,
                LatchType::Primary,
                LatchType::Secondary
            ]
        );
        let node_of = |latch: u32| {
            g.latch_nodes
                .iter()
                .copied()
                .find(|&n| g.nodes[n].latch_id == latch)
                .unwrap()
        };
        assert!(g.has_edge(node_of(0), node_of(1)), "P0 -> S0");
        assert!(g.has_edge(node_of(1), node_of(2)), "S0 -> P1");
        assert!(g.has_edge(node_of(2), node_of(3)), "P1 -> S1");
    }

    #[test]
    fn rate_zero_inserts_nothing() {
        let mut n = s27();
        let mut gt = GroundTruth::default();
        split_to_latches(&mut n, &mut gt, &[0, 1, 2]);
        let before = n.clone();
        let cfg = LockConfig {
            delay_decoy_rate: 0.0,
            logic_decoy_rate: 0.0,
            ..Default::default()
        };
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert_eq!(insert_delay_decoys(&mut n, &mut gt, &cfg, &mut rng), 0);
        assert_eq!(insert_logic_decoys(&mut n, &mut gt, &cfg, &mut rng), 0);
        assert_eq!(n, before);
    }

    #[test]
    fn lock_is_deterministic() {
        let n = s27();
        let cfg = LockConfig::default();
        let (a, gta, ma) = lock(&n, &cfg).unwrap();
        let (b, gtb, mb) = lock(&n, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(gta, gtb);
        assert_eq!(ma, mb);
    }

    #[test]
    fn primary_secondary_counts_match() {
        for seed in 0..5 {
            let cfg = LockConfig {
                seed,
                ..Default::default()
            };
            let (_, gt, m) = lock(&s27(), &cfg).unwrap();
            assert_eq!(gt.count(LatchType::Primary), gt.count(LatchType::Secondary));
            assert_eq!(m.n_primary, m.n_secondary);
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_ground_truths() {
        let n = crate::gen::generate(&crate::gen::GenConfig {
            name: "v".into(),
            n_pis: 4,
            n_pos: 3,
            n_ffs: 8,
            n_gates: 60,
            seed: 3,
        });
        let mut truths = Vec::new();
        for seed in 0..11 {
            let cfg = LockConfig {
                seed,
                ..Default::default()
            };
            let (locked, gt, _) = lock(&n, &cfg).unwrap();
            truths.push((crate::netlist::write_bench(&locked), format!("{gt:?}")));
        }
        let unique: BTreeSet<_> = truths.iter().collect();
        assert_eq!(unique.len(), 11, "11 seeds must give 11 distinct variants");
    }

    #[test]
    fn correct_key_preserves_function() {
        // The locking soundness contract, checked by the simulation oracle.
        let orig = s27();
        for seed in 0..3 {
            let cfg = LockConfig {
                seed,
                ff_fraction: 1.0,
                delay_decoy_rate: 0.5,
                logic_decoy_rate: 0.5,
                ..Default::default()
            };
            let (locked, gt, _) = lock(&orig, &cfg).unwrap();
            let key = KeyAssignment::from_ground_truth(&gt);
            let fc = functional_corruptibility(
                &locked,
                &key,
                &orig,
                &FcConfig {
                    cycles: 100,
                    runs: 3,
                    seed: 11,
                },
            );
            assert_eq!(fc, 0.0, "seed {seed}");
        }
    }

    #[test]
    fn delay_decoy_on_p_to_s_wire_shows_in_graph() {
        // Construct by hand: one FF split, then force a DD onto the P->S
        // wire by making it the only candidate... simpler: insert via the
        // API on a minimal circuit and check a DD node sits on some path.
        let n = parse_bench("INPUT(a)\nOUTPUT(z)\nq = DFF(t)\nt = XOR(q, a)\nz = BUF(q)").unwrap();
        let cfg = LockConfig {
            seed: 1,
            ff_fraction: 1.0,
            delay_decoy_rate: 1.0,
            logic_decoy_rate: 0.0,
            ..Default::default()
        };
        let (locked, gt, _) = lock(&n, &cfg).unwrap();
        assert_eq!(gt.count(LatchType::DelayDecoy), 1);
        let g = seqgraph::extract_graph(&locked);
        let dd_node = g
            .latch_nodes
            .iter()
            .find(|&&node| gt.get(g.nodes[node].latch_id) == Some(LatchType::DelayDecoy))
            .copied()
            .unwrap();
        assert!(!g.fanin(dd_node).is_empty());
        assert!(!g.fanout(dd_node).is_empty());
    }

    #[test]
    fn or_style_decoy_correct_key_equivalence_exhaustive() {
        let orig = parse_bench(
            "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(z)\nq = DFF(t)\nt = AND(a, b)\nu = OR(c, d)\nz = XOR(q, u)",
        )
        .unwrap();
        let cfg = LockConfig {
            seed: 2,
            ff_fraction: 1.0,
            delay_decoy_rate: 0.0,
            logic_decoy_rate: 1.0,
            logic_decoy_styles: vec![DecoyStyle::Or],
        };
        let (locked, gt, _) = lock(&orig, &cfg).unwrap();
        assert_eq!(gt.count(LatchType::LogicDecoy), 1);
        let key = KeyAssignment::from_ground_truth(&gt);
        // Exhaustive over the 16 input patterns, two cycles each to let
        // state effects show.
        for pattern in crate::eval::sim::exhaustive_inputs(4) {
            let inputs = vec![pattern.clone(), pattern.clone()];
            let a = crate::eval::simulate(&orig, &KeyAssignment { types: vec![] }, &inputs);
            let b = crate::eval::simulate(&locked, &key, &inputs);
            assert_eq!(a.trace, b.trace);
        }
    }

    #[test]
    fn manifest_roundtrips_counts() {
        let (locked, gt, m) = lock(&s27(), &LockConfig::default()).unwrap();
        assert_eq!(m.n_keys, 2 * locked.latches.len());
        assert_eq!(
            m.n_primary + m.n_secondary + m.n_delay_decoys + m.n_logic_decoys,
            gt.types.len()
        );
        let text = m.to_text();
        assert!(text.contains("key_encoding.PRIMARY = 10"));
        assert!(text.contains("key_encoding.LOGIC_DECOY = 00"));
    }
}
