//! Two-phase gate-level simulation of (possibly locked) netlists.
//!
//! A cycle is phase-L then phase-H. PRIMARY-keyed latches are transparent
//! while the clock is low, SECONDARY-keyed ones while it is high, delay
//! decoys in both phases, and logic decoys hold a constant 0. FFs capture
//! on the rising edge between the two phases. All state resets to 0.
//!
//! Wrong keys can close combinational loops through transparent latches;
//! when a phase fails to settle we hold the latch values from the previous
//! phase and flag the event.

use crate::netlist::{LatchType, Netlist};

use super::KeyAssignment;

/// Netlist compiled for repeated simulation.
pub struct Simulator<'a> {
    n: &'a Netlist,
    topo: Vec<usize>,
    behavior: Vec<LatchType>,
    /// Current net values.
    nets: Vec<bool>,
    /// Held latch output values.
    latch_q: Vec<bool>,
    ff_q: Vec<bool>,
    pub non_settle_events: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResult {
    /// One row of PO values per cycle, sampled at the end of phase H.
    pub trace: Vec<Vec<bool>>,
    pub non_settle_events: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(netlist: &'a Netlist, key: &KeyAssignment) -> Self {
        assert_eq!(
            key.types.len(),
            netlist.latches.len(),
            "key must cover every latch"
        );
        let topo = netlist.topo_gates().expect("netlist must be validated");
        Simulator {
            n: netlist,
            topo,
            behavior: key.types.clone(),
            nets: vec![false; netlist.n_nets()],
            latch_q: vec![false; netlist.latches.len()],
            ff_q: vec![false; netlist.flipflops.len()],
            non_settle_events: 0,
        }
    }

    /// Reset all sequential state and nets to 0.
    pub fn reset(&mut self) {
        self.nets.iter_mut().for_each(|v| *v = false);
        self.latch_q.iter_mut().for_each(|v| *v = false);
        self.ff_q.iter_mut().for_each(|v| *v = false);
        self.non_settle_events = 0;
    }

    fn eval_gates(&mut self) {
        for &gi in &self.topo {
            let g = &self.n.gates[gi];
            self.nets[g.output.idx()] = g.kind.eval_ids(&g.inputs, &self.nets);
        }
    }

    /// Settle one phase. `transparent[l]` marks latches whose output follows
    /// their data input combinationally during this phase.
    fn settle_phase(&mut self, clk_high: bool) {
        let n_latches = self.n.latches.len();
        let phase_start: Vec<bool> = self.latch_q.clone();
        let transparent = |ty: LatchType| match ty {
            LatchType::Primary => !clk_high,
            LatchType::Secondary => clk_high,
            LatchType::DelayDecoy => true,
            LatchType::LogicDecoy => false,
        };

        for (fi, ff) in self.n.flipflops.iter().enumerate() {
            self.nets[ff.output.idx()] = self.ff_q[fi];
        }

        // Fixpoint iteration: inject latch outputs, evaluate gates, and
        // stop once the injected values survive re-evaluation. Each pass
        // pushes values across one level of transparent latches.
        let expected = |sim: &Self, li: usize| -> bool {
            let l = &sim.n.latches[li];
            match sim.behavior[li] {
                LatchType::LogicDecoy => false,
                ty if transparent(ty) => sim.nets[l.data.idx()],
                _ => sim.latch_q[li],
            }
        };
        let max_passes = n_latches + 2;
        let mut settled = false;
        for _pass in 0..max_passes {
            for li in 0..n_latches {
                self.nets[self.n.latches[li].output.idx()] = expected(self, li);
            }
            self.eval_gates();
            let stable = (0..n_latches)
                .all(|li| self.nets[self.n.latches[li].output.idx()] == expected(self, li));
            if stable {
                settled = true;
                break;
            }
        }
        if !settled {
            // Key-induced oscillation: hold previous latch values.
            self.non_settle_events += 1;
            for (li, l) in self.n.latches.iter().enumerate() {
                let v = match self.behavior[li] {
                    LatchType::LogicDecoy => false,
                    _ => phase_start[li],
                };
                self.nets[l.output.idx()] = v;
            }
            self.eval_gates();
        }
        // Latch the settled values.
        for (li, l) in self.n.latches.iter().enumerate() {
            self.latch_q[li] = match self.behavior[li] {
                LatchType::LogicDecoy => false,
                _ => self.nets[l.output.idx()],
            };
        }
    }

    /// Run one cycle with the given PI values; returns the PO sample.
    pub fn cycle(&mut self, inputs: &[bool]) -> Vec<bool> {
        assert_eq!(inputs.len(), self.n.inputs.len());
        for (i, &pi) in self.n.inputs.iter().enumerate() {
            self.nets[pi.idx()] = inputs[i];
        }
        self.settle_phase(false);
        // Rising edge: FFs capture simultaneously from end-of-phase-L nets.
        let captured: Vec<bool> = self
            .n
            .flipflops
            .iter()
            .map(|ff| self.nets[ff.data.idx()])
            .collect();
        self.ff_q = captured;
        self.settle_phase(true);
        self.n
            .outputs
            .iter()
            .map(|&po| self.nets[po.idx()])
            .collect()
    }
}

trait EvalIds {
    fn eval_ids(self, inputs: &[crate::netlist::NetId], nets: &[bool]) -> bool;
}

impl EvalIds for crate::netlist::GateKind {
    #[inline]
    fn eval_ids(self, inputs: &[crate::netlist::NetId], nets: &[bool]) -> bool {
        use crate::netlist::GateKind::*;
        match self {
            And => inputs.iter().all(|i| nets[i.idx()]),
            Nand => !inputs.iter().all(|i| nets[i.idx()]),
            Or => inputs.iter().any(|i| nets[i.idx()]),
            Nor => !inputs.iter().any(|i| nets[i.idx()]),
            Xor => inputs.iter().fold(false, |a, i| a ^ nets[i.idx()]),
            Xnor => !inputs.iter().fold(false, |a, i| a ^ nets[i.idx()]),
            Not => !nets[inputs[0].idx()],
            Buf => nets[inputs[0].idx()],
            Mux => {
                if nets[inputs[0].idx()] {
                    nets[inputs[2].idx()]
                } else {
                    nets[inputs[1].idx()]
                }
            }
            Const0 => false,
            Const1 => true,
        }
    }
}

/// Simulate `inputs.len()` cycles from reset.
pub fn simulate(netlist: &Netlist, key: &KeyAssignment, inputs: &[Vec<bool>]) -> SimResult {
    let mut sim = Simulator::new(netlist, key);
    sim.reset();
    let trace = inputs.iter().map(|row| sim.cycle(row)).collect();
    SimResult {
        trace,
        non_settle_events: sim.non_settle_events,
    }
}

/// Seeded random input stream: `cycles` rows of `n_pis` bits.
pub fn random_inputs(n_pis: usize, cycles: usize, rng: &mut impl rand::Rng) -> Vec<Vec<bool>> {
    (0..cycles)
        .map(|_| (0..n_pis).map(|_| rng.gen::<bool>()).collect())
        .collect()
}

/// Exhaustive input enumeration for combinational circuits (one cycle per
/// assignment). Only sensible for small PI counts.
pub fn exhaustive_inputs(n_pis: usize) -> Vec<Vec<bool>> {
    (0..1usize << n_pis)
        .map(|m| (0..n_pis).map(|b| (m >> b) & 1 == 1).collect())
        .collect()
}
