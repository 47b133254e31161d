//! Exact k-best search over latch type assignments.
//!
//! Depth-first branch-and-bound in latch-id order with an admissible bound
//! (accumulated objective plus the per-latch maxima still available).
//! Colors are propagated by unit implication: a parity union-find with a
//! trail carries the C2 equalities and C3 inequalities as types get fixed,
//! so color-infeasible subtrees die immediately. The pool keeps the k best
//! type assignments (colors never multiply pool entries); ties sort by the
//! lexicographic type vector. Pruning only on strictly worse bounds keeps
//! the enumeration exact under ties.

use super::{
    objective_of, IlpAssignment, IlpModel, IlpType, PoolEntry, SolutionPool,
};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Parity union-find with rollback. No path compression so undo is a plain
/// trail pop; union by rank keeps finds cheap.
struct ParityUf {
    parent: Vec<usize>,
    parity: Vec<bool>,
    rank: Vec<u8>,
    /// Merged child roots, in order; rollback resets them to self-roots.
    trail: Vec<(usize, bool)>,
}

impl ParityUf {
    fn new(n: usize) -> Self {
        ParityUf {
            parent: (0..n).collect(),
            parity: vec![false; n],
            rank: vec![0; n],
            trail: Vec::new(),
        }
    }

    fn find(&self, x: usize) -> (usize, bool) {
        let mut r = x;
        let mut p = false;
        while self.parent[r] != r {
            p ^= self.parity[r];
            r = self.parent[r];
        }
        (r, p)
    }

    /// Enforce color(a) xor color(b) == rel. False on conflict.
    fn union(&mut self, a: usize, b: usize, rel: bool) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return pa ^ pb == rel;
        }
        let (child, parent, child_par) = if self.rank[ra] < self.rank[rb] {
            (ra, rb, pa ^ pb ^ rel)
        } else {
            (rb, ra, pa ^ pb ^ rel)
        };
        let bumped = self.rank[child] == self.rank[parent];
        self.parent[child] = parent;
        self.parity[child] = child_par;
        if bumped {
            self.rank[parent] += 1;
        }
        self.trail.push((child, bumped));
        true
    }

    fn mark(&self) -> usize {
        self.trail.len()
    }

    fn rollback(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (child, bumped) = self.trail.pop().unwrap();
            let parent = self.parent[child];
            if bumped {
                self.rank[parent] -= 1;
            }
            self.parent[child] = child;
            self.parity[child] = false;
        }
    }
}

/// Heap entry ordered worst-first so the binary heap peeks the entry to
/// evict: smaller objective is worse; on equal objective the
/// lexicographically larger type vector is worse.
struct Worst {
    objective: f64,
    types: Vec<IlpType>,
    colors: Vec<bool>,
}

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.objective == other.objective && self.types == other.types
    }
}
impl Eq for Worst {}
impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .objective
            .total_cmp(&self.objective)
            .then_with(|| self.types.cmp(&other.types))
    }
}

struct Search<'a> {
    model: &'a IlpModel,
    k: usize,
    /// In/out latch neighbors by latch id: (neighbor, edge is self->nbr).
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    allowed: Vec<Vec<IlpType>>,
    /// Suffix sums of the best available coefficient per latch.
    suffix_best: Vec<f64>,
    types: Vec<Option<IlpType>>,
    uf: ParityUf,
    pool: BinaryHeap<Worst>,
    excluded: Vec<Vec<IlpType>>,
}

impl<'a> Search<'a> {
    fn ground(&self) -> usize {
        self.model.n
    }

    fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_edges[i].iter().chain(self.in_edges[i].iter()).copied()
    }

    fn worst_in_full_pool(&self) -> Option<f64> {
        if self.pool.len() == self.k {
            self.pool.peek().map(|w| w.objective)
        } else {
            None
        }
    }

    fn push_leaf(&mut self) {
        let types: Vec<IlpType> = self.types.iter().map(|t| t.unwrap()).collect();
        if self.excluded.contains(&types) {
            return;
        }
        // Canonical colors straight from the union-find state.
        let (groot, gpar) = self.uf.find(self.ground());
        let colors: Vec<bool> = (0..self.model.n)
            .map(|i| {
                let (r, p) = self.uf.find(i);
                if r == groot {
                    p ^ gpar
                } else {
                    p
                }
            })
            .collect();
        let objective = objective_of(self.model, &types);
        self.pool.push(Worst {
            objective,
            types,
            colors,
        });
        if self.pool.len() > self.k {
            self.pool.pop();
        }
    }

    fn dfs(&mut self, i: usize, acc: f64) {
        if i == self.model.n {
            self.push_leaf();
            return;
        }
        // Deterministic branching: best coefficient first, type order on
        // ties. Exactness does not depend on this order.
        let mut order = self.allowed[i].clone();
        order.sort_by(|a, b| {
            self.model.coef[i][b.index()]
                .total_cmp(&self.model.coef[i][a.index()])
                .then(a.cmp(b))
        });
        for ty in order {
            let new_acc = acc + self.model.coef[i][ty.index()];
            if let Some(worst) = self.worst_in_full_pool() {
                // Prune strictly worse subtrees only; equal bounds continue
                // so tie-breaking stays exact.
                if new_acc + self.suffix_best[i + 1] < worst {
                    continue;
                }
            }
            // C0/C1 against already-assigned neighbors (and self-loops,
            // which the allowed sets already exclude for P/S).
            let conflict = match ty {
                IlpType::Primary => self
                    .neighbors(i)
                    .any(|j| self.types[j] == Some(IlpType::Primary)),
                IlpType::Secondary => self
                    .neighbors(i)
                    .any(|j| self.types[j] == Some(IlpType::Secondary)),
                IlpType::DelayDecoy => false,
            };
            if conflict {
                continue;
            }

            let mark = self.uf.mark();
            let mut ok = true;
            let ground = self.ground();
            match ty {
                IlpType::Primary => {
                    ok = self.uf.union(i, ground, true);
                    // C3 from assigned DD predecessors.
                    if ok {
                        for idx in 0..self.in_edges[i].len() {
                            let j = self.in_edges[i][idx];
                            if j != i && self.types[j] == Some(IlpType::DelayDecoy)
                                && !self.uf.union(j, i, true) {
                                    ok = false;
                                    break;
                                }
                        }
                    }
                }
                IlpType::Secondary => {
                    ok = self.uf.union(i, ground, false);
                    if ok {
                        for idx in 0..self.in_edges[i].len() {
                            let j = self.in_edges[i][idx];
                            if j != i && self.types[j] == Some(IlpType::DelayDecoy)
                                && !self.uf.union(j, i, true) {
                                    ok = false;
                                    break;
                                }
                        }
                    }
                }
                IlpType::DelayDecoy => {
                    // C2: every predecessor shares this latch's color,
                    // regardless of the predecessor's type.
                    for idx in 0..self.in_edges[i].len() {
                        let j = self.in_edges[i][idx];
                        if j != i && !self.uf.union(j, i, false) {
                            ok = false;
                            break;
                        }
                    }
                    // C3 toward assigned non-DD successors.
                    if ok {
                        for idx in 0..self.out_edges[i].len() {
                            let j = self.out_edges[i][idx];
                            if j != i {
                                match self.types[j] {
                                    Some(IlpType::Primary) | Some(IlpType::Secondary)
                                        if !self.uf.union(i, j, true) => {
                                            ok = false;
                                            break;
                                        }
                                    _ => {}
                                }
                            }
                        }
                    }
                }
            }

            if ok {
                self.types[i] = Some(ty);
                self.dfs(i + 1, new_acc);
                self.types[i] = None;
            }
            self.uf.rollback(mark);
        }
    }
}

struct Prepared {
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    /// Statically allowed types per latch (B0/B2 and self-loop bans).
    allowed: Vec<Vec<IlpType>>,
    /// suffix_best[i] = best possible objective over latches i..n.
    suffix_best: Vec<f64>,
}

fn prepare(model: &IlpModel) -> Prepared {
    let n = model.n;
    let mut out_edges = vec![Vec::new(); n];
    let mut in_edges = vec![Vec::new(); n];
    let mut self_loop = vec![false; n];
    for &(i, j) in &model.edges {
        if i == j {
            self_loop[i] = true;
        }
        out_edges[i].push(j);
        in_edges[j].push(i);
    }
    let mut allowed = Vec::with_capacity(n);
    for (i, &looped) in self_loop.iter().enumerate() {
        let mut a = Vec::new();
        let pi_po = model.po_adjacent[i] && model.pi_adjacent[i];
        for ty in IlpType::ALL {
            let banned = match ty {
                IlpType::Primary => model.po_adjacent[i] || looped || pi_po,
                IlpType::Secondary => looped || pi_po,
                IlpType::DelayDecoy => false,
            };
            if !banned {
                a.push(ty);
            }
        }
        allowed.push(a);
    }
    let mut suffix_best = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let best = allowed[i]
            .iter()
            .map(|t| model.coef[i][t.index()])
            .fold(f64::NEG_INFINITY, f64::max);
        suffix_best[i] = suffix_best[i + 1] + best;
    }
    Prepared {
        out_edges,
        in_edges,
        allowed,
        suffix_best,
    }
}

fn run_search(model: &IlpModel, k: usize, excluded: Vec<Vec<IlpType>>) -> SolutionPool {
    assert!(k >= 1);
    let Prepared {
        out_edges,
        in_edges,
        allowed,
        suffix_best,
    } = prepare(model);
    let mut uf = ParityUf::new(model.n + 1);
    // B1: PO-adjacent latches are color 0 unconditionally.
    for i in 0..model.n {
        if model.po_adjacent[i] {
            let merged = uf.union(i, model.n, false);
            debug_assert!(merged);
        }
    }
    let mut search = Search {
        model,
        k,
        out_edges,
        in_edges,
        allowed,
        suffix_best,
        types: vec![None; model.n],
        uf,
        pool: BinaryHeap::new(),
        excluded,
    };
    search.dfs(0, 0.0);

    let mut entries: Vec<PoolEntry> = search
        .pool
        .into_vec()
        .into_iter()
        .map(|w| PoolEntry {
            objective: w.objective,
            assignment: IlpAssignment {
                types: w.types,
                colors: w.colors,
            },
        })
        .collect();
    entries.sort_by(|a, b| {
        b.objective
            .total_cmp(&a.objective)
            .then_with(|| a.assignment.types.cmp(&b.assignment.types))
    });
    SolutionPool {
        entries,
        requested: k,
    }
}

/// Exact top-k pool: the k highest-objective feasible type assignments in
/// non-increasing objective order (fewer when the feasible space is
/// smaller). Deterministic.
pub fn solve_topk(model: &IlpModel, k: usize) -> SolutionPool {
    run_search(model, k, Vec::new())
}

/// Cross-check mode: repeated top-1 solves, each excluding all previously
/// found type assignments (no-good blocking). Equivalent to
/// [`solve_topk`] but quadratic in k; intended for small instances.
pub fn solve_topk_nogood(model: &IlpModel, k: usize) -> SolutionPool {
    assert!(k >= 1);
    let mut excluded: Vec<Vec<IlpType>> = Vec::new();
    let mut entries = Vec::new();
    for _ in 0..k {
        let pool = run_search(model, 1, excluded.clone());
        let Some(best) = pool.entries.into_iter().next() else {
            break;
        };
        excluded.push(best.assignment.types.clone());
        entries.push(best);
    }
    SolutionPool {
        entries,
        requested: k,
    }
}
