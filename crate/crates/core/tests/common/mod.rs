//! Shared oracles for integration tests; deliberately independent of the
//! library's solver internals.

use latchlock::ilp::{objective_of, IlpAssignment, IlpModel, IlpType};

/// Exhaustive k-best: every 3^n type vector, color feasibility by trying
/// all 2^n colorings against the model's explicit constraint list, sorted
/// by (objective desc, type vector lex asc). Constraints that touch no
/// color variable are checked once per type vector so the enumeration
/// stays tractable at n = 8.
pub fn brute_force_topk(model: &IlpModel, k: usize) -> Vec<(f64, Vec<IlpType>)> {
    let n = model.n;
    let is_color_var = |v: usize| v % 4 == 3;
    let (color_cons, type_cons): (Vec<_>, Vec<_>) = model
        .constraints
        .iter()
        .partition(|c| c.terms.iter().any(|&(v, _)| is_color_var(v)));
    let mut feasible = Vec::new();
    let mut types = vec![IlpType::Primary; n];
    let combos = 3usize.pow(n as u32);
    for t in 0..combos.max(1) {
        let mut x = t;
        for s in types.iter_mut() {
            *s = IlpType::ALL[x % 3];
            x /= 3;
        }
        let mut values = IlpAssignment {
            types: types.clone(),
            colors: vec![false; n],
        }
        .to_values();
        if !type_cons.iter().all(|c| c.satisfied(&values)) {
            continue;
        }
        let mut ok = n == 0;
        for cbits in 0..(1usize << n) {
            for b in 0..n {
                values[4 * b + 3] = ((cbits >> b) & 1) as u8;
            }
            if color_cons.iter().all(|c| c.satisfied(&values)) {
                ok = true;
                break;
            }
        }
        if ok {
            feasible.push((objective_of(model, &types), types.clone()));
        }
    }
    feasible.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    feasible.truncate(k);
    feasible
}
