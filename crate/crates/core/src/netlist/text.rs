//! Parser and writer for the `.bench` dialect and its locked extension.
//!
//! ```text
//! # name: s27
//! INPUT(G0)
//! OUTPUT(G17)
//! G5 = DFF(G10)
//! G7 = LATCH(G13, K0)      # locked extension: keyed latch, key slot 0
//! G14 = NOT(G0)
//! ```
//!
//! Ground truth travels in a sidecar: one `latch_id<TAB>TYPE` line per latch.

use super::{
    FlipFlop, Gate, GateKind, GroundTruth, KeyedLatch, LatchType, Netlist, NetlistError,
};
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: undefined net `{net}`")]
    UndefinedNet { line: usize, net: String },
    #[error("line {line}: net `{net}` already has a driver")]
    DuplicateDriver { line: usize, net: String },
    #[error("line {line}: unknown gate kind `{kind}`")]
    UnknownGateKind { line: usize, kind: String },
    #[error("line {line}: {kind} expects {expected} inputs, got {got}")]
    ArityMismatch {
        line: usize,
        kind: String,
        expected: String,
        got: usize,
    },
    #[error("line {line}: malformed line `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: bad key slot token `{token}`")]
    BadKeySlot { line: usize, token: String },
    #[error("line {line}: unknown latch type `{token}`")]
    BadLatchType { line: usize, token: String },
    #[error("line {line}: bad latch id `{token}`")]
    BadLatchId { line: usize, token: String },
    #[error(transparent)]
    Invalid(#[from] NetlistError),
}

fn is_net_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '[' || c == ']'
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// `KIND(a, b, c)` -> (KIND, [a, b, c]); empty arg list allowed.
fn parse_call(rhs: &str, line: usize) -> Result<(&str, Vec<&str>), ParseError> {
    let open = rhs.find('(').ok_or_else(|| ParseError::Malformed {
        line,
        text: rhs.to_string(),
    })?;
    if !rhs.trim_end().ends_with(')') {
        return Err(ParseError::Malformed {
            line,
            text: rhs.to_string(),
        });
    }
    let kind = rhs[..open].trim();
    let inner = rhs.trim_end();
    let inner = &inner[open + 1..inner.len() - 1];
    let args: Vec<&str> = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    if kind.is_empty()
        || !kind.chars().all(is_net_char)
        || args.iter().any(|a| a.is_empty() || !a.chars().all(is_net_char))
    {
        return Err(ParseError::Malformed {
            line,
            text: rhs.to_string(),
        });
    }
    Ok((kind, args))
}

/// Parse the `.bench` dialect. Accepts keyed `LATCH` lines too, so locked
/// files parse with the same routine; `parse_bench` proper is the entry
/// point for unlocked benchmarks (callers can check `latches.is_empty()`).
pub fn parse_bench(text: &str) -> Result<Netlist, ParseError> {
    let mut n = Netlist::new("netlist");
    // Line of first reference per net, for undefined-net diagnostics.
    let mut first_ref: Vec<usize> = Vec::new();
    let mut driven: Vec<bool> = Vec::new();

    let touch = |n: &mut Netlist, name: &str, line: usize, refs: &mut Vec<usize>, drv: &mut Vec<bool>| {
        let id = n.intern(name);
        if id.idx() == refs.len() {
            refs.push(line);
            drv.push(false);
        }
        id
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let code = strip_comment(raw).trim();
        if code.is_empty() {
            if let Some(rest) = raw.trim().strip_prefix("# name:") {
                n.name = rest.trim().to_string();
            }
            continue;
        }
        if let Some((kw, args)) = parse_call(code, line).ok().filter(|(k, _)| *k == "INPUT" || *k == "OUTPUT") {
            if args.len() != 1 {
                return Err(ParseError::Malformed {
                    line,
                    text: code.to_string(),
                });
            }
            let id = touch(&mut n, args[0], line, &mut first_ref, &mut driven);
            if kw == "INPUT" {
                if driven[id.idx()] {
                    return Err(ParseError::DuplicateDriver {
                        line,
                        net: args[0].to_string(),
                    });
                }
                driven[id.idx()] = true;
                n.inputs.push(id);
            } else {
                n.outputs.push(id);
            }
            continue;
        }
        let Some((lhs, rhs)) = code.split_once('=') else {
            return Err(ParseError::Malformed {
                line,
                text: code.to_string(),
            });
        };
        let lhs = lhs.trim();
        if lhs.is_empty() || !lhs.chars().all(is_net_char) {
            return Err(ParseError::Malformed {
                line,
                text: code.to_string(),
            });
        }
        let (kind, args) = parse_call(rhs.trim(), line)?;
        let out = touch(&mut n, lhs, line, &mut first_ref, &mut driven);
        if driven[out.idx()] {
            return Err(ParseError::DuplicateDriver {
                line,
                net: lhs.to_string(),
            });
        }
        driven[out.idx()] = true;

        match kind {
            "DFF" => {
                if args.len() != 1 {
                    return Err(ParseError::ArityMismatch {
                        line,
                        kind: "DFF".into(),
                        expected: "1".into(),
                        got: args.len(),
                    });
                }
                let d = touch(&mut n, args[0], line, &mut first_ref, &mut driven);
                n.flipflops.push(FlipFlop { output: out, data: d });
            }
            "LATCH" => {
                if args.len() != 2 {
                    return Err(ParseError::ArityMismatch {
                        line,
                        kind: "LATCH".into(),
                        expected: "2".into(),
                        got: args.len(),
                    });
                }
                let d = touch(&mut n, args[0], line, &mut first_ref, &mut driven);
                let key_index = args[1]
                    .strip_prefix('K')
                    .and_then(|s| s.parse::<u32>().ok())
                    .ok_or_else(|| ParseError::BadKeySlot {
                        line,
                        token: args[1].to_string(),
                    })?;
                n.latches.push(KeyedLatch {
                    output: out,
                    data: d,
                    key_index,
                });
            }
            _ => {
                let gk = GateKind::from_name(kind).ok_or_else(|| ParseError::UnknownGateKind {
                    line,
                    kind: kind.to_string(),
                })?;
                let (min, max) = gk.arity();
                let ok = args.len() >= min && max.is_none_or(|m| args.len() <= m);
                if !ok {
                    let expected = match max {
                        Some(m) if m == min => format!("{min}"),
                        Some(m) => format!("{min}..{m}"),
                        None => format!(">= {min}"),
                    };
                    return Err(ParseError::ArityMismatch {
                        line,
                        kind: kind.to_string(),
                        expected,
                        got: args.len(),
                    });
                }
                let inputs = args
                    .iter()
                    .map(|a| touch(&mut n, a, line, &mut first_ref, &mut driven))
                    .collect();
                n.gates.push(Gate {
                    output: out,
                    kind: gk,
                    inputs,
                });
            }
        }
    }

    if let Some(i) = driven.iter().position(|&d| !d) {
        return Err(ParseError::UndefinedNet {
            line: first_ref[i],
            net: n.net_name(super::NetId(i as u32)).to_string(),
        });
    }
    // Canonical latch order: by key slot, so latch id == key_index on disk.
    n.latches.sort_by_key(|l| l.key_index);
    n.validate(true)?;
    Ok(n)
}

/// Render a netlist in the dialect above. Output parses back to an equal
/// netlist (canonical-form equality).
pub fn write_bench(netlist: &Netlist) -> String {
    let mut out = String::new();
    let name = |id| netlist.net_name(id);
    let _ = writeln!(out, "# name: {}", netlist.name);
    for &pi in &netlist.inputs {
        let _ = writeln!(out, "INPUT({})", name(pi));
    }
    for &po in &netlist.outputs {
        let _ = writeln!(out, "OUTPUT({})", name(po));
    }
    for ff in &netlist.flipflops {
        let _ = writeln!(out, "{} = DFF({})", name(ff.output), name(ff.data));
    }
    let mut latches: Vec<_> = netlist.latches.iter().collect();
    latches.sort_by_key(|l| l.key_index);
    for l in latches {
        let _ = writeln!(out, "{} = LATCH({}, K{})", name(l.output), name(l.data), l.key_index);
    }
    for g in &netlist.gates {
        let args: Vec<&str> = g.inputs.iter().map(|&i| name(i)).collect();
        let _ = writeln!(out, "{} = {}({})", name(g.output), g.kind.name(), args.join(", "));
    }
    out
}

/// Write a locked netlist plus its ground-truth sidecar.
pub fn write_locked(
    netlist: &Netlist,
    ground_truth: &GroundTruth,
) -> Result<(String, String), NetlistError> {
    ground_truth.check_matches(netlist)?;
    let mut sidecar = String::new();
    for (&id, &ty) in &ground_truth.types {
        let _ = writeln!(sidecar, "{id}\t{}", ty.token());
    }
    Ok((write_bench(netlist), sidecar))
}

/// Inverse of [`write_locked`].
pub fn parse_locked(text: &str, sidecar: &str) -> Result<(Netlist, GroundTruth), ParseError> {
    let netlist = parse_bench(text)?;
    let mut gt = GroundTruth::default();
    for (lineno, raw) in sidecar.lines().enumerate() {
        let line = lineno + 1;
        let code = strip_comment(raw).trim();
        if code.is_empty() {
            continue;
        }
        let mut parts = code.split_whitespace();
        let (Some(id_tok), Some(ty_tok), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(ParseError::Malformed {
                line,
                text: code.to_string(),
            });
        };
        let id: u32 = id_tok.parse().map_err(|_| ParseError::BadLatchId {
            line,
            token: id_tok.to_string(),
        })?;
        let ty = LatchType::from_token(ty_tok).ok_or_else(|| ParseError::BadLatchType {
            line,
            token: ty_tok.to_string(),
        })?;
        gt.types.insert(id, ty);
    }
    gt.check_matches(&netlist)?;
    Ok((netlist, gt))
}
