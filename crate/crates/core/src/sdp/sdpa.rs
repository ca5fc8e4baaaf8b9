//! SDPA sparse format (".dat-s") export and import.
//!
//! The file encodes the linear-matrix-inequality pair
//!
//! ```text
//!   (P)  min  c^T z   s.t.  X(z) = sum_k z_k F_k - F_0,  X(z) >= 0
//!   (D)  max  tr(F_0 Y)  s.t.  tr(F_k Y) = c_k,  Y >= 0
//! ```
//!
//! Our standard form `min <c, x> : <A_k, x> = b_k, x in K` maps onto (D)
//! with `Y = x`, `F_k = A_k`, `c_k = b_k`, and `F_0 = -C` (so the file's
//! variables are our equality duals). Re-importing therefore reproduces an
//! equivalent problem with the same optimal value.
//!
//! Layout of blocks on export: each PSD block in declaration order, then one
//! 1x1 block per nonnegative scalar variable, then one diagonal block holding
//! the split `u - v` of any free variables (SDPA has no free variables).

use super::{EqualityRow, SdpProblem, VarRef};
use crate::error::{Error, Result};
use std::fmt::Write as _;

/// Entry sink: (constraint index 0..=m, block 1-based, i, j 1-based upper
/// triangular, value).
type Entry = (usize, usize, usize, usize, f64);

fn push_entries(
    out: &mut Vec<Entry>,
    problem: &SdpProblem,
    cons: usize,
    terms: &[(VarRef, f64)],
    negate: bool,
) {
    let npsd = problem.psd_blocks.len();
    let free_block = npsd + problem.nonneg_vars + 1;
    for (v, val) in terms {
        let val = if negate { -val } else { *val };
        if val == 0.0 {
            continue;
        }
        match *v {
            VarRef::Psd { block, row, col } => {
                out.push((cons, block + 1, row + 1, col + 1, val));
            }
            VarRef::Nonneg(k) => {
                out.push((cons, npsd + k + 1, 1, 1, val));
            }
            VarRef::Free(k) => {
                // split x_f = u - v over a diagonal block
                out.push((cons, free_block, 2 * k + 1, 2 * k + 1, val));
                out.push((cons, free_block, 2 * k + 2, 2 * k + 2, -val));
            }
        }
    }
}

/// Serialize a problem to SDPA sparse text, bit-exact and deterministic.
pub fn export_sdpa(problem: &SdpProblem) -> String {
    let m = problem.equalities.len();
    let mut blocks: Vec<i64> = problem.psd_blocks.iter().map(|&n| n as i64).collect();
    for _ in 0..problem.nonneg_vars {
        blocks.push(1);
    }
    if problem.free_vars > 0 {
        blocks.push(-(2 * problem.free_vars as i64));
    }

    let mut text = String::new();
    let _ = writeln!(text, "{m}");
    let _ = writeln!(text, "{}", blocks.len());
    let _ = writeln!(
        text,
        "{}",
        blocks
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    let _ = writeln!(
        text,
        "{}",
        problem
            .equalities
            .iter()
            .map(|r| format_f64(r.rhs))
            .collect::<Vec<_>>()
            .join(" ")
    );

    let mut entries: Vec<Entry> = Vec::new();
    // F_0 = -C
    push_entries(&mut entries, problem, 0, &problem.objective, true);
    for (k, row) in problem.equalities.iter().enumerate() {
        push_entries(&mut entries, problem, k + 1, &row.terms, false);
    }
    for (cons, block, i, j, val) in entries {
        let _ = writeln!(text, "{cons} {block} {i} {j} {}", format_f64(val));
    }
    text
}

fn format_f64(v: f64) -> String {
    // Shortest round-trip formatting keeps the file bit-exact across runs.
    let mut s = format!("{v}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// Parse SDPA sparse text into an equivalent problem.
///
/// Positive blocks of size one and diagonal (negative) blocks become
/// nonnegative scalar variables; larger positive blocks become PSD blocks.
pub fn import_sdpa(text: &str) -> Result<SdpProblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| {
            !l.is_empty() && !l.starts_with('"') && !l.starts_with('*') && !l.starts_with('#')
        });

    let parse_err = |line: usize, msg: &str| Error::Parse {
        line,
        message: msg.into(),
    };

    let (ln, l) = lines
        .next()
        .ok_or_else(|| parse_err(0, "missing variable-count line"))?;
    let m: usize = first_token(l)
        .parse()
        .map_err(|_| parse_err(ln, "invalid variable count"))?;

    let (ln, l) = lines
        .next()
        .ok_or_else(|| parse_err(0, "missing block-count line"))?;
    let nblocks: usize = first_token(l)
        .parse()
        .map_err(|_| parse_err(ln, "invalid block count"))?;

    let (ln, l) = lines
        .next()
        .ok_or_else(|| parse_err(0, "missing block-structure line"))?;
    let sizes: Vec<i64> = tokens(l)
        .iter()
        .map(|t| t.parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(ln, "invalid block structure"))?;
    if sizes.len() != nblocks {
        return Err(parse_err(ln, "block structure length does not match count"));
    }

    let (ln, l) = lines
        .next()
        .ok_or_else(|| parse_err(0, "missing objective line"))?;
    let rhs: Vec<f64> = tokens(l)
        .iter()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(ln, "invalid objective vector"))?;
    if rhs.len() != m {
        return Err(parse_err(ln, "objective vector length does not match"));
    }

    // Block layout -> variable references.
    let mut psd_blocks = Vec::new();
    let mut nonneg = 0usize;
    enum BlockKind {
        Psd(usize),
        Diag { first: usize, size: usize },
    }
    let mut kinds = Vec::with_capacity(sizes.len());
    for &sz in &sizes {
        if sz > 1 {
            kinds.push(BlockKind::Psd(psd_blocks.len()));
            psd_blocks.push(sz as usize);
        } else if sz == 1 || sz == -1 {
            kinds.push(BlockKind::Diag {
                first: nonneg,
                size: 1,
            });
            nonneg += 1;
        } else if sz < 0 {
            let k = (-sz) as usize;
            kinds.push(BlockKind::Diag {
                first: nonneg,
                size: k,
            });
            nonneg += k;
        } else {
            return Err(parse_err(ln, "zero-size block"));
        }
    }

    let mut equalities: Vec<EqualityRow> = (0..m)
        .map(|k| EqualityRow {
            terms: Vec::new(),
            rhs: rhs[k],
        })
        .collect();
    let mut objective: Vec<(VarRef, f64)> = Vec::new();

    for (ln, l) in lines {
        let toks = tokens(l);
        if toks.len() != 5 {
            return Err(parse_err(ln, "entry line must have 5 fields"));
        }
        let cons: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(ln, "invalid constraint index"))?;
        let block: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(ln, "invalid block index"))?;
        let i: usize = toks[2]
            .parse()
            .map_err(|_| parse_err(ln, "invalid row index"))?;
        let j: usize = toks[3]
            .parse()
            .map_err(|_| parse_err(ln, "invalid column index"))?;
        let val: f64 = toks[4]
            .parse()
            .map_err(|_| parse_err(ln, "invalid value"))?;
        if cons > m {
            return Err(parse_err(ln, "constraint index out of range"));
        }
        if block == 0 || block > kinds.len() {
            return Err(parse_err(ln, "block index out of range"));
        }
        if i == 0 || j == 0 || i > j {
            return Err(parse_err(ln, "indices must be 1-based upper triangular"));
        }
        let var = match &kinds[block - 1] {
            BlockKind::Psd(pidx) => {
                if j > psd_blocks[*pidx] {
                    return Err(parse_err(ln, "entry outside block"));
                }
                VarRef::Psd {
                    block: *pidx,
                    row: i - 1,
                    col: j - 1,
                }
            }
            BlockKind::Diag { first, size } => {
                if i != j {
                    return Err(parse_err(ln, "off-diagonal entry in diagonal block"));
                }
                if i > *size {
                    return Err(parse_err(ln, "entry outside block"));
                }
                VarRef::Nonneg(first + i - 1)
            }
        };
        if cons == 0 {
            // F_0 = -C
            objective.push((var, -val));
        } else {
            equalities[cons - 1].terms.push((var, val));
        }
    }

    Ok(SdpProblem {
        psd_blocks,
        nonneg_vars: nonneg,
        free_vars: 0,
        equalities,
        objective,
    })
}

fn tokens(l: &str) -> Vec<String> {
    l.replace([',', '{', '}', '(', ')'], " ")
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

fn first_token(l: &str) -> String {
    tokens(l).into_iter().next().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{solve, SolveOptions, SolveStatus};

    #[test]
    fn one_by_one_problem_is_five_lines() {
        let problem = SdpProblem {
            psd_blocks: vec![1],
            nonneg_vars: 0,
            free_vars: 0,
            equalities: vec![EqualityRow {
                terms: vec![(
                    VarRef::Psd {
                        block: 0,
                        row: 0,
                        col: 0,
                    },
                    1.0,
                )],
                rhs: 1.0,
            }],
            objective: vec![],
        };
        let text = export_sdpa(&problem);
        assert_eq!(text.trim_end().lines().count(), 5); // 4 header lines + 1 entry
        let reimported = import_sdpa(&text).unwrap();
        let a = solve(&problem, &SolveOptions::default()).unwrap();
        let b = solve(&reimported, &SolveOptions::default()).unwrap();
        assert_eq!(a.status, SolveStatus::Optimal);
        assert!((a.objective - b.objective).abs() < 1e-8);
    }

    #[test]
    fn parse_error_carries_line_number() {
        let bad = "1\n1\n1\n1.0\n0 1 1 bad 1.0\n";
        match import_sdpa(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn nonneg_vars_become_unit_blocks() {
        let problem = SdpProblem {
            psd_blocks: vec![],
            nonneg_vars: 2,
            free_vars: 0,
            equalities: vec![EqualityRow {
                terms: vec![(VarRef::Nonneg(0), 1.0), (VarRef::Nonneg(1), 2.0)],
                rhs: 4.0,
            }],
            objective: vec![(VarRef::Nonneg(0), 1.0), (VarRef::Nonneg(1), 1.0)],
        };
        let text = export_sdpa(&problem);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[1], "2");
        assert_eq!(lines[2], "1 1");
        let back = import_sdpa(&text).unwrap();
        assert_eq!(back.nonneg_vars, 2);
        let a = solve(&problem, &SolveOptions::default()).unwrap();
        let b = solve(&back, &SolveOptions::default()).unwrap();
        // minimize x0 + x1 with x0 + 2 x1 = 4 -> optimum 2 at x1 = 2.
        assert!((a.objective - 2.0).abs() < 1e-6);
        assert!((b.objective - 2.0).abs() < 1e-6);
    }

    #[test]
    fn free_variables_round_trip_by_value() {
        // min f : f = 4 -> value 4 after splitting into u - v.
        let problem = SdpProblem {
            psd_blocks: vec![],
            nonneg_vars: 0,
            free_vars: 1,
            equalities: vec![EqualityRow {
                terms: vec![(VarRef::Free(0), 1.0)],
                rhs: 4.0,
            }],
            objective: vec![(VarRef::Free(0), 1.0)],
        };
        let text = export_sdpa(&problem);
        let back = import_sdpa(&text).unwrap();
        assert_eq!(back.free_vars, 0);
        assert_eq!(back.nonneg_vars, 2);
        let a = solve(&problem, &SolveOptions::default()).unwrap();
        let b = solve(&back, &SolveOptions::default()).unwrap();
        assert!((a.objective - 4.0).abs() < 1e-6);
        assert!((b.objective - 4.0).abs() < 1e-6);
    }
}
