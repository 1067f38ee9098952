//! Token- and line-level diff helpers.
//!
//! Token diffs drive patch-granularity similarity and changed-function
//! detection; the line diff renders the human-readable unified patch stored
//! next to each mutant.

/// Common prefix/suffix decomposition of two token sequences.
///
/// Returns `(prefix_len, suffix_len)` such that `a[..p] == b[..p]`,
/// `a[a.len()-s..] == b[b.len()-s..]`, and `p + s` does not exceed either
/// length. The greedy prefix is taken first.
pub fn affix_split<T: PartialEq>(a: &[T], b: &[T]) -> (usize, usize) {
    let mut p = 0;
    while p < a.len() && p < b.len() && a[p] == b[p] {
        p += 1;
    }
    let max_s = a.len().min(b.len()) - p;
    let mut s = 0;
    while s < max_s && a[a.len() - 1 - s] == b[b.len() - 1 - s] {
        s += 1;
    }
    (p, s)
}

/// The differing middle of `b` relative to `a` under the affix split.
pub fn changed_middle<'b, T: PartialEq>(a: &[T], b: &'b [T]) -> &'b [T] {
    let (p, s) = affix_split(a, b);
    &b[p..b.len() - s]
}

/// Minimal line-based diff ops computed by LCS dynamic programming.
/// Inputs here are small (mini-language sources), so the quadratic table is
/// fine.
enum Op<'a> {
    Equal(&'a str),
    Del(&'a str),
    Ins(&'a str),
}

fn line_ops<'a>(a: &'a [&'a str], b: &'a [&'a str]) -> Vec<Op<'a>> {
    let (n, m) = (a.len(), b.len());
    let mut lcs = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if a[i] == b[j] {
                lcs[i + 1][j + 1] + 1
            } else {
                lcs[i + 1][j].max(lcs[i][j + 1])
            };
        }
    }
    let mut ops = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            ops.push(Op::Equal(a[i]));
            i += 1;
            j += 1;
        } else if lcs[i + 1][j] >= lcs[i][j + 1] {
            ops.push(Op::Del(a[i]));
            i += 1;
        } else {
            ops.push(Op::Ins(b[j]));
            j += 1;
        }
    }
    while i < n {
        ops.push(Op::Del(a[i]));
        i += 1;
    }
    while j < m {
        ops.push(Op::Ins(b[j]));
        j += 1;
    }
    ops
}

/// Unified diff with 3 lines of context.
pub fn unified_diff(old: &str, new: &str, old_name: &str, new_name: &str) -> String {
    const CONTEXT: usize = 3;
    let a: Vec<&str> = old.lines().collect();
    let b: Vec<&str> = new.lines().collect();
    let ops = line_ops(&a, &b);
    if !ops.iter().any(|o| !matches!(o, Op::Equal(_))) {
        return String::new();
    }

    // Mark op indices that belong in some hunk (changes plus context).
    let mut keep = vec![false; ops.len()];
    for (i, op) in ops.iter().enumerate() {
        if !matches!(op, Op::Equal(_)) {
            let lo = i.saturating_sub(CONTEXT);
            let hi = (i + CONTEXT + 1).min(ops.len());
            for flag in keep.iter_mut().take(hi).skip(lo) {
                *flag = true;
            }
        }
    }

    let mut out = format!("--- {old_name}\n+++ {new_name}\n");
    let (mut a_line, mut b_line) = (1usize, 1usize);
    let mut i = 0;
    while i < ops.len() {
        if !keep[i] {
            match ops[i] {
                Op::Equal(_) => {
                    a_line += 1;
                    b_line += 1;
                }
                _ => unreachable!("changes are always kept"),
            }
            i += 1;
            continue;
        }
        let start = i;
        let (a_start, b_start) = (a_line, b_line);
        let mut body = String::new();
        let (mut a_len, mut b_len) = (0usize, 0usize);
        while i < ops.len() && keep[i] {
            match ops[i] {
                Op::Equal(l) => {
                    body.push_str(&format!(" {l}\n"));
                    a_line += 1;
                    b_line += 1;
                    a_len += 1;
                    b_len += 1;
                }
                Op::Del(l) => {
                    body.push_str(&format!("-{l}\n"));
                    a_line += 1;
                    a_len += 1;
                }
                Op::Ins(l) => {
                    body.push_str(&format!("+{l}\n"));
                    b_line += 1;
                    b_len += 1;
                }
            }
            i += 1;
        }
        let _ = start;
        out.push_str(&format!(
            "@@ -{a_start},{a_len} +{b_start},{b_len} @@\n{body}"
        ));
    }
    out
}
