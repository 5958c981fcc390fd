//! Schreier norm, its dual (by constraint generation), and the Schlumprecht
//! norm. All three are sequence-space norms and need unit weights.
//!
//! Atoms carry positions `1..=N` here: a set `A` is admissible when
//! `|A| ≤ min A`.

use crate::error::{Result, TwistError};
use crate::spaces::simplex;

/// Schreier norm of `|x|` together with a maximizing admissible set
/// (0-based atom indices, restricted to the support).
pub fn schreier_with_witness(x: &[f64]) -> (f64, Vec<usize>) {
    let n = x.len();
    let mut best = 0.0;
    let mut best_set = Vec::new();
    let mut tail: Vec<(f64, usize)> = Vec::with_capacity(n);
    // Walk start positions from the right so `tail` holds atoms at positions ≥ m.
    for start in (0..n).rev() {
        if x[start] != 0.0 {
            let item = (x[start].abs(), start);
            let at = tail.partition_point(|probe| probe.0 > item.0 || (probe.0 == item.0 && probe.1 < item.1));
            tail.insert(at, item);
        }
        let take = (start + 1).min(tail.len());
        let sum: f64 = tail[..take].iter().map(|t| t.0).sum();
        if sum > best {
            best = sum;
            best_set = tail[..take].iter().map(|t| t.1).collect();
        }
    }
    best_set.sort_unstable();
    (best, best_set)
}

pub fn schreier_norm(x: &[f64]) -> f64 {
    schreier_with_witness(x).0
}

/// Dual Schreier norm, returned with the optimal nonnegative `y`
/// (`‖y‖_S ≤ 1`, supported on the support of `x`).
///
/// Solves `max Σ|x_i| y_i` over the Schreier unit ball, adding the most
/// violated admissible-set constraint after each solve.
pub fn schreier_dual_with_witness(x: &[f64], cap: usize) -> Result<(f64, Vec<f64>)> {
    let n = x.len();
    if n > cap {
        return Err(TwistError::CapExceeded {
            norm: "schreier dual",
            size: n,
            cap,
        });
    }
    let supp: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
    if supp.is_empty() {
        return Ok((0.0, vec![0.0; n]));
    }
    let k = supp.len();
    let c: Vec<f64> = supp.iter().map(|&i| x[i].abs()).collect();
    let mut rows: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut r = vec![0.0; k];
            r[j] = 1.0;
            r
        })
        .collect();
    let mut y_full = vec![0.0; n];
    // Each round adds a distinct admissible set, so the loop is finite.
    for _ in 0..100_000 {
        let sol = simplex::maximize(&c, &rows, &vec![1.0; rows.len()])?;
        y_full.iter_mut().for_each(|v| *v = 0.0);
        for (j, &i) in supp.iter().enumerate() {
            y_full[i] = sol.x[j].max(0.0);
        }
        let (ball, set) = schreier_with_witness(&y_full);
        if ball <= 1.0 + 1e-10 {
            let scale = ball.max(1.0);
            y_full.iter_mut().for_each(|v| *v /= scale);
            let value: f64 = supp.iter().map(|&i| x[i].abs() * y_full[i]).sum();
            return Ok((value, y_full));
        }
        let mut row = vec![0.0; k];
        for i in set {
            if let Ok(j) = supp.binary_search(&i) {
                row[j] = 1.0;
            }
        }
        rows.push(row);
    }
    Err(TwistError::NonConvergence {
        what: "schreier dual constraint generation",
        iterations: 100_000,
        last_change: f64::NAN,
    })
}

pub fn schreier_dual_norm(x: &[f64], cap: usize) -> Result<f64> {
    schreier_dual_with_witness(x, cap).map(|(v, _)| v)
}

/// Schlumprecht norm: the least fixed point of
/// `f(x) = max(‖x‖_∞, sup_{ℓ≥2} (1/log₂(ℓ+1)) Σ_{i≤ℓ} f(E_i x))`
/// over successive intervals `E_1 < … < E_ℓ`.
///
/// Iterates from `f_0 = ‖·‖_∞` on the table of all sub-intervals of the
/// support hull. Each step solves, for every interval, the best ℓ-interval
/// packing by dynamic programming under the previous table.
pub fn schlumprecht_norm(x: &[f64], cap: usize, max_iters: usize, tol: f64) -> Result<f64> {
    let Some(lo) = x.iter().position(|&v| v != 0.0) else {
        return Ok(0.0);
    };
    let hi = x.iter().rposition(|&v| v != 0.0).unwrap_or(lo);
    let len = hi - lo + 1;
    if len > cap {
        return Err(TwistError::CapExceeded {
            norm: "schlumprecht",
            size: len,
            cap,
        });
    }
    let a: Vec<f64> = x[lo..=hi].iter().map(|v| v.abs()).collect();
    let idx = |s: usize, t: usize| s * len + t;

    let mut sup_table = vec![0.0; len * len];
    for s in 0..len {
        let mut m = 0.0f64;
        for t in s..len {
            m = m.max(a[t]);
            sup_table[idx(s, t)] = m;
        }
    }
    let inv_log: Vec<f64> = (0..=len + 1)
        .map(|l| if l >= 2 { 1.0 / ((l + 1) as f64).log2() } else { 0.0 })
        .collect();

    let mut table = sup_table.clone();
    let mut packing = vec![f64::NEG_INFINITY; (len + 1) * len];
    let mut last_change = f64::INFINITY;
    for _ in 0..max_iters {
        let mut next = sup_table.clone();
        for s0 in 0..len {
            // packing[l][j]: best sum of l successive nonempty intervals in [s0, j].
            packing.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
            for j in s0..len {
                packing[len + j] = table[idx(s0, j)];
            }
            for l in 2..=(len - s0) {
                let (prev_rows, cur_rows) = packing.split_at_mut(l * len);
                let prev = &prev_rows[(l - 1) * len..];
                let cur = &mut cur_rows[..len];
                for j in (s0 + l - 1)..len {
                    let mut best = if j > s0 { cur[j - 1] } else { f64::NEG_INFINITY };
                    for s in (s0 + l - 1)..=j {
                        let v = prev[s - 1] + table[idx(s, j)];
                        if v > best {
                            best = v;
                        }
                    }
                    cur[j] = best;
                    let cand = best * inv_log[l];
                    if cand > next[idx(s0, j)] {
                        next[idx(s0, j)] = cand;
                    }
                }
            }
        }
        last_change = next
            .iter()
            .zip(&table)
            .fold(0.0f64, |m, (n, o)| m.max(n - o));
        table = next;
        if last_change <= tol {
            return Ok(table[idx(0, len - 1)]);
        }
    }
    Err(TwistError::NonConvergence {
        what: "schlumprecht fixed-point iteration",
        iterations: max_iters,
        last_change,
    })
}
