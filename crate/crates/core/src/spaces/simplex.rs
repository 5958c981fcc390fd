//! Dense tableau simplex for `max c·y  s.t.  A y ≤ b, y ≥ 0` with `b ≥ 0`.
//!
//! The origin is feasible for this form, so no phase one is needed. Bland's
//! rule keeps the degenerate pivots produced by 0/1 constraint rows finite.

use crate::error::{Result, TwistError};

const EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    #[cfg_attr(not(test), allow(dead_code))]
    pub objective: f64,
    pub x: Vec<f64>,
}

pub(crate) fn maximize(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = rows.len();
    if b.len() != m || rows.iter().any(|r| r.len() != n) {
        return Err(TwistError::LinearProgram("shape mismatch".into()));
    }
    if b.iter().any(|&bi| bi < 0.0) {
        return Err(TwistError::LinearProgram("negative right-hand side".into()));
    }
    let width = n + m + 1;
    let rhs = n + m;
    let mut tab = vec![0.0; (m + 1) * width];
    for (i, row) in rows.iter().enumerate() {
        let r = &mut tab[i * width..(i + 1) * width];
        r[..n].copy_from_slice(row);
        r[n + i] = 1.0;
        r[rhs] = b[i];
    }
    {
        let z = &mut tab[m * width..];
        for (j, &cj) in c.iter().enumerate() {
            z[j] = -cj;
        }
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_pivots = 50 * (n + m) + 1000;
    for _ in 0..max_pivots {
        let z = &tab[m * width..(m + 1) * width];
        let Some(enter) = (0..n + m).find(|&j| z[j] < -EPS) else {
            let mut x = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = tab[i * width + rhs];
                }
            }
            return Ok(LpSolution {
                objective: tab[m * width + rhs],
                x,
            });
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tab[i * width + enter];
            if a > EPS {
                let ratio = tab[i * width + rhs] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - EPS || (ratio <= lr + EPS && basis[i] < basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((pr, _)) = leave else {
            return Err(TwistError::LinearProgram("unbounded".into()));
        };
        pivot(&mut tab, width, m, pr, enter);
        basis[pr] = enter;
    }
    Err(TwistError::LinearProgram("pivot limit reached".into()))
}

fn pivot(tab: &mut [f64], width: usize, m: usize, pr: usize, pc: usize) {
    let p = tab[pr * width + pc];
    for v in &mut tab[pr * width..(pr + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = tab[pr * width..(pr + 1) * width].to_vec();
    for i in 0..=m {
        if i == pr {
            continue;
        }
        let f = tab[i * width + pc];
        if f != 0.0 {
            for (v, pv) in tab[i * width..(i + 1) * width].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  →  36 at (2, 6)
        let sol = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-12);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rows() {
        let rows = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
        ];
        let sol = maximize(&[1.0, 1.0, 1.0], &rows, &[1.0; 4]).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        assert!(maximize(&[1.0], &[vec![-1.0]], &[1.0]).is_err());
    }
}
