//! Dense-tableau primal simplex for `max c.x  s.t.  A x <= b, x >= 0` with
//! `b >= 0`, so the all-slack basis is feasible from the start. Bland's rule
//! picks entering and leaving variables, which rules out cycling.

use thiserror::Error;

const EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SimplexError {
    #[error("constraint matrix has {rows} rows but {rhs} right-hand sides")]
    Shape { rows: usize, rhs: usize },
    #[error("row {row} has {len} coefficients, expected {expected}")]
    RowLength { row: usize, len: usize, expected: usize },
    #[error("right-hand side {row} is negative ({value})")]
    NegativeRhs { row: usize, value: f64 },
    #[error("objective is unbounded")]
    Unbounded,
    #[error("iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<SimplexSolution, SimplexError> {
    let m = a.len();
    let n = c.len();
    if b.len() != m {
        return Err(SimplexError::Shape { rows: m, rhs: b.len() });
    }
    for (row, r) in a.iter().enumerate() {
        if r.len() != n {
            return Err(SimplexError::RowLength { row, len: r.len(), expected: n });
        }
    }
    if let Some((row, &value)) = b.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(SimplexError::NegativeRhs { row, value });
    }

    // Row-major tableau: m constraint rows then the objective row.
    // Columns: n structural, m slack, then the right-hand side.
    let width = n + m + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        let row = &mut t[i * width..(i + 1) * width];
        row[..n].copy_from_slice(&a[i]);
        row[n + i] = 1.0;
        row[width - 1] = b[i];
    }
    {
        let obj = &mut t[m * width..];
        for j in 0..n {
            obj[j] = -c[j];
        }
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_iter = 50 * (n + m).max(10);
    let mut iterations = 0;
    loop {
        let obj = &t[m * width..];
        let Some(enter) = (0..n + m).find(|&j| obj[j] < -EPS) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let coef = t[i * width + enter];
            if coef > EPS {
                let ratio = t[i * width + width - 1] / coef;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(pr) = leave else {
            return Err(SimplexError::Unbounded);
        };
        pivot(&mut t, width, m, pr, enter);
        basis[pr] = enter;
        iterations += 1;
        if iterations > max_iter {
            return Err(SimplexError::IterationLimit);
        }
    }

    let mut x = vec![0.0; n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = t[i * width + width - 1];
        }
    }
    let objective = t[m * width + width - 1];
    Ok(SimplexSolution { x, objective, iterations })
}

fn pivot(t: &mut [f64], width: usize, m: usize, pr: usize, pc: usize) {
    let inv = 1.0 / t[pr * width + pc];
    for v in &mut t[pr * width..(pr + 1) * width] {
        *v *= inv;
    }
    let pivot_row: Vec<f64> = t[pr * width..(pr + 1) * width].to_vec();
    for i in 0..=m {
        if i == pr {
            continue;
        }
        let row = &mut t[i * width..(i + 1) * width];
        let factor = row[pc];
        if factor.abs() > 0.0 {
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[pc] = 0.0;
        }
    }
}
