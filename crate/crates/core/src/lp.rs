//! Dense two-phase simplex for `max cᵀx` subject to `A_ub x ≤ b_ub`,
//! `A_eq x = b_eq`, `x ≥ 0`.
//!
//! Pivots follow Dantzig's rule and fall back to Bland's rule after a run of
//! degenerate steps.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes the objective stored in the last row (as `z − cᵀx = 0`)
    /// over columns `< usable`.
    fn optimize(&mut self, usable: usize) -> Result<()> {
        let obj = self.rows;
        let mut degenerate = 0;
        let max_iter = 50_000 + 100 * (self.rows + self.width);
        for _ in 0..max_iter {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut enter = None;
            let mut best = -PIVOT_TOL;
            for j in 0..usable {
                let v = self.at(obj, j);
                if v < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = v;
                }
            }
            let Some(c) = enter else {
                return Ok(());
            };
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let r = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => r < ratio - 1e-12 || (r <= ratio + 1e-12 && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        ratio = r;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Err(Error::Unbounded);
            };
            if ratio.abs() <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
        Err(Error::Infeasible("simplex iteration limit reached".into()))
    }
}

impl LinearProgram {
    pub fn new(c: Vec<f64>) -> Self {
        LinearProgram {
            c,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    fn check(&self) -> Result<()> {
        let n = self.dim();
        for row in self.a_ub.iter().chain(&self.a_eq) {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        if self.a_ub.len() != self.b_ub.len() || self.a_eq.len() != self.b_eq.len() {
            return Err(Error::DimensionMismatch {
                expected: self.a_ub.len() + self.a_eq.len(),
                found: self.b_ub.len() + self.b_eq.len(),
            });
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.check()?;
        let n = self.dim();
        let n_ub = self.a_ub.len();
        let rows = n_ub + self.a_eq.len();
        // Columns: structural, slacks, artificials, rhs.
        let art0 = n + n_ub;
        let width = art0 + rows + 1;
        let mut t = Tableau {
            rows,
            width,
            data: vec![0.0; (rows + 1) * width],
            basis: vec![0; rows],
        };
        let mut artificial = vec![false; rows];
        for i in 0..rows {
            let (row, b, slack) = if i < n_ub {
                (&self.a_ub[i], self.b_ub[i], Some(n + i))
            } else {
                (&self.a_eq[i - n_ub], self.b_eq[i - n_ub], None)
            };
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                t.data[i * width + j] = sign * row[j];
            }
            if let Some(s) = slack {
                t.data[i * width + s] = sign;
            }
            t.data[i * width + width - 1] = sign * b;
            if slack.is_some() && sign > 0.0 {
                t.basis[i] = slack.expect("slack column");
            } else {
                t.data[i * width + art0 + i] = 1.0;
                t.basis[i] = art0 + i;
                artificial[i] = true;
            }
        }

        // Phase 1: maximize −Σ artificials.
        if artificial.iter().any(|&a| a) {
            let obj = rows * width;
            for i in 0..rows {
                if artificial[i] {
                    t.data[obj + art0 + i] = 1.0;
                }
            }
            for i in 0..rows {
                if artificial[i] {
                    for j in 0..width {
                        t.data[obj + j] -= t.data[i * width + j];
                    }
                }
            }
            t.optimize(width - 1)?;
            let infeas = -t.data[obj + width - 1];
            if infeas > FEAS_TOL * (1.0 + self.rhs_scale()) {
                return Err(Error::Infeasible(alloc::format!(
                    "constraint violation {infeas:.3e} cannot be removed"
                )));
            }
            // Drive zero-level artificials out of the basis.
            for i in 0..rows {
                if t.basis[i] >= art0 {
                    if let Some(j) = (0..art0).find(|&j| t.at(i, j).abs() > 1e-9) {
                        t.pivot(i, j);
                    }
                }
            }
        }

        // Phase 2: objective row z − cᵀx, expressed in the current basis.
        let obj = rows * width;
        for j in 0..width {
            t.data[obj + j] = 0.0;
        }
        for j in 0..n {
            t.data[obj + j] = -self.c[j];
        }
        for i in 0..rows {
            let b = t.basis[i];
            let f = t.data[obj + b];
            if f != 0.0 {
                for j in 0..width {
                    t.data[obj + j] -= f * t.data[i * width + j];
                }
            }
        }
        // Rows still holding an artificial are redundant; zero them so they
        // never block a ratio test.
        for i in 0..rows {
            if t.basis[i] >= art0 {
                for j in 0..art0 {
                    t.data[i * width + j] = 0.0;
                }
            }
        }
        t.optimize(art0)?;

        let mut x = vec![0.0; n];
        for i in 0..rows {
            if t.basis[i] < n {
                x[t.basis[i]] = t.rhs(i).max(0.0);
            }
        }
        let objective = self.c.iter().zip(&x).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, objective })
    }

    fn rhs_scale(&self) -> f64 {
        self.b_ub
            .iter()
            .chain(&self.b_eq)
            .fold(0.0f64, |m, b| m.max(b.abs()))
    }
}
