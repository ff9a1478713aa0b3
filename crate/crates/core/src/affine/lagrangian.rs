//! Bisection on the multiplier `ν` with conditional-gradient maximization of
//! the Lagrangian `½gᵀ(y−x) + ν h(x, y)` over the product class.
//!
//! Works for classes without interior (the barrier method needs one).

use alloc::boxed::Box;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{Program, SolveOptions, SolveReport};
use crate::linalg::dot;
use crate::{Error, Result};

const LINE_STEPS: usize = 50;
const BISECTION_STEPS: usize = 100;

struct Inner {
    z: Vec<f64>,
    gap: f64,
    iterations: usize,
}

impl Program<'_> {
    fn lagrangian_grad(&self, z: &[f64], nu: f64) -> Vec<f64> {
        let m = self.dim();
        let (_, mut grad) = if nu > 0.0 {
            self.h_grad(z)
        } else {
            (0.0, alloc::vec![0.0; 2 * m])
        };
        for v in grad.iter_mut() {
            *v *= nu;
        }
        for k in 0..m {
            grad[k] -= 0.5 * self.g[k];
            grad[m + k] += 0.5 * self.g[k];
        }
        grad
    }

    /// Vertex of the product class maximizing `cᵀz`.
    fn linear_oracle(&self, c: &[f64]) -> Result<Vec<f64>> {
        let m = self.dim();
        let (mut sx, _) = self.class.maximize_linear(&c[..m])?;
        let (sy, _) = self.class.maximize_linear(&c[m..])?;
        sx.extend(sy);
        Ok(sx)
    }

    fn frank_wolfe(&self, nu: f64, mut z: Vec<f64>, tol: f64, max_iter: usize) -> Result<Inner> {
        let mut gap = f64::INFINITY;
        let mut it = 0;
        while it < max_iter {
            let grad = self.lagrangian_grad(&z, nu);
            let s = self.linear_oracle(&grad)?;
            let d: Vec<f64> = s.iter().zip(&z).map(|(a, b)| a - b).collect();
            gap = dot(&grad, &d);
            if gap <= tol {
                break;
            }
            // the Lagrangian is concave along d: bisect on its slope
            let slope = |gamma: f64| {
                let p: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + gamma * b).collect();
                dot(&self.lagrangian_grad(&p, nu), &d)
            };
            let gamma = if slope(1.0) >= 0.0 {
                1.0
            } else {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..LINE_STEPS {
                    let mid = 0.5 * (lo + hi);
                    if slope(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            for (a, b) in z.iter_mut().zip(&d) {
                *a += gamma * b;
            }
            it += 1;
        }
        Ok(Inner {
            z,
            gap,
            iterations: it,
        })
    }
}

pub(super) fn solve(prog: &Program<'_>, start: Vec<f64>, opts: &SolveOptions) -> Result<SolveReport> {
    let inner_tol = opts.tol / 4.0;
    let h_tol = 1e-6 * prog.log_term;
    let mut total = 0;
    let mut worst_gap = 0.0f64;

    let free = prog.frank_wolfe(0.0, start.clone(), inner_tol, opts.max_iter)?;
    total += free.iterations;
    if prog.h(&free.z) >= 0.0 {
        let converged = free.gap <= inner_tol;
        return finish(prog, free.z, 0.0, total, converged);
    }

    let g_range = prog.g.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - prog.g.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut nu_hi = (10.0 * g_range / prog.log_term).max(1e-12);
    let mut hi = prog.frank_wolfe(nu_hi, start.clone(), inner_tol, opts.max_iter)?;
    total += hi.iterations;
    let mut doublings = 0;
    while prog.h(&hi.z) < 0.0 {
        nu_hi *= 2.0;
        hi = prog.frank_wolfe(nu_hi, hi.z, inner_tol, opts.max_iter)?;
        total += hi.iterations;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::NonConvergence(Box::new(prog.report(&hi.z, nu_hi, total, false))));
        }
    }
    worst_gap = worst_gap.max(hi.gap);
    let mut nu_lo = 0.0;
    let mut lo_z = free.z;
    for _ in 0..BISECTION_STEPS {
        if prog.h(&hi.z) <= h_tol || nu_hi - nu_lo <= 1e-12 * nu_hi {
            break;
        }
        let nu = 0.5 * (nu_lo + nu_hi);
        let r = prog.frank_wolfe(nu, hi.z.clone(), inner_tol, opts.max_iter)?;
        total += r.iterations;
        if prog.h(&r.z) >= 0.0 {
            nu_hi = nu;
            worst_gap = worst_gap.max(r.gap);
            hi = r;
        } else {
            nu_lo = nu;
            lo_z = r.z;
        }
    }

    // Move from the feasible end toward the infeasible one as far as h ≥ 0
    // allows; h is concave along the segment.
    let blend = |theta: f64| -> Vec<f64> {
        hi.z.iter()
            .zip(&lo_z)
            .map(|(a, b)| (1.0 - theta) * a + theta * b)
            .collect()
    };
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if prog.h(&blend(mid)) >= 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let z = blend(a);
    let converged = worst_gap <= inner_tol;
    finish(prog, z, nu_hi, total, converged)
}

fn finish(prog: &Program<'_>, z: Vec<f64>, nu: f64, iterations: usize, converged: bool) -> Result<SolveReport> {
    let report = prog.report(&z, nu, iterations, converged);
    if converged {
        Ok(report)
    } else {
        Err(Error::NonConvergence(Box::new(report)))
    }
}
