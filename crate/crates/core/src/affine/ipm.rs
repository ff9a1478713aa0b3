//! Log-barrier interior-point method for the certificate program.
//!
//! The affinity constraint `n ln ρ(Ax, Ay) + ln(2/ε) ≥ 0` is written with
//! one auxiliary variable per observation bin, `s_j² ≤ (Ax)_j (Ay)_j`, and the
//! linear constraint `Σ s_j ≥ ρ₀ = exp(−ln(2/ε)/n)`. Each cone constraint
//! carries the barrier `−ln((Ax)_j (Ay)_j − s_j²)`. Newton steps are
//! restricted to `Σx = Σy = 1`. The multiplier `μ = 1/(t·(Σs − ρ₀))` of the
//! linear constraint converts to the affinity multiplier as `ν = μρ/n`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{Program, SolveOptions, SolveReport};
use crate::linalg::{axpy, cholesky, cholesky_solve, dot, Matrix};
use crate::{Error, Result};

const T_GROWTH: f64 = 20.0;
const CENTERING_TOL: f64 = 1e-10;

struct Lifted<'p, 'a> {
    prog: &'p Program<'a>,
    rho0: f64,
}

struct Derivatives {
    grad: Vec<f64>,
    hess: Matrix,
}

impl Lifted<'_, '_> {
    fn dim(&self) -> usize {
        2 * self.prog.dim() + self.prog.a.rows()
    }

    /// Barrier value, or `None` outside the strict interior.
    fn barrier(&self, z: &[f64], t: f64) -> Option<f64> {
        let m = self.prog.dim();
        let (xy, s) = z.split_at(2 * m);
        let mut v = -t * self.prog.objective(xy);
        for &zk in xy {
            if !(zk > 0.0) {
                return None;
            }
            v -= zk.ln();
        }
        for block in [&xy[..m], &xy[m..]] {
            for c in &self.prog.class.constraints {
                let slack = c.rhs - c.eval(block);
                if !(slack > 0.0) {
                    return None;
                }
                v -= slack.ln();
            }
        }
        let p = self.prog.a.mul_vec(&xy[..m]);
        let q = self.prog.a.mul_vec(&xy[m..]);
        for j in 0..s.len() {
            let u = p[j] * q[j] - s[j] * s[j];
            if !(u > 0.0) {
                return None;
            }
            v -= u.ln();
        }
        let w = s.iter().sum::<f64>() - self.rho0;
        if !(w > 0.0) {
            return None;
        }
        Some(v - w.ln())
    }

    fn derivatives(&self, z: &[f64], t: f64) -> Derivatives {
        let m = self.prog.dim();
        let rows = self.prog.a.rows();
        let dim = self.dim();
        let (xy, s) = z.split_at(2 * m);
        let mut grad = vec![0.0; dim];
        let mut hess = Matrix::zeros(dim, dim);

        for k in 0..m {
            grad[k] += 0.5 * t * self.prog.g[k];
            grad[m + k] -= 0.5 * t * self.prog.g[k];
        }
        for (k, &zk) in xy.iter().enumerate() {
            grad[k] -= 1.0 / zk;
            hess[(k, k)] += 1.0 / (zk * zk);
        }
        for (off, block) in [(0, &xy[..m]), (m, &xy[m..])] {
            for c in &self.prog.class.constraints {
                let slack = c.rhs - c.eval(block);
                for &(i, ci) in &c.terms {
                    grad[off + i] += ci / slack;
                    for &(j, cj) in &c.terms {
                        hess[(off + i, off + j)] += ci * cj / (slack * slack);
                    }
                }
            }
        }

        // −ln(pq − s²) with p = a_jᵀx, q = a_jᵀy
        let p = self.prog.a.mul_vec(&xy[..m]);
        let q = self.prog.a.mul_vec(&xy[m..]);
        let sj0 = 2 * m;
        let mut hpp_row = vec![0.0; m];
        let mut hqq_row = vec![0.0; m];
        let mut hpq_row = vec![0.0; m];
        for j in 0..rows {
            let (pj, qj, sj) = (p[j], q[j], s[j]);
            let u = pj * qj - sj * sj;
            let u2 = u * u;
            let (hpp, hqq, hpq) = (qj * qj / u2, pj * pj / u2, pj * qj / u2 - 1.0 / u);
            let (hps, hqs) = (-2.0 * sj * qj / u2, -2.0 * sj * pj / u2);
            let aj = self.prog.a.row(j);
            for (l, &al) in aj.iter().enumerate() {
                hpp_row[l] = hpp * al;
                hqq_row[l] = hqq * al;
                hpq_row[l] = hpq * al;
            }
            for (k, &ak) in aj.iter().enumerate() {
                if ak == 0.0 {
                    continue;
                }
                grad[k] -= qj / u * ak;
                grad[m + k] -= pj / u * ak;
                let row = hess.row_mut(k);
                axpy(ak, &hpp_row, &mut row[..m]);
                axpy(ak, &hpq_row, &mut row[m..2 * m]);
                row[sj0 + j] += hps * ak;
                let row = hess.row_mut(m + k);
                axpy(ak, &hqq_row, &mut row[m..2 * m]);
                row[sj0 + j] += hqs * ak;
            }
            let row = hess.row_mut(sj0 + j);
            axpy(hps, aj, &mut row[..m]);
            axpy(hqs, aj, &mut row[m..2 * m]);
            grad[sj0 + j] += 2.0 * sj / u;
            row[sj0 + j] += 4.0 * sj * sj / u2 + 2.0 / u;
        }
        // the y-x block mirrors the x-y block
        for k in 0..m {
            for l in 0..m {
                hess[(m + l, k)] = hess[(k, m + l)];
            }
        }

        // −ln(Σs − ρ₀)
        let w = s.iter().sum::<f64>() - self.rho0;
        for i in 0..rows {
            grad[sj0 + i] -= 1.0 / w;
            for j in 0..rows {
                hess[(sj0 + i, sj0 + j)] += 1.0 / (w * w);
            }
        }
        Derivatives { grad, hess }
    }
}

fn factor(hess: &Matrix) -> Result<Matrix> {
    if let Ok(l) = cholesky(hess.clone()) {
        return Ok(l);
    }
    let n = hess.rows();
    let scale = (0..n).fold(0.0f64, |m, i| m.max(hess[(i, i)].abs())).max(1.0);
    let mut ridge = 1e-14 * scale;
    for _ in 0..8 {
        let mut h = hess.clone();
        for i in 0..n {
            h[(i, i)] += ridge;
        }
        if let Ok(l) = cholesky(h) {
            return Ok(l);
        }
        ridge *= 100.0;
    }
    Err(Error::Domain("barrier Hessian is not positive definite".into()))
}

/// Newton direction under `Σx = Σy = 1` and the squared decrement.
fn newton_direction(d: &Derivatives, m: usize) -> Result<(Vec<f64>, f64)> {
    let l = factor(&d.hess)?;
    let dim = d.grad.len();
    let mut e1 = vec![0.0; dim];
    let mut e2 = vec![0.0; dim];
    for k in 0..m {
        e1[k] = 1.0;
        e2[m + k] = 1.0;
    }
    let hg = cholesky_solve(&l, &d.grad);
    let h1 = cholesky_solve(&l, &e1);
    let h2 = cholesky_solve(&l, &e2);
    let (s11, s12, s22) = (dot(&e1, &h1), dot(&e1, &h2), dot(&e2, &h2));
    let (r1, r2) = (-dot(&e1, &hg), -dot(&e2, &hg));
    let det = s11 * s22 - s12 * s12;
    let w1 = (r1 * s22 - r2 * s12) / det;
    let w2 = (s11 * r2 - s12 * r1) / det;
    let dir: Vec<f64> = (0..dim).map(|i| -hg[i] - w1 * h1[i] - w2 * h2[i]).collect();
    let dec = -dot(&d.grad, &dir);
    Ok((dir, dec))
}

/// `start` is a strictly feasible `(x, y)` with `x = y`.
pub(super) fn solve(prog: &Program<'_>, start: Vec<f64>, opts: &SolveOptions) -> Result<SolveReport> {
    let m = prog.dim();
    let rows = prog.a.rows();
    let lifted = Lifted {
        prog,
        rho0: (-prog.log_term / prog.n).exp(),
    };
    // s_j = θ p_j with Σ s_j halfway between ρ₀ and ρ(x, x) = Σ p_j
    let p = prog.a.mul_vec(&start[..m]);
    let mass: f64 = p.iter().sum();
    let theta = 0.5 * (1.0 + lifted.rho0 / mass);
    let mut z = start;
    z.extend(p.iter().map(|pj| theta * pj));

    let n_ineq = (2 * m + 2 * prog.class.constraints.len() + 2 * rows + 1) as f64;
    let mut t = 1.0;
    let mut iterations = 0;
    loop {
        loop {
            let d = lifted.derivatives(&z, t);
            let (dir, dec) = newton_direction(&d, m)?;
            if dec * 0.5 <= CENTERING_TOL {
                break;
            }
            let f0 = lifted.barrier(&z, t).expect("iterate is strictly feasible");
            let mut step = 1.0;
            let mut moved = false;
            let mut trial = vec![0.0; z.len()];
            for _ in 0..60 {
                for i in 0..z.len() {
                    trial[i] = z[i] + step * dir[i];
                }
                if let Some(f1) = lifted.barrier(&trial, t) {
                    if f1 <= f0 - 0.25 * step * dec {
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            iterations += 1;
            if !moved {
                // no measurable progress: the point is centered to working precision
                break;
            }
            core::mem::swap(&mut z, &mut trial);
            if iterations >= opts.max_iter {
                let nu = multiplier(prog, &lifted, &z, t, f64::INFINITY);
                return Err(Error::NonConvergence(alloc::boxed::Box::new(prog.report(
                    &z[..2 * m],
                    nu,
                    iterations,
                    false,
                ))));
            }
        }
        if n_ineq / t < opts.tol {
            break;
        }
        t *= T_GROWTH;
    }
    let nu = multiplier(prog, &lifted, &z, t, opts.tol.sqrt() * prog.log_term);
    Ok(prog.report(&z[..2 * m], nu, iterations, true))
}

/// `ν = μρ/n`, snapped to zero when the affinity constraint is inactive.
fn multiplier(prog: &Program<'_>, lifted: &Lifted<'_, '_>, z: &[f64], t: f64, inactive_above: f64) -> f64 {
    let m = prog.dim();
    let (h, rho, _, _) = prog.affinity(&z[..2 * m]);
    if h > inactive_above {
        return 0.0;
    }
    let w = z[2 * m..].iter().sum::<f64>() - lifted.rho0;
    rho / (t * w.max(f64::MIN_POSITIVE) * prog.n)
}
