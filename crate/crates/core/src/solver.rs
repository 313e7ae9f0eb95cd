//! Iterative Hermitian solvers on the Fock space: Jacobi-preconditioned
//! conjugate gradients with optional deflation, and inverse iteration for
//! the ground state.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::OperatorMatrix;

pub type CVec = Vec<Complex64>;

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Removes the component along the unit vector `q`.
pub fn project_out(v: &mut [Complex64], q: &[Complex64]) {
    let c = dot(q, v);
    v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
}

/// The shifted operator H + shift * I.
pub struct Shifted<'a> {
    pub h: &'a OperatorMatrix,
    pub shift: f64,
}

impl Shifted<'_> {
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.h.apply_into(x, y);
        y.iter_mut().zip(x).for_each(|(y, x)| *y += self.shift * x);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CgOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { rel_tol: 1e-13, max_iter: 2000 }
    }
}

/// Solves (H + shift) x = b for Hermitian positive definite H + shift, or on
/// the orthogonal complement of `deflate` when given (b is projected first).
pub fn solve(
    a: &Shifted<'_>,
    diag: &[f64],
    b: &[Complex64],
    deflate: Option<&[Complex64]>,
    opts: CgOptions,
) -> Result<(CVec, usize)> {
    let n = b.len();
    let mut r = b.to_vec();
    if let Some(q) = deflate {
        project_out(&mut r, q);
    }
    let bnorm = norm(&r);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let precond = |r: &[Complex64]| -> CVec {
        let mut z: CVec = r.iter().zip(diag).map(|(r, d)| r / (d + a.shift)).collect();
        if let Some(q) = deflate {
            project_out(&mut z, q);
        }
        z
    };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    let mut ap = vec![Complex64::new(0.0, 0.0); n];
    for it in 1..=opts.max_iter {
        a.apply(&p, &mut ap);
        if let Some(q) = deflate {
            project_out(&mut ap, q);
        }
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            return Err(Error::ResolventSingular(format!("non-positive curvature {pap:e}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= opts.rel_tol * bnorm {
            return Ok((x, it));
        }
        z = precond(&r);
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::ResolventSingular(format!("CG did not converge in {} iterations", opts.max_iter)))
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: CVec,
    pub residual: f64,
}

/// Lowest eigenpair of a Hermitian H by shifted inverse iteration.
///
/// `lower` must lie strictly below the lowest eigenvalue and `gap_hint` is a
/// scale for the distance to the next one. Failure to converge signals a
/// (near-)degenerate ground state.
pub fn lowest_eigenpair(
    h: &OperatorMatrix,
    start: &[Complex64],
    lower: f64,
    gap_hint: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Eigenpair> {
    let diag: Vec<f64> = h.diagonal().iter().map(|d| d.re).collect();
    let mut v = start.to_vec();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut sigma = lower;
    let mut hv = h.apply(&v);
    let mut rho = dot(&v, &hv).re;
    let scale = h.max_abs().max(rho.abs());
    let cg = CgOptions { rel_tol: 1e-15, max_iter: 5000 };
    for it in 0..max_iter {
        let resid: f64 = norm(&hv.iter().zip(&v).map(|(a, b)| a - rho * b).collect::<CVec>());
        if resid <= tol * scale {
            return Ok(Eigenpair { value: rho, vector: v, residual: resid });
        }
        // Move the shift towards the Rayleigh quotient once it is reliable.
        if it >= 2 && resid < 0.1 * gap_hint {
            sigma = sigma.max(rho - 0.05 * gap_hint);
        }
        let op = Shifted { h, shift: -sigma };
        let (w, _) = match solve(&op, &diag, &v, None, cg) {
            Ok(s) => s,
            Err(Error::ResolventSingular(m)) if m.starts_with("CG") => {
                let mut relaxed = cg;
                relaxed.rel_tol = 1e-13;
                solve(&op, &diag, &v, None, relaxed)?
            }
            Err(e) => return Err(e),
        };
        let nw = norm(&w);
        v = w.into_iter().map(|x| x / nw).collect();
        hv = h.apply(&v);
        rho = dot(&v, &hv).re;
    }
    let resid = norm(&hv.iter().zip(&v).map(|(a, b)| a - rho * b).collect::<CVec>());
    Err(Error::DegenerateGroundState { gap: resid })
}
