// SPDX-License-Identifier: MIT OR Apache-2.0
//! Least-norm solves `min x*Gx` subject to `Ax = b`.

use super::CMat;
use crate::error::{Error, Result};
use nalgebra::DVector;
use num_complex::Complex64;

pub(crate) const EIG_CUTOFF: f64 = 1e-12;
const SVD_CUTOFF: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;
const REFINE_STEPS: usize = 2;

/// `W` with `W* G W = I` on the numerically retained spectrum of `G`.
pub(crate) struct Whitening {
    pub w: CMat,
    pub cond: f64,
}

pub(crate) fn whiten(g: &CMat) -> Result<Whitening> {
    let n = g.nrows();
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = g[(i, i)].re;
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut h = CMat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            h[(a, b)] = g[(a, b)] * scale[a] * scale[b];
        }
    }
    for a in 0..n {
        h[(a, a)].im = 0.0;
        for b in a + 1..n {
            let v = 0.5 * (h[(a, b)] + h[(b, a)].conj());
            h[(a, b)] = v;
            h[(b, a)] = v.conj();
        }
    }
    let eig = h.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if !(lmax > 0.0) {
        return Err(Error::Numeric { msg: "Gram matrix has no positive spectrum".into(), residual: lmax });
    }
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > EIG_CUTOFF * lmax).collect();
    let lmin = keep.iter().map(|&i| eig.eigenvalues[i]).fold(f64::INFINITY, f64::min);
    let mut w = CMat::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let inv = 1.0 / eig.eigenvalues[i].sqrt();
        for a in 0..n {
            w[(a, c)] = eig.eigenvectors[(a, i)] * (scale[a] * inv);
        }
    }
    Ok(Whitening { w, cond: lmax / lmin })
}

/// Minimum-norm solution of `M y = b`, with the achieved residual.
pub(crate) fn min_norm(m: &CMat, b: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
    let ncols = m.ncols();
    let bn: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if b.is_empty() || bn == 0.0 {
        return Ok((vec![Complex64::new(0.0, 0.0); ncols], 0.0));
    }
    if ncols == 0 {
        return Err(Error::Constraint("no basis functions survive on the region".into()));
    }
    let bv = DVector::from_column_slice(b);
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested Vᵀ");
    let pseudo = |rhs: &DVector<Complex64>| {
        let mut y = DVector::<Complex64>::zeros(ncols);
        for (i, &sv) in svd.singular_values.iter().enumerate() {
            if sv > SVD_CUTOFF * smax && sv > 0.0 {
                let coef = u.column(i).dotc(rhs) / sv;
                for c in 0..ncols {
                    y[c] += vt[(i, c)].conj() * coef;
                }
            }
        }
        y
    };
    let mut y = pseudo(&bv);
    for _ in 0..REFINE_STEPS {
        let r = &bv - m * &y;
        y += pseudo(&r);
    }
    let resid = (m * &y - &bv).norm();
    if resid > RESIDUAL_TOL * bn.max(1.0) {
        return Err(Error::Constraint(format!("jet constraints are infeasible in the truncated basis (residual {resid:.3e})")));
    }
    Ok((y.iter().cloned().collect(), resid))
}

/// Applies `⊗_j W_j` (row-major, last factor fastest) to a tensor `y`.
pub(crate) fn kron_apply(ws: &[&CMat], y: &[Complex64]) -> Vec<Complex64> {
    let mut shape: Vec<usize> = ws.iter().map(|w| w.ncols()).collect();
    let mut cur = y.to_vec();
    for (j, w) in ws.iter().enumerate() {
        let pre: usize = shape[..j].iter().product();
        let post: usize = shape[j + 1..].iter().product();
        let (rin, rout) = (w.ncols(), w.nrows());
        let mut next = vec![Complex64::new(0.0, 0.0); pre * rout * post];
        for p in 0..pre {
            for a in 0..rout {
                for k in 0..rin {
                    let wak = w[(a, k)];
                    if wak == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let src = (p * rin + k) * post;
                    let dst = (p * rout + a) * post;
                    for q in 0..post {
                        next[dst + q] += wak * cur[src + q];
                    }
                }
            }
        }
        shape[j] = rout;
        cur = next;
    }
    cur
}

/// Kronecker product of row vectors.
pub(crate) fn kron_rows(rows: &[Vec<Complex64>]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for r in rows {
        let mut next = Vec::with_capacity(out.len() * r.len());
        for a in &out {
            for b in r {
                next.push(a * b);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_apply_matches_dense_kronecker() {
        let a = CMat::from_fn(3, 2, |i, j| Complex64::new(i as f64 + 1.0, j as f64 - 0.5));
        let b = CMat::from_fn(2, 2, |i, j| Complex64::new((i * 2 + j) as f64, 1.0));
        let y: Vec<Complex64> = (0..4).map(|k| Complex64::new(k as f64, -(k as f64))).collect();
        let dense = a.kronecker(&b) * DVector::from_column_slice(&y);
        let fast = kron_apply(&[&a, &b], &y);
        for (u, v) in dense.iter().zip(&fast) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn whitening_inverts_gram() {
        let g = CMat::from_fn(3, 3, |i, j| Complex64::new(1.0 / (i + j + 1) as f64, 0.0));
        let w = whiten(&g).unwrap();
        let id = w.w.adjoint() * &g * &w.w;
        assert!((id - CMat::identity(3, 3)).iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-10);
    }

    #[test]
    fn infeasible_constraints_are_reported() {
        let m = CMat::from_row_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        let b = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        assert!(matches!(min_norm(&m, &b), Err(Error::Constraint(_))));
    }
}
