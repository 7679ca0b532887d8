//! Shift-invert Arnoldi for a few eigenvalues near a complex shift.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use super::{sort_pairs, EigenPair};
use crate::matrix::{OperatorMatrix, Storage};
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// LU factorization of a banded matrix with partial pivoting.
///
/// Row interchanges widen the upper band to `kl + ku`, so every row keeps
/// `2 kl + ku + 1` slots.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    a: Vec<C64>,
    piv: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Factors `m − σ I`.
    pub fn factor(m: &OperatorMatrix, sigma: C64) -> Result<BandLu> {
        let n = m.dim();
        let kl = m.half_bandwidth();
        let ku = kl;
        let width = 2 * kl + ku + 1;
        let mut lu = BandLu { n, kl, ku, width, a: alloc::vec![ZERO; n * width], piv: alloc::vec![0; n] };
        for i in 0..n {
            for j in m.row_range(i) {
                let k = lu.at(i, j);
                lu.a[k] = m.get(i, j);
            }
            let k = lu.at(i, i);
            lu.a[k] -= sigma;
        }
        let scale = m.max_abs().max(sigma.norm()).max(1e-300);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.a[lu.at(k, k)].norm();
            for r in k + 1..=last {
                let v = lu.a[lu.at(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 1e-300 * scale) {
                return Err(Error::EigenNotConverged(alloc::string::String::from("shift is an exact eigenvalue")));
            }
            lu.piv[k] = p;
            let cmax = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=cmax {
                    let (x, y) = (lu.at(k, c), lu.at(p, c));
                    lu.a.swap(x, y);
                }
            }
            let pivot = lu.a[lu.at(k, k)];
            for r in k + 1..=last {
                let ir = lu.at(r, k);
                let l = lu.a[ir] / pivot;
                lu.a[ir] = l;
                if l == ZERO {
                    continue;
                }
                // columns k+1..=cmax are contiguous in both rows
                let rs = lu.at(r, k + 1);
                let ks = lu.at(k, k + 1);
                for t in 0..cmax - k {
                    let u = lu.a[ks + t];
                    lu.a[rs + t] -= l * u;
                }
            }
        }
        Ok(lu)
    }

    /// Solves `(m − σ I) x = b` in place.
    pub fn solve(&self, b: &mut [C64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != ZERO {
                for r in k + 1..=(k + self.kl).min(n - 1) {
                    b[r] -= self.a[self.at(r, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + self.kl + self.ku).min(n - 1) {
                s -= self.a[self.at(k, c)] * b[c];
            }
            b[k] = s / self.a[self.at(k, k)];
        }
    }
}

enum Factor {
    Band(BandLu),
    Dense(PartialPivLu<C64>),
}

impl Factor {
    fn solve(&self, b: &mut [C64]) {
        match self {
            Factor::Band(lu) => lu.solve(b),
            Factor::Dense(lu) => {
                let mut rhs = Mat::<C64>::from_fn(b.len(), 1, |i, _| b[i]);
                lu.solve_in_place(rhs.as_mut());
                for (i, x) in b.iter_mut().enumerate() {
                    *x = rhs[(i, 0)];
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    /// Krylov subspace size per cycle; raised to `2 n_eigs + 10` if smaller.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Ritz residual target relative to the Ritz value of the inverse.
    pub ritz_tol: f64,
    /// Accepted `‖Mx − λx‖/‖x‖` of returned pairs.
    pub residual_tol: f64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions { krylov_dim: 60, max_restarts: 60, ritz_tol: 1e-13, residual_tol: 1e-9 }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn nrm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Up to `n_eigs` eigenpairs of `m` closest to `sigma`.
///
/// Arnoldi runs on `(m − σ)^{−1}` with explicit restarts from the sum of the
/// wanted Ritz vectors. Returned pairs are checked against `m` itself and
/// ordered like the dense solver; pairs missing `residual_tol` are dropped,
/// except the nearest one, whose failure is an error.
pub fn shift_invert_eigs(m: &OperatorMatrix, sigma: C64, n_eigs: usize, opts: &ArnoldiOptions) -> Result<Vec<EigenPair>> {
    let n = m.dim();
    if n_eigs == 0 || n_eigs >= n {
        return Err(Error::invalid("need 0 < n_eigs < dimension"));
    }
    let factor = match m.storage() {
        Storage::Banded { .. } => Factor::Band(BandLu::factor(m, sigma)?),
        Storage::Dense => {
            let mut a = m.to_faer();
            for i in 0..n {
                a[(i, i)] -= sigma;
            }
            Factor::Dense(a.partial_piv_lu())
        }
    };
    let kdim = opts.krylov_dim.max(2 * n_eigs + 10).min(n);
    // deterministic start vector
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut start: Vec<C64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            C64::new(1.0 + ((state >> 11) as f64 / (1u64 << 53) as f64), 0.0)
        })
        .collect();
    for _cycle in 0..=opts.max_restarts {
        let s = nrm(&start);
        let mut basis: Vec<Vec<C64>> = alloc::vec![start.iter().map(|z| z / s).collect()];
        let mut h = alloc::vec![ZERO; (kdim + 1) * kdim];
        let mut kept = kdim;
        for j in 0..kdim {
            let mut w = basis[j].clone();
            factor.solve(&mut w);
            let wn0 = nrm(&w);
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[i * kdim + j] += c;
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= c * vk;
                    }
                }
            }
            let hn = nrm(&w);
            h[(j + 1) * kdim + j] = C64::new(hn, 0.0);
            if hn <= 1e-14 * wn0 {
                kept = j + 1;
                break;
            }
            if j + 1 < kdim {
                basis.push(w.iter().map(|z| z / hn).collect());
            }
        }
        let hm = Mat::<C64>::from_fn(kept, kept, |i, j| h[i * kdim + j]);
        let e = hm.eigen().map_err(|_| Error::EigenNotConverged(alloc::string::String::from("Ritz problem")))?;
        let mu = e.S().column_vector();
        let y = e.U();
        let beta = h[kept * kdim + kept - 1].norm();
        let mut idx: Vec<usize> = (0..kept).collect();
        idx.sort_by(|&a, &b| mu[b].norm().total_cmp(&mu[a].norm()));
        let wanted = &idx[..n_eigs.min(kept)];
        let mut all_conv = true;
        let mut next = alloc::vec![ZERO; n];
        let mut ritz = Vec::with_capacity(wanted.len());
        for &k in wanted {
            let ynorm = (0..kept).map(|i| y[(i, k)].norm_sqr()).sum::<f64>().sqrt();
            let est = beta * y[(kept - 1, k)].norm() / ynorm;
            let conv = kept < kdim || est <= opts.ritz_tol * mu[k].norm();
            all_conv &= conv;
            let mut x = alloc::vec![ZERO; n];
            for (i, v) in basis.iter().enumerate().take(kept) {
                let c = y[(i, k)] / ynorm;
                for (xk, vk) in x.iter_mut().zip(v) {
                    *xk += c * vk;
                }
            }
            for (a, b) in next.iter_mut().zip(&x) {
                *a += b;
            }
            ritz.push((mu[k], x));
        }
        if all_conv {
            // Ritz pairs far from σ can stall above the residual target on
            // ill-conditioned spectra; only the one nearest σ is mandatory.
            let mut pairs = Vec::with_capacity(ritz.len());
            for (k, (muk, x)) in ritz.into_iter().enumerate() {
                let lam = sigma + C64::new(1.0, 0.0) / muk;
                let mx = m.matvec(&x);
                let r = mx.iter().zip(&x).map(|(a, b)| (a - lam * b).norm_sqr()).sum::<f64>().sqrt() / nrm(&x);
                if r < opts.residual_tol {
                    pairs.push(EigenPair { value: lam, vector: x, residual: r });
                } else if k == 0 {
                    return Err(Error::EigenNotConverged(alloc::format!("shift-invert residual {r:e} at {lam}")));
                }
            }
            sort_pairs(&mut pairs);
            return Ok(pairs);
        }
        start = next;
    }
    Err(Error::EigenNotConverged(alloc::format!("no convergence near {sigma} after {} restarts", opts.max_restarts)))
}
