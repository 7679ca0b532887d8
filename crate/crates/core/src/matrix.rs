//! Complex operator matrices in dense or banded storage.

use alloc::vec::Vec;

use faer::Mat;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Dense,
    /// Equal lower and upper half-bandwidth.
    Banded { half_bandwidth: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    storage: Storage,
    // dense: row-major n×n; banded: row i holds columns i−hb ..= i+hb
    entries: Vec<C64>,
    /// Set by builders that produce `M = Mᵀ`.
    pub symmetric: bool,
}

const ZERO: C64 = C64::new(0.0, 0.0);

impl OperatorMatrix {
    pub fn dense_zeros(dim: usize) -> Self {
        OperatorMatrix { dim, storage: Storage::Dense, entries: alloc::vec![ZERO; dim * dim], symmetric: false }
    }

    pub fn banded_zeros(dim: usize, half_bandwidth: usize) -> Self {
        let hb = half_bandwidth.min(dim.saturating_sub(1));
        OperatorMatrix {
            dim,
            storage: Storage::Banded { half_bandwidth: hb },
            entries: alloc::vec![ZERO; dim * (2 * hb + 1)],
            symmetric: false,
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::dense_zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.entries[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        let mut m = Self::banded_zeros(d.len(), 0);
        m.entries.copy_from_slice(d);
        m.symmetric = true;
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn storage(&self) -> Storage {
        self.storage
    }

    pub fn half_bandwidth(&self) -> usize {
        match self.storage {
            Storage::Dense => self.dim.saturating_sub(1),
            Storage::Banded { half_bandwidth } => half_bandwidth,
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        match self.storage {
            Storage::Dense => Some(i * self.dim + j),
            Storage::Banded { half_bandwidth: hb } => {
                if i.abs_diff(j) > hb {
                    None
                } else {
                    Some(i * (2 * hb + 1) + j + hb - i)
                }
            }
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.slot(i, j).map_or(ZERO, |k| self.entries[k])
    }

    /// Panics when `(i, j)` lies outside the band.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        let k = self.slot(i, j).expect("entry outside the band");
        self.entries[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        let k = self.slot(i, j).expect("entry outside the band");
        self.entries[k] += v;
    }

    pub fn add_diagonal(&mut self, d: &[C64]) {
        assert_eq!(d.len(), self.dim);
        for (i, &v) in d.iter().enumerate() {
            self.add(i, i, v);
        }
    }

    pub fn scale(&mut self, s: C64) {
        for e in &mut self.entries {
            *e *= s;
        }
    }

    /// Nonzero column range of row `i`.
    #[inline]
    pub fn row_range(&self, i: usize) -> core::ops::Range<usize> {
        match self.storage {
            Storage::Dense => 0..self.dim,
            Storage::Banded { half_bandwidth: hb } => i.saturating_sub(hb)..(i + hb + 1).min(self.dim),
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row_range(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `max |M − Mᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in self.row_range(i) {
                if j > i {
                    worst = worst.max((self.get(i, j) - self.get(j, i)).norm());
                }
            }
        }
        worst
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|e| e.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.norm()))
    }

    pub fn to_dense(&self) -> OperatorMatrix {
        match self.storage {
            Storage::Dense => self.clone(),
            Storage::Banded { .. } => {
                let mut m = Self::dense_zeros(self.dim);
                for i in 0..self.dim {
                    for j in self.row_range(i) {
                        m.entries[i * self.dim + j] = self.get(i, j);
                    }
                }
                m.symmetric = self.symmetric;
                m
            }
        }
    }

    pub fn to_faer(&self) -> Mat<C64> {
        Mat::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn real_part_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.dim, self.dim, |i, j| self.get(i, j).re)
    }

    /// Entrywise `self + other` (same dimension, result in the wider storage).
    pub fn plus(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dim != other.dim {
            return Err(Error::invalid("dimension mismatch"));
        }
        let mut out = if self.half_bandwidth() >= other.half_bandwidth() { self.clone() } else { other.clone() };
        let src = if self.half_bandwidth() >= other.half_bandwidth() { other } else { self };
        for i in 0..self.dim {
            for j in src.row_range(i) {
                out.add(i, j, src.get(i, j));
            }
        }
        out.symmetric = self.symmetric && other.symmetric;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_roundtrip() {
        let mut m = OperatorMatrix::banded_zeros(6, 2);
        for i in 0..6 {
            for j in m.row_range(i) {
                m.set(i, j, C64::new(i as f64, j as f64));
            }
        }
        assert_eq!(m.get(0, 3), ZERO);
        assert_eq!(m.get(4, 2), C64::new(4.0, 2.0));
        let d = m.to_dense();
        let x: Vec<C64> = (0..6).map(|k| C64::new(1.0, k as f64)).collect();
        assert_eq!(m.matvec(&x), d.matvec(&x));
        assert!(m.asymmetry() > 0.0);
    }

    #[test]
    fn plus_mixes_storage() {
        let a = OperatorMatrix::from_diagonal(&[C64::new(1.0, 0.0); 4]);
        let b = OperatorMatrix::from_fn(4, |i, j| C64::new((i + j) as f64, 0.0));
        let c = a.plus(&b).unwrap();
        assert_eq!(c.storage(), Storage::Dense);
        assert_eq!(c.get(2, 2), C64::new(5.0, 0.0));
    }
}
