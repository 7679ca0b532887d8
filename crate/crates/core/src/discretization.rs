//! Complex-scaled one-electron Hamiltonians on grids and in spectral bases.
//!
//! Under `x -> x e^{iθ}` the kinetic operator picks up `e^{−2iθ}` and the
//! potential is evaluated on the rotated points.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use faer::Mat;

use crate::grid::Grid;
use crate::matrix::OperatorMatrix;
use crate::potential::PotentialSpec;
use crate::{check_theta, cis, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticKind {
    Fgh,
    Fd2,
    Fd4,
    Fd6,
}

impl KineticKind {
    pub fn stencil_order(self) -> Option<usize> {
        match self {
            KineticKind::Fgh => None,
            KineticKind::Fd2 => Some(2),
            KineticKind::Fd4 => Some(4),
            KineticKind::Fd6 => Some(6),
        }
    }
}

/// First row of the real periodic Fourier-grid kinetic matrix `T_{0m}`.
///
/// This is `−½ d²/dx²` represented exactly on the `N` plane waves that the
/// grid resolves, with period `N Δx`.
pub fn fgh_row(grid: &Grid) -> Vec<f64> {
    let n = grid.n_points;
    let nf = n as f64;
    let dx2 = grid.spacing * grid.spacing;
    let even = n % 2 == 0;
    (0..n)
        .map(|m| {
            if m == 0 {
                let corr = if even { 1.0 + 2.0 / (nf * nf) } else { 1.0 - 1.0 / (nf * nf) };
                PI * PI / (6.0 * dx2) * corr
            } else {
                let arg = PI * m as f64 / nf;
                let s = arg.sin();
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let num = if even { 1.0 } else { arg.cos() };
                sign * PI * PI * num / (nf * nf * dx2 * s * s)
            }
        })
        .collect()
}

/// `e^{−2iθ} T_FGH`, dense complex-symmetric Toeplitz.
pub fn fgh_kinetic(grid: &Grid, theta: f64) -> Result<OperatorMatrix> {
    check_theta(theta)?;
    let row = fgh_row(grid);
    let f = cis(-2.0 * theta);
    let mut m = OperatorMatrix::from_fn(grid.n_points, |i, j| f * row[i.abs_diff(j)]);
    m.symmetric = true;
    Ok(m)
}

/// Central second-derivative coefficients `c_0, c_1, ...`.
pub fn fd_coefficients(order: usize) -> Result<&'static [f64]> {
    match order {
        2 => Ok(&[-2.0, 1.0]),
        4 => Ok(&[-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]),
        6 => Ok(&[-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0]),
        _ => Err(Error::UnsupportedStencil(order)),
    }
}

/// `e^{−2iθ}(−½ D²)` with a Dirichlet-truncated central stencil.
pub fn fd_kinetic(grid: &Grid, theta: f64, stencil_order: usize) -> Result<OperatorMatrix> {
    let c = fd_coefficients(stencil_order)?;
    check_theta(theta)?;
    let n = grid.n_points;
    let f = cis(-2.0 * theta) * (-0.5 / (grid.spacing * grid.spacing));
    let mut m = OperatorMatrix::banded_zeros(n, c.len() - 1);
    for i in 0..n {
        for (k, &ck) in c.iter().enumerate() {
            if i + k < n {
                m.set(i, i + k, f * ck);
                m.set(i + k, i, f * ck);
            }
        }
    }
    m.symmetric = true;
    Ok(m)
}

pub fn kinetic_matrix(grid: &Grid, theta: f64, kind: KineticKind) -> Result<OperatorMatrix> {
    match kind.stencil_order() {
        None => fgh_kinetic(grid, theta),
        Some(order) => fd_kinetic(grid, theta, order),
    }
}

/// `H = T_θ + diag(v(x_j e^{iθ}))`.
pub fn assemble_1e_hamiltonian(
    kinetic: &OperatorMatrix,
    spec: &PotentialSpec,
    grid: &Grid,
    theta: f64,
) -> Result<OperatorMatrix> {
    if kinetic.dim() != grid.n_points {
        return Err(Error::GridMismatch);
    }
    check_theta(theta)?;
    let v = spec.eval_scaled(&grid.points(), theta)?;
    assemble_with_potential(kinetic, &v)
}

/// `T + diag(v)` for an already sampled (possibly Kohn-Sham) potential.
pub fn assemble_with_potential(kinetic: &OperatorMatrix, v: &[C64]) -> Result<OperatorMatrix> {
    if kinetic.dim() != v.len() {
        return Err(Error::GridMismatch);
    }
    let mut h = kinetic.clone();
    h.add_diagonal(v);
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisKind {
    /// `χ_n = √(2/L) sin(nπ(x − x_min)/L)`, `n = 1..=size`.
    ParticleInBox { x_min: f64, x_max: f64 },
    /// Oscillator eigenfunctions of `−½d² + ½ω²(x − center)²`.
    HarmonicOscillator { frequency: f64, center: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSet {
    pub kind: BasisKind,
    pub size: usize,
    /// Total Gauss–Legendre points; defaults to `8 × size`.
    pub quadrature_points: Option<usize>,
}

const PANEL_ORDER: usize = 16;
pub const QUADRATURE_GUARD: f64 = 1e-10;

/// Cap on automatic quadrature refinement.
pub const MAX_AUTO_POINTS: usize = 1 << 16;

impl BasisSet {
    pub fn particle_in_box(x_min: f64, x_max: f64, size: usize) -> Self {
        BasisSet { kind: BasisKind::ParticleInBox { x_min, x_max }, size, quadrature_points: None }
    }

    pub fn harmonic_oscillator(frequency: f64, size: usize) -> Self {
        BasisSet { kind: BasisKind::HarmonicOscillator { frequency, center: 0.0 }, size, quadrature_points: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::invalid("basis size must be at least 1"));
        }
        match self.kind {
            BasisKind::ParticleInBox { x_min, x_max } if !(x_max > x_min) => {
                Err(Error::invalid("box needs x_max > x_min"))
            }
            BasisKind::HarmonicOscillator { frequency, .. } if !(frequency > 0.0) => {
                Err(Error::invalid("oscillator basis needs frequency > 0"))
            }
            _ => Ok(()),
        }
    }

    /// Interval outside which every basis function is negligible.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            BasisKind::ParticleInBox { x_min, x_max } => (x_min, x_max),
            BasisKind::HarmonicOscillator { frequency, center } => {
                let half = ((2 * self.size + 1) as f64).sqrt() + 10.0;
                let r = half / frequency.sqrt();
                (center - r, center + r)
            }
        }
    }

    /// All basis functions at `x`.
    pub fn values_at(&self, x: f64) -> Vec<f64> {
        let n = self.size;
        match self.kind {
            BasisKind::ParticleInBox { x_min, x_max } => {
                let l = x_max - x_min;
                if x < x_min || x > x_max {
                    return alloc::vec![0.0; n];
                }
                let norm = (2.0 / l).sqrt();
                (1..=n).map(|k| norm * (k as f64 * PI * (x - x_min) / l).sin()).collect()
            }
            BasisKind::HarmonicOscillator { frequency, center } => ho_values(n, frequency, x - center),
        }
    }

    /// Real kinetic matrix `⟨χ_m|−½d²|χ_n⟩`.
    pub fn kinetic(&self) -> Vec<f64> {
        let n = self.size;
        let mut t = alloc::vec![0.0; n * n];
        match self.kind {
            BasisKind::ParticleInBox { x_min, x_max } => {
                let l = x_max - x_min;
                for k in 0..n {
                    let q = (k + 1) as f64 * PI / l;
                    t[k * n + k] = 0.5 * q * q;
                }
            }
            BasisKind::HarmonicOscillator { frequency: w, .. } => {
                for k in 0..n {
                    t[k * n + k] = 0.25 * w * (2 * k + 1) as f64;
                    if k + 2 < n {
                        let off = -0.25 * w * (((k + 1) * (k + 2)) as f64).sqrt();
                        t[k * n + k + 2] = off;
                        t[(k + 2) * n + k] = off;
                    }
                }
            }
        }
        t
    }

    fn quadrature(&self, points: usize) -> (Vec<f64>, Vec<f64>) {
        let (a, b) = self.support();
        let panels = points.div_ceil(PANEL_ORDER).max(1);
        crate::quadrature::composite(a, b, panels, PANEL_ORDER)
    }

    pub fn default_quadrature_points(&self) -> usize {
        self.quadrature_points.unwrap_or(8 * self.size)
    }

    /// `φ(x_j) = Σ_m c_m χ_m(x_j)`.
    pub fn project(&self, coeffs: &[C64], xs: &[f64]) -> Vec<C64> {
        xs.iter()
            .map(|&x| self.values_at(x).iter().zip(coeffs).map(|(&chi, &c)| c * chi).sum())
            .collect()
    }
}

/// Oscillator functions by upward recurrence, rescaling the running values
/// so large orders near the turning region neither overflow nor underflow.
fn ho_values(n: usize, w: f64, x: f64) -> Vec<f64> {
    let xi = w.sqrt() * x;
    let mut out = alloc::vec![0.0; n];
    // ψ_k = p_k · e^{log_scale}
    let mut log_scale = -0.5 * xi * xi + 0.25 * (w / PI).ln();
    let (mut prev, mut cur) = (0.0f64, 1.0f64);
    let mut scaled = Vec::with_capacity(n);
    let mut scales = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            let next = (2.0 / k as f64).sqrt() * xi * cur - ((k - 1) as f64 / k as f64).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        let mag = cur.abs();
        if mag > 1e150 || (mag < 1e-150 && mag > 0.0) {
            let s = mag.ln();
            cur /= mag;
            prev /= mag;
            log_scale += s;
        }
        scaled.push(cur);
        scales.push(log_scale);
    }
    for k in 0..n {
        let e = scales[k];
        out[k] = if e < -745.0 { 0.0 } else { scaled[k] * e.exp() };
    }
    out
}

fn potential_matrix(basis: &BasisSet, spec: &PotentialSpec, theta: f64, points: usize) -> Result<Mat<C64>> {
    let (xs, ws) = basis.quadrature(points);
    let v = spec.eval_scaled(&xs, theta)?;
    let n = basis.size;
    let nq = xs.len();
    let chi_rows: Vec<Vec<f64>> = xs.iter().map(|&x| basis.values_at(x)).collect();
    let chi = Mat::<C64>::from_fn(nq, n, |q, m| C64::new(chi_rows[q][m], 0.0));
    let weighted = Mat::<C64>::from_fn(nq, n, |q, m| v[q] * (ws[q] * chi_rows[q][m]));
    let vm = chi.transpose() * &weighted;
    Ok(Mat::from_fn(n, n, |i, j| 0.5 * (vm[(i, j)] + vm[(j, i)])))
}

/// `H_mn = e^{−2iθ}T_mn + ∫χ_m v(x e^{iθ}) χ_n dx`.
///
/// The potential integrals are repeated with twice the quadrature points; a
/// change beyond `1e−10` in any entry is reported as non-convergence. Without
/// an explicit point count the rule keeps doubling up to `MAX_AUTO_POINTS`.
pub fn basis_hamiltonian(basis: &BasisSet, spec: &PotentialSpec, theta: f64) -> Result<OperatorMatrix> {
    basis.validate()?;
    check_theta(theta)?;
    let n = basis.size;
    let mut points = basis.default_quadrature_points();
    let mut v1 = potential_matrix(basis, spec, theta, points)?;
    let v2 = loop {
        let v2 = potential_matrix(basis, spec, theta, 2 * points)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((v1[(i, j)] - v2[(i, j)]).norm());
            }
        }
        if worst < QUADRATURE_GUARD {
            break v2;
        }
        points *= 2;
        if basis.quadrature_points.is_some() || 2 * points > MAX_AUTO_POINTS || !worst.is_finite() {
            return Err(Error::Quadrature(worst));
        }
        v1 = v2;
    };
    let t = basis.kinetic();
    let f = cis(-2.0 * theta);
    let mut h = OperatorMatrix::from_fn(n, |i, j| f * t[i * n + j] + v2[(i, j)]);
    h.symmetric = true;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eig_complex;

    /// `F⁻¹ diag(k²/2) F` from explicit plane waves, Nyquist mode included.
    fn dft_kinetic(n: usize, dx: f64) -> Vec<f64> {
        let l = n as f64 * dx;
        let modes: Vec<i64> = (0..n as i64).map(|m| if m <= n as i64 / 2 { m } else { m - n as i64 }).collect();
        (0..n)
            .map(|j| {
                modes
                    .iter()
                    .map(|&m| {
                        let k = 2.0 * PI * m as f64 / l;
                        0.5 * k * k * (k * j as f64 * dx).cos() / n as f64
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn fgh_matches_plane_wave_construction() {
        for (lo, hi, n) in [(-20.0, 20.0, 801), (-3.0, 3.0, 64), (0.0, 1.0, 9)] {
            let g = Grid::new(lo, hi, n).unwrap();
            let row = fgh_row(&g);
            let oracle = dft_kinetic(n, g.spacing);
            let scale = row[0].abs();
            for (a, b) in row.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-11 * scale, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn fgh_plane_wave_eigen_action() {
        let g = Grid::new(-5.0, 5.0, 64).unwrap();
        let theta = 0.2;
        let t = fgh_kinetic(&g, theta).unwrap();
        let k = 2.0 * PI * 3.0 / g.period();
        let x: Vec<C64> = g.points().iter().map(|&x| C64::new((k * x).cos(), 0.0)).collect();
        let y = t.matvec(&x);
        let lam = cis(-2.0 * theta) * (0.5 * k * k);
        for (yi, xi) in y.iter().zip(&x) {
            assert!((yi - lam * xi).norm() < 1e-10);
        }
    }

    #[test]
    fn fgh_zero_angle_is_real() {
        let g = Grid::new(-4.0, 4.0, 40).unwrap();
        let t = fgh_kinetic(&g, 0.0).unwrap();
        assert!(t.is_real());
        assert!(t.asymmetry() == 0.0);
        assert!(fgh_kinetic(&g, 0.8).is_err());
    }

    #[test]
    fn fd2_stencil() {
        let g = Grid::new(0.0, 1.0, 11).unwrap();
        let t = fd_kinetic(&g, 0.0, 2).unwrap();
        let dx2 = g.spacing * g.spacing;
        assert!((t.get(3, 3).re - 1.0 / dx2).abs() < 1e-12);
        assert!((t.get(3, 4).re + 0.5 / dx2).abs() < 1e-12);
        assert_eq!(t.get(3, 5), C64::new(0.0, 0.0));
        assert!(matches!(fd_kinetic(&g, 0.0, 3), Err(Error::UnsupportedStencil(3))));
    }

    #[test]
    fn fd2_box_spectrum() {
        let g = Grid::new(0.0, 1.0, 21).unwrap();
        let t = fd_kinetic(&g, 0.0, 2).unwrap();
        let pairs = eig_complex(&t).unwrap();
        let n = g.n_points as f64;
        let dx = g.spacing;
        for (j, p) in pairs.iter().enumerate() {
            let k = PI * (j + 1) as f64 / ((n + 1.0) * dx);
            let want = 2.0 * (1.0 - (k * dx).cos()) / (2.0 * dx * dx);
            assert!((p.value.re - want).abs() < 1e-9, "{j}");
        }
    }

    #[test]
    fn fd6_oscillator_ground_state() {
        let spec = PotentialSpec::harmonic(1.0);
        let g = Grid::new(-10.0, 10.0, 801).unwrap();
        let h = assemble_1e_hamiltonian(&fd_kinetic(&g, 0.0, 6).unwrap(), &spec, &g, 0.0).unwrap();
        let e0 = eig_complex(&h).unwrap()[0].value;
        assert!((e0.re - 0.5).abs() < 1e-8, "{e0}");
    }

    #[test]
    fn free_hamiltonian_is_kinetic() {
        let g = Grid::new(-4.0, 4.0, 32).unwrap();
        let t = fgh_kinetic(&g, 0.1).unwrap();
        let zero = PotentialSpec::custom(alloc::vec![crate::potential::Term::Harmonic { k: 0.0 }]);
        let h = assemble_1e_hamiltonian(&t, &zero, &g, 0.1).unwrap();
        assert_eq!(h, t);
    }

    #[test]
    fn basis_functions_orthonormal() {
        for basis in [BasisSet::particle_in_box(-3.0, 5.0, 40), BasisSet::harmonic_oscillator(1.3, 180)] {
            let (xs, ws) = basis.quadrature(16 * basis.size);
            let vals: Vec<Vec<f64>> = xs.iter().map(|&x| basis.values_at(x)).collect();
            for m in 0..basis.size {
                for n in m..basis.size {
                    let s: f64 = (0..xs.len()).map(|q| ws[q] * vals[q][m] * vals[q][n]).sum();
                    let want = if m == n { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-10, "{m} {n} {s}");
                }
            }
        }
    }

    #[test]
    fn pib_free_diagonal() {
        let basis = BasisSet::particle_in_box(0.0, 2.0, 10);
        let zero = PotentialSpec::custom(alloc::vec![crate::potential::Term::Harmonic { k: 0.0 }]);
        let h = basis_hamiltonian(&basis, &zero, 0.0).unwrap();
        for n in 0..10 {
            let want = ((n + 1) as f64 * PI / 2.0).powi(2) / 2.0;
            assert!((h.get(n, n).re - want).abs() < 1e-12);
            if n > 0 {
                assert!(h.get(n, 0).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn ho_basis_diagonalizes_oscillator() {
        let basis = BasisSet::harmonic_oscillator(1.0, 30);
        let h = basis_hamiltonian(&basis, &PotentialSpec::harmonic(1.0), 0.0).unwrap();
        for m in 0..30 {
            for n in 0..30 {
                let want = if m == n { m as f64 + 0.5 } else { 0.0 };
                assert!((h.get(m, n) - want).norm() < 1e-10, "{m} {n}");
            }
        }
    }

    #[test]
    fn quadrature_guard_trips() {
        let mut basis = BasisSet::particle_in_box(-20.0, 20.0, 80);
        basis.quadrature_points = Some(32);
        let spec = PotentialSpec::double_sigmoid_gaussian(4.0, 6.5, 0.5, 4.0, 2.0);
        assert!(matches!(basis_hamiltonian(&basis, &spec, 0.1), Err(Error::Quadrature(_))));
    }

    #[test]
    fn scaled_oscillator_spectrum() {
        let g = Grid::new(-12.0, 12.0, 512).unwrap();
        let spec = PotentialSpec::harmonic(1.0);
        let h = assemble_1e_hamiltonian(&fgh_kinetic(&g, 0.2).unwrap(), &spec, &g, 0.2).unwrap();
        assert!(h.asymmetry() < 1e-12);
        let pairs = eig_complex(&h).unwrap();
        for n in 0..5 {
            assert!((pairs[n].value - (n as f64 + 0.5)).norm() < 1e-7);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn builders_are_complex_symmetric(n in 8usize..60, theta in 0.0f64..0.7, order in prop::sample::select(alloc::vec![2usize, 4, 6])) {
                let g = Grid::new(-3.0, 4.0, n).unwrap();
                let spec = PotentialSpec::double_sigmoid_gaussian(4.0, 6.0, 0.5, 4.0, 2.0);
                for t in [fgh_kinetic(&g, theta).unwrap(), fd_kinetic(&g, theta, order).unwrap()] {
                    let h = assemble_1e_hamiltonian(&t, &spec, &g, theta).unwrap();
                    prop_assert!(h.asymmetry() < 1e-12);
                }
            }

            #[test]
            fn zero_angle_builders_are_real(n in 8usize..40) {
                let g = Grid::new(-3.0, 4.0, n).unwrap();
                let spec = PotentialSpec::double_sigmoid_gaussian(4.0, 6.0, 0.5, 4.0, 2.0);
                let h = assemble_1e_hamiltonian(&fgh_kinetic(&g, 0.0).unwrap(), &spec, &g, 0.0).unwrap();
                prop_assert!(h.is_real());
                let b = basis_hamiltonian(&BasisSet::particle_in_box(-3.0, 4.0, n), &spec, 0.0).unwrap();
                prop_assert!(b.is_real());
            }
        }
    }
}
