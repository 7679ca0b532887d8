//! Two-electron singlet on a grid.
//!
//! The spatial wavefunction is symmetric, so it is stored on pairs `i ≤ j`
//! with basis functions `c_ij(|i j⟩ + |j i⟩)`, `c_ij = 1/√2` off the diagonal
//! and `1/2` on it. The pair basis is orthonormal, the Hamiltonian stays
//! complex symmetric and c-products of coefficient vectors take weight 1.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::density::ComplexDensity;
use crate::discretization::{kinetic_matrix, KineticKind};
use crate::eigen::{
    continuum_mask, eig_complex, eigenvalues, select_resonance, shift_invert_eigs, ArnoldiOptions, EigenPair,
    OneElectron, ResonanceState, Spectrum, PROBE_DTHETA,
};
use crate::grid::Grid;
use crate::matrix::OperatorMatrix;
use crate::potential::{threshold_energy, InteractionSpec, PotentialSpec};
use crate::{check_theta, cis, Error, Result, C64};

/// Largest grid for the full `N(N+1)/2`-dimensional dense solve.
pub const DENSE_2E_MAX_POINTS: usize = 80;

/// Row-major numbering of pairs `i ≤ j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    pub n: usize,
}

impl PairIndex {
    pub fn new(n: usize) -> Self {
        PairIndex { n }
    }

    pub fn dim(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    /// Index of the unordered pair `{i, j}`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // i n − i(i−1)/2 pairs precede row i
        i * self.n - i * i.saturating_sub(1) / 2 + (j - i)
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.dim());
        for i in 0..self.n {
            for j in i..self.n {
                out.push((i, j));
            }
        }
        out
    }

    pub fn coefficient(i: usize, j: usize) -> f64 {
        if i == j {
            0.5
        } else {
            core::f64::consts::FRAC_1_SQRT_2
        }
    }
}

/// Two-electron problem: one external potential, one interaction.
#[derive(Debug, Clone)]
pub struct TwoElectron {
    pub grid: Grid,
    pub spec: PotentialSpec,
    pub interaction: InteractionSpec,
    pub kinetic: KineticKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoElectronBackend {
    /// Full diagonalization; FGH grids up to 80 points.
    Dense,
    /// Shift-invert Arnoldi on the banded finite-difference matrix.
    ShiftInvert { shift: C64, n_eigs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoElectronOptions {
    pub backend: TwoElectronBackend,
    /// Energy window; defaults to above the two-electron threshold.
    pub window: Option<(f64, f64)>,
    pub arnoldi: ArnoldiOptions,
}

impl Default for TwoElectronOptions {
    fn default() -> Self {
        TwoElectronOptions { backend: TwoElectronBackend::Dense, window: None, arnoldi: ArnoldiOptions::default() }
    }
}

/// A two-electron eigenstate with its pair coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    pub grid: Grid,
    pub state: ResonanceState,
}

impl PairState {
    pub fn energy(&self) -> C64 {
        self.state.energy
    }

    pub fn width(&self) -> f64 {
        self.state.width()
    }

    /// `Ψ(x_i, x_j)`, normalized so that `Σ Ψ² Δx² = 1`.
    pub fn amplitude(&self, i: usize, j: usize) -> C64 {
        let idx = PairIndex::new(self.grid.n_points);
        let c = self.state.vector[idx.index(i, j)];
        if i == j {
            c / self.grid.spacing
        } else {
            c / (core::f64::consts::SQRT_2 * self.grid.spacing)
        }
    }

    /// Full row-major `N × N` amplitude table.
    pub fn amplitude_grid(&self) -> Vec<C64> {
        let n = self.grid.n_points;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.amplitude(i, j));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TwoElectronSolution {
    pub pair: PairState,
    /// Eigenvalues that were searched.
    pub eigenvalues: Vec<C64>,
    pub continuum: Vec<bool>,
    pub threshold: C64,
}

/// `n(x_i) = 2 Σ_j Ψ(x_i, x_j)² Δx`, integrating to 2.
pub fn pair_density(pair: &PairState) -> Result<ComplexDensity> {
    let g = pair.grid;
    let n = g.n_points;
    let vals = (0..n)
        .map(|i| (0..n).map(|j| pair.amplitude(i, j).powi(2)).sum::<C64>() * (2.0 * g.spacing))
        .collect();
    ComplexDensity::new(g, vals, 2)
}

/// Scaled two-electron Hamiltonian on the pair basis.
///
/// FGH kinetics give a dense matrix and are limited to 80 grid points;
/// finite differences give a banded matrix of half-bandwidth about `3n` for
/// the sixth-order stencil.
pub fn assemble_2e_hamiltonian(
    grid: &Grid,
    spec: &PotentialSpec,
    inter: &InteractionSpec,
    theta: f64,
    kinetic: KineticKind,
) -> Result<OperatorMatrix> {
    check_theta(theta)?;
    spec.validate()?;
    inter.validate()?;
    let n = grid.n_points;
    let idx = PairIndex::new(n);
    let dim = idx.dim();
    if kinetic == KineticKind::Fgh && n > DENSE_2E_MAX_POINTS {
        return Err(Error::DimensionTooLarge { dim, limit: PairIndex::new(DENSE_2E_MAX_POINTS).dim() });
    }
    let t = kinetic_matrix(grid, theta, kinetic)?;
    let pairs = idx.pairs();

    // collect entries first so the band can be sized exactly
    let mut entries: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for (row, &(p, q)) in pairs.iter().enumerate() {
        let c_row = PairIndex::coefficient(p, q);
        for (a, b) in [(p, q), (q, p)] {
            // T on the first electron: ⟨a b| T₁ |c b⟩ = T_ac
            for c in t.row_range(a) {
                let tac = t.get(a, c);
                if tac == C64::new(0.0, 0.0) {
                    continue;
                }
                let mult = if c == b { 2.0 } else { 1.0 };
                let col = idx.index(c, b);
                *entries.entry((row, col)).or_default() += tac * (c_row * PairIndex::coefficient(c, b) * mult);
            }
            // T on the second electron
            for d in t.row_range(b) {
                let tbd = t.get(b, d);
                if tbd == C64::new(0.0, 0.0) {
                    continue;
                }
                let mult = if a == d { 2.0 } else { 1.0 };
                let col = idx.index(a, d);
                *entries.entry((row, col)).or_default() += tbd * (c_row * PairIndex::coefficient(a, d) * mult);
            }
        }
    }
    let e = cis(theta);
    let v: Vec<C64> = spec.eval_scaled(&grid.points(), theta)?;
    for (row, &(p, q)) in pairs.iter().enumerate() {
        let u = C64::new(grid.x(p) - grid.x(q), 0.0) * e;
        let d = v[p] + v[q] + inter.eval(u)?;
        *entries.entry((row, row)).or_default() += d;
    }

    let mut m = match kinetic {
        KineticKind::Fgh => OperatorMatrix::dense_zeros(dim),
        _ => {
            let hb = entries.keys().map(|&(r, c)| r.abs_diff(c)).max().unwrap_or(0);
            OperatorMatrix::banded_zeros(dim, hb)
        }
    };
    for ((r, c), val) in entries {
        m.set(r, c, val);
    }
    m.symmetric = true;
    Ok(m)
}

impl TwoElectron {
    pub fn new(grid: Grid, spec: PotentialSpec, interaction: InteractionSpec, kinetic: KineticKind) -> Result<Self> {
        spec.validate()?;
        interaction.validate()?;
        Ok(TwoElectron { grid, spec, interaction, kinetic })
    }

    pub fn hamiltonian(&self, theta: f64) -> Result<OperatorMatrix> {
        assemble_2e_hamiltonian(&self.grid, &self.spec, &self.interaction, theta, self.kinetic)
    }

    /// Energy of the one-electron system left behind, on the same grid.
    pub fn threshold(&self, theta: f64) -> Result<C64> {
        threshold_energy(&self.spec, 2, || {
            Ok(OneElectron::new(self.grid, self.spec.clone(), self.kinetic)?.ground_or_ler(theta)?.state.energy)
        })
    }

    /// Full dense spectrum.
    pub fn spectrum(&self, theta: f64) -> Result<Spectrum> {
        let h = self.hamiltonian(theta)?;
        if h.storage() != crate::matrix::Storage::Dense {
            return Err(Error::invalid("full spectra need the dense backend"));
        }
        Ok(Spectrum { theta, pairs: eig_complex(&h)?, weight: 1.0 })
    }

    fn eigs(&self, theta: f64, opts: &TwoElectronOptions) -> Result<Vec<EigenPair>> {
        let h = self.hamiltonian(theta)?;
        match opts.backend {
            TwoElectronBackend::Dense => {
                if h.storage() != crate::matrix::Storage::Dense {
                    return Err(Error::invalid("dense backend needs FGH kinetics"));
                }
                eig_complex(&h)
            }
            TwoElectronBackend::ShiftInvert { shift, n_eigs } => shift_invert_eigs(&h, shift, n_eigs, &opts.arnoldi),
        }
    }

    /// Lowest resonance above the threshold.
    ///
    /// Continuum states are removed by a second solve at `θ + δθ`, measured
    /// against the real part of the threshold.
    pub fn solve(&self, theta: f64, opts: &TwoElectronOptions) -> Result<TwoElectronSolution> {
        let e_th = self.threshold(theta)?;
        let pairs = self.eigs(theta, opts)?;
        let values: Vec<C64> = pairs.iter().map(|p| p.value).collect();
        let continuum = if theta > 0.0 {
            let probe = match opts.backend {
                TwoElectronBackend::Dense => eigenvalues(&self.hamiltonian(theta + PROBE_DTHETA)?)?,
                _ => self.eigs(theta + PROBE_DTHETA, opts)?.into_iter().map(|p| p.value).collect(),
            };
            continuum_mask(&values, &probe, e_th.re, PROBE_DTHETA)
        } else {
            alloc::vec![false; pairs.len()]
        };
        let window = opts.window.unwrap_or((e_th.re, f64::INFINITY));
        let state = select_resonance(&pairs, window, None, Some(&continuum), 1.0)?;
        Ok(TwoElectronSolution {
            pair: PairState { grid: self.grid, state },
            eigenvalues: values,
            continuum,
            threshold: e_th,
        })
    }
}

/// Dense solve of the lowest resonance of the two-electron problem.
pub fn solve_2e_ler(problem: &TwoElectron, theta: f64, opts: &TwoElectronOptions) -> Result<TwoElectronSolution> {
    problem.solve(theta, opts)
}
