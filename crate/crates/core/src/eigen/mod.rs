//! Complex-symmetric eigenproblems, c-normalization, resonance selection,
//! θ-trajectories and the two-block real certification of eigenpairs.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::discretization::{assemble_1e_hamiltonian, kinetic_matrix, KineticKind};
use crate::grid::Grid;
use crate::matrix::OperatorMatrix;
use crate::potential::{threshold_energy, PotentialSpec};
use crate::{check_theta, Error, Result, C64, EPS_IM};

mod sparse;

pub use sparse::{shift_invert_eigs, ArnoldiOptions, BandLu};

/// Relative residual accepted from the dense solver.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Angle increment of the rotated-continuum probe.
pub const PROBE_DTHETA: f64 = 1e-3;

/// Minimum normalized overlap for continuation.
pub const TRACKING_MIN_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: C64,
    /// Right eigenvector; for `M = Mᵀ` the left one is its plain transpose.
    pub vector: Vec<C64>,
    /// `‖Mφ − λφ‖/‖φ‖`.
    pub residual: f64,
}

fn order(a: &C64, b: &C64) -> core::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.abs().total_cmp(&b.im.abs()))
}

pub(crate) fn sort_pairs(pairs: &mut [EigenPair]) {
    pairs.sort_by(|a, b| order(&a.value, &b.value));
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// All eigenpairs of a dense or banded matrix, ordered by `Re λ` then `|Im λ|`.
///
/// Exactly real symmetric input goes to the symmetric solver, so its
/// spectrum comes back exactly real.
pub fn eig_complex(m: &OperatorMatrix) -> Result<Vec<EigenPair>> {
    let n = m.dim();
    let real_sym = m.is_real() && m.asymmetry() == 0.0;
    let (values, vectors): (Vec<C64>, Mat<C64>) = if real_sym {
        let a = m.real_part_faer();
        let e = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigenNotConverged(alloc::string::String::from("symmetric QR")))?;
        let s = e.S().column_vector();
        let u = e.U();
        ((0..n).map(|i| C64::new(s[i], 0.0)).collect(), Mat::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0)))
    } else {
        let a = m.to_faer();
        let e = a
            .eigen()
            .map_err(|_| Error::EigenNotConverged(alloc::string::String::from("complex QR")))?;
        let s = e.S().column_vector();
        ((0..n).map(|i| s[i]).collect(), e.U().to_owned())
    };
    let mv = m.to_faer() * &vectors;
    let mut pairs = Vec::with_capacity(n);
    for j in 0..n {
        let lam = values[j];
        let vec: Vec<C64> = (0..n).map(|i| vectors[(i, j)]).collect();
        let r = (0..n).map(|i| (mv[(i, j)] - lam * vec[i]).norm_sqr()).sum::<f64>().sqrt() / norm2(&vec);
        let (lam, vec, r) = if r < RESIDUAL_TOL { (lam, vec, r) } else { refine(m, lam, vec)? };
        pairs.push(EigenPair { value: lam, vector: vec, residual: r });
    }
    sort_pairs(&mut pairs);
    Ok(pairs)
}

/// Inverse iteration on a pair the QR pass left slightly above tolerance.
///
/// The shift is nudged off `λ` so the factorization stays regular; the
/// eigenvalue is updated with whichever Rayleigh quotient, unconjugated or
/// conjugated, leaves the smaller residual.
fn refine(m: &OperatorMatrix, mut lam: C64, mut vec: Vec<C64>) -> Result<(C64, Vec<C64>, f64)> {
    let n = m.dim();
    let r = |lam: C64, v: &[C64]| -> f64 {
        let mv = m.matvec(v);
        mv.iter().zip(v).map(|(a, b)| (a - lam * b).norm_sqr()).sum::<f64>().sqrt() / norm2(v)
    };
    let mut res = r(lam, &vec);
    for _ in 0..5 {
        let shift = lam + C64::new(1.0, 1.0) * (1e-9 * lam.norm().max(1.0));
        let mut a = m.to_faer();
        for i in 0..n {
            a[(i, i)] -= shift;
        }
        let lu = a.partial_piv_lu();
        let mut rhs = Mat::from_fn(n, 1, |i, _| vec[i]);
        lu.solve_in_place(rhs.as_mut());
        let scale = 1.0 / (0..n).map(|i| rhs[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        let next: Vec<C64> = (0..n).map(|i| rhs[(i, 0)] * scale).collect();
        let mv = m.matvec(&next);
        let num: C64 = next.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let den: C64 = next.iter().map(|a| a * a).sum();
        // the conjugated quotient minimizes the residual for a fixed vector
        let herm: C64 = next.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum();
        let mut cands = alloc::vec![herm];
        if den.norm() > 1e-8 {
            cands.push(num / den);
        }
        for cand in cands {
            let rc = r(cand, &next);
            if rc < res {
                lam = cand;
                vec = next.clone();
                res = rc;
            }
        }
        if res < RESIDUAL_TOL {
            return Ok((lam, vec, res));
        }
    }
    Err(Error::EigenNotConverged(alloc::format!("residual {res:e} at eigenvalue {lam}")))
}

/// Eigenvalues only, same ordering as [`eig_complex`].
pub fn eigenvalues(m: &OperatorMatrix) -> Result<Vec<C64>> {
    let mut v: Vec<C64> = if m.is_real() && m.asymmetry() == 0.0 {
        m.real_part_faer()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::EigenNotConverged(alloc::string::String::from("symmetric QR")))?
            .into_iter()
            .map(|x| C64::new(x, 0.0))
            .collect()
    } else {
        m.to_faer()
            .eigenvalues()
            .map_err(|_| Error::EigenNotConverged(alloc::string::String::from("complex QR")))?
    };
    v.sort_by(order);
    Ok(v)
}

/// Unconjugated product `Σ a_j b_j w`.
pub fn c_product(a: &[C64], b: &[C64], weight: f64) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<C64>() * weight
}

/// `|(a|b)| / (‖a‖ ‖b‖)`: a scale-free c-overlap bounded by 1.
pub fn overlap(a: &[C64], b: &[C64]) -> f64 {
    let d = norm2(a) * norm2(b);
    if d == 0.0 {
        0.0
    } else {
        c_product(a, b, 1.0).norm() / d
    }
}

/// Rescale so `Σ φ_j² w = 1`, then fix the sign so the largest-magnitude
/// component has positive real part.
pub fn c_normalize(v: &[C64], weight: f64) -> Result<Vec<C64>> {
    let s = c_product(v, v, weight);
    let scale = v.iter().map(|z| z.norm_sqr()).sum::<f64>() * weight;
    if !(s.norm() > 1e-12 * scale) || scale == 0.0 {
        return Err(Error::DegenerateNormalization(s.norm()));
    }
    let f = C64::new(1.0, 0.0) / s.sqrt();
    let mut out: Vec<C64> = v.iter().map(|z| z * f).collect();
    let big = out.iter().enumerate().fold((0, 0.0), |(k, m), (j, z)| if z.norm() > m { (j, z.norm()) } else { (k, m) }).0;
    if out[big].re < 0.0 {
        for z in &mut out {
            *z = -*z;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceState {
    /// `E = ℰ − iΓ/2`.
    pub energy: C64,
    /// c-normalized with `weight`.
    pub vector: Vec<C64>,
    /// Quadrature weight of the c-product (`Δx` on a grid, 1 for coefficients).
    pub weight: f64,
    pub c_norm_residual: f64,
}

impl ResonanceState {
    pub fn from_pair(pair: &EigenPair, weight: f64) -> Result<Self> {
        let vector = c_normalize(&pair.vector, weight)?;
        let c_norm_residual = (c_product(&vector, &vector, weight) - 1.0).norm();
        Ok(ResonanceState { energy: pair.value, vector, weight, c_norm_residual })
    }

    pub fn position(&self) -> f64 {
        self.energy.re
    }

    /// `Γ = −2 Im E`.
    pub fn width(&self) -> f64 {
        -2.0 * self.energy.im
    }

    /// `1/Γ`; infinite for bound states.
    pub fn lifetime(&self) -> f64 {
        1.0 / self.width()
    }
}

/// Flags eigenvalues that behave like the rotated continuum.
///
/// `probe` is the spectrum at `θ + δθ`. Each eigenvalue is matched to its
/// nearest probe eigenvalue; continuum states `E_th + k² e^{−2iθ}/2` move by
/// about `−2 Re(λ − E_th) δθ` in the imaginary direction, and anything moving
/// by more than half that is classified as continuum.
pub fn continuum_mask(values: &[C64], probe: &[C64], e_th: f64, dtheta: f64) -> Vec<bool> {
    values
        .iter()
        .map(|lam| {
            let near = probe
                .iter()
                .min_by(|a, b| (*a - lam).norm().total_cmp(&(*b - lam).norm()))
                .copied()
                .unwrap_or(*lam);
            let shift = (near.im - lam.im).abs();
            let pred = (2.0 * (lam.re - e_th) * dtheta).abs();
            shift > 0.5 * pred
        })
        .collect()
}

/// Picks the resonance among `pairs`.
///
/// Candidates have `Im λ ≤ 1e−10`, `Re λ` strictly inside `window` and are
/// not flagged in `continuum`. With `previous`, the candidate of largest
/// overlap is continued; otherwise the lowest `Re λ` wins.
pub fn select_resonance(
    pairs: &[EigenPair],
    window: (f64, f64),
    previous: Option<&ResonanceState>,
    continuum: Option<&[bool]>,
    weight: f64,
) -> Result<ResonanceState> {
    let cand: Vec<usize> = (0..pairs.len())
        .filter(|&i| {
            let z = pairs[i].value;
            z.im <= EPS_IM && z.re > window.0 && z.re < window.1 && !continuum.is_some_and(|c| c[i])
        })
        .collect();
    if cand.is_empty() {
        return Err(Error::NoResonance);
    }
    let pick = match previous {
        None => *cand.iter().min_by(|&&a, &&b| order(&pairs[a].value, &pairs[b].value)).unwrap(),
        Some(prev) => {
            let (best, ov) = cand
                .iter()
                .map(|&i| (i, overlap(&prev.vector, &pairs[i].vector)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if ov < TRACKING_MIN_OVERLAP {
                return Err(Error::TrackingLoss { theta: f64::NAN, overlap: ov });
            }
            best
        }
    };
    ResonanceState::from_pair(&pairs[pick], weight)
}

/// Full spectrum at one angle.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub theta: f64,
    pub pairs: Vec<EigenPair>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTrajectory {
    pub thetas: Vec<f64>,
    pub energies: Vec<C64>,
    /// `|dE/dθ|`: central differences inside, one-sided at the ends.
    pub derivative_abs: Vec<f64>,
    /// Overlap with the previous point (1 for the first).
    pub overlaps: Vec<f64>,
    pub theta_opt: f64,
    pub stationarity: f64,
    pub states: Vec<ResonanceState>,
}

pub fn validate_thetas(thetas: &[f64]) -> Result<()> {
    if thetas.len() < 3 {
        return Err(Error::invalid("a trajectory needs at least 3 angles"));
    }
    for t in thetas {
        check_theta(*t)?;
    }
    if !thetas.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::invalid("angles must be strictly increasing"));
    }
    Ok(())
}

/// Continues a resonance through precomputed spectra.
///
/// `seed` picks the state at the first angle; later points take the
/// eigenvector of largest overlap with their predecessor.
pub fn trajectory_from_spectra<S>(spectra: &[Spectrum], seed: S) -> Result<ThetaTrajectory>
where
    S: FnOnce(&Spectrum) -> Result<ResonanceState>,
{
    let thetas: Vec<f64> = spectra.iter().map(|s| s.theta).collect();
    validate_thetas(&thetas)?;
    let mut states = Vec::with_capacity(spectra.len());
    let mut overlaps = Vec::with_capacity(spectra.len());
    states.push(seed(&spectra[0])?);
    overlaps.push(1.0);
    for s in &spectra[1..] {
        let prev = states.last().unwrap();
        let (best, ov) = s
            .pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.value.im <= EPS_IM)
            .map(|(i, p)| (i, overlap(&prev.vector, &p.vector)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or(Error::NoResonance)?;
        if ov < TRACKING_MIN_OVERLAP {
            return Err(Error::TrackingLoss { theta: s.theta, overlap: ov });
        }
        states.push(ResonanceState::from_pair(&s.pairs[best], s.weight)?);
        overlaps.push(ov);
    }
    let energies: Vec<C64> = states.iter().map(|s| s.energy).collect();
    let n = thetas.len();
    let derivative_abs: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = if i == 0 { (0, 1) } else if i == n - 1 { (n - 2, n - 1) } else { (i - 1, i + 1) };
            ((energies[b] - energies[a]) / (thetas[b] - thetas[a])).norm()
        })
        .collect();
    let k = (1..n - 1).min_by(|&a, &b| derivative_abs[a].total_cmp(&derivative_abs[b])).unwrap();
    Ok(ThetaTrajectory {
        theta_opt: thetas[k],
        stationarity: derivative_abs[k],
        thetas,
        energies,
        derivative_abs,
        overlaps,
        states,
    })
}

/// Builds every spectrum in turn, then continues the resonance.
pub fn theta_trajectory<B, S>(thetas: &[f64], build: B, seed: S) -> Result<ThetaTrajectory>
where
    B: Fn(f64) -> Result<Spectrum>,
    S: FnOnce(&Spectrum) -> Result<ResonanceState>,
{
    validate_thetas(thetas)?;
    let spectra = thetas.iter().map(|&t| build(t)).collect::<Result<Vec<_>>>()?;
    trajectory_from_spectra(&spectra, seed)
}

/// Residual of the real two-block form of `H_θ φ = ε φ`.
///
/// With `ĥ₁ = cos2θ T + Re v`, `ĥ₂ = −sin2θ T + Im v`, `φ = u + iw` and
/// `g = −Im ε`, the blocks are `(ĥ₁ − Re ε)u − (ĥ₂ + g)w` and
/// `(ĥ₂ + g)u + (ĥ₁ − Re ε)w`. The stacked norm is divided by `‖(u, w)‖`, so
/// an eigenvalue error δ shows up as a residual of about `|δ|`.
///
/// `kinetic` is the unscaled (θ = 0) kinetic matrix.
pub fn hermitian_representation_residual(
    vector: &[C64],
    energy: C64,
    kinetic: &OperatorMatrix,
    theta: f64,
    vs_real: &[f64],
    vs_imag: &[f64],
) -> Result<f64> {
    let n = vector.len();
    if kinetic.dim() != n || vs_real.len() != n || vs_imag.len() != n {
        return Err(Error::GridMismatch);
    }
    if kinetic.max_abs() > 0.0 && !kinetic.is_real() {
        return Err(Error::invalid("kinetic matrix must be the unscaled real operator"));
    }
    check_theta(theta)?;
    let u: Vec<C64> = vector.iter().map(|z| C64::new(z.re, 0.0)).collect();
    let w: Vec<C64> = vector.iter().map(|z| C64::new(z.im, 0.0)).collect();
    let tu = kinetic.matvec(&u);
    let tw = kinetic.matvec(&w);
    let (c2, s2) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    let g = -energy.im;
    let mut r2 = 0.0;
    for j in 0..n {
        let h1u = c2 * tu[j].re + vs_real[j] * u[j].re;
        let h1w = c2 * tw[j].re + vs_real[j] * w[j].re;
        let h2u = -s2 * tu[j].re + vs_imag[j] * u[j].re;
        let h2w = -s2 * tw[j].re + vs_imag[j] * w[j].re;
        let r_top = h1u - energy.re * u[j].re - h2w - g * w[j].re;
        let r_bot = h2u + g * u[j].re + h1w - energy.re * w[j].re;
        r2 += r_top * r_top + r_bot * r_bot;
    }
    let v2: f64 = vector.iter().map(|z| z.norm_sqr()).sum();
    Ok((r2 / v2).sqrt())
}

/// One-electron problem on a grid.
#[derive(Debug, Clone)]
pub struct OneElectron {
    pub grid: Grid,
    pub spec: PotentialSpec,
    pub kinetic: KineticKind,
}

#[derive(Debug, Clone)]
pub struct OneElectronSolution {
    pub state: ResonanceState,
    pub spectrum: Spectrum,
    pub continuum: Vec<bool>,
    /// Open-channel threshold, `NaN` for confining potentials.
    pub threshold: f64,
}

impl OneElectron {
    pub fn new(grid: Grid, spec: PotentialSpec, kinetic: KineticKind) -> Result<Self> {
        spec.validate()?;
        Ok(OneElectron { grid, spec, kinetic })
    }

    pub fn hamiltonian(&self, theta: f64) -> Result<OperatorMatrix> {
        let t = kinetic_matrix(&self.grid, theta, self.kinetic)?;
        assemble_1e_hamiltonian(&t, &self.spec, &self.grid, theta)
    }

    pub fn spectrum(&self, theta: f64) -> Result<Spectrum> {
        Ok(Spectrum { theta, pairs: eig_complex(&self.hamiltonian(theta)?)?, weight: self.grid.weight() })
    }

    /// Open-channel threshold, or `None` for confining potentials.
    pub fn threshold(&self) -> Option<f64> {
        threshold_energy(&self.spec, 1, || Err(Error::NoChannel)).ok().map(|z| z.re)
    }

    /// Continuum flags for a spectrum, from a second solve at `θ + δθ`.
    pub fn probe(&self, spectrum: &Spectrum) -> Result<Vec<bool>> {
        let e_th = self.threshold().unwrap_or(0.0);
        let probe = eigenvalues(&self.hamiltonian(spectrum.theta + PROBE_DTHETA)?)?;
        let values: Vec<C64> = spectrum.pairs.iter().map(|p| p.value).collect();
        Ok(continuum_mask(&values, &probe, e_th, PROBE_DTHETA))
    }

    /// Lowest resonance above the open channel, or the lowest state of a
    /// confining potential. `window` overrides the default energy range.
    pub fn solve(&self, theta: f64, window: Option<(f64, f64)>) -> Result<OneElectronSolution> {
        let spectrum = self.spectrum(theta)?;
        let continuum = if theta > 0.0 { self.probe(&spectrum)? } else { alloc::vec![false; spectrum.pairs.len()] };
        let th = self.threshold();
        let window = window.unwrap_or((th.unwrap_or(f64::NEG_INFINITY), f64::INFINITY));
        let state = select_resonance(&spectrum.pairs, window, None, Some(&continuum), spectrum.weight)?;
        Ok(OneElectronSolution { state, spectrum, continuum, threshold: th.unwrap_or(f64::NAN) })
    }

    /// Lowest non-continuum state at any energy: the ground state if one is
    /// bound, else the lowest resonance.
    ///
    /// States below the channel threshold are bound, so they are accepted
    /// even when discretization leaves a small positive `Im λ`.
    pub fn ground_or_ler(&self, theta: f64) -> Result<OneElectronSolution> {
        let th = self.threshold();
        if let Some(e_th) = th {
            let spectrum = self.spectrum(theta)?;
            if let Some(p) = spectrum.pairs.iter().filter(|p| p.value.re < e_th).min_by(|a, b| order(&a.value, &b.value)) {
                let state = ResonanceState::from_pair(p, spectrum.weight)?;
                let continuum = alloc::vec![false; spectrum.pairs.len()];
                return Ok(OneElectronSolution { state, spectrum, continuum, threshold: e_th });
            }
        }
        self.solve(theta, Some((f64::NEG_INFINITY, f64::INFINITY)))
    }
}
