//! Kohn-Sham density functional resonance theory.
//!
//! The scaled functional is `E^θ = e^{−2iθ}T_s + ∫n v(x e^{iθ}) + e^{−iθ}(E_H + E_X)`
//! with the real-axis soft-Coulomb kernel in the Hartree term. The Kohn-Sham
//! potential is its derivative, `v(x e^{iθ}) + e^{−iθ}(v_H + v_X)`.

use alloc::vec::Vec;

use crate::accurate::{dot2, CAcc};
use crate::density::{build_density, ComplexDensity};
use crate::discretization::{assemble_with_potential, kinetic_matrix, KineticKind};
use crate::eigen::{
    c_product, continuum_mask, eig_complex, eigenvalues, overlap, EigenPair, OneElectron, ResonanceState,
    PROBE_DTHETA, TRACKING_MIN_OVERLAP,
};
use crate::grid::Grid;
use crate::matrix::OperatorMatrix;
use crate::potential::{threshold_energy, InteractionSpec, PotentialKind, PotentialSpec, Term};
use crate::{check_theta, cis, Error, Result, C64, EPS_IM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XcModel {
    /// Hartree only.
    None,
    /// `E_X = −½E_H`, exact for the two-electron singlet.
    ExactExchange2e,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScfInit {
    /// Bound orbitals at θ = 0 of the potential with its well deepened by
    /// `deepen`.
    ThetaZeroBound { deepen: f64 },
    /// Orbitals of the bare scaled potential.
    NonInteractingAtTheta,
    SuppliedDensity(Vec<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScfConfig {
    pub theta: f64,
    pub mixing: f64,
    pub tol_density: f64,
    pub tol_energy: f64,
    pub max_iter: usize,
    pub xc: XcModel,
    pub n_electrons: usize,
    pub init: ScfInit,
    pub kinetic: KineticKind,
    /// Physical threshold `E^th`; derived from the potential when `None`.
    pub threshold: Option<C64>,
}

impl Default for ScfConfig {
    fn default() -> Self {
        ScfConfig {
            theta: 0.25,
            mixing: 0.3,
            tol_density: 1e-9,
            tol_energy: 1e-10,
            max_iter: 200,
            xc: XcModel::ExactExchange2e,
            n_electrons: 2,
            init: ScfInit::ThetaZeroBound { deepen: 1.5 },
            kinetic: KineticKind::Fgh,
            threshold: None,
        }
    }
}

impl ScfConfig {
    pub fn validate(&self) -> Result<()> {
        check_theta(self.theta)?;
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return Err(Error::invalid("mixing must lie in (0, 1]"));
        }
        if !(self.tol_density > 0.0 && self.tol_energy > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if self.n_electrons == 0 || self.max_iter == 0 {
            return Err(Error::invalid("need electrons and at least one iteration"));
        }
        if self.xc == XcModel::ExactExchange2e && self.n_electrons != 2 {
            return Err(Error::invalid("exact exchange is implemented for the two-electron singlet"));
        }
        if let ScfInit::ThetaZeroBound { deepen } = self.init {
            if !(deepen > 0.0) {
                return Err(Error::invalid("deepen factor must be positive"));
            }
        }
        Ok(())
    }
}

/// Scaled contributions to `E^θ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FunctionalBreakdown {
    pub kinetic: C64,
    pub external: C64,
    pub hartree: C64,
    pub exchange: C64,
}

impl FunctionalBreakdown {
    pub fn total(&self) -> C64 {
        self.kinetic + self.external + self.hartree + self.exchange
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub max_dn: f64,
    pub energy: C64,
    pub norm_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScfResult {
    pub theta: f64,
    pub xc: XcModel,
    pub interaction: InteractionSpec,
    /// Output density of the last diagonalization.
    pub density: ComplexDensity,
    pub orbitals: Vec<Vec<C64>>,
    pub occupations: Vec<usize>,
    pub orbital_energies: Vec<C64>,
    pub total_energy: C64,
    pub breakdown: FunctionalBreakdown,
    /// Kohn-Sham potential of the last diagonalization.
    pub v_s: Vec<C64>,
    /// Its Hartree-exchange part.
    pub v_hxc: Vec<C64>,
    /// `Σ f ε + E_HX − ∫ v_HX n`, as printed in the orbital-energy relation.
    pub xi: C64,
    /// The Hartree-exchange part `ξ − Σ f ε`.
    pub xi_prime: C64,
    pub threshold: C64,
    /// `E^th − ξ'`.
    pub ks_threshold: C64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    pub history: Vec<IterationRecord>,
    pub max_norm_deviation: f64,
}

impl ScfResult {
    pub fn width(&self) -> f64 {
        -2.0 * self.total_energy.im
    }

    pub fn lifetime(&self) -> f64 {
        1.0 / self.width()
    }
}

fn check_density(n: &ComplexDensity, len: usize) -> Result<()> {
    if n.values.len() != len {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `v_H(x) = ∫ n(x') w(x − x') dx'` with the unscaled real kernel.
pub fn hartree_potential(n: &ComplexDensity, inter: &InteractionSpec) -> Result<Vec<C64>> {
    inter.validate()?;
    let g = &n.grid;
    let m = g.n_points;
    let kernel: Vec<f64> = (0..m).map(|k| inter.eval_real(k as f64 * g.spacing)).collect();
    let w = g.weight();
    Ok((0..m)
        .map(|i| n.values.iter().enumerate().map(|(j, nj)| nj * kernel[i.abs_diff(j)]).sum::<C64>() * w)
        .collect())
}

/// `e^{−iθ}(v_H + v_X)`.
pub fn hxc_potential(n: &ComplexDensity, theta: f64, inter: &InteractionSpec, xc: XcModel) -> Result<Vec<C64>> {
    let f = cis(-theta) * xc_fraction(xc);
    Ok(hartree_potential(n, inter)?.into_iter().map(|v| v * f).collect())
}

fn xc_fraction(xc: XcModel) -> f64 {
    match xc {
        XcModel::None => 1.0,
        XcModel::ExactExchange2e => 0.5,
    }
}

/// `v_s^θ = v(x e^{iθ}) + e^{−iθ}v_H + v_XC^θ`.
pub fn ks_potential(
    n: &ComplexDensity,
    spec: &PotentialSpec,
    theta: f64,
    inter: &InteractionSpec,
    xc: XcModel,
) -> Result<Vec<C64>> {
    check_theta(theta)?;
    let ext = spec.eval_scaled(&n.grid.points(), theta)?;
    let hxc = hxc_potential(n, theta, inter, xc)?;
    Ok(ext.iter().zip(&hxc).map(|(a, b)| a + b).collect())
}

/// `(e^{−iθ}E_H, e^{−iθ}E_X)`.
pub fn hx_energies(n: &ComplexDensity, theta: f64, inter: &InteractionSpec, xc: XcModel) -> Result<(C64, C64)> {
    let vh = hartree_potential(n, inter)?;
    let eh = c_product(&n.values, &vh, n.grid.weight()) * 0.5 * cis(-theta);
    let ex = match xc {
        XcModel::None => C64::new(0.0, 0.0),
        XcModel::ExactExchange2e => -eh * 0.5,
    };
    Ok((eh, ex))
}

/// `E^θ` of a set of c-normalized orbitals and their density.
///
/// `kinetic` is the unscaled kinetic matrix; `T_s` is its c-product
/// expectation.
#[allow(clippy::too_many_arguments)]
pub fn functional_energy(
    kinetic: &OperatorMatrix,
    orbitals: &[Vec<C64>],
    occupations: &[usize],
    density: &ComplexDensity,
    spec: &PotentialSpec,
    inter: &InteractionSpec,
    theta: f64,
    xc: XcModel,
) -> Result<(C64, FunctionalBreakdown)> {
    check_density(density, kinetic.dim())?;
    let w = density.grid.weight();
    let mut ts = C64::new(0.0, 0.0);
    for (phi, &f) in orbitals.iter().zip(occupations) {
        if (c_product(phi, phi, w) - 1.0).norm() > 1e-8 {
            return Err(Error::invalid("orbitals must be c-normalized"));
        }
        ts += accurate_expectation(kinetic, phi) * (f as f64 * w);
    }
    let ext = spec.eval_scaled(&density.grid.points(), theta)?;
    let (hartree, exchange) = hx_energies(density, theta, inter, xc)?;
    let b = FunctionalBreakdown {
        kinetic: ts * cis(-2.0 * theta),
        external: dot2(&density.values, &ext) * w,
        hartree,
        exchange,
    };
    Ok((b.total(), b))
}

/// `φᵀ T φ` with compensated row sums: the kinetic and potential parts
/// cancel strongly for narrow resonances.
fn accurate_expectation(m: &OperatorMatrix, phi: &[C64]) -> C64 {
    let tphi: Vec<C64> = (0..m.dim())
        .map(|i| {
            let mut acc = CAcc::default();
            for j in m.row_range(i) {
                acc.add(m.get(i, j), phi[j]);
            }
            acc.value()
        })
        .collect();
    dot2(phi, &tphi)
}

fn weighted_orbital_sum(result: &ScfResult) -> C64 {
    result.orbital_energies.iter().zip(&result.occupations).map(|(e, &f)| e * f as f64).sum()
}

/// `Σ f ε + E_HX[n] − ∫ v_HX n`, with `v_HX` the potential the orbitals were
/// computed in.
pub fn orbital_sum_energy(result: &ScfResult, inter: &InteractionSpec, xc: XcModel) -> Result<C64> {
    if !result.converged {
        return Err(Error::Unconverged);
    }
    let (eh, ex) = hx_energies(&result.density, result.theta, inter, xc)?;
    let dc = c_product(&result.v_hxc, &result.density.values, result.density.grid.weight());
    Ok(weighted_orbital_sum(result) + eh + ex - dc)
}

/// `(ξ, ξ')`.
pub fn xi_functional(result: &ScfResult) -> Result<(C64, C64)> {
    if !result.converged {
        return Err(Error::Unconverged);
    }
    Ok((result.xi, result.xi_prime))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomoReport {
    /// `A = −Re(ε_H − ε^th)`.
    pub affinity: f64,
    /// `Γ = −2 Im(ε_H − ε^th)`.
    pub width: f64,
    pub eps_homo: C64,
    pub ks_threshold: C64,
}

/// Affinity and width from the highest occupied orbital, with the Kohn-Sham
/// threshold `ε^th = E^th − ξ'`.
pub fn homo_relations(result: &ScfResult, e_th: C64) -> Result<HomoReport> {
    if !result.converged {
        return Err(Error::Unconverged);
    }
    let eps_homo = result
        .orbital_energies
        .iter()
        .zip(&result.occupations)
        .filter(|(_, &f)| f > 0)
        .map(|(e, _)| *e)
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .ok_or(Error::NoHomo)?;
    let ks_threshold = e_th - result.xi_prime;
    let d = eps_homo - ks_threshold;
    Ok(HomoReport { affinity: -d.re, width: -2.0 * d.im, eps_homo, ks_threshold })
}

/// Doubly occupied spatial orbitals, one singly occupied for odd `N`.
pub fn occupation_pattern(n_electrons: usize) -> Vec<usize> {
    let mut occ = alloc::vec![2; n_electrons / 2];
    if n_electrons % 2 == 1 {
        occ.push(1);
    }
    occ
}

fn deepened(spec: &PotentialSpec, factor: f64) -> PotentialSpec {
    match spec.kind {
        PotentialKind::DoubleSigmoidGaussian => PotentialSpec { alpha: spec.alpha * factor, ..spec.clone() },
        PotentialKind::CustomClosedForm => {
            let terms = spec
                .terms
                .iter()
                .map(|t| match *t {
                    Term::Gaussian { depth, center, width2 } => Term::Gaussian { depth: depth * factor, center, width2 },
                    other => other,
                })
                .collect();
            PotentialSpec { terms, ..spec.clone() }
        }
        _ => spec.clone(),
    }
}

/// Lowest `count` non-continuum eigenpairs by `Re ε`. Orbitals below the
/// channel threshold `e_th` are bound whatever the sign of their tiny `Im ε`.
fn aufbau(pairs: &[EigenPair], mask: &[bool], count: usize, e_th: f64) -> Result<Vec<usize>> {
    let picked: Vec<usize> = (0..pairs.len())
        .filter(|&i| pairs[i].value.re < e_th || (!mask[i] && pairs[i].value.im <= EPS_IM))
        .take(count)
        .collect();
    if picked.len() < count {
        return Err(Error::NoResonance);
    }
    Ok(picked)
}

fn track(pairs: &[EigenPair], previous: &[Vec<C64>]) -> core::result::Result<Vec<usize>, f64> {
    let mut chosen: Vec<usize> = Vec::with_capacity(previous.len());
    for prev in previous {
        let (best, ov) = (0..pairs.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| (i, overlap(prev, &pairs[i].vector)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0));
        if ov < TRACKING_MIN_OVERLAP {
            return Err(ov);
        }
        chosen.push(best);
    }
    Ok(chosen)
}

struct Engine<'a> {
    config: &'a ScfConfig,
    spec: &'a PotentialSpec,
    inter: &'a InteractionSpec,
    grid: Grid,
    t_theta: OperatorMatrix,
    t_probe: OperatorMatrix,
    t0: OperatorMatrix,
    v_ext: Vec<C64>,
    v_ext_probe: Vec<C64>,
    occ: Vec<usize>,
}

impl Engine<'_> {
    fn diagonalize(&self, v_s: &[C64]) -> Result<Vec<EigenPair>> {
        eig_complex(&assemble_with_potential(&self.t_theta, v_s)?)
    }

    /// Orbitals see the one-electron channel of the bare potential; the
    /// Hartree-exchange potential decays. Confining potentials have none.
    fn channel(&self) -> f64 {
        let (l, r) = self.spec.asymptotes();
        l.min(r)
    }

    fn probe_mask(&self, pairs: &[EigenPair], n_in: &ComplexDensity) -> Result<Vec<bool>> {
        let e_th = if self.channel().is_finite() { self.channel() } else { 0.0 };
        if self.config.theta == 0.0 {
            return Ok(alloc::vec![false; pairs.len()]);
        }
        let th = self.config.theta + PROBE_DTHETA;
        let hxc = hxc_potential(n_in, th, self.inter, self.config.xc)?;
        let v: Vec<C64> = self.v_ext_probe.iter().zip(&hxc).map(|(a, b)| a + b).collect();
        let probe = eigenvalues(&assemble_with_potential(&self.t_probe, &v)?)?;
        let vals: Vec<C64> = pairs.iter().map(|p| p.value).collect();
        Ok(continuum_mask(&vals, &probe, e_th, PROBE_DTHETA))
    }

    fn vectors_of(&self, pairs: &[EigenPair], idx: &[usize]) -> Result<Vec<Vec<C64>>> {
        let w = self.grid.weight();
        idx.iter().map(|&i| Ok(ResonanceState::from_pair(&pairs[i], w)?.vector)).collect()
    }

    /// Orbitals and their compensated c-Rayleigh quotients, so that `Σ f ε`
    /// and the functional agree to rounding.
    fn orbitals_of(&self, pairs: &[EigenPair], idx: &[usize], v_s: &[C64]) -> Result<(Vec<Vec<C64>>, Vec<C64>)> {
        let rot = cis(-2.0 * self.config.theta);
        let orbs = self.vectors_of(pairs, idx)?;
        let eps = orbs
            .iter()
            .map(|phi| {
                let vphi: Vec<C64> = phi.iter().zip(v_s).map(|(p, v)| p * v).collect();
                (accurate_expectation(&self.t0, phi) * rot + dot2(phi, &vphi)) / dot2(phi, phi)
            })
            .collect();
        Ok((orbs, eps))
    }

    fn energy(&self, orbs: &[Vec<C64>], n: &ComplexDensity) -> Result<(C64, FunctionalBreakdown)> {
        functional_energy(&self.t0, orbs, &self.occ, n, self.spec, self.inter, self.config.theta, self.config.xc)
    }
}

/// Self-consistent field iteration with linear density mixing.
///
/// The first diagonalization occupies the lowest non-continuum states; later
/// ones continue each orbital by overlap. Losing an orbital restarts the run
/// with half the mixing, at most twice. Running out of iterations returns the
/// last state with `converged = false`.
pub fn run_scf(config: &ScfConfig, spec: &PotentialSpec, inter: &InteractionSpec, grid: &Grid) -> Result<ScfResult> {
    config.validate()?;
    spec.validate()?;
    inter.validate()?;
    let theta = config.theta;
    let xs = grid.points();
    let probe_theta = (theta + PROBE_DTHETA).min(crate::THETA_MAX - 1e-12);
    let eng = Engine {
        config,
        spec,
        inter,
        grid: *grid,
        t_theta: kinetic_matrix(grid, theta, config.kinetic)?,
        t_probe: kinetic_matrix(grid, probe_theta, config.kinetic)?,
        t0: kinetic_matrix(grid, 0.0, config.kinetic)?,
        v_ext: spec.eval_scaled(&xs, theta)?,
        v_ext_probe: spec.eval_scaled(&xs, probe_theta)?,
        occ: occupation_pattern(config.n_electrons),
    };
    let n_orb = eng.occ.len();
    let e_th = match config.threshold {
        Some(t) => t,
        None => threshold_energy(spec, config.n_electrons, || {
            Ok(OneElectron::new(*grid, spec.clone(), config.kinetic)?.ground_or_ler(theta)?.state.energy)
        })
        .or_else(|e| if e == Error::NoChannel { Ok(C64::new(0.0, 0.0)) } else { Err(e) })?,
    };

    // initial density, orbitals to continue from, and whether they already
    // live at this θ
    let zero = C64::new(0.0, 0.0);
    let (n_init, orbs_init, at_theta): (ComplexDensity, Option<Vec<Vec<C64>>>, bool) = match &config.init {
        ScfInit::NonInteractingAtTheta => {
            let pairs = eng.diagonalize(&eng.v_ext)?;
            let empty = ComplexDensity::new(*grid, alloc::vec![zero; grid.n_points], 0)?;
            let mask = eng.probe_mask(&pairs, &empty)?;
            let idx = aufbau(&pairs, &mask, n_orb, eng.channel())?;
            let orbs = eng.vectors_of(&pairs, &idx)?;
            (build_density(grid, &orbs, &eng.occ)?, Some(orbs), true)
        }
        ScfInit::ThetaZeroBound { deepen } => {
            let deep = deepened(spec, *deepen);
            let v0 = deep.eval_scaled(&xs, 0.0)?;
            let pairs = eig_complex(&assemble_with_potential(&eng.t0, &v0)?)?;
            let idx: Vec<usize> = (0..n_orb).collect();
            let orbs = eng.vectors_of(&pairs, &idx)?;
            (build_density(grid, &orbs, &eng.occ)?, Some(orbs), false)
        }
        ScfInit::SuppliedDensity(v) => (ComplexDensity::new(*grid, v.clone(), config.n_electrons)?, None, false),
    };
    if n_init.normalization_deviation() > 1e-8 {
        return Err(Error::invalid("initial density is not normalized to N"));
    }
    let e_init = match &orbs_init {
        Some(o) if at_theta => Some(eng.energy(o, &n_init)?.0),
        _ => None,
    };

    let mut restarts = 0;
    loop {
        let beta = config.mixing / (1u32 << restarts) as f64;
        match iterate(&eng, beta, e_th, n_init.clone(), orbs_init.clone(), e_init)? {
            Ok(mut r) => {
                r.restarts = restarts;
                return Ok(r);
            }
            Err((t, ov)) => {
                if restarts == 2 {
                    return Err(Error::TrackingLoss { theta: t, overlap: ov });
                }
                restarts += 1;
            }
        }
    }
}

type Iterated = core::result::Result<ScfResult, (f64, f64)>;

fn iterate(
    eng: &Engine,
    beta: f64,
    e_th: C64,
    mut n_in: ComplexDensity,
    mut prev: Option<Vec<Vec<C64>>>,
    mut e_prev: Option<C64>,
) -> Result<Iterated> {
    let cfg = eng.config;
    let mut history = Vec::new();
    let mut max_norm_dev = n_in.normalization_deviation();
    let mut it = 0;
    loop {
        it += 1;
        let v_hxc = hxc_potential(&n_in, cfg.theta, eng.inter, cfg.xc)?;
        let v_s: Vec<C64> = eng.v_ext.iter().zip(&v_hxc).map(|(a, b)| a + b).collect();
        let pairs = eng.diagonalize(&v_s)?;
        let idx = match &prev {
            None => {
                let mask = eng.probe_mask(&pairs, &n_in)?;
                aufbau(&pairs, &mask, eng.occ.len(), eng.channel())?
            }
            Some(p) => match track(&pairs, p) {
                Ok(idx) => idx,
                // the guess orbitals may not resemble any scaled orbital
                Err(_) if it == 1 => {
                    let mask = eng.probe_mask(&pairs, &n_in)?;
                    aufbau(&pairs, &mask, eng.occ.len(), eng.channel())?
                }
                Err(ov) => return Ok(Err((cfg.theta, ov))),
            },
        };
        let (orbs, eps) = eng.orbitals_of(&pairs, &idx, &v_s)?;
        let n_out = build_density(&eng.grid, &orbs, &eng.occ)?;
        let (energy, breakdown) = eng.energy(&orbs, &n_out)?;
        let max_dn = n_out.values.iter().zip(&n_in.values).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        let de = e_prev.map_or(f64::INFINITY, |e| (energy - e).norm());
        max_norm_dev = max_norm_dev.max(n_out.normalization_deviation());
        history.push(IterationRecord { iteration: it, max_dn, energy, norm_deviation: n_out.normalization_deviation() });
        let converged = max_dn < cfg.tol_density && de < cfg.tol_energy;
        if converged || it == cfg.max_iter {
            let w = eng.grid.weight();
            let sum_eps: C64 = eps.iter().zip(&eng.occ).map(|(e, &f)| e * f as f64).sum();
            let dc = c_product(&v_hxc, &n_out.values, w);
            let xi_prime = breakdown.hartree + breakdown.exchange - dc;
            return Ok(Ok(ScfResult {
                theta: cfg.theta,
                xc: cfg.xc,
                interaction: *eng.inter,
                density: n_out,
                orbitals: orbs,
                occupations: eng.occ.clone(),
                orbital_energies: eps,
                total_energy: energy,
                breakdown,
                v_s,
                v_hxc,
                xi: sum_eps + xi_prime,
                xi_prime,
                threshold: e_th,
                ks_threshold: e_th - xi_prime,
                iterations: it,
                converged,
                restarts: 0,
                history,
                max_norm_deviation: max_norm_dev,
            }));
        }
        let mixed: Vec<C64> = n_in.values.iter().zip(&n_out.values).map(|(a, b)| a * (1.0 - beta) + b * beta).collect();
        n_in = ComplexDensity::new(eng.grid, mixed, cfg.n_electrons)?;
        max_norm_dev = max_norm_dev.max(n_in.normalization_deviation());
        e_prev = Some(energy);
        prev = Some(orbs);
    }
}
