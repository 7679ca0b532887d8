//! Acceptance checks, one PASS/FAIL line each.
//!
//! Run with `cargo test -p dfrt-core --test acceptance`. The process exits
//! non-zero when any check fails.

use std::time::{Duration, Instant};

use dfrt_core::density::{
    asymptotic_fit, auto_tail_window, build_density, density_error, tail_asymmetry, ComplexDensity, Side,
};
use dfrt_core::discretization::{basis_hamiltonian, kinetic_matrix, BasisSet, KineticKind};
use dfrt_core::eigen::{
    eig_complex, hermitian_representation_residual, overlap, OneElectron, ResonanceState,
};
use dfrt_core::grid::Grid;
use dfrt_core::ks::{
    functional_energy, homo_relations, orbital_sum_energy, run_scf, ScfConfig, ScfInit, ScfResult, XcModel,
};
use dfrt_core::many_body::{TwoElectron, TwoElectronBackend, TwoElectronOptions};
use dfrt_core::potential::{InteractionSpec, PotentialSpec};
use dfrt_core::scaling::{hartree_exchange_scaling_check, kinetic_scaling_check, Dim, GaussianState};
use dfrt_core::C64;

/// Well depth of the stair-step fixture; not pinned elsewhere, chosen so the
/// two-electron ground state is a narrow resonance.
const STAIR_ALPHA: f64 = 6.5;
/// Depth with the resonance as the lowest state, used for the non-interacting
/// lifetime checks.
const STAIR_ALPHA_SHALLOW: f64 = 6.0;

fn stair(alpha: f64) -> PotentialSpec {
    PotentialSpec::double_sigmoid_gaussian(4.0, alpha, 0.5, 4.0, 2.0)
}

fn biased_barrier() -> PotentialSpec {
    PotentialSpec::double_sigmoid_gaussian(7.0, 10.0, 0.05, 4.0, 1.5).with_bias(2.0, 10.0)
}

#[derive(Default)]
struct Ledger {
    failed: Vec<usize>,
    /// `(label, |∫n − N|)` of every density from checks 2 to 8.
    norms: Vec<(String, f64)>,
    /// `(label, residual)` for check 5.
    residuals: Vec<(String, f64)>,
    /// Interacting KS result kept for the check 12 report.
    ks_exchange: Option<ScfResult>,
    lines: Vec<(usize, String)>,
}

impl Ledger {
    fn report(&mut self, id: usize, title: &str, pass: bool, detail: String, elapsed: Duration, budget: Duration) {
        let in_time = elapsed <= budget;
        let ok = pass && in_time;
        if !ok {
            self.failed.push(id);
        }
        let timing = if in_time {
            format!("{:.1}s", elapsed.as_secs_f64())
        } else {
            format!("{:.1}s over the {:.0}s budget", elapsed.as_secs_f64(), budget.as_secs_f64())
        };
        let line = format!("{} {id:>2} {title}: {detail} [{timing}]", if ok { "PASS" } else { "FAIL" });
        eprintln!("{line}");
        self.lines.push((id, line));
    }

    fn density(&mut self, label: impl Into<String>, n: &ComplexDensity) {
        self.norms.push((label.into(), n.normalization_deviation()));
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn one_electron_residual(state: &ResonanceState, grid: &Grid, spec: &PotentialSpec, theta: f64) -> f64 {
    let v = spec.eval_scaled(&grid.points(), theta).unwrap();
    let re: Vec<f64> = v.iter().map(|z| z.re).collect();
    let im: Vec<f64> = v.iter().map(|z| z.im).collect();
    let t0 = kinetic_matrix(grid, 0.0, KineticKind::Fgh).unwrap();
    hermitian_representation_residual(&state.vector, state.energy, &t0, theta, &re, &im).unwrap()
}

fn ks_residuals(led: &mut Ledger, label: &str, r: &ScfResult, grid: &Grid) {
    let t0 = kinetic_matrix(grid, 0.0, KineticKind::Fgh).unwrap();
    let re: Vec<f64> = r.v_s.iter().map(|z| z.re).collect();
    let im: Vec<f64> = r.v_s.iter().map(|z| z.im).collect();
    for (k, (phi, e)) in r.orbitals.iter().zip(&r.orbital_energies).enumerate() {
        let res = hermitian_representation_residual(phi, *e, &t0, r.theta, &re, &im).unwrap();
        led.residuals.push((format!("{label} orbital {k}"), res));
    }
}

fn scf_densities(led: &mut Ledger, label: &str, r: &ScfResult) {
    led.density(format!("{label} final"), &r.density);
    led.norms.push((format!("{label} iterates"), r.max_norm_deviation));
}

fn c1(led: &mut Ledger) {
    let t = Instant::now();
    let g = Grid::new(-12.0, 12.0, 512).unwrap();
    let one = OneElectron::new(g, PotentialSpec::harmonic(1.0), KineticKind::Fgh).unwrap();
    let mut worst = 0.0f64;
    for theta in [0.1, 0.2, 0.3] {
        let s = one.spectrum(theta).unwrap();
        for n in 0..5 {
            worst = worst.max((s.pairs[n].value - (n as f64 + 0.5)).norm());
        }
    }
    led.report(1, "scaled oscillator spectrum", worst < 1e-7, format!("max |λ_n − (n+½)| = {worst:.2e} (< 1e-7)"), t.elapsed(), secs(10));
}

fn c2(led: &mut Ledger) {
    let t = Instant::now();
    let g = Grid::new(-20.0, 20.0, 801).unwrap();
    let spec = stair(STAIR_ALPHA);
    let one = OneElectron::new(g, spec.clone(), KineticKind::Fgh).unwrap();
    let thetas = [0.15, 0.20, 0.25, 0.30, 0.35];
    let mut energies = Vec::new();
    for &theta in &thetas {
        let sol = one.solve(theta, None).unwrap();
        let n = build_density(&g, &[sol.state.vector.clone()], &[1]).unwrap();
        led.density(format!("check 2 LER θ={theta}"), &n);
        led.residuals.push((format!("LER θ={theta}"), one_electron_residual(&sol.state, &g, &spec, theta)));
        energies.push(sol.state.energy);
    }
    let mut spread = 0.0f64;
    for a in &energies {
        for b in &energies {
            spread = spread.max((a - b).norm());
        }
    }
    let listing: Vec<String> = thetas.iter().zip(&energies).map(|(t, e)| format!("{t}:{:.9}{:+.9}i", e.re, e.im)).collect();
    led.report(
        2,
        "one-electron θ-independence",
        spread < 1e-6,
        format!("spread {spread:.2e} (< 1e-6) over {}", listing.join(" ")),
        t.elapsed(),
        secs(60),
    );
}

fn c3(led: &mut Ledger) {
    let t = Instant::now();
    let theta = 0.15;
    let g = Grid::new(-20.0, 20.0, 801).unwrap();
    let spec = stair(STAIR_ALPHA);
    let reference = OneElectron::new(g, spec.clone(), KineticKind::Fgh).unwrap().solve(theta, None).unwrap().state;
    let n_ref = build_density(&g, &[reference.vector.clone()], &[1]).unwrap();
    led.density("check 3 FGH reference", &n_ref);
    let xs = g.points();
    let mut errs = Vec::new();
    for size in [40usize, 80, 160, 320] {
        let basis = BasisSet::particle_in_box(-20.0, 20.0, size);
        let h = basis_hamiltonian(&basis, &spec, theta).unwrap();
        let pairs = eig_complex(&h).unwrap();
        // the basis state that looks most like the reference resonance
        let (best, _) = pairs
            .iter()
            .map(|p| basis.project(&p.vector, &xs))
            .enumerate()
            .map(|(i, phi)| (i, overlap(&phi, &reference.vector)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let state = ResonanceState::from_pair(&pairs[best], 1.0).unwrap();
        let phi = basis.project(&state.vector, &xs);
        let n = build_density(&g, &[phi], &[1]).unwrap();
        led.density(format!("check 3 PIB {size}"), &n);
        errs.push((size, density_error(&n, &n_ref).unwrap()));
    }
    let decreasing = errs.windows(2).all(|w| w[1].1 .0 < w[0].1 .0 && w[1].1 .1 < w[0].1 .1);
    let last = errs.last().unwrap().1;
    let small = last.0 < 1e-8 && last.1 < 1e-8;
    let ordered = errs.iter().all(|(_, (er, ei))| ei >= er);
    let table: Vec<String> = errs.iter().map(|(s, (er, ei))| format!("{s}:{er:.2e}/{ei:.2e}")).collect();
    led.report(
        3,
        "basis convergence of the density",
        decreasing && small && ordered,
        format!(
            "err_re/err_im {}; decreasing {decreasing}, final < 1e-8 {small}, err_im ≥ err_re {ordered}",
            table.join(" ")
        ),
        t.elapsed(),
        secs(120),
    );
}

/// Runs the SCF cases behind checks 5 to 8.
struct ScfCases {
    grid_interacting: Grid,
    non_interacting: ScfResult,
    bound: ScfResult,
    interacting: ScfResult,
    grid_ni: Grid,
    grid_bound: Grid,
    elapsed: Duration,
}

fn scf_cases(led: &mut Ledger) -> ScfCases {
    let t = Instant::now();
    let grid_ni = Grid::new(-20.0, 20.0, 801).unwrap();
    let ni_cfg = ScfConfig { theta: 0.25, xc: XcModel::None, init: ScfInit::NonInteractingAtTheta, ..ScfConfig::default() };
    let non_interacting =
        run_scf(&ni_cfg, &stair(STAIR_ALPHA_SHALLOW), &InteractionSpec::soft_coulomb(0.0, 1.0), &grid_ni).unwrap();

    let grid_bound = Grid::new(-20.0, 20.0, 401).unwrap();
    let bound_cfg = ScfConfig { theta: 0.0, ..ScfConfig::default() };
    let bound = run_scf(&bound_cfg, &stair(1.5 * STAIR_ALPHA), &InteractionSpec::default(), &grid_bound).unwrap();

    let grid_interacting = Grid::new(-20.0, 20.0, 401).unwrap();
    let int_cfg = ScfConfig { theta: 0.25, ..ScfConfig::default() };
    let interacting = run_scf(&int_cfg, &stair(STAIR_ALPHA), &InteractionSpec::default(), &grid_interacting).unwrap();

    scf_densities(led, "non-interacting SCF", &non_interacting);
    scf_densities(led, "bound SCF", &bound);
    scf_densities(led, "interacting SCF", &interacting);
    ScfCases { grid_interacting, non_interacting, bound, interacting, grid_ni, grid_bound, elapsed: t.elapsed() }
}

fn c5(led: &mut Ledger, cases: &ScfCases) {
    let t = Instant::now();
    ks_residuals(led, "non-interacting", &cases.non_interacting, &cases.grid_ni);
    ks_residuals(led, "bound", &cases.bound, &cases.grid_bound);
    ks_residuals(led, "interacting", &cases.interacting, &cases.grid_interacting);
    let all_converged = [&cases.non_interacting, &cases.bound, &cases.interacting].iter().all(|r| r.converged);
    let (label, worst) = led
        .residuals
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .unwrap_or((String::from("none"), f64::NAN));
    led.report(
        5,
        "Hermitian-representation certificate",
        worst < 1e-8 && all_converged,
        format!("worst residual {worst:.2e} ({label}) over {} states (< 1e-8); SCF converged {all_converged}", led.residuals.len()),
        t.elapsed(),
        secs(600),
    );
}

fn c6(led: &mut Ledger, cases: &ScfCases) {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (label, r, grid) in [
        ("non-interacting", &cases.non_interacting, &cases.grid_ni),
        ("θ=0 bound", &cases.bound, &cases.grid_bound),
        ("interacting LER", &cases.interacting, &cases.grid_interacting),
    ] {
        let spec = if label == "non-interacting" {
            stair(STAIR_ALPHA_SHALLOW)
        } else if label == "θ=0 bound" {
            stair(1.5 * STAIR_ALPHA)
        } else {
            stair(STAIR_ALPHA)
        };
        let t0 = kinetic_matrix(grid, 0.0, KineticKind::Fgh).unwrap();
        let (e, _) =
            functional_energy(&t0, &r.orbitals, &r.occupations, &r.density, &spec, &r.interaction, r.theta, r.xc).unwrap();
        let d = match orbital_sum_energy(r, &r.interaction, r.xc) {
            Ok(o) => (e - o).norm(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(d);
        parts.push(format!("{label} {d:.1e} after {} iterations", r.iterations));
    }
    led.report(
        6,
        "functional vs corrected orbital sum",
        worst < 1e-9,
        format!("max deviation {worst:.2e} (< 1e-9): {}", parts.join(", ")),
        t.elapsed() + cases.elapsed,
        secs(600),
    );
}

fn c7(led: &mut Ledger, cases: &ScfCases) {
    let t = Instant::now();
    let r = &cases.non_interacting;
    let gamma_tot = r.width();
    let gamma_h = -2.0 * r.orbital_energies[0].im;
    let d = (gamma_tot - 2.0 * gamma_h).abs();
    let life = r.lifetime();
    let tau_h = 1.0 / gamma_h;
    led.report(
        7,
        "non-interacting lifetime additivity",
        d < 1e-12 && gamma_h > 0.0,
        format!(
            "Γ_tot {gamma_tot:.6e}, 2Γ_H {:.6e}, |Δ| {d:.1e} (< 1e-12); lifetime {life:.4} vs τ_H/2 {:.4}",
            2.0 * gamma_h,
            tau_h / 2.0
        ),
        t.elapsed(),
        secs(60),
    );
}

fn c8(led: &mut Ledger, cases: &ScfCases) {
    let t = Instant::now();
    let r = &cases.non_interacting;
    let xi_dev = r.xi_prime.norm();
    let th_dev = (r.ks_threshold - r.threshold).norm();
    let h = homo_relations(&cases.bound, cases.bound.threshold).unwrap();
    led.report(
        8,
        "degenerate threshold and Koopmans limits",
        xi_dev < 1e-12 && th_dev < 1e-12 && h.width.abs() < 1e-12,
        format!(
            "non-interacting |ξ'| {xi_dev:.1e}, |ε^th − E^th| {th_dev:.1e}; bound θ=0 Γ {:.1e}, A {:.6} (all < 1e-12)",
            h.width, h.affinity
        ),
        t.elapsed(),
        secs(60),
    );
}

fn c4(led: &mut Ledger) {
    let (label, worst) =
        led.norms.iter().max_by(|a, b| a.1.total_cmp(&b.1)).cloned().unwrap_or((String::from("none"), f64::NAN));
    let count = led.norms.len();
    led.report(
        4,
        "c-normalization of densities",
        worst < 1e-10,
        format!("worst |∫n − N| {worst:.2e} ({label}) over {count} densities (< 1e-10)"),
        Duration::ZERO,
        secs(1),
    );
}

fn c9(led: &mut Ledger) {
    let t = Instant::now();
    let theta = 0.25;
    let g = Grid::new(-20.0, 20.0, 801).unwrap();
    let one = OneElectron::new(g, stair(STAIR_ALPHA), KineticKind::Fgh).unwrap();
    let sol = one.solve(theta, None).unwrap();
    let n = build_density(&g, &[sol.state.vector.clone()], &[1]).unwrap();
    let e_th = C64::new(one.threshold().unwrap(), 0.0);
    // the open channel is on the left
    let outcome = auto_tail_window(&n, Side::Left).and_then(|w| asymptotic_fit(&n, w, sol.state.energy, e_th, theta));
    match outcome {
        Ok(fit) => led.report(
            9,
            "tail decay and phase slope",
            fit.kappa_rel_err() < 0.02 && fit.k_rel_err() < 0.02,
            format!(
                "window [{:.2}, {:.2}], κ {:.5} vs {:.5} ({:.2}%), k {:.5} vs {:.5} ({:.2}%) (< 2%)",
                fit.window.0,
                fit.window.1,
                fit.kappa_fit,
                fit.kappa_pred,
                100.0 * fit.kappa_rel_err(),
                fit.k_fit,
                fit.k_pred,
                100.0 * fit.k_rel_err()
            ),
            t.elapsed(),
            secs(60),
        ),
        Err(e) => led.report(9, "tail decay and phase slope", false, format!("fit failed: {e}"), t.elapsed(), secs(60)),
    }
}

fn c10(led: &mut Ledger) {
    let t = Instant::now();
    let theta = 0.2;
    let g = Grid::new(-20.0, 20.0, 801).unwrap();
    let (left, right) = ((-12.0, -4.0), (4.0, 12.0));
    let asym = |spec: PotentialSpec| -> (f64, C64) {
        let sol = OneElectron::new(g, spec, KineticKind::Fgh).unwrap().solve(theta, None).unwrap();
        let n = build_density(&g, &[sol.state.vector.clone()], &[1]).unwrap();
        (tail_asymmetry(&n, left, right).unwrap(), sol.state.energy)
    };
    let spec = biased_barrier();
    let (l_th, r_th) = spec.asymptotes();
    let (a, e) = asym(spec.clone());
    let (am, em) = asym(spec.mirrored());
    let (a0, _) = asym(PotentialSpec::symmetric_double_barrier(7.0, 10.0, 0.05, 4.0, 1.5));
    // negative asymmetry points left
    let toward_lower = if l_th < r_th { a < 0.0 } else { a > 0.0 };
    let flips = (a + am).abs() < 1e-8 && a != 0.0;
    let control = a0.abs() < 1e-8;
    led.report(
        10,
        "biased tail asymmetry",
        toward_lower && flips && control,
        format!(
            "LER {:.6}{:+.3e}i, asymmetry {a:+.4e} with thresholds left {l_th} right {r_th} (toward lower {toward_lower}); \
             mirrored {am:+.4e} (LER {:.6}{:+.3e}i, |sum| {:.1e} < 1e-8); γ=0 control {a0:.1e} (< 1e-8)",
            e.re,
            e.im,
            em.re,
            em.im,
            (a + am).abs()
        ),
        t.elapsed(),
        secs(60),
    );
}

fn c11(led: &mut Ledger) {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for theta in [0.1, 0.2, 0.3] {
        for sigma in [1.0, 2.5] {
            for dim in [Dim::One, Dim::Three] {
                let g = GaussianState::new(dim, C64::new(sigma, 0.0), 2).unwrap();
                worst = worst.max(kinetic_scaling_check(&g, theta).unwrap().deviation());
            }
            let g3 = GaussianState::new(Dim::Three, C64::new(sigma, 0.0), 2).unwrap();
            let (h, x) = hartree_exchange_scaling_check(&g3, theta).unwrap();
            worst = worst.max(h.deviation()).max(x.deviation());
        }
    }
    let g = Grid::new(-12.0, 12.0, 512).unwrap();
    let free = InteractionSpec::soft_coulomb(0.0, 1.0);
    let energy = |theta: f64| {
        let cfg = ScfConfig { theta, xc: XcModel::None, init: ScfInit::NonInteractingAtTheta, ..ScfConfig::default() };
        run_scf(&cfg, &PotentialSpec::harmonic(1.0), &free, &g).unwrap().total_energy
    };
    let (e0, e25) = (energy(0.0), energy(0.25));
    let d = (e0 - e25).norm();
    led.report(
        11,
        "scaling relations",
        worst < 1e-10 && d < 1e-8,
        format!("worst phase deviation {worst:.1e} (< 1e-10); harmonic pair E(0) {:.10} vs E(0.25) {:.10}{:+.1e}i, |Δ| {d:.1e} (< 1e-8)", e0.re, e25.re, e25.im),
        t.elapsed(),
        secs(30),
    );
}

fn c12(led: &mut Ledger) {
    let t = Instant::now();
    let theta = 0.45;
    let spec = stair(STAIR_ALPHA);
    let w = InteractionSpec::default();
    let dense_prob = TwoElectron::new(Grid::new(-5.0, 5.0, 64).unwrap(), spec.clone(), w, KineticKind::Fgh).unwrap();
    let dense = dense_prob.solve(theta, &TwoElectronOptions::default());
    let sparse_prob = TwoElectron::new(Grid::new(-5.0, 5.0, 96).unwrap(), spec.clone(), w, KineticKind::Fd6).unwrap();
    let (dense, sparse) = match dense {
        Ok(d) => {
            let opts = TwoElectronOptions {
                backend: TwoElectronBackend::ShiftInvert { shift: d.pair.energy(), n_eigs: 12 },
                ..TwoElectronOptions::default()
            };
            let s = sparse_prob.solve(theta, &opts);
            (d, s)
        }
        Err(e) => {
            led.report(12, "two-electron cross-validation", false, format!("dense solve failed: {e}"), t.elapsed(), secs(300));
            return;
        }
    };
    let sparse = match sparse {
        Ok(s) => s,
        Err(e) => {
            led.report(12, "two-electron cross-validation", false, format!("sparse solve failed: {e}"), t.elapsed(), secs(300));
            return;
        }
    };
    let (ed, es) = (dense.pair.energy(), sparse.pair.energy());
    let d = (ed - es).norm();
    let mut detail = format!(
        "θ={theta}: dense FGH-64 {:.7}{:+.7}i, sparse FD6-96 {:.7}{:+.7}i, |Δ| {d:.1e} (< 1e-4)",
        ed.re, ed.im, es.re, es.im
    );
    if let Some(ks) = &led.ks_exchange {
        let e1 = dense.threshold;
        detail.push_str(&format!(
            "; reported: KS exact exchange at θ={} gives E {:.6}{:+.6}i, ε_H {:.6}{:+.6}i against exact E₂ {:.6}{:+.6}i, E₂ − E₁ {:.6}{:+.6}i",
            ks.theta,
            ks.total_energy.re,
            ks.total_energy.im,
            ks.orbital_energies[0].re,
            ks.orbital_energies[0].im,
            ed.re,
            ed.im,
            (ed - e1).re,
            (ed - e1).im
        ));
    }
    led.report(12, "two-electron cross-validation", d < 1e-4, detail, t.elapsed(), secs(300));
}

fn main() {
    let mut led = Ledger::default();
    c1(&mut led);
    c2(&mut led);
    c3(&mut led);
    let cases = scf_cases(&mut led);
    c5(&mut led, &cases);
    c6(&mut led, &cases);
    c7(&mut led, &cases);
    c8(&mut led, &cases);
    c4(&mut led);
    led.ks_exchange = Some(cases.interacting.clone());
    c9(&mut led);
    c10(&mut led);
    c11(&mut led);
    c12(&mut led);
    led.lines.sort_by_key(|l| l.0);
    for (_, line) in &led.lines {
        println!("{line}");
    }
    if led.failed.is_empty() {
        println!("all acceptance checks passed");
    } else {
        led.failed.sort_unstable();
        println!("failed checks: {:?}", led.failed);
        std::process::exit(1);
    }
}
