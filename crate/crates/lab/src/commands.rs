//! Subcommand implementations. Each reads a validated [`RunConfig`] and
//! writes its artifacts into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use dfrt_core::density::{
    asymptotic_fit, auto_tail_window, build_density, density_error, tail_asymmetry, ComplexDensity, Side,
};
use dfrt_core::discretization::basis_hamiltonian;
use dfrt_core::eigen::{
    eig_complex, overlap, select_resonance, trajectory_from_spectra, validate_thetas, ArnoldiOptions, OneElectron,
    ResonanceState, Spectrum, ThetaTrajectory,
};
use dfrt_core::ks::{run_scf, ScfResult};
use dfrt_core::many_body::{pair_density, TwoElectron, TwoElectronBackend, TwoElectronOptions};
use dfrt_core::potential::PotentialSpec;
use dfrt_core::scaling::{hartree_exchange_scaling_check, kinetic_scaling_check, Dim, GaussianState, ScalingRatio};
use dfrt_core::{Error, C64};

use crate::config::{BackendConfig, KineticConfig, RunConfig};
use crate::error::CliError;
use crate::output::{complex, num, read_density, write_amplitudes, write_csv, write_density, write_json};
use crate::parallel::par_map;
use crate::svg::{line_chart, Series};

/// Settings shared by all subcommands.
pub struct Context {
    pub out: PathBuf,
    pub workers: usize,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn prepare(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out)
            .map_err(|e| CliError::solver(format!("cannot create {}: {e}", self.out.display())))
    }
}

fn warn_sector(spec: &PotentialSpec, thetas: &[f64]) {
    if let Some(limit) = spec.analytic_sector() {
        if let Some(t) = thetas.iter().copied().filter(|&t| t > limit).reduce(f64::max) {
            eprintln!(
                "warning: theta = {t} exceeds {limit:.4}, where the rotated axis passes a pole of the potential; \
                 eigenvalues beyond it belong to another continuation"
            );
        }
    }
}

fn resonance_json(theta: f64, energy: C64, threshold: C64, extra: Value) -> Value {
    let width = -2.0 * energy.im;
    let mut v = json!({
        "theta": theta,
        "energy": complex(energy),
        "position": energy.re,
        "width": width,
        "lifetime": Value::from(1.0 / width),
        "threshold": complex(threshold),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
        m.extend(e);
    }
    v
}

fn one_electron(cfg: &RunConfig) -> Result<(OneElectron, PotentialSpec), CliError> {
    let spec = cfg.potential.spec()?;
    let grid = cfg.grid()?;
    Ok((OneElectron::new(grid, spec.clone(), cfg.kinetic.into())?, spec))
}

pub fn solve1e(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let (one, spec) = one_electron(cfg)?;
    let theta = cfg.theta()?;
    let window = cfg.window()?;
    warn_sector(&spec, &[theta]);
    ctx.prepare()?;
    let sol = one.solve(theta, window)?;
    let n = build_density(&one.grid, &[sol.state.vector.clone()], &[1])?;
    let extra = json!({ "c_norm_residual": sol.state.c_norm_residual, "norm_deviation": n.normalization_deviation() });
    write_json(&ctx.path("resonance.json"), &resonance_json(theta, sol.state.energy, C64::new(sol.threshold, 0.0), extra))?;
    write_density(&ctx.path("density.csv"), &n)?;
    Ok(())
}

fn seed_state(one: &OneElectron, s: &Spectrum, window: Option<(f64, f64)>) -> dfrt_core::Result<ResonanceState> {
    let mask = if s.theta > 0.0 { one.probe(s)? } else { vec![false; s.pairs.len()] };
    let th = one.threshold();
    let window = window.unwrap_or((th.unwrap_or(f64::NEG_INFINITY), f64::INFINITY));
    select_resonance(&s.pairs, window, None, Some(&mask), s.weight)
}

fn write_trajectory(ctx: &Context, t: &ThetaTrajectory, loss: Option<(f64, f64)>) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = (0..t.thetas.len())
        .map(|i| vec![num(t.thetas[i]), num(t.energies[i].re), num(t.energies[i].im), num(t.derivative_abs[i])])
        .collect();
    write_csv(&ctx.path("trajectory.csv"), &["theta", "re_E", "im_E", "dE_dtheta_abs"], &rows)?;
    let pts = t.energies.iter().map(|e| (e.re, e.im)).collect();
    let svg = line_chart("theta trajectory", "Re E", "Im E", &[Series { label: "E(theta)".into(), points: pts }], false);
    fs::write(ctx.path("trajectory.svg"), svg)?;
    let k = t.thetas.iter().position(|&x| x == t.theta_opt).unwrap_or(0);
    let summary = json!({
        "theta_opt": t.theta_opt,
        "energy_opt": complex(t.energies[k]),
        "stationarity": t.stationarity,
        "points": t.thetas.len(),
        "complete": loss.is_none(),
        "tracking_loss": loss.map(|(theta, ov)| json!({ "theta": theta, "overlap": ov })),
    });
    write_json(&ctx.path("summary.json"), &summary)
}

pub fn theta_scan(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let (one, spec) = one_electron(cfg)?;
    let thetas = cfg.theta_list.clone().ok_or_else(|| CliError::config("theta-scan needs `theta_list`"))?;
    validate_thetas(&thetas).map_err(|e| CliError::config(format!("theta_list: {e}")))?;
    let window = cfg.window()?;
    warn_sector(&spec, &thetas);
    ctx.prepare()?;
    let spectra =
        par_map(ctx.workers, &thetas, |&t| one.spectrum(t)).into_iter().collect::<dfrt_core::Result<Vec<_>>>()?;
    match trajectory_from_spectra(&spectra, |s| seed_state(&one, s, window)) {
        Ok(t) => write_trajectory(ctx, &t, None),
        Err(Error::TrackingLoss { theta, overlap }) => {
            let k = thetas.iter().position(|&x| x == theta).unwrap_or(0);
            if k >= 3 {
                let t = trajectory_from_spectra(&spectra[..k], |s| seed_state(&one, s, window))?;
                write_trajectory(ctx, &t, Some((theta, overlap)))?;
            }
            Err(CliError::solver(format!(
                "continuation lost at theta = {theta} (overlap {overlap:.3}); {} points written",
                if k >= 3 { k } else { 0 }
            )))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn basis_conv(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let spec = cfg.potential.spec()?;
    let grid = cfg.grid()?;
    let theta = cfg.theta()?;
    let window = cfg.window()?;
    let bc = cfg.basis.as_ref().ok_or_else(|| CliError::config("basis-conv needs a `basis` block"))?;
    if bc.sizes.is_empty() || bc.sizes.contains(&0) {
        return Err(CliError::config("basis.sizes must list positive sizes"));
    }
    if cfg.kinetic != KineticConfig::Fgh {
        eprintln!("warning: the reference always uses the Fourier-grid kinetic operator");
    }
    warn_sector(&spec, &[theta]);
    ctx.prepare()?;
    let reference = OneElectron::new(grid, spec.clone(), dfrt_core::discretization::KineticKind::Fgh)?
        .solve(theta, window)
        .map_err(|e| CliError::solver(format!("reference solve failed: {e}")))?
        .state;
    let n_ref = build_density(&grid, &[reference.vector.clone()], &[1])?;
    let xs = grid.points();
    let results = par_map(ctx.workers, &bc.sizes, |&size| -> dfrt_core::Result<(usize, (f64, f64), C64)> {
        let basis = bc.basis(size, &grid);
        let pairs = eig_complex(&basis_hamiltonian(&basis, &spec, theta)?)?;
        // the basis state that looks most like the reference resonance
        let best = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (i, overlap(&basis.project(&p.vector, &xs), &reference.vector)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .ok_or(Error::NoResonance)?;
        let state = ResonanceState::from_pair(&pairs[best], 1.0)?;
        let n = build_density(&grid, &[basis.project(&state.vector, &xs)], &[1])?;
        Ok((size, density_error(&n, &n_ref)?, state.energy))
    });
    let rows = results.into_iter().collect::<dfrt_core::Result<Vec<_>>>()?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(s, (er, ei), e)| vec![s.to_string(), num(*er), num(*ei), num(e.re), num(e.im)])
        .collect();
    write_csv(&ctx.path("convergence.csv"), &["n_basis", "err_re", "err_im", "re_E", "im_E"], &table)?;
    let series = [
        Series { label: "err_re".into(), points: rows.iter().map(|(s, e, _)| (*s as f64, e.0)).collect() },
        Series { label: "err_im".into(), points: rows.iter().map(|(s, e, _)| (*s as f64, e.1)).collect() },
    ];
    fs::write(ctx.path("convergence.svg"), line_chart("density convergence", "basis size", "error", &series, true))?;
    Ok(())
}

pub fn solve2e(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let spec = cfg.potential.spec()?;
    let grid = cfg.grid()?;
    let theta = cfg.theta()?;
    let inter = cfg.interaction.spec()?;
    let te = &cfg.two_electron;
    let mut arnoldi = ArnoldiOptions::default();
    if let Some(k) = te.krylov_dim {
        arnoldi.krylov_dim = k;
    }
    let backend = match te.backend {
        BackendConfig::Dense => TwoElectronBackend::Dense,
        BackendConfig::ShiftInvert => {
            let [re, im] = te.shift.ok_or_else(|| CliError::config("shift-invert needs `two_electron.shift`"))?;
            if te.n_eigs == 0 {
                return Err(CliError::config("two_electron.n_eigs must be positive"));
            }
            TwoElectronBackend::ShiftInvert { shift: C64::new(re, im), n_eigs: te.n_eigs }
        }
    };
    let opts = TwoElectronOptions { backend, window: cfg.window()?, arnoldi };
    warn_sector(&spec, &[theta]);
    let problem = TwoElectron::new(grid, spec, inter, cfg.kinetic.into())?;
    ctx.prepare()?;
    let sol = problem.solve(theta, &opts)?;
    let n = pair_density(&sol.pair)?;
    let extra = json!({ "norm_deviation": n.normalization_deviation() });
    write_json(&ctx.path("resonance.json"), &resonance_json(theta, sol.pair.energy(), sol.threshold, extra))?;
    write_density(&ctx.path("density.csv"), &n)?;
    if te.dump_amplitudes {
        write_amplitudes(&ctx.path("pair_amplitudes.bin"), &sol.pair.amplitude_grid())?;
    }
    Ok(())
}

fn scf_json(r: &ScfResult) -> Value {
    json!({
        "theta": r.theta,
        "energy_re": r.total_energy.re,
        "energy_im": r.total_energy.im,
        "width": r.width(),
        "lifetime": Value::from(r.lifetime()),
        "iterations": r.iterations,
        "converged": r.converged,
        "restarts": r.restarts,
        "orbital_energies": r.orbital_energies.iter().map(|e| complex(*e)).collect::<Vec<_>>(),
        "xi": complex(r.xi),
        "ks_threshold": complex(r.ks_threshold),
        "threshold": complex(r.threshold),
        "max_norm_deviation": r.max_norm_deviation,
    })
}

pub fn scf(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let spec = cfg.potential.spec()?;
    let grid = cfg.grid()?;
    let theta = cfg.theta()?;
    let inter = cfg.interaction.spec()?;
    let sc = cfg.scf.config(theta, cfg.kinetic.into())?;
    warn_sector(&spec, &[theta]);
    ctx.prepare()?;
    let r = run_scf(&sc, &spec, &inter, &grid)?;
    write_json(&ctx.path("scf.json"), &scf_json(&r))?;
    write_density(&ctx.path("scf_density.csv"), &r.density)?;
    let rows: Vec<Vec<String>> = r
        .history
        .iter()
        .map(|h| vec![h.iteration.to_string(), num(h.max_dn), num(h.energy.re), num(h.energy.im)])
        .collect();
    write_csv(&ctx.path("scf_iterations.csv"), &["iter", "max_dn", "re_E", "im_E"], &rows)?;
    if !r.converged {
        return Err(CliError::Unconverged(format!("SCF stopped after {} iterations", r.iterations)));
    }
    Ok(())
}

fn default_tail_windows(n: &ComplexDensity) -> ((f64, f64), (f64, f64)) {
    let g = &n.grid;
    let l = g.x_max - g.x_min;
    ((g.x_min + 0.2 * l, g.x_min + 0.4 * l), (g.x_max - 0.4 * l, g.x_max - 0.2 * l))
}

fn fit_block(n: &ComplexDensity, side: Side, e: C64, e_th: C64, theta: f64) -> Value {
    let name = match side {
        Side::Left => "left",
        Side::Right => "right",
    };
    let fit = auto_tail_window(n, side).and_then(|w| asymptotic_fit(n, w, e, e_th, theta));
    match fit {
        Ok(f) => json!({
            "side": name,
            "window": [f.window.0, f.window.1],
            "points": f.points,
            "kappa_fit": f.kappa_fit,
            "k_fit": f.k_fit,
            "kappa_pred": f.kappa_pred,
            "k_pred": f.k_pred,
            "kappa_rel_err": f.kappa_rel_err(),
            "k_rel_err": f.k_rel_err(),
            "r2": f.r2(),
        }),
        Err(e) => json!({ "side": name, "error": e.to_string() }),
    }
}

pub fn density_analyze(cfg: &RunConfig, ctx: &Context, base: Option<&Path>) -> Result<(), CliError> {
    let dc = cfg.density.as_ref().ok_or_else(|| CliError::config("density-analyze needs a `density` block"))?;
    let path = match base {
        Some(b) if dc.path.is_relative() => b.join(&dc.path),
        _ => dc.path.clone(),
    };
    let n = read_density(&path, dc.n_electrons)?;
    let (dl, dr) = default_tail_windows(&n);
    let left = dc.left_window.map_or(dl, |w| (w[0], w[1]));
    let right = dc.right_window.map_or(dr, |w| (w[0], w[1]));
    ctx.prepare()?;
    let fits = match (dc.energy, dc.threshold, dc.theta) {
        (Some(e), Some(t), Some(theta)) => {
            let (e, t) = (C64::new(e[0], e[1]), C64::new(t[0], t[1]));
            json!([fit_block(&n, Side::Left, e, t, theta), fit_block(&n, Side::Right, e, t, theta)])
        }
        _ => Value::Null,
    };
    let asym = match tail_asymmetry(&n, left, right) {
        Ok(a) => json!({ "value": a, "left_window": [left.0, left.1], "right_window": [right.0, right.1] }),
        Err(e) => json!({ "error": e.to_string(), "left_window": [left.0, left.1], "right_window": [right.0, right.1] }),
    };
    let analysis = json!({
        "n_electrons": n.n_electrons,
        "integral": complex(n.integral()),
        "normalization_deviation": n.normalization_deviation(),
        "asymptotic_fit": fits,
        "tail_asymmetry": asym,
    });
    write_json(&ctx.path("analysis.json"), &analysis)?;
    let xs = n.grid.points();
    let series = [
        Series { label: "Re n".into(), points: xs.iter().zip(&n.values).map(|(x, z)| (*x, z.re)).collect() },
        Series { label: "Im n".into(), points: xs.iter().zip(&n.values).map(|(x, z)| (*x, z.im)).collect() },
    ];
    fs::write(ctx.path("density.svg"), line_chart("complex density", "x", "n", &series, false))?;
    Ok(())
}

/// Scaling relations at or below this deviation pass.
pub const SCALING_TOL: f64 = 1e-10;

pub fn scaling_check(cfg: &RunConfig, ctx: &Context) -> Result<(), CliError> {
    let sc = &cfg.scaling;
    if sc.thetas.is_empty() || sc.sigmas.is_empty() {
        return Err(CliError::config("scaling needs thetas and sigmas"));
    }
    if let Some(t) = sc.thetas.iter().find(|t| !(t.is_finite() && (0.0..dfrt_core::THETA_MAX).contains(*t))) {
        return Err(CliError::config(format!("scaling theta {t} outside [0, pi/4)")));
    }
    if let Some(s) = sc.sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(CliError::config(format!("scaling sigma {s} must be positive")));
    }
    if sc.n_electrons == 0 {
        return Err(CliError::config("scaling.n_electrons must be positive"));
    }
    ctx.prepare()?;
    let mut rows = Vec::new();
    let mut failed = 0;
    for &theta in &sc.thetas {
        for &sigma in &sc.sigmas {
            let s = C64::new(sigma, 0.0);
            let g1 = GaussianState::new(Dim::One, s, sc.n_electrons)?;
            let g3 = GaussianState::new(Dim::Three, s, sc.n_electrons)?;
            let k1 = kinetic_scaling_check(&g1, theta)?;
            let k3 = kinetic_scaling_check(&g3, theta)?;
            let (h, x) = hartree_exchange_scaling_check(&g3, theta)?;
            for (name, r) in [("kinetic-1d", k1), ("kinetic-3d", k3), ("hartree-3d", h), ("exchange-3d", x)] {
                let pass = r.deviation() <= SCALING_TOL;
                failed += usize::from(!pass);
                rows.push(scaling_row(name, theta, sigma, &r, pass));
            }
        }
    }
    write_csv(
        &ctx.path("scaling.csv"),
        &["relation", "theta", "sigma", "predicted_phase", "measured_phase", "deviation", "pass"],
        &rows,
    )?;
    if failed > 0 {
        return Err(CliError::solver(format!("{failed} scaling relations exceed {SCALING_TOL:e}")));
    }
    Ok(())
}

fn scaling_row(name: &str, theta: f64, sigma: f64, r: &ScalingRatio, pass: bool) -> Vec<String> {
    vec![
        name.to_string(),
        num(theta),
        num(sigma),
        num(r.predicted.arg()),
        num(r.quadrature.arg()),
        num(r.deviation()),
        if pass { "pass" } else { "fail" }.to_string(),
    ]
}
