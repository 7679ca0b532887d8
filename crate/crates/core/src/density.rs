//! Complex densities and their diagnostics.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::grid::Grid;
use crate::{Error, Result, C64};

/// `n_θ(x) = Σ f_i φ_i(x)²`, unconjugated.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDensity {
    pub grid: Grid,
    pub values: Vec<C64>,
    pub n_electrons: usize,
}

impl ComplexDensity {
    pub fn new(grid: Grid, values: Vec<C64>, n_electrons: usize) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::GridMismatch);
        }
        if !values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NumericRange("density"));
        }
        Ok(ComplexDensity { grid, values, n_electrons })
    }

    pub fn integral(&self) -> C64 {
        self.grid.integrate(&self.values)
    }

    /// `|∫n − N|`.
    pub fn normalization_deviation(&self) -> f64 {
        (self.integral() - self.n_electrons as f64).norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn argmax_abs(&self) -> usize {
        let mut best = (0, -1.0);
        for (j, z) in self.values.iter().enumerate() {
            if z.norm() > best.1 {
                best = (j, z.norm());
            }
        }
        best.0
    }
}

/// Density of orbitals with integer occupations.
pub fn build_density(grid: &Grid, orbitals: &[Vec<C64>], occupations: &[usize]) -> Result<ComplexDensity> {
    if orbitals.len() != occupations.len() {
        return Err(Error::Occupation(alloc::format!(
            "{} orbitals for {} occupations",
            orbitals.len(),
            occupations.len()
        )));
    }
    if occupations.iter().any(|&f| f > 2) {
        return Err(Error::Occupation(alloc::string::String::from("spatial orbitals hold at most 2 electrons")));
    }
    let mut values = alloc::vec![C64::new(0.0, 0.0); grid.n_points];
    for (phi, &f) in orbitals.iter().zip(occupations) {
        if phi.len() != grid.n_points {
            return Err(Error::GridMismatch);
        }
        for (n, p) in values.iter_mut().zip(phi) {
            *n += p * p * f as f64;
        }
    }
    ComplexDensity::new(*grid, values, occupations.iter().sum())
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// `|n|` and the continuous phase on index range `region`.
///
/// The phase is anchored at the `|n|` maximum of the region and unwrapped
/// outward in both directions.
pub fn magnitude_phase_in(n: &ComplexDensity, region: core::ops::Range<usize>) -> Result<(Vec<f64>, Vec<f64>)> {
    let vals = &n.values[region.clone()];
    if vals.is_empty() {
        return Err(Error::Window(n.grid.x_min, n.grid.x_max));
    }
    for (k, z) in vals.iter().enumerate() {
        if !(z.norm() > 1e-300) {
            return Err(Error::Unwrap(n.grid.x(region.start + k)));
        }
    }
    let mag: Vec<f64> = vals.iter().map(|z| z.norm()).collect();
    let anchor = (0..vals.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap();
    let mut phase = alloc::vec![0.0; vals.len()];
    phase[anchor] = vals[anchor].arg();
    for k in anchor + 1..vals.len() {
        phase[k] = phase[k - 1] + wrap(vals[k].arg() - vals[k - 1].arg());
    }
    for k in (0..anchor).rev() {
        phase[k] = phase[k + 1] + wrap(vals[k].arg() - vals[k + 1].arg());
    }
    Ok((mag, phase))
}

pub fn magnitude_phase(n: &ComplexDensity) -> Result<(Vec<f64>, Vec<f64>)> {
    magnitude_phase_in(n, 0..n.values.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    pub window: (f64, f64),
    pub side: Side,
    pub points: usize,
    /// Decay rate of `|n|` with distance `r` away from the bulk.
    pub kappa_fit: f64,
    /// Slope of the phase with `r`.
    pub k_fit: f64,
    pub kappa_pred: f64,
    pub k_pred: f64,
    pub r2_magnitude: f64,
    pub r2_phase: f64,
}

impl AsymptoticFit {
    /// Lower of the two regression qualities.
    pub fn r2(&self) -> f64 {
        self.r2_magnitude.min(self.r2_phase)
    }

    pub fn kappa_rel_err(&self) -> f64 {
        ((self.kappa_fit - self.kappa_pred) / self.kappa_pred).abs()
    }

    pub fn k_rel_err(&self) -> f64 {
        ((self.k_fit - self.k_pred) / self.k_pred).abs()
    }
}

/// Least squares `y ≈ a + b x`; returns `(b, r²)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u) * (v - a - b * u)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    (b, r2)
}

/// Predicted `(κ, k)` of the tail `n ∼ e^{i 2√(2ΔE) e^{iθ} r}`.
pub fn predicted_tail(e: C64, e_th: C64, theta: f64) -> (f64, f64) {
    let s = crate::cis(theta) * (e - e_th).sqrt() * (2.0 * 2f64.sqrt());
    (s.im, s.re)
}

/// Default fit window on one side of the density maximum: from the outermost
/// point with `|n| ≥ 1e−3 max|n|` to the first point beyond it with
/// `|n| ≤ 1e−9 max|n|`, or the grid edge.
pub fn auto_tail_window(n: &ComplexDensity, side: Side) -> Result<(f64, f64)> {
    let m = n.max_abs();
    let peak = n.argmax_abs();
    let g = &n.grid;
    let len = n.values.len();
    let outward: Vec<usize> = match side {
        Side::Right => (peak..len).collect(),
        Side::Left => (0..=peak).rev().collect(),
    };
    let start = outward.iter().rposition(|&j| n.values[j].norm() >= 1e-3 * m).unwrap_or(0);
    let end = outward[start..]
        .iter()
        .position(|&j| n.values[j].norm() <= 1e-9 * m)
        .map_or(outward.len() - 1, |p| start + p);
    let (a, b) = (g.x(outward[start]), g.x(outward[end]));
    Ok(if a < b { (a, b) } else { (b, a) })
}

/// Exponential fit of a density tail against the predicted decay.
///
/// The side follows from where `window` sits relative to the density
/// maximum; `r` is the distance measured outward.
pub fn asymptotic_fit(n: &ComplexDensity, window: (f64, f64), e: C64, e_th: C64, theta: f64) -> Result<AsymptoticFit> {
    let range = n.grid.index_range(window.0, window.1)?;
    if range.len() < 10 {
        return Err(Error::Window(window.0, window.1));
    }
    let peak_x = n.grid.x(n.argmax_abs());
    let side = if window.0 >= peak_x {
        Side::Right
    } else if window.1 <= peak_x {
        Side::Left
    } else {
        return Err(Error::Window(window.0, window.1));
    };
    let (mag, phase) = magnitude_phase_in(n, range.clone())?;
    let xs: Vec<f64> = range.clone().map(|j| n.grid.x(j)).collect();
    let r: Vec<f64> = match side {
        Side::Right => xs.clone(),
        Side::Left => xs.iter().map(|x| -x).collect(),
    };
    // |n| must fall outward
    let outward_mag: Vec<f64> = match side {
        Side::Right => mag.clone(),
        Side::Left => mag.iter().rev().copied().collect(),
    };
    if !outward_mag.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::NonMonotonicTail);
    }
    let ln: Vec<f64> = mag.iter().map(|v| v.ln()).collect();
    let (slope_m, r2_magnitude) = linear_fit(&r, &ln);
    let (slope_p, r2_phase) = linear_fit(&r, &phase);
    let (kappa_pred, k_pred) = predicted_tail(e, e_th, theta);
    Ok(AsymptoticFit {
        window,
        side,
        points: range.len(),
        kappa_fit: -slope_m,
        k_fit: slope_p,
        kappa_pred,
        k_pred,
        r2_magnitude,
        r2_phase,
    })
}

/// `(∫(Re Δn)², ∫(Im Δn)²)` on the common grid.
pub fn density_error(a: &ComplexDensity, b: &ComplexDensity) -> Result<(f64, f64)> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch);
    }
    let w = a.grid.weight();
    let (mut er, mut ei) = (0.0, 0.0);
    for (x, y) in a.values.iter().zip(&b.values) {
        let d = x - y;
        er += d.re * d.re;
        ei += d.im * d.im;
    }
    Ok((er * w, ei * w))
}

fn peak_to_peak(n: &ComplexDensity, window: (f64, f64), m: f64) -> Result<f64> {
    let range = n.grid.index_range(window.0, window.1)?;
    let (lo, hi) = range.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| {
        let y = n.values[j].im / m;
        (lo.min(y), hi.max(y))
    });
    Ok(hi - lo)
}

/// `A_R − A_L` with `A` the peak-to-peak of `Im n / max|n|` in each window.
/// Positive means the tail oscillates more on the right.
pub fn tail_asymmetry(n: &ComplexDensity, left: (f64, f64), right: (f64, f64)) -> Result<f64> {
    let (wl, wr) = (left.1 - left.0, right.1 - right.0);
    if !(left.1 <= right.0) || (wl - wr).abs() > 1e-9 * wl.max(wr) {
        return Err(Error::invalid("tail windows must be disjoint, ordered left/right and of equal width"));
    }
    let m = n.max_abs();
    Ok(peak_to_peak(n, right, m)? - peak_to_peak(n, left, m)?)
}
