//! Scaling relations of the complex-scaled functionals, checked on Gaussians.
//!
//! Scaling a Gaussian of width `σ` gives the Gaussian of width `σ e^{−iθ}`,
//! so every functional has a closed form in `σ`. Each check also evaluates
//! the c-product integral by quadrature along the real axis, which tests the
//! unconjugated inner product without involving any eigensolver.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::quadrature::composite;
use crate::{cis, Error, Result, C64};

use core::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    One,
    Three,
}

impl Dim {
    pub fn value(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Three => 3,
        }
    }
}

/// `ψ(r) = (πσ²)^{−d/4} e^{−r²/(2σ²)}`, occupied by `n_electrons`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub dim: Dim,
    pub sigma: C64,
    pub n_electrons: usize,
}

/// Agreement allowed between quadrature and closed form.
pub const QUADRATURE_TOL: f64 = 1e-10;

const PANELS: usize = 48;
const ORDER: usize = 20;

impl GaussianState {
    pub fn new(dim: Dim, sigma: C64, n_electrons: usize) -> Result<Self> {
        let g = GaussianState { dim, sigma, n_electrons };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.re.is_finite() && self.sigma.im.is_finite()) || !((self.sigma * self.sigma).re > 0.0) {
            return Err(Error::Normalizability);
        }
        if self.n_electrons == 0 {
            return Err(Error::invalid("need at least one electron"));
        }
        Ok(())
    }

    /// `ψ²` prefactor, `(πσ²)^{−d/2}`.
    fn norm2(&self) -> C64 {
        (self.sigma * self.sigma * PI).powf(-(self.dim.value() as f64) / 2.0)
    }

    /// Decay length of `|ψ|²` along the real axis.
    fn reach(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        // |e^{−x²/σ²}| = e^{−x² Re(σ²)/|σ|⁴}
        12.0 * s2.norm() / s2.re.sqrt()
    }

    /// `∫ ψ² dr` along the real axis, 1 by construction.
    pub fn norm_quadrature(&self) -> C64 {
        let s2 = self.sigma * self.sigma;
        let a = self.norm2();
        match self.dim {
            Dim::One => integrate(-self.reach(), self.reach(), |x| a * (-(x * x) / s2).exp()),
            Dim::Three => integrate(0.0, self.reach(), |r| a * (-(r * r) / s2).exp() * (4.0 * PI * r * r)),
        }
    }

    /// `∫ n`, with `n = N ψ²`.
    pub fn density_integral(&self) -> C64 {
        self.norm_quadrature() * self.n_electrons as f64
    }

    /// Closed-form `(ψ|T̂|ψ) = d/(4σ²)` per electron.
    pub fn kinetic(&self) -> C64 {
        C64::new(self.dim.value() as f64 / 4.0, 0.0) / (self.sigma * self.sigma)
    }

    /// `½∫ (∇ψ)²` per electron by quadrature.
    pub fn kinetic_quadrature(&self) -> C64 {
        let s2 = self.sigma * self.sigma;
        let a = self.norm2();
        // (∂ψ/∂r)² = r²/σ⁴ ψ²
        let f = |r: f64| a * (-(r * r) / s2).exp() * (r * r) / (s2 * s2) * 0.5;
        match self.dim {
            Dim::One => integrate(-self.reach(), self.reach(), f),
            Dim::Three => integrate(0.0, self.reach(), |r| f(r) * (4.0 * PI * r * r)),
        }
    }

    /// Closed-form Coulomb `E_H = N²/(σ√(2π))` of the 3D density.
    pub fn hartree(&self) -> Result<C64> {
        self.require_3d()?;
        if !(self.sigma.re > 0.0) {
            return Err(Error::BranchCut("Hartree closed form needs Re σ > 0"));
        }
        let n = self.n_electrons as f64;
        Ok(C64::new(n * n / (2.0 * PI).sqrt(), 0.0) / self.sigma)
    }

    /// `E_H = (N²/π) ∫₀^∞ e^{−k²σ²/2} dk`, the momentum-space form.
    pub fn hartree_quadrature(&self) -> Result<C64> {
        self.require_3d()?;
        let s2 = self.sigma * self.sigma;
        let n = self.n_electrons as f64;
        let kmax = 12.0 / s2.re.sqrt();
        Ok(integrate(0.0, kmax, |k| (-(s2 * (k * k)) * 0.5).exp()) * (n * n / PI))
    }

    fn require_3d(&self) -> Result<()> {
        if self.dim != Dim::Three {
            return Err(Error::invalid("the Coulomb Hartree check is three-dimensional"));
        }
        Ok(())
    }
}

fn integrate(a: f64, b: f64, f: impl Fn(f64) -> C64) -> C64 {
    let (xs, ws) = composite(a, b, PANELS, ORDER);
    xs.into_iter().zip(ws).map(|(x, w)| f(x) * w).sum()
}

/// The scaled state: `σ → σ e^{−iθ}`.
pub fn scale_state(g: &GaussianState, theta: f64) -> Result<GaussianState> {
    g.validate()?;
    let out = GaussianState { sigma: g.sigma * cis(-theta), ..*g };
    out.validate()?;
    Ok(out)
}

/// A scaling ratio from closed forms and from quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRatio {
    pub predicted: C64,
    pub closed_form: C64,
    pub quadrature: C64,
}

impl ScalingRatio {
    pub fn deviation(&self) -> f64 {
        (self.closed_form - self.predicted).norm().max((self.quadrature - self.predicted).norm())
    }
}

fn cross_check(closed: C64, quad: C64) -> Result<()> {
    let d = (closed - quad).norm() / closed.norm().max(1.0);
    if d > QUADRATURE_TOL {
        return Err(Error::Discretization(d));
    }
    Ok(())
}

/// `(ψ_θ|T̂|ψ_θ)/⟨ψ|T̂|ψ⟩`, predicted `e^{2iθ}`.
pub fn kinetic_scaling_check(g: &GaussianState, theta: f64) -> Result<ScalingRatio> {
    let s = scale_state(g, theta)?;
    let (t0c, t0q) = (g.kinetic(), g.kinetic_quadrature());
    let (tc, tq) = (s.kinetic(), s.kinetic_quadrature());
    cross_check(t0c, t0q)?;
    cross_check(tc, tq)?;
    Ok(ScalingRatio { predicted: cis(2.0 * theta), closed_form: tc / t0c, quadrature: tq / t0q })
}

/// Hartree and exchange ratios `E[n_θ]/E[n]`, both predicted `e^{iθ}`.
///
/// Exchange is `−½E_H` for the two-electron singlet, so its ratio follows the
/// Hartree one for any electron count.
pub fn hartree_exchange_scaling_check(g: &GaussianState, theta: f64) -> Result<(ScalingRatio, ScalingRatio)> {
    let s = scale_state(g, theta)?;
    let (h0c, h0q) = (g.hartree()?, g.hartree_quadrature()?);
    let (hc, hq) = (s.hartree()?, s.hartree_quadrature()?);
    cross_check(h0c, h0q)?;
    cross_check(hc, hq)?;
    let h = ScalingRatio { predicted: cis(theta), closed_form: hc / h0c, quadrature: hq / h0q };
    let x = ScalingRatio {
        predicted: cis(theta),
        closed_form: (hc * -0.5) / (h0c * -0.5),
        quadrature: (hq * -0.5) / (h0q * -0.5),
    };
    Ok((h, x))
}

/// `z^p` continued along a path.
///
/// The branch is principal at `path[0]` and follows the straight segments
/// `path[0] → … → path[last] → z`. An empty path gives the principal value.
pub fn cpow_branch(z: C64, p: f64, path: &[C64]) -> Result<C64> {
    if z == C64::new(0.0, 0.0) {
        return Err(Error::PathThroughZero);
    }
    let Some(&start) = path.first() else {
        return Ok(z.powf(p));
    };
    if start == C64::new(0.0, 0.0) {
        return Err(Error::PathThroughZero);
    }
    let mut arg = start.arg();
    let mut prev = start;
    let mut points: Vec<C64> = path[1..].to_vec();
    points.push(z);
    for b in points {
        if crosses_zero(prev, b) {
            return Err(Error::PathThroughZero);
        }
        // a segment that misses 0 subtends less than π
        arg += (b / prev).arg();
        prev = b;
    }
    Ok((C64::new(z.norm().ln(), arg) * p).exp())
}

fn crosses_zero(a: C64, b: C64) -> bool {
    if b == C64::new(0.0, 0.0) {
        return true;
    }
    let cross = a.re * b.im - a.im * b.re;
    let dot = a.re * b.re + a.im * b.im;
    cross.abs() <= 1e-15 * a.norm() * b.norm() && dot < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn identity_at_zero_angle() {
        let g = GaussianState::new(Dim::One, C64::new(1.3, 0.0), 2).unwrap();
        assert_eq!(scale_state(&g, 0.0).unwrap(), g);
        let r = kinetic_scaling_check(&g, 0.0).unwrap();
        assert!(close(r.closed_form, C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn unit_width_rotates() {
        let g = GaussianState::new(Dim::One, C64::new(1.0, 0.0), 1).unwrap();
        let s = scale_state(&g, 0.2).unwrap();
        assert!(close(s.sigma, cis(-0.2), 1e-15));
        assert!(close(s.density_integral(), C64::new(1.0, 0.0), 1e-12));
    }

    #[test]
    fn kinetic_ratio_examples() {
        let g = GaussianState::new(Dim::One, C64::new(1.0, 0.0), 1).unwrap();
        let r = kinetic_scaling_check(&g, 0.3).unwrap();
        assert!(r.deviation() < 1e-10);
        let g3 = GaussianState::new(Dim::Three, C64::new(2.5, 0.0), 1).unwrap();
        let r3 = kinetic_scaling_check(&g3, 0.3).unwrap();
        assert!(r3.deviation() < 1e-10);
        assert!(close(r3.predicted, cis(0.6), 1e-15));
    }

    #[test]
    fn closed_forms_match_real_values() {
        // 3D unit Gaussian: ⟨T⟩ = 3/4, E_H = N²/√(2π)
        let g = GaussianState::new(Dim::Three, C64::new(1.0, 0.0), 2).unwrap();
        assert!((g.kinetic_quadrature().re - 0.75).abs() < 1e-13);
        assert!((g.hartree_quadrature().unwrap().re - 4.0 / (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!(close(g.norm_quadrature(), C64::new(1.0, 0.0), 1e-13));
    }

    #[test]
    fn hartree_ratio_examples() {
        for sigma in [1.0, 0.5] {
            let g = GaussianState::new(Dim::Three, C64::new(sigma, 0.0), 2).unwrap();
            let (h, x) = hartree_exchange_scaling_check(&g, 0.25).unwrap();
            assert!(h.deviation() < 1e-10 && x.deviation() < 1e-10);
        }
        let g = GaussianState::new(Dim::Three, C64::new(1.0, 0.0), 2).unwrap();
        let (h, _) = hartree_exchange_scaling_check(&g, 0.0).unwrap();
        assert!(close(h.closed_form, C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn hartree_needs_three_dimensions() {
        let g = GaussianState::new(Dim::One, C64::new(1.0, 0.0), 2).unwrap();
        assert!(hartree_exchange_scaling_check(&g, 0.1).is_err());
    }

    #[test]
    fn normalizability_is_guarded() {
        let g = GaussianState::new(Dim::One, C64::new(1.0, 0.0), 1).unwrap();
        assert_eq!(scale_state(&g, 0.8), Err(Error::Normalizability));
        assert!(GaussianState::new(Dim::One, C64::new(1.0, 1.0), 1).is_err());
    }

    #[test]
    fn cpow_principal_and_monodromy() {
        let p = 4.0 / 3.0;
        let z = C64::new(4.0, 0.0);
        let principal = z.powf(p);
        assert!(close(cpow_branch(z, p, &[]).unwrap(), principal, 1e-14));
        assert!(close(cpow_branch(z, p, &[z]).unwrap(), principal, 1e-14));
        let loop_path = [C64::new(4.0, 0.0), C64::new(0.0, 4.0), C64::new(-4.0, 0.0), C64::new(0.0, -4.0)];
        let wound = cpow_branch(z, p, &loop_path).unwrap();
        assert!(close(wound, principal * cis(8.0 * PI / 3.0), 1e-12));
    }

    #[test]
    fn cpow_follows_upper_half_plane() {
        let p = 4.0 / 3.0;
        let z = C64::new(-1.0, 0.01);
        let v = cpow_branch(z, p, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]).unwrap();
        assert!(close(v, z.powf(p), 1e-12));
        // through the lower half-plane the endpoint is reached with arg ≈ −π
        let w = cpow_branch(z, p, &[C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(-1.0, -0.01)]).unwrap();
        assert!(close(w, z.powf(p) * cis(-2.0 * PI * p), 1e-12));
    }

    #[test]
    fn cpow_rejects_zero() {
        assert_eq!(cpow_branch(C64::new(-1.0, 0.0), 0.5, &[C64::new(1.0, 0.0)]), Err(Error::PathThroughZero));
        assert_eq!(cpow_branch(C64::new(0.0, 0.0), 0.5, &[]), Err(Error::PathThroughZero));
    }

    proptest! {
        #[test]
        fn scaling_is_a_group(t1 in 0.0f64..0.35, t2 in 0.0f64..0.35, s in 0.3f64..3.0) {
            let g = GaussianState::new(Dim::One, C64::new(s, 0.0), 2).unwrap();
            let twice = scale_state(&scale_state(&g, t1).unwrap(), t2).unwrap();
            let once = scale_state(&g, t1 + t2).unwrap();
            prop_assert!((twice.sigma - once.sigma).norm() < 1e-14 * s);
        }

        #[test]
        fn kinetic_phase_is_width_independent(t in 0.0f64..0.7, s in 0.3f64..3.0, three in any::<bool>()) {
            let dim = if three { Dim::Three } else { Dim::One };
            let g = GaussianState::new(dim, C64::new(s, 0.0), 1).unwrap();
            let r = kinetic_scaling_check(&g, t).unwrap();
            prop_assert!(r.deviation() < 1e-10);
        }

        #[test]
        fn scaled_density_keeps_electrons(t in 0.0f64..0.7, s in 0.3f64..3.0, n in 1usize..5) {
            let g = GaussianState::new(Dim::Three, C64::new(s, 0.0), n).unwrap();
            let d = scale_state(&g, t).unwrap().density_integral();
            prop_assert!((d - n as f64).norm() < 1e-10 * n as f64);
        }
    }
}
