//! Model external potentials, the soft-Coulomb interaction and decay thresholds.
//!
//! Every closed-form potential is analytic, so it can be evaluated at the
//! rotated coordinate `x e^{iθ}`. Sigmoids are evaluated in the overflow-safe
//! split form.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    /// `a[σ(2c(z−d)) + σ(2c(z+d))] − α e^{−z²/b} + γ σ(−2 s z)`.
    DoubleSigmoidGaussian,
    /// Linear interpolation of real samples; real arguments only.
    Tabulated,
    /// `½ ω² z²`.
    Harmonic,
    /// Sum of [`Term`]s.
    CustomClosedForm,
}

/// Building block of a custom closed-form potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    /// `height · σ(steepness (z − center))`
    Sigmoid { height: f64, steepness: f64, center: f64 },
    /// `−depth · e^{−(z − center)²/width2}`
    Gaussian { depth: f64, center: f64, width2: f64 },
    /// `½ k z²`
    Harmonic { k: f64 },
}

impl Term {
    fn eval(&self, z: C64) -> C64 {
        match *self {
            Term::Sigmoid { height, steepness, center } => sigmoid((z - center) * steepness) * height,
            Term::Gaussian { depth, center, width2 } => {
                let u = z - center;
                -(-(u * u) / width2).exp() * depth
            }
            Term::Harmonic { k } => z * z * (0.5 * k),
        }
    }

    fn mirrored(&self) -> Term {
        match *self {
            Term::Sigmoid { height, steepness, center } => {
                Term::Sigmoid { height, steepness: -steepness, center: -center }
            }
            Term::Gaussian { depth, center, width2 } => Term::Gaussian { depth, center: -center, width2 },
            t @ Term::Harmonic { .. } => t,
        }
    }
}

/// Overflow-safe logistic function `1/(1 + e^{−w})`.
#[inline]
pub fn sigmoid(w: C64) -> C64 {
    if w.re >= 0.0 {
        C64::new(1.0, 0.0) / ((-w).exp() + 1.0)
    } else {
        let e = w.exp();
        e / (e + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub gamma: f64,
    pub step_steepness: f64,
    /// Trap frequency of the harmonic kind.
    pub omega: f64,
    pub terms: Vec<Term>,
    /// `(x, v)` samples with strictly increasing `x`.
    pub table: Vec<(f64, f64)>,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            kind: PotentialKind::DoubleSigmoidGaussian,
            a: 4.0,
            alpha: 6.0,
            b: 0.5,
            c: 4.0,
            d: 2.0,
            gamma: 0.0,
            step_steepness: 10.0,
            omega: 1.0,
            terms: Vec::new(),
            table: Vec::new(),
        }
    }
}

impl PotentialSpec {
    pub fn double_sigmoid_gaussian(a: f64, alpha: f64, b: f64, c: f64, d: f64) -> Self {
        PotentialSpec { a, alpha, b, c, d, ..Default::default() }
    }

    /// Adds the smoothed step `γ σ(−2 s x)` that raises the left side.
    pub fn with_bias(mut self, gamma: f64, step_steepness: f64) -> Self {
        self.gamma = gamma;
        self.step_steepness = step_steepness;
        self
    }

    pub fn harmonic(omega: f64) -> Self {
        PotentialSpec { kind: PotentialKind::Harmonic, omega, ..Default::default() }
    }

    pub fn custom(terms: Vec<Term>) -> Self {
        PotentialSpec { kind: PotentialKind::CustomClosedForm, terms, ..Default::default() }
    }

    pub fn tabulated(table: Vec<(f64, f64)>) -> Self {
        PotentialSpec { kind: PotentialKind::Tabulated, table, ..Default::default() }
    }

    /// `h[σ(2c(x+d)) − σ(2c(x−d))] − α e^{−x²/b}`: even in `x`, open on both
    /// sides with threshold 0.
    pub fn symmetric_double_barrier(h: f64, alpha: f64, b: f64, c: f64, d: f64) -> Self {
        PotentialSpec::custom(alloc::vec![
            Term::Sigmoid { height: h, steepness: 2.0 * c, center: -d },
            Term::Sigmoid { height: -h, steepness: 2.0 * c, center: d },
            Term::Gaussian { depth: alpha, center: 0.0, width2: b },
        ])
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.alpha, self.b, self.c, self.d, self.gamma, self.step_steepness, self.omega]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("potential parameters must be finite"));
        }
        match self.kind {
            PotentialKind::DoubleSigmoidGaussian => {
                if !(self.b > 0.0 && self.c > 0.0 && self.d >= 0.0 && self.step_steepness > 0.0) {
                    return Err(Error::invalid("need b > 0, c > 0, d >= 0, step_steepness > 0"));
                }
            }
            PotentialKind::Harmonic => {
                if !(self.omega > 0.0) {
                    return Err(Error::invalid("harmonic potential needs omega > 0"));
                }
            }
            PotentialKind::CustomClosedForm => {
                if self.terms.is_empty() {
                    return Err(Error::invalid("custom potential has no terms"));
                }
                for t in &self.terms {
                    let ok = match *t {
                        Term::Sigmoid { height, steepness, center } => {
                            height.is_finite() && steepness.is_finite() && steepness != 0.0 && center.is_finite()
                        }
                        Term::Gaussian { depth, center, width2 } => {
                            depth.is_finite() && center.is_finite() && width2 > 0.0 && width2.is_finite()
                        }
                        Term::Harmonic { k } => k.is_finite(),
                    };
                    if !ok {
                        return Err(Error::invalid("malformed custom potential term"));
                    }
                }
            }
            PotentialKind::Tabulated => {
                if self.table.len() < 2 {
                    return Err(Error::invalid("tabulated potential needs at least two samples"));
                }
                let increasing = self.table.windows(2).all(|w| w[1].0 > w[0].0);
                let finite = self.table.iter().all(|(x, v)| x.is_finite() && v.is_finite());
                if !increasing || !finite {
                    return Err(Error::invalid("tabulated samples must be finite with increasing x"));
                }
            }
        }
        Ok(())
    }

    /// `v(z)` for complex `z`.
    pub fn eval(&self, z: C64) -> Result<C64> {
        let v = match self.kind {
            PotentialKind::DoubleSigmoidGaussian => {
                let two_c = 2.0 * self.c;
                let mut v = (sigmoid((z - self.d) * two_c) + sigmoid((z + self.d) * two_c)) * self.a;
                v -= (-(z * z) / self.b).exp() * self.alpha;
                if self.gamma != 0.0 {
                    v += sigmoid(-z * (2.0 * self.step_steepness)) * self.gamma;
                }
                v
            }
            PotentialKind::Harmonic => z * z * (0.5 * self.omega * self.omega),
            PotentialKind::CustomClosedForm => self.terms.iter().map(|t| t.eval(z)).sum(),
            PotentialKind::Tabulated => {
                if z.im != 0.0 {
                    return Err(Error::invalid("tabulated potential has no analytic continuation"));
                }
                C64::new(self.interpolate(z.re), 0.0)
            }
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NumericRange("potential"))
        }
    }

    /// `v(x_j e^{iθ})` on a list of real points.
    pub fn eval_scaled(&self, xs: &[f64], theta: f64) -> Result<Vec<C64>> {
        let rot = crate::cis(theta);
        xs.iter().map(|&x| self.eval(rot * x)).collect()
    }

    fn interpolate(&self, x: f64) -> f64 {
        let t = &self.table;
        if x <= t[0].0 {
            return t[0].1;
        }
        if x >= t[t.len() - 1].0 {
            return t[t.len() - 1].1;
        }
        let k = t.partition_point(|p| p.0 <= x) - 1;
        let (x0, v0) = t[k];
        let (x1, v1) = t[k + 1];
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    /// Real-axis limits `(v(−∞), v(+∞))`; infinite for confining potentials.
    pub fn asymptotes(&self) -> (f64, f64) {
        match self.kind {
            PotentialKind::DoubleSigmoidGaussian => (self.gamma, 2.0 * self.a),
            PotentialKind::Harmonic => (f64::INFINITY, f64::INFINITY),
            PotentialKind::Tabulated => (self.table[0].1, self.table[self.table.len() - 1].1),
            PotentialKind::CustomClosedForm => {
                let (mut l, mut r) = (0.0, 0.0);
                for t in &self.terms {
                    match *t {
                        Term::Sigmoid { height, steepness, .. } => {
                            if steepness > 0.0 {
                                r += height
                            } else {
                                l += height
                            }
                        }
                        Term::Gaussian { .. } => {}
                        Term::Harmonic { k } => {
                            let inf = if k > 0.0 { f64::INFINITY } else if k < 0.0 { f64::NEG_INFINITY } else { 0.0 };
                            l += inf;
                            r += inf;
                        }
                    }
                }
                (l, r)
            }
        }
    }

    /// The same potential reflected, `x -> −x`.
    pub fn mirrored(&self) -> PotentialSpec {
        match self.kind {
            PotentialKind::Harmonic => self.clone(),
            PotentialKind::Tabulated => {
                let table = self.table.iter().rev().map(|&(x, v)| (-x, v)).collect();
                PotentialSpec { table, ..self.clone() }
            }
            _ => {
                let terms = self.terms().iter().map(Term::mirrored).collect();
                PotentialSpec::custom(terms)
            }
        }
    }

    /// Closed-form kinds expressed as a term list.
    pub fn terms(&self) -> Vec<Term> {
        match self.kind {
            PotentialKind::DoubleSigmoidGaussian => {
                let mut t = alloc::vec![
                    Term::Sigmoid { height: self.a, steepness: 2.0 * self.c, center: self.d },
                    Term::Sigmoid { height: self.a, steepness: 2.0 * self.c, center: -self.d },
                    Term::Gaussian { depth: self.alpha, center: 0.0, width2: self.b },
                ];
                if self.gamma != 0.0 {
                    t.push(Term::Sigmoid { height: self.gamma, steepness: -2.0 * self.step_steepness, center: 0.0 });
                }
                t
            }
            PotentialKind::Harmonic => alloc::vec![Term::Harmonic { k: self.omega * self.omega }],
            PotentialKind::CustomClosedForm => self.terms.clone(),
            PotentialKind::Tabulated => Vec::new(),
        }
    }

    /// Largest θ for which the rotation sweeps over no singularity.
    ///
    /// The sigmoid `σ(s(z − z₀))` has poles at `z₀ + iπ(2m+1)/s`. Rotating
    /// the real axis by θ crosses the nearest one once
    /// `θ > atan(π/(|s| |z₀|))`; beyond that angle the scaled spectrum belongs
    /// to a different continuation and resonances jump. `None` means no
    /// finite limit below π/2.
    pub fn analytic_sector(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for t in self.terms() {
            if let Term::Sigmoid { steepness, center, .. } = t {
                if center != 0.0 {
                    let ang = (PI / (steepness.abs() * center.abs())).atan();
                    best = Some(best.map_or(ang, |b: f64| b.min(ang)));
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionKind {
    SoftCoulomb,
}

/// `w(u) = λ/√(u² + s²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionSpec {
    pub kind: InteractionKind,
    pub strength: f64,
    pub softening: f64,
}

impl Default for InteractionSpec {
    fn default() -> Self {
        InteractionSpec { kind: InteractionKind::SoftCoulomb, strength: 1.0, softening: 1.0 }
    }
}

impl InteractionSpec {
    pub fn soft_coulomb(strength: f64, softening: f64) -> Self {
        InteractionSpec { kind: InteractionKind::SoftCoulomb, strength, softening }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.softening > 0.0 && self.softening.is_finite() && self.strength.is_finite()) {
            return Err(Error::invalid("interaction needs softening > 0 and finite strength"));
        }
        Ok(())
    }

    pub fn eval(&self, u: C64) -> Result<C64> {
        let q = u * u + self.softening * self.softening;
        if q.im == 0.0 && q.re <= 0.0 {
            return Err(Error::BranchCut("soft-Coulomb interaction"));
        }
        Ok(C64::new(self.strength, 0.0) / q.sqrt())
    }

    /// Real-axis kernel `w(x)`.
    pub fn eval_real(&self, x: f64) -> f64 {
        self.strength / (x * x + self.softening * self.softening).sqrt()
    }
}

/// Energy of the open decay channel.
///
/// One electron escapes into the lower of the two asymptotes. Two electrons
/// leave the one-electron system behind, whose ground or lowest resonance
/// energy `one_electron` supplies.
pub fn threshold_energy<F>(spec: &PotentialSpec, n_electrons: usize, one_electron: F) -> Result<C64>
where
    F: FnOnce() -> Result<C64>,
{
    match n_electrons {
        1 => {
            let (l, r) = spec.asymptotes();
            let e = l.min(r);
            if e.is_finite() {
                Ok(C64::new(e, 0.0))
            } else {
                Err(Error::NoChannel)
            }
        }
        2 => one_electron(),
        _ => Err(Error::invalid("threshold defined for one or two electrons")),
    }
}
