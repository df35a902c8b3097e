//! Model constants, the Flory–Huggins potential with its C⁶ regularization,
//! and the bounded C² extensions of density and viscosity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest derivative order supported by the potential evaluators.
pub const MAX_POTENTIAL_ORDER: usize = 6;

/// Width of the blend between the affine material law and its clamps.
pub const EXTENSION_WIDTH: f64 = 0.25;

/// Physical and regularization constants of the normalized system
/// (mobility, surface tension and interface parameter are all 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub rho1: f64,
    pub rho2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub g: f64,
    pub theta: f64,
    pub theta0: f64,
    pub delta: f64,
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub nu_lo: f64,
    pub nu_hi: f64,
}

impl Params {
    /// Builds a parameter set with default extension bounds.
    pub fn new(
        rho1: f64,
        rho2: f64,
        nu1: f64,
        nu2: f64,
        g: f64,
        theta: f64,
        theta0: f64,
        delta: f64,
    ) -> Result<Self> {
        let (rho_lo, rho_hi) = default_bounds(rho1, rho2)?;
        let (nu_lo, nu_hi) = default_bounds(nu1, nu2)?;
        let p = Params {
            rho1,
            rho2,
            nu1,
            nu2,
            g,
            theta,
            theta0,
            delta,
            rho_lo,
            rho_hi,
            nu_lo,
            nu_hi,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.rho1, self.rho2, self.nu1, self.nu2, self.g, self.theta, self.theta0, self.delta,
            self.rho_lo, self.rho_hi, self.nu_lo, self.nu_hi,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if !(self.rho1 > self.rho2 && self.rho2 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "densities must satisfy rho1 > rho2 > 0 (got {} and {})",
                self.rho1, self.rho2
            )));
        }
        if !(self.nu1 > 0.0 && self.nu2 > 0.0) {
            return Err(Error::InvalidParams("viscosities must be positive".into()));
        }
        if !(self.g >= 0.0) {
            return Err(Error::InvalidParams("gravity must be nonnegative".into()));
        }
        if !(0.0 < self.theta && self.theta < self.theta0) {
            return Err(Error::InvalidParams(format!(
                "temperatures must satisfy 0 < theta < theta0 (got {} and {})",
                self.theta, self.theta0
            )));
        }
        if !(0.0 < self.delta && self.delta < 1.0) {
            return Err(Error::InvalidParams(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        check_admissible("density", self.rho1, self.rho2, self.rho_lo, self.rho_hi)?;
        check_admissible("viscosity", self.nu1, self.nu2, self.nu_lo, self.nu_hi)?;
        Ok(())
    }

    /// ϱ₁ = (ρ₁ − ρ₂)/2.
    pub fn varrho1(&self) -> f64 {
        (self.rho1 - self.rho2) / 2.0
    }

    /// ϱ₂ = (ρ₁ + ρ₂)/2.
    pub fn varrho2(&self) -> f64 {
        (self.rho1 + self.rho2) / 2.0
    }

    pub fn mobility(&self) -> f64 {
        1.0
    }

    pub fn sigma(&self) -> f64 {
        1.0
    }

    pub fn ell(&self) -> f64 {
        1.0
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        let mut p = self.clone();
        p.delta = delta;
        p.validate()?;
        Ok(p)
    }

    /// Linear density law ρ(r) = ϱ₁ r + ϱ₂ (unextended).
    pub fn density_linear(&self, r: f64) -> f64 {
        self.varrho1() * r + self.varrho2()
    }

    pub fn density_extension(&self) -> Extension {
        Extension::new(self.rho1, self.rho2, self.rho_lo, self.rho_hi)
    }

    pub fn viscosity_extension(&self) -> Extension {
        Extension::new(self.nu1, self.nu2, self.nu_lo, self.nu_hi)
    }

    /// Time step below which fully implicit Euler for the Cahn–Hilliard part is
    /// energy stable: the concave part −θ₀r²/2 is controlled once
    /// θ₀/2 ≤ √(2/dt).
    pub fn dt_stab(&self) -> f64 {
        8.0 / (self.theta0 * self.theta0)
    }
}

/// Default clamps 0.9·min and 1.1·max, widened when needed so the blend
/// stays monotone (rise ≥ 0.4·slope·width on each side).
fn default_bounds(a: f64, b: f64) -> Result<(f64, f64)> {
    let slope = ((a - b) / 2.0).abs();
    let need = 0.4 * slope * EXTENSION_WIDTH;
    let lo = (0.9 * a.min(b)).min(a.min(b) - need);
    let hi = (1.1 * a.max(b)).max(a.max(b) + need);
    if !(lo > 0.0) {
        return Err(Error::InvalidParams(format!(
            "cannot build a positive extension for values {a} and {b}; set explicit bounds"
        )));
    }
    Ok((lo, hi))
}

fn check_admissible(name: &str, at_plus: f64, at_minus: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0 && lo <= at_plus.min(at_minus) && hi >= at_plus.max(at_minus)) {
        return Err(Error::InvalidParams(format!(
            "{name} bounds must satisfy 0 < lo <= min and hi >= max (lo={lo}, hi={hi})"
        )));
    }
    let slope = (at_plus - at_minus) / 2.0;
    let need = 0.4 * slope.abs() * EXTENSION_WIDTH;
    let ext = Extension::new(at_plus, at_minus, lo, hi);
    for side in [&ext.right, &ext.left] {
        if side.rise.abs() + 1e-12 < need && slope != 0.0 {
            return Err(Error::InvalidParams(format!(
                "{name} bounds too tight for a monotone extension (need a gap of at least {need})"
            )));
        }
    }
    Ok(())
}

/// k-th derivative of the Flory–Huggins potential
/// Ψ(r) = (θ/2)[(1+r)ln(1+r) + (1−r)ln(1−r)] − (θ₀/2)r².
pub fn flory_huggins(r: f64, k: usize, theta: f64, theta0: f64) -> Result<f64> {
    if !(r.abs() < 1.0) {
        return Err(Error::Domain(r));
    }
    if k > MAX_POTENTIAL_ORDER {
        return Err(Error::UnsupportedOrder(k));
    }
    Ok(flory_huggins_unchecked(r, k, theta, theta0))
}

#[inline]
fn flory_huggins_unchecked(r: f64, k: usize, theta: f64, theta0: f64) -> f64 {
    let p = 1.0 + r;
    let m = 1.0 - r;
    match k {
        0 => 0.5 * theta * (p * p.ln() + m * m.ln()) - 0.5 * theta0 * r * r,
        1 => 0.5 * theta * (p.ln() - m.ln()) - theta0 * r,
        _ => {
            // d^j/dr^j of 1/(1+r) and 1/(1−r), j = k − 2
            let j = (k - 2) as i32;
            let fact = factorial(k - 2);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let v = 0.5 * theta * fact * (sign / p.powi(j + 1) + 1.0 / m.powi(j + 1));
            if k == 2 {
                v - theta0
            } else {
                v
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Ψ̂: exact Flory–Huggins on (−1+δ, 1−δ), degree-6 Taylor continuation outside.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedPotential {
    pub theta: f64,
    pub theta0: f64,
    pub delta: f64,
    /// Taylor coefficients Ψ⁽ⁱ⁾(−1+δ)/i! in powers of (r + 1 − δ).
    pub left_coeffs: [f64; 7],
    /// Taylor coefficients Ψ⁽ⁱ⁾(1−δ)/i! in powers of (r − 1 + δ).
    pub right_coeffs: [f64; 7],
}

impl RegularizedPotential {
    pub fn new(p: &Params) -> Result<Self> {
        Self::from_constants(p.theta, p.theta0, p.delta)
    }

    pub fn from_constants(theta: f64, theta0: f64, delta: f64) -> Result<Self> {
        if !(0.0 < delta && delta < 1.0) {
            return Err(Error::InvalidParams(format!("delta must lie in (0,1), got {delta}")));
        }
        if !(0.0 < theta && theta < theta0) {
            return Err(Error::InvalidParams("need 0 < theta < theta0".into()));
        }
        let r0 = 1.0 - delta;
        let mut right = [0.0; 7];
        let mut left = [0.0; 7];
        for (i, c) in right.iter_mut().enumerate() {
            *c = flory_huggins_unchecked(r0, i, theta, theta0) / factorial(i);
        }
        for (i, c) in left.iter_mut().enumerate() {
            *c = if i % 2 == 0 { right[i] } else { -right[i] };
        }
        Ok(RegularizedPotential { theta, theta0, delta, left_coeffs: left, right_coeffs: right })
    }

    /// Right gluing point 1 − δ.
    pub fn glue(&self) -> f64 {
        1.0 - self.delta
    }

    /// Ψ̂⁽ᵏ⁾(r) for any real r and k ≤ 6.
    pub fn derivative(&self, r: f64, k: usize) -> Result<f64> {
        if k > MAX_POTENTIAL_ORDER {
            return Err(Error::UnsupportedOrder(k));
        }
        if !r.is_finite() {
            return Err(Error::Domain(r));
        }
        Ok(self.eval(r, k))
    }

    /// Unchecked evaluation; `k` must not exceed 6.
    #[inline]
    pub fn eval(&self, r: f64, k: usize) -> f64 {
        let r0 = self.glue();
        if r > -r0 && r < r0 {
            return flory_huggins_unchecked(r, k, self.theta, self.theta0);
        }
        // left branch evaluated through evenness of the construction
        let (s, sign) = if r >= r0 {
            (r, 1.0)
        } else {
            (-r, if k.is_multiple_of(2) { 1.0 } else { -1.0 })
        };
        sign * poly_derivative(&self.right_coeffs, s - r0, k)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r, 0)
    }

    pub fn d1(&self, r: f64) -> f64 {
        self.eval(r, 1)
    }

    pub fn d2(&self, r: f64) -> f64 {
        self.eval(r, 2)
    }
}

/// k-th derivative of Σ cᵢ xⁱ.
fn poly_derivative(c: &[f64; 7], x: f64, k: usize) -> f64 {
    let mut acc = 0.0;
    for i in (k..c.len()).rev() {
        let falling = (i - k + 1..=i).fold(1.0, |a, m| a * m as f64);
        acc = acc * x + c[i] * falling;
    }
    acc
}

/// One exterior side of an extension: quintic Hermite blend on [1, 1+w].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionSide {
    /// Value at |r| = 1.
    pub start: f64,
    /// Outward slope at |r| = 1.
    pub slope: f64,
    /// Clamp value minus start value.
    pub rise: f64,
}

impl ExtensionSide {
    fn eval(&self, s: f64, k: usize) -> f64 {
        let w = EXTENSION_WIDTH;
        if s >= 1.0 {
            return if k == 0 { self.start + self.rise } else { 0.0 };
        }
        let m = self.slope * w;
        match k {
            0 => self.start + self.rise * smooth(s, 0) + m * hermite(s, 0),
            _ => (self.rise * smooth(s, k) + m * hermite(s, k)) / w.powi(k as i32),
        }
    }
}

/// Quintic smoothstep 10s³ − 15s⁴ + 6s⁵ and derivatives.
fn smooth(s: f64, k: usize) -> f64 {
    let s2 = s * s;
    match k {
        0 => s2 * s * (10.0 - 15.0 * s + 6.0 * s2),
        1 => 30.0 * s2 * (1.0 - s) * (1.0 - s),
        _ => 60.0 * s - 180.0 * s2 + 120.0 * s2 * s,
    }
}

/// Quintic with unit slope at 0, vanishing value/slope/curvature at 1:
/// s − 6s³ + 8s⁴ − 3s⁵.
fn hermite(s: f64, k: usize) -> f64 {
    let s2 = s * s;
    match k {
        0 => s - 6.0 * s2 * s + 8.0 * s2 * s2 - 3.0 * s2 * s2 * s,
        1 => 1.0 - 18.0 * s2 + 32.0 * s2 * s - 15.0 * s2 * s2,
        _ => -36.0 * s + 96.0 * s2 - 60.0 * s2 * s,
    }
}

/// C² extension of an affine material law r ↦ a(1+r)/2 + b(1−r)/2 that
/// saturates to [lo, hi] beyond |r| = 1 + w.
#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub at_plus: f64,
    pub at_minus: f64,
    pub lo: f64,
    pub hi: f64,
    pub right: ExtensionSide,
    pub left: ExtensionSide,
}

impl Extension {
    pub fn new(at_plus: f64, at_minus: f64, lo: f64, hi: f64) -> Self {
        let slope = (at_plus - at_minus) / 2.0;
        let target = |start: f64, outward: f64| {
            if outward > 0.0 {
                hi - start
            } else if outward < 0.0 {
                lo - start
            } else {
                0.0
            }
        };
        let right = ExtensionSide { start: at_plus, slope, rise: target(at_plus, slope) };
        // outward direction on the left is −r, so the outward slope is −slope
        let left = ExtensionSide { start: at_minus, slope: -slope, rise: target(at_minus, -slope) };
        Extension { at_plus, at_minus, lo, hi, right, left }
    }

    pub fn slope(&self) -> f64 {
        (self.at_plus - self.at_minus) / 2.0
    }

    /// k-th derivative (k ≤ 2) at r.
    pub fn derivative(&self, r: f64, k: usize) -> Result<f64> {
        if k > 2 {
            return Err(Error::UnsupportedOrder(k));
        }
        Ok(self.eval(r, k))
    }

    #[inline]
    pub fn eval(&self, r: f64, k: usize) -> f64 {
        if (-1.0..=1.0).contains(&r) {
            return match k {
                0 => self.at_plus * (1.0 + r) / 2.0 + self.at_minus * (1.0 - r) / 2.0,
                1 => self.slope(),
                _ => 0.0,
            };
        }
        if r > 1.0 {
            self.right.eval((r - 1.0) / EXTENSION_WIDTH, k)
        } else {
            let v = self.left.eval((-1.0 - r) / EXTENSION_WIDTH, k);
            if k == 1 {
                -v
            } else {
                v
            }
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r, 0)
    }

    /// Upper bound for |ê′| and |ê″| on ℝ (triangle inequality over the
    /// polynomial coefficients).
    pub fn derivative_bounds(&self) -> (f64, f64) {
        let w = EXTENSION_WIDTH;
        let one = |s: &ExtensionSide| {
            let d1 = (s.rise.abs() * 30.0 / 16.0 + s.slope.abs() * w * 66.0) / w;
            let d2 = (s.rise.abs() * 360.0 + s.slope.abs() * w * 192.0) / (w * w);
            (d1.max(s.slope.abs()), d2)
        };
        let (a1, a2) = one(&self.right);
        let (b1, b2) = one(&self.left);
        (a1.max(b1), a2.max(b2))
    }
}

/// Extended density ρ̂⁽ᵏ⁾(r).
pub fn extend_density(r: f64, k: usize, p: &Params) -> Result<f64> {
    p.density_extension().derivative(r, k)
}

/// Extended viscosity ν̂⁽ᵏ⁾(r).
pub fn extend_viscosity(r: f64, k: usize, p: &Params) -> Result<f64> {
    p.viscosity_extension().derivative(r, k)
}

/// Positive root of Ψ′ (the bulk well value of the double well).
pub fn well_value(theta: f64, theta0: f64) -> f64 {
    // θ·atanh(r) − θ₀·r changes sign on (0, 1)
    let f = |r: f64| theta * r.atanh() - theta0 * r;
    let (mut a, mut b) = (1e-12_f64, 1.0 - 1e-15);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> Params {
        Params::new(3.0, 1.0, 0.2, 0.1, 10.0, 1.0, 2.0, 0.1).unwrap()
    }

    #[test]
    fn flory_huggins_at_origin() {
        assert_eq!(flory_huggins(0.0, 0, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(flory_huggins(0.0, 1, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(flory_huggins(0.0, 3, 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn flory_huggins_reference_value() {
        // 50-digit mpmath evaluation of the closed form
        let expected = -0.119_187_964_058_863_04_f64;
        let v = flory_huggins(0.5, 0, 1.0, 2.0).unwrap();
        assert!((v - expected).abs() < 1e-14, "{v}");
    }

    #[test]
    fn flory_huggins_errors() {
        assert!(matches!(flory_huggins(1.0, 0, 1.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(flory_huggins(-1.5, 2, 1.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(flory_huggins(0.2, 7, 1.0, 2.0), Err(Error::UnsupportedOrder(7))));
    }

    #[test]
    fn interior_branch_is_exact() {
        let pot = RegularizedPotential::new(&params()).unwrap();
        for k in 0..=6 {
            let a = pot.eval(0.3, k);
            let b = flory_huggins(0.3, k, 1.0, 2.0).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn exterior_is_finite() {
        let pot = RegularizedPotential::new(&params()).unwrap();
        for k in 0..=6 {
            assert!(pot.eval(2.0, k).is_finite());
            assert!(pot.eval(-7.0, k).is_finite());
        }
        assert!(pot.derivative(0.1, 7).is_err());
    }

    #[test]
    fn polynomial_branch_matches_at_glue() {
        let pot = RegularizedPotential::new(&params()).unwrap();
        let r0 = pot.glue();
        for k in 0..=6 {
            let poly = pot.eval(r0, k);
            let exact = flory_huggins(r0, k, 1.0, 2.0).unwrap();
            assert!((poly - exact).abs() <= 1e-12 * exact.abs().max(1.0), "k={k}");
        }
    }

    #[test]
    fn density_extension_examples() {
        let p = params();
        assert_eq!(extend_density(0.0, 0, &p).unwrap(), p.varrho2());
        assert_eq!(extend_density(1.0, 0, &p).unwrap(), 3.0);
        assert_eq!(extend_density(-1.0, 0, &p).unwrap(), 1.0);
        let far = extend_density(10.0, 0, &p).unwrap();
        assert!(far >= p.rho_lo && far <= p.rho_hi);
        assert_eq!(extend_density(10.0, 1, &p).unwrap(), 0.0);
        assert!(extend_density(0.0, 3, &p).is_err());
    }

    #[test]
    fn viscosity_matches_affine_law_on_unit_interval() {
        let p = params();
        assert_eq!(extend_viscosity(0.0, 0, &p).unwrap(), 0.5 * (p.nu1 + p.nu2));
        for i in 0..100 {
            let r = -1.0 + 2.0 * i as f64 / 99.0;
            let nu = p.nu1 * (1.0 + r) / 2.0 + p.nu2 * (1.0 - r) / 2.0;
            assert_eq!(extend_viscosity(r, 0, &p).unwrap(), nu);
        }
        for i in 0..=1000 {
            let r = -5.0 + 10.0 * i as f64 / 1000.0;
            assert!(extend_viscosity(r, 0, &p).unwrap() > 0.0);
        }
    }

    #[test]
    fn extension_is_c2_at_unit_points() {
        let p = params();
        let ext = p.density_extension();
        let eps = 1e-9;
        for r in [1.0, -1.0, 1.0 + EXTENSION_WIDTH, -1.0 - EXTENSION_WIDTH] {
            for k in 0..=2 {
                let a = ext.eval(r - eps, k);
                let b = ext.eval(r + eps, k);
                assert!((a - b).abs() < 1e-6, "r={r} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn param_validation() {
        assert!(Params::new(1.0, 3.0, 0.1, 0.1, 1.0, 1.0, 2.0, 0.1).is_err());
        assert!(Params::new(3.0, 1.0, 0.1, 0.1, 1.0, 2.0, 1.0, 0.1).is_err());
        assert!(Params::new(3.0, 1.0, 0.1, 0.1, 1.0, 1.0, 2.0, 1.0).is_err());
        let p = params();
        assert_eq!(p.varrho1(), 1.0);
        assert_eq!(p.varrho2(), 2.0);
        assert_eq!((p.mobility(), p.sigma(), p.ell()), (1.0, 1.0, 1.0));
        let mut bad = p.clone();
        bad.rho_hi = 3.01;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn well_value_is_root() {
        let r = well_value(1.0, 2.0);
        assert!((r.atanh() - 2.0 * r).abs() < 1e-10);
        assert!(r > 0.95 && r < 0.96);
    }
}
