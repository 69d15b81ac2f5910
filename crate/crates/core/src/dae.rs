//! The pointwise dual algebraic equation
//!
//! ```text
//! |σ|² = 2 ζ² (λ + ζ/ν)
//! ```
//!
//! relating the squared stress magnitude at a material point to the canonical
//! dual stress ζ. Its real roots enumerate every critical branch of the
//! double-well problem. Two closed forms are provided: the Cardano form over
//! the complex numbers, and a trigonometric form that is stable whenever all
//! three roots are real.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default relative width of the band around the regime threshold.
pub const DEFAULT_REGIME_TOL: f64 = 1e-12;

/// A root is considered real when its imaginary part is below
/// `1e-8 (1 + |re|)`.
const REAL_ROOT_IMAG_TOL: f64 = 1e-8;

/// Double-well material constants: the stress scale ν and strain offset λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Material<S> {
    nu: S,
    lambda: S,
}

impl<S: Real> Material<S> {
    pub fn new(nu: S, lambda: S) -> Result<Self> {
        let valid = |x: S| x.is_finite() && x > S::zero();
        if !valid(nu) || !valid(lambda) {
            return Err(Error::InvalidMaterial {
                nu: nu.to_f64_lossy(),
                lambda: lambda.to_f64_lossy(),
            });
        }
        Ok(Self { nu, lambda })
    }

    /// ν = λ = 1, the instance used throughout the annulus example.
    pub fn unit() -> Self {
        Self {
            nu: S::one(),
            lambda: S::one(),
        }
    }

    pub fn nu(&self) -> S {
        self.nu
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }

    /// νλ, the natural scale of the dual stress.
    pub fn scale(&self) -> S {
        self.nu * self.lambda
    }
}

/// Squared stress magnitude `|σ|²` at a material point.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct StressSample<S>(S);

impl<S: Real> StressSample<S> {
    pub fn new(sigma_sq: S) -> Result<Self> {
        if !sigma_sq.is_finite() || sigma_sq < S::zero() {
            return Err(Error::NegativeStress(sigma_sq.to_f64_lossy()));
        }
        Ok(Self(sigma_sq))
    }

    /// Sample from a stress vector.
    pub fn from_stress(sigma: &[S]) -> Result<Self> {
        Self::new(sigma.iter().fold(S::zero(), |acc, s| acc + *s * *s))
    }

    pub fn sigma_sq(&self) -> S {
        self.0
    }
}

/// Root structure of the cubic at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    /// `|σ|² ≈ 0`: roots `{0, 0, -νλ}`.
    ZeroStress,
    /// Three distinct real roots.
    ThreeReal,
    /// `|σ|²` at the threshold: a double root at `-2νλ/3`.
    Boundary,
    /// A single real (positive) root.
    OneReal,
}

/// Ordered real roots at one point. Branch 1 is the largest root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootSet<S> {
    pub regime: Regime,
    pub zeta1: Option<S>,
    pub zeta2: Option<S>,
    pub zeta3: Option<S>,
    /// Trigonometric angle in `[0, π/3]`, present when the trig form was used.
    pub theta: Option<S>,
}

impl<S: Real> RootSet<S> {
    /// Root for branch `1`, `2` or `3`.
    pub fn branch(&self, branch: u8) -> Option<S> {
        match branch {
            1 => self.zeta1,
            2 => self.zeta2,
            3 => self.zeta3,
            _ => None,
        }
    }

    /// Present roots in branch order.
    pub fn roots(&self) -> impl Iterator<Item = S> + '_ {
        [self.zeta1, self.zeta2, self.zeta3].into_iter().flatten()
    }

    pub fn count(&self) -> usize {
        self.roots().count()
    }

    /// Checks `ζ₁ ≥ 0 ≥ ζ₂ ≥ -2νλ/3 ≥ ζ₃ ≥ -νλ` for the roots present, with
    /// an absolute slack of `slack · νλ`.
    pub fn is_ordered(&self, material: &Material<S>, slack: S) -> bool {
        let a = material.scale();
        let eps = slack * a;
        let two_thirds = S::lit(2.0) * a / S::lit(3.0);
        let ok1 = self.zeta1.is_none_or(|z| z >= -eps);
        let ok2 = self
            .zeta2
            .is_none_or(|z| z <= eps && z >= -two_thirds - eps);
        let ok3 = self
            .zeta3
            .is_none_or(|z| z <= -two_thirds + eps && z >= -a - eps);
        let ok12 = match (self.zeta1, self.zeta2) {
            (Some(z1), Some(z2)) => z1 >= z2,
            _ => true,
        };
        let ok23 = match (self.zeta2, self.zeta3) {
            (Some(z2), Some(z3)) => z2 >= z3,
            _ => true,
        };
        ok1 && ok2 && ok3 && ok12 && ok23
    }
}

/// `8λ³ν²/27`, the largest `|σ|²` with three real roots.
pub fn sigma_threshold<S: Real>(material: &Material<S>) -> S {
    let (nu, lambda) = (material.nu, material.lambda);
    S::lit(8.0) * lambda * lambda * lambda * nu * nu / S::lit(27.0)
}

/// Regime of `sample`, with a relative band `tol · threshold` around zero and
/// around the threshold.
pub fn classify_regime<S: Real>(sample: StressSample<S>, material: &Material<S>, tol: S) -> Regime {
    let threshold = sigma_threshold(material);
    let band = tol * threshold;
    let s = sample.sigma_sq();
    if s <= band {
        Regime::ZeroStress
    } else if (s - threshold).abs() <= band {
        Regime::Boundary
    } else if s > threshold {
        Regime::OneReal
    } else {
        Regime::ThreeReal
    }
}

/// Signed residual `|σ|² - 2ζ²(λ + ζ/ν)`.
pub fn dae_residual<S: Real>(zeta: S, sample: StressSample<S>, material: &Material<S>) -> S {
    sample.sigma_sq() - S::lit(2.0) * zeta * zeta * (material.lambda + zeta / material.nu)
}

/// The three Cardano roots `(ζ₁, ζ₂, ζ₃)` over the complex numbers.
///
/// With `a = νλ` and
/// `ω = (-4a³ + 27ν|σ|² + 3√3 √(27ν²|σ|⁴ - 8ν⁴λ³|σ|²))^{1/3}`
/// (principal branches throughout):
///
/// ```text
/// ζ₁ = (-a + 4^{1/3} a²/ω + ω/4^{1/3}) / 3
/// ζ₂ = -a/3 - (1 - i√3) a² / (3·2^{1/3} ω) - (1 + i√3) ω / (6·4^{1/3})
/// ζ₃ = -a/3 - (1 + i√3) a² / (3·2^{1/3} ω) - (1 - i√3) ω / (6·4^{1/3})
/// ```
pub fn cardano_roots<S: Real>(sample: StressSample<S>, material: &Material<S>) -> [Complex<S>; 3] {
    let c = S::lit;
    let (nu, lambda) = (material.nu, material.lambda);
    let s = sample.sigma_sq();
    let a = nu * lambda;

    let disc = c(27.0) * nu * nu * s * s - c(8.0) * nu.powi(4) * lambda.powi(3) * s;
    // Built with a +0 imaginary part so a negative discriminant maps to +i√|d|.
    let root = Complex::new(disc, S::zero()).sqrt();
    let cubed = Complex::new(c(-4.0) * a * a * a + c(27.0) * nu * s, S::zero())
        + root * (c(3.0) * c(3.0).sqrt());
    let omega = cubed.cbrt();

    let cbrt4 = c(4.0).cbrt();
    let cbrt2 = c(2.0).cbrt();
    let sqrt3 = c(3.0).sqrt();
    let a2 = Complex::new(a * a, S::zero());
    let third = Complex::new(-a / c(3.0), S::zero());
    let minus = Complex::new(S::one(), -sqrt3);
    let plus = Complex::new(S::one(), sqrt3);

    let z1 = (Complex::new(-a, S::zero()) + a2 * cbrt4 / omega + omega / cbrt4) / c(3.0);
    let z2 = third - minus * a2 / (omega * (c(3.0) * cbrt2)) - plus * omega / (c(6.0) * cbrt4);
    let z3 = third - plus * a2 / (omega * (c(3.0) * cbrt2)) - minus * omega / (c(6.0) * cbrt4);
    [z1, z2, z3]
}

/// Real roots from the trigonometric form, valid for `0 ≤ |σ|² ≤ 8λ³ν²/27`.
///
/// `θ = arccos(27|σ|²/(4ν²λ³) - 1) / 3 ∈ [0, π/3]` and
///
/// ```text
/// ζ₁ =  (νλ/3)(2cos θ - 1)
/// ζ₂ = -(νλ/3)(1 + cos θ - √3 sin θ)
/// ζ₃ = -(νλ/3)(1 + cos θ + √3 sin θ)
/// ```
///
/// Substituting `ζ = νλ(2cos θ - 1)/3` into the cubic gives
/// `|σ|² = 4ν²λ³(1 + cos 3θ)/27`, which is where the angle comes from.
pub fn trig_roots<S: Real>(sample: StressSample<S>, material: &Material<S>) -> Result<RootSet<S>> {
    let tol = S::lit(DEFAULT_REGIME_TOL);
    let regime = classify_regime(sample, material, tol);
    if regime == Regime::OneReal {
        return Err(Error::Regime {
            sigma_sq: sample.sigma_sq().to_f64_lossy(),
            regime,
        });
    }
    let c = S::lit;
    let (nu, lambda) = (material.nu, material.lambda);
    let arg =
        c(27.0) * sample.sigma_sq() / (c(4.0) * nu * nu * lambda * lambda * lambda) - S::one();
    let arg = arg.max(-S::one()).min(S::one());
    let theta = arg.acos() / c(3.0);
    let (sin, cos) = theta.sin_cos();
    let k = material.scale() / c(3.0);
    let sqrt3 = c(3.0).sqrt();
    Ok(RootSet {
        regime,
        zeta1: Some(k * (c(2.0) * cos - S::one())),
        zeta2: Some(-k * (S::one() + cos - sqrt3 * sin)),
        zeta3: Some(-k * (S::one() + cos + sqrt3 * sin)),
        theta: Some(theta),
    })
}

/// All real roots of the cubic at one point, ordered by branch.
///
/// The one-real regime uses the Cardano form and keeps the root with
/// negligible imaginary part; everything else uses the trigonometric form.
/// Inside the threshold band the exact double root `-2νλ/3` is returned.
pub fn solve_dae<S: Real>(sample: StressSample<S>, material: &Material<S>, tol: S) -> RootSet<S> {
    let regime = classify_regime(sample, material, tol);
    match regime {
        Regime::OneReal => {
            let roots = cardano_roots(sample, material);
            let imag_tol = S::lit(REAL_ROOT_IMAG_TOL);
            let real = roots
                .iter()
                .filter(|z| z.im.abs() <= imag_tol * (S::one() + z.re.abs()))
                .map(|z| z.re)
                .fold(None, |best: Option<S>, x| {
                    Some(best.map_or(x, |b| b.max(x)))
                })
                // The real root is ζ₁; fall back to it if rounding hid it.
                .unwrap_or(roots[0].re);
            RootSet {
                regime,
                zeta1: Some(polish(real, sample, material)),
                zeta2: None,
                zeta3: None,
                theta: None,
            }
        }
        Regime::Boundary => {
            let a = material.scale();
            let double = -S::lit(2.0) * a / S::lit(3.0);
            RootSet {
                regime,
                zeta1: Some(a / S::lit(3.0)),
                zeta2: Some(double),
                zeta3: Some(double),
                theta: Some(S::zero()),
            }
        }
        Regime::ZeroStress | Regime::ThreeReal => {
            let mut roots =
                trig_roots(sample, material).expect("regime checked: at or below the threshold");
            roots.regime = regime;
            roots
        }
    }
}

/// One Newton step on a simple root, kept only if it lowers the residual.
fn polish<S: Real>(zeta: S, sample: StressSample<S>, material: &Material<S>) -> S {
    let slope = S::lit(4.0) * zeta * material.lambda + S::lit(6.0) * zeta * zeta / material.nu;
    if slope == S::zero() {
        return zeta;
    }
    let r0 = dae_residual(zeta, sample, material);
    let next = zeta + r0 / slope;
    if dae_residual(next, sample, material).abs() < r0.abs() {
        next
    } else {
        zeta
    }
}
