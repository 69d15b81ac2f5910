//! Concrete boundary-value problems and their statically admissible stresses.
//!
//! Equilibrium is taken as `∇·σ + f = 0` with traction `σ·n = t` on the
//! Neumann boundary, which is the Euler-Lagrange system of
//! `P(u) = ∫ W(∇u) - ∫ f u - ∫ t u dΓ`. Under this convention the annulus
//! stress `σ = (-r x/3, -r y/3)` carries the source `f = +r`.

use serde::{Deserialize, Serialize};

use crate::dae::{Material, StressSample};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Annulus `R₁ < |x| < R₂` with source `f = r` and radial tractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusProblem<S> {
    pub r1: S,
    pub r2: S,
    pub material: Material<S>,
    /// Traction on the inner circle.
    pub t_inner: S,
    /// Traction on the outer circle.
    pub t_outer: S,
}

impl<S: Real> AnnulusProblem<S> {
    /// Annulus with the balanced default tractions `R₁²/3` and `-R₂²/3`.
    pub fn new(r1: S, r2: S, material: Material<S>) -> Result<Self> {
        if !(r1 > S::zero() && r1 < r2 && r2.is_finite()) {
            return Err(Error::Config(format!(
                "annulus needs 0 < r1 < r2, got r1 = {r1}, r2 = {r2}"
            )));
        }
        Ok(Self {
            r1,
            r2,
            material,
            t_inner: Self::default_t_inner(r1),
            t_outer: Self::default_t_outer(r2),
        })
    }

    /// `R₁ = 0.5`, `R₂ = 1.277`, `ν = λ = 1`.
    pub fn standard() -> Self {
        Self::new(S::lit(0.5), S::lit(1.277), Material::unit()).expect("valid defaults")
    }

    pub fn with_tractions(mut self, t_inner: S, t_outer: S) -> Self {
        self.t_inner = t_inner;
        self.t_outer = t_outer;
        self
    }

    pub fn default_t_inner(r1: S) -> S {
        r1 * r1 / S::lit(3.0)
    }

    pub fn default_t_outer(r2: S) -> S {
        -r2 * r2 / S::lit(3.0)
    }

    /// Whether the tractions match the closed-form stress field.
    pub fn has_default_loads(&self) -> bool {
        let close = |a: S, b: S| (a - b).abs() <= S::lit(1e-12) * (S::one() + b.abs());
        close(self.t_inner, Self::default_t_inner(self.r1))
            && close(self.t_outer, Self::default_t_outer(self.r2))
    }
}

/// Source on the bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarSource<S> {
    Zero,
    Constant(S),
}

impl<S: Real> BarSource<S> {
    pub fn value(&self) -> S {
        match *self {
            BarSource::Zero => S::zero(),
            BarSource::Constant(c) => c,
        }
    }
}

/// Bar `[0, L]` clamped at `x = 0` (`u(0) = 0`) with traction at `x = L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar1DProblem<S> {
    pub length: S,
    pub material: Material<S>,
    pub source: BarSource<S>,
    pub t_right: S,
}

impl<S: Real> Bar1DProblem<S> {
    pub fn new(length: S, material: Material<S>, source: BarSource<S>, t_right: S) -> Result<Self> {
        if !(length > S::zero() && length.is_finite()) {
            return Err(Error::Config(format!(
                "bar length must be positive, got {length}"
            )));
        }
        Ok(Self {
            length,
            material,
            source,
            t_right,
        })
    }
}

/// A boundary-value problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Problem<S> {
    Annulus(AnnulusProblem<S>),
    Bar1D(Bar1DProblem<S>),
}

impl<S: Real> From<AnnulusProblem<S>> for Problem<S> {
    fn from(p: AnnulusProblem<S>) -> Self {
        Problem::Annulus(p)
    }
}

impl<S: Real> From<Bar1DProblem<S>> for Problem<S> {
    fn from(p: Bar1DProblem<S>) -> Self {
        Problem::Bar1D(p)
    }
}

impl<S: Real> Problem<S> {
    pub fn material(&self) -> &Material<S> {
        match self {
            Problem::Annulus(p) => &p.material,
            Problem::Bar1D(p) => &p.material,
        }
    }

    /// Radial (or axial) extent of the domain.
    pub fn domain(&self) -> (S, S) {
        match self {
            Problem::Annulus(p) => (p.r1, p.r2),
            Problem::Bar1D(p) => (S::zero(), p.length),
        }
    }

    /// Spatial dimension of the underlying problem.
    pub fn dimension(&self) -> usize {
        match self {
            Problem::Annulus(_) => 2,
            Problem::Bar1D(_) => 1,
        }
    }

    /// Volume element per unit radius: `2πr` on the annulus, `1` on the bar.
    pub fn measure(&self, r: S) -> S {
        match self {
            Problem::Annulus(_) => S::TAU() * r,
            Problem::Bar1D(_) => S::one(),
        }
    }

    pub fn source(&self, r: S) -> S {
        match self {
            Problem::Annulus(_) => r,
            Problem::Bar1D(p) => p.source.value(),
        }
    }

    /// Radial stress component and `|σ|²` at `r`.
    pub fn stress(&self, r: S) -> Result<(S, S)> {
        match self {
            Problem::Annulus(p) => annulus_stress(p, r),
            Problem::Bar1D(p) => bar1d_stress(p, r),
        }
    }

    /// Boundary work `∫_{Γt} t u dΓ` for the values of `u` at both ends.
    /// The clamped end of the bar contributes nothing.
    pub fn boundary_work(&self, u_min: S, u_max: S) -> S {
        match self {
            Problem::Annulus(p) => S::TAU() * (p.t_inner * p.r1 * u_min + p.t_outer * p.r2 * u_max),
            Problem::Bar1D(p) => p.t_right * u_max,
        }
    }

    /// Tractions at the two ends with the outward normal sign: `(n, t)` pairs,
    /// `None` for a Dirichlet end.
    pub fn tractions(&self) -> [Option<(S, S)>; 2] {
        match self {
            Problem::Annulus(p) => [Some((-S::one(), p.t_inner)), Some((S::one(), p.t_outer))],
            Problem::Bar1D(p) => [None, Some((S::one(), p.t_right))],
        }
    }

    /// Pure-Neumann problems are determined only up to a constant.
    pub fn is_pure_neumann(&self) -> bool {
        matches!(self, Problem::Annulus(_))
    }

    /// Magnitude of the loads, used to scale residual thresholds.
    pub fn load_scale(&self) -> S {
        let (lo, hi) = self.domain();
        let f = self.source(lo).abs().max(self.source(hi).abs());
        let t = match self {
            Problem::Annulus(p) => p.t_inner.abs().max(p.t_outer.abs()),
            Problem::Bar1D(p) => p.t_right.abs(),
        };
        S::one().max(f).max(t)
    }

    fn check_in_domain(&self, r: S) -> Result<()> {
        let (lo, hi) = self.domain();
        let slack = S::lit(1e-12) * (S::one() + hi.abs());
        if r.is_nan() || r < lo - slack || r > hi + slack {
            return Err(Error::OutOfDomain {
                r: r.to_f64_lossy(),
                r_min: lo.to_f64_lossy(),
                r_max: hi.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// `σ_r = -r²/3` and `|σ|² = r⁴/9` on the annulus with default loads.
pub fn annulus_stress<S: Real>(problem: &AnnulusProblem<S>, r: S) -> Result<(S, S)> {
    if !problem.has_default_loads() {
        return Err(Error::UnsupportedLoads(format!(
            "closed-form stress needs t_inner = r1²/3 and t_outer = -r2²/3 (got {}, {})",
            problem.t_inner, problem.t_outer
        )));
    }
    Problem::Annulus(*problem).check_in_domain(r)?;
    let sigma_r = -r * r / S::lit(3.0);
    Ok((sigma_r, sigma_r * sigma_r))
}

/// `σ(x) = t + ∫ₓᴸ f`, the unique stress with `σ' = -f` and `σ(L) = t`.
pub fn bar1d_stress<S: Real>(problem: &Bar1DProblem<S>, x: S) -> Result<(S, S)> {
    Problem::Bar1D(*problem).check_in_domain(x)?;
    let sigma = problem.t_right + problem.source.value() * (problem.length - x);
    Ok((sigma, sigma * sigma))
}

/// `∫_Ω f dx + ∫_{Γt} t dΓ`; zero for a solvable pure-Neumann problem.
/// Bars have a clamped end and always return zero.
pub fn check_load_balance<S: Real>(problem: &Problem<S>) -> S {
    match problem {
        Problem::Annulus(p) => {
            let body = S::TAU() * (p.r2.powi(3) - p.r1.powi(3)) / S::lit(3.0);
            body + S::TAU() * (p.t_inner * p.r1 + p.t_outer * p.r2)
        }
        Problem::Bar1D(_) => S::zero(),
    }
}

/// `|σ|²` as a validated sample.
pub fn stress_sample<S: Real>(problem: &Problem<S>, r: S) -> Result<StressSample<S>> {
    StressSample::new(problem.stress(r)?.1)
}

/// JSON problem description.
///
/// ```json
/// {"type":"annulus","r1":0.5,"r2":1.277,"nu":1,"lambda":1}
/// {"type":"bar1d","length":1,"nu":1,"lambda":1,"source":"zero","t_right":2}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemConfig {
    Annulus {
        r1: f64,
        r2: f64,
        nu: f64,
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_inner: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_outer: Option<f64>,
    },
    Bar1d {
        length: f64,
        nu: f64,
        lambda: f64,
        source: String,
        /// Value of the constant source.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        t_right: f64,
    },
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<Problem<f64>> {
        match self {
            ProblemConfig::Annulus {
                r1,
                r2,
                nu,
                lambda,
                source,
                t_inner,
                t_outer,
            } => {
                if let Some(s) = source {
                    if s != "linear-radial" {
                        return Err(Error::Config(format!(
                            "unknown annulus source preset {s:?}"
                        )));
                    }
                }
                let p = AnnulusProblem::new(*r1, *r2, Material::new(*nu, *lambda)?)?;
                let t_in = t_inner.unwrap_or(p.t_inner);
                let t_out = t_outer.unwrap_or(p.t_outer);
                Ok(p.with_tractions(t_in, t_out).into())
            }
            ProblemConfig::Bar1d {
                length,
                nu,
                lambda,
                source,
                c,
                t_right,
            } => {
                let source = match (source.as_str(), c) {
                    ("zero", None) => BarSource::Zero,
                    ("constant", Some(c)) => BarSource::Constant(*c),
                    ("constant", None) => {
                        return Err(Error::Config("constant source needs a value \"c\"".into()))
                    }
                    ("zero", Some(_)) => {
                        return Err(Error::Config("zero source takes no value \"c\"".into()))
                    }
                    (other, _) => {
                        return Err(Error::Config(format!(
                            "unknown bar source preset {other:?}"
                        )))
                    }
                };
                Ok(
                    Bar1DProblem::new(*length, Material::new(*nu, *lambda)?, source, *t_right)?
                        .into(),
                )
            }
        }
    }
}

/// Parses and builds a problem from JSON text.
pub fn problem_from_json(text: &str) -> Result<Problem<f64>> {
    ProblemConfig::from_json(text)?.build()
}
