//! Energy functionals of the double-well problem on radial fields.
//!
//! Nodal versions (`primal_energy`, `dual_energy`, `total_complementary`)
//! integrate sampled fields with piecewise quadratic quadrature. The `*_with`
//! versions take pointwise evaluators and use adaptive Gauss-Legendre, which is
//! what the verification suite relies on for its tight tolerances.

use std::sync::Arc;

use serde::Serialize;

use crate::dae::{Material, StressSample};
use crate::error::{Error, Result};
use crate::numerics::{integrate_nodal, GaussLegendre, Quadrature, RadialGrid};
use crate::problems::Problem;
use crate::scalar::Real;

/// Canonical strain `ξ = ½|∇u|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalStrain<S>(S);

impl<S: Real> CanonicalStrain<S> {
    pub fn new(xi: S) -> Result<Self> {
        if !xi.is_finite() || xi < S::zero() {
            return Err(Error::NegativeStrain(xi.to_f64_lossy()));
        }
        Ok(Self(xi))
    }

    pub fn from_grad_sq(grad_sq: S) -> Result<Self> {
        Self::new(grad_sq / S::lit(2.0))
    }

    pub fn xi(&self) -> S {
        self.0
    }
}

/// Values sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField<S> {
    grid: Arc<RadialGrid<S>>,
    values: Vec<S>,
}

impl<S: Real> RadialField<S> {
    pub fn new(grid: Arc<RadialGrid<S>>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(
                "field contains non-finite values".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Arc<RadialGrid<S>>, f: impl FnMut(S) -> S) -> Result<Self> {
        let values = grid.nodes().iter().copied().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid<S>> {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn nodes(&self) -> &[S] {
        self.grid.nodes()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    /// Pointwise map into a new field on the same grid.
    pub fn map(&self, mut f: impl FnMut(S, S) -> S) -> Result<Self> {
        let values = self
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| f(r, v))
            .collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn first(&self) -> S {
        self.values[0]
    }

    pub fn last(&self) -> S {
        self.values[self.values.len() - 1]
    }
}

/// Primal and dual energies of one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport<S> {
    pub primal: S,
    pub dual: S,
    /// `primal - dual`.
    pub gap: S,
    pub quad_error_estimate: S,
}

impl<S: Real> EnergyReport<S> {
    pub fn new(primal: S, dual: S, quad_error_estimate: S) -> Self {
        Self {
            primal,
            dual,
            gap: primal - dual,
            quad_error_estimate,
        }
    }

    /// `|gap| / |dual|`.
    pub fn relative_gap(&self) -> S {
        self.gap.abs() / self.dual.abs().max(S::min_positive_value())
    }
}

/// `U(ξ)`, the canonical dual stress `ζ = DU(ξ)` and `U*(ζ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendrePair<S> {
    pub u: S,
    pub zeta: S,
    pub u_star: S,
}

/// Double-well density `(ν/2)(½|∇u|² - λ)²` from `|∇u|²`.
pub fn double_well<S: Real>(grad_sq: S, material: &Material<S>) -> S {
    let d = grad_sq / S::lit(2.0) - material.lambda();
    material.nu() / S::lit(2.0) * d * d
}

/// `σ = ν(½|y|² - λ) y`.
pub fn stress_from_gradient<S: Real>(grad: &[S], material: &Material<S>) -> Vec<S> {
    let grad_sq = grad.iter().fold(S::zero(), |acc, g| acc + *g * *g);
    let k = material.nu() * (grad_sq / S::lit(2.0) - material.lambda());
    grad.iter().map(|g| k * *g).collect()
}

/// Convex canonical energy `U(ξ) = (ν/2)(ξ - λ)²`.
pub fn canonical_energy<S: Real>(xi: S, material: &Material<S>) -> S {
    let d = xi - material.lambda();
    material.nu() / S::lit(2.0) * d * d
}

/// Complementary energy `U*(ζ) = ζ²/(2ν) + λζ`.
pub fn complementary_energy<S: Real>(zeta: S, material: &Material<S>) -> S {
    zeta * zeta / (S::lit(2.0) * material.nu()) + material.lambda() * zeta
}

pub fn legendre_pair<S: Real>(xi: CanonicalStrain<S>, material: &Material<S>) -> LegendrePair<S> {
    let zeta = material.nu() * (xi.xi() - material.lambda());
    LegendrePair {
        u: canonical_energy(xi.xi(), material),
        zeta,
        u_star: complementary_energy(zeta, material),
    }
}

/// Coefficient `3ζ/ν + 2λ` of the radial second variation
/// `δ²P[ς] = ν ∫ (3ζ/ν + 2λ) (ς')² dμ`, using `½(u')² = ζ/ν + λ`.
pub fn second_variation_primal_coeff<S: Real>(zeta: S, material: &Material<S>) -> S {
    S::lit(3.0) * zeta / material.nu() + S::lit(2.0) * material.lambda()
}

/// Integrand `-(|σ|²/ζ³ + 1/ν)` of the dual second variation.
pub fn second_variation_dual_integrand<S: Real>(
    zeta: S,
    sample: StressSample<S>,
    material: &Material<S>,
) -> Result<S> {
    if zeta == S::zero() || !zeta.is_finite() {
        return Err(Error::SingularDual {
            r: f64::NAN,
            zeta: zeta.to_f64_lossy(),
        });
    }
    Ok(-(sample.sigma_sq() / (zeta * zeta * zeta) + S::one() / material.nu()))
}

/// Pointwise dual density `-½(|σ|²/ζ + 2λζ + ζ²/ν)`.
fn dual_density<S: Real>(zeta: S, sigma_sq: S, material: &Material<S>) -> S {
    -(sigma_sq / zeta + S::lit(2.0) * material.lambda() * zeta + zeta * zeta / material.nu())
        / S::lit(2.0)
}

fn check_dual<S: Real>(r: S, zeta: S, material: &Material<S>) -> Result<()> {
    if !(zeta.abs() >= S::lit(1e-12) * material.scale()) {
        return Err(Error::SingularDual {
            r: r.to_f64_lossy(),
            zeta: zeta.to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_on_problem<S: Real>(problem: &Problem<S>, field: &RadialField<S>) -> Result<()> {
    let (lo, hi) = problem.domain();
    let slack = S::lit(1e-12) * (S::one() + hi.abs());
    let grid = field.grid();
    if (grid.r_min() - lo).abs() > slack || (grid.r_max() - hi).abs() > slack {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `P(u) = ∫ W(∇u) dμ - ∫ f u dμ - ∫_{Γt} t u dΓ` from nodal `u` and `u'`.
///
/// The grid must span the problem's domain since the boundary work is taken
/// from the end values.
pub fn primal_energy<S: Real>(
    problem: &Problem<S>,
    u: &RadialField<S>,
    u_prime: &RadialField<S>,
) -> Result<S> {
    if !u.same_grid(u_prime) {
        return Err(Error::GridMismatch);
    }
    check_on_problem(problem, u)?;
    let material = problem.material();
    let integrand: Vec<S> = u
        .nodes()
        .iter()
        .zip(u.values().iter().zip(u_prime.values()))
        .map(|(&r, (&v, &dv))| {
            (double_well(dv * dv, material) - problem.source(r) * v) * problem.measure(r)
        })
        .collect();
    Ok(integrate_nodal(u.nodes(), &integrand) - problem.boundary_work(u.first(), u.last()))
}

/// `Pᵈ(ζ) = -½ ∫ (|σ|²/ζ + 2λζ + ζ²/ν) dμ` with the problem's admissible stress.
pub fn dual_energy<S: Real>(problem: &Problem<S>, zeta: &RadialField<S>) -> Result<S> {
    let material = problem.material();
    let mut integrand = Vec::with_capacity(zeta.values().len());
    for (&r, &z) in zeta.nodes().iter().zip(zeta.values()) {
        check_dual(r, z, material)?;
        let (_, sigma_sq) = problem.stress(r)?;
        integrand.push(dual_density(z, sigma_sq, material) * problem.measure(r));
    }
    Ok(integrate_nodal(zeta.nodes(), &integrand))
}

/// Total complementary energy
/// `Ξ(u, ζ) = ∫ {½|∇u|² ζ - U*(ζ) - f u} dμ - ∫_{Γt} t u dΓ`.
pub fn total_complementary<S: Real>(
    problem: &Problem<S>,
    u: &RadialField<S>,
    u_prime: &RadialField<S>,
    zeta: &RadialField<S>,
) -> Result<S> {
    if !u.same_grid(u_prime) || !u.same_grid(zeta) {
        return Err(Error::GridMismatch);
    }
    check_on_problem(problem, u)?;
    let material = problem.material();
    let half = S::lit(0.5);
    let integrand: Vec<S> = (0..u.values().len())
        .map(|i| {
            let r = u.nodes()[i];
            let (v, dv, z) = (u.values()[i], u_prime.values()[i], zeta.values()[i]);
            (half * dv * dv * z - complementary_energy(z, material) - problem.source(r) * v)
                * problem.measure(r)
        })
        .collect();
    Ok(integrate_nodal(u.nodes(), &integrand) - problem.boundary_work(u.first(), u.last()))
}

/// [`primal_energy`] from pointwise evaluators of `u` and `u'`, integrated
/// adaptively over the problem's domain with `breaks` as panel boundaries.
pub fn primal_energy_with<S, U, D>(
    problem: &Problem<S>,
    rule: &GaussLegendre<S>,
    mut u: U,
    mut u_prime: D,
    breaks: &[S],
    rel_tol: S,
) -> Result<Quadrature<S>>
where
    S: Real,
    U: FnMut(S) -> Result<S>,
    D: FnMut(S) -> Result<S>,
{
    let material = *problem.material();
    let (lo, hi) = problem.domain();
    let q = rule.integrate_piecewise_try(
        |r| {
            let dv = u_prime(r)?;
            Ok((double_well(dv * dv, &material) - problem.source(r) * u(r)?) * problem.measure(r))
        },
        lo,
        hi,
        breaks,
        rel_tol,
    )?;
    Ok(Quadrature {
        value: q.value - problem.boundary_work(u(lo)?, u(hi)?),
        error_estimate: q.error_estimate,
    })
}

/// [`dual_energy`] from a pointwise evaluator of `ζ`.
pub fn dual_energy_with<S, Z>(
    problem: &Problem<S>,
    rule: &GaussLegendre<S>,
    mut zeta: Z,
    breaks: &[S],
    rel_tol: S,
) -> Result<Quadrature<S>>
where
    S: Real,
    Z: FnMut(S) -> Result<S>,
{
    let material = *problem.material();
    let (lo, hi) = problem.domain();
    rule.integrate_piecewise_try(
        |r| {
            let z = zeta(r)?;
            check_dual(r, z, &material)?;
            let (_, sigma_sq) = problem.stress(r)?;
            Ok(dual_density(z, sigma_sq, &material) * problem.measure(r))
        },
        lo,
        hi,
        breaks,
        rel_tol,
    )
}

/// `P(u + εφ) - P(u)` as a single integral of the density difference, so the
/// result carries no cancellation between two large energies. Only `u'`
/// enters the nonlinear part; the load terms are linear in `εφ`.
#[allow(clippy::too_many_arguments)]
pub fn energy_increment<S, D, P, Q>(
    problem: &Problem<S>,
    rule: &GaussLegendre<S>,
    mut u_prime: D,
    mut phi: P,
    mut phi_prime: Q,
    eps: S,
    breaks: &[S],
    rel_tol: S,
) -> Result<Quadrature<S>>
where
    S: Real,
    D: FnMut(S) -> Result<S>,
    P: FnMut(S) -> S,
    Q: FnMut(S) -> S,
{
    let material = *problem.material();
    let (lo, hi) = problem.domain();
    let q = rule.integrate_piecewise_try(
        |r| {
            let dv = u_prime(r)?;
            let moved = dv + eps * phi_prime(r);
            let dw = double_well(moved * moved, &material) - double_well(dv * dv, &material);
            Ok((dw - eps * problem.source(r) * phi(r)) * problem.measure(r))
        },
        lo,
        hi,
        breaks,
        rel_tol,
    )?;
    Ok(Quadrature {
        value: q.value - eps * problem.boundary_work(phi(lo), phi(hi)),
        error_estimate: q.error_estimate,
    })
}
