//! Primal solutions rebuilt from the dual roots.
//!
//! On every node the requested root `ζ̄` of the dual cubic gives the radial
//! derivative `ū' = σ_r/ζ̄`; `ū` follows by cumulative quadrature with the
//! root re-solved at every quadrature point. A [`BranchMap`] may switch roots
//! between sub-intervals, which produces continuous solutions with kinks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dae::{solve_dae, Regime, StressSample, DEFAULT_REGIME_TOL};
use crate::energy::RadialField;
use crate::error::{Error, Result};
use crate::numerics::{nodal_derivative, GaussLegendre, RadialGrid, DEFAULT_ORDER};
use crate::problems::Problem;
use crate::scalar::Real;
use crate::verify::{classify_branch, SegmentLabel};

/// Relative tolerance of the per-interval integrals that build `ū`.
const CUMULATIVE_REL_TOL: f64 = 1e-13;
/// Roots smaller than this multiple of `νλ` are treated as singular.
const SINGULAR_ZETA: f64 = 1e-12;
/// Nodes excluded on each side of a branch switch by [`pde_residual`].
const KINK_EXCLUSION: usize = 2;

/// One sub-interval of a branch map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment<S> {
    pub from: S,
    pub to: S,
    pub branch: u8,
}

/// Piecewise assignment of root branches to sub-intervals.
///
/// Segments are half-open `[from, to)` except the last, which is closed.
///
/// ```json
/// {"segments":[{"from":0.5,"to":0.9,"branch":1},{"from":0.9,"to":1.277,"branch":2}]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchMap<S> {
    pub segments: Vec<Segment<S>>,
}

impl<S: Real> BranchMap<S> {
    /// A single branch over `[from, to]`.
    pub fn pure(branch: u8, from: S, to: S) -> Self {
        Self {
            segments: vec![Segment { from, to, branch }],
        }
    }

    /// Checks labels, ordering, contiguity and coverage of `[lo, hi]`.
    pub fn validate(&self, lo: S, hi: S) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidBranchMap(msg));
        let slack = S::lit(1e-12) * (S::one() + hi.abs().max(lo.abs()));
        let Some(first) = self.segments.first() else {
            return bad("no segments".into());
        };
        let last = self.segments[self.segments.len() - 1];
        for s in &self.segments {
            if !(1..=3).contains(&s.branch) {
                return bad(format!("branch label {} is not 1, 2 or 3", s.branch));
            }
            if !(s.from < s.to) {
                return bad(format!("empty segment [{}, {}]", s.from, s.to));
            }
        }
        for w in self.segments.windows(2) {
            if (w[0].to - w[1].from).abs() > slack {
                return bad(format!(
                    "gap or overlap between {} and {}",
                    w[0].to, w[1].from
                ));
            }
        }
        if (first.from - lo).abs() > slack || (last.to - hi).abs() > slack {
            return bad(format!(
                "segments span [{}, {}] but the domain is [{lo}, {hi}]",
                first.from, last.to
            ));
        }
        Ok(())
    }

    /// Branch label at `r`.
    pub fn branch_at(&self, r: S) -> u8 {
        self.segments
            .iter()
            .find(|s| r < s.to)
            .unwrap_or(&self.segments[self.segments.len() - 1])
            .branch
    }

    /// Radii where the branch switches.
    pub fn breakpoints(&self) -> Vec<S> {
        self.segments.iter().skip(1).map(|s| s.from).collect()
    }

    pub fn is_pure(&self) -> bool {
        self.segments
            .iter()
            .all(|s| s.branch == self.segments[0].branch)
    }
}

impl BranchMap<f64> {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Pointwise data of the selected branch at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues<S> {
    pub zeta: S,
    pub u_prime: S,
    pub sigma_r: S,
    pub sigma_sq: S,
    pub regime: Regime,
}

/// Solves the dual cubic at `r` and selects `branch`.
pub fn point_values<S: Real>(problem: &Problem<S>, branch: u8, r: S) -> Result<PointValues<S>> {
    let (sigma_r, sigma_sq) = problem.stress(r)?;
    let material = problem.material();
    let roots = solve_dae(
        StressSample::new(sigma_sq)?,
        material,
        S::lit(DEFAULT_REGIME_TOL),
    );
    let zeta = roots.branch(branch).ok_or(Error::BranchUnavailable {
        branch,
        r: r.to_f64_lossy(),
        sigma_sq: sigma_sq.to_f64_lossy(),
    })?;
    if !(zeta.abs() >= S::lit(SINGULAR_ZETA) * material.scale()) {
        return Err(Error::SingularDual {
            r: r.to_f64_lossy(),
            zeta: zeta.to_f64_lossy(),
        });
    }
    Ok(PointValues {
        zeta,
        u_prime: sigma_r / zeta,
        sigma_r,
        sigma_sq,
        regime: roots.regime,
    })
}

/// A primal critical point `ū` rebuilt from the dual roots, with `ζ̄`, `ū`
/// and `ū'` sampled on a grid.
#[derive(Debug, Clone)]
pub struct SolutionBranch<S> {
    problem: Problem<S>,
    branch_map: BranchMap<S>,
    grid: Arc<RadialGrid<S>>,
    zeta: RadialField<S>,
    u: RadialField<S>,
    u_prime: RadialField<S>,
    regimes: Vec<Regime>,
    offset: S,
    rule: GaussLegendre<S>,
}

impl<S: Real> SolutionBranch<S> {
    pub fn problem(&self) -> &Problem<S> {
        &self.problem
    }

    pub fn branch_map(&self) -> &BranchMap<S> {
        &self.branch_map
    }

    pub fn grid(&self) -> &Arc<RadialGrid<S>> {
        &self.grid
    }

    pub fn zeta(&self) -> &RadialField<S> {
        &self.zeta
    }

    /// `ū`, normalized to the offset (zero by default) at the first node.
    pub fn u(&self) -> &RadialField<S> {
        &self.u
    }

    pub fn u_prime(&self) -> &RadialField<S> {
        &self.u_prime
    }

    /// Regime of the dual cubic at every node.
    pub fn regimes(&self) -> &[Regime] {
        &self.regimes
    }

    pub fn offset(&self) -> S {
        self.offset
    }

    pub fn rule(&self) -> &GaussLegendre<S> {
        &self.rule
    }

    /// Whether the grid spans the full problem domain.
    pub fn covers_domain(&self) -> bool {
        let (lo, hi) = self.problem.domain();
        let slack = S::lit(1e-12) * (S::one() + hi.abs());
        (self.grid.r_min() - lo).abs() <= slack && (self.grid.r_max() - hi).abs() <= slack
    }

    pub fn zeta_at(&self, r: S) -> Result<S> {
        Ok(point_values(&self.problem, self.branch_map.branch_at(r), r)?.zeta)
    }

    pub fn u_prime_at(&self, r: S) -> Result<S> {
        Ok(point_values(&self.problem, self.branch_map.branch_at(r), r)?.u_prime)
    }

    /// `ū(r)` for any `r` on the grid's span: nodal value plus the integral of
    /// `ū'` from the node below.
    pub fn u_at(&self, r: S) -> Result<S> {
        let (lo, hi) = (self.grid.r_min(), self.grid.r_max());
        if r.is_nan() || r < lo || r > hi {
            return Err(Error::OutOfDomain {
                r: r.to_f64_lossy(),
                r_min: lo.to_f64_lossy(),
                r_max: hi.to_f64_lossy(),
            });
        }
        let i = self.grid.interval_of(r);
        let nodes = self.grid.nodes();
        if r == nodes[i] {
            return Ok(self.u.values()[i]);
        }
        if r == nodes[i + 1] {
            return Ok(self.u.values()[i + 1]);
        }
        Ok(self.u.values()[i] + self.integrate_u_prime(nodes[i], r)?)
    }

    fn integrate_u_prime(&self, a: S, b: S) -> Result<S> {
        integrate_u_prime(&self.problem, &self.branch_map, &self.rule, a, b)
    }

    /// Node index ranges of maximal runs sharing one branch label.
    pub fn segment_runs(&self) -> Vec<(std::ops::Range<usize>, u8)> {
        let labels: Vec<u8> = self
            .grid
            .nodes()
            .iter()
            .map(|&r| self.branch_map.branch_at(r))
            .collect();
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=labels.len() {
            if i == labels.len() || labels[i] != labels[start] {
                runs.push((start..i, labels[start]));
                start = i;
            }
        }
        runs
    }

    /// Triality labels of every segment.
    pub fn classification(&self) -> Result<Vec<SegmentLabel<S>>> {
        classify_branch(self, self.problem.dimension())
    }
}

fn integrate_u_prime<S: Real>(
    problem: &Problem<S>,
    map: &BranchMap<S>,
    rule: &GaussLegendre<S>,
    a: S,
    b: S,
) -> Result<S> {
    if a == b {
        return Ok(S::zero());
    }
    let q = rule.integrate_piecewise_try(
        |r| Ok(point_values(problem, map.branch_at(r), r)?.u_prime),
        a,
        b,
        &map.breakpoints(),
        S::lit(CUMULATIVE_REL_TOL),
    )?;
    Ok(q.value)
}

/// Builds the branch with `ū(r_min) = 0`.
pub fn solve_branch<S: Real>(
    problem: &Problem<S>,
    branch_map: &BranchMap<S>,
    grid: &RadialGrid<S>,
) -> Result<SolutionBranch<S>> {
    solve_branch_with_offset(problem, branch_map, grid, S::zero())
}

/// Builds the branch with `ū(r_min) = offset`.
pub fn solve_branch_with_offset<S: Real>(
    problem: &Problem<S>,
    branch_map: &BranchMap<S>,
    grid: &RadialGrid<S>,
    offset: S,
) -> Result<SolutionBranch<S>> {
    branch_map.validate(grid.r_min(), grid.r_max())?;
    let grid = Arc::new(grid.clone());
    let n = grid.len();
    let mut zeta = Vec::with_capacity(n);
    let mut u_prime = Vec::with_capacity(n);
    let mut regimes = Vec::with_capacity(n);
    for &r in grid.nodes() {
        let p = point_values(problem, branch_map.branch_at(r), r)?;
        zeta.push(p.zeta);
        u_prime.push(p.u_prime);
        regimes.push(p.regime);
    }
    let rule = GaussLegendre::new(DEFAULT_ORDER);
    let mut u = Vec::with_capacity(n);
    u.push(offset);
    for w in grid.nodes().windows(2) {
        let step = integrate_u_prime(problem, branch_map, &rule, w[0], w[1])?;
        let prev = u[u.len() - 1];
        u.push(prev + step);
    }
    Ok(SolutionBranch {
        problem: *problem,
        branch_map: branch_map.clone(),
        zeta: RadialField::new(grid.clone(), zeta)?,
        u: RadialField::new(grid.clone(), u)?,
        u_prime: RadialField::new(grid.clone(), u_prime)?,
        grid,
        regimes,
        offset,
        rule,
    })
}

/// Whether `branch` has a real, non-singular root at every node.
pub fn branch_exists<S: Real>(problem: &Problem<S>, branch: u8, grid: &RadialGrid<S>) -> bool {
    grid.nodes()
        .iter()
        .all(|&r| point_values(problem, branch, r).is_ok())
}

/// `ū(end) - ū(start)` by the L-shaped line integral of `σ/ζ̄`: first
/// vertically from `(x₀, y₀)` to `(x₀, y)`, then horizontally to `(x, y)`.
pub fn path_integral_u<S: Real>(
    branch: &SolutionBranch<S>,
    start: (S, S),
    end: (S, S),
) -> Result<S> {
    let Problem::Annulus(annulus) = branch.problem() else {
        return Err(Error::WrongProblem {
            expected: "an annulus problem",
        });
    };
    let (x0, y0) = start;
    let (x1, y1) = end;
    let slack = S::lit(1e-12) * annulus.r2;
    let breaks = branch.branch_map().breakpoints();
    let material = *branch.problem().material();

    // Each leg runs along one coordinate `s` with the other fixed at `c`.
    let leg = |c: S, s0: S, s1: S| -> Result<S> {
        if s0 == s1 {
            return Ok(S::zero());
        }
        let (lo, hi) = if s0 < s1 { (s0, s1) } else { (s1, s0) };
        let min_s = if lo <= S::zero() && hi >= S::zero() {
            S::zero()
        } else {
            lo.abs().min(hi.abs())
        };
        let max_s = lo.abs().max(hi.abs());
        let r_lo = (c * c + min_s * min_s).sqrt();
        let r_hi = (c * c + max_s * max_s).sqrt();
        if r_lo < annulus.r1 - slack || r_hi > annulus.r2 + slack {
            return Err(Error::PathOutsideDomain {
                r_lo: r_lo.to_f64_lossy(),
                r_hi: r_hi.to_f64_lossy(),
            });
        }
        let clamp = |r: S| r.max(annulus.r1).min(annulus.r2);
        for r in [r_lo, r_hi] {
            let z = branch.zeta_at(clamp(r))?;
            if !(z.abs() >= S::lit(SINGULAR_ZETA) * material.scale()) {
                return Err(Error::SingularDual {
                    r: r.to_f64_lossy(),
                    zeta: z.to_f64_lossy(),
                });
            }
        }
        let mut splits = vec![S::zero()];
        for &rb in &breaks {
            if rb > c.abs() {
                let s = (rb * rb - c * c).sqrt();
                splits.push(s);
                splits.push(-s);
            }
        }
        splits.sort_by(|a, b| a.partial_cmp(b).expect("finite split points"));
        let q = branch.rule().integrate_piecewise_try(
            |s| {
                let r = clamp((c * c + s * s).sqrt());
                Ok(branch.u_prime_at(r)? * s / r)
            },
            lo,
            hi,
            &splits,
            S::lit(1e-13),
        )?;
        Ok(if s0 < s1 { q.value } else { -q.value })
    };

    let vertical = leg(x0, y0, y1)?;
    let horizontal = leg(y1, x0, x1)?;
    Ok(vertical + horizontal)
}

/// Maximum of the central-difference curl `|∂ₓv_y - ∂_y v_x|` over `points`
/// with step `h`.
pub fn curl_residual<S, F>(mut field: F, points: &[(S, S)], h: S) -> Result<S>
where
    S: Real,
    F: FnMut(S, S) -> Result<(S, S)>,
{
    let two_h = h + h;
    let mut worst = S::zero();
    for &(x, y) in points {
        let dvy_dx = (field(x + h, y)?.1 - field(x - h, y)?.1) / two_h;
        let dvx_dy = (field(x, y + h)?.0 - field(x, y - h)?.0) / two_h;
        worst = worst.max((dvy_dx - dvx_dy).abs());
    }
    Ok(worst)
}

/// Polar lattice with cell-centred radii in `(r_lo, r_hi)` and `n_theta`
/// equally spaced angles.
pub fn polar_lattice<S: Real>(r_lo: S, r_hi: S, n_r: usize, n_theta: usize) -> Vec<(S, S)> {
    let dr = (r_hi - r_lo) / S::lit(n_r as f64);
    let dt = S::TAU() / S::lit(n_theta as f64);
    let mut points = Vec::with_capacity(n_r * n_theta);
    for i in 0..n_r {
        let r = r_lo + dr * (S::lit(i as f64) + S::lit(0.5));
        for j in 0..n_theta {
            let (sin, cos) = (dt * S::lit(j as f64)).sin_cos();
            points.push((r * cos, r * sin));
        }
    }
    points
}

/// Finite-difference step used by the compatibility checks.
fn compatibility_step<S: Real>(branch: &SolutionBranch<S>) -> S {
    S::lit(1e-6) * branch.grid().r_max().abs().max(S::one())
}

fn gradient_field<S: Real>(branch: &SolutionBranch<S>) -> impl FnMut(S, S) -> Result<(S, S)> + '_ {
    move |x, y| {
        let r = (x * x + y * y).sqrt();
        let g = branch.u_prime_at(r)? / r;
        Ok((g * x, g * y))
    }
}

/// Curl of `σ/ζ̄ = ū'(r) r̂` on a `resolution × resolution` polar lattice
/// inside the grid span, skipping lattice radii that straddle a branch switch.
pub fn compatibility_residual<S: Real>(branch: &SolutionBranch<S>, resolution: usize) -> Result<S> {
    if !matches!(branch.problem(), Problem::Annulus(_)) {
        return Err(Error::WrongProblem {
            expected: "an annulus problem",
        });
    }
    let h = compatibility_step(branch);
    let breaks = branch.branch_map().breakpoints();
    let points: Vec<(S, S)> = polar_lattice(
        branch.grid().r_min(),
        branch.grid().r_max(),
        resolution,
        resolution,
    )
    .into_iter()
    .filter(|&(x, y)| {
        let r = (x * x + y * y).sqrt();
        breaks.iter().all(|&b| (r - b).abs() > S::lit(10.0) * h)
    })
    .collect();
    curl_residual(gradient_field(branch), &points, h)
}

/// Nodes whose compatibility residual (over 16 angles) is at most `tol`.
pub fn region_s_mask<S: Real>(branch: &SolutionBranch<S>, tol: S) -> Result<Vec<bool>> {
    if !matches!(branch.problem(), Problem::Annulus(_)) {
        return Err(Error::WrongProblem {
            expected: "an annulus problem",
        });
    }
    region_mask_for(
        branch.grid().nodes(),
        gradient_field(branch),
        compatibility_step(branch),
        &branch.branch_map().breakpoints(),
        tol,
    )
}

/// Node mask for an arbitrary planar field `v(x, y)`; the stencil of the end
/// nodes is pulled inside by `2h`.
pub fn region_mask_for<S, F>(
    nodes: &[S],
    mut field: F,
    h: S,
    breaks: &[S],
    tol: S,
) -> Result<Vec<bool>>
where
    S: Real,
    F: FnMut(S, S) -> Result<(S, S)>,
{
    const ANGLES: usize = 16;
    let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
    let margin = h + h;
    let dt = S::TAU() / S::lit(ANGLES as f64);
    nodes
        .iter()
        .map(|&r0| {
            if breaks.iter().any(|&b| (r0 - b).abs() <= margin) {
                // The kink is curl-free but not resolvable by the stencil.
                return Ok(true);
            }
            let r = r0.max(lo + margin).min(hi - margin);
            let points: Vec<(S, S)> = (0..ANGLES)
                .map(|j| {
                    let (sin, cos) = (dt * S::lit(j as f64)).sin_cos();
                    (r * cos, r * sin)
                })
                .collect();
            Ok(curl_residual(&mut field, &points, h)? <= tol)
        })
        .collect()
}

/// Residual of the radial equilibrium `(1/μ) d(μ σ(ū'))/dr + f = 0` with
/// `σ(ū') = ν(½ū'² - λ)ū'`, together with the traction residuals at Neumann
/// ends and `|ū(0)|` at a clamped end.
pub fn pde_residual<S: Real>(branch: &SolutionBranch<S>) -> S {
    let runs: Vec<std::ops::Range<usize>> =
        branch.segment_runs().into_iter().map(|(r, _)| r).collect();
    pde_residual_fields(branch.problem(), branch.u(), branch.u_prime(), &runs)
}

/// [`pde_residual`] on raw fields. `runs` are the node ranges of smooth
/// segments; stencils never cross a run boundary and [`KINK_EXCLUSION`] nodes
/// next to interior boundaries are skipped.
pub fn pde_residual_fields<S: Real>(
    problem: &Problem<S>,
    u: &RadialField<S>,
    u_prime: &RadialField<S>,
    runs: &[std::ops::Range<usize>],
) -> S {
    let material = *problem.material();
    let nodes = u.nodes();
    let stress = |dv: S| material.nu() * (dv * dv / S::lit(2.0) - material.lambda()) * dv;
    let mut worst = S::zero();
    for (k, run) in runs.iter().enumerate() {
        if run.len() < 2 {
            continue;
        }
        let xs = &nodes[run.clone()];
        let flux: Vec<S> = run
            .clone()
            .map(|i| problem.measure(nodes[i]) * stress(u_prime.values()[i]))
            .collect();
        let dflux = nodal_derivative(xs, &flux);
        let skip_lo = if k > 0 { KINK_EXCLUSION } else { 0 };
        let skip_hi = if k + 1 < runs.len() {
            KINK_EXCLUSION
        } else {
            0
        };
        for j in skip_lo..run.len().saturating_sub(skip_hi) {
            let r = xs[j];
            let residual = dflux[j] / problem.measure(r) + problem.source(r);
            worst = worst.max(residual.abs());
        }
    }

    let (lo, hi) = problem.domain();
    let slack = S::lit(1e-12) * (S::one() + hi.abs());
    let ends = [
        (nodes[0], 0usize),
        (nodes[nodes.len() - 1], nodes.len() - 1),
    ];
    for (side, (r, i)) in ends.into_iter().enumerate() {
        let at_boundary = if side == 0 {
            (r - lo).abs() <= slack
        } else {
            (r - hi).abs() <= slack
        };
        if !at_boundary {
            continue;
        }
        match problem.tractions()[side] {
            Some((normal, t)) => {
                worst = worst.max((stress(u_prime.values()[i]) * normal - t).abs());
            }
            None => worst = worst.max(u.values()[i].abs()),
        }
    }
    worst
}

/// `max |½ū'² - (ζ̄/ν + λ)|` over the nodes.
pub fn constitutive_residual<S: Real>(branch: &SolutionBranch<S>) -> S {
    constitutive_residual_fields(branch.zeta(), branch.u_prime(), branch.problem().material())
}

pub fn constitutive_residual_fields<S: Real>(
    zeta: &RadialField<S>,
    u_prime: &RadialField<S>,
    material: &crate::dae::Material<S>,
) -> S {
    zeta.values()
        .iter()
        .zip(u_prime.values())
        .map(|(&z, &dv)| (dv * dv / S::lit(2.0) - (z / material.nu() + material.lambda())).abs())
        .fold(S::zero(), S::max)
}
