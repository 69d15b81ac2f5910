//! Triality classification, the zero duality gap and energy probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dae::{dae_residual, solve_dae, Regime, StressSample, DEFAULT_REGIME_TOL};
use crate::energy::{
    dual_energy_with, energy_increment, primal_energy_with, second_variation_dual_integrand,
    second_variation_primal_coeff, EnergyReport,
};
use crate::error::{Error, Result};
use crate::numerics::{make_radial_grid, GaussLegendre, DEFAULT_NODES, DEFAULT_REL_TOL};
use crate::problems::{check_load_balance, Problem};
use crate::reconstruct::{
    branch_exists, compatibility_residual, constitutive_residual, pde_residual, solve_branch,
    BranchMap, SolutionBranch,
};
use crate::scalar::Real;

/// Extremality type of a branch segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrialityLabel {
    GlobalMinCandidate,
    LocalMin,
    LocalMax,
    /// Minimizer along radial directions only; no claim in higher dimensions.
    Indefinite1DMin,
}

impl TrialityLabel {
    pub fn is_min(self) -> bool {
        !matches!(self, TrialityLabel::LocalMax)
    }
}

/// Label of one maximal run of nodes sharing a branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentLabel<S> {
    pub from: S,
    pub to: S,
    pub branch: u8,
    pub label: TrialityLabel,
}

/// Label rule from the branch, the regimes it crosses and the dimension.
pub fn triality_label(branch: u8, regimes: &[Regime], dimension: usize) -> TrialityLabel {
    match branch {
        1 if regimes.iter().all(|&r| r == Regime::OneReal) => TrialityLabel::GlobalMinCandidate,
        1 => TrialityLabel::LocalMin,
        2 if dimension >= 2 => TrialityLabel::Indefinite1DMin,
        2 => TrialityLabel::LocalMin,
        _ => TrialityLabel::LocalMax,
    }
}

/// Labels every segment and cross-checks the pointwise signs of the primal
/// coefficient `3ζ̄/ν + 2λ` and the dual integrand `-(|σ|²/ζ̄³ + 1/ν)`.
pub fn classify_branch<S: Real>(
    branch: &SolutionBranch<S>,
    dimension: usize,
) -> Result<Vec<SegmentLabel<S>>> {
    let problem = branch.problem();
    let material = *problem.material();
    let nodes = branch.grid().nodes();
    let zero = S::lit(1e-9) * material.lambda();
    let mut labels = Vec::new();
    for (run, b) in branch.segment_runs() {
        for i in run.clone() {
            let r = nodes[i];
            let zeta = branch.zeta().values()[i];
            let sample = StressSample::new(problem.stress(r)?.1)?;
            let coeff = second_variation_primal_coeff(zeta, &material);
            let dual = second_variation_dual_integrand(zeta, sample, &material)?;
            let consistent = match b {
                1 => zeta >= S::zero() && coeff > S::zero() && dual < S::zero(),
                2 => {
                    let cube = -(sample.sigma_sq() * material.nu()).cbrt();
                    coeff > -zero && (zeta <= cube || dual > S::zero())
                }
                _ => coeff < zero && dual < S::zero(),
            };
            if !consistent {
                return Err(Error::ClassificationConflict(format!(
                    "branch {b} at r = {r}: zeta = {zeta}, 3ζ/ν+2λ = {coeff}, dual integrand = {dual}"
                )));
            }
        }
        labels.push(SegmentLabel {
            from: nodes[run.start],
            to: nodes[run.end - 1],
            branch: b,
            label: triality_label(b, &branch.regimes()[run.clone()], dimension),
        });
    }
    Ok(labels)
}

/// Primal energy of `primal` against the dual energy of `dual`; with the
/// same branch twice this is the duality gap.
pub fn energy_pair<S: Real>(
    primal: &SolutionBranch<S>,
    dual: &SolutionBranch<S>,
    rel_tol: S,
) -> Result<EnergyReport<S>> {
    if !primal.covers_domain() || !dual.covers_domain() {
        return Err(Error::GridMismatch);
    }
    let problem = primal.problem();
    let p = primal_energy_with(
        problem,
        primal.rule(),
        |r| primal.u_at(r),
        |r| primal.u_prime_at(r),
        &primal.branch_map().breakpoints(),
        rel_tol,
    )?;
    let d = dual_energy_with(
        problem,
        dual.rule(),
        |r| dual.zeta_at(r),
        &dual.branch_map().breakpoints(),
        rel_tol,
    )?;
    Ok(EnergyReport::new(
        p.value,
        d.value,
        p.error_estimate + d.error_estimate,
    ))
}

/// `Pₙ(ū)` and `Pᵈ(ζ̄)` of one branch.
pub fn duality_gap<S: Real>(branch: &SolutionBranch<S>) -> Result<EnergyReport<S>> {
    energy_pair(branch, branch, S::lit(DEFAULT_REL_TOL))
}

/// Test function `φ = Σ cₖ ξᵏ` in `ξ = (r - r_min)/(r_max - r_min)`.
#[derive(Debug, Clone)]
pub struct Polynomial<S> {
    coeffs: Vec<S>,
    lo: S,
    width: S,
}

impl<S: Real> Polynomial<S> {
    pub fn new(coeffs: Vec<S>, lo: S, hi: S) -> Self {
        Self {
            coeffs,
            lo,
            width: hi - lo,
        }
    }

    pub fn value(&self, r: S) -> S {
        let xi = (r - self.lo) / self.width;
        self.coeffs
            .iter()
            .rev()
            .fold(S::zero(), |acc, &c| acc * xi + c)
    }

    pub fn derivative(&self, r: S) -> S {
        let xi = (r - self.lo) / self.width;
        let d = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(S::zero(), |acc, (k, &c)| acc * xi + S::lit(k as f64) * c);
        d / self.width
    }

    fn scale(&mut self, factor: S) {
        for c in &mut self.coeffs {
            *c = *c * factor;
        }
    }
}

/// Lowest admissible power: a clamped end forces `φ(0) = 0`.
fn lowest_power<S: Real>(problem: &Problem<S>) -> usize {
    if problem.is_pure_neumann() {
        0
    } else {
        1
    }
}

fn increment<S: Real>(branch: &SolutionBranch<S>, phi: &Polynomial<S>, eps: S) -> Result<S> {
    Ok(energy_increment(
        branch.problem(),
        branch.rule(),
        |r| branch.u_prime_at(r),
        |r| phi.value(r),
        |r| phi.derivative(r),
        eps,
        &branch.branch_map().breakpoints(),
        S::lit(DEFAULT_REL_TOL),
    )?
    .value)
}

/// Largest `|d/dε Pₙ(ū + εφₖ)|` at `ε = 0` over the monomials `ξᵏ` up to
/// degree `directions + 1`, by central differences with step `1e-6`.
pub fn stationarity_probe<S: Real>(branch: &SolutionBranch<S>, directions: usize) -> Result<S> {
    let (lo, hi) = branch.problem().domain();
    let eps = S::lit(1e-6);
    let mut worst = S::zero();
    for k in lowest_power(branch.problem())..=directions + 1 {
        let mut coeffs = vec![S::zero(); k + 1];
        coeffs[k] = S::one();
        let phi = Polynomial::new(coeffs, lo, hi);
        let slope = (increment(branch, &phi, eps)? - increment(branch, &phi, -eps)?) / (eps + eps);
        worst = worst.max(slope.abs());
    }
    Ok(worst)
}

/// Degree of the random perturbation polynomials.
pub const PERTURBATION_DEGREE: usize = 4;

/// Random radial perturbation with `∫ (φ')² dμ = 1`; coefficients are drawn
/// uniformly from `[-1, 1]`.
pub fn random_perturbation<S: Real>(problem: &Problem<S>, rng: &mut ChaCha8Rng) -> Polynomial<S> {
    let (lo, hi) = problem.domain();
    let rule = GaussLegendre::<S>::new(PERTURBATION_DEGREE + 2);
    loop {
        let coeffs = (0..=PERTURBATION_DEGREE)
            .map(|k| {
                let c: f64 = rng.gen_range(-1.0..=1.0);
                if k < lowest_power(problem) {
                    S::zero()
                } else {
                    S::lit(c)
                }
            })
            .collect();
        let mut phi = Polynomial::new(coeffs, lo, hi);
        let energy = |r: S| {
            let d = phi.derivative(r);
            d * d * problem.measure(r)
        };
        let norm = rule
            .composite(&mut |r| Ok(energy(r)), lo, hi, 1)
            .map(|(v, _)| v)
            .unwrap_or(S::zero());
        if norm > S::lit(1e-8) {
            phi.scale(S::one() / norm.sqrt());
            return phi;
        }
    }
}

/// `(min ΔP, max ΔP)` over `trials` seeded perturbations `ū + εφ`.
pub fn perturbation_probe<S: Real>(
    branch: &SolutionBranch<S>,
    trials: usize,
    eps: S,
    seed: u64,
) -> Result<(S, S)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    for _ in 0..trials {
        let phi = random_perturbation(branch.problem(), &mut rng);
        let d = increment(branch, &phi, eps)?;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok((lo, hi))
}

/// `Pₙ(ū + c) - Pₙ(ū)`, zero for balanced pure-Neumann loads.
pub fn shift_increment<S: Real>(branch: &SolutionBranch<S>, c: S) -> Result<S> {
    let (lo, hi) = branch.problem().domain();
    increment(branch, &Polynomial::new(vec![S::one()], lo, hi), c)
}

/// One named measurement against its threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    /// Passes when `value ≥ threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }

    fn failed(name: impl Into<String>, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            threshold,
            pass: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl VerificationReport {
    pub fn new(checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.pass);
        Self { checks, overall }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Settings of [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub nodes: usize,
    pub trials: usize,
    pub eps: f64,
    pub seed: u64,
    pub directions: usize,
    pub lattice: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            nodes: DEFAULT_NODES,
            trials: 100,
            eps: 1e-3,
            seed: 0,
            directions: 3,
            lattice: 24,
        }
    }
}

/// Runs every check on every branch that exists on the default grid.
/// Failures are recorded in the report, never returned as errors.
pub fn run_suite<S: Real>(problem: &Problem<S>, options: &SuiteOptions) -> VerificationReport {
    let mut checks = Vec::new();
    let f = |x: S| x.to_f64_lossy();
    let material = *problem.material();
    let (lo, hi) = problem.domain();

    let balance_scale = f(problem.load_scale()) * f(hi - lo).max(1.0);
    checks.push(Check::at_most(
        "load_balance",
        f(check_load_balance(problem)).abs(),
        1e-10 * balance_scale,
    ));

    let grid = match make_radial_grid(lo, hi, options.nodes) {
        Ok(g) => g,
        Err(_) => {
            checks.push(Check::failed("grid", 0.0));
            return VerificationReport::new(checks);
        }
    };

    let mut samples = Vec::with_capacity(grid.len());
    for &r in grid.nodes() {
        match problem.stress(r).and_then(|(_, s)| StressSample::new(s)) {
            Ok(s) => samples.push(s),
            Err(_) => break,
        }
    }
    let stress_ok = samples.len() == grid.len();
    checks.push(Check::at_most(
        "stress_field",
        if stress_ok { 0.0 } else { 1.0 },
        0.0,
    ));
    if !stress_ok {
        return VerificationReport::new(checks);
    }

    let tol = S::lit(DEFAULT_REGIME_TOL);
    let disorder = samples
        .iter()
        .filter(|&&s| !solve_dae(s, &material, tol).is_ordered(&material, S::lit(1e-12)))
        .count();
    checks.push(Check::at_most("ordering", disorder as f64, 0.0));

    let mut primal = Vec::new();
    let mut count = 0;
    for b in 1..=3u8 {
        if !branch_exists(problem, b, &grid) {
            continue;
        }
        count += 1;
        let name = |check: &str| format!("b{b}.{check}");
        let branch = match solve_branch(problem, &BranchMap::pure(b, lo, hi), &grid) {
            Ok(branch) => branch,
            Err(_) => {
                checks.push(Check::failed(name("solve"), 0.0));
                continue;
            }
        };

        let dae = samples
            .iter()
            .zip(branch.zeta().values())
            .map(|(&s, &z)| f(dae_residual(z, s, &material)).abs() / f(s.sigma_sq()).max(1.0))
            .fold(0.0, f64::max);
        checks.push(Check::at_most(name("dae_residual"), dae, 1e-12));
        checks.push(Check::at_most(
            name("constitutive"),
            f(constitutive_residual(&branch)),
            1e-12,
        ));
        checks.push(Check::at_most(
            name("pde_residual"),
            f(pde_residual(&branch)),
            1e-6 * f(problem.load_scale()),
        ));
        if matches!(problem, Problem::Annulus(_)) {
            checks.push(match compatibility_residual(&branch, options.lattice) {
                Ok(v) => Check::at_most(name("compatibility"), f(v), 1e-8),
                Err(_) => Check::failed(name("compatibility"), 1e-8),
            });
        }

        let energy = match duality_gap(&branch) {
            Ok(report) => {
                checks.push(Check::at_most(
                    name("duality_gap"),
                    f(report.relative_gap()),
                    1e-6,
                ));
                primal.push((b, f(report.primal)));
                f(report.primal).abs().max(f64::MIN_POSITIVE)
            }
            Err(_) => {
                checks.push(Check::failed(name("duality_gap"), 1e-6));
                continue;
            }
        };

        if problem.is_pure_neumann() {
            let shifts: Result<Vec<S>> = [1.0, -1.0, 10.0, -10.0]
                .iter()
                .map(|&c| shift_increment(&branch, S::lit(c)))
                .collect();
            checks.push(match shifts {
                Ok(v) => Check::at_most(
                    name("shift_invariance"),
                    v.iter().map(|&d| f(d).abs()).fold(0.0, f64::max) / energy,
                    1e-10,
                ),
                Err(_) => Check::failed(name("shift_invariance"), 1e-10),
            });
        }

        checks.push(match stationarity_probe(&branch, options.directions) {
            Ok(v) => Check::at_most(name("stationarity"), f(v) / energy, 1e-5),
            Err(_) => Check::failed(name("stationarity"), 1e-5),
        });

        match classify_branch(&branch, problem.dimension()) {
            Ok(labels) => {
                checks.push(Check::at_most(name("classification"), 0.0, 0.0));
                let is_min = labels.iter().all(|l| l.label.is_min());
                checks.push(
                    match perturbation_probe(
                        &branch,
                        options.trials,
                        S::lit(options.eps),
                        options.seed,
                    ) {
                        Ok((min, _)) if is_min => {
                            Check::at_least(name("perturbation"), f(min), -1e-10)
                        }
                        Ok((_, max)) => Check::at_most(name("perturbation"), f(max), 1e-10),
                        Err(_) => Check::failed(name("perturbation"), 1e-10),
                    },
                );
            }
            Err(_) => checks.push(Check::at_most(name("classification"), 1.0, 0.0)),
        }
    }
    checks.push(Check::at_least("branch_count", count as f64, 1.0));

    if let Some(&(_, p1)) = primal.iter().find(|(b, _)| *b == 1) {
        let excess = primal
            .iter()
            .filter(|(b, _)| *b != 1)
            .map(|&(_, p)| p1 - p)
            .fold(f64::NEG_INFINITY, f64::max);
        if excess.is_finite() {
            checks.push(Check::at_most("energy_ordering", excess, 0.0));
        }
    }
    VerificationReport::new(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dae::Material;
    use crate::problems::{AnnulusProblem, Bar1DProblem, BarSource};
    use approx::assert_abs_diff_eq;

    fn annulus() -> Problem<f64> {
        AnnulusProblem::standard().into()
    }

    fn bar(t: f64) -> Problem<f64> {
        Bar1DProblem::new(1.0, Material::unit(), BarSource::Zero, t)
            .unwrap()
            .into()
    }

    fn pure(problem: &Problem<f64>, b: u8, n: usize) -> SolutionBranch<f64> {
        let (lo, hi) = problem.domain();
        solve_branch(
            problem,
            &BranchMap::pure(b, lo, hi),
            &make_radial_grid(lo, hi, n).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn label_rules() {
        use Regime::*;
        assert_eq!(
            triality_label(1, &[OneReal, OneReal], 2),
            TrialityLabel::GlobalMinCandidate
        );
        assert_eq!(
            triality_label(1, &[ThreeReal, OneReal], 2),
            TrialityLabel::LocalMin
        );
        assert_eq!(
            triality_label(2, &[ThreeReal], 2),
            TrialityLabel::Indefinite1DMin
        );
        assert_eq!(triality_label(2, &[ThreeReal], 1), TrialityLabel::LocalMin);
        assert_eq!(triality_label(3, &[ThreeReal], 1), TrialityLabel::LocalMax);
    }

    #[test]
    fn classification_examples() {
        let b = pure(&bar(2.0), 1, 9);
        let labels = b.classification().unwrap();
        assert_eq!(labels.len(), 1);
        assert_eq!(labels[0].label, TrialityLabel::GlobalMinCandidate);

        let a = annulus();
        let b3 = pure(&a, 3, 64);
        assert_eq!(
            b3.classification().unwrap()[0].label,
            TrialityLabel::LocalMax
        );
        for &z in b3.zeta().values() {
            assert!(second_variation_primal_coeff(z, a.material()) < 0.0);
        }
        assert_eq!(
            pure(&a, 2, 64).classification().unwrap()[0].label,
            TrialityLabel::Indefinite1DMin
        );
        assert_eq!(
            classify_branch(&pure(&a, 2, 64), 1).unwrap()[0].label,
            TrialityLabel::LocalMin
        );
        assert_eq!(
            pure(&a, 1, 64).classification().unwrap()[0].label,
            TrialityLabel::LocalMin
        );
    }

    #[test]
    fn closed_form_gap() {
        let report = duality_gap(&pure(&bar(2.0), 1, 5)).unwrap();
        assert_abs_diff_eq!(report.primal, -3.5, epsilon = 1e-12);
        assert_abs_diff_eq!(report.dual, -3.5, epsilon = 1e-12);
        assert!(report.gap.abs() <= 1e-12);
    }

    #[test]
    fn annulus_gaps_and_pairing_error() {
        let a = annulus();
        let branches: Vec<_> = (1..=3).map(|b| pure(&a, b, 128)).collect();
        for b in &branches {
            let r = duality_gap(b).unwrap();
            assert!(r.gap.abs() <= 1e-6 * r.dual.abs(), "{r:?}");
        }
        let mixed = energy_pair(&branches[0], &branches[1], 1e-10).unwrap();
        assert!(mixed.gap.abs() > 1e-2 * mixed.dual.abs(), "{mixed:?}");
    }

    #[test]
    fn polynomial_derivative() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.5, 3.0], 0.5, 1.5);
        let h = 1e-6;
        for r in [0.5, 0.8, 1.5] {
            let fd = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
            assert_abs_diff_eq!(p.derivative(r), fd, epsilon = 1e-7);
        }
        assert_eq!(p.value(0.5), 1.0);
    }

    #[test]
    fn perturbations_are_normalized_and_reproducible() {
        let a = annulus();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let phi = random_perturbation(&a, &mut rng);
        let norm = crate::numerics::integrate_adaptive(
            |r: f64| phi.derivative(r).powi(2) * a.measure(r),
            0.5,
            1.277,
            1e-12,
        )
        .unwrap()
        .value;
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        let b = bar(0.25);
        let phi = random_perturbation(&b, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(phi.value(0.0), 0.0);

        let branch = pure(&a, 1, 64);
        let first = perturbation_probe(&branch, 5, 1e-3, 11).unwrap();
        assert_eq!(first, perturbation_probe(&branch, 5, 1e-3, 11).unwrap());
    }

    #[test]
    fn stationarity_detects_non_critical_field() {
        // ū ≡ 0 on the bar with t = 2: δP[φ = x] = -t φ(1) = -2.
        let b = bar(2.0);
        let phi = Polynomial::new(vec![0.0, 1.0], 0.0, 1.0);
        let eps = 1e-6;
        let zero_field = |_: f64| Ok(0.0);
        let rule = GaussLegendre::new(8);
        let inc = |e: f64| {
            energy_increment(
                &b,
                &rule,
                zero_field,
                |r| phi.value(r),
                |r| phi.derivative(r),
                e,
                &[],
                1e-10,
            )
            .unwrap()
            .value
        };
        assert_abs_diff_eq!((inc(eps) - inc(-eps)) / (2.0 * eps), -2.0, epsilon = 1e-6);

        let branch = pure(&b, 1, 9);
        assert!(stationarity_probe(&branch, 3).unwrap() <= 1e-5 * 3.5);
    }

    #[test]
    fn report_json_shape() {
        let report = VerificationReport::new(vec![
            Check::at_most("x", 1.0, 2.0),
            Check::at_least("y", 0.0, 1.0),
        ]);
        assert!(!report.overall);
        let v: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(v["checks"][0]["name"], "x");
        assert_eq!(v["checks"][0]["pass"], true);
        assert_eq!(v["checks"][1]["pass"], false);
        assert_eq!(v["overall"], false);
    }

    #[test]
    fn suite_on_bar() {
        let report = run_suite(
            &bar(2.0),
            &SuiteOptions {
                nodes: 65,
                trials: 20,
                ..Default::default()
            },
        );
        assert!(report.overall, "{report:#?}");
        assert_eq!(report.check("branch_count").unwrap().value, 1.0);
    }

    #[test]
    fn corrupted_load_fails() {
        let p = AnnulusProblem::standard();
        let bad: Problem<f64> = p.with_tractions(p.t_inner, p.t_outer + 0.1).into();
        let report = run_suite(&bad, &SuiteOptions::default());
        assert!(!report.overall);
        let lb = report.check("load_balance").unwrap();
        assert!(!lb.pass);
        assert_abs_diff_eq!(
            lb.value,
            0.1 * std::f64::consts::TAU * 1.277,
            epsilon = 1e-12
        );
    }
}
