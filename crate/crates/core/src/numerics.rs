//! Quadrature, grids and finite differences.
//!
//! Everything here is deterministic: panel subdivision is uniform doubling and
//! all sums run in ascending node order, so repeated evaluations are
//! bit-identical.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default Gauss-Legendre order for composite rules.
pub const DEFAULT_ORDER: usize = 8;
/// Default relative tolerance for [`integrate_adaptive`].
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Default node count for uniform radial grids.
pub const DEFAULT_NODES: usize = 512;
/// Maximum number of panel doublings before giving up.
pub const MAX_DOUBLINGS: u32 = 20;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<S> {
    pub value: S,
    /// Difference between the last two composite evaluations.
    pub error_estimate: S,
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<S> {
    nodes: Vec<S>,
    weights: Vec<S>,
}

impl<S: Real> GaussLegendre<S> {
    /// Builds the `order`-point rule by Newton iteration on the Legendre polynomial.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self {
            nodes: nodes.into_iter().map(S::lit).collect(),
            weights: weights.into_iter().map(S::lit).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[S] {
        &self.nodes
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Composite rule with `panels` equal panels. Returns `(∫f, ∫|f|)`.
    pub fn composite<F>(&self, f: &mut F, a: S, b: S, panels: usize) -> Result<(S, S)>
    where
        F: FnMut(S) -> Result<S>,
    {
        let width = (b - a) / S::lit(panels as f64);
        let half = width / S::lit(2.0);
        let mut sum = S::zero();
        let mut abs_sum = S::zero();
        for k in 0..panels {
            let left = a + width * S::lit(k as f64);
            let mid = left + half;
            let mut panel = S::zero();
            let mut panel_abs = S::zero();
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let y = f(mid + half * *x)?;
                panel = panel + *w * y;
                panel_abs = panel_abs + *w * y.abs();
            }
            sum = sum + panel * half;
            abs_sum = abs_sum + panel_abs * half;
        }
        Ok((sum, abs_sum))
    }

    /// Panel doubling until successive composite values agree to `rel_tol`.
    pub fn integrate_adaptive_try<F>(
        &self,
        mut f: F,
        a: S,
        b: S,
        rel_tol: S,
    ) -> Result<Quadrature<S>>
    where
        F: FnMut(S) -> Result<S>,
    {
        if !(a < b) || !rel_tol.is_finite() || rel_tol <= S::zero() {
            return Err(Error::InvalidInterval {
                a: a.to_f64_lossy(),
                b: b.to_f64_lossy(),
            });
        }
        let roundoff = S::lit(64.0) * S::epsilon();
        let (mut previous, _) = self.composite(&mut f, a, b, 1)?;
        let mut difference = S::infinity();
        for doubling in 1..=MAX_DOUBLINGS {
            let (current, scale) = self.composite(&mut f, a, b, 1 << doubling)?;
            difference = (current - previous).abs();
            if !current.is_finite() {
                break;
            }
            if difference <= rel_tol * current.abs() || difference <= roundoff * scale {
                return Ok(Quadrature {
                    value: current,
                    error_estimate: difference,
                });
            }
            previous = current;
        }
        Err(Error::Convergence {
            doublings: MAX_DOUBLINGS,
            difference: difference.to_f64_lossy(),
        })
    }

    /// Adaptive integration over `[a, b]` split at the interior `breaks`.
    ///
    /// Each piece is integrated independently so jumps in the integrand at the
    /// break points do not stall convergence.
    pub fn integrate_piecewise_try<F>(
        &self,
        mut f: F,
        a: S,
        b: S,
        breaks: &[S],
        rel_tol: S,
    ) -> Result<Quadrature<S>>
    where
        F: FnMut(S) -> Result<S>,
    {
        let mut value = S::zero();
        let mut error_estimate = S::zero();
        let mut left = a;
        let interior = breaks.iter().copied().filter(|&x| x > a && x < b);
        for right in interior.chain(std::iter::once(b)) {
            if right > left {
                let q = self.integrate_adaptive_try(&mut f, left, right, rel_tol)?;
                value = value + q.value;
                error_estimate = error_estimate + q.error_estimate;
            }
            left = right;
        }
        Ok(Quadrature {
            value,
            error_estimate,
        })
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss-Legendre of order [`DEFAULT_ORDER`] with panel doubling.
///
/// Stops when two successive values differ by at most `rel_tol` relative to the
/// latest value (or by a round-off floor relative to `∫|f|`). Returns the last
/// value and the last difference.
pub fn integrate_adaptive<S, F>(mut f: F, a: S, b: S, rel_tol: S) -> Result<Quadrature<S>>
where
    S: Real,
    F: FnMut(S) -> S,
{
    GaussLegendre::new(DEFAULT_ORDER).integrate_adaptive_try(|x| Ok(f(x)), a, b, rel_tol)
}

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn finite_diff<S, F>(mut f: F, x: S, h: S) -> S
where
    S: Real,
    F: FnMut(S) -> S,
{
    (f(x + h) - f(x - h)) / (h + h)
}

/// Strictly increasing nodes on `[r_min, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<S> {
    nodes: Vec<S>,
}

impl<S: Real> RadialGrid<S> {
    /// Uniform grid with `n` nodes including both endpoints.
    pub fn uniform(r_min: S, r_max: S, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        if !(r_min < r_max) || !r_min.is_finite() || !r_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "degenerate interval [{r_min}, {r_max}]"
            )));
        }
        let step = (r_max - r_min) / S::lit((n - 1) as f64);
        let mut nodes: Vec<S> = (0..n).map(|i| r_min + step * S::lit(i as f64)).collect();
        nodes[n - 1] = r_max;
        Ok(Self { nodes })
    }

    /// Grid from explicit nodes, which must be finite and strictly increasing.
    pub fn from_nodes(nodes: Vec<S>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node".into()));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidGrid(
                "nodes must be strictly increasing".into(),
            ));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[S] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> S {
        self.nodes[0]
    }

    pub fn r_max(&self) -> S {
        self.nodes[self.nodes.len() - 1]
    }

    /// Grid with every interval bisected (`2n - 1` nodes).
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push((w[0] + w[1]) / S::lit(2.0));
        }
        nodes.push(self.r_max());
        Self { nodes }
    }

    /// Index `i` of the interval `[nodes[i], nodes[i+1]]` containing `r`
    /// (clamped to the first/last interval).
    pub fn interval_of(&self, r: S) -> usize {
        let last = self.nodes.len() - 2;
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&r).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(last),
            Err(0) => 0,
            Err(i) => (i - 1).min(last),
        }
    }
}

/// Uniform grid of `n` nodes on `[r_min, r_max]`.
pub fn make_radial_grid<S: Real>(r_min: S, r_max: S, n: usize) -> Result<RadialGrid<S>> {
    RadialGrid::uniform(r_min, r_max, n)
}

/// Quadrature of nodal samples by piecewise quadratic interpolation
/// (composite Simpson on non-uniform nodes; the last interval of an odd
/// interval count is closed with the quadratic through the last three nodes).
pub fn integrate_nodal<S: Real>(xs: &[S], ys: &[S]) -> S {
    assert_eq!(xs.len(), ys.len(), "node and value counts differ");
    let n = xs.len();
    if n < 2 {
        return S::zero();
    }
    if n == 2 {
        return (xs[1] - xs[0]) * (ys[0] + ys[1]) / S::lit(2.0);
    }
    let six = S::lit(6.0);
    let two = S::lit(2.0);
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut sum = S::zero();
    let mut i = 0;
    while i < paired {
        let h0 = xs[i + 1] - xs[i];
        let h1 = xs[i + 2] - xs[i + 1];
        let hs = h0 + h1;
        sum = sum
            + hs / six
                * ((two - h1 / h0) * ys[i]
                    + hs * hs / (h0 * h1) * ys[i + 1]
                    + (two - h0 / h1) * ys[i + 2]);
        i += 2;
    }
    if intervals % 2 == 1 {
        let h0 = xs[n - 2] - xs[n - 3];
        let h1 = xs[n - 1] - xs[n - 2];
        let three = S::lit(3.0);
        sum = sum
            + ys[n - 1] * (two * h1 * h1 + three * h0 * h1) / (six * (h0 + h1))
            + ys[n - 2] * (h1 * h1 + three * h0 * h1) / (six * h0)
            - ys[n - 3] * h1 * h1 * h1 / (six * h0 * (h0 + h1));
    }
    sum
}

/// Weights of the first-derivative stencil at `z` over the nodes `xs`
/// (Fornberg's recursion).
pub fn derivative_weights<S: Real>(z: S, xs: &[S]) -> Vec<S> {
    let n = xs.len();
    // c[j][k]: weight of node j for derivative order k (k = 0, 1).
    let mut c = vec![[S::zero(); 2]; n];
    let mut c1 = S::one();
    let mut c4 = xs[0] - z;
    c[0][0] = S::one();
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = S::one();
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (S::lit(k as f64) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - S::lit(k as f64) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// First derivative of nodal data with five-point stencils (fourth order),
/// shifted to one-sided stencils at the ends. Falls back to all nodes when
/// fewer than five are available.
pub fn nodal_derivative<S: Real>(xs: &[S], ys: &[S]) -> Vec<S> {
    assert_eq!(xs.len(), ys.len(), "node and value counts differ");
    let n = xs.len();
    let width = n.min(5);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let stencil = &xs[start..start + width];
            derivative_weights(xs[i], stencil)
                .into_iter()
                .zip(&ys[start..start + width])
                .fold(S::zero(), |acc, (w, y)| acc + w * *y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn adaptive_polynomial_and_trig() {
        let q = integrate_adaptive(|x: f64| x * x, 0.0, 1.0, 1e-10).unwrap();
        assert!((q.value - 1.0 / 3.0).abs() <= 1e-12);
        let q = integrate_adaptive(f64::sin, 0.0, std::f64::consts::PI, 1e-10).unwrap();
        assert!((q.value - 2.0).abs() <= 1e-12);
        let q = integrate_adaptive(|_| 1.0f64, 0.0, 1.0, 1e-10).unwrap();
        assert_eq!(q.value, 1.0);
    }

    #[test]
    fn single_panel_of_constant_is_exact() {
        let rule = GaussLegendre::<f64>::new(DEFAULT_ORDER);
        let (v, _) = rule.composite(&mut |_| Ok(1.0), 0.0, 1.0, 1).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn gauss_legendre_exact_to_degree_2k_minus_1() {
        for order in [2usize, 4, 8, 12] {
            let rule = GaussLegendre::<f64>::new(order);
            let weight_sum: f64 = rule.weights().iter().sum();
            assert_relative_eq!(weight_sum, 2.0, max_relative = 1e-14);
            for degree in 0..2 * order {
                let (v, _) = rule
                    .composite(&mut |x: f64| Ok(x.powi(degree as i32)), 0.0, 1.0, 1)
                    .unwrap();
                let exact = 1.0 / (degree as f64 + 1.0);
                assert!(
                    ((v - exact) / exact).abs() <= 1e-13,
                    "order {order} degree {degree}: {v} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn oscillatory_zero_integral_converges() {
        let q = integrate_adaptive(f64::sin, 0.0, 2.0 * std::f64::consts::PI, 1e-10).unwrap();
        assert!(q.value.abs() < 1e-13);
    }

    #[test]
    fn adaptive_rejects_empty_interval() {
        assert!(matches!(
            integrate_adaptive(|x: f64| x, 1.0, 1.0, 1e-10),
            Err(Error::InvalidInterval { .. })
        ));
    }

    #[test]
    fn adaptive_reports_non_convergence() {
        let r = integrate_adaptive(|x: f64| 1.0 / x.abs().sqrt(), -1.0, 1.0, 1e-14);
        assert!(matches!(r, Err(Error::Convergence { .. })));
    }

    #[test]
    fn piecewise_handles_jump() {
        let rule = GaussLegendre::<f64>::new(DEFAULT_ORDER);
        let q = rule
            .integrate_piecewise_try(
                |x| Ok(if x < 0.3 { 1.0 } else { 2.0 }),
                0.0,
                1.0,
                &[0.3],
                1e-12,
            )
            .unwrap();
        assert_relative_eq!(q.value, 1.7, max_relative = 1e-14);
    }

    #[test]
    fn central_difference_examples() {
        assert!((finite_diff(|x: f64| x * x, 1.0, 1e-5) - 2.0).abs() <= 1e-9);
        assert_eq!(finite_diff(|_x: f64| 3.0, 0.7, 1e-3), 0.0);
        assert!((finite_diff(f64::sin, 0.0, 1e-5) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn central_difference_is_second_order() {
        let exact = 1.2f64.exp() * 1.2f64.cos() - 1.2f64.exp() * 1.2f64.sin();
        let f = |x: f64| x.exp() * x.cos();
        for h in [0.1, 0.05, 0.025] {
            let e1 = (finite_diff(f, 1.2, h) - exact).abs();
            let e2 = (finite_diff(f, 1.2, h / 2.0) - exact).abs();
            let ratio = e1 / e2;
            assert!((3.5..=4.5).contains(&ratio), "h = {h}: ratio {ratio}");
        }
    }

    #[test]
    fn grid_examples() {
        let g = make_radial_grid(0.5, 1.277, 2).unwrap();
        assert_eq!(g.nodes(), &[0.5, 1.277]);
        let g = make_radial_grid(0.0, 1.0, 3).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0]);
        assert!(make_radial_grid(1.0, 1.0, 4).is_err());
        assert!(make_radial_grid(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn grid_refinement_and_lookup() {
        let g = make_radial_grid(0.0, 1.0, 5).unwrap();
        let r = g.refined();
        assert_eq!(r.len(), 9);
        assert_eq!(r.nodes()[1], 0.125);
        assert_eq!(g.interval_of(0.0), 0);
        assert_eq!(g.interval_of(0.3), 1);
        assert_eq!(g.interval_of(0.5), 2);
        assert_eq!(g.interval_of(1.0), 3);
        assert!(RadialGrid::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn nodal_quadrature_exact_for_quadratics() {
        for n in [3usize, 4, 7, 10] {
            let xs: Vec<f64> = (0..n)
                .map(|i| (i as f64 / (n - 1) as f64).powf(1.3))
                .collect();
            let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
            assert_relative_eq!(integrate_nodal(&xs, &ys), 2.5, max_relative = 1e-13);
        }
        assert_relative_eq!(integrate_nodal(&[0.0, 1.0], &[0.0, 2.0]), 1.0);
    }

    #[test]
    fn nodal_derivative_exact_for_quartics() {
        let xs: Vec<f64> = (0..9)
            .map(|i| 0.5 + 0.1 * i as f64 + 0.01 * (i * i) as f64)
            .collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(4) - 2.0 * x.powi(3) + x).collect();
        let d = nodal_derivative(&xs, &ys);
        for (x, dy) in xs.iter().zip(d) {
            let exact = 4.0 * x.powi(3) - 6.0 * x * x + 1.0;
            assert!((dy - exact).abs() < 1e-10, "{x}: {dy} vs {exact}");
        }
    }
}
