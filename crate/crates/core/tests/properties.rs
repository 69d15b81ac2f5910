use proptest::prelude::*;

use dualwell::cli::{format_sig, SweepRow, SweepTable};
use dualwell::energy::{canonical_energy, complementary_energy, legendre_pair, CanonicalStrain};
use dualwell::numerics::integrate_nodal;
use dualwell::verify::shift_increment;
use dualwell::{
    cardano_roots, dae_residual, duality_gap, integrate_adaptive, make_radial_grid,
    sigma_threshold, solve_branch, solve_dae, trig_roots, AnnulusProblem, BranchMap, Material,
    Problem, StressSample, DEFAULT_REGIME_TOL,
};

fn material() -> impl Strategy<Value = Material> {
    (0.2f64..5.0, 0.2f64..5.0).prop_map(|(nu, lambda)| Material::new(nu, lambda).unwrap())
}

fn scale(s: f64, z: f64, m: &Material) -> f64 {
    s.max(2.0 * z * z * m.lambda())
        .max(2.0 * z.abs().powi(3) / m.nu())
        .max(1.0)
}

proptest! {
    #[test]
    fn roots_are_ordered_and_solve_the_cubic(m in material(), frac in 0.0f64..4.0) {
        let s = frac * sigma_threshold(&m);
        let sample = StressSample::new(s).unwrap();
        let roots = solve_dae(sample, &m, DEFAULT_REGIME_TOL);
        prop_assert!(roots.is_ordered(&m, 1e-12));
        prop_assert!(roots.count() == 1 || roots.count() == 3);
        for z in roots.roots() {
            prop_assert!(dae_residual(z, sample, &m).abs() <= 1e-12 * scale(s, z, &m));
        }
    }

    #[test]
    fn first_root_grows_with_stress(m in material(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let thr = sigma_threshold(&m);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let z = |f: f64| solve_dae(StressSample::new(f * thr).unwrap(), &m, DEFAULT_REGIME_TOL).zeta1.unwrap();
        prop_assert!(z(lo) <= z(hi) + 1e-14 * m.scale());
    }

    #[test]
    fn cardano_matches_trigonometric(m in material(), frac in 1e-6f64..(1.0 - 1e-6)) {
        let sample = StressSample::new(frac * sigma_threshold(&m)).unwrap();
        let trig = trig_roots(sample, &m).unwrap();
        let mut cardano: Vec<f64> = cardano_roots(sample, &m).iter().map(|c| c.re).collect();
        cardano.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (c, t) in cardano.iter().zip(trig.roots()) {
            prop_assert!((c - t).abs() <= 1e-9 * m.scale(), "{} vs {}", c, t);
        }
    }

    #[test]
    fn single_precision_tracks_double(frac in 0.0f64..4.0) {
        let s = frac * 8.0 / 27.0;
        let r64 = solve_dae(StressSample::new(s).unwrap(), &Material::unit(), 1e-12);
        let m32 = dualwell::dae::Material::<f32>::unit();
        let r32 = solve_dae(dualwell::dae::StressSample::new(s as f32).unwrap(), &m32, 1e-6);
        prop_assert!((r64.zeta1.unwrap() - r32.zeta1.unwrap() as f64).abs() <= 1e-3);
    }

    #[test]
    fn legendre_identity(m in material(), xi in 0.0f64..10.0) {
        let pair = legendre_pair(CanonicalStrain::new(xi).unwrap(), &m);
        let size = 1.0 + pair.u.abs() + pair.u_star.abs();
        prop_assert!((pair.u + pair.u_star - xi * pair.zeta).abs() <= 1e-12 * size);
        let h = 1e-5;
        let slope = (canonical_energy(xi + h, &m) - canonical_energy(xi - h, &m)) / (2.0 * h);
        prop_assert!((slope - pair.zeta).abs() <= 1e-6 * size);
        let inverse = (complementary_energy(pair.zeta + h, &m) - complementary_energy(pair.zeta - h, &m)) / (2.0 * h);
        prop_assert!((inverse - xi).abs() <= 1e-6 * size);
    }

    #[test]
    fn csv_round_trip(values in prop::collection::vec((-1e6f64..1e6, prop::option::of(-1e3f64..1e3)), 0..20)) {
        let rows: Vec<SweepRow> = values
            .iter()
            .enumerate()
            .map(|(i, &(v, opt))| SweepRow {
                r: 0.5 + i as f64 * 0.01,
                zeta: [Some(v), opt, None],
                u: [opt, Some(v * 1e-9), None],
            })
            .collect();
        let table = SweepTable { rows };
        let back = SweepTable::from_csv(&table.to_csv().unwrap()).unwrap();
        prop_assert_eq!(back.rows.len(), table.rows.len());
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs() <= 5e-12 * a.abs(),
            (None, None) => true,
            _ => false,
        };
        for (x, y) in table.rows.iter().zip(&back.rows) {
            prop_assert!(close(Some(x.r), Some(y.r)));
            for k in 0..3 {
                prop_assert!(close(x.zeta[k], y.zeta[k]));
                prop_assert!(close(x.u[k], y.u[k]));
            }
        }
    }

    #[test]
    fn format_keeps_twelve_digits(x in -1e12f64..1e12) {
        let text = format_sig(x);
        let y: f64 = text.parse().unwrap();
        prop_assert!((x - y).abs() <= 5e-12 * x.abs());
        prop_assert_eq!(format_sig(y), text);
    }

    #[test]
    fn adaptive_quadrature_integrates_polynomials(c in prop::collection::vec(-3.0f64..3.0, 1..8), a in -2.0f64..0.0, w in 0.1f64..3.0) {
        let b = a + w;
        let f = |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
        let exact: f64 = c.iter().enumerate().map(|(k, ck)| ck * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k as f64 + 1.0)).sum();
        let q = integrate_adaptive(f, a, b, 1e-12).unwrap();
        prop_assert!((q.value - exact).abs() <= 1e-11 * (1.0 + exact.abs()));
    }

    #[test]
    fn nodal_quadrature_converges(n in 20usize..200) {
        let grid = make_radial_grid(0.0f64, 1.0, n).unwrap();
        let ys: Vec<f64> = grid.nodes().iter().map(|x| x.exp()).collect();
        let err = (integrate_nodal(grid.nodes(), &ys) - (1f64.exp() - 1.0)).abs();
        prop_assert!(err <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gap_and_shift_on_random_annuli(r1 in 0.3f64..0.8, width in 0.2f64..0.5, nu in 0.5f64..2.0, lambda in 0.5f64..2.0) {
        let m = Material::new(nu, lambda).unwrap();
        let problem: Problem = AnnulusProblem::new(r1, r1 + width, m).unwrap().into();
        let grid = make_radial_grid(r1, r1 + width, 128).unwrap();
        let sol = solve_branch(&problem, &BranchMap::pure(1, r1, r1 + width), &grid).unwrap();
        let report = duality_gap(&sol).unwrap();
        prop_assert!(report.gap.abs() <= 1e-8 * report.dual.abs().max(1e-3));
        for c in [-3.0, 0.5, 7.0] {
            prop_assert!(shift_increment(&sol, c).unwrap().abs() <= 1e-10 * report.primal.abs().max(1e-3));
        }
    }
}
