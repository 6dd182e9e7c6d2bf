use affmf::cones::find_invariant_multicone;
use affmf::geometry::{check_projective_strong_separation, check_strong_separation};
use affmf::pressure::{
    pressure_estimate, pressure_value, PotentialKind, PressureOptions, DEFAULT_BUDGET,
};
use affmf::spectrum::{solve_sq, spectrum_table, tau, uniform_grid, SpectrumContext, TableOptions};
use affmf::systems::{self, ReferenceSystem};
use affmf::{AffineIFS, Bernoulli, Mat2, PotentialSpec, Vec2, Verdict};
use proptest::prelude::*;

fn positive_matrix() -> impl Strategy<Value = Mat2> {
    (0.05..0.35f64, 0.01..0.2f64, 0.01..0.2f64, 0.05..0.35f64)
        .prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d))
}

fn positive_system() -> impl Strategy<Value = (AffineIFS, Bernoulli)> {
    (positive_matrix(), positive_matrix(), 0.2..0.8f64).prop_map(|(a, b, p)| {
        let ifs = AffineIFS::new(vec![a, b], vec![Vec2::ZERO, Vec2::new(0.5, 0.5)]).unwrap();
        (ifs, Bernoulli::new(vec![p, 1.0 - p]).unwrap())
    })
}

fn p(spec: &PotentialSpec, n: usize) -> f64 {
    pressure_value(spec, n, DEFAULT_BUDGET).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fekete_monotonicity((ifs, mu) in positive_system(), s in 0.0..3.0f64, q in 0.0..0.95f64) {
        // φ^s is sub-multiplicative, so is μ^q (φ^s)^{1−q} for q < 1
        for spec in [PotentialSpec::svf(&ifs, s).unwrap(), PotentialSpec::psi(&ifs, &mu, q, s).unwrap()] {
            for n in [2, 3, 4, 5] {
                prop_assert!(p(&spec, 2 * n) <= p(&spec, n) + 1e-12);
            }
        }
    }

    #[test]
    fn strictly_monotone_in_s_with_flip_at_one((ifs, mu) in positive_system(), q in prop::sample::select(vec![0.3, 0.7, 1.5, 3.0])) {
        let values: Vec<f64> = (0..=12)
            .map(|k| p(&PotentialSpec::psi(&ifs, &mu, q, 0.25 * k as f64).unwrap(), 6))
            .collect();
        for w in values.windows(2) {
            if q < 1.0 {
                prop_assert!(w[1] < w[0]);
            } else {
                prop_assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn midpoint_convexity((ifs, mu) in positive_system(), q in 0.1..4.0f64) {
        // s on each regime interval, q on a fixed grid
        for (lo, hi) in [(0.05, 0.95), (1.05, 1.95), (2.1, 3.5)] {
            let f = |s: f64| p(&PotentialSpec::psi(&ifs, &mu, q, s).unwrap(), 6);
            let m = 0.5 * (lo + hi);
            prop_assert!(f(m) <= 0.5 * (f(lo) + f(hi)) + 1e-10);
        }
        for s in [0.5, 1.5, 2.5] {
            let g = |q: f64| p(&PotentialSpec::psi(&ifs, &mu, q, s).unwrap(), 6);
            prop_assert!(g(q) <= 0.5 * (g(q - 0.1) + g(q + 0.1)) + 1e-10);
        }
    }

    #[test]
    fn svf_pressure_is_continuous_across_seams((ifs, _mu) in positive_system(), seam in prop::sample::select(vec![1.0, 2.0])) {
        let below = p(&PotentialSpec::svf(&ifs, seam - 1e-9).unwrap(), 6);
        let at = p(&PotentialSpec::svf(&ifs, seam).unwrap(), 6);
        prop_assert!((below - at).abs() < 1e-7);
    }
}

#[test]
fn brackets_contain_closed_form() {
    let d2 = systems::d2();
    let (a, b): ([f64; 2], [f64; 2]) = ([0.5, 0.3], [0.2, 0.25]);
    for &(q, s) in &[(0.5, 0.4), (2.0, 1.3), (0.3, 1.7)] {
        let exact = if s < 1.0 {
            (0..2)
                .map(|i| d2.mu.probs()[i].powf(q) * a[i].powf(s * (1.0 - q)))
                .sum::<f64>()
                .ln()
        } else {
            (0..2)
                .map(|i| d2.mu.probs()[i].powf(q) * (a[i] * b[i].powf(s - 1.0)).powf(1.0 - q))
                .sum::<f64>()
                .ln()
        };
        let spec = PotentialSpec::psi(&d2.ifs, &d2.mu, q, s).unwrap();
        for n in 1..=10 {
            let est = pressure_estimate(&spec, n, &PressureOptions::default()).unwrap();
            assert!(
                est.lower - 1e-12 <= exact && exact <= est.upper + 1e-12,
                "q={q} s={s} n={n}"
            );
        }
    }
}

#[test]
fn pressure_is_identical_across_thread_counts() {
    let p1 = systems::p1();
    let spec = PotentialSpec::new(
        &p1.ifs,
        Some(&p1.mu),
        PotentialKind::SvfTimesAlphaKappa {
            m: 2,
            kappa: 0.5,
            q: 0.7,
            s: 1.3,
        },
    )
    .unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| pressure_value(&spec, 14, DEFAULT_BUDGET).unwrap())
    };
    let one = run(1);
    assert_eq!(one.to_bits(), run(1).to_bits());
    for t in [2, 3, 8] {
        assert_eq!(one.to_bits(), run(t).to_bits(), "threads={t}");
    }
}

#[test]
fn tau_is_concave_and_vanishes_at_one() {
    let d2 = systems::d2();
    let ctx = SpectrumContext::new(&d2.ifs, &d2.mu);
    let grid: Vec<f64> = (1..=16)
        .map(|k| 0.25 * k as f64)
        .filter(|q| *q != 1.0)
        .collect();
    let taus: Vec<f64> = grid
        .iter()
        .map(|&q| tau(&ctx, q, 8, 1e-13).unwrap())
        .collect();
    // uniform sub-grids on either side of the excluded point
    for side in [&taus[..3], &taus[3..]] {
        for w in side.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-8);
        }
    }
    let s_max = grid
        .iter()
        .map(|&q| solve_sq(&ctx, q, 8, 1e-13).unwrap())
        .fold(0.0, f64::max);
    for delta in [0.05, 0.02] {
        for q in [1.0 - delta, 1.0 + delta] {
            assert!(tau(&ctx, q, 8, 1e-13).unwrap().abs() <= delta * s_max);
        }
    }
}

#[test]
fn table_reports_routes_and_ordering_on_p1() {
    let p1 = systems::p1();
    let ctx = SpectrumContext::new(&p1.ifs, &p1.mu);
    let opts = TableOptions {
        depth: 8,
        ..TableOptions::default()
    };
    let table = spectrum_table(&ctx, &uniform_grid(0.25, 3.0, 12), &opts).unwrap();
    assert!(table.concavity.concave);
    for pt in table.points.iter().filter(|p| p.regimes_match) {
        let (fd, formula) = (pt.tau_prime_fd.unwrap(), pt.tau_prime_formula.unwrap());
        assert!((fd - formula).abs() <= 1e-3, "q={}", pt.q);
        assert_eq!(pt.ordering_ok, Some(true));
    }
}

fn separation_verdicts(sys: &ReferenceSystem) -> (Verdict, Verdict) {
    let ssc = check_strong_separation(&sys.ifs, 8).unwrap().satisfied;
    let report = find_invariant_multicone(&sys.ifs, 8, 64);
    let pssc = match report.multicone {
        Some(cone) => {
            let cover = affmf::cones::furstenberg_cover(&sys.ifs, &cone, 12).unwrap();
            check_projective_strong_separation(&sys.ifs, &cover, 8)
                .unwrap()
                .satisfied
        }
        None => Verdict::Inconclusive,
    };
    (ssc, pssc)
}

#[test]
fn projective_separation_implies_separation() {
    for sys in [
        systems::d2(),
        systems::d2_carpet(),
        systems::d2_zero_translation(),
        systems::p1(),
        systems::equal_maps(),
    ] {
        let (ssc, pssc) = separation_verdicts(&sys);
        if pssc == Verdict::Yes {
            assert_eq!(ssc, Verdict::Yes, "{}", sys.name);
        }
    }
}
