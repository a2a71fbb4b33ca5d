use distgap::construction::{strip_region, DistanceClass};
use distgap::harness::run_construct;
use distgap::nobonds::{estimate_mu_nu, estimate_unchecked, mu_scaling_survey, BondSpec};
use distgap::regions::Region;
use distgap::seed::Seed;
use distgap::spectrum::SpectrumConfig;
use std::f64::consts::PI;

/// Pair measure of two uniform points in the unit square at distance in
/// `[a, b)`, for `b <= 1`. The distance density there is
/// `2 pi r - 8 r^2 + 2 r^3`.
fn unit_square_pair_measure(a: f64, b: f64) -> f64 {
    let antiderivative = |r: f64| PI * r * r - 8.0 / 3.0 * r.powi(3) + 0.5 * r.powi(4);
    antiderivative(b) - antiderivative(a)
}

// nu for the unit square, density 5, bonds [0.4, 0.5), from a midpoint grid
// quadrature of m(x)^2 with m(x) integrated on a polar grid; two grids agree to 4e-4
const UNIT_SQUARE_NU: f64 = 1.30666;

#[test]
fn unit_square_mu_matches_closed_form() {
    let bond = BondSpec::new(0.4, 0.5).unwrap();
    let exact = 12.5 * unit_square_pair_measure(0.4, 0.5);
    assert!((exact - 1.73158).abs() < 1e-5);
    let est = estimate_mu_nu(&Region::unit_square(), 5.0, &bond, 200_000, &Seed::new(21)).unwrap();
    assert!(
        (est.mu - exact).abs() <= 4.0 * est.mu_stderr,
        "mu {} +- {} vs {exact}",
        est.mu,
        est.mu_stderr
    );
    let nu_tol = 4.0 * est.nu_stderr + 1e-3 * UNIT_SQUARE_NU;
    assert!(
        (est.nu - UNIT_SQUARE_NU).abs() <= nu_tol,
        "nu {} +- {}",
        est.nu,
        est.nu_stderr
    );
}

#[test]
fn density_scales_mu_quadratically_and_nu_cubically() {
    let sq = Region::unit_square();
    let bond = BondSpec::new(0.2, 0.6).unwrap();
    let seed = Seed::new(8);
    let a = estimate_mu_nu(&sq, 5.0, &bond, 50_000, &seed).unwrap();
    let b = estimate_mu_nu(&sq, 10.0, &bond, 50_000, &seed).unwrap();
    assert!((b.mu / a.mu - 4.0).abs() < 1e-12);
    assert!((b.nu / a.nu - 8.0).abs() < 1e-12);
}

#[test]
fn unreachable_bonds_give_zero() {
    let est = estimate_mu_nu(
        &Region::disk(0.4).unwrap(),
        10.0,
        &BondSpec::new(1.0, 2.0).unwrap(),
        20_000,
        &Seed::new(2),
    )
    .unwrap();
    assert_eq!((est.mu, est.nu, est.mu_stderr), (0.0, 0.0, 0.0));
}

#[test]
fn stderr_halves_when_samples_quadruple() {
    let sq = Region::unit_square();
    let bond = BondSpec::new(0.4, 0.5).unwrap();
    let small = estimate_unchecked(&sq, 5.0, &bond, 50_000, &Seed::new(4)).unwrap();
    let big = estimate_unchecked(&sq, 5.0, &bond, 200_000, &Seed::new(5)).unwrap();
    let ratio = small.mu_stderr / big.mu_stderr;
    assert!((ratio - 2.0).abs() <= 0.3 * 2.0, "ratio {ratio}");
}

#[test]
fn estimate_is_thread_invariant() {
    let region = strip_region(1_000_000);
    let bond = BondSpec::new(50.0, 50.0625).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_unchecked(&region, 1e-3, &bond, 40_000, &Seed::new(7)).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn moderate_bond_count_ratio_is_pinned() {
    // mu(100, 4) = 70.265 at n = 1e6, eps = 1e-3, i.e. 11.2424 times the order term
    let rows = mu_scaling_survey(
        1_000_000,
        1e-3,
        DistanceClass::Moderate,
        &[(100, 4)],
        200_000,
        &Seed::new(31),
    )
    .unwrap();
    let c = 11.2424;
    assert!(
        rows[0].ratio >= c * 0.99 && rows[0].ratio <= c * 1.01,
        "ratio {}",
        rows[0].ratio
    );
    assert!(rows[0].mu_stderr / rows[0].mu < 0.003);
}

#[test]
fn construct_is_deterministic_across_thread_counts() {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                run_construct(100_000, 1e-3, 42, &SpectrumConfig::default())
                    .unwrap()
                    .without_timing()
            })
    };
    let one = run(1);
    assert_eq!(run(4), one);
    assert!(one.eq7_holds);
}
