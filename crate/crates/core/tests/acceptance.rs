//! Acceptance suite. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line; the process fails if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use distgap::canonical::{audit_eq7, largest_canonical_subinterval};
use distgap::construction::{assemble, build_p1, build_p2, build_p3, DistanceClass, Source};
use distgap::grid::min_distance_brute;
use distgap::harness::{run_scaling, RunRecord, ScalingFit, DEFAULT_GRID, SCALING_MEMORY_BUDGET};
use distgap::nobonds::{
    check_nobonds, empirical_no_bond_prob, estimate_mu_nu, janson_survey, mu_scaling_survey, BondSpec,
};
use distgap::regions::{circle_radius, Point, Region};
use distgap::seed::Seed;
use distgap::spectrum::{DistanceSpectrum, SpectrumConfig};
use rand::Rng;

const EPSILON: f64 = 1e-3;
const SEEDS_PER_N: u64 = 3;

// criterion 1
const SLOPE_RANGE: (f64, f64) = (-1.01, -0.71);
const MIN_R_SQUARED: f64 = 0.95;
// criterion 3
const MIN_DISTANCE: f64 = 1.0 - 1e-12;
// criterion 4
const P3_N: u64 = 1_000_000;
const P3_MAX_SPACING: f64 = 15.0;
const P3_MAX_GAP_SUM: f64 = 45.0;
// criterion 5
const SUBINTERVAL_TRIALS: usize = 100_000;
const SUBINTERVAL_MAX_J: u64 = 20_000;
// criterion 6
const SYNTHETIC_SPECTRA: u64 = 100;
// criterion 7
const JANSON_INSTANCES: usize = 1000;
const JANSON_MAX_GROUND_SET: usize = 12;
const JANSON_MAX_P: f64 = 0.3;
// criterion 8
const NOBONDS_TRIALS: u64 = 10_000;
const NOBONDS_SAMPLES: u64 = 1_000_000;
// criterion 9
const SURVEY_N: u64 = 1_000_000;
const SURVEY_SAMPLES: u64 = 1_000_000;
const MODERATE_TOL: f64 = 0.20;
const LARGE_TOL: f64 = 0.25;
// criterion 10
const MAX_TOP_SLOPE: f64 = 1.7;
// criterion 11
const DELETION_N: u64 = 1_000_000;
const DELETION_SEEDS: u64 = 20;
const MAX_DELETED_FRACTION: f64 = 0.01;

struct Sweep {
    fit: ScalingFit,
    records: Vec<RunRecord>,
}

fn sweep() -> distgap::Result<Sweep> {
    let cfg = SpectrumConfig::default().with_memory_budget(SCALING_MEMORY_BUDGET);
    let (fit, records) = run_scaling(&DEFAULT_GRID, SEEDS_PER_N, EPSILON, 0, &cfg, |r| {
        eprintln!(
            "    sweep n={} seed={} N={} gap_sum_sq={:.6e} ({} ms)",
            r.n_param, r.seed, r.realized_points, r.gap_sum_sq, r.elapsed_ms
        )
    })?;
    Ok(Sweep { fit, records })
}

fn scaling_exponent(s: &Sweep) -> (bool, String) {
    let f = &s.fit;
    let ok = f.slope >= SLOPE_RANGE.0 && f.slope <= SLOPE_RANGE.1 && f.r_squared >= MIN_R_SQUARED;
    (
        ok,
        format!(
            "slope {:.4} (want [{}, {}]), r^2 {:.4}; slope vs realized points {:.4}{}",
            f.slope,
            SLOPE_RANGE.0,
            SLOPE_RANGE.1,
            f.r_squared,
            f.slope_realized,
            if f.slope_discrepancy_flagged {
                " [flagged: slopes differ by > 0.1]"
            } else {
                ""
            }
        ),
    )
}

fn instancewise_lower_bound(s: &Sweep) -> (bool, String) {
    let mut worst = f64::INFINITY;
    let mut bad = 0;
    for r in &s.records {
        let bound = r.lower_bound().expect("record has >= 2 distances");
        worst = worst.min(r.gap_sum_sq / bound);
        if r.gap_sum_sq < bound {
            bad += 1;
        }
    }
    (
        bad == 0,
        format!(
            "{bad} of {} runs below the bound; smallest ratio {worst:.3}",
            s.records.len()
        ),
    )
}

fn minimum_distance(s: &Sweep) -> (bool, String) {
    let c = assemble(100_000, EPSILON, &Seed::new(0)).expect("assemble");
    let brute = min_distance_brute(&c.raw_points()).expect("points");
    let spectrum_min = s.records.iter().map(|r| r.d_min).fold(f64::INFINITY, f64::min);
    (
        brute >= MIN_DISTANCE && spectrum_min >= MIN_DISTANCE,
        format!("exhaustive min at n=1e5: {brute:.6}; min over all sweep spectra: {spectrum_min:.6}"),
    )
}

fn p3_claims() -> (bool, String) {
    let n = P3_N;
    let p3: Vec<_> = build_p3(n).expect("p3");
    let pts: Vec<Point> = p3.iter().map(|p| p.point).collect();
    let min = min_distance_brute(&pts).expect("points");
    let diameter = 2.0 * circle_radius(n);
    let (ps, qs): (Vec<Point>, Vec<Point>) = pts.iter().partition(|p| p.x > 0.0);
    let mut d: Vec<f64> = ps
        .iter()
        .flat_map(|&p| qs.iter().map(move |&q| p.distance(q)))
        .filter(|&t| t >= diameter - 3.0 && t <= diameter)
        .collect();
    d.push(diameter - 3.0);
    d.push(diameter);
    d.sort_by(f64::total_cmp);
    let unit = (n as f64).powf(-6.0 / 7.0);
    let max_spacing = d.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max) / unit;
    let sum = d.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / unit;
    (
        min >= 1.0 && max_spacing <= P3_MAX_SPACING && sum <= P3_MAX_GAP_SUM,
        format!(
            "{} points, min distance {min:.4}; in [D-3, D]: max spacing {max_spacing:.3} n^-6/7 (<= {P3_MAX_SPACING}), gap sum {sum:.3} n^-6/7 (<= {P3_MAX_GAP_SUM})",
            pts.len()
        ),
    )
}

fn subinterval_lemma() -> (bool, String) {
    let mut rng = Seed::with_label(5, "acceptance-subinterval").rng();
    let mut bad = 0;
    for _ in 0..SUBINTERVAL_TRIALS {
        let j = rng.random_range(1..=SUBINTERVAL_MAX_J) as f64;
        let a: f64 = rng.random();
        let len = rng.random::<f64>() * (1.0 - a);
        let (lo, hi) = (j + a, (j + a + len).min(j + 1.0));
        if hi <= lo {
            continue;
        }
        match largest_canonical_subinterval(lo, hi) {
            Ok(ci) => {
                let (cl, ch) = ci.bounds();
                if !(cl >= lo && ch <= hi && ch - cl >= (hi - lo) / 4.0) {
                    bad += 1;
                }
            }
            Err(_) => bad += 1,
        }
    }
    (
        bad == 0,
        format!("{bad} violations in {SUBINTERVAL_TRIALS} random intervals"),
    )
}

fn empty_interval_audit(s: &Sweep) -> (bool, String) {
    let runs_ok = s.records.iter().filter(|r| r.eq7_holds).count();
    let mut synth_ok = 0;
    for i in 0..SYNTHETIC_SPECTRA {
        let mut rng = Seed::with_label(i, "acceptance-eq7").rng();
        // gaps up to one, skewed towards small values, with ties
        let m = rng.random_range(2..3000);
        let mut v = vec![1.0 + rng.random::<f64>() * 100.0];
        for _ in 1..m {
            let g = if rng.random_bool(0.1) {
                0.0
            } else {
                rng.random::<f64>().powi(3)
            };
            v.push(v[v.len() - 1] + g);
        }
        if audit_eq7(&DistanceSpectrum::from_sorted(v, 0).expect("sorted")).is_ok_and(|a| a.holds) {
            synth_ok += 1;
        }
    }
    (
        runs_ok == s.records.len() && synth_ok == SYNTHETIC_SPECTRA,
        format!(
            "{runs_ok}/{} construction runs, {synth_ok}/{SYNTHETIC_SPECTRA} synthetic spectra",
            s.records.len()
        ),
    )
}

fn discrete_janson() -> (bool, String) {
    let s = janson_survey(
        JANSON_INSTANCES,
        JANSON_MAX_GROUND_SET,
        JANSON_MAX_P,
        &Seed::with_label(0, "janson"),
    )
    .expect("survey");
    (
        s.violations == 0,
        format!(
            "{} of {} instances violate M <= Pr <= M e^(nu/(2-2eps)) (lower-bound failures {}, worst Pr/upper {:.4}); with e^(nu/(1-eps)): {} violations",
            s.violations, s.instances, s.lower_violations, s.worst_ratio, s.corrected_violations
        ),
    )
}

fn nobonds_configs() -> Vec<(Region, f64, f64, f64)> {
    let sq = Region::unit_square();
    let disk = Region::disk(0.6).expect("disk");
    vec![
        (sq.clone(), 2.0, 0.40, 0.65),
        (sq.clone(), 5.0, 0.40, 0.50),
        (sq.clone(), 5.0, 0.30, 0.35),
        (sq.clone(), 10.0, 0.20, 0.25),
        (sq, 10.0, 0.60, 0.70),
        (disk.clone(), 2.0, 0.50, 0.75),
        (disk.clone(), 5.0, 0.30, 0.40),
        (disk.clone(), 5.0, 0.80, 0.85),
        (disk.clone(), 10.0, 0.50, 0.55),
        (disk, 10.0, 0.20, 0.30),
    ]
}

fn no_bonds_theorem() -> (bool, String) {
    let mut passed = 0;
    let mut notes = Vec::new();
    for (i, (region, density, lo, hi)) in nobonds_configs().into_iter().enumerate() {
        let bond = BondSpec::new(lo, hi).expect("bond");
        let seed = Seed::with_label(i as u64, "acceptance-nobonds");
        let verdict =
            estimate_mu_nu(&region, density, &bond, NOBONDS_SAMPLES, &seed.derive("integrate")).and_then(|est| {
                let (p, ci) = empirical_no_bond_prob(&region, density, &bond, NOBONDS_TRIALS, &seed.derive("trials"))?;
                Ok(check_nobonds(&est, p, ci))
            });
        match verdict {
            Ok(v) if v.pass => passed += 1,
            Ok(v) => notes.push(format!(
                "#{i}: p {:.4} outside [{:.4}, {:.4}]",
                v.p_hat, v.inflated_lower, v.inflated_upper
            )),
            Err(e) => notes.push(format!("#{i}: {e}")),
        }
    }
    let n = nobonds_configs().len();
    (
        passed == n,
        format!("{passed}/{n} configurations bracketed {}", notes.join("; ")),
    )
}

fn mu_scaling_orders() -> (bool, String) {
    let seed = Seed::with_label(9, "acceptance-survey");
    let moderate = mu_scaling_survey(
        SURVEY_N,
        EPSILON,
        DistanceClass::Moderate,
        &[(25, 4), (50, 4), (50, 5)],
        SURVEY_SAMPLES,
        &seed.derive("moderate"),
    )
    .expect("moderate survey");
    let diameter = 2.0 * circle_radius(SURVEY_N);
    let j16 = (diameter - 16.0).floor() as u64;
    let j32 = (diameter - 32.0).floor() as u64;
    let large = mu_scaling_survey(
        SURVEY_N,
        EPSILON,
        DistanceClass::Large,
        &[(j16, 4), (j32, 4)],
        SURVEY_SAMPLES,
        &seed.derive("large"),
    )
    .expect("large survey");
    let j_ratio = moderate[1].mu / moderate[0].mu;
    let k_ratio = moderate[1].mu / moderate[2].mu;
    let want_large = ((diameter - j32 as f64) / (diameter - j16 as f64)).powf(1.25);
    let large_ratio = large[1].mu / large[0].mu;
    let within = |x: f64, target: f64, tol: f64| (x / target - 1.0).abs() <= tol;
    (
        within(j_ratio, 2.0, MODERATE_TOL) && within(k_ratio, 2.0, MODERATE_TOL) && within(large_ratio, want_large, LARGE_TOL),
        format!(
            "moderate j-doubling {j_ratio:.3}, k-step {k_ratio:.3} (want 2 +/- 20%); large (D-j) doubling {large_ratio:.3} (want {want_large:.3} +/- 25%); nu/mu on grid {:.2e}..{:.2e}",
            moderate.iter().chain(&large).map(|r| r.nu_over_mu).fold(f64::INFINITY, f64::min),
            moderate.iter().chain(&large).map(|r| r.nu_over_mu).fold(0.0, f64::max),
        ),
    )
}

fn top_interval(s: &Sweep) -> (bool, String) {
    (
        s.fit.top_interval_slope <= MAX_TOP_SLOPE,
        format!(
            "fitted exponent of count in [D-1, D] vs D: {:.4} (<= {MAX_TOP_SLOPE})",
            s.fit.top_interval_slope
        ),
    )
}

fn deletion_rate() -> (bool, String) {
    let (mut f1, mut f2) = (0.0, 0.0);
    for s in 0..DELETION_SEEDS {
        let seed = Seed::new(1000 + s);
        f1 += build_p1(DELETION_N, EPSILON, &seed).expect("p1").deleted_fraction();
        f2 += build_p2(DELETION_N, EPSILON, &seed).expect("p2").deleted_fraction();
    }
    let (m1, m2) = (f1 / DELETION_SEEDS as f64, f2 / DELETION_SEEDS as f64);
    let oracle = 1.0 - (-EPSILON * std::f64::consts::PI).exp();
    (
        m1 <= MAX_DELETED_FRACTION && m2 <= MAX_DELETED_FRACTION,
        format!(
            "mean deleted fraction {}: {m1:.5}, {}: {m2:.5} (<= {MAX_DELETED_FRACTION}; single-point deletion probability {oracle:.5})",
            Source::P1,
            Source::P2
        ),
    )
}

type Criterion<'a> = Box<dyn FnOnce() -> (bool, String) + 'a>;

fn main() -> ExitCode {
    let start = Instant::now();
    eprintln!("running the scaling sweep ...");
    let sweep = match sweep() {
        Ok(s) => Some(s),
        Err(e) => {
            eprintln!("scaling sweep failed: {e}");
            None
        }
    };
    let missing = || (false, "scaling sweep failed".to_string());
    let with_sweep = |f: fn(&Sweep) -> (bool, String)| sweep.as_ref().map(f).unwrap_or_else(missing);

    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        ("scaling exponent", Box::new(|| with_sweep(scaling_exponent))),
        (
            "instancewise lower bound",
            Box::new(|| with_sweep(instancewise_lower_bound)),
        ),
        ("minimum distance", Box::new(|| with_sweep(minimum_distance))),
        ("explicit circle points", Box::new(p3_claims)),
        ("canonical subinterval lemma", Box::new(subinterval_lemma)),
        ("empty-interval audit", Box::new(|| with_sweep(empty_interval_audit))),
        ("discrete Janson", Box::new(discrete_janson)),
        ("no bonds theorem", Box::new(no_bonds_theorem)),
        ("mu scaling orders", Box::new(mu_scaling_orders)),
        ("top-interval count", Box::new(|| with_sweep(top_interval))),
        ("deletion rate", Box::new(deletion_rate)),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of 11 criteria passed in {:.0}s",
        11 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
