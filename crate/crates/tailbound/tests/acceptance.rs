//! Release gate. Every stated guarantee of the library is checked here end
//! to end at its stated tolerance, one test per guarantee, each printing a
//! PASS line with the measured numbers when it survives. Run with
//! `cargo test --test acceptance -- --nocapture` to see them.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tailbound::applications::{
    coverage_study, entropic_risk_worst_case, pareto_ratio_heatmap, CoverageConfig,
    CoverageMethod, NewsvendorProblem,
};
use tailbound::dist::KnownDistribution;
use tailbound::estimation::{bootstrap_interval_params, KdeConfig, Sample};
use tailbound_core::domain::{
    density_from_measure, to_moment_params, verify_density_feasibility, TailClass,
};
use tailbound_core::objective::{
    make_constant, make_exp_utility, make_interval_indicator, make_newsvendor_shortfall,
    make_stop_loss,
};
use tailbound_core::oracle::{
    grid_oracle_three_point, grid_oracle_two_point, quadrature_objective,
    random_feasible_measure,
};
use tailbound_core::{
    solve_interval, solve_point, IntervalParams, LineSearchConfig, ObjectiveSpec,
    SearchConfig, TailParams,
};

fn budget(name: &str, start: Instant, limit: Duration) {
    let elapsed = start.elapsed();
    assert!(elapsed <= limit, "{name} took {elapsed:?}, budget {limit:?}");
}

/// Random tail parameters with strictly consistent moments: mean in
/// [0.3, 3], second moment a chosen multiple of mean^2, slope scaled so the
/// tail mass stays below 0.95.
fn random_strict_params(rng: &mut ChaCha8Rng) -> TailParams {
    let a = 3.0 * rng.gen::<f64>();
    let mu = 0.3 + 2.7 * rng.gen::<f64>();
    let t = 1.05 + 1.95 * rng.gen::<f64>();
    let sigma = t * mu * mu;
    let mut nu = 0.05 + 1.95 * rng.gen::<f64>();
    if nu * sigma / 2.0 > 0.95 {
        nu = 1.9 / sigma;
    }
    TailParams::new(a, nu * sigma / 2.0, nu * mu, nu).expect("constructed consistent")
}

/// One of the built-in objectives, parameters tied to the threshold.
fn random_objective(kind: usize, a: f64, rng: &mut ChaCha8Rng) -> ObjectiveSpec {
    match kind % 5 {
        0 => {
            let c = a + 0.3 + 0.6 * rng.gen::<f64>();
            make_interval_indicator(a, c, c + 0.9 + rng.gen::<f64>()).unwrap()
        }
        1 => {
            let w = 0.4 + rng.gen::<f64>();
            make_stop_loss(a, a + 0.2, a + 0.2 + w, w).unwrap()
        }
        2 => make_exp_utility(a, 0.4 + 2.0 * rng.gen::<f64>()).unwrap(),
        3 => {
            let q = a + 0.5 + 1.5 * rng.gen::<f64>();
            make_newsvendor_shortfall(a, 1.5 + rng.gen::<f64>(), q).unwrap()
        }
        _ => make_constant(0.5 + 0.4 * rng.gen::<f64>()).unwrap(),
    }
}

#[test]
fn a01_constant_objective_recovers_tail_mass() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let obj = make_constant(1.0).unwrap();
    let mut worst_point = 0.0_f64;
    let mut worst_interval = 0.0_f64;
    for _ in 0..100 {
        let p = random_strict_params(&mut rng);
        let v = solve_point(&p, &obj, &LineSearchConfig::default())
            .unwrap()
            .value
            .unwrap();
        worst_point = worst_point.max((v - p.beta).abs());

        let beta_hi = (p.beta * 1.15).min(0.99);
        let b = IntervalParams::new(
            p.a,
            p.beta * 0.85,
            beta_hi,
            p.eta * 0.9,
            p.eta * 1.05,
            p.nu,
            0.05,
        )
        .unwrap();
        let vi = solve_interval(&b, &obj, &SearchConfig::default())
            .unwrap()
            .value
            .unwrap();
        worst_interval = worst_interval.max((vi - b.beta_hi).abs());
    }
    assert!(worst_point <= 1e-9, "point gap {worst_point:e}");
    assert!(worst_interval <= 1e-9, "interval gap {worst_interval:e}");
    budget("tail-mass identity", start, Duration::from_secs(5));
    println!(
        "PASS tail-mass identity: 100 random parameter sets, max |value - mass| {:.1e} (point) \
         / {:.1e} (interval) in {:?}",
        worst_point,
        worst_interval,
        start.elapsed()
    );
}

#[test]
fn a02_boundary_parameters_collapse_to_the_unique_density() {
    let mut worst = 0.0_f64;
    for &(a, mu, nu) in &[(2.0, 1.3, 0.4), (0.5, 0.6, 1.1), (1.0, 2.0, 0.3)] {
        let p = TailParams::new(a, nu * mu * mu / 2.0, nu * mu, nu).unwrap();
        let objectives = [
            make_interval_indicator(a, a + 0.6, a + 1.4).unwrap(),
            make_constant(0.7).unwrap(),
            make_stop_loss(a, a + 0.5, a + 1.25, 0.75).unwrap(),
            make_exp_utility(a, 1.3).unwrap(),
            make_newsvendor_shortfall(a, 3.0, a + 2.0).unwrap(),
        ];
        for obj in &objectives {
            let res = solve_point(&p, obj, &LineSearchConfig::default()).unwrap();
            assert_eq!(res.tail_class, TailClass::DegenerateUnique);
            let gap = (res.value.unwrap() - nu * obj.big_h(mu)).abs();
            assert!(gap <= 1e-12, "gap {gap:e} at a = {a}");
            worst = worst.max(gap);
        }
    }
    println!(
        "PASS boundary collapse: value = nu * H(mean) across 5 objectives x 3 parameter sets, \
         max gap {worst:.1e}"
    );
}

#[test]
fn a03_known_parameter_interval_bound_matches_published_value() {
    // The lognormal(0, 0.5) tail at a = 3.1 has beta = 1.1823e-2,
    // eta = 1.9894e-2, nu = 3.5461e-2, and true P(4 < X < 5) = 2.137e-3.
    // The widely quoted worst-case figure for this cell is 3.16e-3, but
    // that number is not attainable as an optimum: the maximizer found
    // below maps to a verifiably feasible convex tail (checked here at
    // 1e-9) whose integral over [4, 5] is 3.34e-3, about 5.9% above the
    // quoted figure. A solver agreeing with 3.16e-3 to 2% would have to
    // leave that feasible density on the table, so this test certifies
    // the optimum instead: independent grid-oracle agreement, density
    // feasibility, quadrature agreement, and a value band sitting above
    // both the quoted figure and the exact probability.
    let start = Instant::now();
    let dist = KnownDistribution::lognormal(0.0, 0.5).unwrap();
    let p = dist.tail_params(3.1).unwrap();
    let obj = make_interval_indicator(3.1, 4.0, 5.0).unwrap();
    let res = solve_point(&p, &obj, &LineSearchConfig::default()).unwrap();
    let v = res.value.unwrap();

    let m = to_moment_params(&p);
    let oracle = grid_oracle_two_point(&m, &obj, p.nu, 20_000);
    assert!(
        (v / oracle - 1.0).abs() <= 1e-4,
        "solver {v:.6e} vs grid oracle {oracle:.6e}"
    );

    let f = res.density.as_ref().expect("feasible instance returns a density");
    let report = verify_density_feasibility(f, &p, 1e-9);
    assert!(report.all_pass(), "worst-case density infeasible: {report:?}");
    let quad = quadrature_objective(f, &obj);
    assert!(
        (quad - v).abs() <= 1e-6,
        "density integrates to {quad:.6e}, solver reported {v:.6e}"
    );

    let truth = dist.cdf(5.0) - dist.cdf(4.0);
    assert!(v >= truth, "bound {v:.4e} below the true probability {truth:.4e}");
    assert!(
        (3.30e-3..=3.38e-3).contains(&v),
        "certified bound moved: {v:.6e}"
    );
    assert!(
        v > 3.16e-3 && v <= 3.16e-3 * 1.07,
        "bound {v:.4e} not in the quoted figure's neighborhood"
    );
    budget("known-parameter bound", start, Duration::from_secs(1));
    println!(
        "PASS known-parameter bound: lognormal(0, 0.5) tail at 3.1 on [4,5] gives {v:.3e} \
         (oracle {oracle:.3e}, true probability {truth:.3e}, quoted figure 3.16e-3 is \
         {:.1}% below the certified optimum) in {:?}",
        (v / 3.16e-3 - 1.0) * 100.0,
        start.elapsed()
    );
}

#[test]
fn a04_pareto_heatmap_conservatism() {
    let t0 = Instant::now();
    let near = pareto_ratio_heatmap(0.70, &[(0.85, 0.86)]).unwrap()[0];
    budget("heatmap near cell", t0, Duration::from_secs(1));
    let t1 = Instant::now();
    let far = pareto_ratio_heatmap(0.70, &[(0.98, 0.99)]).unwrap()[0];
    budget("heatmap far cell", t1, Duration::from_secs(1));
    assert!(
        (1.5..=2.5).contains(&near.ratio),
        "cell (85th, 86th) ratio {}",
        near.ratio
    );
    assert!((6.0..=10.0).contains(&far.ratio), "cell (98th, 99th) ratio {}", far.ratio);
    println!(
        "PASS heatmap conservatism: ratio {:.2} at (85th, 86th), {:.2} at (98th, 99th)",
        near.ratio, far.ratio
    );
}

fn lognormal_coverage(a: f64) -> CoverageConfig {
    CoverageConfig {
        replications: 100,
        sample_size: 200,
        truth: KnownDistribution::lognormal(0.0, 0.5).unwrap(),
        a,
        intervals: vec![(4.0, 5.0), (5.0, 6.0), (6.0, 7.0), (7.0, 8.0), (8.0, 9.0), (9.0, 10.0)],
        alpha: 0.05,
        bootstrap: 1000,
        seed: 1,
        gpd_threshold: 1.8,
    }
}

#[test]
fn a05_bootstrap_coverage_bands() {
    let start = Instant::now();
    let far_rows = coverage_study(&lognormal_coverage(3.1), CoverageMethod::WorstCase).unwrap();
    assert!(
        (0.86..=1.0).contains(&far_rows[0].coverage),
        "[4,5] coverage {}",
        far_rows[0].coverage
    );
    for r in &far_rows[2..] {
        assert!(r.coverage >= 0.97, "[{},{}] coverage {}", r.c, r.d, r.coverage);
    }
    let near_rows = coverage_study(&lognormal_coverage(2.8), CoverageMethod::WorstCase).unwrap();
    for r in &near_rows {
        assert!(r.coverage >= 0.97, "[{},{}] coverage {}", r.c, r.d, r.coverage);
    }
    budget("coverage study", start, Duration::from_secs(300));
    let fmt = |rows: &[tailbound::applications::CoverageRow]| {
        rows.iter().map(|r| format!("{:.2}", r.coverage)).collect::<Vec<_>>().join(" ")
    };
    println!(
        "PASS coverage bands: threshold 3.1 -> {} ({} failures); threshold 2.8 -> {} \
         ({} failures); {:?} total",
        fmt(&far_rows),
        far_rows[0].failures,
        fmt(&near_rows),
        near_rows[0].failures,
        start.elapsed()
    );
}

#[test]
fn a06_generalized_pareto_is_anticonservative() {
    let cfg = lognormal_coverage(3.1);
    let wc = coverage_study(&cfg, CoverageMethod::WorstCase).unwrap();
    let gpd = coverage_study(&cfg, CoverageMethod::Gpd).unwrap();
    assert!(gpd[0].coverage <= 0.80, "[4,5] gpd coverage {}", gpd[0].coverage);
    for (w, g) in wc.iter().zip(&gpd) {
        assert!(
            g.coverage < w.coverage,
            "[{},{}]: gpd {} not below worst-case {}",
            w.c,
            w.d,
            g.coverage,
            w.coverage
        );
    }
    println!(
        "PASS baseline contrast: gpd coverage {:.2} on [4,5], below the worst-case method on \
         all {} intervals",
        gpd[0].coverage,
        gpd.len()
    );
}

#[test]
fn a07_solver_matches_brute_force_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut worst_rel = 0.0_f64;
    for i in 0..50 {
        let p = random_strict_params(&mut rng);
        let obj = random_objective(i, p.a, &mut rng);
        let v = solve_point(&p, &obj, &LineSearchConfig::default())
            .unwrap()
            .value
            .unwrap();
        let m = to_moment_params(&p);
        let two = grid_oracle_two_point(&m, &obj, p.nu, 20_000);
        let rel = (v - two).abs() / two.abs().max(1e-300);
        assert!(rel <= 1e-4, "instance {i}: solver {v:e} vs two-point oracle {two:e}");
        worst_rel = worst_rel.max(rel);
        let three = grid_oracle_three_point(&m, &obj, p.nu, 300);
        assert!(
            three <= v + 1e-6,
            "instance {i}: three-point oracle {three:e} beats solver {v:e}"
        );
    }
    budget("oracle sweep", start, Duration::from_secs(120));
    println!(
        "PASS oracle equivalence: 50 instances, max relative gap to the two-point oracle \
         {worst_rel:.2e}, no three-point improvement, in {:?}",
        start.elapsed()
    );
}

#[test]
fn a08_measure_density_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut worst_gap = 0.0_f64;
    for i in 0..100 {
        let p = random_strict_params(&mut rng);
        let m = to_moment_params(&p);
        let measure = random_feasible_measure(&m, 9000 + i).unwrap();
        let f = density_from_measure(&measure, &p).unwrap();
        let report = verify_density_feasibility(&f, &p, 1e-9);
        assert!(report.all_pass(), "instance {i}: {report:?}");

        let obj = random_objective(i as usize, p.a, &mut rng);
        let expected: f64 = p.nu
            * measure
                .support()
                .iter()
                .zip(measure.weights())
                .map(|(&x, &w)| w * obj.big_h(x))
                .sum::<f64>();
        let quad = quadrature_objective(&f, &obj);
        let gap = (quad - expected).abs();
        assert!(gap <= 1e-6, "instance {i}: quadrature {quad:e} vs moment form {expected:e}");
        worst_gap = worst_gap.max(gap);
    }
    println!(
        "PASS density round-trip: 100 random measures reconstruct feasible densities, max \
         quadrature gap {worst_gap:.1e}"
    );
}

#[test]
fn a09_entropic_risk_dominance() {
    let dist = KnownDistribution::exponential(1.0).unwrap();
    let a = -(0.7_f64.ln());
    let thetas = [0.5, 1.0, 2.0, 5.0, 10.0];
    let mut gaps = Vec::new();
    for &theta in &thetas {
        let worst = entropic_risk_worst_case(&dist, a, theta).unwrap();
        let exact = -(1.0 + theta).ln() / theta;
        assert!(
            worst >= exact - 1e-12,
            "theta {theta}: worst-case {worst} below exact {exact}"
        );
        gaps.push(worst - exact);
    }
    assert!(
        gaps[4] < gaps[0],
        "gap did not shrink: {} at theta 10 vs {} at theta 0.5",
        gaps[4],
        gaps[0]
    );
    println!(
        "PASS entropic dominance: worst-case above exact at all 5 risk aversions, gap {:.3} \
         -> {:.3} from theta 0.5 to 10",
        gaps[0], gaps[4]
    );
}

#[test]
fn a10_newsvendor_robust_order_quantity() {
    // Demand is lognormal with mean 50 and sd 20; the threshold sits at its
    // 70th percentile (a = 56.8, 95th percentile 87.5). Two calibrations are
    // exercised because the quoted ones are mutually inconsistent. The
    // quoted triple (0.7, 0.007, 0.0003) has a slope bound so small that
    // convexity lets the worst-case tail stay nearly flat for another ~110
    // units past a, so expected sales keep growing and the profit curve
    // peaks at q = 166 when the search spans the quoted [0, 193.26] (or
    // pins to the boundary on [0, 95th percentile]). Extracting the triple
    // from the demand curve itself instead gives an interior optimum at
    // q = 68.5, a little below the classical critical-fractile answer of
    // 70.1 because the adversarial tail pulls demand mass toward the
    // threshold. The quoted headline answer of 55.7 is the argmax under
    // neither calibration; both solved optima are asserted, along with
    // properties that hold regardless: ordering nothing earns nothing and
    // profit never exceeds margin times quantity.
    let demand = KnownDistribution::lognormal_from_moments(50.0, 20.0).unwrap();
    let a = demand.quantile(0.70);
    let q95 = demand.quantile(0.95);

    let matched = NewsvendorProblem {
        demand,
        a,
        price: 7.0,
        cost: 1.0,
        q_range: None,
        tail: None,
    };
    let mm = matched.solve().unwrap();
    assert!(
        (64.0..=73.0).contains(&mm.q_star),
        "demand-matched order quantity {}",
        mm.q_star
    );
    assert!(
        mm.q_star < q95 - 1.0,
        "expected an interior optimum, got {} near the range edge {q95}",
        mm.q_star
    );
    let fractile = demand.quantile(1.0 - 1.0 / 7.0);
    assert!(
        mm.q_star <= fractile,
        "robust order {} above the critical fractile {fractile}",
        mm.q_star
    );

    let quoted = NewsvendorProblem {
        demand,
        a,
        price: 7.0,
        cost: 1.0,
        q_range: Some((0.0, 193.26)),
        tail: Some(TailParams::new(a, 0.7, 0.007, 0.0003).unwrap()),
    };
    let qt = quoted.solve().unwrap();
    assert!(
        (160.0..=173.0).contains(&qt.q_star),
        "quoted-triple order quantity {}",
        qt.q_star
    );
    let at_headline = quoted.inner_value(55.7).unwrap();
    assert!(
        at_headline < qt.value - 1.0,
        "55.7 should not be the argmax under the quoted triple: {at_headline} vs {}",
        qt.value
    );

    assert_eq!(matched.inner_value(0.0).unwrap(), 0.0);
    for q in [20.0, mm.q_star, 80.0] {
        let val = matched.inner_value(q).unwrap();
        assert!(val <= 6.0 * q + 1e-9, "profit {val} exceeds margin cap at q = {q}");
    }

    println!(
        "PASS newsvendor: demand-matched calibration orders {:.1} (worst-case profit {:.1}, \
         critical fractile {:.1}); quoted triple (0.7, 0.007, 0.0003) orders {:.1} over \
         [0, 193.3]; the quoted 55.7 is optimal under neither (documented deviation)",
        mm.q_star, mm.value, fractile, qt.q_star
    );
}

#[test]
fn a11_seeded_pipeline_bound_magnitude() {
    // The full data-driven chain (sample, bootstrap box, robust bound) is
    // realization dependent: individual 200-point draws on this cell land
    // anywhere from 1.6e-3 to 2e-2. The magnitude claim is therefore
    // checked across the first 13 seeded replications rather than on one
    // cherry-picked draw: the median must sit in the expected decade and at
    // most a few draws may fall outside it.
    let dist = KnownDistribution::lognormal(0.0, 0.5).unwrap();
    let obj = make_interval_indicator(3.1, 4.0, 5.0).unwrap();
    let mut vals = Vec::new();
    for rep in 0..13u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + rep);
        let s = Sample::new(dist.sample_n(&mut rng, 200)).unwrap();
        let cal =
            bootstrap_interval_params(&s, 3.1, 0.05, 1000, &KdeConfig::default(), rep).unwrap();
        let v = solve_interval(&cal.params, &obj, &SearchConfig::default())
            .unwrap()
            .value
            .unwrap();
        vals.push(v);
    }
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let median = vals[vals.len() / 2];
    let in_band = vals.iter().filter(|&&v| (3e-3..=3e-2).contains(&v)).count();
    assert!(
        (3e-3..=3e-2).contains(&median),
        "median calibrated bound {median:e} outside the expected magnitude"
    );
    assert!(in_band >= 9, "only {in_band}/13 calibrated bounds in [3e-3, 3e-2]");
    println!(
        "PASS calibrated-bound magnitude: 13 seeded 200-point pipelines give median {median:.2e} \
         on [4,5], {in_band}/13 within [3e-3, 3e-2]"
    );
}
