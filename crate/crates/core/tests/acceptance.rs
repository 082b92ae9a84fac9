//! Acceptance suite: one pass/fail line per criterion, non-zero exit on any
//! failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use contests_core::bestresponse::{exact_best_response_grid, fptas_best_response, worst_to_best_lift};
use contests_core::equilibrium::{
    ceb_all, ceb_best, ceb_worst, r_best, r_worst, strategy_from_ceb, verify_gceb, CumulativeBehavior,
};
use contests_core::rounding::{
    default_mix, epsilon_mix, interim_of_prizes, r_bound, round_to_prizes, xi, PrizeVector, RoundingParams,
    DEFAULT_ENVELOPE_PIECES,
};
use contests_core::safety::{
    benchmark, best_simple_threshold, construct_16competitive, harmonic_value, safety_eval, sl_factor,
    SafetyOptions,
};
use contests_core::simulator::{check_designer_utility, check_h_curves, run_goc, TrialConfig};
use contests_core::stepcalc::{merge_opponents, stretch};
use contests_core::{PLFn, StepFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

struct Suite {
    failed: usize,
}

impl Suite {
    fn record(&mut self, id: &str, name: &str, pass: bool, detail: String, took: Duration) {
        if !pass {
            self.failed += 1;
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {id} {name}: {detail} ({:.2} s)", took.as_secs_f64());
    }
}

/// Non-increasing step function with at most `max_pieces` pieces; levels are
/// sometimes drawn from a small set so that ties occur.
fn random_step(rng: &mut ChaCha8Rng, max_pieces: usize, allow_zero_tail: bool) -> StepFn {
    let k = rng.random_range(1..=max_pieces);
    let tied = rng.random_bool(0.3);
    let mut vals: Vec<f64> = (0..k)
        .map(|_| {
            if tied {
                [0.5, 1.0, 2.0][rng.random_range(0..3)]
            } else {
                rng.random_range(0.05..3.0)
            }
        })
        .collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    if allow_zero_tail && k > 1 && rng.random_bool(0.5) {
        *vals.last_mut().unwrap() = 0.0;
    }
    let mut cuts: Vec<f64> = (1..k).map(|_| rng.random_range(0.01..0.99)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.push(1.0);
    let vals = vals[vals.len() - cuts.len()..].to_vec();
    StepFn::new(cuts, vals).unwrap()
}

fn random_value(rng: &mut ChaCha8Rng) -> StepFn {
    random_step(rng, 6, false)
}

/// Random step function scaled to spend exactly `budget` (up to rounding down).
fn with_budget(f: &StepFn, budget: f64) -> StepFn {
    let s = budget / f.budget() * (1.0 - 1e-12);
    StepFn::new(f.breaks().to_vec(), f.values().iter().map(|v| v * s).collect()).unwrap()
}

fn others(xs: &[StepFn], j: usize) -> Vec<StepFn> {
    xs.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, f)| f.clone()).collect()
}

fn knot_sum_error(h: &CumulativeBehavior) -> f64 {
    h.knot_union()
        .into_iter()
        .map(|q| (h.components.iter().map(|c| c.eval(q)).sum::<f64>() - q).abs())
        .fold(0.0, f64::max)
}

struct Random {
    xs: Vec<StepFn>,
    v: StepFn,
}

fn random_instances(seed: u64, count: usize) -> Vec<Random> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.random_range(2..=4);
            let xs = (0..m).map(|_| random_step(&mut rng, 6, true)).collect();
            Random {
                xs,
                v: random_value(&mut rng),
            }
        })
        .collect()
}

fn equilibrium_characterization(suite: &mut Suite, inst: &[Random]) {
    let start = Instant::now();
    let (mut bad, mut worst_sum) = (0, 0.0f64);
    for r in inst {
        let merged = merge_opponents(&others(&r.xs, 0)).unwrap();
        let pair = [r.xs[0].clone(), merged.clone()];
        let w = CumulativeBehavior::with_complement(ceb_worst(&r.xs[0], &merged)).unwrap();
        let b = CumulativeBehavior::with_complement(ceb_best(&r.xs[0], &merged)).unwrap();
        let all = ceb_all(&r.xs, 0).unwrap();
        let ok = verify_gceb(&w, &pair, TOL).unwrap()
            && verify_gceb(&b, &pair, TOL).unwrap()
            && verify_gceb(&all, &r.xs, TOL).unwrap();
        let err = knot_sum_error(&all).max(knot_sum_error(&w)).max(knot_sum_error(&b));
        worst_sum = worst_sum.max(err);
        if !ok || err > 1e-12 {
            bad += 1;
        }
    }
    let took = start.elapsed();
    suite.record(
        "C1",
        "equilibrium characterization",
        bad == 0 && took < Duration::from_secs(5),
        format!(
            "{} instances, {bad} violations, max |ΣH−q| at knots {worst_sum:.1e}, limit 5 s",
            inst.len()
        ),
        took,
    );
}

fn value_conservation(suite: &mut Suite, inst: &[Random]) {
    let start = Instant::now();
    let mut dev = 0.0f64;
    for r in inst {
        let merged = merge_opponents(&others(&r.xs, 0)).unwrap();
        let s = r_best(&r.xs[0], &merged, &r.v) + r_worst(&merged, &r.xs[0], &r.v);
        dev = dev.max((s - r.v.budget()).abs());
    }
    suite.record(
        "C2",
        "value conservation",
        dev <= TOL,
        format!("max |R_best + R_worst(swapped) − ∫v| = {dev:.1e}, tol 1e-9"),
        start.elapsed(),
    );
}

fn dominance_bounds(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    let mut strict_checked = 0;
    for _ in 0..200 {
        let xhat = random_step(&mut rng, 6, true);
        let y = random_step(&mut rng, 6, true);
        let v = random_value(&mut rng);
        let c = rng.random_range(0.1..=1.0);
        let x = stretch(&xhat, c, 0.0).unwrap();
        let xs = stretch(&xhat, c, 1e-6).unwrap();
        let k = v.budget();
        let share = c / (c + 1.0) * k;
        let mut ok = r_worst(&x, &y, &v) >= c * r_worst(&xhat, &y, &v) - TOL
            && r_best(&x, &y, &v) >= c * r_best(&xhat, &y, &v) - TOL
            && r_best(&x, &xhat, &v) >= share - TOL;
        if contests_core::stepcalc::dominates(&xs, &xhat, c, true).unwrap() {
            strict_checked += 1;
            ok &= r_worst(&xs, &y, &v) >= c * r_best(&xhat, &y, &v) - TOL;
            ok &= r_worst(&xs, &xhat, &v) >= share - TOL;
        }
        if !ok {
            bad += 1;
        }
    }
    suite.record(
        "C3",
        "dominance bounds",
        bad == 0 && strict_checked == 200,
        format!("200 pairs, {strict_checked} strictly dominated with pad 1e-6, {bad} violations"),
        start.elapsed(),
    );
}

struct BrOutput {
    opp: StepFn,
    v: StepFn,
    t: f64,
    strategy: StepFn,
}

fn fptas_against_grid(suite: &mut Suite) -> Vec<BrOutput> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut outputs = Vec::new();
    let (mut bad, mut slowest, mut min_margin) = (0, Duration::ZERO, f64::INFINITY);
    for _ in 0..50 {
        let opp = random_step(&mut rng, 3, true);
        let v = random_step(&mut rng, 4, false);
        let t = rng.random_range(0.05..1.0);
        let t_mj = opp.budget();
        let grid = exact_best_response_grid(&opp, &v, t, 2000).unwrap();
        for eps in [0.25, 0.05] {
            let call = Instant::now();
            let f = fptas_best_response(&opp, &v, t, t_mj, eps).unwrap();
            let took = call.elapsed();
            slowest = slowest.max(took);
            let margin = f.utility - ((1.0 - eps) * grid.utility - grid.slack);
            min_margin = min_margin.min(margin);
            if margin < 0.0 || f.strategy.budget() > t + TOL || took > Duration::from_secs(30) {
                bad += 1;
            }
            outputs.push(BrOutput {
                opp: opp.clone(),
                v: v.clone(),
                t,
                strategy: f.strategy,
            });
        }
    }
    suite.record(
        "C4",
        "approximation scheme vs grid optimum",
        bad == 0,
        format!(
            "50 instances at eps 0.25 and 0.05, {bad} violations, min margin {min_margin:.4}, slowest call {:.3} s",
            slowest.as_secs_f64()
        ),
        start.elapsed(),
    );
    outputs
}

fn lift_check(suite: &mut Suite, outs: &[BrOutput]) {
    let start = Instant::now();
    let mut bad = 0;
    for o in outs {
        let l = worst_to_best_lift(&o.strategy, o.t, 0.01).unwrap();
        let ok = l.budget() <= o.t + TOL && r_worst(&l, &o.opp, &o.v) >= 0.99 * r_best(&o.strategy, &o.opp, &o.v) - TOL;
        if !ok {
            bad += 1;
        }
    }
    suite.record(
        "C5",
        "worst-to-best lift",
        bad == 0,
        format!("{} outputs lifted with eps 0.01, {bad} violations", outs.len()),
        start.elapsed(),
    );
}

fn safety_construction(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut values = vec![harmonic_value(4.0, 8).unwrap(), harmonic_value(9.0, 8).unwrap()];
    while values.len() < 20 {
        values.push(random_value(&mut rng));
    }
    let (mut bad, mut worst_ratio, mut budget_dev) = (0, f64::INFINITY, 0.0f64);
    for v in &values {
        for p in [0.1, 0.5, 0.9] {
            let (t, tm) = (p, 1.0 - p);
            let x = construct_16competitive(v, t, tm).unwrap();
            budget_dev = budget_dev.max((x.budget() - t).abs());
            let advs: Vec<StepFn> = (0..100).map(|_| with_budget(&random_step(&mut rng, 6, true), tm)).collect();
            let rep = safety_eval(&x, v, t, tm, 0.1, &advs).unwrap();
            let bench = benchmark(v, t, tm).unwrap();
            let floor = bench / sl_factor(p);
            worst_ratio = worst_ratio.min(rep.sl_upper / floor);
            if rep.sl_upper < bench / 16.0 || rep.sl_upper < floor - TOL || (x.budget() - t).abs() > TOL {
                bad += 1;
            }
        }
    }
    suite.record(
        "C6",
        "staircase safety level",
        bad == 0,
        format!(
            "20 value functions × 3 budget ratios × 102 adversaries, {bad} violations, min utility/(bench/sl(p)) {worst_ratio:.3}, max budget error {budget_dev:.1e}"
        ),
        start.elapsed(),
    );
}

fn simple_threshold_failure(suite: &mut Suite) {
    let start = Instant::now();
    let v = harmonic_value(9.0, 8).unwrap();
    let widths: Vec<f64> = (0..=120).map(|i| 10f64.powf(-5.0 + 5.0 * i as f64 / 120.0)).collect();
    let scan = best_simple_threshold(&v, 1.0, 1.0, 0.1, &widths, SafetyOptions::default()).unwrap();
    let ratio = scan.report.sl_upper / scan.report.benchmark;
    suite.record(
        "C7",
        "simple thresholds fail on heavy-tailed values",
        ratio <= 0.25,
        format!(
            "best width {:.4} of 121, sl_upper/benchmark {ratio:.4} ≤ 0.25 (continuum bound {:.4})",
            scan.width,
            2.0 / (1.0 + 9.0)
        ),
        start.elapsed(),
    );
}

fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

/// Opponent, designer strategy, designer budget and values for the
/// end-to-end rounding check.
fn rounding_fixtures() -> Vec<(StepFn, StepFn, f64, StepFn)> {
    let s = |p: &[(f64, f64)]| StepFn::from_pieces(p).unwrap();
    vec![
        (s(&[(0.5, 1.0), (1.0, 0.0)]), s(&[(0.5, 1.0), (1.0, 0.0)]), 0.5, StepFn::constant(1.0).unwrap()),
        (s(&[(0.3, 2.0), (1.0, 0.2)]), s(&[(0.2, 2.5), (0.6, 0.5), (1.0, 0.0)]), 0.7, s(&[(0.4, 2.0), (1.0, 0.5)])),
        (s(&[(1.0, 0.4)]), s(&[(0.1, 4.0), (1.0, 0.0)]), 0.4, StepFn::constant(1.0).unwrap()),
        (s(&[(0.25, 1.5), (0.75, 0.5), (1.0, 0.0)]), s(&[(0.6, 0.8), (1.0, 0.1)]), 0.52, s(&[(0.2, 3.0), (0.7, 1.0), (1.0, 0.2)])),
        (s(&[(0.05, 6.0), (1.0, 0.3)]), s(&[(0.4, 1.2), (1.0, 0.2)]), 0.6, s(&[(0.5, 1.5), (1.0, 0.5)])),
    ]
}

fn rounding(suite: &mut Suite) {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;

    let mut xi_dev = 0.0f64;
    for n in [10usize, 100, 1000] {
        for k in [1, n / 2, n] {
            let integral = simpson(|h| xi(n, k, h).unwrap(), 20_000);
            xi_dev = xi_dev.max((integral - k as f64 / n as f64).abs());
        }
    }
    ok &= xi_dev <= 1e-6;
    notes.push(format!("max |∫ξ − k/n| {xi_dev:.1e}"));

    for n in [1000usize, 10_000] {
        let p = RoundingParams::new(n).unwrap();
        let tail = xi(n, p.k1, p.k1 as f64 / ((1.0 + p.beta) * (n - 1) as f64)).unwrap();
        ok &= tail > 1.0 - 1.0 / n as f64;
        notes.push(format!("n={n}: 1−ξ = {:.1e}", 1.0 - tail));
    }

    let n = 10_000;
    let mut min_slack = f64::INFINITY;
    for (opp, x, t, v) in rounding_fixtures() {
        let w = round_to_prizes(&x, t, n).unwrap();
        ok &= w.sum() <= n as f64 * t;
        let eps = default_mix(n);
        let mixed = epsilon_mix(&w, eps, t).unwrap();
        ok &= mixed.sum() <= n as f64 * t;
        let lower = interim_of_prizes(&mixed).lower_envelope(DEFAULT_ENVELOPE_PIECES).unwrap();
        let bound = r_bound(n, 2.0, v.max_value(), v.budget()).unwrap();
        let got = r_worst(&lower, &opp, &v);
        let want = (1.0 - bound - eps) * r_best(&x, &opp, &v);
        min_slack = min_slack.min(got - want);
        ok &= got >= want;
    }
    notes.push(format!("5 fixtures at n=1e4, min margin {min_slack:.4}"));
    suite.record("C8", "rounding to prize vectors", ok, notes.join("; "), start.elapsed());
}

fn small_n_example(suite: &mut Suite) {
    let start = Instant::now();
    let (n, t) = (10usize, 0.05);
    let v = StepFn::constant(1.0).unwrap();
    let opp = interim_of_prizes(&PrizeVector::uniform(n, 1.0).unwrap())
        .lower_envelope(DEFAULT_ENVELOPE_PIECES)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_seen = 0.0f64;
    let mut tried = 0;
    let mut candidates = vec![
        std::iter::once(n as f64 * t).chain(std::iter::repeat_n(0.0, n - 1)).collect::<Vec<f64>>(),
        vec![t; n],
    ];
    for _ in 0..200 {
        let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        let s: f64 = w.iter().sum();
        candidates.push(w.iter().map(|x| x * n as f64 * t / s * (1.0 - 1e-12)).collect());
    }
    for w in candidates {
        let pv = PrizeVector::new(w).unwrap();
        assert!(pv.within_budget(t));
        let upper = interim_of_prizes(&pv).upper_envelope(DEFAULT_ENVELOPE_PIECES).unwrap();
        worst_seen = worst_seen.max(r_worst(&upper, &opp, &v));
        tried += 1;
    }
    let eps = 0.01;
    let stair = StepFn::stair(1.0 + eps, t / (1.0 + eps)).unwrap();
    let stair_u = r_worst(&stair, &opp, &v);
    let dev = (stair_u - t / (1.0 + eps)).abs();
    suite.record(
        "C9",
        "small-n prize vectors vs single stair",
        worst_seen == 0.0 && dev <= TOL,
        format!("{tried} feasible prize vectors, max worst utility {worst_seen}; stair utility {stair_u:.12}, error {dev:.1e}"),
        start.elapsed(),
    );
}

struct SimFixture {
    name: &'static str,
    prizes: Vec<PrizeVector>,
    values: Vec<StepFn>,
}

fn sim_fixtures(n: usize) -> Vec<SimFixture> {
    let graded = PrizeVector::new((1..=n).map(|k| 2.0 * (n - k) as f64 / n as f64).collect()).unwrap();
    let mut top = vec![0.0; n];
    top[0] = 0.5 * n as f64;
    vec![
        SimFixture {
            name: "symmetric",
            prizes: vec![graded.clone(), graded],
            values: vec![StepFn::constant(1.0).unwrap(); 2],
        },
        SimFixture {
            name: "equal budgets, winner-take-all vs flat",
            prizes: vec![PrizeVector::new(top).unwrap(), PrizeVector::uniform(n, 0.5).unwrap()],
            values: vec![
                StepFn::constant(1.0).unwrap(),
                StepFn::from_pieces(&[(0.5, 2.0), (1.0, 0.5)]).unwrap(),
            ],
        },
    ]
}

fn monte_carlo(suite: &mut Suite) {
    let start = Instant::now();
    let n = 50;
    let cfg = TrialConfig {
        n,
        trials: 100_000,
        seed: 20_240_601,
        bins: 20,
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for fx in sim_fixtures(n) {
        let xs: Vec<StepFn> = fx
            .prizes
            .iter()
            .map(|w| interim_of_prizes(w).lower_envelope(DEFAULT_ENVELOPE_PIECES).unwrap())
            .collect();
        let h = ceb_all(&xs, 0).unwrap();
        let strategy = strategy_from_ceb(&h, &xs).unwrap();
        let report = run_goc(&fx.prizes, &strategy, &fx.values, cfg).unwrap();
        let hc = check_h_curves(&report, &h).unwrap();
        let uz: Vec<f64> = (0..2)
            .map(|j| check_designer_utility(&report, j, &fx.values[j], &h.components[j], n).z)
            .collect();
        ok &= hc.pass && uz.iter().all(|z| z.abs() <= 3.0);
        let mut note = format!("{}: max |z| H {:.2}, utility {:.2}/{:.2}", fx.name, hc.z.abs(), uz[0], uz[1]);
        let swapped = CumulativeBehavior {
            components: vec![h.components[1].clone(), h.components[0].clone()],
        };
        if max_gap(&h.components[0], &h.components[1]) > 1e-3 {
            let neg = check_h_curves(&report, &swapped).unwrap();
            ok &= neg.z.abs() > 3.0;
            note.push_str(&format!(", swapped-H control |z| {:.1}", neg.z.abs()));
        }
        notes.push(note);
    }
    let took = start.elapsed();
    ok &= took < Duration::from_secs(60);
    suite.record("C10", "Monte-Carlo agreement", ok, format!("n=50, 1e5 trials; {}", notes.join("; ")), took);
}

fn max_gap(a: &PLFn, b: &PLFn) -> f64 {
    (0..=100).map(|i| (a.eval(i as f64 / 100.0) - b.eval(i as f64 / 100.0)).abs()).fold(0.0, f64::max)
}

fn main() -> ExitCode {
    let mut suite = Suite { failed: 0 };
    let inst = random_instances(1, 500);
    equilibrium_characterization(&mut suite, &inst);
    value_conservation(&mut suite, &inst);
    dominance_bounds(&mut suite);
    let outs = fptas_against_grid(&mut suite);
    lift_check(&mut suite, &outs);
    safety_construction(&mut suite);
    simple_threshold_failure(&mut suite);
    rounding(&mut suite);
    small_n_example(&mut suite);
    monte_carlo(&mut suite);
    if suite.failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", suite.failed);
        ExitCode::FAILURE
    }
}
