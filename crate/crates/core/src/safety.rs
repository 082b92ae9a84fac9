//! First-mover analysis: the proportional benchmark, the geometric staircase
//! with a constant-factor safety guarantee, certified safety-level intervals
//! and the simple-threshold counterexample.

use serde::{Deserialize, Serialize};

use crate::bestresponse::{fptas_best_response_with, FptasOptions};
use crate::equilibrium::r_worst;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::stepcalc::{stretch, StepFn};

/// Budget tolerance for adversaries.
pub const BUDGET_TOL: f64 = 1e-9;

fn check_budgets(t_j: f64, t_mj: f64) -> Result<()> {
    for (t, who) in [(t_j, "designer"), (t_mj, "opponent")] {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("{who} budget {t} must be finite and non-negative")));
        }
    }
    Ok(())
}

/// `(t_j/(t_j+t_mj))·∫v`, an upper bound on every safety level.
pub fn benchmark(v: &StepFn, t_j: f64, t_mj: f64) -> Result<f64> {
    check_budgets(t_j, t_mj)?;
    if t_j + t_mj == 0.0 {
        return Err(Error::Domain("both budgets are zero".into()));
    }
    Ok(t_j / (t_j + t_mj) * v.budget())
}

/// `sl(p) = 8 − 6p + 4√((1−p)(4−2p))`: benchmark over guaranteed floor at
/// budget share `p = t_j/(t_j+t_mj)`.
pub fn sl_factor(p: f64) -> f64 {
    8.0 - 6.0 * p + 4.0 * ((1.0 - p) * (4.0 - 2.0 * p)).sqrt()
}

/// Height multiplier `C` of the staircase.
pub fn staircase_constant(t_j: f64, t_mj: f64) -> f64 {
    ((4.0 * t_mj * (2.0 * t_j + 4.0 * t_mj)).sqrt() + 2.0 * t_j + 4.0 * t_mj) / (t_j + t_mj)
}

/// One stair: value threshold end `q`, value mass `s`, height `c`, width `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stair {
    pub q: f64,
    pub s: f64,
    pub c: f64,
    pub a: f64,
}

/// Stairs of the staircase construction, zero-mass stairs dropped.
pub fn staircase_stairs(v: &StepFn, t_j: f64, t_mj: f64) -> Result<Vec<Stair>> {
    check_budgets(t_j, t_mj)?;
    if !(t_j > 0.0) {
        return Err(Error::Domain("designer budget must be positive".into()));
    }
    let k = v.budget();
    if !(k > 0.0) {
        return Err(Error::Degenerate("value function is identically zero".into()));
    }
    let m = v.max_value();
    let min_pos = v.levels().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
    let big_c = staircase_constant(t_j, t_mj);
    let mut stairs = Vec::new();
    let mut prev_v = 0.0;
    let mut i = 0i32;
    loop {
        let level = m / 2f64.powi(i);
        let q = v.inv(level);
        let vq = v.integral_to(q);
        let s = vq - prev_v;
        if s > 0.0 {
            let c = big_c * m * (t_j + t_mj) / (k * 2f64.powi(i));
            stairs.push(Stair {
                q,
                s,
                c,
                a: t_j * s / (k * c),
            });
        }
        prev_v = vq;
        if level <= min_pos {
            break;
        }
        i += 1;
    }
    Ok(stairs)
}

/// Staircase strategy guaranteeing `benchmark/sl(p) ≥ benchmark/16`.
pub fn construct_16competitive(v: &StepFn, t_j: f64, t_mj: f64) -> Result<StepFn> {
    let stairs = staircase_stairs(v, t_j, t_mj)?;
    let mut pieces = Vec::with_capacity(stairs.len() + 1);
    let mut end = 0.0;
    for st in &stairs {
        end += st.a;
        pieces.push((end.min(1.0), st.c));
    }
    pieces.push((1.0, 0.0));
    StepFn::from_pieces(&pieces)
}

/// Certified interval for the safety level of a fixed strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub strategy: StepFn,
    pub total_value: f64,
    pub benchmark: f64,
    pub sl_lower: f64,
    pub sl_upper: f64,
    pub guarantee: f64,
    pub adversaries_tested: usize,
    /// Designer worst-equilibrium utility against each adversary: the
    /// approximate best response first, then the mimic, then the extras.
    pub adversary_utilities: Vec<f64>,
    /// Adversary attaining `sl_upper`.
    pub worst_adversary: StepFn,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SafetyOptions {
    pub fptas: FptasOptions,
    /// Runs the adversary evaluations.
    pub exec: Execution,
}

pub fn safety_eval(
    x_j: &StepFn,
    v: &StepFn,
    t_j: f64,
    t_mj: f64,
    eps: f64,
    extra: &[StepFn],
) -> Result<SafetyReport> {
    safety_eval_with(x_j, v, t_j, t_mj, eps, extra, SafetyOptions::default())
}

pub fn safety_eval_with(
    x_j: &StepFn,
    v: &StepFn,
    t_j: f64,
    t_mj: f64,
    eps: f64,
    extra: &[StepFn],
    opts: SafetyOptions,
) -> Result<SafetyReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps {eps} outside (0,1)")));
    }
    check_budgets(t_j, t_mj)?;
    let bench = benchmark(v, t_j, t_mj)?;
    let k = v.budget();
    for (i, a) in extra.iter().enumerate() {
        if a.budget() > t_mj + BUDGET_TOL {
            return Err(Error::Validation(format!(
                "adversary {i} spends {} over the opponent budget {t_mj}",
                a.budget()
            )));
        }
    }

    let (opp, sl_lower) = if t_mj == 0.0 {
        let u = r_worst(x_j, &StepFn::zero(), v);
        (StepFn::zero(), u)
    } else if k == 0.0 {
        (StepFn::zero(), 0.0)
    } else {
        let run = fptas_best_response_with(x_j, v, t_mj, t_j, eps, opts.fptas)?;
        let u_opp = run.result.utility;
        (run.result.strategy, (k - u_opp / (1.0 - eps)).max(0.0))
    };

    let mut advs = vec![opp];
    if t_j > 0.0 && t_mj > 0.0 && !x_j.is_zero() {
        advs.push(stretch(x_j, t_mj / t_j, 0.0)?);
    } else {
        advs.push(StepFn::constant(t_mj)?);
    }
    advs.extend(extra.iter().cloned());
    let utils = opts.exec.map(&advs, |a| r_worst(x_j, a, v));
    let (mut best_i, mut sl_upper) = (0, f64::INFINITY);
    for (i, &u) in utils.iter().enumerate() {
        if u < sl_upper {
            sl_upper = u;
            best_i = i;
        }
    }
    Ok(SafetyReport {
        strategy: x_j.clone(),
        total_value: k,
        benchmark: bench,
        sl_lower: sl_lower.min(sl_upper),
        sl_upper,
        guarantee: bench / 16.0,
        adversaries_tested: advs.len(),
        adversary_utilities: utils,
        worst_adversary: advs.swap_remove(best_i),
    })
}

/// Width `r` of a single positive stair of height `t_j/r`.
pub fn threshold_width(x_j: &StepFn, t_j: f64) -> Result<f64> {
    let pos: Vec<(f64, f64, f64)> = x_j.pieces().filter(|p| p.2 > 0.0).collect();
    if pos.len() != 1 || pos[0].0 != 0.0 {
        return Err(Error::Domain("not a simple threshold: needs exactly one positive stair".into()));
    }
    let (_, r, h) = pos[0];
    if ((h * r) - t_j).abs() > 1e-9 * t_j.max(1.0) {
        return Err(Error::Domain(format!(
            "not a simple threshold: height {h} times width {r} differs from budget {t_j}"
        )));
    }
    Ok(r)
}

/// Single stair of width `r`, height `t_j/r`.
pub fn simple_threshold(r: f64, t_j: f64) -> Result<StepFn> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("threshold width {r} outside (0,1]")));
    }
    StepFn::stair(t_j / r, r)
}

/// Adversary that matches a simple threshold's height on a proportionally
/// wider interval.
pub fn simple_threshold_adversary(x_j: &StepFn, t_j: f64, t_mj: f64) -> Result<StepFn> {
    check_budgets(t_j, t_mj)?;
    if !(t_j > 0.0) {
        return Err(Error::Domain("designer budget must be positive".into()));
    }
    let r = threshold_width(x_j, t_j)?;
    let width = (t_mj / t_j * r).min(1.0);
    if width == 0.0 {
        return Ok(StepFn::zero());
    }
    StepFn::stair(t_j / r, width)
}

/// Result of a scan over simple thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub width: f64,
    pub report: SafetyReport,
}

/// The simple threshold with the largest certified `sl_upper` among `widths`.
pub fn best_simple_threshold(
    v: &StepFn,
    t_j: f64,
    t_mj: f64,
    eps: f64,
    widths: &[f64],
    opts: SafetyOptions,
) -> Result<ThresholdScan> {
    let reports = opts.exec.map(widths, |&r| -> Result<ThresholdScan> {
        let x = simple_threshold(r, t_j)?;
        let adv = simple_threshold_adversary(&x, t_j, t_mj)?;
        let inner = SafetyOptions {
            exec: Execution::Sequential,
            fptas: FptasOptions {
                exec: Execution::Sequential,
                ..opts.fptas
            },
        };
        let report = safety_eval_with(&x, v, t_j, t_mj, eps, &[adv], inner)?;
        Ok(ThresholdScan { width: r, report })
    });
    let mut best: Option<ThresholdScan> = None;
    for s in reports {
        let s = s?;
        if best.as_ref().is_none_or(|b| s.report.sl_upper > b.report.sl_upper) {
            best = Some(s);
        }
    }
    best.ok_or_else(|| Error::Domain("no threshold widths given".into()))
}

/// Step discretization of `v(q) = min(M, 1/q)` with `per_octave` pieces per
/// doubling of `q`; each piece takes the value at its left end.
pub fn harmonic_value(ln_m: f64, per_octave: usize) -> Result<StepFn> {
    if !(ln_m >= 0.0) || !ln_m.is_finite() {
        return Err(Error::Domain(format!("log-height {ln_m} must be non-negative")));
    }
    if per_octave == 0 {
        return Err(Error::Domain("need at least one piece per octave".into()));
    }
    let m = ln_m.exp();
    let ratio = 2f64.powf(1.0 / per_octave as f64);
    let mut pieces = Vec::new();
    let mut q = 1.0 / m;
    pieces.push((q, m));
    while q < 1.0 {
        let next = (q * ratio).min(1.0);
        pieces.push((next, 1.0 / q));
        q = next;
    }
    StepFn::from_pieces(&pieces)
}
