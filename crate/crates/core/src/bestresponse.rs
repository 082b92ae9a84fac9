//! Designer best responses against a fixed (bundled) opponent: an exhaustive
//! grid oracle for small opponents, the dynamic-programming approximation
//! scheme, and the stretching constructions.

use serde::{Deserialize, Serialize};

use crate::equilibrium::r_best;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::stepcalc::{stretch, CumValue, StepFn};

/// Largest opponent level count accepted by the grid oracle.
pub const MAX_GRID_LEVELS: usize = 4;

/// Largest number of hist entries the DP may allocate.
pub const MAX_DP_ENTRIES: usize = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseMethod {
    Exact,
    Fptas,
    Stretch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseResult {
    pub strategy: StepFn,
    /// Best-equilibrium utility against the opponent, recomputed exactly.
    pub utility: f64,
    pub method: ResponseMethod,
    /// Resolution slack of the grid oracle (0 for other methods).
    pub slack: f64,
}

fn check_budget(t: f64, what: &str) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("{what} budget {t} must be finite and non-negative")));
    }
    Ok(())
}

fn finish(strategy: StepFn, x_mj: &StepFn, v: &StepFn, method: ResponseMethod, slack: f64) -> ResponseResult {
    let utility = r_best(&strategy, x_mj, v);
    ResponseResult {
        strategy,
        utility,
        method,
        slack,
    }
}

/// Exhaustive best response over strategies taking the opponent's levels,
/// with breakpoints on a uniform grid of step `1/grid`.
pub fn exact_best_response_grid(x_mj: &StepFn, v: &StepFn, t_j: f64, grid: usize) -> Result<ResponseResult> {
    exact_best_response_grid_with(x_mj, v, t_j, grid, Execution::default())
}

pub fn exact_best_response_grid_with(
    x_mj: &StepFn,
    v: &StepFn,
    t_j: f64,
    grid: usize,
    exec: Execution,
) -> Result<ResponseResult> {
    if grid < 10 {
        return Err(Error::Domain(format!("grid {grid} must be at least 10")));
    }
    check_budget(t_j, "designer")?;
    let cs: Vec<f64> = x_mj.levels().collect();
    let n = cs.len();
    if n > MAX_GRID_LEVELS {
        return Err(Error::TooLarge(format!(
            "opponent has {n} levels; the grid oracle accepts at most {MAX_GRID_LEVELS}"
        )));
    }
    let slack = v.max_value() * n as f64 / grid as f64;
    if t_j == 0.0 {
        return Ok(finish(StepFn::zero(), x_mj, v, ResponseMethod::Exact, slack));
    }
    if n == 0 {
        return Ok(finish(StepFn::constant(t_j)?, x_mj, v, ResponseMethod::Exact, slack));
    }

    let mut offs = vec![0.0];
    offs.extend(cs.iter().map(|&c| x_mj.inv(c)));
    let d: Vec<f64> = (0..n)
        .map(|i| cs[i] - if i + 1 < n { cs[i + 1] } else { 0.0 })
        .collect();
    let cv = CumValue::new(v);
    let g = grid as f64;
    // gap[i][b]: value lost to the opponent's i-th segment when B_i = b/grid.
    let gap: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..=grid)
                .map(|b| {
                    let x = b as f64 / g;
                    cv.at(offs[i + 1] + x) - cv.at(offs[i] + x)
                })
                .collect()
        })
        .collect();

    // Each gap term is non-increasing in its own B_i, so the last breakpoint
    // is always pushed to its largest feasible grid point.
    let search = GridSearch {
        n,
        grid,
        g,
        t_j,
        d: &d,
        gap: &gap,
    };
    let search_from = |b1: usize| -> Option<(f64, [usize; MAX_GRID_LEVELS])> {
        let mut best = None;
        let mut bs = [0usize; MAX_GRID_LEVELS];
        if n == 1 {
            bs[0] = search.last_max(0.0)?;
            return Some((gap[0][bs[0]], bs));
        }
        let sp = d[0] * b1 as f64 / g;
        if sp > t_j {
            return None;
        }
        bs[0] = b1;
        search.rec(1, b1, sp, gap[0][b1], &mut bs, &mut best);
        best
    };

    let firsts: Vec<usize> = if n == 1 { vec![0] } else { (0..=grid).collect() };
    let found = exec.map(&firsts, |&b1| search_from(b1));
    let mut best: Option<(f64, [usize; MAX_GRID_LEVELS])> = None;
    for (l, bs) in found.into_iter().flatten() {
        if best.is_none_or(|(bl, _)| l < bl) {
            best = Some((l, bs));
        }
    }
    let (_, bs) = best.ok_or_else(|| Error::Infeasible("no feasible grid point".into()))?;
    let mut pieces: Vec<(f64, f64)> = (0..n).map(|i| (bs[i] as f64 / g, cs[i])).collect();
    pieces.push((1.0, 0.0));
    let strategy = StepFn::from_pieces(&pieces)?;
    Ok(finish(strategy, x_mj, v, ResponseMethod::Exact, slack))
}

struct GridSearch<'a> {
    n: usize,
    grid: usize,
    g: f64,
    t_j: f64,
    d: &'a [f64],
    gap: &'a [Vec<f64>],
}

impl GridSearch<'_> {
    fn last_max(&self, spent: f64) -> Option<usize> {
        let room = self.t_j - spent;
        if room < 0.0 {
            return None;
        }
        Some(((room * self.g / self.d[self.n - 1] + 1e-9).floor() as usize).min(self.grid))
    }

    fn rec(
        &self,
        i: usize,
        prev: usize,
        spent: f64,
        lost: f64,
        bs: &mut [usize; MAX_GRID_LEVELS],
        best: &mut Option<(f64, [usize; MAX_GRID_LEVELS])>,
    ) {
        if i + 1 == self.n {
            let Some(bn) = self.last_max(spent) else { return };
            if bn < prev {
                return;
            }
            bs[i] = bn;
            let total = lost + self.gap[i][bn];
            if best.is_none_or(|(l, _)| total < l) {
                *best = Some((total, *bs));
            }
            return;
        }
        for b in prev..=self.grid {
            let sp = spent + self.d[i] * b as f64 / self.g;
            if sp > self.t_j {
                break;
            }
            bs[i] = b;
            self.rec(i + 1, b, sp, lost + self.gap[i][b], bs, best);
        }
    }
}

/// How the DP groups prize levels into stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DpMode {
    /// One stage per geometric level, quantization per level: the textbook
    /// table of size (p+1)(ρ_v+1)(ρ_t+1). Only practical for coarse eps.
    Literal,
    /// One stage per opponent band (levels sharing the opponent offset), at
    /// the cheapest level of the band, quantization per band, and
    /// dominated-state pruning.
    #[default]
    Banded,
}

/// A DP stage: prize level and the opponent mass strictly above it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub level: f64,
    pub offset: f64,
}

/// Quantization parameters of one DP call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FptasParams {
    pub eps: f64,
    pub eps_prime: f64,
    pub lambda_x: f64,
    /// Opponent's top level `x_mj(0)`.
    pub top: f64,
    /// Number of geometric levels.
    pub p: usize,
    pub levels: Vec<f64>,
    pub stages: Vec<Stage>,
    pub k_star: f64,
    pub lambda_v: f64,
    pub rho_v: usize,
    pub lambda_t: f64,
    pub rho_t: usize,
    pub mode: DpMode,
}

impl FptasParams {
    pub fn new(x_mj: &StepFn, t_j: f64, eps: f64, k_star: f64, mode: DpMode) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Domain(format!("eps {eps} outside (0,1)")));
        }
        if !(t_j > 0.0) || !t_j.is_finite() {
            return Err(Error::Domain(format!("designer budget {t_j} must be positive")));
        }
        if !(k_star > 0.0) {
            return Err(Error::Domain(format!("value target {k_star} must be positive")));
        }
        let top = x_mj.max_value();
        if !(top > 0.0) {
            return Err(Error::Degenerate("opponent offers no prizes".into()));
        }
        let ep = eps / 4.0;
        let lambda_x = ep * t_j;
        let raw = ((top / lambda_x).ln() / ep.ln_1p()).floor() + 1.0;
        if raw > 1e7 {
            return Err(Error::TooLarge(format!("{raw} geometric levels")));
        }
        let p = raw.max(1.0) as usize;
        let levels: Vec<f64> = (0..p).map(|i| top * (1.0 + ep).powi(-(i as i32))).collect();
        let all: Vec<Stage> = levels
            .iter()
            .map(|&c| Stage {
                level: c,
                offset: x_mj.inv_strict(c),
            })
            .collect();
        let stages = match mode {
            DpMode::Literal => all,
            DpMode::Banded => {
                let mut out: Vec<Stage> = Vec::new();
                for s in all {
                    match out.last_mut() {
                        Some(last) if last.offset == s.offset => *last = s,
                        _ => out.push(s),
                    }
                }
                out
            }
        };
        let segs = stages.len() as f64;
        let lambda_v = ep * k_star / segs;
        let rho_v = ((2.0 * k_star / lambda_v) * (1.0 - 1e-12)).ceil() as usize;
        let lambda_t = ep * t_j / segs;
        let rho_t = ((1.0 + ep).powi(3) * t_j / lambda_t * (1.0 + 1e-12)).floor() as usize;
        Ok(FptasParams {
            eps,
            eps_prime: ep,
            lambda_x,
            top,
            p,
            levels,
            stages,
            k_star,
            lambda_v,
            rho_v,
            lambda_t,
            rho_t,
            mode,
        })
    }

    /// Table size `(stages+1)(ρ_v+1)(ρ_t+1)`.
    pub fn state_count(&self) -> usize {
        (self.stages.len() + 1) * (self.rho_v + 1) * (self.rho_t + 1)
    }
}

/// Result of one DP call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpOutcome {
    /// Right endpoint `B_i` of every stage, non-decreasing.
    pub breakpoints: Vec<f64>,
    pub levels: Vec<f64>,
    pub r_star: usize,
    /// `r*·λ_v`.
    pub utility: f64,
    pub k_star: f64,
}

/// Minimal-endpoint DP over (stage, value units, budget units), followed by
/// recovery of the best feasible terminal state.
/// Clears every state beaten by another with at least its value units, at
/// most its cost units and an endpoint no later. Such a state reaches any
/// continuation of the beaten one at no greater width, so the optimum is kept.
fn prune_dominated(table: &mut [f64], rho_v: usize, w: usize) {
    let mut above = vec![f64::INFINITY; w];
    for r in (0..=rho_v).rev() {
        let row = &mut table[r * w..(r + 1) * w];
        let mut run = f64::INFINITY;
        for s in 0..w {
            let b = row[s];
            if b >= above[s] || b >= run {
                row[s] = f64::INFINITY;
            } else {
                run = b;
            }
            above[s] = above[s].min(run);
        }
    }
}

pub fn dp_inner(x_mj: &StepFn, v: &StepFn, t_j: f64, params: &FptasParams) -> Result<DpOutcome> {
    let _ = (x_mj, t_j);
    let cv = CumValue::new(v);
    let total = cv.total();
    let w = params.rho_t + 1;
    let h = (params.rho_v + 1) * w;
    let stages = params.stages.len();
    if stages.saturating_mul(h) > MAX_DP_ENTRIES {
        return Err(Error::TooLarge(format!(
            "DP needs {} entries per stage over {stages} stages",
            h
        )));
    }
    let lv = params.lambda_v;
    let lt = params.lambda_t;
    let prune = params.mode == DpMode::Banded;
    let mut cur = vec![f64::INFINITY; h];
    cur[0] = 0.0;
    let mut hists: Vec<Vec<u32>> = Vec::with_capacity(stages);
    for st in &params.stages {
        let mut next = vec![f64::INFINITY; h];
        let mut hist = vec![u32::MAX; h];
        if prune {
            prune_dominated(&mut cur, params.rho_v, w);
        }
        for r in 0..=params.rho_v {
            let row = &cur[r * w..(r + 1) * w];
            for s in 0..w {
                let bstar = row[s];
                if !(bstar <= 1.0) {
                    continue;
                }
                let y0 = bstar + st.offset;
                let v0 = cv.at(y0);
                let room = total - v0;
                let mut hint = cv.piece_of(y0);
                for r2 in r..=params.rho_v {
                    let gain = (r2 - r) as f64 * lv;
                    if gain > room {
                        break;
                    }
                    let delta = if r2 == r {
                        0.0
                    } else {
                        (cv.inverse_seek(v0 + gain, &mut hint) - y0).max(0.0)
                    };
                    let units = (delta * st.level / lt).ceil();
                    if s as f64 + units > params.rho_t as f64 {
                        break;
                    }
                    let s2 = s + units as usize;
                    let nb = bstar + delta;
                    let idx = r2 * w + s2;
                    if next[idx] > nb {
                        next[idx] = nb;
                        hist[idx] = (r * w + s) as u32;
                    }
                }
            }
        }
        cur = next;
        hists.push(hist);
    }

    let mut end = None;
    'outer: for r in (0..=params.rho_v).rev() {
        for s in (0..w).rev() {
            if cur[r * w + s] <= 1.0 {
                end = Some(r * w + s);
                break 'outer;
            }
        }
    }
    let Some(end) = end else {
        return Ok(DpOutcome {
            breakpoints: vec![0.0; stages],
            levels: params.stages.iter().map(|s| s.level).collect(),
            r_star: 0,
            utility: 0.0,
            k_star: params.k_star,
        });
    };
    let mut path = vec![0usize; stages + 1];
    path[stages] = end;
    for i in (1..=stages).rev() {
        path[i - 1] = hists[i - 1][path[i]] as usize;
    }
    // Replay the transitions to recover the endpoints.
    let mut breakpoints = Vec::with_capacity(stages);
    let mut b = 0.0;
    for i in 1..=stages {
        let (r0, r1) = (path[i - 1] / w, path[i] / w);
        if r1 > r0 {
            let st = params.stages[i - 1];
            let y0 = b + st.offset;
            let v0 = cv.at(y0);
            b += (cv.inverse_clamped(v0 + (r1 - r0) as f64 * lv) - y0).max(0.0);
        }
        breakpoints.push(b);
    }
    let r_star = end / w;
    Ok(DpOutcome {
        breakpoints,
        levels: params.stages.iter().map(|s| s.level).collect(),
        r_star,
        utility: r_star as f64 * lv,
        k_star: params.k_star,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FptasOptions {
    pub mode: DpMode,
    pub exec: Execution,
}

/// Full record of an approximation-scheme run.
#[derive(Clone, Debug, PartialEq)]
pub struct FptasRun {
    pub result: ResponseResult,
    /// Winning DP call, if any was made.
    pub best: Option<DpOutcome>,
    /// Parameters of every DP call, in ladder order.
    pub params: Vec<FptasParams>,
}

/// `(1−eps)`-approximate best response.
pub fn fptas_best_response(x_mj: &StepFn, v: &StepFn, t_j: f64, t_mj: f64, eps: f64) -> Result<ResponseResult> {
    Ok(fptas_best_response_with(x_mj, v, t_j, t_mj, eps, FptasOptions::default())?.result)
}

pub fn fptas_best_response_with(
    x_mj: &StepFn,
    v: &StepFn,
    t_j: f64,
    t_mj: f64,
    eps: f64,
    opts: FptasOptions,
) -> Result<FptasRun> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps {eps} outside (0,1)")));
    }
    if !(t_j > 0.0) || !t_j.is_finite() {
        return Err(Error::Domain(format!("designer budget {t_j} must be positive")));
    }
    check_budget(t_mj, "opponent")?;
    let k = v.budget();
    if !(k > 0.0) {
        return Err(Error::Degenerate("value function is identically zero".into()));
    }
    if x_mj.is_zero() {
        let result = finish(StepFn::constant(t_j)?, x_mj, v, ResponseMethod::Fptas, 0.0);
        return Ok(FptasRun {
            result,
            best: None,
            params: Vec::new(),
        });
    }
    let mut ladder = Vec::new();
    let mut mu = t_j / (t_j + t_mj);
    while mu <= 1.0 + 1e-12 {
        ladder.push(mu * k);
        mu *= 2.0;
    }
    let params: Vec<FptasParams> = ladder
        .iter()
        .map(|&ks| FptasParams::new(x_mj, t_j, eps, ks, opts.mode))
        .collect::<Result<_>>()?;
    let outs = opts.exec.map(&params, |p| dp_inner(x_mj, v, t_j, p));
    let mut best: Option<DpOutcome> = None;
    for o in outs {
        let o = o?;
        if best.as_ref().is_none_or(|b| o.utility > b.utility) {
            best = Some(o);
        }
    }
    let best = best.expect("ladder is non-empty");
    let shrink = (1.0 - eps / 4.0).powi(3);
    let mut pieces: Vec<(f64, f64)> = best
        .breakpoints
        .iter()
        .zip(&best.levels)
        .map(|(&b, &c)| (b * shrink, c))
        .collect();
    pieces.push((1.0, 0.0));
    let strategy = StepFn::from_pieces(&pieces)?;
    let result = finish(strategy, x_mj, v, ResponseMethod::Fptas, 0.0);
    Ok(FptasRun {
        result,
        best: Some(best),
        params,
    })
}

/// The opponent's strategy stretched by `t_j/t_mj`.
pub fn stretch_response(x_mj: &StepFn, v: &StepFn, t_j: f64, t_mj: f64) -> Result<ResponseResult> {
    check_budget(t_j, "designer")?;
    check_budget(t_mj, "opponent")?;
    let strategy = if t_mj == 0.0 || x_mj.is_zero() {
        StepFn::constant(t_j)?
    } else if t_j == 0.0 {
        StepFn::zero()
    } else {
        stretch(x_mj, t_j / t_mj, 0.0)?
    };
    Ok(finish(strategy, x_mj, v, ResponseMethod::Stretch, 0.0))
}

/// `x̂(h/(1−eps)) + eps·t_j` on `[0, 1−eps]`, `eps·t_j` beyond: turns a
/// best-equilibrium guarantee into a worst-equilibrium one.
pub fn worst_to_best_lift(xhat: &StepFn, t_j: f64, eps: f64) -> Result<StepFn> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps {eps} outside (0,1)")));
    }
    check_budget(t_j, "designer")?;
    stretch(xhat, 1.0 - eps, eps * t_j)
}
