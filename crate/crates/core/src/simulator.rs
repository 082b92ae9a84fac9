//! Monte-Carlo play of the contest game: quantiles are drawn uniformly,
//! contestants pick a contest from the mixed strategy, and each contest pays
//! its prizes by quantile rank.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{CumulativeBehavior, MixedStrategy};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rounding::PrizeVector;
use crate::stepcalc::{stieltjes, PLFn, StepFn};

/// Trials aggregated per work unit; fixed so that results do not depend on
/// scheduling.
const BLOCK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub bins: usize,
}

impl TrialConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.trials == 0 || self.bins == 0 {
            return Err(Error::Validation(format!(
                "n, trials and bins must be positive (got {}, {}, {})",
                self.n, self.trials, self.bins
            )));
        }
        Ok(())
    }
}

/// Aggregated statistics of a simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: TrialConfig,
    /// Per-contest mean and standard error of the per-trial designer
    /// utility `Σ_{i in contest} v(q_i)`.
    pub utility_mean: Vec<f64>,
    pub utility_se: Vec<f64>,
    /// `bins + 1` equally spaced quantile edges.
    pub edges: Vec<f64>,
    /// `[contest][bin]` participants counted.
    pub counts: Vec<Vec<u64>>,
    /// `[contest][bin]` mean prize of participants (0 when empty).
    pub prize_mean: Vec<Vec<f64>>,
    pub prize_se: Vec<Vec<f64>>,
    /// `[contest][edge]` empirical `Pr[q ≤ edge, joins contest]`.
    pub h_curve: Vec<Vec<f64>>,
    /// `[contest][edge]` binomial standard error of `h_curve`.
    pub h_se: Vec<Vec<f64>>,
    /// Adjacent equal quantiles within one contest, broken by index.
    pub ties: u64,
}

#[derive(Clone)]
struct Acc {
    util: Vec<f64>,
    util_sq: Vec<f64>,
    counts: Vec<Vec<u64>>,
    prize: Vec<Vec<f64>>,
    prize_sq: Vec<Vec<f64>>,
    ties: u64,
}

impl Acc {
    fn new(m: usize, bins: usize) -> Self {
        Acc {
            util: vec![0.0; m],
            util_sq: vec![0.0; m],
            counts: vec![vec![0; bins]; m],
            prize: vec![vec![0.0; bins]; m],
            prize_sq: vec![vec![0.0; bins]; m],
            ties: 0,
        }
    }

    fn merge(&mut self, o: &Acc) {
        for j in 0..self.util.len() {
            self.util[j] += o.util[j];
            self.util_sq[j] += o.util_sq[j];
            for b in 0..self.counts[j].len() {
                self.counts[j][b] += o.counts[j][b];
                self.prize[j][b] += o.prize[j][b];
                self.prize_sq[j][b] += o.prize_sq[j][b];
            }
        }
        self.ties += o.ties;
    }
}

fn sample_contest(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

struct Game<'a> {
    prizes: &'a [PrizeVector],
    strategy: &'a MixedStrategy,
    values: &'a [StepFn],
    cfg: TrialConfig,
}

impl Game<'_> {
    fn trial(&self, t: usize, acc: &mut Acc, joined: &mut [Vec<(f64, usize)>]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(t as u64);
        joined.iter_mut().for_each(Vec::clear);
        for i in 0..self.cfg.n {
            let q: f64 = rng.random();
            let u: f64 = rng.random();
            let j = sample_contest(self.strategy.probs_at(q), u);
            joined[j].push((q, i));
        }
        let bins = self.cfg.bins;
        for (j, list) in joined.iter_mut().enumerate() {
            list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let w = self.prizes[j].prizes();
            let mut u = 0.0;
            for (rank, &(q, _)) in list.iter().enumerate() {
                let prize = w.get(rank).copied().unwrap_or(0.0);
                let b = ((q * bins as f64) as usize).min(bins - 1);
                acc.counts[j][b] += 1;
                acc.prize[j][b] += prize;
                acc.prize_sq[j][b] += prize * prize;
                u += self.values[j].at(q);
            }
            acc.ties += list.windows(2).filter(|p| p[0].0 == p[1].0).count() as u64;
            acc.util[j] += u;
            acc.util_sq[j] += u * u;
        }
    }
}

/// Plays `cfg.trials` independent rounds of the game.
pub fn run_goc(
    prizes: &[PrizeVector],
    strategy: &MixedStrategy,
    values: &[StepFn],
    cfg: TrialConfig,
) -> Result<SimReport> {
    run_goc_with(prizes, strategy, values, cfg, Execution::default())
}

pub fn run_goc_with(
    prizes: &[PrizeVector],
    strategy: &MixedStrategy,
    values: &[StepFn],
    cfg: TrialConfig,
    exec: Execution,
) -> Result<SimReport> {
    cfg.validate()?;
    let m = prizes.len();
    if m == 0 || strategy.contests() != m || values.len() != m {
        return Err(Error::Validation(format!(
            "{m} prize vectors, {} strategy contests, {} value functions",
            strategy.contests(),
            values.len()
        )));
    }
    if let Some(j) = prizes.iter().position(|w| w.n() != cfg.n) {
        return Err(Error::Validation(format!(
            "contest {j} has {} prizes but n = {}",
            prizes[j].n(),
            cfg.n
        )));
    }
    let game = Game {
        prizes,
        strategy,
        values,
        cfg,
    };
    let blocks = cfg.trials.div_ceil(BLOCK);
    let parts = exec.map_range(blocks, |b| {
        let mut acc = Acc::new(m, cfg.bins);
        let mut joined = vec![Vec::with_capacity(cfg.n); m];
        for t in b * BLOCK..((b + 1) * BLOCK).min(cfg.trials) {
            game.trial(t, &mut acc, &mut joined);
        }
        acc
    });
    let mut acc = Acc::new(m, cfg.bins);
    for p in &parts {
        acc.merge(p);
    }
    Ok(report(acc, cfg))
}

fn mean_se(sum: f64, sq: f64, k: f64) -> (f64, f64) {
    if k == 0.0 {
        return (0.0, 0.0);
    }
    let mean = sum / k;
    if k < 2.0 {
        return (mean, 0.0);
    }
    let var = ((sq - k * mean * mean) / (k - 1.0)).max(0.0);
    (mean, (var / k).sqrt())
}

fn report(acc: Acc, cfg: TrialConfig) -> SimReport {
    let m = acc.util.len();
    let trials = cfg.trials as f64;
    let total = (cfg.n * cfg.trials) as f64;
    let mut utility_mean = Vec::with_capacity(m);
    let mut utility_se = Vec::with_capacity(m);
    let mut prize_mean = Vec::with_capacity(m);
    let mut prize_se = Vec::with_capacity(m);
    let mut h_curve = Vec::with_capacity(m);
    let mut h_se = Vec::with_capacity(m);
    for j in 0..m {
        let (mu, se) = mean_se(acc.util[j], acc.util_sq[j], trials);
        utility_mean.push(mu);
        utility_se.push(se);
        let (pm, ps): (Vec<f64>, Vec<f64>) = (0..cfg.bins)
            .map(|b| mean_se(acc.prize[j][b], acc.prize_sq[j][b], acc.counts[j][b] as f64))
            .unzip();
        prize_mean.push(pm);
        prize_se.push(ps);
        let mut run = 0u64;
        let mut hc = vec![0.0];
        let mut hs = vec![0.0];
        for b in 0..cfg.bins {
            run += acc.counts[j][b];
            let p = run as f64 / total;
            hc.push(p);
            hs.push((p * (1.0 - p) / total).sqrt());
        }
        h_curve.push(hc);
        h_se.push(hs);
    }
    SimReport {
        config: cfg,
        utility_mean,
        utility_se,
        edges: (0..=cfg.bins).map(|b| b as f64 / cfg.bins as f64).collect(),
        counts: acc.counts,
        prize_mean,
        prize_se,
        h_curve,
        h_se,
        ties: acc.ties,
    }
}

/// Outcome of a z-test against an analytic target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZCheck {
    pub target: f64,
    pub observed: f64,
    pub se: f64,
    pub z: f64,
    pub pass: bool,
}

/// Largest z-score magnitude accepted.
pub const Z_LIMIT: f64 = 3.0;

fn z_check(target: f64, observed: f64, se: f64) -> ZCheck {
    let diff = observed - target;
    let z = if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    ZCheck {
        target,
        observed,
        se,
        z,
        pass: z.abs() <= Z_LIMIT,
    }
}

/// Compares contest `j`'s simulated designer utility with `n·∫v dH`.
pub fn check_designer_utility(report: &SimReport, j: usize, v: &StepFn, h: &PLFn, n: usize) -> ZCheck {
    let target = n as f64 * stieltjes(v, h);
    z_check(target, report.utility_mean[j], report.utility_se[j])
}

/// Compares every empirical `H_j` at every bin edge with the analytic curves;
/// returns the check with the largest `|z|`.
pub fn check_h_curves(report: &SimReport, h: &CumulativeBehavior) -> Result<ZCheck> {
    if h.components.len() != report.h_curve.len() {
        return Err(Error::Validation("behaviour and report cover different contests".into()));
    }
    let mut worst: Option<ZCheck> = None;
    for (j, comp) in h.components.iter().enumerate() {
        for (e, &q) in report.edges.iter().enumerate() {
            let c = z_check(comp.eval(q), report.h_curve[j][e], report.h_se[j][e]);
            if worst.is_none_or(|w| c.z.abs() > w.z.abs()) {
                worst = Some(c);
            }
        }
    }
    Ok(worst.expect("at least one edge"))
}
