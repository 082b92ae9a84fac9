//! Rank-by-skill prize vectors: their interim allocations, and the rounding
//! of an abstract interim allocation to an n-prize structure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stepcalc::{stretch, StepFn};

/// Default resolution of the step envelopes of a prize vector.
pub const DEFAULT_ENVELOPE_PIECES: usize = 4096;

/// Binomial terms below this are dropped.
const TERM_FLUSH: f64 = 1e-300;

/// Non-increasing, non-negative prizes paid by rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PrizeVector {
    w: Vec<f64>,
}

impl TryFrom<Vec<f64>> for PrizeVector {
    type Error = Error;
    fn try_from(w: Vec<f64>) -> Result<Self> {
        PrizeVector::new(w)
    }
}

impl From<PrizeVector> for Vec<f64> {
    fn from(p: PrizeVector) -> Self {
        p.w
    }
}

impl PrizeVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Validation("prize vector is empty".into()));
        }
        if let Some(i) = w.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Validation(format!("prize {} = {} is negative or non-finite", i + 1, w[i])));
        }
        if let Some(i) = w.windows(2).position(|p| p[1] > p[0]) {
            return Err(Error::Validation(format!(
                "prizes must be non-increasing: w_{} = {} < w_{} = {}",
                i + 1,
                w[i],
                i + 2,
                w[i + 1]
            )));
        }
        Ok(PrizeVector { w })
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        PrizeVector::new(vec![value; n])
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn prizes(&self) -> &[f64] {
        &self.w
    }

    pub fn sum(&self) -> f64 {
        self.w.iter().sum()
    }

    /// `Σ w_k ≤ n·t`.
    pub fn within_budget(&self, t: f64) -> bool {
        self.sum() <= self.n() as f64 * t
    }
}

/// Calls `f(l, c·Pr[B(n1, h) = l])` for every non-negligible `l`, walking out
/// from the mode with the term ratio recurrence (mode term 1), and returns
/// the normalizer `c`.
fn binomial_terms(n1: usize, h: f64, mut f: impl FnMut(usize, f64)) -> f64 {
    if h <= 0.0 {
        f(0, 1.0);
        return 1.0;
    }
    if h >= 1.0 {
        f(n1, 1.0);
        return 1.0;
    }
    let mode = ((n1 as f64 + 1.0) * h).floor().min(n1 as f64) as usize;
    let odds = h / (1.0 - h);
    f(mode, 1.0);
    let mut total = 1.0;
    let mut t = 1.0;
    for l in mode..n1 {
        t *= (n1 - l) as f64 / (l + 1) as f64 * odds;
        if t < TERM_FLUSH {
            break;
        }
        total += t;
        f(l + 1, t);
    }
    let mut t = 1.0;
    for l in (1..=mode).rev() {
        t *= l as f64 / (n1 - l + 1) as f64 / odds;
        if t < TERM_FLUSH {
            break;
        }
        total += t;
        f(l - 1, t);
    }
    total
}

/// `ξ_{n,k}(h) = Pr[B(n−1, h) < k]`.
pub fn xi(n: usize, k: usize, h: f64) -> Result<f64> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::Domain(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::Domain(format!("h = {h} outside [0,1]")));
    }
    if k == n {
        return Ok(1.0);
    }
    let mut s = 0.0;
    let total = binomial_terms(n - 1, h, |l, p| {
        if l < k {
            s += p;
        }
    });
    Ok((s / total).min(1.0))
}

/// Interim allocation `x_w(h) = Σ_k w_k·Pr[B(n−1, h) = k−1]` of a prize
/// vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PrizeInterim {
    w: Vec<f64>,
}

pub fn interim_of_prizes(w: &PrizeVector) -> PrizeInterim {
    PrizeInterim { w: w.w.clone() }
}

impl PrizeInterim {
    pub fn eval(&self, h: f64) -> f64 {
        let h = h.clamp(0.0, 1.0);
        let mut s = 0.0;
        let total = binomial_terms(self.w.len() - 1, h, |l, p| s += self.w[l] * p);
        s / total
    }

    fn grid(&self, pieces: usize) -> Vec<f64> {
        (0..=pieces).map(|i| self.eval(i as f64 / pieces as f64)).collect()
    }

    /// Step function below `x_w` on a uniform grid of `pieces` intervals.
    pub fn lower_envelope(&self, pieces: usize) -> Result<StepFn> {
        let g = self.grid(pieces.max(1));
        let mut run = f64::INFINITY;
        let vals: Vec<f64> = g[1..]
            .iter()
            .map(|&x| {
                run = run.min(x);
                run
            })
            .collect();
        self.assemble(vals)
    }

    /// Step function above `x_w` on a uniform grid of `pieces` intervals.
    pub fn upper_envelope(&self, pieces: usize) -> Result<StepFn> {
        let g = self.grid(pieces.max(1));
        let mut run: f64 = 0.0;
        let mut vals: Vec<f64> = g[..g.len() - 1]
            .iter()
            .rev()
            .map(|&x| {
                run = run.max(x);
                run
            })
            .collect();
        vals.reverse();
        self.assemble(vals)
    }

    fn assemble(&self, vals: Vec<f64>) -> Result<StepFn> {
        let n = vals.len();
        let breaks = (1..=n).map(|i| i as f64 / n as f64).collect();
        StepFn::new(breaks, vals)
    }

    pub fn envelopes(&self, pieces: usize) -> Result<(StepFn, StepFn)> {
        Ok((self.lower_envelope(pieces)?, self.upper_envelope(pieces)?))
    }
}

/// Constants of the rounding construction at a given `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingParams {
    pub n: usize,
    pub delta: f64,
    pub k1: usize,
    pub beta: f64,
    pub c: f64,
}

/// `⌊n^{2/3}⌋` in exact integer arithmetic.
fn two_thirds_floor(n: usize) -> usize {
    let n2 = (n as u128) * (n as u128);
    let mut k = (n as f64).powf(2.0 / 3.0).floor() as u128;
    while (k + 1).pow(3) <= n2 {
        k += 1;
    }
    while k > 0 && k.pow(3) > n2 {
        k -= 1;
    }
    k as usize
}

fn admissible(n: usize) -> bool {
    if n < 3 {
        return false;
    }
    let k1 = two_thirds_floor(n);
    k1 >= 2 && k1 as f64 > 6.0 * (n as f64).ln()
}

/// Smallest `n` with `⌊n^{2/3}⌋ > 6·ln n`.
pub fn min_admissible_n() -> usize {
    (3..).find(|&n| admissible(n)).expect("condition holds for large n")
}

impl RoundingParams {
    pub fn new(n: usize) -> Result<Self> {
        if !admissible(n) {
            return Err(Error::Infeasible(format!(
                "n = {n} is too small for the rounding bound; need n ≥ {}",
                min_admissible_n()
            )));
        }
        let k1 = two_thirds_floor(n);
        let nf = n as f64;
        let delta = 1.0 / nf;
        let beta = (6.0 * nf.ln() / k1 as f64).sqrt();
        let c = (1.0 - delta) / (1.0 + beta) * ((k1 - 1) as f64 / (k1 + 1) as f64) * (nf / (nf - 1.0));
        Ok(RoundingParams { n, delta, k1, beta, c })
    }

    /// `p(i) = min(⌈(1+β)i⌉, n)`.
    pub fn rank_of(&self, i: usize) -> usize {
        (((1.0 + self.beta) * i as f64).ceil() as usize).min(self.n)
    }
}

/// Rounds an interim allocation to an `n`-prize vector whose interim
/// allocation dominates `x_j(h/C)` above the lowest ranks.
pub fn round_to_prizes(x_j: &StepFn, t_j: f64, n: usize) -> Result<PrizeVector> {
    let params = RoundingParams::new(n)?;
    if x_j.budget() > t_j + 1e-9 {
        return Err(Error::Validation(format!(
            "strategy spends {} over its budget {t_j}",
            x_j.budget()
        )));
    }
    let xbar = stretch(x_j, params.c, 0.0)?;
    let n1 = (n - 1) as f64;
    let mut d = vec![0.0; n + 1];
    for i in params.k1..n {
        let drop = xbar.at((i - 1) as f64 / n1) - xbar.at(i as f64 / n1);
        if drop > 0.0 {
            d[params.rank_of(i)] += drop / (1.0 - params.delta);
        }
    }
    let mut w = vec![0.0; n];
    let mut acc = 0.0;
    for k in (1..=n).rev() {
        acc += d[k];
        w[k - 1] = acc;
    }
    PrizeVector::new(w)
}

/// `w'_k = (1−eps)·w_k + eps·t_j`.
pub fn epsilon_mix(w: &PrizeVector, eps: f64, t_j: f64) -> Result<PrizeVector> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps {eps} outside (0,1)")));
    }
    PrizeVector::new(w.w.iter().map(|&x| (1.0 - eps) * x + eps * t_j).collect())
}

/// Default mixing weight `n^{−1/3}`.
pub fn default_mix(n: usize) -> f64 {
    (n as f64).powf(-1.0 / 3.0)
}

/// Certified relative loss of rounding at `n` prizes, for value concentration
/// `D·M/K*`.
pub fn r_bound(n: usize, d: f64, m: f64, k_star: f64) -> Result<f64> {
    let p = RoundingParams::new(n)?;
    if !(k_star > 0.0) {
        return Err(Error::Domain(format!("value target {k_star} must be positive")));
    }
    let k1 = p.k1 as f64;
    let main = 1.0 / (1.0 + p.beta) * ((k1 - 1.0) / (k1 + 1.0));
    let tail = d * m / k_star * ((k1 - 1.0) / (n as f64 - 1.0));
    Ok(1.0 - (main - tail))
}
