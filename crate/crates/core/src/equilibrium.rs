//! Contestant equilibria: worst/best cumulative behaviours, verification of
//! the level-set sandwich condition, multi-contest construction, mixed
//! strategy reconstruction and designer utilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stepcalc::{merge_opponents, stieltjes, union_levels, PLFn, StepFn};

/// One cumulative behaviour per contest; components sum to `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulativeBehavior {
    pub components: Vec<PLFn>,
}

impl CumulativeBehavior {
    /// Two-contest behaviour `(h, q − h)`.
    pub fn with_complement(h: PLFn) -> Result<Self> {
        let c = h.complement()?;
        Ok(CumulativeBehavior {
            components: vec![h, c],
        })
    }

    /// Sorted union of all knot abscissae.
    pub fn knot_union(&self) -> Vec<f64> {
        let mut qs: Vec<f64> = self
            .components
            .iter()
            .flat_map(|h| h.knots().iter().map(|k| k.0))
            .collect();
        qs.sort_by(f64::total_cmp);
        qs.dedup();
        qs
    }

    /// Errors unless every component is a cumulative behaviour and the
    /// components sum to `q` at every knot.
    pub fn check_well_formed(&self, tol: f64) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Validation("cumulative behaviour has no components".into()));
        }
        for (j, h) in self.components.iter().enumerate() {
            if !h.is_cumulative_behavior(tol) {
                return Err(Error::Validation(format!(
                    "component {j} has a slope outside [0,1]"
                )));
            }
        }
        for q in self.knot_union() {
            let s: f64 = self.components.iter().map(|h| h.eval(q)).sum();
            if (s - q).abs() > tol {
                return Err(Error::Validation(format!(
                    "components sum to {s} at q = {q}, expected {q}"
                )));
            }
        }
        Ok(())
    }
}

/// One piece of a mixed strategy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyPiece {
    pub start: f64,
    pub end: f64,
    pub probs: Vec<f64>,
}

/// Contest-choice probabilities as a function of the contestant's quantile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    pub pieces: Vec<StrategyPiece>,
    /// Probabilities at interior knots (a null set).
    pub knots: Vec<(f64, Vec<f64>)>,
}

impl MixedStrategy {
    pub fn contests(&self) -> usize {
        self.pieces[0].probs.len()
    }

    /// Choice probabilities at quantile `q`.
    pub fn probs_at(&self, q: f64) -> &[f64] {
        if let Ok(i) = self.knots.binary_search_by(|k| k.0.total_cmp(&q)) {
            return &self.knots[i].1;
        }
        let i = self.pieces.partition_point(|p| p.end <= q);
        &self.pieces[i.min(self.pieces.len() - 1)].probs
    }

    /// Integrates the probabilities back into cumulative behaviours.
    pub fn cumulate(&self) -> Result<CumulativeBehavior> {
        let m = self.contests();
        let mut knots: Vec<Vec<(f64, f64)>> = vec![vec![(0.0, 0.0)]; m];
        let mut acc = vec![0.0; m];
        for p in &self.pieces {
            for j in 0..m {
                acc[j] += p.probs[j] * (p.end - p.start);
                knots[j].push((p.end, acc[j]));
            }
        }
        Ok(CumulativeBehavior {
            components: knots.into_iter().map(PLFn::new).collect::<Result<_>>()?,
        })
    }
}

struct Level {
    /// `x_j^{-1}(X+0)`
    own_hi: f64,
    /// `x_j^{-1}(X)`
    own: f64,
    /// `x_mj^{-1}(X+0)`
    opp_hi: f64,
    /// `x_mj^{-1}(X)`
    opp: f64,
}

/// Positive levels of both functions (descending) followed by level 0.
fn level_table(x_j: &StepFn, x_mj: &StepFn) -> Vec<Level> {
    let mut out: Vec<Level> = union_levels(&[x_j, x_mj])
        .into_iter()
        .map(|x| Level {
            own_hi: x_j.inv_strict(x),
            own: x_j.inv(x),
            opp_hi: x_mj.inv_strict(x),
            opp: x_mj.inv(x),
        })
        .collect();
    out.push(Level {
        own_hi: x_j.support(),
        own: 1.0,
        opp_hi: x_mj.support(),
        opp: 1.0,
    });
    out
}

/// Turns a polyline through `pts` (non-decreasing in q) into a PLFn on [0,1].
fn polyline_to_unit(pts: &[(f64, f64)]) -> Result<PLFn> {
    let mut out: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for w in pts.windows(2) {
        let (q0, y0) = w[0];
        let (q1, y1) = w[1];
        if q1 <= q0 {
            continue;
        }
        if q1 >= 1.0 {
            let y = y0 + (y1 - y0) * (1.0 - q0) / (q1 - q0);
            out.push((1.0, y));
            return PLFn::new(out);
        }
        out.push((q1, y1));
    }
    // The level-0 sentinel always reaches q = 2, so this is unreachable for
    // well-formed inputs; close the curve flat just in case.
    let y = out.last().unwrap().1;
    out.push((1.0, y));
    PLFn::new(out)
}

/// Cumulative behaviour of contest `j` in the equilibrium least favourable to
/// it: `H(q) = max{x_j^{-1}(X+0), q − x_mj^{-1}(X)}` with `X = Q^{-1}(q)`.
pub fn ceb_worst(x_j: &StepFn, x_mj: &StepFn) -> PLFn {
    let mut pts = vec![(0.0, 0.0)];
    for l in level_table(x_j, x_mj) {
        pts.push((l.own_hi + l.opp_hi, l.own_hi));
        pts.push((l.own_hi + l.opp, l.own_hi));
        pts.push((l.own + l.opp, l.own));
    }
    polyline_to_unit(&pts).expect("worst behaviour is a valid curve")
}

/// Cumulative behaviour of contest `j` in the equilibrium most favourable to
/// it: `H(q) = min{x_j^{-1}(X), q − x_mj^{-1}(X+0)}` with `X = Q^{-1}(q)`.
pub fn ceb_best(x_j: &StepFn, x_mj: &StepFn) -> PLFn {
    let mut pts = vec![(0.0, 0.0)];
    for l in level_table(x_j, x_mj) {
        pts.push((l.own_hi + l.opp_hi, l.own_hi));
        pts.push((l.own + l.opp_hi, l.own));
        pts.push((l.own + l.opp, l.own));
    }
    polyline_to_unit(&pts).expect("best behaviour is a valid curve")
}

/// Designer utility `∫ v dH` under the worst equilibrium.
pub fn r_worst(x_j: &StepFn, x_mj: &StepFn, v: &StepFn) -> f64 {
    stieltjes(v, &ceb_worst(x_j, x_mj))
}

/// Designer utility `∫ v dH` under the best equilibrium.
pub fn r_best(x_j: &StepFn, x_mj: &StepFn, v: &StepFn) -> f64 {
    stieltjes(v, &ceb_best(x_j, x_mj))
}

/// Rank-mass interval `[Q(X+0), min(Q(X), 1)]` of every level, with level 0
/// included when the positive levels leave mass unassigned.
fn level_intervals(xs: &[StepFn]) -> Vec<(f64, f64, Vec<f64>, Vec<f64>)> {
    let refs: Vec<&StepFn> = xs.iter().collect();
    let mut out = Vec::new();
    let mut last_q = 0.0;
    for x in union_levels(&refs) {
        let hi: Vec<f64> = xs.iter().map(|f| f.inv_strict(x)).collect();
        let at: Vec<f64> = xs.iter().map(|f| f.inv(x)).collect();
        let lo_q: f64 = hi.iter().sum();
        let hi_q: f64 = at.iter().sum();
        if lo_q > 1.0 {
            return out;
        }
        last_q = hi_q;
        out.push((lo_q, hi_q.min(1.0), hi, at));
    }
    if last_q < 1.0 {
        let hi: Vec<f64> = xs.iter().map(|f| f.support()).collect();
        let lo_q: f64 = hi.iter().sum();
        out.push((lo_q, 1.0, hi, vec![1.0; xs.len()]));
    }
    out
}

/// Whether `h` satisfies `x_j^{-1}(X+0) − tol ≤ H_j(q) ≤ x_j^{-1}(X) + tol`
/// for every level `X` and every `q` in that level's rank-mass interval.
/// A malformed `h` is an error rather than `false`.
pub fn verify_gceb(h: &CumulativeBehavior, xs: &[StepFn], tol: f64) -> Result<bool> {
    if h.components.len() != xs.len() {
        return Err(Error::Validation(format!(
            "{} behaviour components for {} contests",
            h.components.len(),
            xs.len()
        )));
    }
    h.check_well_formed(tol)?;
    let knots = h.knot_union();
    for (lo, hi, lower, upper) in level_intervals(xs) {
        let lo = lo.min(1.0);
        let mut qs = vec![lo, hi];
        qs.extend(knots.iter().copied().filter(|&q| q > lo && q < hi));
        for q in qs {
            for (j, hj) in h.components.iter().enumerate() {
                let y = hj.eval(q);
                if y < lower[j] - tol || y > upper[j] + tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// An equilibrium of all contests: `favored` gets its best behaviour against
/// the bundle of the others, and the remaining mass is split level by level
/// in proportion to the others' inverse-interval widths.
pub fn ceb_all(xs: &[StepFn], favored: usize) -> Result<CumulativeBehavior> {
    let m = xs.len();
    if favored >= m {
        return Err(Error::Domain(format!("contest {favored} of {m}")));
    }
    if m == 1 {
        return Ok(CumulativeBehavior {
            components: vec![PLFn::identity()],
        });
    }
    let others: Vec<StepFn> = (0..m).filter(|&j| j != favored).map(|j| xs[j].clone()).collect();
    let bundle = merge_opponents(&others)?;
    let hf = ceb_best(&xs[favored], &bundle);

    let intervals = level_intervals(xs);
    let mut qs: Vec<f64> = hf.knots().iter().map(|k| k.0).collect();
    for (lo, hi, _, _) in &intervals {
        qs.push(lo.min(1.0));
        qs.push(*hi);
    }
    qs.sort_by(f64::total_cmp);
    qs.dedup();

    let mut comps: Vec<Vec<(f64, f64)>> = vec![Vec::with_capacity(qs.len()); m];
    let mut li = 0;
    for &q in &qs {
        while li + 1 < intervals.len() && q > intervals[li].1 {
            li += 1;
        }
        let (_, _, lower, upper) = &intervals[li];
        let yf = hf.eval(q);
        let rest = q - yf;
        let lo_sum: f64 = (0..m).filter(|&j| j != favored).map(|j| lower[j]).sum();
        let hi_sum: f64 = (0..m).filter(|&j| j != favored).map(|j| upper[j]).sum();
        let theta = if hi_sum > lo_sum {
            ((rest - lo_sum) / (hi_sum - lo_sum)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        for j in 0..m {
            let y = if j == favored {
                yf
            } else {
                lower[j] + (upper[j] - lower[j]) * theta
            };
            comps[j].push((q, y));
        }
    }
    // Absorb rounding so the components sum to q exactly at every knot.
    let last_other = (0..m).rev().find(|&j| j != favored).unwrap();
    for k in 0..qs.len() {
        let s: f64 = (0..m).filter(|&j| j != last_other).map(|j| comps[j][k].1).sum();
        comps[last_other][k].1 = qs[k] - s;
    }
    if qs[0] > 0.0 {
        for c in comps.iter_mut() {
            c.insert(0, (0.0, 0.0));
        }
    }
    for c in comps.iter_mut() {
        c[0] = (0.0, 0.0);
        for k in 1..c.len() {
            if c[k].1 < c[k - 1].1 {
                c[k].1 = c[k - 1].1;
            }
        }
    }
    Ok(CumulativeBehavior {
        components: comps.into_iter().map(PLFn::new).collect::<Result<_>>()?,
    })
}

/// Mixed strategy whose cumulation is `h`: segment slopes give the choice
/// probabilities; at knots the choice is uniform over the contests with the
/// highest marginal prize `x_j(H_j(q))`.
pub fn strategy_from_ceb(h: &CumulativeBehavior, xs: &[StepFn]) -> Result<MixedStrategy> {
    if h.components.len() != xs.len() {
        return Err(Error::Validation(format!(
            "{} behaviour components for {} contests",
            h.components.len(),
            xs.len()
        )));
    }
    h.check_well_formed(1e-9)?;
    let m = xs.len();
    let qs = h.knot_union();
    let mut pieces = Vec::with_capacity(qs.len());
    for w in qs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut probs: Vec<f64> = h
            .components
            .iter()
            .map(|c| ((c.eval(b) - c.eval(a)) / (b - a)).clamp(0.0, 1.0))
            .collect();
        let s: f64 = probs.iter().sum();
        if s > 0.0 {
            probs.iter_mut().for_each(|p| *p /= s);
        } else {
            probs = vec![1.0 / m as f64; m];
        }
        pieces.push(StrategyPiece {
            start: a,
            end: b,
            probs,
        });
    }
    let mut knots = Vec::new();
    for &q in &qs[1..qs.len() - 1] {
        let marg: Vec<f64> = (0..m).map(|j| xs[j].at(h.components[j].eval(q))).collect();
        let best = marg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<bool> = marg.iter().map(|&x| x >= best - 1e-12).collect();
        let cnt = winners.iter().filter(|&&w| w).count() as f64;
        knots.push((q, winners.iter().map(|&w| if w { 1.0 / cnt } else { 0.0 }).collect()));
    }
    Ok(MixedStrategy { pieces, knots })
}
