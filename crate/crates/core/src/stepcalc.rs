//! Piecewise-constant non-increasing functions on [0,1] and piecewise-linear
//! cumulatives.
//!
//! `StepFn` pieces are right-open: `f(h) = values[i]` on
//! `[breaks[i-1], breaks[i])` with `breaks[-1] = 0`, and `f(1)` is the last
//! value. All operations are closed-form over breakpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used when canonicalizing breakpoints and levels.
pub const CANON_TOL: f64 = 1e-12;

#[derive(Serialize, Deserialize)]
struct RawStep {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

/// Non-increasing, non-negative step function on [0,1] in canonical form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStep", into = "RawStep")]
pub struct StepFn {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawStep> for StepFn {
    type Error = Error;
    fn try_from(raw: RawStep) -> Result<Self> {
        StepFn::new(raw.breaks, raw.values)
    }
}

impl From<StepFn> for RawStep {
    fn from(f: StepFn) -> Self {
        RawStep {
            breaks: f.breaks,
            values: f.values,
        }
    }
}

impl StepFn {
    /// Builds a step function, merging zero-width pieces and equal
    /// neighbouring values.
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.is_empty() || breaks.len() != values.len() {
            return Err(Error::Validation(format!(
                "step function needs equally many breaks and values (got {} and {})",
                breaks.len(),
                values.len()
            )));
        }
        if breaks.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::Validation("step function has a non-finite entry".into()));
        }
        let last = *breaks.last().unwrap();
        if (last - 1.0).abs() > CANON_TOL {
            return Err(Error::Validation(format!(
                "last break must be 1 (got {last})"
            )));
        }
        let mut prev_b = 0.0;
        let mut prev_v = f64::INFINITY;
        for (&b, &v) in breaks.iter().zip(&values) {
            if b < prev_b - CANON_TOL {
                return Err(Error::Validation(format!(
                    "breaks must be increasing ({b} after {prev_b})"
                )));
            }
            if v < -CANON_TOL {
                return Err(Error::Validation(format!("negative value {v}")));
            }
            if v > prev_v + CANON_TOL {
                return Err(Error::Validation(format!(
                    "values must be non-increasing ({v} after {prev_v})"
                )));
            }
            prev_b = prev_b.max(b);
            prev_v = prev_v.min(v);
        }

        let mut out_b: Vec<f64> = Vec::with_capacity(breaks.len());
        let mut out_v: Vec<f64> = Vec::with_capacity(values.len());
        let mut start = 0.0;
        let n = breaks.len();
        for i in 0..n {
            let b = if i + 1 == n { 1.0 } else { breaks[i].clamp(start, 1.0) };
            let mut v = values[i].max(0.0);
            if b - start <= CANON_TOL {
                continue;
            }
            if let Some(&pv) = out_v.last() {
                v = v.min(pv);
                if pv - v <= CANON_TOL {
                    *out_b.last_mut().unwrap() = b;
                    start = b;
                    continue;
                }
            }
            out_b.push(b);
            out_v.push(v);
            start = b;
        }
        *out_b.last_mut().unwrap() = 1.0;
        Ok(StepFn {
            breaks: out_b,
            values: out_v,
        })
    }

    /// Builds from `(right end, value)` pairs.
    pub fn from_pieces(pieces: &[(f64, f64)]) -> Result<Self> {
        let (b, v) = pieces.iter().copied().unzip();
        StepFn::new(b, v)
    }

    pub fn constant(c: f64) -> Result<Self> {
        StepFn::new(vec![1.0], vec![c])
    }

    pub fn zero() -> Self {
        StepFn {
            breaks: vec![1.0],
            values: vec![0.0],
        }
    }

    /// `height` on `[0, width)`, zero after.
    pub fn stair(height: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || width > 1.0 + CANON_TOL {
            return Err(Error::Domain(format!("stair width {width} outside (0,1]")));
        }
        if width >= 1.0 - CANON_TOL {
            StepFn::constant(height)
        } else {
            StepFn::new(vec![width, 1.0], vec![height, 0.0])
        }
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pieces as `(start, end, value)`.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.breaks.len()).map(move |i| {
            let a = if i == 0 { 0.0 } else { self.breaks[i - 1] };
            (a, self.breaks[i], self.values[i])
        })
    }

    /// Distinct positive values, descending.
    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|&v| v > 0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values[0]
    }

    pub fn is_zero(&self) -> bool {
        self.values[0] <= 0.0
    }

    /// Width of `{h : f(h) > 0}`.
    pub fn support(&self) -> f64 {
        self.inv_strict(0.0)
    }

    /// `f(h)`; errors outside [0,1].
    pub fn eval(&self, h: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&h) {
            return Err(Error::Domain(format!("evaluation point {h} outside [0,1]")));
        }
        Ok(self.at(h))
    }

    /// `f(h)` with `h` clamped to [0,1].
    pub fn at(&self, h: f64) -> f64 {
        let i = self.breaks.partition_point(|&b| b <= h);
        self.values[i.min(self.values.len() - 1)]
    }

    /// `sup{h : f(h) >= x}`, 0 for an empty set.
    pub fn upper_inverse(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("inverse level {x} is negative")));
        }
        Ok(self.inv(x))
    }

    /// `sup{h : f(h) > x}`, 0 for an empty set.
    pub fn strict_upper_inverse(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("inverse level {x} is negative")));
        }
        Ok(self.inv_strict(x))
    }

    pub(crate) fn inv(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let k = self.values.partition_point(|&v| v >= x);
        if k == 0 {
            0.0
        } else {
            self.breaks[k - 1]
        }
    }

    pub(crate) fn inv_strict(&self, x: f64) -> f64 {
        let k = self.values.partition_point(|&v| v > x);
        if k == 0 {
            0.0
        } else {
            self.breaks[k - 1]
        }
    }

    /// `∫_0^1 f`.
    pub fn budget(&self) -> f64 {
        self.pieces().map(|(a, b, v)| v * (b - a)).sum()
    }

    /// `∫_0^q f` for `q` clamped to [0,1].
    pub fn integral_to(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let mut acc = 0.0;
        for (a, b, v) in self.pieces() {
            if q <= a {
                break;
            }
            acc += v * (b.min(q) - a);
        }
        acc
    }
}

/// Piecewise-linear non-decreasing function on [0,1] given by knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PLFn {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for PLFn {
    type Error = Error;
    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self> {
        PLFn::new(knots)
    }
}

impl From<PLFn> for Vec<(f64, f64)> {
    fn from(f: PLFn) -> Self {
        f.knots
    }
}

impl PLFn {
    /// Builds from knots starting at (0,0) and ending at q = 1. Knots with
    /// repeated abscissae are collapsed and collinear interior knots removed.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Validation("piecewise-linear function needs two knots".into()));
        }
        if knots.iter().any(|&(q, y)| !q.is_finite() || !y.is_finite()) {
            return Err(Error::Validation("non-finite knot".into()));
        }
        let (q0, y0) = knots[0];
        if q0.abs() > CANON_TOL || y0.abs() > CANON_TOL {
            return Err(Error::Validation(format!("first knot must be (0,0), got ({q0},{y0})")));
        }
        let (ql, _) = *knots.last().unwrap();
        if (ql - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("last knot must be at q = 1, got {ql}")));
        }
        let mut out: Vec<(f64, f64)> = vec![(0.0, 0.0)];
        for &(q, y) in &knots[1..] {
            let (pq, py) = *out.last().unwrap();
            if q < pq - CANON_TOL {
                return Err(Error::Validation(format!("knots must ascend ({q} after {pq})")));
            }
            if y < py - 1e-9 {
                return Err(Error::Validation(format!("values must not decrease ({y} after {py})")));
            }
            let y = y.max(py);
            if q - pq <= CANON_TOL {
                out.last_mut().unwrap().1 = if out.len() == 1 { 0.0 } else { y };
                continue;
            }
            out.push((q, y));
        }
        if out.len() < 2 {
            return Err(Error::Validation("piecewise-linear function has zero length".into()));
        }
        out.last_mut().unwrap().0 = 1.0;
        let mut simp: Vec<(f64, f64)> = Vec::with_capacity(out.len());
        for &(q, y) in &out {
            if simp.len() >= 2 {
                let (q1, y1) = simp[simp.len() - 1];
                let (q0, y0) = simp[simp.len() - 2];
                let s_prev = (y1 - y0) / (q1 - q0);
                let s_new = (y - y1) / (q - q1);
                if (s_prev - s_new).abs() <= 1e-12 {
                    simp.pop();
                }
            }
            simp.push((q, y));
        }
        Ok(PLFn { knots: simp })
    }

    /// The identity `q ↦ q`.
    pub fn identity() -> Self {
        PLFn {
            knots: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    pub fn zero() -> Self {
        PLFn {
            knots: vec![(0.0, 0.0), (1.0, 0.0)],
        }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Segments as `(q0, y0, q1, y1)`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.knots
            .windows(2)
            .map(|w| (w[0].0, w[0].1, w[1].0, w[1].1))
    }

    /// Linear interpolation at `q` clamped to [0,1].
    pub fn eval(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let i = self.knots.partition_point(|&(k, _)| k < q);
        if i == 0 {
            return self.knots[0].1;
        }
        if i >= self.knots.len() {
            return self.knots.last().unwrap().1;
        }
        let (q0, y0) = self.knots[i - 1];
        let (q1, y1) = self.knots[i];
        if q1 <= q0 {
            return y1;
        }
        y0 + (y1 - y0) * (q - q0) / (q1 - q0)
    }

    /// `q ↦ q − self(q)`.
    pub fn complement(&self) -> Result<PLFn> {
        PLFn::new(self.knots.iter().map(|&(q, y)| (q, q - y)).collect())
    }

    /// True when every slope lies in [0, 1] (within `tol`).
    pub fn is_cumulative_behavior(&self, tol: f64) -> bool {
        self.segments().all(|(q0, y0, q1, y1)| {
            let d = y1 - y0;
            d >= -tol && d <= (q1 - q0) + tol
        })
    }
}

/// Aggregate prize curve `Q(x) = Σ_j sup{h : f_j(h) >= x}`.
pub fn q_curve(fs: &[StepFn], x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("prize curve level {x} must be positive")));
    }
    Ok(fs.iter().map(|f| f.inv(x)).sum())
}

/// Distinct positive levels of all functions, descending.
pub fn union_levels(fs: &[&StepFn]) -> Vec<f64> {
    let mut lv: Vec<f64> = fs.iter().flat_map(|f| f.levels()).collect();
    lv.sort_by(|a, b| b.total_cmp(a));
    lv.dedup();
    lv
}

/// `max{x : Q(x) >= q}` over positive levels, or 0 when none qualifies.
pub fn q_inverse(fs: &[StepFn], q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Domain(format!("rank mass {q} outside (0,1]")));
    }
    let refs: Vec<&StepFn> = fs.iter().collect();
    for x in union_levels(&refs) {
        if fs.iter().map(|f| f.inv(x)).sum::<f64>() >= q {
            return Ok(x);
        }
    }
    Ok(0.0)
}

/// Cumulative `V(q) = ∫_0^q v` with its generalized inverse.
#[derive(Clone, Debug)]
pub struct CumValue {
    starts: Vec<f64>,
    vals: Vec<f64>,
    cum: Vec<f64>,
}

impl CumValue {
    pub fn new(v: &StepFn) -> Self {
        let mut starts = Vec::new();
        let mut vals = Vec::new();
        let mut cum = vec![0.0];
        for (a, b, x) in v.pieces() {
            starts.push(a);
            vals.push(x);
            cum.push(cum.last().unwrap() + x * (b - a));
        }
        starts.push(1.0);
        CumValue { starts, vals, cum }
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// `V(q)` with `q` clamped to [0,1].
    pub fn at(&self, q: f64) -> f64 {
        if q >= 1.0 {
            return self.total();
        }
        if q <= 0.0 {
            return 0.0;
        }
        let i = self.starts.partition_point(|&s| s <= q) - 1;
        self.cum[i] + self.vals[i] * (q - self.starts[i])
    }

    /// `min{q : V(q) >= target}` for `target <= V(1)`; larger targets are
    /// clamped to `V(1)`.
    pub fn inverse_clamped(&self, target: f64) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        let total = self.total();
        let target = target.min(total);
        let j = self.cum.partition_point(|&c| c < target);
        let i = j - 1;
        if self.vals[i] <= 0.0 {
            return self.starts[i];
        }
        (self.starts[i] + (target - self.cum[i]) / self.vals[i]).min(self.starts[i + 1])
    }

    /// Index of the piece containing `q`.
    pub(crate) fn piece_of(&self, q: f64) -> usize {
        (self.starts.partition_point(|&s| s <= q).max(1) - 1).min(self.vals.len() - 1)
    }

    /// [`Self::inverse_clamped`] for a target above `V(starts[*hint])`,
    /// scanning forward from `*hint` and leaving it at the piece found.
    pub(crate) fn inverse_seek(&self, target: f64, hint: &mut usize) -> f64 {
        if target <= 0.0 {
            return 0.0;
        }
        let target = target.min(self.total());
        let mut i = *hint;
        while i + 1 < self.vals.len() && self.cum[i + 1] < target {
            i += 1;
        }
        *hint = i;
        if self.vals[i] <= 0.0 {
            return self.starts[i];
        }
        (self.starts[i] + (target - self.cum[i]) / self.vals[i]).min(self.starts[i + 1])
    }

    /// `min{q : V(q) >= target}`; errors when `target > V(1)`.
    pub fn inverse(&self, target: f64) -> Result<f64> {
        let total = self.total();
        if target > total + CANON_TOL * total.max(1.0) {
            return Err(Error::Unreachable(format!(
                "value target {target} exceeds total value {total}"
            )));
        }
        Ok(self.inverse_clamped(target))
    }

    pub fn to_plfn(&self) -> PLFn {
        let mut knots: Vec<(f64, f64)> = vec![(0.0, 0.0)];
        for i in 0..self.vals.len() {
            knots.push((self.starts[i + 1], self.cum[i + 1]));
        }
        PLFn::new(knots).expect("cumulative of a valid step function")
    }
}

/// `V(q) = ∫_0^q v` as a piecewise-linear function.
pub fn cum_value(v: &StepFn) -> PLFn {
    CumValue::new(v).to_plfn()
}

/// `min{q : V(q) >= target}`.
pub fn value_inverse(v: &StepFn, target: f64) -> Result<f64> {
    CumValue::new(v).inverse(target)
}

/// `∫_0^1 v dH`, exact over the segments of `H`.
pub fn stieltjes(v: &StepFn, h: &PLFn) -> f64 {
    let cv = CumValue::new(v);
    stieltjes_with(&cv, h)
}

pub(crate) fn stieltjes_with(cv: &CumValue, h: &PLFn) -> f64 {
    h.segments()
        .filter(|&(q0, _, q1, _)| q1 > q0)
        .map(|(q0, y0, q1, y1)| (y1 - y0) / (q1 - q0) * (cv.at(q1) - cv.at(q0)))
        .sum()
}

/// `g(h) = f(h/c) + pad` on `[0, min(1,c))`, `pad` beyond.
pub fn stretch(f: &StepFn, c: f64, pad: f64) -> Result<StepFn> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("stretch factor {c} must be positive")));
    }
    if !(pad >= 0.0) {
        return Err(Error::Domain(format!("padding {pad} must be non-negative")));
    }
    let mut pieces = Vec::with_capacity(f.breaks.len() + 1);
    for (a, b, v) in f.pieces() {
        if a * c >= 1.0 {
            break;
        }
        pieces.push(((b * c).min(1.0), v + pad));
    }
    if c < 1.0 {
        pieces.push((1.0, pad));
    }
    StepFn::from_pieces(&pieces)
}

/// Bundles several strategies into one: `x(h) = max{x : Σ_j f_j^{-1}(x) >= h}`.
pub fn merge_opponents(fs: &[StepFn]) -> Result<StepFn> {
    if fs.is_empty() {
        return Err(Error::Domain("cannot merge an empty list".into()));
    }
    if fs.len() == 1 {
        return Ok(fs[0].clone());
    }
    let refs: Vec<&StepFn> = fs.iter().collect();
    let mut pieces = Vec::new();
    let mut reach = 0.0;
    for x in union_levels(&refs) {
        let s: f64 = fs.iter().map(|f| f.inv(x)).sum();
        let end = s.min(1.0);
        if end > reach {
            pieces.push((end, x));
            reach = end;
        }
        if reach >= 1.0 {
            break;
        }
    }
    if reach < 1.0 {
        pieces.push((1.0, 0.0));
    }
    StepFn::from_pieces(&pieces)
}

/// Whether `f(c·h) >= g(h)` (or `>` when `strict`) for almost every
/// `h ∈ [0,1]`. Decided on the open intervals between the breakpoints of `g`
/// and the rescaled breakpoints of `f`; single points and intervals shorter
/// than [`CANON_TOL`] carry no mass.
pub fn dominates(f: &StepFn, g: &StepFn, c: f64, strict: bool) -> Result<bool> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Domain(format!("dominance factor {c} outside (0,1]")));
    }
    let mut pts: Vec<f64> = vec![0.0, 1.0];
    pts.extend(g.breaks.iter().copied());
    pts.extend(f.breaks.iter().map(|b| b / c).filter(|&b| b < 1.0));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    for w in pts.windows(2) {
        // Slivers left by rescaling a breakpoint back and forth carry no mass.
        if w[1] - w[0] <= CANON_TOL {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let fv = f.at(c * mid);
        let gv = g.at(mid);
        let ok = if strict { fv > gv } else { fv >= gv };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half2() -> StepFn {
        StepFn::from_pieces(&[(0.5, 2.0), (1.0, 0.0)]).unwrap()
    }

    #[test]
    fn eval_uses_right_open_pieces() {
        let f = half2();
        assert_eq!(f.eval(0.25).unwrap(), 2.0);
        assert_eq!(f.eval(0.5).unwrap(), 0.0);
        assert_eq!(f.eval(1.0).unwrap(), 0.0);
        assert!(f.eval(1.5).is_err());
        assert!(f.eval(-0.1).is_err());
    }

    #[test]
    fn inverses() {
        let f = half2();
        assert_eq!(f.upper_inverse(1.0).unwrap(), 0.5);
        assert_eq!(f.upper_inverse(3.0).unwrap(), 0.0);
        assert_eq!(f.upper_inverse(0.0).unwrap(), 1.0);
        assert!(f.upper_inverse(-1.0).is_err());
        assert_eq!(f.strict_upper_inverse(2.0).unwrap(), 0.0);
        assert_eq!(f.strict_upper_inverse(1.0).unwrap(), 0.5);
        assert_eq!(f.strict_upper_inverse(0.0).unwrap(), 0.5);
        assert_eq!(f.upper_inverse(2.0).unwrap(), 0.5);
        assert_eq!(StepFn::zero().upper_inverse(0.3).unwrap(), 0.0);
    }

    #[test]
    fn budgets() {
        assert_eq!(half2().budget(), 1.0);
        assert_eq!(StepFn::constant(1.0).unwrap().budget(), 1.0);
        let f = StepFn::from_pieces(&[(1.0 / 3.0, 3.0), (1.0, 1.0)]).unwrap();
        assert!((f.budget() - (1.0 + 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn construction_canonicalizes_and_rejects() {
        let f = StepFn::new(vec![0.25, 0.5, 1.0], vec![1.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.breaks(), &[0.5, 1.0]);
        let g = StepFn::new(vec![0.5, 0.5, 1.0], vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(g.values(), &[3.0, 1.0]);
        assert!(StepFn::new(vec![0.5, 1.0], vec![1.0, 2.0]).is_err());
        assert!(StepFn::new(vec![0.5, 0.9], vec![1.0, 0.0]).is_err());
        assert!(StepFn::new(vec![1.0], vec![-1.0]).is_err());
        assert!(StepFn::new(vec![0.5, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn prize_curve_and_inverse() {
        let a = StepFn::from_pieces(&[(0.5, 1.0), (1.0, 0.0)]).unwrap();
        let two = vec![a.clone(), a];
        assert_eq!(q_curve(&two, 1.0).unwrap(), 1.0);
        assert_eq!(q_curve(&two, 1.5).unwrap(), 0.0);
        assert!(q_curve(&two, 0.0).is_err());
        let mixed = vec![StepFn::constant(1.0).unwrap(), half2()];
        assert_eq!(q_curve(&mixed, 1.0).unwrap(), 1.5);
        assert_eq!(q_inverse(&two, 0.7).unwrap(), 1.0);
        let fs = vec![
            StepFn::from_pieces(&[(0.25, 2.0), (1.0, 0.0)]).unwrap(),
            StepFn::from_pieces(&[(0.5, 1.0), (1.0, 0.0)]).unwrap(),
        ];
        assert_eq!(q_inverse(&fs, 0.2).unwrap(), 2.0);
        assert_eq!(q_inverse(&fs, 0.9).unwrap(), 0.0);
        assert!(q_inverse(&fs, 0.0).is_err());
        assert!(q_inverse(&fs, 1.1).is_err());
    }

    #[test]
    fn stieltjes_examples() {
        let one = StepFn::constant(1.0).unwrap();
        let minh = PLFn::new(vec![(0.0, 0.0), (0.5, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(stieltjes(&one, &minh), 0.5);
        let top = StepFn::from_pieces(&[(0.5, 1.0), (1.0, 0.0)]).unwrap();
        let maxh = PLFn::new(vec![(0.0, 0.0), (0.5, 0.0), (1.0, 0.5)]).unwrap();
        assert_eq!(stieltjes(&top, &maxh), 0.0);
        assert_eq!(stieltjes(&one, &PLFn::identity()), 1.0);
    }

    #[test]
    fn cumulative_value_and_inverse() {
        let one = StepFn::constant(1.0).unwrap();
        assert_eq!(cum_value(&one).knots(), &[(0.0, 0.0), (1.0, 1.0)]);
        assert!((value_inverse(&one, 0.3).unwrap() - 0.3).abs() < 1e-15);
        let f = half2();
        assert_eq!(cum_value(&f).eval(1.0), 1.0);
        assert_eq!(value_inverse(&f, 1.0).unwrap(), 0.5);
        assert_eq!(value_inverse(&f, 0.0).unwrap(), 0.0);
        assert!(matches!(value_inverse(&f, 1.5), Err(Error::Unreachable(_))));
    }

    #[test]
    fn stretch_examples() {
        let one = StepFn::constant(1.0).unwrap();
        let s = stretch(&one, 0.5, 0.0).unwrap();
        assert_eq!((s.breaks(), s.values()), (&[0.5, 1.0][..], &[1.0, 0.0][..]));
        let p = stretch(&one, 0.5, 0.1).unwrap();
        assert_eq!(p.values(), &[1.1, 0.1]);
        assert!((p.budget() - 0.6).abs() < 1e-15);
        let c = stretch(&half2(), 2.0, 0.0).unwrap();
        assert_eq!((c.breaks(), c.values()), (&[1.0][..], &[2.0][..]));
    }

    #[test]
    fn merge_examples() {
        let m = merge_opponents(&[half2(), half2()]).unwrap();
        assert_eq!((m.breaks(), m.values()), (&[1.0][..], &[2.0][..]));
        let m = merge_opponents(&[StepFn::constant(1.0).unwrap(), half2()]).unwrap();
        assert_eq!((m.breaks(), m.values()), (&[0.5, 1.0][..], &[2.0, 1.0][..]));
        assert_eq!(merge_opponents(&[half2()]).unwrap(), half2());
    }

    #[test]
    fn dominance_examples() {
        let f = StepFn::from_pieces(&[(0.5, 1.0), (1.0, 0.0)]).unwrap();
        let g = StepFn::constant(1.0).unwrap();
        assert!(dominates(&f, &g, 0.5, false).unwrap());
        assert!(!dominates(&f, &g, 0.5, true).unwrap());
        let fp = StepFn::from_pieces(&[(0.5, 1.1), (1.0, 0.1)]).unwrap();
        assert!(dominates(&fp, &g, 0.5, true).unwrap());
        assert!(!dominates(&f, &g, 0.6, false).unwrap());
        assert!(dominates(&f, &g, 0.0, false).is_err());
    }

    #[test]
    fn plfn_validation() {
        assert!(PLFn::new(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.5)]).is_err());
        assert!(PLFn::new(vec![(0.0, 0.1), (1.0, 1.0)]).is_err());
        let h = PLFn::new(vec![(0.0, 0.0), (0.25, 0.25), (0.5, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(h.knots().len(), 3);
        assert_eq!(h.eval(0.75), 0.5);
    }
}
