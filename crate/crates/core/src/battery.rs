//! Feasibility of a cyclic battery day.
//!
//! A day has `T` periods. The level at the start of period `t + 1` is
//! `b[t+1] = b[t] + inflow[t] - spill[t]` with `0 <= spill[t] <= spill_max[t]`
//! and `lo[t] <= b[t] <= hi[t]`; the level after the last period is the level
//! at the start of the first one. The reachable set from a single starting
//! level is an interval whose ends are compositions of clamp maps
//! `x -> max(c, x + d)` and `x -> min(c, x + d)`, which compose in closed form,
//! so the set of feasible starting levels is found exactly in `O(T)`.

use crate::num::Scalar;

/// One period of a cyclic battery day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryPeriod<T> {
    /// Level bounds at the start of the period.
    pub lo: T,
    pub hi: T,
    /// Net energy entering the bank during the period before spilling.
    pub inflow: T,
    /// Largest energy that may be spilled during the period.
    pub spill_max: T,
}

/// Levels at the start of each period and spill in each period.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryTrajectory<T> {
    pub level: Vec<T>,
    pub spill: Vec<T>,
}

/// `x -> max(floor, x + shift)`.
#[derive(Debug, Clone, Copy)]
struct RaiseMap<T> {
    floor: T,
    shift: T,
}

impl<T: Scalar> RaiseMap<T> {
    fn identity() -> Self {
        Self { floor: T::neg_infinity(), shift: T::zero() }
    }

    fn then(self, floor: T, shift: T) -> Self {
        Self { floor: floor.max(self.floor + shift), shift: self.shift + shift }
    }
}

/// `x -> min(ceil, x + shift)`.
#[derive(Debug, Clone, Copy)]
struct CapMap<T> {
    ceil: T,
    shift: T,
}

impl<T: Scalar> CapMap<T> {
    fn identity() -> Self {
        Self { ceil: T::infinity(), shift: T::zero() }
    }

    fn then(self, ceil: T, shift: T) -> Self {
        Self { ceil: ceil.min(self.ceil + shift), shift: self.shift + shift }
    }
}

/// Closed interval `[lo, hi]`; empty when `lo > hi + tol`.
fn intersect<T: Scalar>(a: (T, T), b: (T, T)) -> (T, T) {
    (a.0.max(b.0), a.1.min(b.1))
}

/// Interval of starting levels `b[1]` from which a cyclic day is feasible,
/// or `None`. `tol` absorbs rounding in the comparisons.
pub fn feasible_start_levels<T: Scalar>(periods: &[BatteryPeriod<T>], tol: T) -> Option<(T, T)> {
    if periods.is_empty() {
        return Some((T::zero(), T::zero()));
    }
    if periods.iter().any(|p| p.spill_max < -tol || p.lo > p.hi + tol) {
        return None;
    }
    let first = periods[0];
    let mut start = (first.lo, first.hi);
    let mut low = RaiseMap::identity();
    let mut high = CapMap::identity();
    let n = periods.len();
    for k in 0..n {
        let p = periods[k];
        let next = periods[(k + 1) % n];
        low = low.then(next.lo, p.inflow - p.spill_max.max(T::zero()));
        high = high.then(next.hi, p.inflow);
        // The level interval after this step is [low(e), high(e)]; it is
        // non-empty iff max(fl, e + sl) <= min(ch, e + sh).
        if low.floor > high.ceil + tol || low.shift > high.shift + tol {
            return None;
        }
        start = intersect(start, (low.floor - high.shift, high.ceil - low.shift));
        if start.0 > start.1 + tol {
            return None;
        }
    }
    // Closing the cycle: low(e) <= e <= high(e).
    if low.shift > tol || high.shift < -tol {
        return None;
    }
    start = intersect(start, (low.floor, high.ceil));
    if start.0 > start.1 + tol {
        return None;
    }
    Some((start.0.min(start.1), start.1.max(start.0)))
}

/// A feasible cyclic trajectory starting at the lowest feasible level, or
/// `None` when the day is infeasible.
pub fn cyclic_witness<T: Scalar>(periods: &[BatteryPeriod<T>], tol: T) -> Option<BatteryTrajectory<T>> {
    let (start, _) = feasible_start_levels(periods, tol)?;
    let n = periods.len();
    if n == 0 {
        return Some(BatteryTrajectory { level: Vec::new(), spill: Vec::new() });
    }
    // Forward reach from the chosen start.
    let mut reach = Vec::with_capacity(n + 1);
    reach.push((start, start));
    for k in 0..n {
        let p = periods[k];
        let next = periods[(k + 1) % n];
        let (a, b) = reach[k];
        reach.push((next.lo.max(a + p.inflow - p.spill_max.max(T::zero())), next.hi.min(b + p.inflow)));
    }
    // Backward selection of levels that close the cycle at `start`.
    let mut level = vec![T::zero(); n];
    let mut spill = vec![T::zero(); n];
    let mut after = start;
    for k in (0..n).rev() {
        let p = periods[k];
        let here = if k == 0 {
            start
        } else {
            let (a, b) = intersect(reach[k], (after - p.inflow, after - p.inflow + p.spill_max.max(T::zero())));
            a.min(b).max(reach[k].0)
        };
        level[k] = here;
        spill[k] = (here + p.inflow - after).max(T::zero());
        after = here;
    }
    Some(BatteryTrajectory { level, spill })
}

/// Largest violation of the cyclic recursion, level bounds or spill bounds by
/// a trajectory; zero for an exact witness.
pub fn trajectory_violation<T: Scalar>(periods: &[BatteryPeriod<T>], traj: &BatteryTrajectory<T>) -> T {
    let n = periods.len();
    let mut worst = T::zero();
    for k in 0..n {
        let p = periods[k];
        let b = traj.level[k];
        let s = traj.spill[k];
        let next = traj.level[(k + 1) % n];
        worst = worst.max((b + p.inflow - s - next).abs()).max(p.lo - b).max(b - p.hi).max(-s).max(s - p.spill_max);
    }
    worst
}
