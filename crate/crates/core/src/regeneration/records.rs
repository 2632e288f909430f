//! Record times of a walker path and the record-indexed parallelograms.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::cone::ConeSlope;
use crate::env::SpaceTimePoint;
use crate::walker::LatticePath;

/// Record times `R_k`, `k ≥ 1`, of a path relative to its starting point: the
/// first time the path enters the cone `∠((1 − v̄)k, 0)` shifted to the start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSequence {
    pub slope: ConeSlope,
    /// `(k, R_k)` for `k = 1, 2, ...` as long as the path reaches them.
    pub records: Vec<(u64, u64)>,
}

impl RecordSequence {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `R_k`, if reached.
    pub fn time(&self, k: u64) -> Option<u64> {
        let idx = usize::try_from(k.checked_sub(1)?).ok()?;
        self.records.get(idx).map(|&(_, r)| r)
    }

    /// `Y_{R_k}` on `path`, if reached.
    pub fn point(&self, path: &LatticePath, k: u64) -> Option<SpaceTimePoint> {
        self.time(k).map(|r| path.point(r as usize))
    }
}

/// Incrementally finds records of a path given relative to an anchor.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RecordTracker {
    slope: ConeSlope,
    anchor_key: i64,
    next_k: u64,
}

impl RecordTracker {
    pub(crate) fn new(slope: ConeSlope, anchor: SpaceTimePoint) -> Self {
        Self {
            slope,
            anchor_key: slope.point_key(anchor),
            next_k: 1,
        }
    }

    /// Feeds the next path point (times strictly increasing). Returns the
    /// record index reached at this point, if any. At most one index can be
    /// reached per step.
    #[inline]
    pub(crate) fn observe(&mut self, y: SpaceTimePoint) -> Option<u64> {
        let q = self.slope.point_key(y) - self.anchor_key;
        let step = self.slope.den() - self.slope.num();
        if q >= step * self.next_k as i64 {
            let k = self.next_k;
            self.next_k += 1;
            debug_assert!(q < step * self.next_k as i64);
            Some(k)
        } else {
            None
        }
    }
}

pub fn record_times(path: &LatticePath, slope: ConeSlope) -> RecordSequence {
    let mut tracker = RecordTracker::new(slope, path.start);
    let records = (0..=path.steps())
        .filter_map(|s| tracker.observe(path.point(s)).map(|k| (k, s as u64)))
        .collect();
    RecordSequence { slope, records }
}

/// `κ(y)`: the index of the last cone `∠_k = ∠((1 − v̄)k, 0)` (shifted to
/// `anchor`) containing `y`. Returns `None` when `y` lies in no cone `∠_k`
/// with `k ≥ 0`.
pub fn kappa(slope: ConeSlope, anchor: SpaceTimePoint, y: SpaceTimePoint) -> Option<i64> {
    if y.t < anchor.t {
        return None;
    }
    let q = slope.point_key(y) - slope.point_key(anchor);
    let k = Integer::div_floor(&q, &(slope.den() - slope.num()));
    (k >= 0).then_some(k)
}

/// One time row `[left, right]` of a parallelogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelogramRow {
    pub t: i64,
    pub left: i64,
    pub right: i64,
}

/// `𝒫_t(y) = (∠(y) ∖ ∠_{κ(y)+t}) ∩ (y + {n ≤ t / v̄})`, stored row by row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parallelogram {
    pub apex: SpaceTimePoint,
    pub kappa: i64,
    pub depth: u64,
    /// Only rows with at least one site.
    pub rows: Vec<ParallelogramRow>,
}

/// How a path left a parallelogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitReport {
    /// Index into the path of the first point outside.
    pub index: usize,
    pub point: SpaceTimePoint,
    pub through_right: bool,
}

impl Parallelogram {
    /// `None` when `y` is in no cone `∠_k`, `k ≥ 0`, relative to `anchor`.
    pub fn new(slope: ConeSlope, anchor: SpaceTimePoint, apex: SpaceTimePoint, depth: u64) -> Option<Self> {
        let kappa = kappa(slope, anchor, apex)?;
        let (num, den) = (slope.num(), slope.den());
        let top = Integer::div_floor(&(depth as i64 * den), &num);
        let bound = (den - num) * (kappa + depth as i64) + slope.point_key(anchor);
        let rows = (0..=top)
            .filter_map(|dn| {
                let t = apex.t + dn;
                let left = apex.x + Integer::div_ceil(&(num * dn), &den);
                // den·x − num·t < bound
                let right = Integer::div_floor(&(bound + num * t - 1), &den);
                (left <= right).then_some(ParallelogramRow { t, left, right })
            })
            .collect();
        Some(Self {
            apex,
            kappa,
            depth,
            rows,
        })
    }

    fn row(&self, t: i64) -> Option<&ParallelogramRow> {
        let first = self.rows.first()?.t;
        let idx = usize::try_from(t - first).ok()?;
        self.rows.get(idx).filter(|r| r.t == t)
    }

    pub fn contains(&self, p: SpaceTimePoint) -> bool {
        self.row(p.t).is_some_and(|r| r.left <= p.x && p.x <= r.right)
    }

    /// `∂⁺𝒫`: points outside whose left neighbour is inside.
    pub fn right_boundary(&self) -> Vec<SpaceTimePoint> {
        self.rows
            .iter()
            .map(|r| SpaceTimePoint::new(r.right + 1, r.t))
            .collect()
    }

    pub fn is_right_boundary(&self, p: SpaceTimePoint) -> bool {
        self.row(p.t).is_some_and(|r| p.x == r.right + 1)
    }

    /// First exit of `path` from the parallelogram, or `None` if the path is
    /// still inside at its end (or never starts inside).
    pub fn exit(&self, path: &LatticePath) -> Option<ExitReport> {
        if !self.contains(path.start) {
            return None;
        }
        (1..=path.steps()).map(|k| (k, path.point(k))).find(|&(_, p)| !self.contains(p)).map(|(index, point)| {
            ExitReport {
                index,
                point,
                through_right: self.is_right_boundary(point),
            }
        })
    }

    /// Steps a path from the apex needs to be sure to leave.
    pub fn exit_budget(&self) -> usize {
        self.rows.len() + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(positions: Vec<i64>) -> LatticePath {
        LatticePath {
            start: SpaceTimePoint::ORIGIN,
            positions,
        }
    }

    #[test]
    fn straight_path_records_every_step() {
        let p = path((0..=20).collect());
        let r = record_times(&p, ConeSlope::new(3, 10).unwrap());
        assert_eq!(r.records, (1..=20).map(|k| (k, k)).collect::<Vec<_>>());
    }

    #[test]
    fn zigzag_records() {
        let p = path(vec![0, 1, 0, 1, 2, 3]);
        let r = record_times(&p, ConeSlope::new(3, 10).unwrap());
        assert_eq!(r.records, vec![(1, 1), (2, 5)]);
    }

    #[test]
    fn kappa_of_records_is_their_index() {
        let slope = ConeSlope::new(1, 6).unwrap();
        let p = path(vec![0, 1, 2, 1, 2, 3, 4, 3, 4, 5, 6, 7, 6, 7, 8]);
        let r = record_times(&p, slope);
        assert!(!r.is_empty());
        for &(k, t) in &r.records {
            assert_eq!(kappa(slope, p.start, p.point(t as usize)), Some(k as i64));
        }
    }

    #[test]
    fn parallelogram_shape() {
        // v̄ = 1/2, apex at the first record of a straight path.
        let slope = ConeSlope::new(1, 2).unwrap();
        let y = SpaceTimePoint::new(1, 1);
        let par = Parallelogram::new(slope, SpaceTimePoint::ORIGIN, y, 2).unwrap();
        assert_eq!(par.kappa, 1);
        // rows n = 1..=5; right edge: 2x − t < 3 → x ≤ (t + 2) / 2
        let expected = vec![
            ParallelogramRow { t: 1, left: 1, right: 1 },
            ParallelogramRow { t: 2, left: 2, right: 2 },
            ParallelogramRow { t: 3, left: 2, right: 2 },
            ParallelogramRow { t: 4, left: 3, right: 3 },
            ParallelogramRow { t: 5, left: 3, right: 3 },
        ];
        assert_eq!(par.rows, expected);
        assert!(par.is_right_boundary(SpaceTimePoint::new(3, 2)));
        assert!(!par.contains(SpaceTimePoint::new(3, 2)));
    }

    #[test]
    fn straight_path_exits_right_at_the_later_record() {
        let slope = ConeSlope::new(3, 10).unwrap();
        let p = path((0..=40).collect());
        let recs = record_times(&p, slope);
        for k in 1..5u64 {
            let y = recs.point(&p, k).unwrap();
            let t = 3u64;
            let par = Parallelogram::new(slope, p.start, y, t).unwrap();
            let sub = LatticePath {
                start: y,
                positions: p.positions[y.t as usize..].to_vec(),
            };
            let exit = par.exit(&sub).unwrap();
            assert!(exit.through_right);
            assert_eq!(exit.point, recs.point(&p, k + t).unwrap());
        }
    }

    #[test]
    fn left_exit_is_not_through_right() {
        let slope = ConeSlope::new(1, 3).unwrap();
        let y = SpaceTimePoint::ORIGIN;
        let par = Parallelogram::new(slope, y, y, 4).unwrap();
        let p = path(vec![0, -1]);
        let exit = par.exit(&p).unwrap();
        assert!(!exit.through_right);
        assert_eq!(exit.index, 1);
    }
}
