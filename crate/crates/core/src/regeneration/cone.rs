//! Space-time cones with a rational slope and exact integer membership tests.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::env::SpaceTimePoint;
use crate::error::{Error, Result};

/// The cone slope `v̄ = num / den` in `(0, 1)`, always in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConeSlope {
    num: i64,
    den: i64,
}

/// Largest denominator accepted when a target speed is given as a float.
const MAX_DENOMINATOR: i64 = 1_000;

impl ConeSlope {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den <= 0 || num <= 0 || num >= den {
            return Err(Error::config(format!("cone slope {num}/{den} must lie in (0, 1)")));
        }
        let r = Ratio::new(num, den);
        Ok(Self {
            num: *r.numer(),
            den: *r.denom(),
        })
    }

    /// `v̄ = v⋆ / 3` for a target speed `v⋆ = num / den` in `(0, 1]`.
    pub fn from_v_star(v_star: Ratio<i64>) -> Result<Self> {
        if v_star <= Ratio::from_integer(0) || v_star > Ratio::from_integer(1) {
            return Err(Error::config(format!("v_star = {v_star} must lie in (0, 1]")));
        }
        let v_bar = v_star / 3;
        Self::new(*v_bar.numer(), *v_bar.denom())
    }

    /// As [`from_v_star`](Self::from_v_star), with `v⋆` read as the simplest
    /// fraction with denominator at most 1000 closest to `v_star`.
    pub fn from_v_star_f64(v_star: f64) -> Result<Self> {
        Self::from_v_star(v_star_ratio(v_star)?)
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn v_bar(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `v⋆ = 3 v̄` as a reduced fraction.
    pub fn v_star(&self) -> Ratio<i64> {
        Ratio::new(3 * self.num, self.den)
    }

    /// `den·x − num·t`. Every cone test is a comparison of these keys.
    #[inline]
    pub fn key(&self, x: i64, t: i64) -> i64 {
        self.den * x - self.num * t
    }

    #[inline]
    pub fn point_key(&self, y: SpaceTimePoint) -> i64 {
        self.key(y.x, y.t)
    }
}

/// Best rational approximation of a float in `(0, 1]` with a bounded
/// denominator (Stern-Brocot walk).
pub fn v_star_ratio(v: f64) -> Result<Ratio<i64>> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::config(format!("v_star = {v} must lie in (0, 1]")));
    }
    let (mut lo_n, mut lo_d, mut hi_n, mut hi_d) = (0i64, 1i64, 1i64, 1i64);
    let mut best = Ratio::new(1, 1);
    let mut best_err = (1.0 - v).abs();
    loop {
        let (mn, md) = (lo_n + hi_n, lo_d + hi_d);
        if md > MAX_DENOMINATOR {
            break;
        }
        let m = mn as f64 / md as f64;
        let err = (m - v).abs();
        if err < best_err {
            best = Ratio::new(mn, md);
            best_err = err;
        }
        if err <= f64::EPSILON * 4.0 {
            break;
        }
        if m < v {
            lo_n = mn;
            lo_d = md;
        } else {
            hi_n = mn;
            hi_d = md;
        }
    }
    Ok(best)
}

/// A cone pair anchored at `apex`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub apex: SpaceTimePoint,
    pub slope: ConeSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeSide {
    Forward,
    Backward,
    Neither,
}

impl ConeSpec {
    pub fn new(apex: SpaceTimePoint, slope: ConeSlope) -> Self {
        Self { apex, slope }
    }

    pub fn in_forward(&self, p: SpaceTimePoint) -> bool {
        let (dx, dn) = (p.x - self.apex.x, p.t - self.apex.t);
        dx >= 0 && dn >= 0 && dx * self.slope.den >= self.slope.num * dn
    }

    pub fn in_backward(&self, p: SpaceTimePoint) -> bool {
        let (dx, dn) = (p.x - self.apex.x, p.t - self.apex.t);
        dx <= 0 && dn <= 0 && dx * self.slope.den < self.slope.num * dn
    }
}

pub fn cone_classify(point: SpaceTimePoint, cone: &ConeSpec) -> ConeSide {
    if cone.in_forward(point) {
        ConeSide::Forward
    } else if cone.in_backward(point) {
        ConeSide::Backward
    } else {
        ConeSide::Neither
    }
}

/// How a trajectory meets the cone pair at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryClass {
    /// Meets `∠(y)` only.
    Forward,
    /// Meets `⦬(y)` only.
    Backward,
    /// Meets both.
    Crossing,
    /// Meets neither inside the stored window.
    Neither,
}

/// Prefix minima and suffix maxima of `den·w(t) − num·t` along a stored
/// trajectory segment `w`, which turn cone-hitting questions into O(1) lookups.
///
/// For `t ≥ n` the forward cone condition reduces to `key(w(t), t) ≥ key(y)`,
/// and for `t ≤ n` the backward condition to `key(w(t), t) < key(y)`.
#[derive(Debug, Clone, Default)]
pub struct ConeProfile {
    t_lo: i64,
    prefix_min: Vec<i64>,
    suffix_max: Vec<i64>,
}

impl ConeProfile {
    pub fn new(slope: ConeSlope, t_lo: i64, positions: &[i64]) -> Self {
        let mut p = Self::default();
        p.fill(slope, t_lo, positions);
        p
    }

    /// Recomputes the profile in place, reusing the buffers.
    pub fn fill(&mut self, slope: ConeSlope, t_lo: i64, positions: &[i64]) {
        self.t_lo = t_lo;
        let len = positions.len();
        self.prefix_min.clear();
        self.suffix_max.clear();
        self.suffix_max.resize(len, 0);
        let mut run = i64::MAX;
        for (k, &w) in positions.iter().enumerate() {
            run = run.min(slope.key(w, t_lo + k as i64));
            self.prefix_min.push(run);
        }
        let mut run = i64::MIN;
        for (k, &w) in positions.iter().enumerate().rev() {
            run = run.max(slope.key(w, t_lo + k as i64));
            self.suffix_max[k] = run;
        }
    }

    pub fn t_hi(&self) -> i64 {
        self.t_lo + self.prefix_min.len() as i64 - 1
    }

    #[inline]
    pub fn hits_forward_key(&self, n: i64, key: i64) -> bool {
        if self.prefix_min.is_empty() || n > self.t_hi() {
            return false;
        }
        let k = (n.max(self.t_lo) - self.t_lo) as usize;
        self.suffix_max[k] >= key
    }

    #[inline]
    pub fn hits_backward_key(&self, n: i64, key: i64) -> bool {
        if self.prefix_min.is_empty() || n < self.t_lo {
            return false;
        }
        let k = (n.min(self.t_hi()) - self.t_lo) as usize;
        self.prefix_min[k] < key
    }

    pub fn classify(&self, slope: ConeSlope, y: SpaceTimePoint) -> TrajectoryClass {
        let key = slope.point_key(y);
        match (self.hits_forward_key(y.t, key), self.hits_backward_key(y.t, key)) {
            (true, true) => TrajectoryClass::Crossing,
            (true, false) => TrajectoryClass::Forward,
            (false, true) => TrajectoryClass::Backward,
            (false, false) => TrajectoryClass::Neither,
        }
    }

    #[inline]
    pub fn crosses(&self, slope: ConeSlope, y: SpaceTimePoint) -> bool {
        let key = slope.point_key(y);
        self.hits_forward_key(y.t, key) && self.hits_backward_key(y.t, key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(num: i64, den: i64) -> ConeSlope {
        ConeSlope::new(num, den).unwrap()
    }

    #[test]
    fn apex_is_forward_only() {
        let c = ConeSpec::new(SpaceTimePoint::ORIGIN, s(3, 10));
        assert_eq!(cone_classify(SpaceTimePoint::ORIGIN, &c), ConeSide::Forward);
        assert!(!c.in_backward(SpaceTimePoint::ORIGIN));
    }

    #[test]
    fn hand_checked_points() {
        let c = ConeSpec::new(SpaceTimePoint::ORIGIN, s(3, 10));
        assert_eq!(cone_classify(SpaceTimePoint::new(-1, -1), &c), ConeSide::Backward);
        assert_eq!(cone_classify(SpaceTimePoint::new(1, 5), &c), ConeSide::Neither);
        assert_eq!(cone_classify(SpaceTimePoint::new(3, 10), &c), ConeSide::Forward);
        // boundary of the backward cone is excluded
        assert_eq!(cone_classify(SpaceTimePoint::new(-3, -10), &c), ConeSide::Neither);
        assert_eq!(cone_classify(SpaceTimePoint::new(0, -1), &c), ConeSide::Neither);
    }

    #[test]
    fn slope_from_target_speed() {
        assert_eq!(ConeSlope::from_v_star_f64(0.9).unwrap(), s(3, 10));
        assert_eq!(ConeSlope::from_v_star_f64(0.5).unwrap(), s(1, 6));
        assert_eq!(ConeSlope::from_v_star_f64(1.0).unwrap(), s(1, 3));
        assert!(ConeSlope::from_v_star_f64(0.0).is_err());
        assert!(ConeSlope::from_v_star_f64(1.2).is_err());
        assert!(ConeSlope::new(2, 2).is_err());
        assert_eq!(s(2, 4), s(1, 2));
    }

    #[test]
    fn profile_agrees_with_pointwise_membership() {
        let slope = s(1, 4);
        let path = vec![0, 1, 0, -1, -2, -1, 0, 1, 2, 3, 4, 3];
        let t_lo = -5;
        let prof = ConeProfile::new(slope, t_lo, &path);
        for x in -4..5 {
            for n in -8..9 {
                let y = SpaceTimePoint::new(x, n);
                let c = ConeSpec::new(y, slope);
                let pts = path.iter().enumerate().map(|(k, &w)| SpaceTimePoint::new(w, t_lo + k as i64));
                let fwd = pts.clone().any(|p| c.in_forward(p));
                let bwd = pts.clone().any(|p| c.in_backward(p));
                let expected = match (fwd, bwd) {
                    (true, true) => TrajectoryClass::Crossing,
                    (true, false) => TrajectoryClass::Forward,
                    (false, true) => TrajectoryClass::Backward,
                    (false, false) => TrajectoryClass::Neither,
                };
                assert_eq!(prof.classify(slope, y), expected, "y = {y:?}");
            }
        }
    }
}
