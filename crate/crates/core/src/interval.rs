//! Closed real intervals and the coefficient-magnitude range bound for
//! Chebyshev expansions.
//!
//! Intervals are stored in endpoint form. Arithmetic is plain floating point
//! without directed rounding.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// `[center - half_width, center + half_width]`.
    pub fn from_center_width(center: f64, half_width: f64) -> Result<Self> {
        if half_width < 0.0 {
            return Err(Error::InvalidInterval {
                lo: center - half_width,
                hi: center + half_width,
            });
        }
        Self::new(center - half_width, center + half_width)
    }

    /// Zero-width interval; behaves as the real number `value`.
    pub fn point(value: f64) -> Self {
        Self { lo: value, hi: value }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Multiplication by a real scalar; endpoints swap for negative `c`.
    pub fn scale(&self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval { lo: c * self.lo, hi: c * self.hi }
        } else {
            Interval { lo: c * self.hi, hi: c * self.lo }
        }
    }
}

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        Interval { lo: self.lo + rhs.lo, hi: self.hi + rhs.hi }
    }
}

impl Sub for Interval {
    type Output = Interval;

    fn sub(self, rhs: Interval) -> Interval {
        Interval { lo: self.lo - rhs.hi, hi: self.hi - rhs.lo }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Range enclosure of `beta0 + sum_i betas[i] * phi_i(u)` when every `phi_i`
/// maps the canonical box into `[-1, 1]`.
pub fn chebyshev_coefficient_bound(beta0: f64, betas: &[f64]) -> Interval {
    let unit = Interval { lo: -1.0, hi: 1.0 };
    betas
        .iter()
        .fold(Interval::point(beta0), |acc, &b| acc + unit.scale(b))
}

/// Cartesian product of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainBox {
    intervals: Vec<Interval>,
}

impl UncertainBox {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("box must have at least one dimension".into()));
        }
        Ok(Self { intervals })
    }

    /// Component `i` is `[center_i - widths_i, center_i + widths_i]`.
    pub fn from_center_width(center: &[f64], widths: &[f64]) -> Result<Self> {
        if center.len() != widths.len() {
            return Err(Error::DimensionMismatch { expected: center.len(), got: widths.len() });
        }
        let intervals = center
            .iter()
            .zip(widths)
            .map(|(&c, &w)| Interval::from_center_width(c, w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(intervals)
    }

    /// `[-1, 1]^dimension`.
    pub fn canonical(dimension: usize) -> Self {
        Self { intervals: vec![Interval { lo: -1.0, hi: 1.0 }; dimension.max(1)] }
    }

    pub fn dimension(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn get(&self, i: usize) -> Interval {
        self.intervals[i]
    }

    pub fn lower(&self) -> Vec<f64> {
        self.intervals.iter().map(Interval::lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.intervals.iter().map(Interval::hi).collect()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.intervals.iter().map(Interval::midpoint).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension() && self.intervals.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }
}
