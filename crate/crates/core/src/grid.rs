//! Evaluation grids and the analyzed engine variants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Engine variant a bound or assumption set refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Simultaneous update.
    Sim,
    /// Sequential update (posted prices) with offset 0.
    Seq0,
    /// Sequential update with offset 1.
    Seq1,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Sim, Variant::Seq0, Variant::Seq1];

    /// Upper corner of the analyzed region for horizon `t`.
    pub fn region_upper(self, horizon: usize) -> f64 {
        match self {
            Variant::Sim | Variant::Seq0 => horizon as f64,
            Variant::Seq1 => horizon.saturating_sub(1) as f64,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Sim => "sim",
            Variant::Seq0 => "seq0",
            Variant::Seq1 => "seq1",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sim" => Ok(Variant::Sim),
            "seq0" => Ok(Variant::Seq0),
            "seq1" => Ok(Variant::Seq1),
            other => Err(Error::InvalidConfig(format!("unknown variant '{other}'"))),
        }
    }
}

/// Uniform grid on the box `[0, upper]`, always containing 0 and the corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    upper: Vec<f64>,
    step: f64,
}

impl GridSpec {
    pub fn new(upper: Vec<f64>, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidConfig(format!("grid step must be positive, got {step}")));
        }
        if upper.is_empty() {
            return Err(Error::InvalidConfig("grid needs at least one dimension".into()));
        }
        if let Some(u) = upper.iter().find(|u| !(**u >= 0.0) || !u.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "grid upper bound must be nonnegative, got {u}"
            )));
        }
        Ok(Self { upper, step })
    }

    /// The box `[0, T]^D` (SIM, SEQ0) or `[0, T - 1]^D` (SEQ1).
    pub fn for_variant(variant: Variant, horizon: usize, dimension: usize, step: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        Self::new(vec![variant.region_upper(horizon); dimension], step)
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn dimension(&self) -> usize {
        self.upper.len()
    }

    /// Grid values along coordinate `d`.
    pub fn axis(&self, d: usize) -> Vec<f64> {
        let hi = self.upper[d];
        let n = (hi / self.step + 1e-9).floor() as usize;
        let mut v: Vec<f64> = (0..=n).map(|k| k as f64 * self.step).collect();
        let last = *v.last().expect("axis has the origin");
        if (hi - last).abs() <= 1e-9 * hi.max(1.0) {
            *v.last_mut().expect("nonempty") = hi;
        } else {
            v.push(hi);
        }
        v
    }

    pub fn point_count(&self) -> usize {
        (0..self.dimension()).map(|d| self.axis(d).len()).product()
    }

    /// All points, last coordinate varying fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dimension()).map(|d| self.axis(d)).collect();
        let mut out = Vec::with_capacity(self.point_count());
        let mut idx = vec![0usize; axes.len()];
        loop {
            out.push(idx.iter().enumerate().map(|(d, &k)| axes[d][k]).collect());
            let mut d = axes.len();
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }

    /// Whether the grid box contains `[0, target]`.
    pub fn covers(&self, target: &[f64]) -> bool {
        target.len() == self.upper.len() && self.upper.iter().zip(target).all(|(u, t)| *u >= *t - 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_includes_corner() {
        let g = GridSpec::new(vec![10.0], 0.1).unwrap();
        let a = g.axis(0);
        assert_eq!(a.len(), 101);
        assert_eq!(a[0], 0.0);
        assert_eq!(*a.last().unwrap(), 10.0);
        let h = GridSpec::new(vec![1.0], 0.3).unwrap();
        assert_eq!(h.axis(0).len(), 5);
        assert_eq!(*h.axis(0).last().unwrap(), 1.0);
    }

    #[test]
    fn degenerate_axis() {
        let g = GridSpec::for_variant(Variant::Seq1, 1, 2, 0.1).unwrap();
        assert_eq!(g.points(), vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn point_order_and_count() {
        let g = GridSpec::new(vec![1.0, 2.0], 1.0).unwrap();
        let p = g.points();
        assert_eq!(g.point_count(), 6);
        assert_eq!(p[0], vec![0.0, 0.0]);
        assert_eq!(p[1], vec![0.0, 1.0]);
        assert_eq!(p[5], vec![1.0, 2.0]);
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("SEQ1".parse::<Variant>().unwrap(), Variant::Seq1);
        assert!("seq2".parse::<Variant>().is_err());
        assert_eq!(Variant::Seq0.to_string(), "seq0");
    }

    #[test]
    fn invalid_step() {
        assert!(GridSpec::new(vec![1.0], 0.0).is_err());
        assert!(GridSpec::new(vec![-1.0], 0.1).is_err());
    }
}
