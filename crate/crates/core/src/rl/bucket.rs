use serde::{Deserialize, Serialize};

use super::attributes::{Attribute, Direction};
use crate::error::{Error, Result};

/// Maps an attribute's raw value to a bucket index.
///
/// `starts` holds the inclusive lower bound of each bucket as a percentage of
/// the attribute's range; the first bound is 0 and the last bucket extends to
/// 100%. Boolean attributes always use two buckets and map 0/1 directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct BucketSpec {
    pub attribute: Attribute,
    pub starts: Vec<f64>,
    /// `starts[1..]` converted to raw attribute units.
    thresholds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    attribute: Attribute,
    starts: Vec<f64>,
}

impl TryFrom<RawSpec> for BucketSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        BucketSpec::explicit(r.attribute, r.starts)
    }
}

impl From<BucketSpec> for RawSpec {
    fn from(b: BucketSpec) -> RawSpec {
        RawSpec {
            attribute: b.attribute,
            starts: b.starts,
        }
    }
}

/// Default lower bounds (percent of range) for a bucket count and direction.
pub fn default_starts(count: usize, direction: Direction) -> Option<Vec<f64>> {
    let s: &[f64] = match (direction, count) {
        (_, 1) => &[0.0],
        (Direction::DecreasingWidths, 2) => &[0.0, 51.0],
        (Direction::DecreasingWidths, 3) => &[0.0, 51.0, 81.0],
        (Direction::DecreasingWidths, 4) => &[0.0, 51.0, 81.0, 91.0],
        (Direction::DecreasingWidths, 8) => &[0.0, 51.0, 81.0, 84.0, 87.0, 91.0, 94.0, 97.0],
        (Direction::IncreasingWidths, 2) => &[0.0, 30.0],
        (Direction::IncreasingWidths, 3) => &[0.0, 10.0, 30.0],
        (Direction::IncreasingWidths, 4) => &[0.0, 10.0, 30.0, 60.0],
        (Direction::IncreasingWidths, 8) => &[0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
        _ => return None,
    };
    Some(s.to_vec())
}

impl BucketSpec {
    /// Spec with `count` buckets in the attribute's default direction.
    pub fn new(attribute: Attribute, count: usize) -> Result<Self> {
        Self::with_direction(attribute, count, attribute.direction())
    }

    pub fn with_direction(attribute: Attribute, count: usize, direction: Direction) -> Result<Self> {
        if attribute.is_boolean() && count != 2 {
            return Err(Error::Bucket(format!(
                "{attribute} is boolean and takes exactly 2 buckets, got {count}"
            )));
        }
        let starts = default_starts(count, direction).ok_or_else(|| {
            Error::Bucket(format!(
                "{attribute}: no default boundaries for {count} buckets (use 1, 2, 3, 4 or 8)"
            ))
        })?;
        Self::explicit(attribute, starts)
    }

    /// Spec from an explicit boundary list, validated.
    pub fn explicit(attribute: Attribute, starts: Vec<f64>) -> Result<Self> {
        let max = attribute.max_value();
        let thresholds = starts.iter().skip(1).map(|&p| p / 100.0 * max).collect();
        let spec = BucketSpec {
            attribute,
            starts,
            thresholds,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.attribute;
        let s = &self.starts;
        if s.first() != Some(&0.0) {
            return Err(Error::Bucket(format!("{a}: first boundary must be 0 (gap at the bottom of the range)")));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Bucket(format!("{a}: boundaries {s:?} are not strictly increasing")));
        }
        if s.iter().any(|b| !(0.0..=100.0).contains(b)) {
            return Err(Error::Bucket(format!("{a}: boundaries must lie within 0..=100 percent")));
        }
        if a.is_boolean() && s.len() != 2 {
            return Err(Error::Bucket(format!("{a} is boolean and takes exactly 2 buckets")));
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.starts.len()
    }

    /// Bucket index of a raw value (clamped to the attribute range first).
    pub fn bucketize(&self, value: f64) -> u8 {
        let a = self.attribute;
        let v = super::attributes::clamp(a, value);
        if a.is_boolean() {
            return (v >= 0.5) as u8;
        }
        self.thresholds.iter().take_while(|&&t| t <= v).count() as u8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        let l1 = BucketSpec::new(Attribute::L1mp, 3).unwrap();
        assert_eq!(l1.bucketize(55.0), 1);
        assert_eq!(l1.bucketize(50.0), 0);
        assert_eq!(l1.bucketize(81.0), 2);
        let nrgmi = BucketSpec::new(Attribute::Nrgmi, 4).unwrap();
        assert_eq!(nrgmi.bucketize(0.35 * 24.0), 2);
        assert_eq!(nrgmi.bucketize(0.0), 0);
        assert_eq!(nrgmi.bucketize(24.0), 3);
    }

    #[test]
    fn malformed_rejected() {
        assert!(BucketSpec::explicit(Attribute::L1mp, vec![10.0, 50.0]).is_err());
        assert!(BucketSpec::explicit(Attribute::L1mp, vec![0.0, 50.0, 50.0]).is_err());
        assert!(BucketSpec::explicit(Attribute::L1mp, vec![0.0, 150.0]).is_err());
        assert!(BucketSpec::new(Attribute::Tbw, 4).is_err());
        assert!(BucketSpec::new(Attribute::Nri, 5).is_err());
    }

    #[test]
    fn booleans_map_directly() {
        let b = BucketSpec::new(Attribute::Tbw, 2).unwrap();
        assert_eq!(b.bucketize(0.0), 0);
        assert_eq!(b.bucketize(1.0), 1);
    }
}
