use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Day-precision time of an event or an attribute qualifier.
///
/// Intervals are closed on both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawTimeSpec", into = "RawTimeSpec")]
pub enum TimeSpec {
    Point(NaiveDate),
    Interval { start: NaiveDate, end: NaiveDate },
}

impl TimeSpec {
    pub fn point(day: NaiveDate) -> Self {
        TimeSpec::Point(day)
    }

    pub fn interval(start: NaiveDate, end: NaiveDate) -> Result<Self, ModelError> {
        if start > end {
            return Err(ModelError::InvertedInterval { start, end });
        }
        Ok(TimeSpec::Interval { start, end })
    }

    pub fn start(&self) -> NaiveDate {
        match *self {
            TimeSpec::Point(d) => d,
            TimeSpec::Interval { start, .. } => start,
        }
    }

    pub fn end(&self) -> NaiveDate {
        match *self {
            TimeSpec::Point(d) => d,
            TimeSpec::Interval { end, .. } => end,
        }
    }

    /// Closed-interval overlap. A point is treated as the interval `[p, p]`.
    pub fn overlaps(&self, other: &TimeSpec) -> bool {
        self.start() <= other.end() && other.start() <= self.end()
    }

    pub fn span_days(&self) -> i64 {
        (self.end() - self.start()).num_days()
    }
}

impl fmt::Display for TimeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSpec::Point(d) => write!(f, "{d}"),
            TimeSpec::Interval { start, end } => write!(f, "{start}..{end}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    point: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end: Option<NaiveDate>,
}

impl TryFrom<RawTimeSpec> for TimeSpec {
    type Error = ModelError;

    fn try_from(raw: RawTimeSpec) -> Result<Self, Self::Error> {
        match (raw.point, raw.start, raw.end) {
            (Some(p), None, None) => Ok(TimeSpec::Point(p)),
            (None, Some(s), Some(e)) => TimeSpec::interval(s, e),
            _ => Err(ModelError::MalformedTime),
        }
    }
}

impl From<TimeSpec> for RawTimeSpec {
    fn from(t: TimeSpec) -> Self {
        match t {
            TimeSpec::Point(p) => RawTimeSpec { point: Some(p), start: None, end: None },
            TimeSpec::Interval { start, end } => RawTimeSpec { point: None, start: Some(start), end: Some(end) },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn inverted_interval_rejected() {
        assert!(TimeSpec::interval(d("2000-01-02"), d("2000-01-01")).is_err());
        assert!(TimeSpec::interval(d("2000-01-01"), d("2000-01-01")).is_ok());
    }

    #[test]
    fn point_overlap_is_closed() {
        let iv = TimeSpec::interval(d("1990-01-01"), d("1995-12-31")).unwrap();
        assert!(TimeSpec::point(d("1990-01-01")).overlaps(&iv));
        assert!(TimeSpec::point(d("1995-12-31")).overlaps(&iv));
        assert!(!TimeSpec::point(d("1996-01-01")).overlaps(&iv));
    }

    #[test]
    fn json_shape() {
        let p: TimeSpec = serde_json::from_str(r#"{"point":"2022-02-24"}"#).unwrap();
        assert_eq!(p, TimeSpec::point(d("2022-02-24")));
        let i: TimeSpec = serde_json::from_str(r#"{"start":"2021-03-01","end":"2022-02-23"}"#).unwrap();
        assert_eq!(i.start(), d("2021-03-01"));
        assert!(serde_json::from_str::<TimeSpec>(r#"{"point":"2022-02-24","start":"2021-03-01"}"#).is_err());
        assert!(serde_json::from_str::<TimeSpec>(r#"{"start":"2022-03-01","end":"2021-02-23"}"#).is_err());
        assert_eq!(serde_json::to_string(&i).unwrap(), r#"{"start":"2021-03-01","end":"2022-02-23"}"#);
    }
}
