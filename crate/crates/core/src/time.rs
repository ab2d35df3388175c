//! Millisecond-resolution instants on the factory's wall clock.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Timelike};

use crate::error::Error;

/// Milliseconds since the Unix epoch, interpreted as UTC wall-clock time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub i64);

const TABLE_FORMATS: [&str; 2] = ["%Y/%m/%d %H:%M:%S%.f", "%Y/%m/%d %H:%M:%S"];
const ISO_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S",
];

impl Timestamp {
    pub fn from_millis(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn add_millis(self, ms: i64) -> Self {
        Timestamp(self.0 + ms)
    }

    /// Hour of day (0..24) on the wall clock.
    pub fn hour(self) -> u32 {
        self.naive().hour()
    }

    fn naive(self) -> NaiveDateTime {
        DateTime::from_timestamp_millis(self.0)
            .expect("timestamp within chrono range")
            .naive_utc()
    }

    /// Accepts `YYYY/MM/DD HH:MM:SS.mmm` (the database export form) or ISO-8601,
    /// with or without fractional seconds, `Z`, or a numeric offset.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().trim_matches(|c| c == '\'' || c == '"');
        for f in TABLE_FORMATS.iter().chain(ISO_FORMATS.iter()) {
            if let Ok(t) = NaiveDateTime::parse_from_str(s, f) {
                return Some(Timestamp(t.and_utc().timestamp_millis()));
            }
        }
        if let Ok(t) = DateTime::parse_from_rfc3339(s) {
            return Some(Timestamp(t.timestamp_millis()));
        }
        if let Some(stripped) = s.strip_suffix('Z') {
            for f in ISO_FORMATS {
                if let Ok(t) = NaiveDateTime::parse_from_str(stripped, f) {
                    return Some(Timestamp(t.and_utc().timestamp_millis()));
                }
            }
        }
        None
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.naive().format("%Y/%m/%d %H:%M:%S%.3f"))
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse(s).ok_or_else(|| Error::invalid(format!("unrecognised timestamp {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_and_iso_forms_agree() {
        let a = Timestamp::parse("2022/02/07 10:51:30.000").unwrap();
        let b = Timestamp::parse("2022-02-07T10:51:30Z").unwrap();
        let c = Timestamp::parse("'2022-02-08 06:41:16'").unwrap();
        assert_eq!(a, b);
        assert_eq!(c.hour(), 6);
        assert_eq!(a.to_string(), "2022/02/07 10:51:30.000");
        assert_eq!(Timestamp::parse("2022/02/07 10:51:30.250").unwrap().0 - a.0, 250);
    }

    #[test]
    fn offsets_are_normalised() {
        let a = Timestamp::parse("2022-02-07T11:51:30+01:00").unwrap();
        assert_eq!(a, Timestamp::parse("2022/02/07 10:51:30").unwrap());
    }

    #[test]
    fn garbage_rejected() {
        assert!(Timestamp::parse("07/02/2022").is_none());
        assert!(Timestamp::parse("").is_none());
    }
}
