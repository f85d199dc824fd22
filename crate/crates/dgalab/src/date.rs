//! Minimal UTC calendar handling: `YYYY-MM-DD` dates and RFC 3339
//! timestamps. Implemented locally so that date-derived seeds and query-log
//! spans behave identically everywhere, with no timezone database involved.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A calendar date (proleptic Gregorian, UTC).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CivilDate {
    pub year: i32,
    pub month: u32,
    pub day: u32,
}

impl CivilDate {
    pub fn new(year: i32, month: u32, day: u32) -> Option<Self> {
        if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
            return None;
        }
        Some(Self { year, month, day })
    }

    /// Strict `YYYY-MM-DD` parse.
    pub fn parse(s: &str) -> Option<Self> {
        let b = s.as_bytes();
        if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
            return None;
        }
        let year: i32 = digits(&s[0..4])?.try_into().ok()?;
        let month = digits(&s[5..7])? as u32;
        let day = digits(&s[8..10])? as u32;
        Self::new(year, month, day)
    }

    /// Days since 1970-01-01 (negative before the epoch).
    pub fn days_from_epoch(self) -> i64 {
        let y = if self.month <= 2 {
            self.year as i64 - 1
        } else {
            self.year as i64
        };
        let era = if y >= 0 { y } else { y - 399 } / 400;
        let yoe = y - era * 400;
        let mp = if self.month > 2 {
            self.month - 3
        } else {
            self.month + 9
        } as i64;
        let doy = (153 * mp + 2) / 5 + self.day as i64 - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146097 + doe - 719468
    }

    pub fn from_days_since_epoch(z: i64) -> Self {
        let z = z + 719468;
        let era = if z >= 0 { z } else { z - 146096 } / 146097;
        let doe = z - era * 146097;
        let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        let y = yoe + era * 400;
        let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        let mp = (5 * doy + 2) / 153;
        let day = (doy - (153 * mp + 2) / 5 + 1) as u32;
        let month = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
        let year = (if month <= 2 { y + 1 } else { y }) as i32;
        Self { year, month, day }
    }
}

impl fmt::Display for CivilDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

fn digits(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// A UTC instant with second resolution, kept as seconds since the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

impl Timestamp {
    /// Parse an RFC 3339 timestamp such as `2018-12-04T08:15:00Z` or
    /// `2018-12-04T08:15:00.250+02:00`. Fractional seconds are accepted and
    /// truncated; the offset is applied so the result is UTC.
    pub fn parse_rfc3339(s: &str) -> Option<Self> {
        if s.len() < 20 {
            return None;
        }
        let date = CivilDate::parse(&s[0..10])?;
        let sep = s.as_bytes()[10];
        if sep != b'T' && sep != b't' && sep != b' ' {
            return None;
        }
        let rest = &s[11..];
        if rest.len() < 8 || rest.as_bytes()[2] != b':' || rest.as_bytes()[5] != b':' {
            return None;
        }
        let hour = digits(&rest[0..2])?;
        let minute = digits(&rest[3..5])?;
        let second = digits(&rest[6..8])?;
        if hour > 23 || minute > 59 || second > 60 {
            return None;
        }
        let second = second.min(59); // fold a leap second onto :59
        let mut tail = &rest[8..];
        if tail.starts_with('.') {
            let end = tail[1..]
                .find(|c: char| !c.is_ascii_digit())
                .map(|i| i + 1)?;
            if end == 1 {
                return None; // dot with no digits
            }
            tail = &tail[end..];
        }
        let offset_secs: i64 = match tail.as_bytes() {
            [b'Z'] | [b'z'] => 0,
            [sign @ (b'+' | b'-'), ..] if tail.len() == 6 && tail.as_bytes()[3] == b':' => {
                let oh = digits(&tail[1..3])?;
                let om = digits(&tail[4..6])?;
                if oh > 23 || om > 59 {
                    return None;
                }
                let magnitude = (oh * 3600 + om * 60) as i64;
                if *sign == b'+' {
                    magnitude
                } else {
                    -magnitude
                }
            }
            _ => return None,
        };
        let local = date.days_from_epoch() * 86_400
            + hour as i64 * 3600
            + minute as i64 * 60
            + second as i64;
        Some(Self(local - offset_secs))
    }

    /// The UTC calendar date this instant falls on.
    pub fn utc_date(self) -> CivilDate {
        CivilDate::from_days_since_epoch(self.0.div_euclid(86_400))
    }

    /// Render as `YYYY-MM-DDTHH:MM:SSZ`.
    pub fn to_rfc3339(self) -> String {
        let date = self.utc_date();
        let tod = self.0.rem_euclid(86_400);
        format!(
            "{}T{:02}:{:02}:{:02}Z",
            date,
            tod / 3600,
            (tod % 3600) / 60,
            tod % 60
        )
    }

    pub fn now() -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0);
        Self(secs)
    }
}
