use serde::Serialize;

use super::AnalyticsError;
use crate::ingest::{Category, PostRecord};
use crate::Timestamp;

/// Post/pre rate ratio at or above which a response is `Huge`.
pub const HUGE_RATIO: f64 = 3.0;
/// Post/pre rate ratio at or above which a response is `Minor`.
pub const MINOR_RATIO: f64 = 1.5;
/// A post-event bin is "elevated" above pre_rate + LATENCY_SIGMAS * sd_pre.
pub const LATENCY_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategorySeries {
    pub category: Category,
    pub bin_width: i64,
    pub t0: Timestamp,
    pub counts: Vec<u64>,
}

impl CategorySeries {
    pub fn bin_of(&self, t: Timestamp) -> Option<usize> {
        if t < self.t0 {
            return None;
        }
        let b = ((t - self.t0) / self.bin_width) as usize;
        (b < self.counts.len()).then_some(b)
    }
}

/// Bins the posts of one category over `[t0, t1)`.
pub fn category_series(
    posts: &[PostRecord],
    category: Category,
    bin_width: i64,
    t0: Timestamp,
    t1: Timestamp,
) -> Result<CategorySeries, AnalyticsError> {
    if bin_width <= 0 || t1 <= t0 {
        return Err(AnalyticsError::InvalidParameter(format!(
            "need bin_width > 0 and t1 > t0 (got {bin_width}, [{t0}, {t1}))"
        )));
    }
    let n = ((t1 - t0 + bin_width - 1) / bin_width) as usize;
    let mut counts = vec![0u64; n];
    for p in posts {
        if p.category == category && p.t >= t0 && p.t < t1 {
            counts[((p.t - t0) / bin_width) as usize] += 1;
        }
    }
    Ok(CategorySeries {
        category,
        bin_width,
        t0,
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Huge,
    Minor,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockReport {
    pub event_t: Timestamp,
    pub category: Category,
    pub pre_rate: f64,
    pub post_rate: f64,
    /// post_rate / pre_rate; 1 when both are zero, infinite (null in JSON)
    /// when only pre_rate is.
    pub ratio: f64,
    /// Bins after the event bin until the first elevated bin.
    pub latency_bins: Option<usize>,
    pub verdict: Verdict,
}

/// Compares the mean of `pre_window` bins before the bin holding `event_t`
/// with the mean of `post_window` bins starting at it.
pub fn shock_response(
    series: &CategorySeries,
    event_t: Timestamp,
    pre_window: usize,
    post_window: usize,
) -> Result<ShockReport, AnalyticsError> {
    if pre_window == 0 || post_window == 0 {
        return Err(AnalyticsError::InvalidParameter("windows must be nonempty".into()));
    }
    let e = series
        .bin_of(event_t)
        .ok_or_else(|| AnalyticsError::InsufficientData(format!("event time {event_t} outside the series")))?;
    if e < pre_window || e + post_window > series.counts.len() {
        return Err(AnalyticsError::InsufficientData(format!(
            "windows {pre_window}/{post_window} around bin {e} exceed series of {} bins",
            series.counts.len()
        )));
    }
    let pre = &series.counts[e - pre_window..e];
    let post = &series.counts[e..e + post_window];
    let mean = |xs: &[u64]| xs.iter().sum::<u64>() as f64 / xs.len() as f64;
    let pre_rate = mean(pre);
    let post_rate = mean(post);
    let sd = (pre.iter().map(|&c| (c as f64 - pre_rate).powi(2)).sum::<f64>() / pre.len() as f64).sqrt();
    let threshold = pre_rate + LATENCY_SIGMAS * sd;
    let latency_bins = post.iter().position(|&c| c as f64 > threshold);
    let ratio = if pre_rate > 0.0 {
        post_rate / pre_rate
    } else if post_rate > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let verdict = if ratio >= HUGE_RATIO {
        Verdict::Huge
    } else if ratio >= MINOR_RATIO {
        Verdict::Minor
    } else {
        Verdict::None
    };
    Ok(ShockReport {
        event_t,
        category: series.category,
        pre_rate,
        post_rate,
        ratio,
        latency_bins,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(counts: Vec<u64>) -> CategorySeries {
        CategorySeries {
            category: Category::Antisemitic,
            bin_width: 60,
            t0: 0,
            counts,
        }
    }

    #[test]
    fn flat_series() {
        let r = shock_response(&series(vec![5; 40]), 20 * 60, 10, 10).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.verdict, Verdict::None);
        assert_eq!(r.latency_bins, None);
    }

    #[test]
    fn step_is_huge_and_immediate() {
        let mut c = vec![5; 20];
        c.extend(vec![50; 20]);
        let r = shock_response(&series(c), 20 * 60 + 1, 10, 10).unwrap();
        assert_eq!(r.verdict, Verdict::Huge);
        assert_eq!(r.latency_bins, Some(0));
        assert!((r.ratio - 10.0).abs() < 1e-12);
    }

    #[test]
    fn minor_band() {
        let mut c = vec![10; 20];
        c.extend(vec![20; 20]);
        assert_eq!(shock_response(&series(c), 1200, 10, 10).unwrap().verdict, Verdict::Minor);
    }

    #[test]
    fn windows_must_fit() {
        let s = series(vec![1; 10]);
        assert!(matches!(shock_response(&s, 120, 5, 2), Err(AnalyticsError::InsufficientData(_))));
        assert!(matches!(shock_response(&s, 480, 2, 5), Err(AnalyticsError::InsufficientData(_))));
        assert!(matches!(shock_response(&s, 10_000, 2, 2), Err(AnalyticsError::InsufficientData(_))));
    }

    #[test]
    fn series_binning() {
        let posts: Vec<PostRecord> = [0, 59, 60, 61, 179, 180]
            .iter()
            .map(|&t| PostRecord {
                community: "c".into(),
                t,
                flags: Default::default(),
                category: Category::Antisemitic,
            })
            .collect();
        let s = category_series(&posts, Category::Antisemitic, 60, 0, 180).unwrap();
        assert_eq!(s.counts, vec![2, 2, 1]);
        let other = category_series(&posts, Category::Other, 60, 0, 180).unwrap();
        assert_eq!(other.counts, vec![0, 0, 0]);
    }
}
