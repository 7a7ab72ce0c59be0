use std::collections::HashMap;

use serde::Serialize;

use super::PostRecord;

/// Number of most recent posts inspected per community.
pub const LABEL_WINDOW: usize = 20;
/// Flagged posts within the window needed for a hate label.
pub const LABEL_THRESHOLD: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Hate,
    NotHate,
}

/// Applies the 2-of-20 rule to one community's posts, given most recent
/// first. With fewer than 20 posts the rule applies to all of them.
pub fn classify_community(posts_recent_first: &[PostRecord]) -> Label {
    classify_recent_first(posts_recent_first.iter().map(PostRecord::is_flagged))
}

/// Same rule over a most-recent-first sequence of "is flagged" markers.
pub fn classify_recent_first(flagged: impl IntoIterator<Item = bool>) -> Label {
    let hits = flagged.into_iter().take(LABEL_WINDOW).filter(|&f| f).count();
    if hits >= LABEL_THRESHOLD {
        Label::Hate
    } else {
        Label::NotHate
    }
}

/// Labels every community that has posts. Posts may be in any order; ties
/// in time keep their input order.
pub fn label_communities(posts: &[PostRecord]) -> HashMap<String, Label> {
    let mut by_community: HashMap<&str, Vec<&PostRecord>> = HashMap::new();
    for p in posts {
        by_community.entry(&p.community).or_default().push(p);
    }
    by_community
        .into_iter()
        .map(|(c, mut ps)| {
            ps.sort_by_key(|p| std::cmp::Reverse(p.t));
            let label = classify_recent_first(ps.iter().map(|p| p.is_flagged()));
            (c.to_string(), label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Category, PostFlag};

    fn posts(flags: &[bool]) -> Vec<PostRecord> {
        flags
            .iter()
            .enumerate()
            .map(|(i, &f)| PostRecord {
                community: "c".into(),
                t: 1000 - i as i64,
                flags: if f { [PostFlag::HateSpeech].into() } else { Default::default() },
                category: Category::Other,
            })
            .collect()
    }

    #[test]
    fn two_of_twenty() {
        let mut f = vec![false; 20];
        f[3] = true;
        assert_eq!(classify_community(&posts(&f)), Label::NotHate);
        f[19] = true;
        assert_eq!(classify_community(&posts(&f)), Label::Hate);
    }

    #[test]
    fn short_history_uses_all_posts() {
        assert_eq!(classify_community(&posts(&[true, false, false, true, false])), Label::Hate);
        assert_eq!(classify_community(&[]), Label::NotHate);
    }

    #[test]
    fn older_than_window_ignored() {
        let mut f = vec![false; 25];
        f[21] = true;
        f[22] = true;
        assert_eq!(classify_community(&posts(&f)), Label::NotHate);
    }

    #[test]
    fn label_map_sorts_by_time() {
        let mut ps = posts(&[true, true]);
        ps.extend(posts(&[false; 20]).into_iter().map(|mut p| {
            p.community = "d".into();
            p
        }));
        // Oldest first: flagged posts for "c" end up last in input order.
        ps.reverse();
        let labels = label_communities(&ps);
        assert_eq!(labels["c"], Label::Hate);
        assert_eq!(labels["d"], Label::NotHate);
    }
}
