//! Usage-pattern guided choice of the next call.

use crate::model::ApiId;
use crate::usage::{Itemset, PatternIndex, UsageRule};

/// Picks the next method to append to the call sequence `m`.
///
/// For every candidate the suffixes of `m` are tried from the full sequence
/// down to length 2; the candidate is prioritized by the first suffix whose
/// API set is exactly the antecedent of a rule concluding it. Prioritized
/// candidates are ranked by that rule's confidence, then support, then id.
/// Without any match the head of `fallback` is returned.
pub fn next_method(m: &[ApiId], candidates: &[ApiId], patterns: &PatternIndex, fallback: &[ApiId]) -> Option<ApiId> {
    if candidates.is_empty() {
        return None;
    }
    let mut priority: Vec<&UsageRule> = Vec::new();
    for c in candidates {
        let mut suffix = m;
        while suffix.len() > 1 {
            let set: Itemset = suffix.iter().cloned().collect();
            if let Some(rule) = patterns.rule(&set, c) {
                priority.push(rule);
                break;
            }
            suffix = &suffix[1..];
        }
    }
    priority.sort_by(|a, b| {
        b.confidence()
            .cmp(&a.confidence())
            .then(b.support_count.cmp(&a.support_count))
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    match priority.first() {
        Some(r) => Some(r.consequent.clone()),
        None => fallback.first().or(candidates.first()).cloned(),
    }
}
