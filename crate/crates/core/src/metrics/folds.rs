//! Grouped fold construction: folds partition participants, never clips.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// One cross-validation fold over participant groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSpec {
    pub fold_id: usize,
    pub held_out_groups: BTreeSet<String>,
    pub train_groups: BTreeSet<String>,
}

impl FoldSpec {
    pub fn holds_out(&self, participant_id: &str) -> bool {
        self.held_out_groups.contains(participant_id)
    }
}

/// Partition participants into `k` groups and build one fold per group.
///
/// Each `merge` set fuses participants into a single group (the paper-style
/// "recordings from two children merged together"); everyone else is their
/// own group. After merging there must be exactly `k` groups.
pub fn make_folds<S: AsRef<str>>(
    participants: &[S],
    k: usize,
    merge: &[BTreeSet<String>],
) -> Result<Vec<FoldSpec>> {
    if k < 2 {
        return Err(Error::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    let all: BTreeSet<String> = participants.iter().map(|p| p.as_ref().to_string()).collect();
    if all.is_empty() {
        return Err(Error::Config("no participants to fold".into()));
    }

    let mut merged_members: BTreeSet<String> = BTreeSet::new();
    for set in merge {
        for p in set {
            if !all.contains(p) {
                return Err(Error::Config(format!("merge names unknown participant {p}")));
            }
            if !merged_members.insert(p.clone()) {
                return Err(Error::Config(format!("participant {p} appears in two merge sets")));
            }
        }
    }

    let mut groups: Vec<BTreeSet<String>> = merge.to_vec();
    for p in &all {
        if !merged_members.contains(p) {
            groups.push(BTreeSet::from([p.clone()]));
        }
    }
    // Deterministic order by smallest member.
    groups.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));

    if groups.len() != k {
        return Err(Error::Config(format!(
            "after merging, group count is {} but k = {k}",
            groups.len()
        )));
    }

    Ok(groups
        .iter()
        .enumerate()
        .map(|(fold_id, held_out)| {
            let train_groups = all.difference(held_out).cloned().collect();
            FoldSpec {
                fold_id,
                held_out_groups: held_out.clone(),
                train_groups,
            }
        })
        .collect())
}
