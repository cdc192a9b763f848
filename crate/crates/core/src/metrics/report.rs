//! Per-participant transition tables.

use std::collections::BTreeMap;

/// One `true -> predicted` transition fraction for one participant.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub participant_id: String,
    /// `neg_to_non-neg` style name built from short label codes.
    pub transition: String,
    pub count: usize,
    /// Fraction of the participant's clips taking this transition; a
    /// participant's fractions sum to 1.
    pub fraction: f64,
}

/// Per participant, the fraction of each `(true, predicted)` transition.
///
/// Input tuples are `(participant_id, true_short, pred_short)`; output rows
/// are sorted by participant then transition name.
pub fn per_participant_report<S: AsRef<str>>(
    decisions: &[(S, S, S)],
) -> Vec<TransitionRow> {
    let mut per_participant: BTreeMap<&str, BTreeMap<String, usize>> = BTreeMap::new();
    for (pid, t, p) in decisions {
        let name = format!("{}_to_{}", t.as_ref(), p.as_ref());
        *per_participant
            .entry(pid.as_ref())
            .or_default()
            .entry(name)
            .or_insert(0) += 1;
    }
    let mut rows = Vec::new();
    for (pid, transitions) in per_participant {
        let total: usize = transitions.values().sum();
        for (transition, count) in transitions {
            rows.push(TransitionRow {
                participant_id: pid.to_string(),
                transition,
                count,
                fraction: count as f64 / total as f64,
            });
        }
    }
    rows
}

/// Render transition rows as CSV.
pub fn transitions_csv(rows: &[TransitionRow]) -> String {
    let mut out = String::from("participant_id,transition,count,fraction\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6}\n",
            r.participant_id, r.transition, r.count, r.fraction
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_correct_single_participant() {
        let rows = per_participant_report(&[
            ("p1", "neu", "neu"),
            ("p1", "neu", "neu"),
        ]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].transition, "neu_to_neu");
        assert_eq!(rows[0].fraction, 1.0);
    }

    #[test]
    fn fractions_split_within_participant() {
        let rows = per_participant_report(&[
            ("p1", "neu", "neu"),
            ("p1", "neu", "neu"),
            ("p1", "neu", "neu"),
            ("p1", "neu", "pos"),
        ]);
        let get = |t: &str| rows.iter().find(|r| r.transition == t).unwrap().fraction;
        assert!((get("neu_to_neu") - 0.75).abs() < 1e-12);
        assert!((get("neu_to_pos") - 0.25).abs() < 1e-12);
    }

    #[test]
    fn transition_names_use_short_codes() {
        let rows = per_participant_report(&[("p2", "neg", "non-neg")]);
        assert_eq!(rows[0].transition, "neg_to_non-neg");
    }

    #[test]
    fn fractions_sum_to_one_per_participant() {
        let rows = per_participant_report(&[
            ("a", "neu", "pos"),
            ("a", "pos", "pos"),
            ("a", "neg", "neu"),
            ("b", "pos", "neu"),
        ]);
        let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
        for r in &rows {
            *sums.entry(r.participant_id.as_str()).or_insert(0.0) += r.fraction;
        }
        for (_, s) in sums {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
