use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Training,
    TestTrained,
    TestUntrained,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Training, Condition::TestTrained, Condition::TestUntrained];

    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Training => "training",
            Condition::TestTrained => "test_trained",
            Condition::TestUntrained => "test_untrained",
        }
    }
}

/// One scored trial; the CSV report has one row of these per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub session: String,
    pub trial: usize,
    pub condition: Condition,
    pub target: String,
    pub difference: f64,
    pub matched: bool,
    pub sensing_time: f64,
    pub edge_dwell_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Summary {
        let n = values.clone().count() as f64;
        Summary {
            mean: values.clone().sum::<f64>() / n,
            min: values.clone().fold(f64::INFINITY, f64::min),
            max: values.fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub trials: usize,
    pub sensing_time: Summary,
    pub difference: Summary,
    pub match_rate: f64,
    pub edge_dwell_fraction: Summary,
}

/// Per-condition summaries, in condition order, for non-empty groups only.
pub fn session_stats(records: &[TrialRecord]) -> Result<Vec<ConditionSummary>, AnalyticsError> {
    if records.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    Ok(Condition::ALL
        .iter()
        .filter_map(|&condition| {
            let group: Vec<&TrialRecord> = records.iter().filter(|r| r.condition == condition).collect();
            if group.is_empty() {
                return None;
            }
            let it = group.iter();
            Some(ConditionSummary {
                condition,
                trials: group.len(),
                sensing_time: Summary::of(it.clone().map(|r| r.sensing_time)),
                difference: Summary::of(it.clone().map(|r| r.difference)),
                match_rate: group.iter().filter(|r| r.matched).count() as f64 / group.len() as f64,
                edge_dwell_fraction: Summary::of(it.map(|r| r.edge_dwell_fraction)),
            })
        })
        .collect())
}

/// Published group means, for side-by-side comparison only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedMeans {
    pub condition: Condition,
    pub sensing_time: f64,
    pub difference: Option<f64>,
}

pub const PUBLISHED_MEANS: [PublishedMeans; 3] = [
    PublishedMeans { condition: Condition::Training, sensing_time: 179.6, difference: None },
    PublishedMeans { condition: Condition::TestTrained, sensing_time: 155.0, difference: Some(0.11) },
    PublishedMeans { condition: Condition::TestUntrained, sensing_time: 167.0, difference: Some(0.17) },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub sessions: usize,
    pub trials: usize,
    pub conditions: Vec<ConditionSummary>,
    pub published: Vec<PublishedMeans>,
}

pub fn report_summary(records: &[TrialRecord]) -> Result<ReportSummary, AnalyticsError> {
    let mut sessions: Vec<&str> = records.iter().map(|r| r.session.as_str()).collect();
    sessions.sort_unstable();
    sessions.dedup();
    Ok(ReportSummary {
        sessions: sessions.len(),
        trials: records.len(),
        conditions: session_stats(records)?,
        published: PUBLISHED_MEANS.to_vec(),
    })
}

pub fn write_trials_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials_csv<R: std::io::Read>(input: R) -> Result<Vec<TrialRecord>, AnalyticsError> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(AnalyticsError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(trial: usize, condition: Condition, sensing_time: f64, difference: f64) -> TrialRecord {
        TrialRecord {
            session: "s".into(),
            trial,
            condition,
            target: format!("T{trial}"),
            difference,
            matched: difference < 0.02,
            sensing_time,
            edge_dwell_fraction: 0.5,
        }
    }

    #[test]
    fn mean_of_two() {
        let s = session_stats(&[rec(0, Condition::Training, 100.0, 0.1), rec(1, Condition::Training, 200.0, 0.3)]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].sensing_time, Summary { mean: 150.0, min: 100.0, max: 200.0 });
        assert!((s[0].difference.mean - 0.2).abs() < 1e-15);
    }

    #[test]
    fn single_trial() {
        let s = session_stats(&[rec(0, Condition::TestUntrained, 42.0, 0.01)]).unwrap();
        assert_eq!(s[0].sensing_time.mean, 42.0);
        assert_eq!(s[0].difference.mean, 0.01);
        assert_eq!(s[0].match_rate, 1.0);
    }

    #[test]
    fn grouping_counts() {
        let mut records: Vec<TrialRecord> = (0..8).map(|i| rec(i, Condition::Training, 10.0, 0.0)).collect();
        records.extend((8..11).map(|i| rec(i, Condition::TestTrained, 10.0, 0.0)));
        records.extend((11..15).map(|i| rec(i, Condition::TestUntrained, 10.0, 0.0)));
        let s = session_stats(&records).unwrap();
        let counts: Vec<(Condition, usize)> = s.iter().map(|c| (c.condition, c.trials)).collect();
        assert_eq!(counts, vec![(Condition::Training, 8), (Condition::TestTrained, 3), (Condition::TestUntrained, 4)]);
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(session_stats(&[]), Err(AnalyticsError::EmptyInput)));
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![rec(0, Condition::Training, 1.5, 0.0), rec(1, Condition::TestTrained, 2.5, 0.25)];
        let mut buf = vec![];
        write_trials_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("session,trial,condition,target,difference,matched,sensing_time,edge_dwell_fraction\n"));
        assert!(text.contains(",test_trained,"));
        assert_eq!(read_trials_csv(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn summary_counts_sessions() {
        let mut r2 = rec(0, Condition::Training, 1.0, 0.0);
        r2.session = "other".into();
        let s = report_summary(&[rec(0, Condition::Training, 1.0, 0.0), r2]).unwrap();
        assert_eq!(s.sessions, 2);
        assert_eq!(s.published.len(), 3);
    }
}
