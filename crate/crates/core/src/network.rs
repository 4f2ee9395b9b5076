//! Trial records, the treatment comparison network, and dataset validation.
//!
//! A [`Dataset`] is built once from raw arm rows and is immutable afterwards.
//! Construction groups rows into studies, indexes treatments densely in order
//! of first appearance, maps calendar dates affinely onto `[0, 1]` and rejects
//! networks that are not connected.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense index of a treatment inside a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TreatmentId(pub usize);

impl TreatmentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for TreatmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Treatment {
    pub id: TreatmentId,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyArm {
    pub study: usize,
    pub treatment: TreatmentId,
    pub successes: u64,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub id: usize,
    pub key: String,
    pub date: NaiveDate,
    /// Normalized time in `[0, 1]`.
    pub time: f64,
    /// Arms in input order.
    pub arms: Vec<StudyArm>,
    /// Position of the study baseline `b_i` within `arms`.
    pub baseline_arm: usize,
}

impl Study {
    pub fn baseline(&self) -> TreatmentId {
        self.arms[self.baseline_arm].treatment
    }

    /// Arm positions of the non-baseline arms, in arm order. The j-th entry
    /// owns the j-th contrast `δ`.
    pub fn contrast_arms(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.arms.len()).filter(move |&a| a != self.baseline_arm)
    }

    pub fn n_contrasts(&self) -> usize {
        self.arms.len() - 1
    }

    pub fn arm_of(&self, k: TreatmentId) -> Option<usize> {
        self.arms.iter().position(|a| a.treatment == k)
    }
}

/// One raw row: a single arm of a single study.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub study: String,
    pub date: NaiveDate,
    pub treatment: String,
    pub events: u64,
    pub total: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("no records supplied")]
    Empty,
    #[error("study {study} has more than one arm of treatment {treatment}")]
    DuplicateArm { study: String, treatment: String },
    #[error("study {study}, treatment {treatment}: {events} events exceed {total} patients")]
    EventsExceedTotal {
        study: String,
        treatment: String,
        events: u64,
        total: u64,
    },
    #[error("study {study}, treatment {treatment}: arm size must be at least 1")]
    EmptyArm { study: String, treatment: String },
    #[error("study {study} has a single arm; at least two are required")]
    SingleArmStudy { study: String },
    #[error("comparison network is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("unknown treatment {0:?}")]
    UnknownTreatment(String),
    #[error("unknown treatment index {0}")]
    UnknownTreatmentId(usize),
    #[error("invalid date {input:?}: {reason}")]
    InvalidDate { input: String, reason: String },
}

/// Validated arm-level trial data plus its comparison network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    studies: Vec<Study>,
    treatments: Vec<Treatment>,
    /// Decimal year mapped to normalized time 0.
    time_origin: f64,
    /// Decimal years spanned by normalized time 0..1.
    time_scale: f64,
    /// Global reference treatment used to pick the per-study baselines.
    baseline: TreatmentId,
    /// Studies containing each treatment, in study order.
    occurrences: Vec<Vec<usize>>,
}

/// Occurrence counts, direct-comparison counts and connectivity of a network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSummary {
    /// `I_k`: number of studies containing treatment k.
    pub occurrences: Vec<usize>,
    /// Symmetric K×K matrix (row-major) of within-study pair counts.
    pair_counts: Vec<usize>,
    /// Connected-component label per treatment, labelled by lowest member.
    pub components: Vec<usize>,
    pub n_arms: usize,
}

impl NetworkSummary {
    fn from_studies(n_treatments: usize, studies: &[Vec<TreatmentId>]) -> Self {
        let mut occurrences = vec![0; n_treatments];
        let mut pair_counts = vec![0; n_treatments * n_treatments];
        let mut n_arms = 0;
        for arms in studies {
            n_arms += arms.len();
            for (a, &ka) in arms.iter().enumerate() {
                occurrences[ka.0] += 1;
                for &kb in &arms[a + 1..] {
                    pair_counts[ka.0 * n_treatments + kb.0] += 1;
                    pair_counts[kb.0 * n_treatments + ka.0] += 1;
                }
            }
        }

        // union-find over treatments
        let mut parent: Vec<usize> = (0..n_treatments).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for arms in studies {
            for w in arms.windows(2) {
                let (ra, rb) = (find(&mut parent, w[0].0), find(&mut parent, w[1].0));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let components = (0..n_treatments).map(|k| find(&mut parent, k)).collect();

        NetworkSummary {
            occurrences,
            pair_counts,
            components,
            n_arms,
        }
    }

    pub fn n_treatments(&self) -> usize {
        self.occurrences.len()
    }

    pub fn pair_count(&self, a: TreatmentId, b: TreatmentId) -> usize {
        self.pair_counts[a.0 * self.n_treatments() + b.0]
    }

    pub fn n_components(&self) -> usize {
        self.components.iter().collect::<BTreeSet<_>>().len()
    }
}

/// Replace a missing day with the middle of the month.
///
/// Accepts `YYYY-MM` or `YYYY-MM-DD`. Year-only dates are rejected.
pub fn impute_date(partial: &str) -> Result<NaiveDate, DataError> {
    let bad = |reason: &str| DataError::InvalidDate {
        input: partial.to_string(),
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = partial.trim().split('-').collect();
    let num = |s: &str| -> Result<u32, DataError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("expected numeric date components"));
        }
        s.parse().map_err(|_| bad("date component out of range"))
    };
    let (year, month, day) = match parts.as_slice() {
        [y, m] => (num(y)?, num(m)?, 15),
        [y, m, d] => (num(y)?, num(m)?, num(d)?),
        [_] => return Err(bad("month is required (expected YYYY-MM or YYYY-MM-DD)")),
        _ => return Err(bad("expected YYYY-MM or YYYY-MM-DD")),
    };
    NaiveDate::from_ymd_opt(year as i32, month, day).ok_or_else(|| bad("no such calendar date"))
}

/// Calendar date as a fractional year, e.g. 2005-07-02 ≈ 2005.5.
pub fn decimal_year(date: NaiveDate) -> f64 {
    let year = date.year();
    let days_in_year = if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366.0
    } else {
        365.0
    };
    year as f64 + f64::from(date.ordinal0()) / days_in_year
}

/// Most common treatment (ties to the lowest index) unless overridden.
pub fn select_baseline(
    summary: &NetworkSummary,
    override_id: Option<TreatmentId>,
) -> Result<TreatmentId, DataError> {
    if let Some(k) = override_id {
        if k.0 >= summary.n_treatments() {
            return Err(DataError::UnknownTreatmentId(k.0));
        }
        return Ok(k);
    }
    let mut best = 0;
    for (k, &count) in summary.occurrences.iter().enumerate() {
        if count > summary.occurrences[best] {
            best = k;
        }
    }
    Ok(TreatmentId(best))
}

pub fn network_summary(data: &Dataset) -> NetworkSummary {
    let arms: Vec<Vec<TreatmentId>> = data
        .studies
        .iter()
        .map(|s| s.arms.iter().map(|a| a.treatment).collect())
        .collect();
    NetworkSummary::from_studies(data.n_treatments(), &arms)
}

/// Group raw rows into a validated [`Dataset`].
///
/// Studies and treatments are indexed in order of first appearance. When the
/// rows of one study disagree on the date, the earliest is used.
pub fn build_dataset(records: &[RawRecord]) -> Result<Dataset, DataError> {
    if records.is_empty() {
        return Err(DataError::Empty);
    }

    let mut study_index: HashMap<&str, usize> = HashMap::new();
    let mut treatment_index: HashMap<&str, usize> = HashMap::new();
    let mut treatments = Vec::new();
    let mut keys: Vec<&str> = Vec::new();
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut arms: Vec<Vec<StudyArm>> = Vec::new();

    for rec in records {
        if rec.total == 0 {
            return Err(DataError::EmptyArm {
                study: rec.study.clone(),
                treatment: rec.treatment.clone(),
            });
        }
        if rec.events > rec.total {
            return Err(DataError::EventsExceedTotal {
                study: rec.study.clone(),
                treatment: rec.treatment.clone(),
                events: rec.events,
                total: rec.total,
            });
        }
        let next_k = treatments.len();
        let k = *treatment_index
            .entry(rec.treatment.as_str())
            .or_insert(next_k);
        if k == next_k {
            treatments.push(Treatment {
                id: TreatmentId(k),
                label: rec.treatment.clone(),
            });
        }
        let next_i = keys.len();
        let i = *study_index.entry(rec.study.as_str()).or_insert(next_i);
        if i == next_i {
            keys.push(rec.study.as_str());
            dates.push(rec.date);
            arms.push(Vec::new());
        }
        dates[i] = dates[i].min(rec.date);
        if arms[i].iter().any(|a| a.treatment.0 == k) {
            return Err(DataError::DuplicateArm {
                study: rec.study.clone(),
                treatment: rec.treatment.clone(),
            });
        }
        arms[i].push(StudyArm {
            study: i,
            treatment: TreatmentId(k),
            successes: rec.events,
            size: rec.total,
        });
    }

    if let Some(i) = arms.iter().position(|a| a.len() < 2) {
        return Err(DataError::SingleArmStudy {
            study: keys[i].to_string(),
        });
    }

    let arm_ids: Vec<Vec<TreatmentId>> = arms
        .iter()
        .map(|a| a.iter().map(|arm| arm.treatment).collect())
        .collect();
    let summary = NetworkSummary::from_studies(treatments.len(), &arm_ids);
    let components = summary.n_components();
    if components != 1 {
        return Err(DataError::Disconnected { components });
    }

    let years: Vec<f64> = dates.iter().map(|&d| decimal_year(d)).collect();
    let lo = years.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = years.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let time_scale = if hi > lo { hi - lo } else { 1.0 };

    let studies = arms
        .into_iter()
        .enumerate()
        .map(|(i, arms)| Study {
            id: i,
            key: keys[i].to_string(),
            date: dates[i],
            time: (years[i] - lo) / time_scale,
            arms,
            baseline_arm: 0,
        })
        .collect();

    let mut occurrences = vec![Vec::new(); treatments.len()];
    for (i, ids) in arm_ids.iter().enumerate() {
        for k in ids {
            occurrences[k.0].push(i);
        }
    }

    let mut data = Dataset {
        studies,
        treatments,
        time_origin: lo,
        time_scale,
        baseline: TreatmentId(0),
        occurrences,
    };
    let global = select_baseline(&summary, None)?;
    data.assign_baselines(global, &summary);
    Ok(data)
}

impl Dataset {
    /// Per-study baseline: among the study's arms, the global baseline if
    /// present, otherwise the treatment with the highest network-wide
    /// occurrence count (ties to the lowest index).
    fn assign_baselines(&mut self, global: TreatmentId, summary: &NetworkSummary) {
        self.baseline = global;
        for study in &mut self.studies {
            let rank = |a: &StudyArm| {
                (
                    a.treatment == global,
                    summary.occurrences[a.treatment.0],
                    std::cmp::Reverse(a.treatment.0),
                )
            };
            study.baseline_arm = (0..study.arms.len())
                .max_by_key(|&j| rank(&study.arms[j]))
                .expect("studies have at least two arms");
        }
    }

    /// The same data re-referenced to another global baseline.
    pub fn with_baseline(&self, baseline: TreatmentId) -> Result<Dataset, DataError> {
        let summary = network_summary(self);
        let global = select_baseline(&summary, Some(baseline))?;
        let mut out = self.clone();
        out.assign_baselines(global, &summary);
        Ok(out)
    }

    pub fn with_baseline_label(&self, label: &str) -> Result<Dataset, DataError> {
        let k = self
            .treatment_by_label(label)
            .ok_or_else(|| DataError::UnknownTreatment(label.to_string()))?;
        self.with_baseline(k)
    }

    pub fn studies(&self) -> &[Study] {
        &self.studies
    }

    pub fn treatments(&self) -> &[Treatment] {
        &self.treatments
    }

    pub fn n_treatments(&self) -> usize {
        self.treatments.len()
    }

    pub fn n_studies(&self) -> usize {
        self.studies.len()
    }

    pub fn n_arms(&self) -> usize {
        self.studies.iter().map(|s| s.arms.len()).sum()
    }

    pub fn baseline(&self) -> TreatmentId {
        self.baseline
    }

    pub fn time_origin(&self) -> f64 {
        self.time_origin
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn label(&self, k: TreatmentId) -> &str {
        &self.treatments[k.0].label
    }

    pub fn treatment_by_label(&self, label: &str) -> Option<TreatmentId> {
        self.treatments
            .iter()
            .find(|t| t.label == label)
            .map(|t| t.id)
    }

    pub fn check_treatment(&self, k: TreatmentId) -> Result<(), DataError> {
        if k.0 < self.treatments.len() {
            Ok(())
        } else {
            Err(DataError::UnknownTreatmentId(k.0))
        }
    }

    /// Indices of the studies containing `k`, in study order.
    pub fn studies_with(&self, k: TreatmentId) -> &[usize] {
        &self.occurrences[k.0]
    }

    /// Normalized times of the studies containing `k`, in study order.
    pub fn times_of(&self, k: TreatmentId) -> Vec<f64> {
        self.occurrences[k.0]
            .iter()
            .map(|&i| self.studies[i].time)
            .collect()
    }

    /// Position of study `i` within `studies_with(k)`.
    pub fn occurrence_slot(&self, k: TreatmentId, study: usize) -> Option<usize> {
        self.occurrences[k.0].binary_search(&study).ok()
    }

    pub fn mean_time(&self) -> f64 {
        self.studies.iter().map(|s| s.time).sum::<f64>() / self.studies.len() as f64
    }

    pub fn to_calendar(&self, t: f64) -> f64 {
        self.time_origin + t * self.time_scale
    }

    pub fn to_normalized(&self, year: f64) -> f64 {
        (year - self.time_origin) / self.time_scale
    }

    /// Raw rows in study order, arms in stored order.
    pub fn records(&self) -> Vec<RawRecord> {
        self.studies
            .iter()
            .flat_map(|s| {
                s.arms.iter().map(move |a| RawRecord {
                    study: s.key.clone(),
                    date: s.date,
                    treatment: self.label(a.treatment).to_string(),
                    events: a.successes,
                    total: a.size,
                })
            })
            .collect()
    }

    /// Copy of the dataset with new event counts, `events[i][a]` for arm `a`
    /// of study `i`.
    pub fn with_events(&self, events: &[Vec<u64>]) -> Dataset {
        let mut out = self.clone();
        for (study, ev) in out.studies.iter_mut().zip(events) {
            for (arm, &y) in study.arms.iter_mut().zip(ev) {
                debug_assert!(y <= arm.size);
                arm.successes = y;
            }
        }
        out
    }

    /// Copy of the dataset with every arm resized to `n`; events are clamped.
    pub fn with_arm_size(&self, n: u64) -> Dataset {
        let mut out = self.clone();
        for arm in out.studies.iter_mut().flat_map(|s| s.arms.iter_mut()) {
            arm.size = n;
            arm.successes = arm.successes.min(n);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(study: &str, date: &str, t: &str, y: u64, n: u64) -> RawRecord {
        RawRecord {
            study: study.into(),
            date: impute_date(date).unwrap(),
            treatment: t.into(),
            events: y,
            total: n,
        }
    }

    #[test]
    fn impute_middle_of_month() {
        let d = |s| impute_date(s).unwrap();
        assert_eq!(d("2005-03"), NaiveDate::from_ymd_opt(2005, 3, 15).unwrap());
        assert_eq!(
            d("2011-07-02"),
            NaiveDate::from_ymd_opt(2011, 7, 2).unwrap()
        );
        assert_eq!(d("2019-12"), NaiveDate::from_ymd_opt(2019, 12, 15).unwrap());
        assert!(impute_date("2019").is_err());
        assert!(impute_date("2019-13").is_err());
        assert!(impute_date("2019-02-30").is_err());
        assert!(impute_date("20x9-02").is_err());
    }

    #[test]
    fn groups_three_arm_and_two_arm_studies() {
        let data = build_dataset(&[
            rec("A", "2001-01", "X", 1, 10),
            rec("A", "2001-01", "Y", 2, 10),
            rec("A", "2001-01", "Z", 3, 10),
            rec("B", "2003-01", "X", 4, 10),
            rec("B", "2003-01", "Y", 5, 10),
        ])
        .unwrap();
        assert_eq!(data.n_studies(), 2);
        let arms: Vec<usize> = data.studies().iter().map(|s| s.arms.len()).collect();
        assert_eq!(arms, vec![3, 2]);
        assert_eq!(data.studies()[0].time, 0.0);
        assert_eq!(data.studies()[1].time, 1.0);
    }

    #[test]
    fn single_date_normalizes_to_zero() {
        let data = build_dataset(&[
            rec("A", "2004-06", "X", 1, 10),
            rec("A", "2004-06", "Y", 2, 10),
            rec("B", "2004-06", "X", 3, 10),
            rec("B", "2004-06", "Y", 4, 10),
        ])
        .unwrap();
        assert!(data.studies().iter().all(|s| s.time == 0.0));
        assert_eq!(data.time_scale(), 1.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert_eq!(build_dataset(&[]), Err(DataError::Empty));
        assert!(matches!(
            build_dataset(&[
                rec("A", "2001-01", "X", 1, 10),
                rec("A", "2001-01", "X", 2, 10)
            ]),
            Err(DataError::DuplicateArm { .. })
        ));
        assert!(matches!(
            build_dataset(&[
                rec("A", "2001-01", "X", 11, 10),
                rec("A", "2001-01", "Y", 2, 10)
            ]),
            Err(DataError::EventsExceedTotal { .. })
        ));
        assert!(matches!(
            build_dataset(&[
                rec("A", "2001-01", "X", 1, 10),
                rec("B", "2001-01", "Y", 2, 10)
            ]),
            Err(DataError::SingleArmStudy { .. })
        ));
        assert!(matches!(
            build_dataset(&[
                rec("A", "2001-01", "X", 0, 0),
                rec("A", "2001-01", "Y", 2, 10)
            ]),
            Err(DataError::EmptyArm { .. })
        ));
    }

    #[test]
    fn disjoint_cliques_are_rejected() {
        let rows = [
            rec("A", "2001-01", "W", 1, 10),
            rec("A", "2001-01", "X", 1, 10),
            rec("B", "2002-01", "Y", 1, 10),
            rec("B", "2002-01", "Z", 1, 10),
        ];
        let ids = vec![
            vec![TreatmentId(0), TreatmentId(1)],
            vec![TreatmentId(2), TreatmentId(3)],
        ];
        assert_eq!(NetworkSummary::from_studies(4, &ids).n_components(), 2);
        assert_eq!(
            build_dataset(&rows),
            Err(DataError::Disconnected { components: 2 })
        );
    }

    #[test]
    fn single_study_summary_and_tie_break() {
        let data = build_dataset(&[
            rec("A", "2001-01", "P", 1, 10),
            rec("A", "2001-01", "Q", 2, 10),
        ])
        .unwrap();
        let s = network_summary(&data);
        assert_eq!(s.occurrences, vec![1, 1]);
        assert_eq!(s.pair_count(TreatmentId(0), TreatmentId(1)), 1);
        assert_eq!(s.pair_count(TreatmentId(1), TreatmentId(0)), 1);
        assert_eq!(select_baseline(&s, None).unwrap(), TreatmentId(0));
        assert_eq!(
            select_baseline(&s, Some(TreatmentId(1))).unwrap(),
            TreatmentId(1)
        );
        assert!(select_baseline(&s, Some(TreatmentId(2))).is_err());
    }

    #[test]
    fn study_baseline_follows_global_reference() {
        // X in 2 studies, Y in 2, Z in 1
        let data = build_dataset(&[
            rec("A", "2001-01", "Z", 1, 10),
            rec("A", "2001-01", "Y", 1, 10),
            rec("B", "2002-01", "X", 1, 10),
            rec("B", "2002-01", "Y", 1, 10),
            rec("C", "2003-01", "X", 1, 10),
            rec("C", "2003-01", "W", 1, 10),
        ])
        .unwrap();
        let y = data.treatment_by_label("Y").unwrap();
        let x = data.treatment_by_label("X").unwrap();
        // Y and X tie on occurrences; Y was seen first.
        assert_eq!(data.baseline(), y);
        assert_eq!(data.studies()[0].baseline(), y);
        assert_eq!(data.studies()[1].baseline(), y);
        assert_eq!(data.studies()[2].baseline(), x);

        let rebased = data.with_baseline(x).unwrap();
        assert_eq!(rebased.baseline(), x);
        assert_eq!(rebased.studies()[1].baseline(), x);
        assert_eq!(rebased.studies()[0].baseline(), y);
        assert_eq!(rebased.with_baseline(y).unwrap(), data);
    }

    #[test]
    fn occurrence_slots_follow_study_order() {
        let data = build_dataset(&[
            rec("A", "2001-01", "X", 1, 10),
            rec("A", "2001-01", "Y", 1, 10),
            rec("B", "2002-01", "Y", 1, 10),
            rec("B", "2002-01", "Z", 1, 10),
            rec("C", "2003-01", "X", 1, 10),
            rec("C", "2003-01", "Z", 1, 10),
        ])
        .unwrap();
        let z = data.treatment_by_label("Z").unwrap();
        assert_eq!(data.studies_with(z), &[1, 2]);
        assert_eq!(data.occurrence_slot(z, 2), Some(1));
        assert_eq!(data.occurrence_slot(z, 0), None);
        assert_eq!(data.times_of(z), vec![0.5, 1.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn network() -> impl Strategy<Value = Vec<RawRecord>> {
            // chain-connected studies over up to 6 treatments
            proptest::collection::vec(
                (0usize..6, 0usize..6, 2000i32..2020, 1u32..13, 1u64..50),
                1..12,
            )
            .prop_map(|rows| {
                let mut out = Vec::new();
                for (i, (a, b, y, m, n)) in rows.into_iter().enumerate() {
                    let date = NaiveDate::from_ymd_opt(y, m, 15).unwrap();
                    let first = if i == 0 { 0 } else { a.min(i) % 6 };
                    let mut second = (b % 6).max(1);
                    if second == first {
                        second = (first + 1) % 6;
                    }
                    for k in [first, second] {
                        out.push(RawRecord {
                            study: format!("S{i}"),
                            date,
                            treatment: format!("T{k}"),
                            events: n / 2,
                            total: n,
                        });
                    }
                }
                out
            })
        }

        proptest! {
            #[test]
            fn accepted_datasets_satisfy_invariants(rows in network()) {
                if let Ok(data) = build_dataset(&rows) {
                    let s = network_summary(&data);
                    prop_assert_eq!(s.occurrences.iter().sum::<usize>(), data.n_arms());
                    prop_assert_eq!(s.n_components(), 1);
                    for a in 0..data.n_treatments() {
                        for b in 0..data.n_treatments() {
                            prop_assert_eq!(
                                s.pair_count(TreatmentId(a), TreatmentId(b)),
                                s.pair_count(TreatmentId(b), TreatmentId(a))
                            );
                        }
                    }
                    for si in data.studies() {
                        prop_assert!((0.0..=1.0).contains(&si.time));
                    }
                    for a in data.studies() {
                        for b in data.studies() {
                            if a.date < b.date {
                                prop_assert!(a.time < b.time);
                            }
                        }
                    }
                    prop_assert_eq!(
                        select_baseline(&s, None).unwrap(),
                        select_baseline(&s, None).unwrap()
                    );
                }
            }
        }
    }
}
