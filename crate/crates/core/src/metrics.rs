//! Waiting-time statistics, delivery capacity and sweep summaries.
//!
//! Waiting time is the completion time of a job measured from tour start,
//! handover service included.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jobs::{Category, DeliverySet, JobId};
use crate::simcore::DeliveryTrace;

/// Threshold used for the headline capacity figure.
pub const CAPACITY_THRESHOLD_S: f64 = 20.0 * 60.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Medical,
    Standard,
    All,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Medical, Group::Standard, Group::All];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Medical => "medical",
            Group::Standard => "standard",
            Group::All => "all",
        }
    }
}

impl From<Category> for Group {
    fn from(c: Category) -> Self {
        match c {
            Category::Medical => Group::Medical,
            Category::Standard => Group::Standard,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Ascending.
    pub samples: Vec<f64>,
}

impl GroupStats {
    fn from_samples(mut samples: Vec<f64>) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let median = if n % 2 == 1 {
            samples[n / 2]
        } else {
            (samples[n / 2 - 1] + samples[n / 2]) / 2.0
        };
        Some(Self {
            n,
            mean,
            median,
            samples,
        })
    }

    /// Fraction of samples at or below `threshold`.
    pub fn fraction_within(&self, threshold: f64) -> f64 {
        self.samples.partition_point(|&s| s <= threshold) as f64 / self.n as f64
    }
}

/// Per-group statistics; a group with no jobs is absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WaitingStats {
    pub groups: BTreeMap<Group, GroupStats>,
}

impl WaitingStats {
    pub fn get(&self, g: Group) -> Option<&GroupStats> {
        self.groups.get(&g)
    }

    pub fn mean(&self, g: Group) -> Option<f64> {
        self.get(g).map(|s| s.mean)
    }

    pub fn n(&self) -> usize {
        self.get(Group::All).map_or(0, |s| s.n)
    }
}

pub fn waiting_stats(trace: &DeliveryTrace, set: &DeliverySet) -> Result<WaitingStats> {
    waiting_stats_from(&trace.completion, set)
}

pub fn waiting_stats_from(completion: &BTreeMap<JobId, f64>, set: &DeliverySet) -> Result<WaitingStats> {
    let mut by: BTreeMap<Group, Vec<f64>> = BTreeMap::new();
    for job in &set.jobs {
        let t = *completion
            .get(&job.id)
            .ok_or_else(|| Error::Consistency(format!("job {} of set {} has no completion time", job.id, set.id)))?;
        if !(t >= 0.0) {
            return Err(Error::Consistency(format!("job {} completes at {t}", job.id)));
        }
        by.entry(job.category.into()).or_default().push(t);
        by.entry(Group::All).or_default().push(t);
    }
    Ok(WaitingStats {
        groups: by
            .into_iter()
            .filter_map(|(g, v)| GroupStats::from_samples(v).map(|s| (g, s)))
            .collect(),
    })
}

/// Fraction of all jobs done within `threshold` seconds.
pub fn capacity_at(stats: &WaitingStats, threshold: f64) -> Result<f64> {
    stats
        .get(Group::All)
        .map(|s| s.fraction_within(threshold))
        .ok_or_else(|| Error::Degenerate("capacity of an empty job set".into()))
}

/// Relative change of the medical and standard means, negative is better.
pub fn prioritization_effect(base: &WaitingStats, prio: &WaitingStats) -> Result<(f64, f64)> {
    let change = |g: Group| -> Result<f64> {
        let (Some(b), Some(p)) = (base.mean(g), prio.mean(g)) else {
            return Err(Error::Degenerate(format!("no {g} jobs to compare")));
        };
        if b == 0.0 {
            return Err(Error::Degenerate(format!("baseline {g} mean is zero")));
        }
        Ok((p - b) / b)
    };
    Ok((change(Group::Medical)?, change(Group::Standard)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub drones: usize,
    pub prioritized: bool,
    pub set_id: u32,
    pub stats: WaitingStats,
    #[serde(rename = "makespan_s")]
    pub makespan: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub drones: usize,
    pub prioritized: bool,
    pub category: Group,
    pub sets: usize,
    pub mean_s: f64,
    pub median_s: f64,
    pub capacity_20min: f64,
}

fn configs(results: &SweepResult) -> BTreeMap<(usize, bool), Vec<&SweepRow>> {
    let mut by: BTreeMap<(usize, bool), Vec<&SweepRow>> = BTreeMap::new();
    for r in &results.rows {
        by.entry((r.drones, r.prioritized)).or_default().push(r);
    }
    by
}

/// Averages per-set statistics over sets for every (drones, prioritized, group).
pub fn summarize_sweep(results: &SweepResult) -> Result<Vec<SummaryRow>> {
    if results.rows.is_empty() {
        return Err(Error::Degenerate("empty sweep".into()));
    }
    let mut out = Vec::new();
    for ((drones, prioritized), rows) in configs(results) {
        for g in Group::ALL {
            let present: Vec<&GroupStats> = rows.iter().filter_map(|r| r.stats.get(g)).collect();
            if present.is_empty() {
                continue;
            }
            let avg = |f: &dyn Fn(&GroupStats) -> f64| present.iter().map(|s| f(s)).sum::<f64>() / present.len() as f64;
            out.push(SummaryRow {
                drones,
                prioritized,
                category: g,
                sets: present.len(),
                mean_s: avg(&|s| s.mean),
                median_s: avg(&|s| s.median),
                capacity_20min: avg(&|s| s.fraction_within(CAPACITY_THRESHOLD_S)),
            });
        }
    }
    Ok(out)
}

/// Set-averaged share of all jobs done within each whole minute `0..=max_minutes`.
pub fn capacity_curve(results: &SweepResult, drones: usize, prioritized: bool, max_minutes: u32) -> Vec<(u32, f64)> {
    let rows: Vec<&GroupStats> = results
        .rows
        .iter()
        .filter(|r| r.drones == drones && r.prioritized == prioritized)
        .filter_map(|r| r.stats.get(Group::All))
        .collect();
    if rows.is_empty() {
        return Vec::new();
    }
    (0..=max_minutes)
        .map(|m| {
            let t = m as f64 * 60.0;
            (m, rows.iter().map(|s| s.fraction_within(t)).sum::<f64>() / rows.len() as f64)
        })
        .collect()
}

/// `drones,prioritized,category,mean_s,median_s,capacity_20min`
pub fn write_summary_csv(rows: &[SummaryRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "drones,prioritized,category,mean_s,median_s,capacity_20min")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.6},{:.6},{:.6}",
            r.drones, r.prioritized, r.category, r.mean_s, r.median_s, r.capacity_20min
        )?;
    }
    Ok(())
}

/// `drones,prioritized,minute,capacity` for every configuration in the sweep.
pub fn write_capacity_csv(results: &SweepResult, max_minutes: u32, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "drones,prioritized,minute,capacity")?;
    for (drones, prioritized) in configs(results).into_keys() {
        for (m, c) in capacity_curve(results, drones, prioritized, max_minutes) {
            writeln!(w, "{drones},{prioritized},{m},{c:.6}")?;
        }
    }
    Ok(())
}

/// `drones,prioritized,set,category,mean_s,median_s,n,makespan_s`
pub fn write_runs_csv(results: &SweepResult, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "drones,prioritized,set,category,mean_s,median_s,n,makespan_s")?;
    for r in &results.rows {
        for (g, s) in &r.stats.groups {
            writeln!(
                w,
                "{},{},{},{},{:.6},{:.6},{},{:.6}",
                r.drones, r.prioritized, r.set_id, g, s.mean, s.median, s.n, r.makespan
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jobs::DeliveryJob;
    use crate::scenario::{BuildingId, Point};
    use proptest::prelude::*;

    fn set(cats: &[Category]) -> DeliverySet {
        DeliverySet {
            id: 0,
            jobs: cats
                .iter()
                .enumerate()
                .map(|(i, &category)| DeliveryJob {
                    id: JobId(i as u32),
                    building: BuildingId(i as u32),
                    target: Point::ground(0.0, 0.0),
                    category,
                })
                .collect(),
            with_replacement: false,
        }
    }

    fn completion(times: &[f64]) -> BTreeMap<JobId, f64> {
        times.iter().enumerate().map(|(i, &t)| (JobId(i as u32), t)).collect()
    }

    fn stats_of(times: &[f64]) -> WaitingStats {
        let s = set(&vec![Category::Standard; times.len()]);
        waiting_stats_from(&completion(times), &s).unwrap()
    }

    #[test]
    fn category_means() {
        let s = set(&[Category::Medical, Category::Standard]);
        let w = waiting_stats_from(&completion(&[100.0, 300.0]), &s).unwrap();
        assert_eq!(w.mean(Group::Medical), Some(100.0));
        assert_eq!(w.mean(Group::Standard), Some(300.0));
        assert_eq!(w.mean(Group::All), Some(200.0));
        assert_eq!(w.n(), 2);

        let w = stats_of(&[42.0, 42.0, 42.0]);
        let all = w.get(Group::All).unwrap();
        assert_eq!((all.mean, all.median), (42.0, 42.0));
        assert!(w.get(Group::Medical).is_none());
    }

    #[test]
    fn missing_job_is_an_error() {
        let s = set(&[Category::Medical, Category::Standard]);
        let err = waiting_stats_from(&completion(&[100.0]), &s).unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
    }

    #[test]
    fn capacity_examples() {
        let w = stats_of(&[600.0, 1200.0, 1800.0]);
        assert!((capacity_at(&w, 1200.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(capacity_at(&w, 599.0).unwrap(), 0.0);
        assert_eq!(capacity_at(&w, 1800.0).unwrap(), 1.0);
        assert!(capacity_at(&WaitingStats::default(), 1.0).is_err());
    }

    #[test]
    fn prioritization_examples() {
        let cats = [Category::Medical, Category::Standard];
        let base = waiting_stats_from(&completion(&[1800.0, 1200.0]), &set(&cats)).unwrap();
        let prio = waiting_stats_from(&completion(&[720.0, 1560.0]), &set(&cats)).unwrap();
        let (m, s) = prioritization_effect(&base, &prio).unwrap();
        assert!((m + 0.60).abs() < 1e-12);
        assert!((s - 0.30).abs() < 1e-12);
        assert_eq!(prioritization_effect(&base, &base).unwrap(), (0.0, 0.0));
        let zero = waiting_stats_from(&completion(&[0.0, 10.0]), &set(&cats)).unwrap();
        assert!(matches!(prioritization_effect(&zero, &base), Err(Error::Degenerate(_))));
    }

    fn row(drones: usize, set_id: u32, times: &[f64]) -> SweepRow {
        let cats: Vec<Category> = (0..times.len())
            .map(|i| if i % 3 == 0 { Category::Medical } else { Category::Standard })
            .collect();
        SweepRow {
            drones,
            prioritized: false,
            set_id,
            stats: waiting_stats_from(&completion(times), &set(&cats)).unwrap(),
            makespan: times.iter().cloned().fold(0.0, f64::max),
        }
    }

    #[test]
    fn summary_shapes() {
        let one = SweepResult {
            rows: vec![row(0, 0, &[100.0, 200.0, 1300.0])],
        };
        let s = summarize_sweep(&one).unwrap();
        assert_eq!(s.len(), 3);
        let all = s.iter().find(|r| r.category == Group::All).unwrap();
        assert_eq!(all.mean_s, one.rows[0].stats.mean(Group::All).unwrap());
        assert!((all.capacity_20min - 2.0 / 3.0).abs() < 1e-15);

        let two = SweepResult {
            rows: vec![row(0, 0, &[100.0, 200.0, 1300.0]), row(0, 1, &[100.0, 200.0, 1300.0])],
        };
        assert_eq!(
            summarize_sweep(&two).unwrap().iter().map(|r| r.mean_s).collect::<Vec<_>>(),
            s.iter().map(|r| r.mean_s).collect::<Vec<_>>()
        );

        let many = SweepResult {
            rows: vec![row(0, 0, &[1.0, 2.0, 3.0]), row(1, 0, &[1.0, 2.0, 3.0]), row(2, 0, &[1.0, 2.0])],
        };
        assert_eq!(summarize_sweep(&many).unwrap().len(), 3 * 3);
        assert!(summarize_sweep(&SweepResult::default()).is_err());

        let mut buf = Vec::new();
        write_summary_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("drones,prioritized,category,mean_s,median_s,capacity_20min\n"));
        assert!(text.contains("0,false,all,533.333333,200.000000,0.666667"));
    }

    #[test]
    fn capacity_curve_steps() {
        let r = SweepResult {
            rows: vec![row(0, 0, &[30.0, 90.0]), row(0, 1, &[60.0, 200.0])],
        };
        let c = capacity_curve(&r, 0, false, 4);
        assert_eq!(c, vec![(0, 0.0), (1, 0.5), (2, 0.75), (3, 0.75), (4, 1.0)]);
    }

    proptest! {
        #[test]
        fn capacity_monotone(times in prop::collection::vec(0.0f64..5000.0, 1..30), a in 0.0f64..5000.0, b in 0.0f64..5000.0) {
            let w = stats_of(&times);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(capacity_at(&w, lo).unwrap() <= capacity_at(&w, hi).unwrap());
        }

        #[test]
        fn summary_within_row_range(sets in prop::collection::vec(prop::collection::vec(0.0f64..5000.0, 3..10), 1..6)) {
            let r = SweepResult { rows: sets.iter().enumerate().map(|(i, t)| row(1, i as u32, t)).collect() };
            for s in summarize_sweep(&r).unwrap() {
                let means: Vec<f64> = r.rows.iter().filter_map(|row| row.stats.mean(s.category)).collect();
                let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(s.mean_s >= lo - 1e-9 && s.mean_s <= hi + 1e-9);
            }
        }
    }
}
