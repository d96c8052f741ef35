//! Categorized delivery sets and spatial-distribution checks.

use std::fmt;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::scenario::{BuildingId, Point, Scenario};

pub const DEFAULT_SETS: usize = 50;
pub const DEFAULT_PER_SET: usize = 15;
pub const DEFAULT_MEDICAL_PER_SET: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub u32);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    /// Time-critical.
    Medical,
    /// Best effort.
    Standard,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Medical => "medical",
            Category::Standard => "standard",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeliveryJob {
    pub id: JobId,
    pub building: BuildingId,
    /// The building's access point.
    pub target: Point,
    pub category: Category,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeliverySet {
    pub id: u32,
    pub jobs: Vec<DeliveryJob>,
    /// Set when the scenario had fewer buildings than requested jobs and
    /// buildings had to be drawn with replacement.
    pub with_replacement: bool,
}

impl DeliverySet {
    pub fn job(&self, id: JobId) -> Option<&DeliveryJob> {
        self.jobs.iter().find(|j| j.id == id)
    }

    pub fn count(&self, category: Category) -> usize {
        self.jobs.iter().filter(|j| j.category == category).count()
    }

    pub fn targets(&self) -> impl Iterator<Item = Point> + '_ {
        self.jobs.iter().map(|j| j.target)
    }

    /// Checks id uniqueness and that every job is bound to its building's access point.
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        let mut ids: Vec<_> = self.jobs.iter().map(|j| j.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invariant(format!("set {}: duplicate job id", self.id)));
        }
        for job in &self.jobs {
            let b = scenario.building(job.building).ok_or_else(|| {
                Error::Invariant(format!("set {}: job {} names unknown building {}", self.id, job.id, job.building))
            })?;
            if job.target != b.access_point {
                return Err(Error::Invariant(format!(
                    "set {}: job {} target differs from building {} access point",
                    self.id, job.id, job.building
                )));
            }
        }
        Ok(())
    }
}

/// Draws `n_sets` independent delivery sets over the scenario's buildings.
///
/// Set `k` uses its own substream of `seed`, so sets can be regenerated
/// individually.
pub fn generate_delivery_sets(
    scenario: &Scenario,
    n_sets: usize,
    per_set: usize,
    medical_per_set: usize,
    seed: u64,
) -> Result<Vec<DeliverySet>> {
    if scenario.buildings.is_empty() {
        return Err(Error::Scenario("scenario has no buildings to deliver to".into()));
    }
    if medical_per_set > per_set {
        return Err(Error::Parameter(format!(
            "medical_per_set {medical_per_set} exceeds per_set {per_set}"
        )));
    }
    let buildings = &scenario.buildings;
    let sets = (0..n_sets)
        .map(|k| {
            let mut rng = substream(seed, &[k as u64]);
            let with_replacement = buildings.len() < per_set;
            let picks: Vec<usize> = if with_replacement {
                (0..per_set).map(|_| rng.random_range(0..buildings.len())).collect()
            } else {
                index::sample(&mut rng, buildings.len(), per_set).into_vec()
            };
            let mut medical = vec![false; per_set];
            for i in index::sample(&mut rng, per_set, medical_per_set) {
                medical[i] = true;
            }
            let jobs = picks
                .iter()
                .zip(medical)
                .enumerate()
                .map(|(i, (&b, is_medical))| DeliveryJob {
                    id: JobId(i as u32),
                    building: buildings[b].id,
                    target: buildings[b].access_point,
                    category: if is_medical { Category::Medical } else { Category::Standard },
                })
                .collect();
            DeliverySet {
                id: k as u32,
                jobs,
                with_replacement,
            }
        })
        .collect();
    Ok(sets)
}

/// All pairwise planar distances, ascending.
pub fn ipd_distribution(points: &[Point]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::Parameter(format!(
            "inter-point distances need at least 2 points, got {}",
            points.len()
        )));
    }
    let mut out = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            out.push(a.planar_distance(b));
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Two-sample Kolmogorov–Smirnov statistic of two ascending samples.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parameter("KS statistic needs non-empty samples".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[derive(Debug, Serialize, Deserialize)]
struct JobRecord {
    id: u32,
    building: u32,
    category: Category,
}

#[derive(Debug, Serialize, Deserialize)]
struct SetRecord {
    id: u32,
    jobs: Vec<JobRecord>,
}

pub fn save_delivery_sets(sets: &[DeliverySet], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let records: Vec<SetRecord> = sets
        .iter()
        .map(|s| SetRecord {
            id: s.id,
            jobs: s
                .jobs
                .iter()
                .map(|j| JobRecord {
                    id: j.id.0,
                    building: j.building.0,
                    category: j.category,
                })
                .collect(),
        })
        .collect();
    let text = serde_json::to_string_pretty(&records)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Loads sets and re-binds each job to its building's access point.
pub fn load_delivery_sets(scenario: &Scenario, path: impl AsRef<Path>) -> Result<Vec<DeliverySet>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<SetRecord> = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
    records
        .into_iter()
        .map(|rec| {
            let jobs = rec
                .jobs
                .into_iter()
                .map(|j| {
                    let b = scenario.building(BuildingId(j.building)).ok_or_else(|| {
                        Error::Invariant(format!("set {}: unknown building {}", rec.id, j.building))
                    })?;
                    Ok(DeliveryJob {
                        id: JobId(j.id),
                        building: b.id,
                        target: b.access_point,
                        category: j.category,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut buildings: Vec<_> = jobs.iter().map(|j| j.building).collect();
            buildings.sort_unstable();
            let with_replacement = buildings.windows(2).any(|w| w[0] == w[1]);
            let set = DeliverySet {
                id: rec.id,
                jobs,
                with_replacement,
            };
            set.validate(scenario)?;
            Ok(set)
        })
        .collect()
}
