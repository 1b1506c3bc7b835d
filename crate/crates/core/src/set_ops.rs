//! Maximal and weakly maximal elements of the finite image `F_U(x)`,
//! the index groups of each distinct maximal value, and the partition set.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::cone::PolyhedralCone;
use crate::error::{Error, Result};
use crate::problem::{ImagePoint, UncertainProblem};

/// Two image points closer than this in the max-norm are the same value.
pub const VALUE_TOL: f64 = 1e-9;

/// Largest partition set that will be enumerated.
pub const PARTITION_CAP: usize = 4096;

/// `F_U(x)` annotated with its maximal-element structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioImage {
    pub points: Vec<ImagePoint>,
    /// Sorted scenario indices whose value is maximal.
    pub maximal_ids: Vec<usize>,
    /// Sorted scenario indices whose value is weakly maximal.
    pub weak_maximal_ids: Vec<usize>,
    /// Index sets `I_v(x)`, one per distinct maximal value, ordered by smallest member.
    pub value_groups: Vec<Vec<usize>>,
}

impl ScenarioImage {
    /// Number of distinct maximal values `ω(x)`.
    pub fn omega(&self) -> usize {
        self.value_groups.len()
    }

    /// Representative value of group `j`.
    pub fn group_value(&self, j: usize) -> &DVector<f64> {
        self.value_of(self.value_groups[j][0])
    }

    /// Image value of scenario `i`.
    pub fn value_of(&self, scenario: usize) -> &DVector<f64> {
        &self
            .points
            .iter()
            .find(|(i, _)| *i == scenario)
            .expect("scenario present in image")
            .1
    }

    /// `Max = WMax` as index sets.
    pub fn max_equals_weak_max(&self) -> bool {
        self.maximal_ids == self.weak_maximal_ids
    }
}

/// Partition set: all tuples choosing one scenario per distinct maximal value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSet {
    pub tuples: Vec<Vec<usize>>,
}

impl PartitionSet {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

fn max_norm_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Groups equal values (within [`VALUE_TOL`]); returns for each cluster the
/// positions in `points` of its members, first member is the representative.
fn cluster(points: &[ImagePoint]) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (pos, (_, v)) in points.iter().enumerate() {
        match clusters
            .iter_mut()
            .find(|c| max_norm_dist(&points[c[0]].1, v) <= VALUE_TOL)
        {
            Some(c) => c.push(pos),
            None => clusters.push(vec![pos]),
        }
    }
    clusters
}

/// Computes `Max(F_U(x), K)`, `WMax(F_U(x), K)` and the value groups by
/// pairwise comparison.
///
/// A value `z` is maximal when no *other* value `y` satisfies `y - z ∈ K`;
/// duplicates (within [`VALUE_TOL`]) collapse into one group.
pub fn max_elements(points: Vec<ImagePoint>, cone: &PolyhedralCone) -> Result<ScenarioImage> {
    if points.is_empty() {
        return Err(Error::Argument("image must be nonempty".into()));
    }
    if let Some((i, _)) = points.iter().find(|(_, v)| v.len() != cone.dim()) {
        return Err(Error::Argument(format!("image point {i} has wrong dimension")));
    }
    let clusters = cluster(&points);
    let reps: Vec<&DVector<f64>> = clusters.iter().map(|c| &points[c[0]].1).collect();

    let mut value_groups = Vec::new();
    for (a, members) in clusters.iter().enumerate() {
        let dominated = reps
            .iter()
            .enumerate()
            .any(|(b, y)| b != a && cone.contains_unchecked((*y - reps[a]).as_slice()));
        if !dominated {
            let mut ids: Vec<usize> = members.iter().map(|&pos| points[pos].0).collect();
            ids.sort_unstable();
            value_groups.push(ids);
        }
    }
    value_groups.sort_by_key(|g| g[0]);

    let weak_maximal_ids = weak_max_elements(&points, cone)?;
    let mut maximal_ids: Vec<usize> = value_groups.iter().flatten().copied().collect();
    maximal_ids.sort_unstable();

    Ok(ScenarioImage {
        points,
        maximal_ids,
        weak_maximal_ids,
        value_groups,
    })
}

/// Scenario indices `i` such that no image point lies in `F(x, ξ_i) + int K`.
pub fn weak_max_elements(points: &[ImagePoint], cone: &PolyhedralCone) -> Result<Vec<usize>> {
    if let Some((i, _)) = points.iter().find(|(_, v)| v.len() != cone.dim()) {
        return Err(Error::Argument(format!("image point {i} has wrong dimension")));
    }
    let mut ids: Vec<usize> = points
        .iter()
        .filter(|(_, z)| {
            !points
                .iter()
                .any(|(_, y)| cone.contains_interior_unchecked((y - z).as_slice()))
        })
        .map(|(i, _)| *i)
        .collect();
    ids.sort_unstable();
    Ok(ids)
}

/// Cartesian product of the value groups in lexicographic order.
pub fn partition_set(image: &ScenarioImage) -> Result<PartitionSet> {
    partition_product(&image.value_groups)
}

pub fn partition_product(groups: &[Vec<usize>]) -> Result<PartitionSet> {
    if groups.is_empty() || groups.iter().any(Vec::is_empty) {
        return Err(Error::Argument("partition set needs nonempty value groups".into()));
    }
    let size = groups
        .iter()
        .try_fold(1usize, |acc, g| acc.checked_mul(g.len()))
        .filter(|&s| s <= PARTITION_CAP)
        .ok_or_else(|| {
            let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
            Error::Capacity(format!(
                "partition set of group sizes {sizes:?} exceeds {PARTITION_CAP} tuples"
            ))
        })?;

    let mut tuples = Vec::with_capacity(size);
    let mut cursor = vec![0usize; groups.len()];
    loop {
        tuples.push(cursor.iter().zip(groups).map(|(&c, g)| g[c]).collect());
        // odometer, last position fastest
        let mut pos = groups.len();
        loop {
            if pos == 0 {
                return Ok(PartitionSet { tuples });
            }
            pos -= 1;
            cursor[pos] += 1;
            if cursor[pos] < groups[pos].len() {
                break;
            }
            cursor[pos] = 0;
        }
    }
}

/// Sampling-based regularity diagnostic; never a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub max_equals_weak_max: bool,
    pub omega: usize,
    /// `ω` stayed equal to `omega` at every sample in the ball.
    pub omega_locally_constant: bool,
    pub omega_min: usize,
    pub omega_max: usize,
    pub radius: f64,
    pub samples: usize,
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        self.max_equals_weak_max && self.omega_locally_constant
    }
}

/// Checks `Max = WMax` at `x` and samples `ω` uniformly in the ball of the
/// given radius around `x`.
pub fn check_regularity(
    prob: &UncertainProblem,
    x: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<RegularityReport> {
    if !(radius > 0.0) || samples == 0 {
        return Err(Error::Argument("regularity check needs radius > 0 and samples >= 1".into()));
    }
    let here = max_elements(prob.evaluate_image(x)?, prob.cone())?;
    let omega = here.omega();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    let n = x.len();
    let (mut lo, mut hi) = (omega, omega);
    for _ in 0..samples {
        let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let scale = radius * unit.sample(&mut rng).powf(1.0 / n as f64) / norm;
        let probe: Vec<f64> = x.iter().zip(&dir).map(|(xi, d)| xi + scale * d).collect();
        let w = max_elements(prob.evaluate_image(&probe)?, prob.cone())?.omega();
        lo = lo.min(w);
        hi = hi.max(w);
    }
    Ok(RegularityReport {
        max_equals_weak_max: here.max_equals_weak_max(),
        omega,
        omega_locally_constant: lo == omega && hi == omega,
        omega_min: lo,
        omega_max: hi,
        radius,
        samples,
    })
}
