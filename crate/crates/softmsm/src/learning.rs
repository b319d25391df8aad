//! Clustering and classification harnesses: k-means with elastic centroids,
//! nearest-centroid classification, and the evaluation metrics reported by
//! the experiment commands.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::averaging::{
    eba_barycentre_from, soft_barycentre_from, ssg_barycentre, BarycentreResult, OptimizerConfig,
    SoftKind,
};
use crate::elastic::Geometry;
use crate::error::{Error, Result};
use crate::parallel;
use crate::series::{SoftParams, TimeSeries, TimeSeriesSet};
use crate::soft;

/// A series collection with integer class labels, contiguous from 0.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    data: TimeSeriesSet,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(data: TimeSeriesSet, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != data.n() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} series",
                labels.len(),
                data.n()
            )));
        }
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::EmptyClass(missing));
        }
        Ok(Self { data, labels })
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn series_len(&self) -> usize {
        self.data.series_len()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }

    pub fn data(&self) -> &TimeSeriesSet {
        &self.data
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_members(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// Concatenates two datasets with an identical label scheme.
    pub fn concat(&self, other: &LabeledDataset) -> Result<LabeledDataset> {
        let mut series = self.data.as_slice().to_vec();
        series.extend_from_slice(other.data.as_slice());
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        LabeledDataset::new(TimeSeriesSet::new(series)?, labels)
    }
}

/// How centroids and class prototypes are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingMethod {
    /// Alignment-based refinement (DBA/MBA).
    Eba,
    /// Stochastic subgradient descent.
    Ssg,
    /// Gradient-based soft barycentre.
    Soft,
}

impl AveragingMethod {
    pub fn name(&self) -> &'static str {
        match self {
            AveragingMethod::Eba => "eba",
            AveragingMethod::Ssg => "ssg",
            AveragingMethod::Soft => "soft",
        }
    }
}

/// Averaging method, geometry and parameters bundled for the harnesses.
#[derive(Debug, Clone)]
pub struct AveragingConfig {
    pub method: AveragingMethod,
    pub geometry: Geometry,
    pub params: SoftParams,
    pub optimizer: OptimizerConfig,
}

impl AveragingConfig {
    pub fn soft_kind(&self) -> SoftKind {
        match self.geometry {
            Geometry::Dtw => SoftKind::SoftDtw,
            Geometry::Msm => SoftKind::SoftMsm,
        }
    }

    /// Barycentre of a set under this configuration, from the arithmetic
    /// mean.
    pub fn barycentre(&self, set: &TimeSeriesSet) -> Result<BarycentreResult> {
        self.barycentre_from(set.arithmetic_mean(), set)
    }

    /// Warm-started barycentre. The subgradient method always restarts from
    /// the arithmetic mean (its schedule is defined that way); the other two
    /// refine the given candidate, which keeps k-means updates monotone.
    pub(crate) fn barycentre_from(
        &self,
        init: TimeSeries,
        set: &TimeSeriesSet,
    ) -> Result<BarycentreResult> {
        match self.method {
            AveragingMethod::Eba => eba_barycentre_from(
                init,
                set,
                self.geometry,
                self.params.cost_c,
                &self.optimizer,
            ),
            AveragingMethod::Ssg => {
                ssg_barycentre(set, self.geometry, self.params.cost_c, &self.optimizer)
            }
            AveragingMethod::Soft => {
                soft_barycentre_from(init, set, self.soft_kind(), &self.params, &self.optimizer)
            }
        }
    }
}

/// Lloyd-iteration knobs.
#[derive(Debug, Clone, Copy)]
pub struct KmeansConfig {
    pub max_iters: usize,
    pub seed: u64,
    /// Assign with the soft objective instead of the hard distance. Off by
    /// default: hard-distance assignment with soft centroid updates.
    pub soft_assignment: bool,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            seed: 0,
            soft_assignment: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub centroids: TimeSeriesSet,
    /// Sum of squared hard elastic distances to assigned centroids.
    pub inertia: f64,
    pub cl_accuracy: f64,
    pub ari: f64,
    pub iterations: usize,
    /// Inertia after the initial assignment and each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

/// Lloyd iterations with elastic centroids: assign each series to its
/// nearest centroid, recompute centroids with the configured averaging,
/// reseed empty clusters from the farthest point, stop on stable assignments.
pub fn kmeans_elastic(
    dataset: &LabeledDataset,
    k: usize,
    averaging: &AveragingConfig,
    config: &KmeansConfig,
) -> Result<ClusteringResult> {
    let n = dataset.n();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::TooFewSeries { n, k });
    }
    let data = dataset.data();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = rand::seq::index::sample(&mut rng, n, k).into_vec();
    let mut centroids: Vec<TimeSeries> = initial.iter().map(|&i| data.get(i).clone()).collect();

    let (mut assignments, mut dists) = assign(data, &centroids, averaging, config.soft_assignment)?;
    let mut trace = vec![hard_inertia(data, &centroids, &assignments, averaging)?];
    let mut iterations = 0;

    for _ in 0..config.max_iters {
        iterations += 1;

        // Recompute centroids of non-empty clusters, warm-started.
        let members_by_cluster: Vec<Vec<usize>> = (0..k)
            .map(|c| {
                assignments
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a == c)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let updated = parallel::map_range(k, |c| -> Result<Option<TimeSeries>> {
            let members = &members_by_cluster[c];
            if members.is_empty() {
                return Ok(None);
            }
            let subset = data.subset(members)?;
            Ok(Some(
                averaging
                    .barycentre_from(centroids[c].clone(), &subset)?
                    .barycentre,
            ))
        });
        let mut empty = Vec::new();
        for (c, u) in updated.into_iter().enumerate() {
            match u? {
                Some(ts) => centroids[c] = ts,
                None => empty.push(c),
            }
        }

        // Reseed empty clusters from the farthest points.
        if !empty.is_empty() {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| dists[b].partial_cmp(&dists[a]).unwrap().then(a.cmp(&b)));
            for (slot, c) in empty.into_iter().enumerate() {
                centroids[c] = data.get(order[slot % n]).clone();
            }
        }

        let (next, next_dists) = assign(data, &centroids, averaging, config.soft_assignment)?;
        dists = next_dists;
        trace.push(hard_inertia(data, &centroids, &next, averaging)?);
        let stable = next == assignments;
        assignments = next;
        if stable {
            break;
        }
    }

    let inertia = *trace.last().unwrap();
    let cl_accuracy = clustering_accuracy(&assignments, dataset.labels())?;
    let ari = adjusted_rand_index(&assignments, dataset.labels())?;
    Ok(ClusteringResult {
        assignments,
        centroids: TimeSeriesSet::new(centroids)?,
        inertia,
        cl_accuracy,
        ari,
        iterations,
        inertia_trace: trace,
    })
}

/// Assignment step: nearest centroid per series under the configured score,
/// ties to the lowest centroid index. Returns assignments and scores.
fn assign(
    data: &TimeSeriesSet,
    centroids: &[TimeSeries],
    averaging: &AveragingConfig,
    soft_assignment: bool,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let scored = parallel::map_slice(data.as_slice(), |x| -> Result<(usize, f64)> {
        let mut best = (0usize, f64::INFINITY);
        for (c, centroid) in centroids.iter().enumerate() {
            let score = assignment_score(x, centroid, averaging, soft_assignment)?;
            if score < best.1 {
                best = (c, score);
            }
        }
        Ok(best)
    });
    let mut assignments = Vec::with_capacity(data.n());
    let mut dists = Vec::with_capacity(data.n());
    for s in scored {
        let (a, d) = s?;
        assignments.push(a);
        dists.push(d);
    }
    Ok((assignments, dists))
}

fn assignment_score(
    x: &TimeSeries,
    centroid: &TimeSeries,
    averaging: &AveragingConfig,
    soft_assignment: bool,
) -> Result<f64> {
    if soft_assignment {
        match averaging.soft_kind() {
            SoftKind::SoftDtw => soft::dtw::objective(x, centroid, &averaging.params),
            SoftKind::SoftMsm => soft::msm::objective(x, centroid, &averaging.params),
        }
    } else {
        averaging
            .geometry
            .squared_distance(x, centroid, averaging.params.cost_c)
    }
}

/// Inertia is always reported under the hard geometry, whatever the
/// assignment score.
fn hard_inertia(
    data: &TimeSeriesSet,
    centroids: &[TimeSeries],
    assignments: &[usize],
    averaging: &AveragingConfig,
) -> Result<f64> {
    let terms = parallel::map_range(data.n(), |i| {
        averaging.geometry.squared_distance(
            data.get(i),
            &centroids[assignments[i]],
            averaging.params.cost_c,
        )
    });
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total)
}

/// Fraction of agreeing items under the best one-to-one cluster-to-label
/// matching (optimal assignment on the contingency matrix).
pub fn clustering_accuracy(assignments: &[usize], labels: &[usize]) -> Result<f64> {
    let contingency = contingency_matrix(assignments, labels)?;
    let n: i64 = contingency.iter().flatten().sum();
    let matched = max_assignment(&contingency);
    Ok(matched as f64 / n as f64)
}

/// Standard pair-counting adjusted Rand index.
pub fn adjusted_rand_index(assignments: &[usize], labels: &[usize]) -> Result<f64> {
    let contingency = contingency_matrix(assignments, labels)?;
    let comb2 = |v: i64| (v * (v - 1)) as f64 / 2.0;
    let n: i64 = contingency.iter().flatten().sum();
    let sum_cells: f64 = contingency.iter().flatten().map(|&v| comb2(v)).sum();
    let sum_rows: f64 = contingency.iter().map(|row| comb2(row.iter().sum())).sum();
    let sum_cols: f64 = (0..contingency[0].len())
        .map(|j| comb2(contingency.iter().map(|row| row[j]).sum()))
        .sum();
    let expected = sum_rows * sum_cols / comb2(n);
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-12 {
        // Both partitions degenerate and identical.
        return Ok(1.0);
    }
    Ok((sum_cells - expected) / (max_index - expected))
}

fn contingency_matrix(assignments: &[usize], labels: &[usize]) -> Result<Vec<Vec<i64>>> {
    if assignments.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: assignments.len(),
            right: labels.len(),
        });
    }
    if assignments.is_empty() {
        return Err(Error::EmptyInput("partition metrics"));
    }
    let ka = assignments.iter().max().unwrap() + 1;
    let kl = labels.iter().max().unwrap() + 1;
    let mut counts = vec![vec![0i64; kl]; ka];
    for (&a, &l) in assignments.iter().zip(labels) {
        counts[a][l] += 1;
    }
    Ok(counts)
}

/// Maximum total agreement over one-to-one row-to-column matchings, via the
/// Hungarian algorithm on the (zero-padded) square cost matrix.
fn max_assignment(counts: &[Vec<i64>]) -> i64 {
    let rows = counts.len();
    let cols = counts[0].len();
    let size = rows.max(cols);
    let big: i64 = counts.iter().flatten().map(|&v| v.abs()).sum::<i64>() + 1;
    // Minimise (big - count); padding cells cost `big`.
    let cost = |r: usize, c: usize| -> i64 {
        if r < rows && c < cols {
            big - counts[r][c]
        } else {
            big
        }
    };

    // Potentials-based Hungarian algorithm, O(size³).
    let mut u = vec![0i64; size + 1];
    let mut v = vec![0i64; size + 1];
    let mut matched_col_row = vec![0usize; size + 1]; // column -> row (1-based, 0 = free)
    for r in 1..=size {
        let mut way = vec![0usize; size + 1];
        let mut minv = vec![i64::MAX; size + 1];
        let mut used = vec![false; size + 1];
        let mut j0 = 0usize;
        matched_col_row[0] = r;
        loop {
            used[j0] = true;
            let i0 = matched_col_row[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0usize;
            for j in 1..=size {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[matched_col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_col_row[j0] = matched_col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut total = 0;
    for j in 1..=size {
        let r = matched_col_row[j];
        if r >= 1 && r - 1 < rows && j - 1 < cols {
            total += counts[r - 1][j - 1];
        }
    }
    total
}

/// Scoring rule for nearest-centroid prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InferenceKind {
    /// Rank prototypes by the soft objective.
    Soft,
    /// Rank prototypes by the hard elastic distance.
    Hard,
}

#[derive(Debug, Clone)]
pub struct ClassificationResult {
    pub predictions: Vec<usize>,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
}

/// One barycentre per class over its training series.
pub fn nearest_centroid_fit(
    train: &LabeledDataset,
    averaging: &AveragingConfig,
) -> Result<TimeSeriesSet> {
    let k = train.n_classes();
    let prototypes = parallel::map_range(k, |class| -> Result<TimeSeries> {
        let members = train.class_members(class);
        if members.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        let subset = train.data().subset(&members)?;
        Ok(averaging.barycentre(&subset)?.barycentre)
    });
    TimeSeriesSet::new(prototypes.into_iter().collect::<Result<Vec<_>>>()?)
}

/// Labels each test series with the class of its minimum-score prototype,
/// ties to the lowest class id, and scores the predictions against the test
/// labels.
pub fn nearest_centroid_predict(
    prototypes: &TimeSeriesSet,
    test: &LabeledDataset,
    inference: InferenceKind,
    geometry: Geometry,
    params: &SoftParams,
) -> Result<ClassificationResult> {
    if prototypes.series_len() != test.series_len() {
        return Err(Error::LengthMismatch {
            left: prototypes.series_len(),
            right: test.series_len(),
        });
    }
    let predictions = parallel::map_slice(test.data().as_slice(), |x| -> Result<usize> {
        let mut best = (0usize, f64::INFINITY);
        for (class, proto) in prototypes.iter().enumerate() {
            let score = match inference {
                InferenceKind::Hard => geometry.distance(x, proto, params.cost_c)?,
                InferenceKind::Soft => match geometry {
                    Geometry::Dtw => soft::dtw::objective(x, proto, params)?,
                    Geometry::Msm => soft::msm::objective(x, proto, params)?,
                },
            };
            if score < best.1 {
                best = (class, score);
            }
        }
        Ok(best.0)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let labels = test.labels();
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    let accuracy = correct as f64 / labels.len() as f64;
    let balanced = balanced_accuracy(&predictions, labels)?;
    Ok(ClassificationResult {
        predictions,
        accuracy,
        balanced_accuracy: balanced,
    })
}

/// Macro-averaged recall over the label classes.
pub fn balanced_accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("balanced accuracy"));
    }
    let k = labels.iter().max().unwrap() + 1;
    let mut totals = vec![0usize; k];
    let mut hits = vec![0usize; k];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= k {
            return Err(Error::InvalidArgument(format!(
                "prediction names class {p} absent from the labels"
            )));
        }
        totals[l] += 1;
        if p == l {
            hits[l] += 1;
        }
    }
    let mut recall_sum = 0.0;
    for class in 0..k {
        if totals[class] == 0 {
            return Err(Error::EmptyClass(class));
        }
        recall_sum += hits[class] as f64 / totals[class] as f64;
    }
    Ok(recall_sum / k as f64)
}
