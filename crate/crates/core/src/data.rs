//! Datasets, CSV ingestion, per-feature scaling, fold plans and seeded
//! synthetic generators.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense feature matrix with one integer label per row.
///
/// Binary tasks label rows `+1` / `-1`; multiclass tasks use `0..C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Array2<T>,
    labels: Vec<i64>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Array2<T>, labels: Vec<i64>) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 {
            return Err(Error::NoDataRows);
        }
        if d == 0 {
            return Err(Error::InvalidArgument(
                "dataset needs at least one feature".into(),
            ));
        }
        if labels.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: labels.len(),
            });
        }
        for ((row, column), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: row + 1,
                    column: column + 1,
                });
            }
        }
        Ok(Self { features, labels })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, T> {
        self.features.view()
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.features.row(i)
    }

    /// Distinct labels in ascending order.
    pub fn classes(&self) -> Vec<i64> {
        self.labels
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn is_binary(&self) -> bool {
        self.labels.iter().all(|&y| y == 1 || y == -1)
    }

    /// Checks the binary-task label invariant.
    pub fn require_binary(&self) -> Result<()> {
        match self.labels.iter().position(|&y| y != 1 && y != -1) {
            None => Ok(()),
            Some(i) => Err(Error::InvalidLabel {
                row: i + 1,
                label: self.labels[i],
                reason: "binary tasks require labels +1 or -1",
            }),
        }
    }

    /// Checks that labels are `0..C` with every class present; returns `C`.
    pub fn require_multiclass(&self) -> Result<usize> {
        if let Some(i) = self.labels.iter().position(|&y| y < 0) {
            return Err(Error::InvalidLabel {
                row: i + 1,
                label: self.labels[i],
                reason: "multiclass labels must lie in 0..C",
            });
        }
        let classes = self.classes();
        let c = (*classes.last().expect("n >= 1") + 1) as usize;
        if c < 2 {
            return Err(Error::InvalidArgument(
                "multiclass task needs at least two classes".into(),
            ));
        }
        for k in 0..c as i64 {
            if classes.binary_search(&k).is_err() {
                return Err(Error::EmptyClass(k));
            }
        }
        Ok(c)
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let features = self.features.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(features, labels)
    }

    /// Same features with labels replaced.
    pub fn with_labels(&self, labels: Vec<i64>) -> Result<Self> {
        Self::new(self.features.clone(), labels)
    }

    /// Appends a constant-1 column.
    pub fn with_bias_column(&self) -> Self {
        let (n, d) = self.features.dim();
        let mut features = Array2::from_elem((n, d + 1), T::one());
        features
            .slice_mut(ndarray::s![.., ..d])
            .assign(&self.features);
        Self {
            features,
            labels: self.labels.clone(),
        }
    }
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    /// Zero-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "last" => LabelColumn::Last,
            _ => match s.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(s.to_string()),
            },
        })
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(s) => write!(f, "{s}"),
            LabelColumn::Last => write!(f, "last"),
        }
    }
}

struct RawTable {
    header: Option<Vec<String>>,
    /// (1-based file line, cells)
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(records.len() + 1);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        records.push((line, rec.iter().map(str::to_string).collect::<Vec<_>>()));
    }

    // A first row with any non-numeric cell is a header.
    let header = match records.first() {
        Some((_, cells)) if cells.iter().any(|c| c.parse::<f64>().is_err()) => {
            Some(records.remove(0).1)
        }
        _ => None,
    };

    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| records.first().map(|r| r.1.len()));
    if let Some(width) = width {
        for (line, cells) in &records {
            if cells.len() != width {
                return Err(Error::RaggedRow {
                    row: *line,
                    expected: width,
                    found: cells.len(),
                });
            }
        }
    }
    Ok(RawTable {
        header,
        rows: records,
    })
}

fn resolve_label_column(
    label: &LabelColumn,
    header: Option<&[String]>,
    width: usize,
) -> Result<usize> {
    let idx = match label {
        LabelColumn::Index(i) => *i,
        LabelColumn::Last => width.checked_sub(1).ok_or(Error::NoDataRows)?,
        LabelColumn::Name(name) => header
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::LabelColumn(name.clone()))?,
    };
    if idx >= width {
        return Err(Error::LabelColumn(label.to_string()));
    }
    Ok(idx)
}

fn parse_feature<T: Scalar>(cell: &str, row: usize, column: usize) -> Result<T> {
    let v: T = cell.parse().map_err(|_| Error::ParseFeature {
        row,
        column,
        value: cell.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::NonFinite { row, column });
    }
    Ok(v)
}

/// Reads a labelled CSV file. Rows and columns in error messages are 1-based.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset<T>> {
    let table = read_table(path.as_ref())?;
    if table.rows.is_empty() {
        return Err(Error::NoDataRows);
    }
    let width = table.rows[0].1.len();
    let label_idx = resolve_label_column(label, table.header.as_deref(), width)?;
    if width < 2 {
        return Err(Error::InvalidArgument(
            "csv needs a label column and at least one feature".into(),
        ));
    }

    let n = table.rows.len();
    let d = width - 1;
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (line, cells) in &table.rows {
        for (j, cell) in cells.iter().enumerate() {
            if j == label_idx {
                let y = cell.parse::<i64>().map_err(|_| Error::ParseLabel {
                    row: *line,
                    column: j + 1,
                    value: cell.clone(),
                })?;
                labels.push(y);
            } else {
                features.push(parse_feature(cell, *line, j + 1)?);
            }
        }
    }
    let features = Array2::from_shape_vec((n, d), features).expect("row widths checked");
    Dataset::new(features, labels)
}

/// Reads an unlabelled (or label-dropped) feature matrix. Unlike
/// [`load_csv`], an empty file yields zero rows.
pub fn load_feature_rows<T: Scalar>(
    path: impl AsRef<Path>,
    drop_column: Option<&LabelColumn>,
) -> Result<Vec<Vec<T>>> {
    let table = read_table(path.as_ref())?;
    let Some(width) = table.rows.first().map(|r| r.1.len()) else {
        return Ok(Vec::new());
    };
    let skip = drop_column
        .map(|c| resolve_label_column(c, table.header.as_deref(), width))
        .transpose()?;
    table
        .rows
        .iter()
        .map(|(line, cells)| {
            cells
                .iter()
                .enumerate()
                .filter(|(j, _)| Some(*j) != skip)
                .map(|(j, cell)| parse_feature(cell, *line, j + 1))
                .collect()
        })
        .collect()
}

/// Per-feature training range used to map features onto `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScalingParams<T> {
    pub min: Vec<T>,
    pub max: Vec<T>,
}

impl<T: Scalar> ScalingParams<T> {
    pub fn d(&self) -> usize {
        self.min.len()
    }

    #[inline]
    fn scale_value(&self, j: usize, x: T) -> T {
        let (lo, hi) = (self.min[j], self.max[j]);
        if hi == lo {
            T::zero()
        } else {
            let two = T::lit(2.0);
            two * (x - lo) / (hi - lo) - T::one()
        }
    }

    /// Scales a single raw feature vector. Out-of-range values are not clamped.
    pub fn transform(&self, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        if x.len() != self.d() {
            return Err(Error::Dimension {
                expected: self.d(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| self.scale_value(j, v))
            .collect())
    }
}

pub fn fit_scaling<T: Scalar>(train: &Dataset<T>) -> ScalingParams<T> {
    let x = train.features();
    let mut min = x.row(0).to_vec();
    let mut max = min.clone();
    for row in x.rows() {
        for (j, &v) in row.iter().enumerate() {
            if v < min[j] {
                min[j] = v;
            }
            if v > max[j] {
                max[j] = v;
            }
        }
    }
    ScalingParams { min, max }
}

/// Maps each feature through `2 (x - min) / (max - min) - 1`; constant
/// features map to 0.
pub fn apply_scaling<T: Scalar>(
    data: &Dataset<T>,
    params: &ScalingParams<T>,
) -> Result<Dataset<T>> {
    if data.d() != params.d() {
        return Err(Error::Dimension {
            expected: params.d(),
            found: data.d(),
        });
    }
    let mut features = data.features.clone();
    for mut row in features.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = params.scale_value(j, *v);
        }
    }
    Ok(Dataset {
        features,
        labels: data.labels.clone(),
    })
}

/// Assignment of samples to `k` non-overlapping folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

fn check_fold_count(n: usize, k: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "fold count must satisfy 2 <= k <= n (k = {k}, n = {n})"
        )));
    }
    Ok(())
}

fn deal(order: &[usize], n: usize, k: usize, seed: u64, stratified: bool) -> FoldPlan {
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    FoldPlan {
        k,
        assignments,
        seed,
        stratified,
    }
}

/// Random unstratified partition of `0..n` into `k` folds whose sizes differ by at most one.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    check_fold_count(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    Ok(deal(&order, n, k, seed, false))
}

/// Like [`make_folds`], but each class is spread round-robin over the folds.
pub fn make_stratified_folds(labels: &[i64], k: usize, seed: u64) -> Result<FoldPlan> {
    let n = labels.len();
    check_fold_count(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    // stable sort keeps the shuffled order within each class
    order.sort_by_key(|&i| labels[i]);
    Ok(deal(&order, n, k, seed, true))
}

fn gaussian_rows<T: Scalar>(
    rng: &mut ChaCha8Rng,
    centers: &[Vec<f64>],
    n_per_class: usize,
    labels_of: impl Fn(usize) -> i64,
) -> (Vec<Vec<T>>, Vec<i64>) {
    let mut rows = Vec::with_capacity(centers.len() * n_per_class);
    let mut labels = Vec::with_capacity(centers.len() * n_per_class);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..n_per_class {
            let row = center
                .iter()
                .map(|&m| T::lit(m + rng.sample::<f64, _>(StandardNormal)))
                .collect();
            rows.push(row);
            labels.push(labels_of(c));
        }
    }
    (rows, labels)
}

fn shuffled_dataset<T: Scalar>(
    rng: &mut ChaCha8Rng,
    rows: Vec<Vec<T>>,
    labels: Vec<i64>,
) -> Result<Dataset<T>> {
    let n = rows.len();
    let d = rows[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut flat = Vec::with_capacity(n * d);
    let mut out_labels = Vec::with_capacity(n);
    for &i in &order {
        flat.extend_from_slice(&rows[i]);
        out_labels.push(labels[i]);
    }
    Dataset::new(
        Array2::from_shape_vec((n, d), flat).expect("rectangular"),
        out_labels,
    )
}

/// Two isotropic unit-variance Gaussian clusters, labelled `+1` / `-1`,
/// whose means lie `separation` apart along the diagonal. Exactly
/// `round(noise_rate * n)` labels are flipped.
pub fn make_synthetic_gaussians<T: Scalar>(
    n_per_class: usize,
    d: usize,
    separation: f64,
    noise_rate: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    if n_per_class < 1 || d < 1 {
        return Err(Error::InvalidArgument(
            "n_per_class and d must be at least 1".into(),
        ));
    }
    if !(0.0..0.5).contains(&noise_rate) {
        return Err(Error::InvalidArgument(format!(
            "noise_rate must lie in [0, 0.5), got {noise_rate}"
        )));
    }
    let offset = 0.5 * separation / (d as f64).sqrt();
    let centers = vec![vec![offset; d], vec![-offset; d]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, mut labels) =
        gaussian_rows::<T>(
            &mut rng,
            &centers,
            n_per_class,
            |c| if c == 0 { 1 } else { -1 },
        );

    let n = labels.len();
    let flips = (noise_rate * n as f64).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    for &i in &idx[..flips] {
        labels[i] = -labels[i];
    }
    shuffled_dataset(&mut rng, rows, labels)
}

/// `n_classes` unit-variance Gaussian clusters labelled `0..n_classes`.
/// Class `c` is centred at `±separation · e_{c mod d}`, so at most `2d`
/// classes are supported.
pub fn make_synthetic_blobs<T: Scalar>(
    n_per_class: usize,
    d: usize,
    n_classes: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    if n_per_class < 1 || d < 1 || n_classes < 2 || n_classes > 2 * d {
        return Err(Error::InvalidArgument(format!(
            "need n_per_class >= 1 and 2 <= n_classes <= 2d (d = {d}, n_classes = {n_classes})"
        )));
    }
    let centers: Vec<Vec<f64>> = (0..n_classes)
        .map(|c| {
            let mut m = vec![0.0; d];
            m[c % d] = if c < d { separation } else { -separation };
            m
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, labels) = gaussian_rows::<T>(&mut rng, &centers, n_per_class, |c| c as i64);
    shuffled_dataset(&mut rng, rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_simple_csv() {
        let f = write_tmp("1.0,2.0,1\n3.0,4.0,-1\n5.0,6.0,1\n");
        let ds: Dataset<f64> = load_csv(f.path(), &LabelColumn::Last).unwrap();
        assert_eq!((ds.n(), ds.d()), (3, 2));
        assert_eq!(ds.labels(), &[1, -1, 1]);
        assert_eq!(ds.row(1).to_vec(), vec![3.0, 4.0]);
    }

    #[test]
    fn load_csv_with_header_and_named_label() {
        let f = write_tmp("y,a,b\n1,0.5,0.25\n-1,1.5,2.5\n");
        let ds: Dataset<f64> = load_csv(f.path(), &"y".parse().unwrap()).unwrap();
        assert_eq!(ds.labels(), &[1, -1]);
        assert_eq!(ds.row(0).to_vec(), vec![0.5, 0.25]);
    }

    #[test]
    fn load_csv_reports_bad_cell_position() {
        let f = write_tmp("1.0,2.0,1\n3.0,abc,-1\n");
        let err = load_csv::<f64>(f.path(), &LabelColumn::Last).unwrap_err();
        match err {
            Error::ParseFeature { row, column, value } => {
                assert_eq!((row, column, value.as_str()), (2, 2, "abc"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_csv_errors() {
        let empty = write_tmp("");
        let err = load_csv::<f64>(empty.path(), &LabelColumn::Last).unwrap_err();
        assert_eq!(err.to_string(), "no data rows");

        let ragged = write_tmp("1,2,1\n3,-1\n");
        assert!(matches!(
            load_csv::<f64>(ragged.path(), &LabelColumn::Last),
            Err(Error::RaggedRow { row: 2, .. })
        ));

        let bad_label = write_tmp("1,2,x1\n");
        // first row non-numeric is a header, so there are no data rows left
        assert!(load_csv::<f64>(bad_label.path(), &LabelColumn::Last).is_err());
        let bad_label = write_tmp("1,2,1\n1,2,0.5\n");
        assert!(matches!(
            load_csv::<f64>(bad_label.path(), &LabelColumn::Last),
            Err(Error::ParseLabel {
                row: 2,
                column: 3,
                ..
            })
        ));

        let nan = write_tmp("1,NaN,1\n");
        assert!(matches!(
            load_csv::<f64>(nan.path(), &LabelColumn::Last),
            Err(Error::NonFinite { row: 1, column: 2 })
        ));

        assert!(matches!(
            load_csv::<f64>("/nonexistent/file.csv", &LabelColumn::Last),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn feature_rows_allow_empty() {
        let empty = write_tmp("");
        assert!(load_feature_rows::<f64>(empty.path(), None)
            .unwrap()
            .is_empty());
        let f = write_tmp("a,b,y\n1,2,1\n");
        let rows = load_feature_rows::<f64>(f.path(), Some(&"y".parse().unwrap())).unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0]]);
    }

    #[test]
    fn scaling_examples() {
        let ds = Dataset::<f64>::new(array![[0.0, 7.0], [5.0, 7.0], [10.0, 7.0]], vec![1, -1, 1])
            .unwrap();
        let params = fit_scaling(&ds);
        assert_eq!(params.min, vec![0.0, 7.0]);
        assert_eq!(params.max, vec![10.0, 7.0]);
        let scaled = apply_scaling(&ds, &params).unwrap();
        assert_eq!(scaled.features().column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(scaled.features().column(1).to_vec(), vec![0.0, 0.0, 0.0]);

        let test = params.transform(array![12.0, 7.0].view()).unwrap();
        assert!((test[0] - 1.4f64).abs() < 1e-12);

        let wrong = Dataset::new(array![[1.0]], vec![1]).unwrap();
        assert!(matches!(
            apply_scaling(&wrong, &params),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn single_sample_scaling() {
        let ds = Dataset::new(array![[3.0, -2.0]], vec![1]).unwrap();
        let p = fit_scaling(&ds);
        assert_eq!(p.min, p.max);
        assert_eq!(
            apply_scaling(&ds, &p).unwrap().row(0).to_vec(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn fold_examples() {
        let plan = make_folds(10, 10, 1).unwrap();
        assert!(plan.fold_sizes().iter().all(|&s| s == 1));

        let plan = make_folds(10, 3, 7).unwrap();
        let mut sizes = plan.fold_sizes();
        sizes.sort();
        assert_eq!(sizes, vec![3, 3, 4]);
        assert_eq!(plan, make_folds(10, 3, 7).unwrap());

        assert!(make_folds(5, 6, 0).is_err());
        assert!(make_folds(5, 1, 0).is_err());
    }

    #[test]
    fn stratified_folds_spread_classes() {
        let labels: Vec<i64> = (0..40).map(|i| if i < 10 { 1 } else { -1 }).collect();
        let plan = make_stratified_folds(&labels, 5, 3).unwrap();
        for f in 0..5 {
            let pos = plan
                .test_indices(f)
                .iter()
                .filter(|&&i| labels[i] == 1)
                .count();
            assert_eq!(pos, 2);
        }
        assert!(plan.fold_sizes().iter().all(|&s| s == 8));
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a: Dataset<f64> = make_synthetic_gaussians(20, 3, 2.0, 0.1, 9).unwrap();
        let b: Dataset<f64> = make_synthetic_gaussians(20, 3, 2.0, 0.1, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 40);
        assert!(a.is_binary());
        assert!(make_synthetic_gaussians::<f64>(5, 2, 1.0, 0.5, 0).is_err());

        let blobs: Dataset<f32> = make_synthetic_blobs(10, 4, 3, 5.0, 1).unwrap();
        assert_eq!(blobs.require_multiclass().unwrap(), 3);
    }

    #[test]
    fn label_noise_flips_exact_count() {
        let clean: Dataset<f64> = make_synthetic_gaussians(50, 2, 100.0, 0.0, 4).unwrap();
        let noisy: Dataset<f64> = make_synthetic_gaussians(50, 2, 100.0, 0.1, 4).unwrap();
        // with separation 100 the cluster of each row is unambiguous
        let wrong = (0..noisy.n())
            .filter(|&i| {
                let side = if noisy.row(i)[0] > 0.0 { 1 } else { -1 };
                side != noisy.labels()[i]
            })
            .count();
        assert_eq!(wrong, 10);
        let wrong_clean = (0..clean.n())
            .filter(|&i| (clean.row(i)[0] > 0.0) != (clean.labels()[i] == 1))
            .count();
        assert_eq!(wrong_clean, 0);
    }
}
