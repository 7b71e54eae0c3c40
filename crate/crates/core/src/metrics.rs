//! Confusion counts, rates, ROC and recall-precision sweeps, AUC, accuracy,
//! and the k-fold cross-validation harness.
//!
//! `+1` is the positive class. Ratios with a zero denominator are `None`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    fit_binary_with, fit_one_vs_all_with, label_of_response, response, FitOptions, OneVsAllModel,
};
use crate::data::{make_folds, make_stratified_folds, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::optimizer::{Termination, TrainConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension {
            expected: b,
            found: a,
        });
    }
    Ok(())
}

pub fn confusion(predicted: &[i64], actual: &[i64]) -> Result<ConfusionCounts> {
    check_lengths(predicted.len(), actual.len())?;
    let mut c = ConfusionCounts::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p == 1, a == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio<T: Scalar>(num: usize, den: usize) -> Option<T> {
    (den > 0).then(|| T::count(num) / T::count(den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Rates<T> {
    pub tpr: Option<T>,
    pub fpr: Option<T>,
    pub recall: Option<T>,
    pub precision: Option<T>,
}

pub fn rates<T: Scalar>(c: &ConfusionCounts) -> Rates<T> {
    Rates {
        tpr: ratio(c.tp, c.tp + c.fn_),
        fpr: ratio(c.fp, c.fp + c.tn),
        recall: ratio(c.tp, c.tp + c.fn_),
        precision: ratio(c.tp, c.tp + c.fp),
    }
}

/// Fraction of positions where the two label vectors agree.
pub fn accuracy<T: Scalar, L: PartialEq>(predicted: &[L], actual: &[L]) -> Result<T> {
    check_lengths(predicted.len(), actual.len())?;
    if actual.is_empty() {
        return Err(Error::NoDataRows);
    }
    let hits = predicted.iter().zip(actual).filter(|(p, a)| p == a).count();
    Ok(T::count(hits) / T::count(actual.len()))
}

/// Cumulative counts after each distinct threshold, highest response first.
/// Element 0 is the `+∞` threshold with nothing predicted positive.
struct Sweep<T> {
    thresholds: Vec<T>,
    tp: Vec<usize>,
    fp: Vec<usize>,
    n_pos: usize,
    n_neg: usize,
}

fn sweep<T: Scalar>(responses: &[T], actual: &[i64]) -> Result<Sweep<T>> {
    check_lengths(responses.len(), actual.len())?;
    if let Some(i) = responses.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: i + 1,
            column: 1,
        });
    }
    let mut order: Vec<usize> = (0..responses.len()).collect();
    order.sort_by(|&a, &b| responses[b].partial_cmp(&responses[a]).expect("finite"));

    let mut s = Sweep {
        thresholds: vec![T::infinity()],
        tp: vec![0],
        fp: vec![0],
        n_pos: 0,
        n_neg: 0,
    };
    let (mut tp, mut fp) = (0, 0);
    let mut k = 0;
    while k < order.len() {
        let t = responses[order[k]];
        while k < order.len() && responses[order[k]] == t {
            if actual[order[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        s.thresholds.push(t);
        s.tp.push(tp);
        s.fp.push(fp);
    }
    s.n_pos = tp;
    s.n_neg = fp;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RocPoint<T> {
    /// Samples with response `>= threshold` are predicted positive.
    pub threshold: T,
    pub fpr: T,
    pub tpr: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RocCurve<T> {
    pub points: Vec<RocPoint<T>>,
    pub auc: T,
}

/// ROC sweep over every distinct response. Tied responses form a single
/// diagonal step, so the trapezoidal area equals the Mann-Whitney statistic
/// with ties counted one half. The area is accumulated in integers and
/// divided once.
pub fn roc_curve<T: Scalar>(responses: &[T], actual: &[i64]) -> Result<RocCurve<T>> {
    let s = sweep(responses, actual)?;
    if s.n_pos == 0 {
        return Err(Error::EmptyClass(1));
    }
    if s.n_neg == 0 {
        return Err(Error::EmptyClass(-1));
    }
    let mut twice_area: u128 = 0;
    for k in 1..s.thresholds.len() {
        twice_area += (s.fp[k] - s.fp[k - 1]) as u128 * (s.tp[k] + s.tp[k - 1]) as u128;
    }
    let denom = 2 * s.n_pos as u128 * s.n_neg as u128;
    let auc = T::from_u128(twice_area).expect("fits") / T::from_u128(denom).expect("fits");
    let points = (0..s.thresholds.len())
        .map(|k| RocPoint {
            threshold: s.thresholds[k],
            fpr: T::count(s.fp[k]) / T::count(s.n_neg),
            tpr: T::count(s.tp[k]) / T::count(s.n_pos),
        })
        .collect();
    Ok(RocCurve { points, auc })
}

pub fn auc<T: Scalar>(responses: &[T], actual: &[i64]) -> Result<T> {
    roc_curve(responses, actual).map(|c| c.auc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PrPoint<T> {
    pub threshold: T,
    pub recall: T,
    /// `None` when nothing is predicted positive.
    pub precision: Option<T>,
}

/// Recall-precision sweep, starting from the `+∞` threshold whose precision is undefined.
pub fn pr_curve<T: Scalar>(responses: &[T], actual: &[i64]) -> Result<Vec<PrPoint<T>>> {
    let s = sweep(responses, actual)?;
    if s.n_pos == 0 {
        return Err(Error::EmptyClass(1));
    }
    Ok((0..s.thresholds.len())
        .map(|k| PrPoint {
            threshold: s.thresholds[k],
            recall: T::count(s.tp[k]) / T::count(s.n_pos),
            precision: ratio(s.tp[k], s.tp[k] + s.fp[k]),
        })
        .collect())
}

pub fn write_roc_csv<T: Scalar, W: Write>(curve: &RocCurve<T>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "threshold,fpr,tpr")?;
    for p in &curve.points {
        writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr)?;
    }
    Ok(())
}

pub fn write_pr_csv<T: Scalar, W: Write>(curve: &[PrPoint<T>], mut out: W) -> std::io::Result<()> {
    writeln!(out, "threshold,recall,precision")?;
    for p in curve {
        match p.precision {
            Some(v) => writeln!(out, "{},{},{}", p.threshold, p.recall, v)?,
            None => writeln!(out, "{},{},undefined", p.threshold, p.recall)?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Binary,
    Multiclass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub fit: FitOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 0,
            stratified: false,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FoldResult<T> {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// `None` when the held-out fold contains a single class.
    pub auc: Option<T>,
    pub accuracy: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionCounts>,
    pub sigma: T,
    /// Iterations per trained model (one per class for one-vs-all).
    pub iterations: Vec<usize>,
    pub terminations: Vec<Termination>,
    /// Held-out decision responses (winning-class response for one-vs-all).
    #[serde(skip)]
    pub responses: Vec<T>,
    #[serde(skip)]
    pub labels: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CvReport<T> {
    pub task: Task,
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub augment_bias: bool,
    pub config: TrainConfig<T>,
    pub folds: Vec<FoldResult<T>>,
    pub mean_auc: Option<T>,
    pub std_auc: Option<T>,
    pub mean_accuracy: T,
    pub std_accuracy: T,
}

/// Mean and sample standard deviation (`n - 1` denominator, 0 for one value).
pub fn mean_std<T: Scalar>(values: &[T]) -> Option<(T, T)> {
    if values.is_empty() {
        return None;
    }
    let n = T::count(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    if values.len() == 1 {
        return Some((mean, T::zero()));
    }
    let ss: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    Some((mean, (ss / (n - T::one())).sqrt()))
}

pub fn fold_plan<T: Scalar>(dataset: &Dataset<T>, opts: &CvOptions) -> Result<FoldPlan> {
    if opts.stratified {
        make_stratified_folds(dataset.labels(), opts.k, opts.seed)
    } else {
        make_folds(dataset.n(), opts.k, opts.seed)
    }
}

fn task_of<T: Scalar>(dataset: &Dataset<T>) -> Result<Task> {
    if dataset.is_binary() {
        Ok(Task::Binary)
    } else {
        dataset.require_multiclass()?;
        Ok(Task::Multiclass)
    }
}

fn check_training_union<T: Scalar>(train: &Dataset<T>, all: &[i64], fold: usize) -> Result<()> {
    let present = train.classes();
    for &c in all {
        if present.binary_search(&c).is_err() {
            return Err(Error::InvalidArgument(format!(
                "fold {fold}: training split has no samples of class {c}"
            )));
        }
    }
    Ok(())
}

fn run_fold<T: Scalar>(
    dataset: &Dataset<T>,
    plan: &FoldPlan,
    fold: usize,
    task: Task,
    config: &TrainConfig<T>,
    opts: &CvOptions,
) -> Result<FoldResult<T>> {
    let train_idx = plan.train_indices(fold);
    let test_idx = plan.test_indices(fold);
    let train = dataset.subset(&train_idx)?;
    let test = dataset.subset(&test_idx)?;
    check_training_union(&train, &dataset.classes(), fold)?;
    let actual = test.labels().to_vec();

    match task {
        Task::Binary => {
            let (model, trace) = fit_binary_with(&train, config, opts.fit)?;
            let responses: Vec<T> = (0..test.n())
                .map(|i| response(&model, test.row(i)))
                .collect::<Result<_>>()?;
            let predicted: Vec<i64> = responses.iter().map(|&f| label_of_response(f)).collect();
            let auc = if actual.contains(&1) && actual.contains(&-1) {
                Some(auc(&responses, &actual)?)
            } else {
                None
            };
            Ok(FoldResult {
                fold,
                n_train: train.n(),
                n_test: test.n(),
                auc,
                accuracy: accuracy(&predicted, &actual)?,
                confusion: Some(confusion(&predicted, &actual)?),
                sigma: model.sigma.get(),
                iterations: vec![trace.records.len()],
                terminations: vec![trace.termination],
                responses,
                labels: actual,
            })
        }
        Task::Multiclass => {
            let (model, traces): (OneVsAllModel<T>, _) =
                fit_one_vs_all_with(&train, config, opts.fit)?;
            let mut responses = Vec::with_capacity(test.n());
            let mut predicted = Vec::with_capacity(test.n());
            for i in 0..test.n() {
                let r = model.responses(test.row(i))?;
                let c = crate::classifier::argmax_lowest(&r);
                responses.push(r[c]);
                predicted.push(c as i64);
            }
            Ok(FoldResult {
                fold,
                n_train: train.n(),
                n_test: test.n(),
                auc: None,
                accuracy: accuracy(&predicted, &actual)?,
                confusion: None,
                sigma: model.models[0].sigma.get(),
                iterations: traces.iter().map(|t| t.records.len()).collect(),
                terminations: traces.iter().map(|t| t.termination).collect(),
                responses,
                labels: actual,
            })
        }
    }
}

/// k-fold cross validation. Scaling and σ are refit on every training
/// split. Binary datasets (labels `±1`) report AUC and accuracy; `0..C`
/// labelled datasets are fit one-vs-all and report accuracy.
pub fn cross_validate<T: Scalar>(
    dataset: &Dataset<T>,
    config: &TrainConfig<T>,
    opts: &CvOptions,
) -> Result<CvReport<T>> {
    let plan = fold_plan(dataset, opts)?;
    cross_validate_with_plan(dataset, config, opts, &plan)
}

pub fn cross_validate_with_plan<T: Scalar>(
    dataset: &Dataset<T>,
    config: &TrainConfig<T>,
    opts: &CvOptions,
    plan: &FoldPlan,
) -> Result<CvReport<T>> {
    config.validate()?;
    let task = task_of(dataset)?;
    let folds: Vec<FoldResult<T>> = (0..plan.k)
        .into_par_iter()
        .map(|f| run_fold(dataset, plan, f, task, config, opts))
        .collect::<Result<_>>()?;

    let aucs: Vec<T> = folds.iter().filter_map(|f| f.auc).collect();
    let accs: Vec<T> = folds.iter().map(|f| f.accuracy).collect();
    let auc_stats = mean_std(&aucs);
    let (mean_accuracy, std_accuracy) = mean_std(&accs).expect("k >= 2");
    Ok(CvReport {
        task,
        k: plan.k,
        seed: plan.seed,
        stratified: plan.stratified,
        augment_bias: opts.fit.augment_bias,
        config: config.clone(),
        folds,
        mean_auc: auc_stats.map(|s| s.0),
        std_auc: auc_stats.map(|s| s.1),
        mean_accuracy,
        std_accuracy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PairedFold<T> {
    pub fold: usize,
    pub auc_mi: Option<T>,
    pub auc_baseline: Option<T>,
    pub accuracy_mi: T,
    pub accuracy_baseline: T,
}

/// The mutual-information-regularized run next to its `β = 0` baseline on
/// the same folds ("Loss - MaxMutInf" versus "Loss").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ComparisonReport<T> {
    #[serde(rename = "loss_maxmutinf")]
    pub mi: CvReport<T>,
    #[serde(rename = "loss")]
    pub baseline: CvReport<T>,
    pub paired: Vec<PairedFold<T>>,
}

pub fn cross_validate_compare<T: Scalar>(
    dataset: &Dataset<T>,
    config: &TrainConfig<T>,
    opts: &CvOptions,
) -> Result<ComparisonReport<T>> {
    let plan = fold_plan(dataset, opts)?;
    let mi = cross_validate_with_plan(dataset, config, opts, &plan)?;
    let baseline_config = TrainConfig {
        beta: T::zero(),
        ..config.clone()
    };
    let baseline = cross_validate_with_plan(dataset, &baseline_config, opts, &plan)?;
    let paired = mi
        .folds
        .iter()
        .zip(&baseline.folds)
        .map(|(a, b)| PairedFold {
            fold: a.fold,
            auc_mi: a.auc,
            auc_baseline: b.auc,
            accuracy_mi: a.accuracy,
            accuracy_baseline: b.accuracy,
        })
        .collect();
    Ok(ComparisonReport {
        mi,
        baseline,
        paired,
    })
}

/// Pretty JSON; floats use shortest round-trip formatting.
pub fn report_json<S: Serialize>(report: &S) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_examples() {
        let actual = [1, 1, 1, -1, -1];
        assert_eq!(
            confusion(&actual, &actual).unwrap(),
            ConfusionCounts {
                tp: 3,
                fp: 0,
                fn_: 0,
                tn: 2
            }
        );
        assert_eq!(
            confusion(&[1; 5], &actual).unwrap(),
            ConfusionCounts {
                tp: 3,
                fp: 2,
                fn_: 0,
                tn: 0
            }
        );
        let inverted: Vec<i64> = actual.iter().map(|y| -y).collect();
        let c = confusion(&inverted, &actual).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        assert!(confusion(&[1], &actual).is_err());
    }

    #[test]
    fn rate_examples() {
        let r: Rates<f64> = rates(&ConfusionCounts {
            tp: 3,
            fp: 1,
            fn_: 1,
            tn: 0,
        });
        assert_eq!(r.tpr, Some(0.75));
        assert_eq!(r.recall, Some(0.75));
        assert_eq!(r.precision, Some(0.75));
        let r: Rates<f64> = rates(&ConfusionCounts {
            tp: 0,
            fp: 0,
            fn_: 2,
            tn: 2,
        });
        assert_eq!(r.precision, None);
        assert_eq!(r.fpr, Some(0.0));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy::<f64, _>(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy::<f64, _>(&[1, 2], &[3, 4]).unwrap(), 0.0);
        assert_eq!(
            accuracy::<f64, _>(&[1, 2, 3, 4], &[1, 0, 3, 0]).unwrap(),
            0.5
        );
        assert!(accuracy::<f64, _>(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn roc_examples() {
        let c = roc_curve(&[0.9, 0.8, 0.7, 0.1], &[1, 1, -1, -1]).unwrap();
        assert_eq!(c.auc, 1.0);
        assert_eq!((c.points[0].fpr, c.points[0].tpr), (0.0, 0.0));
        let last = c.points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));

        assert_eq!(auc(&[0.8, 0.3, 0.5, 0.1], &[1, 1, -1, -1]).unwrap(), 0.75);
        let flat = roc_curve(&[0.4; 6], &[1, -1, 1, -1, -1, 1]).unwrap();
        assert_eq!(flat.auc, 0.5);
        assert_eq!(flat.points.len(), 2);

        assert!(matches!(
            roc_curve(&[0.1, 0.2], &[1, 1]),
            Err(Error::EmptyClass(-1))
        ));
    }

    #[test]
    fn pr_examples() {
        let pr = pr_curve(&[0.9, 0.8, 0.7, 0.1], &[1, 1, -1, -1]).unwrap();
        assert!(pr
            .iter()
            .any(|p| p.recall == 1.0 && p.precision == Some(1.0)));
        assert_eq!(pr[0].precision, None);

        let flat = pr_curve(&[0.5; 5], &[1, -1, 1, -1, -1]).unwrap();
        assert_eq!(flat.len(), 2);
        assert_eq!(flat[1].recall, 1.0);
        assert_eq!(flat[1].precision, Some(0.4));

        let last = pr_curve(&[0.9, 0.8, 0.7, 0.1], &[-1, -1, -1, 1]).unwrap();
        let end = last.last().unwrap();
        assert_eq!((end.recall, end.precision), (1.0, Some(0.25)));

        assert!(pr_curve(&[0.1], &[-1]).is_err());
    }

    #[test]
    fn csv_export() {
        let c = roc_curve(&[0.8, 0.3, 0.5, 0.1], &[1, 1, -1, -1]).unwrap();
        let mut buf = Vec::new();
        write_roc_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("threshold,fpr,tpr\ninf,0,0\n0.8,0,0.5\n"));

        let pr = pr_curve(&[0.8, 0.3], &[1, -1]).unwrap();
        let mut buf = Vec::new();
        write_pr_csv(&pr, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("inf,0,undefined"));
    }

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std::<f64>(&[]), None);
        assert_eq!(mean_std(&[2.0]), Some((2.0, 0.0)));
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn roc_is_monotone_and_antisymmetric(
            pairs in prop::collection::vec((0u8..6, prop::bool::ANY), 2..60)
        ) {
            let responses: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 5.0).collect();
            let labels: Vec<i64> = pairs.iter().map(|p| if p.1 { 1 } else { -1 }).collect();
            prop_assume!(labels.contains(&1) && labels.contains(&-1));
            let c = roc_curve(&responses, &labels).unwrap();
            for w in c.points.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            }
            prop_assert!((0.0..=1.0).contains(&c.auc));
            let neg: Vec<f64> = responses.iter().map(|v| -v).collect();
            let flipped = auc(&neg, &labels).unwrap();
            prop_assert!((c.auc + flipped - 1.0).abs() < 1e-12);

            // joint permutation leaves the metric unchanged
            let mut idx: Vec<usize> = (0..responses.len()).collect();
            idx.reverse();
            let r2: Vec<f64> = idx.iter().map(|&i| responses[i]).collect();
            let l2: Vec<i64> = idx.iter().map(|&i| labels[i]).collect();
            prop_assert_eq!(auc(&r2, &l2).unwrap(), c.auc);
        }
    }
}
