//! Binary linear classifier `sign(w·x)`, one-vs-all multiclass reduction,
//! and JSON model persistence.

use std::fs;
use std::path::Path;

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{apply_scaling, fit_scaling, Dataset, ScalingParams};
use crate::error::{Error, Result};
use crate::kde::Bandwidth;
use crate::optimizer::{resolve_sigma, train_with, KdeMi, TrainConfig, TrainTrace};
use crate::scalar::Scalar;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Options that shape the model rather than the optimization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Append a constant-1 feature after scaling, giving the model an intercept.
    pub augment_bias: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T: Scalar> {
    pub w: Array1<T>,
    pub scaling: ScalingParams<T>,
    pub bias: bool,
    pub config: TrainConfig<T>,
    pub sigma: Bandwidth<T>,
}

impl<T: Scalar> LinearModel<T> {
    /// Raw (unscaled) input dimension.
    pub fn d(&self) -> usize {
        self.scaling.d()
    }

    fn prepare(&self, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
        let scaled = self.scaling.transform(x)?;
        Ok(if self.bias {
            let mut v = scaled.to_vec();
            v.push(T::one());
            Array1::from(v)
        } else {
            scaled
        })
    }
}

/// `w · scale(x)`.
pub fn response<T: Scalar>(model: &LinearModel<T>, x: ArrayView1<'_, T>) -> Result<T> {
    Ok(model.w.dot(&model.prepare(x)?))
}

/// Sign of the response, with a zero response mapped to `+1`.
pub fn predict_binary<T: Scalar>(model: &LinearModel<T>, x: ArrayView1<'_, T>) -> Result<i64> {
    Ok(label_of_response(response(model, x)?))
}

pub fn label_of_response<T: Scalar>(f: T) -> i64 {
    if f >= T::zero() {
        1
    } else {
        -1
    }
}

fn require_both_classes<T: Scalar>(train: &Dataset<T>) -> Result<()> {
    train.require_binary()?;
    for c in [1, -1] {
        if !train.labels().contains(&c) {
            return Err(Error::EmptyClass(c));
        }
    }
    Ok(())
}

fn prepare_training<T: Scalar>(
    train: &Dataset<T>,
    scaling: &ScalingParams<T>,
    opts: FitOptions,
) -> Result<Dataset<T>> {
    let scaled = apply_scaling(train, scaling)?;
    Ok(if opts.augment_bias {
        scaled.with_bias_column()
    } else {
        scaled
    })
}

fn resolve_sigma_for<T: Scalar>(
    train: &Dataset<T>,
    scaling: &ScalingParams<T>,
    config: &TrainConfig<T>,
) -> Result<Bandwidth<T>> {
    // distances are taken between scaled samples, before any bias column
    resolve_sigma(&apply_scaling(train, scaling)?, config.sigma_policy)
}

pub fn fit_binary<T: Scalar>(
    train: &Dataset<T>,
    config: &TrainConfig<T>,
) -> Result<LinearModel<T>> {
    fit_binary_with(train, config, FitOptions::default()).map(|(m, _)| m)
}

/// Fits scaling on `train`, resolves σ, and runs gradient descent.
pub fn fit_binary_with<T: Scalar>(
    train: &Dataset<T>,
    config: &TrainConfig<T>,
    opts: FitOptions,
) -> Result<(LinearModel<T>, TrainTrace<T>)> {
    config.validate()?;
    require_both_classes(train)?;
    let scaling = fit_scaling(train);
    let sigma = resolve_sigma_for(train, &scaling, config)?;
    let prepared = prepare_training(train, &scaling, opts)?;
    let (w, trace) = train_with(&prepared, config, sigma, &KdeMi)?;
    let model = LinearModel {
        w,
        scaling,
        bias: opts.augment_bias,
        config: config.clone(),
        sigma,
    };
    Ok((model, trace))
}

/// One binary model per class, sharing one scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct OneVsAllModel<T: Scalar> {
    pub models: Vec<LinearModel<T>>,
}

impl<T: Scalar> OneVsAllModel<T> {
    pub fn n_classes(&self) -> usize {
        self.models.len()
    }

    pub fn d(&self) -> usize {
        self.models[0].d()
    }

    /// Per-class responses; scaling is applied once.
    pub fn responses(&self, x: ArrayView1<'_, T>) -> Result<Vec<T>> {
        let prepared = self.models[0].prepare(x)?;
        Ok(self.models.iter().map(|m| m.w.dot(&prepared)).collect())
    }
}

pub fn fit_one_vs_all<T: Scalar>(
    train: &Dataset<T>,
    config: &TrainConfig<T>,
) -> Result<OneVsAllModel<T>> {
    fit_one_vs_all_with(train, config, FitOptions::default()).map(|(m, _)| m)
}

/// Trains class `c` against the rest for every `c in 0..C`. Labels must be
/// `0..C` with every class present.
pub fn fit_one_vs_all_with<T: Scalar>(
    train: &Dataset<T>,
    config: &TrainConfig<T>,
    opts: FitOptions,
) -> Result<(OneVsAllModel<T>, Vec<TrainTrace<T>>)> {
    config.validate()?;
    let n_classes = train.require_multiclass()?;
    let scaling = fit_scaling(train);
    let sigma = resolve_sigma_for(train, &scaling, config)?;
    let prepared = prepare_training(train, &scaling, opts)?;

    let fitted: Vec<(LinearModel<T>, TrainTrace<T>)> = (0..n_classes)
        .into_par_iter()
        .map(|c| {
            let labels = train
                .labels()
                .iter()
                .map(|&y| if y == c as i64 { 1 } else { -1 })
                .collect();
            let relabelled = prepared.with_labels(labels)?;
            let (w, trace) = train_with(&relabelled, config, sigma, &KdeMi)?;
            let model = LinearModel {
                w,
                scaling: scaling.clone(),
                bias: opts.augment_bias,
                config: config.clone(),
                sigma,
            };
            Ok((model, trace))
        })
        .collect::<Result<_>>()?;
    let (models, traces) = fitted.into_iter().unzip();
    Ok((OneVsAllModel { models }, traces))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_lowest<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict_multiclass<T: Scalar>(
    model: &OneVsAllModel<T>,
    x: ArrayView1<'_, T>,
) -> Result<usize> {
    Ok(argmax_lowest(&model.responses(x)?))
}

/// Either kind of trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model<T: Scalar> {
    Binary(LinearModel<T>),
    OneVsAll(OneVsAllModel<T>),
}

impl<T: Scalar> Model<T> {
    pub fn d(&self) -> usize {
        match self {
            Model::Binary(m) => m.d(),
            Model::OneVsAll(m) => m.d(),
        }
    }

    pub fn sigma(&self) -> Bandwidth<T> {
        match self {
            Model::Binary(m) => m.sigma,
            Model::OneVsAll(m) => m.models[0].sigma,
        }
    }

    /// Decision response and predicted label. For one-vs-all models the
    /// response is the winning class's response and the label its index.
    pub fn predict(&self, x: ArrayView1<'_, T>) -> Result<(T, i64)> {
        match self {
            Model::Binary(m) => {
                let f = response(m, x)?;
                Ok((f, label_of_response(f)))
            }
            Model::OneVsAll(m) => {
                let r = m.responses(x)?;
                let c = argmax_lowest(&r);
                Ok((r[c], c as i64))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelKind {
    Binary,
    Ova,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar", deny_unknown_fields)]
struct ModelFile<T: Scalar> {
    version: u32,
    kind: ModelKind,
    d: usize,
    bias: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    classes: Option<Vec<Vec<T>>>,
    scaling: ScalingParams<T>,
    sigma: T,
    config: TrainConfig<T>,
}

impl<T: Scalar> ModelFile<T> {
    fn from_model(model: &Model<T>) -> Self {
        let (head, w, classes, kind) = match model {
            Model::Binary(m) => (m, Some(m.w.to_vec()), None, ModelKind::Binary),
            Model::OneVsAll(m) => (
                &m.models[0],
                None,
                Some(m.models.iter().map(|s| s.w.to_vec()).collect()),
                ModelKind::Ova,
            ),
        };
        Self {
            version: MODEL_FORMAT_VERSION,
            kind,
            d: head.d(),
            bias: head.bias,
            w,
            classes,
            scaling: head.scaling.clone(),
            sigma: head.sigma.get(),
            config: head.config.clone(),
        }
    }

    fn into_model(self) -> Result<Model<T>> {
        let malformed = |m: &str| Error::MalformedModel(m.to_string());
        if self.scaling.min.len() != self.d || self.scaling.max.len() != self.d {
            return Err(malformed("scaling length does not match d"));
        }
        let width = self.d + usize::from(self.bias);
        let sigma = Bandwidth::new(self.sigma).map_err(|_| malformed("sigma must be positive"))?;
        let build = |w: Vec<T>| -> Result<LinearModel<T>> {
            if w.len() != width {
                return Err(malformed("weight length does not match d"));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(malformed("non-finite weight"));
            }
            Ok(LinearModel {
                w: Array1::from(w),
                scaling: self.scaling.clone(),
                bias: self.bias,
                config: self.config.clone(),
                sigma,
            })
        };
        match self.kind {
            ModelKind::Binary => {
                let w = self
                    .w
                    .clone()
                    .ok_or_else(|| malformed("binary model without w"))?;
                Ok(Model::Binary(build(w)?))
            }
            ModelKind::Ova => {
                let classes = self
                    .classes
                    .clone()
                    .ok_or_else(|| malformed("ova model without classes"))?;
                if classes.len() < 2 {
                    return Err(malformed("ova model needs at least two classes"));
                }
                let models = classes.into_iter().map(build).collect::<Result<_>>()?;
                Ok(Model::OneVsAll(OneVsAllModel { models }))
            }
        }
    }
}

pub fn model_to_json<T: Scalar>(model: &Model<T>) -> String {
    serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model serializes")
}

pub fn model_from_json<T: Scalar>(text: &str) -> Result<Model<T>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::MalformedModel(e.to_string()))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::MalformedModel("missing version".into()))?;
    if version != MODEL_FORMAT_VERSION as u64 {
        return Err(Error::Version {
            expected: MODEL_FORMAT_VERSION,
            found: version as u32,
        });
    }
    let file: ModelFile<T> =
        serde_json::from_value(value).map_err(|e| Error::MalformedModel(e.to_string()))?;
    file.into_model()
}

pub fn save_model<T: Scalar>(model: &Model<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(model)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<Model<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_json(&text)
}
