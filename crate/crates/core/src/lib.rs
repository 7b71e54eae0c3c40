//! Linear classification with a mutual-information regularizer.
//!
//! A linear classifier `sign(w·x)` is trained by gradient descent on
//!
//! ```text
//! 1/n Σ_i L(w·x_i, y_i) + α/2 ‖w‖² − β I(f, y; w)
//! ```
//!
//! where `L` is one of four margin losses and `I` is a Gaussian-kernel
//! plug-in estimate of the mutual information between the responses
//! `f_i = w·x_i` and the labels. The crate also ships the evaluation
//! protocol: per-fold feature scaling, k-fold cross validation, ROC and
//! recall-precision sweeps, and one-vs-all multiclass reduction.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision.

pub mod classifier;
pub mod data;
pub mod error;
pub mod kde;
pub mod losses;
pub mod metrics;
pub mod optimizer;
pub mod scalar;

pub use classifier::{
    fit_binary, fit_binary_with, fit_one_vs_all, fit_one_vs_all_with, load_model, predict_binary,
    predict_multiclass, response, save_model, FitOptions, LinearModel, Model, OneVsAllModel,
};
pub use data::{
    apply_scaling, fit_scaling, load_csv, make_folds, make_synthetic_blobs,
    make_synthetic_gaussians, Dataset, FoldPlan, LabelColumn, ScalingParams,
};
pub use error::{Error, Result};
pub use kde::{mutual_information, Bandwidth, MiEstimate, Responses};
pub use losses::LossKind;
pub use metrics::{
    cross_validate, cross_validate_compare, roc_curve, ComparisonReport, CvOptions, CvReport,
    RocCurve,
};
pub use optimizer::{train, Init, SigmaPolicy, Termination, TrainConfig, TrainTrace};
pub use scalar::Scalar;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type LinearModel64 = LinearModel<f64>;
pub type LinearModel32 = LinearModel<f32>;
pub type OneVsAllModel64 = OneVsAllModel<f64>;
pub type OneVsAllModel32 = OneVsAllModel<f32>;
pub type Model64 = Model<f64>;
pub type Model32 = Model<f32>;
pub type TrainConfig64 = TrainConfig<f64>;
pub type TrainConfig32 = TrainConfig<f32>;
pub type TrainTrace64 = TrainTrace<f64>;
pub type MiEstimate64 = MiEstimate<f64>;
pub type Bandwidth64 = Bandwidth<f64>;
pub type RocCurve64 = RocCurve<f64>;
pub type CvReport64 = CvReport<f64>;
pub type ComparisonReport64 = ComparisonReport<f64>;
