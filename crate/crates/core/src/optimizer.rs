//! Composite objective
//!
//! ```text
//! O(w) = 1/n Σ_i L(w·x_i, y_i) + α/2 ‖w‖² − β I(f, y; w)
//! ```
//!
//! and plain fixed-step gradient descent on it.

use std::io::Write;

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kde::{mi_value_and_gradient, Bandwidth};
use crate::losses::{loss_value, margin_derivative, update_hinge_state, LossKind};
use crate::scalar::Scalar;

/// How the kernel bandwidth is chosen before training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum SigmaPolicy<T> {
    Fixed {
        sigma: T,
    },
    /// `σ = varsigma × median pairwise feature distance`.
    MedianScaled {
        varsigma: T,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum Init<T> {
    Zeros,
    /// Uniform in `[-scale, scale]` per coordinate.
    SeededRandom {
        scale: T,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainConfig<T> {
    pub loss: LossKind,
    /// When false the averaged-loss term is dropped, leaving
    /// `α/2 ‖w‖² − β I` (mutual-information-only regularization).
    pub include_loss: bool,
    pub alpha: T,
    pub beta: T,
    pub eta: T,
    pub sigma_policy: SigmaPolicy<T>,
    pub max_iters: usize,
    pub grad_tol: T,
    pub init: Init<T>,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            loss: LossKind::Hinge,
            include_loss: true,
            alpha: T::lit(DEFAULT_ALPHA),
            beta: T::lit(DEFAULT_BETA),
            eta: T::lit(DEFAULT_ETA),
            sigma_policy: SigmaPolicy::MedianScaled {
                varsigma: T::lit(DEFAULT_VARSIGMA),
            },
            max_iters: DEFAULT_MAX_ITERS,
            grad_tol: T::lit(DEFAULT_GRAD_TOL),
            init: Init::Zeros,
        }
    }
}

pub const DEFAULT_ALPHA: f64 = 5.8;
pub const DEFAULT_BETA: f64 = 44.8;
pub const DEFAULT_VARSIGMA: f64 = 0.451;
pub const DEFAULT_ETA: f64 = 1e-3;
pub const DEFAULT_MAX_ITERS: usize = 1000;
pub const DEFAULT_GRAD_TOL: f64 = 1e-6;

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.alpha >= T::zero() && self.alpha.is_finite()) {
            return bad("alpha must be finite and >= 0");
        }
        if !(self.beta >= T::zero() && self.beta.is_finite()) {
            return bad("beta must be finite and >= 0");
        }
        if !(self.eta > T::zero() && self.eta.is_finite()) {
            return bad("eta must be finite and > 0");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be >= 1");
        }
        if self.grad_tol.is_nan() || self.grad_tol < T::zero() {
            return bad("grad_tol must be >= 0");
        }
        match self.sigma_policy {
            SigmaPolicy::Fixed { sigma } if !(sigma > T::zero() && sigma.is_finite()) => {
                return bad("fixed sigma must be > 0")
            }
            SigmaPolicy::MedianScaled { varsigma }
                if !(varsigma > T::zero() && varsigma.is_finite()) =>
            {
                return bad("varsigma must be > 0")
            }
            _ => {}
        }
        if let Init::SeededRandom { scale, .. } = self.init {
            if !(scale >= T::zero() && scale.is_finite()) {
                return bad("init scale must be >= 0");
            }
        }
        Ok(())
    }
}

/// Source of the mutual-information term and its gradient.
pub trait MiTerm<T: Scalar> {
    fn value_and_gradient(
        &self,
        dataset: &Dataset<T>,
        w: ArrayView1<'_, T>,
        sigma: Bandwidth<T>,
    ) -> Result<(T, Array1<T>)>;
}

/// The kernel-density plug-in estimate from [`crate::kde`].
#[derive(Debug, Clone, Copy, Default)]
pub struct KdeMi;

impl<T: Scalar> MiTerm<T> for KdeMi {
    fn value_and_gradient(
        &self,
        dataset: &Dataset<T>,
        w: ArrayView1<'_, T>,
        sigma: Bandwidth<T>,
    ) -> Result<(T, Array1<T>)> {
        mi_value_and_gradient(dataset, w, sigma).map(|(est, g)| (est.mi, g))
    }
}

/// Objective value with its parts. `l2_term` is the raw `‖w‖²`; `mi_term`
/// is `None` when `β = 0` and the estimate was not evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ObjectiveTerms<T> {
    pub objective: T,
    pub loss_term: T,
    pub l2_term: T,
    pub mi_term: Option<T>,
}

impl<T: Scalar> ObjectiveTerms<T> {
    fn assemble(loss_term: T, l2_term: T, mi_term: Option<T>, alpha: T, beta: T) -> Self {
        let objective =
            loss_term + alpha / T::lit(2.0) * l2_term - beta * mi_term.unwrap_or_else(T::zero);
        Self {
            objective,
            loss_term,
            l2_term,
            mi_term,
        }
    }
}

fn check_binary_for<T: Scalar>(
    dataset: &Dataset<T>,
    config: &TrainConfig<T>,
    w: ArrayView1<'_, T>,
) -> Result<()> {
    dataset.require_binary()?;
    if w.len() != dataset.d() {
        return Err(Error::Dimension {
            expected: dataset.d(),
            found: w.len(),
        });
    }
    if config.beta > T::zero() {
        for c in [1, -1] {
            if !dataset.labels().contains(&c) {
                return Err(Error::EmptyClass(c));
            }
        }
    }
    Ok(())
}

fn evaluate<T: Scalar, M: MiTerm<T>>(
    dataset: &Dataset<T>,
    w: ArrayView1<'_, T>,
    config: &TrainConfig<T>,
    sigma: Bandwidth<T>,
    mi: &M,
    with_gradient: bool,
) -> Result<(ObjectiveTerms<T>, Option<Array1<T>>)> {
    let x = dataset.features();
    let n = T::count(dataset.n());
    let mut grad = with_gradient.then(|| w.mapv(|v| config.alpha * v));

    let mut loss_term = T::zero();
    if config.include_loss {
        let f = x.dot(&w);
        let tau = match (config.loss, with_gradient) {
            (LossKind::Hinge, true) => Some(update_hinge_state(dataset, w)?),
            _ => None,
        };
        let mut coef = Array1::zeros(dataset.n());
        for (i, (&fi, &y)) in f.iter().zip(dataset.labels()).enumerate() {
            loss_term += loss_value(config.loss, fi, y);
            if with_gradient {
                let ys = T::lit(y as f64);
                let t = tau.as_ref().map(|s| s.get(i));
                coef[i] = margin_derivative(config.loss, ys * fi, t)? * ys / n;
            }
        }
        loss_term /= n;
        if let Some(g) = grad.as_mut() {
            *g += &x.t().dot(&coef);
        }
    }

    let l2_term = w.dot(&w);
    let mi_term = if config.beta > T::zero() {
        let (value, mi_grad) = mi.value_and_gradient(dataset, w, sigma)?;
        if let Some(g) = grad.as_mut() {
            g.scaled_add(-config.beta, &mi_grad);
        }
        Some(value)
    } else {
        None
    };
    Ok((
        ObjectiveTerms::assemble(loss_term, l2_term, mi_term, config.alpha, config.beta),
        grad,
    ))
}

pub fn objective<T: Scalar>(
    dataset: &Dataset<T>,
    w: ArrayView1<'_, T>,
    config: &TrainConfig<T>,
    sigma: Bandwidth<T>,
) -> Result<ObjectiveTerms<T>> {
    check_binary_for(dataset, config, w)?;
    evaluate(dataset, w, config, sigma, &KdeMi, false).map(|(terms, _)| terms)
}

/// `1/n Σ ∇L_i + α w − β ∇I`, with the hinge active set recomputed at `w`.
pub fn total_gradient<T: Scalar>(
    dataset: &Dataset<T>,
    w: ArrayView1<'_, T>,
    config: &TrainConfig<T>,
    sigma: Bandwidth<T>,
) -> Result<Array1<T>> {
    check_binary_for(dataset, config, w)?;
    evaluate(dataset, w, config, sigma, &KdeMi, true).map(|(_, g)| g.expect("gradient requested"))
}

/// Median of all `n(n-1)/2` pairwise Euclidean distances; the mean of the
/// two middle values when the count is even.
pub fn median_pairwise_distance<T: Scalar>(dataset: &Dataset<T>) -> Result<T> {
    let n = dataset.n();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "median distance needs at least two samples".into(),
        ));
    }
    let x = dataset.features();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let xi = x.row(i);
        for j in (i + 1)..n {
            let sq: T = xi
                .iter()
                .zip(x.row(j))
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            dists.push(sq.sqrt());
        }
    }
    let m = dists.len();
    let cmp = |a: &T, b: &T| a.partial_cmp(b).expect("finite distances");
    let (_, &mut upper, _) = dists.select_nth_unstable_by(m / 2, cmp);
    if m % 2 == 1 {
        Ok(upper)
    } else {
        let lower = dists[..m / 2]
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max);
        Ok((lower + upper) / T::lit(2.0))
    }
}

pub fn resolve_sigma<T: Scalar>(
    dataset: &Dataset<T>,
    policy: SigmaPolicy<T>,
) -> Result<Bandwidth<T>> {
    match policy {
        SigmaPolicy::Fixed { sigma } => Bandwidth::new(sigma),
        SigmaPolicy::MedianScaled { varsigma } => {
            if varsigma.is_nan() || varsigma <= T::zero() {
                return Err(Error::InvalidArgument("varsigma must be > 0".into()));
            }
            let dist = median_pairwise_distance(dataset)?;
            if dist <= T::zero() {
                return Err(Error::DegenerateBandwidth);
            }
            Bandwidth::new(varsigma * dist)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    MaxIters,
}

/// State at the start of one iteration, before the step is taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub objective: T,
    pub loss_term: T,
    pub l2_term: T,
    pub mi_term: Option<T>,
    pub grad_norm: T,
    pub w: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrainTrace<T> {
    pub records: Vec<IterationRecord<T>>,
    pub w: Vec<T>,
    pub termination: Termination,
    pub sigma: T,
}

impl<T: Scalar> TrainTrace<T> {
    /// One JSON object per iteration, newline separated.
    pub fn write_json_lines<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for rec in &self.records {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn initial_weights<T: Scalar>(d: usize, init: Init<T>) -> Array1<T> {
    match init {
        Init::Zeros => Array1::zeros(d),
        Init::SeededRandom { scale, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = scale.to_f64().expect("finite scale");
            (0..d)
                .map(|_| T::lit(rng.random_range(-1.0..=1.0) * s))
                .collect()
        }
    }
}

/// Resolves σ from the (already scaled) training features and runs gradient descent.
pub fn train<T: Scalar>(
    dataset: &Dataset<T>,
    config: &TrainConfig<T>,
) -> Result<(Array1<T>, TrainTrace<T>)> {
    config.validate()?;
    let sigma = resolve_sigma(dataset, config.sigma_policy)?;
    train_with(dataset, config, sigma, &KdeMi)
}

/// Gradient descent `w ← w − η ∇O(w)` with a fixed bandwidth and a
/// pluggable mutual-information term.
pub fn train_with<T: Scalar, M: MiTerm<T>>(
    dataset: &Dataset<T>,
    config: &TrainConfig<T>,
    sigma: Bandwidth<T>,
    mi: &M,
) -> Result<(Array1<T>, TrainTrace<T>)> {
    config.validate()?;
    let mut w = initial_weights(dataset.d(), config.init);
    check_binary_for(dataset, config, w.view())?;

    let mut records = Vec::new();
    let mut termination = Termination::MaxIters;
    for iteration in 1..=config.max_iters {
        let (terms, grad) = evaluate(dataset, w.view(), config, sigma, mi, true)?;
        let grad = grad.expect("gradient requested");
        let diverged = |term| Error::Diverged { iteration, term };
        if !terms.loss_term.is_finite() {
            return Err(diverged("loss term"));
        }
        if terms.mi_term.is_some_and(|v| !v.is_finite()) {
            return Err(diverged("mutual information term"));
        }
        if !terms.objective.is_finite() {
            return Err(diverged("objective"));
        }
        let grad_norm = grad.dot(&grad).sqrt();
        if !grad_norm.is_finite() {
            return Err(diverged("gradient"));
        }
        records.push(IterationRecord {
            iteration,
            objective: terms.objective,
            loss_term: terms.loss_term,
            l2_term: terms.l2_term,
            mi_term: terms.mi_term,
            grad_norm,
            w: w.to_vec(),
        });
        if grad_norm <= config.grad_tol {
            termination = Termination::GradTol;
            break;
        }
        w.scaled_add(-config.eta, &grad);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(diverged("iterate"));
        }
    }
    let trace = TrainTrace {
        records,
        w: w.to_vec(),
        termination,
        sigma: sigma.get(),
    };
    Ok((w, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{apply_scaling, fit_scaling, make_synthetic_gaussians};
    use ndarray::array;

    fn benchmark() -> Dataset<f64> {
        let raw = make_synthetic_gaussians(15, 3, 2.0, 0.1, 5).unwrap();
        apply_scaling(&raw, &fit_scaling(&raw)).unwrap()
    }

    #[test]
    fn defaults_match_reported_averages() {
        let c = TrainConfig::<f64>::default();
        assert_eq!((c.alpha, c.beta), (5.8, 44.8));
        assert_eq!(
            c.sigma_policy,
            SigmaPolicy::MedianScaled { varsigma: 0.451 }
        );
        assert_eq!((c.max_iters, c.grad_tol), (1000, 1e-6));
        assert!(c.validate().is_ok());
    }

    #[test]
    fn hinge_objective_at_zero_is_one() {
        let ds = benchmark();
        let cfg = TrainConfig {
            alpha: 0.0,
            beta: 0.0,
            ..TrainConfig::default()
        };
        let w = Array1::zeros(ds.d());
        let sigma = Bandwidth::new(1.0).unwrap();
        let t = objective(&ds, w.view(), &cfg, sigma).unwrap();
        assert_eq!(t.objective, 1.0);
        let cfg = TrainConfig { alpha: 3.0, ..cfg };
        assert_eq!(objective(&ds, w.view(), &cfg, sigma).unwrap().l2_term, 0.0);
    }

    #[test]
    fn gradient_at_zero_has_no_mi_part() {
        let ds = benchmark();
        let sigma = Bandwidth::new(0.7).unwrap();
        let w = Array1::zeros(ds.d());
        let with_mi = TrainConfig {
            loss: LossKind::Logistic,
            beta: 10.0,
            ..TrainConfig::default()
        };
        let without = TrainConfig {
            beta: 0.0,
            ..with_mi.clone()
        };
        assert_eq!(
            total_gradient(&ds, w.view(), &with_mi, sigma).unwrap(),
            total_gradient(&ds, w.view(), &without, sigma).unwrap()
        );
    }

    #[test]
    fn sigma_resolution() {
        let two = Dataset::new(array![[0.0, 0.0], [2.0, 0.0]], vec![1, -1]).unwrap();
        let s = resolve_sigma(&two, SigmaPolicy::MedianScaled { varsigma: 0.5 }).unwrap();
        assert_eq!(s.get(), 1.0);

        let three = Dataset::new(array![[0.0], [1.0], [2.0]], vec![1, -1, 1]).unwrap();
        assert_eq!(median_pairwise_distance(&three).unwrap(), 1.0);

        let four = Dataset::new(array![[0.0], [1.0], [3.0], [6.0]], vec![1, -1, 1, -1]).unwrap();
        // distances {1, 3, 6, 2, 5, 3}
        assert_eq!(median_pairwise_distance(&four).unwrap(), 3.0);

        let same = Dataset::new(array![[1.0], [1.0], [1.0]], vec![1, -1, 1]).unwrap();
        assert!(matches!(
            resolve_sigma(&same, SigmaPolicy::MedianScaled { varsigma: 1.0 }),
            Err(Error::DegenerateBandwidth)
        ));
        assert!(resolve_sigma(&same, SigmaPolicy::Fixed { sigma: 0.0 }).is_err());
        assert_eq!(
            resolve_sigma(&same, SigmaPolicy::Fixed { sigma: 0.3 })
                .unwrap()
                .get(),
            0.3
        );
    }

    #[test]
    fn huge_grad_tol_stops_after_first_iteration() {
        let ds = benchmark();
        let cfg = TrainConfig {
            grad_tol: 1e9,
            ..TrainConfig::default()
        };
        let (w, trace) = train(&ds, &cfg).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.termination, Termination::GradTol);
        assert!(w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn training_is_deterministic_and_trace_consistent() {
        let ds = benchmark();
        let cfg = TrainConfig {
            loss: LossKind::Logistic,
            max_iters: 40,
            init: Init::SeededRandom {
                scale: 0.1,
                seed: 3,
            },
            ..TrainConfig::default()
        };
        let (w1, t1) = train(&ds, &cfg).unwrap();
        let (w2, t2) = train(&ds, &cfg).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(t1, t2);
        assert!(t1.records.len() <= cfg.max_iters);
        let sigma = Bandwidth::new(t1.sigma).unwrap();
        for rec in &t1.records {
            let parts =
                rec.loss_term + cfg.alpha / 2.0 * rec.l2_term - cfg.beta * rec.mi_term.unwrap();
            assert!((parts - rec.objective).abs() <= 1e-12);
            let again = objective(&ds, Array1::from(rec.w.clone()).view(), &cfg, sigma).unwrap();
            assert_eq!(again.objective, rec.objective);
        }
    }

    #[test]
    fn beta_zero_ignores_the_mi_term() {
        struct Poisoned;
        impl MiTerm<f64> for Poisoned {
            fn value_and_gradient(
                &self,
                _: &Dataset<f64>,
                w: ArrayView1<'_, f64>,
                _: Bandwidth<f64>,
            ) -> Result<(f64, Array1<f64>)> {
                Ok((0.0, Array1::zeros(w.len())))
            }
        }
        let ds = benchmark();
        let cfg = TrainConfig {
            beta: 0.0,
            max_iters: 50,
            ..TrainConfig::default()
        };
        let sigma = resolve_sigma(&ds, cfg.sigma_policy).unwrap();
        let a = train_with(&ds, &cfg, sigma, &KdeMi).unwrap();
        let b = train_with(&ds, &cfg, sigma, &Poisoned).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported() {
        let ds = benchmark();
        let cfg = TrainConfig {
            loss: LossKind::Exponential,
            eta: 1e6,
            beta: 0.0,
            max_iters: 100,
            ..TrainConfig::default()
        };
        match train(&ds, &cfg) {
            Err(Error::Diverged { iteration, .. }) => assert!(iteration >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_configs_and_data() {
        let ds = benchmark();
        let bad = TrainConfig::<f64> {
            eta: 0.0,
            ..TrainConfig::default()
        };
        assert!(train(&ds, &bad).is_err());
        let single = ds.with_labels(vec![1; ds.n()]).unwrap();
        assert!(matches!(
            train(&single, &TrainConfig::default()),
            Err(Error::EmptyClass(-1))
        ));
    }
}
