//! Margin-based classification losses and their gradients.
//!
//! All losses are functions of the margin `m = y·f`; gradients are returned
//! as `dL/dm · y · x`.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Hinge,
    Squared,
    Logistic,
    Exponential,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Hinge,
        LossKind::Squared,
        LossKind::Logistic,
        LossKind::Exponential,
    ];

    pub fn is_smooth(self) -> bool {
        !matches!(self, LossKind::Hinge)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Hinge => "hinge",
            LossKind::Squared => "squared",
            LossKind::Logistic => "logistic",
            LossKind::Exponential => "exponential",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown loss {s:?}")))
    }
}

static EXP_CAP_WARNED: AtomicBool = AtomicBool::new(false);

/// `exp(z)` with the argument saturated at [`Scalar::exp_cap`].
fn capped_exp<T: Scalar>(z: T) -> T {
    let cap = T::exp_cap();
    if z > cap {
        if !EXP_CAP_WARNED.swap(true, Ordering::Relaxed) {
            log::warn!("exponential loss argument {z} saturated at {cap}");
        }
        cap.exp()
    } else {
        z.exp()
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `exp(z) / (1 + exp(z))` without overflow.
fn logistic_sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

#[inline]
fn sign<T: Scalar>(y: i64) -> T {
    if y >= 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Loss of response `f` against label `y ∈ {+1, -1}`.
pub fn loss_value<T: Scalar>(kind: LossKind, f: T, y: i64) -> T {
    let m = sign::<T>(y) * f;
    match kind {
        LossKind::Hinge => (T::one() - m).max(T::zero()),
        LossKind::Squared => {
            let r = T::one() - m;
            r * r
        }
        LossKind::Logistic => softplus(-m),
        LossKind::Exponential => capped_exp(-m),
    }
}

/// `dL/dm` at margin `m`. For the hinge loss the active-set indicator `tau`
/// is used instead of the margin.
pub fn margin_derivative<T: Scalar>(kind: LossKind, margin: T, tau: Option<bool>) -> Result<T> {
    Ok(match kind {
        LossKind::Hinge => {
            let tau = tau.ok_or_else(|| {
                Error::InvalidArgument("hinge gradient needs a hinge state".into())
            })?;
            if tau {
                -T::one()
            } else {
                T::zero()
            }
        }
        LossKind::Squared => -T::lit(2.0) * (T::one() - margin),
        LossKind::Logistic => -logistic_sigmoid(-margin),
        LossKind::Exponential => -capped_exp(-margin),
    })
}

/// Gradient of `L(w·x, y)` with respect to `w`.
pub fn loss_gradient<T: Scalar>(
    kind: LossKind,
    x: ArrayView1<'_, T>,
    y: i64,
    w: ArrayView1<'_, T>,
    tau: Option<bool>,
) -> Result<Array1<T>> {
    if x.len() != w.len() {
        return Err(Error::Dimension {
            expected: w.len(),
            found: x.len(),
        });
    }
    let ys = sign::<T>(y);
    let margin = ys * x.dot(&w);
    let c = margin_derivative(kind, margin, tau)?;
    Ok(x.mapv(|v| c * ys * v))
}

/// Hinge active set: `tau_i = 1` iff `y_i (w·x_i) <= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HingeState {
    tau: Vec<bool>,
}

impl HingeState {
    pub fn tau(&self) -> &[bool] {
        &self.tau
    }

    pub fn get(&self, i: usize) -> bool {
        self.tau[i]
    }
}

pub fn update_hinge_state<T: Scalar>(
    dataset: &Dataset<T>,
    w: ArrayView1<'_, T>,
) -> Result<HingeState> {
    if dataset.d() != w.len() {
        return Err(Error::Dimension {
            expected: dataset.d(),
            found: w.len(),
        });
    }
    let f = dataset.features().dot(&w);
    let tau = f
        .iter()
        .zip(dataset.labels())
        .map(|(&fi, &y)| sign::<T>(y) * fi <= T::one())
        .collect();
    Ok(HingeState { tau })
}
