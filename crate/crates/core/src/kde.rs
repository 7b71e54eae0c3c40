//! Gaussian-kernel density estimates over classification responses, the
//! plug-in entropies built from them, and the mutual information between
//! responses and labels together with its gradient in the weight vector.
//!
//! The estimators deliberately use the literal plug-in forms
//!
//! ```text
//! K(z; σ)   = exp(-z² / 2σ²)                      (no 1/√(2π)σ factor)
//! p(f_i)    = 1/n   Σ_j         K(f_i - f_j; σ)
//! p(f_i|c)  = 1/n_c Σ_{j: y_j=c} K(f_i - f_j; σ)
//! H(f)      = -Σ_i p(f_i) log p(f_i)               (no 1/n weight)
//! H(f|y)    = -Σ_c n_c/n Σ_{i: y_i=c} p(f_i|c) log p(f_i|c)
//! I(f, y)   = H(f) - H(f|y)
//! ```
//!
//! These differ from the textbook resubstitution estimators, but the
//! gradient below is the exact derivative of exactly these forms. Because
//! the self term `K(0) = 1` is always included, every density lies in
//! `[1/n, 1]`, so the logarithms are always defined and every entropy term
//! is nonnegative. Logarithms are natural (nats).

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Kernel width in response units; always strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth<T: Scalar>(T);

impl<T: Scalar> Bandwidth<T> {
    pub fn new(sigma: T) -> Result<Self> {
        if sigma > T::zero() && sigma.is_finite() {
            Ok(Self(sigma))
        } else {
            Err(Error::InvalidArgument(format!(
                "bandwidth must be positive and finite, got {sigma}"
            )))
        }
    }

    pub fn get(self) -> T {
        self.0
    }
}

impl<T: Scalar> Serialize for Bandwidth<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Bandwidth<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Bandwidth::new(T::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Responses `f_i` aligned with their labels.
#[derive(Debug, Clone, Copy)]
pub struct Responses<'a, T> {
    values: &'a [T],
    labels: &'a [i64],
}

impl<'a, T: Scalar> Responses<'a, T> {
    pub fn new(values: &'a [T], labels: &'a [i64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NoDataRows);
        }
        if values.len() != labels.len() {
            return Err(Error::Dimension {
                expected: values.len(),
                found: labels.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i + 1,
                column: 1,
            });
        }
        Ok(Self { values, labels })
    }

    pub fn values(&self) -> &'a [T] {
        self.values
    }

    pub fn labels(&self) -> &'a [i64] {
        self.labels
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Plug-in entropies and their difference, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MiEstimate<T> {
    pub h_f: T,
    pub h_f_given_y: T,
    pub mi: T,
}

impl<T: Scalar> MiEstimate<T> {
    fn from_parts(h_f: T, h_f_given_y: T) -> Self {
        Self {
            h_f,
            h_f_given_y,
            mi: h_f - h_f_given_y,
        }
    }
}

/// Unnormalized Gaussian kernel `exp(-z² / 2σ²)`.
#[inline]
pub fn gaussian_kernel<T: Scalar>(z: T, sigma: Bandwidth<T>) -> T {
    let s = sigma.get();
    (-(z * z) / (T::lit(2.0) * s * s)).exp()
}

/// Dense class ids `0..C` for arbitrary integer labels, plus member counts.
struct ClassIndex {
    ids: Vec<usize>,
    sizes: Vec<usize>,
}

impl ClassIndex {
    fn new(labels: &[i64]) -> Self {
        let mut distinct: Vec<i64> = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let ids: Vec<usize> = labels
            .iter()
            .map(|y| distinct.binary_search(y).expect("label present"))
            .collect();
        let mut sizes = vec![0; distinct.len()];
        for &c in &ids {
            sizes[c] += 1;
        }
        Self { ids, sizes }
    }
}

pub fn density_at<T: Scalar>(i: usize, responses: &Responses<'_, T>, sigma: Bandwidth<T>) -> T {
    let f = responses.values;
    let fi = f[i];
    let sum: T = f.iter().map(|&fj| gaussian_kernel(fi - fj, sigma)).sum();
    sum / T::count(f.len())
}

/// KDE of the responses of class `c`, evaluated at `f_i`.
pub fn conditional_density_at<T: Scalar>(
    i: usize,
    c: i64,
    responses: &Responses<'_, T>,
    sigma: Bandwidth<T>,
) -> Result<T> {
    let fi = responses.values[i];
    let mut sum = T::zero();
    let mut n_c = 0usize;
    for (&fj, &yj) in responses.values.iter().zip(responses.labels) {
        if yj == c {
            sum += gaussian_kernel(fi - fj, sigma);
            n_c += 1;
        }
    }
    if n_c == 0 {
        return Err(Error::EmptyClass(c));
    }
    Ok(sum / T::count(n_c))
}

/// Marginal and class-conditional densities at every sample, from one
/// symmetric pass over the pairs.
struct Densities<T> {
    marginal: Vec<T>,
    conditional: Vec<T>,
}

fn densities<T: Scalar>(f: &[T], classes: &ClassIndex, sigma: Bandwidth<T>) -> Densities<T> {
    let n = f.len();
    let mut marginal = vec![T::one(); n];
    let mut conditional = vec![T::one(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let k = gaussian_kernel(f[i] - f[j], sigma);
            marginal[i] += k;
            marginal[j] += k;
            if classes.ids[i] == classes.ids[j] {
                conditional[i] += k;
                conditional[j] += k;
            }
        }
    }
    let n_t = T::count(n);
    for p in &mut marginal {
        *p /= n_t;
    }
    for (q, &c) in conditional.iter_mut().zip(&classes.ids) {
        *q /= T::count(classes.sizes[c]);
    }
    debug_assert!(marginal
        .iter()
        .all(|&p| p >= T::one() / (T::lit(2.0) * n_t)));
    Densities {
        marginal,
        conditional,
    }
}

#[inline]
fn neg_p_log_p<T: Scalar>(p: T) -> T {
    -p * p.ln()
}

fn entropies<T: Scalar>(d: &Densities<T>, classes: &ClassIndex) -> (T, T) {
    let n = T::count(d.marginal.len());
    let h_f: T = d.marginal.iter().map(|&p| neg_p_log_p(p)).sum();
    let mut per_class = vec![T::zero(); classes.sizes.len()];
    for (&q, &c) in d.conditional.iter().zip(&classes.ids) {
        per_class[c] += neg_p_log_p(q);
    }
    let h_f_given_y = per_class
        .iter()
        .zip(&classes.sizes)
        .map(|(&h, &n_c)| T::count(n_c) / n * h)
        .sum();
    (h_f, h_f_given_y)
}

/// `H(f) = -Σ_i p(f_i) log p(f_i)`.
pub fn entropy_f<T: Scalar>(responses: &Responses<'_, T>, sigma: Bandwidth<T>) -> T {
    let classes = ClassIndex::new(responses.labels);
    entropies(&densities(responses.values, &classes, sigma), &classes).0
}

/// `H(f|y) = -Σ_c (n_c/n) Σ_{i: y_i=c} p(f_i|c) log p(f_i|c)`, over the
/// classes that occur in the labels.
pub fn conditional_entropy_f<T: Scalar>(responses: &Responses<'_, T>, sigma: Bandwidth<T>) -> T {
    let classes = ClassIndex::new(responses.labels);
    entropies(&densities(responses.values, &classes, sigma), &classes).1
}

pub fn mutual_information<T: Scalar>(
    responses: &Responses<'_, T>,
    sigma: Bandwidth<T>,
) -> MiEstimate<T> {
    let classes = ClassIndex::new(responses.labels);
    let (h_f, h_f_given_y) = entropies(&densities(responses.values, &classes, sigma), &classes);
    MiEstimate::from_parts(h_f, h_f_given_y)
}

/// Responses `f = X w`.
pub fn responses_of<T: Scalar>(x: ArrayView2<'_, T>, w: ArrayView1<'_, T>) -> Result<Array1<T>> {
    if x.ncols() != w.len() {
        return Err(Error::Dimension {
            expected: x.ncols(),
            found: w.len(),
        });
    }
    Ok(x.dot(&w))
}

fn grad_density_over<T: Scalar>(
    i: usize,
    x: ArrayView2<'_, T>,
    f: &[T],
    members: impl Iterator<Item = usize>,
    sigma: Bandwidth<T>,
) -> Array1<T> {
    let xi = x.row(i);
    let mut grad = Array1::zeros(x.ncols());
    let mut count = 0usize;
    for j in members {
        count += 1;
        let diff = f[i] - f[j];
        let coef = gaussian_kernel(diff, sigma) * diff;
        grad.zip_mut_with(&(&x.row(j) - &xi), |g, &dx| *g += coef * dx);
    }
    let s = sigma.get();
    grad / (T::count(count) * s * s)
}

/// `∇_w p(w·x_i) = 1/(nσ²) Σ_j K(f_i - f_j) (f_i - f_j) (x_j - x_i)`.
pub fn grad_density_at<T: Scalar>(
    i: usize,
    dataset: &Dataset<T>,
    w: ArrayView1<'_, T>,
    sigma: Bandwidth<T>,
) -> Result<Array1<T>> {
    let x = dataset.features();
    let f = responses_of(x, w)?;
    let f = f.as_slice().expect("contiguous");
    Ok(grad_density_over(i, x, f, 0..dataset.n(), sigma))
}

/// Gradient of `p(w·x_i | y = y_i)`; the sum runs over the members of
/// sample `i`'s class with prefactor `1/(n_c σ²)`.
pub fn grad_conditional_density_at<T: Scalar>(
    i: usize,
    dataset: &Dataset<T>,
    w: ArrayView1<'_, T>,
    sigma: Bandwidth<T>,
) -> Result<Array1<T>> {
    let x = dataset.features();
    let f = responses_of(x, w)?;
    let f = f.as_slice().expect("contiguous");
    let labels = dataset.labels();
    let c = labels[i];
    let members = (0..dataset.n()).filter(move |&j| labels[j] == c);
    Ok(grad_density_over(i, x, f, members, sigma))
}

/// Estimate and gradient of the mutual information at `w`.
///
/// With `a_i = log p(f_i) + 1` and `b_i = log p(f_i|y_i) + 1` the gradient
///
/// ```text
/// ∇I = -Σ_i a_i ∇p(f_i) + Σ_c n_c/n Σ_{i: y_i=c} b_i ∇p(f_i|c)
/// ```
///
/// collapses to `1/(nσ²) Σ_k γ_k x_k`, where each pair `(i, j)` contributes
/// `K_ij (f_i - f_j) (coef_ij + coef_ji)` to `γ_j` and its negation to `γ_i`,
/// with `coef_ij = -a_i + b_i [y_i = y_j]`. That is O(n²) scalar work plus a
/// single O(nd) accumulation.
pub fn mi_value_and_gradient<T: Scalar>(
    dataset: &Dataset<T>,
    w: ArrayView1<'_, T>,
    sigma: Bandwidth<T>,
) -> Result<(MiEstimate<T>, Array1<T>)> {
    let x = dataset.features();
    let f = responses_of(x, w)?;
    let f = f.as_slice().expect("contiguous");
    let classes = ClassIndex::new(dataset.labels());
    let dens = densities(f, &classes, sigma);
    let (h_f, h_f_given_y) = entropies(&dens, &classes);

    let n = f.len();
    let a: Vec<T> = dens.marginal.iter().map(|&p| p.ln() + T::one()).collect();
    let b: Vec<T> = dens
        .conditional
        .iter()
        .map(|&q| q.ln() + T::one())
        .collect();
    let mut gamma = vec![T::zero(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = f[i] - f[j];
            let k = gaussian_kernel(diff, sigma);
            let mut coef = -a[i] - a[j];
            if classes.ids[i] == classes.ids[j] {
                coef += b[i] + b[j];
            }
            let s = k * diff * coef;
            gamma[j] += s;
            gamma[i] -= s;
        }
    }
    let sig = sigma.get();
    let scale = T::one() / (T::count(n) * sig * sig);
    let mut grad = Array1::zeros(x.ncols());
    for (row, &g) in x.rows().into_iter().zip(&gamma) {
        grad.scaled_add(g * scale, &row);
    }
    Ok((MiEstimate::from_parts(h_f, h_f_given_y), grad))
}

pub fn grad_mutual_information<T: Scalar>(
    dataset: &Dataset<T>,
    w: ArrayView1<'_, T>,
    sigma: Bandwidth<T>,
) -> Result<Array1<T>> {
    mi_value_and_gradient(dataset, w, sigma).map(|(_, g)| g)
}
