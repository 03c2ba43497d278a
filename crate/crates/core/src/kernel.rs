//! Mercer kernels and finite kernel expansions `f(·) = Σ_m θ_m K(x_m, ·)`.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};

/// A positive semi-definite kernel on `R^d`.
///
/// Implementors must be symmetric. `eval_unchecked` may assume equal lengths;
/// callers in this crate validate dimensions before reaching it.
pub trait Kernel {
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64;

    /// Upper bound on `sqrt(K(x, x))` over the input space.
    fn diagonal_bound(&self) -> f64;

    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        Ok(self.eval_unchecked(x, y))
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        (**self).eval_unchecked(x, y)
    }

    fn diagonal_bound(&self) -> f64 {
        (**self).diagonal_bound()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Gaussian,
}

/// Kernel family plus hyperparameters.
///
/// The Gaussian kernel is `exp(-‖x - y‖² / (2σ²))`, with `σ` the bandwidth
/// in the units of the feature coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
    // -1 / (2σ²), cached
    exponent_scale: f64,
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::invalid(alloc::format!(
                "kernel bandwidth must be finite and > 0, got {bandwidth}"
            )));
        }
        Ok(Self {
            family: KernelFamily::Gaussian,
            bandwidth,
            exponent_scale: -1.0 / (2.0 * bandwidth * bandwidth),
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

impl Kernel for KernelSpec {
    #[inline]
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                // Direct differences; the ‖x‖²+‖y‖²-2x·y expansion cancels badly.
                let sq: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| {
                        let d = a - b;
                        d * d
                    })
                    .sum();
                libm::exp(sq * self.exponent_scale)
            }
        }
    }

    fn diagonal_bound(&self) -> f64 {
        1.0
    }
}

/// `K(x, y)` with dimension checking.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

/// Append-only list of basis points, stored row-major.
///
/// The dimension is fixed by the first inserted point unless given up front.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dictionary {
    dim: usize,
    coords: Vec<f64>,
}

impl Dictionary {
    /// An empty dictionary whose dimension is set by the first point.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dim(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dictionary dimension must be positive"));
        }
        Ok(Self {
            dim,
            coords: Vec::new(),
        })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let mut dict = Self::new();
        for p in points {
            dict.push(p.as_ref())?;
        }
        Ok(dict)
    }

    /// Dimension of the stored points; `None` until it has been fixed.
    pub fn dim(&self) -> Option<usize> {
        (self.dim > 0).then_some(self.dim)
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.coords[index * self.dim..(index + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.is_empty() {
            return Err(Error::invalid("dictionary points must have dimension >= 1"));
        }
        if self.dim == 0 {
            self.dim = point.len();
        }
        check_dim(self.dim, point.len())?;
        self.coords.extend_from_slice(point);
        Ok(())
    }

    /// Checks a query point against the dictionary dimension. Always succeeds
    /// while the dimension is unset.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if self.dim == 0 {
            Ok(())
        } else {
            check_dim(self.dim, x.len())
        }
    }

    /// `K(D, x) = (K(x_1, x), ..., K(x_M, x))`.
    pub fn feature_map(&self, kernel: &impl Kernel, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.points().map(|p| kernel.eval_unchecked(p, x)).collect())
    }

    /// Dense `M × M` Gram matrix, row-major.
    pub fn gram(&self, kernel: &impl Kernel) -> Vec<f64> {
        let m = self.len();
        let mut g = alloc::vec![0.0; m * m];
        for i in 0..m {
            g[i * m + i] = kernel.eval_unchecked(self.point(i), self.point(i));
            for j in 0..i {
                let k = kernel.eval_unchecked(self.point(i), self.point(j));
                g[i * m + j] = k;
                g[j * m + i] = k;
            }
        }
        g
    }
}

/// `f(·) = K(D, ·)ᵀ θ`, represented exactly.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedExpansion {
    dictionary: Dictionary,
    weights: Vec<f64>,
}

impl WeightedExpansion {
    /// The zero function.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(dictionary: Dictionary, weights: Vec<f64>) -> Result<Self> {
        if dictionary.len() != weights.len() {
            return Err(Error::invalid(alloc::format!(
                "{} weights for {} dictionary points",
                weights.len(),
                dictionary.len()
            )));
        }
        Ok(Self {
            dictionary,
            weights,
        })
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Sums in dictionary order, left to right, so that every evaluation path
    /// yields the same bits.
    pub fn evaluate(&self, kernel: &impl Kernel, x: &[f64]) -> Result<f64> {
        self.dictionary.check_point(x)?;
        Ok(self.evaluate_unchecked(kernel, x))
    }

    pub(crate) fn evaluate_unchecked(&self, kernel: &impl Kernel, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (p, w) in self.dictionary.points().zip(&self.weights) {
            acc += w * kernel.eval_unchecked(p, x);
        }
        acc
    }

    pub fn evaluate_batch<P: AsRef<[f64]>>(
        &self,
        kernel: &impl Kernel,
        xs: &[P],
    ) -> Result<Vec<f64>> {
        for x in xs {
            self.dictionary.check_point(x.as_ref())?;
        }
        Ok(xs
            .iter()
            .map(|x| self.evaluate_unchecked(kernel, x.as_ref()))
            .collect())
    }

    /// `‖f‖²_H = θᵀ G θ`.
    pub fn rkhs_norm_sq(&self, kernel: &impl Kernel) -> f64 {
        let m = self.len();
        let mut acc = 0.0;
        for i in 0..m {
            let pi = self.dictionary.point(i);
            let mut row = self.weights[i] * kernel.eval_unchecked(pi, pi);
            for j in 0..i {
                row += 2.0 * self.weights[j] * kernel.eval_unchecked(pi, self.dictionary.point(j));
            }
            acc += self.weights[i] * row;
        }
        acc
    }

    pub(crate) fn scale_weights(&mut self, factor: f64) {
        for w in &mut self.weights {
            *w *= factor;
        }
    }

    pub(crate) fn push_term(&mut self, point: &[f64], weight: f64) -> Result<()> {
        self.dictionary.push(point)?;
        self.weights.push(weight);
        Ok(())
    }
}
