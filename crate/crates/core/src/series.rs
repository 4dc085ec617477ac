//! Truncated power series sampled on circles, and the weighted Dirichlet
//! norms carried by their coefficients.
//!
//! Coefficient extraction is boundary sampling + DFT throughout: the cusp
//! and peaking symbols have branch cuts that make symbolic composition
//! fragile, while a circle of radius rho < 1 sees only analytic data.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Samples of a function on the circle of radius `radius`, kept alongside a
/// series so powers can be formed without repeated convolution.
#[derive(Debug, Clone)]
pub struct SampleGrid<T: Real> {
    pub radius: T,
    pub values: Vec<Complex<T>>,
}

/// Truncated Taylor series at 0 with sampling provenance.
///
/// `coeffs[k]` is the degree-k coefficient, `0 <= k <= order`.
/// `tail_estimate` is the recorded aliasing proxy: the largest raw DFT bin
/// beyond the truncation degree, scaled by `radius^-order`. It is a
/// diagnostic, not an enforced bound; operations propagate it.
#[derive(Debug, Clone)]
pub struct TaylorSeries<T: Real> {
    pub coeffs: Vec<Complex<T>>,
    pub sample_radius: T,
    pub tail_estimate: T,
    samples: Option<Arc<SampleGrid<T>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TaylorSeriesJson {
    order: usize,
    sample_radius: f64,
    coeffs: Vec<[f64; 2]>,
    tail_estimate: f64,
}

impl<T: Real> TaylorSeries<T> {
    pub fn from_coeffs(coeffs: Vec<Complex<T>>, sample_radius: T) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least the constant term");
        TaylorSeries {
            coeffs,
            sample_radius,
            tail_estimate: T::zero(),
            samples: None,
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Complex<T> {
        self.coeffs
            .get(k)
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn evaluate(&self, z: Complex<T>) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn samples(&self) -> Option<&SampleGrid<T>> {
        self.samples.as_deref()
    }

    /// Serialize as `{order, sample_radius, coeffs: [[re, im], ...], tail_estimate}`.
    pub fn to_json(&self) -> String {
        let mirror = TaylorSeriesJson {
            order: self.order(),
            sample_radius: self.sample_radius.as_f64(),
            coeffs: self
                .coeffs
                .iter()
                .map(|c| [c.re.as_f64(), c.im.as_f64()])
                .collect(),
            tail_estimate: self.tail_estimate.as_f64(),
        };
        serde_json::to_string(&mirror).expect("series serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mirror: TaylorSeriesJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("series JSON: {e}")))?;
        if mirror.coeffs.len() != mirror.order + 1 {
            return Err(Error::InvalidParameter(
                "series JSON: coeffs length must be order + 1".into(),
            ));
        }
        Ok(TaylorSeries {
            coeffs: mirror
                .coeffs
                .iter()
                .map(|c| Complex::new(T::of(c[0]), T::of(c[1])))
                .collect(),
            sample_radius: T::of(mirror.sample_radius),
            tail_estimate: T::of(mirror.tail_estimate),
            samples: None,
        })
    }
}

fn dft_forward<T: Real + FftNum>(values: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(values.len());
    let mut buf = values.to_vec();
    fft.process(&mut buf);
    let scale = T::one() / T::of_usize(values.len());
    for v in &mut buf {
        *v = Complex::new(v.re * scale, v.im * scale);
    }
    buf
}

/// Coefficients and aliasing proxy from raw DFT bins of circle samples.
fn coeffs_from_bins<T: Real>(
    bins: &[Complex<T>],
    rho: T,
    order: usize,
) -> (Vec<Complex<T>>, T) {
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut rho_pow = T::one();
    for bin in bins.iter().take(order + 1) {
        coeffs.push(Complex::new(bin.re / rho_pow, bin.im / rho_pow));
        rho_pow = rho_pow * rho;
    }
    let mut worst = T::zero();
    for bin in bins.iter().skip(order + 1) {
        let mag = bin.norm();
        if mag > worst {
            worst = mag;
        }
    }
    let tail = worst / rho.powi(order as i32);
    (coeffs, tail)
}

/// Extract Taylor coefficients of an analytic function by uniform sampling
/// on the circle of radius `rho` followed by one DFT.
///
/// `coeffs[k]` = (DFT bin k) / rho^k. Requires `samples >= 2 (order + 1)`.
pub fn series_from_samples<T, F>(
    f: F,
    rho: T,
    order: usize,
    samples: usize,
) -> Result<TaylorSeries<T>>
where
    T: Real + FftNum,
    F: Fn(Complex<T>) -> Complex<T>,
{
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::RadiusOutOfRange(rho.as_f64()));
    }
    if samples < 2 * (order + 1) {
        return Err(Error::InvalidParameter(format!(
            "need samples >= 2 (order + 1), got {samples} for order {order}"
        )));
    }
    let two_pi = T::of(2.0) * T::PI();
    let mut values = Vec::with_capacity(samples);
    for m in 0..samples {
        let theta = two_pi * T::of_usize(m) / T::of_usize(samples);
        let v = f(Complex::from_polar(rho, theta));
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::EvaluationFailure { index: m });
        }
        values.push(v);
    }
    let bins = dft_forward(&values);
    let (coeffs, tail) = coeffs_from_bins(&bins, rho, order);
    Ok(TaylorSeries {
        coeffs,
        sample_radius: rho,
        tail_estimate: tail,
        samples: Some(Arc::new(SampleGrid {
            radius: rho,
            values,
        })),
    })
}

/// Taylor coefficients of s^n truncated at `order`, by pointwise powering of
/// boundary samples and one DFT. Synthesizes a sample grid from the stored
/// coefficients when the series does not carry one.
pub fn series_power<T: Real + FftNum>(
    s: &TaylorSeries<T>,
    n: u32,
    order: usize,
) -> Result<TaylorSeries<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("power must be >= 1".into()));
    }
    let needed = 2 * (order + 1);
    let grid: Arc<SampleGrid<T>> = match &s.samples {
        Some(g) if g.values.len() >= needed => Arc::clone(g),
        _ => {
            let m = needed.next_power_of_two().max(64);
            let rho = s.sample_radius;
            let two_pi = T::of(2.0) * T::PI();
            let values = (0..m)
                .map(|k| {
                    let theta = two_pi * T::of_usize(k) / T::of_usize(m);
                    s.evaluate(Complex::from_polar(rho, theta))
                })
                .collect();
            Arc::new(SampleGrid {
                radius: rho,
                values,
            })
        }
    };
    let powered: Vec<Complex<T>> = grid.values.iter().map(|&v| v.powu(n)).collect();
    let bins = dft_forward(&powered);
    let (coeffs, alias) = coeffs_from_bins(&bins, grid.radius, order);
    let tail = alias + T::of_usize(n as usize) * s.tail_estimate;
    Ok(TaylorSeries {
        coeffs,
        sample_radius: grid.radius,
        tail_estimate: tail,
        samples: Some(Arc::new(SampleGrid {
            radius: grid.radius,
            values: powered,
        })),
    })
}

/// Squared weighted-Dirichlet norm of the monomial z^n:
/// w_n(alpha) = (alpha + 1) n^2 B(n, alpha + 1). For alpha = 0 this is n,
/// returned exactly.
pub fn monomial_weight<T: Real>(n: usize, alpha: T) -> Result<T> {
    if n == 0 {
        return Err(Error::InvalidParameter("monomial weight needs n >= 1".into()));
    }
    if alpha <= T::of(-1.0) {
        return Err(Error::WeightOutOfRange(alpha.as_f64()));
    }
    if alpha == T::zero() {
        return Ok(T::of_usize(n));
    }
    // B(n, alpha + 1) = (n-1)! / prod_{k=1..n} (alpha + k)
    let nf = T::of_usize(n);
    let mut b = T::one() / (alpha + nf);
    for k in 1..n {
        let kf = T::of_usize(k);
        b = b * kf / (alpha + kf);
    }
    Ok((alpha + T::one()) * nf * nf * b)
}

/// Weights w_1(alpha) .. w_nmax(alpha) by the Beta-ratio recurrence.
pub fn monomial_weights<T: Real>(n_max: usize, alpha: T) -> Result<Vec<T>> {
    if alpha <= T::of(-1.0) {
        return Err(Error::WeightOutOfRange(alpha.as_f64()));
    }
    let mut out = Vec::with_capacity(n_max);
    if n_max == 0 {
        return Ok(out);
    }
    if alpha == T::zero() {
        for n in 1..=n_max {
            out.push(T::of_usize(n));
        }
        return Ok(out);
    }
    // B(1, alpha+1) = 1/(alpha+1); B(n+1, a+1) = B(n, a+1) n/(n+alpha+1).
    let mut beta = T::one() / (alpha + T::one());
    for n in 1..=n_max {
        let nf = T::of_usize(n);
        out.push((alpha + T::one()) * nf * nf * beta);
        beta = beta * nf / (nf + alpha + T::one());
    }
    Ok(out)
}

/// |c_0|^2 + sum_{n>=1} w_n(alpha) |c_n|^2 over the stored coefficients.
pub fn dirichlet_norm_sq<T: Real>(s: &TaylorSeries<T>, alpha: T) -> Result<T> {
    let weights = monomial_weights(s.order(), alpha)?;
    let mut total = s.coeffs[0].norm_sqr();
    for (n, c) in s.coeffs.iter().enumerate().skip(1) {
        total = total + weights[n - 1] * c.norm_sqr();
    }
    Ok(total)
}

/// Reproducing kernel of the origin-pinned Dirichlet space:
/// K_a(z) = log 1/(1 - conj(a) z), principal branch. K_a(0) = 0.
pub fn reproducing_kernel<T: Real>(a: Complex<T>, z: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    -((one - a.conj() * z).ln())
}
