//! Operator-side diagnostics for composition operators on the weighted
//! Dirichlet spaces.
//!
//! The operator C_phi is truncated in the orthonormal monomial basis
//! e_n = z^n / sqrt(w_n(alpha)); window masses int N_{phi,alpha} dA over the
//! dyadic Hastings-Luecking cells feed the Schatten partial sums, with three
//! backends: analytic lattice counting (comb symbols, alpha = 0), angular
//! sections of the image region (univalent symbols), and change-of-variables
//! Monte Carlo on the disk side (any evaluable symbol; no preimage
//! root-finding).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rustfft::{FftNum, FftPlanner};

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre_on, unit_uniform};
use crate::report::fmt_g17;
use crate::scalar::Real;
use crate::series::{dirichlet_norm_sq, monomial_weights, series_from_samples, TaylorSeries};
use crate::symbols::{RegionModel, Symbol};

fn two_pi<T: Real>() -> T {
    T::of(2.0) * T::PI()
}

/// Radial and angular bounds of the dyadic window R_{n,j}.
pub fn window_bounds<T: Real>(n: u32, j: u64) -> (T, T, T, T) {
    let r_lo = T::one() - T::of(0.5).powi(n as i32);
    let r_hi = T::one() - T::of(0.5).powi(n as i32 + 1);
    let sectors = T::of(2.0f64.powi(n as i32));
    let th_lo = two_pi::<T>() * T::of(j as f64) / sectors;
    let th_hi = two_pi::<T>() * T::of(j as f64 + 1.0) / sectors;
    (r_lo, r_hi, th_lo, th_hi)
}

// ---------------------------------------------------------------------------
// Matrix truncation and singular values
// ---------------------------------------------------------------------------

/// Truncated matrix of C_phi in the orthonormal monomial basis:
/// M[m][n] = a_m^{(n)} sqrt(w_m / w_n), where a_m^{(n)} is the m-th Taylor
/// coefficient of phi^n. Indices run 1..=order.
#[derive(Debug, Clone)]
pub struct OperatorMatrix<T: Real> {
    pub alpha: T,
    pub order: usize,
    pub rho: T,
    entries: Vec<Complex<T>>,
    pub column_tails: Vec<T>,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn entry(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[(row - 1) * self.order + (col - 1)]
    }

    pub fn frobenius_sq(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, c| acc + c.norm_sqr())
    }

    /// Top-left square submatrix (an exact compression).
    pub fn leading(&self, order: usize) -> OperatorMatrix<T> {
        assert!(order <= self.order);
        let mut entries = Vec::with_capacity(order * order);
        for m in 0..order {
            for n in 0..order {
                entries.push(self.entries[m * self.order + n]);
            }
        }
        OperatorMatrix {
            alpha: self.alpha,
            order,
            rho: self.rho,
            entries,
            column_tails: self.column_tails[..order].to_vec(),
        }
    }
}

fn sample_count_for<T: Real>(order: usize, rho: T) -> usize {
    let decades = (35.0 / (1.0 / rho.as_f64()).ln()).ceil() as usize;
    (2 * (order + 1)).max(2 * order + decades).next_power_of_two()
}

/// Build the truncated matrix: phi is sampled once on the rho-circle, each
/// column is a pointwise power followed by one DFT.
pub fn build_matrix<T: Real + FftNum>(
    phi: &Symbol<T>,
    order: usize,
    alpha: T,
    rho: T,
) -> Result<OperatorMatrix<T>> {
    if !phi.fixes_origin {
        return Err(Error::OriginNotFixed);
    }
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::RadiusOutOfRange(rho.as_f64()));
    }
    let m_samples = sample_count_for(order, rho);
    let mut samples = Vec::with_capacity(m_samples);
    let mut sup = T::zero();
    for k in 0..m_samples {
        let theta = two_pi::<T>() * T::of_usize(k) / T::of_usize(m_samples);
        let v = phi.eval(Complex::from_polar(rho, theta))?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::EvaluationFailure { index: k });
        }
        if v.norm() > sup {
            sup = v.norm();
        }
        samples.push(v);
    }
    if sup >= T::one() {
        return Err(Error::SamplingRadiusTooLarge { sup: sup.as_f64() });
    }

    let weights = monomial_weights(order, alpha)?;
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(m_samples);
    let scale = T::one() / T::of_usize(m_samples);

    let mut entries = vec![Complex::new(T::zero(), T::zero()); order * order];
    let mut column_tails = Vec::with_capacity(order);
    let mut current = samples.clone();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); m_samples];
    for col in 1..=order {
        if col > 1 {
            for (c, s) in current.iter_mut().zip(&samples) {
                *c = *c * *s;
            }
        }
        buf.copy_from_slice(&current);
        fft.process(&mut buf);
        let mut rho_pow = rho; // rho^m starting at m = 1
        for row in 1..=order {
            let coeff = Complex::new(buf[row].re * scale, buf[row].im * scale)
                / Complex::new(rho_pow, T::zero());
            let w_ratio = (weights[row - 1] / weights[col - 1]).sqrt();
            entries[(row - 1) * order + (col - 1)] = coeff * Complex::new(w_ratio, T::zero());
            rho_pow = rho_pow * rho;
        }
        let mut worst = T::zero();
        for bin in buf.iter().take(m_samples).skip(order + 1) {
            let mag = bin.norm() * scale;
            if mag > worst {
                worst = mag;
            }
        }
        column_tails.push(worst / rho.powi(order as i32));
    }
    Ok(OperatorMatrix {
        alpha,
        order,
        rho,
        entries,
        column_tails,
    })
}

#[derive(Debug, Clone)]
pub struct SingularSpectrum<T: Real> {
    /// Nonincreasing singular values of the truncation.
    pub values: Vec<T>,
    pub order: usize,
}

impl<T: Real> SingularSpectrum<T> {
    pub fn schatten(&self, p: T) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, &s| acc + s.powf(p))
            .powf(T::one() / p)
    }

    /// CSV with columns (k, sigma, N), floats at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,sigma,N\n");
        for (k, &s) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", k + 1, fmt_g17(s), self.order));
        }
        out
    }
}

/// Dense SVD of the truncation. Truncation gives lower estimates of the true
/// singular values, nondecreasing in the order by compression interlacing.
pub fn singular_values<T>(matrix: &OperatorMatrix<T>) -> SingularSpectrum<T>
where
    T: Real + nalgebra::RealField,
{
    let n = matrix.order;
    let m = DMatrix::from_fn(n, n, |r, c| matrix.entries[r * n + c]);
    let svd = m.svd(false, false);
    let mut values: Vec<T> = svd.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    SingularSpectrum { values, order: n }
}

// ---------------------------------------------------------------------------
// Hilbert-Schmidt norms, two ways
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HsSeriesEstimate<T> {
    /// sum_{n <= N} ||phi^n||^2 / n over the computed terms.
    pub partial: T,
    /// Geometric bound on the omitted tail, from sup |phi| on the circle.
    pub tail_bound: T,
    pub value: T,
    pub terms: Vec<T>,
    pub flagged_divergent: bool,
}

/// Squared Hilbert-Schmidt norm of C_phi through the basis series
/// sum ||phi^n||^2 / n, each power from one shared sample grid.
pub fn hs_norm_series<T: Real + FftNum>(
    phi: &Symbol<T>,
    n_terms: usize,
    rho: T,
) -> Result<HsSeriesEstimate<T>> {
    if !phi.fixes_origin {
        return Err(Error::OriginNotFixed);
    }
    // degrees with rho^m above the DFT noise floor contribute reliably;
    // deeper bins would enter amplified by rho^{-2m}
    let m_cap = ((23.0 / (1.0 / rho.as_f64()).ln()).floor() as usize).max(n_terms);
    let m_samples = sample_count_for(m_cap, rho);
    let mut samples = Vec::with_capacity(m_samples);
    let mut sup = T::zero();
    for k in 0..m_samples {
        let theta = two_pi::<T>() * T::of_usize(k) / T::of_usize(m_samples);
        let v = phi.eval(Complex::from_polar(rho, theta))?;
        sup = sup.max(v.norm());
        samples.push(v);
    }
    if sup >= T::one() {
        return Err(Error::SamplingRadiusTooLarge { sup: sup.as_f64() });
    }
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(m_samples);
    let scale = T::one() / T::of_usize(m_samples);
    let mut current = samples.clone();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); m_samples];
    let mut terms = Vec::with_capacity(n_terms);
    let mut partial = T::zero();
    let mut first_norm = T::zero();
    for n in 1..=n_terms {
        if n > 1 {
            for (c, s) in current.iter_mut().zip(&samples) {
                *c = *c * *s;
            }
        }
        buf.copy_from_slice(&current);
        fft.process(&mut buf);
        let mut norm_sq = T::zero();
        let mut rho_pow = rho;
        for m in 1..=m_cap.min(m_samples - 1) {
            let c = Complex::new(buf[m].re * scale, buf[m].im * scale);
            norm_sq = norm_sq + T::of_usize(m) * c.norm_sqr() / (rho_pow * rho_pow);
            rho_pow = rho_pow * rho;
        }
        if n == 1 {
            first_norm = norm_sq;
        }
        let term = norm_sq / T::of_usize(n);
        partial = partial + term;
        terms.push(term);
    }
    // tail: ||phi^n||^2 <= n^2 sup^{2(n-1)} ||phi||^2
    let t2 = sup * sup;
    let n_f = T::of_usize(n_terms);
    let tail_bound = if t2 < T::one() {
        first_norm * t2.powi(n_terms as i32)
            * (n_f / (T::one() - t2) + T::one() / ((T::one() - t2) * (T::one() - t2)))
    } else {
        T::infinity()
    };
    let last = *terms.last().unwrap();
    let mid = terms[n_terms / 2 - 1];
    let flagged_divergent =
        last >= T::of(0.9) * mid && last > T::of(1e-9) * (T::one() + partial);
    Ok(HsSeriesEstimate {
        partial,
        tail_bound,
        value: partial + tail_bound,
        terms,
        flagged_divergent,
    })
}

#[derive(Debug, Clone)]
pub struct HsIntegralEstimate<T> {
    pub value: T,
    /// (clip depth k, estimate with radial clip 1 - 2^-k)
    pub refinements: Vec<(usize, T)>,
    pub stable: bool,
}

/// Squared Hilbert-Schmidt norm through the disk integral
/// int |phi'|^2 / (1 - |phi|^2)^2 dA, over a radial-clip refinement ladder.
pub fn hs_norm_integral<T: Real>(
    phi: &Symbol<T>,
    depths: &[usize],
) -> Result<HsIntegralEstimate<T>> {
    let mut refinements = Vec::with_capacity(depths.len());
    for &k in depths {
        let clip = T::one() - T::of(0.5).powi(k as i32);
        let rule = crate::quad::QuadratureRule::tensor(12, 256, clip);
        let est = crate::quad::disk_integrate(
            |z| {
                let v = phi.eval(z).unwrap_or(Complex::new(T::one(), T::zero()));
                let d = phi.deriv(z).unwrap_or(Complex::new(T::zero(), T::zero()));
                let g = T::one() - v.norm_sqr();
                d.norm_sqr() / (g * g)
            },
            &rule,
        )?;
        refinements.push((k, est.value));
    }
    let n = refinements.len();
    let last = refinements[n - 1].1;
    let prev = refinements[n - 2].1;
    if n >= 3 {
        let prev2 = refinements[n - 3].1;
        let inc1 = prev - prev2;
        let inc2 = last - prev;
        if inc2 > T::of(0.5) * inc1 && inc2 > T::of(0.1) * last.abs() {
            return Err(Error::HsIntegralDivergent);
        }
    }
    let rel = (last - prev).abs() / last.abs().max(T::of(1e-30));
    Ok(HsIntegralEstimate {
        value: last,
        refinements,
        stable: rel < T::of(1e-3),
    })
}

// ---------------------------------------------------------------------------
// Window masses
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Analytic lattice counting through the comb counting model.
    Counting,
    /// Angular sections of the image region (univalent symbols).
    Geometric,
    /// Closed-form window area supplied by the region model.
    GeometricFormula,
    /// Change-of-variables Monte Carlo on the disk side.
    MonteCarlo,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Counting => "counting",
            Backend::Geometric => "geometric",
            Backend::GeometricFormula => "geometric-formula",
            Backend::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WindowMass<T> {
    pub mass: T,
    pub stderr: Option<T>,
    pub backend: Backend,
}

/// Map section intervals in (-pi, pi] to absolute angles in [0, 2 pi).
fn to_absolute_intervals<T: Real>(section: &[(T, T)]) -> Vec<(T, T)> {
    let period = two_pi::<T>();
    let mut out = Vec::with_capacity(section.len() + 1);
    for &(lo, hi) in section {
        if hi <= T::zero() {
            out.push((lo + period, hi + period));
        } else if lo < T::zero() {
            out.push((lo + period, period));
            out.push((T::zero(), hi));
        } else {
            out.push((lo, hi));
        }
    }
    out
}

fn overlap_length<T: Real>(intervals: &[(T, T)], lo: T, hi: T) -> T {
    let mut acc = T::zero();
    for &(a, b) in intervals {
        let l = a.max(lo);
        let h = b.min(hi);
        if h > l {
            acc = acc + (h - l);
        }
    }
    acc
}

/// Geometric backend: mass = (1/pi) int_band r (1-r^2)^alpha |section(r) cap
/// window arc| dr, with the section exact per radius and the radial range
/// split at section discontinuities.
fn window_mass_geometric<T: Real>(
    region: &RegionModel<T>,
    alpha: T,
    n: u32,
    j: u64,
    radial_nodes: usize,
) -> T {
    let (r_lo, r_hi, th_lo, th_hi) = window_bounds::<T>(n, j);
    let mut cuts = vec![r_lo, r_hi];
    for b in region.radial_breakpoints() {
        if b > r_lo && b < r_hi {
            cuts.push(b);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = T::zero();
    for pair in cuts.windows(2) {
        let (nodes, weights) = gauss_legendre_on(radial_nodes, pair[0], pair[1]);
        for (&r, &w) in nodes.iter().zip(&weights) {
            let section = to_absolute_intervals(&region.theta_section(r));
            let len = overlap_length(&section, th_lo, th_hi);
            if len > T::zero() {
                let weight_alpha = if alpha == T::zero() {
                    T::one()
                } else {
                    (T::one() - r * r).powf(alpha)
                };
                acc = acc + w * r * weight_alpha * len;
            }
        }
    }
    acc / T::PI()
}

/// Counting backend (alpha = 0): mass = (1/pi) int_band r *
/// [exact angular integral of the lattice count] dr.
fn window_mass_counting<T: Real>(
    model: &crate::symbols::CountingModel<T>,
    n: u32,
    j: u64,
    radial_nodes: usize,
    clip: T,
) -> T {
    let (r_lo, r_hi, th_lo, th_hi) = window_bounds::<T>(n, j);
    let r_hi = r_hi.min(clip);
    if r_hi <= r_lo {
        return T::zero();
    }
    let (nodes, weights) = gauss_legendre_on(radial_nodes, r_lo, r_hi);
    let mut acc = T::zero();
    for (&r, &w) in nodes.iter().zip(&weights) {
        let x = -(r.ln());
        acc = acc + w * r * model.angular_count_integral(x, th_lo, th_hi);
    }
    acc / T::PI()
}

/// Monte Carlo change-of-variables masses for a whole generation, binned by
/// sector: E[ 1_{R}(phi(z)) |phi'(z)|^2 (1-|z|^2)^alpha ] with the radial
/// coordinate importance-sampled log-uniformly in v = 1 - |z|^2.
/// Mass below the importance floor v_hi * 1e-8 is dropped.
fn window_masses_mc_generation<T: Real>(
    phi: &Symbol<T>,
    alpha: T,
    n: u32,
    samples: usize,
    seed: u64,
) -> Result<BTreeMap<u64, (T, T)>> {
    if !phi.is_evaluable() {
        return Err(Error::NoBackend);
    }
    let v_hi = if phi.fixes_origin {
        T::of(2.0f64.powi(1 - n as i32)).min(T::one())
    } else {
        T::one()
    };
    let v_lo = v_hi * T::of(1e-8);
    let log_range = (v_hi / v_lo).ln();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9e3779b97f4a7c15));
    let sectors = 2f64.powi(n as i32);
    let mut bins: BTreeMap<u64, (T, T)> = BTreeMap::new();
    let band_lo = T::of(0.5).powi(n as i32 + 1);
    let band_hi = T::of(0.5).powi(n as i32);
    for _ in 0..samples {
        let u1 = unit_uniform::<T>(&mut rng);
        let u2 = unit_uniform::<T>(&mut rng);
        let v = v_hi * (-log_range * u1).exp();
        let theta = two_pi::<T>() * u2;
        let r = (T::one() - v).max(T::zero()).sqrt();
        let z = Complex::from_polar(r, theta);
        let (w, d) = match (phi.eval(z), phi.deriv(z)) {
            (Ok(w), Ok(d)) => (w, d),
            _ => continue, // isolated singular nodes contribute nothing
        };
        let gap = T::one() - w.norm();
        if !(gap > band_lo && gap <= band_hi) {
            continue;
        }
        let mut arg = w.im.atan2(w.re);
        if arg < T::zero() {
            arg = arg + two_pi::<T>();
        }
        let j = ((arg / two_pi::<T>()).as_f64() * sectors).floor() as u64;
        let weight_alpha = if alpha == T::zero() {
            T::one()
        } else {
            v.powf(alpha)
        };
        let x = d.norm_sqr() * weight_alpha * v * log_range;
        let entry = bins.entry(j).or_insert((T::zero(), T::zero()));
        entry.0 = entry.0 + x;
        entry.1 = entry.1 + x * x;
    }
    let nf = T::of_usize(samples);
    Ok(bins
        .into_iter()
        .map(|(j, (sum, sum_sq))| {
            let mean = sum / nf;
            let var = (sum_sq / nf - mean * mean).max(T::zero());
            (j, (mean, (var / nf).sqrt()))
        })
        .collect())
}

/// Monte Carlo on the window side for region-only symbols: area-uniform
/// sampling of the window against the membership test.
fn window_mass_mc_region<T: Real>(
    region: &RegionModel<T>,
    alpha: T,
    n: u32,
    j: u64,
    samples: usize,
    seed: u64,
) -> (T, T) {
    let (r_lo, r_hi, th_lo, th_hi) = window_bounds::<T>(n, j);
    let (u_lo, u_hi) = (r_lo * r_lo, r_hi * r_hi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bf0_3635);
    let mut sum = T::zero();
    let mut sum_sq = T::zero();
    for _ in 0..samples {
        let u = u_lo + (u_hi - u_lo) * unit_uniform::<T>(&mut rng);
        let theta = th_lo + (th_hi - th_lo) * unit_uniform::<T>(&mut rng);
        let w = Complex::from_polar(u.sqrt(), theta);
        let x = if region.contains(w) {
            if alpha == T::zero() {
                T::one()
            } else {
                (T::one() - u).powf(alpha)
            }
        } else {
            T::zero()
        };
        sum = sum + x;
        sum_sq = sum_sq + x * x;
    }
    let nf = T::of_usize(samples);
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(T::zero());
    let cell = (th_hi - th_lo) * (u_hi - u_lo) / two_pi::<T>();
    (mean * cell, (var / nf).sqrt() * cell)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcedBackend {
    Auto,
    Geometric,
    MonteCarlo,
    Formula,
}

/// Window mass int_{R_{n,j}} N_{phi,alpha} dA with automatic backend choice:
/// counting model (alpha = 0), then image region, then Monte Carlo.
pub fn window_mass<T: Real>(
    phi: &Symbol<T>,
    alpha: T,
    n: u32,
    j: u64,
    samples: usize,
    seed: u64,
) -> Result<WindowMass<T>> {
    window_mass_with(phi, alpha, n, j, samples, seed, ForcedBackend::Auto)
}

pub fn window_mass_with<T: Real>(
    phi: &Symbol<T>,
    alpha: T,
    n: u32,
    j: u64,
    samples: usize,
    seed: u64,
    forced: ForcedBackend,
) -> Result<WindowMass<T>> {
    if alpha <= T::of(-1.0) {
        return Err(Error::WeightOutOfRange(alpha.as_f64()));
    }
    match forced {
        ForcedBackend::Formula => {
            let region = phi.image_region.as_ref().ok_or(Error::NoBackend)?;
            let mass = region.area_formula(n, j).ok_or(Error::NoBackend)?;
            if alpha != T::zero() {
                return Err(Error::NoBackend);
            }
            return Ok(WindowMass {
                mass,
                stderr: None,
                backend: Backend::GeometricFormula,
            });
        }
        ForcedBackend::Geometric => {
            let region = phi.image_region.as_ref().ok_or(Error::NoBackend)?;
            return Ok(WindowMass {
                mass: window_mass_geometric(region, alpha, n, j, 32),
                stderr: None,
                backend: Backend::Geometric,
            });
        }
        ForcedBackend::MonteCarlo => {
            if phi.is_evaluable() {
                let bins = window_masses_mc_generation(phi, alpha, n, samples, seed)?;
                let (mass, stderr) = bins.get(&j).copied().unwrap_or((T::zero(), T::zero()));
                return Ok(WindowMass {
                    mass,
                    stderr: Some(stderr),
                    backend: Backend::MonteCarlo,
                });
            }
            let region = phi.image_region.as_ref().ok_or(Error::NoBackend)?;
            let (mass, stderr) = window_mass_mc_region(region, alpha, n, j, samples, seed);
            return Ok(WindowMass {
                mass,
                stderr: Some(stderr),
                backend: Backend::MonteCarlo,
            });
        }
        ForcedBackend::Auto => {}
    }
    if let Some(model) = &phi.valence_model {
        if alpha == T::zero() {
            return Ok(WindowMass {
                mass: window_mass_counting(model, n, j, 48, T::one() - T::of(1e-9)),
                stderr: None,
                backend: Backend::Counting,
            });
        }
        if !phi.is_evaluable() && phi.image_region.is_none() {
            return Err(Error::NoBackend);
        }
    }
    if let Some(region) = &phi.image_region {
        if alpha == T::zero() {
            if let Some(mass) = region.area_formula(n, j) {
                return Ok(WindowMass {
                    mass,
                    stderr: None,
                    backend: Backend::GeometricFormula,
                });
            }
        }
        return Ok(WindowMass {
            mass: window_mass_geometric(region, alpha, n, j, 32),
            stderr: None,
            backend: Backend::Geometric,
        });
    }
    if phi.is_evaluable() {
        let bins = window_masses_mc_generation(phi, alpha, n, samples, seed)?;
        let (mass, stderr) = bins.get(&j).copied().unwrap_or((T::zero(), T::zero()));
        return Ok(WindowMass {
            mass,
            stderr: Some(stderr),
            backend: Backend::MonteCarlo,
        });
    }
    Err(Error::NoBackend)
}

// ---------------------------------------------------------------------------
// Schatten partial sums
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchattenVerdict {
    Converging,
    Diverging,
    Inconclusive,
}

impl SchattenVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            SchattenVerdict::Converging => "converging",
            SchattenVerdict::Diverging => "diverging",
            SchattenVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Generation-ratio verdict with thresholds 0.95 / 1.05 and a mandatory
/// inconclusive band. In the slow band the Raabe exponent
/// (n+1)(1 - ratio) separates terms ~ n^{-q}: q <= 1 diverges.
pub fn schatten_verdict<T: Real>(generation_totals: &[T]) -> SchattenVerdict {
    let mut idx = None;
    for i in (1..generation_totals.len()).rev() {
        if generation_totals[i] > T::zero() && generation_totals[i - 1] > T::zero() {
            idx = Some(i);
            break;
        }
    }
    let Some(i) = idx else {
        return SchattenVerdict::Converging;
    };
    let ratio = generation_totals[i] / generation_totals[i - 1];
    if ratio < T::of(0.95) {
        return SchattenVerdict::Converging;
    }
    if ratio > T::of(1.05) {
        return SchattenVerdict::Diverging;
    }
    let raabe = T::of_usize(i + 1) * (T::one() - ratio);
    if raabe < T::of(1.05) {
        SchattenVerdict::Diverging
    } else if raabe <= T::of(1.5) {
        SchattenVerdict::Inconclusive
    } else {
        SchattenVerdict::Converging
    }
}

#[derive(Debug, Clone)]
pub struct WindowEntry<T> {
    pub generation: u32,
    pub sector: u64,
    pub mass: T,
    pub stderr: Option<T>,
    pub backend: Backend,
}

#[derive(Debug, Clone)]
pub struct WindowReport<T: Real> {
    pub alpha: T,
    pub p: T,
    pub n_max: u32,
    pub entries: Vec<WindowEntry<T>>,
    /// sum_j [2^{n(alpha+2)} mass(n,j)]^{p/2} per generation.
    pub generation_totals: Vec<T>,
    pub partial_sum: T,
    pub verdict: SchattenVerdict,
}

impl<T: Real> WindowReport<T> {
    /// Re-evaluate the criterion at another exponent from the same masses.
    pub fn with_exponent(&self, p: T) -> WindowReport<T> {
        let mut totals = vec![T::zero(); self.n_max as usize + 1];
        for e in &self.entries {
            let scale = T::of(2.0)
                .powf(T::of(e.generation as f64) * (self.alpha + T::of(2.0)));
            if e.mass > T::zero() {
                totals[e.generation as usize] =
                    totals[e.generation as usize] + (scale * e.mass).powf(p * T::of(0.5));
            }
        }
        let partial = totals.iter().fold(T::zero(), |a, &b| a + b);
        let verdict = schatten_verdict(&totals);
        WindowReport {
            alpha: self.alpha,
            p,
            n_max: self.n_max,
            entries: self.entries.clone(),
            generation_totals: totals,
            partial_sum: partial,
            verdict,
        }
    }

    /// CSV with columns (alpha, n, j, mass, stderr, backend).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,n,j,mass,stderr,backend\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_g17(self.alpha),
                e.generation,
                e.sector,
                fmt_g17(e.mass),
                e.stderr.map(fmt_g17).unwrap_or_default(),
                e.backend.as_str()
            ));
        }
        out
    }
}

/// Sectors a region model can touch at generation n, read off the exact
/// angular sections at a few radii in the band.
fn candidate_sectors<T: Real>(region: &RegionModel<T>, n: u32) -> Vec<u64> {
    let (r_lo, r_hi, _, _) = window_bounds::<T>(n, 0);
    let sectors = 2f64.powi(n as i32);
    let mut set = std::collections::BTreeSet::new();
    for frac in [0.02, 0.25, 0.5, 0.75, 0.98] {
        let r = r_lo + (r_hi - r_lo) * T::of(frac);
        for (lo, hi) in to_absolute_intervals(&region.theta_section(r)) {
            let j_lo = ((lo / two_pi::<T>()).as_f64() * sectors).floor().max(0.0) as u64;
            let j_hi = ((hi / two_pi::<T>()).as_f64() * sectors).ceil() as u64;
            for j in j_lo..j_hi.min(sectors as u64) {
                set.insert(j);
            }
        }
    }
    set.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct SchattenOptions {
    pub samples: usize,
    pub seed: u64,
    /// Counting backend: compute per-sector masses only while 2^n stays
    /// below this; beyond it sectors are statistically identical and one
    /// representative mass is reused across the generation.
    pub max_explicit_sectors: u64,
}

impl Default for SchattenOptions {
    fn default() -> Self {
        SchattenOptions {
            samples: 200_000,
            seed: 7,
            max_explicit_sectors: 512,
        }
    }
}

/// Dyadic window masses up to generation n_max and the Schatten partial sum
/// sum_{n,j} [2^{n(alpha+2)} mass]^{p/2} with a convergence verdict.
pub fn schatten_sum<T: Real>(
    phi: &Symbol<T>,
    alpha: T,
    p: T,
    n_max: u32,
    opts: &SchattenOptions,
) -> Result<WindowReport<T>> {
    if !(p > T::zero()) {
        return Err(Error::InvalidParameter("Schatten exponent must be positive".into()));
    }
    let mut entries = Vec::new();
    let mut totals = vec![T::zero(); n_max as usize + 1];
    for n in 0..=n_max {
        let scale = T::of(2.0).powf(T::of(n as f64) * (alpha + T::of(2.0)));
        let mut push = |sector: u64, mass: T, stderr: Option<T>, backend: Backend, mult: T| {
            if mass > T::zero() {
                totals[n as usize] =
                    totals[n as usize] + mult * (scale * mass).powf(p * T::of(0.5));
            }
            entries.push(WindowEntry {
                generation: n,
                sector,
                mass,
                stderr,
                backend,
            });
        };
        if let Some(model) = &phi.valence_model {
            if alpha != T::zero() {
                return Err(Error::NoBackend);
            }
            let sectors = 2u64.checked_shl(n).map(|s| s >> 1).unwrap_or(u64::MAX);
            let sectors = if n == 0 { 1 } else { sectors };
            if sectors <= opts.max_explicit_sectors {
                for j in 0..sectors {
                    let mass =
                        window_mass_counting(model, n, j, 48, T::one() - T::of(1e-9));
                    push(j, mass, None, Backend::Counting, T::one());
                }
            } else {
                let mass = window_mass_counting(model, n, 0, 48, T::one() - T::of(1e-9));
                push(0, mass, None, Backend::Counting, T::of(sectors as f64));
            }
            continue;
        }
        if let Some(region) = &phi.image_region {
            for j in candidate_sectors(region, n) {
                let wm = if alpha == T::zero() {
                    match region.area_formula(n, j) {
                        Some(mass) => WindowMass {
                            mass,
                            stderr: None,
                            backend: Backend::GeometricFormula,
                        },
                        None => WindowMass {
                            mass: window_mass_geometric(region, alpha, n, j, 32),
                            stderr: None,
                            backend: Backend::Geometric,
                        },
                    }
                } else {
                    WindowMass {
                        mass: window_mass_geometric(region, alpha, n, j, 32),
                        stderr: None,
                        backend: Backend::Geometric,
                    }
                };
                push(j, wm.mass, wm.stderr, wm.backend, T::one());
            }
            continue;
        }
        if phi.is_evaluable() {
            let bins = window_masses_mc_generation(phi, alpha, n, opts.samples, opts.seed)?;
            for (j, (mass, stderr)) in bins {
                push(j, mass, Some(stderr), Backend::MonteCarlo, T::one());
            }
            continue;
        }
        return Err(Error::NoBackend);
    }
    let partial = totals.iter().fold(T::zero(), |a, &b| a + b);
    let verdict = schatten_verdict(&totals);
    Ok(WindowReport {
        alpha,
        p,
        n_max,
        entries,
        generation_totals: totals,
        partial_sum: partial,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Carleson window averages and the compactness ratio
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct WindowAverageOptions<T: Real> {
    /// Radial clip for the counting backend (the count integral has a
    /// logarithmic singularity at the boundary for unbounded valence).
    pub clip: T,
    pub radial_nodes: usize,
}

impl<T: Real> Default for WindowAverageOptions<T> {
    fn default() -> Self {
        WindowAverageOptions {
            clip: T::one() - T::of(1e-6),
            radial_nodes: 24,
        }
    }
}

/// Normalized area of the Carleson window W(xi, h).
pub fn carleson_window_area<T: Real>(h: T) -> T {
    h * h * (T::of(2.0) - h)
}

/// Average of the counting function over the Carleson window W(xi, h):
/// (1 / A[W]) int_W n_phi dA. Counting and region backends.
pub fn carleson_window_average<T: Real>(
    phi: &Symbol<T>,
    xi_angle: T,
    h: T,
    opts: &WindowAverageOptions<T>,
) -> Result<T> {
    if !(h > T::zero() && h < T::of(2.0)) {
        return Err(Error::InvalidParameter("window size must lie in (0, 2)".into()));
    }
    let th_lo = xi_angle - T::PI() * h;
    let th_hi = xi_angle + T::PI() * h;
    let area = carleson_window_area(h);
    if let Some(model) = &phi.valence_model {
        // integral in x = -ln r: dA = e^{-2x} dx dtheta / pi, with log-spaced
        // panels against the 1/x growth of the count near the boundary.
        let x_lo = -(opts.clip.ln());
        let x_hi = -(T::one() - h).ln();
        if x_hi <= x_lo {
            return Err(Error::InvalidParameter(
                "window shallower than the radial clip".into(),
            ));
        }
        let panels = 20usize;
        let ratio = (x_hi / x_lo).ln() / T::of_usize(panels);
        let mut acc = T::zero();
        for k in 0..panels {
            let a = x_lo * (ratio * T::of_usize(k)).exp();
            let b = x_lo * (ratio * T::of_usize(k + 1)).exp();
            let (nodes, weights) = gauss_legendre_on(opts.radial_nodes, a, b);
            for (&x, &w) in nodes.iter().zip(&weights) {
                let count = model.angular_count_integral(x, th_lo, th_hi);
                acc = acc + w * (-T::of(2.0) * x).exp() * count;
            }
        }
        return Ok(acc / T::PI() / area);
    }
    if let Some(region) = &phi.image_region {
        let (nodes, weights) = gauss_legendre_on(opts.radial_nodes * 4, T::one() - h, T::one());
        let mut acc = T::zero();
        // the window arc in [0, 2 pi), possibly wrapping
        let period = two_pi::<T>();
        let mut lo = th_lo % period;
        if lo < T::zero() {
            lo = lo + period;
        }
        let width = th_hi - th_lo;
        for (&r, &w) in nodes.iter().zip(&weights) {
            let section = to_absolute_intervals(&region.theta_section(r));
            let mut len = overlap_length(&section, lo, (lo + width).min(period));
            if lo + width > period {
                len = len + overlap_length(&section, T::zero(), lo + width - period);
            }
            acc = acc + w * r * len;
        }
        return Ok(acc / T::PI() / area);
    }
    Err(Error::NoBackend)
}

/// log(1/(1-|phi(a)|^2)) / log(1/(1-|a|^2)): vanishing of the sup over
/// |a| = r as r -> 1 is necessary for compactness on the Dirichlet space.
pub fn compactness_ratio<T: Real>(phi: &Symbol<T>, a: Complex<T>) -> Result<T> {
    let r = a.norm();
    if !(r > T::zero() && r < T::one()) {
        return Err(Error::InvalidParameter(
            "ratio needs 0 < |a| < 1".into(),
        ));
    }
    let v = phi.eval(a)?;
    let num = -(T::one() - v.norm_sqr()).ln();
    let den = -(T::one() - r * r).ln();
    Ok(num / den)
}

/// sup of the compactness ratio over a theta grid at each radius.
pub fn compactness_sweep<T: Real>(
    phi: &Symbol<T>,
    radii: &[T],
    angular_samples: usize,
) -> Result<Vec<(T, T)>> {
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut sup = T::neg_infinity();
        for k in 0..angular_samples {
            let theta = two_pi::<T>() * T::of_usize(k) / T::of_usize(angular_samples);
            let ratio = compactness_ratio(phi, Complex::from_polar(r, theta))?;
            if ratio > sup {
                sup = ratio;
            }
        }
        out.push((r, sup));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Schwarz window comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SchwarzEntry<T> {
    pub sector: u64,
    pub mass_alpha: T,
    pub mass_beta: T,
    pub bound: T,
}

#[derive(Debug, Clone)]
pub struct SchwarzReport<T> {
    pub generation: u32,
    pub entries: Vec<SchwarzEntry<T>>,
}

/// Check mass_beta(n,j) <= (2^{1-n})^{beta-alpha} mass_alpha(n,j) for all
/// computed sectors, with common random numbers on the Monte Carlo path and
/// shared quadrature nodes on the geometric path.
pub fn schwarz_window_comparison<T: Real>(
    phi: &Symbol<T>,
    alpha: T,
    beta: T,
    n: u32,
    samples: usize,
    seed: u64,
) -> Result<SchwarzReport<T>> {
    if beta < alpha {
        return Err(Error::InvalidParameter("need beta >= alpha".into()));
    }
    let bound_factor = T::of(2.0f64.powi(1 - n as i32)).powf(beta - alpha);
    let mut entries = Vec::new();
    if let Some(region) = &phi.image_region {
        for j in candidate_sectors(region, n) {
            let mass_alpha = window_mass_geometric(region, alpha, n, j, 32);
            let mass_beta = window_mass_geometric(region, beta, n, j, 32);
            entries.push(SchwarzEntry {
                sector: j,
                mass_alpha,
                mass_beta,
                bound: bound_factor * mass_alpha,
            });
            if mass_beta > bound_factor * mass_alpha * (T::one() + T::of(1e-9)) {
                return Err(Error::SchwarzComparisonFailed {
                    generation: n,
                    sector: j,
                });
            }
        }
        return Ok(SchwarzReport {
            generation: n,
            entries,
        });
    }
    if !phi.fixes_origin {
        return Err(Error::OriginNotFixed);
    }
    let bins_alpha = window_masses_mc_generation(phi, alpha, n, samples, seed)?;
    let bins_beta = window_masses_mc_generation(phi, beta, n, samples, seed)?;
    for (&j, &(ma, sa)) in &bins_alpha {
        let (mb, sb) = bins_beta.get(&j).copied().unwrap_or((T::zero(), T::zero()));
        let bound = bound_factor * ma;
        entries.push(SchwarzEntry {
            sector: j,
            mass_alpha: ma,
            mass_beta: mb,
            bound,
        });
        let slack = T::of(3.0) * (sb + bound_factor * sa);
        if mb > bound + slack + T::of(1e-12) {
            return Err(Error::SchwarzComparisonFailed {
                generation: n,
                sector: j,
            });
        }
    }
    Ok(SchwarzReport {
        generation: n,
        entries,
    })
}

/// Export a symbol as a sampled Taylor series (for handing f and q to the
/// matrix machinery).
pub fn symbol_series<T: Real + FftNum>(
    phi: &Symbol<T>,
    rho: T,
    order: usize,
    samples: usize,
) -> Result<TaylorSeries<T>> {
    series_from_samples(|z| phi.eval(z).unwrap_or(Complex::new(T::nan(), T::nan())), rho, order, samples)
}

/// Frobenius cross-check value: sum over columns of the degree-restricted
/// weighted norms, which must match schatten(2)^2 of the truncation.
pub fn frobenius_by_columns<T: Real + FftNum>(
    phi: &Symbol<T>,
    order: usize,
    alpha: T,
    rho: T,
) -> Result<T> {
    let base = symbol_series(phi, rho, order, sample_count_for(order, rho))?;
    let weights = monomial_weights(order, alpha)?;
    let mut total = T::zero();
    for n in 1..=order {
        let pow = crate::series::series_power(&base, n as u32, order)?;
        let norm_restricted = dirichlet_norm_sq(&pow, alpha)? - pow.coeff(0).norm_sqr();
        total = total + norm_restricted / weights[n - 1];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{Profile, SeparationSeq};

    type C = Complex<f64>;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn identity_matrix_is_identity() {
        let id = Symbol::<f64>::identity();
        let m = build_matrix(&id, 8, 0.0, 0.5).unwrap();
        for r in 1..=8 {
            for c in 1..=8 {
                let expect = if r == c { 1.0 } else { 0.0 };
                close(m.entry(r, c).re, expect, 1e-12);
                close(m.entry(r, c).im, 0.0, 1e-12);
            }
        }
        let s = singular_values(&m);
        for &v in &s.values {
            close(v, 1.0, 1e-12);
        }
    }

    #[test]
    fn squaring_map_matrix_and_spectrum() {
        // phi = z^2: column n supported on row 2n with value sqrt(2n/n) = sqrt 2
        let sq = Symbol::monomial(2, C::new(1.0, 0.0)).unwrap();
        let m = build_matrix(&sq, 16, 0.0, 0.7).unwrap();
        for c in 1..=8 {
            close(m.entry(2 * c, c).re, 2.0f64.sqrt(), 1e-10);
        }
        close(m.entry(3, 1).norm(), 0.0, 1e-12);
        let s = singular_values(&m);
        for &v in s.values.iter().take(8) {
            close(v, 2.0f64.sqrt(), 1e-8);
        }
    }

    #[test]
    fn half_map_is_diagonal_with_geometric_spectrum() {
        let half = Symbol::monomial(1, C::new(0.5, 0.0)).unwrap();
        let m = build_matrix(&half, 12, 0.0, 0.6).unwrap();
        let s = singular_values(&m);
        for (k, &v) in s.values.iter().enumerate() {
            close(v, 0.5f64.powi(k as i32 + 1), 1e-10);
        }
        // schatten(2)^2 = Frobenius
        close(s.schatten(2.0).powi(2), m.frobenius_sq(), 1e-10);
    }

    #[test]
    fn interlacing_under_truncation() {
        let cusp = Symbol::<f64>::cusp_map();
        let big = build_matrix(&cusp, 96, 0.0, 0.95).unwrap();
        let small = big.leading(48);
        let s_big = singular_values(&big);
        let s_small = singular_values(&small);
        for k in 0..48 {
            assert!(
                s_small.values[k] <= s_big.values[k] + 1e-10,
                "interlacing fails at {k}"
            );
        }
    }

    #[test]
    fn frobenius_identity_against_column_norms() {
        let cusp = Symbol::<f64>::cusp_map();
        let order = 32;
        let m = build_matrix(&cusp, order, 0.0, 0.9).unwrap();
        let direct = m.frobenius_sq();
        let by_columns = frobenius_by_columns(&cusp, order, 0.0, 0.9).unwrap();
        close(direct, by_columns, 1e-6 * (1.0 + direct));
    }

    #[test]
    fn hs_norm_series_half_map() {
        // sum_n ||(z/2)^n||^2 / n = sum 4^{-n} = 1/3
        let half = Symbol::monomial(1, C::new(0.5, 0.0)).unwrap();
        let est = hs_norm_series(&half, 24, 0.5).unwrap();
        assert!(!est.flagged_divergent);
        close(est.value, 1.0 / 3.0, 1e-6);

        // phi = z^2/2: sum 2n 4^{-n} / n = 2/3
        let sq_half = Symbol::monomial(2, C::new(0.5, 0.0)).unwrap();
        let est = hs_norm_series(&sq_half, 24, 0.5).unwrap();
        close(est.value, 2.0 / 3.0, 1e-6);
    }

    #[test]
    fn hs_norm_series_flags_identity() {
        let id = Symbol::<f64>::identity();
        let est = hs_norm_series(&id, 32, 0.9).unwrap();
        assert!(est.flagged_divergent);
    }

    #[test]
    fn hs_norm_integral_half_map() {
        let half = Symbol::monomial(1, C::new(0.5, 0.0)).unwrap();
        let est = hs_norm_integral(&half, &[8, 14, 20, 26]).unwrap();
        assert!(est.stable);
        close(est.value, 1.0 / 3.0, 1e-7);
    }

    #[test]
    fn hs_norm_integral_flags_identity() {
        let id = Symbol::<f64>::identity();
        assert!(matches!(
            hs_norm_integral(&id, &[4, 8, 12, 16]),
            Err(Error::HsIntegralDivergent)
        ));
    }

    #[test]
    fn identity_window_mass_is_plain_area() {
        let id = Symbol::<f64>::identity();
        for n in 1..=6u32 {
            for j in [0u64, 1, (1 << n) - 1] {
                let wm = window_mass(&id, 0.0, n, j, 0, 0).unwrap();
                let (r_lo, r_hi, _, _) = window_bounds::<f64>(n, j);
                let expect = (r_hi * r_hi - r_lo * r_lo) / 2f64.powi(n as i32);
                close(wm.mass, expect, 1e-12);
            }
        }
    }

    #[test]
    fn separation_formula_matches_geometric_quadrature() {
        let sep = Symbol::separation(SeparationSeq::Power { p1: 2.0f64 });
        for n in 1..=10u32 {
            let formula = window_mass(&sep, 0.0, n, 0, 0, 0).unwrap();
            assert_eq!(formula.backend, Backend::GeometricFormula);
            let quad =
                window_mass_with(&sep, 0.0, n, 0, 0, 0, ForcedBackend::Geometric).unwrap();
            close(quad.mass, formula.mass, 1e-3 * formula.mass);
        }
    }

    #[test]
    fn separation_monte_carlo_agrees_with_geometry() {
        let sep = Symbol::separation(SeparationSeq::Power { p1: 2.0f64 });
        for n in [2u32, 5, 8] {
            let geo = window_mass(&sep, 0.0, n, 0, 0, 0).unwrap();
            let mc =
                window_mass_with(&sep, 0.0, n, 0, 200_000, 11, ForcedBackend::MonteCarlo)
                    .unwrap();
            let se = mc.stderr.unwrap();
            assert!(
                (mc.mass - geo.mass).abs() <= 3.0 * se + 1e-12,
                "n={n}: {} vs {} (se {se})",
                mc.mass,
                geo.mass
            );
        }
    }

    #[test]
    fn identity_monte_carlo_agrees_with_area() {
        let id = Symbol::<f64>::identity();
        let n = 4u32;
        let j = 3u64;
        let mc = window_mass_with(&id, 0.0, n, j, 400_000, 5, ForcedBackend::MonteCarlo).unwrap();
        let exact = window_mass(&id, 0.0, n, j, 0, 0).unwrap().mass;
        let se = mc.stderr.unwrap();
        assert!((mc.mass - exact).abs() <= 4.0 * se, "{} vs {exact}", mc.mass);
    }

    #[test]
    fn counting_backend_matches_brute_force_grid() {
        let comb = Symbol::comb(Profile::<f64>::OneOverT, Profile::OneOverT).unwrap();
        let model = comb.valence_model.as_ref().unwrap();
        let n = 3u32;
        let j = 1u64;
        let analytic = window_mass(&comb, 0.0, n, j, 0, 0).unwrap();
        // brute force: Riemann sum over (r, theta)
        let (r_lo, r_hi, th_lo, th_hi) = window_bounds::<f64>(n, j);
        let (nr, nt) = (400, 400);
        let mut acc = 0.0;
        for ir in 0..nr {
            let r = r_lo + (r_hi - r_lo) * (ir as f64 + 0.5) / nr as f64;
            let x = -(r.ln());
            for it in 0..nt {
                let theta = th_lo + (th_hi - th_lo) * (it as f64 + 0.5) / nt as f64;
                acc += model.count(x, theta) as f64 * r;
            }
        }
        let brute = acc * (r_hi - r_lo) * (th_hi - th_lo) / (nr * nt) as f64
            / std::f64::consts::PI;
        close(analytic.mass, brute, 0.02 * brute);
    }

    #[test]
    fn schatten_separation_verdicts() {
        // h_n = (n+1)^{-1} (p1 = 2): diverging at p = 2, converging at 2.4
        let sep = Symbol::separation(SeparationSeq::Power { p1: 2.0f64 });
        let at2 = schatten_sum(&sep, 0.0, 2.0, 20, &SchattenOptions::default()).unwrap();
        assert_eq!(at2.verdict, SchattenVerdict::Diverging);
        let at24 = at2.with_exponent(2.4);
        assert_eq!(at24.verdict, SchattenVerdict::Converging);
        let at16 = at2.with_exponent(1.6);
        assert_eq!(at16.verdict, SchattenVerdict::Diverging);

        // generation totals at p = 2 behave like h_n / (2 pi)
        for n in [5usize, 10, 15] {
            let expect = 1.0 / (n as f64 + 1.0) / (2.0 * std::f64::consts::PI);
            close(at2.generation_totals[n], expect, 0.05 * expect);
        }
    }

    #[test]
    fn schatten_no_class_sequence_diverges_at_all_p() {
        let sep = Symbol::separation(SeparationSeq::InvLog);
        let base = schatten_sum(&sep, 0.0, 0.5, 20, &SchattenOptions::default()).unwrap();
        for p in [0.5, 1.0, 2.0, 4.0] {
            let rep = base.with_exponent(p);
            assert_eq!(
                rep.verdict,
                SchattenVerdict::Diverging,
                "p = {p}: totals {:?}",
                &rep.generation_totals[16..]
            );
        }
    }

    #[test]
    fn cusp_generation_totals_decay_like_two_to_minus_np2() {
        // window masses scale like 8^{-n}, so the generation totals
        // sum_j [4^n mass]^{p/2} decay like 2^{-np/2}
        let cusp = Symbol::<f64>::cusp_map();
        let rep = schatten_sum(&cusp, 0.0, 1.0, 10, &SchattenOptions::default()).unwrap();
        assert_eq!(rep.verdict, SchattenVerdict::Converging);
        let r = rep.generation_totals[9] / rep.generation_totals[8];
        close(r, 0.5f64.sqrt(), 0.08);
    }

    #[test]
    fn window_average_for_identity_is_one() {
        let id = Symbol::<f64>::identity();
        for h in [0.25, 0.1, 0.01] {
            let avg =
                carleson_window_average(&id, 0.0, h, &WindowAverageOptions::default()).unwrap();
            close(avg, 1.0, 1e-6);
        }
    }

    #[test]
    fn window_average_univalent_comb_stays_bounded() {
        let comb = Symbol::comb(
            Profile::<f64>::OneOverT,
            Profile::Const(2.0 * std::f64::consts::PI),
        )
        .unwrap();
        for n in 2..=10u32 {
            let h = 2.0f64.powi(-(n as i32));
            let avg =
                carleson_window_average(&comb, 0.0, h, &WindowAverageOptions::default()).unwrap();
            assert!(avg > 0.5 && avg < 1.5, "h=2^-{n}: {avg}");
        }
    }

    #[test]
    fn window_average_unbounded_comb_grows() {
        let comb = Symbol::comb(Profile::<f64>::OneOverT, Profile::OneOverT).unwrap();
        let mut last = 0.0;
        for n in 2..=10u32 {
            let h = 2.0f64.powi(-(n as i32));
            let avg =
                carleson_window_average(&comb, 0.0, h, &WindowAverageOptions::default()).unwrap();
            assert!(avg > last, "averages must grow: {avg} after {last}");
            last = avg;
        }
    }

    #[test]
    fn compactness_ratio_examples() {
        let id = Symbol::<f64>::identity();
        close(compactness_ratio(&id, C::new(0.5, 0.3)).unwrap(), 1.0, 1e-12);

        // z^2: ratio -> 1 as |a| -> 1
        let sq = Symbol::monomial(2, C::new(1.0, 0.0)).unwrap();
        let near = compactness_ratio(&sq, C::new(0.999, 0.0)).unwrap();
        assert!(near > 0.85 && near < 1.0);

        // cusp: sweep decreasing toward 0
        let cusp = Symbol::<f64>::cusp_map();
        let sweep = compactness_sweep(&cusp, &[0.9, 0.99, 0.999], 64).unwrap();
        assert!(sweep[0].1 > sweep[1].1 && sweep[1].1 > sweep[2].1);
        assert!(sweep[2].1 < 0.2, "sup ratio at 0.999: {}", sweep[2].1);
    }

    #[test]
    fn schwarz_comparison_identity_and_cusp() {
        let id = Symbol::<f64>::identity();
        // geometric path (identity has a region model): exact inequality
        let rep = schwarz_window_comparison(&id, 0.0, 2.0, 5, 0, 0).unwrap();
        assert!(!rep.entries.is_empty());

        let cusp = Symbol::<f64>::cusp_map();
        let rep = schwarz_window_comparison(&cusp, 0.0, 2.0, 6, 0, 0).unwrap();
        assert!(!rep.entries.is_empty());

        // Monte Carlo path with common random numbers: alpha = beta gives
        // exact equality
        let plain = Symbol::monomial(2, C::new(1.0, 0.0)).unwrap();
        let rep = schwarz_window_comparison(&plain, 1.0, 1.0, 3, 50_000, 3).unwrap();
        for e in &rep.entries {
            close(e.mass_alpha, e.mass_beta, 1e-14);
        }
    }

    #[test]
    fn csv_outputs_are_deterministic() {
        let sep = Symbol::separation(SeparationSeq::Power { p1: 2.0f64 });
        let a = schatten_sum(&sep, 0.0, 2.0, 8, &SchattenOptions::default())
            .unwrap()
            .to_csv();
        let b = schatten_sum(&sep, 0.0, 2.0, 8, &SchattenOptions::default())
            .unwrap()
            .to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with("alpha,n,j,mass,stderr,backend\n"));
    }
}
