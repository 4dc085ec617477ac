//! Disk and circle quadrature under the normalized conventions
//! A(D) = 1 and m(T) = 1.
//!
//! The default disk rule is a Gauss-Legendre tensor rule in (r^2, theta):
//! the substitution u = r^2 absorbs the area Jacobian, and the radial range
//! is split into dyadic bands accumulating toward the clip radius so that
//! boundary-concentrated integrands are resolved at every scale.

use num_complex::Complex;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; plenty for the orders
/// used here (n <= 128).
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::of_usize(n);
    for i in 0..n {
        // Chebyshev-like initial guess.
        let mut x = T::of(
            (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos(),
        );
        let mut dp = T::one();
        for _ in 0..100 {
            // Legendre P_n(x) and P_{n-1}(x) by the Bonnet recurrence.
            let mut p0 = T::one();
            let mut p1 = x;
            for k in 2..=n {
                let kf = T::of_usize(k);
                let p2 = ((T::of(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = T::one();
                p1 = x;
            }
            dp = nf * (x * p1 - p0) / (x * x - T::one());
            let dx = p1 / dp;
            x = x - dx;
            if dx.abs() <= T::of(1e-16) {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = T::of(2.0) / ((T::one() - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let (xs, ws) = gauss_legendre::<T>(n);
    let half = T::of(0.5);
    let mid = (a + b) * half;
    let rad = (b - a) * half;
    (
        xs.iter().map(|&x| mid + rad * x).collect(),
        ws.iter().map(|&w| w * rad).collect(),
    )
}

#[derive(Debug, Clone)]
pub enum RuleKind {
    /// Dyadic radial bands with Gauss-Legendre nodes in u = r^2, tensored
    /// against a uniform angular grid (trapezoid; spectrally accurate for
    /// periodic integrands).
    TensorGaussPolar {
        radial_nodes_per_band: usize,
        angular_nodes: usize,
    },
    /// Uniform nodes on the circle of radius `radius` (default 1).
    BoundaryUniform { nodes: usize },
    /// Uniform sampling of the disk, deterministic in (seed, samples).
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct QuadratureRule<T: Real> {
    pub kind: RuleKind,
    /// Radial cutoff r_max < 1 for singular integrands near the boundary.
    pub radial_clip: T,
}

impl<T: Real> QuadratureRule<T> {
    pub fn tensor(radial_nodes_per_band: usize, angular_nodes: usize, radial_clip: T) -> Self {
        QuadratureRule {
            kind: RuleKind::TensorGaussPolar {
                radial_nodes_per_band,
                angular_nodes,
            },
            radial_clip,
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64, radial_clip: T) -> Self {
        QuadratureRule {
            kind: RuleKind::MonteCarlo { samples, seed },
            radial_clip,
        }
    }

    /// Default smooth-integrand rule: clip so close to 1 that the omitted
    /// annulus is below 1e-8 in area.
    pub fn default_tensor() -> Self {
        QuadratureRule::tensor(16, 128, T::of(1.0 - 1e-9))
    }

    pub fn node_count(&self) -> usize {
        match self.kind {
            RuleKind::TensorGaussPolar {
                radial_nodes_per_band,
                angular_nodes,
            } => radial_nodes_per_band * self.band_count() * angular_nodes,
            RuleKind::BoundaryUniform { nodes } => nodes,
            RuleKind::MonteCarlo { samples, .. } => samples,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.radial_clip > T::zero() && self.radial_clip < T::one()) {
            return Err(Error::InvalidRule(format!(
                "radial_clip must lie in (0, 1), got {}",
                self.radial_clip
            )));
        }
        if self.node_count() == 0 {
            return Err(Error::InvalidRule("node_count must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of dyadic radial bands needed to reach the clip.
    fn band_count(&self) -> usize {
        let gap = (T::one() - self.radial_clip * self.radial_clip).as_f64();
        let k = (-gap.log2()).ceil() as i64;
        k.clamp(1, 60) as usize
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegralEstimate<T> {
    pub value: T,
    /// Standard error, Monte Carlo rules only.
    pub std_err: Option<T>,
    pub nodes: usize,
}

/// Integrate a real-valued integrand over the disk against normalized area.
pub fn disk_integrate<T, F>(integrand: F, rule: &QuadratureRule<T>) -> Result<IntegralEstimate<T>>
where
    T: Real,
    F: Fn(Complex<T>) -> T,
{
    rule.validate()?;
    match rule.kind {
        RuleKind::TensorGaussPolar {
            radial_nodes_per_band,
            angular_nodes,
        } => {
            let u_max = rule.radial_clip * rule.radial_clip;
            let bands = rule.band_count();
            let mut total = T::zero();
            let mut index = 0usize;
            let two_pi = T::of(2.0) * T::PI();
            let m = angular_nodes;
            let theta_w = T::one() / T::of_usize(m);
            // Band k covers u in [1 - 2^-k, 1 - 2^-(k+1)] clipped to u_max.
            let mut lo = T::zero();
            for k in 0..bands {
                let hi = if k + 1 == bands {
                    u_max
                } else {
                    let h = T::one() - T::of(0.5).powi(k as i32 + 1);
                    if h > u_max {
                        u_max
                    } else {
                        h
                    }
                };
                if hi <= lo {
                    break;
                }
                let (us, ws) = gauss_legendre_on(radial_nodes_per_band, lo, hi);
                for (&u, &wu) in us.iter().zip(&ws) {
                    let r = u.sqrt();
                    for j in 0..m {
                        // midpoint offset: never samples the angle-0 ray,
                        // where contact-point integrands concentrate
                        let theta = two_pi * (T::of_usize(j) + T::of(0.5)) * theta_w;
                        let z = Complex::from_polar(r, theta);
                        let v = integrand(z);
                        if !v.is_finite() {
                            return Err(Error::SingularIntegrand);
                        }
                        total = total + wu * theta_w * v;
                        index += 1;
                    }
                }
                lo = hi;
            }
            Ok(IntegralEstimate {
                value: total,
                std_err: None,
                nodes: index,
            })
        }
        RuleKind::MonteCarlo { samples, seed } => {
            let u_max = rule.radial_clip * rule.radial_clip;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sum = T::zero();
            let mut sum_sq = T::zero();
            let two_pi = T::of(2.0) * T::PI();
            for i in 0..samples {
                let u = unit_uniform::<T>(&mut rng) * u_max;
                let theta = unit_uniform::<T>(&mut rng) * two_pi;
                let z = Complex::from_polar(u.sqrt(), theta);
                let v = integrand(z);
                if !v.is_finite() {
                    let _ = i;
                    return Err(Error::SingularIntegrand);
                }
                sum = sum + v;
                sum_sq = sum_sq + v * v;
            }
            let n = T::of_usize(samples);
            let mean = sum / n;
            // Estimate of int over the clipped disk; scale by its area.
            let value = mean * u_max;
            let var = (sum_sq / n - mean * mean).max(T::zero());
            let std_err = (var / n).sqrt() * u_max;
            Ok(IntegralEstimate {
                value,
                std_err: Some(std_err),
                nodes: samples,
            })
        }
        RuleKind::BoundaryUniform { .. } => Err(Error::InvalidRule(
            "boundary-uniform rules integrate over the circle, not the disk".into(),
        )),
    }
}

/// Average of a function over the unit circle against normalized arc length.
pub fn circle_average<T, F>(f: F, nodes: usize) -> Result<T>
where
    T: Real,
    F: Fn(Complex<T>) -> T,
{
    if nodes == 0 {
        return Err(Error::InvalidRule("node_count must be >= 1".into()));
    }
    let two_pi = T::of(2.0) * T::PI();
    let mut sum = T::zero();
    for k in 0..nodes {
        let theta = two_pi * T::of_usize(k) / T::of_usize(nodes);
        let v = f(Complex::from_polar(T::one(), theta));
        if !v.is_finite() {
            return Err(Error::EvaluationFailure { index: k });
        }
        sum = sum + v;
    }
    Ok(sum / T::of_usize(nodes))
}

/// Uniform draw from [0, 1) with a fixed 53-bit mapping, so that results
/// are bit-stable across platforms and crate versions.
pub(crate) fn unit_uniform<T: Real>(rng: &mut ChaCha8Rng) -> T {
    let x = rng.next_u64() >> 11;
    T::of(x as f64 * (1.0 / 9007199254740992.0))
}
