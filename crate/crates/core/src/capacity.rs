//! Logarithmic potential theory on circle compacts.
//!
//! Kernel convention: log(e / |z - w|), so the whole circle has energy 1 and
//! capacity e^{-1}. Measures are piecewise-uniform densities on arc panels;
//! panel-pair energies are evaluated through the primitives of
//! log|2 sin(x/2)|, which keeps adjacent and self panels exact instead of
//! relying on near-singular tensor quadrature.

pub mod qp;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::scalar::Real;

fn two_pi<T: Real>() -> T {
    T::of(2.0) * T::PI()
}

/// Reduce an angle difference to (-pi, pi].
fn reduce_angle<T: Real>(x: T) -> T {
    let period = two_pi::<T>();
    let k = (x / period).round();
    let mut r = x - k * period;
    if r <= -T::PI() {
        r = r + period;
    }
    if r > T::PI() {
        r = r - period;
    }
    r
}

// ---------------------------------------------------------------------------
// Arc sets
// ---------------------------------------------------------------------------

/// Disjoint closed arcs on the unit circle, stored as (start, length) with
/// start in [0, 2 pi). Zero-length arcs represent points.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcSet<T: Real> {
    arcs: Vec<(T, T)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArcSetJson {
    arcs: Vec<[f64; 2]>,
}

/// Cantor-type construction: at level k each arc keeps two end pieces of
/// relative length ratio_k.
#[derive(Debug, Clone)]
pub struct CantorSpec<T: Real> {
    pub ratios: RatioSpec<T>,
    pub depth: usize,
    /// Base arc as (start, length); defaults to the upper half-circle.
    pub base: (T, T),
}

#[derive(Debug, Clone)]
pub enum RatioSpec<T: Real> {
    List(Vec<T>),
    /// ratio_k = 4^(-2^k): capacity-zero in the limit.
    SuperSparse,
}

impl<T: Real> CantorSpec<T> {
    pub fn super_sparse(depth: usize) -> Self {
        CantorSpec {
            ratios: RatioSpec::SuperSparse,
            depth,
            base: (T::zero(), T::PI()),
        }
    }

    pub fn ratio(&self, level: usize) -> Result<T> {
        let r = match &self.ratios {
            RatioSpec::List(v) => *v
                .get((level - 1).min(v.len().saturating_sub(1)))
                .ok_or_else(|| Error::InvalidParameter("empty ratio list".into()))?,
            RatioSpec::SuperSparse => {
                let expo = -(2f64.powi(level as i32)) * 4f64.ln();
                T::of(expo.exp())
            }
        };
        if !(r > T::zero() && r <= T::of(0.5)) {
            return Err(Error::InvalidParameter(format!(
                "Cantor ratio at level {level} must lie in (0, 1/2], got {r}"
            )));
        }
        Ok(r)
    }
}

impl<T: Real> ArcSet<T> {
    pub fn full_circle() -> Self {
        ArcSet {
            arcs: vec![(T::zero(), two_pi())],
        }
    }

    /// Build from raw [start, end] pairs (radians); arcs are normalized,
    /// sorted, and merged.
    pub fn from_arcs(raw: &[(T, T)]) -> Result<Self> {
        let mut arcs = Vec::with_capacity(raw.len());
        for &(a, b) in raw {
            let len = b - a;
            if len < T::zero() {
                return Err(Error::InvalidArcSet(format!(
                    "arc end {b} precedes start {a}"
                )));
            }
            if len >= two_pi::<T>() {
                return Ok(ArcSet::full_circle());
            }
            arcs.push((normalize_start(a), len));
        }
        Ok(merge_arcs(arcs))
    }

    pub fn from_points(points: &[T]) -> Self {
        let arcs = points.iter().map(|&p| (normalize_start(p), T::zero())).collect();
        merge_arcs(arcs)
    }

    pub fn cantor(spec: &CantorSpec<T>) -> Result<Self> {
        let mut arcs = vec![spec.base];
        for level in 1..=spec.depth {
            let ratio = spec.ratio(level)?;
            let mut next = Vec::with_capacity(arcs.len() * 2);
            for &(a, len) in &arcs {
                let piece = len * ratio;
                if piece <= T::zero() {
                    return Err(Error::InvalidParameter(
                        "Cantor arcs underflow at this depth".into(),
                    ));
                }
                next.push((a, piece));
                next.push((a + len - piece, piece));
            }
            arcs = next;
        }
        ArcSet::from_arcs(
            &arcs
                .iter()
                .map(|&(a, l)| (a, a + l))
                .collect::<Vec<_>>(),
        )
    }

    pub fn arcs(&self) -> &[(T, T)] {
        &self.arcs
    }

    pub fn total_length(&self) -> T {
        self.arcs.iter().fold(T::zero(), |acc, &(_, l)| acc + l)
    }

    pub fn is_full_circle(&self) -> bool {
        self.arcs.len() == 1 && self.arcs[0].1 >= two_pi::<T>() - T::of(1e-12)
    }

    /// Angular distance from angle theta to the set (0 on the set).
    pub fn angular_distance(&self, theta: T) -> T {
        let mut best = T::infinity();
        for &(a, len) in &self.arcs {
            let rel = reduce_angle(theta - (a + len * T::of(0.5)));
            let d = (rel.abs() - len * T::of(0.5)).max(T::zero());
            if d < best {
                best = d;
            }
        }
        best
    }

    /// Euclidean (chordal) distance from e^{i theta} to the set.
    pub fn chordal_distance(&self, theta: T) -> T {
        let ang = self.angular_distance(theta);
        T::of(2.0) * (ang * T::of(0.5)).sin()
    }

    /// Chordal fattening: K_eps = { z : dist(z, K) <= eps }, realized as arc
    /// half-width 2 asin(eps/2) around each component, overlaps merged.
    pub fn fatten(&self, eps: T) -> Self {
        if eps >= T::of(2.0) {
            return ArcSet::full_circle();
        }
        if eps <= T::zero() {
            return self.clone();
        }
        let d = T::of(2.0) * (eps * T::of(0.5)).asin();
        let widened: Vec<(T, T)> = self
            .arcs
            .iter()
            .map(|&(a, len)| (normalize_start(a - d), len + T::of(2.0) * d))
            .collect();
        merge_arcs(widened)
    }

    pub fn to_json(&self) -> String {
        let mirror = ArcSetJson {
            arcs: self
                .arcs
                .iter()
                .map(|&(a, l)| [a.as_f64(), (a + l).as_f64()])
                .collect(),
        };
        serde_json::to_string(&mirror).expect("arc serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mirror: ArcSetJson = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("arc-set JSON: {e}")))?;
        ArcSet::from_arcs(
            &mirror
                .arcs
                .iter()
                .map(|p| (T::of(p[0]), T::of(p[1])))
                .collect::<Vec<_>>(),
        )
    }
}

fn normalize_start<T: Real>(a: T) -> T {
    let period = two_pi::<T>();
    let mut x = a % period;
    if x < T::zero() {
        x = x + period;
    }
    if x >= period {
        x = x - period;
    }
    x
}

fn merge_arcs<T: Real>(mut arcs: Vec<(T, T)>) -> ArcSet<T> {
    if arcs.is_empty() {
        return ArcSet { arcs };
    }
    arcs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let period = two_pi::<T>();
    let mut merged: Vec<(T, T)> = Vec::with_capacity(arcs.len());
    for (a, len) in arcs {
        match merged.last_mut() {
            Some(last) if a <= last.0 + last.1 => {
                let end = (a + len).max(last.0 + last.1);
                last.1 = end - last.0;
            }
            _ => merged.push((a, len)),
        }
    }
    // wraparound merge between last and first
    if merged.len() > 1 {
        let first = merged[0];
        let last = *merged.last().unwrap();
        if last.0 + last.1 >= first.0 + period {
            let end = (last.0 + last.1).max(first.0 + period + first.1);
            merged[0] = (last.0, end - last.0);
            merged.pop();
            let moved = merged.remove(0);
            merged.push(moved);
            merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        }
    }
    let total: T = merged.iter().fold(T::zero(), |acc, &(_, l)| acc + l);
    if total >= period {
        return ArcSet::full_circle();
    }
    ArcSet { arcs: merged }
}

// ---------------------------------------------------------------------------
// Log-sine primitives
// ---------------------------------------------------------------------------

/// Primitives of l(x) = log|2 sin(x/2)|, the circle log-kernel in angles:
/// G = int_0^x l, H = int_0^x G. Both are 2 pi periodic (the kernel has zero
/// mean), G odd, H even; the log singularity is split off in closed form and
/// the smooth remainder integrated by a fixed Gauss rule.
pub(crate) struct LogSineKernel<T: Real> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

fn psi<T: Real>(u: T) -> T {
    // log| 2 sin(u/2) / u |, smooth on (-2 pi, 2 pi), psi(0) = 0.
    let x = u.abs();
    if x < T::of(1e-8) {
        // 2 sin(u/2)/u = 1 - u^2/24 + ...
        return -(x * x) / T::of(24.0);
    }
    ((T::of(2.0) * (x * T::of(0.5)).sin()) / x).abs().ln()
}

impl<T: Real> LogSineKernel<T> {
    pub fn new() -> Self {
        let (nodes, weights) = gauss_legendre::<T>(24);
        // map to [0, 1]
        let nodes = nodes.iter().map(|&x| (x + T::one()) * T::of(0.5)).collect();
        let weights = weights.iter().map(|&w| w * T::of(0.5)).collect();
        LogSineKernel { nodes, weights }
    }

    /// l(x) itself.
    pub fn ell(&self, x: T) -> T {
        let r = reduce_angle(x).abs();
        if r == T::zero() {
            return T::neg_infinity();
        }
        (T::of(2.0) * (r * T::of(0.5)).sin()).ln()
    }

    /// G(x) = int_0^x log|2 sin(u/2)| du, periodic odd.
    pub fn g(&self, x: T) -> T {
        let r = reduce_angle(x);
        let a = r.abs();
        if a == T::zero() {
            return T::zero();
        }
        let mut smooth = T::zero();
        for (&s, &w) in self.nodes.iter().zip(&self.weights) {
            smooth = smooth + w * psi(a * s);
        }
        let val = a * (a.ln() - T::one()) + a * smooth;
        if r < T::zero() {
            -val
        } else {
            val
        }
    }

    /// H(x) = int_0^x G(u) du, periodic even.
    pub fn h(&self, x: T) -> T {
        let a = reduce_angle(x).abs();
        if a == T::zero() {
            return T::zero();
        }
        let mut smooth = T::zero();
        for (&s, &w) in self.nodes.iter().zip(&self.weights) {
            smooth = smooth + w * (T::one() - s) * psi(a * s);
        }
        a * a * (a.ln() * T::of(0.5) - T::of(0.75)) + a * a * smooth
    }
}

// ---------------------------------------------------------------------------
// Panel measures
// ---------------------------------------------------------------------------

/// A probability measure on the circle: nonnegative weights on arcs, each
/// carrying a uniform density on its subarc. Zero-length panels are atoms;
/// they make potentials and energies infinite and exist as an error path.
#[derive(Debug, Clone)]
pub struct PanelMeasure<T: Real> {
    panels: Vec<Panel<T>>,
}

#[derive(Debug, Clone, Copy)]
pub struct Panel<T: Real> {
    pub start: T,
    pub len: T,
    pub weight: T,
}

impl<T: Real> Panel<T> {
    pub fn midpoint(&self) -> T {
        self.start + self.len * T::of(0.5)
    }
}

impl<T: Real> PanelMeasure<T> {
    pub fn new(panels: Vec<Panel<T>>) -> Result<Self> {
        let mut total = T::zero();
        for p in &panels {
            if p.weight < T::zero() || p.len < T::zero() {
                return Err(Error::InvalidMeasure(
                    "weights and panel lengths must be nonnegative".into(),
                ));
            }
            total = total + p.weight;
        }
        if (total - T::one()).abs() > T::of(1e-12) {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(PanelMeasure { panels })
    }

    /// Uniform (arc-length) probability measure on the set.
    pub fn uniform_on(set: &ArcSet<T>, total_panels: usize) -> Result<Self> {
        let counts = distribute_panels(set, total_panels)?;
        let total_len = set.total_length();
        if total_len <= T::zero() {
            return Err(Error::InvalidMeasure(
                "uniform measure needs positive total length".into(),
            ));
        }
        let mut panels = Vec::with_capacity(total_panels);
        for (&(a, len), &m) in set.arcs().iter().zip(&counts) {
            for k in 0..m {
                let lo = a + len * T::of_usize(k) / T::of_usize(m);
                let hi = a + len * T::of_usize(k + 1) / T::of_usize(m);
                panels.push(Panel {
                    start: lo,
                    len: hi - lo,
                    weight: (hi - lo) / total_len,
                });
            }
        }
        renormalize(&mut panels);
        Ok(PanelMeasure { panels })
    }

    /// Probability measure with density proportional to `density` (sampled
    /// at panel midpoints) against arc length.
    pub fn from_density(
        set: &ArcSet<T>,
        total_panels: usize,
        density: impl Fn(T) -> T,
    ) -> Result<Self> {
        let base = PanelMeasure::uniform_on(set, total_panels)?;
        let mut panels = base.panels;
        let mut total = T::zero();
        for p in &mut panels {
            let d = density(p.midpoint());
            if d < T::zero() {
                return Err(Error::InvalidMeasure("density must be nonnegative".into()));
            }
            p.weight = d * p.len;
            total = total + p.weight;
        }
        if total <= T::zero() {
            return Err(Error::InvalidMeasure("density integrates to zero".into()));
        }
        for p in &mut panels {
            p.weight = p.weight / total;
        }
        Ok(PanelMeasure { panels })
    }

    /// Atomic measure: point masses (an error path for energies).
    pub fn atoms(points: &[T], weights: &[T]) -> Result<Self> {
        let panels = points
            .iter()
            .zip(weights)
            .map(|(&p, &w)| Panel {
                start: normalize_start(p),
                len: T::zero(),
                weight: w,
            })
            .collect();
        PanelMeasure::new(panels)
    }

    pub fn panels(&self) -> &[Panel<T>] {
        &self.panels
    }

    pub fn has_atoms(&self) -> bool {
        self.panels
            .iter()
            .any(|p| p.len == T::zero() && p.weight > T::zero())
    }

    /// n-th Fourier coefficient, exact per panel:
    /// mu_hat(n) = sum_i w_i e^{-i n c_i} sinc(n L_i / 2).
    pub fn fourier_coefficient(&self, n: usize) -> Complex<T> {
        let nf = T::of_usize(n);
        let mut acc = Complex::new(T::zero(), T::zero());
        for p in &self.panels {
            let c = p.midpoint();
            let phase = Complex::from_polar(T::one(), -nf * c);
            let x = nf * p.len * T::of(0.5);
            let s = if x.abs() < T::of(1e-30) {
                T::one()
            } else {
                x.sin() / x
            };
            acc = acc + phase * Complex::new(p.weight * s, T::zero());
        }
        acc
    }
}

fn renormalize<T: Real>(panels: &mut [Panel<T>]) {
    let total: T = panels.iter().map(|p| p.weight).fold(T::zero(), |a, b| a + b);
    for p in panels.iter_mut() {
        p.weight = p.weight / total;
    }
}

fn distribute_panels<T: Real>(set: &ArcSet<T>, total_panels: usize) -> Result<Vec<usize>> {
    let arcs = set.arcs();
    if arcs.is_empty() {
        return Err(Error::InvalidArcSet("empty arc set".into()));
    }
    if total_panels < arcs.len() {
        return Err(Error::InvalidParameter(format!(
            "panel_count {total_panels} below arc count {}",
            arcs.len()
        )));
    }
    let total_len = set.total_length();
    let mut counts = vec![1usize; arcs.len()];
    let mut used = arcs.len();
    if total_len > T::zero() {
        for (i, &(_, len)) in arcs.iter().enumerate() {
            let share = ((len / total_len).as_f64() * total_panels as f64).floor() as usize;
            let extra = share.saturating_sub(1);
            counts[i] += extra;
            used += extra;
        }
    }
    // round-robin any remainder onto the longest arcs
    let mut order: Vec<usize> = (0..arcs.len()).collect();
    order.sort_by(|&i, &j| arcs[j].1.partial_cmp(&arcs[i].1).unwrap());
    let mut k = 0;
    while used < total_panels {
        counts[order[k % order.len()]] += 1;
        used += 1;
        k += 1;
    }
    Ok(counts)
}

// ---------------------------------------------------------------------------
// Potentials and energies
// ---------------------------------------------------------------------------

/// Potential U_mu(z) = int log(e / |z - w|) dmu(w).
///
/// Off the circle the kernel is smooth and each panel is integrated by a
/// Gauss rule; on the circle the log singularity is evaluated through the
/// exact primitive, so on-support evaluation (Frostman checks) is safe.
/// A point landing exactly on an atom reports a kernel singularity.
pub fn potential<T: Real>(mu: &PanelMeasure<T>, z: Complex<T>) -> Result<T> {
    let r = z.norm();
    if (r - T::one()).abs() < T::of(1e-13) {
        let theta = z.im.atan2(z.re);
        potential_on_circle(mu, theta, &LogSineKernel::new())
    } else {
        let (nodes, weights) = gauss_legendre::<T>(16);
        let mut acc = T::zero();
        for p in mu.panels() {
            if p.weight == T::zero() {
                continue;
            }
            if p.len == T::zero() {
                let w = Complex::from_polar(T::one(), p.start);
                let d = (z - w).norm();
                if d == T::zero() {
                    return Err(Error::KernelSingularity);
                }
                acc = acc + p.weight * (T::one() - d.ln());
                continue;
            }
            let mid = p.midpoint();
            let half = p.len * T::of(0.5);
            let mut panel_acc = T::zero();
            for (&x, &w) in nodes.iter().zip(&weights) {
                let t = mid + half * x;
                let wpt = Complex::from_polar(T::one(), t);
                let d = (z - wpt).norm();
                panel_acc = panel_acc + w * (T::one() - d.ln());
            }
            acc = acc + p.weight * panel_acc * T::of(0.5);
        }
        Ok(acc)
    }
}

/// Potential at a point of the circle, exact through the log-sine primitive.
pub(crate) fn potential_on_circle<T: Real>(
    mu: &PanelMeasure<T>,
    theta: T,
    kernel: &LogSineKernel<T>,
) -> Result<T> {
    let mut acc = T::zero();
    for p in mu.panels() {
        if p.weight == T::zero() {
            continue;
        }
        if p.len == T::zero() {
            let l = kernel.ell(theta - p.start);
            if l == T::neg_infinity() {
                return Err(Error::KernelSingularity);
            }
            acc = acc + p.weight * (T::one() - l);
        } else {
            let a = theta - p.start;
            let b = theta - (p.start + p.len);
            let avg = (kernel.g(a) - kernel.g(b)) / p.len;
            acc = acc + p.weight * (T::one() - avg);
        }
    }
    Ok(acc)
}

/// Energy I_mu = double integral of the kernel against mu x mu.
/// Panel pairs (including self and adjacent pairs) use the exact double
/// primitive; atoms with positive weight make the energy infinite.
pub fn energy<T: Real>(mu: &PanelMeasure<T>) -> Result<T> {
    if mu.has_atoms() {
        return Err(Error::AtomicMeasure);
    }
    let kernel = LogSineKernel::new();
    let panels = mu.panels();
    let n = panels.len();
    let rows: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = &panels[i];
            let mut acc = T::zero();
            for (j, pj) in panels.iter().enumerate() {
                if pj.weight == T::zero() || pi.weight == T::zero() {
                    continue;
                }
                let e = if i == j {
                    T::one() - T::of(2.0) * kernel.h(pi.len) / (pi.len * pi.len)
                } else {
                    pair_energy(&kernel, pi, pj)
                };
                acc = acc + pi.weight * pj.weight * e;
            }
            acc
        })
        .collect();
    Ok(rows.into_iter().fold(T::zero(), |a, b| a + b))
}

/// Average of log(e/|z-w|) over panel_i x panel_j, exact in the primitives.
fn pair_energy<T: Real>(kernel: &LogSineKernel<T>, pi: &Panel<T>, pj: &Panel<T>) -> T {
    let (a, b) = (pi.start, pi.start + pi.len);
    let (c, d) = (pj.start, pj.start + pj.len);
    if pi.len == T::zero() && pj.len == T::zero() {
        return T::one() - kernel.ell(a - c);
    }
    if pi.len == T::zero() {
        return T::one() - (kernel.g(a - c) - kernel.g(a - d)) / pj.len;
    }
    if pj.len == T::zero() {
        return T::one() - (kernel.g(c - a) - kernel.g(c - b)) / pi.len;
    }
    let hh = kernel.h(b - c) + kernel.h(a - d) - kernel.h(a - c) - kernel.h(b - d);
    T::one() - hh / (pi.len * pj.len)
}

#[derive(Debug, Clone, Copy)]
pub struct FourierEnergy<T> {
    pub value: T,
    /// Magnitude of the last summand, as a truncation indicator.
    pub last_term: T,
}

/// Energy through the Fourier route: I = 1 + sum_{n=1}^{N} |mu_hat(n)|^2 / n,
/// with exact per-panel coefficients. Independent of the kernel-quadrature
/// route; the two are cross-checked in the tests.
pub fn energy_fourier<T: Real>(mu: &PanelMeasure<T>, n_max: usize) -> Result<FourierEnergy<T>> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("energy_fourier needs N >= 1".into()));
    }
    let terms: Vec<T> = (1..=n_max)
        .into_par_iter()
        .map(|n| mu.fourier_coefficient(n).norm_sqr() / T::of_usize(n))
        .collect();
    let last_term = *terms.last().unwrap();
    let value = T::one() + terms.into_iter().fold(T::zero(), |a, b| a + b);
    Ok(FourierEnergy { value, last_term })
}

// ---------------------------------------------------------------------------
// Equilibrium
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EquilibriumOptions {
    pub qp: qp::QpOptions,
    /// Size of the global circle grid for the Frostman bound check.
    pub frostman_grid: usize,
    /// U <= I + frostman_tol must hold on the global grid.
    pub frostman_tol: f64,
    /// |U - I| <= frostman_dev_tol must hold at support midpoints.
    pub frostman_dev_tol: f64,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            qp: qp::QpOptions::default(),
            frostman_grid: 10_000,
            frostman_tol: 1e-3,
            frostman_dev_tol: 5e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult<T: Real> {
    pub measure: PanelMeasure<T>,
    pub energy: T,
    /// capacity = exp(-energy) under the log(e/|z-w|) kernel, so the full
    /// circle has capacity e^{-1}.
    pub capacity: T,
    /// max of U - I over the global circle grid (signed).
    pub frostman_sup: T,
    /// max of |U - I| over positive-weight panel midpoints.
    pub frostman_dev: T,
    /// Frostman certificate within tolerances.
    pub certificate_ok: bool,
    pub kkt_residual: T,
}

/// Chebyshev-graded panel subdivision of the set (uniform on a full circle,
/// where there are no endpoints to resolve).
fn panelize_graded<T: Real>(set: &ArcSet<T>, total_panels: usize) -> Result<Vec<Panel<T>>> {
    if set.total_length() <= T::zero() {
        return Err(Error::InvalidArcSet(
            "equilibrium needs positive total length".into(),
        ));
    }
    if set.is_full_circle() {
        let m = total_panels;
        let len = two_pi::<T>() / T::of_usize(m);
        return Ok((0..m)
            .map(|k| Panel {
                start: len * T::of_usize(k),
                len,
                weight: T::one() / T::of_usize(m),
            })
            .collect());
    }
    let counts = distribute_panels(set, total_panels)?;
    let mut panels = Vec::with_capacity(total_panels);
    for (&(a, len), &m) in set.arcs().iter().zip(&counts) {
        if len == T::zero() {
            return Err(Error::InvalidArcSet(
                "zero-length arc in equilibrium target; fatten first".into(),
            ));
        }
        let mut edges = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let t = T::PI() * T::of_usize(k) / T::of_usize(m);
            edges.push(a + len * (T::one() - t.cos()) * T::of(0.5));
        }
        for k in 0..m {
            panels.push(Panel {
                start: edges[k],
                len: edges[k + 1] - edges[k],
                weight: T::zero(),
            });
        }
    }
    let total = panels.len();
    for p in &mut panels {
        p.weight = T::one() / T::of_usize(total);
    }
    Ok(panels)
}

fn assemble_gram<T: Real>(kernel: &LogSineKernel<T>, panels: &[Panel<T>]) -> Vec<T> {
    let n = panels.len();
    let mut g = vec![T::zero(); n * n];
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![T::zero(); n];
            for j in 0..n {
                row[j] = if i == j {
                    let l = panels[i].len;
                    T::one() - T::of(2.0) * kernel.h(l) / (l * l)
                } else {
                    pair_energy(kernel, &panels[i], &panels[j])
                };
            }
            row
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        g[i * n..(i + 1) * n].copy_from_slice(&row);
    }
    g
}

/// Equilibrium measure of a circle compact: minimizes the panel-discretized
/// energy over the probability simplex, then verifies Frostman's bounds
/// (U <= I globally, U = I on the support up to tolerance).
pub fn equilibrium<T: Real>(
    set: &ArcSet<T>,
    panel_count: usize,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumResult<T>> {
    let kernel = LogSineKernel::new();
    let panels = panelize_graded(set, panel_count)?;
    let g = assemble_gram(&kernel, &panels);
    let sol = qp::minimize_on_simplex(&g, panels.len(), &opts.qp)?;

    let mut weighted = panels.clone();
    for (p, &w) in weighted.iter_mut().zip(&sol.weights) {
        p.weight = w;
    }
    let measure = PanelMeasure { panels: weighted };
    let energy = sol
        .weights
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &wi)| {
            let row = &g[i * panels.len()..(i + 1) * panels.len()];
            acc + wi
                * row
                    .iter()
                    .zip(&sol.weights)
                    .fold(T::zero(), |a, (&gij, &wj)| a + gij * wj)
        });

    // Frostman verification.
    let grid = opts.frostman_grid.max(16);
    let sup = (0..grid)
        .into_par_iter()
        .map(|k| {
            let theta = two_pi::<T>() * T::of_usize(k) / T::of_usize(grid);
            potential_on_circle(&measure, theta, &kernel)
                .map(|u| u - energy)
                .unwrap_or(T::neg_infinity())
        })
        .reduce(|| T::neg_infinity(), |a, b| if a > b { a } else { b });
    let dev = measure
        .panels()
        .par_iter()
        .filter(|p| p.weight > T::of(1e-12))
        .map(|p| {
            potential_on_circle(&measure, p.midpoint(), &kernel)
                .map(|u| (u - energy).abs())
                .unwrap_or(T::infinity())
        })
        .reduce(|| T::zero(), |a, b| if a > b { a } else { b });

    let certificate_ok =
        sup.as_f64() <= opts.frostman_tol && dev.as_f64() <= opts.frostman_dev_tol;
    Ok(EquilibriumResult {
        measure,
        energy,
        capacity: (-energy).exp(),
        frostman_sup: sup,
        frostman_dev: dev,
        certificate_ok,
        kkt_residual: sol.kkt_residual,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LadderRow<T> {
    pub eps: T,
    pub energy: T,
    pub capacity: T,
}

/// Equilibrium energies of the fattened sets K_eps along a decreasing list.
/// For capacity-zero K the energies must grow without bound as eps -> 0.
pub fn capacity_ladder<T: Real>(
    set: &ArcSet<T>,
    eps_list: &[T],
    panel_count: usize,
    opts: &EquilibriumOptions,
) -> Result<Vec<LadderRow<T>>> {
    for pair in eps_list.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::InvalidParameter(
                "epsilon ladder must be strictly decreasing".into(),
            ));
        }
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !(eps > T::zero()) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        let fat = set.fatten(eps);
        let res = equilibrium(&fat, panel_count, opts)?;
        rows.push(LadderRow {
            eps,
            energy: res.energy,
            capacity: res.capacity,
        });
    }
    Ok(rows)
}

/// Equilibrium energy of the eps-fattening of a finite point set with
/// ln(eps) given directly, valid in the deep regime where eps is far below
/// the inter-point gaps (possibly below the floating-point floor).
///
/// The measure splits into masses m_i on arcs of chordal radius eps; each
/// arc's internal equilibrium self-energy is exactly 1 + ln 2 - ln eps
/// (an arc of half-angle 2 asin(eps/2) has capacity eps/2), and the cross
/// interactions are the point-pair kernels. The reduced problem in the
/// masses is solved by the same simplex QP.
pub fn point_equilibrium_energy_log<T: Real>(
    points: &[T],
    ln_eps: T,
) -> Result<(T, Vec<T>)> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("need at least one point".into()));
    }
    let kernel = LogSineKernel::new();
    let m = points.len();
    let self_energy = T::one() + T::of(2.0f64.ln()) - ln_eps;
    if m == 1 {
        return Ok((self_energy, vec![T::one()]));
    }
    let mut g = vec![T::zero(); m * m];
    for i in 0..m {
        for j in 0..m {
            g[i * m + j] = if i == j {
                self_energy
            } else {
                T::one() - kernel.ell(points[i] - points[j])
            };
        }
    }
    let sol = qp::minimize_on_simplex(&g, m, &qp::QpOptions::default())?;
    let mut e = T::zero();
    for i in 0..m {
        for j in 0..m {
            e = e + sol.weights[i] * g[i * m + j] * sol.weights[j];
        }
    }
    Ok((e, sol.weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn uniform_circle(panels: usize) -> PanelMeasure<f64> {
        PanelMeasure::uniform_on(&ArcSet::full_circle(), panels).unwrap()
    }

    #[test]
    fn arc_set_normalizes_and_merges() {
        let k = ArcSet::from_arcs(&[(0.5, 1.0), (0.9, 1.4), (3.0, 3.2)]).unwrap();
        assert_eq!(k.arcs().len(), 2);
        close(k.total_length(), (1.4 - 0.5) + 0.2, 1e-12);

        let wrap = ArcSet::from_arcs(&[(6.0, 6.5), (0.1, 0.4)]).unwrap();
        // 6.5 wraps past 2 pi ~ 6.283 into [0, 0.217]; merges with [0.1, 0.4]
        assert_eq!(wrap.arcs().len(), 1);
    }

    #[test]
    fn fatten_points_and_monotonicity() {
        let point = ArcSet::from_points(&[0.0]);
        let eps = 1e-3;
        let fat = point.fatten(eps);
        assert_eq!(fat.arcs().len(), 1);
        // single arc of half-width ~ eps (2 asin(eps/2) ~ eps)
        close(fat.total_length(), 2.0 * 2.0 * (eps / 2.0f64).asin(), 1e-15);

        let two = ArcSet::from_points(&[0.0, std::f64::consts::PI]);
        let fat2 = two.fatten(0.1);
        assert_eq!(fat2.arcs().len(), 2);

        // nested: fatten(K, e1) inside fatten(K, e2) for e1 < e2
        let small = two.fatten(0.05);
        let big = two.fatten(0.2);
        for &(a, len) in small.arcs() {
            for t in [a, a + len] {
                assert_eq!(big.angular_distance(t), 0.0);
            }
        }

        assert!(two.fatten(2.0).is_full_circle());
    }

    #[test]
    fn chordal_distance_matches_geometry() {
        let k = ArcSet::from_points(&[0.0]);
        let theta = 0.3f64;
        let expected = (Complex::new(theta.cos(), theta.sin()) - Complex::new(1.0, 0.0)).norm();
        close(k.chordal_distance(theta), expected, 1e-14);
    }

    #[test]
    fn log_sine_primitives_are_periodic_and_consistent() {
        let kernel = LogSineKernel::<f64>::new();
        // G(2 pi k) = 0, H periodic
        close(kernel.g(std::f64::consts::PI * 2.0), 0.0, 1e-12);
        close(
            kernel.h(1.3),
            kernel.h(1.3 + 2.0 * std::f64::consts::PI),
            1e-12,
        );
        // Derivative check: (H(x+d) - H(x-d)) / 2d = G(x)
        let x = 0.7;
        let d = 1e-5;
        close(
            (kernel.h(x + d) - kernel.h(x - d)) / (2.0 * d),
            kernel.g(x),
            1e-9,
        );
        // G'(x) = l(x)
        close(
            (kernel.g(x + d) - kernel.g(x - d)) / (2.0 * d),
            kernel.ell(x),
            1e-9,
        );
    }

    #[test]
    fn uniform_circle_energy_is_one_both_ways() {
        let mu = uniform_circle(64);
        close(energy(&mu).unwrap(), 1.0, 1e-10);
        let four = energy_fourier(&mu, 512).unwrap();
        // every coefficient vanishes exactly for the uniform panel measure
        close(four.value, 1.0, 1e-13);
    }

    #[test]
    fn potential_of_uniform_circle() {
        let mu = uniform_circle(64);
        close(potential(&mu, Complex::new(0.0, 0.0)).unwrap(), 1.0, 1e-10);
        // on the circle: mean of log(e/|1 - e^{it}|) = 1
        close(
            potential(&mu, Complex::new(1.0f64.cos(), 1.0f64.sin())).unwrap(),
            1.0,
            1e-10,
        );
    }

    #[test]
    fn potential_of_far_panel_is_log_kernel() {
        // single short panel far from z behaves like log(e/dist)
        let set = ArcSet::from_arcs(&[(0.0, 0.01)]).unwrap();
        let mu = PanelMeasure::uniform_on(&set, 1).unwrap();
        let z = Complex::from_polar(1.0, std::f64::consts::PI);
        let dist = (z - Complex::new(1.0, 0.0)).norm();
        let val = potential(&mu, z).unwrap();
        close(val, 1.0 - dist.ln(), 1e-4);
    }

    #[test]
    fn atoms_have_infinite_energy() {
        let mu = PanelMeasure::atoms(&[0.0], &[1.0]).unwrap();
        assert!(matches!(energy(&mu), Err(Error::AtomicMeasure)));
    }

    #[test]
    fn half_circle_energy_two_ways() {
        let set = ArcSet::from_arcs(&[(0.0, std::f64::consts::PI)]).unwrap();
        let mu = PanelMeasure::uniform_on(&set, 64).unwrap();
        let direct = energy(&mu).unwrap();
        let four = energy_fourier(&mu, 4096).unwrap();
        close(direct, four.value, 1e-4);
    }

    #[test]
    fn cos_squared_density_fourier_energy() {
        // density 2 cos^2(t) = 1 + cos(2t): mu_hat(2) = 1/2, energy 9/8.
        let mu = PanelMeasure::from_density(&ArcSet::full_circle(), 512, |t: f64| {
            2.0 * t.cos() * t.cos()
        })
        .unwrap();
        let c2 = mu.fourier_coefficient(2);
        close(c2.re, 0.5, 1e-3);
        let four = energy_fourier(&mu, 64).unwrap();
        close(four.value, 9.0 / 8.0, 1e-3);
        close(energy(&mu).unwrap(), 9.0 / 8.0, 1e-3);
    }

    #[test]
    fn equilibrium_on_full_circle() {
        let res = equilibrium(
            &ArcSet::full_circle(),
            128,
            &EquilibriumOptions::default(),
        )
        .unwrap();
        close(res.energy, 1.0, 1e-9);
        close(res.capacity, (-1.0f64).exp(), 1e-9);
        assert!(res.certificate_ok);
        // symmetry: all weights equal
        let w0 = res.measure.panels()[0].weight;
        for p in res.measure.panels() {
            close(p.weight, w0, 1e-10);
        }
    }

    #[test]
    fn quarter_arc_energy_matches_closed_form() {
        // arc of half-angle pi/4: capacity sin(pi/8), energy 1 - ln sin(pi/8)
        let set = ArcSet::from_arcs(&[(-std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4)])
            .unwrap();
        let res = equilibrium(&set, 256, &EquilibriumOptions::default()).unwrap();
        let expect = 1.0 - (std::f64::consts::PI / 8.0).sin().ln();
        close(res.energy, expect, 5e-3);
        assert!(res.capacity < (-1.0f64).exp());
        assert!(res.certificate_ok, "sup {} dev {}", res.frostman_sup, res.frostman_dev);
    }

    #[test]
    fn capacity_is_monotone_under_inclusion() {
        let opts = EquilibriumOptions::default();
        let mut last_energy = f64::INFINITY;
        for half in [0.2, 0.5, 1.0, 2.0] {
            let set = ArcSet::from_arcs(&[(-half, half)]).unwrap();
            let res = equilibrium(&set, 128, &opts).unwrap();
            assert!(
                res.energy < last_energy,
                "energy should drop as the arc grows"
            );
            last_energy = res.energy;
        }
    }

    #[test]
    fn maximum_principle_proxy() {
        let set = ArcSet::from_arcs(&[(0.0, 1.0)]).unwrap();
        let res = equilibrium(&set, 128, &EquilibriumOptions::default()).unwrap();
        let kernel = LogSineKernel::new();
        let grid = 2048;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for k in 0..grid {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / grid as f64;
            let u = potential_on_circle(&res.measure, theta, &kernel).unwrap();
            if u > best.0 {
                best = (u, theta);
            }
        }
        // grid max lies on (or adjacent to) the support
        let spacing = 2.0 * std::f64::consts::PI / grid as f64;
        assert!(set.angular_distance(best.1) <= 2.0 * spacing);
    }

    #[test]
    fn ladder_for_single_point_tracks_log_rate() {
        let k = ArcSet::from_points(&[0.0]);
        let eps: Vec<f64> = (3..=8).map(|j| 2.0f64.powi(-j)).collect();
        let rows = capacity_ladder(&k, &eps, 128, &EquilibriumOptions::default()).unwrap();
        // I(K_eps) - log(1/eps) approaches 1 + ln 2
        for row in &rows {
            let gap = row.energy - (1.0 / row.eps).ln();
            close(gap, 1.0 + 2.0f64.ln(), 5e-2);
        }
        // increasing energies down the ladder
        for pair in rows.windows(2) {
            assert!(pair[1].energy > pair[0].energy);
        }
    }

    #[test]
    fn reduced_point_energy_matches_arc_formula() {
        let (e, w) = point_equilibrium_energy_log(&[0.0], -10.0f64).unwrap();
        close(e, 1.0 + 2.0f64.ln() + 10.0, 1e-12);
        assert_eq!(w.len(), 1);

        // deep-regime reduced energy continues the panel-solver ladder
        let k = ArcSet::from_points(&[0.0]);
        let eps = 2.0f64.powi(-8);
        let row = capacity_ladder(&k, &[eps], 192, &EquilibriumOptions::default()).unwrap();
        let (e_red, _) = point_equilibrium_energy_log(&[0.0], eps.ln()).unwrap();
        close(row[0].energy, e_red, 2e-2);
    }

    #[test]
    fn reduced_two_point_energy_is_symmetric() {
        let pts = [0.0, std::f64::consts::PI];
        let (e, w) = point_equilibrium_energy_log(&pts, -30.0f64).unwrap();
        close(w[0], 0.5, 1e-9);
        // I = (S + C)/2 with S = 1 + ln2 + 30, C = 1 - ln 2
        let s = 1.0 + 2.0f64.ln() + 30.0;
        let c = 1.0 - 2.0f64.ln();
        close(e, (s + c) / 2.0, 1e-9);
    }

    #[test]
    fn cantor_expansion_counts_arcs() {
        let spec = CantorSpec::<f64> {
            ratios: RatioSpec::List(vec![0.25, 0.25]),
            depth: 2,
            base: (0.0, 1.0),
        };
        let k = ArcSet::cantor(&spec).unwrap();
        assert_eq!(k.arcs().len(), 4);
        close(k.total_length(), 1.0 * 0.25 * 0.25 * 4.0, 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let k = ArcSet::from_arcs(&[(0.1, 0.5), (2.0, 2.5)]).unwrap();
        let back = ArcSet::<f64>::from_json(&k.to_json()).unwrap();
        assert_eq!(k.arcs().len(), back.arcs().len());
    }
}
