//! Constructive peaking machinery: given a small compact K on the circle,
//! build a potential-sum function f with Re f >= 1 that blows up along K,
//! and from it the symbol q = phi_a o e^{-1/f} which peaks on K while its
//! composition operator stays Hilbert-Schmidt.
//!
//! The term schedule demands equilibrium energies I_j >= 4 j^6, which for a
//! single contact point forces eps_j ~ e^{-4 j^6}. Those depths live far
//! below the floating-point floor, so the schedule is carried in log space
//! (ln eps, ln delta); materialized values may underflow to 0, in which
//! case the kernel argument (1 - z w) + delta z w and IEEE limit semantics
//! still produce the correct peaking limits.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::capacity::{
    equilibrium, point_equilibrium_energy_log, ArcSet, EquilibriumOptions, PanelMeasure,
};
use crate::error::{Error, Result};
use crate::quad::{disk_integrate, gauss_legendre, QuadratureRule};
use crate::scalar::Real;
use crate::symbols::{AnalyticMap, Symbol};

#[derive(Debug, Clone)]
pub struct PlanOptions {
    /// Largest epsilon the bisection may return.
    pub eps_max: f64,
    /// Floor of the search range, expressed as ln(eps).
    pub ln_eps_min: f64,
    pub bisection_steps: usize,
    pub panel_count: usize,
    /// Below this epsilon the fattening of a finite point set is handled by
    /// the reduced two-scale equilibrium in log space.
    pub tiny_threshold: f64,
    pub equilibrium: EquilibriumOptions,
}

impl Default for PlanOptions {
    fn default() -> Self {
        // the bisection solves need energies, not certificates: a small
        // Frostman grid keeps the ladder cheap
        let mut equilibrium = EquilibriumOptions::default();
        equilibrium.frostman_grid = 512;
        PlanOptions {
            eps_max: 0.25,
            ln_eps_min: -1.0e5,
            bisection_steps: 48,
            panel_count: 192,
            tiny_threshold: 1e-6,
            equilibrium,
        }
    }
}

/// One term of the schedule: the fattening scale, its equilibrium energy
/// and measure, and the collar/damping parameters.
#[derive(Debug, Clone)]
pub struct PlanTerm<T: Real> {
    pub ln_eps: T,
    pub energy: T,
    pub ln_delta: T,
    /// delta materialized (0.0 when it underflows).
    pub delta: T,
    pub measure: PanelMeasure<T>,
}

impl<T: Real> PlanTerm<T> {
    pub fn eps(&self) -> T {
        self.ln_eps.exp()
    }
    /// r = 1 - delta, the extreme admissible damping radius.
    pub fn r(&self) -> T {
        T::one() - self.delta
    }
}

#[derive(Debug, Clone)]
pub struct PeakingPlan<T: Real> {
    pub target: ArcSet<T>,
    pub terms: Vec<PlanTerm<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanTermJson {
    eps: f64,
    ln_eps: f64,
    energy: f64,
    delta: f64,
    ln_delta: f64,
    r: f64,
    panels: Vec<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanJson {
    k: Vec<[f64; 2]>,
    terms: usize,
    schedule: Vec<PlanTermJson>,
}

impl<T: Real> PeakingPlan<T> {
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Energy target the j-th term must meet.
    pub fn energy_target(j: usize) -> T {
        let jf = j as f64;
        T::of(4.0 * jf.powi(6))
    }

    /// Re-verify the schedule invariants.
    pub fn validate(&self) -> Result<()> {
        let ln4 = T::of(4.0f64.ln());
        let ln32 = T::of(32.0f64.ln());
        let mut prev_ln_eps = T::infinity();
        for (idx, term) in self.terms.iter().enumerate() {
            let j = idx + 1;
            if !(term.energy >= Self::energy_target(j)) {
                return Err(Error::InvalidParameter(format!(
                    "term {j}: energy {} below target",
                    term.energy
                )));
            }
            let cap = (term.ln_eps - ln4).min(term.ln_eps + term.ln_eps - ln32);
            if term.ln_delta > cap + T::of(1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "term {j}: delta exceeds min(eps/4, eps^2/32)"
                )));
            }
            if !(term.ln_eps < prev_ln_eps) {
                return Err(Error::InvalidParameter(format!(
                    "term {j}: eps not strictly decreasing"
                )));
            }
            prev_ln_eps = term.ln_eps;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mirror = PlanJson {
            k: self
                .target
                .arcs()
                .iter()
                .map(|&(a, l)| [a.as_f64(), (a + l).as_f64()])
                .collect(),
            terms: self.terms.len(),
            schedule: self
                .terms
                .iter()
                .map(|t| PlanTermJson {
                    eps: t.eps().as_f64(),
                    ln_eps: t.ln_eps.as_f64(),
                    energy: t.energy.as_f64(),
                    delta: t.delta.as_f64(),
                    ln_delta: t.ln_delta.as_f64(),
                    r: t.r().as_f64(),
                    panels: t
                        .measure
                        .panels()
                        .iter()
                        .map(|p| [p.start.as_f64(), p.len.as_f64(), p.weight.as_f64()])
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&mirror).expect("plan serialization cannot fail")
    }
}

/// Equilibrium energy of the eps-fattening of the target, with the deep
/// regime for finite point sets routed through the reduced log-space solve.
fn fattened_energy<T: Real>(
    target: &ArcSet<T>,
    ln_eps: T,
    opts: &PlanOptions,
) -> Result<(T, PanelMeasure<T>)> {
    let eps = ln_eps.exp();
    let all_points = target.arcs().iter().all(|&(_, l)| l == T::zero());
    if eps.as_f64() >= opts.tiny_threshold || !all_points {
        let eff = if eps.as_f64() >= opts.tiny_threshold {
            eps
        } else {
            T::of(opts.tiny_threshold)
        };
        let fat = target.fatten(eff);
        let res = equilibrium(&fat, opts.panel_count, &opts.equilibrium)?;
        Ok((res.energy, res.measure))
    } else {
        let points: Vec<T> = target
            .arcs()
            .iter()
            .map(|&(a, l)| a + l * T::of(0.5))
            .collect();
        let (energy, masses) = point_equilibrium_energy_log(&points, ln_eps)?;
        let measure = PanelMeasure::atoms(&points, &masses)?;
        Ok((energy, measure))
    }
}

/// Build the term schedule: for each j, bisection in ln(eps) finds the
/// largest eps in range whose fattened equilibrium energy meets 4 j^6,
/// then delta_j = min(eps/4, eps^2/32) and r_j = 1 - delta_j.
pub fn plan_peaking<T: Real>(
    target: &ArcSet<T>,
    terms: usize,
    opts: &PlanOptions,
) -> Result<PeakingPlan<T>> {
    if terms == 0 {
        return Ok(PeakingPlan {
            target: target.clone(),
            terms: Vec::new(),
        });
    }
    let ln4 = T::of(4.0f64.ln());
    let ln32 = T::of(32.0f64.ln());
    let s_min = T::of(-(opts.eps_max.ln()));
    let s_max = T::of(-opts.ln_eps_min);
    let mut plan_terms: Vec<PlanTerm<T>> = Vec::with_capacity(terms);
    let mut prev_s = T::neg_infinity();
    for j in 1..=terms {
        let goal = PeakingPlan::<T>::energy_target(j);
        let (e_min, _) = fattened_energy(target, -s_min, opts)?;
        let s_j = if e_min >= goal {
            s_min
        } else {
            let (e_max, _) = fattened_energy(target, -s_max, opts)?;
            if e_max < goal {
                return Err(Error::EnergyCeilingUnreachable {
                    target: goal.as_f64(),
                });
            }
            let mut lo = s_min;
            let mut hi = s_max;
            for _ in 0..opts.bisection_steps {
                let mid = (lo + hi) * T::of(0.5);
                let (e_mid, _) = fattened_energy(target, -mid, opts)?;
                if e_mid >= goal {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if (hi - lo) < T::of(1e-6) * (T::one() + hi.abs()) {
                    break;
                }
            }
            hi
        };
        // keep eps strictly decreasing across terms
        let s_j = if s_j <= prev_s {
            prev_s + T::of(2.0f64.ln())
        } else {
            s_j
        };
        prev_s = s_j;
        let ln_eps = -s_j;
        let (energy, measure) = fattened_energy(target, ln_eps, opts)?;
        if energy < goal {
            return Err(Error::EnergyCeilingUnreachable {
                target: goal.as_f64(),
            });
        }
        let ln_delta = (ln_eps - ln4).min(ln_eps + ln_eps - ln32);
        plan_terms.push(PlanTerm {
            ln_eps,
            energy,
            ln_delta,
            delta: ln_delta.exp(),
            measure,
        });
    }
    let plan = PeakingPlan {
        target: target.clone(),
        terms: plan_terms,
    };
    plan.validate()?;
    Ok(plan)
}

// ---------------------------------------------------------------------------
// The peaking function f
// ---------------------------------------------------------------------------

/// 1 - r z conj(w) for w = e^{it}, z = rho e^{i theta}, r = 1 - delta,
/// assembled without cancellation: the real part is
/// (1 - rho) + 2 rho sin^2(D/2) + delta rho cos D with D = theta - t.
fn one_minus_damped<T: Real>(rho: T, delta_angle: T, delta: T) -> Complex<T> {
    let s = (delta_angle * T::of(0.5)).sin();
    let re = (T::one() - rho)
        + T::of(2.0) * rho * s * s
        + delta * rho * delta_angle.cos();
    let im = -rho * (T::one() - delta) * delta_angle.sin();
    Complex::new(re, im)
}

/// L(zeta) = log(e / (1 - zeta)) evaluated from the precomputed 1 - zeta.
fn log_kernel_from_arg<T: Real>(u: Complex<T>) -> Complex<T> {
    Complex::new(T::one() - u.norm().ln(), -u.im.atan2(u.re))
}

#[derive(Debug, Clone, Copy)]
struct KernelNode<T> {
    angle: T,
    weight: T,
}

#[derive(Debug, Clone)]
struct Term<T: Real> {
    /// j^{-2} / sqrt(I_j)
    scale: T,
    delta: T,
    nodes: Vec<KernelNode<T>>,
}

/// f(z) = 1 + sum_j j^{-2} f_j(z) / sqrt(I_j), with
/// f_j(z) = int L(r_j z conj(w)) d mu_j(w). Evaluates anywhere on the
/// closed disk; Re f >= 1 by positivity of the potentials.
#[derive(Debug, Clone)]
pub struct PeakingFunction<T: Real> {
    pub plan: PeakingPlan<T>,
    terms: Vec<Term<T>>,
}

impl<T: Real> PeakingFunction<T> {
    pub fn new(plan: PeakingPlan<T>) -> Self {
        let (gl_nodes, gl_weights) = gauss_legendre::<T>(8);
        let terms = plan
            .terms
            .iter()
            .enumerate()
            .map(|(idx, term)| {
                let j = idx + 1;
                let jf = T::of_usize(j);
                let scale = T::one() / (jf * jf * term.energy.sqrt());
                let mut nodes = Vec::new();
                for p in term.measure.panels() {
                    if p.weight == T::zero() {
                        continue;
                    }
                    if p.len == T::zero() {
                        nodes.push(KernelNode {
                            angle: p.start,
                            weight: p.weight,
                        });
                    } else {
                        let mid = p.start + p.len * T::of(0.5);
                        let half = p.len * T::of(0.5);
                        for (&x, &w) in gl_nodes.iter().zip(&gl_weights) {
                            nodes.push(KernelNode {
                                angle: mid + half * x,
                                weight: p.weight * w * T::of(0.5),
                            });
                        }
                    }
                }
                Term {
                    scale,
                    delta: term.delta,
                    nodes,
                }
            })
            .collect();
        PeakingFunction { plan, terms }
    }

    /// Single term's potential-sum integral f_j(z) (already damped by r_j).
    fn term_value(&self, idx: usize, z: Complex<T>) -> Complex<T> {
        let term = &self.terms[idx];
        let rho = z.norm();
        let theta = z.im.atan2(z.re);
        let mut acc = Complex::new(T::zero(), T::zero());
        for node in &term.nodes {
            let u = one_minus_damped(rho, theta - node.angle, term.delta);
            let l = log_kernel_from_arg(u);
            // componentwise scalar multiply: keeps w * (inf, 0) free of the
            // 0 * inf = NaN that a complex product would produce at contact
            // points of the atomic deep terms
            acc = Complex::new(acc.re + node.weight * l.re, acc.im + node.weight * l.im);
        }
        acc
    }

    /// Re f_j(z) = U_{eps_j}(r_j z), the damped potential of the j-th term.
    pub fn term_potential(&self, j: usize, z: Complex<T>) -> Result<T> {
        if j == 0 || j > self.terms.len() {
            return Err(Error::InvalidParameter(format!("no term {j} in the plan")));
        }
        Ok(self.term_value(j - 1, z).re)
    }

    pub fn eval(&self, z: Complex<T>) -> Complex<T> {
        let mut acc = Complex::new(T::one(), T::zero());
        for idx in 0..self.terms.len() {
            let scale = self.terms[idx].scale;
            let t = self.term_value(idx, z);
            acc = Complex::new(acc.re + scale * t.re, acc.im + scale * t.im);
        }
        acc
    }

    pub fn deriv(&self, z: Complex<T>) -> Complex<T> {
        let rho = z.norm();
        let theta = z.im.atan2(z.re);
        let mut acc = Complex::new(T::zero(), T::zero());
        for term in &self.terms {
            let r = T::one() - term.delta;
            let mut t_acc = Complex::new(T::zero(), T::zero());
            for node in &term.nodes {
                let u = one_minus_damped(rho, theta - node.angle, term.delta);
                let w_conj = Complex::from_polar(r, -node.angle);
                t_acc = t_acc + Complex::new(node.weight, T::zero()) * w_conj / u;
            }
            acc = acc + Complex::new(term.scale, T::zero()) * t_acc;
        }
        acc
    }
}

impl<T: Real> AnalyticMap<T> for PeakingFunction<T> {
    fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        Ok(PeakingFunction::eval(self, z))
    }
    fn deriv(&self, z: Complex<T>) -> Result<Complex<T>> {
        Ok(PeakingFunction::deriv(self, z))
    }
}

/// Standalone potential-sum integral f_eps(z) = int L(z conj(w)) d mu(w)
/// (no damping): its Dirichlet norm squared equals the energy of mu.
pub fn potential_sum<T: Real>(mu: &PanelMeasure<T>, z: Complex<T>) -> Complex<T> {
    let (gl_nodes, gl_weights) = gauss_legendre::<T>(8);
    let rho = z.norm();
    let theta = z.im.atan2(z.re);
    let mut acc = Complex::new(T::zero(), T::zero());
    for p in mu.panels() {
        if p.weight == T::zero() {
            continue;
        }
        if p.len == T::zero() {
            let u = one_minus_damped(rho, theta - p.start, T::zero());
            let l = log_kernel_from_arg(u);
            acc = Complex::new(acc.re + p.weight * l.re, acc.im + p.weight * l.im);
        } else {
            let mid = p.start + p.len * T::of(0.5);
            let half = p.len * T::of(0.5);
            for (&x, &w) in gl_nodes.iter().zip(&gl_weights) {
                let u = one_minus_damped(rho, theta - (mid + half * x), T::zero());
                let l = log_kernel_from_arg(u);
                let c = p.weight * w * T::of(0.5);
                acc = Complex::new(acc.re + c * l.re, acc.im + c * l.im);
            }
        }
    }
    acc
}

/// q = phi_a o e^{-1/f} with a = e^{-1/f(0)}: fixes the origin, peaks on K.
/// The hypothesis Re f >= 1 is checked on a grid before construction.
pub fn build_q<T: Real>(f: &PeakingFunction<T>, grid: usize) -> Result<Symbol<T>> {
    let hints: Vec<T> = f
        .plan
        .target
        .arcs()
        .iter()
        .map(|&(a, l)| a + l * T::of(0.5))
        .collect();
    let map = std::sync::Arc::new(f.clone());
    match Symbol::exp_reciprocal(map, grid) {
        Ok(sym) => Ok(sym.with_contact_hints(hints)),
        Err(Error::ExpReciprocalHypothesis { min }) => {
            Err(Error::PeakingHypothesisFailed { min })
        }
        Err(e) => Err(e),
    }
}

/// Single-term lower bound j^{-2} U_j(r_j z) / sqrt(I_j) at a point of the
/// delta_j collar around K; the schedule guarantees it is at least j.
pub fn lower_bound_near_k<T: Real>(
    f: &PeakingFunction<T>,
    j: usize,
    z: Complex<T>,
    tol: T,
) -> Result<T> {
    if j == 0 || j > f.plan.terms.len() {
        return Err(Error::InvalidParameter(format!("no term {j} in the plan")));
    }
    let term = &f.plan.terms[j - 1];
    let rho = z.norm();
    let theta = z.im.atan2(z.re);
    let ang = f.plan.target.angular_distance(theta);
    // Euclidean distance from z to the circle compact K.
    let dist = (T::one() + rho * rho - T::of(2.0) * rho * ang.cos()).max(T::zero()).sqrt();
    if dist > term.delta {
        return Err(Error::OutsideCollar {
            dist: dist.as_f64(),
            delta: term.delta.as_f64(),
        });
    }
    let u = f.term_potential(j, z)?;
    let jf = T::of_usize(j);
    let bound = u / (jf * jf * term.energy.sqrt());
    if !(bound >= jf * (T::one() - tol)) {
        return Err(Error::PeakingBoundViolated {
            bound: bound.as_f64(),
            target: jf.as_f64(),
        });
    }
    Ok(bound)
}

#[derive(Debug, Clone)]
pub struct HsCertificate<T> {
    pub estimate: T,
    /// (clip depth k, value at radial clip 1 - 2^-k)
    pub refinements: Vec<(usize, T)>,
    pub stable: bool,
    /// A-priori majorant 4 int |f'|^2 dA, when the generator f is supplied.
    pub ceiling: Option<T>,
}

/// Estimate int |q'|^2 / (1 - |q|^2)^2 dA over a radial-clip refinement
/// ladder; this is the Hilbert-Schmidt certificate for C_q.
pub fn hs_certificate<T: Real>(
    q: &Symbol<T>,
    depths: &[usize],
    f: Option<&PeakingFunction<T>>,
) -> Result<HsCertificate<T>> {
    if !q.fixes_origin {
        return Err(Error::OriginNotFixed);
    }
    let mut refinements = Vec::with_capacity(depths.len());
    for &k in depths {
        let clip = T::one() - T::of(0.5).powi(k as i32);
        let rule = QuadratureRule::tensor(12, 512, clip);
        let est = disk_integrate(
            |z| {
                let qv = q.eval(z).unwrap_or(Complex::new(T::one(), T::zero()));
                let qd = q.deriv(z).unwrap_or(Complex::new(T::zero(), T::zero()));
                let d = T::one() - qv.norm_sqr();
                qd.norm_sqr() / (d * d)
            },
            &rule,
        )?;
        refinements.push((k, est.value));
    }
    let n = refinements.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "need at least two refinement depths".into(),
        ));
    }
    let last = refinements[n - 1].1;
    let prev = refinements[n - 2].1;
    let rel = (last - prev).abs() / last.abs().max(T::of(1e-30));
    let stable = rel.as_f64() < 0.05;
    if !stable && n >= 3 {
        let prev2 = refinements[n - 3].1;
        let inc1 = prev - prev2;
        let inc2 = last - prev;
        if inc2 > inc1 * T::of(0.8) && inc2 > T::of(0.2) * last.abs() {
            return Err(Error::CertificateInconclusive {
                detail: format!("values {:?} keep growing", refinements
                    .iter()
                    .map(|(k, v)| (*k, v.as_f64()))
                    .collect::<Vec<_>>()),
            });
        }
    }
    let ceiling = match f {
        Some(f) => {
            let rule = QuadratureRule::tensor(12, 256, T::one() - T::of(1e-9));
            let est = disk_integrate(|z| f.deriv(z).norm_sqr(), &rule)?;
            Some(T::of(4.0) * est.value)
        }
        None => None,
    };
    Ok(HsCertificate {
        estimate: last,
        refinements,
        stable,
        ceiling,
    })
}
