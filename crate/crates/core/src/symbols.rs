//! Analytic self-maps of the disk and their attached models.
//!
//! A [`Symbol`] carries up to three faces: a pointwise evaluator with
//! derivative, an optional counting model (number of preimages as a
//! function of position, for comb symbols whose conformal map is never
//! constructed), and an optional image-region model (membership test plus
//! exact angular sections, for univalent symbols where window masses reduce
//! to areas).

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pointwise analytic evaluator with derivative.
pub trait AnalyticMap<T: Real>: Send + Sync {
    fn eval(&self, z: Complex<T>) -> Result<Complex<T>>;
    fn deriv(&self, z: Complex<T>) -> Result<Complex<T>>;
    /// Evaluation extended by continuity where `eval` has a removable
    /// boundary singularity; defaults to `eval`.
    fn eval_limit(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.eval(z)
    }
}

// ---------------------------------------------------------------------------
// Counting model (comb symbols)
// ---------------------------------------------------------------------------

/// Monotone profile on (0, infinity), used for the comb boundary curves.
#[derive(Debug, Clone)]
pub enum Profile<T: Real> {
    OneOverT,
    Const(T),
    /// Piecewise-linear interpolation of tabulated samples (sorted in t).
    Tabulated { ts: Vec<T>, vs: Vec<T> },
}

impl<T: Real> Profile<T> {
    pub fn eval(&self, t: T) -> T {
        match self {
            Profile::OneOverT => T::one() / t,
            Profile::Const(c) => *c,
            Profile::Tabulated { ts, vs } => {
                if t <= ts[0] {
                    return vs[0];
                }
                if t >= ts[ts.len() - 1] {
                    return vs[vs.len() - 1];
                }
                let mut lo = 0;
                let mut hi = ts.len() - 1;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if ts[mid] <= t {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let frac = (t - ts[lo]) / (ts[hi] - ts[lo]);
                vs[lo] + (vs[hi] - vs[lo]) * frac
            }
        }
    }
}

/// Valence model for a comb symbol phi = exp(-F) with F mapping onto the
/// region { x > 0, g(x) < y < g(x) + h(x) }: the number of preimages of
/// e^{-x} e^{i theta} is the number of lattice shifts theta + 2 pi k inside
/// (g(x), g(x) + h(x)).
#[derive(Debug, Clone)]
pub struct CountingModel<T: Real> {
    pub g: Profile<T>,
    pub h: Profile<T>,
}

/// int_0^t floor(u) du, exact.
fn floor_primitive<T: Real>(t: T) -> T {
    let f = t.floor();
    f * (f - T::one()) * T::of(0.5) + f * (t - f)
}

impl<T: Real> CountingModel<T> {
    /// n_phi at the point e^{-x} e^{i theta}.
    pub fn count(&self, x: T, theta: T) -> usize {
        let a = self.g.eval(x);
        let b = a + self.h.eval(x);
        let period = T::of(2.0) * T::PI();
        let hi = ((b - theta) / period).floor();
        let lo = ((a - theta) / period).floor();
        let c = (hi - lo).as_f64();
        if c < 0.0 {
            0
        } else {
            c as usize
        }
    }

    /// Exact integral of count(x, .) over [theta_a, theta_b), via the
    /// closed-form primitive of the floor function.
    pub fn angular_count_integral(&self, x: T, theta_a: T, theta_b: T) -> T {
        let a = self.g.eval(x);
        let b = a + self.h.eval(x);
        let period = T::of(2.0) * T::PI();
        let s = |c: T| {
            period
                * (floor_primitive((c - theta_a) / period)
                    - floor_primitive((c - theta_b) / period))
        };
        s(b) - s(a)
    }

    pub fn count_at_point(&self, z: Complex<T>) -> usize {
        let r = z.norm();
        if r <= T::zero() || r >= T::one() {
            return 0;
        }
        let x = -(r.ln());
        self.count(x, z.im.atan2(z.re))
    }
}

// ---------------------------------------------------------------------------
// Region models (univalent symbols)
// ---------------------------------------------------------------------------

/// h_n sequences for the comb separation region.
#[derive(Debug, Clone)]
pub enum SeparationSeq<T: Real> {
    /// h_n = (n+1)^(-2/p1): in S_p exactly for p > p1.
    Power { p1: T },
    /// h_n = (n+1)^(-2/p1) log(n+2)^(-4/p1): in S_p1 but nothing below.
    PowerLog { p1: T },
    /// h_n = 1 / ln(n+2): compact but in no Schatten class.
    InvLog,
}

impl<T: Real> SeparationSeq<T> {
    pub fn h(&self, n: u32) -> T {
        let np1 = T::of_usize(n as usize + 1);
        let np2 = T::of_usize(n as usize + 2);
        match self {
            SeparationSeq::Power { p1 } => np1.powf(-T::of(2.0) / *p1),
            SeparationSeq::PowerLog { p1 } => {
                np1.powf(-T::of(2.0) / *p1) * np2.ln().powf(-T::of(4.0) / *p1)
            }
            SeparationSeq::InvLog => T::one() / np2.ln(),
        }
    }
}

/// Image-region model of a univalent symbol: membership, exact angular
/// sections at fixed radius, and closed-form window areas where available.
#[derive(Debug, Clone)]
pub enum RegionModel<T: Real> {
    /// The full open disk (automorphisms, the identity).
    FullDisk,
    /// Image of the cusp map: interior of the disk through 0 and 1 centered
    /// on the real axis, minus the two disks through 1 tangent from above
    /// and below; carries a cusp at w = 1.
    Cusp { a: T },
    /// Comb of curvilinear rectangles accumulating at 1, one per dyadic
    /// generation with angular width 2^-n h_n, united with D(0, 1/8).
    Separation { seq: SeparationSeq<T> },
}

fn subtract_interval<T: Real>(base: &[(T, T)], cut: (T, T)) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(base.len() + 1);
    for &(lo, hi) in base {
        if cut.1 <= lo || cut.0 >= hi {
            out.push((lo, hi));
            continue;
        }
        if cut.0 > lo {
            out.push((lo, cut.0));
        }
        if cut.1 < hi {
            out.push((cut.1, hi));
        }
    }
    out
}

impl<T: Real> RegionModel<T> {
    pub fn contains(&self, w: Complex<T>) -> bool {
        if w.norm() >= T::one() {
            return false;
        }
        match self {
            RegionModel::FullDisk => true,
            RegionModel::Cusp { a } => {
                let half = *a * T::of(0.5);
                let main = Complex::new(T::one() - half, T::zero());
                let up = Complex::new(T::one(), half);
                let dn = Complex::new(T::one(), -half);
                (w - main).norm() < half && (w - up).norm() > half && (w - dn).norm() > half
            }
            RegionModel::Separation { seq } => {
                let r = w.norm();
                if r < T::of(0.125) {
                    return true;
                }
                let n = (-(T::one() - r).log2()).floor().as_f64() as i64;
                if n < 0 {
                    return false;
                }
                let n = n as u32;
                let width = T::of(0.5).powi(n as i32) * seq.h(n);
                let mut theta = w.im.atan2(w.re);
                if theta < T::zero() {
                    theta = theta + T::of(2.0) * T::PI();
                }
                theta > T::zero() && theta < width
            }
        }
    }

    /// Angular section { theta in (-pi, pi] : r e^{i theta} in region } as a
    /// list of disjoint intervals. Exact: the boundaries are circle/lattice
    /// intersections solved in closed form (with a Newton polish for the
    /// cusp's grazing roots).
    pub fn theta_section(&self, r: T) -> Vec<(T, T)> {
        if r <= T::zero() || r >= T::one() {
            return Vec::new();
        }
        let pi = T::PI();
        match self {
            RegionModel::FullDisk => vec![(-pi, pi)],
            RegionModel::Cusp { a } => cusp_theta_section(*a, r),
            RegionModel::Separation { seq } => {
                if r < T::of(0.125) {
                    return vec![(-pi, pi)];
                }
                let n = (-(T::one() - r).log2()).floor().as_f64();
                if n < 0.0 {
                    return Vec::new();
                }
                let n = n as u32;
                let width = T::of(0.5).powi(n as i32) * seq.h(n);
                vec![(T::zero(), width)]
            }
        }
    }

    /// Radii where the angular section jumps; radial quadrature must split
    /// there.
    pub fn radial_breakpoints(&self) -> Vec<T> {
        match self {
            RegionModel::Separation { .. } => vec![T::of(0.125)],
            _ => Vec::new(),
        }
    }

    /// Closed-form normalized area of (window n,j) intersect region, when
    /// one exists. Generation n, sector j with 2^n sectors.
    pub fn area_formula(&self, n: u32, j: u64) -> Option<T> {
        match self {
            RegionModel::Separation { seq } => {
                let two_pi = T::of(2.0) * T::PI();
                if j != 0 {
                    return Some(T::zero());
                }
                let pow4 = T::of(0.25).powi(n as i32);
                let hn = seq.h(n);
                let band = pow4 * hn / two_pi
                    * (T::one() - T::of(0.75) * T::of(0.5).powi(n as i32));
                if n == 0 {
                    // D(0, 1/8) joins the n = 0 band: union area.
                    let disk = T::of(1.0 / 64.0);
                    let overlap = hn / (T::of(128.0) * T::PI());
                    Some(band + disk - overlap)
                } else {
                    Some(band)
                }
            }
            _ => None,
        }
    }
}

/// Angular section of the cusp image at radius r: the main-circle bound
/// cos(theta) > c0 with the two tangent circles removed. All three
/// boundaries are solved with cancellation-free closed forms.
fn cusp_theta_section<T: Real>(a: T, r: T) -> Vec<(T, T)> {
    let pi = T::PI();
    let m0 = T::one() - a * T::of(0.5);
    let omr = T::one() - r;
    // 1 - c0 = (1-r)(a - (1-r)) / (2 r m0), exact.
    let one_minus_c0 = omr * (a - omr) / (T::of(2.0) * r * m0);
    let alpha0 = if one_minus_c0 >= T::of(2.0) {
        pi
    } else {
        T::of(2.0) * (one_minus_c0 * T::of(0.5)).sqrt().min(T::one()).asin()
    };
    let mut section = vec![(-alpha0, alpha0)];

    // Exclusion disks through 1 with centers 1 +/- i a/2: inside iff
    // (1-r)^2 + 4 r sin^2(theta/2) - a r sin(theta) < 0.
    let norm = (T::of(4.0) + a * a).sqrt();
    let q = (T::one() + r * r) / (r * norm);
    if q < T::one() {
        let phi = a.atan2(T::of(2.0));
        let gamma = q.acos();
        let g = |t: T| {
            omr * omr + T::of(4.0) * r * (t * T::of(0.5)).sin().powi(2) - a * r * t.sin()
        };
        let dg = |t: T| T::of(2.0) * r * t.sin() - a * r * t.cos();
        let refine = |seed: T| {
            let mut t = seed;
            for _ in 0..4 {
                let d = dg(t);
                if d == T::zero() {
                    break;
                }
                let step = g(t) / d;
                if !step.is_finite() {
                    break;
                }
                t = t - step;
            }
            t
        };
        let t1 = refine(phi - gamma).max(T::zero());
        let t2 = refine(phi + gamma);
        if t2 > t1 {
            section = subtract_interval(&section, (t1, t2));
            section = subtract_interval(&section, (-t2, -t1));
        }
    }
    section.retain(|&(lo, hi)| hi > lo);
    section
}

// ---------------------------------------------------------------------------
// Concrete maps
// ---------------------------------------------------------------------------

struct MonomialMap<T: Real> {
    degree: u32,
    scale: Complex<T>,
}

impl<T: Real> AnalyticMap<T> for MonomialMap<T> {
    fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        Ok(self.scale * z.powu(self.degree))
    }
    fn deriv(&self, z: Complex<T>) -> Result<Complex<T>> {
        let k = self.degree;
        if k == 0 {
            return Ok(Complex::new(T::zero(), T::zero()));
        }
        Ok(self.scale * Complex::new(T::of_usize(k as usize), T::zero()) * z.powu(k - 1))
    }
}

struct MobiusMap<T: Real> {
    a: Complex<T>,
}

impl<T: Real> AnalyticMap<T> for MobiusMap<T> {
    fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        let one = Complex::new(T::one(), T::zero());
        Ok((z - self.a) / (one - self.a.conj() * z))
    }
    fn deriv(&self, z: Complex<T>) -> Result<Complex<T>> {
        let one = Complex::new(T::one(), T::zero());
        let d = one - self.a.conj() * z;
        Ok(Complex::new(T::one() - self.a.norm_sqr(), T::zero()) / (d * d))
    }
}

/// The cusp map: a univalent self-map with chi(0) = 0 whose image pinches
/// to a second-order cusp at 1. Evaluation goes through a Mobius square
/// root onto a quarter plane, a Cayley-type shift into the right half-disk,
/// a logarithm into a half-strip, and an inversion; all branches principal.
pub struct CuspMap<T: Real> {
    pub a: T,
}

impl<T: Real> CuspMap<T> {
    pub fn new() -> Self {
        // a = 1 - (2/pi) log(sqrt(2) - 1), chosen so that chi(0) = 0.
        let a = T::of(1.0 - (2.0 / std::f64::consts::PI) * (std::f64::consts::SQRT_2 - 1.0).ln());
        CuspMap { a }
    }

    fn stages(&self, z: Complex<T>) -> Result<(Complex<T>, Complex<T>, Complex<T>)> {
        let i = Complex::new(T::zero(), T::one());
        let one = Complex::new(T::one(), T::zero());
        let denom = i * z - one;
        if denom.norm() < T::of(1e-14) {
            return Err(Error::BoundarySingularity("z = -i".into()));
        }
        let w = (z - i) / denom;
        let s = w.sqrt();
        let chi0 = (s - i) / (one - i * s);
        if chi0.norm() < T::of(1e-15) {
            return Err(Error::BoundarySingularity("z = 1".into()));
        }
        let chi1 = chi0.ln();
        let chi2 = one - Complex::new(T::of(2.0) / T::PI(), T::zero()) * chi1;
        Ok((s, chi0, chi2))
    }

    /// Radial limit of chi at e^{i theta}; the boundary is regular except at
    /// the three branch points, whose limits are supplied in closed form.
    pub fn radial_limit(&self, theta: T) -> Complex<T> {
        let tol = T::of(1e-12);
        let half_pi = T::PI() * T::of(0.5);
        if theta.abs() < tol {
            return Complex::new(T::one(), T::zero());
        }
        let half = self.a * T::of(0.5);
        if (theta + half_pi).abs() < tol {
            // chi(-i) = 1 - a(1+i)/2
            return Complex::new(T::one() - half, -half);
        }
        if (theta - half_pi).abs() < tol {
            return Complex::new(T::one() - half, half);
        }
        self.eval(Complex::from_polar(T::one(), theta))
            .expect("cusp boundary is regular away from the branch points")
    }
}

impl<T: Real> Default for CuspMap<T> {
    fn default() -> Self {
        CuspMap::new()
    }
}

impl<T: Real> AnalyticMap<T> for CuspMap<T> {
    fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        let one = Complex::new(T::one(), T::zero());
        if (z - one).norm() < T::of(1e-14) {
            return Err(Error::BoundarySingularity("z = 1".into()));
        }
        let (_, _, chi2) = self.stages(z)?;
        let chi3 = Complex::new(self.a, T::zero()) / chi2;
        Ok(one - chi3)
    }

    fn deriv(&self, z: Complex<T>) -> Result<Complex<T>> {
        let i = Complex::new(T::zero(), T::one());
        let one = Complex::new(T::one(), T::zero());
        let (s, chi0, chi2) = self.stages(z)?;
        if s.norm() < T::of(1e-14) {
            return Err(Error::BoundarySingularity("z = i".into()));
        }
        let denom = i * z - one;
        let w_prime = Complex::new(-T::of(2.0), T::zero()) / (denom * denom);
        let s_prime = w_prime / (s * Complex::new(T::of(2.0), T::zero()));
        let c = one - i * s;
        let chi0_prime = Complex::new(T::of(2.0), T::zero()) * s_prime / (c * c);
        let chi1_prime = chi0_prime / chi0;
        // chi' = -(2a/pi) chi1' / chi2^2
        let factor = Complex::new(-T::of(2.0) * self.a / T::PI(), T::zero());
        Ok(factor * chi1_prime / (chi2 * chi2))
    }

    fn eval_limit(&self, z: Complex<T>) -> Result<Complex<T>> {
        let one = Complex::new(T::one(), T::zero());
        if (z - one).norm() < T::of(1e-12) {
            return Ok(one);
        }
        let i = Complex::new(T::zero(), T::one());
        if (z + i).norm() < T::of(1e-12) {
            let half = self.a * T::of(0.5);
            return Ok(Complex::new(T::one() - half, -half));
        }
        self.eval(z)
    }
}

struct ExpReciprocalMap<T: Real> {
    f: Arc<dyn AnalyticMap<T>>,
    /// a = e^{-1/f(0)}, so the composed symbol fixes the origin.
    a: Complex<T>,
}

impl<T: Real> ExpReciprocalMap<T> {
    fn sigma0(&self, z: Complex<T>) -> Result<Complex<T>> {
        let fz = self.f.eval(z)?;
        if !(fz.re.is_finite() && fz.im.is_finite()) {
            if fz.re == T::infinity() {
                // f -> +infinity: sigma0 -> 1 (the peaking limit)
                return Ok(Complex::new(T::one(), T::zero()));
            }
            return Err(Error::BoundarySingularity(
                "non-finite generator value".into(),
            ));
        }
        Ok((-fz.inv()).exp())
    }
}

impl<T: Real> AnalyticMap<T> for ExpReciprocalMap<T> {
    fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        let s0 = self.sigma0(z)?;
        let one = Complex::new(T::one(), T::zero());
        Ok((s0 - self.a) / (one - self.a.conj() * s0))
    }

    fn deriv(&self, z: Complex<T>) -> Result<Complex<T>> {
        let fz = self.f.eval(z)?;
        if !(fz.re.is_finite() && fz.im.is_finite()) {
            return Err(Error::BoundarySingularity("peaking contact point".into()));
        }
        let s0 = (-fz.inv()).exp();
        let s0_prime = s0 * self.f.deriv(z)? / (fz * fz);
        let one = Complex::new(T::one(), T::zero());
        let d = one - self.a.conj() * s0;
        let mobius_prime = Complex::new(T::one() - self.a.norm_sqr(), T::zero()) / (d * d);
        Ok(mobius_prime * s0_prime)
    }

    fn eval_limit(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.eval(z)
    }
}

struct CompositeMap<T: Real> {
    outer: Arc<dyn AnalyticMap<T>>,
    inner: Arc<dyn AnalyticMap<T>>,
}

impl<T: Real> AnalyticMap<T> for CompositeMap<T> {
    fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.outer.eval(self.inner.eval(z)?)
    }
    fn deriv(&self, z: Complex<T>) -> Result<Complex<T>> {
        let inner_val = self.inner.eval(z)?;
        Ok(self.outer.deriv(inner_val)? * self.inner.deriv(z)?)
    }
    fn eval_limit(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.outer.eval_limit(self.inner.eval_limit(z)?)
    }
}

/// Wrap closures as an analytic map (for tests and ad-hoc symbols).
pub fn map_from_fns<T, E, D>(eval: E, deriv: D) -> Arc<dyn AnalyticMap<T>>
where
    T: Real,
    E: Fn(Complex<T>) -> Complex<T> + Send + Sync + 'static,
    D: Fn(Complex<T>) -> Complex<T> + Send + Sync + 'static,
{
    struct FnMap<T, E, D> {
        eval: E,
        deriv: D,
        _marker: std::marker::PhantomData<T>,
    }
    impl<T, E, D> AnalyticMap<T> for FnMap<T, E, D>
    where
        T: Real,
        E: Fn(Complex<T>) -> Complex<T> + Send + Sync,
        D: Fn(Complex<T>) -> Complex<T> + Send + Sync,
    {
        fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
            Ok((self.eval)(z))
        }
        fn deriv(&self, z: Complex<T>) -> Result<Complex<T>> {
            Ok((self.deriv)(z))
        }
    }
    Arc::new(FnMap {
        eval,
        deriv,
        _marker: std::marker::PhantomData,
    })
}

// ---------------------------------------------------------------------------
// Symbol
// ---------------------------------------------------------------------------

/// An analytic self-map of the disk together with whatever models it admits.
#[derive(Clone)]
pub struct Symbol<T: Real> {
    map: Option<Arc<dyn AnalyticMap<T>>>,
    pub fixes_origin: bool,
    pub valence_model: Option<CountingModel<T>>,
    pub image_region: Option<RegionModel<T>>,
    /// Boundary angles where the symbol makes unimodular contact; used to
    /// concentrate Monte Carlo sampling and label boundary scans.
    pub contact_hints: Vec<T>,
    pub label: String,
}

impl<T: Real> std::fmt::Debug for Symbol<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol")
            .field("label", &self.label)
            .field("fixes_origin", &self.fixes_origin)
            .field("evaluable", &self.map.is_some())
            .field("has_valence_model", &self.valence_model.is_some())
            .field("has_image_region", &self.image_region.is_some())
            .finish()
    }
}

impl<T: Real> Symbol<T> {
    pub fn identity() -> Self {
        Symbol {
            map: Some(Arc::new(MonomialMap {
                degree: 1,
                scale: Complex::new(T::one(), T::zero()),
            })),
            fixes_origin: true,
            valence_model: None,
            image_region: Some(RegionModel::FullDisk),
            contact_hints: Vec::new(),
            label: "identity".into(),
        }
    }

    /// phi(z) = scale * z^degree, |scale| <= 1.
    pub fn monomial(degree: u32, scale: Complex<T>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidParameter("monomial degree must be >= 1".into()));
        }
        if scale.norm() > T::one() {
            return Err(Error::InvalidParameter(
                "monomial scale must have modulus <= 1".into(),
            ));
        }
        let univalent_rotation = degree == 1 && (scale.norm() - T::one()).abs() < T::of(1e-15);
        Ok(Symbol {
            map: Some(Arc::new(MonomialMap { degree, scale })),
            fixes_origin: true,
            valence_model: None,
            image_region: univalent_rotation.then_some(RegionModel::FullDisk),
            contact_hints: Vec::new(),
            label: format!("monomial(deg {degree})"),
        })
    }

    /// Disk automorphism phi_a(z) = (z - a)/(1 - conj(a) z).
    pub fn mobius_shift(a: Complex<T>) -> Result<Self> {
        if a.norm() >= T::one() {
            return Err(Error::ShiftOutsideDisk);
        }
        Ok(Symbol {
            map: Some(Arc::new(MobiusMap { a })),
            fixes_origin: a.norm() == T::zero(),
            valence_model: None,
            image_region: Some(RegionModel::FullDisk),
            contact_hints: Vec::new(),
            label: "mobius".into(),
        })
    }

    /// The cusp map, with its exact image-region model and the contact
    /// point at angle 0.
    pub fn cusp_map() -> Self {
        let map = CuspMap::<T>::new();
        let a = map.a;
        Symbol {
            map: Some(Arc::new(map)),
            fixes_origin: true,
            valence_model: None,
            image_region: Some(RegionModel::Cusp { a }),
            contact_hints: vec![T::zero()],
            label: "cusp".into(),
        }
    }

    /// sigma = phi_a o e^{-1/f} with a = e^{-1/f(0)}: a Hilbert-Schmidt
    /// symbol whenever Re f >= 1, which is verified on a sampled grid.
    pub fn exp_reciprocal(f: Arc<dyn AnalyticMap<T>>, grid: usize) -> Result<Self> {
        let side = (grid as f64).sqrt().ceil() as usize;
        let mut min_re = T::infinity();
        for ir in 0..side {
            let r = T::of_usize(ir) / T::of_usize(side) * T::of(0.995);
            for it in 0..side {
                let theta = T::of(2.0) * T::PI() * T::of_usize(it) / T::of_usize(side);
                let fz = f.eval(Complex::from_polar(r, theta))?;
                if fz.re < min_re {
                    min_re = fz.re;
                }
            }
        }
        if min_re < T::one() - T::of(1e-9) {
            return Err(Error::ExpReciprocalHypothesis {
                min: min_re.as_f64(),
            });
        }
        let f0 = f.eval(Complex::new(T::zero(), T::zero()))?;
        let a = (-f0.inv()).exp();
        Ok(Symbol {
            map: Some(Arc::new(ExpReciprocalMap { f, a })),
            fixes_origin: true,
            valence_model: None,
            image_region: None,
            contact_hints: Vec::new(),
            label: "exp_reciprocal".into(),
        })
    }

    /// Comb symbol: the conformal map onto the comb region is never
    /// constructed; the symbol exists through its counting model only.
    pub fn comb(g: Profile<T>, h: Profile<T>) -> Result<Self> {
        // g must decrease on a test grid spanning several decades.
        let mut prev = T::infinity();
        for k in 0..200 {
            let t = T::of(10f64.powf(-4.0 + 6.0 * k as f64 / 199.0));
            let v = g.eval(t);
            if !(v > T::zero()) || v > prev + T::of(1e-12) {
                return Err(Error::InvalidProfile(
                    "g must be positive and non-increasing on the test grid".into(),
                ));
            }
            prev = v;
            let hv = h.eval(t);
            if !(hv > T::zero()) {
                return Err(Error::InvalidProfile("h must be positive".into()));
            }
        }
        Ok(Symbol {
            map: None,
            fixes_origin: false,
            valence_model: Some(CountingModel { g, h }),
            image_region: None,
            contact_hints: Vec::new(),
            label: "comb".into(),
        })
    }

    /// Separation-comb Riemann map onto the dyadic comb region: univalent,
    /// origin-fixing, known only through its image region.
    pub fn separation(seq: SeparationSeq<T>) -> Self {
        Symbol {
            map: None,
            fixes_origin: true,
            valence_model: None,
            image_region: Some(RegionModel::Separation { seq }),
            contact_hints: vec![T::zero()],
            label: "separation".into(),
        }
    }

    pub fn compose(outer: &Symbol<T>, inner: &Symbol<T>) -> Result<Self> {
        let outer_map = outer.map.clone().ok_or(Error::OuterNotEvaluable)?;
        let inner_map = inner.map.clone().ok_or(Error::NoBackend)?;
        Ok(Symbol {
            map: Some(Arc::new(CompositeMap {
                outer: outer_map,
                inner: inner_map,
            })),
            fixes_origin: outer.fixes_origin && inner.fixes_origin,
            valence_model: None,
            image_region: None,
            contact_hints: inner.contact_hints.clone(),
            label: format!("{} . {}", outer.label, inner.label),
        })
    }

    /// Wrap a raw analytic map.
    pub fn from_map(
        map: Arc<dyn AnalyticMap<T>>,
        fixes_origin: bool,
        label: impl Into<String>,
    ) -> Self {
        Symbol {
            map: Some(map),
            fixes_origin,
            valence_model: None,
            image_region: None,
            contact_hints: Vec::new(),
            label: label.into(),
        }
    }

    pub fn with_contact_hints(mut self, hints: Vec<T>) -> Self {
        self.contact_hints = hints;
        self
    }

    pub fn is_evaluable(&self) -> bool {
        self.map.is_some()
    }

    pub fn eval(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.map.as_ref().ok_or(Error::NoBackend)?.eval(z)
    }

    pub fn deriv(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.map.as_ref().ok_or(Error::NoBackend)?.deriv(z)
    }

    /// Evaluation extended by continuity at removable boundary points.
    pub fn eval_limit(&self, z: Complex<T>) -> Result<Complex<T>> {
        self.map.as_ref().ok_or(Error::NoBackend)?.eval_limit(z)
    }

    /// sup |phi| over a sampled circle.
    pub fn sup_on_circle(&self, radius: T, samples: usize) -> Result<T> {
        let two_pi = T::of(2.0) * T::PI();
        let mut sup = T::zero();
        for k in 0..samples {
            let theta = two_pi * T::of_usize(k) / T::of_usize(samples);
            let v = self.eval(Complex::from_polar(radius, theta))?.norm();
            if v > sup {
                sup = v;
            }
        }
        Ok(sup)
    }
}
