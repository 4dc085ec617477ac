//! Acceptance suite: one test per criterion, each printing a pass line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//! Tolerances are pinned in code; a failing assertion fails the criterion.

use std::time::Instant;

use num_complex::Complex;

use dirichlab::capacity::{
    capacity_ladder, energy, energy_fourier, equilibrium, ArcSet, EquilibriumOptions,
    PanelMeasure,
};
use dirichlab::operator::{
    build_matrix, carleson_window_average, hs_norm_integral, hs_norm_series, schatten_sum,
    schwarz_window_comparison, singular_values, window_bounds, window_mass, window_mass_with,
    Backend, ForcedBackend, SchattenOptions, SchattenVerdict, WindowAverageOptions,
};
use dirichlab::peaking::{
    build_q, hs_certificate, lower_bound_near_k, plan_peaking, potential_sum, PeakingFunction,
    PlanOptions,
};
use dirichlab::series::{dirichlet_norm_sq, series_from_samples};
use dirichlab::symbols::{CuspMap, Profile, SeparationSeq, Symbol};

type C = Complex<f64>;

fn close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}

/// Least-squares line fit returning (slope, r_squared).
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

#[test]
fn c01_hs_cross_check_half_map() {
    let start = Instant::now();
    let half = Symbol::monomial(1, C::new(0.5, 0.0)).unwrap();
    let series = hs_norm_series(&half, 24, 0.5).unwrap();
    let integral = hs_norm_integral(&half, &[8, 14, 20, 26]).unwrap();
    close(series.value, 1.0 / 3.0, 1e-6, "series route");
    close(integral.value, 1.0 / 3.0, 1e-6, "integral route");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?} >= 1 s");
    println!(
        "acceptance c01: PASS - HS(z/2) series {:.9}, integral {:.9}, {:?}",
        series.value, integral.value, elapsed
    );
}

#[test]
fn c02_capacity_normalization() {
    let mu = PanelMeasure::uniform_on(&ArcSet::full_circle(), 128).unwrap();
    let direct = energy(&mu).unwrap();
    close(direct, 1.0, 1e-6, "kernel quadrature energy of T");
    let fourier = energy_fourier(&mu, 4096).unwrap();
    close(fourier.value, 1.0, 1e-12, "Fourier energy of T (exact)");
    let res = equilibrium(&ArcSet::full_circle(), 128, &EquilibriumOptions::default()).unwrap();
    close(res.capacity, (-1.0f64).exp(), 1e-6, "Cap(T) = e^{-1}");
    println!(
        "acceptance c02: PASS - I(T) = {direct:.9} (quadrature), {:.12} (Fourier), Cap = {:.9}",
        fourier.value, res.capacity
    );
}

#[test]
fn c03_frostman_certificate_quarter_arc() {
    let set = ArcSet::from_arcs(&[(-std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4)])
        .unwrap();
    let opts = EquilibriumOptions::default(); // 1e4 grid, tol 1e-3 / 5e-3
    let mut energies = Vec::new();
    for panels in [128usize, 256, 512] {
        let res = equilibrium(&set, panels, &opts).unwrap();
        if panels == 512 {
            assert!(
                res.frostman_sup <= 1e-3,
                "frostman sup {} > 1e-3",
                res.frostman_sup
            );
            assert!(
                res.frostman_dev <= 5e-3,
                "frostman dev {} > 5e-3",
                res.frostman_dev
            );
            assert!(res.certificate_ok);
        }
        energies.push(res.energy);
    }
    // Richardson-stable to 3 digits across the refinement ladder
    close(energies[1], energies[2], 1e-3, "energy 256 vs 512");
    close(energies[0], energies[2], 2e-3, "energy 128 vs 512");
    println!(
        "acceptance c03: PASS - energies {:.6} / {:.6} / {:.6}",
        energies[0], energies[1], energies[2]
    );
}

#[test]
fn c04_capacity_zero_ladder() {
    let k = ArcSet::from_points(&[0.0]);
    let eps: Vec<f64> = (3..=12).map(|j| 2.0f64.powi(-j)).collect();
    let rows = capacity_ladder(&k, &eps, 256, &EquilibriumOptions::default()).unwrap();
    let gaps: Vec<f64> = rows
        .iter()
        .map(|row| row.energy - (1.0 / row.eps).ln())
        .collect();
    let band = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(band <= 2.0, "band width {band} > 2");
    for pair in rows.windows(2) {
        assert!(pair[1].energy > pair[0].energy, "ladder must increase");
    }
    println!(
        "acceptance c04: PASS - I(K_eps) - log(1/eps) in a band of width {band:.4} (gaps {:.4}..{:.4})",
        gaps.iter().cloned().fold(f64::INFINITY, f64::min),
        gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
}

#[test]
fn c05_peaking_construction() {
    let k = ArcSet::from_points(&[0.0]);
    let opts = PlanOptions::default();
    let plan = plan_peaking(&k, 3, &opts).unwrap();

    // schedule invariants, exactly as produced
    let ln32 = 32.0f64.ln();
    for (idx, term) in plan.terms.iter().enumerate() {
        let j = (idx + 1) as f64;
        assert!(term.energy >= 4.0 * j.powi(6), "I_{idx} below 4 j^6");
        assert!(
            term.ln_delta <= 2.0 * term.ln_eps - ln32 + 1e-12,
            "delta_j > eps_j^2/32"
        );
        assert_eq!(term.r(), 1.0 - term.delta, "r_j = 1 - delta_j exactly");
    }

    // Re f >= 1 - 1e-9 on a 10^4 grid
    let f = PeakingFunction::new(plan.clone());
    let mut min_re = f64::INFINITY;
    for ir in 0..100 {
        let r = ir as f64 / 99.0;
        for it in 0..100 {
            let theta = 2.0 * std::f64::consts::PI * it as f64 / 100.0;
            let v = f.eval(C::from_polar(r, theta));
            if v.re < min_re {
                min_re = v.re;
            }
        }
    }
    assert!(min_re >= 1.0 - 1e-9, "Re f = {min_re} dips below 1 - 1e-9");

    // single-term norm identity ||f_eps||^2 = I_eps within 1e-3 relative
    let mu = plan.terms[0].measure.clone();
    let i_eps = plan.terms[0].energy;
    let series = series_from_samples(|z| potential_sum(&mu, z), 0.999, 4096, 65536).unwrap();
    let norm_sq = dirichlet_norm_sq(&series, 0.0).unwrap();
    close(norm_sq, i_eps, 1e-3 * i_eps, "norm identity");

    // collar lower bounds certify U >= j near K
    for j in 1..=3usize {
        let b = lower_bound_near_k(&f, j, C::new(1.0, 0.0), 1e-6).unwrap();
        assert!(b >= j as f64 * (1.0 - 1e-6));
    }

    // Hilbert-Schmidt certificate for q stabilizes under refinement
    let q = build_q(&f, 10_000).unwrap();
    let cert = hs_certificate(&q, &[10, 14, 18, 22], Some(&f)).unwrap();
    assert!(cert.stable, "certificate not stable: {:?}", cert.refinements);
    let ceiling = cert.ceiling.unwrap();
    assert!(
        cert.estimate <= ceiling,
        "estimate {} above ceiling {}",
        cert.estimate,
        ceiling
    );
    println!(
        "acceptance c05: PASS - eps ln-schedule ({:.2}, {:.2}, {:.2}), min Re f = {min_re:.12}, norm identity {:.6} vs {:.6}, certificate {:.6} <= ceiling {:.6}",
        plan.terms[0].ln_eps, plan.terms[1].ln_eps, plan.terms[2].ln_eps,
        norm_sq, i_eps, cert.estimate, ceiling
    );
}

#[test]
fn c06_cusp_map_geometry_and_masses() {
    let cusp = Symbol::<f64>::cusp_map();
    // chi(0) = 0 within 1e-12
    let at0 = cusp.eval(C::new(0.0, 0.0)).unwrap().norm();
    assert!(at0 <= 1e-12, "chi(0) = {at0}");

    // sampled series of the cusp map also pins the constant term
    let series = series_from_samples(|z| cusp.eval(z).unwrap(), 0.9, 64, 512).unwrap();
    assert!(series.coeff(0).norm() <= 1e-8);

    // empirical sup |Im w| / h^2 over the image boundary, h in [1e-3, 1e-1]
    let a = CuspMap::<f64>::new().a;
    let mut sup_ratio = 0.0f64;
    let mut samples = 0usize;
    for k in 0..100_000 {
        let s = 1e-4 * (0.5f64 / 1e-4).powf(k as f64 / 99_999.0);
        let w = C::new(1.0, 0.0)
            + C::new(0.0, a / 2.0) * (C::new(1.0, 0.0) - C::from_polar(1.0, -s));
        let h = 1.0 - w.norm();
        if (1e-3..=1e-1).contains(&h) {
            samples += 1;
            sup_ratio = sup_ratio.max(w.im.abs() / (h * h));
        }
    }
    assert!(samples > 10_000);
    assert!(sup_ratio <= 2.0, "cusp pinch constant {sup_ratio}");

    // per generation n <= 14: at most 8 windows meet chi(D)
    let mut gen_masses = Vec::new();
    for n in 0..=14u32 {
        let sectors = 1u64 << n;
        let mut hit = 0usize;
        let mut total = 0.0f64;
        // windows near the contact angle 0 are the only candidates; scan a
        // symmetric range plus the rest for safety at small n
        let scan: Vec<u64> = if n <= 4 {
            (0..sectors).collect()
        } else {
            (0..8u64).chain(sectors - 8..sectors).collect()
        };
        for j in scan {
            let m = window_mass(&cusp, 0.0, n, j, 0, 0).unwrap();
            assert_eq!(m.backend, Backend::Geometric);
            if m.mass > 0.0 {
                hit += 1;
                total += m.mass;
            }
        }
        assert!(hit <= 8, "generation {n}: {hit} windows meet the image");
        gen_masses.push(total);
    }
    // log2 of the generation mass decays with slope -3 +/- 0.5 over [5, 12]
    let xs: Vec<f64> = (5..=12).map(|n| n as f64).collect();
    let ys: Vec<f64> = (5..=12).map(|n| gen_masses[n as usize].log2()).collect();
    let (slope, r2) = fit_line(&xs, &ys);
    assert!(
        (slope + 3.0).abs() <= 0.5,
        "generation-mass slope {slope} not within -3 +/- 0.5"
    );
    println!(
        "acceptance c06: PASS - chi(0) = {at0:.2e}, pinch sup {sup_ratio:.3}, mass slope {slope:.3} (R^2 = {r2:.4})"
    );
}

#[test]
fn c07_schatten_separation_verdicts() {
    let opts = SchattenOptions::default();
    // h_n = (n+1)^{-1}, i.e. p1 = 2
    let sep = Symbol::separation(SeparationSeq::Power { p1: 2.0 });
    let at2 = schatten_sum(&sep, 0.0, 2.0, 20, &opts).unwrap();
    assert_eq!(at2.verdict, SchattenVerdict::Diverging, "p = 2 must diverge");
    // generation totals behave like 1/(n+1) (up to the fixed 1/(2 pi))
    for n in [8usize, 14, 20] {
        let expect = 1.0 / (n as f64 + 1.0) / (2.0 * std::f64::consts::PI);
        close(
            at2.generation_totals[n],
            expect,
            0.05 * expect,
            "generation total",
        );
    }
    let at24 = at2.with_exponent(2.4);
    assert_eq!(at24.verdict, SchattenVerdict::Converging, "p = 2.4 must converge");
    let last_ratio = at24.generation_totals[20] / at24.generation_totals[19];
    assert!(last_ratio < 0.95, "generation ratio {last_ratio} >= 0.95");

    // h_n = 1/ln(n+2): compact but in no Schatten class
    let none = Symbol::separation(SeparationSeq::InvLog);
    let base = schatten_sum(&none, 0.0, 0.5, 20, &opts).unwrap();
    for p in [0.5, 1.0, 2.0, 4.0] {
        let rep = base.with_exponent(p);
        assert_eq!(
            rep.verdict,
            SchattenVerdict::Diverging,
            "no-Schatten sequence must diverge at p = {p}"
        );
    }
    println!(
        "acceptance c07: PASS - verdicts (p=1.6, 2, 2.4) = ({}, {}, {}); inv-log diverges at all p",
        at2.with_exponent(1.6).verdict.as_str(),
        at2.verdict.as_str(),
        at24.verdict.as_str()
    );
}

#[test]
fn c08_separation_areas_quadrature_vs_closed_form() {
    let sep = Symbol::separation(SeparationSeq::Power { p1: 2.0f64 });
    let mut worst = 0.0f64;
    for n in 0..=12u32 {
        let formula = window_mass(&sep, 0.0, n, 0, 0, 0).unwrap();
        assert_eq!(formula.backend, Backend::GeometricFormula);
        let quad = window_mass_with(&sep, 0.0, n, 0, 0, 0, ForcedBackend::Geometric).unwrap();
        let rel = (quad.mass - formula.mass).abs() / formula.mass;
        worst = worst.max(rel);
        assert!(
            rel <= 1e-3,
            "n = {n}: quadrature {} vs formula {} (rel {rel:.2e})",
            quad.mass,
            formula.mass
        );
    }
    println!("acceptance c08: PASS - worst relative deviation {worst:.2e} over n <= 12");
}

#[test]
fn c09_carleson_window_growth_and_boundedness() {
    let opts = WindowAverageOptions::default();
    // g = h = 1/t: averages grow along h = 2^-n and dominate c / log(1/(1-h))
    let unbounded = Symbol::comb(Profile::<f64>::OneOverT, Profile::OneOverT).unwrap();
    let mut last = 0.0;
    let mut fitted_c = f64::INFINITY;
    for n in 2..=12u32 {
        let h = 2.0f64.powi(-(n as i32));
        let avg = carleson_window_average(&unbounded, 0.0, h, &opts).unwrap();
        assert!(avg > last, "averages must increase at n = {n}");
        last = avg;
        fitted_c = fitted_c.min(avg * (1.0 / (1.0 - h)).ln());
    }
    assert!(fitted_c > 0.05, "fitted c = {fitted_c}");

    // univalent comb (h = 2 pi): averages stay in a fixed band
    let univalent = Symbol::comb(
        Profile::<f64>::OneOverT,
        Profile::Const(2.0 * std::f64::consts::PI),
    )
    .unwrap();
    let (band_lo, band_hi) = (0.5, 1.5);
    for n in 2..=12u32 {
        let h = 2.0f64.powi(-(n as i32));
        let avg = carleson_window_average(&univalent, 0.0, h, &opts).unwrap();
        assert!(
            (band_lo..=band_hi).contains(&avg),
            "univalent average {avg} outside [{band_lo}, {band_hi}] at n = {n}"
        );
    }
    println!(
        "acceptance c09: PASS - unbounded-comb averages reach {last:.1} with fitted c = {fitted_c:.3}; univalent averages within [{band_lo}, {band_hi}]"
    );
}

#[test]
fn c10_singular_value_decay() {
    // cusp truncation at N = 256: log sigma_n vs sqrt(n) fits a line with
    // negative slope and R^2 >= 0.9 over n in [10, 100]
    let cusp = Symbol::<f64>::cusp_map();
    let m256 = build_matrix(&cusp, 256, 0.0, 0.99).unwrap();
    let s256 = singular_values(&m256);
    let xs: Vec<f64> = (10..=100).map(|n| (n as f64).sqrt()).collect();
    let ys: Vec<f64> = (10..=100).map(|n| s256.values[n - 1].ln()).collect();
    let (slope, r2) = fit_line(&xs, &ys);
    assert!(slope < 0.0, "decay slope must be negative, got {slope}");
    assert!(r2 >= 0.9, "R^2 = {r2} < 0.9");

    // interlacing: sigma_k nondecreasing in N over {64, 128, 256}
    let s64 = singular_values(&build_matrix(&cusp, 64, 0.0, 0.99).unwrap());
    let s128 = singular_values(&build_matrix(&cusp, 128, 0.0, 0.99).unwrap());
    for k in 0..64 {
        assert!(s64.values[k] <= s128.values[k] + 1e-9, "64 vs 128 at {k}");
        assert!(s128.values[k] <= s256.values[k] + 1e-9, "128 vs 256 at {k}");
    }

    // non-compact control: phi = z^2 has sigma = sqrt(2) throughout the
    // populated half of the truncation
    let sq = Symbol::monomial(2, C::new(1.0, 0.0)).unwrap();
    let s = singular_values(&build_matrix(&sq, 32, 0.0, 0.7).unwrap());
    for k in 0..16 {
        close(s.values[k], 2.0f64.sqrt(), 1e-8, "sigma_k of z^2");
    }
    println!(
        "acceptance c10: PASS - decay slope {slope:.4} per sqrt(n) with R^2 = {r2:.4}; interlacing holds; z^2 spectrum flat at sqrt(2)"
    );
}

#[test]
fn c11_schwarz_window_comparison() {
    // exact geometric masses for the identity and the cusp at (alpha, beta)
    // = (0, 2): mass_beta <= (2^{1-n})^2 mass_alpha for every window
    let id = Symbol::<f64>::identity();
    for n in 2..=8u32 {
        let rep = schwarz_window_comparison(&id, 0.0, 2.0, n, 0, 0).unwrap();
        assert!(!rep.entries.is_empty());
    }
    let cusp = Symbol::<f64>::cusp_map();
    let mut checked = 0usize;
    for n in 2..=10u32 {
        let rep = schwarz_window_comparison(&cusp, 0.0, 2.0, n, 0, 0).unwrap();
        checked += rep.entries.len();
    }
    // Monte Carlo path with common random numbers (evaluable, no region):
    // z^2 exercises the 1 + 3 sigma tolerance
    let sq = Symbol::monomial(2, C::new(1.0, 0.0)).unwrap();
    for n in 2..=5u32 {
        schwarz_window_comparison(&sq, 0.0, 2.0, n, 200_000, 23).unwrap();
    }
    println!("acceptance c11: PASS - {checked} cusp windows checked, identity and Monte Carlo paths hold");
}

#[test]
fn c12_determinism_byte_reproducible() {
    // Monte Carlo window report rendered twice from scratch: identical bytes
    let sq = Symbol::monomial(2, C::new(1.0, 0.0)).unwrap();
    let opts = SchattenOptions {
        samples: 50_000,
        seed: 99,
        ..SchattenOptions::default()
    };
    let a = schatten_sum(&sq, 0.0, 2.0, 6, &opts).unwrap().to_csv();
    let b = schatten_sum(&sq, 0.0, 2.0, 6, &opts).unwrap().to_csv();
    assert_eq!(a, b, "window report CSV must be byte-identical");

    // spectrum CSV
    let cusp = Symbol::<f64>::cusp_map();
    let s1 = singular_values(&build_matrix(&cusp, 64, 0.0, 0.95).unwrap()).to_csv();
    let s2 = singular_values(&build_matrix(&cusp, 64, 0.0, 0.95).unwrap()).to_csv();
    assert_eq!(s1, s2, "spectrum CSV must be byte-identical");

    // seeded Monte Carlo masses bit-for-bit
    let m1 = window_mass_with(&sq, 0.0, 4, 2, 100_000, 5, ForcedBackend::MonteCarlo).unwrap();
    let m2 = window_mass_with(&sq, 0.0, 4, 2, 100_000, 5, ForcedBackend::MonteCarlo).unwrap();
    assert_eq!(m1.mass.to_bits(), m2.mass.to_bits());
    println!("acceptance c12: PASS - seeded reruns reproduce CSV bytes exactly");
}

#[test]
fn acceptance_window_bounds_sanity() {
    // shared geometry helper used across criteria: band edges and arcs
    let (r_lo, r_hi, th_lo, th_hi) = window_bounds::<f64>(3, 1);
    close(r_lo, 1.0 - 0.125, 1e-15, "r_lo");
    close(r_hi, 1.0 - 0.0625, 1e-15, "r_hi");
    close(th_lo, 2.0 * std::f64::consts::PI / 8.0, 1e-15, "th_lo");
    close(th_hi, 2.0 * 2.0 * std::f64::consts::PI / 8.0, 1e-15, "th_hi");
}
