//! Named verification checks. Each returns a [`CheckReport`] with the
//! measured value, its threshold and the verdict; the CLI and the acceptance
//! suite both go through these.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_rational::Ratio;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    decay_certificate_window, energy_inequality_check, fit_exponential, fit_power, sup_series, vanishing_order_fit,
    weighted_norm_report, EnergyInequalityReport, Series, SliceOptions, WeightedNormReport, M_GROWTH_LIMIT,
};
use crate::compat::{check_compatibility, compute_jet, verify_jet, GaussianBump, NonlinearitySpec, RadialProfile, VerifyOptions};
use crate::cylinder::{commutator_residual, interior_points, intertwining_residual, test_battery};
use crate::geometry::{
    boundary_curve, boundary_curve_slope, boundary_curve_tol, conformal_factor, conformal_factor_minkowski, frame_at_einstein,
    to_einstein, EinsteinEvent, MinkowskiEvent, ObstacleSpec,
};
use crate::nullform::{
    check_null_quasilinear, check_null_semilinear, cone_sample_oracle, cone_witness, random_quadratic, transformed_q0_coefficients,
    CubicFormSpec, QuadraticFormSpec,
};
use crate::solver::Trajectory;
use crate::{Error, Result};

/// Direction of the threshold comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    AtMost,
    AtLeast,
}

impl Bound {
    pub fn symbol(self) -> &'static str {
        match self {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    /// Short label of the identity or estimate being checked.
    pub anchor: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub pass: bool,
    pub details: Vec<(String, f64)>,
}

impl CheckReport {
    fn new(name: &str, anchor: &'static str, value: f64, threshold: f64, pass: bool) -> Self {
        Self { name: name.to_string(), anchor, value, threshold, bound: Bound::AtMost, pass, details: Vec::new() }
    }

    fn at_least(mut self) -> Self {
        self.bound = Bound::AtLeast;
        self
    }

    fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.push((key.to_string(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Names accepted by [`run_builtin`].
pub const BUILTIN_CHECKS: [&str; 6] = ["identity-omega", "intertwining", "commutator", "null-classifier", "boundary", "vanishing-order"];

/// Run one of the checks that need no trajectory.
pub fn run_builtin(name: &str, seed: u64) -> Result<CheckReport> {
    match name {
        "identity-omega" => Ok(identity_omega(10_000, seed)),
        "intertwining" => intertwining(1e-3, 20, seed),
        "commutator" => Ok(commutator(1e-3, 50, seed)),
        "null-classifier" => Ok(null_classifier(seed)),
        "boundary" => boundary(&ObstacleSpec::sphere(0.2)?),
        "vanishing-order" => vanishing_order(),
        other => Err(Error::Config(format!("unknown check {other:?}"))),
    }
}

/// The two closed forms of the conformal factor agree on random points of
/// `[0, 50]^2`.
pub fn identity_omega(n: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let t: f64 = rng.gen_range(0.0..50.0);
        let r: f64 = rng.gen_range(0.0..50.0);
        let image = to_einstein(&MinkowskiEvent { t, r, omega: [0.0, 0.0, 1.0] });
        let a = conformal_factor_minkowski(t, r);
        let b = conformal_factor(image.einstein.time, image.einstein.polar);
        worst = worst.max((a - b).abs());
    }
    CheckReport::new("identity-omega", "conformal factor closed forms", worst, 1e-12, worst < 1e-12).detail("points", n as f64)
}

/// Refinement ratios must sit in this band for an observed second order.
pub const RATIO_BAND: (f64, f64) = (3.5, 4.5);

fn in_band(x: f64) -> bool {
    x >= RATIO_BAND.0 && x <= RATIO_BAND.1
}

/// `(box_g + 1) v` against `Omega^{-3} box(Omega v)` on the test battery.
pub fn intertwining(h: f64, points: usize, seed: u64) -> Result<CheckReport> {
    let pts = interior_points(points, seed);
    let mut worst: f64 = 0.0;
    let mut ratios_ok = true;
    let mut report_details = Vec::new();
    for tf in test_battery() {
        let e1 = intertwining_residual(&tf.f, &pts, h)?;
        let e2 = intertwining_residual(&tf.f, &pts, 2.0 * h)?;
        worst = worst.max(e1);
        ratios_ok &= in_band(e2 / e1);
        report_details.push((format!("{}.error", tf.name), e1));
        report_details.push((format!("{}.ratio", tf.name), e2 / e1));
    }
    let mut rep = CheckReport::new("intertwining", "conformal intertwining of wave operators", worst, 1e-4, worst < 1e-4 && ratios_ok);
    rep.details = report_details;
    Ok(rep)
}

/// `[box_g, X]` identity on the test battery, with the refinement ratio
/// `residual(2h) / residual(h)`.
pub fn commutator(h: f64, points: usize, seed: u64) -> CheckReport {
    let pts = interior_points(points, seed);
    let mut worst: f64 = 0.0;
    let mut ratios_ok = true;
    let mut details = Vec::new();
    for tf in test_battery() {
        let r1 = commutator_residual(&tf.f, &pts, h);
        let r2 = commutator_residual(&tf.f, &pts, 2.0 * h);
        worst = worst.max(r1);
        ratios_ok &= in_band(r2 / r1);
        details.push((format!("{}.residual", tf.name), r1));
        details.push((format!("{}.ratio", tf.name), r2 / r1));
    }
    let mut rep = CheckReport::new("commutator", "commutator of box_g with the boundary field", worst, 1e-5, worst < 1e-5 && ratios_ok);
    rep.details = details;
    rep
}

/// Classifier fixtures plus agreement with the cone oracle on 50 random forms.
pub fn null_classifier(seed: u64) -> CheckReport {
    type Q = Ratio<i64>;
    let mut exact_ok = check_null_semilinear(&QuadraticFormSpec::<Q>::q0()).1.residual == 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let (ok, dec) = check_null_semilinear(&QuadraticFormSpec::<Q>::q_ij(i, j));
            exact_ok &= ok && dec.residual == 0.0;
        }
    }
    let mut mixed = QuadraticFormSpec::<f64>::zeros(1);
    mixed.set([0; 3], 0, 1, 0.5);
    mixed.set([0; 3], 1, 0, 0.5);
    let mut min_witness = f64::INFINITY;
    let mut rejected = true;
    for q in [QuadraticFormSpec::<f64>::dt_squared(), mixed] {
        rejected &= !check_null_semilinear(&q).0;
        min_witness = min_witness.min(cone_witness(&q).1);
    }
    let mut cubic_ok = check_null_quasilinear(&CubicFormSpec::<Q>::q_ij_derivative(1, 2, 3)).0;
    for m in 0..4 {
        cubic_ok &= check_null_quasilinear(&CubicFormSpec::<Q>::q0_derivative(m)).0;
        cubic_ok &= check_null_quasilinear(&CubicFormSpec::<Q>::wave_times_derivative(m)).0;
    }
    cubic_ok &= !check_null_quasilinear(&CubicFormSpec::<f64>::dt_dtt()).0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut disagreements = 0usize;
    for trial in 0..50u64 {
        let eps = if trial % 2 == 0 { 0.0 } else { 1e-3 };
        let q = random_quadratic(&mut rng, eps);
        let verdict = check_null_semilinear(&q).0;
        let oracle = cone_sample_oracle(&q, 100, seed.wrapping_add(trial));
        disagreements += usize::from(verdict != (oracle < 1e-12));
    }
    let pass = exact_ok && rejected && min_witness >= 1.0 && cubic_ok && disagreements == 0;
    CheckReport::new("null-classifier", "null condition", disagreements as f64, 0.0, pass)
        .detail("exact_fixtures_null", f64::from(u8::from(exact_ok)))
        .detail("non_null_rejected", f64::from(u8::from(rejected)))
        .detail("min_cone_witness", min_witness)
        .detail("cubic_fixtures_ok", f64::from(u8::from(cubic_ok)))
}

/// Compatibility jets against a fine-step reference (orders up to 4) for the
/// linear and `q_0` cases, and rejection of data linear in `r - r_b`.
pub fn compatibility() -> Result<CheckReport> {
    let rb = 0.2;
    let obs = ObstacleSpec::sphere(rb)?;
    let dr = 1e-2;
    let n = ((3.5 - rb) / dr).round() as usize + 1;
    let b = GaussianBump { center: 1.5, width: 0.25, amplitude: 1.0 };
    let f = RadialProfile::from_fn(rb, dr, n, |r| 0.25 * b.eval(r))?;
    let g = b.profile(rb, dr, n)?.scaled(0.5);
    let mut worst: f64 = 0.0;
    let mut rep_details = Vec::new();
    for nl in [NonlinearitySpec::zero(), NonlinearitySpec::q0_radial()] {
        let jet = compute_jet(&f, &g, &nl, 4)?;
        let errs = verify_jet(&jet, &f, &g, &nl, &VerifyOptions::default())?;
        for (k, e) in errs.iter().enumerate() {
            rep_details.push((format!("{}.order{k}", nl.name()), *e));
            worst = worst.max(*e);
        }
    }
    let wide = GaussianBump { center: 0.6, width: 0.4, amplitude: 1.0 };
    let fixture = RadialProfile::from_fn(rb, 2e-3, ((3.5 - rb) / 2e-3).round() as usize + 1, |r| (r - rb) * wide.eval(r))?;
    let jet = compute_jet(&fixture, &fixture.zeros_like(), &NonlinearitySpec::zero(), 3)?;
    let fixture_rep = check_compatibility(&jet, &obs, 3, None)?;
    let fixture_ok = !fixture_rep.pass && fixture_rep.first_failure == Some(2);
    let mut rep = CheckReport::new("compat", "compatibility functions", worst, 1e-3, worst < 1e-3 && fixture_ok);
    rep.details = rep_details;
    Ok(rep.detail("fixture_first_failure", fixture_rep.first_failure.map_or(-1.0, |k| k as f64)))
}

/// Relative drift of `E_total` over `t <= until`.
pub fn energy_conservation(traj: &Trajectory, until: f64) -> CheckReport {
    let m = &traj.monitors;
    let e0 = m.e_total[0];
    let mut drift: f64 = 0.0;
    for (t, e) in m.t.iter().zip(&m.e_total) {
        if *t <= until {
            drift = drift.max(((e - e0) / e0).abs());
        }
    }
    let outer = m.e_outer.iter().fold(0.0f64, |a, b| a.max(*b));
    let peak = m.e_total.iter().fold(0.0f64, |a, b| a.max(*b));
    let pass = drift < 1e-3 && drift.is_finite();
    CheckReport::new("energy-conservation", "energy identity", drift, 1e-3, pass)
        .detail("until", until)
        .detail("outer_energy_fraction", if peak > 0.0 { outer / peak } else { 0.0 })
}

/// Cylinder energy inequality on all covered rows, with 2% slack. Without
/// forcing the growth `max ||v'(T)|| / ||v'(0)||` must also stay below 1.02.
pub fn energy_inequality(
    traj: &Trajectory,
    obs: &ObstacleSpec,
    forcing: Option<&dyn Fn(f64, f64) -> f64>,
    opts: &SliceOptions,
) -> Result<CheckReport> {
    let rep = energy_inequality_check(traj, obs, forcing, opts)?;
    Ok(energy_inequality_verdict(&rep, forcing.is_none()))
}

/// Verdict of [`energy_inequality`] for an existing report.
pub fn energy_inequality_verdict(rep: &EnergyInequalityReport, homogeneous: bool) -> CheckReport {
    let mut pass = rep.relative_excess <= 0.02;
    if homogeneous {
        pass &= rep.growth_ratio <= 1.02;
    }
    let name = if homogeneous { "energy-inequality" } else { "energy-inequality-forced" };
    CheckReport::new(name, "unperturbed energy inequality", rep.relative_excess, 0.02, pass)
        .detail("growth_ratio", rep.growth_ratio)
        .detail("max_excess", rep.max_excess)
        .detail("rows", rep.rows.len() as f64)
        .detail("lhs0", rep.rows[0].lhs)
        .detail("t_last_row", rep.rows[rep.rows.len() - 1].time)
}

/// Exponential fit to `E_local` over `window`: needs `c > 0` and `R^2 >= 0.95`.
pub fn morawetz(traj: &Trajectory, window: (f64, f64)) -> CheckReport {
    let m = &traj.monitors;
    let peak = m.e_local.iter().fold(0.0f64, |a, b| a.max(*b));
    let at = |t_end: f64| m.t.iter().zip(&m.e_local).filter(|(t, _)| **t <= t_end).last().map_or(0.0, |(_, e)| *e);
    let drop = if peak > 0.0 { at(window.1) / peak } else { 0.0 };
    let base = CheckReport::new("morawetz", "local energy decay", f64::NAN, 0.95, false)
        .at_least()
        .detail("rho", traj.rho)
        .detail("relative_drop_at_window_end", drop);
    let fit = Series::new(m.t.clone(), m.e_local.clone()).and_then(|s| fit_exponential(&s, Some(window)));
    match fit {
        Ok(fit) => {
            let mut rep = base.detail("rate", fit.rate()).detail("window_start", window.0).detail("window_end", window.1);
            rep.value = fit.r_squared;
            rep.pass = fit.rate() > 0.0 && fit.r_squared >= 0.95;
            rep
        }
        Err(_) => base,
    }
}

/// Sup-norm power fit plus the weighted decay certificate.
pub fn decay(traj: &Trajectory, sigma: f64, power_window: (f64, f64), plateau_window: (f64, f64)) -> Result<CheckReport> {
    let sup = sup_series(traj);
    let series = Series::new(sup.iter().map(|p| p.0).collect(), sup.iter().map(|p| p.1).collect())?;
    let fit = fit_power(&series, Some(power_window));
    let exponent = fit.as_ref().map_or(f64::NAN, |f| f.exponent());
    let cert = decay_certificate_window(traj, sigma, plateau_window)?;
    let band0 = cert.band_table[0].max;
    let band_last = cert.band_table[cert.band_table.len() - 1].max;
    let exponent_ok = (-1.15..=-0.85).contains(&exponent);
    let pass = exponent_ok && cert.c_sup.is_finite() && cert.plateau_ratio <= 2.0;
    let mut rep = CheckReport::new("decay", "pointwise decay certificate", cert.plateau_ratio, 2.0, pass)
        .detail("sigma", sigma)
        .detail("sup_exponent", exponent)
        .detail("sup_fit_r2", fit.as_ref().map_or(f64::NAN, |f| f.r_squared))
        .detail("c_sup", cert.c_sup)
        .detail("band_ordering_ok", f64::from(u8::from(band_last <= band0)));
    for b in &cert.band_table {
        rep = rep.detail(&format!("band[{},{})", b.lo, b.hi), b.max);
    }
    Ok(rep)
}

/// Reduced-order `m(T)` on the transformed trajectory for `T` up to `t_end`.
pub fn weighted_norm(traj: &Trajectory, obs: &ObstacleSpec, order: usize, sigma: f64, t_end: f64, opts: &SliceOptions) -> Result<CheckReport> {
    let rep = weighted_norm_report(traj, obs, order, sigma, (0.1, t_end), opts)?;
    Ok(weighted_norm_verdict_report(&rep, t_end))
}

/// Verdict of [`weighted_norm`] for an existing report.
pub fn weighted_norm_verdict_report(rep: &WeightedNormReport, t_end: f64) -> CheckReport {
    let peak = rep.rows.iter().fold(0.0f64, |a, r| a.max(r.m));
    CheckReport::new("weighted-norm", "weighted norm boundedness", rep.growth_ratio, M_GROWTH_LIMIT, rep.bounded)
        .detail("order", rep.order as f64)
        .detail("sigma", rep.sigma)
        .detail("t_end", t_end)
        .detail("rows", rep.rows.len() as f64)
        .detail("max_m", peak)
        .detail("last_third_spread", rep.spread_ratio)
}

/// Quadratic collapse of the boundary curve, its monotonicity and the
/// closed-form slope.
pub fn boundary(obs: &ObstacleSpec) -> Result<CheckReport> {
    // ratio Phi / (pi - T)^2 on [1, pi - 1e-3], denser towards the tip
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for k in 0..=400 {
        let s = (PI - 1.0) * (1e-3 / (PI - 1.0)).powf(k as f64 / 400.0);
        let ratio = boundary_curve(obs, PI - s)? / (s * s);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let band_ok = lo > 0.0 && hi.is_finite();
    let mut decreasing = true;
    let mut c_min = f64::INFINITY;
    for k in 0..=200 {
        let time = 0.1 + (PI - 0.2) * k as f64 / 200.0;
        let slope = boundary_curve_slope(obs, time)?;
        decreasing &= slope < 0.0;
        c_min = c_min.min(-slope / time.min(PI - time));
    }
    let h = 1e-5;
    let mut worst_fd: f64 = 0.0;
    for k in 1..40 {
        let time = k as f64 * PI / 40.0;
        let fine = |x: f64| boundary_curve_tol(obs, x, 1e-15);
        let fd = (fine(time + h)? - fine(time - h)?) / (2.0 * h);
        let closed = boundary_curve_slope(obs, time)?;
        worst_fd = worst_fd.max(((closed - fd) / closed).abs());
    }
    let pass = band_ok && decreasing && c_min > 0.0 && worst_fd < 1e-6;
    Ok(CheckReport::new("boundary", "collapse of the obstacle image", worst_fd, 1e-6, pass)
        .detail("ratio_min", lo)
        .detail("ratio_max", hi)
        .detail("slope_bound_c", c_min)
        .detail("strictly_decreasing", f64::from(u8::from(decreasing))))
}

/// Log-log slopes at the tip along `R = (pi - T) / 8`.
pub fn vanishing_order() -> Result<CheckReport> {
    let mut frame = Vec::new();
    let mut q0 = Vec::new();
    for k in 0..14 {
        let s = 0.5 * 0.5f64.powi(k);
        let ev = EinsteinEvent { time: PI - s, polar: s / 8.0, omega: [0.0, 0.0, 1.0] };
        let dist = (s * s + ev.polar * ev.polar).sqrt();
        frame.push((dist, frame_at_einstein(&ev)?.jac[0][0]));
        q0.push((dist, transformed_q0_coefficients(&ev)?.a_max()));
    }
    let f = vanishing_order_fit(&frame)?;
    let a = vanishing_order_fit(&q0)?;
    let value = f.slope.min(a.slope);
    Ok(CheckReport::new("vanishing-order", "vanishing of coefficients at the tip", value, 1.9, value >= 1.9)
        .at_least()
        .detail("frame_slope", f.slope)
        .detail("q0_a_block_slope", a.slope))
}

/// Helper for callers that want a compact summary line.
pub fn summary(rep: &CheckReport) -> String {
    let verdict = if rep.pass { "PASS" } else { "FAIL" };
    format!("{verdict} {} value={:.6e} {} {:.3e}", rep.name, rep.value, rep.bound.symbol(), rep.threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_checks_pass() {
        for name in BUILTIN_CHECKS {
            let rep = run_builtin(name, 1).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        assert!(run_builtin("nope", 1).is_err());
    }

    #[test]
    fn summary_line() {
        let rep = identity_omega(10, 3);
        assert!(summary(&rep).starts_with("PASS identity-omega"));
        assert_eq!(rep.get("points"), Some(10.0));
    }
}
