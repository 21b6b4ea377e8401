//! Fits and certificates computed from solver output: power and exponential
//! decay fits, the pointwise decay certificate, the cylinder energy
//! inequality, weighted-norm boundedness and vanishing orders at the tip.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::cylinder::{slice_integral, slice_l2, weighted_norms, Axis, CylinderField, LatticeSpec, MaskPolicy, WeightedDerivativeSpec};
use crate::geometry::{boundary_curve, ObstacleSpec};
use crate::solver::{time_cap, transform_source, transform_to_cylinder, Trajectory};
use crate::{Error, Result};

/// Samples `(t_i, y_i)` with strictly increasing, finite abscissae and
/// finite, nonnegative ordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    t: Vec<f64>,
    y: Vec<f64>,
}

impl Series {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::Config("series lengths differ".into()));
        }
        if t.iter().chain(&y).any(|v| !v.is_finite()) || y.iter().any(|v| *v < 0.0) {
            return Err(Error::Config("series values must be finite and y >= 0".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("series abscissae must increase strictly".into()));
        }
        Ok(Self { t, y })
    }

    pub fn from_fn(t: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(t.to_vec(), t.iter().map(|&x| f(x)).collect())
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Last geometric half `[sqrt(a b), b]`, where `a` is the first positive
    /// abscissa and `b` the last.
    pub fn default_window(&self) -> (f64, f64) {
        let b = self.t.last().copied().unwrap_or(0.0);
        match self.t.iter().find(|&&x| x > 0.0) {
            Some(&a) if a < b => ((a * b).sqrt(), b),
            _ => (b * 0.5, b),
        }
    }

    fn window_points(&self, window: (f64, f64)) -> Vec<(f64, f64)> {
        self.t.iter().zip(&self.y).filter(|(t, _)| **t >= window.0 && **t <= window.1).map(|(a, b)| (*a, *b)).collect()
    }
}

/// Least-squares line through transformed samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

impl FitResult {
    /// Power-law exponent (slope in log-log coordinates).
    pub fn exponent(&self) -> f64 {
        self.slope
    }

    /// Exponential rate `c` of `y ~ e^{-c t}`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

const MIN_FIT_POINTS: usize = 10;

fn least_squares(xs: &[f64], ys: &[f64], window: (f64, f64)) -> FitResult {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    FitResult { slope, intercept, r_squared, window, points: xs.len() }
}

fn positive_window(series: &Series, window: Option<(f64, f64)>) -> Result<((f64, f64), Vec<(f64, f64)>)> {
    let window = window.unwrap_or_else(|| series.default_window());
    let pts = series.window_points(window);
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!("{} points in window [{}, {}], need {MIN_FIT_POINTS}", pts.len(), window.0, window.1)));
    }
    if pts.iter().any(|(_, y)| *y <= 0.0) {
        return Err(Error::Fit(format!("nonpositive ordinate in window [{}, {}]", window.0, window.1)));
    }
    Ok((window, pts))
}

/// Fit `log y = slope log t + intercept`.
pub fn fit_power(series: &Series, window: Option<(f64, f64)>) -> Result<FitResult> {
    let (window, pts) = positive_window(series, window)?;
    if pts[0].0 <= 0.0 {
        return Err(Error::Fit("power fit needs t > 0".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    Ok(least_squares(&xs, &ys, window))
}

/// Fit `log y = slope t + intercept`; the decay rate is `-slope`.
pub fn fit_exponential(series: &Series, window: Option<(f64, f64)>) -> Result<FitResult> {
    let (window, pts) = positive_window(series, window)?;
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    Ok(least_squares(&xs, &ys, window))
}

/// Log-log slope of `|value|` against `dist` for samples approaching a point.
pub fn vanishing_order_fit(samples: &[(f64, f64)]) -> Result<FitResult> {
    if samples.len() < 8 {
        return Err(Error::Fit(format!("{} samples, need 8", samples.len())));
    }
    if samples.windows(2).any(|w| !(w[1].0 < w[0].0 && w[1].0 > 0.0)) {
        return Err(Error::Fit("distances must decrease and stay positive".into()));
    }
    if samples.iter().any(|(_, v)| !(v.abs() > f64::MIN_POSITIVE) || !v.is_finite()) {
        return Err(Error::Fit("sample value underflowed".into()));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.abs().ln()).collect();
    let window = (samples[samples.len() - 1].0, samples[0].0);
    Ok(least_squares(&xs, &ys, window))
}

/// Bin edges in `|t - r|` of the certificate's band table.
pub const BAND_EDGES: [f64; 6] = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEntry {
    pub lo: f64,
    /// `f64::INFINITY` for the last band.
    pub hi: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayCertificate {
    pub sigma: f64,
    pub c_sup: f64,
    pub band_table: Vec<BandEntry>,
    /// Sup of the weighted value over each stored frame.
    pub frame_t: Vec<f64>,
    pub frame_c: Vec<f64>,
    /// Tail window and its sub-window maxima.
    pub window: (f64, f64),
    pub window_c: Vec<f64>,
    /// `max / min` of `window_c`; 1 when the tail is identically zero.
    pub plateau_ratio: f64,
}

/// Number of sub-windows in the plateau estimate.
pub const PLATEAU_WINDOWS: usize = 6;

/// Weighted sup `|u| (1 + t) (1 + |t - r|)^{1 - sigma}` over every stored
/// frame node, with the plateau taken over the last half of the time range.
pub fn decay_certificate(traj: &Trajectory, sigma: f64) -> Result<DecayCertificate> {
    let t_last = traj.t_last();
    decay_certificate_window(traj, sigma, (0.5 * t_last, t_last))
}

/// [`decay_certificate`] with an explicit plateau window.
pub fn decay_certificate_window(traj: &Trajectory, sigma: f64, window: (f64, f64)) -> Result<DecayCertificate> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::Config(format!("sigma = {sigma} outside (0, 1]")));
    }
    if !(window.1 > window.0) {
        return Err(Error::Config("empty plateau window".into()));
    }
    let mut bands: Vec<BandEntry> = BAND_EDGES
        .iter()
        .enumerate()
        .map(|(k, &lo)| BandEntry { lo, hi: BAND_EDGES.get(k + 1).copied().unwrap_or(f64::INFINITY), max: 0.0 })
        .collect();
    let mut frame_t = Vec::with_capacity(traj.frames.len());
    let mut frame_c = Vec::with_capacity(traj.frames.len());
    for fr in &traj.frames {
        let mut c: f64 = 0.0;
        for (i, u) in fr.u.iter().enumerate() {
            let gap = (fr.t - traj.r(i)).abs();
            let w = u.abs() * (1.0 + fr.t) * (1.0 + gap).powf(1.0 - sigma);
            c = c.max(w);
            let k = BAND_EDGES.partition_point(|&e| e <= gap) - 1;
            bands[k].max = bands[k].max.max(w);
        }
        frame_t.push(fr.t);
        frame_c.push(c);
    }
    let c_sup = frame_c.iter().fold(0.0f64, |m, c| m.max(*c));
    let width = (window.1 - window.0) / PLATEAU_WINDOWS as f64;
    let mut window_c = vec![0.0f64; PLATEAU_WINDOWS];
    let mut hits = [0usize; PLATEAU_WINDOWS];
    for (t, c) in frame_t.iter().zip(&frame_c) {
        if *t < window.0 || *t > window.1 {
            continue;
        }
        let k = (((t - window.0) / width) as usize).min(PLATEAU_WINDOWS - 1);
        window_c[k] = window_c[k].max(*c);
        hits[k] += 1;
    }
    if hits.iter().any(|&h| h == 0) {
        return Err(Error::Coverage(format!("plateau window [{}, {}] has sub-windows without frames", window.0, window.1)));
    }
    let hi = window_c.iter().fold(0.0f64, |m, c| m.max(*c));
    let lo = window_c.iter().fold(f64::INFINITY, |m, c| m.min(*c));
    let plateau_ratio = if hi == 0.0 { 1.0 } else if lo == 0.0 { f64::INFINITY } else { hi / lo };
    Ok(DecayCertificate { sigma, c_sup, band_table: bands, frame_t, frame_c, window, window_c, plateau_ratio })
}

/// Sup-norm series `max_r |u(t, r)|` over the stored frames.
pub fn sup_series(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.frames.iter().map(|f| (f.t, f.u.iter().fold(0.0f64, |m, v| m.max(v.abs())))).collect()
}

/// Resolution of the cylinder sampling used by the slice checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceOptions {
    /// Number of target rows.
    pub rows: usize,
    /// Row spacing of each strip.
    pub dt: f64,
    /// Polar spacing upper bound.
    pub dr: f64,
    /// Polar nodes across the narrowest slice.
    pub min_cols: usize,
}

impl Default for SliceOptions {
    fn default() -> Self {
        Self { rows: 120, dt: 1e-3, dr: 1e-3, min_cols: 200 }
    }
}

impl SliceOptions {
    /// Lattice with `before` rows below and `after` rows above `time`,
    /// spanning the slice at `time`.
    fn strip(&self, time: f64, before: usize, after: usize, obs: &ObstacleSpec) -> Result<LatticeSpec> {
        let r0 = boundary_curve(obs, time)?;
        let r1 = PI - time;
        let dr = self.dr.min((r1 - r0) / self.min_cols as f64);
        let mut spec = LatticeSpec::strip(time, 0, self.dt, r0, r1, dr);
        spec.t0 = time - before as f64 * self.dt;
        spec.rows = before + after + 1;
        Ok(spec)
    }
}

/// One covered row of the cylinder energy check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub time: f64,
    /// `||v'(T)||` over the slice.
    pub lhs: f64,
    /// `||v'(0)|| + int_0^T ||F(S)|| dS`.
    pub rhs: f64,
    /// `||F(T)||` with `F = G - v`.
    pub source: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyInequalityReport {
    pub rows: Vec<EnergyRow>,
    /// `max (lhs - rhs)` over rows (negative when the inequality holds strictly).
    pub max_excess: f64,
    /// `max (lhs - rhs) / rhs`, the slack used by the verdict.
    pub relative_excess: f64,
    /// `max lhs / lhs(0)`.
    pub growth_ratio: f64,
}

/// Cylinder energy inequality `||v'(T)|| <= ||v'(0)|| + int_0^T ||F|| dS`
/// for `(box_g) v = F`, i.e. `F = G - v` with `G = Omega^{-3} F_mink`.
///
/// Rows are spread uniformly on `[0, T_cap]`; each row is a three-row strip
/// over the whole slice `Phi(T) < R < pi - T`.
pub fn energy_inequality_check(
    traj: &Trajectory,
    obs: &ObstacleSpec,
    forcing: Option<&dyn Fn(f64, f64) -> f64>,
    opts: &SliceOptions,
) -> Result<EnergyInequalityReport> {
    let cap = time_cap(traj) - 2.0 * opts.dt;
    if cap <= 0.0 || opts.rows < 2 {
        return Err(Error::Coverage("trajectory too short for the energy check".into()));
    }
    let mut rows = Vec::with_capacity(opts.rows);
    for k in 0..opts.rows {
        let time = cap * k as f64 / (opts.rows - 1) as f64;
        // the initial row has no past, so its strip looks forward only
        let (before, after) = if k == 0 { (0, 2) } else { (1, 1) };
        let spec = opts.strip(time, before, after, obs)?;
        let v = transform_to_cylinder(traj, &spec, obs)?;
        let vt = v.derivative(Axis::Time, 1, MaskPolicy::Shrink)?;
        let vr = v.derivative(Axis::Polar, 1, MaskPolicy::Shrink)?;
        let (a, ma) = vt.row(before);
        let (b, mb) = vr.row(before);
        let density: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x * x + y * y).sqrt()).collect();
        let mask: Vec<bool> = ma.iter().zip(mb).map(|(p, q)| *p && *q).collect();
        let lhs = slice_integral(&density, &mask, spec.r0, spec.dr, 2).sqrt();
        let f = match forcing {
            Some(src) => {
                let g = transform_source(src, traj, &spec, obs)?;
                g.zip_with(&v, |_, _, g, v| g - v)?
            }
            None => v.map(|_, _, v| -v),
        };
        let source = slice_l2(&f, before, &|_, _| true);
        rows.push(EnergyRow { time, lhs, rhs: 0.0, source });
    }
    let base = rows[0].lhs;
    let mut integral = 0.0;
    for k in 0..rows.len() {
        if k > 0 {
            integral += 0.5 * (rows[k].time - rows[k - 1].time) * (rows[k].source + rows[k - 1].source);
        }
        rows[k].rhs = base + integral;
    }
    let max_excess = rows.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.lhs - r.rhs));
    let relative_excess = rows
        .iter()
        .fold(f64::NEG_INFINITY, |m, r| m.max(if r.rhs > 0.0 { (r.lhs - r.rhs) / r.rhs } else if r.lhs > 0.0 { f64::INFINITY } else { 0.0 }));
    let peak = rows.iter().fold(0.0f64, |m, r| m.max(r.lhs));
    let growth_ratio = if base > 0.0 { peak / base } else if peak == 0.0 { 1.0 } else { f64::INFINITY };
    Ok(EnergyInequalityReport { rows, max_excess, relative_excess, growth_ratio })
}

/// `m(T)` at one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormRow {
    pub time: f64,
    /// `sum_{|alpha| <= p} (||Z^alpha v'||_2 + ||Z^alpha v||_6)`.
    pub energy_part: f64,
    /// `sum_{|alpha| <= p} ||Z^alpha v||_inf` (before the `(pi - T)^sigma` weight).
    pub sup_part: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNormReport {
    pub order: usize,
    pub sigma: f64,
    pub rows: Vec<WeightedNormRow>,
    /// `max m` over the last third of the rows divided by `max m` before it.
    pub growth_ratio: f64,
    /// `max m / min m` over the last third, reported only.
    pub spread_ratio: f64,
    pub bounded: bool,
}

/// Growth limit for the boundedness verdict.
pub const M_GROWTH_LIMIT: f64 = 4.0;

/// `m(T)` for a field sampled on lattice rows; `rows` lists the lattice rows
/// to evaluate.
pub fn weighted_norm_rows(v: &CylinderField, order: usize, sigma: f64, rows: &[usize]) -> Result<Vec<WeightedNormRow>> {
    let mut out = Vec::with_capacity(rows.len());
    for &row in rows {
        let time = v.spec().time(row);
        let norms = weighted_norms(v, WeightedDerivativeSpec { order }, row, &|_, _| true)?;
        let energy_part: f64 = norms.iter().map(|n| n.l2_prime + n.l6).sum();
        let sup_part: f64 = norms.iter().map(|n| n.sup).sum();
        let m = energy_part + (PI - time).powf(sigma) * sup_part;
        out.push(WeightedNormRow { time, energy_part, sup_part, m });
    }
    Ok(out)
}

/// Growth verdict over a series of rows: the running sup over the last third
/// may exceed the sup over the earlier rows by at most [`M_GROWTH_LIMIT`].
pub fn weighted_norm_verdict(order: usize, sigma: f64, rows: Vec<WeightedNormRow>) -> Result<WeightedNormReport> {
    if rows.len() < 3 {
        return Err(Error::Coverage("need at least three rows".into()));
    }
    let split = rows.len() - rows.len() / 3;
    let early = rows[..split].iter().fold(0.0f64, |m, r| m.max(r.m));
    let late = rows[split..].iter().fold(0.0f64, |m, r| m.max(r.m));
    let late_min = rows[split..].iter().fold(f64::INFINITY, |m, r| m.min(r.m));
    let growth_ratio = if early > 0.0 { late / early } else if late == 0.0 { 1.0 } else { f64::INFINITY };
    let spread_ratio = if late_min > 0.0 { late / late_min } else if late == 0.0 { 1.0 } else { f64::INFINITY };
    let bounded = rows.iter().all(|r| r.m.is_finite()) && growth_ratio <= M_GROWTH_LIMIT;
    Ok(WeightedNormReport { order, sigma, rows, growth_ratio, spread_ratio, bounded })
}

/// `m(T)` on the transformed trajectory for rows spread over
/// `[t_start, t_end]`. Each row gets its own strip with `order + 1`
/// neighbours on each side.
pub fn weighted_norm_report(
    traj: &Trajectory,
    obs: &ObstacleSpec,
    order: usize,
    sigma: f64,
    (t_start, t_end): (f64, f64),
    opts: &SliceOptions,
) -> Result<WeightedNormReport> {
    if order > 3 {
        return Err(Error::Domain(format!("weighted order {order} exceeds 3")));
    }
    if opts.rows < 3 || !(t_end > t_start) {
        return Err(Error::Config("weighted norm rows must span a nonempty range".into()));
    }
    let half = order + 1;
    let mut rows = Vec::with_capacity(opts.rows);
    for k in 0..opts.rows {
        let time = t_start + (t_end - t_start) * k as f64 / (opts.rows - 1) as f64;
        let spec = opts.strip(time, half, half, obs)?;
        let v = transform_to_cylinder(traj, &spec, obs)?;
        rows.extend(weighted_norm_rows(&v, order, sigma, &[half])?);
    }
    weighted_norm_verdict(order, sigma, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Frame;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn series_validation() {
        assert!(Series::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Series::new(vec![1.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(Series::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(Series::new(vec![0.0, f64::NAN], vec![1.0, 1.0]).is_err());
        let s = Series::new(vec![1.0, 4.0, 16.0], vec![1.0; 3]).unwrap();
        assert_eq!(s.default_window(), (4.0, 16.0));
    }

    #[test]
    fn planted_power_laws() {
        let t = grid(10.0, 100.0, 200);
        let f = fit_power(&Series::from_fn(&t, |x| 3.0 / x).unwrap(), Some((10.0, 100.0))).unwrap();
        assert!((f.exponent() + 1.0).abs() < 1e-3);
        assert!(f.r_squared > 0.999_999);
        let f = fit_power(&Series::from_fn(&t, |x| 5.0 / (x * x)).unwrap(), None).unwrap();
        assert!((f.exponent() + 2.0).abs() < 1e-3);
        assert!(f.window.0 > 31.0 && f.window.1 == 100.0);
    }

    #[test]
    fn planted_rates() {
        let t = grid(0.0, 5.0, 100);
        let f = fit_exponential(&Series::from_fn(&t, |x| (-2.0 * x).exp()).unwrap(), Some((0.0, 5.0))).unwrap();
        assert!((f.rate() - 2.0).abs() < 1e-3);
        let f = fit_exponential(&Series::from_fn(&t, |_| 7.0).unwrap(), Some((0.0, 5.0))).unwrap();
        assert!(f.rate().abs() < 1e-3);
        assert!((0.0..=1.0).contains(&f.r_squared));
    }

    #[test]
    fn fits_under_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = grid(10.0, 100.0, 400);
        let noisy = |f: &dyn Fn(f64) -> f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
            t.iter().map(|&x| f(x) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))).collect()
        };
        let y = noisy(&|x| 3.0 * x.powf(-1.3), &mut rng);
        let f = fit_power(&Series::new(t.clone(), y).unwrap(), Some((10.0, 100.0))).unwrap();
        assert!((f.exponent() + 1.3).abs() < 5e-2);
        let y = noisy(&|x| (-0.05 * x).exp(), &mut rng);
        let f = fit_exponential(&Series::new(t.clone(), y).unwrap(), Some((10.0, 100.0))).unwrap();
        assert!((f.rate() - 0.05).abs() < 5e-2 * 0.05);
    }

    #[test]
    fn degenerate_windows() {
        let t = grid(1.0, 2.0, 20);
        let s = Series::from_fn(&t, |x| x).unwrap();
        assert!(matches!(fit_power(&s, Some((1.0, 1.2))), Err(Error::Fit(_))));
        let z = Series::from_fn(&t, |_| 0.0).unwrap();
        assert!(matches!(fit_exponential(&z, Some((1.0, 2.0))), Err(Error::Fit(_))));
    }

    #[test]
    fn vanishing_orders() {
        let d: Vec<f64> = (0..12).map(|k| 0.5f64.powi(k)).collect();
        let sq: Vec<(f64, f64)> = d.iter().map(|&x| (x, x * x)).collect();
        assert!((vanishing_order_fit(&sq).unwrap().slope - 2.0).abs() < 1e-6);
        let lin: Vec<(f64, f64)> = d.iter().map(|&x| (x, -3.0 * x)).collect();
        assert!((vanishing_order_fit(&lin).unwrap().slope - 1.0).abs() < 1e-9);
        let under: Vec<(f64, f64)> = d.iter().map(|&x| (x, 0.0)).collect();
        assert!(matches!(vanishing_order_fit(&under), Err(Error::Fit(_))));
        assert!(vanishing_order_fit(&sq[..5]).is_err());
    }

    fn synthetic(f: impl Fn(f64, f64) -> f64) -> Trajectory {
        let (r0, dr, nodes) = (0.2, 0.05, 1800);
        let frames = (0..=80)
            .map(|k| {
                let t = k as f64;
                let u: Vec<f64> = (0..nodes).map(|i| f(t, r0 + i as f64 * dr)).collect();
                Frame { t, ut: vec![0.0; nodes], u }
            })
            .collect();
        Trajectory::from_frames(r0, dr, nodes, 0.4, frames).unwrap()
    }

    #[test]
    fn certificate_of_the_extremal_profile() {
        let traj = synthetic(|t, r| 1.0 / ((1.0 + t) * (1.0 + (t - r).abs()).powf(0.75)));
        let c = decay_certificate(&traj, 0.25).unwrap();
        assert!((c.c_sup - 1.0).abs() < 1e-12, "{}", c.c_sup);
        assert!(c.band_table.iter().all(|b| b.max <= c.c_sup));
        assert!((c.plateau_ratio - 1.0).abs() < 1e-12);
        let zero = decay_certificate(&synthetic(|_, _| 0.0), 0.25).unwrap();
        assert_eq!(zero.c_sup, 0.0);
        assert!(decay_certificate(&traj, 0.0).is_err());
    }

    #[test]
    fn certificate_is_monotone_in_sigma() {
        let traj = synthetic(|t, r| (-(t - r - 1.0).powi(2)).exp() / (1.0 + t) + 1e-3 * (-(r - 2.0).powi(2)).exp());
        let mut last = 0.0;
        for s in [1.0, 0.75, 0.5, 0.25, 0.1] {
            let c = decay_certificate(&traj, s).unwrap().c_sup;
            assert!(c >= last);
            last = c;
        }
    }

    #[test]
    fn weighted_norms_of_zero_and_synthetic_fields() {
        let spec = LatticeSpec { t0: 2.5, dt: 2e-3, rows: 201, r0: 0.0, dr: 5e-3, cols: 121 };
        let valid = |t: f64, r: f64| t + r < PI;
        let zero = CylinderField::from_fn(spec, |_, _| 0.0, valid);
        let rows: Vec<usize> = (3..198).step_by(13).collect();
        let z = weighted_norm_rows(&zero, 2, 0.25, &rows).unwrap();
        assert!(z.iter().all(|r| r.m == 0.0));
        let v = CylinderField::from_fn(spec, |t, r| (PI - t).powf(-0.125) * r.cos() * r.cos(), valid);
        let report = weighted_norm_verdict(2, 0.25, weighted_norm_rows(&v, 2, 0.25, &rows).unwrap()).unwrap();
        assert!(report.bounded, "{}", report.growth_ratio);
        let weighted: Vec<f64> = report.rows.iter().map(|r| (PI - r.time).powf(0.25) * r.sup_part).collect();
        assert!(weighted.last().unwrap() < weighted.first().unwrap());
    }

    #[test]
    fn growing_norm_is_flagged() {
        let rows: Vec<WeightedNormRow> =
            (0..30).map(|k| WeightedNormRow { time: k as f64, energy_part: 0.0, sup_part: 0.0, m: (k as f64 * 0.2).exp() }).collect();
        let r = weighted_norm_verdict(2, 0.25, rows).unwrap();
        assert!(!r.bounded);
    }
}
