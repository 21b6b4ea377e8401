//! Coordinates on Minkowski space and on the Einstein cylinder `R x S^3`,
//! the conformal factor linking them, stereographic charts, and the image of
//! a spherical obstacle under the compactification.
//!
//! Everything here is radial: an event is described by a time and a radial
//! (or polar) coordinate, with the angular direction carried along unchanged.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::{Error, Result};

const NORTH: [f64; 3] = [0.0, 0.0, 1.0];

/// Event in Minkowski space in polar form `x = r * omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinkowskiEvent {
    pub t: f64,
    pub r: f64,
    pub omega: [f64; 3],
}

impl MinkowskiEvent {
    pub fn new(t: f64, r: f64) -> Result<Self> {
        Self::with_direction(t, r, NORTH)
    }

    pub fn with_direction(t: f64, r: f64, omega: [f64; 3]) -> Result<Self> {
        if !(t.is_finite() && r.is_finite()) || r < 0.0 {
            return Err(Error::Domain(format!("invalid Minkowski event t = {t}, r = {r}")));
        }
        let norm = norm3(&omega);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("direction has norm {norm}, expected 1")));
        }
        Ok(Self { t, r, omega })
    }
}

/// Event on the Einstein cylinder: cylinder time `T` and the distance `R` from
/// the north pole of `S^3`, plus the angular direction on the 2-sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EinsteinEvent {
    pub time: f64,
    pub polar: f64,
    pub omega: [f64; 3],
}

impl EinsteinEvent {
    pub fn new(time: f64, polar: f64) -> Result<Self> {
        if !(time.is_finite() && polar.is_finite()) || !(0.0..=PI).contains(&polar) {
            return Err(Error::Domain(format!("invalid cylinder event T = {time}, R = {polar}")));
        }
        Ok(Self { time, polar, omega: NORTH })
    }

    /// Whether the event lies in the open diamond `|T| + R < pi`, i.e. is the
    /// image of a finite Minkowski event.
    pub fn in_diamond(&self) -> bool {
        self.time.abs() + self.polar < PI
    }
}

/// Output of [`to_einstein`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformResult {
    pub einstein: EinsteinEvent,
    /// Conformal factor `cos T + cos R`.
    pub omega_factor: f64,
}

/// `cos T + cos R`.
pub fn conformal_factor(time: f64, polar: f64) -> f64 {
    time.cos() + polar.cos()
}

/// The conformal factor written in Minkowski coordinates,
/// `2 / (sqrt(1 + (t+r)^2) sqrt(1 + (t-r)^2))`.
pub fn conformal_factor_minkowski(t: f64, r: f64) -> f64 {
    2.0 / ((1.0 + (t + r) * (t + r)).sqrt() * (1.0 + (t - r) * (t - r)).sqrt())
}

/// Penrose map `(t, r) -> (T, R)`.
pub fn to_einstein(ev: &MinkowskiEvent) -> TransformResult {
    let a = (ev.t + ev.r).atan();
    let b = (ev.t - ev.r).atan();
    TransformResult {
        einstein: EinsteinEvent { time: a + b, polar: a - b, omega: ev.omega },
        omega_factor: conformal_factor_minkowski(ev.t, ev.r),
    }
}

/// Inverse Penrose map via `t +- r = tan((T +- R) / 2)`.
pub fn to_minkowski(ev: &EinsteinEvent) -> Result<MinkowskiEvent> {
    if !ev.in_diamond() {
        return Err(Error::Domain(format!(
            "T = {}, R = {} is not inside the diamond (|T| + R >= pi)",
            ev.time, ev.polar
        )));
    }
    let plus = (0.5 * (ev.time + ev.polar)).tan();
    let minus = (0.5 * (ev.time - ev.polar)).tan();
    Ok(MinkowskiEvent { t: 0.5 * (plus + minus), r: (0.5 * (plus - minus)).max(0.0), omega: ev.omega })
}

/// Minkowski radius of a cylinder event, `sin R / (cos T + cos R)`.
pub fn radius_of(ev: &EinsteinEvent) -> Result<f64> {
    let denom = conformal_factor(ev.time, ev.polar);
    // values at rounding level mean the event sits on null infinity
    if denom <= 1e-14 {
        return Err(Error::Domain(format!(
            "cos T + cos R = {denom} <= 0 at T = {}, R = {}",
            ev.time, ev.polar
        )));
    }
    Ok(ev.polar.sin() / denom)
}

/// Membership in the image of the solid cylinder `{t >= 0, |x| < radius}`.
pub fn in_region_b(ev: &EinsteinEvent, radius: f64) -> bool {
    if !(0.0..PI).contains(&ev.time) {
        return false;
    }
    matches!(radius_of(ev), Ok(r) if r < radius)
}

/// Stereographic chart of `S^3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// Projection from the south pole; the chart in which `T = 0` is Minkowski space.
    South,
    North,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoPoint {
    pub coords: [f64; 3],
    pub chart: Chart,
}

impl StereoPoint {
    pub fn norm(&self) -> f64 {
        norm3(&self.coords)
    }
}

/// South-pole stereographic coordinates `tan(R/2) * omega`.
pub fn stereo_south(ev: &EinsteinEvent) -> Result<StereoPoint> {
    if ev.polar >= PI {
        return Err(Error::Domain("the south pole is not covered by the south chart".into()));
    }
    let s = (0.5 * ev.polar).tan();
    Ok(StereoPoint { coords: ev.omega.map(|w| s * w), chart: Chart::South })
}

/// Kelvin transform `u -> u / |u|^2`, switching between the two charts.
pub fn kelvin(p: &StereoPoint) -> Result<StereoPoint> {
    let n2: f64 = p.coords.iter().map(|x| x * x).sum();
    if n2 == 0.0 {
        return Err(Error::Domain("Kelvin transform is undefined at the origin".into()));
    }
    let chart = match p.chart {
        Chart::South => Chart::North,
        Chart::North => Chart::South,
    };
    Ok(StereoPoint { coords: p.coords.map(|x| x / n2), chart })
}

/// Radial pushforward data at a Minkowski event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameCoefficients {
    /// Row 0 expresses `d/dt`, row 1 expresses `d/dr`, each in the basis
    /// `(d/dT, d/dR)`.
    pub jac: [[f64; 2]; 2],
    /// `(dOmega/dt, dOmega/dr)`.
    pub omega_grad: [f64; 2],
}

impl FrameCoefficients {
    pub fn determinant(&self) -> f64 {
        self.jac[0][0] * self.jac[1][1] - self.jac[0][1] * self.jac[1][0]
    }
}

/// Jacobian of `(t, r) -> (T, R)` and the Minkowski gradient of the conformal
/// factor at `ev`.
pub fn frame_at(ev: &MinkowskiEvent) -> FrameCoefficients {
    let p = 1.0 / (1.0 + (ev.t + ev.r) * (ev.t + ev.r));
    let m = 1.0 / (1.0 + (ev.t - ev.r) * (ev.t - ev.r));
    let image = to_einstein(ev);
    let (big_t, big_r) = (image.einstein.time, image.einstein.polar);
    let omega = image.omega_factor;
    FrameCoefficients {
        jac: [[p + m, p - m], [p - m, p + m]],
        omega_grad: [-omega * big_t.sin() * big_r.cos(), -omega * big_t.cos() * big_r.sin()],
    }
}

/// [`frame_at`] evaluated from cylinder coordinates with trigonometric forms
/// that stay accurate near the tip `T = pi`, `R = 0`.
pub fn frame_at_einstein(ev: &EinsteinEvent) -> Result<FrameCoefficients> {
    let omega = conformal_factor_stable(ev.time, ev.polar);
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "cos T + cos R = {omega} <= 0 at T = {}, R = {}",
            ev.time, ev.polar
        )));
    }
    let (st, ct) = ev.time.sin_cos();
    let (sr, cr) = ev.polar.sin_cos();
    let diag = one_plus_cos_product(ev.time, ev.polar);
    let off = -st * sr;
    Ok(FrameCoefficients {
        jac: [[diag, off], [off, diag]],
        omega_grad: [-omega * st * cr, -omega * ct * sr],
    })
}

/// `cos T + cos R` as `2 cos((T+R)/2) cos((T-R)/2)`.
pub fn conformal_factor_stable(time: f64, polar: f64) -> f64 {
    2.0 * (0.5 * (time + polar)).cos() * (0.5 * (time - polar)).cos()
}

/// `1 + cos T cos R` as `cos^2((T-R)/2) + cos^2((T+R)/2)`, free of cancellation.
pub fn one_plus_cos_product(time: f64, polar: f64) -> f64 {
    let a = (0.5 * (time - polar)).cos();
    let b = (0.5 * (time + polar)).cos();
    a * a + b * b
}

/// Obstacle `{ r <= phi(omega) }`. The solver only uses the spherical case.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSpec {
    radius: f64,
    /// Optional samples of `phi` on `S^2`; recorded for completeness only.
    profile: Option<Vec<f64>>,
}

impl ObstacleSpec {
    pub fn sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 0.25) {
            return Err(Error::Domain(format!("obstacle radius {radius} must lie in (0, 1/4)")));
        }
        Ok(Self { radius, profile: None })
    }

    pub fn with_profile(radius: f64, profile: Vec<f64>) -> Result<Self> {
        let mut obs = Self::sphere(radius)?;
        if profile.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::Domain("obstacle profile must be strictly positive".into()));
        }
        obs.profile = Some(profile);
        Ok(obs)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn profile(&self) -> Option<&[f64]> {
        self.profile.as_deref()
    }
}

/// Default relative tolerance of the boundary root finder.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// `Phi(T)`: the polar radius of the obstacle boundary on the slice `T`.
pub fn boundary_curve(obs: &ObstacleSpec, time: f64) -> Result<f64> {
    boundary_curve_tol(obs, time, BOUNDARY_TOL)
}

/// [`boundary_curve`] with an explicit relative tolerance.
///
/// Solves `sin R - r_b (cos T + cos R) = 0` on `(0, pi - T)` by bisection
/// with safeguarded Newton steps.
pub fn boundary_curve_tol(obs: &ObstacleSpec, time: f64, tol: f64) -> Result<f64> {
    if !(0.0..PI).contains(&time) {
        return Err(Error::Domain(format!("boundary curve requires 0 <= T < pi, got {time}")));
    }
    let rb = obs.radius;
    let (ct, st) = (time.cos(), time.sin());
    let h = |x: f64| x.sin() - rb * (ct + x.cos());
    let dh = |x: f64| x.cos() + rb * x.sin();

    let mut lo = 0.0;
    let mut hi = (PI - time - 1e-14).max(0.0);
    if !(h(lo) < 0.0 && h(hi) > 0.0) {
        // near T = pi the bracket end is better expressed through sin T
        if !(h(lo) < 0.0 && st > 0.0) {
            return Err(Error::Convergence(format!("no sign change for T = {time}")));
        }
        hi = PI - time;
    }
    // start from the small-angle asymptote, clipped into the bracket
    let mut x = (2.0 * rb.atan()).min(0.5 * (lo + hi));
    for _ in 0..200 {
        let fx = h(x);
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = dh(x);
        let mut next = if d > 0.0 { x - fx / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= tol * x.abs() || hi - lo <= f64::MIN_POSITIVE {
            return Ok(x);
        }
    }
    Err(Error::Convergence(format!("boundary root did not converge at T = {time}")))
}

/// `dPhi/dT` in closed form. With `t` the Minkowski time of the boundary
/// event and `phi = r_b`, the slope is `-4 t phi / (2 + (t+phi)^2 + (t-phi)^2)`.
pub fn boundary_curve_slope(obs: &ObstacleSpec, time: f64) -> Result<f64> {
    let rb = obs.radius;
    let polar = boundary_curve(obs, time)?;
    let t = boundary_time(time, polar);
    Ok(-4.0 * t * rb / (2.0 + (t + rb) * (t + rb) + (t - rb) * (t - rb)))
}

fn boundary_time(time: f64, polar: f64) -> f64 {
    0.5 * ((0.5 * (time + polar)).tan() + (0.5 * (time - polar)).tan())
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}
