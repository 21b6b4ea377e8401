//! Radially symmetric exterior Dirichlet problem
//! `u_tt = u_rr + (2/r) u_r + N(u, u_t, u_r) + F(t, r)` on `r_b <= r <= r_max`,
//! integrated by leapfrog on `w = r u`, and the pushforward of the result to
//! the Einstein cylinder.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::compat::{compute_jet, GaussianBump, NonlinearitySpec, RadialProfile};
use crate::cylinder::{CylinderField, LatticeSpec};
use crate::fd::{fornberg_weights, trapezoid};
use crate::geometry::{boundary_curve, conformal_factor_minkowski, to_minkowski, EinsteinEvent, ObstacleSpec};
use crate::{Error, Result};

/// Largest admissible Courant ratio.
pub const MAX_CFL: f64 = 0.9;

/// Distances `|t - r|` of the light-cone bands sampled by the monitors.
pub const CONE_BANDS: [f64; 6] = [0.0, 1.0, 2.0, 4.0, 8.0, 16.0];

/// Margin in `t` between the last frame and the latest transformable row.
pub const COVERAGE_MARGIN: f64 = 2.0;

/// Shape of one Cauchy datum before scaling by the amplitude.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Zero,
    Gaussian(GaussianBump),
    /// Samples interpolated onto the solver grid; zero beyond the last sample.
    Sampled(RadialProfile),
}

impl Shape {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Shape::Zero => 0.0,
            Shape::Gaussian(b) => b.eval(r),
            Shape::Sampled(p) => {
                if r < p.r0() || r > p.r_max() {
                    0.0
                } else {
                    p.value_at(r)
                }
            }
        }
    }

    /// Radius beyond which the datum is treated as zero.
    pub fn support_outer(&self) -> f64 {
        match self {
            Shape::Zero => 0.0,
            Shape::Gaussian(b) => b.support_outer(),
            Shape::Sampled(p) => {
                let last = p.values().iter().rposition(|v| *v != 0.0).unwrap_or(0);
                p.r(last)
            }
        }
    }
}

/// Cauchy data `u(0) = eps f`, `u_t(0) = eps g`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub f: Shape,
    pub g: Shape,
}

impl Default for InitialData {
    /// A velocity bump centred at `r = 1.5` of width `0.25`.
    fn default() -> Self {
        Self { f: Shape::Zero, g: Shape::Gaussian(GaussianBump { center: 1.5, width: 0.25, amplitude: 1.0 }) }
    }
}

impl InitialData {
    pub fn support_outer(&self) -> f64 {
        self.f.support_outer().max(self.g.support_outer())
    }
}

/// Source `A exp(-((t - t_c)/t_w)^2) exp(-((r - r_c)/r_w)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forcing {
    pub amplitude: f64,
    pub t_center: f64,
    pub t_width: f64,
    pub r_center: f64,
    pub r_width: f64,
}

impl Forcing {
    pub fn eval(&self, t: f64, r: f64) -> f64 {
        let a = (t - self.t_center) / self.t_width;
        let b = (r - self.r_center) / self.r_width;
        self.amplitude * (-a * a - b * b).exp()
    }

    pub fn support_outer(&self) -> f64 {
        self.r_center + 6.0 * self.r_width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub obstacle: ObstacleSpec,
    pub nonlinearity: NonlinearitySpec,
    pub data: InitialData,
    pub epsilon: f64,
    pub forcing: Option<Forcing>,
    pub dr: f64,
    pub cfl: f64,
    pub t_max: f64,
    pub r_max: f64,
    /// Steps between stored frames.
    pub snapshot_stride: usize,
    /// Radius `rho` of the local energy `E_local`; defaults to `2 r_b`.
    pub local_radius: Option<f64>,
    /// Fixed-point sweeps resolving the implicit `u_t` in `N`.
    pub sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            obstacle: ObstacleSpec::sphere(0.2).expect("valid radius"),
            nonlinearity: NonlinearitySpec::q0_radial(),
            data: InitialData::default(),
            epsilon: 0.01,
            forcing: None,
            dr: 5e-3,
            cfl: 0.45,
            t_max: 80.0,
            r_max: 90.0,
            snapshot_stride: 40,
            local_radius: None,
            sweeps: 2,
        }
    }
}

impl SolverConfig {
    pub fn dt(&self) -> f64 {
        self.cfl * self.dr
    }

    pub fn local_radius(&self) -> f64 {
        self.local_radius.unwrap_or(2.0 * self.obstacle.radius())
    }

    /// Outer radius of the data and forcing supports.
    pub fn support_outer(&self) -> f64 {
        let f = self.forcing.map_or(0.0, |f| f.support_outer());
        self.data.support_outer().max(f).max(self.obstacle.radius())
    }

    /// Smallest `r_max` for which nothing reaches the outer wall by `t_max`.
    pub fn min_r_max(&self) -> f64 {
        self.obstacle.radius() + self.t_max + self.support_outer() + 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0) || self.cfl > MAX_CFL {
            return Err(Error::Stability(format!("cfl = {} outside (0, {MAX_CFL}]", self.cfl)));
        }
        if !(self.dr > 0.0 && self.t_max > 0.0 && self.epsilon > 0.0) {
            return Err(Error::Config("dr, t_max and epsilon must be positive".into()));
        }
        if self.snapshot_stride == 0 || self.sweeps == 0 {
            return Err(Error::Config("snapshot_stride and sweeps must be at least 1".into()));
        }
        if self.r_max < self.min_r_max() {
            return Err(Error::Config(format!(
                "r_max = {} violates the no-reflection bound r_max >= {}",
                self.r_max,
                self.min_r_max()
            )));
        }
        if self.local_radius() <= self.obstacle.radius() {
            return Err(Error::Config("local energy radius must exceed r_b".into()));
        }
        Ok(())
    }
}

/// Stored snapshot; `u` and `u_t` cover the first `u.len()` grid nodes and
/// vanish beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Monitors {
    pub t: Vec<f64>,
    /// `4 pi int (u_t^2 + u_r^2) r^2 dr` over the whole grid.
    pub e_total: Vec<f64>,
    /// Same integrand over `[r_b, rho]`.
    pub e_local: Vec<f64>,
    pub sup_u: Vec<f64>,
    /// Energy in `r > r_max - 1`.
    pub e_outer: Vec<f64>,
    /// `-4 pi r^2 u_t u_r` at `r = r_max - 1`.
    pub outer_flux: Vec<f64>,
    /// `u(t, t - b)` for `b` in [`CONE_BANDS`] (zero while `t - b < r_b`).
    pub lightcone: Vec<[f64; 6]>,
}

/// Energies of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub t: Vec<f64>,
    pub e_total: Vec<f64>,
    pub e_local: Vec<f64>,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub r0: f64,
    pub dr: f64,
    pub dt: f64,
    /// Number of grid nodes (the last one sits at `r_max`).
    pub nodes: usize,
    pub rho: f64,
    pub frames: Vec<Frame>,
    pub monitors: Monitors,
}

impl Trajectory {
    /// Build a trajectory from externally produced frames; monitors are
    /// computed from the frames.
    pub fn from_frames(r0: f64, dr: f64, nodes: usize, rho: f64, frames: Vec<Frame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Config("no frames".into()));
        }
        if frames.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::Config("frame times must increase strictly".into()));
        }
        if frames.iter().any(|f| f.u.len() > nodes || f.u.len() != f.ut.len()) {
            return Err(Error::Config("frame length does not match the grid".into()));
        }
        let mut traj = Self { r0, dr, dt: 0.0, nodes, rho, frames: Vec::new(), monitors: Monitors::default() };
        for fr in &frames {
            traj.record_monitors(fr.t, &fr.u, &fr.ut);
        }
        traj.frames = frames;
        Ok(traj)
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r0 + i as f64 * self.dr
    }

    pub fn r_max(&self) -> f64 {
        self.r(self.nodes - 1)
    }

    pub fn t_last(&self) -> f64 {
        self.frames.last().map_or(0.0, |f| f.t)
    }

    pub fn energy(&self) -> EnergyReport {
        EnergyReport {
            t: self.monitors.t.clone(),
            e_total: self.monitors.e_total.clone(),
            e_local: self.monitors.e_local.clone(),
            rho: self.rho,
        }
    }

    fn record_monitors(&mut self, t: f64, u: &[f64], ut: &[f64]) {
        let n = u.len();
        let r = |i: usize| self.r0 + i as f64 * self.dr;
        let ur = radial_derivative(u, self.dr);
        let density: Vec<f64> = (0..n).map(|i| 4.0 * PI * (ut[i] * ut[i] + ur[i] * ur[i]) * r(i) * r(i)).collect();
        let e_total = trapezoid(&density, self.dr);
        let local_end = (((self.rho - self.r0) / self.dr).round() as usize + 1).min(n);
        let e_local = trapezoid(&density[..local_end], self.dr);
        let outer_start = ((self.r_max() - 1.0 - self.r0) / self.dr).round().max(0.0) as usize;
        let (e_outer, outer_flux) = if outer_start < n {
            let i = outer_start;
            (trapezoid(&density[outer_start..], self.dr), -4.0 * PI * r(i) * r(i) * ut[i] * ur[i])
        } else {
            (0.0, 0.0)
        };
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut cone = [0.0; 6];
        for (k, b) in CONE_BANDS.iter().enumerate() {
            let x = (t - b - self.r0) / self.dr;
            if x >= 0.0 {
                let i = x.floor() as usize;
                if i + 1 < n {
                    let w = x - i as f64;
                    cone[k] = (1.0 - w) * u[i] + w * u[i + 1];
                }
            }
        }
        let m = &mut self.monitors;
        m.t.push(t);
        m.e_total.push(e_total);
        m.e_local.push(e_local);
        m.sup_u.push(sup);
        m.e_outer.push(e_outer);
        m.outer_flux.push(outer_flux);
        m.lightcone.push(cone);
    }

    /// Frame index `k` with `frames[k].t <= t <= frames[k + 1].t`.
    fn bracket(&self, t: f64) -> Option<usize> {
        let f = &self.frames;
        if t < f[0].t || t > f[f.len() - 1].t {
            return None;
        }
        if f.len() == 1 {
            return Some(0);
        }
        let k = f.partition_point(|fr| fr.t <= t);
        Some(k.saturating_sub(1).min(f.len() - 2))
    }

    /// Cubic Lagrange interpolation in `r` of frame `k` (`which` selects
    /// `u` or `u_t`), with its `r` derivative.
    fn sample_frame(&self, k: usize, r: f64, which: usize) -> (f64, f64) {
        let fr = &self.frames[k];
        let data = if which == 0 { &fr.u } else { &fr.ut };
        let n = data.len();
        let x = (r - self.r0) / self.dr;
        let get = |i: isize| if i >= 0 && (i as usize) < n { data[i as usize] } else { 0.0 };
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            let i = nearest as isize;
            let d = if i == 0 {
                (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * self.dr)
            } else {
                (get(i + 1) - get(i - 1)) / (2.0 * self.dr)
            };
            return (get(i), d);
        }
        let last = self.nodes as isize - 4;
        let start = (x.floor() as isize - 1).clamp(0, last.max(0));
        let nodes: Vec<f64> = (0..4).map(|j| (start + j) as f64).collect();
        let w = fornberg_weights(x, &nodes, 1);
        let mut v = 0.0;
        let mut d = 0.0;
        let w0 = fornberg_weights(x, &nodes, 0);
        for j in 0..4 {
            let y = get(start + j as isize);
            v += w0[j] * y;
            d += w[j] * y;
        }
        (v, d / self.dr)
    }

    /// `(u, u_t, u_r)` at `(t, r)`: cubic Hermite in `t` between frames
    /// (using the stored `u_t`), cubic Lagrange in `r`.
    pub fn evaluate(&self, t: f64, r: f64) -> Result<(f64, f64, f64)> {
        let eps = 1e-12 * (1.0 + self.r_max());
        if !(r >= self.r0 - eps && r <= self.r_max() + eps) {
            return Err(Error::Range { t, r });
        }
        let k = self.bracket(t).ok_or(Error::Range { t, r })?;
        let (u0, ur0) = self.sample_frame(k, r, 0);
        let (v0, _) = self.sample_frame(k, r, 1);
        if self.frames.len() == 1 || t == self.frames[k].t {
            return Ok((u0, v0, ur0));
        }
        let (u1, ur1) = self.sample_frame(k + 1, r, 0);
        let (v1, _) = self.sample_frame(k + 1, r, 1);
        let (ta, tb) = (self.frames[k].t, self.frames[k + 1].t);
        if t == tb {
            return Ok((u1, v1, ur1));
        }
        let h = tb - ta;
        let s = (t - ta) / h;
        let (s2, s3) = (s * s, s * s * s);
        let u = (2.0 * s3 - 3.0 * s2 + 1.0) * u0 + (s3 - 2.0 * s2 + s) * h * v0 + (-2.0 * s3 + 3.0 * s2) * u1 + (s3 - s2) * h * v1;
        let ut = (1.0 - s) * v0 + s * v1;
        let ur = (1.0 - s) * ur0 + s * ur1;
        Ok((u, ut, ur))
    }
}

/// Second-order first derivative with one-sided ends.
fn radial_derivative(u: &[f64], dr: f64) -> Vec<f64> {
    let n = u.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dr);
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dr);
    for i in 1..n - 1 {
        d[i] = (u[i + 1] - u[i - 1]) / (2.0 * dr);
    }
    d
}

struct Stepper<'a> {
    cfg: &'a SolverConfig,
    r: Vec<f64>,
    dr: f64,
    dt: f64,
    nodes: usize,
    support: f64,
}

impl Stepper<'_> {
    /// Last interior node that can carry signal at time `t` (plus a margin).
    fn active_end(&self, t: f64) -> usize {
        let reach = self.support + t + 1.0 - self.cfg.obstacle.radius();
        (((reach / self.dr).ceil() as usize) + 2).min(self.nodes - 2)
    }

    /// Source term `r (N + F)` at node `i` from `w` values and a guess for `u_t`.
    fn source(&self, i: usize, t: f64, w: &[f64], ut: f64) -> f64 {
        let r = self.r[i];
        let u = w[i] / r;
        let wr = (w[i + 1] - w[i - 1]) / (2.0 * self.dr);
        let ur = (wr - u) / r;
        let mut s = self.cfg.nonlinearity.eval(r, u, ut, ur);
        if let Some(f) = &self.cfg.forcing {
            s += f.eval(t, r);
        }
        r * s
    }

    /// One leapfrog step producing `w^{n+1}`.
    fn step(&self, t: f64, prev: &[f64], cur: &[f64], next: &mut [f64]) -> Result<()> {
        let end = self.active_end(t + self.dt);
        let lam2 = (self.dt / self.dr) * (self.dt / self.dr);
        let dt2 = self.dt * self.dt;
        let linear = self.cfg.nonlinearity.is_zero();
        for i in 1..=end {
            let lap = lam2 * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]);
            next[i] = 2.0 * cur[i] - prev[i] + lap;
        }
        if linear && self.cfg.forcing.is_none() {
            return Ok(());
        }
        let base: Vec<f64> = next[..=end].to_vec();
        // sweep 0 uses the lagged velocity, later sweeps the centred one
        let mut guess: Vec<f64> = (0..=end).map(|i| if i == 0 { 0.0 } else { (cur[i] - prev[i]) / (self.dt * self.r[i]) }).collect();
        let mut last_change = f64::INFINITY;
        let mut iterate = vec![0.0; end + 1];
        for sweep in 0..self.cfg.sweeps {
            for i in 1..=end {
                iterate[i] = base[i] + dt2 * self.source(i, t, cur, guess[i]);
            }
            let mut change: f64 = 0.0;
            let mut size: f64 = 0.0;
            for i in 1..=end {
                change = change.max((iterate[i] - next[i]).abs());
                size = size.max((iterate[i] - cur[i]).abs());
                next[i] = iterate[i];
                guess[i] = (next[i] - prev[i]) / (2.0 * self.dt * self.r[i]);
            }
            if sweep >= 1 && change > 0.5 * size.max(last_change) && change > 1e-300 {
                return Err(Error::Stability(format!("implicit velocity iteration diverged at t = {t}")));
            }
            if sweep >= 1 {
                last_change = change;
            }
        }
        Ok(())
    }
}

/// Integrate the configured problem and record frames and monitors.
pub fn run(cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let rb = cfg.obstacle.radius();
    let nodes = ((cfg.r_max - rb) / cfg.dr).round() as usize + 1;
    let dt = cfg.dt();
    let r: Vec<f64> = (0..nodes).map(|i| rb + i as f64 * cfg.dr).collect();
    let support = cfg.support_outer();
    let stepper = Stepper { cfg, r: r.clone(), dr: cfg.dr, dt, nodes, support };

    // data, zeroed beyond its support so that finite speed holds exactly
    let cut = |shape: &Shape, x: f64| if x <= shape.support_outer() { cfg.epsilon * shape.eval(x) } else { 0.0 };
    let mut f: Vec<f64> = r.iter().map(|&x| cut(&cfg.data.f, x)).collect();
    let mut g: Vec<f64> = r.iter().map(|&x| cut(&cfg.data.g, x)).collect();
    f[0] = 0.0;
    g[0] = 0.0;
    f[nodes - 1] = 0.0;
    g[nodes - 1] = 0.0;

    // Taylor seed u^1 = psi_0 + dt psi_1 + dt^2 / 2 psi_2
    let seed_end = (stepper.active_end(0.0) + 8).min(nodes);
    let fp = RadialProfile::new(rb, cfg.dr, f[..seed_end].to_vec())?;
    let gp = RadialProfile::new(rb, cfg.dr, g[..seed_end].to_vec())?;
    let jet = compute_jet(&fp, &gp, &cfg.nonlinearity, 2)?;
    let psi2 = jet.psi[2].values();
    let mut w_prev: Vec<f64> = (0..nodes).map(|i| r[i] * f[i]).collect();
    let mut w_cur = vec![0.0; nodes];
    for i in 1..seed_end.min(nodes - 1) {
        let forcing = cfg.forcing.map_or(0.0, |fo| fo.eval(0.0, r[i]));
        let u1 = f[i] + dt * g[i] + 0.5 * dt * dt * (psi2[i] + forcing);
        w_cur[i] = r[i] * u1;
    }
    let mut w_next = vec![0.0; nodes];

    let mut traj = Trajectory { r0: rb, dr: cfg.dr, dt, nodes, rho: cfg.local_radius(), frames: Vec::new(), monitors: Monitors::default() };
    let store0 = (stepper.active_end(0.0) + 2).min(nodes);
    traj.record_monitors(0.0, &f[..store0], &g[..store0]);
    traj.frames.push(Frame { t: 0.0, u: f[..store0].to_vec(), ut: g[..store0].to_vec() });

    let steps = (cfg.t_max / dt).ceil() as usize;
    let mut u = vec![0.0; nodes];
    let mut ut = vec![0.0; nodes];
    for n in 1..=steps {
        let t = n as f64 * dt;
        if let Err(e) = stepper.step(t, &w_prev, &w_cur, &mut w_next) {
            return Err(e);
        }
        let end = (stepper.active_end(t + dt) + 2).min(nodes);
        let mut finite = true;
        for i in 0..end {
            u[i] = w_cur[i] / r[i];
            ut[i] = (w_next[i] - w_prev[i]) / (2.0 * dt * r[i]);
            finite &= u[i].is_finite() && ut[i].is_finite();
        }
        if !finite {
            return Err(Error::NonFinite { time: t, partial: Box::new(traj) });
        }
        traj.record_monitors(t, &u[..end], &ut[..end]);
        if n % cfg.snapshot_stride == 0 || n == steps {
            traj.frames.push(Frame { t, u: u[..end].to_vec(), ut: ut[..end].to_vec() });
        }
        core::mem::swap(&mut w_prev, &mut w_cur);
        core::mem::swap(&mut w_cur, &mut w_next);
    }
    Ok(traj)
}

/// Latest cylinder time whose rows the trajectory covers.
pub fn time_cap(traj: &Trajectory) -> f64 {
    2.0 * (traj.t_last() - COVERAGE_MARGIN).max(0.0).atan()
}

/// Sample `v = u / Omega` on a cylinder lattice. Nodes inside the obstacle
/// image (`R <= Phi(T)`), outside the diamond, or with a Minkowski preimage
/// outside the stored trajectory are masked.
pub fn transform_to_cylinder(traj: &Trajectory, spec: &LatticeSpec, obs: &ObstacleSpec) -> Result<CylinderField> {
    transform_with(traj, spec, obs, |t, r, traj| Ok(traj.evaluate(t, r)?.0))
}

/// Pull a Minkowski source `F(t, r)` to the cylinder as `G = Omega^{-3} F`.
pub fn transform_source(f: &dyn Fn(f64, f64) -> f64, traj: &Trajectory, spec: &LatticeSpec, obs: &ObstacleSpec) -> Result<CylinderField> {
    let field = transform_with(traj, spec, obs, |t, r, _| Ok(f(t, r)))?;
    // transform_with divided by Omega once; two more factors remain
    let mut values = field.values().to_vec();
    for i in 0..spec.rows {
        for j in 0..spec.cols {
            let k = i * spec.cols + j;
            if field.mask()[k] {
                let ev = EinsteinEvent { time: spec.time(i), polar: spec.polar(j), omega: [0.0, 0.0, 1.0] };
                let m = to_minkowski(&ev)?;
                let omega = conformal_factor_minkowski(m.t, m.r);
                values[k] /= omega * omega;
            }
        }
    }
    CylinderField::new(*spec, values, field.mask().to_vec())
}

fn transform_with(
    traj: &Trajectory,
    spec: &LatticeSpec,
    obs: &ObstacleSpec,
    sample: impl Fn(f64, f64, &Trajectory) -> Result<f64>,
) -> Result<CylinderField> {
    let cap = time_cap(traj);
    let last_row = spec.time(spec.rows - 1);
    if last_row > cap + 1e-12 {
        return Err(Error::Coverage(format!(
            "row T = {last_row} exceeds the covered range T <= {cap} (t_max = {})",
            traj.t_last()
        )));
    }
    let n = spec.rows * spec.cols;
    let mut values = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..spec.rows {
        let time = spec.time(i);
        if !(0.0..PI).contains(&time) {
            continue;
        }
        let phi = boundary_curve(obs, time)?;
        for j in 0..spec.cols {
            let polar = spec.polar(j);
            if polar <= phi || polar > PI || time + polar >= PI {
                continue;
            }
            let ev = EinsteinEvent { time, polar, omega: [0.0, 0.0, 1.0] };
            let m = to_minkowski(&ev)?;
            if m.t > traj.t_last() || m.r < traj.r0 || m.r > traj.r_max() {
                continue;
            }
            let k = i * spec.cols + j;
            values[k] = sample(m.t, m.r, traj)? / conformal_factor_minkowski(m.t, m.r);
            mask[k] = true;
        }
    }
    CylinderField::new(*spec, values, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_config(t_max: f64, dr: f64) -> SolverConfig {
        let mut cfg = SolverConfig {
            nonlinearity: NonlinearitySpec::zero(),
            t_max,
            dr,
            epsilon: 1.0,
            ..SolverConfig::default()
        };
        cfg.r_max = cfg.min_r_max();
        cfg
    }

    #[test]
    fn validation_errors() {
        let mut cfg = linear_config(5.0, 1e-2);
        cfg.cfl = 1.2;
        assert!(matches!(run(&cfg), Err(Error::Stability(_))));
        let mut cfg = linear_config(5.0, 1e-2);
        cfg.r_max = 5.0;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        let mut cfg = linear_config(5.0, 1e-2);
        cfg.epsilon = 0.0;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn finite_speed_and_dirichlet() {
        let traj = run(&linear_config(3.5, 1e-2)).unwrap();
        // the bump sits in [1, 2] up to exp(-16)
        let (u, _, _) = traj.evaluate(3.0, 6.0).unwrap();
        assert!(u.abs() < 1e-12, "{u}");
        assert!(traj.frames.iter().all(|f| f.u[0] == 0.0));
        let times: Vec<f64> = traj.frames.iter().map(|f| f.t).collect();
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn evaluate_at_nodes_and_range() {
        let traj = run(&linear_config(2.0, 1e-2)).unwrap();
        let fr = &traj.frames[3];
        let (u, ut, _) = traj.evaluate(fr.t, traj.r(57)).unwrap();
        assert_eq!(u, fr.u[57]);
        assert_eq!(ut, fr.ut[57]);
        let (u, _, _) = traj.evaluate(1.234, traj.r0).unwrap();
        assert!(u.abs() < 1e-12);
        assert!(matches!(traj.evaluate(-0.1, 1.0), Err(Error::Range { .. })));
        assert!(matches!(traj.evaluate(1.0, traj.r_max() + 1.0), Err(Error::Range { .. })));
        assert!(matches!(traj.evaluate(traj.t_last() + 0.5, 1.0), Err(Error::Range { .. })));
    }

    #[test]
    fn linear_scaling_is_exact_up_to_roundoff() {
        let a = run(&linear_config(2.0, 1e-2)).unwrap();
        let mut cfg = linear_config(2.0, 1e-2);
        cfg.epsilon = 3.0;
        let b = run(&cfg).unwrap();
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for (x, y) in fa.u.iter().zip(&fb.u) {
                assert!((3.0 * x - y).abs() <= 1e-13 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn free_space_formula_outside_the_obstacle_cone() {
        // g-only data: u(t, r) = (1 / 2r) int_{r-t}^{r+t} s g(s) ds for r > r_b + t
        let cfg = linear_config(1.0, 5e-3);
        let traj = run(&cfg).unwrap();
        let b = GaussianBump { center: 1.5, width: 0.25, amplitude: 1.0 };
        let exact = |t: f64, r: f64| {
            let n = 4000;
            let h = 2.0 * t / n as f64;
            let mut acc = 0.0;
            for k in 0..=n {
                let s = r - t + k as f64 * h;
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                acc += w * s * b.eval(s);
            }
            acc * h / (2.0 * r)
        };
        let t = traj.t_last();
        let mut worst: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for k in 0..200 {
            let r = cfg.obstacle.radius() + t + 0.05 + k as f64 * 0.02;
            let (u, _, _) = traj.evaluate(t, r).unwrap();
            let e = exact(t, r);
            worst = worst.max((u - e).abs());
            peak = peak.max(e.abs());
        }
        assert!(worst < 0.01 * peak, "{worst} vs {peak}");
    }

    #[test]
    fn energy_is_conserved_without_forcing() {
        let traj = run(&linear_config(10.0, 1e-2)).unwrap();
        let e = &traj.monitors.e_total;
        let e0 = e[0];
        let drift = e.iter().fold(0.0f64, |m, x| m.max((x - e0).abs() / e0));
        assert!(drift < 1e-3, "{drift}");
        assert!(traj.monitors.e_local.iter().zip(e).all(|(l, t)| *l <= *t && *l >= 0.0));
    }

    #[test]
    fn zero_data_gives_zero_series() {
        let mut cfg = linear_config(1.0, 1e-2);
        cfg.data = InitialData { f: Shape::Zero, g: Shape::Zero };
        let traj = run(&cfg).unwrap();
        assert!(traj.monitors.e_total.iter().all(|&x| x == 0.0));
        assert!(traj.monitors.sup_u.iter().all(|&x| x == 0.0));
        let spec = LatticeSpec { t0: 0.0, dt: 0.05, rows: 3, r0: 0.5, dr: 0.1, cols: 10 };
        let err = transform_to_cylinder(&traj, &spec, &cfg.obstacle);
        assert!(matches!(err, Err(Error::Coverage(_))));
    }

    #[test]
    fn null_form_run_matches_linear_run_to_first_order() {
        let mut cfg = linear_config(3.0, 1e-2);
        cfg.epsilon = 1e-3;
        let lin = run(&cfg).unwrap();
        cfg.nonlinearity = NonlinearitySpec::q0_radial();
        let nl = run(&cfg).unwrap();
        let a = lin.frames.last().unwrap();
        let b = nl.frames.last().unwrap();
        let diff = a.u.iter().zip(&b.u).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let size = a.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(diff > 0.0 && diff < 1e-2 * size, "{diff} vs {size}");
    }

    #[test]
    fn blow_up_is_reported_with_partial_frames() {
        let mut cfg = linear_config(20.0, 2e-2);
        cfg.nonlinearity = NonlinearitySpec::dt_squared();
        cfg.epsilon = 40.0;
        cfg.snapshot_stride = 5;
        match run(&cfg) {
            Err(Error::NonFinite { time, partial }) => {
                assert!(time > 0.0 && time < 20.0);
                assert!(!partial.frames.is_empty());
                assert!(partial.frames.iter().all(|f| f.u.iter().all(|x| x.is_finite())));
            }
            Err(Error::Stability(_)) => {}
            other => panic!("expected blow-up, got {:?}", other.map(|t| t.t_last())),
        }
    }
}
