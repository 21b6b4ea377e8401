//! Radial fields on the Einstein cylinder `R x S^3`: finite-difference operators
//! on masked `(T, R)` lattices, closed-form checks of operator identities, the
//! coefficient `a(T, R)`, and slice quadrature with the volume element
//! `4 pi sin^2 R dR`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fd::fornberg_weights;
use crate::geometry::{conformal_factor_minkowski, one_plus_cos_product, to_einstein, to_minkowski, EinsteinEvent, MinkowskiEvent};
use crate::{Error, Result};

/// Uniform `(T, R)` lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub t0: f64,
    pub dt: f64,
    pub rows: usize,
    pub r0: f64,
    pub dr: f64,
    pub cols: usize,
}

impl LatticeSpec {
    pub fn time(&self, row: usize) -> f64 {
        self.t0 + row as f64 * self.dt
    }

    pub fn polar(&self, col: usize) -> f64 {
        self.r0 + col as f64 * self.dr
    }

    /// Lattice of `2 * half + 1` rows centred on `time`, covering
    /// `R in [r0, r1]` with spacing close to `dr`.
    pub fn strip(time: f64, half: usize, dt: f64, r0: f64, r1: f64, dr: f64) -> Self {
        let cols = ((r1 - r0) / dr).ceil().max(1.0) as usize + 1;
        Self {
            t0: time - half as f64 * dt,
            dt,
            rows: 2 * half + 1,
            r0,
            dr: (r1 - r0) / (cols - 1) as f64,
            cols,
        }
    }
}

/// What to do when no stencil fits inside the valid region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskPolicy {
    #[default]
    Strict,
    /// Drop the node from the output mask instead of failing.
    Shrink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Time,
    Polar,
}

/// Samples `v(T, R)` on a lattice with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderField {
    spec: LatticeSpec,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl CylinderField {
    pub fn new(spec: LatticeSpec, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        let n = spec.rows * spec.cols;
        if values.len() != n || mask.len() != n {
            return Err(Error::Domain(format!("expected {n} samples, got {} and {}", values.len(), mask.len())));
        }
        if values.iter().zip(&mask).any(|(v, &m)| m && !v.is_finite()) {
            return Err(Error::Domain("non-finite value on a valid node".into()));
        }
        Ok(Self { spec, values, mask })
    }

    /// Sample `f` at every node where `valid` holds.
    pub fn from_fn(spec: LatticeSpec, f: impl Fn(f64, f64) -> f64, valid: impl Fn(f64, f64) -> bool) -> Self {
        let mut values = vec![0.0; spec.rows * spec.cols];
        let mut mask = vec![false; spec.rows * spec.cols];
        for i in 0..spec.rows {
            let t = spec.time(i);
            for j in 0..spec.cols {
                let r = spec.polar(j);
                if valid(t, r) {
                    values[i * spec.cols + j] = f(t, r);
                    mask[i * spec.cols + j] = true;
                }
            }
        }
        Self { spec, values, mask }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.spec.cols + col]
    }

    pub fn valid(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.spec.cols + col]
    }

    pub fn row(&self, row: usize) -> (&[f64], &[bool]) {
        let c = self.spec.cols;
        (&self.values[row * c..(row + 1) * c], &self.mask[row * c..(row + 1) * c])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Pointwise map over valid nodes: `f(T, R, value)`.
    pub fn map(&self, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.spec.rows {
            for j in 0..self.spec.cols {
                let k = i * self.spec.cols + j;
                if out.mask[k] {
                    out.values[k] = f(self.spec.time(i), self.spec.polar(j), self.values[k]);
                }
            }
        }
        out
    }

    /// Nodewise combination of two fields on the same lattice; the result is
    /// valid where both inputs are.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64, f64, f64) -> f64) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::Domain("fields live on different lattices".into()));
        }
        let mut out = self.clone();
        for i in 0..self.spec.rows {
            for j in 0..self.spec.cols {
                let k = i * self.spec.cols + j;
                out.mask[k] = self.mask[k] && other.mask[k];
                out.values[k] = if out.mask[k] {
                    f(self.spec.time(i), self.spec.polar(j), self.values[k], other.values[k])
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }

    /// Restrict the mask with an extra predicate on `(T, R)`.
    pub fn restrict(&self, keep: impl Fn(f64, f64) -> bool) -> Self {
        let mut out = self.clone();
        for i in 0..self.spec.rows {
            for j in 0..self.spec.cols {
                let k = i * self.spec.cols + j;
                if out.mask[k] && !keep(self.spec.time(i), self.spec.polar(j)) {
                    out.mask[k] = false;
                    out.values[k] = 0.0;
                }
            }
        }
        out
    }

    /// Second-order derivative of order 1 or 2 along `axis`. Centred where
    /// both neighbours are valid, one-sided otherwise.
    pub fn derivative(&self, axis: Axis, order: usize, policy: MaskPolicy) -> Result<Self> {
        assert!(order == 1 || order == 2, "only first and second derivatives");
        let (rows, cols) = (self.spec.rows, self.spec.cols);
        let h = match axis {
            Axis::Time => self.spec.dt,
            Axis::Polar => self.spec.dr,
        };
        let scale = h.powi(order as i32);
        let centred = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], order);
        let width = order + 2;
        let offsets: Vec<f64> = (0..width).map(|k| k as f64).collect();
        let forward = fornberg_weights(0.0, &offsets, order);
        let mut out = self.clone();
        for i in 0..rows {
            for j in 0..cols {
                let k = i * cols + j;
                if !self.mask[k] {
                    continue;
                }
                let at = |step: isize| -> Option<f64> {
                    let (ii, jj) = match axis {
                        Axis::Time => (i as isize + step, j as isize),
                        Axis::Polar => (i as isize, j as isize + step),
                    };
                    if ii < 0 || jj < 0 || ii >= rows as isize || jj >= cols as isize {
                        return None;
                    }
                    let kk = ii as usize * cols + jj as usize;
                    self.mask[kk].then(|| self.values[kk])
                };
                let stencil = |sign: isize, weights: &[f64], first: isize| -> Option<f64> {
                    let mut acc = 0.0;
                    for (m, w) in weights.iter().enumerate() {
                        acc += w * at(sign * (first + m as isize))?;
                    }
                    Some(acc)
                };
                let value = stencil(1, &centred, -1)
                    .or_else(|| stencil(1, &forward, 0))
                    .or_else(|| {
                        // mirrored one-sided stencil: odd derivatives flip sign
                        let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
                        stencil(-1, &forward, 0).map(|v| sign * v)
                    });
                match (value, policy) {
                    (Some(v), _) => out.values[k] = v / scale,
                    (None, MaskPolicy::Strict) => return Err(Error::Mask { row: i, col: j }),
                    (None, MaskPolicy::Shrink) => {
                        out.mask[k] = false;
                        out.values[k] = 0.0;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Apply `Z_0 = (pi - T)^2 d_T` or `Z_1 = (pi - T)^2 d_R`.
    pub fn weighted_derivative(&self, axis: Axis, policy: MaskPolicy) -> Result<Self> {
        Ok(self.derivative(axis, 1, policy)?.map(|t, _, v| (PI - t) * (PI - t) * v))
    }
}

/// Radial wave operator `d_T^2 - d_R^2 - 2 cot R d_R`. Nodes with `R < 2 dR`
/// are excluded from the output.
pub fn box_g_radial(v: &CylinderField, policy: MaskPolicy) -> Result<CylinderField> {
    let guard = 2.0 * v.spec.dr;
    let v = v.restrict(|_, r| r >= guard && r <= PI - guard);
    let vtt = v.derivative(Axis::Time, 2, policy)?;
    let vrr = v.derivative(Axis::Polar, 2, policy)?;
    let vr = v.derivative(Axis::Polar, 1, policy)?;
    let partial = vtt.zip_with(&vrr, |_, _, a, b| a - b)?;
    partial.zip_with(&vr, |_, r, a, b| a - 2.0 * r.cos() / r.sin() * b)
}

/// The pushforward of `d_t`: `(1 + cos T cos R) d_T - sin T sin R d_R`.
pub fn field_x(v: &CylinderField, policy: MaskPolicy) -> Result<CylinderField> {
    let vt = v.derivative(Axis::Time, 1, policy)?;
    let vr = v.derivative(Axis::Polar, 1, policy)?;
    vt.zip_with(&vr, |t, r, a, b| one_plus_cos_product(t, r) * a - t.sin() * r.sin() * b)
}

/// `a(T, R) = sin^2 T sin^2 R / (1 + cos T cos R)^2`.
pub fn a_coeff(time: f64, polar: f64) -> Result<f64> {
    let den = one_plus_cos_product(time, polar);
    if den <= 0.0 {
        return Err(Error::Domain(format!("1 + cos T cos R vanishes at T = {time}, R = {polar}")));
    }
    let num = time.sin() * polar.sin();
    Ok(num * num / (den * den))
}

/// Upper bound `(2 delta / (1 + delta^2))^2` on `a` when `sin R = delta sin(pi - T)`.
pub fn a_coeff_bound(delta: f64) -> f64 {
    let b = 2.0 * delta / (1.0 + delta * delta);
    b * b
}

/// A closed-form radial test function `f(T, R)`.
#[derive(Debug, Clone, Copy)]
pub struct TestFunction {
    pub name: &'static str,
    pub f: fn(f64, f64) -> f64,
}

/// Five smooth radial functions on the cylinder (functions of `cos R`).
pub fn test_battery() -> [TestFunction; 5] {
    [
        TestFunction { name: "cosT_cos2R", f: |t, r| t.cos() * r.cos() * r.cos() },
        TestFunction { name: "sinT_cosR", f: |t, r| t.sin() * r.cos() },
        TestFunction { name: "cos_T_one_plus_cosR", f: |t, r| (0.7 * t).cos() * (1.0 + r.cos()) },
        TestFunction { name: "exp_sinT_cosR", f: |t, r| (0.5 * t.sin() + 0.3 * r.cos()).exp() },
        TestFunction { name: "shifted_product", f: |t, r| (t + 0.3).sin() * (1.0 + 0.5 * r.cos() + 0.25 * r.cos() * r.cos()) },
    ]
}

fn fd_t(f: &dyn Fn(f64, f64) -> f64, t: f64, r: f64, h: f64) -> f64 {
    (f(t + h, r) - f(t - h, r)) / (2.0 * h)
}

fn fd_r(f: &dyn Fn(f64, f64) -> f64, t: f64, r: f64, h: f64) -> f64 {
    (f(t, r + h) - f(t, r - h)) / (2.0 * h)
}

fn fd_tt(f: &dyn Fn(f64, f64) -> f64, t: f64, r: f64, h: f64) -> f64 {
    (f(t + h, r) - 2.0 * f(t, r) + f(t - h, r)) / (h * h)
}

fn fd_rr(f: &dyn Fn(f64, f64) -> f64, t: f64, r: f64, h: f64) -> f64 {
    (f(t, r + h) - 2.0 * f(t, r) + f(t, r - h)) / (h * h)
}

/// `box_g f` at a point by central differences of step `h`.
pub fn box_g_pointwise(f: &dyn Fn(f64, f64) -> f64, t: f64, r: f64, h: f64) -> f64 {
    fd_tt(f, t, r, h) - fd_rr(f, t, r, h) - 2.0 * r.cos() / r.sin() * fd_r(f, t, r, h)
}

/// The field `X` applied to `f` at a point by central differences.
pub fn field_x_pointwise(f: &dyn Fn(f64, f64) -> f64, t: f64, r: f64, h: f64) -> f64 {
    one_plus_cos_product(t, r) * fd_t(f, t, r, h) - t.sin() * r.sin() * fd_r(f, t, r, h)
}

/// Largest `|[box_g, X] f - RHS|` over `points`, where
/// `RHS = -2 cos R sin T box_g f + 2 cos R cos T f_T + 2 sin T sin R f_R`
/// and every derivative is a (nested) central difference of step `h`.
pub fn commutator_residual(f: &dyn Fn(f64, f64) -> f64, points: &[EinsteinEvent], h: f64) -> f64 {
    let xf = |t: f64, r: f64| field_x_pointwise(f, t, r, h);
    let boxf = |t: f64, r: f64| box_g_pointwise(f, t, r, h);
    let mut worst: f64 = 0.0;
    for p in points {
        let (t, r) = (p.time, p.polar);
        let lhs = box_g_pointwise(&xf, t, r, h) - field_x_pointwise(&boxf, t, r, h);
        let rhs = -2.0 * r.cos() * t.sin() * boxf(t, r)
            + 2.0 * r.cos() * t.cos() * fd_t(f, t, r, h)
            + 2.0 * t.sin() * r.sin() * fd_r(f, t, r, h);
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// Relative discrepancy `max |(box_g + 1) v - Omega^{-3} box(Omega v)| / max |(box_g + 1) v|`
/// over `points`. The right side pulls `v` back to Minkowski space and
/// differences in `(t, r)` with the same step `h`.
pub fn intertwining_residual(v: &dyn Fn(f64, f64) -> f64, points: &[EinsteinEvent], h: f64) -> Result<f64> {
    let lifted = |t: f64, r: f64| {
        let ev = MinkowskiEvent { t, r, omega: [0.0, 0.0, 1.0] };
        let image = to_einstein(&ev);
        image.omega_factor * v(image.einstein.time, image.einstein.polar)
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in points {
        let lhs = box_g_pointwise(v, p.time, p.polar, h) + v(p.time, p.polar);
        let m = to_minkowski(p)?;
        if m.r < 4.0 * h {
            return Err(Error::Domain(format!("point too close to the axis: r = {}", m.r)));
        }
        let flat = fd_tt(&lifted, m.t, m.r, h) - fd_rr(&lifted, m.t, m.r, h) - 2.0 / m.r * fd_r(&lifted, m.t, m.r, h);
        let omega = conformal_factor_minkowski(m.t, m.r);
        let rhs = flat / (omega * omega * omega);
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(lhs.abs());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// `n` seeded points well inside the diamond:
/// `|T| < 1.2`, `0.3 < R < pi - 0.3`, `|T| + R < pi - 0.4`.
pub fn interior_points(n: usize, seed: u64) -> Vec<EinsteinEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let t: f64 = rng.gen_range(-1.2..1.2);
        let r: f64 = rng.gen_range(0.3..PI - 0.3);
        if t.abs() + r < PI - 0.4 {
            pts.push(EinsteinEvent { time: t, polar: r, omega: [0.0, 0.0, 1.0] });
        }
    }
    pts
}

/// Integral of `values^2 4 pi sin^2 R` over the valid nodes of one row; each
/// contiguous run of valid nodes is integrated by the trapezoid rule.
pub fn slice_integral(values: &[f64], mask: &[bool], r0: f64, dr: f64, power: i32) -> f64 {
    let mut total = 0.0;
    let mut run_start: Option<usize> = None;
    let weight = |j: usize| {
        let s = (r0 + j as f64 * dr).sin();
        4.0 * PI * s * s
    };
    let mut flush = |start: usize, end: usize| {
        // [start, end) is a run of valid nodes
        for j in start..end.saturating_sub(1) {
            let a = values[j].abs().powi(power) * weight(j);
            let b = values[j + 1].abs().powi(power) * weight(j + 1);
            total += 0.5 * dr * (a + b);
        }
    };
    for j in 0..values.len() {
        match (mask[j], run_start) {
            (true, None) => run_start = Some(j),
            (false, Some(s)) => {
                flush(s, j);
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        flush(s, values.len());
    }
    total
}

/// `(int v^2 4 pi sin^2 R dR)^{1/2}` over the valid, region-restricted nodes of a row.
pub fn slice_l2(v: &CylinderField, row: usize, region: &dyn Fn(f64, f64) -> bool) -> f64 {
    slice_lp(v, row, region, 2)
}

/// `L^p` analogue of [`slice_l2`].
pub fn slice_lp(v: &CylinderField, row: usize, region: &dyn Fn(f64, f64) -> bool, p: i32) -> f64 {
    let (values, mask) = v.row(row);
    let t = v.spec.time(row);
    let mask: Vec<bool> = mask.iter().enumerate().map(|(j, &m)| m && region(t, v.spec.polar(j))).collect();
    slice_integral(values, &mask, v.spec.r0, v.spec.dr, p).powf(1.0 / p as f64)
}

/// Largest `|v|` over the valid, region-restricted nodes of a row.
pub fn slice_sup(v: &CylinderField, row: usize, region: &dyn Fn(f64, f64) -> bool) -> f64 {
    let (values, mask) = v.row(row);
    let t = v.spec.time(row);
    values
        .iter()
        .zip(mask)
        .enumerate()
        .filter(|(j, (_, &m))| m && region(t, v.spec.polar(*j)))
        .fold(0.0, |acc: f64, (_, (x, _))| acc.max(x.abs()))
}

/// Energy density `v_T^2 + v_R^2` on a field.
pub fn energy_density(v: &CylinderField, policy: MaskPolicy) -> Result<CylinderField> {
    let vt = v.derivative(Axis::Time, 1, policy)?;
    let vr = v.derivative(Axis::Polar, 1, policy)?;
    vt.zip_with(&vr, |_, _, a, b| a * a + b * b)
}

/// Weighted derivatives `Z^alpha` with `|alpha| <= order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightedDerivativeSpec {
    pub order: usize,
}

/// Norms of all `Z^alpha v` with `|alpha| = order`, summed over the words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderNorms {
    pub order: usize,
    /// `sum ||Z^alpha v||_2`.
    pub l2: f64,
    /// `sum ||Z^alpha v'||_2` with `|v'|^2 = v_T^2 + v_R^2`.
    pub l2_prime: f64,
    pub l6: f64,
    pub sup: f64,
}

/// Weighted norms on lattice row `row` for `|alpha| <= spec.order`.
///
/// Words in `{Z_0, Z_1}` are applied right to left with the weight
/// re-evaluated between applications. The row needs `spec.order + 1` valid
/// neighbours in `T` on each side for the centred stencils.
pub fn weighted_norms(
    v: &CylinderField,
    spec: WeightedDerivativeSpec,
    row: usize,
    region: &dyn Fn(f64, f64) -> bool,
) -> Result<Vec<OrderNorms>> {
    if spec.order > 3 {
        return Err(Error::Domain(format!("weighted order {} exceeds 3", spec.order)));
    }
    let mut out = Vec::with_capacity(spec.order + 1);
    let mut layer: Vec<CylinderField> = vec![v.clone()];
    for order in 0..=spec.order {
        let mut norms = OrderNorms { order, l2: 0.0, l2_prime: 0.0, l6: 0.0, sup: 0.0 };
        for w in &layer {
            norms.l2 += slice_l2(w, row, region);
            norms.l6 += slice_lp(w, row, region, 6);
            norms.sup += slice_sup(w, row, region);
            let e = energy_density(w, MaskPolicy::Shrink)?;
            if !e.valid_row_has_values(row) && w.valid_row_has_values(row) {
                return Err(Error::Mask { row, col: 0 });
            }
            norms.l2_prime += slice_integral_of(&e, row, region).sqrt();
        }
        out.push(norms);
        if order < spec.order {
            let mut next = Vec::with_capacity(layer.len() * 2);
            for w in &layer {
                next.push(w.weighted_derivative(Axis::Time, MaskPolicy::Shrink)?);
                next.push(w.weighted_derivative(Axis::Polar, MaskPolicy::Shrink)?);
            }
            layer = next;
        }
    }
    Ok(out)
}

impl CylinderField {
    fn valid_row_has_values(&self, row: usize) -> bool {
        self.row(row).1.iter().any(|&m| m)
    }
}

/// Integral of a density (not squared) over a row.
fn slice_integral_of(density: &CylinderField, row: usize, region: &dyn Fn(f64, f64) -> bool) -> f64 {
    let (values, mask) = density.row(row);
    let t = density.spec.time(row);
    let mask: Vec<bool> = mask.iter().enumerate().map(|(j, &m)| m && region(t, density.spec.polar(j))).collect();
    let sqrt_vals: Vec<f64> = values.iter().map(|x| x.max(0.0).sqrt()).collect();
    slice_integral(&sqrt_vals, &mask, density.spec.r0, density.spec.dr, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{frame_at, MinkowskiEvent};

    fn everywhere(_: f64, _: f64) -> bool {
        true
    }


    fn lattice(h: f64) -> LatticeSpec {
        LatticeSpec { t0: 0.2, dt: h, rows: 41, r0: 0.5, dr: h, cols: 41 }
    }

    #[test]
    fn box_g_on_simple_fields() {
        for h in [1e-2, 5e-3] {
            // one-sided edge stencils carry the largest error constant
            let tol = 2.0 * h * h;
            let v = CylinderField::from_fn(lattice(h), |t, _| t.cos(), everywhere);
            let b = box_g_radial(&v, MaskPolicy::Strict).unwrap();
            let err = b.map(|t, _, x| (x + t.cos()).abs()).values().iter().fold(0.0f64, |a, &b| a.max(b));
            assert!(err < tol, "cos T, h = {h}: {err}");

            let v = CylinderField::from_fn(lattice(h), |_, r| r.cos(), everywhere);
            let b = box_g_radial(&v, MaskPolicy::Strict).unwrap();
            let err = b.map(|_, r, x| (x - 3.0 * r.cos()).abs()).values().iter().fold(0.0f64, |a, &b| a.max(b));
            assert!(err < tol, "cos R, h = {h}: {err}");
        }
    }

    #[test]
    fn box_g_excludes_the_pole() {
        let spec = LatticeSpec { t0: 0.0, dt: 0.01, rows: 5, r0: 0.0, dr: 0.01, cols: 10 };
        let v = CylinderField::from_fn(spec, |_, r| r.cos(), everywhere);
        let b = box_g_radial(&v, MaskPolicy::Strict).unwrap();
        assert!(!b.valid(2, 0) && !b.valid(2, 1) && b.valid(2, 2));
    }

    #[test]
    fn strict_policy_reports_isolated_nodes() {
        let spec = LatticeSpec { t0: 0.0, dt: 0.1, rows: 3, r0: 1.0, dr: 0.1, cols: 3 };
        let v = CylinderField::from_fn(spec, |t, r| t + r, |t, r| (t - 0.1).abs() < 1e-9 && (r - 1.1).abs() < 1e-9);
        assert!(matches!(v.derivative(Axis::Time, 1, MaskPolicy::Strict), Err(Error::Mask { row: 1, col: 1 })));
        let shrunk = v.derivative(Axis::Time, 1, MaskPolicy::Shrink).unwrap();
        assert_eq!(shrunk.valid_count(), 0);
    }

    #[test]
    fn one_sided_stencils_at_mask_edges() {
        let spec = LatticeSpec { t0: 0.0, dt: 0.01, rows: 1, r0: 1.0, dr: 0.01, cols: 30 };
        let v = CylinderField::from_fn(spec, |_, r| r * r, |_, r| r > 1.1);
        let d = v.derivative(Axis::Polar, 1, MaskPolicy::Strict).unwrap();
        let d2 = v.derivative(Axis::Polar, 2, MaskPolicy::Strict).unwrap();
        for j in 0..30 {
            if v.valid(0, j) {
                assert!((d.value(0, j) - 2.0 * spec.polar(j)).abs() < 1e-10);
                assert!((d2.value(0, j) - 2.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn field_x_examples() {
        let spec = lattice(1e-2);
        let v = CylinderField::from_fn(spec, |_, _| 3.0, everywhere);
        let x = field_x(&v, MaskPolicy::Strict).unwrap();
        assert!(x.values().iter().all(|&a| a.abs() < 1e-12));

        // at the origin X is 2 d_T, the pushforward of d_t
        let f = |t: f64, r: f64| (t + 0.2).sin() * r.cos();
        let frame = frame_at(&MinkowskiEvent::new(0.0, 0.0).unwrap());
        let xv = field_x_pointwise(&f, 0.0, 0.0, 1e-5);
        assert!((xv - frame.jac[0][0] * 0.2f64.cos()).abs() < 1e-8);
        assert!((frame.jac[0][0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn field_x_near_the_tip() {
        // |X v - (pi - T)^2 / 2 v_T| <= C (pi - T)^3 (|v_T| + |v_R|) on B_3
        let f = |t: f64, r: f64| (2.0 * t).sin() + r.cos() * t;
        let mut worst: f64 = 0.0;
        for k in 0..40 {
            let s = 0.5 * 0.85f64.powi(k);
            let time = PI - s;
            for frac in [0.1, 0.5, 0.9] {
                let polar = frac * s;
                let ev = EinsteinEvent::new(time, polar).unwrap();
                if !crate::geometry::in_region_b(&ev, 3.0) {
                    continue;
                }
                let h = 1e-3 * s;
                let (vt, vr) = (fd_t(&f, time, polar, h), fd_r(&f, time, polar, h));
                let gap = (field_x_pointwise(&f, time, polar, h) - 0.5 * s * s * vt).abs();
                worst = worst.max(gap / (s.powi(3) * (vt.abs() + vr.abs())));
            }
        }
        assert!(worst.is_finite() && worst < 10.0, "fitted constant {worst}");
    }

    #[test]
    fn a_coeff_examples_and_bound() {
        assert!((a_coeff(PI / 2.0, PI / 2.0).unwrap() - 1.0).abs() < 1e-15);
        for k in 0..20 {
            assert_eq!(a_coeff(0.0, k as f64 * 0.15).unwrap(), 0.0);
        }
        let mut closest: f64 = f64::INFINITY;
        // the bound is approached as T -> pi along the ray
        let sweep = (1..2000).map(|k| k as f64 * PI / 2000.0).chain((8..19).map(|k| PI - 10f64.powf(-k as f64 / 4.0)));
        for t in sweep {
            let delta = 0.5;
            let r = (delta * (PI - t).sin()).asin();
            let a = a_coeff(t, r).unwrap();
            assert!(a <= a_coeff_bound(delta) * (1.0 + 1e-12));
            assert!((a_coeff_bound(delta) - 0.64).abs() < 1e-15);
            closest = closest.min(a_coeff_bound(delta) - a);
            // the other branch R > pi/2 keeps the same sin R
            if t + (PI - r) < PI {
                assert!(a_coeff(t, PI - r).unwrap() <= 0.64 * (1.0 + 1e-12));
            }
        }
        assert!(closest < 1e-9, "bound attained up to {closest}");
    }

    #[test]
    fn commutator_identity_holds_on_the_battery() {
        let h = 1e-3;
        let pts = interior_points(50, 7);
        for tf in test_battery() {
            let r1 = commutator_residual(&tf.f, &pts, h);
            let r2 = commutator_residual(&tf.f, &pts, 2.0 * h);
            assert!(r1 < 1e-5, "{}: {r1}", tf.name);
            let ratio = r2 / r1;
            assert!((3.5..=4.5).contains(&ratio), "{}: ratio {ratio}", tf.name);
        }
        assert_eq!(commutator_residual(&|_, _| 1.0, &pts, h), 0.0);
    }

    #[test]
    fn intertwining_holds_on_the_battery() {
        let pts = interior_points(20, 3);
        for tf in test_battery() {
            let e1 = intertwining_residual(&tf.f, &pts, 1e-3).unwrap();
            let e2 = intertwining_residual(&tf.f, &pts, 2e-3).unwrap();
            assert!(e1 < 1e-4, "{}: {e1}", tf.name);
            assert!((3.0..=5.0).contains(&(e2 / e1)), "{}: ratio {}", tf.name, e2 / e1);
        }
    }

    #[test]
    fn slice_quadrature() {
        let n = (PI / 1e-3).round() as usize;
        let spec = LatticeSpec { t0: 0.0, dt: 1.0, rows: 1, r0: 0.0, dr: PI / n as f64, cols: n + 1 };
        let one = CylinderField::from_fn(spec, |_, _| 1.0, everywhere);
        assert!((slice_l2(&one, 0, &everywhere) - (2.0 * PI * PI).sqrt()).abs() < 1e-6);
        let half = slice_l2(&one, 0, &|_, r| r <= PI / 2.0 + 1e-12);
        assert!((half - PI).abs() < 1e-5);

        // trapezoid convergence on a non-symmetric integrand
        let err = |cols: usize| {
            let spec = LatticeSpec { t0: 0.0, dt: 1.0, rows: 1, r0: 0.0, dr: 1.0 / (cols - 1) as f64, cols };
            let f = CylinderField::from_fn(spec, |_, r| r, everywhere);
            let exact = {
                // int_0^1 r^2 4 pi sin^2 r dr
                let i = 1.0 / 6.0 - (2.0f64.sin() / 4.0 + 2.0f64.cos() / 4.0 - 2.0f64.sin() / 8.0);
                (4.0 * PI * i).sqrt()
            };
            (slice_l2(&f, 0, &everywhere) - exact).abs()
        };
        let ratio = err(101) / err(201);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn weighted_norms_examples() {
        let spec = LatticeSpec::strip(1.0, 4, 0.01, 0.3, 1.5, 0.01);
        let c = 2.5;
        let v = CylinderField::from_fn(spec, |_, _| c, everywhere);
        let n = weighted_norms(&v, WeightedDerivativeSpec { order: 0 }, 4, &everywhere).unwrap();
        let vol = slice_integral(&vec![1.0; spec.cols], &vec![true; spec.cols], spec.r0, spec.dr, 2);
        assert!((n[0].l2 - c * vol.sqrt()).abs() < 1e-12);
        assert!((n[0].sup - c).abs() < 1e-15);
        assert!(n[0].l2_prime.abs() < 1e-10);

        let zero = CylinderField::from_fn(spec, |_, _| 0.0, everywhere);
        let n = weighted_norms(&zero, WeightedDerivativeSpec { order: 2 }, 4, &everywhere).unwrap();
        assert_eq!(n.len(), 3);
        assert!(n.iter().all(|o| o.l2 == 0.0 && o.l2_prime == 0.0 && o.l6 == 0.0 && o.sup == 0.0));
        assert!(weighted_norms(&zero, WeightedDerivativeSpec { order: 4 }, 4, &everywhere).is_err());
    }

    #[test]
    fn weighted_first_order_matches_closed_form() {
        let spec = LatticeSpec::strip(2.0, 4, 1e-3, 0.3, 0.8, 1e-3);
        let v = CylinderField::from_fn(spec, |t, r| t * t * r, everywhere);
        let n = weighted_norms(&v, WeightedDerivativeSpec { order: 1 }, 4, &everywhere).unwrap();
        let s2 = (PI - 2.0) * (PI - 2.0);
        let exact_t = CylinderField::from_fn(spec, |t, r| s2 * 2.0 * t * r, everywhere);
        let exact_r = CylinderField::from_fn(spec, |t, _| s2 * t * t, everywhere);
        let expect = slice_sup(&exact_t, 4, &everywhere) + slice_sup(&exact_r, 4, &everywhere);
        assert!((n[1].sup - expect).abs() < 1e-6 * expect);
    }

    #[test]
    fn sup_weight_of_synthetic_field() {
        // v = (pi - T)^{-1/4}: the weighted sup (pi - T)^{1/4} sup |v| is constant
        for s in [0.5, 0.1, 0.02] {
            let spec = LatticeSpec::strip(PI - s, 2, 1e-3 * s, 0.0, 0.5 * s, 1e-3 * s);
            let v = CylinderField::from_fn(spec, |t, _| (PI - t).powf(-0.25), everywhere);
            let w = s.powf(0.25) * slice_sup(&v, 2, &everywhere);
            assert!((w - 1.0).abs() < 1e-12);
        }
    }
}
