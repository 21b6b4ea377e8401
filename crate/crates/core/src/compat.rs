//! Compatibility functions `psi_k = d_t^k u(0, .)` of the radial exterior
//! problem `u_tt = u_rr + (2/r) u_r + N(u, u_t, u_r)`, computed by truncated
//! time-Taylor (jet) arithmetic, plus the boundary-vanishing check.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::fd::{fornberg_weights, uniform_derivative};
use crate::geometry::ObstacleSpec;
use crate::{Error, Result};

/// Largest supported jet order.
pub const MAX_JET_ORDER: usize = 6;

/// Formal accuracy of the spatial difference operators.
pub const SPATIAL_ACCURACY: usize = 4;

/// Samples of a radial function on a uniform grid `r0 + i dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    r0: f64,
    dr: f64,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(r0: f64, dr: f64, values: Vec<f64>) -> Result<Self> {
        if !(dr > 0.0 && r0.is_finite()) {
            return Err(Error::Domain(format!("invalid grid r0 = {r0}, dr = {dr}")));
        }
        if values.len() < SPATIAL_ACCURACY + 2 {
            return Err(Error::Domain(format!("profile needs at least {} samples", SPATIAL_ACCURACY + 2)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("profile contains non-finite samples".into()));
        }
        Ok(Self { r0, dr, values })
    }

    /// Sample `f` on `n` nodes starting at `r0`.
    pub fn from_fn(r0: f64, dr: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(r0, dr, (0..n).map(|i| f(r0 + i as f64 * dr)).collect())
    }

    pub fn zeros_like(&self) -> Self {
        Self { r0: self.r0, dr: self.dr, values: vec![0.0; self.values.len()] }
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r0 + i as f64 * self.dr
    }

    pub fn r_max(&self) -> f64 {
        self.r(self.values.len() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.values.len() == other.values.len() && self.r0 == other.r0 && self.dr == other.dr
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self { r0: self.r0, dr: self.dr, values }
    }

    /// How many spatial derivatives of accuracy [`SPATIAL_ACCURACY`] the
    /// grid can support, capped at [`MAX_JET_ORDER`].
    pub fn derivative_capacity(&self) -> usize {
        ((self.values.len() - 1) / (SPATIAL_ACCURACY + 1)).min(MAX_JET_ORDER)
    }

    /// First or second derivative by fourth-order differences (one-sided
    /// near the ends).
    pub fn derivative(&self, order: usize) -> Self {
        self.with_values(uniform_derivative(&self.values, self.dr, order, SPATIAL_ACCURACY))
    }

    /// `f'' + (2/r) f'`.
    pub fn laplacian(&self) -> Self {
        let d1 = self.derivative(1);
        let d2 = self.derivative(2);
        let values = (0..self.len()).map(|i| d2.values[i] + 2.0 / self.r(i) * d1.values[i]).collect();
        self.with_values(values)
    }

    /// Cubic Lagrange interpolation through the four nearest nodes; outside
    /// the grid this extrapolates from the end nodes.
    pub fn value_at(&self, r: f64) -> f64 {
        let n = self.values.len();
        let x = (r - self.r0) / self.dr;
        let start = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let nodes: Vec<f64> = (0..4).map(|k| (start + k) as f64).collect();
        let w = fornberg_weights(x, &nodes, 0);
        (0..4).map(|k| w[k] * self.values[start + k]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.with_values(self.values.iter().map(|v| c * v).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }
}

/// Gaussian `amplitude * exp(-((r - center) / width)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl GaussianBump {
    pub fn eval(&self, r: f64) -> f64 {
        let z = (r - self.center) / self.width;
        self.amplitude * (-z * z).exp()
    }

    /// Radius beyond which the bump is below `exp(-36)` relative to its peak.
    pub fn support_outer(&self) -> f64 {
        self.center + 6.0 * self.width
    }

    pub fn support_inner(&self) -> f64 {
        self.center - 6.0 * self.width
    }

    pub fn profile(&self, r0: f64, dr: f64, n: usize) -> Result<RadialProfile> {
        RadialProfile::from_fn(r0, dr, n, |r| self.eval(r))
    }
}

/// Radial coefficient of a monomial: `c * r^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialCoefficient {
    pub c: f64,
    pub power: i32,
}

impl RadialCoefficient {
    pub fn constant(c: f64) -> Self {
        Self { c, power: 0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if self.power == 0 {
            self.c
        } else {
            self.c * r.powi(self.power)
        }
    }
}

/// `coef(r) * u^a * u_t^b * u_r^c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coef: RadialCoefficient,
    pub powers: [u32; 3],
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

/// Semilinear nonlinearity `N(u, u_t, u_r)`, a polynomial of degree at most 3.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    name: &'static str,
    terms: Vec<Monomial>,
}

impl NonlinearitySpec {
    pub fn new(terms: Vec<Monomial>) -> Result<Self> {
        if let Some(m) = terms.iter().find(|m| m.degree() > 3) {
            return Err(Error::Domain(format!("monomial of degree {} exceeds 3", m.degree())));
        }
        Ok(Self { name: "custom", terms })
    }

    /// The linear equation.
    pub fn zero() -> Self {
        Self { name: "zero", terms: Vec::new() }
    }

    /// `u_t^2 - u_r^2`, the radial null form.
    pub fn q0_radial() -> Self {
        Self {
            name: "q0_radial",
            terms: vec![
                Monomial { coef: RadialCoefficient::constant(1.0), powers: [0, 2, 0] },
                Monomial { coef: RadialCoefficient::constant(-1.0), powers: [0, 0, 2] },
            ],
        }
    }

    /// `u_t^2`, which violates the null condition.
    pub fn dt_squared() -> Self {
        Self { name: "dt_squared", terms: vec![Monomial { coef: RadialCoefficient::constant(1.0), powers: [0, 2, 0] }] }
    }

    /// Look up a built-in by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "zero" => Some(Self::zero()),
            "q0_radial" => Some(Self::q0_radial()),
            "dt_squared" => Some(Self::dt_squared()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Whether `N` and its first derivatives vanish at the origin.
    pub fn vanishes_to_second_order(&self) -> bool {
        self.terms.iter().all(|m| m.degree() >= 2)
    }

    pub fn eval(&self, r: f64, u: f64, ut: f64, ur: f64) -> f64 {
        let mut acc = 0.0;
        for m in &self.terms {
            let [a, b, c] = m.powers;
            acc += m.coef.eval(r) * u.powi(a as i32) * ut.powi(b as i32) * ur.powi(c as i32);
        }
        acc
    }

    /// Partial derivative in `u_t`.
    pub fn d_ut(&self, r: f64, u: f64, ut: f64, ur: f64) -> f64 {
        let mut acc = 0.0;
        for m in &self.terms {
            let [a, b, c] = m.powers;
            if b > 0 {
                acc += m.coef.eval(r) * b as f64 * u.powi(a as i32) * ut.powi(b as i32 - 1) * ur.powi(c as i32);
            }
        }
        acc
    }
}

/// `psi_0 .. psi_K` on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityJet {
    pub psi: Vec<RadialProfile>,
}

impl CompatibilityJet {
    pub fn order(&self) -> usize {
        self.psi.len() - 1
    }
}

/// Truncated time series: `coeffs[j]` is the normalized Taylor coefficient
/// `d_t^j / j!` of a field, sampled on the grid.
type Jet = Vec<Vec<f64>>;

fn jet_mul(a: &Jet, b: &Jet, order: usize) -> Jet {
    let n = a[0].len();
    (0..=order)
        .map(|m| {
            let mut out = vec![0.0; n];
            for i in 0..=m {
                for (o, (x, y)) in out.iter_mut().zip(a[i].iter().zip(&b[m - i])) {
                    *o += x * y;
                }
            }
            out
        })
        .collect()
}

fn jet_one(n: usize, order: usize) -> Jet {
    let mut j = vec![vec![0.0; n]; order + 1];
    j[0] = vec![1.0; n];
    j
}

fn jet_pow(a: &Jet, p: u32, order: usize) -> Jet {
    let mut out = jet_one(a[0].len(), order);
    for _ in 0..p {
        out = jet_mul(&out, a, order);
    }
    out
}

/// Normalized Taylor coefficient of order `m` of `N(U, U_t, U_r)`.
fn nonlinear_coefficient(nl: &NonlinearitySpec, grid: &RadialProfile, u: &Jet, ut: &Jet, ur: &Jet, m: usize) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    for term in &nl.terms {
        let [a, b, c] = term.powers;
        let prod = jet_mul(&jet_mul(&jet_pow(u, a, m), &jet_pow(ut, b, m), m), &jet_pow(ur, c, m), m);
        for (i, o) in out.iter_mut().enumerate() {
            *o += term.coef.eval(grid.r(i)) * prod[m][i];
        }
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Compatibility functions up to order `k_max` for data `(f, g)`.
pub fn compute_jet(f: &RadialProfile, g: &RadialProfile, nl: &NonlinearitySpec, k_max: usize) -> Result<CompatibilityJet> {
    if !f.same_grid(g) {
        return Err(Error::Domain("f and g must share a grid".into()));
    }
    let capacity = f.derivative_capacity();
    if k_max > capacity {
        return Err(Error::Order { requested: k_max, capacity });
    }
    let mut psi = vec![f.clone(), g.clone()];
    psi.truncate(k_max + 1);
    for k in 2..=k_max {
        let m = k - 2;
        // U carries psi_j / j!, U_t carries psi_{j+1} / j!, U_r differentiates U
        let u: Jet = (0..=m).map(|j| psi[j].scaled(1.0 / factorial(j)).values).collect();
        let ut: Jet = (0..=m).map(|j| psi[j + 1].scaled(1.0 / factorial(j)).values).collect();
        let ur: Jet = (0..=m).map(|j| psi[j].derivative(1).scaled(1.0 / factorial(j)).values).collect();
        let lap = psi[m].laplacian();
        let values = if nl.is_zero() {
            lap.values
        } else {
            let nk = nonlinear_coefficient(nl, f, &u, &ut, &ur, m);
            let fm = factorial(m);
            lap.values.iter().zip(&nk).map(|(a, b)| a + fm * b).collect()
        };
        psi.push(f.with_values(values));
    }
    Ok(CompatibilityJet { psi })
}

/// Parameters of the numerical reference in [`verify_jet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Spacing of the time samples used to difference the reference solution.
    pub sample_dt: f64,
    /// Internal integrator step as a fraction of `dr`.
    pub step_fraction: f64,
    /// Samples beyond the minimum `k + 1` in each one-sided stencil.
    pub extra_samples: usize,
    /// Nodes dropped at each end of the grid before comparing.
    pub margin: usize,
    /// Highest order compared.
    pub max_order: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { sample_dt: 5e-3, step_fraction: 0.25, extra_samples: 6, margin: 20, max_order: 4 }
    }
}

/// Method-of-lines right-hand side `(u, v) -> (v, Lap u + N(u, v, u_r))`.
fn mol_rhs(grid: &RadialProfile, nl: &NonlinearitySpec, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = grid.with_values(u.to_vec());
    let lap = p.laplacian();
    let ur = p.derivative(1);
    let acc = (0..u.len()).map(|i| lap.values[i] + nl.eval(grid.r(i), u[i], v[i], ur.values[i])).collect();
    (v.to_vec(), acc)
}

fn rk4_step(grid: &RadialProfile, nl: &NonlinearitySpec, u: &mut Vec<f64>, v: &mut Vec<f64>, dt: f64) {
    let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| p + a * q).collect() };
    let (k1u, k1v) = mol_rhs(grid, nl, u, v);
    let (k2u, k2v) = mol_rhs(grid, nl, &axpy(u, 0.5 * dt, &k1u), &axpy(v, 0.5 * dt, &k1v));
    let (k3u, k3v) = mol_rhs(grid, nl, &axpy(u, 0.5 * dt, &k2u), &axpy(v, 0.5 * dt, &k2v));
    let (k4u, k4v) = mol_rhs(grid, nl, &axpy(u, dt, &k3u), &axpy(v, dt, &k3v));
    for i in 0..u.len() {
        u[i] += dt / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
        v[i] += dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
    }
}

/// Relative `L^2` discrepancy between `psi_k` and a numerical estimate of
/// `d_t^k u(0)` for `k <= min(K, max_order)`.
///
/// The reference integrates the same semi-discrete system with classical
/// Runge-Kutta and differentiates the time samples with one-sided
/// high-order stencils. Orders 0 and 1 are compared with the data itself.
/// When `psi_k` vanishes the discrepancy is measured against the largest
/// lower-order norm instead.
pub fn verify_jet(
    jet: &CompatibilityJet,
    f: &RadialProfile,
    g: &RadialProfile,
    nl: &NonlinearitySpec,
    opts: &VerifyOptions,
) -> Result<Vec<f64>> {
    if !(opts.sample_dt > 0.0 && opts.step_fraction > 0.0) {
        return Err(Error::Config("sample spacing and step fraction must be positive".into()));
    }
    let top = jet.order().min(opts.max_order);
    let n = f.len();
    if 2 * opts.margin >= n {
        return Err(Error::Config("comparison margin leaves no nodes".into()));
    }
    let window = opts.margin..n - opts.margin;
    let norm = |x: &[f64]| x[window.clone()].iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = vec![norm(&diff(&jet.psi[0].values, &f.values))];
    if top >= 1 {
        out.push(norm(&diff(&jet.psi[1].values, &g.values)));
    }
    if top < 2 {
        return Ok(out);
    }
    let samples = top + 1 + opts.extra_samples;
    let substeps = (opts.sample_dt / (opts.step_fraction * f.dr)).ceil().max(1.0) as usize;
    let h = opts.sample_dt / substeps as f64;
    let mut u = f.values.clone();
    let mut v = g.values.clone();
    let mut history = vec![u.clone()];
    for _ in 1..samples {
        for _ in 0..substeps {
            rk4_step(f, nl, &mut u, &mut v, h);
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Stability("reference integration produced non-finite values".into()));
        }
        history.push(u.clone());
    }
    let nodes: Vec<f64> = (0..samples).map(|s| s as f64 * opts.sample_dt).collect();
    let mut lower: f64 = norm(&jet.psi[0].values).max(norm(&jet.psi[1].values));
    for k in 2..=top {
        let w = fornberg_weights(0.0, &nodes, k);
        let estimate: Vec<f64> = (0..n).map(|i| w.iter().zip(&history).map(|(wk, h)| wk * h[i]).sum()).collect();
        let exact = norm(&jet.psi[k].values);
        let err = norm(&diff(&estimate, &jet.psi[k].values));
        let scale = if exact > 0.0 { exact } else { lower };
        out.push(if scale > 0.0 { err / scale } else { err });
        lower = lower.max(exact);
    }
    Ok(out)
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Boundary check of one jet order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderCheck {
    pub order: usize,
    pub boundary_value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    pub orders: Vec<OrderCheck>,
    pub tol: f64,
    pub pass: bool,
    /// First order that fails, if any.
    pub first_failure: Option<usize>,
}

/// Default tolerance: `1e-8` times the largest `|psi_j|`, `j <= s`.
pub fn default_tolerance(jet: &CompatibilityJet, s: usize) -> f64 {
    1e-8 * jet.psi.iter().take(s + 1).map(RadialProfile::max_abs).fold(0.0, f64::max)
}

/// Whether `psi_j(r_b) = 0` for every `j <= s` within `tol` (default
/// [`default_tolerance`]).
pub fn check_compatibility(jet: &CompatibilityJet, obs: &ObstacleSpec, s: usize, tol: Option<f64>) -> Result<CompatibilityReport> {
    if s > jet.order() {
        return Err(Error::Order { requested: s, capacity: jet.order() });
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(jet, s));
    let orders: Vec<OrderCheck> = (0..=s)
        .map(|j| {
            let boundary_value = jet.psi[j].value_at(obs.radius());
            OrderCheck { order: j, boundary_value, pass: boundary_value.abs() <= tol }
        })
        .collect();
    let first_failure = orders.iter().find(|o| !o.pass).map(|o| o.order);
    Ok(CompatibilityReport { pass: first_failure.is_none(), orders, tol, first_failure })
}

#[cfg(test)]
mod tests {
    use super::*;

    const RB: f64 = 0.2;

    fn grid_n(dr: f64, r1: f64) -> usize {
        ((r1 - RB) / dr).round() as usize + 1
    }

    fn bump() -> GaussianBump {
        GaussianBump { center: 1.5, width: 0.25, amplitude: 1.0 }
    }

    #[test]
    fn linear_jet_closed_forms() {
        let dr = 2e-3;
        let n = grid_n(dr, 3.5);
        let f = RadialProfile::from_fn(RB, dr, n, |_| 0.0).unwrap();
        let g = bump().profile(RB, dr, n).unwrap();
        let jet = compute_jet(&f, &g, &NonlinearitySpec::zero(), 3).unwrap();
        assert_eq!(jet.psi[0], f);
        assert_eq!(jet.psi[1], g);
        assert!(jet.psi[2].max_abs() == 0.0);
        // g'' + (2/r) g' in closed form
        let b = bump();
        for i in (0..n).step_by(37) {
            let r = f.r(i);
            let z = (r - b.center) / b.width;
            let g1 = -2.0 * z / b.width * b.eval(r);
            let g2 = (4.0 * z * z - 2.0) / (b.width * b.width) * b.eval(r);
            assert!((jet.psi[3].values()[i] - (g2 + 2.0 / r * g1)).abs() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn dt_squared_jet_matches_hand_chain_rule() {
        let dr = 2e-3;
        let n = grid_n(dr, 3.5);
        let b = bump();
        let f = RadialProfile::from_fn(RB, dr, n, |r| 0.5 * b.eval(r)).unwrap();
        let g = b.profile(RB, dr, n).unwrap();
        let jet = compute_jet(&f, &g, &NonlinearitySpec::dt_squared(), 3).unwrap();
        let lf = f.laplacian();
        let gg: Vec<f64> = g.values().iter().map(|x| x * x).collect();
        let psi2: Vec<f64> = lf.values().iter().zip(&gg).map(|(a, b)| a + b).collect();
        let lg = g.laplacian();
        for i in 0..n {
            assert!((jet.psi[2].values()[i] - psi2[i]).abs() < 1e-12);
            let psi3 = lg.values()[i] + 2.0 * g.values()[i] * psi2[i];
            assert!((jet.psi[3].values()[i] - psi3).abs() < 1e-10);
        }
    }

    #[test]
    fn jet_is_local_and_linear() {
        let dr = 5e-3;
        let n = grid_n(dr, 4.0);
        let a = GaussianBump { center: 2.0, width: 0.2, amplitude: 1.0 };
        // compactly supported data on [1.4, 2.6]
        let cbump = |r: f64| {
            let x = (r - 2.0) / 0.6;
            if x.abs() < 1.0 { (-1.0 / (1.0 - x * x)).exp() } else { 0.0 }
        };
        let f = RadialProfile::from_fn(RB, dr, n, cbump).unwrap();
        let g = RadialProfile::from_fn(RB, dr, n, |r| 0.5 * cbump(r)).unwrap();
        let jet = compute_jet(&f, &g, &NonlinearitySpec::q0_radial(), 6).unwrap();
        for (k, p) in jet.psi.iter().enumerate() {
            // each application of the Laplacian widens the support by one stencil
            let reach = 1.4 - (k as f64 + 1.0) * 3.0 * dr;
            for i in 0..n {
                if f.r(i) < reach {
                    assert_eq!(p.values()[i], 0.0, "psi_{k} at r = {}", f.r(i));
                }
            }
        }

        // linearity on a coarser grid, where difference roundoff stays small
        let dr = 1e-2;
        let n = grid_n(dr, 4.0);
        let f = RadialProfile::from_fn(RB, dr, n, cbump).unwrap();
        let g = f.scaled(0.5);
        let f2 = a.profile(RB, dr, n).unwrap();
        let g2 = f2.scaled(-0.3);
        let lin = NonlinearitySpec::zero();
        let sum = compute_jet(&f.add(&f2), &g.add(&g2), &lin, 5).unwrap();
        let j1 = compute_jet(&f, &g, &lin, 5).unwrap();
        let j2 = compute_jet(&f2, &g2, &lin, 5).unwrap();
        for k in 0..=5 {
            for i in 0..n {
                let d = sum.psi[k].values()[i] - j1.psi[k].values()[i] - j2.psi[k].values()[i];
                let scale = 1.0 + sum.psi[k].max_abs();
                // difference roundoff grows like dr^{-2k}
                let tol = if k <= 3 { 1e-12 } else { 1e-10 };
                assert!(d.abs() <= tol * scale, "order {k}: {d} vs {scale}");
            }
        }
    }

    #[test]
    fn order_errors() {
        let f = RadialProfile::from_fn(RB, 0.1, 20, |_| 0.0).unwrap();
        assert!(matches!(
            compute_jet(&f, &f, &NonlinearitySpec::zero(), 5),
            Err(Error::Order { requested: 5, capacity: 3 })
        ));
        let big = RadialProfile::from_fn(RB, 0.01, 400, |_| 0.0).unwrap();
        assert!(matches!(compute_jet(&big, &big, &NonlinearitySpec::zero(), 7), Err(Error::Order { .. })));
    }

    #[test]
    fn verify_linear_and_null_jets() {
        let dr = 1e-2;
        let n = grid_n(dr, 3.5);
        let b = bump();
        let f = RadialProfile::from_fn(RB, dr, n, |r| 0.5 * b.eval(r)).unwrap();
        let g = b.profile(RB, dr, n).unwrap();
        let lin = NonlinearitySpec::zero();
        let jet = compute_jet(&f, &g, &lin, 4).unwrap();
        let errs = verify_jet(&jet, &f, &g, &lin, &VerifyOptions::default()).unwrap();
        assert_eq!(errs.len(), 5);
        for (k, e) in errs.iter().enumerate().take(4) {
            assert!(*e < 1e-6, "linear order {k}: {e}");
        }

        let q0 = NonlinearitySpec::q0_radial();
        let (fs, gs) = (f.scaled(0.5), g.scaled(0.5));
        let jet = compute_jet(&fs, &gs, &q0, 4).unwrap();
        let errs = verify_jet(&jet, &fs, &gs, &q0, &VerifyOptions::default()).unwrap();
        for (k, e) in errs.iter().enumerate() {
            assert!(*e < 1e-3, "q0 order {k}: {e}");
        }
    }

    #[test]
    fn first_order_jet_verifies_exactly() {
        let f = bump().profile(RB, 1e-2, 300).unwrap();
        let g = f.scaled(2.0);
        let jet = compute_jet(&f, &g, &NonlinearitySpec::q0_radial(), 1).unwrap();
        let errs = verify_jet(&jet, &f, &g, &NonlinearitySpec::q0_radial(), &VerifyOptions::default()).unwrap();
        assert_eq!(errs, vec![0.0, 0.0]);
    }

    #[test]
    fn compatibility_examples() {
        let obs = ObstacleSpec::sphere(RB).unwrap();
        let dr = 2e-3;
        let n = grid_n(dr, 3.5);
        let f = bump().profile(RB, dr, n).unwrap();
        let zero = f.zeros_like();
        let jet = compute_jet(&zero, &f, &NonlinearitySpec::q0_radial(), 4).unwrap();
        let rep = check_compatibility(&jet, &obs, 4, None).unwrap();
        assert!(rep.pass, "{rep:?}");

        // f = (r - r_b) * bump: psi_2(r_b) = f''(r_b) + (2 / r_b) f'(r_b)
        let wide = GaussianBump { center: 0.6, width: 0.4, amplitude: 1.0 };
        let f = RadialProfile::from_fn(RB, dr, n, |r| (r - RB) * wide.eval(r)).unwrap();
        let jet = compute_jet(&f, &zero, &NonlinearitySpec::zero(), 3).unwrap();
        let rep = check_compatibility(&jet, &obs, 3, None).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.first_failure, Some(2));
        assert!(rep.orders[0].pass && rep.orders[1].pass);
        let z = (RB - wide.center) / wide.width;
        let b0 = wide.eval(RB);
        let b1 = -2.0 * z / wide.width * b0;
        let fp = b0; // (r - r_b) vanishes at r_b
        let fpp = 2.0 * b1;
        let expect = fpp + 2.0 / RB * fp;
        assert!((rep.orders[2].boundary_value - expect).abs() < 1e-6 * expect.abs());

        // loosening the tolerance never turns a pass into a failure
        let mut prev = false;
        for tol in [1e-12, 1e-6, 1e-2, 1.0, 1e3] {
            let p = check_compatibility(&jet, &obs, 3, Some(tol)).unwrap().pass;
            assert!(!prev || p);
            prev = p;
        }
        assert!(check_compatibility(&jet, &obs, 4, None).is_err());
    }

    #[test]
    fn interpolation_is_cubic() {
        let p = RadialProfile::from_fn(1.0, 0.1, 12, |r| r * r * r - r).unwrap();
        for x in [1.0, 1.03, 1.55, 2.09, 0.95] {
            assert!((p.value_at(x) - (x * x * x - x)).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn builtins_vanish_to_second_order() {
        for name in ["zero", "q0_radial", "dt_squared"] {
            let nl = NonlinearitySpec::builtin(name).unwrap();
            assert!(nl.vanishes_to_second_order());
            assert_eq!(nl.eval(1.0, 0.0, 0.0, 0.0), 0.0);
        }
        assert!(NonlinearitySpec::builtin("cube").is_none());
        let quartic = Monomial { coef: RadialCoefficient::constant(1.0), powers: [2, 2, 0] };
        assert!(NonlinearitySpec::new(vec![quartic]).is_err());
    }
}
