//! Null-condition classification of quadratic and cubic symbols.
//!
//! A quadratic slice `s^{jk}` vanishes on the light cone iff its symmetric part
//! is a multiple of the Minkowski metric; the antisymmetric part is a sum of
//! the forms `q_ij` and never contributes. A symmetric cubic symbol vanishes on
//! the cone iff it is the quadric `xi_0^2 - |xi'|^2` times a linear form.
//!
//! Both checks are closed-form linear algebra and run over `f64` or over exact
//! rationals ([`num_rational::Ratio<i64>`]).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{conformal_factor_stable, frame_at_einstein, EinsteinEvent};
use crate::{Error, Result};

/// Verdict tolerance on the residual for floating-point forms.
pub const FLOAT_TOL: f64 = 1e-10;

/// Minkowski signature `diag(1, -1, -1, -1)`.
pub const ETA: [i64; 4] = [1, -1, -1, -1];

/// Coefficient field of a form.
pub trait Scalar: Clone + Debug + PartialEq + Num + Signed + FromPrimitive + ToPrimitive {
    /// Whether a squared residual counts as zero.
    fn negligible(residual_sq: &Self) -> bool;

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("small integers are representable")
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn negligible(residual_sq: &Self) -> bool {
        residual_sq.sqrt() < FLOAT_TOL
    }
}

impl Scalar for Ratio<i64> {
    fn negligible(residual_sq: &Self) -> bool {
        residual_sq.is_zero()
    }
}

/// Quadratic semilinear nonlinearity `s^{I,j,k}_{J,K} d_j u^J d_k u^K`.
///
/// Component indices are zero-based here; text formats are one-based.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFormSpec<S> {
    n: usize,
    s: Vec<S>,
}

impl<S: Scalar> QuadraticFormSpec<S> {
    pub fn zeros(n_components: usize) -> Self {
        assert!(n_components > 0, "at least one component");
        Self { n: n_components, s: vec![S::zero(); n_components.pow(3) * 16] }
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    fn index(&self, comp: [usize; 3], j: usize, k: usize) -> usize {
        let n = self.n;
        assert!(comp.iter().all(|&c| c < n) && j < 4 && k < 4, "form index out of bounds");
        (((comp[0] * n + comp[1]) * n + comp[2]) * 4 + j) * 4 + k
    }

    /// Coefficient `s^{I,j,k}_{J,K}` with `comp = [I, J, K]`.
    pub fn get(&self, comp: [usize; 3], j: usize, k: usize) -> &S {
        &self.s[self.index(comp, j, k)]
    }

    pub fn set(&mut self, comp: [usize; 3], j: usize, k: usize, value: S) {
        let i = self.index(comp, j, k);
        self.s[i] = value;
    }

    pub fn add(&mut self, comp: [usize; 3], j: usize, k: usize, value: S) {
        let i = self.index(comp, j, k);
        self.s[i] = self.s[i].clone() + value;
    }

    /// The 4x4 block for fixed `[I, J, K]`.
    pub fn slice(&self, comp: [usize; 3]) -> [[S; 4]; 4] {
        core::array::from_fn(|j| core::array::from_fn(|k| self.get(comp, j, k).clone()))
    }

    pub fn scaled(&self, mu: &S) -> Self {
        Self { n: self.n, s: self.s.iter().map(|x| x.clone() * mu.clone()).collect() }
    }

    /// `q_0(du, du)` for one component.
    pub fn q0() -> Self {
        let mut q = Self::zeros(1);
        for (j, &e) in ETA.iter().enumerate() {
            q.set([0; 3], j, j, S::from_int(e));
        }
        q
    }

    /// `q_ij(du, du) = d_i u d_j u - d_j u d_i u` for one component.
    pub fn q_ij(i: usize, j: usize) -> Self {
        assert!(i != j, "q_ij needs distinct indices");
        let mut q = Self::zeros(1);
        q.set([0; 3], i, j, S::one());
        q.set([0; 3], j, i, -S::one());
        q
    }

    /// `(d_t u)^2` for one component.
    pub fn dt_squared() -> Self {
        let mut q = Self::zeros(1);
        q.set([0; 3], 0, 0, S::one());
        q
    }
}

/// Quasilinear cubic symbol `k^{I,i,j,k}_J d_i u^J d_j d_k u^I`; `comp = [I, J]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicFormSpec<S> {
    n: usize,
    k: Vec<S>,
}

impl<S: Scalar> CubicFormSpec<S> {
    pub fn zeros(n_components: usize) -> Self {
        assert!(n_components > 0, "at least one component");
        Self { n: n_components, k: vec![S::zero(); n_components.pow(2) * 64] }
    }

    pub fn n_components(&self) -> usize {
        self.n
    }

    fn index(&self, comp: [usize; 2], i: usize, j: usize, k: usize) -> usize {
        let n = self.n;
        assert!(comp.iter().all(|&c| c < n) && i < 4 && j < 4 && k < 4, "form index out of bounds");
        (((comp[0] * n + comp[1]) * 4 + i) * 4 + j) * 4 + k
    }

    pub fn get(&self, comp: [usize; 2], i: usize, j: usize, k: usize) -> &S {
        &self.k[self.index(comp, i, j, k)]
    }

    pub fn set(&mut self, comp: [usize; 2], i: usize, j: usize, k: usize, value: S) {
        let idx = self.index(comp, i, j, k);
        self.k[idx] = value;
    }

    pub fn add(&mut self, comp: [usize; 2], i: usize, j: usize, k: usize, value: S) {
        let idx = self.index(comp, i, j, k);
        self.k[idx] = self.k[idx].clone() + value;
    }

    pub fn scaled(&self, mu: &S) -> Self {
        Self { n: self.n, k: self.k.iter().map(|x| x.clone() * mu.clone()).collect() }
    }

    /// Symmetrize over the second-derivative pair `(j, k)`.
    pub fn canonicalize(&mut self) {
        let two = S::from_int(2);
        for a in 0..self.n {
            for b in 0..self.n {
                for i in 0..4 {
                    for j in 0..4 {
                        for k in (j + 1)..4 {
                            let avg = (self.get([a, b], i, j, k).clone() + self.get([a, b], i, k, j).clone())
                                / two.clone();
                            self.set([a, b], i, j, k, avg.clone());
                            self.set([a, b], i, k, j, avg);
                        }
                    }
                }
            }
        }
    }

    fn block(&self, comp: [usize; 2]) -> [[[S; 4]; 4]; 4] {
        core::array::from_fn(|i| core::array::from_fn(|j| core::array::from_fn(|k| self.get(comp, i, j, k).clone())))
    }

    /// `q_0(du, d d_m u)` for one component.
    pub fn q0_derivative(m: usize) -> Self {
        let mut c = Self::zeros(1);
        for (a, &e) in ETA.iter().enumerate() {
            c.set([0, 0], a, a, m, S::from_int(e));
        }
        c.canonicalize();
        c
    }

    /// `d_m u (d_t^2 u - Laplacian u)` for one component.
    pub fn wave_times_derivative(m: usize) -> Self {
        let mut c = Self::zeros(1);
        for (a, &e) in ETA.iter().enumerate() {
            c.set([0, 0], m, a, a, S::from_int(e));
        }
        c
    }

    /// `q_ij(du, d d_m u)`: a non-symmetric symbol that vanishes identically.
    pub fn q_ij_derivative(i: usize, j: usize, m: usize) -> Self {
        let mut c = Self::zeros(1);
        c.set([0, 0], i, j, m, S::one());
        c.set([0, 0], j, i, m, -S::one());
        c.canonicalize();
        c
    }

    /// `d_t u d_t^2 u`.
    pub fn dt_dtt() -> Self {
        let mut c = Self::zeros(1);
        c.set([0, 0], 0, 0, 0, S::one());
        c
    }
}

/// Decomposition of one slice of a form.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceDecomposition<S> {
    /// Component indices: `[I, J, K]` for quadratic, `[I, J]` for cubic forms.
    pub components: Vec<usize>,
    /// Coefficient of `q_0` (quadratic only; zero for cubic slices).
    pub lambda: S,
    /// Antisymmetric part; `antisym[i][j]` is the coefficient of `q_ij` for `i < j`.
    pub antisym: [[S; 4]; 4],
    /// Cubic only: `l(xi) = sum_m c_m xi_m` with symbol `(xi_0^2 - |xi'|^2) l(xi)`.
    pub linear_factor: [S; 4],
    /// Cubic only: Frobenius norm of the part of the tensor removed by full
    /// symmetrization. Its symbol vanishes identically ("trivially null").
    pub trivially_null: f64,
    /// Squared defect in the coefficient field.
    pub residual_sq: S,
    /// Frobenius norm of the defect.
    pub residual: f64,
    pub null: bool,
}

/// Per-slice decompositions of a whole form.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDecomposition<S> {
    pub slices: Vec<SliceDecomposition<S>>,
    /// Largest residual over all slices.
    pub residual: f64,
}

impl<S: Scalar> NullDecomposition<S> {
    fn collect(slices: Vec<SliceDecomposition<S>>) -> (bool, Self) {
        let verdict = slices.iter().all(|s| s.null);
        let residual = slices.iter().map(|s| s.residual).fold(0.0, f64::max);
        (verdict, Self { slices, residual })
    }
}

fn zero4<S: Scalar>() -> [S; 4] {
    core::array::from_fn(|_| S::zero())
}

fn zero44<S: Scalar>() -> [[S; 4]; 4] {
    core::array::from_fn(|_| zero4())
}

fn residual_norm<S: Scalar>(sq: &S) -> f64 {
    sq.as_f64().max(0.0).sqrt()
}

/// Split one quadratic slice into `lambda * eta`, the `q_ij` part, and a defect.
pub fn decompose_quadratic_slice<S: Scalar>(s: &[[S; 4]; 4]) -> (S, [[S; 4]; 4], S) {
    let two = S::from_int(2);
    let mut sym = zero44::<S>();
    let mut anti = zero44::<S>();
    for j in 0..4 {
        for k in 0..4 {
            sym[j][k] = (s[j][k].clone() + s[k][j].clone()) / two.clone();
            anti[j][k] = (s[j][k].clone() - s[k][j].clone()) / two.clone();
        }
    }
    let mut lambda = S::zero();
    for (j, &e) in ETA.iter().enumerate() {
        lambda = lambda + sym[j][j].clone() * S::from_int(e);
    }
    lambda = lambda / S::from_int(4);
    let mut sq = S::zero();
    for j in 0..4 {
        for k in 0..4 {
            let fit = if j == k { lambda.clone() * S::from_int(ETA[j]) } else { S::zero() };
            let d = sym[j][k].clone() - fit;
            sq = sq + d.clone() * d;
        }
    }
    (lambda, anti, sq)
}

/// Null-condition check for a quadratic semilinear form.
pub fn check_null_semilinear<S: Scalar>(q: &QuadraticFormSpec<S>) -> (bool, NullDecomposition<S>) {
    let n = q.n;
    let mut slices = Vec::with_capacity(n * n * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let (lambda, antisym, residual_sq) = decompose_quadratic_slice(&q.slice([a, b, c]));
                slices.push(SliceDecomposition {
                    components: vec![a, b, c],
                    lambda,
                    antisym,
                    linear_factor: zero4(),
                    trivially_null: 0.0,
                    residual: residual_norm(&residual_sq),
                    null: S::negligible(&residual_sq),
                    residual_sq,
                });
            }
        }
    }
    NullDecomposition::collect(slices)
}

/// Sorted index triple of a symmetric cubic monomial, packed as `16 i + 4 j + k`.
fn monomial_key(mut t: [usize; 3]) -> usize {
    t.sort_unstable();
    16 * t[0] + 4 * t[1] + t[2]
}

/// Coefficients of the cubic polynomial `sum k^{ijk} xi_i xi_j xi_k`, keyed by
/// [`monomial_key`] (64 slots, 20 used).
pub fn cubic_monomials<S: Scalar>(k: &[[[S; 4]; 4]; 4]) -> Vec<S> {
    let mut out = vec![S::zero(); 64];
    for i in 0..4 {
        for j in 0..4 {
            for l in 0..4 {
                let key = monomial_key([i, j, l]);
                out[key] = out[key].clone() + k[i][j][l].clone();
            }
        }
    }
    out
}

/// Monomial coefficients of `(xi_0^2 - |xi'|^2) l(xi)`.
pub fn quadric_times_linear<S: Scalar>(l: &[S; 4]) -> Vec<S> {
    let mut out = vec![S::zero(); 64];
    for (m, c) in l.iter().enumerate() {
        for (n, &e) in ETA.iter().enumerate() {
            let key = monomial_key([n, n, m]);
            out[key] = out[key].clone() + c.clone() * S::from_int(e);
        }
    }
    out
}

/// Split one cubic slice into the quadric times a linear form, a trivially
/// null remainder, and a defect.
pub fn decompose_cubic_slice<S: Scalar>(k: &[[[S; 4]; 4]; 4]) -> ([S; 4], f64, S) {
    let six = S::from_int(6);
    let mut remainder_sq = S::zero();
    for i in 0..4 {
        for j in 0..4 {
            for l in 0..4 {
                let sym = (k[i][j][l].clone()
                    + k[i][l][j].clone()
                    + k[j][i][l].clone()
                    + k[j][l][i].clone()
                    + k[l][i][j].clone()
                    + k[l][j][i].clone())
                    / six.clone();
                let d = k[i][j][l].clone() - sym;
                remainder_sq = remainder_sq + d.clone() * d;
            }
        }
    }
    let p = cubic_monomials(k);
    // the products (quadric) * xi_m have disjoint monomial supports of four
    // terms each, so the normal equations are diagonal
    let l: [S; 4] = core::array::from_fn(|m| {
        let mut acc = S::zero();
        for (n, &e) in ETA.iter().enumerate() {
            acc = acc + p[monomial_key([n, n, m])].clone() * S::from_int(e);
        }
        acc / S::from_int(4)
    });
    let fit = quadric_times_linear(&l);
    let mut sq = S::zero();
    for (a, b) in p.iter().zip(&fit) {
        let d = a.clone() - b.clone();
        sq = sq + d.clone() * d;
    }
    (l, residual_norm(&remainder_sq), sq)
}

/// Null-condition check for a quasilinear cubic symbol.
pub fn check_null_quasilinear<S: Scalar>(q: &CubicFormSpec<S>) -> (bool, NullDecomposition<S>) {
    let n = q.n;
    let mut slices = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let (linear_factor, trivially_null, residual_sq) = decompose_cubic_slice(&q.block([a, b]));
            slices.push(SliceDecomposition {
                components: vec![a, b],
                lambda: S::zero(),
                antisym: zero44(),
                linear_factor,
                trivially_null,
                residual: residual_norm(&residual_sq),
                null: S::negligible(&residual_sq),
                residual_sq,
            });
        }
    }
    NullDecomposition::collect(slices)
}

/// A form whose symbol can be evaluated at a covector.
pub trait ConeSymbol {
    /// Largest absolute symbol value over all slices at `xi`.
    fn max_symbol(&self, xi: &[f64; 4]) -> f64;
}

impl<S: Scalar> ConeSymbol for QuadraticFormSpec<S> {
    fn max_symbol(&self, xi: &[f64; 4]) -> f64 {
        let mut best: f64 = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                for c in 0..self.n {
                    let mut v = 0.0;
                    for j in 0..4 {
                        for k in 0..4 {
                            v += self.get([a, b, c], j, k).as_f64() * xi[j] * xi[k];
                        }
                    }
                    best = best.max(v.abs());
                }
            }
        }
        best
    }
}

impl<S: Scalar> ConeSymbol for CubicFormSpec<S> {
    fn max_symbol(&self, xi: &[f64; 4]) -> f64 {
        let mut best: f64 = 0.0;
        for a in 0..self.n {
            for b in 0..self.n {
                let mut v = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        for k in 0..4 {
                            v += self.get([a, b], i, j, k).as_f64() * xi[i] * xi[j] * xi[k];
                        }
                    }
                }
                best = best.max(v.abs());
            }
        }
        best
    }
}

/// A random null form `lambda q_0 + sum c_ij q_ij` plus a perturbation of
/// size `eps` in every coefficient.
pub fn random_quadratic(rng: &mut ChaCha8Rng, eps: f64) -> QuadraticFormSpec<f64> {
    let mut q = QuadraticFormSpec::<f64>::zeros(1);
    let lambda: f64 = rng.gen_range(-2.0..2.0);
    for (j, &e) in ETA.iter().enumerate() {
        q.add([0; 3], j, j, lambda * e as f64);
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            let c: f64 = rng.gen_range(-2.0..2.0);
            q.add([0; 3], i, j, c);
            q.add([0; 3], j, i, -c);
        }
    }
    for j in 0..4 {
        for k in 0..4 {
            q.add([0; 3], j, k, eps * rng.gen_range(-1.0..1.0));
        }
    }
    q
}

/// Brute-force check: the largest `|symbol|` over `n` random null covectors
/// `(+-1, omega)` with `omega` uniform on the unit sphere.
pub fn cone_sample_oracle<F: ConeSymbol + ?Sized>(form: &F, n: usize, seed: u64) -> f64 {
    assert!(n >= 1, "need at least one sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..n {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let xi = [sign, rho * phi.cos(), rho * phi.sin(), z];
        best = best.max(form.max_symbol(&xi));
    }
    best
}

/// Deterministic search for a null covector where the symbol is large:
/// axis and face-diagonal directions, first maximum wins.
pub fn cone_witness<F: ConeSymbol + ?Sized>(form: &F) -> ([f64; 4], f64) {
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut candidates: Vec<[f64; 4]> = Vec::new();
    for axis in 1..4 {
        for s in [1.0, -1.0] {
            let mut xi = [1.0, 0.0, 0.0, 0.0];
            xi[axis] = s;
            candidates.push(xi);
        }
    }
    for a in 1..4 {
        for b in (a + 1)..4 {
            for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut xi = [1.0, 0.0, 0.0, 0.0];
                xi[a] = sa * h;
                xi[b] = sb * h;
                candidates.push(xi);
            }
        }
    }
    let mut best = (candidates[0], form.max_symbol(&candidates[0]));
    for xi in &candidates[1..] {
        let v = form.max_symbol(xi);
        if v > best.1 {
            best = (*xi, v);
        }
    }
    best
}

/// Coefficients of the radial bilinear form `Omega^{-3} q_0(d(Omega u), d(Omega v))`
/// written in cylinder derivatives:
///
/// `sum a[p][q] d_p u d_q v + sum b1[p] v d_p u + sum b2[q] u d_q v + c u v`
/// with `p, q` ranging over `(T, R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearCoeffs {
    pub a: [[f64; 2]; 2],
    pub b1: [f64; 2],
    pub b2: [f64; 2],
    pub c: f64,
}

impl BilinearCoeffs {
    pub fn a_max(&self) -> f64 {
        self.a.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Evaluate the form on first jets `(f, f_T, f_R)`.
    pub fn apply(&self, u: [f64; 3], v: [f64; 3]) -> f64 {
        let mut acc = self.c * u[0] * v[0];
        for p in 0..2 {
            acc += self.b1[p] * v[0] * u[1 + p] + self.b2[p] * u[0] * v[1 + p];
            for q in 0..2 {
                acc += self.a[p][q] * u[1 + p] * v[1 + q];
            }
        }
        acc
    }
}

/// Chain-rule assembly of the conformally transformed `q_0` at a cylinder event.
pub fn transformed_q0_coefficients(ev: &EinsteinEvent) -> Result<BilinearCoeffs> {
    if !ev.in_diamond() {
        return Err(Error::Domain("event lies outside the diamond".into()));
    }
    let frame = frame_at_einstein(ev)?;
    let omega = conformal_factor_stable(ev.time, ev.polar);
    let j = frame.jac;
    let g = frame.omega_grad;
    let eta = [1.0, -1.0];
    let mut a = [[0.0; 2]; 2];
    let mut b = [0.0; 2];
    let mut c = 0.0;
    for al in 0..2 {
        for p in 0..2 {
            for q in 0..2 {
                a[p][q] += eta[al] * j[al][p] * j[al][q] / omega;
            }
            b[p] += eta[al] * g[al] * j[al][p] / (omega * omega);
        }
        c += eta[al] * g[al] * g[al] / (omega * omega * omega);
    }
    Ok(BilinearCoeffs { a, b1: b, b2: b, c })
}
