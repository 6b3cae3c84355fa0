//! Jump kernels of symmetric, space-homogeneous, irreducible random walks
//! on `Z^d` and their Fourier symbols.
//!
//! A kernel is either finite-range (an explicit map `z -> a(z)` with finite
//! support) or heavy-tailed, `a(z) = scale * H(z/|z|) / |z|^(d+alpha)` with
//! `alpha` in `(0, 2)`. In both cases the diagonal rate is recomputed as
//! `a(0) = -sum_{z != 0} a(z)`, so the kernel is conservative by
//! construction. The symbol is
//! `phi(theta) = sum_{z != 0} a(z) (cos(theta . z) - 1)`,
//! which is nonpositive and vanishes only at `theta = 0`.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

/// Lattice points are integer coordinate vectors of length `d`.
pub type LatticePoint = Vec<i64>;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("kernel support is empty")]
    EmptyKernel,
    #[error("kernel support does not generate Z^d (lattice index {index})")]
    NotIrreducible { index: i128 },
    #[error("nonpositive rate {rate} at {point:?}")]
    NegativeRate { point: LatticePoint, rate: f64 },
    #[error("support vector has wrong dimension: {point:?} in d={d}")]
    DimensionMismatch { point: LatticePoint, d: usize },
    #[error("support contains the zero vector")]
    ZeroSupportVector,
    #[error("tail exponent alpha={0} outside (0, 2)")]
    AlphaOutOfRange(f64),
    #[error("angular function must be positive on the sphere (got {value} at {dir:?})")]
    NonPositiveAngular { dir: Vec<f64>, value: f64 },
    #[error("angular function must be symmetric: H({dir:?}) = {value} but H(-s) = {opposite}")]
    AsymmetricAngular {
        dir: Vec<f64>,
        value: f64,
        opposite: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("branching rates invalid: {0}")]
    InvalidBranching(String),
}

/// Angular part `H(.)` of a heavy-tail kernel on the unit sphere.
#[derive(Clone)]
pub enum Angular {
    /// `H == 1`.
    Isotropic,
    /// User-supplied symmetric positive function of the unit direction.
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Angular {
    pub fn eval(&self, dir: &[f64]) -> f64 {
        match self {
            Angular::Isotropic => 1.0,
            Angular::Custom(f) => f(dir),
        }
    }
}

impl std::fmt::Debug for Angular {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Angular::Isotropic => write!(f, "Isotropic"),
            Angular::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Walk classification by finiteness of `G_0 = G_0(0,0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recurrence {
    G0Finite,
    G0Infinite,
}

/// Tabulated tail integral `M(w) = int_w^inf u^(-1-alpha) (1 - cos u) du`.
///
/// `M(0)` has the closed form `pi / (2 Gamma(1+alpha) sin(pi alpha / 2))`;
/// for moderate `w` the table is filled by cumulative Simpson integration,
/// and for large `w` a three-term integration-by-parts expansion is used.
#[derive(Debug, Clone)]
struct TailIntegral {
    alpha: f64,
    m0: f64,
    /// `M(w)` on the uniform grid `w in [W_SERIES, W_ASYM]`.
    table: Vec<f64>,
    step: f64,
}

const W_SERIES: f64 = 2.0;
const W_ASYM: f64 = 60.0;

impl TailIntegral {
    fn new(alpha: f64) -> Self {
        let m0 = std::f64::consts::PI
            / (2.0 * statrs::function::gamma::gamma(1.0 + alpha) * (std::f64::consts::PI * alpha / 2.0).sin());
        let step = 0.005f64;
        let n = ((W_ASYM - W_SERIES) / step).round() as usize + 1;
        let mut table = Vec::with_capacity(n);
        // m(w) = int_0^w u^(-1-alpha) (1 - cos u) du, continued by Simpson steps.
        let mut m = Self::small_series(alpha, W_SERIES);
        table.push(m0 - m);
        let f = |u: f64| (1.0 - u.cos()) * u.powf(-1.0 - alpha);
        for i in 1..n {
            let a = W_SERIES + (i - 1) as f64 * step;
            let b = a + step;
            m += step / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
            table.push(m0 - m);
        }
        TailIntegral {
            alpha,
            m0,
            table,
            step,
        }
    }

    /// Convergent series for `int_0^w u^(-1-alpha)(1-cos u) du`, `w <= 2`.
    fn small_series(alpha: f64, w: f64) -> f64 {
        let mut sum = 0.0;
        let mut term_pow = w * w; // w^{2k}
        let mut fact = 2.0f64; // (2k)!
        for k in 1..40 {
            let p = 2.0 * k as f64 - alpha;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let term = sign * term_pow * w.powf(-alpha) / (fact * p);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
            term_pow *= w * w;
            fact *= (2.0 * k as f64 + 1.0) * (2.0 * k as f64 + 2.0);
        }
        sum
    }

    fn eval(&self, w: f64) -> f64 {
        let a = self.alpha;
        if w <= 0.0 {
            return self.m0;
        }
        if w <= W_SERIES {
            return self.m0 - Self::small_series(a, w);
        }
        if w < W_ASYM {
            let t = (w - W_SERIES) / self.step;
            let i = (t as usize).min(self.table.len() - 2);
            let frac = t - i as f64;
            return self.table[i] * (1.0 - frac) + self.table[i + 1] * frac;
        }
        // M(w) = w^-a / a - int_w^inf u^(-1-a) cos u du, IBP expansion.
        let (s, c) = (w.sin(), w.cos());
        let cosint = -s * w.powf(-1.0 - a) + (1.0 + a) * c * w.powf(-2.0 - a)
            + (1.0 + a) * (2.0 + a) * s * w.powf(-3.0 - a);
        w.powf(-a) / a - cosint
    }
}

/// Precomputed data for the analytic part of a heavy-tail kernel beyond the
/// truncation radius.
#[derive(Debug, Clone)]
pub(crate) struct TailModel {
    pub alpha: f64,
    /// Effective cut radius `R + 1/2` of the sum/integral split.
    pub reff: f64,
    /// Quadrature directions on `S^(d-1)` with weights `w_j H(s_j) scale`.
    pub directions: Vec<(Vec<f64>, f64)>,
    /// `sum_{|z| > R} a(z)` estimated by the tail integral.
    pub mass: f64,
    integral: TailIntegral,
}

impl TailModel {
    /// Tail contribution `sum_{|z|>R} a(z) (1 - cos(theta . z))`, estimated
    /// by the integral over `|x| > R + 1/2`.
    fn deficit(&self, theta: &[f64]) -> f64 {
        let mut total = 0.0;
        for (dir, w) in &self.directions {
            let q: f64 = dir.iter().zip(theta).map(|(s, t)| s * t).sum::<f64>().abs();
            if q > 0.0 {
                total += w * q.powf(self.alpha) * self.integral.eval(q * self.reff);
            }
        }
        total
    }
}

#[derive(Debug, Clone)]
pub(crate) enum KernelData {
    FiniteRange,
    HeavyTail {
        alpha: f64,
        scale: f64,
        truncation_radius: i64,
        angular: Angular,
        tail: TailModel,
    },
}

/// A validated random-walk jump kernel on `Z^d`.
#[derive(Debug, Clone)]
pub struct WalkSpec {
    d: usize,
    /// Half-space support representatives with combined weights
    /// `a(z) + a(-z)`; the other half is implied by symmetry.
    half_support: Vec<(LatticePoint, f64)>,
    kernel: KernelData,
    a0: f64,
    variance: Option<f64>,
    symmetrized: bool,
}

impl WalkSpec {
    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Diagonal rate `a(0) = -sum_{z != 0} a(z)`.
    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Jump variance `sum |z|^2 a(z)`; `None` means infinite.
    pub fn variance(&self) -> Option<f64> {
        self.variance
    }

    /// True when the finite-range builder had to average `a(z)` and `a(-z)`.
    pub fn was_symmetrized(&self) -> bool {
        self.symmetrized
    }

    pub fn is_heavy_tail(&self) -> bool {
        matches!(self.kernel, KernelData::HeavyTail { .. })
    }

    pub fn alpha(&self) -> Option<f64> {
        match &self.kernel {
            KernelData::HeavyTail { alpha, .. } => Some(*alpha),
            KernelData::FiniteRange => None,
        }
    }

    /// Local exponent `p` of `-phi(theta) ~ |theta|^p` near the origin:
    /// 2 for finite jump variance, `alpha` for heavy tails.
    pub fn local_exponent(&self) -> f64 {
        match &self.kernel {
            KernelData::HeavyTail { alpha, .. } => *alpha,
            KernelData::FiniteRange => 2.0,
        }
    }

    #[cfg(test)]
    pub(crate) fn tail_model(&self) -> Option<&TailModel> {
        match &self.kernel {
            KernelData::HeavyTail { tail, .. } => Some(tail),
            KernelData::FiniteRange => None,
        }
    }

    pub(crate) fn heavy_tail_params(&self) -> Option<(f64, f64, i64, &Angular)> {
        match &self.kernel {
            KernelData::HeavyTail {
                alpha,
                scale,
                truncation_radius,
                angular,
                ..
            } => Some((*alpha, *scale, *truncation_radius, angular)),
            KernelData::FiniteRange => None,
        }
    }

    /// Data for Monte Carlo sampling of the analytic tail: `(alpha, R,
    /// directions)` where jumps beyond radius `R` follow a Pareto radius
    /// along a weighted direction fan.
    pub(crate) fn tail_sampling_data(&self) -> Option<(f64, f64, &[(Vec<f64>, f64)])> {
        match &self.kernel {
            KernelData::HeavyTail {
                alpha,
                truncation_radius,
                tail,
                ..
            } => Some((*alpha, *truncation_radius as f64, &tail.directions)),
            KernelData::FiniteRange => None,
        }
    }

    /// Kernel rate `a(z)` for `z != 0`. For heavy tails this is the exact
    /// power law at any `z`, inside or beyond the truncation radius.
    pub fn rate(&self, z: &[i64]) -> f64 {
        match &self.kernel {
            KernelData::FiniteRange => {
                for (p, w) in &self.half_support {
                    if p.iter().zip(z).all(|(a, b)| a == b)
                        || p.iter().zip(z).all(|(a, b)| *a == -b)
                    {
                        return w / 2.0;
                    }
                }
                0.0
            }
            KernelData::HeavyTail {
                alpha,
                scale,
                angular,
                ..
            } => {
                let r = norm(z);
                if r == 0.0 {
                    return 0.0;
                }
                let dir: Vec<f64> = z.iter().map(|&c| c as f64 / r).collect();
                scale * angular.eval(&dir) / r.powf(self.d as f64 + alpha)
            }
        }
    }

    /// Explicitly enumerated jumps `(z, a(z))` over the full support
    /// (finite-range) or over `0 < |z| <= R` (heavy tail).
    pub fn enumerated_jumps(&self) -> Vec<(LatticePoint, f64)> {
        let mut out = Vec::with_capacity(2 * self.half_support.len());
        for (z, w) in &self.half_support {
            out.push((z.clone(), w / 2.0));
            out.push((z.iter().map(|c| -c).collect(), w / 2.0));
        }
        out
    }

    /// Fourier symbol `phi(theta) = sum_z a(z) (cos(theta . z) - 1)`.
    ///
    /// `phi(0) = 0`, `phi(theta) < 0` elsewhere in the zone. For heavy
    /// tails the analytic tail beyond the truncation radius is included.
    pub fn symbol(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.d);
        let mut phi = if self.d == 1 {
            self.symbol_sum_1d(theta[0])
        } else {
            self.symbol_sum_nd(theta)
        };
        if let KernelData::HeavyTail { tail, .. } = &self.kernel {
            phi -= tail.deficit(theta);
        }
        phi.min(0.0)
    }

    /// `sum over half support of w (cos(z theta) - 1)`.
    ///
    /// `cos(k theta) - 1` is carried through the recurrences directly
    /// (seeded by `-2 sin^2(theta/2)`) instead of subtracting 1 from a
    /// computed cosine, which would destroy the `O(theta^2)` accuracy the
    /// small-rate Green quadratures rely on near the zone origin.
    fn symbol_sum_1d(&self, theta: f64) -> f64 {
        let contiguous = matches!(self.kernel, KernelData::HeavyTail { .. });
        if contiguous {
            // half_support is ordered z = 1..=R; u_k = cos(k theta) - 1
            // satisfies u_k = 2c u_{k-1} - u_{k-2} - e with e = 4 sin^2(theta/2)
            let c = theta.cos();
            let e = 4.0 * (0.5 * theta).sin().powi(2);
            let mut uk1 = 0.0; // u_{z-1}
            let mut uk = -0.5 * e; // u_z at z = 1
            let mut sum = 0.0;
            for (i, (_, w)) in self.half_support.iter().enumerate() {
                if i > 0 {
                    let next = 2.0 * c * uk - uk1 - e;
                    uk1 = uk;
                    uk = next;
                }
                sum += w * uk;
            }
            sum
        } else {
            self.half_support
                .iter()
                .map(|(z, w)| -2.0 * w * (0.5 * z[0] as f64 * theta).sin().powi(2))
                .sum()
        }
    }

    fn symbol_sum_nd(&self, theta: &[f64]) -> f64 {
        // Per-axis tables of u_k = cos(k theta_i) - 1 and s_k = sin(k theta_i)
        // up to the max coordinate, then one angle-addition product per
        // support point, all in the cancellation-free (u, s) representation:
        // u_{a+b} = u_a u_b + u_a + u_b - s_a s_b.
        let d = self.d;
        let mut maxc = vec![0i64; d];
        for (z, _) in &self.half_support {
            for (m, &c) in maxc.iter_mut().zip(z.iter()) {
                *m = (*m).max(c.abs());
            }
        }
        let mut u_t: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut s_t: Vec<Vec<f64>> = Vec::with_capacity(d);
        for (i, &m) in maxc.iter().enumerate() {
            let n = m as usize + 1;
            let mut us = Vec::with_capacity(n);
            let mut sn = Vec::with_capacity(n);
            let s1 = theta[i].sin();
            let c1 = theta[i].cos();
            let e = 4.0 * (0.5 * theta[i]).sin().powi(2);
            us.push(0.0);
            sn.push(0.0);
            if n > 1 {
                us.push(-0.5 * e);
                sn.push(s1);
                for k in 2..n {
                    us.push(2.0 * c1 * us[k - 1] - us[k - 2] - e);
                    sn.push(2.0 * c1 * sn[k - 1] - sn[k - 2]);
                }
            }
            u_t.push(us);
            s_t.push(sn);
        }
        let mut sum = 0.0;
        for (z, w) in &self.half_support {
            let mut u = 0.0;
            let mut s = 0.0;
            for (i, &zi) in z.iter().enumerate() {
                if zi != 0 {
                    let k = zi.unsigned_abs() as usize;
                    let ua = u_t[i][k];
                    let sa = if zi > 0 { s_t[i][k] } else { -s_t[i][k] };
                    let nu = u * ua + u + ua - s * sa;
                    s = s * (1.0 + ua) + sa * (1.0 + u);
                    u = nu;
                }
            }
            sum += w * u;
        }
        sum
    }

    /// `G0Infinite` iff the walk is recurrent: `d <= 2` under finite jump
    /// variance, `d = 1` with `alpha in [1, 2)` under heavy tails.
    pub fn classify_recurrence(&self) -> Recurrence {
        match &self.kernel {
            KernelData::FiniteRange => {
                if self.d <= 2 {
                    Recurrence::G0Infinite
                } else {
                    Recurrence::G0Finite
                }
            }
            KernelData::HeavyTail { alpha, .. } => {
                if self.d == 1 && *alpha >= 1.0 {
                    Recurrence::G0Infinite
                } else {
                    Recurrence::G0Finite
                }
            }
        }
    }
}

fn norm(z: &[i64]) -> f64 {
    (z.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt()
}

fn lex_positive(z: &[i64]) -> bool {
    for &c in z {
        if c > 0 {
            return true;
        }
        if c < 0 {
            return false;
        }
    }
    false
}

/// Index of the sublattice generated by `vectors` in `Z^d`, or `None` if
/// the vectors do not span. Integer Gaussian elimination with extended-gcd
/// row combinations; unimodular operations keep the lattice fixed, so the
/// product of the pivots is the index.
fn lattice_index(vectors: &[&[i64]], d: usize) -> Option<i128> {
    let mut basis: Vec<Option<Vec<i128>>> = vec![None; d];
    for v in vectors {
        let mut v: Vec<i128> = v.iter().map(|&c| c as i128).collect();
        for col in 0..d {
            if v[col] == 0 {
                continue;
            }
            match &basis[col] {
                None => {
                    basis[col] = Some(std::mem::take(&mut v));
                    break;
                }
                Some(p) => {
                    let (g, a, b) = ext_gcd(p[col], v[col]);
                    let (pc, vc) = (p[col] / g, v[col] / g);
                    let newp: Vec<i128> =
                        p.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
                    let newv: Vec<i128> =
                        p.iter().zip(&v).map(|(x, y)| pc * y - vc * x).collect();
                    basis[col] = Some(newp);
                    v = newv;
                }
            }
        }
    }
    let mut index: i128 = 1;
    for (col, row) in basis.iter().enumerate() {
        match row {
            Some(r) => index *= r[col].abs(),
            None => return None,
        }
    }
    Some(index)
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Build a finite-range walk from a `z -> rate` map. Asymmetric input is
/// symmetrized by averaging `a(z)` and `a(-z)`; `WalkSpec::was_symmetrized`
/// reports when this happened.
pub fn build_finite_range_walk(
    d: usize,
    weights: &[(LatticePoint, f64)],
) -> Result<WalkSpec, WalkError> {
    if d == 0 {
        return Err(WalkError::InvalidParameter("d must be >= 1".into()));
    }
    if weights.is_empty() {
        return Err(WalkError::EmptyKernel);
    }
    let mut map: BTreeMap<LatticePoint, f64> = BTreeMap::new();
    for (z, rate) in weights {
        if z.len() != d {
            return Err(WalkError::DimensionMismatch {
                point: z.clone(),
                d,
            });
        }
        if z.iter().all(|&c| c == 0) {
            return Err(WalkError::ZeroSupportVector);
        }
        if !(rate.is_finite() && *rate > 0.0) {
            return Err(WalkError::NegativeRate {
                point: z.clone(),
                rate: *rate,
            });
        }
        *map.entry(z.clone()).or_insert(0.0) += rate;
    }
    // Symmetrize: a_sym(z) = (a(z) + a(-z)) / 2 over the union support.
    let mut half: BTreeMap<LatticePoint, f64> = BTreeMap::new();
    let mut symmetrized = false;
    for (z, &rate) in &map {
        let neg: LatticePoint = z.iter().map(|c| -c).collect();
        let opposite = map.get(&neg).copied().unwrap_or(0.0);
        if (rate - opposite).abs() > 1e-14 * rate.abs().max(opposite.abs()) {
            symmetrized = true;
        }
        let key = if lex_positive(z) { z.clone() } else { neg };
        // combined weight a(z) + a(-z), inserted once per +/- pair
        half.entry(key).or_insert(rate + opposite);
    }
    let half_support: Vec<(LatticePoint, f64)> = half.into_iter().collect();
    let refs: Vec<&[i64]> = half_support.iter().map(|(z, _)| z.as_slice()).collect();
    match lattice_index(&refs, d) {
        Some(1) => {}
        Some(index) => return Err(WalkError::NotIrreducible { index }),
        None => return Err(WalkError::NotIrreducible { index: 0 }),
    }
    let a0: f64 = -half_support.iter().map(|(_, w)| w).sum::<f64>();
    let variance: f64 = half_support
        .iter()
        .map(|(z, w)| w * z.iter().map(|&c| (c * c) as f64).sum::<f64>())
        .sum();
    Ok(WalkSpec {
        d,
        half_support,
        kernel: KernelData::FiniteRange,
        a0,
        variance: Some(variance),
        symmetrized,
    })
}

/// Sphere quadrature directions with weights `w_j H(s_j) scale`, used for
/// the analytic tail of heavy-tail kernels.
fn sphere_directions(
    d: usize,
    angular: &Angular,
    scale: f64,
) -> Result<Vec<(Vec<f64>, f64)>, WalkError> {
    let mut dirs: Vec<(Vec<f64>, f64)> = Vec::new();
    match d {
        1 => {
            dirs.push((vec![1.0], 1.0));
            dirs.push((vec![-1.0], 1.0));
        }
        2 => {
            let n = 64;
            for j in 0..n {
                let psi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
                dirs.push((vec![psi.cos(), psi.sin()], 2.0 * std::f64::consts::PI / n as f64));
            }
        }
        _ => {
            // product grid: Gauss in cos(polar) x uniform in azimuth for the
            // first two coordinates of a d-sphere restricted to d = 3
            if d != 3 {
                return Err(WalkError::InvalidParameter(
                    "heavy-tail kernels are supported for d <= 3".into(),
                ));
            }
            let (nodes, w) = crate::quad::gauss_rule(16);
            let naz = 32;
            for (u, wu) in nodes.iter().zip(w.iter()) {
                let st = (1.0 - u * u).sqrt();
                for j in 0..naz {
                    let psi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / naz as f64;
                    dirs.push((
                        vec![st * psi.cos(), st * psi.sin(), *u],
                        wu * 2.0 * std::f64::consts::PI / naz as f64,
                    ));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(dirs.len());
    for (dir, w) in dirs {
        let h = angular.eval(&dir);
        if !(h.is_finite() && h > 0.0) {
            return Err(WalkError::NonPositiveAngular {
                dir: dir.clone(),
                value: h,
            });
        }
        let neg: Vec<f64> = dir.iter().map(|c| -c).collect();
        let h_neg = angular.eval(&neg);
        if (h - h_neg).abs() > 1e-10 * h.abs().max(1.0) {
            return Err(WalkError::AsymmetricAngular {
                dir,
                value: h,
                opposite: h_neg,
            });
        }
        out.push((dir, w * h * scale));
    }
    Ok(out)
}

/// Build a heavy-tail walk `a(z) = scale H(z/|z|) / |z|^(d+alpha)` with the
/// pure power law at every `z != 0`. Jumps with `|z| <= truncation_radius`
/// enter symbol sums exactly; the remainder is handled by the analytic tail
/// integral.
pub fn build_heavy_tail_walk(
    d: usize,
    alpha: f64,
    angular: Angular,
    scale: f64,
    truncation_radius: i64,
) -> Result<WalkSpec, WalkError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(WalkError::AlphaOutOfRange(alpha));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(WalkError::InvalidParameter(format!(
            "scale must be positive, got {scale}"
        )));
    }
    if truncation_radius < 1 {
        return Err(WalkError::InvalidParameter(format!(
            "truncation_radius must be >= 1, got {truncation_radius}"
        )));
    }
    let r = truncation_radius;
    let mut half_support: Vec<(LatticePoint, f64)> = Vec::new();
    let rate_at = |z: &[i64]| -> Result<f64, WalkError> {
        let n = norm(z);
        let dir: Vec<f64> = z.iter().map(|&c| c as f64 / n).collect();
        let h = angular.eval(&dir);
        if !(h.is_finite() && h > 0.0) {
            return Err(WalkError::NonPositiveAngular { dir, value: h });
        }
        Ok(scale * h / n.powf(d as f64 + alpha))
    };
    match d {
        1 => {
            for z in 1..=r {
                let zp = vec![z];
                let zn = vec![-z];
                let w = rate_at(&zp)? + rate_at(&zn)?;
                half_support.push((zp, w));
            }
        }
        2 | 3 => {
            let mut coords = vec![-r; d];
            'outer: loop {
                if lex_positive(&coords)
                    && coords.iter().map(|&c| c * c).sum::<i64>() <= r * r
                {
                    let neg: LatticePoint = coords.iter().map(|c| -c).collect();
                    let w = rate_at(&coords)? + rate_at(&neg)?;
                    half_support.push((coords.clone(), w));
                }
                for i in 0..d {
                    coords[i] += 1;
                    if coords[i] <= r {
                        continue 'outer;
                    }
                    coords[i] = -r;
                }
                break;
            }
            half_support.sort_by(|a, b| a.0.cmp(&b.0));
        }
        _ => {
            return Err(WalkError::InvalidParameter(
                "heavy-tail kernels are supported for d <= 3".into(),
            ))
        }
    }
    let directions = sphere_directions(d, &angular, scale)?;
    let reff = r as f64 + 0.5;
    let mass: f64 = directions
        .iter()
        .map(|(_, w)| w * reff.powf(-alpha) / alpha)
        .sum();
    let tail = TailModel {
        alpha,
        reff,
        directions,
        mass,
        integral: TailIntegral::new(alpha),
    };
    let near_mass: f64 = half_support.iter().map(|(_, w)| w).sum();
    let a0 = -(near_mass + tail.mass);
    Ok(WalkSpec {
        d,
        half_support,
        kernel: KernelData::HeavyTail {
            alpha,
            scale,
            truncation_radius: r,
            angular,
            tail,
        },
        a0,
        variance: None,
        symmetrized: false,
    })
}

/// Branching rates `b_n >= 0` for `n != 1`, with `b_1 = -sum_{n != 1} b_n`
/// so the generating function satisfies `f(1) = 0`. The first moment is
/// `beta_1 = f'(1) = sum_{n != 1} (n - 1) b_n`.
#[derive(Debug, Clone)]
pub struct BranchingLaw {
    rates: BTreeMap<u32, f64>,
    b1: f64,
    beta1: f64,
}

impl BranchingLaw {
    pub fn new(rates: BTreeMap<u32, f64>) -> Result<Self, WalkError> {
        for (&n, &b) in &rates {
            if n == 1 {
                return Err(WalkError::InvalidBranching(
                    "rate for n = 1 is derived, not supplied".into(),
                ));
            }
            if !(b.is_finite() && b >= 0.0) {
                return Err(WalkError::InvalidBranching(format!(
                    "b_{n} = {b} must be nonnegative"
                )));
            }
        }
        let total: f64 = rates.values().sum();
        let b1 = -total;
        let beta1 = rates
            .iter()
            .map(|(&n, &b)| (n as f64 - 1.0) * b)
            .sum::<f64>();
        Ok(BranchingLaw { rates, b1, beta1 })
    }

    /// Binary fission `b_2 = beta`, the simplest law with `f'(1) = beta`.
    pub fn binary_fission(beta: f64) -> Result<Self, WalkError> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(WalkError::InvalidBranching(format!(
                "fission rate must be nonnegative, got {beta}"
            )));
        }
        let mut m = BTreeMap::new();
        if beta > 0.0 {
            m.insert(2, beta);
        }
        Self::new(m)
    }

    pub fn rates(&self) -> &BTreeMap<u32, f64> {
        &self.rates
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    /// Total branching event rate `sum_{n != 1} b_n = -b_1`.
    pub fn event_rate(&self) -> f64 {
        -self.b1
    }

    /// First moment `beta_1 = f'(1)`.
    pub fn beta1(&self) -> f64 {
        self.beta1
    }
}
