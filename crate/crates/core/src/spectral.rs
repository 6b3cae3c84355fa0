//! Source Green matrices, critical intensities and the positive discrete
//! spectrum of the perturbed evolution operator.
//!
//! For `N` equal-intensity sources the positive eigenvalues of
//! `H_beta = A + beta sum_i Delta_{x_i}` are the roots `lambda > 0` of
//! `gamma_i(lambda) = 1/beta`, where `gamma_0 > gamma_1 >= ...` are the
//! eigenvalues of the `N x N` matrix of Green values between source
//! points. All branches decrease strictly in `lambda`, so each root is
//! found by bracketed bisection followed by secant polish.

use std::collections::HashMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::green::{green_lambda_multi, green_zero_multi, GreenError};
use crate::lattice_walk::{LatticePoint, Recurrence, WalkSpec};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Green(#[from] GreenError),
    #[error("source points must be pairwise distinct")]
    DuplicateSources,
    #[error("at least one source point is required")]
    EmptySources,
    #[error("source dimension does not match walk dimension")]
    DimensionMismatch,
    #[error("leading eigenvalue gap {gap:.3e} below numerical noise {noise:.3e}")]
    GapNotResolved { gap: f64, noise: f64 },
    #[error("upper bracket expansion exhausted; quadrature tolerance too loose")]
    BracketNotFound,
    #[error("box halfwidth {l} does not contain all source points")]
    BoxTooSmall { l: i64 },
    #[error("truncated operator dimension {dim} exceeds budget {cap}")]
    OutOfMemoryBudget { dim: usize, cap: usize },
}

/// `N >= 1` pairwise-distinct source points with a common intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    points: Vec<LatticePoint>,
    beta: f64,
}

impl SourceConfig {
    pub fn new(points: Vec<LatticePoint>, beta: f64) -> Result<Self, SpectralError> {
        if points.is_empty() {
            return Err(SpectralError::EmptySources);
        }
        let d = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(SpectralError::DimensionMismatch);
            }
            if points[..i].contains(p) {
                return Err(SpectralError::DuplicateSources);
            }
        }
        Ok(SourceConfig { points, beta })
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        SourceConfig {
            points: self.points.clone(),
            beta,
        }
    }
}

/// Spectral summary of `H_beta` for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub beta_c: f64,
    /// Positive eigenvalues, strictly descending leading pair, length <= N.
    pub eigenvalues: Vec<f64>,
    pub leading_simple: bool,
    pub weakly_supercritical: bool,
    /// Threshold above which a second positive eigenvalue appears;
    /// estimated as `1/gamma_1(0+)` (see `beta_c1`). `None` for N = 1.
    pub beta_c1: Option<f64>,
}

fn canonical(z: &[i64]) -> LatticePoint {
    // G depends only on +-(y - x); key displacements by a sign-canonical form
    let mut v: LatticePoint = z.to_vec();
    if let Some(first) = v.iter().find(|&&c| c != 0) {
        if *first < 0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
    v
}

/// `N x N` matrix of Green values `G_lambda(x_i, x_j)` between source
/// points; `lambda = 0` is allowed only for transient walks.
pub fn gamma_matrix(
    walk: &WalkSpec,
    sources: &SourceConfig,
    lambda: f64,
    rel_tol: Option<f64>,
) -> Result<DMatrix<f64>, SpectralError> {
    let pts = sources.points();
    if pts[0].len() != walk.dimension() {
        return Err(SpectralError::DimensionMismatch);
    }
    let n = pts.len();
    let mut keys: Vec<LatticePoint> = Vec::new();
    let mut index: HashMap<LatticePoint, usize> = HashMap::new();
    for i in 0..n {
        for j in i..n {
            let dz: LatticePoint = pts[i].iter().zip(&pts[j]).map(|(a, b)| b - a).collect();
            let key = canonical(&dz);
            index.entry(key.clone()).or_insert_with(|| {
                keys.push(key);
                keys.len() - 1
            });
        }
    }
    let vals = if lambda == 0.0 {
        green_zero_multi(walk, &keys, rel_tol)?
    } else {
        green_lambda_multi(walk, lambda, &keys, rel_tol)?
    };
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let dz: LatticePoint = pts[i].iter().zip(&pts[j]).map(|(a, b)| b - a).collect();
        vals[index[&canonical(&dz)]].0
    }))
}

/// Eigenvalues of a symmetric matrix, sorted descending, with the leading
/// gap checked against numerical noise when `N >= 2`.
pub fn gamma_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>, SpectralError> {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if n >= 2 {
        let scale = vals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let noise = 32.0 * f64::EPSILON * scale * n as f64;
        let gap = vals[0] - vals[1];
        if gap <= noise {
            return Err(SpectralError::GapNotResolved { gap, noise });
        }
    }
    Ok(vals)
}

fn gamma_branches(
    walk: &WalkSpec,
    sources: &SourceConfig,
    lambda: f64,
    rel_tol: Option<f64>,
) -> Result<Vec<f64>, SpectralError> {
    gamma_eigenvalues(&gamma_matrix(walk, sources, lambda, rel_tol)?)
}

/// Quadrature tolerance for branch evaluations during root finding: the
/// resolvent peak below `lambda = 1e-6` is expensive to certify at the
/// default tolerance and root brackets do not need it there.
fn branch_tol(walk: &WalkSpec, lambda: f64) -> Option<f64> {
    if lambda <= 1e-4 {
        Some(
            crate::quad::QuadOptions::for_dimension(walk.dimension())
                .rel_tol
                .max(1e-8),
        )
    } else {
        None
    }
}

/// Critical intensity `beta_c = 1/gamma_0(0)`; zero for recurrent walks.
pub fn beta_critical(walk: &WalkSpec, sources: &SourceConfig) -> Result<f64, SpectralError> {
    beta_critical_with_tol(walk, sources, None)
}

/// `beta_critical` with an explicit quadrature tolerance, for sweeps that
/// trade certified digits for speed.
pub fn beta_critical_with_tol(
    walk: &WalkSpec,
    sources: &SourceConfig,
    rel_tol: Option<f64>,
) -> Result<f64, SpectralError> {
    if walk.classify_recurrence() == Recurrence::G0Infinite {
        return Ok(0.0);
    }
    let gamma = gamma_branches(walk, sources, 0.0, rel_tol)?;
    Ok(1.0 / gamma[0])
}

/// Root of `f(lambda) = gamma_branch(lambda) - 1/beta` on a bracket where
/// `f(lo) > 0 > f(hi)`, using strict monotone decrease of every branch.
/// `res_rel` bounds the accepted residual relative to `1/beta`; it must
/// not be below the quadrature noise on the branch values.
fn solve_branch<F>(
    mut gamma: F,
    beta: f64,
    mut lo: f64,
    mut hi: f64,
    res_rel: f64,
) -> Result<f64, SpectralError>
where
    F: FnMut(f64) -> Result<f64, SpectralError>,
{
    let target = 1.0 / beta;
    // bisect to ~1e-3 relative
    let mut flo = gamma(lo)? - target;
    let mut fhi = gamma(hi)? - target;
    if flo <= 0.0 || fhi >= 0.0 {
        return Err(SpectralError::BracketNotFound);
    }
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        let fm = gamma(mid)? - target;
        if fm > 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    // secant polish inside the bracket
    let (mut a, mut fa, mut b, mut fb) = (lo, flo, hi, fhi);
    for _ in 0..60 {
        let x = (a * fb - b * fa) / (fb - fa);
        let x = x.clamp(lo, hi);
        let fx = gamma(x)? - target;
        if fx.abs() <= res_rel * target || (a - b).abs() <= 1e-12 * b.abs() {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        a = b;
        fa = fb;
        b = x;
        fb = fx;
        if fa == fb {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn bracket_hi<F>(mut gamma: F, walk: &WalkSpec, sources: &SourceConfig) -> Result<f64, SpectralError>
where
    F: FnMut(f64) -> Result<f64, SpectralError>,
{
    let beta = sources.beta();
    // crude operator-norm bound on H_beta
    let mut hi = beta * sources.n() as f64 * walk.a0().abs() + beta;
    let target = 1.0 / beta;
    for _ in 0..80 {
        if gamma(hi)? < target {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(SpectralError::BracketNotFound)
}

/// Leading positive eigenvalue `lambda_0(beta)` of `H_beta`, or `None`
/// when `beta <= beta_c`.
pub fn lambda0(walk: &WalkSpec, sources: &SourceConfig) -> Result<Option<f64>, SpectralError> {
    lambda0_with_tol(walk, sources, None)
}

/// `lambda0` with an explicit quadrature tolerance; the root residual is
/// relaxed to match so sweeps do not pay for digits the fit cannot use.
pub fn lambda0_with_tol(
    walk: &WalkSpec,
    sources: &SourceConfig,
    rel_tol: Option<f64>,
) -> Result<Option<f64>, SpectralError> {
    let beta = sources.beta();
    if beta <= 0.0 {
        return Ok(None);
    }
    let beta_c = beta_critical_with_tol(walk, sources, rel_tol)?;
    if beta <= beta_c {
        return Ok(None);
    }
    let tol_at = |l: f64| rel_tol.or_else(|| branch_tol(walk, l));
    let g0 = |l: f64| gamma_branches(walk, sources, l, tol_at(l)).map(|v| v[0]);
    let hi = bracket_hi(g0, walk, sources)?;
    // lower bracket: supercriticality guarantees gamma_0(0+) > 1/beta
    let target = 1.0 / beta;
    let mut lo = hi * 1e-3;
    for _ in 0..20 {
        if gamma_branches(walk, sources, lo, tol_at(lo))?[0] > target {
            break;
        }
        lo *= 0.1;
    }
    let res_rel = rel_tol.map_or(1e-10, |t| t.max(1e-10) * 2.0);
    let root = solve_branch(
        |l| gamma_branches(walk, sources, l, tol_at(l)).map(|v| v[0]),
        beta,
        lo,
        hi,
        res_rel,
    )?;
    Ok(Some(root))
}

/// Estimate of `gamma_1(0+)`: Aitken extrapolation of `gamma_1(lambda)`
/// over a decade-spaced grid. The limit is finite even when `gamma_0`
/// diverges (recurrent walks), which is what makes the second threshold
/// `beta_c1` well defined there.
fn gamma1_at_zero(walk: &WalkSpec, sources: &SourceConfig) -> Result<f64, SpectralError> {
    let g: Vec<f64> = [1e-6, 1e-7, 1e-8]
        .iter()
        .map(|&l| gamma_branches(walk, sources, l, branch_tol(walk, l)).map(|v| v[1]))
        .collect::<Result<_, _>>()?;
    Ok(aitken(&g))
}

/// Aitken delta-squared acceleration of a three-term sequence.
fn aitken(g: &[f64]) -> f64 {
    let denom = g[2] - 2.0 * g[1] + g[0];
    if denom.abs() < 1e-14 * g[2].abs().max(1e-300) {
        return g[2];
    }
    g[2] - (g[2] - g[1]).powi(2) / denom
}

/// Full positive spectrum of `H_beta` plus criticality classification.
pub fn positive_spectrum(
    walk: &WalkSpec,
    sources: &SourceConfig,
) -> Result<SpectralResult, SpectralError> {
    let beta = sources.beta();
    let n = sources.n();
    let beta_c = beta_critical(walk, sources)?;
    let beta_c1 = if n >= 2 {
        Some(1.0 / gamma1_at_zero(walk, sources)?)
    } else {
        None
    };
    let mut eigenvalues = Vec::new();
    if beta > beta_c && beta > 0.0 {
        let target = 1.0 / beta;
        // branch i has a positive root iff gamma_i(0+) > 1/beta; for a
        // transient walk read the limits straight off Gamma(0)
        let limits_at_zero = if walk.classify_recurrence() == Recurrence::G0Finite {
            Some(gamma_branches(walk, sources, 0.0, None)?)
        } else {
            None
        };
        let hi = bracket_hi(
            |l| gamma_branches(walk, sources, l, branch_tol(walk, l)).map(|v| v[0]),
            walk,
            sources,
        )?;
        for i in 0..n {
            let exists = match &limits_at_zero {
                Some(g) => g[i] > target,
                // gamma_0 diverges as lambda -> 0 for recurrent walks;
                // higher branches stay bounded, use the extrapolated limit
                None if i == 0 => true,
                None => {
                    let g: Vec<f64> = [1e-6, 1e-7, 1e-8]
                        .iter()
                        .map(|&l| {
                            gamma_branches(walk, sources, l, branch_tol(walk, l)).map(|v| v[i])
                        })
                        .collect::<Result<_, _>>()?;
                    aitken(&g) > target
                }
            };
            if !exists {
                break; // branches are ordered; later ones are smaller still
            }
            let mut lo = hi * 1e-3;
            let mut found = false;
            for _ in 0..24 {
                let g = gamma_branches(walk, sources, lo, branch_tol(walk, lo))?[i];
                if g > target {
                    found = true;
                    break;
                }
                lo *= 0.1;
                if lo < 1e-13 {
                    break;
                }
            }
            if !found {
                break;
            }
            let root = solve_branch(
                |l| gamma_branches(walk, sources, l, branch_tol(walk, l)).map(|v| v[i]),
                beta,
                lo,
                hi,
                1e-10,
            )?;
            eigenvalues.push(root);
        }
    }
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let leading_simple = match eigenvalues.as_slice() {
        [l0, l1, ..] => l0 - l1 > 1e-10 * l0,
        _ => true,
    };
    let weakly_supercritical = eigenvalues.len() == 1
        && beta > beta_c
        && beta_c1.map_or(false, |b1| beta < b1);
    Ok(SpectralResult {
        beta_c,
        eigenvalues,
        leading_simple,
        weakly_supercritical,
        beta_c1,
    })
}

/// Finite-section oracle: top `N + 1` eigenvalues of `H_beta` restricted
/// to the box `{-L..L}^d`, by Lanczos iteration with full
/// reorthogonalization. The jump list is the walk's enumerated support,
/// so heavy-tail sections are accurate once the truncation radius covers
/// the box.
pub fn truncated_operator_eigen(
    walk: &WalkSpec,
    sources: &SourceConfig,
    l: i64,
) -> Result<Vec<f64>, SpectralError> {
    let op = BoxOperator::new(walk, sources, l)?;
    let want = sources.n() + 1;
    let scale = walk.a0().abs() * 2.0 + sources.beta().abs();
    let seeds = op.source_indices().to_vec();
    Ok(lanczos_top(
        |x, y| op.apply(x, y),
        op.dim(),
        &seeds,
        want,
        scale,
    ))
}

/// The operator `H_beta` restricted to the box `{-L..L}^d` with absorbing
/// boundary (rows clipped), applied matrix-free.
pub(crate) struct BoxOperator {
    d: usize,
    l: i64,
    side: usize,
    dim: usize,
    a0: f64,
    beta: f64,
    jumps: Vec<(LatticePoint, f64)>,
    source_idx: Vec<usize>,
}

impl BoxOperator {
    pub(crate) const DIM_CAP: usize = 120_000;

    pub(crate) fn new(
        walk: &WalkSpec,
        sources: &SourceConfig,
        l: i64,
    ) -> Result<Self, SpectralError> {
        if l < 1 {
            return Err(SpectralError::BoxTooSmall { l });
        }
        let d = walk.dimension();
        let side = (2 * l + 1) as usize;
        let dim = side.pow(d as u32);
        if dim > Self::DIM_CAP {
            return Err(SpectralError::OutOfMemoryBudget {
                dim,
                cap: Self::DIM_CAP,
            });
        }
        for p in sources.points() {
            if p.len() != d {
                return Err(SpectralError::DimensionMismatch);
            }
            if p.iter().any(|&c| c.abs() > l) {
                return Err(SpectralError::BoxTooSmall { l });
            }
        }
        let mut op = BoxOperator {
            d,
            l,
            side,
            dim,
            a0: walk.a0(),
            beta: sources.beta(),
            jumps: walk.enumerated_jumps(),
            source_idx: Vec::new(),
        };
        op.source_idx = sources.points().iter().map(|p| op.index_of(p)).collect();
        Ok(op)
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn source_indices(&self) -> &[usize] {
        &self.source_idx
    }

    pub(crate) fn index_of(&self, z: &[i64]) -> usize {
        let mut idx = 0usize;
        for &c in z.iter().rev() {
            idx = idx * self.side + (c + self.l) as usize;
        }
        idx
    }

    /// Sum of `|x|` over sites within one step of the box boundary.
    pub(crate) fn boundary_mass(&self, x: &[f64]) -> f64 {
        let mut coords = vec![-self.l; self.d];
        let mut i = 0usize;
        let mut mass = 0.0;
        'site: loop {
            if coords.iter().any(|&c| c.abs() == self.l) {
                mass += x[i].abs();
            }
            i += 1;
            for k in 0..self.d {
                coords[k] += 1;
                if coords[k] <= self.l {
                    continue 'site;
                }
                coords[k] = -self.l;
            }
            break;
        }
        mass
    }

    pub(crate) fn apply(&self, x: &[f64], y: &mut [f64]) {
        let l = self.l;
        for (i, v) in y.iter_mut().enumerate() {
            *v = self.a0 * x[i];
        }
        for &si in &self.source_idx {
            y[si] += self.beta * x[si];
        }
        // off-diagonals a(z' - z), clipped at the box boundary
        let mut coords = vec![-l; self.d];
        let mut i = 0usize;
        'site: loop {
            let xi = x[i];
            if xi != 0.0 {
                'jump: for (z, a) in &self.jumps {
                    let mut j = 0usize;
                    for (k, &zc) in z.iter().enumerate() {
                        let c = coords[k] + zc;
                        if c < -l || c > l {
                            continue 'jump;
                        }
                        j += ((c + l) as usize) * self.side.pow(k as u32);
                    }
                    y[j] += a * xi;
                }
            }
            i += 1;
            for k in 0..self.d {
                coords[k] += 1;
                if coords[k] <= l {
                    continue 'site;
                }
                coords[k] = -l;
            }
            break;
        }
    }
}

/// Lanczos with full reorthogonalization; returns the top `want` Ritz
/// values in descending order.
fn lanczos_top<F>(matvec: F, dim: usize, seeds: &[usize], want: usize, scale: f64) -> Vec<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let max_iter = dim.min(600);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_iter);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    // deterministic start: source indicators plus a slow-varying dither so
    // the start vector overlaps every relevant symmetry sector
    let mut v = vec![0.0f64; dim];
    for (k, &s) in seeds.iter().enumerate() {
        v[s] = 1.0;
        if dim > 1 {
            v[(s + k + 1) % dim] += 1e-3;
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);

    let mut w = vec![0.0f64; dim];
    for it in 0..max_iter {
        matvec(&v, &mut w);
        let alpha: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= alpha * vi;
        }
        if let Some(prev) = basis.last() {
            let b = *betas.last().unwrap();
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= b * pi;
            }
        }
        basis.push(v.clone());
        alphas.push(alpha);
        // full reorthogonalization
        for q in &basis {
            let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
        let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if b < 1e-14 * scale.max(1.0) {
            break;
        }
        // periodically test Ritz convergence of the top `want` values
        if it >= 2 * want && it % 8 == 0 {
            let (vals, bottoms) = tridiag_top(&alphas, &betas, want);
            if bottoms.iter().all(|s| (b * s).abs() < 1e-11 * scale.max(1.0)) {
                let _ = vals;
                break;
            }
        }
        betas.push(b);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / b;
        }
    }
    let (vals, _) = tridiag_top(&alphas, &betas, want);
    vals
}

/// Top `want` eigenvalues of the Lanczos tridiagonal matrix plus the last
/// component of each eigenvector (the Ritz residual factor).
fn tridiag_top(alphas: &[f64], betas: &[f64], want: usize) -> (Vec<f64>, Vec<f64>) {
    let m = alphas.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j || j + 1 == i {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let k = want.min(m);
    let vals = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let bottoms = order[..k]
        .iter()
        .map(|&i| eig.eigenvectors[(m - 1, i)])
        .collect();
    (vals, bottoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_walk::build_finite_range_walk;

    fn nn_1d() -> WalkSpec {
        build_finite_range_walk(1, &[(vec![1], 0.5), (vec![-1], 0.5)]).unwrap()
    }

    fn simple_3d() -> WalkSpec {
        let w: Vec<(Vec<i64>, f64)> = (0..3)
            .flat_map(|i| {
                [1i64, -1].into_iter().map(move |s| {
                    let mut z = vec![0i64; 3];
                    z[i] = s;
                    (z, 1.0 / 6.0)
                })
            })
            .collect();
        build_finite_range_walk(3, &w).unwrap()
    }

    #[test]
    fn source_validation() {
        assert!(matches!(
            SourceConfig::new(vec![], 1.0),
            Err(SpectralError::EmptySources)
        ));
        assert!(matches!(
            SourceConfig::new(vec![vec![0, 0], vec![0, 0]], 1.0),
            Err(SpectralError::DuplicateSources)
        ));
    }

    #[test]
    fn eigenvalues_two_by_two_and_ones() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 3.0]);
        let v = gamma_eigenvalues(&m).unwrap();
        assert!((v[0] - 4.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);

        let ones = DMatrix::from_element(5, 5, 1.0);
        let v = gamma_eigenvalues(&ones).unwrap();
        assert!((v[0] - 5.0).abs() < 1e-10);
        for x in &v[1..] {
            assert!(x.abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial() {
        // independent route: roots of det(M - x I) via the companion matrix
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, -0.5, 0.3, 0.1, //
                -0.5, 1.0, 0.2, -0.4, //
                0.3, 0.2, -1.5, 0.6, //
                0.1, -0.4, 0.6, 0.8,
            ],
        );
        let v = gamma_eigenvalues(&m).unwrap();
        // characteristic polynomial by Faddeev-LeVerrier
        let n = 4;
        let mut coeffs = vec![1.0f64]; // leading coefficient of x^n
        let mut mk = DMatrix::<f64>::zeros(n, n);
        let id = DMatrix::<f64>::identity(n, n);
        for k in 1..=n {
            mk = &m * (&mk + *coeffs.last().unwrap() * &id);
            coeffs.push(-mk.trace() / k as f64);
        }
        let mut comp = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            comp[(i, n - 1)] = -coeffs[n - i];
        }
        let mut roots: Vec<f64> = comp
            .complex_eigenvalues()
            .iter()
            .map(|c| c.re)
            .collect();
        roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in v.iter().zip(&roots) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn beta_critical_single_source_3d() {
        let w = simple_3d();
        let s = SourceConfig::new(vec![vec![0, 0, 0]], 1.0).unwrap();
        let bc = beta_critical(&w, &s).unwrap();
        assert!((bc - 0.659462670449).abs() < 1e-6, "{bc}");
    }

    #[test]
    fn beta_critical_recurrent_is_zero() {
        let s = SourceConfig::new(vec![vec![0]], 1.0).unwrap();
        assert_eq!(beta_critical(&nn_1d(), &s).unwrap(), 0.0);
    }

    #[test]
    fn two_source_threshold_identity() {
        // eigen route equals 1/(G_0 + G_0(0, s e1)) exactly for N = 2
        let w = simple_3d();
        let s = SourceConfig::new(vec![vec![0, 0, 0], vec![2, 0, 0]], 1.0).unwrap();
        let bc = beta_critical(&w, &s).unwrap();
        let g = green_zero_multi(&w, &[vec![0, 0, 0], vec![2, 0, 0]], None).unwrap();
        let direct = 1.0 / (g[0].0 + g[1].0);
        assert!((bc - direct).abs() < 1e-10 * direct, "{bc} vs {direct}");
        // N = 2 lowers the threshold below the single-source value
        let s1 = SourceConfig::new(vec![vec![0, 0, 0]], 1.0).unwrap();
        assert!(bc < beta_critical(&w, &s1).unwrap());
    }

    #[test]
    fn lambda0_closed_form_1d() {
        // G_lambda = 1/sqrt(lambda^2 + 2 lambda) = 1/beta at beta = 0.1
        let s = SourceConfig::new(vec![vec![0]], 0.1).unwrap();
        let l0 = lambda0(&nn_1d(), &s).unwrap().unwrap();
        let want = 1.01f64.sqrt() - 1.0;
        assert!((l0 - want).abs() < 1e-8 * want, "{l0} vs {want}");
    }

    #[test]
    fn lambda0_subcritical_is_none() {
        let w = simple_3d();
        let s = SourceConfig::new(vec![vec![0, 0, 0]], 0.5).unwrap();
        assert_eq!(lambda0(&w, &s).unwrap(), None);
        let at_c = s.with_beta(beta_critical(&w, &s).unwrap());
        assert_eq!(lambda0(&w, &at_c).unwrap(), None);
    }

    #[test]
    fn lambda0_increases_with_beta() {
        let w = simple_3d();
        let mut prev = 0.0;
        for beta in [1.0, 1.5, 2.0, 3.0] {
            let s = SourceConfig::new(vec![vec![0, 0, 0]], beta).unwrap();
            let l0 = lambda0(&w, &s).unwrap().unwrap();
            assert!(l0 > prev);
            prev = l0;
        }
    }

    #[test]
    fn spectrum_counts_and_weak_regime() {
        let w = simple_3d();
        let pts = vec![vec![0, 0, 0], vec![3, 0, 0]];
        let bc = beta_critical(&w, &SourceConfig::new(pts.clone(), 1.0).unwrap()).unwrap();

        // large beta: two eigenvalues, strictly split
        let big = positive_spectrum(&w, &SourceConfig::new(pts.clone(), 10.0 * bc).unwrap())
            .unwrap();
        assert_eq!(big.eigenvalues.len(), 2);
        assert!(big.leading_simple);
        assert!(big.eigenvalues[0] > big.eigenvalues[1]);
        assert!(!big.weakly_supercritical);

        // just above beta_c: exactly one eigenvalue, weakly supercritical
        let b1 = big.beta_c1.unwrap();
        assert!(b1 > bc);
        let beta = 0.5 * (bc + b1);
        let weak = positive_spectrum(&w, &SourceConfig::new(pts, beta).unwrap()).unwrap();
        assert_eq!(weak.eigenvalues.len(), 1);
        assert!(weak.weakly_supercritical);
    }

    #[test]
    fn truncated_section_converges_to_lambda0() {
        let w = nn_1d();
        let s = SourceConfig::new(vec![vec![0]], 0.1).unwrap();
        let l0 = lambda0(&w, &s).unwrap().unwrap();
        let mut prev = f64::NEG_INFINITY;
        let mut last = 0.0;
        for l in [8i64, 16, 32, 64] {
            let top = truncated_operator_eigen(&w, &s, l).unwrap()[0];
            assert!(top >= prev - 1e-13, "not nondecreasing at L={l}");
            prev = top;
            last = top;
        }
        assert!((last - l0).abs() < 1e-3, "{last} vs {l0}");
    }

    #[test]
    fn truncated_section_beta_zero_nonpositive() {
        let w = nn_1d();
        let s = SourceConfig::new(vec![vec![0]], 0.0).unwrap();
        let top = truncated_operator_eigen(&w, &s, 32).unwrap()[0];
        assert!(top <= 1e-12, "{top}");
    }

    #[test]
    fn truncated_section_errors() {
        let w = nn_1d();
        let s = SourceConfig::new(vec![vec![100]], 1.0).unwrap();
        assert!(matches!(
            truncated_operator_eigen(&w, &s, 8),
            Err(SpectralError::BoxTooSmall { .. })
        ));
        let s0 = SourceConfig::new(vec![vec![0]], 1.0).unwrap();
        assert!(matches!(
            truncated_operator_eigen(&w, &s0, 100_000),
            Err(SpectralError::OutOfMemoryBudget { .. })
        ));
    }
}
