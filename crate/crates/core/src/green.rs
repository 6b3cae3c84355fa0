//! Lattice Green functions, transition probabilities and the small-rate
//! Green deficit, all via certified adaptive Brillouin-zone quadrature.

use thiserror::Error;

use crate::lattice_walk::{LatticePoint, Recurrence, WalkSpec};
use crate::quad::{integrate_zone, QuadOptions};

#[derive(Debug, Error)]
pub enum GreenError {
    /// Refinement budget exhausted; carries the best value and an honest
    /// error estimate.
    #[error("quadrature tolerance not reached (value {value}, err {err})")]
    ToleranceNotReached { value: f64, err: f64 },
    #[error("Green function at lambda = 0 diverges for a recurrent walk")]
    NotTransient,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("point dimension does not match walk dimension")]
    DimensionMismatch,
}

/// A resolvent value `G_lambda(x, y)` with its quadrature error estimate.
///
/// `value` may be `f64::INFINITY` only at `lambda = 0` for a recurrent
/// walk; the error estimate covers accumulated panel estimates and, for
/// heavy-tail kernels, the analytic tail model (it is an estimate, not a
/// rigorous enclosure).
#[derive(Debug, Clone, PartialEq)]
pub struct GreenValue {
    pub lambda: f64,
    pub x: LatticePoint,
    pub y: LatticePoint,
    pub value: f64,
    pub err: f64,
}

impl GreenValue {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

/// A transition probability `p(t, x, y)` with its error estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatValue {
    pub t: f64,
    pub x: LatticePoint,
    pub y: LatticePoint,
    pub value: f64,
    pub err: f64,
}

fn displacement(walk: &WalkSpec, x: &[i64], y: &[i64]) -> Result<LatticePoint, GreenError> {
    if x.len() != walk.dimension() || y.len() != walk.dimension() {
        return Err(GreenError::DimensionMismatch);
    }
    Ok(x.iter().zip(y).map(|(a, b)| b - a).collect())
}

fn dot(theta: &[f64], z: &[i64]) -> f64 {
    theta.iter().zip(z).map(|(t, &c)| t * c as f64).sum()
}

fn options(walk: &WalkSpec, rel_tol: Option<f64>) -> QuadOptions {
    let base = QuadOptions::for_dimension(walk.dimension());
    match rel_tol {
        Some(t) => base.with_rel_tol(t),
        None => base,
    }
}

/// `G_lambda(x, y)` for `lambda > 0` by Fourier inversion of the resolvent.
pub fn green_lambda(
    walk: &WalkSpec,
    lambda: f64,
    x: &[i64],
    y: &[i64],
    rel_tol: Option<f64>,
) -> Result<GreenValue, GreenError> {
    if lambda <= 0.0 {
        return Err(GreenError::PreconditionViolated(
            "green_lambda requires lambda > 0".into(),
        ));
    }
    let dx = displacement(walk, x, y)?;
    let mut out = green_lambda_multi(walk, lambda, std::slice::from_ref(&dx), rel_tol)?;
    let (value, err) = out.pop().unwrap();
    Ok(GreenValue {
        lambda,
        x: x.to_vec(),
        y: y.to_vec(),
        value,
        err,
    })
}

/// Several `G_lambda(0, z_k)` in one quadrature pass: the symbol value at
/// each node is shared across all displacement channels, which is what
/// makes source Green matrices affordable at tight tolerances.
pub fn green_lambda_multi(
    walk: &WalkSpec,
    lambda: f64,
    displacements: &[LatticePoint],
    rel_tol: Option<f64>,
) -> Result<Vec<(f64, f64)>, GreenError> {
    if lambda <= 0.0 {
        return Err(GreenError::PreconditionViolated(
            "green_lambda_multi requires lambda > 0".into(),
        ));
    }
    for z in displacements {
        if z.len() != walk.dimension() {
            return Err(GreenError::DimensionMismatch);
        }
    }
    let d = walk.dimension();
    let opts = options(walk, rel_tol);
    let norm = (2.0 * std::f64::consts::PI).powi(d as i32);
    let r = integrate_zone(
        d,
        displacements.len(),
        |theta, out| {
            let denom = lambda - walk.symbol(theta);
            for (k, z) in displacements.iter().enumerate() {
                out[k] = dot(theta, z).cos() / denom;
            }
        },
        &opts,
    );
    let vals: Vec<(f64, f64)> = r
        .values
        .iter()
        .zip(&r.errors)
        .map(|(v, e)| (v / norm, e / norm))
        .collect();
    if !r.converged {
        let worst = vals
            .iter()
            .cloned()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        return Err(GreenError::ToleranceNotReached {
            value: worst.0,
            err: worst.1,
        });
    }
    Ok(vals)
}

/// Several `G_0(0, z_k)` for a transient walk in one quadrature pass.
pub fn green_zero_multi(
    walk: &WalkSpec,
    displacements: &[LatticePoint],
    rel_tol: Option<f64>,
) -> Result<Vec<(f64, f64)>, GreenError> {
    if walk.classify_recurrence() == Recurrence::G0Infinite {
        return Err(GreenError::NotTransient);
    }
    for z in displacements {
        if z.len() != walk.dimension() {
            return Err(GreenError::DimensionMismatch);
        }
    }
    let d = walk.dimension();
    let opts = options(walk, rel_tol);
    let norm = (2.0 * std::f64::consts::PI).powi(d as i32);
    let r = integrate_zone(
        d,
        displacements.len(),
        |theta, out| {
            let phi = walk.symbol(theta);
            if phi == 0.0 {
                out.iter_mut().for_each(|v| *v = 0.0);
            } else {
                for (k, z) in displacements.iter().enumerate() {
                    out[k] = dot(theta, z).cos() / (-phi);
                }
            }
        },
        &opts,
    );
    let vals: Vec<(f64, f64)> = r
        .values
        .iter()
        .zip(&r.errors)
        .map(|(v, e)| (v / norm, e / norm))
        .collect();
    if !r.converged {
        let worst = vals
            .iter()
            .cloned()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        return Err(GreenError::ToleranceNotReached {
            value: worst.0,
            err: worst.1,
        });
    }
    Ok(vals)
}

/// `G_0(x, y)`: infinite for a recurrent walk, otherwise the convergent
/// singular integral with the origin handled by graded corner refinement.
pub fn green_zero(
    walk: &WalkSpec,
    x: &[i64],
    y: &[i64],
    rel_tol: Option<f64>,
) -> Result<GreenValue, GreenError> {
    let dx = displacement(walk, x, y)?;
    if walk.classify_recurrence() == Recurrence::G0Infinite {
        return Ok(GreenValue {
            lambda: 0.0,
            x: x.to_vec(),
            y: y.to_vec(),
            value: f64::INFINITY,
            err: 0.0,
        });
    }
    let d = walk.dimension();
    let opts = options(walk, rel_tol);
    let norm = (2.0 * std::f64::consts::PI).powi(d as i32);
    let r = integrate_zone(
        d,
        1,
        |theta, out| {
            let phi = walk.symbol(theta);
            // the quadrature nodes never sit exactly on theta = 0, but
            // guard the limit value anyway
            out[0] = if phi == 0.0 {
                0.0
            } else {
                dot(theta, &dx).cos() / (-phi)
            };
        },
        &opts,
    );
    let value = r.values[0] / norm;
    let err = r.errors[0] / norm;
    if !r.converged {
        return Err(GreenError::ToleranceNotReached { value, err });
    }
    Ok(GreenValue {
        lambda: 0.0,
        x: x.to_vec(),
        y: y.to_vec(),
        value,
        err,
    })
}

/// Smallest scale along a coordinate axis at which `t |phi|` reaches 1,
/// i.e. the width of the heat-kernel spike `e^{t phi}` at the origin;
/// `None` when the spike fills the zone and no grading is needed.
fn spike_scale(walk: &WalkSpec, t: f64) -> Option<f64> {
    let d = walk.dimension();
    let pi = std::f64::consts::PI;
    let mut best: Option<f64> = None;
    for i in 0..d {
        let g = |th: f64| {
            let mut v = vec![0.0; d];
            v[i] = th;
            t * walk.symbol(&v).abs()
        };
        if g(pi) <= 1.0 {
            continue;
        }
        let (mut lo, mut hi) = (0.0f64, pi);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = Some(best.map_or(hi, |b: f64| b.min(hi)));
    }
    // only grade when the spike is well below the zone scale
    best.filter(|&s| s < 0.25 * pi)
}

/// Transition probability `p(t, x, y)` by Fourier inversion of the heat
/// semigroup `e^{t phi}`.
pub fn transition_probability(
    walk: &WalkSpec,
    t: f64,
    x: &[i64],
    y: &[i64],
    rel_tol: Option<f64>,
) -> Result<HeatValue, GreenError> {
    if t < 0.0 {
        return Err(GreenError::PreconditionViolated(
            "transition_probability requires t >= 0".into(),
        ));
    }
    let dx = displacement(walk, x, y)?;
    if t == 0.0 {
        let value = if dx.iter().all(|&c| c == 0) { 1.0 } else { 0.0 };
        return Ok(HeatValue {
            t,
            x: x.to_vec(),
            y: y.to_vec(),
            value,
            err: 0.0,
        });
    }
    let d = walk.dimension();
    let mut opts = options(walk, rel_tol);
    // At large t the integrand is a spike of width ~ theta*(t) at the
    // origin; grade the seed boxes down to that width so the adaptive
    // refinement cannot miss it (see `QuadOptions::seed_scale`).
    if let Some(scale) = spike_scale(walk, t) {
        opts = opts.with_seed_scale(scale);
    }
    let norm = (2.0 * std::f64::consts::PI).powi(d as i32);
    let r = integrate_zone(
        d,
        1,
        |theta, out| {
            out[0] = (walk.symbol(theta) * t).exp() * dot(theta, &dx).cos();
        },
        &opts,
    );
    let raw = r.values[0] / norm;
    let err = r.errors[0] / norm;
    // clamp quadrature round-off outside [0,1], but never by more than err
    let value = raw.clamp(0.0, 1.0);
    if (raw - value).abs() > err.max(1e-12) {
        return Err(GreenError::ToleranceNotReached { value: raw, err });
    }
    if !r.converged {
        return Err(GreenError::ToleranceNotReached { value, err });
    }
    Ok(HeatValue {
        t,
        x: x.to_vec(),
        y: y.to_vec(),
        value,
        err,
    })
}

/// Residual of the Laplace-transform identity
/// `int_0^{t_max} e^{-lambda t} p(t, x, y) dt = G_lambda(x, y)`.
///
/// The time integral uses composite Gauss panels; every time node becomes
/// one channel of a single zone quadrature, so the symbol is evaluated
/// once per node for all times.
pub fn laplace_consistency(
    walk: &WalkSpec,
    lambda: f64,
    x: &[i64],
    y: &[i64],
    t_max: f64,
) -> Result<f64, GreenError> {
    if lambda <= 0.0 {
        return Err(GreenError::PreconditionViolated(
            "laplace_consistency requires lambda > 0".into(),
        ));
    }
    // truncation tail bound: |int_{t_max}^inf e^{-lambda t} p dt| <= e^{-lambda t_max}/lambda
    let tail = (-lambda * t_max).exp() / lambda;
    if tail >= 1e-8 {
        return Err(GreenError::PreconditionViolated(format!(
            "t_max too small: Laplace tail bound {tail:.3e} exceeds 1e-8"
        )));
    }
    let dx = displacement(walk, x, y)?;
    let d = walk.dimension();

    // composite 16-point Gauss in time, panel width <= 1
    let n_panels = (t_max.ceil() as usize).max(1);
    let (gx, gw) = crate::quad::gauss_rule(16);
    let mut times = Vec::with_capacity(n_panels * 16);
    let mut tweights = Vec::with_capacity(n_panels * 16);
    let h = t_max / n_panels as f64;
    for p in 0..n_panels {
        let a = p as f64 * h;
        for (xi, wi) in gx.iter().zip(&gw) {
            let t = a + 0.5 * h * (xi + 1.0);
            times.push(t);
            tweights.push(0.5 * h * wi * (-lambda * t).exp());
        }
    }

    let opts = options(walk, None);
    let norm = (2.0 * std::f64::consts::PI).powi(d as i32);
    let r = integrate_zone(
        d,
        times.len() + 1,
        |theta, out| {
            let phi = walk.symbol(theta);
            let c = dot(theta, &dx).cos();
            for (k, t) in times.iter().enumerate() {
                out[k] = (phi * t).exp() * c;
            }
            out[times.len()] = c / (lambda - phi);
        },
        &opts,
    );
    if !r.converged {
        let err = r.errors.iter().cloned().fold(0.0f64, f64::max) / norm;
        return Err(GreenError::ToleranceNotReached { value: 0.0, err });
    }
    let time_integral: f64 = r.values[..times.len()]
        .iter()
        .zip(&tweights)
        .map(|(p, w)| w * p / norm)
        .sum();
    let g = r.values[times.len()] / norm;
    Ok((time_integral - g).abs())
}

/// Cancellation-free Green deficit `G_0(x, y) - G_lambda(x, y)` for a
/// transient walk, computed from the single integrand
/// `lambda / ((-phi)(lambda - phi))` instead of a difference of integrals.
pub fn green_deficit(
    walk: &WalkSpec,
    lambda: f64,
    x: &[i64],
    y: &[i64],
    rel_tol: Option<f64>,
) -> Result<f64, GreenError> {
    if walk.classify_recurrence() == Recurrence::G0Infinite {
        return Err(GreenError::NotTransient);
    }
    if lambda < 0.0 {
        return Err(GreenError::PreconditionViolated(
            "green_deficit requires lambda >= 0".into(),
        ));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let dx = displacement(walk, x, y)?;
    let d = walk.dimension();
    let opts = options(walk, rel_tol);
    let norm = (2.0 * std::f64::consts::PI).powi(d as i32);
    let r = integrate_zone(
        d,
        1,
        |theta, out| {
            let neg_phi = -walk.symbol(theta);
            out[0] = if neg_phi == 0.0 {
                0.0
            } else {
                dot(theta, &dx).cos() * lambda / (neg_phi * (lambda + neg_phi))
            };
        },
        &opts,
    );
    let value = r.values[0] / norm;
    let err = r.errors[0] / norm;
    if !r.converged {
        return Err(GreenError::ToleranceNotReached { value, err });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_walk::{
        build_finite_range_walk, build_heavy_tail_walk, Angular,
    };

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
    fn resolvent_closed_form_1d() {
        // G_1(0,0) = 1/sqrt(lambda^2 + 2 lambda) at lambda = 1
        let g = green_lambda(&nn_1d(), 1.0, &[0], &[0], None).unwrap();
        assert!((g.value - 1.0 / 3f64.sqrt()).abs() < 1e-9, "{}", g.value);
        // G_1(0,1) = r / sqrt(3), r = 2 - sqrt(3)
        let g1 = green_lambda(&nn_1d(), 1.0, &[0], &[1], None).unwrap();
        let want = (2.0 - 3f64.sqrt()) / 3f64.sqrt();
        assert!((g1.value - want).abs() < 1e-9, "{}", g1.value);
    }

    #[test]
    fn resolvent_large_lambda_scaling() {
        let lambda = 1e6;
        let w = simple_3d();
        let g = green_lambda(&w, lambda, &[0, 0, 0], &[0, 0, 0], None).unwrap();
        assert!(g.value * lambda > 0.99 && g.value < 1.0 / (lambda + w.a0() * 1.01));
    }

    #[test]
    fn green_zero_simple_cubic() {
        let g = green_zero(&simple_3d(), &[0, 0, 0], &[0, 0, 0], Some(1e-8)).unwrap();
        let watson = 1.5163860591519780;
        assert!(
            (g.value - watson).abs() < 1e-6 * watson,
            "got {} want {}",
            g.value,
            watson
        );
    }

    #[test]
    fn green_zero_recurrent_is_infinite() {
        let g = green_zero(&nn_1d(), &[0], &[0], None).unwrap();
        assert!(g.is_infinite());
    }

    #[test]
    fn green_zero_heavy_tail_finite() {
        // d = 1, alpha in (0,1): transient despite d = 1
        let w = build_heavy_tail_walk(1, 0.5, Angular::Isotropic, 1.0, 100).unwrap();
        let g = green_zero(&w, &[0], &[0], Some(1e-7)).unwrap();
        assert!(g.value.is_finite() && g.value > 0.0);
    }

    #[test]
    fn heat_kernel_initial_condition_and_bessel() {
        let w = nn_1d();
        assert_eq!(
            transition_probability(&w, 0.0, &[0], &[0], None).unwrap().value,
            1.0
        );
        assert_eq!(
            transition_probability(&w, 0.0, &[0], &[3], None).unwrap().value,
            0.0
        );
        // p(1, 0, 0) = e^{-1} I_0(1)
        let p = transition_probability(&w, 1.0, &[0], &[0], None).unwrap();
        assert!((p.value - 0.4657596075936404).abs() < 1e-9, "{}", p.value);
    }

    #[test]
    fn heat_kernel_row_sum_is_one() {
        let w = nn_1d();
        let t = 2.0;
        let s: f64 = (-40i64..=40)
            .map(|k| transition_probability(&w, t, &[0], &[k], None).unwrap().value)
            .sum();
        assert!((s - 1.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn laplace_identity_holds() {
        let w = nn_1d();
        assert!(laplace_consistency(&w, 1.0, &[0], &[0], 25.0).unwrap() < 1e-6);
        assert!(laplace_consistency(&w, 10.0, &[0], &[1], 10.0).unwrap() < 1e-6);
        assert!(matches!(
            laplace_consistency(&w, 0.01, &[0], &[0], 1.0),
            Err(GreenError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn deficit_matches_square_root_law_3d() {
        let w = simple_3d();
        assert_eq!(green_deficit(&w, 0.0, &[0, 0, 0], &[0, 0, 0], None).unwrap(), 0.0);
        let d1 = green_deficit(&w, 1e-4, &[0, 0, 0], &[0, 0, 0], Some(1e-7)).unwrap();
        let d2 = green_deficit(&w, 2.5e-5, &[0, 0, 0], &[0, 0, 0], Some(1e-7)).unwrap();
        assert!(d1 > 0.0 && d2 > 0.0);
        // sqrt-lambda law: quartering lambda halves the deficit
        assert!((d1 / d2 - 2.0).abs() < 0.06, "ratio {}", d1 / d2);
    }

    #[test]
    fn deficit_heavy_tail_ratio() {
        // d = 1, alpha = 0.7: deficit ~ lambda^{(d-alpha)/alpha}, ratio 2^{3/7}
        let w = build_heavy_tail_walk(1, 0.7, Angular::Isotropic, 1.0, 400).unwrap();
        let d1 = green_deficit(&w, 1e-5, &[0], &[0], Some(1e-8)).unwrap();
        let d2 = green_deficit(&w, 5e-6, &[0], &[0], Some(1e-8)).unwrap();
        let want = 2f64.powf(3.0 / 7.0);
        assert!((d1 / d2 - want).abs() < 0.03 * want, "ratio {}", d1 / d2);
    }

    #[test]
    fn resolvent_monotone_and_dominant() {
        let w = simple_3d();
        let g1 = green_lambda(&w, 0.1, &[0, 0, 0], &[0, 0, 0], None).unwrap();
        let g2 = green_lambda(&w, 0.5, &[0, 0, 0], &[0, 0, 0], None).unwrap();
        assert!(g1.value > g2.value);
        let off = green_lambda(&w, 0.1, &[0, 0, 0], &[1, 1, 0], None).unwrap();
        assert!(off.value > 0.0 && off.value < g1.value);
        // symmetry in the displacement
        let off2 = green_lambda(&w, 0.1, &[1, 1, 0], &[0, 0, 0], None).unwrap();
        assert!((off.value - off2.value).abs() < 1e-12);
    }
}
