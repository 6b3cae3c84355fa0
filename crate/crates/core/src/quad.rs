//! Adaptive tensor-product Gauss-Legendre quadrature over the Brillouin
//! zone `[-pi, pi]^d`.
//!
//! The zone is seeded with the `2^d` orthants so the origin — the only
//! singularity or peak of Green-type integrands — sits at box corners.
//! Error-driven bisection then grades the mesh dyadically toward it.
//! Several integrand channels (one per lattice displacement) are evaluated
//! in a single pass so that the expensive symbol value is shared.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Mutex;

use std::collections::HashMap;
use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence and cached per order.
pub(crate) fn gauss_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| compute_gauss(n))
        .clone()
}

fn compute_gauss(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi-style initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[derive(Debug, Clone)]
pub(crate) struct QuadOptions {
    pub rel_tol: f64,
    /// Floor below which absolute errors are always accepted; keeps
    /// vanishingly small integrals (deep heat-kernel tails) from demanding
    /// an unreachable relative accuracy.
    pub abs_tol: f64,
    pub max_boxes: usize,
    /// Low / high Gauss orders per dimension for the embedded error estimate.
    pub orders: (usize, usize),
    /// When set, seed each orthant with dyadic shells graded toward the
    /// origin down to this scale instead of a single box. Needed when the
    /// integrand is a spike at the origin much narrower than the zone
    /// (large-time heat kernels): a single seed box can sample the spike
    /// as zero and report false convergence.
    pub seed_scale: Option<f64>,
}

impl QuadOptions {
    pub fn for_dimension(d: usize) -> Self {
        let (rel_tol, abs_tol, orders, max_boxes) = match d {
            0..=3 => (1e-9, 1e-13, (8, 16), 150_000),
            4 => (1e-7, 1e-11, (6, 12), 4_000),
            _ => (1e-6, 1e-10, (4, 8), 1_500),
        };
        QuadOptions {
            rel_tol,
            abs_tol,
            max_boxes,
            orders,
            seed_scale: None,
        }
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn with_seed_scale(mut self, scale: f64) -> Self {
        self.seed_scale = Some(scale);
        self
    }
}

pub(crate) struct QuadResult {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub converged: bool,
    /// Number of boxes evaluated; diagnostic only.
    #[allow(dead_code)]
    pub boxes: usize,
}

struct QuadBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    values: Vec<f64>,
    errors: Vec<f64>,
    score: f64,
}

impl PartialEq for QuadBox {
    fn eq(&self, other: &Self) -> bool {
        self.score == other.score
    }
}
impl Eq for QuadBox {}
impl PartialOrd for QuadBox {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QuadBox {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .partial_cmp(&other.score)
            .unwrap_or(Ordering::Equal)
            // deterministic tie-break on coordinates
            .then_with(|| {
                self.lo
                    .iter()
                    .zip(&other.lo)
                    .find_map(|(a, b)| a.partial_cmp(b).filter(|o| *o != Ordering::Equal))
                    .unwrap_or(Ordering::Equal)
            })
    }
}

/// Integrate `n_channels` channels of `f(theta, out)` over `[-pi, pi]^d`.
///
/// Stops when for every channel `err_k <= rel_tol * (|val_k| + 1e-3 * V)`
/// with `V = max_k |val_k|`, or when the box budget is exhausted; the
/// `converged` flag distinguishes the two. Totals are re-summed in a fixed
/// coordinate order at the end so results do not depend on refinement
/// history round-off.
pub(crate) fn integrate_zone<F>(
    d: usize,
    n_channels: usize,
    mut f: F,
    opts: &QuadOptions,
) -> QuadResult
where
    F: FnMut(&[f64], &mut [f64]),
{
    let pi = std::f64::consts::PI;
    let mut heap: BinaryHeap<QuadBox> = BinaryHeap::new();
    let mut totals = vec![0.0f64; n_channels];
    let mut total_err = vec![0.0f64; n_channels];
    let mut n_boxes = 0usize;

    let push_box = |heap: &mut BinaryHeap<QuadBox>,
                        totals: &mut [f64],
                        total_err: &mut [f64],
                        f: &mut F,
                        lo: Vec<f64>,
                        hi: Vec<f64>| {
        let (values, errors) = eval_box(d, n_channels, f, &lo, &hi, opts.orders);
        let score = errors.iter().cloned().fold(0.0f64, f64::max);
        for k in 0..n_channels {
            totals[k] += values[k];
            total_err[k] += errors[k];
        }
        heap.push(QuadBox {
            lo,
            hi,
            values,
            errors,
            score,
        });
    };

    // seed with the 2^d orthants (origin at a corner of each), each
    // either whole or decomposed into dyadic corner shells [0,a]^d \
    // [0,a/2]^d down to `seed_scale`
    let mut scales = vec![pi];
    if let Some(s) = opts.seed_scale {
        let mut a = pi;
        while a > s.max(pi * 2f64.powi(-44)) {
            a *= 0.5;
            scales.push(a);
        }
    }
    for mask in 0..(1usize << d) {
        let signed = |i: usize, v: f64| if mask & (1 << i) != 0 { -v } else { v };
        let make_box = |spans: &dyn Fn(usize) -> (f64, f64)| {
            let mut lo = vec![0.0; d];
            let mut hi = vec![0.0; d];
            for i in 0..d {
                let (a, b) = spans(i);
                let (a, b) = (signed(i, a), signed(i, b));
                lo[i] = a.min(b);
                hi[i] = a.max(b);
            }
            (lo, hi)
        };
        // shells between consecutive scales: every box keeps at least one
        // axis in the outer half so the shells tile the orthant
        for w in scales.windows(2) {
            let (outer, inner) = (w[0], w[1]);
            for sub in 1..(1usize << d) {
                let (lo, hi) = make_box(&|i| {
                    if sub & (1 << i) != 0 {
                        (inner, outer)
                    } else {
                        (0.0, inner)
                    }
                });
                push_box(&mut heap, &mut totals, &mut total_err, &mut f, lo, hi);
                n_boxes += 1;
            }
        }
        // innermost cube containing the origin corner
        let a_last = *scales.last().unwrap();
        let (lo, hi) = make_box(&|_| (0.0, a_last));
        push_box(&mut heap, &mut totals, &mut total_err, &mut f, lo, hi);
        n_boxes += 1;
    }

    let converged_now = |totals: &[f64], total_err: &[f64]| -> bool {
        let vmax = totals.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        totals
            .iter()
            .zip(total_err)
            .all(|(v, e)| *e <= (opts.rel_tol * (v.abs() + 1e-3 * vmax)).max(opts.abs_tol))
    };

    while n_boxes < opts.max_boxes && !converged_now(&totals, &total_err) {
        let worst = match heap.pop() {
            Some(b) => b,
            None => break,
        };
        for k in 0..n_channels {
            totals[k] -= worst.values[k];
            total_err[k] -= worst.errors[k];
        }
        // bisect along the longest edge
        let axis = (0..d)
            .max_by(|&i, &j| {
                let wi = worst.hi[i] - worst.lo[i];
                let wj = worst.hi[j] - worst.lo[j];
                wi.partial_cmp(&wj).unwrap_or(Ordering::Equal)
            })
            .unwrap_or(0);
        let mid = 0.5 * (worst.lo[axis] + worst.hi[axis]);
        for half in 0..2 {
            let mut lo = worst.lo.clone();
            let mut hi = worst.hi.clone();
            if half == 0 {
                hi[axis] = mid;
            } else {
                lo[axis] = mid;
            }
            push_box(&mut heap, &mut totals, &mut total_err, &mut f, lo, hi);
        }
        n_boxes += 1;
    }

    let converged = converged_now(&totals, &total_err);

    // deterministic final reduction
    let mut boxes: Vec<QuadBox> = heap.into_vec();
    boxes.sort_by(|a, b| {
        a.lo.iter()
            .zip(&b.lo)
            .find_map(|(x, y)| x.partial_cmp(y).filter(|o| *o != Ordering::Equal))
            .unwrap_or(Ordering::Equal)
    });
    let mut values = vec![0.0; n_channels];
    let mut errors = vec![0.0; n_channels];
    for b in &boxes {
        for k in 0..n_channels {
            values[k] += b.values[k];
            errors[k] += b.errors[k];
        }
    }
    QuadResult {
        values,
        errors,
        converged,
        boxes: n_boxes,
    }
}

/// Tensor Gauss on one box with embedded low/high orders; the error is the
/// difference of the two estimates, per channel.
fn eval_box<F>(
    d: usize,
    n_channels: usize,
    f: &mut F,
    lo: &[f64],
    hi: &[f64],
    orders: (usize, usize),
) -> (Vec<f64>, Vec<f64>)
where
    F: FnMut(&[f64], &mut [f64]),
{
    let hi_vals = tensor_gauss(d, n_channels, f, lo, hi, orders.1);
    let lo_vals = tensor_gauss(d, n_channels, f, lo, hi, orders.0);
    let errors = hi_vals
        .iter()
        .zip(&lo_vals)
        .map(|(a, b)| (a - b).abs())
        .collect();
    (hi_vals, errors)
}

fn tensor_gauss<F>(
    d: usize,
    n_channels: usize,
    f: &mut F,
    lo: &[f64],
    hi: &[f64],
    order: usize,
) -> Vec<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let (nodes, weights) = gauss_rule(order);
    let mut sums = vec![0.0; n_channels];
    let mut buf = vec![0.0; n_channels];
    let mut theta = vec![0.0; d];
    let mut idx = vec![0usize; d];
    let half: Vec<f64> = (0..d).map(|i| 0.5 * (hi[i] - lo[i])).collect();
    let mid: Vec<f64> = (0..d).map(|i| 0.5 * (hi[i] + lo[i])).collect();
    let jac: f64 = half.iter().product();
    'outer: loop {
        let mut w = jac;
        for i in 0..d {
            theta[i] = mid[i] + half[i] * nodes[idx[i]];
            w *= weights[idx[i]];
        }
        f(&theta, &mut buf);
        for k in 0..n_channels {
            sums[k] += w * buf[k];
        }
        for i in 0..d {
            idx[i] += 1;
            if idx[i] < order {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let (x, w) = gauss_rule(8);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // exact for degree 15
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i - 2.0 / 15.0).abs() < 1e-13);
    }

    #[test]
    fn integrates_smooth_2d() {
        let opts = QuadOptions::for_dimension(2);
        let r = integrate_zone(
            2,
            1,
            |t, out| out[0] = (t[0].cos() + t[1].cos()).exp(),
            &opts,
        );
        // separable: (int_-pi^pi e^cos)^2 = (2 pi I0(1))^2
        let i0 = 1.2660658777520083; // I_0(1)
        let exact = (2.0 * std::f64::consts::PI * i0).powi(2);
        assert!(r.converged);
        assert!(
            (r.values[0] - exact).abs() < 1e-7 * exact,
            "got {} want {}",
            r.values[0],
            exact
        );
    }

    #[test]
    fn handles_corner_singularity() {
        // int over [-pi,pi]^2 of 1/|theta| (integrable, singular at 0)
        let opts = QuadOptions::for_dimension(2).with_rel_tol(1e-8);
        let r = integrate_zone(
            2,
            1,
            |t, out| out[0] = 1.0 / (t[0] * t[0] + t[1] * t[1]).sqrt(),
            &opts,
        );
        // int_{[-a,a]^2} dx dy / r = 8 a ln(1 + sqrt 2) with a = pi
        let exact = 8.0 * std::f64::consts::PI * (1.0 + std::f64::consts::SQRT_2).ln();
        assert!(r.converged, "err {:?}", r.errors);
        assert!(
            (r.values[0] - exact).abs() < 1e-6 * exact,
            "got {} want {}",
            r.values[0],
            exact
        );
    }
}

