use ndarray::{Array1, Array2, ArrayView2, Zip};

pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITERS: usize = 1000;

/// Largest absolute eigenvalue of a symmetric matrix by power iteration.
///
/// Every matrix this crate feeds in is entrywise nonnegative, so the
/// all-ones start vector has a nonzero component along the Perron vector.
pub fn spectral_norm_sym(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    if n == 0 {
        return 0.0;
    }
    // a tiny deterministic tilt keeps the start off any exact eigenvector
    // orthogonal to the dominant one for signed inputs
    let mut v = Array1::from_shape_fn(n, |i| 1.0 + 1e-3 * ((i % 7) as f64));
    let norm = v.dot(&v).sqrt();
    v /= norm;

    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let av = a.dot(&v);
        let next = av.dot(&av).sqrt();
        if next == 0.0 {
            return 0.0;
        }
        v = av / next;
        let converged = (next - estimate).abs() <= POWER_TOL * next.max(1.0);
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

/// Frobenius inner product.
pub fn inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + x * y)
}

pub fn inner_view(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, &x, &y| acc + x * y)
}

pub fn frobenius_sq(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// Squared Frobenius distance `||x - w h||_F^2`.
pub fn residual_sq(x: &Array2<f64>, w: &Array2<f64>, h: &Array2<f64>) -> f64 {
    let wh = w.dot(h);
    Zip::from(x).and(&wh).fold(0.0, |acc, &a, &b| {
        let d = a - b;
        acc + d * d
    })
}

/// Elementwise `max(x, 0)`.
pub fn project_nonneg(mut x: Array2<f64>) -> Array2<f64> {
    x.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
    x
}

/// Squared norm of the projected gradient: entries at the zero bound only
/// contribute their negative part.
pub fn projected_grad_sq(x: &Array2<f64>, g: &Array2<f64>) -> f64 {
    Zip::from(x).and(g).fold(0.0, |acc, &xv, &gv| {
        let p = if xv > 0.0 { gv } else { gv.min(0.0) };
        acc + p * p
    })
}
