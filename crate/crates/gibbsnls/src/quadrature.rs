//! Gauss–Legendre quadrature on an interval.

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[a, b]`.
///
/// Nodes are computed by Newton iteration on the Legendre recurrence with the
/// usual Chebyshev-like initial guesses, accurate to machine precision.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Initial guess for the i-th root of P_n on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_n'(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..n {
        nodes[i] = mid + half * nodes[i];
        weights[i] *= half;
    }
    (nodes, weights)
}

/// Integrate `f` over `[a, b]` with the given order.
pub fn integrate<F: Fn(f64) -> f64>(order: usize, a: f64, b: f64, f: F) -> f64 {
    let (x, w) = gauss_legendre(order, a, b);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        // order q is exact up to degree 2q-1
        let val = integrate(5, 0.0, 1.0, |x| x.powi(9));
        assert!((val - 0.1).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_length() {
        let (_, w) = gauss_legendre(37, -2.0, 3.0);
        let total: f64 = w.iter().sum();
        assert!((total - 5.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        // \int_0^1 cos(40 x) dx = sin(40)/40
        let val = integrate(64, 0.0, 1.0, |x| (40.0 * x).cos());
        assert!((val - (40.0f64).sin() / 40.0).abs() < 1e-13);
    }
}
