//! Composite Simpson and Gauss-Legendre rules.

/// Smallest odd sample count `>= n` (and at least 3), as Simpson needs an even
/// number of intervals.
pub fn simpson_count(n: usize) -> usize {
    let n = n.max(3);
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Composite Simpson weights for `n` equally spaced samples on `[0, t]`.
/// `n` must be odd and at least 3.
pub fn simpson_weights(n: usize, t: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd sample count >= 3");
    let h = t / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Integrates equally spaced samples over `[0, t]` with composite Simpson.
pub fn simpson(samples: &[f64], t: f64) -> f64 {
    simpson_weights(samples.len(), t).iter().zip(samples).map(|(w, f)| w * f).sum()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[0, t]`.
pub fn gauss_legendre_interval(n: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * t;
    (x.iter().map(|&xi| half * (xi + 1.0)).collect(), w.iter().map(|&wi| half * wi).collect())
}

/// Node count for which Gauss-Legendre integrates products of oscillations
/// up to angular frequency `omega_max` over `[0, t]` to near machine precision.
pub fn oscillatory_node_count(omega_max: f64, t: f64) -> usize {
    let phase = 0.5 * omega_max * t;
    (1.1 * phase).ceil() as usize + 24
}
