//! Reference implementations written directly from the model rules, sharing
//! no code with the library.

#![allow(dead_code, clippy::needless_range_loop)]

/// `a[h][k][j]`, 0-based, built entry by entry from the interaction rules.
pub fn table(n: usize, rho: f64) -> Vec<Vec<Vec<f64>>> {
    let mut a = vec![vec![vec![0.0; n]; n]; n];
    for h in 0..n {
        for k in 0..n {
            if h == n - 1 && k == n - 1 {
                a[h][k][h] = 1.0;
            } else if h <= k {
                a[h][k][h] += rho;
                a[h][k][h + 1] += 1.0 - rho;
            } else {
                a[h][k][k] += rho;
                a[h][k][h] += 1.0 - rho;
            }
        }
    }
    a
}

/// Dense gain-minus-loss right-hand side with `eta = eta0 * sum f`.
pub fn rhs(f: &[f64], eta0: f64) -> Vec<f64> {
    let n = f.len();
    let rho: f64 = f.iter().sum();
    let a = table(n, rho);
    (0..n)
        .map(|j| {
            let mut gain = 0.0;
            for h in 0..n {
                for k in 0..n {
                    gain += a[h][k][j] * f[h] * f[k];
                }
            }
            eta0 * rho * (gain - f[j] * rho)
        })
        .collect()
}

/// Equilibrium built class by class: with the lower classes fixed and all
/// remaining mass parked in the top class, the balance of class `j` is a
/// quadratic in `f_j`. Its coefficients are recovered by sampling the dense
/// right-hand side at three points, and the larger root is kept.
pub fn equilibrium(n: usize, rho: f64) -> Vec<f64> {
    let mut f = vec![0.0; n];
    if rho == 0.0 {
        return f;
    }
    for j in 0..n - 1 {
        let head: f64 = f[..j].iter().sum();
        let balance = |x: f64| {
            let mut g = f.clone();
            g[j] = x;
            for v in g.iter_mut().skip(j + 1) {
                *v = 0.0;
            }
            g[n - 1] = rho - head - x;
            rhs(&g, 1.0)[j]
        };
        let (y0, y1, y2) = (balance(0.0), balance(0.5), balance(1.0));
        // y = p x^2 + q x + r through (0, y0), (1/2, y1), (1, y2)
        let r = y0;
        let p = 2.0 * (y2 - 2.0 * y1 + y0);
        let q = y2 - y0 - p;
        let disc = (q * q - 4.0 * p * r).max(0.0);
        let root = (-q - disc.sqrt()) / (2.0 * p);
        f[j] = root.max(0.0);
    }
    let head: f64 = f[..n - 1].iter().sum();
    f[n - 1] = (rho - head).max(0.0);
    f
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn speeds(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / (n - 1) as f64).collect()
}

pub fn flux(f: &[f64]) -> f64 {
    f.iter().zip(speeds(f.len())).map(|(a, v)| a * v).sum()
}

/// Classical RK4 on the dense right-hand side, no clamping.
pub fn rk4(f0: &[f64], t: f64, dt: f64) -> Vec<f64> {
    let steps = (t / dt).round() as usize;
    let mut f = f0.to_vec();
    let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> {
        x.iter().zip(y).map(|(x, y)| x + a * y).collect()
    };
    for _ in 0..steps {
        let k1 = rhs(&f, 1.0);
        let k2 = rhs(&axpy(&f, dt / 2.0, &k1), 1.0);
        let k3 = rhs(&axpy(&f, dt / 2.0, &k2), 1.0);
        let k4 = rhs(&axpy(&f, dt, &k3), 1.0);
        for i in 0..f.len() {
            f[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    f
}
