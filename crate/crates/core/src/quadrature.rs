//! Gauss–Legendre rules, Chebyshev–Lobatto grids and spectral cumulative integration.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre quadrature of `f` on [a, b].
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(points: usize) -> Self {
        let (nodes, weights) = gauss_legendre(points);
        Self { nodes, weights }
    }

    /// Signed integral: reversing the limits flips the sign.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            let s: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum();
            total += 0.5 * h * s;
        }
        total
    }
}

/// Chebyshev–Lobatto points mapped to [a, b], ordered from a to b.
pub fn lobatto_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|j| {
            let x = -(PI * j as f64 / (n - 1) as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * x
        })
        .collect()
}

/// Barycentric interpolation on a Chebyshev–Lobatto grid.
#[derive(Debug, Clone)]
pub struct ChebInterp {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl ChebInterp {
    pub fn new(nodes: Vec<f64>) -> Self {
        let n = nodes.len();
        let bary = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        Self { nodes, bary }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Lagrange basis values ℓ_j(t).
    pub fn basis(&self, t: f64) -> Vec<f64> {
        if let Some(k) = self.nodes.iter().position(|x| *x == t) {
            let mut e = vec![0.0; self.nodes.len()];
            e[k] = 1.0;
            return e;
        }
        let terms: Vec<f64> = self.nodes.iter().zip(&self.bary).map(|(x, b)| b / (t - x)).collect();
        let s: f64 = terms.iter().sum();
        terms.into_iter().map(|v| v / s).collect()
    }

    pub fn eval(&self, values: &[f64], t: f64) -> f64 {
        self.basis(t).iter().zip(values).map(|(l, v)| l * v).sum()
    }

    /// Q with (Q f)_i = ∫_{t_0}^{t_i} p_f, p_f the interpolant of f.
    pub fn cumulative_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.nodes.len();
        let rule = GaussRule::new(n);
        let t0 = self.nodes[0];
        let mut q = vec![vec![0.0; n]; n];
        for i in 1..n {
            let ti = self.nodes[i];
            let h = ti - t0;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = t0 + 0.5 * h * (1.0 + x);
                for (j, l) in self.basis(t).into_iter().enumerate() {
                    q[i][j] += 0.5 * h * w * l;
                }
            }
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_exact_for_polynomials() {
        let g = GaussRule::new(5);
        let v = g.integrate(|x| x.powi(9) + 3.0 * x * x, 0.0, 2.0, 1);
        assert!((v - (1024.0 / 10.0 + 8.0)).abs() < 1e-12);
        let (_, w) = gauss_legendre(12);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn signed_limits() {
        let g = GaussRule::new(4);
        let a = g.integrate(f64::cos, 0.0, 1.0, 4);
        let b = g.integrate(f64::cos, 1.0, 0.0, 4);
        assert!((a + b).abs() < 1e-15);
        assert!((a - 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn cumulative_integral_is_spectral() {
        let nodes = lobatto_grid(0.5, 1.5, 20);
        let c = ChebInterp::new(nodes.clone());
        let q = c.cumulative_matrix();
        let f: Vec<f64> = nodes.iter().map(|t| t.exp()).collect();
        for i in 0..nodes.len() {
            let got: f64 = q[i].iter().zip(&f).map(|(a, b)| a * b).sum();
            assert!((got - (nodes[i].exp() - 0.5f64.exp())).abs() < 1e-14);
        }
        assert!((c.eval(&f, 0.77) - 0.77f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn reversed_grid_integrates_backwards() {
        let nodes = lobatto_grid(1.0, 0.0, 12);
        let q = ChebInterp::new(nodes.clone()).cumulative_matrix();
        let last: f64 = q[11].iter().zip(&nodes).map(|(a, t)| a * t).sum();
        assert!((last + 0.5).abs() < 1e-14);
    }
}
