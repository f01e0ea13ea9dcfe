//! Quadrature rules for expectations under a standard normal.

/// Nodes and weights such that `E[f(U)] ≈ Σ w_k f(u_k)` for `U ~ N(0, 1)`.
/// Weights sum to one, so the rule is itself a discrete distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Panels of the default composite rule.
pub const DEFAULT_PANELS: usize = 64;
/// Gauss–Legendre order per panel of the default composite rule.
pub const DEFAULT_ORDER: usize = 8;
/// Half-width of the truncated integration range; the normal mass beyond
/// it is below 1e-32.
pub const TRUNCATION: f64 = 12.0;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

impl NormalQuadrature {
    /// Composite Gauss–Legendre rule on `[-TRUNCATION, TRUNCATION]` with
    /// `panels` equal panels of `order` nodes each, weighted by the normal
    /// density. Accurate for logistic integrands with steep slopes in U,
    /// where Gauss–Hermite converges slowly.
    pub fn composite(panels: usize, order: usize) -> Self {
        assert!(panels >= 1 && order >= 1, "empty quadrature rule");
        let (gx, gw) = gauss_legendre(order);
        let h = 2.0 * TRUNCATION / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let mid = -TRUNCATION + (k as f64 + 0.5) * h;
            for (z, w) in gx.iter().zip(&gw) {
                let u = mid + 0.5 * h * z;
                nodes.push(u);
                weights.push(0.5 * h * w * (-0.5 * u * u).exp());
            }
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        NormalQuadrature { nodes, weights }
    }

    /// `n`-point Gauss–Hermite rule, accurate up to about 150 nodes. Roots of the physicists' Hermite polynomial are found
    /// by Newton iteration on the orthonormal recurrence, starting from the
    /// usual asymptotic guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        // Change of variables u = sqrt(2) z turns the e^{-z^2} weight into the
        // normal density; renormalize so the weights sum to one exactly.
        let total: f64 = w.iter().sum();
        NormalQuadrature {
            nodes: x
                .iter()
                .rev()
                .map(|z| z * std::f64::consts::SQRT_2)
                .collect(),
            weights: w.iter().rev().map(|v| v / total).collect(),
        }
    }

    /// A single node at `u` with weight one.
    pub fn point(u: f64) -> Self {
        NormalQuadrature {
            nodes: vec![u],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * f(u))
            .sum()
    }
}

impl Default for NormalQuadrature {
    fn default() -> Self {
        NormalQuadrature::composite(DEFAULT_PANELS, DEFAULT_ORDER)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reproduces_normal_moments() {
        for n in [8, 64, 128] {
            let q = NormalQuadrature::new(n);
            assert_abs_diff_eq!(q.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(q.expect(|u| u), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(q.expect(|u| u * u), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(q.expect(|u| u.powi(4)), 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        let q = NormalQuadrature::new(64);
        assert!(q.nodes.windows(2).all(|w| w[0] < w[1]));
        for (a, b) in q.nodes.iter().zip(q.nodes.iter().rev()) {
            assert_abs_diff_eq!(*a, -*b, epsilon = 1e-12);
        }
    }

    #[test]
    fn composite_rule_moments() {
        let q = NormalQuadrature::default();
        assert_eq!(q.len(), DEFAULT_PANELS * DEFAULT_ORDER);
        assert_abs_diff_eq!(q.expect(|u| u * u), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(q.expect(|u| u.powi(4)), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.expect(f64::exp), 0.5f64.exp(), epsilon = 1e-12);
        // A step at zero: E[1{U > 0}] = 1/2 only needs a panel edge there.
        assert_abs_diff_eq!(
            q.expect(|u| f64::from(u8::from(u > 0.0))),
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let int = |f: &dyn Fn(f64) -> f64| x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum::<f64>();
        assert_abs_diff_eq!(int(&|_| 1.0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(int(&|x| x.powi(14)), 2.0 / 15.0, epsilon = 1e-14);
    }

    #[test]
    fn exponential_moment() {
        // E[e^U] = e^{1/2}.
        let q = NormalQuadrature::new(64);
        assert_abs_diff_eq!(q.expect(f64::exp), 0.5f64.exp(), epsilon = 1e-12);
    }
}
