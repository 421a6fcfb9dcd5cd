//! Quadrature on the reference triangle `{(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}`.

/// Points and weights on the reference triangle; weights sum to 1/2.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Seven-point rule exact for polynomials of degree 5.
    pub fn degree5() -> Self {
        let r15 = 15f64.sqrt();
        let (a1, b1) = ((9.0 + 2.0 * r15) / 21.0, (6.0 - r15) / 21.0);
        let (a2, b2) = ((9.0 - 2.0 * r15) / 21.0, (6.0 + r15) / 21.0);
        let (w1, w2) = ((155.0 - r15) / 1200.0, (155.0 + r15) / 1200.0);
        let third = 1.0 / 3.0;
        let points = vec![
            [third, third],
            [b1, b1],
            [a1, b1],
            [b1, a1],
            [b2, b2],
            [a2, b2],
            [b2, a2],
        ];
        let weights = [9.0 / 40.0, w1, w1, w1, w2, w2, w2]
            .iter()
            .map(|w| 0.5 * w)
            .collect();
        QuadratureRule {
            points,
            weights,
            degree: 5,
        }
    }

    /// Collapsed (Duffy) tensor Gauss–Legendre rule with `n` points per
    /// direction, exact to degree `2n - 2`.
    pub fn collapsed_gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            // Map [-1, 1] -> [0, 1].
            let u = 0.5 * (x[i] + 1.0);
            for j in 0..n {
                let v = 0.5 * (x[j] + 1.0);
                points.push([u, v * (1.0 - u)]);
                weights.push(0.25 * w[i] * w[j] * (1.0 - u));
            }
        }
        QuadratureRule {
            points,
            weights,
            degree: 2 * n - 2,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    // ∫_T ξ^p η^q = p! q! / (p + q + 2)!
    fn exact_monomial(p: u32, q: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(p) * fact(q) / fact(p + q + 2)
    }

    fn check(rule: &QuadratureRule, tol: f64) {
        assert!((rule.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        for p in 0..=rule.degree as u32 {
            for q in 0..=(rule.degree as u32 - p) {
                let got: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x[0].powi(p as i32) * x[1].powi(q as i32))
                    .sum();
                let want = exact_monomial(p, q);
                assert!((got - want).abs() < tol, "ξ^{p} η^{q}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn degree5_rule_is_exact() {
        check(&QuadratureRule::degree5(), 1e-15);
    }

    #[test]
    fn collapsed_rule_is_exact() {
        check(&QuadratureRule::collapsed_gauss(6), 1e-15);
        assert_eq!(QuadratureRule::collapsed_gauss(6).degree, 10);
    }

    #[test]
    fn degree5_rule_misses_degree6() {
        let rule = QuadratureRule::degree5();
        let got: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * x[0].powi(6))
            .sum();
        assert!((got - exact_monomial(6, 0)).abs() > 1e-6);
    }
}
