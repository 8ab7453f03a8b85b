//! Gauss–Legendre quadrature on the reference element `[0, 1]`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::num;

/// A quadrature rule on `[0, 1]`; weights are positive and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

const MAX_POINTS: usize = 16;

/// Gauss–Legendre rule with `n_points` nodes on `[0, 1]`, exact for
/// polynomials of degree `2 n_points - 1`. Nodes are found by Newton
/// iteration on the Legendre polynomial.
pub fn gauss_rule(n_points: usize) -> Result<QuadratureRule> {
    if n_points == 0 || n_points > MAX_POINTS {
        return Err(Error::InvalidArgument(format!(
            "gauss rule supports 1..={MAX_POINTS} points, got {n_points}"
        )));
    }
    let n = n_points;
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    // Nodes on [-1, 1], exploiting symmetry; initial guesses from the
    // Chebyshev approximation.
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = num::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map to [0, 1]: node (x+1)/2, weight w/2.
        points.push((1.0 - x) / 2.0);
        weights.push(w / 2.0);
        if !(n % 2 == 1 && i == m - 1) {
            points.push((1.0 + x) / 2.0);
            weights.push(w / 2.0);
        }
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap());
    Ok(QuadratureRule {
        points: idx.iter().map(|&i| points[i]).collect(),
        weights: idx.iter().map(|&i| weights[i]).collect(),
    })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_is_midpoint() {
        let q = gauss_rule(1).unwrap();
        assert!((q.points[0] - 0.5).abs() < 1e-15);
        assert!((q.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_nodes() {
        let q = gauss_rule(2).unwrap();
        let off = 1.0 / (2.0 * num::sqrt(3.0));
        assert!((q.points[0] - (0.5 - off)).abs() < 1e-14);
        assert!((q.points[1] - (0.5 + off)).abs() < 1e-14);
    }

    #[test]
    fn five_point_integrates_x9() {
        let q = gauss_rule(5).unwrap();
        let integral: f64 = q
            .points
            .iter()
            .zip(q.weights.iter())
            .map(|(&x, &w)| w * crate::num::powi(x, 9))
            .sum();
        assert!((integral - 0.1).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_one() {
        for n in 1..=16 {
            let q = gauss_rule(n).unwrap();
            let s: f64 = q.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "n={n}: {s}");
            assert!(q.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn polynomial_exactness() {
        // Degree 2n-1 exactness: ∫₀¹ x^d dx = 1/(d+1).
        for n in 1..=16 {
            let q = gauss_rule(n).unwrap();
            for d in 0..2 * n {
                let integral: f64 = q
                    .points
                    .iter()
                    .zip(q.weights.iter())
                    .map(|(&x, &w)| w * crate::num::powi(x, d as i32))
                    .sum();
                let exact = 1.0 / (d as f64 + 1.0);
                assert!(
                    (integral - exact).abs() < 1e-13,
                    "n={n} d={d}: {integral} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(gauss_rule(0).is_err());
        assert!(gauss_rule(17).is_err());
    }
}
