//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use ripforge::DesignMatrix;

/// Eigenvalues of a symmetric matrix of order at most 3, in closed form.
pub fn small_eigenvalues(g: &[Vec<f64>]) -> Vec<f64> {
    match g.len() {
        1 => vec![g[0][0]],
        2 => {
            let (a, b, d) = (g[0][0], g[0][1], g[1][1]);
            let mid = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            vec![mid - rad, mid + rad]
        }
        3 => {
            let off = g[0][1].powi(2) + g[0][2].powi(2) + g[1][2].powi(2);
            let q = (g[0][0] + g[1][1] + g[2][2]) / 3.0;
            let p2 = (g[0][0] - q).powi(2) + (g[1][1] - q).powi(2) + (g[2][2] - q).powi(2) + 2.0 * off;
            if p2 == 0.0 {
                return vec![q; 3];
            }
            let p = (p2 / 6.0).sqrt();
            let b = |i: usize, j: usize| (g[i][j] - if i == j { q } else { 0.0 }) / p;
            let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
            let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
            let hi = q + 2.0 * p * phi.cos();
            let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            vec![lo, 3.0 * q - hi - lo, hi]
        }
        d => panic!("closed form only up to order 3, got {d}"),
    }
}

fn subsets(p: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for j in start..p {
        cur.push(j);
        subsets(p, k, j + 1, cur, out);
        cur.pop();
    }
}

/// `max_S ||X_S^T X_S - I||` by recursion over subsets and closed-form
/// eigenvalues of the Gram submatrix built from raw entries (`k <= 3`).
pub fn brute_margin(x: &DesignMatrix, k: usize) -> f64 {
    let mut all = Vec::new();
    subsets(x.p(), k, 0, &mut Vec::new(), &mut all);
    let mut best: f64 = 0.0;
    for s in all {
        let g: Vec<Vec<f64>> = s
            .iter()
            .map(|&a| s.iter().map(|&b| (0..x.n()).map(|i| x.get(i, a) * x.get(i, b)).sum()).collect())
            .collect();
        for ev in small_eigenvalues(&g) {
            best = best.max((ev - 1.0).abs());
        }
    }
    best
}
