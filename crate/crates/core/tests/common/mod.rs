#![allow(dead_code)]

use std::io::Write;

use drocp_core::{NodeMatrix, ProblemSpec, TimeGrid, TrajectoryPair};

/// Writes straight to the process stderr so the line shows up even when the
/// harness captures test output.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    let line = format!(
        "acceptance criterion {criterion}: {} | {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

/// Gaussian elimination with partial pivoting on a small dense system.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|i, j| a[*i][col].abs().total_cmp(&a[*j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Unconstrained optimality system of the Euler-discretized problem, solved
/// by linear shooting on `λ_0`:
///
/// ```text
/// x_{k+1} = x_k + h(A x_k + B u_k),   u_k = −R⁻¹Bᵀλ_k
/// (I + hAᵀ) λ_{k+1} = λ_k − h Q x_{k+1}
/// ```
///
/// Time-invariant problems only.
pub fn tpbvp_shooting(spec: &ProblemSpec, grid: &TimeGrid) -> TrajectoryPair {
    let a = spec.a().as_constant().expect("constant A").to_rows();
    let b = spec.b().as_constant().expect("constant B").to_rows();
    let q = spec.q().as_constant().expect("constant Q").to_vec();
    let r = spec.r().as_constant().expect("constant R").to_vec();
    let (n, m) = (spec.state_dim(), spec.control_dim());
    let h = grid.step();
    let nodes = grid.n_nodes();

    // (I + hAᵀ), solved per step with gauss_solve.
    let step: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } + h * a[j][i]).collect())
        .collect();
    let control = |lam: &[f64]| -> Vec<f64> {
        (0..m).map(|j| -(0..n).map(|i| b[i][j] * lam[i]).sum::<f64>() / r[j]).collect()
    };
    let run = |x0: &[f64], lam0: &[f64]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut xs = vec![x0.to_vec()];
        let mut ls = vec![lam0.to_vec()];
        for k in 0..nodes - 1 {
            let (x, l) = (&xs[k], &ls[k]);
            let u = control(l);
            let ax = mat_vec(&a, x);
            let bu = mat_vec(&b, &u);
            let xn: Vec<f64> = (0..n).map(|i| x[i] + h * (ax[i] + bu[i])).collect();
            let rhs: Vec<f64> = (0..n).map(|i| l[i] - h * q[i] * xn[i]).collect();
            let ln = gauss_solve(step.clone(), rhs);
            xs.push(xn);
            ls.push(ln);
        }
        (xs, ls)
    };

    let zero = vec![0.0; n];
    let (base, _) = run(spec.x0(), &zero);
    let miss: Vec<f64> = (0..n).map(|i| base[nodes - 1][i] - spec.xf()[i]).collect();
    let mut jac = vec![vec![0.0; n]; n];
    for c in 0..n {
        let mut e = zero.clone();
        e[c] = 1.0;
        let (xs, _) = run(&zero, &e);
        for rr in 0..n {
            jac[rr][c] = xs[nodes - 1][rr];
        }
    }
    let lam0 = gauss_solve(jac, miss.iter().map(|v| -v).collect());
    let (xs, ls) = run(spec.x0(), &lam0);
    TrajectoryPair {
        x: NodeMatrix::from_fn(nodes, n, |k, i| xs[k][i]),
        u: NodeMatrix::from_fn(nodes, m, |k, j| control(&ls[k])[j]),
    }
}

/// Rows `0, stride, 2·stride, …` of a fine-grid matrix.
pub fn subsample(fine: &NodeMatrix, stride: usize) -> NodeMatrix {
    let nodes = (fine.nodes() - 1) / stride + 1;
    NodeMatrix::from_fn(nodes, fine.dim(), |k, i| fine.get(k * stride, i))
}
