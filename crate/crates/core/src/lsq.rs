//! Least squares under homogeneous linear inequality constraints.
//!
//! Minimizes `|A x - y|^2` subject to `G x >= 0` with a primal active-set
//! method started from a feasible point. Every iterate stays feasible and
//! the objective never increases.

use nalgebra::{DMatrix, DVector};

pub(crate) const MAX_ITERATIONS: usize = 1000;
const STEP_TOL: f64 = 1e-9;
const MULTIPLIER_TOL: f64 = 1e-10;

pub(crate) fn solve(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    g: &DMatrix<f64>,
    x0: DVector<f64>,
) -> DVector<f64> {
    let p = a.ncols();
    let q = a.transpose() * a;
    let aty = a.transpose() * y;
    let mut x = x0;
    let mut working: Vec<usize> = Vec::new();

    for i in 0..g.nrows() {
        if g.row(i).dot(&x.transpose()).abs() <= 1e-12 && independent(g, &working, i) {
            working.push(i);
        }
    }

    for _ in 0..MAX_ITERATIONS {
        let grad = &q * &x - &aty;
        let n = p + working.len();
        let mut kkt = DMatrix::zeros(n, n);
        kkt.view_mut((0, 0), (p, p)).copy_from(&q);
        for (r, &ci) in working.iter().enumerate() {
            for c in 0..p {
                kkt[(p + r, c)] = g[(ci, c)];
                kkt[(c, p + r)] = g[(ci, c)];
            }
        }
        let mut rhs = DVector::zeros(n);
        rhs.rows_mut(0, p).copy_from(&(-&grad));
        let sol = match kkt.svd(true, true).solve(&rhs, 1e-13) {
            Ok(s) => s,
            Err(_) => break,
        };
        let step = sol.rows(0, p).into_owned();

        if step.amax() <= STEP_TOL * (1.0 + x.amax()) {
            // Multipliers of G x >= 0 are the negated KKT duals.
            let worst = working
                .iter()
                .enumerate()
                .map(|(r, _)| (r, -sol[p + r]))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((r, lambda)) if lambda < -MULTIPLIER_TOL => {
                    working.remove(r);
                }
                _ => break,
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for i in 0..g.nrows() {
            if working.contains(&i) {
                continue;
            }
            let gp = g.row(i).dot(&step.transpose());
            if gp < -1e-14 {
                let slack = g.row(i).dot(&x.transpose()).max(0.0);
                let ratio = slack / -gp;
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(i);
                }
            }
        }
        x += alpha * &step;
        if let Some(i) = blocking {
            working.push(i);
        }
    }
    x
}

fn independent(g: &DMatrix<f64>, working: &[usize], candidate: usize) -> bool {
    let rows: Vec<_> = working
        .iter()
        .chain(std::iter::once(&candidate))
        .map(|&i| g.row(i).into_owned())
        .collect();
    let m = DMatrix::from_rows(&rows);
    m.rank(1e-10) == rows.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_solution_when_interior() {
        // y = x, minimizer x = (1, 2) satisfies x >= 0.
        let a = DMatrix::identity(2, 2);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let g = DMatrix::identity(2, 2);
        let x = solve(&a, &y, &g, DVector::from_vec(vec![0.5, 0.5]));
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bound_becomes_active() {
        let a = DMatrix::identity(2, 2);
        let y = DVector::from_vec(vec![-1.0, 2.0]);
        let g = DMatrix::identity(2, 2);
        let x = solve(&a, &y, &g, DVector::from_vec(vec![1.0, 1.0]));
        assert!(x[0].abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ordering_constraint() {
        // Fit x0, x1 to (3, 1) subject to x1 - x0 >= 0: best is both 2.
        let a = DMatrix::identity(2, 2);
        let y = DVector::from_vec(vec![3.0, 1.0]);
        let g = DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]);
        let x = solve(&a, &y, &g, DVector::from_vec(vec![0.0, 5.0]));
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn releases_constraint_with_negative_multiplier() {
        // Start on the bound x0 = 0 although the optimum is interior.
        let a = DMatrix::identity(2, 2);
        let y = DVector::from_vec(vec![1.0, 1.0]);
        let g = DMatrix::identity(2, 2);
        let x = solve(&a, &y, &g, DVector::from_vec(vec![0.0, 0.0]));
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
