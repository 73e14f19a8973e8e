//! Phase-one simplex for feasibility of `A x = b, x >= 0` on small dense
//! systems. Bland's rule keeps it from cycling on the highly degenerate
//! systems refinement checks produce.

use ndarray::Array2;

const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 200_000;

pub(crate) struct PhaseOne {
    /// Values of the structural variables at the final basis.
    pub x: Vec<f64>,
    /// Sum of the artificial variables: zero iff the system is feasible.
    #[cfg_attr(not(test), allow(dead_code))]
    pub infeasibility: f64,
}

/// Minimizes the total artificial slack of `A x + s = b` over
/// `x, s >= 0`, starting from the all-artificial basis.
pub(crate) fn phase_one(a: &Array2<f64>, b: &[f64]) -> PhaseOne {
    let (m, n) = a.dim();
    assert_eq!(b.len(), m);
    let width = n + m + 1;
    let rhs = n + m;
    let mut t = vec![0.0; m * width];
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..n {
            t[r * width + c] = sign * a[[r, c]];
        }
        t[r * width + n + r] = 1.0;
        t[r * width + rhs] = sign * b[r];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // reduced costs of the phase-one objective (sum of artificials)
    let mut z = vec![0.0; width];
    for r in 0..m {
        for c in 0..n {
            z[c] -= t[r * width + c];
        }
        z[rhs] -= t[r * width + rhs];
    }

    for _ in 0..MAX_PIVOTS {
        let Some(enter) = (0..n + m).find(|&c| z[c] < -PIVOT_TOL) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let coef = t[r * width + enter];
            if coef > PIVOT_TOL {
                let ratio = t[r * width + rhs] / coef;
                let better = match leave {
                    None => true,
                    Some((lr, best)) => {
                        ratio < best - PIVOT_TOL || (ratio <= best + PIVOT_TOL && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        // Phase one is bounded below by zero, so an entering column always
        // has a positive entry; guard anyway.
        let Some((pr, _)) = leave else {
            break;
        };
        pivot(&mut t, &mut z, width, m, pr, enter);
        basis[pr] = enter;
    }

    let mut x = vec![0.0; n];
    for (r, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[r * width + rhs];
        }
    }
    PhaseOne {
        x,
        infeasibility: (-z[rhs]).max(0.0),
    }
}

fn pivot(t: &mut [f64], z: &mut [f64], width: usize, m: usize, pr: usize, pc: usize) {
    let p = t[pr * width + pc];
    for c in 0..width {
        t[pr * width + c] /= p;
    }
    let (before, rest) = t.split_at_mut(pr * width);
    let (prow, after) = rest.split_at_mut(width);
    for row in before.chunks_mut(width).chain(after.chunks_mut(width)) {
        let f = row[pc];
        if f != 0.0 {
            for c in 0..width {
                row[c] -= f * prow[c];
            }
        }
    }
    let f = z[pc];
    if f != 0.0 {
        for c in 0..width {
            z[c] -= f * prow[c];
        }
    }
    debug_assert_eq!(t.len(), m * width);
}
