//! Minimal deterministic Nelder-Mead simplex minimizer.
//!
//! Standard coefficients (reflect 1, expand 2, contract 0.5, shrink 0.5),
//! vertex ordering with ties broken by insertion index, non-finite objective
//! values treated as +inf so the simplex walks away from them. No randomness
//! anywhere: identical inputs give bit-identical trajectories.

pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn guard(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` from `x0`, stopping when the spread of objective values over
/// the simplex drops to `f_tol·(1+|f_best|)` or after `max_iters` iterations.
/// A zero iteration budget skips the search entirely and reports `x0` itself,
/// unconverged.
pub(crate) fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    initial_step: f64,
    f_tol: f64,
    max_iters: usize,
) -> SimplexResult {
    let dim = x0.len();
    if max_iters == 0 {
        return SimplexResult { x: x0.to_vec(), f: guard(f(x0)), iterations: 0, converged: false };
    }
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    verts.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += initial_step;
        verts.push(v);
    }
    let mut fvals: Vec<f64> = verts.iter().map(|v| guard(f(v))).collect();

    let order = |fvals: &[f64]| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..fvals.len()).collect();
        idx.sort_by(|&a, &b| {
            fvals[a].partial_cmp(&fvals[b]).unwrap().then(a.cmp(&b))
        });
        idx
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let idx = order(&fvals);
        let best = idx[0];
        let worst = idx[dim];
        let second_worst = idx[dim - 1];
        let spread = fvals[worst] - fvals[best];
        if spread <= f_tol * (1.0 + fvals[best].abs()) {
            converged = true;
            break;
        }
        iterations += 1;

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; dim];
        for &i in idx.iter().take(dim) {
            for d in 0..dim {
                centroid[d] += verts[i][d];
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }
        let blend = |a: f64| -> Vec<f64> {
            (0..dim)
                .map(|d| centroid[d] + a * (verts[worst][d] - centroid[d]))
                .collect()
        };

        let reflected = blend(-1.0);
        let fr = guard(f(&reflected));
        if fr < fvals[idx[0]] {
            let expanded = blend(-2.0);
            let fe = guard(f(&expanded));
            if fe < fr {
                verts[worst] = expanded;
                fvals[worst] = fe;
            } else {
                verts[worst] = reflected;
                fvals[worst] = fr;
            }
        } else if fr < fvals[second_worst] {
            verts[worst] = reflected;
            fvals[worst] = fr;
        } else {
            let contracted = if fr < fvals[worst] { blend(-0.5) } else { blend(0.5) };
            let fc = guard(f(&contracted));
            if fc < fvals[worst].min(fr) {
                verts[worst] = contracted;
                fvals[worst] = fc;
            } else {
                // shrink toward the best vertex
                let anchor = verts[best].clone();
                for i in 0..verts.len() {
                    if i == best {
                        continue;
                    }
                    for d in 0..dim {
                        verts[i][d] = anchor[d] + 0.5 * (verts[i][d] - anchor[d]);
                    }
                    fvals[i] = guard(f(&verts[i]));
                }
            }
        }
    }

    let idx = order(&fvals);
    SimplexResult {
        x: verts[idx[0]].clone(),
        f: fvals[idx[0]],
        iterations,
        converged,
    }
}
