//! Derivative-free minimization (Nelder-Mead simplex).

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Initial simplex edge length along each coordinate.
    pub step: f64,
    /// Stop once the spread of objective values across the simplex is below this.
    pub f_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            step: 0.5,
            f_tol: 1e-9,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from `x0` with the standard reflection, expansion,
/// contraction and shrink coefficients (1, 2, 1/2, 1/2).
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.step;
        let fv = f(&v);
        simplex.push((v, fv));
    }

    let mut centroid = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        // best to worst; the sort is stable so ties keep their order
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[n].1 - simplex[0].1 <= opts.f_tol {
            converged = true;
            break;
        }
        iterations += 1;

        for (k, c) in centroid.iter_mut().enumerate() {
            *c = simplex[..n].iter().map(|v| v.0[k]).sum::<f64>() / n as f64;
        }
        let along = |worst: &[f64], t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let (f_best, f_second, f_worst) = (simplex[0].1, simplex[n - 1].1, simplex[n].1);

        let reflected = along(&simplex[n].0, -1.0);
        let f_r = f(&reflected);
        if f_r < f_best {
            let expanded = along(&simplex[n].0, -2.0);
            let f_e = f(&expanded);
            simplex[n] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
            continue;
        }
        if f_r < f_second {
            simplex[n] = (reflected, f_r);
            continue;
        }
        let contracted = along(&simplex[n].0, if f_r < f_worst { -0.5 } else { 0.5 });
        let f_c = f(&contracted);
        if f_c < f_worst.min(f_r) {
            simplex[n] = (contracted, f_c);
            continue;
        }
        // shrink toward the best vertex
        let (head, tail) = simplex.split_at_mut(1);
        let best = &head[0].0;
        for vertex in tail {
            for (x, b) in vertex.0.iter_mut().zip(best) {
                *x = b + 0.5 * (*x - b);
            }
            vertex.1 = f(&vertex.0);
        }
    }

    let (x, value) = simplex
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("simplex has n + 1 vertices");
    Minimum {
        x,
        value,
        iterations,
        converged,
    }
}
