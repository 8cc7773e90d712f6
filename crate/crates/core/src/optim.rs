//! Derivative-free minimization (Nelder–Mead) for the GARCH likelihood.

#[derive(Debug, Clone)]
pub(crate) struct NelderMeadOptions {
    pub max_iter: usize,
    /// Convergence threshold on the simplex size: the largest coordinate
    /// distance between any vertex and the best vertex.
    pub tol: f64,
    pub initial_step: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn simplex_size(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .flat_map(|v| v.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

fn eval<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64]) -> f64 {
    let v = f(x);
    // non-finite objective values are treated as +inf so the simplex moves away
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// One Nelder–Mead run from `x0`, spending at most `budget` iterations.
fn run<F: FnMut(&[f64]) -> f64>(f: &mut F, x0: &[f64], opts: &NelderMeadOptions, budget: usize) -> Minimum {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(f, v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if simplex_size(&simplex) < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(REFLECT);
        let f_reflected = eval(f, &reflected);
        if f_reflected < values[0] {
            let expanded = along(EXPAND);
            let f_expanded = eval(f, &expanded);
            if f_expanded < f_reflected {
                simplex[n] = expanded;
                values[n] = f_expanded;
            } else {
                simplex[n] = reflected;
                values[n] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_reflected;
            continue;
        }
        let (contracted, f_contracted) = if f_reflected < values[n] {
            let c = along(CONTRACT);
            let fc = eval(f, &c);
            (c, fc)
        } else {
            let c = along(-CONTRACT);
            let fc = eval(f, &c);
            (c, fc)
        };
        if f_contracted < values[n].min(f_reflected) {
            simplex[n] = contracted;
            values[n] = f_contracted;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + SHRINK * (v - b))
                .collect();
            values[i] = eval(f, &shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

/// Minimizes `f` from `x0`. After the simplex first collapses the search is
/// restarted once around the incumbent, which guards against premature
/// collapse on ridges; the result is converged only if the restart also
/// collapses within the remaining iteration budget.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let first = run(&mut f, x0, opts, opts.max_iter);
    if !first.converged {
        return first;
    }
    let remaining = opts.max_iter - first.iterations;
    let second = run(&mut f, &first.x, opts, remaining);
    let iterations = first.iterations + second.iterations;
    if second.value <= first.value {
        Minimum { iterations, ..second }
    } else {
        Minimum {
            iterations,
            converged: second.converged,
            ..first
        }
    }
}
