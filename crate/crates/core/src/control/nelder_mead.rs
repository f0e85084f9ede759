//! Nelder–Mead simplex search in scaled coordinates.

/// Coordinates with `clamp[i] == true` are projected onto `[0, 1]`; the
/// others are unconstrained.
#[derive(Debug, Clone)]
pub struct Settings {
    pub clamp: Vec<bool>,
    pub initial_step: f64,
    /// Stop once the simplex diameter falls below this.
    pub tol: f64,
    pub max_evals: usize,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub best: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], clamp: &[bool]) {
    for (v, &c) in x.iter_mut().zip(clamp) {
        if c {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..simplex.len() {
        for j in i + 1..simplex.len() {
            let dist = simplex[i]
                .iter()
                .zip(&simplex[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            d = d.max(dist);
        }
    }
    d
}

/// Minimizes `f` from `start`. `f` may return `+∞` for infeasible points.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, start: &[f64], s: &Settings) -> Outcome {
    let n = start.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };

    let mut x0 = start.to_vec();
    project(&mut x0, &s.clamp);
    let mut simplex = vec![x0.clone()];
    for i in 0..n {
        let mut v = x0.clone();
        let step = if s.clamp[i] && v[i] + s.initial_step > 1.0 {
            -s.initial_step
        } else {
            s.initial_step
        };
        v[i] += step;
        project(&mut v, &s.clamp);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if diameter(&simplex) < s.tol {
            converged = true;
            break;
        }
        if evals >= s.max_evals {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (w - c))
                .collect();
            project(&mut p, &s.clamp);
            p
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let xc = along(if fr < values[n] { -0.5 } else { 0.5 });
        let fc = eval(&xc, &mut evals);
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=n {
            let mut v: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + 0.5 * (x - b))
                .collect();
            project(&mut v, &s.clamp);
            values[i] = eval(&v, &mut evals);
            simplex[i] = v;
        }
    }
    Outcome {
        best: simplex[0].clone(),
        value: values[0],
        evals,
        converged,
    }
}

/// Point `index` of the Halton sequence in `dim` dimensions.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    (0..dim)
        .map(|d| {
            let base = PRIMES[d % PRIMES.len()];
            let mut i = index;
            let mut f = 1.0;
            let mut r = 0.0;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}
