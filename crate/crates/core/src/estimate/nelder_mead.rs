//! Nelder–Mead simplex minimizer with a single restart at convergence.

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below
    /// `ftol * (|f_best| + ftol)`.
    pub ftol: f64,
    /// ... and the simplex diameter falls below `xtol`.
    pub xtol: f64,
    /// Initial step along each coordinate.
    pub step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            ftol: 1e-10,
            xtol: 1e-6,
            step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f`; non-finite values are treated as `+inf`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let n = x0.len();
    if n == 0 {
        let v = eval(x0, &mut evals);
        return Minimum {
            x: Vec::new(),
            f: v,
            evals,
            converged: true,
        };
    }
    let mut start = x0.to_vec();
    let mut best = Minimum {
        x: start.clone(),
        f: eval(&start, &mut evals),
        evals,
        converged: false,
    };
    for round in 0..2 {
        let r = run(&mut eval, &start, best.f, opts, &mut evals);
        let improved = r.1 < best.f;
        if r.1 <= best.f {
            best.x = r.0;
            best.f = r.1;
        }
        best.converged = r.2;
        if !r.2 || evals >= opts.max_evals || (round == 1 && !improved) {
            break;
        }
        start = best.x.clone();
    }
    best.evals = evals;
    best
}

fn run<E: FnMut(&[f64], &mut usize) -> f64>(
    eval: &mut E,
    x0: &[f64],
    f0: f64,
    opts: &NelderMeadOptions,
    evals: &mut usize,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for c in 0..n {
        let mut x = x0.to_vec();
        x[c] += opts.step;
        let v = eval(&x, evals);
        simplex.push((x, v));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let fb = simplex[0].1;
        let fw = simplex[n].1;
        let spread = (fw - fb).abs();
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if fb.is_finite() && spread <= opts.ftol * (fb.abs() + opts.ftol) && diameter <= opts.xtol {
            return (simplex[0].0.clone(), fb, true);
        }
        if *evals >= opts.max_evals {
            return (simplex[0].0.clone(), fb, false);
        }
        let centroid: Vec<f64> = (0..n)
            .map(|c| simplex[..n].iter().map(|(x, _)| x[c]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-alpha);
        let fr = eval(&xr, evals);
        if fr < simplex[0].1 {
            let xe = along(-gamma);
            let fe = eval(&xe, evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < fw {
            let x = along(-rho);
            let v = eval(&x, evals);
            (x, v)
        } else {
            let x = along(rho);
            let v = eval(&x, evals);
            (x, v)
        };
        if fc < fw.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            for (xi, bi) in v.0.iter_mut().zip(&best) {
                *xi = bi + sigma * (*xi - bi);
            }
            v.1 = eval(&v.0, evals);
        }
    }
}
