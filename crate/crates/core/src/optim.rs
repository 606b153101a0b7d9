//! Derivative-free minimization (Nelder–Mead with adaptive coefficients).

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_evals: 2000, f_tol: 1e-10, x_tol: 1e-9, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

impl NelderMead {
    pub fn minimize(&self, f: impl Fn(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        let d = x0.len();
        let eval = |x: &[f64]| {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        if d == 0 {
            return Minimum { x: vec![], value: eval(x0), evals: 1, converged: true };
        }
        // Gao–Han coefficients behave better in higher dimension
        let df = d as f64;
        let (alpha, gamma, rho, sigma) =
            if d > 2 { (1.0, 1.0 + 2.0 / df, 0.75 - 0.5 / df, 1.0 - 1.0 / df) } else { (1.0, 2.0, 0.5, 0.5) };

        let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
        for i in 0..d {
            let mut p = x0.to_vec();
            p[i] += if p[i].abs() > 1e-12 { self.initial_step * p[i].abs().max(1.0) } else { self.initial_step };
            simplex.push(p);
        }
        let mut vals: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();
        let mut evals = d + 1;
        let mut converged = false;

        while evals < self.max_evals {
            let mut order: Vec<usize> = (0..=d).collect();
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            vals = order.iter().map(|&i| vals[i]).collect();

            let spread = vals[d] - vals[0];
            let diam = simplex[1..]
                .iter()
                .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if spread.abs() <= self.f_tol * (1.0 + vals[0].abs()) && diam <= self.x_tol {
                converged = true;
                break;
            }
            if diam <= self.x_tol * 1e-3 {
                converged = true;
                break;
            }

            let centroid: Vec<f64> =
                (0..d).map(|k| simplex[..d].iter().map(|p| p[k]).sum::<f64>() / df).collect();
            let along = |t: f64| -> Vec<f64> { (0..d).map(|k| centroid[k] + t * (simplex[d][k] - centroid[k])).collect() };

            let xr = along(-alpha);
            let fr = eval(&xr);
            evals += 1;
            if fr < vals[0] {
                let xe = along(-alpha * gamma);
                let fe = eval(&xe);
                evals += 1;
                if fe < fr {
                    simplex[d] = xe;
                    vals[d] = fe;
                } else {
                    simplex[d] = xr;
                    vals[d] = fr;
                }
                continue;
            }
            if fr < vals[d - 1] {
                simplex[d] = xr;
                vals[d] = fr;
                continue;
            }
            let (xc, fc) = if fr < vals[d] {
                let x = along(-alpha * rho);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(rho);
                let v = eval(&x);
                (x, v)
            };
            evals += 1;
            if fc < vals[d].min(fr) {
                simplex[d] = xc;
                vals[d] = fc;
                continue;
            }
            for i in 1..=d {
                for k in 0..d {
                    simplex[i][k] = simplex[0][k] + sigma * (simplex[i][k] - simplex[0][k]);
                }
                vals[i] = eval(&simplex[i]);
            }
            evals += d;
        }
        let best = (0..=d).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        Minimum { x: simplex[best].clone(), value: vals[best], evals, converged }
    }
}
