//! Nelder–Mead simplex minimiser.

#[derive(Debug, Clone)]
pub struct NelderMead {
    /// Initial simplex edge along each axis.
    pub step: f64,
    /// Stop once the simplex diameter falls below `xtol · (1 + |x_best|∞)`.
    pub xtol: f64,
    pub max_evals: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { step: 0.5, xtol: 1e-8, max_evals: 20_000 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

impl NelderMead {
    pub fn minimize(&self, f: &dyn Fn(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let eval = |x: &[f64], count: &mut usize| {
            *count += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut evals = 0;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), eval(x0, &mut evals)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.step;
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }
        let mut converged = false;
        while evals < self.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = &simplex[0].0;
            let scale = 1.0 + best.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| x.iter().zip(best).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
                .fold(0.0f64, f64::max);
            if diameter < self.xtol * scale {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / n as f64;
                }
            }
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };
            let xr = along(REFLECT);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(REFLECT * EXPAND);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst.1 {
                let x = along(REFLECT * CONTRACT);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = along(-CONTRACT);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if fc < fr.min(worst.1) {
                simplex[n] = (xc, fc);
                continue;
            }
            let b = simplex[0].0.clone();
            for (x, v) in simplex.iter_mut().skip(1) {
                for (xi, bi) in x.iter_mut().zip(&b) {
                    *xi = bi + SHRINK * (*xi - bi);
                }
                *v = eval(x, &mut evals);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum { x, value, evals, converged }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = NelderMead::default().minimize(&f, &[-1.2, 1.0]);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn quadratic_3d() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 0.5 * (x[2] - 2.0).powi(2);
        let m = NelderMead::default().minimize(&f, &[0.0, 0.0, 0.0]);
        assert!((m.x[0] - 0.3).abs() < 1e-7 && (m.x[1] + 1.0).abs() < 1e-7 && (m.x[2] - 2.0).abs() < 1e-7);
    }
}
