//! Box-constrained L-BFGS minimizer with a backtracking Armijo line search.

#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    pub max_iterations: usize,
    pub memory: usize,
    /// Stop when the projected gradient's infinity norm falls below this.
    pub gradient_tolerance: f64,
    /// Stop when the relative objective decrease falls below this.
    pub value_tolerance: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            max_iterations: 200,
            memory: 8,
            gradient_tolerance: 1e-5,
            value_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Gradient with components that push against an active bound zeroed.
fn projected_gradient(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), &(lo, hi))| {
            if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

/// Minimizes `f`, which returns the value and gradient, or `None` where the
/// objective is undefined (the line search then backtracks).
pub fn minimize<F>(mut f: F, x0: &[f64], bounds: &[(f64, f64)], config: &LbfgsConfig) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let (mut fx, mut g) = f(&x)?;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let pg = projected_gradient(&x, &g, bounds);
        if pg.iter().fold(0.0f64, |m, v| m.max(v.abs())) < config.gradient_tolerance {
            break;
        }
        iterations += 1;

        // two-loop recursion on the projected gradient
        let mut d = pg.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
            alphas.push((a, rho));
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        d.iter_mut().for_each(|v| *v = -*v);
        for (di, pgi) in d.iter_mut().zip(&pg) {
            if *pgi == 0.0 {
                *di = 0.0;
            }
        }
        if dot(&d, &pg) >= 0.0 {
            // not a descent direction: restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            d = pg.iter().map(|v| -v).collect();
        }

        let mut step = if s_hist.is_empty() {
            (1.0 / pg.iter().map(|v| v.abs()).fold(0.0, f64::max)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..40 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            project(&mut xn, bounds);
            if let Some((fn_, gn)) = f(&xn) {
                let moved: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                if fn_.is_finite() && fn_ <= fx + 1e-4 * dot(&moved, &g) {
                    accepted = Some((xn, fn_, gn, moved));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn, s)) = accepted else {
            break;
        };
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > config.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        let decrease = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if decrease.abs() <= config.value_tolerance * fx.abs().max(1.0) {
            break;
        }
    }
    Some(Minimum {
        x,
        value: fx,
        iterations,
    })
}
