use std::collections::VecDeque;

use crate::problems::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsSettings {
    pub memory: usize,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 1000,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: ParamVector,
    pub grad: ParamVector,
    pub iterations: usize,
    /// Whether `stop` accepted the returned point.
    pub accepted: bool,
}

/// Limited-memory BFGS with halving backtracking. `value_grad` returns the
/// objective and its gradient; `stop(x, grad)` is checked at the start point
/// and after every step, and ends the run when it returns `true`.
pub fn minimize_lbfgs(
    x0: &ParamVector,
    mut value_grad: impl FnMut(&ParamVector) -> (f64, ParamVector),
    mut stop: impl FnMut(&ParamVector, &ParamVector) -> bool,
    settings: LbfgsSettings,
) -> LbfgsOutcome {
    let mut x = x0.clone();
    let (mut fx, mut g) = value_grad(&x);
    let mut history: VecDeque<(ParamVector, ParamVector, f64)> = VecDeque::with_capacity(settings.memory);
    let mut iterations = 0;
    for it in 0..settings.max_iter {
        if stop(&x, &g) {
            return LbfgsOutcome {
                x,
                grad: g,
                iterations: it,
                accepted: true,
            };
        }
        let mut dir = -two_loop(&g, &history);
        let mut slope = g.dot(&dir);
        if !(slope < 0.0) {
            history.clear();
            dir = -&g;
            slope = -g.norm_squared();
        }
        if slope == 0.0 {
            break;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..settings.max_backtracks {
            let candidate = &x + &dir * step;
            let (fc, gc) = value_grad(&candidate);
            let armijo = fc <= fx + settings.armijo * step * slope;
            // Near the optimum the decrease is below the rounding of f, so a
            // step that keeps f flat and shrinks the gradient also counts.
            let flat = fc <= fx + 1e-13 * (1.0 + fx.abs()) && gc.norm_squared() < g.norm_squared();
            if fc.is_finite() && (armijo || flat) {
                accepted = Some((candidate, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            log::debug!("lbfgs line search failed at iteration {it}");
            return LbfgsOutcome {
                x,
                grad: g,
                iterations: it,
                accepted: false,
            };
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-16 * s.norm() * y.norm() && sy > 0.0 {
            if history.len() == settings.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        iterations += 1;
    }
    let accepted = stop(&x, &g);
    LbfgsOutcome {
        iterations,
        x,
        grad: g,
        accepted,
    }
}

/// Applies the inverse-Hessian approximation to `g`.
fn two_loop(g: &ParamVector, history: &VecDeque<(ParamVector, ParamVector, f64)>) -> ParamVector {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * s.dot(&q);
        q.axpy(-a, y, 1.0);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        q *= s.dot(y) / y.norm_squared();
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s, 1.0);
    }
    q
}
