//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
pub struct LbfgsSettings {
    pub memory: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Relative objective change over `window` iterations that counts as
    /// converged.
    pub energy_tolerance: f64,
    pub window: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self { memory: 12, max_iterations: 2000, gradient_tolerance: 1e-9, energy_tolerance: 1e-15, window: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    EnergyStalled,
    MaxIterations,
    LineSearchFailed,
    NonFinite,
}

#[derive(Clone, Debug)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: StopReason,
}

impl LbfgsResult {
    pub fn converged(&self) -> bool {
        matches!(self.reason, StopReason::Gradient | StopReason::EnergyStalled)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Counter<F> {
    f: F,
    count: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Counter<F> {
    fn eval(&mut self, x: &[f64]) -> (f64, Vec<f64>) {
        self.count += 1;
        (self.f)(x)
    }
}

pub fn minimize<F>(f: F, x0: &[f64], settings: &LbfgsSettings) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut fun = Counter { f, count: 0 };
    let mut x = x0.to_vec();
    let (mut fx, mut g) = fun.eval(&x);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return LbfgsResult { x, f: fx, grad_norm: f64::NAN, iterations: 0, evaluations: 1, reason: StopReason::NonFinite };
    }
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut history = vec![fx];
    let mut iterations = 0;
    let reason = loop {
        let gn = norm(&g);
        if gn < settings.gradient_tolerance {
            break StopReason::Gradient;
        }
        if iterations >= settings.max_iterations {
            break StopReason::MaxIterations;
        }
        let mut d = two_loop(&g, &mem);
        if dot(&d, &g) >= 0.0 {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
        }
        let alpha0 = if mem.is_empty() { (1.0 / gn).min(1.0) } else { 1.0 };
        let step = line_search(&mut fun, &x, fx, &g, &d, alpha0);
        let (alpha, fnew, gnew) = match step {
            Some(s) => s,
            None if !mem.is_empty() => {
                mem.clear();
                continue;
            }
            None => break StopReason::LineSearchFailed,
        };
        if !fnew.is_finite() {
            break StopReason::NonFinite;
        }
        let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        fx = fnew;
        g = gnew;
        if sy > 1e-300 {
            if mem.len() == settings.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        iterations += 1;
        history.push(fx);
        if history.len() > settings.window {
            let old = history[history.len() - 1 - settings.window];
            if (old - fx).abs() <= settings.energy_tolerance * fx.abs().max(1.0) {
                break StopReason::EnergyStalled;
            }
        }
    };
    LbfgsResult { grad_norm: norm(&g), x, f: fx, iterations, evaluations: fun.count, reason }
}

fn two_loop(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Strong-Wolfe line search; returns (alpha, f, grad) at the accepted point.
fn line_search<F>(fun: &mut Counter<F>, x: &[f64], f0: f64, g0: &[f64], d: &[f64], alpha0: f64) -> Option<(f64, f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let dg0 = dot(g0, d);
    let mut eval = |alpha: f64| {
        let xa: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let (fa, ga) = fun.eval(&xa);
        let da = dot(&ga, d);
        (fa, ga, da)
    };
    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, dg0);
    let mut alpha = alpha0;
    for i in 0..40 {
        let (fa, ga, da) = eval(alpha);
        if !fa.is_finite() {
            alpha = 0.5 * (a_prev + alpha);
            continue;
        }
        if fa > f0 + C1 * alpha * dg0 || (i > 0 && fa >= f_prev) {
            return zoom(&mut eval, f0, dg0, (a_prev, f_prev, d_prev), (alpha, fa, da));
        }
        if da.abs() <= -C2 * dg0 {
            return Some((alpha, fa, ga));
        }
        if da >= 0.0 {
            return zoom(&mut eval, f0, dg0, (alpha, fa, da), (a_prev, f_prev, d_prev));
        }
        a_prev = alpha;
        f_prev = fa;
        d_prev = da;
        alpha *= 2.0;
    }
    None
}

fn zoom<E>(eval: &mut E, f0: f64, dg0: f64, mut lo: (f64, f64, f64), mut hi: (f64, f64, f64)) -> Option<(f64, f64, Vec<f64>)>
where
    E: FnMut(f64) -> (f64, Vec<f64>, f64),
{
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for _ in 0..50 {
        let a = cubic_min(lo, hi);
        let (fa, ga, da) = eval(a);
        if fa < best.as_ref().map_or(f0, |b| b.1) {
            best = Some((a, fa, ga.clone()));
        }
        if fa > f0 + C1 * a * dg0 || fa >= lo.1 {
            hi = (a, fa, da);
        } else {
            if da.abs() <= -C2 * dg0 {
                return Some((a, fa, ga));
            }
            if da * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (a, fa, da);
        }
        if (hi.0 - lo.0).abs() < 1e-16 * lo.0.abs().max(1.0) {
            break;
        }
    }
    // accept any decrease found once the bracket collapses
    best.filter(|b| b.1 < f0)
}

/// Minimizer of the cubic interpolating two (alpha, f, f') points, safeguarded
/// to the interior of the bracket.
fn cubic_min(p: (f64, f64, f64), q: (f64, f64, f64)) -> f64 {
    let (a, fa, da) = p;
    let (b, fb, db) = q;
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let mid = 0.5 * (lo + hi);
    if disc < 0.0 || !disc.is_finite() {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if !t.is_finite() || t < lo + margin || t > hi - margin {
        mid
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            (v, g)
        };
        let r = minimize(f, &[-1.2, 1.0], &LbfgsSettings { gradient_tolerance: 1e-10, ..Default::default() });
        assert!(r.converged(), "{:?}", r.reason);
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn quadratic_in_few_steps() {
        let f = |x: &[f64]| {
            let v: f64 = x.iter().enumerate().map(|(i, xi)| (i + 1) as f64 * xi * xi).sum();
            let g = x.iter().enumerate().map(|(i, xi)| 2.0 * (i + 1) as f64 * xi).collect();
            (v, g)
        };
        let r = minimize(f, &[1.0, -2.0, 0.5, 3.0], &LbfgsSettings::default());
        assert!(r.f < 1e-18);
        assert!(r.iterations < 30);
    }
}
