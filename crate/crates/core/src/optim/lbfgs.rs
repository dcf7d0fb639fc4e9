//! Limited-memory BFGS with a backtracking Armijo line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iterations: usize,
    /// Sufficient-decrease constant `c1`.
    pub armijo_c1: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    /// Largest coordinate move of the first (steepest-descent) step.
    pub first_step: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iterations: 100,
            armijo_c1: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 40,
            first_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Objective evaluations, including the initial one.
    pub evaluations: usize,
    /// `true` when the line search could not find a decrease.
    pub stalled: bool,
}

/// What the per-iteration callback wants next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns `(value, gradient)`. After every accepted
/// step `callback(iteration, value, gradient)` is called.
pub fn minimize(
    x0: Vec<f64>,
    opts: &LbfgsOptions,
    mut f: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    mut callback: impl FnMut(usize, f64, &[f64]) -> Control,
) -> Result<LbfgsOutcome> {
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    let mut evaluations = 1;
    if !fx.is_finite() {
        return Err(Error::Diverged(format!("initial objective is {fx}")));
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut stalled = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        let mut d = direction(&g, &history);
        let mut slope = dot(&g, &d);
        if history.is_empty() || slope >= 0.0 {
            // steepest descent scaled so the largest move is `first_step`
            history.clear();
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if gmax == 0.0 {
                break;
            }
            d = g.iter().map(|v| -v * opts.first_step / gmax).collect();
            slope = dot(&g, &d);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (ft, gt) = f(&trial)?;
            evaluations += 1;
            if !ft.is_finite() {
                return Err(Error::Diverged(format!("objective became {ft} at iteration {iterations}")));
            }
            if ft <= fx + opts.armijo_c1 * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= opts.backtrack_factor;
        }
        let Some((xn, fxn, gn)) = accepted else {
            stalled = true;
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fxn;
        g = gn;
        iterations += 1;
        if callback(iterations, fx, &g) == Control::Stop {
            break;
        }
    }
    Ok(LbfgsOutcome { x, value: fx, iterations, evaluations, stalled })
}

/// Two-loop recursion: `-H g` with `H0 = (s.y / y.y) I`.
fn direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}
