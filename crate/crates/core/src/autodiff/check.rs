//! Central finite-difference checks for graph-built scalar functions.

use super::{Graph, Var};
use crate::tensor::Tensor;

/// Outcome of comparing an analytic gradient to central differences.
#[derive(Clone, Debug)]
pub struct GradCheck {
    /// `max |g_a − g_fd| / max(max |g_fd|, floor)` over the probed entries.
    pub rel_error: f64,
    pub max_abs_error: f64,
    pub probed: usize,
}

/// Evaluates `build` on perturbed copies of `inputs[which]` and compares
/// the numerical slope against the reverse-mode gradient. At most
/// `max_probes` evenly spaced entries are probed.
pub fn finite_difference(
    inputs: &[Tensor],
    which: usize,
    step: f64,
    max_probes: usize,
    build: impl Fn(&mut Graph, &[Var]) -> Var,
) -> GradCheck {
    let eval = |ins: &[Tensor]| -> f64 {
        let mut g = Graph::new();
        let vars: Vec<Var> = ins.iter().map(|t| g.constant(t.clone())).collect();
        let out = build(&mut g, &vars);
        g.value(out).data()[0]
    };

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs
        .iter()
        .enumerate()
        .map(|(i, t)| g.leaf(t.clone(), i == which))
        .collect();
    let out = build(&mut g, &vars);
    let grads = g.backward(out);
    let analytic = grads
        .get(vars[which])
        .cloned()
        .unwrap_or_else(|| Tensor::zeros(inputs[which].shape()));

    let n = inputs[which].len();
    let stride = n.div_ceil(max_probes.max(1)).max(1);
    let mut max_abs_error: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut probed = 0;
    let mut work = inputs.to_vec();
    for idx in (0..n).step_by(stride) {
        let orig = work[which].data()[idx];
        work[which].data_mut()[idx] = orig + step;
        let plus = eval(&work);
        work[which].data_mut()[idx] = orig - step;
        let minus = eval(&work);
        work[which].data_mut()[idx] = orig;
        let numeric = (plus - minus) / (2.0 * step);
        max_abs_error = max_abs_error.max((numeric - analytic.data()[idx]).abs());
        scale = scale.max(numeric.abs());
        probed += 1;
    }
    GradCheck {
        rel_error: max_abs_error / scale.max(1e-8),
        max_abs_error,
        probed,
    }
}

/// Directional-derivative check: compares `⟨∇f, d⟩` against
/// `(f(x + εd) − f(x − εd)) / 2ε` for a fixed direction per input.
pub fn directional(
    inputs: &[Tensor],
    directions: &[Tensor],
    step: f64,
    build: impl Fn(&mut Graph, &[Var]) -> Var,
) -> (f64, f64) {
    let eval = |ins: &[Tensor]| -> f64 {
        let mut g = Graph::new();
        let vars: Vec<Var> = ins.iter().map(|t| g.constant(t.clone())).collect();
        let out = build(&mut g, &vars);
        g.value(out).data()[0]
    };
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), true)).collect();
    let out = build(&mut g, &vars);
    let grads = g.backward(out);
    let analytic: f64 = vars
        .iter()
        .zip(directions)
        .map(|(&v, d)| {
            grads
                .get(v)
                .map(|gr| gr.data().iter().zip(d.data()).map(|(a, b)| a * b).sum())
                .unwrap_or(0.0)
        })
        .sum();
    let shifted = |sign: f64| -> Vec<Tensor> {
        inputs
            .iter()
            .zip(directions)
            .map(|(x, d)| x.zip_map(d, |a, b| a + sign * step * b))
            .collect()
    };
    let numeric = (eval(&shifted(1.0)) - eval(&shifted(-1.0))) / (2.0 * step);
    (analytic, numeric)
}
