//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::array::Array4;
use super::graph::{Graph, NodeId, ParamStore};
use crate::error::Result;

/// A scalar loss on the checked node's output, returning the loss and its
/// gradient with respect to that output.
pub type LossHead<'a> = dyn Fn(&Array4) -> (f64, Array4) + 'a;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckConfig {
    pub step: f64,
    pub tolerance: f64,
    /// Relative errors use `max(|analytic|, |numeric|, floor)` as denominator.
    pub denominator_floor: f64,
    /// Parameters with more elements than this are subsampled.
    pub max_elements: usize,
    pub subsample: usize,
    pub check_input: bool,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-4,
            denominator_floor: 1e-6,
            max_elements: 4096,
            subsample: 256,
            check_input: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub entries: Vec<TensorCheck>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn pick_indices(len: usize, cfg: &GradCheckConfig, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if len <= cfg.max_elements {
        (0..len).collect()
    } else {
        let mut idx = sample(rng, len, cfg.subsample.min(len)).into_vec();
        idx.sort_unstable();
        idx
    }
}

/// Compare back-propagated gradients at `output` with central differences
/// of `head(output)` for every parameter (and optionally the input).
pub fn grad_check(
    graph: &Graph,
    output: NodeId,
    params: &mut ParamStore,
    input: &Array4,
    head: &LossHead<'_>,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    params.zero_grad();
    let acts = graph.forward_until(params, input, output)?;
    let (_, g_out) = head(acts.get(output));
    let g_input = graph.backward(params, &acts, output, g_out);

    let loss_at = |params: &ParamStore, x: &Array4| -> Result<f64> {
        let acts = graph.forward_until(params, x, output)?;
        Ok(head(acts.get(output)).0)
    };

    let mut entries = Vec::new();
    for pid in 0..params.len() {
        let analytic = params.get(pid).grad.clone();
        let name = params.get(pid).name.clone();
        let indices = pick_indices(analytic.shape().len(), cfg, &mut rng);
        let mut max_err: f64 = 0.0;
        for &i in &indices {
            let original = params.get(pid).value.data()[i];
            params.get_mut(pid).value.data_mut()[i] = original + cfg.step;
            let plus = loss_at(params, input)?;
            params.get_mut(pid).value.data_mut()[i] = original - cfg.step;
            let minus = loss_at(params, input)?;
            params.get_mut(pid).value.data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * cfg.step);
            max_err = max_err.max(relative_error(analytic.data()[i], numeric, cfg.denominator_floor));
        }
        entries.push(TensorCheck { name, checked: indices.len(), max_rel_error: max_err, passed: max_err <= cfg.tolerance });
    }

    if cfg.check_input {
        let indices = pick_indices(input.shape().len(), cfg, &mut rng);
        let mut x = input.clone();
        let mut max_err: f64 = 0.0;
        for &i in &indices {
            let original = x.data()[i];
            x.data_mut()[i] = original + cfg.step;
            let plus = loss_at(params, &x)?;
            x.data_mut()[i] = original - cfg.step;
            let minus = loss_at(params, &x)?;
            x.data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * cfg.step);
            max_err = max_err.max(relative_error(g_input.data()[i], numeric, cfg.denominator_floor));
        }
        entries.push(TensorCheck {
            name: "<input>".into(),
            checked: indices.len(),
            max_rel_error: max_err,
            passed: max_err <= cfg.tolerance,
        });
    }

    let max_rel_error = entries.iter().map(|e| e.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        passed: entries.iter().all(|e| e.passed),
        entries,
        max_rel_error,
        tolerance: cfg.tolerance,
    })
}

/// `L = Σ r·y` for a fixed random `r`; its gradient is `r`.
pub fn random_projection_head(shape: super::array::Shape4, seed: u64) -> impl Fn(&Array4) -> (f64, Array4) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = Array4::uniform(shape, -1.0, 1.0, &mut rng);
    move |y: &Array4| {
        let loss = y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum();
        (loss, r.clone())
    }
}

/// `L = ½ Σ y²`; smooth everywhere.
pub fn half_square_head(y: &Array4) -> (f64, Array4) {
    (0.5 * y.data().iter().map(|v| v * v).sum::<f64>(), y.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::array::Shape4;
    use crate::diff::graph::conv_params;

    #[test]
    fn empty_graph_passes_with_no_parameter_entries() {
        let g = Graph::new();
        let mut store = ParamStore::new();
        let x = Array4::filled(Shape4::new(1, 1, 2, 2), 1.0);
        let cfg = GradCheckConfig { check_input: false, ..Default::default() };
        let report = grad_check(&g, Graph::INPUT, &mut store, &x, &half_square_head, &cfg).unwrap();
        assert!(report.entries.is_empty());
        assert!(report.passed);
    }

    #[test]
    fn single_conv_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut store = ParamStore::new();
        let (w, b) = conv_params(&mut store, "conv", 2, 3, 3);
        store.init_he(&mut rng);
        let mut g = Graph::new();
        let y = g.conv(Graph::INPUT, w, b);
        let x = Array4::randn(Shape4::new(2, 2, 5, 4), 1.0, &mut rng);
        let report = grad_check(&g, y, &mut store, &x, &half_square_head, &GradCheckConfig::default()).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.entries.len(), 3);
    }

    #[test]
    fn detects_a_wrong_gradient() {
        // the head lies about its gradient, so the check must fail
        let mut store = ParamStore::new();
        let g = Graph::new();
        let x = Array4::filled(Shape4::new(1, 1, 1, 2), 1.0);
        let bad = |y: &Array4| (y.sum(), y.map(|_| 2.0));
        let report = grad_check(&g, Graph::INPUT, &mut store, &x, &bad, &GradCheckConfig::default()).unwrap();
        assert!(!report.passed);
    }
}
