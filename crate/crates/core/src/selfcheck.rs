//! Gradient self-check: every graph operator in isolation, then a whole
//! residual U-Net, against central finite differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arch::{build_resunet, Network};
use crate::diff::gradcheck::{grad_check, random_projection_head, GradCheckConfig, GradCheckReport};
use crate::diff::graph::{conv_params, upconv_params};
use crate::diff::{Array4, Graph, NodeId, ParamStore, Shape4};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfCheckConfig {
    pub base_width: usize,
    pub depth: usize,
    /// Height and width of the network input.
    pub size: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SelfCheckConfig {
    fn default() -> Self {
        Self { base_width: 2, depth: 2, size: 16, seed: 0, tolerance: 1e-4 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedCheck {
    pub name: String,
    pub report: GradCheckReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheckReport {
    pub checks: Vec<NamedCheck>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const OPERATORS: [&str; 8] = ["conv3x3", "conv1x1", "relu", "maxpool2", "upconv2", "concat", "add", "sigmoid"];

/// A one-operator graph, its output node and its (initialized) parameters.
fn operator_graph(op: &str, rng: &mut ChaCha8Rng) -> (Graph, NodeId, ParamStore, Shape4) {
    let mut g = Graph::new();
    let mut store = ParamStore::new();
    let x = Graph::INPUT;
    let input = Shape4::new(2, 3, 6, 4);
    let out = match op {
        "conv3x3" | "conv1x1" => {
            let k = if op == "conv3x3" { 3 } else { 1 };
            let (w, b) = conv_params(&mut store, op, 3, 2, k);
            g.conv(x, w, b)
        }
        "relu" => g.relu(x),
        "maxpool2" => g.maxpool2(x),
        "upconv2" => {
            let (w, b) = upconv_params(&mut store, op, 3, 2);
            g.upconv2(x, w, b)
        }
        "concat" => {
            let r = g.relu(x);
            g.concat(x, r)
        }
        "add" => {
            let (w, b) = conv_params(&mut store, "branch", 3, 3, 1);
            let c = g.conv(x, w, b);
            g.add(x, c)
        }
        "sigmoid" => g.sigmoid(x),
        other => unreachable!("unknown operator {other}"),
    };
    store.init_he(rng);
    // nonzero biases so the bias path is exercised
    for p in store.iter_mut().filter(|p| p.name.ends_with("bias")) {
        p.value = Array4::uniform(p.value.shape(), -0.5, 0.5, rng);
    }
    (g, out, store, input)
}

fn output_shape(g: &Graph, out: NodeId, store: &ParamStore, x: &Array4) -> Result<Shape4> {
    Ok(g.forward_until(store, x, out)?.get(out).shape())
}

pub fn check_operator(op: &str, cfg: &SelfCheckConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (g, out, mut store, shape) = operator_graph(op, &mut rng);
    let x = Array4::randn(shape, 1.0, &mut rng);
    let head = random_projection_head(output_shape(&g, out, &store, &x)?, cfg.seed.wrapping_add(1));
    let gc = GradCheckConfig { tolerance: cfg.tolerance, seed: cfg.seed, ..Default::default() };
    grad_check(&g, out, &mut store, &x, &head, &gc)
}

pub fn check_network(cfg: &SelfCheckConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::new(build_resunet(2, cfg.base_width, cfg.depth)?)?;
    net.init(&mut rng);
    let x = Array4::randn(Shape4::new(1, 2, cfg.size, cfg.size), 1.0, &mut rng);
    let head = random_projection_head(Shape4::new(1, 1, cfg.size, cfg.size), cfg.seed.wrapping_add(1));
    let gc = GradCheckConfig { tolerance: cfg.tolerance, seed: cfg.seed, ..Default::default() };
    let probs = net.probs;
    grad_check(&net.graph, probs, &mut net.params, &x, &head, &gc)
}

pub fn run_selfcheck(cfg: &SelfCheckConfig) -> Result<SelfCheckReport> {
    let mut checks = Vec::new();
    for op in OPERATORS {
        checks.push(NamedCheck { name: op.to_string(), report: check_operator(op, cfg)? });
    }
    checks.push(NamedCheck {
        name: format!("resunet(width {}, depth {}, {}x{})", cfg.base_width, cfg.depth, cfg.size, cfg.size),
        report: check_network(cfg)?,
    });
    let max_rel_error = checks.iter().map(|c| c.report.max_rel_error).fold(0.0, f64::max);
    Ok(SelfCheckReport {
        passed: checks.iter().all(|c| c.report.passed),
        checks,
        max_rel_error,
        tolerance: cfg.tolerance,
    })
}
