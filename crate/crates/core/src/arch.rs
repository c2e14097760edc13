//! The residual U-Net used for lesion segmentation and the trimmed plain
//! U-Net used for white matter masking.
//!
//! Both share one encoder/decoder skeleton: `depth` encoder stages, each
//! followed by 2×2 max pooling, a bottleneck stage, and `depth` decoder
//! stages of up-convolution, concatenation with the matching encoder
//! features, and a stage block. Stage `s` has `base_width · 2^s` channels.
//! A 1×1 convolution maps to one logit channel and a sigmoid gives
//! per-pixel probabilities. Inputs whose height or width is not a multiple
//! of `2^depth` are reflect-padded and the output is cropped back.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diff::graph::{conv_params, upconv_params};
use crate::diff::{Array4, Graph, NodeId, ParamId, ParamStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    /// conv3×3 → relu → conv3×3 on the residual path, added to the skip path.
    Residual,
    /// The original U-Net double convolution: conv3×3 → relu → conv3×3 → relu.
    Plain,
}

/// One stage block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualBlockSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kind: BlockKind,
    /// Use a 1×1 projection on the skip path even when channel counts agree.
    pub force_projection: bool,
    /// Apply relu after the addition (post-activation form).
    pub post_add_relu: bool,
}

impl ResidualBlockSpec {
    pub fn residual(in_channels: usize, out_channels: usize) -> Self {
        Self { in_channels, out_channels, kind: BlockKind::Residual, force_projection: true, post_add_relu: true }
    }

    pub fn has_projection(&self) -> bool {
        self.kind == BlockKind::Residual && (self.force_projection || self.in_channels != self.out_channels)
    }
}

/// Parameter ids of one block inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualBlock {
    pub spec: ResidualBlockSpec,
    pub conv1: (ParamId, ParamId),
    pub conv2: (ParamId, ParamId),
    pub skip: Option<(ParamId, ParamId)>,
}

impl ResidualBlock {
    /// Register this block's parameters (zero-initialized) under `prefix`.
    pub fn register(spec: ResidualBlockSpec, store: &mut ParamStore, prefix: &str) -> Self {
        let conv1 = conv_params(store, &format!("{prefix}.conv1"), spec.in_channels, spec.out_channels, 3);
        let conv2 = conv_params(store, &format!("{prefix}.conv2"), spec.out_channels, spec.out_channels, 3);
        let skip = spec
            .has_projection()
            .then(|| conv_params(store, &format!("{prefix}.skip"), spec.in_channels, spec.out_channels, 1));
        Self { spec, conv1, conv2, skip }
    }

    pub fn append(&self, g: &mut Graph, x: NodeId) -> NodeId {
        let h = g.conv(x, self.conv1.0, self.conv1.1);
        let h = g.relu(h);
        let h = g.conv(h, self.conv2.0, self.conv2.1);
        match self.spec.kind {
            BlockKind::Plain => g.relu(h),
            BlockKind::Residual => {
                let skip = match self.skip {
                    Some((w, b)) => g.conv(x, w, b),
                    None => x,
                };
                let sum = g.add(skip, h);
                if self.spec.post_add_relu { g.relu(sum) } else { sum }
            }
        }
    }
}

/// Run one block on `x` with the given parameters.
pub fn residual_block_forward(x: &Array4, block: &ResidualBlock, params: &ParamStore) -> Result<Array4> {
    if x.shape().c != block.spec.in_channels {
        return Err(Error::Shape(format!(
            "block expects {} channels, got {}",
            block.spec.in_channels,
            x.shape().c
        )));
    }
    let mut g = Graph::new();
    let out = block.append(&mut g, Graph::INPUT);
    let acts = g.forward(params, x)?;
    Ok(acts.get(out).clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub in_channels: usize,
    pub base_width: usize,
    /// Number of pooling stages.
    pub depth: usize,
    pub block: BlockKind,
    pub out_channels: usize,
    pub post_add_relu: bool,
}

impl NetworkSpec {
    pub fn with_block(mut self, block: BlockKind) -> Self {
        self.block = block;
        self
    }

    /// Channel count of encoder stage `s` (`s == depth` is the bottleneck).
    pub fn stage_channels(&self, s: usize) -> usize {
        self.base_width << s
    }

    /// Encoder channel sequence followed by the bottleneck width.
    pub fn channel_sequence(&self) -> Vec<usize> {
        (0..=self.depth).map(|s| self.stage_channels(s)).collect()
    }

    /// Spatial dims must be a multiple of this (after padding).
    pub fn downsampling_factor(&self) -> usize {
        1 << self.depth
    }

    fn block_spec(&self, in_c: usize, out_c: usize) -> ResidualBlockSpec {
        ResidualBlockSpec {
            in_channels: in_c,
            out_channels: out_c,
            kind: self.block,
            force_projection: true,
            post_add_relu: self.post_add_relu,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.base_width == 0 || self.depth == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::InvalidArgument(format!("invalid network sizes {self:?}")));
        }
        if self.depth > 8 || self.base_width.checked_shl(self.depth as u32 + 1).is_none() {
            return Err(Error::InvalidArgument(format!("depth {} too large", self.depth)));
        }
        Ok(())
    }
}

/// Residual U-Net on stacked T1 + FLAIR slices.
pub fn build_resunet(in_channels: usize, base_width: usize, depth: usize) -> Result<NetworkSpec> {
    let spec = NetworkSpec {
        in_channels,
        base_width,
        depth,
        block: BlockKind::Residual,
        out_channels: 1,
        post_add_relu: true,
    };
    spec.validate()?;
    Ok(spec)
}

/// Plain U-Net with one pooling stage fewer than the original, for white matter.
pub fn build_trimmed_unet(in_channels: usize, base_width: usize, depth: usize) -> Result<NetworkSpec> {
    let spec = NetworkSpec {
        in_channels,
        base_width,
        depth,
        block: BlockKind::Plain,
        out_channels: 1,
        post_add_relu: true,
    };
    spec.validate()?;
    Ok(spec)
}

pub const RESUNET_DEPTH: usize = 4;
pub const TRIMMED_UNET_DEPTH: usize = 3;
pub const PAPER_BASE_WIDTH: usize = 64;

/// A network spec instantiated as a graph with its parameters.
#[derive(Debug, Clone)]
pub struct Network {
    pub spec: NetworkSpec,
    pub graph: Graph,
    pub params: ParamStore,
    pub encoder: Vec<ResidualBlock>,
    pub bottleneck: ResidualBlock,
    pub decoder: Vec<ResidualBlock>,
    /// Pre-sigmoid output, cropped to the input size.
    pub logits: NodeId,
    pub probs: NodeId,
}

impl Network {
    /// Build the graph with zero-valued parameters.
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let mut params = ParamStore::new();
        let mut g = Graph::new();
        let padded = g.reflect_pad(Graph::INPUT, spec.downsampling_factor());

        let mut encoder = Vec::with_capacity(spec.depth);
        let mut skips = Vec::with_capacity(spec.depth);
        let mut x = padded;
        let mut in_c = spec.in_channels;
        for s in 0..spec.depth {
            let c = spec.stage_channels(s);
            let block = ResidualBlock::register(spec.block_spec(in_c, c), &mut params, &format!("enc{s}"));
            x = block.append(&mut g, x);
            skips.push(x);
            encoder.push(block);
            x = g.maxpool2(x);
            in_c = c;
        }
        let bottom_c = spec.stage_channels(spec.depth);
        let bottleneck = ResidualBlock::register(spec.block_spec(in_c, bottom_c), &mut params, "bottleneck");
        x = bottleneck.append(&mut g, x);

        let mut decoder = Vec::with_capacity(spec.depth);
        let mut deeper_c = bottom_c;
        for s in (0..spec.depth).rev() {
            let c = spec.stage_channels(s);
            let (uw, ub) = upconv_params(&mut params, &format!("dec{s}.up"), deeper_c, c);
            let up = g.upconv2(x, uw, ub);
            let cat = g.concat(skips[s], up);
            let block = ResidualBlock::register(spec.block_spec(2 * c, c), &mut params, &format!("dec{s}"));
            x = block.append(&mut g, cat);
            decoder.push(block);
            deeper_c = c;
        }
        let (hw, hb) = conv_params(&mut params, "head", spec.stage_channels(0), spec.out_channels, 1);
        let head = g.conv(x, hw, hb);
        let logits = g.crop_like(head, Graph::INPUT);
        let probs = g.sigmoid(logits);
        Ok(Self { spec, graph: g, params, encoder, bottleneck, decoder, logits, probs })
    }

    /// He-normal init; in residual blocks both branches are scaled by 1/√2
    /// so the sum keeps the input variance; the linear head is scaled by 1/√2
    /// to keep initial logits moderate.
    pub fn init(&mut self, rng: &mut impl Rng) {
        self.params.init_he(rng);
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let blocks: Vec<ResidualBlock> =
            self.encoder.iter().chain(std::iter::once(&self.bottleneck)).chain(&self.decoder).copied().collect();
        for block in blocks.iter().filter(|b| b.spec.kind == BlockKind::Residual) {
            for id in std::iter::once(block.conv2.0).chain(block.skip.map(|s| s.0)) {
                let p = self.params.get_mut(id);
                p.value = p.value.map(|v| v * half);
            }
        }
        let head = self.params.len() - 2;
        let p = self.params.get_mut(head);
        debug_assert_eq!(p.name, "head.weight");
        p.value = p.value.map(|v| v * half);
    }

    pub fn forward(&self, batch: &Array4) -> Result<Array4> {
        self.check_input(batch)?;
        let acts = self.graph.forward(&self.params, batch)?;
        Ok(acts.get(self.probs).clone())
    }

    pub fn check_input(&self, batch: &Array4) -> Result<()> {
        if batch.shape().c != self.spec.in_channels {
            return Err(Error::Shape(format!(
                "network expects {} input channels, got {}",
                self.spec.in_channels,
                batch.shape().c
            )));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.params.element_count()
    }
}
