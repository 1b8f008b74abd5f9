use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::{LabelPropParams, PropagationConfig, PropagationMode};

/// Architecture identity. The two label propagation variants are listed here
/// so experiment plans can name every benchmarked method uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "GCN")]
    Gcn,
    #[serde(rename = "GAT")]
    Gat,
    #[serde(rename = "MoNet")]
    MoNet,
    #[serde(rename = "GS-mean")]
    GsMean,
    #[serde(rename = "GS-meanpool")]
    GsMeanPool,
    #[serde(rename = "GS-maxpool")]
    GsMaxPool,
    #[serde(rename = "MLP")]
    Mlp,
    #[serde(rename = "LogReg")]
    LogReg,
    #[serde(rename = "LabelProp")]
    LabelProp,
    #[serde(rename = "LabelProp NL")]
    LabelPropNl,
}

impl ModelKind {
    pub const ALL: [ModelKind; 10] = [
        ModelKind::Gcn,
        ModelKind::Gat,
        ModelKind::MoNet,
        ModelKind::GsMean,
        ModelKind::GsMaxPool,
        ModelKind::GsMeanPool,
        ModelKind::Mlp,
        ModelKind::LogReg,
        ModelKind::LabelProp,
        ModelKind::LabelPropNl,
    ];

    /// The eight gradient-trained kinds.
    pub const TRAINABLE: [ModelKind; 8] = [
        ModelKind::Gcn,
        ModelKind::Gat,
        ModelKind::MoNet,
        ModelKind::GsMean,
        ModelKind::GsMaxPool,
        ModelKind::GsMeanPool,
        ModelKind::Mlp,
        ModelKind::LogReg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gcn => "GCN",
            ModelKind::Gat => "GAT",
            ModelKind::MoNet => "MoNet",
            ModelKind::GsMean => "GS-mean",
            ModelKind::GsMeanPool => "GS-meanpool",
            ModelKind::GsMaxPool => "GS-maxpool",
            ModelKind::Mlp => "MLP",
            ModelKind::LogReg => "LogReg",
            ModelKind::LabelProp => "LabelProp",
            ModelKind::LabelPropNl => "LabelProp NL",
        }
    }

    pub fn is_trainable(self) -> bool {
        !self.is_propagation()
    }

    pub fn is_propagation(self) -> bool {
        matches!(self, ModelKind::LabelProp | ModelKind::LabelPropNl)
    }

    pub fn uses_graph(self) -> bool {
        !matches!(self, ModelKind::Mlp | ModelKind::LogReg)
    }

    pub fn has_pool(self) -> bool {
        matches!(self, ModelKind::GsMeanPool | ModelKind::GsMaxPool)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase().replace(' ', "-") == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind {s:?}")))
    }
}

/// Which weight matrices enter the L2 penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L2Scope {
    /// First-layer weights for GCN, all weights otherwise.
    #[default]
    Auto,
    FirstLayer,
    AllWeights,
}

/// Architecture plus the hyperparameters tuned by grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Label used in result tables; defaults to the kind's name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Effective hidden width. GAT and MoNet split it evenly over `heads`;
    /// GraphSAGE variants use it as the width of each of the self and
    /// neighbour matrices.
    #[serde(default = "default_hidden")]
    pub hidden_size: usize,
    /// Attention heads (GAT) or Gaussian kernels (MoNet) of the hidden layer.
    #[serde(default = "default_heads")]
    pub heads: usize,
    /// Heads/kernels of the output layer, averaged.
    #[serde(default = "one")]
    pub output_heads: usize,
    /// Width of the neighbour transform of the pooling aggregators.
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    #[serde(default)]
    pub feature_dropout: f64,
    #[serde(default)]
    pub attention_dropout: f64,
    #[serde(default)]
    pub l2_strength: f64,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub l2_scope: L2Scope,
    #[serde(default)]
    pub label_prop: LabelPropParams,
}

fn default_hidden() -> usize {
    64
}
fn default_heads() -> usize {
    1
}
fn one() -> usize {
    1
}
fn default_pool() -> usize {
    32
}
fn default_lr() -> f64 {
    0.01
}

impl ModelSpec {
    /// Best configuration per kind from the reference grid search.
    pub fn reference(kind: ModelKind) -> Self {
        let base = ModelSpec {
            kind,
            name: None,
            hidden_size: 64,
            heads: 1,
            output_heads: 1,
            pool_size: 32,
            feature_dropout: 0.0,
            attention_dropout: 0.0,
            l2_strength: 0.0,
            learning_rate: 0.01,
            l2_scope: L2Scope::Auto,
            label_prop: LabelPropParams::default(),
        };
        let (hidden, lr, drop, l2) = match kind {
            ModelKind::Gcn => (64, 0.01, 0.8, 0.001),
            ModelKind::Gat => (64, 0.01, 0.6, 0.01),
            ModelKind::MoNet => (64, 0.003, 0.7, 0.05),
            ModelKind::GsMean => (32, 0.001, 0.4, 0.1),
            ModelKind::GsMaxPool => (32, 0.001, 0.3, 0.005),
            ModelKind::GsMeanPool => (32, 0.001, 0.2, 0.01),
            ModelKind::Mlp => (64, 0.005, 0.8, 0.01),
            ModelKind::LogReg => (64, 0.1, 0.0, 0.0005),
            ModelKind::LabelProp | ModelKind::LabelPropNl => (64, 0.01, 0.0, 0.0),
        };
        ModelSpec {
            hidden_size: hidden,
            learning_rate: lr,
            feature_dropout: drop,
            l2_strength: l2,
            heads: match kind {
                ModelKind::Gat => 8,
                ModelKind::MoNet => 2,
                _ => 1,
            },
            attention_dropout: if kind == ModelKind::Gat { 0.3 } else { 0.0 },
            pool_size: if kind == ModelKind::GsMeanPool { 8 } else { 32 },
            ..base
        }
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.name())
    }

    /// Checks structural constraints.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.kind.is_propagation() {
            return self.label_prop.validate();
        }
        if self.hidden_size == 0 || self.heads == 0 || self.output_heads == 0 {
            return bad("hidden_size, heads and output_heads must be >= 1".into());
        }
        if matches!(self.kind, ModelKind::Gat | ModelKind::MoNet) && self.hidden_size % self.heads != 0 {
            return bad(format!(
                "{} hidden_size {} not divisible by {} heads",
                self.kind, self.hidden_size, self.heads
            ));
        }
        if self.kind.has_pool() && self.pool_size == 0 {
            return bad("pool_size must be >= 1".into());
        }
        for (name, p) in [
            ("feature_dropout", self.feature_dropout),
            ("attention_dropout", self.attention_dropout),
        ] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("{name} = {p} outside [0, 1)"));
            }
        }
        if !(self.l2_strength >= 0.0 && self.l2_strength.is_finite()) {
            return bad(format!("l2_strength = {} must be non-negative", self.l2_strength));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate = {} must be positive", self.learning_rate));
        }
        Ok(())
    }

    /// Resolved L2 scope.
    pub fn effective_l2_scope(&self) -> L2Scope {
        match (self.l2_scope, self.kind) {
            (L2Scope::Auto, ModelKind::Gcn) => L2Scope::FirstLayer,
            (L2Scope::Auto, _) => L2Scope::AllWeights,
            (s, _) => s,
        }
    }

    /// Propagation settings for the label propagation kinds.
    pub fn propagation_config(&self) -> Option<PropagationConfig> {
        let mode = match self.kind {
            ModelKind::LabelProp => PropagationMode::RowNormalized,
            ModelKind::LabelPropNl => PropagationMode::SymmetricNormalized,
            _ => return None,
        };
        Some(self.label_prop.with_mode(mode))
    }
}

/// Exact number of trainable scalars.
///
/// With `D` inputs, `C` classes, hidden `H`, `K`/`K2` hidden/output heads and
/// pool width `P`:
///
/// * GCN, MLP: `D*H + H + H*C + C`
/// * GAT: `D*H + 2H + H + K2*(H*C + 2C) + C`
/// * MoNet: `D*H + 4K + H + K2*(H*C + 4) + C`
/// * GS-mean: `2*D*H + H + 2*H*C + C`
/// * GS-meanpool / GS-maxpool: `D*P + P + D*H + P*H + H + H*P + P + H*C + P*C + C`
/// * LogReg: `D*C + C`
pub fn param_count(spec: &ModelSpec, in_dim: usize, num_classes: usize) -> usize {
    let (d, c, h, p) = (in_dim, num_classes, spec.hidden_size, spec.pool_size);
    let k2 = spec.output_heads;
    match spec.kind {
        ModelKind::Gcn | ModelKind::Mlp => d * h + h + h * c + c,
        // Per head: W (d x h/K) plus source and target attention vectors.
        ModelKind::Gat => d * h + 2 * h + h + k2 * (h * c + 2 * c) + c,
        // Per kernel: W plus a 2-d mean and 2-d log scale.
        ModelKind::MoNet => d * h + 4 * spec.heads + h + k2 * (h * c + 4) + c,
        ModelKind::GsMean => 2 * d * h + h + 2 * h * c + c,
        ModelKind::GsMeanPool | ModelKind::GsMaxPool => {
            (d * p + p + d * h + p * h + h) + (h * p + p + h * c + p * c + c)
        }
        ModelKind::LogReg => d * c + c,
        ModelKind::LabelProp | ModelKind::LabelPropNl => 0,
    }
}
