use crate::autodiff::{Activation, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

use super::context::GraphContext;
use super::params::{ParamRole, ParamStore};
use super::spec::{L2Scope, ModelKind, ModelSpec};

/// Allocates and initializes the parameters of `spec` for `in_dim` inputs and
/// `num_classes` outputs. Weight matrices, attention vectors and kernel means
/// are Glorot-uniform; biases and kernel log-scales start at zero.
pub fn build_model<T: Scalar>(
    spec: &ModelSpec,
    in_dim: usize,
    num_classes: usize,
    rng: &mut RngStream,
) -> Result<ParamStore<T>> {
    spec.validate()?;
    if !spec.kind.is_trainable() {
        return Err(Error::InvalidArgument(format!(
            "{} has no trainable parameters",
            spec.kind
        )));
    }
    if in_dim == 0 || num_classes == 0 {
        return Err(Error::InvalidArgument("model dimensions must be >= 1".into()));
    }
    let mut ps = ParamStore::new();
    let h = spec.hidden_size;
    let w1 = ParamRole::Weight { layer: 1 };
    let w2 = ParamRole::Weight { layer: 2 };
    match spec.kind {
        ModelKind::Gcn | ModelKind::Mlp => {
            ps.glorot("l1.W".into(), w1, in_dim, h, rng)?;
            ps.zeros("l1.b".into(), 1, h);
            ps.glorot("l2.W".into(), w2, h, num_classes, rng)?;
            ps.zeros("l2.b".into(), 1, num_classes);
        }
        ModelKind::LogReg => {
            ps.glorot("l1.W".into(), w1, in_dim, num_classes, rng)?;
            ps.zeros("l1.b".into(), 1, num_classes);
        }
        ModelKind::Gat => {
            let f = h / spec.heads;
            for k in 0..spec.heads {
                ps.glorot(format!("l1.W.{k}"), w1, in_dim, f, rng)?;
                ps.glorot(format!("l1.a_src.{k}"), ParamRole::Attention, f, 1, rng)?;
                ps.glorot(format!("l1.a_dst.{k}"), ParamRole::Attention, f, 1, rng)?;
            }
            ps.zeros("l1.b".into(), 1, h);
            for k in 0..spec.output_heads {
                ps.glorot(format!("l2.W.{k}"), w2, h, num_classes, rng)?;
                ps.glorot(format!("l2.a_src.{k}"), ParamRole::Attention, num_classes, 1, rng)?;
                ps.glorot(format!("l2.a_dst.{k}"), ParamRole::Attention, num_classes, 1, rng)?;
            }
            ps.zeros("l2.b".into(), 1, num_classes);
        }
        ModelKind::MoNet => {
            let f = h / spec.heads;
            let kernels =
                |ps: &mut ParamStore<T>, layer: &str, role, heads, fin, fout, rng: &mut RngStream| -> Result<()> {
                    for k in 0..heads {
                        ps.glorot(format!("{layer}.W.{k}"), role, fin, fout, rng)?;
                        ps.glorot(format!("{layer}.mu.{k}"), ParamRole::KernelMean, 1, 2, rng)?;
                        ps.insert(
                            format!("{layer}.log_sigma.{k}"),
                            ParamRole::KernelLogSigma,
                            Tensor::zeros(1, 2),
                        );
                    }
                    Ok(())
                };
            kernels(&mut ps, "l1", w1, spec.heads, in_dim, f, rng)?;
            ps.zeros("l1.b".into(), 1, h);
            kernels(&mut ps, "l2", w2, spec.output_heads, h, num_classes, rng)?;
            ps.zeros("l2.b".into(), 1, num_classes);
        }
        ModelKind::GsMean => {
            for (layer, role, fin, fout) in [("l1", w1, in_dim, h), ("l2", w2, h, num_classes)] {
                ps.glorot(format!("{layer}.W_self"), role, fin, fout, rng)?;
                ps.glorot(format!("{layer}.W_neigh"), role, fin, fout, rng)?;
                ps.zeros(format!("{layer}.b"), 1, fout);
            }
        }
        ModelKind::GsMeanPool | ModelKind::GsMaxPool => {
            let p = spec.pool_size;
            for (layer, role, fin, fout) in [("l1", w1, in_dim, h), ("l2", w2, h, num_classes)] {
                ps.glorot(format!("{layer}.W_pool"), role, fin, p, rng)?;
                ps.zeros(format!("{layer}.b_pool"), 1, p);
                ps.glorot(format!("{layer}.W_self"), role, fin, fout, rng)?;
                ps.glorot(format!("{layer}.W_neigh"), role, p, fout, rng)?;
                ps.zeros(format!("{layer}.b"), 1, fout);
            }
        }
        ModelKind::LabelProp | ModelKind::LabelPropNl => unreachable!(),
    }
    Ok(ps)
}

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `N x C` logits.
    pub logits: Var,
    /// One leaf per parameter, in store order.
    pub params: Vec<Var>,
}

/// Input of a layer: the feature operator's (possibly dropped) values, or a
/// dense hidden representation.
#[derive(Clone, Copy)]
enum Input {
    Features(Var),
    Dense(Var),
}

struct Ctx<'a, T> {
    tape: &'a mut Tape<T>,
    store: &'a ParamStore<T>,
    vars: &'a [Var],
    graph: &'a GraphContext<T>,
    rng: &'a mut RngStream,
    training: bool,
    spec: &'a ModelSpec,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Combine {
    Concat,
    Average,
}

impl<T: Scalar> Ctx<'_, T> {
    fn p(&self, name: &str) -> Result<Var> {
        Ok(self.vars[self.store.index_of(name)?])
    }

    fn coef(&mut self, values: &[T]) -> Result<Var> {
        Ok(self.tape.constant(Tensor::new(values.len(), 1, values.to_vec())?))
    }

    fn features(&mut self) -> Result<Input> {
        let g = self.graph;
        Ok(Input::Features(self.coef(&g.features.values)?))
    }

    fn drop(&mut self, input: Input, p: f64) -> Result<Input> {
        Ok(match input {
            Input::Features(c) => Input::Features(self.tape.dropout(c, p, self.rng, self.training)?),
            Input::Dense(h) => Input::Dense(self.tape.dropout(h, p, self.rng, self.training)?),
        })
    }

    fn project(&mut self, input: Input, w: Var) -> Result<Var> {
        let g = self.graph;
        match input {
            Input::Features(c) => self.tape.spmm(&g.features.pattern, c, w),
            Input::Dense(h) => self.tape.matmul(h, w),
        }
    }

    /// Sparse aggregation over neighbourhoods with fixed coefficients.
    fn aggregate(&mut self, coef: &[T], x: Var) -> Result<Var> {
        let g = self.graph;
        let c = self.coef(coef)?;
        self.tape.spmm(&g.pattern, c, x)
    }

    fn combine(&mut self, parts: Vec<Var>, how: Combine) -> Result<Var> {
        if how == Combine::Concat {
            return self.tape.concat_cols(&parts);
        }
        let mut acc = parts[0];
        for &p in &parts[1..] {
            acc = self.tape.add(acc, p)?;
        }
        let k = T::from_f64_lossy(1.0 / parts.len() as f64);
        Ok(if parts.len() > 1 { self.tape.scale(acc, k) } else { acc })
    }

    fn dense_layer(&mut self, input: Input, layer: &str) -> Result<Var> {
        let w = self.p(&format!("{layer}.W"))?;
        let b = self.p(&format!("{layer}.b"))?;
        let z = self.project(input, w)?;
        self.tape.add_bias(z, b)
    }

    fn gcn_layer(&mut self, input: Input, layer: &str) -> Result<Var> {
        let w = self.p(&format!("{layer}.W"))?;
        let b = self.p(&format!("{layer}.b"))?;
        let z = self.project(input, w)?;
        let g = self.graph;
        let z = self.aggregate(&g.gcn_coef, z)?;
        self.tape.add_bias(z, b)
    }

    /// Projected features and normalized attention coefficients of one head.
    fn gat_head(&mut self, input: Input, layer: &str, k: usize) -> Result<(Var, Var)> {
        let g = self.graph;
        let w = self.p(&format!("{layer}.W.{k}"))?;
        let wh = self.project(input, w)?;
        let a_src = self.p(&format!("{layer}.a_src.{k}"))?;
        let a_dst = self.p(&format!("{layer}.a_dst.{k}"))?;
        let fs = self.tape.matmul(wh, a_src)?;
        let fd = self.tape.matmul(wh, a_dst)?;
        let e = self.tape.edge_scores(&g.pattern, &g.edge_rows, fs, fd)?;
        let e = self.tape.elementwise(Activation::LeakyRelu(0.2), e)?;
        let alpha = self.tape.segment_softmax(&g.pattern, e)?;
        Ok((wh, alpha))
    }

    fn gat_layer(&mut self, input: Input, layer: &str, heads: usize, how: Combine) -> Result<Var> {
        let g = self.graph;
        let mut outs = Vec::with_capacity(heads);
        for k in 0..heads {
            let (wh, alpha) = self.gat_head(input, layer, k)?;
            let alpha = self
                .tape
                .dropout(alpha, self.spec.attention_dropout, self.rng, self.training)?;
            outs.push(self.tape.spmm(&g.pattern, alpha, wh)?);
        }
        let out = self.combine(outs, how)?;
        let b = self.p(&format!("{layer}.b"))?;
        self.tape.add_bias(out, b)
    }

    fn monet_layer(&mut self, input: Input, layer: &str, heads: usize, how: Combine) -> Result<Var> {
        let g = self.graph;
        let mut outs = Vec::with_capacity(heads);
        for k in 0..heads {
            let wh = {
                let w = self.p(&format!("{layer}.W.{k}"))?;
                self.project(input, w)?
            };
            let mu = self.p(&format!("{layer}.mu.{k}"))?;
            let ls = self.p(&format!("{layer}.log_sigma.{k}"))?;
            let logk = self.tape.gaussian_log_kernel(&g.pseudo, mu, ls)?;
            let w = self.tape.segment_softmax(&g.pattern, logk)?;
            outs.push(self.tape.spmm(&g.pattern, w, wh)?);
        }
        let out = self.combine(outs, how)?;
        let b = self.p(&format!("{layer}.b"))?;
        self.tape.add_bias(out, b)
    }

    fn sage_layer(&mut self, input: Input, layer: &str) -> Result<Var> {
        let g = self.graph;
        let w_self = self.p(&format!("{layer}.W_self"))?;
        let w_neigh = self.p(&format!("{layer}.W_neigh"))?;
        let own = self.project(input, w_self)?;
        let neigh = match self.spec.kind {
            ModelKind::GsMean => {
                let z = self.project(input, w_neigh)?;
                self.aggregate(&g.mean_coef, z)?
            }
            _ => {
                let w_pool = self.p(&format!("{layer}.W_pool"))?;
                let b_pool = self.p(&format!("{layer}.b_pool"))?;
                let z = self.project(input, w_pool)?;
                let z = self.tape.add_bias(z, b_pool)?;
                let pooled = self.tape.relu(z);
                let agg = if self.spec.kind == ModelKind::GsMaxPool {
                    self.tape.segment_max(&g.pattern, pooled)?
                } else {
                    self.aggregate(&g.mean_coef, pooled)?
                };
                self.tape.matmul(agg, w_neigh)?
            }
        };
        let out = self.tape.add(own, neigh)?;
        let b = self.p(&format!("{layer}.b"))?;
        self.tape.add_bias(out, b)
    }

    fn run(&mut self) -> Result<Var> {
        let spec = self.spec;
        let fd = spec.feature_dropout;
        let x = self.features()?;
        if spec.kind == ModelKind::LogReg {
            return self.dense_layer(x, "l1");
        }
        let x = self.drop(x, fd)?;
        let h = match spec.kind {
            ModelKind::Gcn => {
                let z = self.gcn_layer(x, "l1")?;
                self.tape.relu(z)
            }
            ModelKind::Mlp => {
                let z = self.dense_layer(x, "l1")?;
                self.tape.relu(z)
            }
            ModelKind::Gat => {
                let z = self.gat_layer(x, "l1", spec.heads, Combine::Concat)?;
                self.tape.elu(z)
            }
            ModelKind::MoNet => {
                let z = self.monet_layer(x, "l1", spec.heads, Combine::Concat)?;
                self.tape.relu(z)
            }
            _ => {
                let z = self.sage_layer(x, "l1")?;
                self.tape.relu(z)
            }
        };
        let h = self.drop(Input::Dense(h), fd)?;
        match spec.kind {
            ModelKind::Gcn => self.gcn_layer(h, "l2"),
            ModelKind::Mlp => self.dense_layer(h, "l2"),
            ModelKind::Gat => self.gat_layer(h, "l2", spec.output_heads, Combine::Average),
            ModelKind::MoNet => self.monet_layer(h, "l2", spec.output_heads, Combine::Average),
            _ => self.sage_layer(h, "l2"),
        }
    }
}

/// Records the forward computation of `spec` on `tape` and returns the logits
/// handle. Dropout is active only when `training` is set; `rng` is not
/// touched otherwise. Non-finite logits yield [`Error::Diverged`].
pub fn forward<T: Scalar>(
    spec: &ModelSpec,
    params: &ParamStore<T>,
    graph: &GraphContext<T>,
    tape: &mut Tape<T>,
    rng: &mut RngStream,
    training: bool,
) -> Result<ForwardPass> {
    if !spec.kind.is_trainable() {
        return Err(Error::InvalidArgument(format!("{} has no forward pass", spec.kind)));
    }
    let vars = params.bind(tape);
    let mut ctx = Ctx {
        tape,
        store: params,
        vars: &vars,
        graph,
        rng,
        training,
        spec,
    };
    let logits = ctx.run()?;
    if !tape.value(logits).all_finite() {
        return Err(Error::Diverged);
    }
    Ok(ForwardPass { logits, params: vars })
}

/// First-layer GAT attention coefficients per head, one value per stored
/// adjacency entry, in inference mode.
pub fn gat_attention<T: Scalar>(
    spec: &ModelSpec,
    params: &ParamStore<T>,
    graph: &GraphContext<T>,
) -> Result<Vec<Vec<T>>> {
    if spec.kind != ModelKind::Gat {
        return Err(Error::InvalidArgument(format!("{} has no attention", spec.kind)));
    }
    let mut tape = Tape::new();
    let mut rng = RngStream::from_seed(0);
    let vars = params.bind(&mut tape);
    let mut ctx = Ctx {
        tape: &mut tape,
        store: params,
        vars: &vars,
        graph,
        rng: &mut rng,
        training: false,
        spec,
    };
    let x = ctx.features()?;
    (0..spec.heads)
        .map(|k| {
            let (_, alpha) = ctx.gat_head(x, "l1", k)?;
            Ok(ctx.tape.value(alpha).data().to_vec())
        })
        .collect()
}

/// Inference-mode logits.
pub fn predict<T: Scalar>(spec: &ModelSpec, params: &ParamStore<T>, graph: &GraphContext<T>) -> Result<Tensor<T>> {
    let mut tape = Tape::new();
    let mut rng = RngStream::from_seed(0);
    let out = forward(spec, params, graph, &mut tape, &mut rng, false)?;
    Ok(tape.value(out.logits).clone())
}

fn in_l2_scope(scope: L2Scope, role: ParamRole) -> bool {
    match (scope, role) {
        (L2Scope::FirstLayer, ParamRole::Weight { layer }) => layer == 1,
        (_, ParamRole::Weight { .. }) => true,
        _ => false,
    }
}

/// `l2_strength / 2 * sum w^2` over the weight matrices in scope, recorded on
/// the tape. `None` when the strength is zero.
pub fn l2_penalty<T: Scalar>(
    spec: &ModelSpec,
    params: &ParamStore<T>,
    tape: &mut Tape<T>,
    vars: &[Var],
) -> Result<Option<Var>> {
    if spec.l2_strength == 0.0 {
        return Ok(None);
    }
    let scope = spec.effective_l2_scope();
    let mut total: Option<Var> = None;
    for (entry, &v) in params.entries().iter().zip(vars) {
        if in_l2_scope(scope, entry.role) {
            let s = tape.sum_squares(v);
            total = Some(match total {
                Some(t) => tape.add(t, s)?,
                None => s,
            });
        }
    }
    Ok(total.map(|t| tape.scale(t, T::from_f64_lossy(0.5 * spec.l2_strength))))
}

/// Plain-arithmetic value of [`l2_penalty`].
pub fn l2_value<T: Scalar>(spec: &ModelSpec, params: &ParamStore<T>) -> f64 {
    let scope = spec.effective_l2_scope();
    let ss: f64 = params
        .entries()
        .iter()
        .filter(|e| in_l2_scope(scope, e.role))
        .flat_map(|e| e.tensor.data().iter().map(|v| v.to_f64_lossy().powi(2)))
        .sum();
    0.5 * spec.l2_strength * ss
}
