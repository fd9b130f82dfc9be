use autodiff::{BoundParams, Element, Graph, NodeId, ParamId, ParamStore};
use rand_chacha::ChaCha8Rng;

use crate::blocks::LinearParams;
use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use crate::featurize::{FeatureNeeds, Sample};
use crate::registry::Model;

/// Fixed-architecture CNN over the raw error-level map: two 5-wide conv
/// layers of 32 kernels with relu and 2x2 pooling, then a 256-wide MLP
/// into two classes. 128x128x3 shrinks to 29x29x32 = 26912 at flatten.
pub struct ElaCnnModel<T: Element> {
    cfg: ModelConfig,
    store: ParamStore<T>,
    conv: Vec<(ParamId, ParamId)>,
    fc1: LinearParams,
    fc2: LinearParams,
}

impl<T: Element> ElaCnnModel<T> {
    pub fn new(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let arch = &cfg.elacnn;
        let mut store = ParamStore::new(seed);
        let mut conv = Vec::with_capacity(arch.conv_layers);
        let mut cin = 3;
        for i in 0..arch.conv_layers {
            let kw = arch.kernel_width;
            let kernels = store.glorot(
                &format!("conv{i}.kernels"),
                vec![kw, kw, cin, arch.kernels],
                kw * kw * cin,
                arch.kernels,
            )?;
            let bias = store.zeros(&format!("conv{i}.bias"), vec![arch.kernels])?;
            conv.push((kernels, bias));
            cin = arch.kernels;
        }
        let fc1 = LinearParams::register(&mut store, "mlp.fc1", arch.flatten(), arch.mlp_hidden)?;
        let fc2 = LinearParams::register(&mut store, "mlp.fc2", arch.mlp_hidden, arch.classes)?;
        Ok(ElaCnnModel {
            cfg: cfg.clone(),
            store,
            conv,
            fc1,
            fc2,
        })
    }
}

impl<T: Element> Model<T> for ElaCnnModel<T> {
    fn name(&self) -> &'static str {
        "elacnn"
    }

    fn needs(&self) -> FeatureNeeds {
        FeatureNeeds {
            tokens: false,
            regions: false,
            ela: true,
        }
    }

    fn store(&self) -> &ParamStore<T> {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    fn forward(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        sample: &Sample,
        _rng: Option<&mut ChaCha8Rng>,
    ) -> Result<NodeId> {
        let arch = &self.cfg.elacnn;
        let ela = sample.ela.as_ref().ok_or_else(|| {
            ModelError::Data(format!("sample {} has no error-level channel", sample.id))
        })?;
        let side = arch.input;
        if ela.len() != side * side * 3 {
            return Err(ModelError::Data(format!(
                "sample {}: error-level channel of {} values, expected {}",
                sample.id,
                ela.len(),
                side * side * 3
            )));
        }
        let data: Vec<T> = ela.iter().map(|&v| T::of_f64(v as f64)).collect();
        let mut x = g.constant(data, vec![side, side, 3])?;
        for (kernels, bias) in &self.conv {
            let conv = g.conv2d(x, bound.node(*kernels), bound.node(*bias))?;
            let act = g.relu(conv);
            x = g.maxpool2(act)?;
        }
        let flat = g.reshape(x, vec![1, arch.flatten()])?;
        let hidden = self.fc1.apply(g, bound, flat)?;
        let hidden = g.relu(hidden);
        self.fc2.apply(g, bound, hidden)
    }
}
