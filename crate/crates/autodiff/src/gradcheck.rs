use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::graph::{Graph, NodeId};
use crate::params::{BoundParams, ParamStore};

pub struct GradCheckSettings {
    /// Central-difference step.
    pub epsilon: f64,
    /// Coordinates probed per tensor; tensors at or under this size are
    /// probed exhaustively.
    pub coords_per_tensor: usize,
    pub seed: u64,
}

impl Default for GradCheckSettings {
    fn default() -> Self {
        GradCheckSettings {
            epsilon: 1e-5,
            coords_per_tensor: 64,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub coords_checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error <= tolerance
    }
}

/// Compare reverse-mode gradients against central finite differences.
///
/// `build` must construct the same forward computation every call, returning
/// the scalar loss node; all variation between calls comes from the bound
/// parameter values. Relative error uses |a| + |n| + 1e-3 as denominator so
/// near-zero gradients are judged on absolute terms. Run this on an f64
/// store: f32 forward noise swamps the difference quotient.
pub fn gradient_check<T, F>(
    store: &ParamStore<T>,
    settings: &GradCheckSettings,
    build: F,
) -> Result<GradCheckReport>
where
    T: Element,
    F: Fn(&mut Graph<T>, &BoundParams) -> Result<NodeId>,
{
    if settings.coords_per_tensor == 0 {
        return Err(AutodiffError::Usage(
            "gradient check needs at least one coordinate per tensor".into(),
        ));
    }
    if settings.epsilon <= 0.0 {
        return Err(AutodiffError::Usage("epsilon must be positive".into()));
    }

    // One analytic pass for all parameters.
    let mut graph = Graph::new();
    let bound = store.bind(&mut graph);
    let loss = build(&mut graph, &bound)?;
    graph.backward(loss)?;
    let analytic: Vec<Vec<f64>> = store
        .ids()
        .map(|id| {
            let n = store.tensor(id).numel();
            match store.grad_of(&graph, &bound, id) {
                Some(g) => g.iter().map(|v| v.as_f64()).collect(),
                None => vec![0.0; n],
            }
        })
        .collect();
    drop(graph);

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let eps = settings.epsilon;
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        coords_checked: 0,
    };

    for id in store.ids() {
        let n = store.tensor(id).numel();
        let mut coords: Vec<usize> = if n <= settings.coords_per_tensor {
            (0..n).collect()
        } else {
            rand::seq::index::sample(&mut rng, n, settings.coords_per_tensor).into_vec()
        };
        coords.sort_unstable();

        for index in coords {
            let probe = |delta: f64| -> Result<f64> {
                let mut g = Graph::new();
                let b = store.bind_perturbed(&mut g, id, index, T::of_f64(delta));
                let l = build(&mut g, &b)?;
                Ok(g.scalar_value(l).as_f64())
            };
            let plus = probe(eps)?;
            let minus = probe(-eps)?;
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[id.0][index];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-3);
            report.coords_checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_param = store.name(id).to_string();
                report.worst_index = index;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    Ok(report)
}
