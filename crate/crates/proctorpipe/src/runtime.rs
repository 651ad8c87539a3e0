//! Backend-neutral model sessions over ONNX graphs.
//!
//! The backend is tract. Nothing outside this module touches its types.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use proctorpipe_core::TensorF32;
use serde::Serialize;
use tract_onnx::prelude::*;
use tract_onnx::tract_hir::infer::Factoid;

use crate::{Error, Result};

type Plan = TypedRunnableModel;

/// Name and (when the graph declares it) static shape of one graph port.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Option<Vec<usize>>,
}

impl TensorSpec {
    pub fn static_shape(&self) -> Result<&[usize]> {
        self.shape.as_deref().ok_or_else(|| Error::ShapeUnavailable(self.name.clone()))
    }
}

/// A loaded graph ready for execution.
///
/// At most one inference runs per session at a time. [`ModelSession::fork`]
/// gives another worker its own session over the same compiled graph.
pub struct ModelSession {
    graph_path: PathBuf,
    inputs: Vec<TensorSpec>,
    outputs: Vec<TensorSpec>,
    plan: Arc<Plan>,
    in_flight: Mutex<()>,
}

impl std::fmt::Debug for ModelSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelSession")
            .field("graph_path", &self.graph_path)
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .finish()
    }
}

pub type NamedTensors = BTreeMap<String, TensorF32>;

fn malformed(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::MalformedGraph { path: path.to_path_buf(), reason: e.to_string() }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSession> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let model = tract_onnx::onnx().model_for_path(path).map_err(|e| malformed(path, e))?;

    let port = |outlet: OutletId, shape: Option<Vec<usize>>| TensorSpec {
        name: model
            .outlet_label(outlet)
            .map(str::to_string)
            .unwrap_or_else(|| model.node(outlet.node).name.clone()),
        shape,
    };
    let mut inputs = Vec::new();
    for &o in model.input_outlets().map_err(|e| malformed(path, e))? {
        let fact = model.outlet_fact(o).map_err(|e| malformed(path, e))?;
        let shape = fact.shape.as_concrete_finite().ok().flatten().map(|s| s.to_vec());
        let is_f32 = fact.datum_type.concretize().is_none_or(|t| t == f32::datum_type());
        if !is_f32 {
            return Err(malformed(path, format!("input {o:?} is not float32")));
        }
        inputs.push(port(o, shape));
    }
    let output_outlets = model.output_outlets().map_err(|e| malformed(path, e))?.to_vec();
    let output_names: Vec<TensorSpec> = output_outlets.iter().map(|&o| port(o, None)).collect();
    if inputs.is_empty() || output_names.is_empty() {
        return Err(malformed(path, "graph declares no inputs or no outputs"));
    }

    let all_static = inputs.iter().all(|i| i.shape.is_some());
    let typed = if all_static {
        model.into_optimized()
    } else {
        model.into_typed().and_then(|m| m.into_decluttered())
    }
    .map_err(|e| malformed(path, e))?;

    let mut outputs = Vec::new();
    for (spec, &o) in output_names.into_iter().zip(typed.output_outlets().map_err(|e| malformed(path, e))?) {
        let fact = typed.outlet_fact(o).map_err(|e| malformed(path, e))?;
        outputs.push(TensorSpec { shape: fact.shape.as_concrete().map(|s| s.to_vec()), ..spec });
    }
    let plan = typed.into_runnable().map_err(|e| malformed(path, e))?;

    Ok(ModelSession { graph_path: path.to_path_buf(), inputs, outputs, plan, in_flight: Mutex::new(()) })
}

impl ModelSession {
    pub fn graph_path(&self) -> &Path {
        &self.graph_path
    }

    pub fn input_spec(&self) -> &[TensorSpec] {
        &self.inputs
    }

    pub fn output_spec(&self) -> &[TensorSpec] {
        &self.outputs
    }

    /// A new session sharing the compiled graph but with its own
    /// in-flight slot.
    pub fn fork(&self) -> ModelSession {
        ModelSession {
            graph_path: self.graph_path.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            plan: Arc::clone(&self.plan),
            in_flight: Mutex::new(()),
        }
    }

    /// Runs the graph. `inputs` must name every declared input exactly once.
    pub fn run_inference(&self, inputs: &NamedTensors) -> Result<NamedTensors> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::ShapeMismatch {
                name: "<inputs>".to_string(),
                expected: format!("{} named inputs", self.inputs.len()),
                actual: vec![inputs.len()],
            });
        }
        let mut values: TVec<TValue> = tvec![];
        for spec in &self.inputs {
            let t = inputs.get(&spec.name).ok_or_else(|| Error::ShapeMismatch {
                name: spec.name.clone(),
                expected: "a tensor for this input".to_string(),
                actual: vec![],
            })?;
            if let Some(shape) = &spec.shape {
                if t.shape() != shape.as_slice() {
                    return Err(Error::ShapeMismatch {
                        name: spec.name.clone(),
                        expected: format!("{shape:?}"),
                        actual: t.shape().to_vec(),
                    });
                }
            }
            let tensor = Tensor::from_shape(t.shape(), t.data()).map_err(|e| Error::RuntimeFailure(e.to_string()))?;
            values.push(tensor.into());
        }

        let outputs = {
            let _slot = self.in_flight.lock().unwrap_or_else(|p| p.into_inner());
            self.plan.run(values).map_err(|e| Error::RuntimeFailure(format!("{e:#}")))?
        };

        let mut named = NamedTensors::new();
        for (spec, value) in self.outputs.iter().zip(outputs) {
            let view = value.to_plain_array_view::<f32>().map_err(|e| Error::RuntimeFailure(e.to_string()))?;
            let shape = view.shape().to_vec();
            if let Some(declared) = &spec.shape {
                if *declared != shape {
                    return Err(Error::RuntimeFailure(format!(
                        "output {:?} has shape {shape:?}, graph declares {declared:?}",
                        spec.name
                    )));
                }
            }
            let tensor = TensorF32::new(shape, view.iter().copied().collect())?;
            named.insert(spec.name.clone(), tensor);
        }
        Ok(named)
    }

    /// Convenience for single-input, single-output graphs.
    pub fn run_single(&self, input: TensorF32) -> Result<TensorF32> {
        let [spec] = self.inputs.as_slice() else {
            return Err(Error::RuntimeFailure(format!("graph has {} inputs", self.inputs.len())));
        };
        let mut named = NamedTensors::new();
        named.insert(spec.name.clone(), input);
        let mut out = self.run_inference(&named)?;
        let first = &self.outputs[0].name;
        out.remove(first).ok_or_else(|| Error::RuntimeFailure(format!("missing output {first:?}")))
    }
}
