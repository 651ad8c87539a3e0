//! Writes the two toy ONNX graphs used as test fixtures, plus a JSON
//! manifest next to each describing its exact behavior.
//!
//! ```text
//! cargo run -p proctorpipe --example make_toy_models -- crates/proctorpipe/tests/fixtures
//! ```
//!
//! The detector ignores its input and always emits the same raw
//! `[1, 84, 16]` tensor. The classifier averages each normalized input
//! plane and returns logits `(-m, m)` where `m` is the mean over channels,
//! so bright crops lean cheating and dark crops lean not_cheating.

#![allow(dead_code)]

use std::path::Path;

use prost::Message;
use serde_json::json;
use sha2::{Digest, Sha256};
use tract_onnx::pb::{
    attribute_proto::AttributeType, tensor_proto::DataType, tensor_shape_proto, type_proto,
    AttributeProto, GraphProto, ModelProto, NodeProto, OperatorSetIdProto, TensorProto,
    TensorShapeProto, TypeProto, ValueInfoProto,
};

pub const DETECTOR_ANCHORS: usize = 16;
pub const DETECTOR_ROWS: usize = 84;

/// (cx, cy, w, h, class id, score) in the 640x640 letterbox frame.
pub const TOY_ANCHORS: [(f32, f32, f32, f32, usize, f32); 5] = [
    (160.0, 320.0, 128.0, 256.0, 0, 0.90),
    (480.0, 320.0, 128.0, 256.0, 0, 0.80),
    // chair, discarded by the person filter
    (320.0, 500.0, 100.0, 60.0, 56, 0.70),
    // below the 0.25 confidence threshold
    (320.0, 100.0, 40.0, 40.0, 0, 0.20),
    // near-duplicate of the first person, removed by NMS
    (164.0, 322.0, 128.0, 256.0, 0, 0.60),
];

fn value_info(name: &str, dims: &[i64]) -> ValueInfoProto {
    let dim = dims
        .iter()
        .map(|&d| tensor_shape_proto::Dimension {
            value: Some(tensor_shape_proto::dimension::Value::DimValue(d)),
            ..Default::default()
        })
        .collect();
    ValueInfoProto {
        name: name.to_string(),
        r#type: Some(TypeProto {
            value: Some(type_proto::Value::TensorType(type_proto::Tensor {
                elem_type: DataType::Float as i32,
                shape: Some(TensorShapeProto { dim }),
            })),
            ..Default::default()
        }),
        ..Default::default()
    }
}

fn float_tensor(name: &str, dims: &[i64], data: Vec<f32>) -> TensorProto {
    TensorProto {
        name: name.to_string(),
        dims: dims.to_vec(),
        data_type: DataType::Float as i32,
        float_data: data,
        ..Default::default()
    }
}

fn ints_attr(name: &str, ints: &[i64]) -> AttributeProto {
    AttributeProto {
        name: name.to_string(),
        r#type: AttributeType::Ints as i32,
        ints: ints.to_vec(),
        ..Default::default()
    }
}

fn int_attr(name: &str, i: i64) -> AttributeProto {
    AttributeProto { name: name.to_string(), r#type: AttributeType::Int as i32, i, ..Default::default() }
}

fn node(op: &str, name: &str, inputs: &[&str], output: &str, attribute: Vec<AttributeProto>) -> NodeProto {
    NodeProto {
        op_type: op.to_string(),
        name: name.to_string(),
        input: inputs.iter().map(|s| s.to_string()).collect(),
        output: vec![output.to_string()],
        attribute,
        ..Default::default()
    }
}

fn model(graph: GraphProto) -> ModelProto {
    ModelProto {
        ir_version: 8,
        opset_import: vec![OperatorSetIdProto { domain: String::new(), version: 13 }],
        producer_name: "proctorpipe-toys".to_string(),
        producer_version: "1".to_string(),
        graph: Some(graph),
        ..Default::default()
    }
}

pub fn detector_raw_output() -> Vec<f32> {
    let a = DETECTOR_ANCHORS;
    let mut data = vec![0.0f32; DETECTOR_ROWS * a];
    for (i, &(cx, cy, w, h, class, score)) in TOY_ANCHORS.iter().enumerate() {
        data[i] = cx;
        data[a + i] = cy;
        data[2 * a + i] = w;
        data[3 * a + i] = h;
        data[(4 + class) * a + i] = score;
    }
    data
}

pub fn toy_detector() -> ModelProto {
    let out_dims = [1, DETECTOR_ROWS as i64, DETECTOR_ANCHORS as i64];
    model(GraphProto {
        name: "toy_detector".to_string(),
        node: vec![
            node("ReduceMean", "plane_mean", &["images"], "plane_mean", vec![ints_attr("axes", &[2, 3]), int_attr("keepdims", 0)]),
            node("ReduceMean", "frame_mean", &["plane_mean"], "frame_mean", vec![ints_attr("axes", &[1]), int_attr("keepdims", 1)]),
            node("Mul", "silence", &["frame_mean", "zero"], "silenced", vec![]),
            node("Add", "emit", &["silenced", "anchors"], "output0", vec![]),
        ],
        initializer: vec![
            float_tensor("zero", &[], vec![0.0]),
            float_tensor("anchors", &out_dims, detector_raw_output()),
        ],
        input: vec![value_info("images", &[1, 3, 640, 640])],
        output: vec![value_info("output0", &out_dims)],
        ..Default::default()
    })
}

pub fn toy_classifier() -> ModelProto {
    let third = 1.0f32 / 3.0;
    model(GraphProto {
        name: "toy_classifier".to_string(),
        node: vec![
            node("ReduceMean", "plane_mean", &["input"], "plane_mean", vec![ints_attr("axes", &[2, 3]), int_attr("keepdims", 0)]),
            node("MatMul", "head", &["plane_mean", "weight"], "head_out", vec![]),
            node("Add", "bias_add", &["head_out", "bias"], "logits", vec![]),
        ],
        initializer: vec![
            float_tensor("weight", &[3, 2], vec![-third, third, -third, third, -third, third]),
            float_tensor("bias", &[2], vec![0.0, 0.0]),
        ],
        input: vec![value_info("input", &[1, 3, 224, 224])],
        output: vec![value_info("logits", &[1, 2])],
        ..Default::default()
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Serializes both graphs and their manifests into `dir`.
pub fn write_toys(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let det = toy_detector().encode_to_vec();
    let cls = toy_classifier().encode_to_vec();
    std::fs::write(dir.join("toy_detector.onnx"), &det)?;
    std::fs::write(dir.join("toy_classifier.onnx"), &cls)?;

    let anchors: Vec<_> = TOY_ANCHORS
        .iter()
        .map(|&(cx, cy, w, h, class_id, score)| json!({"cx": cx, "cy": cy, "w": w, "h": h, "class_id": class_id, "score": score}))
        .collect();
    let det_manifest = json!({
        "model_name": "toy_detector",
        "file": "toy_detector.onnx",
        "input_name": "images",
        "input_shape": [1, 3, 640, 640],
        "output_name": "output0",
        "output_shape": [1, DETECTOR_ROWS, DETECTOR_ANCHORS],
        "checksum": sha256_hex(&det),
        "expected": {
            "note": "constant output regardless of input",
            "anchors": anchors,
            "person_boxes_letterbox": [[96.0, 192.0, 224.0, 448.0], [416.0, 192.0, 544.0, 448.0]],
            "person_scores": [0.90, 0.80],
        }
    });
    let cls_manifest = json!({
        "model_name": "toy_classifier",
        "file": "toy_classifier.onnx",
        "input_name": "input",
        "input_shape": [1, 3, 224, 224],
        "output_name": "logits",
        "output_shape": [1, 2],
        "checksum": sha256_hex(&cls),
        "expected": {
            "note": "m = mean of the three per-channel plane means; logits = [-m, m]",
            "weight": [[-1.0 / 3.0, 1.0 / 3.0], [-1.0 / 3.0, 1.0 / 3.0], [-1.0 / 3.0, 1.0 / 3.0]],
            "bias": [0.0, 0.0],
        }
    });
    for (name, m) in [("toy_detector.json", det_manifest), ("toy_classifier.json", cls_manifest)] {
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        text.push('\n');
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "crates/proctorpipe/tests/fixtures".to_string());
    write_toys(Path::new(&dir))?;
    println!("wrote toy models to {dir}");
    Ok(())
}
