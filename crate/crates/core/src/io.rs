//! JSON formats for tensors and odeco specifications.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::odeco::SymOdecoSpec;
use crate::tensor::{DenseTensor, SymmetricTensor, SymmetryMode};

/// `{"order": k, "dims": [...], "symmetric": bool, "entries": [...]}`, entries
/// row-major with the last index fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorFile {
    pub order: usize,
    pub dims: Vec<usize>,
    pub symmetric: bool,
    pub entries: Vec<f64>,
}

/// A tensor read from JSON; `symmetric` is set when the file declares it
/// and the entries pass the symmetry check.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTensor {
    pub tensor: DenseTensor,
    pub symmetric: Option<SymmetricTensor>,
}

fn field(name: &str, msg: impl std::fmt::Display) -> TensorError {
    TensorError::InvalidInput(format!("field `{name}`: {msg}"))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| TensorError::InvalidInput(format!("malformed JSON: {e}")))
}

pub fn parse_tensor(text: &str) -> Result<LoadedTensor> {
    let file: TensorFile = parse(text)?;
    if file.order != file.dims.len() {
        return Err(field(
            "order",
            format!("{} but `dims` has {} entries", file.order, file.dims.len()),
        ));
    }
    let expected: usize = file.dims.iter().product();
    if file.entries.len() != expected {
        return Err(field(
            "entries",
            format!("expected {expected} values, got {}", file.entries.len()),
        ));
    }
    let tensor = DenseTensor::new(file.dims, file.entries).map_err(|e| field("entries", e))?;
    let symmetric = if file.symmetric {
        Some(
            SymmetricTensor::from_dense(tensor.clone(), SymmetryMode::verify())
                .map_err(|e| field("symmetric", e))?,
        )
    } else {
        None
    };
    Ok(LoadedTensor { tensor, symmetric })
}

pub fn tensor_to_json(tensor: &DenseTensor, symmetric: bool) -> String {
    let file = TensorFile {
        order: tensor.order(),
        dims: tensor.dims().to_vec(),
        symmetric,
        entries: tensor.entries().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("tensor serializes")
}

/// `{"n", "r", "k", "U": [columns], "lambdas"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdecoSpecFile {
    pub n: usize,
    pub r: usize,
    pub k: usize,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
}

pub fn parse_odeco_spec(text: &str) -> Result<(SymOdecoSpec, usize)> {
    let file: OdecoSpecFile = parse(text)?;
    if file.k < DenseTensor::MIN_ORDER {
        return Err(field("k", format!("order {} is below 3", file.k)));
    }
    if file.u.len() != file.r {
        return Err(field(
            "U",
            format!("{} columns but r = {}", file.u.len(), file.r),
        ));
    }
    if file.lambdas.len() != file.r {
        return Err(field(
            "lambdas",
            format!("{} weights but r = {}", file.lambdas.len(), file.r),
        ));
    }
    if let Some(j) = file.u.iter().position(|col| col.len() != file.n) {
        return Err(field(
            "U",
            format!("column {j} does not have length n = {}", file.n),
        ));
    }
    if file.n == 0 {
        return Err(field("n", "must be positive"));
    }
    let flat: Vec<f64> = file.u.concat();
    let u = DMatrix::from_column_slice(file.n, file.r, &flat);
    let spec = SymOdecoSpec::new(u, file.lambdas).map_err(|e| field("U", e))?;
    Ok((spec, file.k))
}

pub fn odeco_spec_to_json(spec: &SymOdecoSpec, k: usize) -> String {
    let file = OdecoSpecFile {
        n: spec.n(),
        r: spec.r(),
        k,
        u: spec
            .factors()
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect(),
        lambdas: spec.lambdas().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("spec serializes")
}
