//! Dense real tensors stored row-major (last index fastest).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::DimensionMismatch { expected: len, found: data.len() });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        Self { dims: dims.to_vec(), data: vec![0.0; len] }
    }

    pub fn vector(v: &[f64]) -> Self {
        Self { dims: vec![v.len()], data: v.to_vec() }
    }

    /// `v₁ ⊗ … ⊗ v_k`.
    pub fn outer(factors: &[&[f64]]) -> Self {
        let mut t = Self { dims: Vec::new(), data: vec![1.0] };
        for f in factors {
            t = t.tensor_product(&Tensor::vector(f));
        }
        t
    }

    /// `v^{⊗k}`.
    pub fn power(v: &[f64], k: usize) -> Self {
        let factors: Vec<&[f64]> = std::iter::repeat_n(v, k).collect();
        Self::outer(&factors)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        index.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    /// Multi-index of a flat offset.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            idx[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
        idx
    }

    fn check_same_shape(&self, other: &Tensor) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        Ok(())
    }

    pub fn inner(&self, other: &Tensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm1(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, c: f64) -> Tensor {
        Tensor { dims: self.dims.clone(), data: self.data.iter().map(|x| c * x).collect() }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, other: &Tensor, c: f64) -> Result<Tensor> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect();
        Ok(Tensor { dims: self.dims.clone(), data })
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn tensor_product(&self, other: &Tensor) -> Tensor {
        let mut data = Vec::with_capacity(self.len() * other.len());
        for a in &self.data {
            data.extend(other.data.iter().map(|b| a * b));
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Tensor { dims, data }
    }

    /// Applies `m` to mode `axis`.
    pub fn apply_axis(&self, m: &DMatrix<f64>, axis: usize) -> Result<Tensor> {
        if axis >= self.order() {
            return Err(Error::OutOfRange(format!("axis {axis} for an order-{} tensor", self.order())));
        }
        let d = self.dims[axis];
        if m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.ncols() });
        }
        let r = m.nrows();
        let outer: usize = self.dims[..axis].iter().product();
        let inner: usize = self.dims[axis + 1..].iter().product();
        let mut data = vec![0.0; outer * r * inner];
        for o in 0..outer {
            for c in 0..d {
                let src = &self.data[(o * d + c) * inner..(o * d + c + 1) * inner];
                for row in 0..r {
                    let coef = m[(row, c)];
                    if coef == 0.0 {
                        continue;
                    }
                    let dst = &mut data[(o * r + row) * inner..(o * r + row + 1) * inner];
                    for (y, x) in dst.iter_mut().zip(src) {
                        *y += coef * x;
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims[axis] = r;
        Ok(Tensor { dims, data })
    }

    /// `m^{⊗k}` applied to every mode.
    pub fn apply_all(&self, m: &DMatrix<f64>) -> Result<Tensor> {
        let mut t = self.clone();
        for axis in 0..self.order() {
            t = t.apply_axis(m, axis)?;
        }
        Ok(t)
    }

    /// `⟨v₁ ⊗ … ⊗ v_k, self⟩`.
    pub fn contract_vectors(&self, vs: &[&[f64]]) -> Result<f64> {
        let v = self.contract_except(usize::MAX, vs)?;
        Ok(v[0])
    }

    /// Contracts every mode except `skip` against the given vectors and
    /// returns the remaining vector. With `skip` out of range every mode is
    /// contracted and a single-entry vector is returned.
    pub fn contract_except(&self, skip: usize, vs: &[&[f64]]) -> Result<Vec<f64>> {
        if vs.len() != self.order() {
            return Err(Error::DimensionMismatch { expected: self.order(), found: vs.len() });
        }
        for (v, &d) in vs.iter().zip(&self.dims) {
            if v.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: v.len() });
            }
        }
        // Contract from the last mode inward, keeping `skip` as a live axis.
        let mut cur = self.data.clone();
        let mut dims = self.dims.clone();
        for axis in (0..self.order()).rev() {
            if axis == skip {
                continue;
            }
            let d = dims[axis];
            let inner: usize = dims[axis + 1..].iter().product();
            let outer: usize = dims[..axis].iter().product();
            let mut next = vec![0.0; outer * inner];
            for o in 0..outer {
                for (c, &w) in vs[axis].iter().enumerate().take(d) {
                    if w == 0.0 {
                        continue;
                    }
                    let base = (o * d + c) * inner;
                    for i in 0..inner {
                        next[o * inner + i] += w * cur[base + i];
                    }
                }
            }
            cur = next;
            dims.remove(axis);
        }
        Ok(cur)
    }

    /// Matrix view with the first `split` modes as rows.
    pub fn matricize(&self, split: usize) -> DMatrix<f64> {
        let rows: usize = self.dims[..split].iter().product();
        let cols: usize = self.dims[split..].iter().product();
        DMatrix::from_row_slice(rows, cols, &self.data)
    }

    /// Matrix view with mode `axis` as rows and the remaining modes (in
    /// order) as columns.
    pub fn unfold(&self, axis: usize) -> DMatrix<f64> {
        let d = self.dims[axis];
        let cols = self.len() / d.max(1);
        let mut m = DMatrix::zeros(d, cols);
        for flat in 0..self.len() {
            let idx = self.multi_index(flat);
            let mut col = 0;
            for (a, (&i, &dim)) in idx.iter().zip(&self.dims).enumerate() {
                if a != axis {
                    col = col * dim + i;
                }
            }
            m[(idx[axis], col)] = self.data[flat];
        }
        m
    }

    /// Nested JSON arrays, outermost index first.
    pub fn to_nested(&self) -> Value {
        fn build(dims: &[usize], data: &[f64]) -> Value {
            if dims.is_empty() {
                return Value::from(data[0]);
            }
            let step = data.len() / dims[0].max(1);
            Value::Array(
                (0..dims[0]).map(|i| build(&dims[1..], &data[i * step..(i + 1) * step])).collect(),
            )
        }
        build(&self.dims, &self.data)
    }

    pub fn from_nested(v: &Value) -> Result<Tensor> {
        fn shape(v: &Value, dims: &mut Vec<usize>) {
            if let Value::Array(items) = v {
                dims.push(items.len());
                if let Some(first) = items.first() {
                    shape(first, dims);
                }
            }
        }
        fn flatten(v: &Value, depth: usize, dims: &[usize], out: &mut Vec<f64>) -> Result<()> {
            match v {
                Value::Array(items) => {
                    if depth >= dims.len() || items.len() != dims[depth] {
                        return Err(Error::Verification("ragged nested tensor".into()));
                    }
                    items.iter().try_for_each(|x| flatten(x, depth + 1, dims, out))
                }
                Value::Number(n) if depth == dims.len() => {
                    out.push(n.as_f64().unwrap_or(f64::NAN));
                    Ok(())
                }
                _ => Err(Error::Verification("malformed nested tensor".into())),
            }
        }
        let mut dims = Vec::new();
        shape(v, &mut dims);
        let mut data = Vec::new();
        flatten(v, 0, &dims, &mut data)?;
        Tensor::new(dims, data)
    }
}

/// Serde adapter storing a tensor as nested arrays.
pub mod nested {
    use super::Tensor;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(t: &Tensor, s: S) -> Result<S::Ok, S::Error> {
        t.to_nested().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Tensor, D::Error> {
        let v = Value::deserialize(d)?;
        Tensor::from_nested(&v).map_err(serde::de::Error::custom)
    }
}
