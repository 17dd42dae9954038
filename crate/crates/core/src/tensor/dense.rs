//! Shape-tagged dense tensors, matrices and the mode-product family.

use super::TensorError;

/// Dense tensor with row-major storage (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Builds a tensor, validating that `data` fills `shape` exactly and that
    /// every mode size is at least one. An empty shape is an order-0 scalar.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        if shape.iter().any(|&s| s == 0) {
            return Err(TensorError::ZeroMode { shape });
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(TensorError::ShapeDataMismatch {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        assert!(shape.iter().all(|&s| s > 0), "zero mode size");
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Flat offset of a multi-index, validating each coordinate.
    pub fn offset(&self, index: &[usize]) -> Result<usize, TensorError> {
        if index.len() != self.shape.len() {
            return Err(TensorError::IndexOrderMismatch {
                expected: self.shape.len(),
                actual: index.len(),
            });
        }
        let mut off = 0usize;
        for (mode, (&i, &size)) in index.iter().zip(&self.shape).enumerate() {
            if i >= size {
                return Err(TensorError::IndexOutOfRange {
                    mode,
                    index: i,
                    size,
                });
            }
            off = off * size + i;
        }
        Ok(off)
    }

    pub fn get(&self, index: &[usize]) -> Result<f64, TensorError> {
        Ok(self.data[self.offset(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<(), TensorError> {
        let off = self.offset(index)?;
        self.data[off] = value;
        Ok(())
    }

    /// Same flat data under a new shape tag; the linearization is untouched.
    pub fn reshape(&self, new_shape: Vec<usize>) -> Result<Self, TensorError> {
        self.clone().into_reshape(new_shape)
    }

    /// Reshape that consumes the tensor without copying its data.
    pub fn into_reshape(self, new_shape: Vec<usize>) -> Result<Self, TensorError> {
        if new_shape.iter().any(|&s| s == 0) {
            return Err(TensorError::ZeroMode { shape: new_shape });
        }
        let requested_elements: usize = new_shape.iter().product();
        if requested_elements != self.data.len() {
            return Err(TensorError::ReshapeMismatch {
                elements: self.data.len(),
                requested: new_shape,
                requested_elements,
            });
        }
        Ok(Self {
            shape: new_shape,
            data: self.data,
        })
    }

    /// True when every element is exactly 0.0 or 1.0.
    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0 || x == 1.0)
    }

    /// Visits every multi-index in row-major order.
    pub fn indices(&self) -> IndexIter<'_> {
        IndexIter {
            shape: &self.shape,
            next: if self.data.is_empty() {
                None
            } else {
                Some(vec![0; self.shape.len()])
            },
        }
    }
}

pub struct IndexIter<'a> {
    shape: &'a [usize],
    next: Option<Vec<usize>>,
}

impl Iterator for IndexIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.clone()?;
        // advance, rightmost mode fastest
        let mut idx = current.clone();
        let mut mode = self.shape.len();
        loop {
            if mode == 0 {
                self.next = None;
                break;
            }
            mode -= 1;
            idx[mode] += 1;
            if idx[mode] < self.shape[mode] {
                self.next = Some(idx);
                break;
            }
            idx[mode] = 0;
        }
        Some(current)
    }
}

/// Row-major matrix of `f64`, the workhorse for embeddings and ring slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::ShapeDataMismatch {
                shape: vec![rows, cols],
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self * other`. Skips exact zeros in the left operand; one-hot and
    /// diagonal-slice inputs are common here and dominate the oracle paths.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    /// `self^T * v`, without forming the transpose.
    pub fn matvec_transposed(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += w * a;
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "trace of a non-square matrix");
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// Frobenius inner product `<self, other^T>` = sum_ij self[i,j] * other[j,i].
    pub fn dot_transposed(&self, other: &Mat) -> f64 {
        assert_eq!(self.rows, other.cols);
        assert_eq!(self.cols, other.rows);
        let mut acc = 0.0;
        for i in 0..self.rows {
            for (j, &a) in self.row(i).iter().enumerate() {
                acc += a * other.data[j * other.cols + i];
            }
        }
        acc
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Contracts `mode` of `t` with the vector `v`, removing that mode.
///
/// Element of the result: sum_j t[..., j at mode, ...] * v[j]. Pure; inputs
/// are left untouched. Modes are 0-based.
pub fn mode_product(t: &DenseTensor, v: &[f64], mode: usize) -> Result<DenseTensor, TensorError> {
    let shape = t.shape();
    if mode >= shape.len() {
        return Err(TensorError::ModeOutOfRange {
            mode,
            order: shape.len(),
        });
    }
    if v.len() != shape[mode] {
        return Err(TensorError::DimMismatch {
            mode,
            expected: shape[mode],
            actual: v.len(),
        });
    }
    let outer: usize = shape[..mode].iter().product();
    let size = shape[mode];
    let inner: usize = shape[mode + 1..].iter().product();

    let mut out = vec![0.0; outer * inner];
    let data = t.data();
    for o in 0..outer {
        let out_block = &mut out[o * inner..(o + 1) * inner];
        for (j, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let src = &data[(o * size + j) * inner..(o * size + j + 1) * inner];
            for (acc, &x) in out_block.iter_mut().zip(src) {
                *acc += w * x;
            }
        }
    }
    let mut new_shape = Vec::with_capacity(shape.len() - 1);
    new_shape.extend_from_slice(&shape[..mode]);
    new_shape.extend_from_slice(&shape[mode + 1..]);
    DenseTensor::new(new_shape, out)
}

/// Contracts `mode` of `t` with the matrix `a` (rows x shape[mode]); the mode
/// is replaced by `a.rows()` rather than removed.
pub fn mode_matrix_product(
    t: &DenseTensor,
    a: &Mat,
    mode: usize,
) -> Result<DenseTensor, TensorError> {
    let shape = t.shape();
    if mode >= shape.len() {
        return Err(TensorError::ModeOutOfRange {
            mode,
            order: shape.len(),
        });
    }
    if a.cols() != shape[mode] {
        return Err(TensorError::DimMismatch {
            mode,
            expected: shape[mode],
            actual: a.cols(),
        });
    }
    let outer: usize = shape[..mode].iter().product();
    let size = shape[mode];
    let inner: usize = shape[mode + 1..].iter().product();
    let rows = a.rows();

    let mut out = vec![0.0; outer * rows * inner];
    let data = t.data();
    for o in 0..outer {
        for r in 0..rows {
            let arow = a.row(r);
            let out_block = &mut out[(o * rows + r) * inner..(o * rows + r + 1) * inner];
            for (j, &w) in arow.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = &data[(o * size + j) * inner..(o * size + j + 1) * inner];
                for (acc, &x) in out_block.iter_mut().zip(src) {
                    *acc += w * x;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[mode] = rows;
    DenseTensor::new(new_shape, out)
}

/// Tucker reconstruction: `core x_0 factors[0] x_1 factors[1] ...`.
///
/// Factor `i` must have `core.shape[i]` columns; the output shape is the
/// factors' row counts.
pub fn tucker_reconstruct(core: &DenseTensor, factors: &[Mat]) -> Result<DenseTensor, TensorError> {
    if factors.len() != core.order() {
        return Err(TensorError::IndexOrderMismatch {
            expected: core.order(),
            actual: factors.len(),
        });
    }
    let mut acc = core.clone();
    for (mode, f) in factors.iter().enumerate() {
        acc = mode_matrix_product(&acc, f, mode)?;
    }
    Ok(acc)
}

/// Multi-linear dot product: sum_i prod_j vs[j][i].
pub fn multilinear_dot(vs: &[&[f64]]) -> Result<f64, TensorError> {
    let Some(first) = vs.first() else {
        return Ok(0.0);
    };
    let len = first.len();
    for v in vs {
        if v.len() != len {
            return Err(TensorError::LengthMismatch {
                expected: len,
                actual: v.len(),
            });
        }
    }
    let mut acc = 0.0;
    for i in 0..len {
        let mut p = 1.0;
        for v in vs {
            p *= v[i];
        }
        acc += p;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_product_one_hot_selects_slice() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = mode_product(&t, &[1.0, 0.0], 1).unwrap();
        assert_eq!(out.shape(), &[2]);
        assert_eq!(out.data(), &[1.0, 3.0]);
    }

    #[test]
    fn mode_product_matches_explicit_double_loop() {
        let t = DenseTensor::new(vec![2, 2, 2], (1..=8).map(f64::from).collect()).unwrap();
        // oracle: sum the two mode-0 slices with an explicit loop
        let mut expected = vec![0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    expected[j * 2 + k] += t.get(&[i, j, k]).unwrap();
                }
            }
        }
        assert_eq!(expected, vec![6.0, 8.0, 10.0, 12.0]);
        let out = mode_product(&t, &[1.0, 1.0], 0).unwrap();
        assert_eq!(out.shape(), &[2, 2]);
        assert_eq!(out.data(), expected.as_slice());
    }

    #[test]
    fn mode_product_zero_vector_yields_zero_tensor() {
        let t = DenseTensor::new(vec![3, 2], vec![1.0; 6]).unwrap();
        let out = mode_product(&t, &[0.0, 0.0], 1).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
        assert_eq!(out.shape(), &[3]);
    }

    #[test]
    fn mode_product_dimension_error_names_mode_and_sizes() {
        let t = DenseTensor::new(vec![2, 3], vec![0.0; 6]).unwrap();
        let err = mode_product(&t, &[1.0, 1.0], 1).unwrap_err();
        assert_eq!(
            err,
            TensorError::DimMismatch {
                mode: 1,
                expected: 3,
                actual: 2
            }
        );
    }

    #[test]
    fn tucker_identity_factors_reproduce_core() {
        let core = DenseTensor::new(vec![2, 3], vec![1.0, -2.0, 3.0, 4.0, 0.5, -1.0]).unwrap();
        let out = tucker_reconstruct(&core, &[Mat::identity(2), Mat::identity(3)]).unwrap();
        assert_eq!(out, core);
    }

    #[test]
    fn tucker_ones_factors_sum_identity_core() {
        // hand expansion of the double sum: identity core contracted twice
        // with the 1x2 all-ones factor leaves the trace
        let core = DenseTensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let f = Mat::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        let out = tucker_reconstruct(&core, &[f.clone(), f]).unwrap();
        assert_eq!(out.shape(), &[1, 1]);
        assert_eq!(out.data(), &[2.0]);
    }

    #[test]
    fn tucker_one_hot_factors_select_entry() {
        let core = DenseTensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let fi = Mat::from_vec(1, 2, vec![0.0, 1.0]).unwrap();
        let fj = Mat::from_vec(1, 3, vec![0.0, 0.0, 1.0]).unwrap();
        let out = tucker_reconstruct(&core, &[fi, fj]).unwrap();
        assert_eq!(out.data(), &[core.get(&[1, 2]).unwrap()]);
    }

    #[test]
    fn tucker_rank_mismatch_is_error() {
        let core = DenseTensor::new(vec![2, 2], vec![0.0; 4]).unwrap();
        let err = tucker_reconstruct(&core, &[Mat::identity(3), Mat::identity(2)]).unwrap_err();
        assert!(matches!(err, TensorError::DimMismatch { mode: 0, .. }));
    }

    #[test]
    fn reshape_preserves_flat_data_bit_exactly() {
        let t = DenseTensor::new(vec![2, 3], vec![1.0, 2.5, -3.0, 4.0, 5.0, 6.25]).unwrap();
        let r = t.reshape(vec![3, 2]).unwrap();
        assert_eq!(r.data(), t.data());
        assert_eq!(r.shape(), &[3, 2]);
        let flat = t.reshape(vec![6]).unwrap();
        assert_eq!(flat.data(), t.data());
        let back = r.reshape(vec![2, 3]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn reshape_element_count_mismatch_is_error() {
        let t = DenseTensor::new(vec![2, 2], vec![0.0; 4]).unwrap();
        assert!(matches!(
            t.reshape(vec![3, 2]),
            Err(TensorError::ReshapeMismatch { .. })
        ));
    }

    #[test]
    fn multilinear_dot_cases() {
        assert_eq!(multilinear_dot(&[&[1.0, 0.0], &[1.0, 0.0]]).unwrap(), 1.0);
        // 1*3*5 + 2*4*6 = 63
        assert_eq!(
            multilinear_dot(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]).unwrap(),
            63.0
        );
        assert_eq!(
            multilinear_dot(&[&[7.0, -2.0], &[0.0, 0.0]]).unwrap(),
            0.0
        );
        assert!(matches!(
            multilinear_dot(&[&[1.0], &[1.0, 2.0]]),
            Err(TensorError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn index_iteration_is_row_major() {
        let t = DenseTensor::zeros(vec![2, 2]);
        let idx: Vec<_> = t.indices().collect();
        assert_eq!(idx, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn offset_checks_bounds() {
        let t = DenseTensor::zeros(vec![2, 3]);
        assert_eq!(t.offset(&[1, 2]).unwrap(), 5);
        assert!(matches!(
            t.offset(&[1, 3]),
            Err(TensorError::IndexOutOfRange { mode: 1, .. })
        ));
        assert!(matches!(
            t.offset(&[1]),
            Err(TensorError::IndexOrderMismatch { .. })
        ));
    }

    #[test]
    fn zero_mode_size_rejected() {
        assert!(matches!(
            DenseTensor::new(vec![2, 0], vec![]),
            Err(TensorError::ZeroMode { .. })
        ));
    }
}
