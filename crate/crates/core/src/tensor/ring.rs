//! Tensor-ring values: a circular chain of third-order cores, each element of
//! the represented tensor being the trace of a product of lateral slices.

use super::dense::{DenseTensor, Mat};
use super::TensorError;

/// Sequence of k third-order cores, core i shaped `[r_i, n_i, r_{i+1}]` with
/// the circular closure `r_{k+1} = r_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRing {
    cores: Vec<DenseTensor>,
}

impl TensorRing {
    /// Validates core orders and the circular rank chain. Single-core rings
    /// are rejected: the chain needs at least two cores.
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self, TensorError> {
        if cores.len() < 2 {
            return Err(TensorError::InvalidRing(format!(
                "a ring needs at least 2 cores, got {}",
                cores.len()
            )));
        }
        for (i, c) in cores.iter().enumerate() {
            if c.order() != 3 {
                return Err(TensorError::InvalidRing(format!(
                    "core {i} has order {}, expected 3",
                    c.order()
                )));
            }
        }
        for i in 0..cores.len() {
            let next = (i + 1) % cores.len();
            let right = cores[i].shape()[2];
            let left = cores[next].shape()[0];
            if right != left {
                return Err(TensorError::InvalidRing(format!(
                    "rank chain broken between cores {i} and {next}: {right} vs {left}"
                )));
            }
        }
        Ok(Self { cores })
    }

    pub fn k(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    /// Mutable access to core values. Shapes must not change; the trainer
    /// updates entries in place.
    pub fn cores_mut(&mut self) -> &mut [DenseTensor] {
        &mut self.cores
    }

    /// The rank chain `[r_1..r_k]`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[0]).collect()
    }

    /// Middle-mode sizes `[n_1..n_k]`.
    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.shape()[1]).collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(0)
    }

    /// Total number of stored core entries.
    pub fn param_count(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    /// Copy of the lateral slice `Z_core(index)`, an `r_i x r_{i+1}` matrix.
    pub fn slice(&self, core: usize, index: usize) -> Result<Mat, TensorError> {
        let c = &self.cores[core];
        let [r1, n, r2] = [c.shape()[0], c.shape()[1], c.shape()[2]];
        if index >= n {
            return Err(TensorError::IndexOutOfRange {
                mode: core,
                index,
                size: n,
            });
        }
        let mut m = Mat::zeros(r1, r2);
        for a in 0..r1 {
            let src = &c.data()[(a * n + index) * r2..(a * n + index + 1) * r2];
            m.row_mut(a).copy_from_slice(src);
        }
        Ok(m)
    }

    /// Weighted sum of lateral slices: `sum_i weights[i] * Z_core(i)`.
    pub fn mix_slices(&self, core: usize, weights: &[f64]) -> Result<Mat, TensorError> {
        let c = &self.cores[core];
        let [r1, n, r2] = [c.shape()[0], c.shape()[1], c.shape()[2]];
        if weights.len() != n {
            return Err(TensorError::DimMismatch {
                mode: core,
                expected: n,
                actual: weights.len(),
            });
        }
        let mut m = Mat::zeros(r1, r2);
        for a in 0..r1 {
            let out = m.row_mut(a);
            for (i, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = &c.data()[(a * n + i) * r2..(a * n + i + 1) * r2];
                for (o, &x) in out.iter_mut().zip(src) {
                    *o += w * x;
                }
            }
        }
        Ok(m)
    }
}

/// Element of the represented tensor: `trace(Z_1(i_1) Z_2(i_2) ... Z_k(i_k))`,
/// evaluated by left-to-right matrix products.
pub fn tr_element(ring: &TensorRing, index: &[usize]) -> Result<f64, TensorError> {
    if index.len() != ring.k() {
        return Err(TensorError::IndexOrderMismatch {
            expected: ring.k(),
            actual: index.len(),
        });
    }
    let mut acc = ring.slice(0, index[0])?;
    for (core, &i) in index.iter().enumerate().skip(1) {
        acc = matmul_slice(&acc, &ring.cores[core], i)?;
    }
    Ok(acc.trace())
}

/// `m * Z(i)` where the slice is read in place from the strided core layout.
fn matmul_slice(m: &Mat, core: &DenseTensor, index: usize) -> Result<Mat, TensorError> {
    let [r1, n, r2] = [core.shape()[0], core.shape()[1], core.shape()[2]];
    if index >= n {
        return Err(TensorError::IndexOutOfRange {
            mode: 1,
            index,
            size: n,
        });
    }
    assert_eq!(m.cols(), r1, "chain rank mismatch");
    let mut out = Mat::zeros(m.rows(), r2);
    let data = core.data();
    for row in 0..m.rows() {
        let mrow = m.row(row);
        let orow = out.row_mut(row);
        for (c, &a) in mrow.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let zrow = &data[(c * n + index) * r2..(c * n + index + 1) * r2];
            for (o, &z) in orow.iter_mut().zip(zrow) {
                *o += a * z;
            }
        }
    }
    Ok(out)
}

/// Merges consecutive cores into one tensor `[r_first, prod(n_i), r_next]`,
/// flattening mode indices in row-major order.
pub(crate) fn merge_chain(cores: &[DenseTensor]) -> DenseTensor {
    assert!(!cores.is_empty());
    let mut acc = cores[0].clone();
    for core in &cores[1..] {
        let [ra, na_total] = [acc.shape()[0], acc.shape()[1]];
        let rb = acc.shape()[2];
        let [rb2, n, rc] = [core.shape()[0], core.shape()[1], core.shape()[2]];
        assert_eq!(rb, rb2, "chain rank mismatch");
        // (ra*na, rb) x (rb, n*rc)
        let out = matmul_flat(acc.data(), ra * na_total, rb, core.data(), n * rc);
        acc = DenseTensor::new(vec![ra, na_total * n, rc], out).expect("merge shape");
    }
    acc
}

fn matmul_flat(a: &[f64], m: usize, k: usize, b: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (c, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b[c * n..(c + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

/// Materializes the full tensor represented by the ring.
///
/// The chain is split in two halves that are merged independently and then
/// traced against each other, which keeps the peak cost at
/// `prod(n_i) * r_1 * r_split` instead of per-element trace evaluation.
pub fn tr_reconstruct(ring: &TensorRing, cap: usize) -> Result<DenseTensor, TensorError> {
    let sizes = ring.mode_sizes();
    let total: usize = sizes.iter().product();
    if total > cap {
        return Err(TensorError::CapacityExceeded {
            required: total,
            allowed: cap,
        });
    }
    let ranks = ring.ranks();
    let k = ring.k();

    // Pick the split bond: smallest rank first, then balance the halves.
    let mut best = 1usize;
    let mut best_key = (usize::MAX, f64::INFINITY);
    let ln_total = (total as f64).ln();
    let mut left_elems = 1usize;
    for m in 1..k {
        left_elems *= sizes[m - 1];
        let balance = ((left_elems as f64).ln() - ln_total / 2.0).abs();
        let key = (ranks[m], balance);
        if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
            best = m;
            best_key = key;
        }
    }

    let left = merge_chain(&ring.cores()[..best]);
    let right = merge_chain(&ring.cores()[best..]);
    let (r0, n_left, rm) = (left.shape()[0], left.shape()[1], left.shape()[2]);
    let n_right = right.shape()[1];
    debug_assert_eq!(right.shape()[0], rm);
    debug_assert_eq!(right.shape()[2], r0);

    // Pair-major rearrangements so the combine loop streams contiguously:
    // lp[(a,b), I] = left[a, I, b]; rp[(a,b), J] = right[b, J, a].
    let pairs = r0 * rm;
    let mut lp = vec![0.0; pairs * n_left];
    let ldata = left.data();
    for a in 0..r0 {
        for i in 0..n_left {
            let src = &ldata[(a * n_left + i) * rm..(a * n_left + i + 1) * rm];
            for (b, &v) in src.iter().enumerate() {
                lp[(a * rm + b) * n_left + i] = v;
            }
        }
    }
    let mut rp = vec![0.0; pairs * n_right];
    let rdata = right.data();
    for b in 0..rm {
        for j in 0..n_right {
            let src = &rdata[(b * n_right + j) * r0..(b * n_right + j + 1) * r0];
            for (a, &v) in src.iter().enumerate() {
                rp[(a * rm + b) * n_right + j] = v;
            }
        }
    }

    let mut out = vec![0.0; total];
    for p in 0..pairs {
        let lrow = &lp[p * n_left..(p + 1) * n_left];
        let rrow = &rp[p * n_right..(p + 1) * n_right];
        for (i, &lv) in lrow.iter().enumerate() {
            if lv == 0.0 {
                continue;
            }
            let orow = &mut out[i * n_right..(i + 1) * n_right];
            for (o, &rv) in orow.iter_mut().zip(rrow) {
                *o += lv * rv;
            }
        }
    }
    DenseTensor::new(sizes, out)
}

#[cfg(test)]
mod tests {
    use super::super::DEFAULT_MATERIALIZE_CAP;
    use super::*;

    fn ring_from(shapes: &[[usize; 3]], fill: impl Fn(usize, usize) -> f64) -> TensorRing {
        let cores = shapes
            .iter()
            .enumerate()
            .map(|(ci, s)| {
                let len = s[0] * s[1] * s[2];
                DenseTensor::new(s.to_vec(), (0..len).map(|i| fill(ci, i)).collect()).unwrap()
            })
            .collect();
        TensorRing::new(cores).unwrap()
    }

    #[test]
    fn single_core_ring_rejected() {
        let core = DenseTensor::zeros(vec![2, 3, 2]);
        assert!(matches!(
            TensorRing::new(vec![core]),
            Err(TensorError::InvalidRing(_))
        ));
    }

    #[test]
    fn broken_rank_chain_rejected() {
        let a = DenseTensor::zeros(vec![2, 3, 3]);
        let b = DenseTensor::zeros(vec![2, 3, 2]);
        assert!(matches!(
            TensorRing::new(vec![a, b]),
            Err(TensorError::InvalidRing(_))
        ));
    }

    #[test]
    fn all_rank_one_element_is_product_of_scalars() {
        let ring = ring_from(&[[1, 3, 1], [1, 2, 1]], |ci, i| (ci * 10 + i) as f64 + 1.0);
        // cores hold [1,2,3] and [11,12] along the middle mode
        let v = tr_element(&ring, &[2, 1]).unwrap();
        assert_eq!(v, 3.0 * 12.0);
    }

    #[test]
    fn k2_element_matches_hand_expanded_trace() {
        let ring = ring_from(&[[2, 2, 2], [2, 2, 2]], |ci, i| {
            ((ci * 7 + i * 3) % 11) as f64 - 5.0
        });
        let (i1, i2) = (1, 0);
        let z1 = ring.slice(0, i1).unwrap();
        let z2 = ring.slice(1, i2).unwrap();
        // trace of the 2x2 product expanded by hand
        let mut expected = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                expected += z1.get(a, b) * z2.get(b, a);
            }
        }
        assert!((tr_element(&ring, &[i1, i2]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_slice_annihilates_element() {
        let mut ring = ring_from(&[[2, 2, 2], [2, 3, 2]], |_, i| i as f64 + 1.0);
        // zero out slice index 1 of core 1
        let core = &mut ring.cores_mut()[1];
        let (n, r2) = (core.shape()[1], core.shape()[2]);
        for a in 0..core.shape()[0] {
            for b in 0..r2 {
                core.data_mut()[(a * n + 1) * r2 + b] = 0.0;
            }
        }
        assert_eq!(tr_element(&ring, &[0, 1]).unwrap(), 0.0);
        assert_ne!(tr_element(&ring, &[0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn rank_one_pair_reconstructs_outer_product() {
        let a = [1.5, -2.0, 0.5];
        let b = [3.0, 4.0];
        let c0 = DenseTensor::new(vec![1, 3, 1], a.to_vec()).unwrap();
        let c1 = DenseTensor::new(vec![1, 2, 1], b.to_vec()).unwrap();
        let ring = TensorRing::new(vec![c0, c1]).unwrap();
        let t = tr_reconstruct(&ring, DEFAULT_MATERIALIZE_CAP).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(t.get(&[i, j]).unwrap(), a[i] * b[j]);
            }
        }
    }

    #[test]
    fn reconstruct_agrees_with_element_everywhere() {
        let ring = ring_from(&[[2, 3, 3], [3, 2, 2], [2, 4, 2]], |ci, i| {
            (((ci + 2) * (i + 3)) % 13) as f64 / 3.0 - 2.0
        });
        let t = tr_reconstruct(&ring, DEFAULT_MATERIALIZE_CAP).unwrap();
        for idx in t.indices() {
            let direct = tr_element(&ring, &idx).unwrap();
            assert!((t.get(&idx).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_cores_reconstruct_zero() {
        let ring = ring_from(&[[2, 2, 2], [2, 2, 2]], |_, _| 0.0);
        let t = tr_reconstruct(&ring, DEFAULT_MATERIALIZE_CAP).unwrap();
        assert!(t.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cap_exceeded_reports_requirements() {
        let ring = ring_from(&[[1, 10, 1], [1, 10, 1]], |_, _| 1.0);
        let err = tr_reconstruct(&ring, 99).unwrap_err();
        assert_eq!(
            err,
            TensorError::CapacityExceeded {
                required: 100,
                allowed: 99
            }
        );
    }

    #[test]
    fn element_index_out_of_range() {
        let ring = ring_from(&[[1, 2, 1], [1, 2, 1]], |_, _| 1.0);
        assert!(matches!(
            tr_element(&ring, &[0, 2]),
            Err(TensorError::IndexOutOfRange { .. })
        ));
    }
}
