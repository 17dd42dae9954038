//! CP (canonical polyadic) factor bundles and their dense reconstruction.

use super::dense::{DenseTensor, Mat};
use super::TensorError;

/// Rank-r CP factors over k modes. `factors[i]` is an `rank x n_i` matrix
/// whose row r is the vector `u_r^(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CpFactors {
    rank: usize,
    factors: Vec<Mat>,
}

impl CpFactors {
    pub fn new(rank: usize, factors: Vec<Mat>) -> Result<Self, TensorError> {
        if rank == 0 {
            return Err(TensorError::InvalidCp("rank must be at least 1".into()));
        }
        if factors.is_empty() {
            return Err(TensorError::InvalidCp("at least one mode required".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.rows() != rank {
                return Err(TensorError::InvalidCp(format!(
                    "mode {i} holds {} vectors, expected rank {rank}",
                    f.rows()
                )));
            }
            if f.cols() == 0 {
                return Err(TensorError::InvalidCp(format!("mode {i} has size 0")));
            }
        }
        Ok(Self { rank, factors })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn modes(&self) -> usize {
        self.factors.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.factors.iter().map(Mat::cols).collect()
    }

    pub fn factors(&self) -> &[Mat] {
        &self.factors
    }

    /// Component vector `u_r^(mode)`.
    pub fn vector(&self, mode: usize, r: usize) -> &[f64] {
        self.factors[mode].row(r)
    }
}

/// Dense tensor `sum_r u_r^(1) o u_r^(2) o ... o u_r^(k)`.
pub fn cp_reconstruct(c: &CpFactors) -> DenseTensor {
    let sizes = c.mode_sizes();
    let total: usize = sizes.iter().product();
    let mut out = vec![0.0; total];
    let mut component = Vec::with_capacity(total);
    for r in 0..c.rank() {
        // iterated Kronecker product of the component's vectors
        component.clear();
        component.push(1.0);
        for mode in 0..c.modes() {
            let v = c.vector(mode, r);
            let mut next = Vec::with_capacity(component.len() * v.len());
            for &a in &component {
                for &b in v {
                    next.push(a * b);
                }
            }
            component = next;
        }
        for (o, &x) in out.iter_mut().zip(&component) {
            *o += x;
        }
    }
    DenseTensor::new(sizes, out).expect("cp shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_one_hots_give_single_entry() {
        let f0 = Mat::from_vec(1, 2, vec![1.0, 0.0]).unwrap();
        let f1 = Mat::from_vec(1, 2, vec![0.0, 1.0]).unwrap();
        let c = CpFactors::new(1, vec![f0, f1]).unwrap();
        let t = cp_reconstruct(&c);
        assert_eq!(t.shape(), &[2, 2]);
        assert_eq!(t.data(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_vectors_reconstruct_zero() {
        let c = CpFactors::new(1, vec![Mat::zeros(1, 3), Mat::zeros(1, 2)]).unwrap();
        assert!(cp_reconstruct(&c).data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rank_zero_rejected() {
        assert!(matches!(
            CpFactors::new(0, vec![Mat::zeros(0, 2)]),
            Err(TensorError::InvalidCp(_))
        ));
    }

    #[test]
    fn inconsistent_factor_counts_rejected() {
        let err = CpFactors::new(2, vec![Mat::zeros(2, 3), Mat::zeros(1, 2)]).unwrap_err();
        assert!(matches!(err, TensorError::InvalidCp(_)));
    }

    #[test]
    fn random_rank3_matches_triple_loop_oracle() {
        // deterministic pseudo-random factors over a 2x3x2 tensor
        let val = |seed: usize| ((seed * 31 + 7) % 17) as f64 / 5.0 - 1.5;
        let mut n = 0;
        let mut mk = |rows: usize, cols: usize| {
            let m = Mat::from_vec(rows, cols, (0..rows * cols).map(|i| val(i + n)).collect());
            n += rows * cols;
            m.unwrap()
        };
        let c = CpFactors::new(3, vec![mk(3, 2), mk(3, 3), mk(3, 2)]).unwrap();
        let t = cp_reconstruct(&c);
        for idx in t.indices() {
            let mut expected = 0.0;
            for r in 0..3 {
                expected +=
                    c.vector(0, r)[idx[0]] * c.vector(1, r)[idx[1]] * c.vector(2, r)[idx[2]];
            }
            assert!((t.get(&idx).unwrap() - expected).abs() < 1e-12);
        }
    }
}
