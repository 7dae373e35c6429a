use std::fmt;

/// Dense row-major `f64` tensor.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor{:?}", self.shape)?;
        if self.data.len() <= 16 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {shape:?} does not match {} values",
            data.len()
        );
        Tensor { shape: shape.to_vec(), data }
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

    /// Leading dimension.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Product of all trailing dimensions.
    pub fn cols(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn reshape(mut self, shape: &[usize]) -> Self {
        assert_eq!(shape.iter().product::<usize>(), self.data.len(), "reshape to {shape:?}");
        self.shape = shape.to_vec();
        self
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) {
        assert_eq!(self.shape, other.shape, "axpy shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `[m, k] x [k, n] -> [m, n]`, treating both operands as 2-D.
    pub fn matmul(&self, rhs: &Tensor) -> Tensor {
        let (m, k, n) = (self.rows(), self.cols(), rhs.cols());
        assert_eq!(k, rhs.rows(), "matmul inner dimension");
        let mut out = Tensor::zeros(&[m, n]);
        gemm(m, k, n, &self.data, (k as isize, 1), &rhs.data, (n as isize, 1), &mut out.data);
        out
    }

    /// `selfᵀ x rhs`: `[k, m]ᵀ x [k, n] -> [m, n]`.
    pub fn t_matmul(&self, rhs: &Tensor) -> Tensor {
        let (k, m, n) = (self.rows(), self.cols(), rhs.cols());
        assert_eq!(k, rhs.rows(), "t_matmul inner dimension");
        let mut out = Tensor::zeros(&[m, n]);
        gemm(m, k, n, &self.data, (1, m as isize), &rhs.data, (n as isize, 1), &mut out.data);
        out
    }

    /// `self x rhsᵀ`: `[m, k] x [n, k]ᵀ -> [m, n]`.
    pub fn matmul_t(&self, rhs: &Tensor) -> Tensor {
        let (m, k, n) = (self.rows(), self.cols(), rhs.rows());
        assert_eq!(k, rhs.cols(), "matmul_t inner dimension");
        let mut out = Tensor::zeros(&[m, n]);
        gemm(m, k, n, &self.data, (k as isize, 1), &rhs.data, (1, k as isize), &mut out.data);
        out
    }
}

/// `c = a x b` for an `m x k` by `k x n` product with explicit (row, col) strides.
fn gemm(m: usize, k: usize, n: usize, a: &[f64], sa: (isize, isize), b: &[f64], sb: (isize, isize), c: &mut [f64]) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the slices cover every element addressed by the given shapes and
    // strides, and `c` is exclusively borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            sa.0,
            sa.1,
            b.as_ptr(),
            sb.0,
            sb.1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
