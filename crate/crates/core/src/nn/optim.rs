use super::Tensor;

/// `param <- param - lr * grad`
pub fn sgd_step(param: &mut Tensor, grad: &Tensor, lr: f64) {
    assert_eq!(param.shape(), grad.shape(), "sgd shapes");
    if lr == 0.0 {
        return;
    }
    param.axpy(-lr, grad);
}

/// Global L2 norm over a gradient set.
pub fn global_norm(grads: &[Tensor]) -> f64 {
    grads.iter().map(Tensor::sum_sq).sum::<f64>().sqrt()
}

/// Rescales `grads` so their global norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_grad_norm(grads: &mut [Tensor], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| g.scale(s));
    }
    norm
}
