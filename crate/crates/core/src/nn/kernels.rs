//! Dense row-major matrix kernels.
//!
//! Every output element is produced by a fixed summation order that does
//! not depend on how many rows are batched together, so a fragment scores
//! identically alone or inside a batch.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out[b, r] += Σ_k x[b, k] · w[r, k]` for `x: batch × k`, `w: rows × k`.
pub(crate) fn matmul_nt_acc(out: &mut [f64], x: &[f64], w: &[f64], batch: usize, k: usize) {
    let rows = w.len() / k;
    debug_assert_eq!(out.len(), batch * rows);
    debug_assert_eq!(x.len(), batch * k);
    for (r, wr) in w.chunks_exact(k).enumerate() {
        for (b, xb) in x.chunks_exact(k).enumerate() {
            out[b * rows + r] += dot(xb, wr);
        }
    }
}

/// `dw[r, k] += Σ_b dz[b, r] · x[b, k]`, summing over `b` in order.
pub(crate) fn matmul_tn_acc(dw: &mut [f64], dz: &[f64], x: &[f64], batch: usize, k: usize) {
    let rows = dw.len() / k;
    debug_assert_eq!(dz.len(), batch * rows);
    for (r, dwr) in dw.chunks_exact_mut(k).enumerate() {
        for (b, xb) in x.chunks_exact(k).enumerate() {
            let g = dz[b * rows + r];
            if g != 0.0 {
                axpy(dwr, g, xb);
            }
        }
    }
}

/// `dx[b, k] += Σ_r dz[b, r] · w[r, k]`, summing over `r` in order.
pub(crate) fn matmul_nn_acc(dx: &mut [f64], dz: &[f64], w: &[f64], batch: usize, k: usize) {
    let rows = w.len() / k;
    debug_assert_eq!(dz.len(), batch * rows);
    for (b, dxb) in dx.chunks_exact_mut(k).enumerate().take(batch) {
        for (r, wr) in w.chunks_exact(k).enumerate() {
            let g = dz[b * rows + r];
            if g != 0.0 {
                axpy(dxb, g, wr);
            }
        }
    }
}

/// `db[r] += Σ_b dz[b, r]`.
pub(crate) fn col_sum_acc(db: &mut [f64], dz: &[f64]) {
    for row in dz.chunks_exact(db.len()) {
        for (d, g) in db.iter_mut().zip(row) {
            *d += g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_products() {
        // x: 2×3, w: 2×3
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let w = [1.0, 0.0, -1.0, 0.5, 0.5, 0.5];
        let mut out = vec![0.0; 4];
        matmul_nt_acc(&mut out, &x, &w, 2, 3);
        assert_eq!(out, vec![-2.0, 3.0, -2.0, 7.5]);

        let dz = [1.0, 2.0, 3.0, 4.0];
        let mut dw = vec![0.0; 6];
        matmul_tn_acc(&mut dw, &dz, &x, 2, 3);
        assert_eq!(dw, vec![13.0, 17.0, 21.0, 18.0, 24.0, 30.0]);

        let mut dx = vec![0.0; 6];
        matmul_nn_acc(&mut dx, &dz, &w, 2, 3);
        assert_eq!(dx, vec![2.0, 1.0, 0.0, 5.0, 2.0, -1.0]);

        let mut db = vec![0.0; 2];
        col_sum_acc(&mut db, &dz);
        assert_eq!(db, vec![4.0, 6.0]);
    }

    #[test]
    fn batch_invariant() {
        let k = 37;
        let x: Vec<f64> = (0..5 * k).map(|i| ((i * 7919) % 113) as f64 / 17.0 - 3.0).collect();
        let w: Vec<f64> = (0..4 * k).map(|i| ((i * 104729) % 97) as f64 / 31.0 - 1.5).collect();
        let mut all = vec![0.0; 5 * 4];
        matmul_nt_acc(&mut all, &x, &w, 5, k);
        for b in 0..5 {
            let mut one = vec![0.0; 4];
            matmul_nt_acc(&mut one, &x[b * k..(b + 1) * k], &w, 1, k);
            assert_eq!(one.as_slice(), &all[b * 4..(b + 1) * 4]);
        }
    }
}
