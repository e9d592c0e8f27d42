//! Layer primitives: 3×3 stride-2 convolution (im2col + gemm), batch
//! normalization, ReLU, global average pool, and fully connected layers.
//!
//! Batched work is split into fixed-size sample chunks; reductions fold
//! per-chunk partials in chunk order. The chunk decomposition is a
//! constant of the implementation, so parallel and sequential execution
//! produce bit-identical tensors.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Array4, ArrayView2, ArrayViewMut2};

use super::Scalar;
use crate::exec;

pub const KERNEL: usize = 3;
pub const STRIDE: usize = 2;
pub const PAD: usize = 1;
pub const BN_EPS: f64 = 1e-5;
/// Weight of the existing running statistic in the eval-stat update.
pub const BN_MOMENTUM: f64 = 0.9;
/// Samples per work chunk; fixed so reductions are thread-count invariant.
pub const CHUNK_SAMPLES: usize = 8;

/// Output spatial dimension of the stride-2 padded 3×3 convolution.
pub fn conv_out(dim: usize) -> usize {
    (dim + 2 * PAD - KERNEL) / STRIDE + 1
}

fn c<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("constant fits the scalar type")
}

/// Expands one sample into a [cin*9, ho*wo] column matrix.
fn im2col<F: Scalar>(src: &[F], cin: usize, h: usize, w: usize, ho: usize, wo: usize, col: &mut [F]) {
    let p = ho * wo;
    for ci in 0..cin {
        let src_c = &src[ci * h * w..(ci + 1) * h * w];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = ((ci * KERNEL + ky) * KERNEL + kx) * p;
                for oy in 0..ho {
                    let iy = (oy * STRIDE + ky) as isize - PAD as isize;
                    let dst = &mut col[row + oy * wo..row + (oy + 1) * wo];
                    if iy < 0 || iy >= h as isize {
                        dst.fill(F::zero());
                        continue;
                    }
                    let src_row = &src_c[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * STRIDE + kx) as isize - PAD as isize;
                        *d = if ix < 0 || ix >= w as isize {
                            F::zero()
                        } else {
                            src_row[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Scatter-adds a column-matrix gradient back onto one input sample.
fn col2im_add<F: Scalar>(
    dcol: &[F],
    cin: usize,
    h: usize,
    w: usize,
    ho: usize,
    wo: usize,
    dst: &mut [F],
) {
    let p = ho * wo;
    for ci in 0..cin {
        let dst_c = &mut dst[ci * h * w..(ci + 1) * h * w];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let row = ((ci * KERNEL + ky) * KERNEL + kx) * p;
                for oy in 0..ho {
                    let iy = (oy * STRIDE + ky) as isize - PAD as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src_row = &dcol[row + oy * wo..row + (oy + 1) * wo];
                    for (ox, &g) in src_row.iter().enumerate() {
                        let ix = (ox * STRIDE + kx) as isize - PAD as isize;
                        if ix >= 0 && ix < w as isize {
                            dst_c[iy as usize * w + ix as usize] += g;
                        }
                    }
                }
            }
        }
    }
}

/// y[s] = w · im2col(x[s]) + b, parallel over sample chunks.
pub fn conv_forward<F: Scalar>(w: &Array2<F>, b: &Array1<F>, x: &Array4<F>) -> Array4<F> {
    let (bsz, cin, h, win) = x.dim();
    let cout = w.nrows();
    debug_assert_eq!(w.ncols(), cin * KERNEL * KERNEL);
    let (ho, wo) = (conv_out(h), conv_out(win));
    let p = ho * wo;
    let in_stride = cin * h * win;
    let out_stride = cout * p;

    let mut y = Array4::zeros((bsz, cout, ho, wo));
    let xs = x.as_slice().expect("standard layout");
    let bs = b.as_slice().expect("standard layout");
    {
        let ys = y.as_slice_mut().expect("standard layout");
        exec::process_chunks(ys, CHUNK_SAMPLES * out_stride, |chunk_idx, out_chunk| {
            let s0 = chunk_idx * CHUNK_SAMPLES;
            let mut col = vec![F::zero(); cin * KERNEL * KERNEL * p];
            for (local, out_s) in out_chunk.chunks_mut(out_stride).enumerate() {
                let s = s0 + local;
                im2col(&xs[s * in_stride..(s + 1) * in_stride], cin, h, win, ho, wo, &mut col);
                let col_view =
                    ArrayView2::from_shape((cin * KERNEL * KERNEL, p), &col[..]).unwrap();
                let mut out_view = ArrayViewMut2::from_shape((cout, p), out_s).unwrap();
                general_mat_mul(F::one(), w, &col_view, F::zero(), &mut out_view);
                for (ci, seg) in out_s.chunks_mut(p).enumerate() {
                    let bias = bs[ci];
                    for v in seg {
                        *v += bias;
                    }
                }
            }
        });
    }
    y
}

/// Gradients of the convolution: (dx, dw, db).
pub fn conv_backward<F: Scalar>(
    w: &Array2<F>,
    x: &Array4<F>,
    dy: &Array4<F>,
) -> (Array4<F>, Array2<F>, Array1<F>) {
    let (bsz, cin, h, win) = x.dim();
    let (_, cout, ho, wo) = dy.dim();
    let p = ho * wo;
    let kk = cin * KERNEL * KERNEL;
    let in_stride = cin * h * win;
    let out_stride = cout * p;

    let xs = x.as_slice().expect("standard layout");
    let dys = dy.as_slice().expect("standard layout");
    let wt = w.t();

    let mut dx = Array4::zeros((bsz, cin, h, win));
    let partials: Vec<(Array2<F>, Array1<F>)> = {
        let dxs = dx.as_slice_mut().expect("standard layout");
        exec::process_chunks(dxs, CHUNK_SAMPLES * in_stride, |chunk_idx, dx_chunk| {
            let s0 = chunk_idx * CHUNK_SAMPLES;
            let mut dw = Array2::<F>::zeros((cout, kk));
            let mut db = vec![F::zero(); cout];
            let mut col = vec![F::zero(); kk * p];
            let mut dcol = vec![F::zero(); kk * p];
            for (local, dx_s) in dx_chunk.chunks_mut(in_stride).enumerate() {
                let s = s0 + local;
                im2col(&xs[s * in_stride..(s + 1) * in_stride], cin, h, win, ho, wo, &mut col);
                let col_view = ArrayView2::from_shape((kk, p), &col[..]).unwrap();
                let dy_s = &dys[s * out_stride..(s + 1) * out_stride];
                let dy_view = ArrayView2::from_shape((cout, p), dy_s).unwrap();

                general_mat_mul(F::one(), &dy_view, &col_view.t(), F::one(), &mut dw);
                for (ci, seg) in dy_s.chunks(p).enumerate() {
                    let mut acc = F::zero();
                    for &g in seg {
                        acc += g;
                    }
                    db[ci] += acc;
                }
                let mut dcol_view = ArrayViewMut2::from_shape((kk, p), &mut dcol[..]).unwrap();
                general_mat_mul(F::one(), &wt, &dy_view, F::zero(), &mut dcol_view);
                col2im_add(&dcol, cin, h, win, ho, wo, dx_s);
            }
            (dw, Array1::from_vec(db))
        })
    };

    let mut dw = Array2::<F>::zeros((cout, kk));
    let mut db = Array1::<F>::zeros(cout);
    for (pw, pb) in partials {
        dw += &pw;
        db += &pb;
    }
    (dx, dw, db)
}

/// Per-channel batch statistics needed to rerun the normalization.
#[derive(Debug, Clone)]
pub struct BnCache<F> {
    pub mean: Array1<F>,
    pub var: Array1<F>,
    pub inv_std: Array1<F>,
}

/// Train-mode batch normalization. Returns the normalized output and the
/// batch statistics (biased variance) used for the running-average update.
pub fn bn_forward_train<F: Scalar>(
    gamma: &Array1<F>,
    beta: &Array1<F>,
    x: &Array4<F>,
) -> (Array4<F>, BnCache<F>) {
    let (bsz, ch, h, w) = x.dim();
    let hw = h * w;
    let n = c::<F>((bsz * hw) as f64);
    let xs = x.as_slice().expect("standard layout");

    let partials = exec::map_ranges(bsz, CHUNK_SAMPLES, |range| {
        let mut sum = vec![F::zero(); ch];
        let mut sq = vec![F::zero(); ch];
        for s in range {
            let base = s * ch * hw;
            for ci in 0..ch {
                let seg = &xs[base + ci * hw..base + (ci + 1) * hw];
                let mut acc = F::zero();
                let mut acc2 = F::zero();
                for &v in seg {
                    acc += v;
                    acc2 += v * v;
                }
                sum[ci] += acc;
                sq[ci] += acc2;
            }
        }
        (sum, sq)
    });
    let mut mean = Array1::<F>::zeros(ch);
    let mut var = Array1::<F>::zeros(ch);
    for (sum, sq) in partials {
        for ci in 0..ch {
            mean[ci] += sum[ci];
            var[ci] += sq[ci];
        }
    }
    for ci in 0..ch {
        let m = mean[ci] / n;
        mean[ci] = m;
        var[ci] = (var[ci] / n - m * m).max(F::zero());
    }
    let inv_std = var.mapv(|v| F::one() / (v + c::<F>(BN_EPS)).sqrt());

    let y = bn_apply(gamma, beta, &mean, &inv_std, x);
    let cache = BnCache {
        mean,
        var,
        inv_std,
    };
    (y, cache)
}

/// Eval-mode normalization with running statistics.
pub fn bn_forward_eval<F: Scalar>(
    gamma: &Array1<F>,
    beta: &Array1<F>,
    running_mean: &Array1<F>,
    running_var: &Array1<F>,
    x: &Array4<F>,
) -> Array4<F> {
    let inv_std = running_var.mapv(|v| F::one() / (v + c::<F>(BN_EPS)).sqrt());
    bn_apply(gamma, beta, running_mean, &inv_std, x)
}

fn bn_apply<F: Scalar>(
    gamma: &Array1<F>,
    beta: &Array1<F>,
    mean: &Array1<F>,
    inv_std: &Array1<F>,
    x: &Array4<F>,
) -> Array4<F> {
    let (bsz, ch, h, w) = x.dim();
    let hw = h * w;
    let xs = x.as_slice().expect("standard layout");
    let gs = gamma.as_slice().unwrap();
    let bs = beta.as_slice().unwrap();
    let ms = mean.as_slice().unwrap();
    let is = inv_std.as_slice().unwrap();

    let mut y = Array4::zeros((bsz, ch, h, w));
    {
        let ys = y.as_slice_mut().expect("standard layout");
        let stride = ch * hw;
        exec::process_chunks(ys, CHUNK_SAMPLES * stride, |chunk_idx, out_chunk| {
            let s0 = chunk_idx * CHUNK_SAMPLES;
            for (local, out_s) in out_chunk.chunks_mut(stride).enumerate() {
                let base = (s0 + local) * stride;
                for ci in 0..ch {
                    let scale = gs[ci] * is[ci];
                    let shift = bs[ci] - ms[ci] * scale;
                    let src = &xs[base + ci * hw..base + (ci + 1) * hw];
                    let dst = &mut out_s[ci * hw..(ci + 1) * hw];
                    for (d, &v) in dst.iter_mut().zip(src) {
                        *d = v * scale + shift;
                    }
                }
            }
        });
    }
    y
}

/// Batch-norm backward pass: (dx, dgamma, dbeta).
pub fn bn_backward<F: Scalar>(
    gamma: &Array1<F>,
    x: &Array4<F>,
    cache: &BnCache<F>,
    dy: &Array4<F>,
) -> (Array4<F>, Array1<F>, Array1<F>) {
    let (bsz, ch, h, w) = x.dim();
    let hw = h * w;
    let n = c::<F>((bsz * hw) as f64);
    let stride = ch * hw;
    let xs = x.as_slice().expect("standard layout");
    let dys = dy.as_slice().expect("standard layout");
    let ms = cache.mean.as_slice().unwrap();
    let is = cache.inv_std.as_slice().unwrap();
    let gs = gamma.as_slice().unwrap();

    // Σ dy and Σ dy·xhat per channel.
    let partials = exec::map_ranges(bsz, CHUNK_SAMPLES, |range| {
        let mut g0 = vec![F::zero(); ch];
        let mut g1 = vec![F::zero(); ch];
        for s in range {
            let base = s * stride;
            for ci in 0..ch {
                let xseg = &xs[base + ci * hw..base + (ci + 1) * hw];
                let dseg = &dys[base + ci * hw..base + (ci + 1) * hw];
                let (m, inv) = (ms[ci], is[ci]);
                let mut a0 = F::zero();
                let mut a1 = F::zero();
                for (&xv, &dv) in xseg.iter().zip(dseg) {
                    a0 += dv;
                    a1 += dv * (xv - m) * inv;
                }
                g0[ci] += a0;
                g1[ci] += a1;
            }
        }
        (g0, g1)
    });
    let mut dbeta = Array1::<F>::zeros(ch);
    let mut dgamma = Array1::<F>::zeros(ch);
    for (g0, g1) in partials {
        for ci in 0..ch {
            dbeta[ci] += g0[ci];
            dgamma[ci] += g1[ci];
        }
    }

    // dx = γ·inv_std · (dy − Σdy/N − xhat·Σ(dy·xhat)/N)
    let mut dx = Array4::zeros((bsz, ch, h, w));
    {
        let dxs = dx.as_slice_mut().expect("standard layout");
        let g0s = dbeta.as_slice().unwrap();
        let g1s = dgamma.as_slice().unwrap();
        exec::process_chunks(dxs, CHUNK_SAMPLES * stride, |chunk_idx, out_chunk| {
            let s0 = chunk_idx * CHUNK_SAMPLES;
            for (local, out_s) in out_chunk.chunks_mut(stride).enumerate() {
                let base = (s0 + local) * stride;
                for ci in 0..ch {
                    let (m, inv) = (ms[ci], is[ci]);
                    let scale = gs[ci] * inv;
                    let mean_dy = g0s[ci] / n;
                    let mean_dyxhat = g1s[ci] / n;
                    let xseg = &xs[base + ci * hw..base + (ci + 1) * hw];
                    let dseg = &dys[base + ci * hw..base + (ci + 1) * hw];
                    let dst = &mut out_s[ci * hw..(ci + 1) * hw];
                    for ((d, &xv), &dv) in dst.iter_mut().zip(xseg).zip(dseg) {
                        let xhat = (xv - m) * inv;
                        *d = scale * (dv - mean_dy - xhat * mean_dyxhat);
                    }
                }
            }
        });
    }
    (dx, dgamma, dbeta)
}

/// y = max(0, x).
pub fn relu_forward<F: Scalar>(x: &Array4<F>) -> Array4<F> {
    let mut y = x.clone();
    let ys = y.as_slice_mut().expect("standard layout");
    let len = ys.len().max(1);
    exec::process_chunks(ys, len.div_ceil(64).max(4096), |_, chunk| {
        for v in chunk {
            if *v < F::zero() {
                *v = F::zero();
            }
        }
    });
    y
}

/// dx = dy where the stored activation is positive.
pub fn relu_backward<F: Scalar>(post: &Array4<F>, dy: &Array4<F>) -> Array4<F> {
    let mut dx = dy.clone();
    let ps = post.as_slice().expect("standard layout");
    let dxs = dx.as_slice_mut().expect("standard layout");
    for (d, &p) in dxs.iter_mut().zip(ps) {
        if p <= F::zero() {
            *d = F::zero();
        }
    }
    dx
}

/// Global average pool: [B,C,H,W] → [B,C].
pub fn gap_forward<F: Scalar>(x: &Array4<F>) -> Array2<F> {
    let (bsz, ch, h, w) = x.dim();
    let hw = h * w;
    let inv = F::one() / c::<F>(hw as f64);
    let xs = x.as_slice().expect("standard layout");
    let mut y = Array2::zeros((bsz, ch));
    for s in 0..bsz {
        for ci in 0..ch {
            let seg = &xs[(s * ch + ci) * hw..(s * ch + ci + 1) * hw];
            let mut acc = F::zero();
            for &v in seg {
                acc += v;
            }
            y[(s, ci)] = acc * inv;
        }
    }
    y
}

pub fn gap_backward<F: Scalar>(dy: &Array2<F>, h: usize, w: usize) -> Array4<F> {
    let (bsz, ch) = dy.dim();
    let hw = h * w;
    let inv = F::one() / c::<F>(hw as f64);
    let mut dx = Array4::zeros((bsz, ch, h, w));
    {
        let dxs = dx.as_slice_mut().expect("standard layout");
        for s in 0..bsz {
            for ci in 0..ch {
                let g = dy[(s, ci)] * inv;
                let seg = &mut dxs[(s * ch + ci) * hw..(s * ch + ci + 1) * hw];
                seg.fill(g);
            }
        }
    }
    dx
}

/// y = x·wᵀ + b for w of shape [out, in].
pub fn linear_forward<F: Scalar>(w: &Array2<F>, b: &Array1<F>, x: &Array2<F>) -> Array2<F> {
    let (bsz, _) = x.dim();
    let out = w.nrows();
    let mut y = Array2::zeros((bsz, out));
    general_mat_mul(F::one(), x, &w.t(), F::zero(), &mut y);
    for mut row in y.rows_mut() {
        for (v, &bias) in row.iter_mut().zip(b.iter()) {
            *v += bias;
        }
    }
    y
}

/// Gradients of the linear layer: (dx, dw, db).
pub fn linear_backward<F: Scalar>(
    w: &Array2<F>,
    x: &Array2<F>,
    dy: &Array2<F>,
) -> (Array2<F>, Array2<F>, Array1<F>) {
    let (_, input) = x.dim();
    let out = w.nrows();
    let mut dx = Array2::zeros(x.dim());
    general_mat_mul(F::one(), dy, w, F::zero(), &mut dx);
    let mut dw = Array2::zeros((out, input));
    general_mat_mul(F::one(), &dy.t(), x, F::zero(), &mut dw);
    let mut db = Array1::zeros(out);
    for row in dy.rows() {
        for (d, &v) in db.iter_mut().zip(row.iter()) {
            *d += v;
        }
    }
    (dx, dw, db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2, Array};

    #[test]
    fn conv_output_dims() {
        assert_eq!(conv_out(64), 32);
        assert_eq!(conv_out(32), 16);
        assert_eq!(conv_out(4), 2);
    }

    #[test]
    fn conv_identity_kernel_downsamples() {
        // Kernel that picks the center tap copies x at even coordinates.
        let mut w = Array2::<f64>::zeros((1, 9));
        w[(0, 4)] = 1.0;
        let b = arr1(&[0.0]);
        let x = Array::from_shape_fn((1, 1, 4, 4), |(_, _, y, xx)| (y * 4 + xx) as f64);
        let y = conv_forward(&w, &b, &x);
        assert_eq!(y.dim(), (1, 1, 2, 2));
        assert_eq!(y[(0, 0, 0, 0)], 0.0);
        assert_eq!(y[(0, 0, 0, 1)], 2.0);
        assert_eq!(y[(0, 0, 1, 0)], 8.0);
        assert_eq!(y[(0, 0, 1, 1)], 10.0);
    }

    #[test]
    fn conv_bias_reaches_every_output() {
        let w = Array2::<f64>::zeros((2, 9));
        let b = arr1(&[1.5, -0.5]);
        let x = Array4::<f64>::zeros((3, 1, 8, 8));
        let y = conv_forward(&w, &b, &x);
        assert!(y
            .index_axis(ndarray::Axis(1), 0)
            .iter()
            .all(|&v| v == 1.5));
        assert!(y
            .index_axis(ndarray::Axis(1), 1)
            .iter()
            .all(|&v| v == -0.5));
    }

    #[test]
    fn bn_train_normalizes_per_channel() {
        let gamma = arr1(&[1.0, 2.0]);
        let beta = arr1(&[0.0, 1.0]);
        let x = Array::from_shape_fn((4, 2, 3, 3), |(s, ch, y, xx)| {
            (s * 5 + ch * 11 + y * 2 + xx) as f64 * 0.1
        });
        let (y, cache) = bn_forward_train(&gamma, &beta, &x);
        // Channel 0: output mean ~0, variance ~1.
        let c0: Vec<f64> = y
            .index_axis(ndarray::Axis(1), 0)
            .iter()
            .copied()
            .collect();
        let mean: f64 = c0.iter().sum::<f64>() / c0.len() as f64;
        let var: f64 = c0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c0.len() as f64;
        assert!(mean.abs() < 1e-10);
        assert!((var - 1.0).abs() < 1e-3);
        // Channel 1: mean shifts to beta.
        let c1: Vec<f64> = y
            .index_axis(ndarray::Axis(1), 1)
            .iter()
            .copied()
            .collect();
        let mean1: f64 = c1.iter().sum::<f64>() / c1.len() as f64;
        assert!((mean1 - 1.0).abs() < 1e-10);
        assert!(cache.var.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn bn_eval_uses_running_stats() {
        let gamma = arr1(&[1.0]);
        let beta = arr1(&[0.0]);
        let rm = arr1(&[2.0]);
        let rv = arr1(&[4.0]);
        let x = Array4::from_elem((1, 1, 1, 1), 4.0f64);
        let y = bn_forward_eval(&gamma, &beta, &rm, &rv, &x);
        // (4-2)/sqrt(4+eps) ≈ 1.
        assert!((y[(0, 0, 0, 0)] - 1.0f64).abs() < 1e-5);
    }

    #[test]
    fn relu_clamps_and_masks() {
        let x = Array::from_shape_vec((1, 1, 2, 2), vec![-1.0, 2.0, 0.0, -3.0]).unwrap();
        let y = relu_forward(&x);
        assert_eq!(
            y.as_slice().unwrap(),
            &[0.0, 2.0, 0.0, 0.0]
        );
        let dy = Array4::from_elem((1, 1, 2, 2), 1.0);
        let dx = relu_backward(&y, &dy);
        assert_eq!(dx.as_slice().unwrap(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn gap_means_and_spreads() {
        let x = Array::from_shape_vec((1, 2, 2, 2), vec![1.0, 2.0, 3.0, 4.0, 10.0, 10.0, 10.0, 10.0])
            .unwrap();
        let y = gap_forward(&x);
        assert_eq!(y[(0, 0)], 2.5);
        assert_eq!(y[(0, 1)], 10.0);
        let dx = gap_backward(&y, 2, 2);
        assert_eq!(dx[(0, 0, 1, 1)], 2.5 / 4.0);
    }

    #[test]
    fn linear_matches_hand_product() {
        let w = arr2(&[[1.0, 2.0], [0.5, -1.0], [0.0, 3.0]]);
        let b = arr1(&[0.1, 0.2, 0.3]);
        let x = arr2(&[[2.0, 1.0]]);
        let y = linear_forward(&w, &b, &x);
        assert_eq!(y.as_slice().unwrap(), &[4.1, 0.2, 3.3]);
    }

    #[test]
    fn parallel_and_sequential_conv_identical() {
        let w = Array::from_shape_fn((4, 18), |(a, b)| ((a * 31 + b * 7) % 13) as f32 * 0.1 - 0.6);
        let b = arr1(&[0.1f32, -0.2, 0.3, 0.0]);
        let x = Array::from_shape_fn((20, 2, 16, 16), |(s, ch, y, xx)| {
            ((s + ch * 3 + y * 5 + xx * 11) % 17) as f32 * 0.25 - 2.0
        });
        let par = conv_forward(&w, &b, &x);
        crate::exec::force_sequential(true);
        let seq = conv_forward(&w, &b, &x);
        let (dx_s, dw_s, db_s) = conv_backward(&w, &x, &par);
        crate::exec::force_sequential(false);
        let (dx_p, dw_p, db_p) = conv_backward(&w, &x, &par);
        assert_eq!(par.as_slice().unwrap(), seq.as_slice().unwrap());
        assert_eq!(dx_p.as_slice().unwrap(), dx_s.as_slice().unwrap());
        assert_eq!(dw_p.as_slice().unwrap(), dw_s.as_slice().unwrap());
        assert_eq!(db_p.as_slice().unwrap(), db_s.as_slice().unwrap());
    }
}
