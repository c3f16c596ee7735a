//! Per-sample layer kernels on planar `(channels, height, width)` buffers.
//!
//! Every forward function has a matching backward that accumulates parameter
//! gradients (`+=`) and overwrites the input gradient.

use rand::Rng;

use super::Scalar;

/// Geometry of a square-kernel 2-D convolution with zero padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub in_ch: usize,
    pub out_ch: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        (self.in_h + 2 * self.pad - self.kernel) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.in_w + 2 * self.pad - self.kernel) / self.stride + 1
    }

    pub fn out_plane(&self) -> usize {
        self.out_h() * self.out_w()
    }

    /// Rows of the unfolded input (= columns of the weight matrix).
    pub fn patch_len(&self) -> usize {
        self.in_ch * self.kernel * self.kernel
    }

    pub fn weight_len(&self) -> usize {
        self.out_ch * self.patch_len()
    }

    pub fn in_len(&self) -> usize {
        self.in_ch * self.in_h * self.in_w
    }

    pub fn out_len(&self) -> usize {
        self.out_ch * self.out_plane()
    }
}

/// Output columns `ox` whose input column `ox * stride + kj - pad` lies
/// inside `0..in_w`.
fn valid_cols(g: &ConvGeom, kj: usize) -> std::ops::Range<usize> {
    let ow = g.out_w();
    let lo = g.pad.saturating_sub(kj).div_ceil(g.stride);
    // largest ox with ox * stride + kj < in_w + pad
    let limit = g.in_w + g.pad;
    let hi = if kj >= limit {
        0
    } else {
        (limit - kj - 1) / g.stride + 1
    };
    lo.min(ow)..hi.min(ow).max(lo.min(ow))
}

/// Unfold `input` into a `(in_ch * k * k, out_h * out_w)` column matrix.
pub fn im2col<T: Scalar>(input: &[T], g: &ConvGeom, cols: &mut Vec<T>) {
    let (oh, ow, k) = (g.out_h(), g.out_w(), g.kernel);
    let plane = oh * ow;
    cols.clear();
    cols.resize(g.patch_len() * plane, T::zero());
    for c in 0..g.in_ch {
        let src = &input[c * g.in_h * g.in_w..(c + 1) * g.in_h * g.in_w];
        for ki in 0..k {
            for kj in 0..k {
                let row = (c * k + ki) * k + kj;
                let dst = &mut cols[row * plane..(row + 1) * plane];
                let xs = valid_cols(g, kj);
                if xs.is_empty() {
                    continue;
                }
                let ix0 = xs.start * g.stride + kj - g.pad;
                for oy in 0..oh {
                    let iy = oy * g.stride + ki;
                    if iy < g.pad || iy - g.pad >= g.in_h {
                        continue;
                    }
                    let src_row = &src[(iy - g.pad) * g.in_w..(iy - g.pad + 1) * g.in_w];
                    let dst_row = &mut dst[oy * ow + xs.start..oy * ow + xs.end];
                    if g.stride == 1 {
                        dst_row.copy_from_slice(&src_row[ix0..ix0 + xs.len()]);
                    } else {
                        for (i, d) in dst_row.iter_mut().enumerate() {
                            *d = src_row[ix0 + i * g.stride];
                        }
                    }
                }
            }
        }
    }
}

/// Fold a column-matrix gradient back onto the input grid (overwrites `dinput`).
pub fn col2im<T: Scalar>(dcols: &[T], g: &ConvGeom, dinput: &mut [T]) {
    let (oh, ow, k) = (g.out_h(), g.out_w(), g.kernel);
    let plane = oh * ow;
    dinput.iter_mut().for_each(|v| *v = T::zero());
    for c in 0..g.in_ch {
        let dst = &mut dinput[c * g.in_h * g.in_w..(c + 1) * g.in_h * g.in_w];
        for ki in 0..k {
            for kj in 0..k {
                let row = (c * k + ki) * k + kj;
                let src = &dcols[row * plane..(row + 1) * plane];
                let xs = valid_cols(g, kj);
                if xs.is_empty() {
                    continue;
                }
                let ix0 = xs.start * g.stride + kj - g.pad;
                for oy in 0..oh {
                    let iy = oy * g.stride + ki;
                    if iy < g.pad || iy - g.pad >= g.in_h {
                        continue;
                    }
                    let dst_row = &mut dst[(iy - g.pad) * g.in_w..(iy - g.pad + 1) * g.in_w];
                    let src_row = &src[oy * ow + xs.start..oy * ow + xs.end];
                    if g.stride == 1 {
                        for (d, &v) in dst_row[ix0..ix0 + xs.len()].iter_mut().zip(src_row) {
                            *d += v;
                        }
                    } else {
                        for (i, &v) in src_row.iter().enumerate() {
                            dst_row[ix0 + i * g.stride] += v;
                        }
                    }
                }
            }
        }
    }
}

/// Bias-free convolution. `weight` is `(out_ch, in_ch * k * k)`; `cols`
/// receives the unfolded input for the backward pass.
pub fn conv2d_forward<T: Scalar>(input: &[T], g: &ConvGeom, weight: &[T], cols: &mut Vec<T>, out: &mut [T]) {
    im2col(input, g, cols);
    T::gemm(
        g.out_ch,
        g.patch_len(),
        g.out_plane(),
        T::one(),
        weight,
        false,
        cols,
        false,
        T::zero(),
        out,
    );
}

/// `dweight += dout * cols^T`; if `dinput` is given it receives the input gradient.
pub fn conv2d_backward<T: Scalar>(
    dout: &[T],
    g: &ConvGeom,
    weight: &[T],
    cols: &[T],
    dweight: &mut [T],
    dinput: Option<&mut [T]>,
    scratch: &mut Vec<T>,
) {
    let p = g.out_plane();
    T::gemm(
        g.out_ch,
        p,
        g.patch_len(),
        T::one(),
        dout,
        false,
        cols,
        true,
        T::one(),
        dweight,
    );
    if let Some(dinput) = dinput {
        scratch.clear();
        scratch.resize(g.patch_len() * p, T::zero());
        T::gemm(
            g.patch_len(),
            g.out_ch,
            p,
            T::one(),
            weight,
            true,
            dout,
            false,
            T::zero(),
            scratch,
        );
        col2im(scratch, g, dinput);
    }
}

/// Per-channel affine map `y = scale[c] * x + shift[c]`.
pub fn scale_shift_forward<T: Scalar>(x: &[T], scale: &[T], shift: &[T], out: &mut [T]) {
    let plane = x.len() / scale.len();
    for c in 0..scale.len() {
        let (s, b) = (scale[c], shift[c]);
        for (o, &v) in out[c * plane..(c + 1) * plane]
            .iter_mut()
            .zip(&x[c * plane..(c + 1) * plane])
        {
            *o = s * v + b;
        }
    }
}

pub fn scale_shift_backward<T: Scalar>(
    dout: &[T],
    x: &[T],
    scale: &[T],
    dscale: &mut [T],
    dshift: &mut [T],
    dx: &mut [T],
) {
    let plane = x.len() / scale.len();
    for c in 0..scale.len() {
        let range = c * plane..(c + 1) * plane;
        let mut ds = T::zero();
        let mut db = T::zero();
        for ((d, &v), out) in dout[range.clone()].iter().zip(&x[range.clone()]).zip(&mut dx[range]) {
            ds += *d * v;
            db += *d;
            *out = *d * scale[c];
        }
        dscale[c] += ds;
        dshift[c] += db;
    }
}

// NaN maps to 0, hence the negated comparisons.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn relu_inplace<T: Scalar>(x: &mut [T]) {
    for v in x {
        if !(*v > T::zero()) {
            *v = T::zero();
        }
    }
}

/// Multiply `d` by the ReLU derivative, read off the activation output.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn relu_backward_inplace<T: Scalar>(d: &mut [T], activated: &[T]) {
    for (g, &a) in d.iter_mut().zip(activated) {
        if !(a > T::zero()) {
            *g = T::zero();
        }
    }
}

/// Non-overlapping `f x f` average pooling; `h` and `w` must be multiples of `f`.
pub fn avg_pool_forward<T: Scalar>(x: &[T], channels: usize, h: usize, w: usize, f: usize, out: &mut [T]) {
    let (oh, ow) = (h / f, w / f);
    let norm = T::from_f64_lossy(1.0 / (f * f) as f64);
    for c in 0..channels {
        let src = &x[c * h * w..(c + 1) * h * w];
        let dst = &mut out[c * oh * ow..(c + 1) * oh * ow];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut s = T::zero();
                for dy in 0..f {
                    let row = &src[(oy * f + dy) * w + ox * f..(oy * f + dy) * w + ox * f + f];
                    for &v in row {
                        s += v;
                    }
                }
                dst[oy * ow + ox] = s * norm;
            }
        }
    }
}

pub fn avg_pool_backward<T: Scalar>(dout: &[T], channels: usize, h: usize, w: usize, f: usize, dx: &mut [T]) {
    let (oh, ow) = (h / f, w / f);
    let norm = T::from_f64_lossy(1.0 / (f * f) as f64);
    for c in 0..channels {
        for y in 0..h {
            for x in 0..w {
                dx[c * h * w + y * w + x] = dout[c * oh * ow + (y / f) * ow + x / f] * norm;
            }
        }
    }
}

/// Global average pooling over each channel plane.
pub fn gap_forward<T: Scalar>(x: &[T], channels: usize, out: &mut [T]) {
    let plane = x.len() / channels;
    let norm = T::from_f64_lossy(1.0 / plane as f64);
    for (c, o) in out.iter_mut().enumerate().take(channels) {
        *o = x[c * plane..(c + 1) * plane].iter().copied().sum::<T>() * norm;
    }
}

pub fn gap_backward<T: Scalar>(dout: &[T], channels: usize, dx: &mut [T]) {
    let plane = dx.len() / channels;
    let norm = T::from_f64_lossy(1.0 / plane as f64);
    for c in 0..channels {
        let d = dout[c] * norm;
        dx[c * plane..(c + 1) * plane].iter_mut().for_each(|v| *v = d);
    }
}

/// `y = W x + b` with `W` stored `(out, in)`.
pub fn linear_forward<T: Scalar>(x: &[T], weight: &[T], bias: &[T], out: &mut [T]) {
    let n_in = x.len();
    for (o, (row, &b)) in out.iter_mut().zip(weight.chunks_exact(n_in).zip(bias)) {
        *o = row.iter().zip(x).map(|(&w, &v)| w * v).sum::<T>() + b;
    }
}

pub fn linear_backward<T: Scalar>(
    dout: &[T],
    x: &[T],
    weight: &[T],
    dweight: &mut [T],
    dbias: &mut [T],
    dx: Option<&mut [T]>,
) {
    let n_in = x.len();
    for (o, &d) in dout.iter().enumerate() {
        dbias[o] += d;
        for (dw, &v) in dweight[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
            *dw += d * v;
        }
    }
    if let Some(dx) = dx {
        for (i, g) in dx.iter_mut().enumerate() {
            *g = dout.iter().enumerate().map(|(o, &d)| d * weight[o * n_in + i]).sum();
        }
    }
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
/// `1 / (1 - rate)`.
pub fn dropout_mask<T: Scalar, R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<T> {
    let keep = T::from_f64_lossy(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

pub fn apply_mask<T: Scalar>(x: &mut [T], mask: &[T]) {
    for (v, &m) in x.iter_mut().zip(mask) {
        *v *= m;
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
    }

    /// Central-difference derivative of `f` along coordinate `i` of `x`.
    fn fd(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
        let mut up = x.to_vec();
        let mut dn = x.to_vec();
        up[i] += h;
        dn[i] -= h;
        (f(&up) - f(&dn)) / (2.0 * h)
    }

    fn assert_close(a: f64, b: f64, what: &str) {
        let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
        assert!(rel < 1e-6, "{what}: analytic {a} vs numeric {b} (rel {rel})");
    }

    /// Random linear functional of the output, so every output entry matters.
    fn probe(n: usize) -> Vec<f64> {
        rand_vec(n, 999)
    }

    #[test]
    fn one_by_one_conv_by_hand() {
        // 2 input channels, 1 output channel, 1x1 kernel on a single pixel.
        let g = ConvGeom {
            in_ch: 2,
            out_ch: 1,
            in_h: 1,
            in_w: 1,
            kernel: 1,
            stride: 1,
            pad: 0,
        };
        let mut cols = Vec::new();
        let mut out = [0.0f64];
        conv2d_forward(&[3.0, -2.0], &g, &[0.5, 4.0], &mut cols, &mut out);
        assert_eq!(out[0], 0.5 * 3.0 + 4.0 * -2.0);
    }

    #[test]
    fn conv_padding_and_stride_geometry() {
        let g = ConvGeom {
            in_ch: 1,
            out_ch: 1,
            in_h: 5,
            in_w: 5,
            kernel: 3,
            stride: 2,
            pad: 1,
        };
        assert_eq!((g.out_h(), g.out_w()), (3, 3));
        // all-ones kernel on all-ones input counts in-bounds taps
        let mut cols = Vec::new();
        let mut out = vec![0.0f64; 9];
        conv2d_forward(&[1.0; 25], &g, &[1.0; 9], &mut cols, &mut out);
        assert_eq!(out, vec![4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0]);
    }

    /// Direct nested-loop unfold with per-tap bounds checks.
    fn naive_im2col(input: &[f64], g: &ConvGeom) -> Vec<f64> {
        let (oh, ow, k) = (g.out_h(), g.out_w(), g.kernel);
        let mut cols = vec![0.0; g.patch_len() * oh * ow];
        for c in 0..g.in_ch {
            for ki in 0..k {
                for kj in 0..k {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let iy = (oy * g.stride + ki) as isize - g.pad as isize;
                            let ix = (ox * g.stride + kj) as isize - g.pad as isize;
                            if iy >= 0 && ix >= 0 && (iy as usize) < g.in_h && (ix as usize) < g.in_w {
                                cols[((c * k + ki) * k + kj) * oh * ow + oy * ow + ox] =
                                    input[c * g.in_h * g.in_w + iy as usize * g.in_w + ix as usize];
                            }
                        }
                    }
                }
            }
        }
        cols
    }

    #[test]
    fn im2col_matches_naive_unfold_and_col2im_is_its_adjoint() {
        for (h, w, kernel, stride, pad) in [
            (5, 4, 3, 1, 1),
            (6, 7, 3, 2, 1),
            (5, 5, 1, 1, 0),
            (7, 6, 5, 1, 2),
            (8, 8, 3, 3, 0),
            (4, 9, 5, 2, 3),
            (3, 3, 3, 1, 0),
        ] {
            let g = ConvGeom {
                in_ch: 2,
                out_ch: 1,
                in_h: h,
                in_w: w,
                kernel,
                stride,
                pad,
            };
            let x = rand_vec(g.in_len(), 11);
            let mut cols = Vec::new();
            im2col(&x, &g, &mut cols);
            assert_eq!(cols, naive_im2col(&x, &g), "{h}x{w} k{kernel} s{stride} p{pad}");

            // <im2col(x), y> == <x, col2im(y)>
            let y = rand_vec(cols.len(), 12);
            let mut back = vec![0.0; x.len()];
            col2im(&y, &g, &mut back);
            let lhs: f64 = cols.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&back).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let g = ConvGeom {
            in_ch: 2,
            out_ch: 3,
            in_h: 5,
            in_w: 4,
            kernel: 3,
            stride: 1,
            pad: 1,
        };
        let x = rand_vec(g.in_len(), 1);
        let w = rand_vec(g.weight_len(), 2);
        let pr = probe(g.out_len());
        let objective = |x: &[f64], w: &[f64]| {
            let mut cols = Vec::new();
            let mut out = vec![0.0; g.out_len()];
            conv2d_forward(x, &g, w, &mut cols, &mut out);
            out.iter().zip(&pr).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut cols = Vec::new();
        let mut out = vec![0.0; g.out_len()];
        conv2d_forward(&x, &g, &w, &mut cols, &mut out);
        let mut dw = vec![0.0; w.len()];
        let mut dx = vec![0.0; x.len()];
        let mut scratch = Vec::new();
        conv2d_backward(&pr, &g, &w, &cols, &mut dw, Some(&mut dx), &mut scratch);
        for i in 0..w.len() {
            assert_close(dw[i], fd(&|w| objective(&x, w), &w, i, 1e-5), "dW");
        }
        for i in 0..x.len() {
            assert_close(dx[i], fd(&|x| objective(x, &w), &x, i, 1e-5), "dX");
        }
    }

    #[test]
    fn strided_conv_input_gradient() {
        let g = ConvGeom {
            in_ch: 1,
            out_ch: 2,
            in_h: 6,
            in_w: 6,
            kernel: 3,
            stride: 2,
            pad: 1,
        };
        let x = rand_vec(g.in_len(), 3);
        let w = rand_vec(g.weight_len(), 4);
        let pr = probe(g.out_len());
        let objective = |x: &[f64]| {
            let mut cols = Vec::new();
            let mut out = vec![0.0; g.out_len()];
            conv2d_forward(x, &g, &w, &mut cols, &mut out);
            out.iter().zip(&pr).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut cols = Vec::new();
        let mut out = vec![0.0; g.out_len()];
        conv2d_forward(&x, &g, &w, &mut cols, &mut out);
        let mut dw = vec![0.0; w.len()];
        let mut dx = vec![0.0; x.len()];
        conv2d_backward(&pr, &g, &w, &cols, &mut dw, Some(&mut dx), &mut Vec::new());
        for i in 0..x.len() {
            assert_close(dx[i], fd(&objective, &x, i, 1e-5), "dX strided");
        }
    }

    #[test]
    fn scale_shift_gradients() {
        let x = rand_vec(12, 5);
        let s = rand_vec(3, 6);
        let b = rand_vec(3, 7);
        let pr = probe(12);
        let f = |x: &[f64], s: &[f64], b: &[f64]| {
            let mut o = vec![0.0; 12];
            scale_shift_forward(x, s, b, &mut o);
            o.iter().zip(&pr).map(|(a, c)| a * c).sum::<f64>()
        };
        let (mut ds, mut db, mut dx) = (vec![0.0; 3], vec![0.0; 3], vec![0.0; 12]);
        scale_shift_backward(&pr, &x, &s, &mut ds, &mut db, &mut dx);
        for i in 0..3 {
            assert_close(ds[i], fd(&|s| f(&x, s, &b), &s, i, 1e-5), "dscale");
            assert_close(db[i], fd(&|b| f(&x, &s, b), &b, i, 1e-5), "dshift");
        }
        for i in 0..12 {
            assert_close(dx[i], fd(&|x| f(x, &s, &b), &x, i, 1e-5), "dx");
        }
    }

    #[test]
    fn relu_pool_gap_linear_gradients() {
        let h = 1e-5;
        // relu away from the kink
        let x: Vec<f64> = rand_vec(10, 8)
            .into_iter()
            .map(|v| if v.abs() < 0.01 { 0.5 } else { v })
            .collect();
        let pr = probe(10);
        let f = |x: &[f64]| {
            let mut y = x.to_vec();
            relu_inplace(&mut y);
            y.iter().zip(&pr).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut y = x.clone();
        relu_inplace(&mut y);
        let mut d = pr.clone();
        relu_backward_inplace(&mut d, &y);
        for i in 0..10 {
            assert_close(d[i], fd(&f, &x, i, h), "relu");
        }

        // avg pool 2x2 over 2 channels of 4x6
        let x = rand_vec(48, 9);
        let pr = probe(12);
        let f = |x: &[f64]| {
            let mut o = vec![0.0; 12];
            avg_pool_forward(x, 2, 4, 6, 2, &mut o);
            o.iter().zip(&pr).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut dx = vec![0.0; 48];
        avg_pool_backward(&pr, 2, 4, 6, 2, &mut dx);
        for i in 0..48 {
            assert_close(dx[i], fd(&f, &x, i, h), "pool");
        }

        // global average pool
        let x = rand_vec(15, 10);
        let pr = probe(3);
        let f = |x: &[f64]| {
            let mut o = vec![0.0; 3];
            gap_forward(x, 3, &mut o);
            o.iter().zip(&pr).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut dx = vec![0.0; 15];
        gap_backward(&pr, 3, &mut dx);
        for i in 0..15 {
            assert_close(dx[i], fd(&f, &x, i, h), "gap");
        }

        // linear 4 -> 3
        let x = rand_vec(4, 11);
        let w = rand_vec(12, 12);
        let b = rand_vec(3, 13);
        let pr = probe(3);
        let f = |x: &[f64], w: &[f64], b: &[f64]| {
            let mut o = vec![0.0; 3];
            linear_forward(x, w, b, &mut o);
            o.iter().zip(&pr).map(|(a, c)| a * c).sum::<f64>()
        };
        let (mut dw, mut db, mut dx) = (vec![0.0; 12], vec![0.0; 3], vec![0.0; 4]);
        linear_backward(&pr, &x, &w, &mut dw, &mut db, Some(&mut dx));
        for i in 0..12 {
            assert_close(dw[i], fd(&|w| f(&x, w, &b), &w, i, h), "linear dW");
        }
        for i in 0..3 {
            assert_close(db[i], fd(&|b| f(&x, &w, b), &b, i, h), "linear db");
        }
        for i in 0..4 {
            assert_close(dx[i], fd(&|x| f(x, &w, &b), &x, i, h), "linear dx");
        }
    }

    #[test]
    fn dropout_rate_and_rescale() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for rate in [0.1, 0.2, 0.5] {
            let mask: Vec<f64> = dropout_mask(100_000, rate, &mut rng);
            let zeros = mask.iter().filter(|&&m| m == 0.0).count() as f64 / 1e5;
            assert!((zeros - rate).abs() < 0.01, "rate {rate}: empirical {zeros}");
            let keep = 1.0 / (1.0 - rate);
            assert!(mask.iter().all(|&m| m == 0.0 || m == keep));
        }
        let mut zero_rate: Vec<f64> = vec![2.0; 5];
        apply_mask(&mut zero_rate, &dropout_mask::<f64, _>(5, 0.0, &mut rng));
        assert_eq!(zero_rate, vec![2.0; 5]);
    }
}
