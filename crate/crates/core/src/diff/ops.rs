//! Forward and backward kernels for every operator the networks use.
//!
//! Batch items are processed independently (in parallel when rayon has
//! workers); reductions across the batch, such as weight gradients, are
//! summed in batch order so results do not depend on the thread count.

use rayon::prelude::*;

use super::array::{Array4, Shape4};
use crate::error::{Error, Result};

fn shape_err(msg: String) -> Error {
    Error::Shape(msg)
}

/// Sum per-sample buffers in sample order.
fn reduce_in_order(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for part in parts {
        for (a, p) in acc.iter_mut().zip(part) {
            *a += p;
        }
    }
    acc
}

#[inline]
fn valid_range(len: usize, shift: isize) -> (usize, usize) {
    // positions p with 0 <= p + shift < len
    let lo = (-shift).max(0) as usize;
    let hi = (len as isize - shift).clamp(0, len as isize) as usize;
    (lo, hi.max(lo))
}

/// Same-padded 2-D convolution. `weight` is `[out, in, k, k]`, `bias` is `[out, 1, 1, 1]`.
pub fn conv2d(x: &Array4, weight: &Array4, bias: &Array4) -> Result<Array4> {
    let (xs, ws) = (x.shape(), weight.shape());
    let k = ws.h;
    if ws.w != k || !(k == 1 || k == 3) {
        return Err(Error::InvalidArgument(format!("unsupported kernel size {}x{}", ws.h, ws.w)));
    }
    if ws.c != xs.c {
        return Err(shape_err(format!("conv expects {} input channels, got {}", ws.c, xs.c)));
    }
    if bias.shape().len() != ws.n {
        return Err(shape_err(format!("bias has {} values for {} outputs", bias.shape().len(), ws.n)));
    }
    let out_shape = Shape4::new(xs.n, ws.n, xs.h, xs.w);
    let mut out = Array4::zeros(out_shape);
    let (in_c, out_c, h, w) = (xs.c, ws.n, xs.h, xs.w);
    let hw = h * w;
    let pad = (k / 2) as isize;
    let (wd, bd) = (weight.data(), bias.data());
    out.data_mut()
        .par_chunks_mut(out_shape.sample())
        .zip(x.data().par_chunks(xs.sample()))
        .for_each(|(o_sample, x_sample)| {
            for o in 0..out_c {
                let op = &mut o_sample[o * hw..(o + 1) * hw];
                op.fill(bd[o]);
                for i in 0..in_c {
                    let xp = &x_sample[i * hw..(i + 1) * hw];
                    for ky in 0..k {
                        let dy = ky as isize - pad;
                        let (y0, y1) = valid_range(h, dy);
                        for kx in 0..k {
                            let dx = kx as isize - pad;
                            let (x0, x1) = valid_range(w, dx);
                            let wv = wd[((o * in_c + i) * k + ky) * k + kx];
                            for y in y0..y1 {
                                let src = ((y as isize + dy) as usize) * w;
                                let orow = &mut op[y * w + x0..y * w + x1];
                                let xrow = &xp[(src as isize + x0 as isize + dx) as usize..];
                                for (ov, xv) in orow.iter_mut().zip(xrow) {
                                    *ov += wv * xv;
                                }
                            }
                        }
                    }
                }
            }
        });
    Ok(out)
}

pub struct ParamGrads {
    pub input: Array4,
    pub weight: Array4,
    pub bias: Array4,
}

pub fn conv2d_backward(x: &Array4, weight: &Array4, grad_out: &Array4) -> ParamGrads {
    let (xs, ws) = (x.shape(), weight.shape());
    let k = ws.h;
    let (in_c, out_c, h, w) = (xs.c, ws.n, xs.h, xs.w);
    let hw = h * w;
    let pad = (k / 2) as isize;
    let wd = weight.data();
    let gs = grad_out.shape();

    let mut gx = Array4::zeros(xs);
    let per_sample: Vec<(Vec<f64>, Vec<f64>)> = gx
        .data_mut()
        .par_chunks_mut(xs.sample())
        .zip(x.data().par_chunks(xs.sample()))
        .zip(grad_out.data().par_chunks(gs.sample()))
        .map(|((gx_sample, x_sample), g_sample)| {
            let mut gw = vec![0.0; ws.len()];
            let mut gb = vec![0.0; out_c];
            for o in 0..out_c {
                let gp = &g_sample[o * hw..(o + 1) * hw];
                gb[o] = gp.iter().sum();
                for i in 0..in_c {
                    let xp = &x_sample[i * hw..(i + 1) * hw];
                    let gxp = &mut gx_sample[i * hw..(i + 1) * hw];
                    for ky in 0..k {
                        let dy = ky as isize - pad;
                        let (y0, y1) = valid_range(h, dy);
                        for kx in 0..k {
                            let dx = kx as isize - pad;
                            let (x0, x1) = valid_range(w, dx);
                            let widx = ((o * in_c + i) * k + ky) * k + kx;
                            let wv = wd[widx];
                            let mut acc = 0.0;
                            for y in y0..y1 {
                                let src = (((y as isize + dy) as usize) * w) as isize + x0 as isize + dx;
                                let src = src as usize;
                                let grow = &gp[y * w + x0..y * w + x1];
                                let xrow = &xp[src..src + (x1 - x0)];
                                for (gv, xv) in grow.iter().zip(xrow) {
                                    acc += gv * xv;
                                }
                                let gxrow = &mut gxp[src..src + (x1 - x0)];
                                for (gxv, gv) in gxrow.iter_mut().zip(grow) {
                                    *gxv += wv * gv;
                                }
                            }
                            gw[widx] += acc;
                        }
                    }
                }
            }
            (gw, gb)
        })
        .collect();

    let (gws, gbs): (Vec<_>, Vec<_>) = per_sample.into_iter().unzip();
    ParamGrads {
        input: gx,
        weight: Array4::from_vec(ws, reduce_in_order(gws, ws.len())).unwrap(),
        bias: Array4::from_vec(Shape4::new(out_c, 1, 1, 1), reduce_in_order(gbs, out_c)).unwrap(),
    }
}

pub fn relu(x: &Array4) -> Array4 {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Passes the gradient where `x > 0`; the subgradient at 0 is 0.
pub fn relu_backward(x: &Array4, grad_out: &Array4) -> Array4 {
    let mut g = grad_out.clone();
    for (gv, &xv) in g.data_mut().iter_mut().zip(x.data()) {
        if xv <= 0.0 {
            *gv = 0.0;
        }
    }
    g
}

/// 2×2 max pooling, stride 2. Returns the pooled array and, per output
/// element, the flat index of the winning input element. Ties go to the
/// first element in row-major window order.
pub fn maxpool2(x: &Array4) -> Result<(Array4, Vec<usize>)> {
    let s = x.shape();
    if s.h % 2 != 0 || s.w % 2 != 0 {
        return Err(shape_err(format!("maxpool2 needs even spatial dims, got {}x{}", s.h, s.w)));
    }
    let os = Shape4::new(s.n, s.c, s.h / 2, s.w / 2);
    let mut out = Array4::zeros(os);
    let mut argmax = vec![0usize; os.len()];
    let xd = x.data();
    let mut o = 0;
    for n in 0..s.n {
        for c in 0..s.c {
            for y in 0..os.h {
                for xx in 0..os.w {
                    let mut best_idx = x.offset(n, c, 2 * y, 2 * xx);
                    let mut best = xd[best_idx];
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = x.offset(n, c, 2 * y + dy, 2 * xx + dx);
                        if xd[idx] > best {
                            best = xd[idx];
                            best_idx = idx;
                        }
                    }
                    out.data_mut()[o] = best;
                    argmax[o] = best_idx;
                    o += 1;
                }
            }
        }
    }
    Ok((out, argmax))
}

pub fn maxpool2_backward(input_shape: Shape4, argmax: &[usize], grad_out: &Array4) -> Array4 {
    let mut g = Array4::zeros(input_shape);
    for (&idx, &gv) in argmax.iter().zip(grad_out.data()) {
        g.data_mut()[idx] += gv;
    }
    g
}

/// Stride-2 transposed convolution with a 2×2 kernel. `weight` is `[in, out, 2, 2]`.
pub fn upconv2(x: &Array4, weight: &Array4, bias: &Array4) -> Result<Array4> {
    let (xs, ws) = (x.shape(), weight.shape());
    if ws.h != 2 || ws.w != 2 {
        return Err(Error::InvalidArgument(format!("upconv2 kernel must be 2x2, got {}x{}", ws.h, ws.w)));
    }
    if ws.n != xs.c {
        return Err(shape_err(format!("upconv expects {} input channels, got {}", ws.n, xs.c)));
    }
    if bias.shape().len() != ws.c {
        return Err(shape_err(format!("bias has {} values for {} outputs", bias.shape().len(), ws.c)));
    }
    let (in_c, out_c, h, w) = (xs.c, ws.c, xs.h, xs.w);
    let os = Shape4::new(xs.n, out_c, 2 * h, 2 * w);
    let mut out = Array4::zeros(os);
    let (wd, bd) = (weight.data(), bias.data());
    let ow = 2 * w;
    out.data_mut()
        .par_chunks_mut(os.sample())
        .zip(x.data().par_chunks(xs.sample()))
        .for_each(|(o_sample, x_sample)| {
            for o in 0..out_c {
                let op = &mut o_sample[o * os.plane()..(o + 1) * os.plane()];
                op.fill(bd[o]);
                for i in 0..in_c {
                    let xp = &x_sample[i * h * w..(i + 1) * h * w];
                    let k = &wd[(i * out_c + o) * 4..(i * out_c + o) * 4 + 4];
                    for y in 0..h {
                        for xx in 0..w {
                            let v = xp[y * w + xx];
                            let base = 2 * y * ow + 2 * xx;
                            op[base] += v * k[0];
                            op[base + 1] += v * k[1];
                            op[base + ow] += v * k[2];
                            op[base + ow + 1] += v * k[3];
                        }
                    }
                }
            }
        });
    Ok(out)
}

pub fn upconv2_backward(x: &Array4, weight: &Array4, grad_out: &Array4) -> ParamGrads {
    let (xs, ws) = (x.shape(), weight.shape());
    let (in_c, out_c, h, w) = (xs.c, ws.c, xs.h, xs.w);
    let gs = grad_out.shape();
    let ow = 2 * w;
    let wd = weight.data();
    let mut gx = Array4::zeros(xs);
    let per_sample: Vec<(Vec<f64>, Vec<f64>)> = gx
        .data_mut()
        .par_chunks_mut(xs.sample())
        .zip(x.data().par_chunks(xs.sample()))
        .zip(grad_out.data().par_chunks(gs.sample()))
        .map(|((gx_sample, x_sample), g_sample)| {
            let mut gw = vec![0.0; ws.len()];
            let mut gb = vec![0.0; out_c];
            for o in 0..out_c {
                let gp = &g_sample[o * gs.plane()..(o + 1) * gs.plane()];
                gb[o] = gp.iter().sum();
                for i in 0..in_c {
                    let xp = &x_sample[i * h * w..(i + 1) * h * w];
                    let gxp = &mut gx_sample[i * h * w..(i + 1) * h * w];
                    let kidx = (i * out_c + o) * 4;
                    let k = &wd[kidx..kidx + 4];
                    let mut acc = [0.0; 4];
                    for y in 0..h {
                        for xx in 0..w {
                            let base = 2 * y * ow + 2 * xx;
                            let g = [gp[base], gp[base + 1], gp[base + ow], gp[base + ow + 1]];
                            let v = xp[y * w + xx];
                            gxp[y * w + xx] += g[0] * k[0] + g[1] * k[1] + g[2] * k[2] + g[3] * k[3];
                            for t in 0..4 {
                                acc[t] += v * g[t];
                            }
                        }
                    }
                    for t in 0..4 {
                        gw[kidx + t] += acc[t];
                    }
                }
            }
            (gw, gb)
        })
        .collect();
    let (gws, gbs): (Vec<_>, Vec<_>) = per_sample.into_iter().unzip();
    ParamGrads {
        input: gx,
        weight: Array4::from_vec(ws, reduce_in_order(gws, ws.len())).unwrap(),
        bias: Array4::from_vec(Shape4::new(out_c, 1, 1, 1), reduce_in_order(gbs, out_c)).unwrap(),
    }
}

/// Channel concatenation; `a` occupies the leading channels.
pub fn concat(a: &Array4, b: &Array4) -> Result<Array4> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa.n != sb.n || sa.h != sb.h || sa.w != sb.w {
        return Err(shape_err(format!("cannot concat {sa} with {sb}")));
    }
    let os = Shape4::new(sa.n, sa.c + sb.c, sa.h, sa.w);
    let mut data = Vec::with_capacity(os.len());
    for n in 0..sa.n {
        data.extend_from_slice(&a.data()[n * sa.sample()..(n + 1) * sa.sample()]);
        data.extend_from_slice(&b.data()[n * sb.sample()..(n + 1) * sb.sample()]);
    }
    Array4::from_vec(os, data)
}

/// Split an upstream gradient into the parts for the leading `a_channels` and the rest.
pub fn concat_backward(grad_out: &Array4, a_channels: usize) -> (Array4, Array4) {
    let s = grad_out.shape();
    let sa = Shape4::new(s.n, a_channels, s.h, s.w);
    let sb = Shape4::new(s.n, s.c - a_channels, s.h, s.w);
    let mut ga = Vec::with_capacity(sa.len());
    let mut gb = Vec::with_capacity(sb.len());
    for sample in grad_out.data().chunks_exact(s.sample()) {
        let (left, right) = sample.split_at(sa.sample());
        ga.extend_from_slice(left);
        gb.extend_from_slice(right);
    }
    (Array4::from_vec(sa, ga).unwrap(), Array4::from_vec(sb, gb).unwrap())
}

pub fn add(a: &Array4, b: &Array4) -> Result<Array4> {
    if a.shape() != b.shape() {
        return Err(shape_err(format!("cannot add {} and {}", a.shape(), b.shape())));
    }
    let mut out = a.clone();
    out.add_assign(b);
    Ok(out)
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Array4) -> Array4 {
    x.map(sigmoid_scalar)
}

/// Takes the sigmoid *output* `y` and multiplies the upstream gradient by `y(1-y)`.
pub fn sigmoid_backward(y: &Array4, grad_out: &Array4) -> Array4 {
    let mut g = grad_out.clone();
    for (gv, &yv) in g.data_mut().iter_mut().zip(y.data()) {
        *gv *= yv * (1.0 - yv);
    }
    g
}

/// Mirror index for reflect padding without repeating the edge sample.
#[inline]
fn mirror(i: usize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len - 1);
    let m = i % period;
    if m < len { m } else { period - m }
}

/// Reflect-pad at the bottom and right up to `height × width`.
pub fn reflect_pad(x: &Array4, height: usize, width: usize) -> Result<Array4> {
    let s = x.shape();
    if height < s.h || width < s.w {
        return Err(shape_err(format!("cannot pad {}x{} down to {height}x{width}", s.h, s.w)));
    }
    let os = Shape4::new(s.n, s.c, height, width);
    let mut out = Array4::zeros(os);
    for n in 0..s.n {
        for c in 0..s.c {
            let src = x.plane(n, c);
            let dst = out.plane_mut(n, c);
            for y in 0..height {
                let sy = mirror(y, s.h);
                for xx in 0..width {
                    dst[y * width + xx] = src[sy * s.w + mirror(xx, s.w)];
                }
            }
        }
    }
    Ok(out)
}

pub fn reflect_pad_backward(input_shape: Shape4, grad_out: &Array4) -> Array4 {
    let gs = grad_out.shape();
    let mut g = Array4::zeros(input_shape);
    for n in 0..gs.n {
        for c in 0..gs.c {
            let src = grad_out.plane(n, c);
            let dst = g.plane_mut(n, c);
            for y in 0..gs.h {
                let sy = mirror(y, input_shape.h);
                for xx in 0..gs.w {
                    dst[sy * input_shape.w + mirror(xx, input_shape.w)] += src[y * gs.w + xx];
                }
            }
        }
    }
    g
}

/// Keep the top-left `height × width` window.
pub fn crop(x: &Array4, height: usize, width: usize) -> Result<Array4> {
    let s = x.shape();
    if height > s.h || width > s.w || height == 0 || width == 0 {
        return Err(shape_err(format!("cannot crop {}x{} to {height}x{width}", s.h, s.w)));
    }
    let os = Shape4::new(s.n, s.c, height, width);
    let mut out = Array4::zeros(os);
    for n in 0..s.n {
        for c in 0..s.c {
            let src = x.plane(n, c);
            let dst = out.plane_mut(n, c);
            for y in 0..height {
                dst[y * width..(y + 1) * width].copy_from_slice(&src[y * s.w..y * s.w + width]);
            }
        }
    }
    Ok(out)
}

pub fn crop_backward(input_shape: Shape4, grad_out: &Array4) -> Array4 {
    let gs = grad_out.shape();
    let mut g = Array4::zeros(input_shape);
    for n in 0..gs.n {
        for c in 0..gs.c {
            let src = grad_out.plane(n, c);
            let dst = g.plane_mut(n, c);
            for y in 0..gs.h {
                dst[y * input_shape.w..y * input_shape.w + gs.w].copy_from_slice(&src[y * gs.w..(y + 1) * gs.w]);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arr(shape: [usize; 4], data: &[f64]) -> Array4 {
        Array4::from_vec(Shape4::new(shape[0], shape[1], shape[2], shape[3]), data.to_vec()).unwrap()
    }

    /// Direct definition of a same-padded convolution, used as an oracle.
    fn conv_naive(x: &Array4, w: &Array4, b: &Array4) -> Array4 {
        let (xs, ws) = (x.shape(), w.shape());
        let k = ws.h as isize;
        let p = k / 2;
        let mut out = Array4::zeros(Shape4::new(xs.n, ws.n, xs.h, xs.w));
        for n in 0..xs.n {
            for o in 0..ws.n {
                for y in 0..xs.h as isize {
                    for xx in 0..xs.w as isize {
                        let mut s = b.data()[o];
                        for i in 0..xs.c {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let (sy, sx) = (y + ky - p, xx + kx - p);
                                    if sy >= 0 && sx >= 0 && sy < xs.h as isize && sx < xs.w as isize {
                                        s += w.at(o, i, ky as usize, kx as usize)
                                            * x.at(n, i, sy as usize, sx as usize);
                                    }
                                }
                            }
                        }
                        out.set(n, o, y as usize, xx as usize, s);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn conv_center_tap_scales() {
        let x = arr([1, 1, 1, 1], &[2.0]);
        let mut w = Array4::zeros(Shape4::new(1, 1, 3, 3));
        w.set(0, 0, 1, 1, 3.0);
        let b = Array4::zeros(Shape4::new(1, 1, 1, 1));
        assert_eq!(conv2d(&x, &w, &b).unwrap().data(), &[6.0]);
    }

    #[test]
    fn conv_identity_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array4::randn(Shape4::new(2, 1, 5, 7), 1.0, &mut rng);
        let mut w = Array4::zeros(Shape4::new(1, 1, 3, 3));
        w.set(0, 0, 1, 1, 1.0);
        let out = conv2d(&x, &w, &Array4::zeros(Shape4::new(1, 1, 1, 1))).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn conv_matches_naive_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in [1, 3] {
            let x = Array4::randn(Shape4::new(2, 3, 6, 5), 1.0, &mut rng);
            let w = Array4::randn(Shape4::new(4, 3, k, k), 1.0, &mut rng);
            let b = Array4::randn(Shape4::new(4, 1, 1, 1), 1.0, &mut rng);
            let fast = conv2d(&x, &w, &b).unwrap();
            assert!(fast.max_abs_diff(&conv_naive(&x, &w, &b)) < 1e-12);
        }
    }

    #[test]
    fn conv_errors() {
        let x = Array4::zeros(Shape4::new(1, 2, 4, 4));
        let b = Array4::zeros(Shape4::new(1, 1, 1, 1));
        let w = Array4::zeros(Shape4::new(1, 3, 3, 3));
        assert!(matches!(conv2d(&x, &w, &b), Err(Error::Shape(_))));
        let w5 = Array4::zeros(Shape4::new(1, 2, 5, 5));
        assert!(matches!(conv2d(&x, &w5, &b), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn relu_values_and_gradient() {
        let x = arr([1, 1, 1, 3], &[-1.0, 2.0, 0.0]);
        assert_eq!(relu(&x).data(), &[0.0, 2.0, 0.0]);
        let g = relu_backward(&x, &Array4::filled(x.shape(), 1.0));
        assert_eq!(g.data(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn maxpool_window_and_routing() {
        let x = arr([1, 1, 2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let (y, arg) = maxpool2(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        let g = maxpool2_backward(x.shape(), &arg, &arr([1, 1, 1, 1], &[0.7]));
        assert_eq!(g.data(), &[0.0, 0.0, 0.0, 0.7]);
    }

    #[test]
    fn maxpool_ties_go_to_first_in_scan_order() {
        let x = arr([1, 1, 2, 2], &[5.0, 5.0, 5.0, 5.0]);
        let (y, arg) = maxpool2(&x).unwrap();
        assert_eq!(y.data(), &[5.0]);
        assert_eq!(arg, vec![0]);
    }

    #[test]
    fn maxpool_rejects_odd() {
        assert!(maxpool2(&Array4::zeros(Shape4::new(1, 1, 3, 4))).is_err());
    }

    #[test]
    fn upconv_single_pixel_spreads_kernel() {
        let x = arr([1, 1, 1, 1], &[1.0]);
        let w = arr([1, 1, 2, 2], &[1.5, -2.0, 3.0, 0.25]);
        let b = Array4::zeros(Shape4::new(1, 1, 1, 1));
        let y = upconv2(&x, &w, &b).unwrap();
        assert_eq!(y.shape(), Shape4::new(1, 1, 2, 2));
        assert_eq!(y.data(), &[1.5, -2.0, 3.0, 0.25]);
    }

    #[test]
    fn upconv_zero_input_is_bias() {
        let x = Array4::zeros(Shape4::new(1, 2, 3, 3));
        let w = Array4::filled(Shape4::new(2, 3, 2, 2), 0.3);
        let b = arr([3, 1, 1, 1], &[1.0, -1.0, 0.5]);
        let y = upconv2(&x, &w, &b).unwrap();
        assert_eq!(y.shape(), Shape4::new(1, 3, 6, 6));
        assert!(y.plane(0, 1).iter().all(|&v| v == -1.0));
    }

    #[test]
    fn concat_layout_and_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Array4::randn(Shape4::new(2, 2, 3, 3), 1.0, &mut rng);
        let b = Array4::randn(Shape4::new(2, 3, 3, 3), 1.0, &mut rng);
        let c = concat(&a, &b).unwrap();
        assert_eq!(c.shape().c, 5);
        assert_eq!(c.plane(1, 1), a.plane(1, 1));
        assert_eq!(c.plane(1, 4), b.plane(1, 2));
        let (ga, gb) = concat_backward(&c, 2);
        assert_eq!((ga, gb), (a, b));
        let bad = Array4::zeros(Shape4::new(2, 1, 4, 3));
        assert!(concat(&c, &bad).is_err());
    }

    #[test]
    fn add_identity_and_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = Array4::randn(Shape4::new(1, 2, 3, 3), 1.0, &mut rng);
        let b = Array4::randn(Shape4::new(1, 2, 3, 3), 1.0, &mut rng);
        assert_eq!(add(&a, &Array4::zeros(a.shape())).unwrap(), a);
        assert_eq!(add(&a, &b).unwrap(), add(&b, &a).unwrap());
        assert!(add(&a, &Array4::zeros(Shape4::new(1, 1, 3, 3))).is_err());
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert!((sigmoid_scalar(30.0) - 1.0).abs() < 1e-9);
        let y = arr([1, 1, 1, 1], &[0.5]);
        assert_eq!(sigmoid_backward(&y, &arr([1, 1, 1, 1], &[1.0])).data(), &[0.25]);
        assert!(sigmoid_scalar(-800.0) >= 0.0 && sigmoid_scalar(800.0) <= 1.0);
    }

    #[test]
    fn pad_then_crop_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = Array4::randn(Shape4::new(1, 2, 5, 3), 1.0, &mut rng);
        let p = reflect_pad(&x, 8, 8).unwrap();
        assert_eq!(p.at(0, 0, 5, 0), x.at(0, 0, 3, 0));
        assert_eq!(p.at(0, 1, 0, 3), x.at(0, 1, 0, 1));
        assert_eq!(crop(&p, 5, 3).unwrap(), x);
    }
}
