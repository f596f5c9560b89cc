//! Direct 2-D correlation on single planes with half-sample symmetric
//! (edge-duplicating mirror) padding, plus the matching backward kernels.
//!
//! All loops run in a fixed order (tap row, tap column, output row, output
//! column) so results are reproducible bit-for-bit.

use num_traits::Float;

/// Maps a possibly out-of-range index onto `0..n` by mirroring about the
/// outer pixel edges: `.. b a | a b c | c b ..`. Valid for any `n >= 1`
/// and any offset, since the extension is periodic with period `2n`.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Returns the `(h + 2*ry) x (w + 2*rx)` mirror-padded copy of `src`.
pub fn pad_plane<T: Copy>(src: &[T], h: usize, w: usize, ry: usize, rx: usize) -> Vec<T> {
    let ph = h + 2 * ry;
    let pw = w + 2 * rx;
    let mut out = Vec::with_capacity(ph * pw);
    for pr in 0..ph {
        let r = reflect_index(pr as isize - ry as isize, h);
        let row = &src[r * w..(r + 1) * w];
        for pc in 0..pw {
            out.push(row[reflect_index(pc as isize - rx as isize, w)]);
        }
    }
    out
}

/// Folds a gradient on the padded plane back onto the `h x w` source,
/// adding into `dst`.
pub fn unpad_accumulate<T: Float>(
    padded: &[T],
    h: usize,
    w: usize,
    ry: usize,
    rx: usize,
    dst: &mut [T],
) {
    let ph = h + 2 * ry;
    let pw = w + 2 * rx;
    for pr in 0..ph {
        let r = reflect_index(pr as isize - ry as isize, h);
        for pc in 0..pw {
            let c = reflect_index(pc as isize - rx as isize, w);
            dst[r * w + c] = dst[r * w + c] + padded[pr * pw + pc];
        }
    }
}

/// `out[r, c] += sum_{ky,kx} kernel[ky, kx] * padded[r + ky, c + kx]`.
pub fn correlate_accumulate<T: Float>(
    padded: &[T],
    h: usize,
    w: usize,
    kernel: &[T],
    kh: usize,
    kw: usize,
    out: &mut [T],
) {
    let pw = w + kw - 1;
    for ky in 0..kh {
        for kx in 0..kw {
            let k = kernel[ky * kw + kx];
            if k == T::zero() {
                continue;
            }
            for r in 0..h {
                let src = &padded[(r + ky) * pw + kx..(r + ky) * pw + kx + w];
                let dst = &mut out[r * w..(r + 1) * w];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d = *d + k * s;
                }
            }
        }
    }
}

/// Gradient of `correlate_accumulate` with respect to the kernel, added
/// into `grad_kernel`.
pub fn correlate_kernel_grad<T: Float>(
    padded: &[T],
    h: usize,
    w: usize,
    grad_out: &[T],
    kh: usize,
    kw: usize,
    grad_kernel: &mut [T],
) {
    let pw = w + kw - 1;
    for ky in 0..kh {
        for kx in 0..kw {
            let mut acc = T::zero();
            for r in 0..h {
                let src = &padded[(r + ky) * pw + kx..(r + ky) * pw + kx + w];
                let g = &grad_out[r * w..(r + 1) * w];
                for (&s, &d) in src.iter().zip(g) {
                    acc = acc + s * d;
                }
            }
            grad_kernel[ky * kw + kx] = grad_kernel[ky * kw + kx] + acc;
        }
    }
}

/// Gradient of `correlate_accumulate` with respect to the padded input,
/// added into `grad_padded`.
pub fn correlate_input_grad<T: Float>(
    grad_out: &[T],
    h: usize,
    w: usize,
    kernel: &[T],
    kh: usize,
    kw: usize,
    grad_padded: &mut [T],
) {
    let pw = w + kw - 1;
    for ky in 0..kh {
        for kx in 0..kw {
            let k = kernel[ky * kw + kx];
            if k == T::zero() {
                continue;
            }
            for r in 0..h {
                let g = &grad_out[r * w..(r + 1) * w];
                let dst = &mut grad_padded[(r + ky) * pw + kx..(r + ky) * pw + kx + w];
                for (d, &s) in dst.iter_mut().zip(g) {
                    *d = *d + k * s;
                }
            }
        }
    }
}
