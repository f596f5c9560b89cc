//! Seeded procedural test images: a smooth gradient, a few oriented
//! sinusoids, band-limited noise and some hard-edged shapes, min-max
//! normalized into [0.1, 0.9].

use std::f64::consts::PI;

use crate::image::Image;
use crate::rng::{derive_seed, Xoshiro256pp};

/// Box blur along rows then columns with mirror borders.
fn box_blur(plane: &mut [f64], h: usize, w: usize, radius: usize) {
    let idx = |i: isize, n: usize| crate::conv::reflect_index(i, n);
    let norm = (2 * radius + 1) as f64;
    let src = plane.to_vec();
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for d in -(radius as isize)..=radius as isize {
                acc += src[r * w + idx(c as isize + d, w)];
            }
            plane[r * w + c] = acc / norm;
        }
    }
    let src = plane.to_vec();
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for d in -(radius as isize)..=radius as isize {
                acc += src[idx(r as isize + d, h) * w + c];
            }
            plane[r * w + c] = acc / norm;
        }
    }
}

pub fn synthetic_texture(seed: u64, height: usize, width: usize) -> Image {
    assert!(height > 0 && width > 0);
    let mut rng = Xoshiro256pp::from_seed(seed);
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.next_f64();
    let (hf, wf) = (height as f64, width as f64);
    let mut plane = vec![0f64; height * width];

    let (gx, gy) = (u(-1.0, 1.0), u(-1.0, 1.0));
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            let cycles = u(1.0, 10.0);
            let angle = u(0.0, PI);
            (
                cycles * angle.cos(),
                cycles * angle.sin(),
                u(0.0, 2.0 * PI),
                u(0.2, 1.0),
            )
        })
        .collect();
    for r in 0..height {
        for c in 0..width {
            let (y, x) = (r as f64 / hf, c as f64 / wf);
            let mut v = gx * x + gy * y;
            for &(fx, fy, phase, amp) in &waves {
                v += amp * (2.0 * PI * (fx * x + fy * y) + phase).sin();
            }
            plane[r * width + c] = v;
        }
    }

    let mut noise_rng = Xoshiro256pp::from_seed(derive_seed(seed, 1, 0));
    let mut noise: Vec<f64> = (0..height * width)
        .map(|_| noise_rng.next_f64() - 0.5)
        .collect();
    box_blur(&mut noise, height, width, 2);
    box_blur(&mut noise, height, width, 1);
    let noise_gain = u(2.0, 6.0);

    let shapes = (u(2.0, 6.0)) as usize;
    for _ in 0..shapes {
        let (cy, cx) = (u(0.0, hf), u(0.0, wf));
        let (ry, rx) = (u(2.0, hf / 3.0 + 2.0), u(2.0, wf / 3.0 + 2.0));
        let level = u(-1.5, 1.5);
        let disk = u(0.0, 1.0) < 0.5;
        for r in 0..height {
            for c in 0..width {
                let (dy, dx) = ((r as f64 - cy) / ry, (c as f64 - cx) / rx);
                let inside = if disk {
                    dy * dy + dx * dx <= 1.0
                } else {
                    dy.abs() <= 1.0 && dx.abs() <= 1.0
                };
                if inside {
                    plane[r * width + c] += level;
                }
            }
        }
    }
    for (p, n) in plane.iter_mut().zip(&noise) {
        *p += noise_gain * n;
    }

    let lo = plane.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = plane.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let data = plane
        .iter()
        .map(|&v| (0.1 + 0.8 * (v - lo) / span) as f32)
        .collect();
    Image::new(height, width, data).expect("dims checked above")
}

/// `count` textures with seeds derived from `base_seed`.
pub fn texture_set(base_seed: u64, count: usize, height: usize, width: usize) -> Vec<Image> {
    (0..count as u64)
        .map(|i| synthetic_texture(derive_seed(base_seed, 0x7e57, i), height, width))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = synthetic_texture(3, 32, 40);
        assert_eq!(a, synthetic_texture(3, 32, 40));
        assert_ne!(a, synthetic_texture(4, 32, 40));
        let (lo, hi, _) = a.stats();
        assert!(lo >= 0.1 - 1e-6 && hi <= 0.9 + 1e-6);
        assert!(hi - lo > 0.5);
    }

    #[test]
    fn set_is_distinct() {
        let set = texture_set(1, 3, 16, 16);
        assert_eq!(set.len(), 3);
        assert_ne!(set[0], set[1]);
    }
}
