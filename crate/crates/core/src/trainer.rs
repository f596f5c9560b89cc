//! Plain per-patch SGD for the tiny network on synthetic noisy/clean pairs.
//!
//! Training is sequential and a pure function of the configuration and the
//! clean images: the patch stream, flip/rotation augmentation and per-patch
//! noise seeds are all derived from `TrainConfig::seed`.

use thiserror::Error;

use crate::degrade::{add_awgn, NoiseSpec};
use crate::image::Image;
use crate::rng::{derive_seed, Xoshiro256pp};
use crate::tinynet::{Architecture, Layer, NetError, NetworkWeights};
use crate::transforms::{apply_d4, D4Transform};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("no training images")]
    NoImages,
    #[error("image {index} is {height}x{width}, smaller than patch size {patch}")]
    ImageTooSmall {
        index: usize,
        height: usize,
        width: usize,
        patch: usize,
    },
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub patch_size: usize,
    pub patches_per_epoch: usize,
    pub epochs: usize,
    pub learning_rate: f32,
    /// Noise std on the 0-255 scale.
    pub sigma: f64,
    pub seed: u64,
    /// Apply a random flip/rotation to every training patch.
    pub augment_fr: bool,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            patch_size: 17,
            patches_per_epoch: 2000,
            epochs: 30,
            learning_rate: 0.01,
            sigma: 25.0,
            seed: 1,
            augment_fr: false,
            architecture: Architecture::default_denoiser(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.architecture.validate()?;
        if self.patch_size.is_multiple_of(2) || self.patch_size < self.architecture.max_kernel_dim()
        {
            return Err(TrainError::BadConfig(format!(
                "patch size {} must be odd and at least the largest kernel dim",
                self.patch_size
            )));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::BadConfig(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(TrainError::BadConfig(format!(
                "sigma {} must be non-negative",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Uniform(-s, s) weights with s = sqrt(6 / (in*kh*kw + out*kh*kw)), zero
/// biases. Weights are drawn layer by layer in storage order.
pub fn init_weights(seed: u64, arch: &Architecture) -> Result<NetworkWeights, NetError> {
    arch.validate()?;
    let mut rng = Xoshiro256pp::from_seed(seed);
    let layers = arch
        .layers
        .iter()
        .map(|&shape| {
            let taps = (shape.kh * shape.kw) as f64;
            let s = (6.0 / (shape.in_ch as f64 * taps + shape.out_ch as f64 * taps)).sqrt();
            let mut layer = Layer::<f32>::zeros(shape);
            for w in &mut layer.weights {
                *w = ((2.0 * rng.next_f64() - 1.0) * s) as f32;
            }
            layer
        })
        .collect();
    Ok(NetworkWeights {
        residual: arch.residual,
        layers,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: NetworkWeights,
    /// Mean per-patch training MSE of each epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn train(config: &TrainConfig, clean_images: &[Image]) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if clean_images.is_empty() {
        return Err(TrainError::NoImages);
    }
    let ps = config.patch_size;
    for (index, img) in clean_images.iter().enumerate() {
        if img.height() < ps || img.width() < ps {
            return Err(TrainError::ImageTooSmall {
                index,
                height: img.height(),
                width: img.width(),
                patch: ps,
            });
        }
    }

    let mut net = init_weights(config.seed, &config.architecture)?;
    let mut sampler = Xoshiro256pp::from_seed(derive_seed(config.seed, 0x5a3, 0));
    let lr = config.learning_rate;
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut total = 0f64;
        for p in 0..config.patches_per_epoch {
            let img = &clean_images[sampler.below(clean_images.len() as u64) as usize];
            let row = sampler.below((img.height() - ps + 1) as u64) as usize;
            let col = sampler.below((img.width() - ps + 1) as u64) as usize;
            let mut clean = img.crop(row, col, ps, ps).expect("patch fits");
            if config.augment_fr {
                let k = 1 + sampler.below(8) as u8;
                clean = apply_d4(D4Transform::new(k).unwrap(), &clean);
            }
            let noise_seed = derive_seed(config.seed, epoch as u64 + 1, p as u64);
            let noisy = add_awgn(
                &clean,
                NoiseSpec::new(config.sigma, noise_seed).expect("validated"),
            );

            let (loss, grads) = net.loss_and_gradients(noisy.data(), clean.data(), ps, ps);
            total += loss as f64;
            if lr > 0.0 {
                for (li, layer) in net.layers.iter_mut().enumerate() {
                    for (w, g) in layer.weights.iter_mut().zip(&grads.weights[li]) {
                        *w -= lr * g;
                    }
                    for (b, g) in layer.bias.iter_mut().zip(&grads.bias[li]) {
                        *b -= lr * g;
                    }
                }
            }
        }
        epoch_losses.push(total / config.patches_per_epoch.max(1) as f64);
    }
    Ok(TrainOutcome {
        weights: net,
        epoch_losses,
    })
}
