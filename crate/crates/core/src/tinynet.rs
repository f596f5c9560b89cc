//! A small conv-ReLU stack with optional residual output, its backward pass,
//! and the "SCNW" weight format.
//!
//! The forward and backward passes are generic over the float type. Inference
//! and training run in `f32`; gradient checks instantiate the same code in
//! `f64`.

use std::fs;
use std::path::Path;

use num_traits::Float;
use thiserror::Error;

use crate::conv::{
    correlate_accumulate, correlate_input_grad, correlate_kernel_grad, pad_plane, unpad_accumulate,
};
use crate::image::Image;
use crate::restorer::{RestoreError, Restorer};

const MAGIC: &[u8; 4] = b"SCNW";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("network has no layers")]
    NoLayers,
    #[error("channel mismatch at layer {layer}: expects {expected} input channels, got {found}")]
    ChannelMismatch {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("final layer must produce 1 channel, produces {0}")]
    OutputChannels(usize),
    #[error("layer {layer}: kernel {kh}x{kw} must be odd and positive")]
    EvenKernel { layer: usize, kh: usize, kw: usize },
    #[error("layer {layer}: zero channel count")]
    ZeroChannels { layer: usize },
    #[error("layer {layer}: parameter count does not match declared shape")]
    ParamLength { layer: usize },
    #[error("final layer activation must be linear")]
    FinalActivation,
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("unknown activation code {0}")]
    UnknownActivation(u8),
    #[error("truncated weight file")]
    Truncated,
    #[error("{0} trailing bytes after weight data")]
    TrailingBytes(usize),
    #[error("layer index {index} out of range 1..={count}")]
    LayerIndex { index: usize, count: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, NetError> {
        match code {
            0 => Ok(Activation::Linear),
            1 => Ok(Activation::Relu),
            other => Err(NetError::UnknownActivation(other)),
        }
    }
}

/// Shape of one convolution layer, without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub out_ch: usize,
    pub in_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub activation: Activation,
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        self.out_ch * self.in_ch * self.kh * self.kw
    }
}

/// Layer list plus residual flag; weights of layer `l` are indexed
/// `[out][in][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub residual: bool,
    pub layers: Vec<LayerShape>,
}

impl Architecture {
    /// 1->8 (3x3 relu), 8->8 (3x3 relu), 8->1 (3x3 linear), residual output.
    pub fn default_denoiser() -> Self {
        let conv = |in_ch, out_ch, activation| LayerShape {
            out_ch,
            in_ch,
            kh: 3,
            kw: 3,
            activation,
        };
        Self {
            residual: true,
            layers: vec![
                conv(1, 8, Activation::Relu),
                conv(8, 8, Activation::Relu),
                conv(8, 1, Activation::Linear),
            ],
        }
    }

    pub fn max_kernel_dim(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.kh.max(l.kw))
            .max()
            .unwrap_or(1)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let Some(last) = self.layers.last() else {
            return Err(NetError::NoLayers);
        };
        let mut prev_out = 1;
        for (i, l) in self.layers.iter().enumerate() {
            let layer = i + 1;
            if l.out_ch == 0 || l.in_ch == 0 {
                return Err(NetError::ZeroChannels { layer });
            }
            if l.kh % 2 == 0 || l.kw % 2 == 0 {
                return Err(NetError::EvenKernel {
                    layer,
                    kh: l.kh,
                    kw: l.kw,
                });
            }
            if l.in_ch != prev_out {
                return Err(NetError::ChannelMismatch {
                    layer,
                    expected: prev_out,
                    found: l.in_ch,
                });
            }
            prev_out = l.out_ch;
        }
        if last.out_ch != 1 {
            return Err(NetError::OutputChannels(last.out_ch));
        }
        if last.activation != Activation::Linear {
            return Err(NetError::FinalActivation);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T = f32> {
    pub shape: LayerShape,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Float> Layer<T> {
    pub fn zeros(shape: LayerShape) -> Self {
        Self {
            shape,
            weights: vec![T::zero(); shape.weight_len()],
            bias: vec![T::zero(); shape.out_ch],
        }
    }

    fn kernel(&self, o: usize, i: usize) -> &[T] {
        let s = self.shape;
        let n = s.kh * s.kw;
        let start = (o * s.in_ch + i) * n;
        &self.weights[start..start + n]
    }

    /// Runs this layer on `in_ch` stacked `h x w` planes. Returns
    /// (pre-activation, post-activation) stacks of `out_ch` planes.
    fn run(&self, input: &[T], h: usize, w: usize) -> (Vec<T>, Vec<T>) {
        let s = self.shape;
        let (ry, rx) = (s.kh / 2, s.kw / 2);
        let plane = h * w;
        let padded: Vec<Vec<T>> = (0..s.in_ch)
            .map(|i| pad_plane(&input[i * plane..(i + 1) * plane], h, w, ry, rx))
            .collect();
        let mut pre = vec![T::zero(); s.out_ch * plane];
        for o in 0..s.out_ch {
            let out = &mut pre[o * plane..(o + 1) * plane];
            out.fill(self.bias[o]);
            for (i, p) in padded.iter().enumerate() {
                correlate_accumulate(p, h, w, self.kernel(o, i), s.kh, s.kw, out);
            }
        }
        let post = match s.activation {
            Activation::Linear => pre.clone(),
            Activation::Relu => pre.iter().map(|&v| v.max(T::zero())).collect(),
        };
        (pre, post)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights<T = f32> {
    pub residual: bool,
    pub layers: Vec<Layer<T>>,
}

/// Per-parameter gradients laid out like [`NetworkWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<Vec<T>>,
}

impl<T: Float> NetworkWeights<T> {
    pub fn zeros(arch: &Architecture) -> Self {
        Self {
            residual: arch.residual,
            layers: arch.layers.iter().map(|&s| Layer::zeros(s)).collect(),
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            residual: self.residual,
            layers: self.layers.iter().map(|l| l.shape).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        self.architecture().validate()?;
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.shape.weight_len() || l.bias.len() != l.shape.out_ch {
                return Err(NetError::ParamLength { layer: i + 1 });
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn cast<U: Float>(&self) -> NetworkWeights<U> {
        let conv = |v: &[T]| -> Vec<U> { v.iter().map(|&x| U::from(x).unwrap()).collect() };
        NetworkWeights {
            residual: self.residual,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    shape: l.shape,
                    weights: conv(&l.weights),
                    bias: conv(&l.bias),
                })
                .collect(),
        }
    }

    /// Output plane for a single-channel `h x w` input. Assumes validated
    /// weights.
    pub fn forward_plane(&self, input: &[T], h: usize, w: usize) -> Vec<T> {
        let mut act = input.to_vec();
        for layer in &self.layers {
            act = layer.run(&act, h, w).1;
        }
        if self.residual {
            input.iter().zip(&act).map(|(&x, &n)| x - n).collect()
        } else {
            act
        }
    }

    /// Mean squared error between the network output on `input` and
    /// `target`, with gradients for every weight and bias.
    pub fn loss_and_gradients(
        &self,
        input: &[T],
        target: &[T],
        h: usize,
        w: usize,
    ) -> (T, Gradients<T>) {
        let plane = h * w;
        // forward, keeping each layer's input and pre-activation
        let mut inputs: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        let mut pres: Vec<Vec<T>> = Vec::with_capacity(self.layers.len());
        let mut act = input.to_vec();
        for layer in &self.layers {
            let (pre, post) = layer.run(&act, h, w);
            inputs.push(std::mem::replace(&mut act, post));
            pres.push(pre);
        }
        let output: Vec<T> = if self.residual {
            input.iter().zip(&act).map(|(&x, &n)| x - n).collect()
        } else {
            act
        };

        let n = T::from(plane).unwrap();
        let two = T::one() + T::one();
        let mut loss = T::zero();
        for (&o, &t) in output.iter().zip(target) {
            let d = o - t;
            loss = loss + d * d;
        }
        loss = loss / n;

        // d loss / d (last layer post-activation)
        let sign = if self.residual { -T::one() } else { T::one() };
        let mut grad: Vec<T> = output
            .iter()
            .zip(target)
            .map(|(&o, &t)| sign * two * (o - t) / n)
            .collect();

        let mut grads = Gradients {
            weights: self
                .layers
                .iter()
                .map(|l| vec![T::zero(); l.weights.len()])
                .collect(),
            bias: self
                .layers
                .iter()
                .map(|l| vec![T::zero(); l.bias.len()])
                .collect(),
        };

        for (li, layer) in self.layers.iter().enumerate().rev() {
            let s = layer.shape;
            let (ry, rx) = (s.kh / 2, s.kw / 2);
            if s.activation == Activation::Relu {
                for (g, &p) in grad.iter_mut().zip(&pres[li]) {
                    if p <= T::zero() {
                        *g = T::zero();
                    }
                }
            }
            let layer_in = &inputs[li];
            let mut grad_in = vec![T::zero(); s.in_ch * plane];
            let ksize = s.kh * s.kw;
            for i in 0..s.in_ch {
                let padded = pad_plane(&layer_in[i * plane..(i + 1) * plane], h, w, ry, rx);
                let mut grad_padded = vec![T::zero(); padded.len()];
                for o in 0..s.out_ch {
                    let g_out = &grad[o * plane..(o + 1) * plane];
                    let start = (o * s.in_ch + i) * ksize;
                    correlate_kernel_grad(
                        &padded,
                        h,
                        w,
                        g_out,
                        s.kh,
                        s.kw,
                        &mut grads.weights[li][start..start + ksize],
                    );
                    if li > 0 {
                        correlate_input_grad(
                            g_out,
                            h,
                            w,
                            layer.kernel(o, i),
                            s.kh,
                            s.kw,
                            &mut grad_padded,
                        );
                    }
                }
                if li > 0 {
                    unpad_accumulate(
                        &grad_padded,
                        h,
                        w,
                        ry,
                        rx,
                        &mut grad_in[i * plane..(i + 1) * plane],
                    );
                }
            }
            for o in 0..s.out_ch {
                let mut acc = T::zero();
                for &g in &grad[o * plane..(o + 1) * plane] {
                    acc = acc + g;
                }
                grads.bias[li][o] = acc;
            }
            grad = grad_in;
        }
        (loss, grads)
    }

    /// Post-activation planes of the 1-based layer `index`.
    pub fn activations_at(
        &self,
        input: &[T],
        h: usize,
        w: usize,
        index: usize,
    ) -> Result<Vec<Vec<T>>, NetError> {
        if index == 0 || index > self.layers.len() {
            return Err(NetError::LayerIndex {
                index,
                count: self.layers.len(),
            });
        }
        let mut act = input.to_vec();
        for layer in &self.layers[..index] {
            act = layer.run(&act, h, w).1;
        }
        Ok(act.chunks(h * w).map(<[T]>::to_vec).collect())
    }
}

pub fn forward(w: &NetworkWeights, img: &Image) -> Result<Image, NetError> {
    w.validate()?;
    let (h, wd) = img.dims();
    Ok(Image::from_parts(h, wd, w.forward_plane(img.data(), h, wd)))
}

/// One exported feature channel: the raw activations and a min-max
/// normalized copy for viewing.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub raw: Image,
    pub normalized: Image,
    pub min: f32,
    pub max: f32,
}

pub fn dump_features(
    w: &NetworkWeights,
    img: &Image,
    layer_index: usize,
) -> Result<Vec<FeatureMap>, NetError> {
    w.validate()?;
    let (h, wd) = img.dims();
    let planes = w.activations_at(img.data(), h, wd, layer_index)?;
    Ok(planes
        .into_iter()
        .map(|p| {
            let raw = Image::from_parts(h, wd, p);
            let (min, max, _) = raw.stats();
            let span = max - min;
            let normalized = if span > 0.0 {
                raw.map(|v| (v - min) / span)
            } else {
                raw.map(|_| 0.0)
            };
            FeatureMap {
                raw,
                normalized,
                min,
                max,
            }
        })
        .collect())
}

pub fn encode_weights(w: &NetworkWeights) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * w.param_count() + 17 * w.layers.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(w.residual as u8);
    out.extend_from_slice(&(w.layers.len() as u32).to_le_bytes());
    for l in &w.layers {
        let s = l.shape;
        for d in [s.out_ch, s.in_ch, s.kh, s.kw] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.push(s.activation.code());
        for v in l.weights.iter().chain(&l.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], NetError> {
        let end = self.pos.checked_add(n).ok_or(NetError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(NetError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, NetError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, NetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, NetError> {
        let bytes = self.take(n.checked_mul(4).ok_or(NetError::Truncated)?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_weights(bytes: &[u8]) -> Result<NetworkWeights, NetError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).map_err(|_| NetError::BadMagic)? != MAGIC {
        return Err(NetError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(NetError::BadVersion(version));
    }
    let residual = r.u8()? != 0;
    let count = r.u32()? as usize;
    let mut layers = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let out_ch = r.u32()? as usize;
        let in_ch = r.u32()? as usize;
        let kh = r.u32()? as usize;
        let kw = r.u32()? as usize;
        let activation = Activation::from_code(r.u8()?)?;
        let shape = LayerShape {
            out_ch,
            in_ch,
            kh,
            kw,
            activation,
        };
        let n = out_ch
            .checked_mul(in_ch)
            .and_then(|v| v.checked_mul(kh))
            .and_then(|v| v.checked_mul(kw))
            .ok_or(NetError::Truncated)?;
        let weights = r.f32s(n)?;
        let bias = r.f32s(out_ch)?;
        layers.push(Layer {
            shape,
            weights,
            bias,
        });
    }
    if r.pos != bytes.len() {
        return Err(NetError::TrailingBytes(bytes.len() - r.pos));
    }
    let w = NetworkWeights { residual, layers };
    w.validate()?;
    Ok(w)
}

pub fn save_weights(w: &NetworkWeights, path: &Path) -> Result<(), NetError> {
    fs::write(path, encode_weights(w))?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<NetworkWeights, NetError> {
    decode_weights(&fs::read(path)?)
}

/// The tiny CNN wrapped as a [`Restorer`].
#[derive(Debug, Clone)]
pub struct TinyCnnRestorer {
    weights: NetworkWeights,
}

impl TinyCnnRestorer {
    pub fn new(weights: NetworkWeights) -> Result<Self, NetError> {
        weights.validate()?;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &NetworkWeights {
        &self.weights
    }
}

impl Restorer for TinyCnnRestorer {
    fn restore(&self, img: &Image) -> Result<Image, RestoreError> {
        let (h, w) = img.dims();
        Ok(Image::from_parts(
            h,
            w,
            self.weights.forward_plane(img.data(), h, w),
        ))
    }

    fn describe(&self) -> String {
        format!("tinycnn({} layers)", self.weights.layers.len())
    }
}
