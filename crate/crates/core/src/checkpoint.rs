//! Versioned little-endian binary checkpoints of networks, Adam state and
//! complete training states.
//!
//! Layout: `SGAN`, format version (u32), a model header (supervised width,
//! unsupervised width, feature tap, class names `DNHRU|KUF`), the
//! discriminator base, both heads, the generator, both Adam states, then the
//! step counter, RNG position, epoch order and loss history. Every `f64` is
//! stored as its raw bits, so a round trip is bit-exact.

use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{ClassLabel, Discriminator, Generator, ModelRng, UnsupLabel};
use crate::nn::{Activation, AdamState, BatchNorm, DenseLayer, Layer, Sequential};
use crate::trainer::{HistoryEntry, LossHistory, Phase, TrainState};

pub const MAGIC: [u8; 4] = *b"SGAN";
pub const VERSION: u32 = 1;
pub const CLASS_NAMES: &str = "DNHRU|KUF";

const TERMS: [&str; 10] = [
    "sup_positive",
    "sup_negative",
    "sup_total",
    "unsup_real",
    "unsup_fake",
    "unsup_total",
    "gen_pull_away",
    "gen_low_density",
    "gen_feature_matching",
    "gen_total",
];

const PHASES: [Phase; 4] = [Phase::Supervised, Phase::UnsupReal, Phase::UnsupFake, Phase::Generator];

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u128(&mut self, v: u128) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.u64(v.len() as u64);
        self.buf.extend_from_slice(v);
    }

    pub fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for x in v {
            self.f64(*x);
        }
    }

    fn len32(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("dimension fits in u32"));
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Checkpoint("truncated"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().expect("16 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn count(&mut self, elem: usize) -> Result<usize> {
        let n = usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("length overflow"))?;
        if n.saturating_mul(elem) > self.buf.len() {
            return Err(Error::Checkpoint("length exceeds remaining data"));
        }
        Ok(n)
    }

    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.count(1)?;
        self.take(n)
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.count(8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::Checkpoint("trailing bytes"))
        }
    }
}

fn write_dense(w: &mut Writer, d: &DenseLayer) {
    w.u8(d.activation.tag());
    w.f64(d.activation.slope());
    w.len32(d.weights.rows());
    w.len32(d.weights.cols());
    for x in d.weights.as_slice() {
        w.f64(*x);
    }
    w.f64s(&d.bias);
}

fn read_dense(r: &mut Reader<'_>) -> Result<DenseLayer> {
    let tag = r.u8()?;
    let slope = r.f64()?;
    let activation = Activation::from_tag(tag, slope).ok_or(Error::Checkpoint("unknown activation"))?;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let n = rows.checked_mul(cols).ok_or(Error::Checkpoint("shape overflow"))?;
    if n.saturating_mul(8) > r.buf.len() {
        return Err(Error::Checkpoint("truncated"));
    }
    let data = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let bias = r.f64s()?;
    if bias.len() != cols {
        return Err(Error::Checkpoint("bias width does not match weights"));
    }
    Ok(DenseLayer {
        weights: Matrix::from_vec(rows, cols, data)?,
        bias,
        activation,
    })
}

fn write_batchnorm(w: &mut Writer, b: &BatchNorm) {
    w.f64(b.momentum);
    w.f64(b.epsilon);
    for v in [&b.gamma, &b.beta, &b.running_mean, &b.running_var] {
        w.f64s(v);
    }
}

fn read_batchnorm(r: &mut Reader<'_>) -> Result<BatchNorm> {
    let momentum = r.f64()?;
    let epsilon = r.f64()?;
    let gamma = r.f64s()?;
    let beta = r.f64s()?;
    let running_mean = r.f64s()?;
    let running_var = r.f64s()?;
    let n = gamma.len();
    if beta.len() != n || running_mean.len() != n || running_var.len() != n {
        return Err(Error::Checkpoint("batch-norm vectors differ in width"));
    }
    Ok(BatchNorm {
        gamma,
        beta,
        running_mean,
        running_var,
        momentum,
        epsilon,
    })
}

pub fn write_sequential(w: &mut Writer, net: &Sequential) {
    w.len32(net.layers.len());
    for l in &net.layers {
        match l {
            Layer::Dense(d) => {
                w.u8(0);
                write_dense(w, d);
            }
            Layer::BatchNorm(b) => {
                w.u8(1);
                write_batchnorm(w, b);
            }
        }
    }
}

pub fn read_sequential(r: &mut Reader<'_>) -> Result<Sequential> {
    let n = r.u32()? as usize;
    let mut layers = Vec::new();
    for _ in 0..n {
        layers.push(match r.u8()? {
            0 => Layer::Dense(read_dense(r)?),
            1 => Layer::BatchNorm(read_batchnorm(r)?),
            _ => return Err(Error::Checkpoint("unknown layer kind")),
        });
    }
    for pair in layers.windows(2) {
        let input = match &pair[1] {
            Layer::Dense(d) => d.inputs(),
            Layer::BatchNorm(b) => b.width(),
        };
        if pair[0].output_width() != input {
            return Err(Error::Checkpoint("adjacent layer widths disagree"));
        }
    }
    Ok(Sequential::new(layers))
}

pub fn write_adam(w: &mut Writer, a: &AdamState) {
    w.f64(a.beta1);
    w.f64(a.beta2);
    w.f64(a.epsilon);
    w.u64(a.step);
    w.len32(a.first_moment.len());
    for m in a.first_moment.iter().chain(&a.second_moment) {
        w.f64s(m);
    }
}

pub fn read_adam(r: &mut Reader<'_>) -> Result<AdamState> {
    let beta1 = r.f64()?;
    let beta2 = r.f64()?;
    let epsilon = r.f64()?;
    let step = r.u64()?;
    let n = r.u32()? as usize;
    let first_moment = (0..n).map(|_| r.f64s()).collect::<Result<Vec<_>>>()?;
    let second_moment = (0..n).map(|_| r.f64s()).collect::<Result<Vec<_>>>()?;
    Ok(AdamState {
        beta1,
        beta2,
        epsilon,
        step,
        first_moment,
        second_moment,
    })
}

fn write_model(w: &mut Writer, disc: &Discriminator, gen: &Generator) {
    w.len32(ClassLabel::COUNT);
    w.len32(UnsupLabel::COUNT);
    w.len32(disc.feature_tap);
    w.bytes(CLASS_NAMES.as_bytes());
    write_sequential(w, &disc.base);
    write_dense(w, &disc.sup_head);
    write_dense(w, &disc.unsup_head);
    write_sequential(w, &gen.net);
}

fn read_model(r: &mut Reader<'_>) -> Result<(Discriminator, Generator)> {
    if r.u32()? as usize != ClassLabel::COUNT || r.u32()? as usize != UnsupLabel::COUNT {
        return Err(Error::Checkpoint("head widths differ from this build"));
    }
    let feature_tap = r.u32()? as usize;
    if r.bytes()? != CLASS_NAMES.as_bytes() {
        return Err(Error::Checkpoint("class ordering differs from this build"));
    }
    let disc = Discriminator {
        base: read_sequential(r)?,
        sup_head: read_dense(r)?,
        unsup_head: read_dense(r)?,
        feature_tap,
    };
    disc.validate().map_err(|_| Error::Checkpoint("inconsistent discriminator"))?;
    let gen = Generator { net: read_sequential(r)? };
    gen.validate().map_err(|_| Error::Checkpoint("inconsistent generator"))?;
    Ok((disc, gen))
}

fn header(w: &mut Writer) {
    for b in MAGIC {
        w.u8(b);
    }
    w.u32(VERSION);
}

fn check_header(r: &mut Reader<'_>) -> Result<()> {
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic"));
    }
    if r.u32()? != VERSION {
        return Err(Error::Checkpoint("unsupported format version"));
    }
    Ok(())
}

pub fn encode_train_state(s: &TrainState) -> Vec<u8> {
    let mut w = Writer::new();
    header(&mut w);
    write_model(&mut w, &s.disc, &s.gen);
    write_adam(&mut w, &s.adam_disc);
    write_adam(&mut w, &s.adam_gen);
    w.u64(s.step);
    for b in s.rng.get_seed() {
        w.u8(b);
    }
    w.u64(s.rng.get_stream());
    w.u128(s.rng.get_word_pos());
    w.u64(s.epoch_order.len() as u64);
    for i in &s.epoch_order {
        w.u64(*i as u64);
    }
    w.u64(s.epoch_cursor as u64);
    w.u64(s.history.entries.len() as u64);
    for e in &s.history.entries {
        w.u64(e.step);
        w.u8(PHASES.iter().position(|p| *p == e.phase).expect("known phase") as u8);
        w.u8(TERMS.iter().position(|t| *t == e.term).expect("known term") as u8);
        w.f64(e.value);
    }
    w.into_bytes()
}

pub fn decode_train_state(bytes: &[u8]) -> Result<TrainState> {
    let mut r = Reader::new(bytes);
    check_header(&mut r)?;
    let (disc, gen) = read_model(&mut r)?;
    let adam_disc = read_adam(&mut r)?;
    let adam_gen = read_adam(&mut r)?;
    let sizes = |a: &AdamState| a.first_moment.iter().map(Vec::len).collect::<Vec<_>>();
    if sizes(&adam_disc) != disc.param_sizes() || sizes(&adam_gen) != gen.param_sizes() {
        return Err(Error::Checkpoint("optimizer state does not match the model"));
    }
    let step = r.u64()?;
    let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let mut rng = ModelRng::from_seed(seed);
    rng.set_stream(r.u64()?);
    rng.set_word_pos(r.u128()?);
    let n = r.count(8)?;
    let epoch_order = (0..n).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let epoch_cursor = r.u64()? as usize;
    let n = r.count(18)?;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let step = r.u64()?;
        let phase = *PHASES.get(r.u8()? as usize).ok_or(Error::Checkpoint("unknown phase"))?;
        let term = *TERMS.get(r.u8()? as usize).ok_or(Error::Checkpoint("unknown loss term"))?;
        entries.push(HistoryEntry {
            step,
            phase,
            term,
            value: r.f64()?,
        });
    }
    r.finish()?;
    Ok(TrainState {
        disc,
        gen,
        adam_disc,
        adam_gen,
        step,
        rng,
        history: LossHistory { entries },
        epoch_order,
        epoch_cursor,
    })
}

/// Human-readable one-line summary of a checkpoint header.
pub fn describe_header(bytes: &[u8]) -> Result<String> {
    let mut r = Reader::new(bytes);
    check_header(&mut r)?;
    let sup = r.u32()?;
    let unsup = r.u32()?;
    let tap = r.u32()?;
    let names = core::str::from_utf8(r.bytes()?).map_err(|_| Error::Checkpoint("class names not utf-8"))?;
    Ok(alloc::format!("version {VERSION}, heads {sup}/{unsup}, tap {tap}, classes {names}"))
}
