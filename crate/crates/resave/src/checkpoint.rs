//! Binary checkpoints of a recursive fit.
//!
//! Layout (all integers `u64` and floats IEEE-754 `f64`, little endian):
//!
//! ```text
//! magic "RESAVECK" | version u32 | reserved u32
//! gamma_scale gamma_exponent c1 c2 epsilon_trunc | strict u8 | kernel u8
//! dim retained n
//! standardizer mean [dim] | whitening packed [dim(dim+1)/2]
//! pi | weights [n] | bandwidths [n] | ys [n] | xs [n·dim]
//! f [n] | g [n·dim] | G packed [n·dim(dim+1)/2]
//! ```
//!
//! Floats are stored as raw bits, so a reloaded fit continues bit for bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use resave_core::linalg::packed_len;
use resave_core::recursive::StateParts;
use resave_core::save::{RecursiveFit, Standardizer};
use resave_core::{Kernel, RecursiveState, SequencePlan, SymMatrix};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RESAVECK";
pub const VERSION: u32 = 1;

fn kernel_code(kernel: Kernel) -> u8 {
    match kernel {
        Kernel::Epanechnikov => 0,
        Kernel::Quartic4 => 1,
    }
}

fn kernel_from_code(code: u8) -> Result<Kernel> {
    match code {
        0 => Ok(Kernel::Epanechnikov),
        1 => Ok(Kernel::Quartic4),
        other => Err(Error::Checkpoint(format!("unknown kernel code {other}"))),
    }
}

struct Encoder(Vec<u8>);

impl Encoder {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        vs.iter().for_each(|v| self.f64(*v));
    }
}

struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("file is truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("count does not fit in memory".into()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap()))).collect())
    }
}

/// Serializes a fit.
pub fn to_bytes(fit: &RecursiveFit) -> Vec<u8> {
    let parts = fit.state().clone().into_parts();
    let standardizer = fit.standardizer();
    let mut e = Encoder(Vec::with_capacity(64 + 8 * parts.gg.len() * 2));
    e.0.extend_from_slice(MAGIC);
    e.u32(VERSION);
    e.u32(0);
    let plan = parts.plan;
    e.f64s(&[plan.gamma_scale, plan.gamma_exponent, plan.c1, plan.c2, plan.epsilon_trunc]);
    e.u8(plan.strict_assumptions as u8);
    e.u8(kernel_code(parts.kernel));
    e.u64(parts.dim as u64);
    e.u64(fit.retained() as u64);
    e.u64(parts.ys.len() as u64);
    e.f64s(&standardizer.mean);
    e.f64s(standardizer.whitening.packed());
    e.f64(parts.pi);
    for block in [&parts.weights, &parts.bandwidths, &parts.ys, &parts.xs, &parts.f, &parts.g, &parts.gg] {
        e.f64s(block);
    }
    e.0
}

/// Restores a fit written by [`to_bytes`].
pub fn from_bytes(bytes: &[u8]) -> Result<RecursiveFit> {
    let mut d = Decoder { bytes, pos: 0 };
    if d.take(MAGIC.len())? != MAGIC {
        return Err(Error::Checkpoint("not a resave checkpoint".into()));
    }
    let version = d.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version} (expected {VERSION})")));
    }
    d.u32()?;
    let plan = SequencePlan {
        gamma_scale: d.f64()?,
        gamma_exponent: d.f64()?,
        c1: d.f64()?,
        c2: d.f64()?,
        epsilon_trunc: d.f64()?,
        strict_assumptions: d.u8()? != 0,
    };
    let kernel = kernel_from_code(d.u8()?)?;
    let dim = d.usize()?;
    let retained = d.usize()?;
    let n = d.usize()?;
    let t = packed_len(dim);
    let mean = d.f64s(dim)?;
    let whitening = SymMatrix::from_packed(dim, d.f64s(t)?)?;
    let pi = d.f64()?;
    let parts = StateParts {
        dim,
        plan,
        kernel,
        pi,
        weights: d.f64s(n)?,
        bandwidths: d.f64s(n)?,
        ys: d.f64s(n)?,
        xs: d.f64s(n * dim)?,
        f: d.f64s(n)?,
        g: d.f64s(n * dim)?,
        gg: d.f64s(n * t)?,
    };
    if d.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes after checkpoint".into()));
    }
    let state = RecursiveState::from_parts(parts)?;
    Ok(RecursiveFit::from_state(state, Standardizer { mean, whitening }, retained)?)
}

pub fn write_checkpoint(path: impl AsRef<Path>, fit: &RecursiveFit) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&to_bytes(fit)).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<RecursiveFit> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
