//! Versioned binary model checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "SSNN"            magic
//! u16               format version (1)
//! u16               flags: bit0 hard sigmoid in cell paths
//! u32 × 6           input_dim, lstm1_units, lstm2_units, dense_units, dense_layers, classes
//! f64 × n           lstm1 W, U, b; lstm2 W, U, b; each hidden dense W, b; output W, b
//! u8                1 if optimizer state follows, else 0
//! f64 × 3           learning_rate, rho, epsilon          (optional)
//! f64 × n           RMSprop accumulators, same order     (optional)
//! ```

use std::fs;
use std::path::Path;

use super::model::{ModelParams, ModelShape, ParamSet};
use super::optim::{OptState, RmspropHyper};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SSNN";
const VERSION: u16 = 1;

pub fn encode_checkpoint(p: &ModelParams, opt: Option<&OptState>) -> Vec<u8> {
    let shape = p.shape();
    let mut out = Vec::with_capacity(64 + 16 * p.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&u16::from(shape.hard_sigmoid_everywhere).to_le_bytes());
    for d in
        [shape.input_dim, shape.lstm1_units, shape.lstm2_units, shape.dense_units, shape.dense_layers, shape.classes]
    {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let put = |out: &mut Vec<u8>, set: &ModelParams| {
        for t in set.tensors() {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    };
    put(&mut out, p);
    match opt {
        Some(o) => {
            out.push(1);
            for v in [o.hyper.learning_rate, o.hyper.rho, o.hyper.epsilon] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            put(&mut out, &o.v);
        }
        None => out.push(0),
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Checkpoint("truncated".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn fill(&mut self, set: &mut ModelParams) -> Result<()> {
        for t in set.tensors_mut() {
            for v in t.iter_mut() {
                *v = self.f64()?;
            }
        }
        Ok(())
    }
}

/// Parses a checkpoint. With `expected`, any dimension mismatch is rejected.
pub fn decode_checkpoint(bytes: &[u8], expected: Option<&ModelShape>) -> Result<(ModelParams, Option<OptState>)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let flags = r.u16()?;
    if flags & !1 != 0 {
        return Err(Error::Checkpoint(format!("unknown flags {flags:#x}")));
    }
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let shape = ModelShape {
        input_dim: dims[0],
        lstm1_units: dims[1],
        lstm2_units: dims[2],
        dense_units: dims[3],
        dense_layers: dims[4],
        classes: dims[5],
        hard_sigmoid_everywhere: flags & 1 == 1,
    };
    shape.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
    if let Some(want) = expected {
        if *want != shape {
            return Err(Error::Checkpoint(format!("dimension mismatch: file has {shape:?}, expected {want:?}")));
        }
    }
    let mut p = ModelParams::zeros(&shape);
    r.fill(&mut p)?;
    let opt = match r.take(1)?[0] {
        0 => None,
        1 => {
            let hyper = RmspropHyper { learning_rate: r.f64()?, rho: r.f64()?, epsilon: r.f64()? };
            let mut o = OptState::new(&p, hyper);
            r.fill(&mut o.v)?;
            Some(o)
        }
        other => return Err(Error::Checkpoint(format!("bad optimizer marker {other}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok((p, opt))
}

pub fn save_checkpoint(path: &Path, p: &ModelParams, opt: Option<&OptState>) -> Result<()> {
    fs::write(path, encode_checkpoint(p, opt)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path, expected: Option<&ModelShape>) -> Result<(ModelParams, Option<OptState>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, expected)
}
