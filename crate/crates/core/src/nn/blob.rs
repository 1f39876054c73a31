//! Binary model format.
//!
//! ```text
//! "BALM1"                                   magic + version
//! u32 in_channels, u32 window_len, u32 classes, f32 dropout
//! f32 x N                                   parameters in ParamSet order
//! u8 placement, u64 adam step, f32 x N (m), f32 x N (v)
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use super::{AdamState, Arch, DropoutPlacement, Network, ParamSet};
use crate::{Error, Result};

pub const MAGIC: &[u8; 5] = b"BALM1";
const FAMILY: &[u8; 4] = b"BALM";

pub fn save(net: &Network<f32>) -> Vec<u8> {
    let arch = net.arch();
    let n = net.params().len();
    let mut out = Vec::with_capacity(5 + 16 + 4 * n * 3 + 9);
    out.extend_from_slice(MAGIC);
    for v in [arch.in_channels, arch.window_len, arch.classes] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&arch.dropout.to_le_bytes());
    write_set(&mut out, net.params());
    out.push(arch.placement.code());
    out.extend_from_slice(&net.optimizer().step.to_le_bytes());
    write_set(&mut out, &net.optimizer().m);
    write_set(&mut out, &net.optimizer().v);
    out
}

fn write_set(out: &mut Vec<u8>, set: &ParamSet<f32>) {
    for x in set.tensors().flatten() {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Load(format!("truncated blob: {what} needs {n} bytes at offset {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn set(&mut self, arch: &Arch, what: &str) -> Result<ParamSet<f32>> {
        let mut set = ParamSet::zeros(arch);
        for tensor in set.tensors_mut() {
            for x in tensor.iter_mut() {
                *x = self.f32(what)?;
            }
        }
        Ok(set)
    }
}

pub fn load(bytes: &[u8]) -> Result<Network<f32>> {
    if bytes.len() < MAGIC.len() || &bytes[..4] != FAMILY {
        return Err(Error::Load("missing BALM magic".into()));
    }
    if bytes[4] != MAGIC[4] {
        return Err(Error::Load(format!(
            "unsupported format version `{}`, expected `{}`",
            bytes[4] as char, MAGIC[4] as char
        )));
    }
    let mut r = Reader { bytes, pos: 5 };
    let in_channels = r.u32("in_channels")? as usize;
    let window_len = r.u32("window_len")? as usize;
    let classes = r.u32("classes")? as usize;
    let dropout = r.f32("dropout")?;
    let mut arch = Arch {
        in_channels,
        window_len,
        classes,
        dropout,
        placement: DropoutPlacement::BeforeOutput,
    };
    arch.validate()
        .map_err(|e| Error::Load(format!("bad architecture descriptor: {e}")))?;
    let params = r.set(&arch, "parameters")?;
    let code = r.take(1, "dropout placement")?[0];
    arch.placement = DropoutPlacement::from_code(code)
        .ok_or_else(|| Error::Load(format!("unknown dropout placement code {code}")))?;
    let step = u64::from_le_bytes(r.take(8, "adam step")?.try_into().unwrap());
    let m = r.set(&arch, "adam first moment")?;
    let v = r.set(&arch, "adam second moment")?;
    if r.pos != bytes.len() {
        return Err(Error::Load(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    if !params.all_finite() || !m.all_finite() || !v.all_finite() {
        return Err(Error::Load("blob contains non-finite values".into()));
    }
    Network::from_parts(arch, params, AdamState { m, v, step }).map_err(|e| Error::Load(e.to_string()))
}

pub fn save_file(net: &Network<f32>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, save(net))?;
    Ok(())
}

pub fn load_file(path: impl AsRef<Path>) -> Result<Network<f32>> {
    load(&std::fs::read(path)?)
}
