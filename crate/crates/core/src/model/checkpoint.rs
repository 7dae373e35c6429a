//! Plain-text checkpoints.
//!
//! ```text
//! qroute-checkpoint v1
//! kind = "dgcnn"
//! nodes = 9
//! ...
//! end-architecture
//! tensor gconv.0.weight 23 128
//! 1.2e-1 -3.4e-2 ...
//! ```
//!
//! Values are written with the shortest round-trip representation, so a
//! save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Architecture, QModel};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "qroute-checkpoint v1";
const ARCH_END: &str = "end-architecture";

pub fn write_checkpoint(model: &QModel) -> String {
    let mut out = String::new();
    out.push_str(CHECKPOINT_MAGIC);
    out.push('\n');
    let arch = toml::to_string(&model.architecture()).expect("architecture serializes");
    out.push_str(&arch);
    if !arch.ends_with('\n') {
        out.push('\n');
    }
    out.push_str(ARCH_END);
    out.push('\n');
    for (name, t) in model.param_names().iter().zip(model.params()) {
        let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "tensor {name} {}", dims.join(" "));
        let mut first = true;
        for v in t.data() {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v:e}");
        }
        out.push('\n');
    }
    out
}

pub fn read_checkpoint(text: &str) -> Result<QModel> {
    let bad = |msg: String| Error::Checkpoint(msg);
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim_end() == CHECKPOINT_MAGIC => {}
        other => return Err(bad(format!("expected header {CHECKPOINT_MAGIC:?}, found {other:?}"))),
    }
    let mut arch_text = String::new();
    loop {
        match lines.next() {
            Some(l) if l.trim_end() == ARCH_END => break,
            Some(l) => {
                arch_text.push_str(l);
                arch_text.push('\n');
            }
            None => return Err(bad("architecture block is not terminated".into())),
        }
    }
    let arch: Architecture = toml::from_str(&arch_text).map_err(|e| bad(format!("architecture: {e}")))?;
    validate_architecture(&arch)?;
    let mut model = QModel::new(&arch, 0);
    let names = model.param_names();
    for (name, param) in names.iter().zip(model.params_mut()) {
        let header = lines.next().ok_or_else(|| bad(format!("missing tensor {name}")))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("tensor") {
            return Err(bad(format!("expected a tensor header, found {header:?}")));
        }
        let found = parts.next().unwrap_or("");
        if found != name {
            return Err(bad(format!("expected tensor {name}, found {found}")));
        }
        let dims: Vec<usize> = parts
            .map(|d| d.parse().map_err(|_| bad(format!("bad dimension {d:?} in {name}"))))
            .collect::<Result<_>>()?;
        if dims != param.shape() {
            return Err(bad(format!("tensor {name} has shape {dims:?}, architecture needs {:?}", param.shape())));
        }
        let values = lines.next().ok_or_else(|| bad(format!("missing values of {name}")))?;
        let mut n = 0;
        let data = param.data_mut();
        for tok in values.split_whitespace() {
            if n == data.len() {
                return Err(bad(format!("too many values in {name}")));
            }
            data[n] = tok.parse().map_err(|_| bad(format!("bad value {tok:?} in {name}")))?;
            n += 1;
        }
        if n != data.len() {
            return Err(bad(format!("tensor {name} has {n} values, expected {}", data.len())));
        }
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(bad(format!("unexpected trailing content {extra:?}")));
    }
    Ok(model)
}

fn validate_architecture(arch: &Architecture) -> Result<()> {
    let bad = |msg: &str| Err(Error::Checkpoint(msg.into()));
    match arch {
        Architecture::Dgcnn(c) => {
            if c.gconv.is_empty() || c.gconv.contains(&0) || c.k == 0 || c.pool_width == 0 || c.nodes < c.pool_width {
                return bad("inconsistent dgcnn architecture");
            }
            if c.conv.contains(&0) || c.conv2_width == 0 || c.dense.contains(&0) {
                return bad("inconsistent dgcnn architecture");
            }
        }
        Architecture::Mlp(c) => {
            if c.nodes == 0 || c.k == 0 || c.hidden.contains(&0) {
                return bad("inconsistent mlp architecture");
            }
        }
    }
    Ok(())
}

pub fn save_checkpoint(model: &QModel, path: &Path) -> Result<()> {
    fs::write(path, write_checkpoint(model))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<QModel> {
    read_checkpoint(&fs::read_to_string(path)?)
}
