//! Model container: a directory holding `manifest.txt` plus one NDT1 file
//! per weight bank and bias vector.
//!
//! ```text
//! format = ndpnn-model-1
//! classes = 2
//! input_shape = 1x9x35x35
//! seed = 7
//! layer 0 polyconv rank=3 degree=3 kernel=3x3x3 in=1 out=4 activation=relu
//! layer 1 maxpool window=1x2x2
//! layer 2 flatten
//! layer 3 dense in=1960 out=2 activation=softmax
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{load, save, Tensor};

use super::dense::Dense;
use super::layer::PolyConvLayer;
use super::model::{Layer, ModelSpec};
use super::pool::MaxPool;

pub const MANIFEST: &str = "manifest.txt";
const FORMAT: &str = "ndpnn-model-1";

fn dims(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split('x')
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| bad(format!("bad extents '{s}'")))
        })
        .collect()
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn vector(v: &[f32]) -> Result<Tensor<f32>> {
    Tensor::new(vec![v.len()], v.to_vec())
}

pub fn save_model(model: &ModelSpec<f32>, dir: &Path) -> Result<()> {
    model.validate()?;
    fs::create_dir_all(dir)?;
    let mut m = String::new();
    let _ = writeln!(m, "format = {FORMAT}");
    let _ = writeln!(m, "classes = {}", model.classes);
    let _ = writeln!(m, "input_shape = {}", dims(&model.input_shape));
    let _ = writeln!(m, "seed = {}", model.seed);
    for (i, layer) in model.layers.iter().enumerate() {
        match layer {
            Layer::PolyConv(l) => {
                let _ = writeln!(
                    m,
                    "layer {i} polyconv rank={} degree={} kernel={} in={} out={} activation={}",
                    l.rank,
                    l.degree(),
                    dims(&l.kernel),
                    l.in_channels,
                    l.out_channels,
                    l.activation
                );
                for (d, w) in l.weights.iter().enumerate() {
                    save(w, dir.join(format!("layer{i}_w{}.ndt", d + 1)))?;
                }
                save(&vector(&l.bias)?, dir.join(format!("layer{i}_bias.ndt")))?;
            }
            Layer::MaxPool(p) => {
                let _ = writeln!(m, "layer {i} maxpool window={}", dims(&p.window));
            }
            Layer::Flatten => {
                let _ = writeln!(m, "layer {i} flatten");
            }
            Layer::Dense(d) => {
                let _ = writeln!(
                    m,
                    "layer {i} dense in={} out={} activation={}",
                    d.inputs, d.outputs, d.activation
                );
                save(&d.weights, dir.join(format!("layer{i}_w.ndt")))?;
                save(&vector(&d.bias)?, dir.join(format!("layer{i}_bias.ndt")))?;
            }
        }
    }
    fs::write(dir.join(MANIFEST), m)?;
    Ok(())
}

fn field<'a>(kv: &'a HashMap<&str, &str>, key: &str, line: &str) -> Result<&'a str> {
    kv.get(key)
        .copied()
        .ok_or_else(|| bad(format!("missing '{key}' in '{line}'")))
}

fn num<T: std::str::FromStr>(s: &str, line: &str) -> Result<T> {
    s.parse()
        .map_err(|_| bad(format!("bad number '{s}' in '{line}'")))
}

fn load_tensor(path: &Path) -> Result<Tensor<f32>> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    load(path)
}

fn load_vector(path: &Path, len: usize) -> Result<Vec<f32>> {
    let t = load_tensor(path)?;
    if t.shape() != [len] {
        return Err(bad(format!(
            "{} has shape {:?}, expected [{len}]",
            path.display(),
            t.shape()
        )));
    }
    Ok(t.into_data())
}

pub fn load_model(dir: &Path) -> Result<ModelSpec<f32>> {
    let mpath = dir.join(MANIFEST);
    if !mpath.exists() {
        return Err(Error::MissingArtifact(mpath.display().to_string()));
    }
    let text = fs::read_to_string(&mpath)?;
    let mut header = HashMap::new();
    let mut layers = Vec::new();
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        if let Some(rest) = line.strip_prefix("layer ") {
            let mut tok = rest.split_whitespace();
            let idx: usize = num(tok.next().unwrap_or(""), line)?;
            if idx != layers.len() {
                return Err(bad(format!("layer {idx} out of order")));
            }
            let kind = tok
                .next()
                .ok_or_else(|| bad(format!("missing layer type in '{line}'")))?;
            let kv: HashMap<&str, &str> = tok.filter_map(|t| t.split_once('=')).collect();
            let layer = match kind {
                "polyconv" => {
                    let rank = num(field(&kv, "rank", line)?, line)?;
                    let degree: usize = num(field(&kv, "degree", line)?, line)?;
                    let kernel = parse_dims(field(&kv, "kernel", line)?)?;
                    let inc = num(field(&kv, "in", line)?, line)?;
                    let outc = num(field(&kv, "out", line)?, line)?;
                    let act = field(&kv, "activation", line)?.parse()?;
                    let mut l = PolyConvLayer::zeros(rank, &kernel, inc, outc, degree, act)
                        .map_err(|e| bad(e.to_string()))?;
                    for d in 0..degree {
                        l.weights[d] =
                            load_tensor(&dir.join(format!("layer{idx}_w{}.ndt", d + 1)))?;
                    }
                    l.bias = load_vector(&dir.join(format!("layer{idx}_bias.ndt")), outc)?;
                    l.validate().map_err(|e| bad(e.to_string()))?;
                    Layer::PolyConv(l)
                }
                "maxpool" => {
                    Layer::MaxPool(MaxPool::new(parse_dims(field(&kv, "window", line)?)?)?)
                }
                "flatten" => Layer::Flatten,
                "dense" => {
                    let inputs = num(field(&kv, "in", line)?, line)?;
                    let outputs = num(field(&kv, "out", line)?, line)?;
                    let mut d =
                        Dense::zeros(inputs, outputs, field(&kv, "activation", line)?.parse()?)?;
                    d.weights = load_tensor(&dir.join(format!("layer{idx}_w.ndt")))?;
                    d.bias = load_vector(&dir.join(format!("layer{idx}_bias.ndt")), outputs)?;
                    d.validate().map_err(|e| bad(e.to_string()))?;
                    Layer::Dense(d)
                }
                other => return Err(bad(format!("unknown layer type '{other}'"))),
            };
            layers.push(layer);
        } else if let Some((k, v)) = line.split_once('=') {
            header.insert(k.trim().to_string(), v.trim().to_string());
        } else {
            return Err(bad(format!("unreadable manifest line '{line}'")));
        }
    }
    let get = |k: &str| {
        header
            .get(k)
            .ok_or_else(|| bad(format!("manifest lacks '{k}'")))
    };
    if get("format")? != FORMAT {
        return Err(bad(format!(
            "unsupported model format '{}'",
            get("format")?
        )));
    }
    let classes = num(get("classes")?, "classes")?;
    let input_shape = parse_dims(get("input_shape")?)?;
    let seed = num(get("seed")?, "seed")?;
    ModelSpec::new(layers, classes, input_shape, seed).map_err(|e| bad(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::init::Architecture;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Architecture::desk(2)
            .build(&[1, 12, 12], 3, Some(&[0.2, 0.3, 0.5]), 4)
            .unwrap();
        save_model(&m, dir.path()).unwrap();
        assert_eq!(load_model(dir.path()).unwrap(), m);
    }

    #[test]
    fn missing_pieces() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_model(dir.path()),
            Err(Error::MissingArtifact(_))
        ));
        let m = Architecture::desk(1).build(&[1, 20], 2, None, 0).unwrap();
        save_model(&m, dir.path()).unwrap();
        fs::remove_file(dir.path().join("layer0_w2.ndt")).unwrap();
        assert!(matches!(
            load_model(dir.path()),
            Err(Error::MissingArtifact(_))
        ));
    }
}
