//! Little-endian model files.
//!
//! Layout: 8-byte magic, `u32` version, `u32` L, `u32` d_s, `f64` epsilon,
//! `f64` coordinate scale, `f64` dropout rate, `u32` activation, then each
//! weight matrix row-major as `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{layer_shapes, Activation, GcnModel};
use crate::{Error, Result};

pub const MODEL_MAGIC: [u8; 8] = *b"UAVGCNWT";
pub const MODEL_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 * 3 + 8 * 3 + 4;

/// Exact byte length of a model file with these dimensions.
pub fn model_file_len(num_layers: usize, hidden_dim: usize) -> usize {
    let weights: usize = layer_shapes(num_layers, hidden_dim).iter().map(|(r, c)| r * c).sum();
    HEADER_LEN + 8 * weights
}

pub fn save_model(model: &GcnModel, path: impl AsRef<Path>) -> Result<()> {
    model.validate()?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&MODEL_MAGIC)?;
    out.write_all(&MODEL_VERSION.to_le_bytes())?;
    out.write_all(&(model.num_layers() as u32).to_le_bytes())?;
    out.write_all(&(model.hidden_dim as u32).to_le_bytes())?;
    out.write_all(&model.epsilon.to_le_bytes())?;
    out.write_all(&model.coordinate_scale.to_le_bytes())?;
    out.write_all(&model.dropout_rate.to_le_bytes())?;
    let activation: u32 = match model.activation {
        Activation::LeakyRelu => 0,
        Activation::Identity => 1,
    };
    out.write_all(&activation.to_le_bytes())?;
    for w in &model.layers {
        for r in 0..w.nrows() {
            for c in 0..w.ncols() {
                out.write_all(&w[(r, c)].to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn read_array<const N: usize>(input: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("file is truncated".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn read_u32(input: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(input)?))
}

fn read_f64(input: &mut impl Read) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(input)?))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GcnModel> {
    let file = File::open(path)?;
    let actual_len = file.metadata()?.len();
    let mut input = BufReader::new(file);
    if read_array::<8>(&mut input)? != MODEL_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let num_layers = read_u32(&mut input)? as usize;
    let hidden_dim = read_u32(&mut input)? as usize;
    if num_layers < 2 || hidden_dim == 0 {
        return Err(Error::Format(format!("invalid dimensions L={num_layers}, d_s={hidden_dim}")));
    }
    let expected_len = model_file_len(num_layers, hidden_dim) as u64;
    if actual_len != expected_len {
        return Err(Error::Format(format!(
            "L={num_layers}, d_s={hidden_dim} needs {expected_len} bytes, file has {actual_len}"
        )));
    }
    let epsilon = read_f64(&mut input)?;
    let coordinate_scale = read_f64(&mut input)?;
    let dropout_rate = read_f64(&mut input)?;
    let activation = match read_u32(&mut input)? {
        0 => Activation::LeakyRelu,
        1 => Activation::Identity,
        other => return Err(Error::Format(format!("unknown activation tag {other}"))),
    };
    let mut layers = Vec::with_capacity(num_layers);
    for (rows, cols) in layer_shapes(num_layers, hidden_dim) {
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            values.push(read_f64(&mut input)?);
        }
        layers.push(DMatrix::from_row_slice(rows, cols, &values));
    }
    let model = GcnModel { layers, hidden_dim, dropout_rate, epsilon, coordinate_scale, activation };
    model.validate().map_err(|e| Error::Format(e.to_string()))?;
    Ok(model)
}

/// Loads a model and checks it has the given depth and width.
pub fn load_model_expecting(path: impl AsRef<Path>, num_layers: usize, hidden_dim: usize) -> Result<GcnModel> {
    let model = load_model(path)?;
    if model.num_layers() != num_layers || model.hidden_dim != hidden_dim {
        return Err(Error::Format(format!(
            "expected L={num_layers}, d_s={hidden_dim}; file has L={}, d_s={}",
            model.num_layers(),
            model.hidden_dim
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let model = GcnModel::new(3, 7, 1.0 / 60.0, 550.0, 11).unwrap();
        save_model(&model, &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, model_file_len(3, 7));
        assert_eq!(load_model(&path).unwrap(), model);
    }

    #[test]
    fn dimension_and_version_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&GcnModel::new(2, 4, 0.1, 100.0, 0).unwrap(), &path).unwrap();
        assert!(matches!(load_model_expecting(&path, 2, 5), Err(Error::Format(_))));

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[16..20].copy_from_slice(&5u32.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format(_))));

        bytes[8..12].copy_from_slice(&9u32.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Format(_))));
    }
}
