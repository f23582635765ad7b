//! Q-network weight persistence.
//!
//! Little-endian binary: magic `DQNW`, version `u32 = 1`, channel count
//! `u32`, then each tensor in fixed order (`conv_w`, `conv_b`, `fc1_w`,
//! `fc1_b`, `fc2_w`, `fc2_b`, `out_w`, `out_b`) as rank `u32`, one `u32` per
//! dimension, and `f32` values row-major. The loader reconstructs the
//! standard stride-2 architecture from the stored shapes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::network::{Network, NetworkConfig};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"DQNW";
const VERSION: u32 = 1;

pub fn save_weights(net: &Network<f32>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(net.config.channels as u32).to_le_bytes())?;

    let cfg = &net.config;
    let dims: [Vec<u32>; 8] = [
        vec![cfg.conv_filters as u32, cfg.channels as u32, cfg.conv_kernel as u32, cfg.conv_kernel as u32],
        vec![cfg.conv_filters as u32],
        vec![cfg.fc1 as u32, cfg.flat() as u32],
        vec![cfg.fc1 as u32],
        vec![cfg.fc2 as u32, cfg.fc1 as u32],
        vec![cfg.fc2 as u32],
        vec![cfg.outputs as u32, cfg.fc2 as u32],
        vec![cfg.outputs as u32],
    ];
    for (dim, values) in dims.iter().zip(net.param_slices()) {
        w.write_all(&(dim.len() as u32).to_le_bytes())?;
        for d in dim {
            w.write_all(&d.to_le_bytes())?;
        }
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<Network<f32>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad weights magic, expected DQNW".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported weights version {version}")));
    }
    let channels = read_u32(&mut r)? as usize;

    let mut tensors: Vec<(Vec<usize>, Vec<f32>)> = Vec::with_capacity(8);
    for _ in 0..8 {
        let rank = read_u32(&mut r)? as usize;
        if rank == 0 || rank > 4 {
            return Err(Error::Format(format!("implausible tensor rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u32(&mut r)? as usize);
        }
        let len: usize = dims.iter().product();
        let mut values = vec![0f32; len];
        let mut buf = [0u8; 4];
        for v in values.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f32::from_le_bytes(buf);
        }
        tensors.push((dims, values));
    }

    let conv_dims = &tensors[0].0;
    if conv_dims.len() != 4 || conv_dims[1] != channels || conv_dims[2] != conv_dims[3] {
        return Err(Error::Format("malformed convolution tensor shape".into()));
    }
    let (filters, kernel) = (conv_dims[0], conv_dims[2]);
    let fc1_dims = &tensors[2].0;
    if fc1_dims.len() != 2 || fc1_dims[1] % filters != 0 {
        return Err(Error::Format("malformed fc1 tensor shape".into()));
    }
    let positions = fc1_dims[1] / filters;
    let side = (positions as f64).sqrt().round() as usize;
    if side * side != positions {
        return Err(Error::Format("fc1 width is not a square feature map".into()));
    }
    let stride = 2;
    let config = NetworkConfig {
        input_size: (side - 1) * stride + kernel,
        channels,
        conv_filters: filters,
        conv_kernel: kernel,
        conv_stride: stride,
        fc1: fc1_dims[0],
        fc2: tensors[4].0[0],
        outputs: tensors[6].0[0],
    };
    config.validate()?;

    let expected: [Vec<usize>; 8] = [
        vec![config.conv_filters, channels, kernel, kernel],
        vec![config.conv_filters],
        vec![config.fc1, config.flat()],
        vec![config.fc1],
        vec![config.fc2, config.fc1],
        vec![config.fc2],
        vec![config.outputs, config.fc2],
        vec![config.outputs],
    ];
    for (i, ((dims, _), expect)) in tensors.iter().zip(&expected).enumerate() {
        if dims != expect {
            return Err(Error::Format(format!(
                "tensor {i} has shape {dims:?}, expected {expect:?}"
            )));
        }
    }
    if !tensors.iter().all(|(_, v)| v.iter().all(|x| x.is_finite())) {
        return Err(Error::Format("weights contain non-finite values".into()));
    }

    let mut it = tensors.into_iter().map(|(_, values)| values);
    let matrix =
        |rows: usize, cols: usize, values: Vec<f32>| -> Array2<f32> {
            Array2::from_shape_vec((rows, cols), values).expect("validated shape")
        };
    let conv_w = matrix(config.conv_filters, channels * kernel * kernel, it.next().unwrap());
    let conv_b = Array1::from_vec(it.next().unwrap());
    let fc1_w = matrix(config.fc1, config.flat(), it.next().unwrap());
    let fc1_b = Array1::from_vec(it.next().unwrap());
    let fc2_w = matrix(config.fc2, config.fc1, it.next().unwrap());
    let fc2_b = Array1::from_vec(it.next().unwrap());
    let out_w = matrix(config.outputs, config.fc2, it.next().unwrap());
    let out_b = Array1::from_vec(it.next().unwrap());

    Ok(Network { config, conv_w, conv_b, fc1_w, fc1_b, fc2_w, fc2_b, out_w, out_b })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
