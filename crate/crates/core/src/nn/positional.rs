use alloc::format;

use crate::{Error, Result, Tensor};

/// Absolute sinusoidal encoding:
/// `PE[pos, 2i] = sin(pos / f^(2i/d))`, `PE[pos, 2i+1] = cos(pos / f^(2i/d))`.
pub fn positional_encoding(n: usize, d: usize, frequency: f64) -> Result<Tensor> {
    if !d.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "positional encoding width must be even, got {d}"
        )));
    }
    let mut pe = Tensor::zeros(&[n, d]);
    for pos in 0..n {
        let row = pe.row_mut(pos);
        for i in 0..d / 2 {
            let angle = pos as f64 / libm::pow(frequency, (2 * i) as f64 / d as f64);
            row[2 * i] = libm::sin(angle) as f32;
            row[2 * i + 1] = libm::cos(angle) as f32;
        }
    }
    Ok(pe)
}
