//! Machine-deterministic parallel reductions.
//!
//! Every sum in the crate that feeds a numerical result goes through these
//! helpers. The input is split into fixed-size chunks; chunk partials are
//! computed independently (possibly in parallel) and then folded in chunk
//! order. The result is bitwise identical for any thread count, because the
//! summation tree depends only on the data layout.

use rayon::prelude::*;

/// Chunk width for all deterministic reductions. Fixed: changing it changes
/// the rounding of every downstream result.
pub const CHUNK: usize = 4096;

/// Sequential cutoff: below this length the parallel machinery costs more
/// than it saves.
const PAR_MIN: usize = 4 * CHUNK;

/// Deterministic sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    sum_map(values, |x| x)
}

/// Deterministic sum of `f(x)` over a slice.
pub fn sum_map(values: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
    if values.len() < PAR_MIN {
        return values.chunks(CHUNK).map(|c| c.iter().map(|&x| f(x)).sum::<f64>()).sum();
    }
    let partials: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|&x| f(x)).sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Deterministic sum of `f(a, b)` over two equal-length slices.
pub fn sum_zip(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.len() < PAR_MIN {
        return a
            .chunks(CHUNK)
            .zip(b.chunks(CHUNK))
            .map(|(ca, cb)| ca.iter().zip(cb).map(|(&x, &y)| f(x, y)).sum::<f64>())
            .sum();
    }
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(&x, &y)| f(x, y)).sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Deterministic sum of `values[i]` over an index list.
pub fn sum_indexed(indices: &[u32], values: &[f64]) -> f64 {
    if indices.len() < PAR_MIN {
        return indices
            .chunks(CHUNK)
            .map(|c| c.iter().map(|&i| values[i as usize]).sum::<f64>())
            .sum();
    }
    let partials: Vec<f64> = indices
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|&i| values[i as usize]).sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Deterministic L1 distance between two vectors.
pub fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    sum_zip(a, b, |x, y| (x - y).abs())
}

/// Deterministic dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    sum_zip(a, b, |x, y| x * y)
}
