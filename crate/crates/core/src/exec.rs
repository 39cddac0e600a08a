//! Execution drivers for the data-parallel inner loops.
//!
//! Grid fills are embarrassingly parallel: every output cell is a pure
//! function of shared read-only inputs. With the `parallel` feature (default)
//! large fills run on rayon; without it, or below the size threshold, they
//! run sequentially. Results are collected in index order either way, so
//! output bytes do not depend on the thread count. Reductions (masses,
//! norms) are always performed sequentially over the materialized buffer for
//! the same reason.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many elements the rayon dispatch overhead is not worth it.
const PAR_THRESHOLD: usize = 1 << 12;

/// Fill `n` values with the active execution strategy.
pub fn fill<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= PAR_THRESHOLD {
            return fill_par(n, f);
        }
    }
    fill_seq(n, f)
}

/// Sequential fill; always available, used by the benches as the baseline.
pub fn fill_seq<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64,
{
    (0..n).map(f).collect()
}

/// Rayon-backed fill.
#[cfg(feature = "parallel")]
pub fn fill_par<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Row-wise fill for stencil-style loops where per-element closures would be
/// too fine-grained. `f` produces one row of length `row_len`.
pub fn fill_rows<F>(rows: usize, row_len: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> Vec<f64> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if rows * row_len >= PAR_THRESHOLD {
            let chunks: Vec<Vec<f64>> = (0..rows).into_par_iter().map(&f).collect();
            let mut out = Vec::with_capacity(rows * row_len);
            for c in chunks {
                debug_assert_eq!(c.len(), row_len);
                out.extend_from_slice(&c);
            }
            return out;
        }
    }
    let mut out = Vec::with_capacity(rows * row_len);
    for r in 0..rows {
        let c = f(r);
        debug_assert_eq!(c.len(), row_len);
        out.extend_from_slice(&c);
    }
    out
}
