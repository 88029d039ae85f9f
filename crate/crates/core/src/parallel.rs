//! Data-parallel helpers. With the `parallel` feature (default) work is spread
//! over the rayon pool; without it every helper runs on the calling thread.
//! Results always come back in input order, so output never depends on the mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Node count below which pointwise kernels stay on one thread.
pub const POINTWISE_MIN: usize = 1 << 14;

/// Whether the crate was built with rayon.
pub const fn enabled() -> bool {
    cfg!(feature = "parallel")
}

pub fn map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        map_parallel(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(items, f)
    }
}

pub fn map_sequential<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    items.par_iter().map(f).collect()
}

/// In-place pointwise update `v[j] = f(j, v[j])`, parallel above [`POINTWISE_MIN`].
pub fn for_each_indexed<T: Send>(v: &mut [T], f: impl Fn(usize, &mut T) + Sync + Send) {
    #[cfg(feature = "parallel")]
    if v.len() >= POINTWISE_MIN {
        v.par_iter_mut().enumerate().for_each(|(j, x)| f(j, x));
        return;
    }
    v.iter_mut().enumerate().for_each(|(j, x)| f(j, x));
}

/// Index of the first item (in input order) satisfying `pred`.
pub fn position_first<T: Sync>(items: &[T], pred: impl Fn(&T) -> bool + Sync + Send) -> Option<usize> {
    #[cfg(feature = "parallel")]
    {
        items.par_iter().position_first(pred)
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().position(pred)
    }
}
