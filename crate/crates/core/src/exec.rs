//! Sequential and data-parallel evaluation of independent work items.
//!
//! With the `parallel` feature disabled, [`Exec::Parallel`] runs sequentially.

/// How embarrassingly parallel loops are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// `true` when this mode will actually use worker threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps over a slice, preserving order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        self.map_indexed(items.len(), |i| f(&items[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let seq = Exec::Sequential.map_indexed(1000, |i| i * i);
        let par = Exec::Parallel.map_indexed(1000, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }
}
