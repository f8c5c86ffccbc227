//! Execution strategy for the data-parallel loops (grid oracle, identity
//! sweeps, batch runs). Without the `parallel` feature every strategy runs
//! sequentially.

/// How a batch of independent evaluations is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Folds `0..n` with an associative `reduce`. `identity` must be a
    /// neutral element; results are identical across strategies as long as
    /// `reduce` is associative and commutative on the produced values.
    pub fn map_reduce<R, F, G>(self, n: usize, identity: R, map: F, reduce: G) -> R
    where
        R: Send + Sync + Clone,
        F: Fn(usize) -> R + Sync + Send,
        G: Fn(R, R) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..n)
                    .into_par_iter()
                    .map(map)
                    .reduce(|| identity.clone(), &reduce)
            }
            _ => (0..n).map(map).fold(identity, reduce),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = Execution::Sequential.map(&xs, |x| x * x);
        let b = Execution::Parallel.map(&xs, |x| x * x);
        assert_eq!(a, b);
        let s = Execution::Sequential.map_reduce(1000, 0u64, |i| i as u64, |a, b| a + b);
        let p = Execution::Parallel.map_reduce(1000, 0u64, |i| i as u64, |a, b| a + b);
        assert_eq!(s, p);
        assert_eq!(s, 499_500);
    }
}
