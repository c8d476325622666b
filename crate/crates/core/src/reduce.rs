//! Deterministic parallel reduction of convolution sums
//! `sum_{k=0}^{i} a[i-k] * b[k]`.
//!
//! The index range `[0, i]` is split into a fixed number of logical chunks
//! that does not depend on how many workers run. Each chunk owns its
//! accumulators and accumulates in ascending `k`; a single merger then adds
//! the chunk partials in ascending chunk order. The rounded result is
//! therefore a function of `(a, b, i, num_chunks)` only, whatever the worker
//! count or scheduling. With one chunk the computation is exactly the plain
//! serial loop.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{ArithError, Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_NUM_CHUNKS: usize = 64;
/// Below this many terms the chunks are summed on the calling thread.
pub const DEFAULT_PARALLEL_THRESHOLD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducePlan {
    num_chunks: usize,
    workers: usize,
    parallel_threshold: usize,
}

impl ReducePlan {
    pub fn new(num_chunks: usize, workers: usize) -> Result<Self> {
        if num_chunks == 0 || workers == 0 {
            return Err(Error::Invalid(format!(
                "reduce plan needs num_chunks >= 1 and workers >= 1, got {num_chunks} and {workers}"
            )));
        }
        Ok(ReducePlan {
            num_chunks,
            workers,
            parallel_threshold: DEFAULT_PARALLEL_THRESHOLD,
        })
    }

    /// One chunk, one worker: the plain ascending loop.
    pub fn serial() -> Self {
        ReducePlan {
            num_chunks: 1,
            workers: 1,
            parallel_threshold: DEFAULT_PARALLEL_THRESHOLD,
        }
    }

    /// One chunk per worker, as in a static OpenMP `for` schedule. Results
    /// then depend on the worker count.
    pub fn per_worker(workers: usize) -> Result<Self> {
        ReducePlan::new(workers, workers)
    }

    pub fn with_parallel_threshold(mut self, threshold: usize) -> Self {
        self.parallel_threshold = threshold;
        self
    }

    pub fn num_chunks(&self) -> usize {
        self.num_chunks
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn parallel_threshold(&self) -> usize {
        self.parallel_threshold
    }
}

impl Default for ReducePlan {
    fn default() -> Self {
        ReducePlan {
            num_chunks: DEFAULT_NUM_CHUNKS,
            workers: 1,
            parallel_threshold: DEFAULT_PARALLEL_THRESHOLD,
        }
    }
}

/// Splits `[0, i]` into `num_chunks` ascending, disjoint ranges whose sizes
/// differ by at most one; the first `(i + 1) % num_chunks` are the larger
/// ones. Ranges are empty when there are more chunks than indices.
pub fn partition(i: usize, num_chunks: usize) -> Vec<Range<usize>> {
    assert!(num_chunks >= 1, "num_chunks must be positive");
    let len = i + 1;
    let base = len / num_chunks;
    let extra = len % num_chunks;
    let mut lo = 0;
    (0..num_chunks)
        .map(|c| {
            let size = base + usize::from(c < extra);
            let r = lo..lo + size;
            lo += size;
            r
        })
        .collect()
}

/// The accumulators of one chunk: one partial sum per convolution being
/// computed, plus a reusable product temporary.
#[derive(Debug)]
struct ChunkAccumulator<S> {
    partials: Vec<S>,
    scratch: S,
}

impl<S: Scalar> ChunkAccumulator<S> {
    fn accumulate(&mut self, pairs: &[(&[S], &[S])], i: usize, range: Range<usize>) -> Result<(), ArithError> {
        for p in &mut self.partials {
            p.set_zero();
        }
        for k in range {
            for ((a, b), partial) in pairs.iter().zip(&mut self.partials) {
                self.scratch.set_product(&a[i - k], &b[k])?;
                partial.add_from(&self.scratch)?;
            }
        }
        Ok(())
    }
}

/// Reusable reduction engine: owns the worker pool and the per-chunk containers.
///
/// One coordinator at a time; the `&mut self` receivers enforce it.
pub struct Reducer<S: Scalar> {
    plan: ReducePlan,
    ctx: S::Context,
    pool: Option<rayon::ThreadPool>,
    chunks: Vec<ChunkAccumulator<S>>,
}

impl<S: Scalar> Reducer<S> {
    pub fn new(plan: ReducePlan, ctx: &S::Context) -> Result<Self> {
        let pool = if plan.workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(plan.workers)
                .thread_name(|n| format!("reduce-{n}"))
                .build()
                .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
            Some(pool)
        } else {
            None
        };
        let chunks = (0..plan.num_chunks)
            .map(|_| ChunkAccumulator {
                partials: Vec::new(),
                scratch: S::zero(ctx),
            })
            .collect();
        Ok(Reducer {
            plan,
            ctx: ctx.clone(),
            pool,
            chunks,
        })
    }

    pub fn serial(ctx: &S::Context) -> Self {
        Reducer::new(ReducePlan::serial(), ctx).expect("serial plan needs no pool")
    }

    pub fn plan(&self) -> &ReducePlan {
        &self.plan
    }

    pub fn context(&self) -> &S::Context {
        &self.ctx
    }

    pub fn convolve(&mut self, a: &[S], b: &[S], i: usize) -> Result<S> {
        let mut out = Vec::with_capacity(1);
        self.convolve_many(&[(a, b)], i, &mut out)?;
        Ok(out.pop().expect("one sum requested"))
    }

    /// Both sums in one pass over `k`; each equals the standalone [`Reducer::convolve`].
    pub fn convolve_pair(&mut self, a: &[S], b: &[S], c: &[S], d: &[S], i: usize) -> Result<(S, S)> {
        let mut out = Vec::with_capacity(2);
        self.convolve_many(&[(a, b), (c, d)], i, &mut out)?;
        let second = out.pop().expect("two sums requested");
        let first = out.pop().expect("two sums requested");
        Ok((first, second))
    }

    /// `out[p] = sum_{k=0}^{i} pairs[p].0[i-k] * pairs[p].1[k]` for every `p`,
    /// fused into a single pass over `k`.
    pub fn convolve_many(&mut self, pairs: &[(&[S], &[S])], i: usize, out: &mut Vec<S>) -> Result<()> {
        for (a, b) in pairs {
            if a.len() <= i || b.len() <= i {
                return Err(Error::Invalid(format!(
                    "convolution of order {i} needs {} coefficients, got {} and {}",
                    i + 1,
                    a.len(),
                    b.len()
                )));
            }
        }
        out.clear();
        if pairs.is_empty() {
            return Ok(());
        }
        for chunk in &mut self.chunks {
            chunk.partials.resize_with(pairs.len(), || S::zero(&self.ctx));
        }
        let ranges = partition(i, self.plan.num_chunks);
        match &self.pool {
            Some(pool) if i + 1 >= self.plan.parallel_threshold => {
                let chunks = &mut self.chunks;
                pool.install(|| {
                    chunks
                        .par_iter_mut()
                        .zip(ranges.par_iter())
                        .with_max_len(1)
                        .filter(|(_, r)| !r.is_empty())
                        .try_for_each(|(chunk, r)| chunk.accumulate(pairs, i, r.clone()))
                })?;
            }
            _ => {
                for (chunk, r) in self.chunks.iter_mut().zip(&ranges) {
                    if !r.is_empty() {
                        chunk.accumulate(pairs, i, r.clone())?;
                    }
                }
            }
        }
        // ordered merge; chunk 0 is never empty
        out.extend(self.chunks[0].partials.iter().cloned());
        for (chunk, r) in self.chunks.iter().zip(&ranges).skip(1) {
            if r.is_empty() {
                continue;
            }
            for (sum, partial) in out.iter_mut().zip(&chunk.partials) {
                sum.add_from(partial)?;
            }
        }
        Ok(())
    }
}

impl<S: Scalar> std::fmt::Debug for Reducer<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Reducer").field("plan", &self.plan).field("ctx", &self.ctx).finish()
    }
}
