use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::Result;

/// Number of chunks the basis range is split into, independent of the worker
/// count so that the reduction order never changes.
pub const REDUCTION_CHUNKS: usize = 16;

/// Contiguous chunks covering `0..count` exactly once, in ascending order.
pub fn chunk_ranges(count: usize, chunks: usize) -> Vec<Range<usize>> {
    let chunks = chunks.clamp(1, count.max(1));
    (0..chunks).map(|c| c * count / chunks..(c + 1) * count / chunks).collect()
}

/// Sums `body(j)` over `j ∈ 0..count`.
///
/// Each chunk of [`chunk_ranges`] is accumulated into a fresh `T` in
/// ascending `j`; the chunk partials are then folded in ascending chunk order.
/// The floating-point result is therefore the same for every `workers`.
/// `make_worker` builds per-thread scratch space passed to `body`.
pub fn parallel_reduce<T, W>(
    count: usize,
    workers: usize,
    make_worker: impl Fn() -> W + Sync,
    make_acc: impl Fn() -> T + Sync,
    body: impl Fn(&mut W, &mut T, usize) -> Result<()> + Sync,
    combine: impl Fn(&mut T, T),
) -> Result<T>
where
    T: Send,
{
    let ranges = chunk_ranges(count, REDUCTION_CHUNKS);
    let next = AtomicUsize::new(0);
    let run = || -> Result<Vec<(usize, T)>> {
        let mut scratch = make_worker();
        let mut done = vec![];
        loop {
            let c = next.fetch_add(1, Ordering::Relaxed);
            if c >= ranges.len() {
                return Ok(done);
            }
            let mut acc = make_acc();
            for j in ranges[c].clone() {
                body(&mut scratch, &mut acc, j)?;
            }
            done.push((c, acc));
        }
    };

    let workers = workers.clamp(1, ranges.len());
    let mut partials: Vec<(usize, T)> = if workers == 1 {
        run()?
    } else {
        let results: Vec<Result<Vec<(usize, T)>>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers).map(|_| s.spawn(&run)).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut all = vec![];
        for r in results {
            all.extend(r?);
        }
        all
    };
    partials.sort_by_key(|(c, _)| *c);
    let mut iter = partials.into_iter().map(|(_, t)| t);
    let mut total = iter.next().unwrap_or_else(&make_acc);
    for t in iter {
        combine(&mut total, t);
    }
    Ok(total)
}
