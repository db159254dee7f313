//! Thread-fanned runners with results bit-identical to the sequential ones.
//!
//! Every parallel unit (a tree, a simulation repetition) derives its own
//! random stream from `(seed, index)` inside `bbfi-core`, so fanning the
//! units over worker threads and reassembling in index order reproduces the
//! sequential output exactly.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use bbfi_core::data::Dataset;
use bbfi_core::models::{fit_single_tree, tree_seed, ForestModel, ForestParams};
use bbfi_core::sim::{
    sim1_aggregate, sim1_curves, sim1_fit_forest, sim1_rep, sim1_test_set, sim2_aggregate,
    sim2_fit_models, sim2_rep, Sim1Report, Sim2Report,
};

use crate::error::Result;

/// Resolves the worker count: explicit flag, then `BBFI_THREADS`, then the
/// machine's available parallelism. Never affects results, only wall time.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var("BBFI_THREADS").ok().and_then(|v| v.parse().ok()))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

/// Applies `f` to `0..n` on up to `threads` workers; the output vector is in
/// index order regardless of scheduling.
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let value = f(i);
                *slots[i].lock().unwrap() = Some(value);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every index visited"))
        .collect()
}

/// [`bbfi_core::models::fit_forest`] with trees fitted on worker threads;
/// bit-identical model for any thread count.
pub fn fit_forest_threaded(
    train: &Dataset,
    params: ForestParams,
    seed: u64,
    threads: usize,
) -> Result<ForestModel> {
    if threads <= 1 || params.ntree < 1 {
        return Ok(bbfi_core::models::fit_forest(train, params, seed)?);
    }
    let trees = map_indexed(params.ntree, threads, |t| {
        fit_single_tree(train, &params, tree_seed(seed, t))
    })
    .into_iter()
    .collect::<bbfi_core::Result<Vec<_>>>()?;
    Ok(ForestModel { trees, params, seed })
}

/// Simulation study 1 with repetitions fanned over threads.
pub fn run_sim1_threaded(
    train_n: usize,
    test_n: usize,
    reps: usize,
    seed: u64,
    threads: usize,
) -> Result<Sim1Report> {
    if reps < 1 {
        return Ok(bbfi_core::sim::run_sim1(train_n, test_n, reps, seed)?);
    }
    let model = sim1_fit_forest(train_n, seed)?;
    let per_rep = map_indexed(reps, threads, |r| sim1_rep(&model, test_n, seed, r))
        .into_iter()
        .collect::<bbfi_core::Result<Vec<_>>>()?;
    let curves = sim1_curves(&model, &sim1_test_set(test_n, seed, 0)?)?;
    Ok(sim1_aggregate(train_n, test_n, seed, per_rep, curves))
}

/// Simulation study 2 with repetitions fanned over threads.
pub fn run_sim2_threaded(
    train_n: usize,
    test_n: usize,
    reps: usize,
    seed: u64,
    threads: usize,
) -> Result<Sim2Report> {
    if reps < 1 {
        return Ok(bbfi_core::sim::run_sim2(train_n, test_n, reps, seed)?);
    }
    let models = sim2_fit_models(train_n, seed)?;
    let per_rep = map_indexed(reps, threads, |r| sim2_rep(&models, test_n, seed, r))
        .into_iter()
        .collect::<bbfi_core::Result<Vec<_>>>()?;
    Ok(sim2_aggregate(train_n, test_n, seed, per_rep))
}

/// Fans a fallible per-index job and collects in order (first error wins by
/// index, deterministically).
pub fn try_map_indexed<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let results = map_indexed(n, threads, f);
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use bbfi_core::data::{FeatureKind, Value};
    use bbfi_core::models::fit_forest;
    use bbfi_core::rng::SplitMix64;
    use bbfi_core::sim::{run_sim1, run_sim2};

    #[test]
    fn map_indexed_preserves_order() {
        for threads in [1, 2, 8] {
            let out = map_indexed(100, threads, |i| i * i);
            assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
        }
    }

    fn toy_train(n: usize) -> Dataset {
        let mut rng = SplitMix64::new(5);
        let rows: Vec<Vec<Value>> = (0..n)
            .map(|_| vec![Value::Num(rng.next_normal()), Value::Num(rng.next_normal())])
            .collect();
        let target: Vec<f64> = rows.iter().map(|r| r[0].as_num().unwrap()).collect();
        Dataset::new(
            vec!["a".into(), "b".into()],
            vec![FeatureKind::Numeric; 2],
            rows,
            target,
            "y".into(),
        )
        .unwrap()
    }

    #[test]
    fn threaded_forest_matches_sequential() {
        let d = toy_train(80);
        let params = ForestParams { ntree: 9, mtry: 1, min_node_size: 3 };
        let seq = fit_forest(&d, params, 42).unwrap();
        for threads in [2, 4] {
            let par = fit_forest_threaded(&d, params, 42, threads).unwrap();
            assert_eq!(seq, par);
        }
    }

    #[test]
    fn threaded_sim1_matches_sequential() {
        let seq = run_sim1(150, 30, 3, 7).unwrap();
        let par = run_sim1_threaded(150, 30, 3, 7, 4).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn threaded_sim2_matches_sequential() {
        let seq = run_sim2(120, 25, 2, 9).unwrap();
        let par = run_sim2_threaded(120, 25, 2, 9, 4).unwrap();
        assert_eq!(seq, par);
    }
}
