//! Minimal deterministic work distribution.
//!
//! Results come back in input order regardless of worker count, so outputs
//! are identical at any `workers` setting; only log interleaving differs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Apply `f` to every item, optionally across `workers` threads, returning
/// results in input order.
pub fn run_indexed<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    if workers <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = (0..items.len()).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(i, &items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order_at_any_worker_count() {
        let items: Vec<usize> = (0..57).collect();
        let serial = run_indexed(&items, 1, |i, &x| i * 1000 + x * x);
        for workers in [2, 3, 8] {
            let parallel = run_indexed(&items, workers, |i, &x| i * 1000 + x * x);
            assert_eq!(parallel, serial);
        }
    }

    #[test]
    fn empty_input_is_fine() {
        let out: Vec<usize> = run_indexed(&[] as &[usize], 4, |_, &x| x);
        assert!(out.is_empty());
    }
}
