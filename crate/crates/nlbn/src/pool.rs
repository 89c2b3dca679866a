use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use crate::CliError;

/// Worker count: `NLBN_WORKERS`, then the `workers` key, then the core count.
pub fn worker_count(configured: Option<usize>) -> Result<usize, CliError> {
    if let Ok(raw) = std::env::var("NLBN_WORKERS") {
        return match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Config(format!("NLBN_WORKERS must be a positive integer, got {raw:?}"))),
        };
    }
    match configured {
        Some(0) => Err(CliError::Config("workers must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Maps `f` over `items` on up to `workers` threads; output order follows input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result slots poisoned")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every item is processed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let items: Vec<u64> = (0..50).collect();
        assert_eq!(par_map(&items, 7, |x| x * x), items.iter().map(|x| x * x).collect::<Vec<_>>());
        assert!(par_map(&Vec::<u64>::new(), 4, |x| *x).is_empty());
    }
}
