use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use flowtm_core::tm::{RunOutput, Runner};

/// Runs interpreter jobs on a fixed pool of scoped threads.
pub struct Parallel {
    pub workers: usize,
}

impl Runner for Parallel {
    fn run(&self, jobs: usize, f: &(dyn Fn(usize) -> RunOutput + Sync)) -> Vec<RunOutput> {
        let workers = self.workers.min(jobs);
        if workers <= 1 {
            return (0..jobs).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<RunOutput>>> = (0..jobs).map(|_| Mutex::new(None)).collect();
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= jobs {
                        break;
                    }
                    let out = f(i);
                    *slots[i].lock().expect("slot lock") = Some(out);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().expect("slot lock").expect("every job ran"))
            .collect()
    }
}
