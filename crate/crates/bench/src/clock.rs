use std::collections::VecDeque;
use std::time::Instant;

/// Times a closure, in seconds.
pub trait Clock {
    fn elapsed<T>(&mut self, f: impl FnOnce() -> T) -> (T, f64);
}

/// Wall-clock timing with [`Instant`].
#[derive(Debug, Clone, Copy, Default)]
pub struct MonotonicClock;

impl Clock for MonotonicClock {
    fn elapsed<T>(&mut self, f: impl FnOnce() -> T) -> (T, f64) {
        let start = Instant::now();
        let out = f();
        (out, start.elapsed().as_secs_f64())
    }
}

/// Runs the closure but reports prerecorded durations, cycling when exhausted.
#[derive(Debug, Clone)]
pub struct ReplayClock {
    samples: VecDeque<f64>,
}

impl ReplayClock {
    pub fn new(samples: impl IntoIterator<Item = f64>) -> Self {
        let samples: VecDeque<f64> = samples.into_iter().collect();
        assert!(!samples.is_empty(), "replay clock needs at least one sample");
        ReplayClock { samples }
    }
}

impl Clock for ReplayClock {
    fn elapsed<T>(&mut self, f: impl FnOnce() -> T) -> (T, f64) {
        let t = self.samples.pop_front().expect("nonempty");
        self.samples.push_back(t);
        (f(), t)
    }
}

/// Minimum over `reps` timed calls of `f`.
pub fn min_of_runs<C: Clock>(clock: &mut C, reps: usize, mut f: impl FnMut()) -> f64 {
    assert!(reps >= 1);
    (0..reps).map(|_| clock.elapsed(&mut f).1).fold(f64::INFINITY, f64::min)
}

/// Smallest nonzero step observed between consecutive [`Instant`] readings.
pub fn timer_resolution() -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..1000 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        best = best.min((b - a).as_secs_f64());
    }
    best
}
