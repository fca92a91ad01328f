//! Bounds concurrent outbound requests: a counting semaphore for in-flight
//! calls plus an optional token bucket for request rate.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

#[derive(Debug)]
struct State {
    in_flight: usize,
    tokens: f64,
    last: Instant,
}

#[derive(Debug)]
pub struct Limiter {
    max_in_flight: usize,
    /// Requests per second; `None` disables the bucket.
    rate: Option<f64>,
    burst: f64,
    state: Mutex<State>,
    cv: Condvar,
}

/// Releases its in-flight slot on drop.
pub struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut s = self.limiter.state.lock().unwrap_or_else(|e| e.into_inner());
        s.in_flight -= 1;
        self.limiter.cv.notify_one();
    }
}

impl Limiter {
    pub fn new(max_in_flight: usize, rate: Option<f64>) -> Self {
        let max_in_flight = max_in_flight.max(1);
        let burst = max_in_flight as f64;
        Self {
            max_in_flight,
            rate: rate.filter(|r| *r > 0.0),
            burst,
            state: Mutex::new(State { in_flight: 0, tokens: burst, last: Instant::now() }),
            cv: Condvar::new(),
        }
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }

    /// Blocks until both a slot and a token are available.
    pub fn acquire(&self) -> Permit<'_> {
        let mut s = self.state.lock().unwrap_or_else(|e| e.into_inner());
        loop {
            if let Some(rate) = self.rate {
                let now = Instant::now();
                s.tokens = (s.tokens + now.duration_since(s.last).as_secs_f64() * rate).min(self.burst);
                s.last = now;
            }
            let has_token = self.rate.is_none() || s.tokens >= 1.0;
            if s.in_flight < self.max_in_flight && has_token {
                s.in_flight += 1;
                if self.rate.is_some() {
                    s.tokens -= 1.0;
                }
                return Permit { limiter: self };
            }
            let wait = match self.rate {
                Some(rate) if s.in_flight < self.max_in_flight => Duration::from_secs_f64(((1.0 - s.tokens) / rate).max(0.001)),
                _ => Duration::from_millis(50),
            };
            s = self.cv.wait_timeout(s, wait).unwrap_or_else(|e| e.into_inner()).0;
        }
    }
}

impl Default for Limiter {
    fn default() -> Self {
        Self::new(4, None)
    }
}
