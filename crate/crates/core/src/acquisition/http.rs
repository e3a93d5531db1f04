//! Shared request gate for provider clients: bounded parallelism, a
//! token-bucket rate limit, and retry with exponential backoff.

use std::num::NonZeroU32;
use std::sync::Arc;
use std::time::Duration;

use governor::{DefaultDirectRateLimiter, Quota, RateLimiter};
use rand::Rng;
use reqwest::{RequestBuilder, StatusCode};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tracing::{debug, warn};

use super::AcquisitionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    #[serde(with = "millis")]
    pub base_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_backoff: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Backoff after the `attempt`-th failure: `base * 2^(attempt-1)`, scaled
    /// by a uniform jitter factor in [0.5, 1.0).
    pub fn delay(&self, attempt: u32) -> Duration {
        let exp = self.base_backoff.saturating_mul(1u32 << (attempt.saturating_sub(1)).min(16));
        let jitter: f64 = rand::rng().random_range(0.5..1.0);
        exp.mul_f64(jitter)
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// Per-provider gate. Cloning shares the semaphore and the token bucket, so
/// every worker holding a clone counts against the same limits.
#[derive(Clone)]
pub struct RequestGate {
    permits: Arc<Semaphore>,
    limiter: Option<Arc<DefaultDirectRateLimiter>>,
    retry: RetryPolicy,
}

impl std::fmt::Debug for RequestGate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RequestGate")
            .field("available_permits", &self.permits.available_permits())
            .field("rate_limited", &self.limiter.is_some())
            .field("retry", &self.retry)
            .finish()
    }
}

impl RequestGate {
    pub fn new(max_parallel: usize, requests_per_second: Option<u32>, retry: RetryPolicy) -> Self {
        let limiter = requests_per_second
            .and_then(NonZeroU32::new)
            .map(|rps| Arc::new(RateLimiter::direct(Quota::per_second(rps))));
        Self {
            permits: Arc::new(Semaphore::new(max_parallel.max(1))),
            limiter,
            retry,
        }
    }

    pub fn retry(&self) -> RetryPolicy {
        self.retry
    }

    /// Sends the request built by `build`, retrying on 429, 5xx and transport
    /// errors. Returns the response body of the first success.
    pub async fn send_text<F>(&self, build: F) -> Result<String, AcquisitionError>
    where
        F: Fn() -> RequestBuilder,
    {
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            let outcome = {
                let _permit = self.permits.acquire().await.expect("semaphore never closed");
                if let Some(limiter) = &self.limiter {
                    limiter.until_ready().await;
                }
                match build().send().await {
                    Ok(resp) => {
                        let status = resp.status();
                        match resp.text().await {
                            Ok(body) => Ok((status, body)),
                            Err(e) => Err((None, e.to_string())),
                        }
                    }
                    Err(e) => Err((e.status().map(|s| s.as_u16()), e.to_string())),
                }
            };

            let (status, message) = match outcome {
                Ok((status, body)) if status.is_success() => return Ok(body),
                Ok((status, _)) if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN => {
                    return Err(AcquisitionError::Auth {
                        status: status.as_u16(),
                    });
                }
                Ok((status, body)) => {
                    let retryable =
                        status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error();
                    let message = format!("HTTP {}: {}", status.as_u16(), truncate(&body, 200));
                    if !retryable {
                        return Err(AcquisitionError::Http {
                            status: Some(status.as_u16()),
                            attempts: attempt,
                            message,
                        });
                    }
                    (Some(status.as_u16()), message)
                }
                Err(transport) => transport,
            };

            if attempt >= max_attempts {
                warn!(attempt, %message, "giving up");
                return Err(AcquisitionError::Http {
                    status,
                    attempts: attempt,
                    message,
                });
            }
            let delay = self.retry.delay(attempt);
            debug!(attempt, ?delay, %message, "retrying");
            tokio::time::sleep(delay).await;
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_grows_exponentially_with_jitter() {
        let p = RetryPolicy {
            max_attempts: 3,
            base_backoff: Duration::from_millis(100),
        };
        for attempt in 1..=4u32 {
            let full = 100u64 << (attempt - 1);
            for _ in 0..20 {
                let d = p.delay(attempt).as_millis() as u64;
                assert!(d >= full / 2 && d < full, "attempt {attempt}: {d}");
            }
        }
    }
}
