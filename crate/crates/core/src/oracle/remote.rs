use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{OracleError, OracleQuery, ValenceBackend};
use crate::personality::{TraitId, Valence};

#[derive(Debug, Serialize)]
struct ValenceRequest<'a> {
    #[serde(rename = "trait")]
    trait_id: TraitId,
    observation: &'a str,
    action: &'a str,
}

#[derive(Debug, Deserialize)]
struct ValenceReply {
    valence: Option<i64>,
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct InFlight {
    count: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.count.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.0.count.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

/// Client for a classifier served as `POST /valence`.
#[derive(Debug)]
pub struct RemoteOracle {
    endpoint: String,
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
    in_flight: InFlight,
}

impl RemoteOracle {
    /// `base` may be the service root or the full `/valence` URL.
    pub fn new(base: &str) -> Self {
        let base = base.trim_end_matches('/');
        let endpoint = if base.ends_with("/valence") {
            base.to_string()
        } else {
            format!("{base}/valence")
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(10)))
            .build()
            .into();
        RemoteOracle {
            endpoint,
            agent,
            retries: 3,
            backoff: Duration::from_millis(50),
            in_flight: InFlight {
                count: Mutex::new(0),
                freed: Condvar::new(),
                max: 4,
            },
        }
    }

    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    pub fn with_max_in_flight(mut self, max: usize) -> Self {
        self.in_flight.max = max.max(1);
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn call_once(&self, query: &OracleQuery) -> Result<Valence, Attempt> {
        let _slot = self.in_flight.acquire();
        let body = ValenceRequest {
            trait_id: query.trait_id,
            observation: &query.observation,
            action: &query.action,
        };
        let mut resp = match self.agent.post(&self.endpoint).send_json(&body) {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(code)) => {
                return Err(Attempt::Fatal(OracleError::Protocol(format!("HTTP status {code}"))))
            }
            Err(e) => return Err(Attempt::Retry(e.to_string())),
        };
        let reply: ValenceReply = resp
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Fatal(OracleError::Protocol(format!("bad reply body: {e}"))))?;
        let v = reply
            .valence
            .ok_or_else(|| Attempt::Fatal(OracleError::Protocol("reply has no `valence` field".into())))?;
        Valence::try_from(v).map_err(|e| Attempt::Fatal(OracleError::Protocol(e.to_string())))
    }
}

enum Attempt {
    Retry(String),
    Fatal(OracleError),
}

impl ValenceBackend for RemoteOracle {
    fn classify(&self, query: &OracleQuery) -> Result<Valence, OracleError> {
        query.check()?;
        let mut last = String::new();
        for attempt in 0..=self.retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff * attempt);
            }
            match self.call_once(query) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => last = msg,
            }
        }
        Err(OracleError::Unreachable {
            endpoint: self.endpoint.clone(),
            attempts: self.retries + 1,
            message: last,
        })
    }

    fn describe(&self) -> String {
        format!("remote:{}", self.endpoint)
    }
}
