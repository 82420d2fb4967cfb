use std::thread::sleep;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Deserialize;
use tracing::{debug, warn};
use ureq::http::Response;
use ureq::{Agent, Body};

use super::{HarvestError, HostingApi, RepoRecord};

pub const DEFAULT_API_BASE: &str = "https://api.github.com";
pub const HOSTING_TOKEN_ENV: &str = "PATMINE_HOSTING_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub base_delay: Duration,
    /// Upper bound on any single wait, including server-requested ones.
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_secs(2),
            max_delay: Duration::from_secs(120),
        }
    }
}

/// Client for the GitHub REST v3 API. Requests are issued one at a time.
pub struct GitHubClient {
    agent: Agent,
    base: String,
    token: Option<String>,
    retry: RetryPolicy,
}

#[derive(Deserialize)]
struct SearchPage {
    items: Vec<SearchItem>,
}

#[derive(Deserialize)]
struct SearchItem {
    full_name: String,
    stargazers_count: u64,
    #[serde(default)]
    archived: bool,
    pushed_at: DateTime<Utc>,
    #[serde(default)]
    topics: Vec<String>,
}

impl GitHubClient {
    pub fn new(base: &str, token: Option<String>) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .user_agent("patmine")
            .build()
            .into();
        Self {
            agent,
            base: base.trim_end_matches('/').to_string(),
            token,
            retry: RetryPolicy::default(),
        }
    }

    /// Client for the public API using the token in `PATMINE_HOSTING_TOKEN`.
    pub fn from_env(base: Option<&str>) -> Self {
        let token = std::env::var(HOSTING_TOKEN_ENV).ok().filter(|t| !t.is_empty());
        Self::new(base.unwrap_or(DEFAULT_API_BASE), token)
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn get(&self, url: &str, query: &[(&str, &str)]) -> Result<Response<Body>, HarvestError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let mut req = self
                .agent
                .get(url)
                .header("Accept", "application/vnd.github+json")
                .header("X-GitHub-Api-Version", "2022-11-28");
            for (k, v) in query {
                req = req.query(*k, *v);
            }
            if let Some(t) = &self.token {
                req = req.header("Authorization", format!("Bearer {t}"));
            }
            let resp = req.call().map_err(|e| HarvestError::Transport {
                url: url.to_string(),
                message: e.to_string(),
            })?;
            let status = resp.status().as_u16();
            let header = |name: &str| {
                resp.headers()
                    .get(name)
                    .and_then(|v| v.to_str().ok())
                    .map(str::to_string)
            };
            let retry_after = header("retry-after").and_then(|v| v.trim().parse::<u64>().ok());
            let exhausted = header("x-ratelimit-remaining").as_deref() == Some("0");
            let rate_limited = status == 429 || (status == 403 && (exhausted || retry_after.is_some()));
            match status {
                200..=299 => return Ok(resp),
                401 => return Err(HarvestError::Credential(format!("401 from {url}"))),
                _ if rate_limited || status >= 500 => {
                    if attempt >= self.retry.max_attempts {
                        return Err(if rate_limited {
                            HarvestError::RateLimited {
                                url: url.to_string(),
                                attempts: attempt,
                            }
                        } else {
                            HarvestError::Api {
                                status,
                                url: url.to_string(),
                                message: "server error persisted after retries".into(),
                            }
                        });
                    }
                    let reset_wait = header("x-ratelimit-reset")
                        .and_then(|v| v.parse::<i64>().ok())
                        .filter(|_| exhausted)
                        .map(|reset| Duration::from_secs((reset - Utc::now().timestamp()).max(0) as u64));
                    let backoff = self.retry.base_delay * 2u32.saturating_pow(attempt - 1);
                    let wait = retry_after
                        .map(Duration::from_secs)
                        .or(reset_wait)
                        .unwrap_or(backoff)
                        .min(self.retry.max_delay);
                    warn!(status, attempt, ?wait, "hosting API throttled or failing; retrying");
                    sleep(wait);
                }
                _ => {
                    let mut resp = resp;
                    let message = resp.body_mut().read_to_string().unwrap_or_default();
                    return Err(HarvestError::Api {
                        status,
                        url: url.to_string(),
                        message,
                    });
                }
            }
        }
    }

    fn json<T: for<'de> Deserialize<'de>>(url: &str, resp: &mut Response<Body>) -> Result<T, HarvestError> {
        resp.body_mut().read_json::<T>().map_err(|e| HarvestError::Api {
            status: resp.status().as_u16(),
            url: url.to_string(),
            message: format!("unexpected response body: {e}"),
        })
    }
}

/// Target of `rel` in an RFC 8288 `Link` header.
pub(crate) fn link_target(resp: &Response<Body>, rel: &str) -> Option<String> {
    let header = resp.headers().get("link")?.to_str().ok()?;
    header.split(',').find_map(|part| {
        let (url, params) = part.split_once(';')?;
        let wanted = format!("rel=\"{rel}\"");
        params
            .split(';')
            .any(|p| p.trim() == wanted)
            .then(|| url.trim().trim_start_matches('<').trim_end_matches('>').to_string())
    })
}

fn page_number(url: &str) -> Option<u64> {
    let query = url.split_once('?')?.1;
    query
        .split('&')
        .find_map(|kv| kv.strip_prefix("page="))
        .and_then(|v| v.parse().ok())
}

impl HostingApi for GitHubClient {
    fn search(&self, query: &str) -> Result<Vec<RepoRecord>, HarvestError> {
        let first = format!("{}/search/repositories", self.base);
        let mut resp = self.get(
            &first,
            &[("q", query), ("sort", "stars"), ("order", "desc"), ("per_page", "100")],
        )?;
        let mut url = first;
        let mut out = Vec::new();
        loop {
            let page: SearchPage = Self::json(&url, &mut resp)?;
            debug!(query, n = page.items.len(), "search page");
            out.extend(page.items.into_iter().map(|i| RepoRecord {
                full_name: i.full_name,
                stars: i.stargazers_count,
                contributors: 0,
                archived: i.archived,
                last_push: i.pushed_at,
                topics: i.topics,
            }));
            match link_target(&resp, "next") {
                Some(next) => {
                    resp = self.get(&next, &[])?;
                    url = next;
                }
                None => return Ok(out),
            }
        }
    }

    /// One contributor per page; the `last` page number is the count.
    fn count_contributors(&self, full_name: &str) -> Result<u64, HarvestError> {
        let url = format!("{}/repos/{full_name}/contributors", self.base);
        let mut resp = self.get(&url, &[("per_page", "1")])?;
        if resp.status().as_u16() == 204 {
            return Ok(0);
        }
        if let Some(n) = link_target(&resp, "last").as_deref().and_then(page_number) {
            return Ok(n);
        }
        let items: Vec<serde_json::Value> = Self::json(&url, &mut resp)?;
        Ok(items.len() as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn page_numbers() {
        assert_eq!(page_number("https://x/repos/a/b/contributors?per_page=1&page=37"), Some(37));
        assert_eq!(page_number("https://x/y"), None);
    }
}
