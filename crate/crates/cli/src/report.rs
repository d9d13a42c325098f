use serde::Serialize;

/// Envelope around every command's outputs: enough provenance to replay
/// the run byte-for-byte (CSV outputs depend only on the digest, flags and
/// seed; wall time and workers are informational).
#[derive(Serialize)]
pub struct RunReport<T: Serialize> {
    pub command: String,
    pub tool_version: String,
    pub instance_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub wall_ms: u128,
    pub outputs: T,
}

impl<T: Serialize> RunReport<T> {
    pub fn new(command: &str, digest: &str, outputs: T) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            instance_digest: digest.to_string(),
            seed: None,
            samples: None,
            horizon: None,
            workers: None,
            wall_ms: 0,
            outputs,
        }
    }
}
