//! Plain-text model files.
//!
//! ```text
//! SENTIO-MODEL v1
//! actor 29 64 64 2
//! log_std 2
//! critic 29 64 64 1
//! <one value per line: actor layers (weights row-major, then biases), log_std, critic layers>
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a load
//! reproduces the saved parameters bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::mlp::Mlp;
use super::policy::PolicyParams;
use super::PpoError;

pub const MODEL_HEADER: &str = "SENTIO-MODEL v1";
const MAGIC: &str = "SENTIO-MODEL";

pub fn render_model(params: &PolicyParams) -> String {
    let sizes = |net: &Mlp| {
        net.sizes()
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::new();
    writeln!(out, "{MODEL_HEADER}").unwrap();
    writeln!(out, "actor {}", sizes(&params.actor)).unwrap();
    writeln!(out, "log_std {}", params.log_std.len()).unwrap();
    writeln!(out, "critic {}", sizes(&params.critic)).unwrap();
    for v in params.flatten() {
        writeln!(out, "{v:?}").unwrap();
    }
    out
}

fn manifest_line(line: Option<&str>, key: &str) -> Result<Vec<usize>, PpoError> {
    let line = line.ok_or_else(|| PpoError::Format(format!("missing `{key}` manifest line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(PpoError::Format(format!("expected `{key}` manifest line, found `{line}`")));
    }
    let sizes = parts
        .map(|p| {
            p.parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| PpoError::Format(format!("bad size `{p}` in `{key}` line")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.is_empty() {
        return Err(PpoError::Format(format!("`{key}` line lists no sizes")));
    }
    Ok(sizes)
}

pub fn parse_model(text: &str) -> Result<PolicyParams, PpoError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").trim();
    if header != MODEL_HEADER {
        return Err(match header.strip_prefix(MAGIC) {
            Some(version) => PpoError::Version(version.trim().to_string()),
            None => PpoError::Format(format!("missing `{MODEL_HEADER}` header")),
        });
    }
    let actor = manifest_line(lines.next(), "actor")?;
    let log_std = manifest_line(lines.next(), "log_std")?;
    let critic = manifest_line(lines.next(), "critic")?;
    if actor.len() < 2 || critic.len() < 2 || log_std.len() != 1 {
        return Err(PpoError::Format("manifest needs ≥2 sizes per network and one log_std size".into()));
    }
    let action_dim = log_std[0];
    if actor.last() != Some(&action_dim) {
        return Err(PpoError::Format(format!(
            "actor outputs {} values but log_std has {action_dim}",
            actor.last().unwrap()
        )));
    }
    if critic[0] != actor[0] || critic.last() != Some(&1) {
        return Err(PpoError::Format(format!(
            "critic shape {critic:?} disagrees with actor input {} or has non-scalar output",
            actor[0]
        )));
    }

    let mut params = PolicyParams {
        actor: Mlp::zeros(&actor),
        log_std: vec![0.0; action_dim],
        critic: Mlp::zeros(&critic),
    };
    let values = lines
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| PpoError::Format(format!("value #{} `{l}` is not a finite number", i + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let expected = params.n_params();
    if values.len() < expected {
        return Err(PpoError::Truncated {
            expected,
            found: values.len(),
        });
    }
    if values.len() > expected {
        return Err(PpoError::Format(format!(
            "expected {expected} values, found {} (trailing data)",
            values.len()
        )));
    }
    params.assign_flat(&values)?;
    Ok(params)
}

pub fn save_model(params: &PolicyParams, path: &Path) -> Result<(), PpoError> {
    if !params.is_finite() {
        return Err(PpoError::NonFinite("refusing to save non-finite parameters".into()));
    }
    std::fs::write(path, render_model(params)).map_err(|source| PpoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<PolicyParams, PpoError> {
    let text = std::fs::read_to_string(path).map_err(|source| PpoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_model(&text)
}
