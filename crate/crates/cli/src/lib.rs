//! Command-line front end for `statdisc-core`.
//!
//! Exit codes: 0 on success, 1 on domain errors, 2 on usage errors. Errors
//! are reported on stderr as one JSON object.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use serde_json::json;
use statdisc_core::StatDiscError;

use commands::CliError;
use config::{ConfigError, Format};

fn error_json(kind: &str, message: &str, details: serde_json::Value) -> Vec<u8> {
    output::to_json(&json!({ "error": kind, "message": message, "details": details })).expect("error report serializes")
}

fn domain_details(e: &StatDiscError) -> serde_json::Value {
    match e {
        StatDiscError::NoConvergence { iterations, last, history } => {
            json!({ "iterations": iterations, "last": last, "history": history })
        }
        StatDiscError::DimensionAmbiguous { singular_values } => json!({ "singular_values": singular_values }),
        StatDiscError::SizeMismatch { expected, got } => json!({ "expected": expected, "got": got }),
        _ => json!({}),
    }
}

/// Parses `args`, runs the subcommand and writes to the given streams.
pub fn run<I, T>(args: I, env_grid: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match config::parse_config(args, env_grid) {
        Ok(cfg) => cfg,
        Err(ConfigError::Display(text)) => {
            let _ = out.write_all(text.as_bytes());
            return 0;
        }
        Err(ConfigError::Usage(msg)) => {
            let _ = err.write_all(&error_json("usage", msg.trim_end(), json!({})));
            return 2;
        }
    };
    let result = commands::execute(&cfg).and_then(|o| {
        let bytes = match cfg.format {
            Format::Json => output::to_json(&o.json),
            Format::Csv => commands::table_for("output", &o).to_bytes(),
        };
        bytes.map_err(|e| CliError::Io(e.to_string()))
    });
    match result {
        Ok(bytes) => match out.write_all(&bytes).and_then(|_| out.flush()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = err.write_all(&error_json("io", &e.to_string(), json!({})));
                1
            }
        },
        Err(CliError::Usage(msg)) => {
            let _ = err.write_all(&error_json("usage", &msg, json!({})));
            2
        }
        Err(CliError::Domain(e)) => {
            let _ = err.write_all(&error_json(e.kind(), &e.to_string(), domain_details(&e)));
            1
        }
        Err(CliError::Io(msg)) => {
            let _ = err.write_all(&error_json("io", &msg, json!({})));
            1
        }
    }
}
