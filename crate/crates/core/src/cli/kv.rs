//! `key = value` parameter files for the experiment subcommands, using the
//! same lexical rules as instance configurations (`#` comments, `;` or
//! newline separators).

use std::str::FromStr;

use super::CliError;

pub(crate) fn pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for stmt in line.split(';') {
            let stmt = stmt.trim();
            if stmt.is_empty() {
                continue;
            }
            let (k, v) = stmt
                .split_once('=')
                .ok_or_else(|| CliError::Params(format!("expected `key = value`, got `{stmt}`")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    Ok(out)
}

pub(crate) fn value<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Params(format!("bad value `{v}` for `{key}`")))
}

pub(crate) fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError> {
    v.split(',').map(|x| value(key, x.trim())).collect()
}

/// `a:b` (inclusive) or a single value.
pub(crate) fn range<T: FromStr + Copy>(key: &str, v: &str) -> Result<(T, T), CliError> {
    match v.split_once(':') {
        Some((a, b)) => Ok((value(key, a.trim())?, value(key, b.trim())?)),
        None => {
            let x = value(key, v)?;
            Ok((x, x))
        }
    }
}

pub(crate) fn unknown(key: &str) -> CliError {
    CliError::Params(format!("unknown parameter `{key}`"))
}
