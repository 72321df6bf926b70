//! Observation files: one number per line, `#` starts a comment.

use std::path::Path;

use crate::error::{read_file, CliError};

pub fn parse_observations(text: &str) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let x: f64 = line.parse().map_err(|_| CliError::Parse {
            line: i + 1,
            message: format!("not a number: {line:?}"),
        })?;
        if !x.is_finite() {
            return Err(CliError::Parse {
                line: i + 1,
                message: format!("non-finite value: {line:?}"),
            });
        }
        out.push(x);
    }
    Ok(out)
}

pub fn read_observations(path: &Path) -> Result<Vec<f64>, CliError> {
    let data = parse_observations(&read_file(path)?).map_err(|e| e.in_file(path))?;
    if data.is_empty() {
        return Err(CliError::NoObservations(path.to_path_buf()));
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks() {
        let v = parse_observations("# header\n1.5\n\n  2 # trailing\n-3e-1\n").unwrap();
        assert_eq!(v, vec![1.5, 2.0, -0.3]);
    }

    #[test]
    fn bad_line_is_named() {
        match parse_observations("1\n2\nabc\n") {
            Err(CliError::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse_observations("nan\n").is_err());
    }
}
