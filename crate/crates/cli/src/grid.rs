use rendezvous_core::dynamics::Lambda;

use crate::error::CliError;

fn invalid(spec: &str, why: &str) -> CliError {
    CliError::Validation(format!("invalid grid {spec:?}: {why}"))
}

fn number(spec: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| invalid(spec, &format!("{:?} is not a number", s.trim())))
}

/// `start:stop:count` (inclusive, evenly spaced) or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    parse_lambda_grid(spec)?
        .into_iter()
        .map(|l| l.finite().ok_or_else(|| invalid(spec, "inf is only allowed for lambda")))
        .collect()
}

/// Like [`parse_grid`], but list entries may be `inf`.
pub fn parse_lambda_grid(spec: &str) -> Result<Vec<Lambda>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [start, stop, count] => {
            let start = number(spec, start)?;
            let stop = number(spec, stop)?;
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| invalid(spec, "count must be a positive integer"))?;
            if count == 0 {
                return Err(invalid(spec, "count must be a positive integer"));
            }
            if !(start.is_finite() && stop.is_finite()) {
                return Err(invalid(spec, "range ends must be finite"));
            }
            if count == 1 {
                vec![Lambda::Finite(start)]
            } else {
                let step = (stop - start) / (count - 1) as f64;
                (0..count)
                    .map(|i| Lambda::Finite(if i + 1 == count { stop } else { start + step * i as f64 }))
                    .collect()
            }
        }
        [list] => list
            .split(',')
            .map(|s| s.parse::<Lambda>().map_err(|_| invalid(spec, &format!("{:?} is not a number", s.trim()))))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(invalid(spec, "expected start:stop:count or a comma list")),
    };
    if values.iter().any(|l| l.finite().is_some_and(|v| !v.is_finite())) {
        return Err(invalid(spec, "values must be finite"));
    }
    Ok(values)
}
