//! Parsers for the small text formats the command line accepts: value
//! lists with ranges (`4,8..16,20`), forced-flip specs (`2:HTTH`) and
//! `key=value` config files.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::RobotId;

/// Hard cap on how many values one list may expand to; generous for any
/// real sweep while keeping a typo like `1..1e9` from eating the machine.
pub const MAX_VALUES: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("empty value list")]
    Empty,
    #[error("cannot parse {0:?} as a number")]
    BadNumber(String),
    #[error("bad range {item:?}: {reason}")]
    BadRange { item: String, reason: &'static str },
    #[error("value list expands to more than {MAX_VALUES} entries")]
    TooManyValues,
    #[error("flip spec {spec:?}: {reason}")]
    BadFlipSpec { spec: String, reason: &'static str },
    #[error("robot {0} has more than one flip spec")]
    DuplicateRobot(RobotId),
    #[error("config line {line}: {reason}")]
    BadConfigLine { line: usize, reason: &'static str },
    #[error("config line {line}: key {key:?} already set")]
    DuplicateKey { key: String, line: usize },
}

fn check_len(len: usize) -> Result<(), ParseError> {
    if len > MAX_VALUES {
        return Err(ParseError::TooManyValues);
    }
    Ok(())
}

/// Comma-separated integers and inclusive ranges `lo..hi` or `lo..hi..step`.
pub fn parse_u32_values(text: &str) -> Result<Vec<u32>, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let number = |s: &str| s.trim().parse::<u32>().map_err(|_| ParseError::BadNumber(s.trim().into()));
    let mut values = Vec::new();
    for item in text.split(',') {
        let parts: Vec<&str> = item.split("..").collect();
        match parts.as_slice() {
            [single] => values.push(number(single)?),
            [lo, hi] | [lo, hi, _] => {
                let (lo, hi) = (number(lo)?, number(hi)?);
                let step = if let [_, _, s] = parts.as_slice() { number(s)? } else { 1 };
                if step == 0 {
                    return Err(ParseError::BadRange { item: item.into(), reason: "step is zero" });
                }
                if hi < lo {
                    return Err(ParseError::BadRange { item: item.into(), reason: "bounds are reversed" });
                }
                let count = ((hi - lo) / step) as usize + 1;
                check_len(values.len() + count)?;
                values.extend((0..count).map(|i| lo + i as u32 * step));
            }
            _ => return Err(ParseError::BadRange { item: item.into(), reason: "too many `..`" }),
        }
        check_len(values.len())?;
    }
    Ok(values)
}

/// Comma-separated floats and inclusive ranges `lo..hi..step` (step
/// defaults to 1). The upper bound is included when it lies within one
/// part in 10^9 of a grid point, so `1.0..1.2..0.1` yields all three
/// values despite accumulated float error.
pub fn parse_f64_values(text: &str) -> Result<Vec<f64>, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let number = |s: &str| {
        let v = s.trim().parse::<f64>().map_err(|_| ParseError::BadNumber(s.trim().into()))?;
        if !v.is_finite() {
            return Err(ParseError::BadNumber(s.trim().into()));
        }
        Ok(v)
    };
    let mut values = Vec::new();
    for item in text.split(',') {
        let parts: Vec<&str> = item.split("..").collect();
        match parts.as_slice() {
            [single] => values.push(number(single)?),
            [lo, hi] | [lo, hi, _] => {
                let (lo, hi) = (number(lo)?, number(hi)?);
                let step = if let [_, _, s] = parts.as_slice() { number(s)? } else { 1.0 };
                if !(step > 0.0) {
                    return Err(ParseError::BadRange { item: item.into(), reason: "step is not positive" });
                }
                if hi < lo {
                    return Err(ParseError::BadRange { item: item.into(), reason: "bounds are reversed" });
                }
                let span = ((hi - lo) / step + 1e-9).floor();
                if span >= MAX_VALUES as f64 {
                    return Err(ParseError::TooManyValues);
                }
                let count = span as usize + 1;
                check_len(values.len() + count)?;
                values.extend((0..count).map(|i| lo + i as f64 * step));
            }
            _ => return Err(ParseError::BadRange { item: item.into(), reason: "too many `..`" }),
        }
        check_len(values.len())?;
    }
    Ok(values)
}

/// One forced coin stream, `ROBOT:FLIPS` with `H`/`T` per round, e.g.
/// `2:HTTH`.
pub fn parse_flip_spec(spec: &str) -> Result<(RobotId, Vec<bool>), ParseError> {
    let bad = |reason| ParseError::BadFlipSpec { spec: spec.into(), reason };
    let (robot, flips) = spec.split_once(':').ok_or_else(|| bad("expected ROBOT:FLIPS"))?;
    let robot: RobotId =
        robot.trim().parse().map_err(|_| bad("robot id is not a positive integer"))?;
    if robot == 0 {
        return Err(bad("robot ids start at 1"));
    }
    if flips.is_empty() {
        return Err(bad("no flips given"));
    }
    let flips = flips
        .chars()
        .map(|c| match c {
            'H' => Ok(true),
            'T' => Ok(false),
            _ => Err(bad("flips must be uppercase H or T")),
        })
        .collect::<Result<Vec<bool>, _>>()?;
    Ok((robot, flips))
}

/// Collects repeated `--flips` arguments, rejecting duplicate robots.
pub fn parse_flips_args<S: AsRef<str>>(
    specs: &[S],
) -> Result<BTreeMap<RobotId, Vec<bool>>, ParseError> {
    let mut map = BTreeMap::new();
    for spec in specs {
        let (robot, flips) = parse_flip_spec(spec.as_ref())?;
        if map.insert(robot, flips).is_some() {
            return Err(ParseError::DuplicateRobot(robot));
        }
    }
    Ok(map)
}

/// `key = value` lines; `#` starts a comment, blank lines are skipped,
/// keys must be unique. Values keep internal `=` signs.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, ParseError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or(ParseError::BadConfigLine { line, reason: "expected key = value" })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ParseError::BadConfigLine { line, reason: "empty key" });
        }
        if value.is_empty() {
            return Err(ParseError::BadConfigLine { line, reason: "empty value" });
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ParseError::DuplicateKey { key: key.into(), line });
        }
    }
    Ok(map)
}
