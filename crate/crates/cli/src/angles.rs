//! Angles written as plain numbers or multiples of pi (`pi/8`, `-3pi/4`, `5*pi/8`).

use std::f64::consts::PI;

pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read angle `{text}`");
    let Some((head, tail)) = s.split_once("pi") else {
        return s.parse::<f64>().map_err(|_| bad());
    };
    let head = head.strip_suffix('*').unwrap_or(head);
    let coeff = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let divisor = match tail {
        "" => 1.0,
        t => t
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .ok_or_else(bad)?,
    };
    if divisor == 0.0 {
        return Err(bad());
    }
    Ok(coeff * PI / divisor)
}

/// Comma-separated list of angles.
pub fn parse_angles(text: &str) -> Result<Vec<f64>, String> {
    text.split(',').map(parse_angle).collect()
}
