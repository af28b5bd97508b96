//! Line-oriented text form of a construction.
//!
//! ```text
//! G beta eta eps M
//! j n_j a_j b_j        (one line per phase, j = 1..=M+1)
//! p g_p
//! ```
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly. Blank lines and lines starting with `#` are ignored.

use super::construction::{ConstructionResult, HardFnParams};
use super::piecewise::Interval;
use crate::error::{Error, Result};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_text(cr: &ConstructionResult) -> String {
    let p = cr.params;
    let mut out = format!("{} {} {} {} {}\n", num(p.g), num(p.beta), num(p.eta), num(p.eps), cr.m);
    for (j, iv) in cr.phase_intervals.iter().enumerate() {
        out.push_str(&format!("{} {} {} {}\n", j + 1, cr.checkpoints[j], num(iv.a), num(iv.b)));
    }
    let pl = cr.f_m_plus.plateau().expect("constructions carry a plateau");
    out.push_str(&format!("{} {}\n", num(pl.p), num(pl.g_p)));
    out
}

fn parse_err(line: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        line,
        detail: detail.into(),
    }
}

fn fields(line: usize, text: &str, expect: usize) -> Result<Vec<&str>> {
    let f: Vec<&str> = text.split_whitespace().collect();
    if f.len() != expect {
        return Err(parse_err(line, format!("expected {expect} fields, found {}", f.len())));
    }
    Ok(f)
}

fn float(line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| parse_err(line, format!("cannot parse `{s}` as a number")))
}

fn int(line: usize, s: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| parse_err(line, format!("cannot parse `{s}` as an integer")))
}

pub fn from_text(text: &str) -> Result<ConstructionResult> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines.next().ok_or_else(|| parse_err(0, "empty input"))?;
    let h = fields(ln, header, 5)?;
    let params = HardFnParams::new(float(ln, h[0])?, float(ln, h[1])?, float(ln, h[2])?, float(ln, h[3])?)
        .map_err(|e| parse_err(ln, e.to_string()))?;
    let m = int(ln, h[4])?;
    if m == 0 {
        return Err(parse_err(ln, "M must be at least 1"));
    }

    let mut intervals = Vec::with_capacity(m + 1);
    for j in 1..=m + 1 {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("missing interval line for phase {j}")))?;
        let f = fields(ln, l, 4)?;
        if int(ln, f[0])? != j {
            return Err(parse_err(ln, format!("expected phase index {j}, found `{}`", f[0])));
        }
        let n_j = int(ln, f[1])?;
        if n_j != params.checkpoint(j) {
            return Err(parse_err(
                ln,
                format!("checkpoint n_{j} = {n_j} disagrees with the parameters ({})", params.checkpoint(j)),
            ));
        }
        let (a, b) = (float(ln, f[2])?, float(ln, f[3])?);
        if !(a <= b) {
            return Err(parse_err(ln, format!("interval [{a}, {b}] is reversed")));
        }
        intervals.push(Interval::new(a, b));
    }

    let (ln, l) = lines.next().ok_or_else(|| parse_err(0, "missing plateau line"))?;
    let f = fields(ln, l, 2)?;
    let (p, g_p) = (float(ln, f[0])?, float(ln, f[1])?);
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "unexpected trailing content"));
    }

    let cr = ConstructionResult::from_parts(params, intervals).map_err(|e| parse_err(ln, e.to_string()))?;
    let pl = cr.f_m_plus.plateau().expect("plateau present");
    if pl.p != p || pl.g_p != g_p {
        return Err(parse_err(
            ln,
            format!("plateau ({p:e}, {g_p:e}) does not match the intervals ({:e}, {:e})", pl.p, pl.g_p),
        ));
    }
    Ok(cr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardfn::build_hard_function;

    #[test]
    fn round_trip_is_bitwise() {
        let cr = build_hard_function(HardFnParams::new(1.0, 1.0, 0.5, 1e-6).unwrap()).unwrap();
        let text = to_text(&cr);
        let back = from_text(&text).unwrap();
        assert_eq!(back, cr);
        assert_eq!(to_text(&back), text);
    }

    #[test]
    fn rejects_malformed_input() {
        let cr = build_hard_function(HardFnParams::new(1.0, 1.0, 1.0, 0.01).unwrap()).unwrap();
        let text = to_text(&cr);
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        assert!(matches!(from_text(&lines.join("\n")), Err(Error::Parse { .. })));
        let bad = text.replacen(" 30 ", " 31 ", 1);
        assert!(matches!(from_text(&bad), Err(Error::Parse { line: 2, .. })));
        assert!(from_text("").is_err());
        assert!(from_text("1 1 1 x 2").is_err());
    }
}
