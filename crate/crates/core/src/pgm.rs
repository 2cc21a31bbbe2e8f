//! Plain (ASCII, `P2`) portable graymap reading and writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Maxval used when writing reconstructions.
pub const WRITE_MAXVAL: u16 = 255;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples, `0..=maxval`.
    pub samples: Vec<u16>,
}

impl Graymap {
    /// Samples scaled to `[0, 1]`.
    pub fn unit_values(&self) -> Vec<f64> {
        let m = f64::from(self.maxval);
        self.samples.iter().map(|&s| f64::from(s) / m).collect()
    }

    /// Quantizes `[0, 1]` values (clamped) to `maxval` levels.
    pub fn from_unit_values(width: usize, height: usize, values: &[f64], maxval: u16) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Pgm(format!("{} values for a {width}x{height} image", values.len())));
        }
        let m = f64::from(maxval);
        let samples = values
            .iter()
            .map(|&v| {
                let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
                (v * m).round() as u16
            })
            .collect();
        Ok(Graymap { width, height, maxval, samples })
    }
}

/// Parses a `P2` graymap; `#` comments run to end of line.
pub fn parse_p2(text: &str) -> Result<Graymap> {
    let mut tokens = text.lines().map(|l| l.split('#').next().unwrap_or("")).flat_map(str::split_whitespace);
    match tokens.next() {
        Some("P2") => {}
        Some(other) => return Err(Error::Pgm(format!("expected magic `P2`, found `{other}`"))),
        None => return Err(Error::Pgm("empty file".into())),
    }
    let mut header = |what: &str| -> Result<usize> {
        let tok = tokens.next().ok_or_else(|| Error::Pgm(format!("missing {what}")))?;
        tok.parse::<usize>().map_err(|_| Error::Pgm(format!("bad {what} `{tok}`")))
    };
    let width = header("width")?;
    let height = header("height")?;
    let maxval = header("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Pgm(format!("degenerate size {width}x{height}")));
    }
    if maxval == 0 || maxval > usize::from(u16::MAX) {
        return Err(Error::Pgm(format!("maxval {maxval} outside 1..=65535")));
    }
    let samples = tokens
        .map(|tok| {
            let v: usize = tok.parse().map_err(|_| Error::Pgm(format!("bad sample `{tok}`")))?;
            if v > maxval {
                return Err(Error::Pgm(format!("sample {v} exceeds maxval {maxval}")));
            }
            Ok(v as u16)
        })
        .collect::<Result<Vec<_>>>()?;
    if samples.len() != width * height {
        return Err(Error::Pgm(format!("expected {} samples, found {}", width * height, samples.len())));
    }
    Ok(Graymap { width, height, maxval: maxval as u16, samples })
}

pub fn read_p2(path: &Path) -> Result<Graymap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_p2(&text)
}

pub fn write_p2<W: Write>(map: &Graymap, mut w: W) -> std::io::Result<()> {
    writeln!(w, "P2")?;
    writeln!(w, "{} {}", map.width, map.height)?;
    writeln!(w, "{}", map.maxval)?;
    for row in map.samples.chunks(map.width) {
        let line: Vec<String> = row.iter().map(u16::to_string).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let text = "P2\n# a comment\n3 2 # trailing\n4\n0 1 2\n3 4 0\n";
        let g = parse_p2(text).unwrap();
        assert_eq!((g.width, g.height, g.maxval), (3, 2, 4));
        assert_eq!(g.samples, vec![0, 1, 2, 3, 4, 0]);
        assert_eq!(g.unit_values()[4], 1.0);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_p2("").is_err());
        assert!(parse_p2("P5\n1 1\n255\n0").is_err());
        assert!(parse_p2("P2\n2 2\n255\n0 0 0").is_err());
        assert!(parse_p2("P2\n1 1\n3\n4").is_err());
        assert!(parse_p2("P2\n0 1\n3\n").is_err());
        assert!(parse_p2("P2\n1 1\nx\n0").is_err());
    }

    #[test]
    fn write_then_parse() {
        let g = Graymap::from_unit_values(2, 2, &[0.0, 0.5, 1.2, f64::NAN], 255).unwrap();
        assert_eq!(g.samples, vec![0, 128, 255, 0]);
        let mut buf = Vec::new();
        write_p2(&g, &mut buf).unwrap();
        assert_eq!(parse_p2(std::str::from_utf8(&buf).unwrap()).unwrap(), g);
    }
}
