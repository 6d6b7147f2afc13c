//! Plain-text dump of a [`ConicProblem`].
//!
//! ```text
//! leobeam-conic 1
//! dims <n> <m> <p>
//! cone NONNEG <k> | cone SOC <k> | cone PSD <order>
//! c <n values>
//! h <m values>
//! b <p values>
//! G <n values>      (m rows)
//! A <n values>      (p rows)
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{ConeBlock, ConicProblem};
use crate::error::{Error, Result};

const HEADER: &str = "leobeam-conic 1";

fn write_row(out: &mut String, tag: &str, vals: impl Iterator<Item = f64>) {
    out.push_str(tag);
    for v in vals {
        let _ = write!(out, " {v:?}");
    }
    out.push('\n');
}

pub fn dump_problem(p: &ConicProblem) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "dims {} {} {}", p.num_vars(), p.cone_dim(), p.b.len());
    for c in &p.cones {
        let _ = match *c {
            ConeBlock::NonNeg(k) => writeln!(out, "cone NONNEG {k}"),
            ConeBlock::Soc(k) => writeln!(out, "cone SOC {k}"),
            ConeBlock::Psd(n) => writeln!(out, "cone PSD {n}"),
        };
    }
    write_row(&mut out, "c", p.c.iter().copied());
    write_row(&mut out, "h", p.h.iter().copied());
    write_row(&mut out, "b", p.b.iter().copied());
    for r in 0..p.g.nrows() {
        write_row(&mut out, "G", p.g.row(r).iter().copied());
    }
    for r in 0..p.a.nrows() {
        write_row(&mut out, "A", p.a.row(r).iter().copied());
    }
    out
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("conic problem line {line}: {msg}"))
}

fn parse_floats(line: usize, fields: &[&str], want: usize) -> Result<Vec<f64>> {
    if fields.len() != want {
        return Err(parse_err(
            line,
            format!("expected {want} values, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|e| parse_err(line, format!("{f:?}: {e}")))
        })
        .collect()
}

pub fn load_problem(text: &str) -> Result<ConicProblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    match lines.next() {
        Some((_, l)) if l == HEADER => {}
        Some((i, l)) => return Err(parse_err(i, format!("bad header {l:?}"))),
        None => return Err(parse_err(0, "empty input")),
    }
    let (n, m, p) = match lines.next() {
        Some((i, l)) => {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 4 || f[0] != "dims" {
                return Err(parse_err(i, "expected `dims n m p`"));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|e| parse_err(i, e));
            (num(f[1])?, num(f[2])?, num(f[3])?)
        }
        None => return Err(parse_err(0, "missing dims line")),
    };

    let mut cones = Vec::new();
    let mut c = None;
    let mut h = None;
    let mut b = None;
    let mut g_rows: Vec<Vec<f64>> = Vec::new();
    let mut a_rows: Vec<Vec<f64>> = Vec::new();
    for (i, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        match f[0] {
            "cone" => {
                if f.len() != 3 {
                    return Err(parse_err(i, "expected `cone KIND size`"));
                }
                let k = f[2].parse::<usize>().map_err(|e| parse_err(i, e))?;
                cones.push(match f[1] {
                    "NONNEG" => ConeBlock::NonNeg(k),
                    "SOC" => ConeBlock::Soc(k),
                    "PSD" => ConeBlock::Psd(k),
                    other => return Err(parse_err(i, format!("unknown cone {other:?}"))),
                });
            }
            "c" => c = Some(parse_floats(i, &f[1..], n)?),
            "h" => h = Some(parse_floats(i, &f[1..], m)?),
            "b" => b = Some(parse_floats(i, &f[1..], p)?),
            "G" => g_rows.push(parse_floats(i, &f[1..], n)?),
            "A" => a_rows.push(parse_floats(i, &f[1..], n)?),
            other => return Err(parse_err(i, format!("unknown record {other:?}"))),
        }
    }
    if g_rows.len() != m || a_rows.len() != p {
        return Err(Error::Dimension(format!(
            "found {} G rows and {} A rows, expected {m} and {p}",
            g_rows.len(),
            a_rows.len()
        )));
    }
    let missing = |what| Error::Config(format!("conic problem: missing `{what}` line"));
    let prob = ConicProblem {
        c: DVector::from_vec(c.ok_or_else(|| missing("c"))?),
        h: DVector::from_vec(h.ok_or_else(|| missing("h"))?),
        b: DVector::from_vec(b.ok_or_else(|| missing("b"))?),
        g: DMatrix::from_row_iterator(m, n, g_rows.into_iter().flatten()),
        a: DMatrix::from_row_iterator(p, n, a_rows.into_iter().flatten()),
        cones,
    };
    prob.validate()?;
    Ok(prob)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let p = ConicProblem {
            c: DVector::from_vec(vec![1.0, -0.1, std::f64::consts::PI]),
            g: DMatrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0)),
            h: DVector::from_vec(vec![1e-300, 2.5, -3.0, 7.0 / 3.0]),
            a: DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            b: DVector::from_vec(vec![0.1]),
            cones: vec![ConeBlock::NonNeg(1), ConeBlock::Psd(2)],
        };
        let back = load_problem(&dump_problem(&p)).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_short_rows() {
        let text = "leobeam-conic 1\ndims 2 1 0\ncone NONNEG 1\nc 1 2\nh 0\nb\nG 1\n";
        assert!(load_problem(text).is_err());
    }
}
