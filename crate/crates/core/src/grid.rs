//! Text grid format (v1) for point sets.
//!
//! ```text
//! linefree-grid v1
//! p=5 n=3 k=5
//! layer 0
//! XXXX.
//! ...
//! ```
//!
//! Each block is keyed by the first `n - 2` coordinates (`layer -` when
//! `n = 2`). Inside a block, row `r` holds the points whose coordinate
//! `n - 2` equals `r` and column `c` those whose last coordinate equals `c`.
//! Sets over F_p^1 are written as a single `layer -` block with one row.
//! Lines starting with `#` are ignored by the parser.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::geometry::SpaceSpec;
use crate::pointset::PointSet;

pub const MAGIC: &str = "linefree-grid v1";

/// A parsed grid file: the set plus the progression length it is meant for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridDocument {
    pub k: u32,
    pub set: PointSet,
}

fn grid_shape(space: &SpaceSpec) -> (usize, usize, usize) {
    let p = space.p() as usize;
    match space.n() {
        1 => (1, 1, p),
        n => (p.pow(n - 2), p, p),
    }
}

/// Renders `set` deterministically; empty layers are omitted.
pub fn render_grid(set: &PointSet, k: u32) -> String {
    let space = set.space();
    let p = space.p() as usize;
    let n = space.n() as usize;
    let (blocks, rows, cols) = grid_shape(&space);
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "p={} n={} k={}", space.p(), space.n(), k).unwrap();

    let mut key = vec![0u32; n.saturating_sub(2)];
    let mut first = true;
    // Keys in lexicographic order: the first key coordinate varies slowest.
    for ord in 0..blocks {
        let mut o = ord;
        for slot in key.iter_mut().rev() {
            *slot = (o % p) as u32;
            o /= p;
        }
        let key_offset = key
            .iter()
            .rev()
            .fold(0usize, |acc, &c| acc * p + c as usize);
        let cell = |r: usize, c: usize| -> usize {
            if n == 1 {
                c
            } else {
                key_offset + blocks * (r + p * c)
            }
        };
        if !(0..rows).any(|r| (0..cols).any(|c| set.contains(cell(r, c)))) {
            continue;
        }
        if !first {
            out.push('\n');
        }
        first = false;
        if n <= 2 {
            out.push_str("layer -\n");
        } else {
            let label: Vec<String> = key.iter().map(|c| c.to_string()).collect();
            writeln!(out, "layer {}", label.join(",")).unwrap();
        }
        for r in 0..rows {
            for c in 0..cols {
                out.push(if set.contains(cell(r, c)) { 'X' } else { '.' });
            }
            out.push('\n');
        }
    }
    out
}

/// Standalone TikZ picture with one grid per nonempty block, in the same
/// block order as [`render_grid`]; point `(r, c)` of a block is drawn at
/// `(r, c)`.
pub fn render_tikz(set: &PointSet) -> String {
    let space = set.space();
    let p = space.p() as usize;
    let n = space.n() as usize;
    let (blocks, rows, cols) = grid_shape(&space);
    let mut out = String::new();
    out.push_str(
        "\\documentclass[tikz]{standalone}\n\\begin{document}\n\\begin{tikzpicture}[scale=0.5]\n",
    );
    let mut slot = 0;
    for ord in 0..blocks {
        let mut key = vec![0usize; n.saturating_sub(2)];
        let mut o = ord;
        for k in key.iter_mut().rev() {
            *k = o % p;
            o /= p;
        }
        let key_offset = key.iter().rev().fold(0usize, |acc, &c| acc * p + c);
        let cell = |r: usize, c: usize| {
            if n == 1 {
                c
            } else {
                key_offset + blocks * (r + p * c)
            }
        };
        let pts: Vec<(usize, usize)> = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .filter(|&(r, c)| set.contains(cell(r, c)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let label: Vec<String> = key.iter().map(|c| c.to_string()).collect();
        writeln!(
            out,
            "% layer {}",
            if label.is_empty() {
                "-".to_string()
            } else {
                label.join(",")
            }
        )
        .unwrap();
        writeln!(out, "\\begin{{scope}}[xshift={}cm]", slot * (rows + 1)).unwrap();
        writeln!(
            out,
            "\\draw[gray!40] (0,0) grid ({},{});",
            rows - 1,
            cols - 1
        )
        .unwrap();
        for (r, c) in pts {
            writeln!(out, "\\fill ({r},{c}) circle (0.2);").unwrap();
        }
        out.push_str("\\end{scope}\n");
        slot += 1;
    }
    out.push_str("\\end{tikzpicture}\n\\end{document}\n");
    out
}

/// Parses a grid document.
pub fn parse_grid(text: &str) -> Result<GridDocument> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.starts_with('#'))
        .peekable();
    let err = |line: usize, msg: String| Error::Parse { line, msg };

    let (ln, magic) = lines
        .next()
        .ok_or_else(|| err(1, "empty document".into()))?;
    if magic.trim() != MAGIC {
        return Err(err(ln, format!("expected `{MAGIC}`")));
    }
    let (ln, header) = lines
        .next()
        .ok_or_else(|| err(ln + 1, "missing `p=.. n=.. k=..` header".into()))?;
    let (p, n, k) = parse_header(header).map_err(|m| err(ln, m))?;
    let space = SpaceSpec::new(p, n).map_err(|e| err(ln, e.to_string()))?;
    if k < 3 || k > p {
        return Err(err(ln, format!("k = {k} must lie in [3, {p}]")));
    }
    let (blocks, rows, cols) = grid_shape(&space);
    let pu = p as usize;
    let key_len = (n as usize).saturating_sub(2);
    let mut set = PointSet::empty(space);
    let mut seen = vec![false; blocks];

    while let Some((ln, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let label = line
            .strip_prefix("layer ")
            .ok_or_else(|| err(ln, format!("expected `layer ...`, found `{line}`")))?
            .trim();
        let key: Vec<u32> = if key_len == 0 {
            if label != "-" {
                return Err(err(ln, format!("expected `layer -` for n = {n}")));
            }
            Vec::new()
        } else {
            let parts: Vec<&str> = label.split(',').collect();
            if parts.len() != key_len {
                return Err(err(ln, format!("layer key needs {key_len} coordinates")));
            }
            parts
                .iter()
                .map(|s| match s.trim().parse::<u32>() {
                    Ok(v) if v < p => Ok(v),
                    _ => Err(err(ln, format!("bad layer coordinate `{s}`"))),
                })
                .collect::<Result<_>>()?
        };
        let key_offset = key
            .iter()
            .rev()
            .fold(0usize, |acc, &c| acc * pu + c as usize);
        if std::mem::replace(&mut seen[key_offset], true) {
            return Err(err(ln, format!("duplicate layer `{label}`")));
        }
        for r in 0..rows {
            let (rl, row) = lines
                .next()
                .ok_or_else(|| err(ln + r + 1, format!("layer `{label}` needs {rows} rows")))?;
            if row.chars().count() != cols {
                return Err(err(
                    rl,
                    format!("row has {} columns, expected {cols}", row.chars().count()),
                ));
            }
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    'X' => {
                        let idx = if n == 1 {
                            c
                        } else {
                            key_offset + blocks * (r + pu * c)
                        };
                        set.insert(idx);
                    }
                    '.' => {}
                    other => return Err(err(rl, format!("illegal character `{other}`"))),
                }
            }
        }
        if let Some((bl, next)) = lines.peek() {
            if !next.trim().is_empty() && !next.starts_with("layer ") {
                return Err(err(
                    *bl,
                    format!("layer `{label}` has more than {rows} rows"),
                ));
            }
        }
    }
    Ok(GridDocument { k, set })
}

fn parse_header(line: &str) -> std::result::Result<(u32, u32, u32), String> {
    let mut p = None;
    let mut n = None;
    let mut k = None;
    for tok in line.split_whitespace() {
        let (name, value) = tok
            .split_once('=')
            .ok_or_else(|| format!("bad header token `{tok}`"))?;
        let value: u32 = value.parse().map_err(|_| format!("bad value in `{tok}`"))?;
        match name {
            "p" => p = Some(value),
            "n" => n = Some(value),
            "k" => k = Some(value),
            _ => return Err(format!("unknown header field `{name}`")),
        }
    }
    match (p, n, k) {
        (Some(p), Some(n), Some(k)) => Ok((p, n, k)),
        _ => Err("header must define p, n and k".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_small_square() {
        let s = SpaceSpec::new(3, 2).unwrap();
        let sq = PointSet::from_coords(s, [[0i64, 0], [0, 1], [1, 0], [1, 1]]).unwrap();
        let text = render_grid(&sq, 3);
        assert_eq!(
            text,
            "linefree-grid v1\np=3 n=2 k=3\nlayer -\nXX.\nXX.\n...\n"
        );
        assert_eq!(parse_grid(&text).unwrap().set, sq);
    }

    #[test]
    fn tikz_has_one_scope_per_layer() {
        let s = SpaceSpec::new(3, 3).unwrap();
        let set = PointSet::from_coords(s, [[2i64, 0, 1], [0, 2, 2], [0, 1, 1]]).unwrap();
        let tikz = render_tikz(&set);
        assert_eq!(tikz.matches("\\begin{scope}").count(), 2);
        assert_eq!(tikz.matches("circle").count(), 3);
        assert!(tikz.contains("\\fill (2,2) circle"));
        assert!(tikz.starts_with("\\documentclass"));
    }

    #[test]
    fn layers_need_no_blank_separator() {
        let text =
            "linefree-grid v1\np=3 n=3 k=3\nlayer 0\nX..\n...\n...\nlayer 2\n...\n...\n..X\n";
        let doc = parse_grid(text).unwrap();
        assert_eq!(doc.set.len(), 2);
        assert!(
            parse_grid("linefree-grid v1\np=3 n=3 k=3\nlayer 0\nX..\n...\n...\nX..\n").is_err()
        );
    }

    #[test]
    fn empty_document() {
        let doc = parse_grid("linefree-grid v1\np=5 n=2 k=5\n").unwrap();
        assert!(doc.set.is_empty());
        assert_eq!(doc.k, 5);
        assert_eq!(render_grid(&doc.set, 5), "linefree-grid v1\np=5 n=2 k=5\n");
    }

    #[test]
    fn layer_keys_and_orientation() {
        let s = SpaceSpec::new(3, 3).unwrap();
        let set = PointSet::from_coords(s, [[2i64, 0, 1], [0, 2, 2]]).unwrap();
        let text = render_grid(&set, 3);
        assert_eq!(
            text,
            "linefree-grid v1\np=3 n=3 k=3\nlayer 0\n...\n...\n..X\n\nlayer 2\n.X.\n...\n...\n"
        );
        assert_eq!(parse_grid(&text).unwrap().set, set);
    }

    #[test]
    fn four_dimensional_keys() {
        let s = SpaceSpec::new(3, 4).unwrap();
        let set = PointSet::from_coords(s, [[1i64, 2, 0, 1], [2, 0, 1, 1]]).unwrap();
        let text = render_grid(&set, 3);
        assert!(text.contains("layer 1,2\n"));
        assert!(text.contains("layer 2,0\n"));
        assert!(text.find("layer 1,2").unwrap() < text.find("layer 2,0").unwrap());
        assert_eq!(parse_grid(&text).unwrap().set, set);
    }

    #[test]
    fn one_dimensional_sets() {
        let s = SpaceSpec::new(5, 1).unwrap();
        let set = PointSet::from_indices(s, [0, 1, 3]).unwrap();
        let text = render_grid(&set, 5);
        assert_eq!(text, "linefree-grid v1\np=5 n=1 k=5\nlayer -\nXX.X.\n");
        assert_eq!(parse_grid(&text).unwrap().set, set);
    }

    #[test]
    fn comments_and_crlf() {
        let text = "# fig\r\nlinefree-grid v1\r\np=3 n=2 k=3\r\n# body\r\nlayer -\r\nX..\r\n...\r\n..X\r\n";
        assert_eq!(parse_grid(text).unwrap().set.len(), 2);
    }

    fn parse_err(text: &str) -> (usize, String) {
        match parse_grid(text) {
            Err(Error::Parse { line, msg }) => (line, msg),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(parse_err("nope\n").0, 1);
        assert_eq!(parse_err("linefree-grid v1\np=4 n=2 k=3\n").0, 2);
        assert_eq!(parse_err("linefree-grid v1\np=5 n=2\n").0, 2);
        assert_eq!(
            parse_err("linefree-grid v1\np=3 n=2 k=3\nlayer -\nXX\n").0,
            4
        );
        assert_eq!(
            parse_err("linefree-grid v1\np=3 n=2 k=3\nlayer -\nXX.\nXo.\n...\n").0,
            5
        );
        assert_eq!(
            parse_err("linefree-grid v1\np=3 n=2 k=3\nlayer -\nXX.\n").0,
            5
        );
        assert_eq!(
            parse_err("linefree-grid v1\np=3 n=3 k=3\nlayer 3\n...\n...\n...\n").0,
            3
        );
        let (line, msg) =
            parse_err("linefree-grid v1\np=3 n=2 k=3\nlayer -\n...\n...\n...\n....\n");
        assert_eq!(line, 7);
        assert!(msg.contains("more than"));
        let dup =
            "linefree-grid v1\np=3 n=3 k=3\nlayer 0\n...\n...\n...\n\nlayer 0\n...\n...\n...\n";
        assert_eq!(parse_err(dup).0, 8);
    }
}
