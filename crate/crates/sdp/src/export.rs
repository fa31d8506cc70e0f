//! Plain-text sparse triplet format for cross-checking against external
//! solvers.
//!
//! ```text
//! # pep-forge sdp v1: minimize <C,X> s.t. <A_i,X> = b_i
//! blocks <count>
//! psd <n> | nonneg <n> | free <n>        (one line per block)
//! objective <count>
//! <block> <row> <col> <value>
//! rhs <m>
//! <value>                                 (one line per equality)
//! constraints <count>
//! <equality> <block> <row> <col> <value>
//! ```
//!
//! Indices are zero-based; matrix entries list the upper triangle only.

use std::fmt::Write as _;

use crate::{Block, Entry, LinearForm, SdpError, StandardSdp};

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

pub fn write_triplets(sdp: &StandardSdp) -> String {
    let mut out = String::new();
    out.push_str("# pep-forge sdp v1: minimize <C,X> s.t. <A_i,X> = b_i\n");
    let _ = writeln!(out, "blocks {}", sdp.blocks.len());
    for b in &sdp.blocks {
        let _ = match b {
            Block::Psd(n) => writeln!(out, "psd {n}"),
            Block::NonNeg(n) => writeln!(out, "nonneg {n}"),
            Block::Free(n) => writeln!(out, "free {n}"),
        };
    }
    let obj = sdp.objective.canonical();
    let _ = writeln!(out, "objective {}", obj.entries.len());
    for e in &obj.entries {
        let _ = writeln!(out, "{} {} {} {}", e.block, e.row, e.col, num(e.value));
    }
    let _ = writeln!(out, "rhs {}", sdp.equalities.len());
    for (_, rhs) in &sdp.equalities {
        let _ = writeln!(out, "{}", num(*rhs));
    }
    let rows: Vec<LinearForm> = sdp.equalities.iter().map(|(f, _)| f.canonical()).collect();
    let count: usize = rows.iter().map(|r| r.entries.len()).sum();
    let _ = writeln!(out, "constraints {count}");
    for (i, r) in rows.iter().enumerate() {
        for e in &r.entries {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                i,
                e.block,
                e.row,
                e.col,
                num(e.value)
            );
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>, SdpError> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            return Ok(l.split_whitespace().collect());
        }
        Err(self.err("unexpected end of input"))
    }

    fn err(&self, msg: &str) -> SdpError {
        SdpError::Parse {
            line: self.line,
            msg: msg.to_string(),
        }
    }

    fn header(&mut self, key: &str) -> Result<usize, SdpError> {
        let t = self.next()?;
        if t.len() != 2 || t[0] != key {
            return Err(self.err(&format!("expected `{key} <count>`")));
        }
        self.parse(t[1])
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T, SdpError> {
        s.parse()
            .map_err(|_| self.err(&format!("cannot parse `{s}`")))
    }
}

pub fn read_triplets(text: &str) -> Result<StandardSdp, SdpError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let nb = lines.header("blocks")?;
    let mut blocks = Vec::with_capacity(nb);
    for _ in 0..nb {
        let t = lines.next()?;
        if t.len() != 2 {
            return Err(lines.err("expected `<kind> <size>`"));
        }
        let n: usize = lines.parse(t[1])?;
        blocks.push(match t[0] {
            "psd" => Block::Psd(n),
            "nonneg" => Block::NonNeg(n),
            "free" => Block::Free(n),
            other => return Err(lines.err(&format!("unknown block kind `{other}`"))),
        });
    }
    let mut sdp = StandardSdp::new(blocks);
    let no = lines.header("objective")?;
    for _ in 0..no {
        let t = lines.next()?;
        if t.len() != 4 {
            return Err(lines.err("expected `<block> <row> <col> <value>`"));
        }
        sdp.objective.entries.push(Entry::new(
            lines.parse(t[0])?,
            lines.parse(t[1])?,
            lines.parse(t[2])?,
            lines.parse(t[3])?,
        ));
    }
    let m = lines.header("rhs")?;
    for _ in 0..m {
        let t = lines.next()?;
        if t.len() != 1 {
            return Err(lines.err("expected a single value"));
        }
        sdp.equalities
            .push((LinearForm::default(), lines.parse(t[0])?));
    }
    let nc = lines.header("constraints")?;
    for _ in 0..nc {
        let t = lines.next()?;
        if t.len() != 5 {
            return Err(lines.err("expected `<equality> <block> <row> <col> <value>`"));
        }
        let i: usize = lines.parse(t[0])?;
        if i >= m {
            return Err(lines.err("equality index out of range"));
        }
        let e = Entry::new(
            lines.parse(t[1])?,
            lines.parse(t[2])?,
            lines.parse(t[3])?,
            lines.parse(t[4])?,
        );
        sdp.equalities[i].0.entries.push(e);
    }
    sdp.validate()?;
    Ok(sdp)
}
