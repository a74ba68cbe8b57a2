//! Burmeister context files:
//!
//! ```text
//! B
//!
//! <object count>
//! <attribute count>
//!
//! <object names, one per line>
//! <attribute names, one per line>
//! <one row of X/. per object>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use fixedbitset::FixedBitSet;

use super::{read_text, write_text, IoError};
use crate::explain::FormalContext;

fn check_name(name: &str) -> Result<(), IoError> {
    if name.contains(['\n', '\r']) {
        Err(IoError::InvalidName(name.to_owned()))
    } else {
        Ok(())
    }
}

pub fn write_cxt(ctx: &FormalContext) -> Result<String, IoError> {
    let mut out = String::new();
    writeln!(out, "B\n\n{}\n{}\n", ctx.object_count(), ctx.attribute_count()).unwrap();
    for name in ctx.objects().iter().chain(ctx.attributes()) {
        check_name(name)?;
        out.push_str(name);
        out.push('\n');
    }
    for o in 0..ctx.object_count() {
        for a in 0..ctx.attribute_count() {
            out.push(if ctx.incident(o, a) { 'X' } else { '.' });
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn export_cxt(ctx: &FormalContext, path: &Path) -> Result<(), IoError> {
    write_text(path, &write_cxt(ctx)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), IoError> {
        match self.inner.next() {
            Some((i, l)) => Ok((i + 1, l.trim_end_matches('\r'))),
            None => Err(IoError::format(0, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize, IoError> {
        let (line, text) = self.next(what)?;
        text.trim()
            .parse()
            .map_err(|_| IoError::format(line, format!("expected {what}, found {text:?}")))
    }
}

/// Parses a Burmeister context. The line after `B` is a (possibly empty)
/// context name and is ignored; incidence accepts `X` or `x` for a cross and
/// `.` for no cross.
pub fn parse_cxt(text: &str) -> Result<FormalContext, IoError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (line, header) = lines.next("header")?;
    if header.trim() != "B" {
        return Err(IoError::format(line, "first line must be `B`"));
    }
    lines.next("context name")?;
    let n = lines.count("object count")?;
    let m = lines.count("attribute count")?;
    let (line, blank) = lines.next("blank line")?;
    if !blank.trim().is_empty() {
        return Err(IoError::format(line, "expected a blank line after the counts"));
    }
    let mut objects = Vec::with_capacity(n);
    for _ in 0..n {
        objects.push(lines.next("object name")?.1.to_owned());
    }
    let mut attributes = Vec::with_capacity(m);
    for _ in 0..m {
        attributes.push(lines.next("attribute name")?.1.to_owned());
    }
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, text) = lines.next("incidence row")?;
        let text = text.trim_end();
        if text.chars().count() != m {
            return Err(IoError::format(
                line,
                format!("row has {} cells, expected {m}", text.chars().count()),
            ));
        }
        let mut bits = FixedBitSet::with_capacity(m);
        for (j, c) in text.chars().enumerate() {
            match c {
                'X' | 'x' => bits.insert(j),
                '.' => {}
                other => return Err(IoError::format(line, format!("unexpected cell {other:?}"))),
            }
        }
        rows.push(bits);
    }
    if let Ok((line, extra)) = lines.next("end of file") {
        if !extra.trim().is_empty() {
            return Err(IoError::format(line, "trailing content after the incidence rows"));
        }
    }
    FormalContext::from_rows(objects, attributes, rows)
        .map_err(|e| IoError::format(0, e.to_string()))
}

pub fn read_cxt(path: &Path) -> Result<FormalContext, IoError> {
    parse_cxt(&read_text(path)?)
}
