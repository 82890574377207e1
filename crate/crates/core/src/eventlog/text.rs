//! Plain-text variant format, one variant per line:
//!
//! ```text
//! 10×a,b,c,x
//! 10×a,b,x,c
//! ```
//!
//! Commas and backslashes inside names are escaped with a backslash. Blank
//! lines and lines starting with `#` are ignored.

use std::io::{BufRead, Write};

use super::{EventLog, LogBuilder};
use crate::error::{Error, Result};

const TIMES: char = '×';

pub fn read<R: BufRead>(reader: R) -> Result<EventLog> {
    let mut builder = LogBuilder::new();
    let mut any = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: &str| Error::VariantFormat {
            line: i + 1,
            message: message.to_string(),
        };
        let (count, rest) = trimmed
            .split_once(TIMES)
            .ok_or_else(|| err("expected `count×activities`"))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| err("multiplicity is not a non-negative integer"))?;
        let names = split_escaped(rest).map_err(&err)?;
        if names.is_empty() {
            return Err(err("variant has no activities"));
        }
        builder.push_names(&names, count)?;
        any = true;
    }
    if !any {
        return Err(Error::EmptyLog);
    }
    Ok(builder.build())
}

pub fn parse(s: &str) -> Result<EventLog> {
    read(s.as_bytes())
}

/// Writes variants in canonical (lexicographic) order.
pub fn write<W: Write>(log: &EventLog, mut out: W) -> Result<()> {
    for (names, count) in log.canonical_variants() {
        let escaped: Vec<String> = names.iter().map(|n| escape(n)).collect();
        writeln!(out, "{count}{TIMES}{}", escaped.join(","))?;
    }
    Ok(())
}

pub fn to_string(log: &EventLog) -> String {
    let mut buf = Vec::new();
    write(log, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("names are UTF-8")
}

fn escape(name: &str) -> String {
    let mut s = String::with_capacity(name.len());
    for c in name.chars() {
        match c {
            ',' | '\\' => {
                s.push('\\');
                s.push(c);
            }
            '\n' => s.push_str("\\n"),
            _ => s.push(c),
        }
    }
    s
}

fn split_escaped(s: &str) -> std::result::Result<Vec<String>, &'static str> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some('n') => cur.push('\n'),
                Some(e @ (',' | '\\')) => cur.push(e),
                _ => return Err("invalid escape sequence"),
            },
            ',' => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    if out.len() == 1 && out[0].is_empty() {
        return Ok(Vec::new());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_worked_example() {
        let log = parse("10×a,b,c,x\n10×a,b,x,c\n# comment\n\n10×a,x,b,c\n").unwrap();
        assert_eq!(log.num_traces(), 30);
        assert_eq!(log.num_variants(), 3);
    }

    #[test]
    fn escaped_names_survive() {
        let log = EventLog::from_variants([(vec!["a,b", "c\\d"], 2)]).unwrap();
        let text = to_string(&log);
        assert_eq!(text, "2×a\\,b,c\\\\d\n");
        assert_eq!(parse(&text).unwrap(), log);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse("abc"), Err(Error::VariantFormat { line: 1, .. })));
        assert!(matches!(parse("x×a"), Err(Error::VariantFormat { .. })));
        assert!(matches!(parse("3×"), Err(Error::VariantFormat { .. })));
        assert!(matches!(parse("# nothing"), Err(Error::EmptyLog)));
    }
}
