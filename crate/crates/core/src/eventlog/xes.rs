//! Minimal XES reading and writing.
//!
//! Only the skeleton `log > trace > event` is interpreted. An event is
//! labelled by its direct `<string key="concept:name">` child; every other
//! attribute is ignored unless [`XesOptions::complete_only`] asks for the
//! `lifecycle:transition` value to be checked.

use std::io::{Read, Write};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{EventLog, LogBuilder};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct XesOptions {
    /// Skip events without `concept:name` instead of failing.
    pub lenient: bool,
    /// Keep only events whose `lifecycle:transition` is `complete`
    /// (events without the attribute are kept).
    pub complete_only: bool,
}

/// Result of reading a XES document.
#[derive(Debug, Clone)]
pub struct XesImport {
    pub log: EventLog,
    /// Trace elements that contributed no event.
    pub dropped_traces: u64,
    /// Events skipped in lenient mode or by the lifecycle filter.
    pub skipped_events: u64,
}

#[derive(Default)]
struct PendingEvent {
    name: Option<String>,
    lifecycle: Option<String>,
}

pub fn read<R: Read>(mut source: R, options: XesOptions) -> Result<XesImport> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    parse_bytes(&bytes, options)
}

pub fn parse_bytes(bytes: &[u8], options: XesOptions) -> Result<XesImport> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().trim_text(true);

    let mut builder = LogBuilder::new();
    let mut buf = Vec::new();
    let mut trace_index = 0usize;
    let mut trace: Option<Vec<String>> = None;
    let mut event: Option<PendingEvent> = None;
    let mut event_index = 0usize;
    // depth of attribute elements nested inside the current event
    let mut attr_depth = 0usize;
    let mut dropped_traces = 0u64;
    let mut skipped_events = 0u64;
    let mut saw_log = false;

    loop {
        let ev = reader.read_event_into(&mut buf).map_err(|e| {
            let (line, column) = line_col(bytes, reader.error_position() as usize);
            Error::Xes {
                line,
                column,
                message: e.to_string(),
            }
        })?;
        let pos = reader.buffer_position() as usize;
        match ev {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(ev, Event::Empty(_));
                match e.local_name().as_ref() {
                    b"log" => saw_log = true,
                    b"trace" if event.is_none() => {
                        if trace.is_some() {
                            return Err(xes_err(bytes, pos, "nested trace element"));
                        }
                        if is_empty {
                            dropped_traces += 1;
                            trace_index += 1;
                        } else {
                            trace = Some(Vec::new());
                            event_index = 0;
                        }
                    }
                    b"event" if event.is_none() && trace.is_some() => {
                        let pending = PendingEvent::default();
                        if is_empty {
                            finish_event(
                                pending,
                                options,
                                trace.as_mut().expect("inside trace"),
                                trace_index,
                                event_index,
                                &mut skipped_events,
                            )?;
                            event_index += 1;
                        } else {
                            event = Some(pending);
                            attr_depth = 0;
                        }
                    }
                    _ => {
                        if let Some(pending) = event.as_mut() {
                            if attr_depth == 0 {
                                read_attribute(e, pending, bytes, pos)?;
                            }
                            if !is_empty {
                                attr_depth += 1;
                            }
                        }
                    }
                }
            }
            Event::End(ref e) => match e.local_name().as_ref() {
                b"event" if attr_depth == 0 && event.is_some() => {
                    let pending = event.take().expect("checked");
                    finish_event(
                        pending,
                        options,
                        trace.as_mut().expect("event outside trace"),
                        trace_index,
                        event_index,
                        &mut skipped_events,
                    )?;
                    event_index += 1;
                }
                b"trace" if event.is_none() => {
                    let names = trace.take().unwrap_or_default();
                    if names.is_empty() {
                        dropped_traces += 1;
                    } else {
                        builder.push_names(&names, 1)?;
                    }
                    trace_index += 1;
                }
                _ => {
                    if event.is_some() && attr_depth > 0 {
                        attr_depth -= 1;
                    }
                }
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !saw_log {
        return Err(xes_err(bytes, bytes.len(), "no <log> element"));
    }
    if trace.is_some() {
        return Err(xes_err(bytes, bytes.len(), "unterminated trace element"));
    }
    let log = builder.build();
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok(XesImport {
        log,
        dropped_traces,
        skipped_events,
    })
}

fn read_attribute(e: &BytesStart<'_>, pending: &mut PendingEvent, bytes: &[u8], pos: usize) -> Result<()> {
    if e.local_name().as_ref() != b"string" {
        return Ok(());
    }
    let mut key = None;
    let mut value = None;
    for attr in e.attributes() {
        let attr = attr.map_err(|err| xes_err(bytes, pos, &err.to_string()))?;
        let v = attr
            .unescape_value()
            .map_err(|err| xes_err(bytes, pos, &err.to_string()))?
            .into_owned();
        match attr.key.as_ref() {
            b"key" => key = Some(v),
            b"value" => value = Some(v),
            _ => {}
        }
    }
    match key.as_deref() {
        Some("concept:name") => pending.name = value,
        Some("lifecycle:transition") => pending.lifecycle = value,
        _ => {}
    }
    Ok(())
}

fn finish_event(
    pending: PendingEvent,
    options: XesOptions,
    trace: &mut Vec<String>,
    trace_index: usize,
    event_index: usize,
    skipped: &mut u64,
) -> Result<()> {
    if options.complete_only {
        if let Some(lc) = &pending.lifecycle {
            if !lc.eq_ignore_ascii_case("complete") {
                *skipped += 1;
                return Ok(());
            }
        }
    }
    match pending.name {
        Some(name) if !name.is_empty() => trace.push(name),
        _ if options.lenient => *skipped += 1,
        _ => {
            return Err(Error::MissingConceptName {
                trace: trace_index,
                event: event_index,
            })
        }
    }
    Ok(())
}

fn line_col(bytes: &[u8], offset: usize) -> (usize, usize) {
    let offset = offset.min(bytes.len());
    let before = &bytes[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let column = offset - before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

fn xes_err(bytes: &[u8], offset: usize, message: &str) -> Error {
    let (line, column) = line_col(bytes, offset);
    Error::Xes {
        line,
        column,
        message: message.to_string(),
    }
}

/// Writes the log as XES, expanding every variant into `multiplicity`
/// trace elements. Variants are emitted in canonical order.
pub fn write<W: Write>(log: &EventLog, mut out: W) -> Result<()> {
    use quick_xml::escape::escape;

    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(out, r#"<log xes.version="1.0" xmlns="http://www.xes-standard.org/">"#)?;
    writeln!(
        out,
        r#"  <extension name="Concept" prefix="concept" uri="http://www.xes-standard.org/concept.xesext"/>"#
    )?;
    let mut case = 0u64;
    for (names, count) in log.canonical_variants() {
        for _ in 0..count {
            writeln!(out, "  <trace>")?;
            writeln!(out, r#"    <string key="concept:name" value="case_{case}"/>"#)?;
            for n in &names {
                writeln!(out, "    <event>")?;
                writeln!(out, r#"      <string key="concept:name" value="{}"/>"#, escape(*n))?;
                writeln!(out, "    </event>")?;
            }
            writeln!(out, "  </trace>")?;
            case += 1;
        }
    }
    writeln!(out, "</log>")?;
    Ok(())
}

pub fn to_string(log: &EventLog) -> String {
    let mut buf = Vec::new();
    write(log, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("XES output is UTF-8")
}
