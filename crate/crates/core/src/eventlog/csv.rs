//! Event logs from CSV tables with one row per event.

use std::collections::HashMap;
use std::io::Read;

use super::{EventLog, LogBuilder};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CsvColumns {
    pub case: String,
    pub activity: String,
    /// Numeric column giving the event order inside a case. Rows are kept
    /// in file order when absent; ties keep file order.
    pub order: Option<String>,
}

impl CsvColumns {
    pub fn new(case: impl Into<String>, activity: impl Into<String>) -> Self {
        Self {
            case: case.into(),
            activity: activity.into(),
            order: None,
        }
    }

    pub fn ordered_by(mut self, column: impl Into<String>) -> Self {
        self.order = Some(column.into());
        self
    }
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self::new("case", "activity")
    }
}

pub fn read<R: Read>(source: R, columns: &CsvColumns) -> Result<EventLog> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv { row: 1, message: e.to_string() })?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let case_col = find(&columns.case)?;
    let act_col = find(&columns.activity)?;
    let order_col = columns.order.as_deref().map(find).transpose()?;

    // cases in order of first appearance
    let mut case_index: HashMap<String, usize> = HashMap::new();
    let mut cases: Vec<Vec<(f64, String)>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Csv { row, message: e.to_string() })?;
        let field = |col: usize| record.get(col).unwrap_or("").trim();
        let case = field(case_col).to_string();
        let activity = field(act_col).to_string();
        let order = match order_col {
            Some(col) => field(col).parse::<f64>().ok().filter(|v| !v.is_nan()).ok_or_else(|| Error::Csv {
                row,
                message: format!("unparsable order value {:?}", field(col)),
            })?,
            None => 0.0,
        };
        let idx = *case_index.entry(case).or_insert_with(|| {
            cases.push(Vec::new());
            cases.len() - 1
        });
        cases[idx].push((order, activity));
    }
    if cases.is_empty() {
        return Err(Error::EmptyLog);
    }
    let mut builder = LogBuilder::new();
    for mut events in cases {
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let names: Vec<&str> = events.iter().map(|(_, n)| n.as_str()).collect();
        builder.push_names(&names, 1)?;
    }
    Ok(builder.build())
}
