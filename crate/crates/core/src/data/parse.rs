use std::io::Read;

use super::{DataError, Grade, RawRecord, StudentMetadata};

/// A row the parser refused, with its 1-based line number and reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub records: Vec<RawRecord>,
    pub rejects: Vec<RejectedRow>,
}

const COLUMNS: [&str; 5] = [
    "academic_year",
    "universal_id",
    "course_subject",
    "course_level",
    "grade",
];

/// Parses the record CSV. The header must name all five schema columns;
/// malformed data rows are collected into the rejects report rather than
/// silently dropped.
pub fn parse_records(reader: impl Read) -> Result<ParseOutcome, DataError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(COLUMNS.iter()) {
        *slot = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
    }

    let mut out = ParseOutcome::default();
    for result in rdr.records() {
        let row = result?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&row, &idx) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => out.rejects.push(RejectedRow { line, reason }),
        }
    }
    Ok(out)
}

fn parse_row(row: &csv::StringRecord, idx: &[usize; 5]) -> Result<RawRecord, String> {
    let field = |i: usize| row.get(idx[i]).ok_or_else(|| "missing field".to_string());

    let year: i32 = field(0)?
        .trim()
        .parse()
        .map_err(|_| format!("year parse: '{}'", row.get(idx[0]).unwrap_or("")))?;
    let universal_id = field(1)?.trim().to_string();
    if universal_id.is_empty() {
        return Err("empty universal_id".to_string());
    }
    let subject = field(2)?.trim().to_string();
    if subject.len() != 4 {
        return Err("subject length".to_string());
    }
    let level: u32 = field(3)?
        .trim()
        .parse()
        .map_err(|_| format!("level parse: '{}'", row.get(idx[3]).unwrap_or("")))?;
    if level % 1000 != 0 {
        return Err(format!("level not a multiple of 1000: {level}"));
    }
    let grade = Grade::parse(field(4)?.trim()).map_err(|e| e.to_string())?;
    Ok(RawRecord {
        academic_year: year,
        universal_id,
        course_subject: subject,
        course_level: level,
        grade,
    })
}

/// Parses the student metadata CSV (`universal_id,college,department`).
/// Duplicate student ids are an error.
pub fn parse_metadata(reader: impl Read) -> Result<StudentMetadata, DataError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 3];
    for (slot, name) in idx.iter_mut().zip(["universal_id", "college", "department"]) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
    }
    let mut meta = StudentMetadata::new();
    for result in rdr.records() {
        let row = result?;
        let get = |i: usize| row.get(idx[i]).unwrap_or("").trim().to_string();
        meta.insert(get(0), get(1), get(2))?;
    }
    Ok(meta)
}
