//! Text formats: long CSV datasets, plain value lists, value pairs and
//! serialized rank transforms. Parse errors carry 1-based line numbers.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::dataset::{LongitudinalDataset, Record};
use crate::distributions::NormalParams;
use crate::error::{Error, Result};
use crate::hist::Histogram;
use crate::rank::RankTransformSpec;

pub const LONG_HEADER: [&str; 4] = ["subject", "session", "measure", "value"];

/// Shortest text that parses back to exactly `v`.
pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}

fn parse_finite(text: &str, line: usize, what: &str) -> Result<f64> {
    let t = text.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::parse(line, format!("{what} `{t}` is not finite"))),
        Err(_) => Err(Error::parse(line, format!("{what} `{t}` is not a number"))),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    match (line, e.kind()) {
        (_, csv::ErrorKind::Io(io)) => Error::Io(io.to_string()),
        (Some(line), _) => Error::parse(line, e.to_string()),
        (None, _) => Error::Io(e.to_string()),
    }
}

/// Source line of every observation, keyed by (measure, session, subject).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LineIndex(HashMap<(String, u32, String), usize>);

impl LineIndex {
    pub fn line(&self, measure: &str, session: u32, subject: &str) -> Option<usize> {
        self.0
            .get(&(measure.to_string(), session, subject.to_string()))
            .copied()
    }

    pub fn insert(&mut self, record: &Record, line: usize) {
        self.0
            .insert((record.measure.clone(), record.session, record.subject.clone()), line);
    }
}

/// Reads a dataset with header `subject,session,measure,value`.
pub fn read_long_csv<R: Read>(reader: R) -> Result<LongitudinalDataset> {
    read_long_csv_located(reader).map(|(d, _)| d)
}

/// As [`read_long_csv`], also returning the line of every observation.
pub fn read_long_csv_located<R: Read>(reader: R) -> Result<(LongitudinalDataset, LineIndex)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(csv_error)?,
        None => {
            return Err(Error::parse(
                1,
                "empty input; expected header `subject,session,measure,value`",
            ))
        }
    };
    if header.iter().ne(LONG_HEADER) {
        return Err(Error::parse(
            1,
            format!(
                "header must be exactly `subject,session,measure,value`, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut data = LongitudinalDataset::new();
    let mut lines = LineIndex::default();
    for row in records {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != 4 {
            return Err(Error::parse(line, format!("expected 4 fields, found {}", row.len())));
        }
        let subject = row[0].trim();
        let measure = row[2].trim();
        if subject.is_empty() || measure.is_empty() {
            return Err(Error::parse(line, "subject and measure must be non-empty"));
        }
        let session = row[1].trim().parse::<u32>().map_err(|_| {
            Error::parse(
                line,
                format!("session `{}` is not a nonnegative integer", row[1].trim()),
            )
        })?;
        let value = parse_finite(&row[3], line, "value")?;
        let record = Record {
            subject: subject.to_string(),
            session,
            measure: measure.to_string(),
            value,
        };
        lines.insert(&record, line);
        data.insert(record).map_err(|e| match e {
            Error::Domain(msg) => Error::parse(line, msg),
            other => other,
        })?;
    }
    Ok((data, lines))
}

/// Writes `records` as long CSV.
pub fn write_records<W: Write, I: IntoIterator<Item = Record>>(writer: W, records: I) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LONG_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record([r.subject, r.session.to_string(), r.measure, format_value(r.value)])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a dataset as long CSV ordered by measure, session, subject.
pub fn write_long_csv<W: Write>(writer: W, data: &LongitudinalDataset) -> Result<()> {
    write_records(writer, data.records())
}

fn read_text<R: Read>(mut reader: R) -> Result<String> {
    let mut s = String::new();
    reader.read_to_string(&mut s)?;
    Ok(s)
}

/// Content lines with their numbers; blank lines and `#` comments are skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// One number per line.
pub fn read_plain<R: Read>(reader: R) -> Result<Vec<f64>> {
    parse_plain(&read_text(reader)?)
}

pub fn parse_plain(text: &str) -> Result<Vec<f64>> {
    content_lines(text)
        .map(|(line, l)| parse_finite(l, line, "value"))
        .collect()
}

/// As [`parse_plain`], pairing each value with its line number.
pub fn parse_plain_located(text: &str) -> Result<Vec<(usize, f64)>> {
    content_lines(text)
        .map(|(line, l)| Ok((line, parse_finite(l, line, "value")?)))
        .collect()
}

pub fn write_plain<W: Write>(mut writer: W, values: &[f64]) -> Result<()> {
    for &v in values {
        writeln!(writer, "{}", format_value(v))?;
    }
    Ok(())
}

/// Two numbers per line, separated by a comma or whitespace.
pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    parse_pairs(&read_text(reader)?)
}

pub fn parse_pairs(text: &str) -> Result<Vec<(f64, f64)>> {
    content_lines(text)
        .map(|(line, l)| {
            let fields: Vec<&str> = l
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            match fields.as_slice() {
                [a, b] => Ok((parse_finite(a, line, "value")?, parse_finite(b, line, "value")?)),
                _ => Err(Error::parse(line, format!("expected 2 values, found {}", fields.len()))),
            }
        })
        .collect()
}

pub fn write_pairs<W: Write>(mut writer: W, pairs: &[(f64, f64)]) -> Result<()> {
    for &(a, b) in pairs {
        writeln!(writer, "{},{}", format_value(a), format_value(b))?;
    }
    Ok(())
}

/// Histogram rows `measure,bin_left,bin_right,count`; the measure column is
/// omitted when every entry is unnamed.
pub fn write_histograms<W: Write>(writer: W, hists: &[(Option<&str>, &Histogram)]) -> Result<()> {
    let named = hists.iter().any(|(m, _)| m.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["bin_left", "bin_right", "count"];
    if named {
        header.insert(0, "measure");
    }
    w.write_record(&header).map_err(csv_error)?;
    for (measure, h) in hists {
        for (l, r, c) in h.bins() {
            let mut row = vec![format_value(l), format_value(r), c.to_string()];
            if named {
                row.insert(0, measure.unwrap_or_default().to_string());
            }
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A serialized rank transform, optionally tagged with the measure it was
/// fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedSpec {
    pub measure: Option<String>,
    pub spec: RankTransformSpec,
}

/// Writes blocks of the form
///
/// ```text
/// rankspec n=5 mu=0.0 sigma=1.0 measure=alpha
/// 0.5<TAB>-1.2815515655446004
/// ...
/// ```
///
/// with one tab-separated `breakpoint score` line per distinct training value.
pub fn write_rank_specs<W: Write>(mut writer: W, specs: &[NamedSpec]) -> Result<()> {
    for NamedSpec { measure, spec } in specs {
        let t = spec.target();
        write!(
            writer,
            "rankspec n={} mu={} sigma={}",
            spec.n(),
            format_value(t.mean),
            format_value(t.sd)
        )?;
        if let Some(m) = measure {
            if m.contains(['\n', '\r']) {
                return Err(Error::domain("measure name contains a line break"));
            }
            write!(writer, " measure={m}")?;
        }
        writeln!(writer)?;
        for (b, s) in spec.breakpoints().iter().zip(spec.scores()) {
            writeln!(writer, "{}\t{}", format_value(*b), format_value(*s))?;
        }
    }
    Ok(())
}

pub fn read_rank_specs<R: Read>(reader: R) -> Result<Vec<NamedSpec>> {
    parse_rank_specs(&read_text(reader)?)
}

struct Block {
    line: usize,
    n: usize,
    target: NormalParams,
    measure: Option<String>,
    breakpoints: Vec<f64>,
    scores: Vec<f64>,
}

impl Block {
    fn finish(self) -> Result<NamedSpec> {
        let line = self.line;
        let spec = RankTransformSpec::from_parts(self.breakpoints, self.scores, self.n, self.target)
            .map_err(|e| Error::parse(line, format!("invalid rank spec: {e}")))?;
        Ok(NamedSpec {
            measure: self.measure,
            spec,
        })
    }
}

fn parse_header(line: usize, text: &str) -> Result<Block> {
    let rest = text
        .strip_prefix("rankspec")
        .filter(|r| r.is_empty() || r.starts_with(char::is_whitespace))
        .ok_or_else(|| Error::parse(line, "expected a `rankspec` header"))?;
    let (fields, measure) = match rest.split_once(" measure=") {
        Some((_, m)) if m.contains('\r') => return Err(Error::parse(line, "measure name contains a line break")),
        Some((f, m)) if !m.trim().is_empty() => (f, Some(m.trim().to_string())),
        Some(_) => return Err(Error::parse(line, "empty measure name")),
        None => (rest, None),
    };
    let (mut n, mut mu, mut sigma) = (None, None, None);
    for field in fields.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected key=value, got `{field}`")))?;
        match key {
            "n" => {
                n = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| Error::parse(line, format!("bad n `{value}`")))?,
                )
            }
            "mu" => mu = Some(parse_finite(value, line, "mu")?),
            "sigma" => sigma = Some(parse_finite(value, line, "sigma")?),
            _ => return Err(Error::parse(line, format!("unknown header field `{key}`"))),
        }
    }
    let missing = |k: &str| Error::parse(line, format!("header lacks `{k}=`"));
    let target = NormalParams::new(mu.ok_or_else(|| missing("mu"))?, sigma.ok_or_else(|| missing("sigma"))?)
        .map_err(|e| Error::parse(line, e.to_string()))?;
    Ok(Block {
        line,
        n: n.ok_or_else(|| missing("n"))?,
        target,
        measure,
        breakpoints: Vec::new(),
        scores: Vec::new(),
    })
}

pub fn parse_rank_specs(text: &str) -> Result<Vec<NamedSpec>> {
    let mut out = Vec::new();
    let mut current: Option<Block> = None;
    for (line, l) in content_lines(text) {
        if l.starts_with("rankspec") {
            if let Some(b) = current.take() {
                out.push(b.finish()?);
            }
            current = Some(parse_header(line, l)?);
            continue;
        }
        let block = current
            .as_mut()
            .ok_or_else(|| Error::parse(line, "data before the first `rankspec` header"))?;
        let mut it = l.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(b), Some(s), None) => {
                block.breakpoints.push(parse_finite(b, line, "breakpoint")?);
                block.scores.push(parse_finite(s, line, "score")?);
            }
            _ => return Err(Error::parse(line, "expected `breakpoint<TAB>score`")),
        }
    }
    match current {
        Some(b) => out.push(b.finish()?),
        None => return Err(Error::parse(1, "no `rankspec` block found")),
    }
    Ok(out)
}
