//! Embedding-stream interchange format.
//!
//! A stream carries one header followed by `record_count` word instances.
//! Two encodings share the same information:
//!
//! * **binary**: magic `SEMB`, `u32` version, `u32` dim, length-prefixed
//!   `model_id` and `corpus_label`, `u64` record count, then per record a
//!   length-prefixed word type, `u64` instance id, length-prefixed sentence
//!   and `dim` little-endian `f32` components. All integers little-endian,
//!   all length prefixes `u32` byte counts of UTF-8 text.
//! * **jsonl**: a header object on the first line, then one
//!   `{"w","id","sent","vec"}` object per line.
//!
//! Vectors are stored exactly as the embedder produced them. Callers
//! normalize at read time with [`InstanceRecord::unit_vector`].

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SEMB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamHeader {
    pub version: u32,
    pub dim: u32,
    pub model_id: String,
    pub corpus_label: String,
    pub record_count: u64,
}

impl StreamHeader {
    pub fn new(dim: u32, model_id: impl Into<String>, corpus_label: impl Into<String>) -> Self {
        StreamHeader {
            version: VERSION,
            dim,
            model_id: model_id.into(),
            corpus_label: corpus_label.into(),
            record_count: 0,
        }
    }

    pub fn with_record_count(mut self, record_count: u64) -> Self {
        self.record_count = record_count;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }
}

/// One occurrence of a word type in a sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecord {
    pub word_type: String,
    pub instance_id: u64,
    pub sentence: String,
    pub vector: Vec<f32>,
}

impl InstanceRecord {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.word_type.is_empty() {
            return Err(Error::invalid("empty word type"));
        }
        if self.word_type.chars().any(char::is_uppercase) {
            return Err(Error::invalid(format!(
                "word type {:?} is not lowercase",
                self.word_type
            )));
        }
        if self.vector.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.vector.len(),
            });
        }
        if self.vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if self.vector.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(())
    }

    /// The record's vector widened to `f64` and scaled to unit length.
    pub fn unit_vector(&self) -> Result<Vec<f64>> {
        let wide: Vec<f64> = self.vector.iter().map(|&v| f64::from(v)).collect();
        normalize(&wide)
    }
}

/// Scale `vector` to unit Euclidean norm.
///
/// The vector is first divided by its largest absolute component so that
/// neither tiny nor huge inputs under- or overflow when squared.
pub fn normalize(vector: &[f64]) -> Result<Vec<f64>> {
    if vector.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::ZeroVector);
    }
    let scaled: Vec<f64> = vector.iter().map(|v| v / scale).collect();
    let norm = scaled.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(scaled.into_iter().map(|v| v / norm).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Binary,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Binary => "semb",
            Format::Jsonl => "jsonl",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Format::Binary),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::invalid(format!(
                "unknown stream format {other:?} (expected binary or jsonl)"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Binary => "binary",
            Format::Jsonl => "jsonl",
        })
    }
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    w: &'a str,
    id: u64,
    sent: &'a str,
    // Widened so every f32 survives the text round trip bit-exactly.
    vec: Vec<f64>,
}

#[derive(Deserialize)]
struct JsonRecordIn {
    w: String,
    id: u64,
    sent: String,
    vec: Vec<f64>,
}

/// Incremental writer. The header's `record_count` is written up front and
/// checked against the number of records actually written in [`finish`].
///
/// [`finish`]: StreamWriter::finish
pub struct StreamWriter<W: Write> {
    out: W,
    header: StreamHeader,
    format: Format,
    written: u64,
    seen_ids: HashSet<u64>,
}

impl<W: Write> StreamWriter<W> {
    pub fn new(mut out: W, header: StreamHeader, format: Format) -> Result<Self> {
        validate_header(&header, 0)?;
        match format {
            Format::Binary => {
                out.write_all(MAGIC)?;
                out.write_all(&header.version.to_le_bytes())?;
                out.write_all(&header.dim.to_le_bytes())?;
                write_text(&mut out, &header.model_id)?;
                write_text(&mut out, &header.corpus_label)?;
                out.write_all(&header.record_count.to_le_bytes())?;
            }
            Format::Jsonl => {
                serde_json::to_writer(&mut out, &header)
                    .map_err(|e| Error::Io(io::Error::other(e)))?;
                out.write_all(b"\n")?;
            }
        }
        Ok(StreamWriter {
            out,
            header,
            format,
            written: 0,
            seen_ids: HashSet::new(),
        })
    }

    pub fn write_record(&mut self, record: &InstanceRecord) -> Result<()> {
        record.validate(self.header.dim())?;
        if !self.seen_ids.insert(record.instance_id) {
            return Err(Error::invalid(format!(
                "duplicate instance_id {}",
                record.instance_id
            )));
        }
        if self.written >= self.header.record_count {
            return Err(Error::invalid(format!(
                "more records than the declared record_count {}",
                self.header.record_count
            )));
        }
        match self.format {
            Format::Binary => {
                write_text(&mut self.out, &record.word_type)?;
                self.out.write_all(&record.instance_id.to_le_bytes())?;
                write_text(&mut self.out, &record.sentence)?;
                for v in &record.vector {
                    self.out.write_all(&v.to_le_bytes())?;
                }
            }
            Format::Jsonl => {
                let json = JsonRecordOut {
                    w: &record.word_type,
                    id: record.instance_id,
                    sent: &record.sentence,
                    vec: record.vector.iter().map(|&v| f64::from(v)).collect(),
                };
                serde_json::to_writer(&mut self.out, &json)
                    .map_err(|e| Error::Io(io::Error::other(e)))?;
                self.out.write_all(b"\n")?;
            }
        }
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.record_count {
            return Err(Error::invalid(format!(
                "header declares {} records but {} were written",
                self.header.record_count, self.written
            )));
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

fn write_text<W: Write>(out: &mut W, text: &str) -> Result<()> {
    let len = u32::try_from(text.len())
        .map_err(|_| Error::invalid("text field longer than u32::MAX bytes"))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn validate_header(header: &StreamHeader, offset: u64) -> Result<()> {
    if header.version != VERSION {
        return Err(Error::UnsupportedVersion {
            version: header.version,
            offset,
        });
    }
    if header.dim == 0 {
        return Err(Error::Malformed {
            what: "header",
            offset,
            message: "dim must be positive".into(),
        });
    }
    Ok(())
}

/// Write a complete stream in one call.
pub fn write_stream<W: Write>(
    out: W,
    header: &StreamHeader,
    records: &[InstanceRecord],
    format: Format,
) -> Result<W> {
    if header.record_count != records.len() as u64 {
        return Err(Error::invalid(format!(
            "header declares {} records but {} were supplied",
            header.record_count,
            records.len()
        )));
    }
    let mut writer = StreamWriter::new(out, header.clone(), format)?;
    for record in records {
        writer.write_record(record)?;
    }
    writer.finish()
}

pub fn to_bytes(header: &StreamHeader, records: &[InstanceRecord], format: Format) -> Result<Vec<u8>> {
    write_stream(Vec::new(), header, records, format)
}

pub fn write_path(
    path: impl AsRef<Path>,
    header: &StreamHeader,
    records: &[InstanceRecord],
    format: Format,
) -> Result<()> {
    let file = File::create(path)?;
    write_stream(BufWriter::new(file), header, records, format)?;
    Ok(())
}

/// Tracks the byte offset of everything consumed from the inner reader.
struct Counting<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> Read for Counting<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.pos += n as u64;
        Ok(n)
    }
}

impl<R: BufRead> BufRead for Counting<R> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        self.pos += amt as u64;
        self.inner.consume(amt)
    }
}

/// Sequential reader over a stream in either encoding, detected from the
/// first bytes. Yields raw records; every record is validated against the
/// header before it is returned.
pub struct StreamReader<R> {
    src: Counting<R>,
    header: StreamHeader,
    format: Format,
    read: u64,
    seen_ids: HashSet<u64>,
    done: bool,
}

impl StreamReader<BufReader<File>> {
    pub fn open_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path)?;
        StreamReader::new(BufReader::new(file))
    }
}

impl<R: BufRead> StreamReader<R> {
    pub fn new(inner: R) -> Result<Self> {
        let mut src = Counting { inner, pos: 0 };
        let format = detect_format(&mut src)?;
        let header = match format {
            Format::Binary => read_binary_header(&mut src)?,
            Format::Jsonl => read_json_header(&mut src)?,
        };
        Ok(StreamReader {
            src,
            header,
            format,
            read: 0,
            seen_ids: HashSet::new(),
            done: false,
        })
    }

    pub fn header(&self) -> &StreamHeader {
        &self.header
    }

    pub fn format(&self) -> Format {
        self.format
    }

    fn next_record(&mut self) -> Result<Option<InstanceRecord>> {
        let offset = self.src.pos;
        if self.read == self.header.record_count {
            if has_trailing_data(&mut self.src, self.format)? {
                return Err(Error::CountMismatch {
                    expected: self.header.record_count,
                    found: self.read + 1,
                    offset,
                });
            }
            return Ok(None);
        }
        let record = match self.format {
            Format::Binary => read_binary_record(&mut self.src, self.header.dim())?,
            Format::Jsonl => read_json_record(&mut self.src)?,
        };
        let Some(record) = record else {
            return Err(Error::CountMismatch {
                expected: self.header.record_count,
                found: self.read,
                offset,
            });
        };
        let checked = record.validate(self.header.dim()).and_then(|_| {
            if self.seen_ids.insert(record.instance_id) {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "duplicate instance_id {}",
                    record.instance_id
                )))
            }
        });
        if let Err(e) = checked {
            return Err(Error::InvalidRecord {
                offset,
                source: Box::new(e),
            });
        }
        self.read += 1;
        Ok(Some(record))
    }
}

impl<R: BufRead> Iterator for StreamReader<R> {
    type Item = Result<InstanceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_record() {
            Ok(Some(record)) => Some(Ok(record)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Decode a whole in-memory stream.
pub fn read_stream(bytes: &[u8]) -> Result<(StreamHeader, Vec<InstanceRecord>)> {
    let reader = StreamReader::new(bytes)?;
    let header = reader.header().clone();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, records))
}

pub fn read_path(path: impl AsRef<Path>) -> Result<(StreamHeader, Vec<InstanceRecord>)> {
    let reader = StreamReader::open_path(path)?;
    let header = reader.header().clone();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok((header, records))
}

fn detect_format<R: BufRead>(src: &mut Counting<R>) -> Result<Format> {
    let buf = src.fill_buf()?;
    if buf.is_empty() {
        return Err(Error::Truncated {
            what: "header",
            offset: 0,
        });
    }
    let probe = &buf[..buf.len().min(MAGIC.len())];
    if probe == &MAGIC[..probe.len()] {
        return Ok(Format::Binary);
    }
    match buf.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => Ok(Format::Jsonl),
        _ => Err(Error::BadMagic { offset: 0 }),
    }
}

/// Fill `buf` as far as possible; returns the number of bytes read.
fn read_up_to<R: Read>(src: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match src.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

fn read_array<const N: usize, R: Read>(src: &mut R, what: &'static str, offset: u64) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    if read_up_to(src, &mut buf)? < N {
        return Err(Error::Truncated { what, offset });
    }
    Ok(buf)
}

fn read_binary_text<R: Read>(src: &mut Counting<R>, what: &'static str, offset: u64) -> Result<String> {
    let len = u32::from_le_bytes(read_array(src, what, offset)?) as u64;
    let field_offset = src.pos;
    let mut bytes = Vec::new();
    (&mut *src).take(len).read_to_end(&mut bytes)?;
    if (bytes.len() as u64) < len {
        return Err(Error::Truncated { what, offset });
    }
    String::from_utf8(bytes).map_err(|e| Error::Malformed {
        what,
        offset: field_offset,
        message: e.to_string(),
    })
}

fn read_binary_header<R: Read>(src: &mut Counting<R>) -> Result<StreamHeader> {
    let magic: [u8; 4] = read_array(src, "header", 0)?;
    if &magic != MAGIC {
        return Err(Error::BadMagic { offset: 0 });
    }
    let version = u32::from_le_bytes(read_array(src, "header", 0)?);
    if version != VERSION {
        return Err(Error::UnsupportedVersion { version, offset: 4 });
    }
    let dim = u32::from_le_bytes(read_array(src, "header", 0)?);
    let model_id = read_binary_text(src, "header", 0)?;
    let corpus_label = read_binary_text(src, "header", 0)?;
    let record_count = u64::from_le_bytes(read_array(src, "header", 0)?);
    let header = StreamHeader {
        version,
        dim,
        model_id,
        corpus_label,
        record_count,
    };
    validate_header(&header, 0)?;
    Ok(header)
}

fn read_binary_record<R: Read>(src: &mut Counting<R>, dim: usize) -> Result<Option<InstanceRecord>> {
    let offset = src.pos;
    let mut len_buf = [0u8; 4];
    match read_up_to(src, &mut len_buf)? {
        0 => return Ok(None),
        4 => {}
        _ => {
            return Err(Error::Truncated {
                what: "record",
                offset,
            })
        }
    }
    let len = u32::from_le_bytes(len_buf) as u64;
    let mut word = Vec::new();
    (&mut *src).take(len).read_to_end(&mut word)?;
    if (word.len() as u64) < len {
        return Err(Error::Truncated {
            what: "record",
            offset,
        });
    }
    let word_type = String::from_utf8(word).map_err(|e| Error::Malformed {
        what: "record",
        offset,
        message: e.to_string(),
    })?;
    let instance_id = u64::from_le_bytes(read_array(src, "record", offset)?);
    let sentence = read_binary_text(src, "record", offset)?;
    let mut raw = vec![0u8; dim * 4];
    if read_up_to(src, &mut raw)? < raw.len() {
        return Err(Error::Truncated {
            what: "record",
            offset,
        });
    }
    let vector = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Some(InstanceRecord {
        word_type,
        instance_id,
        sentence,
        vector,
    }))
}

/// Next non-blank line with its starting offset and whether it ended in a
/// newline. `None` at end of input.
fn next_line<R: BufRead>(src: &mut Counting<R>) -> Result<Option<(u64, Vec<u8>, bool)>> {
    loop {
        let offset = src.pos;
        let mut line = Vec::new();
        if src.read_until(b'\n', &mut line)? == 0 {
            return Ok(None);
        }
        let terminated = line.last() == Some(&b'\n');
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        return Ok(Some((offset, line, terminated)));
    }
}

fn json_error(e: serde_json::Error, what: &'static str, offset: u64, terminated: bool) -> Error {
    if e.is_eof() && !terminated {
        Error::Truncated { what, offset }
    } else {
        Error::Malformed {
            what,
            offset,
            message: e.to_string(),
        }
    }
}

fn read_json_header<R: BufRead>(src: &mut Counting<R>) -> Result<StreamHeader> {
    let (offset, line, terminated) = next_line(src)?.ok_or(Error::Truncated {
        what: "header",
        offset: 0,
    })?;
    let header: StreamHeader =
        serde_json::from_slice(&line).map_err(|e| json_error(e, "header", offset, terminated))?;
    validate_header(&header, offset)?;
    Ok(header)
}

fn read_json_record<R: BufRead>(src: &mut Counting<R>) -> Result<Option<InstanceRecord>> {
    let Some((offset, line, terminated)) = next_line(src)? else {
        return Ok(None);
    };
    let rec: JsonRecordIn =
        serde_json::from_slice(&line).map_err(|e| json_error(e, "record", offset, terminated))?;
    Ok(Some(InstanceRecord {
        word_type: rec.w,
        instance_id: rec.id,
        sentence: rec.sent,
        vector: rec.vec.into_iter().map(|v| v as f32).collect(),
    }))
}

fn has_trailing_data<R: BufRead>(src: &mut Counting<R>, format: Format) -> Result<bool> {
    match format {
        Format::Binary => Ok(!src.fill_buf()?.is_empty()),
        Format::Jsonl => Ok(next_line(src)?.is_some()),
    }
}
