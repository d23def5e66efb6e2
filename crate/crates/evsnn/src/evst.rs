//! The canonical on-disk event format (`.evst`) and a CSV importer.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! header:  magic "EVST" | version u16 | modality u8 | channel_count u32
//!          | has_geometry u8 | [width u32 | height u32 | polarities u32]
//! records: { timestamp_us u64 | channel u32 | polarity u8 } until EOF
//! ```
//!
//! The geometry block is present only when `has_geometry = 1`; tactile
//! streams normally omit it, vision streams carry their pixel grid so that
//! pooling layers and polarity merging know the plane sizes. Records must
//! be sorted by timestamp; the reader rejects files that are not.
//!
//! The CSV importer accepts `timestamp_us,channel,polarity` rows (polarity
//! 0 = negative, 1 = positive) with an optional header line, for one-time
//! conversion of externally recorded data into `.evst`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use evsnn_core::{Event, EventStream, Geometry, Modality, Polarity};

use crate::error::{AppError, Result};

pub const EVST_MAGIC: [u8; 4] = *b"EVST";
pub const EVST_VERSION: u16 = 1;

/// Header length in bytes without (12) and with (24) the geometry block.
const HEADER_BASE: u64 = 4 + 2 + 1 + 4 + 1;
const RECORD_LEN: usize = 8 + 4 + 1;

fn modality_code(m: Modality) -> u8 {
    match m {
        Modality::Tactile => 0,
        Modality::Vision => 1,
    }
}

fn modality_from_code(c: u8) -> Option<Modality> {
    match c {
        0 => Some(Modality::Tactile),
        1 => Some(Modality::Vision),
        _ => None,
    }
}

/// Writes a stream to `path`, overwriting any existing file.
pub fn write_stream(path: &Path, stream: &EventStream) -> Result<()> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| AppError::io(path, e);

    w.write_all(&EVST_MAGIC).map_err(io_err)?;
    w.write_all(&EVST_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&[modality_code(stream.modality())]).map_err(io_err)?;
    w.write_all(&stream.channel_count().to_le_bytes()).map_err(io_err)?;
    match stream.geometry() {
        Some(g) => {
            w.write_all(&[1u8]).map_err(io_err)?;
            w.write_all(&g.width.to_le_bytes()).map_err(io_err)?;
            w.write_all(&g.height.to_le_bytes()).map_err(io_err)?;
            w.write_all(&g.polarities.to_le_bytes()).map_err(io_err)?;
        }
        None => w.write_all(&[0u8]).map_err(io_err)?,
    }
    for ev in stream.events() {
        w.write_all(&ev.timestamp_us.to_le_bytes()).map_err(io_err)?;
        w.write_all(&ev.channel.to_le_bytes()).map_err(io_err)?;
        w.write_all(&[ev.polarity.index() as u8]).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads a stream from `path`, validating the header, every record, and
/// the stream invariants (sorted timestamps, channels in range).
pub fn read_stream(path: &Path) -> Result<EventStream> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| AppError::io(path, e))?;
    parse_stream(path, &bytes)
}

fn parse_stream(path: &Path, bytes: &[u8]) -> Result<EventStream> {
    if bytes.len() < HEADER_BASE as usize {
        return Err(AppError::parse_at_byte(path, bytes.len() as u64, "truncated header"));
    }
    if bytes[0..4] != EVST_MAGIC {
        return Err(AppError::parse_at_byte(path, 0, "bad magic, expected \"EVST\""));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != EVST_VERSION {
        return Err(AppError::parse_at_byte(
            path,
            4,
            format!("unsupported version {version}, expected {EVST_VERSION}"),
        ));
    }
    let modality = modality_from_code(bytes[6])
        .ok_or_else(|| AppError::parse_at_byte(path, 6, format!("unknown modality code {}", bytes[6])))?;
    let channel_count = u32::from_le_bytes(bytes[7..11].try_into().unwrap());
    let has_geometry = bytes[11];
    let (geometry, mut offset) = match has_geometry {
        0 => (None, HEADER_BASE as usize),
        1 => {
            let end = HEADER_BASE as usize + 12;
            if bytes.len() < end {
                return Err(AppError::parse_at_byte(path, bytes.len() as u64, "truncated geometry block"));
            }
            let width = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
            let height = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
            let polarities = u32::from_le_bytes(bytes[20..24].try_into().unwrap());
            let g = Geometry::new(width, height, polarities)
                .map_err(|e| AppError::parse_at_byte(path, 12, e.to_string()))?;
            (Some(g), end)
        }
        other => {
            return Err(AppError::parse_at_byte(
                path,
                11,
                format!("geometry flag must be 0 or 1, found {other}"),
            ))
        }
    };

    let body = &bytes[offset..];
    if body.len() % RECORD_LEN != 0 {
        let whole = body.len() / RECORD_LEN * RECORD_LEN;
        return Err(AppError::parse_at_byte(
            path,
            (offset + whole) as u64,
            "truncated record",
        ));
    }
    let mut events = Vec::with_capacity(body.len() / RECORD_LEN);
    while offset < bytes.len() {
        let rec = &bytes[offset..offset + RECORD_LEN];
        let timestamp_us = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let channel = u32::from_le_bytes(rec[8..12].try_into().unwrap());
        let polarity = Polarity::from_index(rec[12] as u32).ok_or_else(|| {
            AppError::parse_at_byte(path, (offset + 12) as u64, format!("polarity must be 0 or 1, found {}", rec[12]))
        })?;
        events.push(Event {
            timestamp_us,
            channel,
            polarity,
        });
        offset += RECORD_LEN;
    }

    EventStream::new(events, channel_count, modality, geometry)
        .map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))
}

/// Imports a `timestamp_us,channel,polarity` CSV. A first line whose first
/// field is not an integer is treated as a header and skipped. When `sort`
/// is set the rows are ordered by (timestamp, channel) before validation —
/// otherwise out-of-order rows are an error.
pub fn import_csv(
    path: &Path,
    modality: Modality,
    channel_count: u32,
    geometry: Option<Geometry>,
    sort: bool,
) -> Result<EventStream> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(AppError::parse_at_line(
                path,
                line_no,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let timestamp_us: u64 = match fields[0].parse() {
            Ok(t) => t,
            // Only the very first data-bearing line may be a header.
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(AppError::parse_at_line(
                    path,
                    line_no,
                    format!("bad timestamp {:?}", fields[0]),
                ))
            }
        };
        let channel: u32 = fields[1]
            .parse()
            .map_err(|_| AppError::parse_at_line(path, line_no, format!("bad channel {:?}", fields[1])))?;
        let polarity_raw: u32 = fields[2]
            .parse()
            .map_err(|_| AppError::parse_at_line(path, line_no, format!("bad polarity {:?}", fields[2])))?;
        let polarity = Polarity::from_index(polarity_raw).ok_or_else(|| {
            AppError::parse_at_line(path, line_no, format!("polarity must be 0 or 1, found {polarity_raw}"))
        })?;
        events.push(Event {
            timestamp_us,
            channel,
            polarity,
        });
    }
    if sort {
        events.sort_by_key(|e| (e.timestamp_us, e.channel));
    }
    EventStream::new(events, channel_count, modality, geometry)
        .map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))
}
