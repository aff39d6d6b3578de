use std::fmt;

use serde::{Deserialize, Serialize};

use super::{hr_in_range, IngestError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    /// PPG green channel, arbitrary amplitude units.
    PG,
    /// Heart rate already computed on the device, in bpm.
    HR,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::PG => "PG",
            Tag::HR => "HR",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One timestamped reading off the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiometricSample {
    pub tag: Tag,
    pub timestamp_ms: u64,
    pub value: f64,
}

impl BiometricSample {
    pub fn pg(timestamp_ms: u64, value: f64) -> Self {
        Self { tag: Tag::PG, timestamp_ms, value }
    }

    pub fn hr(timestamp_ms: u64, bpm: f64) -> Self {
        Self { tag: Tag::HR, timestamp_ms, value: bpm }
    }
}

/// Decodes one `TAG,timestamp_ms,value` line.
pub fn parse_sensor_line(line: &[u8]) -> Result<BiometricSample, IngestError> {
    let text = std::str::from_utf8(line)
        .map_err(|_| IngestError::MalformedLine("not valid UTF-8".into()))?
        .trim();
    let fields: Vec<&str> = text.split(',').collect();
    if fields.len() != 3 {
        return Err(IngestError::MalformedLine(format!(
            "expected 3 fields, got {}",
            fields.len()
        )));
    }
    let tag = match fields[0].trim() {
        "PG" => Tag::PG,
        "HR" => Tag::HR,
        other => return Err(IngestError::UnknownTag(other.to_string())),
    };
    let timestamp_ms: u64 = fields[1]
        .trim()
        .parse()
        .map_err(|_| IngestError::MalformedLine(format!("bad timestamp {:?}", fields[1])))?;
    let value: f64 = fields[2]
        .trim()
        .parse()
        .map_err(|_| IngestError::MalformedLine(format!("bad value {:?}", fields[2])))?;
    if !value.is_finite() {
        return Err(IngestError::NonFinite);
    }
    if tag == Tag::HR && !hr_in_range(value) {
        return Err(IngestError::RangeError(value));
    }
    Ok(BiometricSample { tag, timestamp_ms, value })
}

/// Inverse of [`parse_sensor_line`]. `f64`'s `Display` is shortest-roundtrip,
/// so parsing the result yields the identical sample.
pub fn format_sample(sample: &BiometricSample) -> String {
    format!("{},{},{}", sample.tag, sample.timestamp_ms, sample.value)
}

/// Splits a datagram (or HTTP envelope) into lines and parses each one.
/// Blank lines are skipped; each remaining line yields its own result.
pub fn parse_datagram(payload: &[u8]) -> Vec<Result<BiometricSample, IngestError>> {
    payload
        .split(|&b| b == b'\n')
        .filter(|l| !l.iter().all(u8::is_ascii_whitespace))
        .map(parse_sensor_line)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_ppg_line() {
        assert_eq!(
            parse_sensor_line(b"PG,1000,0.52").unwrap(),
            BiometricSample::pg(1000, 0.52)
        );
        assert_eq!(
            parse_sensor_line(b"  HR,5,71.5\r\n").unwrap(),
            BiometricSample::hr(5, 71.5)
        );
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(parse_sensor_line(b"XX,1,2"), Err(IngestError::UnknownTag(t)) if t == "XX"));
        assert!(matches!(parse_sensor_line(b"pg,1,2"), Err(IngestError::UnknownTag(_))));
        assert_eq!(parse_sensor_line(b"HR,5000,400"), Err(IngestError::RangeError(400.0)));
        assert_eq!(parse_sensor_line(b"HR,5000,20"), Err(IngestError::RangeError(20.0)));
        assert_eq!(parse_sensor_line(b"PG,1,NaN"), Err(IngestError::NonFinite));
        assert_eq!(parse_sensor_line(b"PG,1,inf"), Err(IngestError::NonFinite));
        assert!(matches!(parse_sensor_line(b"PG,1,2,3"), Err(IngestError::MalformedLine(_))));
        assert!(matches!(parse_sensor_line(b"PG,abc,2"), Err(IngestError::MalformedLine(_))));
        assert!(matches!(parse_sensor_line(b"PG,-5,2"), Err(IngestError::MalformedLine(_))));
        assert!(matches!(parse_sensor_line(b"PG,1,x"), Err(IngestError::MalformedLine(_))));
        assert!(matches!(parse_sensor_line(&[0xff, 0xfe]), Err(IngestError::MalformedLine(_))));
    }

    #[test]
    fn datagram_with_several_lines() {
        let out = parse_datagram(b"PG,0,0.1\nPG,40,0.2\n\nHR,40,70\nbad\n");
        assert_eq!(out.len(), 4);
        assert!(out[..3].iter().all(Result::is_ok));
        assert!(out[3].is_err());
    }

    proptest! {
        #[test]
        fn format_then_parse_is_identity(
            ts in any::<u64>(),
            pg in -1e9f64..1e9,
            hr in 20.0001f64..249.999,
            is_hr in any::<bool>(),
        ) {
            let s = if is_hr { BiometricSample::hr(ts, hr) } else { BiometricSample::pg(ts, pg) };
            prop_assert_eq!(parse_sensor_line(format_sample(&s).as_bytes()).unwrap(), s);
        }
    }
}
