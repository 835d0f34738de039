//! Minimal NPY (NumPy binary array) reader and writer.
//!
//! Supports exactly the subset the companion dataset uses: format version
//! 1.0, little-endian `<f8` / `<i8` scalars, C order, 2-D shape. Anything
//! else is rejected with a typed error rather than guessed at.

use crate::error::{Error, Result};

pub const MAGIC: [u8; 6] = *b"\x93NUMPY";

/// Dense 2-D array in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericArray {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl NumericArray {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{}x{} array needs {} values, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Parse a version-1.0 NPY byte buffer into a 2-D float array.
///
/// `<i8` payloads are widened to f64 (lossless for the integer magnitudes
/// that occur here).
pub fn parse_npy(bytes: &[u8]) -> Result<NumericArray> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("missing NPY magic string".into()));
    }
    if bytes.len() < 10 {
        return Err(Error::Truncation("header shorter than 10 bytes".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(Error::Unsupported(format!(
            "NPY version {major}.{minor}, only 1.0 is supported"
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = 10 + header_len;
    if bytes.len() < data_start {
        return Err(Error::Truncation("header extends past end of file".into()));
    }
    let header = std::str::from_utf8(&bytes[10..data_start])
        .map_err(|_| Error::Format("header is not ASCII".into()))?;

    let descr = dict_str_value(header, "descr")?;
    let int_payload = match descr.as_str() {
        "<f8" => false,
        "<i8" => true,
        other => {
            return Err(Error::Unsupported(format!(
                "dtype {other:?}, only <f8 and <i8 are supported"
            )))
        }
    };
    if dict_bool_value(header, "fortran_order")? {
        return Err(Error::Unsupported("fortran_order arrays".into()));
    }
    let shape = dict_shape_value(header)?;
    if shape.len() != 2 {
        return Err(Error::Unsupported(format!(
            "{}-dimensional array, only 2-D is supported",
            shape.len()
        )));
    }
    let (rows, cols) = (shape[0], shape[1]);
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("shape overflow".into()))?;
    let need = count * 8;
    let payload = &bytes[data_start..];
    if payload.len() < need {
        return Err(Error::Truncation(format!(
            "payload holds {} bytes, {} needed for shape ({rows}, {cols})",
            payload.len(),
            need
        )));
    }

    let mut data = Vec::with_capacity(count);
    for chunk in payload[..need].chunks_exact(8) {
        let raw = <[u8; 8]>::try_from(chunk).unwrap();
        data.push(if int_payload {
            i64::from_le_bytes(raw) as f64
        } else {
            f64::from_le_bytes(raw)
        });
    }
    NumericArray::new(rows, cols, data)
}

/// Serialize as version-1.0 `<f8`, C order. `parse_npy` inverts this exactly.
pub fn serialize_npy(array: &NumericArray) -> Vec<u8> {
    let dict = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
        array.rows, array.cols
    );
    // Pad the header so the payload starts on a 64-byte boundary.
    let unpadded = 10 + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let header_len = (dict.len() + padding + 1) as u16;

    let mut out = Vec::with_capacity(10 + header_len as usize + array.data.len() * 8);
    out.extend_from_slice(&MAGIC);
    out.push(1);
    out.push(0);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.resize(out.len() + padding, b' ');
    out.push(b'\n');
    for v in &array.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_npy_file(path: &std::path::Path) -> Result<NumericArray> {
    let bytes = std::fs::read(path)?;
    parse_npy(&bytes)
}

pub fn write_npy_file(path: &std::path::Path, array: &NumericArray) -> Result<()> {
    std::fs::write(path, serialize_npy(array))?;
    Ok(())
}

fn dict_str_value(header: &str, key: &str) -> Result<String> {
    let rest = after_key(header, key)?;
    let open = rest
        .find(['\'', '"'])
        .ok_or_else(|| Error::Format(format!("no quoted value for {key:?}")))?;
    let quote = rest.as_bytes()[open] as char;
    let tail = &rest[open + 1..];
    let close = tail
        .find(quote)
        .ok_or_else(|| Error::Format(format!("unterminated value for {key:?}")))?;
    Ok(tail[..close].to_string())
}

fn dict_bool_value(header: &str, key: &str) -> Result<bool> {
    let rest = after_key(header, key)?.trim_start();
    if rest.starts_with("True") {
        Ok(true)
    } else if rest.starts_with("False") {
        Ok(false)
    } else {
        Err(Error::Format(format!("{key:?} is not True/False")))
    }
}

fn dict_shape_value(header: &str) -> Result<Vec<usize>> {
    let rest = after_key(header, "shape")?;
    let open = rest
        .find('(')
        .ok_or_else(|| Error::Format("shape is not a tuple".into()))?;
    let close = rest[open..]
        .find(')')
        .ok_or_else(|| Error::Format("unterminated shape tuple".into()))?
        + open;
    rest[open + 1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad shape entry {s:?}")))
        })
        .collect()
}

fn after_key<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    for quote in ['\'', '"'] {
        let pat = format!("{quote}{key}{quote}");
        if let Some(pos) = header.find(&pat) {
            let rest = &header[pos + pat.len()..];
            let colon = rest
                .find(':')
                .ok_or_else(|| Error::Format(format!("no colon after {key:?}")))?;
            return Ok(&rest[colon + 1..]);
        }
    }
    Err(Error::Format(format!("header key {key:?} missing")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_element_round_trip() {
        let arr = NumericArray::new(1, 1, vec![3.0]).unwrap();
        let parsed = parse_npy(&serialize_npy(&arr)).unwrap();
        assert_eq!(parsed.rows, 1);
        assert_eq!(parsed.cols, 1);
        assert_eq!(parsed.data, vec![3.0]);
    }

    #[test]
    fn bad_magic_is_format_error() {
        let err = parse_npy(b"NOTNPYxxxxxxxxxxxxxx").unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn version_2_is_unsupported() {
        let mut bytes = serialize_npy(&NumericArray::new(1, 1, vec![1.0]).unwrap());
        bytes[6] = 2;
        assert!(matches!(parse_npy(&bytes), Err(Error::Unsupported(_))));
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = serialize_npy(&NumericArray::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap());
        bytes.truncate(bytes.len() - 8);
        assert!(matches!(parse_npy(&bytes), Err(Error::Truncation(_))));
    }

    #[test]
    fn fortran_order_rejected() {
        let mut bytes = serialize_npy(&NumericArray::new(1, 2, vec![1.0, 2.0]).unwrap());
        let pos = bytes
            .windows(5)
            .position(|w| w == b"False")
            .expect("header should spell out fortran_order");
        bytes[pos..pos + 5].copy_from_slice(b"True,");
        assert!(matches!(parse_npy(&bytes), Err(Error::Unsupported(_))));
    }

    #[test]
    fn i8_payload_parses() {
        // Hand-built <i8 file with values [5, -7].
        let dict = "{'descr': '<i8', 'fortran_order': False, 'shape': (1, 2), }";
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.extend_from_slice(&[1, 0]);
        bytes.extend_from_slice(&(dict.len() as u16).to_le_bytes());
        bytes.extend_from_slice(dict.as_bytes());
        bytes.extend_from_slice(&5i64.to_le_bytes());
        bytes.extend_from_slice(&(-7i64).to_le_bytes());
        let arr = parse_npy(&bytes).unwrap();
        assert_eq!(arr.data, vec![5.0, -7.0]);
    }

    proptest! {
        #[test]
        fn round_trip_identity(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let data: Vec<f64> = (0..rows * cols).map(|_| rng.next_in(-1e6, 1e6)).collect();
            let arr = NumericArray::new(rows, cols, data).unwrap();
            let back = parse_npy(&serialize_npy(&arr)).unwrap();
            prop_assert_eq!(arr, back);
        }
    }
}
