//! PBM (portable bitmap) reader and writer for mask interchange.
//!
//! Supports the plain `P1` and raw `P4` variants. Bit 1 is foreground.
//! Only square images are accepted since every mask in this crate is `K×K`.

use std::path::Path;

use crate::mask::BinaryMask;
use crate::{Error, Result};

/// On-disk variant selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbmFormat {
    /// `P1`, '0'/'1' characters.
    Ascii,
    /// `P4`, rows packed MSB-first.
    Binary,
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Scanner<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Scanner {
            bytes,
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(b)
    }

    /// Skips whitespace and `#` comments (which run to end of line).
    fn skip_separators(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.bump();
            } else if b == b'#' {
                while let Some(b) = self.bump() {
                    if b == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read_unsigned(&mut self, what: &str) -> Result<usize> {
        self.skip_separators();
        let mut digits = 0usize;
        let mut value: usize = 0;
        while let Some(b) = self.peek() {
            if b.is_ascii_digit() {
                value = value
                    .checked_mul(10)
                    .and_then(|v| v.checked_add((b - b'0') as usize))
                    .ok_or_else(|| self.error(format!("{what} overflows")))?;
                digits += 1;
                self.bump();
            } else {
                break;
            }
        }
        if digits == 0 {
            return Err(self.error(format!("expected {what}")));
        }
        Ok(value)
    }
}

/// Parses a PBM document (either variant) into a mask.
pub fn parse(bytes: &[u8]) -> Result<BinaryMask> {
    let mut s = Scanner::new(bytes);
    s.skip_separators();
    let magic = [s.bump(), s.bump()];
    let format = match magic {
        [Some(b'P'), Some(b'1')] => PbmFormat::Ascii,
        [Some(b'P'), Some(b'4')] => PbmFormat::Binary,
        _ => return Err(s.error("expected magic P1 or P4")),
    };
    let width = s.read_unsigned("width")?;
    let height = s.read_unsigned("height")?;
    if width == 0 || height == 0 {
        return Err(s.error("dimensions must be positive"));
    }
    if width != height {
        return Err(s.error(format!("mask must be square, got {width}x{height}")));
    }
    if width > crate::MAX_SIDE {
        return Err(s.error(format!("side {width} exceeds limit {}", crate::MAX_SIDE)));
    }

    let mut pixels = Vec::with_capacity(width * height);
    match format {
        PbmFormat::Ascii => {
            while pixels.len() < width * height {
                s.skip_separators();
                match s.peek() {
                    Some(b'0') => {
                        s.bump();
                        pixels.push(0);
                    }
                    Some(b'1') => {
                        s.bump();
                        pixels.push(1);
                    }
                    Some(other) => {
                        return Err(s.error(format!("unexpected pixel byte {:?}", other as char)))
                    }
                    None => return Err(s.error("truncated pixel data")),
                }
            }
        }
        PbmFormat::Binary => {
            // Exactly one whitespace byte separates the header from raster data.
            match s.bump() {
                Some(b) if b.is_ascii_whitespace() => {}
                _ => return Err(s.error("expected whitespace before raster data")),
            }
            let stride = width.div_ceil(8);
            let raster = &s.bytes[s.pos..];
            if raster.len() < stride * height {
                return Err(s.error(format!(
                    "raster needs {} bytes, got {}",
                    stride * height,
                    raster.len()
                )));
            }
            for row in 0..height {
                for col in 0..width {
                    let byte = raster[row * stride + col / 8];
                    let bit = (byte >> (7 - col % 8)) & 1;
                    pixels.push(bit);
                }
            }
        }
    }
    BinaryMask::from_pixels(width, pixels)
}

/// Serializes a mask in the requested variant.
pub fn write(mask: &BinaryMask, format: PbmFormat) -> Vec<u8> {
    let k = mask.size();
    let mut out = Vec::new();
    match format {
        PbmFormat::Ascii => {
            out.extend_from_slice(format!("P1\n{k} {k}\n").as_bytes());
            // Plain PBM recommends lines under 70 characters.
            for row in mask.pixels().chunks(k) {
                for chunk in row.chunks(64) {
                    for &p in chunk {
                        out.push(if p == 1 { b'1' } else { b'0' });
                    }
                    out.push(b'\n');
                }
            }
        }
        PbmFormat::Binary => {
            out.extend_from_slice(format!("P4\n{k} {k}\n").as_bytes());
            for row in mask.pixels().chunks(k) {
                for chunk in row.chunks(8) {
                    let mut byte = 0u8;
                    for (i, &p) in chunk.iter().enumerate() {
                        byte |= p << (7 - i);
                    }
                    out.push(byte);
                }
            }
        }
    }
    out
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    parse(&std::fs::read(path)?)
}

pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask, format: PbmFormat) -> Result<()> {
    Ok(std::fs::write(path, write(mask, format))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_ascii_with_comments() {
        let doc = b"P1\n# a comment\n2 2\n1 0\n0 1\n";
        let mask = parse(doc).unwrap();
        assert_eq!(mask.pixels(), &[1, 0, 0, 1]);
    }

    #[test]
    fn parses_packed_ascii() {
        let mask = parse(b"P1 2 2 1001").unwrap();
        assert_eq!(mask.pixels(), &[1, 0, 0, 1]);
    }

    #[test]
    fn rejects_non_square_and_junk() {
        assert!(matches!(
            parse(b"P1\n2 3\n000000"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse(b"P7\n2 2\n0000"), Err(Error::Parse { .. })));
        assert!(matches!(parse(b"P1\n2 2\n01x1"), Err(Error::Parse { .. })));
        assert!(matches!(parse(b"P1\n2 2\n01"), Err(Error::Parse { .. })));
        assert!(matches!(parse(b""), Err(Error::Parse { .. })));
    }

    #[test]
    fn binary_rows_are_byte_padded() {
        // 9 wide: second byte of each row carries only the top bit.
        let mut mask = BinaryMask::zeros(9);
        mask.set(0, 8, true);
        mask.set(1, 0, true);
        let bytes = write(&mask, PbmFormat::Binary);
        let parsed = parse(&bytes).unwrap();
        assert_eq!(parsed, mask);
    }

    #[test]
    fn parse_error_reports_location() {
        let err = parse(b"P1\n2 2\n0 0\n0 x\n").unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 4);
                assert_eq!(column, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trips_both_formats(seed in 0u64..500, k in 1usize..=20) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pixels = (0..k * k).map(|_| rng.random_range(0..=1u8)).collect();
            let mask = BinaryMask::from_pixels(k, pixels).unwrap();
            for format in [PbmFormat::Ascii, PbmFormat::Binary] {
                let bytes = write(&mask, format);
                prop_assert_eq!(&parse(&bytes).unwrap(), &mask);
            }
        }
    }
}
