//! Vocabulary files: an array of double-quoted strings, token id = position.
//!
//! Strings are UTF-8 text with JSON-style escapes plus `\xNN` for arbitrary
//! bytes, which plain JSON cannot express.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("vocabulary parse error at byte {offset}: {message}")]
pub struct VocabParseError {
    pub offset: usize,
    pub message: String,
}

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, VocabParseError> {
        Err(VocabParseError {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self
            .src
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), VocabParseError> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{}`", b as char))
        }
    }

    fn hex(&mut self, n: usize) -> Result<u32, VocabParseError> {
        let Some(digits) = self.src.get(self.pos..self.pos + n) else {
            return self.err("truncated escape");
        };
        let Some(v) = std::str::from_utf8(digits)
            .ok()
            .and_then(|s| u32::from_str_radix(s, 16).ok())
        else {
            return self.err("bad hex digits in escape");
        };
        self.pos += n;
        Ok(v)
    }

    fn string(&mut self) -> Result<Vec<u8>, VocabParseError> {
        self.expect(b'"')?;
        let mut out = Vec::new();
        loop {
            let Some(&b) = self.src.get(self.pos) else {
                return self.err("unterminated string");
            };
            self.pos += 1;
            match b {
                b'"' => return Ok(out),
                b'\\' => {
                    let Some(&e) = self.src.get(self.pos) else {
                        return self.err("unterminated escape");
                    };
                    self.pos += 1;
                    match e {
                        b'x' => out.push(self.hex(2)? as u8),
                        b'u' => {
                            let c = char::from_u32(self.hex(4)?);
                            let Some(c) = c else {
                                return self.err("escape is not a scalar value");
                            };
                            out.extend_from_slice(c.encode_utf8(&mut [0; 4]).as_bytes());
                        }
                        b'n' => out.push(b'\n'),
                        b't' => out.push(b'\t'),
                        b'r' => out.push(b'\r'),
                        b'0' => out.push(0),
                        b'"' | b'\\' | b'/' => out.push(e),
                        _ => {
                            self.pos -= 1;
                            return self.err(format!("unknown escape `\\{}`", e as char));
                        }
                    }
                }
                _ => out.push(b),
            }
        }
    }
}

pub fn parse_vocabulary(text: &str) -> Result<Vec<Vec<u8>>, VocabParseError> {
    let mut r = Reader {
        src: text.as_bytes(),
        pos: 0,
    };
    r.expect(b'[')?;
    let mut out = Vec::new();
    r.skip_ws();
    if r.src.get(r.pos) == Some(&b']') {
        r.pos += 1;
    } else {
        loop {
            out.push(r.string()?);
            r.skip_ws();
            match r.src.get(r.pos) {
                Some(b',') => r.pos += 1,
                Some(b']') => {
                    r.pos += 1;
                    break;
                }
                _ => return r.err("expected `,` or `]`"),
            }
        }
    }
    r.skip_ws();
    if r.pos != r.src.len() {
        return r.err("trailing content");
    }
    Ok(out)
}

/// Printable ASCII stays literal; everything else becomes `\xNN`.
pub fn write_vocabulary<T: AsRef<[u8]>>(tokens: &[T]) -> String {
    let mut s = String::from("[\n");
    for (i, t) in tokens.iter().enumerate() {
        s.push('"');
        for &b in t.as_ref() {
            match b {
                b'"' => s.push_str("\\\""),
                b'\\' => s.push_str("\\\\"),
                0x20..=0x7e => s.push(b as char),
                _ => s.push_str(&format!("\\x{b:02x}")),
            }
        }
        s.push('"');
        s.push_str(if i + 1 < tokens.len() { ",\n" } else { "\n" });
    }
    s.push_str("]\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_escapes() {
        let v = parse_vocabulary(r#"[ "a", "\x00\xff", "\"q\"", "\\", "é", "é", "\n" ]"#).unwrap();
        assert_eq!(
            v,
            vec![
                b"a".to_vec(),
                vec![0, 255],
                b"\"q\"".to_vec(),
                b"\\".to_vec(),
                "é".as_bytes().to_vec(),
                "é".as_bytes().to_vec(),
                b"\n".to_vec(),
            ]
        );
        assert_eq!(parse_vocabulary("[]").unwrap(), Vec::<Vec<u8>>::new());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_vocabulary(r#"["a""#).is_err());
        assert!(parse_vocabulary(r#"["\q"]"#).is_err());
        assert!(parse_vocabulary(r#"["\x4"]"#).is_err());
        assert!(parse_vocabulary(r#"["a"] x"#).is_err());
        assert_eq!(parse_vocabulary(r#"["a" "b"]"#).unwrap_err().offset, 5);
    }

    #[test]
    fn write_then_parse() {
        let tokens: Vec<Vec<u8>> = vec![b"ab".to_vec(), vec![0, 10, 200], b"\"\\".to_vec()];
        assert_eq!(
            parse_vocabulary(&write_vocabulary(&tokens)).unwrap(),
            tokens
        );
    }
}
