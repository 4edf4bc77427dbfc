//! Container shared by the dataset and checkpoint files: a magic line, a
//! `key=value` text header closed by `end`, a little-endian binary body and a
//! trailing CRC-32 of everything before it.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new(magic: &str) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic.as_bytes());
        buf.push(b'\n');
        Self { buf }
    }

    pub fn header(&mut self, key: &str, value: impl std::fmt::Display) {
        self.buf.extend_from_slice(format!("{key}={value}\n").as_bytes());
    }

    pub fn end_header(&mut self) {
        self.buf.extend_from_slice(b"end\n");
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, v: &[f64]) {
        for &x in v {
            self.f64(x);
        }
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        self.buf
    }
}

/// Writes through a sibling temporary file so a failed write never leaves a
/// partial file at `path`.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    if let Err(e) = fs::write(&tmp, bytes) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        e.into()
    })
}

pub(crate) struct Decoder<'a> {
    body: &'a [u8],
    pos: usize,
    header: Vec<(String, String)>,
}

impl<'a> Decoder<'a> {
    /// Checks the CRC and magic and parses the header.
    pub fn new(bytes: &'a [u8], magic: &str) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Format("file truncated".into()));
        }
        let (content, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        let computed = crc32fast::hash(content);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let mut pos = 0;
        let next_line = |pos: &mut usize| -> Result<&'a str> {
            let rest = &content[*pos..];
            let n = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::Format("unterminated header".into()))?;
            let line = std::str::from_utf8(&rest[..n]).map_err(|_| Error::Format("header is not UTF-8".into()))?;
            *pos += n + 1;
            Ok(line)
        };
        let first = next_line(&mut pos)?;
        if first != magic {
            return Err(Error::Format(format!("expected magic {magic}, found {first:?}")));
        }
        let mut header = Vec::new();
        loop {
            let line = next_line(&mut pos)?;
            if line == "end" {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header line {line:?}")))?;
            header.push((k.to_string(), v.to_string()));
        }
        Ok(Self {
            body: content,
            pos,
            header,
        })
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Format(format!("missing header key {key}")))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| Error::Format(format!("bad value for {key}: {v:?}")))
    }

    /// Comma-separated floats.
    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        self.get(key)?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Format(format!("bad float in {key}: {s:?}")))
            })
            .collect()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.body.len() {
            return Err(Error::Format("body truncated".into()));
        }
        let s = &self.body[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.body.len() {
            return Err(Error::Format(format!("{} trailing bytes", self.body.len() - self.pos)));
        }
        Ok(())
    }
}

/// Comma-joined shortest round-trip representations.
pub(crate) fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}
