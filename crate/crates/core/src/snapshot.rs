//! Little-endian encoder and bounds-checked decoder for sketch snapshots.

use crate::error::SnapshotError;
use crate::hh1::Hh1;

#[derive(Debug, Default)]
pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn i64(&mut self, v: i64) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    pub fn opt_u64(&mut self, v: Option<u64>) {
        match v {
            Some(x) => {
                self.u8(1);
                self.u64(x);
            }
            None => self.u8(0),
        }
    }

    pub fn hh1(&mut self, h: &Hh1) {
        self.f64(h.sigma);
        self.u64(h.seed);
        self.i64(h.offset as i64);
        self.u64(h.round as u64);
        self.u64(h.prefix);
        self.i64(h.acc[0]);
        self.i64(h.acc[1]);
        self.opt_u64(h.candidate);
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn corrupt(&self, reason: impl Into<String>) -> SnapshotError {
        SnapshotError::Corrupt {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(SnapshotError::Truncated(self.pos)),
        }
    }

    pub fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, SnapshotError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn i64(&mut self) -> Result<i64, SnapshotError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, SnapshotError> {
        self.u64().map(f64::from_bits)
    }

    pub fn usize(&mut self) -> Result<usize, SnapshotError> {
        let at = self.pos;
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| SnapshotError::Corrupt {
            offset: at,
            reason: format!("length {v} does not fit in memory"),
        })
    }

    pub fn flag(&mut self) -> Result<bool, SnapshotError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(SnapshotError::Corrupt {
                offset: self.pos - 1,
                reason: format!("flag byte {other}"),
            }),
        }
    }

    pub fn opt_u64(&mut self) -> Result<Option<u64>, SnapshotError> {
        if self.flag()? {
            self.u64().map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn i64s(&mut self, n: usize) -> Result<Vec<i64>, SnapshotError> {
        (0..n).map(|_| self.i64()).collect()
    }

    /// An [`Hh1`] over domain `n`, rebuilt from its seed and dynamic fields.
    pub fn hh1(&mut self, n: u64) -> Result<Hh1, SnapshotError> {
        let at = self.pos;
        let sigma = self.f64()?;
        let seed = self.u64()?;
        let offset = self.i64()?;
        let offset =
            i32::try_from(offset).map_err(|_| self.corrupt("threshold offset out of range"))?;
        let mut h = Hh1::with_threshold_offset(sigma, n, seed, offset).map_err(|e| {
            SnapshotError::Corrupt {
                offset: at,
                reason: e.to_string(),
            }
        })?;
        if h.sigma.to_bits() != sigma.to_bits() {
            return Err(SnapshotError::Corrupt {
                offset: at,
                reason: format!("sigma {sigma} below 1"),
            });
        }
        h.round = u32::try_from(self.u64()?).map_err(|_| self.corrupt("round out of range"))?;
        h.prefix = self.u64()?;
        h.acc = [self.i64()?, self.i64()?];
        h.candidate = self.opt_u64()?;
        h.resync().map_err(|e| SnapshotError::Corrupt {
            offset: at,
            reason: e.to_string(),
        })?;
        Ok(h)
    }

    pub fn finish(self) -> Result<(), SnapshotError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(SnapshotError::Corrupt {
                offset: self.pos,
                reason: format!("{} trailing bytes", self.buf.len() - self.pos),
            })
        }
    }
}
