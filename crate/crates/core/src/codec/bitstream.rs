//! Container: `"DERD"`, six little-endian `u32` header fields (version,
//! width, height, frame count, objective id, QP), then per frame a `u32`
//! byte length and the range-coded slice, then optionally `"AUDT"`, a
//! `u32` length and the encoder's feature counts as JSON.

use std::path::Path;

use crate::energy_model::FeatureCounts;
use crate::optimizer::ObjectiveKind;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DERD";
pub const AUDIT_MAGIC: &[u8; 4] = b"AUDT";
pub const VERSION: u32 = 1;
/// Magic plus six header words.
pub const HEADER_LEN: usize = 4 + 6 * 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
    pub objective: ObjectiveKind,
    pub qp: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bitstream {
    pub header: Header,
    /// One range-coded slice per frame.
    pub frames: Vec<Vec<u8>>,
    pub audit: Option<FeatureCounts>,
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::Truncated { offset: self.data.len() });
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

impl Bitstream {
    /// Header plus payload, excluding the audit section.
    pub fn coded_len(&self) -> usize {
        HEADER_LEN + self.frames.iter().map(|f| 4 + f.len()).sum::<usize>()
    }

    /// Stream size in bits as used for rate measurements.
    pub fn coded_bits(&self) -> u64 {
        self.coded_len() as u64 * 8
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::with_capacity(self.coded_len() + 1024);
        out.extend_from_slice(MAGIC);
        for v in [VERSION, h.width, h.height, h.frame_count, h.objective.id(), u32::from(h.qp)] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for f in &self.frames {
            out.extend_from_slice(&(f.len() as u32).to_le_bytes());
            out.extend_from_slice(f);
        }
        if let Some(a) = &self.audit {
            let json = serde_json::to_vec(a).expect("counts serialize");
            out.extend_from_slice(AUDIT_MAGIC);
            out.extend_from_slice(&(json.len() as u32).to_le_bytes());
            out.extend_from_slice(&json);
        }
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = Reader { data, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Bitstream("missing DERD magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Bitstream(format!("unsupported version {version}")));
        }
        let (width, height, frame_count, obj, qp) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?);
        super::frame::check_dims(width as usize, height as usize)?;
        let objective = ObjectiveKind::from_id(obj).ok_or_else(|| Error::Bitstream(format!("objective id {obj}")))?;
        let qp = super::quant::check_qp(i64::from(qp))?;
        let mut frames = Vec::new();
        for _ in 0..frame_count {
            let len = r.u32()? as usize;
            frames.push(r.take(len)?.to_vec());
        }
        let audit = if r.pos == data.len() {
            None
        } else {
            if r.take(4)? != AUDIT_MAGIC {
                return Err(Error::Bitstream(format!("unexpected data at offset {}", r.pos - 4)));
            }
            let len = r.u32()? as usize;
            let json = std::str::from_utf8(r.take(len)?).map_err(|e| Error::Bitstream(e.to_string()))?;
            if r.pos != data.len() {
                return Err(Error::Bitstream("trailing bytes after audit section".into()));
            }
            Some(FeatureCounts::from_json_str(json)?)
        };
        Ok(Bitstream {
            header: Header {
                width,
                height,
                frame_count,
                objective,
                qp,
            },
            frames,
            audit,
        })
    }

    /// Byte offset of frame `i`'s slice data within the serialized stream.
    pub fn frame_offset(&self, i: usize) -> usize {
        HEADER_LEN + self.frames[..i].iter().map(|f| 4 + f.len()).sum::<usize>() + 4
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Bitstream {
        Bitstream {
            header: Header {
                width: 64,
                height: 48,
                frame_count: 2,
                objective: ObjectiveKind::Derdo,
                qp: 37,
            },
            frames: vec![vec![1, 2, 3], vec![]],
            audit: None,
        }
    }

    #[test]
    fn round_trip_with_and_without_audit() {
        let mut b = sample();
        let bytes = b.to_bytes();
        assert_eq!(&bytes[..4], b"DERD");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 64);
        assert_eq!(bytes.len(), b.coded_len());
        assert_eq!(Bitstream::from_bytes(&bytes).unwrap(), b);
        let mut c = FeatureCounts::zero();
        c.n_coeff = 9;
        b.audit = Some(c);
        let bytes = b.to_bytes();
        assert!(bytes.len() > b.coded_len());
        assert_eq!(Bitstream::from_bytes(&bytes).unwrap(), b);
    }

    #[test]
    fn truncated_header() {
        let bytes = sample().to_bytes();
        assert!(matches!(Bitstream::from_bytes(&bytes[..10]), Err(Error::Truncated { .. })));
        assert!(matches!(Bitstream::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Truncated { .. })));
    }

    #[test]
    fn bad_magic() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(Bitstream::from_bytes(&bytes), Err(Error::Bitstream(_))));
    }
}
