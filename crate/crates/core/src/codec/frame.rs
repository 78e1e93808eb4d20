use std::io::{Read, Write};
use std::path::Path;

use crate::energy_model::Component;
use crate::{Error, Result};

/// One 8-bit sample plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        Plane {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Copies an `n×n` block starting at `(x, y)` into `out` (row-major).
    pub fn read_block(&self, x: usize, y: usize, n: usize, out: &mut [u8]) {
        for r in 0..n {
            let s = (y + r) * self.width + x;
            out[r * n..(r + 1) * n].copy_from_slice(&self.data[s..s + n]);
        }
    }

    pub fn write_block(&mut self, x: usize, y: usize, n: usize, src: &[u8]) {
        for r in 0..n {
            let d = (y + r) * self.width + x;
            self.data[d..d + n].copy_from_slice(&src[r * n..(r + 1) * n]);
        }
    }

    /// Sum of squared differences against `other` (same dimensions).
    pub fn sse(&self, other: &Plane) -> u64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| {
                let d = i64::from(a) - i64::from(b);
                (d * d) as u64
            })
            .sum()
    }
}

/// A 4:2:0 picture with 8-bit samples. Width and height are multiples of 8.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub planes: [Plane; 3],
}

impl Frame {
    pub fn new(width: usize, height: usize, fill: u8) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Frame {
            width,
            height,
            planes: [
                Plane::new(width, height, fill),
                Plane::new(width / 2, height / 2, fill),
                Plane::new(width / 2, height / 2, fill),
            ],
        })
    }

    pub fn from_planes(width: usize, height: usize, y: Vec<u8>, u: Vec<u8>, v: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        let (cw, ch) = (width / 2, height / 2);
        if y.len() != width * height || u.len() != cw * ch || v.len() != cw * ch {
            return Err(Error::InvalidInput("plane sizes do not match 4:2:0 layout".into()));
        }
        Ok(Frame {
            width,
            height,
            planes: [
                Plane { width, height, data: y },
                Plane { width: cw, height: ch, data: u },
                Plane { width: cw, height: ch, data: v },
            ],
        })
    }

    pub fn plane(&self, c: Component) -> &Plane {
        &self.planes[c as usize]
    }

    pub fn plane_mut(&mut self, c: Component) -> &mut Plane {
        &mut self.planes[c as usize]
    }

    /// Size of one frame in a planar `.yuv` file.
    pub fn byte_len(width: usize, height: usize) -> usize {
        width * height * 3 / 2
    }

    pub fn write_raw(&self, w: &mut impl Write) -> std::io::Result<()> {
        for p in &self.planes {
            w.write_all(&p.data)?;
        }
        Ok(())
    }
}

pub(crate) fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimensions { width, height, reason: "empty frame" });
    }
    if width % 8 != 0 || height % 8 != 0 {
        return Err(Error::Dimensions {
            width,
            height,
            reason: "width and height must be multiples of 8",
        });
    }
    if width > 1 << 16 || height > 1 << 16 {
        return Err(Error::Dimensions { width, height, reason: "frame too large" });
    }
    Ok(())
}

/// Reads up to `max_frames` frames of planar 4:2:0 video.
pub fn read_yuv(path: impl AsRef<Path>, width: usize, height: usize, max_frames: usize) -> Result<Vec<Frame>> {
    check_dims(width, height)?;
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let frame_len = Frame::byte_len(width, height);
    let mut frames = Vec::new();
    let mut buf = vec![0u8; frame_len];
    while frames.len() < max_frames {
        match read_exact_or_eof(&mut file, &mut buf).map_err(|e| Error::io(path, e))? {
            0 => break,
            n if n < frame_len => {
                return Err(Error::InvalidInput(format!(
                    "{}: trailing partial frame ({n} of {frame_len} bytes)",
                    path.display()
                )))
            }
            _ => {}
        }
        let (y, rest) = buf.split_at(width * height);
        let (u, v) = rest.split_at(width * height / 4);
        frames.push(Frame::from_planes(width, height, y.to_vec(), u.to_vec(), v.to_vec())?);
    }
    if frames.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no frames", path.display())));
    }
    Ok(frames)
}

fn read_exact_or_eof(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

pub fn write_yuv(path: impl AsRef<Path>, frames: &[Frame]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for f in frames {
        f.write_raw(&mut out).expect("vec write");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a binary PGM (P5) or PPM (P6) image and converts it to a 4:2:0
/// frame. PGM input gets neutral chroma; PPM uses BT.601 full-range
/// conversion with 2×2 chroma averaging.
pub fn read_pnm(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pnm(&bytes).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn parse_pnm(bytes: &[u8]) -> std::result::Result<Frame, String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<String, String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        m => return Err(format!("unsupported PNM type {m}")),
    };
    let num = |s: String| s.parse::<usize>().map_err(|_| format!("bad header value {s:?}"));
    let width = num(token()?)?;
    let height = num(token()?)?;
    let maxval = num(token()?)?;
    if maxval != 255 {
        return Err("only 8-bit PNM is supported".into());
    }
    let data_start = pos + 1;
    let need = width * height * channels;
    if bytes.len() < data_start + need {
        return Err("truncated pixel data".into());
    }
    let px = &bytes[data_start..data_start + need];
    check_dims(width, height).map_err(|e| e.to_string())?;
    let (cw, ch) = (width / 2, height / 2);
    if channels == 1 {
        return Frame::from_planes(width, height, px.to_vec(), vec![128; cw * ch], vec![128; cw * ch])
            .map_err(|e| e.to_string());
    }
    let mut y = vec![0u8; width * height];
    let mut cb = vec![0f64; width * height];
    let mut cr = vec![0f64; width * height];
    for i in 0..width * height {
        let (r, g, b) = (px[3 * i] as f64, px[3 * i + 1] as f64, px[3 * i + 2] as f64);
        y[i] = (0.299 * r + 0.587 * g + 0.114 * b).round().clamp(0.0, 255.0) as u8;
        cb[i] = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
        cr[i] = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    }
    let sub = |c: &[f64]| -> Vec<u8> {
        let mut out = vec![0u8; cw * ch];
        for yy in 0..ch {
            for xx in 0..cw {
                let i = 2 * yy * width + 2 * xx;
                let s = c[i] + c[i + 1] + c[i + width] + c[i + width + 1];
                out[yy * cw + xx] = (s / 4.0).round().clamp(0.0, 255.0) as u8;
            }
        }
        out
    };
    Frame::from_planes(width, height, y, sub(&cb), sub(&cr)).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(Frame::new(20, 16, 0), Err(Error::Dimensions { .. })));
        assert!(Frame::new(24, 16, 0).is_ok());
    }

    #[test]
    fn yuv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.yuv");
        let mut f = Frame::new(16, 8, 10).unwrap();
        f.planes[0].set(3, 2, 200);
        f.planes[2].set(1, 1, 7);
        let g = Frame::new(16, 8, 99).unwrap();
        write_yuv(&path, &[f.clone(), g.clone()]).unwrap();
        assert_eq!(read_yuv(&path, 16, 8, 10).unwrap(), vec![f.clone(), g]);
        assert_eq!(read_yuv(&path, 16, 8, 1).unwrap(), vec![f]);
    }

    #[test]
    fn partial_frame_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.yuv");
        std::fs::write(&path, vec![0u8; Frame::byte_len(16, 8) + 5]).unwrap();
        assert!(read_yuv(&path, 16, 8, 10).is_err());
    }

    #[test]
    fn pgm_and_ppm() {
        let mut pgm = b"P5\n# comment\n8 8\n255\n".to_vec();
        pgm.extend((0..64).map(|i| i as u8));
        let f = parse_pnm(&pgm).unwrap();
        assert_eq!(f.planes[0].at(7, 7), 63);
        assert!(f.planes[1].data.iter().all(|&v| v == 128));

        let mut ppm = b"P6 8 8 255\n".to_vec();
        ppm.extend(std::iter::repeat([255u8, 255, 255]).take(64).flatten());
        let f = parse_pnm(&ppm).unwrap();
        assert!(f.planes[0].data.iter().all(|&v| v == 255));
        assert!(f.planes[1].data.iter().all(|&v| v == 128));
    }
}
