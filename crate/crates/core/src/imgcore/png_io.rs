//! 8-bit grayscale / RGB PNG codec over [`Image`].

use std::cell::Cell;
use std::io::{self, BufRead, Cursor, Read, Seek, SeekFrom};
use std::path::Path;
use std::rc::Rc;

use png::{BitDepth, ColorType, Transformations};

use super::Image;
use crate::{Error, Result};

/// Cursor that remembers how far into the stream the decoder has read, so
/// decode failures can name a byte offset.
struct TrackedCursor<'a> {
    inner: Cursor<&'a [u8]>,
    high_water: Rc<Cell<u64>>,
}

impl TrackedCursor<'_> {
    fn touch(&self) {
        let pos = self.inner.position();
        if pos > self.high_water.get() {
            self.high_water.set(pos);
        }
    }
}

impl Read for TrackedCursor<'_> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.touch();
        Ok(n)
    }
}

impl BufRead for TrackedCursor<'_> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        self.inner.consume(amt);
        self.touch();
    }
}

impl Seek for TrackedCursor<'_> {
    fn seek(&mut self, pos: SeekFrom) -> io::Result<u64> {
        let p = self.inner.seek(pos)?;
        self.touch();
        Ok(p)
    }
}

fn check_format(color: ColorType, depth: BitDepth) -> Result<usize> {
    let channels = match color {
        ColorType::Grayscale => 1,
        ColorType::Rgb => 3,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "color type {other:?}; only 8-bit grayscale and RGB are supported"
            )))
        }
    };
    if depth != BitDepth::Eight {
        return Err(Error::UnsupportedFormat(format!(
            "bit depth {depth:?}; only 8-bit samples are supported"
        )));
    }
    Ok(channels)
}

/// Decode an 8-bit grayscale or RGB PNG. Samples become `code / 255`.
pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let offset = Rc::new(Cell::new(0));
    let decode_err = |e: png::DecodingError, offset: &Rc<Cell<u64>>| Error::Decode {
        offset: offset.get(),
        message: e.to_string(),
    };
    let mut decoder = png::Decoder::new(TrackedCursor {
        inner: Cursor::new(bytes),
        high_water: offset.clone(),
    });
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| decode_err(e, &offset))?;
    let info = reader.info();
    let channels = check_format(info.color_type, info.bit_depth)?;
    let (width, height) = (info.width as usize, info.height as usize);

    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::UnsupportedFormat("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| decode_err(e, &offset))?;
    let n = width * height;
    let mut data = vec![0.0; n * channels];
    for y in 0..height {
        let row = &buf[y * frame.line_size..y * frame.line_size + width * channels];
        for x in 0..width {
            for c in 0..channels {
                data[c * n + y * width + x] = f64::from(row[x * channels + c]) / 255.0;
            }
        }
    }
    Image::new(width, height, channels, data)
}

/// Width and height from a PNG header, without decoding pixel data.
pub fn read_png_dimensions(path: &Path) -> Result<(usize, usize)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let offset = Rc::new(Cell::new(0));
    let decoder = png::Decoder::new(TrackedCursor {
        inner: Cursor::new(&bytes),
        high_water: offset.clone(),
    });
    let reader = decoder.read_info().map_err(|e| Error::Decode {
        offset: offset.get(),
        message: e.to_string(),
    })?;
    let info = reader.info();
    Ok((info.width as usize, info.height as usize))
}

/// Sample-to-code quantization: `round(clamp(v, 0, 1) * 255)`, half up.
pub(crate) fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Encode as an 8-bit PNG (grayscale for one channel, RGB for three).
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    img.require_linear("encode_png")?;
    let (w, h, channels) = (img.width(), img.height(), img.channels());
    let n = w * h;
    let mut raw = vec![0u8; n * channels];
    for (c, plane) in img.planes().enumerate() {
        for (i, &v) in plane.iter().enumerate() {
            raw[i * channels + c] = quantize(v);
        }
    }
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, w as u32, h as u32);
        encoder.set_color(if channels == 1 {
            ColorType::Grayscale
        } else {
            ColorType::Rgb
        });
        encoder.set_depth(BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer
            .write_image_data(&raw)
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer.finish().map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}
