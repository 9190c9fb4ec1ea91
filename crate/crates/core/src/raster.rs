//! 8-bit RGB rasters and the binary PPM (P6) codec.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::io::{read, write_atomic};

pub type Rgb = [u8; 3];

/// Decoded images keyed by image id.
pub type RasterStore = BTreeMap<u64, Raster>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    pixels: Vec<Rgb>,
}

impl Raster {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument(format!("empty raster {width}x{height}")));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::Argument(format!(
                "{} pixels for a {width}x{height} raster",
                pixels.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        assert!(width > 0 && height > 0, "empty raster");
        Raster {
            width,
            height,
            pixels: vec![color; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = c;
    }

    pub fn fill_rect(&mut self, x: u32, y: u32, w: u32, h: u32, c: Rgb) {
        for yy in y..(y + h).min(self.height) {
            for xx in x..(x + w).min(self.width) {
                self.set(xx, yy, c);
            }
        }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let header = format!("P6\n{} {}\n255\n", self.width, self.height);
        let mut out = Vec::with_capacity(header.len() + self.pixels.len() * 3);
        out.extend_from_slice(header.as_bytes());
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let mut cur = HeaderCursor { bytes, pos: 0 };
        match bytes.get(..2) {
            Some(b"P6") => {}
            Some([b'P', d]) if (b'1'..=b'7').contains(d) => {
                return Err(Error::UnsupportedVariant(format!("P{}", *d as char)))
            }
            _ => {
                return Err(Error::RasterFormat {
                    offset: 0,
                    message: "missing P6 magic number".into(),
                })
            }
        }
        cur.pos = 2;
        let width = cur.number("width")?;
        let height = cur.number("height")?;
        let maxval = cur.number("maxval")?;
        if width == 0 || height == 0 {
            return Err(Error::RasterFormat {
                offset: cur.pos,
                message: format!("empty raster {width}x{height}"),
            });
        }
        if maxval != 255 {
            return Err(Error::UnsupportedVariant(format!("maxval {maxval}")));
        }
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => {
                return Err(Error::RasterFormat {
                    offset: cur.pos,
                    message: "expected a single whitespace byte before pixel data".into(),
                })
            }
        }
        let need = width as usize * height as usize * 3;
        let payload = &bytes[cur.pos..];
        if payload.len() < need {
            return Err(Error::RasterFormat {
                offset: bytes.len(),
                message: format!(
                    "truncated pixel payload: expected {need} bytes from offset {}, found {}",
                    cur.pos,
                    payload.len()
                ),
            });
        }
        let pixels = payload[..need]
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        Raster::new(width, height, pixels)
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let before = self.pos;
        self.skip_space_and_comments();
        if self.pos == before {
            return Err(Error::RasterFormat {
                offset: self.pos,
                message: format!("expected whitespace before {what}"),
            });
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::RasterFormat {
                offset: start,
                message: format!("expected decimal {what}"),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::RasterFormat {
                offset: start,
                message: format!("{what} out of range"),
            })
    }
}

pub fn load_raster(path: impl AsRef<Path>) -> Result<Raster> {
    Raster::from_ppm(&read(path.as_ref())?)
}

pub fn save_raster(r: &Raster, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &r.to_ppm())
}

/// Load `dir/<file_name>` for every image of `d`, checking dimensions.
pub fn load_raster_dir(d: &Dataset, dir: impl AsRef<Path>) -> Result<RasterStore> {
    let dir = dir.as_ref();
    let mut store = RasterStore::new();
    for img in &d.images {
        let r = load_raster(dir.join(&img.file_name))?;
        if (r.width(), r.height()) != (img.width, img.height) {
            return Err(Error::Load {
                record: format!("image {} ({})", img.id, img.file_name),
                field: "width",
                message: format!(
                    "raster is {}x{}, annotation file says {}x{}",
                    r.width(),
                    r.height(),
                    img.width,
                    img.height
                ),
            });
        }
        store.insert(img.id, r);
    }
    Ok(store)
}

/// Write every raster of `store` to `dir/<file_name>`.
pub fn save_raster_dir(d: &Dataset, store: &RasterStore, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    for img in &d.images {
        let r = store.get(&img.id).ok_or(Error::MissingRaster(img.id))?;
        save_raster(r, dir.join(&img.file_name))?;
    }
    Ok(())
}
