//! Frame-differencing motion detector for office camera regions.
//!
//! A role (occupant or visitor) reports motion when enough of the pixels
//! covered by its regions changed by more than the pixel threshold between
//! two consecutive frames.

use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};
use presence_core::OfficeMotionPayload;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("frame is {actual} bytes, expected {width}x{height}")]
    PixelCount { width: u32, height: u32, actual: usize },
    #[error("frames differ in size: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("region {index} ({x},{y} {width}x{height}) is outside the {frame_width}x{frame_height} frame")]
    RegionOutOfBounds {
        index: usize,
        x: u32,
        y: u32,
        width: u32,
        height: u32,
        frame_width: u32,
        frame_height: u32,
    },
    #[error("invalid motion parameters: {0}")]
    Params(&'static str),
    #[error("pgm: {0}")]
    Pgm(#[from] image::ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, MotionError> {
        if pixels.len() != width as usize * height as usize {
            return Err(MotionError::PixelCount { width, height, actual: pixels.len() });
        }
        Ok(Frame { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Frame { width, height, pixels: vec![value; width as usize * height as usize] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        self.pixels[(y * self.width + x) as usize] = value;
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self, MotionError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)?.into_luma8();
        let (width, height) = img.dimensions();
        Frame::new(width, height, img.into_raw())
    }

    /// Binary (P5) 8-bit graymap.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        PnmEncoder::new(&mut out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(&self.pixels, self.width, self.height, ExtendedColorType::L8)
            .expect("in-memory pgm encoding cannot fail");
        out.into_inner()
    }

    pub fn load(path: &Path) -> Result<Self, MotionError> {
        Frame::from_pgm(&std::fs::read(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), MotionError> {
        std::fs::write(path, self.to_pgm())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionRole {
    Occupant,
    Visitor,
}

/// Rectangle of the camera view that belongs to the occupant or to visitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub role: RegionRole,
}

impl Region {
    fn fits(&self, frame_width: u32, frame_height: u32) -> bool {
        self.width >= 1
            && self.height >= 1
            && self.x.checked_add(self.width).is_some_and(|r| r <= frame_width)
            && self.y.checked_add(self.height).is_some_and(|b| b <= frame_height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionParams {
    /// A pixel counts as changed when |cur - prev| exceeds this.
    pub pixel_threshold: u8,
    /// Fraction of a role's pixels that must change.
    pub area_fraction: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams { pixel_threshold: 16, area_fraction: 0.01 }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<(), MotionError> {
        if self.pixel_threshold == 0 {
            return Err(MotionError::Params("pixel_threshold must be at least 1"));
        }
        if !(self.area_fraction > 0.0 && self.area_fraction <= 1.0) {
            return Err(MotionError::Params("area_fraction must be in (0, 1]"));
        }
        Ok(())
    }
}

pub fn motion_detect(
    prev: &Frame,
    cur: &Frame,
    regions: &[Region],
    params: &MotionParams,
) -> Result<OfficeMotionPayload, MotionError> {
    params.validate()?;
    if (prev.width, prev.height) != (cur.width, cur.height) {
        return Err(MotionError::DimensionMismatch(prev.width, prev.height, cur.width, cur.height));
    }
    for (index, r) in regions.iter().enumerate() {
        if !r.fits(cur.width, cur.height) {
            return Err(MotionError::RegionOutOfBounds {
                index,
                x: r.x,
                y: r.y,
                width: r.width,
                height: r.height,
                frame_width: cur.width,
                frame_height: cur.height,
            });
        }
    }
    Ok(OfficeMotionPayload {
        occupant_motion: role_moved(prev, cur, regions, RegionRole::Occupant, params),
        visitor_motion: role_moved(prev, cur, regions, RegionRole::Visitor, params),
    })
}

/// Overlapping regions of one role count each pixel once. A role with no
/// regions never reports motion.
fn role_moved(prev: &Frame, cur: &Frame, regions: &[Region], role: RegionRole, params: &MotionParams) -> bool {
    let mut mask = vec![false; cur.pixels.len()];
    for r in regions.iter().filter(|r| r.role == role) {
        for y in r.y..r.y + r.height {
            let row = (y * cur.width) as usize;
            mask[row + r.x as usize..row + (r.x + r.width) as usize].fill(true);
        }
    }
    let (total, changed) = mask
        .iter()
        .zip(prev.pixels.iter().zip(&cur.pixels))
        .filter(|(covered, _)| **covered)
        .fold((0usize, 0usize), |(total, changed), (_, (&a, &b))| {
            (total + 1, changed + usize::from(a.abs_diff(b) > params.pixel_threshold))
        });
    total > 0 && changed as f64 >= params.area_fraction * total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn regions() -> Vec<Region> {
        vec![
            Region { x: 0, y: 0, width: 10, height: 10, role: RegionRole::Occupant },
            Region { x: 10, y: 0, width: 10, height: 10, role: RegionRole::Visitor },
        ]
    }

    #[test]
    fn identical_frames_show_no_motion() {
        let f = Frame::filled(20, 10, 90);
        let m = motion_detect(&f, &f, &regions(), &MotionParams::default()).unwrap();
        assert_eq!(m, OfficeMotionPayload { occupant_motion: false, visitor_motion: false });
    }

    #[test]
    fn full_occupant_change_is_motion() {
        let prev = Frame::filled(20, 10, 0);
        let mut cur = prev.clone();
        for y in 0..10 {
            for x in 0..10 {
                cur.set(x, y, 255);
            }
        }
        let m = motion_detect(&prev, &cur, &regions(), &MotionParams::default()).unwrap();
        assert!(m.occupant_motion);
        assert!(!m.visitor_motion);
    }

    #[test]
    fn role_without_regions_is_still() {
        let prev = Frame::filled(4, 4, 0);
        let cur = Frame::filled(4, 4, 200);
        let only_occupant = [Region { x: 0, y: 0, width: 4, height: 4, role: RegionRole::Occupant }];
        let m = motion_detect(&prev, &cur, &only_occupant, &MotionParams::default()).unwrap();
        assert!(m.occupant_motion && !m.visitor_motion);
    }

    #[test]
    fn overlapping_regions_count_pixels_once() {
        let prev = Frame::filled(10, 10, 0);
        let mut cur = prev.clone();
        cur.set(0, 0, 255);
        // One changed pixel out of 100 union pixels: exactly 1%.
        let twice = [
            Region { x: 0, y: 0, width: 10, height: 10, role: RegionRole::Visitor },
            Region { x: 0, y: 0, width: 5, height: 5, role: RegionRole::Visitor },
        ];
        let m = motion_detect(&prev, &cur, &twice, &MotionParams::default()).unwrap();
        assert!(m.visitor_motion);
        let params = MotionParams { area_fraction: 0.011, ..MotionParams::default() };
        assert!(!motion_detect(&prev, &cur, &twice, &params).unwrap().visitor_motion);
    }

    #[test]
    fn rejects_bad_geometry() {
        let a = Frame::filled(10, 10, 0);
        let b = Frame::filled(10, 11, 0);
        assert!(matches!(
            motion_detect(&a, &b, &[], &MotionParams::default()),
            Err(MotionError::DimensionMismatch(..))
        ));
        let outside = [Region { x: 5, y: 5, width: 6, height: 1, role: RegionRole::Occupant }];
        assert!(matches!(
            motion_detect(&a, &a, &outside, &MotionParams::default()),
            Err(MotionError::RegionOutOfBounds { index: 0, .. })
        ));
        let empty = [Region { x: 0, y: 0, width: 0, height: 1, role: RegionRole::Occupant }];
        assert!(motion_detect(&a, &a, &empty, &MotionParams::default()).is_err());
        assert!(Frame::new(3, 3, vec![0; 8]).is_err());
    }

    #[test]
    fn rejects_bad_params() {
        let f = Frame::filled(2, 2, 0);
        for params in [
            MotionParams { pixel_threshold: 0, area_fraction: 0.1 },
            MotionParams { pixel_threshold: 10, area_fraction: 0.0 },
            MotionParams { pixel_threshold: 10, area_fraction: 1.5 },
        ] {
            assert!(matches!(motion_detect(&f, &f, &[], &params), Err(MotionError::Params(_))));
        }
    }

    #[test]
    fn pgm_round_trip_is_p5() {
        let mut f = Frame::filled(3, 2, 7);
        f.set(2, 1, 250);
        let bytes = f.to_pgm();
        assert!(bytes.starts_with(b"P5"));
        assert_eq!(Frame::from_pgm(&bytes).unwrap(), f);
    }

    fn frame_pair() -> impl Strategy<Value = (Frame, Frame)> {
        (prop::collection::vec(any::<u8>(), 64), prop::collection::vec(any::<u8>(), 64)).prop_map(|(a, b)| {
            (Frame::new(8, 8, a).unwrap(), Frame::new(8, 8, b).unwrap())
        })
    }

    fn region_list() -> impl Strategy<Value = Vec<Region>> {
        prop::collection::vec((0u32..8, 0u32..8, 1u32..8, 1u32..8, any::<bool>()), 0..4).prop_map(|v| {
            v.into_iter()
                .map(|(x, y, w, h, occ)| Region {
                    x,
                    y,
                    width: w.min(8 - x),
                    height: h.min(8 - y),
                    role: if occ { RegionRole::Occupant } else { RegionRole::Visitor },
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn symmetric_in_frame_order((a, b) in frame_pair(), rs in region_list(), theta in 1u8..=255, f in 0.001f64..=1.0) {
            let p = MotionParams { pixel_threshold: theta, area_fraction: f };
            prop_assert_eq!(motion_detect(&a, &b, &rs, &p).unwrap(), motion_detect(&b, &a, &rs, &p).unwrap());
        }

        #[test]
        fn raising_threshold_never_creates_motion((a, b) in frame_pair(), rs in region_list(), lo in 1u8..255, bump in 1u8..=255, f in 0.001f64..=1.0) {
            let hi = lo.saturating_add(bump);
            let low = motion_detect(&a, &b, &rs, &MotionParams { pixel_threshold: lo, area_fraction: f }).unwrap();
            let high = motion_detect(&a, &b, &rs, &MotionParams { pixel_threshold: hi, area_fraction: f }).unwrap();
            prop_assert!(low.occupant_motion || !high.occupant_motion);
            prop_assert!(low.visitor_motion || !high.visitor_motion);
        }
    }
}
