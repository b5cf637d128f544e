//! `DCE1` binary container for curve maps.
//!
//! Layout, all little-endian: magic `b"DCE1"`, then `grid_w`, `grid_h` and
//! `iterations` as `u32`, then every parameter as `f32` in iteration-major,
//! channel-major, row-major order.

use super::CurveMap;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"DCE1";
const HEADER_LEN: usize = 16;

impl CurveMap {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.params().len());
        out.extend_from_slice(MAGIC);
        for v in [self.grid_w(), self.grid_h(), self.iterations()] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for &a in self.params() {
            out.extend_from_slice(&(a as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<CurveMap> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "curve map needs a {HEADER_LEN}-byte header, got {} bytes",
                bytes.len()
            )));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("missing DCE1 magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
        let (grid_w, grid_h, iterations) = (word(0), word(1), word(2));
        let count = grid_w
            .checked_mul(grid_h)
            .and_then(|n| n.checked_mul(iterations))
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| Error::Format("curve map dimensions overflow".into()))?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != count * 4 {
            return Err(Error::Format(format!(
                "{grid_w}x{grid_h}x{iterations} curve map needs {} payload bytes, got {}",
                count * 4,
                body.len()
            )));
        }
        let params = body
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        let cm = CurveMap::new(grid_w, grid_h, iterations, params)?;
        cm.check_range()?;
        Ok(cm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let cm = CurveMap::constant(2, 1, 1, 0.5).unwrap();
        let bytes = cm.to_bytes();
        assert_eq!(&bytes[..4], b"DCE1");
        assert_eq!(&bytes[4..16], &[2, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 6 * 4);
        assert_eq!(&bytes[16..20], &0.5f32.to_le_bytes());
    }

    #[test]
    fn corrupt_containers_rejected() {
        let good = CurveMap::zeros(2, 2, 2).unwrap().to_bytes();
        assert!(CurveMap::from_bytes(&good[..10]).is_err());
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(CurveMap::from_bytes(&bad_magic).is_err());
        assert!(CurveMap::from_bytes(&good[..good.len() - 4]).is_err());
        let mut out_of_range = good.clone();
        out_of_range[16..20].copy_from_slice(&2.0f32.to_le_bytes());
        assert!(matches!(CurveMap::from_bytes(&out_of_range), Err(Error::Parameter(_))));
    }

    proptest! {
        #[test]
        fn round_trip_at_f32_precision(gw in 1usize..5, gh in 1usize..5, n in 1usize..4, seed in any::<u64>()) {
            let len = gw * gh * n * 3;
            let params: Vec<f64> = (0..len)
                .map(|i| (((seed.wrapping_add(i as u64 * 7919)) % 2001) as f64 / 1000.0) - 1.0)
                .collect();
            let cm = CurveMap::new(gw, gh, n, params).unwrap();
            let back = CurveMap::from_bytes(&cm.to_bytes()).unwrap();
            prop_assert_eq!((back.grid_w(), back.grid_h(), back.iterations()), (gw, gh, n));
            for (a, b) in cm.params().iter().zip(back.params()) {
                prop_assert_eq!(*a as f32, *b as f32);
            }
        }
    }
}
