//! MSB-first bit packing.

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    /// Bits already used in the last byte (0 means byte-aligned).
    used: u32,
    written: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn write(&mut self, value: u32, width: u32) {
        debug_assert!(width <= 32);
        debug_assert!(width == 32 || value >> width == 0);
        for i in (0..width).rev() {
            let bit = ((value >> i) & 1) as u8;
            if self.used == 0 {
                self.bytes.push(0);
            }
            let last = self.bytes.last_mut().expect("pushed above");
            *last |= bit << (7 - self.used);
            self.used = (self.used + 1) % 8;
        }
        self.written += width as u64;
    }

    /// Zero-pads to the next byte boundary.
    pub fn align(&mut self) {
        self.used = 0;
    }

    pub fn bits_written(&self) -> u64 {
        self.written
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    /// Reads `width` bits, or `None` past the end of the buffer.
    pub fn read(&mut self, width: u32) -> Option<u32> {
        if self.pos + width as u64 > self.bytes.len() as u64 * 8 {
            return None;
        }
        let mut v = 0u32;
        for _ in 0..width {
            let byte = self.bytes[(self.pos / 8) as usize];
            let bit = (byte >> (7 - (self.pos % 8))) & 1;
            v = (v << 1) | bit as u32;
            self.pos += 1;
        }
        Some(v)
    }

    pub fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }

    pub fn byte_position(&self) -> usize {
        (self.pos / 8) as usize
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn msb_first_layout() {
        let mut w = BitWriter::new();
        w.write(0b101, 3);
        w.write(0b1, 1);
        w.write(0xff, 8);
        assert_eq!(w.bits_written(), 12);
        assert_eq!(w.into_bytes(), vec![0b1011_1111, 0b1111_0000]);
    }

    #[test]
    fn align_pads_with_zeros() {
        let mut w = BitWriter::new();
        w.write(1, 1);
        w.align();
        w.write(1, 1);
        assert_eq!(w.into_bytes(), vec![0x80, 0x80]);
    }

    proptest! {
        #[test]
        fn round_trip(values in prop::collection::vec((0u32..u32::MAX, 1u32..=32), 0..50)) {
            let mut w = BitWriter::new();
            let masked: Vec<(u32, u32)> = values
                .iter()
                .map(|&(v, n)| (if n == 32 { v } else { v & ((1 << n) - 1) }, n))
                .collect();
            for &(v, n) in &masked {
                w.write(v, n);
            }
            let total: u64 = masked.iter().map(|p| p.1 as u64).sum();
            let bytes = w.into_bytes();
            prop_assert_eq!(bytes.len() as u64, total.div_ceil(8));
            let mut r = BitReader::new(&bytes);
            for &(v, n) in &masked {
                prop_assert_eq!(r.read(n), Some(v));
            }
        }
    }
}
