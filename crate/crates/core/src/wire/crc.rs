//! CRC-16/CCITT (polynomial 0x1021, initial value 0xFFFF, no reflection,
//! no final xor). The standard check value for `"123456789"` is `0x29B1`.

const POLY: u16 = 0x1021;
const INIT: u16 = 0xFFFF;

pub fn crc16_ccitt(data: &[u8]) -> u16 {
    update(INIT, data)
}

/// Continues a running CRC over more bytes.
pub fn update(mut crc: u16, data: &[u8]) -> u16 {
    for &byte in data {
        crc ^= (byte as u16) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ POLY
            } else {
                crc << 1
            };
        }
    }
    crc
}
