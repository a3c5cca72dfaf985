//! Built-in 3x5 bitmap digits.

pub const GLYPH_W: u32 = 3;
pub const GLYPH_H: u32 = 5;

const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

/// Whether glyph cell `(col, row)` of `digit` is lit.
pub fn lit(digit: u8, col: u32, row: u32) -> bool {
    let bits = DIGITS[digit as usize][row as usize];
    (bits >> (GLYPH_W - 1 - col)) & 1 == 1
}

/// Width in glyph cells of a digit string with one blank column between digits.
pub fn text_cells(digits: usize) -> u32 {
    (digits as u32 * (GLYPH_W + 1)).saturating_sub(1)
}
