//! The recognizer's symbol sets.
//!
//! 36 visual characters (a-z, 0-9) are shared by the renderer, the
//! corruption model and the CTC branch. The attention decoders add three
//! control symbols (EoS, UKN, PAD) for a 39-class output space, plus a
//! BOS row that exists only in the character embedding table.

/// Number of visual characters.
pub const N_VIS: usize = 36;
/// CTC classes: visual characters plus blank.
pub const N_CTC: usize = 37;
/// CTC blank index.
pub const BLANK: usize = 36;
/// Attention-decoder classes: visual characters plus EoS, UKN, PAD.
pub const N_DEC: usize = 39;
/// End-of-sequence class index.
pub const EOS: usize = 36;
/// Unknown-character class index.
pub const UKN: usize = 37;
/// Padding class index.
pub const PAD: usize = 38;
/// Begin-of-sequence row in the embedding table (never a classifier output).
pub const BOS: usize = 39;
/// Rows in the shared character embedding table.
pub const N_EMBED: usize = 40;

/// The visual charset in index order.
pub const CHARS: [char; N_VIS] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r',
    's', 't', 'u', 'v', 'w', 'x', 'y', 'z', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9',
];

/// Index of a visual character, or `None` if outside the charset.
pub fn char_index(c: char) -> Option<usize> {
    match c {
        'a'..='z' => Some(c as usize - 'a' as usize),
        '0'..='9' => Some(26 + c as usize - '0' as usize),
        _ => None,
    }
}

/// The character at a visual index. Panics if `i >= N_VIS`.
pub fn index_char(i: usize) -> char {
    CHARS[i]
}

/// Encode a label into visual-character indices, reporting the first
/// offending character on failure.
pub fn encode_label(label: &str) -> Result<Vec<usize>, char> {
    label.chars().map(|c| char_index(c).ok_or(c)).collect()
}

/// Decode visual-character indices back into a string.
pub fn decode_label(indices: &[usize]) -> String {
    indices.iter().map(|&i| index_char(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_all_chars() {
        for (i, &c) in CHARS.iter().enumerate() {
            assert_eq!(char_index(c), Some(i));
            assert_eq!(index_char(i), c);
        }
    }

    #[test]
    fn rejects_out_of_charset() {
        assert_eq!(char_index('A'), None);
        assert_eq!(char_index('-'), None);
        assert_eq!(encode_label("ab-c"), Err('-'));
    }

    #[test]
    fn encode_decode() {
        let idx = encode_label("cat42").unwrap();
        assert_eq!(decode_label(&idx), "cat42");
    }
}
