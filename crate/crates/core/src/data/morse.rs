use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stream::{Event, EventStream};

/// Steps between consecutive symbols of one letter.
pub const MORSE_DOT_STEP: u32 = 5;
/// Steps between the last symbol of a letter and the first of the next.
pub const MORSE_LETTER_STEP: u32 = 10;

const TABLE: [&str; 26] = [
    ".-", "-...", "-.-.", "-..", ".", "..-.", "--.", "....", "..", ".---", "-.-", ".-..", "--",
    "-.", "---", ".--.", "--.-", ".-.", "...", "-", "..-", "...-", ".--", "-..-", "-.--", "--..",
];

/// International Morse code of a lowercase letter, `.` for dot and `-` for
/// dash.
pub fn morse_code(letter: char) -> Option<&'static str> {
    letter
        .is_ascii_lowercase()
        .then(|| TABLE[(letter as u8 - b'a') as usize])
}

/// Encodes a lowercase word as a two-channel stream: dots on channel 0,
/// dashes on channel 1. The stream ends at the last symbol.
pub fn morse_encode(word: &str) -> Result<EventStream> {
    if word.is_empty() {
        return Err(Error::InvalidStream("empty word".into()));
    }
    let mut events = Vec::new();
    let mut t = 0u32;
    for (i, ch) in word.chars().enumerate() {
        let code = morse_code(ch)
            .ok_or_else(|| Error::InvalidStream(format!("non-letter {ch:?} in {word:?}")))?;
        if i > 0 {
            t += MORSE_LETTER_STEP;
        }
        for (j, sym) in code.bytes().enumerate() {
            if j > 0 {
                t += MORSE_DOT_STEP;
            }
            events.push(Event::new(t, u32::from(sym == b'-')));
        }
    }
    EventStream::new(t + 1, 2, events)
}
