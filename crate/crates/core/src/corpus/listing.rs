use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::MnemonicSequence;
use crate::{Error, Result};

/// Instruction prefixes that objdump prints as a separate word before the
/// mnemonic. Each is kept as an opcode token of its own.
const PREFIXES: &[&str] = &[
    "rep", "repe", "repz", "repne", "repnz", "lock", "data16", "data32", "addr16", "addr32", "cs", "ds", "es", "fs",
    "gs", "ss", "notrack", "bnd", "xacquire", "xrelease", "rex", "rex.w",
];

/// One disassembly listing as handed to the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawListing {
    pub sample_id: String,
    pub family: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    /// Fraction of instruction lines allowed to yield no mnemonic.
    pub max_malformed_fraction: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            max_malformed_fraction: 0.0,
        }
    }
}

enum Line<'a> {
    Other,
    /// Raw bytes only: objdump wraps long encodings onto a second line.
    Continuation,
    Malformed,
    Instruction(&'a str, Option<&'a str>),
}

fn is_hex(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_hexdigit())
}

fn is_byte(s: &str) -> bool {
    s.len() == 2 && is_hex(s)
}

fn is_mnemonic(s: &str) -> bool {
    let mut bytes = s.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphabetic())
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'.' || b == b'_')
}

fn classify_line(line: &str) -> Line<'_> {
    let Some((addr, rest)) = line.split_once(':') else {
        return Line::Other;
    };
    if !is_hex(addr.trim()) {
        return Line::Other;
    }
    let mut words = rest.split_whitespace().skip_while(|w| is_byte(w));
    let Some(first) = words.next() else {
        return if rest.split_whitespace().next().is_some() {
            Line::Continuation
        } else {
            Line::Malformed
        };
    };
    if !is_mnemonic(first) {
        return Line::Malformed;
    }
    let lower_first = first.to_ascii_lowercase();
    if PREFIXES.contains(&lower_first.as_str()) {
        let next = words.next().filter(|w| is_mnemonic(w));
        return Line::Instruction(first, next);
    }
    Line::Instruction(first, None)
}

/// Extracts the mnemonic stream from `objdump -d` style text.
///
/// Instruction lines are `address: bytes mnemonic operands`. Labels, section
/// headers and blank lines are ignored. A leading prefix such as `rep` or
/// `lock` becomes its own token, followed by the mnemonic it modifies.
pub fn parse_disassembly(listing: &RawListing, options: &ParseOptions) -> Result<MnemonicSequence> {
    let mut mnemonics = Vec::new();
    let mut instruction_lines = 0usize;
    let mut malformed = 0usize;
    let mut first_bad = None;

    for (idx, line) in listing.text.lines().enumerate() {
        match classify_line(line) {
            Line::Other | Line::Continuation => {}
            Line::Malformed => {
                instruction_lines += 1;
                malformed += 1;
                first_bad.get_or_insert(idx + 1);
            }
            Line::Instruction(op, next) => {
                instruction_lines += 1;
                mnemonics.push(op.to_ascii_lowercase());
                if let Some(next) = next {
                    mnemonics.push(next.to_ascii_lowercase());
                }
            }
        }
    }

    if let Some(line) = first_bad {
        let fraction = malformed as f64 / instruction_lines as f64;
        if fraction > options.max_malformed_fraction {
            return Err(Error::Parse {
                line,
                malformed,
                instruction_lines,
            });
        }
    }

    Ok(MnemonicSequence {
        sample_id: listing.sample_id.clone(),
        family: listing.family.clone(),
        mnemonics,
    })
}

/// Renders mnemonics as a minimal objdump-like listing that
/// [`parse_disassembly`] reads back to the same tokens.
pub fn render_listing(mnemonics: &[String]) -> String {
    let mut out = String::from("\nDisassembly of section .text:\n\n0000000000401000 <_start>:\n");
    for (i, m) in mnemonics.iter().enumerate() {
        out.push_str(&format!("  {:x}:\t90 \t{}\n", 0x401000 + i, m));
    }
    out
}
