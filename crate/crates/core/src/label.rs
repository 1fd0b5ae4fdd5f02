use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// The three SpGEMM dataflow schemes, with their integer class codes.
///
/// The codes double as the `'0'`/`'1'`/`'2'` strings emitted by exported rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum DataflowLabel {
    /// Inner product: one dot product per output element (A in CSR, B in CSC).
    Ip = 0,
    /// Outer product: one rank-1 update per shared index (A in CSC, B in CSR).
    Op = 1,
    /// Row-wise product (Gustavson): scale-and-merge rows of B (both CSR).
    Rw = 2,
}

impl DataflowLabel {
    pub const ALL: [DataflowLabel; 3] = [DataflowLabel::Ip, DataflowLabel::Op, DataflowLabel::Rw];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DataflowLabel::Ip),
            1 => Some(DataflowLabel::Op),
            2 => Some(DataflowLabel::Rw),
            _ => None,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            DataflowLabel::Ip => "ip",
            DataflowLabel::Op => "op",
            DataflowLabel::Rw => "rw",
        }
    }
}

impl fmt::Display for DataflowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for DataflowLabel {
    type Err = Error;

    /// Accepts either the short name (`ip`, `op`, `rw`, any case) or the class code.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ip" | "0" => Ok(DataflowLabel::Ip),
            "op" | "1" => Ok(DataflowLabel::Op),
            "rw" | "2" => Ok(DataflowLabel::Rw),
            other => Err(Error::InvalidArgument(format!("unknown dataflow `{other}`"))),
        }
    }
}
