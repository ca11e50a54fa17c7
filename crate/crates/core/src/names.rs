//! Variable naming scheme shared by the model builder, the file exporters and
//! the solution parsers: `z[l,j,q]`, `v[l,s,j,q,t]`, `u[j,q,t]`, `h[i,j,q,t]`,
//! `x[l,s,j,q,t]`, `EB[j,q,t]` and `L[j,q,t]`, with decimal indices. Sites and
//! test points are named by their ids, types and states by their index, years
//! and periods from 1.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarName {
    Z { l: usize, j: u32, q: usize },
    V { l: usize, s: usize, j: u32, q: usize, t: usize },
    U { j: u32, q: usize, t: usize },
    H { i: u32, j: u32, q: usize, t: usize },
    X { l: usize, s: usize, j: u32, q: usize, t: usize },
    EB { j: u32, q: usize, t: usize },
    L { j: u32, q: usize, t: usize },
}

/// Variable families in model order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarFamily {
    Z,
    V,
    U,
    H,
    X,
    EB,
    L,
}

impl VarFamily {
    pub const ALL: [VarFamily; 7] = [Self::Z, Self::V, Self::U, Self::H, Self::X, Self::EB, Self::L];

    pub fn prefix(self) -> &'static str {
        match self {
            Self::Z => "z",
            Self::V => "v",
            Self::U => "u",
            Self::H => "h",
            Self::X => "x",
            Self::EB => "EB",
            Self::L => "L",
        }
    }

    fn arity(self) -> usize {
        match self {
            Self::Z | Self::U | Self::EB | Self::L => 3,
            Self::H => 4,
            Self::V | Self::X => 5,
        }
    }
}

impl VarName {
    pub fn family(&self) -> VarFamily {
        match self {
            Self::Z { .. } => VarFamily::Z,
            Self::V { .. } => VarFamily::V,
            Self::U { .. } => VarFamily::U,
            Self::H { .. } => VarFamily::H,
            Self::X { .. } => VarFamily::X,
            Self::EB { .. } => VarFamily::EB,
            Self::L { .. } => VarFamily::L,
        }
    }

    /// Site id the variable belongs to.
    pub fn site(&self) -> u32 {
        match *self {
            Self::Z { j, .. }
            | Self::V { j, .. }
            | Self::U { j, .. }
            | Self::H { j, .. }
            | Self::X { j, .. }
            | Self::EB { j, .. }
            | Self::L { j, .. } => j,
        }
    }

    /// Year the variable belongs to (the installation year for `z`).
    pub fn year(&self) -> usize {
        match *self {
            Self::Z { q, .. }
            | Self::V { q, .. }
            | Self::U { q, .. }
            | Self::H { q, .. }
            | Self::X { q, .. }
            | Self::EB { q, .. }
            | Self::L { q, .. } => q,
        }
    }

    /// Period of the variable; `None` for `z`.
    pub fn period(&self) -> Option<usize> {
        match *self {
            Self::Z { .. } => None,
            Self::V { t, .. }
            | Self::U { t, .. }
            | Self::H { t, .. }
            | Self::X { t, .. }
            | Self::EB { t, .. }
            | Self::L { t, .. } => Some(t),
        }
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Z { l, j, q } => write!(f, "z[{l},{j},{q}]"),
            Self::V { l, s, j, q, t } => write!(f, "v[{l},{s},{j},{q},{t}]"),
            Self::U { j, q, t } => write!(f, "u[{j},{q},{t}]"),
            Self::H { i, j, q, t } => write!(f, "h[{i},{j},{q},{t}]"),
            Self::X { l, s, j, q, t } => write!(f, "x[{l},{s},{j},{q},{t}]"),
            Self::EB { j, q, t } => write!(f, "EB[{j},{q},{t}]"),
            Self::L { j, q, t } => write!(f, "L[{j},{q},{t}]"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("`{0}` is not a model variable name")]
pub struct NameError(pub String);

impl FromStr for VarName {
    type Err = NameError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || NameError(text.to_string());
        let (prefix, rest) = text.split_once('[').ok_or_else(err)?;
        let inner = rest.strip_suffix(']').ok_or_else(err)?;
        let family = VarFamily::ALL.into_iter().find(|f| f.prefix() == prefix).ok_or_else(err)?;
        let idx: Vec<u64> = inner
            .split(',')
            .map(|p| {
                if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(err());
                }
                p.parse::<u64>().map_err(|_| err())
            })
            .collect::<Result<_, _>>()?;
        if idx.len() != family.arity() {
            return Err(err());
        }
        let id = |k: usize| u32::try_from(idx[k]).map_err(|_| err());
        let ix = |k: usize| usize::try_from(idx[k]).map_err(|_| err());
        let name = match family {
            VarFamily::Z => Self::Z { l: ix(0)?, j: id(1)?, q: ix(2)? },
            VarFamily::V => Self::V { l: ix(0)?, s: ix(1)?, j: id(2)?, q: ix(3)?, t: ix(4)? },
            VarFamily::U => Self::U { j: id(0)?, q: ix(1)?, t: ix(2)? },
            VarFamily::H => Self::H { i: id(0)?, j: id(1)?, q: ix(2)?, t: ix(3)? },
            VarFamily::X => Self::X { l: ix(0)?, s: ix(1)?, j: id(2)?, q: ix(3)?, t: ix(4)? },
            VarFamily::EB => Self::EB { j: id(0)?, q: ix(1)?, t: ix(2)? },
            VarFamily::L => Self::L { j: id(0)?, q: ix(1)?, t: ix(2)? },
        };
        // Reject non-canonical spellings such as leading zeros.
        if name.to_string() != text {
            return Err(err());
        }
        Ok(name)
    }
}
