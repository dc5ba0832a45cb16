use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The 34 hardware-state attributes the agent can observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Attribute {
    Atbwb,
    Atbwf,
    Tbw,
    Rlmi,
    Rgmi,
    Rstcmi,
    Rsfi,
    Rspi,
    Ntf,
    Niw,
    Nsw,
    Nfsfi,
    Nfmi,
    Nrspi,
    Nrgmi,
    Nrstcmi,
    Nrsfi,
    Nwi,
    Nps,
    Nmps,
    Nsfps,
    Nspps,
    Naipmi,
    Nri,
    Nws,
    Nrai,
    Stbrmi,
    Smnmie,
    Icmp,
    L1mp,
    L2mp,
    Nipl1m,
    Agml,
    Gnmie,
}

pub const NUM_ATTRIBUTES: usize = 34;

/// How bucket widths grow across an attribute's range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    IncreasingWidths,
    DecreasingWidths,
}

impl Attribute {
    pub const ALL: [Attribute; NUM_ATTRIBUTES] = [
        Attribute::Atbwb,
        Attribute::Atbwf,
        Attribute::Tbw,
        Attribute::Rlmi,
        Attribute::Rgmi,
        Attribute::Rstcmi,
        Attribute::Rsfi,
        Attribute::Rspi,
        Attribute::Ntf,
        Attribute::Niw,
        Attribute::Nsw,
        Attribute::Nfsfi,
        Attribute::Nfmi,
        Attribute::Nrspi,
        Attribute::Nrgmi,
        Attribute::Nrstcmi,
        Attribute::Nrsfi,
        Attribute::Nwi,
        Attribute::Nps,
        Attribute::Nmps,
        Attribute::Nsfps,
        Attribute::Nspps,
        Attribute::Naipmi,
        Attribute::Nri,
        Attribute::Nws,
        Attribute::Nrai,
        Attribute::Stbrmi,
        Attribute::Smnmie,
        Attribute::Icmp,
        Attribute::L1mp,
        Attribute::L2mp,
        Attribute::Nipl1m,
        Attribute::Agml,
        Attribute::Gnmie,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn symbol(self) -> &'static str {
        use Attribute::*;
        match self {
            Atbwb => "ATBWB",
            Atbwf => "ATBWF",
            Tbw => "TBW",
            Rlmi => "RLMI",
            Rgmi => "RGMI",
            Rstcmi => "RSTCMI",
            Rsfi => "RSFI",
            Rspi => "RSPI",
            Ntf => "NTF",
            Niw => "NIW",
            Nsw => "NSW",
            Nfsfi => "NFSFI",
            Nfmi => "NFMI",
            Nrspi => "NRSPI",
            Nrgmi => "NRGMI",
            Nrstcmi => "NRSTCMI",
            Nrsfi => "NRSFI",
            Nwi => "NWI",
            Nps => "NPS",
            Nmps => "NMPS",
            Nsfps => "NSFPS",
            Nspps => "NSPPS",
            Naipmi => "NAIPMI",
            Nri => "NRI",
            Nws => "NWS",
            Nrai => "NRAI",
            Stbrmi => "STBRMI",
            Smnmie => "SMNMIE",
            Icmp => "ICMP",
            L1mp => "L1MP",
            L2mp => "L2MP",
            Nipl1m => "NIPL1M",
            Agml => "AGML",
            Gnmie => "GNMIE",
        }
    }

    pub fn is_boolean(self) -> bool {
        self.index() <= Attribute::Ntf.index()
    }

    /// Upper end of the value range; every range starts at 0.
    pub fn max_value(self) -> f64 {
        use Attribute::*;
        match self {
            a if a.is_boolean() => 1.0,
            Smnmie => 40.0,
            Icmp | L1mp | L2mp | Nipl1m => 100.0,
            Agml => 800.0,
            Gnmie => 600.0,
            _ => 24.0,
        }
    }

    /// Percentage and latency attributes use decreasing widths, counts use
    /// increasing widths.
    pub fn direction(self) -> Direction {
        use Attribute::*;
        match self {
            Icmp | L1mp | L2mp | Agml | Nipl1m => Direction::DecreasingWidths,
            _ => Direction::IncreasingWidths,
        }
    }

    /// Attributes shared by all SMs.
    pub fn is_global(self) -> bool {
        matches!(self, Attribute::Agml | Attribute::Gnmie | Attribute::L2mp)
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Attribute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        Attribute::ALL
            .iter()
            .copied()
            .find(|a| a.symbol() == upper)
            .ok_or_else(|| format!("unknown attribute `{s}`"))
    }
}

impl TryFrom<String> for Attribute {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Attribute> for String {
    fn from(a: Attribute) -> String {
        a.symbol().to_string()
    }
}

/// Raw attribute values, clamped to their ranges on write.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateAttributes {
    values: [f64; NUM_ATTRIBUTES],
}

impl Default for StateAttributes {
    fn default() -> Self {
        StateAttributes {
            values: [0.0; NUM_ATTRIBUTES],
        }
    }
}

impl StateAttributes {
    pub fn get(&self, a: Attribute) -> f64 {
        self.values[a.index()]
    }

    /// Stores `value` clamped to `[0, max]`; NaN reads as 0 and +inf as max.
    pub fn set(&mut self, a: Attribute, value: f64) {
        self.values[a.index()] = clamp(a, value);
    }
}

pub fn clamp(a: Attribute, value: f64) -> f64 {
    if value.is_nan() {
        0.0
    } else {
        value.clamp(0.0, a.max_value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thirty_four_distinct_symbols() {
        let mut s: Vec<_> = Attribute::ALL.iter().map(|a| a.symbol()).collect();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), NUM_ATTRIBUTES);
        for (i, a) in Attribute::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(a.symbol().parse::<Attribute>().unwrap(), *a);
        }
        assert_eq!(Attribute::ALL.iter().filter(|a| a.is_boolean()).count(), 9);
    }

    #[test]
    fn set_clamps() {
        let mut s = StateAttributes::default();
        s.set(Attribute::Agml, f64::INFINITY);
        assert_eq!(s.get(Attribute::Agml), 800.0);
        s.set(Attribute::Nri, -3.0);
        assert_eq!(s.get(Attribute::Nri), 0.0);
        s.set(Attribute::L1mp, f64::NAN);
        assert_eq!(s.get(Attribute::L1mp), 0.0);
    }
}
