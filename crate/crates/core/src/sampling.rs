//! Constrained value draws. Every function takes the variable's own
//! substream so callers never share generator state between variables.

use std::collections::BTreeSet;
use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dictionary::WordList;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Alphabet for generated passwords: shell-safe, no quoting needed.
pub const PASSWORD_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

/// Number of values in `[min, max]` that are not excluded. Exclusions
/// outside the range are ignored.
pub fn allowed_count(min: i64, max: i64, exclusions: &BTreeSet<i64>) -> u128 {
    if min > max {
        return 0;
    }
    let span = (max as i128 - min as i128 + 1) as u128;
    let excluded = exclusions.range(min..=max).count() as u128;
    span - excluded
}

pub fn sample_in_range(
    rng: &mut SplitMix64,
    min: i64,
    max: i64,
    exclusions: &BTreeSet<i64>,
) -> Result<i64> {
    if allowed_count(min, max, exclusions) == 0 {
        return Err(Error::config(format!(
            "no allowed values in [{min}, {max}] after exclusions"
        )));
    }
    let span = (max as i128 - min as i128 + 1) as u128;
    // A span of exactly 2^64 truncates to 0, which `below` treats as the full range.
    let bound = span as u64;
    loop {
        let offset = rng.below(bound);
        let value = (min as i128 + offset as i128) as i64;
        if !exclusions.contains(&value) {
            return Ok(value);
        }
    }
}

pub fn pick_from_dictionary<'a>(rng: &mut SplitMix64, dictionary: &'a WordList) -> Result<&'a str> {
    if dictionary.is_empty() {
        return Err(Error::config(format!(
            "word list `{}` is empty",
            dictionary.name
        )));
    }
    Ok(&dictionary.words()[rng.below_usize(dictionary.len())])
}

/// `word_count` independent draws joined by spaces, first letter upper-cased,
/// terminated by a period.
pub fn compose_sentence(
    rng: &mut SplitMix64,
    words: &WordList,
    word_count: usize,
) -> Result<String> {
    if word_count == 0 {
        return Err(Error::validation("sentence word_count must be at least 1"));
    }
    let mut drawn = Vec::with_capacity(word_count);
    for _ in 0..word_count {
        drawn.push(pick_from_dictionary(rng, words)?);
    }
    let joined = drawn.join(" ");
    let mut chars = joined.chars();
    let mut sentence: String = match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    };
    sentence.push('.');
    Ok(sentence)
}

pub fn password_text(rng: &mut SplitMix64, length: usize) -> Result<String> {
    if length == 0 {
        return Err(Error::validation("password length must be at least 1"));
    }
    Ok((0..length)
        .map(|_| PASSWORD_ALPHABET[rng.below_usize(PASSWORD_ALPHABET.len())] as char)
        .collect())
}

/// IPv4 network given as `a.b.c.d/len`. Host bits in the address are masked off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subnet {
    network: u32,
    prefix: u8,
}

impl Subnet {
    pub fn new(addr: Ipv4Addr, prefix: u8) -> Result<Self> {
        if prefix > 32 {
            return Err(Error::config(format!("prefix length {prefix} exceeds 32")));
        }
        Ok(Self {
            network: u32::from(addr) & Self::mask(prefix),
            prefix,
        })
    }

    fn mask(prefix: u8) -> u32 {
        if prefix == 0 {
            0
        } else {
            u32::MAX << (32 - prefix)
        }
    }

    pub fn prefix(&self) -> u8 {
        self.prefix
    }

    pub fn network(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.network)
    }

    /// Usable hosts: everything but the network and broadcast addresses.
    pub fn host_count(&self) -> u64 {
        (1u64 << (32 - self.prefix as u32)).saturating_sub(2)
    }

    pub fn contains_host(&self, addr: Ipv4Addr) -> bool {
        let raw = u32::from(addr);
        let offset = raw.wrapping_sub(self.network) as u64;
        raw & Self::mask(self.prefix) == self.network && offset >= 1 && offset <= self.host_count()
    }
}

impl FromStr for Subnet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (addr, prefix) = s
            .split_once('/')
            .ok_or_else(|| Error::config(format!("subnet `{s}` is not in a.b.c.d/len form")))?;
        let addr: Ipv4Addr = addr
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("subnet `{s}` has an invalid address")))?;
        let prefix: u8 = prefix
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("subnet `{s}` has an invalid prefix length")))?;
        Subnet::new(addr, prefix)
    }
}

impl fmt::Display for Subnet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.network(), self.prefix)
    }
}

impl Serialize for Subnet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Subnet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

pub fn ipv4_in_subnet(rng: &mut SplitMix64, subnet: &Subnet) -> Result<Ipv4Addr> {
    if subnet.prefix > 30 {
        return Err(Error::config(format!(
            "subnet {subnet} has no usable host range (prefix must be at most 30)"
        )));
    }
    let offset = 1 + rng.below(subnet.host_count()) as u32;
    Ok(Ipv4Addr::from(subnet.network + offset))
}
